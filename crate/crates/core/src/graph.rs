//! Sparse directed graph storage, edge-list ingestion and node subsets.
//!
//! Edges are stored twice: grouped by source (out-links, used for degrees and
//! transposed products) and grouped by target (in-links, used for `G x`).
//! Both adjacency lists are sorted ascending so every traversal order is fixed.

use std::collections::HashMap;
use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};

/// How node tokens in an edge list are interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeFormat {
    /// Integer ids if every token is an integer, labels if none is; anything else is an error.
    #[default]
    Auto,
    /// Every token is a non-negative integer id; the graph has `max id + 1` nodes.
    Ids,
    /// Every token is an opaque, case-sensitive label.
    Labels,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct NameMap {
    labels: Vec<String>,
    index: HashMap<String, u32>,
}

impl NameMap {
    fn from_labels(labels: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(labels.len());
        for (id, label) in labels.iter().enumerate() {
            if index.insert(label.clone(), id as u32).is_some() {
                return Err(Error::InvalidParameter(format!(
                    "duplicate label {label:?}"
                )));
            }
        }
        Ok(Self { labels, index })
    }
}

/// Immutable sparse adjacency of `n` nodes. An edge `j -> i` means node `j` links to node `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    n: usize,
    out_offsets: Vec<usize>,
    out_targets: Vec<u32>,
    in_offsets: Vec<usize>,
    in_sources: Vec<u32>,
    names: Option<NameMap>,
}

fn build_csr(n: usize, pairs: &[(u32, u32)]) -> (Vec<usize>, Vec<u32>) {
    // `pairs` sorted by (key, value) and deduplicated.
    let mut offsets = vec![0usize; n + 1];
    for &(k, _) in pairs {
        offsets[k as usize + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let values = pairs.iter().map(|&(_, v)| v).collect();
    (offsets, values)
}

impl DirectedGraph {
    /// Builds a graph from `(source, target)` pairs. Duplicates collapse to one edge,
    /// self-loops are kept.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        if n > u32::MAX as usize {
            return Err(Error::InvalidParameter(format!("too many nodes: {n}")));
        }
        let mut pairs = Vec::new();
        for (src, dst) in edges {
            for id in [src, dst] {
                if id >= n {
                    return Err(Error::NodeOutOfRange { id, n });
                }
            }
            pairs.push((src as u32, dst as u32));
        }
        Ok(Self::from_pairs(n, pairs))
    }

    fn from_pairs(n: usize, mut pairs: Vec<(u32, u32)>) -> Self {
        pairs.sort_unstable();
        pairs.dedup();
        let (out_offsets, out_targets) = build_csr(n, &pairs);
        let mut rev: Vec<(u32, u32)> = pairs.iter().map(|&(s, t)| (t, s)).collect();
        rev.sort_unstable();
        let (in_offsets, in_sources) = build_csr(n, &rev);
        Self {
            n,
            out_offsets,
            out_targets,
            in_offsets,
            in_sources,
            names: None,
        }
    }

    /// Attaches node labels; `labels[id]` names node `id`. Labels must be distinct.
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: labels.len(),
            });
        }
        self.names = Some(NameMap::from_labels(labels)?);
        Ok(self)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.out_targets.len()
    }

    pub fn out_degree(&self, node: usize) -> usize {
        self.out_offsets[node + 1] - self.out_offsets[node]
    }

    pub fn in_degree(&self, node: usize) -> usize {
        self.in_offsets[node + 1] - self.in_offsets[node]
    }

    /// Targets of the out-links of `node`, ascending.
    pub fn out_links(&self, node: usize) -> &[u32] {
        &self.out_targets[self.out_offsets[node]..self.out_offsets[node + 1]]
    }

    /// Sources of the in-links of `node`, ascending.
    pub fn in_links(&self, node: usize) -> &[u32] {
        &self.in_sources[self.in_offsets[node]..self.in_offsets[node + 1]]
    }

    pub fn has_edge(&self, src: usize, dst: usize) -> bool {
        self.out_links(src).binary_search(&(dst as u32)).is_ok()
    }

    /// All edges as `(source, target)`, ordered by source then target.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |j| self.out_links(j).iter().map(move |&i| (j, i as usize)))
    }

    pub fn has_labels(&self) -> bool {
        self.names.is_some()
    }

    pub fn label(&self, node: usize) -> Option<&str> {
        self.names.as_ref().map(|m| m.labels[node].as_str())
    }

    /// Label of `node`, or its decimal id when the graph is unlabeled.
    pub fn display_name(&self, node: usize) -> String {
        match self.label(node) {
            Some(l) => l.to_owned(),
            None => node.to_string(),
        }
    }

    pub fn lookup(&self, label: &str) -> Option<usize> {
        self.names
            .as_ref()
            .and_then(|m| m.index.get(label).map(|&id| id as usize))
    }

    /// Resolves a node token: a label for labeled graphs, a decimal id otherwise.
    pub fn resolve(&self, token: &str) -> Result<usize> {
        if self.names.is_some() {
            return self
                .lookup(token)
                .ok_or_else(|| Error::UnknownLabel(token.to_owned()));
        }
        let id: usize = token
            .parse()
            .map_err(|_| Error::UnknownLabel(token.to_owned()))?;
        if id >= self.n {
            return Err(Error::NodeOutOfRange { id, n: self.n });
        }
        Ok(id)
    }

    /// The same network with every link reversed; labels are kept.
    pub fn inverted(&self) -> Self {
        Self {
            n: self.n,
            out_offsets: self.in_offsets.clone(),
            out_targets: self.in_sources.clone(),
            in_offsets: self.out_offsets.clone(),
            in_sources: self.out_targets.clone(),
            names: self.names.clone(),
        }
    }
}

/// Splits a data line into its two node tokens. Tab-separated lines keep inner spaces
/// (labels such as `Barack Obama`); other lines split on whitespace.
fn split_line(line: &str) -> Option<(&str, &str)> {
    if line.contains('\t') {
        let mut parts = line.split('\t').map(str::trim);
        let a = parts.next()?;
        let b = parts.next()?;
        if parts.next().is_some() || a.is_empty() || b.is_empty() {
            return None;
        }
        Some((a, b))
    } else {
        let mut parts = line.split_whitespace();
        let a = parts.next()?;
        let b = parts.next()?;
        if parts.next().is_some() {
            return None;
        }
        Some((a, b))
    }
}

fn is_id(token: &str) -> bool {
    !token.is_empty() && token.bytes().all(|b| b.is_ascii_digit())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Style {
    Ids,
    Labels,
}

/// Parses an edge list: one `src<TAB>dst` (or whitespace separated) pair per line,
/// `#` comments and blank lines ignored.
pub fn load_edge_list<R: BufRead>(reader: R, format: EdgeFormat) -> Result<DirectedGraph> {
    let mut style = match format {
        EdgeFormat::Auto => None,
        EdgeFormat::Ids => Some(Style::Ids),
        EdgeFormat::Labels => Some(Style::Labels),
    };
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    let mut index: HashMap<String, u32> = HashMap::new();
    let mut max_id: Option<u64> = None;

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (a, b) = split_line(trimmed).ok_or_else(|| Error::Parse {
            line: lineno,
            message: format!("expected two node tokens, got {trimmed:?}"),
        })?;
        let line_style = match (is_id(a), is_id(b)) {
            (true, true) => Some(Style::Ids),
            (false, false) => Some(Style::Labels),
            _ => None,
        };
        let current = match format {
            EdgeFormat::Labels => Style::Labels,
            EdgeFormat::Ids if line_style == Some(Style::Ids) => Style::Ids,
            EdgeFormat::Ids => {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected integer ids, got {trimmed:?}"),
                })
            }
            EdgeFormat::Auto => match (style, line_style) {
                (None, Some(s)) => {
                    style = Some(s);
                    s
                }
                (Some(s), Some(l)) if s == l => s,
                _ => {
                    return Err(Error::Format {
                        line: lineno,
                        message: "mixed integer-id and label styles".into(),
                    })
                }
            },
        };
        let pair = match current {
            Style::Ids => {
                let parse = |t: &str| -> Result<u32> {
                    t.parse::<u32>()
                        .ok()
                        .filter(|&v| v < u32::MAX)
                        .ok_or_else(|| Error::Parse {
                            line: lineno,
                            message: format!("node id {t:?} out of range"),
                        })
                };
                let (s, d) = (parse(a)?, parse(b)?);
                let hi = s.max(d) as u64;
                max_id = Some(max_id.map_or(hi, |m| m.max(hi)));
                (s, d)
            }
            Style::Labels => {
                let mut intern = |t: &str| -> u32 {
                    if let Some(&id) = index.get(t) {
                        return id;
                    }
                    let id = labels.len() as u32;
                    labels.push(t.to_owned());
                    index.insert(t.to_owned(), id);
                    id
                };
                let s = intern(a);
                let d = intern(b);
                (s, d)
            }
        };
        pairs.push(pair);
    }

    match style {
        None => Err(Error::EmptyGraph),
        Some(Style::Ids) => {
            let n = max_id.map_or(0, |m| m as usize + 1);
            Ok(DirectedGraph::from_pairs(n, pairs))
        }
        Some(Style::Labels) => {
            let n = labels.len();
            let mut g = DirectedGraph::from_pairs(n, pairs);
            g.names = Some(NameMap { labels, index });
            Ok(g)
        }
    }
}

const CACHE_MAGIC: &[u8; 8] = b"GRMGRAPH";
const CACHE_VERSION: u32 = 1;

impl DirectedGraph {
    /// Writes the binary cache: magic, `u32` version, `u64` node and edge counts, the
    /// `(src, dst)` pairs as `u32` in source order, then an optional label table.
    /// All integers little-endian.
    pub fn write_cache<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(CACHE_MAGIC)?;
        w.write_all(&CACHE_VERSION.to_le_bytes())?;
        w.write_all(&(self.n as u64).to_le_bytes())?;
        w.write_all(&(self.edge_count() as u64).to_le_bytes())?;
        for (s, d) in self.edges() {
            w.write_all(&(s as u32).to_le_bytes())?;
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        match &self.names {
            None => w.write_all(&[0u8])?,
            Some(m) => {
                w.write_all(&[1u8])?;
                for l in &m.labels {
                    w.write_all(&(l.len() as u32).to_le_bytes())?;
                    w.write_all(l.as_bytes())?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_cache<R: Read>(mut r: R) -> Result<Self> {
        fn take<const K: usize, R: Read>(r: &mut R) -> Result<[u8; K]> {
            let mut buf = [0u8; K];
            r.read_exact(&mut buf).map_err(|e| match e.kind() {
                std::io::ErrorKind::UnexpectedEof => Error::Cache("truncated".into()),
                _ => Error::Io(e),
            })?;
            Ok(buf)
        }
        if &take::<8, _>(&mut r)? != CACHE_MAGIC {
            return Err(Error::Cache("bad magic".into()));
        }
        let version = u32::from_le_bytes(take(&mut r)?);
        if version != CACHE_VERSION {
            return Err(Error::Cache(format!("unsupported version {version}")));
        }
        let n = u64::from_le_bytes(take(&mut r)?) as usize;
        let m = u64::from_le_bytes(take(&mut r)?) as usize;
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut pairs = Vec::with_capacity(m.min(1 << 26));
        for _ in 0..m {
            let s = u32::from_le_bytes(take(&mut r)?);
            let d = u32::from_le_bytes(take(&mut r)?);
            if s as usize >= n || d as usize >= n {
                return Err(Error::Cache(format!("edge ({s}, {d}) out of range")));
            }
            pairs.push((s, d));
        }
        let mut g = Self::from_pairs(n, pairs);
        match take::<1, _>(&mut r)?[0] {
            0 => {}
            1 => {
                let mut labels = Vec::with_capacity(n);
                for _ in 0..n {
                    let len = u32::from_le_bytes(take(&mut r)?) as usize;
                    let mut buf = vec![0u8; len];
                    r.read_exact(&mut buf)?;
                    labels.push(
                        String::from_utf8(buf)
                            .map_err(|_| Error::Cache("label not UTF-8".into()))?,
                    );
                }
                g.names = Some(NameMap::from_labels(labels)?);
            }
            t => return Err(Error::Cache(format!("bad label flag {t}"))),
        }
        Ok(g)
    }
}

/// Which block a node belongs to, with its position inside that block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Reduced(u32),
    Scattering(u32),
}

/// Ordered reduced node set (`r`) and its complement, the scattering set (`s`).
///
/// Member order fixes the row/column order of every reduced matrix. The complement is
/// kept in ascending node order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetSpec {
    members: Vec<usize>,
    complement: Vec<usize>,
    slots: Vec<Slot>,
}

impl SubsetSpec {
    pub fn new(members: Vec<usize>, n: usize) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidSubset("subset is empty".into()));
        }
        if members.len() >= n {
            return Err(Error::InvalidSubset(format!(
                "subset of {} nodes leaves no scattering nodes in a graph of {n}",
                members.len()
            )));
        }
        let mut slots = vec![Slot::Scattering(u32::MAX); n];
        let mut seen = vec![false; n];
        for (pos, &m) in members.iter().enumerate() {
            if m >= n {
                return Err(Error::NodeOutOfRange { id: m, n });
            }
            if std::mem::replace(&mut seen[m], true) {
                return Err(Error::InvalidSubset(format!("node {m} listed twice")));
            }
            slots[m] = Slot::Reduced(pos as u32);
        }
        let complement: Vec<usize> = (0..n).filter(|&i| !seen[i]).collect();
        for (pos, &s) in complement.iter().enumerate() {
            slots[s] = Slot::Scattering(pos as u32);
        }
        Ok(Self {
            members,
            complement,
            slots,
        })
    }

    /// Reads one label or id per line, preserving order; blank lines and `#` comments skipped.
    pub fn parse<R: BufRead>(reader: R, graph: &DirectedGraph) -> Result<Self> {
        let mut members = Vec::new();
        for line in reader.lines() {
            let line = line?;
            let token = line.trim();
            if token.is_empty() || token.starts_with('#') {
                continue;
            }
            members.push(graph.resolve(token)?);
        }
        Self::new(members, graph.node_count())
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn complement(&self) -> &[usize] {
        &self.complement
    }

    pub fn reduced_len(&self) -> usize {
        self.members.len()
    }

    pub fn scattering_len(&self) -> usize {
        self.complement.len()
    }

    pub fn node_count(&self) -> usize {
        self.slots.len()
    }

    pub fn slot(&self, node: usize) -> Slot {
        self.slots[node]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<DirectedGraph> {
        load_edge_list(text.as_bytes(), EdgeFormat::Auto)
    }

    #[test]
    fn two_label_cycle() {
        let g = parse("a\tb\nb\ta\n").unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 2);
        assert_eq!((g.out_degree(0), g.out_degree(1)), (1, 1));
        assert_eq!(g.label(0), Some("a"));
        assert_eq!(g.lookup("b"), Some(1));
    }

    #[test]
    fn empty_stream_is_error() {
        assert!(matches!(parse(""), Err(Error::EmptyGraph)));
        assert!(matches!(
            parse("# only a comment\n\n"),
            Err(Error::EmptyGraph)
        ));
    }

    #[test]
    fn duplicate_lines_collapse() {
        let g = parse("0 1\n0 1\n").unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn self_loops_kept() {
        let g = parse("0 0\n0 1\n").unwrap();
        assert_eq!(g.out_degree(0), 2);
        assert!(g.has_edge(0, 0));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        match parse("0 1\n# c\n0 1 2\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mixed_styles_rejected() {
        assert!(matches!(
            parse("0 1\na b\n"),
            Err(Error::Format { line: 2, .. })
        ));
        assert!(matches!(
            parse("a b\nb 3\n"),
            Err(Error::Format { line: 2, .. })
        ));
    }

    #[test]
    fn explicit_label_format_accepts_numeric_labels() {
        let g = load_edge_list("1984\tOrwell\n".as_bytes(), EdgeFormat::Labels).unwrap();
        assert_eq!(g.lookup("1984"), Some(0));
        assert!(matches!(
            load_edge_list("a b\n".as_bytes(), EdgeFormat::Ids),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn tab_lines_keep_spaces_in_labels() {
        let g = parse("Barack Obama\tJoe Biden\n").unwrap();
        assert_eq!(g.lookup("Barack Obama"), Some(0));
        assert_eq!(g.lookup("barack obama"), None);
    }

    #[test]
    fn star_inverts() {
        let g = DirectedGraph::from_edges(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        let inv = g.inverted();
        let edges: Vec<_> = inv.edges().collect();
        assert_eq!(edges, vec![(1, 0), (2, 0), (3, 0)]);
        assert_eq!(inv.out_degree(0), 0);
        assert_eq!(inv.in_degree(0), 3);
    }

    #[test]
    fn two_cycle_is_self_inverse() {
        let g = DirectedGraph::from_edges(2, [(0, 1), (1, 0)]).unwrap();
        assert_eq!(g.inverted(), g);
    }

    #[test]
    fn cache_round_trip() {
        let g = parse("x\ty\ny\tz\nz\tx\nx\tz\n").unwrap();
        let mut buf = Vec::new();
        g.write_cache(&mut buf).unwrap();
        assert_eq!(&buf[..8], b"GRMGRAPH");
        assert_eq!(DirectedGraph::read_cache(buf.as_slice()).unwrap(), g);
        assert!(matches!(
            DirectedGraph::read_cache(&buf[..buf.len() - 3]),
            Err(Error::Cache(_)) | Err(Error::Io(_))
        ));
    }

    #[test]
    fn subset_validation() {
        assert!(SubsetSpec::new(vec![0, 1], 2).is_err());
        assert!(SubsetSpec::new(vec![], 3).is_err());
        assert!(SubsetSpec::new(vec![1, 1], 3).is_err());
        assert!(matches!(
            SubsetSpec::new(vec![5], 3),
            Err(Error::NodeOutOfRange { id: 5, n: 3 })
        ));
        let s = SubsetSpec::new(vec![3, 1], 5).unwrap();
        assert_eq!(s.complement(), &[0, 2, 4]);
        assert_eq!(s.slot(3), Slot::Reduced(0));
        assert_eq!(s.slot(4), Slot::Scattering(2));
    }

    #[test]
    fn subset_parse_resolves_labels_in_order() {
        let g = parse("a\tb\nb\tc\nc\td\n").unwrap();
        let s = SubsetSpec::parse("c\n# skip\n\na\n".as_bytes(), &g).unwrap();
        assert_eq!(s.members(), &[2, 0]);
        assert!(matches!(
            SubsetSpec::parse("zz\n".as_bytes(), &g),
            Err(Error::UnknownLabel(_))
        ));
    }
}
