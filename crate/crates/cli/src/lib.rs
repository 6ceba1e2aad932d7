//! Pipeline behind the `grm` binary: load a graph, run one command, write result files.
//!
//! Every output is a pure function of the inputs and the configuration. Floats are
//! printed with 17 significant digits so matrices round-trip exactly.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use grm_core::{
    cheirank, density_grid, kg_rank, local_ranks, pagerank, reduce, top_links_network, DenseMatrix,
    DirectedGraph, Direction, EdgeFormat, Google, LayeredNetwork, PowerOptions, Ranking,
    ReduceOptions, SubsetSpec, DEFAULT_ALPHA,
};
use serde::Serialize;

const CACHE_MAGIC: &[u8] = b"GRMGRAPH";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error(transparent)]
    Core(#[from] grm_core::Error),
    #[error("cannot start worker threads: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    /// 1 for numerical failures, 2 for bad input or I/O.
    pub fn exit_code(&self) -> i32 {
        use grm_core::Error as E;
        match self {
            CliError::Core(
                E::NotConverged { .. }
                | E::SeriesNotConverged { .. }
                | E::Singular { .. }
                | E::TooLarge { .. }
                | E::InvalidParameter(_),
            ) => 1,
            CliError::Pool(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Which reduced matrix the subnetwork is read from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
pub enum MatrixChoice {
    #[value(name = "GR")]
    #[serde(rename = "GR")]
    Gr,
    #[value(name = "Gqr")]
    #[serde(rename = "Gqr")]
    Gqr,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub format: EdgeFormat,
    pub alpha: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub subset: Option<PathBuf>,
    pub out: PathBuf,
    pub grid: usize,
    pub k: usize,
    pub levels: usize,
    pub direction: Direction,
    pub matrix: MatrixChoice,
    /// Work on the inverted graph (`G*` and `G_R*`).
    pub invert: bool,
    /// Worker threads for the reduction; 0 means one per core.
    pub threads: usize,
    pub primaries: Option<PathBuf>,
    /// Take the subnetwork matrix from a CSV file instead of reducing a graph.
    pub matrix_file: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: None,
            format: EdgeFormat::Auto,
            alpha: DEFAULT_ALPHA,
            tol: 1e-12,
            max_iter: 10_000,
            subset: None,
            out: PathBuf::from("."),
            grid: 100,
            k: 4,
            levels: 2,
            direction: Direction::Friends,
            matrix: MatrixChoice::Gr,
            invert: false,
            threads: 0,
            primaries: None,
            matrix_file: None,
        }
    }
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CliError::Usage(format!(
                "--alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if !(self.tol > 0.0) {
            return Err(CliError::Usage(format!(
                "--tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(CliError::Usage("--max-iter must be at least 1".into()));
        }
        if self.grid == 0 {
            return Err(CliError::Usage("--grid must be at least 1".into()));
        }
        if self.k == 0 {
            return Err(CliError::Usage("--topk must be at least 1".into()));
        }
        Ok(())
    }

    fn power(&self) -> PowerOptions<f64> {
        PowerOptions::new(self.tol, self.max_iter)
    }

    fn reduce_options(&self) -> ReduceOptions<f64> {
        ReduceOptions {
            eigen: self.power(),
            ..ReduceOptions::default()
        }
    }

    fn require<'a>(&self, path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
        path.as_deref()
            .ok_or_else(|| CliError::Usage(format!("{flag} is required for this command")))
    }

    fn out_file(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Rank,
    Reduce,
    Density,
    Subnet,
}

/// Runs `command` on a thread pool sized by `config.threads`.
pub fn execute(command: Command, config: &RunConfig) -> Result<()> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()?;
    pool.install(|| match command {
        Command::Rank => cmd_rank(config),
        Command::Reduce => cmd_reduce(config),
        Command::Density => cmd_density(config),
        Command::Subnet => cmd_subnet(config),
    })
}

/// Reads an edge list, or a binary cache written by [`write_graph_cache`].
pub fn load_graph(path: &Path, format: EdgeFormat) -> Result<DirectedGraph> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = BufReader::new(file);
    let head = reader.fill_buf().map_err(io_err(path))?;
    if head.starts_with(CACHE_MAGIC) {
        return Ok(DirectedGraph::read_cache(reader)?);
    }
    Ok(grm_core::load_edge_list(reader, format)?)
}

pub fn write_graph_cache(graph: &DirectedGraph, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    graph.write_cache(&mut w)?;
    w.flush().map_err(io_err(path))
}

fn input_graph(config: &RunConfig) -> Result<DirectedGraph> {
    let path = config.require(&config.input, "an input graph")?;
    let graph = load_graph(path, config.format)?;
    Ok(if config.invert {
        graph.inverted()
    } else {
        graph
    })
}

fn input_subset(config: &RunConfig, graph: &DirectedGraph) -> Result<SubsetSpec> {
    let path = config.require(&config.subset, "--subset")?;
    let file = File::open(path).map_err(io_err(path))?;
    Ok(SubsetSpec::parse(BufReader::new(file), graph)?)
}

fn create_out_dir(config: &RunConfig) -> Result<()> {
    fs::create_dir_all(&config.out).map_err(io_err(&config.out))
}

/// Fixed-width scientific notation with 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_matrix_csv(path: &Path, m: &DenseMatrix<f64>) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|&v| format_float(v)).collect();
        writeln!(w, "{}", line.join(",")).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Parses a headerless numeric CSV; `#` starts a comment line.
pub fn read_matrix_csv(path: &Path) -> Result<DenseMatrix<f64>> {
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|e| grm_core::Error::Parse {
                    line: line + 1,
                    message: format!("{field:?}: {e}"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if row.iter().any(|v| !v.is_finite()) {
            return Err(grm_core::Error::Parse {
                line: line + 1,
                message: "non-finite entry".into(),
            }
            .into());
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(grm_core::Error::Format {
            line: 0,
            message: "empty matrix".into(),
        }
        .into());
    }
    Ok(DenseMatrix::from_rows(&rows))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(|source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_finish(path: &Path, w: csv::Writer<File>) -> Result<()> {
    w.into_inner()
        .map_err(|e| io_err(path)(e.into_error()))?
        .sync_all()
        .map_err(io_err(path))
}

fn write_rank_table(path: &Path, graph: &DirectedGraph, ranking: &Ranking) -> Result<()> {
    let mut w = csv_writer(path)?;
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    w.write_record(["node_id", "label", "probability", "rank"])
        .map_err(csv_err)?;
    for (pos, &node) in ranking.order.iter().enumerate() {
        w.write_record([
            node.to_string(),
            graph.label(node).unwrap_or("").to_string(),
            format_float(ranking.p[node]),
            (pos + 1).to_string(),
        ])
        .map_err(csv_err)?;
    }
    csv_finish(path, w)
}

#[derive(Serialize)]
struct SolverRun {
    iterations: usize,
    residual: f64,
}

impl From<&Ranking> for SolverRun {
    fn from(r: &Ranking) -> Self {
        Self {
            iterations: r.iterations,
            residual: r.residual,
        }
    }
}

#[derive(Serialize)]
struct RunMeta {
    nodes: usize,
    edges: usize,
    alpha: f64,
    tol: f64,
    max_iter: usize,
    inverted: bool,
    pagerank: SolverRun,
    cheirank: SolverRun,
}

fn rank_both(config: &RunConfig, graph: &DirectedGraph) -> Result<(Ranking, Ranking)> {
    let op = Google::new(graph, config.alpha)?;
    let p = pagerank(&op, &config.power())?;
    let ps = cheirank(graph, config.alpha, &config.power())?;
    Ok((p, ps))
}

/// Writes `pagerank.csv`, `cheirank.csv` and `run.json`.
pub fn cmd_rank(config: &RunConfig) -> Result<()> {
    let graph = input_graph(config)?;
    let (p, ps) = rank_both(config, &graph)?;
    create_out_dir(config)?;
    write_rank_table(&config.out_file("pagerank.csv"), &graph, &p)?;
    write_rank_table(&config.out_file("cheirank.csv"), &graph, &ps)?;
    write_json(
        &config.out_file("run.json"),
        &RunMeta {
            nodes: graph.node_count(),
            edges: graph.edge_count(),
            alpha: config.alpha,
            tol: config.tol,
            max_iter: config.max_iter,
            inverted: config.invert,
            pagerank: (&p).into(),
            cheirank: (&ps).into(),
        },
    )
}

#[derive(Serialize)]
struct EigenReport {
    lambda_power: f64,
    iterations_right: usize,
    iterations_left: usize,
    residual_right: f64,
    residual_left: f64,
}

#[derive(Serialize)]
struct SeriesReport {
    terms_min: usize,
    terms_max: usize,
    max_tail: f64,
    max_decay_rate: f64,
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct WeightsReport {
    nodes: usize,
    reduced_nodes: usize,
    alpha: f64,
    inverted: bool,
    W_rr: f64,
    W_pr: f64,
    W_qr: f64,
    W_qrd: f64,
    W_qrnd: f64,
    lambda_c: f64,
    one_minus_lambda_c: f64,
    sigma_P: f64,
    /// `|(1 - lambda_c) - sigma_P| / sigma_P`.
    sigma_P_relative_gap: f64,
    negative_weight: f64,
    eigen: EigenReport,
    series: SeriesReport,
}

/// Everything `cmd_reduce` computes, kept for callers that want the numbers directly.
pub struct ReduceRun {
    pub graph: DirectedGraph,
    pub subset: SubsetSpec,
    pub pagerank: Ranking,
    pub cheirank: Ranking,
    pub decomposition: grm_core::Decomposition,
}

pub fn run_reduction(config: &RunConfig) -> Result<ReduceRun> {
    let graph = input_graph(config)?;
    let subset = input_subset(config, &graph)?;
    let (p, ps) = rank_both(config, &graph)?;
    let op = Google::new(&graph, config.alpha)?;
    let decomposition = reduce(&op, &subset, &config.reduce_options())?;
    Ok(ReduceRun {
        graph,
        subset,
        pagerank: p,
        cheirank: ps,
        decomposition,
    })
}

/// Writes the five reduced matrices, `weights.json` and `ranks.csv`.
pub fn cmd_reduce(config: &RunConfig) -> Result<()> {
    let run = run_reduction(config)?;
    let dec = &run.decomposition;
    create_out_dir(config)?;
    for (name, m) in [
        ("GR.csv", &dec.g_r),
        ("Grr.csv", &dec.g_rr),
        ("Gpr.csv", &dec.g_pr),
        ("Gqr.csv", &dec.g_qr),
        ("Gqrnd.csv", &dec.g_qrnd()),
    ] {
        write_matrix_csv(&config.out_file(name), m)?;
    }

    let sigma_p: f64 = run
        .subset
        .members()
        .iter()
        .map(|&m| run.pagerank.p[m])
        .sum();
    let w = dec.weights;
    let series = SeriesReport {
        terms_min: dec.series.iter().map(|s| s.terms).min().unwrap_or(0),
        terms_max: dec.series.iter().map(|s| s.terms).max().unwrap_or(0),
        max_tail: dec.series.iter().map(|s| s.tail).fold(0.0, f64::max),
        max_decay_rate: dec.series.iter().map(|s| s.decay_rate).fold(0.0, f64::max),
    };
    write_json(
        &config.out_file("weights.json"),
        &WeightsReport {
            nodes: run.graph.node_count(),
            reduced_nodes: run.subset.reduced_len(),
            alpha: config.alpha,
            inverted: config.invert,
            W_rr: w.rr,
            W_pr: w.pr,
            W_qr: w.qr,
            W_qrd: w.qrd,
            W_qrnd: w.qrnd,
            lambda_c: dec.lambda_c(),
            one_minus_lambda_c: dec.one_minus_lambda_c(),
            sigma_P: sigma_p,
            sigma_P_relative_gap: (dec.one_minus_lambda_c() - sigma_p).abs() / sigma_p,
            negative_weight: dec.negative_weight,
            eigen: EigenReport {
                lambda_power: dec.eigen.lambda_power,
                iterations_right: dec.eigen.iterations_r,
                iterations_left: dec.eigen.iterations_l,
                residual_right: dec.eigen.residual_r,
                residual_left: dec.eigen.residual_l,
            },
            series,
        },
    )?;

    let mut table = local_ranks(&run.pagerank, &run.cheirank, &run.subset)?;
    table.k_g = Some(kg_rank(dec, &config.power())?.k_g);
    let path = config.out_file("ranks.csv");
    let mut out = csv_writer(&path)?;
    let csv_err = |source| CliError::Csv {
        path: path.clone(),
        source,
    };
    out.write_record([
        "position", "node_id", "label", "K", "K_star", "K_G", "pagerank", "cheirank",
    ])
    .map_err(csv_err)?;
    let k_g = table.k_g.as_deref().unwrap_or_default();
    for (pos, &node) in table.members.iter().enumerate() {
        out.write_record([
            pos.to_string(),
            node.to_string(),
            run.graph.label(node).unwrap_or("").to_string(),
            table.k[pos].to_string(),
            table.k_star[pos].to_string(),
            k_g[pos].to_string(),
            format_float(table.pagerank[pos]),
            format_float(table.cheirank[pos]),
        ])
        .map_err(csv_err)?;
    }
    csv_finish(&path, out)
}

/// Writes `density.csv` (rows: CheiRank cell, columns: PageRank cell) and
/// `density_axes.csv` with the shared `ln`-scale cell boundaries.
pub fn cmd_density(config: &RunConfig) -> Result<()> {
    let graph = input_graph(config)?;
    let (p, ps) = rank_both(config, &graph)?;
    let grid = density_grid(&p, &ps, config.grid)?;
    create_out_dir(config)?;

    let path = config.out_file("density.csv");
    let mut text = String::new();
    for row in grid.counts.chunks(grid.bins) {
        let cells: Vec<String> = row.iter().map(u64::to_string).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    fs::write(&path, text).map_err(io_err(&path))?;

    let path = config.out_file("density_axes.csv");
    let mut text = String::from("cell,lower_ln,upper_ln\n");
    for (cell, pair) in grid.boundaries.windows(2).enumerate() {
        text.push_str(&format!(
            "{cell},{},{}\n",
            format_float(pair[0]),
            format_float(pair[1])
        ));
    }
    fs::write(&path, text).map_err(io_err(&path))
}

#[derive(Serialize)]
struct SubnetNode {
    position: usize,
    node_id: Option<usize>,
    name: String,
    level: usize,
}

#[derive(Serialize)]
struct SubnetEdge {
    from: usize,
    to: usize,
    level: usize,
    weight: f64,
}

#[derive(Serialize)]
struct SubnetReport {
    matrix: String,
    direction: &'static str,
    k: usize,
    max_levels: usize,
    levels: Vec<Vec<usize>>,
    nodes: Vec<SubnetNode>,
    edges: Vec<SubnetEdge>,
    saturated_at: Option<usize>,
}

fn direction_name(d: Direction) -> &'static str {
    match d {
        Direction::Friends => "friends",
        Direction::Followers => "followers",
    }
}

fn read_tokens(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect())
}

/// Matrix, per-position `(node id, name)`, and a resolver from primary tokens to positions.
struct SubnetInput {
    matrix: DenseMatrix<f64>,
    names: Vec<(Option<usize>, String)>,
    source: String,
}

impl SubnetInput {
    fn position(&self, token: &str) -> Result<usize> {
        if let Some(pos) = self.names.iter().position(|(_, name)| name == token) {
            return Ok(pos);
        }
        Err(grm_core::Error::UnknownLabel(format!("{token} is not in the subset")).into())
    }
}

fn subnet_input(config: &RunConfig) -> Result<SubnetInput> {
    if let Some(path) = &config.matrix_file {
        let matrix = read_matrix_csv(path)?;
        if !matrix.is_square() {
            return Err(grm_core::Error::DimensionMismatch {
                expected: matrix.rows(),
                actual: matrix.cols(),
            }
            .into());
        }
        let names = (0..matrix.rows()).map(|i| (None, i.to_string())).collect();
        return Ok(SubnetInput {
            matrix,
            names,
            source: "file".into(),
        });
    }
    let run = run_reduction(config)?;
    let dec = run.decomposition;
    let (matrix, source) = match config.matrix {
        MatrixChoice::Gr => (dec.g_r, "GR"),
        MatrixChoice::Gqr => (dec.g_qr, "Gqr"),
    };
    let names = run
        .subset
        .members()
        .iter()
        .map(|&node| (Some(node), run.graph.display_name(node)))
        .collect();
    Ok(SubnetInput {
        matrix,
        names,
        source: source.into(),
    })
}

/// Writes `subnet.json` and `subnet.dot` for the strongest-link expansion.
pub fn cmd_subnet(config: &RunConfig) -> Result<()> {
    let input = subnet_input(config)?;
    let primaries = match &config.primaries {
        Some(path) => read_tokens(path)?
            .iter()
            .map(|t| input.position(t))
            .collect::<Result<Vec<_>>>()?,
        None => vec![0],
    };
    let net = top_links_network(
        &input.matrix,
        &primaries,
        config.k,
        config.direction,
        config.levels,
    )?;
    create_out_dir(config)?;
    write_json(
        &config.out_file("subnet.json"),
        &subnet_report(config, &input, &net),
    )?;
    let path = config.out_file("subnet.dot");
    fs::write(&path, subnet_dot(&input, &net)).map_err(io_err(&path))
}

fn subnet_report(
    config: &RunConfig,
    input: &SubnetInput,
    net: &LayeredNetwork<f64>,
) -> SubnetReport {
    let nodes = net
        .levels
        .iter()
        .enumerate()
        .flat_map(|(l, level)| level.iter().map(move |&pos| (l + 1, pos)))
        .map(|(level, pos)| SubnetNode {
            position: pos,
            node_id: input.names[pos].0,
            name: input.names[pos].1.clone(),
            level,
        })
        .collect();
    SubnetReport {
        matrix: input.source.clone(),
        direction: direction_name(config.direction),
        k: config.k,
        max_levels: config.levels,
        levels: net.levels.clone(),
        nodes,
        edges: net
            .edges
            .iter()
            .map(|e| SubnetEdge {
                from: e.from,
                to: e.to,
                level: e.level,
                weight: e.weight,
            })
            .collect(),
        saturated_at: net.saturated_at,
    }
}

fn dot_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn subnet_dot(input: &SubnetInput, net: &LayeredNetwork<f64>) -> String {
    let mut out = String::from("digraph subnet {\n");
    for (l, level) in net.levels.iter().enumerate() {
        out.push_str(&format!("  subgraph level_{} {{\n    rank=same;\n", l + 1));
        for &pos in level {
            out.push_str(&format!(
                "    n{pos} [label={}, level={}];\n",
                dot_quote(&input.names[pos].1),
                l + 1
            ));
        }
        out.push_str("  }\n");
    }
    for e in &net.edges {
        out.push_str(&format!(
            "  n{} -> n{} [level={}, weight_value={}, label=\"{:.3e}\"];\n",
            e.from,
            e.to,
            e.level,
            format_float(e.weight),
            e.weight
        ));
    }
    out.push_str("}\n");
    out
}
