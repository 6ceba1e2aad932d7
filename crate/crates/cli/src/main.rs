use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use grm_cli::{execute, load_graph, write_graph_cache, CliError, Command, MatrixChoice, RunConfig};
use grm_core::{Direction, EdgeFormat};

/// PageRank, CheiRank and reduced Google matrix analysis of directed networks.
#[derive(Parser)]
#[command(name = "grm", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Global PageRank and CheiRank tables.
    Rank(GraphArgs),
    /// Reduced Google matrix of a node subset with its three components.
    Reduce {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        subset: SubsetArgs,
    },
    /// Node counts on a logarithmic (K, K*) grid.
    Density {
        #[command(flatten)]
        graph: GraphArgs,
        /// Cells per axis.
        #[arg(long, default_value_t = 100)]
        grid: usize,
    },
    /// Layered network of the strongest friend or follower links.
    Subnet(SubnetArgs),
    /// Parse an edge list once and store it in the binary graph format.
    Cache {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Auto)]
        format: FormatArg,
    },
}

#[derive(Args)]
struct GraphArgs {
    /// Edge list (`src dst` per line) or binary graph cache.
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Auto)]
    format: FormatArg,
    #[arg(long, default_value_t = 0.85)]
    alpha: f64,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    /// Use the graph with every link reversed.
    #[arg(long)]
    invert: bool,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Args)]
struct SubsetArgs {
    /// One node label or id per line; file order fixes the matrix order.
    #[arg(long)]
    subset: PathBuf,
}

#[derive(Args)]
struct SubnetArgs {
    /// Graph input; omit when --matrix-file is given.
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Auto)]
    format: FormatArg,
    #[arg(long, default_value_t = 0.85)]
    alpha: f64,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    #[arg(long)]
    invert: bool,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long)]
    subset: Option<PathBuf>,
    /// Read the matrix from a CSV file instead of reducing a graph.
    #[arg(long, conflicts_with_all = ["input", "subset"])]
    matrix_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = MatrixChoice::Gr)]
    matrix: MatrixChoice,
    /// Primary nodes, one per line; defaults to the first subset member.
    #[arg(long)]
    primaries: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    topk: usize,
    #[arg(long, default_value_t = 2)]
    levels: usize,
    #[arg(long, value_enum, default_value_t = DirectionArg::Friends)]
    direction: DirectionArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Auto,
    Ids,
    Labels,
}

impl From<FormatArg> for EdgeFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Auto => EdgeFormat::Auto,
            FormatArg::Ids => EdgeFormat::Ids,
            FormatArg::Labels => EdgeFormat::Labels,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    Friends,
    Followers,
}

impl GraphArgs {
    fn config(self) -> RunConfig {
        RunConfig {
            input: Some(self.input),
            format: self.format.into(),
            alpha: self.alpha,
            tol: self.tol,
            max_iter: self.max_iter,
            invert: self.invert,
            out: self.out,
            threads: self.threads,
            ..RunConfig::default()
        }
    }
}

impl SubnetArgs {
    fn config(self) -> RunConfig {
        RunConfig {
            input: self.input,
            format: self.format.into(),
            alpha: self.alpha,
            tol: self.tol,
            max_iter: self.max_iter,
            invert: self.invert,
            out: self.out,
            threads: self.threads,
            subset: self.subset,
            matrix_file: self.matrix_file,
            matrix: self.matrix,
            primaries: self.primaries,
            k: self.topk,
            levels: self.levels,
            direction: match self.direction {
                DirectionArg::Friends => Direction::Friends,
                DirectionArg::Followers => Direction::Followers,
            },
            ..RunConfig::default()
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Cmd::Rank(graph) => execute(Command::Rank, &graph.config()),
        Cmd::Reduce { graph, subset } => {
            let config = RunConfig {
                subset: Some(subset.subset),
                ..graph.config()
            };
            execute(Command::Reduce, &config)
        }
        Cmd::Density { graph, grid } => {
            let config = RunConfig {
                grid,
                ..graph.config()
            };
            execute(Command::Density, &config)
        }
        Cmd::Subnet(args) => execute(Command::Subnet, &args.config()),
        Cmd::Cache {
            input,
            output,
            format,
        } => {
            let graph = load_graph(&input, format.into())?;
            write_graph_cache(&graph, &output)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("grm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
