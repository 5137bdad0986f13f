use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::json;

use prism_core::cfi::{self, Twist};
use prism_core::graph::{make_cycle, make_named, BaseGraph, MatrixView, NamedGraph, WeightedGraph};
use prism_core::iso::{self, EquivarianceConfig, IsoVerdict, RBoundConfig};
use prism_core::prism::{self, CanonCertificate, DEFAULT_PRECISION};
use prism_core::spectral::{eigendecompose, slice_k, KSlice, DEFAULT_TOL};
use prism_core::{wl, Error};

/// Canonical eigenvector certificates, CFI constructions and WL comparisons.
#[derive(Parser)]
#[command(name = "prism", version)]
struct Cli {
    #[command(flatten)]
    config: Config,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Config {
    /// Eigenvalue grouping tolerance.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Decimal digits kept when quantizing eigenvectors (4..=12).
    #[arg(long, global = true, env = "PRISM_PRECISION", default_value_t = DEFAULT_PRECISION)]
    precision: u32,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Canonicalize the eigenvectors of a graph (or a raw matrix).
    Canon(CanonArgs),
    /// Cai-Furer-Immerman constructions.
    Cfi {
        #[command(subcommand)]
        command: CfiCommand,
    },
    /// Compare two graphs with k-dimensional Weisfeiler-Leman.
    Wl(WlArgs),
    /// Decide isomorphism of two graphs from their certificates.
    Iso(IsoArgs),
    /// Relabel-and-re-decompose stability of canonical forms.
    Equivariance(EquivarianceArgs),
    /// Corpus statistics.
    Stats {
        #[command(subcommand)]
        command: StatsCommand,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ViewArg {
    Adj,
    Lap,
    Nlap,
}

impl From<ViewArg> for MatrixView {
    fn from(v: ViewArg) -> Self {
        match v {
            ViewArg::Adj => MatrixView::Adjacency,
            ViewArg::Lap => MatrixView::Laplacian,
            ViewArg::Nlap => MatrixView::NormalizedLaplacian,
        }
    }
}

#[derive(Args)]
struct CanonArgs {
    file: PathBuf,
    #[arg(long, value_enum, default_value = "adj")]
    matrix: ViewArg,
    /// Keep only the first k eigenvectors.
    #[arg(long)]
    k: Option<usize>,
    /// Treat the file as the eigenvector matrix itself.
    #[arg(long)]
    raw_matrix: bool,
    /// Refuse repeated eigenvalues instead of using the hybrid form.
    #[arg(long)]
    strict: bool,
    /// Use the shortcut for injective signatures; fail if it does not apply.
    #[arg(long, conflicts_with = "strict")]
    fast: bool,
    /// Also write the eigendecomposition as JSON.
    #[arg(long)]
    dump_eig: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CfiCommand {
    /// CFI graph as graph JSON.
    Gen(BaseTwist),
    /// Integral encoding as CSV.
    Encode(BaseTwist),
    /// The multigraph pair A0/A1 plus sidecar, written into `--out` (a directory).
    Pair(BaseOnly),
    /// Spectrum of the even CFI graph against the base spectrum.
    Spectrum(BaseOnly),
}

#[derive(Args)]
struct BaseTwist {
    /// c<N>, k4, petersen, cube, or a graph file.
    #[arg(long)]
    base: String,
    #[arg(long, default_value = "even")]
    twist: Twist,
}

#[derive(Args)]
struct BaseOnly {
    #[arg(long)]
    base: String,
}

#[derive(Args)]
struct WlArgs {
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Maximum number of tuples per graph.
    #[arg(long, default_value_t = wl::DEFAULT_BUDGET)]
    budget: usize,
    g1: PathBuf,
    g2: PathBuf,
}

#[derive(Args)]
struct IsoArgs {
    #[arg(long, value_enum, default_value = "adj")]
    matrix: ViewArg,
    g1: PathBuf,
    g2: PathBuf,
}

#[derive(Args)]
struct EquivarianceArgs {
    #[arg(long, default_value_t = 200)]
    graphs: usize,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[arg(long, default_value_t = 1e-6)]
    atol: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value = "lap")]
    matrix: ViewArg,
    /// Keep graphs with repeated eigenvalues and use the hybrid form.
    #[arg(long)]
    hybrid: bool,
}

#[derive(Subcommand)]
enum StatsCommand {
    /// Partition sizes and GF(2) row counts over a random corpus.
    Rbound(RBoundArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Corpus {
    Er,
}

#[derive(Args)]
struct RBoundArgs {
    #[arg(long, value_enum, default_value = "er")]
    corpus: Corpus,
    #[arg(long, default_value_t = 500)]
    count: usize,
    #[arg(long, default_value_t = 24)]
    n: usize,
    #[arg(long, default_value_t = 0.3)]
    p: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value = "lap")]
    matrix: ViewArg,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidArgument(_) | Error::Parse(_) | Error::DegenerateInput(_) | Error::ResourceLimit(_) => 2,
            Error::NotApplicable(_) => 3,
            Error::PropertyViolation(_) => 1,
            Error::NumericFailure(_) | Error::Internal(_) => 4,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

type Outcome = Result<u8, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_graph(path: &Path) -> Result<WeightedGraph, Failure> {
    WeightedGraph::parse(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Rows of numbers separated by whitespace or commas, or a JSON array of rows.
fn parse_matrix(text: &str) -> Result<DMatrix<f64>, Failure> {
    let rows: Vec<Vec<f64>> = if text.trim_start().starts_with('[') {
        serde_json::from_str(text).map_err(|e| usage(format!("matrix JSON: {e}")))?
    } else {
        text.lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(|l| {
                l.split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<f64>().map_err(|e| usage(format!("matrix entry {s:?}: {e}"))))
                    .collect()
            })
            .collect::<Result<_, _>>()?
    };
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(usage("matrix must be non-empty and rectangular"));
    }
    Ok(DMatrix::from_row_iterator(rows.len(), ncols, rows.into_iter().flatten()))
}

fn parse_base(spec: &str) -> Result<BaseGraph, Failure> {
    let lower = spec.to_ascii_lowercase();
    if let Ok(named) = lower.parse::<NamedGraph>() {
        return Ok(make_named(named));
    }
    if let Some(n) = lower.strip_prefix('c').and_then(|s| s.parse::<usize>().ok()) {
        return Ok(make_cycle(n)?);
    }
    let path = Path::new(spec);
    if path.exists() {
        return Ok(BaseGraph::from_weighted(&load_graph(path)?)?);
    }
    Err(usage(format!("unknown base graph {spec:?}; expected c<N>, k4, petersen, cube or a file")))
}

fn emit_text(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure { code: 4, message: format!("{}: {e}", path.display()) }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json(out: &Option<PathBuf>, value: &impl Serialize) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure { code: 4, message: e.to_string() })?;
    text.push('\n');
    emit_text(out, &text)
}

fn cmd_canon(cfg: &Config, a: &CanonArgs) -> Outcome {
    let p = cfg.precision;
    let text = read(&a.file)?;
    let slice = if a.raw_matrix {
        KSlice::from_raw(parse_matrix(&text)?)?
    } else {
        let g = WeightedGraph::parse(&text).map_err(|e| usage(format!("{}: {e}", a.file.display())))?;
        let d = eigendecompose(&g.matrix_view(a.matrix.into())?, cfg.tol)?;
        if let Some(path) = &a.dump_eig {
            emit_json(&Some(path.clone()), &d.to_json(p))?;
        }
        match a.k {
            Some(k) => slice_k(&d, k)?,
            None => d.full_slice(),
        }
    };
    let cert: CanonCertificate = if a.fast {
        prism::fast_sign(&slice, p)?
    } else if slice.is_simple() {
        prism::canonicalize(&slice, p)?
    } else if a.strict {
        return Err(Failure { code: 3, message: "spectrum has a repeated eigenvalue (--strict)".into() });
    } else {
        prism::canonicalize_hybrid(&slice, p)?
    };
    emit_json(&cfg.out, &cert.to_json())?;
    Ok(0)
}

fn cmd_cfi(cfg: &Config, c: &CfiCommand) -> Outcome {
    match c {
        CfiCommand::Gen(a) => {
            let g = cfi::build_cfi(&parse_base(&a.base)?, a.twist)?;
            emit_json(&cfg.out, &g.to_weighted().to_json())?;
        }
        CfiCommand::Encode(a) => {
            let g = cfi::build_cfi(&parse_base(&a.base)?, a.twist)?;
            emit_text(&cfg.out, &cfi::integral_encoding(&g).to_csv())?;
        }
        CfiCommand::Pair(a) => {
            let pair = cfi::build_multigraph_pair(&parse_base(&a.base)?)?;
            pair.verify_exact(0)?;
            pair.verify_exact(1)?;
            let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
            fs::create_dir_all(&dir).map_err(|e| Failure { code: 4, message: format!("{}: {e}", dir.display()) })?;
            let files = [dir.join("A0.json"), dir.join("A1.json"), dir.join("sidecar.json")];
            emit_json(&Some(files[0].clone()), &pair.weighted(0)?.to_json())?;
            emit_json(&Some(files[1].clone()), &pair.weighted(1)?.to_json())?;
            emit_json(&Some(files[2].clone()), &pair.sidecar())?;
            let listed: Vec<String> = files.iter().map(|f| f.display().to_string()).collect();
            emit_json(&None, &json!({ "n": pair.graphs[0].n(), "files": listed }))?;
        }
        CfiCommand::Spectrum(a) => {
            let report = cfi::verify_cfi_spectrum(&parse_base(&a.base)?)?;
            emit_json(&cfg.out, &report)?;
        }
    }
    Ok(0)
}

fn cmd_wl(cfg: &Config, a: &WlArgs) -> Outcome {
    let (g1, g2) = (load_graph(&a.g1)?, load_graph(&a.g2)?);
    let v = wl::compare(&g1, &g2, a.k, a.budget)?;
    emit_json(
        &cfg.out,
        &json!({
            "k": v.k,
            "distinguishable": v.distinguishable,
            "rounds": v.rounds,
            "verdict": if v.distinguishable { "distinguishable" } else { "indistinguishable" },
        }),
    )?;
    Ok(v.distinguishable as u8)
}

fn cmd_iso(cfg: &Config, a: &IsoArgs) -> Outcome {
    let (g1, g2) = (load_graph(&a.g1)?, load_graph(&a.g2)?);
    let report = iso::iso_test(&g1, &g2, a.matrix.into(), cfg.tol, cfg.precision)?;
    emit_json(&cfg.out, &report)?;
    Ok(match report.verdict {
        IsoVerdict::Isomorphic => 0,
        IsoVerdict::NonIsomorphic => 1,
        IsoVerdict::Inconclusive => 3,
    })
}

fn cmd_equivariance(cfg: &Config, a: &EquivarianceArgs) -> Outcome {
    if !(a.atol > 0.0) {
        return Err(usage("--atol must be positive"));
    }
    let mut ec = EquivarianceConfig::new(a.graphs, a.trials, a.atol, a.seed);
    ec.tol = cfg.tol;
    ec.precision = cfg.precision;
    ec.view = a.matrix.into();
    ec.hybrid = a.hybrid;
    let report = iso::run_equivariance(&ec)?;
    emit_json(&cfg.out, &json!({ "config": ec, "report": report }))?;
    Ok((report.failures > 0 && !a.hybrid) as u8)
}

fn cmd_stats(cfg: &Config, c: &StatsCommand) -> Outcome {
    let StatsCommand::Rbound(a) = c;
    let Corpus::Er = a.corpus;
    let mut rc = RBoundConfig::new(a.count, a.seed);
    rc.n = a.n;
    rc.edge_probability = a.p;
    rc.tol = cfg.tol;
    rc.precision = cfg.precision;
    rc.view = a.matrix.into();
    let stats = iso::collect_rbound(&rc)?;
    emit_json(&cfg.out, &json!({ "config": rc, "stats": stats }))?;
    Ok(0)
}

fn run(cli: &Cli) -> Outcome {
    let cfg = &cli.config;
    if !(cfg.tol > 0.0) {
        return Err(usage("--tol must be positive"));
    }
    if !(4..=12).contains(&cfg.precision) {
        return Err(usage(format!("--precision must lie in 4..=12, got {}", cfg.precision)));
    }
    match &cli.command {
        Command::Canon(a) => cmd_canon(cfg, a),
        Command::Cfi { command } => cmd_cfi(cfg, command),
        Command::Wl(a) => cmd_wl(cfg, a),
        Command::Iso(a) => cmd_iso(cfg, a),
        Command::Equivariance(a) => cmd_equivariance(cfg, a),
        Command::Stats { command } => cmd_stats(cfg, command),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_formats_agree() {
        let a = parse_matrix("1 2\n3, 4\n").ok().unwrap();
        let b = parse_matrix("[[1, 2], [3, 4]]").ok().unwrap();
        assert_eq!(a, b);
        assert!(parse_matrix("1 2\n3\n").is_err());
    }

    #[test]
    fn base_names() {
        assert_eq!(parse_base("C3").ok().unwrap().n(), 3);
        assert_eq!(parse_base("petersen").ok().unwrap().n(), 10);
        assert!(parse_base("nope").is_err());
    }

    #[test]
    fn cli_shape() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
