//! `meanwidth`: reproducible tables of polytope width moments, Gaussian
//! extremes, limit-law fits and configuration searches.

mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use meanwidth::conjecture::{interpolation_emax_curve, interpolation_endpoints, optimize_configuration_with, SearchOptions};
use meanwidth::extremes::comparison_report;
use meanwidth::limits::fit_limit;
use meanwidth::monte_carlo::{estimate_moments, McConfig};
use meanwidth::widths::{v1_from_mean_width, width_moment, PolytopeKind, RegularPolytope};
use meanwidth::{MathError, QuadratureConfig};

use table::{Manifest, Table};

const OUT_DIR_ENV: &str = "MEANWIDTH_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "meanwidth", version, about = "Random projection widths of regular polytopes and Gaussian maxima")]
struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    format: Format,

    /// Worker threads (default: all cores); output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output file; relative paths resolve against $MEANWIDTH_OUT_DIR when set.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Record the wall-clock start time in the manifest.
    #[arg(long, global = true)]
    timestamp: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Family {
    Cube,
    SimplexS,
    SimplexT,
    Cross,
}

impl Family {
    fn kind(self) -> PolytopeKind {
        match self {
            Family::Cube => PolytopeKind::Cube,
            Family::SimplexS => PolytopeKind::SimplexS,
            Family::SimplexT => PolytopeKind::SimplexT,
            Family::Cross => PolytopeKind::Crosspolytope,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum RouteArg {
    Closed,
    Quadrature,
    Mc,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Moments E[W^k] of the random width.
    Moments {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<u32>,
        #[arg(long, value_enum)]
        route: RouteArg,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
    },
    /// Expected maxima A_n = E max|η_i| (n terms) against B_2n = E max η_i (2n terms).
    Extremes {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<u64>,
    },
    /// Standardized width sample against its limit law.
    Limits {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long)]
        seed: u64,
    },
    /// Search for unit vectors maximizing E max <η, y_i>.
    Search {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// E max of the interpolated covariance family along a grid of t.
    Interp {
        #[arg(long)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1")]
        grid: Vec<f64>,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long)]
        seed: u64,
    },
}

enum Failure {
    Usage(String),
    Numerical(String),
    Io(String),
}

impl From<MathError> for Failure {
    fn from(e: MathError) -> Self {
        match e {
            MathError::InvalidArgument(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

struct Output {
    manifest: Manifest,
    table: Table,
    finding: bool,
}

fn floats(v: &[f64]) -> serde_json::Value {
    serde_json::Value::Array(
        v.iter()
            .map(|x| serde_json::Number::from_f64(*x).map_or(serde_json::Value::Null, serde_json::Value::Number))
            .collect(),
    )
}

fn cmd_moments(
    family: Family,
    ns: &[usize],
    ks: &[u32],
    route: RouteArg,
    seed: Option<u64>,
    samples: u64,
) -> Result<Output, Failure> {
    let kind = family.kind();
    match (route, kind) {
        (RouteArg::Closed, k) if k != PolytopeKind::Cube => {
            return Err(Failure::Usage("route 'closed' exists only for the cube".into()))
        }
        (RouteArg::Closed, _) if ks.iter().any(|&k| !(1..=4).contains(&k)) => {
            return Err(Failure::Usage("cube closed forms cover k = 1..4; use --route mc".into()))
        }
        (RouteArg::Quadrature, PolytopeKind::Cube) => {
            return Err(Failure::Usage("the cube uses --route closed or --route mc".into()))
        }
        (RouteArg::Mc, _) if seed.is_none() => {
            return Err(Failure::Usage("--route mc requires --seed".into()))
        }
        _ => {}
    }
    if ks.contains(&0) {
        return Err(Failure::Usage("k must be at least 1".into()));
    }
    let mut manifest = Manifest::new("moments")
        .param("family", kind.name())
        .param("n", ns.to_vec())
        .param("k", ks.to_vec())
        .param("route", format!("{route:?}").to_lowercase());
    if route == RouteArg::Mc {
        manifest = manifest.param("samples", samples);
        manifest.seed = seed;
    }
    let qcfg = QuadratureConfig::default();
    let mut table = Table::new(&["family", "n", "k", "route", "value", "error", "v1"]);
    for &n in ns {
        let p = RegularPolytope::new(kind, n)?;
        let estimates = match route {
            RouteArg::Mc => estimate_moments(p, ks, &McConfig::new(seed.unwrap_or_default(), samples))?,
            _ => ks.iter().map(|&k| width_moment(p, k, &qcfg)).collect::<Result<Vec<_>, _>>()?,
        };
        for m in estimates {
            let v1 = if m.k == 1 {
                Some(v1_from_mean_width(p.ambient_dim(), m.value)?)
            } else {
                None
            };
            table.push(vec![
                kind.name().into(),
                n.into(),
                m.k.into(),
                m.route.name().into(),
                m.value.into(),
                m.error.into(),
                v1.into(),
            ]);
        }
    }
    Ok(Output {
        manifest,
        table,
        finding: false,
    })
}

fn cmd_extremes(ns: &[u64]) -> Result<Output, Failure> {
    if ns.contains(&0) {
        return Err(Failure::Usage("n must be at least 1".into()));
    }
    let manifest = Manifest::new("extremes").param("n", ns.to_vec());
    let cfg = QuadratureConfig::default();
    let mut table = Table::new(&[
        "n",
        "a_n",
        "b_2n",
        "ratio",
        "slepian_ok",
        "upper_ok",
        "upper_tight",
        "gap_normalized",
        "difference",
        "slack",
    ]);
    for &n in ns {
        let r = comparison_report(n, &cfg)?;
        table.push(vec![
            n.into(),
            r.a_n.into(),
            r.b_2n.into(),
            r.ratio.into(),
            r.slepian_ok.into(),
            r.upper_ok.into(),
            r.upper_is_tight().into(),
            r.gap_normalized.into(),
            r.difference.into(),
            r.slack.into(),
        ]);
    }
    Ok(Output {
        manifest,
        table,
        finding: false,
    })
}

fn cmd_limits(family: Family, n: usize, samples: u64, seed: u64) -> Result<Output, Failure> {
    let kind = family.kind();
    let p = RegularPolytope::new(kind, n)?;
    let mut manifest = Manifest::new("limits")
        .param("family", kind.name())
        .param("n", n)
        .param("samples", samples);
    manifest.seed = Some(seed);
    let fit = fit_limit(p, &McConfig::new(seed, samples))?;
    let mut table = Table::new(&["family", "n", "samples", "law", "ks_distance", "mean", "variance"]);
    table.push(vec![
        kind.name().into(),
        n.into(),
        fit.sample_size.into(),
        fit.law.name().into(),
        fit.ks_distance.into(),
        fit.mean.into(),
        fit.variance.into(),
    ]);
    Ok(Output {
        manifest,
        table,
        finding: false,
    })
}

fn cmd_search(n: usize, restarts: usize, samples: u64, seed: u64, iterations: Option<usize>) -> Result<Output, Failure> {
    if restarts == 0 {
        return Err(Failure::Usage("--restarts must be at least 1".into()));
    }
    let mut opts = SearchOptions::default();
    if let Some(it) = iterations {
        opts.iterations = it;
    }
    let mut manifest = Manifest::new("search")
        .param("n", n)
        .param("restarts", restarts)
        .param("samples", samples)
        .param("iterations", opts.iterations)
        .param("eval_samples", opts.eval_samples);
    manifest.seed = Some(seed);
    let r = optimize_configuration_with(n, restarts, &McConfig::new(seed, samples), &opts)?;
    let converged = r.restarts.iter().filter(|x| x.converged).count();
    let mut off: Vec<f64> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            off.push(r.best_gram.matrix()[(i, j)]);
        }
    }
    manifest = manifest.param("best_gram_upper", floats(&off));
    let mut table = Table::new(&[
        "n",
        "restarts",
        "best_value",
        "best_stderr",
        "regular_value",
        "gap",
        "gap_stderr_units",
        "finding",
        "converged_restarts",
        "min_eigenvalue",
    ]);
    table.push(vec![
        n.into(),
        r.restarts_used.into(),
        r.best_value.into(),
        r.best_stderr.into(),
        r.regular_value.into(),
        r.gap.into(),
        r.gap_in_stderr().into(),
        r.is_finding().into(),
        converged.into(),
        r.best_gram.min_eigenvalue().into(),
    ]);
    Ok(Output {
        manifest,
        table,
        finding: r.is_finding(),
    })
}

fn cmd_interp(n: usize, grid: &[f64], samples: u64, seed: u64) -> Result<Output, Failure> {
    let mut manifest = Manifest::new("interp")
        .param("n", n)
        .param("grid", floats(grid))
        .param("samples", samples);
    manifest.seed = Some(seed);
    let curve = interpolation_emax_curve(n, grid, &McConfig::new(seed, samples))?;
    let (at0, at1) = interpolation_endpoints(n, &QuadratureConfig::default())?;
    let mut table = Table::new(&["t", "value", "stderr", "step", "step_stderr", "reference"]);
    for p in curve {
        let reference = if p.t == 0.0 {
            Some(at0.value)
        } else if p.t == 1.0 {
            Some(at1.value)
        } else {
            None
        };
        table.push(vec![
            p.t.into(),
            p.value.into(),
            p.stderr.into(),
            p.step_from_previous.map(|s| s.value).into(),
            p.step_from_previous.map(|s| s.error).into(),
            reference.into(),
        ]);
    }
    Ok(Output {
        manifest,
        table,
        finding: false,
    })
}

fn run(cli: &Cli) -> Result<Output, Failure> {
    let mut out = match &cli.command {
        Command::Moments {
            family,
            n,
            k,
            route,
            seed,
            samples,
        } => cmd_moments(*family, n, k, *route, *seed, *samples),
        Command::Extremes { n } => cmd_extremes(n),
        Command::Limits {
            family,
            n,
            samples,
            seed,
        } => cmd_limits(*family, *n, *samples, *seed),
        Command::Search {
            n,
            restarts,
            samples,
            seed,
            iterations,
        } => cmd_search(*n, *restarts, *samples, *seed, *iterations),
        Command::Interp { n, grid, samples, seed } => cmd_interp(*n, grid, *samples, *seed),
    }?;
    if cli.timestamp {
        out.manifest.started_at = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs());
    }
    Ok(out)
}

fn output_path(out: &PathBuf) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if out.is_relative() => PathBuf::from(dir).join(out),
        _ => out.clone(),
    }
}

fn emit(cli: &Cli, out: &Output) -> Result<(), Failure> {
    let text = match cli.format {
        Format::Csv => out.table.to_csv(&out.manifest),
        Format::Json => out.table.to_json(&out.manifest),
    };
    match &cli.out {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(p) => {
            let path = output_path(p);
            if let Some(parent) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| Failure::Io(format!("{}: {e}", parent.display())))?;
            }
            std::fs::write(&path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(4);
        }
    }
    let result = run(&cli).and_then(|out| emit(&cli, &out).map(|_| out.finding));
    match result {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            eprintln!("finding: best configuration exceeds the regular simplex value");
            ExitCode::from(3)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nRun with --help for usage.");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(4)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("i/o error: {msg}");
            ExitCode::from(1)
        }
    }
}
