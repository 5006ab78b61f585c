use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qproc_core::density::{kernel_by_name, linspace, nn_density, nn_radius};
use qproc_core::distributions::model_by_name;
use qproc_core::empirical::Sample;
use qproc_core::harness::bandwidth::{BandwidthPlan, BandwidthRule, DEFAULT_GRID_RATIO};
use qproc_core::harness::report::{render_report, ReportFormat};
use qproc_core::harness::{check_hypotheses, run_experiment, ExperimentConfig};
use qproc_core::spacings::{
    delta_per_k, dn_per_k, order_for_bandwidth, spacing_statistic, SpacingTheorem,
};
use qproc_core::strassen::{distance_to_s0, GridFunction};
use qproc_core::Error;

#[derive(Parser)]
#[command(
    name = "qproc",
    version,
    about = "Increment statistics of empirical and quantile processes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run(RunArgs),
    /// Evaluate the bandwidth hypotheses for a plan.
    CheckBandwidths(CheckArgs),
    /// Sup-norm distance from a two-column grid function to the Strassen ball.
    StrassenDist(StrassenArgs),
    /// Per-order maxima of k-spacing deviations.
    Spacings(SpacingsArgs),
    /// Nearest-neighbor density estimates on an x-grid.
    NnDensity(NnArgs),
    /// Draw a sample and save it in the plain-text format.
    Sample(SampleArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Config file of `key = value` lines.
    config: PathBuf,
    /// Override `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Override `replicates`.
    #[arg(long)]
    reps: Option<usize>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `csv` or `json`.
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Args)]
struct CheckArgs {
    /// Lower bandwidth rule, e.g. `n^-0.6`.
    #[arg(long, allow_hyphen_values = true)]
    h_lo: String,
    /// Upper bandwidth rule, e.g. `n^-0.4`.
    #[arg(long, allow_hyphen_values = true)]
    h_hi: String,
    /// Comma-separated increasing sample sizes.
    #[arg(long, default_value = "10000,100000,1000000")]
    n_list: String,
    #[arg(long, default_value_t = DEFAULT_GRID_RATIO)]
    grid_ratio: f64,
    /// `text` or `json`.
    #[arg(long, default_value = "text")]
    format: String,
}

#[derive(Args)]
struct StrassenArgs {
    /// Two-column text file: node, value.
    input: PathBuf,
    /// Also write the witness path as two-column text.
    #[arg(long)]
    witness: Option<PathBuf>,
}

#[derive(Args)]
struct SpacingsArgs {
    /// Sample file.
    sample: PathBuf,
    /// Report only this order.
    #[arg(long, conflicts_with_all = ["d", "h"])]
    k: Option<usize>,
    /// Report orders 1..=d.
    #[arg(long, conflicts_with = "h")]
    d: Option<usize>,
    /// Report orders 1..=⌈nh⌉ and print the normalized statistic.
    #[arg(long)]
    h: Option<f64>,
    /// Weight by this model's density over the restricted index range.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct NnArgs {
    /// Sample file; otherwise draw from --model with --n and --seed.
    #[arg(long)]
    sample: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "uniform")]
    kernel: String,
    /// Number of neighbors; comma-separated values give one block per k.
    #[arg(long)]
    k: String,
    /// `lo:hi:count`.
    #[arg(long, allow_hyphen_values = true)]
    x_grid: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    model: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn config_err(e: impl std::fmt::Display) -> Failure {
    Failure::Config(e.to_string())
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => {
            fs::write(p, text).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_sample(path: &Path) -> CliResult<Sample> {
    Sample::load(path).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

fn parse_counts(list: &str) -> CliResult<Vec<usize>> {
    list.split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<usize>()
                .ok()
                .or_else(|| {
                    s.parse::<f64>()
                        .ok()
                        .filter(|x| x.fract() == 0.0 && *x >= 0.0)
                        .map(|x| x as usize)
                })
                .ok_or_else(|| config_err(format!("bad sample size {s:?}")))
        })
        .collect()
}

fn run(args: RunArgs) -> CliResult<()> {
    let format: ReportFormat = args.format.parse()?;
    let mut cfg = ExperimentConfig::load(&args.config)
        .map_err(|e| config_err(format!("{}: {e}", args.config.display())))?;
    if let Some(s) = args.seed {
        cfg.master_seed = s;
    }
    if let Some(r) = args.reps {
        cfg.replicates = r;
    }
    cfg.validate()?;
    let report = run_experiment(&cfg)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for s in &report.summaries {
        eprintln!(
            "{} n={} replicates={} median={:.6} min={:.6} max={:.6}",
            s.experiment, s.n, s.replicates, s.median, s.min, s.max
        );
    }
    emit(args.out.as_deref(), &render_report(&report, format)?)
}

fn check_bandwidths(args: CheckArgs) -> CliResult<()> {
    let plan = BandwidthPlan::new(
        args.h_lo.parse()?,
        args.h_hi.parse::<BandwidthRule>()?,
        args.grid_ratio,
    )?;
    let n_list = parse_counts(&args.n_list)?;
    let rep = check_hypotheses(&plan, &n_list)?;
    match args.format.as_str() {
        "json" => println!(
            "{}",
            serde_json::to_string_pretty(&rep).map_err(|e| Failure::Runtime(e.to_string()))?
        ),
        "text" => {
            println!("plan: {}", plan.description);
            for c in &rep.checks {
                println!(
                    "{:<26} {:<8} trend={:<10} last={:.6e}  [{}]",
                    c.name,
                    if c.satisfied { "ok" } else { "FAILING" },
                    format!("{:?}", c.trend).to_lowercase(),
                    c.last,
                    c.expression
                );
            }
            println!("H.4 verdict: {:?}", rep.h4);
            if let Some(p) = rep.power_law_h4ii {
                println!("power-law criterion s <= r < (1+s)/2: {p}");
            }
            for w in &rep.warnings {
                println!("warning: {w}");
            }
        }
        other => return Err(config_err(format!("unknown format {other:?}"))),
    }
    Ok(())
}

fn read_grid_function(path: &Path) -> CliResult<GridFunction> {
    let text =
        fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let mut nodes = Vec::new();
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        let parsed: Option<(f64, f64)> = match cols.as_slice() {
            [a, b] => a.parse().ok().zip(b.parse().ok()),
            _ => None,
        };
        let (s, v) =
            parsed.ok_or_else(|| config_err(format!("line {}: expected `node value`", i + 1)))?;
        nodes.push(s);
        values.push(v);
    }
    GridFunction::new(nodes, values).map_err(config_err)
}

fn strassen_dist(args: StrassenArgs) -> CliResult<()> {
    let phi = read_grid_function(&args.input)?;
    let res = distance_to_s0(&phi)?;
    println!("distance = {:.9}", res.distance);
    println!("witness_energy = {:.9}", res.energy_of_witness);
    println!("iterations = {}", res.iterations);
    if let Some(p) = args.witness {
        let mut out = String::new();
        for (s, v) in res.witness.nodes().iter().zip(res.witness.values()) {
            let _ = writeln!(out, "{s} {v}");
        }
        emit(Some(&p), &out)?;
    }
    Ok(())
}

fn spacings(args: SpacingsArgs) -> CliResult<()> {
    let sample = load_sample(&args.sample)?;
    let n = sample.n();
    let model = args
        .model
        .as_deref()
        .map(|m| model_by_name(m).ok_or_else(|| config_err(format!("unknown model {m:?}"))))
        .transpose()?;
    let (d, only) = match (args.k, args.d, args.h) {
        (Some(k), _, _) => (k, Some(k)),
        (_, Some(d), _) => (d, None),
        (_, _, Some(h)) => (order_for_bandwidth(n, h)?, None),
        _ => return Err(config_err("one of --k, --d, --h is required")),
    };
    let per_k = match &model {
        Some(m) => dn_per_k(&sample, m, d)?,
        None => delta_per_k(&sample, d)?,
    };
    let mut out = String::from("k,i_argmax,value\n");
    for m in per_k.iter().filter(|m| only.is_none_or(|k| m.k == k)) {
        let _ = writeln!(out, "{},{},{:.16e}", m.k, m.i_argmax, m.value);
    }
    emit(args.out.as_deref(), &out)?;
    if let Some(h) = args.h {
        let which = if model.is_some() {
            SpacingTheorem::Thm32
        } else {
            SpacingTheorem::Thm31
        };
        let stat = spacing_statistic(&sample, model.as_ref(), h, which)?;
        eprintln!("statistic = {stat:.9}");
    }
    Ok(())
}

fn nn_density_cmd(args: NnArgs) -> CliResult<()> {
    let kernel = kernel_by_name(&args.kernel)
        .ok_or_else(|| config_err(format!("unknown kernel {:?}", args.kernel)))?;
    let model_name = args.model.clone();
    let sample = match (&args.sample, &model_name, args.n) {
        (Some(p), _, _) => load_sample(p)?,
        (None, Some(m), Some(n)) => {
            let model =
                model_by_name(m).ok_or_else(|| config_err(format!("unknown model {m:?}")))?;
            Sample::draw(&model, n, args.seed)?
        }
        _ => return Err(config_err("give --sample, or --model with --n")),
    };
    let model = model_name
        .as_deref()
        .or(sample.source_model())
        .and_then(model_by_name);
    let parts: Vec<&str> = args.x_grid.split(':').collect();
    let (lo, hi, count) = match parts.as_slice() {
        [a, b, c] => match (a.parse::<f64>(), b.parse::<f64>(), c.parse::<usize>()) {
            (Ok(a), Ok(b), Ok(c)) if a <= b && c >= 1 => (a, b, c),
            _ => return Err(config_err(format!("bad --x-grid {:?}", args.x_grid))),
        },
        _ => return Err(config_err("--x-grid must be lo:hi:count")),
    };
    let ks: Vec<f64> = args
        .k
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| config_err(format!("bad k {s:?}")))
        })
        .collect::<CliResult<_>>()?;
    let mut out = String::from("k,x,R_k,fhat,f\n");
    for &k in &ks {
        for x in linspace(lo, hi, count) {
            let r = nn_radius(&sample, k, x)?;
            let fhat = nn_density(&sample, &kernel, k, x)?;
            let f = model
                .as_ref()
                .map(|m| format!("{:.16e}", m.density(x)))
                .unwrap_or_default();
            let _ = writeln!(out, "{k},{x:.16e},{r:.16e},{fhat:.16e},{f}");
        }
    }
    emit(args.out.as_deref(), &out)
}

fn sample_cmd(args: SampleArgs) -> CliResult<()> {
    let model = model_by_name(&args.model)
        .ok_or_else(|| config_err(format!("unknown model {:?}", args.model)))?;
    if args.n == 0 {
        return Err(config_err("--n must be positive"));
    }
    Sample::draw(&model, args.n, args.seed)?.save(&args.out)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::CheckBandwidths(a) => check_bandwidths(a),
        Command::StrassenDist(a) => strassen_dist(a),
        Command::Spacings(a) => spacings(a),
        Command::NnDensity(a) => nn_density_cmd(a),
        Command::Sample(a) => sample_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("qproc: config error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("qproc: {m}");
            ExitCode::from(3)
        }
    }
}
