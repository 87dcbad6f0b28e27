#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use cadlag_localtime::crossing::{discrete_tanaka_residual, j_field, k_field, occupation_local_time, split_kc};
use cadlag_localtime::dc::{builtin_suite, mollify};
use cadlag_localtime::follmer::quadratic_variation;
use cadlag_localtime::lab::{
    lp_distance, q_statistic, run_convergence_experiment, ExperimentConfig, GeneratorSpec,
};
use cadlag_localtime::skorokhod::interval_crossing_local_time;
use cadlag_localtime::{
    DcFunction, FieldKind, FunctionDescriptor, LevelGrid, LocalTimeField, Mollifier, PartitionScheme,
    SampledCadlagPath,
};
use clap::{Args, Parser, Subcommand};

/// Pathwise local times of sampled cadlag paths.
#[derive(Parser)]
#[command(name = "localtime", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a path from a generator spec and write it as CSV.
    Generate {
        #[command(flatten)]
        common: Common,
    },
    /// Quadratic variation along dyadic partitions (full grid by default).
    Qv {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        levels: Vec<u32>,
    },
    /// Local-time fields from one of the three constructions.
    Localtime {
        #[command(subcommand)]
        method: Method,
    },
    /// Residuals of the discrete Tanaka-Meyer identity; exits 2 on violation.
    TanakaCheck {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        levels: Vec<u32>,
        #[arg(long, value_delimiter = ',')]
        times: Vec<f64>,
        /// JSON function descriptor to check instead of the built-in suite.
        #[arg(long)]
        function: Option<String>,
        /// Mollify the function at level n before checking.
        #[arg(long)]
        mollify: Option<u32>,
        /// Residual tolerance, relative to 1 + TV(path).
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Monte Carlo convergence experiment from a JSON config.
    Experiment {
        #[command(flatten)]
        common: Common,
        /// Also report wall-clock time (makes the output non-reproducible).
        #[arg(long)]
        wall_clock: bool,
    },
    /// `∫|Q^{z,d}_t| dz` for each width.
    QStat {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', required = true)]
        widths: Vec<f64>,
    },
}

#[derive(Subcommand)]
enum Method {
    /// Occupation density with the given bandwidths.
    Occ {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', required = true)]
        widths: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        times: Vec<f64>,
    },
    /// Level-crossing times K, J and L = 2(K - J)⁺ along dyadic partitions.
    Crossing {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        levels: Vec<u32>,
        #[arg(long, value_delimiter = ',')]
        times: Vec<f64>,
    },
    /// Interval-crossing local time `c n^{z,c}` for decreasing widths.
    Skorokhod {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', required = true)]
        widths: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        times: Vec<f64>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON config: a generator spec, or an experiment config for `experiment`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    grid_du: f64,
}

#[derive(Args)]
struct Source {
    /// Path CSV (t,x,jump,pre_x); alternative to a generator --config.
    #[arg(long)]
    input: Option<PathBuf>,
}

/// Exit 2: a checked property failed. Everything else exits 1.
#[derive(Debug)]
struct Violation(String);

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Violation {}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn generator(common: &Common) -> Result<GeneratorSpec> {
    let path = common.config.as_ref().ok_or_else(|| anyhow!("--config <generator json> is required"))?;
    let mut spec: GeneratorSpec = read_json(path)?;
    if let Some(seed) = common.seed {
        spec.seed = seed;
    }
    spec.validate()?;
    Ok(spec)
}

fn load_path(source: &Source, common: &Common) -> Result<SampledCadlagPath> {
    match (&source.input, &common.config) {
        (Some(_), Some(_)) => bail!("give either --input or --config, not both"),
        (Some(file), None) => {
            let f = File::open(file).with_context(|| format!("opening {}", file.display()))?;
            SampledCadlagPath::read_csv(f).with_context(|| format!("reading path {}", file.display()))
        }
        (None, Some(_)) => Ok(generator(common)?.generate()?),
        (None, None) => bail!("a path is required: --input <csv> or --config <generator json>"),
    }
}

fn create(out: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let p = out.join(name);
    Ok(BufWriter::new(File::create(&p).with_context(|| format!("creating {}", p.display()))?))
}

fn eval_times(path: &SampledCadlagPath, times: &[f64]) -> Result<Vec<f64>> {
    if times.is_empty() {
        return Ok(vec![path.horizon()]);
    }
    if let Some(t) = times.iter().find(|t| !(**t >= 0.0 && **t <= path.horizon())) {
        bail!("time {t} outside [0, {}]", path.horizon());
    }
    Ok(times.to_vec())
}

fn partitions(path: &SampledCadlagPath, levels: &[u32]) -> Result<PartitionScheme> {
    if levels.is_empty() {
        Ok(PartitionScheme::full_grid(path))
    } else {
        Ok(PartitionScheme::dyadic(path, levels, false)?)
    }
}

/// Decreasing positive widths, as written on the command line.
fn check_widths(widths: &[f64]) -> Result<()> {
    if widths.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
        bail!("widths must be positive");
    }
    if widths.windows(2).any(|w| w[1] >= w[0]) {
        bail!("widths must be strictly decreasing");
    }
    Ok(())
}

fn grid_for(path: &SampledCadlagPath, common: &Common, margin: f64) -> Result<LevelGrid> {
    if !(common.grid_du > 0.0) {
        bail!("--grid-du must be positive");
    }
    Ok(LevelGrid::for_path(path, common.grid_du, Some(margin + 2.0 * common.grid_du))?)
}

fn cmd_generate(common: &Common) -> Result<()> {
    let spec = generator(common)?;
    let path = spec.generate()?;
    let mut w = create(&common.out, "path.csv")?;
    path.write_csv(&mut w)?;
    w.flush()?;
    println!(
        "samples {}  range [{}, {}]  jumps {}  total variation {}",
        path.len(),
        path.min_value(),
        path.max_value(),
        path.jumps().len(),
        path.total_variation()
    );
    Ok(())
}

fn cmd_qv(source: &Source, common: &Common, levels: &[u32]) -> Result<()> {
    let path = load_path(source, common)?;
    let scheme = partitions(&path, levels)?;
    let mut w = csv_writer(create(&common.out, "qv.csv")?);
    w.write_record(["n", "t", "total", "continuous", "jump"])?;
    for n in 0..scheme.num_levels() {
        let qv = quadratic_variation(&path, &scheme, n)?;
        for i in 0..qv.times.len() {
            w.write_record([
                qv.level.to_string(),
                qv.times[i].to_string(),
                qv.total[i].to_string(),
                qv.continuous[i].to_string(),
                qv.jump[i].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::Writer::from_writer(w)
}

fn write_fields(out: &Path, name: &str, fields: &[&LocalTimeField]) -> Result<()> {
    let mut w = create(out, name)?;
    for (i, f) in fields.iter().enumerate() {
        f.write_csv(&mut w, i == 0)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_occ(source: &Source, common: &Common, widths: &[f64], times: &[f64]) -> Result<()> {
    check_widths(widths)?;
    let path = load_path(source, common)?;
    let times = eval_times(&path, times)?;
    let grid = grid_for(&path, common, widths[0])?;
    for &eps in widths {
        let fns = times
            .iter()
            .map(|&t| occupation_local_time(&path, t, eps, &grid))
            .collect::<cadlag_localtime::Result<Vec<_>>>()?;
        let field = LocalTimeField::from_functions(FieldKind::LOccupation, times.clone(), fns)?;
        write_fields(&common.out, &format!("occupation_{eps}.csv"), &[&field])?;
    }
    Ok(())
}

fn cmd_crossing(source: &Source, common: &Common, levels: &[u32], times: &[f64]) -> Result<()> {
    let path = load_path(source, common)?;
    let times = eval_times(&path, times)?;
    let grid = grid_for(&path, common, 0.0)?;
    let scheme = partitions(&path, levels)?;
    let j = j_field(&path, &times, &grid)?;
    for n in 0..scheme.num_levels() {
        let k = k_field(&path, scheme.level(n)?, &times, &grid)?;
        let (kc, l) = split_kc(&k, &j)?;
        write_fields(&common.out, &format!("crossing_{}.csv", scheme.labels()[n]), &[&k, &j, &kc, &l])?;
    }
    Ok(())
}

fn cmd_skorokhod(source: &Source, common: &Common, widths: &[f64], times: &[f64]) -> Result<()> {
    check_widths(widths)?;
    let path = load_path(source, common)?;
    let times = eval_times(&path, times)?;
    let grid = grid_for(&path, common, widths[0])?;
    // per time, one function per width
    let per_time = times
        .iter()
        .map(|&t| interval_crossing_local_time(&path, t, widths, &grid))
        .collect::<cadlag_localtime::Result<Vec<_>>>()?;
    for (wi, &c) in widths.iter().enumerate() {
        let fns = per_time.iter().map(|fs| fs[wi].clone()).collect();
        let field = LocalTimeField::from_functions(FieldKind::LInterval, times.clone(), fns)?;
        write_fields(&common.out, &format!("interval_{c}.csv"), &[&field])?;
    }
    let mut w = csv_writer(create(&common.out, "cauchy.csv")?);
    w.write_record(["t", "width_a", "width_b", "l1_distance"])?;
    for (t, fs) in times.iter().zip(&per_time) {
        for a in 0..widths.len() {
            for b in a + 1..widths.len() {
                let d = lp_distance(&fs[a], &fs[b], 1.0, None)?;
                w.write_record([t.to_string(), widths[a].to_string(), widths[b].to_string(), d.to_string()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_tanaka(
    source: &Source,
    common: &Common,
    levels: &[u32],
    times: &[f64],
    function: Option<&str>,
    mollify_level: Option<u32>,
    tol: f64,
) -> Result<()> {
    let path = load_path(source, common)?;
    let times = if times.is_empty() {
        let h = path.horizon();
        vec![0.25 * h, 0.5 * h, h]
    } else {
        eval_times(&path, times)?
    };
    let scheme = partitions(&path, levels)?;
    let mut suite: Vec<DcFunction> = match function {
        Some(json) => {
            let d: FunctionDescriptor = serde_json::from_str(json).context("parsing --function")?;
            vec![d.build()?]
        }
        None => builtin_suite(),
    };
    if let Some(n) = mollify_level {
        let rho = Mollifier::symmetric();
        suite = suite.iter().map(|f| mollify(f, n, &rho)).collect::<cadlag_localtime::Result<_>>()?;
    }
    let bound = tol * (1.0 + path.total_variation());
    let mut w = csv_writer(create(&common.out, "tanaka.csv")?);
    w.write_record(["function", "n", "t", "residual", "ok"])?;
    let mut bad = 0usize;
    let mut worst = 0.0f64;
    for f in &suite {
        for n in 0..scheme.num_levels() {
            for &t in &times {
                let r = discrete_tanaka_residual(&path, f, &scheme, n, t)?;
                let ok = r.abs() <= bound;
                bad += usize::from(!ok);
                worst = worst.max(r.abs());
                w.write_record([
                    f.name().to_string(),
                    scheme.labels()[n].to_string(),
                    t.to_string(),
                    format!("{r:e}"),
                    u8::from(ok).to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    println!("max |residual| {worst:e}, bound {bound:e}, violations {bad}");
    if bad > 0 {
        return Err(Violation(format!("{bad} residuals above {bound:e}")).into());
    }
    Ok(())
}

fn cmd_experiment(common: &Common, wall_clock: bool) -> Result<()> {
    let path = common.config.as_ref().ok_or_else(|| anyhow!("--config <experiment json> is required"))?;
    let mut cfg: ExperimentConfig = read_json(path)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let report = run_convergence_experiment(&cfg)?;
    let mut w = create(&common.out, "report.csv")?;
    report.write_csv(&mut w, wall_clock)?;
    w.flush()?;
    let mut w = create(&common.out, "report_long.csv")?;
    report.write_long_csv(&mut w)?;
    w.flush()?;
    for row in &report.rows {
        println!("level {}  mean {:.6}  se {:.6}", row.level, row.mean, row.std_error);
    }
    Ok(())
}

fn cmd_qstat(source: &Source, common: &Common, widths: &[f64]) -> Result<()> {
    check_widths(widths)?;
    let path = load_path(source, common)?;
    let grid = grid_for(&path, common, widths[0])?;
    let mut w = csv_writer(create(&common.out, "q_stat.csv")?);
    w.write_record(["d", "q"])?;
    for &d in widths {
        let q = q_statistic(&path, path.horizon(), &grid, d)?;
        w.write_record([d.to_string(), q.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { common } => cmd_generate(&common),
        Command::Qv { source, common, levels } => cmd_qv(&source, &common, &levels),
        Command::Localtime { method } => match method {
            Method::Occ { source, common, widths, times } => cmd_occ(&source, &common, &widths, &times),
            Method::Crossing { source, common, levels, times } => cmd_crossing(&source, &common, &levels, &times),
            Method::Skorokhod { source, common, widths, times } => {
                cmd_skorokhod(&source, &common, &widths, &times)
            }
        },
        Command::TanakaCheck { source, common, levels, times, function, mollify, tol } => {
            cmd_tanaka(&source, &common, &levels, &times, function.as_deref(), mollify, tol)
        }
        Command::Experiment { common, wall_clock } => cmd_experiment(&common, wall_clock),
        Command::QStat { source, common, widths } => cmd_qstat(&source, &common, &widths),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let violated = e.downcast_ref::<Violation>().is_some()
                || matches!(
                    e.downcast_ref::<cadlag_localtime::Error>(),
                    Some(cadlag_localtime::Error::Invariant(_))
                );
            ExitCode::from(if violated { 2 } else { 1 })
        }
    }
}
