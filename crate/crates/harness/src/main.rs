use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use gambling_cs::confset::{ConfidenceSet, WealthProcess};
use gambling_cs::simplex::simplex_lattice;
use gambling_cs::wealth::{census_of, perround_wor_log_wealth, ppr_log_wealth, wor_kt_log_wealth};
use gambling_cs::wor::{AuditState, WorMethod};
use gambling_cs::{CountVector, DirichletPrior, ProbVector};
use gambling_cs_harness::config::{ExperimentConfig, Preset};
use gambling_cs_harness::emit::{render_svg, write_csv, write_json};
use gambling_cs_harness::experiment::{run_experiment, Method};
use gambling_cs_harness::observations::{read_categories, read_observations, Format};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "gcs",
    version,
    about = "Confidence sequences for means on the simplex by betting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate i.i.d. data and track set volume and coverage.
    Simulate(SimulateArgs),
    /// Audit a finite population drawn without replacement.
    Wor(WorArgs),
    /// Print the log-wealth of one candidate mean along an observation stream.
    Wealth(WealthArgs),
    /// Build the confidence set on a lattice from an observation stream.
    Confset(ConfsetArgs),
}

#[derive(Args)]
struct OutputArgs {
    /// Row CSV; `-` or absent for stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Config, rows and summary as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Plot of the summary.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Defaults to start from: fig1, fig2, fig3 or custom.
    #[arg(long, default_value = "custom")]
    preset: Preset,
    /// JSON config file; flags given alongside override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of categories; implied by --mu or --conc.
    #[arg(long)]
    k: Option<usize>,
    /// Categorical mean, comma-separated.
    #[arg(long, value_delimiter = ',')]
    mu: Option<Vec<f64>>,
    /// Dirichlet concentration, comma-separated.
    #[arg(long, value_delimiter = ',')]
    conc: Option<Vec<f64>>,
    /// Horizon: observations per trial.
    #[arg(long)]
    t: Option<usize>,
    /// Independent trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Error level δ in (0, 1).
    #[arg(long)]
    delta: Option<f64>,
    /// Base seed; trial i uses a stream derived from it and i.
    #[arg(long)]
    seed: Option<u64>,
    /// kt, up, kt2-mix, kt2-bonf, up2-mix, up2-bonf, sanov, mardia, cp-bonf.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Lattice resolution.
    #[arg(long)]
    grid: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct WorArgs {
    /// Population counts per category.
    #[arg(long, value_delimiter = ',')]
    census: Option<Vec<u32>>,
    /// Random draw orders to replay.
    #[arg(long, default_value_t = 1000)]
    permutations: usize,
    /// Error level δ in (0, 1).
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Audit methods: wor-kt, ppr, perround.
    #[arg(long, value_delimiter = ',', default_value = "wor-kt,ppr")]
    method: Vec<String>,
    /// Base seed for the draw orders.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Read 1-based draws and print the audit state after each as JSON lines.
    #[arg(long)]
    stream: bool,
    /// Population size for `--stream`.
    #[arg(long)]
    population: Option<usize>,
    /// Categories for `--stream`.
    #[arg(long)]
    k: Option<usize>,
    /// Draws for `--stream`; stdin when absent.
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct WealthArgs {
    /// kt, up, kt2-mix, kt2-bonf, up2-mix, up2-bonf, or with `--population`
    /// wor-kt, ppr, perround.
    #[arg(long, default_value = "kt")]
    method: String,
    /// Candidate mean, comma-separated; a census when `--population` is set.
    #[arg(long, value_delimiter = ',')]
    at: Vec<f64>,
    /// Observations; stdin when absent.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Lines hold the first `K − 1` coordinates of a point in the unit box.
    #[arg(long = "box")]
    box_input: bool,
    /// Population size for without-replacement methods.
    #[arg(long)]
    population: Option<usize>,
}

#[derive(Args)]
struct ConfsetArgs {
    /// kt, up, kt2-mix, kt2-bonf, up2-mix or up2-bonf.
    #[arg(long, default_value = "kt")]
    method: String,
    /// Number of categories.
    #[arg(long)]
    k: usize,
    /// Error level δ in (0, 1).
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Lattice resolution; defaults by dimension.
    #[arg(long)]
    grid: Option<usize>,
    /// Observations; stdin when absent.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Lines hold the first `K − 1` coordinates of a point in the unit box.
    #[arg(long = "box")]
    box_input: bool,
    /// Final set as CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn open_input(path: Option<&Path>) -> anyhow::Result<Box<dyn BufRead>> {
    Ok(match path {
        Some(p) if p != Path::new("-") => Box::new(BufReader::new(
            File::open(p).with_context(|| format!("opening {}", p.display()))?,
        )),
        _ => Box::new(BufReader::new(io::stdin())),
    })
}

fn open_output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) if p != Path::new("-") => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        _ => Box::new(BufWriter::new(io::stdout())),
    })
}

fn emit(config: &ExperimentConfig, output: &OutputArgs) -> anyhow::Result<()> {
    let results = run_experiment(config)?;
    let mut out = open_output(output.out.as_deref())?;
    write_csv(&results.rows, &mut out)?;
    out.flush()?;
    if let Some(p) = &output.json {
        let mut w = open_output(Some(p))?;
        write_json(&results, &mut w)?;
        w.flush()?;
    }
    if let Some(p) = &output.svg {
        std::fs::write(p, render_svg(&results.summary))
            .with_context(|| format!("writing {}", p.display()))?;
    }
    if !results.summary.not_implemented.is_empty() {
        eprintln!(
            "not implemented, skipped: {}",
            results.summary.not_implemented.join(", ")
        );
    }
    if let Some(r) = &results.summary.stop_ratio {
        eprintln!(
            "{}/{} stopping time: mean ratio {:.4}, ratio of means {:.4}, no later in {:.1}% of permutations",
            r.numerator,
            r.denominator,
            r.mean_ratio,
            r.ratio_of_means,
            100.0 * r.share_no_later
        );
    }
    Ok(())
}

fn simulate(a: SimulateArgs) -> anyhow::Result<()> {
    let mut c = match &a.config {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => ExperimentConfig::preset(a.preset),
    };
    if let Some(v) = a.mu {
        c.k = v.len();
        c.mu = Some(v);
    }
    if let Some(v) = a.conc {
        c.k = v.len();
        c.conc = Some(v);
    }
    c.k = a.k.unwrap_or(c.k);
    c.t = a.t.unwrap_or(c.t);
    c.trials = a.trials.unwrap_or(c.trials);
    c.delta = a.delta.unwrap_or(c.delta);
    c.seed = a.seed.unwrap_or(c.seed);
    if let Some(m) = a.methods {
        c.methods = m;
    }
    if a.grid.is_some() {
        c.grid = a.grid;
    }
    emit(&c, &a.output)
}

fn wor(a: WorArgs) -> anyhow::Result<()> {
    if a.stream {
        return wor_stream(&a);
    }
    let mut c = ExperimentConfig::preset(Preset::Fig2);
    if let Some(census) = a.census {
        c.k = census.len();
        c.census = Some(census);
    }
    c.trials = a.permutations;
    c.delta = a.delta;
    c.methods = a.method;
    c.seed = a.seed;
    emit(&c, &a.output)
}

/// Audit state after one streamed draw; `bounds` is null once no census
/// survives.
#[derive(Serialize)]
struct AuditLine {
    t: usize,
    active_count: usize,
    bounds: Option<Vec<(u32, u32)>>,
    decided: bool,
}

fn wor_stream(a: &WorArgs) -> anyhow::Result<()> {
    let (n, k) = match (a.population, a.k, &a.census) {
        (Some(n), Some(k), _) => (n, k),
        (None, None, Some(c)) => (c.iter().map(|&x| x as usize).sum(), c.len()),
        _ => bail!("--stream needs --population and --k"),
    };
    let [method] = a.method.as_slice() else {
        bail!("--stream takes exactly one --method");
    };
    let method: WorMethod = method.parse()?;
    let draws = read_categories(open_input(a.input.as_deref())?, k)?;
    let mut state = AuditState::new(n, k, method, a.delta)?;
    let mut out = open_output(a.output.out.as_deref())?;
    for c in draws {
        state.absorb(c)?;
        let line = AuditLine {
            t: state.time(),
            active_count: state.active_count(),
            bounds: state.category_count_bounds().ok(),
            decided: state.rank_decided(),
        };
        writeln!(out, "{}", serde_json::to_string(&line)?)?;
    }
    out.flush()?;
    Ok(())
}

fn wealth(a: WealthArgs) -> anyhow::Result<()> {
    let k = a.at.len();
    if k < 2 {
        bail!("--at needs at least two coordinates");
    }
    let input = open_input(a.input.as_deref())?;
    let mut out = open_output(None)?;
    writeln!(out, "t,log_wealth")?;
    let prior = DirichletPrior::kt(k);
    if let Some(n) = a.population {
        let method: WorMethod = a.method.parse()?;
        let census = CountVector::new(a.at.iter().map(|&x| x as u32).collect())?;
        let m = ProbVector::new(a.at.iter().map(|&x| x / n as f64).collect())?;
        census_of(&m, n)?;
        let mut drawn = CountVector::zeros(k);
        let mut seen = Vec::new();
        for c in read_categories(input, k)? {
            drawn.increment(c);
            seen.push(ProbVector::vertex(k, c)?);
            let w = match method {
                WorMethod::WorKt => wor_kt_log_wealth(&drawn, &m, n, &prior)?,
                WorMethod::Ppr => ppr_log_wealth(&drawn, &census, &prior)?,
                WorMethod::PerRound => perround_wor_log_wealth(&seen, &m, n, &prior)?,
            };
            writeln!(out, "{},{}", drawn.total(), w.value())?;
        }
        out.flush()?;
        return Ok(());
    }
    let method: Method = a.method.parse()?;
    let format = if a.box_input {
        Format::Box
    } else {
        Format::Simplex
    };
    let m = ProbVector::new(a.at.clone())?;
    let mut process = method_process(method, k)?;
    for (i, y) in read_observations(input, k, format)?.iter().enumerate() {
        process.observe(y)?;
        writeln!(out, "{},{}", i + 1, process.log_wealth_at(m.as_slice()))?;
    }
    out.flush()?;
    Ok(())
}

fn method_process(method: Method, k: usize) -> anyhow::Result<Box<dyn WealthProcess>> {
    if !method.time_uniform() {
        bail!("{method} is a fixed-time baseline without a wealth process");
    }
    Ok(method.process(k)?)
}

fn confset(a: ConfsetArgs) -> anyhow::Result<()> {
    let method: Method = a.method.parse()?;
    let format = if a.box_input {
        Format::Box
    } else {
        Format::Simplex
    };
    let grid = a
        .grid
        .unwrap_or_else(|| gambling_cs_harness::config::default_grid(a.k));
    let mut process = method_process(method, a.k)?;
    let mut set = ConfidenceSet::new(&simplex_lattice(a.k, grid)?, a.delta)?;
    for y in read_observations(open_input(a.input.as_deref())?, a.k, format)? {
        process.observe(&y)?;
        set.refresh(process.as_ref())?;
    }
    eprintln!(
        "t={} active={} of {} (relative volume {:.6})",
        set.time(),
        set.active_count(),
        set.len(),
        set.relative_volume()
    );
    let mut out = open_output(a.out.as_deref())?;
    set.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Simulate(a) => simulate(a),
        Command::Wor(a) => wor(a),
        Command::Wealth(a) => wealth(a),
        Command::Confset(a) => confset(a),
    }
}
