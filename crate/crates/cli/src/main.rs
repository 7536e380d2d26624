use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use htmest::bootstrap::{residual_bootstrap, Centering};
use htmest::inference::{build_region, chi2_quantile, ellipse_boundary};
use htmest::io::{read_sample, write_column, write_ellipse, write_sample};
use htmest::mestimator::fit;
use htmest::rng::stream_rng;
use htmest::sim::{self, Experiment, ExperimentConfig, Scale};
use htmest::stable::{sample_model, sample_univariate_stable, StableSpec, DEFAULT_SERIES_TERMS};
use htmest::{sandwich, Error, LossSpec, Result, Sample};

const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Parser)]
#[command(name = "htmest", version, about = "Robust M-estimation of a heavy-tailed mean vector")]
struct Cli {
    /// Master seed (default 20240601, or the config file's seed for experiments).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file, or output directory for `experiment`. Files default to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct LossArgs {
    /// Huber tuning constants, one per coordinate (a single value is reused).
    #[arg(long = "c", value_delimiter = ',', conflicts_with_all = ["tail_index", "loss"])]
    c: Vec<f64>,
    /// Tail indices; each picks its Huber constant from the tuning table.
    #[arg(long, value_delimiter = ',', conflicts_with = "loss")]
    tail_index: Vec<f64>,
    /// JSON loss file: {"losses":[{"family":"huber","c":1.0},{"family":"quadratic"}]}.
    #[arg(long)]
    loss: Option<PathBuf>,
}

#[derive(Copy, Clone, ValueEnum)]
enum CenteringArg {
    Raw,
    Mean,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a sample X = mu + eps with symmetric stable errors.
    Generate {
        /// Tail index per coordinate.
        #[arg(long, value_delimiter = ',', required = true)]
        alpha: Vec<f64>,
        /// Location per coordinate (defaults to zero).
        #[arg(long, value_delimiter = ',')]
        mu: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        n: usize,
        /// Terms of the LePage series (vector errors only).
        #[arg(long, default_value_t = DEFAULT_SERIES_TERMS)]
        series_terms: usize,
    },
    /// Fit the coordinate-wise M-estimate of a CSV sample.
    Estimate {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        loss: LossArgs,
    },
    /// Confidence region for the mean: chi-square or bootstrap threshold.
    Region {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        loss: LossArgs,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        /// Calibrate the threshold with this many bootstrap replicates.
        #[arg(long)]
        bootstrap: Option<usize>,
        /// Write the boundary (p = 2) as CSV `t,x1,x2`.
        #[arg(long)]
        ellipse: Option<PathBuf>,
        #[arg(long, default_value_t = 200)]
        ellipse_points: usize,
    },
    /// Residual bootstrap of the C* statistic.
    Bootstrap {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        loss: LossArgs,
        #[arg(long = "b", default_value_t = 500)]
        b: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [0.90, 0.95, 0.99])]
        levels: Vec<f64>,
        #[arg(long, value_enum, default_value = "raw")]
        centering: CenteringArg,
        /// Also write the raw C* values as a one-column CSV.
        #[arg(long)]
        c_star: Option<PathBuf>,
    },
    /// Run a Monte Carlo study and write its reports.
    Experiment {
        /// table1, table2, table3, table4, fig1, fig2-density or fig3-ellipse.
        name: String,
        /// JSON file overriding preset fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_parser = ["desk", "paper"])]
        scale: Option<String>,
    },
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))
}

fn load_sample(path: &Path) -> Result<Sample<f64>> {
    let file = File::open(path).map_err(|e| Error::InvalidArgument(format!("cannot open {}: {e}", path.display())))?;
    read_sample(BufReader::new(file))
}

impl LossArgs {
    fn resolve(&self, p: usize) -> Result<LossSpec<f64>> {
        let spec = if let Some(path) = &self.loss {
            LossSpec::from_json(&read_text(path)?)?
        } else if !self.tail_index.is_empty() {
            LossSpec::huber_for_alphas(&broadcast(&self.tail_index, p, "--tail-index")?)?
        } else if !self.c.is_empty() {
            LossSpec::huber(&broadcast(&self.c, p, "--c")?)?
        } else {
            LossSpec::huber(&vec![htmest::loss::DEFAULT_HUBER_C; p])?
        };
        if spec.dim() != p {
            return Err(Error::InvalidArgument(format!("loss has {} coordinates, sample has {p}", spec.dim())));
        }
        Ok(spec)
    }
}

fn broadcast(v: &[f64], p: usize, flag: &str) -> Result<Vec<f64>> {
    match v.len() {
        1 => Ok(vec![v[0]; p]),
        k if k == p => Ok(v.to_vec()),
        k => Err(Error::InvalidArgument(format!("{flag} has {k} values, sample has {p} coordinates"))),
    }
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(File::create(path)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json<T: serde::Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

fn run(cli: Cli) -> Result<String> {
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    let out = cli.out.as_deref();
    match cli.command {
        Command::Generate { alpha, mu, n, series_terms } => {
            let mu = if mu.is_empty() { vec![0.0; alpha.len()] } else { mu };
            let mut rng = stream_rng(seed, "generate", 0);
            let sample = if alpha.len() == 1 && mu.len() == 1 {
                let xs = sample_univariate_stable(alpha[0], n, &mut rng)?;
                Sample::univariate(xs.into_iter().map(|e| mu[0] + e).collect())?
            } else {
                let spec = StableSpec::new(alpha, mu)?.with_series_terms(series_terms)?;
                sample_model(&spec, n, &mut rng)?
            };
            write_sample(&sample, sink(out)?)?;
            Ok(format!("generated {} x {}", sample.n(), sample.p()))
        }
        Command::Estimate { input, loss } => {
            let sample = load_sample(&input)?;
            let est = fit(&sample, &loss.resolve(sample.p())?)?;
            write_json(&est, out)?;
            Ok(format!("fitted n={} p={}", sample.n(), sample.p()))
        }
        Command::Region { input, loss, level, bootstrap, ellipse, ellipse_points } => {
            let sample = load_sample(&input)?;
            let loss = loss.resolve(sample.p())?;
            let est = fit(&sample, &loss)?;
            let cov = sandwich::estimate(&est.residuals, &loss)?;
            let tau = match bootstrap {
                Some(b) => {
                    let mut rng = stream_rng(seed, "region", 0);
                    let run = residual_bootstrap(&sample, &loss, b, &[level], &mut rng, Centering::Raw)?;
                    run.tau_hat[0].tau
                }
                None => chi2_quantile(sample.p(), level)?,
            };
            let region = build_region(&est, &cov, tau)?;
            if let Some(path) = ellipse {
                write_ellipse(&ellipse_boundary(&region, ellipse_points)?, File::create(path)?)?;
            }
            write_json(&region.summary()?, out)?;
            Ok(format!("region with tau={tau}"))
        }
        Command::Bootstrap { input, loss, b, levels, centering, c_star } => {
            let sample = load_sample(&input)?;
            let loss = loss.resolve(sample.p())?;
            let centering = match centering {
                CenteringArg::Raw => Centering::Raw,
                CenteringArg::Mean => Centering::Mean,
            };
            let mut rng = stream_rng(seed, "bootstrap", 0);
            let run = residual_bootstrap(&sample, &loss, b, &levels, &mut rng, centering)?;
            if let Some(path) = c_star {
                write_column("c_star", &run.c_star, File::create(path)?)?;
            }
            write_json(&run, out)?;
            Ok(format!("{b} replicates, {} discarded", run.discarded))
        }
        Command::Experiment { name, config, scale } => {
            let experiment = Experiment::parse(&name)?;
            let scale = scale.as_deref().map(Scale::parse).transpose()?;
            let mut cfg = match config {
                Some(path) => ExperimentConfig::from_json(&read_text(&path)?, experiment, scale)?,
                None => ExperimentConfig::preset(experiment, scale.unwrap_or_default()),
            };
            if cfg.experiment != experiment {
                return Err(Error::InvalidArgument(format!(
                    "config is for {}, command asked for {}",
                    cfg.experiment.name(),
                    experiment.name()
                )));
            }
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            cfg.validate()?;
            let dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("results"));
            let written = sim::run(&cfg)?.write_to(&dir)?;
            Ok(format!("{} -> {}: {}", experiment.name(), dir.display(), written.join(", ")))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    match run(cli) {
        Ok(summary) => {
            eprintln!("htmest: {summary} ({:.2}s)", start.elapsed().as_secs_f64());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("htmest: error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
