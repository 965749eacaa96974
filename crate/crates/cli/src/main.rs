use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hamtomo::experiment::{EstimationReport, Experiment, ExperimentConfig, FieldScheme, HamiltonianSource};
use hamtomo::schedule::{AxisVariant, DdFamily, ErrorKind, PulseErrorModel};
use hamtomo::spin_system::SpinSystem;
use hamtomo::verify;

#[derive(Parser)]
#[command(name = "hamtomo", version, about = "Hamiltonian tomography of spin networks by dynamical decoupling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random Hamiltonian with couplings and fields uniform in [-1, 1].
    Generate {
        #[arg(long)]
        n_spins: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tomography of every selected pair and spin.
    Scan(RunArgs),
    /// Local field of a single spin.
    Field {
        #[arg(long)]
        spin: usize,
        #[arg(long, value_enum)]
        scheme: Option<Scheme>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Couplings of a single pair.
    Pair {
        #[arg(long)]
        i: usize,
        #[arg(long)]
        j: usize,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Oracle, scaling, survival, and purity suites.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write verify.json here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    All,
    Oracle,
    Scaling,
    Survival,
    Purity,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scheme {
    Environment,
    GlobalCancel,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Npe,
    Sae,
    Rae,
    Rre,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Hamiltonian document to load instead of a random instance.
    #[arg(long)]
    hamiltonian: Option<PathBuf>,
    /// Size of the random instance (when no Hamiltonian file is given).
    #[arg(long)]
    n_spins: Option<usize>,
    /// Seed of the random instance.
    #[arg(long)]
    system_seed: Option<u64>,
    /// Master seed for pulse errors, shots, and bootstrap.
    #[arg(long)]
    seed: Option<u64>,
    /// Free-evolution interval τ between pulses, in units of 1/J.
    #[arg(long)]
    tau_j: Option<f64>,
    /// Shots per time point.
    #[arg(long)]
    shots: Option<u64>,
    /// Time points per curve.
    #[arg(long)]
    timepoints: Option<usize>,
    /// Pulse error models; repeat or comma-separate to run several.
    #[arg(long, value_enum, value_delimiter = ',')]
    error_model: Vec<Kind>,
    /// Magnitudes matching --error-model, or one value for all.
    #[arg(long, value_delimiter = ',')]
    error_mag: Vec<f64>,
    /// Bootstrap resamples per curve (0 disables).
    #[arg(long)]
    resamples: Option<usize>,
    /// Fit exact probabilities (no shot noise).
    #[arg(long)]
    exact: bool,
    /// Directory for report.csv, summary.json, and curves/.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (parallel builds only).
    #[arg(long)]
    jobs: Option<usize>,
}

fn set_jobs(jobs: Option<usize>) -> Result<()> {
    let Some(n) = jobs else { return Ok(()) };
    if n == 0 {
        bail!("--jobs must be at least 1");
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring the worker pool")?;
    #[cfg(not(feature = "parallel"))]
    if n > 1 {
        eprintln!("warning: built without the `parallel` feature; --jobs {n} ignored");
    }
    Ok(())
}

fn error_models(kinds: &[Kind], mags: &[f64]) -> Result<Vec<PulseErrorModel>> {
    if !mags.is_empty() && mags.len() != 1 && mags.len() != kinds.len() {
        bail!("--error-mag needs one value or one per --error-model");
    }
    kinds
        .iter()
        .enumerate()
        .map(|(k, kind)| {
            let kind = match kind {
                Kind::Npe => ErrorKind::Npe,
                Kind::Sae => ErrorKind::Sae,
                Kind::Rae => ErrorKind::Rae,
                Kind::Rre => ErrorKind::Rre,
            };
            let mag = match (kind, mags.len()) {
                (ErrorKind::Npe, _) | (_, 0) => 0.0,
                (_, 1) => mags[0],
                _ => mags[k],
            };
            Ok(PulseErrorModel::new(kind, mag)?)
        })
        .collect()
}

fn build_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let mut cfg = ExperimentConfig::load(path).with_context(|| format!("reading {}", path.display()))?;
            // Hamiltonian paths in a config file are relative to that file.
            if let HamiltonianSource::File(h) = &cfg.hamiltonian {
                if h.is_relative() {
                    let base = path.parent().unwrap_or(Path::new("."));
                    cfg.hamiltonian = HamiltonianSource::File(base.join(h));
                }
            }
            cfg
        }
        None => ExperimentConfig::default(),
    };
    if let Some(h) = &args.hamiltonian {
        cfg.hamiltonian = HamiltonianSource::File(h.clone());
    } else if args.n_spins.is_some() || args.system_seed.is_some() {
        let (n0, s0) = match cfg.hamiltonian {
            HamiltonianSource::Random { n_spins, seed } => (n_spins, seed),
            HamiltonianSource::File(_) => (12, 0),
        };
        cfg.hamiltonian = HamiltonianSource::Random {
            n_spins: args.n_spins.unwrap_or(n0),
            seed: args.system_seed.unwrap_or(s0),
        };
    }
    if let Some(v) = args.seed {
        cfg.master_seed = v;
    }
    if let Some(v) = args.tau_j {
        cfg.tau_j = v;
    }
    if let Some(v) = args.shots {
        cfg.shots = v;
    }
    if let Some(v) = args.timepoints {
        cfg.timepoints = v;
    }
    if !args.error_model.is_empty() {
        cfg.error_models = error_models(&args.error_model, &args.error_mag)?;
    } else if !args.error_mag.is_empty() {
        bail!("--error-mag given without --error-model");
    }
    if let Some(v) = args.resamples {
        cfg.bootstrap_resamples = v;
    }
    if args.exact {
        cfg.exact_probabilities = true;
    }
    if let Some(o) = &args.out {
        cfg.out_dir = Some(o.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(report: &EstimationReport, cfg: &ExperimentConfig) -> Result<()> {
    for m in &report.models {
        println!("# {}", m.model.label());
        println!("{:<14} {:>10} {:>10} {:>10}  flags", "parameter", "truth", "estimate", "sigma");
        for e in &m.estimates {
            let truth = e.truth.map(|t| format!("{t:.4}")).unwrap_or_default();
            println!(
                "{:<14} {:>10} {:>10.4} {:>10.4}  {}",
                e.name,
                truth,
                e.estimate,
                e.sigma,
                e.flags.join(",")
            );
        }
        if let Some(ad) = m.average_deviation() {
            println!("average deviation {ad:.4} ({} pulses, {:.1} s)", m.pulses.pulses, m.wall_clock_s);
        }
    }
    if let Some(dir) = &cfg.out_dir {
        report
            .write_dir(dir, cfg.exact_probabilities)
            .with_context(|| format!("writing results to {}", dir.display()))?;
        eprintln!("wrote {}", dir.display());
    }
    Ok(())
}

fn run_verify(suite: Suite, seed: u64, out: Option<PathBuf>) -> Result<bool> {
    let mut ok = true;
    let mut doc = serde_json::Map::new();
    let want = |s: Suite| suite == Suite::All || suite == s;
    if want(Suite::Oracle) {
        let cases = verify::oracle_equivalence(50, seed)?;
        let worst = cases.iter().map(|c| c.trace_distance).fold(0.0, f64::max);
        let pass = worst <= 1e-9;
        ok &= pass;
        println!("oracle    {} max trace distance {worst:.2e} over {} cases", mark(pass), cases.len());
        doc.insert("oracle".into(), serde_json::to_value(&cases)?);
    }
    if want(Suite::Survival) {
        let table = verify::survival_table(seed)?;
        let matched = table.iter().filter(|c| c.expected == c.observed).count();
        let pass = matched == table.len();
        ok &= pass;
        println!("survival  {} {matched}/{} cases follow the commutation rule", mark(pass), table.len());
        doc.insert("survival".into(), serde_json::to_value(&table)?);
    }
    if want(Suite::Scaling) {
        let sys = SpinSystem::random_instance(8, seed)?;
        for (family, target) in [(DdFamily::Xy8, 3.0), (DdFamily::Xy4, 2.0)] {
            let r = verify::remnant_scaling(&sys, (0, 1), family, &verify::SCALING_TAUS, verify::SCALING_PULSES)?;
            let pass = (r.slope - target).abs() <= 0.4;
            ok &= pass;
            println!("scaling   {} {family:?} slope {:.3} (expected {target} ± 0.4)", mark(pass), r.slope);
            doc.insert(format!("scaling_{family:?}").to_lowercase(), serde_json::to_value(&r)?);
        }
    }
    if want(Suite::Purity) {
        let cfg = ExperimentConfig {
            hamiltonian: HamiltonianSource::Random { n_spins: 12, seed },
            variants: vec![AxisVariant::XxYy],
            pairs: Some(vec![(7, 9)]),
            spins: Some(vec![]),
            exact_probabilities: true,
            bootstrap_resamples: 0,
            ..Default::default()
        };
        let ex = Experiment::new(cfg)?;
        let r = ex.run_pair_tomography(7, 9, &PulseErrorModel::NONE)?;
        let worst = r.curves.iter().flat_map(|c| c.purity.iter().copied()).fold(1.0, f64::min);
        let pass = worst >= 0.995;
        ok &= pass;
        println!("purity    {} minimum two-spin purity {worst:.5}", mark(pass));
        doc.insert("min_purity".into(), worst.into());
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(&dir)?;
        std::fs::write(dir.join("verify.json"), serde_json::to_string_pretty(&doc)?)?;
    }
    Ok(ok)
}

fn mark(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Generate { n_spins, seed, out } => {
            let sys = SpinSystem::random_instance(n_spins, seed)?;
            sys.save(&out).with_context(|| format!("writing {}", out.display()))?;
            eprintln!("wrote {} ({} coefficients)", out.display(), sys.n_coefficients());
        }
        Command::Scan(args) => {
            set_jobs(args.jobs)?;
            let cfg = build_config(&args)?;
            let report = Experiment::new(cfg.clone())?.run_full_scan()?;
            emit(&report, &cfg)?;
        }
        Command::Field { spin, scheme, run } => {
            set_jobs(run.jobs)?;
            let mut cfg = build_config(&run)?;
            cfg.pairs = Some(vec![]);
            cfg.spins = Some(vec![spin]);
            if let Some(s) = scheme {
                cfg.field_scheme = match s {
                    Scheme::Environment => FieldScheme::Environment,
                    Scheme::GlobalCancel => FieldScheme::GlobalCancel,
                };
            }
            let report = Experiment::new(cfg.clone())?.run_full_scan()?;
            emit(&report, &cfg)?;
        }
        Command::Pair { i, j, run } => {
            set_jobs(run.jobs)?;
            let mut cfg = build_config(&run)?;
            cfg.pairs = Some(vec![(i, j)]);
            cfg.spins = Some(vec![]);
            let report = Experiment::new(cfg.clone())?.run_full_scan()?;
            emit(&report, &cfg)?;
        }
        Command::Verify { suite, seed, out, jobs } => {
            set_jobs(jobs)?;
            return run_verify(suite, seed, out);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
