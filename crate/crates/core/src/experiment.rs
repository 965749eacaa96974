//! End-to-end tomography runs: simulate every curve, fit, bootstrap, and
//! assemble a report.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{invalid, Result, TomoError};
use crate::estimator::{
    bootstrap_sigma, couplings_from_frequencies, couplings_from_records, disambiguate_signs,
    fit_local_field, fit_sine_with, sign_time, variant_settings, CouplingFit, SineFitOptions,
    MIN_POINTS, MIN_RESAMPLES,
};
use crate::evolution::{
    purity, reduced_density, run_schedule_checkpoints, EnvInit, Propagator, QuantumState, STATE_CAP,
};
use crate::measurement::{outcome_probability, MeasSetting, ShotRecord};
use crate::par;
use crate::pauli::{PauliAxis, StateLabel};
use crate::schedule::{
    environment_sequence, global_cancel_sequence, pair_sequence, AxisVariant, PulseErrorModel,
    PulseSchedule,
};
use crate::seed::{child_rng, child_seed};
use crate::spin_system::SpinSystem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianSource {
    File(PathBuf),
    Random { n_spins: usize, seed: u64 },
}

/// How the local field of a single spin is isolated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldScheme {
    /// Pulse every spin except the target.
    #[default]
    Environment,
    /// Pulse every spin and cancel the target's pulses with a second pulse.
    GlobalCancel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub hamiltonian: HamiltonianSource,
    pub tau_j: f64,
    pub shots: u64,
    pub timepoints: usize,
    /// Time point `k` (1-based) sits after `k · cycle_step` XY-8 cycles.
    pub cycle_step: usize,
    pub error_models: Vec<PulseErrorModel>,
    pub variants: Vec<AxisVariant>,
    /// `None` selects every pair (within `truncation_radius`, if set).
    pub pairs: Option<Vec<(usize, usize)>>,
    /// `None` selects every spin.
    pub spins: Option<Vec<usize>>,
    /// Skip pairs with `|i − j|` above this distance.
    pub truncation_radius: Option<usize>,
    pub field_scheme: FieldScheme,
    pub master_seed: u64,
    /// 0 disables the bootstrap; σ then comes from the fit curvature.
    pub bootstrap_resamples: usize,
    pub env_init: EnvInit,
    pub free_amplitude: bool,
    pub propagator_tol: f64,
    /// Fit exact probabilities instead of shot samples.
    pub exact_probabilities: bool,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            hamiltonian: HamiltonianSource::Random { n_spins: 12, seed: 0 },
            tau_j: 0.01,
            shots: 100,
            timepoints: 50,
            cycle_step: 2,
            error_models: vec![PulseErrorModel::NONE],
            variants: AxisVariant::ALL.to_vec(),
            pairs: None,
            spins: None,
            truncation_radius: None,
            field_scheme: FieldScheme::Environment,
            master_seed: 0,
            bootstrap_resamples: 1000,
            env_init: EnvInit::Zero,
            free_amplitude: false,
            propagator_tol: 1e-10,
            exact_probabilities: false,
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_j > 0.0 && self.tau_j <= 0.1) {
            return Err(TomoError::Validation {
                key: "tau_j".into(),
                msg: format!("must lie in (0, 0.1], got {}", self.tau_j),
            });
        }
        if self.shots == 0 {
            return Err(TomoError::Validation {
                key: "shots".into(),
                msg: "must be ≥ 1".into(),
            });
        }
        if self.timepoints < MIN_POINTS {
            return Err(TomoError::Validation {
                key: "timepoints".into(),
                msg: format!("must be ≥ {MIN_POINTS}, got {}", self.timepoints),
            });
        }
        if self.cycle_step == 0 {
            return Err(TomoError::Validation {
                key: "cycle_step".into(),
                msg: "must be ≥ 1".into(),
            });
        }
        if self.error_models.is_empty() {
            return Err(TomoError::Validation {
                key: "error_models".into(),
                msg: "at least one model is required".into(),
            });
        }
        if self.bootstrap_resamples != 0 && self.bootstrap_resamples < MIN_RESAMPLES {
            return Err(TomoError::Validation {
                key: "bootstrap_resamples".into(),
                msg: format!("must be 0 or ≥ {MIN_RESAMPLES}"),
            });
        }
        if !(self.propagator_tol > 0.0) {
            return Err(TomoError::Validation {
                key: "propagator_tol".into(),
                msg: "must be positive".into(),
            });
        }
        Ok(())
    }

    /// Cycle counts of the time grid.
    pub fn cycle_grid(&self) -> Vec<usize> {
        (1..=self.timepoints).map(|k| k * self.cycle_step).collect()
    }
}

/// One estimated coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEstimate {
    pub name: String,
    pub truth: Option<f64>,
    pub estimate: f64,
    pub sigma: f64,
    /// Diagnostics such as `not-converged` or `sign-tie`.
    pub flags: Vec<String>,
}

/// One simulated probability curve, with its fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveOutput {
    pub name: String,
    pub times: Vec<f64>,
    pub p_true: Vec<f64>,
    pub record: ShotRecord,
    pub p_fit: Vec<f64>,
    /// Purity of the targets' reduced state at each point.
    pub purity: Vec<f64>,
}

impl CurveOutput {
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["T", "p_true", "p_m", "sigma_m", "p_fit"])?;
        for k in 0..self.times.len() {
            w.write_record([
                self.times[k].to_string(),
                self.p_true[k].to_string(),
                self.record.p_m[k].to_string(),
                self.record.sigma_m[k].to_string(),
                self.p_fit.get(k).copied().unwrap_or(f64::NAN).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PulseCount {
    pub events: u64,
    pub pulses: u64,
}

impl std::ops::AddAssign for PulseCount {
    fn add_assign(&mut self, o: Self) {
        self.events += o.events;
        self.pulses += o.pulses;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyResult {
    pub estimates: Vec<ParamEstimate>,
    pub curves: Vec<CurveOutput>,
    pub pulses: PulseCount,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub model: PulseErrorModel,
    pub estimates: Vec<ParamEstimate>,
    pub curves: Vec<CurveOutput>,
    pub pulses: PulseCount,
    pub wall_clock_s: f64,
}

impl ModelReport {
    /// Mean `|estimate − truth|` over entries with a known truth.
    pub fn average_deviation(&self) -> Option<f64> {
        let d: Vec<f64> = self
            .estimates
            .iter()
            .filter_map(|e| e.truth.map(|t| (e.estimate - t).abs()))
            .collect();
        (!d.is_empty()).then(|| d.iter().sum::<f64>() / d.len() as f64)
    }

    /// Mean deviation divided by mean `|truth|`.
    pub fn relative_average_deviation(&self) -> Option<f64> {
        let ad = self.average_deviation()?;
        let scale: f64 = self.estimates.iter().filter_map(|e| e.truth).map(f64::abs).sum::<f64>()
            / self.estimates.iter().filter(|e| e.truth.is_some()).count() as f64;
        (scale > 0.0).then(|| ad / scale)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationReport {
    pub n_spins: usize,
    pub tau_j: f64,
    pub shots: u64,
    pub timepoints: usize,
    pub models: Vec<ModelReport>,
    pub wall_clock_s: f64,
}

#[derive(Serialize)]
struct ReportRow<'a> {
    parameter: &'a str,
    truth: Option<f64>,
    estimate: f64,
    sigma: f64,
    n_shots: Option<u64>,
    n_timepoints: usize,
    error_model: String,
    flags: String,
}

impl EstimationReport {
    pub fn summary(&self) -> serde_json::Value {
        let models: Vec<_> = self
            .models
            .iter()
            .map(|m| {
                json!({
                    "error_model": m.model.label(),
                    "kind": m.model.kind.as_str(),
                    "magnitude": m.model.magnitude,
                    "n_parameters": m.estimates.len(),
                    "n_flagged": m.estimates.iter().filter(|e| !e.flags.is_empty()).count(),
                    "average_deviation": m.average_deviation(),
                    "relative_average_deviation": m.relative_average_deviation(),
                    "wall_clock_s": m.wall_clock_s,
                    "pulse_events": m.pulses.events,
                    "pulses": m.pulses.pulses,
                })
            })
            .collect();
        json!({
            "n_spins": self.n_spins,
            "tau_j": self.tau_j,
            "shots": self.shots,
            "timepoints": self.timepoints,
            "parallel": par::is_parallel(),
            "wall_clock_s": self.wall_clock_s,
            "models": models,
        })
    }

    /// Writes `report.csv`, `summary.json`, and `curves/<name>.csv`.
    pub fn write_dir(&self, dir: impl AsRef<Path>, exact: bool) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir.join("curves"))?;
        let mut w = csv::Writer::from_path(dir.join("report.csv"))?;
        for m in &self.models {
            for e in &m.estimates {
                w.serialize(ReportRow {
                    parameter: &e.name,
                    truth: e.truth,
                    estimate: e.estimate,
                    sigma: e.sigma,
                    n_shots: (!exact).then_some(self.shots),
                    n_timepoints: self.timepoints,
                    error_model: m.model.label(),
                    flags: e.flags.join(";"),
                })?;
            }
        }
        w.flush()?;
        fs::write(
            dir.join("summary.json"),
            serde_json::to_string_pretty(&self.summary())?,
        )?;
        let suffix = self.models.len() > 1;
        for m in &self.models {
            for c in &m.curves {
                let name = if suffix {
                    format!("{}__{}.csv", c.name, m.model.slug())
                } else {
                    format!("{}.csv", c.name)
                };
                c.write_csv(dir.join("curves").join(name))?;
            }
        }
        Ok(())
    }
}

fn axis_pair_name(a: PauliAxis, b: PauliAxis) -> String {
    format!("{a}{b}")
}

/// Loaded system plus the shared propagator for one configuration.
pub struct Experiment {
    cfg: ExperimentConfig,
    system: SpinSystem,
    prop: Propagator,
}

/// A curve to simulate: preparation/measurement plus its schedule family.
struct CurveTask {
    name: String,
    setting: MeasSetting,
    schedule: ScheduleKind,
    cycles: Vec<usize>,
}

#[derive(Clone, Copy)]
enum ScheduleKind {
    Pair(usize, usize, AxisVariant),
    Field(usize, FieldScheme),
}

struct SimulatedCurve {
    times: Vec<f64>,
    p_true: Vec<f64>,
    purity: Vec<f64>,
    record: ShotRecord,
    pulses: PulseCount,
}

impl Experiment {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        let system = match &cfg.hamiltonian {
            HamiltonianSource::File(p) => SpinSystem::load(p)?,
            HamiltonianSource::Random { n_spins, seed } => SpinSystem::random_instance(*n_spins, *seed)?,
        };
        Self::with_system(cfg, system)
    }

    pub fn with_system(cfg: ExperimentConfig, system: SpinSystem) -> Result<Self> {
        cfg.validate()?;
        let n = system.n_spins();
        if n > STATE_CAP {
            return Err(TomoError::ResourceLimit {
                what: "spins",
                requested: n,
                cap: STATE_CAP,
            });
        }
        for &(i, j) in cfg.pairs.iter().flatten() {
            if i >= n || j >= n || i == j {
                return Err(TomoError::Validation {
                    key: "pairs".into(),
                    msg: format!("({i}, {j}) is not a pair of distinct spins below {n}"),
                });
            }
        }
        if let Some(&s) = cfg.spins.iter().flatten().find(|&&s| s >= n) {
            return Err(TomoError::Validation {
                key: "spins".into(),
                msg: format!("spin {s} out of range for {n} spins"),
            });
        }
        let prop = Propagator::new(&system, cfg.tau_j, cfg.propagator_tol)?;
        Ok(Self { cfg, system, prop })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn system(&self) -> &SpinSystem {
        &self.system
    }

    pub fn selected_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.system.n_spins();
        match &self.cfg.pairs {
            Some(p) => p.clone(),
            None => (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .filter(|&(i, j)| self.cfg.truncation_radius.is_none_or(|r| j - i <= r))
                .collect(),
        }
    }

    pub fn selected_spins(&self) -> Vec<usize> {
        self.cfg
            .spins
            .clone()
            .unwrap_or_else(|| (0..self.system.n_spins()).collect())
    }

    fn schedule(&self, kind: ScheduleKind, n_cycles: usize) -> Result<PulseSchedule> {
        let n = self.system.n_spins();
        let tau = self.cfg.tau_j;
        match kind {
            ScheduleKind::Pair(i, j, v) => pair_sequence(i, j, v, n_cycles, tau),
            ScheduleKind::Field(i, FieldScheme::Environment) => environment_sequence(i, n, n_cycles, tau),
            ScheduleKind::Field(i, FieldScheme::GlobalCancel) => global_cancel_sequence(i, n, n_cycles, tau),
        }
    }

    /// One trajectory to the longest cycle count, read out at every grid
    /// point. Pulse draws and shot draws use independent streams keyed by
    /// the curve name only, so shot noise is shared across error models.
    fn simulate(&self, task: &CurveTask, err: &PulseErrorModel) -> Result<SimulatedCurve> {
        let max_cycles = *task.cycles.iter().max().ok_or_else(|| invalid("empty cycle grid"))?;
        let sched = self.schedule(task.schedule, max_cycles)?;
        let mut cycles = task.cycles.clone();
        cycles.sort_unstable();
        let checkpoints: Vec<u64> = cycles.iter().map(|&c| sched.cycle_end(c)).collect();
        let psi0 = QuantumState::prepare(self.system.n_spins(), &task.setting.preparation(), self.cfg.env_init)?;
        let mut rng = child_rng(self.cfg.master_seed, &format!("pulses/{}", task.name));
        let snaps = run_schedule_checkpoints(&psi0, &self.prop, &sched, err, &mut rng, &checkpoints)?;
        let mut p_true = Vec::with_capacity(snaps.len());
        let mut pur = Vec::with_capacity(snaps.len());
        for psi in &snaps {
            let rho = reduced_density(psi, &task.setting.targets)?;
            p_true.push(outcome_probability(&rho, &task.setting.measured)?);
            pur.push(purity(&rho));
        }
        let half = self.cfg.tau_j / 2.0;
        let times: Vec<f64> = checkpoints.iter().map(|&h| h as f64 * half).collect();
        let record = if self.cfg.exact_probabilities {
            ShotRecord::noiseless(&times, &p_true)?
        } else {
            let mut shot_rng = child_rng(self.cfg.master_seed, &format!("shots/{}", task.name));
            ShotRecord::sample(&times, &p_true, self.cfg.shots, &mut shot_rng)?
        };
        let pulses = sched.events().iter().fold(PulseCount::default(), |mut acc, e| {
            acc.events += 1;
            acc.pulses += e.targets.len() as u64;
            acc
        });
        Ok(SimulatedCurve {
            times,
            p_true,
            purity: pur,
            record,
            pulses,
        })
    }

    fn sine_options(&self) -> SineFitOptions {
        SineFitOptions {
            free_amplitude: self.cfg.free_amplitude,
            ..Default::default()
        }
    }

    /// All selected variants on pair `(i, j)`: three coupling estimates per
    /// variant.
    pub fn run_pair_tomography(&self, i: usize, j: usize, err: &PulseErrorModel) -> Result<TomographyResult> {
        let mut tasks = Vec::new();
        let mut settings = Vec::new();
        for &v in &self.cfg.variants {
            let vs = variant_settings(v, i, j)?;
            for s in vs.settings.iter() {
                tasks.push(CurveTask {
                    name: format!("pair_{i}_{j}_{}_{}", v.slug(), s.slug()),
                    setting: s.clone(),
                    schedule: ScheduleKind::Pair(i, j, v),
                    cycles: self.cfg.cycle_grid(),
                });
            }
            settings.push(vs);
        }
        let sims = par::map_collect(tasks.iter().collect(), |t| self.simulate(t, err));
        let sims: Vec<SimulatedCurve> = sims.into_iter().collect::<Result<_>>()?;

        let opts = self.sine_options();
        let mut estimates = Vec::new();
        let mut curves = Vec::new();
        let mut pulses = PulseCount::default();
        for (vi, vs) in settings.iter().enumerate() {
            let block = &sims[3 * vi..3 * vi + 3];
            let fits: Vec<_> = block.iter().map(|s| fit_sine_with(&s.record, &opts)).collect();
            let mut flags = Vec::new();
            let omegas: Vec<f64> = fits
                .iter()
                .map(|f| match f {
                    Ok(f) => {
                        if !f.converged {
                            flags.push("not-converged".to_string());
                        }
                        f.omega
                    }
                    Err(_) => {
                        flags.push("fit-failed".to_string());
                        f64::NAN
                    }
                })
                .collect();
            flags.dedup();
            let c = couplings_from_frequencies(omegas[0], omegas[1], omegas[2]);
            let sig = self.coupling_sigma(&fits, block, vs.variant, i, j, &opts, &mut flags)?;
            for (k, &(a, b)) in vs.parameters.iter().enumerate() {
                estimates.push(ParamEstimate {
                    name: format!("J_{i}_{j}_{}", axis_pair_name(a, b)),
                    truth: Some(self.system.coupling(i, j, a, b)),
                    estimate: c[k],
                    sigma: sig[k],
                    flags: flags.clone(),
                });
            }
            for (k, s) in block.iter().enumerate() {
                let p_fit = match &fits[k] {
                    Ok(f) => s.times.iter().map(|&t| f.model(t)).collect(),
                    Err(_) => vec![f64::NAN; s.times.len()],
                };
                curves.push(CurveOutput {
                    name: tasks[3 * vi + k].name.clone(),
                    times: s.times.clone(),
                    p_true: s.p_true.clone(),
                    record: s.record.clone(),
                    p_fit,
                    purity: s.purity.clone(),
                });
                pulses += s.pulses;
            }
        }
        Ok(TomographyResult {
            estimates,
            curves,
            pulses,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn coupling_sigma(
        &self,
        fits: &[Result<CouplingFit>],
        block: &[SimulatedCurve],
        variant: AxisVariant,
        i: usize,
        j: usize,
        opts: &SineFitOptions,
        flags: &mut Vec<String>,
    ) -> Result<[f64; 3]> {
        if self.cfg.bootstrap_resamples == 0 || self.cfg.exact_probabilities {
            let s: Vec<f64> = fits
                .iter()
                .map(|f| f.as_ref().map(|f| f.omega_sigma).unwrap_or(f64::NAN))
                .collect();
            let (m, p, d) = (s[0], s[1], s[2]);
            let s12 = (m * m + p * p).sqrt() / 4.0;
            return Ok([s12, s12, (s12 * s12 + d * d / 4.0).sqrt()]);
        }
        let records: Vec<ShotRecord> = block.iter().map(|s| s.record.clone()).collect();
        let seed = child_seed(self.cfg.master_seed, &format!("bootstrap/pair_{i}_{j}_{}", variant.slug()));
        let boot = bootstrap_sigma(&records, self.cfg.bootstrap_resamples, seed, |r| {
            couplings_from_records(r, opts)
        })?;
        if boot.flagged {
            flags.push("bootstrap-failures".into());
        }
        Ok([0, 1, 2].map(|k| boot.sigma.get(k).copied().unwrap_or(f64::NAN)))
    }

    /// Signed local field of spin `i`.
    pub fn run_field_tomography(&self, i: usize, err: &PulseErrorModel) -> Result<TomographyResult> {
        use StateLabel::*;
        let scheme = self.cfg.field_scheme;
        let tag = match scheme {
            FieldScheme::Environment => "env",
            FieldScheme::GlobalCancel => "global",
        };
        let make = |name: &str, prep: StateLabel, meas: StateLabel, cycles: Vec<usize>| -> Result<CurveTask> {
            Ok(CurveTask {
                name: format!("field_{i}_{tag}_{name}"),
                setting: MeasSetting::new(vec![i], vec![prep], vec![meas])?,
                schedule: ScheduleKind::Field(i, scheme),
                cycles,
            })
        };
        let grid = self.cfg.cycle_grid();
        let tasks = vec![make("0_to_0", Zero, Zero, grid.clone())?, make("p_to_p", Plus, Plus, grid)?];
        let sims: Vec<SimulatedCurve> = par::map_collect(tasks.iter().collect(), |t| self.simulate(t, err))
            .into_iter()
            .collect::<Result<_>>()?;
        let mut pulses = PulseCount::default();
        for s in &sims {
            pulses += s.pulses;
        }

        let mut flags = Vec::new();
        let fit = fit_local_field(&sims[0].record, &sims[1].record);
        let names = ["x", "y", "z"].map(|a| format!("b_{i}_{a}"));
        let truth = self.system.field_vector(i);
        let mut curves: Vec<CurveOutput> = sims
            .iter()
            .zip(&tasks)
            .map(|(s, t)| CurveOutput {
                name: t.name.clone(),
                times: s.times.clone(),
                p_true: s.p_true.clone(),
                record: s.record.clone(),
                p_fit: vec![f64::NAN; s.times.len()],
                purity: s.purity.clone(),
            })
            .collect();
        let fit = match fit {
            Ok(f) => f,
            Err(_) => {
                let estimates = (0..3)
                    .map(|k| ParamEstimate {
                        name: names[k].clone(),
                        truth: Some(truth[k]),
                        estimate: f64::NAN,
                        sigma: f64::NAN,
                        flags: vec!["fit-failed".into()],
                    })
                    .collect();
                return Ok(TomographyResult {
                    estimates,
                    curves,
                    pulses,
                });
            }
        };
        curves[0].p_fit = curves[0].times.iter().map(|&t| fit.model_zz(t)).collect();
        curves[1].p_fit = curves[1].times.iter().map(|&t| fit.model_xx(t)).collect();
        if !fit.converged {
            flags.push("not-converged".to_string());
        }
        if fit.discriminant_clamped {
            flags.push("discriminant-clamped".to_string());
        }

        // sign measurement at the cycle count closest to b̂T* = π/4
        let mut sign_records: Option<(ShotRecord, ShotRecord, f64)> = None;
        if let Some(t_target) = sign_time(fit.b) {
            let cap = 4 * self.cfg.cycle_grid().last().copied().unwrap_or(1);
            let nc = ((t_target / (8.0 * self.cfg.tau_j)).round() as usize).clamp(1, cap);
            let sign_tasks = vec![
                make("p_to_0", Plus, Zero, vec![nc])?,
                make("i_to_0", PlusI, Zero, vec![nc])?,
            ];
            let s: Vec<SimulatedCurve> = par::map_collect(sign_tasks.iter().collect(), |t| self.simulate(t, err))
                .into_iter()
                .collect::<Result<_>>()?;
            for c in &s {
                pulses += c.pulses;
            }
            let t_star = s[0].times[0];
            for (c, t) in s.iter().zip(&sign_tasks) {
                curves.push(CurveOutput {
                    name: t.name.clone(),
                    times: c.times.clone(),
                    p_true: c.p_true.clone(),
                    record: c.record.clone(),
                    p_fit: vec![f64::NAN],
                    purity: c.purity.clone(),
                });
            }
            sign_records = Some((s[0].record.clone(), s[1].record.clone(), t_star));
        }

        let signed = match &sign_records {
            Some((rp, ri, t)) => disambiguate_signs(&fit, rp.p_m[0], ri.p_m[0], *t),
            None => disambiguate_signs(&fit, 0.5, 0.5, 0.0),
        };
        if signed.undefined {
            flags.push("sign-undefined".to_string());
        } else if signed.tie {
            flags.push("sign-tie".to_string());
        }
        if let Some((_, _, t)) = &sign_records {
            let n = curves.len();
            curves[n - 2].p_fit = vec![crate::analytic::p_plus_to_0(signed.b, *t)];
            curves[n - 1].p_fit = vec![crate::analytic::p_i_to_0(signed.b, *t)];
        }

        let sigma = self.field_sigma(&sims, &sign_records, i, &mut flags)?;
        let estimates = (0..3)
            .map(|k| ParamEstimate {
                name: names[k].clone(),
                truth: Some(truth[k]),
                estimate: signed.b[k],
                sigma: sigma[k],
                flags: flags.clone(),
            })
            .collect();
        Ok(TomographyResult {
            estimates,
            curves,
            pulses,
        })
    }

    fn field_sigma(
        &self,
        sims: &[SimulatedCurve],
        sign: &Option<(ShotRecord, ShotRecord, f64)>,
        i: usize,
        flags: &mut Vec<String>,
    ) -> Result<[f64; 3]> {
        if self.cfg.bootstrap_resamples == 0 || self.cfg.exact_probabilities {
            return Ok([f64::NAN; 3]);
        }
        let mut records = vec![sims[0].record.clone(), sims[1].record.clone()];
        let t_star = match sign {
            Some((rp, ri, t)) => {
                records.push(rp.clone());
                records.push(ri.clone());
                Some(*t)
            }
            None => None,
        };
        let seed = child_seed(self.cfg.master_seed, &format!("bootstrap/field_{i}"));
        let boot = bootstrap_sigma(&records, self.cfg.bootstrap_resamples, seed, |r| {
            let f = fit_local_field(&r[0], &r[1]).ok()?;
            match t_star {
                Some(t) => Some(disambiguate_signs(&f, r[2].p_m[0], r[3].p_m[0], t).b.to_vec()),
                None => Some(f.magnitudes.to_vec()),
            }
        })?;
        if boot.flagged {
            flags.push("bootstrap-failures".into());
        }
        Ok([0, 1, 2].map(|k| boot.sigma.get(k).copied().unwrap_or(f64::NAN)))
    }

    /// Every selected pair and spin under every configured error model.
    pub fn run_full_scan(&self) -> Result<EstimationReport> {
        let start = Instant::now();
        let pairs = self.selected_pairs();
        let spins = self.selected_spins();
        let mut models = Vec::new();
        for err in &self.cfg.error_models {
            let t0 = Instant::now();
            let pair_results = par::map_collect(pairs.clone(), |(i, j)| self.run_pair_tomography(i, j, err));
            let field_results = par::map_collect(spins.clone(), |i| self.run_field_tomography(i, err));
            let mut report = ModelReport {
                model: *err,
                estimates: Vec::new(),
                curves: Vec::new(),
                pulses: PulseCount::default(),
                wall_clock_s: 0.0,
            };
            for r in pair_results.into_iter().chain(field_results) {
                let r = r?;
                report.estimates.extend(r.estimates);
                report.curves.extend(r.curves);
                report.pulses += r.pulses;
            }
            report.wall_clock_s = t0.elapsed().as_secs_f64();
            models.push(report);
        }
        Ok(EstimationReport {
            n_spins: self.system.n_spins(),
            tau_j: self.cfg.tau_j,
            shots: self.cfg.shots,
            timepoints: self.cfg.timepoints,
            models,
            wall_clock_s: start.elapsed().as_secs_f64(),
        })
    }
}

/// `π / (16τ)`: Nyquist frequency of a grid stepping two XY-8 cycles.
pub fn grid_nyquist(tau: f64, cycle_step: usize) -> f64 {
    PI / (8.0 * tau * cycle_step as f64)
}

/// Groups estimates by name for lookups in tests and tools.
pub fn by_name(estimates: &[ParamEstimate]) -> BTreeMap<&str, &ParamEstimate> {
    estimates.iter().map(|e| (e.name.as_str(), e)).collect()
}
