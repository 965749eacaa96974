//! Self-check suites: dense-matrix oracle equivalence, remnant-error
//! scaling, and the term-survival table of the axis variants.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::two_spin_unitary;
use crate::error::{invalid, Result};
use crate::evolution::{
    reduced_density, run_schedule, trace_distance, EnvInit, Propagator, QuantumState,
};
use crate::measurement::product_ket;
use crate::pauli::{Mat2, PauliAxis, StateLabel, C64, ONE, ZERO};
use crate::schedule::{
    environment_sequence, global_cancel_sequence, pair_sequence_with, realize_pulses, AxisVariant,
    DdFamily, ErrorKind, EventRealization, PulseErrorModel, PulseSchedule,
};
use crate::seed::child_rng;
use crate::spin_system::SpinSystem;

/// `A ⊗ B`
fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    DMatrix::from_fn(ra * rb, ca * cb, |r, c| a[(r / rb, c / cb)] * b[(r % rb, c % cb)])
}

/// `u` on qubit `q` of `n`, identity elsewhere (qubit 0 leftmost).
pub fn embed(u: &Mat2, q: usize, n: usize) -> DMatrix<C64> {
    let mut out = DMatrix::from_element(1, 1, ONE);
    let eye = DMatrix::<C64>::identity(2, 2);
    let u = DMatrix::from_fn(2, 2, |r, c| u[(r, c)]);
    for k in 0..n {
        out = kron(&out, if k == q { &u } else { &eye });
    }
    out
}

/// Dense Hamiltonian assembled from Kronecker products of Pauli matrices.
pub fn dense_hamiltonian(sys: &SpinSystem) -> DMatrix<C64> {
    let n = sys.n_spins();
    let dim = 1 << n;
    let mut h = DMatrix::from_element(dim, dim, ZERO);
    for (c, ops) in sys.terms() {
        let mut term = DMatrix::<C64>::identity(dim, dim);
        for (q, a) in ops {
            term = embed(&a.matrix(), q, n) * term;
        }
        h += term * C64::from(c);
    }
    h
}

/// `exp(−iHt)` by Hermitian eigendecomposition.
pub fn dense_propagator(h: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
    let eig = h.clone().symmetric_eigen();
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::from_polar(1.0, -l * t)));
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

/// Dense reference run of `sched` with pre-drawn pulses.
pub fn dense_run(
    sys: &SpinSystem,
    sched: &PulseSchedule,
    pulses: &[EventRealization],
    psi0: &DVector<C64>,
) -> DVector<C64> {
    let n = sys.n_spins();
    let h = dense_hamiltonian(sys);
    let half = sched.tau() / 2.0;
    let mut psi = psi0.clone();
    let mut now = 0u64;
    for (event, realized) in sched.events().iter().zip(pulses) {
        psi = dense_propagator(&h, (event.half_steps - now) as f64 * half) * psi;
        now = event.half_steps;
        for (q, u) in realized {
            psi = embed(u, *q, n) * psi;
        }
    }
    dense_propagator(&h, (sched.total_half_steps() - now) as f64 * half) * psi
}

/// `√(1 − |⟨a|b⟩|²)` for normalized states, evaluated from the
/// phase-aligned difference so that tiny distances keep full precision.
pub fn pure_trace_distance(a: &DVector<C64>, b: &DVector<C64>) -> f64 {
    let c = a.dotc(b);
    let phase = if c.norm() > 0.0 { c / c.norm() } else { ONE };
    let d = (a - b * phase.conj()).norm_squared();
    (0.5 * d * (2.0 - 0.5 * d)).max(0.0).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCase {
    pub n_spins: usize,
    pub schedule: String,
    pub error_model: String,
    pub trace_distance: f64,
}

/// Random small systems, schedules, pulse-error seeds, and initial states,
/// each run through both the sparse propagator and the dense oracle.
pub fn oracle_equivalence(n_cases: usize, seed: u64) -> Result<Vec<OracleCase>> {
    let mut cases = Vec::with_capacity(n_cases);
    for k in 0..n_cases {
        let mut rng = child_rng(seed, &format!("oracle/{k}"));
        let n = rng.random_range(2..=4usize);
        let sys = SpinSystem::random_instance(n, rng.random())?;
        let tau = rng.random_range(0.01..0.1);
        let cycles = rng.random_range(1..=4usize);
        let i = rng.random_range(0..n);
        let j = (i + rng.random_range(1..n)) % n;
        let (sched, label) = match rng.random_range(0..4) {
            0 | 1 => {
                let v = AxisVariant::ALL[rng.random_range(0..3)];
                let fam = if rng.random_bool(0.5) { DdFamily::Xy8 } else { DdFamily::Xy4 };
                (pair_sequence_with(i, j, v, fam, cycles, tau)?, format!("pair({i},{j},{v},{fam:?})"))
            }
            2 => (environment_sequence(i, n, cycles, tau)?, format!("environment({i})")),
            _ => (global_cancel_sequence(i, n, cycles, tau)?, format!("global-cancel({i})")),
        };
        let kind = [ErrorKind::Npe, ErrorKind::Sae, ErrorKind::Rae, ErrorKind::Rre][rng.random_range(0..4)];
        let err = PulseErrorModel::new(kind, rng.random_range(0.0..0.1))?;
        let psi0 = QuantumState::prepare(n, &[], EnvInit::RandomProduct { seed: rng.random() })?;
        let err_seed: u64 = rng.random();

        let prop = Propagator::new(&sys, tau, 1e-13)?;
        let mut draw = child_rng(err_seed, "pulses");
        let fast = run_schedule(&psi0, &prop, &sched, &err, &mut draw)?;
        let mut draw = child_rng(err_seed, "pulses");
        let pulses = realize_pulses(&sched, &err, &mut draw);
        let reference = dense_run(&sys, &sched, &pulses, &DVector::from_column_slice(psi0.amplitudes()));
        cases.push(OracleCase {
            n_spins: n,
            schedule: label,
            error_model: err.label(),
            trace_distance: pure_trace_distance(&DVector::from_column_slice(fast.amplitudes()), &reference),
        });
    }
    Ok(cases)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingResult {
    pub family: DdFamily,
    pub taus: Vec<f64>,
    pub deviations: Vec<f64>,
    pub slope: f64,
}

/// Interval grid of the scaling suite. Larger `τ` leaves the regime where
/// `‖H‖·τ_cycle ≪ 1` for all-to-all systems of eight spins.
pub const SCALING_TAUS: [f64; 4] = [0.000625, 0.00125, 0.0025, 0.005];
/// Pulses per run in the scaling suite (two XY-8 or four XY-4 cycles).
pub const SCALING_PULSES: usize = 16;

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Trace distance between the simulated two-spin reduced state and the
/// ideal decoupled evolution, after `n_pulses` pulses of a pair sequence,
/// for each `τ`.
pub fn remnant_scaling(
    sys: &SpinSystem,
    pair: (usize, usize),
    family: DdFamily,
    taus: &[f64],
    n_pulses: usize,
) -> Result<ScalingResult> {
    let (i, j) = pair;
    let per = family.pulses_per_cycle();
    if n_pulses % per != 0 || n_pulses == 0 {
        return Err(invalid(format!("{n_pulses} pulses is not a whole number of cycles")));
    }
    let cycles = n_pulses / per;
    let labels = [StateLabel::Plus, StateLabel::PlusI];
    let ket = product_ket(&labels);
    let (c1, c2, c3) = (
        sys.coupling(i, j, PauliAxis::X, PauliAxis::X),
        sys.coupling(i, j, PauliAxis::Y, PauliAxis::Y),
        sys.coupling(i, j, PauliAxis::Z, PauliAxis::Z),
    );
    let mut deviations = Vec::with_capacity(taus.len());
    for &tau in taus {
        let sched = pair_sequence_with(i, j, AxisVariant::XxYy, family, cycles, tau)?;
        let prop = Propagator::new(sys, tau, 1e-14)?;
        let psi0 = QuantumState::prepare(sys.n_spins(), &[(i, labels[0]), (j, labels[1])], EnvInit::Zero)?;
        let mut rng = child_rng(0, "unused");
        let psi = run_schedule(&psi0, &prop, &sched, &PulseErrorModel::NONE, &mut rng)?;
        let rho = reduced_density(&psi, &[i, j])?;
        let ideal = two_spin_unitary(c1, c2, c3, sched.total_time()) * &ket;
        deviations.push(trace_distance(&rho, &(&ideal * ideal.adjoint())));
    }
    Ok(ScalingResult {
        family,
        taus: taus.to_vec(),
        slope: loglog_slope(taus, &deviations),
        deviations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCase {
    pub term: (PauliAxis, PauliAxis),
    pub variant: AxisVariant,
    /// Commutes with both pulse operators of the variant.
    pub expected: bool,
    /// Simulated evolution is closer to the full term than to no evolution.
    pub observed: bool,
    /// Distance to whichever prediction matched.
    pub distance: f64,
}

fn commutes(a: &DMatrix<C64>, b: &DMatrix<C64>) -> bool {
    (a * b - b * a).iter().all(|z| z.norm() < 1e-12)
}

/// Every single-term two-spin system under every axis variant.
pub fn survival_table(seed: u64) -> Result<Vec<SurvivalCase>> {
    let (tau, cycles, value) = (0.01, 25, 0.6);
    let mut out = Vec::with_capacity(27);
    for a in PauliAxis::ALL {
        for b in PauliAxis::ALL {
            let mut sys = SpinSystem::new(2)?;
            sys.set_coupling(0, 1, a, b, value)?;
            let term = kron(&dm(&a.matrix()), &dm(&b.matrix()));
            let prop = Propagator::new(&sys, tau, 1e-13)?;
            for v in AxisVariant::ALL {
                let ((p1a, p1b), (p2a, p2b)) = v.pulse_axes();
                let p1 = kron(&dm(&p1a.matrix()), &dm(&p1b.matrix()));
                let p2 = kron(&dm(&p2a.matrix()), &dm(&p2b.matrix()));
                let expected = commutes(&term, &p1) && commutes(&term, &p2);

                let sched = pair_sequence_with(0, 1, v, DdFamily::Xy8, cycles, tau)?;
                let psi0 = QuantumState::prepare(2, &[], EnvInit::RandomProduct { seed })?;
                let mut rng = child_rng(seed, "unused");
                let psi = run_schedule(&psi0, &prop, &sched, &PulseErrorModel::NONE, &mut rng)?;
                let got = DVector::from_column_slice(psi.amplitudes());
                let start = DVector::from_column_slice(psi0.amplitudes());
                let full = dense_propagator(&(term.clone() * C64::from(value)), sched.total_time()) * &start;
                let d_full = pure_trace_distance(&got, &full);
                let d_none = pure_trace_distance(&got, &start);
                out.push(SurvivalCase {
                    term: (a, b),
                    variant: v,
                    expected,
                    observed: d_full < d_none,
                    distance: d_full.min(d_none),
                });
            }
        }
    }
    Ok(out)
}

fn dm(m: &Mat2) -> DMatrix<C64> {
    DMatrix::from_fn(2, 2, |r, c| m[(r, c)])
}
