//! State-vector propagation under `exp(−iHτ)` interleaved with
//! instantaneous single-qubit pulses, and partial traces.

use std::sync::Arc;

use nalgebra::{DMatrix, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, TomoError};
use crate::operator::{bit_of, PauliSum};
use crate::pauli::{Mat2, StateLabel, C64, ONE, ZERO};
use crate::schedule::{realize_event, PulseErrorModel, PulseSchedule};
use crate::spin_system::SpinSystem;

/// Largest `n_spins` the state-vector engine accepts.
pub const STATE_CAP: usize = 14;

const MAX_TAYLOR_TERMS: usize = 80;
/// Largest `‖H‖·dt` handled by one Taylor sub-step.
const MAX_STEP_NORM: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    n_spins: usize,
    amps: Vec<C64>,
}

/// Initial state of the spins that are not prepared explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum EnvInit {
    /// `|0…0⟩`
    #[default]
    Zero,
    /// Haar-random single-qubit states drawn from `seed`.
    RandomProduct { seed: u64 },
}

impl QuantumState {
    /// `|0…0⟩`
    pub fn zero(n_spins: usize) -> Result<Self> {
        check_cap(n_spins)?;
        let mut amps = vec![ZERO; 1 << n_spins];
        amps[0] = ONE;
        Ok(Self { n_spins, amps })
    }

    /// Normalizes `amps`; the length must be a power of two.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(invalid(format!("amplitude count {len} is not 2^N")));
        }
        let n_spins = len.trailing_zeros() as usize;
        check_cap(n_spins)?;
        let mut s = Self { n_spins, amps };
        let norm = s.norm();
        if norm == 0.0 {
            return Err(invalid("zero vector is not a state"));
        }
        s.amps.iter_mut().for_each(|a| *a /= norm);
        Ok(s)
    }

    /// Kronecker product of single-qubit kets (qubit 0 first).
    pub fn product(kets: &[Vector2<C64>]) -> Result<Self> {
        if kets.is_empty() {
            return Err(invalid("product state needs at least one qubit"));
        }
        check_cap(kets.len())?;
        let mut amps = vec![ONE];
        for k in kets {
            let mut next = Vec::with_capacity(amps.len() * 2);
            for a in &amps {
                next.push(a * k[0]);
                next.push(a * k[1]);
            }
            amps = next;
        }
        Self::from_amplitudes(amps)
    }

    /// Product state with `prepared` qubits set to the given labels and every
    /// other qubit drawn from `env`.
    pub fn prepare(n_spins: usize, prepared: &[(usize, StateLabel)], env: EnvInit) -> Result<Self> {
        check_cap(n_spins)?;
        let mut kets: Vec<Vector2<C64>> = match env {
            EnvInit::Zero => vec![StateLabel::Zero.ket(); n_spins],
            EnvInit::RandomProduct { seed } => {
                let mut rng = ChaCha20Rng::seed_from_u64(seed);
                (0..n_spins).map(|_| random_qubit(&mut rng)).collect()
            }
        };
        for (k, &(q, label)) in prepared.iter().enumerate() {
            if q >= n_spins {
                return Err(invalid(format!("qubit {q} out of range for {n_spins} spins")));
            }
            if prepared[..k].iter().any(|&(p, _)| p == q) {
                return Err(invalid(format!("qubit {q} prepared twice")));
            }
            kets[q] = label.ket();
        }
        Self::product(&kets)
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &QuantumState) -> C64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Applies a 2×2 unitary to one qubit in place.
    pub fn apply_single(&mut self, q: usize, u: &Mat2) {
        let bit = bit_of(self.n_spins, q);
        let dim = self.amps.len();
        let (u00, u01, u10, u11) = (u[(0, 0)], u[(0, 1)], u[(1, 0)], u[(1, 1)]);
        let mut base = 0;
        while base < dim {
            // iterate over indices with `bit` clear
            for idx in base..base + bit {
                let a0 = self.amps[idx];
                let a1 = self.amps[idx | bit];
                self.amps[idx] = u00 * a0 + u01 * a1;
                self.amps[idx | bit] = u10 * a0 + u11 * a1;
            }
            base += 2 * bit;
        }
    }
}

fn random_qubit<R: Rng>(rng: &mut R) -> Vector2<C64> {
    use rand_distr::{Distribution, UnitSphere};
    let [x, y, z]: [f64; 3] = UnitSphere.sample(rng);
    let theta = z.clamp(-1.0, 1.0).acos();
    let phi = y.atan2(x);
    Vector2::new(
        C64::from((theta / 2.0).cos()),
        C64::from_polar((theta / 2.0).sin(), phi),
    )
}

fn check_cap(n_spins: usize) -> Result<()> {
    if n_spins > STATE_CAP {
        return Err(TomoError::ResourceLimit {
            what: "state-vector qubits",
            requested: n_spins,
            cap: STATE_CAP,
        });
    }
    if n_spins == 0 {
        return Err(invalid("n_spins must be positive"));
    }
    Ok(())
}

/// Applies `exp(−iHτ)` (and its fractional powers) to state vectors.
///
/// Uses a truncated Taylor series of the sparse Pauli-sum operator. The
/// series is cut once the a-posteriori tail bound
/// `‖term_k‖ · r/(1−r)`, `r = ‖H‖·dt/(k+2)`, drops below the per-step
/// budget, with `‖H‖` bounded by the Gershgorin row sum.
#[derive(Debug, Clone)]
pub struct Propagator {
    op: Arc<PauliSum>,
    tau: f64,
    tol: f64,
}

impl Propagator {
    pub fn new(sys: &SpinSystem, tau: f64, tol: f64) -> Result<Self> {
        check_cap(sys.n_spins())?;
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(invalid(format!("τ must be positive, got {tau}")));
        }
        if !(tol > 0.0) {
            return Err(invalid(format!("tolerance must be positive, got {tol}")));
        }
        Ok(Self {
            op: Arc::new(PauliSum::from_system(sys)),
            tau,
            tol,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn n_spins(&self) -> usize {
        self.op.n_qubits()
    }

    pub fn operator(&self) -> &PauliSum {
        &self.op
    }

    /// `ψ ← exp(−iHτ) ψ`
    pub fn apply(&self, psi: &mut QuantumState) {
        self.apply_time(psi, self.tau);
    }

    /// `ψ ← exp(−iHτ/2) ψ`
    pub fn apply_half(&self, psi: &mut QuantumState) {
        self.apply_time(psi, self.tau / 2.0);
    }

    /// `ψ ← exp(−iHt) ψ` for arbitrary `t ≥ 0`, to within `tol` in 2-norm.
    pub fn apply_time(&self, psi: &mut QuantumState, t: f64) {
        assert_eq!(psi.n_spins, self.op.n_qubits(), "state/propagator size mismatch");
        if t == 0.0 {
            return;
        }
        let bound = self.op.norm_bound();
        let n_sub = ((bound * t.abs()) / MAX_STEP_NORM).ceil().max(1.0) as usize;
        let dt = t / n_sub as f64;
        let budget = self.tol / n_sub as f64;
        let x = bound * dt.abs();
        let dim = psi.dim();
        let mut term = vec![ZERO; dim];
        let mut next = vec![ZERO; dim];
        for _ in 0..n_sub {
            term.copy_from_slice(&psi.amps);
            for k in 1..=MAX_TAYLOR_TERMS {
                self.op.apply_into(&term, &mut next);
                let scale = C64::new(0.0, -dt / k as f64);
                let mut norm_sq = 0.0;
                for ((t_k, n_k), acc) in term.iter_mut().zip(&next).zip(psi.amps.iter_mut()) {
                    *t_k = n_k * scale;
                    *acc += *t_k;
                    norm_sq += t_k.norm_sqr();
                }
                let r = x / (k as f64 + 2.0);
                if r < 1.0 && norm_sq.sqrt() * r / (1.0 - r) <= budget {
                    break;
                }
            }
        }
    }
}

/// Applies one layer of simultaneous single-qubit unitaries.
pub fn apply_pulse(psi: &mut QuantumState, targets: &[(usize, Mat2)]) -> Result<()> {
    for (k, (q, _)) in targets.iter().enumerate() {
        if *q >= psi.n_spins {
            return Err(invalid(format!("pulse target {q} out of range")));
        }
        if targets[..k].iter().any(|(p, _)| p == q) {
            return Err(invalid(format!("duplicate pulse target {q}")));
        }
    }
    for (q, u) in targets {
        psi.apply_single(*q, u);
    }
    Ok(())
}

/// Composes repeated targets of one event into one unitary per qubit
/// (later pulses act after earlier ones).
fn merge_event(realized: Vec<(usize, Mat2)>) -> Vec<(usize, Mat2)> {
    let mut merged: Vec<(usize, Mat2)> = Vec::with_capacity(realized.len());
    for (q, u) in realized {
        match merged.iter_mut().find(|(p, _)| *p == q) {
            Some((_, acc)) => *acc = u * *acc,
            None => merged.push((q, u)),
        }
    }
    merged
}

/// Number of propagator half intervals spanned by `half_steps` schedule
/// half intervals.
fn propagator_halves(sched: &PulseSchedule, prop: &Propagator, half_steps: u64) -> Result<u64> {
    let ratio = sched.tau() / prop.tau();
    let m = half_steps as f64 * ratio;
    let rounded = m.round();
    if (m - rounded).abs() > 1e-9 * m.max(1.0) {
        return Err(TomoError::ScheduleMismatch(format!(
            "interval of {half_steps}·τ_s/2 (τ_s = {}) is not a multiple of τ/2 = {}",
            sched.tau(),
            prop.tau() / 2.0
        )));
    }
    Ok(rounded as u64)
}

fn evolve_halves(psi: &mut QuantumState, prop: &Propagator, halves: u64) {
    for _ in 0..halves / 2 {
        prop.apply(psi);
    }
    if halves % 2 == 1 {
        prop.apply_half(psi);
    }
}

/// Runs the full schedule from `psi0`: free evolution between events,
/// realized pulses at each event, free evolution to the total time.
pub fn run_schedule<R: Rng + ?Sized>(
    psi0: &QuantumState,
    prop: &Propagator,
    sched: &PulseSchedule,
    err: &PulseErrorModel,
    rng: &mut R,
) -> Result<QuantumState> {
    let mut out = run_schedule_checkpoints(psi0, prop, sched, err, rng, &[sched.total_half_steps()])?;
    Ok(out.pop().expect("one checkpoint requested"))
}

/// Like [`run_schedule`], but returns a copy of the state at each
/// checkpoint offset (in schedule half intervals). Pulses at exactly a
/// checkpoint offset are applied before the copy is taken. Checkpoints
/// must be non-decreasing and within the schedule.
pub fn run_schedule_checkpoints<R: Rng + ?Sized>(
    psi0: &QuantumState,
    prop: &Propagator,
    sched: &PulseSchedule,
    err: &PulseErrorModel,
    rng: &mut R,
    checkpoints: &[u64],
) -> Result<Vec<QuantumState>> {
    if psi0.n_spins != prop.n_spins() {
        return Err(invalid("state and propagator sizes differ"));
    }
    if checkpoints.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("checkpoints must be non-decreasing"));
    }
    if checkpoints.last().is_some_and(|&c| c > sched.total_half_steps()) {
        return Err(invalid("checkpoint beyond schedule end"));
    }
    for e in sched.events() {
        if e.targets.iter().any(|t| t.q >= psi0.n_spins) {
            return Err(invalid("schedule targets a qubit outside the state"));
        }
    }
    // validate every interval before doing any work
    let mut prev = 0;
    for e in sched.events() {
        propagator_halves(sched, prop, e.half_steps - prev)?;
        prev = e.half_steps;
    }
    propagator_halves(sched, prop, sched.total_half_steps() - prev)?;

    let mut psi = psi0.clone();
    let mut now = 0u64;
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut cp = checkpoints.iter().peekable();
    for event in sched.events() {
        while let Some(&&c) = cp.peek() {
            if c >= event.half_steps {
                break;
            }
            evolve_halves(&mut psi, prop, propagator_halves(sched, prop, c - now)?);
            now = c;
            out.push(psi.clone());
            cp.next();
        }
        if out.len() == checkpoints.len() {
            return Ok(out);
        }
        evolve_halves(&mut psi, prop, propagator_halves(sched, prop, event.half_steps - now)?);
        now = event.half_steps;
        let realized = merge_event(realize_event(event, err, rng));
        apply_pulse(&mut psi, &realized)?;
    }
    for &c in cp {
        evolve_halves(&mut psi, prop, propagator_halves(sched, prop, c - now)?);
        now = c;
        out.push(psi.clone());
    }
    Ok(out)
}

/// Reduced density matrix of the qubits in `keep`, with `keep[0]` as the
/// most significant bit of the result.
pub fn reduced_density(psi: &QuantumState, keep: &[usize]) -> Result<DMatrix<C64>> {
    let n = psi.n_spins;
    for (k, &q) in keep.iter().enumerate() {
        if q >= n {
            return Err(invalid(format!("qubit {q} out of range")));
        }
        if keep[..k].contains(&q) {
            return Err(invalid(format!("qubit {q} kept twice")));
        }
    }
    let kdim = 1usize << keep.len();
    let env: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let edim = 1usize << env.len();
    // amplitude matrix M[k][e]; ρ = M M†
    let mut m = DMatrix::from_element(kdim, edim, ZERO);
    for (idx, a) in psi.amps.iter().enumerate() {
        let mut kbits = 0;
        for &q in keep {
            kbits = (kbits << 1) | usize::from(idx & bit_of(n, q) != 0);
        }
        let mut ebits = 0;
        for &q in &env {
            ebits = (ebits << 1) | usize::from(idx & bit_of(n, q) != 0);
        }
        m[(kbits, ebits)] = *a;
    }
    Ok(&m * m.adjoint())
}

/// `Tr ρ²`
pub fn purity(rho: &DMatrix<C64>) -> f64 {
    rho.iter().map(|z| z.norm_sqr()).sum()
}

/// `½ Σ |λ_k(ρ − σ)|`
pub fn trace_distance(rho: &DMatrix<C64>, sigma: &DMatrix<C64>) -> f64 {
    let diff = rho - sigma;
    let herm = (&diff + diff.adjoint()) * C64::from(0.5);
    0.5 * herm.symmetric_eigenvalues().iter().map(|l| l.abs()).sum::<f64>()
}

/// `|ψ⟩⟨ψ|` of a small state vector.
pub fn projector(psi: &nalgebra::DVector<C64>) -> DMatrix<C64> {
    psi * psi.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{PauliAxis, I};
    use crate::schedule::{pair_sequence, AxisVariant, ErrorKind};

    fn close_states(a: &QuantumState, b: &QuantumState, tol: f64) -> bool {
        a.amps.iter().zip(&b.amps).all(|(x, y)| (x - y).norm() <= tol)
    }

    #[test]
    fn zero_hamiltonian_is_identity() {
        let sys = SpinSystem::new(3).unwrap();
        let prop = Propagator::new(&sys, 0.3, 1e-10).unwrap();
        let psi0 = QuantumState::prepare(3, &[(0, StateLabel::Plus), (2, StateLabel::PlusI)], EnvInit::Zero)
            .unwrap();
        let mut psi = psi0.clone();
        prop.apply(&mut psi);
        assert!(close_states(&psi, &psi0, 1e-14));
    }

    #[test]
    fn single_z_field_phases() {
        let mut sys = SpinSystem::new(2).unwrap();
        sys.set_field(0, PauliAxis::Z, 0.7).unwrap();
        let tau = 0.37;
        let prop = Propagator::new(&sys, tau, 1e-12).unwrap();
        let mut psi = QuantumState::prepare(2, &[(0, StateLabel::Plus)], EnvInit::Zero).unwrap();
        prop.apply(&mut psi);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // qubit 0 is the MSB: index 0 = |00⟩, index 2 = |10⟩
        assert!((psi.amps[0] - C64::from_polar(h, -0.7 * tau)).norm() < 1e-12);
        assert!((psi.amps[2] - C64::from_polar(h, 0.7 * tau)).norm() < 1e-12);
    }

    #[test]
    fn two_steps_equal_double_step() {
        let sys = SpinSystem::random_instance(5, 8).unwrap();
        let prop = Propagator::new(&sys, 0.05, 1e-11).unwrap();
        let psi0 = QuantumState::prepare(5, &[], EnvInit::RandomProduct { seed: 3 }).unwrap();
        let mut a = psi0.clone();
        prop.apply(&mut a);
        prop.apply(&mut a);
        let mut b = psi0;
        prop.apply_time(&mut b, 0.1);
        assert!(close_states(&a, &b, 1e-9));
        assert!((a.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn cap_is_enforced() {
        let sys = SpinSystem::new(15).unwrap();
        assert!(matches!(
            Propagator::new(&sys, 0.01, 1e-10),
            Err(TomoError::ResourceLimit { .. })
        ));
    }

    #[test]
    fn x_pulse_twice_restores_state() {
        let mut psi = QuantumState::zero(1).unwrap();
        let x = PulseErrorModel::ideal(PauliAxis::X);
        apply_pulse(&mut psi, &[(0, x)]).unwrap();
        apply_pulse(&mut psi, &[(0, x)]).unwrap();
        assert!((psi.inner(&QuantumState::zero(1).unwrap()).norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sae_leaves_small_population_behind() {
        let err = PulseErrorModel::new(ErrorKind::Sae, 0.05).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let mut psi = QuantumState::zero(1).unwrap();
        apply_pulse(&mut psi, &[(0, err.realize(PauliAxis::X, &mut rng))]).unwrap();
        let p0 = psi.amps[0].norm_sqr();
        let expected = (std::f64::consts::PI * 0.05 / 2.0).sin().powi(2);
        assert!((p0 - expected).abs() < 1e-15);
        assert!((p0 - 6.16e-3).abs() < 1e-5);
        assert!((psi.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn synchronized_flip() {
        let mut psi = QuantumState::zero(2).unwrap();
        let x = PulseErrorModel::ideal(PauliAxis::X);
        apply_pulse(&mut psi, &[(0, x), (1, x)]).unwrap();
        assert!((psi.amps[3].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn duplicate_target_rejected() {
        let mut psi = QuantumState::zero(2).unwrap();
        let x = PulseErrorModel::ideal(PauliAxis::X);
        assert!(apply_pulse(&mut psi, &[(0, x), (0, x)]).is_err());
    }

    #[test]
    fn empty_schedule_is_free_evolution() {
        let sys = SpinSystem::random_instance(3, 4).unwrap();
        let prop = Propagator::new(&sys, 0.02, 1e-11).unwrap();
        let sched = PulseSchedule::new(0.02, vec![], 10).unwrap();
        let psi0 = QuantumState::prepare(3, &[(1, StateLabel::Plus)], EnvInit::Zero).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let out = run_schedule(&psi0, &prop, &sched, &PulseErrorModel::NONE, &mut rng).unwrap();
        let mut expected = psi0;
        prop.apply_time(&mut expected, 0.1);
        assert!(close_states(&out, &expected, 1e-9));
    }

    #[test]
    fn mismatched_interval_is_reported() {
        let sys = SpinSystem::random_instance(2, 4).unwrap();
        let prop = Propagator::new(&sys, 0.02, 1e-11).unwrap();
        let sched = pair_sequence(0, 1, AxisVariant::XxYy, 1, 0.015).unwrap();
        let psi0 = QuantumState::zero(2).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        assert!(matches!(
            run_schedule(&psi0, &prop, &sched, &PulseErrorModel::NONE, &mut rng),
            Err(TomoError::ScheduleMismatch(_))
        ));
    }

    #[test]
    fn checkpoints_match_separate_runs() {
        let sys = SpinSystem::random_instance(3, 9).unwrap();
        let prop = Propagator::new(&sys, 0.05, 1e-11).unwrap();
        let long = pair_sequence(0, 2, AxisVariant::XyYz, 3, 0.05).unwrap();
        let psi0 = QuantumState::prepare(3, &[(0, StateLabel::Plus)], EnvInit::Zero).unwrap();
        let cps: Vec<u64> = (1..=3).map(|c| long.cycle_end(c)).collect();
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let snaps =
            run_schedule_checkpoints(&psi0, &prop, &long, &PulseErrorModel::NONE, &mut rng, &cps).unwrap();
        for c in 1..=3 {
            let short = pair_sequence(0, 2, AxisVariant::XyYz, c, 0.05).unwrap();
            let single = run_schedule(&psi0, &prop, &short, &PulseErrorModel::NONE, &mut rng).unwrap();
            assert!(close_states(&snaps[c - 1], &single, 1e-9));
        }
    }

    #[test]
    fn reduced_density_of_product_state() {
        let psi = QuantumState::prepare(2, &[(1, StateLabel::Plus)], EnvInit::Zero).unwrap();
        let rho = reduced_density(&psi, &[1]).unwrap();
        for z in rho.iter() {
            assert!((z - C64::from(0.5)).norm() < 1e-15);
        }
    }

    #[test]
    fn bell_state_is_maximally_mixed() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = QuantumState::from_amplitudes(vec![C64::from(h), ZERO, ZERO, C64::from(h)]).unwrap();
        let rho = reduced_density(&psi, &[0]).unwrap();
        assert!((purity(&rho) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn partial_trace_ordering_follows_keep() {
        // |0⟩ ⊗ |I⟩ ⊗ |1⟩, keep (2, 1): first factor |1⟩, second |I⟩
        let psi = QuantumState::prepare(3, &[(1, StateLabel::PlusI), (2, StateLabel::One)], EnvInit::Zero)
            .unwrap();
        let rho = reduced_density(&psi, &[2, 1]).unwrap();
        // |1⟩⊗|I⟩ = (|10⟩ + i|11⟩)/√2
        assert!((rho[(2, 2)].re - 0.5).abs() < 1e-15);
        assert!((rho[(3, 2)] - I * 0.5).norm() < 1e-15);
    }

    #[test]
    fn random_product_env_is_normalized_and_seeded() {
        let a = QuantumState::prepare(4, &[(0, StateLabel::Zero)], EnvInit::RandomProduct { seed: 1 }).unwrap();
        let b = QuantumState::prepare(4, &[(0, StateLabel::Zero)], EnvInit::RandomProduct { seed: 1 }).unwrap();
        assert_eq!(a, b);
        assert!((a.norm() - 1.0).abs() < 1e-14);
    }
}
