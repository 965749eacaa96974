//! Outcome probabilities for product-state preparation/measurement settings
//! and binomial shot sampling.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::pauli::{StateLabel, C64};

/// Preparation and measurement labels for one or two target qubits
/// (first label is spin i, second spin j).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasSetting {
    pub targets: Vec<usize>,
    pub prepared: Vec<StateLabel>,
    pub measured: Vec<StateLabel>,
}

impl MeasSetting {
    pub fn new(targets: Vec<usize>, prepared: Vec<StateLabel>, measured: Vec<StateLabel>) -> Result<Self> {
        if targets.is_empty() || targets.len() > 2 {
            return Err(invalid("a setting addresses one or two qubits"));
        }
        if prepared.len() != targets.len() || measured.len() != targets.len() {
            return Err(invalid("label count must match target count"));
        }
        if targets.len() == 2 && targets[0] == targets[1] {
            return Err(invalid("targets must be distinct"));
        }
        Ok(Self {
            targets,
            prepared,
            measured,
        })
    }

    /// `(qubit, label)` pairs for state preparation.
    pub fn preparation(&self) -> Vec<(usize, StateLabel)> {
        self.targets.iter().copied().zip(self.prepared.iter().copied()).collect()
    }

    /// Compact name such as `pi_to_00`.
    pub fn slug(&self) -> String {
        let p: String = self.prepared.iter().map(|l| l.slug()).collect();
        let m: String = self.measured.iter().map(|l| l.slug()).collect();
        format!("{p}_to_{m}")
    }
}

/// Kronecker product of kets, first label most significant.
pub fn product_ket(labels: &[StateLabel]) -> DVector<C64> {
    let mut v = DVector::from_element(1, C64::new(1.0, 0.0));
    for l in labels {
        let k = l.ket();
        let mut next = DVector::from_element(v.len() * 2, C64::new(0.0, 0.0));
        for (i, a) in v.iter().enumerate() {
            next[2 * i] = a * k[0];
            next[2 * i + 1] = a * k[1];
        }
        v = next;
    }
    v
}

/// `⟨m|ρ|m⟩` for the measured product state, clamped to `[0, 1]`.
pub fn outcome_probability(rho: &DMatrix<C64>, measured: &[StateLabel]) -> Result<f64> {
    let dim = 1usize << measured.len();
    if rho.nrows() != dim || rho.ncols() != dim {
        return Err(invalid(format!(
            "density matrix is {}×{}, setting needs {dim}×{dim}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    let m = product_ket(measured);
    let p = m.dotc(&(rho * &m)).re;
    Ok(p.clamp(0.0, 1.0))
}

/// Binomially sampled probability estimate at one time point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotSample {
    pub p_m: f64,
    pub sigma_m: f64,
    pub count: u64,
}

pub fn binomial_sigma(p: f64, n_shots: u64) -> f64 {
    (p * (1.0 - p) / n_shots as f64).max(0.0).sqrt()
}

/// Draws `k ~ Binomial(n_shots, p)` and returns `p_m = k/n_shots` with
/// `σ_m = √(p_m(1−p_m)/n_shots)`.
pub fn sample_shots<R: Rng + ?Sized>(p: f64, n_shots: u64, rng: &mut R) -> Result<ShotSample> {
    if n_shots == 0 {
        return Err(invalid("n_shots must be at least 1"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("probability {p} outside [0, 1]")));
    }
    let count = Binomial::new(n_shots, p)
        .map_err(|e| invalid(e.to_string()))?
        .sample(rng);
    let p_m = count as f64 / n_shots as f64;
    Ok(ShotSample {
        p_m,
        sigma_m: binomial_sigma(p_m, n_shots),
        count,
    })
}

/// Measured probability curve over a time grid.
///
/// `n_shots == None` marks a noiseless record holding exact probabilities
/// (the infinite-shot limit); its `sigma_m` are all zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub times: Vec<f64>,
    pub p_m: Vec<f64>,
    pub sigma_m: Vec<f64>,
    pub n_shots: Option<u64>,
}

impl ShotRecord {
    /// Samples every point of `probs` with `n_shots` shots.
    pub fn sample<R: Rng + ?Sized>(times: &[f64], probs: &[f64], n_shots: u64, rng: &mut R) -> Result<Self> {
        if times.len() != probs.len() {
            return Err(invalid("times and probabilities differ in length"));
        }
        let mut p_m = Vec::with_capacity(probs.len());
        let mut sigma_m = Vec::with_capacity(probs.len());
        for &p in probs {
            let s = sample_shots(p, n_shots, rng)?;
            p_m.push(s.p_m);
            sigma_m.push(s.sigma_m);
        }
        Ok(Self {
            times: times.to_vec(),
            p_m,
            sigma_m,
            n_shots: Some(n_shots),
        })
    }

    pub fn noiseless(times: &[f64], probs: &[f64]) -> Result<Self> {
        if times.len() != probs.len() {
            return Err(invalid("times and probabilities differ in length"));
        }
        Ok(Self {
            times: times.to_vec(),
            p_m: probs.to_vec(),
            sigma_m: vec![0.0; probs.len()],
            n_shots: None,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// CSV with columns `T, p_m, sigma_m, n_shots` (`n_shots` empty when
    /// noiseless).
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["T", "p_m", "sigma_m", "n_shots"])?;
        let shots = self.n_shots.map(|n| n.to_string()).unwrap_or_default();
        for k in 0..self.len() {
            w.write_record([
                self.times[k].to_string(),
                self.p_m[k].to_string(),
                self.sigma_m[k].to_string(),
                shots.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{reduced_density, EnvInit, QuantumState};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn projector_on_itself_is_one() {
        let mut rho = DMatrix::from_element(4, 4, C64::new(0.0, 0.0));
        rho[(0, 0)] = C64::new(1.0, 0.0);
        let p = outcome_probability(&rho, &[StateLabel::Zero, StateLabel::Zero]).unwrap();
        assert_eq!(p, 1.0);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let rho = DMatrix::from_element(2, 2, C64::new(0.5, 0.0));
        assert!(outcome_probability(&rho, &[StateLabel::Zero, StateLabel::Zero]).is_err());
    }

    #[test]
    fn pure_state_agrees_with_overlap() {
        let psi = QuantumState::prepare(3, &[(0, StateLabel::PlusI), (2, StateLabel::Minus)], EnvInit::Zero)
            .unwrap();
        let rho = reduced_density(&psi, &[0, 2]).unwrap();
        let labels = [StateLabel::Plus, StateLabel::Minus];
        let p = outcome_probability(&rho, &labels).unwrap();
        let overlap = {
            let a = StateLabel::Plus.ket().dotc(&StateLabel::PlusI.ket()).norm_sqr();
            let b = StateLabel::Minus.ket().dotc(&StateLabel::Minus.ket()).norm_sqr();
            a * b
        };
        assert!((p - overlap).abs() < 1e-12);
        assert!((p - 0.5).abs() < 1e-12);
    }

    #[test]
    fn endpoints_are_exact() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let s = sample_shots(0.0, 100, &mut rng).unwrap();
        assert_eq!((s.p_m, s.sigma_m), (0.0, 0.0));
        let s = sample_shots(1.0, 100, &mut rng).unwrap();
        assert_eq!((s.p_m, s.sigma_m), (1.0, 0.0));
    }

    #[test]
    fn half_probability_statistics() {
        let n = 10_000;
        let vals: Vec<f64> = (0..n)
            .map(|seed| {
                let mut rng = ChaCha20Rng::seed_from_u64(seed);
                sample_shots(0.5, 100, &mut rng).unwrap().p_m
            })
            .collect();
        let mean = vals.iter().sum::<f64>() / n as f64;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!((mean - 0.5).abs() <= 0.002, "{mean}");
        assert!((sd - 0.05).abs() <= 0.002, "{sd}");
    }

    #[test]
    fn sampled_counts_are_integral() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let rec = ShotRecord::sample(&[0.1, 0.2, 0.3], &[0.2, 0.7, 0.95], 100, &mut rng).unwrap();
        for (p, s) in rec.p_m.iter().zip(&rec.sigma_m) {
            assert!(((p * 100.0) - (p * 100.0).round()).abs() < 1e-9);
            assert!((s - binomial_sigma(*p, 100)).abs() < 1e-15);
        }
    }

    #[test]
    fn invalid_probability_rejected() {
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        assert!(sample_shots(1.2, 10, &mut rng).is_err());
        assert!(sample_shots(0.5, 0, &mut rng).is_err());
    }

    #[test]
    fn csv_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rec.csv");
        let rec = ShotRecord::noiseless(&[0.16, 0.32], &[0.25, 0.5]).unwrap();
        rec.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "T,p_m,sigma_m,n_shots");
        assert_eq!(lines.next().unwrap(), "0.16,0.25,0,");
    }
}
