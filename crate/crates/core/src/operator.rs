//! Sparse Pauli-sum operator stored by bit-flip pattern.
//!
//! Every Pauli string maps a basis state `x` to `x ^ mask` times a phase, so
//! a sum of strings is fully described by, for each distinct `mask`, the
//! matrix elements `⟨y|H|y ^ mask⟩`. For the all-to-all two-body model that
//! is `1 + N + N(N−1)/2` patterns per row.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::par;
use crate::pauli::{PauliAxis, C64, ZERO};
use crate::spin_system::SpinSystem;

#[derive(Debug, Clone)]
pub struct PauliSum {
    n_qubits: usize,
    masks: Vec<usize>,
    /// Row-major `[row][mask]` matrix elements `⟨y|H|y ^ masks[k]⟩`.
    elements: Vec<C64>,
    norm_bound: f64,
}

/// Bit position of `qubit` (qubit 0 is the most significant bit).
#[inline]
pub fn bit_of(n_qubits: usize, qubit: usize) -> usize {
    1 << (n_qubits - 1 - qubit)
}

/// `⟨x ^ mask| P |x⟩` for the Pauli string `ops`.
fn string_phase(n_qubits: usize, ops: &[(usize, PauliAxis)], x: usize) -> C64 {
    let mut phase = C64::new(1.0, 0.0);
    for &(q, a) in ops {
        let set = x & bit_of(n_qubits, q) != 0;
        match a {
            PauliAxis::X => {}
            // σ^y|0⟩ = i|1⟩, σ^y|1⟩ = −i|0⟩
            PauliAxis::Y => phase *= if set { C64::new(0.0, -1.0) } else { C64::new(0.0, 1.0) },
            PauliAxis::Z => {
                if set {
                    phase = -phase
                }
            }
        }
    }
    phase
}

impl PauliSum {
    pub fn from_terms(n_qubits: usize, terms: &[(f64, Vec<(usize, PauliAxis)>)]) -> Self {
        let dim = 1usize << n_qubits;
        let mut mask_index: HashMap<usize, usize> = HashMap::new();
        let mut masks = vec![0usize];
        mask_index.insert(0, 0);
        let term_masks: Vec<usize> = terms
            .iter()
            .map(|(_, ops)| {
                ops.iter()
                    .filter(|(_, a)| *a != PauliAxis::Z)
                    .fold(0, |m, &(q, _)| m ^ bit_of(n_qubits, q))
            })
            .collect();
        for &m in &term_masks {
            mask_index.entry(m).or_insert_with(|| {
                masks.push(m);
                masks.len() - 1
            });
        }
        let width = masks.len();
        let mut elements = vec![ZERO; dim * width];
        for ((coef, ops), &mask) in terms.iter().zip(&term_masks) {
            if *coef == 0.0 {
                continue;
            }
            let k = mask_index[&mask];
            for y in 0..dim {
                let x = y ^ mask;
                elements[y * width + k] += string_phase(n_qubits, ops, x) * *coef;
            }
        }
        let norm_bound = elements
            .chunks(width)
            .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max);
        Self {
            n_qubits,
            masks,
            elements,
            norm_bound,
        }
    }

    pub fn from_system(sys: &SpinSystem) -> Self {
        Self::from_terms(sys.n_spins(), &sys.terms())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// Number of distinct flip patterns (nonzero entries per row, at most).
    pub fn n_patterns(&self) -> usize {
        self.masks.len()
    }

    /// Gershgorin bound on the spectral norm (max absolute row sum).
    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    /// `out = H · psi`.
    pub fn apply_into(&self, psi: &[C64], out: &mut [C64]) {
        debug_assert_eq!(psi.len(), self.dim());
        debug_assert_eq!(out.len(), self.dim());
        let width = self.masks.len();
        let masks = &self.masks;
        let elements = &self.elements;
        par::for_each_chunk(out, 256, |start, chunk| {
            for (off, o) in chunk.iter_mut().enumerate() {
                let y = start + off;
                let row = &elements[y * width..(y + 1) * width];
                let mut acc = ZERO;
                for (e, &m) in row.iter().zip(masks) {
                    acc += e * psi[y ^ m];
                }
                *o = acc;
            }
        });
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let dim = self.dim();
        let width = self.masks.len();
        let mut h = DMatrix::from_element(dim, dim, ZERO);
        for y in 0..dim {
            for (k, &m) in self.masks.iter().enumerate() {
                h[(y, y ^ m)] += self.elements[y * width + k];
            }
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_count_for_all_to_all() {
        let sys = SpinSystem::random_instance(6, 3).unwrap();
        let h = PauliSum::from_system(&sys);
        assert_eq!(h.n_patterns(), 1 + 6 + 15);
    }

    #[test]
    fn sparse_apply_matches_dense() {
        let sys = SpinSystem::random_instance(4, 11).unwrap();
        let h = PauliSum::from_system(&sys);
        let dense = h.to_dense();
        let psi: Vec<C64> = (0..16)
            .map(|k| C64::new((k as f64 * 0.37).sin(), (k as f64 * 0.11).cos()))
            .collect();
        let mut out = vec![ZERO; 16];
        h.apply_into(&psi, &mut out);
        let v = nalgebra::DVector::from_vec(psi);
        let expected = &dense * v;
        for (a, b) in out.iter().zip(expected.iter()) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn dense_is_hermitian() {
        let sys = SpinSystem::random_instance(5, 2).unwrap();
        let h = PauliSum::from_system(&sys).to_dense();
        let diff = (&h - h.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff <= 1e-12);
    }

    #[test]
    fn norm_bound_dominates_spectrum() {
        let sys = SpinSystem::random_instance(4, 5).unwrap();
        let h = PauliSum::from_system(&sys);
        let eig = h.to_dense().symmetric_eigenvalues();
        let max = eig.iter().map(|e| e.abs()).fold(0.0, f64::max);
        assert!(max <= h.norm_bound() + 1e-12);
    }
}
