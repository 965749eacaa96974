//! Reference implementations for integration tests, written independently
//! of the library's sparse kernels: explicit Kronecker products, Hermitian
//! eigendecomposition for `exp(−iHt)`, and closed-form probability curves.
#![allow(dead_code)]

use hamtomo::evolution::QuantumState;
use hamtomo::pauli::PauliAxis;
use hamtomo::spin_system::SpinSystem;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn pauli(a: PauliAxis) -> DMatrix<C> {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    match a {
        PauliAxis::X => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        PauliAxis::Y => DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        PauliAxis::Z => DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
    }
}

pub fn kron(a: &DMatrix<C>, b: &DMatrix<C>) -> DMatrix<C> {
    a.kronecker(b)
}

/// `m` on qubit `q` of `n` (qubit 0 is the leftmost factor).
pub fn on_qubit(m: &DMatrix<C>, q: usize, n: usize) -> DMatrix<C> {
    let eye = DMatrix::<C>::identity(2, 2);
    (0..n).fold(DMatrix::from_element(1, 1, c(1.0, 0.0)), |acc, k| {
        kron(&acc, if k == q { m } else { &eye })
    })
}

pub fn dense_h(sys: &SpinSystem) -> DMatrix<C> {
    let n = sys.n_spins();
    let dim = 1 << n;
    let mut h = DMatrix::from_element(dim, dim, c(0.0, 0.0));
    for (key, v) in sys.couplings() {
        h += on_qubit(&pauli(key.a), key.m, n) * on_qubit(&pauli(key.b), key.n, n) * c(v, 0.0);
    }
    for ((m, a), v) in sys.fields() {
        h += on_qubit(&pauli(a), m, n) * c(v, 0.0);
    }
    h
}

/// `exp(−iHt)` for Hermitian `h`.
pub fn expm_herm(h: &DMatrix<C>, t: f64) -> DMatrix<C> {
    let eig = h.clone().symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C::from_polar(1.0, -l * t)));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

pub fn vec_of(psi: &QuantumState) -> DVector<C> {
    DVector::from_column_slice(psi.amplitudes())
}

/// `√(1 − |⟨a|b⟩|²)`, computed from the phase-aligned difference.
pub fn pure_distance(a: &DVector<C>, b: &DVector<C>) -> f64 {
    let ov = a.dotc(b);
    let ph = if ov.norm() > 0.0 { ov / ov.norm() } else { c(1.0, 0.0) };
    let d = (a - b * ph.conj()).norm_squared();
    (0.5 * d * (2.0 - 0.5 * d)).max(0.0).sqrt()
}

pub fn mixed_distance(a: &DMatrix<C>, b: &DMatrix<C>) -> f64 {
    let d = a - b;
    let h = (&d + d.adjoint()) * c(0.5, 0.0);
    0.5 * h.symmetric_eigenvalues().iter().map(|l| l.abs()).sum::<f64>()
}

/// Partial trace keeping qubits `keep` (in that order).
pub fn reduce(psi: &DVector<C>, n: usize, keep: &[usize]) -> DMatrix<C> {
    let k = keep.len();
    let mut rho = DMatrix::from_element(1 << k, 1 << k, c(0.0, 0.0));
    let rest: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let index = |sub: usize, env: usize| {
        let mut x = 0;
        for (p, &q) in keep.iter().enumerate() {
            x |= ((sub >> (k - 1 - p)) & 1) << (n - 1 - q);
        }
        for (p, &q) in rest.iter().enumerate() {
            x |= ((env >> (rest.len() - 1 - p)) & 1) << (n - 1 - q);
        }
        x
    };
    for env in 0..(1 << rest.len()) {
        for r in 0..(1 << k) {
            for s in 0..(1 << k) {
                rho[(r, s)] += psi[index(r, env)] * psi[index(s, env)].conj();
            }
        }
    }
    rho
}

/// Standard grid: `T = 8·N_c·τ`, `N_c = 2, 4, …, 2·n_points`.
pub fn standard_times(tau: f64, n_points: usize) -> Vec<f64> {
    (1..=n_points).map(|k| 8.0 * (2 * k) as f64 * tau).collect()
}

/// `(P_{+I→00}, P_{+I→10}, P_{0I→++})` at time `t`.
pub fn pair_curves(c1: f64, c2: f64, c3: f64, t: f64) -> [f64; 3] {
    [
        0.25 * (1.0 + (2.0 * (c1 - c2) * t).sin()),
        0.25 * (1.0 + (2.0 * (c1 + c2) * t).sin()),
        0.25 * (1.0 + (2.0 * (c2 - c3) * t).sin()),
    ]
}

/// Single-spin probabilities under `b·σ` from explicit 2×2 evolution:
/// `(P_{0→0}, P_{+→+}, P_{+→0}, P_{I→0})`.
pub fn field_curves(b: [f64; 3], t: f64) -> [f64; 4] {
    let h = pauli(PauliAxis::X) * c(b[0], 0.0) + pauli(PauliAxis::Y) * c(b[1], 0.0) + pauli(PauliAxis::Z) * c(b[2], 0.0);
    let u = expm_herm(&h, t);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let zero = DVector::from_column_slice(&[c(1.0, 0.0), c(0.0, 0.0)]);
    let plus = DVector::from_column_slice(&[c(s, 0.0), c(s, 0.0)]);
    let iplus = DVector::from_column_slice(&[c(s, 0.0), c(0.0, s)]);
    let p = |from: &DVector<C>, to: &DVector<C>| to.dotc(&(&u * from)).norm_sqr();
    [p(&zero, &zero), p(&plus, &plus), p(&plus, &zero), p(&iplus, &zero)]
}
