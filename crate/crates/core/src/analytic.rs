//! Closed-form dynamics of the decoupled target systems.

use nalgebra::{DMatrix, Matrix2};

use crate::pauli::{C64, ZERO};

/// `exp(−i T (c1 σxσx + c2 σyσy + c3 σzσz))` in the basis
/// `|00⟩, |01⟩, |10⟩, |11⟩` (first label is spin i).
pub fn two_spin_unitary(c1: f64, c2: f64, c3: f64, t: f64) -> DMatrix<C64> {
    let minus = (c1 - c2) * t;
    let plus = (c1 + c2) * t;
    let outer = C64::from_polar(1.0, -c3 * t);
    let inner = C64::from_polar(1.0, c3 * t);
    let mi = C64::new(0.0, -1.0);
    let mut u = DMatrix::from_element(4, 4, ZERO);
    u[(0, 0)] = outer * minus.cos();
    u[(3, 3)] = outer * minus.cos();
    u[(0, 3)] = outer * mi * minus.sin();
    u[(3, 0)] = outer * mi * minus.sin();
    u[(1, 1)] = inner * plus.cos();
    u[(2, 2)] = inner * plus.cos();
    u[(1, 2)] = inner * mi * plus.sin();
    u[(2, 1)] = inner * mi * plus.sin();
    u
}

/// `P_{|+I⟩→|00⟩} = ¼[1 + sin(2(c1−c2)T)]`
pub fn p_plus_i_to_00(c1: f64, c2: f64, t: f64) -> f64 {
    0.25 * (1.0 + (2.0 * (c1 - c2) * t).sin())
}

/// `P_{|+I⟩→|10⟩} = ¼[1 + sin(2(c1+c2)T)]`
pub fn p_plus_i_to_10(c1: f64, c2: f64, t: f64) -> f64 {
    0.25 * (1.0 + (2.0 * (c1 + c2) * t).sin())
}

/// `P_{|0I⟩→|++⟩} = ¼[1 + sin(2(c2−c3)T)]`
pub fn p_0i_to_plus_plus(c2: f64, c3: f64, t: f64) -> f64 {
    0.25 * (1.0 + (2.0 * (c2 - c3) * t).sin())
}

/// `exp(−i T (b·σ))`
pub fn one_spin_unitary(b: [f64; 3], t: f64) -> Matrix2<C64> {
    let mag = norm3(b);
    if mag == 0.0 {
        return Matrix2::identity();
    }
    let (s, c) = (mag * t).sin_cos();
    let [bx, by, bz] = b.map(|v| v / mag);
    Matrix2::new(
        C64::new(c, -bz * s),
        C64::new(-by * s, -bx * s),
        C64::new(by * s, -bx * s),
        C64::new(c, bz * s),
    )
}

pub fn norm3(b: [f64; 3]) -> f64 {
    (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt()
}

/// `P_{|0⟩→|0⟩} = 1 + [(b_z/b)² − 1] sin²(bT)`
pub fn p_0_to_0(b: [f64; 3], t: f64) -> f64 {
    let mag = norm3(b);
    if mag == 0.0 {
        return 1.0;
    }
    1.0 + ((b[2] / mag).powi(2) - 1.0) * (mag * t).sin().powi(2)
}

/// `P_{|+⟩→|+⟩} = 1 + [(b_x/b)² − 1] sin²(bT)`
pub fn p_plus_to_plus(b: [f64; 3], t: f64) -> f64 {
    let mag = norm3(b);
    if mag == 0.0 {
        return 1.0;
    }
    1.0 + ((b[0] / mag).powi(2) - 1.0) * (mag * t).sin().powi(2)
}

/// `P_{|+⟩→|0⟩} = ½(1 + 2 b_x b_z/b² sin²(bT) − b_y/b sin(2bT))`
pub fn p_plus_to_0(b: [f64; 3], t: f64) -> f64 {
    let mag = norm3(b);
    if mag == 0.0 {
        return 0.5;
    }
    let s = (mag * t).sin();
    0.5 * (1.0 + 2.0 * b[0] * b[2] / (mag * mag) * s * s - b[1] / mag * (2.0 * mag * t).sin())
}

/// `P_{|I⟩→|0⟩} = ½(1 + 2 b_y b_z/b² sin²(bT) + b_x/b sin(2bT))`
pub fn p_i_to_0(b: [f64; 3], t: f64) -> f64 {
    let mag = norm3(b);
    if mag == 0.0 {
        return 0.5;
    }
    let s = (mag * t).sin();
    0.5 * (1.0 + 2.0 * b[1] * b[2] / (mag * mag) * s * s + b[0] / mag * (2.0 * mag * t).sin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{PauliAxis, StateLabel};
    use nalgebra::{DVector, Vector2};

    fn kron_ket(a: StateLabel, b: StateLabel) -> DVector<C64> {
        let (x, y) = (a.ket(), b.ket());
        DVector::from_vec(vec![x[0] * y[0], x[0] * y[1], x[1] * y[0], x[1] * y[1]])
    }

    fn prob(u: &DMatrix<C64>, prep: (StateLabel, StateLabel), meas: (StateLabel, StateLabel)) -> f64 {
        let out = u * kron_ket(prep.0, prep.1);
        kron_ket(meas.0, meas.1).dotc(&out).norm_sqr()
    }

    #[test]
    fn two_spin_unitary_matches_eigendecomposition() {
        let (c1, c2, c3, t) = (0.3, -0.2, 0.1, 1.7);
        let kron = |a: PauliAxis| a.matrix().kronecker(&a.matrix());
        let h = kron(PauliAxis::X) * C64::from(c1)
            + kron(PauliAxis::Y) * C64::from(c2)
            + kron(PauliAxis::Z) * C64::from(c3);
        let eig = nalgebra::Matrix4::<C64>::from_iterator(h.iter().copied()).symmetric_eigen();
        let phases = eig.eigenvalues.map(|e| C64::from_polar(1.0, -e * t));
        let expected = eig.eigenvectors
            * nalgebra::Matrix4::from_diagonal(&phases)
            * eig.eigenvectors.adjoint();
        let u = two_spin_unitary(c1, c2, c3, t);
        for r in 0..4 {
            for c in 0..4 {
                assert!((u[(r, c)] - expected[(r, c)]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn probability_curves_from_unitary() {
        use StateLabel::*;
        let (c1, c2, c3) = (0.3, -0.2, 0.1);
        for &t in &[0.0, 0.4, 1.3, 5.0] {
            let u = two_spin_unitary(c1, c2, c3, t);
            assert!((prob(&u, (Plus, PlusI), (Zero, Zero)) - p_plus_i_to_00(c1, c2, t)).abs() < 1e-14);
            assert!((prob(&u, (Plus, PlusI), (One, Zero)) - p_plus_i_to_10(c1, c2, t)).abs() < 1e-14);
            assert!((prob(&u, (Zero, PlusI), (Plus, Plus)) - p_0i_to_plus_plus(c2, c3, t)).abs() < 1e-14);
            assert!((p_plus_i_to_00(c1, c2, t) - 0.25 * (1.0 + (1.0 * t).sin())).abs() < 1e-15);
        }
    }

    #[test]
    fn equal_couplings_give_flat_curve() {
        for &t in &[0.1, 2.0, 7.0] {
            let u = two_spin_unitary(0.4, 0.4, -0.3, t);
            let p = prob(&u, (StateLabel::Plus, StateLabel::PlusI), (StateLabel::Zero, StateLabel::Zero));
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn one_spin_probabilities() {
        let b = [0.334, 0.569, -0.431];
        for &t in &[0.2, 1.1, 3.3] {
            let u = one_spin_unitary(b, t);
            let p = |prep: StateLabel, meas: StateLabel| {
                let out: Vector2<C64> = u * prep.ket();
                meas.ket().dotc(&out).norm_sqr()
            };
            assert!((p(StateLabel::Zero, StateLabel::Zero) - p_0_to_0(b, t)).abs() < 1e-14);
            assert!((p(StateLabel::Plus, StateLabel::Plus) - p_plus_to_plus(b, t)).abs() < 1e-14);
            assert!((p(StateLabel::Plus, StateLabel::Zero) - p_plus_to_0(b, t)).abs() < 1e-14);
            assert!((p(StateLabel::PlusI, StateLabel::Zero) - p_i_to_0(b, t)).abs() < 1e-14);
        }
    }
}
