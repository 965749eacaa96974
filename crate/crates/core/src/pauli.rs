//! Single-qubit Pauli algebra and the cardinal states used for preparation
//! and measurement.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, TomoError};

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Pauli direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

impl PauliAxis {
    pub const ALL: [PauliAxis; 3] = [PauliAxis::X, PauliAxis::Y, PauliAxis::Z];

    /// Cyclic successor x → y → z → x.
    pub fn next(self) -> Self {
        match self {
            PauliAxis::X => PauliAxis::Y,
            PauliAxis::Y => PauliAxis::Z,
            PauliAxis::Z => PauliAxis::X,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i % 3]
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PauliAxis::X => "x",
            PauliAxis::Y => "y",
            PauliAxis::Z => "z",
        }
    }

    pub fn matrix(self) -> Mat2 {
        match self {
            PauliAxis::X => Mat2::new(ZERO, ONE, ONE, ZERO),
            PauliAxis::Y => Mat2::new(ZERO, -I, I, ZERO),
            PauliAxis::Z => Mat2::new(ONE, ZERO, ZERO, -ONE),
        }
    }

    /// Whether σ^self and σ^other commute (equal axes) or anticommute.
    pub fn commutes_with(self, other: PauliAxis) -> bool {
        self == other
    }
}

impl fmt::Display for PauliAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PauliAxis {
    type Err = TomoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "x" => Ok(PauliAxis::X),
            "y" => Ok(PauliAxis::Y),
            "z" => Ok(PauliAxis::Z),
            other => Err(invalid(format!("unknown Pauli axis `{other}`"))),
        }
    }
}

/// exp(i·θ·(n·σ)) for a real (not necessarily unit) generator vector `n`.
pub fn rotation(theta: f64, n: [f64; 3]) -> Mat2 {
    let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if norm == 0.0 {
        return Mat2::identity();
    }
    let angle = theta * norm;
    let (s, c) = angle.sin_cos();
    let u = [n[0] / norm, n[1] / norm, n[2] / norm];
    let gen = PauliAxis::X.matrix() * C64::from(u[0])
        + PauliAxis::Y.matrix() * C64::from(u[1])
        + PauliAxis::Z.matrix() * C64::from(u[2]);
    Mat2::identity() * C64::from(c) + gen * (I * s)
}

/// Single-qubit stabilizer states: +1 or −1 eigenstates of a Pauli axis.
///
/// `|0⟩ = (z,+)`, `|1⟩ = (z,−)`, `|+⟩ = (x,+)`, `|−⟩ = (x,−)`,
/// `|I⟩ = (|0⟩ + i|1⟩)/√2 = (y,+)`, `|−I⟩ = (y,−)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StateLabel {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "1")]
    One,
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
    #[serde(rename = "I")]
    PlusI,
    #[serde(rename = "-I")]
    MinusI,
}

impl StateLabel {
    pub fn axis(self) -> PauliAxis {
        match self {
            StateLabel::Zero | StateLabel::One => PauliAxis::Z,
            StateLabel::Plus | StateLabel::Minus => PauliAxis::X,
            StateLabel::PlusI | StateLabel::MinusI => PauliAxis::Y,
        }
    }

    pub fn is_positive(self) -> bool {
        matches!(self, StateLabel::Zero | StateLabel::Plus | StateLabel::PlusI)
    }

    pub fn from_axis(axis: PauliAxis, positive: bool) -> Self {
        match (axis, positive) {
            (PauliAxis::Z, true) => StateLabel::Zero,
            (PauliAxis::Z, false) => StateLabel::One,
            (PauliAxis::X, true) => StateLabel::Plus,
            (PauliAxis::X, false) => StateLabel::Minus,
            (PauliAxis::Y, true) => StateLabel::PlusI,
            (PauliAxis::Y, false) => StateLabel::MinusI,
        }
    }

    /// Label of `R|self⟩` where `R` is the cyclic Clifford x → y → z → x.
    pub fn cycled(self) -> Self {
        Self::from_axis(self.axis().next(), self.is_positive())
    }

    pub fn ket(self) -> Vector2<C64> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            StateLabel::Zero => Vector2::new(ONE, ZERO),
            StateLabel::One => Vector2::new(ZERO, ONE),
            StateLabel::Plus => Vector2::new(C64::from(h), C64::from(h)),
            StateLabel::Minus => Vector2::new(C64::from(h), C64::from(-h)),
            StateLabel::PlusI => Vector2::new(C64::from(h), C64::new(0.0, h)),
            StateLabel::MinusI => Vector2::new(C64::from(h), C64::new(0.0, -h)),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StateLabel::Zero => "0",
            StateLabel::One => "1",
            StateLabel::Plus => "+",
            StateLabel::Minus => "-",
            StateLabel::PlusI => "I",
            StateLabel::MinusI => "-I",
        }
    }

    /// File-name-safe spelling.
    pub fn slug(self) -> &'static str {
        match self {
            StateLabel::Zero => "0",
            StateLabel::One => "1",
            StateLabel::Plus => "p",
            StateLabel::Minus => "m",
            StateLabel::PlusI => "i",
            StateLabel::MinusI => "mi",
        }
    }
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The cyclic Clifford `R = exp(−iπ/3 · (σx+σy+σz)/√3)`, with
/// `R σ^x R† = σ^y`, `R σ^y R† = σ^z`, `R σ^z R† = σ^x`.
pub fn cyclic_rotation() -> Mat2 {
    let s = 1.0 / 3f64.sqrt();
    rotation(-std::f64::consts::FRAC_PI_3, [s, s, s])
}
