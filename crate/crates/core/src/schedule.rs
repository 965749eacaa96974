//! Dynamical-decoupling pulse schedules and pulse-error realization.
//!
//! Event times are stored as integer counts of half intervals `τ/2`, so
//! every XY cycle places its pulses exactly at `τ/2, 3τ/2, …` from the cycle
//! start and adjacent cycles merge into full `τ` intervals.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, UnitSphere};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, TomoError};
use crate::pauli::{rotation, Mat2, PauliAxis};

/// One pulse on one qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PulseTarget {
    pub q: usize,
    pub axis: PauliAxis,
}

/// Simultaneous pulses at a single instant. A qubit may appear more than
/// once; its pulses are then applied in list order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PulseEvent {
    pub half_steps: u64,
    pub targets: Vec<PulseTarget>,
}

/// Cycle type of an XY decoupling train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DdFamily {
    /// `P1 P2 P1 P2`
    Xy4,
    /// `P1 P2 P1 P2 P2 P1 P2 P1`: XY-4 followed by its time reversal.
    Xy8,
}

impl DdFamily {
    pub fn pulses_per_cycle(self) -> usize {
        match self {
            DdFamily::Xy4 => 4,
            DdFamily::Xy8 => 8,
        }
    }

    /// `true` selects `P1`, `false` selects `P2`, for each slot of a cycle.
    fn pattern(self) -> &'static [bool] {
        match self {
            DdFamily::Xy4 => &[true, false, true, false],
            DdFamily::Xy8 => &[true, false, true, false, false, true, false, true],
        }
    }
}

/// Axis assignment of a synchronized pair sequence, written as the `P1-P2`
/// operators on spins `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AxisVariant {
    /// `X_iX_j - Y_iY_j`: keeps xx, yy, zz.
    #[serde(rename = "XX-YY")]
    XxYy,
    /// `X_iY_j - Y_iZ_j`: keeps xy, yz, zx.
    #[serde(rename = "XY-YZ")]
    XyYz,
    /// `Y_iX_j - Z_iY_j`: keeps yx, zy, xz.
    #[serde(rename = "YX-ZY")]
    YxZy,
}

impl AxisVariant {
    pub const ALL: [AxisVariant; 3] = [AxisVariant::XxYy, AxisVariant::XyYz, AxisVariant::YxZy];

    /// `(P1, P2)` as `((axis on i, axis on j), (axis on i, axis on j))`.
    pub fn pulse_axes(self) -> ((PauliAxis, PauliAxis), (PauliAxis, PauliAxis)) {
        use PauliAxis::*;
        match self {
            AxisVariant::XxYy => ((X, X), (Y, Y)),
            AxisVariant::XyYz => ((X, Y), (Y, Z)),
            AxisVariant::YxZy => ((Y, X), (Z, Y)),
        }
    }

    /// The two-spin terms `σ_i^a σ_j^b` that survive the average, in the
    /// order `(c1, c2, c3)` used by the estimator.
    pub fn surviving_terms(self) -> [(PauliAxis, PauliAxis); 3] {
        use PauliAxis::*;
        match self {
            AxisVariant::XxYy => [(X, X), (Y, Y), (Z, Z)],
            AxisVariant::XyYz => [(X, Y), (Y, Z), (Z, X)],
            AxisVariant::YxZy => [(Y, X), (Z, Y), (X, Z)],
        }
    }

    /// Commutation rule: `σ_i^a σ_j^b` survives iff it commutes with both
    /// pulse operators.
    pub fn term_survives(self, a: PauliAxis, b: PauliAxis) -> bool {
        let (p1, p2) = self.pulse_axes();
        let commutes = |(pa, pb): (PauliAxis, PauliAxis)| {
            // two-qubit strings commute iff they anticommute on an even number of sites
            let anti = (!a.commutes_with(pa)) as u8 + (!b.commutes_with(pb)) as u8;
            anti % 2 == 0
        };
        commutes(p1) && commutes(p2)
    }

    pub fn slug(self) -> &'static str {
        match self {
            AxisVariant::XxYy => "xx-yy",
            AxisVariant::XyYz => "xy-yz",
            AxisVariant::YxZy => "yx-zy",
        }
    }
}

impl fmt::Display for AxisVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AxisVariant::XxYy => "XX-YY",
            AxisVariant::XyYz => "XY-YZ",
            AxisVariant::YxZy => "YX-ZY",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSchedule {
    tau: f64,
    events: Vec<PulseEvent>,
    n_cycles: usize,
    half_steps_per_cycle: u64,
    total_half_steps: u64,
}

impl PulseSchedule {
    /// Builds a schedule from explicit events. Offsets must be strictly
    /// increasing and not exceed `total_half_steps`.
    pub fn new(tau: f64, events: Vec<PulseEvent>, total_half_steps: u64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(invalid(format!("interval τ must be positive, got {tau}")));
        }
        for w in events.windows(2) {
            if w[1].half_steps <= w[0].half_steps {
                return Err(invalid("event offsets must be strictly increasing"));
            }
        }
        if let Some(last) = events.last() {
            if last.half_steps > total_half_steps {
                return Err(invalid("event beyond total time"));
            }
        }
        Ok(Self {
            tau,
            events,
            n_cycles: 1,
            half_steps_per_cycle: total_half_steps,
            total_half_steps,
        })
    }

    fn cyclic(
        tau: f64,
        family: DdFamily,
        n_cycles: usize,
        p1: Vec<PulseTarget>,
        p2: Vec<PulseTarget>,
    ) -> Result<Self> {
        if n_cycles == 0 {
            return Err(invalid("n_cycles must be at least 1"));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(invalid(format!("interval τ must be positive, got {tau}")));
        }
        let per_cycle = 2 * family.pulses_per_cycle() as u64;
        let mut events = Vec::with_capacity(n_cycles * family.pulses_per_cycle());
        for c in 0..n_cycles as u64 {
            for (slot, &first) in family.pattern().iter().enumerate() {
                events.push(PulseEvent {
                    half_steps: c * per_cycle + 2 * slot as u64 + 1,
                    targets: if first { p1.clone() } else { p2.clone() },
                });
            }
        }
        Ok(Self {
            tau,
            events,
            n_cycles,
            half_steps_per_cycle: per_cycle,
            total_half_steps: per_cycle * n_cycles as u64,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn events(&self) -> &[PulseEvent] {
        &self.events
    }

    pub fn n_cycles(&self) -> usize {
        self.n_cycles
    }

    pub fn n_pulse_events(&self) -> usize {
        self.events.len()
    }

    pub fn total_half_steps(&self) -> u64 {
        self.total_half_steps
    }

    pub fn total_time(&self) -> f64 {
        self.total_half_steps as f64 * self.tau / 2.0
    }

    pub fn event_time(&self, event: &PulseEvent) -> f64 {
        event.half_steps as f64 * self.tau / 2.0
    }

    /// Offset of the end of cycle `c` (`c = 1..=n_cycles`).
    pub fn cycle_end(&self, c: usize) -> u64 {
        self.half_steps_per_cycle * c as u64
    }

    /// Debug dump: `[{t, targets: [{q, axis}]}]`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.events
                .iter()
                .map(|e| {
                    serde_json::json!({
                        "t": self.event_time(e),
                        "targets": e.targets,
                    })
                })
                .collect(),
        )
    }
}

fn check_qubit(q: usize, n_spins: usize) -> Result<()> {
    if q >= n_spins {
        return Err(invalid(format!("qubit {q} out of range for {n_spins} spins")));
    }
    Ok(())
}

/// Synchronized XY-8 train on spins `i` and `j`.
pub fn pair_sequence(
    i: usize,
    j: usize,
    variant: AxisVariant,
    n_cycles: usize,
    tau: f64,
) -> Result<PulseSchedule> {
    pair_sequence_with(i, j, variant, DdFamily::Xy8, n_cycles, tau)
}

pub fn pair_sequence_with(
    i: usize,
    j: usize,
    variant: AxisVariant,
    family: DdFamily,
    n_cycles: usize,
    tau: f64,
) -> Result<PulseSchedule> {
    if i == j {
        return Err(invalid(format!("pair sequence needs two distinct spins, got ({i}, {j})")));
    }
    let ((a1, b1), (a2, b2)) = variant.pulse_axes();
    let p1 = vec![PulseTarget { q: i, axis: a1 }, PulseTarget { q: j, axis: b1 }];
    let p2 = vec![PulseTarget { q: i, axis: a2 }, PulseTarget { q: j, axis: b2 }];
    PulseSchedule::cyclic(tau, family, n_cycles, p1, p2)
}

/// XY-8 on every spin except `i`, leaving `i` unpulsed.
pub fn environment_sequence(
    i: usize,
    n_spins: usize,
    n_cycles: usize,
    tau: f64,
) -> Result<PulseSchedule> {
    if n_spins < 2 {
        return Err(invalid("environment sequence needs at least 2 spins"));
    }
    check_qubit(i, n_spins)?;
    let layer = |axis| {
        (0..n_spins)
            .filter(|&q| q != i)
            .map(|q| PulseTarget { q, axis })
            .collect::<Vec<_>>()
    };
    PulseSchedule::cyclic(
        tau,
        DdFamily::Xy8,
        n_cycles,
        layer(PauliAxis::X),
        layer(PauliAxis::Y),
    )
}

/// Global XY-8 on all spins plus a second, focused pulse of the same axis
/// on `i` at every event, so that `i` ideally sees `σ·σ = 1`.
pub fn global_cancel_sequence(
    i: usize,
    n_spins: usize,
    n_cycles: usize,
    tau: f64,
) -> Result<PulseSchedule> {
    if n_spins < 2 {
        return Err(invalid("global-cancel sequence needs at least 2 spins"));
    }
    check_qubit(i, n_spins)?;
    let layer = |axis| {
        let mut t: Vec<_> = (0..n_spins).map(|q| PulseTarget { q, axis }).collect();
        t.push(PulseTarget { q: i, axis });
        t
    };
    PulseSchedule::cyclic(
        tau,
        DdFamily::Xy8,
        n_cycles,
        layer(PauliAxis::X),
        layer(PauliAxis::Y),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    /// No pulse error.
    Npe,
    /// Systematic amplitude error `exp(iπ/2 (1+ε) σ^ν)`.
    Sae,
    /// Random amplitude error, `δ` uniform in `(−mag, mag)` per pulse.
    Rae,
    /// Random rotation-axis error `exp(iπ/2 (σ^ν + α σ^x + β σ^y + γ σ^z))`
    /// with `(α, β, γ)` uniform on the sphere of radius `mag`.
    Rre,
}

impl ErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::Npe => "npe",
            ErrorKind::Sae => "sae",
            ErrorKind::Rae => "rae",
            ErrorKind::Rre => "rre",
        }
    }
}

impl FromStr for ErrorKind {
    type Err = TomoError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "npe" => Ok(ErrorKind::Npe),
            "sae" => Ok(ErrorKind::Sae),
            "rae" => Ok(ErrorKind::Rae),
            "rre" => Ok(ErrorKind::Rre),
            other => Err(invalid(format!("unknown pulse error kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseErrorModel {
    pub kind: ErrorKind,
    #[serde(default)]
    pub magnitude: f64,
}

impl PulseErrorModel {
    pub const NONE: PulseErrorModel = PulseErrorModel {
        kind: ErrorKind::Npe,
        magnitude: 0.0,
    };

    pub fn new(kind: ErrorKind, magnitude: f64) -> Result<Self> {
        if !magnitude.is_finite() || magnitude < 0.0 {
            return Err(invalid(format!("pulse error magnitude must be ≥ 0, got {magnitude}")));
        }
        Ok(Self { kind, magnitude })
    }

    /// Short label such as `npe` or `rre(1%)`.
    pub fn label(&self) -> String {
        match self.kind {
            ErrorKind::Npe => "npe".to_string(),
            k => format!("{}({}%)", k.as_str(), self.magnitude * 100.0),
        }
    }

    /// Slug usable as a directory name.
    pub fn slug(&self) -> String {
        match self.kind {
            ErrorKind::Npe => "npe".to_string(),
            k => format!("{}_{}", k.as_str(), self.magnitude),
        }
    }

    /// Ideal π-pulse `exp(iπ/2 σ^ν) = iσ^ν`.
    pub fn ideal(axis: PauliAxis) -> Mat2 {
        rotation(std::f64::consts::FRAC_PI_2, unit(axis))
    }

    /// Draws the realized unitary of one pulse about `axis`.
    pub fn realize<R: Rng + ?Sized>(&self, axis: PauliAxis, rng: &mut R) -> Mat2 {
        let half_pi = std::f64::consts::FRAC_PI_2;
        match self.kind {
            ErrorKind::Npe => Self::ideal(axis),
            ErrorKind::Sae => rotation(half_pi * (1.0 + self.magnitude), unit(axis)),
            ErrorKind::Rae => {
                let delta = if self.magnitude > 0.0 {
                    rng.random_range(-self.magnitude..self.magnitude)
                } else {
                    0.0
                };
                rotation(half_pi * (1.0 + delta), unit(axis))
            }
            ErrorKind::Rre => {
                let dir: [f64; 3] = UnitSphere.sample(rng);
                let mut n = unit(axis);
                for k in 0..3 {
                    n[k] += self.magnitude * dir[k];
                }
                rotation(half_pi, n)
            }
        }
    }
}

impl Default for PulseErrorModel {
    fn default() -> Self {
        Self::NONE
    }
}

fn unit(axis: PauliAxis) -> [f64; 3] {
    let mut v = [0.0; 3];
    v[axis.index()] = 1.0;
    v
}

/// Realized unitaries for one event, one per target in target order.
pub type EventRealization = Vec<(usize, Mat2)>;

/// Draws every pulse of `sched` in (event, target) order.
pub fn realize_pulses<R: Rng + ?Sized>(
    sched: &PulseSchedule,
    err: &PulseErrorModel,
    rng: &mut R,
) -> Vec<EventRealization> {
    sched
        .events()
        .iter()
        .map(|e| realize_event(e, err, rng))
        .collect()
}

pub(crate) fn realize_event<R: Rng + ?Sized>(
    event: &PulseEvent,
    err: &PulseErrorModel,
    rng: &mut R,
) -> EventRealization {
    event
        .targets
        .iter()
        .map(|t| (t.q, err.realize(t.axis, rng)))
        .collect()
}
