//! Parameter recovery from measured probability curves.
//!
//! Couplings come from one-parameter sine fits `p(T) = ¼[1 + sin(ωT)]`
//! whose three frequencies determine `(c1, c2, c3)`. Local fields come from
//! a joint fit of `P_{0→0}` and `P_{+→+}` sharing the Bloch-vector length,
//! followed by a discrete search over the eight sign assignments.
//! Error bars are parametric-bootstrap standard deviations.

use std::f64::consts::PI;

use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::analytic::{norm3, p_i_to_0, p_plus_to_0};
use crate::error::{invalid, Result, TomoError};
use crate::measurement::{binomial_sigma, MeasSetting, ShotRecord};
use crate::par;
use crate::pauli::{cyclic_rotation, Mat2, PauliAxis, StateLabel, C64};
use crate::schedule::AxisVariant;
use crate::seed::child_rng;

/// Minimum number of time points for any curve fit.
pub const MIN_POINTS: usize = 8;
/// Default number of frequency grid points for the initial search.
pub const DEFAULT_GRID: usize = 2001;
/// Grid minima refined per fit.
const REFINED_MINIMA: usize = 4;
/// Default bootstrap resample count.
pub const DEFAULT_RESAMPLES: usize = 1000;
pub const MIN_RESAMPLES: usize = 200;
/// Upper edge of the field-magnitude search, `√3 · 1.05`.
pub const FIELD_SEARCH_MAX: f64 = 1.818_653_347_947_321;
/// Fitted fields below this magnitude have undefined signs.
pub const MIN_RESOLVED_FIELD: f64 = 1e-3;
/// Components below this fraction of `b` are treated as zero in the sign search.
const DEGENERATE_COMPONENT: f64 = 1e-4;
/// Allowed excess of `amp_z + amp_x` over one before a fit is flagged.
const DISCRIMINANT_TOL: f64 = 0.05;

/// Time-sorted copy of a record with least-squares weights.
struct Points {
    t: Vec<f64>,
    p: Vec<f64>,
    w: Vec<f64>,
}

/// Per-point weights `1/σ²`, with `σ` floored at `√(¼/N_m)/10`.
/// Noiseless records get unit weights.
pub fn weights(record: &ShotRecord) -> Vec<f64> {
    match record.n_shots {
        None => vec![1.0; record.len()],
        Some(n) => {
            let floor = binomial_sigma(0.5, n) / 10.0;
            record
                .sigma_m
                .iter()
                .map(|s| 1.0 / s.max(floor).powi(2))
                .collect()
        }
    }
}

fn sorted_points(record: &ShotRecord) -> Result<Points> {
    if record.len() < MIN_POINTS {
        return Err(TomoError::InsufficientData {
            needed: MIN_POINTS,
            got: record.len(),
        });
    }
    if record.p_m.len() != record.len() || record.sigma_m.len() != record.len() {
        return Err(invalid("record columns differ in length"));
    }
    let w = weights(record);
    let mut idx: Vec<usize> = (0..record.len()).collect();
    idx.sort_by(|&a, &b| {
        record.times[a]
            .total_cmp(&record.times[b])
            .then(record.p_m[a].total_cmp(&record.p_m[b]))
            .then(w[a].total_cmp(&w[b]))
    });
    Ok(Points {
        t: idx.iter().map(|&k| record.times[k]).collect(),
        p: idx.iter().map(|&k| record.p_m[k]).collect(),
        w: idx.iter().map(|&k| w[k]).collect(),
    })
}

/// `π / ΔT_min` over the distinct positive spacings of a sorted grid.
fn nyquist(t: &[f64]) -> Result<f64> {
    let dt = t
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d > 1e-12)
        .fold(f64::INFINITY, f64::min);
    if !dt.is_finite() {
        return Err(invalid("time grid has no distinct points"));
    }
    Ok(PI / dt)
}

/// Golden-section minimization of `f` on `[lo, hi]`.
fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SineFitOptions {
    pub grid_points: usize,
    /// Fit `¼ + A sin(ωT)` with free `A` instead of the fixed `A = ¼`.
    pub free_amplitude: bool,
}

impl Default for SineFitOptions {
    fn default() -> Self {
        Self {
            grid_points: DEFAULT_GRID,
            free_amplitude: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingFit {
    /// Signed angular frequency.
    pub omega: f64,
    /// Sine amplitude (¼ unless fitted freely).
    pub amplitude: f64,
    /// Weighted sum of squared residuals.
    pub residual: f64,
    /// Gauss-Newton standard-error proxy for `omega`.
    pub omega_sigma: f64,
    pub omega_nyquist: f64,
    /// `false` when refinement ended on its bracket edge; `omega` is then
    /// the best value found from the grid.
    pub converged: bool,
}

impl CouplingFit {
    pub fn model(&self, t: f64) -> f64 {
        0.25 + self.amplitude * (self.omega * t).sin()
    }
}

/// Sum of weighted squared residuals for frequency `omega`, returning the
/// best amplitude too.
fn sine_sse(pts: &Points, omega: f64, free: bool) -> (f64, f64) {
    if free {
        let (mut ss, mut sp, mut pp) = (0.0, 0.0, 0.0);
        for k in 0..pts.t.len() {
            let s = (omega * pts.t[k]).sin();
            let d = pts.p[k] - 0.25;
            ss += pts.w[k] * s * s;
            sp += pts.w[k] * s * d;
            pp += pts.w[k] * d * d;
        }
        if ss <= 0.0 {
            return (pp, 0.0);
        }
        let a = sp / ss;
        let mut sse = 0.0;
        for k in 0..pts.t.len() {
            let r = 0.25 + a * (omega * pts.t[k]).sin() - pts.p[k];
            sse += pts.w[k] * r * r;
        }
        (sse, a)
    } else {
        let mut sse = 0.0;
        for k in 0..pts.t.len() {
            let r = 0.25 * (1.0 + (omega * pts.t[k]).sin()) - pts.p[k];
            sse += pts.w[k] * r * r;
        }
        (sse, 0.25)
    }
}

/// Fits `p(T) = ¼[1 + sin(ωT)]` with the default options.
pub fn fit_sine(record: &ShotRecord) -> Result<CouplingFit> {
    fit_sine_with(record, &SineFitOptions::default())
}

/// Dense grid over `[−ω_Ny, ω_Ny]` (containing 0) followed by
/// golden-section and Gauss-Newton refinement around the best grid point.
pub fn fit_sine_with(record: &ShotRecord, opts: &SineFitOptions) -> Result<CouplingFit> {
    let pts = sorted_points(record)?;
    let w_ny = nyquist(&pts.t)?;
    let half = opts.grid_points.max(3) / 2;
    let step = w_ny / half as f64;
    let n_grid = 2 * half + 1;

    // grid residuals via a rotating phasor per point
    let mut sse = vec![0.0; n_grid];
    let mut ss = vec![0.0; if opts.free_amplitude { n_grid } else { 0 }];
    let mut sp = vec![0.0; ss.len()];
    let mut pp = 0.0;
    for k in 0..pts.t.len() {
        let (t, p, w) = (pts.t[k], pts.p[k], pts.w[k]);
        let mut z = C64::from_polar(1.0, -(half as f64) * step * t);
        let rot = C64::from_polar(1.0, step * t);
        let d = p - 0.25;
        pp += w * d * d;
        for g in 0..n_grid {
            let s = z.im;
            if opts.free_amplitude {
                ss[g] += w * s * s;
                sp[g] += w * s * d;
            } else {
                let r = 0.25 * s - d;
                sse[g] += w * r * r;
            }
            z *= rot;
        }
    }
    if opts.free_amplitude {
        for g in 0..n_grid {
            sse[g] = if ss[g] > 0.0 { pp - sp[g] * sp[g] / ss[g] } else { pp };
        }
    }
    let omega_at = |g: usize| (g as f64 - half as f64) * step;
    let f = |w: f64| sine_sse(&pts, w, opts.free_amplitude).0;

    // Exact aliases (0 and ±ω_Ny on a uniform grid) tie on the grid, so the
    // lowest few local minima are all refined.
    let mut minima: Vec<usize> = (0..n_grid)
        .filter(|&g| (g == 0 || sse[g] <= sse[g - 1]) && (g + 1 == n_grid || sse[g] <= sse[g + 1]))
        .collect();
    minima.sort_by(|&a, &b| sse[a].total_cmp(&sse[b]).then((a as i64 - half as i64).abs().cmp(&(b as i64 - half as i64).abs())));
    minima.truncate(REFINED_MINIMA);

    let refine = |best: usize| {
        let lo = omega_at(best.saturating_sub(1));
        let hi = omega_at((best + 1).min(n_grid - 1));
        let (mut omega, mut value) = golden_section(f, lo, hi, 1e-12 * (1.0 + w_ny));
        let grid_value = f(omega_at(best));
        if grid_value < value {
            omega = omega_at(best);
            value = grid_value;
        }

        // Gauss-Newton polish on ω (amplitude profiled out)
        for _ in 0..20 {
            let a = sine_sse(&pts, omega, opts.free_amplitude).1;
            let (mut jtr, mut jtj) = (0.0, 0.0);
            for k in 0..pts.t.len() {
                let (s, c) = (omega * pts.t[k]).sin_cos();
                let r = 0.25 + a * s - pts.p[k];
                let j = a * pts.t[k] * c;
                jtr += pts.w[k] * j * r;
                jtj += pts.w[k] * j * j;
            }
            if jtj <= 0.0 {
                break;
            }
            let cand = omega - jtr / jtj;
            let v = f(cand);
            if v <= value && cand >= lo && cand <= hi {
                let moved = (cand - omega).abs();
                omega = cand;
                value = v;
                if moved <= 1e-15 * (1.0 + omega.abs()) {
                    break;
                }
            } else {
                break;
            }
        }
        (best, lo, hi, omega, value)
    };
    let (best, lo, hi, omega, _) = minima
        .into_iter()
        .map(refine)
        .reduce(|a, b| {
            let tie = (a.4 - b.4).abs() <= 1e-12 * (1.0 + a.4.abs().max(b.4.abs()));
            if b.4 < a.4 && !tie || tie && b.3.abs() < a.3.abs() {
                b
            } else {
                a
            }
        })
        .expect("grid has at least one local minimum");

    let edge = 1e-9 * (1.0 + w_ny);
    let at_lo = (omega - lo).abs() <= edge && best > 0;
    let at_hi = (hi - omega).abs() <= edge && best + 1 < n_grid;
    let outside = (best == 0 && (omega - lo).abs() <= edge) || (best + 1 == n_grid && (hi - omega).abs() <= edge);
    let converged = !(at_lo || at_hi || outside);

    let (residual, amplitude) = sine_sse(&pts, omega, opts.free_amplitude);
    let info: f64 = (0..pts.t.len())
        .map(|k| {
            let j = amplitude * pts.t[k] * (omega * pts.t[k]).cos();
            pts.w[k] * j * j
        })
        .sum();
    let omega_sigma = if info > 0.0 && record.n_shots.is_some() {
        info.recip().sqrt()
    } else {
        0.0
    };
    Ok(CouplingFit {
        omega,
        amplitude,
        residual,
        omega_sigma,
        omega_nyquist: w_ny,
        converged,
    })
}

/// Inverts the three frequencies `ω₋ = 2(c1−c2)`, `ω₊ = 2(c1+c2)`,
/// `ω_mid = 2(c2−c3)`.
pub fn couplings_from_frequencies(omega_minus: f64, omega_plus: f64, omega_mid: f64) -> [f64; 3] {
    let c1 = (omega_minus + omega_plus) / 4.0;
    let c2 = (omega_plus - omega_minus) / 4.0;
    let c3 = c2 - omega_mid / 2.0;
    [c1, c2, c3]
}

/// Preparation/measurement settings of one axis variant on pair `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantSettings {
    pub variant: AxisVariant,
    /// Qubit carrying the cyclic basis rotation, if any.
    pub rotated_qubit: Option<usize>,
    pub rotation: Mat2,
    /// Settings whose curves oscillate at `ω₋`, `ω₊`, `ω_mid`.
    pub settings: [MeasSetting; 3],
    /// Coupling `(a, b)` recovered as `c1, c2, c3`.
    pub parameters: [(PauliAxis, PauliAxis); 3],
}

/// Settings for `variant`: the diagonal triple
/// `|+I⟩→|00⟩`, `|+I⟩→|10⟩`, `|0I⟩→|++⟩`, with the labels of the rotated
/// qubit mapped through `R` (x → y → z → x) for the off-diagonal variants.
pub fn variant_settings(variant: AxisVariant, i: usize, j: usize) -> Result<VariantSettings> {
    use StateLabel::*;
    if i == j {
        return Err(invalid("pair must be two distinct spins"));
    }
    let base = [
        ([Plus, PlusI], [Zero, Zero]),
        ([Plus, PlusI], [One, Zero]),
        ([Zero, PlusI], [Plus, Plus]),
    ];
    let (rot_slot, rotated_qubit) = match variant {
        AxisVariant::XxYy => (None, None),
        AxisVariant::XyYz => (Some(1), Some(j)),
        AxisVariant::YxZy => (Some(0), Some(i)),
    };
    let map = |mut labels: [StateLabel; 2]| {
        if let Some(s) = rot_slot {
            labels[s] = labels[s].cycled();
        }
        labels.to_vec()
    };
    let settings = base.map(|(prep, meas)| MeasSetting {
        targets: vec![i, j],
        prepared: map(prep),
        measured: map(meas),
    });
    Ok(VariantSettings {
        variant,
        rotated_qubit,
        rotation: if rot_slot.is_some() { cyclic_rotation() } else { Mat2::identity() },
        settings,
        parameters: variant.surviving_terms(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldFit {
    /// Bloch-vector magnitude.
    pub b: f64,
    /// Fitted `(b_z/b)²`.
    pub amp_z: f64,
    /// Fitted `(b_x/b)²`.
    pub amp_x: f64,
    /// Unsigned `(|b_x|, |b_y|, |b_z|)`.
    pub magnitudes: [f64; 3],
    pub residual: f64,
    /// The unconstrained amplitudes summed to more than one and were
    /// projected back.
    pub discriminant_clamped: bool,
    pub converged: bool,
}

impl FieldFit {
    pub fn model_zz(&self, t: f64) -> f64 {
        1.0 + (self.amp_z - 1.0) * (self.b * t).sin().powi(2)
    }

    pub fn model_xx(&self, t: f64) -> f64 {
        1.0 + (self.amp_x - 1.0) * (self.b * t).sin().powi(2)
    }
}

/// Weighted moments of one curve against `s(T) = sin²(bT)`.
#[derive(Default, Clone, Copy)]
struct Moments {
    ss: f64,
    sd: f64,
}

/// Best amplitudes for fixed `b`: box `[0, 1]` plus `a_z + a_x ≤ 1`.
/// Returns `(a_z, a_x, clamped)`.
fn field_amplitudes(z: Moments, x: Moments) -> (f64, f64, bool) {
    let free = |m: Moments| if m.ss > 0.0 { 1.0 + m.sd / m.ss } else { 1.0 };
    let (uz, ux) = (free(z), free(x));
    let (bz, bx) = (uz.clamp(0.0, 1.0), ux.clamp(0.0, 1.0));
    if bz + bx <= 1.0 {
        return (bz, bx, false);
    }
    let clamped = uz.min(1.0) + ux.min(1.0) > 1.0 + DISCRIMINANT_TOL;
    let total = z.ss + x.ss;
    let az = if total > 0.0 {
        ((z.ss * uz + x.ss * (1.0 - ux)) / total).clamp(0.0, 1.0)
    } else {
        0.5
    };
    (az, 1.0 - az, clamped)
}

fn field_moments(pz: &Points, px: &Points, b: f64) -> (Moments, Moments) {
    let mom = |pts: &Points| {
        let mut m = Moments::default();
        for k in 0..pts.t.len() {
            let s = (b * pts.t[k]).sin().powi(2);
            m.ss += pts.w[k] * s * s;
            m.sd += pts.w[k] * s * (pts.p[k] - 1.0);
        }
        m
    };
    (mom(pz), mom(px))
}

fn field_sse(pz: &Points, px: &Points, b: f64) -> (f64, f64, f64, bool) {
    let (mz, mx) = field_moments(pz, px, b);
    let (az, ax, clamped) = field_amplitudes(mz, mx);
    let sse = |pts: &Points, a: f64| {
        (0..pts.t.len())
            .map(|k| {
                let r = 1.0 + (a - 1.0) * (b * pts.t[k]).sin().powi(2) - pts.p[k];
                pts.w[k] * r * r
            })
            .sum::<f64>()
    };
    (sse(pz, az) + sse(px, ax), az, ax, clamped)
}

/// Joint fit of `P_{0→0} = 1 + (a_z − 1) sin²(bT)` and
/// `P_{+→+} = 1 + (a_x − 1) sin²(bT)` sharing `b`.
pub fn fit_local_field(record_zz: &ShotRecord, record_xx: &ShotRecord) -> Result<FieldFit> {
    fit_local_field_with(record_zz, record_xx, DEFAULT_GRID)
}

pub fn fit_local_field_with(
    record_zz: &ShotRecord,
    record_xx: &ShotRecord,
    grid_points: usize,
) -> Result<FieldFit> {
    if record_zz.len() != record_xx.len()
        || record_zz
            .times
            .iter()
            .zip(&record_xx.times)
            .any(|(a, b)| (a - b).abs() > 1e-12 * (1.0 + a.abs()))
    {
        return Err(invalid("field records must share one time grid"));
    }
    let pz = sorted_points(record_zz)?;
    let px = sorted_points(record_xx)?;
    let n_grid = grid_points.max(2);
    let step = FIELD_SEARCH_MAX / n_grid as f64;

    // grid scan with phasors: sin²(bT) = (Im e^{ibT})²
    let mut mz = vec![Moments::default(); n_grid];
    let mut mx = vec![Moments::default(); n_grid];
    for (pts, acc) in [(&pz, &mut mz), (&px, &mut mx)] {
        for k in 0..pts.t.len() {
            let rot = C64::from_polar(1.0, step * pts.t[k]);
            let mut z = rot;
            let d = pts.p[k] - 1.0;
            for m in acc.iter_mut() {
                let s = z.im * z.im;
                m.ss += pts.w[k] * s * s;
                m.sd += pts.w[k] * s * d;
                z *= rot;
            }
        }
    }
    let base: f64 = pz
        .p
        .iter()
        .zip(&pz.w)
        .chain(px.p.iter().zip(&px.w))
        .map(|(p, w)| w * (p - 1.0).powi(2))
        .sum();
    let grid_sse = |g: usize| {
        let (az, ax, _) = field_amplitudes(mz[g], mx[g]);
        let part = |m: Moments, a: f64| -2.0 * (a - 1.0) * m.sd + (a - 1.0).powi(2) * m.ss;
        base + part(mz[g], az) + part(mx[g], ax)
    };
    let mut best = 0;
    let mut best_val = grid_sse(0);
    for g in 1..n_grid {
        let v = grid_sse(g);
        if v < best_val - 1e-13 * best_val.abs().max(1e-300) {
            best = g;
            best_val = v;
        }
    }
    let b_at = |g: usize| (g + 1) as f64 * step;
    let lo = if best == 0 { step * 1e-6 } else { b_at(best - 1) };
    let hi = b_at((best + 1).min(n_grid - 1));
    let (mut b, mut value) = golden_section(|b| field_sse(&pz, &px, b).0, lo, hi, 1e-13);
    let at_grid = field_sse(&pz, &px, b_at(best)).0;
    if at_grid < value {
        b = b_at(best);
        value = at_grid;
    }
    let edge = 1e-9;
    let converged = !(((b - lo).abs() <= edge && best > 0) || ((hi - b).abs() <= edge && best + 1 < n_grid));
    let (_, amp_z, amp_x, discriminant_clamped) = field_sse(&pz, &px, b);
    let magnitudes = [
        b * amp_x.sqrt(),
        b * (1.0 - amp_z - amp_x).max(0.0).sqrt(),
        b * amp_z.sqrt(),
    ];
    Ok(FieldFit {
        b,
        amp_z,
        amp_x,
        magnitudes,
        residual: value,
        discriminant_clamped,
        converged,
    })
}

/// Time `T*` with `b̂ T* = π/4` for the sign measurements.
pub fn sign_time(b_hat: f64) -> Option<f64> {
    (b_hat >= MIN_RESOLVED_FIELD).then(|| PI / (4.0 * b_hat))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignedField {
    /// Signed `(b_x, b_y, b_z)`.
    pub b: [f64; 3],
    pub signs: [i8; 3],
    /// At least one sign could not be resolved and was set to `+1`.
    pub tie: bool,
    /// `b̂` too small for any sign to be defined.
    pub undefined: bool,
}

/// Picks the sign assignment whose predicted `P_{+→0}(T*)` and
/// `P_{I→0}(T*)` best match the measured values.
pub fn disambiguate_signs(fit: &FieldFit, p_plus0: f64, p_i0: f64, t_star: f64) -> SignedField {
    if fit.b < MIN_RESOLVED_FIELD {
        return SignedField {
            b: fit.magnitudes,
            signs: [1; 3],
            tie: true,
            undefined: true,
        };
    }
    let mag = fit.magnitudes;
    let scale = norm3(mag).max(fit.b);
    let degenerate: Vec<bool> = mag.iter().map(|m| *m <= DEGENERATE_COMPONENT * scale).collect();
    let mut best: Option<([i8; 3], f64)> = None;
    let mut tie = degenerate.iter().any(|d| *d);
    for code in 0..8u8 {
        let signs: [i8; 3] = [0, 1, 2].map(|k| if code & (1 << k) != 0 { -1 } else { 1 });
        if (0..3).any(|k| degenerate[k] && signs[k] < 0) {
            continue;
        }
        let b = [0, 1, 2].map(|k| f64::from(signs[k]) * mag[k]);
        let r = (p_plus_to_0(b, t_star) - p_plus0).powi(2) + (p_i_to_0(b, t_star) - p_i0).powi(2);
        match best {
            None => best = Some((signs, r)),
            Some((_, rb)) if r < rb - 1e-15 => best = Some((signs, r)),
            Some((_, rb)) if r <= rb + 1e-15 => tie = true,
            _ => {}
        }
    }
    let (signs, _) = best.expect("at least the all-positive candidate is evaluated");
    SignedField {
        b: [0, 1, 2].map(|k| f64::from(signs[k]) * mag[k]),
        signs,
        tie,
        undefined: false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub sigma: Vec<f64>,
    pub mean: Vec<f64>,
    pub n_ok: usize,
    pub n_failed: usize,
    /// More than 10% of refits failed.
    pub flagged: bool,
}

/// Resamples every point count from `Binomial(N_m, p_m)` (noiseless records
/// are reused unchanged).
pub fn resample<R: rand::Rng + ?Sized>(record: &ShotRecord, rng: &mut R) -> ShotRecord {
    let Some(n) = record.n_shots else {
        return record.clone();
    };
    let mut out = record.clone();
    for (p, s) in out.p_m.iter_mut().zip(out.sigma_m.iter_mut()) {
        let k = Binomial::new(n, p.clamp(0.0, 1.0))
            .expect("clamped probability is valid")
            .sample(rng);
        *p = k as f64 / n as f64;
        *s = binomial_sigma(*p, n);
    }
    out
}

/// Parametric bootstrap: resample all `records`, refit with `refit`, and
/// report the per-parameter sample standard deviation. Resample `k` draws
/// from a stream derived from `(seed, k)`, so results do not depend on
/// execution order.
pub fn bootstrap_sigma<F>(records: &[ShotRecord], n_resamples: usize, seed: u64, refit: F) -> Result<BootstrapSummary>
where
    F: Fn(&[ShotRecord]) -> Option<Vec<f64>> + Sync + Send,
{
    if n_resamples < MIN_RESAMPLES {
        return Err(invalid(format!(
            "bootstrap needs at least {MIN_RESAMPLES} resamples, got {n_resamples}"
        )));
    }
    let outcomes = par::map_collect((0..n_resamples).collect(), |k| {
        let mut rng = child_rng(seed, &format!("resample-{k}"));
        let resampled: Vec<ShotRecord> = records.iter().map(|r| resample(r, &mut rng)).collect();
        refit(&resampled)
    });
    let ok: Vec<Vec<f64>> = outcomes.into_iter().flatten().collect();
    let n_ok = ok.len();
    let n_failed = n_resamples - n_ok;
    let dim = ok.first().map(|v| v.len()).unwrap_or(0);
    let mut mean = vec![0.0; dim];
    let mut sigma = vec![0.0; dim];
    if n_ok > 1 {
        for v in &ok {
            for (m, x) in mean.iter_mut().zip(v) {
                *m += x / n_ok as f64;
            }
        }
        for v in &ok {
            for ((s, x), m) in sigma.iter_mut().zip(v).zip(&mean) {
                *s += (x - m).powi(2);
            }
        }
        sigma.iter_mut().for_each(|s| *s = (*s / (n_ok - 1) as f64).sqrt());
    }
    Ok(BootstrapSummary {
        sigma,
        mean,
        n_ok,
        n_failed,
        flagged: n_failed * 10 > n_resamples,
    })
}

/// Refit used by the coupling bootstrap: three sine fits → `(c1, c2, c3)`.
pub fn couplings_from_records(records: &[ShotRecord], opts: &SineFitOptions) -> Option<Vec<f64>> {
    if records.len() != 3 {
        return None;
    }
    let mut w = [0.0; 3];
    for (k, r) in records.iter().enumerate() {
        let f = fit_sine_with(r, opts).ok()?;
        if !f.converged {
            return None;
        }
        w[k] = f.omega;
    }
    Some(couplings_from_frequencies(w[0], w[1], w[2]).to_vec())
}

/// Refit used by the field bootstrap: records are `[P_{0→0}, P_{+→+},
/// P_{+→0}(T*), P_{I→0}(T*)]`; returns signed `(b_x, b_y, b_z)`.
pub fn field_from_records(records: &[ShotRecord], t_star: f64) -> Option<Vec<f64>> {
    if records.len() != 4 {
        return None;
    }
    let fit = fit_local_field(&records[0], &records[1]).ok()?;
    let signed = disambiguate_signs(&fit, records[2].p_m[0], records[3].p_m[0], t_star);
    Some(signed.b.to_vec())
}
