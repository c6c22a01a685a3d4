//! Structural checks on `A`, `B` along an orbit and the explicit focusing
//! constants they imply.
//!
//! All time sampling uses `SAMPLES_PER_UNIT` points per unit of time.
//! Grid extrema are widened by half the largest adjacent jump so that the
//! returned bounds stay on the conservative side of the true extrema.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{propagate, DelayCoefficients, Segment};
use crate::driving::OmegaPoint;
use crate::error::{Error, Result};
use crate::numerics::simpson;

pub const SAMPLES_PER_UNIT: usize = 256;
const SUBGRID: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    /// Chain irreducibility of `B`; focusing horizon `N + 2`.
    #[serde(rename = "OA3")]
    Oa3,
    /// Entrywise positivity of `B`; focusing horizon `2`.
    #[serde(rename = "OA4")]
    Oa4,
}

impl Variant {
    pub fn horizon(self, n: usize) -> usize {
        match self {
            Variant::Oa3 => n + 2,
            Variant::Oa4 => 2,
        }
    }
}

/// Sign violation; indices are zero-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub matrix: char,
    pub i: usize,
    pub j: usize,
    pub t: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CooperativityReport {
    pub passed: bool,
    pub samples: usize,
    pub violation: Option<Violation>,
}

fn sample_times(horizon: f64) -> Vec<f64> {
    let count = ((horizon * SAMPLES_PER_UNIT as f64).ceil() as usize).max(1);
    (0..=count).map(|k| horizon * k as f64 / count as f64).collect()
}

/// `a_ij >= 0` for `i != j` and `b_ij >= 0` on a grid of `[0, horizon]`.
pub fn check_cooperativity(coeffs: &DelayCoefficients, omega: &OmegaPoint, horizon: f64) -> Result<CooperativityReport> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::Domain(format!("cooperativity horizon {horizon} must be positive")));
    }
    let n = coeffs.n();
    let times = sample_times(horizon);
    for &t in &times {
        let (a, b) = coeffs.matrices(omega, t);
        for i in 0..n {
            for j in 0..n {
                let (m, v) = if i != j && a[i * n + j] < 0.0 {
                    ('A', a[i * n + j])
                } else if b[i * n + j] < 0.0 {
                    ('B', b[i * n + j])
                } else {
                    continue;
                };
                return Ok(CooperativityReport {
                    passed: false,
                    samples: times.len(),
                    violation: Some(Violation { matrix: m, i, j, t, value: v }),
                });
            }
        }
    }
    Ok(CooperativityReport {
        passed: true,
        samples: times.len(),
        violation: None,
    })
}

/// Conservative entrywise minima and maxima of `B` over `[0, horizon]`.
fn b_extrema(coeffs: &DelayCoefficients, omega: &OmegaPoint, horizon: f64) -> (Vec<f64>, Vec<f64>) {
    let n = coeffs.n();
    let mut lo = vec![f64::INFINITY; n * n];
    let mut hi = vec![f64::NEG_INFINITY; n * n];
    let mut jump = vec![0.0f64; n * n];
    let mut prev: Option<Vec<f64>> = None;
    for t in sample_times(horizon) {
        let (_, b) = coeffs.matrices(omega, t);
        for e in 0..n * n {
            lo[e] = lo[e].min(b[e]);
            hi[e] = hi[e].max(b[e]);
            if let Some(p) = &prev {
                jump[e] = jump[e].max((b[e] - p[e]).abs());
            }
        }
        prev = Some(b);
    }
    for e in 0..n * n {
        lo[e] -= 0.5 * jump[e];
        hi[e] += 0.5 * jump[e];
    }
    (lo, hi)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IrreducibilityReport {
    pub passed: bool,
    /// Best chain minimum, minimized over starting indices.
    pub delta_lower: f64,
    /// Zero-based maximin chain for each starting index.
    pub chains: Vec<Vec<usize>>,
}

/// Exhaustive bottleneck search over chains through all indices.
fn best_chain(weights: &[f64], n: usize, start: usize) -> (f64, Vec<usize>) {
    fn dfs(w: &[f64], n: usize, path: &mut Vec<usize>, used: &mut [bool], floor: f64, best: &mut (f64, Vec<usize>)) {
        if path.len() == n {
            if floor > best.0 {
                *best = (floor, path.clone());
            }
            return;
        }
        let last = *path.last().unwrap();
        for next in 0..n {
            if used[next] {
                continue;
            }
            let f = floor.min(w[next * n + last]);
            if f <= best.0 {
                continue;
            }
            used[next] = true;
            path.push(next);
            dfs(w, n, path, used, f, best);
            path.pop();
            used[next] = false;
        }
    }
    let mut used = vec![false; n];
    used[start] = true;
    let mut path = vec![start];
    let mut best = (f64::NEG_INFINITY, Vec::new());
    dfs(weights, n, &mut path, &mut used, f64::INFINITY, &mut best);
    best
}

/// Chains `j_0 = i, j_1, ...` covering every index with
/// `b_{j_{l+1} j_l} >= δ` on `[0, N + 2]`. For `N = 1` the chain is trivial
/// and `δ` is the minimum of `b_11`.
pub fn check_irreducibility(coeffs: &DelayCoefficients, omega: &OmegaPoint) -> IrreducibilityReport {
    let n = coeffs.n();
    let (lo, _) = b_extrema(coeffs, omega, (n + 2) as f64);
    if n == 1 {
        return IrreducibilityReport {
            passed: lo[0] > 0.0,
            delta_lower: lo[0],
            chains: vec![vec![0]],
        };
    }
    let mut delta = f64::INFINITY;
    let mut chains = Vec::with_capacity(n);
    for i in 0..n {
        let (d, chain) = best_chain(&lo, n, i);
        delta = delta.min(d);
        chains.push(chain);
    }
    IrreducibilityReport {
        passed: delta > 0.0,
        delta_lower: delta,
        chains,
    }
}

/// `min_{i,j} min_{t ∈ [0,2]} b_ij`; positive iff the entrywise positivity
/// variant applies.
pub fn check_positivity(coeffs: &DelayCoefficients, omega: &OmegaPoint) -> (bool, f64) {
    let (lo, _) = b_extrema(coeffs, omega, 2.0);
    let d = lo.iter().copied().fold(f64::INFINITY, f64::min);
    (d > 0.0, d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionConstants {
    pub variant: Variant,
    pub n_components: usize,
    pub horizon: usize,
    /// Lower bound of `min_{s<t,k} ∫_{k+s}^{k+t} a_ii`; always `<= 0`.
    pub a_ii_lower: Vec<f64>,
    pub a_lower: f64,
    pub delta_lower: f64,
    pub delta_upper: f64,
    pub a_upper: f64,
    pub beta_lower: f64,
    pub beta_upper: f64,
    pub kappa: f64,
}

/// Lower bound for the minimal partial integral of `a_ii` over unit windows.
fn partial_integral_floor(coeffs: &DelayCoefficients, omega: &OmegaPoint, i: usize, windows: usize) -> f64 {
    let n = coeffs.n();
    let h = 1.0 / SUBGRID as f64;
    let mut floor = 0.0f64;
    for k in 0..windows {
        let vals: Vec<f64> = (0..=2 * SUBGRID)
            .map(|q| coeffs.matrices(omega, k as f64 + 0.5 * h * q as f64).0[i * n + i])
            .collect();
        let sup = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut cumulative = vec![0.0; SUBGRID + 1];
        let mut quad_err = 0.0;
        for c in 0..SUBGRID {
            let (l, mid, r) = (vals[2 * c], vals[2 * c + 1], vals[2 * c + 2]);
            let s = h / 6.0 * (l + 4.0 * mid + r);
            quad_err += (s - 0.5 * h * (l + r)).abs();
            cumulative[c + 1] = cumulative[c] + s;
        }
        let mut best = f64::INFINITY;
        let mut running_max = cumulative[0];
        for &f in &cumulative[1..] {
            best = best.min(f - running_max);
            running_max = running_max.max(f);
        }
        floor = floor.min(best - quad_err - 2.0 * h * sup);
    }
    floor.min(0.0)
}

/// Upper bound for `∫_0^T Σ_l max_k a_lk`.
fn row_max_integral(coeffs: &DelayCoefficients, omega: &OmegaPoint, horizon: usize) -> f64 {
    let n = coeffs.n();
    let fine = 2 * SUBGRID * horizon;
    let vals: Vec<f64> = (0..=fine)
        .map(|q| {
            let a = coeffs.matrices(omega, horizon as f64 * q as f64 / fine as f64).0;
            a.chunks(n)
                .map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max))
                .sum()
        })
        .collect();
    let h = horizon as f64 / fine as f64;
    let coarse: Vec<f64> = vals.iter().step_by(2).copied().collect();
    let f = simpson(&vals, h);
    f + (f - simpson(&coarse, 2.0 * h)).abs()
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

/// Explicit constants of the chosen variant along the orbit of `omega`.
pub fn compute_assumption_constants(
    coeffs: &DelayCoefficients,
    omega: &OmegaPoint,
    variant: Variant,
) -> Result<AssumptionConstants> {
    let n = coeffs.n();
    let horizon = variant.horizon(n);
    let delta_lower = match variant {
        Variant::Oa3 => {
            let r = check_irreducibility(coeffs, omega);
            if !r.passed {
                return Err(Error::Contract("B fails the chain irreducibility check".into()));
            }
            r.delta_lower
        }
        Variant::Oa4 => {
            let (ok, d) = check_positivity(coeffs, omega);
            if !ok {
                return Err(Error::Contract("B is not entrywise positive on [0, 2]".into()));
            }
            d
        }
    };
    let (_, hi) = b_extrema(coeffs, omega, horizon as f64);
    let delta_upper = hi.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let a_ii_lower: Vec<f64> = (0..n).map(|i| partial_integral_floor(coeffs, omega, i, horizon)).collect();
    let a_lower = a_ii_lower.iter().map(|v| v.exp()).fold(f64::INFINITY, f64::min);
    let a_upper = row_max_integral(coeffs, omega, horizon).exp();

    let nd = n as f64 * delta_upper;
    let (beta_lower, beta_upper) = match variant {
        Variant::Oa3 => {
            let lower = (1..=n)
                .flat_map(|k| {
                    let base = delta_lower.powi(k as i32) / factorial(k);
                    [a_lower.powi(n as i32 + 2) * base, a_lower.powi(n as i32 + 3) * base]
                })
                .fold(f64::INFINITY, f64::min);
            let common = a_upper.powi(n as i32 + 2) * (1.0 + nd).powi(n as i32 + 1);
            (lower, common.max(common * nd))
        }
        Variant::Oa4 => {
            let common = a_upper.powi(2) * (1.0 + nd);
            (a_lower.powi(2) * delta_lower, common.max(common * nd))
        }
    };
    let kappa = beta_upper / beta_lower;
    let all = [a_lower, delta_lower, delta_upper, a_upper, beta_lower, beta_upper, kappa];
    if all.iter().any(|v| !v.is_finite()) || a_ii_lower.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite assumption constant".into()));
    }
    Ok(AssumptionConstants {
        variant,
        n_components: n,
        horizon,
        a_ii_lower,
        a_lower,
        delta_lower,
        delta_upper,
        a_upper,
        beta_lower,
        beta_upper,
        kappa,
    })
}

/// Sampling plan for `verify_focusing`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FocusingSamples {
    pub count: usize,
    pub grid: usize,
    pub seed: u64,
}

impl Default for FocusingSamples {
    fn default() -> Self {
        Self {
            count: 100,
            grid: 32,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FocusingReport {
    pub samples: usize,
    /// `min (U(T)u0)_i / F(u0) - β̲` over nodes, components and samples.
    pub lower_margin: f64,
    /// `min β̄ - (U(T)u0)_i / F(u0)` over the same set.
    pub upper_margin: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub e: Vec<f64>,
    pub horizon: usize,
}

pub const FOCUSING_TOLERANCE: f64 = 1e-9;

/// Margins of `β̲ F(u0) e <= U(T)u0 <= β̄ F(u0) e` where
/// `F(u0) = |u0(0)|_1 + ∫_0^1 |u0(τ-1)|_1 dτ` (trapezoid rule). Zero input
/// meets both bounds with equality and does not constrain the margins.
fn sample_margins(coeffs: &DelayCoefficients, omega: &OmegaPoint, c: &AssumptionConstants, u0: &Segment) -> Result<(f64, f64)> {
    let factor = u0.head().iter().map(|v| v.abs()).sum::<f64>() + u0.history_l1_integral();
    if factor == 0.0 {
        return Ok((f64::INFINITY, f64::INFINITY));
    }
    let u = propagate(coeffs, omega, c.horizon as f64, u0)?;
    let mut lower = f64::INFINITY;
    let mut upper = f64::INFINITY;
    for &v in u.values() {
        let r = v / factor;
        lower = lower.min(r - c.beta_lower);
        upper = upper.min(c.beta_upper - r);
    }
    Ok((lower, upper))
}

/// Cone samples: the zero segment, `count` i.i.d. uniform segments, one per
/// component with that component zeroed, and one supported on the history
/// only (vanishing at `τ = 0`) with the last component zeroed.
fn focusing_segments(n: usize, plan: FocusingSamples) -> Result<Vec<Segment>> {
    let m = plan.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut out = vec![Segment::zeros(n, m)?];
    for _ in 0..plan.count {
        let values = (0..n * (m + 1)).map(|_| rng.random::<f64>()).collect();
        out.push(Segment::new(n, m, values)?);
    }
    let zeroable = if n > 1 { n } else { 0 };
    for zeroed in 0..zeroable {
        let mut values: Vec<f64> = (0..n * (m + 1)).map(|_| rng.random::<f64>()).collect();
        for k in 0..=m {
            values[k * n + zeroed] = 0.0;
        }
        out.push(Segment::new(n, m, values)?);
    }
    let history = Segment::from_fn(n, m, |tau| {
        let bump = (std::f64::consts::PI * (tau + 1.0)).sin().powi(2);
        (0..n).map(|i| if i + 1 == n && n > 1 { 0.0 } else { bump }).collect()
    })?;
    out.push(history);
    Ok(out)
}

pub fn verify_focusing(
    coeffs: &DelayCoefficients,
    omega: &OmegaPoint,
    constants: &AssumptionConstants,
    plan: FocusingSamples,
) -> Result<FocusingReport> {
    let n = coeffs.n();
    if constants.n_components != n || constants.horizon != constants.variant.horizon(n) {
        return Err(Error::Contract("constants were computed for a different system".into()));
    }
    let structural = match constants.variant {
        Variant::Oa3 => check_irreducibility(coeffs, omega).passed,
        Variant::Oa4 => check_positivity(coeffs, omega).0,
    };
    if !structural {
        return Err(Error::Contract(format!(
            "{:?} structural check fails for these coefficients",
            constants.variant
        )));
    }
    let segments = focusing_segments(n, plan)?;
    let mut lower = f64::INFINITY;
    let mut upper = f64::INFINITY;
    for u0 in &segments {
        let (l, u) = sample_margins(coeffs, omega, constants, u0)?;
        lower = lower.min(l);
        upper = upper.min(u);
    }
    if !lower.is_finite() || !upper.is_finite() {
        return Err(Error::Numerical("non-finite focusing margin".into()));
    }
    let tolerance = FOCUSING_TOLERANCE;
    Ok(FocusingReport {
        samples: segments.len(),
        lower_margin: lower,
        upper_margin: upper,
        tolerance,
        passed: lower >= -tolerance && upper >= -tolerance,
        e: vec![1.0; n],
        horizon: constants.horizon,
    })
}

/// Margins for a single segment, exposed for targeted checks.
pub fn focusing_margins(
    coeffs: &DelayCoefficients,
    omega: &OmegaPoint,
    constants: &AssumptionConstants,
    u0: &Segment,
) -> Result<(f64, f64)> {
    sample_margins(coeffs, omega, constants, u0)
}

/// `(1/n) Σ_k ln(2N β̲(θ_{kT}ω)) / T` over `blocks` consecutive focusing
/// windows of length `T`: the lower bound the top exponent must respect.
pub fn exponent_floor(coeffs: &DelayCoefficients, omega: &OmegaPoint, variant: Variant, blocks: usize) -> Result<f64> {
    if blocks == 0 {
        return Err(Error::Domain("exponent floor needs at least one block".into()));
    }
    let n = coeffs.n();
    let horizon = variant.horizon(n) as f64;
    let mut total = 0.0;
    for k in 0..blocks {
        let w = coeffs.driving().advance(omega, k as f64 * horizon);
        let c = compute_assumption_constants(coeffs, &w, variant)?;
        total += (2.0 * n as f64 * c.beta_lower).ln();
    }
    Ok(total / (blocks as f64 * horizon))
}
