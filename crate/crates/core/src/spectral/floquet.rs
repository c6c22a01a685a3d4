//! Principal Floquet vectors by pullback, and entire orbits through them.

use serde::Serialize;

use super::{hilbert_metric, normalize, AdjointView, ConePropagator};
use crate::driving::OmegaPoint;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PullbackOptions {
    /// Deepest start `θ_{-T}ω` tried, in unit steps.
    pub max_depth: usize,
    /// Stop once consecutive approximants are within this Hilbert distance.
    pub tol: f64,
}

impl Default for PullbackOptions {
    fn default() -> Self {
        Self {
            max_depth: 200,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FloquetVector {
    pub w: Vec<f64>,
    pub depth: usize,
    pub residual: f64,
    pub residuals: Vec<f64>,
}

/// Normalized `U_{θ_{-T}ω}(T) e`, pushed through unit steps.
fn pull<P: ConePropagator + ?Sized>(prop: &P, omega: &OmegaPoint, depth: usize, e: &[f64]) -> Result<Vec<f64>> {
    let mut u = e.to_vec();
    for k in 0..depth {
        let w = prop.shift(omega, k as f64 - depth as f64);
        u = normalize(prop, prop.unit_step(&w, &u)?).0;
    }
    Ok(u)
}

/// `w(ω)` as the limit of normalized pullbacks of `e`. A zero depth budget
/// returns `e` itself.
pub fn pullback_floquet<P: ConePropagator + ?Sized>(
    prop: &P,
    omega: &OmegaPoint,
    opts: PullbackOptions,
) -> Result<FloquetVector> {
    if !(opts.tol > 0.0) {
        return Err(Error::Config("pullback tolerance must be positive".into()));
    }
    let e = prop.reference();
    if opts.max_depth == 0 {
        return Ok(FloquetVector {
            w: e,
            depth: 0,
            residual: 0.0,
            residuals: Vec::new(),
        });
    }
    let mut prev = e.clone();
    let mut residuals = Vec::new();
    for depth in 1..=opts.max_depth {
        let cur = pull(prop, omega, depth, &e)?;
        let d = hilbert_metric(&cur, &prev);
        residuals.push(d);
        if d <= opts.tol {
            return Ok(FloquetVector {
                w: cur,
                depth,
                residual: d,
                residuals,
            });
        }
        prev = cur;
    }
    Err(Error::Convergence {
        horizon: opts.max_depth,
        residuals,
    })
}

/// `w*(ω)`: pullback of `e*` through the dual cocycle.
pub fn dual_floquet<P: ConePropagator + ?Sized>(
    prop: &P,
    omega: &OmegaPoint,
    opts: PullbackOptions,
) -> Result<FloquetVector> {
    if !prop.has_adjoint() {
        return Err(Error::Unsupported("dual Floquet vector needs an adjoint".into()));
    }
    pullback_floquet(&AdjointView(prop), omega, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FloquetSample {
    pub omega: Vec<f64>,
    pub w: Vec<f64>,
    pub w_star: Vec<f64>,
    pub pairing: f64,
    pub depth: usize,
    pub depth_dual: usize,
    pub residual: f64,
    pub residual_dual: f64,
}

pub fn floquet_sample<P: ConePropagator + ?Sized>(
    prop: &P,
    omega: &OmegaPoint,
    opts: PullbackOptions,
) -> Result<FloquetSample> {
    let w = pullback_floquet(prop, omega, opts)?;
    let ws = dual_floquet(prop, omega, opts)?;
    let pairing = prop.pairing(&w.w, &ws.w);
    Ok(FloquetSample {
        omega: omega.coords().to_vec(),
        pairing,
        depth: w.depth,
        depth_dual: ws.depth,
        residual: w.residual,
        residual_dual: ws.residual,
        w: w.w,
        w_star: ws.w,
    })
}

/// State `exp(log_scale) · unit` of the entire orbit at integer time `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitPoint {
    pub t: i64,
    pub unit: Vec<f64>,
    pub log_scale: f64,
}

/// The entire positive orbit `v_ω` through `w(ω)` with `‖v_ω(0)‖ = 1`, at
/// the queried integer times in `[-back, ∞)`. The orbit is started from
/// the converged pullback vector at `θ_{-back}ω` and carried forward with
/// separate log scales.
pub fn entire_orbit<P: ConePropagator + ?Sized>(
    prop: &P,
    omega: &OmegaPoint,
    back: usize,
    queries: &[i64],
    opts: PullbackOptions,
) -> Result<Vec<OrbitPoint>> {
    if let Some(&q) = queries.iter().find(|&&q| q < -(back as i64)) {
        return Err(Error::Domain(format!("query time {q} lies before the pullback depth -{back}")));
    }
    let last = queries.iter().copied().max().unwrap_or(0).max(0);
    let start = prop.shift(omega, -(back as f64));
    let mut u = pullback_floquet(prop, &start, opts)?.w;
    let mut states = Vec::with_capacity(back + last as usize + 1);
    let mut log = 0.0;
    states.push((u.clone(), log));
    for k in 0..(back as i64 + last) {
        let w = prop.shift(omega, (k - back as i64) as f64);
        let (unit, lr) = normalize(prop, prop.unit_step(&w, &u)?);
        if !lr.is_finite() {
            return Err(Error::Numerical("orbit collapsed to zero".into()));
        }
        log += lr;
        u = unit;
        states.push((u.clone(), log));
    }
    let zero = states[back].1;
    Ok(queries
        .iter()
        .map(|&t| {
            let (unit, l) = &states[(t + back as i64) as usize];
            OrbitPoint {
                t,
                unit: unit.clone(),
                log_scale: l - zero,
            }
        })
        .collect())
}
