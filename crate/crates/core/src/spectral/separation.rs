//! The projection along the principal line, the second exponent and the
//! cone contraction diagnostic.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{dual_floquet, hilbert_metric, normalize, pullback_floquet, ConePropagator, PullbackOptions};
use crate::driving::OmegaPoint;
use crate::error::{Error, Result};
use crate::numerics::{linear_fit, CompensatedSum};

/// `P̃u = u - (⟨u, w*⟩ / ⟨w, w*⟩) w`: projection onto `{⟨·, w*⟩ = 0}` along `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub w: Vec<f64>,
    pub w_star: Vec<f64>,
    pub pairing: f64,
}

pub fn make_projection<P: ConePropagator + ?Sized>(prop: &P, w: Vec<f64>, w_star: Vec<f64>) -> Result<Projection> {
    let pairing = prop.pairing(&w, &w_star);
    if !(pairing > 0.0) {
        return Err(Error::DegeneratePairing(pairing));
    }
    Ok(Projection { w, w_star, pairing })
}

impl Projection {
    pub fn apply<P: ConePropagator + ?Sized>(&self, prop: &P, u: &[f64]) -> Vec<f64> {
        let c = prop.pairing(u, &self.w_star) / self.pairing;
        u.iter().zip(&self.w).map(|(a, b)| a - c * b).collect()
    }

    /// `‖P̃‖ = ‖w‖‖w*‖ / ⟨w, w*⟩`, exact for an oblique rank-one complement
    /// in an inner-product norm.
    pub fn norm<P: ConePropagator + ?Sized>(&self, prop: &P) -> f64 {
        prop.norm(&self.w) * prop.norm(&self.w_star) / self.pairing
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparationOptions {
    pub horizon: usize,
    /// Fresh dual pullback every `refresh` steps.
    pub refresh: usize,
    pub burn_in: usize,
    pub pullback: PullbackOptions,
    /// Seed of the generic start vector of the complementary iteration.
    pub seed: u64,
}

impl SeparationOptions {
    pub fn new(horizon: usize) -> Self {
        Self {
            horizon,
            refresh: 10,
            burn_in: 0,
            pullback: PullbackOptions::default(),
            seed: 0,
        }
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationEstimate {
    pub lambda1: f64,
    pub lambda2: f64,
    pub sigma: f64,
    /// `(t, ln‖P̃(θ_tω)‖ / t)` for `t = 1..=T`.
    pub temperedness: Vec<(f64, f64)>,
    /// Linear-fit slope of the temperedness trace over `[T/2, T]`.
    pub temperedness_slope: f64,
}

/// Dual vectors `w*(θ_kω)` for `k = start..=end`: a fresh pullback at the
/// right end, filled leftwards by `w*(θ_{k-1}ω) ∝ U*_{θ_kω}(1) w*(θ_kω)`.
fn dual_block<P: ConePropagator + ?Sized>(
    prop: &P,
    omega: &OmegaPoint,
    start: usize,
    end: usize,
    opts: PullbackOptions,
) -> Result<Vec<Vec<f64>>> {
    let mut out = vec![Vec::new(); end - start + 1];
    let mut ws = dual_floquet(prop, &prop.shift(omega, end as f64), opts)?.w;
    out[end - start] = ws.clone();
    for k in (start + 1..=end).rev() {
        ws = normalize(prop, prop.adjoint_unit_step(&prop.shift(omega, k as f64), &ws)?).0;
        out[k - 1 - start] = ws.clone();
    }
    Ok(out)
}

/// `λ̂₁` along the principal line, `λ̂₂` from the iteration
/// `v ← P̃(θ_{k+1}ω) U_{θ_kω}(1) v`, and `σ̂ = λ̂₁ - λ̂₂`.
pub fn separation<P: ConePropagator + ?Sized>(
    prop: &P,
    omega: &OmegaPoint,
    opts: SeparationOptions,
) -> Result<SeparationEstimate> {
    if !prop.has_adjoint() {
        return Err(Error::Unsupported("separation needs an adjoint".into()));
    }
    let t = opts.horizon;
    if t < 2 || opts.refresh == 0 || opts.burn_in >= t {
        return Err(Error::Domain("separation needs horizon >= 2, refresh >= 1, burn_in < horizon".into()));
    }
    let mut w = pullback_floquet(prop, omega, opts.pullback)?.w;
    let mut duals = dual_block(prop, omega, 0, opts.refresh.min(t), opts.pullback)?;
    let mut block_start = 0;
    let dual_at = |k: usize, duals: &mut Vec<Vec<f64>>, block_start: &mut usize| -> Result<Vec<f64>> {
        if k > *block_start + duals.len() - 1 {
            *block_start += duals.len() - 1;
            let end = (*block_start + opts.refresh).min(t);
            *duals = dual_block(prop, omega, *block_start, end, opts.pullback)?;
        }
        Ok(duals[k - *block_start].clone())
    };

    let mut proj = make_projection(prop, w.clone(), dual_at(0, &mut duals, &mut block_start)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let generic: Vec<f64> = (0..prop.dim()).map(|_| rng.random::<f64>() - 0.5).collect();
    let mut v = normalize(prop, proj.apply(prop, &generic)).0;

    let (mut acc1, mut acc2) = (CompensatedSum::default(), CompensatedSum::default());
    let mut temperedness = Vec::with_capacity(t);
    for k in 0..t {
        let here = prop.shift(omega, k as f64);
        let (wn, l1) = normalize(prop, prop.unit_step(&here, &w)?);
        proj = make_projection(prop, wn.clone(), dual_at(k + 1, &mut duals, &mut block_start)?)?;
        let (vn, l2) = normalize(prop, proj.apply(prop, &prop.unit_step(&here, &v)?));
        if !l1.is_finite() || !l2.is_finite() {
            return Err(Error::Numerical("separation iteration lost its scale".into()));
        }
        if k >= opts.burn_in {
            acc1.add(l1);
            acc2.add(l2);
        }
        w = wn;
        v = vn;
        let time = (k + 1) as f64;
        temperedness.push((time, proj.norm(prop).ln() / time));
    }
    let span = (t - opts.burn_in) as f64;
    let lambda1 = acc1.value() / span;
    let lambda2 = acc2.value() / span;
    let tail = &temperedness[t / 2..];
    let (x, y): (Vec<f64>, Vec<f64>) = tail.iter().copied().unzip();
    Ok(SeparationEstimate {
        lambda1,
        lambda2,
        sigma: lambda1 - lambda2,
        temperedness_slope: linear_fit(&x, &y).0,
        temperedness,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionReport {
    /// Hilbert distances per pair: initial, then after each application.
    pub traces: Vec<Vec<f64>>,
    /// Largest distance between images after the first application.
    pub image_diameter: f64,
    /// `2 ln κ` when a distortion bound is supplied.
    pub diameter_bound: Option<f64>,
    pub monotone: bool,
    pub passed: bool,
}

/// Applies `U(horizon)` `steps` times along the orbit to each pair and
/// checks that Hilbert distances never grow and that image pairs stay
/// within `2 ln κ`.
pub fn contraction_diagnostic<P: ConePropagator + ?Sized>(
    prop: &P,
    omega: &OmegaPoint,
    pairs: &[(Vec<f64>, Vec<f64>)],
    steps: usize,
    horizon: f64,
    kappa: Option<f64>,
) -> Result<ContractionReport> {
    let mut traces = Vec::with_capacity(pairs.len());
    let mut image_diameter = 0.0f64;
    let mut monotone = true;
    for (u0, v0) in pairs {
        let (mut u, mut v) = (u0.clone(), v0.clone());
        let mut trace = vec![hilbert_metric(&u, &v)];
        for k in 0..steps {
            let w = prop.shift(omega, k as f64 * horizon);
            u = normalize(prop, prop.propagate(&w, horizon, &u)?).0;
            v = normalize(prop, prop.propagate(&w, horizon, &v)?).0;
            let d = hilbert_metric(&u, &v);
            let prev = *trace.last().unwrap();
            if d > prev * (1.0 + 1e-9) + 1e-12 {
                monotone = false;
            }
            if k == 0 {
                image_diameter = image_diameter.max(d);
            }
            trace.push(d);
        }
        traces.push(trace);
    }
    let diameter_bound = kappa.map(|k| 2.0 * k.ln());
    let passed = monotone && diameter_bound.is_none_or(|b| image_diameter <= b);
    Ok(ContractionReport {
        traces,
        image_diameter,
        diameter_bound,
        monotone,
        passed,
    })
}
