//! Estimators for the principal spectral data of positive cocycles: top
//! Lyapunov exponent, principal Floquet vectors by pullback, dual vectors,
//! entire orbits, the invariant projection and the separation gap.
//!
//! Everything is written against [`ConePropagator`], which exposes the
//! cocycle through flat state vectors.

mod exponent;
mod floquet;
mod separation;

pub use exponent::{
    exponent_agreement, operator_norm_log_trace, operator_norm_rate, top_exponent, ExponentAgreement,
    ExponentEstimate, ExponentOptions, TracePoint, MINUS_INFINITY_FLOOR,
};
pub use floquet::{
    dual_floquet, entire_orbit, floquet_sample, pullback_floquet, FloquetSample, FloquetVector, OrbitPoint,
    PullbackOptions,
};
pub use separation::{
    contraction_diagnostic, make_projection, separation, ContractionReport, Projection, SeparationEstimate,
    SeparationOptions,
};

use crate::delay::{DelayCocycle, Segment};
use crate::driving::{Driving, OmegaPoint};
use crate::error::{Error, Result};
use crate::parabolic::ParabolicCocycle;

/// A positive linear cocycle over a driving flow, acting on flat states.
pub trait ConePropagator: Send + Sync {
    fn dim(&self) -> usize;

    fn driving(&self) -> &Driving;

    /// The base point the cocycle reaches after time `t`.
    fn shift(&self, omega: &OmegaPoint, t: f64) -> OmegaPoint {
        self.driving().advance(omega, t)
    }

    /// `U_ω(t) u`.
    fn propagate(&self, omega: &OmegaPoint, t: f64, u: &[f64]) -> Result<Vec<f64>>;

    fn unit_step(&self, omega: &OmegaPoint, u: &[f64]) -> Result<Vec<f64>> {
        self.propagate(omega, 1.0, u)
    }

    /// `U*_ω(t) u`, the dual cocycle over `θ_{-t}`.
    fn adjoint(&self, _omega: &OmegaPoint, _t: f64, _u: &[f64]) -> Result<Vec<f64>> {
        Err(Error::Unsupported("this cocycle has no adjoint".into()))
    }

    fn adjoint_unit_step(&self, omega: &OmegaPoint, u: &[f64]) -> Result<Vec<f64>> {
        self.adjoint(omega, 1.0, u)
    }

    fn has_adjoint(&self) -> bool {
        false
    }

    fn norm(&self, u: &[f64]) -> f64;

    fn pairing(&self, u: &[f64], v: &[f64]) -> f64 {
        crate::numerics::dot(u, v)
    }

    /// Unit-norm cone vector `e`.
    fn reference(&self) -> Vec<f64>;

    /// Unit-norm dual cone vector `e*`.
    fn reference_dual(&self) -> Vec<f64> {
        self.reference()
    }

    fn in_cone(&self, u: &[f64]) -> bool {
        u.iter().all(|&v| v >= 0.0)
    }
}

impl ConePropagator for DelayCocycle {
    fn dim(&self) -> usize {
        self.coeffs().n() * (self.grid() + 1)
    }

    fn driving(&self) -> &Driving {
        self.coeffs().driving()
    }

    fn propagate(&self, omega: &OmegaPoint, t: f64, u: &[f64]) -> Result<Vec<f64>> {
        let seg = self.segment(u.to_vec())?;
        Ok(crate::delay::propagate(self.coeffs(), omega, t, &seg)?.into_values())
    }

    /// `max_τ |u(τ)|_2`.
    fn norm(&self, u: &[f64]) -> f64 {
        let n = self.coeffs().n();
        u.chunks(n)
            .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Constant segment `(1, ..., 1)/√N`.
    fn reference(&self) -> Vec<f64> {
        let n = self.coeffs().n();
        vec![1.0 / (n as f64).sqrt(); self.dim()]
    }
}

impl ConePropagator for ParabolicCocycle {
    fn dim(&self) -> usize {
        self.grid().len()
    }

    fn driving(&self) -> &Driving {
        &self.coeffs().driving
    }

    fn propagate(&self, omega: &OmegaPoint, t: f64, u: &[f64]) -> Result<Vec<f64>> {
        self.propagate_values(omega, t, u)
    }

    fn adjoint(&self, omega: &OmegaPoint, t: f64, u: &[f64]) -> Result<Vec<f64>> {
        self.propagate_adjoint_values(omega, t, u)
    }

    fn has_adjoint(&self) -> bool {
        true
    }

    fn norm(&self, u: &[f64]) -> f64 {
        self.grid().norm(u)
    }

    fn pairing(&self, u: &[f64], v: &[f64]) -> f64 {
        self.grid().inner(u, v)
    }

    fn reference(&self) -> Vec<f64> {
        self.grid().reference()
    }
}

/// The dual cocycle viewed as a forward cocycle over the reversed flow.
pub struct AdjointView<'a, P: ConePropagator + ?Sized>(pub &'a P);

impl<P: ConePropagator + ?Sized> ConePropagator for AdjointView<'_, P> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn driving(&self) -> &Driving {
        self.0.driving()
    }

    fn shift(&self, omega: &OmegaPoint, t: f64) -> OmegaPoint {
        self.0.shift(omega, -t)
    }

    fn propagate(&self, omega: &OmegaPoint, t: f64, u: &[f64]) -> Result<Vec<f64>> {
        self.0.adjoint(omega, t, u)
    }

    fn norm(&self, u: &[f64]) -> f64 {
        self.0.norm(u)
    }

    fn pairing(&self, u: &[f64], v: &[f64]) -> f64 {
        self.0.pairing(u, v)
    }

    fn reference(&self) -> Vec<f64> {
        self.0.reference_dual()
    }

    fn reference_dual(&self) -> Vec<f64> {
        self.0.reference()
    }

    fn in_cone(&self, u: &[f64]) -> bool {
        self.0.in_cone(u)
    }
}

/// Hilbert projective distance `ln(max(u/v) · max(v/u))` over the nodes
/// where either entry is positive. `∞` when the vectors are not comparable
/// or either leaves the cone; `0` for two zero vectors.
pub fn hilbert_metric(u: &[f64], v: &[f64]) -> f64 {
    let mut muv = 0.0f64;
    let mut mvu = 0.0f64;
    for (&a, &b) in u.iter().zip(v) {
        if a < 0.0 || b < 0.0 {
            return f64::INFINITY;
        }
        if a == 0.0 && b == 0.0 {
            continue;
        }
        if a == 0.0 || b == 0.0 {
            return f64::INFINITY;
        }
        muv = muv.max(a / b);
        mvu = mvu.max(b / a);
    }
    if muv == 0.0 {
        return 0.0;
    }
    (muv * mvu).ln().max(0.0)
}

/// Unit vector and the log of the norm it was divided by.
fn normalize<P: ConePropagator + ?Sized>(prop: &P, mut u: Vec<f64>) -> (Vec<f64>, f64) {
    let r = prop.norm(&u);
    if r > 0.0 && r.is_finite() {
        crate::numerics::scale(&mut u, 1.0 / r);
    }
    (u, r.ln())
}

fn require_cone_nonzero<P: ConePropagator + ?Sized>(prop: &P, u: &[f64]) -> Result<()> {
    if u.len() != prop.dim() {
        return Err(Error::Contract(format!("state has {} entries, expected {}", u.len(), prop.dim())));
    }
    if !prop.in_cone(u) {
        return Err(Error::Contract("initial state must lie in the cone".into()));
    }
    if prop.norm(u) == 0.0 {
        return Err(Error::Contract("initial state must be nonzero".into()));
    }
    Ok(())
}

/// Segment view of a delay state, for output.
pub fn as_segment(prop: &DelayCocycle, u: &[f64]) -> Result<Segment> {
    prop.segment(u.to_vec())
}
