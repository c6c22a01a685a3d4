//! Comparison, sandwich, Harnack and adjoint cross-checks.

use std::sync::Arc;

use serde::Serialize;

use super::{GridFunction, ParabolicCocycle, ParabolicCoefficients};
use crate::driving::{Driving, OmegaPoint};
use crate::error::{Error, Result};
use crate::numerics::Tridiagonal;

/// Largest step for which one Crank–Nicolson step of `L` is entrywise
/// nonnegative: off-diagonals `>= 0`, `τ <= 2/|L_ii|`, `τ·rowsum_i/2 < 1`.
/// `None` when an off-diagonal entry is negative (no step size helps).
pub fn positivity_threshold(l: &Tridiagonal) -> Option<f64> {
    let n = l.len();
    let mut limit = f64::INFINITY;
    for i in 0..n {
        if (i > 0 && l.lower[i] < 0.0) || (i + 1 < n && l.upper[i] < 0.0) {
            return None;
        }
        if l.diag[i] < 0.0 {
            limit = limit.min(2.0 / -l.diag[i]);
        }
        let rs = l.row_sum(i);
        if rs > 0.0 {
            limit = limit.min(2.0 / rs * (1.0 - 1e-12));
        }
    }
    Some(limit)
}

/// Envelope violations of `c0` on the step grid of `[0, t]`.
fn check_envelopes(p: &ParabolicCocycle, omega: &OmegaPoint, t: f64) -> Result<()> {
    let c = p.coeffs();
    let nodes = p.grid().nodes();
    let mut vals = vec![0.0; nodes.len()];
    let steps = p.steps_for(t)?;
    for k in 0..=steps {
        let w = c.driving.advance(omega, k as f64 * p.dt());
        c.c0.fill(&w, &nodes, &mut vals);
        let (lo, hi) = (c.c0_lower.eval(&w), c.c0_upper.eval(&w));
        if let Some(v) = vals.iter().find(|&&v| v < lo || v > hi) {
            return Err(Error::Contract(format!(
                "c0 = {v} leaves its envelope [{lo}, {hi}] at t = {}",
                k as f64 * p.dt()
            )));
        }
    }
    Ok(())
}

fn require_cone(u0: &GridFunction) -> Result<()> {
    if !u0.is_in_cone() {
        return Err(Error::Contract("initial state must lie in the cone".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichReport {
    /// `min (U u0 - exp(∫c0⁻) U⁰ u0)`.
    pub lower_margin: f64,
    /// `min (exp(∫c0⁺) U⁰ u0 - U u0)`.
    pub upper_margin: f64,
    /// `max |U u0 - exp(∫c0⁻) U⁰ u0| / max |U u0|`.
    pub lower_gap: f64,
    /// `max |exp(∫c0⁺) U⁰ u0 - U u0| / max |U u0|`.
    pub upper_gap: f64,
}

/// `exp(∫c0⁻) U⁰u0 <= U u0 <= exp(∫c0⁺) U⁰u0` nodewise. The integrals use
/// the trapezoid rule on the propagator's own sub-steps, which makes the
/// discrete bound exact whenever each Crank–Nicolson factor is nonnegative.
pub fn sandwich(p: &ParabolicCocycle, omega: &OmegaPoint, t: f64, u0: &GridFunction) -> Result<SandwichReport> {
    require_cone(u0)?;
    check_envelopes(p, omega, t)?;
    let u = p.propagate(omega, t, u0)?;
    let u_free = p.propagate_zero_order_free(omega, t, u0)?;
    let (lo, hi) = p.envelope_integrals(omega, t)?;
    let (el, eh) = (lo.exp(), hi.exp());
    let scale = crate::numerics::max_abs(u.values()).max(f64::MIN_POSITIVE);
    let mut r = SandwichReport {
        lower_margin: f64::INFINITY,
        upper_margin: f64::INFINITY,
        lower_gap: 0.0,
        upper_gap: 0.0,
    };
    for (&v, &f) in u.values().iter().zip(u_free.values()) {
        let dl = v - el * f;
        let du = eh * f - v;
        r.lower_margin = r.lower_margin.min(dl);
        r.upper_margin = r.upper_margin.min(du);
        r.lower_gap = r.lower_gap.max(dl.abs() / scale);
        r.upper_gap = r.upper_gap.max(du.abs() / scale);
    }
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    /// `min (U₂ u0 - U₁ u0)` over nodes.
    pub margin: f64,
    pub sandwich_first: SandwichReport,
    pub sandwich_second: SandwichReport,
}

/// Same data except `c0`, with `c0` of the first system below the second.
fn same_except_c0(a: &ParabolicCoefficients, b: &ParabolicCoefficients) -> bool {
    use super::Boundary::*;
    let boundary = match (&a.boundary, &b.boundary) {
        (Dirichlet, Dirichlet) | (Neumann, Neumann) => true,
        (Robin { left: l1, right: r1 }, Robin { left: l2, right: r2 }) => Arc::ptr_eq(l1, l2) && Arc::ptr_eq(r1, r2),
        _ => false,
    };
    boundary
        && a.driving == b.driving
        && a.alpha0 == b.alpha0
        && Arc::ptr_eq(&a.a11, &b.a11)
        && Arc::ptr_eq(&a.a1, &b.a1)
        && Arc::ptr_eq(&a.b1, &b.b1)
}

fn check_order(first: &ParabolicCocycle, second: &ParabolicCocycle, omega: &OmegaPoint, t: f64) -> Result<()> {
    let nodes = first.grid().nodes();
    let mut a = vec![0.0; nodes.len()];
    let mut b = vec![0.0; nodes.len()];
    let steps = first.steps_for(t)?;
    for k in 0..=steps {
        let w = first.coeffs().driving.advance(omega, k as f64 * first.dt());
        first.coeffs().c0.fill(&w, &nodes, &mut a);
        second.coeffs().c0.fill(&w, &nodes, &mut b);
        if a.iter().zip(&b).any(|(x, y)| x > y) {
            return Err(Error::Contract("c0 of the first system exceeds the second".into()));
        }
    }
    Ok(())
}

/// Comparison of two systems that differ only in `c0`, `c0⁽¹⁾ <= c0⁽²⁾`,
/// plus the envelope sandwich for each.
pub fn check_comparison(
    first: &ParabolicCocycle,
    second: &ParabolicCoefficients,
    omega: &OmegaPoint,
    t: f64,
    u0: &GridFunction,
) -> Result<ComparisonReport> {
    require_cone(u0)?;
    if !same_except_c0(first.coeffs(), second) {
        return Err(Error::Contract("systems must differ only in c0".into()));
    }
    let second = first.with_coeffs(second.clone())?;
    check_order(first, &second, omega, t)?;
    let u1 = first.propagate(omega, t, u0)?;
    let u2 = second.propagate(omega, t, u0)?;
    let margin = u1
        .values()
        .iter()
        .zip(u2.values())
        .map(|(a, b)| b - a)
        .fold(f64::INFINITY, f64::min);
    Ok(ComparisonReport {
        margin,
        sandwich_first: sandwich(first, omega, t, u0)?,
        sandwich_second: sandwich(&second, omega, t, u0)?,
    })
}

/// `sup_x (U(1)u0 / U(1)e) / inf_x (U(1)u0 / U(1)e)`.
pub fn harnack_quotient(p: &ParabolicCocycle, omega: &OmegaPoint, u0: &GridFunction) -> Result<f64> {
    require_cone(u0)?;
    if u0.values().iter().all(|&v| v == 0.0) {
        return Err(Error::Contract("Harnack quotient needs a nonzero state".into()));
    }
    let u = p.propagate(omega, 1.0, u0)?;
    let v = p.propagate(omega, 1.0, &p.reference())?;
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for (i, (&a, &b)) in u.values().iter().zip(v.values()).enumerate() {
        if b < 1e-300 || a < 1e-300 {
            return Err(Error::DegenerateSolution(format!("solution vanishes at node {i}")));
        }
        let r = a / b;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok(hi / lo)
}

/// `U*_ω(t)u0*` from a separately assembled adjoint equation
/// `-u_s = (a11 u_x - b1 u)_x - a1 u_x + c0 u`, run in reversed time.
/// Agrees with the transpose construction up to discretization error.
pub fn independent_adjoint(p: &ParabolicCocycle, omega: &OmegaPoint, t: f64, u0: &GridFunction) -> Result<GridFunction> {
    let c = p.coeffs();
    let mut config = c.driving.config().clone();
    config.frequencies.iter_mut().for_each(|a| *a = -*a);
    let reversed = Driving::new(config)?;
    let neg = |f: &super::SharedProfile| -> super::SharedProfile {
        let f = f.clone();
        Arc::new(move |w: &OmegaPoint, x: f64| -f.eval(w, x))
    };
    let adjoint = ParabolicCoefficients {
        driving: reversed,
        a11: c.a11.clone(),
        a1: neg(&c.b1),
        b1: neg(&c.a1),
        c0: c.c0.clone(),
        c0_lower: c.c0_lower.clone(),
        c0_upper: c.c0_upper.clone(),
        boundary: c.boundary.clone(),
        alpha0: c.alpha0,
    };
    p.with_coeffs(adjoint)?.propagate(omega, t, u0)
}

#[cfg(test)]
mod tests {
    use super::super::{uniform, Boundary};
    use super::*;
    use crate::driving::{constant, DrivingConfig};

    fn circle() -> Driving {
        Driving::new(DrivingConfig::periodic(1.0)).unwrap()
    }

    fn origin() -> OmegaPoint {
        OmegaPoint::new(vec![0.25]).unwrap()
    }

    #[test]
    fn threshold_of_laplacian() {
        let p = ParabolicCocycle::new(ParabolicCoefficients::heat(circle(), Boundary::Dirichlet), 3, 10).unwrap();
        let op = p.assemble(&origin(), 0.0).unwrap();
        assert_eq!(positivity_threshold(&op.matrix), Some(2.0 / 32.0));
        let mut bad = op.matrix.clone();
        bad.upper[0] = -1.0;
        assert_eq!(positivity_threshold(&bad), None);
    }

    #[test]
    fn space_independent_c0_gives_sandwich_equality() {
        let c0 = Arc::new(|w: &OmegaPoint| (std::f64::consts::TAU * w.coords()[0]).sin());
        let coeffs = ParabolicCoefficients::heat(circle(), Boundary::Dirichlet).with_c0(
            super::super::temporal(c0.clone()),
            c0.clone(),
            c0,
        );
        let p = ParabolicCocycle::new(coeffs, 15, 256).unwrap().with_watchdog(true);
        let u0 = GridFunction::from_fn(p.grid(), |x| x * (1.0 - x)).unwrap();
        let r = sandwich(&p, &origin(), 1.0, &u0).unwrap();
        assert!(r.lower_gap < 1e-12 && r.upper_gap < 1e-12, "{r:?}");
    }

    #[test]
    fn comparison_orders_solutions() {
        let base = ParabolicCoefficients::heat(circle(), Boundary::Neumann).with_c0(
            Arc::new(|_: &OmegaPoint, x: f64| x - 0.5),
            constant(-0.5),
            constant(0.5),
        );
        let p = ParabolicCocycle::new(base.clone(), 10, 256).unwrap().with_watchdog(true);
        let u0 = GridFunction::from_fn(p.grid(), |x| x).unwrap();
        let same = check_comparison(&p, &base, &origin(), 1.0, &u0).unwrap();
        assert!(same.margin >= -1e-12);
        let up = check_comparison(&p, &base.shift_c0(1.0), &origin(), 1.0, &u0).unwrap();
        assert!(up.margin > 0.0);
        assert!(check_comparison(&p, &base.shift_c0(-1.0), &origin(), 1.0, &u0).is_err());
        let other = base.clone().with_a1(uniform(0.1));
        assert!(check_comparison(&p, &other, &origin(), 1.0, &u0).is_err());
    }

    #[test]
    fn harnack_of_reference_is_one() {
        let p = ParabolicCocycle::new(ParabolicCoefficients::heat(circle(), Boundary::Dirichlet), 15, 256).unwrap();
        assert!((harnack_quotient(&p, &origin(), &p.reference()).unwrap() - 1.0).abs() < 1e-12);
        assert!(harnack_quotient(&p, &origin(), &p.zeros()).is_err());
    }
}
