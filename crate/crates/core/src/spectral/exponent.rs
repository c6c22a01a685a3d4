//! Top Lyapunov exponent by renormalized iteration, and its operator-norm
//! counterpart.

use serde::Serialize;

use super::{normalize, require_cone_nonzero, AdjointView, ConePropagator};
use crate::driving::OmegaPoint;
use crate::error::{Error, Result};
use crate::numerics::{linear_fit, CompensatedSum};

/// Running averages below this count as `-∞`.
pub const MINUS_INFINITY_FLOOR: f64 = -1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentOptions {
    /// Total time `T`; a multiple of `cadence`.
    pub horizon: f64,
    /// Renormalization interval `Δ`.
    pub cadence: f64,
    /// Leading renormalization intervals excluded from the average.
    pub burn_in: usize,
}

impl ExponentOptions {
    pub fn new(horizon: f64) -> Self {
        Self {
            horizon,
            cadence: 1.0,
            burn_in: 0,
        }
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_cadence(mut self, cadence: f64) -> Self {
        self.cadence = cadence;
        self
    }

    fn intervals(&self) -> Result<usize> {
        if !(self.cadence > 0.0) || !(self.horizon > 0.0) {
            return Err(Error::Domain("horizon and cadence must be positive".into()));
        }
        let k = self.horizon / self.cadence;
        if (k - k.round()).abs() > 1e-9 * k.max(1.0) {
            return Err(Error::Domain(format!(
                "horizon {} is not a multiple of cadence {}",
                self.horizon, self.cadence
            )));
        }
        let k = k.round() as usize;
        if self.burn_in >= k {
            return Err(Error::Domain(format!("burn-in {} leaves no averaging window", self.burn_in)));
        }
        Ok(k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub k: usize,
    pub log_accum: f64,
    pub running_avg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentEstimate {
    pub lambda: f64,
    pub horizon: f64,
    pub cadence: f64,
    pub burn_in: usize,
    pub trace: Vec<TracePoint>,
    pub minus_infinity: bool,
    /// Normalized state at the end of the run.
    #[serde(skip)]
    pub final_state: Vec<f64>,
}

impl ExponentEstimate {
    /// CSV with columns `k,log_accum,running_avg`.
    pub fn write_trace_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "log_accum", "running_avg"]).map_err(crate::delay::io_err)?;
        for p in &self.trace {
            w.write_record([p.k.to_string(), format!("{:e}", p.log_accum), format!("{:e}", p.running_avg)])
                .map_err(crate::delay::io_err)?;
        }
        w.flush().map_err(|e| Error::Domain(format!("csv write failed: {e}")))?;
        Ok(())
    }
}

/// `λ̂ = (1/T) Σ_k ln ‖U_{θ_{kΔ}ω}(Δ) u_k‖` with `u_k` renormalized after
/// every interval. Intervals before `burn_in` only renormalize.
pub fn top_exponent<P: ConePropagator + ?Sized>(
    prop: &P,
    omega: &OmegaPoint,
    u0: &[f64],
    opts: ExponentOptions,
) -> Result<ExponentEstimate> {
    require_cone_nonzero(prop, u0)?;
    let intervals = opts.intervals()?;
    let (mut u, _) = normalize(prop, u0.to_vec());
    let mut acc = CompensatedSum::default();
    let mut trace = Vec::with_capacity(intervals - opts.burn_in);
    let mut minus_infinity = false;
    for k in 0..intervals {
        let w = prop.shift(omega, k as f64 * opts.cadence);
        let next = prop.propagate(&w, opts.cadence, &u)?;
        let (unit, log_rho) = normalize(prop, next);
        if k < opts.burn_in {
            u = unit;
            continue;
        }
        let elapsed = (k + 1 - opts.burn_in) as f64 * opts.cadence;
        if log_rho == f64::NEG_INFINITY {
            minus_infinity = true;
            trace.push(TracePoint {
                k,
                log_accum: f64::NEG_INFINITY,
                running_avg: f64::NEG_INFINITY,
            });
            break;
        }
        acc.add(log_rho);
        let avg = acc.value() / elapsed;
        trace.push(TracePoint {
            k,
            log_accum: acc.value(),
            running_avg: avg,
        });
        u = unit;
        if avg < MINUS_INFINITY_FLOOR {
            minus_infinity = true;
            break;
        }
    }
    let lambda = if minus_infinity {
        f64::NEG_INFINITY
    } else {
        trace.last().map_or(f64::NAN, |p| p.running_avg)
    };
    Ok(ExponentEstimate {
        lambda,
        horizon: opts.horizon,
        cadence: opts.cadence,
        burn_in: opts.burn_in,
        trace,
        minus_infinity,
        final_state: u,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentAgreement {
    pub lambda: f64,
    pub lambda_adjoint: f64,
    pub gap: f64,
}

/// Forward and dual top exponents from the same base point, started from
/// `e` and `e*`.
pub fn exponent_agreement<P: ConePropagator + ?Sized>(
    prop: &P,
    omega: &OmegaPoint,
    opts: ExponentOptions,
) -> Result<ExponentAgreement> {
    if !prop.has_adjoint() {
        return Err(Error::Unsupported("exponent agreement needs an adjoint".into()));
    }
    let fwd = top_exponent(prop, omega, &prop.reference(), opts)?;
    let view = AdjointView(prop);
    let bwd = top_exponent(&view, omega, &view.reference(), opts)?;
    Ok(ExponentAgreement {
        lambda: fwd.lambda,
        lambda_adjoint: bwd.lambda,
        gap: (fwd.lambda - bwd.lambda).abs(),
    })
}

/// `(t, ln max_i ‖U_ω(t) b_i‖)` for `t = 1..=horizon` over the coordinate
/// basis `b_i`, each column carried with its own log scale.
pub fn operator_norm_log_trace<P: ConePropagator + ?Sized>(
    prop: &P,
    omega: &OmegaPoint,
    horizon: usize,
) -> Result<Vec<(f64, f64)>> {
    let d = prop.dim();
    let mut cols: Vec<(Vec<f64>, f64)> = (0..d)
        .map(|i| {
            let mut b = vec![0.0; d];
            b[i] = 1.0;
            let r = prop.norm(&b);
            crate::numerics::scale(&mut b, 1.0 / r);
            (b, 0.0)
        })
        .collect();
    let mut out = Vec::with_capacity(horizon);
    for k in 0..horizon {
        let w = prop.shift(omega, k as f64);
        let mut best = f64::NEG_INFINITY;
        for (v, scale) in cols.iter_mut() {
            let (unit, lr) = normalize(prop, prop.unit_step(&w, v)?);
            *v = unit;
            *scale += lr;
            best = best.max(*scale);
        }
        out.push(((k + 1) as f64, best));
    }
    Ok(out)
}

/// Slope of `ln ‖U_ω(t)‖` against `t` over the second half of the horizon.
pub fn operator_norm_rate<P: ConePropagator + ?Sized>(prop: &P, omega: &OmegaPoint, horizon: usize) -> Result<f64> {
    if horizon < 2 {
        return Err(Error::Domain("operator-norm rate needs a horizon of at least 2".into()));
    }
    let trace = operator_norm_log_trace(prop, omega, horizon)?;
    let tail = &trace[horizon / 2..];
    let (x, y): (Vec<f64>, Vec<f64>) = tail.iter().copied().unzip();
    Ok(linear_fit(&x, &y).0)
}
