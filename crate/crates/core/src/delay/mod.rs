//! Cooperative linear delay systems `u'(t) = A(θ_tω)u(t) + B(θ_tω)u(t-1)`.
//!
//! States are segments on a uniform grid over `[-1, 0]` with `m` intervals.
//! Integration is by the method of steps with classical RK4 at step `1/m`,
//! so the delayed argument at the step endpoints is a stored node. The
//! half-step stage needs `u(t - 1 + h/2)`, taken by 4-point cubic
//! interpolation of stored nodes. That is the only interpolation here.
//! Solutions are smooth only between integer times, so the stencil never
//! straddles a node at an integer time; it turns one-sided at block edges.
//!
//! Cubic interpolation is linear but not positivity preserving: a cone
//! segment that is rough at the grid scale can produce stage values slightly
//! below zero. For continuous segments resolved by the grid the overshoot is
//! `O(h^4)`.

mod assumptions;

use std::io::Write;

use nalgebra::{DMatrix, DVector};

pub use assumptions::{
    check_cooperativity, check_irreducibility, check_positivity, compute_assumption_constants,
    exponent_floor, focusing_margins, verify_focusing, AssumptionConstants, CooperativityReport, FocusingReport, FocusingSamples,
    IrreducibilityReport, Variant, Violation,
};

use crate::driving::{constant, Driving, DrivingConfig, OmegaPoint, SharedField};
use crate::error::{Error, Result};
use crate::numerics::simpson;

/// Discretized element of `C([-1, 0], R^N)`; node `k` holds `u(-1 + k/m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    n_components: usize,
    grid: usize,
    values: Vec<f64>,
}

pub const MIN_GRID: usize = 8;

impl Segment {
    /// `values` is node-major: `values[k * N + i]` is component `i` at node `k`.
    pub fn new(n_components: usize, grid: usize, values: Vec<f64>) -> Result<Self> {
        if n_components == 0 {
            return Err(Error::Config("segment needs N >= 1".into()));
        }
        if grid < MIN_GRID {
            return Err(Error::Config(format!("segment grid {grid} below minimum {MIN_GRID}")));
        }
        if values.len() != n_components * (grid + 1) {
            return Err(Error::Config(format!(
                "segment expects {} values, got {}",
                n_components * (grid + 1),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("segment holds non-finite values".into()));
        }
        Ok(Self {
            n_components,
            grid,
            values,
        })
    }

    pub fn constant(n_components: usize, grid: usize, value: f64) -> Result<Self> {
        Self::new(n_components, grid, vec![value; n_components * (grid + 1)])
    }

    pub fn zeros(n_components: usize, grid: usize) -> Result<Self> {
        Self::constant(n_components, grid, 0.0)
    }

    /// Samples `f(τ)` at every node; `f` returns the N components.
    pub fn from_fn(n_components: usize, grid: usize, mut f: impl FnMut(f64) -> Vec<f64>) -> Result<Self> {
        let mut values = Vec::with_capacity(n_components * (grid + 1));
        for k in 0..=grid {
            let v = f(-1.0 + k as f64 / grid as f64);
            if v.len() != n_components {
                return Err(Error::Config("segment function returned wrong component count".into()));
            }
            values.extend(v);
        }
        Self::new(n_components, grid, values)
    }

    pub fn n_components(&self) -> usize {
        self.n_components
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn tau(&self, k: usize) -> f64 {
        -1.0 + k as f64 / self.grid as f64
    }

    pub fn node(&self, k: usize) -> &[f64] {
        &self.values[k * self.n_components..(k + 1) * self.n_components]
    }

    /// `u(0)`.
    pub fn head(&self) -> &[f64] {
        self.node(self.grid)
    }

    /// `max_τ |u(τ)|_2`.
    pub fn sup_norm(&self) -> f64 {
        self.values
            .chunks(self.n_components)
            .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// `max_τ |u(τ)|_1`.
    pub fn l1_norm(&self) -> f64 {
        self.values
            .chunks(self.n_components)
            .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Trapezoid rule for `∫_0^1 |u(τ - 1)|_1 dτ`.
    pub fn history_l1_integral(&self) -> f64 {
        let norms: Vec<f64> = self
            .values
            .chunks(self.n_components)
            .map(|c| c.iter().map(|v| v.abs()).sum())
            .collect();
        crate::numerics::trapezoid(&norms, 1.0 / self.grid as f64)
    }

    pub fn is_in_cone(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    /// CSV with columns `tau,u1,...,uN`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["tau".to_string()];
        header.extend((1..=self.n_components).map(|i| format!("u{i}")));
        w.write_record(&header).map_err(io_err)?;
        for k in 0..=self.grid {
            let mut row = vec![format!("{}", self.tau(k))];
            row.extend(self.node(k).iter().map(|v| format!("{v:e}")));
            w.write_record(&row).map_err(io_err)?;
        }
        w.flush().map_err(|e| Error::Domain(format!("csv write failed: {e}")))?;
        Ok(())
    }
}

pub(crate) fn io_err(e: csv::Error) -> Error {
    Error::Domain(format!("csv write failed: {e}"))
}

/// `A(ω)`, `B(ω)` as `N × N` tables of torus fields (row-major), together
/// with the driving flow that moves ω.
#[derive(Clone)]
pub struct DelayCoefficients {
    n: usize,
    driving: Driving,
    a: Vec<SharedField>,
    b: Vec<SharedField>,
}

impl DelayCoefficients {
    pub fn new(driving: Driving, n: usize, a: Vec<SharedField>, b: Vec<SharedField>) -> Result<Self> {
        if n == 0 || a.len() != n * n || b.len() != n * n {
            return Err(Error::Config(format!("coefficient tables must be {n}x{n}")));
        }
        Ok(Self { n, driving, a, b })
    }

    /// Constant matrices on a trivial circle flow.
    pub fn autonomous(n: usize, a: &[f64], b: &[f64]) -> Result<Self> {
        let driving = Driving::new(DrivingConfig::periodic(1.0))?;
        Self::new(
            driving,
            n,
            a.iter().map(|&v| constant(v)).collect(),
            b.iter().map(|&v| constant(v)).collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn driving(&self) -> &Driving {
        &self.driving
    }

    pub fn a_at(&self, omega: &OmegaPoint) -> Vec<f64> {
        self.a.iter().map(|f| f.eval(omega)).collect()
    }

    pub fn b_at(&self, omega: &OmegaPoint) -> Vec<f64> {
        self.b.iter().map(|f| f.eval(omega)).collect()
    }

    /// `(A(θ_tω), B(θ_tω))`.
    pub fn matrices(&self, omega: &OmegaPoint, t: f64) -> (Vec<f64>, Vec<f64>) {
        let w = self.driving.advance(omega, t);
        (self.a_at(&w), self.b_at(&w))
    }

    pub fn is_b_nonsingular(&self, omega: &OmegaPoint) -> bool {
        let b = DMatrix::from_row_slice(self.n, self.n, &self.b_at(omega));
        b.determinant().abs() > 1e-12
    }
}

/// `y += M x` for a row-major `n × n` matrix.
fn gemv_add(n: usize, m: &[f64], x: &[f64], y: &mut [f64]) {
    for i in 0..n {
        let row = &m[i * n..(i + 1) * n];
        y[i] += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

fn steps_for(t: f64, grid: usize) -> Result<usize> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("propagation time {t} must be finite and >= 0")));
    }
    let s = t * grid as f64;
    let r = s.round();
    if (s - r).abs() > 1e-9 * s.max(1.0) {
        return Err(Error::Domain(format!("time {t} is not a multiple of the step 1/{grid}")));
    }
    Ok(r as usize)
}

/// Full trajectory on `[-1, t]`, node-major, `grid + 1 + steps` nodes.
pub fn trajectory(coeffs: &DelayCoefficients, omega: &OmegaPoint, steps: usize, u0: &Segment) -> Result<Vec<f64>> {
    let n = coeffs.n;
    if u0.n_components != n {
        return Err(Error::Contract(format!(
            "segment has {} components, system has {n}",
            u0.n_components
        )));
    }
    let m = u0.grid;
    let h = 1.0 / m as f64;
    let mut traj = Vec::with_capacity(n * (m + 1 + steps));
    traj.extend_from_slice(&u0.values);

    let mut k = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut stage = vec![0.0; n];
    let mut mid_delay = vec![0.0; n];
    let (mut a0, mut b0) = coeffs.matrices(omega, 0.0);
    for s in 0..steps {
        let t = s as f64 * h;
        let (am, bm) = coeffs.matrices(omega, t + 0.5 * h);
        let (a1, b1) = coeffs.matrices(omega, (s + 1) as f64 * h);
        let cur = (m + s) * n;
        let node = |j: usize| &traj[j * n..(j + 1) * n];
        let d0 = node(s);
        let d1 = node(s + 1);
        // u(t - 1 + h/2) from the first four nodes of the window; the stencil
        // depends on window data only, so restarts at any node compose exactly
        let idx = [s, s + 1, s + 2, s + 3];
        let w = [5.0 / 16.0, 15.0 / 16.0, -5.0 / 16.0, 1.0 / 16.0];
        for i in 0..n {
            mid_delay[i] = idx.iter().zip(w).map(|(&j, wj)| wj * node(j)[i]).sum();
        }
        let u = &traj[cur..cur + n];

        k[0].iter_mut().for_each(|v| *v = 0.0);
        gemv_add(n, &a0, u, &mut k[0]);
        gemv_add(n, &b0, d0, &mut k[0]);

        for i in 0..n {
            stage[i] = u[i] + 0.5 * h * k[0][i];
        }
        k[1].iter_mut().for_each(|v| *v = 0.0);
        gemv_add(n, &am, &stage, &mut k[1]);
        gemv_add(n, &bm, &mid_delay, &mut k[1]);

        for i in 0..n {
            stage[i] = u[i] + 0.5 * h * k[1][i];
        }
        k[2].iter_mut().for_each(|v| *v = 0.0);
        gemv_add(n, &am, &stage, &mut k[2]);
        gemv_add(n, &bm, &mid_delay, &mut k[2]);

        for i in 0..n {
            stage[i] = u[i] + h * k[2][i];
        }
        k[3].iter_mut().for_each(|v| *v = 0.0);
        gemv_add(n, &a1, &stage, &mut k[3]);
        gemv_add(n, &b1, d1, &mut k[3]);

        let next: Vec<f64> = (0..n)
            .map(|i| u[i] + h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]))
            .collect();
        traj.extend_from_slice(&next);
        a0 = a1;
        b0 = b1;
    }
    Ok(traj)
}

/// `U_ω(t) u0`; `t` must be a multiple of `1/m`.
pub fn propagate(coeffs: &DelayCoefficients, omega: &OmegaPoint, t: f64, u0: &Segment) -> Result<Segment> {
    let steps = steps_for(t, u0.grid)?;
    if steps == 0 {
        return Ok(u0.clone());
    }
    let traj = trajectory(coeffs, omega, steps, u0)?;
    let n = coeffs.n;
    let start = steps * n;
    Ok(Segment {
        n_components: n,
        grid: u0.grid,
        values: traj[start..].to_vec(),
    })
}

/// Fundamental matrices `Φ(τ_j)` of `Φ' = A(θ_τω)Φ`, `Φ(0) = I`, by RK4.
fn fundamental_matrices(coeffs: &DelayCoefficients, omega: &OmegaPoint, grid: usize, steps: usize) -> Vec<DMatrix<f64>> {
    let n = coeffs.n;
    let h = 1.0 / grid as f64;
    let mat = |t: f64| DMatrix::from_row_slice(n, n, &coeffs.matrices(omega, t).0);
    let mut out = vec![DMatrix::identity(n, n)];
    for s in 0..steps {
        let t = s as f64 * h;
        let (a0, am, a1) = (mat(t), mat(t + 0.5 * h), mat(t + h));
        let p = &out[s];
        let k1 = &a0 * p;
        let k2 = &am * (p + &k1 * (0.5 * h));
        let k3 = &am * (p + &k2 * (0.5 * h));
        let k4 = &a1 * (p + &k3 * h);
        out.push(p + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0));
    }
    out
}

/// Residual of the variation-of-constants identity
/// `u(t) = U⁰(t)u0(0) + ∫_0^t U⁰_{θ_τω}(t-τ) B(θ_τω) u0(τ-1) dτ`
/// on the computed trajectory, for `0 < t <= 1`. The ODE part is resolved
/// by its own RK4 run and the integral by composite Simpson.
pub fn verify_integral_form(coeffs: &DelayCoefficients, omega: &OmegaPoint, t: f64, u0: &Segment) -> Result<f64> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::Domain(format!("integral form checked for 0 < t <= 1, got {t}")));
    }
    let n = coeffs.n;
    let m = u0.grid;
    let steps = steps_for(t, m)?;
    let traj = trajectory(coeffs, omega, steps, u0)?;
    let ut = &traj[(m + steps) * n..];

    let phi = fundamental_matrices(coeffs, omega, m, steps);
    let phi_t = &phi[steps];
    let h = 1.0 / m as f64;
    let mut integrand = vec![vec![0.0; steps + 1]; n];
    for (j, phi_j) in phi.iter().enumerate() {
        let (_, b) = coeffs.matrices(omega, j as f64 * h);
        let b = DMatrix::from_row_slice(n, n, &b);
        let inv = phi_j
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numerical("singular fundamental matrix".into()))?;
        let v = phi_t * inv * b * DVector::from_column_slice(u0.node(j));
        for i in 0..n {
            integrand[i][j] = v[i];
        }
    }
    let free = phi_t * DVector::from_column_slice(u0.head());
    let residual = (0..n)
        .map(|i| (ut[i] - free[i] - simpson(&integrand[i], h)).abs())
        .fold(0.0, f64::max);
    if !residual.is_finite() {
        return Err(Error::Numerical("non-finite integral-form residual".into()));
    }
    Ok(residual)
}

/// Upper bound on `‖U_ω(t)‖` from the ℓ1 growth estimate, valid for
/// `0 <= t <= 1`:
/// `2 exp(∫_0^1 Σ_i max_j a_ij) (1 + ∫_0^1 Σ_i max_j b_ij)`.
pub fn norm_growth_bound(coeffs: &DelayCoefficients, omega: &OmegaPoint, samples: usize) -> f64 {
    let n = coeffs.n;
    let h = 1.0 / samples as f64;
    let mut sa = Vec::with_capacity(samples + 1);
    let mut sb = Vec::with_capacity(samples + 1);
    for k in 0..=samples {
        let (a, b) = coeffs.matrices(omega, k as f64 * h);
        let row_max = |m: &[f64]| -> f64 {
            m.chunks(n)
                .map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max))
                .sum()
        };
        sa.push(row_max(&a));
        sb.push(row_max(&b));
    }
    2.0 * simpson(&sa, h).exp() * (1.0 + simpson(&sb, h))
}

/// Cocycle on segments with a fixed grid.
#[derive(Clone)]
pub struct DelayCocycle {
    coeffs: DelayCoefficients,
    grid: usize,
}

impl DelayCocycle {
    pub fn new(coeffs: DelayCoefficients, grid: usize) -> Result<Self> {
        if grid < MIN_GRID {
            return Err(Error::Config(format!("grid {grid} below minimum {MIN_GRID}")));
        }
        Ok(Self { coeffs, grid })
    }

    pub fn coeffs(&self) -> &DelayCoefficients {
        &self.coeffs
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn segment(&self, values: Vec<f64>) -> Result<Segment> {
        Segment::new(self.coeffs.n, self.grid, values)
    }
}
