//! Random linear parabolic equations on `(0, 1)`:
//! `u_t = (a11 u_x + a1 u)_x + b1 u_x + c0 u` with Dirichlet, Neumann or
//! Robin boundary conditions `(a11 u_x + a1 u)ν + d0 u = 0`.
//!
//! Space: conservative finite volumes. Dirichlet uses interior vertices
//! `x_i = (i + 1)h`, `h = 1/(n + 1)`. Neumann and Robin use cell centres
//! `x_i = (i + 1/2)h`, `h = 1/n`, with the boundary flux fixed by the
//! condition at the end faces.
//!
//! Time: one step of length `τ` is the Strang product
//! `E(t + τ) · CN(L0(t + τ/2)) · E(t)` with `E(s) = diag exp(τ c0(s, x_i) / 2)`
//! and `CN(L) = (I - τL/2)^{-1}(I + τL/2)`. `L0` is the operator without the
//! zero-order term. The zero-order factor is applied exactly, so a constant
//! shift `c0 + c` multiplies the propagator by `e^{ct}` and a space
//! independent `c0` factors out as a scalar.
//!
//! The adjoint propagator is the exact transpose of the composed step
//! product taken over `θ_{-t}ω`, with the same step times.

mod checks;
mod fields;

use std::io::Write;
use std::sync::Arc;

pub use checks::{
    check_comparison, harnack_quotient, independent_adjoint, positivity_threshold, sandwich, ComparisonReport,
    SandwichReport,
};
pub use fields::{shifted, temporal, uniform, ProfileField, Separable, Shape, SharedProfile};

use crate::driving::{Driving, OmegaPoint, SharedField};
use crate::error::{Error, Result};
use crate::numerics::Tridiagonal;

#[derive(Clone)]
pub enum Boundary {
    Dirichlet,
    Neumann,
    /// `d0` at `x = 0` and `x = 1`; must be nonnegative.
    Robin { left: SharedField, right: SharedField },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
    Robin,
}

impl Boundary {
    pub fn kind(&self) -> BoundaryKind {
        match self {
            Boundary::Dirichlet => BoundaryKind::Dirichlet,
            Boundary::Neumann => BoundaryKind::Neumann,
            Boundary::Robin { .. } => BoundaryKind::Robin,
        }
    }

    pub fn robin_constant(left: f64, right: f64) -> Result<Self> {
        if !(left >= 0.0 && right >= 0.0) {
            return Err(Error::Config(format!("Robin coefficients must be >= 0, got {left}, {right}")));
        }
        Ok(Boundary::Robin {
            left: crate::driving::constant(left),
            right: crate::driving::constant(right),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    n: usize,
    kind: BoundaryKind,
}

impl Grid {
    pub fn new(n: usize, kind: BoundaryKind) -> Result<Self> {
        if n < 3 {
            return Err(Error::Config(format!("grid needs at least 3 nodes, got {n}")));
        }
        Ok(Self { n, kind })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn kind(&self) -> BoundaryKind {
        self.kind
    }

    pub fn is_cell_centered(&self) -> bool {
        self.kind != BoundaryKind::Dirichlet
    }

    pub fn h(&self) -> f64 {
        if self.is_cell_centered() {
            1.0 / self.n as f64
        } else {
            1.0 / (self.n + 1) as f64
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        if self.is_cell_centered() {
            (i as f64 + 0.5) * self.h()
        } else {
            (i + 1) as f64 * self.h()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// `n + 1` faces; face `k` sits between nodes `k - 1` and `k`.
    pub fn faces(&self) -> Vec<f64> {
        let h = self.h();
        (0..=self.n)
            .map(|k| if self.is_cell_centered() { k as f64 * h } else { (k as f64 + 0.5) * h })
            .collect()
    }

    /// `⟨u, v⟩_h = h Σ u_i v_i`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.h() * crate::numerics::dot(u, v)
    }

    pub fn norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).sqrt()
    }

    /// Unit-norm positive reference: `sin(πx)` for Dirichlet, constant otherwise.
    pub fn reference(&self) -> Vec<f64> {
        let mut e: Vec<f64> = if self.is_cell_centered() {
            vec![1.0; self.n]
        } else {
            self.nodes().iter().map(|x| (std::f64::consts::PI * x).sin()).collect()
        };
        let s = self.norm(&e);
        crate::numerics::scale(&mut e, 1.0 / s);
        e
    }
}

/// Values on a `Grid`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::Config(format!("grid has {} nodes, got {} values", grid.n, values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("grid function holds non-finite values".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.n],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.nodes().into_iter().map(f).collect())
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn inner(&self, other: &GridFunction) -> f64 {
        self.grid.inner(&self.values, &other.values)
    }

    pub fn norm(&self) -> f64 {
        self.grid.norm(&self.values)
    }

    pub fn is_in_cone(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    /// CSV with columns `x,value`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "value"]).map_err(crate::delay::io_err)?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([format!("{}", self.grid.x(i)), format!("{v:e}")])
                .map_err(crate::delay::io_err)?;
        }
        w.flush().map_err(|e| Error::Domain(format!("csv write failed: {e}")))?;
        Ok(())
    }
}

/// Coefficients of the equation, each evaluated at `θ_tω`.
#[derive(Clone)]
pub struct ParabolicCoefficients {
    pub driving: Driving,
    pub a11: SharedProfile,
    pub a1: SharedProfile,
    pub b1: SharedProfile,
    pub c0: SharedProfile,
    /// `c0_lower(ω) <= c0(ω, x) <= c0_upper(ω)`.
    pub c0_lower: SharedField,
    pub c0_upper: SharedField,
    pub boundary: Boundary,
    pub alpha0: f64,
}

impl ParabolicCoefficients {
    /// Pure diffusion `u_t = u_xx`.
    pub fn heat(driving: Driving, boundary: Boundary) -> Self {
        Self {
            driving,
            a11: uniform(1.0),
            a1: uniform(0.0),
            b1: uniform(0.0),
            c0: uniform(0.0),
            c0_lower: crate::driving::constant(0.0),
            c0_upper: crate::driving::constant(0.0),
            boundary,
            alpha0: 0.5,
        }
    }

    pub fn with_a11(mut self, f: SharedProfile) -> Self {
        self.a11 = f;
        self
    }

    pub fn with_a1(mut self, f: SharedProfile) -> Self {
        self.a1 = f;
        self
    }

    pub fn with_b1(mut self, f: SharedProfile) -> Self {
        self.b1 = f;
        self
    }

    pub fn with_c0(mut self, f: SharedProfile, lower: SharedField, upper: SharedField) -> Self {
        self.c0 = f;
        self.c0_lower = lower;
        self.c0_upper = upper;
        self
    }

    pub fn with_alpha0(mut self, alpha0: f64) -> Self {
        self.alpha0 = alpha0;
        self
    }

    /// `c0 + c`, envelopes shifted accordingly.
    pub fn shift_c0(&self, c: f64) -> Self {
        let lo = self.c0_lower.clone();
        let hi = self.c0_upper.clone();
        let mut out = self.clone();
        out.c0 = shifted(self.c0.clone(), c);
        out.c0_lower = Arc::new(move |w: &OmegaPoint| lo.eval(w) + c);
        out.c0_upper = Arc::new(move |w: &OmegaPoint| hi.eval(w) + c);
        out
    }

    /// Same data with `c0 ≡ 0`.
    pub fn zero_order_free(&self) -> Self {
        self.clone()
            .with_c0(uniform(0.0), crate::driving::constant(0.0), crate::driving::constant(0.0))
    }
}

/// Assembled operator at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOperator {
    pub matrix: Tridiagonal,
    pub kind: BoundaryKind,
    pub t: f64,
}

/// Cocycle generated by the coefficients on a fixed grid and time step.
#[derive(Clone)]
pub struct ParabolicCocycle {
    coeffs: ParabolicCoefficients,
    grid: Grid,
    steps_per_unit: usize,
    watchdog: bool,
    nodes: Vec<f64>,
    faces: Vec<f64>,
}

/// Scratch arrays reused across steps.
struct Work {
    a11: Vec<f64>,
    a1: Vec<f64>,
    b1: Vec<f64>,
}

impl ParabolicCocycle {
    /// `Δt = 1 / steps_per_unit`.
    pub fn new(coeffs: ParabolicCoefficients, n: usize, steps_per_unit: usize) -> Result<Self> {
        if steps_per_unit == 0 {
            return Err(Error::Config("steps_per_unit must be positive".into()));
        }
        if !(coeffs.alpha0 > 0.0) {
            return Err(Error::Config(format!("ellipticity floor must be positive, got {}", coeffs.alpha0)));
        }
        let grid = Grid::new(n, coeffs.boundary.kind())?;
        Ok(Self {
            nodes: grid.nodes(),
            faces: grid.faces(),
            coeffs,
            grid,
            steps_per_unit,
            watchdog: false,
        })
    }

    /// Subdivide steps whose operator violates the positivity condition.
    pub fn with_watchdog(mut self, on: bool) -> Self {
        self.watchdog = on;
        self
    }

    pub fn coeffs(&self) -> &ParabolicCoefficients {
        &self.coeffs
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.steps_per_unit as f64
    }

    pub fn steps_per_unit(&self) -> usize {
        self.steps_per_unit
    }

    pub fn watchdog(&self) -> bool {
        self.watchdog
    }

    /// Same grid and step for other coefficients.
    pub fn with_coeffs(&self, coeffs: ParabolicCoefficients) -> Result<Self> {
        Ok(Self::new(coeffs, self.grid.n, self.steps_per_unit)?.with_watchdog(self.watchdog))
    }

    fn work(&self) -> Work {
        Work {
            a11: vec![0.0; self.grid.n + 1],
            a1: vec![0.0; self.grid.n + 1],
            b1: vec![0.0; self.grid.n],
        }
    }

    /// `L0` (no zero-order term) at `θ_tω`.
    fn assemble_l0(&self, omega: &OmegaPoint, t: f64, work: &mut Work) -> Result<Tridiagonal> {
        let w = self.coeffs.driving.advance(omega, t);
        let n = self.grid.n;
        let h = self.grid.h();
        let c = &self.coeffs;
        c.a11.fill(&w, &self.faces, &mut work.a11);
        c.a1.fill(&w, &self.faces, &mut work.a1);
        c.b1.fill(&w, &self.nodes, &mut work.b1);
        for (k, &v) in work.a11.iter().enumerate() {
            if !(v >= c.alpha0) {
                return Err(Error::Ellipticity {
                    value: v,
                    floor: c.alpha0,
                    t,
                    x: self.faces[k],
                });
            }
        }
        let (a11, a1, b1) = (&work.a11, &work.a1, &work.b1);
        let mut m = Tridiagonal::zeros(n);
        let h2 = h * h;
        let cell = self.grid.is_cell_centered();
        for i in 0..n {
            // face i on the left, face i + 1 on the right
            let right_interior = i + 1 < n;
            let left_interior = i > 0;
            if !cell || right_interior {
                m.diag[i] += -a11[i + 1] / h2 + a1[i + 1] / (2.0 * h);
                if right_interior {
                    m.upper[i] += a11[i + 1] / h2 + a1[i + 1] / (2.0 * h);
                }
            }
            if !cell || left_interior {
                m.diag[i] += -a11[i] / h2 - a1[i] / (2.0 * h);
                if left_interior {
                    m.lower[i] += a11[i] / h2 - a1[i] / (2.0 * h);
                }
            }
            let adv = b1[i] / (2.0 * h);
            if cell && i == 0 {
                m.upper[i] += adv;
                m.diag[i] -= adv;
            } else if cell && i + 1 == n {
                m.diag[i] += adv;
                m.lower[i] -= adv;
            } else {
                if right_interior {
                    m.upper[i] += adv;
                }
                if left_interior {
                    m.lower[i] -= adv;
                }
            }
        }
        if let Boundary::Robin { left, right } = &c.boundary {
            let (dl, dr) = (left.eval(&w), right.eval(&w));
            if !(dl >= 0.0 && dr >= 0.0) {
                return Err(Error::Config(format!("Robin coefficients must be >= 0, got {dl}, {dr}")));
            }
            // F(0) = d0 u_0, F(1) = -d0 u_{n-1}
            m.diag[0] -= dl / h;
            m.diag[n - 1] -= dr / h;
        }
        Ok(m)
    }

    fn fill_c0(&self, omega: &OmegaPoint, t: f64, out: &mut [f64]) {
        let w = self.coeffs.driving.advance(omega, t);
        self.coeffs.c0.fill(&w, &self.nodes, out);
    }

    /// `L(t) = L0(t) + diag c0(t)` at `θ_tω`.
    pub fn assemble(&self, omega: &OmegaPoint, t: f64) -> Result<DiscreteOperator> {
        let mut work = self.work();
        let mut m = self.assemble_l0(omega, t, &mut work)?;
        let mut c = vec![0.0; self.grid.n];
        self.fill_c0(omega, t, &mut c);
        for (d, cv) in m.diag.iter_mut().zip(&c) {
            *d += cv;
        }
        Ok(DiscreteOperator {
            matrix: m,
            kind: self.grid.kind,
            t,
        })
    }

    fn steps_for(&self, t: f64) -> Result<usize> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("propagation time {t} must be finite and >= 0")));
        }
        let s = t * self.steps_per_unit as f64;
        let r = s.round();
        if (s - r).abs() > 1e-9 * s.max(1.0) {
            return Err(Error::Domain(format!(
                "time {t} is not a multiple of the step 1/{}",
                self.steps_per_unit
            )));
        }
        Ok(r as usize)
    }

    fn substeps(&self, l0: &Tridiagonal, tau: f64) -> usize {
        if !self.watchdog {
            return 1;
        }
        match positivity_threshold(l0) {
            Some(limit) if limit.is_finite() => ((tau / limit) * (1.0 + 1e-12)).ceil().max(1.0) as usize,
            _ => 1,
        }
    }

    /// Elementary sub-steps `(start, length)` of step `k`.
    fn sub_plan(&self, k: usize, q: usize) -> impl Iterator<Item = (f64, f64)> {
        let spu = self.steps_per_unit as f64;
        (0..q).map(move |j| {
            let t0 = (k as f64 + j as f64 / q as f64) / spu;
            let t1 = (k as f64 + (j + 1) as f64 / q as f64) / spu;
            (t0, t1 - t0)
        })
    }

    /// Runs the Strang scheme forward; `zero_order` selects whether `c0` acts.
    fn run_forward(&self, omega: &OmegaPoint, steps: usize, u: &mut [f64], zero_order: bool) -> Result<()> {
        let n = self.grid.n;
        let mut work = self.work();
        let mut c_start = vec![0.0; n];
        let mut c_end = vec![0.0; n];
        let mut rhs;
        for k in 0..steps {
            let dt = self.dt();
            let probe = if self.watchdog {
                Some(self.assemble_l0(omega, (k as f64 + 0.5) * dt, &mut work)?)
            } else {
                None
            };
            let q = probe.as_ref().map_or(1, |l| self.substeps(l, dt));
            for (t0, tau) in self.sub_plan(k, q) {
                let l0 = match (&probe, q) {
                    (Some(l), 1) => l.clone(),
                    _ => self.assemble_l0(omega, t0 + 0.5 * tau, &mut work)?,
                };
                if zero_order {
                    self.fill_c0(omega, t0, &mut c_start);
                    self.fill_c0(omega, t0 + tau, &mut c_end);
                    for (v, c) in u.iter_mut().zip(&c_start) {
                        *v *= (0.5 * tau * c).exp();
                    }
                }
                rhs = l0.affine(1.0, 0.5 * tau).matvec(u);
                l0.affine(1.0, -0.5 * tau).solve_in_place(&mut rhs)?;
                u.copy_from_slice(&rhs);
                if zero_order {
                    for (v, c) in u.iter_mut().zip(&c_end) {
                        *v *= (0.5 * tau * c).exp();
                    }
                }
            }
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("propagation produced non-finite values".into()));
        }
        Ok(())
    }

    /// Transpose of `run_forward` from `omega` over `steps` steps.
    fn run_transpose(&self, omega: &OmegaPoint, steps: usize, u: &mut [f64], zero_order: bool) -> Result<()> {
        let n = self.grid.n;
        let mut work = self.work();
        let mut c = vec![0.0; n];
        let dt = self.dt();
        for k in (0..steps).rev() {
            let q = if self.watchdog {
                let l = self.assemble_l0(omega, (k as f64 + 0.5) * dt, &mut work)?;
                self.substeps(&l, dt)
            } else {
                1
            };
            let plan: Vec<(f64, f64)> = self.sub_plan(k, q).collect();
            for &(t0, tau) in plan.iter().rev() {
                let l0 = self.assemble_l0(omega, t0 + 0.5 * tau, &mut work)?.transpose();
                if zero_order {
                    self.fill_c0(omega, t0 + tau, &mut c);
                    for (v, cv) in u.iter_mut().zip(&c) {
                        *v *= (0.5 * tau * cv).exp();
                    }
                }
                let mut rhs = l0.affine(1.0, 0.5 * tau).matvec(u);
                l0.affine(1.0, -0.5 * tau).solve_in_place(&mut rhs)?;
                u.copy_from_slice(&rhs);
                if zero_order {
                    self.fill_c0(omega, t0, &mut c);
                    for (v, cv) in u.iter_mut().zip(&c) {
                        *v *= (0.5 * tau * cv).exp();
                    }
                }
            }
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("adjoint propagation produced non-finite values".into()));
        }
        Ok(())
    }

    fn check_state(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.grid.n {
            return Err(Error::Contract(format!("state has {} values, grid has {}", u.len(), self.grid.n)));
        }
        Ok(())
    }

    /// `U_ω(t) u0` on raw values.
    pub fn propagate_values(&self, omega: &OmegaPoint, t: f64, u0: &[f64]) -> Result<Vec<f64>> {
        self.check_state(u0)?;
        let steps = self.steps_for(t)?;
        let mut u = u0.to_vec();
        self.run_forward(omega, steps, &mut u, true)?;
        Ok(u)
    }

    /// `U*_ω(t) u0*`: transpose of `U_{θ_{-t}ω}(t)` in `⟨·,·⟩_h`.
    pub fn propagate_adjoint_values(&self, omega: &OmegaPoint, t: f64, u0: &[f64]) -> Result<Vec<f64>> {
        self.check_state(u0)?;
        let steps = self.steps_for(t)?;
        let start = self.coeffs.driving.advance(omega, -t);
        let mut u = u0.to_vec();
        self.run_transpose(&start, steps, &mut u, true)?;
        Ok(u)
    }

    pub fn propagate(&self, omega: &OmegaPoint, t: f64, u0: &GridFunction) -> Result<GridFunction> {
        self.same_grid(u0)?;
        GridFunction::new(self.grid, self.propagate_values(omega, t, &u0.values)?)
    }

    pub fn propagate_adjoint(&self, omega: &OmegaPoint, t: f64, u0: &GridFunction) -> Result<GridFunction> {
        self.same_grid(u0)?;
        GridFunction::new(self.grid, self.propagate_adjoint_values(omega, t, &u0.values)?)
    }

    /// `U⁰_ω(t) u0`: the same scheme with `c0 ≡ 0`.
    pub fn propagate_zero_order_free(&self, omega: &OmegaPoint, t: f64, u0: &GridFunction) -> Result<GridFunction> {
        self.same_grid(u0)?;
        let steps = self.steps_for(t)?;
        let mut u = u0.values.clone();
        self.run_forward(omega, steps, &mut u, false)?;
        GridFunction::new(self.grid, u)
    }

    /// Trapezoid sums `(∫c0_lower, ∫c0_upper)` over `[0, t]` on the same
    /// sub-steps the propagator takes.
    pub fn envelope_integrals(&self, omega: &OmegaPoint, t: f64) -> Result<(f64, f64)> {
        let steps = self.steps_for(t)?;
        let mut work = self.work();
        let dt = self.dt();
        let c = &self.coeffs;
        let env = |s: f64| {
            let w = c.driving.advance(omega, s);
            (c.c0_lower.eval(&w), c.c0_upper.eval(&w))
        };
        let (mut lo, mut hi) = (0.0, 0.0);
        for k in 0..steps {
            let q = if self.watchdog {
                let l = self.assemble_l0(omega, (k as f64 + 0.5) * dt, &mut work)?;
                self.substeps(&l, dt)
            } else {
                1
            };
            for (t0, tau) in self.sub_plan(k, q) {
                let (l0, h0) = env(t0);
                let (l1, h1) = env(t0 + tau);
                lo += 0.5 * tau * (l0 + l1);
                hi += 0.5 * tau * (h0 + h1);
            }
        }
        Ok((lo, hi))
    }

    fn same_grid(&self, u: &GridFunction) -> Result<()> {
        if u.grid != self.grid {
            return Err(Error::Contract("grid function lives on a different grid".into()));
        }
        Ok(())
    }

    pub fn zeros(&self) -> GridFunction {
        GridFunction::zeros(self.grid)
    }

    pub fn reference(&self) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.grid.reference(),
        }
    }
}
