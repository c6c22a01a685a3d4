//! Reference solvers for constant and periodic special cases.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::driving::OmegaPoint;
use crate::error::{Error, Result};
use crate::numerics::Tridiagonal;
use crate::parabolic::DiscreteOperator;
use crate::spectral::ConePropagator;

pub const BRACKET: (f64, f64) = (-50.0, 50.0);
pub const ROOT_TOL: f64 = 1e-14;
pub const MONODROMY_CAP: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharacteristicRoot {
    pub lambda_re: f64,
    pub lambda_im: f64,
    /// `|det(λI - A - B e^{-λ})|`.
    pub residual: f64,
    pub iterations: usize,
    /// Right Perron vector of `A + B e^{-λ}`, unit sum.
    pub perron: Vec<f64>,
}

/// Largest real part of the spectrum.
fn spectral_abscissa(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 1 {
        return m[(0, 0)];
    }
    m.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

/// Unit-sum vector spanning the null space of `m - s I`, sign fixed.
fn null_vector(m: &DMatrix<f64>, s: f64) -> Vec<f64> {
    let n = m.nrows();
    let shifted = m - DMatrix::identity(n, n) * s;
    let svd = shifted.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |b, (i, &v)| if v < b.1 { (i, v) } else { b });
    let row: Vec<f64> = vt.row(imin).iter().copied().collect();
    let total: f64 = row.iter().sum();
    row.iter().map(|v| v / total).collect()
}

fn matrix(n: usize, a: &[f64], b: &[f64], lambda: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, n, a) + DMatrix::from_row_slice(n, n, b) * (-lambda).exp()
}

/// Dominant real root of `det(λI - A - B e^{-λ}) = 0` for constant
/// cooperative `(A, B)`, as the root of `g(λ) = s(A + Be^{-λ}) - λ`,
/// which decreases strictly. Bisection brackets, Newton refines; a Newton
/// step leaving the bracket is replaced by bisection.
pub fn dde_characteristic_root(n: usize, a: &[f64], b: &[f64]) -> Result<CharacteristicRoot> {
    if n == 0 || a.len() != n * n || b.len() != n * n {
        return Err(Error::Config(format!("matrices must be {n}x{n}")));
    }
    let g = |l: f64| spectral_abscissa(&matrix(n, a, b, l)) - l;
    let (mut lo, mut hi) = BRACKET;
    let (glo, ghi) = (g(lo), g(hi));
    if !(glo > 0.0 && ghi < 0.0) {
        return Err(Error::Oracle(format!(
            "no sign change of g on [{lo}, {hi}]: g = ({glo}, {ghi})"
        )));
    }
    let dg = |l: f64| -> f64 {
        let m = matrix(n, a, b, l);
        let s = spectral_abscissa(&m);
        let x = null_vector(&m, s);
        let y = null_vector(&m.transpose(), s);
        let bm = DMatrix::from_row_slice(n, n, b);
        let num: f64 = (0..n).map(|i| y[i] * (0..n).map(|j| bm[(i, j)] * x[j]).sum::<f64>()).sum();
        let den: f64 = y.iter().zip(&x).map(|(p, q)| p * q).sum();
        -(-l).exp() * num / den - 1.0
    };
    let mut l = 0.5 * (lo + hi);
    let mut iterations = 0;
    for _ in 0..400 {
        iterations += 1;
        let gl = g(l);
        if gl == 0.0 {
            break;
        }
        if gl > 0.0 {
            lo = l;
        } else {
            hi = l;
        }
        let d = dg(l);
        let newton = l - gl / d;
        let next = if d < 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - l).abs() <= ROOT_TOL * l.abs().max(1.0) {
            l = next;
            break;
        }
        l = next;
    }
    let m = matrix(n, a, b, l);
    let residual = (DMatrix::identity(n, n) * l - &m).determinant().abs();
    let perron = null_vector(&m, spectral_abscissa(&m));
    Ok(CharacteristicRoot {
        lambda_re: l,
        lambda_im: 0.0,
        residual,
        iterations,
        perron,
    })
}

/// Principal eigenpair of a frozen operator: inverse iteration with a shift
/// above the Gershgorin bound. `φ` has unit Euclidean norm and is positive.
pub fn elliptic_principal_eig(op: &DiscreteOperator) -> Result<(f64, Vec<f64>)> {
    principal_eig(&op.matrix)
}

pub fn principal_eig(l: &Tridiagonal) -> Result<(f64, Vec<f64>)> {
    let n = l.len();
    let sigma = (0..n)
        .map(|i| {
            let mut r = l.diag[i];
            if i > 0 {
                r += l.lower[i].abs();
            }
            if i + 1 < n {
                r += l.upper[i].abs();
            }
            r
        })
        .fold(f64::NEG_INFINITY, f64::max)
        + 1.0;
    let shifted = l.affine(sigma, -1.0);
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut mu = 0.0;
    for _ in 0..10_000 {
        let mut y = x.clone();
        shifted.solve_in_place(&mut y)?;
        let new_mu = crate::numerics::dot(&x, &y);
        let norm = crate::numerics::dot(&y, &y).sqrt();
        y.iter_mut().for_each(|v| *v /= norm);
        let change = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        x = y;
        let settled = (new_mu - mu).abs() <= 1e-15 * new_mu.abs();
        mu = new_mu;
        if change < 1e-14 && settled {
            let lambda = sigma - 1.0 / mu;
            if x.iter().any(|&v| v <= 0.0) {
                return Err(Error::Oracle("principal eigenvector is not positive".into()));
            }
            return Ok((lambda, x));
        }
    }
    Err(Error::Oracle("inverse iteration did not converge in 10^4 steps".into()))
}

/// `(1/p) ln r(U_ω(p))`, with the monodromy matrix formed column by column
/// and its dominant eigenvalue found by power iteration from `e`.
pub fn periodic_monodromy<P: ConePropagator + ?Sized>(prop: &P, omega: &OmegaPoint, period: f64) -> Result<f64> {
    let d = prop.dim();
    if d > MONODROMY_CAP {
        return Err(Error::OracleRefused { dim: d, cap: MONODROMY_CAP });
    }
    if !(period > 0.0) {
        return Err(Error::Domain("period must be positive".into()));
    }
    let mut m = DMatrix::zeros(d, d);
    for j in 0..d {
        let mut e = vec![0.0; d];
        e[j] = 1.0;
        let col = prop.propagate(omega, period, &e)?;
        m.set_column(j, &nalgebra::DVector::from_vec(col));
    }
    let mut x = nalgebra::DVector::from_vec(prop.reference());
    x /= x.norm();
    let mut log_r = f64::NAN;
    for _ in 0..100_000 {
        let y = &m * &x;
        let r = y.norm();
        if r == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        let next = r.ln();
        let converged = (next - log_r).abs() <= 1e-15 * next.abs().max(1.0);
        x = y / r;
        log_r = next;
        if converged {
            return Ok(log_r / period);
        }
    }
    Err(Error::Oracle("monodromy power iteration did not converge".into()))
}
