//! Ergodic driving flows on the torus.
//!
//! The abstract driving system is realized as a linear flow
//! `θ_t ω = ω + t α (mod 1)` on `[0, 1)^d`. Coefficients of the cocycles are
//! continuous functions on the torus (`ScalarField`), so a coefficient path
//! `t ↦ f(θ_t ω)` is continuous and can be evaluated at negative times,
//! which pullback constructions need.

use std::f64::consts::TAU;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point on the torus `[0, 1)^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaPoint {
    coords: Vec<f64>,
}

impl OmegaPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Config("omega point needs at least one coordinate".into()));
        }
        if let Some(c) = coords.iter().find(|c| !(0.0..1.0).contains(*c)) {
            return Err(Error::Config(format!("omega coordinate {c} outside [0, 1)")));
        }
        Ok(Self { coords })
    }

    /// Reduces arbitrary reals mod 1.
    pub fn wrapped(coords: &[f64]) -> Self {
        Self {
            coords: coords.iter().map(|&c| wrap_unit(c)).collect(),
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Largest per-coordinate distance on the circle.
    pub fn torus_distance(&self, other: &OmegaPoint) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| {
                let d = (a - b).abs();
                d.min(1.0 - d)
            })
            .fold(0.0, f64::max)
    }
}

fn wrap_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    // rem_euclid rounds tiny negatives up to exactly 1.0
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DrivingKind {
    Torus,
    Periodic,
    RandomFourier,
}

/// Parameters of the driving flow and, for `random-fourier`, of the random
/// coefficient tables drawn on top of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrivingConfig {
    pub kind: DrivingKind,
    /// Frequency vector α, one entry per torus dimension.
    pub frequencies: Vec<f64>,
    #[serde(default = "default_modes")]
    pub modes: usize,
    #[serde(default = "default_decay")]
    pub decay: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_modes() -> usize {
    6
}

fn default_decay() -> f64 {
    0.6
}

impl DrivingConfig {
    pub fn periodic(frequency: f64) -> Self {
        Self {
            kind: DrivingKind::Periodic,
            frequencies: vec![frequency],
            modes: default_modes(),
            decay: default_decay(),
            seed: 0,
        }
    }

    pub fn torus(frequencies: Vec<f64>) -> Self {
        Self {
            kind: DrivingKind::Torus,
            frequencies,
            modes: default_modes(),
            decay: default_decay(),
            seed: 0,
        }
    }

    pub fn random_fourier(frequencies: Vec<f64>, modes: usize, decay: f64, seed: u64) -> Self {
        Self {
            kind: DrivingKind::RandomFourier,
            frequencies,
            modes,
            decay,
            seed,
        }
    }

    pub fn dim(&self) -> usize {
        self.frequencies.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.frequencies.len();
        if d == 0 {
            return Err(Error::Config("driving dimension must be >= 1".into()));
        }
        if let Some(a) = self.frequencies.iter().find(|a| !a.is_finite() || **a == 0.0) {
            return Err(Error::Config(format!("frequency {a} must be finite and nonzero")));
        }
        match self.kind {
            DrivingKind::Periodic if d != 1 => {
                return Err(Error::Config("periodic driving requires d = 1".into()))
            }
            DrivingKind::Torus | DrivingKind::RandomFourier => {
                check_rationally_independent(&self.frequencies)?
            }
            DrivingKind::Periodic => {}
        }
        if self.kind == DrivingKind::RandomFourier {
            if self.modes == 0 {
                return Err(Error::Config("random-fourier needs at least one mode".into()));
            }
            if !(self.decay > 0.0 && self.decay <= 1.0) {
                return Err(Error::Config(format!("amplitude decay {} not in (0, 1]", self.decay)));
            }
        }
        Ok(())
    }
}

/// Rejects frequency pairs whose ratio sits within 1e-9 of p/q, q <= 64.
fn check_rationally_independent(alpha: &[f64]) -> Result<()> {
    for i in 0..alpha.len() {
        for j in (i + 1)..alpha.len() {
            let r = alpha[i] / alpha[j];
            for q in 1..=64u32 {
                let p = (r * q as f64).round();
                if (r - p / q as f64).abs() < 1e-9 {
                    return Err(Error::Config(format!(
                        "frequencies {} and {} are rationally dependent (ratio ~ {p}/{q})",
                        alpha[i], alpha[j]
                    )));
                }
            }
        }
    }
    Ok(())
}

/// The flow `θ_t` on the torus.
#[derive(Debug, Clone, PartialEq)]
pub struct Driving {
    config: DrivingConfig,
}

impl Driving {
    pub fn new(config: DrivingConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config })
    }

    pub fn config(&self) -> &DrivingConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.config.dim()
    }

    /// `θ_t ω = ω + tα mod 1`.
    ///
    /// `tα` is reduced before it is added, so a full period maps a point to
    /// itself bit for bit.
    pub fn advance(&self, omega: &OmegaPoint, t: f64) -> OmegaPoint {
        debug_assert_eq!(omega.dim(), self.dim());
        let coords = omega
            .coords
            .iter()
            .zip(&self.config.frequencies)
            .map(|(&w, &a)| wrap_unit(w + wrap_unit(t * a)))
            .collect();
        OmegaPoint { coords }
    }

    /// Draws from the invariant (Lebesgue) measure.
    pub fn sample_omega(&self, seed: u64) -> OmegaPoint {
        sample_omega(&self.config, seed).expect("config validated at construction")
    }

    /// Random Fourier table number `index` for this driving; deterministic in
    /// `(config.seed, index)`.
    pub fn random_field(&self, index: u64) -> RandomFourierField {
        RandomFourierField::new(
            self.dim(),
            self.config.modes,
            self.config.decay,
            self.config.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index),
        )
    }
}

pub fn sample_omega(config: &DrivingConfig, seed: u64) -> Result<OmegaPoint> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = (0..config.dim()).map(|_| rng.random::<f64>()).collect();
    Ok(OmegaPoint { coords })
}

/// A continuous real function on the torus.
pub trait ScalarField: Send + Sync {
    fn eval(&self, omega: &OmegaPoint) -> f64;
}

impl<F> ScalarField for F
where
    F: Fn(&OmegaPoint) -> f64 + Send + Sync,
{
    fn eval(&self, omega: &OmegaPoint) -> f64 {
        self(omega)
    }
}

pub type SharedField = Arc<dyn ScalarField>;

#[derive(Debug, Clone, Copy)]
pub struct Constant(pub f64);

impl ScalarField for Constant {
    fn eval(&self, _omega: &OmegaPoint) -> f64 {
        self.0
    }
}

pub fn constant(value: f64) -> SharedField {
    Arc::new(Constant(value))
}

/// `f(ω) = Σ_k c_k cos(2π n_k·ω + φ_k)` with integer wave vectors `n_k`,
/// amplitudes decaying geometrically and normalized so that `|f| <= 1`.
#[derive(Debug, Clone)]
pub struct RandomFourierField {
    waves: Vec<Vec<f64>>,
    amplitudes: Vec<f64>,
    phases: Vec<f64>,
}

impl RandomFourierField {
    pub fn new(dim: usize, modes: usize, decay: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut waves = Vec::with_capacity(modes);
        let mut amplitudes = Vec::with_capacity(modes);
        let mut phases = Vec::with_capacity(modes);
        for k in 0..modes {
            // wave numbers grow with the mode index; reject the zero vector
            let reach = 1 + (k as i64) / dim.max(1) as i64;
            let wave = loop {
                let w: Vec<f64> = (0..dim)
                    .map(|_| rng.random_range(-reach..=reach) as f64)
                    .collect();
                if w.iter().any(|&c| c != 0.0) {
                    break w;
                }
            };
            waves.push(wave);
            amplitudes.push(decay.powi(k as i32) * (0.5 + 0.5 * rng.random::<f64>()));
            phases.push(TAU * rng.random::<f64>());
        }
        let total: f64 = amplitudes.iter().sum();
        amplitudes.iter_mut().for_each(|a| *a /= total);
        Self {
            waves,
            amplitudes,
            phases,
        }
    }
}

impl ScalarField for RandomFourierField {
    fn eval(&self, omega: &OmegaPoint) -> f64 {
        self.waves
            .iter()
            .zip(&self.amplitudes)
            .zip(&self.phases)
            .map(|((n, c), phi)| {
                let arg: f64 = n.iter().zip(omega.coords()).map(|(a, b)| a * b).sum();
                c * (TAU * arg + phi).cos()
            })
            .sum()
    }
}

/// `mean + amplitude * field(ω)`.
pub fn affine(mean: f64, amplitude: f64, field: impl ScalarField + 'static) -> SharedField {
    Arc::new(move |w: &OmegaPoint| mean + amplitude * field.eval(w))
}

/// The path `t ↦ table(θ_t ω)`.
#[derive(Clone)]
pub struct CoefficientPath {
    driving: Driving,
    omega: OmegaPoint,
    table: SharedField,
}

impl CoefficientPath {
    pub fn eval(&self, t: f64) -> f64 {
        self.table.eval(&self.driving.advance(&self.omega, t))
    }
}

pub fn coefficient_path(driving: &Driving, omega: &OmegaPoint, table: SharedField) -> CoefficientPath {
    CoefficientPath {
        driving: driving.clone(),
        omega: omega.clone(),
        table,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(alpha: f64) -> Driving {
        Driving::new(DrivingConfig::periodic(alpha)).unwrap()
    }

    #[test]
    fn advance_examples() {
        let d = circle(1.0);
        let w = OmegaPoint::new(vec![0.25]).unwrap();
        assert_eq!(d.advance(&w, 0.5).coords(), &[0.75]);
        assert_eq!(d.advance(&w, 0.0), w);

        let torus = Driving::new(DrivingConfig::torus(vec![1.0, 2f64.sqrt()])).unwrap();
        let w = OmegaPoint::new(vec![0.9, 0.1]).unwrap();
        let moved = torus.advance(&w, 0.2);
        assert!((moved.coords()[0] - 0.1).abs() < 1e-15);
        assert!((moved.coords()[1] - (0.1 + 0.2 * 2f64.sqrt())).abs() < 1e-15);
        assert!((moved.coords()[1] - 0.38284).abs() < 1e-5);
    }

    #[test]
    fn unit_period_is_exact() {
        let d = circle(1.0);
        for &c in &[0.0, 0.1, 0.37, 0.999_999] {
            let w = OmegaPoint::new(vec![c]).unwrap();
            assert_eq!(d.advance(&w, 1.0), w);
            assert_eq!(d.advance(&w, -3.0), w);
        }
    }

    #[test]
    fn group_law_and_inverse() {
        let torus = Driving::new(DrivingConfig::torus(vec![1.0, 2f64.sqrt(), 0.5 * 3f64.sqrt()])).unwrap();
        let w = torus.sample_omega(3);
        for &(s, t) in &[(0.3, 1.7), (-5.25, 2.0), (123.456, -0.001), (1e3, -1e3)] {
            let a = torus.advance(&torus.advance(&w, s), t);
            let b = torus.advance(&w, s + t);
            assert!(a.torus_distance(&b) < 1e-12, "s={s} t={t}");
            let back = torus.advance(&torus.advance(&w, t), -t);
            assert!(back.torus_distance(&w) < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(Driving::new(DrivingConfig::torus(vec![1.0, 2.0])).is_err());
        assert!(Driving::new(DrivingConfig::torus(vec![1.0, 0.75])).is_err());
        assert!(Driving::new(DrivingConfig::torus(vec![])).is_err());
        let mut p = DrivingConfig::periodic(1.0);
        p.frequencies.push(2f64.sqrt());
        assert!(Driving::new(p).is_err());
        assert!(Driving::new(DrivingConfig::random_fourier(vec![1.0, 2f64.sqrt()], 0, 0.5, 1)).is_err());
        assert!(OmegaPoint::new(vec![1.0]).is_err());
    }

    #[test]
    fn sampling_is_deterministic_and_uniform() {
        let cfg = DrivingConfig::torus(vec![1.0, 2f64.sqrt()]);
        assert_eq!(sample_omega(&cfg, 7).unwrap(), sample_omega(&cfg, 7).unwrap());
        assert_ne!(sample_omega(&cfg, 7).unwrap(), sample_omega(&cfg, 8).unwrap());

        let n = 10_000;
        let mut sums = [0.0; 2];
        for seed in 0..n {
            let w = sample_omega(&cfg, seed).unwrap();
            sums[0] += w.coords()[0];
            sums[1] += w.coords()[1];
        }
        for s in sums {
            assert!((s / n as f64 - 0.5).abs() < 0.02);
        }
    }

    #[test]
    fn coefficient_paths() {
        let d = circle(1.0);
        let w = OmegaPoint::new(vec![0.2]).unwrap();
        let c = coefficient_path(&d, &w, constant(3.5));
        assert_eq!(c.eval(-7.3), 3.5);

        let sine: SharedField = Arc::new(|w: &OmegaPoint| (TAU * w.coords()[0]).sin());
        let p = coefficient_path(&d, &w, sine);
        for &t in &[-2.5, 0.0, 0.1, 4.75] {
            assert!((p.eval(t) - (TAU * (0.2 + t)).sin()).abs() < 1e-12);
        }

        let rf = Driving::new(DrivingConfig::random_fourier(vec![1.0, 2f64.sqrt()], 5, 0.6, 11)).unwrap();
        let w = rf.sample_omega(1);
        let a = coefficient_path(&rf, &w, Arc::new(rf.random_field(0)));
        let b = coefficient_path(&rf, &w, Arc::new(rf.random_field(0)));
        for &t in &[-3.0, -0.5, 0.5, 3.0] {
            assert_eq!(a.eval(t), b.eval(t));
            assert!(a.eval(t).abs() <= 1.0);
        }
        assert_ne!(a.eval(0.3), coefficient_path(&rf, &w, Arc::new(rf.random_field(1))).eval(0.3));
    }
}
