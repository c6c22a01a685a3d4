//! Named systems shipped with the library.
//!
//! | name                      | kind      | notes                                        |
//! |---------------------------|-----------|----------------------------------------------|
//! | `scalar-dde`              | delay     | `u' = u(t - 1)`                              |
//! | `coupled-dde-N2`          | delay     | `A = 0`, `B = ones(2×2)`                     |
//! | `cooperative-oa3`         | delay     | quasi-periodic, chain-irreducible `B`        |
//! | `cooperative-oa4`         | delay     | quasi-periodic, dissipative, positive `B`    |
//! | `heat-dirichlet`          | parabolic | `u_t = u_xx`, Dirichlet                      |
//! | `advection-robin`         | parabolic | periodic advection, Robin                    |
//! | `quasiperiodic-parabolic` | parabolic | all coefficients quasi-periodic, Dirichlet   |

use std::f64::consts::{PI, SQRT_2, TAU};
use std::sync::Arc;

use crate::delay::{DelayCocycle, DelayCoefficients, Variant};
use crate::driving::{affine, constant, Driving, DrivingConfig, OmegaPoint, SharedField};
use crate::error::{Error, Result};
use crate::parabolic::{Boundary, ParabolicCocycle, ParabolicCoefficients, Separable};
use crate::spectral::ConePropagator;

pub const DELAY_PRESETS: &[&str] = &["scalar-dde", "coupled-dde-N2", "cooperative-oa3", "cooperative-oa4"];
pub const PARABOLIC_PRESETS: &[&str] = &["heat-dirichlet", "advection-robin", "quasiperiodic-parabolic"];

pub fn all_presets() -> impl Iterator<Item = &'static str> {
    DELAY_PRESETS.iter().chain(PARABOLIC_PRESETS).copied()
}

/// Default discretization of a preset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discretization {
    /// Segment grid `m` (delay) or node count `n` (parabolic).
    pub size: usize,
    /// Time steps per unit time (parabolic only).
    pub steps_per_unit: usize,
    pub watchdog: bool,
}

pub enum PresetSystem {
    Delay { cocycle: DelayCocycle, variant: Variant },
    Parabolic(ParabolicCocycle),
}

impl PresetSystem {
    pub fn propagator(&self) -> &dyn ConePropagator {
        match self {
            Self::Delay { cocycle, .. } => cocycle,
            Self::Parabolic(p) => p,
        }
    }
}

pub fn is_delay(name: &str) -> bool {
    DELAY_PRESETS.contains(&name)
}

pub fn default_discretization(name: &str) -> Result<Discretization> {
    let d = |size, steps_per_unit, watchdog| Discretization {
        size,
        steps_per_unit,
        watchdog,
    };
    Ok(match name {
        "scalar-dde" | "coupled-dde-N2" => d(200, 0, false),
        "cooperative-oa3" | "cooperative-oa4" => d(64, 0, false),
        "heat-dirichlet" => d(99, 2000, false),
        "advection-robin" => d(40, 1024, true),
        "quasiperiodic-parabolic" => d(31, 1024, true),
        _ => return Err(unknown(name)),
    })
}

fn unknown(name: &str) -> Error {
    Error::Config(format!(
        "unknown preset '{name}'; known: {}",
        all_presets().collect::<Vec<_>>().join(", ")
    ))
}

fn quasi_periodic(seed: u64) -> Result<Driving> {
    Driving::new(DrivingConfig::random_fourier(vec![1.0, SQRT_2], 6, 0.6, seed))
}

fn field(driving: &Driving, index: u64) -> SharedField {
    Arc::new(driving.random_field(index))
}

/// `mean + amp · f_index(ω)` with `|f| <= 1`.
fn around(driving: &Driving, index: u64, mean: f64, amp: f64) -> SharedField {
    affine(mean, amp, driving.random_field(index))
}

/// Coefficients and the structural variant they are built to satisfy.
/// `seed` selects the random coefficient tables where there are any.
pub fn delay_coefficients(name: &str, seed: u64) -> Result<(DelayCoefficients, Variant)> {
    match name {
        "scalar-dde" => Ok((DelayCoefficients::autonomous(1, &[0.0], &[1.0])?, Variant::Oa3)),
        "coupled-dde-N2" => Ok((DelayCoefficients::autonomous(2, &[0.0; 4], &[1.0; 4])?, Variant::Oa3)),
        "cooperative-oa3" => {
            let d = quasi_periodic(seed)?;
            let a = vec![around(&d, 0, -0.5, 0.3), around(&d, 1, 0.2, 0.1), around(&d, 2, 0.2, 0.1), around(&d, 3, -0.5, 0.3)];
            // chains 1 → 2 via b_21 and 2 → 1 via b_12; b_22 vanishes
            let b = vec![around(&d, 4, 0.3, 0.2), around(&d, 5, 0.5, 0.2), around(&d, 6, 0.8, 0.3), constant(0.0)];
            Ok((DelayCoefficients::new(d, 2, a, b)?, Variant::Oa3))
        }
        "cooperative-oa4" => {
            let d = quasi_periodic(seed)?;
            let a = vec![around(&d, 0, -2.0, 0.3), around(&d, 1, 0.2, 0.1), around(&d, 2, 0.2, 0.1), around(&d, 3, -2.0, 0.3)];
            let b = (4..8).map(|k| around(&d, k, 1.0, 0.3)).collect();
            Ok((DelayCoefficients::new(d, 2, a, b)?, Variant::Oa4))
        }
        _ => Err(unknown(name)),
    }
}

pub fn parabolic_coefficients(name: &str, seed: u64) -> Result<ParabolicCoefficients> {
    match name {
        "heat-dirichlet" => Ok(ParabolicCoefficients::heat(
            Driving::new(DrivingConfig::periodic(1.0))?,
            Boundary::Dirichlet,
        )),
        "advection-robin" => {
            let d = Driving::new(DrivingConfig::periodic(1.0))?;
            let wave: SharedField = Arc::new(|w: &OmegaPoint| (TAU * w.coords()[0]).sin());
            let b1 = Separable::new().term(constant(1.0), |_| 1.0).term(wave, |_| 0.5).shared();
            let c0 = Arc::new(|_: &OmegaPoint, x: f64| 0.5 * (PI * x).cos());
            Ok(ParabolicCoefficients::heat(d, Boundary::robin_constant(1.0, 0.5)?)
                .with_b1(b1)
                .with_c0(c0, constant(-0.5), constant(0.5)))
        }
        "quasiperiodic-parabolic" => {
            let d = quasi_periodic(seed)?;
            let a11 = Separable::new()
                .term(constant(1.0), |_| 1.0)
                .term(field(&d, 0), |x| 0.3 * (1.0 + 0.5 * (TAU * x).sin()))
                .shared();
            let a1 = Separable::new().term(field(&d, 1), |x| 0.2 * x).shared();
            let b1 = Separable::new().term(field(&d, 2), |x| 0.5 * (PI * x).cos()).shared();
            let (f4, f5) = (field(&d, 3), field(&d, 4));
            let c0 = Separable::new()
                .term(f4.clone(), |_| 0.5)
                .term(f5.clone(), |x| 0.3 * (TAU * x).cos())
                .shared();
            let (l4, l5) = (f4.clone(), f5.clone());
            let lower: SharedField = Arc::new(move |w: &OmegaPoint| 0.5 * l4.eval(w) - 0.3 * l5.eval(w).abs());
            let upper: SharedField = Arc::new(move |w: &OmegaPoint| 0.5 * f4.eval(w) + 0.3 * f5.eval(w).abs());
            Ok(ParabolicCoefficients::heat(d, Boundary::Dirichlet)
                .with_a11(a11)
                .with_a1(a1)
                .with_b1(b1)
                .with_c0(c0, lower, upper)
                .with_alpha0(0.5))
        }
        _ => Err(unknown(name)),
    }
}

/// Builds the preset with its default discretization.
pub fn preset(name: &str, seed: u64) -> Result<PresetSystem> {
    preset_with(name, seed, default_discretization(name)?)
}

pub fn preset_with(name: &str, seed: u64, disc: Discretization) -> Result<PresetSystem> {
    if is_delay(name) {
        let (coeffs, variant) = delay_coefficients(name, seed)?;
        Ok(PresetSystem::Delay {
            cocycle: DelayCocycle::new(coeffs, disc.size)?,
            variant,
        })
    } else {
        let coeffs = parabolic_coefficients(name, seed)?;
        Ok(PresetSystem::Parabolic(
            ParabolicCocycle::new(coeffs, disc.size, disc.steps_per_unit)?.with_watchdog(disc.watchdog),
        ))
    }
}
