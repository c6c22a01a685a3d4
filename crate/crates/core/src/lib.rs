//! Positive random linear skew-product semiflows: cooperative delay systems
//! and one-dimensional random parabolic equations driven by torus flows,
//! with estimators for principal Lyapunov exponents, Floquet vectors and
//! exponential separation.

pub mod delay;
pub mod driving;
pub mod error;
pub mod numerics;
pub mod oracles;
pub mod parabolic;
pub mod presets;
pub mod spectral;

pub use delay::{AssumptionConstants, DelayCocycle, DelayCoefficients, FocusingReport, Segment, Variant};
pub use driving::{Driving, DrivingConfig, DrivingKind, OmegaPoint, ScalarField, SharedField};
pub use error::{Error, Result};
pub use presets::{preset, PresetSystem};
pub use parabolic::{
    Boundary, DiscreteOperator, GridFunction, ParabolicCocycle, ParabolicCoefficients, ProfileField, SharedProfile,
};
pub use spectral::{
    AdjointView, ConePropagator, ExponentEstimate, FloquetSample, SeparationEstimate,
};
