//! Coefficient profiles `(ω, x) ↦ value` on `[0, 1]`.

use std::sync::Arc;

use crate::driving::{OmegaPoint, SharedField};

pub trait ProfileField: Send + Sync {
    fn eval(&self, omega: &OmegaPoint, x: f64) -> f64;

    fn fill(&self, omega: &OmegaPoint, xs: &[f64], out: &mut [f64]) {
        for (o, &x) in out.iter_mut().zip(xs) {
            *o = self.eval(omega, x);
        }
    }

    /// True when the value never depends on `x`.
    fn is_space_independent(&self) -> bool {
        false
    }
}

impl<F> ProfileField for F
where
    F: Fn(&OmegaPoint, f64) -> f64 + Send + Sync,
{
    fn eval(&self, omega: &OmegaPoint, x: f64) -> f64 {
        self(omega, x)
    }
}

pub type SharedProfile = Arc<dyn ProfileField>;
pub type Shape = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

struct Uniform(f64);

impl ProfileField for Uniform {
    fn eval(&self, _: &OmegaPoint, _: f64) -> f64 {
        self.0
    }

    fn fill(&self, _: &OmegaPoint, _: &[f64], out: &mut [f64]) {
        out.fill(self.0);
    }

    fn is_space_independent(&self) -> bool {
        true
    }
}

/// Same value everywhere and always.
pub fn uniform(value: f64) -> SharedProfile {
    Arc::new(Uniform(value))
}

struct Temporal(SharedField);

impl ProfileField for Temporal {
    fn eval(&self, omega: &OmegaPoint, _: f64) -> f64 {
        self.0.eval(omega)
    }

    fn fill(&self, omega: &OmegaPoint, _: &[f64], out: &mut [f64]) {
        out.fill(self.0.eval(omega));
    }

    fn is_space_independent(&self) -> bool {
        true
    }
}

/// A torus field, constant in space.
pub fn temporal(field: SharedField) -> SharedProfile {
    Arc::new(Temporal(field))
}

/// `Σ_k g_k(ω) φ_k(x)`; each `g_k` is evaluated once per `fill`.
#[derive(Clone, Default)]
pub struct Separable {
    terms: Vec<(SharedField, Shape)>,
}

impl Separable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn term(mut self, g: SharedField, phi: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.terms.push((g, Arc::new(phi)));
        self
    }

    pub fn shared(self) -> SharedProfile {
        Arc::new(self)
    }
}

impl ProfileField for Separable {
    fn eval(&self, omega: &OmegaPoint, x: f64) -> f64 {
        self.terms.iter().map(|(g, phi)| g.eval(omega) * phi(x)).sum()
    }

    fn fill(&self, omega: &OmegaPoint, xs: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (g, phi) in &self.terms {
            let gv = g.eval(omega);
            for (o, &x) in out.iter_mut().zip(xs) {
                *o += gv * phi(x);
            }
        }
    }
}

struct Shifted {
    base: SharedProfile,
    shift: f64,
}

impl ProfileField for Shifted {
    fn eval(&self, omega: &OmegaPoint, x: f64) -> f64 {
        self.base.eval(omega, x) + self.shift
    }

    fn fill(&self, omega: &OmegaPoint, xs: &[f64], out: &mut [f64]) {
        self.base.fill(omega, xs, out);
        out.iter_mut().for_each(|v| *v += self.shift);
    }

    fn is_space_independent(&self) -> bool {
        self.base.is_space_independent()
    }
}

/// `base + shift`.
pub fn shifted(base: SharedProfile, shift: f64) -> SharedProfile {
    Arc::new(Shifted { base, shift })
}
