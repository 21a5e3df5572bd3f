//! Angular power spectra and antenna power patterns on the sphere.
//!
//! Both are nonnegative densities normalized so that (1/4π)∫ f sinθ dθ dφ = 1
//! over the full sphere. Planar-array integrals only see the upper
//! hemisphere, where the density enters through its fold
//! f̄(θ, φ) = (f(θ, φ) + f(π−θ, φ))/2; the fold satisfies
//! (1/2π)∫ f̄ sinθ dθ dφ = 1 over the upper hemisphere.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::quadrature::HemisphereQuadrature;

type Evaluator = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Where a density is nonzero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    /// Whole sphere.
    Sphere,
    /// Upper cap θ ≤ θ₀.
    Cap { theta0: f64 },
    /// Determined pointwise by the evaluator.
    Mask,
}

impl Support {
    /// Radius of the support's image in the wavenumber disk.
    pub fn disk_radius(&self) -> f64 {
        match *self {
            Support::Cap { theta0 } if theta0 < FRAC_PI_2 => theta0.sin(),
            _ => 1.0,
        }
    }

    /// Largest polar angle (on the upper hemisphere) reached by the support.
    pub fn theta_max(&self) -> f64 {
        match *self {
            Support::Cap { theta0 } => theta0.min(FRAC_PI_2),
            _ => FRAC_PI_2,
        }
    }
}

#[derive(Clone)]
enum Shape {
    Constant,
    Cap(f64),
    Custom(Evaluator),
}

/// A scaled density on the sphere.
#[derive(Clone)]
struct Density {
    shape: Shape,
    scale: f64,
    support: Support,
}

impl Density {
    fn eval(&self, theta: f64, phi: f64) -> f64 {
        let v = match &self.shape {
            Shape::Constant => 1.0,
            Shape::Cap(t0) => {
                if theta <= *t0 {
                    1.0
                } else {
                    0.0
                }
            }
            Shape::Custom(f) => f(theta, phi),
        };
        self.scale * v
    }

    fn folded(&self, theta: f64, phi: f64) -> f64 {
        0.5 * (self.eval(theta, phi) + self.eval(PI - theta, phi))
    }

    fn normalization(&self, q: &HemisphereQuadrature) -> f64 {
        let q = q.restricted(self.support.theta_max());
        q.integrate(|t, p| self.folded(t, p)) / (2.0 * PI)
    }
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let shape = match &self.shape {
            Shape::Constant => "constant".to_string(),
            Shape::Cap(t) => format!("cap({t})"),
            Shape::Custom(_) => "custom".to_string(),
        };
        f.debug_struct("Density")
            .field("shape", &shape)
            .field("scale", &self.scale)
            .field("support", &self.support)
            .finish()
    }
}

/// Fading power spectrum E{|H̃⁺(θ, φ)|²}.
#[derive(Debug, Clone)]
pub struct AngularSpectrum {
    density: Density,
    label: String,
}

/// Per-antenna power pattern |A(θ, φ)|².
#[derive(Debug, Clone)]
pub struct AntennaPattern {
    density: Density,
    strictly_positive: bool,
    label: String,
}

/// Uniform scattering over the whole sphere.
pub fn isotropic_spectrum() -> AngularSpectrum {
    AngularSpectrum {
        density: Density {
            shape: Shape::Constant,
            scale: 1.0,
            support: Support::Sphere,
        },
        label: "isotropic".into(),
    }
}

/// Normalizing constant of a cap of half-angle θ₀ on the sphere, 2/(1−cosθ₀).
///
/// Valid on (0, π]; at π the cap is the sphere and the constant is 1.
pub fn cap_constant(theta0: f64) -> f64 {
    2.0 / (1.0 - theta0.cos())
}

/// Constant spectrum on the cap θ ≤ θ₀, zero elsewhere.
pub fn cap_spectrum(theta0: f64) -> Result<AngularSpectrum> {
    if !(theta0 > 0.0 && theta0 <= FRAC_PI_2) {
        return Err(invalid("theta0", format!("{theta0} is outside (0, π/2]")));
    }
    Ok(AngularSpectrum {
        density: Density {
            shape: Shape::Cap(theta0),
            scale: cap_constant(theta0),
            support: Support::Cap { theta0 },
        },
        label: format!("cap({theta0})"),
    })
}

/// Pattern proportional to the spectrum, renormalized.
///
/// The pattern is strictly positive only if the spectrum covers the sphere.
pub fn matched_pattern(s: &AngularSpectrum, q: &HemisphereQuadrature) -> AntennaPattern {
    let mut density = s.density.clone();
    let norm = density.normalization(q);
    if norm > 0.0 {
        density.scale /= norm;
    }
    AntennaPattern {
        strictly_positive: matches!(s.density.support, Support::Sphere),
        density,
        label: format!("matched({})", s.label),
    }
}

/// Omnidirectional pattern |A|² ≡ 1.
pub fn omni_pattern() -> AntennaPattern {
    AntennaPattern {
        density: Density {
            shape: Shape::Constant,
            scale: 1.0,
            support: Support::Sphere,
        },
        strictly_positive: true,
        label: "omni".into(),
    }
}

/// Anything with a normalization integral.
pub trait SphereDensity {
    /// Value at (θ, φ), θ ∈ [0, π].
    fn value(&self, theta: f64, phi: f64) -> f64;
    /// Upper-hemisphere fold (f(θ, φ) + f(π−θ, φ))/2.
    fn folded(&self, theta: f64, phi: f64) -> f64;
    fn support(&self) -> Support;
    fn label(&self) -> &str;
    /// (1/4π)∫ f sinθ dθ dφ over the sphere.
    fn normalization(&self, q: &HemisphereQuadrature) -> f64;
}

macro_rules! density_impl {
    ($t:ty) => {
        impl SphereDensity for $t {
            fn value(&self, theta: f64, phi: f64) -> f64 {
                self.density.eval(theta, phi)
            }
            fn folded(&self, theta: f64, phi: f64) -> f64 {
                self.density.folded(theta, phi)
            }
            fn support(&self) -> Support {
                self.density.support
            }
            fn label(&self) -> &str {
                &self.label
            }
            fn normalization(&self, q: &HemisphereQuadrature) -> f64 {
                self.density.normalization(q)
            }
        }
    };
}

density_impl!(AngularSpectrum);
density_impl!(AntennaPattern);

/// The normalization integral (1/4π)∫ f sinθ dθ dφ; callers compare it to 1.
pub fn check_normalization(d: &dyn SphereDensity, q: &HemisphereQuadrature) -> f64 {
    d.normalization(q)
}

impl AngularSpectrum {
    /// Arbitrary nonnegative spectrum; not normalized.
    pub fn custom(
        label: impl Into<String>,
        support: Support,
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            density: Density {
                shape: Shape::Custom(Arc::new(f)),
                scale: 1.0,
                support,
            },
            label: label.into(),
        }
    }

    /// Rescaled to unit normalization.
    pub fn normalized(mut self, q: &HemisphereQuadrature) -> Result<Self> {
        let n = self.density.normalization(q);
        if !(n > 0.0 && n.is_finite()) {
            return Err(invalid("spectrum", "cannot normalize a spectrum with zero mass"));
        }
        self.density.scale /= n;
        Ok(self)
    }
}

impl AntennaPattern {
    /// Arbitrary nonnegative pattern; not normalized.
    pub fn custom(
        label: impl Into<String>,
        strictly_positive: bool,
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            density: Density {
                shape: Shape::Custom(Arc::new(f)),
                scale: 1.0,
                support: if strictly_positive {
                    Support::Sphere
                } else {
                    Support::Mask
                },
            },
            strictly_positive,
            label: label.into(),
        }
    }

    pub fn normalized(mut self, q: &HemisphereQuadrature) -> Result<Self> {
        let n = self.density.normalization(q);
        if !(n > 0.0 && n.is_finite()) {
            return Err(invalid("pattern", "cannot normalize a pattern with zero mass"));
        }
        self.density.scale /= n;
        Ok(self)
    }

    /// False when the pattern vanishes on a region of positive measure.
    pub fn is_strictly_positive(&self) -> bool {
        self.strictly_positive
    }

    /// The same density read as a spectrum.
    pub fn as_spectrum(&self) -> AngularSpectrum {
        AngularSpectrum {
            density: self.density.clone(),
            label: self.label.clone(),
        }
    }
}
