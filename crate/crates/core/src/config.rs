//! JSON schema for field models and domains.
//!
//! ```json
//! {
//!   "dim": 2, "c": 1.0, "mode": "relativistic",
//!   "potential": [{"center": [0.1, -0.1], "profile": {"type": "bump", "amplitude": 0.01, "radius": 0.6}}],
//!   "magnetic": [{"type": "constant", "b12": 0.1}],
//!   "domain": {"type": "ball", "center": [0, 0], "radius": 1}
//! }
//! ```

use serde::{Deserialize, Serialize};

use crate::domain::ConvexDomain;
use crate::error::{Error, Result};
use crate::fields::{FieldModel, MagneticTerm, Mode, Profile};
use crate::linalg::{Mat3, Vec3};
use crate::real::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileConfig {
    Bump { amplitude: f64, radius: f64 },
    Gaussian { amplitude: f64, width: f64 },
    Harmonic { strength: f64 },
    TruncatedHarmonic { strength: f64, flat_radius: f64, cutoff_radius: f64 },
}

impl ProfileConfig {
    pub fn build<T: Real>(&self) -> Result<Profile<T>> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(T::lit(v))
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        let fin = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(T::lit(v))
            } else {
                Err(Error::Config(format!("{name} must be finite")))
            }
        };
        Ok(match *self {
            ProfileConfig::Bump { amplitude, radius } => Profile::Bump { amplitude: fin("amplitude", amplitude)?, radius: pos("radius", radius)? },
            ProfileConfig::Gaussian { amplitude, width } => Profile::Gaussian { amplitude: fin("amplitude", amplitude)?, width: pos("width", width)? },
            ProfileConfig::Harmonic { strength } => Profile::Harmonic { strength: fin("strength", strength)? },
            ProfileConfig::TruncatedHarmonic { strength, flat_radius, cutoff_radius } => {
                if cutoff_radius <= flat_radius {
                    return Err(Error::Config("cutoff_radius must exceed flat_radius".into()));
                }
                Profile::TruncatedHarmonic {
                    strength: fin("strength", strength)?,
                    flat_radius: pos("flat_radius", flat_radius)?,
                    cutoff_radius: pos("cutoff_radius", cutoff_radius)?,
                }
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub center: Vec<f64>,
    pub profile: ProfileConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MagneticConfig {
    Constant {
        b12: f64,
        #[serde(default)]
        b13: f64,
        #[serde(default)]
        b23: f64,
    },
    Planar { center: Vec<f64>, profile: ProfileConfig },
    Curl { center: Vec<f64>, profile: ProfileConfig, direction: Vec<f64> },
    Quadratic { q: [[[f64; 3]; 3]; 3] },
}

fn point<T: Real>(v: &[f64], dim: usize, what: &str) -> Result<Vec3<T>> {
    if v.len() != dim {
        return Err(Error::Config(format!("{what} has {} coordinates, expected {dim}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Config(format!("{what} is not finite")));
    }
    Ok(Vec3::from_f64(v))
}

fn default_c() -> f64 {
    1.0
}

fn default_mode() -> Mode {
    Mode::Relativistic
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub dim: usize,
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default)]
    pub potential: Vec<PotentialConfig>,
    #[serde(default)]
    pub magnetic: Vec<MagneticConfig>,
}

impl ModelConfig {
    pub fn build<T: Real>(&self) -> Result<FieldModel<T>> {
        let c = if self.c > 0.0 && self.c.is_finite() {
            T::lit(self.c)
        } else {
            return Err(Error::Config(format!("c must be positive, got {}", self.c)));
        };
        let n = self.dim;
        let mut m = FieldModel::new(n, c, self.mode).map_err(|e| Error::Config(e.to_string()))?;
        for p in &self.potential {
            m = m.with_potential(point(&p.center, n, "potential centre")?, p.profile.build()?);
        }
        for b in &self.magnetic {
            let term = match b {
                MagneticConfig::Constant { b12, b13, b23 } => {
                    if n == 2 && (*b13 != 0.0 || *b23 != 0.0) {
                        return Err(Error::Config("b13 and b23 need dimension three".into()));
                    }
                    MagneticTerm::Constant(Mat3::antisymmetric(T::lit(*b12), T::lit(*b13), T::lit(*b23)))
                }
                MagneticConfig::Planar { center, profile } => {
                    if n != 2 {
                        return Err(Error::Config("planar magnetic terms need dimension two".into()));
                    }
                    MagneticTerm::Planar { center: point(center, n, "magnetic centre")?, profile: profile.build()? }
                }
                MagneticConfig::Curl { center, profile, direction } => MagneticTerm::Curl {
                    center: point(center, n, "magnetic centre")?,
                    profile: profile.build()?,
                    direction: point(direction, n, "direction")?,
                },
                MagneticConfig::Quadratic { q } => {
                    let mut out = [[[T::zero(); 3]; 3]; 3];
                    for k in 0..3 {
                        for i in 0..3 {
                            for j in 0..3 {
                                out[k][i][j] = T::lit(q[k][i][j]);
                            }
                        }
                    }
                    MagneticTerm::Quadratic { q: out }
                }
            };
            m = m.with_magnetic(term);
        }
        m.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(m)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainConfig {
    Ball { center: Vec<f64>, radius: f64 },
    Ellipsoid { center: Vec<f64>, semi_axes: Vec<f64> },
}

impl DomainConfig {
    pub fn unit_ball(dim: usize) -> Self {
        DomainConfig::Ball { center: vec![0.0; dim], radius: 1.0 }
    }

    pub fn build<T: Real>(&self, dim: usize) -> Result<ConvexDomain<T>> {
        let d = match self {
            DomainConfig::Ball { center, radius } => ConvexDomain::ball(dim, point(center, dim, "domain centre")?, T::lit(*radius)),
            DomainConfig::Ellipsoid { center, semi_axes } => {
                ConvexDomain::ellipsoid(dim, point(center, dim, "domain centre")?, point(semi_axes, dim, "semi_axes")?)
            }
        };
        d.map_err(|e| Error::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_build() {
        let text = r#"{"dim": 2, "potential": [{"center": [0.1, -0.1], "profile": {"type": "bump", "amplitude": 0.01, "radius": 0.6}}],
                       "magnetic": [{"type": "constant", "b12": 0.1}]}"#;
        let cfg: ModelConfig = serde_json::from_str(text).unwrap();
        let m: FieldModel<f64> = cfg.build().unwrap();
        assert_eq!(m.c, 1.0);
        assert_eq!(m.mode, Mode::Relativistic);
        assert!((m.potential_value(&Vec3::new(0.1, -0.1, 0.0)) - 0.01).abs() < 1e-15);
        assert!((m.magnetic_field(&Vec3::zero()).0[0][1] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        let bad = [
            r#"{"dim": 4}"#,
            r#"{"dim": 2, "c": -1}"#,
            r#"{"dim": 2, "potential": [{"center": [0.0], "profile": {"type": "bump", "amplitude": 1, "radius": 0.5}}]}"#,
            r#"{"dim": 2, "potential": [{"center": [0.0, 0.0], "profile": {"type": "bump", "amplitude": 1, "radius": 0}}]}"#,
            r#"{"dim": 3, "magnetic": [{"type": "planar", "center": [0, 0, 0], "profile": {"type": "bump", "amplitude": 1, "radius": 0.5}}]}"#,
        ];
        for text in bad {
            let cfg: ModelConfig = serde_json::from_str(text).unwrap();
            assert!(matches!(cfg.build::<f64>(), Err(Error::Config(_))), "{text}");
        }
        assert!(serde_json::from_str::<ModelConfig>(r#"{"dim": 2, "colour": 1}"#).is_err());
    }
}
