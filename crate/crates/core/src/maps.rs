//! Explicit planar maps: similarities, radial stretches, the conformal
//! slit-disk chain, compositions and restrictions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Domain, Point, Segment};

/// Serializable description of a map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum MapSpec {
    /// `p ↦ scale · R(rotation) p + translation`.
    Similarity {
        scale: f64,
        rotation: f64,
        translation: Point,
    },
    /// `p ↦ c + |p − c|^(K−1) (p − c)`; quasiconformal with constant `K`.
    RadialStretch {
        exponent: f64,
        center: Point,
    },
    /// Conformal map of the unit disk onto the unit disk slit along
    /// `[0, direction)`.
    ConformalSlitChain {
        direction: Point,
    },
    /// Applied left to right.
    Composition {
        maps: Vec<MapSpec>,
    },
    Restriction {
        base: Box<MapSpec>,
        domain: Domain,
    },
}

fn c(p: Point) -> Complex64 {
    Complex64::new(p.x, p.y)
}

fn p(z: Complex64) -> Point {
    Point::new(z.re, z.im)
}

impl MapSpec {
    pub fn similarity(scale: f64, rotation: f64, translation: Point) -> Self {
        MapSpec::Similarity {
            scale,
            rotation,
            translation,
        }
    }

    pub fn radial_stretch(exponent: f64, center: Point) -> Self {
        MapSpec::RadialStretch { exponent, center }
    }

    /// The chain onto the unit disk slit along the positive real axis.
    pub fn slit_chain() -> Self {
        MapSpec::ConformalSlitChain {
            direction: Point::new(1.0, 0.0),
        }
    }

    pub fn compose(maps: Vec<MapSpec>) -> Self {
        MapSpec::Composition { maps }
    }

    pub fn restrict(self, domain: Domain) -> Self {
        MapSpec::Restriction {
            base: Box::new(self),
            domain,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: MapSpec = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("map serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: &str| Error::InvalidMap {
            field: field.into(),
            reason: reason.into(),
        };
        match self {
            MapSpec::Similarity {
                scale,
                rotation,
                translation,
            } => {
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(bad("scale", "must be positive and finite"));
                }
                if !rotation.is_finite() {
                    return Err(bad("rotation", "must be finite"));
                }
                if !translation.is_finite() {
                    return Err(bad("translation", "must be finite"));
                }
            }
            MapSpec::RadialStretch { exponent, center } => {
                if !(exponent.is_finite() && *exponent >= 1.0) {
                    return Err(bad("exponent", "must be finite and at least 1"));
                }
                if !center.is_finite() {
                    return Err(bad("center", "must be finite"));
                }
            }
            MapSpec::ConformalSlitChain { direction } => {
                if !direction.is_finite() || (direction.norm() - 1.0).abs() > 1e-9 {
                    return Err(bad("direction", "must be a unit vector"));
                }
            }
            MapSpec::Composition { maps } => {
                if maps.is_empty() {
                    return Err(bad("maps", "composition needs at least one map"));
                }
                for m in maps {
                    m.validate()?;
                }
            }
            MapSpec::Restriction { base, domain } => {
                base.validate()?;
                domain
                    .validate()
                    .map_err(|e| bad("domain", &e.to_string()))?;
            }
        }
        Ok(())
    }

    /// Evaluates the map at `z`.
    pub fn apply(&self, z: Point) -> Result<Point> {
        match self {
            MapSpec::Similarity {
                scale,
                rotation,
                translation,
            } => Ok(z.rotate(*rotation) * *scale + *translation),
            MapSpec::RadialStretch { exponent, center } => {
                let v = z - *center;
                let r = v.norm();
                if r == 0.0 {
                    return Ok(*center);
                }
                Ok(*center + v * r.powf(exponent - 1.0))
            }
            MapSpec::ConformalSlitChain { direction } => {
                if !(z.norm() < 1.0) {
                    return Err(Error::OutsideDomain(z));
                }
                Ok(p(disk_to_slit(c(z))?).rotate(direction.angle()))
            }
            MapSpec::Composition { maps } => maps.iter().try_fold(z, |w, m| m.apply(w)),
            MapSpec::Restriction { base, domain } => {
                if !domain.contains(z) {
                    return Err(Error::OutsideDomain(z));
                }
                base.apply(z)
            }
        }
    }

    /// Evaluates the inverse map at `w`.
    pub fn apply_inverse(&self, w: Point) -> Result<Point> {
        match self {
            MapSpec::Similarity {
                scale,
                rotation,
                translation,
            } => Ok((w - *translation).rotate(-rotation) * (1.0 / scale)),
            MapSpec::RadialStretch { exponent, center } => {
                let v = w - *center;
                let r = v.norm();
                if r == 0.0 {
                    return Ok(*center);
                }
                Ok(*center + v * r.powf(1.0 / exponent - 1.0))
            }
            MapSpec::ConformalSlitChain { direction } => {
                let z = w.rotate(-direction.angle());
                let slit = Domain::unit_slit_disk();
                if !slit.contains(z) {
                    return Err(Error::OutsideDomain(w));
                }
                Ok(p(slit_to_disk(c(z))?))
            }
            MapSpec::Composition { maps } => {
                maps.iter().rev().try_fold(w, |z, m| m.apply_inverse(z))
            }
            MapSpec::Restriction { base, domain } => {
                let z = base.apply_inverse(w)?;
                if !domain.contains(z) {
                    return Err(Error::OutsideDomain(z));
                }
                Ok(z)
            }
        }
    }

    /// Image of `d` when it has a representation as a [`Domain`].
    pub fn image_domain(&self, d: &Domain) -> Result<Domain> {
        let unsupported = || {
            Error::UnsupportedImage(format!(
                "no domain representation for the image of {} under {}",
                domain_name(d),
                self.name()
            ))
        };
        let map_points =
            |pts: &[Point]| -> Result<Vec<Point>> { pts.iter().map(|&q| self.apply(q)).collect() };
        match self {
            MapSpec::Similarity {
                scale, rotation, ..
            } => {
                let f = |q: Point| self.apply(q).expect("similarity is total");
                let seg = |s: &Segment| Segment::new(f(s.a), f(s.b));
                Ok(match d {
                    Domain::Disk { center, radius } => Domain::disk(f(*center), radius * scale),
                    Domain::HalfPlane { normal, offset } => {
                        let n = normal.rotate(*rotation);
                        let t = f(Point::ORIGIN);
                        Domain::half_plane(n, offset * scale + n.dot(t))
                    }
                    Domain::PuncturedPlane { punctures } => {
                        Domain::punctured_plane(punctures.iter().map(|&q| f(q)).collect())
                    }
                    Domain::SlitDisk {
                        center,
                        radius,
                        slit_angle,
                        slit_start,
                    } => Domain::SlitDisk {
                        center: f(*center),
                        radius: radius * scale,
                        slit_angle: slit_angle + rotation,
                        slit_start: slit_start * scale,
                    },
                    Domain::Polygon {
                        vertices,
                        slits,
                        punctures,
                    } => Domain::Polygon {
                        vertices: vertices.iter().map(|&q| f(q)).collect(),
                        slits: slits.iter().map(seg).collect(),
                        punctures: punctures.iter().map(|&q| f(q)).collect(),
                    },
                    Domain::Punctured { base, removed } => Domain::punctured(
                        self.image_domain(base)?,
                        removed.iter().map(|&q| f(q)).collect(),
                    ),
                })
            }
            MapSpec::RadialStretch { exponent, center } => match d {
                Domain::Disk { center: c0, radius } if c0 == center => {
                    Ok(Domain::disk(*center, radius.powf(*exponent)))
                }
                Domain::SlitDisk {
                    center: c0,
                    radius,
                    slit_angle,
                    slit_start,
                } if c0 == center => Ok(Domain::SlitDisk {
                    center: *center,
                    radius: radius.powf(*exponent),
                    slit_angle: *slit_angle,
                    slit_start: slit_start.powf(*exponent),
                }),
                Domain::PuncturedPlane { punctures } => {
                    Ok(Domain::punctured_plane(map_points(punctures)?))
                }
                Domain::Punctured { base, removed } => Ok(Domain::punctured(
                    self.image_domain(base)?,
                    map_points(removed)?,
                )),
                _ => Err(unsupported()),
            },
            MapSpec::ConformalSlitChain { direction } => match d {
                Domain::Disk { center, radius }
                    if center.norm() <= 1e-12 && (radius - 1.0).abs() <= 1e-12 =>
                {
                    Ok(Domain::slit_disk(Point::ORIGIN, 1.0, direction.angle()))
                }
                Domain::Punctured { base, removed } => Ok(Domain::punctured(
                    self.image_domain(base)?,
                    map_points(removed)?,
                )),
                _ => Err(unsupported()),
            },
            MapSpec::Composition { maps } => maps
                .iter()
                .try_fold(d.clone(), |acc, m| m.image_domain(&acc)),
            MapSpec::Restriction { base, .. } => base.image_domain(d),
        }
    }

    /// Largest of `|Δf|/h` and `h/|Δf|` over eight directions at scale `h`.
    pub fn local_bilipschitz_estimate(&self, z: Point, h: f64) -> Result<f64> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::param("h", "must be positive and finite"));
        }
        let fz = self.apply(z)?;
        let mut worst: f64 = 1.0;
        for k in 0..8 {
            let u = Point::from_polar(1.0, k as f64 * std::f64::consts::FRAC_PI_4);
            let r = self.apply(z + u * h)?.dist(fz) / h;
            worst = worst.max(r).max(1.0 / r);
        }
        Ok(worst)
    }

    /// Relative Cauchy–Riemann residual `|∂_y f − i ∂_x f| / |∂_x f|` by central differences.
    pub fn cauchy_riemann_residual(&self, z: Point, h: f64) -> Result<f64> {
        let fx = (c(self.apply(z + Point::new(h, 0.0))?) - c(self.apply(z - Point::new(h, 0.0))?))
            / (2.0 * h);
        let fy = (c(self.apply(z + Point::new(0.0, h))?) - c(self.apply(z - Point::new(0.0, h))?))
            / (2.0 * h);
        Ok((fy - Complex64::i() * fx).norm() / fx.norm())
    }

    fn name(&self) -> &'static str {
        match self {
            MapSpec::Similarity { .. } => "similarity",
            MapSpec::RadialStretch { .. } => "radial_stretch",
            MapSpec::ConformalSlitChain { .. } => "conformal_slit_chain",
            MapSpec::Composition { .. } => "composition",
            MapSpec::Restriction { .. } => "restriction",
        }
    }
}

fn domain_name(d: &Domain) -> &'static str {
    match d {
        Domain::Disk { .. } => "disk",
        Domain::HalfPlane { .. } => "half_plane",
        Domain::PuncturedPlane { .. } => "punctured_plane",
        Domain::SlitDisk { .. } => "slit_disk",
        Domain::Polygon { .. } => "polygon",
        Domain::Punctured { .. } => "punctured",
    }
}

/// Unit disk onto the unit disk slit along `[0, 1)`: Cayley map to the upper
/// half-plane, inverse Joukowski onto the upper half-disk, then squaring.
fn disk_to_slit(zeta: Complex64) -> Result<Complex64> {
    let i = Complex64::i();
    let v = i * (1.0 + zeta) / (1.0 - zeta);
    let s = (v * v - 1.0).sqrt();
    let (r1, r2) = (-v + s, -v - s);
    let w = if r1.norm() < r2.norm() { r1 } else { r2 };
    if !(w.norm() < 1.0) || !(w.im > 0.0) {
        return Err(Error::Branch(format!(
            "inverse Joukowski root {w} of {v} is not in the upper half-disk"
        )));
    }
    Ok(w * w)
}

/// Inverse of [`disk_to_slit`]: the square root with its cut on `[0, 1)`,
/// Joukowski onto the upper half-plane, then the Cayley map.
fn slit_to_disk(z: Complex64) -> Result<Complex64> {
    let i = Complex64::i();
    let (r, mut phi) = z.to_polar();
    if phi <= 0.0 {
        phi += 2.0 * std::f64::consts::PI;
    }
    let w1 = Complex64::from_polar(r.sqrt(), 0.5 * phi);
    if !(w1.im > 0.0) {
        return Err(Error::Branch(format!("{z} lies on the slit")));
    }
    let w2 = -(w1 + 1.0 / w1) / 2.0;
    Ok((w2 - i) / (w2 + i))
}
