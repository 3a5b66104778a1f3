//! Indenter primitives behind a common trait, looked up by name.
//!
//! Each primitive is described in its own object frame with the pressing side
//! facing −z. The registry maps names such as `"sphere"` to a constructor, the
//! parameter names it expects, and a sampler for randomized dataset scenes.

use std::fmt::Debug;
use std::sync::OnceLock;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::vec3::{Mat3, Vec3};
use crate::{Error, Result};

/// A rigid indenter described by a signed distance bound.
pub trait Indenter: Send + Sync + Debug {
    fn name(&self) -> &'static str;

    /// Signed distance (or a lower bound on it) in the object frame.
    fn sdf(&self, q: Vec3) -> f64;

    fn bounding_radius(&self) -> f64;

    /// Distance along `dir` from `origin` to the first surface hit.
    fn first_hit(&self, origin: Vec3, dir: Vec3, t_max: f64) -> Option<f64> {
        let mut t = 0.0;
        for _ in 0..512 {
            let d = self.sdf(origin + dir * t);
            if d < 1e-7 {
                return Some(t);
            }
            t += d;
            if t > t_max {
                return None;
            }
        }
        None
    }
}

fn box_sdf(q: Vec3, half: Vec3) -> f64 {
    let d = q.abs() - half;
    d.max_scalar(0.0).norm() + d.max_comp().min(0.0)
}

#[derive(Debug)]
struct Sphere {
    r: f64,
}

impl Indenter for Sphere {
    fn name(&self) -> &'static str {
        "sphere"
    }

    fn sdf(&self, q: Vec3) -> f64 {
        q.norm() - self.r
    }

    fn bounding_radius(&self) -> f64 {
        self.r
    }

    fn first_hit(&self, o: Vec3, d: Vec3, t_max: f64) -> Option<f64> {
        let b = o.dot(d);
        let c = o.dot(o) - self.r * self.r;
        let disc = b * b - c;
        if disc < 0.0 {
            return None;
        }
        let t = -b - disc.sqrt();
        (0.0..=t_max).contains(&t).then_some(t)
    }
}

/// Cube pressed corner-first: a body diagonal points straight down.
#[derive(Debug)]
struct CubeCorner {
    edge: f64,
    to_cube: Mat3,
}

impl CubeCorner {
    fn new(edge: f64) -> Self {
        let diag = Vec3::new(-1.0, -1.0, -1.0).normalized();
        CubeCorner {
            edge,
            to_cube: Mat3::aligning(Vec3::new(0.0, 0.0, -1.0), diag),
        }
    }
}

impl Indenter for CubeCorner {
    fn name(&self) -> &'static str {
        "cube_corner"
    }

    fn sdf(&self, q: Vec3) -> f64 {
        let h = self.edge / 2.0;
        box_sdf(self.to_cube.apply(q), Vec3::new(h, h, h))
    }

    fn bounding_radius(&self) -> f64 {
        self.edge * 3f64.sqrt() / 2.0
    }
}

/// Long cylinder lying along x.
#[derive(Debug)]
struct Cylinder {
    r: f64,
}

const CYLINDER_LENGTH_MM: f64 = 40.0;

impl Indenter for Cylinder {
    fn name(&self) -> &'static str {
        "cylinder"
    }

    fn sdf(&self, q: Vec3) -> f64 {
        let radial = (q.y * q.y + q.z * q.z).sqrt() - self.r;
        let axial = q.x.abs() - CYLINDER_LENGTH_MM / 2.0;
        let (a, b) = (radial.max(0.0), axial.max(0.0));
        (a * a + b * b).sqrt() + radial.max(axial).min(0.0)
    }

    fn bounding_radius(&self) -> f64 {
        (CYLINDER_LENGTH_MM * CYLINDER_LENGTH_MM / 4.0 + self.r * self.r).sqrt()
    }
}

/// Blunt cone, tip down, base of `r` at height `h`.
#[derive(Debug)]
struct Cone {
    r: f64,
    h: f64,
}

impl Indenter for Cone {
    fn name(&self) -> &'static str {
        "cone"
    }

    fn sdf(&self, p: Vec3) -> f64 {
        // capped cone centered at the origin, radius r1 at z=-hh and r2 at z=+hh
        let hh = self.h / 2.0;
        let (r1, r2) = (0.1 * self.r, self.r);
        let qx = (p.x * p.x + p.y * p.y).sqrt();
        let qy = p.z;
        let (k1x, k1y) = (r2, hh);
        let (k2x, k2y) = (r2 - r1, 2.0 * hh);
        let cax = qx - qx.min(if qy < 0.0 { r1 } else { r2 });
        let cay = qy.abs() - hh;
        let t = (((k1x - qx) * k2x + (k1y - qy) * k2y) / (k2x * k2x + k2y * k2y)).clamp(0.0, 1.0);
        let cbx = qx - k1x + k2x * t;
        let cby = qy - k1y + k2y * t;
        let s = if cbx < 0.0 && cay < 0.0 { -1.0 } else { 1.0 };
        s * (cax * cax + cay * cay).min(cbx * cbx + cby * cby).sqrt()
    }

    fn bounding_radius(&self) -> f64 {
        (self.h * self.h / 4.0 + self.r * self.r).sqrt()
    }
}

/// Capsule lying along x.
#[derive(Debug)]
struct Capsule {
    r: f64,
    len: f64,
}

impl Indenter for Capsule {
    fn name(&self) -> &'static str {
        "capsule"
    }

    fn sdf(&self, q: Vec3) -> f64 {
        let x = q.x.clamp(-self.len / 2.0, self.len / 2.0);
        (q - Vec3::new(x, 0.0, 0.0)).norm() - self.r
    }

    fn bounding_radius(&self) -> f64 {
        self.len / 2.0 + self.r
    }
}

/// Half torus lying flat (the y ≥ 0 half).
#[derive(Debug)]
struct TorusArc {
    major: f64,
    minor: f64,
}

impl Indenter for TorusArc {
    fn name(&self) -> &'static str {
        "torus_arc"
    }

    fn sdf(&self, q: Vec3) -> f64 {
        let ring = (q.x * q.x + q.y * q.y).sqrt() - self.major;
        let torus = (ring * ring + q.z * q.z).sqrt() - self.minor;
        torus.max(-q.y)
    }

    fn bounding_radius(&self) -> f64 {
        self.major + self.minor
    }
}

type Builder = fn(&[f64]) -> Box<dyn Indenter>;
type Sampler = fn(&mut ChaCha8Rng) -> Vec<f64>;

/// One registered primitive.
#[derive(Clone)]
pub struct IndenterSpec {
    pub name: &'static str,
    pub param_names: &'static [&'static str],
    build: Builder,
    sample: Sampler,
}

impl IndenterSpec {
    pub fn new(
        name: &'static str,
        param_names: &'static [&'static str],
        build: Builder,
        sample: Sampler,
    ) -> Self {
        IndenterSpec {
            name,
            param_names,
            build,
            sample,
        }
    }

    pub fn sample_params(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (self.sample)(rng)
    }
}

impl Debug for IndenterSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IndenterSpec")
            .field("name", &self.name)
            .field("param_names", &self.param_names)
            .finish()
    }
}

#[derive(Clone, Debug, Default)]
pub struct IndenterRegistry {
    entries: Vec<IndenterSpec>,
}

impl IndenterRegistry {
    pub fn builtin() -> Self {
        let mut r = IndenterRegistry::default();
        r.register(IndenterSpec::new(
            "sphere",
            &["radius_mm"],
            |p| Box::new(Sphere { r: p[0] }),
            |rng| vec![rng.random_range(2.0..6.0)],
        ));
        r.register(IndenterSpec::new(
            "cube_corner",
            &["edge_mm"],
            |p| Box::new(CubeCorner::new(p[0])),
            |rng| vec![rng.random_range(4.0..10.0)],
        ));
        r.register(IndenterSpec::new(
            "cylinder",
            &["radius_mm"],
            |p| Box::new(Cylinder { r: p[0] }),
            |rng| vec![rng.random_range(1.5..4.0)],
        ));
        r.register(IndenterSpec::new(
            "cone",
            &["radius_mm", "height_mm"],
            |p| Box::new(Cone { r: p[0], h: p[1] }),
            |rng| vec![rng.random_range(2.0..5.0), rng.random_range(4.0..8.0)],
        ));
        r.register(IndenterSpec::new(
            "capsule",
            &["radius_mm", "length_mm"],
            |p| Box::new(Capsule { r: p[0], len: p[1] }),
            |rng| vec![rng.random_range(1.5..3.0), rng.random_range(4.0..10.0)],
        ));
        r.register(IndenterSpec::new(
            "torus_arc",
            &["major_mm", "minor_mm"],
            |p| Box::new(TorusArc { major: p[0], minor: p[1] }),
            |rng| vec![rng.random_range(3.0..6.0), rng.random_range(1.0..2.0)],
        ));
        r
    }

    /// Shared instance holding the built-in primitives.
    pub fn global() -> &'static IndenterRegistry {
        static REG: OnceLock<IndenterRegistry> = OnceLock::new();
        REG.get_or_init(IndenterRegistry::builtin)
    }

    /// Adds or replaces a primitive.
    pub fn register(&mut self, spec: IndenterSpec) {
        if let Some(e) = self.entries.iter_mut().find(|e| e.name == spec.name) {
            *e = spec;
        } else {
            self.entries.push(spec);
        }
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name).collect()
    }

    pub fn spec(&self, name: &str) -> Result<&IndenterSpec> {
        self.entries
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| Error::config(format!("unknown primitive '{name}'")))
    }

    pub fn build(&self, name: &str, params: &[f64]) -> Result<Box<dyn Indenter>> {
        let spec = self.spec(name)?;
        if params.len() != spec.param_names.len() {
            return Err(Error::config(format!(
                "primitive '{name}' takes {:?}, got {} values",
                spec.param_names,
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err(Error::config(format!("primitive '{name}' needs positive sizes")));
        }
        Ok((spec.build)(params))
    }

    /// Parses `name:p1,p2,...`.
    pub fn parse(&self, text: &str) -> Result<(String, Vec<f64>)> {
        let (name, rest) = text.split_once(':').unwrap_or((text, ""));
        let params = rest
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::config(format!("bad number '{s}' in object spec '{text}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        self.build(name, &params)?;
        Ok((name.to_string(), params))
    }
}
