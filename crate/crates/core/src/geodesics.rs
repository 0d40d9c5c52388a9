//! Near-geodesics and sphere chains along paths.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Domain, Point};
use crate::metrics::{
    edge_qh_length, qh_closed_form, qh_distance, qh_length_with, GaussLegendre, PathPolyline,
    SolverConfig,
};
use crate::solver::QhSolver;

const MAX_CHAIN_STEPS: usize = 100_000;

/// A path certified as a `c`-near-geodesic against the solver's next refinement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NearGeodesic {
    pub path: PathPolyline,
    pub qh_length: f64,
    /// `qh_length / reference upper bound`; at most the requested `c`.
    pub ratio: f64,
}

/// Extracts a path whose quasihyperbolic length is within `c` of the best
/// upper bound found by one further refinement.
pub fn extract_neargeodesic(
    d: &Domain,
    x: Point,
    y: Point,
    c: f64,
    cfg: &SolverConfig,
) -> Result<NearGeodesic> {
    if !(c > 1.0) {
        return Err(Error::param("c", "must exceed 1"));
    }
    cfg.validate()?;
    d.boundary_distance(x)?;
    d.boundary_distance(y)?;
    if x == y {
        return Ok(NearGeodesic {
            path: PathPolyline::single(x),
            qh_length: 0.0,
            ratio: 1.0,
        });
    }
    if cfg.use_closed_form {
        if let Some(k) = qh_closed_form(d, x, y) {
            let r = qh_distance(d, x, y, cfg)?;
            let len = qh_length_with(d, &r.path, cfg.quadrature_points_per_edge)?;
            let ratio = len / k;
            if ratio <= c {
                return Ok(NearGeodesic {
                    path: r.path,
                    qh_length: len,
                    ratio,
                });
            }
        }
    }
    let mut solver = QhSolver::new(d, x, y, cfg)?;
    solver.step();
    let mut best_ratio = f64::INFINITY;
    for _ in 0..cfg.max_refinements {
        let Some(cand) = solver.best().cloned() else {
            solver.step();
            continue;
        };
        let reference = solver.step();
        let ratio = cand.length / reference;
        if ratio <= c {
            return Ok(NearGeodesic {
                path: PathPolyline::new(cand.path),
                qh_length: cand.length,
                ratio,
            });
        }
        best_ratio = best_ratio.min(ratio);
    }
    if solver.best().is_none() {
        return Err(Error::NoPath);
    }
    Err(Error::CertificationFailure {
        ratio: best_ratio,
        target: c,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NearGeodesicVerdict {
    pub pass: bool,
    pub worst_ratio: f64,
    /// Vertex indices of the pair attaining `worst_ratio`.
    pub worst_pair: (usize, usize),
    pub pairs_checked: usize,
}

/// Samples vertex pairs `(u, v)` and compares `ℓ_k(path[u..v])` with the
/// solver's upper bound for `k_D(u, v)`. The endpoint pair is always included.
pub fn verify_neargeodesic(
    d: &Domain,
    path: &PathPolyline,
    c: f64,
    samples: usize,
    seed: u64,
) -> Result<NearGeodesicVerdict> {
    path.validate(d)?;
    let cfg = SolverConfig::default();
    let gl = GaussLegendre::new(cfg.quadrature_points_per_edge);
    let mut prefix = vec![0.0];
    for (a, b) in path.edges() {
        prefix.push(prefix.last().unwrap() + edge_qh_length(d, a, b, &gl));
    }
    let n = path.vertices.len();
    let mut pairs = vec![(0, n - 1)];
    if n > 2 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            if i != j {
                pairs.push((i.min(j), i.max(j)));
            }
        }
    }
    let mut worst = (1.0, (0, n - 1));
    let mut checked = 0;
    for (i, j) in pairs {
        if i == j {
            continue;
        }
        let sub = prefix[j] - prefix[i];
        let k = qh_distance(d, path.vertices[i], path.vertices[j], &cfg)?.upper;
        if k > 0.0 {
            checked += 1;
            let r = sub / k;
            if r > worst.0 {
                worst = (r, (i, j));
            }
        }
    }
    Ok(NearGeodesicVerdict {
        pass: worst.0 <= c,
        worst_ratio: worst.0,
        worst_pair: worst.1,
        pairs_checked: checked,
    })
}

/// Points `z_1, …, z_p` with `|z_{i+1} − z_i| = a·d_D(z_i)`, each the first
/// crossing of the sphere around the previous point in traversal order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainResult {
    pub points: Vec<Point>,
    pub step_ratio: f64,
    /// The terminal point lies in the closed ball around the last chain point.
    pub terminal_covered: bool,
}

impl ChainResult {
    /// Number of chain points `p`.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of sphere crossings, `p − 1`.
    pub fn steps(&self) -> usize {
        self.points.len().saturating_sub(1)
    }
}

/// Sphere chaining along `path` with step ratio `a`.
pub fn chain_points(d: &Domain, path: &PathPolyline, a: f64) -> Result<ChainResult> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::param("a", "must lie in (0, 1)"));
    }
    path.validate(d)?;
    let verts = &path.vertices;
    let target = path.end();
    let mut z = path.start();
    let mut points = vec![z];
    // current position: edge index and parameter along it
    let (mut edge, mut t0) = (0usize, 0.0f64);
    loop {
        let r = a * d.dist_unchecked(z);
        if z.dist(target) <= r {
            return Ok(ChainResult {
                points,
                step_ratio: a,
                terminal_covered: true,
            });
        }
        if points.len() > MAX_CHAIN_STEPS {
            return Err(Error::ChainOverflow {
                steps: points.len(),
            });
        }
        let mut found = None;
        while edge + 1 < verts.len() {
            if let Some(t) = sphere_exit(verts[edge], verts[edge + 1], z, r, t0) {
                found = Some(t);
                break;
            }
            edge += 1;
            t0 = 0.0;
        }
        match found {
            Some(t) => {
                z = verts[edge].lerp(verts[edge + 1], t);
                points.push(z);
                t0 = t;
            }
            // rounding left the terminal a hair outside the ball
            None => {
                return Ok(ChainResult {
                    points,
                    step_ratio: a,
                    terminal_covered: true,
                })
            }
        }
    }
}

/// Smallest `t ≥ t0` in `[0, 1]` with `|a + t(b − a) − z| = r`, for a start inside the sphere.
fn sphere_exit(a: Point, b: Point, z: Point, r: f64, t0: f64) -> Option<f64> {
    let ab = b - a;
    let az = a - z;
    let qa = ab.norm_sq();
    let qb = az.dot(ab);
    let qc = az.norm_sq() - r * r;
    let disc = qb * qb - qa * qc;
    if qa == 0.0 || disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    // larger root, in the cancellation-free form
    let t = if qb <= 0.0 {
        (-qb + sq) / qa
    } else {
        -qc / (qb + sq)
    };
    if t < t0 || t > 1.0 {
        return None;
    }
    // one Newton step on |p(t) − z|² − r²
    let p = a + ab * t;
    let f = (p - z).norm_sq() - r * r;
    let df = 2.0 * (p - z).dot(ab);
    let t = if df != 0.0 {
        (t - f / df).clamp(t0, 1.0)
    } else {
        t
    };
    Some(t)
}
