//! Distance-ratio metric `j_D`, quasihyperbolic length `ℓ_k` and the
//! bracketed quasihyperbolic distance `k_D`.

use std::collections::BinaryHeap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{signed_angle, BBox, Domain, Point};
use crate::solver::QhSolver;

/// Ordered vertex list of a polygonal arc.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPolyline {
    pub vertices: Vec<Point>,
}

impl PathPolyline {
    pub fn new(vertices: Vec<Point>) -> Self {
        PathPolyline { vertices }
    }

    pub fn single(p: Point) -> Self {
        PathPolyline { vertices: vec![p] }
    }

    pub fn start(&self) -> Point {
        self.vertices[0]
    }

    pub fn end(&self) -> Point {
        *self.vertices.last().expect("path has at least one vertex")
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }

    /// Euclidean length.
    pub fn length(&self) -> f64 {
        self.edges().map(|(a, b)| a.dist(b)).sum()
    }

    /// Checks the polyline invariants against `d`.
    pub fn validate(&self, d: &Domain) -> Result<()> {
        if self.vertices.is_empty() {
            return Err(Error::InvalidPath("path has no vertices".into()));
        }
        if let Some(&p) = self.vertices.iter().find(|&&p| !d.contains(p)) {
            return Err(Error::InvalidPath(format!(
                "vertex {p:?} is outside the domain"
            )));
        }
        for (i, (a, b)) in self.edges().enumerate() {
            if a == b {
                return Err(Error::InvalidPath(format!("edge {i} is degenerate")));
            }
            if !d.segment_visible(a, b) {
                return Err(Error::InvalidPath(format!(
                    "edge {i} from {a:?} to {b:?} leaves the domain"
                )));
            }
        }
        Ok(())
    }
}

/// Tunables of the quasihyperbolic distance solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Base resolution; the coarsest cell size is `16 / initial_resolution` times the local boundary distance.
    pub initial_resolution: usize,
    pub max_refinements: usize,
    pub relative_tolerance: f64,
    pub quadrature_points_per_edge: usize,
    pub knn_edges: usize,
    /// Substitute exact values where a closed form is registered.
    pub use_closed_form: bool,
    /// Computation box for unbounded domains; derived from the endpoints when absent.
    pub bbox: Option<BBox>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            initial_resolution: 32,
            max_refinements: 4,
            relative_tolerance: 0.01,
            quadrature_points_per_edge: 8,
            knn_edges: 12,
            use_closed_form: true,
            bbox: None,
        }
    }
}

impl SolverConfig {
    /// Default configuration with the closed-form shortcut disabled.
    pub fn numeric() -> Self {
        SolverConfig {
            use_closed_form: false,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.relative_tolerance > 0.0) {
            return Err(Error::param("relative_tolerance", "must be positive"));
        }
        if self.initial_resolution == 0
            || self.quadrature_points_per_edge == 0
            || self.knn_edges == 0
        {
            return Err(Error::param(
                "solver counts",
                "initial_resolution, quadrature_points_per_edge and knn_edges must be at least 1",
            ));
        }
        Ok(())
    }
}

/// Bracket `lower ≤ k_D(x, y) ≤ upper` with a witness path of length `upper`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricResult {
    pub lower: f64,
    pub upper: f64,
    pub path: PathPolyline,
    pub refinement_level: usize,
    /// True when the value came from a closed form; `path` is then a sampled exact geodesic.
    pub exact: bool,
}

impl MetricResult {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// `j_D(x, y) = log(1 + |x − y| / min(d_D(x), d_D(y)))`.
pub fn j_distance(d: &Domain, x: Point, y: Point) -> Result<f64> {
    let dx = d.boundary_distance(x)?;
    let dy = d.boundary_distance(y)?;
    Ok(j_from_parts(x.dist(y), dx, dy))
}

#[inline]
pub(crate) fn j_from_parts(sep: f64, dx: f64, dy: f64) -> f64 {
    (sep / dx.min(dy)).ln_1p()
}

/// Gauss–Legendre rule on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature needs at least one point");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, 0.0);
                for j in 0..n {
                    let p2 = p1;
                    p1 = p0;
                    p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
                }
                dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
                let dz = p0 / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = 0.5 * (1.0 - z);
            nodes[n - 1 - i] = 0.5 * (1.0 + z);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        GaussLegendre { nodes, weights }
    }
}

/// Quasihyperbolic length of the straight edge `[a, b]`.
///
/// Composite Gauss–Legendre: each panel is at most half the boundary
/// distance at its start, so `d_D` varies by at most a factor of two inside
/// a panel. Panels whose halves disagree most with the whole are bisected
/// first, which resolves the kinks of `d_D` on the medial axis. Returns
/// infinity if the edge runs into the boundary.
pub fn edge_qh_length(d: &Domain, a: Point, b: Point, gl: &GaussLegendre) -> f64 {
    let len = a.dist(b);
    if len == 0.0 {
        return 0.0;
    }
    let dir = (b - a) * (1.0 / len);
    let rule = |s: f64, h: f64| -> f64 {
        let mut acc = 0.0;
        for (t, w) in gl.nodes.iter().zip(&gl.weights) {
            let dz = d.dist_unchecked(a + dir * (s + h * t));
            if !(dz > 0.0) {
                return f64::INFINITY;
            }
            acc += w / dz;
        }
        acc * h
    };
    let panel = |s: f64, h: f64, whole: f64| -> Panel {
        let left = rule(s, 0.5 * h);
        let right = rule(s + 0.5 * h, 0.5 * h);
        Panel {
            err: (left + right - whole).abs(),
            s,
            h,
            left,
            right,
        }
    };
    let mut heap = BinaryHeap::new();
    let mut s = 0.0;
    while s < len {
        let ds = d.dist_unchecked(a + dir * s);
        if !(ds > 0.0) || heap.len() > 1_000_000 {
            return f64::INFINITY;
        }
        let h = (0.5 * ds).min(len - s);
        let p = panel(s, h, rule(s, h));
        if !(p.left + p.right).is_finite() {
            return f64::INFINITY;
        }
        heap.push(p);
        let next = s + h;
        if next <= s {
            break;
        }
        s = next;
    }
    let mut total: f64 = heap.iter().map(|p| p.left + p.right).sum();
    let mut err: f64 = heap.iter().map(|p| p.err).sum();
    for _ in 0..QUADRATURE_BISECTIONS {
        if err <= 1e-13 * total {
            break;
        }
        let p = heap.pop().expect("at least one panel");
        let half = 0.5 * p.h;
        let (l, r) = (panel(p.s, half, p.left), panel(p.s + half, half, p.right));
        total += l.left + l.right + r.left + r.right - p.left - p.right;
        err += l.err + r.err - p.err;
        heap.push(l);
        heap.push(r);
    }
    heap.iter().map(|p| p.left + p.right).sum()
}

const QUADRATURE_BISECTIONS: usize = 64;

struct Panel {
    err: f64,
    s: f64,
    h: f64,
    left: f64,
    right: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err).is_eq()
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Quasihyperbolic length with the default 8-point rule.
pub fn qh_length(d: &Domain, path: &PathPolyline) -> Result<f64> {
    qh_length_with(d, path, 8)
}

/// `ℓ_k(path) = Σ ∫_edge |dz| / d_D(z)`.
pub fn qh_length_with(d: &Domain, path: &PathPolyline, points: usize) -> Result<f64> {
    path.validate(d)?;
    let gl = GaussLegendre::new(points);
    Ok(path
        .edges()
        .map(|(a, b)| edge_qh_length(d, a, b, &gl))
        .sum())
}

/// Exact `k_D` for the half-plane and the once-punctured plane; `None` elsewhere.
pub fn qh_closed_form(d: &Domain, x: Point, y: Point) -> Option<f64> {
    match d.canonical() {
        Domain::HalfPlane { normal, offset } => {
            let hx = normal.dot(x) - offset;
            let hy = normal.dot(y) - offset;
            if !(hx > 0.0 && hy > 0.0) {
                return None;
            }
            // arccosh(1 + |x−y|²/(2 hx hy)) written in the cancellation-free form
            Some(2.0 * (x.dist(y) / (2.0 * (hx * hy).sqrt())).asinh())
        }
        Domain::PuncturedPlane { punctures } if punctures.len() == 1 => {
            let q = punctures[0];
            let (u, v) = (x - q, y - q);
            let (ru, rv) = (u.norm(), v.norm());
            if ru == 0.0 || rv == 0.0 {
                return None;
            }
            let theta = signed_angle(u, v).abs();
            Some(theta.hypot((ru / rv).ln()))
        }
        _ => None,
    }
}

/// Sampled geodesic for the closed-form cases.
fn closed_form_geodesic(d: &Domain, x: Point, y: Point, k: f64) -> Option<PathPolyline> {
    let n = ((k / 0.02).ceil() as usize).clamp(8, 20_000);
    let mut pts = Vec::with_capacity(n + 1);
    match d.canonical() {
        Domain::HalfPlane { normal, offset } => {
            let tangent = Point::new(normal.y, -normal.x);
            let to_uh = |p: Point| (tangent.dot(p), normal.dot(p) - offset);
            let from_uh = |u: f64, h: f64| tangent * u + *normal * (h + offset);
            let (u1, h1) = to_uh(x);
            let (u2, h2) = to_uh(y);
            if (u1 - u2).abs() <= 1e-14 * (h1 + h2) {
                for i in 0..=n {
                    let s = i as f64 / n as f64;
                    pts.push(from_uh(u1 + s * (u2 - u1), h1 * (h2 / h1).powf(s)));
                }
            } else {
                let c = (u2 * u2 + h2 * h2 - u1 * u1 - h1 * h1) / (2.0 * (u2 - u1));
                let r = (u1 - c).hypot(h1);
                let arc = |h: f64, u: f64| (h.atan2(u - c) / 2.0).tan().ln();
                let (s1, s2) = (arc(h1, u1), arc(h2, u2));
                for i in 0..=n {
                    let s = s1 + (s2 - s1) * i as f64 / n as f64;
                    let th = 2.0 * s.exp().atan();
                    pts.push(from_uh(c + r * th.cos(), r * th.sin()));
                }
            }
        }
        Domain::PuncturedPlane { punctures } => {
            let q = punctures[0];
            let (u, v) = (x - q, y - q);
            let (l1, l2) = (u.norm().ln(), v.norm().ln());
            let mut dphi = signed_angle(u, v);
            if dphi == -PI {
                dphi = PI;
            }
            let phi1 = u.angle();
            for i in 0..=n {
                let s = i as f64 / n as f64;
                pts.push(q + Point::from_polar((l1 + s * (l2 - l1)).exp(), phi1 + s * dphi));
            }
        }
        _ => return None,
    }
    pts[0] = x;
    pts[n] = y;
    pts.dedup();
    Some(PathPolyline::new(pts))
}

/// Analytic lower bound for `k_D(x, y)`: the larger of `j_D`, the log-ratio
/// bound `|log(d_D(x)/d_D(y))|`, and `log(1 + λ/min d_D)` with `λ` a lower
/// bound on the inner distance.
pub fn qh_lower_bound(d: &Domain, x: Point, y: Point) -> Result<f64> {
    let dx = d.boundary_distance(x)?;
    let dy = d.boundary_distance(y)?;
    let j = j_from_parts(x.dist(y), dx, dy);
    let ratio = (dx / dy).ln().abs();
    let inner = j_from_parts(d.inner_distance_lower(x, y), dx, dy);
    Ok(j.max(ratio).max(inner))
}

/// Bracketed quasihyperbolic distance.
pub fn qh_distance(d: &Domain, x: Point, y: Point, cfg: &SolverConfig) -> Result<MetricResult> {
    cfg.validate()?;
    let lower = qh_lower_bound(d, x, y)?;
    if x == y {
        return Ok(MetricResult {
            lower: 0.0,
            upper: 0.0,
            path: PathPolyline::single(x),
            refinement_level: 0,
            exact: true,
        });
    }
    if cfg.use_closed_form {
        if let Some(k) = qh_closed_form(d, x, y) {
            let path = closed_form_geodesic(d, x, y, k).expect("closed form has a geodesic");
            return Ok(MetricResult {
                lower: k,
                upper: k,
                path,
                refinement_level: 0,
                exact: true,
            });
        }
    }
    let mut solver = QhSolver::new(d, x, y, cfg)?;
    solver.run(lower)
}
