//! Planar domain catalog.
//!
//! Every variant answers membership, boundary distance, nearest boundary
//! point and segment visibility in closed form. Slits and punctures count
//! as boundary, so `boundary_distance` is the distance to the full
//! complement of the open set.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance below which a point counts as lying on the boundary.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn from_polar(r: f64, angle: f64) -> Self {
        Point::new(r * angle.cos(), r * angle.sin())
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn rotate(self, angle: f64) -> Point {
        let (s, c) = angle.sin_cos();
        Point::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn lerp(self, o: Point, t: f64) -> Point {
        Point::new(self.x + t * (o.x - self.x), self.y + t * (o.y - self.y))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from(a: [f64; 2]) -> Self {
        Point::new(a[0], a[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Axis-aligned box, used for sampling and as the solver's finite extent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub min: Point,
    pub max: Point,
}

impl BBox {
    pub fn new(min: Point, max: Point) -> Self {
        BBox {
            min: Point::new(min.x.min(max.x), min.y.min(max.y)),
            max: Point::new(min.x.max(max.x), min.y.max(max.y)),
        }
    }

    pub fn around(center: Point, half: f64) -> Self {
        BBox::new(
            center - Point::new(half, half),
            center + Point::new(half, half),
        )
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn center(&self) -> Point {
        self.min.lerp(self.max, 0.5)
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn union_point(&self, p: Point) -> BBox {
        BBox {
            min: Point::new(self.min.x.min(p.x), self.min.y.min(p.y)),
            max: Point::new(self.max.x.max(p.x), self.max.y.max(p.y)),
        }
    }

    pub fn intersect(&self, o: &BBox) -> Option<BBox> {
        let min = Point::new(self.min.x.max(o.min.x), self.min.y.max(o.min.y));
        let max = Point::new(self.max.x.min(o.max.x), self.max.y.min(o.max.y));
        (min.x < max.x && min.y < max.y).then_some(BBox { min, max })
    }

    pub fn expand(&self, by: f64) -> BBox {
        BBox {
            min: self.min - Point::new(by, by),
            max: self.max + Point::new(by, by),
        }
    }

    fn of_points(pts: &[Point]) -> Option<BBox> {
        let first = *pts.first()?;
        Some(pts.iter().fold(
            BBox {
                min: first,
                max: first,
            },
            |b, &p| b.union_point(p),
        ))
    }
}

/// Closed segment `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[Point; 2]", into = "[Point; 2]")]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl From<[Point; 2]> for Segment {
    fn from(s: [Point; 2]) -> Self {
        Segment { a: s[0], b: s[1] }
    }
}

impl From<Segment> for [Point; 2] {
    fn from(s: Segment) -> Self {
        [s.a, s.b]
    }
}

impl Segment {
    pub fn new(a: Point, b: Point) -> Self {
        Segment { a, b }
    }

    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }

    /// Nearest point of the segment to `p`.
    pub fn project(&self, p: Point) -> Point {
        let ab = self.b - self.a;
        let len_sq = ab.norm_sq();
        if len_sq == 0.0 {
            return self.a;
        }
        let t = ((p - self.a).dot(ab) / len_sq).clamp(0.0, 1.0);
        self.a.lerp(self.b, t)
    }

    pub fn distance_to(&self, p: Point) -> f64 {
        p.dist(self.project(p))
    }

    pub fn intersects(&self, o: &Segment) -> bool {
        let d1 = orient(o.a, o.b, self.a);
        let d2 = orient(o.a, o.b, self.b);
        let d3 = orient(self.a, self.b, o.a);
        let d4 = orient(self.a, self.b, o.b);
        if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
            && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
        {
            return true;
        }
        (d1 == 0.0 && on_segment(o, self.a))
            || (d2 == 0.0 && on_segment(o, self.b))
            || (d3 == 0.0 && on_segment(self, o.a))
            || (d4 == 0.0 && on_segment(self, o.b))
    }

    pub fn distance_to_segment(&self, o: &Segment) -> f64 {
        if self.intersects(o) {
            return 0.0;
        }
        self.distance_to(o.a)
            .min(self.distance_to(o.b))
            .min(o.distance_to(self.a))
            .min(o.distance_to(self.b))
    }
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(s: &Segment, p: Point) -> bool {
    p.x >= s.a.x.min(s.b.x)
        && p.x <= s.a.x.max(s.b.x)
        && p.y >= s.a.y.min(s.b.y)
        && p.y <= s.a.y.max(s.b.y)
}

/// An open connected planar region from the closed-form catalog.
///
/// JSON form: an object with a `"variant"` tag (`disk`, `half_plane`,
/// `punctured_plane`, `slit_disk`, `polygon`, `punctured`) and the
/// variant's fields; points are `[x, y]` arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum Domain {
    Disk {
        center: Point,
        radius: f64,
    },
    /// `{ p : normal · p > offset }` with a unit inward normal.
    HalfPlane {
        normal: Point,
        offset: f64,
    },
    PuncturedPlane {
        punctures: Vec<Point>,
    },
    /// Disk minus the radial segment `{ center + s·(cos θ, sin θ) : slit_start ≤ s < radius }`.
    SlitDisk {
        center: Point,
        radius: f64,
        slit_angle: f64,
        #[serde(default)]
        slit_start: f64,
    },
    /// Interior of a simple polygon minus interior slit segments and punctures.
    Polygon {
        vertices: Vec<Point>,
        #[serde(default)]
        slits: Vec<Segment>,
        #[serde(default)]
        punctures: Vec<Point>,
    },
    Punctured {
        base: Box<Domain>,
        removed: Vec<Point>,
    },
}

/// Nearest boundary point and its distance.
#[derive(Debug, Clone, Copy)]
pub struct Nearest {
    pub dist: f64,
    pub point: Point,
}

impl Nearest {
    fn of(p: Point, q: Point) -> Self {
        Nearest {
            dist: p.dist(q),
            point: q,
        }
    }

    fn min(self, o: Nearest) -> Nearest {
        if o.dist < self.dist {
            o
        } else {
            self
        }
    }
}

impl Domain {
    pub fn disk(center: Point, radius: f64) -> Self {
        Domain::Disk { center, radius }
    }

    pub fn unit_disk() -> Self {
        Domain::disk(Point::ORIGIN, 1.0)
    }

    /// Half-plane with the given inward normal; the normal is normalised.
    pub fn half_plane(normal: Point, offset: f64) -> Self {
        let n = normal.norm();
        Domain::HalfPlane {
            normal: normal * (1.0 / n),
            offset: offset / n,
        }
    }

    /// The upper half-plane `y > 0`.
    pub fn upper_half_plane() -> Self {
        Domain::half_plane(Point::new(0.0, 1.0), 0.0)
    }

    pub fn punctured_plane(punctures: Vec<Point>) -> Self {
        Domain::PuncturedPlane { punctures }
    }

    pub fn slit_disk(center: Point, radius: f64, slit_angle: f64) -> Self {
        Domain::SlitDisk {
            center,
            radius,
            slit_angle,
            slit_start: 0.0,
        }
    }

    /// `𝔹(0,1) ∖ [0,1)`.
    pub fn unit_slit_disk() -> Self {
        Domain::slit_disk(Point::ORIGIN, 1.0, 0.0)
    }

    pub fn polygon(vertices: Vec<Point>) -> Self {
        Domain::Polygon {
            vertices,
            slits: Vec::new(),
            punctures: Vec::new(),
        }
    }

    pub fn punctured(base: Domain, removed: Vec<Point>) -> Self {
        Domain::Punctured {
            base: Box::new(base),
            removed,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let d: Domain = serde_json::from_str(s)?;
        d.validate()?;
        Ok(d)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("domain serialization is infallible")
    }

    /// Checks the catalog invariants, naming the offending field on failure.
    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, p: Point| {
            if p.is_finite() {
                Ok(())
            } else {
                Err(Error::domain(name, "coordinates must be finite"))
            }
        };
        match self {
            Domain::Disk { center, radius } => {
                finite("center", *center)?;
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::domain("radius", "must be positive and finite"));
                }
            }
            Domain::HalfPlane { normal, offset } => {
                finite("normal", *normal)?;
                if (normal.norm() - 1.0).abs() > 1e-9 {
                    return Err(Error::domain("normal", "must be a unit vector"));
                }
                if !offset.is_finite() {
                    return Err(Error::domain("offset", "must be finite"));
                }
            }
            Domain::PuncturedPlane { punctures } => {
                if punctures.is_empty() {
                    return Err(Error::domain("punctures", "at least one puncture required"));
                }
                for p in punctures {
                    finite("punctures", *p)?;
                }
            }
            Domain::SlitDisk {
                center,
                radius,
                slit_angle,
                slit_start,
            } => {
                finite("center", *center)?;
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::domain("radius", "must be positive and finite"));
                }
                if !slit_angle.is_finite() {
                    return Err(Error::domain("slit_angle", "must be finite"));
                }
                if !(*slit_start >= 0.0 && slit_start < radius) {
                    return Err(Error::domain("slit_start", "must lie in [0, radius)"));
                }
            }
            Domain::Polygon {
                vertices,
                slits,
                punctures,
            } => {
                if vertices.len() < 3 {
                    return Err(Error::domain("vertices", "need at least three vertices"));
                }
                for v in vertices {
                    finite("vertices", *v)?;
                }
                let edges = polygon_edges(vertices);
                if signed_area(vertices).abs() <= f64::EPSILON {
                    return Err(Error::domain("vertices", "polygon has zero area"));
                }
                let n = edges.len();
                for i in 0..n {
                    if edges[i].length() == 0.0 {
                        return Err(Error::domain("vertices", "repeated consecutive vertex"));
                    }
                    for j in i + 1..n {
                        let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                        if !adjacent && edges[i].intersects(&edges[j]) {
                            return Err(Error::domain("vertices", "polygon is not simple"));
                        }
                    }
                }
                for s in slits {
                    finite("slits", s.a)?;
                    finite("slits", s.b)?;
                    let inside = point_in_polygon(vertices, s.a)
                        && point_in_polygon(vertices, s.b)
                        && edges
                            .iter()
                            .all(|e| e.distance_to_segment(s) > BOUNDARY_TOL);
                    if !inside {
                        return Err(Error::domain("slits", "slit must lie strictly inside"));
                    }
                }
                for p in punctures {
                    finite("punctures", *p)?;
                    let inside = point_in_polygon(vertices, *p)
                        && edges.iter().all(|e| e.distance_to(*p) > BOUNDARY_TOL);
                    if !inside {
                        return Err(Error::domain(
                            "punctures",
                            "puncture must lie strictly inside",
                        ));
                    }
                }
            }
            Domain::Punctured { base, removed } => {
                base.validate()?;
                for p in removed {
                    finite("removed", *p)?;
                    if !base.contains(*p) {
                        return Err(Error::domain(
                            "removed",
                            "removed point must lie inside the base domain",
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// True iff `p` is inside the region ignoring slits and punctures.
    fn inside_hull(&self, p: Point) -> bool {
        match self {
            Domain::Disk { center, radius } | Domain::SlitDisk { center, radius, .. } => {
                p.dist(*center) < *radius
            }
            Domain::HalfPlane { normal, offset } => normal.dot(p) > *offset,
            Domain::PuncturedPlane { .. } => true,
            Domain::Polygon { vertices, .. } => point_in_polygon(vertices, p),
            Domain::Punctured { base, .. } => base.inside_hull(p),
        }
    }

    /// Nearest point of the boundary set (including slits and punctures).
    /// Defined for every finite `p`, inside or not.
    pub fn nearest_boundary(&self, p: Point) -> Nearest {
        match self {
            Domain::Disk { center, radius } => circle_nearest(*center, *radius, p),
            Domain::HalfPlane { normal, offset } => {
                let h = normal.dot(p) - offset;
                Nearest {
                    dist: h.abs(),
                    point: p - *normal * h,
                }
            }
            Domain::PuncturedPlane { punctures } => nearest_point(punctures, p),
            Domain::SlitDisk {
                center,
                radius,
                slit_angle,
                slit_start,
            } => {
                let slit = slit_segment(*center, *radius, *slit_angle, *slit_start);
                circle_nearest(*center, *radius, p).min(Nearest::of(p, slit.project(p)))
            }
            Domain::Polygon {
                vertices,
                slits,
                punctures,
            } => {
                let mut best = Nearest {
                    dist: f64::INFINITY,
                    point: p,
                };
                for e in polygon_edges(vertices).iter().chain(slits.iter()) {
                    best = best.min(Nearest::of(p, e.project(p)));
                }
                if !punctures.is_empty() {
                    best = best.min(nearest_point(punctures, p));
                }
                best
            }
            Domain::Punctured { base, removed } => {
                let b = base.nearest_boundary(p);
                if removed.is_empty() {
                    b
                } else {
                    b.min(nearest_point(removed, p))
                }
            }
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        p.is_finite() && self.inside_hull(p) && self.nearest_boundary(p).dist > BOUNDARY_TOL
    }

    /// `d_D(p)`: Euclidean distance from an interior point to the boundary.
    pub fn boundary_distance(&self, p: Point) -> Result<f64> {
        if !self.contains(p) {
            return Err(Error::OutsideDomain(p));
        }
        Ok(self.nearest_boundary(p).dist)
    }

    /// Boundary distance without the membership check; callers guarantee `p` is inside.
    #[inline]
    pub(crate) fn dist_unchecked(&self, p: Point) -> f64 {
        self.nearest_boundary(p).dist
    }

    /// Gradient of `d_D` at an interior point (unit vector away from the nearest boundary point).
    pub fn boundary_distance_gradient(&self, p: Point) -> Point {
        if let Domain::HalfPlane { normal, .. } = self {
            return *normal;
        }
        let n = self.nearest_boundary(p);
        if n.dist == 0.0 {
            return Point::ORIGIN;
        }
        (p - n.point) * (1.0 / n.dist)
    }

    /// True iff the open segment `(a, b)` lies in the domain and misses every puncture.
    pub fn segment_visible(&self, a: Point, b: Point) -> bool {
        self.contains(a) && self.contains(b) && self.segment_clear(a, b)
    }

    fn segment_clear(&self, a: Point, b: Point) -> bool {
        let seg = Segment::new(a, b);
        match self {
            Domain::Disk { .. } | Domain::HalfPlane { .. } => true,
            Domain::PuncturedPlane { punctures } => points_clear(&seg, punctures),
            Domain::SlitDisk {
                center,
                radius,
                slit_angle,
                slit_start,
            } => {
                let slit = slit_segment(*center, *radius, *slit_angle, *slit_start);
                seg.distance_to_segment(&slit) > BOUNDARY_TOL
            }
            Domain::Polygon {
                vertices,
                slits,
                punctures,
            } => {
                polygon_edges(vertices)
                    .iter()
                    .chain(slits.iter())
                    .all(|e| seg.distance_to_segment(e) > BOUNDARY_TOL)
                    && points_clear(&seg, punctures)
            }
            Domain::Punctured { base, removed } => {
                base.segment_clear(a, b) && points_clear(&seg, removed)
            }
        }
    }

    /// Bounding box of a bounded domain; `None` for unbounded variants.
    pub fn bounding_box(&self) -> Option<BBox> {
        match self {
            Domain::Disk { center, radius } | Domain::SlitDisk { center, radius, .. } => {
                Some(BBox::around(*center, *radius))
            }
            Domain::HalfPlane { .. } | Domain::PuncturedPlane { .. } => None,
            Domain::Polygon { vertices, .. } => BBox::of_points(vertices),
            Domain::Punctured { base, .. } => base.bounding_box(),
        }
    }

    /// Box used when sampling the domain: the bounding box if bounded, a unit
    /// neighbourhood of the boundary near the origin for a half-plane, and a
    /// box around the punctures for a punctured plane.
    pub fn sampling_box(&self) -> BBox {
        match self {
            Domain::HalfPlane { normal, offset } => BBox::around(*normal * (offset + 1.0), 1.0),
            Domain::PuncturedPlane { punctures } => {
                let n = punctures.len().max(1) as f64;
                let c = punctures.iter().fold(Point::ORIGIN, |acc, &q| acc + q) * (1.0 / n);
                let spread = punctures.iter().map(|q| q.dist(c)).fold(0.0, f64::max);
                BBox::around(c, 2.0 + spread)
            }
            Domain::Punctured { base, .. } => base.sampling_box(),
            d => d.bounding_box().expect("remaining variants are bounded"),
        }
    }

    /// Innermost domain after stripping `Punctured` wrappers with no removed points.
    pub fn canonical(&self) -> &Domain {
        match self {
            Domain::Punctured { base, removed } if removed.is_empty() => base.canonical(),
            d => d,
        }
    }

    /// Points of the boundary that a path must detour around (slit tips).
    pub(crate) fn slit_tip(&self) -> Option<Point> {
        match self {
            Domain::SlitDisk {
                center,
                radius,
                slit_angle,
                slit_start,
            } => Some(slit_segment(*center, *radius, *slit_angle, *slit_start).a),
            Domain::Punctured { base, .. } => base.slit_tip(),
            _ => None,
        }
    }

    /// The slit of a slit disk, if any.
    pub fn slit(&self) -> Option<Segment> {
        match self {
            Domain::SlitDisk {
                center,
                radius,
                slit_angle,
                slit_start,
            } => Some(slit_segment(*center, *radius, *slit_angle, *slit_start)),
            Domain::Punctured { base, .. } => base.slit(),
            _ => None,
        }
    }

    /// Inner (intrinsic Euclidean) distance where it has a closed form; a lower
    /// bound on the Euclidean length of every path from `a` to `b` in the domain.
    pub fn inner_distance_lower(&self, a: Point, b: Point) -> f64 {
        let direct = a.dist(b);
        match (self.slit(), self.slit_tip()) {
            (Some(slit), Some(tip)) => {
                // The slit runs from the tip to the outer circle, so a path
                // crossing the slit's line must go round the tip.
                if Segment::new(a, b).intersects(&slit) {
                    a.dist(tip) + tip.dist(b)
                } else {
                    direct
                }
            }
            _ => direct,
        }
    }
}

fn slit_segment(center: Point, radius: f64, angle: f64, start: f64) -> Segment {
    let u = Point::from_polar(1.0, angle);
    Segment::new(center + u * start, center + u * radius)
}

fn circle_nearest(center: Point, radius: f64, p: Point) -> Nearest {
    let v = p - center;
    let r = v.norm();
    let point = if r > 0.0 {
        center + v * (radius / r)
    } else {
        center + Point::new(radius, 0.0)
    };
    Nearest {
        dist: (radius - r).abs(),
        point,
    }
}

fn nearest_point(pts: &[Point], p: Point) -> Nearest {
    pts.iter().map(|&q| Nearest::of(p, q)).fold(
        Nearest {
            dist: f64::INFINITY,
            point: p,
        },
        Nearest::min,
    )
}

fn points_clear(seg: &Segment, pts: &[Point]) -> bool {
    pts.iter().all(|&q| seg.distance_to(q) > BOUNDARY_TOL)
}

pub(crate) fn polygon_edges(vertices: &[Point]) -> Vec<Segment> {
    let n = vertices.len();
    (0..n)
        .map(|i| Segment::new(vertices[i], vertices[(i + 1) % n]))
        .collect()
}

fn signed_area(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    (0..n)
        .map(|i| vertices[i].cross(vertices[(i + 1) % n]))
        .sum::<f64>()
        / 2.0
}

fn point_in_polygon(vertices: &[Point], p: Point) -> bool {
    let n = vertices.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (vertices[i], vertices[j]);
        if (a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Deterministic rejection sampling of interior points.
///
/// Accepted points satisfy `boundary_distance ≥ margin × scale`, where
/// `scale` is half the shorter side of the sampling box. Unbounded domains
/// need an explicit `bbox`.
pub fn sample_interior(
    d: &Domain,
    seed: u64,
    n: usize,
    margin: f64,
    bbox: Option<BBox>,
) -> Result<Vec<Point>> {
    if !(margin > 0.0 && margin < 1.0) {
        return Err(Error::param("margin", "must lie in (0, 1)"));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let bbox = match (bbox, d.bounding_box()) {
        (Some(b), Some(own)) => b.intersect(&own).unwrap_or(b),
        (Some(b), None) => b,
        (None, Some(own)) => own,
        (None, None) => {
            return Err(Error::param(
                "bbox",
                "a sampling box is required for unbounded domains",
            ))
        }
    };
    let min_dist = margin * 0.5 * bbox.width().min(bbox.height());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cap = 10_000 + 1_000 * n;
    let mut out = Vec::with_capacity(n);
    for _ in 0..cap {
        let p = Point::new(
            rng.gen_range(bbox.min.x..bbox.max.x),
            rng.gen_range(bbox.min.y..bbox.max.y),
        );
        if d.contains(p) && d.dist_unchecked(p) >= min_dist {
            out.push(p);
            if out.len() == n {
                return Ok(out);
            }
        }
    }
    Err(Error::SamplingFailure {
        attempts: cap,
        accepted: out.len(),
    })
}

/// Signed angle from `a` to `b` in `(-π, π]`.
pub fn signed_angle(a: Point, b: Point) -> f64 {
    let mut t = b.angle() - a.angle();
    while t <= -PI {
        t += 2.0 * PI;
    }
    while t > PI {
        t -= 2.0 * PI;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn contains_examples() {
        assert!(Domain::unit_disk().contains(Point::new(0.5, 0.5)));
        assert!(!Domain::unit_slit_disk().contains(Point::new(0.5, 0.0)));
        assert!(Domain::punctured_plane(vec![Point::ORIGIN]).contains(Point::new(3.0, 4.0)));
        assert!(!Domain::punctured_plane(vec![Point::ORIGIN]).contains(Point::ORIGIN));
        assert!(!Domain::unit_disk().contains(Point::new(1.0, 0.0)));
        assert!(!Domain::unit_slit_disk().contains(Point::ORIGIN));
        assert!(Domain::unit_slit_disk().contains(Point::new(-0.5, 0.0)));
        assert!(!Domain::unit_disk().contains(Point::new(f64::NAN, 0.0)));
    }

    #[test]
    fn boundary_distance_examples() {
        assert_eq!(
            Domain::unit_disk()
                .boundary_distance(Point::ORIGIN)
                .unwrap(),
            1.0
        );
        assert_abs_diff_eq!(
            Domain::unit_slit_disk()
                .boundary_distance(Point::new(0.5, 0.01))
                .unwrap(),
            0.01,
            epsilon = 1e-15
        );
        assert_eq!(
            Domain::punctured_plane(vec![Point::ORIGIN])
                .boundary_distance(Point::new(3.0, 4.0))
                .unwrap(),
            5.0
        );
        assert!(matches!(
            Domain::unit_disk().boundary_distance(Point::new(2.0, 0.0)),
            Err(Error::OutsideDomain(_))
        ));
    }

    #[test]
    fn slit_disk_near_tip_uses_tip_distance() {
        let d = Domain::unit_slit_disk();
        let p = Point::new(-0.3, 0.4);
        assert_abs_diff_eq!(d.boundary_distance(p).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn visibility_examples() {
        let s = Domain::unit_slit_disk();
        assert!(!s.segment_visible(Point::new(0.5, 0.1), Point::new(0.5, -0.1)));
        assert!(s.segment_visible(Point::new(-0.5, 0.1), Point::new(-0.5, -0.1)));
        let disk = Domain::unit_disk();
        assert!(disk.segment_visible(Point::new(-0.9, 0.0), Point::new(0.3, 0.9)));
        let pp = Domain::punctured_plane(vec![Point::ORIGIN]);
        assert!(!pp.segment_visible(Point::new(-1.0, 0.0), Point::new(1.0, 0.0)));
        assert!(pp.segment_visible(Point::new(-1.0, 0.1), Point::new(1.0, 0.1)));
    }

    #[test]
    fn polygon_with_slit_and_puncture() {
        let d = Domain::Polygon {
            vertices: vec![
                Point::new(0.0, 0.0),
                Point::new(4.0, 0.0),
                Point::new(4.0, 4.0),
                Point::new(0.0, 4.0),
            ],
            slits: vec![Segment::new(Point::new(1.0, 2.0), Point::new(3.0, 2.0))],
            punctures: vec![Point::new(2.0, 3.0)],
        };
        d.validate().unwrap();
        assert!(d.contains(Point::new(0.5, 0.5)));
        assert!(!d.contains(Point::new(2.0, 2.0)));
        assert!(!d.contains(Point::new(5.0, 2.0)));
        assert_abs_diff_eq!(
            d.boundary_distance(Point::new(2.0, 1.5)).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            d.boundary_distance(Point::new(2.0, 3.2)).unwrap(),
            0.2,
            epsilon = 1e-12
        );
        assert!(!d.segment_visible(Point::new(2.0, 1.0), Point::new(2.0, 2.5)));
        assert!(!d.segment_visible(Point::new(1.5, 3.0), Point::new(2.5, 3.0)));
        assert!(d.segment_visible(Point::new(0.5, 1.0), Point::new(0.5, 3.0)));
    }

    #[test]
    fn nonconvex_polygon_visibility() {
        // L-shape; the segment across the notch leaves the domain.
        let d = Domain::polygon(vec![
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(2.0, 1.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 2.0),
            Point::new(0.0, 2.0),
        ]);
        d.validate().unwrap();
        // through the reflex corner (1,1)
        assert!(!d.segment_visible(Point::new(1.5, 0.5), Point::new(0.5, 1.5)));
        assert!(!d.segment_visible(Point::new(1.8, 0.8), Point::new(0.8, 1.8)));
        assert!(d.segment_visible(Point::new(1.5, 0.5), Point::new(0.5, 0.5)));
    }

    #[test]
    fn invalid_documents_name_the_field() {
        let err = Domain::from_json(r#"{"variant":"disk","center":[0,0],"radius":-1}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("radius"), "{err}");
        let err = Domain::from_json(r#"{"variant":"disk","center":[0,0]}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("radius"), "{err}");
        let err = Domain::from_json(
            r#"{"variant":"punctured","base":{"variant":"disk","center":[0,0],"radius":1},"removed":[[3,0]]}"#,
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("removed"), "{err}");
        let bowtie = r#"{"variant":"polygon","vertices":[[0,0],[1,1],[1,0],[0,1]]}"#;
        assert!(Domain::from_json(bowtie).is_err());
    }

    #[test]
    fn json_shape() {
        let d = Domain::punctured(Domain::unit_slit_disk(), vec![Point::new(-0.5, 0.0)]);
        let s = d.to_json();
        assert!(s.contains("\"variant\": \"punctured\""));
        assert!(s.contains("\"variant\": \"slit_disk\""));
        assert_eq!(Domain::from_json(&s).unwrap(), d);
    }

    #[test]
    fn sampling() {
        let d = Domain::unit_disk();
        let pts = sample_interior(&d, 7, 3, 0.01, None).unwrap();
        assert_eq!(pts.len(), 3);
        assert!(pts.iter().all(|&p| d.contains(p)));
        assert!(pts[0] != pts[1] && pts[1] != pts[2]);
        assert_eq!(pts, sample_interior(&d, 7, 3, 0.01, None).unwrap());
        assert!(sample_interior(&d, 7, 0, 0.01, None).unwrap().is_empty());
        let s = Domain::unit_slit_disk();
        for p in sample_interior(&s, 3, 500, 0.001, None).unwrap() {
            assert!(s.slit().unwrap().distance_to(p) > 0.0);
        }
        assert!(matches!(
            sample_interior(&Domain::upper_half_plane(), 1, 3, 0.1, None),
            Err(Error::InvalidParameter { name: "bbox", .. })
        ));
        // margin too large for any point of the disk
        assert!(matches!(
            sample_interior(&d, 1, 3, 0.99999, None),
            Err(Error::SamplingFailure { .. })
        ));
    }

    #[test]
    fn inner_distance_goes_round_the_tip() {
        let d = Domain::unit_slit_disk();
        let a = Point::new(0.5, 0.01);
        let b = Point::new(0.5, -0.01);
        assert_abs_diff_eq!(
            d.inner_distance_lower(a, b),
            2.0 * (0.25f64 + 1e-4).sqrt(),
            epsilon = 1e-15
        );
        let c = Point::new(-0.5, 0.01);
        assert_eq!(d.inner_distance_lower(c, Point::new(-0.5, -0.01)), 0.02);
    }
}
