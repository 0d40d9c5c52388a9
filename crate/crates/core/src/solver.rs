//! Graph search plus path polishing for quasihyperbolic distance.
//!
//! Each refinement level builds a quadtree whose cell size tracks the local
//! boundary distance (coarsened away from the two endpoints), joins cell
//! centres to their nearest visible neighbours with edge weights equal to
//! the quasihyperbolic length of the straight edge, and runs Dijkstra. The
//! best route is then resampled at a fixed quasihyperbolic spacing and
//! polished with L-BFGS over the interior vertices. The reported upper bound
//! is always the composite-quadrature length of an admissible polyline.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rstar::primitives::GeomWithData;
use rstar::RTree;

use crate::error::{Error, Result};
use crate::geometry::{polygon_edges, BBox, Domain, Point};
use crate::metrics::{edge_qh_length, GaussLegendre, MetricResult, PathPolyline, SolverConfig};

const MAX_NODES: usize = 60_000;
const LBFGS_MEMORY: usize = 8;

#[derive(Debug, Clone)]
pub(crate) struct Candidate {
    pub length: f64,
    pub path: Vec<Point>,
}

pub(crate) struct QhSolver<'a> {
    d: &'a Domain,
    x: Point,
    y: Point,
    cfg: &'a SolverConfig,
    gl: GaussLegendre,
    convex: bool,
    holes: bool,
    bbox: BBox,
    best: Option<Candidate>,
    next_level: usize,
}

impl<'a> QhSolver<'a> {
    pub fn new(d: &'a Domain, x: Point, y: Point, cfg: &'a SolverConfig) -> Result<Self> {
        let dx = d.boundary_distance(x)?;
        let dy = d.boundary_distance(y)?;
        let around = {
            let mid = x.lerp(y, 0.5);
            BBox::around(mid, x.dist(y) + 2.0 * dx.max(dy))
        };
        let bbox = match (d.bounding_box(), cfg.bbox) {
            (Some(b), _) => b.expand(1e-9 * b.width().max(b.height())),
            (None, Some(b)) => b.union_point(x).union_point(y),
            (None, None) => around,
        };
        let mut solver = QhSolver {
            d,
            x,
            y,
            cfg,
            gl: GaussLegendre::new(cfg.quadrature_points_per_edge),
            convex: is_convex(d),
            holes: has_holes(d),
            bbox,
            best: None,
            next_level: 0,
        };
        if d.segment_visible(x, y) {
            let length = edge_qh_length(d, x, y, &solver.gl);
            solver.best = Some(Candidate {
                length,
                path: vec![x, y],
            });
        }
        Ok(solver)
    }

    pub fn best(&self) -> Option<&Candidate> {
        self.best.as_ref()
    }

    pub fn level(&self) -> usize {
        self.next_level.saturating_sub(1)
    }

    /// Runs the refinement loop and packages the bracket.
    pub fn run(&mut self, lower: f64) -> Result<MetricResult> {
        let tol = self.cfg.relative_tolerance;
        let tight = |s: &Self| {
            s.best
                .as_ref()
                .is_some_and(|b| b.length <= lower * (1.0 + tol))
        };
        let mut prev = self.best.as_ref().map_or(f64::INFINITY, |b| b.length);
        while !tight(self) && self.next_level <= self.cfg.max_refinements {
            let upper = self.step();
            if self.next_level >= 2 && prev - upper <= tol * upper {
                break;
            }
            prev = upper;
        }
        let best = self.best.clone().ok_or(Error::NoPath)?;
        Ok(MetricResult {
            lower: lower.min(best.length),
            upper: best.length,
            path: PathPolyline::new(best.path),
            refinement_level: self.level(),
            exact: false,
        })
    }

    /// Runs the next refinement level; returns the best upper bound so far.
    pub fn step(&mut self) -> f64 {
        let level = self.next_level;
        self.next_level += 1;
        let spacing = 0.3 * 0.5f64.powf(level as f64 / 2.0);
        let mut cands = Vec::new();
        if let Some(b) = &self.best {
            cands.push(self.polish(b.path.clone(), spacing));
        }
        // Finer graphs do not reduce the direction bias of the neighbour
        // stencil, they only resolve narrow passages between holes.
        let rebuild = level == 0 || (self.holes && level.is_multiple_of(2));
        if self.best.is_none() || (!self.convex && rebuild) {
            let beta = 16.0 / self.cfg.initial_resolution as f64 * 0.5f64.powf(level as f64 / 2.0);
            let kappa = 4.0 * 2f64.powf(level as f64 / 2.0);
            if let Some(route) = self.graph_route(beta, kappa) {
                let raw = self.path_length(&route);
                let worth = self.best.as_ref().is_none_or(|b| raw < 1.2 * b.length);
                if worth {
                    cands.push(self.polish(route, spacing));
                }
            }
        }
        for c in cands {
            if self.best.as_ref().is_none_or(|b| c.length < b.length) {
                self.best = Some(c);
            }
        }
        self.best.as_ref().map_or(f64::INFINITY, |b| b.length)
    }

    fn path_length(&self, path: &[Point]) -> f64 {
        path.windows(2)
            .map(|w| edge_qh_length(self.d, w[0], w[1], &self.gl))
            .sum()
    }

    fn graph_route(&self, beta: f64, kappa: f64) -> Option<Vec<Point>> {
        let nodes = self.build_nodes(beta, kappa);
        let dist: Vec<f64> = nodes.iter().map(|&p| self.d.dist_unchecked(p)).collect();
        let tree = RTree::bulk_load(
            nodes
                .iter()
                .enumerate()
                .map(|(i, p)| GeomWithData::new([p.x, p.y], i))
                .collect(),
        );
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nodes.len()];
        for (i, &p) in nodes.iter().enumerate() {
            let k = if i < 2 {
                2 * self.cfg.knn_edges
            } else {
                self.cfg.knn_edges
            };
            for nb in tree.nearest_neighbor_iter([p.x, p.y]).skip(1).take(k) {
                let j = nb.data;
                let q = nodes[j];
                if !self.d.segment_visible(p, q) {
                    continue;
                }
                let dm = self.d.dist_unchecked(p.lerp(q, 0.5));
                if !(dm > 0.0) {
                    continue;
                }
                let w = p.dist(q) * (1.0 / dist[i] + 4.0 / dm + 1.0 / dist[j]) / 6.0;
                adj[i].push((j, w));
                adj[j].push((i, w));
            }
        }
        let prev = dijkstra(&adj, 0, 1)?;
        let mut route = vec![nodes[1]];
        let mut at = 1;
        while at != 0 {
            at = prev[at];
            route.push(nodes[at]);
        }
        route.reverse();
        Some(route)
    }

    /// Graph nodes: `x`, `y`, then centres of the adapted quadtree leaves.
    fn build_nodes(&self, beta: f64, kappa: f64) -> Vec<Point> {
        let side = self.bbox.width().max(self.bbox.height());
        let c = self.bbox.center();
        let root = side / 4.0;
        let min_cell = 1e-9 * side;
        let mut queue = VecDeque::new();
        for i in 0..4 {
            for j in 0..4 {
                let center = c + Point::new((i as f64 - 1.5) * root, (j as f64 - 1.5) * root);
                queue.push_back((center, root));
            }
        }
        let mut nodes = vec![self.x, self.y];
        while let Some((center, size)) = queue.pop_front() {
            let raw = self.d.dist_unchecked(center);
            let inside = self.d.contains(center);
            if !inside && raw > size * std::f64::consts::FRAC_1_SQRT_2 {
                continue;
            }
            let floor = center.dist(self.x).min(center.dist(self.y)) / kappa;
            let target = beta * raw.max(floor);
            if size > target && size > min_cell && nodes.len() + queue.len() < MAX_NODES {
                let q = size / 4.0;
                for (sx, sy) in [(-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0), (1.0, 1.0)] {
                    queue.push_back((center + Point::new(sx * q, sy * q), size / 2.0));
                }
            } else if inside && center != self.x && center != self.y {
                nodes.push(center);
            }
        }
        nodes
    }

    /// Resample then L-BFGS, three rounds.
    fn polish(&self, mut path: Vec<Point>, spacing: f64) -> Candidate {
        let mut length = self.path_length(&path);
        for _ in 0..3 {
            let resampled = self.resample(&path, spacing);
            let polished = self.lbfgs(resampled);
            let l = self.path_length(&polished);
            if l < length {
                length = l;
                path = polished;
            } else {
                break;
            }
        }
        Candidate { length, path }
    }

    /// Places vertices at roughly equal quasihyperbolic spacing along `path`,
    /// falling back to the original corners wherever a chord is not visible.
    fn resample(&self, path: &[Point], spacing: f64) -> Vec<Point> {
        let lens: Vec<f64> = path
            .windows(2)
            .map(|w| edge_qh_length(self.d, w[0], w[1], &self.gl))
            .collect();
        let total: f64 = lens.iter().sum();
        let n = ((total / spacing).ceil() as usize).max(1);
        // (point, index of the edge it lies on)
        let mut marks = Vec::with_capacity(n + 1);
        let mut edge = 0;
        let mut before = 0.0;
        for i in 1..n {
            let s = total * i as f64 / n as f64;
            while edge + 1 < lens.len() && before + lens[edge] < s {
                before += lens[edge];
                edge += 1;
            }
            let t = if lens[edge] > 0.0 {
                ((s - before) / lens[edge]).clamp(0.0, 1.0)
            } else {
                0.0
            };
            marks.push((path[edge].lerp(path[edge + 1], t), edge));
        }
        marks.push((*path.last().unwrap(), path.len() - 2));

        let mut out = vec![path[0]];
        let mut last_edge = 0;
        for (p, e) in marks {
            let from = *out.last().unwrap();
            if !self.d.segment_visible(from, p) {
                for &v in &path[last_edge + 1..=e] {
                    if *out.last().unwrap() != v {
                        out.push(v);
                    }
                }
            }
            if *out.last().unwrap() != p {
                out.push(p);
            }
            last_edge = e;
        }
        out
    }

    fn feasible(&self, verts: &[Point]) -> bool {
        verts[1..verts.len() - 1]
            .iter()
            .all(|&p| self.d.contains(p))
            && verts
                .windows(2)
                .all(|w| w[0] != w[1] && self.d.segment_visible(w[0], w[1]))
    }

    /// Smooth surrogate of the path length with fixed per-edge panel counts, and its gradient.
    fn objective(&self, verts: &[Point], panels: &[usize], grad: &mut [Point]) -> f64 {
        grad.iter_mut().for_each(|g| *g = Point::ORIGIN);
        let mut f = 0.0;
        for (i, w) in verts.windows(2).enumerate() {
            let (a, b) = (w[0], w[1]);
            let ab = b - a;
            let len = ab.norm();
            if len == 0.0 {
                continue;
            }
            let m = panels[i] as f64;
            let mut s = 0.0;
            let mut ga = Point::ORIGIN;
            let mut gb = Point::ORIGIN;
            for k in 0..panels[i] {
                for (t, wt) in self.gl.nodes.iter().zip(&self.gl.weights) {
                    let tau = (k as f64 + t) / m;
                    let z = a + ab * tau;
                    let nb = self.d.nearest_boundary(z);
                    if !(nb.dist > 0.0) {
                        return f64::INFINITY;
                    }
                    let g = match self.d {
                        Domain::HalfPlane { normal, .. } => *normal,
                        _ => (z - nb.point) * (1.0 / nb.dist),
                    };
                    let wm = wt / m;
                    s += wm / nb.dist;
                    let c = -wm / (nb.dist * nb.dist);
                    ga = ga + g * (c * (1.0 - tau));
                    gb = gb + g * (c * tau);
                }
            }
            let e = ab * (1.0 / len);
            f += len * s;
            grad[i] = grad[i] + ga * len - e * s;
            grad[i + 1] = grad[i + 1] + gb * len + e * s;
        }
        f
    }

    /// L-BFGS on the interior vertices in coordinates scaled by the boundary distance.
    fn lbfgs(&self, verts: Vec<Point>) -> Vec<Point> {
        let m = verts.len();
        if m < 3 {
            return verts;
        }
        let scale: Vec<f64> = verts.iter().map(|&p| self.d.dist_unchecked(p)).collect();
        let panels: Vec<usize> = verts
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let h = 0.5 * scale[i].min(scale[i + 1]);
                ((w[0].dist(w[1]) / h).ceil() as usize).clamp(1, 64)
            })
            .collect();
        let dim = 2 * (m - 2);
        let to_verts = |u: &[f64]| -> Vec<Point> {
            let mut v = verts.clone();
            for i in 1..m - 1 {
                v[i] = verts[i] + Point::new(u[2 * (i - 1)], u[2 * (i - 1) + 1]) * scale[i];
            }
            v
        };
        let mut gbuf = vec![Point::ORIGIN; m];
        let mut eval = |u: &[f64], g: &mut [f64]| -> f64 {
            let v = to_verts(u);
            let f = self.objective(&v, &panels, &mut gbuf);
            for i in 1..m - 1 {
                g[2 * (i - 1)] = gbuf[i].x * scale[i];
                g[2 * (i - 1) + 1] = gbuf[i].y * scale[i];
            }
            f
        };

        let mut u = vec![0.0; dim];
        let mut g = vec![0.0; dim];
        let mut f = eval(&u, &mut g);
        if !f.is_finite() {
            return verts;
        }
        let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
        let mut stall = 0;
        let max_iter = 60 + 4 * m;
        for _ in 0..max_iter {
            let mut dir = two_loop(&g, &hist);
            let mut slope = dot(&g, &dir);
            if !(slope < 0.0) {
                dir = g.iter().map(|v| -v).collect();
                slope = -dot(&g, &g);
                hist.clear();
            }
            // cap the trial move at half the local boundary distance
            let max_move = dir.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let mut alpha = if max_move > 0.5 { 0.5 / max_move } else { 1.0 };
            let mut gn = vec![0.0; dim];
            let mut accepted = None;
            for _ in 0..40 {
                let un: Vec<f64> = u.iter().zip(&dir).map(|(a, b)| a + alpha * b).collect();
                let fn_ = eval(&un, &mut gn);
                if fn_.is_finite()
                    && fn_ <= f + 1e-4 * alpha * slope
                    && self.feasible(&to_verts(&un))
                {
                    accepted = Some((un, fn_));
                    break;
                }
                alpha *= 0.5;
            }
            let Some((un, fn_)) = accepted else { break };
            let s: Vec<f64> = un.iter().zip(&u).map(|(a, b)| a - b).collect();
            let yv: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &yv);
            if sy > 1e-14 {
                hist.push_back((s, yv, 1.0 / sy));
                if hist.len() > LBFGS_MEMORY {
                    hist.pop_front();
                }
            }
            let decrease = f - fn_;
            u = un;
            g = gn;
            f = fn_;
            if decrease <= 1e-11 * f {
                stall += 1;
                if stall >= 2 {
                    break;
                }
            } else {
                stall = 0;
            }
        }
        to_verts(&u)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn two_loop(g: &[f64], hist: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(hist.len());
    for (s, y, rho) in hist.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = hist.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in hist.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

#[derive(PartialEq)]
struct State(f64, usize);

impl Eq for State {}

impl Ord for State {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then_with(|| o.1.cmp(&self.1))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Predecessor array of a shortest path from `src` to `dst`, if reachable.
fn dijkstra(adj: &[Vec<(usize, f64)>], src: usize, dst: usize) -> Option<Vec<usize>> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    let mut prev = vec![usize::MAX; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(State(0.0, src));
    while let Some(State(du, u)) = heap.pop() {
        if u == dst {
            return Some(prev);
        }
        if du > dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            let nd = du + w;
            if nd < dist[v] {
                dist[v] = nd;
                prev[v] = u;
                heap.push(State(nd, v));
            }
        }
    }
    None
}

/// Punctures or interior slits make the domain multiply connected.
fn has_holes(d: &Domain) -> bool {
    match d {
        Domain::PuncturedPlane { .. } => true,
        Domain::Polygon {
            slits, punctures, ..
        } => !slits.is_empty() || !punctures.is_empty(),
        Domain::Punctured { base, removed } => !removed.is_empty() || has_holes(base),
        _ => false,
    }
}

/// Convex and without interior holes: the straight segment's homotopy class is the only one.
fn is_convex(d: &Domain) -> bool {
    match d.canonical() {
        Domain::Disk { .. } | Domain::HalfPlane { .. } => true,
        Domain::Polygon {
            vertices,
            slits,
            punctures,
        } if slits.is_empty() && punctures.is_empty() => {
            let edges = polygon_edges(vertices);
            let n = edges.len();
            let turns: Vec<f64> = (0..n)
                .map(|i| {
                    (edges[i].b - edges[i].a).cross(edges[(i + 1) % n].b - edges[(i + 1) % n].a)
                })
                .collect();
            turns.iter().all(|&t| t >= 0.0) || turns.iter().all(|&t| t <= 0.0)
        }
        _ => false,
    }
}
