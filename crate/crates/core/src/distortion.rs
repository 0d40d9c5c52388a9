//! Empirical distortion of `j` and `k` under maps, uniformity constants, the
//! ball estimate for `k`, and the constructive constants of the growth
//! function results.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesics::ChainResult;
use crate::geometry::{sample_interior, Domain, Point};
use crate::maps::MapSpec;
use crate::metrics::{j_distance, qh_distance, PathPolyline, SolverConfig};

/// Nondecreasing piecewise-linear function on `[0, ∞)`, extended past the
/// last knot with the slope of the last segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Knots", into = "Knots")]
pub struct MonotoneTable {
    knots: Vec<(f64, f64)>,
}

#[derive(Serialize, Deserialize)]
struct Knots {
    knots: Vec<(f64, f64)>,
}

impl TryFrom<Knots> for MonotoneTable {
    type Error = Error;

    fn try_from(k: Knots) -> Result<Self> {
        MonotoneTable::new(k.knots)
    }
}

impl From<MonotoneTable> for Knots {
    fn from(t: MonotoneTable) -> Self {
        Knots { knots: t.knots }
    }
}

impl MonotoneTable {
    /// Knots must start at `t = 0`, have strictly increasing abscissae and
    /// nondecreasing nonnegative values.
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        let bad = |reason: &str| Error::param("table", reason);
        if knots.len() < 2 {
            return Err(bad("needs at least two knots"));
        }
        if knots.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(bad("knots must be finite"));
        }
        if knots[0].0 != 0.0 || knots[0].1 < 0.0 {
            return Err(bad("first knot must be at t = 0 with a nonnegative value"));
        }
        for w in knots.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(bad("abscissae must be strictly increasing"));
            }
            if w[1].1 < w[0].1 {
                return Err(bad("values must be nondecreasing"));
            }
        }
        Ok(MonotoneTable { knots })
    }

    /// `t ↦ slope · t`.
    pub fn linear(slope: f64) -> Result<Self> {
        MonotoneTable::new(vec![(0.0, 0.0), (1.0, slope)])
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn tail_slope(&self) -> f64 {
        let n = self.knots.len();
        let (a, b) = (self.knots[n - 2], self.knots[n - 1]);
        (b.1 - a.1) / (b.0 - a.0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let k = &self.knots;
        if t <= 0.0 {
            return k[0].1;
        }
        let i = k.partition_point(|&(s, _)| s <= t);
        if i >= k.len() {
            let last = k[k.len() - 1];
            return last.1 + self.tail_slope() * (t - last.0);
        }
        let (a, b) = (k[i - 1], k[i]);
        a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0)
    }

    /// Generalized inverse `inf{t ≥ 0 : φ(t) ≥ s}`; infinite if never reached.
    pub fn inverse(&self, s: f64) -> f64 {
        let k = &self.knots;
        if s <= k[0].1 {
            return 0.0;
        }
        for w in k.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b.1 >= s {
                return a.0 + (b.0 - a.0) * (s - a.1) / (b.1 - a.1);
            }
        }
        let last = k[k.len() - 1];
        let slope = self.tail_slope();
        if slope > 0.0 {
            last.0 + (s - last.1) / slope
        } else {
            f64::INFINITY
        }
    }

    /// Checks the growth-function requirements `φ(0) = 0` and `φ(t) ≥ t`.
    pub fn validate_growth(&self) -> Result<()> {
        if self.knots[0].1 != 0.0 {
            return Err(Error::param("table", "a growth function vanishes at 0"));
        }
        if self.knots.iter().any(|&(t, v)| v < t) || self.tail_slope() < 1.0 {
            return Err(Error::param(
                "table",
                "a growth function satisfies φ(t) ≥ t",
            ));
        }
        Ok(())
    }
}

/// Isotonic (pool-adjacent-violators) fit of `points`, shifted up until it
/// dominates every point, raised to the identity and anchored at the origin.
pub fn fit_envelope(points: &[(f64, f64)]) -> MonotoneTable {
    let mut pts: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|(t, v)| t.is_finite() && v.is_finite() && *t > 0.0)
        .collect();
    if pts.is_empty() {
        return MonotoneTable::linear(1.0).expect("identity is valid");
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    // blocks of (sum, count)
    let mut blocks: Vec<(f64, usize)> = Vec::new();
    for &(_, v) in &pts {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (s1, n1) = blocks[blocks.len() - 1];
            let (s0, n0) = blocks[blocks.len() - 2];
            if s0 / n0 as f64 <= s1 / n1 as f64 {
                break;
            }
            blocks.pop();
            *blocks.last_mut().unwrap() = (s0 + s1, n0 + n1);
        }
    }
    let fitted: Vec<f64> = blocks
        .iter()
        .flat_map(|&(s, n)| std::iter::repeat_n(s / n as f64, n))
        .collect();
    let shift = pts
        .iter()
        .zip(&fitted)
        .map(|(p, f)| p.1 - f)
        .fold(0.0, f64::max);
    let mut knots: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    for (p, f) in pts.iter().zip(&fitted) {
        let v = (f + shift).max(p.0);
        match knots.last_mut() {
            Some(last) if last.0 == p.0 => last.1 = last.1.max(v),
            _ => knots.push((p.0, v)),
        }
    }
    let n = knots.len();
    let (a, b) = (knots[n - 2], knots[n - 1]);
    let slope = ((b.1 - a.1) / (b.0 - a.0)).max(1.0);
    knots.push((2.0 * b.0, b.1 + slope * b.0));
    MonotoneTable::new(knots).expect("envelope knots are monotone")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lower: f64,
    pub upper: f64,
}

impl Bracket {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

/// One sampled pair with both metrics on the source and image side.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairSample {
    pub x: Point,
    pub y: Point,
    pub fx: Point,
    pub fy: Point,
    pub j_source: f64,
    pub j_image: f64,
    pub k_source: Bracket,
    pub k_image: Bracket,
}

/// `(source, target)` values for one metric pair with their fitted envelope.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Profile {
    pub pairs: Vec<(f64, f64)>,
    pub envelope: MonotoneTable,
    /// Largest `target / source` over pairs with `source > 0`.
    pub sup_ratio: f64,
}

impl Profile {
    pub fn from_pairs(pairs: Vec<(f64, f64)>) -> Self {
        let envelope = fit_envelope(&pairs);
        let sup_ratio = pairs
            .iter()
            .filter(|p| p.0 > 0.0)
            .map(|p| p.1 / p.0)
            .fold(f64::NEG_INFINITY, f64::max);
        Profile {
            pairs,
            envelope,
            sup_ratio,
        }
    }

    /// Indices of pairs with `target > bound(source) · (1 + margin)`.
    pub fn violations(&self, bound: &MonotoneTable, margin: f64) -> Vec<usize> {
        self.pairs
            .iter()
            .enumerate()
            .filter(|(_, p)| p.1 > bound.eval(p.0) * (1.0 + margin))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Distortion of `k` (bracket midpoints) and `j` under a map, in both directions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistortionReport {
    pub samples: Vec<PairSample>,
    /// Pairs dropped because the solver found no path.
    pub skipped: usize,
    pub k_forward: Profile,
    pub k_inverse: Profile,
    pub j_forward: Profile,
    pub j_inverse: Profile,
    pub qh_constant: QhConstantEstimate,
}

/// `max(k′/k, k/k′)` over the samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QhConstantEstimate {
    /// From bracket midpoints.
    pub estimate: f64,
    /// Smallest value consistent with every bracket.
    pub min_consistent: f64,
    /// Largest value consistent with every bracket.
    pub max_consistent: f64,
    pub worst_index: Option<usize>,
}

impl QhConstantEstimate {
    pub fn from_samples(samples: &[PairSample]) -> Self {
        let mut est = QhConstantEstimate {
            estimate: 1.0,
            min_consistent: 1.0,
            max_consistent: 1.0,
            worst_index: None,
        };
        for (i, s) in samples.iter().enumerate() {
            let (k, kp) = (s.k_source, s.k_image);
            if !(k.lower > 0.0 && kp.lower > 0.0) {
                continue;
            }
            let r = kp.midpoint() / k.midpoint();
            let m = r.max(1.0 / r);
            if m > est.estimate {
                est.estimate = m;
                est.worst_index = Some(i);
            }
            // ratio k′/k ranges over [lo, hi]
            let (lo, hi) = (kp.lower / k.upper, kp.upper / k.lower);
            let least = if lo > 1.0 {
                lo
            } else if hi < 1.0 {
                1.0 / hi
            } else {
                1.0
            };
            est.min_consistent = est.min_consistent.max(least);
            est.max_consistent = est.max_consistent.max(hi).max(1.0 / lo);
        }
        est
    }
}

/// Samples `n` pairs stratified over the range of `j_D`: a pool of near pairs
/// (separation a random fraction of the boundary distance) and far pairs is
/// sorted by `j` and every third-quantile pair kept.
pub fn sample_pairs(d: &Domain, n: usize, seed: u64) -> Result<Vec<(Point, Point)>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let pool = 3 * n;
    let bbox = Some(d.sampling_box());
    let xs = sample_interior(d, seed, pool, 1e-3, bbox)?;
    let ys = sample_interior(d, seed.wrapping_add(0x9e37_79b9), pool, 1e-3, bbox)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x005e_ed0f_7a1f);
    let mut cands: Vec<(f64, Point, Point)> = Vec::with_capacity(pool);
    for (&x, &far) in xs.iter().zip(&ys) {
        let mut y = far;
        if rng.gen_bool(0.5) {
            let dx = d.boundary_distance(x)?;
            let mut rho = dx * 10f64.powf(rng.gen_range(-2.0..0.3));
            let dir = Point::from_polar(1.0, rng.gen_range(-PI..PI));
            for _ in 0..20 {
                let cand = x + dir * rho;
                if d.contains(cand) {
                    y = cand;
                    break;
                }
                rho *= 0.5;
            }
        }
        if x != y {
            cands.push((j_distance(d, x, y)?, x, y));
        }
    }
    cands.sort_by(|a, b| a.0.total_cmp(&b.0));
    let m = cands.len();
    Ok((0..n.min(m))
        .map(|i| {
            let c = cands[((2 * i + 1) * m) / (2 * n.min(m))];
            (c.1, c.2)
        })
        .collect())
}

/// Pairs of equal modulus about each puncture, at angles up to and including π.
pub fn targeted_pairs(d: &Domain, n: usize, seed: u64) -> Vec<(Point, Point)> {
    let punctures: Vec<Point> = match d.canonical() {
        Domain::PuncturedPlane { punctures } => punctures.clone(),
        Domain::Punctured { removed, .. } => removed.clone(),
        _ => return Vec::new(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7a67_e7ed);
    let mut out = Vec::new();
    for q in punctures {
        let rmax = puncture_clearance(d, q).min(1.0);
        for i in 0..n {
            let r = rmax * rng.gen_range(0.05..0.5);
            let base = rng.gen_range(-PI..PI);
            let gap = if i == 0 {
                PI
            } else {
                PI - rng.gen_range(0.0..0.5)
            };
            let (x, y) = (
                q + Point::from_polar(r, base),
                q + Point::from_polar(r, base + gap),
            );
            if d.contains(x) && d.contains(y) {
                out.push((x, y));
            }
        }
    }
    out
}

/// Distance from the puncture `q` to the rest of the boundary.
fn puncture_clearance(d: &Domain, q: Point) -> f64 {
    let without = match d.canonical() {
        Domain::PuncturedPlane { punctures } => {
            let rest: Vec<Point> = punctures.iter().copied().filter(|&p| p != q).collect();
            if rest.is_empty() {
                return f64::INFINITY;
            }
            Domain::punctured_plane(rest)
        }
        Domain::Punctured { base, removed } => Domain::punctured(
            (**base).clone(),
            removed.iter().copied().filter(|&p| p != q).collect(),
        ),
        _ => return f64::INFINITY,
    };
    without.dist_unchecked(q)
}

fn bracket(d: &Domain, x: Point, y: Point, cfg: &SolverConfig) -> Result<Option<Bracket>> {
    match qh_distance(d, x, y, cfg) {
        Ok(r) => Ok(Some(Bracket {
            lower: r.lower,
            upper: r.upper,
        })),
        Err(Error::NoPath) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Profiles `f` on `n` stratified pairs of `d`.
pub fn semisolidity_profile(
    f: &MapSpec,
    d: &Domain,
    n: usize,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<DistortionReport> {
    let pairs = sample_pairs(d, n, seed)?;
    semisolidity_profile_on_pairs(f, d, &pairs, cfg)
}

pub fn semisolidity_profile_on_pairs(
    f: &MapSpec,
    d: &Domain,
    pairs: &[(Point, Point)],
    cfg: &SolverConfig,
) -> Result<DistortionReport> {
    let image = f.image_domain(d)?;
    let mut samples = Vec::with_capacity(pairs.len());
    let mut skipped = 0;
    for &(x, y) in pairs {
        let (fx, fy) = (f.apply(x)?, f.apply(y)?);
        if !(image.contains(fx) && image.contains(fy)) {
            skipped += 1;
            continue;
        }
        let (Some(k_source), Some(k_image)) =
            (bracket(d, x, y, cfg)?, bracket(&image, fx, fy, cfg)?)
        else {
            skipped += 1;
            continue;
        };
        samples.push(PairSample {
            x,
            y,
            fx,
            fy,
            j_source: j_distance(d, x, y)?,
            j_image: j_distance(&image, fx, fy)?,
            k_source,
            k_image,
        });
    }
    let profile = |g: &dyn Fn(&PairSample) -> (f64, f64)| {
        Profile::from_pairs(samples.iter().map(g).collect())
    };
    Ok(DistortionReport {
        k_forward: profile(&|s| (s.k_source.midpoint(), s.k_image.midpoint())),
        k_inverse: profile(&|s| (s.k_image.midpoint(), s.k_source.midpoint())),
        j_forward: profile(&|s| (s.j_source, s.j_image)),
        j_inverse: profile(&|s| (s.j_image, s.j_source)),
        qh_constant: QhConstantEstimate::from_samples(&samples),
        samples,
        skipped,
    })
}

/// Estimates the QH constant of `f` on `d`.
pub fn qh_constant_estimate(
    f: &MapSpec,
    d: &Domain,
    n: usize,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<QhConstantEstimate> {
    Ok(semisolidity_profile(f, d, n, seed, cfg)?.qh_constant)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `j′ > φ(j)`.
    Upper,
    /// `j > φ(j′)`, the left inequality `φ⁻¹(j) ≤ j′`.
    Lower,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JViolation {
    pub index: usize,
    pub x: Point,
    pub y: Point,
    pub j_source: f64,
    pub j_image: f64,
    pub side: Side,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JInequalityReport {
    pub checked: usize,
    pub violations: Vec<JViolation>,
}

impl JInequalityReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `φ⁻¹(j_D(x,y)) ≤ j_{D′}(f(x),f(y)) ≤ φ(j_D(x,y))` on `n` sampled
/// pairs, each side with relative `margin`.
pub fn j_inequality_check(
    f: &MapSpec,
    d: &Domain,
    phi: &MonotoneTable,
    n: usize,
    seed: u64,
    margin: f64,
) -> Result<JInequalityReport> {
    let pairs = sample_pairs(d, n, seed)?;
    j_inequality_check_pairs(f, d, phi, &pairs, margin)
}

pub fn j_inequality_check_pairs(
    f: &MapSpec,
    d: &Domain,
    phi: &MonotoneTable,
    pairs: &[(Point, Point)],
    margin: f64,
) -> Result<JInequalityReport> {
    phi.validate_growth()?;
    if !(margin >= 0.0) {
        return Err(Error::param("margin", "must be nonnegative"));
    }
    let image = f.image_domain(d)?;
    let mut violations = Vec::new();
    for (index, &(x, y)) in pairs.iter().enumerate() {
        let j_source = j_distance(d, x, y)?;
        let j_image = j_distance(&image, f.apply(x)?, f.apply(y)?)?;
        let side = if j_image > phi.eval(j_source) * (1.0 + margin) {
            Some(Side::Upper)
        } else if j_source > phi.eval(j_image) * (1.0 + margin) {
            Some(Side::Lower)
        } else {
            None
        };
        if let Some(side) = side {
            violations.push(JViolation {
                index,
                x,
                y,
                j_source,
                j_image,
                side,
            });
        }
    }
    Ok(JInequalityReport {
        checked: pairs.len(),
        violations,
    })
}

/// Smallest `c′` with `k_D ≤ c′ j_D` on the samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniformityEstimate {
    /// `max k.upper / j`.
    pub c_prime: f64,
    /// `max k.lower / j`, a certified lower bound for the domain's constant.
    pub c_prime_lower: f64,
    pub x: Point,
    pub y: Point,
    pub j: f64,
    pub k: Bracket,
    pub pairs: usize,
    pub skipped: usize,
}

/// Uniformity constant from stratified pairs plus equal-modulus pairs around punctures.
pub fn uniformity_constant(
    d: &Domain,
    n: usize,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<UniformityEstimate> {
    let mut pairs = sample_pairs(d, n, seed)?;
    pairs.extend(targeted_pairs(d, n.div_ceil(4), seed));
    uniformity_constant_on_pairs(d, &pairs, cfg)
}

pub fn uniformity_constant_on_pairs(
    d: &Domain,
    pairs: &[(Point, Point)],
    cfg: &SolverConfig,
) -> Result<UniformityEstimate> {
    let mut best: Option<UniformityEstimate> = None;
    let mut lower: f64 = 0.0;
    let mut skipped = 0;
    for &(x, y) in pairs {
        let j = j_distance(d, x, y)?;
        if !(j > 0.0) {
            continue;
        }
        let Some(k) = bracket(d, x, y, cfg)? else {
            skipped += 1;
            continue;
        };
        lower = lower.max(k.lower / j);
        let c = k.upper / j;
        if best.as_ref().is_none_or(|b| c > b.c_prime) {
            best = Some(UniformityEstimate {
                c_prime: c,
                c_prime_lower: 0.0,
                x,
                y,
                j,
                k,
                pairs: 0,
                skipped: 0,
            });
        }
    }
    let mut best = best.ok_or_else(|| Error::param("pairs", "no pair with positive j"))?;
    best.c_prime_lower = lower;
    best.pairs = pairs.len();
    best.skipped = skipped;
    Ok(best)
}

/// Worst constants of the two uniform-domain conditions along a path.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CigarReport {
    /// `ℓ(α) / |z₁ − z₂|`.
    pub length_ratio: f64,
    /// `max_z min(ℓ(α[z₁,z]), ℓ(α[z,z₂])) / d_D(z)`.
    pub cigar_ratio: f64,
    pub pass: bool,
}

pub fn cigar_check(d: &Domain, path: &PathPolyline, c: f64) -> Result<CigarReport> {
    path.validate(d)?;
    const PER_EDGE: usize = 256;
    let total = path.length();
    let chord = path.start().dist(path.end());
    let length_ratio = if total == 0.0 { 1.0 } else { total / chord };
    let mut cigar: f64 = 0.0;
    let mut before = 0.0;
    for (a, b) in path.edges() {
        let len = a.dist(b);
        for i in 0..=PER_EDGE {
            let t = i as f64 / PER_EDGE as f64;
            let s = before + t * len;
            let arm = s.min(total - s).max(0.0);
            cigar = cigar.max(arm / d.dist_unchecked(a.lerp(b, t)));
        }
        before += len;
    }
    Ok(CigarReport {
        length_ratio,
        cigar_ratio: cigar,
        pass: length_ratio <= c && cigar <= c,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BallEstimateReport {
    pub checked: usize,
    /// Pairs whose solver lower bound exceeds the estimate.
    pub hard_violations: usize,
    /// Pairs whose upper bound exceeds the estimate by more than 2%.
    pub soft_violations: usize,
    /// Largest `k.upper / estimate`.
    pub worst_ratio: f64,
    pub worst_pair: Option<(Point, Point)>,
}

impl BallEstimateReport {
    pub fn pass(&self) -> bool {
        self.hard_violations == 0 && self.soft_violations == 0
    }
}

/// `log(1 + |x − y| / d_D(x)) / (1 − s)`.
pub fn ball_estimate(d: &Domain, x: Point, y: Point, s: f64) -> Result<f64> {
    Ok((x.dist(y) / d.boundary_distance(x)?).ln_1p() / (1.0 - s))
}

/// Samples `x` in `d` and `y` uniformly in `𝔹(x, s·d_D(x))`, and compares
/// `k` in the ball `𝔹(x, d_D(x))` with [`ball_estimate`].
pub fn lemma34_check(
    d: &Domain,
    n: usize,
    seed: u64,
    s: f64,
    cfg: &SolverConfig,
) -> Result<BallEstimateReport> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::param("s", "must lie in (0, 1)"));
    }
    let xs = sample_interior(d, seed, n, 1e-3, Some(d.sampling_box()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xba11);
    let mut pairs = Vec::with_capacity(n);
    for x in xs {
        let r = s * d.boundary_distance(x)? * rng.gen::<f64>().sqrt();
        pairs.push((x, x + Point::from_polar(r, rng.gen_range(-PI..PI))));
    }
    lemma34_check_pairs(d, &pairs, s, cfg)
}

pub fn lemma34_check_pairs(
    d: &Domain,
    pairs: &[(Point, Point)],
    s: f64,
    cfg: &SolverConfig,
) -> Result<BallEstimateReport> {
    let mut rep = BallEstimateReport {
        checked: 0,
        hard_violations: 0,
        soft_violations: 0,
        worst_ratio: 0.0,
        worst_pair: None,
    };
    for &(x, y) in pairs {
        let dx = d.boundary_distance(x)?;
        if x.dist(y) > s * dx {
            return Err(Error::param("pairs", "separation exceeds s·d_D(x)"));
        }
        let ball = Domain::disk(x, dx);
        let bound = ball_estimate(d, x, y, s)?;
        let k = qh_distance(&ball, x, y, cfg)?;
        rep.checked += 1;
        if k.lower > bound * (1.0 + 1e-12) {
            rep.hard_violations += 1;
        }
        if k.upper > bound * 1.02 {
            rep.soft_violations += 1;
        }
        if bound > 0.0 && k.upper / bound > rep.worst_ratio {
            rep.worst_ratio = k.upper / bound;
            rep.worst_pair = Some((x, y));
        }
    }
    Ok(rep)
}

/// `φ₂(t) = max(φ₁(2t), (c + d / log(3/2)) t)` as an exact piecewise-linear table.
pub fn theorem2_phi2(phi1: &MonotoneTable, c: f64, dconst: f64) -> Result<MonotoneTable> {
    phi1.validate_growth()?;
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::param("c", "must be finite and nonnegative"));
    }
    if !(dconst >= 0.0 && dconst.is_finite()) {
        return Err(Error::param("dconst", "must be finite and nonnegative"));
    }
    let slope = c + dconst / 1.5f64.ln();
    let g = |t: f64| phi1.eval(2.0 * t);
    let diff = |t: f64| g(t) - slope * t;
    let mut ts: Vec<f64> = phi1.knots().iter().map(|k| 0.5 * k.0).collect();
    let mut crossings = Vec::new();
    for w in ts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, fb) = (diff(a), diff(b));
        if fa * fb < 0.0 {
            crossings.push(a + (b - a) * fa / (fa - fb));
        }
    }
    let last = *ts.last().unwrap();
    let tail = 2.0 * phi1.tail_slope();
    if tail != slope {
        let t = (g(last) - tail * last) / (slope - tail);
        if t > last {
            crossings.push(t);
        }
    }
    ts.extend(crossings);
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let end = 2.0 * ts.last().unwrap().max(1.0);
    ts.push(end);
    MonotoneTable::new(ts.into_iter().map(|t| (t, g(t).max(slope * t))).collect())
}

/// Step ratio `a = 1 − e^{−1/(3M)}` of the sphere chain and the QH constant `M₁ = 4M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem3Constants {
    pub a: f64,
    pub m1: f64,
}

pub fn theorem3_constants(m: f64) -> Result<Theorem3Constants> {
    if !(m >= 1.0 && m.is_finite()) {
        return Err(Error::param("M", "must be finite and at least 1"));
    }
    Ok(Theorem3Constants {
        a: -(-1.0 / (3.0 * m)).exp_m1(),
        m1: 4.0 * m,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepCheckReport {
    pub steps: usize,
    /// Pairs with `k′.lower > 2M · k.upper`.
    pub violations: usize,
    /// Largest `k′ / k` by bracket midpoints.
    pub worst_ratio: f64,
}

/// Checks `k_{D′}(f z_i, f z_{i+1}) ≤ 2M k_D(z_i, z_{i+1})` on consecutive chain points.
pub fn chain_step_check(
    f: &MapSpec,
    d: &Domain,
    chain: &ChainResult,
    m: f64,
    cfg: &SolverConfig,
) -> Result<StepCheckReport> {
    let image = f.image_domain(d)?;
    let mut rep = StepCheckReport {
        steps: 0,
        violations: 0,
        worst_ratio: 0.0,
    };
    for w in chain.points.windows(2) {
        let k = qh_distance(d, w[0], w[1], cfg)?;
        let kp = qh_distance(&image, f.apply(w[0])?, f.apply(w[1])?, cfg)?;
        rep.steps += 1;
        if kp.lower > 2.0 * m * k.upper {
            rep.violations += 1;
        }
        rep.worst_ratio = rep.worst_ratio.max(kp.midpoint() / k.midpoint());
    }
    Ok(rep)
}

/// `(c, d)` with `target ≤ c · source + d` on every pair: `c` is the largest
/// ratio over pairs with `source ≥ 1`, `d` the remaining excess.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineDominator {
    pub c: f64,
    pub d: f64,
}

pub fn affine_dominator(pairs: &[(f64, f64)]) -> Result<AffineDominator> {
    if pairs.iter().any(|p| !(p.0.is_finite() && p.1.is_finite())) {
        return Err(Error::param("pairs", "values must be finite"));
    }
    let c = pairs
        .iter()
        .filter(|p| p.0 >= 1.0)
        .map(|p| p.1 / p.0)
        .fold(1.0, f64::max);
    let d = pairs.iter().map(|p| p.1 - c * p.0).fold(0.0, f64::max);
    Ok(AffineDominator { c, d })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn table(k: &[(f64, f64)]) -> MonotoneTable {
        MonotoneTable::new(k.to_vec()).unwrap()
    }

    #[test]
    fn table_eval_and_inverse() {
        let t = table(&[(0.0, 0.0), (1.0, 2.0), (2.0, 2.0), (3.0, 5.0)]);
        assert_eq!(t.eval(0.5), 1.0);
        assert_eq!(t.eval(1.5), 2.0);
        assert_eq!(t.eval(4.0), 8.0);
        assert_eq!(t.inverse(2.0), 1.0);
        assert_eq!(t.inverse(3.5), 2.5);
        assert_eq!(t.inverse(8.0), 4.0);
        let flat = table(&[(0.0, 0.0), (1.0, 1.0), (2.0, 1.0)]);
        assert!(flat.inverse(1.5).is_infinite());
    }

    #[test]
    fn table_validation() {
        assert!(MonotoneTable::new(vec![(0.0, 0.0)]).is_err());
        assert!(MonotoneTable::new(vec![(0.0, 0.0), (1.0, -1.0)]).is_err());
        assert!(MonotoneTable::new(vec![(0.0, 0.0), (0.0, 1.0)]).is_err());
        assert!(MonotoneTable::new(vec![(0.5, 0.0), (1.0, 1.0)]).is_err());
        assert!(table(&[(0.0, 0.0), (1.0, 0.5)]).validate_growth().is_err());
        assert!(table(&[(0.0, 0.0), (1.0, 1.0)]).validate_growth().is_ok());
        let json = r#"{"knots":[[0,0],[1,3],[0.5,4]]}"#;
        assert!(serde_json::from_str::<MonotoneTable>(json).is_err());
        let t: MonotoneTable = serde_json::from_str(r#"{"knots":[[0,0],[1,3]]}"#).unwrap();
        assert_eq!(t.eval(2.0), 6.0);
    }

    #[test]
    fn envelope_dominates_and_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts: Vec<(f64, f64)> = (0..300)
            .map(|_| {
                let t: f64 = rng.gen_range(0.0..5.0);
                (t, 1.5 * t + rng.gen_range(-0.5..0.5f64).abs())
            })
            .collect();
        let env = fit_envelope(&pts);
        env.validate_growth().unwrap();
        for &(t, v) in &pts {
            assert!(env.eval(t) >= v - 1e-12);
        }
        // identity on the diagonal
        let diag: Vec<(f64, f64)> = (1..20).map(|i| (i as f64 * 0.3, i as f64 * 0.3)).collect();
        let env = fit_envelope(&diag);
        for t in [0.1, 1.0, 3.0, 10.0] {
            assert_abs_diff_eq!(env.eval(t), t, epsilon = 1e-12);
        }
    }

    #[test]
    fn theorem2_tabulated_examples() {
        let id = MonotoneTable::linear(1.0).unwrap();
        let three = MonotoneTable::linear(3.0).unwrap();
        let cases = [
            (&id, 1.0, 0.0, 2.0),
            (&id, 1.0, 1.5f64.ln(), 2.0),
            (&three, 0.0, 0.0, 6.0),
        ];
        for (phi1, c, d, slope) in cases {
            let phi2 = theorem2_phi2(phi1, c, d).unwrap();
            for t in [0.0, 0.1, 1.0, 7.5, 100.0] {
                assert_abs_diff_eq!(phi2.eval(t), slope * t, epsilon = 1e-12 * (1.0 + t));
            }
        }
    }

    #[test]
    fn theorem2_crossing_is_exact() {
        // φ₁ with slope 4 up to t = 1, then 1: φ₁(2t) crosses 3t at t = 2.5
        let phi1 = table(&[(0.0, 0.0), (1.0, 4.0), (2.0, 5.0)]);
        let phi2 = theorem2_phi2(&phi1, 3.0, 0.0).unwrap();
        for i in 0..200 {
            let t = i as f64 * 0.05;
            let want = phi1.eval(2.0 * t).max(3.0 * t);
            assert_abs_diff_eq!(phi2.eval(t), want, epsilon = 1e-12);
        }
        assert!(theorem2_phi2(&phi1, -1.0, 0.0).is_err());
        assert!(theorem2_phi2(&table(&[(0.0, 0.0), (1.0, 0.5)]), 1.0, 0.0).is_err());
    }

    #[test]
    fn theorem3_examples() {
        let c = theorem3_constants(1.0).unwrap();
        assert_abs_diff_eq!(c.a, 1.0 - (-1.0f64 / 3.0).exp(), epsilon = 1e-16);
        assert_abs_diff_eq!(c.a, 0.283469, epsilon = 1e-6);
        assert_eq!(c.m1, 4.0);
        let c2 = theorem3_constants(2.0).unwrap();
        assert_abs_diff_eq!(c2.a, 0.153518, epsilon = 1e-6);
        assert_eq!(c2.m1, 8.0);
        let mut prev = 1.0;
        for m in [1.0, 2.0, 10.0, 1e3, 1e9] {
            let a = theorem3_constants(m).unwrap().a;
            assert!(a < prev && a > 0.0);
            prev = a;
        }
        assert!(theorem3_constants(0.5).is_err());
    }

    #[test]
    fn affine_dominator_covers_pairs() {
        let pairs = [(0.1, 0.9), (1.0, 2.0), (3.0, 4.0), (10.0, 12.0)];
        let a = affine_dominator(&pairs).unwrap();
        for (s, t) in pairs {
            assert!(t <= a.c * s + a.d + 1e-12);
        }
        assert_eq!(a.c, 2.0);
    }

    #[test]
    fn cigar_examples() {
        let disk = Domain::unit_disk();
        let diameter = PathPolyline::new(vec![Point::new(-0.5, 0.0), Point::new(0.5, 0.0)]);
        let r = cigar_check(&disk, &diameter, 1.0).unwrap();
        assert_abs_diff_eq!(r.length_ratio, 1.0, epsilon = 1e-15);
        // arm s against distance 1 − |0.5 − s| is at most 1
        assert!(r.cigar_ratio <= 1.0 + 1e-12);
        assert!(r.pass);
        let pp = Domain::punctured_plane(vec![Point::ORIGIN]);
        let arc: Vec<Point> = (0..=2000)
            .map(|i| Point::from_polar(1.0, PI * i as f64 / 2000.0))
            .collect();
        let r = cigar_check(&pp, &PathPolyline::new(arc), 2.0).unwrap();
        assert_abs_diff_eq!(r.length_ratio, PI / 2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(r.cigar_ratio, PI / 2.0, epsilon = 1e-6);
    }

    #[test]
    fn lemma34_examples() {
        let d = Domain::unit_disk();
        let x = Point::ORIGIN;
        let y = Point::new(0.25, 0.0);
        let r = lemma34_check_pairs(&d, &[(x, y)], 0.5, &SolverConfig::default()).unwrap();
        // k in the unit ball from the centre is log(1/(1 − 0.25))
        assert_abs_diff_eq!(
            r.worst_ratio * ball_estimate(&d, x, y, 0.5).unwrap(),
            (4.0f64 / 3.0).ln(),
            epsilon = 1e-6
        );
        assert_abs_diff_eq!(
            ball_estimate(&d, x, y, 0.5).unwrap(),
            2.0 * 1.25f64.ln(),
            epsilon = 1e-15
        );
        assert!(r.pass());
        let same = lemma34_check_pairs(&d, &[(x, x)], 0.5, &SolverConfig::default()).unwrap();
        assert!(same.pass());
        let rep = lemma34_check(
            &Domain::unit_slit_disk(),
            30,
            2,
            0.5,
            &SolverConfig::default(),
        )
        .unwrap();
        assert_eq!(rep.checked, 30);
        assert!(rep.pass(), "{rep:?}");
    }

    #[test]
    fn sampled_pairs_span_j_range() {
        let d = Domain::unit_disk();
        let pairs = sample_pairs(&d, 100, 5).unwrap();
        assert_eq!(pairs.len(), 100);
        let js: Vec<f64> = pairs
            .iter()
            .map(|&(x, y)| j_distance(&d, x, y).unwrap())
            .collect();
        assert!(js.windows(2).all(|w| w[0] <= w[1]));
        assert!(js[0] < 0.1 && js[99] > 2.0, "{} {}", js[0], js[99]);
        assert_eq!(pairs, sample_pairs(&d, 100, 5).unwrap());
    }

    #[test]
    fn identity_profile_is_diagonal() {
        let id = MapSpec::similarity(1.0, 0.0, Point::ORIGIN);
        let d = Domain::upper_half_plane();
        let rep = semisolidity_profile(&id, &d, 50, 1, &SolverConfig::default()).unwrap();
        assert_eq!(rep.k_forward.sup_ratio, 1.0);
        assert_eq!(rep.qh_constant.estimate, 1.0);
        assert_eq!(rep.skipped, 0);
        let phi = MonotoneTable::linear(1.0).unwrap();
        let j = j_inequality_check(&id, &d, &phi, 50, 1, 0.0).unwrap();
        assert!(j.pass());
    }

    #[test]
    fn radial_stretch_on_punctured_plane() {
        let f = MapSpec::radial_stretch(2.0, Point::ORIGIN);
        let d = Domain::punctured_plane(vec![Point::ORIGIN]);
        let rep = semisolidity_profile(&f, &d, 200, 3, &SolverConfig::default()).unwrap();
        // closed forms: k′ = √(θ² + 4 log² ratio) ∈ [k, 2k]
        for s in &rep.samples {
            let (k, kp) = (s.k_source.midpoint(), s.k_image.midpoint());
            assert!(kp >= k * (1.0 - 1e-12) && kp <= 2.0 * k * (1.0 + 1e-12));
        }
        assert!(rep.k_forward.sup_ratio > 1.9 && rep.k_forward.sup_ratio <= 2.0 + 1e-12);
    }

    #[test]
    fn non_growth_table_is_rejected() {
        let id = MapSpec::similarity(1.0, 0.0, Point::ORIGIN);
        let phi = table(&[(0.0, 0.0), (1.0, 0.5), (2.0, 3.0)]);
        assert!(matches!(
            j_inequality_check(&id, &Domain::unit_disk(), &phi, 5, 1, 0.0),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn linden_pairs_reach_the_constant() {
        let d = Domain::punctured_plane(vec![Point::ORIGIN]);
        let u = uniformity_constant(&d, 100, 11, &SolverConfig::default()).unwrap();
        assert_abs_diff_eq!(u.c_prime, PI / 3f64.ln(), epsilon = 1e-9);
        assert_abs_diff_eq!(u.x.norm(), u.y.norm(), epsilon = 1e-12);
    }
}
