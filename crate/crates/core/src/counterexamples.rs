//! The slit-disk example, where no growth function controls `j` under a
//! conformal map, and the broken-line arithmetic bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Domain, Point};
use crate::maps::MapSpec;
use crate::metrics::{j_distance, qh_distance, SolverConfig};

/// Puncture of the slit disk in the slit-disk example.
pub const W0_IMAGE: Point = Point { x: -0.5, y: 0.0 };

/// Domains and map of the slit-disk example.
#[derive(Debug, Clone)]
pub struct SlitExample {
    pub chain: MapSpec,
    /// Preimage of [`W0_IMAGE`] in the unit disk.
    pub w0: Point,
    pub disk: Domain,
    pub slit_disk: Domain,
    pub punctured_disk: Domain,
    pub punctured_slit_disk: Domain,
}

impl SlitExample {
    pub fn new() -> Result<Self> {
        let chain = MapSpec::slit_chain();
        let w0 = chain.apply_inverse(W0_IMAGE)?;
        Ok(SlitExample {
            w0,
            disk: Domain::unit_disk(),
            slit_disk: Domain::unit_slit_disk(),
            punctured_disk: Domain::punctured(Domain::unit_disk(), vec![w0]),
            punctured_slit_disk: Domain::punctured(Domain::unit_slit_disk(), vec![W0_IMAGE]),
            chain,
        })
    }

    /// `x′ = (1/2, t)` and `y′ = (1/2, −t)`, on either side of the slit.
    pub fn image_pair(t: f64) -> (Point, Point) {
        (Point::new(0.5, t), Point::new(0.5, -t))
    }

    /// Preimages of the image pair under the chain.
    pub fn source_pair(&self, t: f64) -> Result<(Point, Point)> {
        let (x, y) = Self::image_pair(t);
        Ok((self.chain.apply_inverse(x)?, self.chain.apply_inverse(y)?))
    }

    /// `j` on the punctured source over `j` on the punctured image.
    pub fn ratio(&self, t: f64) -> Result<f64> {
        check_t(t)?;
        let (x, y) = Self::image_pair(t);
        let (x0, y0) = self.source_pair(t)?;
        Ok(
            j_distance(&self.punctured_disk, x0, y0)?
                / j_distance(&self.punctured_slit_disk, x, y)?,
        )
    }
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t < 0.25) {
        return Err(Error::param("t", "must lie in (0, 1/4)"));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Example1Row {
    pub t: f64,
    pub j_image: f64,
    /// `log(1 + 1/t)`.
    pub k_lower_analytic: f64,
    /// Solver lower bound, raised to the analytic bound.
    pub k_bracket_lo: f64,
    pub k_bracket_hi: f64,
    pub j_source: f64,
    pub ratio: f64,
    /// `j` in the unpunctured disk.
    pub j_source_unpunctured: f64,
    pub x_image: Point,
    pub y_image: Point,
    pub x_source: Point,
    pub y_source: Point,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Example1Table {
    pub w0: Point,
    /// Ordered by decreasing `t`.
    pub rows: Vec<Example1Row>,
    /// `j_image = log 3` to 1e-9 on every row.
    pub j_image_constant: bool,
    /// `j_source` strictly increases as `t` decreases.
    pub j_source_increasing: bool,
    /// The ratio strictly increases as `t` decreases.
    pub ratio_increasing: bool,
    /// Every solver upper bound is at least the analytic lower bound.
    pub brackets_consistent: bool,
}

impl Example1Table {
    pub fn pass(&self) -> bool {
        self.j_image_constant
            && self.j_source_increasing
            && self.ratio_increasing
            && self.brackets_consistent
    }
}

/// Runs the slit-disk example over `t_values`.
pub fn example1_run(t_values: &[f64], cfg: &SolverConfig) -> Result<Example1Table> {
    for &t in t_values {
        check_t(t)?;
    }
    let ex = SlitExample::new()?;
    let mut ts = t_values.to_vec();
    ts.sort_by(|a, b| b.total_cmp(a));
    ts.dedup();
    let mut rows = Vec::with_capacity(ts.len());
    for t in ts {
        let (x, y) = SlitExample::image_pair(t);
        let (x0, y0) = ex.source_pair(t)?;
        let j_image = j_distance(&ex.punctured_slit_disk, x, y)?;
        let analytic = (1.0 / t).ln_1p();
        let k = qh_distance(&ex.slit_disk, x, y, cfg)?;
        let j_source = j_distance(&ex.punctured_disk, x0, y0)?;
        rows.push(Example1Row {
            t,
            j_image,
            k_lower_analytic: analytic,
            k_bracket_lo: k.lower.max(analytic),
            k_bracket_hi: k.upper,
            j_source,
            ratio: j_source / j_image,
            j_source_unpunctured: j_distance(&ex.disk, x0, y0)?,
            x_image: x,
            y_image: y,
            x_source: x0,
            y_source: y0,
        });
    }
    let log3 = 3f64.ln();
    Ok(Example1Table {
        w0: ex.w0,
        j_image_constant: rows.iter().all(|r| (r.j_image - log3).abs() <= 1e-9),
        j_source_increasing: rows.windows(2).all(|w| w[1].j_source > w[0].j_source),
        ratio_increasing: rows.windows(2).all(|w| w[1].ratio > w[0].ratio),
        brackets_consistent: rows
            .iter()
            .all(|r| r.k_bracket_hi >= r.k_lower_analytic - 1e-9),
        rows,
    })
}

/// First `t = 10⁻ⁿ` (`n = 1, …, 8`) at which the ratio exceeds `slope`.
pub fn example1_exceeding_t(slope: f64) -> Result<Option<f64>> {
    let ex = SlitExample::new()?;
    for n in 1..=8 {
        let t = 10f64.powi(-n);
        if ex.ratio(t)? > slope {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

/// `(log(1 + 4M/r), log(1 + √2 (m − 1)/r))`: the image bound and the source `j`.
pub fn example2_bounds(m_const: f64, r: f64, m: u64) -> Result<(f64, f64)> {
    if !(m_const >= 1.0 && m_const.is_finite()) {
        return Err(Error::param("M", "must be finite and at least 1"));
    }
    if !(r > 0.0 && r <= 0.1) {
        return Err(Error::param("r", "must lie in (0, 1/10]"));
    }
    if m < 1 {
        return Err(Error::param("m", "must be at least 1"));
    }
    let image = (4.0 * m_const / r).ln_1p();
    let source = (2f64.sqrt() * (m - 1) as f64 / r).ln_1p();
    Ok((image, source))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Example2Row {
    pub m: u64,
    pub image_bound: f64,
    pub source_j: f64,
    pub exceeds: bool,
}

/// Rows `m = 1, …, m_max`.
pub fn example2_table(m_const: f64, r: f64, m_max: u64) -> Result<Vec<Example2Row>> {
    (1..=m_max)
        .map(|m| {
            let (image_bound, source_j) = example2_bounds(m_const, r, m)?;
            Ok(Example2Row {
                m,
                image_bound,
                source_j,
                exceeds: source_j > image_bound,
            })
        })
        .collect()
}

/// Smallest `m` with `source_j > image_bound`, by direct evaluation.
pub fn example2_threshold(m_const: f64, r: f64) -> Result<u64> {
    let mut m = 1;
    loop {
        let (image, source) = example2_bounds(m_const, r, m)?;
        if source > image {
            return Ok(m);
        }
        m += 1;
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Example2Check {
    pub threshold: u64,
    /// Every `m` past the threshold exceeds the bound.
    pub exceeds_beyond_threshold: bool,
    pub strictly_increasing: bool,
    /// `source_j` at the last probe.
    pub final_source_j: f64,
    pub probes: usize,
}

impl Example2Check {
    pub fn pass(&self) -> bool {
        self.exceeds_beyond_threshold && self.strictly_increasing
    }
}

/// Probes `m = 1, 2, 4, …` and `m_max`, checking monotonicity and the threshold.
pub fn example2_check(m_const: f64, r: f64, m_max: u64) -> Result<Example2Check> {
    let threshold = example2_threshold(m_const, r)?;
    let mut probes: Vec<u64> = std::iter::successors(Some(1u64), |m| m.checked_mul(2))
        .take_while(|&m| m <= m_max)
        .collect();
    probes.extend(threshold.saturating_sub(1).max(1)..=threshold + 1);
    probes.push(m_max.max(1));
    probes.sort_unstable();
    probes.dedup();
    let mut prev = f64::NEG_INFINITY;
    let mut increasing = true;
    let mut exceeds = true;
    let mut last = 0.0;
    for &m in &probes {
        let (image, source) = example2_bounds(m_const, r, m)?;
        increasing &= source > prev;
        if m >= threshold {
            exceeds &= source > image;
        }
        prev = source;
        last = source;
    }
    Ok(Example2Check {
        threshold,
        exceeds_beyond_threshold: exceeds,
        strictly_increasing: increasing,
        final_source_j: last,
        probes: probes.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn puncture_preimage_is_on_the_real_axis() {
        let ex = SlitExample::new().unwrap();
        assert_abs_diff_eq!(ex.w0.y, 0.0, epsilon = 1e-15);
        assert!(ex.w0.x < 0.0 && ex.w0.x > -1.0);
        let back = ex.chain.apply(ex.w0).unwrap();
        assert!(back.dist(W0_IMAGE) < 1e-14);
    }

    #[test]
    fn image_j_is_log3() {
        let ex = SlitExample::new().unwrap();
        for t in [1e-1, 1e-2, 1e-3, 1e-4, 1e-8] {
            let (x, y) = SlitExample::image_pair(t);
            // |x − y| = 2t, and the slit at distance t is nearer than the puncture
            let j = j_distance(&ex.punctured_slit_disk, x, y).unwrap();
            assert_abs_diff_eq!(j, 3f64.ln(), epsilon = 1e-12);
        }
    }

    #[test]
    fn ratio_exceeds_any_slope_eventually() {
        for slope in [2.0, 5.0, 10.0] {
            let t = example1_exceeding_t(slope)
                .unwrap()
                .expect("ladder reaches the slope");
            assert!(SlitExample::new().unwrap().ratio(t).unwrap() > slope);
        }
        assert_eq!(example1_exceeding_t(1e6).unwrap(), None);
    }

    #[test]
    fn example1_rejects_bad_t() {
        assert!(example1_run(&[0.3], &SolverConfig::default()).is_err());
        assert!(example1_run(&[0.0], &SolverConfig::default()).is_err());
    }

    #[test]
    fn example2_arithmetic() {
        let (image, source) = example2_bounds(2.0, 0.1, 7).unwrap();
        assert_abs_diff_eq!(image, 81f64.ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(source, (1.0 + 60.0 * 2f64.sqrt()).ln(), epsilon = 1e-14);
        assert!(source > image);
        assert_eq!(example2_bounds(2.0, 0.1, 1).unwrap().1, 0.0);
        assert_eq!(example2_threshold(2.0, 0.1).unwrap(), 7);
        assert!(example2_bounds(0.5, 0.1, 1).is_err());
        assert!(example2_bounds(1.0, 0.2, 1).is_err());
        assert!(example2_bounds(1.0, 0.1, 0).is_err());
        let rows = example2_table(2.0, 0.1, 20).unwrap();
        assert_eq!(rows.len(), 20);
        assert!(rows.iter().all(|r| r.image_bound == rows[0].image_bound));
        assert!(rows.iter().all(|r| r.exceeds == (r.m >= 7)));
        let c = example2_check(2.0, 0.1, 1_000_000).unwrap();
        assert!(c.pass(), "{c:?}");
        assert!(c.final_source_j > 16.0);
    }
}
