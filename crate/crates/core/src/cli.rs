//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::counterexamples::{example1_run, example2_check, example2_table};
use crate::distortion::{
    chain_step_check, j_inequality_check_pairs, lemma34_check, sample_pairs, semisolidity_profile,
    theorem2_phi2, theorem3_constants, uniformity_constant, MonotoneTable,
};
use crate::error::{Error, Result};
use crate::geodesics::{chain_points, extract_neargeodesic};
use crate::geometry::{Domain, Point};
use crate::maps::MapSpec;
use crate::metrics::{j_distance, qh_closed_form, qh_distance, PathPolyline, SolverConfig};
use crate::report::{emit_report, Format, Table};

#[derive(Debug, Parser)]
#[command(
    name = "qhmetric",
    version,
    about = "Distance-ratio and quasihyperbolic metrics on planar domains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Root seed; suites derive per-task seeds from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Number of sampled pairs.
    #[arg(long, global = true, default_value_t = 200)]
    samples: usize,

    /// Relative tolerance of the distance solver.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Distance-ratio metric between two points.
    Jdist(PairArgs),
    /// Bracket for the quasihyperbolic distance.
    Kdist {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        max_refinements: Option<usize>,
        /// Always use the numerical solver.
        #[arg(long)]
        no_closed_form: bool,
    },
    /// Certified near-geodesic.
    Geodesic {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, default_value_t = 2.0)]
        c: f64,
    },
    /// Sphere chain along a near-geodesic.
    Chain {
        #[command(flatten)]
        pair: PairArgs,
        /// Step ratio; derived from `--M` when absent.
        #[arg(long)]
        a: Option<f64>,
        #[arg(long = "M", default_value_t = 1.0)]
        m: f64,
    },
    /// Uniformity constant max k/j over sampled pairs.
    Uniformity {
        #[arg(long)]
        domain: PathBuf,
    },
    /// Distortion of j and k under a map.
    Distortion {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        domain: PathBuf,
        /// Growth-function table to check the j inequality against.
        #[arg(long)]
        phi: Option<PathBuf>,
        /// Relative margin for the j inequality.
        #[arg(long, default_value_t = 0.0)]
        margin: f64,
    },
    /// Verification suites.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        #[arg(long = "M", default_value_t = 2.0)]
        m: f64,
        #[arg(long, default_value_t = 0.1)]
        r: f64,
        #[arg(long, default_value_t = 20)]
        mmax: u64,
        /// Ladder of t values for the slit-disk example.
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.01,0.001,0.0001")]
        t: Vec<f64>,
    },
}

#[derive(Debug, clap::Args)]
struct PairArgs {
    #[arg(long)]
    domain: PathBuf,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    from: Point,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    to: Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Lemma34,
    Eq11,
    Theorem2,
    Theorem3,
    Example1,
    Example2,
    All,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::Lemma34 => "lemma34",
            Suite::Eq11 => "eq11",
            Suite::Theorem2 => "theorem2",
            Suite::Theorem3 => "theorem3",
            Suite::Example1 => "example1",
            Suite::Example2 => "example2",
            Suite::All => "all",
        }
    }
}

fn parse_point(s: &str) -> std::result::Result<Point, String> {
    let (x, y) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `x,y`, got `{s}`"))?;
    let x: f64 = x
        .trim()
        .parse()
        .map_err(|e| format!("bad x in `{s}`: {e}"))?;
    let y: f64 = y
        .trim()
        .parse()
        .map_err(|e| format!("bad y in `{s}`: {e}"))?;
    Ok(Point::new(x, y))
}

/// Stable per-task seed: FNV-1a over the root seed and the task name.
pub fn task_seed(seed: u64, task: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in seed.to_le_bytes().iter().chain(task.as_bytes()) {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

enum Outcome {
    Pass,
    Violation,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns 0 when every check passes, 1 on a violation and 2 on a usage or
/// configuration error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(Outcome::Pass) => 0,
        Ok(Outcome::Violation) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::CertificationFailure { .. }
                | Error::NoPath
                | Error::ChainOverflow { .. } => 1,
                _ => 2,
            }
        }
    }
}

fn load_domain(path: &Path) -> Result<Domain> {
    let text = fs::read_to_string(path)?;
    Domain::from_json(&text)
}

fn load_map(path: &Path) -> Result<MapSpec> {
    let text = fs::read_to_string(path)?;
    MapSpec::from_json(&text)
}

fn solver_config(cli: &Cli) -> SolverConfig {
    let mut cfg = SolverConfig::default();
    if let Some(tol) = cli.tol {
        cfg.relative_tolerance = tol;
    }
    cfg
}

fn pt(p: Point) -> serde_json::Value {
    json!([p.x, p.y])
}

fn execute(cli: &Cli) -> Result<Outcome> {
    let cfg = solver_config(cli);
    cfg.validate()?;
    let (table, outcome) = match &cli.command {
        Command::Jdist(p) => {
            let d = load_domain(&p.domain)?;
            let j = j_distance(&d, p.from, p.to)?;
            let mut t = Table::new(&["j"]);
            t.push(vec![j.into()]);
            (
                t.with_summary(json!({"from": pt(p.from), "to": pt(p.to)})),
                Outcome::Pass,
            )
        }
        Command::Kdist {
            pair,
            max_refinements,
            no_closed_form,
        } => {
            let d = load_domain(&pair.domain)?;
            let mut cfg = cfg.clone();
            if let Some(m) = max_refinements {
                cfg.max_refinements = *m;
            }
            cfg.use_closed_form = !no_closed_form;
            let r = qh_distance(&d, pair.from, pair.to, &cfg)?;
            let mut t = Table::new(&["lower", "upper", "refinement_level", "exact"]);
            t.push(vec![
                r.lower.into(),
                r.upper.into(),
                r.refinement_level.into(),
                r.exact.into(),
            ]);
            let path: Vec<_> = r.path.vertices.iter().map(|&v| pt(v)).collect();
            (t.with_summary(json!({"path": path})), Outcome::Pass)
        }
        Command::Geodesic { pair, c } => {
            let d = load_domain(&pair.domain)?;
            let g = extract_neargeodesic(&d, pair.from, pair.to, *c, &cfg)?;
            let t = vertex_table(&d, &g.path.vertices);
            (
                t.with_summary(json!({"qh_length": g.qh_length, "ratio": g.ratio, "c": c})),
                Outcome::Pass,
            )
        }
        Command::Chain { pair, a, m } => {
            let d = load_domain(&pair.domain)?;
            let a = match a {
                Some(a) => *a,
                None => theorem3_constants(*m)?.a,
            };
            let g = extract_neargeodesic(&d, pair.from, pair.to, 2.0, &cfg)?;
            let chain = chain_points(&d, &g.path, a)?;
            let t = vertex_table(&d, &chain.points);
            (
                t.with_summary(json!({
                    "a": a,
                    "points": chain.len(),
                    "steps": chain.steps(),
                    "terminal_covered": chain.terminal_covered,
                })),
                Outcome::Pass,
            )
        }
        Command::Uniformity { domain } => {
            let d = load_domain(domain)?;
            let u = uniformity_constant(&d, cli.samples, task_seed(cli.seed, "uniformity"), &cfg)?;
            let mut t = Table::new(&[
                "c_prime",
                "c_prime_lower",
                "x0",
                "x1",
                "y0",
                "y1",
                "j",
                "k_lo",
                "k_hi",
            ]);
            t.push(vec![
                u.c_prime.into(),
                u.c_prime_lower.into(),
                u.x.x.into(),
                u.x.y.into(),
                u.y.x.into(),
                u.y.y.into(),
                u.j.into(),
                u.k.lower.into(),
                u.k.upper.into(),
            ]);
            (
                t.with_summary(json!({"pairs": u.pairs, "skipped": u.skipped})),
                Outcome::Pass,
            )
        }
        Command::Distortion {
            map,
            domain,
            phi,
            margin,
        } => distortion(cli, &cfg, map, domain, phi.as_deref(), *margin)?,
        Command::Verify {
            suite,
            m,
            r,
            mmax,
            t,
        } => {
            let params = SuiteParams {
                m: *m,
                r: *r,
                mmax: *mmax,
                t: t.clone(),
            };
            verify(cli, &cfg, *suite, &params)?
        }
    };
    emit_report(&table, cli.format, cli.out.as_deref())?;
    if let Outcome::Violation = outcome {
        eprintln!("violations found");
    }
    Ok(outcome)
}

fn vertex_table(d: &Domain, pts: &[Point]) -> Table {
    let mut t = Table::new(&["index", "x", "y", "boundary_distance"]);
    for (i, p) in pts.iter().enumerate() {
        t.push(vec![
            i.into(),
            p.x.into(),
            p.y.into(),
            d.dist_unchecked(*p).into(),
        ]);
    }
    t
}

fn distortion(
    cli: &Cli,
    cfg: &SolverConfig,
    map: &Path,
    domain: &Path,
    phi: Option<&Path>,
    margin: f64,
) -> Result<(Table, Outcome)> {
    let f = load_map(map)?;
    let d = load_domain(domain)?;
    let seed = task_seed(cli.seed, "distortion");
    let rep = semisolidity_profile(&f, &d, cli.samples, seed, cfg)?;
    let mut t = Table::new(&[
        "index",
        "x0",
        "x1",
        "y0",
        "y1",
        "j",
        "j_image",
        "k_lo",
        "k_hi",
        "k_image_lo",
        "k_image_hi",
    ]);
    for (i, s) in rep.samples.iter().enumerate() {
        t.push(vec![
            i.into(),
            s.x.x.into(),
            s.x.y.into(),
            s.y.x.into(),
            s.y.y.into(),
            s.j_source.into(),
            s.j_image.into(),
            s.k_source.lower.into(),
            s.k_source.upper.into(),
            s.k_image.lower.into(),
            s.k_image.upper.into(),
        ]);
    }
    let mut outcome = Outcome::Pass;
    let mut summary = json!({
        "skipped": rep.skipped,
        "k_sup_ratio": rep.k_forward.sup_ratio,
        "k_inverse_sup_ratio": rep.k_inverse.sup_ratio,
        "j_sup_ratio": rep.j_forward.sup_ratio,
        "j_inverse_sup_ratio": rep.j_inverse.sup_ratio,
        "qh_constant": serde_json::to_value(&rep.qh_constant)?,
        "k_envelope": serde_json::to_value(&rep.k_forward.envelope)?,
        "k_inverse_envelope": serde_json::to_value(&rep.k_inverse.envelope)?,
    });
    if let Some(path) = phi {
        let table: MonotoneTable = serde_json::from_str(&fs::read_to_string(path)?)?;
        let pairs = sample_pairs(&d, cli.samples, seed)?;
        let check = j_inequality_check_pairs(&f, &d, &table, &pairs, margin)?;
        if !check.pass() {
            outcome = Outcome::Violation;
        }
        summary["j_inequality"] = json!({
            "checked": check.checked,
            "violations": check.violations.len(),
        });
    }
    Ok((t.with_summary(summary), outcome))
}

struct SuiteParams {
    m: f64,
    r: f64,
    mmax: u64,
    t: Vec<f64>,
}

fn verify(
    cli: &Cli,
    cfg: &SolverConfig,
    suite: Suite,
    p: &SuiteParams,
) -> Result<(Table, Outcome)> {
    let (table, pass) = match suite {
        Suite::All => {
            let mut t = Table::new(&["suite", "pass"]);
            let mut all = true;
            for s in [
                Suite::Eq11,
                Suite::Lemma34,
                Suite::Theorem2,
                Suite::Theorem3,
                Suite::Example1,
                Suite::Example2,
            ] {
                let (_, ok) = run_suite(cli, cfg, s, p)?;
                all &= ok;
                t.push(vec![s.name().into(), ok.into()]);
            }
            (t, all)
        }
        s => run_suite(cli, cfg, s, p)?,
    };
    let summary = json!({"suite": suite.name(), "pass": pass});
    let outcome = if pass {
        Outcome::Pass
    } else {
        Outcome::Violation
    };
    Ok((table.with_summary(summary), outcome))
}

fn suite_domains() -> Vec<(&'static str, Domain)> {
    vec![
        ("disk", Domain::unit_disk()),
        ("half_plane", Domain::upper_half_plane()),
        (
            "punctured_plane",
            Domain::punctured_plane(vec![Point::ORIGIN]),
        ),
        ("slit_disk", Domain::unit_slit_disk()),
        (
            "punctured_disk",
            Domain::punctured(Domain::unit_disk(), vec![Point::new(0.3, 0.1)]),
        ),
    ]
}

fn run_suite(
    cli: &Cli,
    cfg: &SolverConfig,
    suite: Suite,
    p: &SuiteParams,
) -> Result<(Table, bool)> {
    let seed = |task: &str| task_seed(cli.seed, task);
    match suite {
        Suite::Eq11 => {
            let mut t = Table::new(&["domain", "pairs", "skipped", "violations", "min_slack"]);
            let mut pass = true;
            for (name, d) in suite_domains() {
                let pairs = sample_pairs(&d, cli.samples, seed(&format!("eq11/{name}")))?;
                let (mut skipped, mut violations, mut slack) = (0usize, 0usize, f64::INFINITY);
                for (x, y) in &pairs {
                    let j = j_distance(&d, *x, *y)?;
                    let k = match qh_distance(&d, *x, *y, cfg) {
                        Ok(k) => k,
                        Err(Error::NoPath) => {
                            skipped += 1;
                            continue;
                        }
                        Err(e) => return Err(e),
                    };
                    let tol = if qh_closed_form(&d, *x, *y).is_some() {
                        1e-12
                    } else {
                        1e-9
                    };
                    if j > k.upper + tol {
                        violations += 1;
                    }
                    slack = slack.min(k.upper - j);
                }
                pass &= violations == 0;
                t.push(vec![
                    name.into(),
                    pairs.len().into(),
                    skipped.into(),
                    violations.into(),
                    slack.into(),
                ]);
            }
            Ok((t, pass))
        }
        Suite::Lemma34 => {
            let mut t = Table::new(&["domain", "s", "checked", "hard", "soft", "worst_ratio"]);
            let mut pass = true;
            for (name, d) in [
                ("disk", Domain::unit_disk()),
                ("slit_disk", Domain::unit_slit_disk()),
            ] {
                for s in [0.25, 0.5, 0.9] {
                    let r = lemma34_check(
                        &d,
                        cli.samples,
                        seed(&format!("lemma34/{name}/{s}")),
                        s,
                        cfg,
                    )?;
                    pass &= r.pass();
                    t.push(vec![
                        name.into(),
                        s.into(),
                        r.checked.into(),
                        r.hard_violations.into(),
                        r.soft_violations.into(),
                        r.worst_ratio.into(),
                    ]);
                }
            }
            Ok((t, pass))
        }
        Suite::Theorem2 => {
            let mut t = Table::new(&[
                "case",
                "phi1_slope",
                "c",
                "d",
                "expected_slope",
                "max_abs_err",
            ]);
            let mut pass = true;
            let cases = [
                ("identity", 1.0, 1.0, 0.0, 2.0),
                ("identity_log", 1.0, 1.0, 1.5f64.ln(), 2.0),
                ("triple", 3.0, 0.0, 0.0, 6.0),
            ];
            for (name, s1, c, d, want) in cases {
                let phi2 = theorem2_phi2(&MonotoneTable::linear(s1)?, c, d)?;
                let err = (0..=100)
                    .map(|i| i as f64 * 0.1)
                    .map(|x| (phi2.eval(x) - want * x).abs())
                    .fold(0.0, f64::max);
                pass &= err <= 1e-12;
                t.push(vec![
                    name.into(),
                    s1.into(),
                    c.into(),
                    d.into(),
                    want.into(),
                    err.into(),
                ]);
            }
            Ok((t, pass))
        }
        Suite::Theorem3 => theorem3_suite(cfg),
        Suite::Example1 => {
            let ex = example1_run(&p.t, cfg)?;
            let mut t = Table::new(&[
                "t",
                "j_image",
                "k_lower_analytic",
                "k_bracket_lo",
                "k_bracket_hi",
                "j_source",
                "ratio",
            ]);
            for r in &ex.rows {
                t.push(vec![
                    r.t.into(),
                    r.j_image.into(),
                    r.k_lower_analytic.into(),
                    r.k_bracket_lo.into(),
                    r.k_bracket_hi.into(),
                    r.j_source.into(),
                    r.ratio.into(),
                ]);
            }
            let unpunctured: Vec<_> = ex
                .rows
                .iter()
                .map(|r| json!([r.t, r.j_source_unpunctured]))
                .collect();
            let pass = ex.pass();
            let t = t.with_summary(json!({"w0": pt(ex.w0), "j_source_unpunctured": unpunctured}));
            Ok((t, pass))
        }
        Suite::Example2 => {
            let rows = example2_table(p.m, p.r, p.mmax)?;
            let check = example2_check(p.m, p.r, p.mmax)?;
            let mut t = Table::new(&["m", "image_bound", "source_j", "exceeds"]);
            for r in rows {
                t.push(vec![
                    r.m.into(),
                    r.image_bound.into(),
                    r.source_j.into(),
                    r.exceeds.into(),
                ]);
            }
            Ok((t, check.pass()))
        }
        Suite::All => unreachable!("handled by the caller"),
    }
}

fn theorem3_suite(cfg: &SolverConfig) -> Result<(Table, bool)> {
    let mut t = Table::new(&[
        "specimen",
        "M",
        "a",
        "M1",
        "steps",
        "sphere_residual",
        "step_violations",
        "worst_step_ratio",
    ]);
    let mut pass = true;
    let hp = Domain::upper_half_plane();
    let vertical = PathPolyline::new(vec![
        Point::new(0.0, 1.0),
        Point::new(0.0, std::f64::consts::E),
    ]);
    let pp = Domain::punctured_plane(vec![Point::ORIGIN]);
    let radial = PathPolyline::new(vec![Point::new(0.2, 0.1), Point::new(6.0, 3.0)]);
    let specimens: [(&str, MapSpec, &Domain, &PathPolyline, f64); 2] = [
        (
            "similarity_half_plane",
            MapSpec::similarity(2.0, 0.3, Point::new(1.0, -1.0)),
            &hp,
            &vertical,
            1.0,
        ),
        (
            "radial_stretch_punctured_plane",
            MapSpec::radial_stretch(2.0, Point::ORIGIN),
            &pp,
            &radial,
            2.0,
        ),
    ];
    for (name, f, d, path, m) in specimens {
        let k = theorem3_constants(m)?;
        let chain = chain_points(d, path, k.a)?;
        let residual = chain
            .points
            .windows(2)
            .map(|w| (w[0].dist(w[1]) - k.a * d.dist_unchecked(w[0])).abs())
            .fold(0.0, f64::max);
        let steps = chain_step_check(&f, d, &chain, m, cfg)?;
        pass &= residual <= 1e-9 && steps.violations == 0 && chain.terminal_covered;
        t.push(vec![
            name.into(),
            m.into(),
            k.a.into(),
            k.m1.into(),
            chain.steps().into(),
            residual.into(),
            steps.violations.into(),
            steps.worst_ratio.into(),
        ]);
    }
    Ok((t, pass))
}
