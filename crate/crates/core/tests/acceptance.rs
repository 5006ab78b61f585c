//! Acceptance run: one pass/fail line per criterion.
//!
//! Statistical criteria run the committed configs under `configs/` with fixed
//! master seeds. The process exits 0 regardless of outcome so that the rest of
//! the test suite stays usable; set `QPROC_ACCEPTANCE_STRICT=1` to exit 1 when
//! any criterion fails.

mod support;

use std::path::PathBuf;
use std::time::Instant;

use qproc_core::density::{nn_density, nn_radius, Kernel};
use qproc_core::distributions::{builtin_models, DistributionModel};
use qproc_core::empirical::{bk_gap, default_s_grid, edf_eval, eqf_eval, Sample};
use qproc_core::harness::report::rows_to_csv;
use qproc_core::harness::{run_experiment, ExperimentConfig, ExperimentReport};
use qproc_core::spacings::{dn_profile, index_bounds, uniform_k_spacings};
use qproc_core::strassen::{distance_to_s0, energy, GridFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ORACLE_TOL: f64 = 1e-3;
const ORACLE_FIELDS: u64 = 20;
const ORACLE_BUDGET_SECS: f64 = 60.0;
const IDENTITY_TOL: f64 = 1e-3;
const MEMBER_TOL: f64 = 1e-6;
const UNIT_ENERGY_ULPS: f64 = 4.0;
const BK_GRID_POINTS: usize = 1_000_000;
const BK_GRID_TOL: f64 = 1e-9;
const QF_TOL: f64 = 1e-12;
const RATIO_PAIRS: usize = 10_000;

const COR21_BAND: (f64, f64) = (0.70, 1.15);
const DIST_MAX: f64 = 0.50;
const COVER_MAX: f64 = 0.50;
const THM31_BAND: (f64, f64) = (0.70, 1.15);
const THM32_BAND: (f64, f64) = (0.60, 1.20);
const DENSITY_BAND: (f64, f64) = (0.60, 1.30);
const BK_MAX: f64 = 2.0;
const BK_SPREAD: f64 = 3.0;
const CR_MAX: f64 = 2.0;

struct Line {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

struct Run {
    file: &'static str,
    report: ExperimentReport,
    csv: String,
}

fn run(file: &'static str) -> Run {
    let cfg =
        ExperimentConfig::load(configs_dir().join(file)).unwrap_or_else(|e| panic!("{file}: {e}"));
    let report = run_experiment(&cfg).unwrap_or_else(|e| panic!("{file}: {e}"));
    let csv = rows_to_csv(&report.rows);
    Run { file, report, csv }
}

fn fmt(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", parts.join(", "))
}

fn nondecreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] <= w[1])
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] > w[1])
}

fn in_band(x: f64, (lo, hi): (f64, f64)) -> bool {
    x >= lo && x <= hi
}

fn strassen_oracle() -> Line {
    let start = Instant::now();
    let nodes = support::nodes(9);
    let mut worst = 0.0f64;
    for seed in 0..ORACLE_FIELDS {
        let phi = support::random_field(seed, 9, 1.5);
        let g = GridFunction::new(nodes.clone(), phi.clone()).unwrap();
        let fast = distance_to_s0(&g).unwrap().distance;
        worst = worst.max((fast - support::qp_distance(&nodes, &phi, 4)).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    Line {
        name: "strassen distance vs projected-gradient oracle",
        pass: worst < ORACLE_TOL && secs < ORACLE_BUDGET_SECS,
        detail: format!("max |diff| = {worst:.2e} over {ORACLE_FIELDS} fields, {secs:.1}s"),
    }
}

fn strassen_identity() -> Line {
    let s = default_s_grid(65).unwrap();
    let id = GridFunction::from_fn(s.clone(), |x| x).unwrap();
    let half = GridFunction::from_fn(s, |x| x * std::f64::consts::FRAC_1_SQRT_2).unwrap();
    let d_id = distance_to_s0(&id).unwrap().distance;
    let d_half = distance_to_s0(&half).unwrap().distance;
    let e_half = energy(&half);
    let target = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
    Line {
        name: "strassen closed forms",
        pass: (d_id - target).abs() <= IDENTITY_TOL
            && d_half < MEMBER_TOL
            && (e_half - 1.0).abs() <= UNIT_ENERGY_ULPS * f64::EPSILON,
        detail: format!(
            "d(s) = {d_id:.6} (target {target:.6}), d(s/sqrt2) = {d_half:.1e}, energy = {e_half}"
        ),
    }
}

fn bk_exactness() -> Line {
    let mut worst_excess = f64::NEG_INFINITY;
    let mut count = 0;
    for &n in &[10usize, 100] {
        for seed in 0..50u64 {
            let s = Sample::draw(&DistributionModel::uniform(), n, seed).unwrap();
            let grid = support::bk_grid(s.order_stats(), BK_GRID_POINTS);
            worst_excess = worst_excess.max(grid - bk_gap(&s));
            count += 1;
        }
    }
    Line {
        name: "bahadur-kiefer gap exact supremum",
        pass: worst_excess <= BK_GRID_TOL,
        detail: format!("max(grid - exact) = {worst_excess:.2e} over {count} samples"),
    }
}

fn process_identities() -> Line {
    let mut notes = Vec::new();
    let mut pass = true;

    let mut qf = 0.0f64;
    for m in builtin_models() {
        for j in 1..=1000 {
            let t = j as f64 / 1001.0;
            qf = qf.max((m.quantile_density(t).unwrap() * m.density(m.quantile(t)) - 1.0).abs());
        }
    }
    pass &= qf < QF_TOL;
    notes.push(format!("q*f(Q) dev {qf:.1e}"));

    let n = 1000usize;
    let u = Sample::draw(&DistributionModel::uniform(), n, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut inv = 0.0f64;
    for _ in 0..1000 {
        let t: f64 = 1.0 - rng.random_range(0.0..1.0);
        inv = inv.max((edf_eval(&u, eqf_eval(&u, t)) - t).abs());
    }
    pass &= inv <= 1.0 / n as f64;
    notes.push(format!("max |U(V(t)) - t| * n = {:.3}", inv * n as f64));

    let big = Sample::draw(&DistributionModel::uniform(), 20_000, 3).unwrap();
    let profile = dn_profile(&big, &DistributionModel::uniform(), 30).unwrap();
    let mut reduction = true;
    for (k0, &v) in profile.iter().enumerate() {
        let k = k0 + 1;
        let b = index_bounds(20_000, k).unwrap();
        let sp = uniform_k_spacings(&big, k).unwrap();
        let direct = (b.i1..=b.i2)
            .map(|i| (sp[i] - k as f64 / 20_000.0).abs())
            .fold(0.0, f64::max);
        reduction &= v == direct;
    }
    pass &= reduction;
    notes.push(format!(
        "uniform d_n reduction {}",
        if reduction { "exact" } else { "differs" }
    ));

    let s = Sample::draw(&DistributionModel::exponential(), 2000, 4).unwrap();
    let kernel = Kernel::uniform();
    let mut identity = true;
    for _ in 0..1000 {
        let x: f64 = rng.random_range(0.05..3.0);
        let k: f64 = rng.random_range(1.0..400.0);
        let r = nn_radius(&s, k, x).unwrap();
        let count = s
            .values()
            .iter()
            .filter(|&&v| (x - v).abs() <= r / 2.0)
            .count();
        let expected = count as f64 / (2000.0 * r);
        identity &= (nn_density(&s, &kernel, k, x).unwrap() - expected).abs() <= 1e-12 * expected;
    }
    pass &= identity;
    notes.push(format!(
        "uniform-kernel NN identity {}",
        if identity { "exact" } else { "differs" }
    ));

    Line {
        name: "process identities",
        pass,
        detail: notes.join("; "),
    }
}

fn ratio_bound() -> Line {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut violations = 0;
    for m in builtin_models() {
        for _ in 0..RATIO_PAIRS {
            let y1: f64 = rng.random_range(1e-9..1.0);
            let y2: f64 = rng.random_range(1e-9..1.0);
            if !m.fact41_holds(y1, y2).unwrap() {
                violations += 1;
            }
        }
    }
    Line {
        name: "quantile-density ratio bound",
        pass: violations == 0,
        detail: format!("{violations} violations in {} pairs", 3 * RATIO_PAIRS),
    }
}

fn determinism(runs: &[&Run]) -> Line {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(3)
        .build()
        .unwrap();
    let mut mismatched = Vec::new();
    for r in runs {
        let again = pool.install(|| run(r.file));
        if again.csv != r.csv {
            mismatched.push(r.file);
        }
    }
    Line {
        name: "byte-identical reruns",
        pass: mismatched.is_empty(),
        detail: if mismatched.is_empty() {
            format!("{} configs rerun on a 3-thread pool", runs.len())
        } else {
            format!("differs: {mismatched:?}")
        },
    }
}

fn last(v: &[f64]) -> f64 {
    *v.last().unwrap()
}

fn banded_trend(name: &'static str, r: &Run, exp: &str, band: (f64, f64)) -> Line {
    let m = r.report.medians(exp);
    Line {
        name,
        pass: in_band(last(&m), band) && nondecreasing(&m),
        detail: format!(
            "medians {} vs band [{}, {}], nondecreasing",
            fmt(&m),
            band.0,
            band.1
        ),
    }
}

fn density_band(name: &'static str, uni: &Run, epa: &Run, exp: &str) -> Line {
    let mu = uni.report.medians(exp)[0];
    let me = epa.report.medians(exp)[0];
    let te = Kernel::epanechnikov().limit_constant();
    let be = (DENSITY_BAND.0 * te, DENSITY_BAND.1 * te);
    Line {
        name,
        pass: in_band(mu, DENSITY_BAND) && in_band(me, be),
        detail: format!(
            "uniform {mu:.4} in [{}, {}]; epanechnikov {me:.4} in [{:.4}, {:.4}]",
            DENSITY_BAND.0, DENSITY_BAND.1, be.0, be.1
        ),
    }
}

fn main() {
    let total = Instant::now();
    let mut lines = vec![
        strassen_oracle(),
        strassen_identity(),
        bk_exactness(),
        process_identities(),
        ratio_bound(),
    ];

    let cor21 = run("cor21.cfg");
    let dist = run("thm21_dist.cfg");
    let cover = run("thm21_cover.cfg");
    let thm31 = run("thm31.cfg");
    let thm32_exp = run("thm32_exp1.cfg");
    let thm32_log = run("thm32_logistic.cfg");
    let thm33_u = run("thm33_uniform.cfg");
    let thm33_e = run("thm33_epanechnikov.cfg");
    let prop42_u = run("prop42_uniform.cfg");
    let prop42_e = run("prop42_epanechnikov.cfg");
    let bk = run("bk_rate.cfg");
    let cr = run("cr_rate.cfg");
    let radius = run("radius_gap.cfg");

    lines.push(determinism(&[
        &dist, &cover, &thm33_u, &thm33_e, &prop42_u, &prop42_e, &bk, &cr, &radius,
    ]));

    lines.push(banded_trend(
        "quantile oscillation modulus (cor21)",
        &cor21,
        "cor21",
        COR21_BAND,
    ));

    let m = dist.report.medians("thm21_dist");
    lines.push(Line {
        name: "distance to strassen ball (thm21_dist)",
        pass: last(&m) <= DIST_MAX && strictly_decreasing(&m),
        detail: format!("medians {} vs <= {DIST_MAX}, strictly decreasing", fmt(&m)),
    });

    let mut pass = true;
    let mut parts = Vec::new();
    for j in 0..cover.report.config.cover_elements {
        let m = cover.report.medians(&format!("thm21_cover/g{j}"));
        pass &= last(&m) <= COVER_MAX && strictly_decreasing(&m);
        parts.push(format!("g{j} {}", fmt(&m)));
    }
    lines.push(Line {
        name: "coverage of strassen ball (thm21_cover)",
        pass,
        detail: format!(
            "{} vs <= {COVER_MAX}, strictly decreasing",
            parts.join("; ")
        ),
    });

    lines.push(banded_trend(
        "uniform spacings (thm31)",
        &thm31,
        "thm31",
        THM31_BAND,
    ));

    let me = thm32_exp.report.medians("thm32");
    let ml = thm32_log.report.medians("thm32");
    lines.push(Line {
        name: "density-weighted spacings (thm32)",
        pass: in_band(last(&me), THM32_BAND)
            && in_band(last(&ml), THM32_BAND)
            && nondecreasing(&me)
            && nondecreasing(&ml),
        detail: format!(
            "exp1 {} logistic {} vs band [{}, {}], nondecreasing",
            fmt(&me),
            fmt(&ml),
            THM32_BAND.0,
            THM32_BAND.1
        ),
    });

    lines.push(density_band(
        "nearest-neighbor deviation (thm33)",
        &thm33_u,
        &thm33_e,
        "thm33",
    ));
    lines.push(density_band(
        "parzen-rosenblatt deviation (prop42)",
        &prop42_u,
        &prop42_e,
        "prop42",
    ));

    let m = bk.report.medians("bk_rate");
    let spread = m.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        / m.iter().cloned().fold(f64::INFINITY, f64::min);
    lines.push(Line {
        name: "bahadur-kiefer rate (bk_rate)",
        pass: m.iter().all(|&v| v <= BK_MAX) && spread <= BK_SPREAD,
        detail: format!(
            "medians {} vs <= {BK_MAX}, spread {spread:.3} <= {BK_SPREAD}",
            fmt(&m)
        ),
    });

    let m = cr.report.medians("cr_rate");
    lines.push(Line {
        name: "normed quantile rate (cr_rate)",
        pass: m.iter().all(|&v| v <= CR_MAX),
        detail: format!("medians {} vs <= {CR_MAX}", fmt(&m)),
    });

    let m = radius.report.medians("radius_gap");
    lines.push(Line {
        name: "nearest-neighbor radius law (radius_gap)",
        pass: strictly_decreasing(&m),
        detail: format!("medians {} strictly decreasing", fmt(&m)),
    });

    // Report in criterion order: the five oracle checks, determinism, then trends.
    let passed = lines.iter().filter(|l| l.pass).count();
    for (i, l) in lines.iter().enumerate() {
        let tag = if l.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {:>2}. {}: {}", i + 1, l.name, l.detail);
    }
    println!(
        "acceptance: {passed}/{} passed in {:.0}s",
        lines.len(),
        total.elapsed().as_secs_f64()
    );
    if passed < lines.len() && std::env::var("QPROC_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
