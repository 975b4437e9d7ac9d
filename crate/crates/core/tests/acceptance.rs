//! Acceptance criteria, one line each.
//!
//! Runs without the test harness, so the lines are always printed and the
//! criteria run sequentially with undistorted runtimes. Two
//! stated inequalities are false near the origin; their criteria are
//! evaluated as stated and reported as FAIL, and the test instead asserts
//! that the failure is exactly the known counterexample while the lower
//! bounds and the corrected upper bounds hold.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use volterra::heat::{heat_coefficients, mehler_oracle, mehler_taylor};
use volterra::kernel::{inverse_fourier_kernel, volterra_check, KernelGrid, Quadrature};
use volterra::parametrix::{compose_check, parametrix_components, OperatorSpec};
use volterra::summation::{
    aeps_expansion, analytic_sum, check_shift_sandwich, cutoff_sum, pad_orders, recompose,
    shift_gain_report, solve_r_graded, solve_r_polyhom, translation_sum, CutoffProfile, Method,
    SummationConfig,
};
use volterra::symbol::{
    check_analyticity, check_expansion_estimates, check_homogeneity, check_pseudo_norm_sandwich,
    check_rho_bounds, pseudo_norm, AepsSymbol, AnalyticityGrid, EstimateMode, ExpansionEntry,
    GridPolicy, HomogeneousSymbol, SymbolExpansion,
};
use volterra::{Context, EvalPoint, SymExpr};

const ULP4: f64 = 4.0 * f64::EPSILON;
const GAUSS_PIN: f64 = 0.282_094_791_773_878_14;

/// Criteria whose stated inequality is false; see `pseudo_norm_sandwich`
/// and `shift_laws`.
const KNOWN_FALSE: [usize; 2] = [2, 11];

struct Outcome {
    id: usize,
    name: &'static str,
    pass: bool,
    /// For criteria in `KNOWN_FALSE`: the failure is the expected one and
    /// everything else in the criterion holds.
    expected_failure: bool,
    detail: String,
    elapsed: Duration,
    limit: Option<Duration>,
}

fn run(
    id: usize,
    name: &'static str,
    limit: Option<u64>,
    f: impl FnOnce() -> (bool, bool, String),
) -> Outcome {
    let start = Instant::now();
    let (ok, expected_failure, detail) = f();
    let elapsed = start.elapsed();
    let limit = limit.map(Duration::from_secs);
    let in_time = limit.is_none_or(|l| elapsed < l);
    let o = Outcome {
        id,
        name,
        pass: ok && in_time,
        expected_failure,
        detail,
        elapsed,
        limit,
    };
    let budget = o.limit.map_or(String::new(), |l| format!(" / {} s", l.as_secs()));
    println!(
        "criterion {:>2} {:<28} {}  [{:.2} s{}]  {}",
        o.id,
        o.name,
        if o.pass { "PASS" } else { "FAIL" },
        o.elapsed.as_secs_f64(),
        budget,
        o.detail
    );
    o
}

fn ctx() -> Context {
    Context::euclidean(1, 2).unwrap()
}

fn p(s: &str) -> SymExpr {
    ctx().parse(s).unwrap()
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn operator(name: &str) -> OperatorSpec {
    OperatorSpec::from_json(&std::fs::read_to_string(data(name)).unwrap()).unwrap()
}

fn homogeneity() -> (bool, bool, String) {
    let mut worst = 0.0f64;
    let mut checked = 0;
    for file in ["laplace1d.json", "oscillator1d.json"] {
        let comps = parametrix_components(&operator(file), 4).unwrap();
        for (j, q) in comps.components.iter().enumerate() {
            let r = check_homogeneity(q, 1000, 100 + j as u64).unwrap();
            worst = worst.max(r.max_c());
            checked += 1;
        }
    }
    (worst <= 1e-10, false, format!("{checked} components, max relative defect {worst:.2e}"))
}

fn pseudo_norm_sandwich() -> (bool, bool, String) {
    let mut stated = true;
    let mut lower = 0.0f64;
    let mut upper = 0.0f64;
    let mut corrected = 0.0f64;
    for (n, w) in [(1, 2), (2, 2), (1, 4)] {
        let r = check_pseudo_norm_sandwich(10_000, 17, n, w);
        stated &= r.pass;
        lower = lower.max(r.table[0].c);
        upper = upper.max(r.table[1].c);
        corrected = corrected.max(r.table[2].c);
    }
    // ξ = 0, τ = −0.01i: 1 + ‖ξ,τ‖ = 1.1 against 1 + |ξ| + |τ| = 1.01.
    let mid = 1.0 + pseudo_norm(&[0.0], Complex64::new(0.0, -0.01), 2).unwrap();
    let witness = (mid - 1.1).abs() < 1e-12;
    let expected = !stated && upper > 1.0 && lower <= 1.0 + ULP4 && corrected <= 1.0 + ULP4 && witness;
    (
        stated,
        expected,
        format!(
            "3x10^4 samples; lower ratio {lower:.6}, upper ratio {upper:.4} (stated upper bound false, \
             e.g. xi=0, tau=-0.01i gives {mid:.3} > 1.01), with factor 2 {corrected:.6}"
        ),
    )
}

fn rho_bounds() -> (bool, bool, String) {
    let mut pass = true;
    let mut parts = Vec::new();
    for w in [2u32, 4] {
        for n in [1usize, 2] {
            let r = check_rho_bounds(10_000, 23, n, w);
            pass &= r.pass;
            parts.push(format!("w={w} n={n} margin {:.2e}", r.margin));
        }
    }
    (pass, false, parts.join(", "))
}

fn aeps_remainder() -> (bool, bool, String) {
    let mut pass = true;
    let mut worst = 0.0f64;
    for eps in [1.0, 2.0] {
        let q = AepsSymbol::new(eps, 2, SymExpr::one(1));
        for big_j in 1..=4usize {
            let terms = aeps_expansion(1, 2, eps, big_j).unwrap();
            let exp = SymbolExpansion::polyhomogeneous(ctx(), 0, terms).unwrap();
            let r = check_expansion_estimates(&q, &exp, big_j, 0, EstimateMode::HalfPlane, &GridPolicy::default())
                .unwrap();
            pass &= r.pass;
            worst = worst.max(2.0 - r.margin);
        }
    }
    (pass, false, format!("eps in {{1,2}}, J=1..4, worst growth per decade {worst:.3}"))
}

fn random_points(count: usize, seed: u64) -> Vec<EvalPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            EvalPoint::d1(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-2.0..2.0),
                Complex64::new(rng.gen_range(-2.0..2.0), -rng.gen_range(0.0..2.0)),
            )
            .unwrap()
        })
        .collect()
}

fn max_relative(a: &[SymExpr], b: &[SymExpr], pts: &[EvalPoint]) -> f64 {
    let mut worst = 0.0f64;
    for (qa, qb) in a.iter().zip(b) {
        for pt in pts {
            let (x, y) = (qa.evaluate(pt).unwrap(), qb.evaluate(pt).unwrap());
            let d = (x - y).norm();
            if d > 0.0 {
                worst = worst.max(d / x.norm().max(1e-300));
            }
        }
    }
    worst
}

fn round_trips() -> (bool, bool, String) {
    let pts = random_points(100, 11);
    let poly = [
        p("THETA^(-1)"),
        p("xi1*THETA^(-2)"),
        p("x1^2*THETA^(-2)"),
        p("(2i)*xi1^3*THETA^(-4) + x1*xi1*THETA^(-3)"),
        p("THETA^(-3) + xi1^2*THETA^(-4)"),
    ];
    let mut worst = 0.0f64;
    let mut cases = 0;
    for depth in 1..=5 {
        let exp = SymbolExpansion::polyhomogeneous(ctx(), -2, poly[..depth].to_vec()).unwrap();
        let eps: Vec<f64> = (0..depth).map(|j| 2f64.powi(j as i32 % 3)).collect();
        let r = solve_r_polyhom(&exp, &eps).unwrap();
        let back = recompose(&exp.orders(), &r, &eps, Method::AnalyticAeps, 2).unwrap();
        worst = worst.max(max_relative(&exp.exprs(), &back, &pts));
        cases += 1;
    }
    let graded_exprs = [
        p("THETA^(-1/2)"),
        p("xi1*THETA^(-1)"),
        p("x1*THETA^(-3/2)"),
        p("THETA^(-2)"),
        p("xi1^2*THETA^(-3)"),
    ];
    let orders = [-1.0, -1.5, -3.0, -4.0, -4.5];
    for method in [Method::AnalyticAeps, Method::Translation] {
        let step = if method == Method::Translation { 2.0 } else { 1.0 };
        for depth in 1..=5 {
            let entries = orders[..depth]
                .iter()
                .zip(&graded_exprs)
                .map(|(&order, expr)| ExpansionEntry { order, expr: expr.clone() })
                .collect();
            let exp = SymbolExpansion::graded(ctx(), entries).unwrap();
            let padded = pad_orders(&exp, step).unwrap();
            let weights: Vec<f64> = (0..padded.len()).map(|j| 1.0 + j as f64).collect();
            let r = solve_r_graded(&padded, &weights, method).unwrap();
            let back = recompose(&padded.orders(), &r, &weights, method, 2).unwrap();
            worst = worst.max(max_relative(&padded.exprs(), &back, &pts));
            cases += 1;
        }
    }
    (worst <= 1e-12, false, format!("{cases} expansions x 100 points, max relative error {worst:.2e}"))
}

fn fast_cfg() -> SummationConfig {
    SummationConfig {
        budget: 2,
        ..SummationConfig::default()
    }
}

fn analyticity_dichotomy() -> (bool, bool, String) {
    let exp = SymbolExpansion::polyhomogeneous(ctx(), -2, vec![p("THETA^(-1)"), p("xi1*THETA^(-2)")]).unwrap();
    let grid = AnalyticityGrid::standard(1);
    let cfg = fast_cfg();
    let a = check_analyticity(&analytic_sum(&exp, &cfg).unwrap(), &grid).unwrap().max_c();
    let t = check_analyticity(&translation_sum(&exp, &cfg).unwrap(), &grid).unwrap().max_c();
    let c = check_analyticity(&cutoff_sum(&exp, &CutoffProfile::standard(), &cfg).unwrap(), &grid)
        .unwrap()
        .max_c();
    (
        a <= 1e-6 && t <= 1e-6 && c >= 1e-2,
        false,
        format!("residuals: analytic {a:.2e}, translation {t:.2e}, cutoff {c:.2e}"),
    )
}

fn kernel_dichotomy() -> (bool, bool, String) {
    let exp = SymbolExpansion::polyhomogeneous(ctx(), -2, vec![p("THETA^(-1)")]).unwrap();
    let cfg = SummationConfig::default();
    let mut ts = KernelGrid::linspace(-2.0, -0.1, 20);
    ts.extend(KernelGrid::linspace(0.1, 2.0, 20));
    let grid = KernelGrid::new(0.0, vec![0.0, 0.5, 1.0], ts).unwrap();
    let quad = Quadrature::default();
    let window = (-2.0, -0.1);
    let check = |method: Method| {
        let q = match method {
            Method::AnalyticAeps => analytic_sum(&exp, &cfg).unwrap(),
            Method::Translation => translation_sum(&exp, &cfg).unwrap(),
            Method::Cutoff => cutoff_sum(&exp, &CutoffProfile::standard(), &cfg).unwrap(),
        };
        let sigma = if method == Method::Cutoff { 0.0 } else { 1.0 };
        let k = inverse_fourier_kernel(&q, 2, &grid, sigma, &quad).unwrap();
        volterra_check(&k, window, 1e-5).unwrap()
    };
    let a = check(Method::AnalyticAeps);
    let t = check(Method::Translation);
    let c = check(Method::Cutoff);
    (
        a.pass && t.pass && c.excess >= 1e3,
        false,
        format!(
            "negative/positive ratio over 1e-5: analytic {:.2e}, translation {:.2e}, cutoff {:.2e}",
            a.excess, t.excess, c.excess
        ),
    )
}

fn gaussian_pin() -> (bool, bool, String) {
    let q = volterra::symbol::ExprSymbol::new(p("THETA^(-1)"));
    let grid = KernelGrid::new(0.0, vec![0.0, 0.5], KernelGrid::linspace(0.5, 2.0, 7)).unwrap();
    let quad = Quadrature::default();
    let k1 = inverse_fourier_kernel(&q, 2, &grid, 1.0, &quad).unwrap();
    let k2 = inverse_fourier_kernel(&q, 2, &grid, 2.0, &quad).unwrap();
    let pin = k1.value_at(0.0, 1.0).unwrap();
    let pin_err = (pin - GAUSS_PIN).norm();
    let drift = k1
        .samples
        .iter()
        .zip(&k2.samples)
        .map(|(a, b)| (a.value() - b.value()).norm())
        .fold(0.0, f64::max);
    (
        pin_err <= 1e-4 && drift <= 1e-5,
        false,
        format!("k(0,1) = {:.9} (error {pin_err:.1e}), sigma 1 vs 2 max difference {drift:.1e}", pin.re),
    )
}

fn parametrix_exactness() -> (bool, bool, String) {
    let mut exact = true;
    for file in ["laplace1d.json", "oscillator1d.json"] {
        let s = operator(file);
        let comps = parametrix_components(&s, 4).unwrap();
        exact &= compose_check(&s, &comps, 4).unwrap().is_exact();
    }
    let s = operator("oscillator1d.json");
    let mut comps = parametrix_components(&s, 4).unwrap();
    let flipped = comps.components[2].expr().neg();
    comps.components[2] = HomogeneousSymbol::new(flipped, -4, 2).unwrap();
    let corrupted = compose_check(&s, &comps, 4).unwrap();
    let flagged = !corrupted.is_exact();
    (
        exact && flagged,
        false,
        format!(
            "residual degrees 0..-4 exact: {exact}; corrupted q_-4 flagged at degrees {:?}",
            corrupted.defects()
        ),
    )
}

fn heat() -> (bool, bool, String) {
    let quad = Quadrature::default();
    let lap = heat_coefficients(&operator("laplace1d.json"), 0, &[0.0], &quad).unwrap();
    let c0 = lap.get(0, 0.0).unwrap().re;
    let xs = [0.0, 0.5, 1.0];
    let osc = heat_coefficients(&operator("oscillator1d.json"), 2, &xs, &quad).unwrap();
    let norm = (4.0 * std::f64::consts::PI).sqrt();
    let mut c2_err = 0.0f64;
    let mut taylor_err = 0.0f64;
    let mut c1 = 0.0f64;
    for &x in &xs {
        let c2 = osc.get(2, x).unwrap();
        c2_err = c2_err.max((c2.re + x * x / norm).abs()).max(c2.im.abs());
        // c_2 multiplies t^{1/2}, the linear Taylor term of the normalized oracle.
        let a1 = mehler_taylor(x, 2)[1] / norm;
        taylor_err = taylor_err.max((c2.re - a1).abs());
        let r1 = osc.get(1, x).unwrap();
        c1 = c1.max(r1.re.abs()).max(r1.im.abs());
    }
    // The truncated expansion tracks the closed form at small t.
    let t = 1e-3;
    let series = osc.truncated(t, 1.0);
    let closed = mehler_oracle(t, 1.0).unwrap();
    let rel = (series - closed).abs() / closed;
    (
        (c0 - GAUSS_PIN).abs() <= 1e-4 && c2_err <= 1e-3 && taylor_err <= 1e-3 && c1 <= 1e-6,
        false,
        format!(
            "c0 = {c0:.9}; |c2 + x^2/sqrt(4pi)| <= {c2_err:.1e}; vs oracle Taylor {taylor_err:.1e}; \
             |c1| <= {c1:.1e}; series vs oracle at t=1e-3: {rel:.1e}"
        ),
    )
}

fn shift_laws() -> (bool, bool, String) {
    let mut stated = true;
    let mut lower = 0.0f64;
    let mut upper = 0.0f64;
    let mut corrected = 0.0f64;
    for t in [1.0, 10.0, 100.0] {
        let r = check_shift_sandwich(10_000, 29, t, 1, 2);
        stated &= r.pass;
        lower = lower.max(r.table[0].c);
        upper = upper.max(r.table[1].c);
        corrected = corrected.max(r.table[2].c);
    }
    let gain = shift_gain_report(&p("THETA^(-1)"), -2.0, &[1.0, 10.0, 100.0, 1000.0], 0, &GridPolicy::with_seed(3), 2)
        .unwrap();
    let expected = !stated && upper > 1.0 && lower <= 1.0 + ULP4 && corrected <= 1.0 + ULP4 && gain.pass;
    (
        stated && gain.pass,
        expected,
        format!(
            "sandwich lower ratio {lower:.6}, upper ratio {upper:.4} (stated upper bound false at xi=tau=0: \
             1+T^(1/2) > (1+T)^(1/2)), with 1+T^(1/w) {corrected:.6}; gain {} (margin {:.3})",
            if gain.pass { "bounded" } else { "unbounded" },
            gain.margin
        ),
    )
}

fn cli_suite(dir: &Path) -> Vec<(String, i32)> {
    let bin = env!("CARGO_BIN_EXE_volterra");
    let head = data("head.json");
    let osc = data("oscillator1d.json");
    let out = |name: &str| name.to_string();
    let runs: Vec<(&str, Vec<String>)> = vec![
        ("sum-analytic", vec!["sum".into(), "-i".into(), head.display().to_string(), "--method".into(), "analytic".into(), "-o".into(), out("analytic.json")]),
        ("sum-translation", vec!["sum".into(), "-i".into(), head.display().to_string(), "--method".into(), "translation".into(), "-o".into(), out("translation.json")]),
        ("sum-cutoff", vec!["sum".into(), "-i".into(), head.display().to_string(), "--method".into(), "cutoff".into(), "-o".into(), out("cutoff.json")]),
        ("verify", vec!["verify".into(), "-i".into(), out("analytic.json"), "-o".into(), out("verify.json")]),
        ("verify-cutoff", vec!["verify".into(), "-i".into(), out("cutoff.json"), "--analyticity".into(), "-o".into(), out("verify_cutoff.json")]),
        ("parametrix", vec!["parametrix".into(), "-i".into(), osc.display().to_string(), "--depth".into(), "4".into(), "-o".into(), out("parametrix.json")]),
        ("heat", vec!["heat".into(), "-i".into(), osc.display().to_string(), "--depth".into(), "2".into(), "--xs".into(), "0,0.5".into(), "-o".into(), out("heat.json")]),
        ("kernel", vec!["kernel".into(), "-i".into(), out("analytic.json"), "--t=-1..1".into(), "--t-points".into(), "8".into(), "-o".into(), out("kernel.json")]),
    ];
    runs.into_iter()
        .map(|(name, args)| {
            // Relative paths, since reports echo their input.
            let status = Command::new(bin)
                .current_dir(dir)
                .args(&args)
                .env("VOLTERRA_THREADS", "1")
                .status()
                .unwrap();
            (name.to_string(), status.code().unwrap_or(-1))
        })
        .collect()
}

fn determinism() -> (bool, bool, String) {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let codes_a = cli_suite(a.path());
    let codes_b = cli_suite(b.path());
    let mut files: Vec<_> = std::fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    files.sort();
    let mut identical = codes_a == codes_b && files.len() == codes_a.len();
    for f in &files {
        let (x, y) = (std::fs::read(a.path().join(f)), std::fs::read(b.path().join(f)));
        identical &= matches!((x, y), (Ok(x), Ok(y)) if x == y);
    }
    let codes: Vec<String> = codes_a.iter().map(|(n, c)| format!("{n}={c}")).collect();
    (
        identical,
        false,
        format!("{} reports byte-identical: {identical}; exit codes {}", files.len(), codes.join(" ")),
    )
}

fn main() {
    let outcomes = vec![
        run(1, "homogeneity", Some(10), homogeneity),
        run(2, "pseudo-norm sandwich", Some(1), pseudo_norm_sandwich),
        run(3, "rho sector and bound", Some(2), rho_bounds),
        run(4, "a_eps remainder", Some(5), aeps_remainder),
        run(5, "triangular round trips", Some(5), round_trips),
        run(6, "analyticity dichotomy", Some(10), analyticity_dichotomy),
        run(7, "kernel dichotomy", Some(60), kernel_dichotomy),
        run(8, "gaussian pin", Some(30), gaussian_pin),
        run(9, "parametrix exactness", Some(10), parametrix_exactness),
        run(10, "heat coefficients", Some(120), heat),
        run(11, "shift laws", Some(10), shift_laws),
        run(12, "determinism", None, determinism),
    ];
    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!("{passed}/{} criteria pass", outcomes.len());
    let mut unexpected = Vec::new();
    for o in &outcomes {
        let ok = if KNOWN_FALSE.contains(&o.id) { !o.pass && o.expected_failure } else { o.pass };
        if !ok {
            unexpected.push(o.id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
    println!("criteria {KNOWN_FALSE:?} fail as analysed; all other criteria pass");
}
