//! Acceptance suite: one test per criterion, each printing a single
//! PASS/FAIL line (run with `--nocapture` to see lines for passing tests).

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ehsched::{
    brute_force_throughput, competitive_report, discretization_study, max_throughput_by,
    offline_completion_time_with, parse_scenario, property_sweep, simulate_alg1, simulate_alg2,
    tight_instance, CumulativeCurve, RateFunction, Scenario, ScenarioFamily,
};

fn fig1() -> Scenario {
    parse_scenario(include_str!("../../../scenarios/fig1.scn")).unwrap()
}

struct Checks {
    name: &'static str,
    items: Vec<(String, bool)>,
}

impl Checks {
    fn new(name: &'static str) -> Self {
        Self { name, items: Vec::new() }
    }

    fn check(&mut self, label: impl Into<String>, ok: bool) {
        self.items.push((label.into(), ok));
    }

    fn finish(self) {
        let ok = self.items.iter().all(|(_, ok)| *ok);
        let detail: Vec<String> = self
            .items
            .iter()
            .map(|(label, ok)| format!("{label} [{}]", if *ok { "ok" } else { "FAIL" }))
            .collect();
        println!(
            "criterion {}: {} — {}",
            self.name,
            if ok { "PASS" } else { "FAIL" },
            detail.join("; ")
        );
        assert!(ok, "criterion {} failed: {}", self.name, detail.join("; "));
    }
}

#[test]
fn criterion_1_fig1_reproduction() {
    let start = Instant::now();
    let s = fig1();
    let r = competitive_report(&s, 2000).unwrap();
    let elapsed = start.elapsed();
    let mut c = Checks::new("1 (quadratic-energy reference scenario)");
    c.check(format!("T_off = {:.4} within 0.97±0.02", r.t_off), (r.t_off - 0.97).abs() <= 0.02);
    c.check(format!("T_on2 = {:.4} within 1.21±0.02", r.t_on2), (r.t_on2 - 1.21).abs() <= 0.02);
    c.check(
        format!("ratio2 = {:.4} within 1.24±0.03", r.ratio2),
        (r.ratio2 - 1.24).abs() <= 0.03,
    );
    c.check(
        format!("T_s2 = {:.4} equals T_off within 0.01", r.t_s2),
        (r.t_s2 - r.t_off).abs() <= 0.01,
    );
    c.check(format!("runtime {:.1}s under 10s", elapsed.as_secs_f64()), elapsed.as_secs_f64() < 10.0);
    c.finish();
}

#[test]
fn criterion_2_tight_instance() {
    let r = competitive_report(&tight_instance(), 2000).unwrap();
    let mut c = Checks::new("2 (ratio-2 witness)");
    c.check(format!("T_off = {:.4} within 1.000±1e-3", r.t_off), (r.t_off - 1.0).abs() <= 1e-3);
    c.check(format!("T_on2 = {:.4} within 2.000±5e-3", r.t_on2), (r.t_on2 - 2.0).abs() <= 5e-3);
    c.check(format!("ratio2 = {:.4} within 2.000±5e-3", r.ratio2), (r.ratio2 - 2.0).abs() <= 5e-3);
    c.check(format!("T_on1 = {:.4} within 1.000±5e-3", r.t_on1), (r.t_on1 - 1.0).abs() <= 5e-3);
    c.finish();
}

#[test]
fn criterion_3_property_sweep() {
    let start = Instant::now();
    let summary = property_sweep(&ScenarioFamily::new(42, 200), 600);
    let elapsed = start.elapsed();
    let mut c = Checks::new("3 (200-scenario property sweep, seed 42)");
    c.check(summary.verdict_line(), summary.pass());
    c.check(
        format!("runtime {:.0}s under 300s", elapsed.as_secs_f64()),
        elapsed.as_secs_f64() < 300.0,
    );
    c.finish();
}

#[test]
fn criterion_4_offline_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut c = Checks::new("4 (offline solver vs brute-force oracle)");
    let mut worst_gap = 0.0f64;
    let mut worst_bound = f64::NEG_INFINITY;
    for _ in 0..20 {
        let horizon = rng.gen_range(1.5..4.0);
        let n_extra = rng.gen_range(0..=2usize);
        let mut jumps = vec![(0.0, rng.gen_range(0.5..5.0))];
        for _ in 0..n_extra {
            jumps.push((rng.gen_range(0.2..0.8) * horizon, rng.gen_range(0.5..5.0)));
        }
        let e_total: f64 = jumps.iter().map(|&(_, v)| v).sum();
        let energy = CumulativeCurve::new(Vec::new(), jumps, horizon).unwrap();
        let data = CumulativeCurve::initial_amount(1e6, horizon).unwrap();
        let s = Scenario::new(
            1.0,
            energy,
            data,
            RateFunction::Log2OnePlus,
            horizon,
            Scenario::default_step(horizon),
            Scenario::DEFAULT_TOL_BITS,
            Scenario::DEFAULT_TOL_ENERGY,
        )
        .unwrap();
        let solver = max_throughput_by(horizon, &s, 600).unwrap();
        let oracle = brute_force_throughput(horizon, &s, 3, 60).unwrap();
        worst_gap = worst_gap.max((oracle - solver) / oracle);
        let bound = horizon * s.rate.eval(e_total / horizon).unwrap();
        worst_bound = worst_bound.max(solver - bound);
    }
    c.check(format!("worst solver shortfall {:.2}% within 1%", worst_gap * 100.0), worst_gap <= 0.01);
    c.check(
        format!("solver never above T*r(E_total/T) (worst excess {worst_bound:.2e} bits)"),
        worst_bound <= 1e-6,
    );
    c.finish();
}

#[test]
fn criterion_5_discretization_study() {
    let s = fig1();
    let rows = discretization_study(&s, &[0.5, 0.25, 0.1], 800);
    let get = |i: usize| rows[i].outcome.clone().expect("row solvable");
    let (t_off, t_on2) = get(0);
    let (o50, n50) = get(1);
    let (o25, n25) = get(2);
    let (o10, n10) = get(3);
    let mut c = Checks::new("5 (staircase discretization study)");
    for (delta, od, nd) in [(0.5, o50, n50), (0.25, o25, n25), (0.1, o10, n10)] {
        c.check(
            format!("delta {delta}: T_off^d = {od:.4} >= {t_off:.4} and T_on2^d = {nd:.4} >= {t_on2:.4}"),
            od >= t_off - 1e-6 && nd >= t_on2 - 1e-6,
        );
    }
    // monotone convergence along nested grids (0.25 | 0.5 and 0.1 | 0.5)
    let tol = 1e-3;
    c.check(
        format!("nested grids: T_off 0.25→{o25:.4} ≤ 0.5→{o50:.4}, 0.1→{o10:.4} ≤ 0.5"),
        o25 <= o50 + tol && o10 <= o50 + tol,
    );
    c.check(
        format!("nested grids: T_on2 0.25→{n25:.4} ≤ 0.5→{n50:.4}, 0.1→{n10:.4} ≤ 0.5"),
        n25 <= n50 + tol && n10 <= n50 + tol,
    );
    c.check(
        format!(
            "finest grid closest to continuous (|{o10:.4}-{t_off:.4}| < |{o50:.4}-{t_off:.4}|)"
        ),
        (o10 - t_off).abs() < (o50 - t_off).abs() && (n10 - t_on2).abs() < (n50 - t_on2).abs(),
    );
    c.finish();
}

#[test]
fn criterion_6_numerical_self_consistency() {
    let mut c = Checks::new("6 (step and grid refinement stability)");
    for (name, s) in [("reference", fig1()), ("witness", tight_instance())] {
        let mut half = s.clone();
        half.step = s.step / 2.0;
        let t1 = simulate_alg1(&s).unwrap().completion_time.unwrap();
        let t1h = simulate_alg1(&half).unwrap().completion_time.unwrap();
        let t2 = simulate_alg2(&s).unwrap().completion_time.unwrap();
        let t2h = simulate_alg2(&half).unwrap().completion_time.unwrap();
        let d1 = (t1 - t1h).abs() / t1;
        let d2 = (t2 - t2h).abs() / t2;
        c.check(
            format!("{name}: step halving moves T_on1 {:.3e}, T_on2 {:.3e} (≤1e-3)", d1, d2),
            d1 <= 1e-3 && d2 <= 1e-3,
        );
        let o1 = offline_completion_time_with(&s, 2000).unwrap().completion_time;
        let o2 = offline_completion_time_with(&s, 4000).unwrap().completion_time;
        let doff = (o1 - o2).abs() / o1;
        c.check(
            format!("{name}: grid doubling moves T_off {:.3e} (≤5e-3)", doff),
            doff <= 5e-3,
        );
    }
    c.finish();
}
