//! Competitive-ratio reports, the randomized property sweep, and the
//! discretization study.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::curve::{CumulativeCurve, Piece, Segment};
use crate::error::{Error, Result};
use crate::offline::{offline_completion_time_with, OfflineSolution};
use crate::policy::{
    simulate_alg1, simulate_alg2, waiting_time_alg1, waiting_time_alg2, Phase, PolicyTrajectory,
    Scenario,
};
use crate::rate::RateFunction;

/// One named invariant check with its measured slack (positive = margin).
#[derive(Debug, Clone)]
pub struct Verdict {
    pub name: &'static str,
    pub pass: bool,
    pub slack: f64,
}

/// Everything the theory predicts about one scenario, measured.
#[derive(Debug, Clone)]
pub struct CompetitiveReport {
    pub t_s1: f64,
    pub t_s2: f64,
    pub t_off: f64,
    pub t_on1: f64,
    pub t_on2: f64,
    pub ratio1: f64,
    pub ratio2: f64,
    pub verdicts: Vec<Verdict>,
    pub dominance_max_violation: f64,
    pub offline: OfflineSolution,
    pub alg1: PolicyTrajectory,
    pub alg2: PolicyTrajectory,
}

impl CompetitiveReport {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

/// Time slop for comparisons involving the offline solver: one integration
/// step (online bias) plus a few grid cells (the discretized offline problem
/// relaxes energy to the end of each cell) plus the bisection tolerance.
fn time_tolerance(s: &Scenario, grid_step: f64) -> f64 {
    s.step + 4.0 * grid_step + 1e-6 * s.horizon
}

fn check_causality(s: &Scenario, traj: &PolicyTrajectory) -> Verdict {
    let mut slack = f64::INFINITY;
    for i in 0..traj.times.len() {
        let t = traj.times[i].min(s.horizon);
        let e_margin = s.energy.eval_unchecked(t) + s.tol_energy - traj.energy_used[i];
        let b_margin = s.data.eval_unchecked(t) + s.tol_bits - traj.data_sent[i];
        slack = slack.min(e_margin).min(b_margin);
    }
    Verdict { name: "causality", pass: slack >= 0.0, slack }
}

/// Runs both policies and the offline solver, then measures every invariant
/// the theory promises: the 2-competitive bound, waiting-time ordering,
/// nondecreasing second-policy power, and first-policy dominance.
pub fn competitive_report(s: &Scenario, n_grid: usize) -> Result<CompetitiveReport> {
    let offline = offline_completion_time_with(s, n_grid)?;
    let t_off = offline.completion_time;
    let w1 = waiting_time_alg1(s)?;
    let t_s2 = waiting_time_alg2(s)?;
    let alg1 = simulate_alg1(s)?;
    let alg2 = simulate_alg2(s)?;
    let t_on1 = alg1.completion_time.ok_or_else(|| {
        Error::Infeasible(format!("eager policy did not complete within the horizon {}", s.horizon))
    })?;
    let t_on2 = alg2.completion_time.ok_or_else(|| {
        Error::Infeasible(format!(
            "wait-for-all-data policy did not complete within the horizon {}",
            s.horizon
        ))
    })?;

    let tol_t = time_tolerance(s, offline.grid_step);
    let mut verdicts = Vec::new();

    let slack = 2.0 * t_off + tol_t - t_on2;
    verdicts.push(Verdict { name: "ratio2_le_2", pass: slack >= 0.0, slack });

    let slack = t_s2 + 1e-9 - w1.time;
    verdicts.push(Verdict { name: "ts1_le_ts2", pass: slack >= 0.0, slack });

    let slack = t_off + tol_t - t_s2;
    verdicts.push(Verdict { name: "ts2_le_toff", pass: slack >= 0.0, slack });

    // second-policy power nondecreasing over the transmission phase
    let mut pslack = f64::INFINITY;
    let mut prev: Option<f64> = None;
    for i in 0..alg2.times.len() {
        if alg2.phase[i] == Phase::Tx && alg2.times[i] < t_on2 - 1e-12 && alg2.power[i] > 0.0 {
            if let Some(pp) = prev {
                pslack = pslack.min(alg2.power[i] - pp);
            }
            prev = Some(alg2.power[i]);
        }
    }
    if pslack == f64::INFINITY {
        pslack = 0.0;
    }
    verdicts.push(Verdict { name: "alg2_power_nondecreasing", pass: pslack >= -1e-9, slack: pslack });

    // dominance: the wait-for-all-data policy never leads the eager one
    let mut viol: f64 = 0.0;
    for (i, &t) in alg2.times.iter().enumerate() {
        viol = viol.max(alg2.data_sent[i] - alg1.sent_at(t));
    }
    verdicts.push(Verdict {
        name: "alg2_never_leads",
        pass: viol <= s.tol_bits,
        slack: s.tol_bits - viol,
    });

    verdicts.push(check_causality(s, &alg1));
    verdicts.push(check_causality(s, &alg2));

    Ok(CompetitiveReport {
        t_s1: w1.time,
        t_s2,
        t_off,
        t_on1,
        t_on2,
        ratio1: t_on1 / t_off,
        ratio2: t_on2 / t_off,
        verdicts,
        dominance_max_violation: viol,
        offline,
        alg1,
        alg2,
    })
}

/// The ratio-2 witness: a single 3 J energy jump and all 2 bits at t = 0
/// under log2(1+p). Constant-power completion of (3 J, 2 bits) takes exactly
/// 1 s, so the wait-for-all-data policy starts at t = 1 and finishes at 2
/// while the offline schedule finishes at 1.
pub fn tight_instance() -> Scenario {
    let horizon = 3.0;
    Scenario::new(
        2.0,
        CumulativeCurve::initial_amount(3.0, horizon).unwrap(),
        CumulativeCurve::initial_amount(2.0, horizon).unwrap(),
        RateFunction::Log2OnePlus,
        horizon,
        Scenario::default_step(horizon),
        Scenario::DEFAULT_TOL_BITS,
        Scenario::DEFAULT_TOL_ENERGY,
    )
    .unwrap()
}

/// Randomized scenario generator: polynomial / exponential / jump curves in
/// bounded ranges, target sized as a fraction of the data that arrives.
#[derive(Debug, Clone)]
pub struct ScenarioFamily {
    pub seed: u64,
    pub count: usize,
}

impl ScenarioFamily {
    pub fn new(seed: u64, count: usize) -> Self {
        Self { seed, count }
    }

    fn random_curve(rng: &mut ChaCha8Rng, horizon: f64) -> Option<CumulativeCurve> {
        let mut segments = Vec::new();
        let mut jumps = Vec::new();
        match rng.gen_range(0..4u32) {
            0 => {
                // polynomial, nonnegative coefficients so monotone on t >= 0
                let deg = rng.gen_range(1..=3usize);
                let coeffs: Vec<f64> = (0..=deg).map(|_| rng.gen_range(0.0..4.0)).collect();
                segments.push(Segment { start: 0.0, end: horizon, piece: Piece::Poly(coeffs) });
            }
            1 => {
                let a = rng.gen_range(0.1..2.0);
                let b = rng.gen_range(0.1..1.2);
                let k = rng.gen_range(1.0..3.0);
                segments.push(Segment { start: 0.0, end: horizon, piece: Piece::Exp { a, b, k } });
            }
            2 => {
                // polynomial plus jumps
                let coeffs = vec![0.0, rng.gen_range(0.0..3.0)];
                segments.push(Segment { start: 0.0, end: horizon, piece: Piece::Poly(coeffs) });
                for _ in 0..rng.gen_range(1..=3usize) {
                    jumps.push((rng.gen_range(0.0..0.8 * horizon), rng.gen_range(0.2..4.0)));
                }
            }
            _ => {
                for _ in 0..rng.gen_range(1..=5usize) {
                    jumps.push((rng.gen_range(0.0..0.8 * horizon), rng.gen_range(0.2..4.0)));
                }
            }
        }
        CumulativeCurve::new(segments, jumps, horizon).ok()
    }

    /// Generates the scenario for one seed, rejecting draws whose curves are
    /// degenerate or whose policies cannot finish well inside the horizon.
    pub fn scenario_for_seed(seed: u64) -> Scenario {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..10_000 {
            let horizon = rng.gen_range(1.0..4.0);
            let Some(energy) = Self::random_curve(&mut rng, horizon) else { continue };
            let Some(data) = Self::random_curve(&mut rng, horizon) else { continue };
            let total_data = data.eval_unchecked(horizon);
            if total_data <= 0.05 || energy.eval_unchecked(horizon) <= 0.05 {
                continue;
            }
            let b0 = rng.gen_range(0.2..0.9) * total_data;
            let Ok(s) = Scenario::new(
                b0,
                energy,
                data,
                RateFunction::Log2OnePlus,
                horizon,
                Scenario::default_step(horizon),
                Scenario::DEFAULT_TOL_BITS,
                Scenario::DEFAULT_TOL_ENERGY,
            ) else {
                continue;
            };
            // keep only scenarios with comfortable completion headroom
            let Ok(t_s2) = waiting_time_alg2(&s) else { continue };
            if t_s2 > 0.45 * horizon {
                continue;
            }
            let Ok(a2) = simulate_alg2(&s) else { continue };
            if a2.completion_time.is_none() {
                continue;
            }
            let Ok(a1) = simulate_alg1(&s) else { continue };
            if a1.completion_time.is_none() {
                continue;
            }
            return s;
        }
        unreachable!("scenario generator failed to produce a valid draw for seed {seed}");
    }

    /// Seeds covered by this family; seed 0 is always the ratio-2 witness.
    pub fn seeds(&self) -> Vec<u64> {
        let mut v = vec![0];
        v.extend((0..self.count as u64).map(|i| self.seed + i));
        v
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub seed: u64,
    pub report: std::result::Result<CompetitiveReport, String>,
}

#[derive(Debug, Clone)]
pub struct SweepSummary {
    pub rows: Vec<SweepRow>,
    pub worst_ratio2: f64,
    pub worst_dominance: f64,
    pub failing_seeds: Vec<u64>,
}

impl SweepSummary {
    pub fn pass(&self) -> bool {
        self.failing_seeds.is_empty()
    }

    /// `seed,T_off,T_on1,T_on2,ratio1,ratio2,verdicts` with verdicts as
    /// semicolon-joined `name=ok/FAIL` pairs.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("seed,T_off,T_on1,T_on2,ratio1,ratio2,verdicts\n");
        for row in &self.rows {
            match &row.report {
                Ok(r) => {
                    let verdicts: Vec<String> = r
                        .verdicts
                        .iter()
                        .map(|v| format!("{}={}", v.name, if v.pass { "ok" } else { "FAIL" }))
                        .collect();
                    out.push_str(&format!(
                        "{},{:.6},{:.6},{:.6},{:.6},{:.6},{}\n",
                        row.seed, r.t_off, r.t_on1, r.t_on2, r.ratio1, r.ratio2,
                        verdicts.join(";")
                    ));
                }
                Err(e) => {
                    out.push_str(&format!("{},,,,,,error: {}\n", row.seed, e.replace(',', ";")));
                }
            }
        }
        out
    }

    /// One-line PASS/FAIL verdict with the worst observed slacks.
    pub fn verdict_line(&self) -> String {
        if self.pass() {
            format!(
                "PASS: {} scenarios, worst ratio2 = {:.4}, worst dominance violation = {:.3e} bits",
                self.rows.len(),
                self.worst_ratio2,
                self.worst_dominance
            )
        } else {
            format!(
                "FAIL: {} of {} scenarios violated invariants (seeds {:?}), worst ratio2 = {:.4}",
                self.failing_seeds.len(),
                self.rows.len(),
                self.failing_seeds,
                self.worst_ratio2
            )
        }
    }
}

/// Evaluates every scenario of the family concurrently and aggregates the
/// invariant verdicts; rows are sorted by seed so output is deterministic.
pub fn property_sweep(family: &ScenarioFamily, n_grid: usize) -> SweepSummary {
    let mut rows: Vec<SweepRow> = family
        .seeds()
        .into_par_iter()
        .map(|seed| {
            let s = if seed == 0 {
                tight_instance()
            } else {
                ScenarioFamily::scenario_for_seed(seed)
            };
            let report = competitive_report(&s, n_grid).map_err(|e| e.to_string());
            SweepRow { seed, report }
        })
        .collect();
    rows.sort_by_key(|r| r.seed);

    let mut worst_ratio2 = 0.0f64;
    let mut worst_dominance = 0.0f64;
    let mut failing = Vec::new();
    for row in &rows {
        match &row.report {
            Ok(r) => {
                worst_ratio2 = worst_ratio2.max(r.ratio2);
                worst_dominance = worst_dominance.max(r.dominance_max_violation);
                if !r.all_pass() {
                    failing.push(row.seed);
                }
            }
            Err(_) => failing.push(row.seed),
        }
    }
    SweepSummary { rows, worst_ratio2, worst_dominance, failing_seeds: failing }
}

/// One row of the discretization study; `delta == 0` is the continuous case.
#[derive(Debug, Clone)]
pub struct DiscretizationRow {
    pub delta: f64,
    pub outcome: std::result::Result<(f64, f64), String>, // (T_off, T_on2)
}

/// Recomputes T_off and T_on2 with both curves replaced by their
/// staircase-below discretizations, for each period.
pub fn discretization_study(
    s: &Scenario,
    periods: &[f64],
    n_grid: usize,
) -> Vec<DiscretizationRow> {
    let mut rows = Vec::new();
    let solve = |s: &Scenario| -> std::result::Result<(f64, f64), String> {
        let off = offline_completion_time_with(s, n_grid).map_err(|e| e.to_string())?;
        let a2 = simulate_alg2(s).map_err(|e| e.to_string())?;
        let t_on2 = a2
            .completion_time
            .ok_or_else(|| "policy did not complete within the horizon".to_string())?;
        Ok((off.completion_time, t_on2))
    };
    rows.push(DiscretizationRow { delta: 0.0, outcome: solve(s) });
    for &delta in periods {
        let outcome = (|| {
            if !(delta > 0.0) {
                return Err(format!("period must be positive, got {delta}"));
            }
            let energy = s.energy.discretize(delta).map_err(|e| e.to_string())?;
            let data = s.data.discretize(delta).map_err(|e| e.to_string())?;
            let sd = Scenario::new(
                s.b0, energy, data, s.rate.clone(), s.horizon, s.step, s.tol_bits, s.tol_energy,
            )
            .map_err(|e| e.to_string())?;
            solve(&sd)
        })();
        rows.push(DiscretizationRow { delta, outcome });
    }
    rows
}

/// CSV export of the study: `delta,T_off,T_on2` with error rows annotated.
pub fn discretization_csv(rows: &[DiscretizationRow]) -> String {
    let mut out = String::from("delta,T_off,T_on2\n");
    for row in rows {
        match &row.outcome {
            Ok((t_off, t_on2)) => out.push_str(&format!("{},{:.6},{:.6}\n", row.delta, t_off, t_on2)),
            Err(e) => out.push_str(&format!("{},error: {},\n", row.delta, e.replace(',', ";"))),
        }
    }
    out
}
