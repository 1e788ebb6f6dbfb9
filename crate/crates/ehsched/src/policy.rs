//! The two online transmission policies.
//!
//! Both wait until a start condition holds, then integrate the implicit power
//! law (E_rem / p) * r(p) = B_rem forward with sample-and-hold steps. The
//! first policy starts as soon as finite-time completion is possible and may
//! go silent when it runs out of arrived data; the second waits until every
//! bit has arrived and never goes silent afterwards.

use std::io::Write;

use crate::curve::CumulativeCurve;
use crate::error::{Error, Result};
use crate::rate::RateFunction;

/// Refinement tolerance for waiting-phase instants, in seconds.
const WAIT_REFINE_TOL: f64 = 1e-9;

/// A complete problem instance: target bits, the two arrival curves, the
/// channel rate map, and the numeric knobs.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub b0: f64,
    pub energy: CumulativeCurve,
    pub data: CumulativeCurve,
    pub rate: RateFunction,
    pub horizon: f64,
    pub step: f64,
    pub tol_bits: f64,
    pub tol_energy: f64,
}

impl Scenario {
    pub const DEFAULT_TOL_BITS: f64 = 1e-9;
    pub const DEFAULT_TOL_ENERGY: f64 = 1e-9;

    /// Default integration step is 1e-4 of the horizon.
    pub fn default_step(horizon: f64) -> f64 {
        1e-4 * horizon
    }

    pub fn new(
        b0: f64,
        energy: CumulativeCurve,
        data: CumulativeCurve,
        rate: RateFunction,
        horizon: f64,
        step: f64,
        tol_bits: f64,
        tol_energy: f64,
    ) -> Result<Self> {
        if !(b0 > 0.0) {
            return Err(Error::InvalidScenario(format!("B0 must be positive, got {b0}")));
        }
        if !(horizon > 0.0) {
            return Err(Error::InvalidScenario(format!("horizon must be positive, got {horizon}")));
        }
        if energy.horizon() < horizon || data.horizon() < horizon {
            return Err(Error::InvalidScenario(
                "curves must cover the scenario horizon".into(),
            ));
        }
        if !(step > 0.0) || !(tol_bits > 0.0) || !(tol_energy > 0.0) {
            return Err(Error::InvalidScenario(
                "step and tolerances must be positive".into(),
            ));
        }
        let s = Self { b0, energy, data, rate, horizon, step, tol_bits, tol_energy };
        if s.arrived(horizon) < b0 - tol_bits {
            return Err(Error::InvalidScenario(format!(
                "data curve reaches only {} of B0 = {} bits by the horizon",
                s.data.eval_unchecked(horizon),
                b0
            )));
        }
        Ok(s)
    }

    /// Bits available for transmission by time t. The raw curve may keep
    /// growing past B0; arrivals beyond the target are ignored.
    pub fn arrived(&self, t: f64) -> f64 {
        self.data.eval_unchecked(t).min(self.b0)
    }

    /// Breakpoints of both curves merged; integration steps never cross them.
    fn merged_breakpoints(&self) -> Vec<f64> {
        let mut bps = self.energy.breakpoints();
        bps.extend(self.data.breakpoints());
        bps.retain(|&t| t <= self.horizon);
        bps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        bps.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * self.horizon);
        bps
    }
}

/// Per-sample activity marker used in trajectory exports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Wait,
    Tx,
    Silent,
    Stall,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Wait => "wait",
            Phase::Tx => "tx",
            Phase::Silent => "silent",
            Phase::Stall => "stall",
        }
    }
}

/// Sampled run of a policy. Row i's power is held on [times[i], times[i+1]);
/// data_sent and energy_used are cumulative at times[i].
#[derive(Debug, Clone)]
pub struct PolicyTrajectory {
    pub times: Vec<f64>,
    pub power: Vec<f64>,
    pub data_sent: Vec<f64>,
    pub energy_used: Vec<f64>,
    pub phase: Vec<Phase>,
    pub waiting_end: f64,
    pub completion_time: Option<f64>,
    pub silent_intervals: Vec<(f64, f64)>,
}

impl PolicyTrajectory {
    /// Cumulative bits sent by time t (piecewise linear between samples).
    pub fn sent_at(&self, t: f64) -> f64 {
        interp(&self.times, &self.data_sent, t)
    }

    /// Cumulative joules used by time t.
    pub fn used_at(&self, t: f64) -> f64 {
        interp(&self.times, &self.energy_used, t)
    }

    /// Whether any sample was flagged as a zero-power stall.
    pub fn stalled(&self) -> bool {
        self.phase.iter().any(|&p| p == Phase::Stall)
    }

    /// CSV export: `t,p,B_sent,E_used,phase`, one row per sample.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,p,B_sent,E_used,phase")?;
        for i in 0..self.times.len() {
            writeln!(
                w,
                "{},{},{},{},{}",
                self.times[i],
                self.power[i],
                self.data_sent[i],
                self.energy_used[i],
                self.phase[i].as_str()
            )?;
        }
        Ok(())
    }
}

fn interp(xs: &[f64], ys: &[f64], t: f64) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    if t <= xs[0] {
        return ys[0];
    }
    if t >= *xs.last().unwrap() {
        return *ys.last().unwrap();
    }
    let i = match xs.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
        Ok(i) => return ys[i],
        Err(i) => i - 1,
    };
    let f = (t - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + f * (ys[i + 1] - ys[i])
}

/// Result of a waiting-phase solve. `at_slope_boundary` flags the edge where
/// B0 exactly equals E_s(t) * r'(0): accepted, but completion can be
/// unboundedly slow if no further energy arrives.
#[derive(Debug, Clone, Copy)]
pub struct WaitingTime {
    pub time: f64,
    pub at_slope_boundary: bool,
}

/// First instant at which both start conditions of a policy hold. The search
/// samples every step multiple and every curve breakpoint, then refines the
/// bracketing interval by bisection; both conditions are monotone in t.
fn first_instant(s: &Scenario, pred: &dyn Fn(f64) -> bool, what: &str) -> Result<f64> {
    let mut grid = s.merged_breakpoints();
    let n = (s.horizon / s.step).ceil() as usize;
    for k in 0..=n {
        grid.push((k as f64 * s.step).min(s.horizon));
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * s.horizon);

    let mut prev = None;
    for &t in &grid {
        if pred(t) {
            let mut hi = t;
            let Some(mut lo) = prev else {
                return Ok(t);
            };
            while hi - lo > WAIT_REFINE_TOL {
                let mid = 0.5 * (lo + hi);
                if pred(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(hi);
        }
        prev = Some(t);
    }
    Err(Error::WaitingNeverEnds(format!(
        "{what} condition never holds on [0, {}]",
        s.horizon
    )))
}

/// First instant in [0, horizon] at which a monotone predicate holds.
pub(crate) fn first_instant_of(s: &Scenario, pred: &dyn Fn(f64) -> bool) -> Option<f64> {
    first_instant(s, pred, "search").ok()
}

/// Waiting instant of the wait-for-everything policy: the earliest t at which
/// transmitting all B0 bits with the energy on hand takes at most t seconds
/// and every bit has arrived.
pub fn waiting_time_alg2(s: &Scenario) -> Result<f64> {
    let pred = |t: f64| {
        if s.arrived(t) < s.b0 - s.tol_bits {
            return false;
        }
        if t <= 0.0 {
            // t * r(E/t) -> 0 as t -> 0+
            return s.b0 <= s.tol_bits;
        }
        let e = s.energy.eval_unchecked(t);
        t * s.rate.value(e / t) >= s.b0 - s.tol_bits
    };
    first_instant(s, &pred, "wait-for-all-data start")
}

/// Waiting instant of the eager policy: the earliest t with B0 within the
/// finite-time reachability limit E_s(t) * r'(0) and some data arrived.
pub fn waiting_time_alg1(s: &Scenario) -> Result<WaitingTime> {
    let slope = s.rate.slope_at_origin();
    let pred = |t: f64| {
        if s.data.eval_unchecked(t) <= s.tol_bits {
            return false;
        }
        let e = s.energy.eval_unchecked(t);
        if slope.is_infinite() {
            e > 0.0
        } else {
            // equality at the boundary is accepted (and flagged below)
            s.b0 <= e * slope + 1e-12 * (1.0 + s.b0)
        }
    };
    let time = first_instant(s, &pred, "finite-completion start")?;
    let at_slope_boundary = if slope.is_finite() {
        let e = s.energy.eval_unchecked(time);
        (s.b0 - e * slope).abs() <= 1e-9 * (1.0 + s.b0)
    } else {
        false
    };
    Ok(WaitingTime { time, at_slope_boundary })
}

/// The implicit power law: the unique p with (E_rem / p) * r(p) = B_rem, i.e.
/// the constant power that would finish the remaining bits exactly as the
/// remaining energy runs out.
pub fn instantaneous_power(e_rem: f64, b_rem: f64, rate: &RateFunction) -> Result<f64> {
    if !(e_rem > 0.0) {
        return Err(Error::Domain(format!("remaining energy must be positive, got {e_rem}")));
    }
    if !(b_rem > 0.0) {
        return Err(Error::Domain(format!("remaining data must be positive, got {b_rem}")));
    }
    rate.solve_rate_per_power(b_rem / e_rem)
}

struct Recorder {
    times: Vec<f64>,
    power: Vec<f64>,
    data_sent: Vec<f64>,
    energy_used: Vec<f64>,
    phase: Vec<Phase>,
    silent_open: Option<f64>,
    silent_intervals: Vec<(f64, f64)>,
}

impl Recorder {
    fn new() -> Self {
        Self {
            times: Vec::new(),
            power: Vec::new(),
            data_sent: Vec::new(),
            energy_used: Vec::new(),
            phase: Vec::new(),
            silent_open: None,
            silent_intervals: Vec::new(),
        }
    }

    fn push(&mut self, t: f64, p: f64, sent: f64, used: f64, phase: Phase) {
        if phase == Phase::Silent {
            self.silent_open.get_or_insert(t);
        } else if let Some(start) = self.silent_open.take() {
            self.silent_intervals.push((start, t));
        }
        self.times.push(t);
        self.power.push(p);
        self.data_sent.push(sent);
        self.energy_used.push(used);
        self.phase.push(phase);
    }

    fn finish(mut self, waiting_end: f64, completion: Option<f64>) -> PolicyTrajectory {
        if let Some(start) = self.silent_open.take() {
            let end = self.times.last().copied().unwrap_or(start);
            self.silent_intervals.push((start, end));
        }
        PolicyTrajectory {
            times: self.times,
            power: self.power,
            data_sent: self.data_sent,
            energy_used: self.energy_used,
            phase: self.phase,
            waiting_end,
            completion_time: completion,
            silent_intervals: self.silent_intervals,
        }
    }
}

/// Shared transmission-phase integrator. Steps are sample-and-hold solves of
/// the power law, split at curve breakpoints and (when silence is allowed) at
/// data-exhaustion events; completion is interpolated inside the final step.
fn run_transmission(s: &Scenario, t_start: f64, allow_silence: bool) -> PolicyTrajectory {
    let slope = s.rate.slope_at_origin();
    let mut rec = Recorder::new();

    // waiting-phase samples on the step grid
    let mut tw = 0.0;
    while tw < t_start - 1e-12 * s.horizon {
        rec.push(tw, 0.0, 0.0, 0.0, Phase::Wait);
        tw += s.step;
    }

    let bps = s.merged_breakpoints();
    let mut bp_idx = bps.partition_point(|&b| b <= t_start + 1e-12 * s.horizon);

    let mut t = t_start;
    let mut sent = 0.0;
    let mut used = 0.0;
    let min_h = 1e-12 * s.horizon;
    let mut completion = None;

    loop {
        let b_rem = s.b0 - sent;
        if b_rem <= s.tol_bits {
            completion = Some(t);
            rec.push(t, 0.0, sent, used, Phase::Tx);
            break;
        }
        if t >= s.horizon - min_h {
            break; // not completed
        }
        while bp_idx < bps.len() && bps[bp_idx] <= t + min_h {
            bp_idx += 1;
        }
        let next_bp = bps.get(bp_idx).copied().unwrap_or(s.horizon);
        let h = s.step.min(next_bp - t).min(s.horizon - t).max(min_h);

        let arrived = s.arrived(t);
        let unsent = arrived - sent;

        if allow_silence && unsent <= s.tol_bits {
            rec.push(t, 0.0, sent, used, Phase::Silent);
            t += h;
            continue;
        }

        let e_rem = s.energy.eval_unchecked(t) - used;
        let power = if e_rem <= s.tol_energy {
            None
        } else {
            let c = b_rem / e_rem;
            if c >= slope {
                None
            } else {
                s.rate.solve_rate_per_power(c).ok()
            }
        };
        let Some(p) = power else {
            // no finite-power solution right now; future energy may restore it
            rec.push(t, 0.0, sent, used, Phase::Stall);
            t += h;
            continue;
        };
        let rv = s.rate.value(p);

        if rv * h >= b_rem && unsent >= b_rem - s.tol_bits {
            let dt = (b_rem / rv).max(0.0);
            rec.push(t, p, sent, used, Phase::Tx);
            // the power law plans to exhaust e_rem exactly at completion;
            // clamp so float error in p can never overdraw the harvested energy
            used += (p * dt).min(e_rem);
            sent = s.b0;
            t += dt;
            completion = Some(t);
            rec.push(t, p, sent, used, Phase::Tx);
            break;
        }

        if allow_silence && sent + rv * h > s.arrived(t + h) + s.tol_bits {
            // arrived data runs out inside the step: bisect for the instant
            let g = |tau: f64| s.arrived(t + tau) - sent - rv * tau;
            let mut lo = 0.0;
            let mut hi = h;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if g(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let tau = hi.max(min_h);
            rec.push(t, p, sent, used, Phase::Tx);
            sent += rv * tau;
            used += (p * tau).min(e_rem);
            t += tau;
            continue;
        }

        rec.push(t, p, sent, used, Phase::Tx);
        sent += rv * h;
        used += (p * h).min(e_rem);
        t += h;
    }

    rec.finish(t_start, completion)
}

/// Runs the wait-for-everything policy: silent until its waiting instant,
/// then power-law transmission with no further silences.
pub fn simulate_alg2(s: &Scenario) -> Result<PolicyTrajectory> {
    let t_start = waiting_time_alg2(s)?;
    Ok(run_transmission(s, t_start, false))
}

/// Runs the eager policy: starts as soon as completion becomes possible in
/// finite time, going silent whenever it exhausts the arrived data.
pub fn simulate_alg1(s: &Scenario) -> Result<PolicyTrajectory> {
    let t_start = waiting_time_alg1(s)?;
    Ok(run_transmission(s, t_start.time, true))
}
