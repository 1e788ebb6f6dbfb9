//! Cumulative arrival curves: piecewise-analytic nondecreasing functions of
//! time with optional jumps, covering both the continuous and the discrete
//! (staircase) arrival models.

use crate::error::{Error, Result};

/// Points closer than this (relative to the horizon) are treated as the same
/// breakpoint.
const MERGE_EPS: f64 = 1e-12;

/// Number of uniform samples used for the monotonicity check at construction.
const MONOTONE_SAMPLES: usize = 10_000;

/// One analytic piece of a cumulative curve. The expression gives the
/// cumulative amount directly (not an increment).
#[derive(Debug, Clone, PartialEq)]
pub enum Piece {
    /// c0 + c1*t + ... + ck*t^k
    Poly(Vec<f64>),
    /// a * exp(b * t^k)
    Exp { a: f64, b: f64, k: f64 },
}

impl Piece {
    pub fn constant(v: f64) -> Self {
        Piece::Poly(vec![v])
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Piece::Poly(coeffs) => coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c),
            Piece::Exp { a, b, k } => a * (b * t.powf(*k)).exp(),
        }
    }
}

/// An analytic piece valid on [start, end).
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub piece: Piece,
}

/// A nondecreasing cumulative arrival curve on [0, horizon]: piecewise
/// analytic segments plus right-continuous jumps. Outside segment coverage the
/// curve holds its last value.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeCurve {
    segments: Vec<Segment>,
    jumps: Vec<(f64, f64)>,
    horizon: f64,
}

impl CumulativeCurve {
    pub fn new(mut segments: Vec<Segment>, jumps: Vec<(f64, f64)>, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidCurve(format!("horizon must be positive, got {horizon}")));
        }
        segments.sort_by(|a, b| a.start.partial_cmp(&b.start).unwrap());
        for seg in &segments {
            if !(seg.end > seg.start) {
                return Err(Error::InvalidCurve(format!(
                    "segment [{}, {}) is empty or reversed",
                    seg.start, seg.end
                )));
            }
            if seg.start < 0.0 {
                return Err(Error::InvalidCurve(format!("segment starts at {} < 0", seg.start)));
            }
        }
        for w in segments.windows(2) {
            if w[1].start < w[0].end - MERGE_EPS * horizon {
                return Err(Error::InvalidCurve(format!(
                    "segments [{}, {}) and [{}, {}) overlap",
                    w[0].start, w[0].end, w[1].start, w[1].end
                )));
            }
        }
        // merge jumps at (numerically) the same instant
        let mut merged: Vec<(f64, f64)> = Vec::new();
        let mut jumps = jumps;
        jumps.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for (t, v) in jumps {
            if v < 0.0 {
                return Err(Error::InvalidCurve(format!("negative jump {v} at t={t}")));
            }
            if t < 0.0 || t > horizon {
                return Err(Error::InvalidCurve(format!("jump at t={t} outside [0, {horizon}]")));
            }
            match merged.last_mut() {
                Some(last) if (t - last.0).abs() <= MERGE_EPS * horizon => last.1 += v,
                _ => merged.push((t, v)),
            }
        }
        let curve = Self { segments, jumps: merged, horizon };
        curve.validate_monotone()?;
        Ok(curve)
    }

    /// A curve consisting only of jumps (the discrete arrival model).
    pub fn from_jumps(jumps: Vec<(f64, f64)>, horizon: f64) -> Result<Self> {
        Self::new(Vec::new(), jumps, horizon)
    }

    /// Constant-in-time curve with a single initial amount.
    pub fn initial_amount(v: f64, horizon: f64) -> Result<Self> {
        Self::from_jumps(vec![(0.0, v)], horizon)
    }

    fn validate_monotone(&self) -> Result<()> {
        let mut points = self.breakpoints();
        for i in 0..=MONOTONE_SAMPLES {
            points.push(self.horizon * i as f64 / MONOTONE_SAMPLES as f64);
        }
        points.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut prev_t = f64::NEG_INFINITY;
        let mut prev_v = f64::NEG_INFINITY;
        let mut scale: f64 = 1.0;
        for &t in &points {
            let v = self.eval_unchecked(t);
            if !v.is_finite() {
                return Err(Error::InvalidCurve(format!("curve is not finite at t={t}: {v}")));
            }
            scale = scale.max(v.abs());
            if v < prev_v - 1e-9 * scale {
                return Err(Error::InvalidCurve(format!(
                    "monotonicity violated: value {v} at t={t} is below {prev_v} at t={prev_t}"
                )));
            }
            prev_t = t;
            prev_v = prev_v.max(v);
        }
        if self.eval_unchecked(0.0) < 0.0 {
            return Err(Error::InvalidCurve(format!(
                "curve is negative at t=0: {}",
                self.eval_unchecked(0.0)
            )));
        }
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn jumps(&self) -> &[(f64, f64)] {
        &self.jumps
    }

    /// Cumulative amount at time t, jumps at t included (right-continuity).
    pub fn eval(&self, t: f64) -> Result<f64> {
        let slack = 1e-9 * self.horizon;
        if t < -slack || t > self.horizon + slack {
            return Err(Error::Domain(format!(
                "curve evaluated at t={t} outside [0, {}]",
                self.horizon
            )));
        }
        Ok(self.eval_unchecked(t.clamp(0.0, self.horizon)))
    }

    pub(crate) fn eval_unchecked(&self, t: f64) -> f64 {
        let mut base = 0.0;
        for seg in &self.segments {
            if seg.start <= t {
                // within the segment use t, past its end hold the sup
                base = seg.piece.value(t.min(seg.end));
            } else {
                break;
            }
        }
        let jumps: f64 = self
            .jumps
            .iter()
            .take_while(|&&(jt, _)| jt <= t)
            .map(|&(_, v)| v)
            .sum();
        base + jumps
    }

    /// All segment boundaries and jump times in [0, horizon], with 0 and the
    /// horizon always included; sorted and deduplicated. Integrators must not
    /// step across these points.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut points = vec![0.0, self.horizon];
        for seg in &self.segments {
            points.push(seg.start);
            points.push(seg.end.min(self.horizon));
        }
        for &(t, _) in &self.jumps {
            points.push(t);
        }
        points.retain(|&t| (0.0..=self.horizon).contains(&t));
        points.sort_by(|a, b| a.partial_cmp(b).unwrap());
        points.dedup_by(|a, b| (*a - *b).abs() <= MERGE_EPS * self.horizon);
        points
    }

    /// Staircase-below discretization with period `delta`: the value on
    /// [k*delta, (k+1)*delta) is the original value at k*delta. The result
    /// never exceeds the original, so any policy feasible under the
    /// discretized curve stays feasible under the original.
    pub fn discretize(&self, delta: f64) -> Result<CumulativeCurve> {
        if !(delta > 0.0) {
            return Err(Error::Domain(format!("discretization period must be positive, got {delta}")));
        }
        let mut jumps = Vec::new();
        let mut prev = 0.0;
        let mut k = 0usize;
        loop {
            let t = k as f64 * delta;
            if t > self.horizon {
                break;
            }
            let v = self.eval_unchecked(t);
            if v - prev > 0.0 {
                jumps.push((t, v - prev));
                prev = v;
            }
            k += 1;
        }
        CumulativeCurve::new(Vec::new(), jumps, self.horizon)
    }
}

/// A tabulated nondecreasing curve with linear interpolation between samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCurve {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl SampledCurve {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() || times.len() < 2 {
            return Err(Error::InvalidCurve(
                "sampled curve needs matching times/values with at least 2 samples".into(),
            ));
        }
        for w in times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidCurve("sample times must be strictly increasing".into()));
            }
        }
        for w in values.windows(2) {
            if w[1] < w[0] {
                return Err(Error::InvalidCurve("sample values must be nondecreasing".into()));
            }
        }
        Ok(Self { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Linear interpolation; clamps outside the sampled range.
    pub fn eval(&self, t: f64) -> f64 {
        if t <= self.times[0] {
            return self.values[0];
        }
        if t >= *self.times.last().unwrap() {
            return *self.values.last().unwrap();
        }
        let i = match self.times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => return self.values[i],
            Err(i) => i - 1,
        };
        let f = (t - self.times[i]) / (self.times[i + 1] - self.times[i]);
        self.values[i] + f * (self.values[i + 1] - self.values[i])
    }
}
