//! Channel capacity functions r(p) and the scalar solves built on them.
//!
//! Every family satisfies r(0) = 0, strict monotonicity and strict concavity
//! in p, which makes r(p)/p strictly decreasing on (0, inf) with supremum
//! r'(0) at the origin. All root solves below rely only on that monotone
//! structure and use bisection.

use crate::error::{Error, Result};

/// Hard cap on bracket expansion for power solves, in watts. Exceeding it is
/// reported as infeasibility instead of looping.
pub const P_MAX: f64 = 1e12;

/// Absolute tolerance on solve residuals.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// Absolute tolerance on bisection brackets.
pub const BRACKET_TOL: f64 = 1e-12;

const LN2: f64 = std::f64::consts::LN_2;

/// A concave tabulated rate curve given as sample points, interpolated
/// linearly and extrapolated with the final slope.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedRate {
    powers: Vec<f64>,
    rates: Vec<f64>,
}

impl TabulatedRate {
    /// Points must start at (0, 0), have strictly increasing powers and rates,
    /// and strictly decreasing segment slopes.
    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Domain("tabulated rate needs at least 2 points".into()));
        }
        if points[0] != (0.0, 0.0) {
            return Err(Error::Domain("tabulated rate must start at (0, 0)".into()));
        }
        let mut prev_slope = f64::INFINITY;
        for w in points.windows(2) {
            let (p0, r0) = w[0];
            let (p1, r1) = w[1];
            if !(p1 > p0) || !(r1 > r0) {
                return Err(Error::Domain("tabulated rate must be strictly increasing".into()));
            }
            let slope = (r1 - r0) / (p1 - p0);
            if slope >= prev_slope {
                return Err(Error::Domain("tabulated rate must be strictly concave".into()));
            }
            prev_slope = slope;
        }
        Ok(Self {
            powers: points.iter().map(|&(p, _)| p).collect(),
            rates: points.iter().map(|&(_, r)| r).collect(),
        })
    }

    fn segment(&self, p: f64) -> usize {
        match self.powers.binary_search_by(|x| x.partial_cmp(&p).unwrap()) {
            Ok(i) => i.min(self.powers.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.powers.len() - 2),
        }
    }

    fn value(&self, p: f64) -> f64 {
        let i = self.segment(p);
        let slope = (self.rates[i + 1] - self.rates[i]) / (self.powers[i + 1] - self.powers[i]);
        self.rates[i] + slope * (p - self.powers[i])
    }

    fn slope_at(&self, p: f64) -> f64 {
        let i = self.segment(p);
        (self.rates[i + 1] - self.rates[i]) / (self.powers[i + 1] - self.powers[i])
    }
}

/// Channel capacity map r(p) in bits per second as a function of transmit
/// power in watts.
#[derive(Debug, Clone, PartialEq)]
pub enum RateFunction {
    /// r(p) = log2(1 + p).
    Log2OnePlus,
    /// r(p) = sqrt(p); has infinite slope at the origin.
    Sqrt,
    /// r(p) = W * log2(1 + g * p).
    ScaledLog { bandwidth: f64, gain: f64 },
    /// User-supplied concave table.
    Tabulated(TabulatedRate),
}

impl RateFunction {
    pub fn scaled_log(bandwidth: f64, gain: f64) -> Result<Self> {
        if bandwidth <= 0.0 || gain <= 0.0 {
            return Err(Error::Domain(format!(
                "scaled_log needs positive bandwidth and gain, got {bandwidth}, {gain}"
            )));
        }
        Ok(Self::ScaledLog { bandwidth, gain })
    }

    /// r(p). Negative power is a domain error.
    pub fn eval(&self, p: f64) -> Result<f64> {
        if p < 0.0 || !p.is_finite() {
            return Err(Error::Domain(format!("rate evaluated at invalid power {p}")));
        }
        Ok(self.value(p))
    }

    /// r(p) without the domain check; callers guarantee p >= 0.
    pub(crate) fn value(&self, p: f64) -> f64 {
        match self {
            Self::Log2OnePlus => p.ln_1p() / LN2,
            Self::Sqrt => p.sqrt(),
            Self::ScaledLog { bandwidth, gain } => bandwidth * (gain * p).ln_1p() / LN2,
            Self::Tabulated(t) => t.value(p),
        }
    }

    /// Analytic derivative r'(p) for p > 0 (segment slope for tables).
    pub fn derivative(&self, p: f64) -> f64 {
        match self {
            Self::Log2OnePlus => 1.0 / ((1.0 + p) * LN2),
            Self::Sqrt => 0.5 / p.sqrt(),
            Self::ScaledLog { bandwidth, gain } => bandwidth * gain / ((1.0 + gain * p) * LN2),
            Self::Tabulated(t) => t.slope_at(p),
        }
    }

    /// r'(0) = lim_{p -> 0+} r(p)/p as an extended real; infinite for
    /// square-root-like families.
    pub fn slope_at_origin(&self) -> f64 {
        match self {
            Self::Log2OnePlus => 1.0 / LN2,
            Self::Sqrt => f64::INFINITY,
            Self::ScaledLog { bandwidth, gain } => bandwidth * gain / LN2,
            Self::Tabulated(t) => t.slope_at(0.0),
        }
    }

    /// Inverse map: the p with r(p) = u, for u >= 0.
    pub fn inverse(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        match self {
            Self::Log2OnePlus => (u * LN2).exp_m1(),
            Self::Sqrt => u * u,
            Self::ScaledLog { bandwidth, gain } => ((u / bandwidth) * LN2).exp_m1() / gain,
            Self::Tabulated(_) => {
                // monotone bisection; table inverse has no closed form
                let mut hi = 1.0;
                while self.value(hi) < u {
                    hi *= 2.0;
                    if hi > P_MAX {
                        return P_MAX;
                    }
                }
                let mut lo = 0.0;
                while hi - lo > BRACKET_TOL * (1.0 + hi) {
                    let mid = 0.5 * (lo + hi);
                    if self.value(mid) < u {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }

    /// Solves r(p)/p = c for the unique positive p. Requires 0 < c < r'(0);
    /// uniqueness follows from strict monotone decrease of r(p)/p.
    pub fn solve_rate_per_power(&self, c: f64) -> Result<f64> {
        if c <= 0.0 || !c.is_finite() {
            return Err(Error::Domain(format!("rate-per-power target must be positive, got {c}")));
        }
        if c >= self.slope_at_origin() {
            return Err(Error::Infeasible(format!(
                "rate-per-power {c} is not below the slope at origin {}",
                self.slope_at_origin()
            )));
        }
        // expand until r(hi)/hi < c
        let mut hi = 1.0;
        while self.value(hi) / hi >= c {
            hi *= 2.0;
            if hi > P_MAX {
                return Err(Error::Infeasible(format!(
                    "no power below {P_MAX} W reaches rate-per-power {c}"
                )));
            }
        }
        let mut lo = 0.0; // r(p)/p -> r'(0) > c as p -> 0+
        for _ in 0..200 {
            if hi - lo <= BRACKET_TOL {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let ratio = self.value(mid) / mid;
            // the bracket must be tight in relative terms: downstream checks
            // (nondecreasing-power slack of 1e-9 W) see the solve's jitter
            if (ratio - c).abs() <= RESIDUAL_TOL && hi - lo <= BRACKET_TOL * (1.0 + mid) {
                return Ok(mid);
            }
            if ratio > c {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// The unique T with T * r(E/T) = B: the completion time of sending B bits
    /// with energy E at constant power. T * r(E/T) increases in T toward
    /// E * r'(0), so B must stay below that limit.
    pub fn constant_power_completion(&self, energy: f64, bits: f64) -> Result<f64> {
        if energy <= 0.0 {
            return Err(Error::Domain(format!("energy must be positive, got {energy}")));
        }
        if bits <= 0.0 {
            return Err(Error::Domain(format!("bits must be positive, got {bits}")));
        }
        if bits >= energy * self.slope_at_origin() {
            return Err(Error::Infeasible(format!(
                "{bits} bits from {energy} J would need infinite time (limit {})",
                energy * self.slope_at_origin()
            )));
        }
        let throughput = |t: f64| t * self.value(energy / t);
        let mut hi = 1.0;
        while throughput(hi) < bits {
            hi *= 2.0;
            if hi > 1e15 {
                return Err(Error::Infeasible("completion time exceeds 1e15 s".into()));
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            if hi - lo <= BRACKET_TOL {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if throughput(mid) < bits {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

impl std::fmt::Display for RateFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Log2OnePlus => write!(f, "log2_1p"),
            Self::Sqrt => write!(f, "sqrt"),
            Self::ScaledLog { bandwidth, gain } => write!(f, "scaled_log:{bandwidth},{gain}"),
            Self::Tabulated(t) => {
                write!(f, "tabulated:(")?;
                for (i, (p, r)) in t.powers.iter().zip(&t.rates).enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{p}:{r}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log2_1p() -> RateFunction {
        RateFunction::Log2OnePlus
    }

    /// Independent oracle: solve r(p)/p = c by dense scan + local bisection on
    /// raw function values, never through solve_rate_per_power.
    fn oracle_rate_per_power(r: &RateFunction, c: f64) -> f64 {
        let f = |p: f64| r.eval(p).unwrap() / p - c;
        let mut hi = 1e-6;
        while f(hi) > 0.0 {
            hi *= 1.5;
        }
        let mut lo = hi / 1.5;
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn eval_log_type() {
        let r = log2_1p();
        assert!((r.eval(1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((r.eval(3.0).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(r.eval(0.0).unwrap(), 0.0);
        assert!(r.eval(-1.0).is_err());
    }

    #[test]
    fn slope_at_origin_families() {
        let r = log2_1p();
        // finite-difference limit of r(p)/p as p -> 0
        let fd = r.eval(1e-9).unwrap() / 1e-9;
        assert!((r.slope_at_origin() - fd).abs() < 1e-6);
        assert!((r.slope_at_origin() - 1.0 / std::f64::consts::LN_2).abs() < 1e-12);

        assert!(RateFunction::Sqrt.slope_at_origin().is_infinite());

        let s = RateFunction::scaled_log(0.5, 2.0).unwrap();
        let fd = s.eval(1e-9).unwrap() / 1e-9;
        assert!((s.slope_at_origin() - fd).abs() < 1e-6);
        assert!((s.slope_at_origin() - 1.0 / std::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn solve_rate_per_power_examples() {
        let r = log2_1p();
        assert!((r.solve_rate_per_power(2.0 / 3.0).unwrap() - 3.0).abs() < 1e-8);
        assert!((r.solve_rate_per_power(1.0).unwrap() - 1.0).abs() < 1e-8);
        // oracle-derived: log2(1+p)/p = 0.5 at p = 5.319722...
        let oracle = oracle_rate_per_power(&r, 0.5);
        assert!((oracle - 5.3197223558).abs() < 1e-6);
        assert!((r.solve_rate_per_power(0.5).unwrap() - oracle).abs() < 1e-7);
    }

    #[test]
    fn solve_rate_per_power_errors() {
        let r = log2_1p();
        assert!(matches!(r.solve_rate_per_power(0.0), Err(Error::Domain(_))));
        assert!(matches!(r.solve_rate_per_power(-1.0), Err(Error::Domain(_))));
        assert!(matches!(r.solve_rate_per_power(2.0), Err(Error::Infeasible(_))));
        // sqrt has infinite slope at origin, every positive target is reachable
        assert!(RateFunction::Sqrt.solve_rate_per_power(100.0).is_ok());
    }

    #[test]
    fn constant_power_completion_examples() {
        let r = log2_1p();
        assert!((r.constant_power_completion(3.0, 2.0).unwrap() - 1.0).abs() < 1e-8);
        // oracle-derived: T * log2(1 + 3/T) = 1 at T = 0.2826719...
        let t = r.constant_power_completion(3.0, 1.0).unwrap();
        assert!((t * r.eval(3.0 / t).unwrap() - 1.0).abs() < 1e-8);
        assert!((t - 0.2826719217).abs() < 1e-6);
        // B -> 0+ gives T -> 0
        assert!(r.constant_power_completion(3.0, 1e-9).unwrap() < 1e-8);
        // infeasible when B >= E * r'(0)
        assert!(matches!(
            r.constant_power_completion(3.0, 4.4),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn constant_power_completion_monotone() {
        let r = log2_1p();
        let mut prev = 0.0;
        for b in [0.5, 1.0, 1.5, 2.0, 2.5, 3.0] {
            let t = r.constant_power_completion(3.0, b).unwrap();
            assert!(t > prev, "not increasing in B at B={b}");
            prev = t;
        }
        let mut prev = f64::INFINITY;
        for e in [1.5, 2.0, 3.0, 5.0, 10.0] {
            let t = r.constant_power_completion(e, 1.0).unwrap();
            assert!(t < prev, "not decreasing in E at E={e}");
            prev = t;
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        for r in [
            log2_1p(),
            RateFunction::scaled_log(0.5, 2.0).unwrap(),
            RateFunction::Sqrt,
        ] {
            for p in [0.1f64, 0.7, 2.0, 13.0, 150.0] {
                let h = 1e-6 * p.max(1.0);
                let fd = (r.eval(p + h).unwrap() - r.eval(p - h).unwrap()) / (2.0 * h);
                let an = r.derivative(p);
                assert!(
                    ((an - fd) / fd).abs() < 1e-6,
                    "derivative mismatch for {r} at p={p}: {an} vs {fd}"
                );
            }
        }
    }

    #[test]
    fn tabulated_rate_validation() {
        assert!(TabulatedRate::new(&[(0.0, 0.0), (1.0, 1.0), (2.0, 1.8)]).is_ok());
        // must start at origin
        assert!(TabulatedRate::new(&[(0.5, 0.0), (1.0, 1.0)]).is_err());
        // not concave
        assert!(TabulatedRate::new(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.5)]).is_err());
        // not increasing
        assert!(TabulatedRate::new(&[(0.0, 0.0), (1.0, 1.0), (2.0, 0.5)]).is_err());
    }

    #[test]
    fn tabulated_solves() {
        let t = TabulatedRate::new(&[(0.0, 0.0), (1.0, 1.0), (3.0, 2.0), (10.0, 3.0)]).unwrap();
        let r = RateFunction::Tabulated(t);
        let p = r.solve_rate_per_power(0.5).unwrap();
        assert!((r.eval(p).unwrap() / p - 0.5).abs() < 1e-8);
        let u = r.eval(2.0).unwrap();
        assert!((r.inverse(u) - 2.0).abs() < 1e-8);
    }

    proptest::proptest! {
        #[test]
        fn increasing_and_concave(a in 0.001f64..100.0, b in 0.001f64..100.0) {
            for r in [log2_1p(), RateFunction::Sqrt, RateFunction::scaled_log(2.0, 0.7).unwrap()] {
                let (p1, p2) = if a < b { (a, b) } else { (b, a) };
                if p2 - p1 > 1e-9 {
                    let r1 = r.eval(p1).unwrap();
                    let r2 = r.eval(p2).unwrap();
                    proptest::prop_assert!(r1 < r2);
                    let mid = r.eval(0.5 * (p1 + p2)).unwrap();
                    proptest::prop_assert!(mid > 0.5 * (r1 + r2));
                    // r(p)/p strictly decreasing
                    proptest::prop_assert!(r1 / p1 > r2 / p2);
                }
            }
        }

        #[test]
        fn rate_per_power_round_trip(c in 0.01f64..1.4) {
            let r = log2_1p();
            let p = r.solve_rate_per_power(c).unwrap();
            proptest::prop_assert!((r.eval(p).unwrap() / p - c).abs() <= 1e-8);
        }

        #[test]
        fn completion_round_trip(e in 0.1f64..50.0, frac in 0.05f64..0.95) {
            let r = log2_1p();
            let b = frac * e * r.slope_at_origin();
            let t = r.constant_power_completion(e, b).unwrap();
            proptest::prop_assert!((t * r.eval(e / t).unwrap() - b).abs() <= 1e-8 * (1.0 + b));
        }
    }
}
