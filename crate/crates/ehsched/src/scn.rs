//! Plain-text scenario files.
//!
//! One `key = value` pair per line, `#` starts a comment. Keys: `b0`,
//! `horizon`, `rate`, `energy`, `data` and the optional numeric knobs `step`,
//! `tol_bits`, `tol_energy`. Curves are whitespace-separated terms:
//! `poly:(c0,c1,...,ck)@[s,e)` for c0 + c1*t + ... + ck*t^k on [s, e),
//! `expc:(a,b,k)@[s,e)` for a*exp(b*t^k), and `jump:(t,v)`.

use crate::curve::{CumulativeCurve, Piece, Segment};
use crate::error::{Error, Result};
use crate::policy::Scenario;
use crate::rate::{RateFunction, TabulatedRate};

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_f64(s: &str, line: usize, what: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| perr(line, format!("invalid number {:?} for {what}", s.trim())))
}

/// Parses `name:(a,b,c)` style term bodies: the list between parentheses.
fn paren_list<'a>(term: &'a str, prefix: &str, line: usize) -> Result<Vec<&'a str>> {
    let body = &term[prefix.len()..];
    let inner = body
        .strip_prefix('(')
        .and_then(|b| b.strip_suffix(')'))
        .ok_or_else(|| perr(line, format!("expected {prefix}(...), got {term:?}")))?;
    Ok(inner.split(',').collect())
}

/// Parses `@[s,e)` interval suffixes, returning (body, start, end).
fn split_interval<'a>(term: &'a str, line: usize) -> Result<(&'a str, f64, f64)> {
    let at = term
        .rfind('@')
        .ok_or_else(|| perr(line, format!("term {term:?} is missing its @[s,e) interval")))?;
    let (body, suffix) = term.split_at(at);
    let inner = suffix[1..]
        .strip_prefix('[')
        .and_then(|x| x.strip_suffix(')'))
        .ok_or_else(|| perr(line, format!("malformed interval in {term:?}, expected @[s,e)")))?;
    let parts: Vec<&str> = inner.split(',').collect();
    if parts.len() != 2 {
        return Err(perr(line, format!("interval in {term:?} needs exactly two endpoints")));
    }
    Ok((body, parse_f64(parts[0], line, "interval start")?, parse_f64(parts[1], line, "interval end")?))
}

fn parse_curve(value: &str, horizon: f64, line: usize) -> Result<CumulativeCurve> {
    let mut segments = Vec::new();
    let mut jumps = Vec::new();
    for term in value.split_whitespace() {
        if term.starts_with("poly:") {
            let (body, start, end) = split_interval(term, line)?;
            let coeffs = paren_list(body, "poly:", line)?
                .iter()
                .map(|c| parse_f64(c, line, "polynomial coefficient"))
                .collect::<Result<Vec<_>>>()?;
            segments.push(Segment { start, end, piece: Piece::Poly(coeffs) });
        } else if term.starts_with("expc:") {
            let (body, start, end) = split_interval(term, line)?;
            let parts = paren_list(body, "expc:", line)?;
            if parts.len() != 3 {
                return Err(perr(line, format!("expc term {term:?} needs exactly (a,b,k)")));
            }
            segments.push(Segment {
                start,
                end,
                piece: Piece::Exp {
                    a: parse_f64(parts[0], line, "expc a")?,
                    b: parse_f64(parts[1], line, "expc b")?,
                    k: parse_f64(parts[2], line, "expc k")?,
                },
            });
        } else if term.starts_with("jump:") {
            let parts = paren_list(term, "jump:", line)?;
            if parts.len() != 2 {
                return Err(perr(line, format!("jump term {term:?} needs exactly (t,v)")));
            }
            jumps.push((
                parse_f64(parts[0], line, "jump time")?,
                parse_f64(parts[1], line, "jump value")?,
            ));
        } else {
            return Err(perr(line, format!("unknown curve term {term:?}")));
        }
    }
    if segments.is_empty() && jumps.is_empty() {
        return Err(perr(line, "curve has no terms"));
    }
    CumulativeCurve::new(segments, jumps, horizon)
        .map_err(|e| perr(line, format!("invalid curve: {e}")))
}

fn parse_rate(value: &str, line: usize) -> Result<RateFunction> {
    let value = value.trim().trim_matches('"');
    if value == "log2_1p" {
        Ok(RateFunction::Log2OnePlus)
    } else if value == "sqrt" {
        Ok(RateFunction::Sqrt)
    } else if let Some(args) = value.strip_prefix("scaled_log:") {
        let parts: Vec<&str> = args.split(',').collect();
        if parts.len() != 2 {
            return Err(perr(line, format!("scaled_log needs W,g — got {args:?}")));
        }
        RateFunction::scaled_log(
            parse_f64(parts[0], line, "scaled_log bandwidth")?,
            parse_f64(parts[1], line, "scaled_log gain")?,
        )
        .map_err(|e| perr(line, e.to_string()))
    } else if let Some(args) = value.strip_prefix("tabulated:") {
        let inner = args
            .strip_prefix('(')
            .and_then(|x| x.strip_suffix(')'))
            .ok_or_else(|| perr(line, "tabulated rate needs (p:r,p:r,...)"))?;
        let mut points = Vec::new();
        for pair in inner.split(',') {
            let (p, r) = pair
                .split_once(':')
                .ok_or_else(|| perr(line, format!("bad tabulated point {pair:?}")))?;
            points.push((parse_f64(p, line, "table power")?, parse_f64(r, line, "table rate")?));
        }
        Ok(RateFunction::Tabulated(
            TabulatedRate::new(&points).map_err(|e| perr(line, e.to_string()))?,
        ))
    } else {
        Err(perr(line, format!("unknown rate function {value:?}")))
    }
}

/// Parses the full scenario text. The `horizon` line must appear before the
/// curve lines it scopes; conventionally it comes first.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut b0 = None;
    let mut horizon = None;
    let mut step = None;
    let mut tol_bits = None;
    let mut tol_energy = None;
    let mut rate = None;
    let mut energy: Option<(String, usize)> = None;
    let mut data: Option<(String, usize)> = None;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| perr(line_no, format!("expected `key = value`, got {line:?}")))?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "b0" => b0 = Some(parse_f64(value, line_no, "b0")?),
            "horizon" => horizon = Some(parse_f64(value, line_no, "horizon")?),
            "step" => step = Some(parse_f64(value, line_no, "step")?),
            "tol_bits" => tol_bits = Some(parse_f64(value, line_no, "tol_bits")?),
            "tol_energy" => tol_energy = Some(parse_f64(value, line_no, "tol_energy")?),
            "rate" => rate = Some(parse_rate(value, line_no)?),
            "energy" => energy = Some((value.to_string(), line_no)),
            "data" => data = Some((value.to_string(), line_no)),
            _ => return Err(perr(line_no, format!("unknown key {key:?}"))),
        }
    }

    let missing = |field: &str| perr(0, format!("missing required field `{field}`"));
    let b0 = b0.ok_or_else(|| missing("b0"))?;
    let horizon = horizon.ok_or_else(|| missing("horizon"))?;
    let (energy_text, energy_line) = energy.ok_or_else(|| missing("energy"))?;
    let (data_text, data_line) = data.ok_or_else(|| missing("data"))?;
    let energy = parse_curve(&energy_text, horizon, energy_line)?;
    let data = parse_curve(&data_text, horizon, data_line)?;

    Scenario::new(
        b0,
        energy,
        data,
        rate.unwrap_or(RateFunction::Log2OnePlus),
        horizon,
        step.unwrap_or_else(|| Scenario::default_step(horizon)),
        tol_bits.unwrap_or(Scenario::DEFAULT_TOL_BITS),
        tol_energy.unwrap_or(Scenario::DEFAULT_TOL_ENERGY),
    )
}

fn write_curve(out: &mut String, curve: &CumulativeCurve) {
    let mut first = true;
    for seg in curve.segments() {
        if !first {
            out.push(' ');
        }
        first = false;
        match &seg.piece {
            Piece::Poly(coeffs) => {
                out.push_str("poly:(");
                for (i, c) in coeffs.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push_str(&c.to_string());
                }
                out.push_str(&format!(")@[{},{})", seg.start, seg.end));
            }
            Piece::Exp { a, b, k } => {
                out.push_str(&format!("expc:({a},{b},{k})@[{},{})", seg.start, seg.end));
            }
        }
    }
    for &(t, v) in curve.jumps() {
        if !first {
            out.push(' ');
        }
        first = false;
        out.push_str(&format!("jump:({t},{v})"));
    }
}

/// Serializes a scenario back into the file grammar; parse(serialize(s)) == s.
pub fn serialize_scenario(s: &Scenario) -> String {
    let mut out = String::new();
    out.push_str(&format!("b0 = {}\n", s.b0));
    out.push_str(&format!("horizon = {}\n", s.horizon));
    out.push_str(&format!("rate = {}\n", s.rate));
    out.push_str(&format!("step = {}\n", s.step));
    out.push_str(&format!("tol_bits = {}\n", s.tol_bits));
    out.push_str(&format!("tol_energy = {}\n", s.tol_energy));
    out.push_str("energy = ");
    write_curve(&mut out, &s.energy);
    out.push('\n');
    out.push_str("data = ");
    write_curve(&mut out, &s.data);
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG1: &str = "\
# quadratic energy, exponential data
b0 = 2.5
horizon = 2
rate = log2_1p
energy = poly:(0,0,100)@[0,2)
data = expc:(1,1,3)@[0,2)
";

    #[test]
    fn parses_fig1() {
        let s = parse_scenario(FIG1).unwrap();
        assert_eq!(s.b0, 2.5);
        assert_eq!(s.horizon, 2.0);
        assert_eq!(s.rate, RateFunction::Log2OnePlus);
        assert!((s.energy.eval(0.5).unwrap() - 25.0).abs() < 1e-12);
        assert!((s.data.eval(1.0).unwrap() - 1f64.exp()).abs() < 1e-12);
        assert_eq!(s.step, Scenario::default_step(2.0));
    }

    #[test]
    fn parses_jumps_and_options() {
        let text = "\
b0 = 2
horizon = 3
step = 0.001
tol_bits = 1e-8
tol_energy = 1e-8
rate = scaled_log:0.5,2
energy = jump:(0,3) jump:(1,1)
data = jump:(0,2)
";
        let s = parse_scenario(text).unwrap();
        assert_eq!(s.step, 0.001);
        assert_eq!(s.tol_bits, 1e-8);
        assert_eq!(s.rate, RateFunction::scaled_log(0.5, 2.0).unwrap());
        assert_eq!(s.energy.eval(1.5).unwrap(), 4.0);
    }

    #[test]
    fn missing_field_is_named() {
        let text = "horizon = 2\nenergy = jump:(0,1)\ndata = jump:(0,1)\n";
        let err = parse_scenario(text).unwrap_err();
        assert!(err.to_string().contains("b0"), "{err}");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "b0 = 2\nhorizon = 2\nenergy = poly:(1,oops)@[0,2)\ndata = jump:(0,2)\n";
        match parse_scenario(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn decreasing_curve_names_monotonicity() {
        let text = "b0 = 1\nhorizon = 2\nenergy = poly:(5,-3)@[0,2)\ndata = jump:(0,1)\n";
        let err = parse_scenario(text).unwrap_err();
        assert!(err.to_string().contains("monotonicity"), "{err}");
    }

    #[test]
    fn round_trip_fig1() {
        let s = parse_scenario(FIG1).unwrap();
        let text = serialize_scenario(&s);
        let s2 = parse_scenario(&text).unwrap();
        assert_eq!(s.b0, s2.b0);
        assert_eq!(s.energy, s2.energy);
        assert_eq!(s.data, s2.data);
        assert_eq!(s.rate, s2.rate);
        assert_eq!(s.step, s2.step);
    }

    proptest::proptest! {
        #[test]
        fn round_trip_random_jump_scenarios(
            b0 in 0.1f64..5.0,
            e0 in 1.0f64..50.0,
            jt in 0.0f64..1.9,
            jv in 0.1f64..5.0,
        ) {
            let text = format!(
                "b0 = {b0}\nhorizon = 2\nenergy = jump:(0,{e0}) jump:({jt},{jv})\n\
                 data = jump:(0,{})\n",
                b0 + jv,
            );
            let s = parse_scenario(&text).unwrap();
            let s2 = parse_scenario(&serialize_scenario(&s)).unwrap();
            proptest::prop_assert_eq!(&s.energy, &s2.energy);
            proptest::prop_assert_eq!(&s.data, &s2.data);
            proptest::prop_assert_eq!(s.b0, s2.b0);
        }
    }
}
