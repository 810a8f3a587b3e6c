//! Closed-form curves and the trade-off table.
//!
//! The `analytic-lower` and `explicit-gapss` curves drop their `o(1)` terms;
//! rows carry the flag `o1-dropped`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::optimize::{lop_rho_q, InfOptions};
use super::KlParams;
use crate::instance_gen::reduction_w_q;
use crate::{Error, Result};

pub const CSV_HEADER: &str = "curve,s,inv_s,w_q,rho_u,rho_q,flags";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Curve {
    NumericLop,
    AnalyticLower,
    ExplicitGapss,
    UpperHalfUniform,
    UpperSimplified,
    PriorGeneral,
}

impl Curve {
    pub const ALL: [Curve; 6] = [
        Curve::NumericLop,
        Curve::AnalyticLower,
        Curve::ExplicitGapss,
        Curve::UpperHalfUniform,
        Curve::UpperSimplified,
        Curve::PriorGeneral,
    ];

    pub const DEFAULT: [Curve; 4] = [
        Curve::NumericLop,
        Curve::AnalyticLower,
        Curve::UpperHalfUniform,
        Curve::UpperSimplified,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Curve::NumericLop => "numeric-lop",
            Curve::AnalyticLower => "analytic-lower",
            Curve::ExplicitGapss => "explicit-gapss",
            Curve::UpperHalfUniform => "upper-half-uniform",
            Curve::UpperSimplified => "upper-simplified",
            Curve::PriorGeneral => "prior-general",
        }
    }
}

impl fmt::Display for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Curve {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Curve::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::domain(format!("unknown curve {s:?}")))
    }
}

/// `1 − w_q^{1−log 2} + ρ_u/(1 + log w_q)`.
pub fn explicit_gapss_bound(w_q: f64, rho_u: f64) -> Result<f64> {
    if !(w_q > 0.0 && w_q < (-1.0f64).exp()) {
        return Err(Error::domain(format!("need 0 < w_q < 1/e, got {w_q}")));
    }
    Ok(1.0 - w_q.powf(1.0 - std::f64::consts::LN_2) + rho_u / (1.0 + w_q.ln()))
}

/// `1 − s^{−(1−log 2)} − ρ_u/(log s − 1)`.
pub fn urde_analytic_bound(s: f64, rho_u: f64) -> Result<f64> {
    if !(s > std::f64::consts::E) {
        return Err(Error::domain(format!("need s > e, got {s}")));
    }
    Ok(1.0 - s.powf(-(1.0 - std::f64::consts::LN_2)) - rho_u / (s.ln() - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpperExponent {
    pub value: f64,
    /// The exact form diverged to `−∞` (at `ε = 2`) and was clamped to 0.
    pub clamped: bool,
}

/// Query exponent achieved by the subset index.
///
/// `simplified`: `1 − ε·ρ_u/(2·log(2s))`.
/// Exact: `1 + ρ_u·log(1 − ε/2)/log(2/(1 − e^{−2/s}))`.
pub fn upper_bound_exponent(
    s: f64,
    rho_u: f64,
    epsilon: f64,
    simplified: bool,
) -> Result<UpperExponent> {
    if !(s >= 2.0) || !(epsilon > 0.0 && epsilon <= 2.0) || !(rho_u >= 0.0) {
        return Err(Error::domain(format!(
            "need s >= 2, 0 < epsilon <= 2, rho_u >= 0; got s={s}, epsilon={epsilon}, rho_u={rho_u}"
        )));
    }
    let value = if simplified {
        1.0 - epsilon * rho_u / (2.0 * (2.0 * s).ln())
    } else if rho_u == 0.0 {
        1.0
    } else {
        1.0 + rho_u * (-epsilon / 2.0).ln_1p() / crate::subset_index::probe_base(s).ln()
    };
    if value.is_finite() {
        Ok(UpperExponent {
            value,
            clamped: false,
        })
    } else {
        Ok(UpperExponent {
            value: 0.0,
            clamped: true,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffPoint {
    pub curve: Curve,
    pub s: f64,
    pub inv_s: f64,
    pub w_q: f64,
    pub rho_u: f64,
    pub rho_q: f64,
    /// Semicolon-separated annotations, empty when none.
    pub flags: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffOptions {
    pub epsilon: f64,
    pub curves: Vec<Curve>,
    /// Constant `c` of the `1 − c·ε²/s` curve. Without it that curve is skipped.
    pub prior_constant: Option<f64>,
    pub inf: InfOptions,
}

impl Default for TradeoffOptions {
    fn default() -> Self {
        TradeoffOptions {
            epsilon: 1.0,
            curves: Curve::DEFAULT.to_vec(),
            prior_constant: None,
            inf: InfOptions::default(),
        }
    }
}

fn point(
    curve: Curve,
    s: f64,
    w_q: f64,
    rho_u: f64,
    raw: f64,
    mut flags: Vec<&str>,
) -> TradeoffPoint {
    if !(0.0..=1.0).contains(&raw) {
        flags.push("clamped");
    }
    TradeoffPoint {
        curve,
        s,
        inv_s: 1.0 / s,
        w_q,
        rho_u,
        rho_q: raw.clamp(0.0, 1.0),
        flags: flags.join(";"),
    }
}

fn curve_point(
    curve: Curve,
    s: f64,
    rho_u: f64,
    opts: &TradeoffOptions,
) -> Result<Option<TradeoffPoint>> {
    let w_q = reduction_w_q(0.5, s);
    Ok(Some(match curve {
        Curve::NumericLop => {
            let r = lop_rho_q(KlParams::new(0.5, w_q)?, rho_u, &opts.inf)?;
            let mut flags = Vec::new();
            if r.alpha_boundary {
                flags.push("alpha-boundary");
            }
            if r.inf.in_band {
                flags.push("band-min");
            }
            point(curve, s, w_q, rho_u, r.raw, flags)
        }
        Curve::AnalyticLower => point(
            curve,
            s,
            w_q,
            rho_u,
            urde_analytic_bound(s, rho_u)?,
            vec!["o1-dropped"],
        ),
        Curve::ExplicitGapss => point(
            curve,
            s,
            w_q,
            rho_u,
            explicit_gapss_bound(w_q, rho_u)?,
            vec!["o1-dropped"],
        ),
        Curve::UpperHalfUniform | Curve::UpperSimplified => {
            let u = upper_bound_exponent(s, rho_u, opts.epsilon, curve == Curve::UpperSimplified)?;
            point(
                curve,
                s,
                w_q,
                rho_u,
                u.value,
                if u.clamped { vec!["diverged"] } else { vec![] },
            )
        }
        Curve::PriorGeneral => match opts.prior_constant {
            Some(c) => point(
                curve,
                s,
                w_q,
                rho_u,
                1.0 - c * opts.epsilon * opts.epsilon / s,
                vec![],
            ),
            None => return Ok(None),
        },
    }))
}

/// One row per `(s, curve)`, ordered by `s` then by the order of `opts.curves`.
pub fn emit_tradeoff(
    rho_u: f64,
    s_grid: &[f64],
    opts: &TradeoffOptions,
) -> Result<Vec<TradeoffPoint>> {
    if let Some(&bad) = s_grid.iter().find(|&&s| !(s > std::f64::consts::E)) {
        return Err(Error::domain(format!(
            "s-grid values must exceed e, got {bad}"
        )));
    }
    if !(rho_u >= 0.0) {
        return Err(Error::domain(format!(
            "rho_u must be nonnegative, got {rho_u}"
        )));
    }
    let jobs: Vec<(f64, Curve)> = s_grid
        .iter()
        .flat_map(|&s| opts.curves.iter().map(move |&c| (s, c)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(s, c)| curve_point(c, s, rho_u, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// Parses `a:b:logN` (N log-spaced points), `a:b:linN`, or a comma list.
pub fn parse_s_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::domain(format!("bad s-grid {spec:?}"));
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [a, b, kind] => {
            let (a, b) = (num(a)?, num(b)?);
            let (log, count) = if let Some(c) = kind.strip_prefix("log") {
                (true, c)
            } else if let Some(c) = kind.strip_prefix("lin") {
                (false, c)
            } else {
                return Err(bad());
            };
            let count: usize = count.parse().map_err(|_| bad())?;
            if count == 0 || !(a > 0.0 && b >= a) {
                return Err(bad());
            }
            if count == 1 {
                return Ok(vec![a]);
            }
            Ok((0..count)
                .map(|i| {
                    let f = i as f64 / (count - 1) as f64;
                    if i == 0 {
                        a
                    } else if i == count - 1 {
                        b
                    } else if log {
                        (a.ln() + f * (b.ln() - a.ln())).exp()
                    } else {
                        a + f * (b - a)
                    }
                })
                .collect())
        }
        [list] => list.split(',').map(num).collect(),
        _ => Err(bad()),
    }
}

pub fn to_csv(rows: &[TradeoffPoint], metadata: &[String]) -> String {
    let mut out = String::new();
    for m in metadata {
        out.push_str("# ");
        out.push_str(m);
        out.push('\n');
    }
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{:?},{:?},{:?},{:?},{:?},{}\n",
            r.curve, r.s, r.inv_s, r.w_q, r.rho_u, r.rho_q, r.flags
        ));
    }
    out
}

pub fn from_csv(text: &str) -> Result<Vec<TradeoffPoint>> {
    let mut lines = text
        .lines()
        .enumerate()
        .skip_while(|(_, l)| l.starts_with('#'));
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        Some((i, _)) => return Err(Error::parse(i + 1, "expected trade-off CSV header")),
        None => return Err(Error::parse(1, "missing trade-off CSV header")),
    }
    lines
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(Error::parse(
                    i + 1,
                    format!("expected 7 fields, got {}", f.len()),
                ));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::parse(i + 1, format!("bad number {s:?}")))
            };
            Ok(TradeoffPoint {
                curve: f[0]
                    .parse()
                    .map_err(|_| Error::parse(i + 1, format!("unknown curve {:?}", f[0])))?,
                s: num(f[1])?,
                inv_s: num(f[2])?,
                w_q: num(f[3])?,
                rho_u: num(f[4])?,
                rho_q: num(f[5])?,
                flags: f[6].to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        let a = urde_analytic_bound(50.0, 0.5).unwrap();
        assert!((a - 0.527_228_904_519_729_7).abs() < 1e-12, "{a}");
        let g = explicit_gapss_bound(0.01, 0.5).unwrap();
        assert!((g - 0.617_924_982_592_057).abs() < 1e-12, "{g}");
        assert!(urde_analytic_bound(2.7, 0.5).is_err());
        assert!(explicit_gapss_bound(0.4, 0.5).is_err());
        assert!(urde_analytic_bound(1e12, 0.5).unwrap() > 0.97);
        assert!(
            explicit_gapss_bound(1e-12, 0.5).unwrap() < explicit_gapss_bound(1e-12, 0.0).unwrap()
        );
    }

    #[test]
    fn exact_upper_is_below_simplified() {
        for &s in &[2.0, 5.0, 50.0, 1e3, 1e5] {
            for &rho in &[0.0, 0.1, 0.5, 1.0, 2.0] {
                for &eps in &[0.1, 0.5, 1.0, 1.5, 1.99] {
                    let e = upper_bound_exponent(s, rho, eps, false).unwrap().value;
                    let p = upper_bound_exponent(s, rho, eps, true).unwrap().value;
                    assert!(e <= p + 1e-12, "s={s} rho={rho} eps={eps}: {e} > {p}");
                }
            }
        }
        let at_two = upper_bound_exponent(50.0, 0.5, 2.0, false).unwrap();
        assert!(at_two.clamped && at_two.value == 0.0);
        assert_eq!(
            upper_bound_exponent(50.0, 0.0, 1.0, false).unwrap().value,
            1.0
        );
        assert_eq!(
            upper_bound_exponent(50.0, 0.0, 1.0, true).unwrap().value,
            1.0
        );
        assert!(upper_bound_exponent(1.5, 0.5, 1.0, true).is_err());
    }

    #[test]
    fn exact_upper_large_s_limit() {
        let s: f64 = 1e6;
        let e = upper_bound_exponent(s, 0.5, 1.0, false).unwrap().value;
        let limit = 1.0 - std::f64::consts::LN_2 * 0.5 / s.ln();
        assert!((e - limit).abs() < 0.05);
    }

    #[test]
    fn s_grid_forms() {
        let g = parse_s_grid("20:10000:log25").unwrap();
        assert_eq!(g.len(), 25);
        assert_eq!((g[0], g[24]), (20.0, 10000.0));
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(parse_s_grid("10:20:lin3").unwrap(), vec![10.0, 15.0, 20.0]);
        assert_eq!(parse_s_grid("10,100").unwrap(), vec![10.0, 100.0]);
        assert!(parse_s_grid("10:20:cubic3").is_err());
        assert!(parse_s_grid("x").is_err());
    }

    #[test]
    fn csv_round_trip_and_prior_curve() {
        let opts = TradeoffOptions {
            curves: vec![
                Curve::AnalyticLower,
                Curve::ExplicitGapss,
                Curve::PriorGeneral,
                Curve::UpperHalfUniform,
            ],
            inf: InfOptions {
                tu_grid: 100,
                alpha_grid: 11,
                ..Default::default()
            },
            ..Default::default()
        };
        let rows = emit_tradeoff(0.5, &[20.0, 300.0], &opts).unwrap();
        assert_eq!(rows.len(), 6);
        assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r.rho_q)));
        let text = to_csv(&rows, &["rho_u=0.5".into()]);
        let back = from_csv(&text).unwrap();
        assert_eq!(back, rows);
        assert_eq!(to_csv(&back, &["rho_u=0.5".into()]), text);

        let with_c = TradeoffOptions {
            prior_constant: Some(1.0),
            ..opts
        };
        let rows = emit_tradeoff(0.5, &[20.0], &with_c).unwrap();
        assert!(rows
            .iter()
            .any(|r| r.curve == Curve::PriorGeneral && r.rho_q == 1.0 - 1.0 / 20.0));
        assert!(emit_tradeoff(0.5, &[2.0], &with_c).is_err());
    }
}
