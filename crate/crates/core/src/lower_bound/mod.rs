//! Numerics for the space/query-time trade-off of random gap subset search.
//!
//! The bound compares a data point `u ~ Bern(w_u)ⁿ` with a query that is a
//! random subset of it, `q[i] = 1` with probability `w_q`. A list-of-points
//! data structure with space `k^{1+ρ_u}` and time `k^{ρ_q}` must satisfy
//!
//! ```text
//! α·ρ_q + (1 − α)·ρ_u ≥ inf_{t_u ≠ w_u} F(t_u, t_q)      for every α ∈ [0, 1]
//! ```
//!
//! where, with the forced coupling `T = [[t_q, 0], [t_u − t_q, 1 − t_u]]` and
//! `P = [[w_q, 0], [w_u − w_q, 1 − w_u]]`,
//!
//! ```text
//! F = [α(D(T‖P) − d(t_q‖w_q)) + (1 − α)(D(T‖P) − d(t_u‖w_u))] / d(t_u‖w_u).
//! ```
//!
//! [`objective_f`] evaluates the expanded form, [`objective_f_definitional`]
//! the form above; [`optimize`] finds the infimum and the resulting bound on
//! `ρ_q`, and [`curves`] holds the closed-form curves and CSV emission.
//!
//! All logarithms are natural. `0·log 0 = 0`; a positive mass against a zero
//! reference gives `+∞`.

pub mod curves;
pub mod optimize;

pub use curves::{
    emit_tradeoff, explicit_gapss_bound, upper_bound_exponent, urde_analytic_bound, Curve,
    TradeoffOptions, TradeoffPoint,
};
pub use optimize::{inf_f, lop_rho_q, InfOptions, InfResult, LopResult};

use serde::Serialize;

use crate::{Error, Result};

/// `x·log(x/y)` with `0·log(0/y) = 0` and `x·log(x/0) = +∞` for `x > 0`.
///
/// Close to `y` the ratio is taken through `ln_1p` of the difference, which
/// keeps relative accuracy when the result is tiny.
#[inline]
pub fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if y == 0.0 {
        f64::INFINITY
    } else {
        let diff = x - y;
        if diff.abs() < 0.5 * y {
            x * (diff / y).ln_1p()
        } else {
            x * (x / y).ln()
        }
    }
}

/// Binary KL divergence `d(p‖q)`.
pub fn kl_binary(p: f64, q: f64) -> f64 {
    xlogy(p, q) + xlogy(1.0 - p, 1.0 - q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KlParams {
    pub w_u: f64,
    pub w_q: f64,
}

impl KlParams {
    pub fn new(w_u: f64, w_q: f64) -> Result<Self> {
        if !(0.0 < w_q && w_q < w_u && w_u < 1.0) {
            return Err(Error::domain(format!(
                "need 0 < w_q < w_u < 1, got w_u={w_u}, w_q={w_q}"
            )));
        }
        Ok(KlParams { w_u, w_q })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingPoint {
    pub t_u: f64,
    pub t_q: f64,
}

impl CouplingPoint {
    pub fn new(t_u: f64, t_q: f64) -> Result<Self> {
        if !(0.0 <= t_q && t_q <= t_u && t_u <= 1.0) {
            return Err(Error::domain(format!(
                "need 0 <= t_q <= t_u <= 1, got t_u={t_u}, t_q={t_q}"
            )));
        }
        Ok(CouplingPoint { t_u, t_q })
    }
}

/// `D(T‖P)` over the three cells `P` supports.
pub fn kl_coupling(t: CouplingPoint, w: KlParams) -> f64 {
    xlogy(t.t_q, w.w_q) + xlogy(t.t_u - t.t_q, w.w_u - w.w_q) + xlogy(1.0 - t.t_u, 1.0 - w.w_u)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )))
    }
}

/// Expanded objective:
///
/// ```text
/// [(t_u − t_q)·log((t_u − t_q)/(w_u − w_q)) + α·d(t_u‖w_u) − t_u·log(t_u/w_u)
///   − α·d(t_q‖w_q) + t_q·log(t_q/w_q)] / d(t_u‖w_u)
/// ```
pub fn objective_f(t: CouplingPoint, w: KlParams, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if t.t_u == w.w_u {
        return Err(Error::domain("objective is undefined at t_u = w_u"));
    }
    Ok(objective_unchecked(t.t_u, t.t_q, w, alpha))
}

#[inline]
pub(crate) fn objective_unchecked(t_u: f64, t_q: f64, w: KlParams, alpha: f64) -> f64 {
    let d_u = kl_binary(t_u, w.w_u);
    let num = xlogy(t_u - t_q, w.w_u - w.w_q) + alpha * d_u
        - xlogy(t_u, w.w_u)
        - alpha * kl_binary(t_q, w.w_q)
        + xlogy(t_q, w.w_q);
    num / d_u
}

/// The objective written as a mixture of two normalized KL gaps.
pub fn objective_f_definitional(t: CouplingPoint, w: KlParams, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if t.t_u == w.w_u {
        return Err(Error::domain("objective is undefined at t_u = w_u"));
    }
    let big = kl_coupling(t, w);
    let d_q = kl_binary(t.t_q, w.w_q);
    let d_u = kl_binary(t.t_u, w.w_u);
    Ok((alpha * (big - d_q) + (1.0 - alpha) * (big - d_u)) / d_u)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Entropy {
    pub value: f64,
    /// Set when `x` was 0 or 1 and the limit `log 2` was returned.
    pub boundary: bool,
}

/// `H(x) = x·log(2x) + (1 − x)·log(2(1 − x))`, which equals `d(x‖1/2)`.
pub fn entropy_h(x: f64) -> Result<Entropy> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(format!("H(x) needs 0 <= x <= 1, got {x}")));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(Entropy {
            value: std::f64::consts::LN_2,
            boundary: true,
        });
    }
    let value = x * (2.0 * x - 1.0).ln_1p() + (1.0 - x) * (1.0 - 2.0 * x).ln_1p();
    Ok(Entropy {
        value,
        boundary: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kl_binary_examples() {
        assert_eq!(kl_binary(0.5, 0.5), 0.0);
        assert!((kl_binary(1.0, 0.5) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((kl_binary(0.0, 0.25) - 0.287_682_072_451_780_9).abs() < 1e-15);
        assert_eq!(kl_binary(0.3, 0.0), f64::INFINITY);
        assert_eq!(kl_binary(0.0, 0.0), 0.0);
    }

    #[test]
    fn kl_coupling_examples() {
        let w = KlParams::new(0.5, 0.01).unwrap();
        assert_eq!(kl_coupling(CouplingPoint::new(0.5, 0.01).unwrap(), w), 0.0);
        let d = kl_coupling(CouplingPoint::new(0.5, 0.0).unwrap(), w);
        assert!((d - 0.010_101_353_658_759_724).abs() < 1e-15);
    }

    #[test]
    fn parameter_validation() {
        assert!(KlParams::new(0.5, 0.5).is_err());
        assert!(KlParams::new(1.0, 0.5).is_err());
        assert!(CouplingPoint::new(0.2, 0.3).is_err());
        let w = KlParams::new(0.5, 0.1).unwrap();
        let at = CouplingPoint::new(0.5, 0.1).unwrap();
        assert!(objective_f(at, w, 0.5).is_err());
        assert!(objective_f(CouplingPoint::new(0.4, 0.1).unwrap(), w, 1.5).is_err());
    }

    #[test]
    fn endpoint_closed_form() {
        // At t_q = 0, w_u = 1/2:
        // F = α + (α·log(1 − w_q) − t_u·log(1 − 2w_q)) / d(t_u‖1/2).
        let w_q = 1e-3;
        let w = KlParams::new(0.5, w_q).unwrap();
        let alpha = 1.0 + 1.0 / w_q.ln();
        for &t_u in &[0.05, 0.3, 0.45, 0.55, 0.7, 0.99, 1.0] {
            let f = objective_f(CouplingPoint::new(t_u, 0.0).unwrap(), w, alpha).unwrap();
            let closed =
                alpha + (alpha * (-w_q).ln_1p() - t_u * (-2.0 * w_q).ln_1p()) / kl_binary(t_u, 0.5);
            assert!((f - closed).abs() < 1e-10, "t_u={t_u}: {f} vs {closed}");
        }
    }

    #[test]
    fn finite_along_t_q_equal_w_q() {
        let w = KlParams::new(0.5, 0.05).unwrap();
        for i in 1..100 {
            let t_u = 0.05 + 0.95 * i as f64 / 100.0;
            if t_u == 0.5 {
                continue;
            }
            let f = objective_f(CouplingPoint::new(t_u, 0.05).unwrap(), w, 0.7).unwrap();
            assert!(f.is_finite());
        }
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy_h(0.5).unwrap().value, 0.0);
        let b = entropy_h(0.0).unwrap();
        assert!(b.boundary && b.value == std::f64::consts::LN_2);
        assert!(entropy_h(1.2).is_err());
        for i in 1..1000 {
            let x = i as f64 / 1000.0;
            let h = entropy_h(x).unwrap().value;
            assert!((h - kl_binary(x, 0.5)).abs() < 1e-12);
        }
    }

    fn feasible() -> impl Strategy<Value = (f64, f64, f64, f64, f64)> {
        (
            0.01f64..0.98,
            0.0f64..1.0,
            0.0f64..1.0,
            0.0f64..1.0,
            0.0f64..=1.0,
        )
            .prop_map(|(w_u, wq_frac, t_u, tq_frac, alpha)| {
                let w_q = (w_u * wq_frac).max(1e-6);
                (w_u, w_q, t_u, t_u * tq_frac, alpha)
            })
    }

    proptest! {
        #[test]
        fn divergences_are_nonnegative((w_u, w_q, t_u, t_q, _a) in feasible()) {
            prop_assume!(w_q < w_u);
            let w = KlParams::new(w_u, w_q).unwrap();
            let t = CouplingPoint::new(t_u, t_q).unwrap();
            prop_assert!(kl_coupling(t, w) >= 0.0);
            prop_assert!(kl_binary(t_u, w_u) >= 0.0);
            prop_assert!(entropy_h(t_u).unwrap().value >= 0.0);
            // The joint divergence dominates both marginals.
            prop_assert!(kl_coupling(t, w) >= kl_binary(t_q, w_q) - 1e-12);
            prop_assert!(kl_coupling(t, w) >= kl_binary(t_u, w_u) - 1e-12);
        }

        #[test]
        fn two_codings_agree((w_u, w_q, t_u, t_q, alpha) in feasible()) {
            prop_assume!(w_q < w_u && (t_u - w_u).abs() > 1e-3);
            let w = KlParams::new(w_u, w_q).unwrap();
            let t = CouplingPoint::new(t_u, t_q).unwrap();
            let a = objective_f(t, w, alpha).unwrap();
            let b = objective_f_definitional(t, w, alpha).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{} vs {}", a, b);
        }
    }
}
