//! Infimum of the objective and the resulting bound on `ρ_q`.
//!
//! For fixed `t_u` the objective is strictly convex in `t_q` on `[0, t_u)`:
//! `d(t_u‖w_u)·∂²F/∂t_q² = (1−α)/t_q + 1/(t_u−t_q) − α/(1−t_q) > 0` because
//! `t_u ≤ 1` and `α ≤ 1`. Its derivative tends to `+∞` as `t_q → t_u`, so the
//! inner minimum is either the root of
//!
//! ```text
//! (1−α)·log(t_q/w_q) − log((t_u−t_q)/(w_u−w_q)) + α·log((1−t_q)/(1−w_q)) = 0
//! ```
//!
//! or the endpoint `t_q = 0`. The outer minimization over `t_u` is done on a
//! grid (uniform, plus a geometric cluster around `w_u`) followed by
//! golden-section refinement of the best local minima. `t_u` within
//! `band` of `w_u` is excluded from the main search and probed separately
//! down to `band_check`.

use rayon::prelude::*;
use serde::Serialize;

use super::{check_alpha, objective_unchecked, CouplingPoint, KlParams};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InfOptions {
    /// Points of the uniform `t_u` grid on `[0, 1]`.
    pub tu_grid: usize,
    /// Points per side in the geometric cluster around `w_u`.
    pub cluster: usize,
    /// Excluded half-width around `t_u = w_u`.
    pub band: f64,
    /// Closest approach to `w_u` in the secondary band pass.
    pub band_check: f64,
    /// Golden-section tolerance in `t_u`.
    pub resolution: f64,
    /// Local minima refined per call.
    pub refine: usize,
    /// Points of the uniform `α` grid on `(0, 1]` used by [`lop_rho_q`].
    pub alpha_grid: usize,
}

impl Default for InfOptions {
    fn default() -> Self {
        InfOptions {
            tu_grid: 1000,
            cluster: 60,
            band: 1e-4,
            band_check: 1e-6,
            resolution: 1e-9,
            refine: 4,
            alpha_grid: 101,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InfResult {
    pub value: f64,
    pub argmin: CouplingPoint,
    /// The minimum came from the secondary pass inside the excluded band.
    pub in_band: bool,
}

/// Minimizes over `t_q ∈ [0, t_u]` for fixed `t_u`, returning `(t_q, F)`.
pub(crate) fn inner_min(t_u: f64, w: KlParams, alpha: f64) -> (f64, f64) {
    let at_zero = objective_unchecked(t_u, 0.0, w, alpha);
    if t_u == 0.0 {
        return (0.0, at_zero);
    }
    let g = |t: f64| {
        (1.0 - alpha) * (t / w.w_q).ln() - ((t_u - t) / (w.w_u - w.w_q)).ln()
            + alpha * ((1.0 - t) / (1.0 - w.w_q)).ln()
    };
    let mut lo = 1e-300_f64.min(t_u * 0.5);
    if g(lo) >= 0.0 {
        return (0.0, at_zero);
    }
    let mut hi = t_u;
    for _ in 0..400 {
        let mid = if hi > 4.0 * lo {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = lo;
    let at_root = objective_unchecked(t_u, root, w, alpha);
    if at_root <= at_zero {
        (root, at_root)
    } else {
        (0.0, at_zero)
    }
}

fn golden<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

fn tu_candidates(w: KlParams, opts: &InfOptions) -> Vec<f64> {
    let mut ts: Vec<f64> = (0..=opts.tu_grid)
        .map(|i| i as f64 / opts.tu_grid as f64)
        .collect();
    let reach = w.w_u.max(1.0 - w.w_u);
    let ratio = (reach / opts.band).powf(1.0 / opts.cluster.max(1) as f64);
    let mut r = opts.band;
    for _ in 0..=opts.cluster {
        ts.push(w.w_u - r);
        ts.push(w.w_u + r);
        r *= ratio;
    }
    ts.retain(|&t| (0.0..=1.0).contains(&t) && (t - w.w_u).abs() >= opts.band * (1.0 - 1e-9));
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

/// `inf F` over the feasible triangle with `t_u ≠ w_u`.
pub fn inf_f(w: KlParams, alpha: f64, opts: &InfOptions) -> Result<InfResult> {
    check_alpha(alpha)?;
    let ts = tu_candidates(w, opts);
    let vals: Vec<(f64, f64)> = ts.iter().map(|&t| inner_min(t, w, alpha)).collect();
    let phi = |t: f64| inner_min(t, w, alpha).1;

    // Local minima of the sampled profile, best first.
    let mut minima: Vec<usize> = (0..ts.len())
        .filter(|&i| {
            let v = vals[i].1;
            (i == 0 || v <= vals[i - 1].1) && (i + 1 == ts.len() || v <= vals[i + 1].1)
        })
        .collect();
    minima.sort_by(|&a, &b| vals[a].1.total_cmp(&vals[b].1).then(a.cmp(&b)));
    minima.truncate(opts.refine.max(1));

    let mut best = (f64::INFINITY, 0.0, 0.0);
    for &i in &minima {
        let (t, v) = (ts[i], vals[i].1);
        if v < best.0 {
            best = (v, t, vals[i].0);
        }
        let mut a = if i > 0 { ts[i - 1] } else { t };
        let mut b = if i + 1 < ts.len() { ts[i + 1] } else { t };
        // Keep the bracket on one side of the excluded band.
        if t < w.w_u {
            b = b.min(w.w_u - opts.band);
        } else {
            a = a.max(w.w_u + opts.band);
        }
        if b - a > opts.resolution {
            let (tr, vr) = golden(phi, a, b, opts.resolution);
            if vr < best.0 {
                best = (vr, tr, inner_min(tr, w, alpha).0);
            }
        }
    }

    let mut in_band = false;
    let mut r = opts.band;
    while r >= opts.band_check * (1.0 - 1e-9) {
        for t in [w.w_u - r, w.w_u + r] {
            if (0.0..=1.0).contains(&t) && t != w.w_u {
                let (tq, v) = inner_min(t, w, alpha);
                if v < best.0 - 1e-12 * best.0.abs().max(1.0) {
                    best = (v, t, tq);
                    in_band = r < opts.band;
                }
            }
        }
        r /= 2.0;
    }

    Ok(InfResult {
        value: best.0,
        argmin: CouplingPoint {
            t_u: best.1,
            t_q: best.2,
        },
        in_band,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LopResult {
    /// Bound on `ρ_q`, clamped to `[0, 1]`.
    pub rho_q: f64,
    /// Unclamped maximum over `α`.
    pub raw: f64,
    pub alpha: f64,
    pub inf: InfResult,
    /// The maximizing `α` was the smallest grid point.
    pub alpha_boundary: bool,
}

/// `max_α (inf F(α) − (1 − α)·ρ_u) / α` over `α ∈ (0, 1]`.
pub fn lop_rho_q(w: KlParams, rho_u: f64, opts: &InfOptions) -> Result<LopResult> {
    if !(rho_u >= 0.0) {
        return Err(crate::Error::domain(format!(
            "rho_u must be nonnegative, got {rho_u}"
        )));
    }
    let m = opts.alpha_grid.max(2) - 1;
    let mut alphas: Vec<f64> = (1..=m).map(|i| i as f64 / m as f64).collect();
    let theory = 1.0 + 1.0 / w.w_q.ln();
    if theory > 0.0 && theory <= 1.0 {
        alphas.push(theory);
    }
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();

    let eval = |alpha: f64| -> Result<(f64, InfResult)> {
        let inf = inf_f(w, alpha, opts)?;
        Ok(((inf.value - (1.0 - alpha) * rho_u) / alpha, inf))
    };
    let vals = alphas
        .par_iter()
        .map(|&a| eval(a))
        .collect::<Result<Vec<_>>>()?;
    let i = (0..alphas.len())
        .max_by(|&a, &b| vals[a].0.total_cmp(&vals[b].0).then(b.cmp(&a)))
        .expect("nonempty alpha grid");
    let mut best = (vals[i].0, alphas[i], vals[i].1);

    let lo = if i > 0 { alphas[i - 1] } else { alphas[i] };
    let hi = if i + 1 < alphas.len() {
        alphas[i + 1]
    } else {
        alphas[i]
    };
    if hi - lo > 1e-6 {
        // Golden-section maximization of the bound in α.
        let (a, _) = golden(
            |a| eval(a).map(|(v, _)| -v).unwrap_or(f64::INFINITY),
            lo,
            hi,
            1e-6,
        );
        let (v, inf) = eval(a)?;
        if v > best.0 {
            best = (v, a, inf);
        }
    }

    Ok(LopResult {
        rho_q: best.0.clamp(0.0, 1.0),
        raw: best.0,
        alpha: best.1,
        inf: best.2,
        alpha_boundary: i == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lower_bound::objective_f;

    fn brute_inner(t_u: f64, w: KlParams, alpha: f64) -> f64 {
        (0..20_000)
            .map(|i| t_u * i as f64 / 20_000.0)
            .map(|t_q| objective_f(CouplingPoint::new(t_u, t_q).unwrap(), w, alpha).unwrap())
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn inner_min_beats_dense_scan() {
        let w = KlParams::new(0.5, 0.05).unwrap();
        for &alpha in &[0.0, 0.3, 0.8, 1.0] {
            for &t_u in &[0.1, 0.3, 0.49, 0.52, 0.8, 1.0] {
                let (t_q, v) = inner_min(t_u, w, alpha);
                assert!(t_q <= t_u);
                let scan = brute_inner(t_u, w, alpha);
                assert!(v <= scan + 1e-9, "alpha={alpha} t_u={t_u}: {v} > {scan}");
            }
        }
    }

    #[test]
    fn stationarity_at_interior_argmin() {
        let w = KlParams::new(0.5, 1e-3).unwrap();
        let alpha = 1.0 + 1.0 / w.w_q.ln();
        let r = inf_f(w, alpha, &InfOptions::default()).unwrap();
        let (t_u, t_q) = (r.argmin.t_u, r.argmin.t_q);
        assert!(t_q > 0.0);
        let lhs = (t_u - t_q) / (w.w_u - w.w_q);
        let rhs = (t_q / w.w_q).powf(1.0 - alpha) * ((1.0 - t_q) / (1.0 - w.w_q)).powf(alpha);
        assert!((lhs - rhs).abs() < 1e-4, "{lhs} vs {rhs}");
    }

    #[test]
    fn infimum_is_nonnegative_and_grid_stable() {
        let w = KlParams::new(0.5, 0.02).unwrap();
        for &alpha in &[0.2, 0.6, 0.9] {
            let coarse = InfOptions {
                tu_grid: 500,
                ..Default::default()
            };
            let a = inf_f(w, alpha, &coarse).unwrap();
            let b = inf_f(w, alpha, &InfOptions::default()).unwrap();
            assert!(a.value >= -1e-12);
            assert!(
                (a.value - b.value).abs() < 1e-5,
                "{} vs {}",
                a.value,
                b.value
            );
        }
    }

    #[test]
    fn lop_is_nonincreasing_in_rho_u() {
        let w = KlParams::new(0.5, 0.01).unwrap();
        let opts = InfOptions {
            tu_grid: 300,
            alpha_grid: 41,
            ..Default::default()
        };
        let vals: Vec<f64> = [0.0, 0.25, 0.5, 1.0]
            .iter()
            .map(|&r| lop_rho_q(w, r, &opts).unwrap().raw)
            .collect();
        assert!(vals.windows(2).all(|p| p[1] <= p[0] + 1e-9), "{vals:?}");
        assert!(lop_rho_q(w, -0.1, &opts).is_err());
    }

    #[test]
    fn golden_finds_parabola_minimum() {
        let (x, v) = golden(|x| (x - 0.3).powi(2) + 1.0, 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-7 && (v - 1.0).abs() < 1e-14);
    }
}
