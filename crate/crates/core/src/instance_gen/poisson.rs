//! Exact Poisson and zero-truncated Poisson variates.
//!
//! Small means use Knuth's product-of-uniforms method. Larger means are
//! split into pieces of mean at most 8 and summed, which is exact by
//! additivity and only used for query sizes.

use rand::Rng;

use crate::{Error, Result};

const KNUTH_MAX: f64 = 10.0;
const PIECE: f64 = 8.0;
const TRUNCATED_REJECTION_MIN: f64 = 0.01;

fn check(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "Poisson mean must be positive and finite, got {lambda}"
        )))
    }
}

fn knuth<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    let limit = (-lambda).exp();
    let mut k = 0;
    let mut p: f64 = rng.random();
    while p > limit {
        k += 1;
        p *= rng.random::<f64>();
    }
    k
}

pub fn poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> Result<u64> {
    check(lambda)?;
    if lambda < KNUTH_MAX {
        return Ok(knuth(lambda, rng));
    }
    let pieces = (lambda / PIECE).ceil() as u64;
    let each = lambda / pieces as f64;
    Ok((0..pieces).map(|_| knuth(each, rng)).sum())
}

/// Poisson conditioned on being positive.
pub fn poisson_plus<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> Result<u64> {
    check(lambda)?;
    if lambda >= TRUNCATED_REJECTION_MIN {
        loop {
            let x = poisson(lambda, rng)?;
            if x > 0 {
                return Ok(x);
            }
        }
    }
    // Inverse CDF: P[X = x] = e^-λ λ^x / x! / (1 - e^-λ), x >= 1.
    let norm = -(-lambda).exp_m1();
    let target = rng.random::<f64>() * norm;
    let mut term = (-lambda).exp() * lambda;
    let mut acc = term;
    let mut x = 1;
    while acc < target && term > 0.0 {
        x += 1;
        term *= lambda / x as f64;
        acc += term;
    }
    Ok(x)
}

/// P[Poi(λ) = x].
pub fn poisson_pmf(lambda: f64, x: u64) -> f64 {
    let ln = x as f64 * lambda.ln() - lambda - ln_factorial(x);
    ln.exp()
}

fn ln_factorial(x: u64) -> f64 {
    (2..=x).map(|i| (i as f64).ln()).sum()
}
