//! Exact log-domain arithmetic for the doubling-violating weight.
//!
//! The weight is built from balls `B(x_k, r_k)` with `r_k = 2^(-k^(4 k beta))`.
//! These radii underflow any float, so nothing here is ever materialized on a
//! grid: radii live as exact `log2` integers, ball masses as
//! (rational mantissa, big-integer exponent) pairs in units of the unit-ball
//! volume, and the doubling-ratio lower bounds as exact rationals.

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use serde::Serialize;

use crate::error::{Error, Result};

/// A positive quantity stored as `mantissa * 2^log2`, exact.
#[derive(Clone, Debug)]
pub struct LogQuantity {
    pub mantissa: BigRational,
    pub log2: BigInt,
}

/// Exact descriptor of the weight construction for `k = 5..=k_max`.
#[derive(Debug)]
pub struct LogWeightDescriptor {
    pub beta: u32,
    pub k_min: u32,
    pub k_max: u32,
    /// `log2 r_k = -k^(4 k beta)`, exact.
    pub log2_r: Vec<BigInt>,
    /// Ball mass `|B(x_k, r_k)|` in units of the unit-ball volume, per
    /// supported dimension: `ball_mass[N-2][k - k_min] = 2^(-N k^(4 beta k))`.
    pub log2_ball_mass: [Vec<LogQuantity>; 2],
}

/// One row of the doubling-ratio lower-bound table.
#[derive(Debug, Clone, Serialize)]
pub struct RatioBound {
    pub k: u32,
    /// Decimal rendering of the exact rational bound.
    pub bound_decimal: String,
    /// f64 view of the bound (for plots; the comparison itself is exact).
    pub bound_approx: f64,
}

/// Build the exact descriptor. `k_max` above 16 is rejected: the radius
/// exponents `k^(4 k beta)` grow past any practical big-integer budget.
pub fn pathological_bbar(beta: u32, k_max: u32) -> Result<LogWeightDescriptor> {
    if beta < 2 {
        return Err(Error::invalid(format!("beta must be >= 2, got {beta}")));
    }
    if !(5..=16).contains(&k_max) {
        return Err(Error::invalid(format!(
            "k_max must be in [5, 16], got {k_max}"
        )));
    }
    let k_min = 5u32;
    let mut log2_r = Vec::new();
    let mut mass2 = Vec::new();
    let mut mass3 = Vec::new();
    for k in k_min..=k_max {
        let e = radius_exponent(k, beta);
        log2_r.push(-e.clone());
        mass2.push(LogQuantity {
            mantissa: BigRational::one(),
            log2: -(BigInt::from(2) * &e),
        });
        mass3.push(LogQuantity {
            mantissa: BigRational::one(),
            log2: -(BigInt::from(3) * &e),
        });
    }
    Ok(LogWeightDescriptor {
        beta,
        k_min,
        k_max,
        log2_r,
        log2_ball_mass: [mass2, mass3],
    })
}

/// `k^(4 k beta)` as an exact big integer.
fn radius_exponent(k: u32, beta: u32) -> BigInt {
    BigInt::from(k).pow(4 * k * beta)
}

impl LogWeightDescriptor {
    pub fn ks(&self) -> impl Iterator<Item = u32> {
        self.k_min..=self.k_max
    }

    /// `log2 r_k`, exact.
    pub fn log2_radius(&self, k: u32) -> &BigInt {
        &self.log2_r[(k - self.k_min) as usize]
    }

    /// Center seed of the dense sequence: the van der Corput base-2 point
    /// replicated per axis with a per-axis dyadic shift. Decorative; the
    /// bound chain never needs the centers.
    pub fn center(&self, k: u32, dim: usize) -> Vec<f64> {
        let mut x = Vec::with_capacity(dim);
        for d in 0..dim {
            let mut v = 0.0f64;
            let mut base = 0.5f64;
            let mut n = k as u64 + d as u64;
            while n > 0 {
                v += (n & 1) as f64 * base;
                base *= 0.5;
                n >>= 1;
            }
            x.push(v);
        }
        x
    }
}

/// Exact rational lower bound `3 / (2^N (9 k^-3 + 2 k^-4k))` for the doubling
/// ratio at scale `k`, for every `k` in the descriptor. The returned table is
/// verified strictly increasing with exact comparisons; the limit is
/// infinite, so the weight cannot satisfy the `A_2` doubling condition.
pub fn verify_a2_violation(desc: &LogWeightDescriptor, n_dim: u32) -> Result<Vec<RatioBound>> {
    if !(2..=3).contains(&n_dim) {
        return Err(Error::invalid(format!("N must be 2 or 3, got {n_dim}")));
    }
    let mut rows = Vec::new();
    let mut prev: Option<BigRational> = None;
    for k in desc.ks() {
        let bound = ratio_lower_bound(k, n_dim);
        if let Some(p) = &prev {
            if &bound <= p {
                return Err(Error::NonFinite(format!(
                    "ratio bound failed to increase at k = {k}"
                )));
            }
        }
        rows.push(RatioBound {
            k,
            bound_decimal: decimal_string(&bound, 6),
            bound_approx: rational_to_f64(&bound),
        });
        prev = Some(bound);
    }
    Ok(rows)
}

/// `3 / (2^N (9 k^-3 + 2 k^-4k))` as an exact rational.
pub fn ratio_lower_bound(k: u32, n_dim: u32) -> BigRational {
    let k3 = BigInt::from(k).pow(3);
    let k4k = BigInt::from(k).pow(4 * k);
    let term = BigRational::new(BigInt::from(9), k3) + BigRational::new(BigInt::from(2), k4k);
    let denom = BigRational::from_integer(BigInt::from(2).pow(n_dim)) * term;
    BigRational::from_integer(BigInt::from(3)) / denom
}

/// Verdict for one displayed per-k inequality of the construction.
#[derive(Debug, Clone, Serialize)]
pub struct TermBound {
    pub k: u32,
    pub description: String,
    pub holds: bool,
}

/// Verify the displayed per-k term bounds of the construction in exact
/// log-domain arithmetic:
///
/// * the mass of the weight spike, `k^(4 beta k) 2^(-N k^(4 beta k))`, is at
///   most `2^(-k^(4 beta k))` (checked through the sufficient integer
///   inequality `4 beta k ceil(log2 k) <= (N-1) k^(4 beta k)`), and that in
///   turn is at most `2^-k`;
/// * the annulus mass `(2^N - 1) 2^(-N k^(4 beta k))` is at least three ball
///   masses, i.e. `2^N - 1 >= 3`.
///
/// Only the displayed per-k bounds are checked; the full series summation is
/// not formalized.
pub fn verify_term_bounds(desc: &LogWeightDescriptor, n_dim: u32) -> Result<Vec<TermBound>> {
    if !(2..=3).contains(&n_dim) {
        return Err(Error::invalid(format!("N must be 2 or 3, got {n_dim}")));
    }
    let mut out = Vec::new();
    for k in desc.ks() {
        let e = radius_exponent(k, desc.beta);
        let lhs = BigInt::from(4 * desc.beta * k) * BigInt::from(ceil_log2(k));
        let rhs = BigInt::from(n_dim - 1) * &e;
        out.push(TermBound {
            k,
            description: format!("k^(4bk) * 2^(-N k^(4bk)) <= 2^(-k^(4bk)) at k={k}"),
            holds: lhs <= rhs,
        });
        out.push(TermBound {
            k,
            description: format!("2^(-k^(4bk)) <= 2^(-k) at k={k}"),
            holds: BigInt::from(k) <= e,
        });
        out.push(TermBound {
            k,
            description: format!("(2^N - 1) >= 3 annulus-mass factor at k={k}"),
            holds: BigInt::from(2).pow(n_dim) - BigInt::one() >= BigInt::from(3),
        });
    }
    Ok(out)
}

fn ceil_log2(k: u32) -> u32 {
    let mut bits = 32 - k.leading_zeros();
    if k.is_power_of_two() {
        bits -= 1;
    }
    bits
}

/// Decimal rendering of a rational with `digits` fractional digits,
/// truncated toward zero.
pub fn decimal_string(r: &BigRational, digits: u32) -> String {
    let sign = if r.is_negative() { "-" } else { "" };
    let abs = r.abs();
    let scale = BigInt::from(10).pow(digits);
    let scaled = (abs.numer() * &scale) / abs.denom();
    let (int_part, frac_part) = (&scaled / &scale, &scaled % &scale);
    let mut frac = frac_part.to_string();
    while (frac.len() as u32) < digits {
        frac.insert(0, '0');
    }
    format!("{sign}{int_part}.{frac}")
}

fn rational_to_f64(r: &BigRational) -> f64 {
    r.numer()
        .to_f64()
        .and_then(|n| r.denom().to_f64().map(|d| n / d))
        .unwrap_or_else(|| {
            // Overflowing numerator/denominator: fall back to the sign only.
            match r.numer().sign() {
                Sign::Minus => f64::NEG_INFINITY,
                Sign::NoSign => 0.0,
                Sign::Plus => f64::INFINITY,
            }
        })
}
