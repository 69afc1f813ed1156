//! Finite-sample corrected empirical quantiles.
//!
//! For values `v_1..v_n` and level `alpha`:
//!
//! * the upper quantile is the `ceil((1 - alpha)(n + 1))`-th smallest value,
//!   or `+inf` when that rank exceeds `n`;
//! * the lower quantile is the `floor(alpha (n + 1))`-th smallest value, or
//!   `-inf` when that rank is `0`.
//!
//! Both ranks are derived from a single exactly computed
//! `floor(alpha (n + 1))`, since `ceil((1 - alpha)(n + 1)) = n + 1 - floor(alpha (n + 1))`
//! holds over the reals. Rounding in `1 - alpha` therefore never shifts one
//! rank without the other, and `lower(v) = -upper(-v)` holds bit for bit.
//!
//! Results are plain `f64` used as extended reals: `+-inf` are legitimate
//! outputs, NaN inputs are rejected.

use crate::error::{Error, Result};

/// `floor(alpha * k)` computed without rounding error, for `alpha` in
/// `[0, 1]` and `k < 2^52`.
pub fn exact_floor_mul(alpha: f64, k: u64) -> u64 {
    let kf = k as f64;
    let mut f = (alpha * kf).floor();
    // The sign of `alpha * k - f` is exact under a fused multiply-add.
    if alpha.mul_add(kf, -f) < 0.0 {
        f -= 1.0;
    } else if alpha.mul_add(kf, -(f + 1.0)) >= 0.0 {
        f += 1.0;
    }
    f.max(0.0) as u64
}

/// `alpha * k <= j` decided exactly.
pub fn exact_mul_le(alpha: f64, k: u64, j: u64) -> bool {
    alpha.mul_add(k as f64, -(j as f64)) <= 0.0
}

/// 1-based rank of the upper quantile; `n + 1` means `+inf`.
pub fn upper_rank(n: usize, alpha: f64) -> usize {
    n + 1 - exact_floor_mul(alpha, n as u64 + 1) as usize
}

/// 1-based rank of the lower quantile; `0` means `-inf`.
pub fn lower_rank(n: usize, alpha: f64) -> usize {
    exact_floor_mul(alpha, n as u64 + 1) as usize
}

fn check(values: &[f64], alpha: f64) -> Result<()> {
    if values.is_empty() {
        return Err(Error::param("quantile of an empty sequence"));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::param(format!("alpha = {alpha} outside [0, 1]")));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::param("quantile input contains NaN"));
    }
    Ok(())
}

/// `k`-th smallest (1-based) of a non-empty slice; `0` gives `-inf` and
/// `n + 1` gives `+inf`.
pub fn kth_smallest(values: &[f64], k: usize) -> f64 {
    let n = values.len();
    if k == 0 {
        return f64::NEG_INFINITY;
    }
    if k > n {
        return f64::INFINITY;
    }
    let mut buf = values.to_vec();
    let (_, kth, _) = buf.select_nth_unstable_by(k - 1, f64::total_cmp);
    *kth
}

/// The `ceil((1 - alpha)(n + 1))`-th smallest value, `+inf` on overflow.
pub fn upper_quantile(values: &[f64], alpha: f64) -> Result<f64> {
    check(values, alpha)?;
    Ok(kth_smallest(values, upper_rank(values.len(), alpha)))
}

/// The `floor(alpha (n + 1))`-th smallest value, `-inf` when the rank is 0.
pub fn lower_quantile(values: &[f64], alpha: f64) -> Result<f64> {
    check(values, alpha)?;
    Ok(kth_smallest(values, lower_rank(values.len(), alpha)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_examples() {
        assert_eq!(upper_quantile(&[3.0, 1.0, 2.0], 0.25).unwrap(), 3.0);
        assert_eq!(lower_quantile(&[3.0, 1.0, 2.0], 0.25).unwrap(), 1.0);
        assert_eq!(upper_quantile(&[5.0, 5.0, 5.0], 0.5).unwrap(), 5.0);
        assert_eq!(lower_quantile(&[-3.0, 0.0, 0.0], 0.25).unwrap(), -3.0);
    }

    #[test]
    fn overflow_to_infinity() {
        assert_eq!(upper_quantile(&[1.0, 2.0], 0.0).unwrap(), f64::INFINITY);
        assert_eq!(lower_quantile(&[1.0, 2.0], 0.0).unwrap(), f64::NEG_INFINITY);
        // alpha < 1/(n+1)
        assert_eq!(upper_quantile(&[1.0, 2.0, 3.0], 0.24).unwrap(), f64::INFINITY);
        assert_eq!(lower_quantile(&[1.0, 2.0, 3.0], 0.24).unwrap(), f64::NEG_INFINITY);
        assert_eq!(upper_quantile(&[1.0, 2.0, 3.0], 0.25).unwrap(), 3.0);
    }

    #[test]
    fn alpha_one_gives_bottom_and_top() {
        let v = [4.0, -1.0, 7.0];
        // floor(1 * 4) = 4 > n, upper rank 0.
        assert_eq!(lower_quantile(&v, 1.0).unwrap(), f64::INFINITY);
        assert_eq!(upper_quantile(&v, 1.0).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn errors() {
        assert!(upper_quantile(&[], 0.1).is_err());
        assert!(upper_quantile(&[1.0], -0.1).is_err());
        assert!(lower_quantile(&[1.0], 1.5).is_err());
        assert!(lower_quantile(&[f64::NAN], 0.5).is_err());
    }

    #[test]
    fn exact_floor_at_decimal_levels() {
        assert_eq!(exact_floor_mul(0.1, 10), 1);
        assert_eq!(exact_floor_mul(0.1, 30), 3);
        // 0.3 and 0.7 round down when parsed, so the products fall just
        // short of 3 and 7.
        assert_eq!(exact_floor_mul(0.3, 10), 2);
        assert_eq!(exact_floor_mul(0.7, 10), 6);
        assert_eq!(exact_floor_mul(0.5, 10), 5);
        assert_eq!(exact_floor_mul(0.25, 4), 1);
        assert_eq!(exact_floor_mul(0.0, 7), 0);
        assert_eq!(exact_floor_mul(1.0, 7), 7);
        // 0.1 as f64 is slightly above 1/10, so 0.1 * 10 exceeds 1 exactly.
        assert!(!exact_mul_le(0.1, 10, 1));
        assert!(exact_mul_le(0.25, 4, 1));
    }

    #[test]
    fn ranks_are_complementary() {
        for n in 1..40 {
            for a in 0..=100 {
                let alpha = a as f64 / 100.0;
                assert_eq!(upper_rank(n, alpha) + lower_rank(n, alpha), n + 1);
            }
        }
    }
}
