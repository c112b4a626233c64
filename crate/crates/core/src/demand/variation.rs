use crate::error::{Error, Result};

/// `|d|^theta`, with zero increments contributing nothing for every `theta`.
#[inline]
fn powered(d: f64, theta: f64) -> f64 {
    let d = d.abs();
    if d == 0.0 {
        return 0.0;
    }
    if theta == 2.0 {
        d * d
    } else if theta == 1.0 {
        d
    } else if theta == 3.0 {
        d * d * d
    } else {
        d.powf(theta)
    }
}

fn check(seq: &[f64], theta: f64) -> Result<()> {
    if !(theta >= 0.0) || !theta.is_finite() {
        return Err(Error::domain(format!("variation exponent must be >= 0, got {theta}")));
    }
    if seq.is_empty() {
        return Err(Error::domain("variation of an empty sequence"));
    }
    if let Some(i) = seq.iter().position(|x| !x.is_finite()) {
        return Err(Error::domain(format!("non-finite value at index {i}")));
    }
    Ok(())
}

/// Theta-variation: the maximum over all partitions `t_0 < ... < t_K` of
/// `sum_k |mu_{t_k} - mu_{t_{k-1}}|^theta`.
///
/// For `theta <= 1` the power is subadditive, so the densest partition wins and
/// the answer is the sum of consecutive powered gaps. For `theta > 1` a
/// dynamic program runs over partition endpoints, pruning every predecessor
/// `i` of `j` for which some intermediate value is not strictly between
/// `mu_i` and `mu_j`: inserting that intermediate point never lowers the sum.
/// The scan stops once the intermediate range reaches `mu_j` from both sides,
/// which keeps alternating and random-walk sequences close to linear.
pub fn demand_variation(seq: &[f64], theta: f64) -> Result<f64> {
    check(seq, theta)?;
    if theta <= 1.0 {
        return Ok(seq.windows(2).map(|w| powered(w[1] - w[0], theta)).sum());
    }
    let n = seq.len();
    let mut best = vec![0.0f64; n];
    for j in 1..n {
        let xj = seq[j];
        let mut value = best[j - 1] + powered(xj - seq[j - 1], theta);
        let mut lo = seq[j - 1];
        let mut hi = seq[j - 1];
        for i in (0..j - 1).rev() {
            if lo <= xj && hi >= xj {
                break;
            }
            let xi = seq[i];
            let rising = xi < lo && hi < xj;
            let falling = xi > hi && lo > xj;
            if rising || falling {
                let cand = best[i] + powered(xj - xi, theta);
                if cand > value {
                    value = cand;
                }
            }
            lo = lo.min(xi);
            hi = hi.max(xi);
        }
        best[j] = value;
    }
    Ok(best[n - 1])
}

/// Reference `O(T^2)` dynamic program over partitions, valid for every `theta`.
///
/// `best[j]` is the largest powered sum over partitions ending at `j`; since
/// every term is nonnegative the optimum always ends at the last period.
pub fn demand_variation_dp(seq: &[f64], theta: f64) -> Result<f64> {
    check(seq, theta)?;
    let n = seq.len();
    let mut best = vec![0.0f64; n];
    for j in 1..n {
        let mut value = 0.0f64;
        for i in 0..j {
            let cand = best[i] + powered(seq[j] - seq[i], theta);
            if cand > value {
                value = cand;
            }
        }
        best[j] = value;
    }
    Ok(best[n - 1])
}

/// Prediction error `sum_t |a_t - mu_t|`.
pub fn prediction_error(preds: &[f64], means: &[f64]) -> Result<f64> {
    if preds.len() != means.len() {
        return Err(Error::domain(format!(
            "prediction length {} does not match mean length {}",
            preds.len(),
            means.len()
        )));
    }
    if preds.iter().chain(means).any(|x| !x.is_finite()) {
        return Err(Error::domain("prediction error of non-finite values"));
    }
    Ok(preds.iter().zip(means).map(|(a, m)| (a - m).abs()).sum())
}

/// `log(max(value, 1)) / log(T)` without clamping to `[0, 1]`.
///
/// Monotone in `value`, so rankings over a batch of instances are preserved
/// even when every instance saturates [`exponent_of`].
pub fn raw_exponent(value: f64, horizon: usize) -> f64 {
    if horizon < 2 {
        return 0.0;
    }
    value.max(1.0).ln() / (horizon as f64).ln()
}

/// Smallest exponent `e` in `[0, 1]` with `T^e >= value`.
///
/// Values at or below one map to zero and values above `T` saturate at one.
/// Horizons shorter than two have no meaningful exponent and yield zero.
pub fn exponent_of(value: f64, horizon: usize) -> f64 {
    raw_exponent(value, horizon).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_and_zigzag_examples() {
        let up = [1.0, 2.0, 3.0, 4.0, 5.0];
        let zig = [1.0, 0.0, 1.0, 0.0, 1.0];
        assert_eq!(demand_variation(&up, 2.0).unwrap(), 16.0);
        assert_eq!(demand_variation(&zig, 2.0).unwrap(), 4.0);
        assert_eq!(demand_variation_dp(&up, 2.0).unwrap(), 16.0);
    }

    #[test]
    fn endpoint_collapse_is_not_enough_above_one() {
        // run endpoints give 10^2 + 1^2 + 10^2 = 201, the single jump 19^2 = 361
        let s = [0.0, 10.0, 9.0, 19.0];
        assert_eq!(demand_variation(&s, 2.0).unwrap(), 361.0);
        assert_eq!(demand_variation_dp(&s, 2.0).unwrap(), 361.0);
    }

    #[test]
    fn constant_sequence_has_zero_variation() {
        let c = [3.5; 9];
        for theta in [0.0, 0.5, 1.0, 2.0, 3.0] {
            assert_eq!(demand_variation(&c, theta).unwrap(), 0.0);
            assert_eq!(demand_variation_dp(&c, theta).unwrap(), 0.0);
        }
        assert_eq!(demand_variation(&[7.0], 2.0).unwrap(), 0.0);
    }

    #[test]
    fn theta_one_is_total_variation() {
        let zig = [1.0, 0.0, 1.0, 0.0, 1.0];
        assert_eq!(demand_variation(&zig, 1.0).unwrap(), 4.0);
    }

    #[test]
    fn theta_zero_counts_changes() {
        let s = [1.0, 1.0, 2.0, 2.0, 0.0, 5.0];
        assert_eq!(demand_variation(&s, 0.0).unwrap(), 3.0);
        assert_eq!(demand_variation_dp(&s, 0.0).unwrap(), 3.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(demand_variation(&[1.0, 2.0], -0.5).is_err());
        assert!(demand_variation(&[], 2.0).is_err());
        assert!(demand_variation_dp(&[1.0], f64::NAN).is_err());
        assert!(prediction_error(&[1.0], &[1.0, 2.0]).is_err());
        assert!(demand_variation(&[1.0, f64::INFINITY], 2.0).is_err());
        assert!(prediction_error(&[f64::NAN], &[1.0]).is_err());
    }

    #[test]
    fn prediction_error_examples() {
        let m = vec![0.0; 100];
        let a = vec![1.0; 100];
        assert_eq!(prediction_error(&m, &m).unwrap(), 0.0);
        assert_eq!(prediction_error(&a, &m).unwrap(), 100.0);
    }

    #[test]
    fn exponents() {
        assert_eq!(exponent_of(0.0, 1000), 0.0);
        assert_eq!(exponent_of(1000.0, 1000), 1.0);
        assert!((exponent_of(16.0, 256) - 0.5).abs() < 1e-15);
        assert_eq!(exponent_of(1e9, 1000), 1.0);
        assert!(raw_exponent(1e9, 1000) > 1.0);
    }
}
