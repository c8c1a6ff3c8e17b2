//! Statistics kernel: Student's t tail probabilities, OLS with an
//! interaction term, Pearson correlation.

mod correlation;
mod ols;
pub mod special;

pub use correlation::{pearson, slope, Correlation};
pub use ols::{ols, ols_interaction, significance_stars, Coefficient, InteractionRow, RegressionFit, TERMS};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least {needed} observations, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("design matrix is rank deficient: {} collinear with earlier columns", .0.join(", "))]
    RankDeficient(Vec<String>),
    #[error("inputs have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("series is flat (zero variance)")]
    Flat,
    #[error("non-finite value in input")]
    NonFinite,
}

/// Two-sided tail probability P(|T| >= |t|) for Student's t with `df`
/// degrees of freedom.
pub fn t_sf(t: f64, df: f64) -> f64 {
    if t.is_nan() || !(df > 0.0) {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    special::beta_reg(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_sf_examples() {
        assert_eq!(t_sf(0.0, 5.0), 1.0);
        assert_eq!(t_sf(f64::INFINITY, 5.0), 0.0);
        assert!(t_sf(1e6, 3.0) < 1e-15);
        assert!((t_sf(2.0, 10.0) - 0.07339).abs() < 5e-6);
        assert_eq!(t_sf(-2.0, 10.0), t_sf(2.0, 10.0));
        // df = 1 is Cauchy: P(|T| >= t) = 1 - 2 atan(t) / pi
        let cauchy = 1.0 - 2.0 * 3.0f64.atan() / std::f64::consts::PI;
        assert!((t_sf(3.0, 1.0) - cauchy).abs() < 1e-14);
        // df = 2: P(|T| >= t) = 1 - t / sqrt(2 + t^2)
        assert!((t_sf(1.5, 2.0) - (1.0 - 1.5 / (2.0f64 + 2.25).sqrt())).abs() < 1e-14);
    }

    #[test]
    fn t_sf_is_monotone() {
        for df in [1.0, 3.0, 30.0, 200.0] {
            let mut prev = 1.0;
            for i in 1..400 {
                let p = t_sf(i as f64 * 0.05, df);
                assert!(p <= prev, "df={df} i={i}");
                prev = p;
            }
        }
    }
}
