use std::fmt;

use serde::{Deserialize, Serialize};

use super::{t_sf, StatsError};

/// Term names of `Distance ~ Bin * Corpus`, in design-column order.
pub const TERMS: [&str; 4] = ["Intercept", "Bin", "Control", "Bin:Control"];

/// Relative residual norm below which a column counts as collinear.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub term: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t_value: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub coefficients: Vec<Coefficient>,
    pub n_obs: usize,
    pub residual_df: usize,
    /// Residual standard error.
    pub sigma: f64,
    pub r_squared: f64,
    #[serde(skip)]
    pub residuals: Vec<f64>,
}

impl RegressionFit {
    pub fn term(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.term == name)
    }

    pub fn estimate(&self, name: &str) -> f64 {
        self.term(name).map_or(f64::NAN, |c| c.estimate)
    }

    pub fn p_value(&self, name: &str) -> f64 {
        self.term(name).map_or(f64::NAN, |c| c.p_value)
    }

    /// Coefficient table in the usual Estimate / Std. Error / p-value layout.
    pub fn to_table(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for RegressionFit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<14}{:>12}{:>12}{:>14}", "Effect", "Estimate", "Std. Error", "p-value")?;
        for c in &self.coefficients {
            let name = if c.term == "Intercept" { "(Intercept)" } else { c.term.as_str() };
            let p = if c.p_value < 0.001 {
                "<.001".to_string()
            } else {
                format!("{:.3}", c.p_value)
            };
            let stars = significance_stars(c.p_value);
            writeln!(
                f,
                "{:<14}{:>12.4}{:>12.4}{:>10} {:<3}",
                name, c.estimate, c.std_error, p, stars
            )?;
        }
        write!(
            f,
            "Residual standard error: {:.4} on {} degrees of freedom; R-squared: {:.4}",
            self.sigma, self.residual_df, self.r_squared
        )
    }
}

/// `***` below .001, `**` below .01, `*` below .05.
pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

/// One observation for `Distance ~ Bin * Corpus`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionRow {
    pub bin: f64,
    pub is_control: bool,
    pub distance: f64,
}

/// Fits `distance ~ 1 + bin + control + bin:control`.
pub fn ols_interaction(rows: &[InteractionRow]) -> Result<RegressionFit, StatsError> {
    if rows.len() < 5 {
        return Err(StatsError::TooFewRows {
            needed: 5,
            got: rows.len(),
        });
    }
    let design: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            let c = if r.is_control { 1.0 } else { 0.0 };
            vec![1.0, r.bin, c, r.bin * c]
        })
        .collect();
    let y: Vec<f64> = rows.iter().map(|r| r.distance).collect();
    ols(&design, &y, &TERMS)
}

/// Ordinary least squares via Householder QR. Columns that are (numerically)
/// linear combinations of earlier columns make the fit fail instead of being
/// dropped.
pub fn ols(design: &[Vec<f64>], y: &[f64], names: &[&str]) -> Result<RegressionFit, StatsError> {
    let n = design.len();
    let p = names.len();
    if y.len() != n {
        return Err(StatsError::LengthMismatch(n, y.len()));
    }
    if n <= p {
        return Err(StatsError::TooFewRows { needed: p + 1, got: n });
    }
    if design.iter().any(|row| row.len() != p) {
        return Err(StatsError::LengthMismatch(p, design.iter().map(Vec::len).find(|&l| l != p).unwrap_or(p)));
    }
    if design.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }

    // column-major working copy
    let mut a: Vec<Vec<f64>> = (0..p).map(|j| design.iter().map(|row| row[j]).collect()).collect();
    let mut qty = y.to_vec();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(p);
    let mut collinear = Vec::new();

    for k in 0..p {
        let original_norm = norm(&a[k]);
        let r = reflectors.len();
        let tail = norm(&a[k][r..]);
        if original_norm == 0.0 || tail <= RANK_TOL * original_norm {
            collinear.push(names[k].to_string());
            continue;
        }
        // v = x + sign(x0) |x| e0, normalized
        let mut v = a[k][r..].to_vec();
        let alpha = if v[0] >= 0.0 { -tail } else { tail };
        v[0] -= alpha;
        let vnorm = norm(&v);
        v.iter_mut().for_each(|x| *x /= vnorm);
        for col in a.iter_mut().skip(k) {
            reflect(&v, &mut col[r..]);
        }
        reflect(&v, &mut qty[r..]);
        reflectors.push(v);
    }
    if !collinear.is_empty() {
        return Err(StatsError::RankDeficient(collinear));
    }

    // R is the upper p x p block of `a`; solve R beta = (Q^T y)[..p]
    let rmat = |i: usize, j: usize| a[j][i];
    let mut beta = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = ((i + 1)..p).map(|j| rmat(i, j) * beta[j]).sum();
        beta[i] = (qty[i] - s) / rmat(i, i);
    }
    // R^{-1}, upper triangular
    let mut rinv = vec![vec![0.0; p]; p];
    for j in 0..p {
        rinv[j][j] = 1.0 / rmat(j, j);
        for i in (0..j).rev() {
            let s: f64 = ((i + 1)..=j).map(|k| rmat(i, k) * rinv[k][j]).sum();
            rinv[i][j] = -s / rmat(i, i);
        }
    }

    let residuals: Vec<f64> = design
        .iter()
        .zip(y)
        .map(|(row, &yi)| yi - row.iter().zip(&beta).map(|(x, b)| x * b).sum::<f64>())
        .collect();
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let df = n - p;
    let sigma2 = rss / df as f64;
    let mean = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let r_squared = if tss > 0.0 {
        (1.0 - rss / tss).clamp(0.0, 1.0)
    } else {
        1.0
    };

    let coefficients = (0..p)
        .map(|j| {
            let var: f64 = (j..p).map(|k| rinv[j][k] * rinv[j][k]).sum::<f64>() * sigma2;
            let se = var.sqrt();
            let estimate = beta[j];
            let (t_value, p_value) = if se > 0.0 {
                let t = estimate / se;
                (t, t_sf(t, df as f64))
            } else if estimate == 0.0 {
                (0.0, 1.0)
            } else {
                (estimate.signum() * f64::INFINITY, 0.0)
            };
            Coefficient {
                term: names[j].to_string(),
                estimate,
                std_error: se,
                t_value,
                p_value,
            }
        })
        .collect();

    Ok(RegressionFit {
        coefficients,
        n_obs: n,
        residual_df: df,
        sigma: sigma2.sqrt(),
        r_squared,
        residuals,
    })
}

fn norm(v: &[f64]) -> f64 {
    // scaled to avoid overflow on large columns
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * v.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}

fn reflect(v: &[f64], x: &mut [f64]) {
    let d: f64 = v.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi -= 2.0 * d * vi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(data: &[(f64, bool, f64)]) -> Vec<InteractionRow> {
        data.iter()
            .map(|&(bin, is_control, distance)| InteractionRow {
                bin,
                is_control,
                distance,
            })
            .collect()
    }

    #[test]
    fn exact_fit() {
        let mut data = Vec::new();
        for bin in 1..=5 {
            let b = bin as f64;
            data.push((b, false, 3.0 - 0.5 * b));
            data.push((b, true, 3.0));
        }
        let fit = ols_interaction(&rows(&data)).unwrap();
        assert!((fit.estimate("Intercept") - 3.0).abs() < 1e-10);
        assert!((fit.estimate("Bin") + 0.5).abs() < 1e-10);
        assert!(fit.estimate("Control").abs() < 1e-10);
        assert!((fit.estimate("Bin:Control") - 0.5).abs() < 1e-10);
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn constant_response() {
        let data: Vec<_> = (0..10).map(|i| ((i % 5 + 1) as f64, i >= 5, 2.5)).collect();
        let fit = ols_interaction(&rows(&data)).unwrap();
        for t in ["Bin", "Control", "Bin:Control"] {
            assert!(fit.estimate(t).abs() < 1e-12, "{t}");
            assert!(fit.term(t).unwrap().p_value <= 1.0);
        }
    }

    #[test]
    fn rank_deficiency_is_named() {
        // no control rows: Control and Bin:Control are zero columns
        let data: Vec<_> = (1..=6).map(|i| (i as f64, false, i as f64)).collect();
        assert_eq!(
            ols_interaction(&rows(&data)),
            Err(StatsError::RankDeficient(vec!["Control".into(), "Bin:Control".into()]))
        );
        // a single bin: Bin duplicates Intercept
        let data: Vec<_> = (0..6).map(|i| (1.0, i % 2 == 0, i as f64)).collect();
        let err = ols_interaction(&rows(&data)).unwrap_err();
        assert!(matches!(err, StatsError::RankDeficient(ref v) if v.contains(&"Bin".to_string())));
    }

    #[test]
    fn too_few_rows() {
        let data: Vec<_> = (1..=4).map(|i| (i as f64, i % 2 == 0, 1.0)).collect();
        assert_eq!(
            ols_interaction(&rows(&data)),
            Err(StatsError::TooFewRows { needed: 5, got: 4 })
        );
    }

    #[test]
    fn table_layout() {
        let mut data = Vec::new();
        for bin in 1..=5 {
            let b = bin as f64;
            data.push((b, false, 3.0 - 0.5 * b + 0.01 * (b * 7.0).sin()));
            data.push((b, true, 3.0 + 0.01 * (b * 3.0).cos()));
        }
        let table = ols_interaction(&rows(&data)).unwrap().to_table();
        assert!(table.starts_with("Effect"));
        assert!(table.contains("(Intercept)"));
        assert!(table.contains("Bin:Control"));
        assert_eq!(significance_stars(0.0005), "***");
        assert_eq!(significance_stars(0.005), "**");
        assert_eq!(significance_stars(0.02), "*");
        assert_eq!(significance_stars(0.2), "");
    }
}
