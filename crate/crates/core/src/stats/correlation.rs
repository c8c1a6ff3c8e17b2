use super::{t_sf, StatsError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub r: f64,
    /// Two-sided p-value of r = 0 from Student's t with n - 2 df.
    pub p: f64,
    pub n: usize,
}

fn centered_moments(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    Ok((sxy, sxx, syy))
}

/// Sample Pearson correlation with its significance.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Correlation, StatsError> {
    if x.len() < 3 {
        return Err(StatsError::TooFewRows { needed: 3, got: x.len() });
    }
    let (sxy, sxx, syy) = centered_moments(x, y)?;
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::Flat);
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let n = x.len();
    let df = (n - 2) as f64;
    let p = if r.abs() == 1.0 {
        0.0
    } else {
        t_sf(r * (df / (1.0 - r * r)).sqrt(), df)
    };
    Ok(Correlation { r, p, n })
}

/// Least-squares slope of y on x.
pub fn slope(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() < 2 {
        return Err(StatsError::TooFewRows { needed: 2, got: x.len() });
    }
    let (sxy, sxx, _) = centered_moments(x, y)?;
    if sxx == 0.0 {
        return Err(StatsError::Flat);
    }
    Ok(sxy / sxx)
}
