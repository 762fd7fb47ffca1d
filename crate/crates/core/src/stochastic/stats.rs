use crate::linalg::{pairwise_mean, pairwise_sum};

/// Sample mean and its standard error, with pairwise reductions.
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let m = pairwise_mean(v);
    if n == 1 {
        return (m, 0.0);
    }
    let dev: Vec<f64> = v.iter().map(|x| (x - m).powi(2)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    (m, (var / n as f64).sqrt())
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
