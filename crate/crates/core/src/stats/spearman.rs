use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

/// Tag reported with every correlation result.
pub const SPEARMAN_METHOD: &str = "spearman-t-approx";

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationResult {
    pub rho: f64,
    pub p_value: f64,
    pub n: usize,
    pub method: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpearmanError {
    #[error("inputs have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 3 paired observations, got {0}")]
    TooFewSamples(usize),
    #[error("input is constant, rank correlation is undefined")]
    ConstantInput,
    #[error("input contains a non-finite value")]
    NonFinite,
}

/// 1-based ranks, tied values sharing the average of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j (0-based) share rank mean((i+1)..=j)
        let rank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = rank;
        }
        i = j;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
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
    sxy / (sxx * syy).sqrt()
}

/// Two-sided p-value of a rank correlation under the t approximation with
/// `n - 2` degrees of freedom.
pub fn spearman_p_value(rho: f64, n: usize) -> f64 {
    let df = n as f64 - 2.0;
    let denom = 1.0 - rho * rho;
    if denom <= 0.0 {
        return 0.0;
    }
    let t = rho * (df / denom).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df is positive for n >= 3");
    (2.0 * dist.cdf(-t.abs())).clamp(0.0, 1.0)
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<CorrelationResult, SpearmanError> {
    if x.len() != y.len() {
        return Err(SpearmanError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(SpearmanError::TooFewSamples(n));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(SpearmanError::NonFinite);
    }
    if x.iter().all(|v| *v == x[0]) || y.iter().all(|v| *v == y[0]) {
        return Err(SpearmanError::ConstantInput);
    }
    let rho = pearson(&average_ranks(x), &average_ranks(y)).clamp(-1.0, 1.0);
    Ok(CorrelationResult {
        rho,
        p_value: spearman_p_value(rho, n),
        n,
        method: SPEARMAN_METHOD,
    })
}
