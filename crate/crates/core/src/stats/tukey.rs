use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::studentized_range::studentized_range_sf;

/// Seed of the permutation cross-check.
pub const DEFAULT_SEED: u64 = 0xC0FFEE;
pub const DEFAULT_PERMUTATIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TukeyError {
    #[error("need at least 2 groups, got {0}")]
    TooFewGroups(usize),
    #[error("group `{group}` has {n} observations, need at least 2")]
    TooFewObservations { group: String, n: usize },
    #[error("group `{0}` contains a non-finite value")]
    NonFinite(String),
}

/// One pairwise contrast `first − second` of group means.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastResult {
    pub pair: (String, String),
    pub estimate: f64,
    pub std_error: f64,
    pub t_value: f64,
    /// Tukey-adjusted p-value.
    pub p_adj: f64,
}

impl ContrastResult {
    pub fn pair_name(&self) -> String {
        format!("{} vs {}", self.pair.0, self.pair.1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PermutationContrast {
    pub pair: (String, String),
    pub p_perm: f64,
}

fn validate(groups: &BTreeMap<String, Vec<f64>>) -> Result<(), TukeyError> {
    if groups.len() < 2 {
        return Err(TukeyError::TooFewGroups(groups.len()));
    }
    for (name, values) in groups {
        if values.len() < 2 {
            return Err(TukeyError::TooFewObservations {
                group: name.clone(),
                n: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(TukeyError::NonFinite(name.clone()));
        }
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn group_means(groups: &BTreeMap<String, Vec<f64>>) -> Vec<(String, f64)> {
    groups.iter().map(|(k, v)| (k.clone(), mean(v))).collect()
}

/// Pooled within-group variance and its degrees of freedom `N − k`.
fn pooled_variance(slices: &[&[f64]]) -> (f64, f64) {
    let mut ss = 0.0;
    let mut n_total = 0usize;
    for v in slices {
        let m = mean(v);
        ss += v.iter().map(|x| (x - m) * (x - m)).sum::<f64>();
        n_total += v.len();
    }
    let df = (n_total - slices.len()) as f64;
    (ss / df, df)
}

fn t_statistic(estimate: f64, std_error: f64) -> f64 {
    if std_error > 0.0 {
        estimate / std_error
    } else if estimate == 0.0 {
        0.0
    } else {
        estimate.signum() * f64::INFINITY
    }
}

fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

/// All pairwise contrasts of group means with Tukey–Kramer adjusted
/// p-values, sorted by pair name. Groups are ordered by name and each pair
/// is reported as `earlier − later`.
pub fn tukey_pairwise(groups: &BTreeMap<String, Vec<f64>>) -> Result<Vec<ContrastResult>, TukeyError> {
    validate(groups)?;
    let names: Vec<&String> = groups.keys().collect();
    let slices: Vec<&[f64]> = groups.values().map(Vec::as_slice).collect();
    let k = slices.len();
    let (s2, df) = pooled_variance(&slices);
    let means: Vec<f64> = slices.iter().map(|v| mean(v)).collect();

    let mut out: Vec<ContrastResult> = pairs(k)
        .map(|(i, j)| {
            let estimate = means[i] - means[j];
            let std_error = (s2 * (1.0 / slices[i].len() as f64 + 1.0 / slices[j].len() as f64)).sqrt();
            let t_value = t_statistic(estimate, std_error);
            let p_adj = if t_value == 0.0 {
                1.0
            } else if t_value.is_infinite() {
                0.0
            } else {
                studentized_range_sf(t_value.abs() * std::f64::consts::SQRT_2, k, df)
            };
            ContrastResult {
                pair: (names[i].clone(), names[j].clone()),
                estimate,
                std_error,
                t_value,
                p_adj,
            }
        })
        .collect();
    out.sort_by_key(|c| c.pair_name());
    Ok(out)
}

fn max_abs_t(slices: &[&[f64]]) -> f64 {
    let (s2, _) = pooled_variance(slices);
    let means: Vec<f64> = slices.iter().map(|v| mean(v)).collect();
    pairs(slices.len())
        .map(|(i, j)| {
            let se = (s2 * (1.0 / slices[i].len() as f64 + 1.0 / slices[j].len() as f64)).sqrt();
            t_statistic(means[i] - means[j], se).abs()
        })
        .fold(0.0, f64::max)
}

/// Single-step max-|t| permutation test over the same contrasts as
/// [`tukey_pairwise`]. Groups and the values inside each group are sorted
/// before shuffling, so the result depends only on the multiset of values,
/// the seed and the number of permutations.
pub fn tukey_permutation(
    groups: &BTreeMap<String, Vec<f64>>,
    n_permutations: usize,
    seed: u64,
) -> Result<Vec<PermutationContrast>, TukeyError> {
    validate(groups)?;
    let observed = tukey_pairwise(groups)?;
    let sizes: Vec<usize> = groups.values().map(Vec::len).collect();
    let mut pooled: Vec<f64> = groups
        .values()
        .flat_map(|v| {
            let mut v = v.clone();
            v.sort_by(f64::total_cmp);
            v
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut null_max = Vec::with_capacity(n_permutations);
    for _ in 0..n_permutations {
        pooled.shuffle(&mut rng);
        let mut slices: Vec<&[f64]> = Vec::with_capacity(sizes.len());
        let mut start = 0;
        for &n in &sizes {
            slices.push(&pooled[start..start + n]);
            start += n;
        }
        null_max.push(max_abs_t(&slices));
    }

    Ok(observed
        .into_iter()
        .map(|c| {
            let p_perm = if c.t_value == 0.0 {
                1.0
            } else {
                let threshold = c.t_value.abs() * (1.0 - 1e-12);
                let exceed = null_max.iter().filter(|&&m| m >= threshold).count();
                (exceed + 1) as f64 / (n_permutations + 1) as f64
            };
            PermutationContrast { pair: c.pair, p_perm }
        })
        .collect())
}
