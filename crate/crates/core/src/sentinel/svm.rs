use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{UserFeatures, NUM_FEATURES};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const DEFAULT_NU: f64 = 0.1;
pub const MIN_TRAINING_SAMPLES: usize = 10;
const MAX_ITERATIONS: usize = 10_000;
const OBJECTIVE_TOLERANCE: f64 = 1e-6;

/// Per-dimension standardization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Scaler<T: Real> {
    pub mean: Vec<T>,
    pub scale: Vec<T>,
}

impl<T: Real> Scaler<T> {
    fn fit(rows: &[[T; NUM_FEATURES]]) -> Self {
        let n = T::of_usize(rows.len());
        let mut mean = vec![T::zero(); NUM_FEATURES];
        let mut scale = vec![T::zero(); NUM_FEATURES];
        for d in 0..NUM_FEATURES {
            let m = rows.iter().map(|r| r[d]).sum::<T>() / n;
            let v = rows.iter().map(|r| (r[d] - m) * (r[d] - m)).sum::<T>() / n;
            mean[d] = m;
            scale[d] = if v > T::zero() { v.sqrt() } else { T::one() };
        }
        Scaler { mean, scale }
    }

    pub fn transform(&self, x: &[T; NUM_FEATURES]) -> Vec<T> {
        (0..NUM_FEATURES)
            .map(|d| (x[d] - self.mean[d]) / self.scale[d])
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SupportPoint<T: Real> {
    pub coefficient: T,
    /// Standardized coordinates.
    pub point: Vec<T>,
}

/// Trained one-class boundary with a radial kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct AnomalyModel<T: Real> {
    pub support: Vec<SupportPoint<T>>,
    pub kernel_bandwidth: T,
    pub offset: T,
    pub scaler: Scaler<T>,
    pub nu: T,
    pub iterations: usize,
}

fn sq_dist<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

fn kernel<T: Real>(a: &[T], b: &[T], bandwidth: T) -> T {
    (-sq_dist(a, b) / (T::of(2.0) * bandwidth * bandwidth)).exp()
}

/// Fits the boundary on normal behavior only.
///
/// Solves `min ½ αᵀKα` subject to `0 ≤ αᵢ ≤ 1/(νl)`, `Σα = 1` with pairwise
/// (SMO) updates on the most violating pair, visiting candidates in a
/// seed-dependent order so ties resolve reproducibly. The offset is the
/// ν-quantile of the training decision values.
pub fn train<T: Real>(normal: &[UserFeatures<T>], nu: T, seed: u64) -> Result<AnomalyModel<T>> {
    let l = normal.len();
    if l < MIN_TRAINING_SAMPLES {
        return Err(Error::InsufficientData {
            required: MIN_TRAINING_SAMPLES,
            got: l,
        });
    }
    if !(nu > T::zero() && nu < T::one()) {
        return Err(Error::Argument(format!("nu must lie in (0, 1), got {nu}")));
    }
    let raw: Vec<[T; NUM_FEATURES]> = normal.iter().map(|f| f.to_array()).collect();
    if raw.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Argument("non-finite feature value".into()));
    }
    let scaler = Scaler::fit(&raw);
    let x: Vec<Vec<T>> = raw.iter().map(|r| scaler.transform(r)).collect();

    let mut dists: Vec<T> = Vec::with_capacity(l * (l - 1) / 2);
    for i in 0..l {
        for j in i + 1..l {
            dists.push(sq_dist(&x[i], &x[j]).sqrt());
        }
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mid = dists[dists.len() / 2];
    let bandwidth = if mid > T::zero() { mid } else { T::one() };

    let k: Vec<Vec<T>> = x
        .iter()
        .map(|a| x.iter().map(|b| kernel(a, b, bandwidth)).collect())
        .collect();

    let c = T::one() / (nu * T::of_usize(l));
    let mut order: Vec<usize> = (0..l).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut alpha = vec![T::zero(); l];
    let mut left = T::one();
    for &i in &order {
        let a = c.min(left);
        alpha[i] = a;
        left = left - a;
        if left <= T::zero() {
            break;
        }
    }

    let mut grad: Vec<T> = (0..l)
        .map(|i| (0..l).map(|j| k[i][j] * alpha[j]).sum())
        .collect();
    let objective = |alpha: &[T], grad: &[T]| -> T {
        alpha.iter().zip(grad).map(|(&a, &g)| a * g).sum::<T>() / T::of(2.0)
    };
    let mut obj = objective(&alpha, &grad);
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        // Raise the coefficient with the smallest gradient, lower the largest.
        let mut up: Option<usize> = None;
        let mut down: Option<usize> = None;
        for &t in &order {
            if alpha[t] < c && up.is_none_or(|u| grad[t] < grad[u]) {
                up = Some(t);
            }
            if alpha[t] > T::zero() && down.is_none_or(|d| grad[t] > grad[d]) {
                down = Some(t);
            }
        }
        let (Some(i), Some(j)) = (up, down) else { break };
        let gap = grad[j] - grad[i];
        if i == j || gap <= T::epsilon() {
            break;
        }
        let eta = k[i][i] + k[j][j] - T::of(2.0) * k[i][j];
        let step = if eta > T::epsilon() { gap / eta } else { T::infinity() };
        let delta = step.min(c - alpha[i]).min(alpha[j]);
        alpha[i] = alpha[i] + delta;
        alpha[j] = if delta == alpha[j] { T::zero() } else { alpha[j] - delta };
        for t in 0..l {
            grad[t] = grad[t] + delta * (k[t][i] - k[t][j]);
        }
        iterations += 1;
        // A single pair update moves the objective by O(1/l²); judge
        // convergence over a sweep of l updates.
        if iterations % l == 0 {
            let next = objective(&alpha, &grad);
            let change = (obj - next).abs();
            obj = next;
            if change < T::of(OBJECTIVE_TOLERANCE) {
                break;
            }
        }
    }

    let mut decision = grad.clone();
    decision.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let q = (nu.as_f64() * l as f64).floor() as usize;
    let offset = decision[q.min(l - 1)];

    let support = (0..l)
        .filter(|&i| alpha[i] > T::zero())
        .map(|i| SupportPoint {
            coefficient: alpha[i],
            point: x[i].clone(),
        })
        .collect();
    Ok(AnomalyModel {
        support,
        kernel_bandwidth: bandwidth,
        offset,
        scaler,
        nu,
        iterations,
    })
}

/// Decision value: negative means anomalous, more negative is more severe.
pub fn score<T: Real>(m: &AnomalyModel<T>, f: &UserFeatures<T>) -> T {
    let z = m.scaler.transform(&f.to_array());
    m.support
        .iter()
        .map(|s| s.coefficient * kernel(&s.point, &z, m.kernel_bandwidth))
        .sum::<T>()
        - m.offset
}

impl<T: Real> AnomalyModel<T> {
    pub fn score(&self, f: &UserFeatures<T>) -> T {
        score(self, f)
    }
}
