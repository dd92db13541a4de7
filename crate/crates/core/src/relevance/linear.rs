use serde::{Deserialize, Serialize};

use super::features::Dataset;
use super::Classifier;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinearConfig {
    pub c: f64,
    pub epochs: usize,
}

impl Default for LinearConfig {
    fn default() -> Self {
        LinearConfig { c: 0.1, epochs: 1000 }
    }
}

/// Linear max-margin classifier, `w·x + b ≥ 0 → relevant`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearSvm {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        (self.weights.iter().map(|w| w * w).sum::<f64>() + self.bias * self.bias).sqrt()
    }
}

/// Minimizes `½‖w‖² + C Σ max(0, 1 − yᵢ(w·xᵢ + b))` with the bias treated as
/// a weight on a constant feature, by full-batch projected subgradient
/// steps of size `1/(λt)`, `λ = 1/(Cn)`. The iterate with the lowest
/// objective is returned.
pub fn linear_train(data: &Dataset, config: &LinearConfig) -> Result<LinearSvm> {
    data.require_two_classes()?;
    if !(config.c > 0.0) || !config.c.is_finite() {
        return Err(Error::InvalidInput(format!("C must be positive, got {}", config.c)));
    }
    let n = data.len();
    let d = data.dim();
    let lambda = 1.0 / (config.c * n as f64);
    let radius = 1.0 / lambda.sqrt();
    let ys: Vec<f64> = data.y.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    // w[d] is the bias
    let mut w = vec![0.0; d + 1];
    let objective = |w: &[f64]| -> f64 {
        let reg = 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>();
        let loss: f64 = data
            .x
            .iter()
            .zip(&ys)
            .map(|(x, y)| (1.0 - y * dot1(w, x)).max(0.0))
            .sum();
        reg + loss / n as f64
    };
    let mut best = (objective(&w), w.clone());
    let mut g = vec![0.0; d + 1];
    for t in 1..=config.epochs.max(1) {
        g.iter_mut().zip(&w).for_each(|(g, w)| *g = lambda * w);
        for (x, y) in data.x.iter().zip(&ys) {
            if y * dot1(&w, x) < 1.0 {
                for (gk, xk) in g.iter_mut().zip(x.iter().chain(std::iter::once(&1.0))) {
                    *gk -= y * xk / n as f64;
                }
            }
        }
        let eta = 1.0 / (lambda * t as f64);
        w.iter_mut().zip(&g).for_each(|(w, g)| *w -= eta * g);
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > radius {
            w.iter_mut().for_each(|v| *v *= radius / norm);
        }
        let obj = objective(&w);
        if !obj.is_finite() {
            return Err(Error::Training(format!("objective diverged at step {t}")));
        }
        if obj < best.0 {
            best = (obj, w.clone());
        }
    }
    let mut w = best.1;
    let bias = w.pop().expect("bias slot");
    Ok(LinearSvm { weights: w, bias })
}

fn dot1(w: &[f64], x: &[f64]) -> f64 {
    w[x.len()] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
}

impl Classifier for LinearSvm {
    /// Logistic squashing of the decision value, so `score ≥ 0.5` exactly
    /// when the decision is non-negative.
    fn score(&self, x: &[f64]) -> f64 {
        1.0 / (1.0 + (-self.decision(x)).exp())
    }

    fn predict(&self, x: &[f64]) -> bool {
        self.decision(x) >= 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture(scale: f64) -> Dataset {
        let pts = [
            ([1.0, 2.0], 1),
            ([2.0, 3.0], 1),
            ([1.5, 2.5], 1),
            ([4.0, 0.5], 0),
            ([5.0, 1.0], 0),
            ([4.5, 0.0], 0),
        ];
        Dataset::new(
            pts.iter().map(|(x, _)| x.iter().map(|v| v * scale).collect()).collect(),
            pts.iter().map(|p| p.1).collect(),
        )
        .unwrap()
    }

    fn accuracy(m: &LinearSvm, d: &Dataset) -> f64 {
        d.x.iter().zip(&d.y).filter(|(x, &y)| m.predict(x) == (y == 1)).count() as f64 / d.len() as f64
    }

    #[test]
    fn separates_two_points() {
        let d = Dataset::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![1, 0]).unwrap();
        let m = linear_train(&d, &LinearConfig { c: 10.0, ..Default::default() }).unwrap();
        assert_eq!(accuracy(&m, &d), 1.0);
    }

    #[test]
    fn scale_invariant_predictions_on_separable_data() {
        let cfg = LinearConfig { c: 10.0, ..Default::default() };
        let a = linear_train(&fixture(1.0), &cfg).unwrap();
        let b = linear_train(&fixture(2.0), &cfg).unwrap();
        assert_eq!(accuracy(&a, &fixture(1.0)), 1.0);
        let pa: Vec<bool> = fixture(1.0).x.iter().map(|x| a.predict(x)).collect();
        let pb: Vec<bool> = fixture(2.0).x.iter().map(|x| b.predict(x)).collect();
        assert_eq!(pa, pb);
    }

    #[test]
    fn tiny_c_shrinks_weights() {
        // centered features, three positives against two negatives
        let d = Dataset::new(
            vec![vec![-1.0], vec![1.0], vec![0.0], vec![-0.5], vec![0.5]],
            vec![1, 1, 1, 0, 0],
        )
        .unwrap();
        let m = linear_train(&d, &LinearConfig { c: 1e-6, ..Default::default() }).unwrap();
        assert!(m.norm() < 1e-3, "{}", m.norm());
        assert!(d.x.iter().all(|x| m.predict(x)), "majority class everywhere");
    }

    #[test]
    fn single_class_rejected() {
        let d = Dataset::new(vec![vec![0.0], vec![1.0]], vec![0, 0]).unwrap();
        assert!(matches!(linear_train(&d, &LinearConfig::default()), Err(Error::Training(_))));
    }
}
