use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::Dataset;
use super::nn::{cross_entropy, Adam, Ffn, FfnGrads};
use super::Classifier;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    /// L2 penalty on weights, scaled by the batch size.
    pub alpha: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: vec![100, 100],
            learning_rate: 1e-3,
            alpha: 1e-4,
            batch_size: 200,
            epochs: 200,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub net: Ffn,
    /// Mean training loss per epoch.
    pub loss_curve: Vec<f64>,
}

pub fn mlp_train(data: &Dataset, config: &MlpConfig) -> Result<Mlp> {
    data.require_two_classes()?;
    if config.batch_size == 0 {
        return Err(Error::InvalidInput("batch size must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut net = Ffn::init(data.dim(), &config.hidden, &mut rng);
    let mut adam = Adam::new(config.learning_rate);
    let batch = config.batch_size.min(data.len());
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut loss_curve = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(batch) {
            let mut grads = FfnGrads::zeros(&net);
            for &i in chunk {
                let trace = net.forward(&data.x[i]);
                total += cross_entropy(trace.logits(), data.y[i]);
                net.backward(&trace, data.y[i], &mut grads);
            }
            let m = chunk.len() as f64;
            grads.scale(1.0 / m);
            for (g, l) in grads.weights.iter_mut().zip(&net.layers) {
                for (gk, w) in g.iter_mut().zip(&l.weights) {
                    *gk += config.alpha * w / m;
                }
            }
            adam.step(net.tensors_mut(), grads.tensors());
        }
        let mean = total / data.len() as f64;
        if !mean.is_finite() {
            return Err(Error::Training(format!("loss became {mean} in epoch {}", epoch + 1)));
        }
        loss_curve.push(mean);
    }
    Ok(Mlp { net, loss_curve })
}

impl Classifier for Mlp {
    fn score(&self, x: &[f64]) -> f64 {
        self.net.predict_proba(x)[1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor() -> Dataset {
        Dataset::new(
            vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![0, 0, 1, 1],
        )
        .unwrap()
    }

    #[test]
    fn learns_xor() {
        let d = xor();
        let m = mlp_train(&d, &MlpConfig { epochs: 500, ..Default::default() }).unwrap();
        for (x, y) in d.x.iter().zip(&d.y) {
            assert_eq!(m.predict(x), *y == 1, "{x:?}");
        }
    }

    #[test]
    fn deterministic() {
        let cfg = MlpConfig { epochs: 5, hidden: vec![8, 8], ..Default::default() };
        assert_eq!(mlp_train(&xor(), &cfg).unwrap(), mlp_train(&xor(), &cfg).unwrap());
    }

    #[test]
    fn zero_epochs_is_the_initial_network() {
        let cfg = MlpConfig { epochs: 0, ..Default::default() };
        let m = mlp_train(&xor(), &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        assert_eq!(m.net, Ffn::init(2, &cfg.hidden, &mut rng));
        // zero-initialized output bias: the origin maps to softmax(0, 0)
        assert!((m.score(&[0.0, 0.0]) - 0.5).abs() < 1e-12);
    }
}
