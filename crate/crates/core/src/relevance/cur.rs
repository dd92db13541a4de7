//! Current-utterance relevance network:
//! `p(R=1 | u_i, u_j; i, j) = ψ(φ_U(u_i), φ_C(u_j), η_U(i), η_C(j))`.
//!
//! Utterances are embedded by a pluggable [`UtteranceEncoder`]; φ_U and φ_C
//! are optional trainable linear maps on top of it (identity when absent).
//! η_U and η_C are learned turn-position tables and ψ is a ReLU
//! feed-forward head with a two-way softmax.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::nn::{cross_entropy, softmax2, Adam, Dense, Ffn, FfnGrads};
use super::pairs::{CandidatePair, PairScore};
use crate::conversation::TurnKey;
use crate::error::{Error, Result};
use crate::textproc::{awe, EmbeddingTable};

/// Maps an utterance to a fixed-size vector.
pub trait UtteranceEncoder: Send + Sync {
    fn dim(&self) -> usize;
    fn encode(&self, key: TurnKey, text: &str) -> Result<Vec<f64>>;
}

/// Averaged word embeddings; utterances without known words map to zeros.
#[derive(Debug, Clone)]
pub struct AweEncoder(pub EmbeddingTable);

impl UtteranceEncoder for AweEncoder {
    fn dim(&self) -> usize {
        self.0.dimension()
    }

    fn encode(&self, _key: TurnKey, text: &str) -> Result<Vec<f64>> {
        Ok(awe(text, &self.0).vector)
    }
}

/// Vectors computed elsewhere (e.g. by a transformer), keyed by
/// `(topic, turn)`.
#[derive(Debug, Clone, Default)]
pub struct PrecomputedEncoder {
    dim: usize,
    vectors: HashMap<TurnKey, Vec<f64>>,
}

impl PrecomputedEncoder {
    /// Lines of `topic:turn<TAB>v1 v2 …`; values may be separated by tabs or
    /// spaces. Blank lines are ignored.
    pub fn from_reader(reader: impl Read, source_name: &str) -> Result<Self> {
        let mut out = PrecomputedEncoder::default();
        for (i, line) in BufReader::new(reader).lines().enumerate() {
            let line = line.map_err(|e| Error::io(source_name, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let at = |m: String| Error::parse(source_name, i + 1, m);
            let (key, rest) = line
                .split_once('\t')
                .ok_or_else(|| at("expected `topic:turn<TAB>values`".into()))?;
            let (t, n) = key
                .trim()
                .split_once(':')
                .ok_or_else(|| at(format!("bad utterance key `{key}`")))?;
            let parsed: (u32, u32) = (
                t.parse().map_err(|_| at(format!("bad topic in `{key}`")))?,
                n.parse().map_err(|_| at(format!("bad turn in `{key}`")))?,
            );
            let v: Vec<f64> = rest
                .split_whitespace()
                .map(|x| x.parse::<f64>().map_err(|_| at(format!("bad value `{x}`"))))
                .collect::<Result<_>>()?;
            if v.is_empty() {
                return Err(at("no values".into()));
            }
            if out.dim == 0 {
                out.dim = v.len();
            } else if v.len() != out.dim {
                return Err(at(format!("expected {} values, found {}", out.dim, v.len())));
            }
            if out.vectors.insert(parsed, v).is_some() {
                return Err(at(format!("duplicate utterance key `{key}`")));
            }
        }
        if out.vectors.is_empty() {
            return Err(Error::InvalidInput(format!("{source_name}: no vectors")));
        }
        Ok(out)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(f, &path.display().to_string())
    }

    pub fn insert(&mut self, key: TurnKey, v: Vec<f64>) -> Result<()> {
        if self.dim == 0 {
            self.dim = v.len();
        } else if v.len() != self.dim {
            return Err(Error::DimensionMismatch { left: self.dim, right: v.len() });
        }
        self.vectors.insert(key, v);
        Ok(())
    }
}

impl UtteranceEncoder for PrecomputedEncoder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, key: TurnKey, _text: &str) -> Result<Vec<f64>> {
        self.vectors
            .get(&key)
            .cloned()
            .ok_or_else(|| Error::InvalidInput(format!("no precomputed vector for {}:{}", key.0, key.1)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurConfig {
    /// Size of each position embedding.
    pub d_t: usize,
    pub max_turns: u32,
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    /// `None` trains full-batch.
    pub batch_size: Option<usize>,
    pub seed: u64,
    /// Adds trainable square projections φ_U, φ_C over the encoder output.
    pub train_encoder: bool,
    pub position_init: f64,
}

impl Default for CurConfig {
    fn default() -> Self {
        CurConfig {
            d_t: 8,
            max_turns: 16,
            hidden: vec![64],
            learning_rate: 1e-3,
            epochs: 100,
            batch_size: None,
            seed: 42,
            train_encoder: false,
            position_init: 0.1,
        }
    }
}

/// Trainable parameters of the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurParams {
    pub d_t: usize,
    pub max_turns: u32,
    /// Row `n − 1` holds η_U(n).
    pub eta_u: Vec<f64>,
    pub eta_c: Vec<f64>,
    pub phi_u: Option<Dense>,
    pub phi_c: Option<Dense>,
    pub psi: Ffn,
}

impl CurParams {
    fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out = self.psi.tensors_mut();
        out.push(&mut self.eta_u);
        out.push(&mut self.eta_c);
        for p in [&mut self.phi_u, &mut self.phi_c].into_iter().flatten() {
            out.push(&mut p.weights);
            out.push(&mut p.biases);
        }
        out
    }

    fn zeros_like(&self) -> CurGrads {
        CurGrads {
            psi: FfnGrads::zeros(&self.psi),
            eta_u: vec![0.0; self.eta_u.len()],
            eta_c: vec![0.0; self.eta_c.len()],
            phi: [&self.phi_u, &self.phi_c]
                .into_iter()
                .flatten()
                .map(|p| (vec![0.0; p.weights.len()], vec![0.0; p.biases.len()]))
                .collect(),
        }
    }
}

struct CurGrads {
    psi: FfnGrads,
    eta_u: Vec<f64>,
    eta_c: Vec<f64>,
    phi: Vec<(Vec<f64>, Vec<f64>)>,
}

impl CurGrads {
    fn tensors(&self) -> Vec<&Vec<f64>> {
        let mut out = self.psi.tensors();
        out.push(&self.eta_u);
        out.push(&self.eta_c);
        for (w, b) in &self.phi {
            out.push(w);
            out.push(b);
        }
        out
    }

    fn scale(&mut self, s: f64) {
        self.psi.scale(s);
        self.eta_u
            .iter_mut()
            .chain(self.eta_c.iter_mut())
            .chain(self.phi.iter_mut().flat_map(|(w, b)| w.iter_mut().chain(b.iter_mut())))
            .for_each(|g| *g *= s);
    }
}

/// Encoded utterances of one pair, ready for the trainable part.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedPair {
    pub e_i: Vec<f64>,
    pub e_j: Vec<f64>,
    pub i: u32,
    pub j: u32,
}

pub struct CurNetwork {
    encoder: Box<dyn UtteranceEncoder>,
    params: CurParams,
}

impl std::fmt::Debug for CurNetwork {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CurNetwork")
            .field("encoder_dim", &self.encoder.dim())
            .field("params", &self.params)
            .finish()
    }
}

fn linear(layer: &Option<Dense>, x: &[f64]) -> Vec<f64> {
    match layer {
        None => x.to_vec(),
        Some(l) => (0..l.outputs)
            .map(|o| {
                l.biases[o]
                    + l.weights[o * l.inputs..(o + 1) * l.inputs]
                        .iter()
                        .zip(x)
                        .map(|(w, v)| w * v)
                        .sum::<f64>()
            })
            .collect(),
    }
}

impl CurNetwork {
    /// Randomly initialized network over `encoder`.
    pub fn new(encoder: Box<dyn UtteranceEncoder>, config: &CurConfig) -> Result<Self> {
        let d = encoder.dim();
        if d == 0 || config.d_t == 0 || config.max_turns == 0 {
            return Err(Error::InvalidInput(
                "encoder dimension, d_t and max_turns must be positive".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let r = config.position_init;
        let table = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..config.max_turns as usize * config.d_t)
                .map(|_| if r > 0.0 { rng.gen_range(-r..=r) } else { 0.0 })
                .collect()
        };
        let eta_u = table(&mut rng);
        let eta_c = table(&mut rng);
        let (phi_u, phi_c) = if config.train_encoder {
            (Some(identity(d)), Some(identity(d)))
        } else {
            (None, None)
        };
        let psi = Ffn::init(2 * d + 2 * config.d_t, &config.hidden, &mut rng);
        Ok(CurNetwork {
            encoder,
            params: CurParams {
                d_t: config.d_t,
                max_turns: config.max_turns,
                eta_u,
                eta_c,
                phi_u,
                phi_c,
                psi,
            },
        })
    }

    /// Assembles a network from explicit parameters.
    pub fn from_parts(encoder: Box<dyn UtteranceEncoder>, params: CurParams) -> Result<Self> {
        let d = encoder.dim();
        let p = &params;
        let table = p.max_turns as usize * p.d_t;
        if p.eta_u.len() != table || p.eta_c.len() != table {
            return Err(Error::InvalidInput("position tables must be max_turns × d_t".into()));
        }
        for phi in [&p.phi_u, &p.phi_c].into_iter().flatten() {
            if phi.inputs != d || phi.outputs != d {
                return Err(Error::DimensionMismatch { left: d, right: phi.inputs });
            }
        }
        if p.psi.input_dim() != 2 * d + 2 * p.d_t {
            return Err(Error::DimensionMismatch {
                left: 2 * d + 2 * p.d_t,
                right: p.psi.input_dim(),
            });
        }
        Ok(CurNetwork { encoder, params })
    }

    pub fn params(&self) -> &CurParams {
        &self.params
    }

    pub fn encoder_dim(&self) -> usize {
        self.encoder.dim()
    }

    fn check_turn(&self, n: u32) -> Result<()> {
        if n == 0 || n > self.params.max_turns {
            return Err(Error::InvalidInput(format!(
                "turn {n} outside the position table range 1..={}",
                self.params.max_turns
            )));
        }
        Ok(())
    }

    pub fn encode(&self, pair: &CandidatePair) -> Result<EncodedPair> {
        self.check_turn(pair.i)?;
        self.check_turn(pair.j)?;
        let e_i = self.encoder.encode((pair.topic, pair.i), &pair.u_i)?;
        let e_j = self.encoder.encode((pair.topic, pair.j), &pair.u_j)?;
        let d = self.encoder.dim();
        for e in [&e_i, &e_j] {
            if e.len() != d {
                return Err(Error::DimensionMismatch { left: d, right: e.len() });
            }
        }
        Ok(EncodedPair { e_i, e_j, i: pair.i, j: pair.j })
    }

    /// ψ input `[φ_U(u_i); φ_C(u_j); η_U(i); η_C(j)]`.
    fn psi_input(&self, e: &EncodedPair) -> Vec<f64> {
        let p = &self.params;
        let dt = p.d_t;
        let mut x = linear(&p.phi_u, &e.e_i);
        x.extend(linear(&p.phi_c, &e.e_j));
        let (ri, rj) = ((e.i - 1) as usize * dt, (e.j - 1) as usize * dt);
        x.extend_from_slice(&p.eta_u[ri..ri + dt]);
        x.extend_from_slice(&p.eta_c[rj..rj + dt]);
        x
    }

    pub fn forward_encoded(&self, e: &EncodedPair) -> [f64; 2] {
        softmax2(self.params.psi.forward(&self.psi_input(e)).logits())
    }

    /// `[p(R=0), p(R=1)]`.
    pub fn forward(&self, pair: &CandidatePair) -> Result<[f64; 2]> {
        Ok(self.forward_encoded(&self.encode(pair)?))
    }

    fn accumulate(&self, e: &EncodedPair, label: usize, grads: &mut CurGrads) -> f64 {
        let p = &self.params;
        let x = self.psi_input(e);
        let trace = p.psi.forward(&x);
        let loss = cross_entropy(trace.logits(), label);
        let dx = p.psi.backward(&trace, label, &mut grads.psi);
        let d = self.encoder.dim();
        let dt = p.d_t;
        let (ri, rj) = ((e.i - 1) as usize * dt, (e.j - 1) as usize * dt);
        for k in 0..dt {
            grads.eta_u[ri + k] += dx[2 * d + k];
            grads.eta_c[rj + k] += dx[2 * d + dt + k];
        }
        let mut slot = 0;
        for (phi, input, dv) in [(&p.phi_u, &e.e_i, &dx[..d]), (&p.phi_c, &e.e_j, &dx[d..2 * d])] {
            if let Some(l) = phi {
                let (gw, gb) = &mut grads.phi[slot];
                for o in 0..l.outputs {
                    gb[o] += dv[o];
                    for (g, v) in gw[o * l.inputs..(o + 1) * l.inputs].iter_mut().zip(input) {
                        *g += dv[o] * v;
                    }
                }
                slot += 1;
            }
        }
        loss
    }

    /// Mean cross-entropy over labeled encoded pairs.
    pub fn loss(&self, data: &[(EncodedPair, usize)]) -> f64 {
        let total: f64 = data
            .iter()
            .map(|(e, y)| cross_entropy(self.params.psi.forward(&self.psi_input(e)).logits(), *y))
            .sum();
        total / data.len().max(1) as f64
    }

    /// Flat copy of all trainable parameters in a fixed order.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut p = self.params.clone();
        p.tensors_mut().into_iter().flat_map(|t| t.iter().copied()).collect::<Vec<_>>()
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        let total: usize = self.params.tensors_mut().iter().map(|t| t.len()).sum();
        if flat.len() != total {
            return Err(Error::DimensionMismatch { left: total, right: flat.len() });
        }
        let mut at = 0;
        for t in self.params.tensors_mut() {
            let n = t.len();
            t.copy_from_slice(&flat[at..at + n]);
            at += n;
        }
        Ok(())
    }

    /// Gradient of the mean loss over `data`, flattened like
    /// [`flat_params`](Self::flat_params).
    pub fn flat_gradient(&self, data: &[(EncodedPair, usize)]) -> Vec<f64> {
        let mut g = self.params.zeros_like();
        for (e, y) in data {
            self.accumulate(e, *y, &mut g);
        }
        g.scale(1.0 / data.len().max(1) as f64);
        g.tensors().into_iter().flat_map(|t| t.iter().copied()).collect()
    }

    /// `p(R=1)` for each pair.
    pub fn score_pairs(&self, pairs: &[CandidatePair]) -> Result<Vec<PairScore>> {
        pairs
            .iter()
            .map(|p| {
                Ok(PairScore {
                    topic: p.topic,
                    i: p.i,
                    j: p.j,
                    p: self.forward(p)?[1],
                })
            })
            .collect()
    }
}

fn identity(d: usize) -> Dense {
    let mut weights = vec![0.0; d * d];
    for k in 0..d {
        weights[k * d + k] = 1.0;
    }
    Dense {
        inputs: d,
        outputs: d,
        weights,
        biases: vec![0.0; d],
    }
}

/// Output of [`cur_train`].
#[derive(Debug)]
pub struct CurTraining {
    pub net: CurNetwork,
    /// Mean training cross-entropy of each epoch, measured over the batches
    /// as they were visited.
    pub loss_curve: Vec<f64>,
}

/// Pointwise training with cross-entropy and Adam. The encoder itself is
/// frozen; position tables, ψ and (if configured) φ projections update.
/// Gradients are accumulated in pair order, so runs are reproducible.
pub fn cur_train(pairs: &[CandidatePair], mut net: CurNetwork, config: &CurConfig) -> Result<CurTraining> {
    let data: Vec<(EncodedPair, usize)> = pairs
        .iter()
        .filter_map(|p| p.target().map(|y| (p, y)))
        .map(|(p, y)| Ok((net.encode(p)?, y)))
        .collect::<Result<_>>()?;
    if data.is_empty() {
        return Err(Error::Training("no labeled pairs to train on".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut adam = Adam::new(config.learning_rate);
    let batch = config.batch_size.unwrap_or(data.len()).clamp(1, data.len());
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut loss_curve = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        if batch < data.len() {
            order.shuffle(&mut rng);
        }
        let mut total = 0.0;
        for chunk in order.chunks(batch) {
            let mut g = net.params.zeros_like();
            for &k in chunk {
                total += net.accumulate(&data[k].0, data[k].1, &mut g);
            }
            g.scale(1.0 / chunk.len() as f64);
            if total.is_nan() || g.tensors().iter().any(|t| t.iter().any(|v| !v.is_finite())) {
                return Err(Error::Training(format!(
                    "non-finite loss or gradient in epoch {} (lr {}, {} pairs, last mean loss {:?})",
                    epoch + 1,
                    config.learning_rate,
                    data.len(),
                    loss_curve.last()
                )));
            }
            adam.step(net.params.tensors_mut(), g.tensors());
        }
        loss_curve.push(total / data.len() as f64);
    }
    Ok(CurTraining { net, loss_curve })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn encoder() -> Box<dyn UtteranceEncoder> {
        let table = EmbeddingTable::from_reader(
            "goat 1 0 0.5\ncheese 0 1 0.2\nmilk 0.3 0.3 1\nwine -1 0.5 0\n".as_bytes(),
            "emb",
        )
        .unwrap();
        Box::new(AweEncoder(table))
    }

    fn pair(i: u32, j: u32, a: &str, b: &str, label: bool) -> CandidatePair {
        CandidatePair {
            topic: 1,
            i,
            j,
            u_i: a.into(),
            u_j: b.into(),
            label: Some(label),
        }
    }

    fn fixture() -> Vec<CandidatePair> {
        vec![
            pair(2, 1, "goat cheese", "goat milk", true),
            pair(3, 1, "wine", "goat milk", false),
            pair(3, 2, "wine", "goat cheese", false),
            pair(4, 1, "cheese", "goat milk", true),
            pair(4, 3, "cheese", "wine", false),
            pair(5, 4, "milk wine", "cheese", true),
        ]
    }

    #[test]
    fn probabilities_are_normalized_and_pure() {
        let net = CurNetwork::new(encoder(), &CurConfig::default()).unwrap();
        for p in fixture() {
            let out = net.forward(&p).unwrap();
            assert!((out[0] + out[1] - 1.0).abs() < 1e-6);
            assert!(out[1] > 0.0 && out[1] < 1.0);
            assert_eq!(out, net.forward(&p.clone()).unwrap());
        }
        let far = pair(17, 1, "goat", "goat", true);
        assert!(net.forward(&far).is_err());
    }

    #[test]
    fn hand_forward_pass() {
        // d = 1 encoder, d_t = 1, two turns, ψ = 4 → 1 (ReLU) → 2
        let mut enc = PrecomputedEncoder::default();
        enc.insert((1, 1), vec![0.5]).unwrap();
        enc.insert((1, 2), vec![-1.0]).unwrap();
        let params = CurParams {
            d_t: 1,
            max_turns: 2,
            eta_u: vec![0.0, 0.2],
            eta_c: vec![0.1, 0.0],
            phi_u: None,
            phi_c: None,
            psi: Ffn {
                layers: vec![
                    Dense { inputs: 4, outputs: 1, weights: vec![-1.0, 2.0, 1.0, 3.0], biases: vec![0.1] },
                    Dense { inputs: 1, outputs: 2, weights: vec![0.0, 1.5], biases: vec![0.0, -0.5] },
                ],
            },
        };
        let net = CurNetwork::from_parts(Box::new(enc), params).unwrap();
        let out = net.forward(&pair(2, 1, "", "", true)).unwrap();
        // x = [-1, 0.5, 0.2, 0.1]; h = relu(1 + 1 + 0.2 + 0.3 + 0.1) = 2.6
        // logits = [0, 1.5·2.6 − 0.5] = [0, 3.4]
        let expected = 1.0 / (1.0 + (-3.4f64).exp());
        assert!((out[1] - expected).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let cfg = CurConfig {
            hidden: vec![6],
            train_encoder: true,
            d_t: 3,
            max_turns: 6,
            ..Default::default()
        };
        let mut net = CurNetwork::new(encoder(), &cfg).unwrap();
        let data: Vec<(EncodedPair, usize)> = fixture()
            .iter()
            .map(|p| (net.encode(p).unwrap(), p.target().unwrap()))
            .collect();
        let theta = net.flat_params();
        let grad = net.flat_gradient(&data);
        assert_eq!(theta.len(), grad.len());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-5;
        let mut checked = 0;
        while checked < 20 {
            let k = rng.gen_range(0..theta.len());
            let mut plus = theta.clone();
            plus[k] += h;
            net.set_flat_params(&plus).unwrap();
            let lp = net.loss(&data);
            let mut minus = theta.clone();
            minus[k] -= h;
            net.set_flat_params(&minus).unwrap();
            let lm = net.loss(&data);
            let fd = (lp - lm) / (2.0 * h);
            let denom = fd.abs().max(grad[k].abs());
            if denom < 1e-8 {
                // unused position row or dead unit
                assert!(fd.abs() < 1e-8 && grad[k].abs() < 1e-8);
                continue;
            }
            assert!((fd - grad[k]).abs() / denom < 1e-4, "coordinate {k}: fd {fd} vs {}", grad[k]);
            checked += 1;
        }
    }

    #[test]
    fn learns_all_positive_data_deterministically() {
        let pairs: Vec<CandidatePair> = fixture()
            .into_iter()
            .map(|p| CandidatePair { label: Some(true), ..p })
            .collect();
        let cfg = CurConfig { epochs: 300, learning_rate: 1e-2, ..Default::default() };
        let a = cur_train(&pairs, CurNetwork::new(encoder(), &cfg).unwrap(), &cfg).unwrap();
        for p in &pairs {
            assert!(a.net.forward(p).unwrap()[1] > 0.9);
        }
        let b = cur_train(&pairs, CurNetwork::new(encoder(), &cfg).unwrap(), &cfg).unwrap();
        assert_eq!(a.loss_curve, b.loss_curve);
    }

    #[test]
    fn precomputed_file_format() {
        let enc = PrecomputedEncoder::from_reader("31:1\t0.1 0.2\n31:2\t0.3\t0.4\n".as_bytes(), "v").unwrap();
        assert_eq!(enc.dim(), 2);
        assert_eq!(enc.encode((31, 2), "").unwrap(), vec![0.3, 0.4]);
        assert!(enc.encode((31, 3), "").is_err());
        let err = PrecomputedEncoder::from_reader("31:1\t0.1 0.2\n31:2\t0.3\n".as_bytes(), "v").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }
}
