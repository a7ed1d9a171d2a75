//! A minimal reference trainer for the ReLU classifiers under
//! verification: plain SGD on the logistic loss, run in floating point,
//! with the learned parameters quantized to exact rationals at the end.
//! Training quality only has to be "good enough to verify something
//! interesting" — the verified artifact is the emitted exact network,
//! not the optimizer.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::models::{Activation, Layer, NeuralNet};
use crate::rational::Rat;
use crate::{Error, Result};

/// Hyperparameters of the reference trainer.
#[derive(Clone, Debug)]
pub struct TrainConfig {
    /// Hidden layer widths; the output layer (one logit) is implicit.
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch: usize,
    pub seed: u64,
    /// Parameters are rounded to multiples of `2^-quant_bits` when the
    /// float network is converted to the exact one.
    pub quant_bits: u32,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: vec![8, 8],
            epochs: 200,
            learning_rate: 0.05,
            batch: 32,
            seed: 0,
            quant_bits: 12,
        }
    }
}

/// A float MLP with ReLU hidden layers and a single linear output
/// (the classification logit).
struct FloatNet {
    /// Per layer: `weights[unit][input]` and one bias per unit.
    layers: Vec<(Vec<Vec<f64>>, Vec<f64>)>,
}

impl FloatNet {
    fn init(dims: &[usize], rng: &mut ChaCha8Rng) -> FloatNet {
        let layers = dims
            .windows(2)
            .map(|w| {
                let (n_in, n_out) = (w[0], w[1]);
                let scale = 1.0 / (n_in as f64).sqrt();
                let weights = (0..n_out)
                    .map(|_| (0..n_in).map(|_| rng.gen_range(-scale..scale)).collect())
                    .collect();
                (weights, vec![0.0; n_out])
            })
            .collect();
        FloatNet { layers }
    }

    /// Forward pass keeping every layer's post-activation (the input
    /// counts as layer 0), for backpropagation.
    fn forward(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        for (i, (w, b)) in self.layers.iter().enumerate() {
            let prev = &acts[i];
            let last = i + 1 == self.layers.len();
            let out = w
                .iter()
                .zip(b)
                .map(|(row, bias)| {
                    let z: f64 =
                        row.iter().zip(prev).map(|(wi, xi)| wi * xi).sum::<f64>() + bias;
                    if last {
                        z
                    } else {
                        z.max(0.0)
                    }
                })
                .collect();
            acts.push(out);
        }
        acts
    }

    /// One SGD step on a minibatch of (features, label) pairs.
    fn step(&mut self, batch: &[(&[f64], bool)], lr: f64) {
        let scale = lr / batch.len() as f64;
        for (x, y) in batch {
            let acts = self.forward(x);
            let logit = acts.last().expect("output layer")[0];
            let sigma = 1.0 / (1.0 + (-logit).exp());
            // d loss / d logit for the logistic loss.
            let mut grad = vec![sigma - f64::from(*y)];
            for i in (0..self.layers.len()).rev() {
                let prev = acts[i].clone();
                let (w, b) = &mut self.layers[i];
                let mut grad_prev = vec![0.0; prev.len()];
                for (u, g) in grad.iter().enumerate() {
                    for (j, p) in prev.iter().enumerate() {
                        grad_prev[j] += w[u][j] * g;
                        w[u][j] -= scale * g * p;
                    }
                    b[u] -= scale * g;
                }
                if i > 0 {
                    // Gate the upstream gradient by the ReLU activity.
                    for (g, a) in grad_prev.iter_mut().zip(&acts[i]) {
                        if *a <= 0.0 {
                            *g = 0.0;
                        }
                    }
                }
                grad = grad_prev;
            }
        }
    }
}

fn quantize(x: f64, bits: u32) -> Rat {
    let denom = 1i64 << bits;
    let num = (x * denom as f64).round();
    if !num.is_finite() {
        return Rat::from_integer(0.into());
    }
    Rat::new((num as i64).into(), denom.into())
}

/// Per-feature mean and standard deviation (floored away from zero).
fn standardize(features: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = features.len() as f64;
    let dim = features[0].len();
    let mut mean = vec![0.0; dim];
    for row in features {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x / n;
        }
    }
    let mut sd = vec![0.0; dim];
    for row in features {
        for ((s, x), m) in sd.iter_mut().zip(row).zip(&mean) {
            *s += (x - m) * (x - m) / n;
        }
    }
    for s in sd.iter_mut() {
        *s = s.sqrt().max(1e-9);
    }
    (mean, sd)
}

/// Trains a ReLU classifier on float features and boolean labels and
/// returns it as an exact-rational network. Features are standardized
/// internally; the affine standardization is folded into the first
/// layer so the returned network consumes raw feature values. The
/// decision is the sign of the single output logit (true at ≥ 0).
/// Deterministic under the seed.
pub fn train_mlp(
    features: &[Vec<f64>],
    labels: &[bool],
    cfg: &TrainConfig,
) -> Result<NeuralNet> {
    if features.is_empty() || features.len() != labels.len() {
        return Err(Error::Dataset(format!(
            "{} feature rows against {} labels",
            features.len(),
            labels.len()
        )));
    }
    let dim = features[0].len();
    if dim == 0 || features.iter().any(|r| r.len() != dim) {
        return Err(Error::Dataset("ragged or empty feature rows".into()));
    }
    if cfg.epochs == 0 || cfg.batch == 0 {
        return Err(Error::Schema("epochs and batch size must be positive".into()));
    }
    if cfg.hidden.contains(&0) {
        return Err(Error::Shape("hidden layer of width zero".into()));
    }

    let (mean, sd) = standardize(features);
    let scaled: Vec<Vec<f64>> = features
        .iter()
        .map(|row| {
            row.iter()
                .zip(&mean)
                .zip(&sd)
                .map(|((x, m), s)| (x - m) / s)
                .collect()
        })
        .collect();

    let mut dims = vec![dim];
    dims.extend_from_slice(&cfg.hidden);
    dims.push(1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = FloatNet::init(&dims, &mut rng);

    let mut order: Vec<usize> = (0..scaled.len()).collect();
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch) {
            let batch: Vec<(&[f64], bool)> = chunk
                .iter()
                .map(|&i| (scaled[i].as_slice(), labels[i]))
                .collect();
            net.step(&batch, cfg.learning_rate);
        }
    }

    // Fold standardization into the first layer: acting on raw x,
    //   W'(x) = W((x − μ)/σ)  ⇒  w'_j = w_j/σ_j,  b' = b − Σ_j w_j μ_j/σ_j.
    let mut layers = Vec::with_capacity(net.layers.len());
    for (i, (w, b)) in net.layers.iter().enumerate() {
        let last = i + 1 == net.layers.len();
        let (rows, bias): (Vec<Vec<Rat>>, Vec<Rat>) = w
            .iter()
            .zip(b)
            .map(|(row, bias)| {
                let (frow, fbias) = if i == 0 {
                    let adj: Vec<f64> =
                        row.iter().zip(&sd).map(|(wj, s)| wj / s).collect();
                    let shift: f64 = adj.iter().zip(&mean).map(|(a, m)| a * m).sum();
                    (adj, bias - shift)
                } else {
                    (row.clone(), *bias)
                };
                (
                    frow.iter().map(|&x| quantize(x, cfg.quant_bits)).collect(),
                    quantize(fbias, cfg.quant_bits),
                )
            })
            .unzip();
        layers.push(Layer::new(
            rows,
            bias,
            if last {
                Activation::Identity
            } else {
                Activation::Relu
            },
        )?);
    }
    NeuralNet::new(layers)
}

/// Training-set accuracy of an exact network against boolean labels
/// (decision: logit ≥ 0), using a float forward pass for speed.
pub fn accuracy(net: &NeuralNet, features: &[Vec<f64>], labels: &[bool]) -> f64 {
    let mut correct = 0usize;
    for (row, y) in features.iter().zip(labels) {
        if float_logit(net, row) >= 0.0 && *y || float_logit(net, row) < 0.0 && !*y {
            correct += 1;
        }
    }
    correct as f64 / labels.len().max(1) as f64
}

/// Float forward pass through an exact network.
pub fn float_logit(net: &NeuralNet, x: &[f64]) -> f64 {
    let mut cur: Vec<f64> = x.to_vec();
    for layer in net.layers() {
        let relu = layer.activation == Activation::Relu;
        cur = layer
            .weights
            .iter()
            .zip(&layer.bias)
            .map(|(row, b)| {
                let z: f64 = row
                    .iter()
                    .zip(&cur)
                    .map(|(w, xi)| crate::rational::to_f64(w) * xi)
                    .sum::<f64>()
                    + crate::rational::to_f64(b);
                if relu {
                    z.max(0.0)
                } else {
                    z
                }
            })
            .collect();
    }
    cur[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Labeled points around the line x + y = 1 in the unit square.
    fn separable(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..n {
            let x = rng.gen_range(0.0..1.0);
            let y = rng.gen_range(0.0..1.0);
            xs.push(vec![x, y]);
            ys.push(x + y > 1.0);
        }
        (xs, ys)
    }

    #[test]
    fn learns_a_linearly_separable_rule() {
        let (xs, ys) = separable(400, 1);
        let cfg = TrainConfig {
            hidden: vec![4],
            epochs: 120,
            ..TrainConfig::default()
        };
        let net = train_mlp(&xs, &ys, &cfg).unwrap();
        assert_eq!(net.input_dim(), 2);
        assert_eq!(net.output_dim(), 1);
        assert_eq!(net.layers().len(), 2);
        assert_eq!(net.layers()[0].out_dim(), 4);
        let acc = accuracy(&net, &xs, &ys);
        assert!(acc >= 0.95, "training accuracy {acc}");
    }

    #[test]
    fn training_is_deterministic_under_the_seed() {
        let (xs, ys) = separable(120, 2);
        let cfg = TrainConfig {
            hidden: vec![3],
            epochs: 20,
            ..TrainConfig::default()
        };
        let a = train_mlp(&xs, &ys, &cfg).unwrap();
        let b = train_mlp(&xs, &ys, &cfg).unwrap();
        for (la, lb) in a.layers().iter().zip(b.layers()) {
            assert_eq!(la.weights, lb.weights);
            assert_eq!(la.bias, lb.bias);
        }
    }

    #[test]
    fn quantization_denominators_stay_within_the_grid() {
        let (xs, ys) = separable(60, 3);
        let cfg = TrainConfig {
            hidden: vec![2],
            epochs: 5,
            quant_bits: 8,
            ..TrainConfig::default()
        };
        let net = train_mlp(&xs, &ys, &cfg).unwrap();
        for layer in net.layers() {
            for w in layer.weights.iter().flatten().chain(&layer.bias) {
                let denom = w.denom().clone();
                assert!(
                    (num::BigInt::from(256) % &denom).bits() == 0,
                    "denominator {denom} not a divisor of 2^8"
                );
            }
        }
    }

    #[test]
    fn shape_and_size_errors_are_reported() {
        let cfg = TrainConfig::default();
        assert!(train_mlp(&[], &[], &cfg).is_err());
        assert!(train_mlp(&[vec![1.0]], &[true, false], &cfg).is_err());
        let bad = TrainConfig {
            hidden: vec![0],
            ..TrainConfig::default()
        };
        assert!(train_mlp(&[vec![1.0]], &[true], &bad).is_err());
    }
}
