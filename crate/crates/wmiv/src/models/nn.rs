//! Feed-forward ReLU networks and their symbolic encoding.

use num_traits::Zero;

use crate::logic::{Formula, LinearExpr, Sort, Variable};
use crate::models::{Gate, SystemEncoding};
use crate::rational::Rat;
use crate::weights::Weight;
use crate::{Error, Result};

/// Unit activation.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Activation {
    Relu,
    Identity,
}

/// One dense layer: `out = act(W · in + b)` with `W` stored row-major,
/// one row per output unit.
#[derive(Clone, Debug)]
pub struct Layer {
    pub weights: Vec<Vec<Rat>>,
    pub bias: Vec<Rat>,
    pub activation: Activation,
}

impl Layer {
    pub fn new(weights: Vec<Vec<Rat>>, bias: Vec<Rat>, activation: Activation) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Shape("layer has no units".into()));
        }
        let in_dim = weights[0].len();
        if in_dim == 0 {
            return Err(Error::Shape("layer unit has no inputs".into()));
        }
        if weights.iter().any(|row| row.len() != in_dim) {
            return Err(Error::Shape("layer weight rows differ in width".into()));
        }
        if bias.len() != weights.len() {
            return Err(Error::Shape(format!(
                "layer has {} units but {} bias entries",
                weights.len(),
                bias.len()
            )));
        }
        Ok(Layer {
            weights,
            bias,
            activation,
        })
    }

    pub fn out_dim(&self) -> usize {
        self.weights.len()
    }

    pub fn in_dim(&self) -> usize {
        self.weights[0].len()
    }
}

/// A feed-forward network: a non-empty chain of shape-compatible layers.
#[derive(Clone, Debug)]
pub struct NeuralNet {
    layers: Vec<Layer>,
}

impl NeuralNet {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Shape("network has no layers".into()));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[1].in_dim() != pair[0].out_dim() {
                return Err(Error::Shape(format!(
                    "layer {} expects {} inputs but layer {} produces {}",
                    i + 1,
                    pair[1].in_dim(),
                    i,
                    pair[0].out_dim()
                )));
            }
        }
        Ok(NeuralNet { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").out_dim()
    }

    /// Exact forward pass.
    pub fn forward(&self, x: &[Rat]) -> Result<Vec<Rat>> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input has {} features, network expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        let mut cur: Vec<Rat> = x.to_vec();
        for layer in &self.layers {
            let mut next = Vec::with_capacity(layer.out_dim());
            for (row, b) in layer.weights.iter().zip(&layer.bias) {
                let mut acc = b.clone();
                for (w, v) in row.iter().zip(&cur) {
                    acc += w * v;
                }
                if layer.activation == Activation::Relu && acc < Rat::zero() {
                    acc = Rat::zero();
                }
                next.push(acc);
            }
            cur = next;
        }
        Ok(cur)
    }

    /// The scalar output of a single-logit network.
    pub fn logit(&self, x: &[Rat]) -> Result<Rat> {
        if self.output_dim() != 1 {
            return Err(Error::Shape(format!(
                "network produces {} outputs, expected a single logit",
                self.output_dim()
            )));
        }
        Ok(self.forward(x)?.remove(0))
    }

    /// Binary decision: logit ≥ 0.
    pub fn classify(&self, x: &[Rat]) -> Result<bool> {
        Ok(self.logit(x)? >= Rat::zero())
    }

    /// Float forward pass, for samplers and training only.
    pub fn forward_f64(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input has {} features, network expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        let mut cur: Vec<f64> = x.to_vec();
        for layer in &self.layers {
            let mut next = Vec::with_capacity(layer.out_dim());
            for (row, b) in layer.weights.iter().zip(&layer.bias) {
                let mut acc = crate::rational::to_f64(b);
                for (w, v) in row.iter().zip(&cur) {
                    acc += crate::rational::to_f64(w) * v;
                }
                if layer.activation == Activation::Relu && acc < 0.0 {
                    acc = 0.0;
                }
                next.push(acc);
            }
            cur = next;
        }
        Ok(cur)
    }

    /// Number of ReLU units, i.e. units that get a fresh `h`/`y` pair.
    pub fn relu_units(&self) -> usize {
        self.layers
            .iter()
            .filter(|l| l.activation == Activation::Relu)
            .map(Layer::out_dim)
            .sum()
    }
}

/// Encodes a single-logit network over the given input variables. Each
/// ReLU unit contributes `h = w·in + b` and `y = ite(h > 0; h; 0)`;
/// identity units stay inline as linear expressions. The score is the
/// final pre-activation; call
/// [`SystemEncoding::with_class_output`] for the thresholded decision.
pub fn encode_relu_nn(
    net: &NeuralNet,
    inputs: &[Variable],
    prefix: &str,
) -> Result<SystemEncoding> {
    if inputs.len() != net.input_dim() {
        return Err(Error::Shape(format!(
            "{} input variables for a network with {} inputs",
            inputs.len(),
            net.input_dim()
        )));
    }
    if let Some(v) = inputs.iter().find(|v| v.sort() != Sort::Real) {
        return Err(Error::Shape(format!("input `{v}` is not real-valued")));
    }
    if net.output_dim() != 1 {
        return Err(Error::Shape(format!(
            "network produces {} outputs, expected a single logit",
            net.output_dim()
        )));
    }

    let mut gates = Vec::new();
    let mut cur: Vec<LinearExpr> = inputs.iter().map(LinearExpr::var).collect();
    for (li, layer) in net.layers().iter().enumerate() {
        let mut next = Vec::with_capacity(layer.out_dim());
        for (ui, (row, b)) in layer.weights.iter().zip(&layer.bias).enumerate() {
            let mut pre = LinearExpr::constant(b.clone());
            for (w, e) in row.iter().zip(&cur) {
                pre = pre + e.clone() * w.clone();
            }
            match layer.activation {
                Activation::Identity => next.push(pre),
                Activation::Relu => {
                    let h = Variable::real(format!("{prefix}h{li}_{ui}"));
                    let y = Variable::real(format!("{prefix}y{li}_{ui}"));
                    gates.push(Gate::Affine {
                        var: h.clone(),
                        expr: pre,
                    });
                    gates.push(Gate::Guarded {
                        cond: Formula::gt(&LinearExpr::var(&h), &LinearExpr::constant(Rat::zero())),
                        var: y.clone(),
                        then: LinearExpr::var(&h),
                        els: LinearExpr::constant(Rat::zero()),
                    });
                    next.push(LinearExpr::var(&y));
                }
            }
        }
        cur = next;
    }

    Ok(SystemEncoding {
        inputs: inputs.to_vec(),
        gates,
        support: Formula::tt(),
        weight: Weight::one(),
        score: cur.remove(0),
        class: None,
    })
}
