//! Wide-and-deep scoring network with batched forward and backward passes.
//!
//! The wide component is a linear model over sparse indicator features and
//! their cross products. The deep component is a ReLU MLP over the
//! configuration embedding concatenated with the dense attribute features.
//! Both outputs are combined linearly and squashed with a sigmoid.

use ndarray::{s, Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::{FeatureBundle, SparseBits};
use crate::error::{Error, Result};

pub const DEFAULT_HIDDEN: [usize; 3] = [256, 64, 16];
const LOSS_EPS: f64 = 1e-7;

/// Which components contribute to the score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    #[default]
    Full,
    WideOnly,
    DeepOnly,
}

impl Variant {
    pub fn uses_wide(self) -> bool {
        self != Variant::DeepOnly
    }

    pub fn uses_deep(self) -> bool {
        self != Variant::WideOnly
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::WideOnly => "wide_only",
            Variant::DeepOnly => "deep_only",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => sigmoid(z),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the pre-activation `z`.
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => {
                let s = sigmoid(z);
                s * (1.0 - s)
            }
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetShape {
    /// Sparse wide inputs: indicator bits followed by cross products.
    pub wide_len: usize,
    pub vocab_len: usize,
    pub embedding_dim: usize,
    pub dx_len: usize,
    pub hidden: Vec<usize>,
    /// Activation of the hidden layers; the output layer is linear.
    #[serde(default)]
    pub activation: Activation,
}

impl NetShape {
    pub fn deep_input(&self) -> usize {
        self.embedding_dim + self.dx_len
    }

    pub fn activation(&self, layer: usize) -> Activation {
        if layer == self.hidden.len() {
            Activation::Identity
        } else {
            self.activation
        }
    }

    /// (out, in) of every dense layer, ending with the scalar output.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 1);
        let mut input = self.deep_input();
        for &h in self.hidden.iter().chain(std::iter::once(&1)) {
            dims.push((h, input));
            input = h;
        }
        dims
    }

    pub fn validate(&self) -> Result<()> {
        if self.embedding_dim == 0 || self.vocab_len == 0 || self.hidden.contains(&0) {
            return Err(Error::InvalidShape(format!(
                "degenerate network shape {self:?}"
            )));
        }
        Ok(())
    }
}

/// One input row. `config` selects the embedding row; `None` feeds zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub config: Option<usize>,
    pub d_x: Vec<f64>,
    pub wide_active: Vec<u32>,
}

impl Example {
    /// Wide inputs are `[s_c, s_x, cross]`.
    pub fn from_bundle(bundle: &FeatureBundle, cross: &SparseBits) -> Example {
        let s = bundle.sparse();
        let offset = s.len() as u32;
        let mut wide_active = s.active().to_vec();
        wide_active.extend(cross.active().iter().map(|i| i + offset));
        Example {
            config: Some(bundle.config_index),
            d_x: bundle.d_x.clone(),
            wide_active,
        }
    }

    pub fn zeros(dx_len: usize) -> Example {
        Example {
            config: None,
            d_x: vec![0.0; dx_len],
            wide_active: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// `out x in`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// All trainable tensors. Gradients share this layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub wide: Array1<f64>,
    pub wide_bias: Array1<f64>,
    /// `vocab x embedding_dim`.
    pub embedding: Array2<f64>,
    pub layers: Vec<DenseLayer>,
    /// `[w_wide, w_deep]`.
    pub combine: Array1<f64>,
}

impl Params {
    pub fn zeros(shape: &NetShape) -> Params {
        Params {
            wide: Array1::zeros(shape.wide_len),
            wide_bias: Array1::zeros(1),
            embedding: Array2::zeros((shape.vocab_len, shape.embedding_dim)),
            layers: shape
                .layer_dims()
                .into_iter()
                .map(|(o, i)| DenseLayer {
                    weights: Array2::zeros((o, i)),
                    bias: Array1::zeros(o),
                })
                .collect(),
            combine: Array1::zeros(2),
        }
    }

    pub fn tensor_names(&self) -> Vec<String> {
        let mut names = vec![
            "wide.weight".to_string(),
            "wide.bias".into(),
            "embedding".into(),
        ];
        for l in 0..self.layers.len() {
            names.push(format!("deep.{l}.weight"));
            names.push(format!("deep.{l}.bias"));
        }
        names.push("combine".into());
        names
    }

    /// Flat views in `tensor_names` order.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = vec![
            self.wide.as_slice().expect("contiguous"),
            self.wide_bias.as_slice().expect("contiguous"),
            self.embedding.as_slice().expect("contiguous"),
        ];
        for l in &self.layers {
            out.push(l.weights.as_slice().expect("contiguous"));
            out.push(l.bias.as_slice().expect("contiguous"));
        }
        out.push(self.combine.as_slice().expect("contiguous"));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![
            self.wide.as_slice_mut().expect("contiguous"),
            self.wide_bias.as_slice_mut().expect("contiguous"),
            self.embedding.as_slice_mut().expect("contiguous"),
        ];
        for l in &mut self.layers {
            out.push(l.weights.as_slice_mut().expect("contiguous"));
            out.push(l.bias.as_slice_mut().expect("contiguous"));
        }
        out.push(self.combine.as_slice_mut().expect("contiguous"));
        out
    }

    pub fn len(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinate `i` of the flattened parameter vector.
    pub fn get(&self, mut i: usize) -> f64 {
        for t in self.tensors() {
            if i < t.len() {
                return t[i];
            }
            i -= t.len();
        }
        panic!("parameter index out of range");
    }

    pub fn set(&mut self, mut i: usize, value: f64) {
        for t in self.tensors_mut() {
            if i < t.len() {
                t[i] = value;
                return;
            }
            i -= t.len();
        }
        panic!("parameter index out of range");
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.iter().all(|x| x.is_finite()))
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &Params, scale: f64) {
        for (p, g) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (a, b) in p.iter_mut().zip(g) {
                *a += scale * b;
            }
        }
    }

    pub fn squared_norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|t| t.iter())
            .map(|x| x * x)
            .sum()
    }
}

/// Intermediate values of a batched forward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    /// Input to each dense layer.
    pub inputs: Vec<Array2<f64>>,
    /// Pre-activation output of each dense layer.
    pub pre_activations: Vec<Array2<f64>>,
    pub f_wide: Vec<f64>,
    pub f_deep: Vec<f64>,
    pub logits: Vec<f64>,
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub shape: NetShape,
    pub variant: Variant,
    pub params: Params,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy with predictions clamped to `[eps, 1 - eps]`.
pub fn binary_cross_entropy(score: f64, label: f64) -> f64 {
    let p = score.clamp(LOSS_EPS, 1.0 - LOSS_EPS);
    -(label * p.ln() + (1.0 - label) * (1.0 - p).ln())
}

impl Network {
    /// Glorot-uniform weights, zero biases, unit combination weights. The
    /// component excluded by `variant` gets combination weight zero.
    pub fn init(shape: NetShape, variant: Variant, seed: u64) -> Result<Network> {
        shape.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Params::zeros(&shape);
        glorot(
            &mut rng,
            params.wide.as_slice_mut().expect("contiguous"),
            shape.wide_len,
            1,
        );
        glorot(
            &mut rng,
            params.embedding.as_slice_mut().expect("contiguous"),
            shape.vocab_len,
            shape.embedding_dim,
        );
        for (layer, (o, i)) in params.layers.iter_mut().zip(shape.layer_dims()) {
            glorot(
                &mut rng,
                layer.weights.as_slice_mut().expect("contiguous"),
                i,
                o,
            );
        }
        params.combine[0] = if variant.uses_wide() { 1.0 } else { 0.0 };
        params.combine[1] = if variant.uses_deep() { 1.0 } else { 0.0 };
        Ok(Network {
            shape,
            variant,
            params,
        })
    }

    pub fn check_example(&self, ex: &Example) -> Result<()> {
        if ex.d_x.len() != self.shape.dx_len {
            return Err(Error::ShapeMismatch(format!(
                "dense attribute features have {} values, network expects {}",
                ex.d_x.len(),
                self.shape.dx_len
            )));
        }
        if let Some(c) = ex.config {
            if c >= self.shape.vocab_len {
                return Err(Error::IndexOutOfRange {
                    index: c,
                    len: self.shape.vocab_len,
                });
            }
        }
        if let Some(&i) = ex
            .wide_active
            .iter()
            .find(|&&i| i as usize >= self.shape.wide_len)
        {
            return Err(Error::IndexOutOfRange {
                index: i as usize,
                len: self.shape.wide_len,
            });
        }
        Ok(())
    }

    pub fn forward_batch(&self, batch: &[&Example]) -> Result<Trace> {
        for ex in batch {
            self.check_example(ex)?;
        }
        let n = batch.len();
        let p = &self.params;
        let f_wide: Vec<f64> = if self.variant.uses_wide() {
            batch
                .iter()
                .map(|ex| {
                    p.wide_bias[0]
                        + ex.wide_active
                            .iter()
                            .map(|&i| p.wide[i as usize])
                            .sum::<f64>()
                })
                .collect()
        } else {
            vec![0.0; n]
        };
        let mut inputs = Vec::new();
        let mut pre_activations = Vec::new();
        let f_deep = if self.variant.uses_deep() {
            let e = self.shape.embedding_dim;
            let mut x = Array2::<f64>::zeros((n, self.shape.deep_input()));
            for (r, ex) in batch.iter().enumerate() {
                let mut row = x.row_mut(r);
                if let Some(c) = ex.config {
                    row.slice_mut(s![..e]).assign(&p.embedding.row(c));
                }
                for (dst, src) in row.slice_mut(s![e..]).iter_mut().zip(&ex.d_x) {
                    *dst = *src;
                }
            }
            for (l, layer) in p.layers.iter().enumerate() {
                let z = x.dot(&layer.weights.t()) + &layer.bias;
                let act = self.shape.activation(l);
                let next = z.mapv(|v| act.apply(v));
                inputs.push(std::mem::replace(&mut x, next));
                pre_activations.push(z);
            }
            x.column(0).to_vec()
        } else {
            vec![0.0; n]
        };
        let logits: Vec<f64> = f_wide
            .iter()
            .zip(&f_deep)
            .map(|(w, d)| p.combine[0] * w + p.combine[1] * d)
            .collect();
        let scores = logits.iter().map(|&z| sigmoid(z)).collect();
        Ok(Trace {
            inputs,
            pre_activations,
            f_wide,
            f_deep,
            logits,
            scores,
        })
    }

    pub fn forward(&self, ex: &Example) -> Result<f64> {
        Ok(self.forward_batch(&[ex])?.scores[0])
    }

    /// Score of one example together with its activation cache.
    pub fn forward_traced(&self, ex: &Example) -> Result<(f64, Trace)> {
        let trace = self.forward_batch(&[ex])?;
        Ok((trace.scores[0], trace))
    }

    /// Cross-entropy gradient of one example from a trace of `forward_traced`.
    pub fn backward_example(&self, ex: &Example, trace: &Trace, label: f64) -> Result<Params> {
        if trace.scores.len() != 1 {
            return Err(Error::ShapeMismatch(format!(
                "trace holds {} examples, expected 1",
                trace.scores.len()
            )));
        }
        Ok(self.backward(&[ex], trace, &[trace.scores[0] - label]))
    }

    pub fn scores(&self, examples: &[Example], batch_size: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(examples.len());
        for chunk in examples.chunks(batch_size.max(1)) {
            let refs: Vec<&Example> = chunk.iter().collect();
            out.extend(self.forward_batch(&refs)?.scores);
        }
        Ok(out)
    }

    /// Gradients of `sum_i dlogits[i] * logit_i` for a traced batch.
    pub fn backward(&self, batch: &[&Example], trace: &Trace, dlogits: &[f64]) -> Params {
        let p = &self.params;
        let mut g = Params::zeros(&self.shape);
        let (w_wide, w_deep) = (p.combine[0], p.combine[1]);
        if self.variant.uses_wide() {
            for ((ex, &dz), &fw) in batch.iter().zip(dlogits).zip(&trace.f_wide) {
                let d = dz * w_wide;
                g.wide_bias[0] += d;
                for &i in &ex.wide_active {
                    g.wide[i as usize] += d;
                }
                g.combine[0] += dz * fw;
            }
        }
        if self.variant.uses_deep() {
            for (&dz, &fd) in dlogits.iter().zip(&trace.f_deep) {
                g.combine[1] += dz * fd;
            }
            let n = batch.len();
            let mut da = Array2::from_shape_fn((n, 1), |(r, _)| dlogits[r] * w_deep);
            for l in (0..p.layers.len()).rev() {
                let act = self.shape.activation(l);
                let mut dz = da;
                if act != Activation::Identity {
                    dz.zip_mut_with(&trace.pre_activations[l], |d, &z| *d *= act.derivative(z));
                }
                g.layers[l].weights = dz.t().dot(&trace.inputs[l]);
                g.layers[l].bias = dz.sum_axis(Axis(0));
                let w = &p.layers[l].weights;
                if l > 0 {
                    da = dz.dot(w);
                } else {
                    let e = self.shape.embedding_dim;
                    let demb = dz.dot(&w.slice(s![.., ..e]));
                    for (r, ex) in batch.iter().enumerate() {
                        if let Some(c) = ex.config {
                            let mut row = g.embedding.row_mut(c);
                            row += &demb.row(r);
                        }
                    }
                    break;
                }
            }
        }
        if !self.variant.uses_wide() {
            g.combine[0] = 0.0;
        }
        if !self.variant.uses_deep() {
            g.combine[1] = 0.0;
        }
        g
    }

    /// Summed cross-entropy over the batch and its gradient.
    pub fn loss_and_gradients(
        &self,
        batch: &[&Example],
        labels: &[f64],
    ) -> Result<(f64, Params, Trace)> {
        if batch.len() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} examples but {} labels",
                batch.len(),
                labels.len()
            )));
        }
        let trace = self.forward_batch(batch)?;
        let loss = trace
            .scores
            .iter()
            .zip(labels)
            .map(|(&s, &y)| binary_cross_entropy(s, y))
            .sum();
        let dlogits: Vec<f64> = trace
            .scores
            .iter()
            .zip(labels)
            .map(|(s, y)| s - y)
            .collect();
        let g = self.backward(batch, &trace, &dlogits);
        Ok((loss, g, trace))
    }

    /// Single-example loss gradient.
    pub fn gradients(&self, ex: &Example, label: f64) -> Result<Params> {
        Ok(self.loss_and_gradients(&[ex], &[label])?.1)
    }

    pub fn loss(&self, ex: &Example, label: f64) -> Result<f64> {
        Ok(binary_cross_entropy(self.forward(ex)?, label))
    }

    pub fn sgd_step(&mut self, grads: &Params, lr: f64) {
        self.params.add_scaled(grads, -lr);
    }
}

fn glorot(rng: &mut ChaCha8Rng, out: &mut [f64], fan_in: usize, fan_out: usize) {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for w in out {
        *w = rng.gen_range(-bound..bound);
    }
}
