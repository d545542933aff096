//! Embedding network: an MLP with ReLU hidden layers, a linear latent
//! output, and a final L2-normalization layer, trained by plain SGD with an
//! explicit backward pass.

use ndarray::{ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::numerics::{l2_normalize_rows, l2_normalize_rows_backward, Matrix, Rng, Vector};

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetConfig {
    pub input_dim: usize,
    /// Hidden layer widths; empty means a single linear map to the latent.
    pub hidden: Vec<usize>,
    pub latent_dim: usize,
    pub init_seed: u64,
    /// Multiplier on the 1/sqrt(fan_in) init range.
    pub weight_init_scale: f64,
}

impl NetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.latent_dim < 2 {
            return Err(Error::InvalidConfig(format!(
                "latent_dim must be at least 2, got {}",
                self.latent_dim
            )));
        }
        if self.input_dim == 0 || self.hidden.iter().any(|&w| w == 0) {
            return Err(Error::InvalidConfig("all layer widths must be >= 1".into()));
        }
        if !(self.weight_init_scale > 0.0) {
            return Err(Error::InvalidConfig("weight_init_scale must be positive".into()));
        }
        Ok(())
    }

    /// Layer sizes from input to latent.
    fn dims(&self) -> Vec<usize> {
        let mut v = Vec::with_capacity(self.hidden.len() + 2);
        v.push(self.input_dim);
        v.extend_from_slice(&self.hidden);
        v.push(self.latent_dim);
        v
    }
}

/// Per-layer activations cached by a forward pass, consumed by backward.
pub struct BatchActivations {
    inputs: Matrix,
    /// Pre-activations of each hidden layer.
    pre: Vec<Matrix>,
    /// Post-ReLU activations of each hidden layer.
    post: Vec<Matrix>,
    /// Latent output before normalization.
    latent: Matrix,
    version: u64,
}

impl BatchActivations {
    /// Unnormalized latent rows (the representation the linear head of the
    /// cross-entropy baselines consumes).
    pub fn latent(&self) -> &Matrix {
        &self.latent
    }

    pub fn batch_len(&self) -> usize {
        self.inputs.nrows()
    }
}

#[derive(Debug, Clone)]
pub struct ParamGrads {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vector>,
}

/// The embedding map. Parameter count is fixed at construction; the only
/// mutation is [`EmbeddingNetwork::sgd_step`].
#[derive(Debug, Clone)]
pub struct EmbeddingNetwork {
    config: NetConfig,
    weights: Vec<Matrix>,
    biases: Vec<Vector>,
    version: u64,
}

impl EmbeddingNetwork {
    pub fn new(config: NetConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = Rng::from_seed(config.init_seed).child("net-init");
        let dims = config.dims();
        let mut weights = Vec::with_capacity(dims.len() - 1);
        let mut biases = Vec::with_capacity(dims.len() - 1);
        for w in dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let s = config.weight_init_scale / (fan_in as f64).sqrt();
            weights.push(Matrix::from_shape_fn((fan_in, fan_out), |_| {
                rng.uniform_range(-s, s)
            }));
            biases.push(Vector::from_shape_fn(fan_out, |_| rng.uniform_range(-s, s)));
        }
        Ok(Self {
            config,
            weights,
            biases,
            version: 0,
        })
    }

    /// Rebuild a network from explicit parameters (checkpoint load, tests).
    pub fn from_params(config: NetConfig, weights: Vec<Matrix>, biases: Vec<Vector>) -> Result<Self> {
        config.validate()?;
        let dims = config.dims();
        if weights.len() != dims.len() - 1 || biases.len() != dims.len() - 1 {
            return Err(Error::ShapeMismatch("wrong number of layers".into()));
        }
        for (l, w) in dims.windows(2).enumerate() {
            if weights[l].dim() != (w[0], w[1]) || biases[l].len() != w[1] {
                return Err(Error::ShapeMismatch(format!(
                    "layer {l}: expected {}x{}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self {
            config,
            weights,
            biases,
            version: 0,
        })
    }

    pub fn config(&self) -> &NetConfig {
        &self.config
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vector] {
        &self.biases
    }

    pub fn num_params(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    /// FNV-1a over the raw parameter bits; used by isolation and
    /// determinism checks.
    pub fn fingerprint(&self) -> u64 {
        let mut h = 0xcbf29ce484222325u64;
        let mut eat = |x: f64| {
            for b in x.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        for w in &self.weights {
            w.iter().copied().for_each(&mut eat);
        }
        for b in &self.biases {
            b.iter().copied().for_each(&mut eat);
        }
        h
    }

    /// Unnormalized latent representation plus the cache for backward.
    pub fn forward_latent(&self, inputs: ArrayView2<'_, f64>) -> Result<(Matrix, BatchActivations)> {
        if inputs.ncols() != self.config.input_dim {
            return Err(Error::ShapeMismatch(format!(
                "input has {} columns, network expects {}",
                inputs.ncols(),
                self.config.input_dim
            )));
        }
        let n_hidden = self.config.hidden.len();
        let mut pre = Vec::with_capacity(n_hidden);
        let mut post = Vec::with_capacity(n_hidden);
        let mut z = inputs.to_owned();
        for l in 0..n_hidden {
            let a = z.dot(&self.weights[l]) + &self.biases[l];
            let p = a.mapv(|x| x.max(0.0));
            pre.push(a);
            post.push(p.clone());
            z = p;
        }
        let latent = z.dot(&self.weights[n_hidden]) + &self.biases[n_hidden];
        let cache = BatchActivations {
            inputs: inputs.to_owned(),
            pre,
            post,
            latent: latent.clone(),
            version: self.version,
        };
        Ok((latent, cache))
    }

    /// Unit-norm features plus the cache for backward.
    pub fn forward(&self, inputs: ArrayView2<'_, f64>) -> Result<(Matrix, BatchActivations)> {
        let (latent, cache) = self.forward_latent(inputs)?;
        let features = l2_normalize_rows(latent.view())?;
        Ok((features, cache))
    }

    /// Gradients of every parameter given the loss gradient w.r.t. the
    /// normalized features.
    pub fn backward(&self, cache: &BatchActivations, d_features: ArrayView2<'_, f64>) -> Result<ParamGrads> {
        self.check_cache(cache, d_features)?;
        let d_latent = l2_normalize_rows_backward(cache.latent.view(), d_features)?;
        self.backprop_from_latent(cache, d_latent)
    }

    /// Same as [`EmbeddingNetwork::backward`] but starting from the
    /// unnormalized latent (cross-entropy head path).
    pub fn backward_latent(&self, cache: &BatchActivations, d_latent: ArrayView2<'_, f64>) -> Result<ParamGrads> {
        self.check_cache(cache, d_latent)?;
        self.backprop_from_latent(cache, d_latent.to_owned())
    }

    fn check_cache(&self, cache: &BatchActivations, upstream: ArrayView2<'_, f64>) -> Result<()> {
        if cache.version != self.version {
            return Err(Error::StaleCache(format!(
                "cache from parameter version {}, network is at {}",
                cache.version, self.version
            )));
        }
        if upstream.dim() != cache.latent.dim() {
            return Err(Error::ShapeMismatch(format!(
                "upstream {:?} vs cached latent {:?}",
                upstream.dim(),
                cache.latent.dim()
            )));
        }
        Ok(())
    }

    fn backprop_from_latent(&self, cache: &BatchActivations, d_latent: Matrix) -> Result<ParamGrads> {
        let n_layers = self.weights.len();
        let mut g_weights = vec![Matrix::zeros((0, 0)); n_layers];
        let mut g_biases = vec![Vector::zeros(0); n_layers];
        let mut delta = d_latent;
        for l in (0..n_layers).rev() {
            let a_in = if l == 0 { &cache.inputs } else { &cache.post[l - 1] };
            g_weights[l] = a_in.t().dot(&delta);
            g_biases[l] = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut d_post = delta.dot(&self.weights[l].t());
                ndarray::Zip::from(&mut d_post)
                    .and(&cache.pre[l - 1])
                    .for_each(|g, &p| {
                        if p <= 0.0 {
                            *g = 0.0;
                        }
                    });
                delta = d_post;
            }
        }
        Ok(ParamGrads {
            weights: g_weights,
            biases: g_biases,
        })
    }

    /// Descend: `theta <- theta - lr * grad`.
    pub fn sgd_step(&mut self, grads: &ParamGrads, lr: f64) -> Result<()> {
        if grads.weights.len() != self.weights.len() {
            return Err(Error::ShapeMismatch("gradient layer count mismatch".into()));
        }
        for (w, g) in self.weights.iter_mut().zip(&grads.weights) {
            if w.dim() != g.dim() {
                return Err(Error::ShapeMismatch("weight gradient shape mismatch".into()));
            }
            w.scaled_add(-lr, g);
        }
        for (b, g) in self.biases.iter_mut().zip(&grads.biases) {
            if b.len() != g.len() {
                return Err(Error::ShapeMismatch("bias gradient shape mismatch".into()));
            }
            b.scaled_add(-lr, g);
        }
        self.version += 1;
        Ok(())
    }
}

/// Linear classification head for the cross-entropy baselines: maps the
/// unnormalized latent to one logit per observed class and grows a column
/// when a new class appears.
#[derive(Debug, Clone)]
pub struct LinearHead {
    /// (latent_dim x n_classes)
    weight: Matrix,
    bias: Vector,
    latent_dim: usize,
}

impl LinearHead {
    pub fn new(latent_dim: usize) -> Self {
        Self {
            weight: Matrix::zeros((latent_dim, 0)),
            bias: Vector::zeros(0),
            latent_dim,
        }
    }

    pub fn from_params(weight: Matrix, bias: Vector) -> Result<Self> {
        if weight.ncols() != bias.len() {
            return Err(Error::ShapeMismatch("head weight/bias mismatch".into()));
        }
        Ok(Self {
            latent_dim: weight.nrows(),
            weight,
            bias,
        })
    }

    pub fn n_outputs(&self) -> usize {
        self.bias.len()
    }

    pub fn weight(&self) -> &Matrix {
        &self.weight
    }

    pub fn bias(&self) -> &Vector {
        &self.bias
    }

    /// Append one output unit, initialized like a fresh linear layer.
    pub fn grow(&mut self, rng: &mut Rng) {
        let s = 1.0 / (self.latent_dim as f64).sqrt();
        let k = self.n_outputs();
        let mut weight = Matrix::zeros((self.latent_dim, k + 1));
        weight
            .slice_mut(ndarray::s![.., ..k])
            .assign(&self.weight);
        for i in 0..self.latent_dim {
            weight[(i, k)] = rng.uniform_range(-s, s);
        }
        let mut bias = Vector::zeros(k + 1);
        bias.slice_mut(ndarray::s![..k]).assign(&self.bias);
        bias[k] = rng.uniform_range(-s, s);
        self.weight = weight;
        self.bias = bias;
    }

    pub fn logits(&self, latent: ArrayView2<'_, f64>) -> Matrix {
        latent.dot(&self.weight) + &self.bias
    }

    /// Returns (d_latent, d_weight, d_bias) for the given logit gradient.
    pub fn backward(
        &self,
        latent: ArrayView2<'_, f64>,
        d_logits: ArrayView2<'_, f64>,
    ) -> (Matrix, Matrix, Vector) {
        let d_latent = d_logits.dot(&self.weight.t());
        let d_weight = latent.t().dot(&d_logits);
        let d_bias = d_logits.sum_axis(Axis(0));
        (d_latent, d_weight, d_bias)
    }

    pub fn sgd_step(&mut self, d_weight: &Matrix, d_bias: &Vector, lr: f64) {
        self.weight.scaled_add(-lr, d_weight);
        self.bias.scaled_add(-lr, d_bias);
    }

    pub fn fingerprint(&self) -> u64 {
        let mut h = 0xcbf29ce484222325u64;
        for x in self.weight.iter().chain(self.bias.iter()) {
            for b in x.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x100000001b3);
            }
        }
        h
    }
}
