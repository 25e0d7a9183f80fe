use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{adam_step, Activation, AdamConfig, Matrix, Parameter};
use crate::error::{Error, Result};

/// Layer widths and activations of a feed-forward chain.
///
/// `layer_sizes[i]` is the output width of layer `i`; the first layer reads
/// `input_dim` features.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_dim: usize,
    pub layer_sizes: Vec<usize>,
    pub activations: Vec<Activation>,
}

impl NetworkSpec {
    pub fn new(input_dim: usize, layers: &[(usize, Activation)]) -> Result<Self> {
        let spec = Self {
            input_dim,
            layer_sizes: layers.iter().map(|l| l.0).collect(),
            activations: layers.iter().map(|l| l.1).collect(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.is_empty() {
            return Err(Error::InvalidArgument("network needs at least one layer".into()));
        }
        if self.layer_sizes.len() != self.activations.len() {
            return Err(Error::InvalidArgument(format!(
                "{} layer sizes but {} activations",
                self.layer_sizes.len(),
                self.activations.len()
            )));
        }
        if self.input_dim == 0 || self.layer_sizes.contains(&0) {
            return Err(Error::InvalidArgument("layer widths must be positive".into()));
        }
        let last = self.activations.len() - 1;
        if self.activations[..last].contains(&Activation::Softmax) {
            return Err(Error::InvalidArgument(
                "softmax is only allowed as the final activation".into(),
            ));
        }
        Ok(())
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().expect("validated spec")
    }

    /// `(in_dim, out_dim)` of every layer.
    pub fn layer_dims(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        std::iter::once(self.input_dim)
            .chain(self.layer_sizes.iter().copied())
            .zip(self.layer_sizes.iter().copied())
    }
}

/// Everything [`Network::backward`] needs from a forward pass.
///
/// A default (empty) cache means no forward pass was recorded.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    /// Input to each layer.
    inputs: Vec<Matrix>,
    /// Affine output of each layer before its activation.
    pre: Vec<Matrix>,
    /// Activated output of each layer.
    post: Vec<Matrix>,
}

impl ForwardCache {
    pub fn is_empty(&self) -> bool {
        self.post.is_empty()
    }

    pub fn pre_activations(&self) -> &[Matrix] {
        &self.pre
    }

    pub fn post_activations(&self) -> &[Matrix] {
        &self.post
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    spec: NetworkSpec,
    /// Layer `i` weight has shape `in_dim × out_dim`.
    pub weights: Vec<Parameter>,
    /// Layer `i` bias has shape `1 × out_dim`.
    pub biases: Vec<Parameter>,
}

impl Network {
    /// Initializes weights and biases uniformly in `±1/√fan_in`.
    pub fn new<R: Rng + ?Sized>(spec: NetworkSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let mut weights = Vec::with_capacity(spec.layer_sizes.len());
        let mut biases = Vec::with_capacity(spec.layer_sizes.len());
        for (fan_in, fan_out) in spec.layer_dims() {
            let bound = 1.0 / (fan_in as f64).sqrt();
            let w: Vec<f64> = (0..fan_in * fan_out)
                .map(|_| rng.gen_range(-bound..bound))
                .collect();
            let b: Vec<f64> = (0..fan_out).map(|_| rng.gen_range(-bound..bound)).collect();
            weights.push(Parameter::new(Matrix::from_vec(fan_in, fan_out, w)?));
            biases.push(Parameter::new(Matrix::from_vec(1, fan_out, b)?));
        }
        Ok(Self {
            spec,
            weights,
            biases,
        })
    }

    /// All-zero parameters.
    pub fn zeros(spec: NetworkSpec) -> Result<Self> {
        spec.validate()?;
        let (weights, biases) = spec
            .layer_dims()
            .map(|(i, o)| {
                (
                    Parameter::new(Matrix::zeros(i, o)),
                    Parameter::new(Matrix::zeros(1, o)),
                )
            })
            .unzip();
        Ok(Self {
            spec,
            weights,
            biases,
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.spec.output_dim()
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn zero_final_layer(&mut self) {
        let last = self.weights.len() - 1;
        self.weights[last].value.fill(0.0);
        self.biases[last].value.fill(0.0);
    }

    /// Parameters in layer order: `w0, b0, w1, b1, ...`.
    pub fn params(&self) -> impl Iterator<Item = &Parameter> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| [w, b])
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut Parameter> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w, b])
    }

    pub fn param_count(&self) -> usize {
        self.params().map(|p| p.value.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        self.params_mut().for_each(Parameter::zero_grad);
    }

    pub fn adam_step(&mut self, cfg: &AdamConfig) {
        adam_step(self.params_mut(), cfg);
    }

    /// Output only, no cache.
    pub fn predict(&self, input: &Matrix) -> Result<Matrix> {
        self.check_input(input)?;
        let mut x = input.clone();
        for layer in 0..self.num_layers() {
            let pre = self.affine(layer, &x)?;
            x = self.spec.activations[layer].apply(&pre);
        }
        Ok(x)
    }

    pub fn forward(&self, input: &Matrix) -> Result<(Matrix, ForwardCache)> {
        self.check_input(input)?;
        let n = self.num_layers();
        let mut cache = ForwardCache {
            inputs: Vec::with_capacity(n),
            pre: Vec::with_capacity(n),
            post: Vec::with_capacity(n),
        };
        let mut x = input.clone();
        for layer in 0..n {
            let pre = self.affine(layer, &x)?;
            let post = self.spec.activations[layer].apply(&pre);
            cache.inputs.push(x);
            cache.pre.push(pre);
            x = post.clone();
            cache.post.push(post);
        }
        Ok((x, cache))
    }

    /// Accumulates `d(Σ output ⊙ output_grad)/dθ` into every parameter's
    /// `grad` and returns the gradient with respect to the input.
    pub fn backward(&mut self, cache: &ForwardCache, output_grad: &Matrix) -> Result<Matrix> {
        self.check_cache(cache, output_grad)?;
        let mut g = output_grad.clone();
        for layer in (0..self.num_layers()).rev() {
            let act = self.spec.activations[layer];
            let dz = act.backprop(&cache.pre[layer], &cache.post[layer], &g);
            cache.inputs[layer].t_matmul_acc(&dz, &mut self.weights[layer].grad);
            dz.col_sum_acc(self.biases[layer].grad.data_mut());
            g = dz.matmul_t(&self.weights[layer].value);
        }
        Ok(g)
    }

    /// Gradient with respect to the input only; parameter grads are untouched.
    pub fn backward_input(&self, cache: &ForwardCache, output_grad: &Matrix) -> Result<Matrix> {
        self.check_cache(cache, output_grad)?;
        let mut g = output_grad.clone();
        for layer in (0..self.num_layers()).rev() {
            let act = self.spec.activations[layer];
            let dz = act.backprop(&cache.pre[layer], &cache.post[layer], &g);
            g = dz.matmul_t(&self.weights[layer].value);
        }
        Ok(g)
    }

    /// Copies every parameter value from `other`.
    pub fn copy_from(&mut self, other: &Network) {
        assert_eq!(self.spec, other.spec, "target network shape must match");
        for (dst, src) in self.params_mut().zip(other.params()) {
            dst.value.data_mut().copy_from_slice(src.value.data());
        }
    }

    /// `θ ← τ θ_other + (1 - τ) θ`.
    pub fn blend_from(&mut self, other: &Network, tau: f64) {
        assert_eq!(self.spec, other.spec, "target network shape must match");
        for (dst, src) in self.params_mut().zip(other.params()) {
            for (d, s) in dst.value.data_mut().iter_mut().zip(src.value.data()) {
                *d = tau * s + (1.0 - tau) * *d;
            }
        }
    }

    fn affine(&self, layer: usize, x: &Matrix) -> Result<Matrix> {
        let mut z = x.matmul(&self.weights[layer].value)?;
        z.add_row_broadcast(self.biases[layer].value.data());
        Ok(z)
    }

    fn check_input(&self, input: &Matrix) -> Result<()> {
        if input.cols() != self.spec.input_dim {
            return Err(Error::Dimension(format!(
                "network expects {} input features, got {}",
                self.spec.input_dim,
                input.cols()
            )));
        }
        Ok(())
    }

    fn check_cache(&self, cache: &ForwardCache, output_grad: &Matrix) -> Result<()> {
        if cache.is_empty() {
            return Err(Error::State("backward called without a forward pass".into()));
        }
        if cache.post.len() != self.num_layers() {
            return Err(Error::State("cache was recorded by a different network".into()));
        }
        let out = cache.post.last().expect("non-empty");
        if out.shape() != output_grad.shape() {
            return Err(Error::Dimension(format!(
                "output gradient {:?} does not match output {:?}",
                output_grad.shape(),
                out.shape()
            )));
        }
        Ok(())
    }
}
