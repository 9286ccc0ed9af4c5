use rand::Rng;

use super::NeuralError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    LeakyRelu,
    Sigmoid,
    Linear,
}

impl Activation {
    pub fn code(self) -> u8 {
        match self {
            Activation::LeakyRelu => 0,
            Activation::Sigmoid => 1,
            Activation::Linear => 2,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(Activation::LeakyRelu),
            1 => Some(Activation::Sigmoid),
            2 => Some(Activation::Linear),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::LeakyRelu => "leaky_relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Linear => "linear",
        }
    }

    #[inline]
    fn apply(self, z: f64, leak: f64) -> f64 {
        match self {
            Activation::LeakyRelu => {
                if z > 0.0 {
                    z
                } else {
                    leak * z
                }
            }
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Linear => z,
        }
    }

    /// Derivative given the pre-activation `z` and the output `a`.
    #[inline]
    fn derivative(self, z: f64, a: f64, leak: f64) -> f64 {
        match self {
            Activation::LeakyRelu => {
                if z > 0.0 {
                    1.0
                } else {
                    leak
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Linear => 1.0,
        }
    }
}

/// Leaky-rectifier slope used unless a spec says otherwise.
pub const DEFAULT_LEAK: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct MlpSpec {
    /// Input size followed by each layer's output size.
    pub sizes: Vec<usize>,
    /// One activation per layer.
    pub activations: Vec<Activation>,
    pub leak: f64,
}

impl MlpSpec {
    /// `sizes[0] -> ... -> sizes[last]` with `hidden` on every layer but the
    /// last, which uses `output`.
    pub fn new(
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
    ) -> Result<Self, NeuralError> {
        let n_layers = sizes.len().saturating_sub(1);
        let mut activations = vec![hidden; n_layers];
        if let Some(last) = activations.last_mut() {
            *last = output;
        }
        let spec = MlpSpec {
            sizes: sizes.to_vec(),
            activations,
            leak: DEFAULT_LEAK,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        if self.sizes.len() < 2 {
            return Err(NeuralError::Spec("need at least one layer".into()));
        }
        if self.sizes.contains(&0) {
            return Err(NeuralError::Spec("layer sizes must be positive".into()));
        }
        if self.activations.len() != self.sizes.len() - 1 {
            return Err(NeuralError::Spec("one activation per layer".into()));
        }
        if !self.leak.is_finite() {
            return Err(NeuralError::Spec("leak slope must be finite".into()));
        }
        Ok(())
    }

    pub fn n_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn n_inputs(&self) -> usize {
        self.sizes[0]
    }

    pub fn n_outputs(&self) -> usize {
        *self.sizes.last().expect("validated")
    }

    pub fn n_params(&self) -> usize {
        self.sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    /// Offsets of (weights, biases) of layer `l` in the flat vector.
    fn offsets(&self, l: usize) -> (usize, usize) {
        let start: usize = self.sizes[..=l]
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum();
        (start, start + self.sizes[l] * self.sizes[l + 1])
    }

    fn check(&self, params: &[f64], x: &[f64]) -> Result<(), NeuralError> {
        if params.len() != self.n_params() {
            return Err(NeuralError::Shape {
                expected: self.n_params(),
                found: params.len(),
            });
        }
        if x.len() != self.n_inputs() {
            return Err(NeuralError::Shape {
                expected: self.n_inputs(),
                found: x.len(),
            });
        }
        Ok(())
    }

    fn layer(&self, params: &[f64], l: usize, input: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n_in = self.sizes[l];
        let n_out = self.sizes[l + 1];
        let (w0, b0) = self.offsets(l);
        let w = &params[w0..b0];
        let b = &params[b0..b0 + n_out];
        let act = self.activations[l];
        let mut z = Vec::with_capacity(n_out);
        let mut a = Vec::with_capacity(n_out);
        for o in 0..n_out {
            let row = &w[o * n_in..(o + 1) * n_in];
            let mut s = b[o];
            for (wi, xi) in row.iter().zip(input) {
                s += wi * xi;
            }
            z.push(s);
            a.push(act.apply(s, self.leak));
        }
        (z, a)
    }

    /// Network output for parameters laid out as in [`MlpParams`].
    pub fn predict_with(&self, params: &[f64], x: &[f64]) -> Result<Vec<f64>, NeuralError> {
        self.check(params, x)?;
        let mut cur = x.to_vec();
        for l in 0..self.n_layers() {
            cur = self.layer(params, l, &cur).1;
        }
        Ok(cur)
    }

    pub fn forward_with(
        &self,
        params: &[f64],
        x: &[f64],
    ) -> Result<(Vec<f64>, Cache), NeuralError> {
        self.check(params, x)?;
        let mut cache = Cache {
            a: vec![x.to_vec()],
            z: Vec::with_capacity(self.n_layers()),
        };
        for l in 0..self.n_layers() {
            let (z, a) = self.layer(params, l, &cache.a[l]);
            cache.z.push(z);
            cache.a.push(a);
        }
        Ok((cache.output().to_vec(), cache))
    }

    /// Adds `dL/dθ` into `grad` and returns `dL/dx`, given `dL/dy`.
    pub fn backward_with(
        &self,
        params: &[f64],
        cache: &Cache,
        d_out: &[f64],
        grad: &mut [f64],
    ) -> Result<Vec<f64>, NeuralError> {
        if d_out.len() != self.n_outputs() {
            return Err(NeuralError::Shape {
                expected: self.n_outputs(),
                found: d_out.len(),
            });
        }
        if grad.len() != params.len() || params.len() != self.n_params() {
            return Err(NeuralError::Shape {
                expected: self.n_params(),
                found: grad.len(),
            });
        }
        let mut delta: Vec<f64> = d_out.to_vec();
        for l in (0..self.n_layers()).rev() {
            let n_in = self.sizes[l];
            let (w0, b0) = self.offsets(l);
            let act = self.activations[l];
            for (o, d) in delta.iter_mut().enumerate() {
                *d *= act.derivative(cache.z[l][o], cache.a[l + 1][o], self.leak);
            }
            let input = &cache.a[l];
            let mut d_in = vec![0.0; n_in];
            for (o, &d) in delta.iter().enumerate() {
                grad[b0 + o] += d;
                let row = w0 + o * n_in;
                for i in 0..n_in {
                    grad[row + i] += d * input[i];
                    d_in[i] += params[row + i] * d;
                }
            }
            delta = d_in;
        }
        Ok(delta)
    }
}

/// Activations recorded by [`MlpParams::forward`].
#[derive(Debug, Clone)]
pub struct Cache {
    /// `a[0]` is the input, `a[l + 1]` the output of layer `l`.
    a: Vec<Vec<f64>>,
    /// Pre-activations per layer.
    z: Vec<Vec<f64>>,
}

impl Cache {
    pub fn output(&self) -> &[f64] {
        self.a.last().expect("non-empty")
    }
}

/// Weights and biases in one flat vector: per layer a row-major
/// `out x in` weight matrix followed by the bias vector.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    spec: MlpSpec,
    data: Vec<f64>,
}

impl MlpParams {
    pub fn zeros(spec: MlpSpec) -> Self {
        let n = spec.n_params();
        MlpParams {
            spec,
            data: vec![0.0; n],
        }
    }

    /// Weights uniform in `±sqrt(1 / fan_in)`, biases zero.
    pub fn init<R: Rng + ?Sized>(spec: MlpSpec, rng: &mut R) -> Self {
        let mut p = Self::zeros(spec);
        for l in 0..p.spec.n_layers() {
            let (w0, b0) = p.spec.offsets(l);
            let bound = (1.0 / p.spec.sizes[l] as f64).sqrt();
            for w in &mut p.data[w0..b0] {
                *w = rng.random_range(-bound..bound);
            }
        }
        p
    }

    pub fn from_flat(spec: MlpSpec, data: Vec<f64>) -> Result<Self, NeuralError> {
        spec.validate()?;
        if data.len() != spec.n_params() {
            return Err(NeuralError::Shape {
                expected: spec.n_params(),
                found: data.len(),
            });
        }
        Ok(MlpParams { spec, data })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn flat(&self) -> &[f64] {
        &self.data
    }

    pub fn flat_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn weight(&self, layer: usize, out: usize, inp: usize) -> f64 {
        let (w0, _) = self.spec.offsets(layer);
        self.data[w0 + out * self.spec.sizes[layer] + inp]
    }

    pub fn set_weight(&mut self, layer: usize, out: usize, inp: usize, v: f64) {
        let (w0, _) = self.spec.offsets(layer);
        let n_in = self.spec.sizes[layer];
        self.data[w0 + out * n_in + inp] = v;
    }

    pub fn set_bias(&mut self, layer: usize, out: usize, v: f64) {
        let (_, b0) = self.spec.offsets(layer);
        self.data[b0 + out] = v;
    }

    /// Output only; cheaper than [`MlpParams::forward`].
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>, NeuralError> {
        self.spec.predict_with(&self.data, x)
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, Cache), NeuralError> {
        self.spec.forward_with(&self.data, x)
    }

    /// Adds `dL/dθ` into `grad` and returns `dL/dx`, given `dL/dy`.
    pub fn backward_into(
        &self,
        cache: &Cache,
        d_out: &[f64],
        grad: &mut [f64],
    ) -> Result<Vec<f64>, NeuralError> {
        self.spec.backward_with(&self.data, cache, d_out, grad)
    }

    /// Parameter and input gradients of `L` given `dL/dy`.
    pub fn backward(
        &self,
        cache: &Cache,
        d_out: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>), NeuralError> {
        let mut grad = vec![0.0; self.data.len()];
        let d_in = self.backward_into(cache, d_out, &mut grad)?;
        Ok((grad, d_in))
    }
}
