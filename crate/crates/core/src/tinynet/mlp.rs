use rand::Rng;

use super::NetError;

/// Fully connected layer; weights are row-major `[n_out][n_in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub n_in: usize,
    pub n_out: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(n_in: usize, n_out: usize) -> Self {
        Self { n_in, n_out, weights: vec![0.0; n_in * n_out], bias: vec![0.0; n_out] }
    }

    /// Glorot-uniform weights, zero bias.
    pub fn init<R: Rng + ?Sized>(n_in: usize, n_out: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (n_in + n_out) as f64).sqrt();
        let weights = (0..n_in * n_out).map(|_| rng.gen_range(-limit..=limit)).collect();
        Self { n_in, n_out, weights, bias: vec![0.0; n_out] }
    }

    fn forward_into(&self, input: &[f64], batch: usize, out: &mut Vec<f64>) {
        out.clear();
        out.reserve(batch * self.n_out);
        for x in input.chunks_exact(self.n_in) {
            for (row, b) in self.weights.chunks_exact(self.n_in).zip(&self.bias) {
                out.push(dot(row, x) + b);
            }
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four accumulators let the compiler vectorize without reassociation.
    let mut acc = [0.0f64; 4];
    let (ca, ra) = a.split_at(a.len() - a.len() % 4);
    let (cb, rb) = b.split_at(ca.len());
    for (x, y) in ca.chunks_exact(4).zip(cb.chunks_exact(4)) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

/// Multi-layer perceptron: rectifier on hidden layers, identity on the output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Dense>,
}

/// Per-layer activations kept from a forward pass for backpropagation.
/// `activations[0]` is the input; `activations[l + 1]` is the output of
/// layer `l` after its nonlinearity.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    pub batch: usize,
    pub activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().map(|v| v.as_slice()).unwrap_or(&[])
    }
}

/// Gradient of a scalar loss with respect to every parameter of an [`Mlp`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Gradients {
    pub fn flat(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.bias).copied()).collect()
    }
}

impl Mlp {
    pub fn new<R: Rng + ?Sized>(input_dim: usize, hidden: &[usize], n_actions: usize, rng: &mut R) -> Self {
        let dims = Self::dims_of(input_dim, hidden, n_actions);
        let layers = dims.windows(2).map(|w| Dense::init(w[0], w[1], rng)).collect();
        Self { layers }
    }

    pub fn zeros(input_dim: usize, hidden: &[usize], n_actions: usize) -> Self {
        let dims = Self::dims_of(input_dim, hidden, n_actions);
        let layers = dims.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect();
        Self { layers }
    }

    pub fn from_layers(layers: Vec<Dense>) -> Result<Self, NetError> {
        if layers.is_empty() {
            return Err(NetError::ShapeMismatch("network needs at least one layer".into()));
        }
        for w in layers.windows(2) {
            if w[0].n_out != w[1].n_in {
                return Err(NetError::ShapeMismatch(format!(
                    "layer output {} does not feed input {}",
                    w[0].n_out, w[1].n_in
                )));
            }
        }
        for l in &layers {
            if l.weights.len() != l.n_in * l.n_out || l.bias.len() != l.n_out {
                return Err(NetError::ShapeMismatch("parameter buffer length".into()));
            }
        }
        Ok(Self { layers })
    }

    fn dims_of(input_dim: usize, hidden: &[usize], n_actions: usize) -> Vec<usize> {
        let mut dims = Vec::with_capacity(hidden.len() + 2);
        dims.push(input_dim);
        dims.extend_from_slice(hidden);
        dims.push(n_actions);
        dims
    }

    /// Layer widths, input first.
    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.input_dim()];
        d.extend(self.layers.iter().map(|l| l.n_out));
        d
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn n_actions(&self) -> usize {
        self.layers.last().map(|l| l.n_out).unwrap_or(0)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Mutable access to the `idx`-th parameter in layer order
    /// (weights then bias within each layer).
    pub fn param_mut(&mut self, mut idx: usize) -> &mut f64 {
        for l in &mut self.layers {
            if idx < l.weights.len() {
                return &mut l.weights[idx];
            }
            idx -= l.weights.len();
            if idx < l.bias.len() {
                return &mut l.bias[idx];
            }
            idx -= l.bias.len();
        }
        panic!("parameter index out of range");
    }

    pub fn same_shape(&self, other: &Mlp) -> bool {
        self.layers.len() == other.layers.len()
            && self.layers.iter().zip(&other.layers).all(|(a, b)| a.n_in == b.n_in && a.n_out == b.n_out)
    }

    fn check_input(&self, states: &[f64], batch: usize) -> Result<(), NetError> {
        if states.len() != batch * self.input_dim() {
            return Err(NetError::ShapeMismatch(format!(
                "expected {batch} x {} inputs, got {} values",
                self.input_dim(),
                states.len()
            )));
        }
        Ok(())
    }

    /// Q-values for a batch of flattened observations, `batch x n_actions`.
    pub fn forward(&self, states: &[f64], batch: usize) -> Result<Vec<f64>, NetError> {
        Ok(self.forward_cached(states, batch)?.activations.pop().unwrap_or_default())
    }

    pub fn forward_cached(&self, states: &[f64], batch: usize) -> Result<ForwardCache, NetError> {
        self.check_input(states, batch)?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(states.to_vec());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::new();
            layer.forward_into(&activations[i], batch, &mut out);
            if i != last {
                for v in &mut out {
                    *v = v.max(0.0);
                }
            }
            activations.push(out);
        }
        Ok(ForwardCache { batch, activations })
    }

    /// Backpropagates `grad_out` (d loss / d output, `batch x n_actions`)
    /// through the cached forward pass.
    pub fn backward(&self, cache: &ForwardCache, grad_out: &[f64]) -> Gradients {
        let batch = cache.batch;
        let mut grads: Vec<Dense> = self.layers.iter().map(|l| Dense::zeros(l.n_in, l.n_out)).collect();
        let mut delta = grad_out.to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let input = &cache.activations[i];
            let g = &mut grads[i];
            for s in 0..batch {
                let x = &input[s * layer.n_in..(s + 1) * layer.n_in];
                let d = &delta[s * layer.n_out..(s + 1) * layer.n_out];
                for (o, &dv) in d.iter().enumerate() {
                    if dv == 0.0 {
                        continue;
                    }
                    g.bias[o] += dv;
                    let row = &mut g.weights[o * layer.n_in..(o + 1) * layer.n_in];
                    for (w, &xv) in row.iter_mut().zip(x) {
                        *w += dv * xv;
                    }
                }
            }
            if i == 0 {
                break;
            }
            // Propagate to the previous layer's post-activation, then through its rectifier.
            let mut prev = vec![0.0; batch * layer.n_in];
            for s in 0..batch {
                let d = &delta[s * layer.n_out..(s + 1) * layer.n_out];
                let p = &mut prev[s * layer.n_in..(s + 1) * layer.n_in];
                for (o, &dv) in d.iter().enumerate() {
                    if dv == 0.0 {
                        continue;
                    }
                    let row = &layer.weights[o * layer.n_in..(o + 1) * layer.n_in];
                    for (pv, &w) in p.iter_mut().zip(row) {
                        *pv += dv * w;
                    }
                }
            }
            for (pv, &a) in prev.iter_mut().zip(input) {
                if a <= 0.0 {
                    *pv = 0.0;
                }
            }
            delta = prev;
        }
        Gradients { layers: grads }
    }

    /// Copies every parameter of `other` into `self`.
    pub fn copy_from(&mut self, other: &Mlp) -> Result<(), NetError> {
        if !self.same_shape(other) {
            return Err(NetError::ShapeMismatch("networks differ in shape".into()));
        }
        for (dst, src) in self.layers.iter_mut().zip(&other.layers) {
            dst.weights.copy_from_slice(&src.weights);
            dst.bias.copy_from_slice(&src.bias);
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }
}
