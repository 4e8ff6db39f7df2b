//! Multilayer perceptron Q-network with hand-written backpropagation.

use rand::Rng;

use super::DqnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct LayerShape {
    inputs: usize,
    outputs: usize,
    /// Offset of the `outputs x inputs` row-major weight block in `params`.
    weights: usize,
    /// Offset of the `outputs` biases in `params`.
    biases: usize,
}

/// Fully connected network: rectifier on hidden layers, identity output.
///
/// All weights and biases live in a single flat vector so that optimizers,
/// checkpoints and gradient checks can treat them uniformly.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    sizes: Vec<usize>,
    layers: Vec<LayerShape>,
    params: Vec<f64>,
}

/// One regression target: the value of `action` in `obs` should be `target`.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub obs: &'a [f64],
    pub action: usize,
    pub target: f64,
}

impl QNetwork {
    /// Network of the given layer sizes with every parameter zero.
    pub fn zeros(sizes: &[usize]) -> Result<Self, DqnError> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(DqnError::InvalidArchitecture(sizes.to_vec()));
        }
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        let mut offset = 0;
        for w in sizes.windows(2) {
            let (inputs, outputs) = (w[0], w[1]);
            layers.push(LayerShape {
                inputs,
                outputs,
                weights: offset,
                biases: offset + inputs * outputs,
            });
            offset += inputs * outputs + outputs;
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            layers,
            params: vec![0.0; offset],
        })
    }

    /// Uniform fan-in initialisation, `U(-1/sqrt(in), 1/sqrt(in))`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self, DqnError> {
        let mut net = Self::zeros(sizes)?;
        for layer in net.layers.clone() {
            let bound = 1.0 / (layer.inputs as f64).sqrt();
            let end = layer.biases + layer.outputs;
            for p in &mut net.params[layer.weights..end] {
                *p = rng.random_range(-bound..bound);
            }
        }
        Ok(net)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_len(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_len(&self) -> usize {
        *self.sizes.last().unwrap_or(&0)
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<(), DqnError> {
        if params.len() != self.params.len() {
            return Err(DqnError::DimensionMismatch {
                expected: self.params.len(),
                found: params.len(),
            });
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    /// `(weights, biases)` of layer `i`, weights row-major `outputs x inputs`.
    pub fn layer(&self, i: usize) -> (&[f64], &[f64]) {
        let l = self.layers[i];
        (
            &self.params[l.weights..l.biases],
            &self.params[l.biases..l.biases + l.outputs],
        )
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    fn affine(&self, l: LayerShape, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&self.params[l.biases..l.biases + l.outputs]);
        let w = &self.params[l.weights..l.biases];
        let nonzero = x.iter().filter(|&&v| v != 0.0).count();
        if nonzero * 4 < x.len() {
            // One-hot observations are mostly zeros; walk the columns that matter.
            for (i, &xi) in x.iter().enumerate() {
                if xi != 0.0 {
                    for (j, o) in out.iter_mut().enumerate() {
                        *o += w[j * l.inputs + i] * xi;
                    }
                }
            }
        } else {
            for (o, row) in out.iter_mut().zip(w.chunks_exact(l.inputs)) {
                *o += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            }
        }
    }

    /// Activations of every layer, input first, output last.
    fn trace(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (i, &l) in self.layers.iter().enumerate() {
            let mut out = Vec::with_capacity(l.outputs);
            self.affine(l, &acts[i], &mut out);
            if i < last {
                for v in &mut out {
                    *v = v.max(0.0);
                }
            }
            acts.push(out);
        }
        acts
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, DqnError> {
        if x.len() != self.input_len() {
            return Err(DqnError::DimensionMismatch {
                expected: self.input_len(),
                found: x.len(),
            });
        }
        Ok(self.trace(x).pop().unwrap_or_default())
    }

    /// Mean squared error over the batch and its gradient with respect to
    /// every parameter.
    pub fn loss_and_gradient(&self, batch: &[Sample<'_>]) -> Result<(f64, Vec<f64>), DqnError> {
        if batch.is_empty() {
            return Err(DqnError::EmptyBatch);
        }
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let scale = 1.0 / batch.len() as f64;
        for s in batch {
            if s.obs.len() != self.input_len() {
                return Err(DqnError::DimensionMismatch {
                    expected: self.input_len(),
                    found: s.obs.len(),
                });
            }
            if s.action >= self.output_len() {
                return Err(DqnError::InvalidAction(s.action));
            }
            let acts = self.trace(s.obs);
            let q = acts[acts.len() - 1][s.action];
            let err = q - s.target;
            loss += err * err * scale;

            let mut delta = vec![0.0; self.output_len()];
            delta[s.action] = 2.0 * err * scale;
            for li in (0..self.layers.len()).rev() {
                let l = self.layers[li];
                let input = &acts[li];
                for (j, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    grad[l.biases + j] += d;
                    let row = &mut grad[l.weights + j * l.inputs..l.weights + (j + 1) * l.inputs];
                    for (g, &a) in row.iter_mut().zip(input) {
                        if a != 0.0 {
                            *g += d * a;
                        }
                    }
                }
                if li == 0 {
                    break;
                }
                let w = &self.params[l.weights..l.biases];
                let mut prev = vec![0.0; l.inputs];
                for (j, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    for (p, &wji) in prev.iter_mut().zip(&w[j * l.inputs..(j + 1) * l.inputs]) {
                        *p += wji * d;
                    }
                }
                // rectifier derivative, zero at the kink
                for (p, &a) in prev.iter_mut().zip(input) {
                    if a <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }
        Ok((loss, grad))
    }

    /// Plain gradient descent step `theta <- theta - lr * grad`.
    pub fn descend(&mut self, grad: &[f64], lr: f64) {
        for (p, g) in self.params.iter_mut().zip(grad) {
            *p -= lr * g;
        }
    }
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
