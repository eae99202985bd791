//! Fully connected ReLU network with hand-written backpropagation.
//!
//! Parameters live in one flat vector, layer by layer, each layer's weight
//! matrix (row-major, `outputs x inputs`) followed by its bias. Gradients and
//! optimizer buffers use the same layout.

use rand::Rng;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    dims: Vec<usize>,
    params: Vec<f64>,
}

/// Output of a forward pass: the last hidden activation and the logits.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    pub features: Vec<f64>,
    pub logits: Vec<f64>,
}

pub(crate) fn param_count(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 3 {
        return Err(invalid("network needs an input, at least one hidden layer and an output"));
    }
    if dims.contains(&0) {
        return Err(invalid("layer widths must be positive"));
    }
    Ok(())
}

impl Mlp {
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        check_dims(dims)?;
        Ok(Self { dims: dims.to_vec(), params: vec![0.0; param_count(dims)] })
    }

    /// He-uniform weights, zero biases.
    pub fn init<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(dims)?;
        let mut offset = 0;
        for w in dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (6.0 / fan_in as f64).sqrt();
            for p in &mut net.params[offset..offset + fan_in * fan_out] {
                *p = rng.random_range(-bound..bound);
            }
            offset += fan_in * fan_out + fan_out;
        }
        Ok(net)
    }

    pub fn from_params(dims: &[usize], params: Vec<f64>) -> Result<Self> {
        check_dims(dims)?;
        if params.len() != param_count(dims) {
            return Err(invalid(format!("expected {} parameters, got {}", param_count(dims), params.len())));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(invalid("parameters must be finite"));
        }
        Ok(Self { dims: dims.to_vec(), params })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn n_classes(&self) -> usize {
        *self.dims.last().expect("dims checked")
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// `(weights, bias)` of affine layer `layer`.
    pub fn layer(&self, layer: usize) -> (&[f64], &[f64]) {
        let (w, b) = self.layer_range(layer);
        (&self.params[w], &self.params[b])
    }

    pub fn layer_mut(&mut self, layer: usize) -> (&mut [f64], &mut [f64]) {
        let (w, b) = self.layer_range(layer);
        let (head, tail) = self.params.split_at_mut(b.start);
        (&mut head[w], &mut tail[..b.len()])
    }

    pub fn n_layers(&self) -> usize {
        self.dims.len() - 1
    }

    fn layer_range(&self, layer: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let offset: usize = self.dims[..=layer].windows(2).map(|w| w[1] * w[0] + w[1]).sum();
        let (i, o) = (self.dims[layer], self.dims[layer + 1]);
        (offset..offset + i * o, offset + i * o..offset + i * o + o)
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(invalid(format!("input has {} features, network expects {}", x.len(), self.input_dim())));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Forward> {
        let mut acts = self.activations(x)?;
        let logits = acts.pop().expect("at least one layer");
        let features = acts.pop().expect("at least one hidden layer");
        Ok(Forward { features, logits })
    }

    /// Input followed by each layer's output (ReLU applied on hidden layers).
    pub(crate) fn activations(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_input(x)?;
        let mut acts = Vec::with_capacity(self.dims.len());
        acts.push(x.to_vec());
        let last = self.n_layers() - 1;
        for l in 0..self.n_layers() {
            let (w, b) = self.layer(l);
            let input = acts.last().expect("non-empty");
            let n_in = input.len();
            let out: Vec<f64> = b
                .iter()
                .enumerate()
                .map(|(j, bj)| {
                    let z = bj + w[j * n_in..(j + 1) * n_in].iter().zip(input).map(|(a, v)| a * v).sum::<f64>();
                    if l < last {
                        z.max(0.0)
                    } else {
                        z
                    }
                })
                .collect();
            acts.push(out);
        }
        Ok(acts)
    }

    /// Accumulates `d loss / d params` into `grads` given the activations of
    /// one sample and `d loss / d logits`.
    pub(crate) fn backward(&self, acts: &[Vec<f64>], dlogits: &[f64], grads: &mut [f64]) {
        let mut delta = dlogits.to_vec();
        for l in (0..self.n_layers()).rev() {
            let (w_range, b_range) = self.layer_range(l);
            let input = &acts[l];
            let n_in = input.len();
            {
                let gw = &mut grads[w_range.clone()];
                for (j, dj) in delta.iter().enumerate() {
                    if *dj != 0.0 {
                        for (g, v) in gw[j * n_in..(j + 1) * n_in].iter_mut().zip(input) {
                            *g += dj * v;
                        }
                    }
                }
            }
            for (g, dj) in grads[b_range].iter_mut().zip(&delta) {
                *g += dj;
            }
            if l == 0 {
                break;
            }
            let w = &self.params[w_range];
            let mut prev = vec![0.0; n_in];
            for (j, dj) in delta.iter().enumerate() {
                if *dj != 0.0 {
                    for (p, a) in prev.iter_mut().zip(&w[j * n_in..(j + 1) * n_in]) {
                        *p += dj * a;
                    }
                }
            }
            // ReLU gate: the stored activation is zero exactly where the unit was off.
            for (p, a) in prev.iter_mut().zip(input) {
                if *a <= 0.0 {
                    *p = 0.0;
                }
            }
            delta = prev;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_network_gives_zero_logits() {
        let net = Mlp::zeros(&[3, 5, 4]).unwrap();
        let out = net.forward(&[1.0, -2.0, 0.5]).unwrap();
        assert_eq!(out.logits, vec![0.0; 4]);
        assert_eq!(out.features, vec![0.0; 5]);
    }

    #[test]
    fn passthrough_network_reproduces_input() {
        // Hidden layer holds [x, -x] so ReLU keeps both signs; output recombines.
        let d = 3;
        let mut net = Mlp::zeros(&[d, 2 * d, d]).unwrap();
        {
            let (w, _) = net.layer_mut(0);
            for i in 0..d {
                w[i * d + i] = 1.0;
                w[(d + i) * d + i] = -1.0;
            }
        }
        {
            let (w, _) = net.layer_mut(1);
            for i in 0..d {
                w[i * 2 * d + i] = 1.0;
                w[i * 2 * d + d + i] = -1.0;
            }
        }
        let x = [0.5, -1.25, 3.0];
        assert_eq!(net.forward(&x).unwrap().logits, x.to_vec());
    }

    #[test]
    fn seeded_init_is_deterministic() {
        let a = Mlp::init(&[4, 8, 8, 3], &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = Mlp::init(&[4, 8, 8, 3], &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        let x = [0.1, 0.2, -0.3, 0.4];
        assert_eq!(a.forward(&x).unwrap(), b.forward(&x).unwrap());
    }

    #[test]
    fn shape_errors() {
        let net = Mlp::zeros(&[3, 4, 2]).unwrap();
        assert!(net.forward(&[1.0, 2.0]).is_err());
        assert!(Mlp::zeros(&[3, 2]).is_err());
        assert!(Mlp::from_params(&[3, 4, 2], vec![0.0; 5]).is_err());
    }

    #[test]
    fn layer_views_cover_params() {
        let net = Mlp::zeros(&[3, 4, 2]).unwrap();
        assert_eq!(net.params().len(), 3 * 4 + 4 + 4 * 2 + 2);
        let (w, b) = net.layer(1);
        assert_eq!((w.len(), b.len()), (8, 2));
    }
}
