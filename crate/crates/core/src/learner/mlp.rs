//! Fully connected value network with rectified-linear hidden layers, an
//! identity output layer, hand-written backpropagation, and Adam.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    /// Shape `(fan_in, fan_out)`.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Dense {
    /// Uniform init in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` for weights and biases.
    pub fn init<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (fan_in as f64).sqrt();
        let w = Array2::from_shape_simple_fn((fan_in, fan_out), || rng.random_range(-bound..=bound));
        let b = Array1::from_shape_simple_fn(fan_out, || rng.random_range(-bound..=bound));
        Self { w, b }
    }

    pub fn fan_in(&self) -> usize {
        self.w.nrows()
    }

    pub fn fan_out(&self) -> usize {
        self.w.ncols()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Per-layer parameter gradients, in layer order.
#[derive(Clone, Debug)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

/// Layer inputs and pre-activations kept from a forward pass.
pub struct ForwardCache {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
}

impl Mlp {
    /// `sizes = [input, hidden.., output]`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output sizes");
        let layers = sizes
            .windows(2)
            .map(|w| Dense::init(w[0], w[1], rng))
            .collect();
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").fan_out()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_dim()];
        s.extend(self.layers.iter().map(Dense::fan_out));
        s
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Batch forward pass; rows are samples.
    pub fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        self.forward_cached(x).1
    }

    pub fn forward_one(&self, x: &[f64]) -> Vec<f64> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("row vector");
        self.forward(view).into_raw_vec_and_offset().0
    }

    pub fn forward_cached(&self, x: ArrayView2<f64>) -> (ForwardCache, Array2<f64>) {
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut a = x.to_owned();
        for (k, layer) in self.layers.iter().enumerate() {
            let z = a.dot(&layer.w) + &layer.b;
            let next = if k == last {
                z.clone()
            } else {
                z.mapv(|v| v.max(0.0))
            };
            inputs.push(a);
            pre.push(z);
            a = next;
        }
        (ForwardCache { inputs, pre }, a)
    }

    /// Backpropagates `d_out` (gradient of the loss w.r.t. the network output).
    pub fn backward(&self, cache: &ForwardCache, d_out: Array2<f64>) -> Gradients {
        let mut grads: Vec<Dense> = Vec::with_capacity(self.layers.len());
        let mut delta = d_out;
        for k in (0..self.layers.len()).rev() {
            let dw = cache.inputs[k].t().dot(&delta);
            let db = delta.sum_axis(Axis(0));
            if k > 0 {
                let mut back = delta.dot(&self.layers[k].w.t());
                back.zip_mut_with(&cache.pre[k - 1], |g, &z| {
                    if z <= 0.0 {
                        *g = 0.0;
                    }
                });
                delta = back;
            }
            grads.push(Dense { w: dw, b: db });
        }
        grads.reverse();
        Gradients { layers: grads }
    }

    /// Mean squared error between the outputs at `actions` and `targets`, with
    /// its parameter gradients.
    pub fn td_loss_and_grad(
        &self,
        x: ArrayView2<f64>,
        actions: &[usize],
        targets: &[f64],
    ) -> (f64, Gradients) {
        let (cache, q) = self.forward_cached(x);
        let n = actions.len() as f64;
        let mut d_out = Array2::<f64>::zeros(q.raw_dim());
        let mut loss = 0.0;
        for (i, (&a, &y)) in actions.iter().zip(targets).enumerate() {
            let err = q[[i, a]] - y;
            loss += err * err;
            d_out[[i, a]] = 2.0 * err / n;
        }
        (loss / n, self.backward(&cache, d_out))
    }

    pub fn copy_from(&mut self, other: &Mlp) {
        self.layers.clone_from(&other.layers);
    }

    /// Parameters in layer order, each layer as row-major `w` then `b`.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend(l.w.iter());
            out.extend(l.b.iter());
        }
        out
    }

    /// Rebuilds a network of the given sizes from [`flat_params`](Self::flat_params) output.
    pub fn from_flat(sizes: &[usize], params: &[f64]) -> Option<Self> {
        let mut layers = Vec::new();
        let mut at = 0;
        for w in sizes.windows(2) {
            let (fi, fo) = (w[0], w[1]);
            let wn = fi * fo;
            let wv = params.get(at..at + wn)?.to_vec();
            at += wn;
            let bv = params.get(at..at + fo)?.to_vec();
            at += fo;
            layers.push(Dense {
                w: Array2::from_shape_vec((fi, fo), wv).ok()?,
                b: Array1::from_vec(bv),
            });
        }
        (at == params.len() && !layers.is_empty()).then_some(Self { layers })
    }
}

#[derive(Clone, Debug)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: i32,
    m: Vec<Dense>,
    v: Vec<Dense>,
}

impl Adam {
    pub fn new(net: &Mlp, lr: f64) -> Self {
        let zeros: Vec<Dense> = net
            .layers
            .iter()
            .map(|l| Dense {
                w: Array2::zeros(l.w.raw_dim()),
                b: Array1::zeros(l.b.raw_dim()),
            })
            .collect();
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn step(&mut self, net: &mut Mlp, grads: &Gradients) {
        self.t += 1;
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let step = self.lr * (1.0 - b2.powi(self.t)).sqrt() / (1.0 - b1.powi(self.t));
        for ((layer, g), (m, v)) in net
            .layers
            .iter_mut()
            .zip(&grads.layers)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            ndarray::Zip::from(&mut layer.w)
                .and(&g.w)
                .and(&mut m.w)
                .and(&mut v.w)
                .for_each(|p, &g, m, v| {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    *p -= step * *m / (v.sqrt() + eps);
                });
            ndarray::Zip::from(&mut layer.b)
                .and(&g.b)
                .and(&mut m.b)
                .and(&mut v.b)
                .for_each(|p, &g, m, v| {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    *p -= step * *m / (v.sqrt() + eps);
                });
        }
    }
}
