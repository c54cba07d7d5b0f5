use crate::error::{Error, Result};
use crate::rng::Prng;

use super::spec::{compile, ConvGeom, Layer, ModelSpec};
use super::{gemm, Real};

/// Smallest probability fed to the log in the loss.
const LOG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropoutMode {
    /// No units dropped (inference behaviour).
    Off,
    /// Masks drawn from a generator with this seed, so repeated calls see the
    /// same mask.
    Seeded(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model<T: Real = f64> {
    spec: ModelSpec,
    layers: Vec<Layer>,
    params: Vec<T>,
}

/// Activations and auxiliary state kept for backpropagation.
struct Trace<T> {
    /// `acts[l]` is the input of layer `l`; the last entry holds the logits.
    acts: Vec<Vec<T>>,
    cols: Vec<Vec<T>>,
    argmax: Vec<Vec<u32>>,
    masks: Vec<Vec<T>>,
}

impl<T: Real> Model<T> {
    /// He-uniform weights (`±√(6 / fan_in)`) and zero biases.
    pub fn new(spec: ModelSpec, seed: u64) -> Result<Self> {
        let mut model = Self::zeros(spec)?;
        let mut rng = Prng::new(seed);
        for layer in &model.layers {
            let (w_off, b_off) = match *layer {
                Layer::Conv { w_off, b_off, .. } | Layer::Dense { w_off, b_off, .. } => (w_off, b_off),
                _ => continue,
            };
            let limit = (6.0 / layer.fan_in().unwrap() as f64).sqrt();
            for p in &mut model.params[w_off..b_off] {
                *p = T::lit(limit * (2.0 * rng.uniform() - 1.0));
            }
        }
        Ok(model)
    }

    pub fn zeros(spec: ModelSpec) -> Result<Self> {
        let (layers, n) = compile(&spec)?;
        Ok(Self { spec, layers, params: vec![T::zero(); n] })
    }

    pub fn from_params(spec: ModelSpec, params: Vec<T>) -> Result<Self> {
        let (layers, n) = compile(&spec)?;
        if params.len() != n {
            return Err(Error::Dimension { expected: n, got: params.len() });
        }
        Ok(Self { spec, layers, params })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    /// Same network with parameters converted to another scalar type.
    pub fn cast<U: Real>(&self) -> Model<U> {
        Model { spec: self.spec.clone(), layers: self.layers.clone(), params: self.params.iter().map(|p| U::lit(p.as_f64())).collect() }
    }

    fn batch_size(&self, batch: &[T]) -> Result<usize> {
        let d = self.spec.input_dim();
        if batch.is_empty() || batch.len() % d != 0 {
            return Err(Error::Dimension { expected: d, got: batch.len() });
        }
        Ok(batch.len() / d)
    }

    /// Class probabilities for a row-major batch (inference mode, no dropout).
    pub fn forward(&self, batch: &[T]) -> Result<Vec<T>> {
        let bsz = self.batch_size(batch)?;
        let mut logits = self.run(batch, bsz, DropoutMode::Off, false)?.acts.pop().unwrap();
        softmax_rows(&mut logits, self.spec.n_classes);
        Ok(logits)
    }

    pub fn predict(&self, batch: &[T]) -> Result<Vec<usize>> {
        let bsz = self.batch_size(batch)?;
        let logits = self.run(batch, bsz, DropoutMode::Off, false)?.acts.pop().unwrap();
        Ok(logits.chunks_exact(self.spec.n_classes).map(argmax).collect())
    }

    /// Mean cross-entropy plus `λ‖θ‖²`.
    pub fn loss(&self, batch: &[T], labels: &[usize], lambda: f64, dropout: DropoutMode) -> Result<f64> {
        let bsz = self.check_labels(batch, labels)?;
        let mut logits = self.run(batch, bsz, dropout, false)?.acts.pop().unwrap();
        softmax_rows(&mut logits, self.spec.n_classes);
        Ok(cross_entropy(&logits, labels, self.spec.n_classes) + self.penalty(lambda))
    }

    /// Loss and its gradient with respect to every parameter.
    pub fn loss_and_grad(&self, batch: &[T], labels: &[usize], lambda: f64, dropout: DropoutMode) -> Result<(f64, Vec<T>)> {
        let bsz = self.check_labels(batch, labels)?;
        let c = self.spec.n_classes;
        let mut trace = self.run(batch, bsz, dropout, true)?;
        let mut delta = trace.acts.pop().unwrap();
        softmax_rows(&mut delta, c);
        let loss = cross_entropy(&delta, labels, c) + self.penalty(lambda);
        let inv_b = T::lit(1.0 / bsz as f64);
        for (row, &y) in delta.chunks_exact_mut(c).zip(labels) {
            row[y] -= T::one();
            row.iter_mut().for_each(|v| *v *= inv_b);
        }
        let mut grad = vec![T::zero(); self.params.len()];
        for (l, layer) in self.layers.iter().enumerate().rev() {
            delta = self.backward_layer(l, layer, &trace, delta, bsz, &mut grad);
            trace.acts.pop();
        }
        if lambda != 0.0 {
            let two_lambda = T::lit(2.0 * lambda);
            for (g, &p) in grad.iter_mut().zip(&self.params) {
                *g += two_lambda * p;
            }
        }
        Ok((loss, grad))
    }

    fn check_labels(&self, batch: &[T], labels: &[usize]) -> Result<usize> {
        let bsz = self.batch_size(batch)?;
        if labels.len() != bsz {
            return Err(Error::Dimension { expected: bsz, got: labels.len() });
        }
        if let Some(&label) = labels.iter().find(|&&y| y >= self.spec.n_classes) {
            return Err(Error::Label { label, n_classes: self.spec.n_classes });
        }
        Ok(bsz)
    }

    fn penalty(&self, lambda: f64) -> f64 {
        if lambda == 0.0 {
            return 0.0;
        }
        lambda * self.params.iter().map(|p| p.as_f64() * p.as_f64()).sum::<f64>()
    }

    fn run(&self, input: &[T], bsz: usize, dropout: DropoutMode, keep: bool) -> Result<Trace<T>> {
        let n_layers = self.layers.len();
        let mut trace = Trace {
            acts: Vec::with_capacity(n_layers + 1),
            cols: vec![Vec::new(); n_layers],
            argmax: vec![Vec::new(); n_layers],
            masks: vec![Vec::new(); n_layers],
        };
        let mut rng = match dropout {
            DropoutMode::Seeded(seed) => Some(Prng::new(seed)),
            DropoutMode::Off => None,
        };
        let mut x = input.to_vec();
        let p = &self.params;
        for (l, layer) in self.layers.iter().enumerate() {
            let out = match *layer {
                Layer::Conv { g, w_off, b_off } => {
                    let (kdim, span) = (g.kdim(), bsz * g.pix());
                    // cols: (in_c·kh·kw) × (batch·pixels), so one product covers the batch
                    let mut cols = vec![T::zero(); kdim * span];
                    for b in 0..bsz {
                        im2col(&x[b * g.in_len()..(b + 1) * g.in_len()], &g, &mut cols, span, b * g.pix());
                    }
                    let mut y = vec![T::zero(); g.out_c * span];
                    gemm(g.out_c, kdim, span, &p[w_off..b_off], false, &cols, false, T::zero(), &mut y);
                    let mut out = vec![T::zero(); bsz * g.out_len()];
                    for o in 0..g.out_c {
                        let bias = p[b_off + o];
                        for b in 0..bsz {
                            let src = &y[o * span + b * g.pix()..o * span + (b + 1) * g.pix()];
                            let dst = &mut out[b * g.out_len() + o * g.pix()..b * g.out_len() + (o + 1) * g.pix()];
                            for (d, &v) in dst.iter_mut().zip(src) {
                                *d = v + bias;
                            }
                        }
                    }
                    if keep {
                        trace.cols[l] = cols;
                    }
                    out
                }
                Layer::Pool { c, in_h, in_w } => {
                    let (oh, ow) = (in_h / 2, in_w / 2);
                    let (in_len, out_len) = (c * in_h * in_w, c * oh * ow);
                    let mut out = vec![T::zero(); bsz * out_len];
                    let mut arg = vec![0u32; if keep { bsz * out_len } else { 0 }];
                    for b in 0..bsz {
                        let xb = &x[b * in_len..(b + 1) * in_len];
                        for ch in 0..c {
                            for oy in 0..oh {
                                for ox in 0..ow {
                                    let base = ch * in_h * in_w + 2 * oy * in_w + 2 * ox;
                                    let mut best = base;
                                    for cand in [base + 1, base + in_w, base + in_w + 1] {
                                        if xb[cand] > xb[best] {
                                            best = cand;
                                        }
                                    }
                                    let o = b * out_len + (ch * oh + oy) * ow + ox;
                                    out[o] = xb[best];
                                    if keep {
                                        arg[o] = best as u32;
                                    }
                                }
                            }
                        }
                    }
                    trace.argmax[l] = arg;
                    out
                }
                Layer::Dense { n_in, n_out, w_off, b_off } => {
                    let mut out = vec![T::zero(); bsz * n_out];
                    for row in out.chunks_exact_mut(n_out) {
                        row.copy_from_slice(&p[b_off..b_off + n_out]);
                    }
                    gemm(bsz, n_in, n_out, &x, false, &p[w_off..b_off], false, T::one(), &mut out);
                    out
                }
                Layer::Relu => {
                    let mut out = x.clone();
                    out.iter_mut().for_each(|v| {
                        if *v < T::zero() {
                            *v = T::zero()
                        }
                    });
                    out
                }
                Layer::Dropout { rate } => match rng.as_mut() {
                    None => x.clone(),
                    Some(rng) => {
                        let keep_scale = T::lit(1.0 / (1.0 - rate));
                        let mask: Vec<T> = (0..x.len()).map(|_| if rng.bernoulli(rate) { T::zero() } else { keep_scale }).collect();
                        let out = x.iter().zip(&mask).map(|(&v, &m)| v * m).collect();
                        if keep {
                            trace.masks[l] = mask;
                        }
                        out
                    }
                },
            };
            if keep {
                trace.acts.push(std::mem::replace(&mut x, out));
            } else {
                x = out;
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("forward pass"));
        }
        trace.acts.push(x);
        Ok(trace)
    }

    /// Accumulates parameter gradients of layer `l` and returns the gradient
    /// with respect to its input.
    fn backward_layer(&self, l: usize, layer: &Layer, trace: &Trace<T>, delta: Vec<T>, bsz: usize, grad: &mut [T]) -> Vec<T> {
        let x = &trace.acts[l];
        let p = &self.params;
        match *layer {
            Layer::Conv { g, w_off, b_off } => {
                let (kdim, pix, span) = (g.kdim(), g.pix(), bsz * g.pix());
                let cols = &trace.cols[l];
                // delta regrouped as out_c × (batch·pixels)
                let mut d_cm = vec![T::zero(); g.out_c * span];
                for b in 0..bsz {
                    for o in 0..g.out_c {
                        let src = &delta[b * g.out_len() + o * pix..b * g.out_len() + (o + 1) * pix];
                        d_cm[o * span + b * pix..o * span + (b + 1) * pix].copy_from_slice(src);
                    }
                }
                for o in 0..g.out_c {
                    grad[b_off + o] += d_cm[o * span..(o + 1) * span].iter().copied().sum::<T>();
                }
                // dWᵀ = cols · d_cmᵀ keeps the long batch·pixels axis contiguous
                let mut dwt = vec![T::zero(); kdim * g.out_c];
                gemm(kdim, span, g.out_c, cols, false, &d_cm, true, T::zero(), &mut dwt);
                for (r, row) in dwt.chunks_exact(g.out_c).enumerate() {
                    for (o, &v) in row.iter().enumerate() {
                        grad[w_off + o * kdim + r] += v;
                    }
                }
                if l == 0 {
                    return Vec::new();
                }
                let mut dcols = vec![T::zero(); kdim * span];
                gemm(kdim, g.out_c, span, &p[w_off..b_off], true, &d_cm, false, T::zero(), &mut dcols);
                let mut dx = vec![T::zero(); x.len()];
                for b in 0..bsz {
                    col2im(&dcols, &g, span, b * pix, &mut dx[b * g.in_len()..(b + 1) * g.in_len()]);
                }
                dx
            }
            Layer::Pool { c, in_h, in_w } => {
                let (in_len, out_len) = (c * in_h * in_w, c * (in_h / 2) * (in_w / 2));
                let mut dx = vec![T::zero(); x.len()];
                for (o, (&d, &a)) in delta.iter().zip(&trace.argmax[l]).enumerate() {
                    dx[(o / out_len) * in_len + a as usize] += d;
                }
                dx
            }
            Layer::Dense { n_in, n_out, w_off, b_off } => {
                gemm(n_in, bsz, n_out, x, true, &delta, false, T::one(), &mut grad[w_off..b_off]);
                for row in delta.chunks_exact(n_out) {
                    for (g, &d) in grad[b_off..b_off + n_out].iter_mut().zip(row) {
                        *g += d;
                    }
                }
                if l == 0 {
                    return Vec::new();
                }
                let mut dx = vec![T::zero(); bsz * n_in];
                gemm(bsz, n_out, n_in, &delta, false, &p[w_off..b_off], true, T::zero(), &mut dx);
                dx
            }
            Layer::Relu => delta.into_iter().zip(x).map(|(d, &v)| if v > T::zero() { d } else { T::zero() }).collect(),
            Layer::Dropout { .. } => {
                let mask = &trace.masks[l];
                if mask.is_empty() {
                    delta
                } else {
                    delta.into_iter().zip(mask).map(|(d, &m)| d * m).collect()
                }
            }
        }
    }
}

fn argmax<T: Real>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

/// In-place log-sum-exp stabilised softmax over rows of width `c`.
pub(crate) fn softmax_rows<T: Real>(v: &mut [T], c: usize) {
    for row in v.chunks_exact_mut(c) {
        let m = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut s = T::zero();
        for x in row.iter_mut() {
            *x = (*x - m).exp();
            s += *x;
        }
        let inv = T::one() / s;
        row.iter_mut().for_each(|x| *x *= inv);
    }
}

fn cross_entropy<T: Real>(probs: &[T], labels: &[usize], c: usize) -> f64 {
    let total: f64 = probs.chunks_exact(c).zip(labels).map(|(row, &y)| -row[y].as_f64().max(LOG_FLOOR).ln()).sum();
    total / labels.len() as f64
}

/// Writes the unfolded patches of one sample into columns
/// `offset..offset + pix` of `cols`, whose rows have length `stride`.
fn im2col<T: Real>(x: &[T], g: &ConvGeom, cols: &mut [T], stride: usize, offset: usize) {
    let (h, w, ow) = (g.in_h, g.in_w, g.out_w);
    for ci in 0..g.in_c {
        let plane = &x[ci * h * w..(ci + 1) * h * w];
        for ki in 0..g.kh {
            for kj in 0..g.kw {
                let row = (ci * g.kh + ki) * g.kw + kj;
                let dst = &mut cols[row * stride + offset..row * stride + offset + g.pix()];
                let (lo, hi) = valid_span(kj, g.pad_w, w, ow);
                for (oy, drow) in dst.chunks_exact_mut(ow).enumerate() {
                    let iy = (oy + ki).wrapping_sub(g.pad_h);
                    if iy >= h || lo >= hi {
                        drow.fill(T::zero());
                        continue;
                    }
                    drow[..lo].fill(T::zero());
                    drow[hi..].fill(T::zero());
                    let start = iy * w + lo + kj - g.pad_w;
                    drow[lo..hi].copy_from_slice(&plane[start..start + hi - lo]);
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: accumulates columns back onto the input grid.
fn col2im<T: Real>(cols: &[T], g: &ConvGeom, stride: usize, offset: usize, dx: &mut [T]) {
    let (h, w, ow) = (g.in_h, g.in_w, g.out_w);
    for ci in 0..g.in_c {
        let plane = &mut dx[ci * h * w..(ci + 1) * h * w];
        for ki in 0..g.kh {
            for kj in 0..g.kw {
                let row = (ci * g.kh + ki) * g.kw + kj;
                let src = &cols[row * stride + offset..row * stride + offset + g.pix()];
                let (lo, hi) = valid_span(kj, g.pad_w, w, ow);
                if lo >= hi {
                    continue;
                }
                for (oy, srow) in src.chunks_exact(ow).enumerate() {
                    let iy = (oy + ki).wrapping_sub(g.pad_h);
                    if iy >= h {
                        continue;
                    }
                    let start = iy * w + lo + kj - g.pad_w;
                    for (d, &v) in plane[start..start + hi - lo].iter_mut().zip(&srow[lo..hi]) {
                        *d += v;
                    }
                }
            }
        }
    }
}

/// Output columns `lo..hi` whose input column `ox + kj − pad` lies inside `0..w`.
fn valid_span(kj: usize, pad: usize, w: usize, ow: usize) -> (usize, usize) {
    let lo = pad.saturating_sub(kj).min(ow);
    let hi = (w + pad).saturating_sub(kj).min(ow);
    (lo, hi.max(lo))
}
