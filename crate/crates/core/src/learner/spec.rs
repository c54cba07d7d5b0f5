use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub out_channels: usize,
    pub kernel_h: usize,
    pub kernel_w: usize,
    /// Pad with `(kernel - 1) / 2` zeros on each side (size-preserving for odd kernels).
    pub zero_pad: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Architecture {
    /// Dense layers of the given widths; the last width is the class count.
    /// `dropout_rates` (empty or one per hidden layer) follow each hidden ReLU.
    Mlp {
        layer_sizes: Vec<usize>,
        #[serde(default)]
        dropout_rates: Vec<f64>,
    },
    /// Convolution + ReLU blocks, each optionally followed by 2×2 max pooling,
    /// then dense layers as in `Mlp`.
    Cnn {
        conv_layers: Vec<ConvSpec>,
        pool_after: Vec<bool>,
        dense_sizes: Vec<usize>,
        #[serde(default)]
        dropout_rates: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub architecture: Architecture,
    /// `(channels, height, width)`; flat inputs use `(d, 1, 1)`.
    pub input_shape: (usize, usize, usize),
    pub n_classes: usize,
}

impl ModelSpec {
    /// Fully connected ReLU network `d → hidden… → n_classes`.
    pub fn mlp(input_dim: usize, hidden: &[usize], n_classes: usize) -> Self {
        let mut layer_sizes = hidden.to_vec();
        layer_sizes.push(n_classes);
        Self {
            architecture: Architecture::Mlp { layer_sizes, dropout_rates: Vec::new() },
            input_shape: (input_dim, 1, 1),
            n_classes,
        }
    }

    /// Two 5×5 zero-padded convolutions with 16 and 32 channels, each followed
    /// by 2×2 max pooling, then dense layers of 128, 64 and `n_classes` units.
    pub fn standard_cnn(input_shape: (usize, usize, usize), n_classes: usize) -> Self {
        let conv = |out_channels| ConvSpec { out_channels, kernel_h: 5, kernel_w: 5, zero_pad: true };
        Self {
            architecture: Architecture::Cnn {
                conv_layers: vec![conv(16), conv(32)],
                pool_after: vec![true, true],
                dense_sizes: vec![128, 64, n_classes],
                dropout_rates: Vec::new(),
            },
            input_shape,
            n_classes,
        }
    }

    pub fn with_dropout(mut self, rates: Vec<f64>) -> Self {
        match &mut self.architecture {
            Architecture::Mlp { dropout_rates, .. } | Architecture::Cnn { dropout_rates, .. } => *dropout_rates = rates,
        }
        self
    }

    pub fn input_dim(&self) -> usize {
        let (c, h, w) = self.input_shape;
        c * h * w
    }

    pub fn is_cnn(&self) -> bool {
        matches!(self.architecture, Architecture::Cnn { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// λ in the `λ‖θ‖²` penalty.
    #[serde(default)]
    pub weight_decay: f64,
    /// Replaced by a stream of the master seed when run by the simulator.
    #[serde(default)]
    pub seed: u64,
}

impl TrainConfig {
    pub fn mlp_default(epochs: usize, seed: u64) -> Self {
        Self { learning_rate: 0.01, batch_size: 32, epochs, weight_decay: 0.0, seed }
    }

    pub fn cnn_default(epochs: usize, seed: u64) -> Self {
        Self { learning_rate: 0.005, batch_size: 32, epochs, weight_decay: 0.0, seed }
    }

    pub fn validate(&self, n_train: usize) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning_rate", format!("must be positive, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 || self.batch_size > n_train {
            return Err(Error::config(
                "batch_size",
                format!("must lie in 1..={n_train} (training-set size), got {}", self.batch_size),
            ));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::config("weight_decay", "must be non-negative"));
        }
        Ok(())
    }
}

/// Shape bookkeeping of a stride-1 convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct ConvGeom {
    pub in_c: usize,
    pub out_c: usize,
    pub kh: usize,
    pub kw: usize,
    pub pad_h: usize,
    pub pad_w: usize,
    pub in_h: usize,
    pub in_w: usize,
    pub out_h: usize,
    pub out_w: usize,
}

impl ConvGeom {
    /// Rows of the unfolded input: `in_c · kh · kw`.
    pub fn kdim(&self) -> usize {
        self.in_c * self.kh * self.kw
    }

    /// Output pixels per channel.
    pub fn pix(&self) -> usize {
        self.out_h * self.out_w
    }

    pub fn in_len(&self) -> usize {
        self.in_c * self.in_h * self.in_w
    }

    pub fn out_len(&self) -> usize {
        self.out_c * self.pix()
    }
}

/// One compiled layer; offsets index the flat parameter vector. Convolution
/// weights are stored `out_c × (in_c·kh·kw)`, dense weights `n_in × n_out`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Layer {
    Conv { g: ConvGeom, w_off: usize, b_off: usize },
    Pool { c: usize, in_h: usize, in_w: usize },
    Dense { n_in: usize, n_out: usize, w_off: usize, b_off: usize },
    Relu,
    Dropout { rate: f64 },
}

impl Layer {
    /// Fan-in of a parametrised layer.
    pub(crate) fn fan_in(&self) -> Option<usize> {
        match *self {
            Layer::Conv { g, .. } => Some(g.kdim()),
            Layer::Dense { n_in, .. } => Some(n_in),
            _ => None,
        }
    }
}

/// Turns a spec into a layer list, checking shapes; returns the layers and
/// the total parameter count.
pub(crate) fn compile(spec: &ModelSpec) -> Result<(Vec<Layer>, usize)> {
    let (mut c, mut h, mut w) = spec.input_shape;
    if c * h * w == 0 {
        return Err(Error::config("input_shape", "all dimensions must be positive"));
    }
    if spec.n_classes < 2 {
        return Err(Error::config("n_classes", "at least two classes are required"));
    }
    let mut layers = Vec::new();
    let mut n_params = 0;
    let (dense, dropout) = match &spec.architecture {
        Architecture::Mlp { layer_sizes, dropout_rates } => (layer_sizes, dropout_rates),
        Architecture::Cnn { conv_layers, pool_after, dense_sizes, dropout_rates } => {
            if pool_after.len() != conv_layers.len() {
                return Err(Error::config("pool_after", "needs one entry per convolution layer"));
            }
            for (conv, &pool) in conv_layers.iter().zip(pool_after) {
                if conv.out_channels == 0 || conv.kernel_h == 0 || conv.kernel_w == 0 {
                    return Err(Error::config("conv_layers", "channels and kernel sizes must be positive"));
                }
                let (pad_h, pad_w) = if conv.zero_pad { ((conv.kernel_h - 1) / 2, (conv.kernel_w - 1) / 2) } else { (0, 0) };
                if conv.kernel_h > h + 2 * pad_h || conv.kernel_w > w + 2 * pad_w {
                    return Err(Error::config("conv_layers", format!("kernel {}x{} exceeds input {h}x{w}", conv.kernel_h, conv.kernel_w)));
                }
                let (out_h, out_w) = (h + 2 * pad_h - conv.kernel_h + 1, w + 2 * pad_w - conv.kernel_w + 1);
                let w_off = n_params;
                let b_off = w_off + conv.out_channels * c * conv.kernel_h * conv.kernel_w;
                n_params = b_off + conv.out_channels;
                let g = ConvGeom {
                    in_c: c,
                    out_c: conv.out_channels,
                    kh: conv.kernel_h,
                    kw: conv.kernel_w,
                    pad_h,
                    pad_w,
                    in_h: h,
                    in_w: w,
                    out_h,
                    out_w,
                };
                layers.push(Layer::Conv { g, w_off, b_off });
                layers.push(Layer::Relu);
                c = conv.out_channels;
                h = out_h;
                w = out_w;
                if pool {
                    if h < 2 || w < 2 {
                        return Err(Error::config("pool_after", format!("cannot pool a {h}x{w} map")));
                    }
                    layers.push(Layer::Pool { c, in_h: h, in_w: w });
                    h /= 2;
                    w /= 2;
                }
            }
            (dense_sizes, dropout_rates)
        }
    };
    if dense.last() != Some(&spec.n_classes) {
        return Err(Error::config("layer_sizes", format!("last layer must have n_classes = {} units", spec.n_classes)));
    }
    if !dropout.is_empty() && dropout.len() != dense.len() - 1 {
        return Err(Error::config("dropout_rates", format!("expected {} rates (one per hidden dense layer)", dense.len() - 1)));
    }
    if dropout.iter().any(|r| !(0.0..1.0).contains(r)) {
        return Err(Error::config("dropout_rates", "rates must lie in [0, 1)"));
    }
    let mut n_in = c * h * w;
    for (i, &n_out) in dense.iter().enumerate() {
        if n_out == 0 {
            return Err(Error::config("layer_sizes", "widths must be positive"));
        }
        let w_off = n_params;
        let b_off = w_off + n_in * n_out;
        n_params = b_off + n_out;
        layers.push(Layer::Dense { n_in, n_out, w_off, b_off });
        if i + 1 < dense.len() {
            layers.push(Layer::Relu);
            if let Some(&rate) = dropout.get(i) {
                if rate > 0.0 {
                    layers.push(Layer::Dropout { rate });
                }
            }
        }
        n_in = n_out;
    }
    Ok((layers, n_params))
}
