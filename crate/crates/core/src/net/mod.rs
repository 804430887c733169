//! Policy/value network over flat parameter vectors.
//!
//! Architectures are described as small graphs of batched layers
//! ([`layers`]); parameters live in one contiguous `Vec<S>` addressed
//! through a [`ParamLayout`], which makes optimizer state, checkpointing and
//! gradient checking trivial. The policy head emits the mean and log
//! standard deviation of a scalar Gaussian action per agent; the value head
//! emits a scalar state-value estimate.

pub mod layers;

use ndarray::{concatenate, s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::obs::ObsConfig;
use crate::scalar::Scalar;
use layers::{
    conv_backward, conv_forward, dense_backward, dense_forward, im2col_circular,
    layer_norm_backward, layer_norm_forward, tanh_backward, tanh_forward,
};

#[derive(Debug, Error, PartialEq)]
pub enum NetError {
    #[error("convolution kernel {0} must be odd and no larger than the ray count {1}")]
    BadKernel(usize, usize),
    #[error("layer width of zero in {0}")]
    ZeroWidth(&'static str),
    #[error("observation layout produces no features")]
    EmptyObservation,
    #[error("parameter vector has length {got}, network needs {want}")]
    ParamLength { got: usize, want: usize },
    #[error("observation rows have length {got}, network expects {want}")]
    ObsLength { got: usize, want: usize },
}

/// Network architecture family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NetVariant {
    /// Circular convolution over the ray ring plus a dense self branch,
    /// merged into a shared trunk with two heads.
    Conv,
    /// [`NetVariant::Conv`] with layer normalization after each hidden layer.
    ConvLn,
    /// Dense map branch instead of the convolution, two heads.
    DenseTwoHead,
    DenseTwoHeadLn,
    /// Single dense trunk over the whole observation, two heads.
    DenseOneHead,
    DenseOneHeadLn,
    /// Two fully separate dense stacks, one per head.
    Baseline,
}

impl NetVariant {
    pub const ALL: [NetVariant; 7] = [
        NetVariant::Conv,
        NetVariant::ConvLn,
        NetVariant::DenseTwoHead,
        NetVariant::DenseTwoHeadLn,
        NetVariant::DenseOneHead,
        NetVariant::DenseOneHeadLn,
        NetVariant::Baseline,
    ];

    fn layer_norm(self) -> bool {
        matches!(
            self,
            NetVariant::ConvLn | NetVariant::DenseTwoHeadLn | NetVariant::DenseOneHeadLn
        )
    }
}

/// Architecture hyperparameters. Widths only apply to the variants that use
/// them; the observation layout fixes the input sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, bound = "S: Scalar")]
pub struct NetConfig<S> {
    pub variant: NetVariant,
    /// Convolution filter count.
    pub filters: usize,
    /// Convolution kernel width (odd).
    pub kernel: usize,
    /// Self-branch embedding width.
    pub self_embed: usize,
    /// Map-branch embedding width for the dense two-head variants.
    pub map_embed: usize,
    /// Shared trunk width for the two-head variants.
    pub shared: usize,
    /// Hidden widths of the one-head trunk.
    pub trunk_widths: Vec<usize>,
    /// Hidden widths of each baseline stack.
    pub head_widths: Vec<usize>,
    /// Initial bias of the log standard deviation output. Small initial
    /// noise matters more than it may seem: labels are wide and flat, so
    /// near the canonical top-left position a small angle change sweeps the
    /// whole left edge of the slider rectangle. With too much initial jitter
    /// an untrained policy already separates most conflicting pairs by
    /// accident, which both masks training progress and makes the untrained
    /// baseline look artificially strong.
    pub log_sigma_init: S,
    pub layer_norm_eps: S,
}

impl<S: Scalar> Default for NetConfig<S> {
    fn default() -> Self {
        Self {
            variant: NetVariant::Conv,
            filters: 32,
            kernel: 5,
            self_embed: 64,
            map_embed: 1024,
            shared: 384,
            trunk_widths: vec![512, 384],
            head_widths: vec![256, 256],
            log_sigma_init: S::of(-3.5),
            layer_norm_eps: S::of(1e-5),
        }
    }
}

/// One named parameter tensor inside the flat vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Mapping from named tensors to offsets in one flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamLayout {
    pub tensors: Vec<TensorSpec>,
    offsets: Vec<usize>,
    total: usize,
}

impl ParamLayout {
    fn new() -> Self {
        Self { tensors: Vec::new(), offsets: Vec::new(), total: 0 }
    }

    fn push(&mut self, name: String, shape: Vec<usize>) -> usize {
        let len: usize = shape.iter().product();
        self.tensors.push(TensorSpec { name, shape });
        self.offsets.push(self.total);
        self.total += len;
        self.tensors.len() - 1
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn offset(&self, idx: usize) -> usize {
        self.offsets[idx]
    }

    pub fn slice<'a, S>(&self, params: &'a [S], idx: usize) -> &'a [S] {
        let o = self.offsets[idx];
        &params[o..o + self.tensors[idx].len()]
    }

    /// Zero-copy matrix view of a rank-2 tensor.
    pub fn view2<'a, S>(&self, params: &'a [S], idx: usize) -> ArrayView2<'a, S> {
        let t = &self.tensors[idx];
        assert_eq!(t.shape.len(), 2, "tensor {} is not rank 2", t.name);
        ArrayView2::from_shape((t.shape[0], t.shape[1]), self.slice(params, idx))
            .expect("tensor view")
    }

    pub fn view1<'a, S>(&self, params: &'a [S], idx: usize) -> ArrayView1<'a, S> {
        let t = &self.tensors[idx];
        assert_eq!(t.shape.len(), 1, "tensor {} is not rank 1", t.name);
        ArrayView1::from_shape(t.shape[0], self.slice(params, idx)).expect("tensor view")
    }
}

/// One step in a layer chain; parameter tensors referenced by layout index.
#[derive(Debug, Clone)]
enum LayerOp {
    Dense { w: usize, b: usize },
    Conv { w: usize, b: usize, rays: usize, channels: usize, kernel: usize },
    Norm { gamma: usize, beta: usize },
    Tanh,
}

/// Extra forward-pass state some ops need for their backward pass.
enum OpCache<S> {
    None,
    Conv { cols: Array2<S> },
    Norm { xhat: Array2<S>, inv_std: Array1<S> },
}

/// Activations of one layer chain: `acts[0]` is the chain input and
/// `acts[i + 1]` the output of op `i`.
struct ChainPass<S> {
    acts: Vec<Array2<S>>,
    caches: Vec<OpCache<S>>,
}

impl<S: Scalar> ChainPass<S> {
    fn output(&self) -> &Array2<S> {
        self.acts.last().expect("chain has an input")
    }
}

/// Everything the backward pass needs, plus the network outputs.
pub struct ForwardPass<S> {
    m: Option<ChainPass<S>>,
    s: Option<ChainPass<S>>,
    trunk: ChainPass<S>,
    policy: ChainPass<S>,
    value: ChainPass<S>,
    /// Gaussian mean per row.
    pub mu: Array1<S>,
    /// Gaussian log standard deviation per row.
    pub log_sigma: Array1<S>,
    /// State-value estimate per row.
    pub value_out: Array1<S>,
}

/// A policy/value network: architecture graph plus parameter layout. Holds
/// no parameters itself — they travel separately as a flat `Vec<S>`.
#[derive(Debug, Clone)]
pub struct PolicyNet<S> {
    pub config: NetConfig<S>,
    pub n_rays: usize,
    pub map_width: usize,
    pub self_len: usize,
    layout: ParamLayout,
    m_ops: Option<Vec<LayerOp>>,
    s_ops: Option<Vec<LayerOp>>,
    trunk_ops: Vec<LayerOp>,
    policy_ops: Vec<LayerOp>,
    value_ops: Vec<LayerOp>,
    m_dim: usize,
    s_dim: usize,
    /// Layout index of the final policy-head weight (small-gain init).
    policy_out_w: usize,
    policy_out_b: usize,
}

/// Appends dense → (norm) → tanh to `ops`.
fn hidden_dense(
    layout: &mut ParamLayout,
    ops: &mut Vec<LayerOp>,
    name: &str,
    inp: usize,
    out: usize,
    norm: bool,
) {
    let w = layout.push(format!("{name}/w"), vec![out, inp]);
    let b = layout.push(format!("{name}/b"), vec![out]);
    ops.push(LayerOp::Dense { w, b });
    if norm {
        let gamma = layout.push(format!("{name}/gamma"), vec![out]);
        let beta = layout.push(format!("{name}/beta"), vec![out]);
        ops.push(LayerOp::Norm { gamma, beta });
    }
    ops.push(LayerOp::Tanh);
}

impl<S: Scalar> PolicyNet<S> {
    pub fn new(config: NetConfig<S>, obs: &ObsConfig<S>) -> Result<Self, NetError> {
        let n_rays = obs.n_rays;
        let map_width = obs.map_width();
        let self_len = obs.self_len();
        if n_rays * map_width + self_len == 0 {
            return Err(NetError::EmptyObservation);
        }
        let norm = config.variant.layer_norm();
        let mut layout = ParamLayout::new();
        let mut m_ops = None;
        let mut s_ops = None;
        let mut trunk_ops = Vec::new();
        let mut policy_ops = Vec::new();
        let mut value_ops = Vec::new();
        let mut m_dim = 0;
        let mut s_dim = 0;

        let two_head_branches = matches!(
            config.variant,
            NetVariant::Conv | NetVariant::ConvLn | NetVariant::DenseTwoHead | NetVariant::DenseTwoHeadLn
        );
        if two_head_branches {
            if map_width > 0 {
                let mut ops = Vec::new();
                match config.variant {
                    NetVariant::Conv | NetVariant::ConvLn => {
                        if config.kernel % 2 == 0 || config.kernel > n_rays {
                            return Err(NetError::BadKernel(config.kernel, n_rays));
                        }
                        if config.filters == 0 {
                            return Err(NetError::ZeroWidth("filters"));
                        }
                        let w = layout
                            .push("map/conv/w".into(), vec![config.filters, config.kernel * map_width]);
                        let b = layout.push("map/conv/b".into(), vec![config.filters]);
                        ops.push(LayerOp::Conv {
                            w,
                            b,
                            rays: n_rays,
                            channels: map_width,
                            kernel: config.kernel,
                        });
                        m_dim = n_rays * config.filters;
                    }
                    _ => {
                        if config.map_embed == 0 {
                            return Err(NetError::ZeroWidth("map_embed"));
                        }
                        let w = layout
                            .push("map/dense/w".into(), vec![config.map_embed, n_rays * map_width]);
                        let b = layout.push("map/dense/b".into(), vec![config.map_embed]);
                        ops.push(LayerOp::Dense { w, b });
                        m_dim = config.map_embed;
                    }
                }
                if norm {
                    let gamma = layout.push("map/gamma".into(), vec![m_dim]);
                    let beta = layout.push("map/beta".into(), vec![m_dim]);
                    ops.push(LayerOp::Norm { gamma, beta });
                }
                ops.push(LayerOp::Tanh);
                m_ops = Some(ops);
            }
            if self_len > 0 {
                if config.self_embed == 0 {
                    return Err(NetError::ZeroWidth("self_embed"));
                }
                let mut ops = Vec::new();
                hidden_dense(&mut layout, &mut ops, "self", self_len, config.self_embed, norm);
                s_dim = config.self_embed;
                s_ops = Some(ops);
            }
            if config.shared == 0 {
                return Err(NetError::ZeroWidth("shared"));
            }
            hidden_dense(&mut layout, &mut trunk_ops, "trunk", m_dim + s_dim, config.shared, norm);
        } else if matches!(config.variant, NetVariant::DenseOneHead | NetVariant::DenseOneHeadLn) {
            if config.trunk_widths.is_empty() || config.trunk_widths.contains(&0) {
                return Err(NetError::ZeroWidth("trunk_widths"));
            }
            let mut inp = n_rays * map_width + self_len;
            for (i, &width) in config.trunk_widths.iter().enumerate() {
                hidden_dense(&mut layout, &mut trunk_ops, &format!("trunk/{i}"), inp, width, norm);
                inp = width;
            }
        } else {
            // Baseline: trunk is the identity, each head gets its own stack.
            if config.head_widths.is_empty() || config.head_widths.contains(&0) {
                return Err(NetError::ZeroWidth("head_widths"));
            }
            let obs_len = n_rays * map_width + self_len;
            for (head, ops) in [("policy", &mut policy_ops), ("value", &mut value_ops)] {
                let mut inp = obs_len;
                for (i, &width) in config.head_widths.iter().enumerate() {
                    hidden_dense(&mut layout, ops, &format!("{head}/{i}"), inp, width, false);
                    inp = width;
                }
            }
        }

        // Output layers (plain dense, no activation).
        let head_in = |ops: &Vec<LayerOp>, fallback: usize, layout: &ParamLayout| -> usize {
            for op in ops.iter().rev() {
                if let LayerOp::Dense { w, .. } = op {
                    return layout.tensors[*w].shape[0];
                }
            }
            fallback
        };
        let obs_len = n_rays * map_width + self_len;
        let trunk_out = head_in(&trunk_ops, obs_len, &layout);
        let policy_in = head_in(&policy_ops, trunk_out, &layout);
        let value_in = head_in(&value_ops, trunk_out, &layout);
        let policy_out_w = layout.push("policy/out/w".into(), vec![2, policy_in]);
        let policy_out_b = layout.push("policy/out/b".into(), vec![2]);
        policy_ops.push(LayerOp::Dense { w: policy_out_w, b: policy_out_b });
        let w = layout.push("value/out/w".into(), vec![1, value_in]);
        let b = layout.push("value/out/b".into(), vec![1]);
        value_ops.push(LayerOp::Dense { w, b });

        Ok(Self {
            config,
            n_rays,
            map_width,
            self_len,
            layout,
            m_ops,
            s_ops,
            trunk_ops,
            policy_ops,
            value_ops,
            m_dim,
            s_dim,
            policy_out_w,
            policy_out_b,
        })
    }

    pub fn obs_len(&self) -> usize {
        self.n_rays * self.map_width + self.self_len
    }

    pub fn param_count(&self) -> usize {
        self.layout.total()
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    /// Orthogonally initialized parameter vector: unit gain everywhere
    /// except the policy output (gain 0.01), zero biases except the log
    /// standard deviation bias, unit norm scales.
    pub fn init_params<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<S> {
        let mut params = vec![S::zero(); self.layout.total()];
        let chains: Vec<&Vec<LayerOp>> = self
            .m_ops
            .iter()
            .chain(self.s_ops.iter())
            .chain([&self.trunk_ops, &self.policy_ops, &self.value_ops])
            .collect();
        for ops in chains {
            for op in ops {
                match op {
                    LayerOp::Dense { w, .. } | LayerOp::Conv { w, .. } => {
                        let shape = self.layout.tensors[*w].shape.clone();
                        let gain =
                            if *w == self.policy_out_w { S::of(0.01) } else { S::one() };
                        let o = self.layout.offset(*w);
                        let values = orthogonal(shape[0], shape[1], gain, rng);
                        params[o..o + values.len()].copy_from_slice(&values);
                    }
                    LayerOp::Norm { gamma, .. } => {
                        let o = self.layout.offset(*gamma);
                        let len = self.layout.tensors[*gamma].len();
                        for v in &mut params[o..o + len] {
                            *v = S::one();
                        }
                    }
                    LayerOp::Tanh => {}
                }
            }
        }
        let b = self.layout.offset(self.policy_out_b);
        params[b + 1] = self.config.log_sigma_init;
        params
    }

    fn run_chain(&self, ops: &[LayerOp], params: &[S], input: Array2<S>) -> ChainPass<S> {
        let mut acts = Vec::with_capacity(ops.len() + 1);
        let mut caches = Vec::with_capacity(ops.len());
        acts.push(input);
        for op in ops {
            let x = acts.last().expect("chain input");
            let (y, cache) = match op {
                LayerOp::Dense { w, b } => (
                    dense_forward(x, self.layout.view2(params, *w), self.layout.view1(params, *b)),
                    OpCache::None,
                ),
                LayerOp::Conv { w, b, rays, channels, kernel } => {
                    let cols = im2col_circular(x, *rays, *channels, *kernel);
                    let y = conv_forward(
                        &cols,
                        self.layout.view2(params, *w),
                        self.layout.view1(params, *b),
                        x.nrows(),
                        *rays,
                    );
                    (y, OpCache::Conv { cols })
                }
                LayerOp::Norm { gamma, beta } => {
                    let (y, xhat, inv_std) = layer_norm_forward(
                        x,
                        self.layout.view1(params, *gamma),
                        self.layout.view1(params, *beta),
                        self.config.layer_norm_eps,
                    );
                    (y, OpCache::Norm { xhat, inv_std })
                }
                LayerOp::Tanh => (tanh_forward(x), OpCache::None),
            };
            acts.push(y);
            caches.push(cache);
        }
        ChainPass { acts, caches }
    }

    /// Batched forward pass. Rows of `obs` are independent observations.
    pub fn forward(&self, params: &[S], obs: ArrayView2<S>) -> Result<ForwardPass<S>, NetError> {
        if params.len() != self.layout.total() {
            return Err(NetError::ParamLength { got: params.len(), want: self.layout.total() });
        }
        if obs.ncols() != self.obs_len() {
            return Err(NetError::ObsLength { got: obs.ncols(), want: self.obs_len() });
        }
        let map_len = self.n_rays * self.map_width;
        let m = self
            .m_ops
            .as_ref()
            .map(|ops| self.run_chain(ops, params, obs.slice(s![.., ..map_len]).to_owned()));
        let s_pass = self
            .s_ops
            .as_ref()
            .map(|ops| self.run_chain(ops, params, obs.slice(s![.., map_len..]).to_owned()));
        let trunk_input = match (&m, &s_pass) {
            (Some(m), Some(sp)) => {
                concatenate(Axis(1), &[m.output().view(), sp.output().view()])
                    .expect("branch concat")
            }
            (Some(m), None) => m.output().clone(),
            (None, Some(sp)) => sp.output().clone(),
            (None, None) => obs.to_owned(),
        };
        let trunk = self.run_chain(&self.trunk_ops, params, trunk_input);
        let policy = self.run_chain(&self.policy_ops, params, trunk.output().clone());
        let value = self.run_chain(&self.value_ops, params, trunk.output().clone());
        let pol_out = policy.output();
        let mu = pol_out.column(0).to_owned();
        let log_sigma = pol_out.column(1).to_owned();
        let value_out = value.output().column(0).to_owned();
        Ok(ForwardPass { m, s: s_pass, trunk, policy, value, mu, log_sigma, value_out })
    }

    fn backward_chain(
        &self,
        ops: &[LayerOp],
        params: &[S],
        pass: &ChainPass<S>,
        mut dy: Array2<S>,
        grads: &mut [S],
    ) -> Array2<S> {
        for (i, op) in ops.iter().enumerate().rev() {
            let x = &pass.acts[i];
            let y = &pass.acts[i + 1];
            dy = match op {
                LayerOp::Dense { w, b } => {
                    let (dw, db, dx) = dense_backward(x, self.layout.view2(params, *w), &dy);
                    accumulate(grads, self.layout.offset(*w), dw.iter());
                    accumulate(grads, self.layout.offset(*b), db.iter());
                    dx
                }
                LayerOp::Conv { w, b, rays, channels, kernel } => {
                    let cols = match &pass.caches[i] {
                        OpCache::Conv { cols } => cols,
                        _ => unreachable!("conv cache"),
                    };
                    let (dw, db, dx) = conv_backward(
                        cols,
                        self.layout.view2(params, *w),
                        &dy,
                        *rays,
                        *channels,
                        *kernel,
                    );
                    accumulate(grads, self.layout.offset(*w), dw.iter());
                    accumulate(grads, self.layout.offset(*b), db.iter());
                    dx
                }
                LayerOp::Norm { gamma, beta } => {
                    let (xhat, inv_std) = match &pass.caches[i] {
                        OpCache::Norm { xhat, inv_std } => (xhat, inv_std),
                        _ => unreachable!("norm cache"),
                    };
                    let (dgamma, dbeta, dx) =
                        layer_norm_backward(xhat, inv_std, self.layout.view1(params, *gamma), &dy);
                    accumulate(grads, self.layout.offset(*gamma), dgamma.iter());
                    accumulate(grads, self.layout.offset(*beta), dbeta.iter());
                    dx
                }
                LayerOp::Tanh => tanh_backward(y, &dy),
            };
        }
        dy
    }

    /// Backpropagation from per-row output gradients to a flat parameter
    /// gradient vector (same layout as the parameters).
    pub fn backward(
        &self,
        params: &[S],
        pass: &ForwardPass<S>,
        d_mu: ArrayView1<S>,
        d_log_sigma: ArrayView1<S>,
        d_value: ArrayView1<S>,
    ) -> Vec<S> {
        let batch = pass.mu.len();
        let mut grads = vec![S::zero(); self.layout.total()];
        let mut d_pol = Array2::zeros((batch, 2));
        d_pol.column_mut(0).assign(&d_mu);
        d_pol.column_mut(1).assign(&d_log_sigma);
        let d_trunk_p = self.backward_chain(&self.policy_ops, params, &pass.policy, d_pol, &mut grads);
        let d_val = d_value.to_owned().into_shape((batch, 1)).expect("value grad shape");
        let d_trunk_v = self.backward_chain(&self.value_ops, params, &pass.value, d_val, &mut grads);
        let d_trunk_out = d_trunk_p + d_trunk_v;
        let d_trunk_in =
            self.backward_chain(&self.trunk_ops, params, &pass.trunk, d_trunk_out, &mut grads);
        match (&pass.m, &pass.s) {
            (None, None) => {}
            (m, sp) => {
                debug_assert_eq!(d_trunk_in.ncols(), self.m_dim + self.s_dim);
                let m_dim = self.m_dim;
                if let (Some(m), Some(ops)) = (m, &self.m_ops) {
                    let d = d_trunk_in.slice(s![.., ..m_dim]).to_owned();
                    self.backward_chain(ops, params, m, d, &mut grads);
                }
                if let (Some(sp), Some(ops)) = (sp, &self.s_ops) {
                    let d = d_trunk_in.slice(s![.., m_dim..]).to_owned();
                    self.backward_chain(ops, params, sp, d, &mut grads);
                }
            }
        }
        grads
    }
}

fn accumulate<'a, S: Scalar>(grads: &mut [S], offset: usize, values: impl Iterator<Item = &'a S>) {
    for (i, v) in values.enumerate() {
        grads[offset + i] += *v;
    }
}

/// Orthogonal matrix of shape `(rows, cols)` scaled by `gain`: rows are
/// orthonormal when `rows <= cols`, columns otherwise. Built by modified
/// Gram–Schmidt on Gaussian draws.
pub fn orthogonal<S: Scalar, R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    gain: S,
    rng: &mut R,
) -> Vec<S> {
    let (n, m, transpose) = if rows <= cols { (rows, cols, false) } else { (cols, rows, true) };
    // n vectors of dimension m >= n, orthonormalized in order.
    let mut basis: Vec<Vec<S>> = Vec::with_capacity(n);
    while basis.len() < n {
        let mut v: Vec<S> = (0..m).map(|_| S::std_normal(rng)).collect();
        for q in &basis {
            let dot = v.iter().zip(q.iter()).fold(S::zero(), |a, (&x, &y)| a + x * y);
            for (vi, qi) in v.iter_mut().zip(q.iter()) {
                *vi -= dot * *qi;
            }
        }
        let norm = v.iter().fold(S::zero(), |a, &x| a + x * x).sqrt();
        if norm > S::of(1e-6) {
            for vi in &mut v {
                *vi = *vi / norm * gain;
            }
            basis.push(v);
        }
        // A near-zero residual means the draw was almost dependent; redraw.
    }
    let mut out = vec![S::zero(); rows * cols];
    for (i, q) in basis.iter().enumerate() {
        for (j, &val) in q.iter().enumerate() {
            if transpose {
                out[j * cols + i] = val;
            } else {
                out[i * cols + j] = val;
            }
        }
    }
    out
}

const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

/// Draws a raw (unclipped) Gaussian action.
pub fn sample_raw_action<S: Scalar, R: Rng + ?Sized>(mu: S, log_sigma: S, rng: &mut R) -> S {
    mu + log_sigma.exp() * S::std_normal(rng)
}

/// Clamps an action into the interval the environment accepts.
pub fn clip_action<S: Scalar>(a: S) -> S {
    a.max(-S::one()).min(S::one())
}

/// Log density of the raw action under the policy Gaussian.
pub fn gaussian_log_prob<S: Scalar>(mu: S, log_sigma: S, action: S) -> S {
    let z = (action - mu) / log_sigma.exp();
    -z * z / S::of(2.0) - log_sigma - S::of(HALF_LN_TWO_PI)
}
