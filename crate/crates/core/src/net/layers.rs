//! Batched neural layers with hand-derived backward passes.
//!
//! All activations are `(batch, features)` row-major arrays. Each forward
//! function returns what its backward pass needs; heavy lifting goes through
//! matrix multiplication so batches stay cache-friendly.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::scalar::Scalar;

/// Fully connected layer: `y = x Wᵀ + b` with `W` of shape `(out, in)`.
pub fn dense_forward<S: Scalar>(
    x: &Array2<S>,
    w: ArrayView2<S>,
    b: ArrayView1<S>,
) -> Array2<S> {
    let mut y = x.dot(&w.t());
    for mut row in y.outer_iter_mut() {
        row += &b;
    }
    y
}

/// Gradients of the dense layer given upstream `dy`.
pub fn dense_backward<S: Scalar>(
    x: &Array2<S>,
    w: ArrayView2<S>,
    dy: &Array2<S>,
) -> (Array2<S>, Array1<S>, Array2<S>) {
    let dw = dy.t().dot(x);
    let db = dy.sum_axis(Axis(0));
    let dx = dy.dot(&w);
    (dw, db, dx)
}

/// Gather circular windows: input `(batch, rays*channels)` viewed as a ring
/// of `rays` positions with `channels` values each becomes
/// `(batch*rays, kernel*channels)`, one row per output position, wrapping
/// around the ring. The kernel is centered: window offsets span
/// `-(kernel/2) ..= kernel/2`.
pub fn im2col_circular<S: Scalar>(
    x: &Array2<S>,
    rays: usize,
    channels: usize,
    kernel: usize,
) -> Array2<S> {
    let batch = x.nrows();
    let half = kernel / 2;
    let mut cols = Array2::zeros((batch * rays, kernel * channels));
    for i in 0..batch {
        for r in 0..rays {
            let row = i * rays + r;
            for k in 0..kernel {
                let src = (r + rays + k - half) % rays;
                for c in 0..channels {
                    cols[[row, k * channels + c]] = x[[i, src * channels + c]];
                }
            }
        }
    }
    cols
}

/// Circular 1-D convolution over the ray ring, `same`-size output flattened
/// ray-major: `y[b, r*filters + f]`. `w` has shape `(filters,
/// kernel*channels)`; `cols` comes from [`im2col_circular`].
pub fn conv_forward<S: Scalar>(
    cols: &Array2<S>,
    w: ArrayView2<S>,
    b: ArrayView1<S>,
    batch: usize,
    rays: usize,
) -> Array2<S> {
    let filters = w.nrows();
    let mut y = cols.dot(&w.t());
    for mut row in y.outer_iter_mut() {
        row += &b;
    }
    y.into_shape((batch, rays * filters)).expect("conv output reshape")
}

/// Gradients of the circular convolution. `dy` is `(batch, rays*filters)`.
/// Returns `(dw, db, dx)` with `dx` shaped like the layer input.
pub fn conv_backward<S: Scalar>(
    cols: &Array2<S>,
    w: ArrayView2<S>,
    dy: &Array2<S>,
    rays: usize,
    channels: usize,
    kernel: usize,
) -> (Array2<S>, Array1<S>, Array2<S>) {
    let batch = dy.nrows();
    let filters = w.nrows();
    let dy_rows = dy
        .to_owned()
        .into_shape((batch * rays, filters))
        .expect("conv grad reshape");
    let dw = dy_rows.t().dot(cols);
    let db = dy_rows.sum_axis(Axis(0));
    let dcols = dy_rows.dot(&w);
    let half = kernel / 2;
    let mut dx = Array2::zeros((batch, rays * channels));
    for i in 0..batch {
        for r in 0..rays {
            let row = i * rays + r;
            for k in 0..kernel {
                let src = (r + rays + k - half) % rays;
                for c in 0..channels {
                    dx[[i, src * channels + c]] += dcols[[row, k * channels + c]];
                }
            }
        }
    }
    (dw, db, dx)
}

/// Per-row layer normalization with learnable scale and shift. Returns the
/// output together with the normalized input and per-row inverse standard
/// deviation, both needed by the backward pass.
pub fn layer_norm_forward<S: Scalar>(
    x: &Array2<S>,
    gamma: ArrayView1<S>,
    beta: ArrayView1<S>,
    eps: S,
) -> (Array2<S>, Array2<S>, Array1<S>) {
    let n = S::of(x.ncols() as f64);
    let mut xhat = x.clone();
    let mut inv_std = Array1::zeros(x.nrows());
    for (mut row, is) in xhat.outer_iter_mut().zip(inv_std.iter_mut()) {
        let mean = row.iter().fold(S::zero(), |a, &v| a + v) / n;
        let var = row.iter().fold(S::zero(), |a, &v| a + (v - mean) * (v - mean)) / n;
        let s = S::one() / (var + eps).sqrt();
        row.mapv_inplace(|v| (v - mean) * s);
        *is = s;
    }
    let mut y = xhat.clone();
    for mut row in y.outer_iter_mut() {
        row *= &gamma;
        row += &beta;
    }
    (y, xhat, inv_std)
}

/// Gradients of layer normalization. Uses the cached normalized input and
/// inverse standard deviations from the forward pass.
pub fn layer_norm_backward<S: Scalar>(
    xhat: &Array2<S>,
    inv_std: &Array1<S>,
    gamma: ArrayView1<S>,
    dy: &Array2<S>,
) -> (Array1<S>, Array1<S>, Array2<S>) {
    let n = S::of(xhat.ncols() as f64);
    let dgamma = (dy * xhat).sum_axis(Axis(0));
    let dbeta = dy.sum_axis(Axis(0));
    let mut dxhat = dy.clone();
    for mut row in dxhat.outer_iter_mut() {
        row *= &gamma;
    }
    let mut dx = Array2::zeros(xhat.raw_dim());
    for ((dxh_row, xh_row), (mut dx_row, &is)) in dxhat
        .outer_iter()
        .zip(xhat.outer_iter())
        .zip(dx.outer_iter_mut().zip(inv_std.iter()))
    {
        let sum_d = dxh_row.iter().fold(S::zero(), |a, &v| a + v);
        let sum_dx = dxh_row
            .iter()
            .zip(xh_row.iter())
            .fold(S::zero(), |a, (&d, &x)| a + d * x);
        for ((dst, &d), &x) in dx_row.iter_mut().zip(dxh_row.iter()).zip(xh_row.iter()) {
            *dst = is / n * (n * d - sum_d - x * sum_dx);
        }
    }
    (dgamma, dbeta, dx)
}

/// Elementwise hyperbolic tangent.
pub fn tanh_forward<S: Scalar>(x: &Array2<S>) -> Array2<S> {
    x.mapv(|v| v.tanh())
}

/// Backward pass of tanh from its cached output: `dx = dy ⊙ (1 − y²)`.
pub fn tanh_backward<S: Scalar>(y: &Array2<S>, dy: &Array2<S>) -> Array2<S> {
    let mut dx = dy.clone();
    dx.zip_mut_with(y, |d, &yv| *d = *d * (S::one() - yv * yv));
    dx
}
