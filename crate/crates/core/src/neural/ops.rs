//! Row-wise primitives with hand-derived backward passes.
//!
//! A batch of `B` equal-length sequences is stored as `[B*L x width]`;
//! row `r` is position `r % L` of sequence `r / L`.

use ndarray::{s, Array1, Array2, Axis};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Width-3 neighbourhood `[s_{i-1}, s_i, s_{i+1}]`, zero outside each sequence.
pub fn window(st: &Array2<f64>, len: usize) -> Array2<f64> {
    let (n, d) = st.dim();
    let mut x = Array2::zeros((n, 3 * d));
    for r in 0..n {
        let i = r % len;
        if i > 0 {
            x.slice_mut(s![r, 0..d]).assign(&st.row(r - 1));
        }
        x.slice_mut(s![r, d..2 * d]).assign(&st.row(r));
        if i + 1 < len {
            x.slice_mut(s![r, 2 * d..3 * d]).assign(&st.row(r + 1));
        }
    }
    x
}

pub fn window_backward(dx: &Array2<f64>, len: usize) -> Array2<f64> {
    let (n, d3) = dx.dim();
    let d = d3 / 3;
    let mut ds = Array2::zeros((n, d));
    for r in 0..n {
        let i = r % len;
        let mut row = ds.row_mut(r);
        row += &dx.slice(s![r, d..2 * d]);
        if i > 0 {
            // Row r's left slot reads row r-1.
            let mut prev = ds.row_mut(r - 1);
            prev += &dx.slice(s![r, 0..d]);
        }
        if i + 1 < len {
            let mut next = ds.row_mut(r + 1);
            next += &dx.slice(s![r, 2 * d..3 * d]);
        }
    }
    ds
}

/// Exact GELU, `x * Phi(x)`.
pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::erf(x / SQRT_2))
}

pub fn gelu_grad(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x / SQRT_2)) + x * INV_SQRT_2PI * (-0.5 * x * x).exp()
}

pub struct LayerNormCache {
    pub xhat: Array2<f64>,
    pub inv_std: Array1<f64>,
}

pub fn layer_norm(x: &Array2<f64>, g: &Array1<f64>, b: &Array1<f64>, eps: f64) -> (Array2<f64>, LayerNormCache) {
    let d = x.ncols() as f64;
    let mean = x.sum_axis(Axis(1)) / d;
    let centered = x - &mean.view().insert_axis(Axis(1));
    let var = centered.mapv(|v| v * v).sum_axis(Axis(1)) / d;
    let inv_std = var.mapv(|v| 1.0 / (v + eps).sqrt());
    let xhat = &centered * &inv_std.view().insert_axis(Axis(1));
    let out = &xhat * g + b;
    (out, LayerNormCache { xhat, inv_std })
}

/// Returns `dx`; accumulates `dg`, `db`.
pub fn layer_norm_backward(
    dy: &Array2<f64>,
    cache: &LayerNormCache,
    g: &Array1<f64>,
    dg: &mut Array1<f64>,
    db: &mut Array1<f64>,
) -> Array2<f64> {
    let d = dy.ncols() as f64;
    *dg += &(dy * &cache.xhat).sum_axis(Axis(0));
    *db += &dy.sum_axis(Axis(0));
    let dxhat = dy * g;
    let m1 = dxhat.sum_axis(Axis(1)) / d;
    let m2 = (&dxhat * &cache.xhat).sum_axis(Axis(1)) / d;
    let inner = &dxhat - &m1.view().insert_axis(Axis(1)) - &(&cache.xhat * &m2.view().insert_axis(Axis(1)));
    inner * cache.inv_std.view().insert_axis(Axis(1))
}

pub fn softmax_rows(x: &Array2<f64>) -> Array2<f64> {
    let mut out = x.clone();
    for mut row in out.rows_mut() {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - m).exp());
        let z = row.sum();
        row /= z;
    }
    out
}

/// Vector-Jacobian product of a row softmax: `y * (dy - <y, dy>)`.
pub fn softmax_backward(y: &Array2<f64>, dy: &Array2<f64>) -> Array2<f64> {
    let dot = (y * dy).sum_axis(Axis(1));
    y * &(dy - &dot.view().insert_axis(Axis(1)))
}

pub fn argmax_rows(x: &Array2<f64>) -> Vec<usize> {
    x.rows()
        .into_iter()
        .map(|r| {
            let mut best = 0;
            for (i, &v) in r.iter().enumerate() {
                if v > r[best] {
                    best = i;
                }
            }
            best
        })
        .collect()
}

pub fn one_hot(idx: &[usize], width: usize) -> Array2<f64> {
    let mut m = Array2::zeros((idx.len(), width));
    for (r, &i) in idx.iter().enumerate() {
        m[[r, i]] = 1.0;
    }
    m
}

/// Mean cross-entropy over rows and its gradient w.r.t. the logits.
pub fn cross_entropy(logits: &Array2<f64>, targets: &[usize]) -> (f64, Array2<f64>) {
    let n = logits.nrows() as f64;
    let p = softmax_rows(logits);
    let mut loss = 0.0;
    for (r, &t) in targets.iter().enumerate() {
        loss -= p[[r, t]].max(f64::MIN_POSITIVE).ln();
    }
    let grad = (p - one_hot(targets, logits.ncols())) / n;
    (loss / n, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn window_pads_each_sequence() {
        let st = array![[1.0], [2.0], [3.0], [4.0]];
        let x = window(&st, 2);
        assert_eq!(
            x,
            array![[0.0, 1.0, 2.0], [1.0, 2.0, 0.0], [0.0, 3.0, 4.0], [3.0, 4.0, 0.0]]
        );
    }

    #[test]
    fn window_backward_is_adjoint() {
        let st = Array2::from_shape_fn((6, 2), |(i, j)| (i * 2 + j) as f64 * 0.3 - 1.0);
        let dx = Array2::from_shape_fn((6, 6), |(i, j)| ((i + 3 * j) % 5) as f64 - 2.0);
        let lhs = (&window(&st, 3) * &dx).sum();
        let rhs = (&st * &window_backward(&dx, 3)).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn gelu_values() {
        assert_eq!(gelu(0.0), 0.0);
        assert!((gelu(1.0) - 0.841_344_746_068_543).abs() < 1e-12);
        for x in [-2.0, -0.3, 0.0, 0.7, 3.0] {
            let fd = (gelu(x + 1e-6) - gelu(x - 1e-6)) / 2e-6;
            assert!((fd - gelu_grad(x)).abs() < 1e-8);
        }
    }

    #[test]
    fn uniform_logits_cost_ln_c() {
        let logits = Array2::zeros((4, 25));
        let (l, _) = cross_entropy(&logits, &[0, 3, 7, 24]);
        assert!((l - 25f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn confident_correct_logits_have_vanishing_gradient() {
        let mut logits = Array2::zeros((2, 5));
        logits[[0, 1]] = 1e3;
        logits[[1, 4]] = 1e3;
        let (l, g) = cross_entropy(&logits, &[1, 4]);
        assert!(l < 1e-12);
        assert!(g.iter().all(|v| v.abs() < 1e-12));
    }
}
