//! Encoder, discrete bottleneck, local update rule, readout, and the
//! dual-point loss with its detached-rollout gradient.

use ndarray::{Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::embeddings::Input;
use crate::error::{Error, Result};
use crate::neural::model::{NcaModel, Params, LN_EPS};
use crate::neural::ops::{
    argmax_rows, cross_entropy, gelu, gelu_grad, layer_norm, layer_norm_backward, one_hot, softmax_backward,
    softmax_rows, window, window_backward, LayerNormCache,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Hard one-hot forward, soft gradient.
    Train,
    /// Soft codes forward and backward; the differentiable path checked by the oracle.
    Soft,
    /// Argmax of the clean logits.
    Infer,
}

/// Equal-length sequences stacked row-wise.
#[derive(Debug, Clone)]
pub struct BatchInput {
    pub len: usize,
    /// Table rows, one per position, when the model owns an embedding table.
    pub ids: Vec<usize>,
    /// `[B*L x E]` frozen vectors otherwise.
    pub vectors: Option<Array2<f64>>,
}

impl BatchInput {
    pub fn from_inputs(inputs: &[&Input]) -> Result<BatchInput> {
        let len = inputs.first().map(|i| i.len()).unwrap_or(0);
        if len == 0 || inputs.iter().any(|i| i.len() != len) {
            return Err(Error::Config("batch needs non-empty sequences of equal length".into()));
        }
        match inputs[0] {
            Input::Ids(_) => {
                let mut ids = Vec::with_capacity(len * inputs.len());
                for i in inputs {
                    match i {
                        Input::Ids(v) => ids.extend_from_slice(v),
                        Input::Vectors { .. } => return Err(Error::Config("mixed input kinds".into())),
                    }
                }
                Ok(BatchInput {
                    len,
                    ids,
                    vectors: None,
                })
            }
            Input::Vectors { dim, .. } => {
                let mut data = Vec::with_capacity(len * inputs.len() * dim);
                for i in inputs {
                    match i {
                        Input::Vectors { data: d, .. } => data.extend_from_slice(d),
                        Input::Ids(_) => return Err(Error::Config("mixed input kinds".into())),
                    }
                }
                let m = Array2::from_shape_vec((len * inputs.len(), *dim), data)
                    .map_err(|e| Error::Config(e.to_string()))?;
                Ok(BatchInput {
                    len,
                    ids: Vec::new(),
                    vectors: Some(m),
                })
            }
        }
    }

    pub fn rows(&self) -> usize {
        match &self.vectors {
            Some(v) => v.nrows(),
            None => self.ids.len(),
        }
    }
}

pub fn embed(p: &Params, input: &BatchInput) -> Array2<f64> {
    match &input.vectors {
        Some(v) => v.clone(),
        None => p.emb.select(Axis(0), &input.ids),
    }
}

/// Standard Gumbel(0, 1) noise.
pub fn gumbel_noise(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| {
        let u: f64 = rng.gen_range(f64::EPSILON..1.0);
        -(-u.ln()).ln()
    })
}

/// Noise stream for one batch of one epoch.
pub fn noise_rng(seed: u64, epoch: usize, batch: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((epoch as u64) << 32) | batch as u64);
    rng
}

pub struct Encoded {
    pub e_in: Array2<f64>,
    pub logits: Array2<f64>,
    /// Relaxed sample; absent in inference mode.
    pub soft: Option<Array2<f64>>,
    pub codes: Array2<f64>,
    pub state0: Array2<f64>,
    pub tau: f64,
}

impl Encoded {
    pub fn code_ids(&self) -> Vec<usize> {
        argmax_rows(&self.codes)
    }
}

pub fn encode(p: &Params, input: &BatchInput, tau: f64, mode: Mode, noise: Option<&Array2<f64>>) -> Encoded {
    let e_in = embed(p, input);
    let logits = e_in.dot(&p.enc);
    let k = logits.ncols();
    let (soft, codes) = match mode {
        Mode::Infer => (None, one_hot(&argmax_rows(&logits), k)),
        Mode::Train | Mode::Soft => {
            let z = match noise {
                Some(g) => (&logits + g) / tau,
                None => &logits / tau,
            };
            let y = softmax_rows(&z);
            let codes = if mode == Mode::Train {
                one_hot(&argmax_rows(&y), k)
            } else {
                y.clone()
            };
            (Some(y), codes)
        }
    };
    let state0 = codes.dot(&p.codebook);
    Encoded {
        e_in,
        logits,
        soft,
        codes,
        state0,
        tau,
    }
}

pub struct StepCache {
    x3: Array2<f64>,
    a: Array2<f64>,
    g: Array2<f64>,
    y: Array2<f64>,
    ln: LayerNormCache,
    len: usize,
}

fn step_inner(p: &Params, st: &Array2<f64>, len: usize) -> (Array2<f64>, StepCache) {
    let x3 = window(st, len);
    let a = x3.dot(&p.conv_w) + &p.conv_b;
    let g = a.mapv(gelu);
    let y = (g.dot(&p.out_w) + &p.out_b).mapv(f64::tanh);
    let (out, ln) = layer_norm(&y, &p.ln_g, &p.ln_b, LN_EPS);
    (out, StepCache { x3, a, g, y, ln, len })
}

/// One update: `LayerNorm(Tanh(out(GELU(window3(in, state)))))`, shared across positions.
pub fn nca_step(p: &Params, st: &Array2<f64>, len: usize) -> Array2<f64> {
    step_inner(p, st, len).0
}

pub fn nca_step_cached(p: &Params, st: &Array2<f64>, len: usize) -> (Array2<f64>, StepCache) {
    step_inner(p, st, len)
}

/// Accumulates parameter gradients of one step; returns the gradient w.r.t. its input.
pub fn nca_step_backward(p: &Params, c: &StepCache, d_out: &Array2<f64>, grads: &mut Params) -> Array2<f64> {
    let dy = layer_norm_backward(d_out, &c.ln, &p.ln_g, &mut grads.ln_g, &mut grads.ln_b);
    let dz = dy * &c.y.mapv(|v| 1.0 - v * v);
    grads.out_w += &c.g.t().dot(&dz);
    grads.out_b += &dz.sum_axis(Axis(0));
    let dg = dz.dot(&p.out_w.t());
    let da = dg * &c.a.mapv(gelu_grad);
    grads.conv_w += &c.x3.t().dot(&da);
    grads.conv_b += &da.sum_axis(Axis(0));
    window_backward(&da.dot(&p.conv_w.t()), c.len)
}

pub fn rollout(p: &Params, state0: &Array2<f64>, len: usize, t: usize) -> Array2<f64> {
    let mut st = state0.clone();
    for _ in 0..t {
        st = nca_step(p, &st, len);
    }
    st
}

/// Per-position linear map to class logits.
pub fn readout(p: &Params, st: &Array2<f64>) -> Array2<f64> {
    st.dot(&p.readout)
}

#[derive(Debug, Clone, Copy)]
pub struct LossOptions {
    pub t: usize,
    pub tau: f64,
    pub mode: Mode,
    pub w_init: f64,
    pub w_final: f64,
}

#[derive(Debug, Clone, Default)]
pub struct LossReport {
    pub loss: f64,
    pub init_ce: f64,
    pub final_ce: f64,
    pub positions: usize,
    pub init_correct: usize,
    pub final_correct: usize,
}

struct Forward {
    enc: Encoded,
    init_logits: Array2<f64>,
    entering: Array2<f64>,
    final_state: Array2<f64>,
    cache: StepCache,
}

fn forward(
    p: &Params,
    input: &BatchInput,
    opts: &LossOptions,
    noise: Option<&Array2<f64>>,
    entering: Option<&Array2<f64>>,
) -> Forward {
    assert!(opts.t >= 1, "rollout needs at least one step");
    let enc = encode(p, input, opts.tau, opts.mode, noise);
    let init_logits = readout(p, &enc.state0);
    // The first T-1 steps are constants for the backward pass.
    let entering = match entering {
        Some(s) if opts.t > 1 => s.clone(),
        _ => rollout(p, &enc.state0, input.len, opts.t - 1),
    };
    let (final_state, cache) = nca_step_cached(p, &entering, input.len);
    Forward {
        enc,
        init_logits,
        entering,
        final_state,
        cache,
    }
}

/// The state entering the final step, used to freeze the rollout prefix.
pub fn entering_state(
    model: &NcaModel,
    input: &BatchInput,
    opts: &LossOptions,
    noise: Option<&Array2<f64>>,
) -> Array2<f64> {
    forward(&model.params, input, opts, noise, None).entering
}

/// Loss value only; `entering` overrides the rollout prefix when `t > 1`.
pub fn loss_value(
    model: &NcaModel,
    input: &BatchInput,
    init_targets: &[usize],
    final_targets: &[usize],
    opts: &LossOptions,
    noise: Option<&Array2<f64>>,
    entering: Option<&Array2<f64>>,
) -> f64 {
    let f = forward(&model.params, input, opts, noise, entering);
    let (li, _) = cross_entropy(&f.init_logits, init_targets);
    let (lf, _) = cross_entropy(&readout(&model.params, &f.final_state), final_targets);
    opts.w_init * li + opts.w_final * lf
}

struct Upstream {
    init_ce: f64,
    final_ce: f64,
    final_logits: Array2<f64>,
    d_state0: Array2<f64>,
}

/// Readout and final-step gradients; returns the gradient reaching `state0`.
fn backward_to_state0(
    model: &NcaModel,
    f: &Forward,
    init_targets: &[usize],
    final_targets: &[usize],
    opts: &LossOptions,
    grads: &mut Params,
) -> Upstream {
    let p = &model.params;
    let (li, dli) = cross_entropy(&f.init_logits, init_targets);
    let final_logits = readout(p, &f.final_state);
    let (lf, dlf) = cross_entropy(&final_logits, final_targets);
    let dli = dli * opts.w_init;
    let dlf = dlf * opts.w_final;

    grads.readout += &f.enc.state0.t().dot(&dli);
    grads.readout += &f.final_state.t().dot(&dlf);
    let mut d_state0 = dli.dot(&p.readout.t());
    let d_final = dlf.dot(&p.readout.t());
    let d_entering = nca_step_backward(p, &f.cache, &d_final, grads);
    if opts.t == 1 {
        d_state0 += &d_entering;
    }
    Upstream {
        init_ce: li,
        final_ce: lf,
        final_logits,
        d_state0,
    }
}

/// Gradient of the loss w.r.t. the initial state under the detached contract.
pub fn state0_gradient(
    model: &NcaModel,
    input: &BatchInput,
    init_targets: &[usize],
    final_targets: &[usize],
    opts: &LossOptions,
    noise: Option<&Array2<f64>>,
) -> Array2<f64> {
    let f = forward(&model.params, input, opts, noise, None);
    let mut scratch = Params::zeros(&model.cfg);
    backward_to_state0(model, &f, init_targets, final_targets, opts, &mut scratch).d_state0
}

/// Loss and gradients under the detached-rollout contract: the final step
/// and readout always receive gradient; the encoder and code book receive
/// the initial-type loss, plus the final loss only when `t == 1`.
pub fn loss_and_grad(
    model: &NcaModel,
    input: &BatchInput,
    init_targets: &[usize],
    final_targets: &[usize],
    opts: &LossOptions,
    noise: Option<&Array2<f64>>,
    entering: Option<&Array2<f64>>,
) -> Result<(LossReport, Params)> {
    let p = &model.params;
    let f = forward(p, input, opts, noise, entering);
    let mut grads = Params::zeros(&model.cfg);
    let b = backward_to_state0(model, &f, init_targets, final_targets, opts, &mut grads);
    let (li, lf, final_logits, d_state0) = (b.init_ce, b.final_ce, b.final_logits, b.d_state0);

    grads.codebook += &f.enc.codes.t().dot(&d_state0);
    if let Some(y) = &f.enc.soft {
        let d_codes = d_state0.dot(&p.codebook.t());
        let d_logits = softmax_backward(y, &d_codes) / f.enc.tau;
        grads.enc += &f.enc.e_in.t().dot(&d_logits);
        if model.uses_table() && input.vectors.is_none() {
            let d_e = d_logits.dot(&p.enc.t());
            for (r, &id) in input.ids.iter().enumerate() {
                let mut row = grads.emb.row_mut(id);
                row += &d_e.row(r);
            }
        }
    }

    if let Some(name) = grads.all_finite() {
        return Err(Error::NonFinite(format!("gradient of {name}")));
    }
    let count = |logits: &Array2<f64>, t: &[usize]| argmax_rows(logits).iter().zip(t).filter(|(a, b)| a == b).count();
    let report = LossReport {
        loss: opts.w_init * li + opts.w_final * lf,
        init_ce: li,
        final_ce: lf,
        positions: init_targets.len(),
        init_correct: count(&f.init_logits, init_targets),
        final_correct: count(&final_logits, final_targets),
    };
    Ok((report, grads))
}

/// Inference-mode predictions per position: (initial types, final types).
pub fn predict(model: &NcaModel, input: &BatchInput, t: usize) -> (Vec<usize>, Vec<usize>) {
    let p = &model.params;
    let enc = encode(p, input, 1.0, Mode::Infer, None);
    let init = argmax_rows(&readout(p, &enc.state0));
    let fin = argmax_rows(&readout(p, &rollout(p, &enc.state0, input.len, t)));
    (init, fin)
}

/// Relative tensor error `|a - n| / max(|a|, |n|)`, 0 when both vanish.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: f64 = analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).powi(2))
        .sum::<f64>()
        .sqrt();
    let na: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nn: f64 = numeric.iter().map(|a| a * a).sum::<f64>().sqrt();
    let scale = na.max(nn);
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Central finite differences of [`loss_value`] for every entry of `tensor`.
#[allow(clippy::too_many_arguments)]
pub fn numeric_gradient(
    model: &NcaModel,
    tensor: &str,
    input: &BatchInput,
    init_targets: &[usize],
    final_targets: &[usize],
    opts: &LossOptions,
    noise: Option<&Array2<f64>>,
    entering: Option<&Array2<f64>>,
    step: f64,
) -> Vec<f64> {
    let mut m = model.clone();
    let n = m.params.tensor(tensor).len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let orig = m.params.tensor(tensor)[i];
        m.params.tensor_mut(tensor)[i] = orig + step;
        let lp = loss_value(&m, input, init_targets, final_targets, opts, noise, entering);
        m.params.tensor_mut(tensor)[i] = orig - step;
        let lm = loss_value(&m, input, init_targets, final_targets, opts, noise, entering);
        m.params.tensor_mut(tensor)[i] = orig;
        out.push((lp - lm) / (2.0 * step));
    }
    out
}

pub fn zeros_like_state(rows: usize, d: usize) -> Array2<f64> {
    Array2::zeros((rows, d))
}
