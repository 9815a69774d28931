//! Model configuration and trainable tensors.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NcaConfig {
    /// Code book size.
    pub k: usize,
    /// State width.
    pub d: usize,
    /// Hidden width of the update rule.
    pub h: usize,
    /// Readout classes: lexical types plus EMPTY.
    pub c: usize,
    pub embed_dim: usize,
    /// Rows of the trainable embedding table; 0 when inputs are precomputed.
    pub vocab_size: usize,
}

pub const LN_EPS: f64 = 1e-5;

/// Parameter budget targeted by [`NcaConfig::for_budget`].
pub const PARAM_BUDGET: usize = 81_000;

impl NcaConfig {
    pub fn new(k: usize, d: usize, h: usize, c: usize, embed_dim: usize, vocab_size: usize) -> NcaConfig {
        NcaConfig {
            k,
            d,
            h,
            c,
            embed_dim,
            vocab_size,
        }
    }

    /// Small profile used by gradient checks.
    pub fn test_scale(c: usize, embed_dim: usize, vocab_size: usize) -> NcaConfig {
        NcaConfig::new(8, 8, 16, c, embed_dim, vocab_size)
    }

    /// K = 32, D = 64, with H chosen so the non-embedding count is closest to the budget.
    pub fn for_budget(c: usize, embed_dim: usize, vocab_size: usize, budget: usize) -> NcaConfig {
        let base = NcaConfig::new(32, 64, 0, c, embed_dim, vocab_size);
        let fixed = base.core_param_count();
        let per_h = 3 * base.d + 1 + base.d;
        let h = (budget.saturating_sub(fixed) + per_h / 2) / per_h;
        NcaConfig { h: h.max(1), ..base }
    }

    /// Trainable parameters excluding the embedding table.
    pub fn core_param_count(&self) -> usize {
        let (k, d, h, c, e) = (self.k, self.d, self.h, self.c, self.embed_dim);
        e * k + k * d + 3 * d * h + h + h * d + d + 2 * d + d * c
    }

    pub fn param_count(&self) -> usize {
        self.core_param_count() + self.vocab_size * self.embed_dim
    }

    pub fn validate(&self) -> Result<()> {
        if [self.k, self.d, self.h, self.c, self.embed_dim].contains(&0) {
            return Err(Error::Config("model dimensions must be positive".into()));
        }
        Ok(())
    }
}

/// All trainable tensors. Matrices are `[in x out]` and act on row vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    /// `[V x E]`, empty when inputs are precomputed.
    pub emb: Array2<f64>,
    /// `[E x K]`
    pub enc: Array2<f64>,
    /// `[K x D]`
    pub codebook: Array2<f64>,
    /// `[3D x H]`, rows ordered left neighbour, self, right neighbour.
    pub conv_w: Array2<f64>,
    pub conv_b: Array1<f64>,
    /// `[H x D]`
    pub out_w: Array2<f64>,
    pub out_b: Array1<f64>,
    pub ln_g: Array1<f64>,
    pub ln_b: Array1<f64>,
    /// `[D x C]`, no bias.
    pub readout: Array2<f64>,
}

/// Tensor names in declaration (and checkpoint) order.
pub const TENSOR_NAMES: [&str; 10] = [
    "emb", "enc", "codebook", "conv_w", "conv_b", "out_w", "out_b", "ln_g", "ln_b", "readout",
];

fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize, std: f64) -> Array2<f64> {
    let a = std * 3f64.sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-a..a))
}

impl Params {
    pub fn zeros(cfg: &NcaConfig) -> Params {
        let (k, d, h, c, e, v) = (cfg.k, cfg.d, cfg.h, cfg.c, cfg.embed_dim, cfg.vocab_size);
        Params {
            emb: Array2::zeros((v, e)),
            enc: Array2::zeros((e, k)),
            codebook: Array2::zeros((k, d)),
            conv_w: Array2::zeros((3 * d, h)),
            conv_b: Array1::zeros(h),
            out_w: Array2::zeros((h, d)),
            out_b: Array1::zeros(d),
            ln_g: Array1::zeros(d),
            ln_b: Array1::zeros(d),
            readout: Array2::zeros((d, c)),
        }
    }

    /// Uniform fan-in scaled initialization; LayerNorm starts at identity.
    pub fn init(cfg: &NcaConfig, seed: u64) -> Params {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (k, d, h, c, e, v) = (cfg.k, cfg.d, cfg.h, cfg.c, cfg.embed_dim, cfg.vocab_size);
        Params {
            emb: uniform(&mut rng, v, e, 1.0),
            enc: uniform(&mut rng, e, k, 1.0 / (e as f64).sqrt()),
            codebook: uniform(&mut rng, k, d, 1.0),
            conv_w: uniform(&mut rng, 3 * d, h, 1.0 / ((3 * d) as f64).sqrt()),
            conv_b: Array1::zeros(h),
            out_w: uniform(&mut rng, h, d, 1.0 / (h as f64).sqrt()),
            out_b: Array1::zeros(d),
            ln_g: Array1::ones(d),
            ln_b: Array1::zeros(d),
            readout: uniform(&mut rng, d, c, 1.0 / (d as f64).sqrt()),
        }
    }

    pub fn tensors(&self) -> [(&'static str, &[f64]); 10] {
        // Arrays built by this module are always in standard layout.
        [
            ("emb", self.emb.as_slice().unwrap()),
            ("enc", self.enc.as_slice().unwrap()),
            ("codebook", self.codebook.as_slice().unwrap()),
            ("conv_w", self.conv_w.as_slice().unwrap()),
            ("conv_b", self.conv_b.as_slice().unwrap()),
            ("out_w", self.out_w.as_slice().unwrap()),
            ("out_b", self.out_b.as_slice().unwrap()),
            ("ln_g", self.ln_g.as_slice().unwrap()),
            ("ln_b", self.ln_b.as_slice().unwrap()),
            ("readout", self.readout.as_slice().unwrap()),
        ]
    }

    pub fn tensors_mut(&mut self) -> [(&'static str, &mut [f64]); 10] {
        [
            ("emb", self.emb.as_slice_mut().unwrap()),
            ("enc", self.enc.as_slice_mut().unwrap()),
            ("codebook", self.codebook.as_slice_mut().unwrap()),
            ("conv_w", self.conv_w.as_slice_mut().unwrap()),
            ("conv_b", self.conv_b.as_slice_mut().unwrap()),
            ("out_w", self.out_w.as_slice_mut().unwrap()),
            ("out_b", self.out_b.as_slice_mut().unwrap()),
            ("ln_g", self.ln_g.as_slice_mut().unwrap()),
            ("ln_b", self.ln_b.as_slice_mut().unwrap()),
            ("readout", self.readout.as_slice_mut().unwrap()),
        ]
    }

    pub fn tensor(&self, name: &str) -> &[f64] {
        self.tensors()
            .into_iter()
            .find(|(n, _)| *n == name)
            .expect("known tensor")
            .1
    }

    pub fn tensor_mut(&mut self, name: &str) -> &mut [f64] {
        self.tensors_mut()
            .into_iter()
            .find(|(n, _)| *n == name)
            .expect("known tensor")
            .1
    }

    pub fn add_assign(&mut self, other: &Params) {
        for ((_, a), (_, b)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, f: f64) {
        for (_, a) in self.tensors_mut() {
            a.iter_mut().for_each(|x| *x *= f);
        }
    }

    pub fn all_finite(&self) -> Option<&'static str> {
        self.tensors()
            .into_iter()
            .find(|(_, a)| a.iter().any(|x| !x.is_finite()))
            .map(|(n, _)| n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NcaModel {
    pub cfg: NcaConfig,
    pub params: Params,
}

impl NcaModel {
    pub fn new(cfg: NcaConfig, seed: u64) -> Result<NcaModel> {
        cfg.validate()?;
        Ok(NcaModel {
            cfg,
            params: Params::init(&cfg, seed),
        })
    }

    pub fn uses_table(&self) -> bool {
        self.cfg.vocab_size > 0
    }
}
