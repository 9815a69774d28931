//! Compares analytic gradients of the two-point loss against central
//! differences for every parameter tensor, on the relaxed path with the
//! entering state frozen.
//!
//! cargo run --release --example gradient_check -- [T]

use ccg_nca::neural::model::{NcaConfig, NcaModel, TENSOR_NAMES};
use ccg_nca::neural::nca::{
    entering_state, gumbel_noise, loss_and_grad, noise_rng, numeric_gradient, relative_error, BatchInput, LossOptions,
    Mode,
};

fn main() -> ccg_nca::Result<()> {
    let t = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let model = NcaModel::new(NcaConfig::test_scale(25, 6, 9), 1)?;
    let input = BatchInput {
        len: 5,
        ids: vec![0, 3, 8, 1, 2, 7, 5, 4, 6, 0],
        vectors: None,
    };
    let init = vec![0, 5, 3, 17, 23, 0, 16, 4, 0, 2];
    let fin = vec![24, 1, 24, 24, 24, 24, 24, 1, 24, 24];
    let opts = LossOptions {
        t,
        tau: 0.7,
        mode: Mode::Soft,
        w_init: 1.0,
        w_final: 1.0,
    };
    let noise = gumbel_noise(input.rows(), model.cfg.k, &mut noise_rng(11, 0, 0));
    let entering = entering_state(&model, &input, &opts, Some(&noise));
    let (rep, grads) = loss_and_grad(&model, &input, &init, &fin, &opts, Some(&noise), Some(&entering))?;
    println!(
        "T={t} loss {:.6} (initial CE {:.4}, final CE {:.4})",
        rep.loss, rep.init_ce, rep.final_ce
    );
    for name in TENSOR_NAMES {
        let numeric = numeric_gradient(
            &model,
            name,
            &input,
            &init,
            &fin,
            &opts,
            Some(&noise),
            Some(&entering),
            1e-5,
        );
        let analytic = grads.tensor(name);
        println!(
            "{name:>10}  {:>5} values  relative error {:.2e}",
            analytic.len(),
            relative_error(analytic, &numeric)
        );
    }
    Ok(())
}
