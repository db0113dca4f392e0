//! Softmax regression on the tape: one gradient against a central finite
//! difference, then a few hundred Adam steps.

use kgnn::rng::rng_for;
use kgnn::tensor::{Adam, AdamConfig, ParamId, Params, Tape, Targets, Tensor, Var};

fn record(tape: &mut Tape<'_>, w: ParamId, b: ParamId, x: &Tensor, y: &[usize]) -> kgnn::Result<Var> {
    let x = tape.constant(x.clone())?;
    let (w, b) = (tape.param(w), tape.param(b));
    let z = tape.matmul(x, w)?;
    let z = tape.add_row(z, b)?;
    Ok(tape.cross_entropy(z, &Targets::Hard(y.to_vec()))?)
}

fn main() -> kgnn::Result<()> {
    let mut rng = rng_for(0, "example");
    let mut params = Params::new();
    let w = params.add_glorot("w", 2, 3, &mut rng);
    let b = params.add_zeros("b", 1, 3);
    let x = Tensor::from_rows(&[vec![2.0, 0.1], vec![-1.0, 1.5], vec![-0.5, -2.0], vec![1.8, -0.3]])?;
    let y = [0, 1, 2, 0];

    let loss_at = |p: &Params| -> kgnn::Result<f64> {
        let mut tape = Tape::new(p);
        let l = record(&mut tape, w, b, &x, &y)?;
        Ok(tape.value(l).item())
    };
    let grads = {
        let mut tape = Tape::new(&params);
        let l = record(&mut tape, w, b, &x, &y)?;
        tape.backward(l)?
    };
    let eps = 1e-6;
    let (mut plus, mut minus) = (params.clone(), params.clone());
    plus.get_mut(w).data_mut()[0] += eps;
    minus.get_mut(w).data_mut()[0] -= eps;
    let numeric = (loss_at(&plus)? - loss_at(&minus)?) / (2.0 * eps);
    println!(
        "dL/dw[0,0]: analytic {:.9}, numeric {numeric:.9}",
        grads.get(w).data()[0]
    );

    let mut adam = Adam::new(
        AdamConfig {
            learning_rate: 0.1,
            weight_decay: 0.0,
            ..AdamConfig::default()
        },
        &params,
    );
    for step in 0..=300 {
        if step % 100 == 0 {
            println!("step {step:3}: loss {:.5}", loss_at(&params)?);
        }
        let g = {
            let mut tape = Tape::new(&params);
            let l = record(&mut tape, w, b, &x, &y)?;
            tape.backward(l)?
        };
        adam.step(&mut params, &g)?;
    }
    Ok(())
}
