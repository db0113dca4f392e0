use rand::Rng;

use super::params::glorot_bound;
use super::{ParamId, Params, Tape, TensorResult, Var};

/// `x · W + b`; `W` and `b` are both drawn uniformly with the bound
/// computed from the layer's fan-in and fan-out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Linear {
    pub fn new<R: Rng>(params: &mut Params, name: &str, in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        Self {
            weight: params.add_glorot(format!("{name}.weight"), in_dim, out_dim, rng),
            bias: params.add_uniform(format!("{name}.bias"), 1, out_dim, glorot_bound(in_dim, out_dim), rng),
            in_dim,
            out_dim,
        }
    }

    pub fn forward(&self, tape: &mut Tape<'_>, x: Var) -> TensorResult<Var> {
        let w = tape.param(self.weight);
        let b = tape.param(self.bias);
        let y = tape.matmul(x, w)?;
        tape.add_row(y, b)
    }
}

/// Two-layer perceptron `Linear → ReLU → Linear` with dropout on its input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlpHead {
    pub hidden: Linear,
    pub output: Linear,
    pub dropout: f64,
}

impl MlpHead {
    pub fn new<R: Rng>(
        params: &mut Params,
        name: &str,
        in_dim: usize,
        hidden_dim: usize,
        out_dim: usize,
        dropout: f64,
        rng: &mut R,
    ) -> Self {
        Self {
            hidden: Linear::new(params, &format!("{name}.0"), in_dim, hidden_dim, rng),
            output: Linear::new(params, &format!("{name}.1"), hidden_dim, out_dim, rng),
            dropout,
        }
    }

    pub fn forward<R: Rng>(&self, tape: &mut Tape<'_>, x: Var, train: bool, rng: &mut R) -> TensorResult<Var> {
        let x = tape.dropout(x, self.dropout, train, rng)?;
        let h = self.hidden.forward(tape, x)?;
        let h = tape.relu(h)?;
        self.output.forward(tape, h)
    }
}
