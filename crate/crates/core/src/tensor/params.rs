use std::io::{BufRead, Write};

use rand::Rng;

use super::{Tensor, TensorError, TensorResult};

/// `sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Handle of a parameter inside a [`Params`] store.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Named, ordered collection of tensors. Most are trainable; statistics
/// added with [`Params::add_statistic`] travel with the weights (snapshots,
/// checkpoints) but the optimizer leaves them alone.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params {
    names: Vec<String>,
    values: Vec<Tensor>,
    frozen: Vec<bool>,
}

const CHECKPOINT_HEADER: &str = "kgnn-params v1";

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        self.names.push(name.into());
        self.values.push(value);
        self.frozen.push(false);
        ParamId(self.values.len() - 1)
    }

    /// A non-trainable tensor.
    pub fn add_statistic(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        let id = self.add(name, value);
        self.frozen[id.0] = true;
        id
    }

    pub fn is_trainable(&self, id: ParamId) -> bool {
        !self.frozen[id.0]
    }

    /// `fan_in × fan_out`, uniform in `[-a, a]` with
    /// `a = sqrt(6 / (fan_in + fan_out))`.
    pub fn add_glorot<R: Rng>(
        &mut self,
        name: impl Into<String>,
        fan_in: usize,
        fan_out: usize,
        rng: &mut R,
    ) -> ParamId {
        self.add_uniform(name, fan_in, fan_out, glorot_bound(fan_in, fan_out), rng)
    }

    /// `rows × cols`, uniform in `[-bound, bound]`.
    pub fn add_uniform<R: Rng>(
        &mut self,
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        bound: f64,
        rng: &mut R,
    ) -> ParamId {
        let data = (0..rows * cols).map(|_| rng.gen_range(-bound..=bound)).collect();
        self.add(name, Tensor::from_vec(rows, cols, data).expect("shape"))
    }

    pub fn add_zeros(&mut self, name: impl Into<String>, rows: usize, cols: usize) -> ParamId {
        self.add(name, Tensor::zeros(rows, cols))
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.values[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.values[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.values.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(&self.values)
    }

    pub fn scalar_count(&self) -> usize {
        self.values.iter().map(Tensor::len).sum()
    }

    /// Copy values from `other`, which must have the same names and shapes.
    pub fn assign(&mut self, other: &Params) -> TensorResult<()> {
        if self.names != other.names || self.frozen != other.frozen {
            return Err(TensorError::Checkpoint("parameter names differ".into()));
        }
        for (dst, src) in self.values.iter_mut().zip(&other.values) {
            if dst.shape() != src.shape() {
                return Err(TensorError::ShapeMismatch {
                    op: "assign",
                    left: dst.shape(),
                    right: src.shape(),
                });
            }
        }
        self.values.clone_from(&other.values);
        Ok(())
    }

    /// Line-oriented checkpoint: a header, then per parameter a
    /// `param <name> <rows> <cols>` line (`stat` for statistics) followed by
    /// one line of values.
    /// Values use the shortest round-trip decimal form, so reloading is exact.
    pub fn write_checkpoint<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{CHECKPOINT_HEADER}")?;
        for ((name, t), &frozen) in self.iter().zip(&self.frozen) {
            let kw = if frozen { "stat" } else { "param" };
            writeln!(out, "{kw} {name} {} {}", t.rows(), t.cols())?;
            let mut line = String::with_capacity(t.len() * 20);
            for (i, v) in t.data().iter().enumerate() {
                if i > 0 {
                    line.push(' ');
                }
                line.push_str(&format!("{v:?}"));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn read_checkpoint<R: BufRead>(input: R) -> TensorResult<Params> {
        let bad = |msg: String| TensorError::Checkpoint(msg);
        let mut lines = input.lines().enumerate();
        match lines.next() {
            Some((_, Ok(h))) if h.trim() == CHECKPOINT_HEADER => {}
            Some((_, Ok(h))) => return Err(bad(format!("unsupported header {h:?}"))),
            _ => return Err(bad("empty checkpoint".into())),
        }
        let mut params = Params::new();
        while let Some((no, line)) = lines.next() {
            let line = line.map_err(|e| bad(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [kw, name, rows, cols] = fields[..] else {
                return Err(bad(format!("line {}: expected `param <name> <rows> <cols>`", no + 1)));
            };
            if kw != "param" && kw != "stat" {
                return Err(bad(format!("line {}: expected `param` or `stat`", no + 1)));
            }
            let rows: usize = rows.parse().map_err(|_| bad(format!("line {}: rows", no + 1)))?;
            let cols: usize = cols.parse().map_err(|_| bad(format!("line {}: cols", no + 1)))?;
            let values = match lines.next() {
                Some((_, Ok(v))) => v,
                _ => return Err(bad(format!("missing values for {name}"))),
            };
            let data = values
                .split_whitespace()
                .map(str::parse::<f64>)
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| bad(format!("values for {name}: {e}")))?;
            let value = Tensor::from_vec(rows, cols, data)?;
            if kw == "stat" {
                params.add_statistic(name, value);
            } else {
                params.add(name, value);
            }
        }
        Ok(params)
    }
}
