use super::ModelConfig;
use crate::error::{Error, Result};
use crate::numkit::{rng::streams, Matrix, ParamSet, RandomSource};

/// Positions of each tensor inside the [`ParamSet`].
pub mod slot {
    pub const W_E: usize = 0;
    pub const B_E: usize = 1;
    pub const W_ALPHA: usize = 2;
    pub const B_ALPHA: usize = 3;
    pub const W_S: usize = 4;
    pub const W_LAMBDA: usize = 5;
    pub const B_LAMBDA: usize = 6;
    pub const U: usize = 7;
    pub const C: usize = 8;
    pub const W_SH: usize = 9;
    pub const B_SH: usize = 10;
    pub const W_H: usize = 11;
    pub const B_H: usize = 12;
    pub const COUNT: usize = 13;
}

/// `(name, rows, cols, fan_in)` for every tensor, in slot order.
fn layout(c: &ModelConfig) -> [(&'static str, usize, usize, usize); slot::COUNT] {
    let (f, d, m, k, dd) = (c.features, c.hidden, c.context, c.nodes, c.decoder_width());
    [
        ("encoder.weight", f, d, f),
        ("encoder.bias", 1, d, f),
        ("fusion_gate.weight", 1, 2 * d, 2 * d),
        ("fusion_gate.bias", 1, 1, 2 * d),
        ("propagation.weight", d, d, d),
        ("fluctuation_gate.weight", 1, 1, 1),
        ("fluctuation_gate.bias", 1, 1, 1),
        ("dynamic_gate.weight", 1, 1, 1),
        ("dynamic_gate.bias", 1, 1, 1),
        ("decoder.trunk.weight", m * d, dd, m * d),
        ("decoder.trunk.bias", 1, dd, m * d),
        ("decoder.heads.weight", k, dd, dd),
        ("decoder.heads.bias", 1, k, dd),
    ]
}

/// Every learnable parameter of the forecaster.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    set: ParamSet,
}

impl ModelParams {
    pub fn zeros(config: &ModelConfig) -> Self {
        let mut set = ParamSet::new();
        for (name, r, c, _) in layout(config) {
            set.push(name, Matrix::zeros(r, c));
        }
        ModelParams { set }
    }

    /// Uniform in `±1/√fan_in`, drawn from the init sub-stream of `seed`.
    pub fn init(config: &ModelConfig, seed: u64) -> Self {
        let mut rng = RandomSource::with_stream(seed, streams::INIT);
        let mut set = ParamSet::new();
        for (name, r, c, fan_in) in layout(config) {
            let bound = 1.0 / (fan_in as f64).sqrt();
            let data = (0..r * c).map(|_| rng.uniform(-bound, bound)).collect();
            set.push(name, Matrix::new(r, c, data).expect("layout shapes"));
        }
        ModelParams { set }
    }

    /// Wrap a parameter set after checking it against the config's layout.
    pub fn from_set(config: &ModelConfig, set: ParamSet) -> Result<Self> {
        let expected = layout(config);
        if set.len() != expected.len() {
            return Err(Error::Shape(format!(
                "expected {} parameter tensors, got {}",
                expected.len(),
                set.len()
            )));
        }
        for (i, (name, r, c, _)) in expected.iter().enumerate() {
            if set.name(i) != *name || set.get(i).shape() != (*r, *c) {
                return Err(Error::Shape(format!(
                    "tensor {i}: expected {name} {r}x{c}, got {} {:?}",
                    set.name(i),
                    set.get(i).shape()
                )));
            }
        }
        if let Some(name) = set.first_non_finite() {
            return Err(Error::numeric(format!("parameter {name}")));
        }
        Ok(ModelParams { set })
    }

    pub(crate) fn from_set_unchecked(set: ParamSet) -> Self {
        ModelParams { set }
    }

    pub fn set(&self) -> &ParamSet {
        &self.set
    }

    pub fn set_mut(&mut self) -> &mut ParamSet {
        &mut self.set
    }

    pub fn into_set(self) -> ParamSet {
        self.set
    }

    #[inline]
    pub fn get(&self, slot: usize) -> &Matrix {
        self.set.get(slot)
    }

    #[inline]
    pub fn get_mut(&mut self, slot: usize) -> &mut Matrix {
        self.set.get_mut(slot)
    }

    pub(crate) fn scalar_at(&self, slot: usize) -> f64 {
        self.set.get(slot).item()
    }

    /// Relabel task heads: new task `i` uses old head `perm[i]`.
    pub fn permute_tasks(&self, perm: &[usize]) -> ModelParams {
        let mut out = self.clone();
        let heads = self.get(slot::W_H);
        let bias = self.get(slot::B_H);
        for (i, &p) in perm.iter().enumerate() {
            out.get_mut(slot::W_H).row_mut(i).copy_from_slice(heads.row(p));
            out.get_mut(slot::B_H).data_mut()[i] = bias.data()[p];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_bounded_and_seeded() {
        let c = ModelConfig::new(3, 2);
        let a = ModelParams::init(&c, 5);
        assert_eq!(a, ModelParams::init(&c, 5));
        assert_ne!(a, ModelParams::init(&c, 6));
        let bound = 1.0 / 2f64.sqrt();
        assert!(a.get(slot::W_E).max_abs() <= bound);
        let trunk_bound = 1.0 / ((c.context * c.hidden) as f64).sqrt();
        assert!(a.get(slot::W_SH).max_abs() <= trunk_bound);
    }

    #[test]
    fn from_set_checks_layout() {
        let c = ModelConfig::new(2, 1);
        let p = ModelParams::zeros(&c);
        assert!(ModelParams::from_set(&c, p.set().clone()).is_ok());
        let other = ModelConfig::new(3, 1);
        assert!(ModelParams::from_set(&other, p.into_set()).is_err());
    }
}
