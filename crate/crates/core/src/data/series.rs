use crate::error::{Error, Result};
use crate::numkit::Matrix;

/// Per-node telemetry aligned on a fixed step grid.
///
/// Values are stored `T x K x F` row-major. Entries whose `(step, node)` is
/// masked invalid hold `NaN` and must never be read by training or
/// evaluation.
#[derive(Debug, Clone)]
pub struct AlignedSeries {
    /// Timestamp (seconds) of step 0.
    pub start: i64,
    pub bucket_seconds: i64,
    pub node_ids: Vec<String>,
    pub feature_names: Vec<String>,
    pub target_feature: usize,
    steps: usize,
    values: Vec<f64>,
    mask: Vec<bool>,
}

/// Bitwise equality on values, so masked `NaN` entries compare equal.
impl PartialEq for AlignedSeries {
    fn eq(&self, other: &Self) -> bool {
        self.start == other.start
            && self.bucket_seconds == other.bucket_seconds
            && self.node_ids == other.node_ids
            && self.feature_names == other.feature_names
            && self.target_feature == other.target_feature
            && self.steps == other.steps
            && self.mask == other.mask
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl AlignedSeries {
    pub fn new(
        start: i64,
        bucket_seconds: i64,
        node_ids: Vec<String>,
        feature_names: Vec<String>,
        target_feature: usize,
        values: Vec<f64>,
        mask: Vec<bool>,
    ) -> Result<Self> {
        let k = node_ids.len();
        let f = feature_names.len();
        if k == 0 || f == 0 {
            return Err(Error::Data("series needs at least one node and one feature".into()));
        }
        if target_feature >= f {
            return Err(Error::Data(format!(
                "target feature {target_feature} out of range for {f} features"
            )));
        }
        if bucket_seconds <= 0 {
            return Err(Error::Data("bucket width must be positive".into()));
        }
        if !mask.len().is_multiple_of(k) || values.len() != mask.len() * f {
            return Err(Error::Shape(format!(
                "series of {k} nodes x {f} features: {} values, {} mask entries",
                values.len(),
                mask.len()
            )));
        }
        let steps = mask.len() / k;
        if steps == 0 {
            return Err(Error::Data("series has no steps".into()));
        }
        let mut values = values;
        for (i, &ok) in mask.iter().enumerate() {
            let row = &mut values[i * f..(i + 1) * f];
            if ok {
                if row.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Data(format!(
                        "non-finite value at step {}, node {}",
                        i / k,
                        i % k
                    )));
                }
            } else {
                row.iter_mut().for_each(|v| *v = f64::NAN);
            }
        }
        Ok(AlignedSeries {
            start,
            bucket_seconds,
            node_ids,
            feature_names,
            target_feature,
            steps,
            values,
            mask,
        })
    }

    /// Fully valid series from a `T x K x F` value vector.
    pub fn dense(
        node_ids: Vec<String>,
        feature_names: Vec<String>,
        target_feature: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        let per_step = node_ids.len() * feature_names.len();
        if per_step == 0 || !values.len().is_multiple_of(per_step) {
            return Err(Error::Shape("value count is not a multiple of K x F".into()));
        }
        let mask = vec![true; values.len() / feature_names.len()];
        Self::new(0, 1, node_ids, feature_names, target_feature, values, mask)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn nodes(&self) -> usize {
        self.node_ids.len()
    }

    pub fn features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn timestamp(&self, t: usize) -> i64 {
        self.start + t as i64 * self.bucket_seconds
    }

    #[inline]
    fn idx(&self, t: usize, k: usize, f: usize) -> usize {
        (t * self.nodes() + k) * self.features() + f
    }

    #[inline]
    pub fn value(&self, t: usize, k: usize, f: usize) -> f64 {
        self.values[self.idx(t, k, f)]
    }

    /// Overwrite a valid entry. Writes to masked entries are refused.
    pub fn set_value(&mut self, t: usize, k: usize, f: usize, v: f64) -> Result<()> {
        if !self.is_valid(t, k) {
            return Err(Error::Data(format!("write through mask at step {t}, node {k}")));
        }
        let i = self.idx(t, k, f);
        self.values[i] = v;
        Ok(())
    }

    pub fn target(&self, t: usize, k: usize) -> f64 {
        self.value(t, k, self.target_feature)
    }

    #[inline]
    pub fn is_valid(&self, t: usize, k: usize) -> bool {
        self.mask[t * self.nodes() + k]
    }

    /// Every node valid at step `t`.
    pub fn step_valid(&self, t: usize) -> bool {
        (0..self.nodes()).all(|k| self.is_valid(t, k))
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The `K x F` input slice at step `t`.
    pub fn step_matrix(&self, t: usize) -> Matrix {
        let n = self.nodes() * self.features();
        Matrix::new(
            self.nodes(),
            self.features(),
            self.values[t * n..(t + 1) * n].to_vec(),
        )
        .expect("consistent dimensions")
    }

    /// Values of `(node, feature)` at valid steps.
    pub fn valid_column(&self, k: usize, f: usize) -> Vec<f64> {
        (0..self.steps)
            .filter(|&t| self.is_valid(t, k))
            .map(|t| self.value(t, k, f))
            .collect()
    }

    /// Contiguous sub-series over `range` of steps, with timestamps preserved.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<AlignedSeries> {
        if range.start >= range.end || range.end > self.steps {
            return Err(Error::Data(format!(
                "slice {range:?} out of range for {} steps",
                self.steps
            )));
        }
        let per_step = self.nodes() * self.features();
        Ok(AlignedSeries {
            start: self.timestamp(range.start),
            bucket_seconds: self.bucket_seconds,
            node_ids: self.node_ids.clone(),
            feature_names: self.feature_names.clone(),
            target_feature: self.target_feature,
            steps: range.len(),
            values: self.values[range.start * per_step..range.end * per_step].to_vec(),
            mask: self.mask[range.start * self.nodes()..range.end * self.nodes()].to_vec(),
        })
    }

    /// Apply `f` to every valid value of `(node, feature)`, leaving masked entries alone.
    pub(crate) fn map_column(&mut self, k: usize, feat: usize, f: impl Fn(f64) -> f64) {
        for t in 0..self.steps {
            if self.is_valid(t, k) {
                let i = self.idx(t, k, feat);
                self.values[i] = f(self.values[i]);
            }
        }
    }

    /// Reorder nodes so that new node `i` is old node `perm[i]`.
    pub fn permute_nodes(&self, perm: &[usize]) -> AlignedSeries {
        let (k, f) = (self.nodes(), self.features());
        let mut out = self.clone();
        out.node_ids = perm.iter().map(|&p| self.node_ids[p].clone()).collect();
        for t in 0..self.steps {
            for (i, &p) in perm.iter().enumerate() {
                out.mask[t * k + i] = self.mask[t * k + p];
                for j in 0..f {
                    out.values[(t * k + i) * f + j] = self.values[(t * k + p) * f + j];
                }
            }
        }
        out
    }

    /// Maximal runs of steps on which every node is valid, as half-open ranges.
    pub fn valid_spans(&self) -> Vec<std::ops::Range<usize>> {
        let mut spans = Vec::new();
        let mut begin = None;
        for t in 0..self.steps {
            match (self.step_valid(t), begin) {
                (true, None) => begin = Some(t),
                (false, Some(b)) => {
                    spans.push(b..t);
                    begin = None;
                }
                _ => {}
            }
        }
        if let Some(b) = begin {
            spans.push(b..self.steps);
        }
        spans
    }
}
