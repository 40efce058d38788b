use serde::{Deserialize, Serialize};

use super::Modality;
use crate::error::{ensure_finite, invalid, shape, Result};

pub const FUNCTIONALS_PER_DIM: usize = 14;

/// Output order of [`functionals`] within each descriptor dimension.
pub const FUNCTIONAL_NAMES: [&str; FUNCTIONALS_PER_DIM] = [
    "mean", "std", "disp", "max", "min", "range", "q1", "q2", "q3", "iqr12", "iqr23", "iqr13",
    "skewness", "kurtosis",
];

/// Frame-level descriptors of one utterance: `frames[t][j]` is descriptor
/// `j` at frame `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LldSequence {
    pub modality: Modality,
    pub frames: Vec<Vec<f64>>,
}

impl LldSequence {
    pub fn new(modality: Modality, frames: Vec<Vec<f64>>) -> Result<Self> {
        let seq = Self { modality, frames };
        seq.dims()?;
        Ok(seq)
    }

    /// Descriptor count, after checking the matrix is non-empty,
    /// rectangular and finite.
    pub fn dims(&self) -> Result<usize> {
        let first = self
            .frames
            .first()
            .ok_or_else(|| invalid("empty frame sequence"))?;
        let d = first.len();
        if d == 0 {
            return Err(invalid("frames have no descriptors"));
        }
        for (t, f) in self.frames.iter().enumerate() {
            if f.len() != d {
                return Err(shape(format!(
                    "frame {t} has {} descriptors, expected {d}",
                    f.len()
                )));
            }
            ensure_finite(f, &format!("frame {t}"))?;
        }
        Ok(d)
    }
}

// Linear interpolation between closest ranks on sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn column_functionals(values: &mut [f64], out: &mut Vec<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m3 = values.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    let std = m2.sqrt();
    let disp = values.iter().map(|v| (v - mean).abs()).sum::<f64>() / n;
    values.sort_by(|a, b| a.total_cmp(b));
    let min = values[0];
    let max = values[values.len() - 1];
    let (q1, q2, q3) = (
        quantile(values, 0.25),
        quantile(values, 0.5),
        quantile(values, 0.75),
    );
    let (skew, kurt) = if std > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    } else {
        (0.0, 0.0)
    };
    out.extend_from_slice(&[
        mean,
        std,
        disp,
        max,
        min,
        max - min,
        q1,
        q2,
        q3,
        q2 - q1,
        q3 - q2,
        q3 - q1,
        skew,
        kurt,
    ]);
}

/// Summarize a frame sequence into `14 · d` values, grouped per
/// descriptor dimension in [`FUNCTIONAL_NAMES`] order.
pub fn functionals(seq: &LldSequence) -> Result<Vec<f64>> {
    let d = seq.dims()?;
    let mut out = Vec::with_capacity(d * FUNCTIONALS_PER_DIM);
    let mut column = Vec::with_capacity(seq.frames.len());
    for j in 0..d {
        column.clear();
        column.extend(seq.frames.iter().map(|f| f[j]));
        column_functionals(&mut column, &mut out);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn seq(frames: Vec<Vec<f64>>) -> LldSequence {
        LldSequence::new(Modality::Acoustic, frames).unwrap()
    }

    #[test]
    fn constant_sequence() {
        let out = functionals(&seq(vec![vec![2.5]; 4])).unwrap();
        let want = [
            2.5, 0.0, 0.0, 2.5, 2.5, 0.0, 2.5, 2.5, 2.5, 0.0, 0.0, 0.0, 0.0, 0.0,
        ];
        assert_eq!(out, want);
    }

    #[test]
    fn one_to_four() {
        let out = functionals(&seq(vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]])).unwrap();
        assert_eq!(out[0], 2.5);
        assert!((out[1] - 1.25f64.sqrt()).abs() < 1e-15);
        assert_eq!(out[2], 1.0);
        assert_eq!((out[3], out[4], out[5]), (4.0, 1.0, 3.0));
        // type-7 quartiles of 1..4: 1.75, 2.5, 3.25
        assert_eq!((out[6], out[7], out[8]), (1.75, 2.5, 3.25));
        assert_eq!((out[9], out[10], out[11]), (0.75, 0.75, 1.5));
        assert!(out[12].abs() < 1e-15);
        // uniform on four points: m4/m2² = 2.5625/1.5625
        assert!((out[13] - (2.5625 / 1.5625 - 3.0)).abs() < 1e-12);
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(LldSequence::new(Modality::Visual, vec![]).is_err());
        assert!(LldSequence::new(Modality::Visual, vec![vec![1.0], vec![f64::NAN]]).is_err());
        assert!(LldSequence::new(Modality::Visual, vec![vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    // Textbook definitions evaluated independently: rank-based quartiles
    // on a freshly sorted copy, two-pass moments.
    fn oracle(col: &[f64]) -> Vec<f64> {
        let n = col.len() as f64;
        let mean = col.iter().fold(0.0, |a, b| a + b) / n;
        let dev: Vec<f64> = col.iter().map(|x| x - mean).collect();
        let var = dev.iter().map(|d| d * d).fold(0.0, |a, b| a + b) / n;
        let sd = var.sqrt();
        let mad = dev.iter().map(|d| d.abs()).fold(0.0, |a, b| a + b) / n;
        let mut s = col.to_vec();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q = |p: f64| {
            let h = (s.len() - 1) as f64 * p;
            let lo = h.floor();
            s[lo as usize] + (h - lo) * (s[h.ceil() as usize] - s[lo as usize])
        };
        let skew = dev.iter().map(|d| (d / sd).powi(3)).sum::<f64>() / n;
        let kurt = dev.iter().map(|d| (d / sd).powi(4)).sum::<f64>() / n - 3.0;
        let (mn, mx) = (s[0], s[s.len() - 1]);
        vec![
            mean,
            sd,
            mad,
            mx,
            mn,
            mx - mn,
            q(0.25),
            q(0.5),
            q(0.75),
            q(0.5) - q(0.25),
            q(0.75) - q(0.5),
            q(0.75) - q(0.25),
            skew,
            kurt,
        ]
    }

    #[test]
    fn random_sequence_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let frames: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..3).map(|_| rng.gen_range(-4.0..6.0)).collect())
            .collect();
        let out = functionals(&seq(frames.clone())).unwrap();
        assert_eq!(out.len(), 42);
        for j in 0..3 {
            let col: Vec<f64> = frames.iter().map(|f| f[j]).collect();
            let want = oracle(&col);
            for (k, w) in want.iter().enumerate() {
                let got = out[j * 14 + k];
                assert!(
                    (got - w).abs() < 1e-10,
                    "dim {j} {}: {got} vs {w}",
                    FUNCTIONAL_NAMES[k]
                );
            }
        }
    }

    proptest! {
        #[test]
        fn permutation_invariant(
            frames in prop::collection::vec(prop::collection::vec(-10.0..10.0f64, 2), 1..30),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            let mut shuffled = frames.clone();
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let a = functionals(&seq(frames)).unwrap();
            let b = functionals(&seq(shuffled)).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
            }
        }

        #[test]
        fn scale_equivariant(
            frames in prop::collection::vec(prop::collection::vec(-10.0..10.0f64, 1), 3..30),
            s in 0.1..10.0f64,
        ) {
            let a = functionals(&seq(frames.clone())).unwrap();
            prop_assume!(a[1] > 1e-3);
            let scaled: Vec<Vec<f64>> = frames.iter().map(|f| vec![f[0] * s]).collect();
            let b = functionals(&seq(scaled)).unwrap();
            for k in 0..12 {
                prop_assert!((b[k] - s * a[k]).abs() <= 1e-9 * (1.0 + (s * a[k]).abs()));
            }
            prop_assert!((b[12] - a[12]).abs() < 1e-7);
            prop_assert!((b[13] - a[13]).abs() < 1e-7);
        }
    }
}
