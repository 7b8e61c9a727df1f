use ndarray::{Array1, Array2, ArrayView1};

use super::encoder::cosine;

/// r_h: log(1 + mean distance to the k nearest bank embeddings). With an
/// empty bank, log 3, the largest value attainable on the unit sphere.
pub fn novelty(h: ArrayView1<f64>, bank: &Array2<f64>, k: usize) -> f64 {
    if bank.nrows() == 0 || k == 0 {
        return 3f64.ln();
    }
    let mut dist: Vec<f64> = bank
        .rows()
        .into_iter()
        .map(|b| {
            let d = &b - &h;
            d.dot(&d).sqrt()
        })
        .collect();
    mean_of_smallest(&mut dist, k).ln_1p()
}

/// Mean of the `k` smallest values (all of them if fewer).
pub fn mean_of_smallest(values: &mut [f64], k: usize) -> f64 {
    let k = k.min(values.len());
    if k == 0 {
        return 0.0;
    }
    if k < values.len() {
        values.select_nth_unstable_by(k - 1, f64::total_cmp);
    }
    values[..k].iter().sum::<f64>() / k as f64
}

/// Unit-norm mean embeddings of the active classes.
#[derive(Clone, Debug, Default)]
pub struct Prototypes {
    pub classes: Vec<usize>,
    pub vectors: Vec<Array1<f64>>,
    pub sizes: Vec<usize>,
}

impl Prototypes {
    /// `members` holds, per active class, its id, size |C| and the
    /// embeddings available for its members.
    pub fn build(members: &[(usize, usize, Vec<ArrayView1<f64>>)]) -> Prototypes {
        let mut p = Prototypes::default();
        for (class, size, embs) in members {
            let Some(first) = embs.first() else { continue };
            let mut mean = Array1::zeros(first.len());
            for e in embs {
                mean += e;
            }
            let n = mean.dot(&mean).sqrt();
            if n > 0.0 {
                mean /= n;
            }
            p.classes.push(*class);
            p.vectors.push(mean);
            p.sizes.push(*size);
        }
        p
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// q(C | x): softmax over cosine similarity at temperature `tq`.
    pub fn assignment(&self, h: ArrayView1<f64>, tq: f64) -> Vec<f64> {
        let logits: Vec<f64> = self.vectors.iter().map(|p| cosine(h, p.view()) / tq).collect();
        softmax(&logits)
    }

    /// r_C for an embedding; 0 without active classes.
    pub fn coverage(&self, h: ArrayView1<f64>, tq: f64) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        expected_coverage(&self.assignment(h, tq), &self.sizes)
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Σ_C q(C) · (−log(|C| / N)) with N the total size.
pub fn expected_coverage(q: &[f64], sizes: &[usize]) -> f64 {
    let n: usize = sizes.iter().sum();
    if n == 0 {
        return 0.0;
    }
    q.iter().zip(sizes).map(|(&qc, &c)| qc * -(c as f64 / n as f64).ln()).sum()
}

/// S = λ_h r_h + λ_C r_C.
pub fn frontier_score(r_h: f64, r_c: f64, lambda_h: f64, lambda_c: f64) -> f64 {
    lambda_h * r_h + lambda_c * r_c
}
