use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use ndarray::{Array1, Array2, ArrayView1, Axis, Zip};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::SparseVec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderShape {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
}

/// Trainable parameters: input -> tanh hidden -> output -> unit norm.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

impl Params {
    fn zeros_like(&self) -> Params {
        Params {
            w1: Array2::zeros(self.w1.raw_dim()),
            b1: Array1::zeros(self.b1.raw_dim()),
            w2: Array2::zeros(self.w2.raw_dim()),
            b2: Array1::zeros(self.b2.raw_dim()),
        }
    }

    fn slices_mut(&mut self) -> [&mut [f64]; 4] {
        [
            self.w1.as_slice_mut().expect("standard layout"),
            self.b1.as_slice_mut().expect("standard layout"),
            self.w2.as_slice_mut().expect("standard layout"),
            self.b2.as_slice_mut().expect("standard layout"),
        ]
    }

    fn slices(&self) -> [&[f64]; 4] {
        [
            self.w1.as_slice().expect("standard layout"),
            self.b1.as_slice().expect("standard layout"),
            self.w2.as_slice().expect("standard layout"),
            self.b2.as_slice().expect("standard layout"),
        ]
    }
}

#[derive(Clone, Debug)]
struct Adam {
    m: Params,
    v: Params,
    t: i32,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

/// The state-action encoder h_θ with its optimiser state.
#[derive(Clone, Debug)]
pub struct Encoder {
    shape: EncoderShape,
    params: Params,
    adam: Adam,
    pub temperature: f64,
    pub learning_rate: f64,
}

struct Forward {
    hidden: Array2<f64>,
    norms: Array1<f64>,
    emb: Array2<f64>,
}

impl Encoder {
    pub fn new(shape: EncoderShape, seed: u64) -> Encoder {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut init = |rows: usize, cols: usize| {
            let bound = (6.0 / (rows + cols) as f64).sqrt();
            Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-bound..bound))
        };
        let params = Params {
            w1: init(shape.input, shape.hidden),
            b1: Array1::zeros(shape.hidden),
            w2: init(shape.hidden, shape.output),
            b2: Array1::zeros(shape.output),
        };
        let adam = Adam { m: params.zeros_like(), v: params.zeros_like(), t: 0 };
        Encoder { shape, params, adam, temperature: 0.1, learning_rate: 1e-3 }
    }

    pub fn shape(&self) -> &EncoderShape {
        &self.shape
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn steps_taken(&self) -> i32 {
        self.adam.t
    }

    fn hidden_of(&self, x: &SparseVec) -> Array1<f64> {
        let mut a = self.params.b1.clone();
        for &(i, v) in x {
            a.scaled_add(v, &self.params.w1.row(i as usize));
        }
        a.mapv_inplace(f64::tanh);
        a
    }

    /// Unit-norm embedding of one feature vector.
    pub fn embed(&self, x: &SparseVec) -> Array1<f64> {
        let h = self.hidden_of(x);
        let mut z = h.dot(&self.params.w2) + &self.params.b2;
        let n = z.dot(&z).sqrt().max(1e-12);
        z /= n;
        z
    }

    pub fn embed_many(&self, xs: &[SparseVec]) -> Array2<f64> {
        let rows: Vec<Array1<f64>> = xs.par_iter().map(|x| self.embed(x)).collect();
        let mut out = Array2::zeros((xs.len(), self.shape.output));
        for (mut r, e) in out.rows_mut().into_iter().zip(rows) {
            r.assign(&e);
        }
        out
    }

    fn forward(&self, xs: &[SparseVec]) -> Forward {
        let mut hidden = Array2::zeros((xs.len(), self.shape.hidden));
        for (mut row, x) in hidden.rows_mut().into_iter().zip(xs) {
            row.assign(&self.hidden_of(x));
        }
        let z = hidden.dot(&self.params.w2) + &self.params.b2;
        let norms = z.map_axis(Axis(1), |r| r.dot(&r).sqrt().max(1e-12));
        let emb = &z / &norms.view().insert_axis(Axis(1));
        Forward { hidden, norms, emb }
    }

    /// Supervised contrastive loss of a labelled batch, with its gradient.
    /// Anchors without a same-label partner are skipped; `None` if none remain.
    pub fn loss_and_grad(&self, xs: &[SparseVec], labels: &[usize]) -> Option<(f64, Params)> {
        let b = xs.len();
        let positives: Vec<Vec<usize>> =
            (0..b).map(|i| (0..b).filter(|&j| j != i && labels[j] == labels[i]).collect()).collect();
        let anchors: Vec<usize> = (0..b).filter(|&i| !positives[i].is_empty()).collect();
        if anchors.is_empty() {
            return None;
        }
        let fwd = self.forward(xs);
        let t = self.temperature;
        let sim = fwd.emb.dot(&fwd.emb.t()) / t;
        let mut g = Array2::<f64>::zeros((b, b));
        let mut loss = 0.0;
        let scale = 1.0 / anchors.len() as f64;
        for &i in &anchors {
            let row = sim.row(i);
            let max = (0..b).filter(|&a| a != i).map(|a| row[a]).fold(f64::NEG_INFINITY, f64::max);
            let denom: f64 = (0..b).filter(|&a| a != i).map(|a| (row[a] - max).exp()).sum();
            let lse = max + denom.ln();
            let p = &positives[i];
            let pos_mean: f64 = p.iter().map(|&j| row[j]).sum::<f64>() / p.len() as f64;
            loss += scale * (lse - pos_mean);
            for a in (0..b).filter(|&a| a != i) {
                g[[i, a]] += scale * (row[a] - lse).exp();
            }
            for &j in p {
                g[[i, j]] -= scale / p.len() as f64;
            }
        }
        let d_emb = (&g + &g.t()).dot(&fwd.emb) / t;
        let mut d_z = Array2::<f64>::zeros(d_emb.raw_dim());
        Zip::from(d_z.rows_mut()).and(d_emb.rows()).and(fwd.emb.rows()).and(&fwd.norms).for_each(|mut dz, de, e, &n| {
            let proj = e.dot(&de);
            dz.assign(&((&de - &(&e * proj)) / n));
        });
        let mut grad = self.params.zeros_like();
        grad.w2 = fwd.hidden.t().dot(&d_z);
        grad.b2 = d_z.sum_axis(Axis(0));
        let d_h = d_z.dot(&self.params.w2.t());
        let d_a = &d_h * &fwd.hidden.mapv(|h| 1.0 - h * h);
        for (x, da) in xs.iter().zip(d_a.rows()) {
            for &(i, v) in x {
                grad.w1.row_mut(i as usize).scaled_add(v, &da);
            }
        }
        grad.b1 = d_a.sum_axis(Axis(0));
        Some((loss, grad))
    }

    fn adam_step(&mut self, grad: &Params) {
        self.adam.t += 1;
        let t = self.adam.t;
        let lr = self.learning_rate * (1.0 - BETA2.powi(t)).sqrt() / (1.0 - BETA1.powi(t));
        let Adam { m, v, .. } = &mut self.adam;
        for (((p, g), m), v) in self.params.slices_mut().into_iter().zip(grad.slices()).zip(m.slices_mut()).zip(v.slices_mut()) {
            for k in 0..p.len() {
                m[k] = BETA1 * m[k] + (1.0 - BETA1) * g[k];
                v[k] = BETA2 * v[k] + (1.0 - BETA2) * g[k] * g[k];
                p[k] -= lr * m[k] / (v[k].sqrt() + EPS);
            }
        }
    }

    /// Runs `steps` optimisation steps on random batches of at most `batch`
    /// labelled examples. Returns the loss of each step taken.
    pub fn train(&mut self, xs: &[SparseVec], labels: &[usize], steps: usize, batch: usize, seed: u64) -> Vec<f64> {
        let distinct: std::collections::BTreeSet<_> = labels.iter().collect();
        if distinct.len() < 2 || steps == 0 {
            return Vec::new();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut losses = Vec::with_capacity(steps);
        for _ in 0..steps {
            let pick: Vec<usize> = if xs.len() <= batch {
                (0..xs.len()).collect()
            } else {
                let mut p = index::sample(&mut rng, xs.len(), batch).into_vec();
                p.sort_unstable();
                p
            };
            let bx: Vec<SparseVec> = pick.iter().map(|&k| xs[k].clone()).collect();
            let bl: Vec<usize> = pick.iter().map(|&k| labels[k]).collect();
            if let Some((loss, grad)) = self.loss_and_grad(&bx, &bl) {
                self.adam_step(&grad);
                losses.push(loss);
            }
        }
        losses
    }

    /// Writes parameters as little-endian f64 (`<path>`) plus a shape document (`<path>.json`).
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        for s in self.params.slices() {
            for v in s {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        out.flush()?;
        let meta = serde_json::json!({
            "shape": self.shape,
            "temperature": self.temperature,
            "learning_rate": self.learning_rate,
            "steps": self.adam.t,
        });
        std::fs::write(path.with_extension("json"), serde_json::to_string_pretty(&meta)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Encoder> {
        let meta: BTreeMap<String, serde_json::Value> =
            serde_json::from_str(&std::fs::read_to_string(path.with_extension("json")).context("encoder metadata")?)?;
        let shape: EncoderShape = serde_json::from_value(meta["shape"].clone())?;
        let mut enc = Encoder::new(shape, 0);
        enc.temperature = meta["temperature"].as_f64().unwrap_or(0.1);
        enc.learning_rate = meta["learning_rate"].as_f64().unwrap_or(1e-3);
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        let total: usize = enc.params.slices().iter().map(|s| s.len()).sum();
        if bytes.len() != total * 8 {
            bail!("encoder file holds {} bytes, expected {}", bytes.len(), total * 8);
        }
        let mut chunks = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
        for s in enc.params.slices_mut() {
            for v in s.iter_mut() {
                *v = chunks.next().expect("length checked");
            }
        }
        Ok(enc)
    }
}

/// Cosine similarity of two vectors.
pub fn cosine(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    let d = a.dot(&b);
    let n = (a.dot(&a) * b.dot(&b)).sqrt();
    if n == 0.0 {
        0.0
    } else {
        d / n
    }
}
