//! Update-guided exploration: a transition graph per level, a learned
//! state-action embedding, and frontier scoring by novelty plus expected
//! class coverage.

mod encoder;
mod features;
mod graph;
mod scoring;

use std::collections::{HashMap, HashSet, VecDeque};
use std::io::Write;
use std::path::Path;

use anyhow::Result;
use baba_sim::{Action, LabelMap, WorldState};
use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use encoder::{cosine, Encoder, EncoderShape, Params};
pub use features::{Featurizer, SparseVec};
pub use graph::{LevelGraph, PathTree};
pub use scoring::{expected_coverage, frontier_score, mean_of_smallest, novelty, softmax, Prototypes};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scoring {
    /// Novelty plus expected class coverage.
    #[default]
    Alice,
    /// Breadth-first order; no scoring.
    Bfs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplorerConfig {
    pub scoring: Scoring,
    pub feature_dim: usize,
    pub hidden_dim: usize,
    pub embedding_dim: usize,
    /// Candidates executed per collection batch (B).
    pub batch_size: usize,
    pub knn: usize,
    pub lambda_h: f64,
    pub lambda_c: f64,
    pub q_temperature: f64,
    pub contrastive_temperature: f64,
    pub learning_rate: f64,
    pub train_batch: usize,
    pub train_steps: usize,
    /// Ingested transitions between encoder retrainings.
    pub retrain_every: usize,
    pub seed: u64,
}

impl Default for ExplorerConfig {
    fn default() -> Self {
        ExplorerConfig {
            scoring: Scoring::Alice,
            feature_dim: 1024,
            hidden_dim: 512,
            embedding_dim: 384,
            batch_size: 64,
            knn: 32,
            lambda_h: 1.0,
            lambda_c: 0.05,
            q_temperature: 1.0,
            contrastive_temperature: 0.1,
            learning_rate: 1e-3,
            train_batch: 256,
            train_steps: 200,
            retrain_every: 2000,
            seed: 0,
        }
    }
}

/// A scored, reached-but-unexecuted (state, action) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub level: usize,
    pub node: usize,
    pub action: Action,
    pub r_h: f64,
    pub r_c: f64,
    pub score: f64,
}

struct BankEntry {
    tid: usize,
    level: usize,
    action: Action,
    features: SparseVec,
}

/// An active hypothesis class as the explorer sees it.
#[derive(Clone, Debug)]
pub struct ActiveClass {
    pub id: usize,
    pub members: Vec<usize>,
}

pub struct Explorer {
    config: ExplorerConfig,
    featurizer: Featurizer,
    encoder: Encoder,
    graphs: Vec<LevelGraph>,
    bank: Vec<BankEntry>,
    bank_emb: Array2<f64>,
    in_bank: HashMap<usize, usize>,
    pending: VecDeque<usize>,
    queued: HashSet<usize>,
    cursor: usize,
    ingested: usize,
    trained_at: usize,
    retrains: u64,
}

impl Explorer {
    pub fn new(levels: Vec<(String, WorldState)>, labels: LabelMap, config: ExplorerConfig) -> Explorer {
        let shape = EncoderShape { input: config.feature_dim, hidden: config.hidden_dim, output: config.embedding_dim };
        let mut encoder = Encoder::new(shape, config.seed);
        encoder.temperature = config.contrastive_temperature;
        encoder.learning_rate = config.learning_rate;
        Explorer {
            featurizer: Featurizer::new(config.feature_dim, labels),
            encoder,
            graphs: levels.into_iter().map(|(name, s)| LevelGraph::new(&name, s)).collect(),
            bank: Vec::new(),
            bank_emb: Array2::zeros((0, config.embedding_dim)),
            in_bank: HashMap::new(),
            pending: VecDeque::new(),
            queued: HashSet::new(),
            cursor: 0,
            ingested: 0,
            trained_at: 0,
            retrains: 0,
            config,
        }
    }

    pub fn config(&self) -> &ExplorerConfig {
        &self.config
    }

    pub fn graphs(&self) -> &[LevelGraph] {
        &self.graphs
    }

    pub fn graph(&self, level: usize) -> &LevelGraph {
        &self.graphs[level]
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    pub fn featurizer(&self) -> &Featurizer {
        &self.featurizer
    }

    pub fn bank_len(&self) -> usize {
        self.bank.len()
    }

    pub fn ingested(&self) -> usize {
        self.ingested
    }

    pub fn frontier_len(&self) -> usize {
        self.graphs.iter().map(LevelGraph::frontier_len).sum()
    }

    /// Next level in round-robin order that still has a frontier.
    pub fn next_level(&mut self) -> Option<usize> {
        let n = self.graphs.len();
        for k in 0..n {
            let level = (self.cursor + k) % n;
            if self.graphs[level].frontier_len() > 0 {
                self.cursor = (level + 1) % n;
                return Some(level);
            }
        }
        None
    }

    fn prototypes(&self, classes: &[ActiveClass]) -> Prototypes {
        let members: Vec<_> = classes
            .iter()
            .map(|c| {
                let embs = c.members.iter().filter_map(|t| self.in_bank.get(t)).map(|&k| self.bank_emb.row(k)).collect();
                (c.id, c.members.len(), embs)
            })
            .collect();
        Prototypes::build(&members)
    }

    /// Scores every frontier candidate of `level`.
    pub fn score_frontier(&self, level: usize, classes: &[ActiveClass]) -> Vec<Candidate> {
        let graph = &self.graphs[level];
        let frontier: Vec<(usize, Action)> = graph.frontier().collect();
        if self.config.scoring == Scoring::Bfs {
            return frontier
                .into_iter()
                .map(|(node, action)| Candidate { level, node, action, r_h: 0.0, r_c: 0.0, score: 0.0 })
                .collect();
        }
        let protos = self.prototypes(classes);
        let c = &self.config;
        frontier
            .par_iter()
            .map(|&(node, action)| {
                let h = self.encoder.embed(&self.featurizer.featurize(graph.state(node), action));
                let r_h = novelty(h.view(), &self.bank_emb, c.knn);
                let r_c = protos.coverage(h.view(), c.q_temperature);
                Candidate { level, node, action, r_h, r_c, score: frontier_score(r_h, r_c, c.lambda_h, c.lambda_c) }
            })
            .collect()
    }

    /// Top-`limit` candidates by score; ties go to the older node, then the
    /// smaller action.
    pub fn select_batch(&self, level: usize, limit: usize, classes: &[ActiveClass]) -> Vec<Candidate> {
        let mut scored = self.score_frontier(level, classes);
        scored.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.node.cmp(&b.node)).then(a.action.index().cmp(&b.action.index())));
        scored.truncate(limit);
        scored
    }

    /// Records an executed transition. Explained transitions join the
    /// embedding bank; unexplained ones are queued once for the programmer.
    pub fn ingest(&mut self, level: usize, from: usize, action: Action, next: &WorldState, tid: usize, explained: bool) -> (usize, bool) {
        let (to, fresh) = self.graphs[level].add_state(next);
        self.graphs[level].add_edge(from, action, to);
        self.ingested += 1;
        if explained {
            self.add_to_bank(tid, level, &self.graphs[level].state(from).clone(), action);
        } else if self.queued.insert(tid) {
            self.pending.push_back(tid);
        }
        (to, fresh)
    }

    /// Adds an explained transition's embedding to the bank (once per id).
    pub fn add_to_bank(&mut self, tid: usize, level: usize, state: &WorldState, action: Action) {
        if self.in_bank.contains_key(&tid) {
            return;
        }
        let features = self.featurizer.featurize(state, action);
        let emb = self.encoder.embed(&features);
        self.bank_emb.push_row(emb.view()).expect("embedding width matches");
        self.in_bank.insert(tid, self.bank.len());
        self.bank.push(BankEntry { tid, level, action, features });
    }

    pub fn pop_pending(&mut self) -> Option<usize> {
        let tid = self.pending.pop_front()?;
        self.queued.remove(&tid);
        Some(tid)
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    pub fn retrain_due(&self) -> bool {
        self.ingested >= self.trained_at + self.config.retrain_every
    }

    /// Trains on bank members of the active classes and re-embeds the bank.
    /// Returns the mean loss, or `None` with fewer than two classes.
    pub fn retrain(&mut self, classes: &[ActiveClass]) -> Option<f64> {
        self.trained_at = self.ingested;
        let mut xs = Vec::new();
        let mut labels = Vec::new();
        for c in classes {
            for t in &c.members {
                if let Some(&k) = self.in_bank.get(t) {
                    xs.push(self.bank[k].features.clone());
                    labels.push(c.id);
                }
            }
        }
        self.retrains += 1;
        let seed = self.config.seed ^ self.retrains.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        let losses = self.encoder.train(&xs, &labels, self.config.train_steps, self.config.train_batch, seed);
        if losses.is_empty() {
            return None;
        }
        let feats: Vec<SparseVec> = self.bank.iter().map(|b| b.features.clone()).collect();
        self.bank_emb = self.encoder.embed_many(&feats);
        Some(losses.iter().sum::<f64>() / losses.len() as f64)
    }

    /// Writes bank embeddings as row-major little-endian f64 to `<prefix>.f64`
    /// and per-row metadata to `<prefix>.json`.
    pub fn export_embeddings(&self, prefix: &Path, class_of: &dyn Fn(usize) -> Option<usize>) -> Result<usize> {
        if let Some(dir) = prefix.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut out = std::io::BufWriter::new(std::fs::File::create(prefix.with_extension("f64"))?);
        for v in self.bank_emb.iter() {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()?;
        let rows: Vec<_> = self
            .bank
            .iter()
            .map(|b| {
                serde_json::json!({
                    "transition": b.tid,
                    "level": self.graphs[b.level].name(),
                    "action": b.action.as_str(),
                    "class": class_of(b.tid),
                })
            })
            .collect();
        let meta = serde_json::json!({ "dim": self.config.embedding_dim, "count": self.bank.len(), "dtype": "f64le", "rows": rows });
        std::fs::write(prefix.with_extension("json"), serde_json::to_string_pretty(&meta)?)?;
        Ok(self.bank.len())
    }

    /// Embedding of an arbitrary (s, a) under the current encoder.
    pub fn embed(&self, state: &WorldState, action: Action) -> Array1<f64> {
        self.encoder.embed(&self.featurizer.featurize(state, action))
    }

    pub fn save_encoder(&self, path: &Path) -> Result<()> {
        self.encoder.save(path)
    }
}
