//! Sentence-level text metrics and batch evaluation reports.
//!
//! Variants are fixed: ROUGE is ROUGE-L F1, BLEU is sentence BLEU-4 with
//! add-one smoothing for n >= 2, and METEOR is a reduced form with exact and
//! stem matching only (no synonym tables). Every metric tokenises with
//! [`crate::attention::tokenize`]. Scores are comparable within this crate,
//! not with library implementations of the same names.

use std::collections::HashMap;
use std::path::Path;

use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attention::tokenize;
use crate::backends::{BackendError, Embedder};
use crate::exec::Execution;

const MAX_ORDER: usize = 4;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("vector dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("cosine similarity is undefined for an all-zero vector")]
    ZeroVector,
    #[error("no prediction/gold pairs to evaluate")]
    EmptyInput,
    #[error("pair {pair}: {source}")]
    Backend {
        pair: usize,
        #[source]
        source: BackendError,
    },
    #[error("pair {pair}: embedder returned {got} vectors for 2 texts")]
    EmbeddingCount { pair: usize, got: usize },
    #[error("{0}")]
    Io(String),
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Sentence BLEU-4 with uniform weights and brevity penalty. Unigram
/// precision is unsmoothed; orders 2..4 use `(matches + 1) / (total + 1)`.
pub fn bleu(candidate: &str, reference: &str) -> f64 {
    let cand = tokenize(candidate).tokens;
    let refr = tokenize(reference).tokens;
    if cand.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=MAX_ORDER {
        let c = ngram_counts(&cand, n);
        let r = ngram_counts(&refr, n);
        let total: usize = c.values().sum();
        let matched: usize = c.iter().map(|(g, &k)| k.min(r.get(g).copied().unwrap_or(0))).sum();
        let p = if n == 1 {
            if matched == 0 {
                return 0.0;
            }
            matched as f64 / total as f64
        } else {
            (matched + 1) as f64 / (total + 1) as f64
        };
        log_sum += p.ln();
    }
    let (c, r) = (cand.len() as f64, refr.len() as f64);
    let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    bp * (log_sum / MAX_ORDER as f64).exp()
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE-L precision, recall and F1 over token LCS.
pub fn rouge_l_prf(candidate: &str, reference: &str) -> (f64, f64, f64) {
    let cand = tokenize(candidate).tokens;
    let refr = tokenize(reference).tokens;
    if cand.is_empty() || refr.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let lcs = lcs_len(&cand, &refr) as f64;
    let p = lcs / cand.len() as f64;
    let r = lcs / refr.len() as f64;
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

pub fn rouge_l(candidate: &str, reference: &str) -> f64 {
    rouge_l_prf(candidate, reference).2
}

fn stemmer() -> &'static Stemmer {
    static STEMMER: std::sync::OnceLock<Stemmer> = std::sync::OnceLock::new();
    STEMMER.get_or_init(|| Stemmer::create(Algorithm::English))
}

/// Greedy left-to-right unigram alignment: exact matches first, then stem
/// matches among what is left. Returns `(candidate_idx, reference_idx)` pairs
/// sorted by candidate index.
fn align(cand: &[String], refr: &[String]) -> Vec<(usize, usize)> {
    let mut ref_used = vec![false; refr.len()];
    let mut cand_used = vec![false; cand.len()];
    let mut pairs = Vec::new();
    for (i, c) in cand.iter().enumerate() {
        if let Some(j) = (0..refr.len()).find(|&j| !ref_used[j] && &refr[j] == c) {
            ref_used[j] = true;
            cand_used[i] = true;
            pairs.push((i, j));
        }
    }
    let st = stemmer();
    let ref_stems: Vec<_> = refr.iter().map(|t| st.stem(t).into_owned()).collect();
    for (i, c) in cand.iter().enumerate() {
        if cand_used[i] {
            continue;
        }
        let s = st.stem(c);
        if let Some(j) = (0..refr.len()).find(|&j| !ref_used[j] && ref_stems[j] == s) {
            ref_used[j] = true;
            pairs.push((i, j));
        }
    }
    pairs.sort_unstable();
    pairs
}

/// Reduced METEOR: `F_mean * (1 - 0.5 * (chunks / matches)^3)` with
/// `F_mean = 10PR / (R + 9P)`.
pub fn meteor_lite(candidate: &str, reference: &str) -> f64 {
    let cand = tokenize(candidate).tokens;
    let refr = tokenize(reference).tokens;
    if cand.is_empty() || refr.is_empty() {
        return 0.0;
    }
    let pairs = align(&cand, &refr);
    let m = pairs.len();
    if m == 0 {
        return 0.0;
    }
    let chunks = 1 + pairs
        .windows(2)
        .filter(|w| !(w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1))
        .count();
    let p = m as f64 / cand.len() as f64;
    let r = m as f64 / refr.len() as f64;
    let f_mean = 10.0 * p * r / (r + 9.0 * p);
    let penalty = 0.5 * (chunks as f64 / m as f64).powi(3);
    f_mean * (1.0 - penalty)
}

pub fn cosine_similarity<T: Copy + Into<f64> + PartialEq>(a: &[T], b: &[T]) -> Result<f64, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::DimensionMismatch(a.len(), b.len()));
    }
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x.into(), y.into());
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(MetricsError::ZeroVector);
    }
    if a == b {
        return Ok(1.0);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScores {
    pub index: usize,
    pub prediction: String,
    pub gold: String,
    pub bleu: f64,
    pub rouge_l: f64,
    pub meteor: f64,
    pub cosine: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanScores {
    pub bleu: f64,
    pub rouge_l: f64,
    pub meteor: f64,
    pub cosine: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub split: String,
    pub count: usize,
    pub means: MeanScores,
    pub pairs: Vec<PairScores>,
}

impl MetricReport {
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialisation is infallible")
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), MetricsError> {
        let mut w = csv::Writer::from_path(path).map_err(|e| MetricsError::Io(e.to_string()))?;
        for p in &self.pairs {
            w.serialize(p).map_err(|e| MetricsError::Io(e.to_string()))?;
        }
        w.flush().map_err(|e| MetricsError::Io(e.to_string()))
    }
}

/// Scores every (prediction, gold) pair with all four metrics. Embedder
/// calls are issued per pair through `exec`; output order follows input.
pub fn evaluate_summaries(
    pairs: &[(String, String)],
    embedder: &dyn Embedder,
    split: &str,
    exec: Execution,
) -> Result<MetricReport, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let scored = exec.map_range(pairs.len(), |index| {
        let (pred, gold) = &pairs[index];
        let vecs = embedder
            .embed(&[pred.clone(), gold.clone()])
            .map_err(|source| MetricsError::Backend { pair: index, source })?;
        if vecs.len() != 2 {
            return Err(MetricsError::EmbeddingCount {
                pair: index,
                got: vecs.len(),
            });
        }
        Ok(PairScores {
            index,
            prediction: pred.clone(),
            gold: gold.clone(),
            bleu: bleu(pred, gold),
            rouge_l: rouge_l(pred, gold),
            meteor: meteor_lite(pred, gold),
            cosine: cosine_similarity(&vecs[0], &vecs[1])?,
        })
    });
    let pairs: Vec<PairScores> = scored.into_iter().collect::<Result<_, _>>()?;
    let n = pairs.len() as f64;
    let mean = |f: fn(&PairScores) -> f64| pairs.iter().map(f).sum::<f64>() / n;
    let means = MeanScores {
        bleu: mean(|p| p.bleu),
        rouge_l: mean(|p| p.rouge_l),
        meteor: mean(|p| p.meteor),
        cosine: mean(|p| p.cosine),
    };
    Ok(MetricReport {
        split: split.to_string(),
        count: pairs.len(),
        means,
        pairs,
    })
}
