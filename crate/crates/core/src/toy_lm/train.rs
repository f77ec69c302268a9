use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{ModelConfig, ToyLmModel};
use super::vocab::{build_vocab, Vocab, BOS, EOS};
use super::{ToyLmError, TrainingPair};
use crate::attention::{build_attention_vector, AttentionConfig, TokenWeights};
use crate::exec::Execution;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lambda: f64,
    pub learning_rate: f64,
    /// Floor of the cosine annealing schedule.
    pub min_learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub dim: usize,
    pub window: usize,
    pub ffn_dim: usize,
    pub max_vocab: usize,
    pub tied_output: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda: 2.0,
            learning_rate: 1e-3,
            min_learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.95,
            epsilon: 1e-8,
            epochs: 15,
            batch_size: 16,
            seed: 42,
            dim: 32,
            window: 16,
            ffn_dim: 64,
            max_vocab: 512,
            tied_output: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ToyLmError> {
        let bad = |m: &str| Err(ToyLmError::Config(m.to_string()));
        if !(self.beta1 > 0.0 && self.beta1 < 1.0) || !(self.beta2 > 0.0 && self.beta2 < 1.0) {
            return bad("beta1 and beta2 must lie in (0, 1)");
        }
        if self.epochs == 0 {
            return bad("epochs must be >= 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if !(self.learning_rate > 0.0)
            || !(self.min_learning_rate >= 0.0)
            || self.min_learning_rate > self.learning_rate
        {
            return bad("need 0 <= min_learning_rate <= learning_rate and learning_rate > 0");
        }
        AttentionConfig::new(self.lambda)?;
        Ok(())
    }

    pub fn model_config(&self, vocab_size: usize) -> ModelConfig {
        ModelConfig {
            vocab_size,
            dim: self.dim,
            window: self.window,
            ffn_dim: self.ffn_dim,
            tied_output: self.tied_output,
        }
    }

    /// Learning rate at `step` of `total` under cosine annealing.
    pub fn learning_rate_at(&self, step: usize, total: usize) -> f64 {
        let progress = if total <= 1 {
            0.0
        } else {
            step as f64 / (total - 1) as f64
        };
        self.min_learning_rate
            + 0.5 * (self.learning_rate - self.min_learning_rate) * (1.0 + (std::f64::consts::PI * progress).cos())
    }
}

/// Encoded teacher-forcing example: model input, (position, next id) loss
/// targets and their attention weights.
struct Encoded {
    input: Vec<u32>,
    targets: Vec<(usize, u32)>,
    weights: TokenWeights,
}

fn encode(vocab: &Vocab, pair: &TrainingPair, lambda: f64) -> Encoded {
    let mut seq = Vec::with_capacity(pair.prompt_tokens.len() + pair.target_tokens.len() + 2);
    seq.push(BOS);
    seq.extend(vocab.encode(&pair.prompt_tokens.tokens));
    let first = seq.len();
    seq.extend(vocab.encode(&pair.target_tokens.tokens));
    seq.push(EOS);
    let targets = (first..seq.len()).map(|i| (i - 1, seq[i])).collect();
    seq.pop();
    let mut weights = build_attention_vector(&pair.target_tokens, &pair.detail_set, AttentionConfig { lambda });
    weights.weights.push(1.0);
    Encoded {
        input: seq,
        targets,
        weights,
    }
}

/// Weighted teacher-forced loss of one pair.
pub fn pair_loss(model: &ToyLmModel, vocab: &Vocab, pair: &TrainingPair, lambda: f64) -> Result<f64, ToyLmError> {
    let e = encode(vocab, pair, lambda);
    Ok(model.weighted_nll(&e.input, &e.targets, &e.weights, None)?.0)
}

/// Unweighted mean cross-entropy over the target tokens and EOS, computed
/// straight from the forward log-probabilities.
pub fn plain_loss(model: &ToyLmModel, vocab: &Vocab, pair: &TrainingPair) -> Result<f64, ToyLmError> {
    let mut ids = vec![BOS];
    ids.extend(vocab.encode(&pair.prompt_tokens.tokens));
    let first = ids.len();
    ids.extend(vocab.encode(&pair.target_tokens.tokens));
    ids.push(EOS);
    let rows = model.forward(&ids[..ids.len() - 1])?;
    let n = ids.len() - first;
    let total: f64 = (first..ids.len()).map(|i| -rows[i - 1][ids[i] as usize]).sum();
    Ok(total / n as f64)
}

fn loss_and_grad(
    model: &ToyLmModel,
    vocab: &Vocab,
    pair: &TrainingPair,
    lambda: f64,
    grad: &mut [f64],
) -> Result<f64, ToyLmError> {
    let e = encode(vocab, pair, lambda);
    Ok(model.weighted_nll(&e.input, &e.targets, &e.weights, Some(grad))?.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutput {
    pub model: ToyLmModel,
    pub vocab: Vocab,
    /// Mean per-pair training loss of each epoch.
    pub loss_history: Vec<f64>,
}

/// Trains from scratch with Adam and a per-step cosine learning-rate
/// schedule. Single-threaded and bitwise reproducible for a given
/// `(corpus, cfg)`.
pub fn train(corpus: &[TrainingPair], cfg: &TrainConfig) -> Result<TrainOutput, ToyLmError> {
    cfg.validate()?;
    let vocab = build_vocab(corpus, cfg.max_vocab)?;
    train_with_vocab(corpus, vocab, cfg)
}

pub fn train_with_vocab(corpus: &[TrainingPair], vocab: Vocab, cfg: &TrainConfig) -> Result<TrainOutput, ToyLmError> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(ToyLmError::EmptyCorpus);
    }
    for p in corpus {
        let len = p.prompt_tokens.len() + p.target_tokens.len() + 1;
        if len > cfg.window {
            return Err(ToyLmError::ContextOverflow {
                len,
                window: cfg.window,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = ToyLmModel::init(cfg.model_config(vocab.len()), &mut rng)?;
    let n = model.n_params();
    let mut m = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let steps_per_epoch = corpus.len().div_ceil(cfg.batch_size);
    let total_steps = steps_per_epoch * cfg.epochs;
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut step = 0usize;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for &i in batch {
                epoch_loss += loss_and_grad(&model, &vocab, &corpus[i], cfg.lambda, &mut grad)?;
            }
            let inv = 1.0 / batch.len() as f64;
            step += 1;
            let lr = cfg.learning_rate_at(step - 1, total_steps);
            let bc1 = 1.0 - cfg.beta1.powi(step as i32);
            let bc2 = 1.0 - cfg.beta2.powi(step as i32);
            for j in 0..n {
                let g = grad[j] * inv;
                m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g;
                v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g * g;
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                model.params[j] -= lr * m_hat / (v_hat.sqrt() + cfg.epsilon);
            }
        }
        let mean = epoch_loss / corpus.len() as f64;
        if !mean.is_finite() || model.params.iter().any(|p| !p.is_finite()) {
            return Err(ToyLmError::Divergence { epoch: epoch + 1 });
        }
        log::debug!("epoch {} loss {mean:.6}", epoch + 1);
        history.push(mean);
    }
    Ok(TrainOutput {
        model,
        vocab,
        loss_history: history,
    })
}

/// Largest relative error between the analytic gradient and central finite
/// differences (step 1e-5) over up to 100 randomly sampled parameters:
/// `|g_a - g_fd| / max(1e-8, |g_a| + |g_fd|)`.
pub fn gradient_check(
    model: &ToyLmModel,
    vocab: &Vocab,
    pair: &TrainingPair,
    lambda: f64,
    seed: u64,
) -> Result<f64, ToyLmError> {
    const STEP: f64 = 1e-5;
    let mut analytic = vec![0.0; model.n_params()];
    loss_and_grad(model, vocab, pair, lambda, &mut analytic)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample = rand::seq::index::sample(&mut rng, model.n_params(), model.n_params().min(100));
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for j in sample.iter() {
        let orig = probe.params[j];
        probe.params[j] = orig + STEP;
        let up = pair_loss(&probe, vocab, pair, lambda)?;
        probe.params[j] = orig - STEP;
        let down = pair_loss(&probe, vocab, pair, lambda)?;
        probe.params[j] = orig;
        let fd = (up - down) / (2.0 * STEP);
        let ga = analytic[j];
        let rel = (ga - fd).abs() / (ga.abs() + fd.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    Ok(worst)
}

/// Analytic gradient of the weighted pair loss.
pub fn analytic_gradient(
    model: &ToyLmModel,
    vocab: &Vocab,
    pair: &TrainingPair,
    lambda: f64,
) -> Result<Vec<f64>, ToyLmError> {
    let mut g = vec![0.0; model.n_params()];
    loss_and_grad(model, vocab, pair, lambda, &mut g)?;
    Ok(g)
}

/// Greedy (argmax) continuation of `BOS + prompt`, stopping at EOS, after
/// `max_len` tokens, or when the context window is full.
pub fn greedy_decode(
    model: &ToyLmModel,
    vocab: &Vocab,
    prompt: &[String],
    max_len: usize,
) -> Result<Vec<String>, ToyLmError> {
    let mut ctx = vec![BOS];
    ctx.extend(vocab.encode(prompt));
    let mut out = Vec::new();
    while out.len() < max_len && ctx.len() <= model.config.window {
        let rows = model.forward(&ctx)?;
        let last = rows.last().expect("non-empty context");
        let mut best = 0usize;
        for (i, &lp) in last.iter().enumerate() {
            if lp > last[best] {
                best = i;
            }
        }
        let id = best as u32;
        if id == EOS {
            break;
        }
        out.push(vocab.token(id).to_string());
        ctx.push(id);
    }
    Ok(out)
}

/// Fraction of the pair's distinct target detail tokens present in
/// `decoded`; `None` when the target has no detail tokens.
pub fn recall_of_decode(decoded: &[String], pair: &TrainingPair) -> Option<f64> {
    let wanted = pair.target_details();
    if wanted.is_empty() {
        return None;
    }
    let hits = wanted.iter().filter(|w| decoded.iter().any(|d| d == *w)).count();
    Some(hits as f64 / wanted.len() as f64)
}

/// Mean over pairs of the fraction of the target's distinct detail tokens
/// that appear in the greedy decode (max length = target length + 8).
pub fn detail_recall(model: &ToyLmModel, vocab: &Vocab, eval_pairs: &[TrainingPair]) -> Result<f64, ToyLmError> {
    if eval_pairs.is_empty() {
        return Err(ToyLmError::EmptyCorpus);
    }
    let mut total = 0.0;
    for (index, pair) in eval_pairs.iter().enumerate() {
        let decoded = greedy_decode(model, vocab, &pair.prompt_tokens.tokens, pair.target_tokens.len() + 8)?;
        total += recall_of_decode(&decoded, pair).ok_or(ToyLmError::NoDetailTokens { index })?;
    }
    Ok(total / eval_pairs.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRun {
    pub lambda: f64,
    pub seed: u64,
    pub recall: f64,
    pub loss_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub runs: Vec<BenchmarkRun>,
}

impl BenchmarkReport {
    pub fn mean_recall(&self, lambda: f64) -> f64 {
        let rs: Vec<f64> = self
            .runs
            .iter()
            .filter(|r| r.lambda == lambda)
            .map(|r| r.recall)
            .collect();
        rs.iter().sum::<f64>() / rs.len() as f64
    }
}

/// Trains one model per (lambda, seed) combination and measures detail
/// recall on `eval`. Runs are independent, so `exec` may spread them across
/// threads; each training run itself stays single-threaded.
pub fn lambda_benchmark(
    train_set: &[TrainingPair],
    eval: &[TrainingPair],
    base: &TrainConfig,
    lambdas: &[f64],
    seeds: &[u64],
    exec: Execution,
) -> Result<BenchmarkReport, ToyLmError> {
    let jobs: Vec<(f64, u64)> = lambdas
        .iter()
        .flat_map(|&l| seeds.iter().map(move |&s| (l, s)))
        .collect();
    let runs = exec.map(&jobs, |&(lambda, seed)| {
        let cfg = TrainConfig {
            lambda,
            seed,
            ..base.clone()
        };
        let out = train(train_set, &cfg)?;
        let recall = detail_recall(&out.model, &out.vocab, eval)?;
        Ok(BenchmarkRun {
            lambda,
            seed,
            recall,
            loss_history: out.loss_history,
        })
    });
    Ok(BenchmarkReport {
        runs: runs.into_iter().collect::<Result<_, ToyLmError>>()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attention::{tokenize, DetailTokenSet};
    use crate::toy_lm::{synthetic_corpus, SyntheticSpec};

    fn small_cfg(lambda: f64) -> TrainConfig {
        TrainConfig {
            lambda,
            dim: 8,
            window: 8,
            ffn_dim: 16,
            max_vocab: 20,
            ..Default::default()
        }
    }

    fn pair(p: &str, t: &str, details: &[&str]) -> TrainingPair {
        TrainingPair::new(tokenize(p), tokenize(t), details.iter().copied().collect()).unwrap()
    }

    fn small_model(cfg: &TrainConfig, vocab: &Vocab, seed: u64) -> ToyLmModel {
        ToyLmModel::init(cfg.model_config(vocab.len()), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    #[test]
    fn config_rules() {
        assert!(TrainConfig {
            epochs: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            beta2: 1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        let c = TrainConfig::default();
        assert_eq!((c.beta1, c.beta2, c.batch_size), (0.9, 0.95, 16));
        assert_eq!(c.learning_rate_at(0, 10), c.learning_rate);
        assert!((c.learning_rate_at(9, 10) - c.min_learning_rate).abs() < 1e-18);
    }

    #[test]
    fn epochs_zero_is_rejected() {
        let corpus = vec![pair("a b", "c", &[])];
        let cfg = TrainConfig {
            epochs: 0,
            ..small_cfg(1.0)
        };
        assert!(matches!(train(&corpus, &cfg), Err(ToyLmError::Config(_))));
    }

    #[test]
    fn gradient_check_small_model() {
        let p = pair("open the shop", "buy red shoes now", &["red", "shoes"]);
        for lambda in [1.0, 2.0, 3.0] {
            let cfg = small_cfg(lambda);
            let vocab = build_vocab(std::slice::from_ref(&p), 20).unwrap();
            let model = small_model(&cfg, &vocab, 7);
            let err = gradient_check(&model, &vocab, &p, lambda, 11).unwrap();
            assert!(err < 1e-4, "lambda {lambda}: {err}");
        }
    }

    #[test]
    fn lambda_irrelevant_without_detail_tokens() {
        let p = pair("open the shop", "buy things", &["zebra"]);
        let cfg = small_cfg(1.0);
        let vocab = build_vocab(std::slice::from_ref(&p), 20).unwrap();
        let model = small_model(&cfg, &vocab, 3);
        assert_eq!(
            analytic_gradient(&model, &vocab, &p, 1.0).unwrap(),
            analytic_gradient(&model, &vocab, &p, 2.0).unwrap()
        );
    }

    #[test]
    fn zero_output_projection_gives_uniform_loss() {
        let p = pair("open the shop", "buy red shoes", &["red"]);
        let cfg = small_cfg(2.0);
        let vocab = build_vocab(std::slice::from_ref(&p), 20).unwrap();
        let mut model = small_model(&cfg, &vocab, 5);
        let l = model.layout();
        let nv = model.config.vocab_size;
        let d = model.config.dim;
        model.params[l.out..l.out + nv * d].iter_mut().for_each(|x| *x = 0.0);
        model.params[l.out_bias..l.out_bias + nv]
            .iter_mut()
            .for_each(|x| *x = 0.0);
        let loss = pair_loss(&model, &vocab, &p, 2.0).unwrap();
        assert!((loss - (nv as f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn weighted_path_matches_plain_path_at_lambda_one() {
        let p = pair("open the shop", "buy red shoes", &["red", "shoes"]);
        let cfg = small_cfg(1.0);
        let vocab = build_vocab(std::slice::from_ref(&p), 20).unwrap();
        let model = small_model(&cfg, &vocab, 9);
        let a = pair_loss(&model, &vocab, &p, 1.0).unwrap();
        let b = plain_loss(&model, &vocab, &p).unwrap();
        assert!((a - b).abs() <= 4.0 * f64::EPSILON * b.abs(), "{a} vs {b}");
    }

    #[test]
    fn training_is_reproducible_and_decreasing() {
        let spec = SyntheticSpec::default();
        let corpus = synthetic_corpus(&spec, 60, 1);
        let cfg = TrainConfig {
            epochs: 4,
            lambda: 1.0,
            ..Default::default()
        };
        let a = train(&corpus, &cfg).unwrap();
        let b = train(&corpus, &cfg).unwrap();
        assert_eq!(a.loss_history, b.loss_history);
        assert_eq!(a.model.params, b.model.params);
        assert!(a.loss_history[3] < a.loss_history[0]);
    }

    #[test]
    fn recall_edges() {
        let p = pair("go", "buy red", &["red"]);
        let vocab = build_vocab(std::slice::from_ref(&p), 20).unwrap();
        let model = small_model(&small_cfg(1.0), &vocab, 1);
        let r = detail_recall(&model, &vocab, &[p]).unwrap();
        assert!((0.0..=1.0).contains(&r));
        let none = pair("go", "buy", &["red"]);
        assert_eq!(
            detail_recall(&model, &vocab, &[none]),
            Err(ToyLmError::NoDetailTokens { index: 0 })
        );
    }

    #[test]
    fn recall_of_exact_and_disjoint_decodes() {
        let p = pair("go", "buy red shoes", &["red", "shoes", "hat"]);
        assert_eq!(recall_of_decode(&p.target_tokens.tokens, &p), Some(1.0));
        assert_eq!(recall_of_decode(&["buy".to_string()], &p), Some(0.0));
        assert_eq!(recall_of_decode(&["red".to_string()], &p), Some(0.5));
        let none = TrainingPair::new(tokenize("go"), tokenize("buy"), DetailTokenSet::default()).unwrap();
        assert_eq!(recall_of_decode(&[], &none), None);
    }
}
