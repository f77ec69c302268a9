//! UI element attention: tokenisation, detail-token extraction, the per-token
//! attention weights and the weighted next-token loss.

use std::collections::BTreeSet;
use std::path::Path;

use thiserror::Error;

use crate::action_model::Trace;

/// Default English function-word list, one word per line.
pub const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");

#[derive(Debug, Error, PartialEq)]
pub enum AttentionError {
    #[error("length mismatch: {nll} losses but {weights} weights")]
    LengthMismatch { nll: usize, weights: usize },
    #[error("empty token sequence")]
    EmptySequence,
    #[error("invalid per-token loss {value} at position {index}")]
    InvalidLoss { index: usize, value: f64 },
    #[error("lambda must be >= 1, got {0}")]
    InvalidLambda(f64),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DetailTokenSet {
    pub tokens: BTreeSet<String>,
}

impl DetailTokenSet {
    pub fn contains(&self, token: &str) -> bool {
        self.tokens.contains(token)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for DetailTokenSet {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        DetailTokenSet {
            tokens: iter.into_iter().map(Into::into).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttentionConfig {
    pub lambda: f64,
}

impl AttentionConfig {
    pub fn new(lambda: f64) -> Result<Self, AttentionError> {
        if !(lambda >= 1.0) || !lambda.is_finite() {
            return Err(AttentionError::InvalidLambda(lambda));
        }
        Ok(AttentionConfig { lambda })
    }
}

impl Default for AttentionConfig {
    fn default() -> Self {
        AttentionConfig { lambda: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TokenWeights {
    pub weights: Vec<f64>,
}

/// Lowercases and splits into maximal runs of alphanumeric characters.
/// Whitespace and punctuation both act as boundaries and are dropped.
pub fn tokenize(text: &str) -> TokenSequence {
    let tokens = text
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect();
    TokenSequence { tokens }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Stopwords(BTreeSet<String>);

impl Stopwords {
    pub fn parse(text: &str) -> Self {
        Stopwords(
            text.lines()
                .map(|l| l.trim().to_lowercase())
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .collect(),
        )
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for Stopwords {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Stopwords(iter.into_iter().map(|s| s.into().to_lowercase()).collect())
    }
}

/// The shipped stopword list.
pub fn default_stopwords() -> &'static Stopwords {
    static DEFAULT: std::sync::OnceLock<Stopwords> = std::sync::OnceLock::new();
    DEFAULT.get_or_init(|| Stopwords::parse(DEFAULT_STOPWORDS))
}

/// Tokens of every element's inherent and additional content, minus stopwords.
pub fn extract_detail_tokens(trace: &Trace, stopwords: &Stopwords) -> DetailTokenSet {
    let mut tokens = BTreeSet::new();
    for action in &trace.actions {
        let el = &action.element;
        let texts = std::iter::once(el.content.as_str()).chain(el.additional_content.as_deref());
        for text in texts {
            for tok in tokenize(text).tokens {
                if !stopwords.contains(&tok) {
                    tokens.insert(tok);
                }
            }
        }
    }
    DetailTokenSet { tokens }
}

/// Weight `lambda` for summary tokens in the detail set, 1 otherwise.
pub fn build_attention_vector(summary: &TokenSequence, details: &DetailTokenSet, cfg: AttentionConfig) -> TokenWeights {
    let weights = summary
        .tokens
        .iter()
        .map(|t| if details.contains(t) { cfg.lambda } else { 1.0 })
        .collect();
    TokenWeights { weights }
}

/// Weighted mean of per-token negative log-likelihoods:
/// `sum(w_j * nll_j) / sum(w_j)`.
pub fn weighted_next_token_loss(nll: &[f64], weights: &TokenWeights) -> Result<f64, AttentionError> {
    let w = &weights.weights;
    if nll.len() != w.len() {
        return Err(AttentionError::LengthMismatch {
            nll: nll.len(),
            weights: w.len(),
        });
    }
    if nll.is_empty() {
        return Err(AttentionError::EmptySequence);
    }
    if let Some((index, &value)) = nll.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(AttentionError::InvalidLoss { index, value });
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (l, k) in nll.iter().zip(w) {
        num += k * l;
        den += k;
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action_model::{Operation, TraceMetadata, UiElement};
    use proptest::prelude::*;

    fn toks(words: &[&str]) -> TokenSequence {
        TokenSequence {
            tokens: words.iter().map(|w| w.to_string()).collect(),
        }
    }

    #[test]
    fn tokenizer_examples() {
        assert_eq!(tokenize("Add to Cart").tokens, ["add", "to", "cart"]);
        assert_eq!(tokenize("4-star, zip 60606").tokens, ["4", "star", "zip", "60606"]);
        assert!(tokenize("").is_empty());
        assert!(tokenize(" ,.; ").is_empty());
    }

    #[test]
    fn shipped_stopwords() {
        let sw = default_stopwords();
        assert_eq!(sw.len(), 50);
        assert!(sw.contains("the") && sw.contains("to"));
        assert!(!sw.contains("by"));
    }

    #[test]
    fn detail_tokens_from_combobox() {
        let trace = Trace::new(
            "r",
            TraceMetadata::web("x"),
            vec![(
                UiElement::new("combobox", "Reservation type", Some("Pickup")).unwrap(),
                Operation::Select,
            )],
            None,
        )
        .unwrap();
        let sw: Stopwords = ["the", "a", "of", "to", "on", "in"].into_iter().collect();
        let d = extract_detail_tokens(&trace, &sw);
        let expect: DetailTokenSet = ["reservation", "type", "pickup"].into_iter().collect();
        assert_eq!(d, expect);
    }

    #[test]
    fn all_stopword_contents_give_empty_set() {
        let trace = Trace::new(
            "r",
            TraceMetadata::web("x"),
            vec![(UiElement::new("link", "Of The", None).unwrap(), Operation::Click)],
            None,
        )
        .unwrap();
        assert!(extract_detail_tokens(&trace, default_stopwords()).is_empty());
    }

    #[test]
    fn attention_vector_examples() {
        let details: DetailTokenSet = ["campground"].into_iter().collect();
        let s = toks(&["find", "a", "campground"]);
        let w = build_attention_vector(&s, &details, AttentionConfig::new(2.0).unwrap());
        assert_eq!(w.weights, [1.0, 1.0, 2.0]);
        let w1 = build_attention_vector(&s, &details, AttentionConfig::new(1.0).unwrap());
        assert_eq!(w1.weights, [1.0; 3]);
        let w0 = build_attention_vector(&s, &DetailTokenSet::default(), AttentionConfig::default());
        assert_eq!(w0.weights, [1.0; 3]);
    }

    #[test]
    fn lambda_below_one_rejected() {
        assert!(AttentionConfig::new(0.5).is_err());
        assert!(AttentionConfig::new(f64::NAN).is_err());
    }

    #[test]
    fn loss_examples() {
        let w = |v: &[f64]| TokenWeights { weights: v.to_vec() };
        assert_eq!(weighted_next_token_loss(&[0.5, 0.5], &w(&[1.0, 1.0])).unwrap(), 0.5);
        assert_eq!(weighted_next_token_loss(&[0.0], &w(&[2.0])).unwrap(), 0.0);
        let l = weighted_next_token_loss(&[1.0, 0.5], &w(&[1.0, 2.0])).unwrap();
        assert!((l - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(
            weighted_next_token_loss(&[1.0], &w(&[1.0, 1.0])),
            Err(AttentionError::LengthMismatch { nll: 1, weights: 2 })
        );
        assert_eq!(
            weighted_next_token_loss(&[], &w(&[])),
            Err(AttentionError::EmptySequence)
        );
    }

    proptest! {
        #[test]
        fn monotone_in_detail_and_plain_tokens(
            nll in proptest::collection::vec(0.0f64..5.0, 2..20),
            lambda in 1.0f64..4.0,
            delta in 0.01f64..1.0,
        ) {
            // position 0 is a detail token, position 1 is not
            let mut weights = vec![1.0; nll.len()];
            weights[0] = lambda;
            let tw = TokenWeights { weights: weights.clone() };
            let base = weighted_next_token_loss(&nll, &tw).unwrap();

            let mut bumped = nll.clone();
            bumped[0] += delta;
            prop_assert!(weighted_next_token_loss(&bumped, &tw).unwrap() > base);

            let mut plain = nll.clone();
            plain[1] += delta;
            let total: f64 = weights.iter().sum();
            let got = weighted_next_token_loss(&plain, &tw).unwrap() - base;
            prop_assert!((got - delta / total).abs() < 1e-12);
        }

        #[test]
        fn attention_vector_is_permutation_equivariant(
            words in proptest::collection::vec("[a-d]{1,2}", 1..12),
            rot in 0usize..12,
        ) {
            let details: DetailTokenSet = ["a", "bc", "d"].into_iter().collect();
            let cfg = AttentionConfig::default();
            let s = TokenSequence { tokens: words.clone() };
            let w = build_attention_vector(&s, &details, cfg).weights;
            let mut rotated = words.clone();
            let r = rot % words.len();
            rotated.rotate_left(r);
            let mut expect = w.clone();
            expect.rotate_left(r);
            let got = build_attention_vector(&TokenSequence { tokens: rotated }, &details, cfg).weights;
            prop_assert_eq!(got, expect);
        }
    }
}
