use std::collections::HashMap;

use super::{ToyLmError, TrainingPair};

pub const PAD: u32 = 0;
pub const BOS: u32 = 1;
pub const EOS: u32 = 2;
pub const UNK: u32 = 3;
pub const RESERVED: [&str; 4] = ["<pad>", "<bos>", "<eos>", "<unk>"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    id_to_token: Vec<String>,
    token_to_id: HashMap<String, u32>,
}

impl Vocab {
    /// Builds a vocabulary from an explicit token list (reserved tokens are
    /// prepended and must not appear in `tokens`).
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self, ToyLmError> {
        let mut id_to_token: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        id_to_token.extend(tokens);
        let mut token_to_id = HashMap::with_capacity(id_to_token.len());
        for (i, t) in id_to_token.iter().enumerate() {
            if token_to_id.insert(t.clone(), i as u32).is_some() {
                return Err(ToyLmError::Checkpoint(format!("duplicate vocabulary token {t:?}")));
            }
        }
        Ok(Vocab {
            id_to_token,
            token_to_id,
        })
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_token.is_empty()
    }

    pub fn id(&self, token: &str) -> u32 {
        self.token_to_id.get(token).copied().unwrap_or(UNK)
    }

    pub fn token(&self, id: u32) -> &str {
        self.id_to_token
            .get(id as usize)
            .map_or(RESERVED[UNK as usize], String::as_str)
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<u32> {
        tokens.iter().map(|t| self.id(t.as_ref())).collect()
    }

    /// Non-reserved tokens in id order.
    pub fn tokens(&self) -> &[String] {
        &self.id_to_token[RESERVED.len()..]
    }
}

/// Keeps the `max_size - 4` most frequent tokens over prompts and targets;
/// equal counts are ordered lexicographically.
pub fn build_vocab(corpus: &[TrainingPair], max_size: usize) -> Result<Vocab, ToyLmError> {
    if corpus.is_empty() {
        return Err(ToyLmError::EmptyCorpus);
    }
    if max_size < RESERVED.len() {
        return Err(ToyLmError::Config(format!(
            "vocabulary size {max_size} leaves no room for the {} reserved tokens",
            RESERVED.len()
        )));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for pair in corpus {
        for t in pair.prompt_tokens.tokens.iter().chain(&pair.target_tokens.tokens) {
            *counts.entry(t.as_str()).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().filter(|(t, _)| !RESERVED.contains(t)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    ranked.truncate(max_size - RESERVED.len());
    Vocab::from_tokens(ranked.into_iter().map(|(t, _)| t.to_string()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attention::{tokenize, DetailTokenSet};

    fn pair(p: &str, t: &str) -> TrainingPair {
        TrainingPair::new(tokenize(p), tokenize(t), DetailTokenSet::default()).unwrap()
    }

    #[test]
    fn frequency_cutoff() {
        let corpus = vec![pair("a a b", "a b c")];
        let v = build_vocab(&corpus, 6).unwrap();
        assert_eq!(v.tokens(), ["a", "b"]);
        assert_eq!(v.id("c"), UNK);
        assert_eq!(v.id("a"), 4);
    }

    #[test]
    fn lexicographic_tie_break() {
        let corpus = vec![pair("zeta alpha", "mid")];
        let v = build_vocab(&corpus, 5).unwrap();
        assert_eq!(v.tokens(), ["alpha"]);
    }

    #[test]
    fn unseen_is_unk_and_errors() {
        let v = build_vocab(&[pair("x", "y")], 10).unwrap();
        assert_eq!(v.encode(&tokenize("never-seen").tokens), vec![UNK, UNK]);
        assert_eq!(v.token(EOS), "<eos>");
        assert!(matches!(build_vocab(&[], 10), Err(ToyLmError::EmptyCorpus)));
    }
}
