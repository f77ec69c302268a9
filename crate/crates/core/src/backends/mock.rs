use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{BackendError, Embedder, GenerationParams, TextGenerator};
use crate::attention::tokenize;
use crate::prompting::PromptText;

pub const UNMATCHED: &str = "UNMATCHED";
pub const MOCK_DIMENSION: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockRule {
    pub trigger: String,
    pub response: String,
}

impl MockRule {
    pub fn new(trigger: &str, response: &str) -> Self {
        MockRule {
            trigger: trigger.into(),
            response: response.into(),
        }
    }
}

/// Deterministic backend: first rule whose trigger occurs in the prompt wins.
#[derive(Debug, Clone, Default)]
pub struct MockBackend {
    rules: Vec<MockRule>,
}

impl MockBackend {
    pub fn new(rules: Vec<MockRule>) -> Self {
        MockBackend { rules }
    }

    pub fn from_json(json: &str) -> Result<Self, BackendError> {
        let rules = serde_json::from_str(json).map_err(|e| BackendError::Config(format!("mock rules: {e}")))?;
        Ok(MockBackend { rules })
    }

    pub fn from_file(path: &Path) -> Result<Self, BackendError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| BackendError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn rules(&self) -> &[MockRule] {
        &self.rules
    }

    /// Hashed bag-of-words vector, L2-normalised.
    pub fn embed_one(text: &str) -> Vec<f64> {
        let mut v = vec![0.0; MOCK_DIMENSION];
        let tokens = tokenize(text).tokens;
        for tok in &tokens {
            let digest = Sha256::digest(tok.as_bytes());
            let bucket = u64::from_le_bytes(digest[..8].try_into().unwrap()) as usize % MOCK_DIMENSION;
            let sign = if digest[8] & 1 == 0 { 1.0 } else { -1.0 };
            v[bucket] += sign;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            // no tokens, or perfect cancellation
            v.iter_mut().for_each(|x| *x = 0.0);
            v[0] = 1.0;
            return v;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        v
    }
}

impl TextGenerator for MockBackend {
    fn generate(&self, prompt: &PromptText, _params: &GenerationParams) -> Result<String, BackendError> {
        Ok(self
            .rules
            .iter()
            .find(|r| prompt.text.contains(&r.trigger))
            .map_or_else(|| UNMATCHED.to_string(), |r| r.response.clone()))
    }
}

impl Embedder for MockBackend {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, BackendError> {
        Ok(texts.iter().map(|t| Self::embed_one(t)).collect())
    }

    fn fingerprint(&self) -> String {
        format!("mock:hashed-bow-{MOCK_DIMENSION}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::cosine_similarity;
    use crate::prompting::PromptKind;

    fn prompt(text: &str) -> PromptText {
        PromptText {
            text: text.into(),
            kind: PromptKind::Subgoal,
        }
    }

    #[test]
    fn first_matching_rule_wins() {
        let m = MockBackend::new(vec![
            MockRule::new("Reservation type", "- Set reservation type [actions 1..2]"),
            MockRule::new("type", "second"),
        ]);
        let p = GenerationParams::default();
        assert_eq!(
            m.generate(&prompt("Select from Reservation type"), &p).unwrap(),
            "- Set reservation type [actions 1..2]"
        );
        assert_eq!(m.generate(&prompt("nothing here"), &p).unwrap(), UNMATCHED);
    }

    #[test]
    fn embeddings_are_normalised_and_deterministic() {
        let m = MockBackend::default();
        let v = m.embed(&["x".into(), "x".into(), "".into()]).unwrap();
        assert_eq!(v[0], v[1]);
        for e in &v {
            assert_eq!(e.len(), MOCK_DIMENSION);
            let n: f64 = e.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-9);
        }
        assert_eq!(v[2][0], 1.0);
    }

    #[test]
    fn embedding_geometry() {
        let a = MockBackend::embed_one("find a campground");
        let b = MockBackend::embed_one("find a campground");
        let c = MockBackend::embed_one("unrelated zebra text");
        assert_eq!(cosine_similarity(&a, &b).unwrap(), 1.0);
        assert!(cosine_similarity(&a, &c).unwrap() < 0.5);
    }

    #[test]
    fn rules_file_format() {
        let m = MockBackend::from_json(r#"[{"trigger": "a", "response": "b"}]"#).unwrap();
        assert_eq!(m.rules(), &[MockRule::new("a", "b")]);
        assert!(MockBackend::from_json("{").is_err());
    }
}
