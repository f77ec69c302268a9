use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{TrainConfig, TrainingPair};
use crate::attention::{tokenize, DetailTokenSet};

/// Vocabulary of the templated synthetic corpus.
///
/// Prompts read `<verb> <c1> <c2> on <site>` and targets read
/// `intent user wants to <phrase> <c1> <c2>`, where `c1`, `c2` are distinct
/// content words and form the pair's detail set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticSpec {
    pub verbs: Vec<(String, String)>,
    pub contents: Vec<String>,
    pub sites: Vec<String>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        let verbs = [
            ("select", "choose"),
            ("type", "enter"),
            ("click", "open"),
            ("swipe", "browse"),
        ];
        let contents = [
            "paris", "london", "tokyo", "berlin", "madrid", "oslo", "rome", "dublin", "lisbon", "vienna", "shoes",
            "jacket", "shirt", "scarf", "hat", "gloves", "boots", "socks", "dress", "coat", "pizza", "sushi", "tacos",
            "ramen", "salad", "burger", "pasta", "curry", "soup", "bagel", "red", "blue", "green", "black", "white",
            "large", "small", "cheap", "vegan", "organic",
        ];
        let sites = ["uniqlo", "amazon", "expedia", "yelp", "ikea", "target"];
        SyntheticSpec {
            verbs: verbs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
            contents: contents.iter().map(|s| s.to_string()).collect(),
            sites: sites.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Generates `n` seeded pairs from `spec`.
pub fn synthetic_corpus(spec: &SyntheticSpec, n: usize, seed: u64) -> Vec<TrainingPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let (verb, phrase) = &spec.verbs[rng.gen_range(0..spec.verbs.len())];
            let picked: Vec<&String> = spec.contents.choose_multiple(&mut rng, 2).collect();
            let site = &spec.sites[rng.gen_range(0..spec.sites.len())];
            let prompt = format!("{verb} {} {} on {site}", picked[0], picked[1]);
            let target = format!("intent user wants to {phrase} {} {}", picked[0], picked[1]);
            let details: DetailTokenSet = picked.iter().map(|s| s.as_str()).collect();
            TrainingPair::new(tokenize(&prompt), tokenize(&target), details).expect("non-empty target")
        })
        .collect()
}

/// The shipped benchmark split: 300 training pairs (seed 42) and 100
/// held-out evaluation pairs (seed 7).
pub fn benchmark_corpus() -> (Vec<TrainingPair>, Vec<TrainingPair>) {
    let spec = SyntheticSpec::default();
    (synthetic_corpus(&spec, 300, 42), synthetic_corpus(&spec, 100, 7))
}

/// Training settings for the lambda benchmark. The step size is raised from
/// the default so that 15 epochs land between "copies nothing" and
/// "copies everything", where the loss weighting is observable.
pub fn benchmark_train_config() -> TrainConfig {
    TrainConfig {
        learning_rate: 3e-3,
        epochs: 15,
        ..TrainConfig::default()
    }
}

pub const BENCHMARK_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
