//! Hierarchical summarisation of UI interaction traces into natural-language
//! intentions, with the training loss, evaluation metrics and the downstream
//! next-action, behaviour-synonym and retrieval tooling built on top.

// Negated float comparisons are used on purpose so that NaN fails validation.
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::large_enum_variant
)]

pub mod action_model;
pub mod attention;
pub mod backends;
pub mod exec;
pub mod metrics;
pub mod next_action;
pub mod pipeline;
pub mod prompting;
pub mod retrieval;
pub mod synonyms;
pub mod toy_lm;
