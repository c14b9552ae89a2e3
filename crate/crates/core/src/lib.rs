//! Bangla conversational NLU: corpus formats, tokenizers, featurizers, a
//! joint intent/entity classifier, dialogue policies and evaluation.

pub mod archive;
pub mod corpus;
pub mod dialogue;
pub mod diet;
pub mod evaluation;
pub mod exec;
pub mod featurize;
pub mod nn;
pub mod pipeline;
pub mod post;
pub mod project;
pub mod tokenize;
