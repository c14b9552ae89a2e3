use std::collections::{BTreeMap, HashSet};
use std::fmt::Write;

use super::block::{self, quote_if_needed, syntax, Node};
use super::{CorpusError, TrainingExample, TrainingSet};

/// Parses an nlu file: `nlu:` list of `- intent:` / `- synonym:` blocks.
pub fn parse_nlu_file(contents: &str) -> Result<TrainingSet, CorpusError> {
    let root = block::parse(contents)?;
    check_top_keys(&root, &["nlu", "version"])?;
    let blocks = match root.get("nlu") {
        Some(node) => node.as_list()?,
        None => return Err(syntax(1, "missing top-level `nlu:` list")),
    };

    let mut examples = Vec::new();
    let mut synonyms = BTreeMap::new();
    let mut seen_intents = HashSet::new();
    for item in blocks {
        let line = item.line();
        if let Some(intent) = item.get("intent") {
            check_keys(item, &["intent", "examples"])?;
            let intent = intent.as_scalar()?.trim().to_string();
            if !seen_intents.insert(intent.clone()) {
                return Err(CorpusError::DuplicateIntentBlock { intent, line });
            }
            let lines = item.get("examples").map(Node::as_list).transpose()?.unwrap_or(&[]);
            if lines.is_empty() {
                return Err(CorpusError::IntentWithNoExamples { intent, line });
            }
            for ex in lines {
                let example = TrainingExample::from_markup(ex.as_scalar()?, &intent)?;
                if example.text.trim().is_empty() {
                    return Err(CorpusError::EmptyExample { line: ex.line() });
                }
                examples.push(example);
            }
        } else if let Some(canonical) = item.get("synonym") {
            check_keys(item, &["synonym", "examples"])?;
            let canonical = canonical.as_scalar()?.trim().to_string();
            let variants = item.get("examples").map(Node::as_list).transpose()?.unwrap_or(&[]);
            for v in variants {
                synonyms.insert(v.as_scalar()?.trim().to_string(), canonical.clone());
            }
        } else {
            return Err(syntax(line, "expected `- intent:` or `- synonym:` block"));
        }
    }
    Ok(TrainingSet::from_examples(examples, synonyms))
}

fn check_top_keys(root: &Node, allowed: &[&str]) -> Result<(), CorpusError> {
    match root {
        Node::Empty { .. } => Ok(()),
        Node::Map { .. } => check_keys(root, allowed),
        other => Err(syntax(other.line(), "expected a mapping at top level")),
    }
}

pub(super) fn check_keys(node: &Node, allowed: &[&str]) -> Result<(), CorpusError> {
    for (key, value) in node.as_map()? {
        if !allowed.contains(&key.as_str()) {
            return Err(syntax(value.line(), format!("unexpected key `{key}`")));
        }
    }
    Ok(())
}

/// Writes a training set back out. Intent blocks appear in order of first
/// occurrence so that parsing the output reproduces the example order.
pub fn write_nlu_file(ts: &TrainingSet) -> String {
    let mut order: Vec<&str> = Vec::new();
    for ex in &ts.examples {
        if !order.contains(&ex.intent.as_str()) {
            order.push(&ex.intent);
        }
    }
    let mut out = String::from("nlu:\n");
    for intent in order {
        let _ = writeln!(out, "- intent: {intent}");
        out.push_str("  examples:\n");
        for ex in ts.examples_for(intent) {
            let _ = writeln!(out, "  - {}", quote_if_needed(&ex.markup()));
        }
    }
    let mut by_canonical: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (variant, canonical) in &ts.synonyms {
        by_canonical.entry(canonical).or_default().push(variant);
    }
    for (canonical, variants) in by_canonical {
        let _ = writeln!(out, "- synonym: {}", quote_if_needed(canonical));
        out.push_str("  examples:\n");
        for v in variants {
            let _ = writeln!(out, "  - {}", quote_if_needed(v));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "\
nlu:
- intent: greet
  examples:
  - hello
  - ami [ঢাকা](city) theke
- intent: bye
  examples:
  - bye
  - abar dekha hobe
- synonym: dhk
  examples:
  - dhaka
  - ঢাকা
";

    #[test]
    fn counts_and_ordering() {
        let ts = parse_nlu_file(SMALL).unwrap();
        assert_eq!(ts.examples.len(), 4);
        assert_eq!(ts.intents, vec!["bye", "greet"]);
        assert_eq!(ts.entity_types, vec!["city"]);
        assert_eq!(ts.synonyms["dhaka"], "dhk");
        assert_eq!(ts.synonyms["ঢাকা"], "dhk");
    }

    #[test]
    fn empty_intent_block() {
        let err = parse_nlu_file("nlu:\n- intent: greet\n  examples:\n- intent: bye\n  examples:\n  - bye\n")
            .unwrap_err();
        assert!(matches!(err, CorpusError::IntentWithNoExamples { ref intent, .. } if intent == "greet"));
    }

    #[test]
    fn duplicate_intent_block() {
        let err = parse_nlu_file("nlu:\n- intent: a\n  examples:\n  - x\n- intent: a\n  examples:\n  - y\n")
            .unwrap_err();
        assert!(matches!(err, CorpusError::DuplicateIntentBlock { line: 5, .. }));
    }

    #[test]
    fn syntax_error_has_line() {
        let err = parse_nlu_file("nlu:\n- intent: a\n  examples:\n  - x\n  what\n").unwrap_err();
        assert!(matches!(err, CorpusError::Syntax { line: 5, .. }), "{err:?}");
    }

    #[test]
    fn round_trip() {
        let first = parse_nlu_file(SMALL).unwrap();
        let again = parse_nlu_file(&write_nlu_file(&first)).unwrap();
        assert_eq!(first, again);
    }
}
