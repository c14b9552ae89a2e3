use std::collections::BTreeMap;

use super::block::{self, syntax};
use super::nlu::check_keys;
use super::{CorpusError, Domain};

/// Parses a domain file with `intents:`, `entities:`, `responses:` and
/// `actions:` sections. Response variants may be written as plain strings or
/// as `- text: ...` items.
pub fn parse_domain_file(contents: &str) -> Result<Domain, CorpusError> {
    let root = block::parse(contents)?;
    check_keys(&root, &["version", "intents", "entities", "responses", "actions"])?;

    let scalars = |key: &str| -> Result<Vec<String>, CorpusError> {
        match root.get(key) {
            Some(node) => node
                .as_list()?
                .iter()
                .map(|n| n.as_scalar().map(|s| s.trim().to_string()))
                .collect(),
            None => Ok(Vec::new()),
        }
    };

    let mut intents = scalars("intents")?;
    intents.sort();
    intents.dedup();
    let mut entity_types = scalars("entities")?;
    entity_types.sort();
    entity_types.dedup();

    let mut responses = BTreeMap::new();
    if let Some(node) = root.get("responses") {
        for (name, variants) in node.as_map()? {
            if !name.starts_with("utter_") {
                return Err(CorpusError::InvalidResponseName(name.clone()));
            }
            let mut texts = Vec::new();
            for v in variants.as_list()? {
                let text = match v.get("text") {
                    Some(t) => t.as_scalar()?.to_string(),
                    None => v.as_scalar()?.to_string(),
                };
                texts.push(text);
            }
            if texts.is_empty() {
                return Err(syntax(variants.line(), format!("response `{name}` has no variants")));
            }
            responses.insert(name.clone(), texts);
        }
    }

    let mut actions: Vec<String> = responses.keys().cloned().collect();
    actions.extend(scalars("actions")?);
    actions.sort();
    actions.dedup();

    Ok(Domain {
        intents,
        entity_types,
        responses,
        actions,
    })
}
