use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::language::{detect_language, LanguageTag, Script};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("transliteration failed: {0}")]
pub struct TransliterationFailure(pub String);

/// Latin-script Bangla to Bengali script. Implementations must be total and
/// deterministic; an `Err` makes the caller keep the original text.
pub trait TransliterationClient: Send + Sync {
    fn transliterate(&self, latin: &str) -> Result<String, TransliterationFailure>;
}

/// Returns its input unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityStub;

impl TransliterationClient for IdentityStub {
    fn transliterate(&self, latin: &str) -> Result<String, TransliterationFailure> {
        Ok(latin.to_string())
    }
}

/// Greedy longest-match rewrite, left to right. Characters no rule covers
/// pass through unchanged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleTable {
    /// Longest source first, so the first hit at a position is the longest.
    rules: Vec<(Vec<char>, String)>,
}

const BUILTIN_RULES: &[(&str, &str)] = &[
    ("kh", "খ"), ("gh", "ঘ"), ("ch", "চ"), ("jh", "ঝ"), ("th", "থ"), ("dh", "ধ"),
    ("ph", "ফ"), ("bh", "ভ"), ("sh", "শ"), ("ng", "ং"), ("oi", "ঐ"), ("ou", "ঔ"),
    ("a", "আ"), ("i", "ই"), ("u", "উ"), ("e", "এ"), ("o", "ও"),
    ("k", "ক"), ("g", "গ"), ("c", "চ"), ("j", "জ"), ("t", "ত"), ("d", "দ"),
    ("n", "ন"), ("p", "প"), ("f", "ফ"), ("b", "ব"), ("v", "ভ"), ("m", "ম"),
    ("y", "য়"), ("r", "র"), ("l", "ল"), ("s", "স"), ("h", "হ"), ("z", "জ"),
    ("w", "ও"), ("x", "ক্স"), ("q", "ক"),
];

impl RuleTable {
    pub fn new<S: AsRef<str>, T: Into<String>>(pairs: impl IntoIterator<Item = (S, T)>) -> Self {
        let mut rules: Vec<(Vec<char>, String)> = pairs
            .into_iter()
            .map(|(s, t)| (s.as_ref().chars().collect(), t.into()))
            .filter(|(s, _): &(Vec<char>, String)| !s.is_empty())
            .collect();
        rules.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        rules.dedup_by(|a, b| a.0 == b.0);
        RuleTable { rules }
    }

    /// A small digraph-first map for lowercase Latin input.
    pub fn builtin() -> Self {
        Self::new(BUILTIN_RULES.iter().copied())
    }

    pub fn apply(&self, text: &str) -> String {
        let chars: Vec<char> = text.chars().collect();
        let mut out = String::with_capacity(text.len() * 2);
        let mut i = 0;
        while i < chars.len() {
            let hit = self
                .rules
                .iter()
                .find(|(src, _)| chars[i..].starts_with(src));
            match hit {
                Some((src, target)) => {
                    out.push_str(target);
                    i += src.len();
                }
                None => {
                    out.push(chars[i]);
                    i += 1;
                }
            }
        }
        out
    }
}

impl TransliterationClient for RuleTable {
    fn transliterate(&self, latin: &str) -> Result<String, TransliterationFailure> {
        Ok(self.apply(&latin.to_lowercase()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Routing {
    Unchanged,
    Transliterated,
    /// No alphabetic text; passed through as is.
    NonAlphabetic,
    /// The client failed; the original text was kept.
    TransliterationFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutedMessage {
    pub text: String,
    pub language: LanguageTag,
    pub routing: Routing,
}

pub fn route_message(text: &str, client: &dyn TransliterationClient) -> RoutedMessage {
    let language = detect_language(text);
    let (text, routing) = match language.script {
        Script::Bangla => (text.to_string(), Routing::Unchanged),
        Script::Other => (text.to_string(), Routing::NonAlphabetic),
        Script::LatinTransliteration => match client.transliterate(text) {
            Ok(t) => (t, Routing::Transliterated),
            Err(_) => (text.to_string(), Routing::TransliterationFailed),
        },
    };
    RoutedMessage { text, language, routing }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Broken;

    impl TransliterationClient for Broken {
        fn transliterate(&self, _: &str) -> Result<String, TransliterationFailure> {
            Err(TransliterationFailure("offline".into()))
        }
    }

    #[test]
    fn rule_table_applies_left_to_right() {
        let t = RuleTable::new([("a", "আ"), ("m", "ম"), ("i", "ই")]);
        assert_eq!(t.apply("ami"), "আমই");
        assert_eq!(t.apply("amx i"), "আমx ই");
    }

    #[test]
    fn longest_match_wins() {
        let t = RuleTable::new([("k", "ক"), ("h", "হ"), ("kh", "খ")]);
        assert_eq!(t.apply("khk"), "খক");
        let b = RuleTable::builtin();
        assert_eq!(b.apply("bhalo"), "ভআলও");
        assert_eq!(b.transliterate("AMI").unwrap(), "আমই");
    }

    #[test]
    fn routing_by_script() {
        let bn = route_message("আমি ভালো", &RuleTable::builtin());
        assert_eq!((bn.text.as_str(), bn.routing), ("আমি ভালো", Routing::Unchanged));
        let stub = route_message("ami bhalo", &IdentityStub);
        assert_eq!((stub.text.as_str(), stub.routing), ("ami bhalo", Routing::Transliterated));
        let rt = route_message("ami", &RuleTable::new([("a", "আ"), ("m", "ম"), ("i", "ই")]));
        assert_eq!(rt.text, "আমই");
        let other = route_message("123 !", &RuleTable::builtin());
        assert_eq!((other.text.as_str(), other.routing), ("123 !", Routing::NonAlphabetic));
        let failed = route_message("ami", &Broken);
        assert_eq!((failed.text.as_str(), failed.routing), ("ami", Routing::TransliterationFailed));
    }
}
