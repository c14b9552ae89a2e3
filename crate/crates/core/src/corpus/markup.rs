//! Inline entity annotation: `[surface](entity)`.

use super::{CorpusError, EntitySpan};

/// Strips `[surface](entity)` annotations, returning the plain text and one
/// span per annotation. Offsets are in chars.
pub fn parse_entity_markup(raw: &str) -> Result<(String, Vec<EntitySpan>), CorpusError> {
    let chars: Vec<char> = raw.chars().collect();
    let mut text = String::with_capacity(raw.len());
    let mut text_len = 0usize;
    let mut spans = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        match chars[i] {
            '[' => {
                let close = chars[i + 1..]
                    .iter()
                    .position(|&c| c == ']')
                    .map(|p| p + i + 1)
                    .ok_or_else(|| unbalanced(raw, i))?;
                let surface: String = chars[i + 1..close].iter().collect();
                if surface.contains('[') {
                    return Err(unbalanced(raw, i));
                }
                if chars.get(close + 1) != Some(&'(') {
                    return Err(unbalanced(raw, i));
                }
                let end_paren = chars[close + 2..]
                    .iter()
                    .position(|&c| c == ')')
                    .map(|p| p + close + 2)
                    .ok_or_else(|| unbalanced(raw, i))?;
                let entity: String = chars[close + 2..end_paren].iter().collect();
                let entity = entity.trim();
                if entity.is_empty() {
                    return Err(CorpusError::EmptyEntityName {
                        markup: raw.to_string(),
                    });
                }
                let surface_len = surface.chars().count();
                if surface_len == 0 {
                    return Err(unbalanced(raw, i));
                }
                spans.push(EntitySpan {
                    start: text_len,
                    end: text_len + surface_len,
                    entity: entity.to_string(),
                    value: surface.clone(),
                });
                text.push_str(&surface);
                text_len += surface_len;
                i = end_paren + 1;
            }
            ']' => return Err(unbalanced(raw, i)),
            c => {
                text.push(c);
                text_len += 1;
                i += 1;
            }
        }
    }
    Ok((text, spans))
}

fn unbalanced(raw: &str, position: usize) -> CorpusError {
    CorpusError::UnbalancedMarkup {
        markup: raw.to_string(),
        position,
    }
}

/// Inverse of [`parse_entity_markup`].
pub fn render_entity_markup(text: &str, spans: &[EntitySpan]) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len() + spans.len() * 8);
    let mut cursor = 0;
    for span in spans {
        out.extend(&chars[cursor..span.start]);
        out.push('[');
        out.extend(&chars[span.start..span.end]);
        out.push_str("](");
        out.push_str(&span.entity);
        out.push(')');
        cursor = span.end;
    }
    out.extend(&chars[cursor..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn span(start: usize, end: usize, entity: &str, value: &str) -> EntitySpan {
        EntitySpan {
            start,
            end,
            entity: entity.into(),
            value: value.into(),
        }
    }

    #[test]
    fn bangla_annotation() {
        let (text, spans) = parse_entity_markup("[ঢাকা](city) e kobe").unwrap();
        assert_eq!(text, "ঢাকা e kobe");
        assert_eq!(spans, vec![span(0, 4, "city", "ঢাকা")]);
    }

    #[test]
    fn no_markup() {
        let (text, spans) = parse_entity_markup("hello there").unwrap();
        assert_eq!(text, "hello there");
        assert!(spans.is_empty());
    }

    #[test]
    fn two_annotations_offsets() {
        let (text, spans) = parse_entity_markup("a [b](x) c [d](y)").unwrap();
        assert_eq!(text, "a b c d");
        assert_eq!(spans, vec![span(2, 3, "x", "b"), span(6, 7, "y", "d")]);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            parse_entity_markup("dangling [x"),
            Err(CorpusError::UnbalancedMarkup { .. })
        ));
        assert!(matches!(
            parse_entity_markup("[x] no entity"),
            Err(CorpusError::UnbalancedMarkup { .. })
        ));
        assert!(matches!(
            parse_entity_markup("[x](city"),
            Err(CorpusError::UnbalancedMarkup { .. })
        ));
        assert!(matches!(
            parse_entity_markup("stray ] bracket"),
            Err(CorpusError::UnbalancedMarkup { .. })
        ));
        assert!(matches!(
            parse_entity_markup("[x]( )"),
            Err(CorpusError::EmptyEntityName { .. })
        ));
    }

    proptest! {
        #[test]
        fn identity_without_brackets(s in "[^\\[\\]]{0,40}") {
            let (text, spans) = parse_entity_markup(&s).unwrap();
            prop_assert_eq!(text, s);
            prop_assert!(spans.is_empty());
        }

        #[test]
        fn spans_slice_their_values(
            parts in proptest::collection::vec(("[a-zঅ-হ ]{0,6}", "[a-zঅ-হ]{1,5}", "[a-z_]{1,6}"), 0..5),
            tail in "[a-z ]{0,5}",
        ) {
            let mut raw = String::new();
            for (plain, surface, entity) in &parts {
                raw.push_str(plain);
                raw.push_str(&format!("[{surface}]({entity})"));
            }
            raw.push_str(&tail);
            let (text, spans) = parse_entity_markup(&raw).unwrap();
            let chars: Vec<char> = text.chars().collect();
            for s in &spans {
                let slice: String = chars[s.start..s.end].iter().collect();
                prop_assert_eq!(&slice, &s.value);
            }
            prop_assert_eq!(render_entity_markup(&text, &spans), raw);
        }
    }
}
