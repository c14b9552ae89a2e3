use crate::corpus::EntitySpan;
use crate::tokenize::Token;

pub const OUTSIDE: &str = "O";

/// `O` followed by `B-e`, `I-e` for every entity type in the given order.
pub fn bio_tag_set(entity_types: &[String]) -> Vec<String> {
    let mut tags = vec![OUTSIDE.to_string()];
    for e in entity_types {
        tags.push(format!("B-{e}"));
        tags.push(format!("I-{e}"));
    }
    tags
}

/// Gold tags: a token belongs to a span when their char ranges overlap; the
/// first such token opens the span.
pub fn encode_bio(tokens: &[Token], spans: &[EntitySpan]) -> Vec<String> {
    let mut tags = vec![OUTSIDE.to_string(); tokens.len()];
    for span in spans {
        let mut first = true;
        for (tag, t) in tags.iter_mut().zip(tokens) {
            if t.start < span.end && span.start < t.end && tag == OUTSIDE {
                *tag = format!("{}-{}", if first { "B" } else { "I" }, span.entity);
                first = false;
            }
        }
    }
    tags
}

fn split_tag(tag: &str) -> Option<(bool, &str)> {
    if let Some(e) = tag.strip_prefix("B-") {
        Some((true, e))
    } else {
        tag.strip_prefix("I-").map(|e| (false, e))
    }
}

/// Maximal `B-e I-e*` runs become spans. An `I-e` that does not continue a
/// run of type `e` opens a new one. Values are the covered token texts
/// joined by single spaces.
pub fn decode_bio(tags: &[String], tokens: &[Token]) -> Vec<EntitySpan> {
    assert_eq!(tags.len(), tokens.len(), "one tag per token");
    let mut spans: Vec<EntitySpan> = Vec::new();
    let mut open: Option<(String, usize, usize)> = None;
    let close = |open: &mut Option<(String, usize, usize)>, spans: &mut Vec<EntitySpan>| {
        if let Some((entity, first, last)) = open.take() {
            spans.push(EntitySpan {
                start: tokens[first].start,
                end: tokens[last].end,
                value: tokens[first..=last].iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join(" "),
                entity,
            });
        }
    };
    for (i, tag) in tags.iter().enumerate() {
        match split_tag(tag) {
            Some((false, e)) if open.as_ref().is_some_and(|(cur, _, _)| cur == e) => {
                open.as_mut().unwrap().2 = i;
            }
            Some((_, e)) => {
                close(&mut open, &mut spans);
                open = Some((e.to_string(), i, i));
            }
            None => close(&mut open, &mut spans),
        }
    }
    close(&mut open, &mut spans);
    spans
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenize::whitespace_tokenize;
    use proptest::prelude::*;

    fn tags(raw: &[&str]) -> Vec<String> {
        raw.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn single_city() {
        let spans = decode_bio(&tags(&["B-city"]), &whitespace_tokenize("ঢাকা"));
        assert_eq!(spans.len(), 1);
        assert_eq!(spans[0].entity, "city");
        assert_eq!(spans[0].value, "ঢাকা");
    }

    #[test]
    fn orphan_inside_is_repaired() {
        let spans = decode_bio(&tags(&["O", "I-city"]), &whitespace_tokenize("to dhaka"));
        assert_eq!(spans.len(), 1);
        assert_eq!((spans[0].start, spans[0].end), (3, 8));
    }

    #[test]
    fn type_change_breaks_run() {
        let spans = decode_bio(&tags(&["B-city", "I-price"]), &whitespace_tokenize("a b"));
        assert_eq!(spans.iter().map(|s| s.entity.as_str()).collect::<Vec<_>>(), ["city", "price"]);
    }

    #[test]
    fn multi_token_span() {
        let toks = whitespace_tokenize("go to new york now");
        let span = EntitySpan {
            start: 6,
            end: 14,
            entity: "city".into(),
            value: "new york".into(),
        };
        let gold = encode_bio(&toks, std::slice::from_ref(&span));
        assert_eq!(gold, tags(&["O", "O", "B-city", "I-city", "O"]));
        assert_eq!(decode_bio(&gold, &toks), vec![span]);
    }

    #[test]
    fn tag_set_layout() {
        assert_eq!(bio_tag_set(&["city".into()]), tags(&["O", "B-city", "I-city"]));
    }

    proptest! {
        #[test]
        fn spans_are_ordered_and_disjoint(raw in proptest::collection::vec(0usize..5, 0..12)) {
            let vocab = ["O", "B-a", "I-a", "B-b", "I-b"];
            let t = tags(&raw.iter().map(|&i| vocab[i]).collect::<Vec<_>>());
            let text = vec!["w"; t.len()].join(" ");
            let spans = decode_bio(&t, &whitespace_tokenize(&text));
            for w in spans.windows(2) {
                prop_assert!(w[0].end <= w[1].start);
            }
            let tagged = t.iter().filter(|s| *s != OUTSIDE).count();
            let covered: usize = spans.iter().map(|s| s.value.split(' ').count()).sum();
            prop_assert_eq!(tagged, covered);
        }
    }
}
