//! Reader for the restricted indented block format used by the nlu, domain
//! and stories files.
//!
//! Supported constructs, and nothing else:
//!
//! ```text
//! key: scalar
//! key:
//!   - scalar
//!   - key: scalar
//!     other: scalar
//!   nested:
//!     ...
//! ```
//!
//! List item scalars are taken verbatim (so `- [ঢাকা](city) e` is a plain
//! string, not a flow sequence). Double-quoted scalars are unquoted with `\"`
//! and `\\` escapes. Lines whose first non-blank character is `#` are
//! comments.

use super::CorpusError;

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Scalar { value: String, line: usize },
    List { items: Vec<Node>, line: usize },
    Map { entries: Vec<(String, Node)>, line: usize },
    Empty { line: usize },
}

impl Node {
    pub fn line(&self) -> usize {
        match self {
            Node::Scalar { line, .. }
            | Node::List { line, .. }
            | Node::Map { line, .. }
            | Node::Empty { line } => *line,
        }
    }

    pub fn as_scalar(&self) -> Result<&str, CorpusError> {
        match self {
            Node::Scalar { value, .. } => Ok(value),
            other => Err(syntax(other.line(), "expected a scalar value")),
        }
    }

    /// Lists, with `key:` followed by nothing treated as an empty list.
    pub fn as_list(&self) -> Result<&[Node], CorpusError> {
        match self {
            Node::List { items, .. } => Ok(items),
            Node::Empty { .. } => Ok(&[]),
            other => Err(syntax(other.line(), "expected a list")),
        }
    }

    pub fn as_map(&self) -> Result<&[(String, Node)], CorpusError> {
        match self {
            Node::Map { entries, .. } => Ok(entries),
            Node::Empty { .. } => Ok(&[]),
            other => Err(syntax(other.line(), "expected a mapping")),
        }
    }

    pub fn get(&self, key: &str) -> Option<&Node> {
        match self {
            Node::Map { entries, .. } => entries.iter().find(|(k, _)| k == key).map(|(_, v)| v),
            _ => None,
        }
    }
}

pub(crate) fn syntax(line: usize, message: impl Into<String>) -> CorpusError {
    CorpusError::Syntax {
        line,
        message: message.into(),
    }
}

#[derive(Debug)]
struct Line<'a> {
    number: usize,
    indent: usize,
    body: &'a str,
}

/// Parses a whole document into its top-level mapping.
pub fn parse(contents: &str) -> Result<Node, CorpusError> {
    let mut lines = Vec::new();
    for (idx, raw) in contents.lines().enumerate() {
        let number = idx + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        let leading = raw.len() - raw.trim_start().len();
        if raw[..leading].contains('\t') {
            return Err(syntax(number, "tab indentation is not allowed"));
        }
        let trimmed = raw.trim_start_matches(' ');
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        lines.push(Line {
            number,
            indent: raw.len() - trimmed.len(),
            body: trimmed.trim_end(),
        });
    }
    if lines.is_empty() {
        return Ok(Node::Empty { line: 1 });
    }
    if lines[0].indent != 0 {
        return Err(syntax(lines[0].number, "document must start at column 0"));
    }
    let mut pos = 0;
    let node = parse_block(&lines, &mut pos, 0)?;
    if pos < lines.len() {
        return Err(syntax(lines[pos].number, "unexpected indentation"));
    }
    Ok(node)
}

fn parse_block(lines: &[Line<'_>], pos: &mut usize, indent: usize) -> Result<Node, CorpusError> {
    let first = &lines[*pos];
    if is_list_item(first.body) {
        parse_list(lines, pos, indent)
    } else {
        parse_map(lines, pos, indent, Vec::new(), first.number)
    }
}

fn is_list_item(body: &str) -> bool {
    body == "-" || body.starts_with("- ")
}

fn parse_list(lines: &[Line<'_>], pos: &mut usize, indent: usize) -> Result<Node, CorpusError> {
    let start_line = lines[*pos].number;
    let mut items = Vec::new();
    while *pos < lines.len() {
        let line = &lines[*pos];
        if line.indent < indent {
            break;
        }
        if line.indent > indent {
            return Err(syntax(line.number, "unexpected indentation inside list"));
        }
        if !is_list_item(line.body) {
            break;
        }
        let rest = line.body[1..].trim_start();
        *pos += 1;
        if rest.is_empty() {
            return Err(syntax(line.number, "empty list item"));
        }
        match split_key(rest) {
            Some((key, value)) => {
                // `- key: ...` opens a mapping whose further entries sit two
                // columns in from the dash.
                let item_indent = indent + 2;
                let first_value = parse_value(lines, pos, value, line.number, item_indent)?;
                let node = parse_map(
                    lines,
                    pos,
                    item_indent,
                    vec![(key.to_string(), first_value)],
                    line.number,
                )?;
                items.push(node);
            }
            None => items.push(Node::Scalar {
                value: unquote(rest, line.number)?,
                line: line.number,
            }),
        }
    }
    Ok(Node::List {
        items,
        line: start_line,
    })
}

fn parse_map(
    lines: &[Line<'_>],
    pos: &mut usize,
    indent: usize,
    mut entries: Vec<(String, Node)>,
    start_line: usize,
) -> Result<Node, CorpusError> {
    while *pos < lines.len() {
        let line = &lines[*pos];
        if line.indent < indent {
            break;
        }
        if line.indent > indent {
            return Err(syntax(line.number, "unexpected indentation"));
        }
        if is_list_item(line.body) {
            // A sibling list item of an enclosing list.
            break;
        }
        let (key, value) = split_key(line.body)
            .ok_or_else(|| syntax(line.number, format!("expected `key:` but found `{}`", line.body)))?;
        if entries.iter().any(|(k, _)| k == key) {
            return Err(syntax(line.number, format!("duplicate key `{key}`")));
        }
        *pos += 1;
        let node = parse_value(lines, pos, value, line.number, indent)?;
        entries.push((key.to_string(), node));
    }
    Ok(Node::Map {
        entries,
        line: start_line,
    })
}

/// Parses what follows `key:`: an inline scalar, or a nested block that is
/// either deeper-indented or (for lists) at the key's own indentation.
fn parse_value(
    lines: &[Line<'_>],
    pos: &mut usize,
    inline: &str,
    line_number: usize,
    key_indent: usize,
) -> Result<Node, CorpusError> {
    if !inline.is_empty() {
        return Ok(Node::Scalar {
            value: unquote(inline, line_number)?,
            line: line_number,
        });
    }
    match lines.get(*pos) {
        Some(next) if next.indent > key_indent => parse_block(lines, pos, next.indent),
        Some(next) if next.indent == key_indent && is_list_item(next.body) => {
            parse_list(lines, pos, key_indent)
        }
        _ => Ok(Node::Empty { line: line_number }),
    }
}

/// Splits `key: value` / `key:`; keys are plain identifiers (no spaces, no
/// brackets, no quotes).
fn split_key(body: &str) -> Option<(&str, &str)> {
    let colon = body.find(':')?;
    let key = &body[..colon];
    if key.is_empty()
        || !key
            .chars()
            .all(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | '/'))
    {
        return None;
    }
    let rest = &body[colon + 1..];
    if !rest.is_empty() && !rest.starts_with(' ') {
        return None;
    }
    Some((key, rest.trim()))
}

fn unquote(raw: &str, line: usize) -> Result<String, CorpusError> {
    if !raw.starts_with('"') {
        return Ok(raw.to_string());
    }
    if raw.len() < 2 || !raw.ends_with('"') {
        return Err(syntax(line, "unterminated quoted string"));
    }
    let inner = &raw[1..raw.len() - 1];
    let mut out = String::with_capacity(inner.len());
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => match chars.next() {
                Some('"') => out.push('"'),
                Some('\\') => out.push('\\'),
                Some('n') => out.push('\n'),
                _ => return Err(syntax(line, "invalid escape in quoted string")),
            },
            '"' => return Err(syntax(line, "unescaped quote inside quoted string")),
            other => out.push(other),
        }
    }
    Ok(out)
}

/// Quotes a scalar when reading it back verbatim would change it.
pub fn quote_if_needed(value: &str) -> String {
    let needs = value.is_empty()
        || value.starts_with(['"', '#', ' ', '-'])
        || value.ends_with(' ')
        || value.contains('\n')
        || split_key(value).is_some();
    if !needs {
        return value.to_string();
    }
    let mut out = String::with_capacity(value.len() + 2);
    out.push('"');
    for c in value.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            other => out.push(other),
        }
    }
    out.push('"');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_lists_and_maps() {
        let doc = "nlu:\n- intent: greet\n  examples:\n  - hi\n  - \"- quoted\"\n- intent: bye\n  examples:\n    - bye\n";
        let root = parse(doc).unwrap();
        let nlu = root.get("nlu").unwrap().as_list().unwrap();
        assert_eq!(nlu.len(), 2);
        assert_eq!(nlu[0].get("intent").unwrap().as_scalar().unwrap(), "greet");
        let ex = nlu[0].get("examples").unwrap().as_list().unwrap();
        assert_eq!(ex[1].as_scalar().unwrap(), "- quoted");
        let ex = nlu[1].get("examples").unwrap().as_list().unwrap();
        assert_eq!(ex[0].as_scalar().unwrap(), "bye");
    }

    #[test]
    fn markup_is_not_a_flow_sequence() {
        let root = parse("x:\n  - [ঢাকা](city) e kobe\n").unwrap();
        let items = root.get("x").unwrap().as_list().unwrap();
        assert_eq!(items[0].as_scalar().unwrap(), "[ঢাকা](city) e kobe");
    }

    #[test]
    fn bad_indentation_reports_line() {
        let err = parse("a:\n  - x\n     - y\n").unwrap_err();
        assert!(matches!(err, CorpusError::Syntax { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn duplicate_keys_rejected() {
        let err = parse("a: 1\na: 2\n").unwrap_err();
        assert!(matches!(err, CorpusError::Syntax { line: 2, .. }));
    }

    #[test]
    fn quoting_round_trips() {
        for s in ["plain", "- dash", "#hash", "key: value", "say \"hi\"", " pad"] {
            let doc = format!("k:\n  - {}\n", quote_if_needed(s));
            let root = parse(&doc).unwrap();
            let items = root.get("k").unwrap().as_list().unwrap();
            assert_eq!(items[0].as_scalar().unwrap(), s);
        }
    }
}
