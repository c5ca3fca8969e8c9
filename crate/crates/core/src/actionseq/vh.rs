use super::{ActionInstance, ActionSequence, Arg, ParseError};
use crate::domain::EntityId;

/// Parses bracketed script text: one `[Verb] <arg> (idx) <arg> (idx)` per line.
///
/// Instance indices are dropped. Blank lines are ignored.
pub fn parse_vh(text: &str) -> Result<ActionSequence, ParseError> {
    let mut actions = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        actions.push(parse_line(line).map_err(|message| ParseError::Malformed {
            line: idx + 1,
            message,
        })?);
    }
    Ok(ActionSequence::new(actions))
}

/// Lenient variant: reads only the lines that start with `[` and parse
/// cleanly, ignoring everything else.
pub fn parse_vh_lines(text: &str) -> ActionSequence {
    text.lines()
        .map(str::trim)
        .filter(|l| l.starts_with('['))
        .filter_map(|l| parse_line(l).ok())
        .collect()
}

fn parse_line(line: &str) -> Result<ActionInstance, String> {
    let rest = line
        .strip_prefix('[')
        .ok_or_else(|| format!("expected `[Verb]`, got `{line}`"))?;
    let (verb, mut rest) = rest
        .split_once(']')
        .ok_or_else(|| "unterminated `[`".to_string())?;
    let mut args = Vec::new();
    loop {
        rest = rest.trim_start();
        if rest.is_empty() {
            break;
        }
        let body = rest
            .strip_prefix('<')
            .ok_or_else(|| format!("expected `<argument>`, got `{rest}`"))?;
        let (arg, after) = body
            .split_once('>')
            .ok_or_else(|| "unterminated `<`".to_string())?;
        args.push(parse_arg(arg)?);
        rest = after.trim_start();
        if let Some(paren) = rest.strip_prefix('(') {
            let (index, after) = paren
                .split_once(')')
                .ok_or_else(|| "unterminated instance index".to_string())?;
            if index.trim().is_empty() || !index.trim().chars().all(|c| c.is_ascii_digit()) {
                return Err(format!("instance index must be numeric, got `{index}`"));
            }
            rest = after;
        }
    }
    ActionInstance::new(verb.trim(), args).map_err(|e| e.to_string())
}

fn parse_arg(raw: &str) -> Result<Arg, String> {
    let raw = raw.trim();
    if let Some(inner) = raw.strip_prefix('"').and_then(|r| r.strip_suffix('"')) {
        return Ok(Arg::Text(inner.replace("\\\"", "\"").replace("\\\\", "\\")));
    }
    EntityId::new(raw).map(Arg::Entity).map_err(|e| e.to_string())
}

/// Writes a sequence in bracketed script style, every index `(1)`.
pub fn serialize_vh(seq: &ActionSequence) -> String {
    seq.iter()
        .map(|a| {
            let mut line = format!("[{}]", a.name());
            for arg in a.args() {
                line.push_str(&format!(" <{arg}> (1)"));
            }
            line
        })
        .collect::<Vec<_>>()
        .join("\n")
}
