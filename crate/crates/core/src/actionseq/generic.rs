use super::{ActionInstance, ActionSequence, Arg, ParseError};
use crate::domain::EntityId;

/// A non-blank input line that held no recognizable action call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedLine {
    pub line: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenericParse {
    pub sequence: ActionSequence,
    pub skipped: Vec<SkippedLine>,
}

/// Recovers `verb(args)` calls from free text, at most one per line.
///
/// Code fences, list numbering and bullets are ignored because the scan only
/// looks for an identifier immediately followed by a balanced argument list.
/// Fails with [`ParseError::EmptyParse`] only when nothing was recovered.
pub fn parse_generic(text: &str) -> Result<GenericParse, ParseError> {
    let mut actions = Vec::new();
    let mut skipped = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || is_fence_line(line) {
            continue;
        }
        match first_call(line) {
            Some(action) => actions.push(action),
            None => skipped.push(SkippedLine {
                line: idx + 1,
                text: line.to_string(),
            }),
        }
    }
    if actions.is_empty() {
        return Err(ParseError::EmptyParse);
    }
    Ok(GenericParse {
        sequence: ActionSequence::new(actions),
        skipped,
    })
}

fn is_fence_line(line: &str) -> bool {
    line.strip_prefix("```")
        .map(|rest| rest.chars().all(|c| c.is_ascii_alphanumeric() || c == '`'))
        .unwrap_or(false)
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn first_call(line: &str) -> Option<ActionInstance> {
    let chars: Vec<char> = line.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let boundary = i == 0 || !is_ident_char(chars[i - 1]);
        if boundary && is_ident_start(chars[i]) {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            if i < chars.len() && chars[i] == '(' {
                let name: String = chars[start..i].iter().collect();
                if let Some(args) = call_args(&chars[i + 1..]) {
                    if let Ok(action) = ActionInstance::new(&name, args) {
                        return Some(action);
                    }
                }
            }
        } else {
            i += 1;
        }
    }
    None
}

fn closing_quote(open: char) -> Option<char> {
    match open {
        '"' => Some('"'),
        '\'' => Some('\''),
        '\u{201c}' => Some('\u{201d}'),
        '\u{2018}' => Some('\u{2019}'),
        _ => None,
    }
}

/// Parses the text after `(` up to the matching `)`.
fn call_args(rest: &[char]) -> Option<Vec<Arg>> {
    let mut args = Vec::new();
    let mut i = 0;
    loop {
        while i < rest.len() && rest[i].is_whitespace() {
            i += 1;
        }
        let c = *rest.get(i)?;
        if c == ')' && args.is_empty() {
            return Some(args);
        }
        if let Some(close) = closing_quote(c) {
            let mut text = String::new();
            i += 1;
            loop {
                let ch = *rest.get(i)?;
                i += 1;
                if ch == '\\' {
                    text.push(*rest.get(i)?);
                    i += 1;
                } else if ch == close {
                    break;
                } else {
                    text.push(ch);
                }
            }
            args.push(Arg::Text(text));
            while i < rest.len() && rest[i].is_whitespace() {
                i += 1;
            }
        } else {
            let start = i;
            while i < rest.len() && rest[i] != ',' && rest[i] != ')' {
                if rest[i] == '(' {
                    return None;
                }
                i += 1;
            }
            let raw: String = rest[start..i].iter().collect();
            let raw = raw.trim().trim_start_matches('<').trim_end_matches('>');
            args.push(Arg::Entity(EntityId::new(raw).ok()?));
        }
        match rest.get(i)? {
            ',' => i += 1,
            ')' => return Some(args),
            _ => return None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn names(p: &GenericParse) -> Vec<String> {
        p.sequence.iter().map(|a| a.to_string()).collect()
    }

    #[test]
    fn numbered_list() {
        let p = parse_generic("1. Walk(roommate)\n2. Find(phone)\n3. Grab(phone)").unwrap();
        assert_eq!(names(&p), ["walk(roommate)", "find(phone)", "grab(phone)"]);
        assert!(p.skipped.is_empty());
    }

    #[test]
    fn inline_fence() {
        let p = parse_generic("Sure! Here are the steps: ```Grab(phone)```").unwrap();
        assert_eq!(names(&p), ["grab(phone)"]);
    }

    #[test]
    fn refusal_is_empty_parse() {
        assert_eq!(
            parse_generic("I cannot help with that.").unwrap_err(),
            ParseError::EmptyParse
        );
        assert_eq!(parse_generic("").unwrap_err(), ParseError::EmptyParse);
    }

    #[test]
    fn fenced_block_with_preamble_and_bullets() {
        let text = "Here is the plan (in order):\n```text\n- walk(kitchen)\n* wait()\n- Talk(\"I found my phone!\")\n```\nDone.";
        let p = parse_generic(text).unwrap();
        assert_eq!(
            names(&p),
            ["walk(kitchen)", "wait()", "talk(\"I found my phone!\")"]
        );
        let skipped: Vec<usize> = p.skipped.iter().map(|s| s.line).collect();
        assert_eq!(skipped, [1, 7]);
    }

    #[test]
    fn curly_quotes_and_multiple_args() {
        let p = parse_generic("PutBack(Phone, Coffee Table)\ntalk(\u{201c}hello (there)\u{201d})").unwrap();
        assert_eq!(names(&p), ["putback(phone, coffee_table)", "talk(\"hello (there)\")"]);
    }

    #[test]
    fn space_before_paren_is_not_a_call() {
        assert!(parse_generic("the steps (in order) follow").is_err());
    }

    proptest! {
        #[test]
        fn total_and_bounded(text in "[a-zA-Z0-9(),\"\\n .`*-]{0,200}") {
            match parse_generic(&text) {
                Ok(p) => prop_assert!(p.sequence.len() <= text.lines().count()),
                Err(e) => prop_assert_eq!(e, ParseError::EmptyParse),
            }
        }
    }
}
