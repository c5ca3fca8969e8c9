use std::collections::{BTreeMap, BTreeSet};

use super::{ActionInstance, ParseError};
use crate::domain::normalize_token;

/// Where one alias points, optionally with an argument selector that
/// reorders or drops arguments (`putin{1,0} -> put_on`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AliasRule {
    pub canonical: String,
    pub arg_order: Option<Vec<usize>>,
}

/// Outcome of folding an action name through the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MapFlag {
    /// The name already was a canonical name.
    Known,
    /// An alias was folded to its canonical name.
    Mapped,
    /// The name belongs to the configured do-nothing set.
    Extraneous,
    /// Nothing matched; the action is returned with its name lowercased.
    Unmapped,
}

/// Keyword mapping from dataset or model vocabulary to catalog names.
///
/// Text format, one directive per line, `#` starts a comment:
///
/// ```text
/// walk|run|goto -> move_to
/// putin{0,1} -> put_on
/// @canonical say|find
/// @extraneous wait|noop|pause
/// ```
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AliasTable {
    rules: BTreeMap<String, AliasRule>,
    canonical: BTreeSet<String>,
    extraneous: BTreeSet<String>,
}

const BUNDLED: &str = include_str!("../../../../data/aliases.txt");

impl AliasTable {
    /// A table with no aliases and no vocabulary.
    pub fn new() -> Self {
        Self::default()
    }

    /// The alias table shipped in `data/aliases.txt`.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED).expect("bundled alias table parses")
    }

    /// A table that only knows the given canonical names.
    pub fn with_canonical<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        AliasTable {
            canonical: names.into_iter().map(|n| normalize_token(n.as_ref())).collect(),
            ..Self::default()
        }
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut table = AliasTable::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let err = |message: String| ParseError::Alias {
                line: line_no,
                message,
            };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('@') {
                let (directive, names) = rest
                    .split_once(char::is_whitespace)
                    .ok_or_else(|| err(format!("directive `{line}` has no names")))?;
                let names = split_names(names).map_err(err)?;
                match directive {
                    "extraneous" => table.extraneous.extend(names),
                    "canonical" => table.canonical.extend(names),
                    other => return Err(err(format!("unknown directive `@{other}`"))),
                }
                continue;
            }
            let (lhs, rhs) = line
                .split_once("->")
                .ok_or_else(|| err("expected `aliases -> canonical`".into()))?;
            let canonical = normalize_token(rhs);
            if canonical.is_empty() {
                return Err(err("empty canonical name".into()));
            }
            table.canonical.insert(canonical.clone());
            for part in lhs.split('|') {
                let (name, arg_order) = parse_alias(part.trim()).map_err(err)?;
                if table.rules.contains_key(&name) {
                    return Err(err(format!("alias `{name}` defined twice")));
                }
                table.rules.insert(
                    name,
                    AliasRule {
                        canonical: canonical.clone(),
                        arg_order,
                    },
                );
            }
        }
        table.check_no_chains()?;
        Ok(table)
    }

    /// Folding must be a single hop so canonicalization stays idempotent.
    fn check_no_chains(&self) -> Result<(), ParseError> {
        for (alias, rule) in &self.rules {
            if let Some(next) = self.rules.get(&rule.canonical) {
                let identity = next.canonical == rule.canonical && next.arg_order.is_none();
                if !identity {
                    return Err(ParseError::Alias {
                        line: 0,
                        message: format!(
                            "`{alias}` maps to `{}`, which is itself remapped",
                            rule.canonical
                        ),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn is_canonical(&self, name: &str) -> bool {
        self.canonical.contains(name)
    }

    pub fn is_extraneous(&self, name: &str) -> bool {
        self.extraneous.contains(name)
    }

    pub fn canonical_names(&self) -> impl Iterator<Item = &str> {
        self.canonical.iter().map(String::as_str)
    }

    pub fn extraneous_names(&self) -> impl Iterator<Item = &str> {
        self.extraneous.iter().map(String::as_str)
    }

    pub fn rule(&self, alias: &str) -> Option<&AliasRule> {
        self.rules.get(alias)
    }

    /// Replaces the extraneous set.
    pub fn set_extraneous<I, S>(&mut self, names: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.extraneous = names.into_iter().map(|n| normalize_token(n.as_ref())).collect();
    }

    /// Lowercases the name, folds aliases and normalizes entity arguments.
    pub fn canonicalize(&self, action: &ActionInstance) -> (ActionInstance, MapFlag) {
        let mut out = action.clone();
        // Entity arguments are normalized on construction already.
        out.set_name(normalize_token(action.name()));
        if self.canonical.contains(out.name()) {
            return (out, MapFlag::Known);
        }
        if let Some(rule) = self.rules.get(out.name()) {
            if let Some(order) = &rule.arg_order {
                let args = out.args().to_vec();
                *out.args_mut() = order.iter().filter_map(|&i| args.get(i).cloned()).collect();
            }
            out.set_name(rule.canonical.clone());
            return (out, MapFlag::Mapped);
        }
        if self.extraneous.contains(out.name()) {
            return (out, MapFlag::Extraneous);
        }
        (out, MapFlag::Unmapped)
    }
}

/// Free-function form of [`AliasTable::canonicalize`].
pub fn canonicalize(action: &ActionInstance, aliases: &AliasTable) -> (ActionInstance, MapFlag) {
    aliases.canonicalize(action)
}

fn split_names(list: &str) -> Result<Vec<String>, String> {
    list.split('|')
        .map(|n| {
            let norm = normalize_token(n);
            if norm.is_empty() {
                Err(format!("empty name in `{list}`"))
            } else {
                Ok(norm)
            }
        })
        .collect()
}

fn parse_alias(part: &str) -> Result<(String, Option<Vec<usize>>), String> {
    let (name, order) = match part.split_once('{') {
        Some((name, rest)) => {
            let inner = rest
                .strip_suffix('}')
                .ok_or_else(|| format!("unterminated argument selector in `{part}`"))?;
            let order = inner
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| {
                    s.trim()
                        .parse::<usize>()
                        .map_err(|_| format!("bad argument index `{s}` in `{part}`"))
                })
                .collect::<Result<Vec<_>, _>>()?;
            (name, Some(order))
        }
        None => (part, None),
    };
    let name = normalize_token(name);
    if name.is_empty() {
        return Err(format!("empty alias in `{part}`"));
    }
    Ok((name, order))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn act(s: &str) -> ActionInstance {
        s.parse().unwrap()
    }

    #[test]
    fn folds_alias_to_canonical() {
        let t = AliasTable::parse("walk|run|goto -> move_to").unwrap();
        let (a, flag) = t.canonicalize(&act("Walk(Roommate)"));
        assert_eq!(a.to_string(), "move_to(roommate)");
        assert_eq!(flag, MapFlag::Mapped);
    }

    #[test]
    fn canonical_name_is_known_without_aliases() {
        let t = AliasTable::with_canonical(["move_to"]);
        let (a, flag) = t.canonicalize(&act("move_to(kitchen)"));
        assert_eq!(a, act("move_to(kitchen)"));
        assert_eq!(flag, MapFlag::Known);
    }

    #[test]
    fn unmapped_name_is_lowercased_and_flagged() {
        let t = AliasTable::bundled();
        let (a, flag) = t.canonicalize(&act("FlyTo(moon)"));
        assert_eq!(a.to_string(), "flyto(moon)");
        assert_eq!(flag, MapFlag::Unmapped);
    }

    #[test]
    fn extraneous_directive() {
        let t = AliasTable::parse("@extraneous wait|noop\nwalk -> move_to").unwrap();
        assert_eq!(t.canonicalize(&act("Wait()")).1, MapFlag::Extraneous);
        assert!(t.is_extraneous("noop"));
    }

    #[test]
    fn argument_selector_reorders_and_drops() {
        let t = AliasTable::parse("putin{1,0} -> put_on\nputobjback{0} -> put_down").unwrap();
        assert_eq!(
            t.canonicalize(&act("PutIn(fridge, milk)")).0.to_string(),
            "put_on(milk, fridge)"
        );
        assert_eq!(
            t.canonicalize(&act("putobjback(phone, table)")).0.to_string(),
            "put_down(phone)"
        );
    }

    #[test]
    fn rejects_chains_and_duplicates() {
        assert!(AliasTable::parse("a -> b\nb -> c").is_err());
        assert!(AliasTable::parse("a -> b\na -> c").is_err());
        assert!(AliasTable::parse("b|a -> b").is_ok());
        assert!(AliasTable::parse("@bogus x").is_err());
        assert!(AliasTable::parse("walk move_to").is_err());
    }

    #[test]
    fn bundled_table_is_idempotent_on_every_alias() {
        let t = AliasTable::bundled();
        for alias in t.rules.keys() {
            let a = ActionInstance::with_entities(alias, &["x", "y"]).unwrap();
            let once = t.canonicalize(&a).0;
            assert_eq!(t.canonicalize(&once).0, once, "alias {alias}");
        }
    }
}
