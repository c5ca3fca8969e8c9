use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::DomainError;

/// A world entity name in canonical form: lowercase ASCII letters, digits and
/// single underscores, with no leading or trailing underscore.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct EntityId(String);

impl EntityId {
    /// Normalizes `raw` and wraps it. Fails if nothing identifier-like remains.
    pub fn new(raw: &str) -> Result<Self, DomainError> {
        let name = normalize_token(raw);
        if name.is_empty() {
            return Err(DomainError::InvalidName(raw.to_string()));
        }
        Ok(EntityId(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for EntityId {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EntityId::new(s)
    }
}

impl TryFrom<String> for EntityId {
    type Error = DomainError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        EntityId::new(&value)
    }
}

impl From<EntityId> for String {
    fn from(value: EntityId) -> Self {
        value.0
    }
}

impl AsRef<str> for EntityId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Lowercases, maps whitespace and `-` to `_`, drops every other non
/// `[a-z0-9_]` character and collapses runs of `_`.
///
/// Idempotent: `normalize_token(normalize_token(x)) == normalize_token(x)`.
pub fn normalize_token(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for ch in raw.chars().flat_map(char::to_lowercase) {
        let mapped = match ch {
            'a'..='z' | '0'..='9' => Some(ch),
            '_' | '-' => Some('_'),
            c if c.is_whitespace() => Some('_'),
            _ => None,
        };
        if let Some(c) = mapped {
            if c == '_' && (out.is_empty() || out.ends_with('_')) {
                continue;
            }
            out.push(c);
        }
    }
    while out.ends_with('_') {
        out.pop();
    }
    out
}

/// Category tag attached to every declared entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Object,
    Location,
    Person,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Object => "object",
            Category::Location => "location",
            Category::Person => "person",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "object" => Ok(Category::Object),
            "location" => Ok(Category::Location),
            "person" => Ok(Category::Person),
            other => Err(DomainError::InvalidName(other.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalizes_case_and_separators() {
        assert_eq!(normalize_token("Living Room"), "living_room");
        assert_eq!(normalize_token("  Back-Door "), "back_door");
        assert_eq!(normalize_token("__kitchen__cabinets_"), "kitchen_cabinets");
        assert_eq!(normalize_token("<phone>"), "phone");
    }

    #[test]
    fn rejects_names_with_nothing_left() {
        assert!(EntityId::new("!!!").is_err());
        assert!(EntityId::new("").is_err());
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent(raw in "\\PC{0,24}") {
            let once = normalize_token(&raw);
            prop_assert_eq!(normalize_token(&once), once);
        }
    }
}
