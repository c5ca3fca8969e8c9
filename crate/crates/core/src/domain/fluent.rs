use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::entity::{normalize_token, EntityId};
use super::DomainError;

/// Predicate that places the robot. Every valid world state holds exactly one.
pub const ROBOT_AT: &str = "robot_at";

/// A ground predicate such as `at(phone, kitchen)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Fluent {
    predicate: String,
    args: Vec<EntityId>,
}

impl Fluent {
    pub const MAX_ARITY: usize = 3;

    pub fn new(predicate: &str, args: Vec<EntityId>) -> Result<Self, DomainError> {
        let predicate_norm = normalize_token(predicate);
        if predicate_norm.is_empty() {
            return Err(DomainError::InvalidName(predicate.to_string()));
        }
        if args.is_empty() || args.len() > Self::MAX_ARITY {
            return Err(DomainError::FluentArity {
                predicate: predicate_norm,
                arity: args.len(),
            });
        }
        Ok(Fluent {
            predicate: predicate_norm,
            args,
        })
    }

    pub fn predicate(&self) -> &str {
        &self.predicate
    }

    pub fn args(&self) -> &[EntityId] {
        &self.args
    }
}

impl fmt::Display for Fluent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.predicate)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

impl FromStr for Fluent {
    type Err = DomainError;

    /// Parses `pred(a, b)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (head, rest) = s
            .split_once('(')
            .ok_or_else(|| DomainError::InvalidName(s.to_string()))?;
        let inner = rest
            .strip_suffix(')')
            .ok_or_else(|| DomainError::InvalidName(s.to_string()))?;
        let args = inner
            .split(',')
            .filter(|a| !a.trim().is_empty())
            .map(EntityId::new)
            .collect::<Result<Vec<_>, _>>()?;
        Fluent::new(head, args)
    }
}

/// A finite set of ground fluents containing exactly one `robot_at` fact.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct WorldState {
    fluents: BTreeSet<Fluent>,
}

impl WorldState {
    pub fn new<I: IntoIterator<Item = Fluent>>(fluents: I) -> Result<Self, DomainError> {
        let state = WorldState {
            fluents: fluents.into_iter().collect(),
        };
        state.check_robot()?;
        Ok(state)
    }

    /// Builds a state from `pred(args)` strings. Intended for tests and fixtures.
    pub fn parse_all<'a, I: IntoIterator<Item = &'a str>>(items: I) -> Result<Self, DomainError> {
        let fluents = items
            .into_iter()
            .map(str::parse)
            .collect::<Result<Vec<Fluent>, _>>()?;
        WorldState::new(fluents)
    }

    fn check_robot(&self) -> Result<(), DomainError> {
        let count = self
            .fluents
            .iter()
            .filter(|f| f.predicate == ROBOT_AT)
            .count();
        if count != 1 {
            return Err(DomainError::RobotPlacement(count));
        }
        Ok(())
    }

    pub(crate) fn from_set_checked(fluents: BTreeSet<Fluent>) -> Result<Self, DomainError> {
        let state = WorldState { fluents };
        state.check_robot()?;
        Ok(state)
    }

    pub fn contains(&self, fluent: &Fluent) -> bool {
        self.fluents.contains(fluent)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Fluent> {
        self.fluents.iter()
    }

    pub fn len(&self) -> usize {
        self.fluents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fluents.is_empty()
    }

    pub fn fluents(&self) -> &BTreeSet<Fluent> {
        &self.fluents
    }

    /// The location fact of the robot.
    pub fn robot_location(&self) -> &EntityId {
        self.fluents
            .iter()
            .find(|f| f.predicate == ROBOT_AT)
            .map(|f| &f.args[0])
            .expect("world state always holds one robot_at fluent")
    }

    /// Size of the symmetric difference between two states.
    pub fn distance(&self, other: &WorldState) -> usize {
        self.fluents.symmetric_difference(&other.fluents).count()
    }
}

impl fmt::Display for WorldState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for fl in &self.fluents {
            writeln!(f, "{fl}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fluent_roundtrips_through_display() {
        let f: Fluent = "at(Phone, kitchen)".parse().unwrap();
        assert_eq!(f.to_string(), "at(phone, kitchen)");
        assert_eq!(f.to_string().parse::<Fluent>().unwrap(), f);
    }

    #[test]
    fn fluent_equality_is_order_sensitive() {
        let a: Fluent = "next(a, b)".parse().unwrap();
        let b: Fluent = "next(b, a)".parse().unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn fluent_arity_bounds() {
        assert!("p()".parse::<Fluent>().is_err());
        assert!("p(a, b, c, d)".parse::<Fluent>().is_err());
    }

    #[test]
    fn state_requires_exactly_one_robot_fact() {
        assert!(WorldState::parse_all(["at(phone, kitchen)"]).is_err());
        assert!(WorldState::parse_all(["robot_at(hall)", "robot_at(kitchen)"]).is_err());
        let s = WorldState::parse_all(["robot_at(hall)", "robot_at(hall)"]).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.robot_location().as_str(), "hall");
    }

    #[test]
    fn distance_is_symmetric_difference() {
        let i = WorldState::parse_all(["robot_at(hall)"]).unwrap();
        let h = WorldState::parse_all(["robot_at(kitchen)", "holding(mail)"]).unwrap();
        assert_eq!(i.distance(&h), 3);
        assert_eq!(h.distance(&i), 3);
    }
}
