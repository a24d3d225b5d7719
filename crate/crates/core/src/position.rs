//! Positions: finite sequences of naturals addressing nodes of a tree.
//!
//! The empty position is the root. Positions are ordered length-lexicographically, which is
//! the order every breadth-first exploration in this crate reports results in.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};
use thiserror::Error;

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Position(Vec<usize>);

/// How a position `p` relates to a position `q` under the extension order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrefixRelation {
    NotPrefix,
    /// `q = p`.
    Prefix,
    /// `q = p ⋆ t` with `len(t) ≥ 2`.
    ProperPrefix,
    /// `q = p ⋆ ⟨i⟩`.
    ImmediatePrefix,
}

impl PrefixRelation {
    pub fn is_prefix(self) -> bool {
        self != PrefixRelation::NotPrefix
    }

    pub fn is_proper(self) -> bool {
        matches!(self, PrefixRelation::ProperPrefix | PrefixRelation::ImmediatePrefix)
    }
}

impl Position {
    pub fn root() -> Self {
        Position(Vec::new())
    }

    pub fn new(entries: Vec<usize>) -> Self {
        Position(entries)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    /// Same as [`Position::is_root`].
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn get(&self, k: usize) -> Option<usize> {
        self.0.get(k).copied()
    }

    /// `self ⋆ other`.
    pub fn concat(&self, other: &Position) -> Position {
        let mut entries = Vec::with_capacity(self.len() + other.len());
        entries.extend_from_slice(&self.0);
        entries.extend_from_slice(&other.0);
        Position(entries)
    }

    /// `self ⋆ ⟨i⟩`.
    pub fn child(&self, i: usize) -> Position {
        let mut entries = self.0.clone();
        entries.push(i);
        Position(entries)
    }

    pub fn parent(&self) -> Option<Position> {
        let (_, init) = self.0.split_last()?;
        Some(Position(init.to_vec()))
    }

    pub fn prefix_relation(&self, q: &Position) -> PrefixRelation {
        if !q.0.starts_with(&self.0) {
            return PrefixRelation::NotPrefix;
        }
        match q.len() - self.len() {
            0 => PrefixRelation::Prefix,
            1 => PrefixRelation::ImmediatePrefix,
            _ => PrefixRelation::ProperPrefix,
        }
    }

    /// Returns `t` with `q = self ⋆ t`, if `self` is a prefix of `q`.
    pub fn strip_prefix(&self, q: &Position) -> Option<Position> {
        q.0.strip_prefix(self.0.as_slice()).map(|rest| Position(rest.to_vec()))
    }

    /// All restrictions of `self`, shortest first, including the root and `self`.
    pub fn prefixes(&self) -> impl Iterator<Item = Position> + '_ {
        (0..=self.len()).map(move |n| Position(self.0[..n].to_vec()))
    }
}

impl From<Vec<usize>> for Position {
    fn from(entries: Vec<usize>) -> Self {
        Position(entries)
    }
}

impl<const N: usize> From<[usize; N]> for Position {
    fn from(entries: [usize; N]) -> Self {
        Position(entries.to_vec())
    }
}

impl Ord for Position {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Position {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(".")?;
            }
            write!(f, "{i}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "⟨{self}⟩")
    }
}

impl Serialize for Position {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid position {0:?}: expected `ε` or dot-separated naturals")]
pub struct PositionParseError(pub String);

impl FromStr for Position {
    type Err = PositionParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "ε" || s.is_empty() {
            return Ok(Position::root());
        }
        s.split('.')
            .map(|part| part.parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map(Position)
            .map_err(|_| PositionParseError(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pos<const N: usize>(e: [usize; N]) -> Position {
        Position::from(e)
    }

    #[test]
    fn concat_examples() {
        assert_eq!(Position::root().concat(&pos([3])), pos([3]));
        assert_eq!(pos([0, 1]).concat(&pos([2])), pos([0, 1, 2]));
        let left = pos([1]).concat(&pos([2])).concat(&pos([3]));
        let right = pos([1]).concat(&pos([2]).concat(&pos([3])));
        assert_eq!(left, right);
        assert_eq!(left, pos([1, 2, 3]));
    }

    #[test]
    fn prefix_relation_examples() {
        assert_eq!(
            Position::root().prefix_relation(&pos([5])),
            PrefixRelation::ImmediatePrefix
        );
        assert_eq!(pos([0]).prefix_relation(&pos([0, 1, 1])), PrefixRelation::ProperPrefix);
        assert_eq!(pos([1]).prefix_relation(&pos([0, 1])), PrefixRelation::NotPrefix);
        assert_eq!(pos([4, 2]).prefix_relation(&pos([4, 2])), PrefixRelation::Prefix);
    }

    #[test]
    fn strip_prefix_examples() {
        assert_eq!(pos([0]).strip_prefix(&pos([0, 2])), Some(pos([2])));
        assert_eq!(Position::root().strip_prefix(&pos([7])), Some(pos([7])));
        assert_eq!(pos([1]).strip_prefix(&pos([0])), None);
    }

    #[test]
    fn text_form() {
        assert_eq!(Position::root().to_string(), "ε");
        assert_eq!(pos([0, 1, 2]).to_string(), "0.1.2");
        assert_eq!("0.1.2".parse::<Position>().unwrap(), pos([0, 1, 2]));
        assert_eq!("ε".parse::<Position>().unwrap(), Position::root());
        assert!("0..1".parse::<Position>().is_err());
    }

    #[test]
    fn length_lex_order() {
        let mut v = vec![pos([1]), pos([0, 0]), Position::root(), pos([0])];
        v.sort();
        assert_eq!(v, vec![Position::root(), pos([0]), pos([1]), pos([0, 0])]);
    }
}
