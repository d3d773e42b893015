//! Hierarchical content names.
//!
//! Names are flat UTF-8 components joined by `/`. There is no TLV wire
//! encoding: packets only ever exist in memory inside one simulation run.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NameError {
    #[error("a name needs at least one component")]
    Empty,
    #[error("empty component in name `{0}`")]
    EmptyComponent(String),
    #[error("`{prefix}` is not a prefix of `{name}`")]
    NotAPrefix { prefix: Name, name: Name },
}

/// An ordered, non-empty list of non-empty components, e.g. `/net/ap5/p1/42`.
///
/// Cloning is cheap: components are shared.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Name(Arc<[Arc<str>]>);

impl Name {
    pub fn new<I, S>(components: I) -> Result<Self, NameError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut parts: Vec<Arc<str>> = Vec::new();
        for c in components {
            let c = c.as_ref();
            if c.is_empty() {
                return Err(NameError::EmptyComponent(parts.join("/")));
            }
            parts.push(Arc::from(c));
        }
        if parts.is_empty() {
            return Err(NameError::Empty);
        }
        Ok(Name(parts.into()))
    }

    fn from_parts(parts: Vec<Arc<str>>) -> Self {
        debug_assert!(!parts.is_empty());
        Name(parts.into())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Always false; kept for clippy's `len_without_is_empty`.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn components(&self) -> &[Arc<str>] {
        &self.0
    }

    pub fn component(&self, i: usize) -> Option<&str> {
        self.0.get(i).map(|c| c.as_ref())
    }

    pub fn last(&self) -> &str {
        self.0.last().expect("names are non-empty")
    }

    /// True iff `self`'s components are an exact leading sublist of `other`'s.
    pub fn is_prefix_of(&self, other: &Name) -> bool {
        self.len() <= other.len() && self.0.iter().zip(other.0.iter()).all(|(a, b)| a == b)
    }

    /// The first `len` components. `None` when `len` is 0 or too long.
    pub fn prefix(&self, len: usize) -> Option<Name> {
        if len == 0 || len > self.len() {
            return None;
        }
        Some(Name::from_parts(self.0[..len].to_vec()))
    }

    /// A new name with `component` appended.
    pub fn child(&self, component: impl AsRef<str>) -> Name {
        let c = component.as_ref();
        assert!(!c.is_empty(), "name components must be non-empty");
        let mut parts = self.0.to_vec();
        parts.push(Arc::from(c));
        Name::from_parts(parts)
    }

    /// Components after the first `len`.
    pub fn suffix_after(&self, len: usize) -> &[Arc<str>] {
        &self.0[len.min(self.len())..]
    }
}

/// Replaces the leading `old_prefix` of `name` with `new_prefix`, keeping the
/// remaining components. This is how a redirected Interest for
/// `/net/oAP/ale1` becomes `/net/nAP/ale1`.
pub fn rewrite_name(name: &Name, old_prefix: &Name, new_prefix: &Name) -> Result<Name, NameError> {
    if !old_prefix.is_prefix_of(name) {
        return Err(NameError::NotAPrefix {
            prefix: old_prefix.clone(),
            name: name.clone(),
        });
    }
    let mut parts = new_prefix.0.to_vec();
    parts.extend(name.suffix_after(old_prefix.len()).iter().cloned());
    Ok(Name::from_parts(parts))
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in self.0.iter() {
            write!(f, "/{c}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Name({self})")
    }
}

impl FromStr for Name {
    type Err = NameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let trimmed = s.strip_prefix('/').unwrap_or(s);
        if trimmed.is_empty() {
            return Err(NameError::Empty);
        }
        let parts: Vec<&str> = trimmed.split('/').collect();
        if parts.iter().any(|p| p.is_empty()) {
            return Err(NameError::EmptyComponent(s.to_string()));
        }
        Name::new(parts)
    }
}

impl Serialize for Name {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Name {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Shorthand for tests and fixtures. Panics on malformed input.
#[macro_export]
macro_rules! name {
    ($s:expr) => {
        $s.parse::<$crate::name::Name>().expect("valid name literal")
    };
}
