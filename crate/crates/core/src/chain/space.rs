use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite state space with display labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SpaceDoc", into = "SpaceDoc")]
pub struct StateSpace {
    labels: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct SpaceDoc {
    labels: Vec<String>,
}

impl TryFrom<SpaceDoc> for StateSpace {
    type Error = Error;

    fn try_from(doc: SpaceDoc) -> Result<Self> {
        StateSpace::with_labels(doc.labels)
    }
}

impl From<StateSpace> for SpaceDoc {
    fn from(space: StateSpace) -> Self {
        SpaceDoc { labels: space.labels }
    }
}

impl StateSpace {
    /// States labelled `0..size`.
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidSpace("state space must be non-empty".into()));
        }
        Ok(Self { labels: (0..size).map(|i| i.to_string()).collect() })
    }

    /// States labelled `offset..offset + size`, e.g. `1..=5` for the figure examples.
    pub fn numbered_from(offset: usize, size: usize) -> Result<Self> {
        Self::with_labels((offset..offset + size).map(|i| i.to_string()).collect())
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidSpace("state space must be non-empty".into()));
        }
        let mut seen = HashSet::with_capacity(labels.len());
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(Error::InvalidSpace(format!("duplicate label {label:?}")));
            }
        }
        Ok(Self { labels })
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, state: usize) -> &str {
        &self.labels[state]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub(crate) fn check_same(&self, other: &StateSpace) -> Result<()> {
        if self.size() != other.size() {
            return Err(Error::DimensionMismatch { expected: self.size(), found: other.size() });
        }
        Ok(())
    }
}
