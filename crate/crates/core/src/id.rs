use core::fmt;

use serde::{Deserialize, Serialize};

/// Identifier of a distributed energy resource. Ids are 1-based, matching the
/// numbering used in scenario files and traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DerId(pub u16);

impl DerId {
    /// Builds the id of the unit stored at zero-based `index`.
    pub fn from_index(index: usize) -> Self {
        DerId(index as u16 + 1)
    }

    /// Zero-based storage index. Panics on id 0.
    pub fn index(self) -> usize {
        assert!(self.0 >= 1, "DER ids are 1-based");
        self.0 as usize - 1
    }
}

impl fmt::Display for DerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
