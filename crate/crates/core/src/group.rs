use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Experiment group a user is assigned to on first contact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Group {
    G1,
    G2,
    G3,
    G4,
    G5,
}

impl Group {
    pub const ALL: [Group; 5] = [Group::G1, Group::G2, Group::G3, Group::G4, Group::G5];

    pub fn as_str(self) -> &'static str {
        match self {
            Group::G1 => "G1",
            Group::G2 => "G2",
            Group::G3 => "G3",
            Group::G4 => "G4",
            Group::G5 => "G5",
        }
    }
}

impl std::fmt::Display for Group {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "G1" | "g1" => Ok(Group::G1),
            "G2" | "g2" => Ok(Group::G2),
            "G3" | "g3" => Ok(Group::G3),
            "G4" | "g4" => Ok(Group::G4),
            "G5" | "g5" => Ok(Group::G5),
            other => Err(Error::UnknownGroup {
                given: other.to_string(),
            }),
        }
    }
}
