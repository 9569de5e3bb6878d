use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Binary diagnosis class. Asphyxia is the positive class (+1) everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Normal,
    Asphyxia,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Normal => -1.0,
            Label::Asphyxia => 1.0,
        }
    }

    /// Maps a decision value to a label; exactly zero goes to asphyxia.
    pub fn from_decision(value: f64) -> Label {
        if value >= 0.0 {
            Label::Asphyxia
        } else {
            Label::Normal
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Normal => "normal",
            Label::Asphyxia => "asphyxia",
        }
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Normal => Label::Asphyxia,
            Label::Asphyxia => Label::Normal,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownLabel(pub String);

impl fmt::Display for UnknownLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown label {:?} (expected normal or asphyxia)", self.0)
    }
}

impl std::error::Error for UnknownLabel {}

impl FromStr for Label {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" => Ok(Label::Normal),
            "asphyxia" => Ok(Label::Asphyxia),
            _ => Err(UnknownLabel(s.to_string())),
        }
    }
}
