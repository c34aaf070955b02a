use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::Error;

/// Adjudicated alarm outcome. `TrueAlarm` is the positive class everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    FalseAlarm,
    TrueAlarm,
}

impl Label {
    pub fn is_true(self) -> bool {
        self == Label::TrueAlarm
    }

    /// 1.0 for a true alarm, 0.0 otherwise.
    pub fn target(self) -> f64 {
        if self.is_true() {
            1.0
        } else {
            0.0
        }
    }

    pub fn from_bool(is_true: bool) -> Self {
        if is_true {
            Label::TrueAlarm
        } else {
            Label::FalseAlarm
        }
    }

    pub fn other(self) -> Self {
        Label::from_bool(!self.is_true())
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.is_true() { "true" } else { "false" })
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "true" | "1" | "t" => Ok(Label::TrueAlarm),
            "false" | "0" | "f" => Ok(Label::FalseAlarm),
            other => Err(Error::InvalidInput(format!("unrecognized label {other:?}"))),
        }
    }
}
