use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "DL")]
    Dl,
    #[serde(rename = "UL")]
    Ul,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::Dl, Direction::Ul];

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Dl => "DL",
            Direction::Ul => "UL",
        }
    }

    pub fn index(self) -> usize {
        match self {
            Direction::Dl => 0,
            Direction::Ul => 1,
        }
    }
}

/// Static, network-wide alternating pattern starting with DL.
pub fn tdd_direction(slot: u64) -> Direction {
    if slot % 2 == 0 {
        Direction::Dl
    } else {
        Direction::Ul
    }
}
