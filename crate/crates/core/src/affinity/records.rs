use std::str::FromStr;

use chrono::NaiveDateTime;

use super::AffinityError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Incoming,
    Outgoing,
}

impl FromStr for Direction {
    type Err = AffinityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "incoming" | "in" | "i" => Ok(Direction::Incoming),
            "outgoing" | "out" | "o" => Ok(Direction::Outgoing),
            other => Err(AffinityError::Parse(format!("unknown direction {other:?}"))),
        }
    }
}

impl Direction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::Incoming => "incoming",
            Direction::Outgoing => "outgoing",
        }
    }
}

/// One anonymised call event as stored by the operator.
///
/// Each party's copy of a call carries the tower serving that party: an
/// outgoing record locates the originator, an incoming record the destinatary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallRecord {
    pub originator: String,
    pub destinatary: String,
    pub direction: Direction,
    pub timestamp: NaiveDateTime,
    pub duration: u32,
    pub tower: String,
}

impl CallRecord {
    /// The subscriber whose presence this record attests.
    pub fn located_user(&self) -> &str {
        match self.direction {
            Direction::Outgoing => &self.originator,
            Direction::Incoming => &self.destinatary,
        }
    }
}

/// Accepts `YYYY-MM-DDTHH:MM[:SS]` with a `T` or a space separator.
pub fn parse_timestamp(s: &str) -> Result<NaiveDateTime, AffinityError> {
    let s = s.trim();
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(t);
        }
    }
    Err(AffinityError::Parse(format!("bad timestamp {s:?}")))
}

/// Row accounting for the CDR stage.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestStats {
    pub records: u64,
    pub unknown_tower: u64,
    pub self_calls: u64,
    pub night_events: u64,
}

impl IngestStats {
    pub fn merge(&mut self, other: &IngestStats) {
        self.records += other.records;
        self.unknown_tower += other.unknown_tower;
        self.self_calls += other.self_calls;
        self.night_events += other.night_events;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timestamps_with_either_separator() {
        let a = parse_timestamp("2024-03-04T21:30:00").unwrap();
        let b = parse_timestamp("2024-03-04 21:30").unwrap();
        assert_eq!(a, b);
        assert!(parse_timestamp("04/03/2024").is_err());
    }

    #[test]
    fn direction_picks_the_located_party() {
        let mut r = CallRecord {
            originator: "u".into(),
            destinatary: "v".into(),
            direction: "outgoing".parse().unwrap(),
            timestamp: parse_timestamp("2024-03-04T21:30:00").unwrap(),
            duration: 60,
            tower: "A".into(),
        };
        assert_eq!(r.located_user(), "u");
        r.direction = Direction::Incoming;
        assert_eq!(r.located_user(), "v");
        assert!("sideways".parse::<Direction>().is_err());
    }
}
