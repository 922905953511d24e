use std::collections::{BTreeMap, HashMap};

use chrono::{Datelike, NaiveDateTime, NaiveTime, Timelike, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CallRecord, IngestStats};
use crate::seed::keyed_seed;

/// Weeknight window used to infer where a subscriber sleeps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NightWindow {
    pub evening_start: NaiveTime,
    pub morning_end: NaiveTime,
    pub evening_days: Vec<Weekday>,
    pub morning_days: Vec<Weekday>,
}

impl Default for NightWindow {
    fn default() -> Self {
        use Weekday::*;
        NightWindow {
            evening_start: NaiveTime::from_hms_opt(20, 0, 0).unwrap(),
            morning_end: NaiveTime::from_hms_opt(6, 0, 0).unwrap(),
            evening_days: vec![Mon, Tue, Wed, Thu],
            morning_days: vec![Tue, Wed, Thu, Fri],
        }
    }
}

impl NightWindow {
    pub fn contains(&self, t: &NaiveDateTime) -> bool {
        let day = t.weekday();
        let time = t.time();
        (self.evening_days.contains(&day) && time >= self.evening_start)
            || (self.morning_days.contains(&day) && time < self.morning_end)
    }

    /// Window with whole-hour bounds; `friday_morning` controls whether the
    /// small hours of Friday still count as Thursday night.
    pub fn with_hours(evening_start_hour: u32, morning_end_hour: u32, friday_morning: bool) -> Option<Self> {
        use Weekday::*;
        let mut w = NightWindow {
            evening_start: NaiveTime::from_hms_opt(evening_start_hour, 0, 0)?,
            morning_end: NaiveTime::from_hms_opt(morning_end_hour, 0, 0)?,
            ..NightWindow::default()
        };
        if !friday_morning {
            w.morning_days = vec![Tue, Wed, Thu];
        }
        debug_assert!(w.morning_end.hour() <= w.evening_start.hour());
        Some(w)
    }
}

/// Night-call counts per user and antenna. Counters built over disjoint
/// slices of the record stream merge associatively.
#[derive(Debug, Clone, Default)]
pub struct HomeCounter {
    window: NightWindow,
    counts: HashMap<String, HashMap<String, u32>>,
    pub stats: IngestStats,
}

impl HomeCounter {
    pub fn new(window: NightWindow) -> Self {
        HomeCounter { window, counts: HashMap::new(), stats: IngestStats::default() }
    }

    /// Records on towers rejected by `known_tower` are counted and ignored.
    pub fn add(&mut self, record: &CallRecord, known_tower: impl Fn(&str) -> bool) {
        self.stats.records += 1;
        if record.originator == record.destinatary {
            self.stats.self_calls += 1;
            return;
        }
        if !known_tower(&record.tower) {
            self.stats.unknown_tower += 1;
            return;
        }
        if !self.window.contains(&record.timestamp) {
            return;
        }
        self.stats.night_events += 1;
        *self
            .counts
            .entry(record.located_user().to_string())
            .or_default()
            .entry(record.tower.clone())
            .or_insert(0) += 1;
    }

    pub fn merge(&mut self, other: HomeCounter) {
        self.stats.merge(&other.stats);
        for (user, per_antenna) in other.counts {
            let mine = self.counts.entry(user).or_default();
            for (a, c) in per_antenna {
                *mine.entry(a).or_insert(0) += c;
            }
        }
    }

    /// Resolves each user's modal night antenna. Ties are settled by a draw
    /// seeded from `seed` and the user id alone, so the outcome does not
    /// depend on how the records were partitioned.
    pub fn finish(self, seed: u64) -> HomeAssignment {
        let mut homes = BTreeMap::new();
        for (user, per_antenna) in self.counts {
            let total: u32 = per_antenna.values().sum();
            let best = per_antenna.values().copied().max().unwrap_or(0);
            let mut candidates: Vec<&String> =
                per_antenna.iter().filter(|(_, &c)| c == best).map(|(a, _)| a).collect();
            candidates.sort();
            let pick = if candidates.len() == 1 {
                0
            } else {
                ChaCha8Rng::seed_from_u64(keyed_seed(seed, &user)).gen_range(0..candidates.len())
            };
            let antenna = candidates[pick].clone();
            homes.insert(user, HomeAntenna { antenna, night_calls: total, home_calls: best });
        }
        HomeAssignment { homes, stats: self.stats }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HomeAntenna {
    pub antenna: String,
    /// All night events of the user.
    pub night_calls: u32,
    /// Night events on the chosen antenna.
    pub home_calls: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HomeAssignment {
    pub homes: BTreeMap<String, HomeAntenna>,
    pub stats: IngestStats,
}

impl HomeAssignment {
    pub fn get(&self, user: &str) -> Option<&str> {
        self.homes.get(user).map(|h| h.antenna.as_str())
    }

    pub fn len(&self) -> usize {
        self.homes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.homes.is_empty()
    }

    pub fn from_pairs<I, U, A>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (U, A)>,
        U: Into<String>,
        A: Into<String>,
    {
        let homes = pairs
            .into_iter()
            .map(|(u, a)| (u.into(), HomeAntenna { antenna: a.into(), night_calls: 1, home_calls: 1 }))
            .collect();
        HomeAssignment { homes, stats: IngestStats::default() }
    }
}

/// Single-pass home detection with the default night window.
pub fn detect_home_antennas<'a, I>(records: I, known_tower: impl Fn(&str) -> bool, seed: u64) -> HomeAssignment
where
    I: IntoIterator<Item = &'a CallRecord>,
{
    let mut counter = HomeCounter::new(NightWindow::default());
    for r in records {
        counter.add(r, &known_tower);
    }
    counter.finish(seed)
}
