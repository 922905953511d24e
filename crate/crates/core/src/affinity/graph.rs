use std::collections::{BTreeMap, HashMap, HashSet};

use chrono::NaiveDateTime;

use super::CallRecord;

/// Undirected call graph over subscribers.
///
/// Both parties' copies of the same call share originator, destinatary and
/// start time, so they are counted once.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SocialGraph {
    users: Vec<String>,
    index: HashMap<String, usize>,
    adjacency: Vec<Vec<(usize, u32)>>,
}

impl SocialGraph {
    /// Builds the graph from records, keeping edges with at least
    /// `min_edge_calls` distinct calls. Records rejected by `keep` and
    /// self-calls are ignored.
    pub fn from_records<'a, I>(records: I, min_edge_calls: u32, keep: impl Fn(&CallRecord) -> bool) -> Self
    where
        I: IntoIterator<Item = &'a CallRecord>,
    {
        let mut seen: HashSet<(&'a str, &'a str, NaiveDateTime)> = HashSet::new();
        let mut counts: HashMap<(&'a str, &'a str), u32> = HashMap::new();
        for r in records {
            if r.originator == r.destinatary || !keep(r) {
                continue;
            }
            if !seen.insert((r.originator.as_str(), r.destinatary.as_str(), r.timestamp)) {
                continue;
            }
            let (a, b) = if r.originator < r.destinatary {
                (r.originator.as_str(), r.destinatary.as_str())
            } else {
                (r.destinatary.as_str(), r.originator.as_str())
            };
            *counts.entry((a, b)).or_insert(0) += 1;
        }
        Self::from_edges(counts.into_iter().filter(|(_, c)| *c >= min_edge_calls.max(1)))
    }

    /// Builds from `(u, v, intensity)` triples. Repeated pairs add up;
    /// self-loops and zero intensities are discarded.
    pub fn from_edges<I, S>(edges: I) -> Self
    where
        I: IntoIterator<Item = ((S, S), u32)>,
        S: AsRef<str>,
    {
        let mut merged: BTreeMap<(String, String), u32> = BTreeMap::new();
        for ((u, v), c) in edges {
            let (u, v) = (u.as_ref(), v.as_ref());
            if u == v || c == 0 {
                continue;
            }
            let key = if u < v { (u.to_string(), v.to_string()) } else { (v.to_string(), u.to_string()) };
            *merged.entry(key).or_insert(0) += c;
        }
        let mut g = SocialGraph::default();
        for ((u, v), c) in merged {
            let iu = g.intern(&u);
            let iv = g.intern(&v);
            g.adjacency[iu].push((iv, c));
            g.adjacency[iv].push((iu, c));
        }
        g
    }

    fn intern(&mut self, u: &str) -> usize {
        if let Some(&i) = self.index.get(u) {
            return i;
        }
        let i = self.users.len();
        self.users.push(u.to_string());
        self.index.insert(u.to_string(), i);
        self.adjacency.push(Vec::new());
        i
    }

    pub fn node_count(&self) -> usize {
        self.users.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn users(&self) -> impl Iterator<Item = &str> {
        self.users.iter().map(String::as_str)
    }

    pub fn contains(&self, user: &str) -> bool {
        self.index.contains_key(user)
    }

    /// Neighbours of `user` with their call counts; empty for unknown users.
    pub fn neighbours<'s>(&'s self, user: &str) -> impl Iterator<Item = (&'s str, u32)> + 's {
        let list: &[(usize, u32)] = match self.index.get(user) {
            Some(&i) => &self.adjacency[i],
            None => &[],
        };
        list.iter().map(move |&(j, c)| (self.users[j].as_str(), c))
    }

    pub fn intensity(&self, u: &str, v: &str) -> u32 {
        self.neighbours(u).find(|(w, _)| *w == v).map_or(0, |(_, c)| c)
    }
}
