use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use super::AccessError;
use crate::geo::{Point, SpatialIndex};
use crate::scalar::{cmp, Scalar};

/// Undirected street network with edge lengths in metres.
#[derive(Debug, Clone)]
pub struct StreetGraph<T> {
    ids: Vec<String>,
    points: Vec<Point<T>>,
    adjacency: Vec<Vec<(usize, T)>>,
    index: SpatialIndex<usize, T>,
}

/// Edge rows dropped while loading.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GraphIngest {
    pub duplicate_edges: usize,
    pub self_loops: usize,
    pub invalid_lengths: usize,
    pub unknown_nodes: usize,
}

#[derive(Clone, Copy)]
struct State<T> {
    dist: T,
    node: usize,
}

impl<T: Scalar> PartialEq for State<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Scalar> Eq for State<T> {}
impl<T: Scalar> PartialOrd for State<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Scalar> Ord for State<T> {
    // Reversed so the max-heap pops the closest node first.
    fn cmp(&self, other: &Self) -> Ordering {
        cmp(&other.dist, &self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

impl<T: Scalar> StreetGraph<T> {
    /// Builds the graph. Parallel edges collapse to the shortest one; loops,
    /// non-positive lengths and edges naming unknown nodes are dropped.
    pub fn new(
        nodes: Vec<(String, Point<T>)>,
        edges: impl IntoIterator<Item = (String, String, T)>,
    ) -> Result<(Self, GraphIngest), AccessError> {
        if nodes.is_empty() {
            return Err(AccessError::EmptyGraph);
        }
        let lookup: HashMap<&str, usize> = nodes.iter().enumerate().map(|(i, (id, _))| (id.as_str(), i)).collect();
        let mut ingest = GraphIngest::default();
        let mut best: BTreeMap<(usize, usize), T> = BTreeMap::new();
        for (a, b, len) in edges {
            let (Some(&ia), Some(&ib)) = (lookup.get(a.as_str()), lookup.get(b.as_str())) else {
                ingest.unknown_nodes += 1;
                continue;
            };
            if ia == ib {
                ingest.self_loops += 1;
                continue;
            }
            if !(len > T::zero()) || !len.is_finite() {
                ingest.invalid_lengths += 1;
                continue;
            }
            let key = (ia.min(ib), ia.max(ib));
            match best.get_mut(&key) {
                Some(l) => {
                    ingest.duplicate_edges += 1;
                    if len < *l {
                        *l = len;
                    }
                }
                None => {
                    best.insert(key, len);
                }
            }
        }
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for ((a, b), len) in best {
            adjacency[a].push((b, len));
            adjacency[b].push((a, len));
        }
        let index = SpatialIndex::build(nodes.iter().enumerate().map(|(i, (_, p))| (i, *p)).collect());
        let (ids, points) = nodes.into_iter().unzip();
        Ok((StreetGraph { ids, points, adjacency, index }, ingest))
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn node_id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn node_point(&self, i: usize) -> Point<T> {
        self.points[i]
    }

    pub fn neighbours(&self, i: usize) -> &[(usize, T)] {
        &self.adjacency[i]
    }

    /// Nearest node and the straight-line distance to it.
    pub fn snap(&self, p: &Point<T>) -> (usize, T) {
        self.index.nearest(p).expect("graph has nodes")
    }

    /// Network distances from `source` to each of `targets`, infinite when
    /// unreachable. Stops once every target is settled.
    pub fn distances_to(&self, source: usize, targets: &[usize]) -> Vec<T> {
        let n = self.node_count();
        let mut dist = vec![T::infinity(); n];
        let mut wanted = vec![false; n];
        let mut remaining = 0usize;
        for &t in targets {
            if !wanted[t] {
                wanted[t] = true;
                remaining += 1;
            }
        }
        let mut heap = BinaryHeap::new();
        dist[source] = T::zero();
        heap.push(State { dist: T::zero(), node: source });
        while let Some(State { dist: d, node }) = heap.pop() {
            if d > dist[node] {
                continue;
            }
            if wanted[node] {
                wanted[node] = false;
                remaining -= 1;
                if remaining == 0 {
                    break;
                }
            }
            for &(next, len) in &self.adjacency[node] {
                let nd = d + len;
                if nd < dist[next] {
                    dist[next] = nd;
                    heap.push(State { dist: nd, node: next });
                }
            }
        }
        targets.iter().map(|&t| dist[t]).collect()
    }

    /// Walking time in minutes between two arbitrary points: straight-line
    /// snaps onto the nearest nodes plus the network path, at `speed_kmh`.
    /// Infinite when the snapped nodes are disconnected.
    pub fn shortest_path_time(&self, from: &Point<T>, to: &Point<T>, speed_kmh: T) -> Result<T, AccessError> {
        let per_minute = metres_per_minute(speed_kmh)?;
        let (a, da) = self.snap(from);
        let (b, db) = self.snap(to);
        let path = self.distances_to(a, &[b])[0];
        Ok((da + path + db) / per_minute)
    }
}

pub(crate) fn metres_per_minute<T: Scalar>(speed_kmh: T) -> Result<T, AccessError> {
    if !(speed_kmh > T::zero()) || !speed_kmh.is_finite() {
        return Err(AccessError::InvalidSpeed(speed_kmh.f64()));
    }
    Ok(speed_kmh * T::of(1000.0 / 60.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> StreetGraph<f64> {
        let nodes = vec![("a".to_string(), Point::new(0.0, 0.0)), ("b".to_string(), Point::new(5000.0, 0.0))];
        StreetGraph::new(nodes, [("a".to_string(), "b".to_string(), 5000.0)]).unwrap().0
    }

    #[test]
    fn five_km_at_walking_speed_is_an_hour() {
        let g = line();
        let t = g.shortest_path_time(&Point::new(0.0, 0.0), &Point::new(5000.0, 0.0), 5.0).unwrap();
        assert!((t - 60.0).abs() < 1e-12);
        let same = g.shortest_path_time(&Point::new(1.0, 0.0), &Point::new(1.0, 0.0), 5.0).unwrap();
        assert!((same - 2.0 / (5000.0 / 60.0)).abs() < 1e-15);
        assert!(g.shortest_path_time(&Point::new(0.0, 0.0), &Point::new(1.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn ingest_cleans_edges() {
        let nodes = vec![
            ("a".to_string(), Point::new(0.0, 0.0)),
            ("b".to_string(), Point::new(1.0, 0.0)),
            ("c".to_string(), Point::new(9.0, 9.0)),
        ];
        let edges = vec![
            ("a".to_string(), "b".to_string(), 3.0),
            ("b".to_string(), "a".to_string(), 2.0),
            ("a".to_string(), "a".to_string(), 1.0),
            ("a".to_string(), "z".to_string(), 1.0),
            ("b".to_string(), "c".to_string(), -1.0),
        ];
        let (g, ing) = StreetGraph::<f64>::new(nodes, edges).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.neighbours(0), &[(1, 2.0)]);
        assert_eq!(ing, GraphIngest { duplicate_edges: 1, self_loops: 1, invalid_lengths: 1, unknown_nodes: 1 });
        // "c" is isolated.
        let t = g.shortest_path_time(&Point::new(0.0, 0.0), &Point::new(9.0, 9.0), 5.0).unwrap();
        assert!(t.is_infinite());
        assert!(StreetGraph::<f64>::new(vec![], Vec::new()).is_err());
    }
}
