use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{GeoError, Point};
use crate::scalar::{cmp, Scalar};

/// Static k-d tree over identified points.
///
/// Built once, then read-only. Queries return exactly what an exhaustive
/// scan sorted by `(distance, id)` would.
#[derive(Debug, Clone)]
pub struct SpatialIndex<K, T> {
    items: Vec<(K, Point<T>)>,
    nodes: Vec<Node>,
    root: Option<usize>,
}

#[derive(Debug, Clone, Copy)]
struct Node {
    item: usize,
    axis: u8,
    left: Option<usize>,
    right: Option<usize>,
}

struct Candidate<'a, K, T> {
    d2: T,
    id: &'a K,
    item: usize,
}

impl<K: Ord, T: Scalar> Candidate<'_, K, T> {
    fn key_cmp(&self, other: &Self) -> Ordering {
        cmp(&self.d2, &other.d2).then_with(|| self.id.cmp(other.id))
    }
}

impl<K: Ord, T: Scalar> PartialEq for Candidate<'_, K, T> {
    fn eq(&self, other: &Self) -> bool {
        self.key_cmp(other) == Ordering::Equal
    }
}
impl<K: Ord, T: Scalar> Eq for Candidate<'_, K, T> {}
impl<K: Ord, T: Scalar> PartialOrd for Candidate<'_, K, T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<K: Ord, T: Scalar> Ord for Candidate<'_, K, T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key_cmp(other)
    }
}

impl<K: Ord + Clone, T: Scalar> SpatialIndex<K, T> {
    pub fn build(items: Vec<(K, Point<T>)>) -> Self {
        let mut order: Vec<usize> = (0..items.len()).collect();
        let mut nodes = Vec::with_capacity(items.len());
        let root = build_rec(&items, &mut order[..], 0, &mut nodes);
        Self { items, nodes, root }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, idx: usize) -> &(K, Point<T>) {
        &self.items[idx]
    }

    /// The `min(k, len)` nearest items by Euclidean distance, ascending,
    /// ties broken by ascending id. Returns `(id, distance)` pairs.
    pub fn knn(&self, q: &Point<T>, k: usize) -> Result<Vec<(K, T)>, GeoError> {
        Ok(self
            .knn_indices(q, k)?
            .into_iter()
            .map(|(i, d)| (self.items[i].0.clone(), d))
            .collect())
    }

    /// Same as [`knn`](Self::knn) but yields positions in the index.
    pub fn knn_indices(&self, q: &Point<T>, k: usize) -> Result<Vec<(usize, T)>, GeoError> {
        let root = self.root.ok_or(GeoError::EmptyIndex)?;
        if k == 0 {
            return Err(GeoError::InvalidArgument("k must be at least 1".into()));
        }
        let mut heap: BinaryHeap<Candidate<K, T>> = BinaryHeap::with_capacity(k + 1);
        self.search(root, q, k, &mut heap);
        let mut out: Vec<Candidate<K, T>> = heap.into_vec();
        out.sort();
        Ok(out.into_iter().map(|c| (c.item, c.d2.sqrt())).collect())
    }

    pub fn nearest(&self, q: &Point<T>) -> Result<(K, T), GeoError> {
        Ok(self.knn(q, 1)?.remove(0))
    }

    fn search<'a>(&'a self, node: usize, q: &Point<T>, k: usize, heap: &mut BinaryHeap<Candidate<'a, K, T>>) {
        let n = self.nodes[node];
        let (id, p) = &self.items[n.item];
        let cand = Candidate {
            d2: p.distance_squared(q),
            id,
            item: n.item,
        };
        if heap.len() < k {
            heap.push(cand);
        } else if cand < *heap.peek().unwrap() {
            heap.pop();
            heap.push(cand);
        }

        let diff = if n.axis == 0 { q.x - p.x } else { q.y - p.y };
        let (near, far) = if diff < T::zero() { (n.left, n.right) } else { (n.right, n.left) };
        if let Some(c) = near {
            self.search(c, q, k, heap);
        }
        if let Some(c) = far {
            // Equal plane distance may still hide a tie with a smaller id.
            if heap.len() < k || diff * diff <= heap.peek().unwrap().d2 {
                self.search(c, q, k, heap);
            }
        }
    }
}

fn build_rec<K: Ord, T: Scalar>(
    items: &[(K, Point<T>)],
    order: &mut [usize],
    depth: usize,
    nodes: &mut Vec<Node>,
) -> Option<usize> {
    if order.is_empty() {
        return None;
    }
    let axis = (depth % 2) as u8;
    let coord = |i: usize| if axis == 0 { items[i].1.x } else { items[i].1.y };
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| cmp(&coord(a), &coord(b)).then_with(|| items[a].0.cmp(&items[b].0)));
    let item = order[mid];
    let slot = nodes.len();
    nodes.push(Node {
        item,
        axis,
        left: None,
        right: None,
    });
    let (lo, rest) = order.split_at_mut(mid);
    let hi = &mut rest[1..];
    let left = build_rec(items, lo, depth + 1, nodes);
    let right = build_rec(items, hi, depth + 1, nodes);
    nodes[slot].left = left;
    nodes[slot].right = right;
    Some(slot)
}
