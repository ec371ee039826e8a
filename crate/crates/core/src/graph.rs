//! Point sets and breadth-first search on the step graph.
//!
//! Every path the constructions build is found here: fewest hops first,
//! then least metric length. Neither choice depends on the scale of the
//! metric, which keeps the constructions invariant under multiplying all
//! distances.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::space::{MetricSpace, PointId};

/// Fixed-universe bit set of points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointSet {
    bits: Vec<u64>,
    universe: usize,
}

impl PointSet {
    pub fn empty(universe: usize) -> Self {
        PointSet { bits: vec![0; universe.div_ceil(64)], universe }
    }

    pub fn full(universe: usize) -> Self {
        let mut s = Self::empty(universe);
        for i in 0..universe {
            s.insert(PointId(i));
        }
        s
    }

    pub fn from_points(universe: usize, pts: impl IntoIterator<Item = PointId>) -> Self {
        let mut s = Self::empty(universe);
        for p in pts {
            s.insert(p);
        }
        s
    }

    /// Points of `space` satisfying `pred`.
    pub fn filter(space: &MetricSpace, pred: impl Fn(PointId) -> bool) -> Self {
        Self::from_points(space.len(), space.points().filter(|&p| pred(p)))
    }

    #[inline]
    pub fn universe(&self) -> usize {
        self.universe
    }

    #[inline]
    pub fn insert(&mut self, p: PointId) -> bool {
        let (w, b) = (p.0 / 64, p.0 % 64);
        let had = self.bits[w] >> b & 1 == 1;
        self.bits[w] |= 1 << b;
        !had
    }

    #[inline]
    pub fn remove(&mut self, p: PointId) {
        self.bits[p.0 / 64] &= !(1 << (p.0 % 64));
    }

    #[inline]
    pub fn contains(&self, p: PointId) -> bool {
        p.0 < self.universe && self.bits[p.0 / 64] >> (p.0 % 64) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = PointId> + '_ {
        (0..self.universe).map(PointId).filter(|&p| self.contains(p))
    }

    pub fn to_vec(&self) -> Vec<PointId> {
        self.iter().collect()
    }

    pub fn union_with(&mut self, other: &PointSet) {
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= *b;
        }
    }

    pub fn intersect_with(&mut self, other: &PointSet) {
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a &= *b;
        }
    }

    pub fn subtract(&mut self, other: &PointSet) {
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a &= !*b;
        }
    }

    pub fn intersects(&self, other: &PointSet) -> bool {
        self.bits.iter().zip(&other.bits).any(|(a, b)| a & b != 0)
    }
}

impl Extend<PointId> for PointSet {
    fn extend<T: IntoIterator<Item = PointId>>(&mut self, iter: T) {
        for p in iter {
            self.insert(p);
        }
    }
}

/// Open neighbourhood `N(set, r)`, the points at distance `< r` from `set`.
pub fn neighborhood(space: &MetricSpace, set: &[PointId], r: f64) -> PointSet {
    PointSet::filter(space, |p| set.iter().any(|&q| crate::num::lt(space.dist(p, q), r)))
}

/// Closed neighbourhood, the points at distance `≤ r` from `set`.
pub fn closed_neighborhood(space: &MetricSpace, set: &[PointId], r: f64) -> PointSet {
    PointSet::filter(space, |p| set.iter().any(|&q| crate::num::le(space.dist(p, q), r)))
}

/// Shortest hop path from any of `sources` to the first point satisfying
/// `is_target`, moving only through points accepted by `allowed`. Sources
/// are always enterable. Among paths with the fewest hops the one of least
/// metric length is returned (lengths compared with relative tolerance, then
/// lowest indices), so straight runs stay straight and the result does not
/// change when all distances are scaled.
pub fn bfs_path(
    space: &MetricSpace,
    allowed: impl Fn(PointId) -> bool,
    sources: &[PointId],
    is_target: impl Fn(PointId) -> bool,
) -> Option<Vec<PointId>> {
    let n = space.len();
    let mut hop = vec![u32::MAX; n];
    let mut cost = vec![0.0f64; n];
    let mut parent = vec![u32::MAX; n];
    let mut layer: Vec<PointId> = Vec::new();
    for &s in sources {
        if hop[s.0] != u32::MAX {
            continue;
        }
        if is_target(s) {
            return Some(vec![s]);
        }
        hop[s.0] = 0;
        parent[s.0] = s.0 as u32;
        layer.push(s);
    }
    let mut t = 0u32;
    while !layer.is_empty() {
        layer.sort_unstable();
        let mut next: Vec<PointId> = Vec::new();
        for &u in &layer {
            for &v in space.neighbors(u) {
                let c = cost[u.0] + space.dist(u, v);
                if hop[v.0] == u32::MAX {
                    if !allowed(v) {
                        continue;
                    }
                    hop[v.0] = t + 1;
                    cost[v.0] = c;
                    parent[v.0] = u.0 as u32;
                    next.push(v);
                } else if hop[v.0] == t + 1 && crate::num::lt(c, cost[v.0]) {
                    cost[v.0] = c;
                    parent[v.0] = u.0 as u32;
                }
            }
        }
        let mut best: Option<PointId> = None;
        for &v in &next {
            if is_target(v) {
                let better = match best {
                    None => true,
                    Some(b) => crate::num::lt(cost[v.0], cost[b.0]) || (!crate::num::lt(cost[b.0], cost[v.0]) && v < b),
                };
                if better {
                    best = Some(v);
                }
            }
        }
        if let Some(v) = best {
            let mut path = vec![v];
            let mut cur = v;
            while parent[cur.0] as usize != cur.0 {
                cur = PointId(parent[cur.0] as usize);
                path.push(cur);
            }
            path.reverse();
            return Some(path);
        }
        layer = next;
        t += 1;
    }
    None
}

/// Plain breadth-first search visiting neighbours in the order of
/// `priority` (indexed by point), used by randomized restarts; without a
/// priority this is [`bfs_path`].
pub fn bfs_path_ordered(
    space: &MetricSpace,
    allowed: impl Fn(PointId) -> bool,
    sources: &[PointId],
    is_target: impl Fn(PointId) -> bool,
    priority: Option<&[u32]>,
) -> Option<Vec<PointId>> {
    let Some(pr) = priority else {
        return bfs_path(space, allowed, sources, is_target);
    };
    let n = space.len();
    let mut parent = vec![u32::MAX; n];
    let mut queue = VecDeque::new();
    for &s in sources {
        if parent[s.0] != u32::MAX {
            continue;
        }
        if is_target(s) {
            return Some(vec![s]);
        }
        parent[s.0] = s.0 as u32;
        queue.push_back(s);
    }
    let mut scratch: Vec<PointId> = Vec::new();
    while let Some(u) = queue.pop_front() {
        scratch.clear();
        scratch.extend_from_slice(space.neighbors(u));
        scratch.sort_by_key(|p| pr[p.0]);
        for &v in &scratch {
            if parent[v.0] != u32::MAX || !allowed(v) {
                continue;
            }
            parent[v.0] = u.0 as u32;
            if is_target(v) {
                let mut path = vec![v];
                let mut cur = v;
                while parent[cur.0] as usize != cur.0 {
                    cur = PointId(parent[cur.0] as usize);
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            queue.push_back(v);
        }
    }
    None
}

/// Points reachable from `start` through `allowed` points (`start` included).
pub fn component_of(
    space: &MetricSpace,
    start: PointId,
    allowed: impl Fn(PointId) -> bool,
) -> PointSet {
    let mut seen = PointSet::empty(space.len());
    seen.insert(start);
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        for &v in space.neighbors(u) {
            if !seen.contains(v) && allowed(v) {
                seen.insert(v);
                queue.push_back(v);
            }
        }
    }
    seen
}

/// Component labels of the subgraph induced on `allowed`; points outside
/// get `u32::MAX`.
pub fn components(space: &MetricSpace, allowed: &PointSet) -> Vec<u32> {
    let mut label = vec![u32::MAX; space.len()];
    let mut next = 0u32;
    for s in allowed.iter() {
        if label[s.0] != u32::MAX {
            continue;
        }
        label[s.0] = next;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &v in space.neighbors(u) {
                if label[v.0] == u32::MAX && allowed.contains(v) {
                    label[v.0] = next;
                    queue.push_back(v);
                }
            }
        }
        next += 1;
    }
    label
}

/// True when consecutive points of `path` are step-graph neighbours.
pub fn is_step_path(space: &MetricSpace, path: &[PointId]) -> bool {
    path.windows(2).all(|w| space.neighbors(w[0]).binary_search(&w[1]).is_ok())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{grid_index, grid_square};

    #[test]
    fn point_set_basics() {
        let mut s = PointSet::empty(130);
        assert!(s.insert(PointId(129)));
        assert!(!s.insert(PointId(129)));
        s.insert(PointId(3));
        assert_eq!(s.to_vec(), vec![PointId(3), PointId(129)]);
        let mut t = PointSet::from_points(130, [PointId(3)]);
        assert!(s.intersects(&t));
        t.union_with(&s);
        t.subtract(&PointSet::from_points(130, [PointId(129)]));
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn bfs_finds_hop_shortest_path() {
        let s = grid_square(4).unwrap();
        let a = grid_index(4, 0, 0);
        let b = grid_index(4, 4, 4);
        let p = bfs_path(&s, |_| true, &[a], |q| q == b).unwrap();
        assert_eq!(p.len(), 5);
        assert!(is_step_path(&s, &p));
        let blocked = grid_index(4, 2, 2);
        let p = bfs_path(&s, |q| q != blocked, &[a], |q| q == b).unwrap();
        assert!(!p.contains(&blocked));
    }

    #[test]
    fn bfs_keeps_rows_straight() {
        let s = grid_square(8).unwrap();
        let a = grid_index(8, 0, 3);
        let b = grid_index(8, 8, 3);
        let p = bfs_path(&s, |_| true, &[a], |q| q == b).unwrap();
        assert_eq!(p, (0..=8).map(|i| grid_index(8, i, 3)).collect::<Vec<_>>());
        let scaled = s.scaled(7.3).unwrap();
        assert_eq!(bfs_path(&scaled, |_| true, &[a], |q| q == b).unwrap(), p);
    }

    #[test]
    fn components_split_on_removed_column() {
        let s = grid_square(4).unwrap();
        let allowed = PointSet::filter(&s, |p| p.0 % 5 != 2);
        let lab = components(&s, &allowed);
        assert_ne!(lab[0], lab[4]);
        assert_eq!(lab[0], lab[5]);
    }
}
