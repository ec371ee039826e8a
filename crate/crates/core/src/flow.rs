//! Vertex-disjoint paths by node-split maximum flow.
//!
//! Every allowed point becomes an `in -> out` edge carrying its vertex
//! capacity; step-graph edges join `out` to `in`. Source points get no
//! incoming step edges and sink points no outgoing ones, so every path has
//! exactly one endpoint in each terminal set and an interior disjoint from
//! both.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::graph::PointSet;
use crate::space::{MetricSpace, PointId};

const INF: i64 = i64::MAX / 4;
const NONE: u32 = u32::MAX;

/// Dinic maximum flow on an explicit edge list.
#[derive(Clone, Debug)]
pub struct Dinic {
    adj: Vec<Vec<u32>>,
    to: Vec<u32>,
    cap: Vec<i64>,
    orig: Vec<i64>,
    level: Vec<i32>,
    iter: Vec<usize>,
}

impl Dinic {
    pub fn new(nodes: usize) -> Self {
        Dinic {
            adj: vec![Vec::new(); nodes],
            to: Vec::new(),
            cap: Vec::new(),
            orig: Vec::new(),
            level: vec![0; nodes],
            iter: vec![0; nodes],
        }
    }

    /// Adds a directed edge and returns its index.
    pub fn add_edge(&mut self, u: usize, v: usize, c: i64) -> usize {
        let e = self.to.len();
        self.to.push(v as u32);
        self.cap.push(c);
        self.orig.push(c);
        self.adj[u].push(e as u32);
        self.to.push(u as u32);
        self.cap.push(0);
        self.orig.push(0);
        self.adj[v].push(e as u32 + 1);
        e
    }

    pub fn flow_on(&self, e: usize) -> i64 {
        self.orig[e] - self.cap[e]
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &e in &self.adj[u] {
                let v = self.to[e as usize] as usize;
                if self.cap[e as usize] > 0 && self.level[v] < 0 {
                    self.level[v] = self.level[u] + 1;
                    q.push_back(v);
                }
            }
        }
        self.level[t] >= 0
    }

    /// One augmenting path in the level graph, iteratively.
    fn augment(&mut self, s: usize, t: usize, limit: i64) -> i64 {
        let mut stack: Vec<u32> = Vec::new();
        let mut u = s;
        loop {
            if u == t {
                let mut f = limit;
                for &e in &stack {
                    f = f.min(self.cap[e as usize]);
                }
                for &e in &stack {
                    self.cap[e as usize] -= f;
                    self.cap[e as usize ^ 1] += f;
                }
                return f;
            }
            let mut advanced = false;
            while self.iter[u] < self.adj[u].len() {
                let e = self.adj[u][self.iter[u]] as usize;
                let v = self.to[e] as usize;
                if self.cap[e] > 0 && self.level[v] == self.level[u] + 1 {
                    stack.push(e as u32);
                    u = v;
                    advanced = true;
                    break;
                }
                self.iter[u] += 1;
            }
            if !advanced {
                self.level[u] = -1;
                match stack.pop() {
                    None => return 0,
                    Some(e) => {
                        u = self.to[e as usize ^ 1] as usize;
                        self.iter[u] += 1;
                    }
                }
            }
        }
    }

    /// Pushes up to `limit` units from `s` to `t` and returns the amount.
    pub fn max_flow(&mut self, s: usize, t: usize, limit: i64) -> i64 {
        let mut total = 0;
        while total < limit && self.bfs(s, t) {
            self.iter.iter_mut().for_each(|i| *i = 0);
            loop {
                let f = self.augment(s, t, limit - total);
                if f == 0 {
                    break;
                }
                total += f;
                if total >= limit {
                    break;
                }
            }
        }
        total
    }

    /// Nodes reachable from `s` in the residual graph.
    pub fn residual_reach(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[s] = true;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &e in &self.adj[u] {
                let v = self.to[e as usize] as usize;
                if self.cap[e as usize] > 0 && !seen[v] {
                    seen[v] = true;
                    q.push_back(v);
                }
            }
        }
        seen
    }
}

/// Outcome of a disjoint-path request.
#[derive(Clone, Debug, PartialEq)]
pub struct DisjointPaths {
    /// Vertex-disjoint paths, each running from a source point to a sink
    /// point. Single terminal points may be shared when their capacity allows.
    pub paths: Vec<Vec<PointId>>,
    /// Minimum vertex cut, filled in only when fewer paths than requested
    /// exist. Its size equals the number of paths found.
    pub cut: Option<Vec<PointId>>,
}

/// Up to `want` paths from `sources` to `sinks` through `allowed` points.
///
/// Paths are vertex-disjoint, except that a lone source point (or a lone
/// sink point) may be the shared endpoint of all of them; this is the
/// internally disjoint case between two points. A point lying in both sets
/// is a one-point path.
pub fn disjoint_paths(
    space: &MetricSpace,
    allowed: &PointSet,
    sources: &[PointId],
    sinks: &[PointId],
    want: usize,
) -> DisjointPaths {
    let n = space.len();
    let mut is_src = PointSet::from_points(n, sources.iter().copied());
    let mut is_snk = PointSet::from_points(n, sinks.iter().copied());
    let mut paths: Vec<Vec<PointId>> = Vec::new();
    let mut shared: Vec<PointId> = Vec::new();
    for p in is_src.to_vec() {
        if is_snk.contains(p) && allowed.contains(p) {
            shared.push(p);
        }
    }
    for &p in &shared {
        if paths.len() < want {
            paths.push(vec![p]);
        }
        is_src.remove(p);
        is_snk.remove(p);
    }
    if paths.len() >= want {
        return DisjointPaths { paths, cut: None };
    }
    let need = want - paths.len();
    let lone_src = is_src.len() == 1;
    let lone_snk = is_snk.len() == 1;

    let mut local = vec![NONE; n];
    let mut pts: Vec<PointId> = Vec::new();
    for p in allowed.iter() {
        if shared.contains(&p) {
            continue;
        }
        local[p.0] = pts.len() as u32;
        pts.push(p);
    }
    let m = pts.len();
    let (s, t) = (2 * m, 2 * m + 1);
    let mut g = Dinic::new(2 * m + 2);
    for (li, &p) in pts.iter().enumerate() {
        let c = if (lone_src && is_src.contains(p)) || (lone_snk && is_snk.contains(p)) {
            need as i64
        } else {
            1
        };
        g.add_edge(2 * li, 2 * li + 1, c);
        if is_src.contains(p) {
            g.add_edge(s, 2 * li, INF);
        }
        if is_snk.contains(p) {
            g.add_edge(2 * li + 1, t, INF);
        }
    }
    for (li, &p) in pts.iter().enumerate() {
        if is_snk.contains(p) {
            continue;
        }
        for &q in space.neighbors(p) {
            let lq = local[q.0];
            if lq == NONE || is_src.contains(q) {
                continue;
            }
            g.add_edge(2 * li + 1, 2 * lq as usize, 1);
        }
    }
    let f = g.max_flow(s, t, need as i64) as usize;

    // decompose the flow into paths, consuming it as we go
    let mut used = vec![0i64; g.to.len()];
    for _ in 0..f {
        let mut path: Vec<PointId> = Vec::new();
        let mut u = s;
        let mut guard = 0usize;
        while u != t {
            let mut next = None;
            for &e in &g.adj[u] {
                let e = e as usize;
                if e % 2 == 0 && g.flow_on(e) - used[e] > 0 {
                    next = Some(e);
                    break;
                }
            }
            let e = next.expect("flow conservation");
            used[e] += 1;
            u = g.to[e] as usize;
            if u < 2 * m && u % 2 == 0 {
                path.push(pts[u / 2]);
            }
            guard += 1;
            assert!(guard <= 4 * m + 4, "flow decomposition did not terminate");
        }
        paths.push(shortcut(space, remove_loops(path)));
    }

    let cut = if paths.len() < want {
        let reach = g.residual_reach(s);
        let mut cut: Vec<PointId> = shared.clone();
        for li in 0..m {
            if reach[2 * li] && !reach[2 * li + 1] {
                cut.push(pts[li]);
            }
        }
        for li in 0..m {
            if !reach[2 * li + 1] {
                continue;
            }
            for &e in &g.adj[2 * li + 1] {
                let v = g.to[e as usize] as usize;
                if e % 2 == 0 && v < 2 * m && v != 2 * li && !reach[v] {
                    cut.push(pts[v / 2]);
                }
            }
        }
        cut.sort();
        cut.dedup();
        Some(cut)
    } else {
        None
    };
    DisjointPaths { paths, cut }
}

/// Drops any loop a path makes through a repeated point.
fn remove_loops(path: Vec<PointId>) -> Vec<PointId> {
    let mut out: Vec<PointId> = Vec::with_capacity(path.len());
    for p in path {
        if let Some(i) = out.iter().position(|&q| q == p) {
            out.truncate(i);
        }
        out.push(p);
    }
    out
}

/// Replaces detours by steps: from each point jump to the furthest later
/// point of the same path that is a step-graph neighbour. The result uses a
/// subset of the input points, so disjointness is preserved.
pub fn shortcut(space: &MetricSpace, path: Vec<PointId>) -> Vec<PointId> {
    if path.len() <= 2 {
        return path;
    }
    let mut pos = alloc::collections::BTreeMap::new();
    for (i, &p) in path.iter().enumerate() {
        pos.insert(p, i);
    }
    let mut out = vec![path[0]];
    let mut i = 0;
    while i + 1 < path.len() {
        let mut j = i + 1;
        for q in space.neighbors(path[i]) {
            if let Some(&k) = pos.get(q) {
                if k > j {
                    j = k;
                }
            }
        }
        out.push(path[j]);
        i = j;
    }
    out
}
