//! Finite metric spaces with a step graph.
//!
//! Every space carries `mesh_h`, the resolution floor: two points are
//! neighbours in the step graph when they are at most `mesh_h` apart, and
//! every arc moves along step-graph edges.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::PI;
use core::fmt;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::num;

/// Index of a point inside one [`MetricSpace`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PointId(pub usize);

impl PointId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpaceError {
    #[error("grid square needs k >= 2, got {0}")]
    GridTooSmall(usize),
    #[error("carpet level must lie in 1..=5, got {0}")]
    CarpetLevel(u32),
    #[error("circle needs k >= 8, got {0}")]
    CircleTooSmall(usize),
    #[error("space must contain at least one point")]
    Empty,
    #[error("mesh_h must be positive and finite, got {0}")]
    BadMesh(f64),
    #[error("distance table has {got} entries, expected {expected}")]
    TableSize { expected: usize, got: usize },
    #[error("coordinates list has {got} entries, expected {expected}")]
    CoordsSize { expected: usize, got: usize },
    #[error("euclidean metric requires coordinates")]
    MissingCoords,
    #[error("distance {a}->{b} is negative or not finite")]
    BadDistance { a: usize, b: usize },
    #[error("d({a},{a}) is not zero")]
    NonZeroDiagonal { a: usize },
    #[error("distinct points {a} and {b} are at distance zero")]
    Coincident { a: usize, b: usize },
    #[error("asymmetric distances between {a} and {b}")]
    Asymmetric { a: usize, b: usize },
    #[error("triangle inequality fails: d({a},{c}) > d({a},{b}) + d({b},{c})")]
    Triangle { a: usize, b: usize, c: usize },
    #[error("edge ({a},{b}) references a point outside 0..{n}")]
    EdgeOutOfRange { a: usize, b: usize, n: usize },
    #[error("edge ({a},{b}) has non-positive or non-finite weight")]
    BadEdgeWeight { a: usize, b: usize },
    #[error("graph metric leaves point {0} unreachable")]
    Unreachable(usize),
    #[error("step graph is disconnected (point {0} unreachable from point 0)")]
    StepGraphDisconnected(usize),
    #[error("point {0} has no neighbour within mesh_h")]
    Isolated(usize),
    #[error("scale factor must be positive and finite, got {0}")]
    BadScale(f64),
}

/// How distances are produced.
#[derive(Clone, Debug)]
pub enum Metric {
    /// Euclidean distance between the stored coordinates.
    Euclidean,
    /// Full row-major distance table.
    Table(Vec<f64>),
    /// Weighted graph; distances are shortest-path lengths computed on
    /// demand. Used only above [`TABLE_LIMIT`] points.
    Graph(Vec<Vec<(u32, f64)>>),
}

/// Largest point count for which a graph metric is materialized as a table.
pub const TABLE_LIMIT: usize = 8000;

/// A finite metric space with resolution `mesh_h` and its step graph.
#[derive(Clone, Debug)]
pub struct MetricSpace {
    n: usize,
    base_mesh: f64,
    scale: f64,
    coords: Option<Vec<[f64; 2]>>,
    metric: Metric,
    adjacency: Vec<Vec<PointId>>,
    edges: Option<Vec<(usize, usize, f64)>>,
}

impl MetricSpace {
    /// Euclidean space on the given planar coordinates.
    pub fn euclidean(coords: Vec<[f64; 2]>, mesh_h: f64) -> Result<Self, SpaceError> {
        Self::build(coords.len(), mesh_h, Some(coords), Metric::Euclidean)
    }

    /// Space with an explicit row-major distance table.
    pub fn from_table(
        n: usize,
        mesh_h: f64,
        coords: Option<Vec<[f64; 2]>>,
        table: Vec<f64>,
    ) -> Result<Self, SpaceError> {
        if table.len() != n * n {
            return Err(SpaceError::TableSize { expected: n * n, got: table.len() });
        }
        Self::build(n, mesh_h, coords, Metric::Table(table))
    }

    /// Shortest-path metric of a weighted undirected graph.
    pub fn from_graph(
        n: usize,
        mesh_h: f64,
        coords: Option<Vec<[f64; 2]>>,
        edges: &[(usize, usize, f64)],
    ) -> Result<Self, SpaceError> {
        let mut adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        for &(a, b, w) in edges {
            if a >= n || b >= n {
                return Err(SpaceError::EdgeOutOfRange { a, b, n });
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(SpaceError::BadEdgeWeight { a, b });
            }
            adj[a].push((b as u32, w));
            adj[b].push((a as u32, w));
        }
        if n <= TABLE_LIMIT {
            let mut table = vec![0.0; n * n];
            for s in 0..n {
                let row = dijkstra(&adj, s);
                if let Some(u) = row.iter().position(|d| !d.is_finite()) {
                    return Err(SpaceError::Unreachable(u));
                }
                table[s * n..(s + 1) * n].copy_from_slice(&row);
            }
            // Symmetrize exactly: the two Dijkstra runs can differ in the last ulp.
            for a in 0..n {
                for b in a + 1..n {
                    let v = table[a * n + b].min(table[b * n + a]);
                    table[a * n + b] = v;
                    table[b * n + a] = v;
                }
            }
            let mut s = Self::build(n, mesh_h, coords, Metric::Table(table))?;
            s.edges = Some(edges.to_vec());
            Ok(s)
        } else {
            let row = dijkstra(&adj, 0);
            if let Some(u) = row.iter().position(|d| !d.is_finite()) {
                return Err(SpaceError::Unreachable(u));
            }
            let mut s = Self::build(n, mesh_h, coords, Metric::Graph(adj))?;
            s.edges = Some(edges.to_vec());
            Ok(s)
        }
    }

    fn build(
        n: usize,
        mesh_h: f64,
        coords: Option<Vec<[f64; 2]>>,
        metric: Metric,
    ) -> Result<Self, SpaceError> {
        if n == 0 {
            return Err(SpaceError::Empty);
        }
        if !(mesh_h > 0.0 && mesh_h.is_finite()) {
            return Err(SpaceError::BadMesh(mesh_h));
        }
        if let Some(c) = &coords {
            if c.len() != n {
                return Err(SpaceError::CoordsSize { expected: n, got: c.len() });
            }
        } else if matches!(metric, Metric::Euclidean) {
            return Err(SpaceError::MissingCoords);
        }
        let mut space = MetricSpace {
            n,
            base_mesh: mesh_h,
            scale: 1.0,
            coords,
            metric,
            adjacency: Vec::new(),
            edges: None,
        };
        space.adjacency = space.compute_adjacency();
        Ok(space)
    }

    fn compute_adjacency(&self) -> Vec<Vec<PointId>> {
        let h = self.mesh_h();
        let mut adj = vec![Vec::new(); self.n];
        match (&self.metric, &self.coords) {
            (Metric::Euclidean, Some(coords)) => {
                // Bucket by a cell of side h; neighbours live in the 3x3 block.
                let (mut minx, mut miny) = (f64::INFINITY, f64::INFINITY);
                for c in coords {
                    minx = minx.min(c[0]);
                    miny = miny.min(c[1]);
                }
                let cell = self.base_mesh;
                let key = |c: &[f64; 2]| -> (i64, i64) {
                    (
                        num::floor((c[0] - minx) / cell) as i64,
                        num::floor((c[1] - miny) / cell) as i64,
                    )
                };
                let mut buckets: alloc::collections::BTreeMap<(i64, i64), Vec<usize>> =
                    alloc::collections::BTreeMap::new();
                for (i, c) in coords.iter().enumerate() {
                    buckets.entry(key(c)).or_default().push(i);
                }
                for (i, c) in coords.iter().enumerate() {
                    let (kx, ky) = key(c);
                    for dx in -1..=1 {
                        for dy in -1..=1 {
                            if let Some(b) = buckets.get(&(kx + dx, ky + dy)) {
                                for &j in b {
                                    if j != i && num::le(self.dist_idx(i, j), h) {
                                        adj[i].push(PointId(j));
                                    }
                                }
                            }
                        }
                    }
                }
            }
            (Metric::Graph(g), _) => {
                // Neighbours within h are reachable by edges of total length <= h.
                for s in 0..self.n {
                    let row = dijkstra_bounded(g, s, h * (1.0 + num::REL_TOL));
                    for (j, d) in row {
                        if j != s && num::le(d, h) {
                            adj[s].push(PointId(j));
                        }
                    }
                }
            }
            _ => {
                for i in 0..self.n {
                    for j in 0..self.n {
                        if i != j && num::le(self.dist_idx(i, j), h) {
                            adj[i].push(PointId(j));
                        }
                    }
                }
            }
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        adj
    }

    /// Copy of this space with every distance multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self, SpaceError> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(SpaceError::BadScale(c));
        }
        let mut s = self.clone();
        s.scale *= c;
        Ok(s)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn mesh_h(&self) -> f64 {
        self.base_mesh * self.scale
    }

    /// Multiplier applied on top of the stored metric by [`Self::scaled`].
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn coords(&self) -> Option<&[[f64; 2]]> {
        self.coords.as_deref()
    }

    /// The weighted edges a graph metric was built from, unscaled.
    pub fn graph_edges(&self) -> Option<&[(usize, usize, f64)]> {
        self.edges.as_deref()
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn points(&self) -> impl Iterator<Item = PointId> + '_ {
        (0..self.n).map(PointId)
    }

    #[inline]
    pub fn contains(&self, p: PointId) -> bool {
        p.0 < self.n
    }

    #[inline]
    pub fn dist(&self, a: PointId, b: PointId) -> f64 {
        self.dist_idx(a.0, b.0)
    }

    #[inline]
    fn dist_idx(&self, a: usize, b: usize) -> f64 {
        let base = match &self.metric {
            Metric::Euclidean => {
                let c = self.coords.as_ref().expect("euclidean metric has coords");
                let (p, q) = (c[a], c[b]);
                libm::hypot(p[0] - q[0], p[1] - q[1])
            }
            Metric::Table(t) => t[a * self.n + b],
            Metric::Graph(g) => {
                if a == b {
                    0.0
                } else {
                    dijkstra(g, a)[b]
                }
            }
        };
        base * self.scale
    }

    /// Step-graph neighbours of `p`, sorted by index.
    #[inline]
    pub fn neighbors(&self, p: PointId) -> &[PointId] {
        &self.adjacency[p.0]
    }

    /// Distance from `p` to the nearest point of `set` (infinite for an empty set).
    pub fn dist_to_set(&self, p: PointId, set: &[PointId]) -> f64 {
        set.iter().map(|&q| self.dist(p, q)).fold(f64::INFINITY, f64::min)
    }

    /// Minimum distance between two point sets.
    pub fn set_distance(&self, a: &[PointId], b: &[PointId]) -> f64 {
        let mut best = f64::INFINITY;
        for &p in a {
            for &q in b {
                let d = self.dist(p, q);
                if d < best {
                    best = d;
                }
            }
        }
        best
    }

    pub fn diameter_of(&self, set: &[PointId]) -> f64 {
        let mut best = 0.0f64;
        for (i, &p) in set.iter().enumerate() {
            for &q in &set[i + 1..] {
                best = best.max(self.dist(p, q));
            }
        }
        best
    }

    pub fn diameter(&self) -> f64 {
        let all: Vec<PointId> = self.points().collect();
        self.diameter_of(&all)
    }

    /// Points of the open ball `B(center, r)`.
    pub fn ball_points(&self, center: PointId, r: f64) -> Vec<PointId> {
        self.points().filter(|&q| num::lt(self.dist(center, q), r)).collect()
    }

    /// Checks the metric axioms (exhaustively up to 300 points, by sampling
    /// `1e5` random triples above), step-graph connectivity and the
    /// every-point-has-a-neighbour condition.
    pub fn validate(&self, seed: u64) -> Result<(), SpaceError> {
        let n = self.n;
        for a in 0..n {
            if self.dist_idx(a, a) != 0.0 {
                return Err(SpaceError::NonZeroDiagonal { a });
            }
        }
        if !matches!(self.metric, Metric::Graph(_)) {
            for a in 0..n {
                for b in a + 1..n {
                    let (x, y) = (self.dist_idx(a, b), self.dist_idx(b, a));
                    if !(x.is_finite() && x >= 0.0) {
                        return Err(SpaceError::BadDistance { a, b });
                    }
                    if !(y.is_finite() && y >= 0.0) {
                        return Err(SpaceError::BadDistance { a: b, b: a });
                    }
                    if x != y {
                        return Err(SpaceError::Asymmetric { a, b });
                    }
                    if x == 0.0 {
                        return Err(SpaceError::Coincident { a, b });
                    }
                }
            }
        }
        let tri = |a: usize, b: usize, c: usize| -> Result<(), SpaceError> {
            let lhs = self.dist_idx(a, c);
            let rhs = self.dist_idx(a, b) + self.dist_idx(b, c);
            if lhs > rhs * (1.0 + 1e-12) {
                Err(SpaceError::Triangle { a, b, c })
            } else {
                Ok(())
            }
        };
        if n <= 300 {
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        tri(a, b, c)?;
                    }
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..100_000 {
                tri(rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n))?;
            }
        }
        if n > 1 {
            if let Some(p) = (0..n).find(|&p| self.adjacency[p].is_empty()) {
                return Err(SpaceError::Isolated(p));
            }
        }
        let comp = crate::graph::component_of(self, PointId(0), |_| true);
        if let Some(u) = (0..n).find(|&u| !comp.contains(PointId(u))) {
            return Err(SpaceError::StepGraphDisconnected(u));
        }
        Ok(())
    }
}

#[derive(Copy, Clone, PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.partial_cmp(&self.0).unwrap_or(Ordering::Equal).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(adj: &[Vec<(u32, f64)>], s: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[s] = 0.0;
    heap.push(HeapItem(0.0, s));
    while let Some(HeapItem(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            let nd = d + w;
            if nd < dist[v as usize] {
                dist[v as usize] = nd;
                heap.push(HeapItem(nd, v as usize));
            }
        }
    }
    dist
}

fn dijkstra_bounded(adj: &[Vec<(u32, f64)>], s: usize, bound: f64) -> Vec<(usize, f64)> {
    let mut dist: alloc::collections::BTreeMap<usize, f64> = alloc::collections::BTreeMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(s, 0.0);
    heap.push(HeapItem(0.0, s));
    while let Some(HeapItem(d, u)) = heap.pop() {
        if d > dist[&u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            let nd = d + w;
            if nd <= bound && nd < *dist.get(&(v as usize)).unwrap_or(&f64::INFINITY) {
                dist.insert(v as usize, nd);
                heap.push(HeapItem(nd, v as usize));
            }
        }
    }
    dist.into_iter().collect()
}

/// `B(center, r) = {y : d(center, y) < r}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ball {
    pub center: PointId,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: PointId, radius: f64) -> Self {
        Ball { center, radius }
    }

    pub fn contains(&self, space: &MetricSpace, p: PointId) -> bool {
        num::lt(space.dist(self.center, p), self.radius)
    }

    /// Membership in the closed ball of the same radius.
    pub fn closure_contains(&self, space: &MetricSpace, p: PointId) -> bool {
        num::le(space.dist(self.center, p), self.radius)
    }

    /// The ball `t·B`.
    pub fn scaled(&self, t: f64) -> Self {
        Ball { center: self.center, radius: self.radius * t }
    }
}

/// `A(center, inner, outer) = closed-ball(outer) \ open-ball(inner)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Annulus {
    pub center: PointId,
    pub inner: f64,
    pub outer: f64,
}

impl Annulus {
    pub fn new(center: PointId, inner: f64, outer: f64) -> Self {
        debug_assert!(inner > 0.0 && inner <= outer);
        Annulus { center, inner, outer }
    }

    pub fn contains(&self, space: &MetricSpace, p: PointId) -> bool {
        let d = space.dist(self.center, p);
        num::ge(d, self.inner) && num::le(d, self.outer)
    }

    pub fn points(&self, space: &MetricSpace) -> Vec<PointId> {
        space.points().filter(|&p| self.contains(space, p)).collect()
    }
}

/// `(k+1)²` points at `(i/k, j/k)`, index `j·(k+1) + i`, Euclidean metric,
/// `mesh_h = √2/k` (so diagonal cell steps are edges).
pub fn grid_square(k: usize) -> Result<MetricSpace, SpaceError> {
    if k < 2 {
        return Err(SpaceError::GridTooSmall(k));
    }
    let kf = k as f64;
    let mut coords = Vec::with_capacity((k + 1) * (k + 1));
    for j in 0..=k {
        for i in 0..=k {
            coords.push([i as f64 / kf, j as f64 / kf]);
        }
    }
    MetricSpace::euclidean(coords, num::sqrt(2.0) / kf)
}

/// Index of the grid point `(i/k, j/k)` in [`grid_square`].
pub fn grid_index(k: usize, i: usize, j: usize) -> PointId {
    PointId(j * (k + 1) + i)
}

fn carpet_cell_survives(mut ci: usize, mut cj: usize, level: u32) -> bool {
    for _ in 0..level {
        if ci % 3 == 1 && cj % 3 == 1 {
            return false;
        }
        ci /= 3;
        cj /= 3;
    }
    true
}

/// Surviving cells of the level-`level` carpet, as `(column, row)` pairs.
pub fn carpet_cells(level: u32) -> Vec<(usize, usize)> {
    let m = 3usize.pow(level);
    let mut cells = Vec::new();
    for cj in 0..m {
        for ci in 0..m {
            if carpet_cell_survives(ci, cj, level) {
                cells.push((ci, cj));
            }
        }
    }
    cells
}

/// Level-`level` Sierpinski carpet: corners of the surviving cells of side
/// `3^-level`, with the intrinsic metric of the graph whose edges are the
/// sides and diagonals of surviving cells. `mesh_h` is the cell side.
pub fn sierpinski_carpet(level: u32) -> Result<MetricSpace, SpaceError> {
    if !(1..=5).contains(&level) {
        return Err(SpaceError::CarpetLevel(level));
    }
    let m = 3usize.pow(level);
    let side = 1.0 / m as f64;
    let cells = carpet_cells(level);
    let mut id = vec![usize::MAX; (m + 1) * (m + 1)];
    let mut coords = Vec::new();
    let mut vertex = |i: usize, j: usize, coords: &mut Vec<[f64; 2]>| -> usize {
        let slot = &mut id[j * (m + 1) + i];
        if *slot == usize::MAX {
            *slot = coords.len();
            coords.push([i as f64 * side, j as f64 * side]);
        }
        *slot
    };
    // Register vertices in row-major order so indices are stable.
    let mut corner_flags = vec![false; (m + 1) * (m + 1)];
    for &(ci, cj) in &cells {
        for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            corner_flags[(cj + dj) * (m + 1) + ci + di] = true;
        }
    }
    for j in 0..=m {
        for i in 0..=m {
            if corner_flags[j * (m + 1) + i] {
                vertex(i, j, &mut coords);
            }
        }
    }
    let mut edges = Vec::new();
    let diag = side * num::sqrt(2.0);
    for &(ci, cj) in &cells {
        let v00 = vertex(ci, cj, &mut coords);
        let v10 = vertex(ci + 1, cj, &mut coords);
        let v01 = vertex(ci, cj + 1, &mut coords);
        let v11 = vertex(ci + 1, cj + 1, &mut coords);
        edges.push((v00, v10, side));
        edges.push((v00, v01, side));
        edges.push((v10, v11, side));
        edges.push((v01, v11, side));
        edges.push((v00, v11, diag));
        edges.push((v10, v01, diag));
    }
    let n = coords.len();
    MetricSpace::from_graph(n, side, Some(coords), &edges)
}

/// `k` equally spaced points on the unit circle with the chordal metric;
/// `mesh_h` is one chord step.
pub fn circle(k: usize) -> Result<MetricSpace, SpaceError> {
    if k < 8 {
        return Err(SpaceError::CircleTooSmall(k));
    }
    let coords: Vec<[f64; 2]> = (0..k)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / k as f64;
            [libm::cos(t), libm::sin(t)]
        })
        .collect();
    let step = 2.0 * libm::sin(PI / k as f64);
    MetricSpace::euclidean(coords, step)
}

/// Two grid squares `[0,1]²` and `[1,2]²` sharing only the corner `(1,1)`,
/// with the intrinsic metric of the cell sides and diagonals. The shared
/// corner is a cut point; `mesh_h = √2/k`.
///
/// Returns the space and the id of the glue point.
pub fn glued_squares(k: usize) -> Result<(MetricSpace, PointId), SpaceError> {
    if k < 2 {
        return Err(SpaceError::GridTooSmall(k));
    }
    let kf = k as f64;
    let side = 1.0 / kf;
    let diag = side * num::sqrt(2.0);
    let per = (k + 1) * (k + 1);
    let mut coords = Vec::with_capacity(2 * per - 1);
    for j in 0..=k {
        for i in 0..=k {
            coords.push([i as f64 / kf, j as f64 / kf]);
        }
    }
    let glue = per - 1;
    // Second square: every lattice point except its (0,0) corner, which is the glue.
    let mut second = vec![usize::MAX; per];
    second[0] = glue;
    for j in 0..=k {
        for i in 0..=k {
            if i == 0 && j == 0 {
                continue;
            }
            second[j * (k + 1) + i] = coords.len();
            coords.push([1.0 + i as f64 / kf, 1.0 + j as f64 / kf]);
        }
    }
    let mut edges = Vec::new();
    for map in [None, Some(&second)] {
        let idx = |i: usize, j: usize| -> usize {
            let local = j * (k + 1) + i;
            match map {
                None => local,
                Some(m) => m[local],
            }
        };
        for j in 0..k {
            for i in 0..k {
                let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1));
                edges.extend([(a, b, side), (a, c, side), (b, d, side), (c, d, side)]);
                edges.extend([(a, d, diag), (b, c, diag)]);
            }
        }
    }
    let n = coords.len();
    let space = MetricSpace::from_graph(n, diag, Some(coords), &edges)?;
    Ok((space, PointId(glue)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_degenerate() {
        assert_eq!(grid_square(1).unwrap_err(), SpaceError::GridTooSmall(1));
    }

    #[test]
    fn grid_k2_corner_distance() {
        let s = grid_square(2).unwrap();
        assert_eq!(s.len(), 9);
        let d = s.dist(grid_index(2, 0, 0), grid_index(2, 2, 2));
        assert!((d - num::sqrt(2.0)).abs() < 1e-15);
    }

    #[test]
    fn grid_k4_is_a_valid_metric_space() {
        let s = grid_square(4).unwrap();
        assert_eq!(s.len(), 25);
        s.validate(0).unwrap();
        // interior points see all 8 lattice neighbours
        assert_eq!(s.neighbors(grid_index(4, 2, 2)).len(), 8);
        assert_eq!(s.neighbors(grid_index(4, 0, 0)).len(), 3);
    }

    #[test]
    fn carpet_cell_counts() {
        assert_eq!(carpet_cells(1).len(), 8);
        assert_eq!(carpet_cells(2).len(), 64);
        assert_eq!(sierpinski_carpet(0).unwrap_err(), SpaceError::CarpetLevel(0));
        assert_eq!(sierpinski_carpet(6).unwrap_err(), SpaceError::CarpetLevel(6));
        let c1 = sierpinski_carpet(1).unwrap();
        assert_eq!(c1.len(), 16);
        c1.validate(0).unwrap();
    }

    #[test]
    fn carpet_hole_is_intrinsic() {
        let c = sierpinski_carpet(2).unwrap();
        c.validate(0).unwrap();
        let coords = c.coords().unwrap();
        let find = |x: f64, y: f64| {
            PointId(
                coords
                    .iter()
                    .position(|p| (p[0] - x).abs() < 1e-12 && (p[1] - y).abs() < 1e-12)
                    .unwrap(),
            )
        };
        // opposite corners of the removed centre ninth
        let a = find(1.0 / 3.0, 1.0 / 3.0);
        let b = find(2.0 / 3.0, 2.0 / 3.0);
        let euclid = num::sqrt(2.0) / 3.0;
        assert!(c.dist(a, b) > euclid + 1e-9);
    }

    #[test]
    fn circle_steps_are_equal() {
        assert_eq!(circle(7).unwrap_err(), SpaceError::CircleTooSmall(7));
        let s = circle(8).unwrap();
        assert!((s.dist(PointId(0), PointId(4)) - 2.0).abs() < 1e-12);
        let s = circle(100).unwrap();
        let step = 2.0 * libm::sin(PI / 100.0);
        assert!((s.mesh_h() - step).abs() < 1e-15);
        for i in 0..100 {
            let d = s.dist(PointId(i), PointId((i + 1) % 100));
            assert!((d - step).abs() <= 1e-12 * step);
            assert_eq!(s.neighbors(PointId(i)).len(), 2);
        }
        s.validate(0).unwrap();
    }

    #[test]
    fn glued_squares_share_one_point() {
        let (s, glue) = glued_squares(4).unwrap();
        assert_eq!(s.len(), 2 * 25 - 1);
        s.validate(0).unwrap();
        let c = s.coords().unwrap();
        assert_eq!(c[glue.0], [1.0, 1.0]);
        let comp = crate::graph::component_of(&s, PointId(0), |p| p != glue);
        assert_eq!(comp.len(), 24);
    }

    #[test]
    fn scaling_multiplies_distances() {
        let s = grid_square(4).unwrap();
        let t = s.scaled(7.3).unwrap();
        assert_eq!(t.dist(PointId(0), PointId(24)), 7.3 * s.dist(PointId(0), PointId(24)));
        assert_eq!(t.neighbors(PointId(6)), s.neighbors(PointId(6)));
    }

    #[test]
    fn table_errors_are_reported() {
        let t = vec![0.0, 1.0, 2.0, 0.0];
        let s = MetricSpace::from_table(2, 1.0, None, t).unwrap();
        assert_eq!(s.validate(0).unwrap_err(), SpaceError::Asymmetric { a: 0, b: 1 });
        let t = vec![0.0, 1.0, 5.0, 1.0, 0.0, 1.0, 5.0, 1.0, 0.0];
        let s = MetricSpace::from_table(3, 1.0, None, t).unwrap();
        assert_eq!(s.validate(0).unwrap_err(), SpaceError::Triangle { a: 0, b: 1, c: 2 });
    }

    #[test]
    fn ball_and_annulus_membership() {
        let s = grid_square(4).unwrap();
        let c = grid_index(4, 2, 2);
        let b = Ball::new(c, 0.25);
        assert!(!b.contains(&s, grid_index(4, 3, 2)));
        assert!(b.closure_contains(&s, grid_index(4, 3, 2)));
        let a = Annulus::new(c, 0.25, 0.5);
        assert!(a.contains(&s, grid_index(4, 3, 2)));
        assert!(a.contains(&s, grid_index(4, 4, 2)));
        assert!(!a.contains(&s, c));
    }
}
