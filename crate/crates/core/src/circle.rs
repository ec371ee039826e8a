//! Disjoint and separated connecting arcs, circle detours and the
//! quasi-circle through finitely many points.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::arc::{concatenate_to_circle, measure_circle_lambda, ArcError, ConstructionReport, DiscreteArc, DiscreteCircle};
use crate::flow::disjoint_paths;
use crate::graph::{bfs_path, bfs_path_ordered, PointSet};
use crate::invariants::{annulus_connected, AlcFailure};
use crate::num;
use crate::space::{Ball, MetricSpace, PointId};
use crate::split::{bogensatz, SplitConfig};
use crate::straighten::{straighten, JoinConfig, StraightenMode};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum CircleError {
    #[error("only {found} disjoint arcs exist; minimum vertex cut {cut:?}")]
    Cut { found: usize, cut: Vec<PointId> },
    #[error("a terminal set has {have} points inside the region, need {need}")]
    TooFewTerminals { have: usize, need: usize },
    #[error("annulus around {center} between {inner} and {outer} does not connect the circle's entry and exit")]
    AnnulusDisconnected { center: PointId, inner: f64, outer: f64 },
    #[error("detour radii {inner} < {outer} must exceed 4·mesh_h = {floor}")]
    DetourRadii { inner: f64, outer: f64, floor: f64 },
    #[error("circle lies inside B({center}, {outer}); nothing to anchor a detour")]
    Engulfed { center: PointId, outer: f64 },
    #[error("points {a} and {b} are {dist} apart, below the floor {floor}")]
    TooClose { a: PointId, b: PointId, dist: f64, floor: f64 },
    #[error("no points given")]
    NoPoints,
    #[error("annulus around {} at radius {} is not connected: {} and {} lie in different components", .0.p, .0.r, .0.x, .0.y)]
    Alc(AlcFailure),
    #[error("no circle through {x} and {y} inside the region")]
    Pair { x: PointId, y: PointId },
    #[error("{survivors} arcs survive the marked points, no two end in one gap of {gaps}")]
    Pigeonhole { survivors: usize, gaps: usize },
    #[error("cluster radius {near} leaves no room before {far}")]
    ClusterGap { near: f64, far: f64 },
    #[error("point {0} is not on the circle")]
    Lost(PointId),
    #[error("{stage} failed ({case:?}, |T| = {n}, scale {scale}): {source}")]
    Stage { stage: &'static str, case: CircleCase, n: usize, scale: f64, source: Box<CircleError> },
    #[error("{source} (after {} completed steps)", .trace.len())]
    Traced { trace: Vec<TraceStep>, source: Box<CircleError> },
    #[error(transparent)]
    Arc(#[from] ArcError),
}

/// Points of `space` inside the open ball.
pub fn ball_region(space: &MetricSpace, ball: &Ball) -> PointSet {
    PointSet::filter(space, |p| ball.contains(space, p))
}

fn terminals_in(region: &PointSet, set: &[PointId]) -> Vec<PointId> {
    let mut out: Vec<PointId> = set.iter().copied().filter(|&p| region.contains(p)).collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// `n` vertex-disjoint arcs inside `region`, each with one endpoint in `a`
/// and one in `b` and an interior missing `a ∪ b`. When fewer exist the
/// error carries a minimum vertex cut of that size.
pub fn disjoint_arcs(
    space: &MetricSpace,
    a: &[PointId],
    b: &[PointId],
    n: usize,
    region: &PointSet,
) -> Result<Vec<DiscreteArc>, CircleError> {
    let (ta, tb) = (terminals_in(region, a), terminals_in(region, b));
    let have = ta.len().min(tb.len());
    if have < n {
        return Err(CircleError::TooFewTerminals { have, need: n });
    }
    if n == 1 {
        let tset = PointSet::from_points(space.len(), tb.iter().copied());
        return match bfs_path(space, |z| region.contains(z), &ta, |z| tset.contains(z)) {
            Some(p) => Ok(vec![DiscreteArc::new(space, p)?]),
            None => Err(CircleError::Cut { found: 0, cut: Vec::new() }),
        };
    }
    let out = disjoint_paths(space, region, &ta, &tb, n);
    if out.paths.len() < n {
        return Err(CircleError::Cut { found: out.paths.len(), cut: out.cut.unwrap_or_default() });
    }
    out.paths.into_iter().map(|p| DiscreteArc::new(space, p).map_err(CircleError::from)).collect()
}

/// Search parameters for [`separated_arcs`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeparationSearch {
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SeparationSearch {
    fn default() -> Self {
        SeparationSearch { restarts: 16, seed: 0 }
    }
}

/// Arcs found by [`separated_arcs`].
#[derive(Clone, Debug, PartialEq)]
pub struct Separated {
    pub arcs: Vec<DiscreteArc>,
    /// Smallest pairwise distance between the arcs (`scale` when `n = 1`).
    pub sigma: f64,
    /// Largest grid value `scale·2^(-j/8)` the greedy search reached.
    pub target: f64,
    /// The search failed above `mesh_h` and the flow arcs were returned.
    pub fallback: bool,
}

/// `n` arcs from `a` to `b` inside `region`, pairwise as far apart as a
/// greedy search finds.
///
/// The target separation runs over `scale·2^(-j/8)` down to `mesh_h` by
/// binary search. At each target the greedy builds a shortest path, removes
/// its open neighbourhood of that radius from the region and repeats; the
/// first attempt keeps the deterministic path order, the others shuffle
/// sources and neighbour order.
pub fn separated_arcs(
    space: &MetricSpace,
    a: &[PointId],
    b: &[PointId],
    n: usize,
    region: &PointSet,
    scale: f64,
    search: SeparationSearch,
) -> Result<Separated, CircleError> {
    let flow_arcs = disjoint_arcs(space, a, b, n, region)?;
    if n == 1 {
        return Ok(Separated { arcs: flow_arcs, sigma: scale, target: scale, fallback: false });
    }
    let h = space.mesh_h();
    let (ta, tb) = (terminals_in(region, a), terminals_in(region, b));
    let grid = |j: usize| scale * num::powf(2.0, -(j as f64) / 8.0);
    let mut top = 0usize;
    while grid(top) > h && !num::le(grid(top), h) {
        top += 1;
    }
    // smallest j in [0, top) with success, assuming success is monotone in σ
    let mut best: Option<(usize, Vec<Vec<PointId>>)> = None;
    let (mut lo, mut hi) = (0usize, top);
    while lo < hi {
        let mid = (lo + hi) / 2;
        match greedy_with_restarts(space, &ta, &tb, n, region, grid(mid), search) {
            Some(paths) => {
                best = Some((mid, paths));
                hi = mid;
            }
            None => lo = mid + 1,
        }
    }
    let (arcs, target, fallback) = match best {
        Some((j, paths)) => {
            let arcs = paths.into_iter().map(|p| DiscreteArc::new(space, p)).collect::<Result<Vec<_>, _>>()?;
            (arcs, grid(j), false)
        }
        None => (flow_arcs, h, true),
    };
    let sigma = min_pairwise(space, &arcs);
    Ok(Separated { arcs, sigma, target, fallback })
}

/// Smallest distance between two different arcs of the family.
pub fn min_pairwise(space: &MetricSpace, arcs: &[DiscreteArc]) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..arcs.len() {
        for j in i + 1..arcs.len() {
            m = m.min(space.set_distance(arcs[i].points(), arcs[j].points()));
        }
    }
    m
}

fn greedy_with_restarts(
    space: &MetricSpace,
    a: &[PointId],
    b: &[PointId],
    n: usize,
    region: &PointSet,
    sigma: f64,
    search: SeparationSearch,
) -> Option<Vec<Vec<PointId>>> {
    for restart in 0..search.restarts.max(1) {
        let order = if restart == 0 {
            None
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(search.seed ^ (restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let mut perm: Vec<u32> = (0..space.len() as u32).collect();
            perm.shuffle(&mut rng);
            Some(perm)
        };
        if let Some(paths) = greedy_once(space, a, b, n, region, sigma, order.as_deref()) {
            return Some(paths);
        }
    }
    None
}

fn greedy_once(
    space: &MetricSpace,
    a: &[PointId],
    b: &[PointId],
    n: usize,
    region: &PointSet,
    sigma: f64,
    order: Option<&[u32]>,
) -> Option<Vec<Vec<PointId>>> {
    let mut avail = region.clone();
    let mut paths = Vec::with_capacity(n);
    for _ in 0..n {
        let mut src: Vec<PointId> = a.iter().copied().filter(|&p| avail.contains(p)).collect();
        if let Some(pr) = order {
            src.sort_by_key(|p| pr[p.0]);
        }
        let path = bfs_path_ordered(
            space,
            |z| avail.contains(z),
            &src,
            |z| avail.contains(z) && b.binary_search(&z).is_ok(),
            order,
        )?;
        for z in avail.to_vec() {
            if num::lt(space.dist_to_set(z, &path), sigma) {
                avail.remove(z);
            }
        }
        paths.push(path);
    }
    Some(paths)
}

/// Reroutes `c` around the open ball `B(x, r_in)` through the annulus
/// `r_in ≤ d(x, ·) < r_out`.
///
/// Every maximal run of `c` inside `B(x, r_out)` that meets `B(x, r_in)` is
/// dropped and replaced by a fewest-hop annulus path between the points just
/// before and after it, so loops inside the outer ball are cut out and `c`
/// is unchanged outside it.
pub fn detour_circle(
    space: &MetricSpace,
    c: &DiscreteCircle,
    x: PointId,
    r_in: f64,
    r_out: f64,
) -> Result<DiscreteCircle, CircleError> {
    let h = space.mesh_h();
    if !num::ge(r_in, 4.0 * h) || !num::lt(r_in, r_out) {
        return Err(CircleError::DetourRadii { inner: r_in, outer: r_out, floor: 4.0 * h });
    }
    let inner = |p: PointId| num::lt(space.dist(x, p), r_in);
    let outer = |p: PointId| num::lt(space.dist(x, p), r_out);
    if !c.points().iter().any(|&p| inner(p)) {
        return Ok(c.clone());
    }
    let Some(anchor) = c.points().iter().position(|&p| !outer(p)) else {
        return Err(CircleError::Engulfed { center: x, outer: r_out });
    };
    let pts = c.rotated(anchor).points().to_vec();
    let n = pts.len();
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut t = 1;
    while t < n {
        if outer(pts[t]) {
            let u = t;
            while t < n && outer(pts[t]) {
                t += 1;
            }
            if pts[u..t].iter().any(|&p| inner(p)) {
                runs.push((u, t - 1));
            }
        } else {
            t += 1;
        }
    }
    let mut used = PointSet::from_points(space.len(), pts.iter().copied());
    for &(u, v) in &runs {
        for &p in &pts[u..=v] {
            used.remove(p);
        }
    }
    let mut detours: Vec<Vec<PointId>> = Vec::with_capacity(runs.len());
    for &(u, v) in &runs {
        let (p, q) = (pts[u - 1], pts[(v + 1) % n]);
        let ann = |z: PointId| !inner(z) && outer(z) && !used.contains(z);
        let path = if p == q {
            None
        } else {
            bfs_path(space, |z| z == q || ann(z), &[p], |z| z == q)
        };
        let Some(path) = path else {
            return Err(CircleError::AnnulusDisconnected { center: x, inner: r_in, outer: r_out });
        };
        let mid = path[1..path.len() - 1].to_vec();
        used.extend(mid.iter().copied());
        detours.push(mid);
    }
    let mut out = Vec::with_capacity(n);
    let mut t = 0;
    let mut k = 0;
    while t < n {
        if k < runs.len() && t == runs[k].0 {
            out.extend_from_slice(&detours[k]);
            t = runs[k].1 + 1;
            k += 1;
        } else {
            out.push(pts[t]);
            t += 1;
        }
    }
    Ok(DiscreteCircle::new(space, out)?)
}

/// Which branch of the construction built a circle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CircleCase {
    Single,
    Pair,
    /// The closest pair is not much closer than the diameter.
    Spread,
    /// The first `m` points form a cluster far from the rest.
    Clustered { m: usize },
    /// Too small for either branch; points inserted into a pair circle.
    Mesh,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Threshold {
    pub name: &'static str,
    pub value: f64,
    /// The mesh floor replaced a smaller value.
    pub floored: bool,
}

/// One completed level of the construction.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceStep {
    pub depth: usize,
    pub points: Vec<PointId>,
    pub case: CircleCase,
    pub thresholds: Vec<Threshold>,
    pub sigma: Option<f64>,
    pub lambda: f64,
    pub notes: Vec<String>,
}

/// Ratios of the clustered case, by the kind of pair. `near` pairs lie in
/// `B(x₁, 10λ₁D)`, `away` subarcs miss `B(x₁, 2λ₁D)`, the rest are `mid`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterBounds {
    pub d: f64,
    pub lambda1: f64,
    pub near: f64,
    pub away: f64,
    pub mid: f64,
}

impl ClusterBounds {
    pub fn holds(&self) -> bool {
        num::le(self.away, self.lambda1) && num::le(self.mid, 2.0 * self.lambda1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircleConfig {
    /// Working annular linear connectivity constant.
    pub l: f64,
    /// Working quasi-circle constant for the case split.
    pub lambda1: f64,
    pub search: SeparationSearch,
    /// Annulus precheck factor along paths between the points; `None` skips it.
    pub alc_factor: Option<f64>,
}

impl CircleConfig {
    pub fn new(l: f64) -> Self {
        CircleConfig { l, lambda1: 1.0, search: SeparationSearch::default(), alc_factor: Some(2.0) }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircleOutput {
    pub circle: DiscreteCircle,
    pub report: ConstructionReport,
    pub trace: Vec<TraceStep>,
    /// `diam(γ)/diam(T)`, 1 for a single point.
    pub diam_ratio: f64,
    pub clusters: Vec<ClusterBounds>,
}

/// A quasi-circle through every point of `t`, built by induction on `|t|`.
///
/// Points closer than `2·mesh_h` are rejected (duplicates are merged).
/// Thresholds follow the working constants `cfg.l`, `cfg.lambda1` and are
/// floored to multiples of `mesh_h` that grow with `|t|` so the small
/// circles have room for their `2|t|` exits.
pub fn circle_through_points(
    space: &MetricSpace,
    t: &[PointId],
    cfg: &CircleConfig,
) -> Result<CircleOutput, CircleError> {
    let mut pts: Vec<PointId> = Vec::new();
    for &p in t {
        if !pts.contains(&p) {
            pts.push(p);
        }
    }
    if pts.is_empty() {
        return Err(CircleError::NoPoints);
    }
    let h = space.mesh_h();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = space.dist(pts[i], pts[j]);
            if !num::ge(d, 2.0 * h) {
                return Err(CircleError::TooClose { a: pts[i], b: pts[j], dist: d, floor: 2.0 * h });
            }
        }
    }
    if let Some(f) = cfg.alc_factor {
        alc_precheck(space, &pts, f)
            .map_err(|e| CircleError::Traced { trace: Vec::new(), source: Box::new(CircleError::Alc(e)) })?;
    }
    let mut ctx = Ctx { space, cfg, h, trace: Vec::new(), memo: BTreeMap::new(), clusters: Vec::new() };
    let circle = match ctx.build(&pts, 0) {
        Ok(c) => c,
        Err(e) => return Err(CircleError::Traced { trace: ctx.trace, source: Box::new(e) }),
    };
    if let Some(&p) = pts.iter().find(|&&p| !circle.contains(p)) {
        return Err(CircleError::Traced { trace: ctx.trace, source: Box::new(CircleError::Lost(p)) });
    }
    let mut report = measure_circle_lambda(space, &circle);
    let dt = space.diameter_of(&pts);
    let diam_ratio = if dt > 0.0 { circle.diam(space) / dt } else { 1.0 };
    for step in &ctx.trace {
        for note in &step.notes {
            report.notes.push(format!("depth {}: {note}", step.depth));
        }
    }
    Ok(CircleOutput { circle, report, trace: ctx.trace, diam_ratio, clusters: ctx.clusters })
}

/// Checks [`annulus_connected`] at every point of a shortest path between
/// each pair of `t`, for radii `2h·2^k` up to half the pair distance.
fn alc_precheck(space: &MetricSpace, t: &[PointId], factor: f64) -> Result<(), AlcFailure> {
    let h = space.mesh_h();
    let mut centers: BTreeMap<usize, f64> = BTreeMap::new();
    for i in 0..t.len() {
        for j in i + 1..t.len() {
            let d = space.dist(t[i], t[j]);
            let Some(path) = bfs_path(space, |_| true, &[t[i]], |z| z == t[j]) else { continue };
            for &p in &path {
                let e = centers.entry(p.0).or_insert(0.0);
                *e = e.max(d / 2.0);
            }
        }
    }
    let mut r = 2.0 * h;
    while centers.values().any(|&top| num::le(r, top)) {
        for (&p, &top) in &centers {
            if num::le(r, top) {
                annulus_connected(space, PointId(p), r, factor)?;
            }
        }
        r *= 2.0;
    }
    Ok(())
}

struct Ctx<'a> {
    space: &'a MetricSpace,
    cfg: &'a CircleConfig,
    h: f64,
    trace: Vec<TraceStep>,
    memo: BTreeMap<Vec<PointId>, DiscreteCircle>,
    clusters: Vec<ClusterBounds>,
}

fn floored(name: &'static str, value: f64, floor: f64) -> Threshold {
    if num::lt(value, floor) {
        Threshold { name, value: floor, floored: true }
    } else {
        Threshold { name, value, floored: false }
    }
}

fn seed_of(base: u64, pts: &[PointId]) -> u64 {
    pts.iter().fold(base ^ 0x243F_6A88_85A3_08D3, |acc, p| {
        (acc ^ p.0 as u64).wrapping_mul(0x1000_0000_01B3).rotate_left(17)
    })
}

impl Ctx<'_> {
    fn build(&mut self, t: &[PointId], depth: usize) -> Result<DiscreteCircle, CircleError> {
        let mut key = t.to_vec();
        key.sort_unstable();
        if let Some(c) = self.memo.get(&key) {
            return Ok(c.clone());
        }
        let c = match t.len() {
            0 => return Err(CircleError::NoPoints),
            1 => {
                let (c, notes) = self.small_circle(t[0], 4.0 * self.h, 6.0 * self.h, None).map_err(|e| {
                    stage("small circle", CircleCase::Single, 1, 4.0 * self.h, e)
                })?;
                self.push(depth, t, CircleCase::Single, Vec::new(), None, &c, notes);
                c
            }
            2 => {
                let (c, notes) = self
                    .pair_circle(t[0], t[1], None)
                    .map_err(|e| stage("pair circle", CircleCase::Pair, 2, self.space.dist(t[0], t[1]), e))?;
                self.push(depth, t, CircleCase::Pair, Vec::new(), None, &c, notes);
                c
            }
            _ => self.inductive(t, depth)?,
        };
        self.memo.insert(key, c.clone());
        Ok(c)
    }

    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        depth: usize,
        t: &[PointId],
        case: CircleCase,
        thresholds: Vec<Threshold>,
        sigma: Option<f64>,
        c: &DiscreteCircle,
        mut notes: Vec<String>,
    ) {
        for th in thresholds.iter().filter(|th| th.floored) {
            notes.push(format!("{} floored to {}", th.name, th.value));
        }
        let lambda = measure_circle_lambda(self.space, c).lambda_measured;
        self.trace.push(TraceStep { depth, points: t.to_vec(), case, thresholds, sigma, lambda, notes });
    }

    fn inductive(&mut self, t: &[PointId], depth: usize) -> Result<DiscreteCircle, CircleError> {
        let space = self.space;
        let (l, h, n) = (self.cfg.l, self.h, t.len());
        // x1 is the first point of a closest pair; the rest by distance from x1
        let mut best = (f64::INFINITY, 0usize);
        for i in 0..n {
            for j in i + 1..n {
                let d = space.dist(t[i], t[j]);
                if num::lt(d, best.0) {
                    best = (d, i);
                }
            }
        }
        let x1 = t[best.1];
        let xs: Vec<PointId> = t.iter().copied().filter(|&p| p != x1).collect();
        let rank = num::tie_ranks(&xs.iter().map(|&p| space.dist(x1, p)).collect::<Vec<_>>());
        let mut order: Vec<usize> = (0..xs.len()).collect();
        order.sort_by_key(|&i| (rank[i], xs[i]));
        let mut xs: Vec<PointId> = order.into_iter().map(|i| xs[i]).collect();
        xs.insert(0, x1);
        let unit = space.dist(x1, xs[n - 1]);
        let s = space.dist(x1, xs[1]);
        let lam = self.cfg.lambda1;
        let delta = 1.0 / (200.0 * l * l * lam * lam * lam);
        let spread = floored("case split", num::powi(delta, n as i32 - 1) * unit, (n as f64 + 10.0) * h);
        let out = if num::ge(s, spread.value) {
            self.spread(&xs, s, unit, spread.clone(), depth)
        } else if num::lt(space.diameter_of(&xs), spread.value) {
            return self.mesh(&xs, spread, depth, Vec::new());
        } else {
            self.clustered(&xs, delta, spread.clone(), depth)
        };
        match out {
            Err(CircleError::Stage { stage, case, source, .. }) => {
                let note = format!("{stage} of the {case:?} branch failed ({source}); points inserted at mesh scale");
                self.mesh(&xs, spread, depth, vec![note])
            }
            r => r,
        }
    }

    fn mesh(
        &mut self,
        xs: &[PointId],
        split: Threshold,
        depth: usize,
        mut notes: Vec<String>,
    ) -> Result<DiscreteCircle, CircleError> {
        let space = self.space;
        let n = xs.len();
        let (mut a, mut b) = (0, 1);
        for i in 0..n {
            for j in i + 1..n {
                if num::lt(space.dist(xs[a], xs[b]), space.dist(xs[i], xs[j])) {
                    (a, b) = (i, j);
                }
            }
        }
        let (mut c, more) =
            self.pair_circle(xs[a], xs[b], None).map_err(|e| stage("pair circle", CircleCase::Mesh, n, split.value, e))?;
        notes.extend(more);
        for &p in xs {
            if !c.contains(p) {
                c = insert_point(space, &c, p, xs)
                    .ok_or_else(|| stage("insertion", CircleCase::Mesh, n, split.value, CircleError::Lost(p)))?;
            }
        }
        self.push(depth, xs, CircleCase::Mesh, vec![split], None, &c, notes);
        Ok(c)
    }

    fn spread(
        &mut self,
        xs: &[PointId],
        s: f64,
        unit: f64,
        split: Threshold,
        depth: usize,
    ) -> Result<DiscreteCircle, CircleError> {
        let space = self.space;
        let (l, h, n) = (self.cfg.l, self.h, xs.len());
        let nf = n as f64;
        let x1 = xs[0];
        let case = CircleCase::Spread;
        let alpha1 = self.build(&xs[1..], depth + 1)?;
        let lam = self.cfg.lambda1.max(measure_circle_lambda(space, &alpha1).lambda_measured);
        let r_in = floored("detour inner radius", s / (10.0 * l * l * lam), (nf + 4.0) * h);
        let r_near = floored("detour trigger", s / (10.0 * l * lam), r_in.value);
        let r_out = floored("detour outer radius", s / (5.0 * lam), r_in.value + 4.0 * h);
        let rho_in = floored("small circle ball", s / (40.0 * l * l * lam), (nf + 2.0) * h);
        let rho_d = floored("small circle diameter", s / (50.0 * l * l * lam * lam), nf * h);
        let eps = s / (100.0 * l * l * lam);
        let big = floored("joining ball", 4.0 * lam * l * space.diameter_of(xs), r_out.value + 4.0 * h);
        let mut notes = Vec::new();
        let mut beta1 = alpha1.clone();
        if num::le(space.dist_to_set(x1, alpha1.points()), r_near.value) {
            beta1 = widening_detour(space, &alpha1, x1, r_in.value, r_out.value, s, &mut notes)
                .map_err(|e| stage("detour", case, n, r_in.value, e))?;
            beta1 = self.maybe_straighten(&beta1, eps, &xs[1..], &mut notes);
        }
        let (beta2, more) = self
            .small_circle(x1, rho_d.value, rho_in.value, Some(&beta1.points().to_vec()))
            .map_err(|e| stage("small circle", case, n, rho_in.value, e))?;
        notes.extend(more);
        let region = self.join_region(x1, big.value, &beta1, &beta2);
        let (gamma, sigma) = self
            .join(&beta1, &xs[1..], &beta2, &xs[..1], true, xs, &region, s)
            .map_err(|e| stage("join", case, n, s, e))?;
        let gamma = self.maybe_straighten(&gamma, sigma / 2.0, xs, &mut notes);
        let _ = unit;
        self.push(depth, xs, case, vec![split, r_near, r_in, r_out, rho_in, rho_d, big], Some(sigma), &gamma, notes);
        Ok(gamma)
    }

    fn clustered(
        &mut self,
        xs: &[PointId],
        delta: f64,
        split: Threshold,
        depth: usize,
    ) -> Result<DiscreteCircle, CircleError> {
        let space = self.space;
        let (l, h, n) = (self.cfg.l, self.h, xs.len());
        let x1 = xs[0];
        let d1 = |i: usize| space.dist(x1, xs[i]);
        // cluster xs[..m]; the smallest m meeting delta, else the widest gap
        let mut notes = Vec::new();
        let m = match (2..n).find(|&m| num::le(d1(m - 1), delta * d1(m))) {
            Some(m) => m,
            None => {
                let m = (2..n)
                    .min_by(|&a, &b| {
                        let (ra, rb) = (d1(a - 1) / d1(a), d1(b - 1) / d1(b));
                        if num::lt(ra, rb) {
                            core::cmp::Ordering::Less
                        } else if num::lt(rb, ra) {
                            core::cmp::Ordering::Greater
                        } else {
                            core::cmp::Ordering::Equal
                        }
                    })
                    .unwrap_or(2);
                notes.push(format!("no gap of ratio {delta}; widest gap {} at m = {m}", d1(m - 1) / d1(m)));
                m
            }
        };
        let case = CircleCase::Clustered { m };
        let rho = d1(m - 1);
        let beta2 = self.build(&xs[..m], depth + 1)?;
        let mut far: Vec<PointId> = vec![x1];
        far.extend_from_slice(&xs[m..]);
        let alpha1 = self.build(&far, depth + 1)?;
        let lam = self.cfg.lambda1.max(measure_circle_lambda(space, &alpha1).lambda_measured);
        let reach = beta2.points().iter().map(|&p| space.dist(x1, p)).fold(0.0, f64::max);
        let r_in = floored("detour inner radius", 4.0 * lam * rho, reach + 2.0 * h);
        let mut r_out = floored("detour outer radius", 8.0 * lam * lam * l * l * rho, r_in.value + 4.0 * h);
        let cap = 0.8 * d1(m);
        if num::lt(cap, r_out.value) {
            notes.push(format!("detour outer radius capped at {cap}"));
            r_out.value = cap;
        }
        if !num::lt(r_in.value, r_out.value) {
            return Err(stage("detour", case, n, rho, CircleError::ClusterGap { near: r_in.value, far: cap }));
        }
        let big = floored("joining ball", 10.0 * lam * lam * l * l * rho, r_out.value + 4.0 * h);
        let beta1 = widening_detour(space, &alpha1, x1, r_in.value, r_out.value, cap, &mut notes)
            .map_err(|e| stage("detour", case, n, rho, e))?;
        let beta1 = self.maybe_straighten(&beta1, lam * rho, &xs[m..], &mut notes);
        let region = self.join_region(x1, big.value, &beta1, &beta2);
        let (gamma, sigma) = self
            .join(&beta1, &xs[m..], &beta2, &xs[..m], false, xs, &region, rho)
            .map_err(|e| stage("join", case, n, rho, e))?;
        let gamma = self.maybe_straighten(&gamma, sigma / 2.0, xs, &mut notes);
        let dd = 10.0 * lam * lam * l * l * rho;
        self.clusters.push(cluster_bounds(space, &gamma, x1, dd, lam));
        self.push(depth, xs, case, vec![split, r_in, r_out, big], Some(sigma), &gamma, notes);
        Ok(gamma)
    }

    fn join_region(&self, x1: PointId, radius: f64, beta1: &DiscreteCircle, beta2: &DiscreteCircle) -> PointSet {
        let mut region = ball_region(self.space, &Ball::new(x1, radius));
        region.extend(beta1.points().iter().copied());
        region.extend(beta2.points().iter().copied());
        region
    }

    fn maybe_straighten(
        &self,
        c: &DiscreteCircle,
        eps: f64,
        keep: &[PointId],
        notes: &mut Vec<String>,
    ) -> DiscreteCircle {
        if !num::ge(eps, 8.0 * self.h) {
            notes.push(format!("straightening at {eps} skipped below 8·mesh_h"));
            return c.clone();
        }
        match straighten_circle(self.space, c, eps, keep, self.cfg.l) {
            Ok(out) => out,
            Err(e) => {
                notes.push(format!("straightening at {eps} reverted: {e}"));
                c.clone()
            }
        }
    }

    /// Joins `outer` to `inner` by two of `2|all|` separated arcs that stay
    /// away from every point of `all` and end in one gap of the pigeonholed
    /// side, keeping the parts of both circles that carry their marks.
    #[allow(clippy::too_many_arguments)]
    fn join(
        &self,
        outer: &DiscreteCircle,
        outer_marks: &[PointId],
        inner: &DiscreteCircle,
        inner_marks: &[PointId],
        pigeon_outer: bool,
        all: &[PointId],
        region: &PointSet,
        scale: f64,
    ) -> Result<(DiscreteCircle, f64), CircleError> {
        let space = self.space;
        let count = 2 * all.len();
        let search = SeparationSearch { seed: seed_of(self.cfg.search.seed, all), ..self.cfg.search };
        let sep = separated_arcs(space, outer.points(), inner.points(), count, region, scale, search)?;
        let sigma = sep.sigma;
        let oset = PointSet::from_points(space.len(), outer.points().iter().copied());
        let survivors: Vec<DiscreteArc> = sep
            .arcs
            .into_iter()
            .map(|a| if oset.contains(a.first()) { a } else { a.reversed() })
            .filter(|a| all.iter().all(|&x| !num::lt(space.dist_to_set(x, a.points()), sigma / 2.0)))
            .collect();
        let (side, marks) = if pigeon_outer { (outer, outer_marks) } else { (inner, inner_marks) };
        let end = |a: &DiscreteArc| if pigeon_outer { a.first() } else { a.last() };
        let mut mpos: Vec<usize> = marks.iter().filter_map(|&x| side.position(x)).collect();
        mpos.sort_unstable();
        let gap = |p: usize| mpos.iter().filter(|&&m| m < p).count() % mpos.len().max(1);
        for i in 0..survivors.len() {
            for j in i + 1..survivors.len() {
                let (pa, pb) = (side.position(end(&survivors[i])), side.position(end(&survivors[j])));
                let (Some(pa), Some(pb)) = (pa, pb) else { continue };
                if gap(pa) != gap(pb) {
                    continue;
                }
                if let Some(c) = assemble(space, outer, outer_marks, inner, inner_marks, &survivors[i], &survivors[j]) {
                    return Ok((c, sigma));
                }
            }
        }
        Err(CircleError::Pigeonhole { survivors: survivors.len(), gaps: mpos.len() })
    }

    /// A circle through `x` inside `B(x, rho_in)` reaching distance
    /// `rho_d`, avoiding `avoid`.
    fn small_circle(
        &self,
        x: PointId,
        rho_d: f64,
        rho_in: f64,
        avoid: Option<&Vec<PointId>>,
    ) -> Result<(DiscreteCircle, Vec<String>), CircleError> {
        let space = self.space;
        let mut region = ball_region(space, &Ball::new(x, rho_in));
        if let Some(av) = avoid {
            for &p in av {
                region.remove(p);
            }
        }
        region.insert(x);
        let cands: Vec<PointId> =
            region.iter().filter(|&y| num::ge(space.dist(x, y), rho_d)).collect();
        let rank = num::tie_ranks(&cands.iter().map(|&y| space.dist(x, y)).collect::<Vec<_>>());
        let mut order: Vec<usize> = (0..cands.len()).collect();
        order.sort_by_key(|&i| (rank[i], cands[i]));
        let cands: Vec<PointId> = order.into_iter().map(|i| cands[i]).collect();
        for &y in cands.iter().take(8) {
            if let Some((c, eta)) = pair_direct(space, x, y, &region) {
                return Ok((c, vec![format!("small circle through {y}, relative separation {eta}")]));
            }
        }
        Err(CircleError::Pair { x, y: x })
    }

    /// The better-measured of the two-arc bogensatz circle and the direct
    /// relative-separation search, both kept inside `region`.
    fn pair_circle(
        &self,
        x: PointId,
        y: PointId,
        region: Option<&PointSet>,
    ) -> Result<(DiscreteCircle, Vec<String>), CircleError> {
        let space = self.space;
        let full = PointSet::full(space.len());
        let region = region.unwrap_or(&full);
        let mut scfg = SplitConfig::new(self.cfg.l);
        scfg.search = SeparationSearch { seed: seed_of(self.cfg.search.seed, &[x, y]), ..self.cfg.search };
        let split = match bogensatz(space, x, y, 2, &scfg) {
            Ok((arcs, _)) if arcs.iter().all(|a| a.points().iter().all(|&p| region.contains(p))) => {
                concatenate_to_circle(space, &arcs[0], &arcs[1]).map_err(|e| format!("{e}"))
            }
            Ok(_) => Err(String::from("arcs leave the region")),
            Err(e) => Err(format!("{e}")),
        };
        let direct = pair_direct(space, x, y, region);
        match (split, direct) {
            (Ok(c), Some((d, eta))) => {
                let (lc, ld) = (measure_circle_lambda(space, &c).lambda_measured, measure_circle_lambda(space, &d).lambda_measured);
                if num::le(lc, ld) {
                    Ok((c, Vec::new()))
                } else {
                    Ok((d, vec![format!("direct pair (relative separation {eta}, lambda {ld}) beats bogensatz pair (lambda {lc})")]))
                }
            }
            (Ok(c), None) => Ok((c, Vec::new())),
            (Err(why), Some((d, eta))) => {
                Ok((d, vec![format!("bogensatz pair unavailable ({why}); direct search at relative separation {eta}")]))
            }
            (Err(_), None) => Err(CircleError::Pair { x, y }),
        }
    }
}

/// [`detour_circle`], retried with the outer radius grown in `mesh_h`
/// steps while it stays below `limit` and the annulus does not connect.
fn widening_detour(
    space: &MetricSpace,
    c: &DiscreteCircle,
    x: PointId,
    r_in: f64,
    r_out: f64,
    limit: f64,
    notes: &mut Vec<String>,
) -> Result<DiscreteCircle, CircleError> {
    let h = space.mesh_h();
    let mut r = r_out;
    loop {
        match detour_circle(space, c, x, r_in, r) {
            Err(CircleError::AnnulusDisconnected { .. }) if num::lt(r + h, limit) => r += h,
            out => {
                if r > r_out && out.is_ok() {
                    notes.push(format!("detour outer radius widened to {r}"));
                }
                return out;
            }
        }
    }
}

fn stage(stage: &'static str, case: CircleCase, n: usize, scale: f64, e: CircleError) -> CircleError {
    match e {
        CircleError::Stage { .. } => e,
        e => CircleError::Stage { stage, case, n, scale, source: Box::new(e) },
    }
}

/// A shortest path from `x` to `y` closed up by a second path whose points
/// keep `d(z, P) ≥ η·d(z, {x, y})`, for the largest `η = 2^(-j/4)` that
/// works (down to `1/16`, then any internally disjoint path).
fn pair_direct(space: &MetricSpace, x: PointId, y: PointId, region: &PointSet) -> Option<(DiscreteCircle, f64)> {
    let p1 = bfs_path(space, |z| region.contains(z), &[x], |z| z == y)?;
    let set1 = PointSet::from_points(space.len(), p1.iter().copied());
    let ok = |z: PointId, eta: f64| {
        z == y
            || region.contains(z)
                && !set1.contains(z)
                && num::ge(space.dist_to_set(z, &p1), eta * space.dist(z, x).min(space.dist(z, y)))
    };
    for j in 0..=17 {
        let eta = if j == 17 { 0.0 } else { num::powf(2.0, -(j as f64) / 4.0) };
        let Some(p2) = bfs_path(space, |z| ok(z, eta), &[x], |z| z == y) else { continue };
        if p2.len() < 3 && p1.len() < 3 {
            continue;
        }
        let mut pts = p1.clone();
        pts.extend(p2[1..p2.len() - 1].iter().rev());
        if let Ok(c) = DiscreteCircle::new(space, pts) {
            return Some((c, eta));
        }
    }
    None
}

/// Replaces a run `c_i, …, c_j` of at most eight edges, nearest to `p`
/// first and holding no point of `marks` inside, by paths `c_i → p → c_j`
/// that miss the rest of `c`.
fn insert_point(space: &MetricSpace, c: &DiscreteCircle, p: PointId, marks: &[PointId]) -> Option<DiscreteCircle> {
    let pts = c.points();
    let n = pts.len();
    let rank = num::tie_ranks(&pts.iter().map(|&q| space.dist(p, q)).collect::<Vec<_>>());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (rank[i], i));
    for len in 1..=8.min(n - 1) {
        for &near in &order {
            for i in [near, (near + n - len) % n] {
                let j = (i + len) % n;
                let inner: Vec<PointId> = (1..len).map(|t| pts[(i + t) % n]).collect();
                if inner.iter().any(|q| marks.contains(q)) {
                    continue;
                }
                let mut on = PointSet::from_points(space.len(), pts.iter().copied());
                for &q in &inner {
                    on.remove(q);
                }
                let (u, v) = (pts[i], pts[j]);
                let Some(first) = bfs_path(space, |z| !on.contains(z), &[u], |z| z == p) else { continue };
                let taken = PointSet::from_points(space.len(), first.iter().copied());
                let Some(second) =
                    bfs_path(space, |z| z == v || !on.contains(z) && !taken.contains(z), &[p], |z| z == v)
                else {
                    continue;
                };
                let mut out: Vec<PointId> = c.forward_run(j, i);
                out.extend_from_slice(&first[1..]);
                out.extend_from_slice(&second[1..second.len() - 1]);
                if let Ok(circle) = DiscreteCircle::new(space, out) {
                    return Some(circle);
                }
            }
        }
    }
    None
}

fn run_with(c: &DiscreteCircle, from: usize, to: usize, marks: &[PointId]) -> Option<Vec<PointId>> {
    let fwd = c.forward_run(from, to);
    if marks.iter().all(|m| fwd.contains(m)) {
        return Some(fwd);
    }
    let mut back = c.forward_run(to, from);
    back.reverse();
    if marks.iter().all(|m| back.contains(m)) {
        return Some(back);
    }
    None
}

fn assemble(
    space: &MetricSpace,
    outer: &DiscreteCircle,
    outer_marks: &[PointId],
    inner: &DiscreteCircle,
    inner_marks: &[PointId],
    a: &DiscreteArc,
    b: &DiscreteArc,
) -> Option<DiscreteCircle> {
    let (pa, pb) = (outer.position(a.first())?, outer.position(b.first())?);
    let (qa, qb) = (inner.position(a.last())?, inner.position(b.last())?);
    if pa == pb || qa == qb {
        return None;
    }
    let mut pts = run_with(outer, pa, pb, outer_marks)?;
    pts.extend_from_slice(&b.points()[1..b.len() - 1]);
    pts.extend(run_with(inner, qb, qa, inner_marks)?);
    pts.extend(a.points()[1..a.len() - 1].iter().rev());
    DiscreteCircle::new(space, pts).ok()
}

/// Whole-arc straightening of the circle opened at its first kept point;
/// fails if a kept point is lost.
fn straighten_circle(
    space: &MetricSpace,
    c: &DiscreteCircle,
    eps: f64,
    keep: &[PointId],
    l: f64,
) -> Result<DiscreteCircle, String> {
    let start = keep.first().and_then(|&p| c.position(p)).unwrap_or(0);
    let arc = DiscreteArc::new(space, c.rotated(start).points().to_vec()).map_err(|e| format!("{e}"))?;
    let out = straighten(space, &arc, eps, StraightenMode::WholeArc, &JoinConfig::new(l)).map_err(|e| format!("{e}"))?;
    let pts = out.arc.into_points();
    if let Some(p) = keep.iter().find(|p| !pts.contains(p)) {
        return Err(format!("point {p} lost"));
    }
    DiscreteCircle::new(space, pts).map_err(|e| format!("{e}"))
}

/// Classifies every pair `z, z'` of `c` at distance `≥ mesh_h` by the
/// smaller-diameter subarc between them.
pub fn cluster_bounds(space: &MetricSpace, c: &DiscreteCircle, x1: PointId, d: f64, lambda1: f64) -> ClusterBounds {
    let pts = c.points();
    let n = pts.len();
    let h = space.mesh_h();
    let mut diam = vec![0.0f64; n * n];
    let idx = |s: usize, len: usize| len * n + s;
    for len in 1..n {
        for s in 0..n {
            let v = diam[idx(s, len - 1)].max(diam[idx((s + 1) % n, len - 1)]).max(space.dist(pts[s], pts[(s + len) % n]));
            diam[idx(s, len)] = v;
        }
    }
    let hit: Vec<usize> = pts.iter().map(|&p| usize::from(num::lt(space.dist(x1, p), 2.0 * lambda1 * d))).collect();
    let mut pre = vec![0usize; 2 * n + 1];
    for i in 0..2 * n {
        pre[i + 1] = pre[i] + hit[i % n];
    }
    let meets = |s: usize, len: usize| pre[s + len + 1] - pre[s] > 0;
    let near_ball = |p: PointId| num::lt(space.dist(x1, p), 10.0 * lambda1 * d);
    let mut out = ClusterBounds { d, lambda1, near: 0.0, away: 0.0, mid: 0.0 };
    for s in 0..n {
        for len in 1..n {
            let t = (s + len) % n;
            let dz = space.dist(pts[s], pts[t]);
            if !num::ge(dz, h) {
                continue;
            }
            let (fwd, back) = (diam[idx(s, len)], diam[idx(t, n - len)]);
            let (dm, avoids) = if num::le(fwd, back) { (fwd, !meets(s, len)) } else { (back, !meets(t, n - len)) };
            let ratio = dm / dz;
            if near_ball(pts[s]) && near_ball(pts[t]) {
                out.near = out.near.max(ratio);
            } else if avoids {
                out.away = out.away.max(ratio);
            } else {
                out.mid = out.mid.max(ratio);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{grid_index, grid_square, MetricSpace};

    fn side(k: usize, i: usize) -> Vec<PointId> {
        (0..=k).map(|j| grid_index(k, i, j)).collect()
    }

    #[test]
    fn three_disjoint_arcs_across_the_square() {
        let s = grid_square(8).unwrap();
        let full = PointSet::full(s.len());
        let arcs = disjoint_arcs(&s, &side(8, 0), &side(8, 8), 3, &full).unwrap();
        assert_eq!(arcs.len(), 3);
        let union: usize = arcs.iter().map(|a| a.len()).sum();
        let mut all: Vec<PointId> = arcs.iter().flat_map(|a| a.points().to_vec()).collect();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), union);
    }

    #[test]
    fn path_graph_has_a_single_cut_point() {
        let n = 6;
        let edges: Vec<(usize, usize, f64)> = (0..n - 1).map(|i| (i, i + 1, 1.0)).collect();
        let s = MetricSpace::from_graph(n, 1.0, None, &edges).unwrap();
        let full = PointSet::full(n);
        let err = disjoint_arcs(&s, &[PointId(0), PointId(1)], &[PointId(4), PointId(5)], 2, &full).unwrap_err();
        match err {
            CircleError::Cut { found, cut } => {
                assert_eq!(found, 1);
                assert_eq!(cut.len(), 1);
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn one_arc_is_a_shortest_path() {
        let s = grid_square(8).unwrap();
        let full = PointSet::full(s.len());
        let arcs = disjoint_arcs(&s, &[grid_index(8, 0, 4)], &[grid_index(8, 8, 4)], 1, &full).unwrap();
        assert_eq!(arcs[0].len(), 9);
    }

    #[test]
    fn opposite_sides_separate_well() {
        let k = 16;
        let s = grid_square(k).unwrap();
        let full = PointSet::full(s.len());
        let out = separated_arcs(&s, &side(k, 0), &side(k, k), 2, &full, 1.0, SeparationSearch::default()).unwrap();
        assert!(!out.fallback);
        assert!(out.sigma >= 0.25, "sigma {}", out.sigma);
        assert!(out.sigma >= out.target * (1.0 - 1e-9));
        assert_eq!(min_pairwise(&s, &out.arcs), out.sigma);
    }

    #[test]
    fn saturated_cut_falls_back_to_flow() {
        let k = 4;
        let s = grid_square(k).unwrap();
        let full = PointSet::full(s.len());
        let out = separated_arcs(&s, &side(k, 0), &side(k, k), k + 1, &full, 1.0, SeparationSearch::default()).unwrap();
        assert!(out.fallback);
        assert_eq!(out.arcs.len(), k + 1);
    }

    #[test]
    fn single_arc_reports_the_scale() {
        let s = grid_square(8).unwrap();
        let full = PointSet::full(s.len());
        let out = separated_arcs(&s, &side(8, 0), &side(8, 8), 1, &full, 0.7, SeparationSearch::default()).unwrap();
        assert_eq!(out.sigma, 0.7);
    }
    fn ring(k: usize, lo: usize, hi: usize) -> Vec<PointId> {
        let mut v = Vec::new();
        for i in lo..hi {
            v.push(grid_index(k, i, lo));
        }
        for j in lo..hi {
            v.push(grid_index(k, hi, j));
        }
        for i in (lo + 1..=hi).rev() {
            v.push(grid_index(k, i, hi));
        }
        for j in (lo + 1..=hi).rev() {
            v.push(grid_index(k, lo, j));
        }
        v
    }

    #[test]
    fn detour_avoids_the_ball_and_keeps_the_outside() {
        let k = 32;
        let s = grid_square(k).unwrap();
        let c = DiscreteCircle::new(&s, ring(k, 4, 28)).unwrap();
        let x = grid_index(k, 16, 4);
        let h = s.mesh_h();
        let (r_in, r_out) = (4.0 * h, 8.0 * h);
        let out = detour_circle(&s, &c, x, r_in, r_out).unwrap();
        assert!(out.points().iter().all(|&p| !num::lt(s.dist(x, p), r_in)));
        for &p in c.points() {
            if !num::lt(s.dist(x, p), r_out) {
                assert!(out.contains(p));
            }
        }
        for &p in out.points() {
            if !num::lt(s.dist(x, p), r_out) {
                assert!(c.contains(p));
            }
        }
        let far = grid_index(k, 16, 16);
        assert_eq!(detour_circle(&s, &c, far, r_in, r_out).unwrap(), c);
    }

    #[test]
    fn detour_rejects_small_radii_and_engulfing_balls() {
        let k = 32;
        let s = grid_square(k).unwrap();
        let c = DiscreteCircle::new(&s, ring(k, 14, 18)).unwrap();
        let h = s.mesh_h();
        let x = grid_index(k, 16, 16);
        assert!(matches!(detour_circle(&s, &c, x, h, 8.0 * h), Err(CircleError::DetourRadii { .. })));
        assert!(matches!(detour_circle(&s, &c, x, 4.0 * h, 8.0 * h), Err(CircleError::Engulfed { .. })));
    }

    fn check_circle(s: &MetricSpace, t: &[PointId], out: &CircleOutput) {
        for p in t {
            assert!(out.circle.contains(*p), "{p} missing");
        }
        assert!(DiscreteCircle::new(s, out.circle.points().to_vec()).is_ok());
        assert!(out.report.lambda_measured.is_finite());
        if t.len() >= 2 {
            assert!(out.diam_ratio <= out.report.lambda_measured + 1e-9, "{} > {}", out.diam_ratio, out.report.lambda_measured);
        }
        assert!(out.clusters.iter().all(|c| c.holds()));
    }

    #[test]
    fn circle_through_four_corners() {
        let k = 64;
        let s = grid_square(k).unwrap();
        let t = [grid_index(k, 0, 0), grid_index(k, k, 0), grid_index(k, k, k), grid_index(k, 0, k)];
        let out = circle_through_points(&s, &t, &CircleConfig::new(1.0)).unwrap();
        check_circle(&s, &t, &out);
        assert!(out.trace.iter().any(|st| st.case == CircleCase::Spread));
    }

    #[test]
    fn clustered_corner_takes_the_cluster_branch() {
        let k = 64;
        let s = grid_square(k).unwrap();
        let t = [grid_index(k, 0, 0), grid_index(k, 4, 0), grid_index(k, 0, 4), grid_index(k, k, k)];
        let out = circle_through_points(&s, &t, &CircleConfig::new(1.0)).unwrap();
        check_circle(&s, &t, &out);
        let top = out.trace.last().unwrap();
        assert!(matches!(top.case, CircleCase::Clustered { m: 3 }), "{:?}", top);
        assert_eq!(out.clusters.len(), 1);
    }

    #[test]
    fn single_point_and_pair() {
        let k = 64;
        let s = grid_square(k).unwrap();
        let x = grid_index(k, 20, 30);
        let out = circle_through_points(&s, &[x], &CircleConfig::new(1.0)).unwrap();
        check_circle(&s, &[x], &out);
        assert!(out.circle.diam(&s) < 8.0 * s.mesh_h());
        let t = [x, grid_index(k, 50, 30)];
        let out = circle_through_points(&s, &t, &CircleConfig::new(1.0)).unwrap();
        check_circle(&s, &t, &out);
    }

    #[test]
    fn glue_point_fails_the_annulus_precheck() {
        let (s, glue) = crate::space::glued_squares(16).unwrap();
        let a = PointId(crate::space::grid_index(16, 8, 8).0);
        let far = s.points().max_by(|&p, &q| s.dist(a, p).partial_cmp(&s.dist(a, q)).unwrap()).unwrap();
        let err = circle_through_points(&s, &[a, far], &CircleConfig::new(1.0)).unwrap_err();
        match err {
            CircleError::Traced { source, .. } => match *source {
                CircleError::Alc(f) => assert!(s.dist(f.p, glue) < f.r, "{f:?}"),
                e => panic!("unexpected {e:?}"),
            },
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn close_points_are_rejected() {
        let s = grid_square(16).unwrap();
        let err = circle_through_points(&s, &[grid_index(16, 3, 3), grid_index(16, 4, 3)], &CircleConfig::new(1.0));
        assert!(matches!(err, Err(CircleError::TooClose { .. })));
    }
}
