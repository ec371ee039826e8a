//! Separated nets, the `V_x` families, single-scale joining and the
//! multi-scale straightening of arcs into local quasi-arcs.
//!
//! Radii derived from `ι` are floored at `2·mesh_h`; when the floor is
//! active the reported constants `s = δr/ι` and `S = 11L²r/ι` use the floored
//! `r`, so they stay honest about what was achieved.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::arc::{check_follows, measure_lambda, ArcError, ConstructionReport, DiscreteArc, Locality};
use crate::graph::{bfs_path, closed_neighborhood, PointSet};
use crate::num;
use crate::space::{MetricSpace, PointId};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum StraightenError {
    #[error("anchors {a} and {b} are closer than r = {r}")]
    AnchorsTooClose { a: PointId, b: PointId, r: f64 },
    #[error("r = {r} is below mesh_h = {mesh}")]
    RadiusBelowMesh { r: f64, mesh: f64 },
    #[error("no arc joins {from} to the set of {center} inside radius {radius}; the linear connectivity constant is too small")]
    NoLocalArc { center: PointId, from: PointId, radius: f64 },
    #[error("no separation constant down to {delta_floor} keeps every V_x within diameter {bound}")]
    Resolution { delta_floor: f64, bound: f64 },
    #[error("cut indices {a1}, {a2} are invalid for an arc of length {len}")]
    BadCuts { a1: usize, a2: usize, len: usize },
    #[error("side pieces are {dist} apart, need 2·eps = {need}")]
    SidesTooClose { dist: f64, need: f64 },
    #[error("iota {iota} must lie in (0, {eps})")]
    BadIota { iota: f64, eps: f64 },
    #[error("eps {eps} is below 8·mesh_h = {floor}")]
    EpsTooSmall { eps: f64, floor: f64 },
    #[error("joining chain stalled at step {step}: {reason}")]
    ChainStall { step: usize, reason: &'static str },
    #[error("output does not follow the input within {iota}: best displacement {found}")]
    FollowsFailed { iota: f64, found: f64 },
    #[error("arc point {0} is outside the allowed region")]
    OutsideAllowed(PointId),
    #[error(transparent)]
    Arc(#[from] ArcError),
}

/// Step ratio of the downward search for `δ`.
fn delta_step() -> f64 {
    num::powf(2.0, -0.25)
}

// --------------------------------------------------------------------- nets

/// Greedy maximal `r`-separated net containing `anchors`, scanning candidate
/// points in index order. With `domain` the net lives inside it and is
/// maximal there.
pub fn maximal_separated_net(
    space: &MetricSpace,
    r: f64,
    anchors: &[PointId],
    domain: Option<&PointSet>,
) -> Result<Vec<PointId>, StraightenError> {
    if !num::ge(r, space.mesh_h()) {
        return Err(StraightenError::RadiusBelowMesh { r, mesh: space.mesh_h() });
    }
    for (i, &a) in anchors.iter().enumerate() {
        for &b in &anchors[i + 1..] {
            if !num::ge(space.dist(a, b), r) {
                return Err(StraightenError::AnchorsTooClose { a, b, r });
            }
        }
    }
    let mut net: Vec<PointId> = anchors.to_vec();
    let mut in_net = PointSet::from_points(space.len(), anchors.iter().copied());
    for p in space.points() {
        if in_net.contains(p) || domain.is_some_and(|d| !d.contains(p)) {
            continue;
        }
        if net.iter().all(|&x| num::ge(space.dist(p, x), r)) {
            net.push(p);
            in_net.insert(p);
        }
    }
    Ok(net)
}

// ----------------------------------------------------------------- V family

/// Net together with its sets `V_x` and the separation constant achieved.
#[derive(Clone, Debug, PartialEq)]
pub struct NetFamily {
    pub r: f64,
    /// Linear connectivity constant used to size the sets.
    pub l: f64,
    pub net: Vec<PointId>,
    /// `v[i]` is `V_x` for `x = net[i]`, sorted; each is a connected union of
    /// step paths through `x`.
    pub v: Vec<Vec<PointId>>,
    pub delta: f64,
    members: Vec<PointSet>,
}

/// Which of the four family properties failed, with a witness.
#[derive(Clone, Debug, PartialEq)]
pub enum PropertyViolation {
    /// `d(x, y) ≤ 2r` but `y ∉ V_x`.
    Neighbour { x: PointId, y: PointId },
    /// `diam(V_x)` above the bound.
    Diameter { x: PointId, diam: f64, bound: f64 },
    /// Disjoint `V_x`, `V_y` at distance at most `δr`.
    Separation { x: PointId, y: PointId, dist: f64 },
    /// A side-arc point of `B(x, r)` missing from `V_x`.
    SideCover { x: PointId, p: PointId },
}

impl NetFamily {
    pub fn contains(&self, i: usize, p: PointId) -> bool {
        self.members[i].contains(p)
    }

    pub fn set(&self, i: usize) -> &PointSet {
        &self.members[i]
    }

    /// Bound used for the diameter property: `5L(r + mesh_h)`.
    pub fn diam_bound(&self, space: &MetricSpace) -> f64 {
        5.0 * self.l * (self.r + space.mesh_h())
    }

    /// Exhaustive check of the four properties. Property (1) is checked in
    /// the stronger form `d(x, y) ≤ 2r + mesh_h`.
    pub fn check(&self, space: &MetricSpace, sides: &[&[PointId]]) -> Result<(), PropertyViolation> {
        let reach = 2.0 * self.r + space.mesh_h();
        let bound = self.diam_bound(space);
        let dr = self.delta * self.r;
        for (i, &x) in self.net.iter().enumerate() {
            for &y in &self.net {
                if num::le(space.dist(x, y), reach) && !self.contains(i, y) {
                    return Err(PropertyViolation::Neighbour { x, y });
                }
            }
            let diam = space.diameter_of(&self.v[i]);
            if !num::le(diam, bound) {
                return Err(PropertyViolation::Diameter { x, diam, bound });
            }
            for side in sides {
                for &p in side.iter() {
                    if num::lt(space.dist(x, p), self.r) && !self.contains(i, p) {
                        return Err(PropertyViolation::SideCover { x, p });
                    }
                }
            }
        }
        for i in 0..self.net.len() {
            for j in i + 1..self.net.len() {
                if self.members[i].intersects(&self.members[j]) {
                    continue;
                }
                let d = space.set_distance(&self.v[i], &self.v[j]);
                if !(d > dr) {
                    return Err(PropertyViolation::Separation { x: self.net[i], y: self.net[j], dist: d });
                }
            }
        }
        Ok(())
    }
}

/// Maximal runs of consecutive `side` points inside `B(x, radius)`.
fn runs_in_ball(space: &MetricSpace, side: &[PointId], x: PointId, radius: f64) -> Vec<Vec<PointId>> {
    let mut runs = Vec::new();
    let mut cur: Vec<PointId> = Vec::new();
    for &p in side {
        if num::lt(space.dist(x, p), radius) {
            cur.push(p);
        } else if !cur.is_empty() {
            runs.push(core::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        runs.push(cur);
    }
    runs
}

/// Builds `V_x^(0)` for every net point: `x`, step paths joining every net
/// point within `2r + mesh_h` to it, and the side-arc runs inside `B(x, 2r)`
/// with paths joining them, all inside the closed ball of radius
/// `L(2r + mesh_h) + 2·mesh_h`. Disjoint sets within `mesh_h` of each other
/// are bridged by a shortest step path (the floor `δ ≥ mesh_h / r` forces
/// this), every diameter must stay within `5L(r + mesh_h)`, and `δ` is the
/// largest `2^(-j/4)` with `δr` below the smallest gap left between disjoint
/// sets.
pub fn build_v_family(
    space: &MetricSpace,
    net: &[PointId],
    r: f64,
    l: f64,
    sides: &[&[PointId]],
    allowed: &PointSet,
) -> Result<NetFamily, StraightenError> {
    let h = space.mesh_h();
    if !num::ge(r, h) {
        return Err(StraightenError::RadiusBelowMesh { r, mesh: h });
    }
    let l = l.max(1.0);
    let universe = space.len();
    let reach = 2.0 * r + h;
    let rho = l * reach + 2.0 * h;
    let mut base: Vec<PointSet> = Vec::with_capacity(net.len());
    for &x in net {
        let in_ball = |z: PointId| allowed.contains(z) && num::le(space.dist(x, z), rho);
        let mut set = PointSet::from_points(universe, [x]);
        let attach = |set: &mut PointSet, sources: &[PointId]| -> Result<(), StraightenError> {
            let path = bfs_path(space, in_ball, sources, |q| set.contains(q))
                .ok_or(StraightenError::NoLocalArc { center: x, from: sources[0], radius: rho })?;
            set.extend(path);
            set.extend(sources.iter().copied());
            Ok(())
        };
        for &y in net {
            if y != x && num::le(space.dist(x, y), reach) && !set.contains(y) {
                attach(&mut set, &[y])?;
            }
        }
        for side in sides {
            for run in runs_in_ball(space, side, x, 2.0 * r) {
                attach(&mut set, &run)?;
            }
        }
        base.push(set);
    }
    let bound = 5.0 * l * (r + h);
    let floor = h / r;
    let centers: Vec<PointId> = net.to_vec();
    let members = bridge_family(space, &centers, &base, h, bound, allowed)
        .ok_or(StraightenError::Resolution { delta_floor: floor, bound })?;
    let v: Vec<Vec<PointId>> = members.iter().map(|m| m.to_vec()).collect();
    // largest grid value of δ with δr strictly below every gap between disjoint sets
    let mut gap = f64::INFINITY;
    for i in 0..centers.len() {
        for j in i + 1..centers.len() {
            if !members[i].intersects(&members[j]) {
                gap = gap.min(space.set_distance(&v[i], &v[j]));
            }
        }
    }
    let mut delta = 1.0f64;
    while !(delta * r < gap) {
        delta *= delta_step();
    }
    if delta < floor * (1.0 - num::REL_TOL) {
        return Err(StraightenError::Resolution { delta_floor: floor, bound });
    }
    Ok(NetFamily { r, l, net: centers, v, delta, members })
}

/// Bridges disjoint sets at distance `≤ gap` until none remain. `None` when a
/// bridged set outgrows `bound`.
fn bridge_family(
    space: &MetricSpace,
    centers: &[PointId],
    base: &[PointSet],
    gap: f64,
    bound: f64,
    allowed: &PointSet,
) -> Option<Vec<PointSet>> {
    let mut sets: Vec<PointSet> = base.to_vec();
    let mut pts: Vec<Vec<PointId>> = sets.iter().map(|s| s.to_vec()).collect();
    let radius = |c: PointId, ps: &[PointId]| ps.iter().map(|&p| space.dist(c, p)).fold(0.0, f64::max);
    let mut rad: Vec<f64> = centers.iter().zip(&pts).map(|(&c, ps)| radius(c, ps)).collect();
    if pts.iter().any(|ps| !num::le(space.diameter_of(ps), bound)) {
        return None;
    }
    loop {
        let mut changed = false;
        for i in 0..centers.len() {
            for j in i + 1..centers.len() {
                if space.dist(centers[i], centers[j]) > rad[i] + rad[j] + gap * (1.0 + num::REL_TOL) {
                    continue;
                }
                if sets[i].intersects(&sets[j]) {
                    continue;
                }
                let Some((p, q)) = close_pair(space, &pts[i], &pts[j], centers[j], rad[j], gap) else {
                    continue;
                };
                let path = bfs_path(space, |z| allowed.contains(z), &[p], |z| z == q)?;
                // Either set may carry the bridge; take the first that stays within the bound.
                let mut placed = false;
                for k in [i, j] {
                    let mut grown = sets[k].clone();
                    grown.extend(path.iter().copied());
                    let gp = grown.to_vec();
                    if num::le(space.diameter_of(&gp), bound) {
                        rad[k] = radius(centers[k], &gp);
                        sets[k] = grown;
                        pts[k] = gp;
                        placed = true;
                        break;
                    }
                }
                if !placed {
                    return None;
                }
                changed = true;
            }
        }
        if !changed {
            return Some(sets);
        }
    }
}

/// Closest-first pair `(p, q)`, `p ∈ a`, `q ∈ b`, with `d(p, q) ≤ gap`.
fn close_pair(
    space: &MetricSpace,
    a: &[PointId],
    b: &[PointId],
    b_center: PointId,
    b_rad: f64,
    gap: f64,
) -> Option<(PointId, PointId)> {
    let mut best: Option<(f64, PointId, PointId)> = None;
    for &p in a {
        if space.dist(p, b_center) > b_rad + gap * (1.0 + num::REL_TOL) {
            continue;
        }
        for &q in b {
            let d = space.dist(p, q);
            if num::le(d, gap) && best.is_none_or(|(bd, _, _)| d < bd) {
                best = Some((d, p, q));
            }
        }
    }
    best.map(|(_, p, q)| (p, q))
}

// ------------------------------------------------------------- three pieces

/// An arc cut into `A₁ = A[a₀, a₁]`, `A₂ = A[a₁, a₂]`, `A₃ = A[a₂, a₃]`, the
/// outer pieces being `eps`-local quasi-arcs at distance `≥ 2·eps`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThreePieceArc {
    pub arc: DiscreteArc,
    pub a1: usize,
    pub a2: usize,
    pub eps: f64,
    whole: bool,
}

impl ThreePieceArc {
    pub fn new(space: &MetricSpace, arc: DiscreteArc, a1: usize, a2: usize, eps: f64) -> Result<Self, StraightenError> {
        if a1 > a2 || a2 >= arc.len() {
            return Err(StraightenError::BadCuts { a1, a2, len: arc.len() });
        }
        let pts = arc.points();
        let dist = space.set_distance(&pts[..=a1], &pts[a2..]);
        if !num::ge(dist, 2.0 * eps) {
            return Err(StraightenError::SidesTooClose { dist, need: 2.0 * eps });
        }
        Ok(ThreePieceArc { arc, a1, a2, eps, whole: false })
    }

    /// The degenerate cut `A₁ = {a₀}`, `A₃ = {a₃}` used to straighten a whole
    /// arc; the distance hypothesis is not required.
    pub fn whole(arc: DiscreteArc, eps: f64) -> Self {
        let a2 = arc.len() - 1;
        ThreePieceArc { arc, a1: 0, a2, eps, whole: true }
    }

    pub fn is_whole(&self) -> bool {
        self.whole
    }

    pub fn side1(&self) -> &[PointId] {
        &self.arc.points()[..=self.a1]
    }

    pub fn middle(&self) -> &[PointId] {
        &self.arc.points()[self.a1..=self.a2]
    }

    pub fn side3(&self) -> &[PointId] {
        &self.arc.points()[self.a2..]
    }
}

/// Settings shared by the joining passes.
#[derive(Clone, Debug, PartialEq)]
pub struct JoinConfig {
    /// Working linear connectivity constant of the space.
    pub l: f64,
    /// Points the construction may use; `None` means all of them.
    pub allowed: Option<PointSet>,
}

impl JoinConfig {
    pub fn new(l: f64) -> Self {
        JoinConfig { l, allowed: None }
    }
}

/// Exhaustive scan of `d(x,y) < sι ⟹ diam(J[x,y]) < Sι` over pairs at
/// distance at least `mesh_h`.
#[derive(Clone, Debug, PartialEq)]
pub struct StarCheck {
    pub s_iota: f64,
    pub big_s_iota: f64,
    pub pairs_checked: usize,
    pub violations: usize,
    /// Largest `diam(J[x,y])` over the checked pairs.
    pub max_diam: f64,
    pub worst: Option<(usize, usize)>,
}

impl StarCheck {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

pub fn star_check(space: &MetricSpace, arc: &[PointId], s_iota: f64, big_s_iota: f64) -> StarCheck {
    let n = arc.len();
    let h = space.mesh_h();
    let mut diam = vec![0.0f64; n];
    let mut out = StarCheck { s_iota, big_s_iota, pairs_checked: 0, violations: 0, max_diam: 0.0, worst: None };
    for len in 1..n {
        for s in 0..n - len {
            let d = space.dist(arc[s], arc[s + len]);
            let v = diam[s].max(diam[s + 1]).max(d);
            diam[s] = v;
            if num::ge(d, h) && d < s_iota {
                out.pairs_checked += 1;
                if v > out.max_diam {
                    out.max_diam = v;
                    out.worst = Some((s, s + len));
                }
                if !(v < big_s_iota) {
                    out.violations += 1;
                }
            }
        }
    }
    out
}

/// What one joining pass did.
#[derive(Clone, Debug, PartialEq)]
pub struct JoinTrace {
    pub iota: f64,
    pub r: f64,
    /// `true` when `r` was raised to `2·mesh_h`.
    pub r_floored: bool,
    pub l: f64,
    pub delta: f64,
    pub s: f64,
    pub big_s: f64,
    pub net_size: usize,
    /// Number of chain steps `n`.
    pub chain_len: usize,
    /// Largest displacement of the coarse map.
    pub iota_eff: f64,
    pub star: StarCheck,
    /// Largest `diam(J[x,y])` in each case of the proof with its bound:
    /// same side piece, both middle, mixed.
    pub case_max: [(f64, f64); 3],
    /// Whether the initial and final components of `A ∖ N(A₂, 2ι)` survive.
    pub kept_components: bool,
    /// Cut positions of the output: `J[..=q0]` and `J[q_end..]` are the
    /// untouched pieces of `A₁` and `A₃`.
    pub q0: usize,
    pub q_end: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Joined {
    pub arc: DiscreteArc,
    /// Coarse map: `f[t]` is the position in the input arc assigned to the
    /// output point `t`.
    pub f: Vec<usize>,
    pub trace: JoinTrace,
    pub report: ConstructionReport,
}

fn arc_in_allowed(arc: &[PointId], allowed: &PointSet) -> Result<(), StraightenError> {
    match arc.iter().find(|&&p| !allowed.contains(p)) {
        Some(&p) => Err(StraightenError::OutsideAllowed(p)),
        None => Ok(()),
    }
}

/// Initial and final components of `A ∖ N(A₂, rad)` as prefix/suffix lengths.
fn outer_components(space: &MetricSpace, t: &ThreePieceArc, rad: f64) -> (usize, usize) {
    if t.whole {
        return (0, 0);
    }
    let pts = t.arc.points();
    let mid = t.middle();
    let far = |p: PointId| num::ge(space.dist_to_set(p, mid), rad);
    let pre = pts.iter().take_while(|&&p| far(p)).count();
    let suf = pts.iter().rev().take_while(|&&p| far(p)).count();
    (pre, suf)
}

/// One joining pass at scale `iota`.
pub fn single_scale_join(
    space: &MetricSpace,
    t: &ThreePieceArc,
    iota: f64,
    cfg: &JoinConfig,
) -> Result<Joined, StraightenError> {
    if !(iota > 0.0 && iota < t.eps) {
        return Err(StraightenError::BadIota { iota, eps: t.eps });
    }
    let h = space.mesh_h();
    let pts = t.arc.points();
    let full;
    let allowed = match &cfg.allowed {
        Some(a) => a,
        None => {
            full = PointSet::full(space.len());
            &full
        }
    };
    arc_in_allowed(pts, allowed)?;
    let lam = if t.whole {
        1.0
    } else {
        let side = |s: &[PointId]| {
            measure_lambda(space, &DiscreteArc::from_trusted(s.to_vec()), Locality::Local(t.eps)).lambda_measured
        };
        side(t.side1()).max(side(t.side3()))
    };
    let l = cfg.l.max(lam).max(1.0);
    let r_raw = iota / (20.0 * l);
    let r = r_raw.max(2.0 * h);
    let (a0, a3) = (pts[0], pts[pts.len() - 1]);

    let unchanged = |note: &str| -> Joined {
        let f: Vec<usize> = (0..pts.len()).collect();
        let star = star_check(space, pts, r, 11.0 * l * l * r);
        let trace = JoinTrace {
            iota,
            r,
            r_floored: r > r_raw,
            l,
            delta: 1.0,
            s: r / iota,
            big_s: 11.0 * l * l * r / iota,
            net_size: 0,
            chain_len: 0,
            iota_eff: 0.0,
            star,
            case_max: [(0.0, 0.0); 3],
            kept_components: true,
            q0: t.a1,
            q_end: t.a2,
        };
        let mut report = measure_lambda(space, &t.arc, Locality::Local(r));
        report.follows_iota = Some(0.0);
        report.notes.push(String::from(note));
        Joined { arc: t.arc.clone(), f, trace, report }
    };
    if t.a1 == t.a2 {
        return Ok(unchanged("middle piece is a single point; arc returned unchanged"));
    }
    if !num::ge(space.dist(a0, a3), r) {
        return Ok(unchanged("endpoints closer than r; arc returned unchanged"));
    }
    if star_check(space, pts, r, 11.0 * l * l * r).holds()
        && num::le(measure_lambda(space, &t.arc, Locality::Local(r)).lambda_measured, l)
    {
        return Ok(unchanged("arc already satisfies (*) and the local bound; returned unchanged"));
    }

    let mut domain = closed_neighborhood(space, pts, 2.0 * r);
    domain.intersect_with(allowed);
    let net = maximal_separated_net(space, r, &[a0, a3], Some(&domain))?;
    let sides: [&[PointId]; 2] = [t.side1(), t.side3()];
    let fam = build_v_family(space, &net, r, l, &sides, allowed)?;
    let m_net = net.len();

    // membership lists
    let mut member_of: Vec<Vec<u32>> = vec![Vec::new(); space.len()];
    for (i, v) in fam.v.iter().enumerate() {
        for &p in v {
            member_of[p.0].push(i as u32);
        }
    }

    // cover A₂ by runs, each inside some B(z, r)
    let mut runs: Vec<(usize, usize)> = Vec::new(); // (net index z_j, arc index y_j)
    let mut i = t.a1;
    while i <= t.a2 {
        let p = pts[i];
        let mut best: Option<(usize, usize)> = None; // (run end, net idx)
        for (zi, &z) in net.iter().enumerate() {
            if !num::lt(space.dist(p, z), r) {
                continue;
            }
            let mut e = i;
            while e < t.a2 && num::lt(space.dist(pts[e + 1], z), r) {
                e += 1;
            }
            if best.is_none_or(|(be, _)| e > be) {
                best = Some((e, zi));
            }
        }
        let (e, zi) = best.ok_or(StraightenError::ChainStall { step: 0, reason: "middle point not covered by the net" })?;
        runs.push((zi, i));
        i = e + 1;
    }
    let m = runs.len();

    let mut union_z = PointSet::empty(space.len());
    for &(zi, _) in &runs {
        union_z.union_with(fam.set(zi));
    }
    let meets_u: Vec<bool> = (0..m_net).map(|x| fam.set(x).intersects(&union_z)).collect();
    let mut maxj: Vec<Option<usize>> = vec![None; m_net];
    for (j, &(zi, _)) in runs.iter().enumerate() {
        for &p in &fam.v[zi] {
            for &x in &member_of[p.0] {
                let x = x as usize;
                maxj[x] = Some(maxj[x].map_or(j, |k: usize| k.max(j)));
            }
        }
    }
    let side3 = PointSet::from_points(space.len(), t.side3().iter().copied());
    let in_k: Vec<bool> = (0..m_net).map(|x| fam.set(x).intersects(&side3)).collect();
    let mut kset = PointSet::empty(space.len());
    for x in 0..m_net {
        if in_k[x] {
            kset.union_with(fam.set(x));
        }
    }
    let last_a3: Vec<Option<usize>> = (0..m_net)
        .map(|x| (t.a2..pts.len()).rev().find(|&i| fam.contains(x, pts[i])))
        .collect();

    // q0 and w0
    let mut start: Option<(usize, usize)> = None;
    for (i, &p) in pts.iter().enumerate().take(t.a1 + 1) {
        let mut cand: Option<usize> = None;
        for &x in &member_of[p.0] {
            let x = x as usize;
            if meets_u[x] && cand.is_none_or(|c| maxj[x] > maxj[c]) {
                cand = Some(x);
            }
        }
        if let Some(x) = cand {
            start = Some((i, x));
            break;
        }
    }
    let (q0, w0) = start.ok_or(StraightenError::ChainStall { step: 0, reason: "no point of A1 lies in a set meeting the middle" })?;

    // greedy chain
    let mut ws: Vec<usize> = vec![w0];
    let mut ks: Vec<usize> = Vec::new();
    loop {
        let w = *ws.last().expect("non-empty");
        if fam.set(w).intersects(&kset) {
            break;
        }
        let k = maxj[w].ok_or(StraightenError::ChainStall { step: ws.len(), reason: "set meets no middle ball" })?;
        if ks.last().is_some_and(|&prev| k <= prev) {
            return Err(StraightenError::ChainStall { step: ws.len(), reason: "chain revisits a middle ball" });
        }
        ks.push(k);
        ws.push(runs[k].0);
        if ws.len() > m + 2 {
            return Err(StraightenError::ChainStall { step: ws.len(), reason: "chain longer than the cover" });
        }
    }
    let w_last = *ws.last().expect("non-empty");
    let mut wn: Option<(usize, usize)> = None; // (last A3 index, net idx)
    for &p in &fam.v[w_last] {
        for &x in &member_of[p.0] {
            let x = x as usize;
            if let (true, Some(la)) = (in_k[x], last_a3[x]) {
                if wn.is_none_or(|(b, bx)| la > b || (la == b && x < bx)) {
                    wn = Some((la, x));
                }
            }
        }
    }
    let (q_end, wn) = wn.ok_or(StraightenError::ChainStall { step: ws.len(), reason: "no final set reaches A3" })?;
    let mut chain = ws.clone();
    if wn != w_last {
        chain.push(wn);
    }
    let n_chain = chain.len() - 1;
    if q_end < t.a2 || q0 > t.a1 || (q0 == q_end) {
        return Err(StraightenError::ChainStall { step: n_chain, reason: "cut points out of order" });
    }

    // assemble J
    let universe = space.len();
    let mut used = PointSet::from_points(universe, pts[..=q0].iter().copied());
    used.extend(pts[q_end + 1..].iter().copied());
    let reserved = pts[q_end];
    let mut jpts: Vec<PointId> = pts[..=q0].to_vec();
    let mut f: Vec<usize> = (0..=q0).collect();
    let mut piece: Vec<i32> = vec![-1; q0 + 1];
    let mut cur = pts[q0];
    for i in 0..chain.len() {
        let v = fam.set(chain[i]);
        let value = if i == 0 {
            q0
        } else if i == chain.len() - 1 {
            q_end
        } else {
            runs[ks[i - 1]].1
        };
        let last_piece = i == chain.len() - 1;
        let path = if last_piece {
            bfs_path(space, |z| v.contains(z) && (!used.contains(z) || z == reserved), &[cur], |z| z == reserved)
        } else {
            let next = fam.set(chain[i + 1]);
            bfs_path(
                space,
                |z| v.contains(z) && !used.contains(z) && z != reserved,
                &[cur],
                |z| next.contains(z) && !used.contains(z) && z != reserved,
            )
        }
        .ok_or(StraightenError::ChainStall { step: i, reason: "no free path inside the chain set" })?;
        *f.last_mut().expect("non-empty") = value;
        *piece.last_mut().expect("non-empty") = i as i32;
        for &z in &path[1..] {
            used.insert(z);
            jpts.push(z);
            f.push(value);
            piece.push(i as i32);
        }
        cur = *path.last().expect("non-empty");
    }
    let q_end_out = jpts.len() - 1;
    *piece.last_mut().expect("non-empty") = n_chain as i32 + 1;
    *f.last_mut().expect("non-empty") = q_end;
    for (off, &p) in pts[q_end + 1..].iter().enumerate() {
        jpts.push(p);
        f.push(q_end + 1 + off);
        piece.push(n_chain as i32 + 1);
    }
    let arc = DiscreteArc::new(space, jpts)?;
    debug_assert!(f.windows(2).all(|w| w[0] <= w[1]));

    let iota_eff = arc.points().iter().zip(&f).map(|(&p, &i)| space.dist(p, pts[i])).fold(0.0, f64::max);
    let follows = check_follows(space, &arc, &t.arc, iota_eff);
    if !follows.holds {
        return Err(StraightenError::FollowsFailed { iota: iota_eff, found: follows.max_displacement });
    }

    let delta = fam.delta;
    let s_iota = delta * r;
    let big_s_iota = 11.0 * l * l * r;
    let star = star_check(space, arc.points(), s_iota, big_s_iota);
    let case_max = case_maxima(space, arc.points(), &piece, s_iota, lam, l, r, h);
    let (pre, suf) = outer_components(space, t, 2.0 * iota);
    let jp = arc.points();
    let kept = jp.len() >= pre + suf
        && jp[..pre] == pts[..pre]
        && jp[jp.len() - suf..] == pts[pts.len() - suf..];

    let mut report = measure_lambda(space, &arc, Locality::Local(s_iota));
    report.follows_iota = Some(iota_eff);
    if r > r_raw {
        report.notes.push(format!("r floored from {r_raw} to 2·mesh_h = {r}"));
    }
    if !star.holds() {
        report.notes.push(format!("(*) fails on {} of {} pairs", star.violations, star.pairs_checked));
    }
    let trace = JoinTrace {
        iota,
        r,
        r_floored: r > r_raw,
        l,
        delta,
        s: s_iota / iota,
        big_s: big_s_iota / iota,
        net_size: m_net,
        chain_len: n_chain,
        iota_eff,
        star,
        case_max,
        kept_components: kept,
        q0,
        q_end: q_end_out,
    };
    Ok(Joined { arc, f, trace, report })
}

/// Per-case largest `diam(J[x,y])` over pairs with `mesh_h ≤ d < δr`, with the
/// proof's bounds `λd`, `10L(r+h)` and `11L²r` (the last two carry the
/// discrete slack of the diameter property).
#[allow(clippy::too_many_arguments)]
fn case_maxima(
    space: &MetricSpace,
    arc: &[PointId],
    piece: &[i32],
    s_iota: f64,
    lam: f64,
    l: f64,
    r: f64,
    h: f64,
) -> [(f64, f64); 3] {
    let n = arc.len();
    let last = *piece.last().unwrap_or(&0);
    let mut out = [(0.0, lam * s_iota), (0.0, 10.0 * l * (r + h)), (0.0, 11.0 * l * l * r + 10.0 * l * h)];
    let mut diam = vec![0.0f64; n];
    for len in 1..n {
        for s in 0..n - len {
            let d = space.dist(arc[s], arc[s + len]);
            let v = diam[s].max(diam[s + 1]).max(d);
            diam[s] = v;
            if !(num::ge(d, h) && d < s_iota) {
                continue;
            }
            let (a, b) = (piece[s], piece[s + len]);
            let side = |p: i32| p == -1 || p == last;
            let c = if side(a) && side(b) && a == b {
                0
            } else if !side(a) && !side(b) {
                1
            } else {
                2
            };
            out[c].0 = f64::max(out[c].0, v);
        }
    }
    out
}

// -------------------------------------------------------------- multi-scale

/// Whole-arc straightening or the three-piece joining with cut positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StraightenMode {
    WholeArc,
    ThreePiece { a1: usize, a2: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Straightened {
    pub arc: DiscreteArc,
    pub report: ConstructionReport,
    pub passes: Vec<JoinTrace>,
    /// Sum of the per-pass displacements, an a priori follows bound.
    pub iota_sum: f64,
    /// Whether the initial and final components of `A ∖ N(A₂, 2·eps)` were
    /// kept point-wise (always true in whole-arc mode).
    pub kept_components: bool,
}

/// Joins at `ι_k = eps·2^(-k)`, `k = 1, 2, …`, while `ι_k ≥ 4·mesh_h`, each
/// pass working on the previous output with the untouched side pieces as
/// `A₁`, `A₃`. Stops early once a pass returns its input. The output is
/// certified to follow the input; `λ'` is measured at locality `eps/2`.
pub fn straighten(
    space: &MetricSpace,
    arc: &DiscreteArc,
    eps: f64,
    mode: StraightenMode,
    cfg: &JoinConfig,
) -> Result<Straightened, StraightenError> {
    let h = space.mesh_h();
    if !num::ge(eps, 8.0 * h) {
        return Err(StraightenError::EpsTooSmall { eps, floor: 8.0 * h });
    }
    let first = match mode {
        StraightenMode::WholeArc => ThreePieceArc::whole(arc.clone(), eps),
        StraightenMode::ThreePiece { a1, a2 } => ThreePieceArc::new(space, arc.clone(), a1, a2, eps)?,
    };
    let (pre, suf) = outer_components(space, &first, 2.0 * eps);
    let mut cur = first;
    let mut passes = Vec::new();
    let mut iota_sum = 0.0;
    let mut k = 1;
    loop {
        let iota = eps * num::powi(2.0, -k);
        if !num::ge(iota, 4.0 * h) {
            break;
        }
        let joined = single_scale_join(space, &cur, iota, cfg)?;
        iota_sum += joined.trace.iota_eff;
        let same = joined.arc == cur.arc;
        let next = ThreePieceArc {
            a1: if cur.whole { 0 } else { joined.trace.q0 },
            a2: if cur.whole { joined.arc.len() - 1 } else { joined.trace.q_end },
            arc: joined.arc,
            eps,
            whole: cur.whole,
        };
        passes.push(joined.trace);
        cur = next;
        if same {
            break;
        }
        k += 1;
    }
    let out = cur.arc;
    let follows = check_follows(space, &out, arc, iota_sum.max(0.0));
    if !follows.holds {
        return Err(StraightenError::FollowsFailed { iota: iota_sum, found: follows.max_displacement });
    }
    let op = out.points();
    let ap = arc.points();
    let kept =
        op.len() >= pre + suf && op[..pre] == ap[..pre] && op[op.len() - suf..] == ap[ap.len() - suf..];
    let mut report = measure_lambda(space, &out, Locality::Local(eps / 2.0));
    report.follows_iota = Some(follows.max_displacement);
    report.notes.push(format!("{} joining passes, displacement sum {iota_sum}", passes.len()));
    if passes.is_empty() {
        report.notes.push(String::from("eps/2 is below 4·mesh_h; no pass ran"));
    }
    Ok(Straightened { arc: out, report, passes, iota_sum, kept_components: kept })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{grid_index, grid_square};

    fn grid_path(k: usize, cells: &[(usize, usize)]) -> Vec<PointId> {
        cells.iter().map(|&(i, j)| grid_index(k, i, j)).collect()
    }

    #[test]
    fn net_of_huge_radius_is_the_anchor() {
        let s = grid_square(4).unwrap();
        let net = maximal_separated_net(&s, 10.0, &[PointId(0)], None).unwrap();
        assert_eq!(net, vec![PointId(0)]);
    }

    #[test]
    fn net_covers_and_separates() {
        let k = 8;
        let s = grid_square(k).unwrap();
        let a = [grid_index(k, 0, 0), grid_index(k, k, k)];
        let net = maximal_separated_net(&s, 0.3, &a, None).unwrap();
        assert!(net.starts_with(&a));
        for (i, &x) in net.iter().enumerate() {
            for &y in &net[i + 1..] {
                assert!(s.dist(x, y) >= 0.3 * (1.0 - 1e-9));
            }
        }
        let worst = s.points().map(|p| s.dist_to_set(p, &net)).fold(0.0, f64::max);
        assert!(worst < 0.3);
        let fine = maximal_separated_net(&s, s.mesh_h(), &a, None).unwrap();
        assert!(fine.len() > net.len());
    }

    #[test]
    fn anchors_too_close_is_an_error() {
        let s = grid_square(4).unwrap();
        let e = maximal_separated_net(&s, 0.5, &[PointId(0), PointId(1)], None);
        assert!(matches!(e, Err(StraightenError::AnchorsTooClose { .. })));
    }

    #[test]
    fn single_point_family_is_trivial() {
        let s = grid_square(4).unwrap();
        let all = PointSet::full(s.len());
        let fam = build_v_family(&s, &[PointId(6)], 0.5, 1.0, &[], &all).unwrap();
        assert_eq!(fam.v, vec![vec![PointId(6)]]);
        fam.check(&s, &[]).unwrap();
    }

    #[test]
    fn grid_family_satisfies_properties() {
        let k = 16;
        let s = grid_square(k).unwrap();
        let all = PointSet::full(s.len());
        let r = 0.25;
        let net = maximal_separated_net(&s, r, &[], None).unwrap();
        let fam = build_v_family(&s, &net, r, 1.2, &[], &all).unwrap();
        assert!(fam.delta > 0.0);
        fam.check(&s, &[]).unwrap();
    }

    #[test]
    fn side_arcs_are_covered() {
        let k = 16;
        let s = grid_square(k).unwrap();
        let all = PointSet::full(s.len());
        let r = 2.0 * s.mesh_h();
        let a1: Vec<PointId> = (0..=6).map(|i| grid_index(k, i, 2)).collect();
        let a3: Vec<PointId> = (10..=16).map(|i| grid_index(k, i, 2)).collect();
        let mut pts = a1.clone();
        pts.extend(&a3);
        let dom = closed_neighborhood(&s, &pts, 2.0 * r);
        let net = maximal_separated_net(&s, r, &[a1[0], a3[6]], Some(&dom)).unwrap();
        let fam = build_v_family(&s, &net, r, 1.2, &[&a1, &a3], &all).unwrap();
        fam.check(&s, &[&a1, &a3]).unwrap();
    }

    /// `A₁` up column `k/8` to mid height, a zigzag `A₂` over the top, `A₃`
    /// down column `7k/8`.
    pub(crate) fn u_three_piece(k: usize) -> (MetricSpace, DiscreteArc, usize, usize) {
        let s = grid_square(k).unwrap();
        let (c1, c3, mid, top) = (k / 8, 7 * k / 8, k / 2, 3 * k / 4);
        let mut cells: Vec<(usize, usize)> = (0..=mid).map(|j| (c1, j)).collect();
        let a1 = cells.len() - 1;
        cells.extend((mid + 1..=top).map(|j| (c1, j)));
        cells.extend((c1 + 1..=c3).map(|i| (i, if i % 2 == 0 { top } else { top + 1 })));
        let last_row = cells.last().unwrap().1;
        cells.extend((mid..last_row).rev().map(|j| (c3, j)));
        let a2 = cells.len() - 1;
        cells.extend((0..mid).rev().map(|j| (c3, j)));
        let arc = DiscreteArc::new(&s, grid_path(k, &cells)).unwrap();
        (s, arc, a1, a2)
    }

    #[test]
    fn join_satisfies_star_and_follows() {
        let (s, arc, a1, a2) = u_three_piece(64);
        let t = ThreePieceArc::new(&s, arc.clone(), a1, a2, 0.3).unwrap();
        let j = single_scale_join(&s, &t, 0.2, &JoinConfig::new(1.2)).unwrap();
        assert!(j.trace.star.holds(), "{:?}", j.trace.star);
        let fl = check_follows(&s, &j.arc, &arc, j.trace.iota_eff);
        assert!(fl.holds);
        assert_eq!(j.arc.first(), arc.first());
        assert_eq!(j.arc.last(), arc.last());
        assert!(j.trace.kept_components);
    }

    #[test]
    fn single_point_middle_returns_input() {
        let s = grid_square(8).unwrap();
        let arc = DiscreteArc::new(&s, (0..=8).map(|i| grid_index(8, i, 0)).collect()).unwrap();
        let t = ThreePieceArc { arc: arc.clone(), a1: 4, a2: 4, eps: 0.2, whole: false };
        let j = single_scale_join(&s, &t, 0.1, &JoinConfig::new(1.0)).unwrap();
        assert_eq!(j.arc, arc);
        assert!(j.trace.star.holds());
    }

    #[test]
    fn geodesic_segment_is_fixed() {
        let k = 64;
        let s = grid_square(k).unwrap();
        let arc = DiscreteArc::new(&s, (0..=k).map(|i| grid_index(k, i, 5)).collect()).unwrap();
        let out = straighten(&s, &arc, 0.3, StraightenMode::WholeArc, &JoinConfig::new(1.0)).unwrap();
        assert_eq!(out.arc, arc);
        assert_eq!(out.report.lambda_measured, 1.0);
        assert!(check_follows(&s, &out.arc, &arc, out.report.follows_iota.unwrap()).holds);
    }

    #[test]
    fn three_piece_straighten_keeps_far_components() {
        let (s, arc, a1, a2) = u_three_piece(64);
        let out = straighten(&s, &arc, 0.3, StraightenMode::ThreePiece { a1, a2 }, &JoinConfig::new(1.2)).unwrap();
        assert!(out.kept_components);
        assert!(!out.passes.is_empty());
    }
}
