//! Splitting a quasi-arc into two relatively separated quasi-arcs, and the
//! iterated split giving many quasi-arcs between two points.
//!
//! Lengths are measured in units of `u = d(a, b)`; the space is never
//! rescaled. The scaffold's balls and tubes are floored at `4·mesh_h` and
//! `2·mesh_h`, and marker depth stops at the last odd level whose scale is
//! still at least `4·mesh_h`, so the outermost pieces are joined straight
//! to the endpoints.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::arc::{
    arc_separation, concatenate_to_circle, measure_circle_lambda, measure_lambda, relative_separation_above, check_follows,
    ArcError, ConstructionReport, DiscreteArc, Locality, SeparationMode,
};
use crate::circle::{separated_arcs, CircleError, SeparationSearch};
use crate::flow::disjoint_paths;
use crate::graph::{closed_neighborhood, PointSet};
use crate::num;
use crate::space::{Ball, MetricSpace, PointId};
use crate::straighten::{straighten, JoinConfig, StraightenMode};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SplitError {
    #[error("endpoints are {dist} apart, need at least {need}")]
    EndpointsTooClose { dist: f64, need: f64 },
    #[error("eps {0} must be positive")]
    BadEps(f64),
    #[error("lambda0 {0} must be at least 1")]
    BadLambda(f64),
    #[error("first marker scale {scale} is below 4·mesh_h = {floor}")]
    TooCoarse { scale: f64, floor: f64 },
    #[error("markers are out of order along the arc")]
    MarkersOutOfOrder,
    #[error("scaffold property ({property}) fails for {first} and {second} at point {point}")]
    Scaffold { property: u8, first: i32, second: i32, point: PointId },
    #[error("piece {piece} has {len} points, need 8")]
    Unresolvable { piece: i32, len: usize },
    #[error("piece {piece}, {stage}: {source}")]
    Piece {
        piece: i32,
        stage: &'static str,
        #[source]
        source: CircleError,
    },
    #[error("piece {piece}: endpoint {end} has only {found} disjoint connections; cut {cut:?}")]
    Cap { piece: i32, end: PointId, found: usize, cut: Vec<PointId> },
    #[error("piece {piece}: split arcs do not follow it within {iota} (best {found})")]
    FollowsFailed { piece: i32, iota: f64, found: f64 },
    #[error(transparent)]
    Arc(#[from] ArcError),
    #[error("bogensatz stopped after depth {achieved} of {wanted}: {source}")]
    Exhausted {
        achieved: u32,
        wanted: u32,
        #[source]
        source: Box<SplitError>,
    },
}

/// Parameters of a split beyond the arc and `eps`.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitConfig {
    /// Annular linear connectivity constant of the space.
    pub l: f64,
    pub search: SeparationSearch,
    /// Points the new arcs must avoid (the endpoints are always allowed).
    pub blocked: Option<PointSet>,
}

impl SplitConfig {
    pub fn new(l: f64) -> Self {
        SplitConfig { l, search: SeparationSearch::default(), blocked: None }
    }
}

/// Markers, balls and tubes along the arc to be split.
///
/// Piece `k` of `0..=2m` is `A[cuts[k], cuts[k+1]]` and carries the label
/// `k - m`; the marker at `cuts[j]`, `1 ≤ j ≤ 2m`, is `x_{j-m-1}` before the
/// middle and `x_{j-m}` after it.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitScaffold {
    pub arc: DiscreteArc,
    pub lambda0: f64,
    pub eps: f64,
    pub l: f64,
    /// `d(a, b)`.
    pub unit: f64,
    pub delta: f64,
    pub d1: f64,
    pub d2: f64,
    pub depth: usize,
    pub cuts: Vec<usize>,
    pub ball_radius: Vec<f64>,
    pub tube_radius: Vec<f64>,
    pub floored: bool,
    balls: Vec<PointSet>,
    tubes: Vec<PointSet>,
}

impl SplitScaffold {
    pub fn pieces(&self) -> usize {
        2 * self.depth + 1
    }

    pub fn piece_label(&self, k: usize) -> i32 {
        k as i32 - self.depth as i32
    }

    pub fn marker_label(&self, j: usize) -> i32 {
        if j <= self.depth {
            j as i32 - self.depth as i32 - 1
        } else {
            j as i32 - self.depth as i32
        }
    }

    pub fn piece(&self, k: usize) -> &[PointId] {
        &self.arc.points()[self.cuts[k]..=self.cuts[k + 1]]
    }

    /// Pieces split into two arcs; the others are joined.
    pub fn is_split(&self, k: usize) -> bool {
        self.piece_label(k) % 2 == 0
    }

    pub fn marker(&self, j: usize) -> PointId {
        self.arc.points()[self.cuts[j]]
    }

    pub fn ball(&self, j: usize) -> Ball {
        Ball::new(self.marker(j), self.ball_radius[j - 1])
    }

    /// Points of the ball at marker `j`.
    pub fn ball_set(&self, j: usize) -> &PointSet {
        &self.balls[j - 1]
    }

    /// Points of the tube around piece `k`.
    pub fn tube(&self, k: usize) -> &PointSet {
        &self.tubes[k]
    }
}

fn first_common(a: &PointSet, b: &PointSet) -> Option<PointId> {
    a.iter().find(|&p| b.contains(p))
}

/// Places markers at `δ^i·u` from the ends, builds the balls and tubes and
/// checks their separation properties on every point.
pub fn build_scaffold(
    space: &MetricSpace,
    arc: &DiscreteArc,
    lambda0: f64,
    eps: f64,
    l: f64,
) -> Result<SplitScaffold, SplitError> {
    let h = space.mesh_h();
    if !(eps > 0.0) {
        return Err(SplitError::BadEps(eps));
    }
    if !num::ge(lambda0, 1.0) {
        return Err(SplitError::BadLambda(lambda0));
    }
    let eps = eps.min(0.99);
    let l = l.max(1.0);
    let pts = arc.points();
    let (a, b) = (arc.first(), arc.last());
    let unit = space.dist(a, b);
    if !num::ge(unit, 16.0 * h) {
        return Err(SplitError::EndpointsTooClose { dist: unit, need: 16.0 * h });
    }
    let delta = 1.0 / (10.0 * lambda0);
    let d1 = eps * delta / (3.0 * lambda0);
    let d2 = d1 * delta / (10.0 * lambda0 * l);
    let level = |i: usize| num::powi(delta, i as i32) * unit;
    if !num::ge(level(1), 4.0 * h) {
        return Err(SplitError::TooCoarse { scale: level(1), floor: 4.0 * h });
    }
    let mut depth = 1;
    while num::ge(level(depth + 1), 4.0 * h) {
        depth += 1;
    }
    if depth % 2 == 0 {
        depth -= 1;
    }

    let mut cuts = vec![0usize];
    for i in (1..=depth).rev() {
        let p = pts.iter().position(|&z| num::ge(space.dist(z, a), level(i))).ok_or(SplitError::MarkersOutOfOrder)?;
        cuts.push(p);
    }
    for i in 1..=depth {
        let p = pts.iter().rposition(|&z| num::ge(space.dist(z, b), level(i))).ok_or(SplitError::MarkersOutOfOrder)?;
        cuts.push(p);
    }
    cuts.push(pts.len() - 1);
    if cuts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SplitError::MarkersOutOfOrder);
    }

    let mut floored = false;
    let mut floor_at = |v: f64, f: f64| {
        if v < f {
            floored = true;
            f
        } else {
            v
        }
    };
    let mut ball_radius = Vec::with_capacity(2 * depth);
    for j in 1..=2 * depth {
        let i = if j <= depth { depth + 1 - j } else { j - depth };
        ball_radius.push(floor_at(d1 * level(i), 4.0 * h));
    }
    let mut tube_radius = Vec::with_capacity(2 * depth + 1);
    for k in 0..=2 * depth {
        let i = (k as i32 - depth as i32).unsigned_abs() as usize;
        tube_radius.push(floor_at(d2 * level(i), 2.0 * h));
    }
    let balls: Vec<PointSet> = (1..=2 * depth)
        .map(|j| {
            let ball = Ball::new(pts[cuts[j]], ball_radius[j - 1]);
            PointSet::filter(space, |p| ball.contains(space, p))
        })
        .collect();
    let tubes: Vec<PointSet> =
        (0..=2 * depth).map(|k| closed_neighborhood(space, &pts[cuts[k]..=cuts[k + 1]], tube_radius[k])).collect();
    let sc = SplitScaffold {
        arc: arc.clone(),
        lambda0,
        eps,
        l,
        unit,
        delta,
        d1,
        d2,
        depth,
        cuts,
        ball_radius,
        tube_radius,
        floored,
        balls,
        tubes,
    };
    check_scaffold(&sc)?;
    Ok(sc)
}

/// (1) balls pairwise disjoint; (2) a ball misses every tube it does not
/// bound and tubes of non-adjacent pieces are disjoint; (3) adjacent tubes
/// meet only inside their common ball.
fn check_scaffold(sc: &SplitScaffold) -> Result<(), SplitError> {
    let nb = 2 * sc.depth;
    for j1 in 1..=nb {
        for j2 in j1 + 1..=nb {
            if let Some(p) = first_common(sc.ball_set(j1), sc.ball_set(j2)) {
                return Err(SplitError::Scaffold { property: 1, first: sc.marker_label(j1), second: sc.marker_label(j2), point: p });
            }
        }
    }
    for k in 0..sc.pieces() {
        for j in 1..=nb {
            if j == k || j == k + 1 {
                continue;
            }
            if let Some(p) = first_common(sc.tube(k), sc.ball_set(j)) {
                return Err(SplitError::Scaffold { property: 2, first: sc.piece_label(k), second: sc.marker_label(j), point: p });
            }
        }
        for k2 in k + 2..sc.pieces() {
            if let Some(p) = first_common(sc.tube(k), sc.tube(k2)) {
                return Err(SplitError::Scaffold { property: 2, first: sc.piece_label(k), second: sc.piece_label(k2), point: p });
            }
        }
        if k + 1 < sc.pieces() {
            let ball = sc.ball_set(k + 1);
            if let Some(p) = sc.tube(k).iter().find(|&p| sc.tube(k + 1).contains(p) && !ball.contains(p)) {
                return Err(SplitError::Scaffold { property: 3, first: sc.piece_label(k), second: sc.piece_label(k + 1), point: p });
            }
        }
    }
    Ok(())
}

/// What happened on one piece.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PieceKind {
    Split,
    Join,
    /// Outermost piece, joined to an endpoint.
    End,
}

/// Per-piece record of a split.
#[derive(Clone, Debug, PartialEq)]
pub struct PieceRecord {
    pub i: i32,
    pub kind: PieceKind,
    pub sigma_split: Option<f64>,
    pub sigma_join: Option<f64>,
    /// Largest quasi-arc constant of the two output pieces.
    pub lambda_local: f64,
    /// The separation search fell back to plain disjoint paths.
    pub fallback: bool,
    /// Optimal monotone displacement of the split arcs from the piece.
    pub follows: Option<f64>,
    pub straightened: bool,
}

/// Largest `diam(J[x,y]) / d(x,y)` per case of the piece labels of `x` and
/// `y`, with the bound each case is held to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CaseBounds {
    /// Same or adjacent pieces.
    pub near: f64,
    /// Pieces on opposite sides of the middle, at least two apart; bound `4λ₀`.
    pub across: f64,
    /// Pieces on one side at least two apart; bound `4λ₀/D₂`.
    pub skip: f64,
    pub across_bound: f64,
    pub skip_bound: f64,
}

impl CaseBounds {
    pub fn holds(&self) -> bool {
        num::le(self.across, self.across_bound) && num::le(self.skip, self.skip_bound)
    }
}

/// Everything measured on a split.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitReport {
    pub delta: f64,
    pub d1: f64,
    pub d2: f64,
    pub depth: usize,
    pub records: Vec<PieceRecord>,
    pub lambda: f64,
    pub reports: [ConstructionReport; 2],
    /// Largest `d(z, A) / d(z, {a, b})` over output points at least
    /// `4·mesh_h` from both ends.
    pub eps_measured: f64,
    pub eps_all: f64,
    /// Smallest `max(d(z, J), d(z, J')) / d(z, {a, b})` over output points at
    /// least `4·mesh_h` from both ends.
    pub eta_measured: f64,
    pub eta_all: f64,
    pub circle_lambda: f64,
    /// `6λ / η` with the unrestricted `η`.
    pub circle_bound: f64,
    pub cases: [CaseBounds; 2],
    pub notes: Vec<String>,
}

/// The two arcs of a split and what was measured on them.
#[derive(Clone, Debug, PartialEq)]
pub struct Split {
    pub j: DiscreteArc,
    pub j2: DiscreteArc,
    pub scaffold: SplitScaffold,
    pub report: SplitReport,
}

struct Ctx<'a> {
    space: &'a MetricSpace,
    sc: &'a SplitScaffold,
    cfg: &'a SplitConfig,
    /// Points any new arc may use: the cone around `A`, minus blocked points.
    base: PointSet,
}

impl Ctx<'_> {
    fn seed(&self, k: usize) -> SeparationSearch {
        let mut s = self.cfg.search;
        s.seed ^= (k as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03);
        s
    }
}

/// Points that may carry output arcs: within `max(eps·d(z, {a, b}), mesh_h)`
/// of `A` once at least `4·mesh_h` from both ends, inside the scaffold, and
/// not blocked.
fn cone(space: &MetricSpace, sc: &SplitScaffold, blocked: Option<&PointSet>) -> PointSet {
    let h = space.mesh_h();
    let pts = sc.arc.points();
    let (a, b) = (sc.arc.first(), sc.arc.last());
    let mut region = PointSet::empty(space.len());
    for t in &sc.tubes {
        region.union_with(t);
    }
    for bset in &sc.balls {
        region.union_with(bset);
    }
    let mut out = PointSet::empty(space.len());
    for z in region.iter() {
        if z == a || z == b {
            out.insert(z);
            continue;
        }
        if blocked.is_some_and(|bl| bl.contains(z)) {
            continue;
        }
        let de = space.dist(z, a).min(space.dist(z, b));
        if !num::ge(de, 4.0 * h) || num::le(space.dist_to_set(z, pts), (sc.eps * de).max(h)) {
            out.insert(z);
        }
    }
    out
}

/// Splits piece `k` into two arcs running from the ball at its start marker
/// to the ball at its end marker inside its tube, as far apart as the
/// separation search finds.
pub fn split_even_subarc(
    space: &MetricSpace,
    sc: &SplitScaffold,
    k: usize,
    cfg: &SplitConfig,
) -> Result<([DiscreteArc; 2], PieceRecord), SplitError> {
    let base = cone(space, sc, cfg.blocked.as_ref());
    let ctx = Ctx { space, sc, cfg, base };
    split_piece(&ctx, k)
}

fn split_piece(ctx: &Ctx, k: usize) -> Result<([DiscreteArc; 2], PieceRecord), SplitError> {
    let (space, sc) = (ctx.space, ctx.sc);
    let h = space.mesh_h();
    let label = sc.piece_label(k);
    let piece = sc.piece(k);
    if piece.len() < 8 || k == 0 || k + 1 == sc.pieces() {
        return Err(SplitError::Unresolvable { piece: label, len: piece.len() });
    }
    let mut region = sc.tube(k).clone();
    region.intersect_with(&ctx.base);
    let sources: Vec<PointId> = sc.ball_set(k).iter().filter(|&p| region.contains(p)).collect();
    let sinks: Vec<PointId> = sc.ball_set(k + 1).iter().filter(|&p| region.contains(p)).collect();
    let tau = sc.tube_radius[k];
    let sep = separated_arcs(space, &sources, &sinks, 2, &region, 2.0 * tau, ctx.seed(k))
        .map_err(|source| SplitError::Piece { piece: label, stage: "split", source })?;
    let within = DiscreteArc::new(space, piece.to_vec())?;
    let iota = (0.5 * sc.d2 * scale_at(sc, label)).max(4.0 * h);
    let mut worst = 0.0f64;
    for arc in &sep.arcs {
        let f = check_follows(space, arc, &within, iota);
        if !f.holds {
            return Err(SplitError::FollowsFailed { piece: label, iota, found: f.max_displacement });
        }
        worst = worst.max(f.max_displacement);
    }
    let mut arcs = [sep.arcs[0].clone(), sep.arcs[1].clone()];
    let mut straightened = false;
    let eps_s = 0.5 * sep.sigma;
    if num::ge(eps_s, 8.0 * h) {
        let mut changed = [false; 2];
        for side in 0..2 {
            let other = arcs[1 - side].points().to_vec();
            let mut allowed = region.clone();
            allowed.subtract(&closed_neighborhood(space, &other, eps_s));
            let cfg = JoinConfig { l: sc.l, allowed: Some(allowed) };
            if let Ok(out) = straighten(space, &arcs[side], eps_s, StraightenMode::WholeArc, &cfg) {
                changed[side] = out.arc != arcs[side];
                arcs[side] = out.arc;
            }
        }
        straightened = changed[0] || changed[1];
    }
    let lambda_local = arcs.iter().map(|a| measure_lambda(space, a, Locality::Global).lambda_measured).fold(1.0, f64::max);
    let rec = PieceRecord {
        i: label,
        kind: PieceKind::Split,
        sigma_split: Some(space.set_distance(arcs[0].points(), arcs[1].points())),
        sigma_join: None,
        lambda_local,
        fallback: sep.fallback,
        follows: Some(worst),
        straightened,
    };
    Ok((arcs, rec))
}

/// `δ^{|i|}·u`.
fn scale_at(sc: &SplitScaffold, label: i32) -> f64 {
    num::powi(sc.delta, label.abs()) * sc.unit
}

/// Joins the ends of two arc pairs across piece `k` by two disjoint arcs
/// inside the balls at its markers and its tube, avoiding `used` except at
/// the four ports. Each returned arc starts at one of `left` and ends at
/// one of `right`; the pairing is whichever the search finds.
pub fn unzip_join(
    space: &MetricSpace,
    sc: &SplitScaffold,
    k: usize,
    left: [PointId; 2],
    right: [PointId; 2],
    used: &PointSet,
    cfg: &SplitConfig,
) -> Result<([DiscreteArc; 2], PieceRecord), SplitError> {
    let base = cone(space, sc, cfg.blocked.as_ref());
    let ctx = Ctx { space, sc, cfg, base };
    join_piece(&ctx, k, left, right, used)
}

fn join_region(ctx: &Ctx, k: usize, used: &PointSet, ports: &[PointId]) -> PointSet {
    let sc = ctx.sc;
    let mut region = sc.tube(k).clone();
    if k >= 1 {
        region.union_with(sc.ball_set(k));
    }
    if k < 2 * sc.depth {
        region.union_with(sc.ball_set(k + 1));
    }
    region.intersect_with(&ctx.base);
    region.subtract(used);
    region.extend(ports.iter().copied());
    region
}

fn join_piece(
    ctx: &Ctx,
    k: usize,
    left: [PointId; 2],
    right: [PointId; 2],
    used: &PointSet,
) -> Result<([DiscreteArc; 2], PieceRecord), SplitError> {
    let (space, sc) = (ctx.space, ctx.sc);
    let label = sc.piece_label(k);
    let ports = [left[0], left[1], right[0], right[1]];
    let region = join_region(ctx, k, used, &ports);
    let sep = separated_arcs(space, &left, &right, 2, &region, 2.0 * sc.tube_radius[k], ctx.seed(k))
        .map_err(|source| SplitError::Piece { piece: label, stage: "join", source })?;
    let arcs = [sep.arcs[0].clone(), sep.arcs[1].clone()];
    let lambda_local = arcs.iter().map(|a| measure_lambda(space, a, Locality::Global).lambda_measured).fold(1.0, f64::max);
    let rec = PieceRecord {
        i: label,
        kind: PieceKind::Join,
        sigma_split: None,
        sigma_join: Some(sep.sigma),
        lambda_local,
        fallback: sep.fallback,
        follows: None,
        straightened: false,
    };
    Ok((arcs, rec))
}

/// Two internally disjoint arcs from the endpoint to the two ports across
/// an outermost piece, oriented from the endpoint.
fn cap_piece(
    ctx: &Ctx,
    k: usize,
    end: PointId,
    ports: [PointId; 2],
    used: &PointSet,
) -> Result<([Vec<PointId>; 2], PieceRecord), SplitError> {
    let (space, sc) = (ctx.space, ctx.sc);
    let label = sc.piece_label(k);
    let mut region = join_region(ctx, k, used, &ports);
    region.insert(end);
    let out = disjoint_paths(space, &region, &[end], &ports, 2);
    if out.paths.len() < 2 {
        return Err(SplitError::Cap { piece: label, end, found: out.paths.len(), cut: out.cut.unwrap_or_default() });
    }
    let [p0, p1]: [Vec<PointId>; 2] = out.paths.try_into().expect("two paths");
    let lambda_local = [&p0, &p1]
        .iter()
        .map(|p| measure_lambda(space, &DiscreteArc::from_trusted((*p).clone()), Locality::Global).lambda_measured)
        .fold(1.0, f64::max);
    let rec = PieceRecord {
        i: label,
        kind: PieceKind::End,
        sigma_split: None,
        sigma_join: Some(space.set_distance(&p0[1..], &p1[1..])),
        lambda_local,
        fallback: false,
        follows: None,
        straightened: false,
    };
    Ok(([p0, p1], rec))
}

/// Appends `path` to whichever lane ends at its first point.
fn extend_lane(lanes: &mut [Vec<PointId>; 2], labels: &mut [Vec<i32>; 2], path: &[PointId], label: i32) {
    let side = if lanes[0].last() == path.first() { 0 } else { 1 };
    debug_assert_eq!(lanes[side].last(), path.first());
    lanes[side].extend_from_slice(&path[1..]);
    labels[side].extend(core::iter::repeat_n(label, path.len() - 1));
}

/// Splits `arc` into two arcs with its endpoints that stay in the cone
/// `d(z, A) ≤ eps·d(z, {a, b})` and are relatively separated.
///
/// Pieces with even label are split by the separation search, odd pieces
/// are joined across, and the outermost pieces are joined to the endpoints
/// by internally disjoint paths. Splits and junctions are straightened when
/// their scale reaches `8·mesh_h`.
pub fn split_quasi_arc(
    space: &MetricSpace,
    arc: &DiscreteArc,
    lambda0: f64,
    eps: f64,
    cfg: &SplitConfig,
) -> Result<Split, SplitError> {
    let h = space.mesh_h();
    let sc = build_scaffold(space, arc, lambda0, eps, cfg.l)?;
    let base = cone(space, &sc, cfg.blocked.as_ref());
    let ctx = Ctx { space, sc: &sc, cfg, base };
    let (a, b) = (arc.first(), arc.last());
    let last = sc.pieces() - 1;
    let mut notes: Vec<String> = Vec::new();
    if sc.floored {
        notes.push(format!("ball radii floored at 4·mesh_h and tube radii at 2·mesh_h (mesh_h = {h})"));
    }
    notes.push(String::from("eq. (1) and eq. (2) are asserted for points at least 4·mesh_h from both ends"));

    let mut records: Vec<Option<PieceRecord>> = vec![None; sc.pieces()];
    let mut splits: Vec<Option<[DiscreteArc; 2]>> = vec![None; sc.pieces()];
    let mut used = PointSet::empty(space.len());
    for k in (0..sc.pieces()).filter(|&k| sc.is_split(k)) {
        let (arcs, rec) = split_piece(&ctx, k)?;
        for a in &arcs {
            used.extend(a.points().iter().copied());
        }
        splits[k] = Some(arcs);
        records[k] = Some(rec);
    }

    let first_split = splits[1].as_ref().expect("piece 1 is split");
    let ports = [first_split[0].first(), first_split[1].first()];
    let (cap, rec) = cap_piece(&ctx, 0, a, ports, &used)?;
    records[0] = Some(rec);
    for p in &cap {
        used.extend(p.iter().copied());
    }
    let mut lanes = cap.clone();
    let mut labels: [Vec<i32>; 2] = [vec![sc.piece_label(0); cap[0].len()], vec![sc.piece_label(0); cap[1].len()]];
    for k in 1..last {
        if let Some(arcs) = &splits[k] {
            for arc in arcs {
                extend_lane(&mut lanes, &mut labels, arc.points(), sc.piece_label(k));
            }
        } else {
            let right = splits[k + 1].as_ref().expect("pieces alternate");
            let left = [*lanes[0].last().expect("non-empty"), *lanes[1].last().expect("non-empty")];
            let (arcs, rec) = join_piece(&ctx, k, left, [right[0].first(), right[1].first()], &used)?;
            for arc in &arcs {
                used.extend(arc.points().iter().copied());
                extend_lane(&mut lanes, &mut labels, arc.points(), sc.piece_label(k));
            }
            records[k] = Some(rec);
        }
    }
    let ends = [*lanes[0].last().expect("non-empty"), *lanes[1].last().expect("non-empty")];
    let (cap, rec) = cap_piece(&ctx, last, b, ends, &used)?;
    records[last] = Some(rec);
    for p in &cap {
        let mut rev = p.clone();
        rev.reverse();
        extend_lane(&mut lanes, &mut labels, &rev, sc.piece_label(last));
    }
    straighten_junctions(&ctx, &mut lanes, &mut labels, &records, &mut notes);

    let [l0, l1] = lanes;
    let j = DiscreteArc::new(space, l0)?;
    let j2 = DiscreteArc::new(space, l1)?;
    let records: Vec<PieceRecord> = records.into_iter().map(|r| r.expect("every piece handled")).collect();
    let report = measure_split(space, &sc, &j, &j2, &labels, records, notes)?;
    Ok(Split { j, j2, scaffold: sc, report })
}

/// Straightens each junction `J_{k-1} ∪ join ∪ J_{k+1}` across an inner
/// odd piece with `eps = σ_join / 2` when that reaches `8·mesh_h`, keeping
/// the other lane's neighbourhood of that radius out of reach.
fn straighten_junctions(
    ctx: &Ctx,
    lanes: &mut [Vec<PointId>; 2],
    labels: &mut [Vec<i32>; 2],
    records: &[Option<PieceRecord>],
    notes: &mut Vec<String>,
) {
    let (space, sc) = (ctx.space, ctx.sc);
    let h = space.mesh_h();
    let mut skipped = 0usize;
    for rec in records.iter().flatten() {
        if rec.kind != PieceKind::Join {
            continue;
        }
        let eps_j = 0.5 * rec.sigma_join.unwrap_or(0.0);
        if !num::ge(eps_j, 8.0 * h) {
            skipped += 1;
            continue;
        }
        for side in 0..2 {
            let lab = &labels[side];
            let (Some(lo), Some(hi)) = (
                lab.iter().position(|&x| x == rec.i - 1),
                lab.iter().rposition(|&x| x == rec.i + 1),
            ) else {
                continue;
            };
            let a1 = lab.iter().position(|&x| x == rec.i).map_or(lo, |p| p - 1) - lo;
            let a2 = lab.iter().rposition(|&x| x == rec.i).map_or(hi, |p| p + 1) - lo;
            let local = lanes[side][lo..=hi].to_vec();
            let Ok(arc) = DiscreteArc::new(space, local) else { continue };
            let other = lanes[1 - side].clone();
            let mut allowed = join_region(ctx, (rec.i + sc.depth as i32) as usize, &PointSet::empty(space.len()), &[]);
            allowed.extend(arc.points().iter().copied());
            allowed.subtract(&closed_neighborhood(space, &other, eps_j));
            let cfg = JoinConfig { l: sc.l, allowed: Some(allowed) };
            match straighten(space, &arc, eps_j, StraightenMode::ThreePiece { a1, a2 }, &cfg) {
                Ok(out) => {
                    let new = out.arc.into_points();
                    let mut lane = lanes[side][..lo].to_vec();
                    let mut lab2 = labels[side][..lo].to_vec();
                    lab2.extend(core::iter::repeat_n(rec.i, new.len()));
                    lane.extend(new);
                    lane.extend_from_slice(&lanes[side][hi + 1..]);
                    lab2.extend_from_slice(&labels[side][hi + 1..]);
                    lanes[side] = lane;
                    labels[side] = lab2;
                }
                Err(e) => notes.push(format!("junction {} on lane {side} kept unstraightened: {e}", rec.i)),
            }
        }
    }
    if skipped > 0 {
        notes.push(format!("{skipped} junction(s) below 8·mesh_h left unstraightened"));
    }
}

fn measure_split(
    space: &MetricSpace,
    sc: &SplitScaffold,
    j: &DiscreteArc,
    j2: &DiscreteArc,
    labels: &[Vec<i32>; 2],
    records: Vec<PieceRecord>,
    notes: Vec<String>,
) -> Result<SplitReport, SplitError> {
    let h = space.mesh_h();
    let (a, b) = (sc.arc.first(), sc.arc.last());
    let apts = sc.arc.points();
    let mut eps_measured = 0.0f64;
    let mut eps_all = 0.0f64;
    for arc in [j, j2] {
        for &z in arc.points() {
            if z == a || z == b {
                continue;
            }
            let de = space.dist(z, a).min(space.dist(z, b));
            let ratio = space.dist_to_set(z, apts) / de;
            eps_all = eps_all.max(ratio);
            if num::ge(de, 4.0 * h) {
                eps_measured = eps_measured.max(ratio);
            }
        }
    }
    let eta_measured = relative_separation_above(space, j, j2, a, b, 4.0 * h);
    let eta_all = arc_separation(space, j, j2, SeparationMode::RelativeTo(a, b))?;
    let mut rj = measure_lambda(space, j, Locality::Global);
    let mut rj2 = measure_lambda(space, j2, Locality::Global);
    rj.separation_eta = Some(eta_measured);
    rj2.separation_eta = Some(eta_measured);
    let lambda = rj.lambda_measured.max(rj2.lambda_measured);
    let circle = concatenate_to_circle(space, j, j2)?;
    let circle_lambda = measure_circle_lambda(space, &circle).lambda_measured;
    let cases = [case_bounds(space, sc, j.points(), &labels[0]), case_bounds(space, sc, j2.points(), &labels[1])];
    Ok(SplitReport {
        delta: sc.delta,
        d1: sc.d1,
        d2: sc.d2,
        depth: sc.depth,
        records,
        lambda,
        reports: [rj, rj2],
        eps_measured,
        eps_all,
        eta_measured,
        eta_all,
        circle_lambda,
        circle_bound: 6.0 * lambda / eta_all,
        cases,
        notes,
    })
}

/// Interval sweep over all pairs of `arc`, classified by the piece labels
/// of the two points.
fn case_bounds(space: &MetricSpace, sc: &SplitScaffold, arc: &[PointId], labels: &[i32]) -> CaseBounds {
    let h = space.mesh_h();
    let n = arc.len();
    let mut diam = vec![0.0f64; n];
    let mut out = CaseBounds {
        near: 1.0,
        across: 1.0,
        skip: 1.0,
        across_bound: 4.0 * sc.lambda0,
        skip_bound: 4.0 * sc.lambda0 / sc.d2,
    };
    for len in 1..n {
        for s in 0..n - len {
            let t = s + len;
            let d = space.dist(arc[s], arc[t]);
            let v = diam[s].max(diam[s + 1]).max(d);
            diam[s] = v;
            if !num::ge(d, h) {
                continue;
            }
            let (i, jl) = (labels[s], labels[t]);
            let ratio = v / d;
            let slot = if (jl - i).abs() <= 1 {
                &mut out.near
            } else if i < 0 && jl > 0 {
                &mut out.across
            } else {
                &mut out.skip
            };
            *slot = slot.max(ratio);
        }
    }
    out
}

/// Report of a bogensatz run.
#[derive(Clone, Debug, PartialEq)]
pub struct BogensatzReport {
    pub levels: u32,
    /// `η_m` after each level (`η_0 = 1`).
    pub eta_levels: Vec<f64>,
    pub lambdas: Vec<f64>,
    /// `(i, j, η restricted to 4·mesh_h, η over all points)`.
    pub pair_eta: Vec<(usize, usize, f64, f64)>,
    /// `(i, j, measured circle constant, 6·max λ / min η)`.
    pub circles: Vec<(usize, usize, f64, f64)>,
    pub notes: Vec<String>,
}

/// `n` arcs from `x` to `y`, any two forming a circle: one straightened
/// arc, then `⌈log₂ n⌉` rounds of splitting every arc with `eps = η/4`, each
/// new arc avoiding all the others.
pub fn bogensatz(
    space: &MetricSpace,
    x: PointId,
    y: PointId,
    n: usize,
    cfg: &SplitConfig,
) -> Result<(Vec<DiscreteArc>, BogensatzReport), SplitError> {
    let h = space.mesh_h();
    let dxy = space.dist(x, y);
    if !num::ge(dxy, 16.0 * h) {
        return Err(SplitError::EndpointsTooClose { dist: dxy, need: 16.0 * h });
    }
    let n = n.max(1);
    let levels = usize::BITS - (n - 1).leading_zeros();
    let mut notes = Vec::new();
    let path = crate::graph::bfs_path(space, |_| true, &[x], |z| z == y).ok_or(SplitError::Cap {
        piece: 0,
        end: x,
        found: 0,
        cut: Vec::new(),
    })?;
    let mut first = DiscreteArc::new(space, path)?;
    let eps0 = dxy / 4.0;
    if num::ge(eps0, 8.0 * h) {
        match straighten(space, &first, eps0, StraightenMode::WholeArc, &JoinConfig::new(cfg.l)) {
            Ok(out) => first = out.arc,
            Err(e) => notes.push(format!("initial arc kept unstraightened: {e}")),
        }
    }
    let mut arcs = vec![first];
    let mut eta_levels = vec![1.0];
    for level in 1..=levels {
        let eps = 0.25 * eta_levels[level as usize - 1];
        let mut next: Vec<DiscreteArc> = Vec::with_capacity(2 * arcs.len());
        for idx in 0..arcs.len() {
            let mut blocked = PointSet::empty(space.len());
            for (o, other) in arcs.iter().enumerate() {
                if o != idx {
                    blocked.extend(other.points().iter().copied());
                }
            }
            for other in &next {
                blocked.extend(other.points().iter().copied());
            }
            blocked.remove(x);
            blocked.remove(y);
            let lambda0 = measure_lambda(space, &arcs[idx], Locality::Global).lambda_measured;
            let mut c = cfg.clone();
            c.blocked = Some(blocked);
            c.search.seed ^= (level as u64) << 32 | idx as u64;
            let split = split_quasi_arc(space, &arcs[idx], lambda0, eps, &c).map_err(|e| SplitError::Exhausted {
                achieved: level - 1,
                wanted: levels,
                source: Box::new(e),
            })?;
            next.push(split.j);
            next.push(split.j2);
        }
        arcs = next;
        let mut eta = f64::INFINITY;
        for i in 0..arcs.len() {
            for j in i + 1..arcs.len() {
                eta = eta.min(relative_separation_above(space, &arcs[i], &arcs[j], x, y, 4.0 * h));
            }
        }
        eta_levels.push(eta);
    }
    arcs.truncate(n);
    let lambdas: Vec<f64> = arcs.iter().map(|a| measure_lambda(space, a, Locality::Global).lambda_measured).collect();
    let mut pair_eta = Vec::new();
    let mut circles = Vec::new();
    let mut min_eta_all = f64::INFINITY;
    for i in 0..arcs.len() {
        for j in i + 1..arcs.len() {
            let restricted = relative_separation_above(space, &arcs[i], &arcs[j], x, y, 4.0 * h);
            let all = arc_separation(space, &arcs[i], &arcs[j], SeparationMode::RelativeTo(x, y))?;
            min_eta_all = min_eta_all.min(all);
            pair_eta.push((i, j, restricted, all));
        }
    }
    let max_lambda = lambdas.iter().copied().fold(1.0, f64::max);
    for i in 0..arcs.len() {
        for j in i + 1..arcs.len() {
            let c = concatenate_to_circle(space, &arcs[i], &arcs[j])?;
            let cl = measure_circle_lambda(space, &c).lambda_measured;
            circles.push((i, j, cl, 6.0 * max_lambda / min_eta_all));
        }
    }
    Ok((arcs, BogensatzReport { levels, eta_levels, lambdas, pair_eta, circles, notes }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{grid_index, grid_square};

    fn diagonal(k: usize) -> Vec<PointId> {
        let mut pts = vec![grid_index(k, 0, 0)];
        for i in 0..k {
            pts.push(grid_index(k, i + 1, i));
            pts.push(grid_index(k, i + 1, i + 1));
        }
        pts
    }

    fn row(k: usize, j: usize) -> Vec<PointId> {
        (0..=k).map(|i| grid_index(k, i, j)).collect()
    }

    #[test]
    fn scaffold_constants_of_a_straight_segment() {
        let k = 64;
        let s = grid_square(k).unwrap();
        let arc = DiscreteArc::new(&s, row(k, 32)).unwrap();
        let sc = build_scaffold(&s, &arc, 1.0, 0.5, 1.0).unwrap();
        assert!((sc.delta - 0.1).abs() < 1e-15);
        assert!((sc.d1 - 1.0 / 60.0).abs() < 1e-15);
        assert_eq!(sc.depth, 1);
        // x_{-1} is the first point at distance 0.1 from a: column 7 (6.4 rounded up)
        assert_eq!(sc.marker(1), grid_index(k, 7, 32));
        assert_eq!(sc.marker(2), grid_index(k, 57, 32));
        assert!(sc.floored);
    }

    #[test]
    fn coarse_arc_is_rejected() {
        let s = grid_square(32).unwrap();
        let arc = DiscreteArc::new(&s, row(32, 16)).unwrap();
        assert!(matches!(build_scaffold(&s, &arc, 1.0, 0.5, 1.0), Err(SplitError::TooCoarse { .. })));
    }

    #[test]
    fn staircase_split_is_close_and_separated() {
        check_split(&diagonal(64));
    }

    #[test]
    fn diagonal_split_is_close_and_separated() {
        check_split(&(0..=64).map(|i| grid_index(64, i, i)).collect::<Vec<_>>());
    }

    fn check_split(pts: &[PointId]) {
        let s = grid_square(64).unwrap();
        let arc = DiscreteArc::new(&s, pts.to_vec()).unwrap();
        let lambda0 = measure_lambda(&s, &arc, Locality::Global).lambda_measured;
        let out = split_quasi_arc(&s, &arc, lambda0, 0.3, &SplitConfig::new(1.0)).unwrap();
        let r = &out.report;
        assert!(r.eps_measured <= 0.3 + 1e-9);
        assert!(r.eta_measured > 0.0);
        assert!(r.circle_lambda <= r.circle_bound + 1e-9);
        assert!(r.cases[0].holds() && r.cases[1].holds());
        let (a, b) = (arc.first(), arc.last());
        assert_eq!((out.j.first(), out.j.last(), out.j2.first(), out.j2.last()), (a, b, a, b));
        let set = out.j.to_set(s.len());
        assert!(out.j2.points()[1..out.j2.len() - 1].iter().all(|&p| !set.contains(p)));
    }

    #[test]
    fn split_piece_on_a_row_is_separated() {
        let k = 64;
        let s = grid_square(k).unwrap();
        let arc = DiscreteArc::new(&s, row(k, 32)).unwrap();
        let sc = build_scaffold(&s, &arc, 1.0, 0.3, 1.0).unwrap();
        let (arcs, rec) = split_even_subarc(&s, &sc, 1, &SplitConfig::new(1.0)).unwrap();
        assert!(rec.sigma_split.unwrap() > 0.0);
        assert!(!arcs[0].to_set(s.len()).intersects(&arcs[1].to_set(s.len())));
    }

    #[test]
    fn bogensatz_single_arc_has_eta_one() {
        let k = 64;
        let s = grid_square(k).unwrap();
        let (arcs, rep) =
            bogensatz(&s, grid_index(k, 16, 32), grid_index(k, 48, 32), 1, &SplitConfig::new(1.0)).unwrap();
        assert_eq!(arcs.len(), 1);
        assert_eq!(rep.eta_levels, vec![1.0]);
    }

    #[test]
    fn bogensatz_pair_between_corners() {
        let k = 64;
        let s = grid_square(k).unwrap();
        let (arcs, rep) =
            bogensatz(&s, grid_index(k, 0, 0), grid_index(k, k, k), 2, &SplitConfig::new(1.0)).unwrap();
        assert_eq!(arcs.len(), 2);
        let (_, _, cl, bound) = rep.circles[0];
        assert!(cl <= bound + 1e-9);
        assert!(rep.pair_eta[0].2 > 0.0);
    }

    #[test]
    fn bogensatz_four_interior_arcs() {
        let k = 64;
        let s = grid_square(k).unwrap();
        let (arcs, rep) =
            bogensatz(&s, grid_index(k, 4, 4), grid_index(k, 60, 60), 4, &SplitConfig::new(1.0)).unwrap();
        assert_eq!(arcs.len(), 4);
        assert_eq!(rep.pair_eta.len(), 6);
        assert!(rep.pair_eta.iter().all(|e| e.2 > 0.0));
        assert!(rep.circles.iter().all(|c| c.2.is_finite() && c.2 <= c.3 + 1e-9));
    }

    #[test]
    fn four_arcs_cannot_leave_a_corner() {
        let k = 64;
        let s = grid_square(k).unwrap();
        let err = bogensatz(&s, grid_index(k, 0, 0), grid_index(k, k, k), 4, &SplitConfig::new(1.0)).unwrap_err();
        assert!(matches!(err, SplitError::Exhausted { achieved: 1, wanted: 2, .. }), "{err}");
    }
}
