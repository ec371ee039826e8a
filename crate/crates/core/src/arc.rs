//! Discrete arcs and circles, quasi-arc measurements and the follows check.
//!
//! Ratio measurements skip point pairs closer than `mesh_h`: below the
//! resolution floor a continuum quantifier has no discrete meaning.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::graph::PointSet;
use crate::num;
use crate::space::{MetricSpace, PointId};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ArcError {
    #[error("arc is empty")]
    Empty,
    #[error("circle needs at least 3 points, got {0}")]
    CircleTooShort(usize),
    #[error("point {0} is outside the space")]
    OutOfRange(PointId),
    #[error("point {0} repeats")]
    NotInjective(PointId),
    #[error("step {index} ({from} -> {to}) is longer than mesh_h")]
    StepTooLong { index: usize, from: PointId, to: PointId },
    #[error("index {index} out of range for arc of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("arcs do not share both endpoints")]
    EndpointMismatch,
    #[error("arc interiors overlap at {0}")]
    InteriorOverlap(PointId),
    #[error("arc has no point besides its endpoints")]
    OnlyEndpoints,
}

fn check_steps(space: &MetricSpace, pts: &[PointId], cyclic: bool) -> Result<(), ArcError> {
    let mut seen = PointSet::empty(space.len());
    for &p in pts {
        if !space.contains(p) {
            return Err(ArcError::OutOfRange(p));
        }
        if !seen.insert(p) {
            return Err(ArcError::NotInjective(p));
        }
    }
    let h = space.mesh_h();
    for (i, w) in pts.windows(2).enumerate() {
        if !num::le(space.dist(w[0], w[1]), h) {
            return Err(ArcError::StepTooLong { index: i, from: w[0], to: w[1] });
        }
    }
    if cyclic {
        let (a, b) = (pts[pts.len() - 1], pts[0]);
        if !num::le(space.dist(a, b), h) {
            return Err(ArcError::StepTooLong { index: pts.len() - 1, from: a, to: b });
        }
    }
    Ok(())
}

/// Ordered injective point sequence whose steps are at most `mesh_h`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiscreteArc {
    points: Vec<PointId>,
}

impl DiscreteArc {
    pub fn new(space: &MetricSpace, points: Vec<PointId>) -> Result<Self, ArcError> {
        if points.is_empty() {
            return Err(ArcError::Empty);
        }
        check_steps(space, &points, false)?;
        Ok(DiscreteArc { points })
    }

    /// Wraps a sequence the caller already knows to be a valid arc.
    pub(crate) fn from_trusted(points: Vec<PointId>) -> Self {
        debug_assert!(!points.is_empty());
        DiscreteArc { points }
    }

    pub fn points(&self) -> &[PointId] {
        &self.points
    }

    pub fn into_points(self) -> Vec<PointId> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> PointId {
        self.points[0]
    }

    pub fn last(&self) -> PointId {
        self.points[self.points.len() - 1]
    }

    pub fn reversed(&self) -> Self {
        let mut p = self.points.clone();
        p.reverse();
        DiscreteArc { points: p }
    }

    pub fn position(&self, p: PointId) -> Option<usize> {
        self.points.iter().position(|&q| q == p)
    }

    pub fn to_set(&self, universe: usize) -> PointSet {
        PointSet::from_points(universe, self.points.iter().copied())
    }

    /// The closed, possibly trivial, subarc between positions `i` and `j`
    /// (in either order).
    pub fn subarc(&self, i: usize, j: usize) -> Result<Self, ArcError> {
        let len = self.points.len();
        for index in [i, j] {
            if index >= len {
                return Err(ArcError::IndexOutOfRange { index, len });
            }
        }
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        Ok(DiscreteArc { points: self.points[lo..=hi].to_vec() })
    }

    pub fn diam(&self, space: &MetricSpace) -> f64 {
        space.diameter_of(&self.points)
    }
}

/// Cyclic injective point sequence, closing step included.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiscreteCircle {
    points: Vec<PointId>,
}

impl DiscreteCircle {
    pub fn new(space: &MetricSpace, points: Vec<PointId>) -> Result<Self, ArcError> {
        if points.len() < 3 {
            return Err(ArcError::CircleTooShort(points.len()));
        }
        check_steps(space, &points, true)?;
        Ok(DiscreteCircle { points })
    }

    pub fn points(&self) -> &[PointId] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn position(&self, p: PointId) -> Option<usize> {
        self.points.iter().position(|&q| q == p)
    }

    pub fn contains(&self, p: PointId) -> bool {
        self.position(p).is_some()
    }

    pub fn diam(&self, space: &MetricSpace) -> f64 {
        space.diameter_of(&self.points)
    }

    /// Points from position `i` forward (cyclically) to position `j`, inclusive.
    pub fn forward_run(&self, i: usize, j: usize) -> Vec<PointId> {
        let n = self.points.len();
        let len = (j + n - i) % n;
        (0..=len).map(|t| self.points[(i + t) % n]).collect()
    }

    /// The two arcs between positions `i` and `j`: forward from `i` to `j`,
    /// and forward from `j` back to `i` reversed so it also runs `i → j`.
    pub fn cut(&self, i: usize, j: usize) -> (DiscreteArc, DiscreteArc) {
        let fwd = self.forward_run(i, j);
        let mut back = self.forward_run(j, i);
        back.reverse();
        (DiscreteArc { points: fwd }, DiscreteArc { points: back })
    }

    /// Same cyclic sequence started at position `i`.
    pub fn rotated(&self, i: usize) -> Self {
        let n = self.points.len();
        DiscreteCircle { points: (0..n).map(|t| self.points[(i + t) % n]).collect() }
    }
}

/// Which point pairs a quasi-arc measurement looks at.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Locality {
    Global,
    /// Only pairs at distance at most this value.
    Local(f64),
}

/// Constants measured on a produced arc or circle.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstructionReport {
    pub lambda_measured: f64,
    /// Point pair attaining `lambda_measured`, if any pair was admissible.
    pub lambda_witness: Option<(PointId, PointId)>,
    pub locality: Locality,
    pub follows_iota: Option<f64>,
    pub separation_eta: Option<f64>,
    pub notes: Vec<String>,
}

impl ConstructionReport {
    pub fn lambda_only(lambda: f64, witness: Option<(PointId, PointId)>, locality: Locality) -> Self {
        ConstructionReport {
            lambda_measured: lambda,
            lambda_witness: witness,
            locality,
            follows_iota: None,
            separation_eta: None,
            notes: Vec::new(),
        }
    }
}

fn admissible(d: f64, h: f64, locality: Locality) -> bool {
    num::ge(d, h)
        && match locality {
            Locality::Global => true,
            Locality::Local(eps) => num::le(d, eps),
        }
}

/// Largest `diam(A[x,y]) / d(x,y)` over admissible pairs.
///
/// Subarc diameters come from an interval sweep: the diameter of
/// `A[s..=s+len]` is the max of the two length-`len-1` intervals it contains
/// and the distance between its ends, so the whole scan is `O(|A|²)` time and
/// `O(|A|)` memory.
pub fn measure_lambda(space: &MetricSpace, arc: &DiscreteArc, locality: Locality) -> ConstructionReport {
    let pts = arc.points();
    let n = pts.len();
    let h = space.mesh_h();
    let mut diam = vec![0.0f64; n];
    let mut best = 1.0f64;
    let mut witness = None;
    for len in 1..n {
        for s in 0..n - len {
            let d = space.dist(pts[s], pts[s + len]);
            let v = diam[s].max(diam[s + 1]).max(d);
            diam[s] = v;
            if admissible(d, h, locality) {
                let ratio = v / d;
                if ratio > best || witness.is_none() && ratio >= best {
                    best = ratio.max(best);
                    witness = Some((pts[s], pts[s + len]));
                }
            }
        }
    }
    let mut report = ConstructionReport::lambda_only(best, witness, locality);
    if witness.is_none() {
        report.notes.push(String::from("no admissible pair above the mesh floor; lambda set to 1"));
    }
    report
}

/// Largest `min(diam(cw subarc), diam(ccw subarc)) / d(x,y)` over point
/// pairs at distance at least `mesh_h`.
pub fn measure_circle_lambda(space: &MetricSpace, circle: &DiscreteCircle) -> ConstructionReport {
    let pts = circle.points();
    let n = pts.len();
    let h = space.mesh_h();
    let half = n / 2;
    // rows[len][s]: diameter of the cyclic run of len+1 points starting at s, for len <= half.
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(half + 1);
    rows.push(vec![0.0; n]);
    let mut cur = vec![0.0f64; n];
    let mut best = 1.0f64;
    let mut witness = None;
    for len in 1..n {
        let prev = cur.clone();
        for s in 0..n {
            let d = space.dist(pts[s], pts[(s + len) % n]);
            cur[s] = prev[s].max(prev[(s + 1) % n]).max(d);
        }
        if len <= half {
            rows.push(cur.clone());
        }
        // Pairs (s, s+len) with len >= n - len: the complementary run has
        // length n - len <= half and is already stored.
        if 2 * len >= n {
            let comp = &rows[n - len];
            for s in 0..n {
                let t = (s + len) % n;
                // Each unordered pair is visited from both sides when 2*len == n; harmless.
                let d = space.dist(pts[s], pts[t]);
                if !num::ge(d, h) {
                    continue;
                }
                let v = cur[s].min(comp[t]);
                let ratio = v / d;
                if ratio > best || witness.is_none() && ratio >= best {
                    best = ratio.max(best);
                    witness = Some((pts[s], pts[t]));
                }
            }
        }
    }
    let mut report = ConstructionReport::lambda_only(best, witness, Locality::Global);
    if witness.is_none() {
        report.notes.push(String::from("no admissible pair above the mesh floor; lambda set to 1"));
    }
    report
}

/// Outcome of [`check_follows`].
#[derive(Clone, Debug, PartialEq)]
pub struct Follows {
    pub holds: bool,
    /// Monotone endpoint-respecting map from positions of `B` to positions
    /// of `A` with the smallest possible maximal displacement.
    pub map: Vec<usize>,
    pub max_displacement: f64,
    /// On failure: positions `(x, y)` in `B` and the offending point of `B[x,y]`.
    pub witness: Option<(usize, usize, PointId)>,
}

/// Smallest max displacement of a monotone map `p` from `B` to `A` with
/// `p(first) = first` and `p(last) = last`.
fn optimal_monotone_displacement(space: &MetricSpace, b: &[PointId], a: &[PointId]) -> f64 {
    let m = a.len();
    let mut row: Vec<f64> = (0..m)
        .map(|j| if j == 0 { space.dist(b[0], a[0]) } else { f64::INFINITY })
        .collect();
    for &bi in &b[1..] {
        let mut prefix = f64::INFINITY;
        for (j, &aj) in a.iter().enumerate() {
            prefix = prefix.min(row[j]);
            row[j] = space.dist(bi, aj).max(prefix);
        }
    }
    row[m - 1]
}

/// Greedy smallest-index monotone map with displacement at most `bound`.
/// Returns the map or the first position of `B` that cannot be placed.
fn greedy_monotone_map(space: &MetricSpace, b: &[PointId], a: &[PointId], bound: f64) -> Result<Vec<usize>, usize> {
    let last_a = a.len() - 1;
    let mut map = Vec::with_capacity(b.len());
    if space.dist(b[0], a[0]) > bound {
        return Err(0);
    }
    map.push(0);
    let mut j = 0;
    for (i, &bi) in b.iter().enumerate().skip(1) {
        if i == b.len() - 1 {
            if space.dist(bi, a[last_a]) > bound {
                return Err(i);
            }
            map.push(last_a);
            break;
        }
        while j < a.len() && space.dist(bi, a[j]) > bound {
            j += 1;
        }
        if j == a.len() {
            return Err(i);
        }
        map.push(j);
    }
    Ok(map)
}

/// Does `b` ι-follow `a`?
///
/// The certificate is a monotone endpoint-respecting correspondence. For a
/// monotone map, `A[p(z), p(z)] ⊂ A[p(x), p(y)]` whenever `x ≤ z ≤ y`, so the
/// neighbourhood condition over all pairs reduces to every point of `b`
/// lying within ι of its own image.
pub fn check_follows(space: &MetricSpace, b: &DiscreteArc, a: &DiscreteArc, iota: f64) -> Follows {
    let (bp, ap) = (b.points(), a.points());
    let best = optimal_monotone_displacement(space, bp, ap);
    if num::le(best, iota) {
        let map = greedy_monotone_map(space, bp, ap, best).expect("optimal value is feasible");
        Follows { holds: true, map, max_displacement: best, witness: None }
    } else {
        let fail = greedy_monotone_map(space, bp, ap, iota).err().unwrap_or(bp.len() - 1);
        let map = greedy_monotone_map(space, bp, ap, best).unwrap_or_default();
        Follows { holds: false, map, max_displacement: best, witness: Some((fail, fail, bp[fail])) }
    }
}

/// Reference point pair for [`arc_separation`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeparationMode {
    Absolute,
    RelativeTo(PointId, PointId),
}

/// Absolute separation `d(J, J2)`, or the relative constant
/// `min_z d(z, other arc) / d(z, {a, b})` over non-endpoint `z` of either arc.
pub fn arc_separation(
    space: &MetricSpace,
    j: &DiscreteArc,
    j2: &DiscreteArc,
    mode: SeparationMode,
) -> Result<f64, ArcError> {
    match mode {
        SeparationMode::Absolute => Ok(space.set_distance(j.points(), j2.points())),
        SeparationMode::RelativeTo(a, b) => {
            let interior = |arc: &DiscreteArc| -> Vec<PointId> {
                arc.points().iter().copied().filter(|&z| z != a && z != b).collect()
            };
            let (ij, ij2) = (interior(j), interior(j2));
            if ij.is_empty() || ij2.is_empty() {
                return Err(ArcError::OnlyEndpoints);
            }
            let mut eta = f64::INFINITY;
            for (zs, other) in [(&ij, j2.points()), (&ij2, j.points())] {
                for &z in zs.iter() {
                    let rel = space.dist_to_set(z, other) / space.dist(z, a).min(space.dist(z, b));
                    eta = eta.min(rel);
                }
            }
            Ok(eta)
        }
    }
}

/// Relative separation restricted to points at distance at least `floor`
/// from both endpoints.
pub fn relative_separation_above(
    space: &MetricSpace,
    j: &DiscreteArc,
    j2: &DiscreteArc,
    a: PointId,
    b: PointId,
    floor: f64,
) -> f64 {
    let mut eta = f64::INFINITY;
    for (arc, other) in [(j, j2), (j2, j)] {
        for &z in arc.points() {
            let dz = space.dist(z, a).min(space.dist(z, b));
            if z == a || z == b || !num::ge(dz, floor) {
                continue;
            }
            eta = eta.min(space.dist_to_set(z, other.points()) / dz);
        }
    }
    eta
}

/// `J` followed by the reversed interior of `J2`.
pub fn concatenate_to_circle(
    space: &MetricSpace,
    j: &DiscreteArc,
    j2: &DiscreteArc,
) -> Result<DiscreteCircle, ArcError> {
    if j.first() != j2.first() || j.last() != j2.last() || j.first() == j.last() {
        return Err(ArcError::EndpointMismatch);
    }
    let set = j.to_set(space.len());
    let inner = &j2.points()[1..j2.len() - 1];
    if let Some(&p) = inner.iter().find(|&&p| set.contains(p)) {
        return Err(ArcError::InteriorOverlap(p));
    }
    let mut pts = j.points().to_vec();
    pts.extend(inner.iter().rev());
    DiscreteCircle::new(space, pts)
}
