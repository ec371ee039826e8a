//! Re-runs the arc and circle scanners on construction outputs.

use qcf_core::arc::{
    check_follows, concatenate_to_circle, measure_circle_lambda, measure_lambda, relative_separation_above, DiscreteArc,
    DiscreteCircle, Locality,
};
use qcf_core::circle::CircleOutput;
use qcf_core::graph::PointSet;
use qcf_core::num;
use qcf_core::space::{MetricSpace, PointId};
use qcf_core::split::{BogensatzReport, Split};
use qcf_core::straighten::Straightened;

use crate::report::Check;

fn valid_arc(space: &MetricSpace, arc: &DiscreteArc) -> bool {
    DiscreteArc::new(space, arc.points().to_vec()).is_ok()
}

fn interiors_disjoint(space: &MetricSpace, a: &DiscreteArc, b: &DiscreteArc) -> bool {
    let set = a.to_set(space.len());
    b.points()[1..b.len() - 1].iter().all(|&p| !set.contains(p))
}

pub fn straightened(space: &MetricSpace, input: &DiscreteArc, out: &Straightened, eps: f64, three_piece: bool) -> Vec<Check> {
    let mut v = vec![Check::flag("output is an arc", valid_arc(space, &out.arc))];
    v.push(Check::flag(
        "endpoints kept",
        out.arc.first() == input.first() && out.arc.last() == input.last(),
    ));
    let f = check_follows(space, &out.arc, input, out.iota_sum.max(space.mesh_h()));
    v.push(Check::flag("follows input at the reported iota", f.holds));
    let lam = measure_lambda(space, &out.arc, Locality::Local(eps / 2.0)).lambda_measured;
    v.push(Check::le("local lambda matches report", lam, out.report.lambda_measured * (1.0 + num::REL_TOL)));
    if three_piece {
        v.push(Check::flag("outer components kept", out.kept_components));
    }
    v
}

/// Largest `d(z, A)/d(z, {a, b})` over points of `arcs` at least `floor`
/// from both ends.
pub fn cone_ratio(space: &MetricSpace, a: &DiscreteArc, arcs: &[&DiscreteArc], floor: f64) -> f64 {
    let (x, y) = (a.first(), a.last());
    let mut worst = 0.0f64;
    for arc in arcs {
        for &z in arc.points() {
            let dz = space.dist(z, x).min(space.dist(z, y));
            if num::ge(dz, floor) {
                worst = worst.max(space.dist_to_set(z, a.points()) / dz);
            }
        }
    }
    worst
}

pub fn split(space: &MetricSpace, a: &DiscreteArc, s: &Split, eps: f64, floor: f64) -> Vec<Check> {
    let (x, y) = (a.first(), a.last());
    let mut v = vec![
        Check::flag("J is an arc", valid_arc(space, &s.j)),
        Check::flag("J' is an arc", valid_arc(space, &s.j2)),
        Check::flag(
            "shared endpoints",
            s.j.first() == x && s.j.last() == y && s.j2.first() == x && s.j2.last() == y,
        ),
        Check::flag("disjoint interiors", interiors_disjoint(space, &s.j, &s.j2)),
    ];
    v.push(Check::le("cone ratio", cone_ratio(space, a, &[&s.j, &s.j2], floor), eps));
    let eta = relative_separation_above(space, &s.j, &s.j2, x, y, floor);
    v.push(Check::gt("relative separation", eta, 0.0));
    match concatenate_to_circle(space, &s.j, &s.j2) {
        Ok(c) => {
            let lam = measure_circle_lambda(space, &c).lambda_measured;
            v.push(Check::le("circle lambda", lam, s.report.circle_bound + 1e-9));
        }
        Err(_) => v.push(Check::flag("concatenation is a circle", false)),
    }
    v
}

pub fn bogensatz(space: &MetricSpace, x: PointId, y: PointId, arcs: &[DiscreteArc], r: &BogensatzReport, floor: f64) -> Vec<Check> {
    let mut v = Vec::new();
    for (i, a) in arcs.iter().enumerate() {
        v.push(Check::flag(&format!("arc {i} is an arc from x to y"), valid_arc(space, a) && a.first() == x && a.last() == y));
    }
    let mut used = PointSet::empty(space.len());
    let mut disjoint = true;
    for a in arcs {
        for &p in &a.points()[1..a.len() - 1] {
            disjoint &= used.insert(p);
        }
    }
    v.push(Check::flag("interiors pairwise disjoint", disjoint));
    for i in 0..arcs.len() {
        for j in i + 1..arcs.len() {
            let eta = relative_separation_above(space, &arcs[i], &arcs[j], x, y, floor);
            v.push(Check::gt(&format!("eta {i} {j}"), eta, 0.0));
            let lam = concatenate_to_circle(space, &arcs[i], &arcs[j])
                .map(|c| measure_circle_lambda(space, &c).lambda_measured)
                .unwrap_or(f64::INFINITY);
            v.push(Check::le(&format!("circle {i} {j} finite"), lam, f64::MAX));
        }
    }
    v.push(Check::flag("report has every pair", r.circles.len() == arcs.len() * (arcs.len() - 1) / 2));
    v
}

pub fn circle(space: &MetricSpace, t: &[PointId], o: &CircleOutput) -> Vec<Check> {
    let c = &o.circle;
    let mut v = vec![
        Check::flag("simple closed curve", DiscreteCircle::new(space, c.points().to_vec()).is_ok()),
        Check::flag("contains every point", t.iter().all(|&p| c.contains(p))),
    ];
    let lam = measure_circle_lambda(space, c).lambda_measured;
    v.push(Check::le("lambda finite", lam, f64::MAX));
    let mut uniq = t.to_vec();
    uniq.sort_unstable();
    uniq.dedup();
    if uniq.len() >= 2 {
        let ratio = c.diam(space) / space.diameter_of(&uniq);
        v.push(Check::le("diam ratio", ratio, lam * (1.0 + num::REL_TOL)));
    }
    for (i, b) in o.clusters.iter().enumerate() {
        v.push(Check::flag(&format!("cluster cases {i}"), b.holds()));
    }
    v
}

/// Generic scan of a stored curve.
pub fn curve(space: &MetricSpace, points: &[PointId], cyclic: bool, contains: &[PointId]) -> (Vec<Check>, Option<f64>) {
    let mut v = Vec::new();
    let lam = if cyclic {
        match DiscreteCircle::new(space, points.to_vec()) {
            Ok(c) => Some(measure_circle_lambda(space, &c).lambda_measured),
            Err(_) => None,
        }
    } else {
        match DiscreteArc::new(space, points.to_vec()) {
            Ok(a) => Some(measure_lambda(space, &a, Locality::Global).lambda_measured),
            Err(_) => None,
        }
    };
    v.push(Check::flag(if cyclic { "simple closed curve" } else { "arc" }, lam.is_some()));
    if !contains.is_empty() {
        v.push(Check::flag("contains every point", contains.iter().all(|p| points.contains(p))));
    }
    (v, lam)
}
