use proptest::prelude::*;
use qcf_core::arc::{check_follows, concatenate_to_circle, measure_lambda, DiscreteArc, DiscreteCircle, Locality};
use qcf_core::circle::{circle_through_points, detour_circle, separated_arcs, CircleConfig, SeparationSearch};
use qcf_core::graph::PointSet;
use qcf_core::invariants::{greedy_cover, lc_pair};
use qcf_core::space::{circle, grid_index, grid_square, MetricSpace, PointId};
use qcf_core::straighten::{straighten, JoinConfig, StraightenMode};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Self-avoiding random walk of at most `len` steps.
fn walk(space: &MetricSpace, start: PointId, len: usize, seed: u64) -> Vec<PointId> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = PointSet::empty(space.len());
    let mut pts = vec![start];
    seen.insert(start);
    while pts.len() <= len {
        let mut next: Vec<PointId> =
            space.neighbors(*pts.last().unwrap()).iter().copied().filter(|&q| !seen.contains(q)).collect();
        next.shuffle(&mut rng);
        match next.first() {
            Some(&q) => {
                seen.insert(q);
                pts.push(q);
            }
            None => break,
        }
    }
    pts
}

fn diam(space: &MetricSpace, pts: &[PointId]) -> f64 {
    space.diameter_of(pts)
}

/// Boundary of the rectangle `[i0, i1] × [j0, j1]`, counter-clockwise from `(i0, j0)`.
fn rectangle(k: usize, i0: usize, j0: usize, i1: usize, j1: usize) -> Vec<PointId> {
    let mut pts: Vec<PointId> = (i0..i1).map(|i| grid_index(k, i, j0)).collect();
    pts.extend((j0..j1).map(|j| grid_index(k, i1, j)));
    pts.extend((i0 + 1..=i1).rev().map(|i| grid_index(k, i, j1)));
    pts.extend((j0 + 1..=j1).rev().map(|j| grid_index(k, i0, j)));
    pts
}

fn rect_strategy() -> impl Strategy<Value = (usize, usize, usize, usize, usize)> {
    (12usize..=24).prop_flat_map(|k| (Just(k), 0..k / 2, 0..k / 2)).prop_flat_map(|(k, i0, j0)| {
        (Just(k), Just(i0), Just(j0), i0 + 3..=k, j0 + 3..=k)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn generated_spaces_are_metric_and_connected(k in 2usize..=12, seed in any::<u64>()) {
        prop_assert!(grid_square(k).unwrap().validate(seed).is_ok());
        let c = circle(k.max(3) * 4).unwrap();
        prop_assert!(c.validate(seed).is_ok());
        let n = c.len();
        let first = c.dist(PointId(0), PointId(1));
        for i in 0..n {
            let d = c.dist(PointId(i), PointId((i + 1) % n));
            prop_assert!((d - first).abs() <= 1e-12 * first);
        }
    }

    #[test]
    fn lambda_grows_with_locality(k in 8usize..=24, len in 4usize..80, seed in any::<u64>(), e1 in 0.05f64..1.0, e2 in 0.05f64..1.0) {
        let s = grid_square(k).unwrap();
        let pts = walk(&s, PointId(seed as usize % s.len()), len, seed);
        prop_assume!(pts.len() >= 2);
        let a = DiscreteArc::new(&s, pts).unwrap();
        let (lo, hi) = (e1.min(e2), e1.max(e2));
        let l1 = measure_lambda(&s, &a, Locality::Local(lo)).lambda_measured;
        let l2 = measure_lambda(&s, &a, Locality::Local(hi)).lambda_measured;
        let g = measure_lambda(&s, &a, Locality::Global).lambda_measured;
        prop_assert!(l1 <= l2 && l2 <= g);
        let ends = s.dist(a.first(), a.last());
        if ends >= s.mesh_h() {
            prop_assert!(g >= diam(&s, a.points()) / ends * (1.0 - 1e-12));
        }
    }

    #[test]
    fn follows_bounds_the_hausdorff_distance(k in 8usize..=20, seed in any::<u64>(), la in 2usize..60, lb in 2usize..60) {
        let s = grid_square(k).unwrap();
        let a = DiscreteArc::new(&s, walk(&s, PointId(seed as usize % s.len()), la, seed)).unwrap();
        let b = DiscreteArc::new(&s, walk(&s, a.first(), lb, seed ^ 1)).unwrap();
        let f = check_follows(&s, &b, &a, f64::INFINITY);
        prop_assert!(f.holds);
        let iota = f.max_displacement;
        let at = check_follows(&s, &b, &a, iota);
        prop_assert!(at.holds);
        for &z in b.points() {
            prop_assert!(s.dist_to_set(z, a.points()) <= iota * (1.0 + 1e-12));
        }
    }

    #[test]
    fn concatenation_cuts_back_to_its_arcs((k, i0, j0, i1, j1) in rect_strategy()) {
        let s = grid_square(k).unwrap();
        let ring = rectangle(k, i0, j0, i1, j1);
        let corner = ring.iter().position(|&p| p == grid_index(k, i1, j1)).unwrap();
        let j = DiscreteArc::new(&s, ring[..=corner].to_vec()).unwrap();
        let mut back: Vec<PointId> = ring[corner..].to_vec();
        back.push(ring[0]);
        back.reverse();
        let j2 = DiscreteArc::new(&s, back).unwrap();
        let c = concatenate_to_circle(&s, &j, &j2).unwrap();
        let (pa, pb) = (c.position(j.first()).unwrap(), c.position(j.last()).unwrap());
        let (x, y) = c.cut(pa, pb);
        let set = |a: &DiscreteArc| { let mut v = a.points().to_vec(); v.sort_unstable(); v };
        let (mut got, mut want) = (vec![set(&x), set(&y)], vec![set(&j), set(&j2)]);
        got.sort();
        want.sort();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn greedy_cover_covers_the_ball(k in 4usize..=16, seed in any::<u64>(), r in 0.1f64..1.2) {
        let s = grid_square(k).unwrap();
        let x = PointId(seed as usize % s.len());
        let cover = greedy_cover(&s, x, r);
        for p in s.ball_points(x, r) {
            prop_assert!(cover.greedy.iter().any(|&c| s.dist(p, c) <= r / 2.0 * (1.0 + 1e-9)));
        }
    }

    #[test]
    fn lc_witness_meets_its_bound(k in 4usize..=16, a in any::<u64>(), b in any::<u64>()) {
        let s = grid_square(k).unwrap();
        let (x, y) = (PointId(a as usize % s.len()), PointId(b as usize % s.len()));
        prop_assume!(s.dist(x, y) >= s.mesh_h());
        let w = lc_pair(&s, x, y).unwrap();
        prop_assert!(diam(&s, &w.arc) <= w.ratio * s.dist(x, y) + 2.0 * s.mesh_h() + 1e-12);
    }

    #[test]
    fn detour_avoids_the_inner_ball((k, i0, j0, i1, j1) in rect_strategy(), pick in any::<usize>(), m in 4.0f64..6.0, w in 1.0f64..4.0) {
        let s = grid_square(k).unwrap();
        let h = s.mesh_h();
        let ring = rectangle(k, i0, j0, i1, j1);
        let c = DiscreteCircle::new(&s, ring.clone()).unwrap();
        let x = ring[pick % ring.len()];
        let (r_in, r_out) = (m * h, (m + w) * h);
        if let Ok(out) = detour_circle(&s, &c, x, r_in, r_out) {
            let pts = out.points();
            let mut seen = PointSet::empty(s.len());
            prop_assert!(pts.iter().all(|&p| seen.insert(p)));
            prop_assert!(pts.iter().all(|&p| s.dist(p, x) >= r_in * (1.0 - 1e-9)));
            let far = |p: &PointId| s.dist(*p, x) > r_out * (1.0 + 1e-9);
            let mut before: Vec<PointId> = ring.iter().copied().filter(far).collect();
            let mut after: Vec<PointId> = pts.iter().copied().filter(far).collect();
            before.sort_unstable();
            after.sort_unstable();
            prop_assert_eq!(before, after);
        }
    }

    #[test]
    fn separated_arcs_keep_their_distance(k in 8usize..=16, n in 1usize..=3, seed in any::<u64>()) {
        let s = grid_square(k).unwrap();
        let left: Vec<PointId> = (0..=k).map(|j| grid_index(k, 0, j)).collect();
        let right: Vec<PointId> = (0..=k).map(|j| grid_index(k, k, j)).collect();
        let search = SeparationSearch { seed, ..SeparationSearch::default() };
        let sep = separated_arcs(&s, &left, &right, n, &PointSet::full(s.len()), 1.0, search).unwrap();
        prop_assert!(sep.sigma >= s.mesh_h() * (1.0 - 1e-9));
        for i in 0..sep.arcs.len() {
            for j in i + 1..sep.arcs.len() {
                prop_assert!(s.set_distance(sep.arcs[i].points(), sep.arcs[j].points()) >= sep.sigma * (1.0 - 1e-9));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn circles_through_random_points(n in 1usize..=4, seed in any::<u64>()) {
        let k = 24;
        let s = grid_square(k).unwrap();
        let h = s.mesh_h();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t: Vec<PointId> = Vec::new();
        while t.len() < n {
            let p = PointId(rng.gen_range(0..s.len()));
            if t.iter().all(|&q| s.dist(p, q) >= 8.0 * h) {
                t.push(p);
            }
        }
        let cfg = CircleConfig::new(1.0);
        let out = circle_through_points(&s, &t, &cfg).unwrap();
        let c = &out.circle;
        prop_assert!(DiscreteCircle::new(&s, c.points().to_vec()).is_ok());
        prop_assert!(t.iter().all(|&p| c.contains(p)));
        prop_assert!(out.report.lambda_measured.is_finite());
        for (i, &x) in t.iter().enumerate() {
            for &y in &t[i + 1..] {
                let (a, b) = c.cut(c.position(x).unwrap(), c.position(y).unwrap());
                let small = diam(&s, a.points()).min(diam(&s, b.points()));
                prop_assert!(small <= out.report.lambda_measured * s.dist(x, y) * (1.0 + 1e-9));
            }
        }
        let again = circle_through_points(&s, &t, &cfg).unwrap();
        prop_assert_eq!(again.circle.points(), c.points());
        let scaled = s.scaled(3.7).unwrap();
        let moved = circle_through_points(&scaled, &t, &cfg).unwrap();
        prop_assert_eq!(moved.circle.points(), c.points());
    }

    #[test]
    fn straightening_twice_moves_little(seed in any::<u64>()) {
        let k = 64;
        let s = grid_square(k).unwrap();
        let start = grid_index(k, 8 + seed as usize % 48, 8 + (seed >> 8) as usize % 48);
        let pts = walk(&s, start, 120, seed);
        prop_assume!(s.dist(pts[0], *pts.last().unwrap()) >= 0.3);
        let a = DiscreteArc::new(&s, pts).unwrap();
        let eps = 0.3;
        let cfg = JoinConfig::new(1.0);
        let once = straighten(&s, &a, eps, StraightenMode::WholeArc, &cfg).unwrap();
        prop_assert!(check_follows(&s, &once.arc, &a, once.report.follows_iota.unwrap()).holds);
        let twice = straighten(&s, &once.arc, eps, StraightenMode::WholeArc, &cfg).unwrap();
        let moved = check_follows(&s, &twice.arc, &once.arc, f64::INFINITY).max_displacement;
        prop_assert!(moved <= eps, "moved {moved}");
    }
}
