//! Brute-force references, written without the library's scanners.

use std::collections::VecDeque;

use qcf_core::space::{MetricSpace, PointId};

/// `diam[i][j]` of `pts[i..=j]`, by growing each run one point at a time.
pub fn run_diameters(space: &MetricSpace, pts: &[PointId]) -> Vec<Vec<f64>> {
    let n = pts.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        let mut d = 0.0f64;
        for j in i + 1..n {
            for k in i..j {
                d = d.max(space.dist(pts[k], pts[j]));
            }
            out[i][j] = d;
        }
    }
    out
}

/// Largest `diam(A[x,y]) / d(x,y)` over pairs at least `floor` apart.
pub fn arc_lambda(space: &MetricSpace, pts: &[PointId], floor: f64) -> f64 {
    let diam = run_diameters(space, pts);
    let mut worst = 1.0f64;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = space.dist(pts[i], pts[j]);
            if d >= floor * (1.0 - 1e-9) {
                worst = worst.max(diam[i][j] / d);
            }
        }
    }
    worst
}

/// Largest `min(diam of the two arcs between x and y) / d(x,y)`.
pub fn circle_lambda(space: &MetricSpace, pts: &[PointId], floor: f64) -> f64 {
    let n = pts.len();
    let at = |i: usize| pts[i % n];
    // fwd[i][len]: diameter of the forward run of `len + 1` points from i.
    let mut fwd = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        let mut d = 0.0f64;
        for len in 1..n {
            for k in i..i + len {
                d = d.max(space.dist(at(k), at(i + len)));
            }
            fwd[i][len] = d;
        }
    }
    let mut worst = 1.0f64;
    for i in 0..n {
        for len in 1..n {
            let j = (i + len) % n;
            let dxy = space.dist(pts[i], pts[j]);
            if dxy >= floor * (1.0 - 1e-9) {
                worst = worst.max(fwd[i][len].min(fwd[j][n - len]) / dxy);
            }
        }
    }
    worst
}

fn dist_to(space: &MetricSpace, z: PointId, set: &[PointId]) -> f64 {
    set.iter().map(|&p| space.dist(z, p)).fold(f64::INFINITY, f64::min)
}

/// Largest `d(z, A) / d(z, {a, b})` over points of `arcs` at least `floor` from both ends.
pub fn cone_ratio(space: &MetricSpace, a: &[PointId], arcs: &[&[PointId]], floor: f64) -> f64 {
    let (x, y) = (a[0], a[a.len() - 1]);
    let mut worst = 0.0f64;
    for arc in arcs {
        for &z in arc.iter() {
            let dz = space.dist(z, x).min(space.dist(z, y));
            if dz >= floor * (1.0 - 1e-9) {
                worst = worst.max(dist_to(space, z, a) / dz);
            }
        }
    }
    worst
}

/// Smallest `d(z, other arc) / d(z, {x, y})` over points of either arc at
/// least `floor` from both ends.
pub fn relative_separation(space: &MetricSpace, j: &[PointId], j2: &[PointId], floor: f64) -> f64 {
    let (x, y) = (j[0], j[j.len() - 1]);
    let mut best = f64::INFINITY;
    for (arc, other) in [(j, j2), (j2, j)] {
        for &z in arc {
            let dz = space.dist(z, x).min(space.dist(z, y));
            if dz > 0.0 && dz >= floor * (1.0 - 1e-9) {
                best = best.min(dist_to(space, z, other) / dz);
            }
        }
    }
    best
}

/// Is there a monotone endpoint-respecting map from `b` to `a` moving no
/// point more than `iota`? Reachability over the `(i, j)` grid.
pub fn follows(space: &MetricSpace, b: &[PointId], a: &[PointId], iota: f64) -> bool {
    let tol = iota * (1.0 + 1e-9);
    let m = a.len();
    let mut reach: Vec<bool> = (0..m).map(|j| j == 0 && space.dist(b[0], a[0]) <= tol).collect();
    for &bi in &b[1..] {
        let mut any = false;
        for j in 0..m {
            any |= reach[j];
            reach[j] = any && space.dist(bi, a[j]) <= tol;
        }
    }
    reach[m - 1]
}

/// Positions of `pts` whose points all lie at least `rad` from `mid`,
/// counted from the front and from the back.
pub fn outer_runs(space: &MetricSpace, pts: &[PointId], mid: &[PointId], rad: f64) -> (usize, usize) {
    let far = |p: &&PointId| dist_to(space, **p, mid) >= rad * (1.0 - 1e-9);
    (pts.iter().take_while(far).count(), pts.iter().rev().take_while(far).count())
}

/// Undirected adjacency of the step graph, read from the distances.
pub fn step_graph(space: &MetricSpace) -> Vec<Vec<usize>> {
    let h = space.mesh_h() * (1.0 + 1e-9);
    let n = space.len();
    let mut adj = vec![Vec::new(); n];
    for a in 0..n {
        for b in a + 1..n {
            if space.dist(PointId(a), PointId(b)) <= h {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
    }
    adj
}

/// Maximum number of paths from `src` to `snk` inside `allowed` that share
/// no vertex, except that a lone terminal may be shared. Edmonds–Karp on the
/// node-split graph with a dense capacity matrix.
pub fn max_disjoint(adj: &[Vec<usize>], allowed: &[bool], src: &[usize], snk: &[usize]) -> usize {
    let n = adj.len();
    let (s, t) = (2 * n, 2 * n + 1);
    let size = 2 * n + 2;
    let big = i32::MAX / 4;
    let mut cap = vec![vec![0i32; size]; size];
    let lone_src = src.len() == 1;
    let lone_snk = snk.len() == 1;
    for v in 0..n {
        if !allowed[v] {
            continue;
        }
        let uncapped = (lone_src && src[0] == v) || (lone_snk && snk[0] == v);
        cap[2 * v][2 * v + 1] = if uncapped { big } else { 1 };
        for &w in &adj[v] {
            if allowed[w] {
                cap[2 * v + 1][2 * w] = 1;
            }
        }
    }
    for &v in src {
        cap[s][2 * v] = big;
    }
    for &v in snk {
        cap[2 * v + 1][t] = big;
    }
    let mut flow = 0usize;
    loop {
        let mut prev = vec![usize::MAX; size];
        prev[s] = s;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            if u == t {
                break;
            }
            for v in 0..size {
                if prev[v] == usize::MAX && cap[u][v] > 0 {
                    prev[v] = u;
                    q.push_back(v);
                }
            }
        }
        if prev[t] == usize::MAX {
            return flow;
        }
        let mut push = big;
        let mut v = t;
        while v != s {
            push = push.min(cap[prev[v]][v]);
            v = prev[v];
        }
        let mut v = t;
        while v != s {
            cap[prev[v]][v] -= push;
            cap[v][prev[v]] += push;
            v = prev[v];
        }
        flow += push as usize;
        if flow > n {
            return flow;
        }
    }
}

fn connected(adj: &[Vec<usize>], alive: &[bool], src: &[usize], snk: &[usize]) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut q: VecDeque<usize> = src.iter().copied().filter(|&v| alive[v]).collect();
    for &v in &q {
        seen[v] = true;
    }
    while let Some(u) = q.pop_front() {
        if snk.contains(&u) {
            return true;
        }
        for &w in &adj[u] {
            if alive[w] && !seen[w] {
                seen[w] = true;
                q.push_back(w);
            }
        }
    }
    false
}

/// Does removing `cut` leave no path from `src` to `snk` inside `allowed`?
pub fn separates(adj: &[Vec<usize>], allowed: &[bool], src: &[usize], snk: &[usize], cut: &[usize]) -> bool {
    let mut alive = allowed.to_vec();
    for &v in cut {
        alive[v] = false;
    }
    !connected(adj, &alive, src, snk)
}

/// Smallest vertex set of size at most `max` separating `src` from `snk`
/// inside `allowed`, by enumeration. Lone terminals are never removed, and
/// an edge between two lone terminals cannot be cut.
pub fn brute_cut(adj: &[Vec<usize>], allowed: &[bool], src: &[usize], snk: &[usize], max: usize) -> Option<usize> {
    let mut fixed: Vec<usize> = Vec::new();
    if src.len() == 1 {
        fixed.push(src[0]);
    }
    if snk.len() == 1 {
        fixed.push(snk[0]);
    }
    let cand: Vec<usize> = (0..adj.len()).filter(|&v| allowed[v] && !fixed.contains(&v)).collect();
    let mut alive = allowed.to_vec();
    for k in 0..=max {
        if search(adj, &mut alive, &cand, 0, k, src, snk) {
            return Some(k);
        }
    }
    None
}

fn search(
    adj: &[Vec<usize>],
    alive: &mut [bool],
    cand: &[usize],
    from: usize,
    left: usize,
    src: &[usize],
    snk: &[usize],
) -> bool {
    if left == 0 {
        return !connected(adj, alive, src, snk);
    }
    for i in from..cand.len() {
        alive[cand[i]] = false;
        let found = search(adj, alive, cand, i + 1, left - 1, src, snk);
        alive[cand[i]] = true;
        if found {
            return true;
        }
    }
    false
}
