//! Reports as flat JSON objects.

use qcf_core::arc::{ConstructionReport, Locality};
use qcf_core::circle::{CircleCase, CircleOutput, ClusterBounds, TraceStep};
use qcf_core::invariants::InvariantsReport;
use qcf_core::space::PointId;
use qcf_core::split::{BogensatzReport, PieceKind, SplitReport};
use qcf_core::straighten::{JoinTrace, Straightened};
use serde_json::{json, Map, Value};

use crate::io::num;

fn pid(p: PointId) -> Value {
    Value::from(p.0)
}

fn pair(p: Option<(PointId, PointId)>) -> Value {
    match p {
        Some((a, b)) => json!([a.0, b.0]),
        None => Value::Null,
    }
}

fn opt(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

/// One verification scan: a measured value against its bound.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: Option<f64>,
    pub pass: bool,
}

impl Check {
    pub fn le(name: &str, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound: Some(bound), pass: value <= bound }
    }

    pub fn gt(name: &str, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound: Some(bound), pass: value > bound }
    }

    pub fn flag(name: &str, pass: bool) -> Self {
        Check { name: name.into(), value: f64::from(u8::from(pass)), bound: None, pass }
    }
}

pub fn checks(list: &[Check]) -> Value {
    let items: Vec<Value> = list
        .iter()
        .map(|c| json!({"name": c.name, "value": num(c.value), "bound": opt(c.bound), "pass": c.pass}))
        .collect();
    json!({"passed": list.iter().all(|c| c.pass), "checks": items})
}

pub fn construction(r: &ConstructionReport) -> Value {
    let locality = match r.locality {
        Locality::Global => Value::Null,
        Locality::Local(e) => num(e),
    };
    json!({
        "lambda_measured": num(r.lambda_measured),
        "lambda_witness": pair(r.lambda_witness),
        "locality": locality,
        "follows_iota": opt(r.follows_iota),
        "separation_eta": opt(r.separation_eta),
        "notes": r.notes,
    })
}

pub fn invariants(r: &InvariantsReport) -> Value {
    let mut witnesses = Vec::new();
    let d = &r.doubling.witness;
    witnesses.push(json!({
        "kind": "doubling", "center": pid(d.center), "radius": num(d.radius),
        "greedy": d.greedy.len(), "exact": d.exact,
    }));
    for w in &r.lc.witnesses {
        witnesses.push(json!({"kind": "lc", "x": pid(w.x), "y": pid(w.y), "budget": num(w.budget), "ratio": num(w.ratio)}));
    }
    for w in &r.alc.witnesses {
        witnesses.push(json!({
            "kind": "alc", "p": pid(w.p), "r": num(w.r), "x": pid(w.x), "y": pid(w.y), "factor": num(w.factor),
        }));
    }
    let failures: Vec<Value> = r
        .alc
        .failures
        .iter()
        .map(|f| json!({"p": pid(f.p), "r": num(f.r), "x": pid(f.x), "y": pid(f.y), "factor": num(f.factor)}))
        .collect();
    json!({
        "N": r.doubling.greedy,
        "N_exact": r.doubling.exact,
        "L_lc": num(r.lc.l),
        "L_alc": if r.alc.passed() { num(r.alc.l) } else { Value::Null },
        "alc_passed": r.alc.passed(),
        "alc_failures": failures,
        "witnesses": witnesses,
        "samples": r.samples,
        "seed": r.seed,
    })
}

fn join_trace(t: &JoinTrace) -> Value {
    json!({
        "iota": num(t.iota), "r": num(t.r), "r_floored": t.r_floored, "l": num(t.l), "delta": num(t.delta),
        "s": num(t.s), "S": num(t.big_s), "net_size": t.net_size, "chain_len": t.chain_len,
        "iota_eff": num(t.iota_eff), "kept_components": t.kept_components,
        "case_max": t.case_max.iter().map(|&(v, b)| json!([num(v), num(b)])).collect::<Vec<_>>(),
    })
}

pub fn straightened(s: &Straightened) -> Value {
    json!({
        "report": construction(&s.report),
        "iota_sum": num(s.iota_sum),
        "kept_components": s.kept_components,
        "passes": s.passes.iter().map(join_trace).collect::<Vec<_>>(),
    })
}

pub fn split(r: &SplitReport) -> Value {
    let records: Vec<Value> = r
        .records
        .iter()
        .map(|p| {
            let kind = match p.kind {
                PieceKind::Split => "split",
                PieceKind::Join => "join",
                PieceKind::End => "end",
            };
            json!({
                "i": p.i, "kind": kind, "sigma_split": opt(p.sigma_split), "sigma_join": opt(p.sigma_join),
                "lambda_local": num(p.lambda_local), "fallback": p.fallback, "follows": opt(p.follows),
                "straightened": p.straightened,
            })
        })
        .collect();
    let cases: Vec<Value> = r
        .cases
        .iter()
        .map(|c| {
            json!({"near": num(c.near), "across": num(c.across), "skip": num(c.skip),
                   "across_bound": num(c.across_bound), "skip_bound": num(c.skip_bound), "holds": c.holds()})
        })
        .collect();
    json!({
        "delta": num(r.delta), "d1": num(r.d1), "d2": num(r.d2), "depth": r.depth,
        "records": records, "lambda": num(r.lambda),
        "reports": r.reports.iter().map(construction).collect::<Vec<_>>(),
        "eps_measured": num(r.eps_measured), "eps_all": num(r.eps_all),
        "eta_measured": num(r.eta_measured), "eta_all": num(r.eta_all),
        "circle_lambda": num(r.circle_lambda), "circle_bound": num(r.circle_bound),
        "cases": cases, "notes": r.notes,
    })
}

pub fn bogensatz(r: &BogensatzReport) -> Value {
    json!({
        "levels": r.levels,
        "eta_levels": r.eta_levels.iter().map(|&x| num(x)).collect::<Vec<_>>(),
        "lambdas": r.lambdas.iter().map(|&x| num(x)).collect::<Vec<_>>(),
        "pair_eta": r.pair_eta.iter().map(|&(i, j, a, b)| json!([i, j, num(a), num(b)])).collect::<Vec<_>>(),
        "circles": r.circles.iter().map(|&(i, j, a, b)| json!([i, j, num(a), num(b)])).collect::<Vec<_>>(),
        "notes": r.notes,
    })
}

fn case_name(c: CircleCase) -> Value {
    match c {
        CircleCase::Single => json!("single"),
        CircleCase::Pair => json!("pair"),
        CircleCase::Spread => json!("spread"),
        CircleCase::Clustered { m } => json!({"clustered": m}),
        CircleCase::Mesh => json!("mesh"),
    }
}

pub fn trace_step(t: &TraceStep) -> Value {
    let mut th = Map::new();
    for x in &t.thresholds {
        th.insert(x.name.into(), json!({"value": num(x.value), "floored": x.floored}));
    }
    json!({
        "depth": t.depth,
        "points": t.points.iter().map(|p| p.0).collect::<Vec<_>>(),
        "case": case_name(t.case),
        "thresholds": th,
        "sigma": opt(t.sigma),
        "lambda": num(t.lambda),
        "notes": t.notes,
    })
}

fn cluster(c: &ClusterBounds) -> Value {
    json!({"D": num(c.d), "lambda1": num(c.lambda1), "near": num(c.near), "away": num(c.away),
           "mid": num(c.mid), "holds": c.holds()})
}

pub fn circle(o: &CircleOutput) -> Value {
    json!({
        "report": construction(&o.report),
        "diam_ratio": num(o.diam_ratio),
        "trace": o.trace.iter().map(trace_step).collect::<Vec<_>>(),
        "clusters": o.clusters.iter().map(cluster).collect::<Vec<_>>(),
    })
}
