//! The `qcf` command line.
//!
//! Exit codes: 0 success, 2 a verification scan failed, 3 the construction
//! failed, 4 bad input.

use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use qcf_core::arc::{measure_lambda, DiscreteArc, Locality};
use qcf_core::circle::{circle_through_points, CircleConfig, SeparationSearch};
use qcf_core::invariants::{evaluate_sample, merge_outcomes, plan_samples, SampleOutcome};
use qcf_core::space::{circle, glued_squares, grid_square, sierpinski_carpet, MetricSpace, PointId};
use qcf_core::split::{bogensatz, split_quasi_arc, SplitConfig};
use qcf_core::straighten::{straighten, JoinConfig, StraightenMode};
use serde_json::{json, Value};

use crate::io::{self, CurveDoc, IoError};
use crate::report::{self, Check};
use crate::svg::{self, Curve};
use crate::verify;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 2;
pub const EXIT_CONSTRUCT: i32 = 3;
pub const EXIT_INPUT: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "qcf", version, about = "Quasi-arcs and quasi-circles in finite metric spaces")]
pub struct Cli {
    /// Seed for separated-arc restarts and invariant sampling.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Verification scans ignore points closer than this many mesh steps to an arc's ends.
    #[arg(long, global = true, default_value_t = 4.0)]
    pub mesh_floor_mult: f64,
    /// Output file.
    #[arg(short = 'o', long = "out", global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Kind {
    Grid,
    Carpet,
    Circle,
    Glued,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Write a generated space.
    Generate {
        kind: Kind,
        /// Grid cells per side, or points on the circle.
        #[arg(long, default_value_t = 16)]
        k: usize,
        /// Carpet level.
        #[arg(long, default_value_t = 2)]
        level: u32,
    },
    /// Estimate doubling, linear connectivity and annular linear connectivity.
    Invariants {
        space: PathBuf,
        #[arg(long, default_value_t = 64)]
        samples: usize,
    },
    /// Straighten an arc into a local quasi-arc that follows it.
    Straighten {
        space: PathBuf,
        #[arg(long)]
        arc: PathBuf,
        #[arg(long)]
        eps: f64,
        /// Working linear connectivity constant.
        #[arg(long, default_value_t = 1.0)]
        l: f64,
        /// Positions `a1,a2` of the middle piece; whole arc when absent.
        #[arg(long, value_delimiter = ',', num_args = 2)]
        three_piece: Option<Vec<usize>>,
    },
    /// Split a quasi-arc into two relatively separated arcs.
    Split {
        space: PathBuf,
        #[arg(long)]
        arc: PathBuf,
        #[arg(long, default_value_t = 0.3)]
        eps: f64,
        /// Quasi-arc constant of the input; measured when absent.
        #[arg(long)]
        lambda0: Option<f64>,
        /// Working linear connectivity constant.
        #[arg(long, default_value_t = 1.0)]
        l: f64,
    },
    /// Join two points by n arcs, any two of which form a quasi-circle.
    Bogensatz {
        space: PathBuf,
        #[arg(long)]
        x: usize,
        #[arg(long)]
        y: usize,
        #[arg(long)]
        n: usize,
        /// Working linear connectivity constant.
        #[arg(long, default_value_t = 1.0)]
        l: f64,
    },
    /// Build a quasi-circle through the given points.
    Circle {
        space: PathBuf,
        /// Point indices, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        points: Vec<usize>,
        /// Working linear connectivity constant.
        #[arg(long, default_value_t = 1.0)]
        l: f64,
        /// Working quasi-circle constant for the smaller circles.
        #[arg(long, default_value_t = 1.0)]
        lambda1: f64,
    },
    /// Draw a space with curves on it as SVG.
    Render {
        space: PathBuf,
        curves: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        marks: Vec<usize>,
    },
    /// Re-run the scanners on a stored curve.
    Verify {
        space: PathBuf,
        curve: PathBuf,
        #[arg(long, value_delimiter = ',')]
        contains: Vec<usize>,
    },
}

/// What a command produced: text for stdout and an exit code.
#[derive(Debug)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

fn input(e: impl std::fmt::Display) -> Outcome {
    Outcome { stdout: String::new(), stderr: format!("error: {e}\n"), code: EXIT_INPUT }
}

fn construct(e: impl std::fmt::Display) -> Outcome {
    Outcome { stdout: String::new(), stderr: format!("construction failed: {e}\n"), code: EXIT_CONSTRUCT }
}

fn finish(mut v: Value, checks: &[Check]) -> Outcome {
    let passed = checks.iter().all(|c| c.pass);
    v["verification"] = report::checks(checks);
    Outcome {
        stdout: io::to_text(&v),
        stderr: if passed { String::new() } else { "verification failed\n".into() },
        code: if passed { EXIT_OK } else { EXIT_VERIFY },
    }
}

fn points(space: &MetricSpace, ids: &[usize]) -> Result<Vec<PointId>, Outcome> {
    ids.iter()
        .map(|&i| if i < space.len() { Ok(PointId(i)) } else { Err(input(format!("point {i} outside the space"))) })
        .collect()
}

fn write_out(out: &Option<PathBuf>, v: &Value) -> Result<(), Outcome> {
    match out {
        Some(p) => io::write_json(p, v).map_err(input),
        None => Ok(()),
    }
}

fn curves_json(docs: &[CurveDoc]) -> Value {
    json!({"curves": docs.iter().map(CurveDoc::to_json).collect::<Vec<_>>()})
}

/// Worker count from `QCF_THREADS`, else the available parallelism.
pub fn threads() -> usize {
    std::env::var("QCF_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, NonZeroUsize::get))
}

/// Evaluates the planned samples on up to [`threads`] workers; the result
/// does not depend on the worker count.
pub fn sample_invariants_parallel(space: &MetricSpace, samples: usize, seed: u64) -> Result<Value, String> {
    let plan = plan_samples(space, samples, seed);
    let diam = space.diameter();
    let workers = threads().min(plan.len().max(1));
    let chunk = plan.len().div_ceil(workers).max(1);
    let outcomes: Vec<SampleOutcome> = std::thread::scope(|sc| {
        let handles: Vec<_> = plan
            .chunks(chunk)
            .map(|part| sc.spawn(move || part.iter().map(|s| evaluate_sample(space, s, diam)).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("sampler thread")).collect()
    });
    merge_outcomes(outcomes, seed).map(|r| report::invariants(&r)).map_err(|e| e.to_string())
}

fn load(path: &Path) -> Result<MetricSpace, Outcome> {
    io::load_space(path).map_err(input)
}

fn load_arc(space: &MetricSpace, path: &Path) -> Result<DiscreteArc, Outcome> {
    let docs = io::load_curves(path).map_err(input)?;
    let doc = docs.into_iter().next().ok_or_else(|| input("no curve in file"))?;
    doc.check_space(space).map_err(input)?;
    if doc.cyclic {
        return Err(input("expected an arc, found a circle"));
    }
    doc.to_arc(space).map_err(input)
}

pub fn run(cli: &Cli) -> Outcome {
    match execute(cli) {
        Ok(o) | Err(o) => o,
    }
}

fn execute(cli: &Cli) -> Result<Outcome, Outcome> {
    let search = SeparationSearch { seed: cli.seed, ..SeparationSearch::default() };
    match &cli.cmd {
        Cmd::Generate { kind, k, level } => {
            let space = match kind {
                Kind::Grid => grid_square(*k),
                Kind::Carpet => sierpinski_carpet(*level),
                Kind::Circle => circle(*k),
                Kind::Glued => glued_squares(*k).map(|(s, _)| s),
            }
            .map_err(input)?;
            let v = io::space_to_json(&space);
            match &cli.out {
                Some(_) => {
                    write_out(&cli.out, &v)?;
                    Ok(Outcome { stdout: String::new(), stderr: String::new(), code: EXIT_OK })
                }
                None => Ok(Outcome { stdout: io::to_text(&v), stderr: String::new(), code: EXIT_OK }),
            }
        }
        Cmd::Invariants { space, samples } => {
            let space = load(space)?;
            let v = sample_invariants_parallel(&space, *samples, cli.seed).map_err(input)?;
            let passed = v["alc_passed"] == Value::Bool(true);
            write_out(&cli.out, &v)?;
            Ok(Outcome {
                stdout: io::to_text(&v),
                stderr: if passed { String::new() } else { "annular linear connectivity fails\n".into() },
                code: if passed { EXIT_OK } else { EXIT_VERIFY },
            })
        }
        Cmd::Straighten { space, arc, eps, l, three_piece } => {
            let space = load(space)?;
            let a = load_arc(&space, arc)?;
            let mode = match three_piece.as_deref() {
                Some([a1, a2]) => StraightenMode::ThreePiece { a1: *a1, a2: *a2 },
                _ => StraightenMode::WholeArc,
            };
            let out = straighten(&space, &a, *eps, mode, &JoinConfig::new(*l)).map_err(construct)?;
            let sref = io::space_ref(&space);
            write_out(&cli.out, &CurveDoc::arc(&sref, &out.arc).to_json())?;
            let checks = verify::straightened(&space, &a, &out, *eps, three_piece.is_some());
            let v = json!({"arc": CurveDoc::arc(&sref, &out.arc).to_json(), "report": report::straightened(&out)});
            Ok(finish(v, &checks))
        }
        Cmd::Split { space, arc, eps, lambda0, l } => {
            let space = load(space)?;
            let a = load_arc(&space, arc)?;
            let lambda0 = lambda0.unwrap_or_else(|| measure_lambda(&space, &a, Locality::Global).lambda_measured);
            let cfg = SplitConfig { search, ..SplitConfig::new(*l) };
            let s = split_quasi_arc(&space, &a, lambda0, *eps, &cfg).map_err(construct)?;
            let sref = io::space_ref(&space);
            let docs = [CurveDoc::arc(&sref, &s.j), CurveDoc::arc(&sref, &s.j2)];
            write_out(&cli.out, &curves_json(&docs))?;
            let checks = verify::split(&space, &a, &s, *eps, cli.mesh_floor_mult * space.mesh_h());
            let v = json!({"curves": curves_json(&docs)["curves"], "report": report::split(&s.report)});
            Ok(finish(v, &checks))
        }
        Cmd::Bogensatz { space, x, y, n, l } => {
            let space = load(space)?;
            let xy = points(&space, &[*x, *y])?;
            let cfg = SplitConfig { search, ..SplitConfig::new(*l) };
            let (arcs, r) = bogensatz(&space, xy[0], xy[1], *n, &cfg).map_err(construct)?;
            let sref = io::space_ref(&space);
            let docs: Vec<CurveDoc> = arcs.iter().map(|a| CurveDoc::arc(&sref, a)).collect();
            write_out(&cli.out, &curves_json(&docs))?;
            let checks = verify::bogensatz(&space, xy[0], xy[1], &arcs, &r, cli.mesh_floor_mult * space.mesh_h());
            let v = json!({"curves": curves_json(&docs)["curves"], "report": report::bogensatz(&r)});
            Ok(finish(v, &checks))
        }
        Cmd::Circle { space, points: ids, l, lambda1 } => {
            let space = load(space)?;
            let t = points(&space, ids)?;
            let cfg = CircleConfig { lambda1: *lambda1, search, ..CircleConfig::new(*l) };
            let out = circle_through_points(&space, &t, &cfg).map_err(|e| {
                let mut o = construct(&e);
                if let qcf_core::circle::CircleError::Traced { trace, .. } = &e {
                    let steps: Vec<Value> = trace.iter().map(report::trace_step).collect();
                    o.stdout = io::to_text(&json!({"error": e.to_string(), "trace": steps}));
                }
                o
            })?;
            let sref = io::space_ref(&space);
            let doc = CurveDoc::circle(&sref, &out.circle);
            write_out(&cli.out, &doc.to_json())?;
            let checks = verify::circle(&space, &t, &out);
            let v = json!({"circle": doc.to_json(), "report": report::circle(&out)});
            Ok(finish(v, &checks))
        }
        Cmd::Render { space, curves, marks } => {
            let space = load(space)?;
            let mut docs = Vec::new();
            for p in curves {
                for d in io::load_curves(p).map_err(input)? {
                    d.check_space(&space).map_err(input)?;
                    docs.push(d);
                }
            }
            let marks = points(&space, marks)?;
            let list: Vec<Curve<'_>> = docs.iter().map(|d| Curve { points: &d.points, cyclic: d.cyclic }).collect();
            let text = svg::render(&space, &list, &marks).map_err(input)?;
            match &cli.out {
                Some(p) => {
                    std::fs::write(p, text).map_err(|source| input(IoError::Write { path: p.clone(), source }))?;
                    Ok(Outcome { stdout: String::new(), stderr: String::new(), code: EXIT_OK })
                }
                None => Ok(Outcome { stdout: text, stderr: String::new(), code: EXIT_OK }),
            }
        }
        Cmd::Verify { space, curve, contains } => {
            let space = load(space)?;
            let want = points(&space, contains)?;
            let docs = io::load_curves(curve).map_err(input)?;
            let mut all = Vec::new();
            let mut lambdas = Vec::new();
            for d in &docs {
                d.check_space(&space).map_err(input)?;
                let (checks, lam) = verify::curve(&space, &d.points, d.cyclic, &want);
                all.extend(checks);
                lambdas.push(lam.map_or(Value::Null, io::num));
            }
            Ok(finish(json!({"lambda": lambdas}), &all))
        }
    }
}

/// Parses the arguments and runs; clap usage errors exit with the bad-input code.
pub fn main_with<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                Outcome { stdout: String::new(), stderr: text, code }
            } else {
                Outcome { stdout: text, stderr: String::new(), code }
            }
        }
    }
}
