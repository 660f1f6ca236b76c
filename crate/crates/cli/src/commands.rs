use std::fmt::Write as _;
use std::path::Path;

use necklace::bead::BeadAnalysis;
use necklace::bounds::bound_report;
use necklace::combinatorics::HigherOrder;
use necklace::io::{fmt_num, state_columns, DISTRIBUTION_HEADER};
use necklace::limit::{
    figure_profile, hold_coefficient, necklace_time_scale, optimal_hold, profile_deviation, rescaled_time,
    tv_curve, ProfileMode,
};
use necklace::necklace::{evolve, tv_distance, Distribution, NecklaceSpec, StateId};
use serde::Serialize;

use crate::output::{emit, json};
use crate::source::{resolve_bead, ChainArgs};
use crate::{CliError, Format, OutputArgs, TimeArgs};

/// Largest disagreement tolerated by `hot --oracle`.
const ORACLE_TOL: f64 = 1e-9;

fn parse_start(spec: &NecklaceSpec<f64>, start: &str) -> Result<(StateId, usize), CliError> {
    let id: StateId = start.parse().map_err(|e| CliError::Usage(format!("{e}")))?;
    let idx = spec
        .index(id)
        .ok_or_else(|| CliError::Usage(format!("state `{id}` does not exist in this chain")))?;
    Ok((id, idx))
}

fn resolve_time(spec: &NecklaceSpec<f64>, time: &TimeArgs) -> Result<u64, CliError> {
    match (time.t, time.c) {
        (Some(t), None) => Ok(t),
        (None, Some(c)) if c > 0.0 && c.is_finite() => Ok(necklace_time_scale(spec, c)),
        (None, Some(c)) => Err(CliError::Usage(format!("--c must be positive, got {c}"))),
        _ => Err(CliError::Usage("give exactly one of --t and --c".into())),
    }
}

fn metadata(out: &mut String, pairs: &[(&str, String)]) {
    for (k, v) in pairs {
        writeln!(out, "# {k}={v}").unwrap();
    }
}

fn chain_metadata(chain: &ChainArgs, spec: &NecklaceSpec<f64>) -> Vec<(&'static str, String)> {
    let r: String = spec.indicator().iter().map(|&b| if b { '1' } else { '0' }).collect();
    vec![
        ("bead", chain.bead_label()),
        ("n", spec.n().to_string()),
        ("m", spec.m().to_string()),
        ("r", r),
        ("mu", fmt_num(spec.bead().mu())),
        ("sigma2", fmt_num(spec.bead().sigma2())),
    ]
}

#[derive(Serialize)]
struct BeadReport {
    b: usize,
    mu: f64,
    sigma2: f64,
    span: usize,
    horizon: usize,
    tail_n0: usize,
    tail_alpha: f64,
    total_mass: f64,
    closure_stationary: Vec<f64>,
}

pub fn validate(bead: &str, output: &OutputArgs) -> Result<(), CliError> {
    let analysis = BeadAnalysis::new(resolve_bead(bead)?)?;
    let pmf = analysis.pmf();
    let tail = pmf.tail();
    let report = BeadReport {
        b: analysis.exit(),
        mu: analysis.mu(),
        sigma2: analysis.sigma2(),
        span: pmf.span(),
        horizon: pmf.horizon(),
        tail_n0: tail.n0,
        tail_alpha: tail.alpha,
        total_mass: pmf.total_mass(),
        closure_stationary: analysis.stationary().to_vec(),
    };
    let body = match output.format {
        Format::Json => json(&report),
        Format::Csv => {
            let mut s = String::from("key,value\n");
            let rows = [
                ("b", report.b.to_string()),
                ("mu", fmt_num(report.mu)),
                ("sigma2", fmt_num(report.sigma2)),
                ("span", report.span.to_string()),
                ("horizon", report.horizon.to_string()),
                ("tail_n0", report.tail_n0.to_string()),
                ("tail_alpha", fmt_num(report.tail_alpha)),
                ("total_mass", fmt_num(report.total_mass)),
            ];
            for (k, v) in rows {
                writeln!(s, "{k},{v}").unwrap();
            }
            s
        }
    };
    emit(output.out.as_deref(), "validate", &body)
}

#[derive(Serialize)]
struct StateRow {
    state_id: String,
    position: usize,
    kind: &'static str,
    k: usize,
    probability: f64,
    stationary: f64,
}

#[derive(Serialize)]
struct EvolveReport {
    n: usize,
    m: usize,
    t: u64,
    c: f64,
    start: String,
    tv: f64,
    states: Vec<StateRow>,
}

pub fn evolve_cmd(chain: &ChainArgs, time: &TimeArgs, start: &str, output: &OutputArgs) -> Result<(), CliError> {
    let spec = chain.resolve()?;
    let t = resolve_time(&spec, time)?;
    let (start_id, idx) = parse_start(&spec, start)?;
    let op = spec.operator();
    let dist = evolve(&op, &Distribution::point_mass(spec.num_states(), idx), t);
    let pi = spec.stationary();
    let tv = tv_distance(&dist, &pi)?;
    let c = rescaled_time(&spec, t);
    let body = match output.format {
        Format::Json => {
            let states = spec
                .states()
                .iter()
                .enumerate()
                .map(|(s, id)| StateRow {
                    state_id: id.to_string(),
                    position: id.position(),
                    kind: if id.is_link() { "link" } else { "interior" },
                    k: id.bead_index(),
                    probability: dist.probs()[s],
                    stationary: pi.probs()[s],
                })
                .collect();
            let report = EvolveReport { n: spec.n(), m: spec.m(), t, c, start: start_id.to_string(), tv, states };
            json(&report)
        }
        Format::Csv => {
            let mut s = String::new();
            let mut meta = vec![("command", "evolve".to_string())];
            meta.extend(chain_metadata(chain, &spec));
            meta.extend([("t", t.to_string()), ("c", fmt_num(c)), ("start", start_id.to_string())]);
            metadata(&mut s, &meta);
            writeln!(s, "{DISTRIBUTION_HEADER},stationary,tv_contribution").unwrap();
            for (i, id) in spec.states().iter().enumerate() {
                let (p, q) = (dist.probs()[i], pi.probs()[i]);
                writeln!(s, "{},{},{},{}", state_columns(*id), fmt_num(p), fmt_num(q), fmt_num((p - q).abs() / 2.0))
                    .unwrap();
            }
            writeln!(s, "# tv={}", fmt_num(tv)).unwrap();
            s
        }
    };
    emit(output.out.as_deref(), "evolve", &body)
}

#[derive(Serialize)]
struct ProfileRow {
    state_id: String,
    x: f64,
    y: f64,
    position: usize,
    kind: &'static str,
}

#[derive(Serialize)]
struct FigureReport {
    mode: String,
    n: usize,
    m: usize,
    t: u64,
    c: f64,
    max_deviation: Option<f64>,
    points: Vec<ProfileRow>,
}

pub fn figure(
    chain: &ChainArgs,
    time: &TimeArgs,
    start: &str,
    mode: &str,
    output: &OutputArgs,
) -> Result<(), CliError> {
    let mode: ProfileMode = mode.parse().map_err(|e| CliError::Usage(format!("{e}")))?;
    let spec = chain.resolve()?;
    let t = resolve_time(&spec, time)?;
    let (start_id, _) = parse_start(&spec, start)?;
    let op = spec.operator();
    let points = figure_profile(&spec, &op, t, start_id, mode)?;
    let c = rescaled_time(&spec, t);
    let deviation = match mode {
        ProfileMode::Normalized => Some(profile_deviation(&points, c)?),
        _ => None,
    };
    let rows: Vec<ProfileRow> = points
        .iter()
        .map(|p| ProfileRow {
            state_id: p.state.to_string(),
            x: p.x,
            y: p.y,
            position: p.state.position(),
            kind: if p.state.is_link() { "link" } else { "interior" },
        })
        .collect();
    let body = match output.format {
        Format::Json => json(&FigureReport {
            mode: mode.to_string(),
            n: spec.n(),
            m: spec.m(),
            t,
            c,
            max_deviation: deviation,
            points: rows,
        }),
        Format::Csv => {
            let mut s = String::new();
            let mut meta = vec![("command", "figure".to_string()), ("mode", mode.to_string())];
            meta.extend(chain_metadata(chain, &spec));
            meta.extend([("t", t.to_string()), ("c", fmt_num(c)), ("start", start_id.to_string())]);
            metadata(&mut s, &meta);
            writeln!(s, "state_id,x,y,position,kind").unwrap();
            for r in &rows {
                writeln!(s, "{},{},{},{},{}", r.state_id, fmt_num(r.x), fmt_num(r.y), r.position, r.kind).unwrap();
            }
            if let Some(d) = deviation {
                writeln!(s, "# max_deviation={}", fmt_num(d)).unwrap();
            }
            s
        }
    };
    emit(output.out.as_deref(), "figure", &body)
}

#[derive(Serialize)]
struct TvRow {
    c: f64,
    t: u64,
    tv_exact: f64,
    tv_limit: f64,
    abs_diff: f64,
}

pub fn tv(chain: &ChainArgs, cs: &[f64], start: &str, output: &OutputArgs) -> Result<(), CliError> {
    if let Some(bad) = cs.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
        return Err(CliError::Usage(format!("--c values must be positive, got {bad}")));
    }
    let spec = chain.resolve()?;
    let (start_id, _) = parse_start(&spec, start)?;
    let op = spec.operator();
    let curve = tv_curve(&spec, &op, start_id, cs)?;
    let rows: Vec<TvRow> = curve
        .iter()
        .map(|p| TvRow { c: p.c, t: p.t, tv_exact: p.exact, tv_limit: p.limit, abs_diff: (p.exact - p.limit).abs() })
        .collect();
    let body = match output.format {
        Format::Json => json(&rows),
        Format::Csv => {
            let mut s = String::new();
            let mut meta = vec![("command", "tv".to_string())];
            meta.extend(chain_metadata(chain, &spec));
            meta.push(("start", start_id.to_string()));
            metadata(&mut s, &meta);
            writeln!(s, "c,t,tv_exact,tv_limit,abs_diff").unwrap();
            for r in &rows {
                writeln!(s, "{},{},{},{},{}", fmt_num(r.c), r.t, fmt_num(r.tv_exact), fmt_num(r.tv_limit), fmt_num(r.abs_diff))
                    .unwrap();
            }
            s
        }
    };
    emit(output.out.as_deref(), "tv", &body)
}

pub fn bounds(n: usize, p: f64, eps: f64, out: Option<&Path>) -> Result<(), CliError> {
    if n < 5 {
        return Err(CliError::Usage(format!("--n must be at least 5, got {n}")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(CliError::Usage(format!("--p must lie in (0, 1), got {p}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(CliError::Usage(format!("--eps must lie in (0, 1), got {eps}")));
    }
    let fill_times: Vec<u64> = (0..=40).map(|i| i * 250).collect();
    let report = bound_report(n, p, eps, &fill_times)?;
    emit(out, "bounds", &json(&report))
}

#[derive(Serialize)]
struct HoldReport {
    k: f64,
    p: f64,
    coefficient: f64,
}

pub fn optimal_p(k: f64, output: &OutputArgs) -> Result<(), CliError> {
    if !(k > 0.0 && k <= 1.0) {
        return Err(CliError::Usage(format!("--k must lie in (0, 1], got {k}")));
    }
    let p = optimal_hold(k)?;
    let report = HoldReport { k, p, coefficient: hold_coefficient(p, k) };
    let body = match output.format {
        Format::Json => json(&report),
        Format::Csv => format!("k,p,coefficient\n{},{},{}\n", fmt_num(k), fmt_num(p), fmt_num(report.coefficient)),
    };
    emit(output.out.as_deref(), "optimal-p", &body)
}

#[derive(Serialize)]
struct HotRow {
    state_id: String,
    probability: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    evolve: Option<f64>,
}

#[derive(Serialize)]
struct HotReport {
    t: u64,
    start: String,
    max_abs_diff: Option<f64>,
    states: Vec<HotRow>,
}

pub fn hot(chain: &ChainArgs, t: u64, start: &str, oracle: bool, output: &OutputArgs) -> Result<(), CliError> {
    let spec = chain.resolve()?;
    let (start_id, idx) = parse_start(&spec, start)?;
    let horizon = usize::try_from(t).map_err(|_| CliError::Usage(format!("--t too large: {t}")))?;
    let hot = HigherOrder::new(&spec, horizon);
    let probs: Vec<f64> = spec
        .states()
        .iter()
        .map(|&target| hot.transition(horizon, start_id, target))
        .collect::<Result<_, _>>()?;
    let exact = oracle.then(|| evolve(&spec.operator(), &Distribution::point_mass(spec.num_states(), idx), t));
    let max_diff = exact
        .as_ref()
        .map(|d| probs.iter().zip(d.probs()).fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs())));
    let body = match output.format {
        Format::Json => {
            let states = spec
                .states()
                .iter()
                .enumerate()
                .map(|(s, id)| HotRow {
                    state_id: id.to_string(),
                    probability: probs[s],
                    evolve: exact.as_ref().map(|d| d.probs()[s]),
                })
                .collect();
            json(&HotReport { t, start: start_id.to_string(), max_abs_diff: max_diff, states })
        }
        Format::Csv => {
            let mut s = String::new();
            let mut meta = vec![("command", "hot".to_string())];
            meta.extend(chain_metadata(chain, &spec));
            meta.extend([("t", t.to_string()), ("start", start_id.to_string())]);
            metadata(&mut s, &meta);
            if exact.is_some() {
                writeln!(s, "{DISTRIBUTION_HEADER},evolve,abs_diff").unwrap();
            } else {
                writeln!(s, "{DISTRIBUTION_HEADER}").unwrap();
            }
            for (i, id) in spec.states().iter().enumerate() {
                write!(s, "{},{}", state_columns(*id), fmt_num(probs[i])).unwrap();
                if let Some(d) = &exact {
                    let e = d.probs()[i];
                    write!(s, ",{},{}", fmt_num(e), fmt_num((probs[i] - e).abs())).unwrap();
                }
                s.push('\n');
            }
            if let Some(d) = max_diff {
                writeln!(s, "# max_abs_diff={}", fmt_num(d)).unwrap();
            }
            s
        }
    };
    emit(output.out.as_deref(), "hot", &body)?;
    match max_diff {
        Some(d) if d >= ORACLE_TOL => Err(CliError::Check(format!("counting formulas and evolve differ by {d:e}"))),
        _ => Ok(()),
    }
}
