//! Report emitters. Column orders are fixed; floats are printed as the
//! shortest decimal that parses back to the same double.

use std::fmt::Write as _;

use moduli_core::aai::{level_name, AaiProfile, GateTable};
use moduli_core::eval::EvalReport;
use moduli_core::geometry::{CoverageCertificate, DistanceMatrix, NetReport};
use moduli_core::gvu::{FlowTrace, KappaEstimate, VarianceReport};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::formats::fmt_f64;

pub const EVAL_HEADER: &str = "battery_id,agent_id,n,S_hat,ci,F,resource_time,resource_calls";

pub const CURVE_HEADER: &str = "eta,predicted_closed_form,predicted_taylor,noiseless_exact,measured_mean,measured_stderr,measured_lcb,measured_ucb,taylor_slack";

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn eval_csv(reports: &[EvalReport]) -> String {
    let mut s = format!("{EVAL_HEADER}\n");
    for r in reports {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.battery_id,
            r.agent_id,
            r.n,
            fmt_f64(r.s_hat),
            fmt_f64(r.ci_halfwidth),
            fmt_f64(r.f_value),
            fmt_f64(r.resource_spent.time),
            fmt_f64(r.resource_spent.calls),
        );
    }
    s
}

/// Header `replica,t,F,grad_norm_sq,z_norm,r_mean,theta_0,…`. The step
/// summaries are empty on each replica's final row.
pub fn trace_csv(traces: &[FlowTrace]) -> String {
    let dim = traces
        .iter()
        .flat_map(|t| t.entries.first())
        .map(|e| e.theta.len())
        .next()
        .unwrap_or(0);
    let mut s = String::from("replica,t,F,grad_norm_sq,z_norm,r_mean");
    for i in 0..dim {
        let _ = write!(s, ",theta_{i}");
    }
    s.push('\n');
    for tr in traces {
        for e in &tr.entries {
            let _ = write!(
                s,
                "{},{},{},{},{},{}",
                tr.replica,
                e.t,
                fmt_f64(e.f),
                fmt_f64(e.grad_norm_sq),
                opt(e.z_norm),
                opt(e.r_mean)
            );
            for x in &e.theta {
                let _ = write!(s, ",{}", fmt_f64(*x));
            }
            s.push('\n');
        }
    }
    s
}

pub type ReplicaSeries = (u64, Vec<f64>, Vec<f64>);

/// (t, F) series per replica from a trace CSV, in file order.
pub fn parse_trace_csv(text: &str) -> Result<Vec<ReplicaSeries>, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty trace file")?;
    if !header.starts_with("replica,t,F,") {
        return Err(format!("unexpected trace header `{header}`"));
    }
    let mut out: Vec<(u64, Vec<f64>, Vec<f64>)> = Vec::new();
    for (i, line) in lines.enumerate() {
        let mut cols = line.split(',');
        let mut next = |name: &str| {
            cols.next()
                .ok_or_else(|| format!("line {}: missing {name}", i + 2))
        };
        let replica: u64 = next("replica")?
            .parse()
            .map_err(|e| format!("line {}: replica: {e}", i + 2))?;
        let t: f64 = next("t")?
            .parse()
            .map_err(|e| format!("line {}: t: {e}", i + 2))?;
        let f: f64 = next("F")?
            .parse()
            .map_err(|e| format!("line {}: F: {e}", i + 2))?;
        match out.last_mut() {
            Some((r, ts, fs)) if *r == replica => {
                ts.push(t);
                fs.push(f);
            }
            _ => out.push((replica, vec![t], vec![f])),
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct KappaJson {
    kappa_hat: f64,
    stderr: Option<f64>,
    ci_halfwidth: Option<f64>,
    lcb: Option<f64>,
    ucb: Option<f64>,
    class: &'static str,
    window: usize,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn kappa_json(k: &KappaEstimate) -> KappaJson {
    KappaJson {
        kappa_hat: k.kappa_hat,
        stderr: finite(k.stderr),
        ci_halfwidth: finite(k.ci_halfwidth),
        lcb: finite(k.lcb),
        ucb: finite(k.ucb),
        class: k.class.id(),
        window: k.window,
    }
}

/// One line per replica: κ̂, its interval and class. Non-finite bounds are
/// printed as `inf`.
pub fn kappa_table(rows: &[(u64, Option<String>, Result<KappaEstimate, String>)]) -> String {
    let mut s = String::from(
        "replica  kappa_hat              lcb                    ucb                    class\n",
    );
    for (replica, aborted, k) in rows {
        match k {
            Ok(k) => {
                let _ = write!(
                    s,
                    "{replica:<8} {:<22} {:<22} {:<22} {}",
                    fmt_f64(k.kappa_hat),
                    fmt_f64(k.lcb),
                    fmt_f64(k.ucb),
                    k.class.id()
                );
            }
            Err(e) => {
                let _ = write!(s, "{replica:<8} no estimate: {e}");
            }
        }
        if let Some(a) = aborted {
            let _ = write!(s, "  (aborted: {a})");
        }
        s.push('\n');
    }
    s
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

#[derive(Serialize)]
struct CurveJson {
    eta: f64,
    predicted_closed_form: f64,
    predicted_taylor: f64,
    noiseless_exact: f64,
    measured_mean: f64,
    measured_stderr: f64,
    measured_lcb: f64,
    measured_ucb: f64,
    taylor_slack: f64,
}

#[derive(Serialize)]
struct VarianceJson<'a> {
    theta: &'a [f64],
    updater: &'static str,
    derivative_source: &'a str,
    noise_combination: &'static str,
    grad: &'a [f64],
    hessian: Vec<Vec<f64>>,
    sigma_gv: Vec<Vec<f64>>,
    estimator_covariance: Option<Vec<Vec<f64>>>,
    grad_norm_sq: f64,
    trace_h_sigma: f64,
    curvature_noise_load: f64,
    eta_star_hat: f64,
    c_hat: Option<f64>,
    condition_holds: bool,
    taylor_condition_holds: bool,
    slack_c: f64,
    replicas: usize,
    curve: Vec<CurveJson>,
    notes: &'a [String],
}

pub fn variance_json(r: &VarianceReport) -> String {
    let v = VarianceJson {
        theta: &r.theta,
        updater: r.updater.id(),
        derivative_source: &r.derivative_source,
        noise_combination: "sum (independent generator and verifier noise)",
        grad: &r.grad,
        hessian: rows(&r.hessian),
        sigma_gv: rows(&r.sigma_gv),
        estimator_covariance: r.estimator_covariance.as_ref().map(rows),
        grad_norm_sq: r.grad_norm_sq,
        trace_h_sigma: r.trace_h_sigma,
        curvature_noise_load: r.curvature_noise_load,
        eta_star_hat: r.eta_star_hat,
        c_hat: r.c_hat,
        condition_holds: r.condition_holds,
        taylor_condition_holds: r.taylor_condition_holds,
        slack_c: r.slack_c,
        replicas: r.replicas,
        curve: r
            .curve
            .iter()
            .map(|c| CurveJson {
                eta: c.eta,
                predicted_closed_form: c.predicted_closed_form,
                predicted_taylor: c.predicted_taylor,
                noiseless_exact: c.noiseless_exact,
                measured_mean: c.measured_mean,
                measured_stderr: c.measured_stderr,
                measured_lcb: c.measured_lcb,
                measured_ucb: c.measured_ucb,
                taylor_slack: c.taylor_slack,
            })
            .collect(),
        notes: &r.notes,
    };
    crate::formats::to_json(&v)
}

pub fn curves_csv(r: &VarianceReport) -> String {
    let mut s = format!("{CURVE_HEADER}\n");
    for c in &r.curve {
        let cols = [
            c.eta,
            c.predicted_closed_form,
            c.predicted_taylor,
            c.noiseless_exact,
            c.measured_mean,
            c.measured_stderr,
            c.measured_lcb,
            c.measured_ucb,
            c.taylor_slack,
        ];
        let line: Vec<String> = cols.iter().map(|x| fmt_f64(*x)).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

/// Square matrix with rows and columns sorted by battery id.
pub fn distance_csv(dm: &DistanceMatrix) -> String {
    let mut order: Vec<usize> = (0..dm.len()).collect();
    order.sort_by(|&a, &b| dm.ids[a].cmp(&dm.ids[b]).then(a.cmp(&b)));
    let mut s = String::from("battery_id");
    for &j in &order {
        let _ = write!(s, ",{}", dm.ids[j]);
    }
    s.push('\n');
    for &i in &order {
        s.push_str(&dm.ids[i]);
        for &j in &order {
            let _ = write!(s, ",{}", fmt_f64(dm.get(i, j)));
        }
        s.push('\n');
    }
    s
}

/// Net file: the selected centers plus the law files they came from, so
/// that `cover` can reload them.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct NetFile {
    pub schema: String,
    pub k: usize,
    pub metric: String,
    pub radius: f64,
    pub epsilon_target: f64,
    pub centers: Vec<String>,
    pub center_laws: Vec<String>,
}

pub const NET_SCHEMA: &str = "moduli.net/1";

impl NetFile {
    pub fn new(net: &NetReport, k: usize, metric: String, law_paths: &[String]) -> Self {
        NetFile {
            schema: NET_SCHEMA.into(),
            k,
            metric,
            radius: net.radius,
            epsilon_target: net.epsilon_target,
            centers: net.centers.clone(),
            center_laws: net
                .center_indices
                .iter()
                .map(|&i| law_paths[i].clone())
                .collect(),
        }
    }
}

#[derive(Serialize)]
struct CoverageJson<'a> {
    pass: bool,
    lipschitz: f64,
    epsilon: f64,
    ci_slack: f64,
    field: String,
    max_residual: Option<f64>,
    max_distance: f64,
    worst_offender: &'a Option<String>,
    uncovered: &'a [String],
    conditional_on: &'static str,
}

pub fn coverage_json(
    c: &CoverageCertificate,
    l: f64,
    eps: f64,
    slack: f64,
    field: String,
) -> String {
    crate::formats::to_json(&CoverageJson {
        pass: c.pass,
        lipschitz: l,
        epsilon: eps,
        ci_slack: slack,
        field,
        max_residual: finite(c.max_residual),
        max_distance: c.max_distance,
        worst_offender: &c.worst_offender,
        uncovered: &c.uncovered,
        conditional_on: "the supplied Lipschitz constant",
    })
}

#[derive(Serialize)]
struct BatteryScoreJson<'a> {
    battery_id: &'a str,
    f_value: f64,
}

#[derive(Serialize)]
struct ProfileJson<'a> {
    agent_id: &'a str,
    family_scores: &'a std::collections::BTreeMap<String, f64>,
    per_battery: std::collections::BTreeMap<&'a str, Vec<BatteryScoreJson<'a>>>,
    robustness_evidence: &'a std::collections::BTreeMap<String, f64>,
    level: Option<u8>,
    level_label: Option<String>,
    notes: Vec<String>,
    kappa: Option<KappaJson>,
    gates: GatesSummary<'a>,
}

#[derive(Serialize)]
struct GatesSummary<'a> {
    drift_tolerance: &'a [f64],
    kappa_requirement_level4: f64,
}

pub fn profile_json(p: &AaiProfile, gates: &GateTable, kappa: Option<&KappaEstimate>) -> String {
    let level = p.level.as_ref().and_then(|l| l.level);
    crate::formats::to_json(&ProfileJson {
        agent_id: &p.agent_id,
        family_scores: &p.family_scores,
        per_battery: p
            .per_battery
            .iter()
            .map(|(f, v)| {
                (
                    f.as_str(),
                    v.iter()
                        .map(|b| BatteryScoreJson {
                            battery_id: &b.battery_id,
                            f_value: b.f_value,
                        })
                        .collect(),
                )
            })
            .collect(),
        robustness_evidence: &p.robustness_evidence,
        level,
        level_label: level.map(|l| format!("AAI-{l} ({})", level_name(l))),
        notes: p
            .level
            .as_ref()
            .map(|l| l.notes.clone())
            .unwrap_or_default(),
        kappa: kappa.map(kappa_json),
        gates: GatesSummary {
            drift_tolerance: &gates.drift_tolerance,
            kappa_requirement_level4: gates.kappa_requirement_level4,
        },
    })
}

pub fn profile_table(p: &AaiProfile) -> String {
    let mut s = format!(
        "agent {}\n{:<20} {:<22} {}\n",
        p.agent_id, "family", "F_f", "worst drift drop"
    );
    for (f, v) in &p.family_scores {
        let drop = p.robustness_evidence.get(f).copied();
        let _ = writeln!(s, "{f:<20} {:<22} {}", fmt_f64(*v), opt(drop));
    }
    match p.level.as_ref().and_then(|l| l.level) {
        Some(l) => {
            let _ = writeln!(s, "level AAI-{l} ({})", level_name(l));
        }
        None => s.push_str("level none (no gate passes)\n"),
    }
    for n in p.level.iter().flat_map(|l| &l.notes) {
        let _ = writeln!(s, "note: {n}");
    }
    s
}
