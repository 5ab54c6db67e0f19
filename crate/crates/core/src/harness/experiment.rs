use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::factor::{gqr, grq};
use crate::gls::{gls_direct, mpgls, GlsProblem};
use crate::harness::generator::{gen_problem, GeneratorSpec, Problem, ProblemKind};
use crate::harness::metrics::{metric_er1_gls, metric_er2_gls, metric_err1_lse, metric_err2_lse};
use crate::krylov::{gmres_refine_gls, gmres_refine_lse, PrecondKind};
use crate::lse::{lse_direct, mplse, LseProblem};
use crate::refine::{PhaseTimings, RefinementConfig, RefinementTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Direct,
    ClassicalIr,
    GmresLeft,
    GmresBd,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Direct, Method::ClassicalIr, Method::GmresLeft, Method::GmresBd];

    pub fn label(self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::ClassicalIr => "ir",
            Method::GmresLeft => "gmres-left",
            Method::GmresBd => "gmres-bd",
        }
    }
}

/// `err1`/`err2` for LSE; for GLS they hold er-1 and er-2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    #[serde(with = "nonfinite")]
    pub err1: f64,
    #[serde(with = "nonfinite")]
    pub err2: f64,
}

/// JSON has no NaN or infinity; those go through as strings.
mod nonfinite {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_str(&x.to_string())
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => t.parse().map_err(|_| de::Error::custom(format!("not a number: {t:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub spec: GeneratorSpec,
    pub method: Method,
    pub metrics: Metrics,
    pub iterations: usize,
    pub inner_iterations: usize,
    /// `converged`, `max_iterations`, `diverged`, or `failed`.
    pub status: String,
    pub phase_timings: BTreeMap<String, f64>,
    pub error: Option<String>,
}

pub const PHASES: [&str; 6] = ["factorization", "init", "residual", "correction", "gmres", "other"];

fn timing_map(t: &PhaseTimings) -> BTreeMap<String, f64> {
    let v = [t.factorization, t.init, t.residual, t.correction, t.gmres, t.other];
    PHASES.iter().zip(v).map(|(k, s)| (k.to_string(), s.max(0.0))).collect()
}

impl ExperimentReport {
    fn failed(spec: &GeneratorSpec, method: Method, err: String) -> Self {
        ExperimentReport {
            spec: *spec,
            method,
            metrics: Metrics { err1: f64::NAN, err2: f64::NAN },
            iterations: 0,
            inner_iterations: 0,
            status: "failed".into(),
            phase_timings: timing_map(&PhaseTimings::default()),
            error: Some(err),
        }
    }

    /// Converged runs and direct solves.
    pub fn succeeded(&self) -> bool {
        self.status == "converged"
    }
}

struct Outcome {
    x: Vec<f64>,
    y: Vec<f64>,
    trace: Option<RefinementTrace>,
    timings: PhaseTimings,
}

fn run_lse(p: &LseProblem, method: Method, config: &RefinementConfig) -> Result<Outcome> {
    let (x, trace) = match method {
        Method::Direct => {
            let mut t = PhaseTimings::default();
            let t0 = Instant::now();
            let f = grq(&p.b_mat, &p.a)?;
            t.factorization = t0.elapsed().as_secs_f64();
            let t0 = Instant::now();
            let x = lse_direct(&f, &p.b, &p.d)?.x;
            t.other = t0.elapsed().as_secs_f64();
            return Ok(Outcome { x, y: Vec::new(), trace: None, timings: t });
        }
        Method::ClassicalIr => mplse(p, config)?,
        Method::GmresLeft => gmres_refine_lse(p, config, PrecondKind::Left)?,
        Method::GmresBd => gmres_refine_lse(p, config, PrecondKind::BdSplit)?,
    };
    let timings = trace.timings;
    Ok(Outcome { x: x.x, y: Vec::new(), trace: Some(trace), timings })
}

fn run_gls(p: &GlsProblem, method: Method, config: &RefinementConfig) -> Result<Outcome> {
    let (st, trace) = match method {
        Method::Direct => {
            let mut t = PhaseTimings::default();
            let t0 = Instant::now();
            let f = gqr(&p.w, &p.v)?;
            t.factorization = t0.elapsed().as_secs_f64();
            let t0 = Instant::now();
            let st = gls_direct(&f, &p.d)?;
            t.other = t0.elapsed().as_secs_f64();
            return Ok(Outcome { x: st.x, y: st.y, trace: None, timings: t });
        }
        Method::ClassicalIr => mpgls(p, config)?,
        Method::GmresLeft => gmres_refine_gls(p, config, PrecondKind::Left)?,
        Method::GmresBd => gmres_refine_gls(p, config, PrecondKind::BdSplit)?,
    };
    let timings = trace.timings;
    Ok(Outcome { x: st.x, y: st.y, trace: Some(trace), timings })
}

fn try_run(spec: &GeneratorSpec, method: Method, config: &RefinementConfig) -> Result<ExperimentReport> {
    let problem = gen_problem(spec)?;
    let (out, metrics) = match &problem {
        Problem::Lse(p) => {
            let x_ref = lse_direct(&grq(&p.b_mat, &p.a)?, &p.b, &p.d)?.x;
            let out = run_lse(p, method, config)?;
            let err2 = if method == Method::Direct { 0.0 } else { metric_err2_lse(p, &out.x, &x_ref)? };
            let m = Metrics { err1: metric_err1_lse(p, &out.x)?, err2 };
            (out, m)
        }
        Problem::Gls(p) => {
            let y_ref = gls_direct(&gqr(&p.w, &p.v)?, &p.d)?.y;
            let out = run_gls(p, method, config)?;
            let err2 = if method == Method::Direct { 0.0 } else { metric_er2_gls(&out.y, &y_ref) };
            let m = Metrics { err1: metric_er1_gls(p, &out.x, &out.y)?, err2 };
            (out, m)
        }
    };
    let (iterations, inner, status) = match &out.trace {
        Some(t) => (t.iterations, t.inner_iterations, t.status.as_str().to_string()),
        None => (0, 0, "converged".to_string()),
    };
    Ok(ExperimentReport {
        spec: *spec,
        method,
        metrics,
        iterations,
        inner_iterations: inner,
        status,
        phase_timings: timing_map(&out.timings),
        error: None,
    })
}

/// Generate, solve, and score one cell. Errors, including panics inside
/// the solver, end up in `status` and `error`.
pub fn run_experiment(spec: &GeneratorSpec, method: Method, config: &RefinementConfig) -> ExperimentReport {
    match std::panic::catch_unwind(|| try_run(spec, method, config)) {
        Ok(Ok(r)) => r,
        Ok(Err(e)) => ExperimentReport::failed(spec, method, e.to_string()),
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "solver panicked".into());
            ExperimentReport::failed(spec, method, msg)
        }
    }
}

/// Thread cap from `MIXEDLS_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var("MIXEDLS_THREADS").ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Run cells in parallel; reports come back in input order.
pub fn run_all(cells: &[(GeneratorSpec, Method)], config: &RefinementConfig) -> Vec<ExperimentReport> {
    let work = || cells.par_iter().map(|(s, m)| run_experiment(s, *m, config)).collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap() {
        builder = builder.num_threads(n);
    }
    match builder.build() {
        Ok(pool) => pool.install(work),
        Err(_) => cells.iter().map(|(s, m)| run_experiment(s, *m, config)).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Desk,
    Full,
}

pub const SWEEP_CONDS: [f64; 4] = [1e3, 1e5, 1e7, 1e9];

pub const SWEEP_METHODS: [Method; 3] = [Method::ClassicalIr, Method::GmresLeft, Method::GmresBd];

/// `(m, n, p)` per scale. GLS dims follow the generator's convention, with
/// `W` `n x m` and `V` `n x p`.
pub fn sweep_dims(kind: ProblemKind, scale: Scale) -> Vec<(usize, usize, usize)> {
    match (kind, scale) {
        (ProblemKind::Lse, Scale::Desk) => vec![(2048, 256, 8)],
        (ProblemKind::Lse, Scale::Full) => [1024, 2048, 3072].iter().map(|&n| (8 * n, n, n / 32)).collect(),
        (ProblemKind::Gls, Scale::Desk) => vec![(16, 512, 576)],
        (ProblemKind::Gls, Scale::Full) => [1024, 2048, 3072].iter().map(|&n| (n / 32, n, 8 * n)).collect(),
    }
}

pub fn sweep_cells(kind: ProblemKind, scale: Scale, seed: u64) -> Vec<(GeneratorSpec, Method)> {
    let mut cells = Vec::new();
    for (m, n, p) in sweep_dims(kind, scale) {
        let conds = if kind == ProblemKind::Gls { &SWEEP_CONDS[..3] } else { &SWEEP_CONDS[..] };
        for &cond in conds {
            let spec = GeneratorSpec { kind, ..GeneratorSpec::lse(m, n, p, cond, seed) };
            for &method in &SWEEP_METHODS {
                cells.push((spec, method));
            }
        }
    }
    cells
}

fn fmt_sci(x: f64) -> String {
    if x.is_finite() { format!("{x:.1e}") } else { format!("{x}") }
}

/// Accuracy table: one block of rows per method and dims, one column per
/// condition number.
pub fn format_table(reports: &[ExperimentReport]) -> String {
    let mut conds: Vec<f64> = Vec::new();
    let mut keys: Vec<(Method, (usize, usize, usize))> = Vec::new();
    for r in reports {
        if !conds.contains(&r.spec.cond) {
            conds.push(r.spec.cond);
        }
        if !keys.contains(&(r.method, r.spec.dims)) {
            keys.push((r.method, r.spec.dims));
        }
    }
    conds.sort_by(f64::total_cmp);
    let lse = reports.first().map_or(true, |r| r.spec.kind == ProblemKind::Lse);
    let names = if lse { ["err-1", "err-2"] } else { ["er-1", "er-2"] };
    let mut out = format!("{:<28}{:<8}", "method (m,n,p)", "");
    for c in &conds {
        out += &format!("{:>14}", format!("k={c:.0e}"));
    }
    out.push('\n');
    for (method, dims) in keys {
        let row = |f: &dyn Fn(&ExperimentReport) -> String| {
            conds
                .iter()
                .map(|c| {
                    reports
                        .iter()
                        .find(|r| r.method == method && r.spec.dims == dims && r.spec.cond == *c)
                        .map_or("-".to_string(), f)
                })
                .map(|s| format!("{s:>14}"))
                .collect::<String>()
        };
        let label = format!("{} {:?}", method.label(), dims);
        out += &format!("{label:<28}{:<8}{}\n", names[0], row(&|r| fmt_sci(r.metrics.err1)));
        out += &format!("{:<28}{:<8}{}\n", "", names[1], row(&|r| fmt_sci(r.metrics.err2)));
        out += &format!(
            "{:<28}{:<8}{}\n",
            "",
            "iter",
            row(&|r| match r.status.as_str() {
                "converged" if r.method == Method::ClassicalIr => r.iterations.to_string(),
                "converged" => format!("{}/{}", r.iterations, r.inner_iterations),
                "max_iterations" => "maxit".to_string(),
                "diverged" => "diverge".to_string(),
                s => s.to_string(),
            })
        );
    }
    out
}
