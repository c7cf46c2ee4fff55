//! Executes a [`RunConfig`] and assembles the report.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::ambient::{ambient_selftest, WarpedAmbient};
use crate::config::{CheckSpec, RunConfig};
use crate::error::{Error, Result};
use crate::hypersurface::SurfaceFamily;
use crate::quadrature::{grid_for, sample_surface, SurfaceSample};
use crate::verify::{
    check_garding, check_hk, check_h2_integral, check_minkowski, classify, convergence_study,
    ConvergenceCheck, ConvergenceTable, Verdict,
};

pub const THREADS_ENV: &str = "WARPCURV_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Record {
    pub check: String,
    pub family: Option<String>,
    pub params: Option<Value>,
    pub resolution: Option<usize>,
    pub outcome: Outcome,
    pub values: Value,
    pub tolerances: Value,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
    pub errors: usize,
    pub exit_code: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    /// Seconds since the Unix epoch; absent in comparison mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<u64>,
    pub ambient: Value,
    pub resolution: usize,
    pub seed: u64,
    pub records: Vec<Record>,
    pub summary: Summary,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        self.summary.exit_code
    }

    /// Pretty JSON with keys sorted at every level.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("report serializes to JSON");
        let mut s = serde_json::to_string_pretty(&value).expect("JSON value prints");
        s.push('\n');
        s
    }

    /// One row per numeric leaf of every record's values.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io {
            path: "csv output".into(),
            source: e.into(),
        };
        w.write_record([
            "check",
            "family",
            "resolution",
            "outcome",
            "quantity",
            "value",
        ])
        .map_err(io)?;
        for r in &self.records {
            let mut leaves = Vec::new();
            flatten(&r.values, String::new(), &mut leaves);
            let outcome = serde_json::to_value(r.outcome).expect("outcome serializes");
            let outcome = outcome.as_str().unwrap_or_default();
            let family = r.family.clone().unwrap_or_default();
            let res = r.resolution.map(|x| x.to_string()).unwrap_or_default();
            if leaves.is_empty() {
                w.write_record([r.check.as_str(), &family, &res, outcome, "", ""])
                    .map_err(io)?;
            }
            for (key, v) in leaves {
                w.write_record([
                    r.check.as_str(),
                    &family,
                    &res,
                    outcome,
                    &key,
                    &format!("{v:e}"),
                ])
                .map_err(io)?;
            }
        }
        w.flush().map_err(|source| Error::Io {
            path: "csv output".into(),
            source,
        })
    }
}

fn flatten(v: &Value, prefix: String, out: &mut Vec<(String, f64)>) {
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Number(x) => out.extend(x.as_f64().map(|x| (prefix.clone(), x))),
        Value::Bool(b) => out.push((prefix.clone(), if *b { 1.0 } else { 0.0 })),
        Value::Object(m) => m.iter().for_each(|(k, v)| flatten(v, join(k), out)),
        Value::Array(a) => a
            .iter()
            .enumerate()
            .for_each(|(i, v)| flatten(v, join(&i.to_string()), out)),
        _ => {}
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub no_timestamp: bool,
}

/// Worker count from `--threads`, falling back to `WARPCURV_THREADS`.
pub fn resolve_threads(flag: Option<usize>) -> Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(s) if !s.trim().is_empty() => s.trim().parse::<usize>().map(Some).map_err(|_| {
            Error::InvalidArgument(format!("{THREADS_ENV} must be a thread count, got `{s}`"))
        }),
        _ => Ok(None),
    }
}

/// Runs `f` inside a dedicated pool when a thread count is given.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Error::InvalidArgument(
            "thread count must be positive".into(),
        )),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| Error::InvalidArgument(format!("cannot start {t} threads: {e}"))),
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes to JSON")
}

fn record_from<T: Serialize>(
    check: CheckSpec,
    family: Option<(&str, &SurfaceFamily)>,
    resolution: Option<usize>,
    tolerances: Value,
    result: Result<(T, Verdict)>,
) -> Record {
    let (outcome, values, error) = match result {
        Ok((report, verdict)) => (
            if verdict.passed() {
                Outcome::Pass
            } else {
                Outcome::Fail
            },
            to_value(&report),
            None,
        ),
        Err(e) => (Outcome::Error, Value::Null, Some(e.to_string())),
    };
    Record {
        check: check.to_string(),
        family: family.map(|(l, _)| l.to_string()),
        params: family.map(|(_, f)| to_value(f)),
        resolution,
        outcome,
        values,
        tolerances,
        error,
    }
}

fn run_family_check(
    check: CheckSpec,
    sample: &Result<SurfaceSample>,
    fam: &SurfaceFamily,
    amb: &WarpedAmbient,
    cfg: &RunConfig,
) -> Result<(Value, Verdict)> {
    let tol = &cfg.tolerances;
    let sample = || {
        sample
            .as_ref()
            .map_err(|e| Error::InvalidArgument(e.to_string()))
    };
    Ok(match check {
        CheckSpec::Hk => {
            let r = check_hk(sample()?, tol)?;
            (to_value(&r), r.verdict)
        }
        CheckSpec::Minkowski(k) => {
            let r = check_minkowski(k, sample()?, tol, cfg.allow_constant_curvature)?;
            (to_value(&r), r.verdict)
        }
        CheckSpec::Garding => {
            let r = check_garding(sample()?, tol)?;
            (to_value(&r), r.verdict)
        }
        CheckSpec::H2Integral => {
            let r = check_h2_integral(sample()?, tol)?;
            (to_value(&r), r.verdict)
        }
        CheckSpec::Alexandrov => {
            let r = classify(sample()?, tol);
            (to_value(&r), r.verdict)
        }
        CheckSpec::Convergence(c) => {
            let r = convergence_study(c, fam, amb, &cfg.convergence_resolutions, tol)?;
            (to_value(&r), r.verdict)
        }
        CheckSpec::AmbientSelftest => unreachable!("global checks are dispatched separately"),
    })
}

/// Executes every check of the configuration. Records follow declaration
/// order: checks in the order listed, and per-family checks over the families
/// in the order listed.
pub fn run_config(cfg: &RunConfig, opts: RunOptions) -> Result<RunReport> {
    cfg.validate()?;
    let amb = cfg.ambient()?;
    let families = cfg.families();
    let samples: Vec<Result<SurfaceSample>> = families
        .iter()
        .map(|(_, fam)| sample_surface(fam, &amb, &grid_for(fam, &amb, cfg.resolution)?))
        .collect();

    let jobs: Vec<(CheckSpec, Option<usize>)> = cfg
        .checks
        .iter()
        .flat_map(|&c| {
            if c.is_global() {
                vec![(c, None)]
            } else {
                (0..families.len()).map(|i| (c, Some(i))).collect()
            }
        })
        .collect();

    let records: Vec<Record> = jobs
        .par_iter()
        .map(|&(check, fi)| match fi {
            None => {
                let st = ambient_selftest(&amb, cfg.selftest_samples, cfg.seed);
                let tol = to_value(&st.tolerances);
                let verdict = Verdict::from_bool(st.passed);
                record_from(check, None, None, tol, Ok((st, verdict)))
            }
            Some(i) => {
                let (label, fam) = &families[i];
                let res = match check {
                    CheckSpec::Convergence(_) => None,
                    _ => Some(cfg.resolution),
                };
                record_from(
                    check,
                    Some((label.as_str(), fam)),
                    res,
                    to_value(&cfg.tolerances),
                    run_family_check(check, &samples[i], fam, &amb, cfg),
                )
            }
        })
        .collect();

    let count = |o: Outcome| records.iter().filter(|r| r.outcome == o).count();
    let (passed, failed, errors) = (
        count(Outcome::Pass),
        count(Outcome::Fail),
        count(Outcome::Error),
    );
    let exit_code = if errors > 0 {
        2
    } else if failed > 0 {
        1
    } else {
        0
    };
    Ok(RunReport {
        generated_at: if opts.no_timestamp {
            None
        } else {
            Some(unix_now())
        },
        ambient: json!({
            "n": amb.n(),
            "fiber": amb.fiber(),
            "potential_scale": amb.potential_scale(),
        }),
        resolution: cfg.resolution,
        seed: cfg.seed,
        records,
        summary: Summary {
            passed,
            failed,
            errors,
            exit_code,
        },
    })
}

fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Convergence tables of `checks` for every family of the configuration.
pub fn convergence_tables(
    cfg: &RunConfig,
    checks: &[ConvergenceCheck],
) -> Result<Vec<(String, Result<ConvergenceTable>)>> {
    let amb = cfg.ambient()?;
    let families = cfg.families();
    let jobs: Vec<(usize, ConvergenceCheck)> = checks
        .iter()
        .flat_map(|&c| (0..families.len()).map(move |i| (i, c)))
        .collect();
    Ok(jobs
        .par_iter()
        .map(|&(i, c)| {
            let (label, fam) = &families[i];
            (
                label.clone(),
                convergence_study(c, fam, &amb, &cfg.convergence_resolutions, &cfg.tolerances),
            )
        })
        .collect())
}

/// CSV with one row per (family, check, resolution).
pub fn write_convergence_csv<W: Write>(
    tables: &[(String, Result<ConvergenceTable>)],
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io {
        path: "csv output".into(),
        source: e.into(),
    };
    w.write_record([
        "family",
        "check",
        "resolution",
        "normalized_residual",
        "change",
        "verdict",
    ])
    .map_err(io)?;
    for (label, table) in tables {
        let Ok(t) = table else { continue };
        let check = CheckSpec::Convergence(t.check).to_string();
        let check = check.trim_start_matches("convergence:");
        let verdict = if t.verdict.passed() { "pass" } else { "fail" };
        for r in &t.rows {
            w.write_record([
                label.as_str(),
                check,
                &r.resolution.to_string(),
                &format!("{:e}", r.normalized_residual),
                &r.change.map(|c| format!("{c:e}")).unwrap_or_default(),
                verdict,
            ])
            .map_err(io)?;
        }
    }
    w.flush().map_err(|source| Error::Io {
        path: "csv output".into(),
        source,
    })
}
