//! The `verify` suite: invariants on the configured problem plus the criteria.

use crate::checks::{invariant_checks, Check};
use crate::commands::Context;
use crate::config::{build_model, RunConfig};
use crate::criteria::{self, CriterionResult};
use crate::error::{CliError, Result};
use crate::output::OutputDir;
use serde::Serialize;
use std::time::Instant;

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub fitness: String,
    pub checks: Vec<Check>,
    pub criteria: Vec<CriterionResult>,
    pub passed: bool,
    #[serde(skip)]
    pub seconds: f64,
}

impl VerifyReport {
    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count() + self.criteria.iter().filter(|c| !c.passed).count()
    }
}

pub fn run_suite(config: &RunConfig, ctx: &Context) -> Result<VerifyReport> {
    let start = Instant::now();
    let model = build_model(&config.fitness, config.sigma)?;
    ctx.note(format!("verify: invariants for {}", model.id));
    let checks = invariant_checks(&model, config)?;
    for c in &checks {
        ctx.note(format!("  [{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail));
    }
    let criteria = if config.criteria {
        criteria::run_all(ctx.jobs, &mut |r| ctx.note(format!("  {}", r.line())))
    } else {
        Vec::new()
    };
    let passed = checks.iter().all(|c| c.passed) && criteria.iter().all(|c| c.passed);
    Ok(VerifyReport { fitness: model.id, checks, criteria, passed, seconds: start.elapsed().as_secs_f64() })
}

pub fn verify(config: &RunConfig, out: &OutputDir, ctx: &Context) -> Result<serde_json::Value> {
    let report = run_suite(config, ctx)?;
    out.json("report.json", &report)?;
    let timing = serde_json::json!({
        "seconds": report.seconds,
        "criteria": report.criteria.iter().map(|c| serde_json::json!({ "id": c.id, "seconds": c.seconds })).collect::<Vec<_>>(),
    });
    out.json("timing.json", &timing)?;
    if !report.passed {
        return Err(CliError::ChecksFailed(report.failures()));
    }
    Ok(serde_json::to_value(&report)?)
}
