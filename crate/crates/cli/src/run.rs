//! Pipelines behind the subcommands and the artifacts they write.
//!
//! Every stage runs in isolation: an error inside one stage becomes a failed
//! check and the remaining stages still run. Artifacts are written whole, so
//! a failing stage never leaves a partial file behind.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::json;
use splitvar::analysis::{
    check_density, exponent_admissibility, fit_full_ellipticity, fit_scalar_ellipticity, growing_second_witness,
    lemma1_probe, Admissibility, ExponentSet, LevelOutcome, Statement, TraceOptions,
};
use splitvar::densities::Density;
use splitvar::experiments::{
    geometric_schedule, mean_removed_deviation, perturbed_restart, run_experiment, stress_distance, Analyses,
    Experiment, ExperimentParams, MAX_PRINCIPLE_SLACK,
};
use splitvar::solver::{io, minimize, DiscreteField, SolveStatus};
use splitvar::{BaseDensity, Regularization, RegularizedDensity, ScalarDensity};

use crate::config::{DensitySpec, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    CheckDensity,
    Lemma1,
    Admissible,
    Solve,
    Path,
    Full,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::CheckDensity => "check-density",
            Command::Lemma1 => "lemma1",
            Command::Admissible => "admissible",
            Command::Solve => "solve",
            Command::Path => "path",
            Command::Full => "full",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Reported only; does not affect the exit code.
    Info,
    /// Would fail, but the run was told to proceed anyway.
    Overridden,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

#[derive(Debug)]
pub struct Outcome {
    pub dir: PathBuf,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }
}

struct Run<'a> {
    cfg: &'a RunConfig,
    cmd: Command,
    dir: PathBuf,
    base: BaseDensity,
    checks: Vec<Check>,
    artifacts: Vec<String>,
}

impl Run<'_> {
    fn check(&mut self, name: impl Into<String>, status: Status, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), status, detail: detail.into() });
    }

    fn pass_if(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.check(name, if pass { Status::Pass } else { Status::Fail }, detail);
    }

    /// Pass/fail inside the regime where the estimate is claimed, info outside.
    fn gated(&mut self, name: impl Into<String>, in_regime: bool, pass: bool, detail: impl Into<String>) {
        let status = match (in_regime, pass) {
            (false, _) => Status::Info,
            (true, true) => Status::Pass,
            (true, false) => Status::Fail,
        };
        self.check(name, status, detail);
    }

    fn write(&mut self, name: &str, bytes: Vec<u8>) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(name, s.into_bytes())
    }

    fn write_field(&mut self, u: &DiscreteField) -> Result<()> {
        let mut csv = Vec::new();
        io::write_csv(u, &mut csv)?;
        let mut bin = Vec::new();
        io::write_binary(u, &mut bin)?;
        self.write("field.csv", csv)?;
        self.write("field.svfd", bin)
    }

    /// Runs a stage; its error becomes a failed `<stage>.error` check.
    fn stage(&mut self, name: &str, f: impl FnOnce(&mut Self) -> Result<()>) {
        if let Err(e) = f(self) {
            self.check(format!("{name}.error"), Status::Fail, format!("{e:#}"));
        }
    }
}

/// Lower ellipticity exponent of a scalar density: exact for `Φ_μ`, fitted
/// otherwise; `None` when no power law certifies the bound.
fn scalar_mu(cfg: &RunConfig, f: &ScalarDensity) -> Option<f64> {
    if let ScalarDensity::PhiMu { mu } = f {
        return Some(*mu);
    }
    let e = &cfg.ellipticity;
    fit_scalar_ellipticity(f, (0.0, e.range), e.samples).ok().filter(|r| r.lower_bound_certified).map(|r| r.mu_fit)
}

/// Explicit exponents, completed from the density where possible.
pub fn resolve_exponents(cfg: &RunConfig) -> ExponentSet {
    let given = cfg.exponents.given;
    let parts: Vec<ScalarDensity> = cfg.density.components().iter().filter_map(|(_, c)| c.build().ok()).collect();
    let mu1 =
        given.mu1.or(cfg.mu1_given.then_some(cfg.params.mu1)).or_else(|| parts.first().and_then(|f| scalar_mu(cfg, f)));
    let mu2 = match cfg.density {
        DensitySpec::Splitting { .. } => given.mu2.or_else(|| parts.get(1).and_then(|f| scalar_mu(cfg, f))),
        DensitySpec::Radial { .. } => given.mu2,
    };
    let gamma = given.gamma.or(cfg.params.gamma).or(match cfg.regularization {
        Regularization::SplitPower { gamma } => Some(gamma),
        _ => None,
    });
    ExponentSet { mu1, mu2, kappa: given.kappa, varkappa: given.varkappa, gamma }
}

fn density_stage(run: &mut Run) -> Result<()> {
    let e = run.cfg.ellipticity.clone();
    let mut components = Vec::new();
    for (name, spec) in run.cfg.density.components() {
        let f = spec.build()?;
        match check_density(&f, (0.0, e.range), e.samples) {
            Ok(c) => {
                let g = c.growth;
                run.check(
                    format!("density.{name}.growth"),
                    Status::Pass,
                    format!("a1 = {:.4}, a2 = {:.4}, a3 = {:.4}, a4 = {:.4}", g.a1, g.a2, g.a3, g.a4),
                );
                let r = &c.ellipticity;
                run.check(
                    format!("density.{name}.ellipticity"),
                    Status::Info,
                    format!(
                        "mu_fit = {:.4}, kappa_fit = {:.4}, lower bound certified: {}",
                        r.mu_fit, r.kappa_fit, r.lower_bound_certified
                    ),
                );
                components.push(json!({ "name": name, "check": c }));
            }
            Err(err) => {
                run.check(format!("density.{name}.growth"), Status::Fail, err.to_string());
                components.push(json!({ "name": name, "error": err.to_string() }));
            }
        }
    }
    let full = match fit_full_ellipticity(&run.base, e.range, e.radial_samples) {
        Ok(r) => {
            run.check(
                "density.full_ellipticity",
                Status::Info,
                format!("mu_fit = {:.4}, kappa_fit = {:.4}", r.mu_fit, r.kappa_fit),
            );
            serde_json::to_value(r)?
        }
        Err(err) => {
            run.check("density.full_ellipticity", Status::Fail, err.to_string());
            json!({ "error": err.to_string() })
        }
    };
    let doc = json!({ "density": run.base.descriptor(), "components": components, "full_ellipticity": full });
    run.write_json("density.json", &doc)
}

fn lemma1_stage(run: &mut Run) -> Result<()> {
    let l = run.cfg.lemma1.clone();
    let p = lemma1_probe(&run.base, l.kappa, &l.levels, &TraceOptions::default())?;
    let mut csv = String::from(
        "level,radius,curvature,curvature_analytic,grad_norm,product,ratio,contact_bound_holds,convex,status\n",
    );
    for level in &p.levels {
        match level {
            LevelOutcome::Traced(r) => writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{},traced",
                r.level,
                r.radius,
                r.curvature,
                r.curvature_analytic,
                r.grad_norm,
                r.product,
                r.ratio,
                r.contact_bound_holds,
                r.convex
            )?,
            LevelOutcome::Failed { level, reason } => {
                writeln!(csv, "{level},,,,,,,,,\"failed: {}\"", reason.replace('"', "'"))?
            }
        }
    }
    run.write("lemma1.csv", csv.into_bytes())?;
    run.write_json("lemma1.json", &p)?;
    run.pass_if(
        "lemma1.verdict",
        p.verdict == l.expect,
        format!(
            "{:?} (expected {:?}); ratio decay {:.3}, ratio slope {:.3}",
            p.verdict, l.expect, p.ratio_decay, p.ratio_slope
        ),
    );
    Ok(())
}

/// Admissibility verdicts. Returns whether solves may proceed.
fn admissibility_stage(run: &mut Run, exps: &ExponentSet) -> Result<Option<Admissibility>> {
    let a = exponent_admissibility(exps, run.cfg.exponents.chi)?;
    run.write_json("admissibility.json", &a)?;
    let strict = run.cmd == Command::Admissible && run.cfg.exponents.require.is_empty();
    for s in Statement::ALL {
        let Some(v) = a.verdict(s) else { continue };
        let status = if strict || run.cfg.exponents.require.contains(&s) {
            if v {
                Status::Pass
            } else {
                Status::Fail
            }
        } else {
            Status::Info
        };
        run.check(format!("admissible.{}", s.key()), status, if v { "admissible" } else { "inadmissible" });
    }
    for s in &run.cfg.exponents.require {
        if a.verdict(*s).is_none() {
            run.check(format!("admissible.{}", s.key()), Status::Fail, "undecided: exponents missing");
        }
    }
    Ok(Some(a))
}

/// Growing-`f₂''` gate: `Ok(Some(α))` with the witness weight when admissible,
/// `Ok(None)` when overridden, `Err` when the run must stop.
fn growing_second_gate(run: &mut Run, exps: &ExponentSet) -> std::result::Result<Option<f64>, ()> {
    let Some(gamma) = run.cfg.params.gamma else { return Ok(None) };
    let Some(mu1) = exps.mu1 else {
        run.check("gate.growing_second", Status::Fail, "μ₁ unknown: set `params.mu1`");
        return Err(());
    };
    if let Some((ts, ta)) = run.cfg.tau {
        run.check("gate.growing_second", Status::Pass, format!("given τ_s = {ts}, τ_α = {ta}"));
        return Ok(Some(ta - 0.5));
    }
    match growing_second_witness(mu1, gamma) {
        Some(w) => {
            run.check(
                "gate.growing_second",
                Status::Pass,
                format!("witness τ_s = {:.6}, τ_α = {:.6} ({:?})", w.tau_s, w.tau_alpha, w.source),
            );
            Ok(Some(w.alpha))
        }
        None => {
            let bound = (2.0 - mu1) / (3.0 - mu1);
            let detail = format!("γ = {gamma} is not below (2-μ₁)/(1+(2-μ₁)) = {bound:.6} for μ₁ = {mu1}");
            if run.cfg.allow_inadmissible {
                run.check("gate.growing_second", Status::Overridden, detail);
                Ok(None)
            } else {
                run.check("gate.growing_second", Status::Fail, format!("{detail}; pass --override to run anyway"));
                Err(())
            }
        }
    }
}

fn solve_stage(run: &mut Run) -> Result<()> {
    let cfg = run.cfg;
    let delta = *cfg.schedule_values().last().expect("non-empty schedule");
    let f = RegularizedDensity::new(run.base.clone(), delta, cfg.regularization)?;
    let init = cfg.preset.initial_field(cfg.grid);
    let (u, report) = minimize(&f, &init, &cfg.solver)?;
    let (lo, hi) = init.boundary_range();
    let (min, max) = u.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    run.write_field(&u)?;
    run.write_json("solve.json", &json!({ "delta": delta, "report": report }))?;
    run.pass_if(
        "solve.converged",
        report.status == SolveStatus::Converged,
        format!("δ = {delta}: {} iterations, residual {:.3e}", report.iterations, report.residual),
    );
    run.pass_if(
        "solve.max_principle",
        min >= lo - MAX_PRINCIPLE_SLACK && max <= hi + MAX_PRINCIPLE_SLACK,
        format!("range [{min:.6}, {max:.6}] within boundary range [{lo:.6}, {hi:.6}]"),
    );
    Ok(())
}

fn path_params(cfg: &RunConfig, exps: &ExponentSet, witness_alpha: Option<f64>) -> Result<ExperimentParams> {
    let mut p = cfg.params.clone();
    if !cfg.mu1_given {
        p.mu1 = exps.mu1.context("μ₁ of f₁ could not be derived from the density; set `params.mu1`")?;
    }
    if let Some(a) = witness_alpha {
        if !p.alphas.contains(&a) {
            p.alphas.push(a);
        }
    }
    p.validate()?;
    Ok(p)
}

fn analyses(cfg: &RunConfig) -> Analyses {
    let s = cfg.experiments;
    Analyses {
        caccioppoli: s.caccioppoli,
        integrability: s.integrability,
        second_derivatives: s.second_derivatives,
        stress: s.stress || s.uniqueness,
    }
}

fn path_checks(run: &mut Run, e: &Experiment, a: Option<&Admissibility>) {
    let r = &e.report;
    let higher = a.and_then(|a| a.higher_integrability) == Some(true);
    let splitting = a.and_then(|a| a.splitting_regularity) == Some(true);
    run.pass_if(
        "path.complete",
        r.truncated.is_none(),
        match &r.truncated {
            None => format!("{} of {} steps converged", r.steps.len(), r.provenance.schedule.len()),
            Some(t) => format!("truncated at δ = {}: {:?}", t.delta, t.report.status),
        },
    );
    run.pass_if("path.viscosity_monotone", r.viscosity_monotone, format!("final/initial {:.3e}", r.viscosity_decay));
    run.pass_if("path.max_principle", r.max_principle, "every iterate within the boundary range");
    for s in &r.caccioppoli {
        let pass = s.spread.is_finite() && s.spread < 100.0;
        run.gated(
            format!("caccioppoli.alpha_{}", s.alpha),
            higher,
            pass,
            format!("ratio spread {:.3} (< 100)", s.spread),
        );
    }
    if let Some(t) = &r.integrability {
        for (chi, trend) in t.chis.iter().zip(&t.trend_gamma1) {
            let pass = !t.saturated && *trend <= 2.0;
            run.gated(
                format!("integrability.chi_{chi}"),
                higher,
                pass,
                format!("max successive ratio {trend:.4} (≤ 2)"),
            );
        }
    }
    if let Some(s) = &r.second_derivatives {
        let pass = s.gradient_sup_variation.is_finite() && s.gradient_sup_variation < 2.0;
        run.gated(
            "second_derivatives.gradient_sup",
            splitting,
            pass,
            format!("interior gradient bound varies by {:.4} (< 2)", s.gradient_sup_variation),
        );
    }
    if let Some(s) = &r.stress {
        if run.cfg.experiments.stress {
            let min = s.steps.iter().map(|s| s.min_margin).fold(f64::INFINITY, f64::min);
            run.pass_if("stress.contained", s.contained, format!("min containment margin {min:.3e}"));
        }
    }
}

fn uniqueness_stage(
    run: &mut Run,
    first: &Experiment,
    params: &ExperimentParams,
    a: Option<&Admissibility>,
) -> Result<()> {
    let cfg = run.cfg;
    let schedule = cfg.schedule_values();
    let (start, terminal) = (schedule[0], *schedule.last().expect("non-empty schedule"));
    // same endpoints, different ratio
    let second_schedule = geometric_schedule(start, cfg.uniqueness.ratio, terminal)?;
    let stress = Analyses { stress: true, ..Analyses::NONE };
    let second = run_experiment(
        &run.base,
        cfg.regularization,
        cfg.preset,
        cfg.grid,
        &second_schedule,
        params,
        &cfg.solver,
        stress,
    )?;
    let (Some(u), Some(v)) = (first.path.final_solution(), second.path.final_solution()) else {
        anyhow::bail!("a path produced no solution");
    };
    let complete = first.report.truncated.is_none() && second.report.truncated.is_none();
    let deviation = mean_removed_deviation(u, v)?;
    let stress_dist = match (first.stress_fields.last(), second.stress_fields.last()) {
        (Some(s), Some(t)) if complete => Some(stress_distance(s, t, params.margin)?),
        _ => None,
    };
    let k = first.path.solutions.len() - 1;
    let restart = perturbed_restart(&first.path.density(k), u, cfg.uniqueness.noise, cfg.seed, &cfg.solver)?;
    run.write_json(
        "uniqueness.json",
        &json!({
            "second_schedule": second_schedule,
            "mean_removed_deviation": deviation,
            "stress_distance": stress_dist,
            "perturbed_restart": { "amplitude": cfg.uniqueness.noise, "seed": cfg.seed, "deviation": restart },
        }),
    )?;
    let splitting = a.and_then(|a| a.splitting_regularity) == Some(true);
    run.gated(
        "uniqueness.deviation",
        splitting && complete,
        deviation <= 1e-3,
        format!("mean-removed sup deviation {deviation:.3e} (≤ 1e-3)"),
    );
    match stress_dist {
        Some(d) => run.pass_if("uniqueness.stress", d <= 1e-3, format!("final stress distance {d:.3e} (≤ 1e-3)")),
        None => run.check("uniqueness.stress", Status::Fail, "a path was truncated"),
    }
    run.pass_if("uniqueness.restart", restart <= 1e-6, format!("perturbed restart deviation {restart:.3e} (≤ 1e-6)"));
    Ok(())
}

fn path_stage(run: &mut Run, exps: &ExponentSet, a: Option<&Admissibility>, witness: Option<f64>) -> Result<()> {
    let cfg = run.cfg;
    let params = path_params(cfg, exps, witness)?;
    let schedule = cfg.schedule_values();
    let e = run_experiment(
        &run.base,
        cfg.regularization,
        cfg.preset,
        cfg.grid,
        &schedule,
        &params,
        &cfg.solver,
        analyses(cfg),
    )?;
    let mut csv = Vec::new();
    e.report.write_csv(&mut csv)?;
    run.write("report.csv", csv)?;
    run.write_json("report.json", &e.report)?;
    if let Some(u) = e.path.final_solution() {
        run.write_field(u)?;
    }
    path_checks(run, &e, a);
    if cfg.experiments.uniqueness {
        run.stage("uniqueness", |run| uniqueness_stage(run, &e, &params, a));
    }
    Ok(())
}

/// Runs `cmd` and writes every artifact plus `manifest.json` into `dir`.
pub fn execute(cmd: Command, cfg: &RunConfig, dir: &Path, run_id: &str) -> Result<Outcome> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut run =
        Run { cfg, cmd, dir: dir.to_path_buf(), base: cfg.base_density(), checks: Vec::new(), artifacts: Vec::new() };
    let sel = cfg.experiments;
    let full = cmd == Command::Full;
    let needs_exponents = matches!(cmd, Command::Admissible | Command::Path | Command::Full);
    let exps = if needs_exponents { resolve_exponents(cfg) } else { ExponentSet::default() };

    if cmd == Command::CheckDensity || (full && sel.ellipticity) {
        run.stage("density", density_stage);
    }
    if cmd == Command::Lemma1 || (full && sel.lemma1) {
        run.stage("lemma1", lemma1_stage);
    }
    let mut admissibility = None;
    if cmd == Command::Admissible || (full && sel.admissibility) || (cmd == Command::Path && sel.admissibility) {
        run.stage("admissibility", |run| {
            admissibility = admissibility_stage(run, &exps)?;
            Ok(())
        });
    }
    if matches!(cmd, Command::Solve | Command::Path | Command::Full) {
        match growing_second_gate(&mut run, &exps) {
            Err(()) => run.check("solve.skipped", Status::Info, "solves skipped: inadmissible exponents"),
            Ok(witness) => {
                if cmd == Command::Solve {
                    run.stage("solve", solve_stage);
                } else {
                    run.stage("path", |run| path_stage(run, &exps, admissibility.as_ref(), witness));
                }
            }
        }
    }

    let manifest = json!({
        "tool": "splitvar",
        "version": env!("CARGO_PKG_VERSION"),
        "core_version": splitvar::VERSION,
        "command": cmd.name(),
        "run_id": run_id,
        "seed": cfg.seed,
        "config": cfg.emit(),
        "density": run.base.descriptor(),
        "exponents": exps,
        "artifacts": run.artifacts,
        "checks": run.checks,
    });
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(dir.join("manifest.json"), text).context("writing manifest.json")?;
    Ok(Outcome { dir: run.dir, checks: run.checks })
}
