//! Run configuration.
//!
//! A configuration is a list of `key = value` lines. `#` starts a comment,
//! blank lines are ignored and nesting is expressed by dotted keys
//! (`grid.n = 65`). Lists are comma separated. Every key may appear once;
//! command-line overrides replace file entries. Unknown keys are errors.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write};

use splitvar::analysis::{tau_conditions, ExponentSet, ProbeVerdict, Statement};
use splitvar::experiments::{geometric_schedule, validate_schedule, BoundaryPreset, ExperimentParams};
use splitvar::solver::{Grid, SolverConfig};
use splitvar::{BaseDensity, RadialDensity, Regularization, ScalarDensity, SplittingDensity};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(line: Option<usize>, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError { line, message: message.into() })
}

/// Raw `key → (value, line)` entries; line 0 marks a command-line override.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, usize)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let n = n + 1;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return err(Some(n), format!("expected `key = value`, got `{line}`"));
            };
            let (key, value) = (key.trim(), value.trim());
            check_key(key).map_err(|m| ConfigError { line: Some(n), message: m })?;
            if value.is_empty() {
                return err(Some(n), format!("`{key}` has an empty value"));
            }
            if let Some((_, first)) = entries.get(key) {
                return err(Some(n), format!("`{key}` already set on line {first}"));
            }
            entries.insert(key.to_string(), (value.to_string(), n));
        }
        Ok(Self { entries })
    }

    /// Applies a `key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let Some((key, value)) = assignment.split_once('=') else {
            return err(None, format!("override `{assignment}` is not of the form key=value"));
        };
        let (key, value) = (key.trim(), value.trim());
        check_key(key).map_err(|m| ConfigError { line: None, message: m })?;
        if value.is_empty() {
            return err(None, format!("override `{key}` has an empty value"));
        }
        self.entries.insert(key.to_string(), (value.to_string(), 0));
        Ok(())
    }
}

fn check_key(key: &str) -> Result<(), String> {
    let ok = !key.is_empty()
        && key.split('.').all(|p| !p.is_empty())
        && key.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '.');
    if ok {
        Ok(())
    } else {
        Err(format!("invalid key `{key}` (lower-case words joined by `.`)"))
    }
}

/// Pulls typed values out of a [`RawConfig`], remembering what was read.
struct Reader {
    raw: RawConfig,
    used: BTreeSet<String>,
    known: BTreeSet<String>,
}

impl Reader {
    fn line(&self, key: &str) -> Option<usize> {
        self.raw.entries.get(key).map(|(_, l)| *l).filter(|l| *l > 0)
    }

    fn str(&mut self, key: &str) -> Option<String> {
        self.known.insert(key.to_string());
        let v = self.raw.entries.get(key).map(|(v, _)| v.clone());
        if v.is_some() {
            self.used.insert(key.to_string());
        }
        v
    }

    fn bad<T>(&self, key: &str, value: &str, expected: &str) -> Result<T, ConfigError> {
        err(self.line(key), format!("`{key}`: expected {expected}, got `{value}`"))
    }

    fn f64(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.str(key) {
            None => Ok(None),
            Some(v) => match v.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(Some(x)),
                _ => self.bad(key, &v, "a finite number"),
            },
        }
    }

    fn f64_or(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    fn uint(&mut self, key: &str) -> Result<Option<u64>, ConfigError> {
        match self.str(key) {
            None => Ok(None),
            Some(v) => match v.parse::<u64>() {
                Ok(x) => Ok(Some(x)),
                Err(_) => self.bad(key, &v, "a non-negative integer"),
            },
        }
    }

    fn usize_or(&mut self, key: &str, default: usize) -> Result<usize, ConfigError> {
        Ok(self.uint(key)?.map_or(default, |v| v as usize))
    }

    fn bool_or(&mut self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.str(key) {
            None => Ok(default),
            Some(v) => match v.as_str() {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => self.bad(key, &v, "`true` or `false`"),
            },
        }
    }

    fn list(&mut self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.str(key) {
            None => Ok(None),
            Some(v) => {
                let parsed: Result<Vec<f64>, _> = v.split(',').map(|p| p.trim().parse::<f64>()).collect();
                match parsed {
                    Ok(xs) if !xs.is_empty() && xs.iter().all(|x| x.is_finite()) => Ok(Some(xs)),
                    _ => self.bad(key, &v, "a comma-separated list of numbers"),
                }
            }
        }
    }

    fn list_or(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        Ok(self.list(key)?.unwrap_or_else(|| default.to_vec()))
    }

    fn domain<T, E: fmt::Display>(&self, key: &str, r: Result<T, E>) -> Result<T, ConfigError> {
        r.map_err(|e| ConfigError { line: self.line(key), message: format!("`{key}`: {e}") })
    }

    /// Errors on the first key never read, suggesting the closest known key.
    fn finish(self) -> Result<(), ConfigError> {
        for (key, (_, line)) in &self.raw.entries {
            if self.used.contains(key) {
                continue;
            }
            let best = self.known.iter().map(|k| (strsim::jaro_winkler(key, k), k)).max_by(|a, b| a.0.total_cmp(&b.0));
            let hint = match best {
                Some((score, k)) if score > 0.75 => format!("; did you mean `{k}`?"),
                _ => String::new(),
            };
            return err((*line > 0).then_some(*line), format!("unknown key `{key}`{hint}"));
        }
        Ok(())
    }
}

/// A catalog density and its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSpec {
    pub key: String,
    pub params: BTreeMap<String, f64>,
}

impl ComponentSpec {
    pub fn build(&self) -> Result<ScalarDensity, splitvar::DensityError> {
        ScalarDensity::from_catalog(&self.key, &self.params)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DensitySpec {
    Splitting { f1: ComponentSpec, f2: ComponentSpec },
    Radial { profile: ComponentSpec },
}

impl DensitySpec {
    pub fn build(&self) -> Result<BaseDensity, splitvar::DensityError> {
        Ok(match self {
            DensitySpec::Splitting { f1, f2 } => SplittingDensity::pair(f1.build()?, f2.build()?).into(),
            DensitySpec::Radial { profile } => RadialDensity::new(profile.build()?)?.into(),
        })
    }

    /// `(name, spec)` of each scalar part.
    pub fn components(&self) -> Vec<(&'static str, &ComponentSpec)> {
        match self {
            DensitySpec::Splitting { f1, f2 } => vec![("f1", f1), ("f2", f2)],
            DensitySpec::Radial { profile } => vec![("profile", profile)],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleSpec {
    Geometric { start: f64, ratio: f64, terminal: f64 },
    Explicit(Vec<f64>),
}

impl ScheduleSpec {
    pub fn values(&self) -> Result<Vec<f64>, splitvar::experiments::ExperimentError> {
        match self {
            ScheduleSpec::Geometric { start, ratio, terminal } => geometric_schedule(*start, *ratio, *terminal),
            ScheduleSpec::Explicit(v) => {
                validate_schedule(v)?;
                Ok(v.clone())
            }
        }
    }
}

/// Which analyses `path` and `full` run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Selection {
    pub ellipticity: bool,
    pub lemma1: bool,
    pub admissibility: bool,
    pub caccioppoli: bool,
    pub integrability: bool,
    pub second_derivatives: bool,
    pub stress: bool,
    pub uniqueness: bool,
}

impl Selection {
    const NAMES: [&'static str; 8] = [
        "ellipticity",
        "lemma1",
        "admissibility",
        "caccioppoli",
        "integrability",
        "second_derivatives",
        "stress",
        "uniqueness",
    ];

    fn flags(&self) -> [bool; 8] {
        [
            self.ellipticity,
            self.lemma1,
            self.admissibility,
            self.caccioppoli,
            self.integrability,
            self.second_derivatives,
            self.stress,
            self.uniqueness,
        ]
    }

    fn from_flags(f: [bool; 8]) -> Self {
        Self {
            ellipticity: f[0],
            lemma1: f[1],
            admissibility: f[2],
            caccioppoli: f[3],
            integrability: f[4],
            second_derivatives: f[5],
            stress: f[6],
            uniqueness: f[7],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma1Spec {
    pub kappa: f64,
    pub levels: Vec<f64>,
    pub expect: ProbeVerdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllipticitySpec {
    /// Upper end of `[0, range]`.
    pub range: f64,
    pub samples: usize,
    pub radial_samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentSpec {
    /// Explicit exponents; missing `μ₁`, `μ₂`, `γ` are derived from the density.
    pub given: ExponentSet,
    pub chi: f64,
    /// Statements that must hold for the run to pass.
    pub require: Vec<Statement>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessSpec {
    /// Ratio of the second δ schedule.
    pub ratio: f64,
    /// Amplitude of the perturbed restart.
    pub noise: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub density: DensitySpec,
    pub regularization: Regularization,
    pub schedule: ScheduleSpec,
    pub grid: Grid,
    pub preset: BoundaryPreset,
    pub experiments: Selection,
    pub params: ExperimentParams,
    /// `μ₁` given explicitly rather than derived from `f₁`.
    pub mu1_given: bool,
    /// `(τ_s, τ_α)` for the growing-`f₂''` estimate.
    pub tau: Option<(f64, f64)>,
    pub lemma1: Lemma1Spec,
    pub ellipticity: EllipticitySpec,
    pub exponents: ExponentSpec,
    pub uniqueness: UniquenessSpec,
    pub solver: SolverConfig,
    pub seed: u64,
    pub output: Option<String>,
    /// Proceed even when the exponents are inadmissible.
    pub allow_inadmissible: bool,
}

fn statement_from_key(key: &str) -> Option<Statement> {
    Statement::ALL.into_iter().find(|s| s.key() == key)
}

fn verdict_key(v: ProbeVerdict) -> &'static str {
    match v {
        ProbeVerdict::Consistent => "consistent",
        ProbeVerdict::Violated => "violated",
        ProbeVerdict::Inconclusive => "inconclusive",
    }
}

fn read_component(
    r: &mut Reader,
    prefix: &str,
    fallback: Option<&ComponentSpec>,
) -> Result<ComponentSpec, ConfigError> {
    let spec = match r.str(prefix) {
        Some(key) => {
            let Some(names) = ScalarDensity::catalog_params(&key) else {
                let hint = ScalarDensity::CATALOG
                    .iter()
                    .max_by(|a, b| strsim::jaro_winkler(&key, a).total_cmp(&strsim::jaro_winkler(&key, b)))
                    .map(|k| format!("; known densities: {} (closest `{k}`)", ScalarDensity::CATALOG.join(", ")))
                    .unwrap_or_default();
                return err(r.line(prefix), format!("`{prefix}`: unknown density `{key}`{hint}"));
            };
            let mut params = BTreeMap::new();
            for name in names {
                if let Some(v) = r.f64(&format!("{prefix}.{name}"))? {
                    params.insert(name.to_string(), v);
                }
            }
            ComponentSpec { key, params }
        }
        None => match fallback {
            Some(f) => f.clone(),
            None => {
                return err(None, format!("missing density: set `density` (and its parameters) or `{prefix}`"));
            }
        },
    };
    r.domain(prefix, spec.build())?;
    Ok(spec)
}

fn read_density(r: &mut Reader) -> Result<DensitySpec, ConfigError> {
    // shorthand: `density = key` plus top-level parameters applies to every part
    let shorthand = match r.str("density") {
        Some(key) => {
            let Some(names) = ScalarDensity::catalog_params(&key) else {
                return err(
                    r.line("density"),
                    format!("unknown density `{key}`; known densities: {}", ScalarDensity::CATALOG.join(", ")),
                );
            };
            let mut params = BTreeMap::new();
            for name in names {
                if let Some(v) = r.f64(name)? {
                    params.insert(name.to_string(), v);
                }
            }
            let spec = ComponentSpec { key, params };
            r.domain("density", spec.build())?;
            Some(spec)
        }
        None => None,
    };
    let structure = r.str("density.structure").unwrap_or_else(|| "splitting".into());
    match structure.as_str() {
        "splitting" => Ok(DensitySpec::Splitting {
            f1: read_component(r, "density.f1", shorthand.as_ref())?,
            f2: read_component(r, "density.f2", shorthand.as_ref())?,
        }),
        "radial" => {
            let profile = read_component(r, "density.profile", shorthand.as_ref())?;
            let spec = DensitySpec::Radial { profile };
            r.domain("density.profile", spec.build())?;
            Ok(spec)
        }
        other => r.bad("density.structure", other, "`splitting` or `radial`"),
    }
}

fn read_regularization(r: &mut Reader) -> Result<Regularization, ConfigError> {
    let scheme = r.str("regularization").unwrap_or_else(|| "quadratic".into());
    let q = r.f64("regularization.q")?;
    let gamma = r.f64("regularization.gamma")?;
    let need = |r: &Reader, v: Option<f64>, key: &str| match v {
        Some(x) => Ok(x),
        None => err(r.line("regularization"), format!("scheme `{scheme}` requires `{key}`")),
    };
    let reg = match scheme.as_str() {
        "quadratic" => Regularization::Quadratic,
        "power" => Regularization::Power { q: need(r, q, "regularization.q")? },
        "mixed" => Regularization::MixedPower { q: need(r, q, "regularization.q")? },
        "split_power" => Regularization::SplitPower { gamma: need(r, gamma, "regularization.gamma")? },
        other => return r.bad("regularization", other, "quadratic, power, mixed or split_power"),
    };
    let stray = match reg {
        Regularization::Quadratic => q.map(|_| "regularization.q").or(gamma.map(|_| "regularization.gamma")),
        Regularization::Power { .. } | Regularization::MixedPower { .. } => gamma.map(|_| "regularization.gamma"),
        Regularization::SplitPower { .. } => q.map(|_| "regularization.q"),
    };
    if let Some(key) = stray {
        return err(r.line(key), format!("`{key}` does not apply to scheme `{scheme}`"));
    }
    r.domain("regularization", reg.validate())?;
    Ok(reg)
}

fn read_schedule(r: &mut Reader) -> Result<ScheduleSpec, ConfigError> {
    let explicit = r.list("schedule")?;
    let start = r.f64("schedule.start")?;
    let ratio = r.f64("schedule.ratio")?;
    let terminal = r.f64("schedule.terminal")?;
    let spec = match explicit {
        Some(v) => {
            if start.or(ratio).or(terminal).is_some() {
                return err(r.line("schedule"), "give either `schedule` or `schedule.start/ratio/terminal`, not both");
            }
            ScheduleSpec::Explicit(v)
        }
        None => ScheduleSpec::Geometric {
            start: start.unwrap_or(0.1),
            ratio: ratio.unwrap_or(0.1),
            terminal: terminal.unwrap_or(1e-4),
        },
    };
    let key = if matches!(spec, ScheduleSpec::Explicit(_)) { "schedule" } else { "schedule.start" };
    r.domain(key, spec.values())?;
    Ok(spec)
}

fn read_grid(r: &mut Reader) -> Result<Grid, ConfigError> {
    let n = r.uint("grid.n")?;
    let nx = r.uint("grid.nx")?;
    let ny = r.uint("grid.ny")?;
    if n.is_some() && (nx.is_some() || ny.is_some()) {
        return err(r.line("grid.n"), "give either `grid.n` or `grid.nx`/`grid.ny`, not both");
    }
    let nx = n.or(nx).unwrap_or(65) as usize;
    let ny = n.or(ny).unwrap_or(nx as u64) as usize;
    let bounds = r.list_or("grid.bounds", &[0.0, 1.0, 0.0, 1.0])?;
    let Ok(b) = <[f64; 4]>::try_from(bounds.as_slice()) else {
        return err(r.line("grid.bounds"), "`grid.bounds` needs four numbers x_min, x_max, y_min, y_max");
    };
    let g = r.domain("grid", Grid::new(b, nx, ny))?;
    r.domain("grid", splitvar::solver::check_second_difference_grid(&g))?;
    Ok(g)
}

fn read_preset(r: &mut Reader) -> Result<BoundaryPreset, ConfigError> {
    let key = r.str("preset").unwrap_or_else(|| "sine".into());
    if !BoundaryPreset::KEYS.contains(&key.as_str()) {
        return r.bad("preset", &key, &format!("one of {}", BoundaryPreset::KEYS.join(", ")));
    }
    let mut params = BTreeMap::new();
    for name in BoundaryPreset::param_names(&key) {
        if let Some(v) = r.f64(&format!("preset.{name}"))? {
            params.insert(name.to_string(), v);
        }
    }
    r.domain("preset", BoundaryPreset::from_key(&key, &params))
}

fn read_statements(r: &mut Reader, key: &str) -> Result<Vec<Statement>, ConfigError> {
    let Some(v) = r.str(key) else { return Ok(Vec::new()) };
    v.split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty() && *s != "none")
        .map(|s| match statement_from_key(s) {
            Some(st) => Ok(st),
            None => {
                let names: Vec<&str> = Statement::ALL.iter().map(|s| s.key()).collect();
                err(r.line(key), format!("`{key}`: unknown statement `{s}`; known: {}", names.join(", ")))
            }
        })
        .collect()
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_raw(RawConfig::parse(text)?)
    }

    pub fn from_raw(raw: RawConfig) -> Result<Self, ConfigError> {
        let mut r = Reader { raw, used: BTreeSet::new(), known: BTreeSet::new() };
        // register the dynamic keys so typos in them get suggestions
        for name in ScalarDensity::CATALOG.iter().flat_map(|k| ScalarDensity::catalog_params(k).unwrap_or(&[])) {
            for prefix in ["density.f1.", "density.f2.", "density.profile.", ""] {
                r.known.insert(format!("{prefix}{name}"));
            }
        }
        let density = read_density(&mut r)?;
        let regularization = read_regularization(&mut r)?;
        let schedule = read_schedule(&mut r)?;
        let grid = read_grid(&mut r)?;
        let preset = read_preset(&mut r)?;

        let d = Selection::from_flags([true; 8]);
        let mut flags = d.flags();
        for (flag, name) in flags.iter_mut().zip(Selection::NAMES) {
            *flag = r.bool_or(&format!("experiments.{name}"), *flag)?;
        }
        let experiments = Selection::from_flags(flags);

        let dp = ExperimentParams::default();
        let mu1 = r.f64("params.mu1")?;
        let second = r.list_or("params.second_alphas", &dp.second_alphas)?;
        let Ok(second_alphas) = <[f64; 2]>::try_from(second.as_slice()) else {
            return err(r.line("params.second_alphas"), "`params.second_alphas` needs two numbers");
        };
        let l = r.uint("params.l")?.map_or(Ok(dp.l), |v| {
            u32::try_from(v).or_else(|_| r.bad("params.l", &v.to_string(), "an integer below 2³²"))
        })?;
        let params = ExperimentParams {
            alphas: r.list_or("params.alphas", &dp.alphas)?,
            l,
            chis: r.list_or("params.chis", &dp.chis)?,
            mu1: mu1.unwrap_or(dp.mu1),
            gamma: r.f64("params.gamma")?,
            margin: r.f64_or("params.margin", dp.margin)?,
            second_alphas,
        };
        r.domain("params", params.validate())?;
        if !(params.margin > 0.0 && params.margin <= 0.1 * (grid.x_max - grid.x_min).min(grid.y_max - grid.y_min)) {
            return err(
                r.line("params.margin"),
                format!("`params.margin`: 0 < margin ≤ a tenth of the shorter side required (got {})", params.margin),
            );
        }
        let tau = match (r.f64("params.tau_s")?, r.f64("params.tau_alpha")?) {
            (None, None) => None,
            (Some(ts), Some(ta)) => Some((ts, ta)),
            _ => {
                return err(
                    r.line("params.tau_s").or(r.line("params.tau_alpha")),
                    "give both `params.tau_s` and `params.tau_alpha`",
                )
            }
        };
        if let Some((ts, ta)) = tau {
            let Some(gamma) = params.gamma else {
                return err(r.line("params.tau_s"), "`params.tau_s`/`params.tau_alpha` need `params.gamma`");
            };
            if let Some(mu1) = mu1 {
                let ok = tau_conditions(mu1, gamma, ts, ta);
                if !ok.iter().all(|&b| b) {
                    return err(
                        r.line("params.tau_s"),
                        format!(
                            "(τ_s, τ_α) = ({ts}, {ta}) violates 0 < τ_α < τ_s, γ < 2(τ_s-τ_α)/(1+2τ_s), τ_s-τ_α < 1-μ₁/2 ({ok:?})"
                        ),
                    );
                }
            }
        }

        let lemma1 = Lemma1Spec {
            kappa: r.f64_or("lemma1.kappa", 1.0)?,
            levels: r.list_or("lemma1.levels", &[5.0, 10.0, 20.0, 50.0])?,
            expect: match r.str("lemma1.expect").as_deref() {
                None | Some("consistent") => ProbeVerdict::Consistent,
                Some("violated") => ProbeVerdict::Violated,
                Some("inconclusive") => ProbeVerdict::Inconclusive,
                Some(other) => return r.bad("lemma1.expect", other, "consistent, violated or inconclusive"),
            },
        };
        if lemma1.levels.iter().any(|c| !(*c > 0.0)) || lemma1.levels.windows(2).any(|w| !(w[1] > w[0])) {
            return err(r.line("lemma1.levels"), "`lemma1.levels` must be positive and strictly increasing");
        }
        let ellipticity = EllipticitySpec {
            range: r.f64_or("ellipticity.range", 1e3)?,
            samples: r.usize_or("ellipticity.samples", 1000)?,
            radial_samples: r.usize_or("ellipticity.radial_samples", 200)?,
        };
        if !(ellipticity.range >= 100.0) || ellipticity.samples < 100 || ellipticity.radial_samples < 20 {
            return err(
                r.line("ellipticity.range"),
                "ellipticity fit needs range ≥ 100, samples ≥ 100 and radial_samples ≥ 20",
            );
        }
        let given = ExponentSet {
            mu1: r.f64("exponents.mu1")?,
            mu2: r.f64("exponents.mu2")?,
            kappa: r.f64("exponents.kappa")?,
            varkappa: r.f64("exponents.varkappa")?,
            gamma: r.f64("exponents.gamma")?,
        };
        r.domain("exponents", given.validate())?;
        let chi = r.f64_or("exponents.chi", 4.0)?;
        if !(chi > 2.0) {
            return err(r.line("exponents.chi"), format!("`exponents.chi`: χ > 2 required (got {chi})"));
        }
        let exponents = ExponentSpec { given, chi, require: read_statements(&mut r, "exponents.require")? };
        let uniqueness = UniquenessSpec {
            ratio: r.f64_or("uniqueness.ratio", 1.0 / 3.0)?,
            noise: r.f64_or("uniqueness.noise", 1e-2)?,
        };
        if !(uniqueness.ratio > 0.0 && uniqueness.ratio < 1.0) || !(uniqueness.noise >= 0.0) {
            return err(r.line("uniqueness.ratio"), "`uniqueness.ratio` in (0, 1) and `uniqueness.noise` ≥ 0 required");
        }
        let ds = SolverConfig::default();
        let solver = SolverConfig {
            tol: r.f64_or("solver.tol", ds.tol)?,
            max_iter: r.usize_or("solver.max_iter", ds.max_iter)?,
            armijo: r.f64_or("solver.armijo", ds.armijo)?,
            max_halvings: r.usize_or("solver.max_halvings", ds.max_halvings)?,
            cg_tol: r.f64_or("solver.cg_tol", ds.cg_tol)?,
        };
        r.domain("solver", solver.validate())?;
        let seed = r.uint("seed")?.unwrap_or(0);
        let output = r.str("output");
        let allow_inadmissible = r.bool_or("allow_inadmissible", false)?;
        r.finish()?;
        Ok(Self {
            density,
            regularization,
            schedule,
            grid,
            preset,
            experiments,
            params,
            mu1_given: mu1.is_some(),
            tau,
            lemma1,
            ellipticity,
            exponents,
            uniqueness,
            solver,
            seed,
            output,
            allow_inadmissible,
        })
    }

    /// Canonical, fully spelled-out form; `parse(emit(c)) == c`.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        match &self.density {
            DensitySpec::Splitting { .. } => kv("density.structure", "splitting".into()),
            DensitySpec::Radial { .. } => kv("density.structure", "radial".into()),
        }
        for (name, c) in self.density.components() {
            kv(&format!("density.{name}"), c.key.clone());
            for (p, v) in &c.params {
                kv(&format!("density.{name}.{p}"), v.to_string());
            }
        }
        kv("regularization", self.regularization.key().into());
        match self.regularization {
            Regularization::Power { q } | Regularization::MixedPower { q } => kv("regularization.q", q.to_string()),
            Regularization::SplitPower { gamma } => kv("regularization.gamma", gamma.to_string()),
            Regularization::Quadratic => {}
        }
        match &self.schedule {
            ScheduleSpec::Geometric { start, ratio, terminal } => {
                kv("schedule.start", start.to_string());
                kv("schedule.ratio", ratio.to_string());
                kv("schedule.terminal", terminal.to_string());
            }
            ScheduleSpec::Explicit(v) => kv("schedule", list(v)),
        }
        let g = &self.grid;
        kv("grid.nx", g.nx.to_string());
        kv("grid.ny", g.ny.to_string());
        kv("grid.bounds", list(&[g.x_min, g.x_max, g.y_min, g.y_max]));
        kv("preset", self.preset.key().into());
        for (p, v) in self.preset.params() {
            kv(&format!("preset.{p}"), v.to_string());
        }
        for (name, flag) in Selection::NAMES.iter().zip(self.experiments.flags()) {
            kv(&format!("experiments.{name}"), flag.to_string());
        }
        let p = &self.params;
        kv("params.alphas", list(&p.alphas));
        kv("params.l", p.l.to_string());
        kv("params.chis", list(&p.chis));
        if self.mu1_given {
            kv("params.mu1", p.mu1.to_string());
        }
        if let Some(gamma) = p.gamma {
            kv("params.gamma", gamma.to_string());
        }
        if let Some((ts, ta)) = self.tau {
            kv("params.tau_s", ts.to_string());
            kv("params.tau_alpha", ta.to_string());
        }
        kv("params.margin", p.margin.to_string());
        kv("params.second_alphas", list(&p.second_alphas));
        kv("lemma1.kappa", self.lemma1.kappa.to_string());
        kv("lemma1.levels", list(&self.lemma1.levels));
        kv("lemma1.expect", verdict_key(self.lemma1.expect).into());
        kv("ellipticity.range", self.ellipticity.range.to_string());
        kv("ellipticity.samples", self.ellipticity.samples.to_string());
        kv("ellipticity.radial_samples", self.ellipticity.radial_samples.to_string());
        let e = &self.exponents.given;
        for (k, v) in [("mu1", e.mu1), ("mu2", e.mu2), ("kappa", e.kappa), ("varkappa", e.varkappa), ("gamma", e.gamma)]
        {
            if let Some(v) = v {
                kv(&format!("exponents.{k}"), v.to_string());
            }
        }
        kv("exponents.chi", self.exponents.chi.to_string());
        let req: Vec<&str> = self.exponents.require.iter().map(|s| s.key()).collect();
        kv("exponents.require", if req.is_empty() { "none".into() } else { req.join(", ") });
        kv("uniqueness.ratio", self.uniqueness.ratio.to_string());
        kv("uniqueness.noise", self.uniqueness.noise.to_string());
        let s = &self.solver;
        kv("solver.tol", s.tol.to_string());
        kv("solver.max_iter", s.max_iter.to_string());
        kv("solver.armijo", s.armijo.to_string());
        kv("solver.max_halvings", s.max_halvings.to_string());
        kv("solver.cg_tol", s.cg_tol.to_string());
        kv("seed", self.seed.to_string());
        if let Some(o) = &self.output {
            kv("output", o.clone());
        }
        kv("allow_inadmissible", self.allow_inadmissible.to_string());
        out
    }

    pub fn base_density(&self) -> BaseDensity {
        self.density.build().expect("validated at parse time")
    }

    pub fn schedule_values(&self) -> Vec<f64> {
        self.schedule.values().expect("validated at parse time")
    }
}
