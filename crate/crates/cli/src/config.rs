//! Flat `section.key = value` run configuration.

use std::fmt::Write as _;
use std::path::PathBuf;

use fch_core::convergence::{Coupling, StudyConfig};
use fch_core::dynamics::AdaptiveConfig;
use fch_core::scenarios::{Scenario, ScenarioKind};
use fch_core::solver::SolverConfig;

use crate::error::CliError;

/// Snapshot cadence. Zero disables a trigger.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub every_steps: usize,
    pub every_time: f64,
    /// Also write a plain-text matrix next to each snapshot (grids up to 64 per axis).
    pub text: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceConfig {
    /// `parabolic` (`dt = coef h^2`) or `linear` (`dt = coef h`).
    pub coupling: String,
    pub coef: f64,
    pub ns: Vec<usize>,
    pub t_end: f64,
    pub refine: usize,
}

impl ConvergenceConfig {
    pub fn coupling(&self) -> Result<Coupling, CliError> {
        match self.coupling.as_str() {
            "parabolic" => Ok(Coupling::Parabolic(self.coef)),
            "linear" => Ok(Coupling::Linear(self.coef)),
            other => Err(CliError::Config(format!("unknown coupling '{other}' (parabolic or linear)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub solver: SolverConfig,
    pub adaptive: AdaptiveConfig,
    pub output: OutputConfig,
    pub convergence: ConvergenceConfig,
}

const KEYS: &[&str] = &[
    "scenario",
    "grid.nx",
    "grid.ny",
    "grid.lx",
    "grid.ly",
    "phys.eps",
    "phys.eta",
    "phys.lambda",
    "phys.p",
    "solver.theta1",
    "solver.theta2",
    "solver.tol_res",
    "solver.max_iter",
    "solver.ls_tol",
    "solver.ls_max",
    "solver.ls_margin",
    "adaptive.dt_max",
    "adaptive.dt_min",
    "adaptive.dt_init",
    "adaptive.rate_hi",
    "adaptive.rate_lo",
    "adaptive.grow",
    "adaptive.shrink",
    "run.t_end",
    "run.seed",
    "run.ell",
    "output.dir",
    "output.every_steps",
    "output.every_time",
    "output.text",
    "convergence.coupling",
    "convergence.coef",
    "convergence.ns",
    "convergence.t_end",
    "convergence.refine",
];

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.parse().map_err(|_| CliError::Config(format!("{key}: cannot parse '{v}'")))
}

impl RunConfig {
    pub fn preset(kind: ScenarioKind) -> Self {
        let study = StudyConfig::standard(Coupling::Parabolic(16.0));
        RunConfig {
            scenario: Scenario::preset(kind),
            solver: SolverConfig::default(),
            adaptive: AdaptiveConfig::default(),
            output: OutputConfig { dir: PathBuf::from("out"), every_steps: 0, every_time: 1.0, text: false },
            convergence: ConvergenceConfig {
                coupling: "parabolic".into(),
                coef: 16.0,
                ns: vec![16, 32, 64, 128],
                t_end: study.t_end,
                refine: study.refine,
            },
        }
    }

    /// Applies one `key = value` assignment. `scenario` resets every field to that preset.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let v = value.trim();
        let s = &mut self.scenario;
        match key {
            "scenario" => {
                let kind = ScenarioKind::from_name(v).map_err(|e| CliError::Config(e.to_string()))?;
                *self = RunConfig::preset(kind);
            }
            "grid.nx" => s.n[0] = num(key, v)?,
            "grid.ny" => s.n[1] = num(key, v)?,
            "grid.lx" => s.len[0] = num(key, v)?,
            "grid.ly" => s.len[1] = num(key, v)?,
            "phys.eps" => s.phys.eps = num(key, v)?,
            "phys.eta" => s.phys.eta = num(key, v)?,
            "phys.lambda" => s.phys.lam = num(key, v)?,
            "phys.p" => s.phys.p = num(key, v)?,
            "solver.theta1" => self.solver.theta1 = num(key, v)?,
            "solver.theta2" => self.solver.theta2 = num(key, v)?,
            "solver.tol_res" => self.solver.tol_res = num(key, v)?,
            "solver.max_iter" => self.solver.max_iter = num(key, v)?,
            "solver.ls_tol" => self.solver.ls_tol = num(key, v)?,
            "solver.ls_max" => self.solver.ls_max = num(key, v)?,
            "solver.ls_margin" => self.solver.ls_margin = num(key, v)?,
            "adaptive.dt_max" => self.adaptive.dt_max = num(key, v)?,
            "adaptive.dt_min" => self.adaptive.dt_min = num(key, v)?,
            "adaptive.dt_init" => self.adaptive.dt_init = num(key, v)?,
            "adaptive.rate_hi" => self.adaptive.rate_hi = num(key, v)?,
            "adaptive.rate_lo" => self.adaptive.rate_lo = num(key, v)?,
            "adaptive.grow" => self.adaptive.grow = num(key, v)?,
            "adaptive.shrink" => self.adaptive.shrink = num(key, v)?,
            "run.t_end" => s.t_end = num(key, v)?,
            "run.seed" => s.seed = num(key, v)?,
            "run.ell" => s.ell = num(key, v)?,
            "output.dir" => self.output.dir = PathBuf::from(v),
            "output.every_steps" => self.output.every_steps = num(key, v)?,
            "output.every_time" => self.output.every_time = num(key, v)?,
            "output.text" => self.output.text = num(key, v)?,
            "convergence.coupling" => self.convergence.coupling = v.to_string(),
            "convergence.coef" => self.convergence.coef = num(key, v)?,
            "convergence.ns" => {
                self.convergence.ns = v
                    .split(',')
                    .map(|x| num(key, x.trim()))
                    .collect::<Result<_, _>>()?
            }
            "convergence.t_end" => self.convergence.t_end = num(key, v)?,
            "convergence.refine" => self.convergence.refine = num(key, v)?,
            _ => return Err(CliError::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Resolves assignments in order, starting from the preset named by the
    /// last `scenario` assignment (spinodal when absent).
    pub fn from_assignments(pairs: &[(String, String)]) -> Result<Self, CliError> {
        let kind = match pairs.iter().rev().find(|(k, _)| k == "scenario") {
            Some((_, v)) => ScenarioKind::from_name(v.trim()).map_err(|e| CliError::Config(e.to_string()))?,
            None => ScenarioKind::Spinodal,
        };
        let mut cfg = RunConfig::preset(kind);
        for (k, v) in pairs.iter().filter(|(k, _)| k != "scenario") {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        RunConfig::from_assignments(&parse_assignments(text)?)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let wrap = |e: fch_core::Error| CliError::Config(e.to_string());
        self.scenario.phys.validate().map_err(wrap)?;
        self.scenario.grid().map_err(wrap)?;
        self.solver.validate().map_err(wrap)?;
        self.adaptive.validate().map_err(wrap)?;
        if !(self.scenario.t_end >= 0.0 && self.scenario.t_end.is_finite()) {
            return Err(CliError::Config("run.t_end must be finite and non-negative".into()));
        }
        if !(self.output.every_time >= 0.0) {
            return Err(CliError::Config("output.every_time must be non-negative".into()));
        }
        self.convergence.coupling()?;
        let c = &self.convergence;
        if !(c.coef > 0.0 && c.t_end > 0.0) || c.refine < 4 || c.ns.is_empty() || c.ns.iter().any(|&n| n < 2) {
            return Err(CliError::Config(
                "convergence needs coef > 0, t_end > 0, refine >= 4 and grid sizes >= 2".into(),
            ));
        }
        Ok(())
    }

    /// Every key, one per line, in a form [`RunConfig::parse`] reads back exactly.
    pub fn emit(&self) -> String {
        let s = &self.scenario;
        let (sv, a, o, c) = (&self.solver, &self.adaptive, &self.output, &self.convergence);
        let ns: Vec<String> = c.ns.iter().map(|n| n.to_string()).collect();
        let values: Vec<String> = vec![
            s.kind.name().into(),
            s.n[0].to_string(),
            s.n[1].to_string(),
            format!("{:?}", s.len[0]),
            format!("{:?}", s.len[1]),
            format!("{:?}", s.phys.eps),
            format!("{:?}", s.phys.eta),
            format!("{:?}", s.phys.lam),
            s.phys.p.to_string(),
            format!("{:?}", sv.theta1),
            format!("{:?}", sv.theta2),
            format!("{:?}", sv.tol_res),
            sv.max_iter.to_string(),
            format!("{:?}", sv.ls_tol),
            sv.ls_max.to_string(),
            format!("{:?}", sv.ls_margin),
            format!("{:?}", a.dt_max),
            format!("{:?}", a.dt_min),
            format!("{:?}", a.dt_init),
            format!("{:?}", a.rate_hi),
            format!("{:?}", a.rate_lo),
            format!("{:?}", a.grow),
            format!("{:?}", a.shrink),
            format!("{:?}", s.t_end),
            s.seed.to_string(),
            format!("{:?}", s.ell),
            o.dir.display().to_string(),
            o.every_steps.to_string(),
            format!("{:?}", o.every_time),
            o.text.to_string(),
            c.coupling.clone(),
            format!("{:?}", c.coef),
            ns.join(","),
            format!("{:?}", c.t_end),
            c.refine.to_string(),
        ];
        let mut out = String::new();
        for (k, v) in KEYS.iter().zip(values) {
            writeln!(out, "{k} = {v}").unwrap();
        }
        out
    }
}

/// Splits `key = value` lines; `#` starts a comment.
pub fn parse_assignments(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        out.push(parse_assignment(line).map_err(|e| CliError::Config(format!("line {}: {e}", lineno + 1)))?);
    }
    Ok(out)
}

pub fn parse_assignment(s: &str) -> Result<(String, String), CliError> {
    let (k, v) = s.split_once('=').ok_or_else(|| CliError::Config(format!("expected key = value, got '{s}'")))?;
    let k = k.trim();
    if !KEYS.contains(&k) {
        return Err(CliError::Config(format!("unknown key '{k}'")));
    }
    Ok((k.to_string(), v.trim().to_string()))
}
