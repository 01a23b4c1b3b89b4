//! The `run`, `convergence` and `inspect` subcommands.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use fch_core::convergence::{fit_slope, pair_slopes, run_case, ConvergenceRow, StudyConfig};
use fch_core::dynamics::{advance_adaptive_with, DiagnosticsRecord};
use fch_core::grid::{mean, norm, Norm};
use fch_core::scenarios::RNG_NAME;
use fch_core::{Field, SpectralWorkspace};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::snapshot::{params_hash, read_snapshot, write_snapshot, write_text, SnapshotHeader};

pub const CSV_HEADER: &str = "step,t,dt,E_fch,E_ch,E_pfw,mass,min,max,h2norm,gradmu,psd_iters,residual";

/// Largest per-axis size for which text matrices are written.
pub const TEXT_EXPORT_MAX: usize = 64;

pub fn csv_row(r: &DiagnosticsRecord) -> String {
    let e = &r.energy;
    format!(
        "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e}",
        r.step, r.t, r.dt, e.total, e.ch, e.pfw, r.mass, r.min, r.max, r.h2norm, r.gradmu, r.psd_iters, r.residual
    )
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Summary of a finished run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub t: f64,
    pub snapshots: Vec<PathBuf>,
}

struct Writer<'a> {
    cfg: &'a RunConfig,
    dir: PathBuf,
    csv: BufWriter<fs::File>,
    snapshots: Vec<PathBuf>,
    last_snap_step: Option<usize>,
    next_time: f64,
    hash: String,
    text: bool,
}

impl Writer<'_> {
    fn snapshot(&mut self, rec: &DiagnosticsRecord, phi: &Field) -> Result<(), CliError> {
        let path = self.dir.join(format!("snap_{:08}.bin", rec.step));
        let header = SnapshotHeader {
            grid: *phi.grid(),
            t: rec.t,
            step: rec.step,
            seed: self.cfg.scenario.seed,
            params: self.hash.clone(),
        };
        write_snapshot(&path, &header, phi)?;
        if self.text {
            write_text(&path.with_extension("txt"), phi)?;
        }
        self.snapshots.push(path);
        self.last_snap_step = Some(rec.step);
        Ok(())
    }

    fn record(&mut self, rec: &DiagnosticsRecord, phi: &Field) -> Result<(), CliError> {
        writeln!(self.csv, "{}", csv_row(rec)).map_err(|e| io_err(&self.dir, e))?;
        let o = &self.cfg.output;
        let by_step = o.every_steps > 0 && rec.step % o.every_steps == 0;
        let mut by_time = false;
        if o.every_time > 0.0 && rec.t >= self.next_time * (1.0 - 1e-12) {
            by_time = true;
            while self.next_time <= rec.t * (1.0 + 1e-12) {
                self.next_time += o.every_time;
            }
        }
        if rec.step == 0 || by_step || by_time {
            self.snapshot(rec, phi)?;
        }
        Ok(())
    }
}

fn manifest(cfg: &RunConfig) -> String {
    let mut m = String::new();
    writeln!(m, "# fch {}", env!("CARGO_PKG_VERSION")).unwrap();
    writeln!(m, "# rng = {RNG_NAME}").unwrap();
    writeln!(m, "# params_hash = {}", params_hash(&cfg.scenario.phys)).unwrap();
    m.push_str(&cfg.emit());
    m
}

/// Adaptive run of the configured scenario. Writes `manifest.txt`,
/// `diagnostics.csv` and snapshots into the output directory.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    cfg.validate()?;
    let dir = cfg.output.dir.clone();
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    fs::write(dir.join("manifest.txt"), manifest(cfg)).map_err(|e| io_err(&dir, e))?;

    let sc = &cfg.scenario;
    let grid = sc.grid()?;
    let phi0 = sc.initial_state()?;
    let csv_path = dir.join("diagnostics.csv");
    let mut csv = BufWriter::new(fs::File::create(&csv_path).map_err(|e| io_err(&csv_path, e))?);
    writeln!(csv, "{CSV_HEADER}").map_err(|e| io_err(&csv_path, e))?;
    let mut w = Writer {
        cfg,
        dir: dir.clone(),
        csv,
        snapshots: Vec::new(),
        last_snap_step: None,
        next_time: cfg.output.every_time,
        hash: params_hash(&sc.phys),
        text: cfg.output.text && (0..grid.dim()).all(|a| grid.n(a) <= TEXT_EXPORT_MAX),
    };
    let first = DiagnosticsRecord::initial(&phi0, 0.0, &sc.phys)?;
    w.record(&first, &phi0)?;

    let mut last = first;
    let mut failure: Option<CliError> = None;
    let mut ws = SpectralWorkspace::new(grid);
    let result = if sc.t_end > 0.0 {
        advance_adaptive_with(&phi0, 0.0, sc.t_end, &sc.phys, &cfg.adaptive, &cfg.solver, &mut ws, |rec, phi| {
            last = *rec;
            w.record(rec, phi).map_err(|e| {
                let msg = e.to_string();
                failure = Some(e);
                fch_core::Error::Observer(msg)
            })
        })
    } else {
        Ok(phi0.clone())
    };
    let phi = match result {
        Ok(phi) => phi,
        Err(e) => {
            let _ = w.csv.flush();
            return Err(failure.unwrap_or_else(|| e.into()));
        }
    };
    if w.last_snap_step != Some(last.step) {
        w.snapshot(&last, &phi)?;
    }
    w.csv.flush().map_err(|e| io_err(&csv_path, e))?;
    Ok(RunSummary { steps: last.step, t: last.t, snapshots: w.snapshots })
}

/// Result of the convergence harness.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSummary {
    pub rows: Vec<ConvergenceRow>,
    pub slope: Option<f64>,
    pub pairs: Vec<f64>,
}

impl ConvergenceSummary {
    pub fn table(&self) -> String {
        let mut s = String::from("N,h,dt,steps,error\n");
        for r in &self.rows {
            writeln!(s, "{},{:.16e},{:.16e},{},{:.16e}", r.n, r.h, r.dt, r.steps, r.error).unwrap();
        }
        match self.slope {
            Some(k) => writeln!(s, "# fitted slope {k:.6}").unwrap(),
            None => writeln!(s, "# fitted slope n/a (fewer than two grids)").unwrap(),
        }
        for (w, p) in self.rows.windows(2).zip(&self.pairs) {
            writeln!(s, "# pair slope {}-{} {p:.6}", w[0].n, w[1].n).unwrap();
        }
        s
    }
}

/// Manufactured-solution study over the configured grid sizes, run in parallel.
/// Writes `convergence.csv` into the output directory.
pub fn cmd_convergence(cfg: &RunConfig) -> Result<ConvergenceSummary, CliError> {
    cfg.validate()?;
    let c = &cfg.convergence;
    let study = StudyConfig {
        coupling: c.coupling()?,
        t_end: c.t_end,
        phys: cfg.scenario.phys,
        solver: cfg.solver,
        refine: c.refine,
    };
    let rows: Vec<ConvergenceRow> =
        c.ns.par_iter().map(|&n| run_case(n, &study)).collect::<Result<_, _>>()?;
    let summary = ConvergenceSummary { slope: fit_slope(&rows), pairs: pair_slopes(&rows), rows };
    let dir = &cfg.output.dir;
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    fs::write(dir.join("manifest.txt"), manifest(cfg)).map_err(|e| io_err(dir, e))?;
    fs::write(dir.join("convergence.csv"), summary.table()).map_err(|e| io_err(dir, e))?;
    Ok(summary)
}

/// Header and basic statistics of a snapshot file.
pub fn cmd_inspect(path: &Path) -> Result<String, CliError> {
    let s = read_snapshot(path)?;
    let f = &s.field;
    let mut out = String::new();
    writeln!(out, "{}", s.header.to_line()).unwrap();
    writeln!(out, "cells {}", f.values().len()).unwrap();
    writeln!(out, "min {:.16e}", f.min()).unwrap();
    writeln!(out, "max {:.16e}", f.max()).unwrap();
    writeln!(out, "mean {:.16e}", mean(f)).unwrap();
    writeln!(out, "l2 {:.16e}", norm(f, Norm::L2)?).unwrap();
    Ok(out)
}
