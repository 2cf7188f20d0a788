//! Experiment orchestration and output files.
//!
//! [`run_experiment`] runs the configured engines, estimates densities and
//! writes into the output directory:
//!
//! * `<engine>_x<i>.csv`: marginal density of process `i` (1-based), header
//!   `# t,density`;
//! * `<engine>_joint.csv`: joint density for two or more processes, header
//!   `# t1,t2,density` (one `t` column per process), last axis fastest;
//! * `report.txt`: a human-readable table followed by a `[values]` block of
//!   `key = value` lines;
//! * `config.toml`: the resolved configuration, overrides included.
//!
//! Floats in density files use 17 significant digits, so they read back
//! bit-exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::config::ExperimentConfig;
use crate::engine::{
    estimate_densities, normalized_l1, CmcEngine, Densities, EngineResult, UnifEngine,
};
use crate::error::{Error, Result};
use crate::kde::DensityEstimate;

/// Per-engine summary: one row of the comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineSummary {
    pub name: &'static str,
    pub n_runs: u64,
    /// Discretization step of the baseline.
    pub dt: Option<f64>,
    /// Marginal bandwidth per process.
    pub bandwidths: Vec<f64>,
    pub joint_bandwidth: Option<f64>,
    /// Wall time of the run loop per run, density estimation excluded.
    pub seconds_per_run: f64,
    pub crossing_probabilities: Vec<f64>,
    /// Number of recorded crossings per process.
    pub crossings: Vec<usize>,
    /// Runs in which every process crossed.
    pub joint_crossings: usize,
    /// Grid integral of each marginal density.
    pub total_mass: Vec<f64>,
    pub mean_jumps: f64,
}

impl EngineSummary {
    fn new(name: &'static str, dt: Option<f64>, result: &EngineResult, d: &Densities) -> Self {
        Self {
            name,
            n_runs: result.n_runs,
            dt,
            bandwidths: d.marginals.iter().map(|e| e.bandwidth).collect(),
            joint_bandwidth: d.joint.as_ref().map(|e| e.bandwidth),
            seconds_per_run: result.seconds_per_run,
            crossing_probabilities: result.crossing_probabilities(),
            crossings: result.marginals.iter().map(|s| s.len()).collect(),
            joint_crossings: result.joint.len(),
            total_mass: d.marginals.iter().map(|e| e.total_mass).collect(),
            mean_jumps: result.total_jumps as f64 / result.n_runs as f64,
        }
    }
}

/// Side-by-side summary of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub unif: Option<EngineSummary>,
    pub cmc: Option<EngineSummary>,
    /// Baseline time per run over uniform-sampling time per run.
    pub speedup: Option<f64>,
    /// Per-process normalized L1 distance of the uniform-sampling marginal
    /// from the baseline marginal.
    pub l1_distance: Option<Vec<f64>>,
}

/// Output of one engine: raw samples and their densities.
#[derive(Debug, Clone)]
pub struct EngineRun {
    pub result: EngineResult,
    pub densities: Densities,
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub unif: Option<EngineRun>,
    pub cmc: Option<EngineRun>,
    pub report: ComparisonReport,
}

/// Runs the configured engines and compares them, without touching disk.
pub fn execute(cfg: &ExperimentConfig) -> Result<Experiment> {
    let grid = cfg.density_grid();
    let unif = if cfg.engine.runs_unif() {
        let result = UnifEngine::new(cfg.spec.clone())?.run(cfg.runs, cfg.seed, cfg.workers)?;
        let densities = estimate_densities(&result, &grid)?;
        Some(EngineRun { result, densities })
    } else {
        None
    };
    let cmc = match cfg.cmc_config() {
        Some(c) if cfg.engine.runs_cmc() => {
            let result = CmcEngine::new(cfg.spec.clone(), c)?.run()?;
            let densities = estimate_densities(&result, &grid)?;
            Some(EngineRun { result, densities })
        }
        None if cfg.engine.runs_cmc() => {
            return Err(Error::invalid("dt", "required by the baseline engine"))
        }
        _ => None,
    };

    let summary = |name, dt, r: &Option<EngineRun>| {
        r.as_ref()
            .map(|r| EngineSummary::new(name, dt, &r.result, &r.densities))
    };
    let unif_summary = summary("unif", None, &unif);
    let cmc_summary = summary("cmc", cfg.dt, &cmc);
    let speedup = match (&unif_summary, &cmc_summary) {
        (Some(u), Some(c)) => Some(c.seconds_per_run / u.seconds_per_run),
        _ => None,
    };
    let l1_distance = match (&unif, &cmc) {
        (Some(u), Some(c)) => Some(
            u.densities
                .marginals
                .iter()
                .zip(&c.densities.marginals)
                .map(|(a, b)| normalized_l1(a, b))
                .collect(),
        ),
        _ => None,
    };
    Ok(Experiment {
        unif,
        cmc,
        report: ComparisonReport {
            unif: unif_summary,
            cmc: cmc_summary,
            speedup,
            l1_distance,
        },
    })
}

/// Runs the experiment and writes every output file into `cfg.out`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ComparisonReport> {
    let exp = execute(cfg)?;
    let dir = &cfg.out;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, run) in [("unif", &exp.unif), ("cmc", &exp.cmc)] {
        let Some(run) = run else { continue };
        for (i, est) in run.densities.marginals.iter().enumerate() {
            emit_density_csv(est, &dir.join(format!("{name}_x{}.csv", i + 1)))?;
        }
        if let Some(joint) = &run.densities.joint {
            emit_density_csv(joint, &dir.join(format!("{name}_joint.csv")))?;
        }
    }
    write_file(&dir.join("report.txt"), &exp.report.render())?;
    write_file(&dir.join("config.toml"), &cfg.to_toml())?;
    Ok(exp.report)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes a density as CSV: one row per grid point, coordinates first.
pub fn emit_density_csv(estimate: &DensityEstimate, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_density(estimate, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

fn write_density<W: Write>(estimate: &DensityEstimate, w: &mut W) -> std::io::Result<()> {
    let m = estimate.dim();
    if m == 1 {
        writeln!(w, "# t,density")?;
    } else {
        let cols: Vec<String> = (1..=m).map(|i| format!("t{i}")).collect();
        writeln!(w, "# {},density", cols.join(","))?;
    }
    let mut index = vec![0usize; m];
    for v in &estimate.values {
        for (axis, &k) in estimate.axes.iter().zip(&index) {
            write!(w, "{:.16e},", axis[k])?;
        }
        writeln!(w, "{v:.16e}")?;
        // odometer over the grid, last axis fastest
        for d in (0..m).rev() {
            index[d] += 1;
            if index[d] < estimate.axes[d].len() {
                break;
            }
            index[d] = 0;
        }
    }
    Ok(())
}

impl ComparisonReport {
    fn engines(&self) -> impl Iterator<Item = &EngineSummary> {
        self.unif.iter().chain(self.cmc.iter())
    }

    /// Human-readable table followed by the `[values]` block.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let m = self.engines().next().map_or(0, |e| e.bandwidths.len());

        let mut header = format!(
            "{:<6} {:>9} {:>9} {:>14}",
            "engine", "runs", "dt", "time/run [s]"
        );
        for i in 1..=m {
            let _ = write!(
                header,
                " {:>12} {:>10}",
                format!("h_opt(X{i})"),
                format!("P(X{i})")
            );
        }
        let _ = writeln!(s, "{header}");
        let _ = writeln!(s, "{}", "-".repeat(header.len()));
        for e in self.engines() {
            let dt = e.dt.map_or("-".to_string(), |d| format!("{d}"));
            let _ = write!(
                s,
                "{:<6} {:>9} {:>9} {:>14.6e}",
                e.name, e.n_runs, dt, e.seconds_per_run
            );
            for (h, p) in e.bandwidths.iter().zip(&e.crossing_probabilities) {
                let _ = write!(s, " {h:>12.6} {p:>10.6}");
            }
            let _ = writeln!(s);
        }
        if let Some(x) = self.speedup {
            let _ = writeln!(s, "\nspeedup (cmc time / unif time per run): {x:.1}");
        }
        if let Some(l1) = &self.l1_distance {
            let parts: Vec<String> = l1
                .iter()
                .enumerate()
                .map(|(i, d)| format!("X{}: {d:.4}", i + 1))
                .collect();
            let _ = writeln!(
                s,
                "normalized L1 distance, unif vs cmc: {}",
                parts.join(", ")
            );
        }

        let _ = writeln!(s, "\n[values]");
        for (k, v) in self.values() {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    /// Machine-readable entries, in output order. Floats are written in
    /// shortest round-trip form.
    pub fn values(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut put = |k: String, v: String| out.push((k, v));
        for e in self.engines() {
            let n = e.name;
            put(format!("{n}.runs"), e.n_runs.to_string());
            if let Some(dt) = e.dt {
                put(format!("{n}.dt"), dt.to_string());
            }
            put(
                format!("{n}.seconds_per_run"),
                e.seconds_per_run.to_string(),
            );
            put(format!("{n}.mean_jumps"), e.mean_jumps.to_string());
            for (i, h) in e.bandwidths.iter().enumerate() {
                put(format!("{n}.h_opt.x{}", i + 1), h.to_string());
            }
            if let Some(h) = e.joint_bandwidth {
                put(format!("{n}.h_opt.joint"), h.to_string());
            }
            for (i, p) in e.crossing_probabilities.iter().enumerate() {
                put(
                    format!("{n}.crossing_probability.x{}", i + 1),
                    p.to_string(),
                );
            }
            for (i, c) in e.crossings.iter().enumerate() {
                put(format!("{n}.crossings.x{}", i + 1), c.to_string());
            }
            put(
                format!("{n}.crossings.joint"),
                e.joint_crossings.to_string(),
            );
            for (i, mass) in e.total_mass.iter().enumerate() {
                put(format!("{n}.total_mass.x{}", i + 1), mass.to_string());
            }
        }
        if let Some(x) = self.speedup {
            put("speedup".into(), x.to_string());
        }
        if let Some(l1) = &self.l1_distance {
            for (i, d) in l1.iter().enumerate() {
                put(format!("l1.x{}", i + 1), d.to_string());
            }
        }
        out
    }
}

/// Reads the `[values]` block of a rendered report.
pub fn parse_report_values(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .skip_while(|l| l.trim() != "[values]")
        .skip(1)
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}
