use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fock::{build_basis, LatticeParams};
use crate::hamiltonian::build_hamiltonian;
use crate::observables::{center_of_mass, oscillation_period, spread, ObservableFrame};
use crate::propagator::{evolve, initial_state};
use crate::qfi::{
    cramer_rao_bound, default_window, fit_alpha, qfi_series, running_alpha, QfiSeries,
};

use super::config::{ExperimentConfig, SweepParameter, SweepPoint};

/// Tolerances checked on every snapshot of every run.
pub const DENSITY_SUM_TOLERANCE: f64 = 1e-9;
pub const GAMMA_SUM_TOLERANCE: f64 = 1e-9;
pub const GAMMA_SYMMETRY_TOLERANCE: f64 = 1e-12;
pub const UNITARITY_TOLERANCE: f64 = 1e-8;
pub const SINGLE_DENSITY_FLOOR: f64 = -1e-12;
pub const QFI_FLOOR: f64 = -1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub snapshots: usize,
    /// `max |<psi|psi> - 1|` over the run.
    pub max_norm_deviation: f64,
    pub max_density_sum_error: f64,
    pub max_gamma_sum_error: Option<f64>,
    pub max_gamma_asymmetry: Option<f64>,
    pub min_single_density: f64,
    pub final_asymmetry: f64,
    /// Dominant period of the spread about the start center.
    pub spread_period: Option<f64>,
    /// Same for the doubly occupied part of the density.
    pub doublon_spread_period: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QfiSummary {
    pub epsilon: f64,
    pub half_step_change: f64,
    pub reliable: bool,
    pub alpha: Option<f64>,
    pub residual: Option<f64>,
    pub window: [f64; 2],
    pub fq_at_zero: f64,
    pub min_fq: f64,
    pub fq_final: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub label: String,
    pub params: LatticeParams,
    /// Parameter line repeated at the top of every table of this point.
    pub header: String,
    pub files: Vec<FileRecord>,
    pub diagnostics: Diagnostics,
    pub qfi: Option<QfiSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub name: String,
    pub config_sha256: String,
    pub points: Vec<PointRecord>,
    pub files: Vec<FileRecord>,
    /// Invariant violations found during the run; empty on success.
    pub violations: Vec<String>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl RunManifest {
    pub fn load(root: &Path) -> Result<Self> {
        let path = root.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))
    }

    /// Files whose checksum no longer matches; empty if all verify.
    pub fn verify(&self, root: &Path) -> Result<Vec<String>> {
        let mut bad = Vec::new();
        let all = self
            .files
            .iter()
            .chain(self.points.iter().flat_map(|p| &p.files));
        for record in all {
            let path = root.join(&record.path);
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            if sha256_hex(&bytes) != record.sha256 {
                bad.push(record.path.clone());
            }
        }
        Ok(bad)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Parameter line shared by every table of a sweep point.
pub fn parameter_header(config: &ExperimentConfig, params: &LatticeParams) -> String {
    let s = &config.schedule;
    let mut line = format!(
        "L={} N={} delta={} U={} F={} initial_state={} t_max={} n_snapshots={} method={}",
        params.sites,
        params.particles,
        params.delta,
        params.interaction,
        params.tilt,
        config.initial_state.name(),
        s.t_max,
        s.n_snapshots,
        serde_json::to_value(s.method)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default(),
    );
    if let Some(dt) = s.dt {
        let _ = write!(line, " dt={dt}");
    }
    line
}

struct PointOutput {
    record: PointRecord,
    qfi: Option<QfiSeries>,
    violations: Vec<String>,
}

/// Run every sweep point and write tables plus `manifest.json` under
/// [`ExperimentConfig::output_root`].
pub fn run(config: &ExperimentConfig) -> Result<RunManifest> {
    config.validate()?;
    let root = config.output_root();
    fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;

    let points = config.points();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?;
    // collect every result so the reported failure is the first in sweep order
    let results: Vec<Result<PointOutput>> = pool.install(|| {
        points
            .par_iter()
            .map(|pt| {
                run_point(config, pt, &root).map_err(|e| Error::Run {
                    point: pt.label.clone(),
                    source: Box::new(e),
                })
            })
            .collect()
    });
    let outputs = results.into_iter().collect::<Result<Vec<_>>>()?;

    let config_text = config.to_toml_string()?;
    let mut files = vec![write_file(&root, "config.toml", config_text.as_bytes())?];
    if let Some(table) = delta_table(config, &points, &outputs) {
        files.push(write_file(&root, "qfi_delta.tsv", table.as_bytes())?);
    }

    let mut violations = Vec::new();
    let mut records = Vec::new();
    for out in outputs {
        violations.extend(
            out.violations
                .iter()
                .map(|v| format!("{}: {v}", out.record.label)),
        );
        records.push(out.record);
    }
    let manifest = RunManifest {
        name: config.name.clone().unwrap_or_else(|| "run".into()),
        config_sha256: sha256_hex(config_text.as_bytes()),
        points: records,
        files,
        violations,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Format(e.to_string()))?;
    let path = root.join(MANIFEST_FILE);
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

fn write_file(root: &Path, relative: &str, bytes: &[u8]) -> Result<FileRecord> {
    let path = root.join(relative);
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    Ok(FileRecord {
        path: relative.to_string(),
        sha256: sha256_hex(bytes),
        bytes: bytes.len() as u64,
    })
}

fn table_header(kind: &str, header: &str, columns: &str) -> String {
    format!("# hnwalk {kind}\n# {header}\n# {columns}\n")
}

fn run_point(config: &ExperimentConfig, point: &SweepPoint, root: &Path) -> Result<PointOutput> {
    let params = point.params;
    let basis = build_basis(&params)?;
    let h = build_hamiltonian(&basis, &params)?;
    let psi0 = initial_state(&basis, config.initial_state)?;
    let snapshots = evolve(&h, &psi0, &config.schedule)?;
    let center = config.initial_state.center(params.sites);
    let two = params.particles == 2;
    let obs = &config.observables;

    let frames: Vec<ObservableFrame> = snapshots
        .iter()
        .map(|s| ObservableFrame::measure(s, &basis, center, two))
        .collect::<Result<_>>()?;

    let header = parameter_header(config, &params);
    let mut violations = Vec::new();
    let mut diag = Diagnostics {
        snapshots: frames.len(),
        max_norm_deviation: 0.0,
        max_density_sum_error: 0.0,
        max_gamma_sum_error: two.then_some(0.0),
        max_gamma_asymmetry: two.then_some(0.0),
        min_single_density: f64::INFINITY,
        final_asymmetry: frames.last().map(|f| f.asymmetry).unwrap_or(0.0),
        spread_period: None,
        doublon_spread_period: None,
    };
    let expected_pairs = (params.particles * (params.particles - 1)) as f64;
    for f in &frames {
        diag.max_norm_deviation = diag.max_norm_deviation.max((f.norm_sq - 1.0).abs());
        diag.max_density_sum_error = diag
            .max_density_sum_error
            .max((f.total_density() - params.particles as f64).abs());
        let low = f
            .single_density
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        diag.min_single_density = diag.min_single_density.min(low);
        if let Some(g) = &f.correlator {
            let sum_err = (g.sum() - expected_pairs).abs();
            diag.max_gamma_sum_error = diag.max_gamma_sum_error.map(|m| m.max(sum_err));
            diag.max_gamma_asymmetry = diag.max_gamma_asymmetry.map(|m| m.max(g.max_asymmetry()));
        }
    }
    if !(diag.max_density_sum_error <= DENSITY_SUM_TOLERANCE) {
        violations.push(format!(
            "density sum off by {:.3e}",
            diag.max_density_sum_error
        ));
    }
    if let Some(e) = diag
        .max_gamma_sum_error
        .filter(|e| !(*e <= GAMMA_SUM_TOLERANCE))
    {
        violations.push(format!("correlator sum off by {e:.3e}"));
    }
    if let Some(e) = diag
        .max_gamma_asymmetry
        .filter(|e| !(*e <= GAMMA_SYMMETRY_TOLERANCE))
    {
        violations.push(format!("correlator asymmetric by {e:.3e}"));
    }
    if params.delta == 0.0 && !(diag.max_norm_deviation <= UNITARITY_TOLERANCE) {
        violations.push(format!(
            "Hermitian run lost norm by {:.3e}",
            diag.max_norm_deviation
        ));
    }
    if !(diag.min_single_density >= SINGLE_DENSITY_FLOOR) {
        violations.push(format!(
            "negative single-occupancy density {:.3e}",
            diag.min_single_density
        ));
    }

    let spreads: Vec<f64> = frames.iter().map(|f| spread(&f.density, center)).collect();
    let doublon_spreads: Vec<f64> = frames
        .iter()
        .map(|f| {
            let w = f.doublon_weight();
            if w > 0.0 {
                spread(&f.doublon_density, center)
            } else {
                0.0
            }
        })
        .collect();
    let dt = config.schedule.spacing();
    diag.spread_period = oscillation_period(&spreads, dt).map(|o| o.period);
    if two {
        diag.doublon_spread_period = oscillation_period(&doublon_spreads, dt).map(|o| o.period);
    }

    let dir = point.label.clone();
    let mut files = Vec::new();

    let mut summary = table_header(
        "summary",
        &header,
        "t norm_sq total_density asymmetry center_of_mass spread doublon_weight doublon_spread gamma_diagonal",
    );
    for (k, f) in frames.iter().enumerate() {
        let diagonal = f
            .correlator
            .as_ref()
            .map(|g| g.diagonal_sum())
            .unwrap_or(0.0);
        let _ = writeln!(
            summary,
            "{:.6}\t{:.12e}\t{:.12e}\t{:.12e}\t{:.12e}\t{:.12e}\t{:.12e}\t{:.12e}\t{:.12e}",
            f.t,
            f.norm_sq,
            f.total_density(),
            f.asymmetry,
            center_of_mass(&f.density),
            spreads[k],
            f.doublon_weight(),
            doublon_spreads[k],
            diagonal
        );
    }
    files.push(write_file(
        root,
        &format!("{dir}/summary.tsv"),
        summary.as_bytes(),
    )?);

    if obs.density {
        let decomposed = obs.decomposition && two;
        let columns = if decomposed {
            "t site n n1 n2"
        } else {
            "t site n"
        };
        let mut table = table_header("density", &header, columns);
        for f in &frames {
            for i in 0..params.sites {
                if decomposed {
                    let _ = writeln!(
                        table,
                        "{:.6}\t{}\t{:.12e}\t{:.12e}\t{:.12e}",
                        f.t,
                        i + 1,
                        f.density[i],
                        f.single_density[i],
                        f.doublon_density[i]
                    );
                } else {
                    let _ = writeln!(table, "{:.6}\t{}\t{:.12e}", f.t, i + 1, f.density[i]);
                }
            }
        }
        files.push(write_file(
            root,
            &format!("{dir}/density.tsv"),
            table.as_bytes(),
        )?);
    }

    if obs.correlator && two {
        let target = obs.correlator_time.unwrap_or(config.schedule.t_max);
        let k = nearest(&frames, target);
        let f = &frames[k];
        let g = f
            .correlator
            .as_ref()
            .expect("correlator measured for two bosons");
        let mut table = table_header("correlator", &header, "t i j gamma");
        for i in 1..=params.sites {
            for j in 1..=params.sites {
                let _ = writeln!(table, "{:.6}\t{i}\t{j}\t{:.12e}", f.t, g.at(i, j));
            }
        }
        files.push(write_file(
            root,
            &format!("{dir}/correlator.tsv"),
            table.as_bytes(),
        )?);
    }

    let mut qfi_out = None;
    let mut qfi_summary = None;
    if let Some(options) = &obs.qfi {
        let mut series = qfi_series(&params, &psi0, &config.schedule, options.epsilon)?;
        let (lo, hi) = default_window(&params);
        let window = options
            .window
            .unwrap_or([lo, hi.min(config.schedule.t_max)]);
        series.alpha_fit = fit_alpha(&series, (window[0], window[1])).ok();

        let fq_at_zero = series.fq.first().copied().unwrap_or(0.0);
        let min_fq = series.fq.iter().copied().fold(f64::INFINITY, f64::min);
        if !(fq_at_zero.abs() <= -QFI_FLOOR) {
            violations.push(format!("F_Q(0) = {fq_at_zero:.3e}"));
        }
        if !(min_fq >= QFI_FLOOR) {
            violations.push(format!("negative F_Q {min_fq:.3e}"));
        }

        let running = running_alpha(&series.times, &series.fq);
        let mut table = table_header("qfi", &header, "t fq cramer_rao running_alpha");
        for ((t, fq), a) in series.times.iter().zip(&series.fq).zip(&running) {
            let crb = cramer_rao_bound(*fq)
                .map(|b| format!("{b:.12e}"))
                .unwrap_or_else(|_| "inf".into());
            let a = a.map(|a| format!("{a:.6}")).unwrap_or_else(|| "nan".into());
            let _ = writeln!(table, "{t:.6}\t{fq:.12e}\t{crb}\t{a}");
        }
        let _ = writeln!(
            table,
            "# epsilon={:e} half_step_change={:.3e} reliable={}",
            series.epsilon, series.half_step_change, series.reliable
        );
        match &series.alpha_fit {
            Some(fit) => {
                let _ = writeln!(
                    table,
                    "# fit window=[{}, {}] samples={} alpha={:.6} log_prefactor={:.6} residual={:.3e}",
                    fit.window.0, fit.window.1, fit.samples, fit.alpha, fit.log_prefactor, fit.residual
                );
            }
            None => {
                let _ = writeln!(table, "# fit window=[{}, {}] failed", window[0], window[1]);
            }
        }
        files.push(write_file(
            root,
            &format!("{dir}/qfi.tsv"),
            table.as_bytes(),
        )?);

        qfi_summary = Some(QfiSummary {
            epsilon: series.epsilon,
            half_step_change: series.half_step_change,
            reliable: series.reliable,
            alpha: series.alpha_fit.map(|f| f.alpha),
            residual: series.alpha_fit.map(|f| f.residual),
            window,
            fq_at_zero,
            min_fq,
            fq_final: series.fq.last().copied().unwrap_or(0.0),
        });
        qfi_out = Some(series);
    }

    Ok(PointOutput {
        record: PointRecord {
            label: point.label.clone(),
            params,
            header,
            files,
            diagnostics: diag,
            qfi: qfi_summary,
        },
        qfi: qfi_out,
        violations,
    })
}

fn nearest(frames: &[ObservableFrame], t: f64) -> usize {
    frames
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1.t - t).abs().total_cmp(&(b.1.t - t).abs()))
        .map(|(k, _)| k)
        .unwrap_or(0)
}

/// `Delta(t)` for every point with `delta != 0` against its `delta = 0`
/// partner (same values on the other axes).
fn delta_table(
    config: &ExperimentConfig,
    points: &[SweepPoint],
    outputs: &[PointOutput],
) -> Option<String> {
    config.observables.qfi.as_ref()?;
    let others = |pt: &SweepPoint| -> Vec<(SweepParameter, u64)> {
        pt.coordinates
            .iter()
            .filter(|(p, _)| *p != SweepParameter::Delta)
            .map(|(p, v)| (*p, v.to_bits()))
            .collect()
    };
    let mut table = table_header(
        "qfi-delta",
        &parameter_header(config, &config.params),
        "point t delta_metric",
    );
    let mut rows = 0;
    for (pt, out) in points.iter().zip(outputs) {
        if pt.params.delta == 0.0 {
            continue;
        }
        let partner = points
            .iter()
            .zip(outputs)
            .find(|(q, _)| q.params.delta == 0.0 && others(q) == others(pt));
        let (Some(series), Some((_, reference))) = (&out.qfi, partner) else {
            continue;
        };
        let Some(reference) = &reference.qfi else {
            continue;
        };
        for &t in series.times.iter().filter(|t| **t > 0.0) {
            if let Ok(d) = crate::qfi::delta_metric(reference, series, t) {
                let _ = writeln!(table, "{}\t{t:.6}\t{d:.12e}", pt.label);
                rows += 1;
            }
        }
    }
    (rows > 0).then_some(table)
}

/// Directory of one sweep point's tables.
pub fn point_dir(root: &Path, label: &str) -> PathBuf {
    root.join(label)
}
