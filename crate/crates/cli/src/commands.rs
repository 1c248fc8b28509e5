//! Subcommand runners. Each writes its files under the output directory and
//! returns a short summary for the terminal.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_4;
use std::path::{Path, PathBuf};

use msqaoa::constants::{hz, to_hz};
use msqaoa::density::bitstring;
use msqaoa::ion::{ising_couplings, loop_time, maxcut_weights};
use msqaoa::noise::{compose_fluctuations, fit_bitflip_epsilon, spam_apply};
use msqaoa::oracle::{fock_reduced_density, FockTruncation, ModeState};
use msqaoa::propagator::{geometric_phase, reduced_density};
use msqaoa::qaoa::{approximation_ratio, calibrate_rabi_mp, heatmap_sweep, Calibration, Sampling};
use msqaoa::stats::{chi2_red, rmse, stderr_prob, ObservationSet};
use msqaoa::{AnalogQaoa, Basis, MaxCutInstance, SpinDensity};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{self, parse_bitstring, Format, RunConfig, SamplingKind};
use crate::dataset::{bitstring_labels, read_spam_matrix, DatasetKind, ExperimentDataset, Table};
use crate::error::{AtKey, CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Options shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct Context {
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
}

impl Context {
    fn out_dir(&self, cfg: Option<&RunConfig>) -> PathBuf {
        self.out
            .clone()
            .or_else(|| cfg.and_then(|c| c.out.clone()))
            .unwrap_or_else(|| PathBuf::from("."))
    }

    fn format(&self, cfg: Option<&RunConfig>) -> Format {
        self.format
            .or_else(|| cfg.and_then(|c| c.format))
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Output {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

/// Everything needed to reproduce a run: the resolved config plus derived
/// quantities recorded for inspection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config: RunConfig,
    pub derived: serde_json::Value,
}

fn write(dir: &Path, name: &str, contents: &str, files: &mut Vec<PathBuf>) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
    files.push(path);
    Ok(())
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T, files: &mut Vec<PathBuf>) -> CliResult<()> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    write(dir, name, &s, files)
}

fn write_manifest(
    dir: &Path,
    command: &str,
    cfg: &RunConfig,
    seed: u64,
    derived: serde_json::Value,
    files: &mut Vec<PathBuf>,
) -> CliResult<()> {
    let manifest = Manifest {
        command: command.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.with_seed(seed),
        derived,
    };
    write_json(dir, MANIFEST_FILE, &manifest, files)
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn chain_record(r: &config::Resolved) -> serde_json::Value {
    json!({
        "mode_freqs_hz": r.chain.mode_freqs().iter().map(|w| to_hz(*w)).collect::<Vec<_>>(),
        "eigenvectors": rows(r.chain.eigenvectors()),
        "lamb_dicke": rows(r.chain.lamb_dicke()),
        "mu_hz": to_hz(r.pulse.mu),
    })
}

/// Populations and their shot-noise error bars along an MS time grid.
pub fn simulate_ms(cfg: &RunConfig, ctx: &Context) -> CliResult<Output> {
    let r = cfg.resolve(ctx.seed)?;
    let ms = cfg.ms()?;
    let n = r.chain.n();
    let t_loop = loop_time(&r.pulse, &r.chain).at("pulse")?;
    let grid: Vec<(f64, f64)> = match (&ms.loops, &ms.times_s) {
        (Some(axis), None) => axis
            .points("ms.loops")?
            .into_iter()
            .map(|l| (l * t_loop, l))
            .collect(),
        (None, Some(times)) => times.iter().map(|&t| (t, t / t_loop)).collect(),
        _ => return Err(CliError::config("ms: give exactly one of loops or times_s")),
    };
    if grid.iter().any(|(t, _)| !(*t >= 0.0 && t.is_finite())) {
        return Err(CliError::config("ms: times must be finite and non-negative"));
    }
    let initial = match &ms.initial {
        Some(s) => parse_bitstring(s, n, "ms.initial")?,
        None => 0,
    };
    let shots = ms.shots.unwrap_or(config::DEFAULT_SHOTS);
    let rho0 = SpinDensity::basis_state(n, Basis::Z, initial)?;
    let results: Vec<CliResult<Vec<f64>>> = grid
        .par_iter()
        .map(|&(t, loops)| {
            let pulse = r.pulse.with_duration(t);
            let rho = compose_fluctuations(&rho0, &r.chain, &pulse, t, &r.noise)?;
            let probs = rho.to_basis(Basis::Z).probabilities();
            let probs = match &r.noise.spam {
                Some(s) => spam_apply(s, &probs)?,
                None => probs,
            };
            let mut row = vec![t, loops];
            row.extend(probs.iter().copied());
            row.extend(probs.iter().map(|p| stderr_prob(*p, shots)));
            row.push(rho.purity());
            Ok(row)
        })
        .collect();
    let labels = bitstring_labels(n);
    let mut columns = vec!["time_s".to_string(), "loops".to_string()];
    columns.extend(labels.iter().map(|z| format!("P_{z}")));
    columns.extend(labels.iter().map(|z| format!("dP_{z}")));
    columns.push("purity".into());
    let mut table = Table::new(columns);
    for row in results {
        table.push(row?);
    }
    let dir = ctx.out_dir(Some(cfg));
    let format = ctx.format(Some(cfg));
    let mut files = Vec::new();
    let name = match format {
        Format::Csv => "ms.csv",
        Format::Json => "ms.json",
    };
    write(&dir, name, &table.render(format), &mut files)?;
    let derived = json!({
        "chain": chain_record(&r),
        "loop_time_s": t_loop,
        "couplings_rad_s": rows(&ising_couplings(&r.chain, &r.pulse)?),
        "shots": shots,
        "initial": bitstring(initial, n),
    });
    write_manifest(&dir, "simulate-ms", cfg, r.seed, derived, &mut files)?;
    Ok(Output {
        files,
        summary: format!("{} time points, loop time {:.6e} s", table.rows.len(), t_loop),
    })
}

/// Max-power Rabi rate from `qaoa.rabi_mp_hz` or a calibration run.
fn resolve_rabi_mp(cfg: &RunConfig, r: &config::Resolved) -> CliResult<(f64, Option<Calibration>)> {
    let q = cfg.qaoa()?;
    let request = q.calibration_request(r.chain.n())?;
    match (q.rabi_mp_hz, request) {
        (Some(_), Some(_)) => Err(CliError::config(
            "qaoa: give either rabi_mp_hz or calibration, not both",
        )),
        (Some(f), None) => {
            if !(f > 0.0 && f.is_finite()) {
                return Err(CliError::config("qaoa.rabi_mp_hz: must be positive"));
            }
            Ok((hz(f), None))
        }
        (None, Some(req)) => {
            let cal = calibrate_rabi_mp(&r.chain, &r.pulse, req.mode, req.n_loops, &req.window)
                .at("qaoa.calibration")?;
            Ok((cal.rabi_mp, Some(cal)))
        }
        (None, None) => Err(CliError::config("qaoa: need rabi_mp_hz or calibration")),
    }
}

fn calibration_record(cal: &Calibration) -> serde_json::Value {
    json!({
        "mode": cal.mode,
        "n_loops": cal.n_loops_cal,
        "rabi_mp_hz": to_hz(cal.rabi_mp),
        "gamma_mp": cal.gamma_mp,
        "gamma_star": cal.gamma_star,
        "beta_star": cal.beta_star,
        "loop_time_s": cal.loop_time,
        "scan": cal.scan.iter().map(|(g, v)| json!({"gamma": g, "value": v})).collect::<Vec<_>>(),
    })
}

/// Approximation-ratio heatmap over the configured `(γ, β)` grid.
pub fn qaoa_heatmap(cfg: &RunConfig, ctx: &Context) -> CliResult<Output> {
    let r = cfg.resolve(ctx.seed)?;
    let q = cfg.qaoa()?;
    let (rabi_mp, calibration) = resolve_rabi_mp(cfg, &r)?;
    let pipeline = AnalogQaoa::new(&r.chain, &r.pulse, rabi_mp).at("qaoa")?;
    let gammas = q.gamma_grid.points("qaoa.gamma_grid")?;
    let betas = q.beta_grid.points("qaoa.beta_grid")?;
    if gammas[0] < 0.0 {
        return Err(CliError::config("qaoa.gamma_grid: gamma must be non-negative"));
    }
    let sampling = match q.sampling.unwrap_or_default() {
        SamplingKind::Exact => Sampling::ExactExpectation,
        SamplingKind::Sampled => Sampling::Sampled { seed: r.seed },
    };
    let grid = heatmap_sweep(&pipeline, &r.noise, &gammas, &betas, q.shots(), sampling)?;
    let mut table = Table::new(vec!["gamma".into(), "beta".into(), "r".into(), "stderr".into()]);
    for (gi, g) in grid.gamma_axis.iter().enumerate() {
        for (bi, b) in grid.beta_axis.iter().enumerate() {
            let k = grid.index(gi, bi);
            table.push(vec![*g, *b, grid.values[k], grid.stderr[k]]);
        }
    }
    let dir = ctx.out_dir(Some(cfg));
    let format = ctx.format(Some(cfg));
    let mut files = Vec::new();
    let name = match format {
        Format::Csv => "heatmap.csv",
        Format::Json => "heatmap.json",
    };
    write(&dir, name, &table.render(format), &mut files)?;
    let (gi, bi, best) = grid.argmax();
    let inst = pipeline.instance();
    let derived = json!({
        "chain": chain_record(&r),
        "couplings_rad_s": rows(pipeline.couplings()),
        "weights": rows(inst.weights()),
        "c_max": inst.c_max(),
        "c_min": inst.c_min(),
        "rabi_mp_hz": to_hz(pipeline.rabi_mp()),
        "gamma_mp": pipeline.gamma_mp(),
        "loop_time_s": pipeline.loop_time(),
        "seed": r.seed,
        "provenance": grid.provenance,
        "optimum": {"gamma": grid.gamma_axis[gi], "beta": grid.beta_axis[bi], "r": best},
        "calibration": calibration.as_ref().map(calibration_record),
    });
    write_manifest(&dir, "qaoa-heatmap", cfg, r.seed, derived, &mut files)?;
    Ok(Output {
        files,
        summary: format!(
            "r* = {best:.4} at gamma = {:.4}, beta = {:.4}",
            grid.gamma_axis[gi], grid.beta_axis[bi]
        ),
    })
}

/// Runs the configured calibration and reports the scan.
pub fn calibrate(cfg: &RunConfig, ctx: &Context) -> CliResult<Output> {
    let r = cfg.resolve(ctx.seed)?;
    let q = cfg.qaoa()?;
    let req = q
        .calibration_request(r.chain.n())?
        .ok_or_else(|| CliError::config("qaoa.calibration: required for calibrate"))?;
    let cal = calibrate_rabi_mp(&r.chain, &r.pulse, req.mode, req.n_loops, &req.window)
        .at("qaoa.calibration")?;
    let dir = ctx.out_dir(Some(cfg));
    let mut files = Vec::new();
    write_json(&dir, "calibration.json", &calibration_record(&cal), &mut files)?;
    if ctx.format(Some(cfg)) == Format::Csv && !cal.scan.is_empty() {
        let mut scan = Table::new(vec!["gamma".into(), "value".into()]);
        for (g, v) in &cal.scan {
            scan.push(vec![*g, *v]);
        }
        write(&dir, "calibration_scan.csv", &scan.to_csv(), &mut files)?;
    }
    Ok(Output {
        files,
        summary: format!(
            "rabi_mp = {:.3} Hz, gamma_mp = {:.5}",
            to_hz(cal.rabi_mp),
            cal.gamma_mp
        ),
    })
}

/// Best independent bit-flip model for a measured SPAM matrix.
pub fn fit_spam(input: &Path, resolution: f64, ctx: &Context) -> CliResult<Output> {
    let m = read_spam_matrix(input)?;
    let fit = fit_bitflip_epsilon(&m, resolution).at("spam matrix")?;
    let report = json!({
        "n": m.nrows().trailing_zeros(),
        "eps": fit.eps,
        "trace_distance": fit.distance,
        "eps_abs": fit.eps_abs,
        "abs_distance": fit.distance_abs,
        "resolution": resolution,
    });
    let dir = ctx.out_dir(None);
    let mut files = Vec::new();
    write_json(&dir, "spam_fit.json", &report, &mut files)?;
    Ok(Output {
        files,
        summary: format!("eps = {:.4}, trace distance = {:.3e}", fit.eps, fit.distance),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub key: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<String>,
    pub sim: f64,
    pub exp: f64,
    pub residual: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PixelReport {
    pub gamma: f64,
    pub beta: f64,
    pub r_sim: f64,
    pub r_exp: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub kind: DatasetKind,
    pub points: usize,
    /// Points dropped from χ² because both the variance and the residual are
    /// exactly zero.
    pub excluded_zero_variance: usize,
    pub chi2_red: f64,
    pub rmse: f64,
    pub residuals: Vec<Residual>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimal_pixel: Option<PixelReport>,
}

fn key_bits(key: &[f64]) -> Vec<u64> {
    key.iter().map(|x| x.to_bits()).collect()
}

fn fmt_key(key: &[f64]) -> String {
    key.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Pairs each dataset row with the simulation row carrying the same key,
/// requiring the two key sets to be identical.
fn match_rows(sim: &Table, key_cols: &[usize], data: &ExperimentDataset) -> CliResult<Vec<(usize, usize)>> {
    let sim_keys: HashMap<Vec<u64>, usize> = sim
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| (key_cols.iter().map(|&c| row[c].to_bits()).collect(), i))
        .collect();
    let mut pairs = Vec::new();
    let mut missing = Vec::new();
    let mut used = vec![false; sim.rows.len()];
    for (d, row) in data.rows.iter().enumerate() {
        match sim_keys.get(&key_bits(&row.key)) {
            Some(&s) if !used[s] => {
                used[s] = true;
                pairs.push((s, d));
            }
            _ => missing.push(format!("({})", fmt_key(&row.key))),
        }
    }
    let extra: Vec<String> = used
        .iter()
        .enumerate()
        .filter(|(_, u)| !**u)
        .map(|(s, _)| {
            let key: Vec<f64> = key_cols.iter().map(|&c| sim.rows[s][c]).collect();
            format!("({})", fmt_key(&key))
        })
        .collect();
    if !missing.is_empty() || !extra.is_empty() {
        let show = |v: &[String]| {
            let mut s = v.iter().take(10).cloned().collect::<Vec<_>>().join(" ");
            if v.len() > 10 {
                s.push_str(&format!(" … ({} total)", v.len()));
            }
            s
        };
        return Err(CliError::Mismatch(format!(
            "dataset keys without simulation rows: [{}]; simulation keys without data: [{}]",
            show(&missing),
            show(&extra)
        )));
    }
    pairs.sort();
    Ok(pairs)
}

fn require_column(sim: &Table, name: &str) -> CliResult<usize> {
    sim.column(name)
        .ok_or_else(|| CliError::Mismatch(format!("simulation output has no {name} column")))
}

fn finish_report(
    kind: DatasetKind,
    residuals: Vec<Residual>,
    optimal_pixel: Option<PixelReport>,
) -> CliResult<CompareReport> {
    let obs = ObservationSet::new(
        residuals.iter().map(|r| r.sim).collect(),
        residuals.iter().map(|r| r.exp).collect(),
        residuals.iter().map(|r| r.variance).collect(),
        0,
    )?;
    let kept = obs.without_exact_zero_variance();
    Ok(CompareReport {
        kind,
        points: obs.len(),
        excluded_zero_variance: obs.len() - kept.len(),
        chi2_red: chi2_red(&kept)?,
        rmse: rmse(&obs)?,
        residuals,
        optimal_pixel,
    })
}

/// Compares simulated populations with shot counts from an MS sequence.
pub fn compare_ms(sim: &Table, data: &ExperimentDataset) -> CliResult<CompareReport> {
    let key = require_column(sim, data.kind.key_columns()[0])?;
    let labels = bitstring_labels(data.n);
    let cols = labels
        .iter()
        .map(|z| require_column(sim, &format!("P_{z}")))
        .collect::<CliResult<Vec<_>>>()?;
    if sim.column(&format!("P_{}", "0".repeat(data.n + 1))).is_some() {
        return Err(CliError::Mismatch("simulation has more qubits than the dataset".into()));
    }
    let mut residuals = Vec::new();
    for (s, d) in match_rows(sim, &[key], data)? {
        let row = &data.rows[d];
        let freqs = row.frequencies();
        for (z, &c) in cols.iter().enumerate() {
            let p = sim.rows[s][c];
            residuals.push(Residual {
                key: row.key.clone(),
                outcome: Some(labels[z].clone()),
                sim: p,
                exp: freqs[z],
                residual: p - freqs[z],
                variance: p.clamp(0.0, 1.0) * (1.0 - p.clamp(0.0, 1.0)) / row.shots as f64,
            });
        }
    }
    finish_report(data.kind, residuals, None)
}

/// Compares a simulated heatmap with shot counts per pixel. `sim_shots` is
/// the shot number the simulated error bars were computed for.
pub fn compare_heatmap(
    sim: &Table,
    data: &ExperimentDataset,
    instance: &MaxCutInstance,
    sim_shots: u64,
    pixel: Option<(f64, f64)>,
) -> CliResult<CompareReport> {
    if instance.n() != data.n {
        return Err(CliError::Mismatch(format!(
            "dataset has {} qubits, instance has {}",
            data.n,
            instance.n()
        )));
    }
    let g = require_column(sim, "gamma")?;
    let b = require_column(sim, "beta")?;
    let rc = require_column(sim, "r")?;
    let ec = require_column(sim, "stderr")?;
    let mut residuals = Vec::new();
    for (s, d) in match_rows(sim, &[g, b], data)? {
        let row = &data.rows[d];
        let r_exp = approximation_ratio(instance.expectation(&row.frequencies()), instance)?;
        let r_sim = sim.rows[s][rc];
        let se = sim.rows[s][ec];
        residuals.push(Residual {
            key: row.key.clone(),
            outcome: None,
            sim: r_sim,
            exp: r_exp,
            residual: r_sim - r_exp,
            variance: se * se * sim_shots as f64 / row.shots as f64,
        });
    }
    let best = match pixel {
        Some((pg, pb)) => {
            let near = |a: f64, b: f64| (a - pg).powi(2) + (b - pb).powi(2);
            residuals
                .iter()
                .min_by(|x, y| near(x.key[0], x.key[1]).total_cmp(&near(y.key[0], y.key[1])))
        }
        None => residuals.iter().reduce(|a, x| if x.sim > a.sim { x } else { a }),
    }
    .map(|r| PixelReport {
        gamma: r.key[0],
        beta: r.key[1],
        r_sim: r.sim,
        r_exp: r.exp,
        stderr: r.variance.sqrt(),
    });
    finish_report(data.kind, residuals, best)
}

/// Reads a simulation output and a dataset and writes `compare.json`.
pub fn compare(
    sim_path: &Path,
    data_path: &Path,
    cfg: Option<&RunConfig>,
    pixel: Option<(f64, f64)>,
    ctx: &Context,
) -> CliResult<Output> {
    let sim = Table::read(sim_path)?;
    let data = ExperimentDataset::read(data_path)?;
    let report = match data.kind {
        DatasetKind::Heatmap => {
            let cfg = cfg.ok_or_else(|| {
                CliError::config("compare: heatmap datasets need --config for the MaxCut instance")
            })?;
            let r = cfg.resolve(ctx.seed)?;
            let j = ising_couplings(&r.chain, &r.pulse.with_rabi(1.0))?;
            let instance = MaxCutInstance::new(maxcut_weights(&j)?)?;
            compare_heatmap(&sim, &data, &instance, cfg.qaoa()?.shots(), pixel)?
        }
        _ => compare_ms(&sim, &data)?,
    };
    let dir = ctx.out_dir(cfg);
    let mut files = Vec::new();
    write_json(&dir, "compare.json", &report, &mut files)?;
    let mut summary = format!(
        "{} points, chi2_red = {:.4}, rmse = {:.4e}",
        report.points, report.chi2_red, report.rmse
    );
    if let Some(p) = &report.optimal_pixel {
        summary.push_str(&format!(", r*_sim = {:.4}, r*_exp = {:.4}", p.r_sim, p.r_exp));
    }
    Ok(Output { files, summary })
}

/// Quick numerical self-checks on built-in configurations.
pub fn verify() -> CliResult<Output> {
    let mut lines = Vec::new();
    let mut ok = true;
    let mut check = |name: &str, pass: bool, detail: String| {
        ok &= pass;
        lines.push(format!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" }));
    };

    let two: RunConfig = toml::from_str(
        "[chain]\nmode_freqs_hz = [1.7331e6, 1.6641e6]\n[pulse]\ntarget_mode = 1\ndetuning_hz = -6.57e3\nrabi_hz = 26.552e3\n",
    )
    .expect("built-in config");
    let r = two.resolve(None)?;
    let t = 3.0 * loop_time(&r.pulse, &r.chain)?;
    let chi = geometric_phase(&r.chain, &r.pulse, t)?[(0, 1)];
    check("bell phase", (chi - FRAC_PI_4).abs() < 2e-2, format!("chi = {chi:.5}"));
    let rho0 = SpinDensity::basis_state(2, Basis::Z, 0)?;
    let out = reduced_density(&rho0, &r.chain, &r.pulse, t, &[0.0, 0.0])?;
    let s = 0.5f64.sqrt();
    let zero = Complex64::new(0.0, 0.0);
    let bell = SpinDensity::from_pure(2, Basis::Z, &[Complex64::new(s, 0.0), zero, zero, Complex64::new(0.0, -s)])?;
    let d = out.trace_distance(&bell)?;
    check("bell state", d < 0.02, format!("trace distance {d:.3e}"));

    for (nbar, tol) in [(0.0, 1e-6), (0.5, 1e-5)] {
        let t = 1.37 * loop_time(&r.pulse, &r.chain)?;
        let nbars = [nbar, nbar];
        let a = reduced_density(&rho0, &r.chain, &r.pulse, t, &nbars)?;
        let modes = if nbar == 0.0 { ModeState::Ground } else { ModeState::Thermal(nbar) };
        let f = fock_reduced_density(&rho0, modes, &r.chain, &r.pulse, t, FockTruncation::new(60))?;
        let d = a.trace_distance(&f.density)?;
        check(&format!("fock oracle nbar={nbar}"), d < tol, format!("trace distance {d:.3e}"));
    }

    let three: RunConfig = toml::from_str(
        "[chain]\nmode_freqs_hz = [1.7328e6, 1.6635e6, 1.5615e6]\n[pulse]\ntarget_mode = 2\ndetuning_hz = -5.26e3\nrabi_hz = 1.0\n",
    )
    .expect("built-in config");
    let r = three.resolve(None)?;
    let w = maxcut_weights(&ising_couplings(&r.chain, &r.pulse)?)?;
    check(
        "three-ion weights",
        (w[(0, 2)] + 0.470).abs() < 0.01,
        format!("w = [{:.4}, {:.4}, {:.4}]", w[(0, 1)], w[(0, 2)], w[(1, 2)]),
    );

    let summary = lines.join("\n");
    if ok {
        Ok(Output {
            files: Vec::new(),
            summary,
        })
    } else {
        Err(CliError::SelfCheck(summary))
    }
}
