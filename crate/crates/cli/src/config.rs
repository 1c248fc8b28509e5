//! Run configuration: TOML files written by hand, or the `config` block of a
//! run manifest. Frequencies are in Hz and converted on resolution.

use std::path::{Path, PathBuf};

use msqaoa::constants::{default_wavevector, hz, ATOMIC_MASS_UNIT};
use msqaoa::ion::transverse_normal_modes;
use msqaoa::noise::{check_stochastic, DEFAULT_GRID_POINTS};
use msqaoa::qaoa::{CalibrationMode, ScanWindow};
use msqaoa::{FluctuationTarget, GaussianFluctuation, IonChainConfig, MSPulse, NoiseConfig, SpamModel};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataset::read_spam_matrix;
use crate::error::{AtKey, CliError, CliResult};

pub const DEFAULT_MASS_AMU: f64 = 170.936_323;
pub const DEFAULT_SHOTS: u64 = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    pub chain: ChainSection,
    pub pulse: PulseSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ms: Option<MsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qaoa: Option<QaoaSection>,
}

/// Either explicit mode frequencies (optionally with eigenvectors and
/// Lamb-Dicke matrix), or trap COM frequencies from which the transverse
/// modes of an `n`-ion chain are computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode_freqs_hz: Option<Vec<f64>>,
    /// Row `i` holds ion `i`'s participation in each mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvectors: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lamb_dicke: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radial_com_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axial_com_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_amu: Option<f64>,
    /// Raman wavevector difference (rad/m).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavevector_per_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn to_vec(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(x) => vec![*x],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSection {
    pub target_mode: usize,
    /// `μ − ω_target` in Hz.
    pub detuning_hz: f64,
    /// One rate for all ions or one per ion. Ignored by QAOA runs, which set
    /// the rate from the schedule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rabi_hz: Option<OneOrMany>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode_sigma_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rabi_sigma_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nbar: Option<OneOrMany>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spam: Option<SpamSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type", deny_unknown_fields)]
pub enum SpamSection {
    Bitflip {
        eps: f64,
    },
    /// Column-stochastic matrix given inline or as a CSV file relative to
    /// the config file.
    Matrix {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rows: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Axis {
    pub fn points(&self, key: &str) -> CliResult<Vec<f64>> {
        if !(self.min.is_finite() && self.max.is_finite()) || self.steps == 0 {
            return Err(CliError::config(format!("{key}: need finite bounds and steps >= 1")));
        }
        if self.steps == 1 {
            return Ok(vec![self.min]);
        }
        if self.max <= self.min {
            return Err(CliError::config(format!("{key}: max must exceed min")));
        }
        let h = (self.max - self.min) / (self.steps - 1) as f64;
        Ok((0..self.steps)
            .map(|k| if k + 1 == self.steps { self.max } else { self.min + k as f64 * h })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MsSection {
    /// Initial Z-basis bitstring, qubit 0 first. Defaults to all zeros.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<String>,
    /// Time grid in units of the target-mode loop time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loops: Option<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times_s: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SamplingKind {
    #[default]
    Exact,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QaoaSection {
    pub gamma_grid: Axis,
    pub beta_grid: Axis,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<SamplingKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Max-power Rabi rate. Mutually exclusive with `calibration`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rabi_mp_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type", deny_unknown_fields)]
pub enum CalibrationSection {
    TransitionPopulation {
        initial: String,
        target: String,
        n_loops: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        window: Option<Axis>,
    },
    CostExpectation {
        n_loops: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        window: Option<Axis>,
    },
    BellPhase {
        pair: [usize; 2],
        phase: f64,
        n_loops: u32,
    },
}

/// Simulator inputs built from a [`RunConfig`].
#[derive(Debug, Clone)]
pub struct Resolved {
    pub chain: IonChainConfig,
    /// Pulse with the configured Rabi rates (zero when absent) and zero
    /// duration.
    pub pulse: MSPulse,
    pub noise: NoiseConfig,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct CalibrationRequest {
    pub mode: CalibrationMode,
    pub n_loops: u32,
    pub window: ScanWindow,
}

/// Reads a TOML config, or a JSON run manifest whose `config` entry is used.
pub fn load(path: &Path) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let is_json = path.extension().is_some_and(|e| e == "json");
    let mut cfg: RunConfig = if is_json {
        #[derive(Deserialize)]
        struct Wrapper {
            config: RunConfig,
        }
        serde_json::from_str::<Wrapper>(&text)
            .map(|w| w.config)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?
    } else {
        toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?
    };
    let base = path.parent().unwrap_or(Path::new("."));
    cfg.inline_files(base)?;
    Ok(cfg)
}

pub fn parse_bitstring(s: &str, n: usize, key: &str) -> CliResult<usize> {
    if s.len() != n || !s.chars().all(|c| c == '0' || c == '1') {
        return Err(CliError::config(format!("{key}: expected {n} binary digits, got {s:?}")));
    }
    Ok(usize::from_str_radix(s, 2).expect("validated binary"))
}

fn matrix_from_rows(rows: &[Vec<f64>], key: &str) -> CliResult<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(CliError::config(format!("{key}: expected a non-empty square matrix")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

impl RunConfig {
    /// Replaces file references with their contents so the config is
    /// self-contained.
    pub fn inline_files(&mut self, base: &Path) -> CliResult<()> {
        if let Some(SpamSection::Matrix { rows, path }) = &mut self.noise.spam {
            match (rows.is_some(), path.take()) {
                (true, Some(_)) => {
                    return Err(CliError::config("noise.spam: give either rows or path, not both"))
                }
                (false, Some(p)) => {
                    let full = if p.is_absolute() { p } else { base.join(p) };
                    let m = read_spam_matrix(&full)?;
                    *rows = Some(m.row_iter().map(|r| r.iter().copied().collect()).collect());
                }
                (false, None) => return Err(CliError::config("noise.spam: matrix needs rows or path")),
                (true, None) => {}
            }
        }
        Ok(())
    }

    /// Seed precedence: command line, then `qaoa.seed`, then `seed`, then 0.
    pub fn effective_seed(&self, cli: Option<u64>) -> u64 {
        cli.or(self.qaoa.as_ref().and_then(|q| q.seed))
            .or(self.seed)
            .unwrap_or(0)
    }

    /// The config with command-line overrides applied, as recorded in
    /// manifests.
    pub fn with_seed(&self, seed: u64) -> RunConfig {
        let mut cfg = self.clone();
        cfg.seed = Some(seed);
        if let Some(q) = &mut cfg.qaoa {
            q.seed = None;
        }
        cfg
    }

    pub fn resolve(&self, cli_seed: Option<u64>) -> CliResult<Resolved> {
        let chain = self.resolve_chain()?;
        let n = chain.n();
        let rabi = match &self.pulse.rabi_hz {
            None => vec![0.0; n],
            Some(r) => {
                let v = r.to_vec();
                match v.len() {
                    1 => vec![hz(v[0]); n],
                    k if k == n => v.iter().map(|x| hz(*x)).collect(),
                    k => {
                        return Err(CliError::config(format!(
                            "pulse.rabi_hz: expected 1 or {n} values, got {k}"
                        )))
                    }
                }
            }
        };
        let target = self.pulse.target_mode;
        if target >= n {
            return Err(CliError::config(format!(
                "pulse.target_mode: {target} out of range for {n} modes"
            )));
        }
        let mu = chain.mode_freqs()[target] + hz(self.pulse.detuning_hz);
        let pulse = MSPulse::new(&chain, mu, rabi, 0.0, target).at("pulse")?;
        let noise = self.resolve_noise(n)?;
        Ok(Resolved {
            chain,
            pulse,
            noise,
            seed: self.effective_seed(cli_seed),
        })
    }

    fn resolve_chain(&self) -> CliResult<IonChainConfig> {
        let c = &self.chain;
        let mass = c.mass_amu.unwrap_or(DEFAULT_MASS_AMU) * ATOMIC_MASS_UNIT;
        let k = c.wavevector_per_m.unwrap_or_else(default_wavevector);
        let (freqs, vecs) = match (&c.mode_freqs_hz, c.radial_com_hz, c.axial_com_hz) {
            (Some(f), None, None) => {
                if let Some(n) = c.n {
                    if n != f.len() {
                        return Err(CliError::config(format!(
                            "chain.n: {n} does not match {} mode frequencies",
                            f.len()
                        )));
                    }
                }
                let vecs = c
                    .eigenvectors
                    .as_ref()
                    .map(|rows| matrix_from_rows(rows, "chain.eigenvectors"))
                    .transpose()?;
                (f.iter().map(|x| hz(*x)).collect::<Vec<_>>(), vecs)
            }
            (None, Some(radial), Some(axial)) => {
                let n = c
                    .n
                    .ok_or_else(|| CliError::config("chain.n: required with radial_com_hz/axial_com_hz"))?;
                if c.eigenvectors.is_some() {
                    return Err(CliError::config(
                        "chain.eigenvectors: not allowed with trap frequencies",
                    ));
                }
                let modes = transverse_normal_modes(n, hz(radial), hz(axial)).at("chain")?;
                (modes.freqs, Some(modes.eigenvectors))
            }
            _ => {
                return Err(CliError::config(
                    "chain: give either mode_freqs_hz or radial_com_hz with axial_com_hz",
                ))
            }
        };
        match (&c.lamb_dicke, vecs) {
            (Some(eta), vecs) => {
                let eta = matrix_from_rows(eta, "chain.lamb_dicke")?;
                let n = freqs.len();
                let vecs = match vecs {
                    Some(v) => v,
                    None => msqaoa::ion::ideal_chain_eigenvectors(n).at("chain")?,
                };
                IonChainConfig::new(freqs, vecs, eta).at("chain")
            }
            (None, Some(vecs)) => IonChainConfig::from_modes(freqs, vecs, k, mass).at("chain"),
            (None, None) => IonChainConfig::with_ideal_eigenvectors(freqs, k, mass).at("chain"),
        }
    }

    fn resolve_noise(&self, n: usize) -> CliResult<NoiseConfig> {
        let s = &self.noise;
        let points = s.grid_points.unwrap_or(DEFAULT_GRID_POINTS);
        let mode_fluct = s
            .mode_sigma_hz
            .map(|sigma| GaussianFluctuation::new(FluctuationTarget::TargetModeFreq, hz(sigma), points))
            .transpose()
            .at("noise.mode_sigma_hz")?;
        let rabi_fluct = s
            .rabi_sigma_fraction
            .map(|sigma| GaussianFluctuation::new(FluctuationTarget::RabiRateRelative, sigma, points))
            .transpose()
            .at("noise.rabi_sigma_fraction")?;
        let spam = match &s.spam {
            None => None,
            Some(SpamSection::Bitflip { eps }) => Some(SpamModel::BitFlip(*eps)),
            Some(SpamSection::Matrix { rows, .. }) => {
                let rows = rows
                    .as_ref()
                    .ok_or_else(|| CliError::config("noise.spam: matrix rows were not loaded"))?;
                let m = matrix_from_rows(rows, "noise.spam.rows")?;
                check_stochastic(&m).at("noise.spam.rows")?;
                Some(SpamModel::Matrix(m))
            }
        };
        let noise = NoiseConfig {
            mode_fluct,
            rabi_fluct,
            nbar: s.nbar.as_ref().map(|v| v.to_vec()).unwrap_or_default(),
            spam,
        };
        noise.validate(n).at("noise")?;
        Ok(noise)
    }

    pub fn qaoa(&self) -> CliResult<&QaoaSection> {
        self.qaoa
            .as_ref()
            .ok_or_else(|| CliError::config("qaoa: section required for this command"))
    }

    pub fn ms(&self) -> CliResult<&MsSection> {
        self.ms
            .as_ref()
            .ok_or_else(|| CliError::config("ms: section required for this command"))
    }
}

impl QaoaSection {
    pub fn shots(&self) -> u64 {
        self.shots.unwrap_or(DEFAULT_SHOTS)
    }

    pub fn calibration_request(&self, n: usize) -> CliResult<Option<CalibrationRequest>> {
        let Some(cal) = &self.calibration else {
            return Ok(None);
        };
        let window = |w: &Option<Axis>| -> CliResult<ScanWindow> {
            match w {
                None => Ok(ScanWindow::default()),
                Some(a) => ScanWindow::new(a.min, a.max, a.steps).at("qaoa.calibration.window"),
            }
        };
        let (mode, n_loops, window) = match cal {
            CalibrationSection::TransitionPopulation { initial, target, n_loops, window: w } => (
                CalibrationMode::TransitionPopulation {
                    initial: parse_bitstring(initial, n, "qaoa.calibration.initial")?,
                    target: parse_bitstring(target, n, "qaoa.calibration.target")?,
                },
                *n_loops,
                window(w)?,
            ),
            CalibrationSection::CostExpectation { n_loops, window: w } => {
                (CalibrationMode::CostExpectation, *n_loops, window(w)?)
            }
            CalibrationSection::BellPhase { pair, phase, n_loops } => (
                CalibrationMode::BellPhase {
                    pair: (pair[0], pair[1]),
                    phase: *phase,
                },
                *n_loops,
                ScanWindow::default(),
            ),
        };
        if n_loops == 0 {
            return Err(CliError::config("qaoa.calibration.n_loops: must be at least 1"));
        }
        Ok(Some(CalibrationRequest { mode, n_loops, window }))
    }
}
