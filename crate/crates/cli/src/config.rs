//! Flags, config files and their resolution into a validated [`RunConfig`].

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use gibbslab::drift::{default_beta, AlphaRule};
use gibbslab::optim::GroundState;
use gibbslab::params::critical_exponent;
use gibbslab::sampler::DEFAULT_STEPS;
use gibbslab::{Criticality, GridSpec, ModelParams};

use crate::CliError;

pub const OUT_DIR_ENV: &str = "GIBBSLAB_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Q,
    Ck,
    Ckn,
    Cb,
    Sample,
    ZetaCheck,
    Lowerbound,
    McZ,
    Rate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Q => "q",
            Command::Ck => "ck",
            Command::Ckn => "ckn",
            Command::Cb => "cb",
            Command::Sample => "sample",
            Command::ZetaCheck => "zeta-check",
            Command::Lowerbound => "lowerbound",
            Command::McZ => "mc-z",
            Command::Rate => "rate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Critical,
    Supercritical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum RuleKind {
    PowerLaw,
    Fixed,
    Optimized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    /// Smooth compactly supported bump.
    Bump,
    /// Per-N maximizer of the constrained functional on the torus.
    TorusOptimizer,
    /// Box maximizer (C_K or C_B) with a low-frequency notch.
    BoxOptimizer,
}

/// Every setting, as a flag or as a key of the JSON config file.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Dimension [default: 1]
    #[arg(long)]
    pub d: Option<usize>,
    /// Smoothness of the free field [default: 1]
    #[arg(long)]
    pub s: Option<f64>,
    /// Nonlinearity exponent [default: 4s/d + 2]
    #[arg(long)]
    pub p: Option<f64>,
    /// L2 cutoff radius [default: 1]
    #[arg(long = "K")]
    #[serde(rename = "K")]
    pub k: Option<f64>,
    /// Cutoff as a multiple of ||Q||_{L2}; overrides K
    #[arg(long = "KQ")]
    #[serde(rename = "KQ")]
    pub k_over_q: Option<f64>,
    /// Massive field <∇>^s instead of D^s [default: false]
    #[arg(long)]
    pub massive: Option<bool>,
    /// Frequency cutoff [default: 16]
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: Option<usize>,
    /// Grid points per axis for box and ground-state cells
    #[arg(long = "M")]
    #[serde(rename = "M")]
    pub m: Option<usize>,
    /// Box side for ground-state and band-limited cells
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub length: Option<f64>,
    /// Monte Carlo samples [default: 1000; 1 for sample]
    #[arg(long)]
    pub nsamples: Option<usize>,
    /// Base seed of all random streams [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated cutoffs [default: 16,32,64,128]
    #[arg(long = "nList", value_delimiter = ',')]
    #[serde(rename = "nList")]
    pub n_list: Option<Vec<usize>>,
    /// Output CSV [default: $GIBBSLAB_OUT_DIR/<command>.csv]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Solver gradient tolerance [default: 1e-8]
    #[arg(long)]
    pub tol: Option<f64>,
    /// Regime expected by rate; must agree with the classifier
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Brownian time steps on [0, 1] [default: 256]
    #[arg(long)]
    pub steps: Option<usize>,
    /// Multi-start count of the ascent solvers [default: 8]
    #[arg(long)]
    pub starts: Option<usize>,
    /// Drift amplitude rule [default: optimized]
    #[arg(long = "alphaRule", value_enum)]
    #[serde(rename = "alphaRule")]
    pub alpha_rule: Option<RuleKind>,
    /// Exponent of the power-law rule [default: half its admissible range]
    #[arg(long)]
    pub beta: Option<f64>,
    /// Amplitude of the fixed rule
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Pilot paths of the optimized rule [default: 256]
    #[arg(long)]
    pub pilot: Option<usize>,
    /// Drift profile [default: torus-optimizer]
    #[arg(long, value_enum)]
    pub profile: Option<ProfileKind>,
    /// Notch width for box-optimizer [default: 0.05]
    #[arg(long)]
    pub notch: Option<f64>,
}

macro_rules! prefer {
    ($a:ident, $b:ident, [$($f:ident),*]) => {
        Settings { $($f: $a.$f.or($b.$f)),* }
    };
}

impl Settings {
    /// Field-wise `self` over `fallback`.
    pub fn over(self, fallback: Settings) -> Settings {
        prefer!(self, fallback, [
            d, s, p, k, k_over_q, massive, n, m, length, nsamples, seed, n_list, out, tol, mode, steps,
            starts, alpha_rule, beta, alpha, pilot, profile, notch
        ])
    }

    pub fn from_file(path: &Path) -> Result<Settings, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }
}

/// Fully resolved and validated settings of one run.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub params: ModelParams,
    #[serde(rename = "KQ")]
    pub k_over_q: Option<f64>,
    pub grid: Option<GridSpec>,
    #[serde(rename = "N")]
    pub n_cut: usize,
    pub nsamples: usize,
    pub seed: u64,
    #[serde(rename = "nList")]
    pub n_list: Vec<usize>,
    #[serde(skip)]
    explicit_list: bool,
    pub out: PathBuf,
    pub tol: f64,
    pub steps: usize,
    pub starts: usize,
    pub alpha_rule: AlphaRule,
    pub profile: ProfileKind,
    pub notch: f64,
    pub mode: Option<Mode>,
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Usage(msg()))
    }
}

fn default_box_length(d: usize) -> f64 {
    match d {
        1 => 64.0,
        2 => 16.0,
        _ => 8.0,
    }
}

fn default_out(command: Command) -> PathBuf {
    let dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
    dir.join(format!("{}.csv", command.name()))
}

impl RunConfig {
    pub fn resolve(command: Command, s: Settings) -> Result<RunConfig, CliError> {
        let d = s.d.unwrap_or(1);
        let sm = s.s.unwrap_or(1.0);
        check((1..=3).contains(&d), || format!("d = {d} must be 1, 2 or 3"))?;
        let p = s.p.unwrap_or_else(|| critical_exponent(d, sm));
        let k = s.k.unwrap_or(1.0);
        if let Some(f) = s.k_over_q {
            check(f > 0.0 && f.is_finite(), || format!("KQ = {f} must be positive"))?;
        }
        let params = ModelParams::new(d, sm, p, k)
            .map_err(|e| CliError::Usage(e.to_string()))?
            .massive(s.massive.unwrap_or(false));

        let crit = params.criticality();
        let needs_critical = matches!(command, Command::Ck | Command::Ckn) || s.k_over_q.is_some();
        check(!needs_critical || crit == Criticality::Critical, || {
            format!(
                "{} needs the critical exponent p = 4s/d + 2 = {}; the classifier says p = {p} is {crit}",
                if s.k_over_q.is_some() { "KQ" } else { command.name() },
                critical_exponent(d, sm)
            )
        })?;
        if matches!(command, Command::Lowerbound | Command::Rate) {
            check(crit != Criticality::Subcritical, || {
                format!("{} needs p >= 4s/d + 2; the classifier says p = {p} is {crit}", command.name())
            })?;
        }
        if let Some(mode) = s.mode {
            let want = match mode {
                Mode::Critical => Criticality::Critical,
                Mode::Supercritical => Criticality::Supercritical,
            };
            check(want == crit, || format!("mode {mode:?} contradicts the classifier: p = {p} is {crit}"))?;
        }

        let n_cut = s.n.unwrap_or(16);
        check(n_cut >= 1, || "N must be at least 1".into())?;
        let explicit_list = s.n_list.is_some();
        let n_list = s.n_list.unwrap_or_else(|| vec![16, 32, 64, 128]);
        check(!n_list.is_empty() && n_list.iter().all(|n| *n >= 1), || {
            "nList must contain positive cutoffs".into()
        })?;
        if command == Command::Rate {
            let mut distinct = n_list.clone();
            distinct.sort_unstable();
            distinct.dedup();
            check(distinct.len() >= 3, || "rate needs at least 3 distinct nList values".into())?;
        }
        let nsamples = s.nsamples.unwrap_or(if command == Command::Sample { 1 } else { 1000 });
        check(nsamples >= 1, || "nsamples must be at least 1".into())?;
        let tol = s.tol.unwrap_or(1e-8);
        check(tol > 0.0 && tol.is_finite(), || format!("tol = {tol} must be positive"))?;
        let steps = s.steps.unwrap_or(DEFAULT_STEPS);
        check(steps >= 1, || "steps must be at least 1".into())?;
        let starts = s.starts.unwrap_or(8);
        check(starts >= 1, || "starts must be at least 1".into())?;
        let notch = s.notch.unwrap_or(0.05);
        check(notch > 0.0 && notch.is_finite(), || format!("notch = {notch} must be positive"))?;

        let alpha_rule = match s.alpha_rule.unwrap_or(RuleKind::Optimized) {
            RuleKind::PowerLaw => AlphaRule::PowerLaw {
                beta: s.beta.unwrap_or_else(|| default_beta(d, sm)),
            },
            RuleKind::Fixed => AlphaRule::Fixed {
                alpha: s.alpha.ok_or_else(|| CliError::Usage("alphaRule fixed needs --alpha".into()))?,
            },
            RuleKind::Optimized => AlphaRule::Optimized {
                pilot: s.pilot.unwrap_or(256),
            },
        };

        let grid = match command {
            Command::Q => {
                let mut g = GroundState::default_cell(d).map_err(|e| CliError::Usage(e.to_string()))?;
                if let Some(l) = s.length {
                    g = g.with_length(l).map_err(|e| CliError::Usage(format!("L: {e}")))?;
                }
                if let Some(m) = s.m {
                    g = GridSpec::new(d, m / 2 - 1, m, g.length, g.lattice)
                        .map_err(|e| CliError::Usage(format!("M: {e}")))?;
                }
                Some(g)
            }
            Command::Ck | Command::Cb | Command::Rate | Command::Lowerbound => {
                let l = s.length.unwrap_or_else(|| default_box_length(d));
                let mut g = GridSpec::band_limited_box(d, l, p).map_err(|e| CliError::Usage(format!("L: {e}")))?;
                if let Some(m) = s.m {
                    g = g.with_resolution(m).map_err(|e| CliError::Usage(format!("M: {e}")))?;
                }
                Some(g)
            }
            _ => None,
        };

        Ok(RunConfig {
            command,
            params,
            k_over_q: s.k_over_q,
            grid,
            n_cut,
            nsamples,
            seed: s.seed.unwrap_or(0),
            n_list,
            explicit_list,
            out: s.out.unwrap_or_else(|| default_out(command)),
            tol,
            steps,
            starts,
            alpha_rule,
            profile: s.profile.unwrap_or(ProfileKind::TorusOptimizer),
            notch,
            mode: s.mode,
        })
    }

    /// Whether nList was set rather than defaulted.
    pub fn n_list_explicit(&self) -> bool {
        self.explicit_list
    }

    /// Sibling of the main output: `<stem>_<suffix>.csv`.
    pub fn sidecar(&self, suffix: &str) -> PathBuf {
        let stem = self.out.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
        self.out.with_file_name(format!("{stem}_{suffix}.csv"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(d: usize, s: f64, p: f64, k: f64) -> Settings {
        Settings {
            d: Some(d),
            s: Some(s),
            p: Some(p),
            k: Some(k),
            ..Default::default()
        }
    }

    #[test]
    fn critical_command_accepts_critical_p() {
        let c = RunConfig::resolve(Command::Ck, flags(1, 1.0, 6.0, 2.0)).unwrap();
        assert_eq!(c.params.criticality(), Criticality::Critical);
        assert_eq!(c.grid.unwrap().length, 64.0);
    }

    #[test]
    fn critical_command_rejects_supercritical_p() {
        let err = RunConfig::resolve(Command::Ck, flags(1, 1.0, 8.0, 2.0)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("supercritical"), "{msg}");
    }

    #[test]
    fn flags_win_over_file() {
        let file: Settings = serde_json::from_str(r#"{"d": 1, "seed": 7, "K": 0.5}"#).unwrap();
        let cli = Settings {
            seed: Some(42),
            ..Default::default()
        };
        let merged = cli.over(file);
        assert_eq!(merged.seed, Some(42));
        assert_eq!(merged.k, Some(0.5));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<Settings>(r#"{"seeed": 1}"#).is_err());
    }

    #[test]
    fn mode_must_match_classifier() {
        let mut f = flags(1, 1.0, 6.0, 1.0);
        f.mode = Some(Mode::Supercritical);
        assert!(RunConfig::resolve(Command::Rate, f).is_err());
        let mut g = flags(1, 1.0, 8.0, 1.0);
        g.mode = Some(Mode::Supercritical);
        assert!(RunConfig::resolve(Command::Rate, g).is_ok());
        assert!(RunConfig::resolve(Command::Rate, flags(1, 1.0, 4.0, 1.0)).is_err());
    }

    #[test]
    fn field_specific_messages() {
        let msg = RunConfig::resolve(Command::Q, flags(1, 0.4, 6.0, 1.0)).unwrap_err().to_string();
        assert!(msg.contains("s = 0.4"), "{msg}");
        let mut f = flags(1, 1.0, 6.0, 1.0);
        f.nsamples = Some(0);
        assert!(RunConfig::resolve(Command::McZ, f).unwrap_err().to_string().contains("nsamples"));
    }
}
