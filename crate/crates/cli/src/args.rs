use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Deserializer};

use pacs::circuit::LossSpec;
use pacs::experiment::DEFAULT_TRIALS;
use pacs::herald::AdditionModel;
use pacs::wigner::PhaseSpaceGrid;
use pacs::PolynomialOrder;

use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "pacs",
    version,
    about = "Heralded photon addition after a Mach-Zehnder interferometer"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Heralding success probability over a transmissivity or gain sweep.
    Prob(Params),
    /// SNR, SNR ratio and branch-weighted metrics over a transmissivity sweep.
    SnrSweep(Params),
    /// Photon-number distribution of the added state for each m.
    Distribution(Params),
    /// Wigner function of a single-mode state on a grid.
    Wigner(Params),
    /// Seeded Monte Carlo run of the post-selected measurement.
    Simulate(Params),
    /// Branch and joint Fisher information over a phase sweep.
    Fisher(Params),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Prob(_) => "prob",
            Command::SnrSweep(_) => "snr-sweep",
            Command::Distribution(_) => "distribution",
            Command::Wigner(_) => "wigner",
            Command::Simulate(_) => "simulate",
            Command::Fisher(_) => "fisher",
        }
    }

    pub fn params(&self) -> &Params {
        match self {
            Command::Prob(p)
            | Command::SnrSweep(p)
            | Command::Distribution(p)
            | Command::Wigner(p)
            | Command::Simulate(p)
            | Command::Fisher(p) => p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Bs,
    Pdc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Coherent,
    Added,
    Fock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Flags shared by every command. Each may also come from the `--config`
/// JSON file under the same (kebab-case) key; flags win.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Params {
    /// JSON file with any of these options.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Mean photon number |α|² of the input coherent state.
    #[arg(long)]
    pub nbar: Option<f64>,
    /// Phase of the coherent input (radians).
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Interferometer phase (radians).
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub phi_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub phi_max: Option<f64>,
    #[arg(long)]
    pub phi_steps: Option<usize>,

    /// Number of added photons; a comma-separated list where allowed.
    #[arg(long, value_delimiter = ',')]
    #[serde(deserialize_with = "one_or_many")]
    pub m: Option<Vec<u32>>,
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,

    /// Beam-splitter transmissivity.
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub t_min: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub t_steps: Option<usize>,

    /// Down-conversion gain G = cosh²(r).
    #[arg(long)]
    pub gain: Option<f64>,
    #[arg(long)]
    pub g_min: Option<f64>,
    #[arg(long)]
    pub g_max: Option<f64>,
    #[arg(long)]
    pub g_steps: Option<usize>,

    /// Photon loss fraction L.
    #[arg(long)]
    pub loss: Option<f64>,
    /// Detector efficiency D.
    #[arg(long)]
    pub det_eff: Option<f64>,

    /// Trials per sweep point (simulate) or ν for the QCRB (fisher).
    #[arg(long)]
    pub trials: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub cutoff_override: Option<usize>,
    /// Finite-difference phase step for Fisher information.
    #[arg(long)]
    pub dphi: Option<f64>,

    /// Wigner grid as "xmin:xmax:n,pmin:pmax:n".
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    #[arg(long, value_enum)]
    pub state: Option<StateKind>,

    /// Emit one row per trial instead of per-point aggregates (simulate).
    #[arg(long)]
    pub records: bool,

    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<u32>>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(u32),
        Many(Vec<u32>),
    }
    Ok(Option::<OneOrMany>::deserialize(d)?.map(|v| match v {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(xs) => xs,
    }))
}

macro_rules! fill_from {
    ($dst:ident, $src:ident; $($f:ident),* $(,)?) => {
        $( if $dst.$f.is_none() { $dst.$f = $src.$f; } )*
    };
}

impl Params {
    /// Fill unset flags from the `--config` file, if any.
    pub fn merged(&self) -> Result<Params, CliError> {
        let mut out = self.clone();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            let file: Params = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?;
            fill_from!(out, file;
                nbar, theta, phi, phi_min, phi_max, phi_steps, m, model, t, t_min, t_max, t_steps,
                gain, g_min, g_max, g_steps, loss, det_eff, trials, seed, cutoff_override, dphi,
                grid, state, format, out);
            out.records |= file.records;
        }
        Ok(out)
    }

    pub fn nbar(&self) -> f64 {
        self.nbar.unwrap_or(1.0)
    }

    pub fn model(&self) -> ModelKind {
        self.model.unwrap_or(ModelKind::Bs)
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or(Format::Csv)
    }

    pub fn loss_spec(&self) -> Result<LossSpec, CliError> {
        Ok(LossSpec::new(self.loss.unwrap_or(0.0), self.det_eff.unwrap_or(1.0))?)
    }

    pub fn orders(&self, default: u32) -> Result<Vec<PolynomialOrder>, CliError> {
        let ms = self.m.clone().unwrap_or_else(|| vec![default]);
        if ms.is_empty() {
            return Err(CliError::Usage("--m needs at least one value".into()));
        }
        ms.into_iter().map(|m| Ok(PolynomialOrder::new(m)?)).collect()
    }

    pub fn single_order(&self, default: u32) -> Result<PolynomialOrder, CliError> {
        match self.orders(default)?.as_slice() {
            [m] => Ok(*m),
            _ => Err(CliError::Usage("this command takes a single --m".into())),
        }
    }

    pub fn trials(&self) -> u32 {
        self.trials.unwrap_or(DEFAULT_TRIALS)
    }

    /// Transmissivity sweep: `--t`, else `--t-min/--t-max/--t-steps`, else `default`.
    pub fn transmissivities(&self, default: (f64, f64, usize)) -> Result<Vec<f64>, CliError> {
        sweep("t", self.t, self.t_min, self.t_max, self.t_steps, default)
    }

    pub fn gains(&self, default: (f64, f64, usize)) -> Result<Vec<f64>, CliError> {
        sweep("g", self.gain, self.g_min, self.g_max, self.g_steps, default)
    }

    pub fn phases(&self, default: (f64, f64, usize)) -> Result<Vec<f64>, CliError> {
        sweep("phi", self.phi, self.phi_min, self.phi_max, self.phi_steps, default)
    }

    /// Sweep values for the chosen model, with the given default ranges.
    pub fn couplings(&self, t_default: (f64, f64, usize), g_default: (f64, f64, usize)) -> Result<Vec<f64>, CliError> {
        match self.model() {
            ModelKind::Bs => self.transmissivities(t_default),
            ModelKind::Pdc => self.gains(g_default),
        }
    }

    pub fn addition_model(&self, coupling: f64) -> AdditionModel {
        match self.model() {
            ModelKind::Bs => AdditionModel::BeamSplitter {
                transmissivity: coupling,
            },
            ModelKind::Pdc => AdditionModel::DownConversion { gain: coupling },
        }
    }

    pub fn phase_grid(&self) -> Result<PhaseSpaceGrid, CliError> {
        match &self.grid {
            None => Ok(PhaseSpaceGrid::default()),
            Some(spec) => parse_grid(spec),
        }
    }
}

fn sweep(
    name: &str,
    single: Option<f64>,
    min: Option<f64>,
    max: Option<f64>,
    steps: Option<usize>,
    default: (f64, f64, usize),
) -> Result<Vec<f64>, CliError> {
    if let Some(v) = single {
        if min.is_some() || max.is_some() || steps.is_some() {
            return Err(CliError::Usage(format!(
                "give either a single {name} or a {name} range, not both"
            )));
        }
        return Ok(vec![v]);
    }
    let (lo, hi, n) = (
        min.unwrap_or(default.0),
        max.unwrap_or(default.1),
        steps.unwrap_or(default.2),
    );
    linspace(lo, hi, n).ok_or_else(|| CliError::Usage(format!("invalid {name} range {lo}..{hi} with {n} steps")))
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Option<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite()) || n == 0 || (n == 1 && lo != hi) || lo > hi {
        return None;
    }
    if n == 1 {
        return Some(vec![lo]);
    }
    let step = (hi - lo) / (n - 1) as f64;
    Some(
        (0..n)
            .map(|i| if i + 1 == n { hi } else { lo + i as f64 * step })
            .collect(),
    )
}

pub fn parse_grid(spec: &str) -> Result<PhaseSpaceGrid, CliError> {
    let bad = || CliError::Usage(format!("grid must look like \"xmin:xmax:n,pmin:pmax:n\", got {spec:?}"));
    let axes: Vec<&str> = spec.split(',').collect();
    if axes.len() != 2 {
        return Err(bad());
    }
    let axis = |s: &str| -> Result<(f64, f64, usize), CliError> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        Ok((
            parts[0].parse().map_err(|_| bad())?,
            parts[1].parse().map_err(|_| bad())?,
            parts[2].parse().map_err(|_| bad())?,
        ))
    };
    let (x0, x1, nx) = axis(axes[0])?;
    let (p0, p1, np) = axis(axes[1])?;
    Ok(PhaseSpaceGrid::new(x0, x1, nx, p0, p1, np)?)
}
