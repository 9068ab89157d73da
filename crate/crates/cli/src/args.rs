use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(
    name = "recurlab",
    version,
    about = "Recurrence detection, hidden tensor spectra and discrete Sternfeld arrays",
    arg_required_else_help = true,
    after_help = "Every subcommand also accepts --config FILE (a JSON object mirroring the flags; flags on the command line win).\nRECURLAB_THREADS sets the worker pool size."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Monte Carlo recurrence circuit on hidden CCθ tensor unitaries.
    Recur(RecurArgs),
    /// |⟨0|U^k|0⟩| for Haar-random U.
    HaarBaseline(HaarArgs),
    /// Amplitude amplification of the recurrence event.
    Amplify(AmplifyArgs),
    /// Set-sum tensor factorization of a spectrum.
    TensorFactor(TensorArgs),
    /// Rook circuits, Sternfeld arrays and partial tensor embeddings.
    Sternfeld(SternfeldArgs),
    /// Spectral-gap instances from verifier circuits.
    Nusg(NusgArgs),
    /// The closed-form numbers of the 72-qubit experiment.
    PaperNumbers(PaperArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Recur(_) => "recur",
            Command::HaarBaseline(_) => "haar-baseline",
            Command::Amplify(_) => "amplify",
            Command::TensorFactor(_) => "tensor-factor",
            Command::Sternfeld(_) => "sternfeld",
            Command::Nusg(_) => "nusg",
            Command::PaperNumbers(_) => "paper-numbers",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Recur(a) => &a.common,
            Command::HaarBaseline(a) => &a.common,
            Command::Amplify(a) => &a.common,
            Command::TensorFactor(a) => &a.common,
            Command::Sternfeld(a) => &a.common,
            Command::Nusg(a) => &a.common,
            Command::PaperNumbers(a) => &a.common,
        }
    }

    pub fn flags(&self) -> serde_json::Value {
        let v = match self {
            Command::Recur(a) => serde_json::to_value(a),
            Command::HaarBaseline(a) => serde_json::to_value(a),
            Command::Amplify(a) => serde_json::to_value(a),
            Command::TensorFactor(a) => serde_json::to_value(a),
            Command::Sternfeld(a) => serde_json::to_value(a),
            Command::Nusg(a) => serde_json::to_value(a),
            Command::PaperNumbers(a) => serde_json::to_value(a),
        };
        let mut v = v.expect("flags serialize");
        // a mode taken from a config file is recorded as the mode
        if let Some(map) = v.as_object_mut() {
            if let Some(from_config) = map.remove("config_mode") {
                if map.get("mode").is_some_and(|m| m.is_null()) {
                    map.insert("mode".into(), from_config);
                }
            }
        }
        v
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
    SvgHistogram,
}

#[derive(Args, Debug, Serialize)]
pub struct Common {
    /// Master seed; every component draws from its own named stream.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format (inferred from the --out extension when absent).
    #[arg(long, value_enum)]
    pub emit: Option<Format>,
}

#[derive(Args, Debug, Serialize)]
pub struct RecurArgs {
    /// Number of CCθ factors (three qubits each).
    #[arg(long, default_value_t = 3)]
    pub factors: usize,
    /// CCθ angles in turns, one per factor.
    #[arg(long, value_delimiter = ',', conflicts_with = "theta_seed")]
    pub thetas: Vec<f64>,
    /// Seed for drawing the angles.
    #[arg(long)]
    pub theta_seed: Option<u64>,
    /// identity, haar (seeded from the master seed) or haar:SEED.
    #[arg(long, default_value = "haar", value_parser = parse_conjugator)]
    pub conjugator: String,
    #[arg(long, default_value_t = 10)]
    pub number_qubits: usize,
    #[arg(long, default_value_t = 200_000)]
    pub shots: u64,
    /// Per-gate coherent error strength.
    #[arg(long, default_value_t = 0.0)]
    pub noise_eps: f64,
    #[arg(long, default_value_t = 1)]
    pub instances: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

fn parse_conjugator(s: &str) -> Result<String, String> {
    match s {
        "identity" | "haar" => Ok(s.to_string()),
        _ => match s.strip_prefix("haar:").map(str::parse::<u64>) {
            Some(Ok(_)) => Ok(s.to_string()),
            _ => Err(format!("expected identity, haar or haar:SEED, got {s}")),
        },
    }
}

#[derive(Args, Debug, Serialize)]
pub struct HaarArgs {
    #[arg(long, default_value_t = 10)]
    pub qubits: usize,
    #[arg(long, default_value_t = 20)]
    pub draws: usize,
    #[arg(long, default_value_t = 50)]
    pub ks_per_draw: usize,
    #[arg(long, default_value_t = 32)]
    pub k_max: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventArg {
    /// State register reads |0…0⟩.
    StateZero,
    /// Projection onto the recurrence target.
    Target,
}

#[derive(Args, Debug, Serialize)]
#[command(group(ArgGroup::new("schedule").required(true).args(["iterations", "auto_schedule"])))]
pub struct AmplifyArgs {
    #[arg(long, default_value_t = 2)]
    pub number_qubits: usize,
    #[arg(long, default_value_t = 2)]
    pub state_qubits: usize,
    /// Overlap of the prepared state with the target.
    #[arg(long, default_value_t = 0.05)]
    pub sin_theta: f64,
    /// Iteration counts to sample.
    #[arg(long, value_delimiter = ',')]
    pub iterations: Vec<u64>,
    /// Run the doubling schedule for this minimum overlap.
    #[arg(long)]
    pub auto_schedule: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub shots: u64,
    #[arg(long, value_enum, default_value_t = EventArg::Target)]
    pub event: EventArg,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
#[command(group(ArgGroup::new("input").required(true).args(["values", "matrix"])))]
pub struct TensorArgs {
    /// One real per line (log singular values, or phases in phase mode).
    #[arg(long)]
    pub values: Option<PathBuf>,
    /// Matrix JSON; singular values (or eigenphases in phase mode) are used.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Axis counts k1,k2,…
    #[arg(long, value_delimiter = ',', required = true)]
    pub format: Vec<usize>,
    /// exact, greedy, approx:EPS or phase.
    #[arg(long, default_value = "exact", value_parser = parse_tensor_mode)]
    pub mode: String,
    /// Budget semantics for approx: per-equation, rms or fraction:F.
    #[arg(long, default_value = "per-equation", value_parser = parse_budget_kind)]
    pub budget: String,
    /// Angular tolerance in phase mode.
    #[arg(long, default_value_t = 1e-9)]
    pub phase_tol: f64,
    /// Fall back to the greedy solver when the exact search exhausts its node budget.
    #[arg(long)]
    pub heuristic: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

fn parse_tensor_mode(s: &str) -> Result<String, String> {
    match s {
        "exact" | "greedy" | "phase" => Ok(s.to_string()),
        _ => match s.strip_prefix("approx:").map(str::parse::<f64>) {
            Some(Ok(e)) if e > 0.0 => Ok(s.to_string()),
            _ => Err(format!(
                "expected exact, greedy, approx:EPS (EPS > 0) or phase, got {s}"
            )),
        },
    }
}

fn parse_budget_kind(s: &str) -> Result<String, String> {
    match s {
        "per-equation" | "rms" => Ok(s.to_string()),
        _ => match s.strip_prefix("fraction:").map(str::parse::<f64>) {
            Some(Ok(f)) if (0.0..=1.0).contains(&f) => Ok(s.to_string()),
            _ => Err(format!(
                "expected per-equation, rms or fraction:F with F in [0, 1], got {s}"
            )),
        },
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SternfeldMode {
    Rc,
    Wdsa,
    Labels,
    Embed,
    BoundScan,
}

#[derive(Args, Debug, Serialize)]
pub struct SternfeldArgs {
    #[arg(value_enum)]
    pub mode: Option<SternfeldMode>,
    #[arg(long = "config-mode", value_enum, hide = true)]
    pub config_mode: Option<SternfeldMode>,
    /// Grid side lengths p,q[,r…].
    #[arg(long, value_delimiter = ',', required = true)]
    pub grid: Vec<usize>,
    /// One site per line, coordinates separated by commas or spaces.
    #[arg(long)]
    pub sites: Option<PathBuf>,
    /// One value per site (labels mode), in lexicographic site order.
    #[arg(long)]
    pub values: Option<PathBuf>,
    /// Matrix JSON (embed mode).
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Normalize sites on the torus.
    #[arg(long)]
    pub toroidal: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NusgMode {
    Gap,
    Case1,
    Case2,
    Swap,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifierFamily {
    AcceptAll,
    RejectAll,
    Random,
    RandomAccepting,
}

#[derive(Args, Debug, Serialize)]
pub struct NusgArgs {
    #[arg(value_enum)]
    pub mode: Option<NusgMode>,
    #[arg(long = "config-mode", value_enum, hide = true)]
    pub config_mode: Option<NusgMode>,
    /// JSON {input_qubits, ancilla_qubits, unitary: {dim, entries}}.
    #[arg(long, conflicts_with = "family")]
    pub verifier: Option<PathBuf>,
    /// Built-in verifier family.
    #[arg(long, value_enum)]
    pub family: Option<VerifierFamily>,
    #[arg(long, default_value_t = 2)]
    pub input_qubits: usize,
    #[arg(long, default_value_t = 2)]
    pub ancilla_qubits: usize,
    /// Coupling strength of the random family.
    #[arg(long, default_value_t = 0.02)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.3)]
    pub phi: f64,
    /// Acceptance defect; case1 and swap default to that of the best witness, other modes to 0.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, default_value_t = 0.005)]
    pub delta0: f64,
    /// Shots for the SWAP test.
    #[arg(long, default_value_t = 10_000)]
    pub shots: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct PaperArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}
