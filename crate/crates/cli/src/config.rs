//! Command-line definitions, input-source parsing, and error-to-exit-code
//! mapping.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Exit codes: 0 ok, 2 config error, 3 I/O error, 4 numeric error.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Numeric(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) | CliError::Io(m) | CliError::Numeric(m) => write!(f, "{m}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl From<tcwave::Error> for CliError {
    fn from(e: tcwave::Error) -> Self {
        use tcwave::Error::*;
        let msg = e.to_string();
        match e {
            InvalidParameter { .. } | ShapeMismatch(_) | StateMismatch(_) => CliError::Config(msg),
            Io(_) | MalformedFile { .. } | UnsupportedFormat { .. } => CliError::Io(msg),
            NonFiniteSample { .. }
            | KernelTooShort { .. }
            | DuplicateTimeConstant { .. }
            | QuadratureDidNotConverge { .. }
            | DegenerateInput(_) => CliError::Numeric(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "tcwave",
    version,
    about = "Streaming time-causal multi-scale wavelet analysis",
    propagate_version = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Batch analysis: write smoothed/derivative/quasi-quadrature scalogram CSVs
    Analyze(AnalyzeArgs),
    /// Dump equivalent kernels (orders 0..=2) at every output scale
    Kernel(KernelArgs),
    /// Emit a table of continuous and discrete lp norms per scale and order
    Norms(NormsArgs),
    /// Run a blob/edge scale-selection sweep and emit its CSV
    Scalesel(ScaleselArgs),
    /// Filter samples from stdin line by line with bounded latency
    Stream(StreamArgs),
}

#[derive(Args, Clone)]
pub struct CascadeArgs {
    /// Distribution parameter (> 1); controls the scale spacing
    #[arg(long, default_value_t = std::f64::consts::SQRT_2)]
    pub c: f64,

    /// Reference scale (time^2); output scales are tau0 * c^(2k)
    #[arg(long, default_value_t = 1.0)]
    pub tau0: f64,

    /// Number of output scale levels (default 8 unless --sigma-max is given)
    #[arg(long, conflicts_with = "sigma_max")]
    pub levels: Option<usize>,

    /// Coarsest output scale, as sigma = sqrt(tau)
    #[arg(long)]
    pub sigma_max: Option<f64>,

    /// Sampling step of the input signal
    #[arg(long, default_value_t = 1.0)]
    pub dt: f64,
}

#[derive(Args, Clone)]
pub struct SignalArgs {
    /// Input source: csv:PATH[:col] | wav:PATH | gen:blob:SIGMA |
    /// gen:edge:SIGMA | gen:chirp:A,B | gen:impulse[:POS] | gen:step[:POS]
    #[arg(long)]
    pub input: String,

    /// Generator length (default derived from the cascade delay horizon)
    #[arg(long)]
    pub length: Option<usize>,

    /// Remove the mean before analysis (default: on for csv/wav, off for gen)
    #[arg(long, conflicts_with = "no_demean")]
    pub demean: bool,

    /// Keep the DC level even for file inputs
    #[arg(long)]
    pub no_demean: bool,
}

#[derive(Args, Clone)]
pub struct NormalizationArgs {
    /// Scale normalization power
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,

    /// Highest temporal derivative order to compute (0, 1 or 2)
    #[arg(long, default_value_t = 2)]
    pub order: u8,

    /// Quasi-quadrature weighting parameter C
    #[arg(long = "quad-C", default_value_t = std::f64::consts::FRAC_1_SQRT_2)]
    pub quad_c: f64,

    /// Response normalization: gamma | lp:P | mother
    #[arg(long, default_value = "gamma")]
    pub normalization: String,
}

#[derive(Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub cascade: CascadeArgs,
    #[command(flatten)]
    pub signal: SignalArgs,
    #[command(flatten)]
    pub norm: NormalizationArgs,

    /// Base path for the emitted CSV files
    #[arg(long)]
    pub out: PathBuf,

    /// Additionally dump the equivalent kernels at every output scale
    #[arg(long)]
    pub dump_kernels: bool,
}

#[derive(Args)]
pub struct KernelArgs {
    #[command(flatten)]
    pub cascade: CascadeArgs,

    /// Scale normalization power applied to the derivative kernels
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,

    /// Base path for the emitted CSV files
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct NormsArgs {
    #[command(flatten)]
    pub cascade: CascadeArgs,

    /// Scale normalization power (also fixes p via p = 1/(1 + n(1-gamma)))
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,

    /// Output CSV path
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct ScaleselArgs {
    /// Distribution parameter (> 1)
    #[arg(long, default_value_t = std::f64::consts::SQRT_2)]
    pub c: f64,

    /// Model family to sweep
    #[arg(long, value_parser = ["blob", "edge"])]
    pub model: String,

    /// Comma-separated reference scales sigma_ref
    #[arg(long, value_delimiter = ',', default_value = "4,8,16,32")]
    pub sigma_refs: Vec<f64>,

    /// Finest scale of the analysis range, as sigma
    #[arg(long, default_value_t = 0.125)]
    pub sigma_min: f64,

    /// Coarsest scale of the analysis range, as sigma
    #[arg(long, default_value_t = 64.0)]
    pub sigma_max: f64,

    /// Override the model's default derivative order
    #[arg(long)]
    pub order: Option<u8>,

    /// Override the model's default scale normalization power
    #[arg(long)]
    pub gamma: Option<f64>,

    /// Output CSV path
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct StreamArgs {
    #[command(flatten)]
    pub cascade: CascadeArgs,

    /// Emit scale-normalized derivative columns up to this order
    #[arg(long, default_value_t = 0)]
    pub order: u8,

    /// Scale normalization power for the derivative columns
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,

    /// Load the filter state from this file if it exists and save it on EOF
    #[arg(long)]
    pub state_file: Option<PathBuf>,
}

/// A parsed `--input` specification.
pub enum InputSpec {
    Csv { path: PathBuf, column: Option<String> },
    Wav { path: PathBuf },
    Blob { sigma: f64 },
    Edge { sigma: f64 },
    Chirp { a: f64, b: f64 },
    Impulse { position: usize },
    Step { position: usize },
}

impl InputSpec {
    pub fn parse(text: &str) -> CliResult<InputSpec> {
        let bad = |m: String| CliError::Config(m);
        let mut parts = text.splitn(2, ':');
        let kind = parts.next().unwrap_or("");
        let rest = parts.next();
        match kind {
            "csv" => {
                let rest = rest.ok_or_else(|| bad("csv input needs a path: csv:PATH[:col]".into()))?;
                let (path, column) = match rest.rsplit_once(':') {
                    Some((p, col)) if !p.is_empty() => (p.to_string(), Some(col.to_string())),
                    _ => (rest.to_string(), None),
                };
                Ok(InputSpec::Csv {
                    path: PathBuf::from(path),
                    column,
                })
            }
            "wav" => {
                let rest = rest.ok_or_else(|| bad("wav input needs a path: wav:PATH".into()))?;
                Ok(InputSpec::Wav {
                    path: PathBuf::from(rest),
                })
            }
            "gen" => {
                let rest = rest.ok_or_else(|| {
                    bad("generator input needs a name: gen:blob:SIGMA, gen:impulse, ...".into())
                })?;
                let mut gen_parts = rest.splitn(2, ':');
                let name = gen_parts.next().unwrap_or("");
                let arg = gen_parts.next();
                match name {
                    "blob" | "edge" => {
                        let sigma: f64 = arg
                            .ok_or_else(|| bad(format!("gen:{name} needs a width: gen:{name}:SIGMA")))?
                            .parse()
                            .map_err(|_| bad(format!("cannot parse sigma in gen:{name}:{}", arg.unwrap())))?;
                        if name == "blob" {
                            Ok(InputSpec::Blob { sigma })
                        } else {
                            Ok(InputSpec::Edge { sigma })
                        }
                    }
                    "chirp" => {
                        let arg = arg.ok_or_else(|| bad("gen:chirp needs parameters: gen:chirp:A,B".into()))?;
                        let (a, b) = arg
                            .split_once(',')
                            .ok_or_else(|| bad("gen:chirp needs two parameters: gen:chirp:A,B".into()))?;
                        let a: f64 = a.parse().map_err(|_| bad(format!("cannot parse chirp a `{a}`")))?;
                        let b: f64 = b.parse().map_err(|_| bad(format!("cannot parse chirp b `{b}`")))?;
                        Ok(InputSpec::Chirp { a, b })
                    }
                    "impulse" | "step" => {
                        let position = match arg {
                            None => 0,
                            Some(p) => p
                                .parse()
                                .map_err(|_| bad(format!("cannot parse position `{p}`")))?,
                        };
                        if name == "impulse" {
                            Ok(InputSpec::Impulse { position })
                        } else {
                            Ok(InputSpec::Step { position })
                        }
                    }
                    other => Err(bad(format!("unknown generator `{other}`"))),
                }
            }
            other => Err(bad(format!(
                "unknown input kind `{other}`; expected csv:, wav: or gen:"
            ))),
        }
    }

    pub fn is_file(&self) -> bool {
        matches!(self, InputSpec::Csv { .. } | InputSpec::Wav { .. })
    }
}

/// A parsed `--normalization` mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormalizationMode {
    /// Pure gamma-power scale normalization.
    Gamma,
    /// Divide by discrete lp norms of the equivalent derivative kernels.
    LpDiscrete(f64),
    /// Divide by continuous Lp norms with p derived from gamma.
    Mother,
}

impl NormalizationMode {
    pub fn parse(text: &str) -> CliResult<Self> {
        if text == "gamma" {
            return Ok(NormalizationMode::Gamma);
        }
        if text == "mother" {
            return Ok(NormalizationMode::Mother);
        }
        if let Some(p) = text.strip_prefix("lp:") {
            let p: f64 = p
                .parse()
                .map_err(|_| CliError::Config(format!("cannot parse lp exponent `{p}`")))?;
            if !(p > 0.0) {
                return Err(CliError::Config(format!("lp exponent must be > 0, got {p}")));
            }
            return Ok(NormalizationMode::LpDiscrete(p));
        }
        Err(CliError::Config(format!(
            "unknown normalization `{text}`; expected gamma, lp:P or mother"
        )))
    }
}
