use std::path::PathBuf;
use std::str::FromStr;

use bvs_core::{Alpha, FluxSpec, SourceProfile};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "bvs", version, about = "Exact balance-law solutions and fractional BV diagnostics")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact solution of one antisymmetric packet.
    Packet(PacketArgs),
    /// Exact solution of a Riemann problem.
    Riemann(RiemannArgs),
    /// Truncated counterexample family: profile (CSV) or cell table (JSON).
    Family(FamilyArgs),
    /// States and shock position of one single-shock cell.
    Assp(AsspArgs),
    /// p-variation of a sampled profile read from CSV (`x,u`).
    Variation(VariationArgs),
    /// Per-cell TV^s lower bounds with running totals.
    Diverge(DivergeArgs),
    /// Godunov run compared with the exact solution.
    Oracle(OracleArgs),
    /// Triangular system diagnostics.
    Triangular(TriangularArgs),
    /// Keyfitz-Kranzer construction diagnostics.
    Kk(KkArgs),
    /// Smoothing upper bound on TV^{1/p} over an interval.
    Bound(BoundArgs),
    /// Run a command described by a JSON config file.
    Run(RunArgs),
}

/// `zero`, `constant:<a>`, `pw:<t,..>/<v,..>` or a JSON object.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaArg(pub Alpha);

impl FromStr for AlphaArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s.starts_with('{') {
            return serde_json::from_str(s).map(AlphaArg).map_err(|e| e.to_string());
        }
        let nums = |list: &str| -> Result<Vec<f64>, String> {
            list.split(',').map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"))).collect()
        };
        match s.split_once(':') {
            None if s == "zero" => Ok(AlphaArg(Alpha::Zero {})),
            Some(("constant", a)) => Ok(AlphaArg(Alpha::Constant { a: a.trim().parse().map_err(|e| format!("{a:?}: {e}"))? })),
            Some(("pw", rest)) => {
                let (t, v) = rest.split_once('/').ok_or("pw needs <t,..>/<v,..>")?;
                Ok(AlphaArg(Alpha::Piecewise { t: nums(t)?, v: nums(v)? }))
            }
            _ => Err(format!("unknown source {s:?}; use zero, constant:<a> or pw:<t,..>/<v,..>")),
        }
    }
}

impl AlphaArg {
    pub fn profile(&self) -> bvs_core::Result<SourceProfile> {
        SourceProfile::new(self.0.clone())
    }
}

/// `power_law:<p>:<M>` or a JSON flux spec.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxArg(pub FluxSpec);

impl FromStr for FluxArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s.starts_with('{') {
            return serde_json::from_str(s).map(FluxArg).map_err(|e| e.to_string());
        }
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["power_law", p, m] => Ok(FluxArg(FluxSpec::PowerLaw {
                p: p.parse().map_err(|e| format!("{p:?}: {e}"))?,
                bound: m.parse().map_err(|e| format!("{m:?}: {e}"))?,
            })),
            _ => Err(format!("unknown flux {s:?}; use power_law:<p>:<M> or a JSON spec")),
        }
    }
}

fn zero() -> AlphaArg {
    AlphaArg(Alpha::Zero {})
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct PacketArgs {
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = zero(), value_parser = AlphaArg::from_str)]
    pub alpha: AlphaArg,
    #[arg(long, default_value_t = 0.1)]
    pub dx: f64,
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.0)]
    pub center: f64,
    #[arg(long)]
    pub t: f64,
    /// Interior samples per fan.
    #[arg(long, default_value_t = 16)]
    pub samples: usize,
    /// Flux working interval `[-M, M]`.
    #[arg(long = "M", default_value_t = 4.0)]
    pub bound: f64,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct RiemannArgs {
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = zero(), value_parser = AlphaArg::from_str)]
    pub alpha: AlphaArg,
    #[arg(long)]
    pub left: f64,
    #[arg(long)]
    pub right: f64,
    #[arg(long, default_value_t = 0.0)]
    pub x0: f64,
    #[arg(long)]
    pub t: f64,
    #[arg(long, default_value_t = -1.0)]
    pub lo: f64,
    #[arg(long, default_value_t = 1.0)]
    pub hi: f64,
    #[arg(long, default_value_t = 16)]
    pub samples: usize,
    #[arg(long = "M", default_value_t = 4.0)]
    pub bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyKind {
    Powerlaw,
    Assp,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct FamilyArgs {
    #[arg(long, value_enum, default_value_t = FamilyKind::Powerlaw)]
    pub kind: FamilyKind,
    /// Power-law exponent.
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Decay exponent of the ASSP flux `|u|^{q+1}/(q+1)`.
    #[arg(long, default_value_t = 3.0)]
    pub q: f64,
    #[arg(long, default_value_t = zero(), value_parser = AlphaArg::from_str)]
    pub alpha: AlphaArg,
    #[arg(long = "N", default_value_t = 20)]
    pub count: usize,
    #[arg(long)]
    pub t: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t0: f64,
    #[arg(long, default_value_t = 8)]
    pub samples: usize,
    #[arg(long = "M", default_value_t = 4.0)]
    pub bound: f64,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct AsspArgs {
    #[arg(long, default_value_t = 3.0)]
    pub q: f64,
    #[arg(long, default_value_t = zero(), value_parser = AlphaArg::from_str)]
    pub alpha: AlphaArg,
    #[arg(long, default_value_t = 1.0)]
    pub t0: f64,
    #[arg(long, default_value_t = 0.0)]
    pub left: f64,
    #[arg(long)]
    pub right: f64,
    #[arg(long = "M", default_value_t = 1.0)]
    pub bound: f64,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct VariationArgs {
    /// Regularity exponent; the variation exponent is `1/s`.
    #[arg(long)]
    pub s: f64,
    /// CSV with columns `x,u`.
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct DivergeArgs {
    #[arg(long, value_enum, default_value_t = FamilyKind::Powerlaw)]
    pub family: FamilyKind,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 3.0)]
    pub q: f64,
    #[arg(long, default_value_t = zero(), value_parser = AlphaArg::from_str)]
    pub alpha: AlphaArg,
    #[arg(long)]
    pub s: f64,
    #[arg(long = "N", default_value_t = 100)]
    pub count: usize,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t0: f64,
    #[arg(long = "M", default_value_t = 4.0)]
    pub bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitKind {
    Riemann,
    Packet,
    Family,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct OracleArgs {
    #[arg(long, default_value = "power_law:2:4", value_parser = FluxArg::from_str)]
    pub flux: FluxArg,
    #[arg(long, default_value_t = zero(), value_parser = AlphaArg::from_str)]
    pub alpha: AlphaArg,
    #[arg(long, value_enum, default_value_t = InitKind::Packet)]
    pub init: InitKind,
    #[arg(long, default_value_t = 1024)]
    pub cells: usize,
    /// Snapshot times, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub t: Vec<f64>,
    #[arg(long, default_value_t = 0.9)]
    pub cfl: f64,
    #[arg(long, default_value_t = -1.0)]
    pub lo: f64,
    #[arg(long, default_value_t = 1.0)]
    pub hi: f64,
    #[arg(long, default_value_t = 1.0)]
    pub left: f64,
    #[arg(long, default_value_t = 0.0)]
    pub right: f64,
    #[arg(long, default_value_t = 0.0)]
    pub x0: f64,
    #[arg(long, default_value_t = 0.1)]
    pub dx: f64,
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
    #[arg(long = "N", default_value_t = 10)]
    pub count: usize,
    /// Also write the `cells,time,l1_error` table here.
    #[arg(long)]
    pub errors: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct TriangularArgs {
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long = "T", default_value_t = 1.0)]
    pub horizon: f64,
    #[arg(long)]
    pub t: f64,
    #[arg(long = "N", default_value_t = 64)]
    pub count: usize,
    #[arg(long, default_value_t = 1.0)]
    pub sprime: f64,
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    /// Random pairs for the characteristic order check.
    #[arg(long, default_value_t = 1000)]
    pub pairs: usize,
    /// Divide transported values by the characteristic Jacobian.
    #[arg(long)]
    pub jacobian: bool,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct KkArgs {
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 0.5)]
    pub t: f64,
    /// Cells per side.
    #[arg(long, default_value_t = 512)]
    pub res: usize,
    #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [0.6, 0.8])]
    pub b: Vec<f64>,
    /// Number of bands `i = n..=n+depth` kept.
    #[arg(long, default_value_t = 64)]
    pub depth: usize,
    /// Extra indices in the jump-sum table.
    #[arg(long, default_value_t = 1000)]
    pub ni: usize,
    /// Dump the non-trivial cells of `u0 - b` as CSV here.
    #[arg(long)]
    pub grid: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct BoundArgs {
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = zero(), value_parser = AlphaArg::from_str)]
    pub alpha: AlphaArg,
    #[arg(long)]
    pub t: f64,
    #[arg(long)]
    pub a: f64,
    #[arg(long)]
    pub b: f64,
    #[arg(long = "T")]
    pub horizon: Option<f64>,
    #[arg(long = "M", default_value_t = 4.0)]
    pub bound: f64,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
}

impl std::fmt::Display for AlphaArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.0 {
            Alpha::Zero {} => write!(f, "zero"),
            Alpha::Constant { a } => write!(f, "constant:{a}"),
            Alpha::Piecewise { t, v } => {
                let j = |xs: &[f64]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
                write!(f, "pw:{}/{}", j(t), j(v))
            }
        }
    }
}
