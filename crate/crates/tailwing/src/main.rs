//! Batch CLI: smile curves, wing asymptotes, comparisons, term structure,
//! regular-variation diagnostics and Fenchel-Legendre bounds, from a TOML
//! config plus flag overrides.
//!
//! Exit codes: 0 success, 2 config error, 3 condition-gate refusal,
//! 4 numerical failure.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tailwing::harness::{
    self, compare_rows_csv, legendre_csv, regvar_csv, termstructure_csv, GridConfig, ModelConfig,
    RunConfig, RunOptions, TailSource,
};
use tailwing::wings::{Side, WingVariant};
use tailwing::Error;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SideArg {
    Right,
    Left,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Side {
        match s {
            SideArg::Right => Side::Right,
            SideArg::Left => Side::Left,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    /// price route (iv)
    Iv,
    /// cdf route (iv')
    IvPrime,
    /// density route (iv'')
    IvDoublePrime,
    /// sublinear route (v)
    V,
}

impl From<VariantArg> for WingVariant {
    fn from(v: VariantArg) -> WingVariant {
        match v {
            VariantArg::Iv => WingVariant::Iv,
            VariantArg::IvPrime => WingVariant::IvPrime,
            VariantArg::IvDoublePrime => WingVariant::IvDoublePrime,
            VariantArg::V => WingVariant::V,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SourceArg {
    Model,
    Legendre,
    Numeric,
}

impl From<SourceArg> for TailSource {
    fn from(s: SourceArg) -> TailSource {
        match s {
            SourceArg::Model => TailSource::Model,
            SourceArg::Legendre => TailSource::Legendre,
            SourceArg::Numeric => TailSource::Numeric,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// TOML config file; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model family: bs|nig|fmls|merton|synthetic.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    /// Use --mu as the raw drift instead of the martingale adjustment.
    #[arg(long)]
    raw_drift: bool,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    alpha_j: Option<f64>,
    #[arg(long)]
    delta_j: Option<f64>,
    #[arg(long)]
    side: Option<SideArg>,
    #[arg(long)]
    variant: Option<VariantArg>,
    #[arg(long)]
    tail_source: Option<SourceArg>,
    #[arg(long)]
    k_min: Option<f64>,
    #[arg(long)]
    k_max: Option<f64>,
    #[arg(long)]
    k_points: Option<usize>,
    /// Output basename; writes <out>.csv and <out>.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Stdout format when --out is not given.
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Price and invert a smile curve.
    Smile(CommonArgs),
    /// Evaluate a wing asymptote on the grid.
    Asymptote(CommonArgs),
    /// Smile vs asymptote, row by row.
    Compare(CommonArgs),
    /// Total variance and psi slope across maturities at fixed k.
    Termstructure {
        #[command(flatten)]
        common: CommonArgs,
        /// Fixed log-strike.
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        /// Comma-separated ascending maturities.
        #[arg(long, value_delimiter = ',')]
        t_grid: Option<Vec<f64>>,
    },
    /// Regular-variation index and Bingham ratios of the chosen tail.
    Regvar(CommonArgs),
    /// Fenchel-Legendre saddle points and Chernoff bounds.
    Legendre(CommonArgs),
}

#[derive(Debug, Parser)]
#[command(name = "tailwing", version, about = "Smile wings: exact pricing vs tail asymptotics")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

fn load_config(common: &CommonArgs) -> Result<RunConfig, Error> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::from_toml(&text)?
        }
        None => RunConfig {
            version: harness::CONFIG_VERSION,
            model: ModelConfig {
                family: String::new(),
                sigma: None,
                t: 1.0,
                alpha: None,
                beta: None,
                mu: None,
                raw_drift: false,
                delta: None,
                lambda: None,
                alpha_j: None,
                delta_j: None,
                right: None,
                left: None,
            },
            grid: GridConfig::default(),
            run: RunOptions::default(),
        },
    };
    if let Some(m) = &common.model {
        cfg.model.family = m.clone();
    }
    if cfg.model.family.is_empty() {
        return Err(Error::Config(
            "no model: pass --model or a --config file with a [model] table".into(),
        ));
    }
    if let Some(v) = common.sigma {
        cfg.model.sigma = Some(v);
    }
    if let Some(v) = common.t {
        cfg.model.t = v;
    }
    if let Some(v) = common.alpha {
        cfg.model.alpha = Some(v);
    }
    if let Some(v) = common.beta {
        cfg.model.beta = Some(v);
    }
    if let Some(v) = common.mu {
        cfg.model.mu = Some(v);
    }
    if common.raw_drift {
        cfg.model.raw_drift = true;
    }
    if let Some(v) = common.delta {
        cfg.model.delta = Some(v);
    }
    if let Some(v) = common.lambda {
        cfg.model.lambda = Some(v);
    }
    if let Some(v) = common.alpha_j {
        cfg.model.alpha_j = Some(v);
    }
    if let Some(v) = common.delta_j {
        cfg.model.delta_j = Some(v);
    }
    if let Some(v) = common.side {
        cfg.run.side = v.into();
    }
    if let Some(v) = common.variant {
        cfg.run.variant = Some(v.into());
    }
    if let Some(v) = common.tail_source {
        cfg.run.tail_source = v.into();
    }
    if let Some(v) = common.k_min {
        cfg.grid.k_min = v;
    }
    if let Some(v) = common.k_max {
        cfg.grid.k_max = Some(v);
    }
    if let Some(v) = common.k_points {
        cfg.grid.points = v;
    }
    Ok(cfg)
}

fn emit(common: &CommonArgs, csv: String, json: serde_json::Value) -> Result<(), Error> {
    match &common.out {
        Some(base) => {
            let csv_path = base.with_extension("csv");
            let json_path = base.with_extension("json");
            if let Some(dir) = base.parent() {
                if !dir.as_os_str().is_empty() {
                    std::fs::create_dir_all(dir)
                        .map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))?;
                }
            }
            std::fs::write(&csv_path, csv)
                .map_err(|e| Error::Config(format!("cannot write {}: {e}", csv_path.display())))?;
            std::fs::write(&json_path, serde_json::to_string_pretty(&json).unwrap())
                .map_err(|e| Error::Config(format!("cannot write {}: {e}", json_path.display())))?;
        }
        None => match common.format {
            FormatArg::Csv => print!("{csv}"),
            FormatArg::Json => println!("{}", serde_json::to_string_pretty(&json).unwrap()),
        },
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match &cli.cmd {
        Cmd::Smile(common) => {
            let cfg = load_config(common)?;
            let rep = harness::run_smile(&cfg)?;
            emit(common, compare_rows_csv(&rep.rows), serde_json::to_value(&rep).unwrap())
        }
        Cmd::Asymptote(common) => {
            let cfg = load_config(common)?;
            let rep = harness::run_asymptote(&cfg)?;
            emit(common, compare_rows_csv(&rep.rows), serde_json::to_value(&rep).unwrap())
        }
        Cmd::Compare(common) => {
            let cfg = load_config(common)?;
            let rep = harness::run_compare(&cfg)?;
            emit(common, compare_rows_csv(&rep.rows), serde_json::to_value(&rep).unwrap())
        }
        Cmd::Termstructure { common, k, t_grid } => {
            let mut cfg = load_config(common)?;
            cfg.run.k = Some(*k);
            if let Some(ts) = t_grid {
                cfg.run.t_grid = Some(ts.clone());
            }
            let rep = harness::run_termstructure(&cfg)?;
            emit(common, termstructure_csv(&rep), serde_json::to_value(&rep).unwrap())
        }
        Cmd::Regvar(common) => {
            let cfg = load_config(common)?;
            let rep = harness::run_regvar(&cfg)?;
            emit(common, regvar_csv(&rep), serde_json::to_value(&rep).unwrap())
        }
        Cmd::Legendre(common) => {
            let cfg = load_config(common)?;
            let rep = harness::run_legendre(&cfg)?;
            emit(common, legendre_csv(&rep), serde_json::to_value(&rep).unwrap())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        let code = e.exit_code();
        let kind = match &e {
            Error::InvalidInput(_) => "invalid_input",
            Error::Config(_) => "config",
            Error::MgfDomain(_) => "mgf_domain",
            Error::PriceOutOfBounds(_) => "price_out_of_bounds",
            Error::ConditionViolated { .. } => "condition_violated",
            Error::Unsupported(_) => "unsupported",
            Error::BracketFailure(_) => "bracket_failure",
            Error::Quadrature(_) => "quadrature",
        };
        let doc = serde_json::json!({
            "error": { "kind": kind, "message": e.to_string(), "exit_code": code }
        });
        eprintln!("{doc}");
        std::process::exit(code);
    }
}
