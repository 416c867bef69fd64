//! Batch orchestration: build smile curves and wing asymptotes from a
//! declarative config, compare them, and emit machine-readable reports.
//!
//! Reports are deterministic: identical configs produce bit-identical
//! output (fixed quadrature schedules, no randomized algorithms), and
//! every refusal — condition gates, unreachable strikes — appears as a
//! structured reason rather than a silent gap.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::legendre::{legendre_bound, legendre_tail};
use crate::models::{
    BsParams, FmlsParams, MertonParams, ModelSpec, NigParams, SyntheticSide, SyntheticTail,
};
use crate::pricing::{self, price_at, smile_curve, tail_cdf, SmileStrike};
use crate::regvar::{self, RegVarConfig, RegVarEstimate};
use crate::wings::{
    check_condition, left_wing, psi, right_wing, sublinear_wing, ConditionCheck, Side,
    TailFunction, TailKind, ThetaEstimate, WingAsymptote, WingVariant,
};

pub const CONFIG_VERSION: u32 = 1;

/// Where the asymptote's tail observable comes from: the model's
/// closed-form asymptote, the Fenchel-Legendre bound, or the numeric tail
/// CDF.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailSource {
    Model,
    Legendre,
    Numeric,
}

fn default_version() -> u32 {
    CONFIG_VERSION
}

fn default_t() -> f64 {
    1.0
}

fn default_k_min() -> f64 {
    0.5
}

fn default_points() -> usize {
    40
}

#[derive(Debug, Clone, Deserialize)]
pub struct ModelConfig {
    pub family: String,
    pub sigma: Option<f64>,
    #[serde(default = "default_t")]
    pub t: f64,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub mu: Option<f64>,
    /// Use the supplied mu as-is instead of the martingale drift.
    #[serde(default)]
    pub raw_drift: bool,
    pub delta: Option<f64>,
    pub lambda: Option<f64>,
    pub alpha_j: Option<f64>,
    pub delta_j: Option<f64>,
    /// Synthetic-tail side parameters.
    pub right: Option<SyntheticSide>,
    pub left: Option<SyntheticSide>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct GridConfig {
    #[serde(default = "default_k_min")]
    pub k_min: f64,
    /// Absent means: probe out to the invertibility floor.
    pub k_max: Option<f64>,
    #[serde(default = "default_points")]
    pub points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            k_min: default_k_min(),
            k_max: None,
            points: default_points(),
        }
    }
}

fn default_side() -> Side {
    Side::Right
}

fn default_tail_source() -> TailSource {
    TailSource::Model
}

#[derive(Debug, Clone, Deserialize)]
pub struct RunOptions {
    #[serde(default = "default_side")]
    pub side: Side,
    /// Formula variant; inferred from the tail source when absent.
    pub variant: Option<WingVariant>,
    #[serde(default = "default_tail_source")]
    pub tail_source: TailSource,
    /// Fixed log-strike for term-structure runs.
    pub k: Option<f64>,
    /// Ascending maturities for term-structure runs.
    pub t_grid: Option<Vec<f64>>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            side: Side::Right,
            variant: None,
            tail_source: TailSource::Model,
            k: None,
            t_grid: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct RunConfig {
    #[serde(default = "default_version")]
    pub version: u32,
    pub model: ModelConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub run: RunOptions,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))?;
        if cfg.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "config version {} not supported (expected {CONFIG_VERSION})",
                cfg.version
            )));
        }
        Ok(cfg)
    }
}

fn req(v: Option<f64>, family: &str, name: &str) -> Result<f64> {
    v.ok_or_else(|| Error::Config(format!("{family} model requires `{name}`")))
}

/// Build a validated model from the declarative config.
pub fn build_model(cfg: &ModelConfig) -> Result<ModelSpec> {
    let t = cfg.t;
    match cfg.family.as_str() {
        "bs" => {
            let sigma = req(cfg.sigma, "bs", "sigma")?;
            if cfg.raw_drift {
                Ok(ModelSpec::Bs(BsParams::with_drift(
                    sigma,
                    t,
                    req(cfg.mu, "bs", "mu (raw_drift)")?,
                )?))
            } else {
                Ok(ModelSpec::Bs(BsParams::martingale(sigma, t)?))
            }
        }
        "nig" => {
            let alpha = req(cfg.alpha, "nig", "alpha")?;
            let beta = req(cfg.beta, "nig", "beta")?;
            let delta = req(cfg.delta, "nig", "delta")?;
            if cfg.raw_drift {
                Ok(ModelSpec::Nig(NigParams::with_drift(
                    alpha,
                    beta,
                    req(cfg.mu, "nig", "mu (raw_drift)")?,
                    delta,
                    t,
                )?))
            } else {
                Ok(ModelSpec::Nig(NigParams::martingale(alpha, beta, delta, t)?))
            }
        }
        "fmls" => {
            let alpha = req(cfg.alpha, "fmls", "alpha")?;
            let sigma = req(cfg.sigma, "fmls", "sigma")?;
            if cfg.raw_drift {
                Ok(ModelSpec::Fmls(FmlsParams::with_drift(
                    alpha,
                    sigma,
                    req(cfg.mu, "fmls", "mu (raw_drift)")?,
                    t,
                )?))
            } else {
                Ok(ModelSpec::Fmls(FmlsParams::martingale(alpha, sigma, t)?))
            }
        }
        "merton" => {
            let sigma = cfg.sigma.unwrap_or(0.0);
            let lambda = req(cfg.lambda, "merton", "lambda")?;
            let alpha_j = req(cfg.alpha_j, "merton", "alpha_j")?;
            let delta_j = req(cfg.delta_j, "merton", "delta_j")?;
            if cfg.raw_drift {
                Ok(ModelSpec::Merton(MertonParams::with_drift(
                    req(cfg.mu, "merton", "mu (raw_drift)")?,
                    sigma,
                    lambda,
                    alpha_j,
                    delta_j,
                    t,
                )?))
            } else {
                Ok(ModelSpec::Merton(MertonParams::martingale(
                    sigma, lambda, alpha_j, delta_j, t,
                )?))
            }
        }
        "synthetic" => {
            let right = cfg
                .right
                .ok_or_else(|| Error::Config("synthetic model requires a [model.right] table".into()))?;
            let left = cfg
                .left
                .ok_or_else(|| Error::Config("synthetic model requires a [model.left] table".into()))?;
            Ok(ModelSpec::Synthetic(SyntheticTail::new(right, left)?))
        }
        other => Err(Error::Config(format!(
            "unknown model family `{other}` (expected bs|nig|fmls|merton|synthetic)"
        ))),
    }
}

/// Largest wing coordinate whose log-price stays above the invertibility
/// floor, found by doubling plus bisection.
pub fn reachable_k_max(m: &ModelSpec, side: Side, k_min: f64) -> Result<f64> {
    let cap = match m {
        ModelSpec::Synthetic(_) => 200.0,
        _ => 1000.0,
    };
    let signed = |k: f64| match side {
        Side::Right => k,
        Side::Left => -k,
    };
    let lp = |k: f64| price_at(m, signed(k), side).map(|(p, _)| p.log_price);
    let mut lo = k_min.max(0.5);
    // the k_min point itself must price; gate errors propagate from here
    let mut flo = lp(lo)?;
    if flo < pricing::INVERTIBILITY_FLOOR_LOG {
        return Ok(lo);
    }
    let mut hi = lo;
    loop {
        hi = (hi * 2.0).min(cap);
        let f = lp(hi).unwrap_or(f64::NEG_INFINITY);
        if f < pricing::INVERTIBILITY_FLOOR_LOG {
            break;
        }
        flo = f;
        lo = hi;
        if hi >= cap {
            return Ok(cap);
        }
    }
    let _ = flo;
    for _ in 0..20 {
        let mid = 0.5 * (lo + hi);
        let f = lp(mid).unwrap_or(f64::NEG_INFINITY);
        if f >= pricing::INVERTIBILITY_FLOOR_LOG {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

fn geometric_grid(k_min: f64, k_max: f64, points: usize) -> Result<Vec<f64>> {
    if !(k_min > 0.0) {
        return Err(Error::Config(format!(
            "wing grids use positive wing coordinates; k_min = {k_min}"
        )));
    }
    if !(k_max > k_min) {
        return Err(Error::Config(format!("k_max = {k_max} must exceed k_min = {k_min}")));
    }
    if points < 2 {
        return Err(Error::Config("grid needs at least 2 points".into()));
    }
    let ratio = (k_max / k_min).powf(1.0 / (points as f64 - 1.0));
    Ok((0..points)
        .map(|i| k_min * ratio.powi(i as i32))
        .collect())
}

/// One comparison row; the CSV schema is exactly these eight columns.
#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    pub k: f64,
    pub log_price: Option<f64>,
    pub total_vol: Option<f64>,
    pub slope: Option<f64>,
    pub asymptote_slope: Option<f64>,
    pub ratio: Option<f64>,
    pub epsilon1: Option<f64>,
    pub quad_err: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    Converging,
    Flat,
    Diverging,
}

#[derive(Debug, Clone, Serialize)]
pub struct Refusal {
    pub k: f64,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareSummary {
    pub model: String,
    pub side: Side,
    pub variant: Option<WingVariant>,
    pub tail_kind: Option<TailKind>,
    pub condition: Option<ConditionCheck>,
    pub theta: Option<ThetaEstimate>,
    /// psi of the extrapolated theta, where admissible.
    pub predicted_limit_slope: Option<f64>,
    pub regvar: Option<RegVarEstimate>,
    pub final_ratio: Option<f64>,
    pub trend: Option<Trend>,
    pub clamped_points: usize,
    pub refusals: Vec<Refusal>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub summary: CompareSummary,
    pub rows: Vec<CompareRow>,
}

/// Assemble the asymptote for the requested source and variant; the
/// variant defaults to whatever the source naturally provides.
fn build_asymptote(
    m: &ModelSpec,
    side: Side,
    source: TailSource,
    variant: Option<WingVariant>,
) -> Result<WingAsymptote> {
    let cond = m.critical_moments();
    let tail = match (variant, source) {
        // the price route is numeric by nature
        (Some(WingVariant::Iv), _) => {
            let model = m.clone();
            let signed = move |k: f64| match side {
                Side::Right => k,
                Side::Left => -k,
            };
            // the price-route gate must fire eagerly, not inside a closure
            let gate = check_condition(&cond, side);
            if !gate.holds {
                return Err(Error::ConditionViolated {
                    side,
                    reason: "price-route asymptote needs the wing moment condition".into(),
                });
            }
            TailFunction::new(side, TailKind::Price, 1e-3, move |k| {
                match price_at(&model, signed(k), side) {
                    Ok((p, _)) => p.log_price,
                    Err(_) => f64::NAN,
                }
            })
        }
        (Some(WingVariant::IvDoublePrime), TailSource::Model)
        | (None, TailSource::Model)
        | (Some(WingVariant::IvPrime), TailSource::Model)
        | (Some(WingVariant::V), TailSource::Model) => {
            let t = m.known_tail_asymptote(side)?;
            if let Some(v) = variant {
                let want = match v {
                    WingVariant::IvPrime => TailKind::CdfTail,
                    WingVariant::IvDoublePrime => TailKind::Density,
                    _ => t.kind,
                };
                if want != t.kind {
                    return Err(Error::Config(format!(
                        "model asymptote for this family has kind {:?}; variant {v:?} needs \
                         {want:?} (use tail_source numeric or legendre, or the matching variant)",
                        t.kind
                    )));
                }
            }
            t
        }
        (_, TailSource::Legendre) => {
            if matches!(variant, Some(WingVariant::IvDoublePrime)) {
                return Err(Error::Config(
                    "the legendre tail is a cdf bound; the density variant does not apply".into(),
                ));
            }
            legendre_tail(m, side)?
        }
        (Some(WingVariant::IvDoublePrime), TailSource::Numeric) => {
            if !m.has_density() {
                return Err(Error::Config(format!(
                    "model {} has no exact density for the numeric density route",
                    m.descriptor()
                )));
            }
            let model = m.clone();
            TailFunction::new(side, TailKind::Density, 1e-3, move |k| {
                let x = match side {
                    Side::Right => k,
                    Side::Left => -k,
                };
                model.exact_log_density(x).unwrap_or(f64::NAN)
            })
        }
        (_, TailSource::Numeric) => {
            let model = m.clone();
            TailFunction::new(side, TailKind::CdfTail, 1e-3, move |k| {
                match tail_cdf(&model, k, side) {
                    Ok(t) => t.value,
                    Err(_) => f64::NAN,
                }
            })
        }
    };
    match variant {
        Some(WingVariant::V) => Ok(sublinear_wing(tail)),
        _ => match side {
            Side::Right => right_wing(tail, &cond),
            Side::Left => left_wing(tail, &cond),
        },
    }
}

fn trend_of(rows: &[CompareRow]) -> Option<Trend> {
    let devs: Vec<f64> = rows
        .iter()
        .filter_map(|r| r.ratio.map(|x| (x - 1.0).abs()))
        .collect();
    if devs.len() < 3 {
        return None;
    }
    let top = &devs[devs.len() / 2..];
    if top.len() < 2 {
        return None;
    }
    let eps = 1e-12;
    let decreasing = top.windows(2).all(|w| w[1] < w[0] + eps);
    let increasing = top.windows(2).all(|w| w[1] > w[0] - eps);
    Some(if decreasing && !increasing {
        Trend::Converging
    } else if increasing && !decreasing {
        Trend::Diverging
    } else {
        Trend::Flat
    })
}

fn resolve_grid(cfg: &RunConfig, m: &ModelSpec, needs_pricing: bool) -> Result<Vec<f64>> {
    let k_max = match cfg.grid.k_max {
        Some(k) => k,
        None => {
            if needs_pricing {
                reachable_k_max(m, cfg.run.side, cfg.grid.k_min)?
            } else {
                match m {
                    ModelSpec::Synthetic(_) => 200.0,
                    _ => 100.0,
                }
            }
        }
    };
    geometric_grid(cfg.grid.k_min, k_max, cfg.grid.points)
}

fn regvar_of_tail(tail: &TailFunction, k_lo: f64, k_hi: f64) -> Option<RegVarEstimate> {
    let x0 = k_lo.max(tail.k_min).max(0.25);
    if !(k_hi > x0 * 2.0) {
        return None;
    }
    let cfg = RegVarConfig {
        lambda: (k_hi / x0).powf(1.0 / 15.0),
        points: 16,
        tol_factor: 0.1,
    };
    let t = tail.clone();
    regvar::estimate_index(move |x| -t.eval(x), x0, &cfg).ok()
}

/// Price, invert, build the requested asymptote, and compare per strike.
pub fn run_compare(cfg: &RunConfig) -> Result<ComparisonReport> {
    let model = build_model(&cfg.model)?;
    let side = cfg.run.side;
    let asym = build_asymptote(&model, side, cfg.run.tail_source, cfg.run.variant)?;
    let grid = resolve_grid(cfg, &model, true)?;
    let signed: Vec<f64> = grid
        .iter()
        .map(|&k| match side {
            Side::Right => k,
            Side::Left => -k,
        })
        .collect();
    let curve = smile_curve(&model, &signed, side);

    // left curves come back ascending in signed strike = descending wing
    // coordinate; re-key rows by the wing coordinate, ascending
    let mut pts: Vec<&SmileStrike> = curve.points.iter().collect();
    pts.sort_by(|a, b| a.k.abs().partial_cmp(&b.k.abs()).unwrap());

    let mut rows = Vec::with_capacity(pts.len());
    let mut refusals = Vec::new();
    let mut clamped = 0usize;
    for pt in pts {
        let k = pt.k.abs();
        let s = asym.slope(k);
        if s.clamped {
            clamped += 1;
        }
        let asym_slope = if s.value.is_finite() { Some(s.value) } else { None };
        let ratio = match (pt.slope, asym_slope) {
            (Some(n), Some(a)) if a != 0.0 => Some(n / a),
            _ => None,
        };
        if let Some(r) = &pt.refusal {
            refusals.push(Refusal {
                k: pt.k,
                reason: r.clone(),
            });
        }
        rows.push(CompareRow {
            k,
            log_price: pt.log_price,
            total_vol: pt.total_vol,
            slope: pt.slope,
            asymptote_slope: asym_slope,
            ratio,
            epsilon1: pt.epsilon1,
            quad_err: pt.quad_err,
        });
    }

    let theta = if grid.len() >= 2 {
        Some(asym.theta_estimate(grid[grid.len() - 2], grid[grid.len() - 1]))
    } else {
        None
    };
    let predicted_limit_slope = theta.and_then(|t| psi(t.extrapolated.max(0.0)).ok());
    let final_ratio = rows.iter().rev().find_map(|r| r.ratio);
    let trend = trend_of(&rows);
    let regvar = regvar_of_tail(&asym.tail, grid[0], grid[grid.len() - 1]);
    let cond = check_condition(&model.critical_moments(), side);

    Ok(ComparisonReport {
        summary: CompareSummary {
            model: model.descriptor(),
            side,
            variant: Some(asym.variant),
            tail_kind: Some(asym.tail.kind),
            condition: Some(cond),
            theta,
            predicted_limit_slope,
            regvar,
            final_ratio,
            trend,
            clamped_points: clamped,
            refusals,
        },
        rows,
    })
}

/// Smile only: pricing and inversion columns, no asymptote.
pub fn run_smile(cfg: &RunConfig) -> Result<ComparisonReport> {
    let model = build_model(&cfg.model)?;
    let side = cfg.run.side;
    let grid = resolve_grid(cfg, &model, true)?;
    let signed: Vec<f64> = grid
        .iter()
        .map(|&k| match side {
            Side::Right => k,
            Side::Left => -k,
        })
        .collect();
    let curve = smile_curve(&model, &signed, side);
    let mut pts: Vec<&SmileStrike> = curve.points.iter().collect();
    pts.sort_by(|a, b| a.k.abs().partial_cmp(&b.k.abs()).unwrap());
    let mut refusals = Vec::new();
    let rows: Vec<CompareRow> = pts
        .iter()
        .map(|pt| {
            if let Some(r) = &pt.refusal {
                refusals.push(Refusal {
                    k: pt.k,
                    reason: r.clone(),
                });
            }
            CompareRow {
                k: pt.k.abs(),
                log_price: pt.log_price,
                total_vol: pt.total_vol,
                slope: pt.slope,
                asymptote_slope: None,
                ratio: None,
                epsilon1: pt.epsilon1,
                quad_err: pt.quad_err,
            }
        })
        .collect();
    Ok(ComparisonReport {
        summary: CompareSummary {
            model: model.descriptor(),
            side,
            variant: None,
            tail_kind: None,
            condition: Some(check_condition(&model.critical_moments(), side)),
            theta: None,
            predicted_limit_slope: None,
            regvar: None,
            final_ratio: None,
            trend: None,
            clamped_points: 0,
            refusals,
        },
        rows,
    })
}

/// Asymptote only: the predicted slope on the grid, no pricing (unless the
/// price-route variant was requested, which prices by construction).
pub fn run_asymptote(cfg: &RunConfig) -> Result<ComparisonReport> {
    let model = build_model(&cfg.model)?;
    let side = cfg.run.side;
    let asym = build_asymptote(&model, side, cfg.run.tail_source, cfg.run.variant)?;
    let needs_pricing = matches!(asym.tail.kind, TailKind::Price);
    let grid = resolve_grid(cfg, &model, needs_pricing)?;
    let mut clamped = 0usize;
    let rows: Vec<CompareRow> = grid
        .iter()
        .map(|&k| {
            let s = asym.slope(k);
            if s.clamped {
                clamped += 1;
            }
            CompareRow {
                k,
                log_price: None,
                total_vol: None,
                slope: None,
                asymptote_slope: if s.value.is_finite() { Some(s.value) } else { None },
                ratio: None,
                epsilon1: None,
                quad_err: None,
            }
        })
        .collect();
    let theta = Some(asym.theta_estimate(grid[grid.len() - 2], grid[grid.len() - 1]));
    let predicted_limit_slope = theta.and_then(|t| psi(t.extrapolated.max(0.0)).ok());
    let regvar = regvar_of_tail(&asym.tail, grid[0], grid[grid.len() - 1]);
    Ok(ComparisonReport {
        summary: CompareSummary {
            model: model.descriptor(),
            side,
            variant: Some(asym.variant),
            tail_kind: Some(asym.tail.kind),
            condition: Some(check_condition(&model.critical_moments(), side)),
            theta,
            predicted_limit_slope,
            regvar,
            final_ratio: None,
            trend: None,
            clamped_points: clamped,
            refusals: Vec::new(),
        },
        rows,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TermRow {
    pub t: f64,
    pub log_price: f64,
    pub total_variance: f64,
    /// psi[-log c(k,T)/k]
    pub psi_slope: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TermStructureReport {
    pub model: String,
    pub k: f64,
    pub rows: Vec<TermRow>,
    pub variance_non_decreasing: bool,
    pub psi_non_decreasing: bool,
}

/// Fixed strike, ascending maturities: implied total variance and the
/// psi-transformed log-price, both checked for monotonicity in T.
pub fn run_termstructure(cfg: &RunConfig) -> Result<TermStructureReport> {
    let k = cfg.run.k.unwrap_or(1.0);
    if !(k > 0.0) {
        return Err(Error::Config(format!("termstructure needs k > 0, got {k}")));
    }
    let t_grid = cfg
        .run
        .t_grid
        .clone()
        .unwrap_or_else(|| vec![0.25, 0.5, 1.0, 2.0, 4.0]);
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("t_grid must be strictly ascending".into()));
    }
    let mut rows = Vec::with_capacity(t_grid.len());
    let mut descriptor = String::new();
    for &t in &t_grid {
        let mut mc = cfg.model.clone();
        mc.t = t;
        let model = build_model(&mc)?;
        descriptor = model.descriptor();
        let (price, _) = pricing::call_from_tail(&model, k)?;
        let v = crate::blackscholes::implied_total_vol(&price, crate::blackscholes::LogStrike(k))?;
        let psi_slope = psi((-price.log_price / k).max(0.0))?;
        rows.push(TermRow {
            t,
            log_price: price.log_price,
            total_variance: v.0 * v.0,
            psi_slope,
        });
    }
    let variance_non_decreasing = rows.windows(2).all(|w| w[1].total_variance >= w[0].total_variance);
    let psi_non_decreasing = rows.windows(2).all(|w| w[1].psi_slope >= w[0].psi_slope);
    Ok(TermStructureReport {
        model: descriptor,
        k,
        rows,
        variance_non_decreasing,
        psi_non_decreasing,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BinghamRow {
    pub x: f64,
    pub g: f64,
    /// bingham_transform(g, x) / g(x); tends to 1 for regularly varying g.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegVarReport {
    pub model: String,
    pub side: Side,
    pub tail_kind: TailKind,
    pub estimate: RegVarEstimate,
    pub bingham: Vec<BinghamRow>,
}

/// Regular-variation diagnostics of the chosen tail, plus Bingham ratios
/// for density-kind tails (where -log of the integrated tail is the CDF
/// tail itself).
pub fn run_regvar(cfg: &RunConfig) -> Result<RegVarReport> {
    let model = build_model(&cfg.model)?;
    let side = cfg.run.side;
    let asym = build_asymptote(&model, side, cfg.run.tail_source, cfg.run.variant)?;
    let tail = asym.tail.clone();
    let grid = resolve_grid(cfg, &model, false)?;
    let (k_lo, k_hi) = (grid[0], grid[grid.len() - 1]);
    let x0 = k_lo.max(tail.k_min).max(0.25);
    let rv_cfg = RegVarConfig {
        lambda: (k_hi / x0).powf(1.0 / 15.0),
        points: 16,
        tol_factor: 0.1,
    };
    let t = tail.clone();
    let estimate = regvar::estimate_index(move |x| -t.eval(x), x0, &rv_cfg)?;
    let mut bingham = Vec::new();
    if tail.kind == TailKind::Density {
        // probe the top decade of the grid
        for i in [grid.len() / 2, 3 * grid.len() / 4, grid.len() - 1] {
            let x = grid[i];
            let g = -tail.eval(x);
            let t2 = tail.clone();
            let ratio = regvar::bingham_transform(move |y| -t2.eval(y), x)
                .ok()
                .map(|b| b / g);
            bingham.push(BinghamRow { x, g, ratio });
        }
    }
    Ok(RegVarReport {
        model: model.descriptor(),
        side,
        tail_kind: tail.kind,
        estimate,
        bingham,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LegendreRow {
    pub k: f64,
    pub z_star: f64,
    pub k_at_z: f64,
    pub log_tail_bound: f64,
    pub boundary: bool,
    pub log_tail_numeric: Option<f64>,
    /// bound - numeric; the Chernoff inequality makes this >= 0.
    pub slack: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LegendreReport {
    pub model: String,
    pub side: Side,
    pub rows: Vec<LegendreRow>,
}

/// Saddle points and Chernoff bounds across the grid, with the numeric
/// tail alongside where it is computable.
pub fn run_legendre(cfg: &RunConfig) -> Result<LegendreReport> {
    let model = build_model(&cfg.model)?;
    let side = cfg.run.side;
    let work = match side {
        Side::Right => model.clone(),
        Side::Left => model.reflected()?,
    };
    let grid = resolve_grid(cfg, &model, false)?;
    let mut rows = Vec::with_capacity(grid.len());
    for &k in &grid {
        let sol = legendre_bound(&work, k)?;
        let numeric = tail_cdf(&model, k, side).ok().map(|t| t.value);
        rows.push(LegendreRow {
            k,
            z_star: sol.z_star,
            k_at_z: sol.k_at_z,
            log_tail_bound: sol.log_tail_bound,
            boundary: sol.boundary,
            log_tail_numeric: numeric,
            slack: numeric.map(|n| sol.log_tail_bound - n),
        });
    }
    Ok(LegendreReport {
        model: model.descriptor(),
        side,
        rows,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x}"),
        _ => String::new(),
    }
}

/// Row CSV with the fixed schema
/// `k,log_price,total_vol,slope,asymptote_slope,ratio,epsilon1,quad_err`.
pub fn compare_rows_csv(rows: &[CompareRow]) -> String {
    let mut out = String::from("k,log_price,total_vol,slope,asymptote_slope,ratio,epsilon1,quad_err\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.k,
            fmt_opt(r.log_price),
            fmt_opt(r.total_vol),
            fmt_opt(r.slope),
            fmt_opt(r.asymptote_slope),
            fmt_opt(r.ratio),
            fmt_opt(r.epsilon1),
            fmt_opt(r.quad_err),
        ));
    }
    out
}

pub fn termstructure_csv(rep: &TermStructureReport) -> String {
    let mut out = String::from("t,log_price,total_variance,psi_slope\n");
    for r in &rep.rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.t, r.log_price, r.total_variance, r.psi_slope
        ));
    }
    out
}

pub fn regvar_csv(rep: &RegVarReport) -> String {
    let mut out = String::from("x,g,bingham_ratio\n");
    for r in &rep.bingham {
        out.push_str(&format!("{},{},{}\n", r.x, r.g, fmt_opt(r.ratio)));
    }
    out
}

pub fn legendre_csv(rep: &LegendreReport) -> String {
    let mut out = String::from("k,z_star,k_at_z,log_tail_bound,boundary,log_tail_numeric,slack\n");
    for r in &rep.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.k,
            r.z_star,
            r.k_at_z,
            r.log_tail_bound,
            r.boundary,
            fmt_opt(r.log_tail_numeric),
            fmt_opt(r.slack),
        ));
    }
    out
}
