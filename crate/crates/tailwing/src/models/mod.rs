//! The model zoo: parameter validation, log-mgf and characteristic
//! functions, closed-form tail asymptotes, critical moments, and exact log
//! densities where available.
//!
//! All models describe the normalized forward return X = log(S_T / F_T);
//! by default the drift is set by the martingale condition K(1) = 0 so
//! that E e^X = 1 (an explicit-drift constructor is available when raw
//! parameters are wanted).

mod synthetic;

pub use synthetic::{SyntheticSide, SyntheticTail};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::math::{logsumexp2, SQRT_2PI};
use crate::wings::{MomentCondition, Side, TailFunction, TailKind};

/// Black-Scholes: X ~ N(mu T, sigma^2 T).
#[derive(Debug, Clone, Copy)]
pub struct BsParams {
    pub sigma: f64,
    pub t: f64,
    pub mu: f64,
}

impl BsParams {
    pub fn with_drift(sigma: f64, t: f64, mu: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidInput(format!("bs: sigma must be > 0, got {sigma}")));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidInput(format!("bs: T must be > 0, got {t}")));
        }
        if !mu.is_finite() {
            return Err(Error::InvalidInput(format!("bs: mu must be finite, got {mu}")));
        }
        Ok(BsParams { sigma, t, mu })
    }

    /// Martingale drift: mu = -sigma^2/2.
    pub fn martingale(sigma: f64, t: f64) -> Result<Self> {
        Self::with_drift(sigma, t, -0.5 * sigma * sigma)
    }
}

/// Normal inverse Gaussian: X_T ~ NIG(alpha, beta, mu T, delta T),
/// gamma = sqrt(alpha^2 - beta^2) > 0.
#[derive(Debug, Clone, Copy)]
pub struct NigParams {
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub delta: f64,
    pub t: f64,
}

impl NigParams {
    pub fn with_drift(alpha: f64, beta: f64, mu: f64, delta: f64, t: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidInput(format!("nig: alpha must be > 0, got {alpha}")));
        }
        if !(beta.is_finite() && beta.abs() < alpha) {
            return Err(Error::InvalidInput(format!(
                "nig: |beta| < alpha required (gamma > 0), got beta={beta}, alpha={alpha}"
            )));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidInput(format!("nig: delta must be > 0, got {delta}")));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidInput(format!("nig: T must be > 0, got {t}")));
        }
        if !mu.is_finite() {
            return Err(Error::InvalidInput(format!("nig: mu must be finite, got {mu}")));
        }
        Ok(NigParams {
            alpha,
            beta,
            mu,
            delta,
            t,
        })
    }

    /// Martingale drift mu = -delta(gamma - sqrt(alpha^2-(beta+1)^2));
    /// requires |beta + 1| <= alpha so that E e^X is finite.
    pub fn martingale(alpha: f64, beta: f64, delta: f64, t: f64) -> Result<Self> {
        if (beta + 1.0).abs() > alpha {
            return Err(Error::InvalidInput(format!(
                "nig: martingale drift needs |beta+1| <= alpha, got beta={beta}, alpha={alpha}"
            )));
        }
        let gamma = (alpha * alpha - beta * beta).sqrt();
        let g1 = (alpha * alpha - (beta + 1.0) * (beta + 1.0)).sqrt();
        let mu = -delta * (gamma - g1);
        Self::with_drift(alpha, beta, mu, delta, t)
    }

    pub fn gamma(&self) -> f64 {
        (self.alpha * self.alpha - self.beta * self.beta).sqrt()
    }
}

/// Finite-moment log-stable (Carr-Wu): X_T ~ L_alpha(mu T, sigma T^{1/alpha}, -1),
/// maximally negatively skewed so every positive moment is finite.
#[derive(Debug, Clone, Copy)]
pub struct FmlsParams {
    pub alpha: f64,
    pub sigma: f64,
    pub mu: f64,
    pub t: f64,
}

impl FmlsParams {
    pub fn with_drift(alpha: f64, sigma: f64, mu: f64, t: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha <= 2.0) {
            return Err(Error::InvalidInput(format!(
                "fmls: alpha must lie in (1, 2], got {alpha}"
            )));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidInput(format!("fmls: sigma must be >= 0, got {sigma}")));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidInput(format!("fmls: T must be > 0, got {t}")));
        }
        if !mu.is_finite() {
            return Err(Error::InvalidInput(format!("fmls: mu must be finite, got {mu}")));
        }
        Ok(FmlsParams { alpha, sigma, mu, t })
    }

    /// Martingale drift mu = -sigma^alpha |sec(pi alpha / 2)|.
    pub fn martingale(alpha: f64, sigma: f64, t: f64) -> Result<Self> {
        let p = Self::with_drift(alpha, sigma, 0.0, t)?;
        let mu = -sigma.powf(alpha) * p.abs_sec();
        Self::with_drift(alpha, sigma, mu, t)
    }

    /// |sec(pi alpha / 2)|; equals 1 at alpha = 2.
    pub fn abs_sec(&self) -> f64 {
        if self.alpha == 2.0 {
            1.0
        } else {
            (1.0 / (std::f64::consts::FRAC_PI_2 * self.alpha).cos()).abs()
        }
    }
}

/// Merton jump diffusion: Levy triplet (mu, sigma^2, K) with jump measure
/// lambda x N(alpha_j, delta_j^2).
#[derive(Debug, Clone, Copy)]
pub struct MertonParams {
    pub mu: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub alpha_j: f64,
    pub delta_j: f64,
    pub t: f64,
}

impl MertonParams {
    pub fn with_drift(
        mu: f64,
        sigma: f64,
        lambda: f64,
        alpha_j: f64,
        delta_j: f64,
        t: f64,
    ) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidInput(format!("merton: sigma must be >= 0, got {sigma}")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidInput(format!("merton: lambda must be > 0, got {lambda}")));
        }
        if !(delta_j >= 0.0 && delta_j.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "merton: delta_j must be >= 0, got {delta_j}"
            )));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidInput(format!("merton: T must be > 0, got {t}")));
        }
        if !(mu.is_finite() && alpha_j.is_finite()) {
            return Err(Error::InvalidInput("merton: mu, alpha_j must be finite".into()));
        }
        Ok(MertonParams {
            mu,
            sigma,
            lambda,
            alpha_j,
            delta_j,
            t,
        })
    }

    /// Martingale drift mu = -sigma^2/2 - lambda (e^{alpha_j + delta_j^2/2} - 1).
    pub fn martingale(sigma: f64, lambda: f64, alpha_j: f64, delta_j: f64, t: f64) -> Result<Self> {
        let mu = -0.5 * sigma * sigma
            - lambda * ((alpha_j + 0.5 * delta_j * delta_j).exp() - 1.0);
        Self::with_drift(mu, sigma, lambda, alpha_j, delta_j, t)
    }

    /// Purely atomic distribution (compound Poisson with deterministic
    /// jump size and no diffusion): no density exists.
    pub fn is_atomic(&self) -> bool {
        self.sigma == 0.0 && self.delta_j == 0.0
    }
}

/// Tagged union of the supported model families.
#[derive(Debug, Clone)]
pub enum ModelSpec {
    Bs(BsParams),
    Nig(NigParams),
    Fmls(FmlsParams),
    Merton(MertonParams),
    Synthetic(SyntheticTail),
}

fn gauss_log_pdf(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * (x - mean) * (x - mean) / var - 0.5 * var.ln() - SQRT_2PI.ln()
}

impl ModelSpec {
    pub fn descriptor(&self) -> String {
        match self {
            ModelSpec::Bs(p) => format!("bs(sigma={}, T={}, mu={})", p.sigma, p.t, p.mu),
            ModelSpec::Nig(p) => format!(
                "nig(alpha={}, beta={}, delta={}, T={}, mu={})",
                p.alpha, p.beta, p.delta, p.t, p.mu
            ),
            ModelSpec::Fmls(p) => {
                format!("fmls(alpha={}, sigma={}, T={}, mu={})", p.alpha, p.sigma, p.t, p.mu)
            }
            ModelSpec::Merton(p) => format!(
                "merton(sigma={}, lambda={}, alpha_j={}, delta_j={}, T={}, mu={})",
                p.sigma, p.lambda, p.alpha_j, p.delta_j, p.t, p.mu
            ),
            ModelSpec::Synthetic(p) => format!(
                "synthetic(right: a={}, b={}, c={}, rho={}; left: a={}, b={}, c={}, rho={})",
                p.right.power,
                p.right.linear,
                p.right.stretch,
                p.right.stretch_exp,
                p.left.power,
                p.left.linear,
                p.left.stretch,
                p.left.stretch_exp
            ),
        }
    }

    /// Interval of z where E e^{zX} is finite (endpoints included where the
    /// mgf stays finite at the boundary, as for NIG's branch point).
    pub fn mgf_domain(&self) -> (f64, f64) {
        match self {
            ModelSpec::Bs(_) | ModelSpec::Merton(_) => (f64::NEG_INFINITY, f64::INFINITY),
            ModelSpec::Nig(p) => (-(p.alpha + p.beta), p.alpha - p.beta),
            ModelSpec::Fmls(p) => {
                if p.alpha == 2.0 {
                    (f64::NEG_INFINITY, f64::INFINITY)
                } else {
                    (0.0, f64::INFINITY)
                }
            }
            ModelSpec::Synthetic(p) => {
                let cm = p.critical_moments();
                (-cm.q_minus, cm.p_plus)
            }
        }
    }

    /// K(z) = log E e^{zX}, exact closed form (numeric for synthetic).
    pub fn log_mgf(&self, z: f64) -> Result<f64> {
        match self {
            ModelSpec::Bs(p) => Ok(z * p.mu * p.t + 0.5 * z * z * p.sigma * p.sigma * p.t),
            ModelSpec::Nig(p) => {
                if (p.beta + z).abs() > p.alpha {
                    return Err(Error::MgfDomain(format!(
                        "nig mgf finite only for |beta+z| <= alpha, got z={z} \
                         (boundary z in [{}, {}])",
                        -(p.alpha + p.beta),
                        p.alpha - p.beta
                    )));
                }
                let root = (p.alpha * p.alpha - (p.beta + z) * (p.beta + z)).sqrt();
                Ok(p.t * (p.delta * (p.gamma() - root) + p.mu * z))
            }
            ModelSpec::Fmls(p) => {
                if p.alpha < 2.0 && z < 0.0 {
                    return Err(Error::MgfDomain(format!(
                        "fmls mgf finite only for z >= 0 when alpha < 2, got z={z}"
                    )));
                }
                Ok(z * p.mu * p.t + z.abs().powf(p.alpha) * p.sigma.powf(p.alpha) * p.t * p.abs_sec())
            }
            ModelSpec::Merton(p) => Ok(p.t
                * (z * p.mu
                    + 0.5 * z * z * p.sigma * p.sigma
                    + p.lambda * ((z * p.alpha_j + 0.5 * z * z * p.delta_j * p.delta_j).exp() - 1.0))),
            ModelSpec::Synthetic(p) => p.log_mgf(z),
        }
    }

    /// K'(z), exact where a closed form exists; central finite differences
    /// with a curvature-scaled step for the synthetic family.
    pub fn log_mgf_deriv(&self, z: f64) -> Result<f64> {
        match self {
            ModelSpec::Bs(p) => Ok(p.mu * p.t + z * p.sigma * p.sigma * p.t),
            ModelSpec::Nig(p) => {
                if (p.beta + z).abs() > p.alpha {
                    return Err(Error::MgfDomain(format!("nig K'(z) outside domain at z={z}")));
                }
                let root = (p.alpha * p.alpha - (p.beta + z) * (p.beta + z)).sqrt();
                if root == 0.0 {
                    // branch point: one-sided derivative is infinite
                    return Ok(if p.beta + z > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY });
                }
                Ok(p.t * (p.mu + p.delta * (p.beta + z) / root))
            }
            ModelSpec::Fmls(p) => {
                if p.alpha < 2.0 && z < 0.0 {
                    return Err(Error::MgfDomain(format!("fmls K'(z) needs z >= 0, got {z}")));
                }
                Ok(p.mu * p.t
                    + p.alpha * p.sigma.powf(p.alpha) * p.t * p.abs_sec() * z.powf(p.alpha - 1.0))
            }
            ModelSpec::Merton(p) => Ok(p.t
                * (p.mu
                    + z * p.sigma * p.sigma
                    + p.lambda
                        * (p.alpha_j + z * p.delta_j * p.delta_j)
                        * (z * p.alpha_j + 0.5 * z * z * p.delta_j * p.delta_j).exp())),
            ModelSpec::Synthetic(_) => {
                let h = 1e-6 * (1.0 + z.abs());
                let up = self.log_mgf(z + h)?;
                let dn = self.log_mgf(z - h)?;
                Ok((up - dn) / (2.0 * h))
            }
        }
    }

    /// K(z) for complex z with Re z inside the mgf domain; the analytic
    /// continuation used by the Laplace-inversion pricer.
    pub fn log_mgf_complex(&self, z: Complex64) -> Result<Complex64> {
        match self {
            ModelSpec::Bs(p) => Ok(z * p.mu * p.t + z * z * (0.5 * p.sigma * p.sigma * p.t)),
            ModelSpec::Nig(p) => {
                if (p.beta + z.re).abs() > p.alpha {
                    return Err(Error::MgfDomain(format!(
                        "nig complex mgf requires |beta + Re z| <= alpha, got Re z = {}",
                        z.re
                    )));
                }
                let bz = Complex64::new(p.beta, 0.0) + z;
                let root = (Complex64::new(p.alpha * p.alpha, 0.0) - bz * bz).sqrt();
                Ok((Complex64::new(p.gamma(), 0.0) - root) * (p.delta * p.t)
                    + z * (p.mu * p.t))
            }
            ModelSpec::Fmls(p) => {
                if p.alpha < 2.0 && z.re < 0.0 {
                    return Err(Error::MgfDomain(format!(
                        "fmls complex mgf requires Re z >= 0, got {}",
                        z.re
                    )));
                }
                let za = (z.ln() * p.alpha).exp();
                Ok(z * (p.mu * p.t) + za * (p.sigma.powf(p.alpha) * p.t * p.abs_sec()))
            }
            ModelSpec::Merton(p) => {
                let j = (z * p.alpha_j + z * z * (0.5 * p.delta_j * p.delta_j)).exp();
                Ok((z * p.mu + z * z * (0.5 * p.sigma * p.sigma) + (j - 1.0) * p.lambda) * p.t)
            }
            ModelSpec::Synthetic(_) => Err(Error::Unsupported(
                "synthetic model has no closed-form complex mgf; it prices through its density"
                    .into(),
            )),
        }
    }

    /// Characteristic function E e^{iuX}; closed form except for the
    /// synthetic family, where it is computed by quadrature.
    pub fn char_fn(&self, u: f64) -> Complex64 {
        let iu = Complex64::new(0.0, u);
        match self {
            ModelSpec::Bs(p) => (iu * (p.mu * p.t)
                - Complex64::new(0.5 * u * u * p.sigma * p.sigma * p.t, 0.0))
            .exp(),
            ModelSpec::Nig(p) => {
                let bz = Complex64::new(p.beta, 0.0) + iu;
                let root = (Complex64::new(p.alpha * p.alpha, 0.0) - bz * bz).sqrt();
                (((Complex64::new(p.gamma(), 0.0) - root) * p.delta + iu * p.mu) * p.t).exp()
            }
            ModelSpec::Fmls(p) => {
                if p.alpha == 2.0 {
                    return (iu * (p.mu * p.t)
                        - Complex64::new(u * u * p.sigma * p.sigma * p.t, 0.0))
                    .exp();
                }
                let tan = (std::f64::consts::FRAC_PI_2 * p.alpha).tan();
                let skew = Complex64::new(1.0, u.signum() * tan); // beta = -1
                ((iu * p.mu - skew * (u.abs().powf(p.alpha) * p.sigma.powf(p.alpha))) * p.t).exp()
            }
            ModelSpec::Merton(p) => {
                let j = (iu * p.alpha_j - Complex64::new(0.5 * u * u * p.delta_j * p.delta_j, 0.0))
                    .exp();
                ((iu * p.mu - Complex64::new(0.5 * u * u * p.sigma * p.sigma, 0.0)
                    + (j - 1.0) * p.lambda)
                    * p.t)
                    .exp()
            }
            ModelSpec::Synthetic(p) => synthetic_char_fn(p, u),
        }
    }

    /// Critical moments read off the mgf domain endpoints.
    pub fn critical_moments(&self) -> MomentCondition {
        match self {
            ModelSpec::Bs(_) | ModelSpec::Merton(_) => MomentCondition {
                p_plus: f64::INFINITY,
                q_minus: f64::INFINITY,
            },
            ModelSpec::Nig(p) => MomentCondition {
                p_plus: p.alpha - p.beta,
                q_minus: p.alpha + p.beta,
            },
            ModelSpec::Fmls(p) => MomentCondition {
                p_plus: f64::INFINITY,
                q_minus: if p.alpha == 2.0 { f64::INFINITY } else { 0.0 },
            },
            ModelSpec::Synthetic(p) => p.critical_moments(),
        }
    }

    /// E X = K'(0).
    pub fn mean(&self) -> f64 {
        match self {
            ModelSpec::Bs(p) => p.mu * p.t,
            ModelSpec::Nig(p) => p.t * (p.mu + p.delta * p.beta / p.gamma()),
            ModelSpec::Fmls(p) => p.mu * p.t,
            ModelSpec::Merton(p) => p.t * (p.mu + p.lambda * p.alpha_j),
            ModelSpec::Synthetic(p) => p.mean(),
        }
    }

    pub fn has_density(&self) -> bool {
        match self {
            ModelSpec::Bs(_) | ModelSpec::Synthetic(_) => true,
            ModelSpec::Merton(p) => !p.is_atomic(),
            ModelSpec::Nig(_) | ModelSpec::Fmls(_) => false,
        }
    }

    /// Exact log density where a closed form or convergent series exists
    /// (BS, non-atomic Merton, synthetic).
    pub fn exact_log_density(&self, x: f64) -> Result<f64> {
        match self {
            ModelSpec::Bs(p) => {
                let var = p.sigma * p.sigma * p.t;
                Ok(gauss_log_pdf(x, p.mu * p.t, var))
            }
            ModelSpec::Merton(p) => merton_log_density(p, x),
            ModelSpec::Synthetic(p) => Ok(p.log_density(x)),
            ModelSpec::Nig(_) => Err(Error::Unsupported(
                "nig density is not implemented; pricing goes through the characteristic function"
                    .into(),
            )),
            ModelSpec::Fmls(_) => Err(Error::Unsupported(
                "fmls density is not implemented; pricing goes through the characteristic function"
                    .into(),
            )),
        }
    }

    /// The closed-form asymptotic log tail, tagged with the kind the
    /// literature provides: density for BS and NIG, cdf for FMLS and
    /// Merton.
    ///
    /// The NIG form is known only up to an additive constant (the
    /// prefactor C is not pinned down here), so anything consuming it
    /// should use ratio or limit statements.
    pub fn known_tail_asymptote(&self, side: Side) -> Result<TailFunction> {
        match self {
            ModelSpec::Bs(p) => {
                let (var, m) = (p.sigma * p.sigma * p.t, p.mu * p.t);
                let sgn = match side {
                    Side::Right => 1.0,
                    Side::Left => -1.0,
                };
                Ok(TailFunction::new(side, TailKind::Density, 1e-8, move |k| {
                    gauss_log_pdf(sgn * k, m, var)
                }))
            }
            ModelSpec::Nig(p) => {
                // log f(k) ~ -(3/2) log|k| - sqrt(beta^2+gamma^2)|k| + beta k
                let rate = match side {
                    Side::Right => p.alpha - p.beta,
                    Side::Left => p.alpha + p.beta,
                };
                Ok(TailFunction::new(side, TailKind::Density, 1.0, move |k| {
                    -1.5 * k.ln() - rate * k
                }))
            }
            ModelSpec::Fmls(p) => {
                if side == Side::Left {
                    return Err(Error::Unsupported(
                        "fmls left tail is a power law (every negative exponential moment \
                         diverges); no wing asymptote applies"
                            .into(),
                    ));
                }
                // -log Fbar(k) ~ (alpha-1)/alpha * k^{alpha/(alpha-1)}
                //                * [T alpha sigma^alpha |sec(pi alpha/2)|]^{-1/(alpha-1)}
                // This is the Fenchel-Legendre sharp rate; it matches the
                // exact Gaussian tail in the alpha -> 2 limit.
                let a = p.alpha;
                let bracket = p.t * a * p.sigma.powf(a) * p.abs_sec();
                let rate = (a - 1.0) / a * bracket.powf(-1.0 / (a - 1.0));
                let expo = a / (a - 1.0);
                Ok(TailFunction::new(side, TailKind::CdfTail, 1.0, move |k| {
                    -rate * k.powf(expo)
                }))
            }
            ModelSpec::Merton(p) => {
                if p.delta_j > 0.0 {
                    // log tail ~ -(k/delta_j) sqrt(2 log k), either side
                    let dj = p.delta_j;
                    Ok(TailFunction::new(side, TailKind::CdfTail, std::f64::consts::E, move |k| {
                        -(k / dj) * (2.0 * k.ln()).sqrt()
                    }))
                } else if p.alpha_j > 0.0 && side == Side::Right {
                    // deterministic jump size: log Fbar(k) ~ -(k/alpha_j) log k
                    let aj = p.alpha_j;
                    Ok(TailFunction::new(side, TailKind::CdfTail, std::f64::consts::E, move |k| {
                        -(k / aj) * k.ln()
                    }))
                } else {
                    Err(Error::Unsupported(format!(
                        "merton tail asymptote with delta_j = 0 requires upward jumps on the \
                         right wing (alpha_j > 0, side right); got alpha_j={}, side {side:?}",
                        p.alpha_j
                    )))
                }
            }
            ModelSpec::Synthetic(p) => {
                let m = p.clone();
                Ok(TailFunction::new(side, TailKind::Density, 1.0, move |k| {
                    m.log_tail(side, k)
                }))
            }
        }
    }

    /// Mirror image X -> -X where the family is closed under reflection.
    pub fn reflected(&self) -> Result<ModelSpec> {
        match self {
            ModelSpec::Bs(p) => Ok(ModelSpec::Bs(BsParams {
                sigma: p.sigma,
                t: p.t,
                mu: -p.mu,
            })),
            ModelSpec::Nig(p) => Ok(ModelSpec::Nig(NigParams {
                alpha: p.alpha,
                beta: -p.beta,
                mu: -p.mu,
                delta: p.delta,
                t: p.t,
            })),
            ModelSpec::Merton(p) => Ok(ModelSpec::Merton(MertonParams {
                mu: -p.mu,
                sigma: p.sigma,
                lambda: p.lambda,
                alpha_j: -p.alpha_j,
                delta_j: p.delta_j,
                t: p.t,
            })),
            ModelSpec::Synthetic(p) => Ok(ModelSpec::Synthetic(p.reflected()?)),
            ModelSpec::Fmls(_) => Err(Error::Unsupported(
                "fmls reflection leaves the maximally-skewed family".into(),
            )),
        }
    }
}

/// Merton log density: Poisson-weighted Gaussian mixture, truncated when
/// terms fall 45 nats below the running maximum past the modal term.
fn merton_log_density(p: &MertonParams, x: f64) -> Result<f64> {
    if p.is_atomic() {
        return Err(Error::Unsupported(
            "merton with sigma = 0 and delta_j = 0 is purely atomic; no density exists".into(),
        ));
    }
    let lt = p.lambda * p.t;
    let m = p.mu * p.t;
    let base_var = p.sigma * p.sigma * p.t;
    let log_lt = lt.ln();
    let mut log_fact = 0.0; // ln n!
    let mut acc = f64::NEG_INFINITY;
    let mut running_max = f64::NEG_INFINITY;
    let mut below = 0usize;
    for n in 0..20_000 {
        if n > 0 {
            log_fact += (n as f64).ln();
        }
        let var = base_var + n as f64 * p.delta_j * p.delta_j;
        if var == 0.0 {
            // n = 0 atom when sigma = 0: skip; only the continuous part
            // contributes to the density
            continue;
        }
        let lw = -lt + n as f64 * log_lt - log_fact;
        let term = lw + gauss_log_pdf(x, m + n as f64 * p.alpha_j, var);
        acc = logsumexp2(acc, term);
        if term > running_max {
            running_max = term;
            below = 0;
        } else {
            below += 1;
            if below >= 3 && term < running_max - crate::quad::TRUNCATION_NATS {
                return Ok(acc);
            }
        }
    }
    Err(Error::Quadrature(format!(
        "merton density series did not converge at x={x}"
    )))
}

/// Characteristic function of the synthetic model by quadrature over its
/// density (diagnostic use; the density itself is exact).
fn synthetic_char_fn(p: &SyntheticTail, u: f64) -> Complex64 {
    if u == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    // effective support: walk out until the density is negligible
    let mut hi = 2.0;
    while p.log_density(hi) > -60.0 && hi < 1e6 {
        hi *= 1.5;
    }
    let mut lo = -2.0;
    while p.log_density(lo) > -60.0 && lo > -1e6 {
        lo *= 1.5;
    }
    // resolve the oscillation: panels no wider than a quarter period
    let width = (hi - lo).min(std::f64::consts::PI / (2.0 * u.abs()));
    let n = ((hi - lo) / width).ceil() as usize;
    let step = (hi - lo) / n as f64;
    let mut re = 0.0;
    let mut im = 0.0;
    for i in 0..n {
        let a = lo + i as f64 * step;
        let b = a + step;
        let fr = |x: f64| (u * x).cos() * p.log_density(x).exp();
        let fi = |x: f64| (u * x).sin() * p.log_density(x).exp();
        if let Ok((v, _, _)) = crate::quad::integrate(&fr, a, b, 1e-12) {
            re += v;
        }
        if let Ok((v, _, _)) = crate::quad::integrate(&fi, a, b, 1e-12) {
            im += v;
        }
    }
    Complex64::new(re, im)
}
