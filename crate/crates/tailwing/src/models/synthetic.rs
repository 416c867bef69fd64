//! Synthetic tail model: a two-sided density whose log-tails are specified
//! in closed form, so deep-wing checks can run in exact log arithmetic at
//! strikes where Fourier pricing of the parametric models underflows.
//!
//! Per side (|x| >= 1):
//!
//!   log f(x) = log_scale + power * log|x| + linear * x - |stretch| * |x|^stretch_exp
//!
//! and on |x| < 1 the two sides are bridged by a C^1 quadratic spline (one
//! quadratic per half, matching value and slope at +-1 and at 0). The
//! normalization constant is computed once by quadrature at construction.

use crate::error::{Error, Result};
use crate::math::logsumexp2;
use crate::quad;
use crate::wings::{MomentCondition, Side};

/// One side of the synthetic tail; `stretch <= 0` scales the stretched
/// exponential term -|stretch| |x|^stretch_exp (zero disables it).
#[derive(Debug, Clone, Copy, serde::Deserialize, serde::Serialize)]
pub struct SyntheticSide {
    pub log_scale: f64,
    pub power: f64,
    pub linear: f64,
    #[serde(default)]
    pub stretch: f64,
    #[serde(default = "default_stretch_exp")]
    pub stretch_exp: f64,
}

fn default_stretch_exp() -> f64 {
    1.0
}

impl SyntheticSide {
    /// Effective linear decay coefficient in the exponent after folding a
    /// stretch term with exponent exactly 1 into the linear part.
    fn linear_eff(&self, side: Side) -> f64 {
        let fold = if self.stretch_exp == 1.0 { self.stretch.abs() } else { 0.0 };
        match side {
            Side::Right => self.linear - fold,
            Side::Left => self.linear + fold,
        }
    }

    /// True when the stretched-exponential term dominates any exponential.
    fn superexponential(&self) -> bool {
        self.stretch != 0.0 && self.stretch_exp > 1.0
    }

    fn validate(&self, side: Side) -> Result<()> {
        for (name, v) in [
            ("log_scale", self.log_scale),
            ("power", self.power),
            ("linear", self.linear),
            ("stretch", self.stretch),
            ("stretch_exp", self.stretch_exp),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "synthetic {side:?} side: {name} must be finite, got {v}"
                )));
            }
        }
        if self.stretch > 0.0 {
            return Err(Error::InvalidInput(format!(
                "synthetic {side:?} side: stretch must be <= 0, got {}",
                self.stretch
            )));
        }
        if self.stretch_exp <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "synthetic {side:?} side: stretch_exp must be > 0, got {}",
                self.stretch_exp
            )));
        }
        let decays = self.superexponential()
            || match side {
                Side::Right => self.linear_eff(side) < 0.0,
                Side::Left => self.linear_eff(side) > 0.0,
            };
        if !decays {
            return Err(Error::InvalidInput(format!(
                "synthetic {side:?} side does not decay: linear={}, stretch={}, stretch_exp={}",
                self.linear, self.stretch, self.stretch_exp
            )));
        }
        Ok(())
    }
}

/// Quadratic C^1 bridge over [-1, 1]: a + b x + c_{l,r} x^2 per half.
#[derive(Debug, Clone, Copy)]
struct Bridge {
    a: f64,
    b: f64,
    c_right: f64,
    c_left: f64,
}

#[derive(Debug, Clone)]
pub struct SyntheticTail {
    pub right: SyntheticSide,
    pub left: SyntheticSide,
    bridge: Bridge,
    log_norm: f64,
    mean: f64,
}

impl SyntheticTail {
    pub fn new(right: SyntheticSide, left: SyntheticSide) -> Result<Self> {
        right.validate(Side::Right)?;
        left.validate(Side::Left)?;

        // tail values and slopes at the bridge boundaries
        let v1 = right.log_scale + right.linear - right.stretch.abs();
        let d1 = right.power + right.linear - right.stretch.abs() * right.stretch_exp;
        let v0 = left.log_scale - left.linear - left.stretch.abs();
        let d0 = -left.power + left.linear + left.stretch.abs() * left.stretch_exp;

        let e1 = 2.0 * v1 - d1; // = 2a + b
        let e2 = 2.0 * v0 + d0; // = 2a - b
        let a = 0.25 * (e1 + e2);
        let b = 0.5 * (e1 - e2);
        let bridge = Bridge {
            a,
            b,
            c_right: v1 - a - b,
            c_left: v0 - a + b,
        };

        let mut model = SyntheticTail {
            right,
            left,
            bridge,
            log_norm: 0.0,
            mean: 0.0,
        };
        let log_norm = model.log_mass()?;
        model.log_norm = log_norm;
        model.mean = model.compute_mean()?;
        Ok(model)
    }

    fn log_density_unnorm(&self, x: f64) -> f64 {
        if x >= 1.0 {
            let s = &self.right;
            s.log_scale + s.power * x.ln() + s.linear * x - s.stretch.abs() * x.powf(s.stretch_exp)
        } else if x <= -1.0 {
            let s = &self.left;
            let y = -x;
            s.log_scale + s.power * y.ln() + s.linear * x - s.stretch.abs() * y.powf(s.stretch_exp)
        } else if x >= 0.0 {
            self.bridge.a + self.bridge.b * x + self.bridge.c_right * x * x
        } else {
            self.bridge.a + self.bridge.b * x + self.bridge.c_left * x * x
        }
    }

    fn log_mass(&self) -> Result<f64> {
        let mid = quad::log_integrate(&|x| self.log_density_unnorm(x), -1.0, 1.0, 1e-12)?;
        let right = quad::log_integrate_to_inf(&|x| self.log_density_unnorm(x), 1.0, 1e-12)?;
        let left = quad::log_integrate_to_inf(&|y| self.log_density_unnorm(-y), 1.0, 1e-12)?;
        Ok(logsumexp2(mid.log_value, logsumexp2(right.log_value, left.log_value)))
    }

    fn compute_mean(&self) -> Result<f64> {
        // E X = int_0^inf x f(x) dx - int_0^inf y f(-y) dy
        let pos = quad::log_integrate_to_inf(
            &|x| if x > 0.0 { x.ln() + self.log_density(x) } else { f64::NEG_INFINITY },
            0.0,
            1e-11,
        )?;
        let neg = quad::log_integrate_to_inf(
            &|y| if y > 0.0 { y.ln() + self.log_density(-y) } else { f64::NEG_INFINITY },
            0.0,
            1e-11,
        )?;
        Ok(pos.log_value.exp() - neg.log_value.exp())
    }

    /// Normalized log density.
    pub fn log_density(&self, x: f64) -> f64 {
        self.log_density_unnorm(x) - self.log_norm
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Closed-form log tail of the normalized density on the requested
    /// side, as a function of the wing coordinate k >= 1.
    pub fn log_tail(&self, side: Side, k: f64) -> f64 {
        match side {
            Side::Right => self.log_density(k),
            Side::Left => self.log_density(-k),
        }
    }

    /// sup{p : E e^(pX) < inf} and sup{q : E e^(-qX) < inf} read off the
    /// tail exponents.
    pub fn critical_moments(&self) -> MomentCondition {
        let p_plus = if self.right.superexponential() {
            f64::INFINITY
        } else {
            -self.right.linear_eff(Side::Right)
        };
        let q_minus = if self.left.superexponential() {
            f64::INFINITY
        } else {
            self.left.linear_eff(Side::Left)
        };
        MomentCondition { p_plus, q_minus }
    }

    /// Numeric log mgf by quadrature; z must lie strictly inside the
    /// finiteness interval.
    pub fn log_mgf(&self, z: f64) -> Result<f64> {
        let cm = self.critical_moments();
        if !(z > -cm.q_minus && z < cm.p_plus) {
            return Err(Error::MgfDomain(format!(
                "synthetic mgf finite only for z in ({}, {}), got {z}",
                -cm.q_minus, cm.p_plus
            )));
        }
        let mid = quad::log_integrate(&|x| z * x + self.log_density(x), -1.0, 1.0, 1e-11)?;
        let right = quad::log_integrate_to_inf(&|x| z * x + self.log_density(x), 1.0, 1e-11)?;
        let left = quad::log_integrate_to_inf(&|y| -z * y + self.log_density(-y), 1.0, 1e-11)?;
        Ok(logsumexp2(mid.log_value, logsumexp2(right.log_value, left.log_value)))
    }

    /// Mirror image (X -> -X); stays in the family with the sides swapped.
    pub fn reflected(&self) -> Result<SyntheticTail> {
        let flip = |s: &SyntheticSide| SyntheticSide {
            log_scale: s.log_scale,
            power: s.power,
            linear: -s.linear,
            stretch: s.stretch,
            stretch_exp: s.stretch_exp,
        };
        SyntheticTail::new(flip(&self.left), flip(&self.right))
    }
}
