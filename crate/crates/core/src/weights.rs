//! Regularly varying weight laws.
//!
//! Every law has a survival function of the form `P(W > w) = w^-beta L(w)`
//! with `L` slowly varying. Three parametric families are provided:
//!
//! | family           | survival for `w >= lower`          | lower |
//! |------------------|------------------------------------|-------|
//! | `pareto`         | `(w / xmin)^-beta`                 | xmin  |
//! | `paretolog`      | `w^-beta (1 + ln w)^kappa`, kappa <= 0 | 1 |
//! | `invuniform`     | `w^-beta` (the law of `U^(-1/beta)`) | 1   |
//!
//! # Text form
//!
//! Config files describe a law as `family(key=value, ...)`:
//!
//! ```text
//! weight = pareto(beta=2.5, xmin=1)
//! weight = pareto(beta=2.5)            # xmin defaults to 1
//! weight = paretolog(beta=2, kappa=-1)
//! weight = invuniform(beta=3)
//! ```
//!
//! Keys may appear in any order; whitespace is ignored; unknown families or
//! keys are rejected. [`WeightDistribution`]'s `Display` writes the same
//! form back.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{bisect_threshold, integrate, open_uniform};

/// Relative tolerance of the bisection used for quantiles without a closed
/// form.
pub const QUANTILE_REL_TOL: f64 = 1e-10;
/// Iteration cap of that bisection.
pub const QUANTILE_MAX_ITER: usize = 200;
/// Relative tolerance of moment quadrature.
pub const MOMENT_REL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum WeightDistribution {
    Pareto {
        beta: f64,
        xmin: f64,
    },
    #[serde(rename = "paretolog")]
    ParetoLog {
        beta: f64,
        kappa: f64,
    },
    #[serde(rename = "invuniform")]
    InverseUniform {
        beta: f64,
    },
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta > 0.0 {
        Ok(())
    } else {
        Err(Error::param("beta", format!("must be a positive finite number, got {beta}")))
    }
}

impl WeightDistribution {
    pub fn pareto(beta: f64, xmin: f64) -> Result<Self> {
        check_beta(beta)?;
        if !(xmin.is_finite() && xmin > 0.0) {
            return Err(Error::param("xmin", format!("must be positive, got {xmin}")));
        }
        Ok(Self::Pareto { beta, xmin })
    }

    pub fn pareto_log(beta: f64, kappa: f64) -> Result<Self> {
        check_beta(beta)?;
        if !(kappa.is_finite() && kappa <= 0.0) {
            return Err(Error::param("kappa", format!("must be <= 0, got {kappa}")));
        }
        Ok(Self::ParetoLog { beta, kappa })
    }

    pub fn inverse_uniform(beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(Self::InverseUniform { beta })
    }

    /// Re-checks the parameter constraints (useful after deserialization).
    pub fn validated(self) -> Result<Self> {
        match self {
            Self::Pareto { beta, xmin } => Self::pareto(beta, xmin),
            Self::ParetoLog { beta, kappa } => Self::pareto_log(beta, kappa),
            Self::InverseUniform { beta } => Self::inverse_uniform(beta),
        }
    }

    /// Tail exponent `beta`.
    pub fn beta(&self) -> f64 {
        match *self {
            Self::Pareto { beta, .. } | Self::ParetoLog { beta, .. } | Self::InverseUniform { beta } => beta,
        }
    }

    /// Lower endpoint of the support.
    pub fn lower(&self) -> f64 {
        match *self {
            Self::Pareto { xmin, .. } => xmin,
            _ => 1.0,
        }
    }

    /// `P(W > w)`.
    pub fn survival(&self, w: f64) -> f64 {
        let lower = self.lower();
        if w.is_nan() || w < lower {
            return 1.0;
        }
        if w.is_infinite() {
            return 0.0;
        }
        match *self {
            Self::Pareto { beta, xmin } => (w / xmin).powf(-beta),
            Self::ParetoLog { beta, kappa } => w.powf(-beta) * (1.0 + w.ln()).powf(kappa),
            Self::InverseUniform { beta } => w.powf(-beta),
        }
    }

    pub fn cdf(&self, w: f64) -> f64 {
        1.0 - self.survival(w)
    }

    /// Inverse of the survival function: the weight `w` with
    /// `P(W > w) = u` for `u` in (0, 1].
    pub fn from_uniform(&self, u: f64) -> f64 {
        match *self {
            Self::Pareto { beta, xmin } => xmin * inv_power(u, beta),
            Self::InverseUniform { beta } => inv_power(u, beta),
            Self::ParetoLog { beta, kappa } => pareto_log_inverse(beta, kappa, u),
        }
    }

    /// Inverse-CDF draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.from_uniform(open_uniform(rng))
    }

    /// Draw conditioned on `W >= floor`. Exact for the pure power laws and
    /// obtained by inverting the renormalised survival function otherwise.
    pub fn sample_at_least<R: Rng + ?Sized>(&self, rng: &mut R, floor: f64) -> f64 {
        let s = self.survival(floor);
        if floor <= self.lower() || s >= 1.0 {
            return self.sample(rng);
        }
        self.from_uniform(s * open_uniform(rng))
    }

    /// `E[W^s]`; `f64::INFINITY` when `s >= beta`.
    pub fn moment(&self, s: f64) -> f64 {
        assert!(s >= 0.0, "moment order must be nonnegative");
        if s == 0.0 {
            return 1.0;
        }
        if s >= self.beta() {
            return f64::INFINITY;
        }
        match *self {
            Self::Pareto { beta, xmin } => beta / (beta - s) * xmin.powf(s),
            Self::InverseUniform { beta } => beta / (beta - s),
            Self::ParetoLog { .. } => self.moment_by_quadrature(s),
        }
    }

    /// `E[W^s] = lower^s + s * int_lower^inf w^(s-1) P(W > w) dw`, evaluated
    /// after the substitution `w = lower / (1 - u)` on `u in (0, 1)`.
    pub fn moment_by_quadrature(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 1.0;
        }
        if s >= self.beta() {
            return f64::INFINITY;
        }
        let lower = self.lower();
        let integrand = |u: f64| {
            let one_minus = 1.0 - u;
            let w = lower / one_minus;
            let jac = lower / (one_minus * one_minus);
            s * w.powf(s - 1.0) * self.survival(w) * jac
        };
        let tail = integrate(integrand, 0.0, 1.0, 0.0, MOMENT_REL_TOL, 20_000);
        lower.powf(s) + tail.value
    }

    /// Quantile `q(t) = inf{x >= 0 : P(W^p <= x) >= 1 - 1/t}`.
    ///
    /// `q(1) = 0` by definition. Pareto uses `xmin^p t^(p/beta)`; the other
    /// families bisect on the survival function.
    pub fn quantile_q(&self, p: f64, t: f64) -> Result<f64> {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::param("p", format!("must be positive, got {p}")));
        }
        if !(t >= 1.0) {
            return Err(Error::param("t", format!("quantile level must be >= 1, got {t}")));
        }
        if t == 1.0 {
            return Ok(0.0);
        }
        if t.is_infinite() {
            return Ok(f64::INFINITY);
        }
        match *self {
            Self::Pareto { beta, xmin } => Ok(xmin.powf(p) * t.powf(p / beta)),
            _ => Ok(self.quantile_q_bisect(p, t)),
        }
    }

    /// Bisection path of [`Self::quantile_q`], exposed so the closed forms
    /// can be checked against it.
    pub fn quantile_q_bisect(&self, p: f64, t: f64) -> f64 {
        let level = 1.0 / t;
        let hit = |x: f64| self.survival(x.powf(1.0 / p)) <= level;
        let lo = self.lower().powf(p);
        let mut hi = lo * t.max(2.0).powf(2.0 * p / self.beta());
        while !hit(hi) {
            hi *= 2.0;
        }
        bisect_threshold(hit, lo, hi, QUANTILE_REL_TOL, QUANTILE_MAX_ITER)
    }

    /// Weight quantile at lower-tail probability `level` (e.g. 0.999).
    pub fn weight_quantile(&self, level: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&level) {
            return Err(Error::param("level", format!("must lie in [0, 1), got {level}")));
        }
        self.quantile_q(1.0, 1.0 / (1.0 - level)).map(|q| q.max(self.lower()))
    }
}

/// `u^(-1/beta)` with cheap paths for the exponents that show up most.
#[inline]
fn inv_power(u: f64, beta: f64) -> f64 {
    if beta == 1.0 {
        1.0 / u
    } else if beta == 2.0 {
        1.0 / u.sqrt()
    } else {
        (-u.ln() / beta).exp()
    }
}

/// Solves `beta t - kappa ln(1 + t) = -ln u` for `t = ln w`. The left side
/// is increasing and concave in `t`, so Newton from `t = 0` climbs
/// monotonically to the root.
fn pareto_log_inverse(beta: f64, kappa: f64, u: f64) -> f64 {
    let target = -u.ln();
    if target <= 0.0 {
        return 1.0;
    }
    if kappa == 0.0 {
        return (target / beta).exp();
    }
    let mut t = 0.0f64;
    for _ in 0..100 {
        let h = beta * t - kappa * (1.0 + t).ln() - target;
        let dh = beta - kappa / (1.0 + t);
        let step = h / dh;
        t -= step;
        if step.abs() <= 1e-15 * t.abs().max(1.0) {
            break;
        }
    }
    t.exp()
}

impl fmt::Display for WeightDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Pareto { beta, xmin } => write!(f, "pareto(beta={beta}, xmin={xmin})"),
            Self::ParetoLog { beta, kappa } => write!(f, "paretolog(beta={beta}, kappa={kappa})"),
            Self::InverseUniform { beta } => write!(f, "invuniform(beta={beta})"),
        }
    }
}

impl FromStr for WeightDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |reason: String| Error::param("weight", reason);
        let open = s.find('(').ok_or_else(|| bad(format!("expected family(args), got `{s}`")))?;
        if !s.ends_with(')') {
            return Err(bad(format!("missing `)` in `{s}`")));
        }
        let family = s[..open].trim().to_ascii_lowercase();
        let body = &s[open + 1..s.len() - 1];
        let mut beta = None;
        let mut xmin = None;
        let mut kappa = None;
        for part in body.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| bad(format!("expected key=value, got `{part}`")))?;
            let v: f64 = v.trim().parse().map_err(|_| bad(format!("`{}` is not a number", v.trim())))?;
            let slot = match k.trim() {
                "beta" => &mut beta,
                "xmin" => &mut xmin,
                "kappa" => &mut kappa,
                other => return Err(bad(format!("unknown key `{other}`"))),
            };
            if slot.replace(v).is_some() {
                return Err(bad(format!("duplicate key `{}`", k.trim())));
            }
        }
        let beta = beta.ok_or_else(|| bad("missing beta".into()))?;
        let reject = |key: &str| bad(format!("`{key}` is not a parameter of {family}"));
        match family.as_str() {
            "pareto" => {
                if kappa.is_some() {
                    return Err(reject("kappa"));
                }
                Self::pareto(beta, xmin.unwrap_or(1.0))
            }
            "paretolog" => {
                if xmin.is_some() {
                    return Err(reject("xmin"));
                }
                Self::pareto_log(beta, kappa.ok_or_else(|| bad("missing kappa".into()))?)
            }
            "invuniform" => {
                if xmin.is_some() {
                    return Err(reject("xmin"));
                }
                if kappa.is_some() {
                    return Err(reject("kappa"));
                }
                Self::inverse_uniform(beta)
            }
            other => Err(bad(format!("unknown family `{other}`"))),
        }
    }
}
