//! Target distributions: finite mixtures of Normal, Uniform and Beta
//! components with density, CDF, quantile, and the most-interest range.

mod catalog;
mod mir;
mod parse;

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::special::{beta_reg, ln_beta, std_normal_cdf};

pub use catalog::{builtin_case, resolve_target, CaseDefaults, CASE_NAMES};
pub use mir::{most_interest_range, MirResult, MIN_MIR_RESOLUTION};
pub use parse::parse_target;

/// Normal components are truncated at `mean ± NORMAL_TRUNCATION_SDS * sd`
/// wherever a finite working support is needed.
pub const NORMAL_TRUNCATION_SDS: f64 = 12.0;

const WEIGHT_SUM_TOL: f64 = 1e-9;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum Component {
    Normal { mu: f64, sd: f64 },
    Uniform { a: f64, b: f64 },
    /// Beta on `[0, 1]`.
    Beta { alpha: f64, beta: f64 },
}

impl Component {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Component::Normal { mu, sd } => mu.is_finite() && sd.is_finite() && sd > 0.0,
            Component::Uniform { a, b } => a.is_finite() && b.is_finite() && a < b,
            Component::Beta { alpha, beta } => {
                alpha.is_finite() && beta.is_finite() && alpha > 0.0 && beta > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidComponent(self.to_string()))
        }
    }

    /// Finite working support; Normal tails are truncated.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Component::Normal { mu, sd } => (
                mu - NORMAL_TRUNCATION_SDS * sd,
                mu + NORMAL_TRUNCATION_SDS * sd,
            ),
            Component::Uniform { a, b } => (a, b),
            Component::Beta { .. } => (0.0, 1.0),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Component::Normal { mu, .. } => mu,
            Component::Uniform { a, b } => 0.5 * (a + b),
            Component::Beta { alpha, beta } => alpha / (alpha + beta),
        }
    }

    /// Log of the normalizing constant; `ln_pdf = ln_norm + ln_kernel`.
    fn ln_norm(&self) -> f64 {
        match *self {
            Component::Normal { sd, .. } => -sd.ln() - LN_SQRT_2PI,
            Component::Uniform { a, b } => -(b - a).ln(),
            Component::Beta { alpha, beta } => -ln_beta(alpha, beta),
        }
    }

    #[inline]
    fn ln_kernel(&self, x: f64) -> f64 {
        match *self {
            Component::Normal { mu, sd } => {
                let z = (x - mu) / sd;
                -0.5 * z * z
            }
            Component::Uniform { a, b } => {
                if (a..=b).contains(&x) {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            Component::Beta { alpha, beta } => {
                if !(0.0..=1.0).contains(&x) {
                    return f64::NEG_INFINITY;
                }
                xlogy(alpha - 1.0, x) + xlogy(beta - 1.0, 1.0 - x)
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Component::Normal { mu, sd } => std_normal_cdf((x - mu) / sd),
            Component::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
            Component::Beta { alpha, beta } => beta_reg(alpha, beta, x),
        }
    }
}

/// `a * ln(y)` with the convention `0 * ln(0) = 0`.
#[inline]
fn xlogy(a: f64, y: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * y.ln()
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Component::Normal { mu, sd } => write!(f, "N({mu},{sd})"),
            Component::Uniform { a, b } => write!(f, "U({a},{b})"),
            Component::Beta { alpha, beta } => write!(f, "Beta({alpha},{beta})"),
        }
    }
}

/// A validated finite mixture. Immutable after construction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Target {
    components: Vec<Component>,
    weights: Vec<f64>,
    #[serde(skip)]
    ln_offsets: Vec<f64>,
}

impl Target {
    pub fn new(components: Vec<Component>, weights: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("target has no components".into()));
        }
        if components.len() != weights.len() {
            return Err(Error::InvalidArgument(format!(
                "{} components but {} weights",
                components.len(),
                weights.len()
            )));
        }
        for c in &components {
            c.validate()?;
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && **w <= 1.0)) {
            return Err(Error::InvalidArgument(format!("weight {w} not in (0, 1]")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::WeightSum { sum });
        }
        let ln_offsets = components
            .iter()
            .zip(&weights)
            .map(|(c, w)| w.ln() + c.ln_norm())
            .collect();
        Ok(Self {
            components,
            weights,
            ln_offsets,
        })
    }

    pub fn single(component: Component) -> Result<Self> {
        Self::new(vec![component], vec![1.0])
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Natural log of the density; `-inf` outside every support.
    pub fn ln_density(&self, x: f64) -> f64 {
        if self.components.len() == 1 {
            return self.ln_offsets[0] + self.components[0].ln_kernel(x);
        }
        let mut terms = [f64::NEG_INFINITY; 8];
        let mut spill = Vec::new();
        let buf: &mut [f64] = if self.components.len() <= terms.len() {
            &mut terms[..self.components.len()]
        } else {
            spill.resize(self.components.len(), f64::NEG_INFINITY);
            &mut spill
        };
        let mut max = f64::NEG_INFINITY;
        for ((slot, c), off) in buf.iter_mut().zip(&self.components).zip(&self.ln_offsets) {
            *slot = off + c.ln_kernel(x);
            max = max.max(*slot);
        }
        if max == f64::NEG_INFINITY {
            return max;
        }
        max + buf.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
    }

    pub fn density(&self, x: f64) -> f64 {
        self.ln_density(x).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.components
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| w * c.cdf(x))
            .sum::<f64>()
            .clamp(0.0, 1.0)
    }

    /// Hull of the component working supports.
    pub fn working_support(&self) -> (f64, f64) {
        self.components
            .iter()
            .map(Component::support)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| {
                (lo.min(a), hi.max(b))
            })
    }

    /// Inverse CDF by bisection over the working support.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "quantile probability {p} not in (0, 1)"
            )));
        }
        let (mut lo, mut hi) = self.working_support();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Boundaries between adjacent modes: midpoints of consecutive sorted
    /// component means. Empty for a single component.
    pub fn mode_cuts(&self) -> Vec<f64> {
        let mut means: Vec<f64> = self.components.iter().map(Component::mean).collect();
        means.sort_by(f64::total_cmp);
        means.dedup();
        means.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.components.len() == 1 && self.weights[0] == 1.0 {
            return write!(f, "{}", self.components[0]);
        }
        for (i, (c, w)) in self.components.iter().zip(&self.weights).enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            write!(f, "{w}*{c}")?;
        }
        Ok(())
    }
}
