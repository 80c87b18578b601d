//! Statistical functionals `s: P(ℝ) → ℝ` on discrete distributions.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dist::DiscreteDistribution;
use crate::error::{invalid, Error, Result};
use crate::numeric::log_sum_exp;

/// Default strictness margin of the property checkers.
pub const PROPERTY_MARGIN: f64 = 1e-9;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The `f` of an expected utility `∫ f dν`.
#[derive(Clone)]
pub enum Utility {
    /// `x^exponent`.
    Power {
        exponent: u32,
    },
    /// `e^{λx}`.
    Exponential {
        lambda: f64,
    },
    Custom {
        name: String,
        f: ScalarFn,
    },
}

impl Utility {
    pub fn apply(&self, x: f64) -> f64 {
        match self {
            Utility::Power { exponent } => x.powi(*exponent as i32),
            Utility::Exponential { lambda } => (lambda * x).exp(),
            Utility::Custom { f, .. } => f(x),
        }
    }
}

/// The distortion `β: [0,1] → [0,1]` of a distorted mean `∫ β'(τ) F⁻¹(τ) dτ`.
#[derive(Clone)]
pub enum Distortion {
    Identity,
    /// `β(τ) = min(τ/α, 1)`.
    CvarBeta {
        alpha: f64,
    },
    /// Must be nondecreasing with `β(0) = 0` and `β(1) = 1`.
    Custom {
        name: String,
        beta: ScalarFn,
    },
}

impl Distortion {
    pub fn apply(&self, tau: f64) -> f64 {
        match self {
            Distortion::Identity => tau,
            Distortion::CvarBeta { alpha } => (tau / alpha).min(1.0),
            Distortion::Custom { beta, .. } => beta(tau),
        }
    }

    fn known_lipschitz(&self) -> Option<f64> {
        match self {
            Distortion::Identity => Some(1.0),
            Distortion::CvarBeta { alpha } => Some(1.0 / alpha),
            Distortion::Custom { .. } => None,
        }
    }
}

#[derive(Clone)]
pub enum Functional {
    Mean,
    ExpectedUtility {
        utility: Utility,
        lipschitz: Option<f64>,
    },
    DistortedMean {
        distortion: Distortion,
        /// Overrides the catalog constant; required for custom distortions.
        lipschitz: Option<f64>,
    },
    /// `(1/λ) log E[e^{λX}]`.
    ExponentialUtility {
        lambda: f64,
    },
    /// Lower-tail conditional value at risk at level `α`.
    CVaR {
        alpha: f64,
    },
    Quantile {
        tau: f64,
    },
    /// The member `∫ r^order e^{λr} dν` of the Bellman-closed moment family.
    MomentFamily {
        lambda: f64,
        order: u32,
    },
}

/// Outcome of an independence or translation check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PropertyCheck {
    Holds,
    /// `[s(ν₁), s(ν₂), s(lhs), s(rhs)]` where the implication fails.
    Violated {
        values: [f64; 4],
    },
}

impl PropertyCheck {
    pub fn holds(&self) -> bool {
        matches!(self, PropertyCheck::Holds)
    }
}

impl Functional {
    pub fn cvar(alpha: f64) -> Result<Self> {
        let f = Functional::CVaR { alpha };
        f.check()?;
        Ok(f)
    }

    pub fn quantile(tau: f64) -> Result<Self> {
        let f = Functional::Quantile { tau };
        f.check()?;
        Ok(f)
    }

    pub fn exponential(lambda: f64) -> Result<Self> {
        let f = Functional::ExponentialUtility { lambda };
        f.check()?;
        Ok(f)
    }

    pub fn utility(utility: Utility, lipschitz: Option<f64>) -> Result<Self> {
        let f = Functional::ExpectedUtility { utility, lipschitz };
        f.check()?;
        Ok(f)
    }

    pub fn distorted(distortion: Distortion, lipschitz: Option<f64>) -> Result<Self> {
        let f = Functional::DistortedMean {
            distortion,
            lipschitz,
        };
        f.check()?;
        Ok(f)
    }

    /// Validates parameter ranges.
    pub fn check(&self) -> Result<()> {
        let positive = |l: &Option<f64>| match l {
            Some(v) if !(*v > 0.0 && v.is_finite()) => {
                Err(invalid(format!("Lipschitz constant {v} must be positive")))
            }
            _ => Ok(()),
        };
        match self {
            Functional::Mean => Ok(()),
            Functional::ExpectedUtility { lipschitz, utility } => {
                if let Utility::Exponential { lambda } = utility {
                    if !lambda.is_finite() {
                        return Err(invalid("utility λ must be finite"));
                    }
                }
                positive(lipschitz)
            }
            Functional::DistortedMean {
                distortion,
                lipschitz,
            } => {
                if let Distortion::CvarBeta { alpha } = distortion {
                    check_alpha(*alpha)?;
                }
                positive(lipschitz)
            }
            Functional::ExponentialUtility { lambda } => {
                if *lambda == 0.0 || !lambda.is_finite() {
                    Err(invalid(format!(
                        "exponential utility needs finite λ ≠ 0, got {lambda}"
                    )))
                } else {
                    Ok(())
                }
            }
            Functional::CVaR { alpha } => check_alpha(*alpha),
            Functional::Quantile { tau } => {
                if *tau > 0.0 && *tau < 1.0 {
                    Ok(())
                } else {
                    Err(invalid(format!("quantile level {tau} outside (0, 1)")))
                }
            }
            Functional::MomentFamily { lambda, .. } => {
                if lambda.is_finite() {
                    Ok(())
                } else {
                    Err(invalid("moment family λ must be finite"))
                }
            }
        }
    }

    pub fn evaluate(&self, d: &DiscreteDistribution) -> Result<f64> {
        self.check()?;
        Ok(match self {
            Functional::Mean => d.mean(),
            Functional::ExpectedUtility { utility, .. } => d.expect(|x| utility.apply(x)),
            Functional::DistortedMean { distortion, .. } => {
                distorted_mean(d, |t| distortion.apply(t))
            }
            Functional::ExponentialUtility { lambda } => exponential_utility(d, *lambda),
            Functional::CVaR { alpha } => distorted_mean(d, |t| (t / alpha).min(1.0)),
            Functional::Quantile { tau } => d.inverse_cdf(*tau)?,
            Functional::MomentFamily { lambda, order } => {
                d.expect(|x| x.powi(*order as i32) * (lambda * x).exp())
            }
        })
    }

    /// Constant `L` with `|s(a) − s(b)| ≤ L·W1(a, b)` for distributions
    /// supported in an interval of length `support_length`.
    pub fn lipschitz_constant(&self, support_length: f64) -> Result<f64> {
        self.check()?;
        match self {
            Functional::Mean => Ok(1.0),
            Functional::CVaR { alpha } => Ok(1.0 / alpha),
            Functional::DistortedMean {
                distortion,
                lipschitz,
            } => lipschitz.or(distortion.known_lipschitz()).ok_or_else(|| {
                Error::NotLipschitz("custom distortion without a supplied constant".into())
            }),
            Functional::ExpectedUtility { lipschitz, .. } => lipschitz.ok_or_else(|| {
                Error::NotLipschitz("expected utility without a supplied constant".into())
            }),
            Functional::ExponentialUtility { lambda } => {
                if !(support_length >= 0.0 && support_length.is_finite()) {
                    return Err(invalid(format!(
                        "support length {support_length} must be finite and nonnegative"
                    )));
                }
                // |Δ log E e^{λX}| / |λ| ≤ e^{λ·max} W1 / e^{λ·min}
                Ok((lambda.abs() * support_length).exp())
            }
            Functional::Quantile { .. } => Err(Error::NotLipschitz(
                "quantiles are not W1-continuous".into(),
            )),
            Functional::MomentFamily { .. } => Err(Error::NotLipschitz(
                "moment family members are unbounded in W1 on unbounded supports".into(),
            )),
        }
    }

    /// Independence: `s(ν₁) ≥ s(ν₂)` ⇒ `s(λν₁ + (1−λ)ν₃) ≥ s(λν₂ + (1−λ)ν₃)`.
    pub fn check_independence(
        &self,
        nu1: &DiscreteDistribution,
        nu2: &DiscreteDistribution,
        nu3: &DiscreteDistribution,
        lambda: f64,
    ) -> Result<PropertyCheck> {
        self.check_independence_with_margin(nu1, nu2, nu3, lambda, PROPERTY_MARGIN)
    }

    pub fn check_independence_with_margin(
        &self,
        nu1: &DiscreteDistribution,
        nu2: &DiscreteDistribution,
        nu3: &DiscreteDistribution,
        lambda: f64,
        margin: f64,
    ) -> Result<PropertyCheck> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(invalid(format!("mixing weight {lambda} outside [0, 1]")));
        }
        let s1 = self.evaluate(nu1)?;
        let s2 = self.evaluate(nu2)?;
        if s1 < s2 {
            return Ok(PropertyCheck::Holds);
        }
        let w = [lambda, 1.0 - lambda];
        let lhs = self.evaluate(&DiscreteDistribution::mixture(&[nu1, nu3], &w)?)?;
        let rhs = self.evaluate(&DiscreteDistribution::mixture(&[nu2, nu3], &w)?)?;
        Ok(if lhs < rhs - margin {
            PropertyCheck::Violated {
                values: [s1, s2, lhs, rhs],
            }
        } else {
            PropertyCheck::Holds
        })
    }

    /// Translation: `s(ν₁) ≥ s(ν₂)` ⇒ `s(τ_c ν₁) ≥ s(τ_c ν₂)`.
    pub fn check_translation(
        &self,
        nu1: &DiscreteDistribution,
        nu2: &DiscreteDistribution,
        c: f64,
    ) -> Result<PropertyCheck> {
        self.check_translation_with_margin(nu1, nu2, c, PROPERTY_MARGIN)
    }

    pub fn check_translation_with_margin(
        &self,
        nu1: &DiscreteDistribution,
        nu2: &DiscreteDistribution,
        c: f64,
        margin: f64,
    ) -> Result<PropertyCheck> {
        let s1 = self.evaluate(nu1)?;
        let s2 = self.evaluate(nu2)?;
        if s1 < s2 {
            return Ok(PropertyCheck::Holds);
        }
        let lhs = self.evaluate(&nu1.translate(c))?;
        let rhs = self.evaluate(&nu2.translate(c))?;
        Ok(if lhs < rhs - margin {
            PropertyCheck::Violated {
                values: [s1, s2, lhs, rhs],
            }
        } else {
            PropertyCheck::Holds
        })
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("CVaR level {alpha} outside (0, 1]")))
    }
}

/// `Σ_i z_i (β(F_i) − β(F_{i−1}))` over the step CDF.
fn distorted_mean(d: &DiscreteDistribution, beta: impl Fn(f64) -> f64) -> f64 {
    let last = d.len() - 1;
    let mut cum = 0.0;
    let mut prev = beta(0.0);
    let mut total = 0.0;
    for (i, (x, w)) in d.iter().enumerate() {
        cum += w;
        let level = if i == last { 1.0 } else { cum.min(1.0) };
        let b = beta(level);
        total += x * (b - prev);
        prev = b;
    }
    total
}

fn exponential_utility(d: &DiscreteDistribution, lambda: f64) -> f64 {
    if d.len() == 1 {
        return d.min();
    }
    let terms: Vec<f64> = d.iter().map(|(x, w)| w.ln() + lambda * x).collect();
    log_sum_exp(&terms) / lambda
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Functional::Mean => write!(f, "mean"),
            Functional::ExpectedUtility { utility, .. } => match utility {
                Utility::Power { exponent } => write!(f, "utility(x^{exponent})"),
                Utility::Exponential { lambda } => write!(f, "utility(exp({lambda}x))"),
                Utility::Custom { name, .. } => write!(f, "utility({name})"),
            },
            Functional::DistortedMean { distortion, .. } => match distortion {
                Distortion::Identity => write!(f, "distorted(identity)"),
                Distortion::CvarBeta { alpha } => write!(f, "distorted(cvar-beta {alpha})"),
                Distortion::Custom { name, .. } => write!(f, "distorted({name})"),
            },
            Functional::ExponentialUtility { lambda } => write!(f, "exponential({lambda})"),
            Functional::CVaR { alpha } => write!(f, "cvar({alpha})"),
            Functional::Quantile { tau } => write!(f, "quantile({tau})"),
            Functional::MomentFamily { lambda, order } => write!(f, "moment({lambda}, {order})"),
        }
    }
}

impl fmt::Debug for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// JSON form. Custom utilities and distortions have no wire form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FunctionalSpec {
    Mean,
    Cvar {
        alpha: f64,
    },
    Quantile {
        tau: f64,
    },
    Exponential {
        lambda: f64,
    },
    Moment {
        lambda: f64,
        order: u32,
    },
    Utility {
        utility: UtilitySpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lipschitz: Option<f64>,
    },
    Distorted {
        distortion: DistortionSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lipschitz: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum UtilitySpec {
    Power { exponent: u32 },
    Exponential { lambda: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistortionSpec {
    Identity,
    CvarBeta { alpha: f64 },
}

impl TryFrom<FunctionalSpec> for Functional {
    type Error = Error;

    fn try_from(spec: FunctionalSpec) -> Result<Self> {
        let f = match spec {
            FunctionalSpec::Mean => Functional::Mean,
            FunctionalSpec::Cvar { alpha } => Functional::CVaR { alpha },
            FunctionalSpec::Quantile { tau } => Functional::Quantile { tau },
            FunctionalSpec::Exponential { lambda } => Functional::ExponentialUtility { lambda },
            FunctionalSpec::Moment { lambda, order } => Functional::MomentFamily { lambda, order },
            FunctionalSpec::Utility { utility, lipschitz } => Functional::ExpectedUtility {
                utility: match utility {
                    UtilitySpec::Power { exponent } => Utility::Power { exponent },
                    UtilitySpec::Exponential { lambda } => Utility::Exponential { lambda },
                },
                lipschitz,
            },
            FunctionalSpec::Distorted {
                distortion,
                lipschitz,
            } => Functional::DistortedMean {
                distortion: match distortion {
                    DistortionSpec::Identity => Distortion::Identity,
                    DistortionSpec::CvarBeta { alpha } => Distortion::CvarBeta { alpha },
                },
                lipschitz,
            },
        };
        f.check()?;
        Ok(f)
    }
}

impl TryFrom<&Functional> for FunctionalSpec {
    type Error = Error;

    fn try_from(f: &Functional) -> Result<Self> {
        let custom = || invalid(format!("{f} has no JSON form"));
        Ok(match f {
            Functional::Mean => FunctionalSpec::Mean,
            Functional::CVaR { alpha } => FunctionalSpec::Cvar { alpha: *alpha },
            Functional::Quantile { tau } => FunctionalSpec::Quantile { tau: *tau },
            Functional::ExponentialUtility { lambda } => {
                FunctionalSpec::Exponential { lambda: *lambda }
            }
            Functional::MomentFamily { lambda, order } => FunctionalSpec::Moment {
                lambda: *lambda,
                order: *order,
            },
            Functional::ExpectedUtility { utility, lipschitz } => FunctionalSpec::Utility {
                utility: match utility {
                    Utility::Power { exponent } => UtilitySpec::Power {
                        exponent: *exponent,
                    },
                    Utility::Exponential { lambda } => UtilitySpec::Exponential { lambda: *lambda },
                    Utility::Custom { .. } => return Err(custom()),
                },
                lipschitz: *lipschitz,
            },
            Functional::DistortedMean {
                distortion,
                lipschitz,
            } => FunctionalSpec::Distorted {
                distortion: match distortion {
                    Distortion::Identity => DistortionSpec::Identity,
                    Distortion::CvarBeta { alpha } => DistortionSpec::CvarBeta { alpha: *alpha },
                    Distortion::Custom { .. } => return Err(custom()),
                },
                lipschitz: *lipschitz,
            },
        })
    }
}

impl Functional {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: FunctionalSpec = serde_json::from_str(text)?;
        spec.try_into()
    }

    pub fn to_json(&self) -> Result<String> {
        let spec = FunctionalSpec::try_from(self)?;
        Ok(serde_json::to_string(&spec)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(atoms: &[f64], weights: &[f64]) -> DiscreteDistribution {
        DiscreteDistribution::new(atoms.to_vec(), weights.to_vec()).unwrap()
    }

    fn binomial2() -> DiscreteDistribution {
        d(&[0.0, 1.0, 2.0], &[0.25, 0.5, 0.25])
    }

    /// Oracle: average of the lowest α fraction of mass, taken by slicing
    /// sorted atoms.
    fn tail_average(dist: &DiscreteDistribution, alpha: f64) -> f64 {
        let mut remaining = alpha;
        let mut total = 0.0;
        for (x, w) in dist.iter() {
            let take = w.min(remaining);
            total += take * x;
            remaining -= take;
            if remaining <= 0.0 {
                break;
            }
        }
        total / alpha
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(Functional::Mean.evaluate(&binomial2()).unwrap(), 1.0);
        let cvar = Functional::cvar(0.5)
            .unwrap()
            .evaluate(&binomial2())
            .unwrap();
        assert!((cvar - tail_average(&binomial2(), 0.5)).abs() < 1e-15);
        assert!((cvar - 0.5).abs() < 1e-15);

        let coin = DiscreteDistribution::bernoulli(0.5).unwrap();
        let direct = ((1.0 + 1f64.exp()) / 2.0).ln();
        let u = Functional::exponential(1.0)
            .unwrap()
            .evaluate(&coin)
            .unwrap();
        assert!((u - direct).abs() < 1e-15);
        assert!((u - 0.620115).abs() < 1e-6);

        for lambda in [-3.0, 0.5, 40.0] {
            let f = Functional::exponential(lambda).unwrap();
            assert_eq!(f.evaluate(&DiscreteDistribution::dirac(2.5)).unwrap(), 2.5);
        }
    }

    #[test]
    fn cvar_matches_tail_average_on_irregular_weights() {
        let x = d(&[-1.0, 0.2, 0.7, 3.0], &[0.1, 0.35, 0.3, 0.25]);
        for alpha in [0.05, 0.1, 0.3, 0.45, 0.8, 1.0] {
            let v = Functional::cvar(alpha).unwrap().evaluate(&x).unwrap();
            assert!((v - tail_average(&x, alpha)).abs() < 1e-12, "alpha={alpha}");
        }
    }

    #[test]
    fn exponential_utility_survives_large_lambda() {
        let x = d(&[0.0, 500.0], &[0.5, 0.5]);
        let v = Functional::exponential(10.0).unwrap().evaluate(&x).unwrap();
        assert!((v - (500.0 - 2f64.ln() / 10.0)).abs() < 1e-9);
        let v = Functional::exponential(-10.0)
            .unwrap()
            .evaluate(&x)
            .unwrap();
        assert!((v - 2f64.ln() / 10.0).abs() < 1e-9);
    }

    #[test]
    fn parameter_errors() {
        assert!(Functional::cvar(0.0).is_err());
        assert!(Functional::cvar(1.5).is_err());
        assert!(Functional::quantile(1.0).is_err());
        assert!(Functional::exponential(0.0).is_err());
        let bad = Functional::Quantile { tau: -0.1 };
        assert!(bad.evaluate(&binomial2()).is_err());
        assert!(Functional::utility(Utility::Power { exponent: 2 }, Some(-1.0)).is_err());
    }

    #[test]
    fn lipschitz_constants() {
        assert_eq!(
            Functional::cvar(0.1)
                .unwrap()
                .lipschitz_constant(1.0)
                .unwrap(),
            10.0
        );
        assert_eq!(
            Functional::cvar(0.25)
                .unwrap()
                .lipschitz_constant(1.0)
                .unwrap(),
            4.0
        );
        assert_eq!(Functional::Mean.lipschitz_constant(7.0).unwrap(), 1.0);
        let e = Functional::exponential(1.0).unwrap();
        let l1 = e.lipschitz_constant(1.0).unwrap();
        let l2 = e.lipschitz_constant(2.0).unwrap();
        assert!((l1 - 1f64.exp()).abs() < 1e-15);
        assert!(
            (l2 / l1 - 1f64.exp()).abs() < 1e-12,
            "exponential growth in Δ"
        );
        assert!(matches!(
            Functional::quantile(0.5).unwrap().lipschitz_constant(1.0),
            Err(Error::NotLipschitz(_))
        ));
        let custom = Functional::distorted(
            Distortion::Custom {
                name: "sq".into(),
                beta: Arc::new(|t| t * t),
            },
            None,
        )
        .unwrap();
        assert!(custom.lipschitz_constant(1.0).is_err());
    }

    #[test]
    fn identity_distortion_is_the_mean() {
        let x = d(&[-2.0, 0.5, 4.0], &[0.3, 0.3, 0.4]);
        let dm = Functional::distorted(Distortion::Identity, None).unwrap();
        assert!((dm.evaluate(&x).unwrap() - x.mean()).abs() < 1e-15);
        let one = Functional::cvar(1.0).unwrap().evaluate(&x).unwrap();
        assert!((one - x.mean()).abs() < 1e-15);
    }

    #[test]
    fn quantile_is_inverse_cdf() {
        let q = Functional::quantile(0.5).unwrap();
        assert_eq!(q.evaluate(&binomial2()).unwrap(), 1.0);
        assert_eq!(
            q.evaluate(&DiscreteDistribution::bernoulli(0.5).unwrap())
                .unwrap(),
            0.0
        );
    }

    #[test]
    fn independence_examples() {
        let nu1 = d(&[0.0, 4.0], &[0.5, 0.5]);
        let nu2 = DiscreteDistribution::dirac(1.5);
        let nu3 = DiscreteDistribution::dirac(0.0);
        let mean = Functional::Mean;
        assert!(mean
            .check_independence(&nu1, &nu2, &nu3, 0.5)
            .unwrap()
            .holds());
        // CVaR(0.5): 1 ≥ 0, but mixing with δ₁₀ gives 1 < 1.5
        let cvar = Functional::cvar(0.5).unwrap();
        let nu1 = DiscreteDistribution::dirac(1.0);
        let nu2 = d(&[0.0, 3.0], &[0.5, 0.5]);
        let nu3 = DiscreteDistribution::dirac(10.0);
        match cvar.check_independence(&nu1, &nu2, &nu3, 0.5).unwrap() {
            PropertyCheck::Violated { values } => {
                assert_eq!(values, [1.0, 0.0, 1.0, 1.5]);
            }
            PropertyCheck::Holds => panic!("expected a violation for CVaR(0.5)"),
        }
        assert!(cvar
            .check_independence(&nu2, &nu1, &nu3, 0.5)
            .unwrap()
            .holds());
        assert!(cvar.check_independence(&nu1, &nu2, &nu3, 1.5).is_err());
    }

    #[test]
    fn translation_examples() {
        let cube = Functional::utility(Utility::Power { exponent: 3 }, None).unwrap();
        let nu1 = DiscreteDistribution::dirac(0.0);
        let nu2 = d(&[-1.0, 1.0], &[0.5, 0.5]);
        assert!(!cube.check_translation(&nu1, &nu2, 1.0).unwrap().holds());
        assert!(cube.check_translation(&nu1, &nu2, 0.0).unwrap().holds());
        let e = Functional::exponential(-1.0).unwrap();
        assert!(e.check_translation(&nu2, &nu1, 5.0).unwrap().holds());
        assert!(e.check_translation(&nu1, &nu2, 5.0).unwrap().holds());
    }

    #[test]
    fn json_forms() {
        let cases = [
            (r#"{"kind":"mean"}"#, "mean"),
            (r#"{"kind":"cvar","alpha":0.1}"#, "cvar(0.1)"),
            (r#"{"kind":"quantile","tau":0.5}"#, "quantile(0.5)"),
            (r#"{"kind":"exponential","lambda":-1.0}"#, "exponential(-1)"),
            (
                r#"{"kind":"moment","lambda":0.5,"order":2}"#,
                "moment(0.5, 2)",
            ),
            (
                r#"{"kind":"utility","utility":{"name":"power","exponent":3}}"#,
                "utility(x^3)",
            ),
            (
                r#"{"kind":"distorted","distortion":{"name":"cvar-beta","alpha":0.25}}"#,
                "distorted(cvar-beta 0.25)",
            ),
        ];
        for (text, shown) in cases {
            let f = Functional::from_json(text).unwrap();
            assert_eq!(f.to_string(), shown);
            assert_eq!(f.to_json().unwrap(), text);
        }
        assert!(Functional::from_json(r#"{"kind":"cvar","alpha":2}"#).is_err());
        assert!(Functional::from_json(r#"{"kind":"nope"}"#).is_err());
        let custom = Functional::utility(
            Utility::Custom {
                name: "id".into(),
                f: Arc::new(|x| x),
            },
            Some(1.0),
        )
        .unwrap();
        assert!(custom.to_json().is_err());
    }
}
