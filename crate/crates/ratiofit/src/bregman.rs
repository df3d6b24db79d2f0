//! Bregman loss families for density ratio matching.
//!
//! Each family is generated by a convex function f on the model's output
//! domain. The pointwise divergence from the true ratio t* to a model value t
//! is f(t*) - f(t) - f'(t)(t* - t); integrating it against the denominator
//! density and dropping the r-independent constant leaves the risk
//!
//! ```text
//! E_de[ f'(r)r - f(r) ] - E_nu[ f'(r) ].
//! ```
//!
//! The correction mechanism needs the split f'(t) = C*(f'(t)t - f(t)) + f~(t)
//! with l1(t) := f'(t)t - f(t) non-negative and l2(t) := -f~(t) bounded below.
//! The risk then reads (E_de - C*E_nu)[l1(r)] + E_nu[l2(r)], and the first
//! aggregate is non-negative in population whenever C < 1/sup r*.
//!
//! | Family | f(t) | l1(t) | l2(t) | domain |
//! |--------|------|-------|-------|--------|
//! | LSIF   | (t-1)^2/2 | t^2/2 | (C/2)t^2 - t | [0, inf) |
//! | UKL    | t ln t - t | t | C t - ln t | (0, inf) |
//! | BKL    | t ln t - (1+t) ln(1+t) | ln(1+t) | -ln(t/(1+t)) + C ln(1+t) | (0, inf) |
//! | PULog  | ln(1-t) + Ct(ln t - ln(1-t)) | -ln(1-t) | -C ln t | (eps, 1-eps) |
//!
//! The l1/l2 forms above differ from the raw f'(t)t - f(t) by additive
//! constants for LSIF (raw (t^2-1)/2, shifted by +1/2 so l1 >= 0 holds on the
//! whole domain). Constants do not change minimizers or gradients; the exact
//! unshifted convex function is available through [`LossSpec::f_value`] /
//! [`LossSpec::f_deriv`] for population-risk computations.
//!
//! For PULog the model estimates C*r* rather than r*, and the tabulated f is
//! not consistent with the l1/l2 pair by a mere constant; only the empirical
//! l1/l2 risk is supported for that family (see [`crate::risk`]).

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default clamp for the PULog model range (eps, 1-eps).
pub const DEFAULT_PU_EPSILON: f64 = 1e-6;

/// The four built-in loss families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossFamily {
    Lsif,
    Ukl,
    Bkl,
    PuLog,
}

impl LossFamily {
    pub fn name(self) -> &'static str {
        match self {
            LossFamily::Lsif => "lsif",
            LossFamily::Ukl => "ukl",
            LossFamily::Bkl => "bkl",
            LossFamily::PuLog => "pulog",
        }
    }
}

impl std::str::FromStr for LossFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lsif" => Ok(LossFamily::Lsif),
            "ukl" => Ok(LossFamily::Ukl),
            "bkl" => Ok(LossFamily::Bkl),
            "pulog" | "pu" => Ok(LossFamily::PuLog),
            other => Err(Error::Parse(format!("unknown loss family {other:?}"))),
        }
    }
}

/// The t-interval a family's losses are defined on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossDomain {
    pub lower: f64,
    pub upper: f64,
    /// Whether the lower endpoint itself is admissible (LSIF allows t = 0).
    pub closed_lower: bool,
}

impl LossDomain {
    pub fn contains(&self, t: f64) -> bool {
        if !t.is_finite() {
            return false;
        }
        let above = if self.closed_lower { t >= self.lower } else { t > self.lower };
        above && t < self.upper
    }
}

/// A loss family together with the correction constant C.
///
/// C stands in for 1/sup r*; any 0 < C < 1/sup r* justifies the non-negative
/// correction, and since sup r* >= 1 always holds, valid values satisfy
/// 0 < C <= 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub family: LossFamily,
    pub c: f64,
    /// Model clamp for PULog: evaluations live in (pu_epsilon, 1 - pu_epsilon).
    pub pu_epsilon: f64,
}

impl LossSpec {
    pub fn new(family: LossFamily, c: f64) -> Result<Self> {
        Self::with_pu_epsilon(family, c, DEFAULT_PU_EPSILON)
    }

    pub fn with_pu_epsilon(family: LossFamily, c: f64, pu_epsilon: f64) -> Result<Self> {
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::Config(format!(
                "correction constant C must lie in (0, 1], got {c}"
            )));
        }
        if !(pu_epsilon > 0.0 && pu_epsilon < 0.5) {
            return Err(Error::Config(format!(
                "pu_epsilon must lie in (0, 0.5), got {pu_epsilon}"
            )));
        }
        Ok(Self { family, c, pu_epsilon })
    }

    /// The domain losses are defined on for this family.
    pub fn domain(&self) -> LossDomain {
        match self.family {
            LossFamily::Lsif => LossDomain {
                lower: 0.0,
                upper: f64::INFINITY,
                closed_lower: true,
            },
            LossFamily::Ukl | LossFamily::Bkl => LossDomain {
                lower: 0.0,
                upper: f64::INFINITY,
                closed_lower: false,
            },
            LossFamily::PuLog => LossDomain {
                lower: self.pu_epsilon,
                upper: 1.0 - self.pu_epsilon,
                closed_lower: false,
            },
        }
    }

    fn check_domain(&self, t: f64) -> Result<()> {
        if self.domain().contains(t) {
            Ok(())
        } else {
            Err(Error::Domain {
                family: self.family.name(),
                t,
                reason: match self.family {
                    LossFamily::Lsif => "requires t >= 0",
                    LossFamily::Ukl | LossFamily::Bkl => "requires t > 0",
                    LossFamily::PuLog => "requires eps < t < 1 - eps",
                },
            })
        }
    }

    /// l1(t) = f'(t)t - f(t) up to the documented constant shift; non-negative
    /// on the whole domain.
    pub fn l1(&self, t: f64) -> Result<f64> {
        self.check_domain(t)?;
        Ok(match self.family {
            LossFamily::Lsif => 0.5 * t * t,
            LossFamily::Ukl => t,
            LossFamily::Bkl => (1.0 + t).ln(),
            LossFamily::PuLog => -(1.0 - t).ln(),
        })
    }

    /// l2(t) = -f~(t) up to the documented constant shift.
    pub fn l2(&self, t: f64) -> Result<f64> {
        self.check_domain(t)?;
        Ok(match self.family {
            LossFamily::Lsif => 0.5 * self.c * t * t - t,
            LossFamily::Ukl => self.c * t - t.ln(),
            LossFamily::Bkl => (1.0 + self.c) * (1.0 + t).ln() - t.ln(),
            LossFamily::PuLog => -self.c * t.ln(),
        })
    }

    /// d l1 / dt.
    pub fn l1_deriv(&self, t: f64) -> Result<f64> {
        self.check_domain(t)?;
        Ok(match self.family {
            LossFamily::Lsif => t,
            LossFamily::Ukl => 1.0,
            LossFamily::Bkl => 1.0 / (1.0 + t),
            LossFamily::PuLog => 1.0 / (1.0 - t),
        })
    }

    /// d l2 / dt.
    pub fn l2_deriv(&self, t: f64) -> Result<f64> {
        self.check_domain(t)?;
        Ok(match self.family {
            LossFamily::Lsif => self.c * t - 1.0,
            LossFamily::Ukl => self.c - 1.0 / t,
            LossFamily::Bkl => (1.0 + self.c) / (1.0 + t) - 1.0 / t,
            LossFamily::PuLog => -self.c / t,
        })
    }

    /// The greatest lower bound of l2 over the domain (-inf if unbounded).
    ///
    /// With the clip in place the corrected risk can never fall below this
    /// value; for LSIF it equals -1/(2C), attained at t = 1/C.
    pub fn l2_infimum(&self) -> f64 {
        match self.family {
            LossFamily::Lsif => -0.5 / self.c,
            // C t - ln t is minimized at t = 1/C.
            LossFamily::Ukl => 1.0 + self.c.ln(),
            // (1+C) ln(1+t) - ln t -> decreasing then increasing; minimum at
            // t = 1/C from (1+C)/(1+t) = 1/t.
            LossFamily::Bkl => {
                let t = 1.0 / self.c;
                (1.0 + self.c) * (1.0 + t).ln() - t.ln()
            }
            // -C ln t on (eps, 1-eps) is minimized as t -> 1-eps.
            LossFamily::PuLog => -self.c * (1.0 - self.pu_epsilon).ln(),
        }
    }

    /// The exact convex generator f(t) (no constant shift).
    pub fn f_value(&self, t: f64) -> Result<f64> {
        self.check_domain(t)?;
        Ok(match self.family {
            LossFamily::Lsif => 0.5 * (t - 1.0) * (t - 1.0),
            // t ln t - t extends continuously to 0 at t = 0, but the domain
            // excludes 0 anyway.
            LossFamily::Ukl => t * t.ln() - t,
            LossFamily::Bkl => t * t.ln() - (1.0 + t) * (1.0 + t).ln(),
            LossFamily::PuLog => {
                (1.0 - t).ln() + self.c * t * (t.ln() - (1.0 - t).ln())
            }
        })
    }

    /// The exact derivative f'(t).
    pub fn f_deriv(&self, t: f64) -> Result<f64> {
        self.check_domain(t)?;
        Ok(match self.family {
            LossFamily::Lsif => t - 1.0,
            LossFamily::Ukl => t.ln(),
            LossFamily::Bkl => t.ln() - (1.0 + t).ln(),
            LossFamily::PuLog => {
                let one_m = 1.0 - t;
                -1.0 / one_m
                    + self.c * (t.ln() - one_m.ln())
                    + self.c * (1.0 + t / one_m)
            }
        })
    }
}
