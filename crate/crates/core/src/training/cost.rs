use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::Tau;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Cost {
    /// `ln(1 + exp(-delta))` on the score difference (target probability 1).
    #[default]
    CrossEntropy,
    /// `high_grade * (1 - o1)^2` on the head output.
    Squared,
}

impl Cost {
    /// Cost of a correctly ordered pair with score difference `delta` and
    /// its derivative with respect to `delta`.
    pub fn evaluate(self, delta: f64, tau: Tau, high_grade: u32) -> (f64, f64) {
        match self {
            Cost::CrossEntropy => cost_cross_entropy(delta),
            Cost::Squared => {
                let (c, dc_do) = cost_squared(tau.apply(delta), high_grade);
                (c, dc_do * tau.derivative(delta))
            }
        }
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Cost::CrossEntropy => "cross_entropy",
            Cost::Squared => "squared",
        })
    }
}

impl FromStr for Cost {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cross_entropy" | "ce" => Ok(Cost::CrossEntropy),
            "squared" => Ok(Cost::Squared),
            other => Err(Error::invalid(format!("unknown cost `{other}`"))),
        }
    }
}

/// `(high_grade * (1 - o1)^2, -2 * high_grade * (1 - o1))`.
pub fn cost_squared(o1: f64, high_grade: u32) -> (f64, f64) {
    let r = f64::from(high_grade);
    let miss = 1.0 - o1;
    (r * miss * miss, -2.0 * r * miss)
}

/// `(ln(1 + e^{-delta}), -1 / (1 + e^{delta}))`, evaluated without overflow.
pub fn cost_cross_entropy(delta: f64) -> (f64, f64) {
    let cost = if delta >= 0.0 {
        (-delta).exp().ln_1p()
    } else {
        -delta + delta.exp().ln_1p()
    };
    let grad = if delta >= 0.0 {
        let e = (-delta).exp();
        -e / (1.0 + e)
    } else {
        -1.0 / (1.0 + delta.exp())
    };
    (cost, grad)
}
