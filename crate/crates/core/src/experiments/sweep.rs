use std::fmt;
use std::io::Write;
use std::str::FromStr;

use super::protocol::{run_synthetic_protocol, SyntheticProtocolConfig};
use crate::error::{Error, Result};
use crate::synthetic::SyntheticConfig;
use crate::training::TrainConfig;

/// Dataset property varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepVariable {
    NClasses,
    NFeatures,
    TrainSize,
    NoiseSigma,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::NClasses => "n_classes",
            SweepVariable::NFeatures => "n_features",
            SweepVariable::TrainSize => "train_size",
            SweepVariable::NoiseSigma => "noise_sigma",
        }
    }

    /// Values swept when none are given.
    pub fn default_values(self) -> &'static [f64] {
        match self {
            SweepVariable::NClasses => &[2.0, 3.0, 5.0, 10.0, 20.0],
            SweepVariable::NFeatures => &[10.0, 20.0, 40.0, 70.0, 140.0],
            SweepVariable::TrainSize => &[1_000.0, 3_000.0, 10_000.0, 30_000.0, 100_000.0],
            SweepVariable::NoiseSigma => &[0.0, 0.25, 0.5, 0.75, 1.0],
        }
    }

    /// Returns the configs for one sweep point. Count-valued variables must
    /// be non-negative integers.
    ///
    /// For the class-count sweep the feature net's last layer, when there is
    /// more than one layer, is resized to one unit per class.
    fn configure(
        self,
        value: f64,
        data: &SyntheticConfig,
        train: &TrainConfig,
    ) -> Result<(SyntheticConfig, TrainConfig)> {
        let (mut data, mut train) = (data.clone(), train.clone());
        let count = || -> Result<usize> {
            if value >= 1.0 && value.fract() == 0.0 && value <= usize::MAX as f64 {
                Ok(value as usize)
            } else {
                Err(Error::invalid(format!(
                    "{} must be a positive integer, got {value}",
                    self.name()
                )))
            }
        };
        match self {
            SweepVariable::NClasses => {
                data.n_classes = count()?;
                if train.hidden_sizes.len() > 1 {
                    *train.hidden_sizes.last_mut().expect("non-empty") = data.n_classes;
                }
            }
            SweepVariable::NFeatures => data.n_features = count()?,
            SweepVariable::TrainSize => data.train_size = count()?,
            SweepVariable::NoiseSigma => data.noise_sigma = value,
        }
        data.validate()?;
        Ok((data, train))
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n_classes" => Ok(SweepVariable::NClasses),
            "n_features" => Ok(SweepVariable::NFeatures),
            "train_size" => Ok(SweepVariable::TrainSize),
            "noise_sigma" => Ok(SweepVariable::NoiseSigma),
            other => Err(Error::invalid(format!(
                "unknown sweep variable `{other}` (n_classes, n_features, train_size, noise_sigma)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportPoint {
    pub value: f64,
    pub mu: f64,
    pub delta_mu: f64,
    pub n_repeats: usize,
    pub wall_seconds: f64,
}

/// One series of protocol points.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub variable: String,
    pub master_seed: u64,
    pub points: Vec<ReportPoint>,
}

pub const SWEEP_CSV_HEADER: &str = "variable,value,mu,delta_mu,n_repeats,master_seed";

impl ExperimentReport {
    /// Wall-clock times are left out so reruns are byte-identical.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{SWEEP_CSV_HEADER}")?;
        for p in &self.points {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                self.variable, p.value, p.mu, p.delta_mu, p.n_repeats, self.master_seed
            )?;
        }
        Ok(())
    }

    pub fn total_wall_seconds(&self) -> f64 {
        self.points.iter().map(|p| p.wall_seconds).sum()
    }
}

/// Runs the synthetic protocol once per value, all other settings fixed.
/// Every point uses the same master seed.
pub fn sweep(
    variable: SweepVariable,
    values: &[f64],
    data: &SyntheticConfig,
    train: &TrainConfig,
    proto: &SyntheticProtocolConfig,
    master_seed: u64,
) -> Result<ExperimentReport> {
    if values.is_empty() {
        return Err(Error::invalid("sweep needs at least one value"));
    }
    let points = values
        .iter()
        .map(|&value| {
            let (d, t) = variable.configure(value, data, train)?;
            let p = run_synthetic_protocol(&d, &t, proto, master_seed)?;
            Ok(ReportPoint {
                value,
                mu: p.mu,
                delta_mu: p.delta_mu,
                n_repeats: p.per_repeat.len(),
                wall_seconds: p.wall_seconds,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ExperimentReport {
        variable: variable.name().to_string(),
        master_seed,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_sweep_resizes_last_layer() {
        let data = SyntheticConfig::default();
        let train = TrainConfig::synthetic(5);
        let (d, t) = SweepVariable::NClasses.configure(3.0, &data, &train).unwrap();
        assert_eq!(d.n_classes, 3);
        assert_eq!(t.hidden_sizes, vec![70, 3]);
        assert!(SweepVariable::NClasses.configure(2.5, &data, &train).is_err());
        assert!(SweepVariable::NoiseSigma.configure(-1.0, &data, &train).is_err());
    }

    #[test]
    fn names_round_trip() {
        for v in [
            SweepVariable::NClasses,
            SweepVariable::NFeatures,
            SweepVariable::TrainSize,
            SweepVariable::NoiseSigma,
        ] {
            assert_eq!(v.name().parse::<SweepVariable>().unwrap(), v);
        }
        assert!("depth".parse::<SweepVariable>().is_err());
    }

    #[test]
    fn empty_value_list_rejected() {
        let r = sweep(
            SweepVariable::NoiseSigma,
            &[],
            &SyntheticConfig::default(),
            &TrainConfig::default(),
            &SyntheticProtocolConfig::default(),
            0,
        );
        assert!(r.is_err());
    }
}
