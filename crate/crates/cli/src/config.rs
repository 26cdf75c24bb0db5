//! Configuration document, flag overrides and the validated run config.

use crate::error::CliError;
use catlink::experiment::DetectorSpec;
use catlink::protocols::PipelineOptions;
use catlink::{Channel, DetectionModel, Params, Protocol};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Table,
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    DeltaSigmaRad,
    Sigma1Rad,
    Sigma2Rad,
    PhiRad,
    DistanceKmTotal,
    Alpha,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::DeltaSigmaRad => "delta_sigma_rad",
            SweepVariable::Sigma1Rad => "sigma1_rad",
            SweepVariable::Sigma2Rad => "sigma2_rad",
            SweepVariable::PhiRad => "phi_rad",
            SweepVariable::DistanceKmTotal => "distance_km_total",
            SweepVariable::Alpha => "alpha",
        }
    }
}

impl FromStr for SweepVariable {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        toml::Value::String(s.to_owned())
            .try_into()
            .map_err(|_| CliError::Usage(format!("unknown sweep variable `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl SweepAxis {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let span = self.stop - self.start;
        (0..self.steps)
            .map(|i| self.start + span * i as f64 / (self.steps - 1) as f64)
            .collect()
    }
}

/// `variable:start:stop:steps`
pub fn parse_axis(s: &str) -> Result<SweepAxis, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let [variable, start, stop, steps] = parts[..] else {
        return Err(CliError::Usage(format!(
            "--axis expects variable:start:stop:steps, got `{s}`"
        )));
    };
    let num = |field: &str, v: &str| {
        v.parse::<f64>()
            .map_err(|_| CliError::Usage(format!("--axis {field} `{v}` is not a number")))
    };
    Ok(SweepAxis {
        variable: variable.parse()?,
        start: num("start", start)?,
        stop: num("stop", stop)?,
        steps: steps
            .parse()
            .map_err(|_| CliError::Usage(format!("--axis steps `{steps}` is not a count")))?,
    })
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SourceSection {
    alpha: Option<f64>,
    phi_rad: Option<f64>,
    sigma1_rad: Option<f64>,
    sigma2_rad: Option<f64>,
    source_rate_hz: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ChannelSection {
    loss_db_per_km: Option<f64>,
    distance_km_total: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DetectorSection {
    dark_rate_hz: Option<f64>,
    coincidence_window_s: Option<f64>,
    detection: Option<DetectionModel>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunSection {
    protocol: Option<Protocol>,
    format: Option<Format>,
    seed: Option<u64>,
    duration_s: Option<f64>,
    bin_s: Option<f64>,
    rate_floor_hz: Option<f64>,
    oracle_points: Option<usize>,
    oracle_tolerance: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    source: SourceSection,
    channel: ChannelSection,
    detector: DetectorSection,
    sweep: Option<SweepAxis>,
    run: RunSection,
}

/// Flags that override the configuration document.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// Configuration document (TOML with [source], [channel], [detector], [sweep], [run]).
    #[arg(long, global = true)]
    pub config: Option<std::path::PathBuf>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub phi_rad: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub sigma1_rad: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub sigma2_rad: Option<f64>,
    #[arg(long, global = true)]
    pub source_rate_hz: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub loss_db_per_km: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub distance_km_total: Option<f64>,
    #[arg(long, global = true)]
    pub dark_rate_hz: Option<f64>,
    #[arg(long, global = true)]
    pub coincidence_window_s: Option<f64>,
    /// Count any number of photons per detector instead of exactly one.
    #[arg(long, global = true)]
    pub click: bool,
    #[arg(long, global = true)]
    pub protocol: Option<Protocol>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub duration_s: Option<f64>,
    #[arg(long, global = true)]
    pub bin_s: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub rate_floor_hz: Option<f64>,
    /// Sweep axis `variable:start:stop:steps`; replaces the [sweep] section.
    #[arg(long = "axis", global = true)]
    pub axes: Vec<String>,
    #[arg(long, global = true)]
    pub oracle_points: Option<usize>,
    #[arg(long, global = true)]
    pub oracle_tolerance: Option<f64>,
}

/// Fully resolved and validated settings for one command.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub params: Params,
    /// Whether the amplitude came from the config or a flag rather than the default.
    pub alpha_given: bool,
    pub source_rate_hz: f64,
    pub loss_db_per_km: f64,
    pub distance_km_total: f64,
    pub channel: Channel,
    pub detector: DetectorSpec,
    pub pipeline: PipelineOptions,
    pub protocol: Protocol,
    pub format: Format,
    pub seed: u64,
    pub duration_s: f64,
    pub bin_s: f64,
    pub rate_floor_hz: Option<f64>,
    pub sweep_axes: Vec<SweepAxis>,
    pub oracle_points: usize,
    pub oracle_tolerance: f64,
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{field}: {msg}"))
}

fn finite(field: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(field, format!("must be finite, got {v}")))
    }
}

impl RunConfig {
    pub fn load(ov: &Overrides) -> Result<Self, CliError> {
        let file = match &ov.config {
            Some(path) => read_file(path)?,
            None => FileConfig::default(),
        };
        Self::resolve(file, ov)
    }

    fn resolve(file: FileConfig, ov: &Overrides) -> Result<Self, CliError> {
        let alpha_set = ov.alpha.or(file.source.alpha);
        let alpha = alpha_set.unwrap_or(100.0);
        let phi = finite("source.phi_rad", ov.phi_rad.or(file.source.phi_rad).unwrap_or(0.0028))?;
        let sigma1 = finite(
            "source.sigma1_rad",
            ov.sigma1_rad.or(file.source.sigma1_rad).unwrap_or(std::f64::consts::PI),
        )?;
        let sigma2 = finite("source.sigma2_rad", ov.sigma2_rad.or(file.source.sigma2_rad).unwrap_or(0.0))?;
        let params = Params::new(alpha, phi, sigma1, sigma2).map_err(|e| invalid("source.alpha", e))?;

        let source_rate_hz = ov.source_rate_hz.or(file.source.source_rate_hz).unwrap_or(1e9);
        if !(source_rate_hz.is_finite() && source_rate_hz > 0.0) {
            return Err(invalid("source.source_rate_hz", format!("must be finite and > 0, got {source_rate_hz}")));
        }

        let loss = ov.loss_db_per_km.or(file.channel.loss_db_per_km).unwrap_or(0.15);
        let distance = ov.distance_km_total.or(file.channel.distance_km_total).unwrap_or(400.0);
        if !(loss.is_finite() && loss >= 0.0) {
            return Err(invalid("channel.loss_db_per_km", format!("must be finite and >= 0, got {loss}")));
        }
        if !(distance.is_finite() && distance >= 0.0) {
            return Err(invalid("channel.distance_km_total", format!("must be finite and >= 0, got {distance}")));
        }
        let channel = Channel::from_total_distance(loss, distance).map_err(|e| invalid("channel", e))?;

        let detector = DetectorSpec::new(
            ov.dark_rate_hz.or(file.detector.dark_rate_hz).unwrap_or(8e-4),
            ov.coincidence_window_s.or(file.detector.coincidence_window_s).unwrap_or(1e-9),
        )
        .map_err(|e| invalid("detector", e))?;
        let detection = if ov.click {
            DetectionModel::Click
        } else {
            file.detector.detection.unwrap_or_default()
        };

        let duration_s = ov.duration_s.or(file.run.duration_s).unwrap_or(1e4);
        if !(duration_s.is_finite() && duration_s >= 0.0) {
            return Err(invalid("run.duration_s", format!("must be finite and >= 0, got {duration_s}")));
        }
        let bin_s = ov.bin_s.or(file.run.bin_s).unwrap_or(100.0);
        if !(bin_s.is_finite() && bin_s > 0.0) {
            return Err(invalid("run.bin_s", format!("must be finite and > 0, got {bin_s}")));
        }
        let rate_floor_hz = ov.rate_floor_hz.or(file.run.rate_floor_hz);
        if let Some(f) = rate_floor_hz {
            if f.is_nan() || f <= 0.0 {
                return Err(invalid("run.rate_floor_hz", format!("must be > 0, got {f}")));
            }
        }
        let oracle_tolerance = ov.oracle_tolerance.or(file.run.oracle_tolerance).unwrap_or(1e-8);
        if !(oracle_tolerance.is_finite() && oracle_tolerance >= 0.0) {
            return Err(invalid("run.oracle_tolerance", format!("must be finite and >= 0, got {oracle_tolerance}")));
        }

        let sweep_axes: Vec<SweepAxis> = if ov.axes.is_empty() {
            file.sweep.into_iter().collect()
        } else {
            ov.axes.iter().map(|a| parse_axis(a)).collect::<Result<_, _>>()?
        };
        for axis in &sweep_axes {
            if axis.steps == 0 {
                return Err(invalid("sweep.steps", "must be >= 1"));
            }
            finite("sweep.start", axis.start)?;
            finite("sweep.stop", axis.stop)?;
        }

        Ok(Self {
            params,
            alpha_given: alpha_set.is_some(),
            source_rate_hz,
            loss_db_per_km: loss,
            distance_km_total: distance,
            channel,
            detector,
            pipeline: PipelineOptions {
                detection,
                ..Default::default()
            },
            protocol: ov.protocol.or(file.run.protocol).unwrap_or(Protocol::Usd2),
            format: ov.format.or(file.run.format).unwrap_or_default(),
            seed: ov.seed.or(file.run.seed).unwrap_or(0),
            duration_s,
            bin_s,
            rate_floor_hz,
            sweep_axes,
            oracle_points: ov.oracle_points.or(file.run.oracle_points).unwrap_or(20),
            oracle_tolerance,
        })
    }

    /// Same settings with one variable replaced.
    pub fn with_variable(&self, var: SweepVariable, value: f64) -> Result<Self, CliError> {
        let mut next = self.clone();
        let p = &mut next.params;
        match var {
            SweepVariable::DeltaSigmaRad => *p = p.with_delta_sigma(value),
            SweepVariable::Sigma1Rad => p.sigma1 = value,
            SweepVariable::Sigma2Rad => p.sigma2 = value,
            SweepVariable::PhiRad => p.phi = value,
            SweepVariable::Alpha => {
                *p = Params::new(value, p.phi, p.sigma1, p.sigma2).map_err(|e| invalid("sweep.alpha", e))?
            }
            SweepVariable::DistanceKmTotal => {
                if !(value.is_finite() && value >= 0.0) {
                    return Err(invalid("sweep.distance_km_total", format!("must be >= 0, got {value}")));
                }
                next.distance_km_total = value;
                next.channel = Channel::from_total_distance(next.loss_db_per_km, value)
                    .map_err(|e| invalid("sweep.distance_km_total", e))?;
            }
        }
        Ok(next)
    }
}

fn read_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}
