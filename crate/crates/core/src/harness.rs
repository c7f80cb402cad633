//! Batch teleportation runs and their JSON-serializable report.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{ChannelDescriptor, ChannelSpec};
use crate::error::{Error, Result};
use crate::protocols::{run, Protocol};
use crate::statevec::{checked_pow, StateVector};
use crate::weyl::BellLabel;
use crate::{derive_seed, FIDELITY_TOL};

/// Largest joint register (`d^{3n}` amplitudes) a run may allocate.
pub const JOINT_AMPLITUDE_CAP: usize = 200_000;

pub const TELEPORT_SCHEMA: &str = "qudit-teleport/teleport-report/v1";

/// Index mixed into a trial seed to draw its random input state, keeping
/// the input stream apart from the measurement stream.
const INPUT_STREAM: u64 = 0x1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "path")]
pub enum InputSource {
    /// A fresh random state per trial.
    Random,
    /// One state read from a state-vector text file, reused for every trial.
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub d: usize,
    pub n: usize,
    pub protocol: Protocol,
    pub channel: ChannelDescriptor,
    pub offsets: Vec<BellLabel>,
    pub trials: usize,
    pub seed: u64,
    pub input: InputSource,
}

/// Checks `d >= 2`, `n >= 1` and `d^{3n} <= cap`.
pub fn check_size(d: usize, n: usize, cap: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::Dimension(d));
    }
    if n == 0 {
        return Err(Error::EmptyRegister);
    }
    let joint = checked_pow(d, 3 * n).map_err(|_| Error::Cap {
        dim: usize::MAX,
        cap,
    })?;
    if joint > cap {
        return Err(Error::Cap { dim: joint, cap });
    }
    Ok(())
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        check_size(self.d, self.n, JOINT_AMPLITUDE_CAP)?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be positive".into()));
        }
        if self.channel.kind != self.protocol.channel_kind() {
            return Err(Error::Config(format!(
                "protocol {} needs a {} channel, got {}",
                self.protocol,
                self.protocol.channel_kind(),
                self.channel
            )));
        }
        if !self.offsets.is_empty() && self.offsets.len() != self.n {
            return Err(Error::Config(format!(
                "{} offsets given for {} pairs",
                self.offsets.len(),
                self.n
            )));
        }
        Ok(())
    }

    pub fn channel_spec(&self) -> Result<ChannelSpec> {
        let offsets = if self.offsets.is_empty() {
            vec![BellLabel::ZERO; self.n]
        } else {
            self.offsets.clone()
        };
        self.channel.build(self.d, self.n, offsets)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigEcho {
    pub d: usize,
    pub n: usize,
    pub protocol: Protocol,
    pub channel: String,
    pub offsets: String,
    pub trials: usize,
    pub seed: u64,
    pub input: InputSource,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialRecord {
    pub index: usize,
    pub seed: u64,
    /// Flat dit list `k1,l1,...,kn,ln`.
    pub outcome: String,
    pub fidelity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Aggregate {
    pub min_fidelity: f64,
    pub mean_fidelity: f64,
    pub outcome_histogram: BTreeMap<String, usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeleportReport {
    pub schema: String,
    /// Seconds since the Unix epoch. Not covered by the determinism guarantee.
    pub generated_at: u64,
    pub config: ConfigEcho,
    pub trials: Vec<TrialRecord>,
    pub aggregate: Aggregate,
    pub fidelity_threshold: f64,
    pub passed: bool,
}

pub(crate) fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn format_offsets(offsets: &[BellLabel]) -> String {
    offsets
        .iter()
        .flat_map(|l| [l.k, l.l])
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Runs every trial (in parallel) and assembles the report in trial order.
pub fn run_teleport(config: &RunConfig) -> Result<TeleportReport> {
    config.validate()?;
    let spec = config.channel_spec()?;
    let fixed_input = match &config.input {
        InputSource::Random => None,
        InputSource::File(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let state = StateVector::from_text(&text)?;
            if state.d() != config.d || state.m() != config.n {
                return Err(Error::Config(format!(
                    "input file holds d={} m={}, run needs d={} n={}",
                    state.d(),
                    state.m(),
                    config.d,
                    config.n
                )));
            }
            Some(state)
        }
    };

    let trials = (0..config.trials)
        .into_par_iter()
        .map(|index| {
            let seed = derive_seed(config.seed, index as u64);
            let input = match &fixed_input {
                Some(state) => state.clone(),
                None => StateVector::random(config.d, config.n, derive_seed(seed, INPUT_STREAM))?,
            };
            let t = run(config.protocol, &input, &spec, seed)?;
            Ok(TrialRecord {
                index,
                seed,
                outcome: t.outcome.to_string(),
                fidelity: t.fidelity,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let min_fidelity = trials
        .iter()
        .map(|t| t.fidelity)
        .fold(f64::INFINITY, f64::min);
    let mean_fidelity = trials.iter().map(|t| t.fidelity).sum::<f64>() / trials.len() as f64;
    let mut outcome_histogram = BTreeMap::new();
    for t in &trials {
        *outcome_histogram.entry(t.outcome.clone()).or_insert(0) += 1;
    }
    Ok(TeleportReport {
        schema: TELEPORT_SCHEMA.into(),
        generated_at: unix_now(),
        config: ConfigEcho {
            d: config.d,
            n: config.n,
            protocol: config.protocol,
            channel: config.channel.to_string(),
            offsets: format_offsets(&spec.offsets),
            trials: config.trials,
            seed: config.seed,
            input: config.input.clone(),
        },
        trials,
        aggregate: Aggregate {
            min_fidelity,
            mean_fidelity,
            outcome_histogram,
        },
        fidelity_threshold: 1.0 - FIDELITY_TOL,
        passed: min_fidelity >= 1.0 - FIDELITY_TOL,
    })
}
