//! End-to-end teleportation of an `n`-qudit state.
//!
//! The joint register is laid out `[X1..Xn, A1, B1, ..., An, Bn]`: Alice's
//! input qudits first, then the channel in its own `A B` pair order. Alice
//! measures the pairs `(A_i, X_i)`; Bob holds `B1..Bn`.
//!
//! Before teleportation Bob brings the channel back to `Υ_A |Θ_00..0>` with
//! local operations on his own qudits: `Ω†` for a two-sided channel, then
//! `V(k_i, l_i)†` on `B_i` for any nonzero pair offset. After Alice's
//! outcome `(k_1 l_1 ... k_n l_n)` arrives his qudits hold
//! `⊗ V(k_i l_i)† |Λ>` up to phase, and `⊗ V(k_i l_i)` restores `|Λ>`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{build_channel, ChannelKind, ChannelSpec};
use crate::error::{Error, Result};
use crate::measure::{
    measure_xi, outcome_distribution, project_all, project_all_xi, project_outcome, project_xi,
    sample_product_phi, xi_outcome_distribution, MeasurementResult, Outcome, OutcomeDistribution,
    Projection,
};
use crate::session::ClassicalMessage;
use crate::statevec::{LocalOperator, Matrix, StateVector};
use crate::weyl::{weyl_v, BellLabel};
use crate::{rng_stream, FIDELITY_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    /// Product channel of generalized Bell pairs.
    Dn,
    /// Channel with a global unitary on Alice's half.
    Dpn,
    /// Channel with global unitaries on both halves.
    Dppn,
}

impl Protocol {
    pub const ALL: [Protocol; 3] = [Protocol::Dn, Protocol::Dpn, Protocol::Dppn];

    pub fn channel_kind(self) -> ChannelKind {
        match self {
            Protocol::Dn => ChannelKind::Tps,
            Protocol::Dpn => ChannelKind::Ges,
            Protocol::Dppn => ChannelKind::Ges2,
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Dn => "dn",
            Protocol::Dpn => "dpn",
            Protocol::Dppn => "dppn",
        })
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dn" => Ok(Protocol::Dn),
            "dpn" => Ok(Protocol::Dpn),
            "dppn" => Ok(Protocol::Dppn),
            _ => Err(Error::Parse(format!(
                "unknown protocol {s:?} (expected dn, dpn or dppn)"
            ))),
        }
    }
}

/// Qudit positions inside the joint register.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct JointLayout {
    pub n: usize,
}

impl JointLayout {
    pub fn x(&self, i: usize) -> usize {
        i
    }

    pub fn a(&self, i: usize) -> usize {
        self.n + 2 * i
    }

    pub fn b(&self, i: usize) -> usize {
        self.n + 2 * i + 1
    }

    /// Measured pairs `(A_i, X_i)`.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        (0..self.n).map(|i| (self.a(i), self.x(i))).collect()
    }

    /// `[A1..An, X1..Xn]`.
    pub fn alice_positions(&self) -> Vec<usize> {
        (0..self.n)
            .map(|i| self.a(i))
            .chain((0..self.n).map(|i| self.x(i)))
            .collect()
    }

    pub fn bob_positions(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.b(i)).collect()
    }
}

/// Local operation Bob performs on the channel before teleportation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreRotation {
    /// `Ω†` on `B1..Bn`.
    OmegaInverse,
    /// `V(offset)†` on `B_i`.
    OffsetInverse { pair: usize, label: BellLabel },
}

/// Full record of one teleportation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub protocol: Protocol,
    pub spec: ChannelSpec,
    pub input_state: StateVector,
    pub outcome: Outcome,
    pub outcome_probability: f64,
    pub classical_message: ClassicalMessage,
    pub bob_prerotation: Vec<PreRotation>,
    pub bob_pre_correction: StateVector,
    pub bob_post_correction: StateVector,
    pub fidelity: f64,
    pub seed: u64,
}

impl Transcript {
    pub fn is_faithful(&self) -> bool {
        self.fidelity >= 1.0 - FIDELITY_TOL
    }
}

/// A teleportation ready for Alice's measurement: channel built, Bob's
/// pre-rotations applied, input attached.
#[derive(Clone, Debug)]
pub struct Setup {
    pub protocol: Protocol,
    pub spec: ChannelSpec,
    pub input: StateVector,
    pub layout: JointLayout,
    pub prerotation: Vec<PreRotation>,
    prerotated: bool,
    /// Channel state as shared, before Bob touches it.
    pub channel: StateVector,
    /// Joint state after Bob's pre-rotations.
    pub joint: StateVector,
}

impl Setup {
    /// Channel built and input attached; Bob has not acted yet.
    pub fn shared(protocol: Protocol, input: &StateVector, spec: &ChannelSpec) -> Result<Self> {
        spec.validate()?;
        if spec.kind != protocol.channel_kind() {
            return Err(Error::Channel(format!(
                "protocol {protocol} needs a {} channel, got {}",
                protocol.channel_kind(),
                spec.kind
            )));
        }
        if input.d() != spec.d {
            return Err(Error::DimensionMismatch(input.d(), spec.d));
        }
        if input.m() != spec.n {
            return Err(Error::Shape(format!(
                "input has {} qudits, channel carries {}",
                input.m(),
                spec.n
            )));
        }
        let channel = build_channel(spec)?;
        let joint = input.tensor(&channel)?;
        Ok(Self {
            protocol,
            spec: spec.clone(),
            input: input.clone(),
            layout: JointLayout { n: spec.n },
            prerotation: Vec::new(),
            prerotated: false,
            channel,
            joint,
        })
    }

    /// [`Setup::shared`] followed by [`Setup::bob_prerotate`].
    pub fn new(protocol: Protocol, input: &StateVector, spec: &ChannelSpec) -> Result<Self> {
        let mut setup = Self::shared(protocol, input, spec)?;
        setup.bob_prerotate()?;
        Ok(setup)
    }

    /// Bob's channel normalization: `Ω†` on his qudits if present, then
    /// `V(offset)†` on every `B_i` with a nonzero offset. Runs once.
    pub fn bob_prerotate(&mut self) -> Result<()> {
        if self.prerotated {
            return Ok(());
        }
        let bobs = self.layout.bob_positions();
        if let Some(omega) = &self.spec.omega {
            self.joint = self.joint.apply_local(&omega.operator().adjoint(), &bobs)?;
            self.prerotation.push(PreRotation::OmegaInverse);
        }
        for (pair, &label) in self.spec.offsets.iter().enumerate() {
            if label != BellLabel::ZERO {
                self.joint = self
                    .joint
                    .apply_local(&weyl_v(self.spec.d, label)?.adjoint(), &[bobs[pair]])?;
                self.prerotation
                    .push(PreRotation::OffsetInverse { pair, label });
            }
        }
        self.prerotated = true;
        Ok(())
    }

    /// Alice's measurement: product Bell basis for `Dn`, the `Υ`-rotated
    /// basis otherwise.
    pub fn alice_measure<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<MeasurementResult> {
        match &self.spec.upsilon {
            None => sample_product_phi(&self.joint, &self.layout.pairs(), rng),
            Some(u) => measure_xi(&self.joint, &self.layout.alice_positions(), u, rng),
        }
    }

    pub fn distribution(&self) -> Result<OutcomeDistribution> {
        match &self.spec.upsilon {
            None => outcome_distribution(&self.joint, &self.layout.pairs()),
            Some(u) => xi_outcome_distribution(&self.joint, &self.layout.alice_positions(), u),
        }
    }

    /// Forces a specific outcome; Bob's pre-correction state is the residual.
    pub fn project(&self, outcome: &Outcome) -> Result<Projection> {
        match &self.spec.upsilon {
            None => project_outcome(&self.joint, &self.layout.pairs(), outcome),
            Some(u) => project_xi(&self.joint, &self.layout.alice_positions(), u, outcome),
        }
    }

    /// Projections for every outcome, indexed by [`Outcome::index`].
    pub fn project_all(&self) -> Result<Vec<Projection>> {
        match &self.spec.upsilon {
            None => project_all(&self.joint, &self.layout.pairs()),
            Some(u) => project_all_xi(&self.joint, &self.layout.alice_positions(), u),
        }
    }

    /// Bob's reduced state averaged over Alice's outcomes, before any
    /// classical message arrives.
    pub fn bob_average_density(&self) -> Result<Matrix> {
        let side = self.spec.d.pow(self.spec.n as u32);
        let mut avg = Matrix::zeros(side);
        for p in self.project_all()? {
            if let Ok(residual) = p.residual {
                let rho = residual.outer();
                for r in 0..side {
                    for c in 0..side {
                        avg[(r, c)] += rho[(r, c)] * p.probability;
                    }
                }
            }
        }
        Ok(avg)
    }
}

/// `V(k_i, l_i)` for each pair, to be applied to `B_i`.
pub fn corrections(outcome: &Outcome, d: usize) -> Result<Vec<LocalOperator>> {
    outcome
        .labels
        .iter()
        .map(|&label| weyl_v(d, label))
        .collect()
}

pub fn apply_corrections(state: &StateVector, outcome: &Outcome, d: usize) -> Result<StateVector> {
    outcome.validate(d, state.m())?;
    let mut out = state.clone();
    for (i, op) in corrections(outcome, d)?.iter().enumerate() {
        out = out.apply_local(op, &[i])?;
    }
    Ok(out)
}

/// Phase-insensitive overlap `|<a|b>|`, clamped to `[0, 1]`.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm().min(1.0))
}

/// Generic driver behind [`run_dn`], [`run_dpn`] and [`run_dppn`].
pub fn run(
    protocol: Protocol,
    input: &StateVector,
    spec: &ChannelSpec,
    seed: u64,
) -> Result<Transcript> {
    let setup = Setup::new(protocol, input, spec)?;
    let mut rng = rng_stream(seed);
    let measured = setup.alice_measure(&mut rng)?;
    let message = ClassicalMessage::from_outcome(spec.d, &measured.outcome)?;
    let post = apply_corrections(&measured.post_state, &message.outcome(), spec.d)?;
    finish(setup, measured, message, post, seed)
}

pub(crate) fn finish(
    setup: Setup,
    measured: MeasurementResult,
    message: ClassicalMessage,
    post: StateVector,
    seed: u64,
) -> Result<Transcript> {
    let fidelity = fidelity(&setup.input, &post)?;
    Ok(Transcript {
        protocol: setup.protocol,
        spec: setup.spec,
        input_state: setup.input,
        outcome: measured.outcome,
        outcome_probability: measured.probability,
        classical_message: message,
        bob_prerotation: setup.prerotation,
        bob_pre_correction: measured.post_state,
        bob_post_correction: post,
        fidelity,
        seed,
    })
}

pub fn run_dn(input: &StateVector, spec: &ChannelSpec, seed: u64) -> Result<Transcript> {
    run(Protocol::Dn, input, spec, seed)
}

pub fn run_dpn(input: &StateVector, spec: &ChannelSpec, seed: u64) -> Result<Transcript> {
    run(Protocol::Dpn, input, spec, seed)
}

pub fn run_dppn(input: &StateVector, spec: &ChannelSpec, seed: u64) -> Result<Transcript> {
    run(Protocol::Dppn, input, spec, seed)
}

/// `⊗ V(k_i l_i)† |Λ>`, the state Bob should hold before corrections.
pub fn expected_pre_correction(input: &StateVector, outcome: &Outcome) -> Result<StateVector> {
    let mut out = input.clone();
    for (i, &label) in outcome.labels.iter().enumerate() {
        out = out.apply_local(&weyl_v(input.d(), label)?.adjoint(), &[i])?;
    }
    Ok(out)
}
