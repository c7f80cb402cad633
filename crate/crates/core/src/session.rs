//! Alice and Bob as explicit parties exchanging the classical outcome over a
//! byte pipe.
//!
//! Frame layout (all multi-byte fields big-endian):
//!
//! ```text
//! byte 0      version (0x01)
//! byte 1      d
//! bytes 2..4  n
//! bytes 4..   2n dits, each packed into ceil(log2 d) bits, MSB first,
//!             zero-padded to a whole byte
//! ```

use std::fmt;
use std::sync::mpsc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channels::ChannelSpec;
use crate::error::Error;
use crate::measure::{MeasurementResult, Outcome};
use crate::protocols::{apply_corrections, finish, Protocol, Setup, Transcript};
use crate::rng_stream;
use crate::statevec::StateVector;
use crate::weyl::BellLabel;

pub const FRAME_VERSION: u8 = 0x01;
const HEADER_LEN: usize = 4;

/// Alice's outcome as `2n` dits `k1, l1, ..., kn, ln`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClassicalMessage {
    d: usize,
    n: usize,
    dits: Vec<usize>,
}

impl ClassicalMessage {
    pub fn new(d: usize, n: usize, dits: Vec<usize>) -> Result<Self, Error> {
        if d < 2 {
            return Err(Error::Dimension(d));
        }
        if n == 0 {
            return Err(Error::EmptyRegister);
        }
        if dits.len() != 2 * n {
            return Err(Error::Length {
                expected: 2 * n,
                actual: dits.len(),
            });
        }
        if let Some(&digit) = dits.iter().find(|&&x| x >= d) {
            return Err(Error::Digit { digit, d });
        }
        Ok(Self { d, n, dits })
    }

    pub fn from_outcome(d: usize, outcome: &Outcome) -> Result<Self, Error> {
        Self::new(d, outcome.n(), outcome.dits())
    }

    pub fn outcome(&self) -> Outcome {
        Outcome::new(
            self.dits
                .chunks(2)
                .map(|p| BellLabel::new(p[0], p[1]))
                .collect(),
        )
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dits(&self) -> &[usize] {
        &self.dits
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("dimension {0} does not fit the one-byte frame field")]
    DimensionTooLarge(usize),
    #[error("pair count {0} does not fit the two-byte frame field")]
    PairCountTooLarge(usize),
    #[error("unsupported frame version {0:#04x}")]
    Version(u8),
    #[error("frame header declares dimension {0}")]
    Dimension(u8),
    #[error("frame header declares zero pairs")]
    EmptyMessage,
    #[error("truncated frame: need {expected} bytes, got {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("{0} unexpected bytes after the payload")]
    TrailingBytes(usize),
    #[error("dit {dit} at position {position} is not below d = {d}")]
    DitOutOfRange {
        position: usize,
        dit: usize,
        d: usize,
    },
    #[error("nonzero padding bits")]
    Padding,
}

/// Bits per dit: `ceil(log2 d)`.
pub fn bits_per_dit(d: usize) -> usize {
    (usize::BITS - (d - 1).leading_zeros()) as usize
}

fn payload_len(d: usize, n: usize) -> usize {
    (2 * n * bits_per_dit(d)).div_ceil(8)
}

pub fn encode_message(msg: &ClassicalMessage) -> Result<Vec<u8>, FrameError> {
    let d = u8::try_from(msg.d).map_err(|_| FrameError::DimensionTooLarge(msg.d))?;
    let n = u16::try_from(msg.n).map_err(|_| FrameError::PairCountTooLarge(msg.n))?;
    let width = bits_per_dit(msg.d);
    let mut out = Vec::with_capacity(HEADER_LEN + payload_len(msg.d, msg.n));
    out.push(FRAME_VERSION);
    out.push(d);
    out.extend_from_slice(&n.to_be_bytes());

    let mut acc: u8 = 0;
    let mut filled = 0;
    for &dit in &msg.dits {
        for bit in (0..width).rev() {
            acc = (acc << 1) | ((dit >> bit) & 1) as u8;
            filled += 1;
            if filled == 8 {
                out.push(acc);
                acc = 0;
                filled = 0;
            }
        }
    }
    if filled > 0 {
        out.push(acc << (8 - filled));
    }
    Ok(out)
}

pub fn decode_message(bytes: &[u8]) -> Result<ClassicalMessage, FrameError> {
    if bytes.len() < HEADER_LEN {
        return Err(FrameError::Truncated {
            expected: HEADER_LEN,
            actual: bytes.len(),
        });
    }
    if bytes[0] != FRAME_VERSION {
        return Err(FrameError::Version(bytes[0]));
    }
    if bytes[1] < 2 {
        return Err(FrameError::Dimension(bytes[1]));
    }
    let d = bytes[1] as usize;
    let n = u16::from_be_bytes([bytes[2], bytes[3]]) as usize;
    if n == 0 {
        return Err(FrameError::EmptyMessage);
    }
    let expected = HEADER_LEN + payload_len(d, n);
    if bytes.len() < expected {
        return Err(FrameError::Truncated {
            expected,
            actual: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(FrameError::TrailingBytes(bytes.len() - expected));
    }

    let payload = &bytes[HEADER_LEN..];
    let width = bits_per_dit(d);
    let bit = |i: usize| ((payload[i / 8] >> (7 - i % 8)) & 1) as usize;
    let mut dits = Vec::with_capacity(2 * n);
    for position in 0..2 * n {
        let dit = (0..width).fold(0, |acc, b| (acc << 1) | bit(position * width + b));
        if dit >= d {
            return Err(FrameError::DitOutOfRange { position, dit, d });
        }
        dits.push(dit);
    }
    if (2 * n * width..payload.len() * 8).any(|i| bit(i) != 0) {
        return Err(FrameError::Padding);
    }
    Ok(ClassicalMessage { d, n, dits })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("peer closed the pipe")]
    Closed,
}

/// A reliable-or-not byte pipe between the two parties.
pub trait BytePipe {
    fn send(&mut self, frame: Vec<u8>) -> Result<(), TransportError>;
    /// Blocks until a frame arrives or the peer hangs up.
    fn recv(&mut self) -> Result<Vec<u8>, TransportError>;
}

/// One end of an in-memory duplex pipe.
#[derive(Debug)]
pub struct MemoryPipe {
    tx: mpsc::Sender<Vec<u8>>,
    rx: mpsc::Receiver<Vec<u8>>,
}

pub fn duplex() -> (MemoryPipe, MemoryPipe) {
    let (a_tx, b_rx) = mpsc::channel();
    let (b_tx, a_rx) = mpsc::channel();
    (
        MemoryPipe { tx: a_tx, rx: a_rx },
        MemoryPipe { tx: b_tx, rx: b_rx },
    )
}

impl BytePipe for MemoryPipe {
    fn send(&mut self, frame: Vec<u8>) -> Result<(), TransportError> {
        self.tx.send(frame).map_err(|_| TransportError::Closed)
    }

    fn recv(&mut self) -> Result<Vec<u8>, TransportError> {
        self.rx.recv().map_err(|_| TransportError::Closed)
    }
}

impl<P: BytePipe + ?Sized> BytePipe for &mut P {
    fn send(&mut self, frame: Vec<u8>) -> Result<(), TransportError> {
        (**self).send(frame)
    }

    fn recv(&mut self) -> Result<Vec<u8>, TransportError> {
        (**self).recv()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    Alice,
    Bob,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Ready,
    Measured,
    Sent,
    Corrected,
    Done,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error(transparent)]
    Simulation(#[from] Error),
    #[error("{role} cannot {action} in phase {phase}")]
    IllegalTransition {
        role: Role,
        phase: Phase,
        action: &'static str,
    },
    #[error("{role} in phase {phase}: {source}")]
    Frame {
        role: Role,
        phase: Phase,
        source: FrameError,
    },
    /// Transport failed. Bob's register, if he held one, is returned untouched.
    #[error("{role} in phase {phase}: {source}")]
    Transport {
        role: Role,
        phase: Phase,
        source: TransportError,
        bob_register: Option<Box<StateVector>>,
    },
}

/// Alice: holds `X1..Xn, A1..An`, measures, sends the outcome.
#[derive(Debug)]
pub struct Alice {
    phase: Phase,
    measured: Option<MeasurementResult>,
}

impl Default for Alice {
    fn default() -> Self {
        Self::new()
    }
}

impl Alice {
    pub fn new() -> Self {
        Self {
            phase: Phase::Ready,
            measured: None,
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    fn expect(&self, phase: Phase, action: &'static str) -> Result<(), SessionError> {
        if self.phase != phase {
            return Err(SessionError::IllegalTransition {
                role: Role::Alice,
                phase: self.phase,
                action,
            });
        }
        Ok(())
    }

    /// Measures her qudits. The returned state is what Bob's qudits collapse
    /// to; it reaches him physically, not over the pipe.
    pub fn measure<R: Rng + ?Sized>(
        &mut self,
        setup: &Setup,
        rng: &mut R,
    ) -> Result<StateVector, SessionError> {
        self.expect(Phase::Ready, "measure")?;
        let result = setup.alice_measure(rng)?;
        let collapsed = result.post_state.clone();
        self.measured = Some(result);
        self.phase = Phase::Measured;
        Ok(collapsed)
    }

    pub fn send<P: BytePipe + ?Sized>(
        &mut self,
        d: usize,
        pipe: &mut P,
    ) -> Result<(), SessionError> {
        self.expect(Phase::Measured, "send")?;
        let outcome = &self.measured.as_ref().expect("measured").outcome;
        let msg = ClassicalMessage::from_outcome(d, outcome)?;
        let frame = encode_message(&msg).map_err(|source| SessionError::Frame {
            role: Role::Alice,
            phase: self.phase,
            source,
        })?;
        pipe.send(frame).map_err(|source| SessionError::Transport {
            role: Role::Alice,
            phase: self.phase,
            source,
            bob_register: None,
        })?;
        self.phase = Phase::Sent;
        Ok(())
    }

    pub fn finish(&mut self) -> Result<MeasurementResult, SessionError> {
        self.expect(Phase::Sent, "finish")?;
        self.phase = Phase::Done;
        Ok(self.measured.take().expect("measured"))
    }
}

/// Bob: holds `B1..Bn`, pre-rotates the channel if needed, waits for the
/// outcome and corrects.
#[derive(Debug)]
pub struct Bob {
    phase: Phase,
    prerotated: bool,
    register: Option<StateVector>,
    message: Option<ClassicalMessage>,
}

impl Default for Bob {
    fn default() -> Self {
        Self::new()
    }
}

impl Bob {
    pub fn new() -> Self {
        Self {
            phase: Phase::Ready,
            prerotated: false,
            register: None,
            message: None,
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn register(&self) -> Option<&StateVector> {
        self.register.as_ref()
    }

    fn expect(&self, phase: Phase, action: &'static str) -> Result<(), SessionError> {
        if self.phase != phase {
            return Err(SessionError::IllegalTransition {
                role: Role::Bob,
                phase: self.phase,
                action,
            });
        }
        Ok(())
    }

    /// Local channel normalization before teleportation starts.
    pub fn prerotate(&mut self, setup: &mut Setup) -> Result<(), SessionError> {
        self.expect(Phase::Ready, "pre-rotate")?;
        setup.bob_prerotate()?;
        self.prerotated = true;
        Ok(())
    }

    /// Takes custody of his qudits after Alice's measurement collapsed them.
    pub fn hold(&mut self, register: StateVector) -> Result<(), SessionError> {
        self.expect(Phase::Ready, "take his register")?;
        self.register = Some(register);
        Ok(())
    }

    pub fn receive<P: BytePipe + ?Sized>(
        &mut self,
        pipe: &mut P,
    ) -> Result<&ClassicalMessage, SessionError> {
        self.expect(Phase::Ready, "receive")?;
        let frame = match pipe.recv() {
            Ok(frame) => frame,
            Err(source) => {
                return Err(SessionError::Transport {
                    role: Role::Bob,
                    phase: self.phase,
                    source,
                    bob_register: self.register.clone().map(Box::new),
                })
            }
        };
        let msg = decode_message(&frame).map_err(|source| SessionError::Frame {
            role: Role::Bob,
            phase: self.phase,
            source,
        })?;
        Ok(self.message.insert(msg))
    }

    pub fn correct(&mut self) -> Result<&StateVector, SessionError> {
        self.expect(Phase::Ready, "correct")?;
        let (Some(register), Some(msg)) = (&self.register, &self.message) else {
            return Err(SessionError::IllegalTransition {
                role: Role::Bob,
                phase: self.phase,
                action: "correct without register and message",
            });
        };
        let corrected = apply_corrections(register, &msg.outcome(), msg.d())?;
        self.phase = Phase::Corrected;
        Ok(self.register.insert(corrected))
    }

    pub fn finish(&mut self) -> Result<(ClassicalMessage, StateVector), SessionError> {
        self.expect(Phase::Corrected, "finish")?;
        self.phase = Phase::Done;
        Ok((
            self.message.take().expect("received"),
            self.register.take().expect("corrected"),
        ))
    }
}

/// Runs one teleportation through both parties over an in-memory pipe,
/// single-threaded. Produces the same transcript as
/// [`crate::protocols::run`] for the same seed.
pub fn run_session(
    input: &StateVector,
    spec: &ChannelSpec,
    protocol: Protocol,
    seed: u64,
) -> Result<Transcript, SessionError> {
    let (mut alice_end, mut bob_end) = duplex();
    run_session_over(input, spec, protocol, seed, &mut alice_end, &mut bob_end)
}

/// As [`run_session`] with caller-supplied pipe ends. Alice's end is dropped
/// once she has sent, so a lost frame surfaces as a closed pipe on Bob's side.
pub fn run_session_over<PA: BytePipe, PB: BytePipe>(
    input: &StateVector,
    spec: &ChannelSpec,
    protocol: Protocol,
    seed: u64,
    alice_pipe: PA,
    mut bob_pipe: PB,
) -> Result<Transcript, SessionError> {
    let mut setup = Setup::shared(protocol, input, spec)?;
    let mut alice = Alice::new();
    let mut bob = Bob::new();
    let mut rng = rng_stream(seed);

    bob.prerotate(&mut setup)?;
    let collapsed = alice.measure(&setup, &mut rng)?;
    bob.hold(collapsed)?;
    {
        let mut alice_pipe = alice_pipe;
        alice.send(spec.d, &mut alice_pipe)?;
    }
    bob.receive(&mut bob_pipe)?;
    bob.correct()?;
    let measured = alice.finish()?;
    let (message, post) = bob.finish()?;
    Ok(finish(setup, measured, message, post, seed)?)
}

/// Alice and Bob on separate threads. The collapsed register is handed to
/// Bob over its own channel; the outcome travels only over the byte pipe.
pub fn run_session_threaded(
    input: &StateVector,
    spec: &ChannelSpec,
    protocol: Protocol,
    seed: u64,
) -> Result<Transcript, SessionError> {
    let mut setup = Setup::shared(protocol, input, spec)?;
    let mut bob = Bob::new();
    bob.prerotate(&mut setup)?;

    let (mut alice_end, mut bob_end) = duplex();
    let (collapse_tx, collapse_rx) = mpsc::channel::<StateVector>();
    let d = spec.d;

    let (alice_result, bob_result) = std::thread::scope(|scope| {
        let setup_ref = &setup;
        let alice_thread = scope.spawn(move || -> Result<MeasurementResult, SessionError> {
            let mut alice = Alice::new();
            let mut rng = rng_stream(seed);
            let collapsed = alice.measure(setup_ref, &mut rng)?;
            // Bob may already have given up; the send result does not matter.
            let _ = collapse_tx.send(collapsed);
            alice.send(d, &mut alice_end)?;
            drop(alice_end);
            alice.finish()
        });
        let bob_result = (|| -> Result<(ClassicalMessage, StateVector), SessionError> {
            if let Ok(collapsed) = collapse_rx.recv() {
                bob.hold(collapsed)?;
            }
            bob.receive(&mut bob_end)?;
            bob.correct()?;
            bob.finish()
        })();
        (
            alice_thread.join().expect("alice thread panicked"),
            bob_result,
        )
    });
    let measured = alice_result?;
    let (message, post) = bob_result?;
    Ok(finish(setup, measured, message, post, seed)?)
}
