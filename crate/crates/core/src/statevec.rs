//! Dense state vectors and operators over registers of d-level qudits.
//!
//! Basis indices are big-endian in the qudit digits: for a register of `m`
//! qudits, index `x = sum_t j_t * d^(m-1-t)`, so qudit 0 is the most
//! significant digit.

use std::fmt::Write as _;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default tolerance for "equals" comparisons between states and operators.
pub const TOL: f64 = 1e-10;

pub(crate) fn checked_pow(d: usize, m: usize) -> Result<usize> {
    u32::try_from(m)
        .ok()
        .and_then(|m| d.checked_pow(m))
        .ok_or_else(|| Error::Shape(format!("{d}^{m} overflows")))
}

/// Big-endian digits of `index` in base `d`, `m` digits wide.
pub fn digits(mut index: usize, d: usize, m: usize) -> Vec<usize> {
    let mut out = vec![0; m];
    for slot in out.iter_mut().rev() {
        *slot = index % d;
        index /= d;
    }
    out
}

/// Inverse of [`digits`].
pub fn index_of(digits: &[usize], d: usize) -> usize {
    digits.iter().fold(0, |acc, &j| acc * d + j)
}

/// Square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    dim: usize,
    data: Vec<C64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |r, c| {
            if r == c {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(f(r, c));
            }
        }
        Self { dim, data }
    }

    /// Builds a matrix from row-major data; `data.len()` must be a perfect square.
    pub fn from_row_major(data: Vec<C64>) -> Result<Self> {
        let dim = (data.len() as f64).sqrt().round() as usize;
        if dim * dim != data.len() || dim == 0 {
            return Err(Error::Shape(format!(
                "{} entries do not form a square matrix",
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.dim..(r + 1) * self.dim]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self[(c, r)])
    }

    pub fn matmul(&self, rhs: &Matrix) -> Result<Self> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch(self.dim, rhs.dim));
        }
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self[(r, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..n {
                    out.data[r * n + c] += a * rhs.data[k * n + c];
                }
            }
        }
        Ok(out)
    }

    /// Kronecker product `self ⊗ rhs`; `self` indexes the most significant block.
    pub fn kron(&self, rhs: &Matrix) -> Self {
        let (a, b) = (self.dim, rhs.dim);
        Self::from_fn(a * b, |r, c| self[(r / b, c / b)] * rhs[(r % b, c % b)])
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry-wise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        if self.dim != other.dim {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |M†M - I|`.
    pub fn unitarity_deviation(&self) -> f64 {
        let gram = self.adjoint().matmul(self).expect("same dimension");
        gram.max_abs_diff(&Matrix::identity(self.dim))
    }

    /// Distance to `other` after removing a global phase.
    ///
    /// The phase is taken from the first entry (row-major) where `other` is
    /// nonzero, as the ratio `self / other` there. If the moduli differ at that
    /// entry the result is still a valid (large) distance.
    pub fn distance_up_to_phase(&self, other: &Matrix) -> f64 {
        if self.dim != other.dim {
            return f64::INFINITY;
        }
        let Some(pos) = other.data.iter().position(|z| z.norm() > 1e-12) else {
            return self.max_abs_diff(other);
        };
        let ratio = self.data[pos] / other.data[pos];
        if ratio.norm() < 1e-12 {
            return self.max_abs_diff(other);
        }
        let phase = ratio / ratio.norm();
        self.max_abs_diff(&other.scale(phase))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = C64;

    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.dim + c]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.dim + c]
    }
}

/// A square operator on `arity` qudits of dimension `d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalOperator {
    d: usize,
    arity: usize,
    matrix: Matrix,
}

impl LocalOperator {
    pub fn new(d: usize, arity: usize, matrix: Matrix) -> Result<Self> {
        if d < 2 {
            return Err(Error::Dimension(d));
        }
        if arity == 0 {
            return Err(Error::EmptyRegister);
        }
        let side = checked_pow(d, arity)?;
        if matrix.dim() != side {
            return Err(Error::Shape(format!(
                "operator on {arity} qudits of dimension {d} needs side {side}, got {}",
                matrix.dim()
            )));
        }
        Ok(Self { d, arity, matrix })
    }

    /// As [`LocalOperator::new`], additionally rejecting non-unitary matrices.
    pub fn unitary(d: usize, arity: usize, matrix: Matrix) -> Result<Self> {
        let op = Self::new(d, arity, matrix)?;
        let dev = op.matrix.unitarity_deviation();
        if dev > TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(op)
    }

    pub fn identity(d: usize, arity: usize) -> Result<Self> {
        Self::new(d, arity, Matrix::identity(checked_pow(d, arity)?))
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self {
            d: self.d,
            arity: self.arity,
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.matrix.unitarity_deviation() <= tol
    }
}

/// Offsets of every digit assignment of `targets` (in target order) within a
/// big-endian index over `m` qudits, plus the base indices where all target
/// digits are zero.
pub(crate) fn target_layout(d: usize, m: usize, targets: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let strides: Vec<usize> = targets.iter().map(|&t| d.pow((m - 1 - t) as u32)).collect();
    let group = d.pow(targets.len() as u32);
    let offsets = (0..group)
        .map(|q| {
            digits(q, d, targets.len())
                .iter()
                .zip(&strides)
                .map(|(j, s)| j * s)
                .sum()
        })
        .collect();
    let total = d.pow(m as u32);
    let bases = (0..total)
        .filter(|x| strides.iter().all(|s| (x / s) % d == 0))
        .collect();
    (offsets, bases)
}

pub(crate) fn check_positions(positions: &[usize], m: usize) -> Result<()> {
    for (i, &p) in positions.iter().enumerate() {
        if p >= m {
            return Err(Error::PositionOutOfRange { pos: p, m });
        }
        if positions[..i].contains(&p) {
            return Err(Error::RepeatedPosition(p));
        }
    }
    Ok(())
}

/// Normalized pure state of `m` qudits of dimension `d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    d: usize,
    m: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// Normalizes `amps` and wraps them as a state of `m` qudits.
    pub fn new(d: usize, m: usize, amps: Vec<C64>) -> Result<Self> {
        let raw = Self::unnormalized(d, m, amps)?;
        let norm = raw.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroVector);
        }
        Ok(raw.scaled(C64::new(1.0 / norm, 0.0)))
    }

    /// Shape-checked but not normalized. Only for projection residues that
    /// never leave the crate.
    pub(crate) fn unnormalized(d: usize, m: usize, amps: Vec<C64>) -> Result<Self> {
        if d < 2 {
            return Err(Error::Dimension(d));
        }
        if m == 0 {
            return Err(Error::EmptyRegister);
        }
        let expected = checked_pow(d, m)?;
        if amps.len() != expected {
            return Err(Error::Length {
                expected,
                actual: amps.len(),
            });
        }
        Ok(Self { d, m, amps })
    }

    pub fn from_real(d: usize, m: usize, amps: &[f64]) -> Result<Self> {
        Self::new(d, m, amps.iter().map(|&a| C64::new(a, 0.0)).collect())
    }

    /// Computational basis state `|j_0 j_1 ... j_{m-1}>`.
    pub fn basis(d: usize, digits: &[usize]) -> Result<Self> {
        if let Some(&digit) = digits.iter().find(|&&j| j >= d) {
            return Err(Error::Digit { digit, d });
        }
        if digits.is_empty() {
            return Err(Error::EmptyRegister);
        }
        let mut amps = vec![C64::new(0.0, 0.0); checked_pow(d, digits.len())?];
        amps[index_of(digits, d)] = C64::new(1.0, 0.0);
        Self::new(d, digits.len(), amps)
    }

    /// Complex standard Gaussian amplitudes, normalized. Deterministic per seed.
    pub fn random(d: usize, m: usize, seed: u64) -> Result<Self> {
        if d < 2 {
            return Err(Error::Dimension(d));
        }
        if m == 0 {
            return Err(Error::EmptyRegister);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amps = (0..checked_pow(d, m)?)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                C64::new(re, im)
            })
            .collect();
        Self::new(d, m, amps)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub(crate) fn scaled(mut self, factor: C64) -> Self {
        for z in &mut self.amps {
            *z *= factor;
        }
        self
    }

    /// Multiplies every amplitude by `e^{i phase}`.
    pub fn with_global_phase(self, phase: f64) -> Self {
        self.scaled(C64::from_polar(1.0, phase))
    }

    /// `self ⊗ rhs`, with `self`'s qudits first.
    pub fn tensor(&self, rhs: &StateVector) -> Result<Self> {
        if self.d != rhs.d {
            return Err(Error::DimensionMismatch(self.d, rhs.d));
        }
        let mut amps = Vec::with_capacity(self.amps.len() * rhs.amps.len());
        for a in &self.amps {
            for b in &rhs.amps {
                amps.push(a * b);
            }
        }
        checked_pow(self.d, self.m + rhs.m)?;
        Ok(Self {
            d: self.d,
            m: self.m + rhs.m,
            amps,
        })
    }

    /// Applies `op` to the qudits in `targets`; `targets[0]` is the operator's
    /// most significant digit. Identity on every other qudit.
    pub fn apply_local(&self, op: &LocalOperator, targets: &[usize]) -> Result<Self> {
        if op.d != self.d {
            return Err(Error::DimensionMismatch(op.d, self.d));
        }
        if op.arity != targets.len() {
            return Err(Error::Arity {
                arity: op.arity,
                targets: targets.len(),
            });
        }
        check_positions(targets, self.m)?;

        let (offsets, bases) = target_layout(self.d, self.m, targets);
        let group = offsets.len();
        let mut out = vec![C64::new(0.0, 0.0); self.amps.len()];
        let mut buf = vec![C64::new(0.0, 0.0); group];
        for base in bases {
            for (slot, off) in buf.iter_mut().zip(&offsets) {
                *slot = self.amps[base + off];
            }
            for (r, off) in offsets.iter().enumerate() {
                out[base + off] = op.matrix.row(r).iter().zip(&buf).map(|(m, a)| m * a).sum();
            }
        }
        Ok(Self {
            d: self.d,
            m: self.m,
            amps: out,
        })
    }

    /// `sum_x conj(self[x]) * rhs[x]`.
    pub fn inner(&self, rhs: &StateVector) -> Result<C64> {
        if self.d != rhs.d || self.m != rhs.m {
            return Err(Error::Shape(format!(
                "inner product of (d={}, m={}) and (d={}, m={})",
                self.d, self.m, rhs.d, rhs.m
            )));
        }
        Ok(self
            .amps
            .iter()
            .zip(&rhs.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|self><self|`.
    pub fn outer(&self) -> Matrix {
        Matrix::from_fn(self.amps.len(), |r, c| self.amps[r] * self.amps[c].conj())
    }

    /// Reduced density matrix over `keep` (in the listed order), tracing out
    /// every other qudit.
    pub fn reduced_density(&self, keep: &[usize]) -> Result<Matrix> {
        check_positions(keep, self.m)?;
        if keep.is_empty() {
            return Err(Error::EmptyRegister);
        }
        let (offsets, bases) = target_layout(self.d, self.m, keep);
        let side = offsets.len();
        let mut rho = Matrix::zeros(side);
        for base in bases {
            for (r, ro) in offsets.iter().enumerate() {
                let a = self.amps[base + ro];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for (c, co) in offsets.iter().enumerate() {
                    rho[(r, c)] += a * self.amps[base + co].conj();
                }
            }
        }
        Ok(rho)
    }

    /// Text form: `"d m"` on the first line, then one `"re im"` line per
    /// amplitude in index order.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.d, self.m);
        for z in &self.amps {
            let _ = writeln!(out, "{} {}", z.re, z.im);
        }
        out
    }

    /// Parses the text form written by [`StateVector::to_text`]; the result is
    /// renormalized.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty state file".into()))?;
        let mut fields = header.split_whitespace();
        let parse_usize = |s: Option<&str>, what: &str| -> Result<usize> {
            s.ok_or_else(|| Error::Parse(format!("missing {what} in header")))?
                .parse()
                .map_err(|e| Error::Parse(format!("bad {what}: {e}")))
        };
        let d = parse_usize(fields.next(), "d")?;
        let m = parse_usize(fields.next(), "m")?;
        if fields.next().is_some() {
            return Err(Error::Parse("header must be exactly \"d m\"".into()));
        }
        let amps = lines
            .enumerate()
            .map(|(i, line)| {
                let parts: Vec<&str> = line.split_whitespace().collect();
                let [re, im] = parts[..] else {
                    return Err(Error::Parse(format!(
                        "amplitude line {}: expected \"re im\"",
                        i + 2
                    )));
                };
                let re: f64 = re
                    .parse()
                    .map_err(|e| Error::Parse(format!("amplitude line {}: {e}", i + 2)))?;
                let im: f64 = im
                    .parse()
                    .map_err(|e| Error::Parse(format!("amplitude line {}: {e}", i + 2)))?;
                Ok(C64::new(re, im))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(d, m, amps)
    }
}
