//! Quantum channels shared between Alice and Bob.
//!
//! A channel over `n` pairs lives on `2n` qudits laid out `A1 B1 A2 B2 ... An Bn`.
//! Three families are supported:
//!
//! * [`ChannelKind::Tps`]: a tensor product of `n` generalized Bell pairs
//!   `|Φ_{k_i l_i}>`, one per pair (all `(0,0)` by default).
//! * [`ChannelKind::Ges`]: the product channel with a global unitary `Υ`
//!   applied to the A qudits.
//! * [`ChannelKind::Ges2`]: additionally a global unitary `Ω` on the B qudits.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statevec::{checked_pow, LocalOperator, Matrix, StateVector, C64, TOL};
use crate::weyl::{gbs_state, BellLabel};

/// Largest matrix side [`random_global_unitary`] will generate.
pub const DEFAULT_UNITARY_CAP: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Tps,
    Ges,
    Ges2,
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChannelKind::Tps => "tps",
            ChannelKind::Ges => "ges",
            ChannelKind::Ges2 => "ges2",
        })
    }
}

/// A unitary on `n` qudits with a free-form provenance tag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalUnitary {
    op: LocalOperator,
    tag: String,
}

impl GlobalUnitary {
    pub fn new(d: usize, n: usize, matrix: Matrix, tag: impl Into<String>) -> Result<Self> {
        Ok(Self {
            op: LocalOperator::unitary(d, n, matrix)?,
            tag: tag.into(),
        })
    }

    pub fn identity(d: usize, n: usize) -> Result<Self> {
        Ok(Self {
            op: LocalOperator::identity(d, n)?,
            tag: "identity".into(),
        })
    }

    pub fn d(&self) -> usize {
        self.op.d()
    }

    pub fn n(&self) -> usize {
        self.op.arity()
    }

    pub fn matrix(&self) -> &Matrix {
        self.op.matrix()
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn operator(&self) -> &LocalOperator {
        &self.op
    }
}

/// Positions of `A1..An` inside the channel layout.
pub fn alice_channel_positions(n: usize) -> Vec<usize> {
    (0..n).map(|i| 2 * i).collect()
}

/// Positions of `B1..Bn` inside the channel layout.
pub fn bob_channel_positions(n: usize) -> Vec<usize> {
    (0..n).map(|i| 2 * i + 1).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub d: usize,
    pub n: usize,
    pub kind: ChannelKind,
    pub offsets: Vec<BellLabel>,
    pub upsilon: Option<GlobalUnitary>,
    pub omega: Option<GlobalUnitary>,
}

impl ChannelSpec {
    pub fn tps(d: usize, n: usize) -> Self {
        Self {
            d,
            n,
            kind: ChannelKind::Tps,
            offsets: vec![BellLabel::ZERO; n],
            upsilon: None,
            omega: None,
        }
    }

    pub fn ges(d: usize, n: usize, upsilon: GlobalUnitary) -> Self {
        Self {
            kind: ChannelKind::Ges,
            upsilon: Some(upsilon),
            ..Self::tps(d, n)
        }
    }

    pub fn ges2(d: usize, n: usize, upsilon: GlobalUnitary, omega: GlobalUnitary) -> Self {
        Self {
            kind: ChannelKind::Ges2,
            upsilon: Some(upsilon),
            omega: Some(omega),
            ..Self::tps(d, n)
        }
    }

    pub fn with_offsets(mut self, offsets: Vec<BellLabel>) -> Self {
        self.offsets = offsets;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::Dimension(self.d));
        }
        if self.n == 0 {
            return Err(Error::EmptyRegister);
        }
        if self.offsets.len() != self.n {
            return Err(Error::Channel(format!(
                "{} offsets given for {} pairs",
                self.offsets.len(),
                self.n
            )));
        }
        for label in &self.offsets {
            label.validate(self.d)?;
        }
        let check = |u: &Option<GlobalUnitary>, name: &str, required: bool| -> Result<()> {
            match (u, required) {
                (None, true) => Err(Error::Channel(format!(
                    "{} channel requires {name}",
                    self.kind
                ))),
                (Some(_), false) => Err(Error::Channel(format!(
                    "{} channel takes no {name}",
                    self.kind
                ))),
                (Some(u), true) if u.d() != self.d || u.n() != self.n => {
                    Err(Error::Channel(format!(
                        "{name} acts on {} qudits of dimension {}, channel has {} of dimension {}",
                        u.n(),
                        u.d(),
                        self.n,
                        self.d
                    )))
                }
                _ => Ok(()),
            }
        };
        let (needs_upsilon, needs_omega) = match self.kind {
            ChannelKind::Tps => (false, false),
            ChannelKind::Ges => (true, false),
            ChannelKind::Ges2 => (true, true),
        };
        check(&self.upsilon, "upsilon", needs_upsilon)?;
        check(&self.omega, "omega", needs_omega)
    }
}

/// The `2n`-qudit channel state in layout `A1 B1 ... An Bn`.
pub fn build_channel(spec: &ChannelSpec) -> Result<StateVector> {
    spec.validate()?;
    let mut state = gbs_state(spec.d, spec.offsets[0])?;
    for &label in &spec.offsets[1..] {
        state = state.tensor(&gbs_state(spec.d, label)?)?;
    }
    if let Some(upsilon) = &spec.upsilon {
        state = state.apply_local(upsilon.operator(), &alice_channel_positions(spec.n))?;
    }
    if let Some(omega) = &spec.omega {
        state = state.apply_local(omega.operator(), &bob_channel_positions(spec.n))?;
    }
    Ok(state)
}

/// The two-qubit global unitary with columns
/// `|00> -> cosθ|00> + sinθ|11>`, `|11> -> -sinθ|00> + cosθ|11>`,
/// `|01> -> -sinφ|01> + cosφ|10>`, `|10> -> cosφ|01> + sinφ|10>`.
pub fn yeo_chua_upsilon(theta: f64, phi: f64) -> GlobalUnitary {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let mut m = Matrix::zeros(4);
    m[(0, 0)] = C64::new(ct, 0.0);
    m[(3, 0)] = C64::new(st, 0.0);
    m[(0, 3)] = C64::new(-st, 0.0);
    m[(3, 3)] = C64::new(ct, 0.0);
    m[(1, 1)] = C64::new(-sp, 0.0);
    m[(2, 1)] = C64::new(cp, 0.0);
    m[(1, 2)] = C64::new(cp, 0.0);
    m[(2, 2)] = C64::new(sp, 0.0);
    GlobalUnitary::new(2, 2, m, format!("yeo-chua({theta},{phi})"))
        .expect("real rotation blocks are orthogonal")
}

pub fn random_global_unitary(d: usize, n: usize, seed: u64) -> Result<GlobalUnitary> {
    random_global_unitary_capped(d, n, seed, DEFAULT_UNITARY_CAP)
}

/// Haar-random unitary on `n` qudits: Gaussian matrix, columns orthonormalized
/// by Gram-Schmidt (with one re-orthogonalization pass), which leaves the
/// implicit R diagonal positive real.
pub fn random_global_unitary_capped(
    d: usize,
    n: usize,
    seed: u64,
    cap: usize,
) -> Result<GlobalUnitary> {
    if d < 2 {
        return Err(Error::Dimension(d));
    }
    if n == 0 {
        return Err(Error::EmptyRegister);
    }
    let dim = checked_pow(d, n)?;
    if dim > cap {
        return Err(Error::Cap { dim, cap });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gauss = Matrix::from_fn(dim, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        C64::new(re, im) / std::f64::consts::SQRT_2
    });

    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut v: Vec<C64> = (0..dim).map(|r| gauss[(r, j)]).collect();
        for _pass in 0..2 {
            for q in &cols {
                let proj: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, qx) in v.iter_mut().zip(q) {
                    *x -= proj * qx;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-300 {
            return Err(Error::Shape("degenerate Gaussian sample".into()));
        }
        for x in &mut v {
            *x /= norm;
        }
        cols.push(v);
    }
    let q = Matrix::from_fn(dim, |r, c| cols[c][r]);
    GlobalUnitary::new(d, n, q, format!("haar({seed})"))
}

/// Tensor product of single-qudit unitaries, `parts[0]` acting on the first qudit.
pub fn local_product_unitary(parts: &[LocalOperator]) -> Result<GlobalUnitary> {
    let first = parts.first().ok_or(Error::EmptyRegister)?;
    let d = first.d();
    let mut m = Matrix::identity(1);
    for part in parts {
        if part.d() != d {
            return Err(Error::DimensionMismatch(d, part.d()));
        }
        if part.arity() != 1 {
            return Err(Error::Arity {
                arity: part.arity(),
                targets: 1,
            });
        }
        if !part.is_unitary(TOL) {
            return Err(Error::NotUnitary(part.matrix().unitarity_deviation()));
        }
        m = m.kron(part.matrix());
    }
    GlobalUnitary::new(d, parts.len(), m, "local-product")
}

/// Textual recipe for a global unitary: `identity`, `haar:SEED` or
/// `yeo-chua:THETA,PHI`.
#[derive(Clone, Debug, PartialEq)]
pub enum UnitaryGenerator {
    Identity,
    Haar(u64),
    YeoChua(f64, f64),
}

impl UnitaryGenerator {
    pub fn build(&self, d: usize, n: usize) -> Result<GlobalUnitary> {
        match *self {
            UnitaryGenerator::Identity => GlobalUnitary::identity(d, n),
            UnitaryGenerator::Haar(seed) => random_global_unitary(d, n, seed),
            UnitaryGenerator::YeoChua(theta, phi) => {
                if (d, n) != (2, 2) {
                    return Err(Error::Channel(format!(
                        "yeo-chua unitary needs d=2, n=2 (got d={d}, n={n})"
                    )));
                }
                Ok(yeo_chua_upsilon(theta, phi))
            }
        }
    }
}

impl FromStr for UnitaryGenerator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("unknown unitary generator {s:?}"));
        match s.split_once(':') {
            None if s == "identity" => Ok(UnitaryGenerator::Identity),
            Some(("haar", seed)) => seed
                .parse()
                .map(UnitaryGenerator::Haar)
                .map_err(|e| Error::Parse(format!("haar seed {seed:?}: {e}"))),
            Some(("yeo-chua", angles)) => {
                let (theta, phi) = angles.split_once(',').ok_or_else(bad)?;
                let parse = |v: &str| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("yeo-chua angle {v:?}: {e}")))
                };
                Ok(UnitaryGenerator::YeoChua(parse(theta)?, parse(phi)?))
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for UnitaryGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnitaryGenerator::Identity => f.write_str("identity"),
            UnitaryGenerator::Haar(seed) => write!(f, "haar:{seed}"),
            UnitaryGenerator::YeoChua(theta, phi) => write!(f, "yeo-chua:{theta},{phi}"),
        }
    }
}

/// Channel descriptor as used on the command line:
/// `tps`, `ges:GEN`, `ges2:GEN:GEN` where `GEN` is a [`UnitaryGenerator`].
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelDescriptor {
    pub kind: ChannelKind,
    pub upsilon: Option<UnitaryGenerator>,
    pub omega: Option<UnitaryGenerator>,
}

impl ChannelDescriptor {
    pub fn build(&self, d: usize, n: usize, offsets: Vec<BellLabel>) -> Result<ChannelSpec> {
        let upsilon = self.upsilon.as_ref().map(|g| g.build(d, n)).transpose()?;
        let omega = self.omega.as_ref().map(|g| g.build(d, n)).transpose()?;
        let spec = ChannelSpec {
            d,
            n,
            kind: self.kind,
            offsets,
            upsilon,
            omega,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl FromStr for ChannelDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "tps" {
            return Ok(Self {
                kind: ChannelKind::Tps,
                upsilon: None,
                omega: None,
            });
        }
        if let Some(rest) = s.strip_prefix("ges2:") {
            // Split between the two generators: yeo-chua and haar both carry
            // exactly one ':' of their own, identity carries none.
            let tokens: Vec<&str> = rest.split(':').collect();
            let first_len = match tokens.first() {
                Some(&"identity") => 1,
                Some(_) => 2,
                None => 0,
            };
            if tokens.len() <= first_len {
                return Err(Error::Parse(format!(
                    "ges2 channel needs two generators: {s:?}"
                )));
            }
            let upsilon = tokens[..first_len].join(":").parse()?;
            let omega = tokens[first_len..].join(":").parse()?;
            return Ok(Self {
                kind: ChannelKind::Ges2,
                upsilon: Some(upsilon),
                omega: Some(omega),
            });
        }
        if let Some(rest) = s.strip_prefix("ges:") {
            return Ok(Self {
                kind: ChannelKind::Ges,
                upsilon: Some(rest.parse()?),
                omega: None,
            });
        }
        Err(Error::Parse(format!("unknown channel descriptor {s:?}")))
    }
}

impl fmt::Display for ChannelDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        for g in self.upsilon.iter().chain(&self.omega) {
            write!(f, ":{g}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weyl::weyl_v;

    #[test]
    fn qubit_tps_is_bell_pair() {
        let s = build_channel(&ChannelSpec::tps(2, 1)).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let want = [h, 0.0, 0.0, h];
        assert!(s
            .amps()
            .iter()
            .zip(want)
            .all(|(a, b)| (a - C64::new(b, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn identity_upsilon_matches_tps() {
        let tps = build_channel(&ChannelSpec::tps(2, 2)).unwrap();
        let ges = build_channel(&ChannelSpec::ges(
            2,
            2,
            GlobalUnitary::identity(2, 2).unwrap(),
        ))
        .unwrap();
        assert_eq!(tps, ges);
    }

    #[test]
    fn spec_validation() {
        let mut spec = ChannelSpec::tps(2, 2);
        spec.kind = ChannelKind::Ges;
        assert!(matches!(build_channel(&spec), Err(Error::Channel(_))));
        let spec = ChannelSpec::ges(3, 2, GlobalUnitary::identity(2, 2).unwrap());
        assert!(matches!(build_channel(&spec), Err(Error::Channel(_))));
        let spec = ChannelSpec::tps(2, 2).with_offsets(vec![BellLabel::ZERO]);
        assert!(matches!(build_channel(&spec), Err(Error::Channel(_))));
        let spec = ChannelSpec::tps(2, 1).with_offsets(vec![BellLabel::new(2, 0)]);
        assert_eq!(build_channel(&spec), Err(Error::Digit { digit: 2, d: 2 }));
    }

    #[test]
    fn yeo_chua_substitution() {
        let u = yeo_chua_upsilon(0.0, std::f64::consts::FRAC_PI_2);
        let diag = Matrix::from_fn(4, |r, c| match (r, c) {
            (1, 1) => C64::new(-1.0, 0.0),
            (r, c) if r == c => C64::new(1.0, 0.0),
            _ => C64::new(0.0, 0.0),
        });
        assert!(u.matrix().max_abs_diff(&diag) < 1e-15);
        assert!(u.matrix().unitarity_deviation() < 1e-12);
        for (t, p) in [(0.3, -1.2), (2.0, 0.1), (-0.7, 4.4)] {
            assert!(yeo_chua_upsilon(t, p).matrix().unitarity_deviation() < 1e-12);
        }
    }

    #[test]
    fn haar_unitarity_and_determinism() {
        for seed in 1..=10 {
            let u = random_global_unitary(2, 2, seed).unwrap();
            assert!(u.matrix().unitarity_deviation() <= 1e-12);
        }
        assert_eq!(
            random_global_unitary(3, 2, 5).unwrap(),
            random_global_unitary(3, 2, 5).unwrap()
        );
        assert_ne!(
            random_global_unitary(3, 2, 5).unwrap(),
            random_global_unitary(3, 2, 6).unwrap()
        );
        assert_eq!(
            random_global_unitary(2, 11, 1),
            Err(Error::Cap {
                dim: 2048,
                cap: 1024
            })
        );
    }

    #[test]
    fn local_product_kron() {
        let id = local_product_unitary(&[
            weyl_v(3, BellLabel::ZERO).unwrap(),
            weyl_v(3, BellLabel::ZERO).unwrap(),
        ])
        .unwrap();
        assert_eq!(id.matrix(), &Matrix::identity(9));
        assert_eq!(id.tag(), "local-product");

        // sigma_x ⊗ sigma_z written out by hand.
        let x = weyl_v(2, BellLabel::new(0, 1)).unwrap();
        let z = weyl_v(2, BellLabel::new(1, 0)).unwrap();
        let u = local_product_unitary(&[x, z]).unwrap();
        let want = [
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, -1.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, -1.0, 0.0, 0.0],
        ];
        let want = Matrix::from_fn(4, |r, c| C64::new(want[r][c], 0.0));
        assert!(u.matrix().max_abs_diff(&want) < 1e-15);

        let mixed = [
            weyl_v(2, BellLabel::ZERO).unwrap(),
            weyl_v(3, BellLabel::ZERO).unwrap(),
        ];
        assert_eq!(
            local_product_unitary(&mixed),
            Err(Error::DimensionMismatch(2, 3))
        );
    }

    #[test]
    fn descriptor_parsing() {
        let cases = [
            "tps",
            "ges:haar:7",
            "ges:yeo-chua:0.7,1.1",
            "ges:identity",
            "ges2:haar:3:haar:4",
            "ges2:identity:haar:4",
            "ges2:yeo-chua:0.5,0.25:identity",
        ];
        for case in cases {
            let parsed: ChannelDescriptor = case.parse().unwrap();
            assert_eq!(parsed.to_string(), case);
        }
        let d: ChannelDescriptor = "ges2:haar:3:haar:4".parse().unwrap();
        assert_eq!(d.upsilon, Some(UnitaryGenerator::Haar(3)));
        assert_eq!(d.omega, Some(UnitaryGenerator::Haar(4)));
        for bad in [
            "",
            "ges",
            "ges:",
            "ges:haar:x",
            "ges2:haar:3",
            "bell",
            "ges:yeo-chua:1",
        ] {
            assert!(bad.parse::<ChannelDescriptor>().is_err(), "{bad}");
        }
        let yc: ChannelDescriptor = "ges:yeo-chua:0.7,1.1".parse().unwrap();
        assert!(yc.build(3, 2, vec![BellLabel::ZERO; 2]).is_err());
        assert!(yc.build(2, 2, vec![BellLabel::ZERO; 2]).is_ok());
    }
}
