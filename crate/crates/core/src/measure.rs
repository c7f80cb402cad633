//! Projective measurement of qudit pairs in the product generalized-Bell
//! basis, and in a rotated basis `{Υ_A |Θ_labels>}` via pre-rotation.
//!
//! Every pair `(a, x)` is first rotated by [`bell_analyzer`], after which the
//! amplitude `<Φ_kl|_{ax} ψ>` sits at digits `(k, l)` of positions `(a, x)`.
//! Outcome probabilities and residual states are then plain slices of the
//! rotated vector.

use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channels::GlobalUnitary;
use crate::error::{Error, Result};
use crate::statevec::{check_positions, digits, index_of, target_layout, StateVector, C64};
use crate::weyl::{bell_analyzer, BellLabel};

/// One Bell label per measured pair.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Outcome {
    pub labels: Vec<BellLabel>,
}

impl Outcome {
    pub fn new(labels: Vec<BellLabel>) -> Self {
        Self { labels }
    }

    pub fn zero(n: usize) -> Self {
        Self::new(vec![BellLabel::ZERO; n])
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn validate(&self, d: usize, n: usize) -> Result<()> {
        if self.labels.len() != n {
            return Err(Error::Shape(format!(
                "outcome has {} labels, expected {n}",
                self.labels.len()
            )));
        }
        self.labels.iter().try_for_each(|l| l.validate(d))
    }

    /// Flat dit list `k1, l1, ..., kn, ln`.
    pub fn dits(&self) -> Vec<usize> {
        self.labels.iter().flat_map(|l| [l.k, l.l]).collect()
    }

    pub fn from_dits(dits: &[usize]) -> Result<Self> {
        if dits.is_empty() || !dits.len().is_multiple_of(2) {
            return Err(Error::Shape(format!(
                "{} dits do not form (k, l) pairs",
                dits.len()
            )));
        }
        Ok(Self::new(
            dits.chunks(2).map(|p| BellLabel::new(p[0], p[1])).collect(),
        ))
    }

    /// Position among the `d^{2n}` outcomes, pair 1 most significant.
    pub fn index(&self, d: usize) -> usize {
        index_of(&self.dits(), d)
    }

    pub fn from_index(index: usize, d: usize, n: usize) -> Self {
        Self::from_dits(&digits(index, d, 2 * n)).expect("2n digits")
    }

    pub fn all(d: usize, n: usize) -> impl Iterator<Item = Outcome> {
        (0..d.pow(2 * n as u32)).map(move |i| Outcome::from_index(i, d, n))
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dits: Vec<String> = self.dits().iter().map(ToString::to_string).collect();
        f.write_str(&dits.join(","))
    }
}

impl FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let dits = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::Parse(format!("dit {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_dits(&dits)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementResult {
    pub outcome: Outcome,
    pub probability: f64,
    /// Normalized state of the unmeasured qudits, in ascending position order.
    pub post_state: StateVector,
}

/// Squared weight of one outcome and the normalized residual. The residual
/// is `Err(ZeroProbability)` when the weight vanishes.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub probability: f64,
    pub residual: Result<StateVector>,
}

/// Exact probabilities of all `d^{2n}` outcomes, indexed by [`Outcome::index`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub d: usize,
    pub n: usize,
    pub probabilities: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn probability(&self, outcome: &Outcome) -> f64 {
        self.probabilities[outcome.index(self.d)]
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Outcome, f64)> + '_ {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(i, &p)| (Outcome::from_index(i, self.d, self.n), p))
    }

    /// Largest `|p - 1/d^{2n}|` over all outcomes.
    pub fn max_deviation_from_uniform(&self) -> f64 {
        let uniform = 1.0 / self.probabilities.len() as f64;
        self.probabilities
            .iter()
            .map(|p| (p - uniform).abs())
            .fold(0.0, f64::max)
    }
}

/// The joint state with every pair rotated into the Bell basis.
struct Analyzed {
    d: usize,
    n: usize,
    rotated: StateVector,
    /// Offset of each outcome (by index) inside a basis index.
    outcome_offsets: Vec<usize>,
    /// Indices with all measured digits zero, ascending; one per residual amplitude.
    rest_bases: Vec<usize>,
    rest_m: usize,
}

impl Analyzed {
    fn new(joint: &StateVector, pairs: &[(usize, usize)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyRegister);
        }
        let flat: Vec<usize> = pairs.iter().flat_map(|&(a, x)| [a, x]).collect();
        check_positions(&flat, joint.m())?;
        let d = joint.d();
        let analyzer = bell_analyzer(d)?;
        let mut rotated = joint.clone();
        for &(a, x) in pairs {
            rotated = rotated.apply_local(&analyzer, &[a, x])?;
        }
        let (outcome_offsets, rest_bases) = target_layout(d, joint.m(), &flat);
        Ok(Self {
            d,
            n: pairs.len(),
            rotated,
            outcome_offsets,
            rest_bases,
            rest_m: joint.m() - flat.len(),
        })
    }

    fn weight(&self, index: usize) -> f64 {
        let off = self.outcome_offsets[index];
        let amps = self.rotated.amps();
        self.rest_bases
            .iter()
            .map(|b| amps[b + off].norm_sqr())
            .sum()
    }

    fn distribution(&self) -> OutcomeDistribution {
        OutcomeDistribution {
            d: self.d,
            n: self.n,
            probabilities: (0..self.outcome_offsets.len())
                .map(|i| self.weight(i))
                .collect(),
        }
    }

    fn residual(&self, index: usize) -> Result<StateVector> {
        if self.rest_m == 0 {
            return Err(Error::EmptyRegister);
        }
        let off = self.outcome_offsets[index];
        let amps = self.rotated.amps();
        let raw: Vec<C64> = self.rest_bases.iter().map(|b| amps[b + off]).collect();
        match StateVector::new(self.d, self.rest_m, raw) {
            Err(Error::ZeroVector) => Err(Error::ZeroProbability),
            other => other,
        }
    }

    fn project(&self, outcome: &Outcome) -> Result<Projection> {
        outcome.validate(self.d, self.n)?;
        let index = outcome.index(self.d);
        let probability = self.weight(index);
        let residual = if probability > 0.0 {
            self.residual(index)
        } else {
            Err(Error::ZeroProbability)
        };
        Ok(Projection {
            probability,
            residual,
        })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<MeasurementResult> {
        let dist = self.distribution();
        let sampler = WeightedIndex::new(&dist.probabilities)
            .map_err(|e| Error::Shape(format!("cannot sample outcome distribution: {e}")))?;
        let index = sampler.sample(rng);
        Ok(MeasurementResult {
            outcome: Outcome::from_index(index, self.d, self.n),
            probability: dist.probabilities[index],
            post_state: self.residual(index)?,
        })
    }
}

/// Projects pair `i = (a, x)` onto `<Φ_{k_i l_i}|` for every pair.
pub fn project_outcome(
    joint: &StateVector,
    pairs: &[(usize, usize)],
    outcome: &Outcome,
) -> Result<Projection> {
    Analyzed::new(joint, pairs)?.project(outcome)
}

/// [`project_outcome`] for every outcome at once, indexed by [`Outcome::index`].
pub fn project_all(joint: &StateVector, pairs: &[(usize, usize)]) -> Result<Vec<Projection>> {
    let analyzed = Analyzed::new(joint, pairs)?;
    (0..analyzed.outcome_offsets.len())
        .map(|i| analyzed.project(&Outcome::from_index(i, analyzed.d, analyzed.n)))
        .collect()
}

pub fn outcome_distribution(
    joint: &StateVector,
    pairs: &[(usize, usize)],
) -> Result<OutcomeDistribution> {
    Ok(Analyzed::new(joint, pairs)?.distribution())
}

/// Draws one outcome from the exact distribution.
pub fn sample_product_phi<R: Rng + ?Sized>(
    joint: &StateVector,
    pairs: &[(usize, usize)],
    rng: &mut R,
) -> Result<MeasurementResult> {
    Analyzed::new(joint, pairs)?.sample(rng)
}

/// Splits `[A1..An, X1..Xn]` into the `(A_i, X_i)` pairs and undoes `Υ` on
/// the A qudits, which turns a measurement in `{Υ_A |Θ_labels>}` into a
/// product Bell measurement.
fn xi_frame(
    joint: &StateVector,
    alice_positions: &[usize],
    upsilon: &GlobalUnitary,
) -> Result<(StateVector, Vec<(usize, usize)>)> {
    if !alice_positions.len().is_multiple_of(2) || alice_positions.is_empty() {
        return Err(Error::Shape(format!(
            "expected 2n Alice positions, got {}",
            alice_positions.len()
        )));
    }
    let n = alice_positions.len() / 2;
    let (a_pos, x_pos) = alice_positions.split_at(n);
    if upsilon.n() != n {
        return Err(Error::Arity {
            arity: upsilon.n(),
            targets: n,
        });
    }
    let rotated = joint.apply_local(&upsilon.operator().adjoint(), a_pos)?;
    let pairs = a_pos.iter().copied().zip(x_pos.iter().copied()).collect();
    Ok((rotated, pairs))
}

/// Measures Alice's qudits in the basis `{Υ_A |Θ_labels>}`; the reported
/// outcome is the label of the element found.
pub fn measure_xi<R: Rng + ?Sized>(
    joint: &StateVector,
    alice_positions: &[usize],
    upsilon: &GlobalUnitary,
    rng: &mut R,
) -> Result<MeasurementResult> {
    let (rotated, pairs) = xi_frame(joint, alice_positions, upsilon)?;
    sample_product_phi(&rotated, &pairs, rng)
}

pub fn xi_outcome_distribution(
    joint: &StateVector,
    alice_positions: &[usize],
    upsilon: &GlobalUnitary,
) -> Result<OutcomeDistribution> {
    let (rotated, pairs) = xi_frame(joint, alice_positions, upsilon)?;
    outcome_distribution(&rotated, &pairs)
}

pub fn project_all_xi(
    joint: &StateVector,
    alice_positions: &[usize],
    upsilon: &GlobalUnitary,
) -> Result<Vec<Projection>> {
    let (rotated, pairs) = xi_frame(joint, alice_positions, upsilon)?;
    project_all(&rotated, &pairs)
}

pub fn project_xi(
    joint: &StateVector,
    alice_positions: &[usize],
    upsilon: &GlobalUnitary,
    outcome: &Outcome,
) -> Result<Projection> {
    let (rotated, pairs) = xi_frame(joint, alice_positions, upsilon)?;
    project_outcome(&rotated, &pairs, outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weyl::{gbs_state, phi00, weyl_v};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn overlap(a: &StateVector, b: &StateVector) -> f64 {
        a.inner(b).unwrap().norm()
    }

    #[test]
    fn outcome_text_and_index() {
        let o: Outcome = "2,1,0,2".parse().unwrap();
        assert_eq!(o.labels, vec![BellLabel::new(2, 1), BellLabel::new(0, 2)]);
        assert_eq!(o.to_string(), "2,1,0,2");
        assert_eq!(o.index(3), 2 * 27 + 9 + 2);
        assert_eq!(Outcome::from_index(o.index(3), 3, 2), o);
        assert!("1,2,3".parse::<Outcome>().is_err());
        assert_eq!(Outcome::all(2, 2).count(), 16);
    }

    #[test]
    fn basis_input_zero_outcome() {
        // |Λ> = |0> on X, channel Φ00 on (A, B): layout [X, A, B].
        let joint = StateVector::basis(2, &[0])
            .unwrap()
            .tensor(&phi00(2).unwrap())
            .unwrap();
        let p = project_outcome(&joint, &[(1, 0)], &Outcome::zero(1)).unwrap();
        assert!((p.probability - 0.25).abs() < 1e-12);
        assert!(overlap(&p.residual.unwrap(), &StateVector::basis(2, &[0]).unwrap()) > 1.0 - 1e-12);
    }

    #[test]
    fn residual_is_inverse_weyl_on_input() {
        let lam = StateVector::random(3, 1, 21).unwrap();
        let joint = lam.tensor(&phi00(3).unwrap()).unwrap();
        for label in BellLabel::all(3) {
            let p = project_outcome(&joint, &[(1, 0)], &Outcome::new(vec![label])).unwrap();
            assert!((p.probability - 1.0 / 9.0).abs() < 1e-12);
            let want = lam
                .apply_local(&weyl_v(3, label).unwrap().adjoint(), &[0])
                .unwrap();
            assert!(overlap(&p.residual.unwrap(), &want) > 1.0 - 1e-10);
        }
    }

    #[test]
    fn zero_probability_flagged() {
        // Pair (0,1) already in Φ00: every other label has weight zero.
        let joint = phi00(2)
            .unwrap()
            .tensor(&StateVector::random(2, 1, 3).unwrap())
            .unwrap();
        let p =
            project_outcome(&joint, &[(0, 1)], &Outcome::new(vec![BellLabel::new(1, 1)])).unwrap();
        assert!(p.probability < 1e-30);
        assert_eq!(p.residual, Err(Error::ZeroProbability));

        let dist = outcome_distribution(&joint, &[(0, 1)]).unwrap();
        assert!((dist.probability(&Outcome::zero(1)) - 1.0).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            let r = sample_product_phi(&joint, &[(0, 1)], &mut rng).unwrap();
            assert_eq!(r.outcome, Outcome::zero(1));
        }
    }

    #[test]
    fn bad_pairs_rejected() {
        let joint = StateVector::random(2, 3, 1).unwrap();
        assert_eq!(
            outcome_distribution(&joint, &[(0, 1), (1, 2)]),
            Err(Error::RepeatedPosition(1))
        );
        assert_eq!(
            outcome_distribution(&joint, &[(0, 3)]),
            Err(Error::PositionOutOfRange { pos: 3, m: 3 })
        );
        assert!(project_outcome(&joint, &[(0, 1)], &Outcome::zero(2)).is_err());
    }

    #[test]
    fn sampling_is_seeded() {
        let joint = StateVector::random(2, 5, 8).unwrap();
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..20)
                .map(|_| {
                    sample_product_phi(&joint, &[(0, 1), (2, 3)], &mut rng)
                        .unwrap()
                        .outcome
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(5), run(5));
    }

    #[test]
    fn identity_upsilon_matches_plain_measurement() {
        let joint = StateVector::random(2, 6, 4).unwrap();
        let id = GlobalUnitary::identity(2, 2).unwrap();
        let mut r1 = ChaCha8Rng::seed_from_u64(9);
        let mut r2 = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let a = measure_xi(&joint, &[2, 4, 0, 1], &id, &mut r1).unwrap();
            let b = sample_product_phi(&joint, &[(2, 0), (4, 1)], &mut r2).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn gbs_pair_reads_its_own_label() {
        let d = 4;
        for label in BellLabel::all(d) {
            let joint = gbs_state(d, label)
                .unwrap()
                .tensor(&StateVector::basis(d, &[1]).unwrap())
                .unwrap();
            let dist = outcome_distribution(&joint, &[(0, 1)]).unwrap();
            assert!((dist.probability(&Outcome::new(vec![label])) - 1.0).abs() < 1e-12);
        }
    }
}
