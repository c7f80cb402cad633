//! Invariant suites over ranges of `(d, n)`, as run by `qtele verify`.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::channels::{local_product_unitary, random_global_unitary, ChannelSpec, GlobalUnitary};
use crate::error::Result;
use crate::harness::{check_size, unix_now, JOINT_AMPLITUDE_CAP};
use crate::protocols::{run, Protocol, Setup};
use crate::statevec::{LocalOperator, Matrix, StateVector, C64};
use crate::weyl::{phi00, phi_basis, weyl_u, weyl_v, BellLabel};
use crate::{derive_seed, FIDELITY_TOL};

pub const VERIFY_SCHEMA: &str = "qudit-teleport/verify-report/v1";

const BASIS_TOL: f64 = 1e-12;
const STATE_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub d: RangeInclusive<usize>,
    pub n: RangeInclusive<usize>,
    pub seed: u64,
    /// Corrupts one phase of every `V(k,l)` used by the Weyl suites.
    pub inject_fault: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropertyCheck {
    pub property: String,
    pub d: usize,
    pub n: Option<usize>,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyReport {
    pub schema: String,
    pub generated_at: u64,
    pub d_range: [usize; 2],
    pub n_range: [usize; 2],
    pub seed: u64,
    pub fault_injected: bool,
    pub checks: Vec<PropertyCheck>,
    pub passed: bool,
}

struct Checks(Vec<PropertyCheck>);

impl Checks {
    fn push(
        &mut self,
        property: impl Into<String>,
        d: usize,
        n: Option<usize>,
        dev: f64,
        tol: f64,
    ) {
        self.0.push(PropertyCheck {
            property: property.into(),
            d,
            n,
            max_deviation: dev,
            tolerance: tol,
            // NaN deviations fail.
            passed: dev <= tol,
        });
    }
}

fn v_op(d: usize, label: BellLabel, fault: bool) -> Result<LocalOperator> {
    let v = weyl_v(d, label)?;
    if !fault {
        return Ok(v);
    }
    let mut m = v.matrix().clone();
    let row = (1 + label.l) % d;
    m[(row, 1)] = -m[(row, 1)];
    LocalOperator::new(d, 1, m)
}

fn state_diff(a: &StateVector, b: &StateVector) -> f64 {
    a.amps()
        .iter()
        .zip(b.amps())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `1 - |<a|b>|`, the phase-insensitive mismatch.
fn mismatch(a: &StateVector, b: &StateVector) -> f64 {
    a.inner(b).map(|z| 1.0 - z.norm()).unwrap_or(f64::INFINITY)
}

fn weyl_suites(d: usize, fault: bool, checks: &mut Checks) -> Result<()> {
    let basis = phi_basis(d)?;
    let mut gram_dev: f64 = 0.0;
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            gram_dev = gram_dev.max((a.inner(b)? - C64::new(want, 0.0)).norm());
        }
    }
    checks.push("basis_orthonormality", d, None, gram_dev, BASIS_TOL);

    let phi = phi00(d)?;
    let mut unitary_dev: f64 = 0.0;
    let mut ricochet_dev: f64 = 0.0;
    let mut projector_sum = Matrix::zeros(d * d);
    for label in BellLabel::all(d) {
        let v = v_op(d, label, fault)?;
        let u = weyl_u(d, label)?;
        unitary_dev = unitary_dev
            .max(v.matrix().unitarity_deviation())
            .max(u.matrix().unitarity_deviation());
        let left = phi.apply_local(&u, &[0])?;
        let right = phi.apply_local(&v, &[1])?;
        ricochet_dev = ricochet_dev.max(state_diff(&left, &right));
        let outer = right.outer();
        for r in 0..d * d {
            for c in 0..d * d {
                projector_sum[(r, c)] += outer[(r, c)];
            }
        }
    }
    checks.push("weyl_unitarity", d, None, unitary_dev, BASIS_TOL);
    checks.push("ricochet", d, None, ricochet_dev, BASIS_TOL);
    checks.push(
        "completeness",
        d,
        None,
        projector_sum.max_abs_diff(&Matrix::identity(d * d)),
        BASIS_TOL,
    );
    Ok(())
}

fn local_weyl_labels(d: usize, n: usize) -> Vec<BellLabel> {
    (0..n)
        .map(|i| BellLabel::new((i + 1) % d, (2 * i + 1) % d))
        .collect()
}

fn local_weyl_unitary(d: usize, labels: &[BellLabel]) -> Result<GlobalUnitary> {
    let parts = labels
        .iter()
        .map(|&l| weyl_v(d, l))
        .collect::<Result<Vec<_>>>()?;
    local_product_unitary(&parts)
}

fn max_projection_mismatch(a: &Setup, b: &Setup) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (pa, pb) in a.project_all()?.into_iter().zip(b.project_all()?) {
        worst = worst.max((pa.probability - pb.probability).abs());
        match (pa.residual, pb.residual) {
            (Ok(ra), Ok(rb)) => worst = worst.max(mismatch(&ra, &rb)),
            (Err(_), Err(_)) => {}
            _ => worst = f64::INFINITY,
        }
    }
    Ok(worst)
}

fn protocol_suites(d: usize, n: usize, seed: u64, checks: &mut Checks) -> Result<()> {
    let upsilon = random_global_unitary(d, n, derive_seed(seed, 1))?;
    let omega = random_global_unitary(d, n, derive_seed(seed, 2))?;
    let specs = [
        (Protocol::Dn, ChannelSpec::tps(d, n)),
        (Protocol::Dpn, ChannelSpec::ges(d, n, upsilon.clone())),
        (
            Protocol::Dppn,
            ChannelSpec::ges2(d, n, upsilon.clone(), omega),
        ),
    ];
    let input = StateVector::random(d, n, derive_seed(seed, 3))?;
    let side = d.pow(n as u32);
    let maximally_mixed = Matrix::identity(side).scale(C64::new(1.0 / side as f64, 0.0));

    for (protocol, spec) in &specs {
        let setup = Setup::new(*protocol, &input, spec)?;
        checks.push(
            format!("uniform_outcomes/{protocol}"),
            d,
            Some(n),
            setup.distribution()?.max_deviation_from_uniform(),
            STATE_TOL,
        );
        checks.push(
            format!("no_signaling/{protocol}"),
            d,
            Some(n),
            setup.bob_average_density()?.max_abs_diff(&maximally_mixed),
            STATE_TOL,
        );
        let mut worst: f64 = 0.0;
        for trial in 0..8 {
            let lam = StateVector::random(d, n, derive_seed(seed, 100 + trial))?;
            let t = run(*protocol, &lam, spec, derive_seed(seed, 200 + trial))?;
            worst = worst.max(1.0 - t.fidelity);
        }
        checks.push(
            format!("faithfulness/{protocol}"),
            d,
            Some(n),
            worst,
            FIDELITY_TOL,
        );
    }

    // Alice-side local product of Weyl operators: V_A |Φ00> = phase * V(k, -l)_B |Φ00>.
    let labels = local_weyl_labels(d, n);
    let local = local_weyl_unitary(d, &labels)?;
    let relabeled: Vec<BellLabel> = labels
        .iter()
        .map(|l| BellLabel::new(l.k, (d - l.l) % d))
        .collect();
    let dpn = Setup::new(
        Protocol::Dpn,
        &input,
        &ChannelSpec::ges(d, n, local.clone()),
    )?;
    let dn = Setup::new(
        Protocol::Dn,
        &input,
        &ChannelSpec::tps(d, n).with_offsets(relabeled),
    )?;
    checks.push(
        "reduction/dpn_local_to_dn",
        d,
        Some(n),
        max_projection_mismatch(&dpn, &dn)?,
        STATE_TOL,
    );

    let dpn = ChannelSpec::ges(d, n, upsilon.clone());
    let dppn = ChannelSpec::ges2(d, n, upsilon.clone(), GlobalUnitary::identity(d, n)?);
    let mut worst: f64 = 0.0;
    for trial in 0..4 {
        let s = derive_seed(seed, 300 + trial);
        let a = run(Protocol::Dpn, &input, &dpn, s)?;
        let b = run(Protocol::Dppn, &input, &dppn, s)?;
        if a.outcome != b.outcome {
            worst = f64::INFINITY;
            break;
        }
        worst = worst
            .max(state_diff(&a.bob_pre_correction, &b.bob_pre_correction))
            .max(state_diff(&a.bob_post_correction, &b.bob_post_correction));
    }
    checks.push(
        "reduction/dppn_identity_to_dpn",
        d,
        Some(n),
        worst,
        STATE_TOL,
    );

    // Bob-side local product: Ω_B Θ_0 = Θ_labels, so Ξ' is the Ξ channel with offsets.
    let dppn = Setup::new(
        Protocol::Dppn,
        &input,
        &ChannelSpec::ges2(d, n, upsilon.clone(), local),
    )?;
    let dpn = Setup::new(
        Protocol::Dpn,
        &input,
        &ChannelSpec::ges(d, n, upsilon).with_offsets(labels),
    )?;
    let channel_gap = state_diff(&dppn.channel, &dpn.channel);
    checks.push(
        "reduction/dppn_local_to_dpn",
        d,
        Some(n),
        max_projection_mismatch(&dppn, &dpn)?.max(channel_gap),
        STATE_TOL,
    );
    Ok(())
}

pub fn run_verify(opts: &VerifyOptions) -> Result<VerifyReport> {
    for d in opts.d.clone() {
        for n in opts.n.clone() {
            check_size(d, n, JOINT_AMPLITUDE_CAP)?;
        }
    }
    if opts.d.is_empty() || opts.n.is_empty() {
        return Err(crate::Error::Config("empty d or n range".into()));
    }
    let mut checks = Checks(Vec::new());
    for d in opts.d.clone() {
        weyl_suites(d, opts.inject_fault, &mut checks)?;
        for n in opts.n.clone() {
            protocol_suites(
                d,
                n,
                derive_seed(opts.seed, (d * 1000 + n) as u64),
                &mut checks,
            )?;
        }
    }
    let passed = checks.0.iter().all(|c| c.passed);
    Ok(VerifyReport {
        schema: VERIFY_SCHEMA.into(),
        generated_at: unix_now(),
        d_range: [*opts.d.start(), *opts.d.end()],
        n_range: [*opts.n.start(), *opts.n.end()],
        seed: opts.seed,
        fault_injected: opts.inject_fault,
        checks: checks.0,
        passed,
    })
}
