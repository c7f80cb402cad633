//! Naive reference implementations used as test oracles. Everything here
//! works on plain `Vec<C64>` amplitude lists and loops over full digit
//! expansions, sharing no index arithmetic with the library.

#![allow(dead_code)]

use std::f64::consts::PI;

use qudit_teleport::C64;

pub type Dense = Vec<Vec<C64>>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn omega_pow(p: usize, d: usize) -> C64 {
    let t = 2.0 * PI * (p % d) as f64 / d as f64;
    c(t.cos(), t.sin())
}

pub fn to_digits(mut idx: usize, d: usize, m: usize) -> Vec<usize> {
    let mut out = vec![0; m];
    for slot in out.iter_mut().rev() {
        *slot = idx % d;
        idx /= d;
    }
    out
}

pub fn from_digits(digits: &[usize], d: usize) -> usize {
    digits.iter().fold(0, |acc, &x| acc * d + x)
}

/// `V(k,l)|j> = ω^{jk} |j+l>`.
pub fn v_matrix(d: usize, k: usize, l: usize) -> Dense {
    let mut m = vec![vec![c(0.0, 0.0); d]; d];
    for j in 0..d {
        m[(j + l) % d][j] = omega_pow(j * k, d);
    }
    m
}

/// `|Φ_kl> = sum_j ω^{jk} |j, j+l> / sqrt(d)`.
pub fn bell(d: usize, k: usize, l: usize) -> Vec<C64> {
    let mut v = vec![c(0.0, 0.0); d * d];
    let s = 1.0 / (d as f64).sqrt();
    for j in 0..d {
        v[j * d + (j + l) % d] = omega_pow(j * k, d) * s;
    }
    v
}

pub fn dagger(m: &Dense) -> Dense {
    let n = m.len();
    (0..n)
        .map(|r| (0..n).map(|col| m[col][r].conj()).collect())
        .collect()
}

pub fn mat_mul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    (0..n)
        .map(|r| {
            (0..n)
                .map(|col| (0..n).map(|k| a[r][k] * b[k][col]).sum())
                .collect()
        })
        .collect()
}

pub fn kron(a: &Dense, b: &Dense) -> Dense {
    let (na, nb) = (a.len(), b.len());
    let mut out = vec![vec![c(0.0, 0.0); na * nb]; na * nb];
    for i in 0..na {
        for j in 0..na {
            for k in 0..nb {
                for l in 0..nb {
                    out[i * nb + k][j * nb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn identity(n: usize) -> Dense {
    (0..n)
        .map(|r| {
            (0..n)
                .map(|col| c(if r == col { 1.0 } else { 0.0 }, 0.0))
                .collect()
        })
        .collect()
}

pub fn max_abs_diff(a: &Dense, b: &Dense) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn unitarity_dev(m: &Dense) -> f64 {
    max_abs_diff(&mat_mul(m, &dagger(m)), &identity(m.len()))
}

/// Aligns `a`'s global phase to `b` on `b`'s largest entry, then takes the
/// max entrywise distance.
pub fn dist_up_to_phase(a: &Dense, b: &Dense) -> f64 {
    let (mut best, mut at) = (0.0, (0, 0));
    for (r, row) in b.iter().enumerate() {
        for (col, x) in row.iter().enumerate() {
            if x.norm() > best {
                best = x.norm();
                at = (r, col);
            }
        }
    }
    let ratio = b[at.0][at.1] / a[at.0][at.1];
    let phase = ratio / ratio.norm();
    let aligned: Dense = a
        .iter()
        .map(|row| row.iter().map(|x| x * phase).collect())
        .collect();
    max_abs_diff(&aligned, b)
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn normalized(a: &[C64]) -> Vec<C64> {
    let n = norm(a);
    a.iter().map(|x| x / n).collect()
}

/// `|<a|b>|` for normalized inputs.
pub fn overlap(a: &[C64], b: &[C64]) -> f64 {
    inner(a, b).norm() / (norm(a) * norm(b))
}

pub fn max_vec_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn tensor(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| x * y))
        .collect()
}

/// Applies `op` (acting on `targets` in the listed order) to an `m`-qudit
/// amplitude list by looping over every input and output basis index.
pub fn apply(amps: &[C64], d: usize, m: usize, targets: &[usize], op: &Dense) -> Vec<C64> {
    let mut out = vec![c(0.0, 0.0); amps.len()];
    for (idx, &a) in amps.iter().enumerate() {
        if a == c(0.0, 0.0) {
            continue;
        }
        let digits = to_digits(idx, d, m);
        let col = from_digits(&targets.iter().map(|&t| digits[t]).collect::<Vec<_>>(), d);
        for (row, op_row) in op.iter().enumerate() {
            let entry = op_row[col];
            if entry == c(0.0, 0.0) {
                continue;
            }
            let mut new_digits = digits.clone();
            for (&t, v) in targets.iter().zip(to_digits(row, d, targets.len())) {
                new_digits[t] = v;
            }
            out[from_digits(&new_digits, d)] += entry * a;
        }
    }
    out
}

/// Contracts `bra` (a state on `positions`, in that order) against `amps`
/// and returns the unnormalized remainder on the other positions in
/// increasing order.
pub fn contract(amps: &[C64], d: usize, m: usize, positions: &[usize], bra: &[C64]) -> Vec<C64> {
    let rest: Vec<usize> = (0..m).filter(|p| !positions.contains(p)).collect();
    let mut out = vec![c(0.0, 0.0); d.pow(rest.len() as u32)];
    for (idx, &a) in amps.iter().enumerate() {
        let digits = to_digits(idx, d, m);
        let b = from_digits(&positions.iter().map(|&p| digits[p]).collect::<Vec<_>>(), d);
        let r = from_digits(&rest.iter().map(|&p| digits[p]).collect::<Vec<_>>(), d);
        out[r] += bra[b].conj() * a;
    }
    out
}

/// Reduced density matrix on `keep` (in increasing order of position).
pub fn partial_trace(amps: &[C64], d: usize, m: usize, keep: &[usize]) -> Dense {
    let traced: Vec<usize> = (0..m).filter(|p| !keep.contains(p)).collect();
    let side = d.pow(keep.len() as u32);
    let mut rho = vec![vec![c(0.0, 0.0); side]; side];
    let env = d.pow(traced.len() as u32);
    let mut by_env: Vec<Vec<C64>> = vec![vec![c(0.0, 0.0); side]; env];
    for (idx, &a) in amps.iter().enumerate() {
        let digits = to_digits(idx, d, m);
        let k = from_digits(&keep.iter().map(|&p| digits[p]).collect::<Vec<_>>(), d);
        let e = from_digits(&traced.iter().map(|&p| digits[p]).collect::<Vec<_>>(), d);
        by_env[e][k] = a;
    }
    for v in &by_env {
        for r in 0..side {
            for col in 0..side {
                rho[r][col] += v[r] * v[col].conj();
            }
        }
    }
    rho
}

/// Joint layout used by the protocols: `X1..Xn, A1, B1, ..., An, Bn`.
pub fn x_pos(i: usize) -> usize {
    i
}

pub fn a_pos(n: usize, i: usize) -> usize {
    n + 2 * i
}

pub fn b_pos(n: usize, i: usize) -> usize {
    n + 2 * i + 1
}

/// Product Bell bra over positions `A1, X1, A2, X2, ...` for the flat label
/// list `(k_i, l_i)`.
pub fn product_bell(d: usize, labels: &[(usize, usize)]) -> Vec<C64> {
    labels.iter().fold(vec![c(1.0, 0.0)], |acc, &(k, l)| {
        tensor(&acc, &bell(d, k, l))
    })
}

pub fn to_dense(m: &qudit_teleport::Matrix) -> Dense {
    (0..m.dim()).map(|r| m.row(r).to_vec()).collect()
}
