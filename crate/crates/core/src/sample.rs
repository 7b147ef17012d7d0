//! Seeded random sampling of expression parameters and symplectic data.
//!
//! The seed comes from `WEYLSTAR_SEED` when set, so verification runs are
//! reproducible.

use crate::numerics::{c64, det, eigenvalues, j_mat, max_norm, CMat};
use nalgebra::DMatrix;
use num::complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_SEED: u64 = 0x5eed_0001;

pub fn seed_from_env() -> u64 {
    std::env::var("WEYLSTAR_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_SEED)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rng_from_env() -> ChaCha8Rng {
    rng(seed_from_env())
}

fn rand_c(rng: &mut ChaCha8Rng, scale: f64) -> Complex64 {
    c64(
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
    )
}

/// Random complex symmetric matrix with entries in a box.
pub fn random_symmetric(rng: &mut ChaCha8Rng, m: usize, scale: f64) -> CMat {
    let n = 2 * m;
    let mut k = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let z = rand_c(rng, scale);
            k[(i, j)] = z;
            k[(j, i)] = z;
        }
    }
    k
}

/// Pairwise eigenvalue separation of a matrix.
pub fn eigen_separation(a: &CMat) -> f64 {
    let ev = eigenvalues(a);
    let mut sep = f64::INFINITY;
    for i in 0..ev.len() {
        for j in 0..i {
            sep = sep.min((ev[i] - ev[j]).norm());
        }
    }
    sep
}

/// Generic expression parameter: resampled until `|det K| > 1e-6`, the
/// eigenvalues of `K` are simple (separation > 1e-4), and the moduli
/// `|(1+mu)/(1-mu)|` stay away from 1 (within 1e-4) for every eigenvalue.
/// The last condition keeps the periodic/alternating discriminator away
/// from its boundary.
pub fn generic_k(rng: &mut ChaCha8Rng, m: usize) -> CMat {
    loop {
        let k = random_symmetric(rng, m, 1.0);
        if det(&k).norm() <= 1e-6 {
            continue;
        }
        if eigen_separation(&k) <= 1e-4 {
            continue;
        }
        let evs = eigenvalues(&k);
        let ok = evs.iter().all(|mu| {
            let d = (c64(1.0, 0.0) - mu).norm();
            if d < 1e-8 {
                return false;
            }
            let ratio = ((c64(1.0, 0.0) + mu) / (c64(1.0, 0.0) - mu)).norm();
            (ratio - 1.0).abs() > 1e-4
        });
        if ok {
            return k;
        }
    }
}

/// Random element of sp(m,C): `alpha = S J` with `S` complex symmetric,
/// since `(SJ)J + J(SJ)^T = SJJ + J J^T S = -S + S = 0`.
pub fn random_sp_algebra(rng: &mut ChaCha8Rng, m: usize, scale: f64) -> CMat {
    let s = random_symmetric(rng, m, scale);
    &s * &j_mat(m)
}

/// Random element of Sp(m,C) as a product of two algebra exponentials.
pub fn random_sp_group(rng: &mut ChaCha8Rng, m: usize, scale: f64) -> CMat {
    let a = random_sp_algebra(rng, m, scale);
    let b = random_sp_algebra(rng, m, scale);
    crate::numerics::expm(&a) * crate::numerics::expm(&b)
}

/// Residual of the symplectic condition `g J g^T = J`.
pub fn symplectic_residual(g: &CMat, m: usize) -> f64 {
    let j = j_mat(m);
    max_norm(&(g * &j * g.transpose() - &j))
}

/// Random polynomial for exact-engine property tests: `n_terms` monomials
/// of total degree <= `max_deg` with small Gaussian-integer coefficients.
pub fn random_poly(
    rng: &mut ChaCha8Rng,
    m: usize,
    max_deg: u32,
    n_terms: usize,
) -> crate::poly::WeylPolynomial {
    use crate::scalar::{GaussianRational, HbarScalar};
    let n = 2 * m;
    let mut p = crate::poly::WeylPolynomial::zero(m);
    for _ in 0..n_terms {
        let mut exps = vec![0u32; n];
        let deg = rng.gen_range(0..=max_deg);
        for _ in 0..deg {
            let i = rng.gen_range(0..n);
            exps[i] += 1;
        }
        let c = GaussianRational::from_ratio(
            rng.gen_range(-4i64..=4),
            1,
            rng.gen_range(-4i64..=4),
            1,
        );
        if c.is_zero() {
            continue;
        }
        p = p.add(&crate::poly::WeylPolynomial::monomial(
            m,
            &exps,
            HbarScalar::constant(c),
        ));
    }
    p
}

/// Random exact symmetric expression parameter with small Gaussian-integer
/// entries.
pub fn random_exact_k(rng: &mut ChaCha8Rng, m: usize) -> crate::poly::ExpressionParameter {
    use crate::scalar::GaussianRational;
    let n = 2 * m;
    let mut entries = vec![vec![GaussianRational::zero(); n]; n];
    for i in 0..n {
        for j in 0..=i {
            let c = GaussianRational::from_ratio(
                rng.gen_range(-3i64..=3),
                1,
                rng.gen_range(-3i64..=3),
                1,
            );
            entries[i][j] = c.clone();
            entries[j][i] = c;
        }
    }
    crate::poly::ExpressionParameter::new(m, entries).expect("symmetric by construction")
}

/// Build a complex matrix from row data.
pub fn from_rows(rows: &[Vec<Complex64>]) -> CMat {
    let n = rows.len();
    let mut a = DMatrix::zeros(n, rows[0].len());
    for (i, r) in rows.iter().enumerate() {
        for (j, z) in r.iter().enumerate() {
            a[(i, j)] = *z;
        }
    }
    a
}
