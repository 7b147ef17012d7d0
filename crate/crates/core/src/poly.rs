//! Exact star products on polynomials in 2m generators for an arbitrary
//! ordered expression, with intertwiners and Weyl symmetrization.
//!
//! The product is the terminating bidifferential series
//! `f * g = sum_k (i hbar/2)^k / k! Lambda^{i1 j1} ... (d...f)(d...g)`
//! with `Lambda = K + J`, `K` the symmetric expression parameter and `J`
//! the fixed standard skew matrix `[[0,-I],[I,0]]`. Generators are ordered
//! `(u_1..u_m, v_1..v_m)`.

use crate::error::{Error, Result};
use crate::scalar::{GaussianRational, HbarScalar};
use num::complex::Complex64;
use std::collections::{BTreeMap, HashMap};

/// Hard guard against accidental blowup; exceeding it is an error, never
/// silent truncation.
pub const DEFAULT_DEGREE_CAP: usize = 16;

pub type MultiIndex = Vec<u32>;

/// Entry of the standard skew matrix `J` at `(i, j)` for given `m`.
pub fn j_entry(m: usize, i: usize, j: usize) -> i64 {
    if i < m && j == i + m {
        -1
    } else if i >= m && j == i - m {
        1
    } else {
        0
    }
}

/// Complex symmetric matrix `K` with exact entries choosing the ordered
/// expression.
#[derive(Clone, PartialEq, Debug)]
pub struct ExpressionParameter {
    pub m: usize,
    entries: Vec<Vec<GaussianRational>>,
}

impl ExpressionParameter {
    pub fn new(m: usize, entries: Vec<Vec<GaussianRational>>) -> Result<Self> {
        let n = 2 * m;
        if entries.len() != n || entries.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: entries.len(),
            });
        }
        for i in 0..n {
            for j in 0..i {
                if entries[i][j] != entries[j][i] {
                    return Err(Error::NotSymmetric { residual: f64::NAN });
                }
            }
        }
        Ok(Self { m, entries })
    }

    pub fn zero(m: usize) -> Self {
        let n = 2 * m;
        Self {
            m,
            entries: vec![vec![GaussianRational::zero(); n]; n],
        }
    }

    /// Weyl ordering `K = 0`.
    pub fn weyl(m: usize) -> Self {
        Self::zero(m)
    }

    /// Unit ordering `K = I`.
    pub fn unit(m: usize) -> Self {
        let mut k = Self::zero(m);
        for i in 0..2 * m {
            k.entries[i][i] = GaussianRational::one();
        }
        k
    }

    /// Normal ordering `K_0 = [[0,I],[I,0]]`.
    pub fn normal(m: usize) -> Self {
        let mut k = Self::zero(m);
        for i in 0..m {
            k.entries[i][i + m] = GaussianRational::one();
            k.entries[i + m][i] = GaussianRational::one();
        }
        k
    }

    /// Anti-normal ordering `-K_0`.
    pub fn anti_normal(m: usize) -> Self {
        let mut k = Self::zero(m);
        for i in 0..m {
            k.entries[i][i + m] = GaussianRational::from_int(-1);
            k.entries[i + m][i] = GaussianRational::from_int(-1);
        }
        k
    }

    pub fn entry(&self, i: usize, j: usize) -> &GaussianRational {
        &self.entries[i][j]
    }

    pub fn entries(&self) -> &Vec<Vec<GaussianRational>> {
        &self.entries
    }

    /// `Lambda = K + J`.
    pub fn lambda(&self) -> Vec<Vec<GaussianRational>> {
        let n = 2 * self.m;
        let mut l = self.entries.clone();
        for (i, row) in l.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                let jij = j_entry(self.m, i, j);
                if jij != 0 {
                    *e = &*e + &GaussianRational::from_int(jij);
                }
            }
        }
        debug_assert_eq!(l.len(), n);
        l
    }

    /// Difference `K' - K`, used by the intertwiner.
    pub fn diff(&self, other: &Self) -> Result<Vec<Vec<GaussianRational>>> {
        if self.m != other.m {
            return Err(Error::DimensionMismatch {
                expected: 2 * self.m,
                got: 2 * other.m,
            });
        }
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| y - x).collect())
            .collect())
    }

    pub fn to_complex(&self) -> Vec<Vec<Complex64>> {
        self.entries
            .iter()
            .map(|r| r.iter().map(|e| e.to_complex()).collect())
            .collect()
    }
}

/// Exact multivariate polynomial over `Q(i)[hbar]` in the 2m generators.
#[derive(Clone, PartialEq, Debug)]
pub struct WeylPolynomial {
    pub m: usize,
    terms: BTreeMap<MultiIndex, HbarScalar>,
}

impl WeylPolynomial {
    pub fn zero(m: usize) -> Self {
        Self {
            m,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(m: usize) -> Self {
        Self::monomial(m, &vec![0; 2 * m], HbarScalar::one())
    }

    pub fn constant(m: usize, c: HbarScalar) -> Self {
        Self::monomial(m, &vec![0; 2 * m], c)
    }

    /// The generator `u_i` (`0 <= i < 2m`; `i >= m` are the `v` block).
    pub fn generator(m: usize, i: usize) -> Self {
        assert!(i < 2 * m, "generator index out of range");
        let mut exps = vec![0u32; 2 * m];
        exps[i] = 1;
        Self::monomial(m, &exps, HbarScalar::one())
    }

    pub fn monomial(m: usize, exps: &[u32], coeff: HbarScalar) -> Self {
        assert_eq!(exps.len(), 2 * m, "multi-index length must equal 2m");
        let mut terms = BTreeMap::new();
        if !coeff.is_zero() {
            terms.insert(exps.to_vec(), coeff);
        }
        Self { m, terms }
    }

    pub fn terms(&self) -> &BTreeMap<MultiIndex, HbarScalar> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>() as usize)
            .max()
            .unwrap_or(0)
    }

    fn insert(&mut self, exps: MultiIndex, coeff: HbarScalar) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry(exps) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get().add(&coeff);
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.insert(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.insert(e.clone(), c.neg());
        }
        out
    }

    pub fn neg(&self) -> Self {
        Self {
            m: self.m,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c.neg())).collect(),
        }
    }

    pub fn scale(&self, s: &HbarScalar) -> Self {
        let mut out = Self::zero(self.m);
        for (e, c) in &self.terms {
            out.insert(e.clone(), c.mul(s));
        }
        out
    }

    /// Plain commutative product.
    pub fn mul(&self, rhs: &Self) -> Self {
        let mut out = Self::zero(self.m);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let exps: MultiIndex = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.insert(exps, ca.mul(cb));
            }
        }
        out
    }

    /// Partial derivative `d^gamma`.
    pub fn deriv(&self, gamma: &[u32]) -> Self {
        let mut out = Self::zero(self.m);
        'term: for (exps, coeff) in &self.terms {
            let mut factor = GaussianRational::one();
            let mut new_exps = exps.clone();
            for (i, &g) in gamma.iter().enumerate() {
                if g == 0 {
                    continue;
                }
                if exps[i] < g {
                    continue 'term;
                }
                for step in 0..g {
                    factor = &factor * &GaussianRational::from_int((exps[i] - step) as i64);
                }
                new_exps[i] = exps[i] - g;
            }
            out.insert(new_exps, coeff.scale(&factor));
        }
        out
    }

    /// Largest exponent of variable `i` across terms.
    fn max_exp(&self, i: usize) -> u32 {
        self.terms.keys().map(|e| e[i]).max().unwrap_or(0)
    }

    /// Evaluate at a numeric point with numeric `hbar`.
    pub fn eval(&self, u: &[Complex64], hbar: f64) -> Complex64 {
        assert_eq!(u.len(), 2 * self.m);
        let mut acc = Complex64::new(0.0, 0.0);
        for (exps, coeff) in &self.terms {
            let mut mon = Complex64::new(1.0, 0.0);
            for (i, &e) in exps.iter().enumerate() {
                mon *= u[i].powu(e);
            }
            acc += coeff.eval(hbar) * mon;
        }
        acc
    }
}

fn check_same_m(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch {
            expected: 2 * a,
            got: 2 * b,
        });
    }
    Ok(())
}

/// `(i hbar / 2)^k / k!` as an exact scalar.
fn series_factor(k: usize, quarter: bool) -> HbarScalar {
    // i^k
    let i_pow = match k % 4 {
        0 => GaussianRational::one(),
        1 => GaussianRational::i(),
        2 => GaussianRational::from_int(-1),
        _ => -&GaussianRational::i(),
    };
    let base: i64 = if quarter { 4 } else { 2 };
    let mut den = num::BigInt::from(1);
    for j in 1..=k as i64 {
        den *= j;
    }
    den *= num::BigInt::from(base).pow(k as u32);
    let frac = GaussianRational::new(
        num::BigRational::new(num::BigInt::from(1), den),
        num::BigRational::from_integer(num::BigInt::from(0)),
    );
    HbarScalar::hbar_term(&i_pow * &frac, k)
}

pub fn star_product(
    f: &WeylPolynomial,
    g: &WeylPolynomial,
    k_param: &ExpressionParameter,
) -> Result<WeylPolynomial> {
    star_product_capped(f, g, k_param, DEFAULT_DEGREE_CAP)
}

/// The product formula with an explicit degree cap.
pub fn star_product_capped(
    f: &WeylPolynomial,
    g: &WeylPolynomial,
    k_param: &ExpressionParameter,
    cap: usize,
) -> Result<WeylPolynomial> {
    check_same_m(f.m, k_param.m)?;
    check_same_m(g.m, k_param.m)?;
    if f.is_zero() || g.is_zero() {
        return Ok(WeylPolynomial::zero(f.m));
    }
    let degree = f.degree() + g.degree();
    if degree > cap {
        return Err(Error::DegreeCap { cap, degree });
    }
    let m = f.m;
    let n = 2 * m;
    let lambda = k_param.lambda();
    let kmax = f.degree().min(g.degree());

    let fmax: Vec<u32> = (0..n).map(|i| f.max_exp(i)).collect();
    let gmax: Vec<u32> = (0..n).map(|i| g.max_exp(i)).collect();

    // c[(gamma, delta)] accumulates the coefficient of (d^gamma f)(d^delta g)
    // in the k-fold power of the pairing operator.
    let mut c: HashMap<(MultiIndex, MultiIndex), GaussianRational> = HashMap::new();
    c.insert((vec![0; n], vec![0; n]), GaussianRational::one());

    let mut df_cache: HashMap<MultiIndex, WeylPolynomial> = HashMap::new();
    let mut dg_cache: HashMap<MultiIndex, WeylPolynomial> = HashMap::new();

    let mut result = WeylPolynomial::zero(m);
    for k in 0..=kmax {
        let factor = series_factor(k, false);
        for ((gamma, delta), coef) in &c {
            if coef.is_zero() {
                continue;
            }
            let df = df_cache
                .entry(gamma.clone())
                .or_insert_with(|| f.deriv(gamma));
            if df.is_zero() {
                continue;
            }
            let dg = dg_cache
                .entry(delta.clone())
                .or_insert_with(|| g.deriv(delta));
            if dg.is_zero() {
                continue;
            }
            let prod = df.mul(dg).scale(&factor.scale(coef));
            result = result.add(&prod);
        }
        if k == kmax {
            break;
        }
        // One more application of the pairing operator.
        let mut next: HashMap<(MultiIndex, MultiIndex), GaussianRational> = HashMap::new();
        for ((gamma, delta), coef) in &c {
            if coef.is_zero() {
                continue;
            }
            for i in 0..n {
                if gamma[i] + 1 > fmax[i] {
                    continue;
                }
                for j in 0..n {
                    if delta[j] + 1 > gmax[j] {
                        continue;
                    }
                    let lij = &lambda[i][j];
                    if lij.is_zero() {
                        continue;
                    }
                    let mut ng = gamma.clone();
                    ng[i] += 1;
                    let mut nd = delta.clone();
                    nd[j] += 1;
                    let add = lij * coef;
                    next.entry((ng, nd))
                        .and_modify(|v| *v = &*v + &add)
                        .or_insert(add);
                }
            }
        }
        c = next;
    }
    Ok(result)
}

/// `f *_K g - g *_K f`; depends only on the skew part of `Lambda`.
pub fn commutator(
    f: &WeylPolynomial,
    g: &WeylPolynomial,
    k_param: &ExpressionParameter,
) -> Result<WeylPolynomial> {
    Ok(star_product(f, g, k_param)?.sub(&star_product(g, f, k_param)?))
}

/// The intertwiner `exp((i hbar/4) sum (K'-K)^{ij} d_i d_j)`, exact and
/// finite on polynomials. Maps the `K`-expression to the `K'`-expression.
pub fn intertwine_poly(
    f: &WeylPolynomial,
    k_from: &ExpressionParameter,
    k_to: &ExpressionParameter,
) -> Result<WeylPolynomial> {
    check_same_m(f.m, k_from.m)?;
    let dk = k_from.diff(k_to)?;
    let n = 2 * f.m;
    let mut result = f.clone();
    let mut current = f.clone();
    let mut order = 0usize;
    loop {
        // Apply D = sum (K'-K)^{ij} d_i d_j once.
        let mut next = WeylPolynomial::zero(f.m);
        for i in 0..n {
            for j in 0..n {
                if dk[i][j].is_zero() {
                    continue;
                }
                let mut gamma = vec![0u32; n];
                gamma[i] += 1;
                gamma[j] += 1;
                let d = current.deriv(&gamma);
                if !d.is_zero() {
                    next = next.add(&d.scale(&HbarScalar::constant(dk[i][j].clone())));
                }
            }
        }
        if next.is_zero() {
            break;
        }
        order += 1;
        result = result.add(&next.scale(&series_factor(order, true)));
        current = next;
    }
    Ok(result)
}

/// Distinct-permutation iterator support: next lexicographic permutation.
fn next_permutation(word: &mut [usize]) -> bool {
    if word.len() < 2 {
        return false;
    }
    let mut i = word.len() - 1;
    while i > 0 && word[i - 1] >= word[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = word.len() - 1;
    while word[j] <= word[i - 1] {
        j -= 1;
    }
    word.swap(i - 1, j);
    word[i..].reverse();
    true
}

/// Weyl symmetrization of a generator word: the average over all
/// permutations of the star-product fold in the `K = 0` expression. The
/// result is the plain monomial.
pub fn weyl_symmetrize(m: usize, word: &[usize]) -> Result<WeylPolynomial> {
    if word.is_empty() {
        return Err(Error::MalformedWord("empty word".into()));
    }
    if let Some(&bad) = word.iter().find(|&&i| i >= 2 * m) {
        return Err(Error::MalformedWord(format!(
            "generator index {bad} out of range for 2m = {}",
            2 * m
        )));
    }
    let k0 = ExpressionParameter::weyl(m);
    let mut sorted = word.to_vec();
    sorted.sort_unstable();

    // Multiplicities of identical letters; all n! permutations regroup into
    // distinct arrangements each counted prod(c_i!) times.
    let mut mult_factor = num::BigInt::from(1);
    {
        let mut run = 1u64;
        for w in 1..sorted.len() {
            if sorted[w] == sorted[w - 1] {
                run += 1;
            } else {
                run = 1;
            }
            mult_factor *= num::BigInt::from(run);
        }
    }
    let mut n_fact = num::BigInt::from(1);
    for j in 1..=sorted.len() as i64 {
        n_fact *= num::BigInt::from(j);
    }

    let mut acc = WeylPolynomial::zero(m);
    loop {
        let mut prod = WeylPolynomial::generator(m, sorted[sorted.len() - 1]);
        for &idx in sorted[..sorted.len() - 1].iter().rev() {
            prod = star_product(&WeylPolynomial::generator(m, idx), &prod, &k0)?;
        }
        acc = acc.add(&prod);
        if !next_permutation(&mut sorted) {
            break;
        }
    }
    let weight = GaussianRational::new(
        num::BigRational::new(mult_factor, n_fact),
        num::BigRational::from_integer(num::BigInt::from(0)),
    );
    Ok(acc.scale(&HbarScalar::constant(weight)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(m: usize) -> WeylPolynomial {
        WeylPolynomial::generator(m, 0)
    }
    fn v(m: usize) -> WeylPolynomial {
        WeylPolynomial::generator(m, 1)
    }

    #[test]
    fn moyal_u_star_v() {
        // :u*v:_0 = uv - i hbar/2
        let k = ExpressionParameter::weyl(1);
        let p = star_product(&u(1), &v(1), &k).unwrap();
        let uv = u(1).mul(&v(1));
        let half_ih = HbarScalar::i_hbar()
            .div_scalar(&GaussianRational::from_int(2))
            .unwrap();
        let expected = uv.sub(&WeylPolynomial::constant(1, half_ih));
        assert_eq!(p, expected);
    }

    #[test]
    fn star_with_one_is_identity() {
        let k = ExpressionParameter::unit(1);
        let f = u(1).mul(&u(1)).add(&v(1));
        assert_eq!(star_product(&f, &WeylPolynomial::one(1), &k).unwrap(), f);
        assert_eq!(star_product(&WeylPolynomial::one(1), &f, &k).unwrap(), f);
    }

    #[test]
    fn normal_ordering_v_star_u() {
        // v *_{K_0} u = uv + i hbar with Lambda = [[0,0],[2,0]]
        let k0 = ExpressionParameter::normal(1);
        let p = star_product(&v(1), &u(1), &k0).unwrap();
        let expected = u(1).mul(&v(1)).add(&WeylPolynomial::constant(1, HbarScalar::i_hbar()));
        assert_eq!(p, expected);
        // and u *_{K_0} v = uv exactly
        let q = star_product(&u(1), &v(1), &k0).unwrap();
        assert_eq!(q, u(1).mul(&v(1)));
    }

    #[test]
    fn unit_ordering_u_star_u() {
        // :u*u:_I = u^2 + i hbar/2
        let k = ExpressionParameter::unit(1);
        let p = star_product(&u(1), &u(1), &k).unwrap();
        let half_ih = HbarScalar::i_hbar()
            .div_scalar(&GaussianRational::from_int(2))
            .unwrap();
        let expected = u(1).mul(&u(1)).add(&WeylPolynomial::constant(1, half_ih));
        assert_eq!(p, expected);
    }

    #[test]
    fn commutator_is_minus_i_hbar() {
        for k in [
            ExpressionParameter::weyl(1),
            ExpressionParameter::unit(1),
            ExpressionParameter::normal(1),
        ] {
            let c = commutator(&u(1), &v(1), &k).unwrap();
            let expected = WeylPolynomial::constant(1, HbarScalar::i_hbar().neg());
            assert_eq!(c, expected);
        }
    }

    #[test]
    fn commutator_with_self_vanishes() {
        let k = ExpressionParameter::normal(1);
        let f = u(1).mul(&v(1)).add(&u(1));
        assert!(commutator(&f, &f, &k).unwrap().is_zero());
    }

    #[test]
    fn intertwiner_fixes_linear_forms() {
        let k0 = ExpressionParameter::weyl(1);
        let ki = ExpressionParameter::unit(1);
        let f = u(1).add(&v(1).scale(&HbarScalar::from_int(3)));
        assert_eq!(intertwine_poly(&f, &k0, &ki).unwrap(), f);
    }

    #[test]
    fn intertwiner_weyl_to_unit_on_u_squared() {
        // I_0^I(u^2) = u^2 + i hbar/2 = :u*u:_I
        let k0 = ExpressionParameter::weyl(1);
        let ki = ExpressionParameter::unit(1);
        let f = u(1).mul(&u(1));
        let lhs = intertwine_poly(&f, &k0, &ki).unwrap();
        let rhs = star_product(&u(1), &u(1), &ki).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn weyl_symmetrize_basics() {
        // word (u) -> u, word (u,v) -> uv, word (u,u,v) -> u^2 v
        assert_eq!(weyl_symmetrize(1, &[0]).unwrap(), u(1));
        assert_eq!(weyl_symmetrize(1, &[0, 1]).unwrap(), u(1).mul(&v(1)));
        assert_eq!(
            weyl_symmetrize(1, &[0, 0, 1]).unwrap(),
            u(1).mul(&u(1)).mul(&v(1))
        );
        assert!(weyl_symmetrize(1, &[]).is_err());
        assert!(weyl_symmetrize(1, &[5]).is_err());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let k = ExpressionParameter::weyl(2);
        assert!(star_product(&u(1), &v(1), &k).is_err());
    }

    #[test]
    fn degree_cap_is_an_error_not_truncation() {
        let k = ExpressionParameter::weyl(1);
        let mut f = u(1);
        for _ in 0..9 {
            f = f.mul(&u(1));
        }
        // deg 10 + deg 10 = 20 > 16
        assert!(matches!(
            star_product(&f, &f, &k),
            Err(Error::DegreeCap { .. })
        ));
        assert!(star_product_capped(&f, &f, &k, 24).is_ok());
    }
}
