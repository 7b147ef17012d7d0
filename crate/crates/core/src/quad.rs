//! The quadratic-form layer: sp(m,C) elements, twisted Cayley transforms,
//! Gaussian elements with their closed-form star products, intertwiners on
//! Gaussians, infinitesimal actions, integral-manifold amplitudes,
//! star-exponentials of quadratic forms, and adjoint actions.
//!
//! Conventions, fixed once against the exact engine in [`crate::poly`]:
//! a quadratic form `<u A, u>` (A complex symmetric) corresponds to the
//! sp element `alpha = -A J`, so a Gaussian phase matrix is `Q = alpha J`.
//! All square roots are principal; path-dependent sign logic lives in
//! [`crate::branch`].

use crate::error::{Error, Result};
use crate::numerics::{c64, det, expm, identity, inv_guarded, j_mat, max_norm, CMat};
use num::complex::Complex64;

/// Element of sp(m,C): `alpha J + J alpha^T = 0` to 1e-12.
#[derive(Clone, Debug)]
pub struct SpElement {
    pub m: usize,
    pub mat: CMat,
}

impl SpElement {
    pub fn new(m: usize, mat: CMat) -> Result<Self> {
        if mat.nrows() != 2 * m || mat.ncols() != 2 * m {
            return Err(Error::DimensionMismatch {
                expected: 2 * m,
                got: mat.nrows(),
            });
        }
        let j = j_mat(m);
        let residual = max_norm(&(&mat * &j + &j * mat.transpose()));
        let scale = max_norm(&mat).max(1.0);
        if residual > 1e-12 * scale.max(1.0) * 10.0 {
            return Err(Error::NotSp { residual });
        }
        Ok(Self { m, mat })
    }

    /// From a symmetric quadratic-form matrix: `alpha = -A J`.
    pub fn from_quadratic(m: usize, a: &CMat) -> Result<Self> {
        let sym_res = max_norm(&(a - a.transpose()));
        if sym_res > 1e-12 * max_norm(a).max(1.0) * 10.0 {
            return Err(Error::NotSymmetric { residual: sym_res });
        }
        Self::new(m, -(a * j_mat(m)))
    }

    /// Back to the quadratic-form matrix: `A = alpha J`.
    pub fn to_quadratic(&self) -> CMat {
        &self.mat * j_mat(self.m)
    }
}

/// `g * exp(<u Q, u>/(i hbar))` with a sheet bookkeeping flag. The zero
/// element is represented by `amp = 0`.
#[derive(Clone, Debug)]
pub struct GaussianElement {
    pub m: usize,
    pub amp: Complex64,
    pub q: CMat,
    pub sheet: i8,
}

impl GaussianElement {
    pub fn new(m: usize, amp: Complex64, q: CMat) -> Result<Self> {
        if q.nrows() != 2 * m || q.ncols() != 2 * m {
            return Err(Error::DimensionMismatch {
                expected: 2 * m,
                got: q.nrows(),
            });
        }
        let residual = max_norm(&(&q - q.transpose()));
        if residual > 1e-12 * max_norm(&q).max(1.0) * 10.0 {
            return Err(Error::NotSymmetric { residual });
        }
        Ok(Self {
            m,
            amp,
            q,
            sheet: 1,
        })
    }

    pub fn one(m: usize) -> Self {
        Self {
            m,
            amp: c64(1.0, 0.0),
            q: CMat::zeros(2 * m, 2 * m),
            sheet: 1,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.amp.norm() == 0.0
    }

    pub fn with_sheet(mut self, sheet: i8) -> Self {
        self.sheet = sheet;
        self
    }

    /// The sp-coordinates of the phase: `alpha = -Q J`.
    pub fn phase_sp(&self) -> CMat {
        -(&self.q * j_mat(self.m))
    }

    pub fn eval(&self, u: &[Complex64], hbar: f64) -> Complex64 {
        let n = 2 * self.m;
        assert_eq!(u.len(), n);
        let mut quad = c64(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                quad += u[i] * self.q[(i, j)] * u[j];
            }
        }
        self.amp * (quad / c64(0.0, hbar)).exp()
    }

    /// Max deviation from another element, relative on the amplitude and
    /// absolute on the phase matrix.
    pub fn distance(&self, other: &Self) -> f64 {
        let amp_d = (self.amp - other.amp).norm() / other.amp.norm().max(1e-30);
        let q_d = max_norm(&(&self.q - &other.q));
        amp_d.max(q_d)
    }
}

/// Amplitude-phase pair `(g; alpha)` in sp coordinates.
#[derive(Clone, Debug)]
pub struct GroupPoint {
    pub amp: Complex64,
    pub alpha: SpElement,
}

impl GroupPoint {
    pub fn identity(m: usize) -> Self {
        Self {
            amp: c64(1.0, 0.0),
            alpha: SpElement {
                m,
                mat: CMat::zeros(2 * m, 2 * m),
            },
        }
    }

    pub fn to_gaussian(&self) -> GaussianElement {
        let q = &self.alpha.mat * j_mat(self.alpha.m);
        GaussianElement {
            m: self.alpha.m,
            amp: self.amp,
            q,
            sheet: 1,
        }
    }

    pub fn from_gaussian(e: &GaussianElement) -> Result<Self> {
        Ok(Self {
            amp: e.amp,
            alpha: SpElement::new(e.m, e.phase_sp())?,
        })
    }
}

/// `kappa = J K` for the numeric expression parameter.
pub fn kappa_of(k: &CMat) -> CMat {
    let m = k.nrows() / 2;
    j_mat(m) * k
}

/// Twisted Cayley transform `C_kappa(alpha) =
/// (I - (I-kappa) alpha) (I + (I+kappa) alpha)^{-1}`, mapping the chart
/// into Sp(m,C).
pub fn cayley(kappa: &SpElement, alpha: &SpElement) -> Result<CMat> {
    cayley_raw(&kappa.mat, &alpha.mat)
}

/// The same rational map on raw matrices. At `kappa = 0` it is an
/// involution, so it also maps group elements back into the algebra.
pub fn cayley_raw(kappa: &CMat, x: &CMat) -> Result<CMat> {
    let n = kappa.nrows();
    let id = identity(n);
    let ip = &id + kappa;
    let im = &id - kappa;
    let denom = &id + &ip * x;
    let denom_inv = inv_guarded(&denom, "outside chart")?;
    Ok((&id - &im * x) * denom_inv)
}

/// Inverse twisted Cayley transform
/// `(I - kappa + Y (I + kappa))^{-1} (I - Y)`.
pub fn cayley_inverse(kappa: &SpElement, y: &CMat) -> Result<SpElement> {
    let n = 2 * kappa.m;
    let id = identity(n);
    let denom = &id - &kappa.mat + y * (&id + &kappa.mat);
    let denom_inv = inv_guarded(&denom, "Y outside chart image")?;
    SpElement::new(kappa.m, denom_inv * (&id - y))
}

/// Chart translation `T_{kappa'-kappa}(alpha) =
/// (I - alpha (kappa'-kappa))^{-1} alpha`; equals the composed Cayley maps
/// on the chart overlap.
pub fn chart_translate(
    alpha: &SpElement,
    kappa: &SpElement,
    kappa_to: &SpElement,
) -> Result<SpElement> {
    let n = 2 * alpha.m;
    let id = identity(n);
    let dk = &kappa_to.mat - &kappa.mat;
    let denom = &id - &alpha.mat * dk;
    let denom_inv = inv_guarded(&denom, "outside overlap")?;
    SpElement::new(alpha.m, denom_inv * &alpha.mat)
}

/// Inverse chart translation `(I + alpha (kappa'-kappa))^{-1} alpha`.
pub fn chart_translate_inv(
    alpha: &SpElement,
    kappa: &SpElement,
    kappa_to: &SpElement,
) -> Result<SpElement> {
    let n = 2 * alpha.m;
    let id = identity(n);
    let dk = &kappa_to.mat - &kappa.mat;
    let denom = &id + &alpha.mat * dk;
    let denom_inv = inv_guarded(&denom, "outside overlap")?;
    SpElement::new(alpha.m, denom_inv * &alpha.mat)
}

/// Product of amplitude-phase pairs in the `kappa`-expression:
/// `(g; alpha) * (g'; beta) = (g g' det(P)^{-1/2};
/// (I + beta(I+kappa)) P^{-1} Q (I + (I+kappa) beta)^{-1})` with
/// `P = I + alpha (I-kappa) beta (I+kappa)` and
/// `Q = alpha + beta + 2 alpha kappa beta`. Principal square root.
pub fn gaussian_product(
    a: &GroupPoint,
    b: &GroupPoint,
    kappa: &SpElement,
) -> Result<GroupPoint> {
    let m = kappa.m;
    let n = 2 * m;
    let id = identity(n);
    let al = &a.alpha.mat;
    let be = &b.alpha.mat;
    let ip = &id + &kappa.mat;
    let im = &id - &kappa.mat;
    let p = &id + al * &im * be * &ip;
    let det_p = det(&p);
    if det_p.norm() < 1e-12 {
        return Err(Error::OutsideChart(
            "product undefined in this expression; re-express via chart_translate".into(),
        ));
    }
    let p_inv = inv_guarded(&p, "product undefined in this expression")?;
    let right = &id + &ip * be;
    let right_inv = inv_guarded(&right, "product undefined in this expression")?;
    let q = al + be + (al * &kappa.mat * be).map(|z| z * 2.0);
    let phase = (&id + be * &ip) * p_inv * q * right_inv;
    let amp = a.amp * b.amp / det_p.sqrt();
    Ok(GroupPoint {
        amp,
        alpha: SpElement::new(m, phase)?,
    })
}

/// Convenience wrapper on Gaussian elements (phase `Q = alpha J`).
pub fn gaussian_product_elements(
    a: &GaussianElement,
    b: &GaussianElement,
    kappa: &SpElement,
) -> Result<GaussianElement> {
    let pa = GroupPoint::from_gaussian(a)?;
    let pb = GroupPoint::from_gaussian(b)?;
    let prod = gaussian_product(&pa, &pb, kappa)?;
    Ok(prod.to_gaussian())
}

/// Intertwiner on a Gaussian: divides the amplitude by
/// `sqrt(det(I - alpha (kappa'-kappa)))` (principal) and moves the phase
/// through the chart translation.
pub fn intertwine_gaussian(
    e: &GaussianElement,
    kappa: &SpElement,
    kappa_to: &SpElement,
) -> Result<GaussianElement> {
    let n = 2 * e.m;
    let id = identity(n);
    let alpha = e.phase_sp();
    let dk = &kappa_to.mat - &kappa.mat;
    let denom = &id - &alpha * dk;
    let d = det(&denom);
    if d.norm() < 1e-12 {
        return Err(Error::OutsideChart("parallel section leaves chart".into()));
    }
    let denom_inv = inv_guarded(&denom, "parallel section leaves chart")?;
    let new_alpha = denom_inv * &alpha;
    let q = &new_alpha * j_mat(e.m);
    Ok(GaussianElement {
        m: e.m,
        amp: e.amp / d.sqrt(),
        q,
        sheet: e.sheet,
    })
}

/// Left multiplication of `g e^{<uQ,u>/(i hbar)}` by the quadratic element
/// whose K-expression is `(1/(i hbar)) <uA,u> + Tr(A K)/2`: returns the
/// amplitude coefficient `Tr((K-J) A (K+J) Q + A K)/2` and the phase
/// increment `Q' = A + A(K+J)Q + Q(K-J)A + Q(K-J)A(K+J)Q`, so that the
/// product is `(coeff + <uQ',u>/(i hbar)) g e^{<uQ,u>/(i hbar)}`.
pub fn infinitesimal_action(a: &CMat, q: &CMat, k: &CMat) -> (Complex64, CMat) {
    let m = k.nrows() / 2;
    let j = j_mat(m);
    let kp = k + &j;
    let km = k - &j;
    let coeff = ((&km * a * &kp * q) + a * k).diagonal().sum() / 2.0;
    let q_new = a + a * &kp * q + q * &km * a + q * &km * a * &kp * q;
    (coeff, q_new)
}

/// The same action in sp coordinates: phase
/// `alpha' = (I + xi(I+kappa)) alpha (I - (I-kappa) xi)` and coefficient
/// `Tr((kappa+I) alpha (kappa-I) xi + alpha kappa)/2`.
pub fn infinitesimal_action_sp(
    alpha: &CMat,
    xi: &CMat,
    kappa: &CMat,
) -> (Complex64, CMat) {
    let n = kappa.nrows();
    let id = identity(n);
    let coeff = ((kappa + &id) * alpha * (kappa - &id) * xi + alpha * kappa)
        .diagonal()
        .sum()
        / 2.0;
    let alpha_new = (&id + xi * (&id + kappa)) * alpha * (&id - (&id - kappa) * xi);
    (coeff, alpha_new)
}

/// `sqrt(det(I + alpha (I + kappa)))`, the amplitude of the two-valued
/// integral manifold through the identity (principal value; the other
/// sheet is its negative).
pub fn integral_manifold_amplitude(alpha: &SpElement, kappa: &SpElement) -> Result<Complex64> {
    let n = 2 * alpha.m;
    let id = identity(n);
    let d = det(&(&id + &alpha.mat * (&id + &kappa.mat)));
    if d.norm() < 1e-12 {
        return Err(Error::OutsideChart("outside the chart".into()));
    }
    Ok(d.sqrt())
}

/// Whether a Gaussian lies on the integral manifold through `c = 1`:
/// its amplitude must be `+/-` the manifold amplitude of its phase.
pub fn on_integral_manifold(e: &GaussianElement, kappa: &SpElement, rel_tol: f64) -> Result<bool> {
    let alpha = SpElement::new(e.m, e.phase_sp())?;
    let v = integral_manifold_amplitude(&alpha, kappa)?;
    let d_plus = (e.amp - v).norm();
    let d_minus = (e.amp + v).norm();
    Ok(d_plus.min(d_minus) <= rel_tol * v.norm().max(1e-30))
}

/// Denominator matrix `D(t) = I - kappa + e^{-2 t alpha} (I + kappa)` of
/// the quadratic star-exponential.
pub fn exp_quad_denominator(alpha: &SpElement, t: Complex64, k: &CMat) -> CMat {
    let n = 2 * alpha.m;
    let id = identity(n);
    let kappa = kappa_of(k);
    let e = expm(&alpha.mat.map(|z| z * (-2.0 * t)));
    &id - &kappa + e * (&id + &kappa)
}

/// K-ordered expression of the star-exponential of the quadratic form with
/// sp generator `alpha` at parameter `t`:
/// amplitude `2^m det(D)^{-1/2}` (principal branch, `+1` at `t = 0`) and
/// phase `D^{-1} (I - e^{-2 t alpha}) J`. Path-based continuation of the
/// square root is the tracer's job.
pub fn exp_quad(alpha: &SpElement, t: Complex64, k: &CMat) -> Result<GaussianElement> {
    let m = alpha.m;
    let n = 2 * m;
    let id = identity(n);
    let kappa = kappa_of(k);
    let e = expm(&alpha.mat.map(|z| z * (-2.0 * t)));
    let d_mat = &id - &kappa + &e * (&id + &kappa);
    let d = det(&d_mat);
    if d.norm() < 1e-12 {
        return Err(Error::SingularPoint { t_re: t.re, t_im: t.im });
    }
    let d_inv = inv_guarded(&d_mat, "singular point of *-exponential")?;
    let q = d_inv * (&id - &e) * j_mat(m);
    let amp = c64(2.0f64.powi(m as i32), 0.0) / d.sqrt();
    GaussianElement::new(m, amp, q)
}

/// `Delta(t) = det(cos(t) I + sin(t) M)` for a complex symmetric `M`.
pub fn delta_k(t: Complex64, m_mat: &CMat) -> Complex64 {
    let n = m_mat.nrows();
    let id = identity(n);
    det(&(id.map(|z| z * t.cos()) + m_mat.map(|z| z * t.sin())))
}

/// The matrix `N = -J A` of the derivation `[(1/2 i hbar) <uA,u>, .]` on
/// linear forms: `[(1/2 i hbar) <uA,u>, <xi,u>] = <xi N, u>`, verified
/// exactly against the polynomial commutator. `N` is again in sp(m,C).
pub fn ad_matrix(a: &CMat) -> Result<SpElement> {
    let m = a.nrows() / 2;
    let sym_res = max_norm(&(a - a.transpose()));
    if sym_res > 1e-10 * max_norm(a).max(1.0) {
        return Err(Error::NotSymmetric { residual: sym_res });
    }
    SpElement::new(m, -(j_mat(m) * a))
}

/// Adjoint orbit of a covector: the coefficient row of
/// `e_*^{tH} * <a,u> * e_*^{-tH}` for the quadratic `H` with phase
/// generator `alpha`. In phase convention this is `a e^{-t alpha^T}`
/// (singularity-free for all `t`).
pub fn adjoint_orbit(a: &[Complex64], alpha: &SpElement, t: Complex64) -> Vec<Complex64> {
    let n = 2 * alpha.m;
    assert_eq!(a.len(), n);
    let e = expm(&alpha.mat.transpose().map(|z| z * (-t)));
    (0..n)
        .map(|j| (0..n).map(|i| a[i] * e[(i, j)]).sum())
        .collect()
}

/// Symplectic change of generators `u' = u S` on a Gaussian element:
/// phase `Q' = S^{-1} Q S^{-T}`, expression parameter `K' = S^T K S`.
pub fn change_generators_gaussian(
    e: &GaussianElement,
    s: &CMat,
    k: &CMat,
) -> Result<(GaussianElement, CMat)> {
    let m = e.m;
    let j = j_mat(m);
    let res = max_norm(&(s.transpose() * &j * s - &j));
    if res > 1e-10 {
        return Err(Error::NotSymplectic { residual: res });
    }
    let s_inv = inv_guarded(s, "change of generators")?;
    let q_new = &s_inv * &e.q * s_inv.transpose();
    let k_new = s.transpose() * k * s;
    Ok((
        GaussianElement {
            m,
            amp: e.amp,
            q: q_new,
            sheet: e.sheet,
        },
        k_new,
    ))
}

/// Terminating mixed product of a quadratic polynomial with a Gaussian:
/// pointwise evaluator of `(<uA,u> + c) *_Lambda (g e^{<uQ,u>/(i hbar)})`
/// from the bidifferential product formula (orders 0..2 only). Used as the
/// independent oracle for [`infinitesimal_action`].
pub fn mixed_quadratic_product<'a>(
    a: &CMat,
    c: Complex64,
    g: &'a GaussianElement,
    k: &CMat,
    hbar: f64,
) -> Box<dyn Fn(&[Complex64]) -> Complex64 + 'a> {
    let m = g.m;
    let n = 2 * m;
    let j = j_mat(m);
    let lambda = k + &j;
    let a = a.clone();
    let q = g.q.clone();
    let ih = c64(0.0, hbar);
    Box::new(move |u: &[Complex64]| {
        // row vectors uA and uQ
        let row = |mat: &CMat| -> Vec<Complex64> {
            (0..n)
                .map(|jj| (0..n).map(|i| u[i] * mat[(i, jj)]).sum())
                .collect()
        };
        let ua = row(&a);
        let uq = row(&q);
        let quad_a: Complex64 = (0..n).map(|i| u[i] * ua[i]).sum();
        // order 0
        let mut acc = quad_a + c;
        // order 1: (i hbar/2) Lambda^{ij} (d_i f)(d_j S), d_i f = 2(uA)_i,
        // d_j S = (2/i hbar)(uQ)_j
        let mut t1 = c64(0.0, 0.0);
        for i in 0..n {
            for jj in 0..n {
                t1 += ua[i] * lambda[(i, jj)] * uq[jj];
            }
        }
        acc += t1 * 2.0;
        // order 2: (i hbar/2)^2/2 Lambda^{i1 j1} Lambda^{i2 j2}
        //          (2 A_{i1 i2}) [ (2/ih)^2 (uQ)_{j1}(uQ)_{j2} + (2/ih) Q_{j1 j2} ]
        let mut t2 = c64(0.0, 0.0);
        for i1 in 0..n {
            for i2 in 0..n {
                if a[(i1, i2)].norm() == 0.0 {
                    continue;
                }
                for j1 in 0..n {
                    for j2 in 0..n {
                        let lam = lambda[(i1, j1)] * lambda[(i2, j2)];
                        if lam.norm() == 0.0 {
                            continue;
                        }
                        let dd = uq[j1] * uq[j2] * (4.0 / (ih * ih))
                            + q[(j1, j2)] * (2.0 / ih);
                        t2 += lam * a[(i1, i2)] * 2.0 * dd;
                    }
                }
            }
        }
        acc += t2 * (ih * ih) / 8.0;
        acc * g.eval(u, hbar)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample;

    fn sp1(entries: [f64; 4]) -> SpElement {
        SpElement::new(
            1,
            CMat::from_row_slice(
                2,
                2,
                &[
                    c64(entries[0], 0.0),
                    c64(entries[1], 0.0),
                    c64(entries[2], 0.0),
                    c64(entries[3], 0.0),
                ],
            ),
        )
        .unwrap()
    }

    #[test]
    fn sp_membership_is_checked() {
        // sl(2) = sp(1): traceless works, non-traceless fails
        assert!(SpElement::new(
            1,
            CMat::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)])
        )
        .is_err());
        sp1([0.3, 0.7, -0.2, -0.3]);
    }

    #[test]
    fn cayley_at_zero_is_identity() {
        let mut rng = sample::rng(7);
        let kappa = SpElement::new(1, sample::random_sp_algebra(&mut rng, 1, 0.4)).unwrap();
        let zero = SpElement::new(1, CMat::zeros(2, 2)).unwrap();
        let y = cayley(&kappa, &zero).unwrap();
        assert!(max_norm(&(y - identity(2))) < 1e-12);
    }

    #[test]
    fn cayley_is_involutive_at_kappa_zero() {
        let zero = CMat::zeros(2, 2);
        let mut rng = sample::rng(8);
        for _ in 0..20 {
            let x = sample::random_sp_algebra(&mut rng, 1, 0.3);
            let y = cayley_raw(&zero, &x).unwrap();
            let x2 = cayley_raw(&zero, &y).unwrap();
            assert!(max_norm(&(x2 - &x)) < 1e-9);
        }
    }

    #[test]
    fn cayley_determinant_identity() {
        // det(I + C_0(X)) * det(I + X) = 2^{2m}: the displayed reciprocal
        // identity holds up to the normalization of the chart.
        let mut rng = sample::rng(9);
        for _ in 0..20 {
            let x = sample::random_sp_algebra(&mut rng, 1, 0.3);
            let zero = CMat::zeros(2, 2);
            let y = cayley_raw(&zero, &x).unwrap();
            let lhs = det(&(identity(2) + &y));
            let rhs = det(&(identity(2) + &x));
            assert!((lhs * rhs - c64(4.0, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn cayley_round_trip() {
        let mut rng = sample::rng(10);
        for _ in 0..20 {
            let kappa =
                SpElement::new(1, sample::random_sp_algebra(&mut rng, 1, 0.3)).unwrap();
            let alpha =
                SpElement::new(1, sample::random_sp_algebra(&mut rng, 1, 0.3)).unwrap();
            let y = cayley(&kappa, &alpha).unwrap();
            // image is symplectic
            let j = j_mat(1);
            assert!(max_norm(&(&y * &j * y.transpose() - &j)) < 1e-10);
            let back = cayley_inverse(&kappa, &y).unwrap();
            assert!(max_norm(&(&back.mat - &alpha.mat)) < 1e-9);
        }
    }

    #[test]
    fn cayley_inverse_of_identity_is_zero() {
        let kappa = sp1([0.1, 0.2, 0.3, -0.1]);
        let z = cayley_inverse(&kappa, &identity(2)).unwrap();
        assert!(max_norm(&z.mat) < 1e-12);
    }

    #[test]
    fn chart_translate_matches_composed_cayley() {
        let mut rng = sample::rng(11);
        for _ in 0..20 {
            let kappa =
                SpElement::new(1, sample::random_sp_algebra(&mut rng, 1, 0.25)).unwrap();
            let kappa2 =
                SpElement::new(1, sample::random_sp_algebra(&mut rng, 1, 0.25)).unwrap();
            let alpha =
                SpElement::new(1, sample::random_sp_algebra(&mut rng, 1, 0.25)).unwrap();
            let direct = chart_translate(&alpha, &kappa, &kappa2).unwrap();
            let y = cayley(&kappa, &alpha).unwrap();
            let composed = cayley_inverse(&kappa2, &y).unwrap();
            assert!(max_norm(&(&direct.mat - &composed.mat)) < 1e-10);
            // identity translation
            let same = chart_translate(&alpha, &kappa, &kappa).unwrap();
            assert!(max_norm(&(&same.mat - &alpha.mat)) < 1e-13);
            // inverse undoes it
            let back = chart_translate_inv(&direct, &kappa, &kappa2).unwrap();
            assert!(max_norm(&(&back.mat - &alpha.mat)) < 1e-10);
        }
    }

    #[test]
    fn group_identity_and_inverse() {
        let mut rng = sample::rng(12);
        let kappa = SpElement::new(1, sample::random_sp_algebra(&mut rng, 1, 0.2)).unwrap();
        let a_mat = sample::random_sp_algebra(&mut rng, 1, 0.3);
        let a = SpElement::new(1, a_mat.clone()).unwrap();
        let id2 = identity(2);
        let amp_a = det(&(&id2 + &a_mat)).sqrt();
        let point = GroupPoint {
            amp: amp_a,
            alpha: a,
        };
        // (1;0) is the identity
        let e = GroupPoint::identity(1);
        let p1 = gaussian_product(&e, &point, &kappa).unwrap();
        assert!((p1.amp - point.amp).norm() < 1e-12);
        assert!(max_norm(&(&p1.alpha.mat - &point.alpha.mat)) < 1e-12);
        // (sqrt det(1+a); a) * (sqrt det(1-a); -a) = (1; 0) at kappa = 0
        let zero = SpElement::new(1, CMat::zeros(2, 2)).unwrap();
        let inv_point = GroupPoint {
            amp: det(&(&id2 - &a_mat)).sqrt(),
            alpha: SpElement::new(1, -a_mat.clone()).unwrap(),
        };
        let prod = gaussian_product(&point, &inv_point, &zero).unwrap();
        assert!(max_norm(&prod.alpha.mat) < 1e-10);
        assert!((prod.amp - c64(1.0, 0.0)).norm() < 1e-10 || (prod.amp + c64(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn product_phase_matches_cayley_group_multiplication() {
        let mut rng = sample::rng(13);
        for _ in 0..10 {
            let kappa =
                SpElement::new(1, sample::random_sp_algebra(&mut rng, 1, 0.2)).unwrap();
            let a = SpElement::new(1, sample::random_sp_algebra(&mut rng, 1, 0.25)).unwrap();
            let b = SpElement::new(1, sample::random_sp_algebra(&mut rng, 1, 0.25)).unwrap();
            let pa = GroupPoint {
                amp: c64(1.0, 0.0),
                alpha: a.clone(),
            };
            let pb = GroupPoint {
                amp: c64(1.0, 0.0),
                alpha: b.clone(),
            };
            let prod = gaussian_product(&pa, &pb, &kappa).unwrap();
            let y = cayley(&kappa, &a).unwrap() * cayley(&kappa, &b).unwrap();
            let expected = cayley_inverse(&kappa, &y).unwrap();
            assert!(max_norm(&(&prod.alpha.mat - &expected.mat)) < 1e-9);
        }
    }

    #[test]
    fn det_p_factorization_identity() {
        // det(P + Q(I+kappa)) = det(I + alpha(I+kappa)) det(I + beta(I+kappa))
        let mut rng = sample::rng(14);
        for _ in 0..10 {
            let m = 1 + (rng.gen_range(0..2) as usize);
            let n = 2 * m;
            let kappa = sample::random_sp_algebra(&mut rng, m, 0.2);
            let al = sample::random_sp_algebra(&mut rng, m, 0.3);
            let be = sample::random_sp_algebra(&mut rng, m, 0.3);
            let id = identity(n);
            let ip = &id + &kappa;
            let im = &id - &kappa;
            let p = &id + &al * &im * &be * &ip;
            let q = &al + &be + (&al * &kappa * &be).map(|z| z * 2.0);
            let lhs = det(&(&p + &q * &ip));
            let rhs = det(&(&id + &al * &ip)) * det(&(&id + &be * &ip));
            assert!((lhs - rhs).norm() < 1e-9 * rhs.norm().max(1.0));
        }
    }

    #[test]
    fn lemma_det_identities() {
        // det(I + xi(I+kappa)) = det(I - (I-kappa) xi) = det(I - xi(I-kappa))
        let mut rng = sample::rng(15);
        for _ in 0..10 {
            let m = 1 + (rng.gen_range(0..2) as usize);
            let n = 2 * m;
            let kappa = sample::random_sp_algebra(&mut rng, m, 0.4);
            let xi = sample::random_sp_algebra(&mut rng, m, 0.4);
            let id = identity(n);
            let d1 = det(&(&id + &xi * (&id + &kappa)));
            let d2 = det(&(&id - (&id - &kappa) * &xi));
            let d3 = det(&(&id - &xi * (&id - &kappa)));
            assert!((d1 - d2).norm() < 1e-10 * d1.norm().max(1.0));
            assert!((d2 - d3).norm() < 1e-10 * d1.norm().max(1.0));
        }
    }

    use rand::Rng;

    #[test]
    fn exp_quad_at_zero_is_one() {
        let mut rng = sample::rng(16);
        let alpha = SpElement::new(1, sample::random_sp_algebra(&mut rng, 1, 0.5)).unwrap();
        let k = sample::random_symmetric(&mut rng, 1, 0.5);
        let e = exp_quad(&alpha, c64(0.0, 0.0), &k).unwrap();
        assert!((e.amp - c64(1.0, 0.0)).norm() < 1e-12);
        assert!(max_norm(&e.q) < 1e-12);
    }

    #[test]
    fn exp_quad_unit_ordering_closed_form() {
        // m=1, H = (u^2+v^2)/(i hbar), K = I:
        // amplitude 1/(cos t - sin t), phase sin t/(cos t - sin t) * I
        let alpha = SpElement::from_quadratic(1, &identity(2)).unwrap();
        let k = identity(2);
        for i in 0..40 {
            let t = -0.6 + 1.2 * (i as f64) / 39.0;
            let e = exp_quad(&alpha, c64(t, 0.0), &k).unwrap();
            let denom = t.cos() - t.sin();
            let expected_amp = 1.0 / denom;
            assert!(
                (e.amp - c64(expected_amp, 0.0)).norm() < 1e-10 * expected_amp.abs(),
                "t = {t}"
            );
            let expected_q = identity(2).map(|z| z * (t.sin() / denom));
            assert!(max_norm(&(&e.q - &expected_q)) < 1e-10);
        }
    }

    #[test]
    fn exp_quad_singularity_is_an_error() {
        // Weyl ordering: the u^2+v^2 family is singular at t = pi/2
        let alpha = SpElement::from_quadratic(1, &identity(2)).unwrap();
        let k = CMat::zeros(2, 2);
        assert!(matches!(
            exp_quad(&alpha, c64(std::f64::consts::FRAC_PI_2, 0.0), &k),
            Err(Error::SingularPoint { .. })
        ));
    }

    #[test]
    fn exp_quad_phase_equals_inverse_cayley_of_group_flow() {
        let mut rng = sample::rng(17);
        for _ in 0..10 {
            let alpha =
                SpElement::new(1, sample::random_sp_algebra(&mut rng, 1, 0.4)).unwrap();
            let k = sample::random_symmetric(&mut rng, 1, 0.3);
            let kappa = SpElement::new(1, kappa_of(&k)).unwrap();
            let t = c64(rng.gen_range(-0.4..0.4), rng.gen_range(-0.3..0.3));
            let e = exp_quad(&alpha, t, &k).unwrap();
            let y = expm(&alpha.mat.map(|z| z * (-2.0 * t)));
            let expected = cayley_inverse(&kappa, &y).unwrap();
            let got = e.phase_sp();
            assert!(max_norm(&(&got - &expected.mat)) < 1e-9);
        }
    }

    #[test]
    fn exp_quad_lies_on_integral_manifold() {
        let mut rng = sample::rng(18);
        for _ in 0..10 {
            let alpha =
                SpElement::new(1, sample::random_sp_algebra(&mut rng, 1, 0.4)).unwrap();
            let k = sample::random_symmetric(&mut rng, 1, 0.3);
            let kappa = SpElement::new(1, kappa_of(&k)).unwrap();
            let t = c64(rng.gen_range(-0.5..0.5), 0.0);
            let e = exp_quad(&alpha, t, &k).unwrap();
            assert!(on_integral_manifold(&e, &kappa, 1e-9).unwrap());
        }
    }

    #[test]
    fn integral_manifold_amplitude_trivial_cases() {
        let zero = SpElement::new(1, CMat::zeros(2, 2)).unwrap();
        let kappa = sp1([0.2, 0.1, 0.4, -0.2]);
        assert!((integral_manifold_amplitude(&zero, &kappa).unwrap() - c64(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn vacuum_orbit_degenerates_in_every_chart() {
        // alpha = diag(1,-1): det(I + alpha) = 0; the intertwined Gaussian
        // keeps a degenerate manifold amplitude in every chart.
        let alpha = sp1([1.0, 0.0, 0.0, -1.0]);
        let mut rng = sample::rng(19);
        for _ in 0..10 {
            let kappa =
                SpElement::new(1, sample::random_sp_algebra(&mut rng, 1, 0.3)).unwrap();
            // T_{-kappa}(alpha) has det(I + T(alpha)(I+kappa)) = 0 as well
            let zero = SpElement::new(1, CMat::zeros(2, 2)).unwrap();
            if let Ok(moved) = chart_translate(&alpha, &zero, &kappa) {
                let d = det(&(identity(2) + &moved.mat * (identity(2) + &kappa.mat)));
                assert!(d.norm() < 1e-9, "vacuum escaped the degenerate locus");
            }
        }
    }

    #[test]
    fn delta_k_basics() {
        let k = CMat::from_row_slice(
            2,
            2,
            &[c64(0.7, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(-0.3, 0.0)],
        );
        assert!((delta_k(c64(0.0, 0.0), &k) - c64(1.0, 0.0)).norm() < 1e-14);
        // diagonal M: product (cos t + a sin t)(cos t + b sin t)
        let t = c64(0.3, -0.2);
        let expected = (t.cos() + t.sin() * 0.7) * (t.cos() - t.sin() * 0.3);
        assert!((delta_k(t, &k) - expected).norm() < 1e-12);
    }

    #[test]
    fn adjoint_orbit_group_law_and_period() {
        let mut rng = sample::rng(20);
        let alpha = SpElement::new(1, sample::random_sp_algebra(&mut rng, 1, 0.5)).unwrap();
        let a = vec![c64(0.3, 0.1), c64(-0.7, 0.4)];
        let s = c64(0.4, 0.2);
        let t = c64(-0.3, 0.6);
        let two_step = adjoint_orbit(&adjoint_orbit(&a, &alpha, s), &alpha, t);
        let one_step = adjoint_orbit(&a, &alpha, s + t);
        for (x, y) in two_step.iter().zip(&one_step) {
            assert!((x - y).norm() < 1e-12);
        }
        // rotation generator: 2 pi periodic
        let g = sample::random_sp_group(&mut rng, 1, 0.4);
        let g_inv = g.clone().try_inverse().unwrap();
        let rot = SpElement::new(1, &g * j_mat(1) * g_inv).unwrap();
        let orbit = adjoint_orbit(&a, &rot, c64(2.0 * std::f64::consts::PI, 0.0));
        for (x, y) in orbit.iter().zip(&a) {
            assert!((x - y).norm() < 1e-10);
        }
        // t = 0 is the identity
        let same = adjoint_orbit(&a, &alpha, c64(0.0, 0.0));
        for (x, y) in same.iter().zip(&a) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn change_generators_identity_and_rotation() {
        let e = GaussianElement::new(
            1,
            c64(0.8, 0.1),
            CMat::from_row_slice(2, 2, &[c64(0.5, 0.0), c64(0.1, 0.2), c64(0.1, 0.2), c64(-0.4, 0.3)]),
        )
        .unwrap();
        let k = identity(2).map(|z| z * c64(0.3, 0.0));
        let (same, k_same) = change_generators_gaussian(&e, &identity(2), &k).unwrap();
        assert!(max_norm(&(&same.q - &e.q)) < 1e-14);
        assert!(max_norm(&(&k_same - &k)) < 1e-14);
        // non-symplectic S rejected
        let bad = identity(2).map(|z| z * 2.0);
        assert!(change_generators_gaussian(&e, &bad, &k).is_err());
    }
}
