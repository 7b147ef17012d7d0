//! Closed-form calculus of star-exponentials of linear forms: K-ordered
//! expressions, the exponential law, translation products against
//! holomorphic functions, the delta element, and one-sided inverses.
//!
//! Everything here is numeric (complex double precision, runtime positive
//! `hbar`); the exact identities live in [`crate::poly`].

use crate::error::{Error, Result};
use crate::numerics::{c64, erfcx, CMat};
use crate::quad::GaussianElement;
use num::complex::Complex64;
use std::f64::consts::PI;

/// `<a K, a> = sum_ij a_i K_ij a_j` (bilinear, no conjugation).
pub fn quad_form(a: &[Complex64], k: &CMat) -> Complex64 {
    let n = a.len();
    let mut acc = c64(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[i] * k[(i, j)] * a[j];
        }
    }
    acc
}

/// `<a J, b>` with the standard skew matrix for half-dimension `m = n/2`.
pub fn pair_j(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let m = a.len() / 2;
    let mut acc = c64(0.0, 0.0);
    for i in 0..m {
        // (aJ)_j: aJ has entries (a_{m+..}, -a_{..}) pattern
        // J = [[0,-I],[I,0]]: (aJ)_i = a_{m+i}, (aJ)_{m+i} = -a_i
        acc += a[i + m] * b[i] - a[i] * b[i + m];
    }
    acc
}

/// The element `e_*^{(s/i hbar)<a,u>}`, canonicalized so that `|a| = 1`
/// whenever the covector is nonzero (the pair `(t a, s/t)` names the same
/// element).
#[derive(Clone, Debug)]
pub struct LinearExponential {
    pub m: usize,
    pub a: Vec<Complex64>,
    pub s: Complex64,
}

impl LinearExponential {
    pub fn new(m: usize, a: Vec<Complex64>, s: Complex64) -> Result<Self> {
        if a.len() != 2 * m {
            return Err(Error::DimensionMismatch {
                expected: 2 * m,
                got: a.len(),
            });
        }
        let w: Vec<Complex64> = a.iter().map(|z| z * s).collect();
        let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok(Self {
                m,
                a: vec![c64(0.0, 0.0); 2 * m],
                s: c64(0.0, 0.0),
            });
        }
        Ok(Self {
            m,
            a: w.iter().map(|z| z / norm).collect(),
            s: c64(norm, 0.0),
        })
    }

    /// The total covector `s * a` of the exponent.
    pub fn covector(&self) -> Vec<Complex64> {
        self.a.iter().map(|z| z * self.s).collect()
    }

    pub fn is_one(&self) -> bool {
        self.s.norm() == 0.0
    }
}

/// K-ordered expression: the scalar `exp(<wK,w>/(4 i hbar))` and the
/// surviving covector `w = s a`, so the expression reads
/// `amplitude * exp(<w,u>/(i hbar))`.
pub fn k_expression(
    e: &LinearExponential,
    k: &CMat,
    hbar: f64,
) -> (Complex64, Vec<Complex64>) {
    let w = e.covector();
    let amp = (quad_form(&w, k) / (c64(0.0, 4.0 * hbar))).exp();
    (amp, w)
}

/// Product of two linear star-exponentials: the scalar
/// `exp(<aJ,b>/(2 i hbar))` (with scales folded into the covectors) and
/// the combined element. The scalar does not depend on the expression
/// parameter.
pub fn product(
    e1: &LinearExponential,
    e2: &LinearExponential,
    hbar: f64,
) -> Result<(Complex64, LinearExponential)> {
    if e1.m != e2.m {
        return Err(Error::DimensionMismatch {
            expected: 2 * e1.m,
            got: 2 * e2.m,
        });
    }
    let wa = e1.covector();
    let wb = e2.covector();
    let scalar = (pair_j(&wa, &wb) / c64(0.0, 2.0 * hbar)).exp();
    let sum: Vec<Complex64> = wa.iter().zip(&wb).map(|(x, y)| x + y).collect();
    let combined = LinearExponential::new(e1.m, sum, c64(1.0, 0.0))?;
    Ok((scalar, combined))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Pointwise evaluator of `e^{s<a,u>/(i hbar)} *_K f` (left) or
/// `f *_K e^{s<a,u>/(i hbar)}` (right): the plain exponential times `f`
/// shifted by `(s/2) a (K + J)` resp. `(s/2) a (K - J)`.
pub fn translate_product<'f>(
    e: &LinearExponential,
    f: Box<dyn Fn(&[Complex64]) -> Complex64 + 'f>,
    k: &CMat,
    side: Side,
    hbar: f64,
) -> Box<dyn Fn(&[Complex64]) -> Complex64 + 'f> {
    let m = e.m;
    let n = 2 * m;
    let w = e.covector(); // s*a
    // shift_j = (1/2) sum_i w_i (K +/- J)_{ij}
    let mut shift = vec![c64(0.0, 0.0); n];
    for j in 0..n {
        let mut acc = c64(0.0, 0.0);
        for i in 0..n {
            let jij = crate::poly::j_entry(m, i, j) as f64;
            let sign = match side {
                Side::Left => 1.0,
                Side::Right => -1.0,
            };
            acc += w[i] * (k[(i, j)] + c64(jij, 0.0) * sign);
        }
        shift[j] = acc / 2.0;
    }
    let ih = c64(0.0, hbar);
    Box::new(move |u: &[Complex64]| {
        let lin: Complex64 = w.iter().zip(u).map(|(a, x)| a * x).sum();
        let shifted: Vec<Complex64> = u.iter().zip(&shift).map(|(x, d)| x + d).collect();
        (lin / ih).exp() * f(&shifted)
    })
}

/// Siegel-class check: `Re(<aK,a>/(i hbar)) < 0`.
pub fn siegel_ok(a: &[Complex64], k: &CMat, hbar: f64) -> Result<Complex64> {
    let q = quad_form(a, k);
    let v = (q / c64(0.0, hbar)).re;
    if v < 0.0 {
        Ok(q)
    } else {
        Err(Error::NotSiegel { value: v })
    }
}

/// The delta element `(1/2 pi hbar) int e_*^{t<a,u>/(i hbar)} dt` as a
/// rank-one Gaussian, defined for Siegel-class parameters.
pub fn delta_star(a: &[Complex64], k: &CMat, hbar: f64) -> Result<GaussianElement> {
    let q = siegel_ok(a, k, hbar)?;
    let m = a.len() / 2;
    // amplitude: (1/2 pi hbar) * 2 sqrt(-i hbar pi / <aK,a>)
    let amp = (c64(0.0, -hbar * PI) / q).sqrt() * 2.0 / (2.0 * PI * hbar);
    // phase: -(1/<aK,a>) a^T a  (element is amp * e^{<uQ,u>/(i hbar)})
    let n = 2 * m;
    let mut qmat = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            qmat[(i, j)] = -a[i] * a[j] / q;
        }
    }
    GaussianElement::new(m, amp, qmat)
}

/// A one-variable holomorphic function with its derivative.
pub struct ScalarField1D {
    pub f: Box<dyn Fn(Complex64) -> Complex64>,
    pub df: Box<dyn Fn(Complex64) -> Complex64>,
}

impl ScalarField1D {
    /// Largest relative mismatch between `df` and central differences of
    /// `f` over a grid; the type invariant wants this below 1e-6.
    pub fn derivative_residual(&self, grid: &[Complex64]) -> f64 {
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for &x in grid {
            let fd = ((self.f)(x + c64(h, 0.0)) - (self.f)(x - c64(h, 0.0))) / (2.0 * h);
            let d = (self.df)(x);
            let denom = d.norm().max(1.0);
            worst = worst.max((fd - d).norm() / denom);
        }
        worst
    }
}

/// `<a,u> *_K f(<a,u>)` reduced to one variable:
/// `x f(x) + (i hbar / 2) <aK,a> f'(x)`. The derivative of the result is
/// formed by central differences.
pub fn reduced_1d_product(
    a: &[Complex64],
    k: &CMat,
    f: ScalarField1D,
    hbar: f64,
) -> ScalarField1D {
    let q = quad_form(a, k);
    let c = c64(0.0, hbar / 2.0) * q;
    let f = std::rc::Rc::new(f);
    let f1 = f.clone();
    let g = move |x: Complex64| x * (f1.f)(x) + c * (f1.df)(x);
    let g2 = g.clone();
    let dg = move |x: Complex64| {
        let h = 1e-5;
        (g2(x + c64(h, 0.0)) - g2(x - c64(h, 0.0))) / (2.0 * h)
    };
    ScalarField1D {
        f: Box::new(g),
        df: Box::new(dg),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InverseSide {
    Plus,
    Minus,
}

/// One-sided star-inverse of `(1/i hbar)<a,u>` as a closed-form evaluator:
/// the half-line integrals of the K-expression Gaussian, written with the
/// scaled complementary error function. Requires the Siegel condition.
pub fn one_sided_inverse(
    a: &[Complex64],
    k: &CMat,
    side: InverseSide,
    hbar: f64,
) -> Result<ScalarField1D> {
    let q = siegel_ok(a, k, hbar)?;
    let gamma = q / c64(0.0, 4.0 * hbar);
    let p = -gamma; // Re p > 0
    let sp = p.sqrt();
    let ih = c64(0.0, hbar);
    let pref = (c64(PI, 0.0) / p).sqrt() / 2.0;
    let value = move |x: Complex64| {
        let beta = x / ih;
        let zeta = beta / (sp * 2.0);
        match side {
            InverseSide::Plus => pref * erfcx(zeta),
            InverseSide::Minus => -pref * erfcx(-zeta),
        }
    };
    let value2 = value;
    let deriv = move |x: Complex64| {
        let beta = x / ih;
        (c64(1.0, 0.0) - beta * value2(x)) / (ih * gamma * 2.0)
    };
    Ok(ScalarField1D {
        f: Box::new(value),
        df: Box::new(deriv),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::identity;

    fn k_zero(m: usize) -> CMat {
        CMat::zeros(2 * m, 2 * m)
    }

    #[test]
    fn canonical_form_fixes_unit_covector() {
        let e = LinearExponential::new(1, vec![c64(3.0, 0.0), c64(0.0, 4.0)], c64(2.0, 0.0))
            .unwrap();
        let norm: f64 = e.a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-14);
        // covector is preserved
        let w = e.covector();
        assert!((w[0] - c64(6.0, 0.0)).norm() < 1e-12);
        assert!((w[1] - c64(0.0, 8.0)).norm() < 1e-12);
    }

    #[test]
    fn weyl_expression_is_plain_exponential() {
        let e = LinearExponential::new(1, vec![c64(1.0, 0.0), c64(0.5, -0.25)], c64(1.3, 0.2))
            .unwrap();
        let (amp, _) = k_expression(&e, &k_zero(1), 1.0);
        assert!((amp - c64(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn zero_scale_gives_unit_element() {
        let e = LinearExponential::new(1, vec![c64(1.0, 0.0), c64(0.0, 0.0)], c64(0.0, 0.0))
            .unwrap();
        assert!(e.is_one());
        let (amp, w) = k_expression(&e, &identity(2), 1.0);
        assert!((amp - c64(1.0, 0.0)).norm() < 1e-14);
        assert!(w.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn product_scalar_for_crossed_covectors() {
        // m=1, a=(1,0), b=(0,1), hbar=1: <aJ,b> = -1, scalar = e^{i/2}
        let e1 = LinearExponential::new(1, vec![c64(1.0, 0.0), c64(0.0, 0.0)], c64(1.0, 0.0))
            .unwrap();
        let e2 = LinearExponential::new(1, vec![c64(0.0, 0.0), c64(1.0, 0.0)], c64(1.0, 0.0))
            .unwrap();
        let (scalar, comb) = product(&e1, &e2, 1.0).unwrap();
        let expected = c64(0.0, 0.5).exp();
        assert!((scalar - expected).norm() < 1e-14);
        let w = comb.covector();
        assert!((w[0] - c64(1.0, 0.0)).norm() < 1e-14);
        assert!((w[1] - c64(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn product_with_unit_element() {
        let one = LinearExponential::new(1, vec![c64(0.0, 0.0); 2], c64(1.0, 0.0)).unwrap();
        let e2 = LinearExponential::new(1, vec![c64(0.2, 0.1), c64(1.0, 0.0)], c64(0.7, 0.0))
            .unwrap();
        let (scalar, comb) = product(&one, &e2, 1.0).unwrap();
        assert!((scalar - c64(1.0, 0.0)).norm() < 1e-14);
        let d: f64 = comb
            .covector()
            .iter()
            .zip(&e2.covector())
            .map(|(x, y)| (x - y).norm())
            .sum();
        assert!(d < 1e-14);
    }

    #[test]
    fn collinear_exponents_add_with_unit_scalar() {
        let a = vec![c64(0.6, 0.3), c64(-0.2, 1.0)];
        let e1 = LinearExponential::new(1, a.clone(), c64(0.4, 0.0)).unwrap();
        let e2 = LinearExponential::new(1, a.clone(), c64(1.1, 0.0)).unwrap();
        let (scalar, comb) = product(&e1, &e2, 1.0).unwrap();
        assert!((scalar - c64(1.0, 0.0)).norm() < 1e-13);
        let w = comb.covector();
        for (wi, ai) in w.iter().zip(&a) {
            assert!((wi - ai * c64(1.5, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn translation_shift_weyl_case() {
        // m=1, a=(1,0), K=0, f(u,v)=v: left product is e^{su/ih} (v - s/2)
        let s = c64(0.8, 0.0);
        let e = LinearExponential::new(1, vec![c64(1.0, 0.0), c64(0.0, 0.0)], s).unwrap();
        let f = Box::new(|u: &[Complex64]| u[1]);
        let prod = translate_product(&e, f, &k_zero(1), Side::Left, 1.0);
        let u = [c64(0.3, 0.0), c64(-0.7, 0.2)];
        let expected = (s * u[0] / c64(0.0, 1.0)).exp() * (u[1] - s / 2.0);
        assert!((prod(&u) - expected).norm() < 1e-13);
    }

    #[test]
    fn translation_constant_function_unchanged() {
        let s = c64(0.5, 0.1);
        let e = LinearExponential::new(1, vec![c64(0.0, 1.0), c64(1.0, 0.0)], s).unwrap();
        let k = identity(2);
        let f = Box::new(|_: &[Complex64]| c64(1.0, 0.0));
        let prod = translate_product(&e, f, &k, Side::Right, 2.0);
        let w = e.covector();
        let u = [c64(0.2, -0.1), c64(0.4, 0.3)];
        let lin: Complex64 = w.iter().zip(&u).map(|(a, x)| a * x).sum();
        let expected = (lin / c64(0.0, 2.0)).exp();
        assert!((prod(&u) - expected).norm() < 1e-13);
    }

    #[test]
    fn siegel_rejection() {
        // K = I, a = (1,0), hbar = 1: <aK,a> = 1, Re(1/i) = 0, not Siegel
        let a = vec![c64(1.0, 0.0), c64(0.0, 0.0)];
        assert!(matches!(
            delta_star(&a, &identity(2), 1.0),
            Err(Error::NotSiegel { .. })
        ));
        assert!(one_sided_inverse(&a, &identity(2), InverseSide::Plus, 1.0).is_err());
    }

    #[test]
    fn delta_is_annihilated_by_the_linear_form() {
        // K = -i I is Siegel; <a,u> *_K (delta kernel) = 0 pointwise.
        let m = 1;
        let a = vec![c64(1.0, 0.0), c64(0.0, 0.0)];
        let k = identity(2).map(|z| z * c64(0.0, -1.0));
        let hbar = 1.0;
        let q = quad_form(&a, &k);
        let delta = delta_star(&a, &k, hbar).unwrap();
        // reduced product with f(x) = e^{-x^2/(i hbar <aK,a>)}
        let f = ScalarField1D {
            f: Box::new(move |x| (-x * x / (c64(0.0, hbar) * q)).exp()),
            df: Box::new(move |x| {
                (-x * x / (c64(0.0, hbar) * q)).exp() * (-2.0 * x / (c64(0.0, hbar) * q))
            }),
        };
        let prod = reduced_1d_product(&a, &k, f, hbar);
        for i in 0..20 {
            let x = c64(-2.0 + 4.0 * (i as f64) / 19.0, 0.0);
            assert!((prod.f)(x).norm() < 1e-10, "residual at {x}");
        }
        let _ = delta;
        let _ = m;
    }

    #[test]
    fn one_sided_inverses_invert_the_linear_form() {
        let a = vec![c64(1.0, 0.0), c64(0.0, 0.0)];
        let k = identity(2).map(|z| z * c64(0.1, -0.9));
        let hbar = 0.7;
        for side in [InverseSide::Plus, InverseSide::Minus] {
            let inv = one_sided_inverse(&a, &k, side, hbar).unwrap();
            let prod = reduced_1d_product(&a, &k, inv, hbar);
            // (1/i hbar) <a,u> *_K inv = 1, so <a,u> *_K inv = i hbar
            for i in 0..10 {
                let x = c64(-1.5 + 3.0 * (i as f64) / 9.0, 0.3);
                let got = (prod.f)(x);
                assert!(
                    (got - c64(0.0, hbar)).norm() < 1e-6,
                    "side {side:?} at {x}: {got}"
                );
            }
        }
    }

    #[test]
    fn inverse_derivative_matches_finite_differences() {
        let a = vec![c64(1.0, 0.0), c64(0.0, 0.0)];
        let k = identity(2).map(|z| z * c64(0.0, -1.0));
        let inv = one_sided_inverse(&a, &k, InverseSide::Plus, 1.0).unwrap();
        let grid: Vec<Complex64> = (0..10)
            .map(|i| c64(-2.0 + 4.0 * (i as f64) / 9.0, 0.2))
            .collect();
        assert!(inv.derivative_residual(&grid) < 1e-6);
    }

    #[test]
    fn associativity_failure_witness() {
        // ((inv+ * l) * inv-) - (inv+ * (l * inv-)) = inv- - inv+ != 0:
        // equivalently inv+ and inv- differ, while both invert l.
        let a = vec![c64(1.0, 0.0), c64(0.0, 0.0)];
        let k = identity(2).map(|z| z * c64(0.0, -1.0));
        let plus = one_sided_inverse(&a, &k, InverseSide::Plus, 1.0).unwrap();
        let minus = one_sided_inverse(&a, &k, InverseSide::Minus, 1.0).unwrap();
        let x = c64(0.4, 0.0);
        let diff = (plus.f)(x) - (minus.f)(x);
        assert!(diff.norm() > 1e-3);
    }
}
