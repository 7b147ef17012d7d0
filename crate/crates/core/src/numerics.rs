//! Numeric building blocks: complex matrices, matrix exponential,
//! eigenvalues of small complex matrices, the Faddeeva function, and
//! square-root continuation helpers.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num::complex::Complex64;
use std::f64::consts::PI;

pub type CMat = DMatrix<Complex64>;

pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Standard skew matrix `J = [[0,-I],[I,0]]` for half-dimension `m`.
pub fn j_mat(m: usize) -> CMat {
    let n = 2 * m;
    let mut j = CMat::zeros(n, n);
    for i in 0..m {
        j[(i, i + m)] = c64(-1.0, 0.0);
        j[(i + m, i)] = c64(1.0, 0.0);
    }
    j
}

pub fn frob_norm(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Max-entry norm, used for residual reporting.
pub fn max_norm(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn det(a: &CMat) -> Complex64 {
    a.clone().lu().determinant()
}

/// Inverse with a condition-number guard: `||A||_1 * ||A^{-1}||_1 > 1e12`
/// is treated as singular so near-boundary inputs fail loudly.
pub fn inv_guarded(a: &CMat, context: &str) -> Result<CMat> {
    let lu = a.clone().lu();
    match lu.try_inverse() {
        Some(inv) => {
            let cond = one_norm(a) * one_norm(&inv);
            if !cond.is_finite() || cond > 1e12 {
                Err(Error::OutsideChart(format!(
                    "{context}: condition number {cond:.3e} beyond guard"
                )))
            } else {
                Ok(inv)
            }
        }
        None => Err(Error::OutsideChart(format!("{context}: singular matrix"))),
    }
}

pub fn one_norm(a: &CMat) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Scaling-and-squaring matrix exponential with a diagonal Pade
/// approximant, adequate to ~1e-13 for the small matrices used here.
pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    let norm = one_norm(a);
    let mut s = 0u32;
    let mut scaled = a.clone();
    if norm > 0.5 {
        s = (norm / 0.5).log2().ceil() as u32;
        let div = 2f64.powi(s as i32);
        scaled = a.map(|z| z / div);
    }
    // [13/13] Pade on the scaled matrix.
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let id = identity(n);
    let u_inner = &a6 * (a6.map(|z| z * B[13]) + a4.map(|z| z * B[11]) + a2.map(|z| z * B[9]))
        + a6.map(|z| z * B[7])
        + a4.map(|z| z * B[5])
        + a2.map(|z| z * B[3])
        + id.map(|z| z * B[1]);
    let u = &scaled * &u_inner;
    let v = &a6 * (a6.map(|z| z * B[12]) + a4.map(|z| z * B[10]) + a2.map(|z| z * B[8]))
        + a6.map(|z| z * B[6])
        + a4.map(|z| z * B[4])
        + a2.map(|z| z * B[2])
        + id.map(|z| z * B[0]);
    let num = &v + &u;
    let den = &v - &u;
    let mut r = den
        .lu()
        .solve(&num)
        .expect("Pade denominator should be invertible");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Characteristic polynomial coefficients by the Faddeev-LeVerrier
/// recursion: returns `c` with `det(tI - A) = t^n + c[0] t^{n-1} + ... + c[n-1]`.
pub fn char_poly(a: &CMat) -> Vec<Complex64> {
    let n = a.nrows();
    let mut coeffs = Vec::with_capacity(n);
    let mut m = identity(n);
    for k in 1..=n {
        m = a * &m;
        let c = -m.diagonal().sum() / c64(k as f64, 0.0);
        coeffs.push(c);
        for i in 0..n {
            m[(i, i)] += c;
        }
    }
    coeffs
}

/// Roots of a monic polynomial `t^n + c[0] t^{n-1} + ... + c[n-1]` by
/// Durand-Kerner iteration.
pub fn poly_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len();
    if n == 0 {
        return vec![];
    }
    if n == 1 {
        return vec![-coeffs[0]];
    }
    if n == 2 {
        let b = coeffs[0];
        let c = coeffs[1];
        let disc = (b * b - c * 4.0).sqrt();
        return vec![(-b + disc) / 2.0, (-b - disc) / 2.0];
    }
    let eval = |z: Complex64| {
        let mut acc = Complex64::new(1.0, 0.0);
        for c in coeffs {
            acc = acc * z + c;
        }
        acc
    };
    let radius = 1.0
        + coeffs
            .iter()
            .map(|c| c.norm())
            .fold(0.0f64, f64::max);
    let mut roots: Vec<Complex64> = (0..n)
        .map(|k| {
            let theta = 2.0 * PI * k as f64 / n as f64 + 0.35;
            Complex64::from_polar(radius * 0.6, theta)
        })
        .collect();
    for _ in 0..200 {
        let mut max_step = 0.0f64;
        for i in 0..n {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            if denom.norm() == 0.0 {
                continue;
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            max_step = max_step.max(step.norm());
        }
        if max_step < 1e-14 * radius.max(1.0) {
            break;
        }
    }
    roots
}

pub fn eigenvalues(a: &CMat) -> Vec<Complex64> {
    poly_roots(&char_poly(a))
}

/// Continue a square root along a ratio in the right half-plane: given the
/// previous value `sqrt_prev` of `sqrt(d_prev)`, return the continuation of
/// `sqrt(d_new)`. The caller must keep `d_new/d_prev` away from the
/// negative real axis.
pub fn continue_sqrt(sqrt_prev: Complex64, d_prev: Complex64, d_new: Complex64) -> Complex64 {
    sqrt_prev * (d_new / d_prev).sqrt()
}

/// Midpoint trapezoidal rule with pole correction (Chiarella-Reichel),
/// accurate away from the real axis.
fn faddeeva_core(z: Complex64) -> Complex64 {
    const H: f64 = 0.3;
    const N: usize = 24;
    let inv_pi = 1.0 / PI;
    let mut sum = Complex64::new(0.0, 0.0);
    let z2 = z * z;
    for k in 0..N {
        let t = (k as f64 + 0.5) * H;
        let w = (-t * t).exp();
        // pair t and -t: 1/(z-t) + 1/(z+t) = 2z/(z^2 - t^2)
        sum += (z * 2.0 / (z2 - c64(t * t, 0.0))) * w;
    }
    let mut w = Complex64::new(0.0, 1.0) * inv_pi * H * sum;
    // Pole correction for the midpoint rule, significant when Im z < pi/H.
    if z.im < PI / H {
        let e = (Complex64::new(0.0, -2.0 * PI / H) * z).exp();
        w += (-z2).exp() * 2.0 / (e + 1.0);
    }
    w
}

/// The Faddeeva function `w(z) = exp(-z^2) erfc(-iz)` for `Im z >= 0`.
/// Near the real axis the quadrature nodes sit close to the pole, so the
/// value is lifted by a Taylor series from `z + 0.6i` using the
/// derivative recurrence `w^{(n+1)} = -2 z w^{(n)} - 2 n w^{(n-1)}`.
fn faddeeva_upper(z: Complex64) -> Complex64 {
    debug_assert!(z.im >= 0.0);
    if z.im >= 0.1 {
        return faddeeva_core(z);
    }
    const LIFT: f64 = 0.6;
    const TERMS: usize = 44;
    let z0 = c64(z.re, z.im + LIFT);
    let w0 = faddeeva_core(z0);
    let two_over_sqrt_pi = 1.1283791670955126;
    let mut d_prev = w0;
    let mut d_cur = -z0 * 2.0 * w0 + c64(0.0, two_over_sqrt_pi);
    let dz = z - z0;
    let mut acc = d_prev;
    let mut pow = Complex64::new(1.0, 0.0);
    let mut fact = 1.0f64;
    for n in 1..TERMS {
        pow *= dz;
        fact *= n as f64;
        acc += d_cur * pow / fact;
        let d_next = -z0 * 2.0 * d_cur - d_prev * (2.0 * n as f64);
        d_prev = d_cur;
        d_cur = d_next;
    }
    acc
}

/// Faddeeva `w(z)` on the whole plane via `w(-z) = 2 exp(-z^2) - w(z)`.
pub fn faddeeva(z: Complex64) -> Complex64 {
    if z.im >= 0.0 {
        faddeeva_upper(z)
    } else {
        (-z * z).exp() * 2.0 - faddeeva_upper(-z)
    }
}

/// Scaled complementary error function `erfcx(z) = exp(z^2) erfc(z)`.
pub fn erfcx(z: Complex64) -> Complex64 {
    if z.re >= 0.0 {
        faddeeva(Complex64::new(-z.im, z.re)) // w(iz)
    } else {
        // erfc(z) = 2 - erfc(-z)
        (z * z).exp() * 2.0 - faddeeva(Complex64::new(z.im, -z.re))
    }
}

/// Complementary error function for complex argument.
pub fn erfc(z: Complex64) -> Complex64 {
    (-z * z).exp() * erfcx(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: Complex64, b: Complex64, tol: f64) {
        assert!(
            (a - b).norm() <= tol * b.norm().max(1e-300),
            "{a} vs {b}"
        );
    }

    #[test]
    fn faddeeva_against_reference_values() {
        // Reference values computed with an independent implementation of
        // w(z) (scipy.special.wofz), frozen here.
        let cases = [
            (c64(1.0, 1.0), c64(0.30474420525691254, 0.2082189382028316)),
            (c64(0.0, 1.0), c64(0.427583576155807, 0.0)),
            (c64(3.5, 0.0), c64(4.785117392129009e-6, 0.16882988857996767)),
            (c64(5.0, -2.0), c64(-0.04064367571463329, 0.09798731254106516)),
            (c64(-2.0, 4.0), c64(0.11213947790211609, -0.05348899385296694)),
            (c64(8.0, 0.001), c64(9.030620666703274e-6, 0.07108811058762673)),
            (c64(0.3, 0.0), c64(0.9139311852712282, 0.3189156827715659)),
            (c64(12.0, 9.0), c64(0.02264576926880428, 0.03006013286949044)),
            (c64(6.0, 1e-12), c64(1.660729281684105e-14, 0.09539620896911122)),
            (c64(10.0, 0.02), c64(0.00011457387606635824, 0.05670516152130732)),
            (c64(2.2, 0.05), c64(0.01697543408289438, 0.2964677850138375)),
        ];
        for (z, expected) in cases {
            assert_close(faddeeva(z), expected, 2e-10);
        }
    }

    #[test]
    fn erfc_symmetry_and_real_axis() {
        // erfc(0.5) = 0.4795001221869535 (real axis cross-check)
        let v = erfc(c64(0.5, 0.0));
        assert_close(v, c64(0.4795001221869535, 0.0), 1e-12);
        // reflection: erfc(z) + erfc(-z) = 2 holds by construction
        let z = c64(1.3, -0.7);
        let s = erfc(z) + erfc(-z);
        assert_close(s, c64(2.0, 0.0), 1e-12);
    }

    #[test]
    fn expm_of_skew_block_is_rotation() {
        let j = j_mat(1);
        let t = 0.7;
        let e = expm(&j.map(|z| z * t));
        // e^{tJ} = cos t I + sin t J
        let expected = identity(2).map(|z| z * t.cos()) + j.map(|z| z * t.sin());
        assert!(max_norm(&(&e - &expected)) < 1e-13);
    }

    #[test]
    fn expm_inverse_property() {
        let a = CMat::from_row_slice(
            2,
            2,
            &[c64(0.3, 0.1), c64(-0.2, 0.5), c64(0.9, -0.4), c64(-0.3, -0.1)],
        );
        let e = expm(&a);
        let einv = expm(&a.map(|z| -z));
        let prod = &e * &einv;
        assert!(max_norm(&(&prod - &identity(2))) < 1e-12);
    }

    #[test]
    fn eigenvalues_of_diagonalizable_matrix() {
        let a = CMat::from_row_slice(
            2,
            2,
            &[c64(2.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), c64(-1.0, 3.0)],
        );
        let mut ev = eigenvalues(&a);
        ev.sort_by(|x, y| x.re.partial_cmp(&y.re).unwrap());
        assert!((ev[0] - c64(-1.0, 3.0)).norm() < 1e-10);
        assert!((ev[1] - c64(2.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn guarded_inverse_rejects_singular() {
        let a = CMat::from_row_slice(2, 2, &[c64(1.0, 0.0); 4]);
        assert!(inv_guarded(&a, "test").is_err());
    }
}
