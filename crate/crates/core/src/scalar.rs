//! Exact scalars: Gaussian rationals and polynomials in a formal `hbar`.
//!
//! All identities of the polynomial star-product engine are exact, so the
//! coefficient ring is Q(i)[hbar] with arbitrary-precision rationals.

use num::complex::Complex64;
use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

/// A Gaussian rational `re + im*i` with exact rational parts.
#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub struct GaussianRational {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussianRational {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        Self { re, im }
    }

    pub fn zero() -> Self {
        Self::new(BigRational::zero(), BigRational::zero())
    }

    pub fn one() -> Self {
        Self::new(BigRational::one(), BigRational::zero())
    }

    pub fn i() -> Self {
        Self::new(BigRational::zero(), BigRational::one())
    }

    pub fn from_int(n: i64) -> Self {
        Self::new(BigRational::from_integer(BigInt::from(n)), BigRational::zero())
    }

    /// `num_re/den_re + (num_im/den_im) i`, denominators nonzero.
    pub fn from_ratio(num_re: i64, den_re: i64, num_im: i64, den_im: i64) -> Self {
        Self::new(
            BigRational::new(BigInt::from(num_re), BigInt::from(den_re)),
            BigRational::new(BigInt::from(num_im), BigInt::from(den_im)),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        Self::new(self.re.clone(), -self.im.clone())
    }

    /// Exact multiplicative inverse. Errors on zero.
    pub fn inv(&self) -> crate::error::Result<Self> {
        if self.is_zero() {
            return Err(crate::error::Error::DivisionByZero);
        }
        let norm = &self.re * &self.re + &self.im * &self.im;
        Ok(Self::new(&self.re / &norm, -(&self.im / &norm)))
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }
}

impl Add for &GaussianRational {
    type Output = GaussianRational;
    fn add(self, rhs: &GaussianRational) -> GaussianRational {
        GaussianRational::new(&self.re + &rhs.re, &self.im + &rhs.im)
    }
}

impl Sub for &GaussianRational {
    type Output = GaussianRational;
    fn sub(self, rhs: &GaussianRational) -> GaussianRational {
        GaussianRational::new(&self.re - &rhs.re, &self.im - &rhs.im)
    }
}

impl Mul for &GaussianRational {
    type Output = GaussianRational;
    fn mul(self, rhs: &GaussianRational) -> GaussianRational {
        GaussianRational::new(
            &self.re * &rhs.re - &self.im * &rhs.im,
            &self.re * &rhs.im + &self.im * &rhs.re,
        )
    }
}

impl Neg for &GaussianRational {
    type Output = GaussianRational;
    fn neg(self) -> GaussianRational {
        GaussianRational::new(-self.re.clone(), -self.im.clone())
    }
}

impl fmt::Display for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else if self.re.is_zero() {
            write!(f, "{}i", self.im)
        } else if self.im.is_negative() {
            write!(f, "({}{}i)", self.re, self.im)
        } else {
            write!(f, "({}+{}i)", self.re, self.im)
        }
    }
}

/// An exact polynomial in the formal symbol `hbar` with Gaussian-rational
/// coefficients. Canonical form: no trailing zero coefficients.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct HbarScalar {
    /// `coeffs[k]` multiplies `hbar^k`.
    coeffs: Vec<GaussianRational>,
}

impl HbarScalar {
    pub fn zero() -> Self {
        Self { coeffs: vec![] }
    }

    pub fn one() -> Self {
        Self::constant(GaussianRational::one())
    }

    pub fn constant(c: GaussianRational) -> Self {
        let mut s = Self { coeffs: vec![c] };
        s.normalize();
        s
    }

    pub fn from_int(n: i64) -> Self {
        Self::constant(GaussianRational::from_int(n))
    }

    /// `c * hbar^k`.
    pub fn hbar_term(c: GaussianRational, k: usize) -> Self {
        let mut coeffs = vec![GaussianRational::zero(); k + 1];
        coeffs[k] = c;
        let mut s = Self { coeffs };
        s.normalize();
        s
    }

    /// The formal `i*hbar`.
    pub fn i_hbar() -> Self {
        Self::hbar_term(GaussianRational::i(), 1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, k: usize) -> GaussianRational {
        self.coeffs.get(k).cloned().unwrap_or_else(GaussianRational::zero)
    }

    pub fn coeffs(&self) -> &[GaussianRational] {
        &self.coeffs
    }

    pub fn from_coeffs(coeffs: Vec<GaussianRational>) -> Self {
        let mut s = Self { coeffs };
        s.normalize();
        s
    }

    fn normalize(&mut self) {
        while self.coeffs.last().map_or(false, |c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut coeffs = Vec::with_capacity(n);
        for k in 0..n {
            coeffs.push(&self.coeff(k) + &rhs.coeff(k));
        }
        Self::from_coeffs(coeffs)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut coeffs = Vec::with_capacity(n);
        for k in 0..n {
            coeffs.push(&self.coeff(k) - &rhs.coeff(k));
        }
        Self::from_coeffs(coeffs)
    }

    pub fn neg(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::zero();
        }
        let mut coeffs =
            vec![GaussianRational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (j, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (k, b) in rhs.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let prod = a * b;
                coeffs[j + k] = &coeffs[j + k] + &prod;
            }
        }
        Self::from_coeffs(coeffs)
    }

    pub fn scale(&self, c: &GaussianRational) -> Self {
        Self::from_coeffs(self.coeffs.iter().map(|a| a * c).collect())
    }

    /// Exact division by a nonzero Gaussian rational.
    pub fn div_scalar(&self, c: &GaussianRational) -> crate::error::Result<Self> {
        let inv = c.inv()?;
        Ok(self.scale(&inv))
    }

    /// Substitute a numeric positive `hbar`.
    pub fn eval(&self, hbar: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut p = 1.0;
        for c in &self.coeffs {
            acc += c.to_complex() * p;
            p *= hbar;
        }
        acc
    }
}

impl AddAssign<&HbarScalar> for HbarScalar {
    fn add_assign(&mut self, rhs: &HbarScalar) {
        *self = self.add(rhs);
    }
}

impl fmt::Display for HbarScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "{c}")?,
                1 => write!(f, "{c}*hbar")?,
                _ => write!(f, "{c}*hbar^{k}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_rational_field_ops() {
        let a = GaussianRational::from_ratio(1, 2, -1, 3);
        let b = a.inv().unwrap();
        let prod = &a * &b;
        assert_eq!(prod, GaussianRational::one());
        assert!(GaussianRational::zero().inv().is_err());
    }

    #[test]
    fn hbar_canonical_form_drops_trailing_zeros() {
        let s = HbarScalar::from_coeffs(vec![
            GaussianRational::one(),
            GaussianRational::zero(),
            GaussianRational::zero(),
        ]);
        assert_eq!(s.coeffs().len(), 1);
        let t = s.sub(&HbarScalar::one());
        assert!(t.is_zero());
    }

    #[test]
    fn i_hbar_squared() {
        let ih = HbarScalar::i_hbar();
        let sq = ih.mul(&ih);
        // (i hbar)^2 = -hbar^2
        assert_eq!(sq.coeff(2), GaussianRational::from_int(-1));
        assert_eq!(sq.coeff(0), GaussianRational::zero());
    }
}
