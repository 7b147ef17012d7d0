//! Polar elements, strict polar elements, the three square roots under the
//! real-diagonal-rotation expression class, master relations, sign-flip
//! products of non-commuting quadratic exponentials, and the quaternion /
//! Klein algebra they generate.
//!
//! Every element carries the path it was traced along; products are
//! evaluated with synchronized paths so signs are fixed by continuous
//! tracing from the identity rather than by a principal branch.

use crate::branch::{
    same_sheet_path, trace_amplitude, traced_product, PathSpec,
};
use crate::error::{Error, Result};
use crate::numerics::{c64, det, identity, inv_guarded, max_norm, CMat};
use crate::quad::{exp_quad_denominator, GaussianElement, SpElement};
use num::complex::Complex64;
use std::f64::consts::PI;

/// The expression class `[[rho, i c'], [i c', rho]]` with real `rho, c'`.
pub fn k_re(rho: f64, c_prime: f64) -> CMat {
    CMat::from_row_slice(
        2,
        2,
        &[
            c64(rho, 0.0),
            c64(0.0, c_prime),
            c64(0.0, c_prime),
            c64(rho, 0.0),
        ],
    )
}

/// Default parameters for the class (implementation defaults satisfying
/// the genericity test, not data from elsewhere).
pub const K_RE_DEFAULT: (f64, f64) = (0.3, 0.4);

/// Extract `(rho, c')` from a matrix of the `k_re` shape, checking the
/// genericity condition `|(1+rho+ic')/(1-rho-ic')| != 1`.
pub fn kre_params(k: &CMat) -> Result<(f64, f64)> {
    let fail = |msg: &str| Error::OutsideChart(format!("K outside the K_re class: {msg}"));
    if k.nrows() != 2 {
        return Err(fail("only m = 1"));
    }
    let rho = k[(0, 0)];
    let offd = k[(0, 1)];
    if (k[(1, 1)] - rho).norm() > 1e-12 || (k[(1, 0)] - offd).norm() > 1e-12 {
        return Err(fail("not of the [[rho, ic'],[ic', rho]] shape"));
    }
    if rho.im.abs() > 1e-12 || offd.re.abs() > 1e-12 {
        return Err(fail("rho must be real and the off-diagonal imaginary"));
    }
    if offd.im.abs() < 1e-12 {
        // c' = 0 puts branch points on the real axis
        return Err(fail("c' must be nonzero"));
    }
    let beta = c64(rho.re, offd.im);
    let modulus = ((c64(1.0, 0.0) + beta) / (c64(1.0, 0.0) - beta)).norm();
    if (modulus - 1.0).abs() < 1e-4 {
        return Err(fail("|(1+rho+ic')/(1-rho-ic')| too close to 1"));
    }
    Ok((rho.re, offd.im))
}

/// A traced exponential: generator, parameter, and the path-fixed value.
#[derive(Clone, Debug)]
pub struct TracedExp {
    pub gen: SpElement,
    pub t: Complex64,
    pub value: GaussianElement,
}

impl TracedExp {
    pub fn straight(gen: SpElement, t: Complex64, k: &CMat) -> Result<Self> {
        let traced = trace_amplitude(&gen, k, &PathSpec::straight_to(t), None)?;
        Ok(Self {
            gen,
            t,
            value: traced.value,
        })
    }

    pub fn factor(&self) -> (SpElement, Complex64) {
        (self.gen.clone(), self.t)
    }

    pub fn inverse_factor(&self) -> (SpElement, Complex64) {
        (self.gen.clone(), -self.t)
    }
}

/// A half-period exponential of `<u g, u g>`: phase `-K^{-1}`, amplitude
/// `+/- det(K)^{-1/2}`, with the `g`, the path, and the sheet that
/// produced it.
#[derive(Clone, Debug)]
pub struct PolarElement {
    pub element: GaussianElement,
    pub g: CMat,
    pub path: PathSpec,
    pub sheet: i8,
}

impl PolarElement {
    /// Residuals of the defining identities: `|Q + K^{-1}|` and
    /// `|amp^2 det K - 1|`.
    pub fn residuals(&self, k: &CMat) -> Result<(f64, f64)> {
        let k_inv = inv_guarded(k, "polar element needs invertible K")?;
        let phase_res = max_norm(&(&self.element.q + &k_inv));
        let amp_res = (self.element.amp * self.element.amp * det(k) - c64(1.0, 0.0)).norm();
        Ok((phase_res, amp_res))
    }
}

fn half_generator(g: &CMat) -> Result<SpElement> {
    let m = g.nrows() / 2;
    let a = (g * g.transpose()).map(|z| z / 2.0);
    SpElement::from_quadratic(m, &a)
}

/// The half-period exponential of `<u g, u g>` traced along `path` (which
/// must end at pi). Fails when the path hits a singular point; that is the
/// trichotomy's singular locus, not a numerical failure.
pub fn polar_element(g: &CMat, k: &CMat, path: &PathSpec) -> Result<PolarElement> {
    if (path.endpoint() - c64(PI, 0.0)).norm() > 1e-12 {
        return Err(Error::Path("polar path must end at pi".into()));
    }
    let gen = half_generator(g)?;
    let traced = trace_amplitude(&gen, k, path, None)
        .map_err(|e| Error::PolarUndefined(format!("{e}")))?;
    Ok(PolarElement {
        element: traced.value,
        g: g.clone(),
        path: path.clone(),
        sheet: traced.sheet,
    })
}

/// The strict polar element: traced along a path whose endpoint sits on
/// the same sheet as the origin (even slit crossings), so its value needs
/// no sign convention.
pub fn strict_polar(g: &CMat, k: &CMat) -> Result<PolarElement> {
    let gen = half_generator(g)?;
    let (path, map) = same_sheet_path(&gen, k, c64(PI, 0.0))?;
    let traced = trace_amplitude(&gen, k, &path, Some(&map))?;
    debug_assert_eq!(traced.sheet, 1);
    Ok(PolarElement {
        element: traced.value,
        g: g.clone(),
        path,
        sheet: traced.sheet,
    })
}

/// The three square roots of the polar element under a `k_re` expression,
/// together with the polar element itself, all traced along straight
/// paths.
#[derive(Clone, Debug)]
pub struct SquareRoots {
    /// `e_1` (rotated symmetric product), `e_2` (sum of squares),
    /// `e_3` (rotated difference of squares).
    pub e: [TracedExp; 3],
    pub eps00: TracedExp,
}

/// Generators: `e_1` from `u.v` at `t = i pi/2`, `e_2` from `u^2+v^2` at
/// `t = pi/4`, `e_3` from `u^2-v^2` at `t = i pi/4`; the polar element is
/// the `u.v` family at `t = i pi`.
pub fn square_roots_e123(k: &CMat) -> Result<SquareRoots> {
    kre_params(k)?;
    let a_uv = CMat::from_row_slice(
        2,
        2,
        &[c64(0.0, 0.0), c64(0.5, 0.0), c64(0.5, 0.0), c64(0.0, 0.0)],
    );
    let a_sum = identity(2);
    let a_diff = CMat::from_row_slice(
        2,
        2,
        &[c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(-1.0, 0.0)],
    );
    let g_uv = SpElement::from_quadratic(1, &a_uv)?;
    let g_sum = SpElement::from_quadratic(1, &a_sum)?;
    let g_diff = SpElement::from_quadratic(1, &a_diff)?;
    let e1 = TracedExp::straight(g_uv.clone(), c64(0.0, PI / 2.0), k)?;
    let e2 = TracedExp::straight(g_sum, c64(PI / 4.0, 0.0), k)?;
    let e3 = TracedExp::straight(g_diff, c64(0.0, PI / 4.0), k)?;
    let eps00 = TracedExp::straight(g_uv, c64(0.0, PI), k)?;
    Ok(SquareRoots {
        e: [e1, e2, e3],
        eps00,
    })
}

#[derive(Clone, Debug)]
pub struct RelationCheck {
    pub name: String,
    pub residual: f64,
    pub pass: bool,
}

fn check(name: impl Into<String>, residual: f64, tol: f64) -> RelationCheck {
    RelationCheck {
        name: name.into(),
        residual,
        pass: residual <= tol,
    }
}

/// Verify `e_i * e_j * e_i^{-1} = e_j^{-1}` with synchronized straight
/// paths, together with the diagonal case `e_i * e_i * e_i^{-1} = e_i`.
pub fn master_relation_check(i: usize, j: usize, k: &CMat) -> Result<RelationCheck> {
    let roots = square_roots_e123(k)?;
    let ei = &roots.e[i];
    let ej = &roots.e[j];
    let lhs = traced_product(&[ei.factor(), ej.factor(), ei.inverse_factor()], k)?;
    if i == j {
        let residual = lhs.distance(&ei.value);
        return Ok(check(format!("e{}*e{}*e{}^-1 = e{}", i + 1, j + 1, i + 1, j + 1), residual, 1e-9));
    }
    let rhs = TracedExp::straight(ej.gen.clone(), -ej.t, k)?;
    let residual = lhs.distance(&rhs.value);
    Ok(check(
        format!("e{}*e{}*e{}^-1 = e{}^-1", i + 1, j + 1, i + 1, j + 1),
        residual,
        1e-9,
    ))
}

/// Index of a Gaussian among candidate basis elements, with the matched
/// sign. Identification is by phase matrix first, then amplitude ratio.
fn identify(
    value: &GaussianElement,
    basis: &[GaussianElement],
) -> Option<(usize, f64, f64)> {
    for (idx, b) in basis.iter().enumerate() {
        if max_norm(&(&value.q - &b.q)) < 1e-7 {
            let ratio = value.amp / b.amp;
            let plus = (ratio - c64(1.0, 0.0)).norm();
            let minus = (ratio + c64(1.0, 0.0)).norm();
            let (sign, residual) = if plus <= minus { (1.0, plus) } else { (-1.0, minus) };
            // declare a sign only when the opposite sign clearly fails
            if plus.min(minus) < 1e-3 && (plus.max(minus)) > 1e-3 {
                return Some((idx, sign, residual));
            }
        }
    }
    None
}

/// Formal complex combination over the basis
/// `{1, eps00, e1, e2, e3, eps00*e1, eps00*e2, eps00*e3}` with the
/// multiplication table realized by traced Gaussian products.
#[derive(Clone, Debug)]
pub struct AlgebraElement {
    pub coeffs: [Complex64; 8],
}

impl AlgebraElement {
    pub fn zero() -> Self {
        Self {
            coeffs: [c64(0.0, 0.0); 8],
        }
    }

    pub fn basis(i: usize) -> Self {
        let mut a = Self::zero();
        a.coeffs[i] = c64(1.0, 0.0);
        a
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c *= s;
        }
        out
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
        out
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a -= b;
        }
        out
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn mul(&self, rhs: &Self, table: &MulTable) -> Self {
        let mut out = Self::zero();
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.norm() == 0.0 {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if b.norm() == 0.0 {
                    continue;
                }
                let (idx, sign) = table.entries[i][j];
                out.coeffs[idx] += a * b * c64(sign, 0.0);
            }
        }
        out
    }
}

/// Multiplication table of the 8-element basis: `entries[i][j]` is the
/// basis index and sign of `basis_i * basis_j`.
#[derive(Clone, Debug)]
pub struct MulTable {
    pub entries: [[(usize, f64); 8]; 8],
    /// Largest identification residual across the table.
    pub max_residual: f64,
}

/// Everything the quaternion-structure check produces: the verified
/// relation list and the realized multiplication table.
#[derive(Clone, Debug)]
pub struct QuaternionReport {
    pub relations: Vec<RelationCheck>,
    pub table: MulTable,
}

impl QuaternionReport {
    pub fn all_pass(&self) -> bool {
        self.relations.iter().all(|r| r.pass)
    }
}

/// Build the basis Gaussians, realize the multiplication table with
/// synchronized traced products, and verify the idempotent splitting, the
/// quaternion block, and the anticommutation relations.
pub fn quaternion_structure(k: &CMat) -> Result<QuaternionReport> {
    let roots = square_roots_e123(k)?;
    let e_bar: Vec<TracedExp> = (0..3)
        .map(|i| TracedExp::straight(roots.e[i].gen.clone(), -roots.e[i].t, k))
        .collect::<Result<_>>()?;

    // basis Gaussians: 1, eps00, e1..e3, eps00*e_i = e_i^{-1}
    let one = GaussianElement::one(1);
    let basis_vals: Vec<GaussianElement> = vec![
        one.clone(),
        roots.eps00.value.clone(),
        roots.e[0].value.clone(),
        roots.e[1].value.clone(),
        roots.e[2].value.clone(),
        e_bar[0].value.clone(),
        e_bar[1].value.clone(),
        e_bar[2].value.clone(),
    ];
    let factors: Vec<Option<(SpElement, Complex64)>> = vec![
        None,
        Some(roots.eps00.factor()),
        Some(roots.e[0].factor()),
        Some(roots.e[1].factor()),
        Some(roots.e[2].factor()),
        Some(e_bar[0].factor()),
        Some(e_bar[1].factor()),
        Some(e_bar[2].factor()),
    ];

    let mut entries = [[(0usize, 1.0f64); 8]; 8];
    let mut max_residual = 0.0f64;
    for i in 0..8 {
        for j in 0..8 {
            if i == 0 {
                entries[i][j] = (j, 1.0);
                continue;
            }
            if j == 0 {
                entries[i][j] = (i, 1.0);
                continue;
            }
            let fi = factors[i].clone().unwrap();
            let fj = factors[j].clone().unwrap();
            let prod = traced_product(&[fi, fj], k)?;
            match identify(&prod, &basis_vals) {
                Some((idx, sign, residual)) => {
                    entries[i][j] = (idx, sign);
                    max_residual = max_residual.max(residual);
                }
                None => {
                    return Err(Error::Inconclusive(format!(
                        "product of basis {i} and {j} did not identify against the basis"
                    )))
                }
            }
        }
    }
    let table = MulTable {
        entries,
        max_residual,
    };

    let mut relations = vec![];
    // Gaussian-level identities first
    for i in 0..3 {
        let sq = traced_product(&[roots.e[i].factor(), roots.e[i].factor()], k)?;
        relations.push(check(
            format!("e{}^2 = eps00", i + 1),
            sq.distance(&roots.eps00.value),
            1e-9,
        ));
    }
    let eps_sq = traced_product(&[roots.eps00.factor(), roots.eps00.factor()], k)?;
    relations.push(check("eps00^2 = 1", eps_sq.distance(&one), 1e-9));
    let prods = [(0usize, 1usize, 2usize), (1, 2, 0), (2, 0, 1)];
    for (a, b, cidx) in prods {
        let p = traced_product(&[roots.e[a].factor(), roots.e[b].factor()], k)?;
        relations.push(check(
            format!("e{}*e{} = e{}", a + 1, b + 1, cidx + 1),
            p.distance(&roots.e[cidx].value),
            1e-9,
        ));
    }
    for i in 0..3 {
        for j in 0..3 {
            if i == j {
                continue;
            }
            let lhs = traced_product(
                &[
                    roots.e[i].factor(),
                    roots.e[j].factor(),
                    roots.e[i].inverse_factor(),
                ],
                k,
            )?;
            relations.push(check(
                format!("e{}*e{}*e{}^-1 = e{}^-1", i + 1, j + 1, i + 1, j + 1),
                lhs.distance(&e_bar[j].value),
                1e-9,
            ));
        }
    }

    // algebra-level identities through the table
    let one_a = AlgebraElement::basis(0);
    let eps_a = AlgebraElement::basis(1);
    let half = c64(0.5, 0.0);
    let p_plus = one_a.add(&eps_a).scale(half);
    let p_minus = one_a.sub(&eps_a).scale(half);
    let prod_pm = p_plus.mul(&p_minus, &table);
    relations.push(check("p+ * p- = 0", prod_pm.norm(), 1e-9));
    relations.push(check(
        "p+ + p- = 1",
        p_plus.add(&p_minus).sub(&one_a).norm(),
        1e-12,
    ));
    let e_hat: Vec<AlgebraElement> = (0..3)
        .map(|i| p_minus.mul(&AlgebraElement::basis(2 + i), &table))
        .collect();
    let minus_p_minus = p_minus.scale(c64(-1.0, 0.0));
    for (i, eh) in e_hat.iter().enumerate() {
        let sq = eh.mul(eh, &table);
        relations.push(check(
            format!("ehat{}^2 = -p-", i + 1),
            sq.sub(&minus_p_minus).norm(),
            1e-9,
        ));
    }
    for i in 0..3 {
        for j in 0..3 {
            if i == j {
                continue;
            }
            let anti = e_hat[i]
                .mul(&e_hat[j], &table)
                .add(&e_hat[j].mul(&e_hat[i], &table));
            relations.push(check(
                format!("ehat{}*ehat{} + ehat{}*ehat{} = 0", i + 1, j + 1, j + 1, i + 1),
                anti.norm(),
                1e-9,
            ));
        }
    }
    // Klein block: p+ e_i square to p+ and commute
    for i in 0..3 {
        let f = p_plus.mul(&AlgebraElement::basis(2 + i), &table);
        let sq = f.mul(&f, &table);
        relations.push(check(
            format!("(p+ e{})^2 = p+", i + 1),
            sq.sub(&p_plus).norm(),
            1e-9,
        ));
    }

    Ok(QuaternionReport { relations, table })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProductSign {
    Plus,
    Minus,
}

#[derive(Clone, Debug)]
pub struct SignReport {
    pub sign: ProductSign,
    /// Interior singular points of the two-variable product found by the
    /// scan.
    pub singular_points: Vec<Complex64>,
}

/// Determine whether swapping the order of `e_*^{[0->s] H_alpha}` and
/// `e_*^{t H_beta}` (with the conjugated generator on the other side)
/// costs a sign: scan the parameter square `[0,s] x [0,t]` for zeros of
/// the product denominator and report minus exactly when an interior
/// singular point exists. Zeros within `1e-3` of the boundary are
/// inconclusive.
pub fn noncommuting_sign(
    alpha: &SpElement,
    beta: &SpElement,
    s: f64,
    t: f64,
    k: &CMat,
) -> Result<SignReport> {
    let kappa = crate::quad::kappa_of(k);
    let m = alpha.m;
    let id = identity(2 * m);
    let denom = |sigma: f64, tau: f64| -> Complex64 {
        let da_mat = exp_quad_denominator(alpha, c64(sigma, 0.0), k);
        let db_mat = exp_quad_denominator(beta, c64(tau, 0.0), k);
        let da = det(&da_mat);
        let db = det(&db_mat);
        let pa = match crate::quad::exp_quad(alpha, c64(sigma, 0.0), k) {
            Ok(e) => e.phase_sp(),
            Err(_) => return c64(0.0, 0.0),
        };
        let pb = match crate::quad::exp_quad(beta, c64(tau, 0.0), k) {
            Ok(e) => e.phase_sp(),
            Err(_) => return c64(0.0, 0.0),
        };
        let p = &id + pa * (&id - &kappa) * pb * (&id + &kappa);
        da * db * det(&p) / c64(4.0f64.powi(m as i32), 0.0)
    };

    let n_grid = 60usize;
    let mut minima: Vec<(f64, f64)> = vec![];
    let mut vals = vec![vec![0.0f64; n_grid + 1]; n_grid + 1];
    for i in 0..=n_grid {
        for j in 0..=n_grid {
            vals[i][j] = denom(s * i as f64 / n_grid as f64, t * j as f64 / n_grid as f64).norm();
        }
    }
    for i in 1..n_grid {
        for j in 1..n_grid {
            let v = vals[i][j];
            let is_min = (i - 1..=i + 1).all(|a| (j - 1..=j + 1).all(|b| vals[a][b] >= v));
            if is_min && v < 0.5 {
                minima.push((s * i as f64 / n_grid as f64, t * j as f64 / n_grid as f64));
            }
        }
    }
    let mut zeros: Vec<Complex64> = vec![];
    for (mut x, mut y) in minima {
        // Newton on the complex value as a function of two real variables
        for _ in 0..50 {
            let f0 = denom(x, y);
            if f0.norm() < 1e-11 {
                break;
            }
            let h = 1e-6;
            let fx = (denom(x + h, y) - denom(x - h, y)) / (2.0 * h);
            let fy = (denom(x, y + h) - denom(x, y - h)) / (2.0 * h);
            let a11 = fx.re;
            let a12 = fy.re;
            let a21 = fx.im;
            let a22 = fy.im;
            let d = a11 * a22 - a12 * a21;
            if d.abs() < 1e-18 {
                break;
            }
            let dx = (f0.re * a22 - a12 * f0.im) / d;
            let dy = (a11 * f0.im - f0.re * a21) / d;
            x -= dx;
            y -= dy;
        }
        if denom(x, y).norm() < 1e-9 {
            let margin = 1e-3;
            let interior =
                x > margin && x < s - margin && y > margin && y < t - margin;
            let on_boundary = (x >= -margin && x <= s + margin && y >= -margin && y <= t + margin)
                && !interior;
            if on_boundary {
                return Err(Error::Inconclusive(format!(
                    "singular point ({x:.6}, {y:.6}) on the square's boundary"
                )));
            }
            if interior && zeros.iter().all(|z| (z - c64(x, y)).norm() > 1e-6) {
                zeros.push(c64(x, y));
            }
        }
    }
    let sign = if zeros.is_empty() {
        ProductSign::Plus
    } else {
        ProductSign::Minus
    };
    Ok(SignReport {
        sign,
        singular_points: zeros,
    })
}

/// The conjugated generator `beta(s) = e^{-s alpha} beta e^{s alpha}` in
/// phase convention, used to compare both orders of the product.
pub fn conjugated_generator(alpha: &SpElement, beta: &SpElement, s: f64) -> Result<SpElement> {
    let e_minus = crate::numerics::expm(&alpha.mat.map(|z| z * c64(-s, 0.0)));
    let e_plus = inv_guarded(&e_minus, "conjugation")?;
    SpElement::new(beta.m, &e_minus * &beta.mat * e_plus)
}
