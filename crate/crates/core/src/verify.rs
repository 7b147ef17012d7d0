//! Runnable verification suites, one per module, mirroring each module's
//! invariants. The CLI `verify` subcommand executes these; the acceptance
//! tests drive them as well. All sampling is seeded.

use crate::branch::{
    classify_periodicity, count_crossings, find_singularities, place_slits, trace_amplitude,
    traced_product, PathSpec, Periodicity, Window,
};
use crate::linexp::{self, LinearExponential, ScalarField1D};
use crate::numerics::{c64, det, expm, identity, j_mat, max_norm, CMat};
use crate::poly::{commutator, intertwine_poly, star_product, ExpressionParameter, WeylPolynomial};
use crate::quad::{
    cayley_inverse, exp_quad, exp_quad_denominator, gaussian_product, infinitesimal_action,
    infinitesimal_action_sp, kappa_of, mixed_quadratic_product, GaussianElement, GroupPoint,
    SpElement,
};
use crate::sample;
use crate::scalar::{GaussianRational, HbarScalar};
use num::complex::Complex64;
use serde_json::json;
use std::f64::consts::PI;

#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: impl Into<String>, residual: f64, tol: f64) -> Self {
        let pass = residual.is_finite() && residual <= tol;
        Self {
            name: name.into(),
            residual,
            tol,
            pass,
        }
    }

    fn exact(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            residual: if ok { 0.0 } else { 1.0 },
            tol: 0.0,
            pass: ok,
        }
    }

    fn failed(name: impl Into<String>, why: String) -> Self {
        Self {
            name: format!("{} [{why}]", name.into()),
            residual: f64::INFINITY,
            tol: 0.0,
            pass: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "suite": self.suite,
            "pass": self.pass(),
            "checks": self.checks.iter().map(|c| json!({
                "name": c.name,
                "residual": c.residual,
                "tol": c.tol,
                "pass": c.pass,
            })).collect::<Vec<_>>(),
        })
    }
}

pub const SUITES: [&str; 5] = [
    "verify-poly",
    "verify-linexp",
    "verify-quad",
    "verify-branch",
    "verify-polar",
];

/// Run one suite by name, or every suite for `all`.
pub fn run_suite(name: &str, seed: u64) -> crate::Result<Vec<SuiteReport>> {
    match name {
        "verify-poly" => Ok(vec![verify_poly(seed)]),
        "verify-linexp" => Ok(vec![verify_linexp(seed)]),
        "verify-quad" => Ok(vec![verify_quad(seed)]),
        "verify-branch" => Ok(vec![verify_branch(seed)]),
        "verify-polar" => Ok(vec![verify_polar(seed)]),
        "all" => Ok(vec![
            verify_poly(seed),
            verify_linexp(seed),
            verify_quad(seed),
            verify_branch(seed),
            verify_polar(seed),
        ]),
        other => Err(crate::Error::Schema {
            field: "suite".into(),
            constraint: format!("unknown suite `{other}`"),
        }),
    }
}

fn star_pow(
    f: &WeylPolynomial,
    n: usize,
    k: &ExpressionParameter,
) -> crate::Result<WeylPolynomial> {
    let mut acc = WeylPolynomial::one(f.m);
    for _ in 0..n {
        acc = star_product(&acc, f, k)?;
    }
    Ok(acc)
}

/// Exact-engine invariants: associativity, intertwiner homomorphism and
/// cocycle, the conjugation form of the homomorphism, the bumping
/// identity, skew-part independence of commutators, and the symmetric
/// product identity.
pub fn verify_poly(seed: u64) -> SuiteReport {
    let mut rng = sample::rng(seed);
    let mut checks = vec![];
    let run = || -> crate::Result<Vec<Check>> {
        let mut checks = vec![];

        // associativity over both m values
        let mut assoc_ok = true;
        for trial in 0..6 {
            let m = 1 + (trial % 2);
            let k = sample::random_exact_k(&mut rng, m);
            let f = sample::random_poly(&mut rng, m, 3, 3);
            let g = sample::random_poly(&mut rng, m, 3, 3);
            let h = sample::random_poly(&mut rng, m, 3, 3);
            let lhs = star_product(&star_product(&f, &g, &k)?, &h, &k)?;
            let rhs = star_product(&f, &star_product(&g, &h, &k)?, &k)?;
            assoc_ok &= lhs == rhs;
        }
        checks.push(Check::exact("associativity (f*g)*h = f*(g*h)", assoc_ok));

        // intertwiner homomorphism and cocycle
        let mut hom_ok = true;
        let mut cocycle_ok = true;
        let mut inverse_ok = true;
        for trial in 0..4 {
            let m = 1 + (trial % 2);
            let k1 = sample::random_exact_k(&mut rng, m);
            let k2 = sample::random_exact_k(&mut rng, m);
            let k3 = sample::random_exact_k(&mut rng, m);
            let f = sample::random_poly(&mut rng, m, 3, 3);
            let g = sample::random_poly(&mut rng, m, 3, 3);
            let lhs = intertwine_poly(&star_product(&f, &g, &k1)?, &k1, &k2)?;
            let rhs = star_product(
                &intertwine_poly(&f, &k1, &k2)?,
                &intertwine_poly(&g, &k1, &k2)?,
                &k2,
            )?;
            hom_ok &= lhs == rhs;
            let two_step = intertwine_poly(&intertwine_poly(&f, &k1, &k2)?, &k2, &k3)?;
            cocycle_ok &= two_step == intertwine_poly(&f, &k1, &k3)?;
            inverse_ok &= intertwine_poly(&intertwine_poly(&f, &k1, &k2)?, &k2, &k1)? == f;
        }
        checks.push(Check::exact("intertwiner homomorphism", hom_ok));
        checks.push(Check::exact("intertwiner cocycle", cocycle_ok));
        checks.push(Check::exact("intertwiner inverse", inverse_ok));

        // conjugation identity: I_B^{B+K}(I_{B+K}^B f * _B I_{B+K}^B g) = f *_{B+K} g
        let mut conj_ok = true;
        for _ in 0..3 {
            let m = 1;
            let kb = sample::random_exact_k(&mut rng, m);
            let kk = sample::random_exact_k(&mut rng, m);
            let mut sum_entries = kb.entries().clone();
            for (i, row) in kk.entries().iter().enumerate() {
                for (j, e) in row.iter().enumerate() {
                    sum_entries[i][j] = &sum_entries[i][j] + e;
                }
            }
            let kbk = ExpressionParameter::new(m, sum_entries)?;
            let f = sample::random_poly(&mut rng, m, 3, 3);
            let g = sample::random_poly(&mut rng, m, 3, 3);
            let fd = intertwine_poly(&f, &kbk, &kb)?;
            let gd = intertwine_poly(&g, &kbk, &kb)?;
            let lhs = intertwine_poly(&star_product(&fd, &gd, &kb)?, &kb, &kbk)?;
            conj_ok &= lhs == star_product(&f, &g, &kbk)?;
        }
        checks.push(Check::exact("conjugation identity", conj_ok));

        // bumping identity u * p(v*u) = p(u*v) * u
        let mut bump_ok = true;
        for _ in 0..3 {
            let k = sample::random_exact_k(&mut rng, 1);
            let u = WeylPolynomial::generator(1, 0);
            let v = WeylPolynomial::generator(1, 1);
            let vu = star_product(&v, &u, &k)?;
            let uv = star_product(&u, &v, &k)?;
            use rand::Rng;
            let coeffs: Vec<i64> = (0..4).map(|_| rng.gen_range(-3..=3)).collect();
            let p_of = |x: &WeylPolynomial| -> crate::Result<WeylPolynomial> {
                let mut acc = WeylPolynomial::zero(1);
                for (deg, c) in coeffs.iter().enumerate() {
                    if *c == 0 {
                        continue;
                    }
                    acc = acc.add(&star_pow(x, deg, &k)?.scale(&HbarScalar::from_int(*c)));
                }
                Ok(acc)
            };
            let lhs = star_product(&u, &p_of(&vu)?, &k)?;
            let rhs = star_product(&p_of(&uv)?, &u, &k)?;
            bump_ok &= lhs == rhs;
        }
        checks.push(Check::exact("bumping identity", bump_ok));

        // commutator depends only on the skew part
        let mut skew_ok = true;
        for _ in 0..3 {
            let m = 1;
            let k = sample::random_exact_k(&mut rng, m);
            let zero = ExpressionParameter::weyl(m);
            let f = sample::random_poly(&mut rng, m, 3, 3);
            let g = sample::random_poly(&mut rng, m, 3, 3);
            skew_ok &= commutator(&f, &g, &k)? == commutator(&f, &g, &zero)?;
        }
        checks.push(Check::exact("commutator ignores symmetric part", skew_ok));

        // u*(u*v)*v = (uov + ih/2) * (uov + 3ih/2)
        {
            let k = sample::random_exact_k(&mut rng, 1);
            let u = WeylPolynomial::generator(1, 0);
            let v = WeylPolynomial::generator(1, 1);
            let uv = star_product(&u, &v, &k)?;
            let vu = star_product(&v, &u, &k)?;
            let half = GaussianRational::from_ratio(1, 2, 0, 1);
            let circ = uv.add(&vu).scale(&HbarScalar::constant(half));
            let ih = HbarScalar::i_hbar();
            let half_ih = ih.div_scalar(&GaussianRational::from_int(2))?;
            let three_half_ih = half_ih.mul(&HbarScalar::from_int(3));
            let lhs = star_product(&star_product(&u, &uv, &k)?, &v, &k)?;
            let rhs = star_product(
                &circ.add(&WeylPolynomial::constant(1, half_ih)),
                &circ.add(&WeylPolynomial::constant(1, three_half_ih)),
                &k,
            )?;
            checks.push(Check::exact("u*(u*v)*v factorization", lhs == rhs));
        }

        // Weyl symmetrization gives the plain monomial
        {
            let w1 = crate::poly::weyl_symmetrize(1, &[0, 1, 1])?;
            let u = WeylPolynomial::generator(1, 0);
            let v = WeylPolynomial::generator(1, 1);
            let expected = u.mul(&v).mul(&v);
            checks.push(Check::exact("symmetrized word is the monomial", w1 == expected));
        }

        Ok(checks)
    };
    let mut run = run;
    match run() {
        Ok(c) => checks.extend(c),
        Err(e) => checks.push(Check::failed("suite aborted", e.to_string())),
    }
    SuiteReport {
        suite: "verify-poly".into(),
        checks,
    }
}

/// Linear-exponential invariants: exponential law, intertwiner scalar,
/// evolution equation by central differences, and delta annihilation.
pub fn verify_linexp(seed: u64) -> SuiteReport {
    let mut rng = sample::rng(seed ^ 0x11);
    let mut checks = vec![];
    let hbar = 1.0;
    use rand::Rng;

    // exponential law for collinear exponentials, any K sampled
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let m = 1 + rng.gen_range(0..2) as usize;
        let a: Vec<Complex64> = (0..2 * m)
            .map(|_| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let s = c64(rng.gen_range(-1.0..1.0), 0.0);
        let t = c64(rng.gen_range(-1.0..1.0), 0.0);
        let e1 = LinearExponential::new(m, a.clone(), s).unwrap();
        let e2 = LinearExponential::new(m, a.clone(), t).unwrap();
        let (scalar, comb) = linexp::product(&e1, &e2, hbar).unwrap();
        worst = worst.max((scalar - c64(1.0, 0.0)).norm());
        let direct = LinearExponential::new(m, a, s + t).unwrap();
        let d: f64 = comb
            .covector()
            .iter()
            .zip(&direct.covector())
            .map(|(x, y)| (x - y).norm())
            .sum();
        worst = worst.max(d);
    }
    checks.push(Check::new("exponential law (collinear)", worst, 1e-10));

    // intertwiner consistency between K-expressions
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let m = 1;
        let k1 = sample::random_symmetric(&mut rng, m, 0.8);
        let k2 = sample::random_symmetric(&mut rng, m, 0.8);
        let a: Vec<Complex64> = (0..2 * m)
            .map(|_| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let e = LinearExponential::new(m, a, c64(rng.gen_range(-1.0..1.0), 0.0)).unwrap();
        let (amp1, w) = linexp::k_expression(&e, &k1, hbar);
        let (amp2, _) = linexp::k_expression(&e, &k2, hbar);
        let diff = &k2 - &k1;
        let factor = (linexp::quad_form(&w, &diff) / c64(0.0, 4.0 * hbar)).exp();
        worst = worst.max((amp1 * factor - amp2).norm() / amp2.norm());
    }
    checks.push(Check::new("intertwiner scalar on exponentials", worst, 1e-12));

    // evolution equation d/ds :e_*^{s<a,u>/ih}:_K = (1/ih)<a,u> *_K (...)
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let m = 1;
        let k = sample::random_symmetric(&mut rng, m, 0.7);
        let a: Vec<Complex64> = (0..2 * m)
            .map(|_| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let q = linexp::quad_form(&a, &k);
        let s = rng.gen_range(-0.8..0.8);
        let h = 1e-5;
        let expr = |s: f64, x: Complex64| -> Complex64 {
            (c64(s * s, 0.0) * q / c64(0.0, 4.0 * hbar)).exp()
                * (c64(s, 0.0) * x / c64(0.0, hbar)).exp()
        };
        for i in 0..5 {
            let x = c64(-1.0 + 0.5 * i as f64, 0.3);
            let dnum = (expr(s + h, x) - expr(s - h, x)) / (2.0 * h);
            // left multiplication in reduced one-variable form
            let f = expr(s, x);
            let fp = expr(s, x) * c64(s, 0.0) / c64(0.0, hbar);
            let rhs = (x * f + c64(0.0, hbar / 2.0) * q * fp) / c64(0.0, hbar);
            worst = worst.max((dnum - rhs).norm() / rhs.norm().max(1e-12));
        }
    }
    checks.push(Check::new("evolution equation (central differences)", worst, 1e-6));

    // delta annihilation on a 20-point grid
    let mut worst = 0.0f64;
    {
        let a = vec![c64(1.0, 0.0), c64(0.4, 0.0)];
        let k = identity(2).map(|z| z * c64(0.2, -0.9));
        let q = linexp::quad_form(&a, &k);
        let f = ScalarField1D {
            f: Box::new(move |x| (-x * x / (c64(0.0, hbar) * q)).exp()),
            df: Box::new(move |x| {
                (-x * x / (c64(0.0, hbar) * q)).exp() * (-2.0 * x / (c64(0.0, hbar) * q))
            }),
        };
        let prod = linexp::reduced_1d_product(&a, &k, f, hbar);
        for i in 0..20 {
            let x = c64(-2.0 + 4.0 * i as f64 / 19.0, 0.0);
            worst = worst.max((prod.f)(x).norm());
        }
    }
    checks.push(Check::new("delta annihilation on grid", worst, 1e-10));

    SuiteReport {
        suite: "verify-linexp".into(),
        checks,
    }
}

/// Quadratic-layer invariants: determinant identities, the evolution
/// equation, the exponential law, chart consistency of phases, the adjoint
/// homomorphism, agreement between the trace formula and the terminating
/// mixed product, and the sp-coordinate form of the action.
pub fn verify_quad(seed: u64) -> SuiteReport {
    let mut rng = sample::rng(seed ^ 0x22);
    let mut checks = vec![];
    use rand::Rng;

    // Lemma-style determinant identities
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let m = 1 + rng.gen_range(0..2) as usize;
        let n = 2 * m;
        let kappa = sample::random_sp_algebra(&mut rng, m, 0.4);
        let xi = sample::random_sp_algebra(&mut rng, m, 0.4);
        let id = identity(n);
        let d1 = det(&(&id + &xi * (&id + &kappa)));
        let d2 = det(&(&id - (&id - &kappa) * &xi));
        let d3 = det(&(&id - &xi * (&id - &kappa)));
        let scale = d1.norm().max(1.0);
        worst = worst.max((d1 - d2).norm() / scale).max((d2 - d3).norm() / scale);
    }
    checks.push(Check::new("determinant identities", worst, 1e-10));

    // evolution equation for exp_quad by central differences
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let m = 1;
        let alpha = SpElement::new(m, sample::random_sp_algebra(&mut rng, m, 0.4)).unwrap();
        let k = sample::random_symmetric(&mut rng, m, 0.4);
        let t = rng.gen_range(-0.3..0.3);
        let hbar = 1.0;
        let h = 1e-5;
        let e_mid = match exp_quad(&alpha, c64(t, 0.0), &k) {
            Ok(e) => e,
            Err(_) => continue,
        };
        let e_p = exp_quad(&alpha, c64(t + h, 0.0), &k);
        let e_m = exp_quad(&alpha, c64(t - h, 0.0), &k);
        let (e_p, e_m) = match (e_p, e_m) {
            (Ok(a), Ok(b)) => (a, b),
            _ => continue,
        };
        let a_mat = alpha.to_quadratic();
        let (coeff, q_inc) = infinitesimal_action(&a_mat, &e_mid.q, &k);
        for i in 0..4 {
            let u: Vec<Complex64> = (0..2 * m)
                .map(|j| c64(0.3 * (i as f64 + 1.0) * (j as f64 - 0.5), 0.2))
                .collect();
            let dnum = (e_p.eval(&u, hbar) - e_m.eval(&u, hbar)) / (2.0 * h);
            let mut quad = c64(0.0, 0.0);
            for a in 0..2 * m {
                for b in 0..2 * m {
                    quad += u[a] * q_inc[(a, b)] * u[b];
                }
            }
            let rhs = (coeff + quad / c64(0.0, hbar)) * e_mid.eval(&u, hbar);
            worst = worst.max((dnum - rhs).norm() / rhs.norm().max(1e-10));
        }
    }
    checks.push(Check::new("evolution equation for exp_quad", worst, 1e-6));

    // exponential law through the product formula on real segments
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let m = 1;
        let alpha = SpElement::new(m, sample::random_sp_algebra(&mut rng, m, 0.5)).unwrap();
        let k = sample::random_symmetric(&mut rng, m, 0.4);
        let kappa = SpElement::new(m, kappa_of(&k)).unwrap();
        let s = rng.gen_range(-0.25..0.25);
        let t = rng.gen_range(-0.25..0.25);
        let (ea, eb, eab) = match (
            exp_quad(&alpha, c64(s, 0.0), &k),
            exp_quad(&alpha, c64(t, 0.0), &k),
            exp_quad(&alpha, c64(s + t, 0.0), &k),
        ) {
            (Ok(a), Ok(b), Ok(c)) => (a, b, c),
            _ => continue,
        };
        let pa = GroupPoint::from_gaussian(&ea).unwrap();
        let pb = GroupPoint::from_gaussian(&eb).unwrap();
        let prod = match gaussian_product(&pa, &pb, &kappa) {
            Ok(p) => p.to_gaussian(),
            Err(_) => continue,
        };
        worst = worst.max(prod.distance(&eab));
    }
    checks.push(Check::new("exponential law via product formula", worst, 1e-9));

    // phase equals the inverse Cayley image of the one-parameter subgroup
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let m = 1;
        let alpha = SpElement::new(m, sample::random_sp_algebra(&mut rng, m, 0.5)).unwrap();
        let k = sample::random_symmetric(&mut rng, m, 0.4);
        let kappa = SpElement::new(m, kappa_of(&k)).unwrap();
        let t = c64(rng.gen_range(-0.3..0.3), rng.gen_range(-0.2..0.2));
        if let Ok(e) = exp_quad(&alpha, t, &k) {
            let y = expm(&alpha.mat.map(|z| z * (-2.0 * t)));
            if let Ok(expected) = cayley_inverse(&kappa, &y) {
                worst = worst.max(max_norm(&(e.phase_sp() - expected.mat)));
            }
        }
    }
    checks.push(Check::new("phase through the twisted Cayley chart", worst, 1e-9));

    // adjoint homomorphism
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let m = 1;
        let alpha = SpElement::new(m, sample::random_sp_algebra(&mut rng, m, 0.6)).unwrap();
        let a: Vec<Complex64> = (0..2 * m)
            .map(|_| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let s = c64(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
        let t = c64(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
        let two = crate::quad::adjoint_orbit(&crate::quad::adjoint_orbit(&a, &alpha, s), &alpha, t);
        let one = crate::quad::adjoint_orbit(&a, &alpha, s + t);
        let d: f64 = two.iter().zip(&one).map(|(x, y)| (x - y).norm()).sum();
        worst = worst.max(d);
    }
    checks.push(Check::new("adjoint homomorphism", worst, 1e-12));

    // infinitesimal action vs the terminating mixed product on a grid
    let mut worst = 0.0f64;
    for _ in 0..6 {
        let m = 1;
        let hbar = 1.0;
        let a_mat = {
            let s = sample::random_symmetric(&mut rng, m, 0.7);
            s
        };
        let k = sample::random_symmetric(&mut rng, m, 0.5);
        let q = {
            let alpha = sample::random_sp_algebra(&mut rng, m, 0.3);
            &alpha * j_mat(m)
        };
        let g = GaussianElement::new(m, c64(0.9, 0.2), q.clone()).unwrap();
        let (coeff, q_inc) = infinitesimal_action(&a_mat, &q, &k);
        // the mixed product multiplies by the K-expression of the element,
        // which carries the constant Tr(A K)/2 * (i hbar)
        let const_part = (&a_mat * &k).diagonal().sum() / 2.0 * c64(0.0, hbar);
        let oracle = mixed_quadratic_product(&a_mat, const_part, &g, &k, hbar);
        for i in 0..6 {
            let u: Vec<Complex64> = (0..2 * m)
                .map(|j| c64(0.25 * (i as f64 - 2.0) + 0.1 * j as f64, 0.15))
                .collect();
            let mut quad = c64(0.0, 0.0);
            for x in 0..2 * m {
                for y in 0..2 * m {
                    quad += u[x] * q_inc[(x, y)] * u[y];
                }
            }
            // trace-formula result, times i hbar to match <uA,u> (not /ih)
            let lhs = (coeff + quad / c64(0.0, hbar)) * c64(0.0, hbar) * g.eval(&u, hbar);
            let rhs = oracle(&u);
            worst = worst.max((lhs - rhs).norm() / rhs.norm().max(1e-10));
        }
    }
    checks.push(Check::new("mixed-product oracle for the action", worst, 1e-9));

    // sp-coordinate form of the infinitesimal action
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let m = 1 + rng.gen_range(0..2) as usize;
        let a_mat = sample::random_symmetric(&mut rng, m, 0.6);
        let q = {
            let alpha = sample::random_sp_algebra(&mut rng, m, 0.4);
            &alpha * j_mat(m)
        };
        let k = sample::random_symmetric(&mut rng, m, 0.5);
        let (coeff, q_inc) = infinitesimal_action(&a_mat, &q, &k);
        let j = j_mat(m);
        let alpha = -(&a_mat * &j);
        let xi = -(&q * &j);
        let kappa = kappa_of(&k);
        let (coeff_sp, alpha_inc) = infinitesimal_action_sp(&alpha, &xi, &kappa);
        worst = worst.max((coeff - coeff_sp).norm());
        // phase increments correspond through Q' = alpha' J
        let q_from_sp = &alpha_inc * &j;
        worst = worst.max(max_norm(&(&q_from_sp - &q_inc)));
    }
    checks.push(Check::new("sp-coordinate form of the action", worst, 1e-10));

    SuiteReport {
        suite: "verify-quad".into(),
        checks,
    }
}

/// Branch-tracking invariants: the periodic-square identity, sheet parity
/// against cut-plane continuation, anchors as determinant zeros with
/// divergence, rapid decay along the imaginary axis, and non-isolation of
/// the singular endpoint class.
pub fn verify_branch(seed: u64) -> SuiteReport {
    let mut rng = sample::rng(seed ^ 0x33);
    let mut checks = vec![];

    let alpha_rot = SpElement::from_quadratic(1, &identity(2)).unwrap();
    let kre = crate::polar::k_re(0.3, 0.4);
    let kim = CMat::from_row_slice(
        2,
        2,
        &[c64(0.0, 0.3), c64(0.4, 0.0), c64(0.4, 0.0), c64(0.0, 0.3)],
    );

    // periodic squares
    let mut worst = 0.0f64;
    for k in [&kre, &kim] {
        let half = trace_amplitude(&alpha_rot, k, &PathSpec::straight_to(c64(PI, 0.0)), None);
        let full = trace_amplitude(
            &alpha_rot,
            k,
            &PathSpec::straight_to(c64(2.0 * PI, 0.0)),
            None,
        );
        match (half, full) {
            (Ok(h), Ok(f)) => {
                worst = worst.max((h.value.amp * h.value.amp - f.value.amp).norm());
            }
            _ => worst = f64::INFINITY,
        }
    }
    checks.push(Check::new("square of half period equals full period", worst, 1e-9));

    // sheet parity: a loop around one anchor flips the value relative to
    // the straight (cut-plane) continuation
    {
        let map = place_slits(
            find_singularities(&alpha_rot, &kre, &Window::new(-1.0, PI + 1.0, -3.0, 3.0))
                .unwrap(),
        );
        let anchor = map.anchors[0].t;
        let r = 0.25;
        let mut way = vec![c64(0.0, 0.0), anchor - c64(r, 0.0)];
        for step in 1..8 {
            let theta = PI + 2.0 * PI * step as f64 / 8.0;
            way.push(anchor + Complex64::from_polar(r, theta));
        }
        way.push(anchor - c64(r, 0.0));
        way.push(c64(PI, 0.0));
        let loop_path = PathSpec::new(way, crate::branch::PathMode::Avoid).unwrap();
        let mut crossings = 0;
        for (p, q) in loop_path.segments() {
            crossings += count_crossings(&map, p, q);
        }
        let straight = trace_amplitude(
            &alpha_rot,
            &kre,
            &PathSpec::straight_to(c64(PI, 0.0)),
            Some(&map),
        )
        .unwrap();
        let looped = trace_amplitude(&alpha_rot, &kre, &loop_path, Some(&map)).unwrap();
        let expected_sign = if crossings % 2 == 0 { 1.0 } else { -1.0 };
        let residual =
            (looped.value.amp - straight.value.amp * expected_sign).norm();
        let named = format!(
            "sheet parity (loop crossings = {crossings}, sheet = {})",
            looped.sheet
        );
        checks.push(Check::new(named, residual, 1e-9));
    }

    // anchors are determinant zeros and the amplitude diverges there
    let mut worst = 0.0f64;
    let mut diverge_ok = true;
    for _ in 0..5 {
        let k = sample::generic_k(&mut rng, 1);
        let map =
            find_singularities(&alpha_rot, &k, &Window::new(0.0, PI, -4.0, 4.0)).unwrap();
        for anchor in &map.anchors {
            let d = det(&exp_quad_denominator(&alpha_rot, anchor.t, &k));
            worst = worst.max(d.norm());
            let near = exp_quad(&alpha_rot, anchor.t + c64(1e-4, 1e-4), &k);
            diverge_ok &= match near {
                Ok(e) => e.amp.norm() > 1e2,
                Err(_) => true,
            };
        }
    }
    checks.push(Check::new("anchors are determinant zeros", worst, 1e-9));
    checks.push(Check::exact("amplitude diverges near anchors", diverge_ok));

    // rapid decay along the imaginary axis for the rotation family
    {
        let mut bound = 0.0f64;
        let mut faulted = false;
        for i in 0..20 {
            let t = 1.0 + 19.0 * i as f64 / 19.0;
            match exp_quad(&alpha_rot, c64(0.0, t), &kre) {
                Ok(e) => {
                    let v = e.amp.norm() * t.exp();
                    if !v.is_finite() {
                        faulted = true;
                    }
                    bound = bound.max(v);
                }
                Err(_) => faulted = true,
            }
        }
        checks.push(Check::exact("no overflow along the imaginary axis", !faulted));
        checks.push(Check::new("decay bound |amp(it)| e^{|t|} <= 10", bound, 10.0));
    }

    // the singular endpoint class is not isolated: near a singular g both
    // endpoint signs occur
    {
        let k = sample::generic_k(&mut rng, 1);
        let mut found: Option<CMat> = None;
        for _ in 0..400 {
            let g = sample::random_sp_group(&mut rng, 1, 0.6);
            if let Ok(crate::branch::EndpointSign::Singular) =
                crate::branch::sign_at_pi(&g, &k, 0.05)
            {
                found = Some(g);
                break;
            }
        }
        match found {
            Some(g) => {
                let mut plus = false;
                let mut minus = false;
                for _ in 0..200 {
                    let eps = sample::random_sp_algebra(&mut rng, 1, 0.15);
                    let g2 = &g * expm(&eps);
                    match crate::branch::sign_at_pi(&g2, &k, 1e-4) {
                        Ok(crate::branch::EndpointSign::PlusOne) => plus = true,
                        Ok(crate::branch::EndpointSign::MinusOne) => minus = true,
                        _ => {}
                    }
                    if plus && minus {
                        break;
                    }
                }
                checks.push(Check::exact(
                    "both signs occur near a singular endpoint",
                    plus && minus,
                ));
            }
            None => checks.push(Check::failed(
                "both signs occur near a singular endpoint",
                "no singular sample found".into(),
            )),
        }
    }

    // classification sanity on the standard families
    {
        let cls = classify_periodicity(&alpha_rot, &kre);
        let ok1 = matches!(
            cls.as_ref().map(|c| c.label),
            Ok(Periodicity::PiPeriodic)
        );
        let cls2 = classify_periodicity(&alpha_rot, &kim);
        let ok2 = matches!(
            cls2.as_ref().map(|c| c.label),
            Ok(Periodicity::AlternatingPi)
        );
        checks.push(Check::exact("classification of the two standard classes", ok1 && ok2));
    }

    SuiteReport {
        suite: "verify-branch".into(),
        checks,
    }
}

/// Polar-layer invariants: phase universality of the half-period element,
/// quarter/half conjugation rotations of families, dual-route products,
/// and the full relation table.
pub fn verify_polar(seed: u64) -> SuiteReport {
    let mut rng = sample::rng(seed ^ 0x44);
    let mut checks = vec![];
    let kre = crate::polar::k_re(crate::polar::K_RE_DEFAULT.0, crate::polar::K_RE_DEFAULT.1);

    // phase universality under a generic K
    {
        let k = sample::generic_k(&mut rng, 1);
        let mut phase_worst = 0.0f64;
        let mut amp_worst = 0.0f64;
        let mut traced = 0;
        for _ in 0..10 {
            let g = sample::random_sp_group(&mut rng, 1, 0.4);
            let path = PathSpec::straight_to(c64(PI, 0.0));
            if let Ok(p) = crate::polar::polar_element(&g, &k, &path) {
                if let Ok((pr, ar)) = p.residuals(&k) {
                    phase_worst = phase_worst.max(pr);
                    amp_worst = amp_worst.max(ar);
                    traced += 1;
                }
            }
        }
        if traced == 0 {
            checks.push(Check::failed(
                "polar phase universality",
                "all sampled paths singular".into(),
            ));
        } else {
            checks.push(Check::new("polar phase universality", phase_worst, 1e-9));
            checks.push(Check::new("polar amplitude squared", amp_worst, 1e-8));
        }
    }

    // quarter and half conjugation by the first square root
    {
        let a_uv = CMat::from_row_slice(
            2,
            2,
            &[c64(0.0, 0.0), c64(0.5, 0.0), c64(0.5, 0.0), c64(0.0, 0.0)],
        );
        let g_uv = SpElement::from_quadratic(1, &a_uv).unwrap();
        let g_sum = SpElement::from_quadratic(1, &identity(2)).unwrap();
        let a_idiff = CMat::from_row_slice(
            2,
            2,
            &[c64(0.0, 1.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(0.0, -1.0)],
        );
        let g_idiff = SpElement::from_quadratic(1, &a_idiff).unwrap();
        let s = 0.4;
        let quarter = c64(0.0, PI / 4.0);
        let lhs = traced_product(
            &[
                (g_uv.clone(), quarter),
                (g_sum.clone(), c64(s, 0.0)),
                (g_uv.clone(), -quarter),
            ],
            &kre,
        );
        let rhs = traced_product(&[(g_idiff, c64(s, 0.0))], &kre);
        let r1 = match (lhs, rhs) {
            (Ok(l), Ok(r)) => l.distance(&r),
            _ => f64::INFINITY,
        };
        checks.push(Check::new("quarter conjugation rotates the family", r1, 1e-9));

        let a_msum = identity(2).map(|z| -z);
        let g_msum = SpElement::from_quadratic(1, &a_msum).unwrap();
        let half = c64(0.0, PI / 2.0);
        let lhs = traced_product(
            &[
                (g_uv.clone(), half),
                (g_sum.clone(), c64(s, 0.0)),
                (g_uv.clone(), -half),
            ],
            &kre,
        );
        let rhs = traced_product(&[(g_msum, c64(s, 0.0))], &kre);
        let r2 = match (lhs, rhs) {
            (Ok(l), Ok(r)) => l.distance(&r),
            _ => f64::INFINITY,
        };
        checks.push(Check::new("half conjugation inverts the family", r2, 1e-9));
    }

    // dual route: traced product of collinear factors vs the single trace
    {
        use rand::Rng;
        let mut worst = 0.0f64;
        for _ in 0..5 {
            let alpha =
                SpElement::new(1, sample::random_sp_algebra(&mut rng, 1, 0.5)).unwrap();
            let s = rng.gen_range(0.1..0.5);
            let t = rng.gen_range(0.1..0.5);
            let prod = traced_product(
                &[(alpha.clone(), c64(s, 0.0)), (alpha.clone(), c64(t, 0.0))],
                &kre,
            );
            let direct =
                trace_amplitude(&alpha, &kre, &PathSpec::straight_to(c64(s + t, 0.0)), None);
            match (prod, direct) {
                (Ok(p), Ok(d)) => worst = worst.max(p.distance(&d.value)),
                _ => worst = f64::INFINITY,
            }
        }
        checks.push(Check::new("product route vs summed-parameter route", worst, 1e-9));
    }

    // the full relation table
    match crate::polar::quaternion_structure(&kre) {
        Ok(report) => {
            for r in &report.relations {
                checks.push(Check::new(r.name.clone(), r.residual, 1e-9));
            }
            checks.push(Check::new(
                "basis identification residual",
                report.table.max_residual,
                1e-9,
            ));
        }
        Err(e) => checks.push(Check::failed("quaternion structure", e.to_string())),
    }

    SuiteReport {
        suite: "verify-polar".into(),
        checks,
    }
}
