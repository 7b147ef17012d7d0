//! JSON envelopes for every element kind the CLI exchanges. Polynomials
//! and exact expression parameters round-trip exactly (rationals as
//! decimal strings); numeric payloads round-trip bit-equal through
//! serde_json's shortest-representation floats.

use crate::branch::{PathMode, PathSpec};
use crate::error::{Error, Result};
use crate::linexp::LinearExponential;
use crate::numerics::{c64, CMat};
use crate::poly::{ExpressionParameter, WeylPolynomial};
use crate::quad::{GaussianElement, GroupPoint, SpElement};
use crate::scalar::{GaussianRational, HbarScalar};
use num::complex::Complex64;
use num::{BigInt, BigRational, Zero};
use serde_json::{json, Map, Value};
use std::str::FromStr;

#[derive(Debug)]
pub enum ElementEnvelope {
    Polynomial(WeylPolynomial),
    ExpressionExact(ExpressionParameter),
    Expression { m: usize, k: CMat },
    LinExp(LinearExponential),
    Gaussian(GaussianElement),
    Sp(SpElement),
    GroupPoint(GroupPoint),
    Path(PathSpec),
}

fn schema_err(field: &str, constraint: &str) -> Error {
    Error::Schema {
        field: field.into(),
        constraint: constraint.into(),
    }
}

fn rational_to_json(r: &BigRational) -> Value {
    json!([r.numer().to_string(), r.denom().to_string()])
}

fn rational_from_json(v: &Value, field: &str) -> Result<BigRational> {
    let arr = v
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| schema_err(field, "rational must be [\"num\",\"den\"]"))?;
    let num = arr[0]
        .as_str()
        .ok_or_else(|| schema_err(field, "numerator must be a decimal string"))?;
    let den = arr[1]
        .as_str()
        .ok_or_else(|| schema_err(field, "denominator must be a decimal string"))?;
    let n = BigInt::from_str(num).map_err(|_| schema_err(field, "bad numerator"))?;
    let d = BigInt::from_str(den).map_err(|_| schema_err(field, "bad denominator"))?;
    if d.is_zero() {
        return Err(schema_err(field, "denominator must be nonzero"));
    }
    Ok(BigRational::new(n, d))
}

fn gaussian_rational_to_json(c: &GaussianRational) -> Value {
    json!([rational_to_json(&c.re), rational_to_json(&c.im)])
}

fn gaussian_rational_from_json(v: &Value, field: &str) -> Result<GaussianRational> {
    let arr = v
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| schema_err(field, "coefficient must be [re, im]"))?;
    Ok(GaussianRational::new(
        rational_from_json(&arr[0], field)?,
        rational_from_json(&arr[1], field)?,
    ))
}

fn complex_to_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn complex_from_json(v: &Value, field: &str) -> Result<Complex64> {
    let arr = v
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| schema_err(field, "complex number must be [re, im]"))?;
    let re = arr[0]
        .as_f64()
        .ok_or_else(|| schema_err(field, "re must be a number"))?;
    let im = arr[1]
        .as_f64()
        .ok_or_else(|| schema_err(field, "im must be a number"))?;
    Ok(c64(re, im))
}

fn cmat_to_json(a: &CMat) -> Value {
    Value::Array(
        (0..a.nrows())
            .map(|i| {
                Value::Array((0..a.ncols()).map(|j| complex_to_json(a[(i, j)])).collect())
            })
            .collect(),
    )
}

fn cmat_from_json(v: &Value, field: &str) -> Result<CMat> {
    let rows = v
        .as_array()
        .ok_or_else(|| schema_err(field, "matrix must be an array of rows"))?;
    let n = rows.len();
    if n == 0 {
        return Err(schema_err(field, "matrix must be nonempty"));
    }
    let mut a = CMat::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        let cols = row
            .as_array()
            .filter(|r| r.len() == n)
            .ok_or_else(|| schema_err(field, "matrix must be square"))?;
        for (j, e) in cols.iter().enumerate() {
            a[(i, j)] = complex_from_json(e, field)?;
        }
    }
    Ok(a)
}

pub fn serialize_element(e: &ElementEnvelope) -> Value {
    match e {
        ElementEnvelope::Polynomial(p) => {
            let terms: Vec<Value> = p
                .terms()
                .iter()
                .map(|(exps, coeff)| {
                    json!({
                        "exps": exps,
                        "coeff": coeff
                            .coeffs()
                            .iter()
                            .map(gaussian_rational_to_json)
                            .collect::<Vec<_>>(),
                    })
                })
                .collect();
            json!({"type": "polynomial", "m": p.m, "terms": terms})
        }
        ElementEnvelope::ExpressionExact(k) => {
            let entries: Vec<Value> = k
                .entries()
                .iter()
                .map(|row| Value::Array(row.iter().map(gaussian_rational_to_json).collect()))
                .collect();
            json!({"type": "expression_exact", "m": k.m, "entries": entries})
        }
        ElementEnvelope::Expression { m, k } => {
            json!({"type": "expression", "m": m, "K": cmat_to_json(k)})
        }
        ElementEnvelope::LinExp(e) => {
            json!({
                "type": "linexp",
                "a": e.a.iter().map(|z| complex_to_json(*z)).collect::<Vec<_>>(),
                "s": complex_to_json(e.s),
            })
        }
        ElementEnvelope::Gaussian(g) => {
            json!({
                "type": "gaussian",
                "m": g.m,
                "amp": complex_to_json(g.amp),
                "Q": cmat_to_json(&g.q),
                "sheet": g.sheet,
            })
        }
        ElementEnvelope::Sp(a) => {
            json!({"type": "sp", "alpha": cmat_to_json(&a.mat)})
        }
        ElementEnvelope::GroupPoint(p) => {
            json!({
                "type": "group_point",
                "amp": complex_to_json(p.amp),
                "alpha": cmat_to_json(&p.alpha.mat),
            })
        }
        ElementEnvelope::Path(p) => {
            let mode = match p.mode {
                PathMode::Straight => "straight",
                PathMode::Avoid => "avoid",
                PathMode::SameSheet => "same_sheet",
            };
            json!({
                "type": "path",
                "waypoints": p.waypoints.iter().map(|z| complex_to_json(*z)).collect::<Vec<_>>(),
                "mode": mode,
            })
        }
    }
}

pub fn parse_element(text: &str) -> Result<ElementEnvelope> {
    let v: Value = serde_json::from_str(text)?;
    let obj = v
        .as_object()
        .ok_or_else(|| schema_err("<root>", "element must be a JSON object"))?;
    let ty = obj
        .get("type")
        .and_then(|t| t.as_str())
        .ok_or_else(|| schema_err("type", "missing type tag"))?;
    match ty {
        "polynomial" => parse_polynomial(obj),
        "expression_exact" => parse_expression_exact(obj),
        "expression" => {
            let m = get_m(obj)?;
            let k = cmat_from_json(
                obj.get("K").ok_or_else(|| schema_err("K", "missing"))?,
                "K",
            )?;
            if k.nrows() != 2 * m {
                return Err(schema_err("K", "size must be 2m x 2m"));
            }
            let sym = crate::numerics::max_norm(&(&k - k.transpose()));
            if sym > 1e-3 {
                return Err(schema_err("K", "must be symmetric"));
            }
            Ok(ElementEnvelope::Expression { m, k })
        }
        "linexp" => {
            let a_val = obj.get("a").ok_or_else(|| schema_err("a", "missing"))?;
            let arr = a_val
                .as_array()
                .ok_or_else(|| schema_err("a", "must be an array"))?;
            if arr.is_empty() || arr.len() % 2 != 0 {
                return Err(schema_err("a", "length must be 2m"));
            }
            let a: Vec<Complex64> = arr
                .iter()
                .map(|e| complex_from_json(e, "a"))
                .collect::<Result<_>>()?;
            let s = complex_from_json(
                obj.get("s").ok_or_else(|| schema_err("s", "missing"))?,
                "s",
            )?;
            Ok(ElementEnvelope::LinExp(LinearExponential::new(
                arr.len() / 2,
                a,
                s,
            )?))
        }
        "gaussian" => {
            let m = get_m(obj)?;
            let amp = complex_from_json(
                obj.get("amp").ok_or_else(|| schema_err("amp", "missing"))?,
                "amp",
            )?;
            let q = cmat_from_json(
                obj.get("Q").ok_or_else(|| schema_err("Q", "missing"))?,
                "Q",
            )?;
            if q.nrows() != 2 * m {
                return Err(schema_err("Q", "size must be 2m x 2m"));
            }
            let sym = crate::numerics::max_norm(&(&q - q.transpose()));
            if sym > 1e-3 {
                return Err(schema_err("Q", "must be symmetric (within 1e-3 on load)"));
            }
            let sheet = obj.get("sheet").and_then(|s| s.as_i64()).unwrap_or(1);
            if sheet != 1 && sheet != -1 {
                return Err(schema_err("sheet", "must be +1 or -1"));
            }
            let g = GaussianElement::new(m, amp, symmetrize(&q))?.with_sheet(sheet as i8);
            Ok(ElementEnvelope::Gaussian(g))
        }
        "sp" => {
            let a = cmat_from_json(
                obj.get("alpha")
                    .ok_or_else(|| schema_err("alpha", "missing"))?,
                "alpha",
            )?;
            if a.nrows() % 2 != 0 {
                return Err(schema_err("alpha", "size must be even"));
            }
            let m = a.nrows() / 2;
            Ok(ElementEnvelope::Sp(SpElement::new(m, a).map_err(|_| {
                schema_err("alpha", "must satisfy alpha J + J alpha^T = 0")
            })?))
        }
        "group_point" => {
            let amp = complex_from_json(
                obj.get("amp").ok_or_else(|| schema_err("amp", "missing"))?,
                "amp",
            )?;
            let a = cmat_from_json(
                obj.get("alpha")
                    .ok_or_else(|| schema_err("alpha", "missing"))?,
                "alpha",
            )?;
            let m = a.nrows() / 2;
            Ok(ElementEnvelope::GroupPoint(GroupPoint {
                amp,
                alpha: SpElement::new(m, a)
                    .map_err(|_| schema_err("alpha", "must be in sp(m,C)"))?,
            }))
        }
        "path" => {
            let wp = obj
                .get("waypoints")
                .and_then(|w| w.as_array())
                .ok_or_else(|| schema_err("waypoints", "missing array"))?;
            let waypoints: Vec<Complex64> = wp
                .iter()
                .map(|e| complex_from_json(e, "waypoints"))
                .collect::<Result<_>>()?;
            let mode = match obj.get("mode").and_then(|m| m.as_str()) {
                Some("straight") | None => PathMode::Straight,
                Some("avoid") => PathMode::Avoid,
                Some("same_sheet") => PathMode::SameSheet,
                Some(other) => {
                    return Err(schema_err(
                        "mode",
                        &format!("unknown mode `{other}` (straight|avoid|same_sheet)"),
                    ))
                }
            };
            Ok(ElementEnvelope::Path(PathSpec::new(waypoints, mode)?))
        }
        other => Err(schema_err(
            "type",
            &format!("unknown element type `{other}`"),
        )),
    }
}

fn symmetrize(a: &CMat) -> CMat {
    (a + a.transpose()).map(|z| z / 2.0)
}

fn get_m(obj: &Map<String, Value>) -> Result<usize> {
    obj.get("m")
        .and_then(|m| m.as_u64())
        .filter(|&m| m >= 1)
        .map(|m| m as usize)
        .ok_or_else(|| schema_err("m", "must be a positive integer"))
}

fn parse_polynomial(obj: &Map<String, Value>) -> Result<ElementEnvelope> {
    let m = get_m(obj)?;
    let terms = obj
        .get("terms")
        .and_then(|t| t.as_array())
        .ok_or_else(|| schema_err("terms", "missing array"))?;
    let mut poly = WeylPolynomial::zero(m);
    for t in terms {
        let to = t
            .as_object()
            .ok_or_else(|| schema_err("terms", "each term must be an object"))?;
        let exps: Vec<u32> = to
            .get("exps")
            .and_then(|e| e.as_array())
            .ok_or_else(|| schema_err("exps", "missing array"))?
            .iter()
            .map(|x| {
                x.as_u64()
                    .map(|v| v as u32)
                    .ok_or_else(|| schema_err("exps", "must be nonnegative integers"))
            })
            .collect::<Result<_>>()?;
        if exps.len() != 2 * m {
            return Err(schema_err("exps", "multi-index length must equal 2m"));
        }
        let coeffs: Vec<GaussianRational> = to
            .get("coeff")
            .and_then(|c| c.as_array())
            .ok_or_else(|| schema_err("coeff", "missing array of hbar coefficients"))?
            .iter()
            .map(|c| gaussian_rational_from_json(c, "coeff"))
            .collect::<Result<_>>()?;
        let scalar = HbarScalar::from_coeffs(coeffs);
        poly = poly.add(&WeylPolynomial::monomial(m, &exps, scalar));
    }
    Ok(ElementEnvelope::Polynomial(poly))
}

fn parse_expression_exact(obj: &Map<String, Value>) -> Result<ElementEnvelope> {
    let m = get_m(obj)?;
    let rows = obj
        .get("entries")
        .and_then(|e| e.as_array())
        .ok_or_else(|| schema_err("entries", "missing array"))?;
    if rows.len() != 2 * m {
        return Err(schema_err("entries", "must have 2m rows"));
    }
    let mut entries = vec![];
    for row in rows {
        let cols = row
            .as_array()
            .filter(|r| r.len() == 2 * m)
            .ok_or_else(|| schema_err("entries", "must be 2m x 2m"))?;
        entries.push(
            cols.iter()
                .map(|c| gaussian_rational_from_json(c, "entries"))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    let k = ExpressionParameter::new(m, entries)
        .map_err(|_| schema_err("entries", "must be exactly symmetric"))?;
    Ok(ElementEnvelope::ExpressionExact(k))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_round_trips_exactly() {
        let mut p = WeylPolynomial::zero(1);
        p = p.add(&WeylPolynomial::monomial(
            1,
            &[1, 1],
            HbarScalar::from_coeffs(vec![
                GaussianRational::from_ratio(0, 1, -1, 2),
                GaussianRational::from_ratio(7, 3, 0, 1),
            ]),
        ));
        let text = serialize_element(&ElementEnvelope::Polynomial(p.clone())).to_string();
        match parse_element(&text).unwrap() {
            ElementEnvelope::Polynomial(q) => assert_eq!(p, q),
            _ => panic!("wrong variant"),
        }
    }

    #[test]
    fn gaussian_round_trips_bit_equal() {
        let q = CMat::from_row_slice(
            2,
            2,
            &[
                c64(0.1234567890123, -0.5),
                c64(0.25, 1e-17),
                c64(0.25, 1e-17),
                c64(-3.0, 0.75),
            ],
        );
        let g = GaussianElement::new(1, c64(0.5, -0.25), q).unwrap();
        let text = serialize_element(&ElementEnvelope::Gaussian(g.clone())).to_string();
        match parse_element(&text).unwrap() {
            ElementEnvelope::Gaussian(h) => {
                assert_eq!(g.amp, h.amp);
                assert_eq!(g.q, h.q);
                assert_eq!(g.sheet, h.sheet);
            }
            _ => panic!("wrong variant"),
        }
    }

    #[test]
    fn asymmetric_q_is_rejected_with_field_name() {
        let text = r#"{"type":"gaussian","m":1,"amp":[1.0,0.0],
            "Q":[[[0.0,0.0],[0.101,0.0]],[[0.1,0.0],[0.0,0.0]]],"sheet":1}"#;
        match parse_element(text) {
            Err(Error::Schema { field, .. }) => assert_eq!(field, "Q"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_type_is_rejected() {
        assert!(parse_element(r#"{"type":"widget"}"#).is_err());
    }

    #[test]
    fn zero_denominator_is_rejected() {
        let text = r#"{"type":"polynomial","m":1,
            "terms":[{"exps":[1,0],"coeff":[[["1","0"],["0","1"]]]}]}"#;
        assert!(parse_element(text).is_err());
    }
}
