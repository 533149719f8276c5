//! IEEE double evaluation of normal forms with explicit domain errors.

use num::{BigRational, Signed, ToPrimitive};

use super::context::Context;
use super::normal::{Atom, NormFn, Poly};
use crate::error::Error;

pub(crate) fn rational_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        let n = q.numer().to_f64().unwrap_or(f64::NAN);
        let d = q.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

pub(crate) fn eval_poly(p: &Poly, ctx: &Context, values: &[f64]) -> Result<f64, Error> {
    let mut acc = 0.0;
    for (m, c) in &p.terms {
        let mut term = rational_to_f64(c);
        for (a, e) in &m.factors {
            let base = eval_atom(a, ctx, values)?;
            term *= pow_checked(base, e)?;
        }
        acc += term;
    }
    Ok(acc)
}

fn eval_atom(a: &Atom, ctx: &Context, values: &[f64]) -> Result<f64, Error> {
    match a {
        Atom::Sym(id) => {
            let v = values
                .get(id.index())
                .copied()
                .unwrap_or(f64::NAN);
            if v.is_nan() {
                return Err(Error::Unassigned(ctx.name(*id).to_string()));
            }
            Ok(v)
        }
        Atom::Fun(f, arg) => {
            let x = eval_poly(arg, ctx, values)?;
            Ok(match f {
                NormFn::Exp => x.exp(),
                NormFn::Ln => {
                    if x <= 0.0 {
                        return Err(Error::Domain(format!("ln of non-positive value {x}")));
                    }
                    x.ln()
                }
                NormFn::Sin => x.sin(),
                NormFn::Cos => x.cos(),
                NormFn::Sinh => x.sinh(),
                NormFn::Cosh => x.cosh(),
            })
        }
        Atom::Pow(inner) => eval_poly(inner, ctx, values),
    }
}

/// `base^e` with the domain conventions of `powf`: negative bases require
/// integer exponents, zero bases require positive exponents.
fn pow_checked(base: f64, e: &BigRational) -> Result<f64, Error> {
    if e.is_integer() {
        let n = e.to_integer();
        if base == 0.0 && n.is_negative() {
            return Err(Error::Domain("division by zero".into()));
        }
        if let Some(n) = n.to_i32() {
            return Ok(base.powi(n));
        }
        return Ok(base.powf(rational_to_f64(e)));
    }
    if base < 0.0 {
        return Err(Error::Domain(format!(
            "negative base {base} under fractional exponent"
        )));
    }
    if base == 0.0 && e.is_negative() {
        return Err(Error::Domain("division by zero".into()));
    }
    Ok(base.powf(rational_to_f64(e)))
}
