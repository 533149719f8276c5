//! Differentiation on normal forms.

use num::{BigRational, One, Zero};

use super::context::SymbolId;
use super::normal::{fun_atom, Atom, Monomial, NormFn, Poly};
use crate::error::Error;

/// ∂p/∂x for a coordinate symbol, term by term with the product rule.
pub(crate) fn deriv_poly(p: &Poly, x: SymbolId) -> Result<Poly, Error> {
    let mut out = Poly::zero();
    for (m, c) in &p.terms {
        out = out.add(&deriv_monomial(m, x)?.scale(c));
    }
    Ok(out)
}

fn deriv_monomial(m: &Monomial, x: SymbolId) -> Result<Poly, Error> {
    let mut out = Poly::zero();
    for (k, (a, e)) in m.factors.iter().enumerate() {
        let da = deriv_atom(a, x)?;
        if da.is_zero() {
            continue;
        }
        // e * a^(e-1) * da * (rest of the monomial)
        let rest = Monomial {
            factors: m
                .factors
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != k)
                .map(|(_, f)| f.clone())
                .collect(),
        };
        let mut term = Poly::from_monomial(rest, e.clone());
        let down = e - BigRational::one();
        if !down.is_zero() {
            let base = Poly::from_monomial(Monomial::atom(a.clone(), BigRational::one()), BigRational::one());
            term = term.mul(&base.pow_rational(&down)?);
        }
        term = term.mul(&da);
        out = out.add(&term);
    }
    Ok(out)
}

fn deriv_atom(a: &Atom, x: SymbolId) -> Result<Poly, Error> {
    Ok(match a {
        Atom::Sym(id) => {
            if *id == x {
                Poly::one()
            } else {
                Poly::zero()
            }
        }
        Atom::Fun(f, arg) => {
            let darg = deriv_poly(arg, x)?;
            if darg.is_zero() {
                return Ok(Poly::zero());
            }
            let outer = match f {
                NormFn::Exp => fun_atom(NormFn::Exp, arg.clone()),
                NormFn::Ln => arg.invert()?,
                NormFn::Sin => fun_atom(NormFn::Cos, arg.clone()),
                NormFn::Cos => fun_atom(NormFn::Sin, arg.clone()).neg(),
                NormFn::Sinh => fun_atom(NormFn::Cosh, arg.clone()),
                NormFn::Cosh => fun_atom(NormFn::Sinh, arg.clone()),
            };
            outer.mul(&darg)
        }
        Atom::Pow(inner) => deriv_poly(inner, x)?,
    })
}
