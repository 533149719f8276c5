//! Immutable expression trees over a [`Context`], with lazily cached normal
//! forms. Expressions are values: cheap to clone, safe to share across
//! threads, and every operation is pure.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num::bigint::BigInt;
use num::{BigRational, One, Signed};

use super::context::{Context, SymbolId};
use super::normal::{fun_atom, Atom, Monomial, NormFn, Poly};
use crate::error::Error;

/// The unary functions of the expression grammar.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Function {
    Exp,
    Ln,
    Sqrt,
    Sin,
    Cos,
    Sinh,
    Cosh,
}

impl Function {
    pub fn name(self) -> &'static str {
        match self {
            Function::Exp => "exp",
            Function::Ln => "ln",
            Function::Sqrt => "sqrt",
            Function::Sin => "sin",
            Function::Cos => "cos",
            Function::Sinh => "sinh",
            Function::Cosh => "cosh",
        }
    }

    pub fn from_name(name: &str) -> Option<Function> {
        Some(match name {
            "exp" => Function::Exp,
            "ln" => Function::Ln,
            "sqrt" => Function::Sqrt,
            "sin" => Function::Sin,
            "cos" => Function::Cos,
            "sinh" => Function::Sinh,
            "cosh" => Function::Cosh,
            _ => return None,
        })
    }
}

#[derive(Debug)]
pub(crate) enum Node {
    Rational(BigRational),
    Symbol(SymbolId),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    /// Exponent restricted to a rational constant by the grammar.
    Pow(Expr, BigRational),
    Call(Function, Expr),
}

struct Inner {
    node: Node,
    norm: OnceLock<Result<Poly, Error>>,
}

/// An immutable scalar expression bound to a [`Context`].
#[derive(Clone)]
pub struct Expr {
    ctx: Arc<Context>,
    inner: Arc<Inner>,
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({})", self)
    }
}

impl Expr {
    fn new(ctx: Arc<Context>, node: Node) -> Expr {
        Expr {
            ctx,
            inner: Arc::new(Inner {
                node,
                norm: OnceLock::new(),
            }),
        }
    }

    pub fn context(&self) -> &Arc<Context> {
        &self.ctx
    }

    pub fn rational(ctx: &Arc<Context>, q: BigRational) -> Expr {
        Expr::new(ctx.clone(), Node::Rational(q))
    }

    pub fn integer(ctx: &Arc<Context>, n: i64) -> Expr {
        Expr::rational(ctx, BigRational::from_integer(BigInt::from(n)))
    }

    pub fn zero(ctx: &Arc<Context>) -> Expr {
        Expr::integer(ctx, 0)
    }

    pub fn one(ctx: &Arc<Context>) -> Expr {
        Expr::integer(ctx, 1)
    }

    pub fn symbol(ctx: &Arc<Context>, name: &str) -> Result<Expr, Error> {
        let id = ctx.require(name)?;
        Ok(Expr::new(ctx.clone(), Node::Symbol(id)))
    }

    pub fn symbol_id(ctx: &Arc<Context>, id: SymbolId) -> Expr {
        assert!(id.index() < ctx.n_symbols());
        Expr::new(ctx.clone(), Node::Symbol(id))
    }

    fn assert_same_ctx(&self, other: &Expr) {
        assert!(
            Arc::ptr_eq(&self.ctx, &other.ctx) || self.ctx == other.ctx,
            "expressions belong to different contexts"
        );
    }

    pub fn pow_int(&self, n: i64) -> Expr {
        Expr::new(
            self.ctx.clone(),
            Node::Pow(self.clone(), BigRational::from_integer(BigInt::from(n))),
        )
    }

    pub fn pow_rational(&self, q: BigRational) -> Expr {
        Expr::new(self.ctx.clone(), Node::Pow(self.clone(), q))
    }

    pub fn call(&self, f: Function) -> Expr {
        Expr::new(self.ctx.clone(), Node::Call(f, self.clone()))
    }

    pub fn exp(&self) -> Expr {
        self.call(Function::Exp)
    }

    pub fn ln(&self) -> Expr {
        self.call(Function::Ln)
    }

    pub fn sqrt(&self) -> Expr {
        self.call(Function::Sqrt)
    }

    pub fn sin(&self) -> Expr {
        self.call(Function::Sin)
    }

    pub fn cos(&self) -> Expr {
        self.call(Function::Cos)
    }

    pub fn sinh(&self) -> Expr {
        self.call(Function::Sinh)
    }

    pub fn cosh(&self) -> Expr {
        self.call(Function::Cosh)
    }

    pub(crate) fn from_node(ctx: &Arc<Context>, node: Node) -> Expr {
        Expr::new(ctx.clone(), node)
    }

    /// The cached normal form of this expression.
    pub(crate) fn poly(&self) -> Result<&Poly, Error> {
        self.inner
            .norm
            .get_or_init(|| self.compute_poly())
            .as_ref()
            .map_err(|e| e.clone())
    }

    fn compute_poly(&self) -> Result<Poly, Error> {
        match &self.inner.node {
            Node::Rational(q) => Ok(Poly::constant(q.clone())),
            Node::Symbol(id) => Ok(Poly::symbol(*id)),
            Node::Add(a, b) => Ok(a.poly()?.add(b.poly()?)),
            Node::Sub(a, b) => Ok(a.poly()?.sub(b.poly()?)),
            Node::Mul(a, b) => Ok(a.poly()?.mul(b.poly()?)),
            Node::Div(a, b) => a.poly()?.div(b.poly()?),
            Node::Pow(a, q) => a.poly()?.pow_rational(q),
            Node::Call(Function::Sqrt, a) => a
                .poly()?
                .pow_rational(&BigRational::new(BigInt::one(), BigInt::from(2))),
            Node::Call(f, a) => {
                let nf = match f {
                    Function::Exp => NormFn::Exp,
                    Function::Ln => NormFn::Ln,
                    Function::Sin => NormFn::Sin,
                    Function::Cos => NormFn::Cos,
                    Function::Sinh => NormFn::Sinh,
                    Function::Cosh => NormFn::Cosh,
                    Function::Sqrt => unreachable!(),
                };
                Ok(fun_atom(nf, a.poly()?.clone()))
            }
        }
    }

    /// Canonical form: the expression rebuilt from its normal form.
    /// Idempotent: normalizing the result returns a structurally equal tree.
    pub fn normalize(&self) -> Result<Expr, Error> {
        let poly = self.poly()?.clone();
        let expr = poly_to_expr(&self.ctx, &poly);
        let _ = expr.inner.norm.set(Ok(poly));
        Ok(expr)
    }

    /// Structural equality of normal forms.
    pub fn equivalent(&self, other: &Expr) -> Result<bool, Error> {
        self.assert_same_ctx(other);
        Ok(self.poly()? == other.poly()?)
    }

    /// Whether the normal form is the zero polynomial.
    pub fn is_provably_zero(&self) -> Result<bool, Error> {
        Ok(self.poly()?.is_zero())
    }

    pub fn as_constant(&self) -> Result<Option<BigRational>, Error> {
        Ok(self.poly()?.as_constant())
    }

    /// Symbols occurring in the normal form.
    pub fn symbols(&self) -> Result<BTreeSet<SymbolId>, Error> {
        let mut out = BTreeSet::new();
        self.poly()?.symbols(&mut out);
        Ok(out)
    }

    /// Partial derivative with respect to a coordinate, normalized.
    pub fn differentiate(&self, coord: &str) -> Result<Expr, Error> {
        let id = self.ctx.require(coord)?;
        self.differentiate_id(id)
    }

    pub fn differentiate_id(&self, id: SymbolId) -> Result<Expr, Error> {
        if !self.ctx.is_coordinate(id) {
            return Err(Error::NotACoordinate {
                name: self.ctx.name(id).to_string(),
            });
        }
        let d = super::deriv::deriv_poly(self.poly()?, id)?;
        let expr = poly_to_expr(&self.ctx, &d);
        let _ = expr.inner.norm.set(Ok(d));
        Ok(expr)
    }

    /// Evaluate at a dense assignment indexed by [`SymbolId`].
    pub fn eval(&self, values: &[f64]) -> Result<f64, Error> {
        super::eval::eval_poly(self.poly()?, &self.ctx, values)
    }

    /// Evaluate with named values; all symbols of the expression must appear.
    pub fn eval_named(&self, values: &[(&str, f64)]) -> Result<f64, Error> {
        let mut dense = vec![f64::NAN; self.ctx.n_symbols()];
        let mut assigned = vec![false; self.ctx.n_symbols()];
        for (name, v) in values {
            let id = self.ctx.require(name)?;
            dense[id.index()] = *v;
            assigned[id.index()] = true;
        }
        for id in self.symbols()? {
            if !assigned[id.index()] {
                return Err(Error::Unassigned(self.ctx.name(id).to_string()));
            }
        }
        self.eval(&dense)
    }
}

/// Structural tree equality (same shape, same constants, same symbols).
impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        if !(Arc::ptr_eq(&self.ctx, &other.ctx) || self.ctx == other.ctx) {
            return false;
        }
        fn node_eq(a: &Node, b: &Node) -> bool {
            match (a, b) {
                (Node::Rational(x), Node::Rational(y)) => x == y,
                (Node::Symbol(x), Node::Symbol(y)) => x == y,
                (Node::Add(a1, a2), Node::Add(b1, b2))
                | (Node::Sub(a1, a2), Node::Sub(b1, b2))
                | (Node::Mul(a1, a2), Node::Mul(b1, b2))
                | (Node::Div(a1, a2), Node::Div(b1, b2)) => a1 == b1 && a2 == b2,
                (Node::Pow(a1, q1), Node::Pow(b1, q2)) => q1 == q2 && a1 == b1,
                (Node::Call(f1, a1), Node::Call(f2, a2)) => f1 == f2 && a1 == a2,
                _ => false,
            }
        }
        node_eq(&self.inner.node, &other.inner.node)
    }
}

impl Eq for Expr {}

// -- arithmetic operators ---------------------------------------------------

macro_rules! binop {
    ($trait:ident, $method:ident, $node:ident) => {
        impl std::ops::$trait for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                self.assert_same_ctx(rhs);
                Expr::from_node(&self.ctx, Node::$node(self.clone(), rhs.clone()))
            }
        }
        impl std::ops::$trait for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                (&self).$method(&rhs)
            }
        }
    };
}

binop!(Add, add, Add);
binop!(Sub, sub, Sub);
binop!(Mul, mul, Mul);
binop!(Div, div, Div);

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        let minus_one = Expr::integer(&self.ctx, -1);
        Expr::from_node(&self.ctx, Node::Mul(minus_one, self.clone()))
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

// -- canonical printing -----------------------------------------------------

fn rational_str(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

fn exponent_str(q: &BigRational) -> String {
    if q.is_integer() {
        format!("^{}", q.numer())
    } else {
        format!("^({}/{})", q.numer(), q.denom())
    }
}

fn atom_str(ctx: &Context, a: &Atom) -> String {
    match a {
        Atom::Sym(id) => ctx.name(*id).to_string(),
        Atom::Fun(f, arg) => format!("{}({})", f.name(), poly_str(ctx, arg)),
        Atom::Pow(p) => format!("({})", poly_str(ctx, p)),
    }
}

fn monomial_str(ctx: &Context, m: &Monomial) -> String {
    m.factors
        .iter()
        .map(|(a, e)| {
            if e.is_one() {
                atom_str(ctx, a)
            } else {
                format!("{}{}", atom_str(ctx, a), exponent_str(e))
            }
        })
        .collect::<Vec<_>>()
        .join("*")
}

pub(crate) fn poly_str(ctx: &Context, p: &Poly) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (idx, (m, c)) in p.terms.iter().rev().enumerate() {
        let neg = c.is_negative();
        let mag = c.abs();
        if idx == 0 {
            if neg {
                out.push('-');
            }
        } else if neg {
            out.push_str(" - ");
        } else {
            out.push_str(" + ");
        }
        if m.is_one() {
            out.push_str(&rational_str(&mag));
        } else if mag.is_one() {
            out.push_str(&monomial_str(ctx, m));
        } else {
            out.push_str(&rational_str(&mag));
            out.push('*');
            out.push_str(&monomial_str(ctx, m));
        }
    }
    out
}

/// Rebuild a canonical expression tree from a normal form.
pub(crate) fn poly_to_expr(ctx: &Arc<Context>, p: &Poly) -> Expr {
    fn atom_expr(ctx: &Arc<Context>, a: &Atom, e: &BigRational) -> Expr {
        let base = match a {
            Atom::Sym(id) => Expr::symbol_id(ctx, *id),
            Atom::Fun(f, arg) => {
                let fun = match f {
                    NormFn::Exp => Function::Exp,
                    NormFn::Ln => Function::Ln,
                    NormFn::Sin => Function::Sin,
                    NormFn::Cos => Function::Cos,
                    NormFn::Sinh => Function::Sinh,
                    NormFn::Cosh => Function::Cosh,
                };
                poly_to_expr(ctx, arg).call(fun)
            }
            Atom::Pow(inner) => poly_to_expr(ctx, inner),
        };
        if e.is_one() {
            base
        } else {
            base.pow_rational(e.clone())
        }
    }

    if p.is_zero() {
        return Expr::zero(ctx);
    }
    let mut acc: Option<Expr> = None;
    for (m, c) in p.terms.iter().rev() {
        let mut factors: Vec<Expr> = Vec::new();
        if !c.is_one() || m.is_one() {
            factors.push(Expr::rational(ctx, c.clone()));
        }
        for (a, e) in &m.factors {
            factors.push(atom_expr(ctx, a, e));
        }
        let term = factors
            .into_iter()
            .reduce(|x, y| Expr::from_node(ctx, Node::Mul(x, y)))
            .unwrap();
        acc = Some(match acc {
            None => term,
            Some(prev) => Expr::from_node(ctx, Node::Add(prev, term)),
        });
    }
    acc.unwrap()
}

impl fmt::Display for Expr {
    /// Prints the canonical (normalized) form. Falls back to a diagnostic
    /// marker if normalization fails (e.g. division by an exact zero).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.poly() {
            Ok(p) => write!(f, "{}", poly_str(&self.ctx, p)),
            Err(e) => write!(f, "<invalid: {}>", e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> Arc<Context> {
        Context::new(&["x1", "x2", "x3", "x4"], &["lambda"]).unwrap()
    }

    #[test]
    fn arithmetic_normalizes() {
        let c = ctx();
        let x = Expr::symbol(&c, "x1").unwrap();
        let e = &(&x + &x) - &(&x * &Expr::integer(&c, 2));
        assert!(e.is_provably_zero().unwrap());
    }

    #[test]
    fn division_by_symbolic_zero_fails() {
        let c = ctx();
        let x = Expr::symbol(&c, "x1").unwrap();
        let zero = &x - &x;
        let e = &Expr::one(&c) / &zero;
        assert!(matches!(e.poly(), Err(Error::DivisionByZero)));
    }

    #[test]
    fn normalize_idempotent_structurally() {
        let c = ctx();
        let x = Expr::symbol(&c, "x1").unwrap();
        let lam = Expr::symbol(&c, "lambda").unwrap();
        let e = &(&x + &lam).pow_int(3) * &x.cosh();
        let n1 = e.normalize().unwrap();
        let n2 = n1.normalize().unwrap();
        assert_eq!(n1, n2);
    }

    #[test]
    fn display_is_canonical() {
        let c = ctx();
        let x1 = Expr::symbol(&c, "x1").unwrap();
        let x2 = Expr::symbol(&c, "x2").unwrap();
        let a = &x1 + &x2;
        let b = &x2 + &x1;
        assert_eq!(a.to_string(), b.to_string());
    }
}
