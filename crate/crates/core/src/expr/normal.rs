//! Canonical normal form for scalar expressions.
//!
//! The normal form is a multivariate polynomial over a commutative ring whose
//! atoms are symbols, transcendental-function applications (treated as
//! opaque), and non-distributable power bases. Rational constants fold
//! exactly, like terms collect, integer exponents expand; rational exponents
//! stay atomic. No hyperbolic or exponential identity rewriting happens here;
//! identities the normal form cannot see are the job of the sampling
//! fallback.

use std::collections::{BTreeMap, BTreeSet};

use num::bigint::BigInt;
use num::{BigRational, Integer, One, Signed, ToPrimitive, Zero};

use super::context::SymbolId;
use crate::error::Error;

/// Unary functions kept opaque by normalization. `sqrt` never appears here:
/// it is canonicalized to a rational power during normalization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum NormFn {
    Exp,
    Ln,
    Sin,
    Cos,
    Sinh,
    Cosh,
}

impl NormFn {
    pub fn name(self) -> &'static str {
        match self {
            NormFn::Exp => "exp",
            NormFn::Ln => "ln",
            NormFn::Sin => "sin",
            NormFn::Cos => "cos",
            NormFn::Sinh => "sinh",
            NormFn::Cosh => "cosh",
        }
    }
}

/// A multiplicative atom of the monomial ring.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Atom {
    /// A coordinate or parameter symbol.
    Sym(SymbolId),
    /// An opaque function application; the argument is itself normalized.
    Fun(NormFn, Poly),
    /// A base kept whole under a rational exponent (the exponent lives in the
    /// monomial). Never carries a positive integer exponent after
    /// normalization; those get expanded.
    Pow(Poly),
}

/// A product of atoms with nonzero rational exponents, sorted by atom.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Monomial {
    pub factors: Vec<(Atom, BigRational)>,
}

/// Sum of monomials with nonzero rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Poly {
    pub terms: BTreeMap<Monomial, BigRational>,
}

fn br_int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn is_positive_integer(q: &BigRational) -> bool {
    q.is_integer() && q.is_positive()
}

fn is_odd_integer(q: &BigRational) -> bool {
    q.is_integer() && q.numer().is_odd()
}

impl Monomial {
    pub fn one() -> Monomial {
        Monomial {
            factors: Vec::new(),
        }
    }

    pub fn symbol(id: SymbolId) -> Monomial {
        Monomial {
            factors: vec![(Atom::Sym(id), BigRational::one())],
        }
    }

    pub fn atom(a: Atom, exp: BigRational) -> Monomial {
        debug_assert!(!exp.is_zero());
        Monomial {
            factors: vec![(a, exp)],
        }
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    /// Total degree (sum of exponents); used by the graded division order.
    fn total_degree(&self) -> BigRational {
        self.factors
            .iter()
            .fold(BigRational::zero(), |acc, (_, e)| acc + e)
    }

    fn all_nonneg_integer_exponents(&self) -> bool {
        self.factors
            .iter()
            .all(|(_, e)| e.is_integer() && !e.is_negative())
    }

    /// Whether `self` divides `other` in the ordinary polynomial sense
    /// (both must have nonnegative integer exponents).
    fn divides(&self, other: &Monomial) -> bool {
        let mut j = 0;
        'outer: for (a, e) in &self.factors {
            while j < other.factors.len() {
                let (b, f) = &other.factors[j];
                if b == a {
                    if f >= e {
                        j += 1;
                        continue 'outer;
                    }
                    return false;
                }
                if b > a {
                    return false;
                }
                j += 1;
            }
            return false;
        }
        true
    }

    fn inverse_factors(&self) -> Monomial {
        Monomial {
            factors: self
                .factors
                .iter()
                .map(|(a, e)| (a.clone(), -e))
                .collect(),
        }
    }
}

/// Merge two sorted factor lists, adding exponents of equal atoms. Pow atoms
/// whose merged exponent becomes a positive integer must be expanded by the
/// caller; they are returned separately as `(inner, n)` pairs.
fn merge_factors(a: &Monomial, b: &Monomial) -> (Monomial, Vec<(Poly, u32)>) {
    let mut out: Vec<(Atom, BigRational)> = Vec::with_capacity(a.factors.len() + b.factors.len());
    let mut expansions = Vec::new();
    let mut i = 0;
    let mut j = 0;
    loop {
        let (atom, exp) = if i < a.factors.len() && j < b.factors.len() {
            let (x, e) = &a.factors[i];
            let (y, f) = &b.factors[j];
            match x.cmp(y) {
                std::cmp::Ordering::Less => {
                    i += 1;
                    (x.clone(), e.clone())
                }
                std::cmp::Ordering::Greater => {
                    j += 1;
                    (y.clone(), f.clone())
                }
                std::cmp::Ordering::Equal => {
                    i += 1;
                    j += 1;
                    (x.clone(), e + f)
                }
            }
        } else if i < a.factors.len() {
            let (x, e) = &a.factors[i];
            i += 1;
            (x.clone(), e.clone())
        } else if j < b.factors.len() {
            let (y, f) = &b.factors[j];
            j += 1;
            (y.clone(), f.clone())
        } else {
            break;
        };
        if exp.is_zero() {
            continue;
        }
        if let Atom::Pow(inner) = &atom {
            if is_positive_integer(&exp) {
                expansions.push((inner.clone(), exp.to_integer().to_u32().unwrap_or(u32::MAX)));
                continue;
            }
        }
        out.push((atom, exp));
    }
    (Monomial { factors: out }, expansions)
}

impl Poly {
    pub fn zero() -> Poly {
        Poly {
            terms: BTreeMap::new(),
        }
    }

    pub fn one() -> Poly {
        Poly::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Poly {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::one(), c);
        }
        Poly { terms }
    }

    pub fn int(n: i64) -> Poly {
        Poly::constant(br_int(n))
    }

    pub fn symbol(id: SymbolId) -> Poly {
        Poly::from_monomial(Monomial::symbol(id), BigRational::one())
    }

    pub fn from_monomial(m: Monomial, c: BigRational) -> Poly {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Poly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().map(|c| c.is_one()).unwrap_or(false)
    }

    pub fn as_constant(&self) -> Option<BigRational> {
        if self.terms.is_empty() {
            return Some(BigRational::zero());
        }
        if self.terms.len() == 1 {
            let (m, c) = self.terms.iter().next().unwrap();
            if m.is_one() {
                return Some(c.clone());
            }
        }
        None
    }

    fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                let sum = o.get() + &c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), -c.clone()))
                .collect(),
        }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &BigRational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, k)| (m.clone(), k * c))
                .collect(),
        }
    }

    /// Product of two single terms; expands Pow atoms whose exponents become
    /// positive integers.
    fn mul_term_term(m1: &Monomial, c1: &BigRational, m2: &Monomial, c2: &BigRational) -> Poly {
        let (m, expansions) = merge_factors(m1, m2);
        let mut out = Poly::from_monomial(m, c1 * c2);
        for (inner, n) in expansions {
            out = out.mul(&inner.pow_int(n));
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let prod = Poly::mul_term_term(m1, c1, m2, c2);
                out = out.add(&prod);
            }
        }
        out
    }

    pub fn pow_int(&self, n: u32) -> Poly {
        let mut result = Poly::one();
        let mut base = self.clone();
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Multiplicative inverse. Exact for single-monomial polynomials; a
    /// multi-term base becomes an opaque `Pow` atom with exponent −1.
    pub fn invert(&self) -> Result<Poly, Error> {
        self.pow_rational(&br_int(-1))
    }

    /// Raise to a rational power. Integer exponents expand or invert; a
    /// non-integer exponent distributes over a single monomial only where
    /// `(x^k)^q = x^(kq)` holds on the domain of definition, and otherwise
    /// wraps the base in a `Pow` atom.
    pub fn pow_rational(&self, q: &BigRational) -> Result<Poly, Error> {
        if q.is_zero() {
            // 0^0 = 1, matching IEEE powf
            return Ok(Poly::one());
        }
        if self.is_zero() {
            if q.is_positive() {
                return Ok(Poly::zero());
            }
            return Err(Error::DivisionByZero);
        }
        if let Some(c) = self.as_constant() {
            if let Some(v) = rational_pow(&c, q) {
                return Ok(Poly::constant(v));
            }
            // e.g. 2^(1/2): opaque constant-base power
            return Ok(Poly::from_monomial(
                Monomial::atom(Atom::Pow(self.clone()), q.clone()),
                BigRational::one(),
            ));
        }
        if q.is_integer() {
            let n = q.to_integer();
            if n.is_positive() {
                let n = n
                    .to_u32()
                    .ok_or_else(|| Error::Domain("integer exponent too large to expand".into()))?;
                return Ok(self.pow_int(n));
            }
            let n = (-n)
                .to_u32()
                .ok_or_else(|| Error::Domain("integer exponent too large to expand".into()))?;
            let inv = if self.terms.len() == 1 {
                let (m, c) = self.terms.iter().next().unwrap();
                monomial_pow(m, c, &br_int(-1))?
            } else {
                Poly::from_monomial(
                    Monomial::atom(Atom::Pow(self.clone()), br_int(-1)),
                    BigRational::one(),
                )
            };
            return Ok(inv.pow_int(n));
        }
        if self.terms.len() == 1 {
            let (m, c) = self.terms.iter().next().unwrap();
            return monomial_pow(m, c, q);
        }
        Ok(Poly::from_monomial(
            Monomial::atom(Atom::Pow(self.clone()), q.clone()),
            BigRational::one(),
        ))
    }

    /// All symbols appearing anywhere in the polynomial, including inside
    /// function arguments and opaque power bases.
    pub fn symbols(&self, out: &mut BTreeSet<SymbolId>) {
        for m in self.terms.keys() {
            for (a, _) in &m.factors {
                match a {
                    Atom::Sym(id) => {
                        out.insert(*id);
                    }
                    Atom::Fun(_, p) | Atom::Pow(p) => p.symbols(out),
                }
            }
        }
    }

    /// Signed rational content and primitive part: `self = c * prim` where
    /// the coefficients of `prim` are coprime integers and the coefficient of
    /// its leading monomial is positive.
    pub fn content_primitive(&self) -> (BigRational, Poly) {
        if self.is_zero() {
            return (BigRational::zero(), Poly::zero());
        }
        let mut num_gcd = BigInt::zero();
        let mut den_lcm = BigInt::one();
        for c in self.terms.values() {
            num_gcd = num_gcd.gcd(&c.numer().abs());
            den_lcm = den_lcm.lcm(c.denom());
        }
        let mut content = BigRational::new(num_gcd, den_lcm);
        let lead_coeff = self.terms.iter().next_back().unwrap().1;
        if lead_coeff.is_negative() {
            content = -content;
        }
        let inv = content.recip();
        (content, self.scale(&inv))
    }
}

/// `c^q` when it folds to an exact rational, else `None`.
fn rational_pow(c: &BigRational, q: &BigRational) -> Option<BigRational> {
    if q.is_zero() {
        return Some(BigRational::one());
    }
    if c.is_zero() {
        return if q.is_positive() {
            Some(BigRational::zero())
        } else {
            None
        };
    }
    if q.is_integer() {
        let n = q.to_integer();
        let absn = n.abs().to_u32()?;
        let num = c.numer().pow(absn);
        let den = c.denom().pow(absn);
        let v = BigRational::new(num, den);
        return Some(if n.is_negative() { v.recip() } else { v });
    }
    if c.is_negative() {
        return None;
    }
    // exact t-th roots of numerator and denominator, if they exist
    let t = q.denom().to_u32()?;
    let root = |x: &BigInt| -> Option<BigInt> {
        let r = x.nth_root(t);
        if &r.pow(t) == x {
            Some(r)
        } else {
            None
        }
    };
    let rn = root(c.numer())?;
    let rd = root(c.denom())?;
    let s = q.numer().to_i64()?;
    let base = BigRational::new(rn, rd);
    rational_pow(&base, &br_int(s))
}

/// Raise a single monomial `c·Πa_i^{e_i}` to a non-integer (or −1) power.
/// Built as a product of per-factor results so duplicate atoms and Pow
/// expansions are merged by the ordinary multiplication rules.
fn monomial_pow(m: &Monomial, c: &BigRational, q: &BigRational) -> Result<Poly, Error> {
    let mut out = if let Some(v) = rational_pow(c, q) {
        Poly::constant(v)
    } else if c.is_one() {
        Poly::one()
    } else {
        Poly::from_monomial(
            Monomial::atom(Atom::Pow(Poly::constant(c.clone())), q.clone()),
            BigRational::one(),
        )
    };
    for (a, e) in &m.factors {
        let combined = e * q;
        let collapse_sound = match a {
            // exp and cosh are strictly positive everywhere
            Atom::Fun(NormFn::Exp, _) | Atom::Fun(NormFn::Cosh, _) => true,
            _ => q.is_integer() || !e.is_integer() || is_odd_integer(e),
        };
        let factor = if combined.is_zero() {
            Poly::one()
        } else if collapse_sound {
            match a {
                Atom::Pow(inner) if is_positive_integer(&combined) => {
                    inner.pow_int(combined.to_integer().to_u32().unwrap_or(u32::MAX))
                }
                _ => Poly::from_monomial(Monomial::atom(a.clone(), combined), BigRational::one()),
            }
        } else {
            // keep (a^e) whole under the new exponent; sqrt(x^2) is |x|
            let base =
                Poly::from_monomial(Monomial::atom(a.clone(), e.clone()), BigRational::one());
            Poly::from_monomial(Monomial::atom(Atom::Pow(base), q.clone()), BigRational::one())
        };
        out = out.mul(&factor);
    }
    Ok(out)
}

/// Build a normalized function application, folding constants and
/// canonicalizing arguments: sign parity for the odd/even functions, full
/// content extraction for `exp` (where `exp(c·p) = exp(p)^c` holds for all
/// real arguments).
pub fn fun_atom(f: NormFn, arg: Poly) -> Poly {
    if let Some(c) = arg.as_constant() {
        if c.is_zero() {
            return match f {
                NormFn::Exp | NormFn::Cos | NormFn::Cosh => Poly::one(),
                NormFn::Sin | NormFn::Sinh => Poly::zero(),
                // ln 0 is a domain error numerically; keep it symbolic
                NormFn::Ln => Poly::from_monomial(
                    Monomial::atom(Atom::Fun(NormFn::Ln, arg), BigRational::one()),
                    BigRational::one(),
                ),
            };
        }
        if f == NormFn::Ln && c.is_one() {
            return Poly::zero();
        }
    }
    match f {
        NormFn::Exp => {
            let (content, prim) = arg.content_primitive();
            Poly::from_monomial(
                Monomial::atom(Atom::Fun(NormFn::Exp, prim), content),
                BigRational::one(),
            )
        }
        NormFn::Sin | NormFn::Sinh | NormFn::Cos | NormFn::Cosh => {
            let (content, prim) = arg.content_primitive();
            let (canon_arg, negate) = if content.is_negative() {
                (prim.scale(&-content), true)
            } else {
                (arg, false)
            };
            let atom = Poly::from_monomial(
                Monomial::atom(Atom::Fun(f, canon_arg), BigRational::one()),
                BigRational::one(),
            );
            match (f, negate) {
                (NormFn::Sin, true) | (NormFn::Sinh, true) => atom.neg(),
                _ => atom,
            }
        }
        NormFn::Ln => Poly::from_monomial(
            Monomial::atom(Atom::Fun(NormFn::Ln, arg), BigRational::one()),
            BigRational::one(),
        ),
    }
}

// ---------------------------------------------------------------------------
// division

/// Graded-lexicographic comparison on monomials with nonnegative integer
/// exponents; a proper monomial order (multiplicative and well-founded), so
/// the single-divisor division loop is conclusive. Earlier atoms in the
/// canonical atom order are more significant; absent atoms count as
/// exponent zero.
fn grlex(a: &Monomial, b: &Monomial) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    match a.total_degree().cmp(&b.total_degree()) {
        Ordering::Equal => {}
        other => return other,
    }
    let mut i = 0;
    let mut j = 0;
    loop {
        match (a.factors.get(i), b.factors.get(j)) {
            (None, None) => return Ordering::Equal,
            (Some(_), None) => return Ordering::Greater,
            (None, Some(_)) => return Ordering::Less,
            (Some((x, e)), Some((y, f))) => match x.cmp(y) {
                // `a` has a positive exponent on an earlier atom
                Ordering::Less => return Ordering::Greater,
                Ordering::Greater => return Ordering::Less,
                Ordering::Equal => match e.cmp(f) {
                    Ordering::Equal => {
                        i += 1;
                        j += 1;
                    }
                    other => return other,
                },
            },
        }
    }
}

impl Poly {
    fn leading_grlex(&self) -> Option<(&Monomial, &BigRational)> {
        self.terms.iter().max_by(|(m1, _), (m2, _)| grlex(m1, m2))
    }

    /// Attempt exact polynomial division, returning `None` when the quotient
    /// is not a polynomial (or the operands fall outside the ordinary
    /// polynomial ring). Division by a single monomial is exact in the
    /// Laurent sense and handled first.
    pub fn try_div_exact(&self, divisor: &Poly) -> Option<Poly> {
        if divisor.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Poly::zero());
        }
        if divisor.terms.len() == 1 {
            let (dm, dc) = divisor.terms.iter().next().unwrap();
            let dinv = dm.inverse_factors();
            let mut out = Poly::zero();
            for (m, c) in &self.terms {
                out = out.add(&Poly::mul_term_term(m, &(c / dc), &dinv, &BigRational::one()));
            }
            return Some(out);
        }
        let plain = |p: &Poly| p.terms.keys().all(|m| m.all_nonneg_integer_exponents());
        if !plain(self) || !plain(divisor) {
            return None;
        }
        let mut remainder = self.clone();
        let mut quotient = Poly::zero();
        let (dlm, dlc) = {
            let (m, c) = divisor.leading_grlex()?;
            (m.clone(), c.clone())
        };
        let mut steps = 0usize;
        while !remainder.is_zero() {
            steps += 1;
            if steps > 100_000 {
                return None;
            }
            let (rlm, rlc) = {
                let (m, c) = remainder.leading_grlex()?;
                (m.clone(), c.clone())
            };
            if !dlm.divides(&rlm) {
                return None;
            }
            let qterm = Poly::from_monomial(rlm.div_monomial(&dlm), &rlc / &dlc);
            quotient = quotient.add(&qterm);
            remainder = remainder.sub(&qterm.mul(divisor));
        }
        Some(quotient)
    }

    /// Exact division when possible, otherwise multiplication by the opaque
    /// inverse of the divisor.
    pub fn div(&self, divisor: &Poly) -> Result<Poly, Error> {
        if divisor.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if let Some(q) = self.try_div_exact(divisor) {
            return Ok(q);
        }
        let inv = divisor.invert()?;
        Ok(self.mul(&inv))
    }
}

impl Monomial {
    /// Exact quotient of plain monomials (divisibility already checked).
    fn div_monomial(&self, other: &Monomial) -> Monomial {
        let (m, expansions) = merge_factors(self, &other.inverse_factors());
        // plain monomials carry no Pow atoms, so no expansion can trigger
        assert!(expansions.is_empty());
        m
    }
}
