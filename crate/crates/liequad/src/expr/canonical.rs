use std::collections::{BTreeMap, BTreeSet};
use std::ops::{Add, Div, Mul, Neg, Sub};

use num::{BigInt, BigRational, Integer, One, Signed, Zero};

use super::coords::VarId;

pub type Rat = BigRational;

/// Positive integer powers of sums are multiplied out up to this exponent;
/// larger powers stay as a single power factor.
const EXPAND_CAP: i64 = 64;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
    Atan,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Atan => "atan",
        }
    }
}

/// Atomic base of a power factor.
///
/// `Num` bases only carry rationals that could not be folded into the term
/// coefficient (fractional powers of non-perfect-power constants, and the
/// poison value 0 under a non-positive exponent). `Sum` bases hold canonical
/// expressions that cannot be split across the factor product, normalized so
/// their leading coefficient (or content, under fractional exponents) is 1.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Base {
    Var(VarId),
    Fun(Func, Expr),
    Num(Rat),
    Sum(Expr),
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Factor {
    pub base: Base,
    pub exp: Rat,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Term {
    pub coeff: Rat,
    pub factors: Vec<Factor>,
}

/// Exact symbolic expression in canonical form: a sum of distinct monomials
/// with nonzero rational coefficients, each monomial a sorted product of
/// power factors with distinct bases. Every constructor canonicalizes, so
/// structural equality decides equality of polynomial and rational-function
/// expressions over the atoms.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Expr {
    pub(crate) terms: Vec<Term>,
}

fn rat_int(r: &Rat) -> Option<i64> {
    if r.is_integer() {
        let n = r.numer();
        if let Some(v) = to_i64(n) {
            return Some(v);
        }
    }
    None
}

fn to_i64(n: &BigInt) -> Option<i64> {
    use num::ToPrimitive;
    n.to_i64()
}

fn rat_pow_i64(c: &Rat, k: i64) -> Rat {
    if k == 0 {
        return Rat::one();
    }
    let mut base = if k > 0 { c.clone() } else { c.recip() };
    let mut n = k.unsigned_abs();
    let mut acc = Rat::one();
    while n > 0 {
        if n & 1 == 1 {
            acc *= &base;
        }
        let sq = &base * &base;
        base = sq;
        n >>= 1;
    }
    acc
}

/// Exact q-th root of a positive rational, if both numerator and denominator
/// are perfect q-th powers.
fn exact_root(c: &Rat, q: u32) -> Option<Rat> {
    debug_assert!(c.is_positive());
    let rn = c.numer().nth_root(q);
    let rd = c.denom().nth_root(q);
    if num::pow::pow(rn.clone(), q as usize) == *c.numer()
        && num::pow::pow(rd.clone(), q as usize) == *c.denom()
    {
        Some(Rat::new(rn, rd))
    } else {
        None
    }
}

/// `c^(p/q)` for positive rational `c`: either an exact rational, or a
/// multiplier together with a leftover numeric power factor.
fn pow_coeff(c: &Rat, e: &Rat) -> (Rat, Option<Factor>) {
    debug_assert!(c.is_positive() && !e.is_integer());
    if c.is_one() {
        return (Rat::one(), None);
    }
    if let (Some(p), Some(q)) = (to_i64(e.numer()), to_i64(e.denom())) {
        if q > 0 && q <= u32::MAX as i64 {
            if let Some(root) = exact_root(c, q as u32) {
                return (rat_pow_i64(&root, p), None);
            }
        }
    }
    (Rat::one(), Some(Factor { base: Base::Num(c.clone()), exp: e.clone() }))
}

/// Accumulator that collects terms by monomial and drops cancelled ones.
#[derive(Default)]
pub(crate) struct TermMap {
    map: BTreeMap<Vec<Factor>, Rat>,
}

impl TermMap {
    pub fn push(&mut self, t: Term) {
        if t.coeff.is_zero() {
            return;
        }
        let entry = self.map.entry(t.factors).or_insert_with(Rat::zero);
        *entry += t.coeff;
        // Leaving exact zeros in the map would re-materialize as terms.
        if entry.is_zero() {
            // Re-borrow to remove; key reconstruction is avoided by retain.
            self.map.retain(|_, c| !c.is_zero());
        }
    }

    pub fn absorb(&mut self, e: Expr) {
        for t in e.terms {
            self.push(t);
        }
    }

    pub fn into_expr(self) -> Expr {
        let terms = self
            .map
            .into_iter()
            .map(|(factors, coeff)| Term { coeff, factors })
            .collect();
        Expr { terms }
    }
}

/// Multiplies out the factor list of a single monomial, folding numeric
/// powers, merging equal bases, rewriting even cosine powers through
/// `cos^2 = 1 - sin^2`, and expanding integral powers of sums. The result is
/// a full expression because those rewrites can produce sums.
fn build_term(coeff: Rat, factors: Vec<Factor>) -> Expr {
    if coeff.is_zero() {
        return Expr::zero();
    }
    let mut c = coeff;
    let mut map: BTreeMap<Base, Rat> = BTreeMap::new();
    let mut pending: Vec<Expr> = Vec::new();
    for f in factors {
        if f.exp.is_zero() {
            continue;
        }
        if let Base::Num(r) = &f.base {
            if r.is_one() {
                continue;
            }
        }
        let entry = map.entry(f.base).or_insert_with(Rat::zero);
        *entry += f.exp;
    }
    map.retain(|_, e| !e.is_zero());
    // All exponential factors combine into one: exp(a)^r exp(b)^s = exp(ra+sb).
    // Routing the merged factor through `fun` keeps exp(ln u) collapsing.
    let exp_parts: Vec<(Expr, Rat)> = map
        .iter()
        .filter_map(|(b, e)| match b {
            Base::Fun(Func::Exp, u) => Some((u.clone(), e.clone())),
            _ => None,
        })
        .collect();
    if exp_parts.len() > 1 || exp_parts.iter().any(|(_, e)| !e.is_one()) {
        let mut arg = Expr::zero();
        for (u, e) in &exp_parts {
            map.remove(&Base::Fun(Func::Exp, u.clone()));
            arg = arg.add_ref(&u.mul_ref(&Expr::num(e.clone())));
        }
        if !arg.is_zero_expr() {
            pending.push(Expr::fun(Func::Exp, arg));
        }
    }
    loop {
        let mut action: Option<(Base, Rat)> = None;
        for (b, e) in &map {
            match b {
                Base::Num(r) => {
                    if rat_int(e).is_some() && !r.is_zero() {
                        action = Some((b.clone(), e.clone()));
                        break;
                    }
                    if !e.is_integer() && r.is_positive() && !r.is_one() {
                        // Only rewrite when an exact root exists; otherwise the
                        // factor is already canonical.
                        if let (_, None) = pow_coeff(r, e) {
                            action = Some((b.clone(), e.clone()));
                            break;
                        }
                    }
                }
                Base::Sum(_) => {
                    if let Some(k) = rat_int(e) {
                        if k >= 1 && k <= EXPAND_CAP {
                            action = Some((b.clone(), e.clone()));
                            break;
                        }
                    }
                }
                Base::Fun(Func::Cos, _) => {
                    if let Some(k) = rat_int(e) {
                        if k >= 2 {
                            action = Some((b.clone(), e.clone()));
                            break;
                        }
                    }
                }
                _ => {}
            }
        }
        let Some((b, e)) = action else { break };
        map.remove(&b);
        match b {
            Base::Num(r) => {
                if let Some(k) = rat_int(&e) {
                    c *= rat_pow_i64(&r, k);
                } else {
                    let (mult, leftover) = pow_coeff(&r, &e);
                    c *= mult;
                    debug_assert!(leftover.is_none());
                }
            }
            Base::Sum(s) => {
                let k = rat_int(&e).unwrap();
                pending.push(pow_int_expand(&s, k as u64));
            }
            Base::Fun(Func::Cos, u) => {
                let k = rat_int(&e).unwrap();
                if k % 2 == 1 {
                    let entry = map.entry(Base::Fun(Func::Cos, u.clone())).or_insert_with(Rat::zero);
                    *entry += Rat::one();
                    map.retain(|_, x| !x.is_zero());
                }
                let one_minus_sin2 =
                    Expr::one().sub_ref(&Expr::fun(Func::Sin, u).pow_rat(&Rat::from_integer(2.into())));
                pending.push(pow_int_expand(&one_minus_sin2, (k / 2) as u64));
            }
            _ => unreachable!(),
        }
    }
    if c.is_zero() {
        return Expr::zero();
    }
    let factors: Vec<Factor> = map
        .into_iter()
        .map(|(base, exp)| Factor { base, exp })
        .collect();
    let mut out = Expr { terms: vec![Term { coeff: c, factors }] };
    for p in pending {
        out = out.mul_ref(&p);
    }
    out
}

fn pow_int_expand(s: &Expr, k: u64) -> Expr {
    let mut acc = Expr::one();
    let mut base = s.clone();
    let mut n = k;
    while n > 0 {
        if n & 1 == 1 {
            acc = acc.mul_ref(&base);
        }
        n >>= 1;
        if n > 0 {
            base = base.mul_ref(&base);
        }
    }
    acc
}

impl Expr {
    pub fn zero() -> Self {
        Expr { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Expr::from_int(1)
    }

    pub fn from_int(n: i64) -> Self {
        Expr::num(Rat::from_integer(n.into()))
    }

    pub fn num(r: Rat) -> Self {
        if r.is_zero() {
            Expr::zero()
        } else {
            Expr { terms: vec![Term { coeff: r, factors: Vec::new() }] }
        }
    }

    pub fn rational(num: i64, den: i64) -> Self {
        Expr::num(Rat::new(num.into(), den.into()))
    }

    pub fn var(id: VarId) -> Self {
        Expr {
            terms: vec![Term {
                coeff: Rat::one(),
                factors: vec![Factor { base: Base::Var(id), exp: Rat::one() }],
            }],
        }
    }

    pub fn fun(f: Func, arg: Expr) -> Self {
        if let Some(r) = arg.as_rational() {
            if r.is_zero() {
                match f {
                    Func::Sin | Func::Atan => return Expr::zero(),
                    Func::Cos | Func::Exp => return Expr::one(),
                    Func::Ln => {}
                }
            }
            if r.is_one() && f == Func::Ln {
                return Expr::zero();
            }
        }
        // exp(ln u) -> u and ln(exp u) -> u for a bare composition.
        if let Some((inner_f, u)) = arg.as_single_fun() {
            match (f, inner_f) {
                (Func::Exp, Func::Ln) | (Func::Ln, Func::Exp) => return u.clone(),
                _ => {}
            }
        }
        Expr {
            terms: vec![Term {
                coeff: Rat::one(),
                factors: vec![Factor { base: Base::Fun(f, arg), exp: Rat::one() }],
            }],
        }
    }

    /// The expression as a rational constant, if it is one.
    pub fn as_rational(&self) -> Option<Rat> {
        match self.terms.len() {
            0 => Some(Rat::zero()),
            1 if self.terms[0].factors.is_empty() => Some(self.terms[0].coeff.clone()),
            _ => None,
        }
    }

    /// `Some((f, arg))` when the expression is exactly `f(arg)`.
    fn as_single_fun(&self) -> Option<(Func, &Expr)> {
        if self.terms.len() == 1 {
            let t = &self.terms[0];
            if t.coeff.is_one() && t.factors.len() == 1 && t.factors[0].exp.is_one() {
                if let Base::Fun(f, u) = &t.factors[0].base {
                    return Some((*f, u));
                }
            }
        }
        None
    }

    pub fn is_zero_expr(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_ref(&self, o: &Expr) -> Expr {
        let mut acc = TermMap::default();
        acc.absorb(self.clone());
        acc.absorb(o.clone());
        acc.into_expr()
    }

    pub fn sum_of(items: &[Expr]) -> Expr {
        let mut acc = TermMap::default();
        for e in items {
            acc.absorb(e.clone());
        }
        acc.into_expr()
    }

    pub fn neg_ref(&self) -> Expr {
        Expr {
            terms: self
                .terms
                .iter()
                .map(|t| Term { coeff: -t.coeff.clone(), factors: t.factors.clone() })
                .collect(),
        }
    }

    pub fn sub_ref(&self, o: &Expr) -> Expr {
        self.add_ref(&o.neg_ref())
    }

    pub fn mul_ref(&self, o: &Expr) -> Expr {
        let mut acc = TermMap::default();
        for ta in &self.terms {
            for tb in &o.terms {
                let mut factors = ta.factors.clone();
                factors.extend(tb.factors.iter().cloned());
                acc.absorb(build_term(&ta.coeff * &tb.coeff, factors));
            }
        }
        acc.into_expr()
    }

    pub fn div_ref(&self, o: &Expr) -> Expr {
        self.mul_ref(&o.pow_rat(&-Rat::one()))
    }

    pub fn powi(&self, k: i64) -> Expr {
        self.pow_rat(&Rat::from_integer(k.into()))
    }

    pub fn sqrt(&self) -> Expr {
        self.pow_rat(&Rat::new(1.into(), 2.into()))
    }

    pub fn pow_rat(&self, e: &Rat) -> Expr {
        if e.is_zero() {
            return Expr::one();
        }
        if e.is_one() {
            return self.clone();
        }
        match self.terms.len() {
            0 => {
                if e.is_positive() {
                    Expr::zero()
                } else {
                    // 0 raised to a non-positive power: kept as a poison
                    // factor so evaluation reports the division by zero.
                    Expr {
                        terms: vec![Term {
                            coeff: Rat::one(),
                            factors: vec![Factor { base: Base::Num(Rat::zero()), exp: e.clone() }],
                        }],
                    }
                }
            }
            1 => {
                let t = &self.terms[0];
                if let Some(k) = rat_int(e) {
                    let coeff = rat_pow_i64(&t.coeff, k);
                    let factors = t
                        .factors
                        .iter()
                        .map(|f| Factor { base: f.base.clone(), exp: &f.exp * e })
                        .collect();
                    build_term(coeff, factors)
                } else {
                    let mut factors: Vec<Factor> = Vec::new();
                    let (mult, inner_coeff) = if t.coeff.is_positive() {
                        let (m, leftover) = pow_coeff(&t.coeff, e);
                        factors.extend(leftover);
                        (m, Rat::one())
                    } else {
                        let (m, leftover) = pow_coeff(&-t.coeff.clone(), e);
                        factors.extend(leftover);
                        (m, -Rat::one())
                    };
                    let single_plain = inner_coeff.is_one()
                        && t.factors.len() == 1
                        && t.factors[0].exp.is_one();
                    if single_plain {
                        factors.push(Factor { base: t.factors[0].base.clone(), exp: e.clone() });
                    } else if !(inner_coeff.is_one() && t.factors.is_empty()) {
                        let inner = Expr {
                            terms: vec![Term { coeff: inner_coeff, factors: t.factors.clone() }],
                        };
                        factors.push(Factor { base: Base::Sum(inner), exp: e.clone() });
                    }
                    build_term(mult, factors)
                }
            }
            _ => {
                if let Some(k) = rat_int(e) {
                    if k >= 1 && k <= EXPAND_CAP {
                        return pow_int_expand(self, k as u64);
                    }
                    // Scale so the leading coefficient is 1, which makes
                    // inverse powers of the same sum cancel structurally.
                    let lc = self.terms[0].coeff.clone();
                    let s = self.mul_ref(&Expr::num(lc.recip()));
                    build_term(
                        rat_pow_i64(&lc, k),
                        vec![Factor { base: Base::Sum(s), exp: e.clone() }],
                    )
                } else {
                    let content = self.content();
                    let s = self.mul_ref(&Expr::num(content.recip()));
                    let mut factors = Vec::new();
                    let (mult, leftover) = pow_coeff(&content, e);
                    factors.extend(leftover);
                    factors.push(Factor { base: Base::Sum(s), exp: e.clone() });
                    build_term(mult, factors)
                }
            }
        }
    }

    /// Positive gcd of the coefficient magnitudes.
    fn content(&self) -> Rat {
        let mut num_gcd = BigInt::zero();
        let mut den_lcm = BigInt::one();
        for t in &self.terms {
            num_gcd = num_gcd.gcd(&t.coeff.numer().abs());
            den_lcm = den_lcm.lcm(t.coeff.denom());
        }
        if num_gcd.is_zero() {
            Rat::one()
        } else {
            Rat::new(num_gcd, den_lcm)
        }
    }

    /// Replaces every variable through `subs`, rebuilding canonically. The
    /// replacement expressions live on whatever chart the caller intends.
    pub fn substitute(&self, subs: &dyn Fn(VarId) -> Expr) -> Expr {
        let mut acc = TermMap::default();
        for t in &self.terms {
            let mut prod = Expr::num(t.coeff.clone());
            for f in &t.factors {
                let replaced = match &f.base {
                    Base::Var(v) => subs(*v).pow_rat(&f.exp),
                    Base::Fun(g, u) => Expr::fun(*g, u.substitute(subs)).pow_rat(&f.exp),
                    Base::Num(r) => Expr {
                        terms: vec![Term {
                            coeff: Rat::one(),
                            factors: vec![Factor { base: Base::Num(r.clone()), exp: f.exp.clone() }],
                        }],
                    },
                    Base::Sum(s) => s.substitute(subs).pow_rat(&f.exp),
                };
                prod = prod.mul_ref(&replaced);
            }
            acc.absorb(prod);
        }
        acc.into_expr()
    }

    pub fn free_vars(&self) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<VarId>) {
        for t in &self.terms {
            for f in &t.factors {
                match &f.base {
                    Base::Var(v) => {
                        out.insert(*v);
                    }
                    Base::Fun(_, u) => u.collect_vars(out),
                    Base::Sum(s) => s.collect_vars(out),
                    Base::Num(_) => {}
                }
            }
        }
    }

    /// Number of monomials in the canonical sum.
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $imp:ident) => {
        impl $trait for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                self.$imp(rhs)
            }
        }
        impl $trait for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                self.$imp(&rhs)
            }
        }
        impl $trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                self.$imp(rhs)
            }
        }
    };
}

binop!(Add, add, add_ref);
binop!(Sub, sub, sub_ref);
binop!(Mul, mul, mul_ref);
binop!(Div, div, div_ref);

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        self.neg_ref()
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        self.neg_ref()
    }
}
