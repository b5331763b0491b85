use num::{One, Zero};

use super::canonical::{Base, Expr, Factor, Func, Rat, Term};
use super::coords::VarId;

impl Expr {
    /// Exact partial derivative with respect to coordinate `v`.
    pub fn diff(&self, v: VarId) -> Expr {
        let mut acc = Expr::zero();
        for t in &self.terms {
            acc = acc.add_ref(&diff_term(t, v));
        }
        acc
    }
}

fn diff_term(t: &Term, v: VarId) -> Expr {
    let mut out = Expr::zero();
    for (i, f) in t.factors.iter().enumerate() {
        let db = diff_base(&f.base, v);
        if db.is_zero_expr() {
            continue;
        }
        // d(b^e) = e * b^(e-1) * db, times the untouched cofactors.
        let mut factors: Vec<Factor> = Vec::with_capacity(t.factors.len());
        for (j, g) in t.factors.iter().enumerate() {
            if i == j {
                let lowered = &f.exp - Rat::one();
                if !lowered.is_zero() {
                    factors.push(Factor { base: f.base.clone(), exp: lowered });
                }
            } else {
                factors.push(g.clone());
            }
        }
        let coeff = &t.coeff * &f.exp;
        let stem = Expr { terms: vec![Term { coeff, factors: Vec::new() }] };
        let cof = Expr { terms: vec![Term { coeff: Rat::one(), factors } ] };
        // Rebuild through the constructors so the result is canonical.
        let piece = stem.mul_ref(&cof).mul_ref(&db);
        out = out.add_ref(&piece);
    }
    out
}

fn diff_base(b: &Base, v: VarId) -> Expr {
    match b {
        Base::Var(u) => {
            if *u == v {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Base::Num(_) => Expr::zero(),
        Base::Sum(s) => s.diff(v),
        Base::Fun(f, u) => {
            let du = u.diff(v);
            if du.is_zero_expr() {
                return Expr::zero();
            }
            let outer = match f {
                Func::Sin => Expr::fun(Func::Cos, u.clone()),
                Func::Cos => Expr::fun(Func::Sin, u.clone()).neg_ref(),
                Func::Exp => Expr::fun(Func::Exp, u.clone()),
                Func::Ln => u.powi(-1),
                Func::Atan => (Expr::one().add_ref(&u.powi(2))).powi(-1),
            };
            outer.mul_ref(&du)
        }
    }
}
