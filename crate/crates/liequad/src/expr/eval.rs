use num::ToPrimitive;
use thiserror::Error;

use super::canonical::{Base, Expr, Func, Rat};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum EvalErrorKind {
    DivisionByZero,
    LogOfNonPositive,
    EvenRootOfNegative,
    NonFinite,
    UnassignedVariable,
}

impl EvalErrorKind {
    fn describe(self) -> &'static str {
        match self {
            EvalErrorKind::DivisionByZero => "division by zero",
            EvalErrorKind::LogOfNonPositive => "logarithm of a non-positive value",
            EvalErrorKind::EvenRootOfNegative => "even root of a negative value",
            EvalErrorKind::NonFinite => "non-finite value",
            EvalErrorKind::UnassignedVariable => "variable without an assigned value",
        }
    }
}

/// Domain error during numeric evaluation, carrying the subexpression that
/// failed (canonical form, variables shown as their ids).
#[derive(Error, Debug, Clone, PartialEq)]
#[error("{} in `{subexpr:?}`", kind.describe())]
pub struct EvalError {
    pub kind: EvalErrorKind,
    pub subexpr: Expr,
}

fn err(kind: EvalErrorKind, at: &Expr) -> EvalError {
    EvalError { kind, subexpr: at.clone() }
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Fall back to a quotient of lossy halves for magnitudes outside the
        // direct conversion range.
        let n = r.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = r.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

/// Real power with rational exponent: negative bases are allowed only for
/// odd root orders, zero bases only for positive exponents.
fn pow_rat_f64(base: f64, exp: &Rat, at: &Expr) -> Result<f64, EvalError> {
    let p = exp.numer();
    let q = exp.denom();
    if base == 0.0 {
        return if exp > &Rat::from_integer(0.into()) {
            Ok(0.0)
        } else {
            Err(err(EvalErrorKind::DivisionByZero, at))
        };
    }
    if exp.is_integer() {
        let k = p.to_i64().ok_or_else(|| err(EvalErrorKind::NonFinite, at))?;
        return Ok(powi_checked(base, k));
    }
    let e = rat_to_f64(exp);
    if base > 0.0 {
        return Ok(base.powf(e));
    }
    // Negative base: real only when the root order is odd.
    let q_even = q.to_i64().map(|v| v % 2 == 0).unwrap_or(true);
    if q_even {
        return Err(err(EvalErrorKind::EvenRootOfNegative, at));
    }
    let p_odd = p.to_i64().map(|v| v % 2 != 0).unwrap_or(true);
    let mag = (-base).powf(e);
    Ok(if p_odd { -mag } else { mag })
}

fn powi_checked(base: f64, k: i64) -> f64 {
    if k.abs() <= i32::MAX as i64 {
        base.powi(k as i32)
    } else {
        base.powf(k as f64)
    }
}

impl Expr {
    /// Evaluates at a point indexed by coordinate id. Every free variable of
    /// the expression must have an entry in `point`.
    pub fn evaluate(&self, point: &[f64]) -> Result<f64, EvalError> {
        let mut total = 0.0;
        for t in &self.terms {
            let mut v = rat_to_f64(&t.coeff);
            for f in &t.factors {
                let b = match &f.base {
                    Base::Var(id) => *point
                        .get(*id)
                        .ok_or_else(|| err(EvalErrorKind::UnassignedVariable, self))?,
                    Base::Num(r) => rat_to_f64(r),
                    Base::Sum(s) => s.evaluate(point)?,
                    Base::Fun(g, u) => {
                        let a = u.evaluate(point)?;
                        match g {
                            Func::Sin => a.sin(),
                            Func::Cos => a.cos(),
                            Func::Exp => a.exp(),
                            Func::Atan => a.atan(),
                            Func::Ln => {
                                if a <= 0.0 {
                                    return Err(err(EvalErrorKind::LogOfNonPositive, u));
                                }
                                a.ln()
                            }
                        }
                    }
                };
                v *= pow_rat_f64(b, &f.exp, self)?;
            }
            total += v;
        }
        if total.is_finite() {
            Ok(total)
        } else {
            Err(err(EvalErrorKind::NonFinite, self))
        }
    }
}

/// Expression compiled to 64-bit floats for tight evaluation loops
/// (the numeric integrators). Domain checks match [`Expr::evaluate`].
#[derive(Clone, Debug)]
pub struct CompiledExpr {
    terms: Vec<CTerm>,
}

#[derive(Clone, Debug)]
struct CTerm {
    coeff: f64,
    factors: Vec<(CBase, CExp)>,
}

#[derive(Clone, Debug)]
enum CBase {
    Var(usize),
    Num(f64),
    Sum(CompiledExpr),
    Fun(Func, CompiledExpr),
}

#[derive(Clone, Copy, Debug)]
enum CExp {
    Int(i32),
    Real { value: f64, odd_root: bool, numer_odd: bool },
}

impl CompiledExpr {
    pub fn compile(e: &Expr) -> Self {
        let terms = e
            .terms
            .iter()
            .map(|t| CTerm {
                coeff: rat_to_f64(&t.coeff),
                factors: t
                    .factors
                    .iter()
                    .map(|f| {
                        let base = match &f.base {
                            Base::Var(id) => CBase::Var(*id),
                            Base::Num(r) => CBase::Num(rat_to_f64(r)),
                            Base::Sum(s) => CBase::Sum(CompiledExpr::compile(s)),
                            Base::Fun(g, u) => CBase::Fun(*g, CompiledExpr::compile(u)),
                        };
                        let exp = match f.exp.to_i64() {
                            Some(k) if f.exp.is_integer() && k.abs() <= i32::MAX as i64 => {
                                CExp::Int(k as i32)
                            }
                            _ => CExp::Real {
                                value: rat_to_f64(&f.exp),
                                odd_root: f
                                    .exp
                                    .denom()
                                    .to_i64()
                                    .map(|v| v % 2 != 0)
                                    .unwrap_or(false),
                                numer_odd: f
                                    .exp
                                    .numer()
                                    .to_i64()
                                    .map(|v| v % 2 != 0)
                                    .unwrap_or(true),
                            },
                        };
                        (base, exp)
                    })
                    .collect(),
            })
            .collect();
        CompiledExpr { terms }
    }

    /// Evaluates, returning `None` on any domain error or non-finite result.
    pub fn eval(&self, point: &[f64]) -> Option<f64> {
        let mut total = 0.0;
        for t in &self.terms {
            let mut v = t.coeff;
            for (base, exp) in &t.factors {
                let b = match base {
                    CBase::Var(id) => *point.get(*id)?,
                    CBase::Num(x) => *x,
                    CBase::Sum(s) => s.eval(point)?,
                    CBase::Fun(g, u) => {
                        let a = u.eval(point)?;
                        match g {
                            Func::Sin => a.sin(),
                            Func::Cos => a.cos(),
                            Func::Exp => a.exp(),
                            Func::Atan => a.atan(),
                            Func::Ln => {
                                if a <= 0.0 {
                                    return None;
                                }
                                a.ln()
                            }
                        }
                    }
                };
                let p = match exp {
                    CExp::Int(k) => {
                        if b == 0.0 && *k <= 0 {
                            return None;
                        }
                        b.powi(*k)
                    }
                    CExp::Real { value, odd_root, numer_odd } => {
                        if b == 0.0 {
                            if *value > 0.0 {
                                0.0
                            } else {
                                return None;
                            }
                        } else if b > 0.0 {
                            b.powf(*value)
                        } else if *odd_root {
                            let mag = (-b).powf(*value);
                            if *numer_odd {
                                -mag
                            } else {
                                mag
                            }
                        } else {
                            return None;
                        }
                    }
                };
                v *= p;
            }
            total += v;
        }
        total.is_finite().then_some(total)
    }
}
