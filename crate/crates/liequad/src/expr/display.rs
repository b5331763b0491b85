use std::fmt;

use num::{One, Signed};

use super::canonical::{Base, Expr, Factor, Rat, Term};
use super::coords::CoordinateSystem;

/// Renders an expression in the input grammar (round-trips through `parse`).
pub struct ExprDisplay<'a> {
    expr: &'a Expr,
    coords: &'a CoordinateSystem,
}

impl Expr {
    pub fn display<'a>(&'a self, coords: &'a CoordinateSystem) -> ExprDisplay<'a> {
        ExprDisplay { expr: self, coords }
    }
}

fn write_rat(f: &mut fmt::Formatter<'_>, r: &Rat) -> fmt::Result {
    if r.is_integer() {
        write!(f, "{}", r.numer())
    } else {
        write!(f, "{}/{}", r.numer(), r.denom())
    }
}

fn write_base(f: &mut fmt::Formatter<'_>, b: &Base, cs: &CoordinateSystem) -> fmt::Result {
    match b {
        Base::Var(id) => write!(f, "{}", cs.name(*id)),
        Base::Fun(func, arg) => {
            write!(f, "{}(", func.name())?;
            write_expr(f, arg, cs)?;
            write!(f, ")")
        }
        Base::Num(r) => {
            if r.is_integer() && !r.is_negative() {
                write_rat(f, r)
            } else {
                write!(f, "(")?;
                write_rat(f, r)?;
                write!(f, ")")
            }
        }
        Base::Sum(s) => {
            write!(f, "(")?;
            write_expr(f, s, cs)?;
            write!(f, ")")
        }
    }
}

fn write_factor(f: &mut fmt::Formatter<'_>, fac: &Factor, cs: &CoordinateSystem) -> fmt::Result {
    if fac.exp.is_one() {
        return write_base(f, &fac.base, cs);
    }
    if fac.exp == Rat::new(1.into(), 2.into()) {
        write!(f, "sqrt(")?;
        match &fac.base {
            Base::Sum(s) => write_expr(f, s, cs)?,
            other => write_base(f, other, cs)?,
        }
        return write!(f, ")");
    }
    write_base(f, &fac.base, cs)?;
    if fac.exp.is_integer() && !fac.exp.is_negative() {
        write!(f, "^")?;
        write_rat(f, &fac.exp)
    } else {
        write!(f, "^(")?;
        write_rat(f, &fac.exp)?;
        write!(f, ")")
    }
}

fn write_term(f: &mut fmt::Formatter<'_>, t: &Term, cs: &CoordinateSystem) -> fmt::Result {
    let mag = t.coeff.abs();
    if t.factors.is_empty() {
        return write_rat(f, &mag);
    }
    let mut lead = false;
    if !mag.is_one() {
        write_rat(f, &mag)?;
        lead = true;
    }
    for fac in &t.factors {
        if lead {
            write!(f, "*")?;
        }
        write_factor(f, fac, cs)?;
        lead = true;
    }
    Ok(())
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr, cs: &CoordinateSystem) -> fmt::Result {
    if e.terms.is_empty() {
        return write!(f, "0");
    }
    for (i, t) in e.terms.iter().enumerate() {
        if i == 0 {
            if t.coeff.is_negative() {
                write!(f, "-")?;
            }
        } else if t.coeff.is_negative() {
            write!(f, " - ")?;
        } else {
            write!(f, " + ")?;
        }
        write_term(f, t, cs)?;
    }
    Ok(())
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self.expr, self.coords)
    }
}
