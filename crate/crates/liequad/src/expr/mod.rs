//! Exact symbolic expressions over a named coordinate chart.
//!
//! Expressions are held in a canonical sum-of-monomials form with exact
//! rational coefficients; every constructor canonicalizes on the way in, so
//! structural equality decides equality for the polynomial and
//! rational-function fragment. Anything the canonical form cannot decide is
//! answered three-valued by [`Expr::zero_test`]. Floating point appears only
//! at evaluation.

mod canonical;
mod coords;
mod diff;
mod display;
mod eval;
mod parse;
mod zero;

pub use canonical::{Expr, Func, Rat};
pub use coords::{CoordRole, Coordinate, CoordinateSystem, DuplicateCoordinate, VarId};
pub use display::ExprDisplay;
pub use eval::{rat_to_f64, CompiledExpr, EvalError, EvalErrorKind};
pub use parse::{parse, ParseError, ParseErrorKind};
pub use zero::Tri;

/// Best rational approximation with bounded denominator, by continued
/// fractions. Used to snap numerically recovered constants to exact values.
pub fn rationalize(x: f64, max_denominator: u64) -> Rat {
    use num::{BigInt, One, Zero};
    if !x.is_finite() {
        return Rat::zero();
    }
    let negative = x < 0.0;
    let mut a = x.abs();
    let limit = BigInt::from(max_denominator);
    // Convergents p/q of the continued fraction of |x|.
    let (mut p0, mut q0) = (BigInt::one(), BigInt::zero());
    let (mut p1, mut q1) = (BigInt::from(a.floor() as i64), BigInt::one());
    a -= a.floor();
    for _ in 0..64 {
        if a.abs() < 1e-15 {
            break;
        }
        a = 1.0 / a;
        let digit = a.floor();
        if !digit.is_finite() || digit > 1e18 {
            break;
        }
        a -= digit;
        let d = BigInt::from(digit as i64);
        let p2 = &d * &p1 + &p0;
        let q2 = &d * &q1 + &q0;
        if q2 > limit {
            break;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
    }
    let r = Rat::new(p1, q1.max(BigInt::one()));
    if negative {
        -r
    } else {
        r
    }
}

/// Exact conversion of an `f64` into a rational (every finite float is one).
pub fn rat_from_f64(x: f64) -> Option<Rat> {
    Rat::from_float(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::One;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn chart2() -> CoordinateSystem {
        CoordinateSystem::auxiliary(&["q1", "p1"]).unwrap()
    }

    fn p(src: &str) -> Expr {
        parse(src, &chart2()).unwrap()
    }

    #[test]
    fn collects_and_cancels() {
        assert_eq!(p("q1 + q1"), p("2*q1"));
        assert_eq!(p("q1 - q1"), Expr::zero());
        assert_eq!(p("q1*p1 - p1*q1"), Expr::zero());
        assert_eq!(p("(q1 + p1)^2"), p("q1^2 + 2*q1*p1 + p1^2"));
        assert_eq!(p("2*q1*3*p1"), p("6*q1*p1"));
    }

    #[test]
    fn power_laws() {
        assert_eq!(p("q1^2*q1^3"), p("q1^5"));
        assert_eq!(p("q1^2/q1"), p("q1"));
        assert_eq!(p("q1^0"), Expr::one());
        assert_eq!(p("(q1^2)^3"), p("q1^6"));
        assert_eq!(p("sqrt(q1)*sqrt(q1)"), p("q1"));
        // sqrt(q1^2) must not collapse to q1.
        assert_ne!(p("sqrt(q1^2)"), p("q1"));
    }

    #[test]
    fn rational_constants_fold() {
        assert_eq!(p("1/2 + 1/3"), Expr::rational(5, 6));
        assert_eq!(p("0.5"), Expr::rational(1, 2));
        assert_eq!(p("2^3"), Expr::from_int(8));
        assert_eq!(p("4^0.5"), Expr::from_int(2));
        assert_eq!(p("2/4"), Expr::rational(1, 2));
    }

    #[test]
    fn pythagorean_identity_cancels() {
        let e = p("sin(q1)^2 + cos(q1)^2 - 1");
        assert_eq!(e, Expr::zero());
        let e2 = p("cos(q1)^3") - p("cos(q1)") + p("cos(q1)*sin(q1)^2");
        assert_eq!(e2, Expr::zero());
    }

    #[test]
    fn exp_ln_inverse() {
        assert_eq!(p("exp(ln(q1))"), p("q1"));
        assert_eq!(p("ln(exp(q1))"), p("q1"));
        assert_eq!(p("exp(0)"), Expr::one());
        assert_eq!(p("ln(1)"), Expr::zero());
    }

    #[test]
    fn rational_function_zero_via_denominator_clearing() {
        let e = p("(q1^2 - p1^2)/(q1 + p1) - q1 + p1");
        assert_eq!(e.zero_test(), Tri::Zero);
        let f = p("1/q1 + 1/p1 - (q1 + p1)/(q1*p1)");
        assert_eq!(f.zero_test(), Tri::Zero);
    }

    #[test]
    fn zero_test_three_values() {
        assert_eq!(p("q1 - q1").zero_test(), Tri::Zero);
        assert_eq!(p("q1*p1 + 1").zero_test(), Tri::NonZero);
        // True identity the canonical form cannot see: sampled values stay
        // tiny, so the honest answer is Unknown.
        let e = p("sin(2*q1) - 2*sin(q1)*cos(q1)");
        assert_eq!(e.zero_test(), Tri::Unknown);
    }

    #[test]
    fn derivative_basics() {
        let cs = chart2();
        let q = cs.index_of("q1").unwrap();
        let pv = cs.index_of("p1").unwrap();
        assert_eq!(p("q1^3").diff(q), p("3*q1^2"));
        assert_eq!(p("q1*p1").diff(q), p("p1"));
        assert_eq!(p("sin(q1^2)").diff(q), p("2*q1*cos(q1^2)"));
        assert_eq!(p("ln(q1)").diff(q), p("1/q1"));
        assert_eq!(p("exp(2*p1)").diff(pv), p("2*exp(2*p1)"));
        assert_eq!(p("atan(q1)").diff(q), p("1/(1 + q1^2)"));
        assert_eq!(p("1/q1").diff(q), p("-1/q1^2"));
        // Mixed partials commute.
        let e = p("q1^2*sin(p1) + exp(q1*p1)");
        assert_eq!(e.diff(q).diff(pv), e.diff(pv).diff(q));
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let exprs = [
            p("q1^3*p1 - 2*q1*p1^2 + 1/2*p1"),
            p("sin(q1)*cos(p1) + exp(q1/2)"),
            p("q1^2/(1 + p1^2)"),
        ];
        let h = 1e-5;
        for e in &exprs {
            for var in 0..2 {
                let de = e.diff(var);
                for _ in 0..20 {
                    let x: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.5..1.5)).collect();
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[var] += h;
                    xm[var] -= h;
                    let fd = (e.evaluate(&xp).unwrap() - e.evaluate(&xm).unwrap()) / (2.0 * h);
                    let sym = de.evaluate(&x).unwrap();
                    assert!(
                        (fd - sym).abs() <= 1e-5 * (1.0 + sym.abs()),
                        "fd {fd} vs sym {sym}"
                    );
                }
            }
        }
    }

    #[test]
    fn evaluation_consistent_under_arithmetic() {
        // Building the same function two ways gives the same canonical form,
        // and evaluation agrees to relative 1e-12 with a direct computation.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let e = p("(q1 + p1)^3 - (q1 - p1)^3");
        for _ in 0..50 {
            let x: [f64; 2] = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let direct = (x[0] + x[1]).powi(3) - (x[0] - x[1]).powi(3);
            let got = e.evaluate(&x).unwrap();
            assert!((got - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn evaluation_domain_errors() {
        assert_eq!(
            p("ln(q1)").evaluate(&[-1.0, 0.0]).unwrap_err().kind,
            EvalErrorKind::LogOfNonPositive
        );
        assert_eq!(
            p("sqrt(q1)").evaluate(&[-1.0, 0.0]).unwrap_err().kind,
            EvalErrorKind::EvenRootOfNegative
        );
        assert_eq!(
            p("1/q1").evaluate(&[0.0, 0.0]).unwrap_err().kind,
            EvalErrorKind::DivisionByZero
        );
        // Odd roots of negative values are real.
        let e = p("q1^(1/3)");
        assert!((e.evaluate(&[-8.0, 0.0]).unwrap() + 2.0).abs() < 1e-12);
    }

    #[test]
    fn parse_errors_carry_position() {
        let cs = chart2();
        let err = parse("q1 + + p1", &cs).unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Syntax(_)));
        assert_eq!(err.position, 5);
        let err = parse("q1 + q3", &cs).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownIdentifier("q3".into()));
        assert_eq!(err.position, 5);
        let err = parse("q1^p1", &cs).unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Syntax(_)));
    }

    #[test]
    fn parse_precedence_and_associativity() {
        assert_eq!(p("q1 + p1*q1^2"), p("q1 + (p1*(q1^2))"));
        assert_eq!(p("-q1^2"), -p("q1^2"));
        assert_eq!(p("q1^-2"), p("1/q1^2"));
        assert_eq!(p("2^3^2"), Expr::from_int(512));
        assert_eq!(p("q1^(3/2)"), p("q1*sqrt(q1)"));
        assert_eq!(p("p1^2/2"), p("1/2*p1^2"));
    }

    #[test]
    fn display_round_trips() {
        let cs = chart2();
        let samples = [
            "q1^2 - 2*q1*p1 + 1/3",
            "sin(q1)*cos(p1) - exp(q1*p1)",
            "sqrt(q1) + q1^(-2) + atan(p1)",
            "(q1 + p1)^(1/2)",
            "1/(q1 + p1)",
            "0",
        ];
        for s in samples {
            let e = parse(s, &cs).unwrap();
            let shown = e.display(&cs).to_string();
            let back = parse(&shown, &cs)
                .unwrap_or_else(|err| panic!("reparse of `{shown}` failed: {err}"));
            assert_eq!(back, e, "display `{shown}` did not round-trip");
        }
    }

    #[test]
    fn substitute_rebuilds_canonically() {
        let cs = chart2();
        let e = p("q1^2 + p1");
        let subbed = e.substitute(&|v| {
            if v == cs.index_of("q1").unwrap() {
                p("p1 + 1")
            } else {
                Expr::var(v)
            }
        });
        assert_eq!(subbed, p("p1^2 + 3*p1 + 1"));
    }

    #[test]
    fn rationalize_snaps_near_rationals() {
        assert_eq!(rationalize(0.499999999998, 1_000_000), Rat::new(1.into(), 2.into()));
        assert_eq!(rationalize(-2.0000000000004, 1_000_000), Rat::from_integer((-2).into()));
        assert_eq!(rationalize(0.0, 1_000_000), Rat::from_integer(0.into()));
        let third = rationalize(1.0 / 3.0, 1_000_000);
        assert_eq!(third, Rat::new(1.into(), 3.into()));
    }

    #[test]
    fn compiled_eval_matches_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let e = p("q1^3*p1 - sin(q1)*exp(p1/2) + 1/(1 + q1^2)");
        let c = CompiledExpr::compile(&e);
        for _ in 0..50 {
            let x = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let a = e.evaluate(&x).unwrap();
            let b = c.eval(&x).unwrap();
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn one_is_one() {
        assert!(Expr::one().as_rational().unwrap().is_one());
    }
}
