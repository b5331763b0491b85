//! Brackets of functions on each phase-space kind, computed by two
//! independent routes (Darboux-coordinate formula and Hamiltonian vector
//! fields), plus the evolution derivative along the dynamics.

use crate::expr::{Expr, Tri};
use crate::geometry::{GeometryKind, HamiltonianSystem, PhaseGeometry, ScalarField};

/// Bracket in Darboux coordinates.
///
/// All kinds share `sum_i df/dq_i dh/dp_i - df/dp_i dh/dq_i`; contact and
/// cocontact add `df/dz (p_i dh/dp_i - h) - dh/dz (p_i df/dp_i - f)`.
pub fn coordinate_bracket(g: &PhaseGeometry, f: &Expr, h: &Expr) -> Expr {
    let n = g.degrees();
    let mut out = Expr::zero();
    for i in 1..=n {
        out = out + f.diff(g.q(i)) * h.diff(g.p(i)) - f.diff(g.p(i)) * h.diff(g.q(i));
    }
    if g.kind().has_contact_coordinate() {
        let z = g.z().expect("contact kinds have z");
        let fz = f.diff(z);
        let hz = h.diff(z);
        if !(fz.is_zero_expr() && hz.is_zero_expr()) {
            let mut pf = -f.clone();
            let mut ph = -h.clone();
            for i in 1..=n {
                let p = Expr::var(g.p(i));
                pf = pf + p.clone() * f.diff(g.p(i));
                ph = ph + p * h.diff(g.p(i));
            }
            out = out + fz * ph - hz * pf;
        }
    }
    out
}

/// Bracket through Hamiltonian vector fields: `X_h f` for symplectic and
/// cosymplectic, `X_h f + f * dh/dz` for contact and cocontact.
///
/// Used as an independent cross-check of [`coordinate_bracket`].
pub fn intrinsic_bracket(g: &PhaseGeometry, f: &Expr, h: &Expr) -> Expr {
    let hf = ScalarField::new(g.chart().clone(), h.clone());
    let xh = crate::geometry::hamiltonian_vector_field(g, &hf).expect("chart is the geometry's");
    let mut out = xh.apply(f);
    if g.kind().has_contact_coordinate() {
        let z = g.z().expect("contact kinds have z");
        out = out + f.clone() * h.diff(z);
    }
    out
}

/// `{{f,h},k} + {{h,k},f} + {{k,f},h}`; identically zero when the bracket
/// satisfies the Jacobi identity.
pub fn jacobi_defect(g: &PhaseGeometry, f: &Expr, h: &Expr, k: &Expr) -> Expr {
    coordinate_bracket(g, &coordinate_bracket(g, f, h), k)
        + coordinate_bracket(g, &coordinate_bracket(g, h, k), f)
        + coordinate_bracket(g, &coordinate_bracket(g, k, f), h)
}

/// `{f, a*b} - {f,a}*b - a*{f,b}`; zero on symplectic and cosymplectic
/// spaces, generically nonzero on contact and cocontact ones (the bracket
/// there is only a Jacobi bracket, not a Poisson one).
pub fn leibniz_defect(g: &PhaseGeometry, f: &Expr, a: &Expr, b: &Expr) -> Expr {
    coordinate_bracket(g, f, &(a.clone() * b.clone()))
        - coordinate_bracket(g, f, a) * b.clone()
        - a.clone() * coordinate_bracket(g, f, b)
}

/// Derivative of `f` along the dynamics of the system: `{f,H}` for
/// symplectic, `{f,H} + df/dt` for cosymplectic, `{f,H} - f dH/dz` for
/// contact, and `{f,H} - f dH/dz + df/dt` for cocontact.
pub fn evolution_derivative(sys: &HamiltonianSystem, f: &Expr) -> Expr {
    let g = &sys.geometry;
    let h = &sys.hamiltonian.expr;
    let mut out = coordinate_bracket(g, f, h);
    match g.kind() {
        GeometryKind::Symplectic => {}
        GeometryKind::Cosymplectic => {
            out = out + f.diff(g.t().expect("cosymplectic has t"));
        }
        GeometryKind::Contact => {
            out = out - f.clone() * h.diff(g.z().expect("contact has z"));
        }
        GeometryKind::Cocontact => {
            out = out - f.clone() * h.diff(g.z().expect("cocontact has z"))
                + f.diff(g.t().expect("cocontact has t"));
        }
    }
    out
}

/// Three-valued test of whether `f` is conserved along the dynamics.
pub fn is_constant_of_motion(sys: &HamiltonianSystem, f: &Expr) -> Tri {
    evolution_derivative(sys, f).zero_test()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::geometry::{dynamics_field, PhaseGeometry};

    fn geo(kind: GeometryKind, n: usize) -> PhaseGeometry {
        PhaseGeometry::new(kind, n).unwrap()
    }

    #[test]
    fn canonical_pairs_symplectic() {
        let g = geo(GeometryKind::Symplectic, 2);
        let chart = g.chart();
        let q1 = parse("q1", chart).unwrap();
        let q2 = parse("q2", chart).unwrap();
        let p1 = parse("p1", chart).unwrap();
        let p2 = parse("p2", chart).unwrap();
        assert_eq!(coordinate_bracket(&g, &q1, &p1), Expr::one());
        assert_eq!(coordinate_bracket(&g, &q1, &p2), Expr::zero());
        assert_eq!(coordinate_bracket(&g, &q1, &q2), Expr::zero());
        assert_eq!(coordinate_bracket(&g, &p1, &p2), Expr::zero());
        assert_eq!(coordinate_bracket(&g, &p1, &q1), Expr::from_int(-1));
    }

    #[test]
    fn contact_brackets_with_z() {
        let g = geo(GeometryKind::Contact, 1);
        let chart = g.chart();
        let q1 = parse("q1", chart).unwrap();
        let p1 = parse("p1", chart).unwrap();
        let z = parse("z", chart).unwrap();
        assert_eq!(coordinate_bracket(&g, &q1, &z), q1);
        assert_eq!(coordinate_bracket(&g, &p1, &z), Expr::zero());
        assert_eq!(coordinate_bracket(&g, &q1, &p1), Expr::one());
    }

    #[test]
    fn routes_agree_beyond_polynomials() {
        let cases = [
            (GeometryKind::Symplectic, vec!["sin(q1)*p1 + q2^2", "exp(p2) + q1*p1"]),
            (GeometryKind::Cosymplectic, vec!["t*q1 + p1^2", "cos(t)*p1 + q1"]),
            (GeometryKind::Contact, vec!["exp(z) + p1*q1", "p1^2/2 + z*q1"]),
            (GeometryKind::Cocontact, vec!["t*p1 + z^2", "sin(q1) + z*p1 + t"]),
        ];
        for (kind, exprs) in cases {
            let g = geo(kind, 2);
            let f = parse(exprs[0], g.chart()).unwrap();
            let h = parse(exprs[1], g.chart()).unwrap();
            let diff = coordinate_bracket(&g, &f, &h) - intrinsic_bracket(&g, &f, &h);
            assert_eq!(diff.zero_test(), Tri::Zero, "kind {:?}", kind);
        }
    }

    #[test]
    fn antisymmetry_and_jacobi_hold() {
        for kind in [
            GeometryKind::Symplectic,
            GeometryKind::Cosymplectic,
            GeometryKind::Contact,
            GeometryKind::Cocontact,
        ] {
            let g = geo(kind, 1);
            let chart = g.chart();
            let f = parse("q1^2*p1", chart).unwrap();
            let h = parse("p1^2 + q1", chart).unwrap();
            let k = match kind {
                GeometryKind::Symplectic => parse("q1*p1", chart).unwrap(),
                GeometryKind::Cosymplectic => parse("t*q1 + p1", chart).unwrap(),
                _ => parse("z + q1*p1", chart).unwrap(),
            };
            let anti = coordinate_bracket(&g, &f, &h) + coordinate_bracket(&g, &h, &f);
            assert_eq!(anti.zero_test(), Tri::Zero, "antisymmetry {:?}", kind);
            assert_eq!(
                jacobi_defect(&g, &f, &h, &k).zero_test(),
                Tri::Zero,
                "jacobi {:?}",
                kind
            );
        }
    }

    #[test]
    fn leibniz_fails_on_contact() {
        let g = geo(GeometryKind::Contact, 1);
        let chart = g.chart();
        let z = parse("z", chart).unwrap();
        let q1 = parse("q1", chart).unwrap();
        let defect = leibniz_defect(&g, &z, &q1, &q1);
        assert_eq!(defect, parse("q1^2", chart).unwrap());
        assert_eq!(defect.zero_test(), Tri::NonZero);
    }

    #[test]
    fn leibniz_holds_on_symplectic() {
        let g = geo(GeometryKind::Symplectic, 1);
        let chart = g.chart();
        let f = parse("q1*p1^2", chart).unwrap();
        let a = parse("q1 + p1", chart).unwrap();
        let b = parse("sin(q1)", chart).unwrap();
        assert_eq!(leibniz_defect(&g, &f, &a, &b).zero_test(), Tri::Zero);
    }

    #[test]
    fn evolution_derivative_matches_dynamics_field() {
        let cases = [
            (GeometryKind::Symplectic, "p1^2/2 + q1^2/2", "q1*p1"),
            (GeometryKind::Cosymplectic, "p1^2/2 + t*q1", "p1 + t^2/2"),
            (GeometryKind::Contact, "p1^2/2 + q1^2/2 + 1/5*z", "q1 + z*p1"),
            (GeometryKind::Cocontact, "p1^2/2 + t*q1 + z", "p1*z + t"),
        ];
        for (kind, ham, func) in cases {
            let g = geo(kind, 1);
            let sys = HamiltonianSystem::parse(g.clone(), ham).unwrap();
            let f = parse(func, g.chart()).unwrap();
            let via_bracket = evolution_derivative(&sys, &f);
            let via_field = dynamics_field(&sys).unwrap().apply(&f);
            assert_eq!(
                (via_bracket - via_field).zero_test(),
                Tri::Zero,
                "kind {:?}",
                kind
            );
        }
    }

    #[test]
    fn contact_energy_decays_at_its_own_rate() {
        let g = geo(GeometryKind::Contact, 1);
        let sys = HamiltonianSystem::parse(g.clone(), "p1^2/2 + q1^2/2 + 1/5*z").unwrap();
        let h = sys.hamiltonian.expr.clone();
        let hdot = evolution_derivative(&sys, &h);
        let z = g.z().unwrap();
        let expected = -(h.clone() * h.diff(z));
        assert_eq!((hdot - expected).zero_test(), Tri::Zero);
    }

    #[test]
    fn conserved_quantities_detected() {
        let g = geo(GeometryKind::Symplectic, 1);
        let sys = HamiltonianSystem::parse(g.clone(), "p1^2/2").unwrap();
        let p1 = parse("p1", g.chart()).unwrap();
        let q1 = parse("q1", g.chart()).unwrap();
        assert_eq!(is_constant_of_motion(&sys, &p1), Tri::Zero);
        assert_eq!(is_constant_of_motion(&sys, &q1), Tri::NonZero);

        let g = geo(GeometryKind::Cosymplectic, 1);
        let sys = HamiltonianSystem::parse(g.clone(), "p1^2/2 + t*q1").unwrap();
        let f = parse("p1 + t^2/2", g.chart()).unwrap();
        assert_eq!(is_constant_of_motion(&sys, &f), Tri::Zero);
    }
}
