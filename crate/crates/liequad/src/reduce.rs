//! Symmetry straightening and order reduction. One symmetry at a time is
//! rectified into a unit coordinate field through a closed-form catalog, the
//! straightened coordinate is split off as a one-dimensional quadrature, and
//! the residual core system is finished by a dependency cascade. Trajectories
//! come out as nested numerical integrals of known functions.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use num::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::expr::{
    rat_to_f64, rationalize, CompiledExpr, CoordinateSystem, Expr, Func, Rat, Tri, VarId,
};
use crate::geometry::VectorField;
use crate::liealg::FunctionAlgebra;
use crate::numint::Trajectory;
use crate::symmetry::is_symmetry;

const ROUND_TRIP_TOLERANCE: f64 = 1e-9;
const ROUND_TRIP_SAMPLES: usize = 50;
const JACOBIAN_FLOOR: f64 = 1e-6;
const EQUILIBRIUM_TOLERANCE: f64 = 1e-9;
const PIVOT_THRESHOLD: f64 = 1e-3;
const QUADRATURE_REL_TOLERANCE: f64 = 1e-10;
const QUADRATURE_ABS_FLOOR: f64 = 1e-14;
const MAX_PANEL_DEPTH: u32 = 30;
const SAMPLE_SEED: u64 = 0x7374_7261;

#[derive(Error, Debug)]
pub enum ReductionError {
    #[error("no straightening probe matched: {}", probes.join("; "))]
    NotStraightenable { probes: Vec<String> },
    #[error("stage {stage}: the field to eliminate is not a symmetry ({detail})")]
    NotASymmetry { stage: usize, detail: String },
    #[error(
        "stage {stage}: component {component} still depends on the eliminated coordinate {coordinate}"
    )]
    DependenceResidual { stage: usize, coordinate: String, component: String },
    #[error("the residual core is coupled in {}", unsolved.join(", "))]
    CoreUnsolvable { unsolved: Vec<String> },
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error("{0}")]
    BadInput(String),
}

/// Invertible local chart substitution produced by a straightening probe.
/// `forward[j]` is target coordinate j through the source chart and
/// `inverse[i]` is source coordinate i through the target chart; the
/// straightened direction is always the last target coordinate.
#[derive(Clone, Debug)]
pub struct CoordinateChange {
    pub source: CoordinateSystem,
    pub target: CoordinateSystem,
    pub forward: Vec<Expr>,
    pub inverse: Vec<Expr>,
}

impl CoordinateChange {
    pub fn straightened(&self) -> &str {
        self.target.name(self.target.dim() - 1)
    }

    pub fn forward_point(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.forward.iter().map(|e| e.evaluate(x).ok()).collect()
    }

    pub fn inverse_point(&self, y: &[f64]) -> Option<Vec<f64>> {
        self.inverse.iter().map(|e| e.evaluate(y).ok()).collect()
    }

    /// Directional derivatives of the forward map along `u`, still expressed
    /// on the source chart. The unit-field assertion runs on these.
    fn directional(&self, u: &VectorField) -> Vec<Expr> {
        self.forward.iter().map(|f| u.apply(f)).collect()
    }

    /// Transports a field on the source chart to the target chart.
    pub fn pushforward(&self, u: &VectorField) -> VectorField {
        let comps: Vec<Expr> = self
            .directional(u)
            .iter()
            .map(|w| w.substitute(&|v: VarId| self.inverse[v].clone()))
            .collect();
        VectorField::new(self.target.clone(), comps)
            .expect("pushforward components live on the target chart")
    }

    /// Round-trip and invertibility checks on a box around `center`.
    fn validate(&self, center: &[f64], halfwidth: f64) -> Result<(), String> {
        let dim = self.source.dim();
        if self.forward_point(center).is_none() {
            return Err("the change does not evaluate at the region center".into());
        }
        let mut residuals = Vec::new();
        for i in 0..dim {
            let rt = self.inverse[i].substitute(&|v: VarId| self.forward[v].clone());
            let diff = rt.sub_ref(&Expr::var(i));
            if diff.zero_test() != Tri::Zero {
                residuals.push(CompiledExpr::compile(&diff));
            }
        }
        let jac: Vec<CompiledExpr> = (0..dim)
            .flat_map(|j| (0..dim).map(move |i| (j, i)))
            .map(|(j, i)| CompiledExpr::compile(&self.forward[j].diff(i)))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
        let mut point = vec![0.0; dim];
        for sample in 0..=ROUND_TRIP_SAMPLES {
            for (i, p) in point.iter_mut().enumerate() {
                // The first probe point is the center itself.
                *p = if sample == 0 {
                    center[i]
                } else {
                    center[i] + rng.gen_range(-halfwidth..=halfwidth)
                };
            }
            for r in &residuals {
                match r.eval(&point) {
                    Some(v) if v.abs() <= ROUND_TRIP_TOLERANCE => {}
                    Some(_) => return Err("round trip exceeds tolerance in the region".into()),
                    None => return Err("round trip leaves the evaluation domain".into()),
                }
            }
            let mut m = DMatrix::zeros(dim, dim);
            for j in 0..dim {
                for i in 0..dim {
                    match jac[j * dim + i].eval(&point) {
                        Some(v) => m[(j, i)] = v,
                        None => return Err("the Jacobian leaves the evaluation domain".into()),
                    }
                }
            }
            if m.determinant().abs() < JACOBIAN_FLOOR {
                return Err("the Jacobian determinant collapses in the region".into());
            }
        }
        Ok(())
    }
}

/// One eliminated coordinate: the change that straightened it, and the
/// split-off right-hand side as an expression on the reduced chart.
#[derive(Clone, Debug)]
pub struct Quadrature {
    pub change: CoordinateChange,
    pub coordinate: String,
    pub rhs: Expr,
}

#[derive(Clone, Debug)]
pub enum Stage {
    Quadrature(Quadrature),
    ReducedSystem { field: VectorField },
}

/// Full reduction plan: one quadrature stage per eliminated symmetry, then
/// the residual core. Stage count is bounded by the number of supplied
/// symmetries plus one; a fully certified package leaves the core with
/// nothing to integrate beyond trivially decoupled equations.
#[derive(Clone, Debug)]
pub struct QuadratureSchedule {
    pub stages: Vec<Stage>,
    /// Initial value of each straightened coordinate, in stage order.
    pub initials: Vec<f64>,
    /// Image of the start point in the core chart.
    pub core_start: Vec<f64>,
}

struct Candidate {
    forward: Vec<Expr>,
    inverse: Vec<Expr>,
    halfwidths: Vec<f64>,
}

fn halfwidth_ladder(base: f64) -> Vec<f64> {
    let b = base.clamp(1e-4, 0.5);
    vec![b, b / 5.0, b / 25.0]
}

fn sign_rat(v: f64) -> Rat {
    if v >= 0.0 {
        Rat::one()
    } else {
        -Rat::one()
    }
}

fn fresh_chart(dim: usize) -> CoordinateSystem {
    let names: Vec<String> = (1..=dim).map(|i| format!("y{i}")).collect();
    CoordinateSystem::auxiliary(&names).expect("generated names are distinct")
}

/// Coefficients of a homogeneous linear expression, if it is one.
fn linear_coeffs(e: &Expr, dim: usize) -> Option<Vec<Rat>> {
    let mut coeffs = Vec::with_capacity(dim);
    for j in 0..dim {
        coeffs.push(e.diff(j).as_rational()?);
    }
    let rebuilt = Expr::sum_of(
        &coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| Expr::num(c.clone()).mul_ref(&Expr::var(j)))
            .collect::<Vec<_>>(),
    );
    if e.sub_ref(&rebuilt).is_zero_expr() {
        Some(coeffs)
    } else {
        None
    }
}

/// Exact square root of a non-negative rational, when it has one.
fn rat_sqrt(r: &Rat) -> Option<Rat> {
    if r.is_negative() {
        return None;
    }
    let n = r.numer().sqrt();
    let d = r.denom().sqrt();
    if &(&n * &n) == r.numer() && &(&d * &d) == r.denom() {
        Some(Rat::new(n, d))
    } else {
        None
    }
}

fn rat_mat_sub_lambda(a: &[Vec<Rat>], lambda: &Rat) -> Vec<Vec<Rat>> {
    let d = a.len();
    let mut out = a.to_vec();
    for (i, row) in out.iter_mut().enumerate().take(d) {
        row[i] -= lambda;
    }
    out
}

/// Basis of the null space of a rational matrix.
fn rat_kernel(mut m: Vec<Vec<Rat>>) -> Vec<Vec<Rat>> {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(r, p);
        let inv = m[r][c].clone().recip();
        for v in m[r].iter_mut() {
            *v *= &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    let sub = &m[r][j] * &f;
                    m[i][j] -= sub;
                }
            }
        }
        pivot_cols.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    let mut basis = Vec::new();
    for free in (0..cols).filter(|c| !pivot_cols.contains(c)) {
        let mut v = vec![Rat::zero(); cols];
        v[free] = Rat::one();
        for (row, &pc) in pivot_cols.iter().enumerate() {
            v[pc] = -m[row][free].clone();
        }
        basis.push(v);
    }
    basis
}

fn rat_inverse(m: &[Vec<Rat>]) -> Option<Vec<Vec<Rat>>> {
    let d = m.len();
    let mut aug: Vec<Vec<Rat>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..d).map(|j| if i == j { Rat::one() } else { Rat::zero() }));
            r
        })
        .collect();
    for c in 0..d {
        let p = (c..d).find(|&i| !aug[i][c].is_zero())?;
        aug.swap(c, p);
        let inv = aug[c][c].clone().recip();
        for v in aug[c].iter_mut() {
            *v *= &inv;
        }
        for i in 0..d {
            if i != c && !aug[i][c].is_zero() {
                let f = aug[i][c].clone();
                for j in 0..2 * d {
                    let sub = &aug[c][j] * &f;
                    aug[i][j] -= sub;
                }
            }
        }
    }
    Some(aug.into_iter().map(|row| row[d..].to_vec()).collect())
}

/// A constant field along a single coordinate: permute that coordinate to
/// the end and rescale it to unit speed.
fn probe_translation(u: &VectorField, _x0: &[f64]) -> Result<Candidate, String> {
    let dim = u.chart.dim();
    let nonzero: Vec<usize> = (0..dim).filter(|&i| !u.components[i].is_zero_expr()).collect();
    let [k] = nonzero[..] else {
        return Err("more than one component is nonzero".into());
    };
    let Some(c) = u.components[k].as_rational() else {
        return Err("the moving component is not constant".into());
    };
    let others: Vec<usize> = (0..dim).filter(|&i| i != k).collect();
    let mut forward: Vec<Expr> = others.iter().map(|&i| Expr::var(i)).collect();
    forward.push(Expr::var(k).mul_ref(&Expr::num(c.clone().recip())));
    let mut inverse = vec![Expr::zero(); dim];
    for (j, &i) in others.iter().enumerate() {
        inverse[i] = Expr::var(j);
    }
    inverse[k] = Expr::var(dim - 1).mul_ref(&Expr::num(c));
    Ok(Candidate { forward, inverse, halfwidths: vec![0.5] })
}

/// Antiderivative table for a field that moves a single coordinate with a
/// speed depending only on that coordinate. Each row supplies the
/// straightened coordinate F with u(F) = 1 and its closed-form inverse.
fn probe_separable(u: &VectorField, x0: &[f64]) -> Result<Candidate, String> {
    let dim = u.chart.dim();
    let nonzero: Vec<usize> = (0..dim).filter(|&i| !u.components[i].is_zero_expr()).collect();
    let [k] = nonzero[..] else {
        return Err("more than one component is nonzero".into());
    };
    let g = &u.components[k];
    if !g.free_vars().iter().all(|&v| v == k) {
        return Err("the speed depends on other coordinates".into());
    }
    if g.as_rational().is_some() {
        return Err("a constant speed is a translation".into());
    }
    let x = Expr::var(k);
    let last = Expr::var(dim - 1);
    let xk = x0[k];

    let table: Option<(Expr, Expr, f64)> = (|| {
        // Linear speed a*x + b.
        if let Some(a) = g.diff(k).as_rational() {
            if !a.is_zero() {
                if let Some(b) = g.sub_ref(&Expr::num(a.clone()).mul_ref(&x)).as_rational() {
                    let root = rat_to_f64(&a) * xk + rat_to_f64(&b);
                    let s = sign_rat(root);
                    let fwd = Expr::fun(
                        Func::Ln,
                        Expr::num(s.clone())
                            .mul_ref(&Expr::num(a.clone()).mul_ref(&x).add_ref(&Expr::num(b.clone()))),
                    )
                    .mul_ref(&Expr::num(a.clone().recip()));
                    let inv = Expr::num(s)
                        .mul_ref(&Expr::fun(Func::Exp, Expr::num(a.clone()).mul_ref(&last)))
                        .sub_ref(&Expr::num(b))
                        .mul_ref(&Expr::num(a.clone().recip()));
                    let dist = root.abs() / rat_to_f64(&a).abs();
                    return Some((fwd, inv, dist));
                }
            }
        }
        // Reciprocal of a linear function: 1/g is alpha*x + beta.
        let ginv = g.pow_rat(&-Rat::one());
        if let Some(alpha) = ginv.diff(k).as_rational() {
            if !alpha.is_zero() {
                if let Some(beta) =
                    ginv.sub_ref(&Expr::num(alpha.clone()).mul_ref(&x)).as_rational()
                {
                    let root = rat_to_f64(&alpha) * xk + rat_to_f64(&beta);
                    let s = Expr::num(sign_rat(root));
                    let fwd = Expr::num(alpha.clone())
                        .mul_ref(&x.powi(2))
                        .mul_ref(&Expr::rational(1, 2))
                        .add_ref(&Expr::num(beta.clone()).mul_ref(&x));
                    let disc = Expr::num(&beta * &beta).add_ref(
                        &Expr::num(Rat::from_integer(2.into()) * &alpha).mul_ref(&last),
                    );
                    let inv = s
                        .mul_ref(&Expr::fun(
                            Func::Exp,
                            Expr::fun(Func::Ln, disc).mul_ref(&Expr::rational(1, 2)),
                        ))
                        .sub_ref(&Expr::num(beta))
                        .mul_ref(&Expr::num(alpha.clone().recip()));
                    let dist = root.abs() / rat_to_f64(&alpha).abs();
                    return Some((fwd, inv, dist));
                }
            }
        }
        // Monomial speed c*x^m with integer m outside {0, 1}.
        if let Some(m) = x.mul_ref(&g.diff(k)).mul_ref(&ginv).as_rational() {
            if m.is_integer() && !m.is_one() && !m.is_zero() {
                if let Some(c) = g.mul_ref(&x.pow_rat(&-m.clone())).as_rational() {
                    if xk <= PIVOT_THRESHOLD {
                        return None;
                    }
                    let one_minus_m = Rat::one() - &m;
                    let scale = (&c * &one_minus_m).recip();
                    let fwd = x
                        .pow_rat(&one_minus_m)
                        .mul_ref(&Expr::num(scale.clone()));
                    let inv = Expr::fun(
                        Func::Exp,
                        Expr::fun(Func::Ln, Expr::num(scale.recip()).mul_ref(&last))
                            .mul_ref(&Expr::num(one_minus_m.recip())),
                    );
                    return Some((fwd, inv, xk));
                }
            }
        }
        // Exponential speed c*exp(a*x).
        if let Some(a) = g.diff(k).mul_ref(&ginv).as_rational() {
            if !a.is_zero() {
                let expax = Expr::fun(Func::Exp, Expr::num(a.clone()).mul_ref(&x));
                if let Some(c) = g.mul_ref(&expax.pow_rat(&-Rat::one())).as_rational() {
                    let ac = &a * &c;
                    let fwd = Expr::fun(Func::Exp, Expr::num(-a.clone()).mul_ref(&x))
                        .mul_ref(&Expr::num(-ac.clone().recip()));
                    let inv = Expr::fun(Func::Ln, Expr::num(-ac).mul_ref(&last))
                        .mul_ref(&Expr::num(-a.recip()));
                    return Some((fwd, inv, 0.5));
                }
            }
        }
        // Trigonometric speeds c*sin(a*x) and c*cos(a*x).
        let minus_ratio = g.diff(k).diff(k).mul_ref(&ginv).neg_ref();
        if let Some(a2) = minus_ratio.as_rational() {
            if a2.is_positive() {
                if let Some(a) = rat_sqrt(&a2) {
                    let ax = Expr::num(a.clone()).mul_ref(&x);
                    let half = Expr::num(a.clone()).mul_ref(&x).mul_ref(&Expr::rational(1, 2));
                    for (c_expr, is_sin) in [
                        (g.mul_ref(&Expr::fun(Func::Sin, ax.clone()).pow_rat(&-Rat::one())), true),
                        (g.mul_ref(&Expr::fun(Func::Cos, ax.clone()).pow_rat(&-Rat::one())), false),
                    ] {
                        let Some(c) = c_expr.as_rational() else { continue };
                        let ac = &a * &c;
                        let period = std::f64::consts::PI / rat_to_f64(&a).abs();
                        let dist = {
                            let scaled = xk / period;
                            (scaled - scaled.round()).abs() * period
                        };
                        if is_sin {
                            let fwd = Expr::fun(Func::Ln, Expr::fun(Func::Sin, half.clone()))
                                .sub_ref(&Expr::fun(Func::Ln, Expr::fun(Func::Cos, half.clone())))
                                .mul_ref(&Expr::num(ac.clone().recip()));
                            let inv = Expr::fun(
                                Func::Atan,
                                Expr::fun(Func::Exp, Expr::num(ac.clone()).mul_ref(&last)),
                            )
                            .mul_ref(&Expr::num(Rat::from_integer(2.into()) * a.clone().recip()));
                            return Some((fwd, inv, dist));
                        }
                        let fwd = Expr::fun(
                            Func::Ln,
                            Expr::one().add_ref(&Expr::fun(Func::Sin, ax.clone())),
                        )
                        .sub_ref(&Expr::fun(Func::Ln, Expr::fun(Func::Cos, ax.clone())))
                        .mul_ref(&Expr::num(ac.clone().recip()));
                        let eacy = Expr::fun(Func::Exp, Expr::num(ac.clone()).mul_ref(&last));
                        let inv = Expr::fun(
                            Func::Atan,
                            eacy.sub_ref(&Expr::one())
                                .mul_ref(&eacy.add_ref(&Expr::one()).pow_rat(&-Rat::one())),
                        )
                        .mul_ref(&Expr::num(Rat::from_integer(2.into()) * a.clone().recip()));
                        return Some((fwd, inv, dist));
                    }
                }
            }
        }
        None
    })();

    let Some((fwd_k, inv_k, dist)) = table else {
        return Err("the speed is outside the antiderivative table".into());
    };
    let others: Vec<usize> = (0..dim).filter(|&i| i != k).collect();
    let mut forward: Vec<Expr> = others.iter().map(|&i| Expr::var(i)).collect();
    forward.push(fwd_k);
    let mut inverse = vec![Expr::zero(); dim];
    for (j, &i) in others.iter().enumerate() {
        inverse[i] = Expr::var(j);
    }
    inverse[k] = inv_k;
    Ok(Candidate { forward, inverse, halfwidths: halfwidth_ladder(0.4 * dist) })
}

/// Unit-speed logarithm along a diagonalized direction, with invariant
/// ratios filling the remaining coordinates. `xi[i]` are the eigenmode
/// expressions on the source chart and `lambdas[i]` their rates.
fn euler_candidate(
    lambdas: &[Rat],
    xi: &[Expr],
    xi0: &[f64],
    to_source: impl Fn(&[Expr]) -> Vec<Expr>,
) -> Result<(Vec<Expr>, Vec<Expr>, f64), String> {
    let m = lambdas.len();
    let Some(pivot) = (0..m).find(|&j| !lambdas[j].is_zero() && xi0[j].abs() >= PIVOT_THRESHOLD)
    else {
        return Err("no eigen direction moves away from zero at the center".into());
    };
    let s = sign_rat(xi0[pivot]);
    let lam_p = lambdas[pivot].clone();
    let log_pivot = Expr::fun(Func::Ln, Expr::num(s.clone()).mul_ref(&xi[pivot]));
    let mut forward = Vec::with_capacity(m);
    for i in 0..m {
        if i == pivot {
            continue;
        }
        let mu = &lambdas[i] / &lam_p;
        forward.push(
            xi[i].mul_ref(&Expr::fun(Func::Exp, log_pivot.mul_ref(&Expr::num(-mu)))),
        );
    }
    forward.push(log_pivot.mul_ref(&Expr::num(lam_p.clone().recip())));
    let last = Expr::var(m - 1);
    let mut xi_inverse = vec![Expr::zero(); m];
    xi_inverse[pivot] = Expr::num(s)
        .mul_ref(&Expr::fun(Func::Exp, Expr::num(lam_p).mul_ref(&last)));
    let mut pos = 0;
    for i in 0..m {
        if i == pivot {
            continue;
        }
        xi_inverse[i] = Expr::var(pos).mul_ref(&Expr::fun(
            Func::Exp,
            Expr::num(lambdas[i].clone()).mul_ref(&last),
        ));
        pos += 1;
    }
    let inverse = to_source(&xi_inverse);
    Ok((forward, inverse, 0.4 * xi0[pivot].abs()))
}

/// Linear fields: diagonalize over the rationals when possible, otherwise
/// recognize a planar rotation block and pass to polar coordinates.
fn probe_linear(u: &VectorField, x0: &[f64]) -> Result<Candidate, String> {
    let dim = u.chart.dim();
    let mut a: Vec<Vec<Rat>> = Vec::with_capacity(dim);
    for comp in &u.components {
        a.push(linear_coeffs(comp, dim).ok_or("a component is not a homogeneous linear form")?);
    }

    let eigen_failure = match rational_eigen_candidate(&a, x0) {
        Ok(c) => return Ok(c),
        Err(e) => e,
    };

    // Planar rotation block: exactly two nonzero entries c and -c across a
    // symmetric position pair.
    let nonzero: Vec<(usize, usize)> = (0..dim)
        .flat_map(|i| (0..dim).map(move |j| (i, j)))
        .filter(|&(i, j)| !a[i][j].is_zero())
        .collect();
    let rotation = match nonzero[..] {
        [(i1, j1), (i2, j2)] if i1 == j2 && j1 == i2 && i1 != j1 && a[i1][j1] == -a[i2][j2].clone() => {
            Some((i1.min(j1), i1.max(j1)))
        }
        _ => None,
    };
    let Some((i, j)) = rotation else {
        return Err(format!("{eigen_failure}; and no planar rotation block"));
    };
    let c = a[i][j].clone();
    let radius2 = Expr::var(i)
        .powi(2)
        .add_ref(&Expr::var(j).powi(2))
        .mul_ref(&Expr::rational(1, 2));
    let denom_is_j = x0[j].abs() >= x0[i].abs();
    let angle = if denom_is_j {
        Expr::fun(Func::Atan, Expr::var(i).mul_ref(&Expr::var(j).pow_rat(&-Rat::one())))
            .mul_ref(&Expr::num(c.clone().recip()))
    } else {
        Expr::fun(Func::Atan, Expr::var(j).mul_ref(&Expr::var(i).pow_rat(&-Rat::one())))
            .mul_ref(&Expr::num(-c.clone().recip()))
    };
    let others: Vec<usize> = (0..dim).filter(|&v| v != i && v != j).collect();
    let mut forward: Vec<Expr> = others.iter().map(|&v| Expr::var(v)).collect();
    forward.push(radius2);
    forward.push(angle);

    let rho = Expr::var(dim - 2);
    let theta = Expr::num(c).mul_ref(&Expr::var(dim - 1));
    let radius = Expr::fun(
        Func::Exp,
        Expr::fun(Func::Ln, Expr::from_int(2).mul_ref(&rho)).mul_ref(&Expr::rational(1, 2)),
    );
    let mut inverse = vec![Expr::zero(); dim];
    for (pos, &v) in others.iter().enumerate() {
        inverse[v] = Expr::var(pos);
    }
    if denom_is_j {
        let s = Expr::num(sign_rat(x0[j]));
        inverse[i] = s.mul_ref(&radius).mul_ref(&Expr::fun(Func::Sin, theta.clone()));
        inverse[j] = s.mul_ref(&radius).mul_ref(&Expr::fun(Func::Cos, theta));
    } else {
        let s = Expr::num(sign_rat(x0[i]));
        inverse[i] = s.mul_ref(&radius).mul_ref(&Expr::fun(Func::Cos, theta.clone()));
        inverse[j] = s.neg_ref().mul_ref(&radius).mul_ref(&Expr::fun(Func::Sin, theta));
    }
    let den0 = x0[i].abs().max(x0[j].abs());
    Ok(Candidate { forward, inverse, halfwidths: halfwidth_ladder(0.4 * den0) })
}

fn rational_eigen_candidate(a: &[Vec<Rat>], x0: &[f64]) -> Result<Candidate, String> {
    let dim = a.len();
    let m = DMatrix::from_fn(dim, dim, |i, j| rat_to_f64(&a[i][j]));
    let eigs = m.complex_eigenvalues();
    if eigs.iter().any(|e| e.im.abs() > 1e-9) {
        return Err("the linear part has non-real eigenvalues".into());
    }
    let mut candidates: Vec<Rat> = Vec::new();
    for e in eigs.iter() {
        let r = rationalize(e.re, 1_000_000);
        if !candidates.contains(&r) {
            candidates.push(r);
        }
    }
    let mut lambdas = Vec::new();
    let mut columns: Vec<Vec<Rat>> = Vec::new();
    for lam in candidates {
        let kernel = rat_kernel(rat_mat_sub_lambda(a, &lam));
        if kernel.is_empty() {
            return Err("an eigenvalue does not rationalize exactly".into());
        }
        for v in kernel {
            lambdas.push(lam.clone());
            columns.push(v);
        }
    }
    if columns.len() != dim {
        return Err("the linear part is not diagonalizable over the rationals".into());
    }
    let p: Vec<Vec<Rat>> = (0..dim)
        .map(|i| (0..dim).map(|j| columns[j][i].clone()).collect())
        .collect();
    let pinv = rat_inverse(&p).ok_or("the eigenvectors are dependent")?;
    let xi: Vec<Expr> = pinv
        .iter()
        .map(|row| {
            Expr::sum_of(
                &row.iter()
                    .enumerate()
                    .filter(|(_, c)| !c.is_zero())
                    .map(|(j, c)| Expr::num(c.clone()).mul_ref(&Expr::var(j)))
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    let xi0: Vec<f64> = pinv
        .iter()
        .map(|row| row.iter().zip(x0).map(|(c, x)| rat_to_f64(c) * x).sum())
        .collect();
    let (forward, inverse, hw) = euler_candidate(&lambdas, &xi, &xi0, |xi_inv| {
        (0..dim)
            .map(|i| {
                Expr::sum_of(
                    &p[i]
                        .iter()
                        .zip(xi_inv)
                        .filter(|(c, _)| !c.is_zero())
                        .map(|(c, e)| Expr::num(c.clone()).mul_ref(e))
                        .collect::<Vec<_>>(),
                )
            })
            .collect()
    })?;
    Ok(Candidate { forward, inverse, halfwidths: halfwidth_ladder(hw) })
}

/// Already-diagonal scaling fields, kept as a direct probe.
fn probe_scaling(u: &VectorField, x0: &[f64]) -> Result<Candidate, String> {
    let dim = u.chart.dim();
    let mut lambdas = Vec::with_capacity(dim);
    for (i, comp) in u.components.iter().enumerate() {
        let coeffs = linear_coeffs(comp, dim).ok_or("a component is not linear")?;
        for (j, c) in coeffs.iter().enumerate() {
            if j != i && !c.is_zero() {
                return Err("the linear part is not diagonal".into());
            }
        }
        lambdas.push(coeffs[i].clone());
    }
    let xi: Vec<Expr> = (0..dim).map(Expr::var).collect();
    let (forward, inverse, hw) =
        euler_candidate(&lambdas, &xi, x0, |xi_inv| xi_inv.to_vec())?;
    Ok(Candidate { forward, inverse, halfwidths: halfwidth_ladder(hw) })
}

/// Rectifies `u` into the unit field along the last coordinate of a fresh
/// chart, valid on a box around `x0`. Probes a fixed catalog in order and
/// certifies every success by a symbolic unit-field check plus numeric
/// round-trip and Jacobian validation.
pub fn straighten(u: &VectorField, x0: &[f64]) -> Result<CoordinateChange, ReductionError> {
    let dim = u.chart.dim();
    if x0.len() != dim {
        return Err(ReductionError::BadInput(format!(
            "expected a {dim}-dimensional center, got {}",
            x0.len()
        )));
    }
    let values = u
        .evaluate(x0)
        .map_err(|e| ReductionError::BadInput(format!("the field does not evaluate at the center: {e}")))?;
    if values.iter().all(|v| v.abs() <= EQUILIBRIUM_TOLERANCE) {
        return Err(ReductionError::NotStraightenable {
            probes: vec!["the field vanishes at the region center".into()],
        });
    }

    let probes: [(&str, fn(&VectorField, &[f64]) -> Result<Candidate, String>); 4] = [
        ("translation", probe_translation),
        ("separable", probe_separable),
        ("linear", probe_linear),
        ("scaling", probe_scaling),
    ];
    let mut failures = Vec::new();
    for (name, probe) in probes {
        let candidate = match probe(u, x0) {
            Ok(c) => c,
            Err(why) => {
                failures.push(format!("{name}: {why}"));
                continue;
            }
        };
        let change = CoordinateChange {
            source: u.chart.clone(),
            target: fresh_chart(dim),
            forward: candidate.forward,
            inverse: candidate.inverse,
        };
        let directional = change.directional(u);
        let unit_ok = directional[..dim - 1].iter().all(|w| w.zero_test() == Tri::Zero)
            && directional[dim - 1].sub_ref(&Expr::one()).zero_test() == Tri::Zero;
        if !unit_ok {
            failures.push(format!("{name}: the pushforward is not the unit coordinate field"));
            continue;
        }
        let mut last_err = String::new();
        for hw in &candidate.halfwidths {
            match change.validate(x0, *hw) {
                Ok(()) => return Ok(change),
                Err(e) => last_err = e,
            }
        }
        failures.push(format!("{name}: {last_err}"));
    }
    Err(ReductionError::NotStraightenable { probes: failures })
}

fn chart_without_last(chart: &CoordinateSystem) -> CoordinateSystem {
    let names: Vec<&str> = chart.names().take(chart.dim() - 1).collect();
    CoordinateSystem::auxiliary(&names).expect("prefix of a valid chart")
}

/// Replaces a provably absent variable so the expression drops to the
/// reduced chart.
fn scrub(e: &Expr, var: VarId) -> Expr {
    if e.free_vars().contains(&var) {
        e.substitute(&|v: VarId| if v == var { Expr::one() } else { Expr::var(v) })
    } else {
        e.clone()
    }
}

fn stage_reduce(
    v: &VectorField,
    u: &VectorField,
    x0: &[f64],
    stage: usize,
) -> Result<(VectorField, Quadrature, Vec<f64>), ReductionError> {
    match is_symmetry(u, v) {
        Tri::Zero => {}
        Tri::NonZero => {
            return Err(ReductionError::NotASymmetry {
                stage,
                detail: "the commutator with the system field is nonzero".into(),
            })
        }
        Tri::Unknown => {
            return Err(ReductionError::NotASymmetry {
                stage,
                detail: "the commutator could not be proven zero".into(),
            })
        }
    }
    let change = straighten(u, x0)?;
    let vbar = change.pushforward(v);
    let dim = change.target.dim();
    let last = dim - 1;
    for i in 0..dim {
        if vbar.components[i].diff(last).zero_test() != Tri::Zero {
            return Err(ReductionError::DependenceResidual {
                stage,
                coordinate: change.target.name(last).to_string(),
                component: change.target.name(i).to_string(),
            });
        }
    }
    let reduced_chart = chart_without_last(&change.target);
    let reduced = VectorField::new(
        reduced_chart,
        (0..last).map(|i| scrub(&vbar.components[i], last)).collect(),
    )
    .expect("reduced components are free of the dropped coordinate");
    let rhs = scrub(&vbar.components[last], last);
    let y0 = change
        .forward_point(x0)
        .ok_or_else(|| ReductionError::BadInput("the center does not map through the change".into()))?;
    let quadrature = Quadrature {
        coordinate: change.straightened().to_string(),
        change,
        rhs,
    };
    Ok((reduced, quadrature, y0))
}

/// Eliminates one symmetry: straightens `u`, rewrites `v`, asserts that no
/// component depends on the straightened coordinate, and splits that
/// coordinate off as a quadrature.
pub fn reduce_once(
    v: &VectorField,
    u: &VectorField,
    x0: &[f64],
) -> Result<(VectorField, Quadrature), ReductionError> {
    let (reduced, quadrature, _) = stage_reduce(v, u, x0, 1)?;
    Ok((reduced, quadrature))
}

/// Runs the full elimination cascade and returns the reduction plan.
/// Symmetries must arrive innermost-first: each one has to remain a
/// symmetry after the previous eliminations.
pub fn build_schedule(
    v: &VectorField,
    symmetries: &[VectorField],
    x0: &[f64],
) -> Result<QuadratureSchedule, ReductionError> {
    let dim = v.chart.dim();
    if x0.len() != dim {
        return Err(ReductionError::BadInput(format!(
            "expected a {dim}-dimensional start point, got {}",
            x0.len()
        )));
    }
    if symmetries.len() > dim {
        return Err(ReductionError::BadInput(format!(
            "{} symmetries cannot act on a {dim}-dimensional chart",
            symmetries.len()
        )));
    }
    for s in symmetries {
        if s.chart != v.chart {
            return Err(ReductionError::BadInput(
                "symmetries must live on the system's chart".into(),
            ));
        }
    }
    let mut current_v = v.clone();
    let mut current_x0 = x0.to_vec();
    let mut pending: Vec<VectorField> = symmetries.to_vec();
    let mut stages = Vec::new();
    let mut initials = Vec::new();
    for stage in 1..=symmetries.len() {
        let u = pending.remove(0);
        let (reduced, quadrature, y0) = stage_reduce(&current_v, &u, &current_x0, stage)?;
        let change = &quadrature.change;
        let last = change.target.dim() - 1;
        let mut projected = Vec::with_capacity(pending.len());
        for w in &pending {
            let wbar = change.pushforward(w);
            for i in 0..last {
                if wbar.components[i].diff(last).zero_test() != Tri::Zero {
                    return Err(ReductionError::DependenceResidual {
                        stage: stage + 1,
                        coordinate: change.target.name(last).to_string(),
                        component: change.target.name(i).to_string(),
                    });
                }
            }
            projected.push(
                VectorField::new(
                    reduced.chart.clone(),
                    (0..last).map(|i| scrub(&wbar.components[i], last)).collect(),
                )
                .expect("projected components are free of the dropped coordinate"),
            );
        }
        pending = projected;
        initials.push(y0[last]);
        current_x0 = y0[..last].to_vec();
        current_v = reduced;
        stages.push(Stage::Quadrature(quadrature));
    }
    stages.push(Stage::ReducedSystem { field: current_v });
    Ok(QuadratureSchedule { stages, initials, core_start: current_x0 })
}

// -- numerical evaluation of a schedule --

fn gauss_kronrod<F>(f: &F, a: f64, b: f64) -> Result<f64, ReductionError>
where
    F: Fn(f64) -> Result<f64, ReductionError>,
{
    // 15-point Kronrod abscissae with the embedded 7-point Gauss rule on
    // the odd-indexed nodes.
    const XK: [f64; 8] = [
        0.991455371120813,
        0.949107912342759,
        0.864864423359769,
        0.741531185599394,
        0.586087235467691,
        0.405845151377397,
        0.207784955007898,
        0.0,
    ];
    const WK: [f64; 8] = [
        0.022935322010529,
        0.063092092629979,
        0.104790010322250,
        0.140653259715525,
        0.169004726639267,
        0.190350578064785,
        0.204432940075298,
        0.209482141084728,
    ];
    const WG: [f64; 4] = [
        0.129484966168870,
        0.279705391489277,
        0.381830050505119,
        0.417959183673469,
    ];

    fn panel<F>(f: &F, lo: f64, hi: f64, depth: u32) -> Result<f64, ReductionError>
    where
        F: Fn(f64) -> Result<f64, ReductionError>,
    {
        let c = 0.5 * (lo + hi);
        let h = 0.5 * (hi - lo);
        let fc = f(c)?;
        let mut kronrod = WK[7] * fc;
        let mut gauss = WG[3] * fc;
        for i in 0..7 {
            let fa = f(c - h * XK[i])?;
            let fb = f(c + h * XK[i])?;
            kronrod += WK[i] * (fa + fb);
            if i % 2 == 1 {
                gauss += WG[i / 2] * (fa + fb);
            }
        }
        kronrod *= h;
        gauss *= h;
        let err = (kronrod - gauss).abs();
        if err <= QUADRATURE_ABS_FLOOR + QUADRATURE_REL_TOLERANCE * kronrod.abs() {
            return Ok(kronrod);
        }
        if depth >= MAX_PANEL_DEPTH {
            return Err(ReductionError::Quadrature(format!(
                "no convergence on [{lo}, {hi}] after {MAX_PANEL_DEPTH} refinements"
            )));
        }
        Ok(panel(f, lo, c, depth + 1)? + panel(f, c, hi, depth + 1)?)
    }

    if a == b {
        return Ok(0.0);
    }
    if a < b {
        panel(f, a, b, 0)
    } else {
        Ok(-panel(f, b, a, 0)?)
    }
}

enum CoreKind {
    Linear { slope: f64 },
    Integral { rhs: CompiledExpr },
    Separable { rhs: CompiledExpr },
}

struct CoreSolver {
    plan: Vec<(usize, CoreKind)>,
    start: Vec<f64>,
}

impl CoreSolver {
    /// Orders the core equations so each right-hand side only needs already
    /// solved coordinates: exact lines for constant speeds, cumulative
    /// integrals for solved dependencies, separation for one self-coupled
    /// equation.
    fn build(field: &VectorField, start: &[f64]) -> Result<CoreSolver, ReductionError> {
        let dim = field.chart.dim();
        let deps: Vec<BTreeSet<VarId>> =
            field.components.iter().map(|c| c.free_vars()).collect();
        let mut solved: BTreeSet<usize> = BTreeSet::new();
        let mut plan = Vec::new();
        while solved.len() < dim {
            let mut progressed = false;
            for i in 0..dim {
                if solved.contains(&i) || !deps[i].is_subset(&solved) {
                    continue;
                }
                let kind = match field.components[i].as_rational() {
                    Some(r) => CoreKind::Linear { slope: rat_to_f64(&r) },
                    None => CoreKind::Integral {
                        rhs: CompiledExpr::compile(&field.components[i]),
                    },
                };
                plan.push((i, kind));
                solved.insert(i);
                progressed = true;
            }
            if progressed {
                continue;
            }
            let unsolved: Vec<usize> = (0..dim).filter(|i| !solved.contains(i)).collect();
            let lone = unsolved.len() == 1
                && deps[unsolved[0]].iter().all(|&v| v == unsolved[0]);
            if lone {
                let i = unsolved[0];
                plan.push((i, CoreKind::Separable {
                    rhs: CompiledExpr::compile(&field.components[i]),
                }));
                solved.insert(i);
            } else {
                return Err(ReductionError::CoreUnsolvable {
                    unsolved: unsolved
                        .iter()
                        .map(|&i| field.chart.name(i).to_string())
                        .collect(),
                });
            }
        }
        Ok(CoreSolver { plan, start: start.to_vec() })
    }

    fn point(&self, s: f64) -> Result<Vec<f64>, ReductionError> {
        self.point_upto(s, self.plan.len())
    }

    fn point_upto(&self, s: f64, limit: usize) -> Result<Vec<f64>, ReductionError> {
        let mut x = self.start.clone();
        for (pos, (i, kind)) in self.plan[..limit].iter().enumerate() {
            x[*i] = match kind {
                CoreKind::Linear { slope } => self.start[*i] + slope * s,
                CoreKind::Integral { rhs } => {
                    let value = gauss_kronrod(
                        &|sigma| {
                            let inner = self.point_upto(sigma, pos)?;
                            rhs.eval(&inner).ok_or_else(|| {
                                ReductionError::Quadrature(
                                    "an integrand left the evaluation domain".into(),
                                )
                            })
                        },
                        0.0,
                        s,
                    )?;
                    self.start[*i] + value
                }
                CoreKind::Separable { rhs } => self.invert_separable(rhs, *i, s)?,
            };
        }
        Ok(x)
    }

    /// Solves dy/ds = g(y) by integrating ds = dy/g and inverting the
    /// resulting monotone map with bracketing plus bisection.
    fn invert_separable(
        &self,
        rhs: &CompiledExpr,
        i: usize,
        s: f64,
    ) -> Result<f64, ReductionError> {
        let y0 = self.start[i];
        if s == 0.0 {
            return Ok(y0);
        }
        let g = |y: f64| -> Result<f64, ReductionError> {
            let mut p = self.start.clone();
            p[i] = y;
            rhs.eval(&p)
                .ok_or_else(|| ReductionError::Quadrature("the speed left its domain".into()))
        };
        let g0 = g(y0)?;
        if g0 == 0.0 {
            return Ok(y0);
        }
        let time_to = |y: f64| -> Result<f64, ReductionError> {
            gauss_kronrod(&|eta| Ok(1.0 / g(eta)?), y0, y)
        };
        let dir = g0.signum() * s.signum();
        let mut step = 0.25 * (1.0 + y0.abs());
        let mut hi = y0;
        let mut reached = false;
        for _ in 0..80 {
            let cand = hi + dir * step;
            match time_to(cand) {
                Ok(t) if t.is_finite() => {
                    hi = cand;
                    if t.abs() >= s.abs() {
                        reached = true;
                        break;
                    }
                    step *= 2.0;
                }
                _ => {
                    step *= 0.5;
                    if step < 1e-12 {
                        break;
                    }
                }
            }
        }
        if !reached {
            return Err(ReductionError::Quadrature(
                "separation could not bracket the requested time".into(),
            ));
        }
        let mut lo = y0;
        let mut f_lo = -s;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let f_mid = time_to(mid)? - s;
            if f_mid.abs() <= 1e-12 * (1.0 + s.abs()) {
                return Ok(mid);
            }
            if (f_lo <= 0.0) == (f_mid <= 0.0) {
                lo = mid;
                f_lo = f_mid;
            } else {
                hi = mid;
            }
            if (hi - lo).abs() <= 1e-14 * (1.0 + lo.abs()) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

struct QuadRuntime {
    inverse: Vec<CompiledExpr>,
    rhs: CompiledExpr,
    initial: f64,
}

struct Pipeline {
    levels: Vec<QuadRuntime>,
    core: CoreSolver,
}

impl Pipeline {
    fn new(schedule: &QuadratureSchedule) -> Result<Pipeline, ReductionError> {
        let mut levels = Vec::new();
        let mut core = None;
        for (stage, initial) in schedule.stages.iter().zip(
            schedule
                .initials
                .iter()
                .copied()
                .map(Some)
                .chain(std::iter::repeat(None)),
        ) {
            match stage {
                Stage::Quadrature(q) => levels.push(QuadRuntime {
                    inverse: q.change.inverse.iter().map(CompiledExpr::compile).collect(),
                    rhs: CompiledExpr::compile(&q.rhs),
                    initial: initial.expect("one initial value per quadrature stage"),
                }),
                Stage::ReducedSystem { field } => {
                    core = Some(CoreSolver::build(field, &schedule.core_start)?);
                }
            }
        }
        Ok(Pipeline {
            levels,
            core: core.ok_or_else(|| {
                ReductionError::BadInput("the schedule is missing its core stage".into())
            })?,
        })
    }

    /// Coordinates at depth `level` of the cascade: level 0 is the original
    /// chart, each deeper level has one coordinate fewer.
    fn point_at_level(&self, level: usize, s: f64) -> Result<Vec<f64>, ReductionError> {
        if level == self.levels.len() {
            return self.core.point(s);
        }
        let rt = &self.levels[level];
        let mut inner = self.point_at_level(level + 1, s)?;
        let increment = gauss_kronrod(
            &|sigma| {
                let p = self.point_at_level(level + 1, sigma)?;
                rt.rhs.eval(&p).ok_or_else(|| {
                    ReductionError::Quadrature("a quadrature integrand left its domain".into())
                })
            },
            0.0,
            s,
        )?;
        inner.push(rt.initial + increment);
        rt.inverse
            .iter()
            .map(|e| {
                e.eval(&inner).ok_or_else(|| {
                    ReductionError::Quadrature(
                        "an inverse coordinate map left its domain".into(),
                    )
                })
            })
            .collect()
    }
}

/// Integrates the system by the reduction cascade: one quadrature per
/// symmetry, a dependency cascade for the residual core (a unit-rate
/// coordinate such as extended time integrates trivially in the first
/// round), and back substitution through the accumulated changes.
pub fn integrate_by_quadratures(
    v: &VectorField,
    symmetries: &[VectorField],
    x0: &[f64],
    t_grid: &[f64],
) -> Result<Trajectory, ReductionError> {
    if t_grid.is_empty() {
        return Err(ReductionError::BadInput("the time grid is empty".into()));
    }
    if t_grid.windows(2).any(|w| w[0] >= w[1]) || t_grid.iter().any(|t| !t.is_finite()) {
        return Err(ReductionError::BadInput(
            "the time grid must be finite and strictly increasing".into(),
        ));
    }
    let schedule = build_schedule(v, symmetries, x0)?;
    let pipeline = Pipeline::new(&schedule)?;
    let mut samples = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        samples.push((t, pipeline.point_at_level(0, t)?));
    }
    Ok(Trajectory { chart: v.chart.clone(), samples, step: 0.0, method: "quadrature" })
}

/// Reorders a symmetry package innermost-first using the solvable flag of
/// its commutator algebra, returning the flag's rational combinations.
pub fn package_elimination_order(
    fields: &[VectorField],
    seed: u64,
) -> Result<Vec<VectorField>, ReductionError> {
    if fields.is_empty() {
        return Err(ReductionError::BadInput("the symmetry package is empty".into()));
    }
    let algebra = FunctionAlgebra::for_fields(fields, seed)
        .map_err(|e| ReductionError::BadInput(format!("the package does not close: {e}")))?;
    let flag = algebra
        .solvable_flag()
        .map_err(|e| ReductionError::BadInput(format!("the package is not solvable: {e}")))?;
    let chart = fields[0].chart.clone();
    Ok(flag
        .elimination_order()
        .iter()
        .map(|dir| {
            let mut acc = VectorField::zero(chart.clone());
            for (c, f) in dir.iter().zip(fields) {
                if !c.is_zero() {
                    acc = acc.add(&f.scale(&Expr::num(c.clone())));
                }
            }
            acc
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn chart(names: &[&str]) -> CoordinateSystem {
        CoordinateSystem::auxiliary(names).unwrap()
    }

    fn field(ch: &CoordinateSystem, comps: &[&str]) -> VectorField {
        let exprs = comps.iter().map(|c| parse(c, ch).unwrap()).collect();
        VectorField::new(ch.clone(), exprs).unwrap()
    }

    #[test]
    fn translation_field_is_already_straight() {
        let ch = chart(&["x", "y"]);
        let u = field(&ch, &["1", "0"]);
        let change = straighten(&u, &[0.0, 0.0]).unwrap();
        assert_eq!(change.straightened(), "y2");
        assert_eq!(change.forward_point(&[1.0, 2.0]).unwrap(), vec![2.0, 1.0]);
        assert_eq!(change.inverse_point(&[2.0, 1.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn scaling_field_straightens_with_log_and_ratio() {
        let ch = chart(&["x", "y"]);
        let u = field(&ch, &["x", "y"]);
        let change = straighten(&u, &[1.0, 2.0]).unwrap();
        let y = change.forward_point(&[1.0, 2.0]).unwrap();
        assert!((y[0] - 2.0).abs() < 1e-12 && y[1].abs() < 1e-12);
        let back = change.inverse_point(&[2.0, 0.5]).unwrap();
        let fwd = change.forward_point(&back).unwrap();
        assert!((fwd[0] - 2.0).abs() < 1e-10 && (fwd[1] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn symmetric_linear_field_uses_rational_eigenbasis() {
        let ch = chart(&["x", "y"]);
        let u = field(&ch, &["y", "x"]);
        let change = straighten(&u, &[2.0, 1.0]).unwrap();
        let p = [2.1, 0.9];
        let rt = change.inverse_point(&change.forward_point(&p).unwrap()).unwrap();
        assert!((rt[0] - p[0]).abs() < 1e-10 && (rt[1] - p[1]).abs() < 1e-10);
    }

    #[test]
    fn rotation_field_gets_polar_coordinates() {
        let ch = chart(&["q", "p"]);
        let u = field(&ch, &["p", "-q"]);
        let change = straighten(&u, &[0.0, 1.0]).unwrap();
        let y = change.forward_point(&[0.0, 1.0]).unwrap();
        assert!((y[0] - 0.5).abs() < 1e-12 && y[1].abs() < 1e-12);
        let back = change.inverse_point(&[0.5, std::f64::consts::FRAC_PI_2]).unwrap();
        assert!((back[0] - 1.0).abs() < 1e-12 && back[1].abs() < 1e-12);
    }

    #[test]
    fn separable_linear_speed_uses_logarithm() {
        let ch = chart(&["x", "y"]);
        let u = field(&ch, &["0", "2*y + 1"]);
        let change = straighten(&u, &[5.0, 1.0]).unwrap();
        let y = change.forward_point(&[5.0, 1.0]).unwrap();
        assert!((y[0] - 5.0).abs() < 1e-12);
        assert!((y[1] - 3.0f64.ln() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn nonlinear_restoring_force_is_not_straightenable() {
        let ch = chart(&["q", "p"]);
        let u = field(&ch, &["p", "-q^3"]);
        match straighten(&u, &[0.0, 1.0]) {
            Err(ReductionError::NotStraightenable { probes }) => {
                assert!(probes.len() >= 3, "{probes:?}");
            }
            other => panic!("expected a probe failure, got {other:?}"),
        }
    }

    #[test]
    fn reduce_once_splits_the_shear_flow() {
        let ch = chart(&["x", "y"]);
        let v = field(&ch, &["y", "0"]);
        let u = field(&ch, &["1", "0"]);
        let (reduced, quad) = reduce_once(&v, &u, &[1.0, 2.0]).unwrap();
        assert_eq!(reduced.chart.dim(), 1);
        assert!(reduced.components[0].is_zero_expr());
        assert_eq!(quad.coordinate, "y2");
        assert_eq!(quad.rhs, Expr::var(0));
    }

    #[test]
    fn reduce_once_rejects_a_non_symmetry() {
        let ch = chart(&["x", "y"]);
        let v = field(&ch, &["y", "0"]);
        let u = field(&ch, &["0", "y"]);
        assert!(matches!(
            reduce_once(&v, &u, &[1.0, 2.0]),
            Err(ReductionError::NotASymmetry { stage: 1, .. })
        ));
    }

    #[test]
    fn shear_flow_integrates_to_a_line() {
        let ch = chart(&["x", "y"]);
        let v = field(&ch, &["y", "0"]);
        let syms = vec![field(&ch, &["1", "0"]), field(&ch, &["x", "y"])];
        let traj = integrate_by_quadratures(&v, &syms, &[1.0, 2.0], &[0.0, 0.5, 1.0]).unwrap();
        let expected = [[1.0, 2.0], [2.0, 2.0], [3.0, 2.0]];
        for ((_, x), want) in traj.samples.iter().zip(expected) {
            assert!((x[0] - want[0]).abs() < 1e-9 && (x[1] - want[1]).abs() < 1e-9, "{x:?}");
        }
    }

    #[test]
    fn reversed_elimination_order_is_detected() {
        let ch = chart(&["x", "y"]);
        let v = field(&ch, &["y", "0"]);
        let syms = vec![field(&ch, &["x", "y"]), field(&ch, &["1", "0"])];
        match integrate_by_quadratures(&v, &syms, &[1.0, 2.0], &[0.0, 1.0]) {
            Err(ReductionError::DependenceResidual { stage, .. }) => assert_eq!(stage, 2),
            other => panic!("expected a dependence failure at stage 2, got {other:?}"),
        }
    }

    #[test]
    fn harmonic_oscillator_solves_by_polar_quadrature() {
        let ch = chart(&["q", "p"]);
        let v = field(&ch, &["p", "-q"]);
        let grid: Vec<f64> = (0..=20).map(|k| 0.5 * k as f64).collect();
        let traj = integrate_by_quadratures(&v, &[v.clone()], &[0.0, 1.0], &grid).unwrap();
        for (t, x) in &traj.samples {
            assert!((x[0] - t.sin()).abs() < 1e-8, "q at {t}");
            assert!((x[1] - t.cos()).abs() < 1e-8, "p at {t}");
        }
    }

    #[test]
    fn conserved_contact_oscillator_z_comes_from_a_quadrature() {
        let ch = chart(&["q", "p", "z"]);
        let v = field(&ch, &["p", "-q", "p^2/2 - q^2/2"]);
        let x_h = v.clone();
        let reeb = field(&ch, &["0", "0", "1"]);
        let ordered = package_elimination_order(&[x_h, reeb], 7).unwrap();
        assert!(ordered[0].components[2].as_rational().is_some());
        let r2 = 2.0f64.sqrt();
        let grid: Vec<f64> = (0..=10).map(|k| 0.5 * k as f64).collect();
        let traj = integrate_by_quadratures(&v, &ordered, &[0.0, r2, 0.0], &grid).unwrap();
        for (t, x) in &traj.samples {
            assert!((x[0] - r2 * t.sin()).abs() < 1e-8, "q at {t}");
            assert!((x[1] - r2 * t.cos()).abs() < 1e-8, "p at {t}");
            assert!((x[2] - (2.0 * t).sin() / 2.0).abs() < 1e-8, "z at {t}");
        }
    }

    #[test]
    fn triangular_core_handles_extended_time() {
        let ch = chart(&["q", "p", "t"]);
        let v = field(&ch, &["p", "-t", "1"]);
        let syms = vec![field(&ch, &["1", "0", "0"])];
        let grid = [0.0, 1.0, 2.0];
        let traj = integrate_by_quadratures(&v, &syms, &[0.0, 1.0, 0.0], &grid).unwrap();
        for (t, x) in &traj.samples {
            assert!((x[2] - t).abs() < 1e-12, "time at {t}");
            assert!((x[1] - (1.0 - t * t / 2.0)).abs() < 1e-9, "p at {t}");
            assert!((x[0] - (t - t * t * t / 6.0)).abs() < 1e-9, "q at {t}");
        }
    }

    #[test]
    fn self_coupled_core_separates() {
        let ch = chart(&["y"]);
        let v = field(&ch, &["y^2"]);
        let traj = integrate_by_quadratures(&v, &[], &[1.0], &[0.0, 0.5]).unwrap();
        let (_, x) = &traj.samples[1];
        assert!((x[0] - 2.0).abs() < 1e-9, "{x:?}");
    }

    #[test]
    fn coupled_core_without_symmetries_is_rejected() {
        let ch = chart(&["q", "p"]);
        let v = field(&ch, &["p", "-q"]);
        match integrate_by_quadratures(&v, &[], &[0.0, 1.0], &[0.0, 1.0]) {
            Err(ReductionError::CoreUnsolvable { unsolved }) => {
                assert_eq!(unsolved, ["q", "p"]);
            }
            other => panic!("expected an unsolvable core, got {other:?}"),
        }
    }

    #[test]
    fn package_order_puts_the_ideal_first() {
        let ch = chart(&["x", "y"]);
        let translation = field(&ch, &["1", "0"]);
        let scaling = field(&ch, &["x", "y"]);
        let ordered =
            package_elimination_order(&[scaling.clone(), translation.clone()], 3).unwrap();
        assert_eq!(ordered[0].components, translation.components);
        assert_eq!(ordered[1].components, scaling.components);
    }
}
