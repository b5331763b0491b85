//! Vector-field symmetries, the correspondence between function brackets and
//! field commutators, and level sets of conserved-quantity families.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::brackets::coordinate_bracket;
use crate::expr::{rat_to_f64, rationalize, CoordinateSystem, Expr, Rat, Tri};
use crate::geometry::{
    hamiltonian_vector_field, GeometryKind, PhaseGeometry, ScalarField, VectorField,
};

const RANK_TOLERANCE: f64 = 1e-8;
const NEWTON_TOLERANCE: f64 = 1e-11;
const NEWTON_SEEDS: usize = 50;
const NEWTON_ITERATIONS: usize = 100;
const TANGENCY_TOLERANCE: f64 = 1e-8;
const FIT_DENOMINATOR_LIMIT: u64 = 1_000_000;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum SymmetryError {
    #[error("identity does not apply: {0}")]
    Inapplicable(String),
    #[error("no point found on the level set after {attempts} attempts")]
    NoLevelSetPoints { attempts: usize },
}

/// Lie bracket of vector fields, `[x, y]_i = x(y_i) - y(x_i)`.
pub fn commutator(x: &VectorField, y: &VectorField) -> VectorField {
    debug_assert_eq!(x.chart, y.chart);
    let components = (0..x.chart.dim())
        .map(|i| x.apply(&y.components[i]) - y.apply(&x.components[i]))
        .collect();
    VectorField { chart: x.chart.clone(), components }
}

/// Three-valued test of whether a vector field vanishes identically.
pub fn field_zero_test(v: &VectorField) -> Tri {
    v.components
        .iter()
        .map(Expr::zero_test)
        .fold(Tri::Zero, Tri::and)
}

/// Whether `u` is a symmetry of `v`, i.e. the two fields commute.
pub fn is_symmetry(u: &VectorField, v: &VectorField) -> Tri {
    field_zero_test(&commutator(u, v))
}

/// Checks `X_{f,h} + [X_f, X_h] = 0`: the map from functions to Hamiltonian
/// fields turns brackets into reversed commutators.
///
/// On contact and cocontact spaces the identity only applies to functions
/// independent of `z`; other inputs are rejected.
pub fn check_antihomomorphism(
    g: &PhaseGeometry,
    f: &Expr,
    h: &Expr,
) -> Result<Tri, SymmetryError> {
    if g.kind().has_contact_coordinate() {
        let z = g.z().expect("contact kinds have z");
        if !f.diff(z).is_zero_expr() || !h.diff(z).is_zero_expr() {
            return Err(SymmetryError::Inapplicable(
                "on contact-type spaces the bracket-to-commutator identity needs both \
                 functions independent of z"
                    .into(),
            ));
        }
    }
    let chart = g.chart().clone();
    let xf = hamiltonian_vector_field(g, &ScalarField::new(chart.clone(), f.clone()))
        .expect("chart is the geometry's");
    let xh = hamiltonian_vector_field(g, &ScalarField::new(chart.clone(), h.clone()))
        .expect("chart is the geometry's");
    let fh = coordinate_bracket(g, f, h);
    let xfh = hamiltonian_vector_field(g, &ScalarField::new(chart, fh))
        .expect("chart is the geometry's");
    Ok(field_zero_test(&xfh.add(&commutator(&xf, &xh))))
}

/// Identities tying the distinguished fields to the bracket, as
/// `(description, result)` pairs for the identities that apply to this
/// geometry and pair of functions.
///
/// Cosymplectic: `X_{R(f)} + [X_f, R] = 0` for any `f`. Cocontact: the same
/// with `R_t`. Contact and cocontact: `R(f,h-bracket) = 0` whenever both
/// functions are independent of `z` (with `R_z` in the cocontact case).
pub fn reeb_compatibility(g: &PhaseGeometry, f: &Expr, h: &Expr) -> Vec<(String, Tri)> {
    let mut out = Vec::new();
    let chart = g.chart().clone();
    let time_identity = |t: usize, name: &str| -> (String, Tri) {
        let rf = f.diff(t);
        let xrf = hamiltonian_vector_field(g, &ScalarField::new(chart.clone(), rf))
            .expect("chart is the geometry's");
        let xf = hamiltonian_vector_field(g, &ScalarField::new(chart.clone(), f.clone()))
            .expect("chart is the geometry's");
        let r = VectorField::unit(chart.clone(), t);
        let defect = xrf.add(&commutator(&xf, &r));
        (format!("X_[{name}(f)] + [X_f, {name}] = 0"), field_zero_test(&defect))
    };
    match g.kind() {
        GeometryKind::Symplectic => {}
        GeometryKind::Cosymplectic => {
            out.push(time_identity(g.t().unwrap(), "R"));
        }
        GeometryKind::Contact => {
            let z = g.z().unwrap();
            if f.diff(z).is_zero_expr() && h.diff(z).is_zero_expr() {
                let br = coordinate_bracket(g, f, h);
                out.push(("R({f,h}) = 0".to_string(), br.diff(z).zero_test()));
            }
        }
        GeometryKind::Cocontact => {
            out.push(time_identity(g.t().unwrap(), "R_t"));
            let z = g.z().unwrap();
            if f.diff(z).is_zero_expr() && h.diff(z).is_zero_expr() {
                let br = coordinate_bracket(g, f, h);
                out.push(("R_z({f,h}) = 0".to_string(), br.diff(z).zero_test()));
            }
        }
    }
    out
}

/// Joint level set `f_i = alpha_i` of a family of functions on a chart.
#[derive(Clone, Debug)]
pub struct LevelSet {
    pub chart: CoordinateSystem,
    pub functions: Vec<Expr>,
    pub values: Vec<Rat>,
}

impl LevelSet {
    pub fn new(chart: CoordinateSystem, functions: Vec<Expr>, values: Vec<Rat>) -> Self {
        assert_eq!(functions.len(), values.len());
        Self { chart, functions, values }
    }

    pub fn values_f64(&self) -> Vec<f64> {
        self.values.iter().map(rat_to_f64).collect()
    }

    /// Residual `max_i |f_i(x) - alpha_i|`, or `None` off the domain.
    pub fn residual(&self, x: &[f64]) -> Option<f64> {
        let alphas = self.values_f64();
        let mut worst: f64 = 0.0;
        for (f, a) in self.functions.iter().zip(&alphas) {
            let v = f.evaluate(x).ok()?;
            worst = worst.max((v - a).abs());
        }
        Some(worst)
    }

    /// Finds `count` points on the level set by damped Gauss-Newton from
    /// random seeds in `[-2, 2]^dim`.
    pub fn find_points(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>, SymmetryError> {
        let dim = self.chart.dim();
        let m = self.functions.len();
        let alphas = self.values_f64();
        let jacobian: Vec<Vec<Expr>> = self
            .functions
            .iter()
            .map(|f| (0..dim).map(|v| f.diff(v)).collect())
            .collect();
        let residual = |x: &[f64]| -> Option<DVector<f64>> {
            let mut r = DVector::zeros(m);
            for i in 0..m {
                let v = self.functions[i].evaluate(x).ok()?;
                if !v.is_finite() {
                    return None;
                }
                r[i] = v - alphas[i];
            }
            Some(r)
        };

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points: Vec<Vec<f64>> = Vec::new();
        let mut attempts = 0;
        while points.len() < count && attempts < NEWTON_SEEDS {
            attempts += 1;
            let mut x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let Some(mut r) = residual(&x) else { continue };
            let mut converged = r.amax() <= NEWTON_TOLERANCE;
            for _ in 0..NEWTON_ITERATIONS {
                if converged {
                    break;
                }
                let mut jdata = Vec::with_capacity(m * dim);
                let mut ok = true;
                for row in &jacobian {
                    for e in row {
                        match e.evaluate(&x) {
                            Ok(v) if v.is_finite() => jdata.push(v),
                            _ => {
                                ok = false;
                                break;
                            }
                        }
                    }
                    if !ok {
                        break;
                    }
                }
                if !ok {
                    break;
                }
                let j = DMatrix::from_row_slice(m, dim, &jdata);
                let svd = j.svd(true, true);
                let Ok(step) = svd.solve(&r, 1e-12) else { break };
                let mut advanced = false;
                let mut damping = 1.0;
                for _ in 0..8 {
                    let trial: Vec<f64> =
                        (0..dim).map(|i| x[i] - damping * step[i]).collect();
                    if let Some(tr) = residual(&trial) {
                        if tr.amax() < r.amax() {
                            x = trial;
                            r = tr;
                            advanced = true;
                            break;
                        }
                    }
                    damping /= 2.0;
                }
                if !advanced {
                    break;
                }
                converged = r.amax() <= NEWTON_TOLERANCE;
            }
            if converged && points.iter().all(|p| max_dist(p, &x) > 1e-9) {
                points.push(x);
            }
        }
        if points.len() < count {
            return Err(SymmetryError::NoLevelSetPoints { attempts });
        }
        Ok(points)
    }
}

fn max_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// How strongly tangency of a field to a level set was established.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Tangency {
    /// Every `field(f_i)` vanishes identically.
    SymbolicIdentity,
    /// Each `field(f_i)` is a constant-coefficient combination of the
    /// `f_j - alpha_j`, so it vanishes on the level set.
    SymbolicOnLevelSet,
    /// `|field(f_i)|` is below tolerance at every supplied level-set point.
    Numeric,
    /// Tangency could not be established.
    No,
}

/// Decides whether `field` is tangent to the level set, first symbolically
/// and then numerically at the supplied on-set points.
pub fn tangent_to_level_set(
    field: &VectorField,
    ls: &LevelSet,
    points: &[Vec<f64>],
) -> Tangency {
    let derivatives: Vec<Expr> = ls.functions.iter().map(|f| field.apply(f)).collect();
    if derivatives.iter().all(|d| d.zero_test() == Tri::Zero) {
        return Tangency::SymbolicIdentity;
    }

    let shifted: Vec<Expr> = ls
        .functions
        .iter()
        .zip(&ls.values)
        .map(|(f, a)| f.clone() - Expr::num(a.clone()))
        .collect();
    if derivatives
        .iter()
        .all(|d| combination_of(d, &shifted, ls.chart.dim()))
    {
        return Tangency::SymbolicOnLevelSet;
    }

    if !points.is_empty()
        && points.iter().all(|x| {
            derivatives.iter().all(|d| match d.evaluate(x) {
                Ok(v) => v.abs() <= TANGENCY_TOLERANCE,
                Err(_) => false,
            })
        })
    {
        return Tangency::Numeric;
    }
    Tangency::No
}

/// Tries to certify `target = sum_j lambda_j * basis_j` with constant
/// rational coefficients, by least squares at random points followed by an
/// exact symbolic check.
fn combination_of(target: &Expr, basis: &[Expr], dim: usize) -> bool {
    if target.zero_test() == Tri::Zero {
        return true;
    }
    if basis.is_empty() {
        return false;
    }
    let m = basis.len();
    let want = m + 5;
    let mut rng = ChaCha8Rng::seed_from_u64(0x6c61_6d62);
    let mut rows: Vec<f64> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut draws = 0;
    while rhs.len() < want && draws < 200 {
        draws += 1;
        let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let t = match target.evaluate(&x) {
            Ok(v) if v.is_finite() => v,
            _ => continue,
        };
        let mut row = Vec::with_capacity(m);
        let mut ok = true;
        for b in basis {
            match b.evaluate(&x) {
                Ok(v) if v.is_finite() => row.push(v),
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        rows.extend_from_slice(&row);
        rhs.push(t);
    }
    if rhs.len() < want {
        return false;
    }
    let a = DMatrix::from_row_slice(rhs.len(), m, &rows);
    let b = DVector::from_vec(rhs);
    let svd = a.svd(true, true);
    let Ok(sol) = svd.solve(&b, 1e-12) else { return false };
    let mut residual = target.clone();
    for (lambda, base) in sol.iter().zip(basis) {
        let c = rationalize(*lambda, FIT_DENOMINATOR_LIMIT);
        residual = residual - Expr::num(c) * base.clone();
    }
    residual.zero_test() == Tri::Zero
}

/// Numeric rank evidence for a family of functions at sample points.
#[derive(Clone, Debug, PartialEq)]
pub struct IndependenceReport {
    /// True when the row-normalized Jacobian has full row rank at every
    /// checked point.
    pub independent: bool,
    /// Smallest Jacobian rank seen across the checked points.
    pub min_rank: usize,
    pub points_checked: usize,
}

/// Evaluates the Jacobian of the family at each point, row-normalizes it,
/// and counts singular values above tolerance.
pub fn functional_independence(
    chart: &CoordinateSystem,
    functions: &[Expr],
    points: &[Vec<f64>],
) -> IndependenceReport {
    let dim = chart.dim();
    let m = functions.len();
    let jacobian: Vec<Vec<Expr>> = functions
        .iter()
        .map(|f| (0..dim).map(|v| f.diff(v)).collect())
        .collect();
    let mut min_rank = m;
    let mut independent = true;
    let mut checked = 0;
    for x in points {
        let mut data = Vec::with_capacity(m * dim);
        let mut ok = true;
        for row in &jacobian {
            let mut vals = Vec::with_capacity(dim);
            for e in row {
                match e.evaluate(x) {
                    Ok(v) if v.is_finite() => vals.push(v),
                    _ => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                break;
            }
            let norm = vals.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-300 {
                for v in &mut vals {
                    *v /= norm;
                }
            }
            data.extend_from_slice(&vals);
        }
        if !ok {
            continue;
        }
        checked += 1;
        let j = DMatrix::from_row_slice(m, dim, &data);
        let rank = j
            .svd(false, false)
            .singular_values
            .iter()
            .filter(|s| **s > RANK_TOLERANCE)
            .count();
        min_rank = min_rank.min(rank);
        if rank < m {
            independent = false;
        }
    }
    if checked == 0 {
        independent = false;
        min_rank = 0;
    }
    IndependenceReport { independent, min_rank, points_checked: checked }
}
