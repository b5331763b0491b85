//! Finite-dimensional Lie algebra analysis over a basis of scalar functions
//! or vector fields: structure constants recovered numerically and verified
//! exactly, derived series, solvability, and codimension-1 ideal flags.

use nalgebra::{DMatrix, DVector};
use num::{One, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::brackets::coordinate_bracket;
use crate::expr::{rationalize, Expr, Rat, Tri};
use crate::geometry::{PhaseGeometry, VectorField};
use crate::symmetry::{commutator, field_zero_test};

const RANK_TOLERANCE: f64 = 1e-8;
const RESIDUAL_TOLERANCE: f64 = 1e-9;
const DENOMINATOR_LIMIT: u64 = 1_000_000;
const MAX_DRAWS: usize = 200;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("structure constants are not antisymmetric between elements {i} and {j}")]
    NotAntisymmetric { i: usize, j: usize },
    #[error("structure constants violate the Jacobi identity at elements ({i}, {j}, {k})")]
    JacobiViolation { i: usize, j: usize, k: usize },
    #[error(
        "basis elements are linearly dependent (smallest singular value {sigma:.3e} \
         of the evaluation matrix)"
    )]
    LinearlyDependentBasis { sigma: f64 },
    #[error("bracket of elements {i} and {j} does not stay in the span of the basis")]
    NotClosed { i: usize, j: usize },
    #[error("only {got} of {want} usable sample points found")]
    InsufficientSamples { got: usize, want: usize },
    #[error("the algebra is not solvable")]
    NotSolvable,
}

/// Subspace of Q^ambient kept in reduced row echelon form.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalSpan {
    ambient: usize,
    rows: Vec<Vec<Rat>>,
}

impl RationalSpan {
    pub fn new(ambient: usize) -> Self {
        Self { ambient, rows: Vec::new() }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Reduced row echelon basis, sorted by pivot column.
    pub fn basis(&self) -> &[Vec<Rat>] {
        &self.rows
    }

    fn pivot(v: &[Rat]) -> Option<usize> {
        v.iter().position(|x| !x.is_zero())
    }

    fn reduce(&self, v: &mut [Rat]) {
        for row in &self.rows {
            let p = Self::pivot(row).expect("stored rows are nonzero");
            if !v[p].is_zero() {
                let factor = v[p].clone();
                for (a, b) in v.iter_mut().zip(row) {
                    *a -= &factor * b;
                }
            }
        }
    }

    pub fn contains(&self, v: &[Rat]) -> bool {
        let mut w = v.to_vec();
        self.reduce(&mut w);
        w.iter().all(Rat::is_zero)
    }

    /// Adds a vector to the span; returns true when the rank grows.
    pub fn insert(&mut self, v: Vec<Rat>) -> bool {
        assert_eq!(v.len(), self.ambient);
        let mut w = v;
        self.reduce(&mut w);
        let Some(p) = Self::pivot(&w) else { return false };
        let lead = w[p].clone();
        for x in &mut w {
            *x /= &lead;
        }
        for row in &mut self.rows {
            if !row[p].is_zero() {
                let factor = row[p].clone();
                for (a, b) in row.iter_mut().zip(&w) {
                    *a -= &factor * b;
                }
            }
        }
        let at = self
            .rows
            .iter()
            .position(|r| Self::pivot(r).expect("nonzero") > p)
            .unwrap_or(self.rows.len());
        self.rows.insert(at, w);
        true
    }
}

/// Rational structure constants `c[i][j][k]` with `[e_i, e_j] = sum_k
/// c[i][j][k] e_k`, validated for antisymmetry and the Jacobi identity.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureConstants {
    m: usize,
    c: Vec<Vec<Vec<Rat>>>,
}

impl StructureConstants {
    pub fn new(c: Vec<Vec<Vec<Rat>>>) -> Result<Self, AlgebraError> {
        let m = c.len();
        assert!(
            c.iter().all(|p| p.len() == m && p.iter().all(|q| q.len() == m)),
            "structure tensor must be m*m*m"
        );
        for i in 0..m {
            for j in i..m {
                for k in 0..m {
                    if c[i][j][k] != -&c[j][i][k] {
                        return Err(AlgebraError::NotAntisymmetric { i: i + 1, j: j + 1 });
                    }
                }
            }
        }
        for i in 0..m {
            for j in (i + 1)..m {
                for k in (j + 1)..m {
                    for l in 0..m {
                        let mut s = Rat::zero();
                        for r in 0..m {
                            s += &c[i][j][r] * &c[r][k][l]
                                + &c[j][k][r] * &c[r][i][l]
                                + &c[k][i][r] * &c[r][j][l];
                        }
                        if !s.is_zero() {
                            return Err(AlgebraError::JacobiViolation {
                                i: i + 1,
                                j: j + 1,
                                k: k + 1,
                            });
                        }
                    }
                }
            }
        }
        Ok(Self { m, c })
    }

    pub fn zero(m: usize) -> Self {
        Self { m, c: vec![vec![vec![Rat::zero(); m]; m]; m] }
    }

    /// Builds the tensor from the entries `[e_i, e_j]` for `i < j`
    /// (0-based), filling the antisymmetric half automatically.
    pub fn from_pairs(
        m: usize,
        entries: &[((usize, usize), Vec<Rat>)],
    ) -> Result<Self, AlgebraError> {
        let mut c = vec![vec![vec![Rat::zero(); m]; m]; m];
        for ((i, j), v) in entries {
            assert!(*i < *j && *j < m && v.len() == m);
            for k in 0..m {
                c[*i][*j][k] = v[k].clone();
                c[*j][*i][k] = -v[k].clone();
            }
        }
        Self::new(c)
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> &Rat {
        &self.c[i][j][k]
    }

    /// Bracket of coefficient vectors: `w_k = sum_ij u_i v_j c[i][j][k]`.
    pub fn bracket_vectors(&self, u: &[Rat], v: &[Rat]) -> Vec<Rat> {
        let mut w = vec![Rat::zero(); self.m];
        for (i, ui) in u.iter().enumerate() {
            if ui.is_zero() {
                continue;
            }
            for (j, vj) in v.iter().enumerate() {
                if vj.is_zero() {
                    continue;
                }
                let uv = ui * vj;
                for k in 0..self.m {
                    let e = &self.c[i][j][k];
                    if !e.is_zero() {
                        w[k] += &uv * e;
                    }
                }
            }
        }
        w
    }

    /// Dimensions of the derived series, starting from the full algebra,
    /// until it reaches zero or stops shrinking.
    pub fn derived_series_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.m];
        let mut basis: Vec<Vec<Rat>> = (0..self.m)
            .map(|i| {
                let mut v = vec![Rat::zero(); self.m];
                v[i] = Rat::one();
                v
            })
            .collect();
        while *dims.last().unwrap() > 0 {
            let mut next = RationalSpan::new(self.m);
            for a in 0..basis.len() {
                for b in (a + 1)..basis.len() {
                    next.insert(self.bracket_vectors(&basis[a], &basis[b]));
                }
            }
            let d = next.rank();
            let prev = *dims.last().unwrap();
            dims.push(d);
            if d == prev {
                break;
            }
            basis = next.basis().to_vec();
        }
        dims
    }

    pub fn is_solvable(&self) -> bool {
        *self.derived_series_dims().last().unwrap() == 0
    }

    /// Builds an increasing chain of subspaces `0 = L_0 < L_1 < ... < L_m`
    /// with every `L_i` an ideal of `L_{i+1}` of codimension 1.
    ///
    /// Construction: any hyperplane of a nonzero solvable algebra that
    /// contains the derived subalgebra is an ideal; the complement direction
    /// discarded at each step is the first current basis direction outside
    /// the derived subalgebra, so the output is deterministic.
    pub fn solvable_flag(&self) -> Result<SolvableFlag, AlgebraError> {
        let mut peeled: Vec<Vec<Rat>> = Vec::new();
        let mut basis: Vec<Vec<Rat>> = (0..self.m)
            .map(|i| {
                let mut v = vec![Rat::zero(); self.m];
                v[i] = Rat::one();
                v
            })
            .collect();
        while !basis.is_empty() {
            let mut derived = RationalSpan::new(self.m);
            for a in 0..basis.len() {
                for b in (a + 1)..basis.len() {
                    derived.insert(self.bracket_vectors(&basis[a], &basis[b]));
                }
            }
            if derived.rank() >= basis.len() {
                return Err(AlgebraError::NotSolvable);
            }
            let mut span = derived.clone();
            let mut added: Vec<Vec<Rat>> = Vec::new();
            for v in &basis {
                if span.insert(v.clone()) {
                    added.push(v.clone());
                }
            }
            peeled.push(added[0].clone());
            let mut next: Vec<Vec<Rat>> = derived.basis().to_vec();
            next.extend(added.into_iter().skip(1));
            basis = next;
        }
        peeled.reverse();
        Ok(SolvableFlag { ambient: self.m, directions: peeled })
    }
}

/// Chain of subspaces `0 = L_0 < L_1 < ... < L_m = g` with `dim L_i = i`
/// and each `L_i` an ideal of `L_{i+1}`; `L_i` is the span of
/// `directions[..i]` over the algebra basis.
#[derive(Clone, Debug, PartialEq)]
pub struct SolvableFlag {
    ambient: usize,
    pub directions: Vec<Vec<Rat>>,
}

impl SolvableFlag {
    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    /// Directions in the order a reduction should eliminate them: the line
    /// spanning `L_1` first, the last complement direction last.
    pub fn elimination_order(&self) -> &[Vec<Rat>] {
        &self.directions
    }

    /// Checks the chain conditions exactly: dimensions step by one and
    /// `[L_{i+1}, L_i]` stays inside `L_i`.
    pub fn verify(&self, c: &StructureConstants) -> bool {
        if self.directions.len() != self.ambient || c.dim() != self.ambient {
            return false;
        }
        let mut lower = RationalSpan::new(self.ambient);
        for i in 0..self.ambient {
            for u in &self.directions[..=i] {
                for v in &self.directions[..i] {
                    if !lower.contains(&c.bracket_vectors(u, v)) {
                        return false;
                    }
                }
            }
            if !lower.insert(self.directions[i].clone()) {
                return false;
            }
        }
        true
    }
}

/// How to bracket, evaluate, and zero-test one kind of algebra element.
pub trait BracketContext {
    type Element: Clone;
    fn bracket(&self, a: &Self::Element, b: &Self::Element) -> Self::Element;
    /// Flattened numeric values at a point; `None` off the domain.
    fn values(&self, e: &Self::Element, x: &[f64]) -> Option<Vec<f64>>;
    /// `target - sum_k coeffs[k] * basis[k]`.
    fn combination_residual(
        &self,
        target: &Self::Element,
        coeffs: &[Rat],
        basis: &[Self::Element],
    ) -> Self::Element;
    fn zero_test(&self, e: &Self::Element) -> Tri;
    /// Dimension of the chart the elements live on.
    fn sample_dim(&self) -> usize;
    /// Numbers produced per evaluation (1 for scalars, chart dimension for
    /// vector fields).
    fn value_len(&self) -> usize;
}

/// Scalar functions on a phase space under its bracket.
pub struct ScalarBracket<'a>(pub &'a PhaseGeometry);

impl BracketContext for ScalarBracket<'_> {
    type Element = Expr;

    fn bracket(&self, a: &Expr, b: &Expr) -> Expr {
        coordinate_bracket(self.0, a, b)
    }

    fn values(&self, e: &Expr, x: &[f64]) -> Option<Vec<f64>> {
        match e.evaluate(x) {
            Ok(v) if v.is_finite() => Some(vec![v]),
            _ => None,
        }
    }

    fn combination_residual(&self, target: &Expr, coeffs: &[Rat], basis: &[Expr]) -> Expr {
        let mut out = target.clone();
        for (c, b) in coeffs.iter().zip(basis) {
            if !c.is_zero() {
                out = out - Expr::num(c.clone()) * b.clone();
            }
        }
        out
    }

    fn zero_test(&self, e: &Expr) -> Tri {
        e.zero_test()
    }

    fn sample_dim(&self) -> usize {
        self.0.dim()
    }

    fn value_len(&self) -> usize {
        1
    }
}

/// Vector fields on a common chart under the commutator.
pub struct FieldCommutator {
    pub chart_dim: usize,
}

impl BracketContext for FieldCommutator {
    type Element = VectorField;

    fn bracket(&self, a: &VectorField, b: &VectorField) -> VectorField {
        commutator(a, b)
    }

    fn values(&self, e: &VectorField, x: &[f64]) -> Option<Vec<f64>> {
        let mut out = Vec::with_capacity(e.components.len());
        for c in &e.components {
            match c.evaluate(x) {
                Ok(v) if v.is_finite() => out.push(v),
                _ => return None,
            }
        }
        Some(out)
    }

    fn combination_residual(
        &self,
        target: &VectorField,
        coeffs: &[Rat],
        basis: &[VectorField],
    ) -> VectorField {
        let mut out = target.clone();
        for (c, b) in coeffs.iter().zip(basis) {
            if !c.is_zero() {
                out = out.add(&b.scale(&Expr::num(-c.clone())));
            }
        }
        out
    }

    fn zero_test(&self, e: &VectorField) -> Tri {
        field_zero_test(e)
    }

    fn sample_dim(&self) -> usize {
        self.chart_dim
    }

    fn value_len(&self) -> usize {
        self.chart_dim
    }
}

/// Recovers exact rational structure constants of a family under the
/// context's bracket.
///
/// The basis and all pair brackets are evaluated at `m + 5` random points;
/// the least-squares coefficients are snapped to nearby rationals and the
/// closure residual is then re-verified symbolically (or numerically at 25
/// further points when the symbolic test is inconclusive).
pub fn structure_constants<C: BracketContext>(
    ctx: &C,
    basis: &[C::Element],
    seed: u64,
) -> Result<StructureConstants, AlgebraError> {
    let m = basis.len();
    if m == 0 {
        return Ok(StructureConstants::zero(0));
    }
    let mut pairs = Vec::new();
    for i in 0..m {
        for j in (i + 1)..m {
            pairs.push((i, j, ctx.bracket(&basis[i], &basis[j])));
        }
    }

    let want = m + 5;
    let dim = ctx.sample_dim();
    let vl = ctx.value_len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis_samples: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut bracket_samples: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut draws = 0;
    while basis_samples.len() < want && draws < MAX_DRAWS {
        draws += 1;
        let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let Some(bv) = basis
            .iter()
            .map(|e| ctx.values(e, &x))
            .collect::<Option<Vec<_>>>()
        else {
            continue;
        };
        let Some(kv) = pairs
            .iter()
            .map(|(_, _, e)| ctx.values(e, &x))
            .collect::<Option<Vec<_>>>()
        else {
            continue;
        };
        basis_samples.push(bv);
        bracket_samples.push(kv);
    }
    if basis_samples.len() < want {
        return Err(AlgebraError::InsufficientSamples { got: basis_samples.len(), want });
    }

    let rows = basis_samples.len() * vl;
    let mut a = DMatrix::zeros(rows, m);
    let mut rhs: Vec<DVector<f64>> = pairs.iter().map(|_| DVector::zeros(rows)).collect();
    for (s, sample) in basis_samples.iter().enumerate() {
        for r in 0..vl {
            let row = s * vl + r;
            let norm = sample.iter().map(|v| v[r] * v[r]).sum::<f64>().sqrt();
            let w = if norm > 1e-12 { 1.0 / norm } else { 1.0 };
            for k in 0..m {
                a[(row, k)] = sample[k][r] * w;
            }
            for (pi, vals) in bracket_samples[s].iter().enumerate() {
                rhs[pi][row] = vals[r] * w;
            }
        }
    }
    let svd = a.svd(true, true);
    let sigma = svd
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if !(sigma > RANK_TOLERANCE) {
        return Err(AlgebraError::LinearlyDependentBasis { sigma });
    }

    let mut c = vec![vec![vec![Rat::zero(); m]; m]; m];
    for (pi, (i, j, br)) in pairs.iter().enumerate() {
        let report = || AlgebraError::NotClosed { i: *i + 1, j: *j + 1 };
        let sol = svd.solve(&rhs[pi], 1e-12).map_err(|_| report())?;
        let coeffs: Vec<Rat> = sol
            .iter()
            .map(|v| rationalize(*v, DENOMINATOR_LIMIT))
            .collect();
        let residual = ctx.combination_residual(br, &coeffs, basis);
        let ok = match ctx.zero_test(&residual) {
            Tri::Zero => true,
            Tri::NonZero => false,
            Tri::Unknown => residual_small(ctx, &residual, &mut rng)?,
        };
        if !ok {
            return Err(report());
        }
        for k in 0..m {
            c[*i][*j][k] = coeffs[k].clone();
            c[*j][*i][k] = -coeffs[k].clone();
        }
    }
    StructureConstants::new(c)
}

fn residual_small<C: BracketContext>(
    ctx: &C,
    e: &C::Element,
    rng: &mut ChaCha8Rng,
) -> Result<bool, AlgebraError> {
    let dim = ctx.sample_dim();
    let mut checked = 0;
    let mut draws = 0;
    while checked < 25 && draws < MAX_DRAWS {
        draws += 1;
        let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
        if let Some(vals) = ctx.values(e, &x) {
            if vals.iter().any(|v| v.abs() > RESIDUAL_TOLERANCE) {
                return Ok(false);
            }
            checked += 1;
        }
    }
    if checked < 25 {
        return Err(AlgebraError::InsufficientSamples { got: checked, want: 25 });
    }
    Ok(true)
}

/// A closed family of elements with its verified structure constants.
#[derive(Clone, Debug)]
pub struct FunctionAlgebra<E> {
    pub basis: Vec<E>,
    pub constants: StructureConstants,
}

impl<E> FunctionAlgebra<E> {
    pub fn is_solvable(&self) -> bool {
        self.constants.is_solvable()
    }

    pub fn solvable_flag(&self) -> Result<SolvableFlag, AlgebraError> {
        self.constants.solvable_flag()
    }
}

impl FunctionAlgebra<Expr> {
    pub fn for_functions(
        g: &PhaseGeometry,
        functions: &[Expr],
        seed: u64,
    ) -> Result<Self, AlgebraError> {
        let constants = structure_constants(&ScalarBracket(g), functions, seed)?;
        Ok(Self { basis: functions.to_vec(), constants })
    }
}

impl FunctionAlgebra<VectorField> {
    pub fn for_fields(fields: &[VectorField], seed: u64) -> Result<Self, AlgebraError> {
        let chart_dim = fields.first().map_or(0, |f| f.chart.dim());
        let constants = structure_constants(&FieldCommutator { chart_dim }, fields, seed)?;
        Ok(Self { basis: fields.to_vec(), constants })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::geometry::GeometryKind;
    use num::FromPrimitive;

    fn r(n: i64) -> Rat {
        Rat::from_i64(n).unwrap()
    }

    fn rv(v: &[i64]) -> Vec<Rat> {
        v.iter().map(|n| r(*n)).collect()
    }

    #[test]
    fn span_insert_and_membership() {
        let mut s = RationalSpan::new(3);
        assert!(s.insert(rv(&[1, 2, 3])));
        assert!(!s.insert(rv(&[2, 4, 6])));
        assert_eq!(s.rank(), 1);
        assert!(s.contains(&rv(&[-3, -6, -9])));
        assert!(!s.contains(&rv(&[1, 0, 0])));
        assert!(s.insert(rv(&[1, 2, 4])));
        assert_eq!(s.rank(), 2);
        assert!(s.contains(&rv(&[0, 0, 1])));
        // Rows stay in reduced echelon form.
        assert_eq!(s.basis()[0], rv(&[1, 2, 0]));
        assert_eq!(s.basis()[1], rv(&[0, 0, 1]));
    }

    #[test]
    fn affine_pair_constants_and_flag() {
        let g = PhaseGeometry::new(GeometryKind::Symplectic, 1).unwrap();
        let chart = g.chart();
        let basis = vec![
            parse("p1", chart).unwrap(),
            parse("q1*p1", chart).unwrap(),
        ];
        let c = structure_constants(&ScalarBracket(&g), &basis, 5).unwrap();
        assert_eq!(*c.get(0, 1, 0), r(-1));
        assert_eq!(*c.get(0, 1, 1), r(0));
        assert_eq!(*c.get(1, 0, 0), r(1));
        assert_eq!(c.derived_series_dims(), vec![2, 1, 0]);
        assert!(c.is_solvable());
        let flag = c.solvable_flag().unwrap();
        // The 1-dimensional member is the ideal spanned by the first
        // element; the second element is the discarded complement.
        assert_eq!(flag.directions[0], rv(&[1, 0]));
        assert_eq!(flag.directions[1], rv(&[0, 1]));
        assert!(flag.verify(&c));
    }

    #[test]
    fn canonical_pair_is_not_closed() {
        let g = PhaseGeometry::new(GeometryKind::Symplectic, 1).unwrap();
        let chart = g.chart();
        let basis = vec![parse("q1", chart).unwrap(), parse("p1", chart).unwrap()];
        assert_eq!(
            structure_constants(&ScalarBracket(&g), &basis, 5),
            Err(AlgebraError::NotClosed { i: 1, j: 2 })
        );
    }

    #[test]
    fn heisenberg_triple_closes() {
        let g = PhaseGeometry::new(GeometryKind::Symplectic, 1).unwrap();
        let chart = g.chart();
        let basis = vec![
            parse("q1", chart).unwrap(),
            parse("p1", chart).unwrap(),
            Expr::one(),
        ];
        let c = structure_constants(&ScalarBracket(&g), &basis, 5).unwrap();
        assert_eq!(*c.get(0, 1, 2), r(1));
        assert_eq!(c.derived_series_dims(), vec![3, 1, 0]);
        let flag = c.solvable_flag().unwrap();
        assert!(flag.verify(&c));
    }

    #[test]
    fn singleton_constants_vanish() {
        let g = PhaseGeometry::new(GeometryKind::Symplectic, 1).unwrap();
        let basis = vec![parse("q1*p1", g.chart()).unwrap()];
        let c = structure_constants(&ScalarBracket(&g), &basis, 5).unwrap();
        assert_eq!(*c.get(0, 0, 0), r(0));
        assert!(c.is_solvable());
        let flag = c.solvable_flag().unwrap();
        assert_eq!(flag.directions, vec![rv(&[1])]);
    }

    #[test]
    fn dependent_basis_rejected() {
        let g = PhaseGeometry::new(GeometryKind::Symplectic, 1).unwrap();
        let chart = g.chart();
        let basis = vec![
            parse("p1", chart).unwrap(),
            parse("2*p1", chart).unwrap(),
        ];
        assert!(matches!(
            structure_constants(&ScalarBracket(&g), &basis, 5),
            Err(AlgebraError::LinearlyDependentBasis { .. })
        ));
    }

    #[test]
    fn sl2_is_not_solvable() {
        // Basis (e, f, h): [e,f] = h, [e,h] = -2e, [f,h] = 2f.
        let c = StructureConstants::from_pairs(
            3,
            &[
                ((0, 1), rv(&[0, 0, 1])),
                ((0, 2), rv(&[-2, 0, 0])),
                ((1, 2), rv(&[0, 2, 0])),
            ],
        )
        .unwrap();
        assert_eq!(c.derived_series_dims(), vec![3, 3]);
        assert!(!c.is_solvable());
        assert_eq!(c.solvable_flag(), Err(AlgebraError::NotSolvable));
    }

    #[test]
    fn abelian_flag_discards_first_direction() {
        let c = StructureConstants::zero(2);
        assert!(c.is_solvable());
        let flag = c.solvable_flag().unwrap();
        // Both subspaces are ideals; the deterministic rule discards the
        // first basis direction, so the chain grows from the second.
        assert_eq!(flag.directions[0], rv(&[0, 1]));
        assert_eq!(flag.directions[1], rv(&[1, 0]));
        assert!(flag.verify(&c));
        assert_eq!(flag.elimination_order()[0], rv(&[0, 1]));
    }

    #[test]
    fn invalid_tensors_rejected() {
        let mut c = vec![vec![vec![Rat::zero(); 2]; 2]; 2];
        c[0][1][0] = r(1);
        assert_eq!(
            StructureConstants::new(c),
            Err(AlgebraError::NotAntisymmetric { i: 1, j: 2 })
        );
        // [e1,e2] = e2, [e2,e3] = e3, [e1,e3] = 0 breaks Jacobi.
        assert_eq!(
            StructureConstants::from_pairs(
                3,
                &[((0, 1), rv(&[0, 1, 0])), ((1, 2), rv(&[0, 0, 1]))],
            ),
            Err(AlgebraError::JacobiViolation { i: 1, j: 2, k: 3 })
        );
    }

    #[test]
    fn field_commutator_constants() {
        let chart = crate::expr::CoordinateSystem::auxiliary(&["x", "y"]).unwrap();
        let fields = vec![
            VectorField::new(chart.clone(), vec![Expr::one(), Expr::zero()]).unwrap(),
            VectorField::new(
                chart.clone(),
                vec![parse("x", &chart).unwrap(), parse("y", &chart).unwrap()],
            )
            .unwrap(),
        ];
        let alg = FunctionAlgebra::for_fields(&fields, 5).unwrap();
        assert_eq!(*alg.constants.get(0, 1, 0), r(1));
        assert_eq!(*alg.constants.get(0, 1, 1), r(0));
        assert!(alg.is_solvable());
        let flag = alg.solvable_flag().unwrap();
        // The translation spans the derived subalgebra, hence the ideal line.
        assert_eq!(flag.directions[0], rv(&[1, 0]));
        assert!(flag.verify(&alg.constants));
    }
}
