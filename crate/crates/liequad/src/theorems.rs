//! Integrability-by-quadratures checkers, one per phase-space kind. Every
//! hypothesis is evaluated (no short-circuiting), the result is a structured
//! report, and a certified symmetry package is assembled for the reduction
//! pipeline.

use num::Zero;
use thiserror::Error;

use crate::brackets::evolution_derivative;
use crate::expr::{rat_to_f64, rationalize, Expr, Rat, Tri};
use crate::geometry::{
    dynamics_field, hamiltonian_vector_field, reeb_fields, GeometryError, GeometryKind,
    HamiltonianSystem, ScalarField, VectorField,
};
use crate::liealg::{
    structure_constants, AlgebraError, FieldCommutator, ScalarBracket, SolvableFlag,
    StructureConstants,
};
use crate::symmetry::{functional_independence, tangent_to_level_set, LevelSet, Tangency};

const VALUE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, PartialEq, Eq, Debug, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Fails,
    Unknown,
}

impl Verdict {
    fn from_tri(t: Tri) -> Self {
        match t {
            Tri::Zero => Verdict::Holds,
            Tri::NonZero => Verdict::Fails,
            Tri::Unknown => Verdict::Unknown,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Unknown => "unknown",
        }
    }
}

/// One evaluated hypothesis with a human-readable witness or counterexample.
#[derive(Clone, Debug)]
pub struct HypothesisEntry {
    pub name: &'static str,
    pub verdict: Verdict,
    pub detail: String,
}

/// Full outcome of an integrability check.
#[derive(Clone, Debug)]
pub struct IntegrabilityReport {
    pub geometry: GeometryKind,
    pub degrees: usize,
    pub liouville_mode: bool,
    pub hypotheses: Vec<HypothesisEntry>,
    /// Dimension of the joint level set, reported once functional
    /// independence holds (chart dimension minus the number of constants).
    pub level_set_dim: Option<usize>,
    pub verdict: Verdict,
    /// Symmetry fields in elimination order, with the distinguished field
    /// appended for contact-type geometries.
    pub package: Vec<(String, VectorField)>,
    pub notes: Vec<String>,
}

impl IntegrabilityReport {
    pub fn hypothesis(&self, name: &str) -> Option<&HypothesisEntry> {
        self.hypotheses.iter().find(|h| h.name == name)
    }
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum TheoremError {
    #[error("expected {expected} constants of motion for this geometry, got {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("expected {expected} level-set values, got {found}")]
    ValueArity { expected: usize, found: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Evaluates every hypothesis of the integrability criterion for the
/// system's geometry kind against the supplied constants of motion and
/// level-set values.
pub fn check_integrability(
    sys: &HamiltonianSystem,
    fs: &[ScalarField],
    alphas: &[f64],
    points: usize,
    seed: u64,
) -> Result<IntegrabilityReport, TheoremError> {
    run(sys, fs, alphas, points, seed, false)
}

/// Same pipeline with the bracket algebra additionally required to be
/// abelian (all structure constants zero).
pub fn liouville_corollary(
    sys: &HamiltonianSystem,
    fs: &[ScalarField],
    alphas: &[f64],
    points: usize,
    seed: u64,
) -> Result<IntegrabilityReport, TheoremError> {
    run(sys, fs, alphas, points, seed, true)
}

fn run(
    sys: &HamiltonianSystem,
    fs: &[ScalarField],
    alphas: &[f64],
    points: usize,
    seed: u64,
    liouville: bool,
) -> Result<IntegrabilityReport, TheoremError> {
    let g = &sys.geometry;
    let n = g.degrees();
    if fs.len() != n {
        return Err(TheoremError::ArityMismatch { expected: n, found: fs.len() });
    }
    if alphas.len() != n {
        return Err(TheoremError::ValueArity { expected: n, found: alphas.len() });
    }
    for f in fs {
        if f.chart != *g.chart() {
            return Err(TheoremError::Geometry(GeometryError::ChartMismatch {
                expected: g.chart().to_string(),
                found: f.chart.to_string(),
            }));
        }
    }
    let chart = g.chart().clone();
    let exprs: Vec<Expr> = fs.iter().map(|f| f.expr.clone()).collect();
    let show = |e: &Expr| e.display(&chart).to_string();
    let mut hypotheses: Vec<HypothesisEntry> = Vec::new();

    // Contact-type kinds require the Hamiltonian itself to be invariant
    // along the distinguished z-direction.
    if g.kind().has_contact_coordinate() {
        let z = g.z().expect("contact kinds have z");
        let hz = sys.hamiltonian.expr.diff(z);
        let verdict = Verdict::from_tri(hz.zero_test());
        let detail = match verdict {
            Verdict::Holds => "dH/dz vanishes identically".to_string(),
            _ => format!("dH/dz = {}", show(&hz)),
        };
        hypotheses.push(HypothesisEntry { name: "good_hamiltonian", verdict, detail });

        let mut worst = Tri::Zero;
        let mut offenders = Vec::new();
        for (i, f) in exprs.iter().enumerate() {
            let t = f.diff(z).zero_test();
            if t != Tri::Zero {
                offenders.push(format!("f{}", i + 1));
            }
            worst = worst.and(t);
        }
        let verdict = Verdict::from_tri(worst);
        let detail = match verdict {
            Verdict::Holds => "every constant of motion is independent of z".to_string(),
            _ => format!("z-dependence in {}", offenders.join(", ")),
        };
        hypotheses.push(HypothesisEntry { name: "reeb_invariant_constants", verdict, detail });
    }

    // Each candidate must be conserved along the dynamics.
    {
        let mut worst = Tri::Zero;
        let mut offender = None;
        for (i, f) in exprs.iter().enumerate() {
            let d = evolution_derivative(sys, f);
            let t = d.zero_test();
            if t != Tri::Zero && offender.is_none() {
                offender = Some(format!("f{} changes along the dynamics: {}", i + 1, show(&d)));
            }
            worst = worst.and(t);
        }
        let verdict = Verdict::from_tri(worst);
        let detail = match verdict {
            Verdict::Holds => format!("all {n} candidates are conserved"),
            _ => offender.unwrap_or_else(|| "inconclusive derivative".to_string()),
        };
        hypotheses.push(HypothesisEntry { name: "constants_of_motion", verdict, detail });
    }

    // Bracket closure with constant rational coefficients.
    let constants: Option<StructureConstants> =
        match structure_constants(&ScalarBracket(g), &exprs, seed) {
            Ok(c) => {
                let mut entries = Vec::new();
                for i in 0..n {
                    for j in (i + 1)..n {
                        for k in 0..n {
                            let v = c.get(i, j, k);
                            if !v.is_zero() {
                                entries.push(format!("c^{}_{}{} = {}", k + 1, i + 1, j + 1, v));
                            }
                        }
                    }
                }
                let detail = if entries.is_empty() {
                    "closes with all structure constants zero".to_string()
                } else {
                    format!("closes with {}", entries.join(", "))
                };
                hypotheses.push(HypothesisEntry {
                    name: "bracket_closure",
                    verdict: Verdict::Holds,
                    detail,
                });
                Some(c)
            }
            Err(e) => {
                let verdict = match e {
                    AlgebraError::NotClosed { .. } | AlgebraError::LinearlyDependentBasis { .. } => {
                        Verdict::Fails
                    }
                    _ => Verdict::Unknown,
                };
                hypotheses.push(HypothesisEntry {
                    name: "bracket_closure",
                    verdict,
                    detail: e.to_string(),
                });
                None
            }
        };

    if liouville {
        let (verdict, detail) = match &constants {
            Some(c) => {
                let mut nonzero = None;
                'outer: for i in 0..n {
                    for j in (i + 1)..n {
                        for k in 0..n {
                            if !c.get(i, j, k).is_zero() {
                                nonzero = Some(format!(
                                    "c^{}_{}{} = {} is nonzero",
                                    k + 1,
                                    i + 1,
                                    j + 1,
                                    c.get(i, j, k)
                                ));
                                break 'outer;
                            }
                        }
                    }
                }
                match nonzero {
                    None => (Verdict::Holds, "the bracket algebra is abelian".to_string()),
                    Some(d) => (Verdict::Fails, d),
                }
            }
            None => (Verdict::Unknown, "requires bracket closure".to_string()),
        };
        hypotheses.push(HypothesisEntry { name: "abelian_closure", verdict, detail });
    }

    // Solvability of the function algebra, with the elimination flag.
    let mut flag: Option<SolvableFlag> = None;
    {
        let (verdict, detail) = match &constants {
            Some(c) => {
                let dims = c.derived_series_dims();
                let dims_text = dims
                    .iter()
                    .map(|d| d.to_string())
                    .collect::<Vec<_>>()
                    .join(", ");
                if c.is_solvable() {
                    match c.solvable_flag() {
                        Ok(fl) if fl.verify(c) => {
                            flag = Some(fl);
                            (
                                Verdict::Holds,
                                format!("derived series dimensions {dims_text}"),
                            )
                        }
                        _ => (
                            Verdict::Unknown,
                            "derived series reaches zero but no verified ideal chain was built"
                                .to_string(),
                        ),
                    }
                } else {
                    (
                        Verdict::Fails,
                        format!(
                            "derived series dimensions {dims_text} stabilize above zero"
                        ),
                    )
                }
            }
            None => (Verdict::Unknown, "requires bracket closure".to_string()),
        };
        hypotheses.push(HypothesisEntry { name: "solvable_function_algebra", verdict, detail });
    }

    // Independent check at the vector-field level.
    let xfs: Vec<VectorField> = fs
        .iter()
        .map(|f| hamiltonian_vector_field(g, f).expect("charts already checked"))
        .collect();
    let function_algebra_solvable = constants.as_ref().map(StructureConstants::is_solvable);
    {
        let (verdict, detail) =
            match structure_constants(&FieldCommutator { chart_dim: chart.dim() }, &xfs, seed ^ 1)
            {
                Ok(c) => {
                    let dims = c.derived_series_dims();
                    let dims_text = dims
                        .iter()
                        .map(|d| d.to_string())
                        .collect::<Vec<_>>()
                        .join(", ");
                    if c.is_solvable() {
                        (
                            Verdict::Holds,
                            format!("commutator algebra derived series {dims_text}"),
                        )
                    } else {
                        (
                            Verdict::Fails,
                            format!("commutator algebra derived series {dims_text} stabilize above zero"),
                        )
                    }
                }
                Err(AlgebraError::LinearlyDependentBasis { .. })
                    if function_algebra_solvable == Some(true) =>
                {
                    (
                        Verdict::Holds,
                        "generated fields are linearly dependent; their span is an image of \
                         the solvable function algebra"
                            .to_string(),
                    )
                }
                Err(e) => {
                    let verdict = match e {
                        AlgebraError::NotClosed { .. } => Verdict::Fails,
                        _ => Verdict::Unknown,
                    };
                    (verdict, e.to_string())
                }
            };
        hypotheses.push(HypothesisEntry { name: "solvable_vector_fields", verdict, detail });
    }

    // Level-set points for the numeric hypotheses.
    let alphas_exact: Vec<Rat> = alphas.iter().map(|a| rationalize(*a, 1_000_000)).collect();
    let level_set = LevelSet::new(chart.clone(), exprs.clone(), alphas_exact);
    let found = if points > 0 {
        level_set.find_points(points, seed ^ 2)
    } else {
        Ok(Vec::new())
    };
    let sample_points: Vec<Vec<f64>> = found.as_deref().unwrap_or(&[]).to_vec();

    // Functional independence on the level set.
    let mut independence_holds = false;
    {
        let (verdict, detail) = if sample_points.is_empty() {
            let why = match &found {
                Err(e) => e.to_string(),
                Ok(_) => "no sample points requested".to_string(),
            };
            (Verdict::Unknown, why)
        } else {
            let rep = functional_independence(&chart, &exprs, &sample_points);
            if rep.independent {
                independence_holds = true;
                (
                    Verdict::Holds,
                    format!(
                        "differentials have full rank {} at {} level-set points",
                        n, rep.points_checked
                    ),
                )
            } else {
                (
                    Verdict::Fails,
                    format!(
                        "differentials drop to rank {} on the level set",
                        rep.min_rank
                    ),
                )
            }
        };
        hypotheses.push(HypothesisEntry { name: "functional_independence", verdict, detail });
    }

    // The level-set values must annihilate the structure constants.
    {
        let (verdict, detail) = match &constants {
            Some(c) => {
                let mut counterexample = None;
                'pairs: for i in 0..n {
                    for j in (i + 1)..n {
                        let s: f64 = (0..n)
                            .map(|k| rat_to_f64(c.get(i, j, k)) * alphas[k])
                            .sum();
                        if s.abs() > VALUE_TOLERANCE {
                            counterexample = Some((i + 1, j + 1, s));
                            break 'pairs;
                        }
                    }
                }
                match counterexample {
                    None => (
                        Verdict::Holds,
                        "the values annihilate every structure constant".to_string(),
                    ),
                    Some((i, j, s)) => (
                        Verdict::Fails,
                        format!("sum_k c^k_ij alpha_k = {s} at (i, j) = ({i}, {j})"),
                    ),
                }
            }
            None => (Verdict::Unknown, "requires bracket closure".to_string()),
        };
        hypotheses.push(HypothesisEntry { name: "level_set_compatibility", verdict, detail });
    }

    // Symmetry package: fields in the flag's elimination order, plus the
    // distinguished field the contact-type criteria add.
    let mut candidates: Vec<(String, VectorField)> = match &flag {
        Some(fl) => fl
            .elimination_order()
            .iter()
            .map(|dir| {
                let mut combo = Expr::zero();
                for (coeff, f) in dir.iter().zip(&exprs) {
                    if !coeff.is_zero() {
                        combo = combo.add_ref(&Expr::num(coeff.clone()).mul_ref(f));
                    }
                }
                let field = hamiltonian_vector_field(
                    g,
                    &ScalarField::new(chart.clone(), combo.clone()),
                )
                .expect("chart is the geometry's");
                (format!("X_{{{}}}", show(&combo)), field)
            })
            .collect(),
        None => fs
            .iter()
            .zip(&xfs)
            .map(|(f, x)| (format!("X_{{{}}}", show(&f.expr)), x.clone()))
            .collect(),
    };
    match g.kind() {
        GeometryKind::Contact | GeometryKind::Cocontact => {
            let distinguished = reeb_fields(g)
                .into_iter()
                .next()
                .expect("contact kinds have a distinguished field");
            candidates.push(distinguished);
        }
        _ => {}
    }

    // Tangency of the candidate fields and of the dynamics to the level set.
    {
        let dynamics = dynamics_field(sys)?;
        let mut checks: Vec<(String, Tangency)> = Vec::new();
        for (label, field) in &candidates {
            checks.push((
                label.clone(),
                tangent_to_level_set(field, &level_set, &sample_points),
            ));
        }
        checks.push((
            "dynamics".to_string(),
            tangent_to_level_set(&dynamics, &level_set, &sample_points),
        ));
        let mut verdict = Verdict::Holds;
        let mut parts = Vec::new();
        for (label, t) in &checks {
            let (word, v) = match t {
                Tangency::SymbolicIdentity => ("tangent identically", Verdict::Holds),
                Tangency::SymbolicOnLevelSet => ("tangent via combination", Verdict::Holds),
                Tangency::Numeric => ("tangent numerically", Verdict::Holds),
                Tangency::No => {
                    if sample_points.is_empty() {
                        ("not established", Verdict::Unknown)
                    } else {
                        ("leaves the level set", Verdict::Fails)
                    }
                }
            };
            if v == Verdict::Fails {
                verdict = Verdict::Fails;
            } else if v == Verdict::Unknown && verdict == Verdict::Holds {
                verdict = Verdict::Unknown;
            }
            parts.push(format!("{label}: {word}"));
        }
        hypotheses.push(HypothesisEntry {
            name: "level_set_tangency",
            verdict,
            detail: parts.join("; "),
        });
    }

    let verdict = hypotheses
        .iter()
        .fold(Verdict::Holds, |acc, h| match (acc, h.verdict) {
            (Verdict::Fails, _) | (_, Verdict::Fails) => Verdict::Fails,
            (Verdict::Unknown, _) | (_, Verdict::Unknown) => Verdict::Unknown,
            _ => Verdict::Holds,
        });

    let package = if flag.is_some() { candidates } else { Vec::new() };
    let mut notes = Vec::new();
    if g.kind().has_contact_coordinate() {
        notes.push(
            "sign convention: with the implemented field formula the constant function 1 \
             generates minus the distinguished z-direction; commutation statements are \
             unaffected"
                .to_string(),
        );
    }

    Ok(IntegrabilityReport {
        geometry: g.kind(),
        degrees: n,
        liouville_mode: liouville,
        hypotheses,
        level_set_dim: independence_holds.then(|| chart.dim() - n),
        verdict,
        package,
        notes,
    })
}
