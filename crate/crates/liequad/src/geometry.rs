//! Phase-space geometries in fixed Darboux-style charts, scalar and vector
//! fields on them, and the Hamiltonian/evolution vector fields of each kind.

use thiserror::Error;

use crate::expr::{
    parse, CoordRole, Coordinate, CoordinateSystem, Expr, ParseError, VarId,
};

#[derive(Clone, Copy, PartialEq, Eq, Debug, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryKind {
    Symplectic,
    Cosymplectic,
    Contact,
    Cocontact,
}

impl GeometryKind {
    pub fn name(self) -> &'static str {
        match self {
            GeometryKind::Symplectic => "symplectic",
            GeometryKind::Cosymplectic => "cosymplectic",
            GeometryKind::Contact => "contact",
            GeometryKind::Cocontact => "cocontact",
        }
    }

    pub fn parse_name(s: &str) -> Option<Self> {
        match s {
            "symplectic" => Some(GeometryKind::Symplectic),
            "cosymplectic" => Some(GeometryKind::Cosymplectic),
            "contact" => Some(GeometryKind::Contact),
            "cocontact" => Some(GeometryKind::Cocontact),
            _ => None,
        }
    }

    pub fn has_time(self) -> bool {
        matches!(self, GeometryKind::Cosymplectic | GeometryKind::Cocontact)
    }

    pub fn has_contact_coordinate(self) -> bool {
        matches!(self, GeometryKind::Contact | GeometryKind::Cocontact)
    }
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum GeometryError {
    #[error("number of degrees of freedom must be at least 1")]
    ZeroDegrees,
    #[error("field lives on chart {found} but the geometry uses {expected}")]
    ChartMismatch { expected: String, found: String },
    #[error("vector field has {found} components but the chart has {expected} coordinates")]
    ComponentCount { expected: usize, found: usize },
    #[error("expression uses coordinates outside the chart")]
    ForeignVariables,
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// A phase space of one of the four kinds, with its fixed chart:
/// symplectic `(q_i, p_i)`, cosymplectic `(q_i, p_i, t)`, contact
/// `(q_i, p_i, z)`, cocontact `(t, q_i, p_i, z)`.
#[derive(Clone, PartialEq, Debug)]
pub struct PhaseGeometry {
    kind: GeometryKind,
    n: usize,
    chart: CoordinateSystem,
}

impl PhaseGeometry {
    pub fn new(kind: GeometryKind, n: usize) -> Result<Self, GeometryError> {
        if n == 0 {
            return Err(GeometryError::ZeroDegrees);
        }
        let mut coords = Vec::new();
        let push_q = |coords: &mut Vec<Coordinate>| {
            for i in 1..=n {
                coords.push(Coordinate {
                    name: format!("q{i}"),
                    role: CoordRole::Position(i as u32),
                });
            }
        };
        let push_p = |coords: &mut Vec<Coordinate>| {
            for i in 1..=n {
                coords.push(Coordinate {
                    name: format!("p{i}"),
                    role: CoordRole::Momentum(i as u32),
                });
            }
        };
        match kind {
            GeometryKind::Symplectic => {
                push_q(&mut coords);
                push_p(&mut coords);
            }
            GeometryKind::Cosymplectic => {
                push_q(&mut coords);
                push_p(&mut coords);
                coords.push(Coordinate { name: "t".into(), role: CoordRole::Time });
            }
            GeometryKind::Contact => {
                push_q(&mut coords);
                push_p(&mut coords);
                coords.push(Coordinate { name: "z".into(), role: CoordRole::Contact });
            }
            GeometryKind::Cocontact => {
                coords.push(Coordinate { name: "t".into(), role: CoordRole::Time });
                push_q(&mut coords);
                push_p(&mut coords);
                coords.push(Coordinate { name: "z".into(), role: CoordRole::Contact });
            }
        }
        let chart = CoordinateSystem::new(coords).expect("generated names are distinct");
        Ok(Self { kind, n, chart })
    }

    pub fn kind(&self) -> GeometryKind {
        self.kind
    }

    pub fn degrees(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn chart(&self) -> &CoordinateSystem {
        &self.chart
    }

    /// Chart index of `q_i` (1-based `i`).
    pub fn q(&self, i: usize) -> VarId {
        self.chart
            .index_of_role(CoordRole::Position(i as u32))
            .expect("position index in range")
    }

    /// Chart index of `p_i` (1-based `i`).
    pub fn p(&self, i: usize) -> VarId {
        self.chart
            .index_of_role(CoordRole::Momentum(i as u32))
            .expect("momentum index in range")
    }

    pub fn t(&self) -> Option<VarId> {
        self.chart.index_of_role(CoordRole::Time)
    }

    pub fn z(&self) -> Option<VarId> {
        self.chart.index_of_role(CoordRole::Contact)
    }

    pub fn parse_scalar(&self, src: &str) -> Result<ScalarField, GeometryError> {
        let expr = parse(src, &self.chart)?;
        Ok(ScalarField::new(self.chart.clone(), expr))
    }

    fn check_chart(&self, chart: &CoordinateSystem) -> Result<(), GeometryError> {
        if *chart != self.chart {
            return Err(GeometryError::ChartMismatch {
                expected: self.chart.to_string(),
                found: chart.to_string(),
            });
        }
        Ok(())
    }
}

/// Smooth function on a chart.
#[derive(Clone, PartialEq, Debug)]
pub struct ScalarField {
    pub chart: CoordinateSystem,
    pub expr: Expr,
}

impl ScalarField {
    pub fn new(chart: CoordinateSystem, expr: Expr) -> Self {
        debug_assert!(expr.free_vars().iter().all(|v| *v < chart.dim()));
        Self { chart, expr }
    }
}

/// Vector field on a chart, one component per coordinate, in chart order.
#[derive(Clone, PartialEq, Debug)]
pub struct VectorField {
    pub chart: CoordinateSystem,
    pub components: Vec<Expr>,
}

impl VectorField {
    pub fn new(chart: CoordinateSystem, components: Vec<Expr>) -> Result<Self, GeometryError> {
        if components.len() != chart.dim() {
            return Err(GeometryError::ComponentCount {
                expected: chart.dim(),
                found: components.len(),
            });
        }
        if components
            .iter()
            .any(|c| c.free_vars().iter().any(|v| *v >= chart.dim()))
        {
            return Err(GeometryError::ForeignVariables);
        }
        Ok(Self { chart, components })
    }

    pub fn zero(chart: CoordinateSystem) -> Self {
        let components = vec![Expr::zero(); chart.dim()];
        Self { chart, components }
    }

    /// Coordinate field `d/dx^i`.
    pub fn unit(chart: CoordinateSystem, i: VarId) -> Self {
        let mut components = vec![Expr::zero(); chart.dim()];
        components[i] = Expr::one();
        Self { chart, components }
    }

    /// Directional derivative `u(f)` of a scalar expression.
    pub fn apply(&self, f: &Expr) -> Expr {
        let mut out = Expr::zero();
        for (i, comp) in self.components.iter().enumerate() {
            if comp.is_zero_expr() {
                continue;
            }
            let df = f.diff(i);
            if df.is_zero_expr() {
                continue;
            }
            out = out + comp.clone() * df;
        }
        out
    }

    pub fn add(&self, o: &VectorField) -> VectorField {
        debug_assert_eq!(self.chart, o.chart);
        VectorField {
            chart: self.chart.clone(),
            components: self
                .components
                .iter()
                .zip(&o.components)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn scale(&self, c: &Expr) -> VectorField {
        VectorField {
            chart: self.chart.clone(),
            components: self.components.iter().map(|a| a * c).collect(),
        }
    }

    pub fn is_zero_field(&self) -> bool {
        self.components.iter().all(|c| c.is_zero_expr())
    }

    /// Evaluates all components at a point.
    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>, crate::expr::EvalError> {
        self.components.iter().map(|c| c.evaluate(x)).collect()
    }
}

/// A Hamiltonian function together with the geometry it generates dynamics on.
#[derive(Clone, Debug)]
pub struct HamiltonianSystem {
    pub geometry: PhaseGeometry,
    pub hamiltonian: ScalarField,
}

impl HamiltonianSystem {
    pub fn new(geometry: PhaseGeometry, hamiltonian: ScalarField) -> Result<Self, GeometryError> {
        geometry.check_chart(&hamiltonian.chart)?;
        Ok(Self { geometry, hamiltonian })
    }

    pub fn parse(geometry: PhaseGeometry, hamiltonian: &str) -> Result<Self, GeometryError> {
        let h = geometry.parse_scalar(hamiltonian)?;
        Self::new(geometry, h)
    }
}

/// The Hamiltonian vector field `X_f` of the geometry kind.
///
/// Symplectic and cosymplectic:
/// `X_f = (df/dp_i) d_q_i - (df/dq_i) d_p_i` (zero `t`-component).
/// Contact and cocontact:
/// `X_f = (df/dp_i) d_q_i - (df/dq_i + p_i df/dz) d_p_i
///        + (p_i df/dp_i - f) d_z` (zero `t`-component).
pub fn hamiltonian_vector_field(
    g: &PhaseGeometry,
    f: &ScalarField,
) -> Result<VectorField, GeometryError> {
    g.check_chart(&f.chart)?;
    let n = g.degrees();
    let mut components = vec![Expr::zero(); g.dim()];
    match g.kind() {
        GeometryKind::Symplectic | GeometryKind::Cosymplectic => {
            for i in 1..=n {
                components[g.q(i)] = f.expr.diff(g.p(i));
                components[g.p(i)] = -f.expr.diff(g.q(i));
            }
        }
        GeometryKind::Contact | GeometryKind::Cocontact => {
            let z = g.z().expect("contact kinds have z");
            let fz = f.expr.diff(z);
            let mut z_comp = -f.expr.clone();
            for i in 1..=n {
                let p_i = Expr::var(g.p(i));
                let fp = f.expr.diff(g.p(i));
                components[g.q(i)] = fp.clone();
                components[g.p(i)] = -(f.expr.diff(g.q(i)) + p_i.clone() * fz.clone());
                z_comp = z_comp + p_i * fp;
            }
            components[z] = z_comp;
        }
    }
    VectorField::new(g.chart().clone(), components)
}

/// The distinguished (Reeb-type) fields of the geometry: none for
/// symplectic, `d/dt` for cosymplectic, `d/dz` for contact, and both
/// `d/dz` and `d/dt` for cocontact.
pub fn reeb_fields(g: &PhaseGeometry) -> Vec<(String, VectorField)> {
    let mut out = Vec::new();
    match g.kind() {
        GeometryKind::Symplectic => {}
        GeometryKind::Cosymplectic => {
            let t = g.t().unwrap();
            out.push(("R".to_string(), VectorField::unit(g.chart().clone(), t)));
        }
        GeometryKind::Contact => {
            let z = g.z().unwrap();
            out.push(("R".to_string(), VectorField::unit(g.chart().clone(), z)));
        }
        GeometryKind::Cocontact => {
            let z = g.z().unwrap();
            let t = g.t().unwrap();
            out.push(("R_z".to_string(), VectorField::unit(g.chart().clone(), z)));
            out.push(("R_t".to_string(), VectorField::unit(g.chart().clone(), t)));
        }
    }
    out
}

/// The evolution field that generates the dynamics: `X_H` for symplectic and
/// contact, `X_H + R` for cosymplectic, `X_H + R_t` for cocontact (so the
/// time coordinate always advances at unit rate).
pub fn dynamics_field(sys: &HamiltonianSystem) -> Result<VectorField, GeometryError> {
    let g = &sys.geometry;
    let mut field = hamiltonian_vector_field(g, &sys.hamiltonian)?;
    match g.kind() {
        GeometryKind::Symplectic | GeometryKind::Contact => {}
        GeometryKind::Cosymplectic | GeometryKind::Cocontact => {
            let t = g.t().unwrap();
            field = field.add(&VectorField::unit(g.chart().clone(), t));
        }
    }
    Ok(field)
}

/// Equations of motion as `(coordinate name, right-hand side)` pairs in
/// chart order.
pub fn equations_of_motion(
    sys: &HamiltonianSystem,
) -> Result<Vec<(String, Expr)>, GeometryError> {
    let field = dynamics_field(sys)?;
    Ok(sys
        .geometry
        .chart()
        .names()
        .map(str::to_string)
        .zip(field.components)
        .collect())
}
