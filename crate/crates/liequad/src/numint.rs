//! Fixed-step classical Runge-Kutta integration of the equations of motion;
//! the deliberately boring numerical oracle that symbolic claims are tested
//! against.

use thiserror::Error;

use crate::expr::{CompiledExpr, CoordinateSystem};
use crate::geometry::{dynamics_field, GeometryError, HamiltonianSystem, ScalarField, VectorField};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum NumintError {
    #[error("step size must be positive, got {0}")]
    BadStep(f64),
    #[error("initial point has {found} coordinates but the chart has {expected}")]
    BadPoint { expected: usize, found: usize },
    #[error("parameter span must be increasing, got ({0}, {1})")]
    BadSpan(f64, f64),
    #[error("right-hand side for {coordinate} failed to evaluate near parameter {parameter}")]
    EvaluationFailed { coordinate: String, parameter: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Numerically integrated curve: `(parameter, coordinates)` samples with
/// strictly increasing parameter values.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub chart: CoordinateSystem,
    pub samples: Vec<(f64, Vec<f64>)>,
    pub step: f64,
    pub method: &'static str,
}

impl Trajectory {
    pub fn endpoint(&self) -> (f64, &[f64]) {
        let (t, x) = self.samples.last().expect("trajectories hold >= 1 sample");
        (*t, x)
    }
}

/// Integrates the dynamics of the system from `x0` over `t_span` with fixed
/// step `h` (samples at `t0 + k*h`, final partial step to `t1`).
pub fn integrate(
    sys: &HamiltonianSystem,
    x0: &[f64],
    t_span: (f64, f64),
    h: f64,
) -> Result<Trajectory, NumintError> {
    let field = dynamics_field(sys)?;
    integrate_field(&field, x0, t_span, h)
}

/// Same as [`integrate`], for an arbitrary vector field.
pub fn integrate_field(
    field: &VectorField,
    x0: &[f64],
    (t0, t1): (f64, f64),
    h: f64,
) -> Result<Trajectory, NumintError> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(NumintError::BadStep(h));
    }
    let dim = field.chart.dim();
    if x0.len() != dim {
        return Err(NumintError::BadPoint { expected: dim, found: x0.len() });
    }
    if !(t1 >= t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(NumintError::BadSpan(t0, t1));
    }

    let compiled: Vec<CompiledExpr> = field.components.iter().map(CompiledExpr::compile).collect();
    let rhs = |x: &[f64], out: &mut [f64]| -> Result<(), usize> {
        for (i, c) in compiled.iter().enumerate() {
            match c.eval(x) {
                Some(v) => out[i] = v,
                None => return Err(i),
            }
        }
        Ok(())
    };
    let fail = |i: usize, t: f64| NumintError::EvaluationFailed {
        coordinate: field.chart.name(i).to_string(),
        parameter: t,
    };

    let mut samples = Vec::with_capacity(((t1 - t0) / h) as usize + 2);
    let mut x = x0.to_vec();
    let mut param = t0;
    samples.push((param, x.clone()));
    let mut full_steps: u64 = 0;
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut stage = vec![0.0; dim];
    while param < t1 {
        let remaining = t1 - param;
        let (step, next_param) = if remaining <= h * (1.0 + 1e-9) {
            (remaining, t1)
        } else {
            full_steps += 1;
            (h, t0 + full_steps as f64 * h)
        };
        rhs(&x, &mut k1).map_err(|i| fail(i, param))?;
        for i in 0..dim {
            stage[i] = x[i] + 0.5 * step * k1[i];
        }
        rhs(&stage, &mut k2).map_err(|i| fail(i, param))?;
        for i in 0..dim {
            stage[i] = x[i] + 0.5 * step * k2[i];
        }
        rhs(&stage, &mut k3).map_err(|i| fail(i, param))?;
        for i in 0..dim {
            stage[i] = x[i] + step * k3[i];
        }
        rhs(&stage, &mut k4).map_err(|i| fail(i, param))?;
        for i in 0..dim {
            // For a unit right-hand side the bracket is exactly 6/6 = 1, so
            // a time coordinate advances by exactly one step.
            x[i] += step * ((k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]) / 6.0);
        }
        param = next_param;
        samples.push((param, x.clone()));
    }

    Ok(Trajectory { chart: field.chart.clone(), samples, step: h, method: "rk4" })
}

/// Deviation of a function from its initial value along a trajectory.
#[derive(Clone, Debug)]
pub struct DriftReport {
    /// Largest `|f(x(t)) - f(x(0))|`; NaN when `f` failed to evaluate at
    /// some sample.
    pub max_drift: f64,
    pub series: Vec<(f64, f64)>,
}

/// Tracks `f(x(t)) - f(x(0))` over the samples of a trajectory.
pub fn monitor(f: &ScalarField, traj: &Trajectory) -> DriftReport {
    debug_assert_eq!(f.chart, traj.chart);
    let compiled = CompiledExpr::compile(&f.expr);
    let f0 = compiled.eval(&traj.samples[0].1);
    let mut series = Vec::with_capacity(traj.samples.len());
    let mut max_drift: f64 = 0.0;
    let mut poisoned = f0.is_none();
    let f0 = f0.unwrap_or(f64::NAN);
    for (t, x) in &traj.samples {
        let drift = match compiled.eval(x) {
            Some(v) => v - f0,
            None => {
                poisoned = true;
                f64::NAN
            }
        };
        if drift.abs() > max_drift {
            max_drift = drift.abs();
        }
        series.push((*t, drift));
    }
    if poisoned {
        max_drift = f64::NAN;
    }
    DriftReport { max_drift, series }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{GeometryKind, PhaseGeometry};

    fn oscillator() -> HamiltonianSystem {
        let g = PhaseGeometry::new(GeometryKind::Symplectic, 1).unwrap();
        HamiltonianSystem::parse(g, "(q1^2 + p1^2)/2").unwrap()
    }

    #[test]
    fn oscillator_half_period_endpoint() {
        let traj = integrate(&oscillator(), &[0.0, 1.0], (0.0, std::f64::consts::PI), 1e-3)
            .unwrap();
        let (t, x) = traj.endpoint();
        assert_eq!(t, std::f64::consts::PI);
        assert!((x[0] - 0.0).abs() < 1e-8, "q = {}", x[0]);
        assert!((x[1] + 1.0).abs() < 1e-8, "p = {}", x[1]);
    }

    #[test]
    fn halving_the_step_divides_the_error_by_sixteen() {
        let sys = oscillator();
        let endpoint_error = |h: f64| {
            let traj = integrate(&sys, &[0.0, 1.0], (0.0, 2.0), h).unwrap();
            let (_, x) = traj.endpoint();
            let exact = (2.0f64.sin(), 2.0f64.cos());
            ((x[0] - exact.0).powi(2) + (x[1] - exact.1).powi(2)).sqrt()
        };
        let ratio = endpoint_error(0.02) / endpoint_error(0.01);
        assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn free_particle_drift_profile() {
        let g = PhaseGeometry::new(GeometryKind::Symplectic, 1).unwrap();
        let sys = HamiltonianSystem::parse(g.clone(), "p1^2/2").unwrap();
        let traj = integrate(&sys, &[0.0, 1.0], (0.0, 10.0), 1e-3).unwrap();
        let p = g.parse_scalar("p1").unwrap();
        assert_eq!(monitor(&p, &traj).max_drift, 0.0);
        let q = g.parse_scalar("q1").unwrap();
        let drift = monitor(&q, &traj).max_drift;
        assert!((drift - 10.0).abs() < 1e-9, "drift {drift}");
    }

    #[test]
    fn damped_oscillator_energy_decays_exponentially() {
        let g = PhaseGeometry::new(GeometryKind::Contact, 1).unwrap();
        let sys = HamiltonianSystem::parse(g.clone(), "p1^2/2 + q1^2/2 + 1/5*z").unwrap();
        let x0 = [0.0, 2f64.sqrt(), 0.0];
        let traj = integrate(&sys, &x0, (0.0, 10.0), 1e-3).unwrap();
        let h = CompiledExpr::compile(&sys.hamiltonian.expr);
        let mut worst: f64 = 0.0;
        for (t, x) in &traj.samples {
            let e = h.eval(x).unwrap();
            worst = worst.max((e - (-0.2 * t).exp()).abs());
        }
        assert!(worst <= 1e-6, "worst {worst}");
    }

    #[test]
    fn time_coordinate_tracks_the_parameter() {
        let g = PhaseGeometry::new(GeometryKind::Cocontact, 1).unwrap();
        let sys = HamiltonianSystem::parse(g, "p1^2/2").unwrap();
        let traj = integrate(&sys, &[0.0, 0.0, 1.0, 0.0], (0.0, 5.0), 1e-3).unwrap();
        for (t, x) in &traj.samples {
            assert!((x[0] - t).abs() <= 1e-10, "t coordinate {} vs {}", x[0], t);
        }
        let (_, end) = traj.endpoint();
        assert!((end[1] - 5.0).abs() < 1e-9);
        assert!((end[3] - 2.5).abs() < 1e-9);
    }

    #[test]
    fn domain_failures_carry_position() {
        let g = PhaseGeometry::new(GeometryKind::Symplectic, 1).unwrap();
        let sys = HamiltonianSystem::parse(g, "p1^2/2 + ln(q1)").unwrap();
        let err = integrate(&sys, &[0.0, 1.0], (0.0, 1.0), 1e-3).unwrap_err();
        match err {
            NumintError::EvaluationFailed { coordinate, parameter } => {
                assert_eq!(coordinate, "p1");
                assert_eq!(parameter, 0.0);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn bad_inputs_rejected() {
        let sys = oscillator();
        assert!(matches!(
            integrate(&sys, &[0.0, 1.0], (0.0, 1.0), 0.0),
            Err(NumintError::BadStep(_))
        ));
        assert!(matches!(
            integrate(&sys, &[0.0], (0.0, 1.0), 0.1),
            Err(NumintError::BadPoint { .. })
        ));
        assert!(matches!(
            integrate(&sys, &[0.0, 1.0], (1.0, 0.0), 0.1),
            Err(NumintError::BadSpan(..))
        ));
    }
}
