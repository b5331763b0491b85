//! System-definition file ingestion, command dispatch, and report emission
//! for the `liequad` binary. Files are flat TOML; machine-readable output is
//! JSON with a top-level `schema` version, trajectories are CSV.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::brackets::{coordinate_bracket, intrinsic_bracket, is_constant_of_motion};
use crate::expr::{CompiledExpr, Tri};
use crate::geometry::{
    dynamics_field, GeometryKind, HamiltonianSystem, PhaseGeometry, ScalarField, VectorField,
};
use crate::numint::{integrate, Trajectory};
use crate::reduce::{integrate_by_quadratures, package_elimination_order, ReductionError};
use crate::theorems::{check_integrability, IntegrabilityReport, Verdict};

/// Report format version stamped on all JSON output.
const SCHEMA_VERSION: u32 = 1;
/// Level-set sample points used by the independence and tangency checks.
const NEWTON_POINTS: usize = 5;
/// Rows emitted by a standalone quadrature run, and comparison points used
/// by the `both` summary.
const QUADRATURE_ROWS: usize = 100;
const CROSS_CHECK_SAMPLES: usize = 20;
const CROSS_CHECK_TOLERANCE: f64 = 1e-9;

#[derive(Error, Debug)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Config { path: String, message: String },
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
}

impl CliError {
    /// Input and configuration problems exit 3, reduction failures exit 4.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Config { .. } | CliError::Input(_) => 3,
            CliError::Reduction(_) => 4,
        }
    }
}

/// On-disk system definition. All randomness downstream of a file flows
/// from its `seed`, so reports are reproducible byte for byte.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub geometry: String,
    pub n: usize,
    pub hamiltonian: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constants: Vec<ConstantEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_h")]
    pub h: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantEntry {
    pub f: String,
    pub alpha: f64,
}

fn default_t_max() -> f64 {
    10.0
}

fn default_h() -> f64 {
    1e-3
}

impl SystemFile {
    pub fn parse(text: &str) -> Result<SystemFile, toml::de::Error> {
        toml::from_str(text)
    }
}

/// A parsed file resolved against its phase-space geometry.
pub struct LoadedSystem {
    pub file: SystemFile,
    pub sys: HamiltonianSystem,
    pub constants: Vec<ScalarField>,
    pub alphas: Vec<f64>,
}

pub fn load_system(path: &Path) -> Result<LoadedSystem, CliError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path)
        .map_err(|source| CliError::Io { path: shown.clone(), source })?;
    let file = SystemFile::parse(&text)
        .map_err(|e| CliError::Config { path: shown.clone(), message: e.to_string() })?;
    let confess = |message: String| CliError::Config { path: shown.clone(), message };
    let kind = GeometryKind::parse_name(&file.geometry)
        .ok_or_else(|| confess(format!("unknown geometry kind `{}`", file.geometry)))?;
    let geometry = PhaseGeometry::new(kind, file.n).map_err(|e| confess(e.to_string()))?;
    let sys = HamiltonianSystem::parse(geometry, &file.hamiltonian)
        .map_err(|e| confess(format!("hamiltonian: {e}")))?;
    let mut constants = Vec::with_capacity(file.constants.len());
    let mut alphas = Vec::with_capacity(file.constants.len());
    for (i, entry) in file.constants.iter().enumerate() {
        let f = sys
            .geometry
            .parse_scalar(&entry.f)
            .map_err(|e| confess(format!("constants[{i}].f: {e}")))?;
        if !entry.alpha.is_finite() {
            return Err(confess(format!("constants[{i}].alpha must be finite")));
        }
        constants.push(f);
        alphas.push(entry.alpha);
    }
    for (i, p) in file.points.iter().enumerate() {
        if p.len() != sys.geometry.dim() {
            return Err(confess(format!(
                "points[{i}] has {} coordinates, the chart has {}",
                p.len(),
                sys.geometry.dim()
            )));
        }
    }
    if !(file.h > 0.0 && file.h.is_finite()) {
        return Err(confess("h must be positive and finite".into()));
    }
    if !(file.t_max > 0.0 && file.t_max.is_finite()) {
        return Err(confess("t_max must be positive and finite".into()));
    }
    Ok(LoadedSystem { file, sys, constants, alphas })
}

// -- JSON shapes --

#[derive(Serialize)]
struct HypothesisJson<'a> {
    name: &'a str,
    verdict: &'a str,
    detail: &'a str,
}

#[derive(Serialize)]
struct PackageFieldJson {
    name: String,
    components: Vec<String>,
}

#[derive(Serialize)]
struct CheckJson<'a> {
    schema: u32,
    geometry: &'a str,
    degrees: usize,
    mode: &'a str,
    verdict: &'a str,
    hypotheses: Vec<HypothesisJson<'a>>,
    level_set_dim: Option<usize>,
    package: Vec<PackageFieldJson>,
    notes: &'a [String],
}

fn check_json(report: &IntegrabilityReport, sys: &HamiltonianSystem) -> String {
    let chart = sys.geometry.chart();
    let doc = CheckJson {
        schema: SCHEMA_VERSION,
        geometry: report.geometry.name(),
        degrees: report.degrees,
        mode: if report.liouville_mode { "liouville" } else { "integrability" },
        verdict: report.verdict.name(),
        hypotheses: report
            .hypotheses
            .iter()
            .map(|h| HypothesisJson { name: h.name, verdict: h.verdict.name(), detail: &h.detail })
            .collect(),
        level_set_dim: report.level_set_dim,
        package: report
            .package
            .iter()
            .map(|(name, field)| PackageFieldJson {
                name: name.clone(),
                components: field
                    .components
                    .iter()
                    .map(|c| c.display(chart).to_string())
                    .collect(),
            })
            .collect(),
        notes: &report.notes,
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("report serialization is infallible");
    out.push('\n');
    out
}

fn verdict_exit(v: Verdict) -> i32 {
    match v {
        Verdict::Holds => 0,
        Verdict::Fails => 1,
        Verdict::Unknown => 2,
    }
}

fn run_check(loaded: &LoadedSystem) -> Result<IntegrabilityReport, CliError> {
    if loaded.constants.is_empty() {
        return Err(CliError::Input(
            "the integrability check needs at least one entry in `constants`".into(),
        ));
    }
    check_integrability(
        &loaded.sys,
        &loaded.constants,
        &loaded.alphas,
        NEWTON_POINTS,
        loaded.file.seed,
    )
    .map_err(|e| CliError::Input(e.to_string()))
}

/// `liequad check`: evaluate the integrability hypotheses and emit the JSON
/// report. Exit code 0 for Holds, 1 for Fails, 2 for Unknown.
pub fn cmd_check(path: &Path) -> Result<(String, i32), CliError> {
    let loaded = load_system(path)?;
    let report = run_check(&loaded)?;
    Ok((check_json(&report, &loaded.sys), verdict_exit(report.verdict)))
}

/// `liequad bracket`: print the bracket of two expressions and cross-check
/// the coordinate formula against the structure-based route.
pub fn cmd_bracket(path: &Path, f: &str, g: &str) -> Result<(String, i32), CliError> {
    let loaded = load_system(path)?;
    let geometry = &loaded.sys.geometry;
    let chart = geometry.chart();
    let sf = geometry
        .parse_scalar(f)
        .map_err(|e| CliError::Input(format!("first argument: {e}")))?;
    let sg = geometry
        .parse_scalar(g)
        .map_err(|e| CliError::Input(format!("second argument: {e}")))?;
    let by_coordinates = coordinate_bracket(geometry, &sf.expr, &sg.expr);
    let by_structure = intrinsic_bracket(geometry, &sf.expr, &sg.expr);
    let diff = by_coordinates.sub_ref(&by_structure);
    let (cross_check, code) = match diff.zero_test() {
        Tri::Zero => ("routes agree (canonical zero)".to_string(), 0),
        _ => {
            let compiled = CompiledExpr::compile(&diff);
            let scale = CompiledExpr::compile(&by_coordinates);
            let mut rng = ChaCha8Rng::seed_from_u64(loaded.file.seed);
            let mut point = vec![0.0; chart.dim()];
            let mut checked = 0;
            let mut worst: f64 = 0.0;
            for _ in 0..CROSS_CHECK_SAMPLES * 10 {
                for v in point.iter_mut() {
                    *v = rng.gen_range(-2.0..2.0);
                }
                let (Some(d), Some(s)) = (compiled.eval(&point), scale.eval(&point)) else {
                    continue;
                };
                worst = worst.max(d.abs() / s.abs().max(1.0));
                checked += 1;
                if checked == CROSS_CHECK_SAMPLES {
                    break;
                }
            }
            if checked < CROSS_CHECK_SAMPLES {
                ("routes could not be compared on enough sample points".to_string(), 2)
            } else if worst <= CROSS_CHECK_TOLERANCE {
                (
                    format!(
                        "routes agree within {CROSS_CHECK_TOLERANCE:e} at {CROSS_CHECK_SAMPLES} sample points"
                    ),
                    0,
                )
            } else {
                (format!("routes disagree (relative deviation {worst:e})"), 1)
            }
        }
    };
    let mut out = String::new();
    let _ = writeln!(out, "{{{f}, {g}}} = {}", by_coordinates.display(chart));
    let _ = writeln!(out, "cross-check: {cross_check}");
    Ok((out, code))
}

fn csv_trajectory(traj: &Trajectory) -> String {
    let mut out = String::from("parameter");
    for name in traj.chart.names() {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (t, x) in &traj.samples {
        let _ = write!(out, "{t}");
        for v in x {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

pub enum IntegrateMethod {
    Rk4,
    Quadrature,
    Both,
}

fn start_point(loaded: &LoadedSystem) -> Result<&[f64], CliError> {
    loaded
        .file
        .points
        .first()
        .map(Vec::as_slice)
        .ok_or_else(|| CliError::Input("integration needs an initial point in `points`".into()))
}

/// Certifies the declared constants and returns the symmetry package in
/// elimination order, innermost first.
fn certified_package(loaded: &LoadedSystem) -> Result<Vec<VectorField>, CliError> {
    let report = run_check(loaded)?;
    if report.verdict != Verdict::Holds {
        return Err(ReductionError::BadInput(format!(
            "the integrability verdict is {}, quadratures need a certified package",
            report.verdict.name()
        ))
        .into());
    }
    let fields: Vec<VectorField> = report.package.iter().map(|(_, f)| f.clone()).collect();
    if fields.is_empty() {
        return Err(ReductionError::BadInput(
            "the certified report carries no symmetry package".into(),
        )
        .into());
    }
    Ok(package_elimination_order(&fields, loaded.file.seed)?)
}

fn quadrature_grid(t_max: f64, rows: usize) -> Vec<f64> {
    (0..=rows).map(|k| t_max * k as f64 / rows as f64).collect()
}

/// `liequad integrate`: emit a CSV trajectory. `rk4` runs the fixed-step
/// oracle, `quadrature` runs the symmetry-reduction cascade, `both` prints
/// the oracle rows plus a max-norm comparison summary.
pub fn cmd_integrate(
    path: &Path,
    method: IntegrateMethod,
    t_max: Option<f64>,
    h: Option<f64>,
) -> Result<(String, i32), CliError> {
    let loaded = load_system(path)?;
    let t_max = t_max.unwrap_or(loaded.file.t_max);
    let h = h.unwrap_or(loaded.file.h);
    if !(t_max > 0.0 && t_max.is_finite()) || !(h > 0.0 && h.is_finite()) {
        return Err(CliError::Input("t_max and h must be positive and finite".into()));
    }
    let x0 = start_point(&loaded)?;
    match method {
        IntegrateMethod::Rk4 => {
            let traj = integrate(&loaded.sys, x0, (0.0, t_max), h)
                .map_err(|e| CliError::Input(e.to_string()))?;
            Ok((csv_trajectory(&traj), 0))
        }
        IntegrateMethod::Quadrature => {
            let package = certified_package(&loaded)?;
            let dynamics =
                dynamics_field(&loaded.sys).map_err(|e| CliError::Input(e.to_string()))?;
            let grid = quadrature_grid(t_max, QUADRATURE_ROWS);
            let traj = integrate_by_quadratures(&dynamics, &package, x0, &grid)?;
            Ok((csv_trajectory(&traj), 0))
        }
        IntegrateMethod::Both => {
            let oracle = integrate(&loaded.sys, x0, (0.0, t_max), h)
                .map_err(|e| CliError::Input(e.to_string()))?;
            let package = certified_package(&loaded)?;
            let dynamics =
                dynamics_field(&loaded.sys).map_err(|e| CliError::Input(e.to_string()))?;
            // Compare on a subsample of the oracle's own parameters so both
            // trajectories are evaluated at identical times.
            let stride = (oracle.samples.len() / QUADRATURE_ROWS).max(1);
            let grid: Vec<f64> = oracle.samples.iter().step_by(stride).map(|(t, _)| *t).collect();
            let reduced = integrate_by_quadratures(&dynamics, &package, x0, &grid)?;
            let mut max_diff: f64 = 0.0;
            for ((_, a), (_, b)) in
                oracle.samples.iter().step_by(stride).zip(&reduced.samples)
            {
                for (u, v) in a.iter().zip(b) {
                    max_diff = max_diff.max((u - v).abs());
                }
            }
            let mut out = csv_trajectory(&oracle);
            let _ = writeln!(out, "# max_norm_diff = {max_diff:e}");
            Ok((out, 0))
        }
    }
}

#[derive(Serialize)]
struct SystemJson<'a> {
    geometry: &'a str,
    n: usize,
    hamiltonian: &'a str,
    constants: &'a [ConstantEntry],
    seed: u64,
    t_max: f64,
    h: f64,
}

#[derive(Serialize)]
struct ConstantVerdictJson<'a> {
    f: &'a str,
    constant_of_motion: &'a str,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    schema: u32,
    system: SystemJson<'a>,
    constants_of_motion: Vec<ConstantVerdictJson<'a>>,
    check: Option<serde_json::Value>,
    elimination_order: Option<Vec<Vec<String>>>,
}

/// `liequad report`: the full diagnostic bundle. Includes the check report
/// when constants are declared; exit code follows its verdict.
pub fn cmd_report(path: &Path) -> Result<(String, i32), CliError> {
    let loaded = load_system(path)?;
    let chart = loaded.sys.geometry.chart();
    let constants_of_motion: Vec<ConstantVerdictJson> = loaded
        .constants
        .iter()
        .zip(&loaded.file.constants)
        .map(|(f, entry)| ConstantVerdictJson {
            f: &entry.f,
            constant_of_motion: match is_constant_of_motion(&loaded.sys, &f.expr) {
                Tri::Zero => "yes",
                Tri::NonZero => "no",
                Tri::Unknown => "unknown",
            },
        })
        .collect();
    let (check, order, code) = if loaded.constants.is_empty() {
        (None, None, 0)
    } else {
        let report = run_check(&loaded)?;
        let order = if report.verdict == Verdict::Holds && !report.package.is_empty() {
            let fields: Vec<VectorField> =
                report.package.iter().map(|(_, f)| f.clone()).collect();
            let ordered = package_elimination_order(&fields, loaded.file.seed)?;
            Some(
                ordered
                    .iter()
                    .map(|f| {
                        f.components.iter().map(|c| c.display(chart).to_string()).collect()
                    })
                    .collect(),
            )
        } else {
            None
        };
        let value = serde_json::from_str(&check_json(&report, &loaded.sys))
            .expect("check report round-trips through JSON");
        (Some(value), order, verdict_exit(report.verdict))
    };
    let doc = ReportJson {
        schema: SCHEMA_VERSION,
        system: SystemJson {
            geometry: &loaded.file.geometry,
            n: loaded.file.n,
            hamiltonian: &loaded.file.hamiltonian,
            constants: &loaded.file.constants,
            seed: loaded.file.seed,
            t_max: loaded.file.t_max,
            h: loaded.file.h,
        },
        constants_of_motion,
        check,
        elimination_order: order,
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("report serialization is infallible");
    out.push('\n');
    Ok((out, code))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_file(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(text.as_bytes()).unwrap();
        path
    }

    const FREE_PARTICLE: &str = r#"
geometry = "symplectic"
n = 2
hamiltonian = "p1^2/2 + p2^2/2"
points = [[0.0, 0.0, 1.0, 1.0]]

[[constants]]
f = "p1"
alpha = 1.0

[[constants]]
f = "p2"
alpha = 1.0
"#;

    #[test]
    fn system_file_round_trips() {
        let file = SystemFile::parse(FREE_PARTICLE).unwrap();
        assert_eq!(file.seed, 0);
        assert_eq!(file.t_max, 10.0);
        assert_eq!(file.h, 1e-3);
        let serialized = toml::to_string(&file).unwrap();
        let reparsed = SystemFile::parse(&serialized).unwrap();
        assert_eq!(file, reparsed);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = SystemFile::parse("geometry = \"symplectic\"\nn = 1\nhamiltonian = \"p1\"\nextra = 1\n");
        assert!(err.is_err());
    }

    #[test]
    fn check_reports_holding_verdict() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "free.toml", FREE_PARTICLE);
        let (json, code) = cmd_check(&path).unwrap();
        assert_eq!(code, 0);
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["schema"], 1);
        assert_eq!(value["geometry"], "symplectic");
        assert_eq!(value["verdict"], "holds");
        assert_eq!(value["level_set_dim"], 2);
    }

    #[test]
    fn check_without_constants_is_an_input_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "bare.toml",
            "geometry = \"symplectic\"\nn = 1\nhamiltonian = \"p1^2/2\"\n",
        );
        let err = cmd_check(&path).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn malformed_hamiltonian_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "bad.toml",
            "geometry = \"symplectic\"\nn = 1\nhamiltonian = \"p1 +* q1\"\n",
        );
        let err = cmd_check(&path).unwrap_err();
        assert!(matches!(err, CliError::Config { .. }));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn bracket_prints_expression_and_agreement() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "contact.toml",
            "geometry = \"contact\"\nn = 1\nhamiltonian = \"p1^2/2\"\n",
        );
        let (out, code) = cmd_bracket(&path, "q1", "z").unwrap();
        assert_eq!(code, 0);
        assert!(out.starts_with("{q1, z} = q1\n"), "{out}");
        assert!(out.contains("routes agree"), "{out}");
        let (self_out, _) = cmd_bracket(&path, "q1*p1 + z", "q1*p1 + z").unwrap();
        assert!(self_out.starts_with("{q1*p1 + z, q1*p1 + z} = 0\n"), "{self_out}");
    }

    #[test]
    fn bracket_rejects_identifiers_outside_the_chart() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "sympl.toml",
            "geometry = \"symplectic\"\nn = 1\nhamiltonian = \"p1^2/2\"\n",
        );
        let err = cmd_bracket(&path, "z", "q1").unwrap_err();
        assert!(matches!(err, CliError::Input(_)));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn integrate_rk4_emits_chart_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "free.toml", FREE_PARTICLE);
        let (csv, code) =
            cmd_integrate(&path, IntegrateMethod::Rk4, Some(1.0), Some(0.25)).unwrap();
        assert_eq!(code, 0);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("parameter,q1,q2,p1,p2"));
        let last = csv.lines().last().unwrap();
        assert!(last.starts_with("1,1,1,1,1"), "{last}");
    }

    #[test]
    fn integrate_both_appends_a_comparison_summary() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "free.toml", FREE_PARTICLE);
        let (csv, _) =
            cmd_integrate(&path, IntegrateMethod::Both, Some(2.0), Some(0.01)).unwrap();
        let summary = csv.lines().last().unwrap();
        assert!(summary.starts_with("# max_norm_diff = "), "{summary}");
        let value: f64 = summary.rsplit(' ').next().unwrap().parse().unwrap();
        assert!(value <= 1e-6, "{value}");
    }

    #[test]
    fn report_bundles_system_and_check() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "free.toml", FREE_PARTICLE);
        let (json, code) = cmd_report(&path).unwrap();
        assert_eq!(code, 0);
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["schema"], 1);
        assert_eq!(value["system"]["n"], 2);
        assert_eq!(value["constants_of_motion"][0]["constant_of_motion"], "yes");
        assert_eq!(value["check"]["verdict"], "holds");
        assert!(value["elimination_order"].is_array());
    }
}
