use std::path::Path;

use nonext::entropy::{
    escort_normalization, q_kl_divergence, tsallis_entropy_normalized, Divergence, EntropicIndex,
};
use nonext::error::Error;
use nonext::infogeo::{build_eigencurve, metric_at, MetricOptions, StateCurve};
use nonext::io::{parse_curve, parse_matrix, MatrixFile};
use nonext::maxent::{
    solve_equilibrium, solve_equilibrium_multistart, EquilibriumState, Init, SolverConfig,
};
use nonext::operator::{
    hermiticity_deviation, DensityMatrix, HermitianOperator, HERMITIAN_TOL, NEGATIVE_EIGEN_TOL,
    TRACE_TOL,
};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::grid::map_ordered;
use crate::report::{to_value, Cell, Real, Report, Status};

/// Trace deviation tolerated in input files; larger deviations are errors,
/// smaller ones are renormalized with a warning.
pub const INPUT_TRACE_TOL: f64 = 1e-4;

/// Failure before a report could be produced; always exit code 1.
#[derive(Debug)]
pub struct InputError(pub String);

impl<E: std::fmt::Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

type CmdResult = Result<Report, InputError>;

fn read(path: &Path) -> Result<String, InputError> {
    std::fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn in_file<T>(path: &Path, r: nonext::Result<T>) -> Result<T, InputError> {
    r.map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn load_hamiltonian(path: &Path) -> Result<HermitianOperator, InputError> {
    let file = in_file(path, parse_matrix(&read(path)?))?;
    in_file(path, file.to_operator())
}

fn load_state(path: &Path, warnings: &mut Vec<String>) -> Result<DensityMatrix, InputError> {
    let file = in_file(path, parse_matrix(&read(path)?))?;
    let op = in_file(path, file.to_operator())?;
    let (rho, deviation) = in_file(path, DensityMatrix::renormalized(op, INPUT_TRACE_TOL))?;
    if deviation.abs() > TRACE_TOL {
        warnings.push(format!(
            "{}: trace deviates from 1 by {:e}; renormalized",
            path.display(),
            deviation
        ));
    }
    Ok(rho)
}

fn index(q: f64) -> Result<EntropicIndex, InputError> {
    Ok(EntropicIndex::new(q)?)
}

fn near_one_warning(warnings: &mut Vec<String>, q: EntropicIndex) {
    if q.near_one() && q.value() != 1.0 {
        warnings.push(format!(
            "q = {} is within 1e-6 of 1; the q = 1 forms were used",
            q.value()
        ));
    }
}

fn config(pairs: Vec<(&str, Value)>) -> Map<String, Value> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn divergence_value(d: Divergence) -> f64 {
    match d {
        Divergence::Finite(x) => x,
        Divergence::Infinite => f64::INFINITY,
    }
}

fn key_value_rows(report: &mut Report, pairs: Vec<(String, Cell)>) {
    report.columns = vec!["quantity", "value"];
    report.rows = pairs
        .into_iter()
        .map(|(k, v)| vec![Cell::Text(k), v])
        .collect();
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    Density,
    Hermitian,
}

pub fn validate(path: &Path, kind: MatrixKind) -> Report {
    let kind_name = match kind {
        MatrixKind::Density => "density",
        MatrixKind::Hermitian => "hermitian",
    };
    let mut report = Report::new(
        "validate",
        config(vec![
            ("file", path.display().to_string().into()),
            ("kind", kind_name.into()),
            ("hermitian_tol", HERMITIAN_TOL.into()),
            ("trace_tol", TRACE_TOL.into()),
            ("input_trace_tol", INPUT_TRACE_TOL.into()),
            ("negative_eigen_tol", NEGATIVE_EIGEN_TOL.into()),
        ]),
    );
    if let Err(e) = validate_into(&mut report, path, kind) {
        report.status = Status::Invalid;
        report.error = Some(e.0);
    }
    report
}

fn validate_into(report: &mut Report, path: &Path, kind: MatrixKind) -> Result<(), InputError> {
    let file: MatrixFile = in_file(path, parse_matrix(&read(path)?))?;
    let raw = in_file(path, file.to_matrix())?;
    let (deviation, row, col) = hermiticity_deviation(&raw);
    let symmetrized = (&raw + raw.adjoint()) * nonext::operator::C64::new(0.5, 0.0);
    let diag_op = HermitianOperator::new(symmetrized).expect("symmetrized matrix is Hermitian");
    let eigenvalues = diag_op.decompose().eigenvalues().to_vec();
    let trace: f64 = (0..raw.nrows()).map(|i| raw[(i, i)].re).sum();
    let min_eigenvalue = eigenvalues.first().copied().unwrap_or(0.0);

    let mut results = Map::new();
    results.insert("dim".into(), raw.nrows().into());
    results.insert("hermiticity_deviation".into(), to_value(&Real(deviation)));
    results.insert("hermiticity_worst_entry".into(), json!([row, col]));
    results.insert("trace".into(), to_value(&Real(trace)));
    results.insert(
        "trace_deviation".into(),
        to_value(&Real((trace - 1.0).abs())),
    );
    results.insert("min_eigenvalue".into(), to_value(&Real(min_eigenvalue)));
    results.insert(
        "eigenvalues".into(),
        to_value(&eigenvalues.iter().map(|&x| Real(x)).collect::<Vec<_>>()),
    );
    let mut rows = vec![
        ("dim".to_string(), Cell::from(raw.nrows())),
        ("hermiticity_deviation".to_string(), Cell::from(deviation)),
        ("hermiticity_worst_row".to_string(), Cell::from(row)),
        ("hermiticity_worst_col".to_string(), Cell::from(col)),
        ("trace".to_string(), Cell::from(trace)),
        (
            "trace_deviation".to_string(),
            Cell::from((trace - 1.0).abs()),
        ),
        ("min_eigenvalue".to_string(), Cell::from(min_eigenvalue)),
    ];
    rows.extend(
        eigenvalues
            .iter()
            .enumerate()
            .map(|(k, &l)| (format!("eigenvalue[{k}]"), Cell::from(l))),
    );
    report.results = Value::Object(results);
    key_value_rows(report, rows);

    let op = in_file(path, file.to_operator())?;
    if kind == MatrixKind::Density {
        let mut warnings = Vec::new();
        let rho = load_state_from(path, op, &mut warnings)?;
        report.warnings.extend(warnings);
        if let Value::Object(m) = &mut report.results {
            m.insert("rank".into(), rho.rank().into());
        }
        report
            .rows
            .push(vec!["rank".into(), Cell::from(rho.rank())]);
    }
    Ok(())
}

fn load_state_from(
    path: &Path,
    op: HermitianOperator,
    warnings: &mut Vec<String>,
) -> Result<DensityMatrix, InputError> {
    let (rho, deviation) = in_file(path, DensityMatrix::renormalized(op, INPUT_TRACE_TOL))?;
    if deviation.abs() > TRACE_TOL {
        warnings.push(format!(
            "trace deviates from 1 by {:e}; renormalized",
            deviation.abs()
        ));
    }
    Ok(rho)
}

pub fn entropy(path: &Path, qs: &[f64]) -> CmdResult {
    let mut report = Report::new(
        "entropy",
        config(vec![
            ("file", path.display().to_string().into()),
            ("q", to_value(qs)),
        ]),
    );
    let rho = load_state(path, &mut report.warnings)?;
    #[derive(Serialize)]
    struct Row {
        q: f64,
        entropy: Real,
        escort_normalization: Real,
        near_one: bool,
    }
    let mut rows = Vec::new();
    for &q in qs {
        let qi = index(q)?;
        near_one_warning(&mut report.warnings, qi);
        rows.push(Row {
            q,
            entropy: Real(tsallis_entropy_normalized(&rho, qi).value()),
            escort_normalization: Real(escort_normalization(&rho, qi)),
            near_one: qi.near_one(),
        });
    }
    report.columns = vec!["q", "entropy", "escort_normalization", "near_one"];
    report.rows = rows
        .iter()
        .map(|r| {
            vec![
                r.q.into(),
                r.entropy.0.into(),
                r.escort_normalization.0.into(),
                r.near_one.into(),
            ]
        })
        .collect();
    report.results = to_value(&rows);
    Ok(report)
}

pub fn divergence(rho_path: &Path, sigma_path: &Path, qs: &[f64]) -> CmdResult {
    let mut report = Report::new(
        "divergence",
        config(vec![
            ("rho", rho_path.display().to_string().into()),
            ("sigma", sigma_path.display().to_string().into()),
            ("q", to_value(qs)),
        ]),
    );
    let rho = load_state(rho_path, &mut report.warnings)?;
    let sigma = load_state(sigma_path, &mut report.warnings)?;
    if rho.dim() != sigma.dim() {
        return Err(InputError(format!(
            "states have dimensions {} and {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    #[derive(Serialize)]
    struct Row {
        q: f64,
        forward: Real,
        reverse: Real,
        symmetric: Real,
    }
    let mut rows = Vec::new();
    for &q in qs {
        let qi = index(q)?;
        near_one_warning(&mut report.warnings, qi);
        let forward = divergence_value(q_kl_divergence(&rho, &sigma, qi)?);
        let reverse = divergence_value(q_kl_divergence(&sigma, &rho, qi)?);
        rows.push(Row {
            q,
            forward: Real(forward),
            reverse: Real(reverse),
            symmetric: Real(forward + reverse),
        });
    }
    report.columns = vec!["q", "forward", "reverse", "symmetric"];
    report.rows = rows
        .iter()
        .map(|r| {
            vec![
                r.q.into(),
                r.forward.0.into(),
                r.reverse.0.into(),
                r.symmetric.0.into(),
            ]
        })
        .collect();
    report.results = to_value(&rows);
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    pub init: String,
}

impl SolverSettings {
    fn config(&self, warnings: &mut Vec<String>) -> Result<SolverConfig, InputError> {
        let init = match self.init.as_str() {
            "gibbs_q1" | "gibbs-q1" => Init::GibbsQ1,
            "maximally_mixed" | "maximally-mixed" => Init::MaximallyMixed,
            path => Init::Custom(load_state(Path::new(path), warnings)?),
        };
        let cfg = SolverConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            damping: self.damping,
            init,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn entries(&self) -> Vec<(&'static str, Value)> {
        vec![
            ("tol", self.tol.into()),
            ("max_iter", self.max_iter.into()),
            ("damping", self.damping.into()),
            ("init", self.init.clone().into()),
        ]
    }
}

fn support_warning(warnings: &mut Vec<String>, eq: &EquilibriumState) {
    let n = eq.populations.len();
    if eq.support_size() < n {
        warnings.push(format!(
            "cutoff support holds {} of {n} levels",
            eq.support_size()
        ));
    }
}

pub fn equilibrium(
    path: &Path,
    beta: f64,
    q: f64,
    settings: &SolverSettings,
    multistart: bool,
) -> CmdResult {
    let mut entries = vec![
        ("hamiltonian", path.display().to_string().into()),
        ("beta", beta.into()),
        ("q", q.into()),
    ];
    entries.extend(settings.entries());
    entries.push(("multistart", multistart.into()));
    let mut report = Report::new("equilibrium", config(entries));
    let h = load_hamiltonian(path)?;
    let qi = index(q)?;
    let cfg = settings.config(&mut report.warnings)?;
    if cfg.init != Init::GibbsQ1 && multistart {
        return Err(InputError(
            "--multistart always uses both standard initializations; drop --init".into(),
        ));
    }
    if let Init::Custom(rho) = &cfg.init {
        if rho.dim() != h.dim() {
            return Err(InputError(format!(
                "initial state has dimension {} but the Hamiltonian has {}",
                rho.dim(),
                h.dim()
            )));
        }
    }
    near_one_warning(&mut report.warnings, qi);
    let solved = if multistart {
        solve_equilibrium_multistart(&h, beta, qi, &cfg).map(|m| {
            if m.flagged() {
                report.warnings.push(format!(
                    "initializations disagree: trace distance {:e}",
                    m.disagreement
                ));
            }
            m.state
        })
    } else {
        solve_equilibrium(&h, beta, qi, &cfg)
    };
    let eq = match solved {
        Ok(eq) => eq,
        Err(Error::NonConvergence {
            iterations,
            residual,
            last_probabilities,
        }) => {
            report.status = Status::NonConvergence;
            report.error = Some(format!(
                "no convergence after {iterations} iterations (last residual {residual:e})"
            ));
            report.results = json!({
                "iterations": iterations,
                "residual": Real(residual),
                "last_populations": last_probabilities.iter().map(|&p| Real(p)).collect::<Vec<_>>(),
            });
            key_value_rows(
                &mut report,
                vec![
                    ("iterations".into(), iterations.into()),
                    ("residual".into(), residual.into()),
                ],
            );
            return Ok(report);
        }
        Err(e) => return Err(e.into()),
    };
    support_warning(&mut report.warnings, &eq);
    let entropy = tsallis_entropy_normalized(&eq.rho_eq, qi).value();
    let identity = eq.partition_identity_error();
    report.results = json!({
        "z_q": Real(eq.z_q),
        "c_q": Real(eq.c_q),
        "u_q": Real(eq.u_q),
        "entropy": Real(entropy),
        "iterations": eq.iterations,
        "residual": Real(eq.residual),
        "partition_identity_error": Real(identity),
        "support_size": eq.support_size(),
        "energies": eq.energies.iter().map(|&x| Real(x)).collect::<Vec<_>>(),
        "populations": eq.populations.iter().map(|&x| Real(x)).collect::<Vec<_>>(),
        "rho_eq": MatrixFile::from_operator(eq.rho_eq.operator()),
    });
    let mut rows: Vec<(String, Cell)> = vec![
        ("z_q".into(), eq.z_q.into()),
        ("c_q".into(), eq.c_q.into()),
        ("u_q".into(), eq.u_q.into()),
        ("entropy".into(), entropy.into()),
        ("iterations".into(), eq.iterations.into()),
        ("residual".into(), eq.residual.into()),
        ("partition_identity_error".into(), identity.into()),
        ("support_size".into(), eq.support_size().into()),
    ];
    for (k, (&e, &p)) in eq.energies.iter().zip(&eq.populations).enumerate() {
        rows.push((format!("energy[{k}]"), e.into()));
        rows.push((format!("population[{k}]"), p.into()));
    }
    key_value_rows(&mut report, rows);
    Ok(report)
}

#[derive(Serialize)]
struct ScanRow {
    q: f64,
    beta: f64,
    status: String,
    u_q: Option<Real>,
    z_q: Option<Real>,
    c_q: Option<Real>,
    s_q: Option<Real>,
    iterations: Option<usize>,
    residual: Option<Real>,
    support_size: Option<usize>,
}

pub fn scan(
    path: &Path,
    qs: &[f64],
    betas: &[f64],
    settings: &SolverSettings,
    threads: usize,
) -> CmdResult {
    let mut entries = vec![
        ("hamiltonian", path.display().to_string().into()),
        ("q", to_value(qs)),
        ("beta", to_value(betas)),
    ];
    entries.extend(settings.entries());
    entries.push(("threads", threads.into()));
    let mut report = Report::new("scan", config(entries));
    let h = load_hamiltonian(path)?;
    let cfg = settings.config(&mut report.warnings)?;
    let indices = qs
        .iter()
        .map(|&q| index(q))
        .collect::<Result<Vec<_>, _>>()?;
    for &qi in &indices {
        near_one_warning(&mut report.warnings, qi);
    }
    let cells: Vec<(EntropicIndex, f64)> = indices
        .iter()
        .flat_map(|&qi| betas.iter().map(move |&b| (qi, b)))
        .collect();
    let rows = map_ordered(&cells, threads, |&(qi, beta)| {
        let mut row = ScanRow {
            q: qi.value(),
            beta,
            status: "ok".into(),
            u_q: None,
            z_q: None,
            c_q: None,
            s_q: None,
            iterations: None,
            residual: None,
            support_size: None,
        };
        match solve_equilibrium(&h, beta, qi, &cfg) {
            Ok(eq) => {
                row.u_q = Some(Real(eq.u_q));
                row.z_q = Some(Real(eq.z_q));
                row.c_q = Some(Real(eq.c_q));
                row.s_q = Some(Real(tsallis_entropy_normalized(&eq.rho_eq, qi).value()));
                row.iterations = Some(eq.iterations);
                row.residual = Some(Real(eq.residual));
                row.support_size = Some(eq.support_size());
            }
            Err(Error::NonConvergence {
                iterations,
                residual,
                ..
            }) => {
                row.status = "non_convergence".into();
                row.iterations = Some(iterations);
                row.residual = Some(Real(residual));
            }
            Err(e) => row.status = format!("error: {e}"),
        }
        row
    })?;
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    if failed > 0 {
        report
            .warnings
            .push(format!("{failed} of {} cells failed", rows.len()));
    }
    let cutoff = rows
        .iter()
        .filter(|r| r.support_size.is_some_and(|s| s < h.dim()))
        .count();
    if cutoff > 0 {
        report
            .warnings
            .push(format!("{cutoff} cells have a truncated cutoff support"));
    }
    if failed == rows.len() {
        report.status = Status::NonConvergence;
        report.error = Some("every cell failed".into());
    }
    report.columns = vec![
        "q",
        "beta",
        "status",
        "u_q",
        "z_q",
        "c_q",
        "s_q",
        "iterations",
        "residual",
        "support_size",
    ];
    report.rows = rows
        .iter()
        .map(|r| {
            vec![
                r.q.into(),
                r.beta.into(),
                r.status.as_str().into(),
                r.u_q.map(|x| x.0).into(),
                r.z_q.map(|x| x.0).into(),
                r.c_q.map(|x| x.0).into(),
                r.s_q.map(|x| x.0).into(),
                r.iterations.map_or(Cell::Empty, Cell::from),
                r.residual.map(|x| x.0).into(),
                r.support_size.map_or(Cell::Empty, Cell::from),
            ]
        })
        .collect();
    report.results = to_value(&rows);
    Ok(report)
}

#[derive(Serialize)]
struct MetricRow {
    alpha: f64,
    g_cl: Option<Real>,
    g_qu: Option<Real>,
    g_total: Option<Real>,
    oracle: Option<Real>,
    deviation: Option<Real>,
    flags: Vec<String>,
}

pub fn metric(path: &Path, q: f64, options: MetricOptions, threads: usize) -> CmdResult {
    let curve_file = in_file(path, parse_curve(&read(path)?))?;
    let curve: StateCurve = in_file(path, curve_file.to_curve())?;
    let qi = index(q)?;
    let family = curve.family().map_or("sampled", |f| f.name());
    let h_entry: Value = match options.h {
        Some(h) => h.into(),
        None if options.richardson && curve.family().is_none() => (2.0 * curve.spacing()).into(),
        None => curve.spacing().into(),
    };
    let mut report = Report::new(
        "metric",
        config(vec![
            ("curve", path.display().to_string().into()),
            ("family", family.into()),
            ("points", curve.len().into()),
            ("spacing", curve.spacing().into()),
            ("q", q.into()),
            ("h", h_entry),
            ("richardson", options.richardson.into()),
            ("strict_degeneracy", options.strict_degeneracy.into()),
            ("threads", threads.into()),
        ]),
    );
    near_one_warning(&mut report.warnings, qi);
    let ec = in_file(path, build_eigencurve(&curve, options.strict_degeneracy))?;
    let interior: Vec<usize> = (1..curve.len() - 1).collect();
    let rows = map_ordered(&interior, threads, |&i| {
        let alpha = curve.alphas()[i];
        match metric_at(&curve, &ec, i, qi, &options) {
            Ok(s) => {
                let mut flags = Vec::new();
                if s.degenerate {
                    flags.push("degenerate".to_string());
                }
                if s.ambiguous {
                    flags.push("ambiguous".to_string());
                }
                if s.oracle.is_none() {
                    flags.push("oracle_unavailable".to_string());
                }
                MetricRow {
                    alpha,
                    g_cl: Some(Real(s.g_cl)),
                    g_qu: Some(Real(s.g_qu)),
                    g_total: Some(Real(s.g_total)),
                    oracle: s.oracle.map(|o| Real(divergence_value(o))),
                    deviation: s.deviation.map(Real),
                    flags,
                }
            }
            Err(e) => MetricRow {
                alpha,
                g_cl: None,
                g_qu: None,
                g_total: None,
                oracle: None,
                deviation: None,
                flags: vec![match e {
                    Error::SingularMetric {
                        branch,
                        probability,
                    } => {
                        format!("singular: branch {branch} has p = {probability:e}")
                    }
                    other => format!("error: {other}"),
                }],
            },
        }
    })?;
    let flagged = rows.iter().filter(|r| !r.flags.is_empty()).count();
    if flagged > 0 {
        report
            .warnings
            .push(format!("{flagged} of {} points flagged", rows.len()));
    }
    report.columns = vec![
        "alpha",
        "g_cl",
        "g_qu",
        "g_total",
        "oracle",
        "deviation",
        "flags",
    ];
    report.rows = rows
        .iter()
        .map(|r| {
            vec![
                r.alpha.into(),
                r.g_cl.map(|x| x.0).into(),
                r.g_qu.map(|x| x.0).into(),
                r.g_total.map(|x| x.0).into(),
                r.oracle.map(|x| x.0).into(),
                r.deviation.map(|x| x.0).into(),
                r.flags.join(";").into(),
            ]
        })
        .collect();
    report.results = to_value(&rows);
    Ok(report)
}
