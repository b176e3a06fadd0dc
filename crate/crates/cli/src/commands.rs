//! Subcommand implementations: each builds the pipeline stages it needs,
//! writes its outputs under the configured directory, and returns a one-line
//! summary for stdout.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use varwave_core::coefficient::CoefficientProfile;
use varwave_core::function_space::{FieldSpace, Multiplier, NonlinearitySpec, SpectralField, TrigKind};
use varwave_core::solver::{continuation_solve, prepare_bounds, uniqueness_probe, SolveConfig};
use varwave_core::sturm_liouville::{solve_eigenbasis, EigenBasis};
use varwave_core::verification::{check_nonresonance, weak_residual, NonresonanceReport};
use varwave_core::wave_spectrum::{even_spectrum, odd_spectrum, OperatorSpectrum, RationalPeriod};

use crate::config::{load_sample_table, RunConfig};
use crate::emit::{fmt_float, matrix_json, Json};
use crate::CliError;

pub struct Pipeline {
    pub profile: Arc<CoefficientProfile>,
    pub basis: Arc<EigenBasis>,
    pub period: RationalPeriod,
}

impl Pipeline {
    pub fn build(cfg: &RunConfig) -> Result<Self, CliError> {
        let c = &cfg.coefficient;
        let profile = Arc::new(match c.kind.as_str() {
            "constant" => {
                let v = c.value.ok_or_else(|| {
                    CliError::Config("coefficient.value required for kind = constant".into())
                })?;
                CoefficientProfile::constant(v, c.grid_size)?
            }
            "exponential" => {
                let a = c.exponent.ok_or_else(|| {
                    CliError::Config("coefficient.exponent required for kind = exponential".into())
                })?;
                CoefficientProfile::exponential(a, c.grid_size)?
            }
            "square_polynomial" => CoefficientProfile::square_polynomial(c.grid_size)?,
            "user_sampled" => {
                let path = c.table.as_ref().ok_or_else(|| {
                    CliError::Config("coefficient.table required for kind = user_sampled".into())
                })?;
                let (u, du, ddu) = load_sample_table(path)?;
                CoefficientProfile::from_samples(u, du, ddu, c.grid_size)?
            }
            other => {
                return Err(CliError::Config(format!(
                    "unknown coefficient.kind `{other}` (constant | exponential | \
                     square_polynomial | user_sampled)"
                )))
            }
        });
        let period = RationalPeriod::new(cfg.period.p, cfg.period.q)?;
        let n_basis = cfg
            .spectrum
            .n_max
            .max(cfg.solver.as_ref().and_then(|s| s.n_max).unwrap_or(0));
        let basis = Arc::new(solve_eigenbasis(profile.clone(), n_basis)?);
        Ok(Self {
            profile,
            basis,
            period,
        })
    }

    pub fn odd_window(&self, cfg: &RunConfig) -> Result<OperatorSpectrum, CliError> {
        Ok(odd_spectrum(
            &self.basis,
            self.period,
            cfg.spectrum.m_max,
            cfg.spectrum.n_max,
            cfg.spectrum.kernel_tol,
        )?)
    }

    pub fn space(&self, cfg: &RunConfig) -> Result<Arc<FieldSpace>, CliError> {
        let s = cfg.solver_section()?;
        let m_max = s.m_max.unwrap_or(cfg.spectrum.m_max as usize);
        let n_max = s.n_max.unwrap_or(cfg.spectrum.n_max);
        if m_max > cfg.spectrum.m_max as usize {
            return Err(CliError::Config(format!(
                "solver.m_max = {m_max} exceeds the spectrum window m_max = {}",
                cfg.spectrum.m_max
            )));
        }
        if n_max > cfg.spectrum.n_max {
            return Err(CliError::Config(format!(
                "solver.n_max = {n_max} exceeds the spectrum window n_max = {}",
                cfg.spectrum.n_max
            )));
        }
        Ok(FieldSpace::new(self.basis.clone(), self.period, m_max, n_max)?)
    }

    pub fn nonlinearity(
        &self,
        cfg: &RunConfig,
        space: &Arc<FieldSpace>,
    ) -> Result<NonlinearitySpec, CliError> {
        let n = cfg.nonlinearity_section()?;
        if n.forcing.is_empty() {
            return Ok(NonlinearitySpec::odd(n.c_lin, n.c_sat, n.c_osc));
        }
        let mut forcing = space.zero_field();
        for mode in &n.forcing {
            let kind = match mode.kind.as_str() {
                "cos" => TrigKind::Cos,
                "sin" => TrigKind::Sin,
                other => {
                    return Err(CliError::Config(format!(
                        "forcing kind must be cos or sin, got `{other}`"
                    )))
                }
            };
            if mode.m > space.m_max() || mode.n == 0 || mode.n > space.n_max() {
                return Err(CliError::Config(format!(
                    "forcing mode (m, n) = ({}, {}) outside the truncation ({}, {})",
                    mode.m,
                    mode.n,
                    space.m_max(),
                    space.n_max()
                )));
            }
            forcing.set(mode.m, mode.n, kind, mode.amplitude);
        }
        Ok(NonlinearitySpec::with_forcing(
            n.c_lin, n.c_sat, n.c_osc, forcing,
        )?)
    }

    pub fn solve_config(&self, cfg: &RunConfig) -> Result<SolveConfig, CliError> {
        let s = cfg.solver_section()?;
        let mut sc = SolveConfig::new(
            Multiplier::Constant(s.alpha),
            Multiplier::Constant(s.beta),
        );
        sc.continuation_steps = s.continuation_steps;
        sc.newton_tol = s.newton_tol;
        sc.newton_max_iter = s.newton_max_iter;
        sc.r_clamp = s.r_clamp;
        sc.seed = s.seed;
        Ok(sc)
    }
}

fn write_out(dir: &Path, name: &str, content: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, content)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

pub fn run_spectrum(cfg: &RunConfig) -> Result<String, CliError> {
    let pipe = Pipeline::build(cfg)?;
    let kappa = pipe.basis.kappa();
    let shift = kappa / std::f64::consts::PI;
    let mut csv = String::from("n,lambda_sq,defect\n");
    for n in 1..=cfg.spectrum.n_max {
        let lam = pipe.basis.lambda_sq(n);
        let defect = lam - (n * n) as f64 - shift;
        csv.push_str(&format!("{n},{},{}\n", fmt_float(lam), fmt_float(defect)));
    }
    let path = write_out(&cfg.output.dir, "spectrum.csv", &csv)?;
    Ok(format!(
        "spectrum: {} eigenvalues of ({}) with kappa = {:.6e} -> {}",
        cfg.spectrum.n_max,
        pipe.profile.describe(),
        kappa,
        path.display()
    ))
}

pub fn run_gaps(cfg: &RunConfig) -> Result<String, CliError> {
    let pipe = Pipeline::build(cfg)?;
    let odd = pipe.odd_window(cfg)?;
    let even = even_spectrum(
        &pipe.basis,
        pipe.period,
        cfg.spectrum.m_max,
        cfg.spectrum.n_max,
        cfg.spectrum.kernel_tol,
    )?;

    let mut rows: Vec<(u32, u32, f64, &str)> = odd
        .entries()
        .iter()
        .map(|e| (e.m, e.n, e.mu, "odd"))
        .chain(even.entries().iter().map(|e| (e.m, e.n, e.mu, "even")))
        .collect();
    rows.sort_by(|a, b| a.2.partial_cmp(&b.2).unwrap().then(a.0.cmp(&b.0)));
    let mut csv = String::from("m,n,mu,parity\n");
    for (m, n, mu, parity) in rows {
        csv.push_str(&format!("{m},{n},{},{parity}\n", fmt_float(mu)));
    }
    let csv_path = write_out(&cfg.output.dir, "gaps.csv", &csv)?;

    let level = cfg.spectrum.level;
    let (lo, hi) = odd.consecutive_pair(level)?;
    let kernel = odd.kernel_basis(level)?;
    let (min_abs, _, _) = odd.min_abs_mu();
    let summary = Json::obj(vec![
        ("level", Json::Num(level)),
        ("lambda_lower", Json::Num(lo)),
        ("lambda_upper", Json::Num(hi)),
        (
            "kernel_indices",
            Json::Arr(
                kernel
                    .iter()
                    .map(|&(m, n)| Json::Arr(vec![Json::Int(m as i64), Json::Int(n as i64)]))
                    .collect(),
            ),
        ),
        ("min_abs_mu", Json::Num(min_abs)),
    ]);
    let json_path = write_out(&cfg.output.dir, "gaps_summary.json", &summary.render())?;
    Ok(format!(
        "gaps: bracket({level}) = ({lo}, {hi}), min |mu| = {min_abs}, kernel size = {} -> {}, {}",
        kernel.len(),
        csv_path.display(),
        json_path.display()
    ))
}

fn nonresonance_json(report: &NonresonanceReport) -> Json {
    Json::obj(vec![
        ("bracketing_ok", Json::Bool(report.bracketing_ok)),
        ("gram_lower", Json::Num(report.gram_lower)),
        ("gram_upper", Json::Num(report.gram_upper)),
        ("epsilon_margin", Json::Num(report.epsilon_margin)),
        ("verdict", Json::Bool(report.verdict)),
        ("lambda_lower", Json::Num(report.lambda_lower)),
        ("lambda_upper", Json::Num(report.lambda_upper)),
    ])
}

pub fn run_check(cfg: &RunConfig) -> Result<String, CliError> {
    let pipe = Pipeline::build(cfg)?;
    let window = pipe.odd_window(cfg)?;
    let space = pipe.space(cfg)?;
    let sc = pipe.solve_config(cfg)?;
    let report = check_nonresonance(&space, &window, &sc.alpha, &sc.beta, false)?;
    let path = write_out(&cfg.output.dir, "check.json", &nonresonance_json(&report).render())?;
    if !report.verdict {
        return Err(CliError::Hypothesis(format!(
            "nonresonance verdict failed (bracketing_ok = {}, gram_lower = {:.3e}, \
             gram_upper = {:.3e}); report at {}",
            report.bracketing_ok,
            report.gram_lower,
            report.gram_upper,
            path.display()
        )));
    }
    Ok(format!(
        "check: verdict pass on [{}, {}] with margins (gram {:.3e}/{:.3e}) -> {}",
        report.lambda_lower,
        report.lambda_upper,
        report.gram_lower,
        report.gram_upper,
        path.display()
    ))
}

fn solution_json(field: &SpectralField) -> Json {
    let space = field.space();
    let parity = match field.parity_tag() {
        varwave_core::Parity::Odd => "odd_subspace",
        varwave_core::Parity::Even => "even_subspace",
        varwave_core::Parity::Mixed => "mixed",
    };
    Json::obj(vec![
        ("p", Json::Int(space.period().p() as i64)),
        ("q", Json::Int(space.period().q() as i64)),
        ("m_max", Json::Int(space.m_max() as i64)),
        ("n_max", Json::Int(space.n_max() as i64)),
        (
            "a",
            matrix_json(space.m_max() + 1, space.n_max(), |m, j| field.a[(m, j)]),
        ),
        (
            "b",
            matrix_json(space.m_max() + 1, space.n_max(), |m, j| field.b[(m, j)]),
        ),
        ("parity_tag", Json::Str(parity.to_string())),
    ])
}

fn grid_csv(space: &FieldSpace, field: &SpectralField) -> String {
    let grid = space.synthesize(field);
    let mut out = format!(
        "# n_t={} n_x={} T={} p={} q={}\n",
        grid.n_t(),
        grid.n_x(),
        fmt_float(space.period().t_period()),
        space.period().p(),
        space.period().q()
    );
    for i in 0..grid.n_t() {
        let row: Vec<String> = (0..grid.n_x()).map(|j| fmt_float(grid.values[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn run_solve(cfg: &RunConfig, force: bool) -> Result<String, CliError> {
    let pipe = Pipeline::build(cfg)?;
    let window = pipe.odd_window(cfg)?;
    let space = pipe.space(cfg)?;
    let sc = pipe.solve_config(cfg)?;
    let nl = pipe.nonlinearity(cfg, &space)?;

    let check = check_nonresonance(&space, &window, &sc.alpha, &sc.beta, false)?;
    write_out(&cfg.output.dir, "check.json", &nonresonance_json(&check).render())?;
    if !check.verdict && !force {
        return Err(CliError::Hypothesis(
            "nonresonance verdict failed; rerun with --force to solve anyway".into(),
        ));
    }

    let report = continuation_solve(&space, &window, &nl, &sc)?;
    let path_json = Json::Arr(
        report
            .continuation_path
            .iter()
            .map(|(s, norm, iters)| {
                Json::obj(vec![
                    ("s", Json::Num(*s)),
                    ("norm", Json::Num(*norm)),
                    ("newton_iters", Json::Int(*iters as i64)),
                ])
            })
            .collect(),
    );
    let solve_json = Json::obj(vec![
        ("residual_norm", Json::Num(report.residual_norm)),
        ("solution_norm", Json::Num(report.solution.norm())),
        ("apriori_bound", Json::Num(report.apriori_bound)),
        ("bound_satisfied", Json::Bool(report.bound_satisfied)),
        ("delta_num", Json::Num(report.delta_num)),
        ("h_r_norm", Json::Num(report.h_r_norm)),
        ("epsilon", Json::Num(report.epsilon)),
        ("continuation_path", path_json),
        ("nonresonance", nonresonance_json(&check)),
    ]);
    let report_path = write_out(&cfg.output.dir, "solve_report.json", &solve_json.render())?;
    let sol_path = write_out(
        &cfg.output.dir,
        "solution.json",
        &solution_json(&report.solution).render(),
    )?;
    if cfg.output.format == "csv" {
        write_out(&cfg.output.dir, "solution_grid.csv", &grid_csv(&space, &report.solution))?;
    }
    Ok(format!(
        "solve: |y| = {:.6e}, residual = {:.3e}, bound ok = {} -> {}, {}",
        report.solution.norm(),
        report.residual_norm,
        report.bound_satisfied,
        report_path.display(),
        sol_path.display()
    ))
}

/// Reads a solution back from its JSON dump, rebuilding the field on a
/// space consistent with the config.
fn load_solution(pipe: &Pipeline, cfg: &RunConfig, path: &Path) -> Result<SpectralField, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read solution {}: {e}", path.display())))?;
    let v: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("malformed solution JSON: {e}")))?;
    let get_int = |key: &str| -> Result<i64, CliError> {
        v.get(key)
            .and_then(|x| x.as_i64())
            .ok_or_else(|| CliError::Config(format!("solution JSON missing integer `{key}`")))
    };
    let p = get_int("p")? as u32;
    let q = get_int("q")? as u32;
    if (p, q) != (cfg.period.p, cfg.period.q) {
        return Err(CliError::Config(format!(
            "solution period {p}/{q} does not match config {}/{}",
            cfg.period.p, cfg.period.q
        )));
    }
    let m_max = get_int("m_max")? as usize;
    let n_max = get_int("n_max")? as usize;
    let space = FieldSpace::new(pipe.basis.clone(), pipe.period, m_max, n_max)?;
    let mut field = space.zero_field();
    let read_matrix = |key: &str| -> Result<Vec<Vec<f64>>, CliError> {
        let arr = v
            .get(key)
            .and_then(|x| x.as_array())
            .ok_or_else(|| CliError::Config(format!("solution JSON missing matrix `{key}`")))?;
        arr.iter()
            .map(|row| {
                row.as_array()
                    .ok_or_else(|| CliError::Config(format!("`{key}` rows must be arrays")))?
                    .iter()
                    .map(|x| {
                        x.as_f64()
                            .ok_or_else(|| CliError::Config(format!("non-numeric entry in `{key}`")))
                    })
                    .collect()
            })
            .collect()
    };
    let a = read_matrix("a")?;
    let b = read_matrix("b")?;
    if a.len() != m_max + 1 || b.len() != m_max + 1 {
        return Err(CliError::Config("solution matrices have wrong row count".into()));
    }
    for (m, row) in a.iter().enumerate() {
        if row.len() != n_max {
            return Err(CliError::Config("solution matrices have wrong column count".into()));
        }
        for (j, &val) in row.iter().enumerate() {
            field.a[(m, j)] = val;
        }
    }
    for (m, row) in b.iter().enumerate().skip(1) {
        for (j, &val) in row.iter().enumerate() {
            field.b[(m, j)] = val;
        }
    }
    Ok(field)
}

pub fn run_verify(cfg: &RunConfig, solution_path: &Path) -> Result<String, CliError> {
    let pipe = Pipeline::build(cfg)?;
    let window = pipe.odd_window(cfg)?;
    let solution = load_solution(&pipe, cfg, solution_path)?;
    let space = solution.space().clone();
    let nl = pipe.nonlinearity(cfg, &space)?;
    let sc = pipe.solve_config(cfg)?;

    let ly = space.apply_wave_operator(&solution);
    let fy = space.apply_nonlinearity(&nl, &solution)?;
    let spectral_residual = space.pack_odd(&ly.add_scaled(&fy, -1.0)).norm();
    let weak = weak_residual(&space, &solution, &nl, 20, sc.seed)?;
    let bounds = prepare_bounds(&space, &window, &nl, &sc)?;

    let json = Json::obj(vec![
        ("spectral_residual", Json::Num(spectral_residual)),
        ("weak_residual", Json::Num(weak)),
        ("apriori_bound", Json::Num(bounds.apriori_bound)),
        ("delta_num", Json::Num(bounds.delta_num)),
    ]);
    let path = write_out(&cfg.output.dir, "verify.json", &json.render())?;
    Ok(format!(
        "verify: spectral residual = {spectral_residual:.3e}, weak residual = {weak:.3e} -> {}",
        path.display()
    ))
}

pub fn run_probe(cfg: &RunConfig, num_starts: usize) -> Result<String, CliError> {
    let pipe = Pipeline::build(cfg)?;
    let window = pipe.odd_window(cfg)?;
    let space = pipe.space(cfg)?;
    let sc = pipe.solve_config(cfg)?;
    let nl = pipe.nonlinearity(cfg, &space)?;
    let report = uniqueness_probe(&space, &window, &nl, &sc, num_starts)?;

    let runs = Json::Arr(
        report
            .runs
            .iter()
            .map(|r| {
                Json::obj(vec![
                    ("start_norm", Json::Num(r.start_norm)),
                    ("converged", Json::Bool(r.converged)),
                    ("newton_iters", Json::Int(r.newton_iters as i64)),
                    ("solution_norm", Json::Num(r.solution_norm)),
                ])
            })
            .collect(),
    );
    let json = Json::obj(vec![
        ("distinct_solutions", Json::Int(report.distinct_solutions as i64)),
        ("max_pairwise_distance", Json::Num(report.max_pairwise_distance)),
        ("apriori_bound", Json::Num(report.apriori_bound)),
        ("runs", runs),
    ]);
    let path = write_out(&cfg.output.dir, "probe.json", &json.render())?;
    if report.distinct_solutions > 1 {
        return Err(CliError::Hypothesis(format!(
            "{} distinct solutions found on the odd subspace; report at {}",
            report.distinct_solutions,
            path.display()
        )));
    }
    Ok(format!(
        "probe-uniqueness: {} starts, {} converged, distinct = {}, max pairwise = {:.3e} -> {}",
        report.runs.len(),
        report.runs.iter().filter(|r| r.converged).count(),
        report.distinct_solutions,
        report.max_pairwise_distance,
        path.display()
    ))
}
