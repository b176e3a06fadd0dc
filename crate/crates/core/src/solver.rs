//! Periodic solutions on the odd subspace by numerical continuation.
//!
//! The homotopy L_o y − (1−s)αy − sF_o(y) = 0 is traversed in equal s-steps
//! from the trivial s = 0 solution (the coercivity of L_o − Γ_α leaves only
//! y = 0 there) with the previous solution as each Newton start (D16).
//! Jacobians act matrix-free: the multiplication operators are applied
//! pseudo-spectrally on the dealiasing grid (D17) with closed-form
//! derivatives of the parametric family (D18); linear solves run GMRES
//! preconditioned by the diagonal resolvent (μ_mn − mean γ)⁻¹.

use crate::error::{Result, VarwaveError};
use crate::function_space::{FieldSpace, GridField, Multiplier, NonlinearitySpec, Parity, SpectralField};
use crate::krylov;
use crate::wave_spectrum::OperatorSpectrum;
use nalgebra::DVector;
use std::sync::Arc;

pub use crate::function_space::SymmetryClass;

/// Continuation and Newton parameters; alpha/beta are the nonresonance
/// multipliers bracketed by consecutive eigenvalues of L_o.
#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub alpha: Multiplier,
    pub beta: Multiplier,
    pub continuation_steps: usize,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// R of the clamp construction (condition 3-6).
    pub r_clamp: f64,
    pub seed: u64,
}

impl SolveConfig {
    pub fn new(alpha: Multiplier, beta: Multiplier) -> Self {
        Self {
            alpha,
            beta,
            continuation_steps: 10,
            newton_tol: 1e-10,
            newton_max_iter: 50,
            r_clamp: 10.0,
            seed: 0,
        }
    }
}

/// One record per continuation step: (s, ‖y_s‖, newton iterations).
pub type ContinuationStep = (f64, f64, usize);

/// Outcome of a continuation solve.
#[derive(Debug)]
pub struct SolveReport {
    /// odd-parity solution at s = 1
    pub solution: SpectralField,
    /// ‖L_o y − F_o(y)‖ in the truncated odd subspace
    pub residual_norm: f64,
    pub continuation_path: Vec<ContinuationStep>,
    /// (1/δ_num)(2‖h_R‖ + πT‖α‖_∞)
    pub apriori_bound: f64,
    pub bound_satisfied: bool,
    /// enumeration surrogate for the coercivity constant over [α−ε, β+ε]
    pub delta_num: f64,
    pub h_r_norm: f64,
    /// computed clamp margin ε of condition (3-6)
    pub epsilon: f64,
}

/// The clamp slope g of Theorem 4.1's proof: y⁻¹f̂ outside [−R, R], linear
/// interpolation toward α(t, x) inside. `alpha_tx` and `forcing_tx` are the
/// local values of α and the forcing at the evaluation point.
pub fn clamp_slope_g(
    nl: &NonlinearitySpec,
    alpha_tx: f64,
    forcing_tx: f64,
    r: f64,
    y: f64,
) -> Result<f64> {
    if r <= 0.0 {
        return Err(VarwaveError::InvalidInput("clamp radius R must be > 0".into()));
    }
    let fhat = |v: f64| nl.eval_scalar(v) + forcing_tx;
    Ok(if y.abs() >= r {
        fhat(y) / y
    } else if y >= 0.0 {
        (fhat(r) / r) * (y / r) + (1.0 - y / r) * alpha_tx
    } else {
        (fhat(-r) / r) * (y / r) + (1.0 + y / r) * alpha_tx
    })
}

/// Smallest ε ≥ 0 for which condition (3-6) holds with the parametric
/// family: α−ε ≤ f̂/y ≤ β+ε for |y| ≥ R, using the closed-form tail bounds
/// widened by sup|e|/R for the forcing.
pub fn clamp_margin(
    space: &FieldSpace,
    nl: &NonlinearitySpec,
    alpha: &Multiplier,
    beta: &Multiplier,
    r: f64,
) -> Result<f64> {
    if r <= 0.0 {
        return Err(VarwaveError::InvalidInput("clamp radius R must be > 0".into()));
    }
    let tail = nl.tail_slope_bounds(r);
    let forcing = nl.forcing_sup(space) / r;
    let (lo, hi) = (tail.lo - forcing, tail.hi + forcing);
    let (_, alpha_hi) = alpha.range(space);
    let (beta_lo, _) = beta.range(space);
    Ok((alpha_hi - lo).max(hi - beta_lo).max(0.0))
}

/// Applies (L_o − Γ_γ)⁻¹ on the truncated odd subspace. Constant γ is exact
/// diagonal division; field γ runs GMRES preconditioned by the diagonal
/// (μ_mn − mean γ)⁻¹.
pub fn resolvent_apply(
    space: &Arc<FieldSpace>,
    gamma: &Multiplier,
    rhs: &SpectralField,
    kernel_tol: f64,
    tol: f64,
) -> Result<SpectralField> {
    if !gamma.is_even_parity() {
        return Err(VarwaveError::InvalidInput(
            "resolvent multiplier must have even parity".into(),
        ));
    }
    if rhs.even_part_norm() != 0.0 {
        return Err(VarwaveError::InvalidInput(
            "resolvent right-hand side must be odd-parity".into(),
        ));
    }
    let packed_rhs = space.pack_odd(rhs);
    let solution = resolvent_packed(space, gamma, &packed_rhs, kernel_tol, tol)?;
    Ok(space.unpack_odd(&solution))
}

/// Packed-vector core of the resolvent, shared with the coercivity
/// estimator.
pub(crate) fn resolvent_packed(
    space: &Arc<FieldSpace>,
    gamma: &Multiplier,
    rhs: &DVector<f64>,
    kernel_tol: f64,
    tol: f64,
) -> Result<DVector<f64>> {
    let diag = gamma.shifted_mu_diagonal(space);
    check_diagonal(space, &diag, kernel_tol)?;
    match gamma {
        Multiplier::Constant(_) => Ok(rhs.component_div(&diag)),
        Multiplier::Field(_) => {
            let gamma_grid = space.multiplier_grid(gamma, true);
            let op = OddMultiplierOp::new(space.clone(), gamma_grid);
            krylov::gmres(|v| op.apply(v), rhs, &diag, tol, 400)
        }
    }
}

fn check_diagonal(space: &FieldSpace, diag: &DVector<f64>, kernel_tol: f64) -> Result<()> {
    for (idx, d) in diag.iter().enumerate() {
        if d.abs() <= kernel_tol {
            let (m, n, _) = space.packed_odd_index(idx);
            return Err(VarwaveError::ResonantMode { m, n, gap: d.abs() });
        }
    }
    Ok(())
}

/// v ↦ μ∘v − Γ_γ v on the packed odd subspace; the multiplier grid lives on
/// the dealiasing grid so products never alias back into the band.
struct OddMultiplierOp {
    space: Arc<FieldSpace>,
    gamma_grid: GridField,
}

impl OddMultiplierOp {
    fn new(space: Arc<FieldSpace>, gamma_grid: GridField) -> Self {
        Self { space, gamma_grid }
    }

    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let field = self.space.unpack_odd(v);
        let mut grid = self.space.synthesize_padded(&field);
        grid.values.component_mul_assign(&self.gamma_grid.values);
        let mult = self
            .space
            .analyze(&grid)
            .expect("internal grids are consistent");
        let mut out = self.space.pack_odd(&self.space.apply_wave_operator(&field));
        out -= self.space.pack_odd(&mult);
        out
    }
}

struct HomotopyProblem<'a> {
    space: &'a Arc<FieldSpace>,
    nl: &'a NonlinearitySpec,
    alpha_grid: GridField,
    newton_tol: f64,
    newton_max_iter: usize,
    kernel_tol: f64,
}

struct NewtonOutcome {
    y: DVector<f64>,
    iters: usize,
    residual: f64,
}

impl HomotopyProblem<'_> {
    /// residual r(y; s) = μ∘y − (1−s)Γ_α y − s F_o(y), plus ‖F_o(y)‖ and the
    /// even-leak check of the symmetry declaration.
    fn residual(&self, y: &DVector<f64>, s: f64) -> Result<(DVector<f64>, f64)> {
        let field = self.space.unpack_odd(y);
        let mut r = self.space.pack_odd(&self.space.apply_wave_operator(&field));
        if s < 1.0 {
            let mut grid = self.space.synthesize_padded(&field);
            grid.values.component_mul_assign(&self.alpha_grid.values);
            let alpha_term = self.space.analyze(&grid)?;
            r.axpy(-(1.0 - s), &self.space.pack_odd(&alpha_term), 1.0);
        }
        let f_field = self.space.apply_nonlinearity(self.nl, &field)?;
        let even_leak = f_field.even_part_norm();
        if even_leak > 1e-8 * (1.0 + field.norm()) {
            return Err(VarwaveError::SymmetryViolation {
                s,
                norm: even_leak,
            });
        }
        let f_packed = self.space.pack_odd(&f_field);
        let f_norm = f_packed.norm();
        r.axpy(-s, &f_packed, 1.0);
        Ok((r, f_norm))
    }

    /// One damped Newton solve at fixed s from `y0`.
    fn newton(&self, y0: DVector<f64>, s: f64) -> Result<NewtonOutcome> {
        let mut y = y0;
        let (mut r, mut f_norm) = self.residual(&y, s)?;
        for iter in 0..self.newton_max_iter {
            let rnorm = r.norm();
            if rnorm <= self.newton_tol * (1.0 + f_norm) {
                return Ok(NewtonOutcome {
                    y,
                    iters: iter,
                    residual: rnorm,
                });
            }

            // multiplier of the Jacobian: (1−s)α + s f̂'(y), on the padded grid
            let field = self.space.unpack_odd(&y);
            let deriv = self.space.nonlinearity_derivative_grid(self.nl, &field);
            let mut gamma_grid = deriv;
            gamma_grid.values *= s;
            gamma_grid.values += (1.0 - s) * &self.alpha_grid.values;
            let gamma_mean = gamma_grid.values.iter().sum::<f64>() / gamma_grid.values.len() as f64;

            let mut diag = self.space.packed_odd_mu();
            diag.add_scalar_mut(-gamma_mean);
            check_diagonal(self.space, &diag, self.kernel_tol)?;

            let op = OddMultiplierOp::new(self.space.clone(), gamma_grid);
            let neg_r = -&r;
            let step = krylov::gmres(
                |v| op.apply(v),
                &neg_r,
                &diag,
                (self.newton_tol * 1e-2).max(1e-14),
                400,
            )?;

            // backtracking on the residual norm
            let mut t = 1.0;
            let mut accepted = None;
            while t > 1e-9 {
                let candidate = &y + t * &step;
                match self.residual(&candidate, s) {
                    Ok((rc, fc)) if rc.norm() <= (1.0 - 1e-4 * t) * rnorm => {
                        accepted = Some((candidate, rc, fc));
                        break;
                    }
                    Ok(_) => t *= 0.5,
                    Err(VarwaveError::NonFinite(_)) => t *= 0.5,
                    Err(e) => return Err(e),
                }
            }
            match accepted {
                Some((ynew, rnew, fnew)) => {
                    y = ynew;
                    r = rnew;
                    f_norm = fnew;
                }
                None => {
                    return Err(VarwaveError::NewtonDiverged {
                        s,
                        reason: format!("line search exhausted at residual {rnorm:.3e}"),
                    })
                }
            }
        }
        let rnorm = r.norm();
        if rnorm <= self.newton_tol * (1.0 + f_norm) {
            Ok(NewtonOutcome {
                y,
                iters: self.newton_max_iter,
                residual: rnorm,
            })
        } else {
            Err(VarwaveError::NewtonDiverged {
                s,
                reason: format!(
                    "residual {rnorm:.3e} after {} iterations",
                    self.newton_max_iter
                ),
            })
        }
    }
}

fn validate_multiplier_parity(cfg: &SolveConfig) -> Result<()> {
    if !cfg.alpha.is_even_parity() || !cfg.beta.is_even_parity() {
        return Err(VarwaveError::InvalidInput(
            "alpha and beta must be even-parity multipliers".into(),
        ));
    }
    Ok(())
}

/// Pointwise bracketing λ̲ ≤ α ≤ β ≤ λ̄ plus the δ enumeration surrogate and
/// the a priori bound ingredients. Shared by the solve and the probe.
#[derive(Debug, Clone, Copy)]
pub struct BoundReport {
    pub delta_num: f64,
    pub epsilon: f64,
    pub h_r_norm: f64,
    pub apriori_bound: f64,
}

/// Validates the multiplier bracketing against the spectrum and assembles
/// the a priori bound (1/δ)(2‖h_R‖ + πT‖α‖_∞) with the enumeration δ.
pub fn prepare_bounds(
    space: &Arc<FieldSpace>,
    spectrum: &OperatorSpectrum,
    nl: &NonlinearitySpec,
    cfg: &SolveConfig,
) -> Result<BoundReport> {
    let (alpha_lo, alpha_hi) = cfg.alpha.range(space);
    let (beta_lo, beta_hi) = cfg.beta.range(space);
    if alpha_hi > beta_lo + 1e-12 && alpha_lo > beta_lo {
        return Err(VarwaveError::InvalidInput(format!(
            "alpha must sit below beta pointwise (max alpha = {alpha_hi}, min beta = {beta_lo})"
        )));
    }
    let level = 0.5 * (alpha_lo + beta_hi);
    let (lam_lo, lam_hi) = spectrum.consecutive_pair(level)?;
    if alpha_lo < lam_lo - 1e-12 || beta_hi > lam_hi + 1e-12 {
        return Err(VarwaveError::InvalidInput(format!(
            "multipliers escape the consecutive pair [{lam_lo}, {lam_hi}]: \
             alpha range [{alpha_lo}, {alpha_hi}], beta range [{beta_lo}, {beta_hi}]"
        )));
    }
    let epsilon = clamp_margin(space, nl, &cfg.alpha, &cfg.beta, cfg.r_clamp)?;
    let delta_num =
        spectrum.min_distance_to_interval(alpha_lo - epsilon, beta_hi + epsilon)?;
    if delta_num <= spectrum.kernel_tol() {
        return Err(VarwaveError::InvalidInput(format!(
            "widened multiplier interval touches the spectrum (delta = {delta_num:.3e}); \
             the resonant regime is out of scope"
        )));
    }
    let h_r_norm = nl.envelope_norm(space, cfg.r_clamp)?;
    let t_period = space.period().t_period();
    let alpha_sup = alpha_lo.abs().max(alpha_hi.abs());
    let apriori_bound =
        (2.0 * h_r_norm + std::f64::consts::PI * t_period * alpha_sup) / delta_num;
    Ok(BoundReport {
        delta_num,
        epsilon,
        h_r_norm,
        apriori_bound,
    })
}

/// Traverses the homotopy to s = 1 and returns the solution with its
/// residual, path, and a priori bound check.
pub fn continuation_solve(
    space: &Arc<FieldSpace>,
    spectrum: &OperatorSpectrum,
    nl: &NonlinearitySpec,
    cfg: &SolveConfig,
) -> Result<SolveReport> {
    validate_multiplier_parity(cfg)?;
    if cfg.continuation_steps == 0 {
        return Err(VarwaveError::InvalidInput(
            "continuation_steps must be >= 1".into(),
        ));
    }
    let bounds = prepare_bounds(space, spectrum, nl, cfg)?;
    let problem = HomotopyProblem {
        space,
        nl,
        alpha_grid: space.multiplier_grid(&cfg.alpha, true),
        newton_tol: cfg.newton_tol,
        newton_max_iter: cfg.newton_max_iter,
        kernel_tol: spectrum.kernel_tol(),
    };

    let mut y = DVector::zeros(space.odd_dim());
    let mut path = Vec::with_capacity(cfg.continuation_steps);
    let mut final_residual = 0.0;
    for k in 1..=cfg.continuation_steps {
        let s = k as f64 / cfg.continuation_steps as f64;
        let out = problem.newton(y, s)?;
        y = out.y;
        final_residual = out.residual;
        path.push((s, y.norm(), out.iters));
    }

    let solution = space.unpack_odd(&y);
    let norm = solution.norm();
    Ok(SolveReport {
        bound_satisfied: norm <= bounds.apriori_bound,
        solution,
        residual_norm: final_residual,
        continuation_path: path,
        apriori_bound: bounds.apriori_bound,
        delta_num: bounds.delta_num,
        h_r_norm: bounds.h_r_norm,
        epsilon: bounds.epsilon,
    })
}

/// One probe run: where Newton landed from a random start.
#[derive(Debug, Clone)]
pub struct ProbeRun {
    pub start_norm: f64,
    pub converged: bool,
    pub newton_iters: usize,
    pub solution_norm: f64,
}

/// Outcome of the uniqueness probe.
#[derive(Debug)]
pub struct ProbeReport {
    pub runs: Vec<ProbeRun>,
    /// number of distinct converged solutions (pairwise distance > 1e-4)
    pub distinct_solutions: usize,
    /// largest pairwise distance among converged solutions
    pub max_pairwise_distance: f64,
    pub apriori_bound: f64,
}

/// Runs Newton on L_o y = F_o(y) from seeded random odd starts with norms up
/// to 10× the a priori bound; under the global nonresonance condition every
/// run should land on the trivial solution.
pub fn uniqueness_probe(
    space: &Arc<FieldSpace>,
    spectrum: &OperatorSpectrum,
    nl: &NonlinearitySpec,
    cfg: &SolveConfig,
    num_starts: usize,
) -> Result<ProbeReport> {
    validate_multiplier_parity(cfg)?;
    if num_starts == 0 {
        return Err(VarwaveError::InvalidInput("num_starts must be >= 1".into()));
    }
    if nl.symmetry() != SymmetryClass::OddF1Only {
        return Err(VarwaveError::InvalidInput(
            "uniqueness probe needs the odd family with zero forcing (3-m)".into(),
        ));
    }
    let (alpha_lo, _) = cfg.alpha.range(space);
    let (_, beta_hi) = cfg.beta.range(space);
    let slopes = nl.derivative_bounds();
    if !slopes.within(alpha_lo, beta_hi) {
        return Err(VarwaveError::InvalidInput(format!(
            "incremental slope range [{}, {}] escapes [alpha, beta] = [{alpha_lo}, {beta_hi}]",
            slopes.lo, slopes.hi
        )));
    }
    let bounds = prepare_bounds(space, spectrum, nl, cfg)?;
    let problem = HomotopyProblem {
        space,
        nl,
        alpha_grid: space.multiplier_grid(&cfg.alpha, true),
        newton_tol: cfg.newton_tol,
        newton_max_iter: cfg.newton_max_iter,
        kernel_tol: spectrum.kernel_tol(),
    };

    let mut runs = Vec::with_capacity(num_starts);
    let mut found: Vec<DVector<f64>> = Vec::new();
    for k in 0..num_starts {
        let norm = 10.0 * bounds.apriori_bound * (k + 1) as f64 / num_starts as f64;
        let start = space.random_field(cfg.seed.wrapping_add(k as u64), Parity::Odd, norm);
        let y0 = space.pack_odd(&start);
        match problem.newton(y0, 1.0) {
            Ok(out) => {
                runs.push(ProbeRun {
                    start_norm: norm,
                    converged: true,
                    newton_iters: out.iters,
                    solution_norm: out.y.norm(),
                });
                found.push(out.y);
            }
            Err(VarwaveError::NewtonDiverged { .. }) => {
                runs.push(ProbeRun {
                    start_norm: norm,
                    converged: false,
                    newton_iters: cfg.newton_max_iter,
                    solution_norm: f64::NAN,
                });
            }
            Err(e) => return Err(e),
        }
    }

    let mut distinct: Vec<&DVector<f64>> = Vec::new();
    let mut max_dist: f64 = 0.0;
    for sol in &found {
        for other in &found {
            max_dist = max_dist.max((sol - other).norm());
        }
        if distinct.iter().all(|d| (*d - sol).norm() > 1e-4) {
            distinct.push(sol);
        }
    }
    Ok(ProbeReport {
        runs,
        distinct_solutions: distinct.len(),
        max_pairwise_distance: max_dist,
        apriori_bound: bounds.apriori_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficient::CoefficientProfile;
    use crate::function_space::TrigKind;
    use crate::sturm_liouville::solve_eigenbasis;
    use crate::wave_spectrum::{odd_spectrum, RationalPeriod, DEFAULT_KERNEL_TOL};
    use approx::assert_abs_diff_eq;

    fn setup(m_max: usize, n_max: usize) -> (Arc<FieldSpace>, OperatorSpectrum) {
        let basis = Arc::new(
            solve_eigenbasis(
                Arc::new(CoefficientProfile::constant(1.0, 257).unwrap()),
                n_max + 4,
            )
            .unwrap(),
        );
        let period = RationalPeriod::new(2, 1).unwrap();
        let spectrum = odd_spectrum(
            &basis,
            period,
            2 * m_max as u32 + 9,
            n_max + 4,
            DEFAULT_KERNEL_TOL,
        )
        .unwrap();
        let space = FieldSpace::new(basis, period, m_max, n_max).unwrap();
        (space, spectrum)
    }

    #[test]
    fn clamp_examples() {
        // f̂ = y, α ≡ 1: the slope is identically 1 outside the clamp radius
        let lin = NonlinearitySpec::odd(1.0, 0.0, 0.0);
        for y in [5.0, -7.0, 100.0] {
            assert_abs_diff_eq!(clamp_slope_g(&lin, 1.0, 0.0, 5.0, y).unwrap(), 1.0, epsilon = 1e-15);
        }
        // y = 0 lands on α from both branches
        assert_abs_diff_eq!(clamp_slope_g(&lin, 0.3, 0.0, 5.0, 0.0).unwrap(), 0.3, epsilon = 1e-15);
        // f̂ = y³/(1+y²)
        let sat = NonlinearitySpec::odd(0.0, 1.0, 0.0);
        assert_abs_diff_eq!(
            clamp_slope_g(&sat, 0.0, 0.0, 10.0, 10.0).unwrap(),
            100.0 / 101.0,
            epsilon = 1e-15
        );
        assert!(clamp_slope_g(&sat, 0.0, 0.0, -1.0, 0.0).is_err());
        // the clamp stays inside [α−ε, β+ε] for admissible parameters
        let nl = NonlinearitySpec::odd(-0.25, 0.125, 0.05);
        let r = 10.0;
        let tail = nl.tail_slope_bounds(r);
        for k in -200..=200 {
            let y = k as f64 * 0.11;
            let g = clamp_slope_g(&nl, -0.5, 0.0, r, y).unwrap();
            assert!(g >= tail.lo.min(-0.5) - 1e-12 && g <= tail.hi.max(-0.5) + 1e-12);
        }
    }

    #[test]
    fn clamp_is_continuous_at_radius() {
        let nl = NonlinearitySpec::odd(-0.25, 0.125, 0.05);
        let r = 3.0;
        for y in [r, -r] {
            let inside = clamp_slope_g(&nl, -0.4, 0.1, r, y * (1.0 - 1e-9)).unwrap();
            let outside = clamp_slope_g(&nl, -0.4, 0.1, r, y).unwrap();
            assert_abs_diff_eq!(inside, outside, epsilon = 1e-6);
        }
    }

    #[test]
    fn resolvent_diagonal_examples() {
        let (space, _) = setup(5, 4);
        // γ = −1/4 on the (1,1) cosine: μ = 3/4, division by 3/4+1/4 = 1
        let rhs = space.basis_field(1, 1, TrigKind::Cos);
        let y = resolvent_apply(&space, &Multiplier::Constant(-0.25), &rhs, 1e-6, 1e-12).unwrap();
        assert_abs_diff_eq!(y.get(1, 1, TrigKind::Cos), 1.0, epsilon = 1e-14);
        // γ = 0 on (3,1): μ = −5/4
        let rhs = space.basis_field(3, 1, TrigKind::Cos);
        let y = resolvent_apply(&space, &Multiplier::Constant(0.0), &rhs, 1e-6, 1e-12).unwrap();
        assert_abs_diff_eq!(y.get(3, 1, TrigKind::Cos), -0.8, epsilon = 1e-14);
    }

    #[test]
    fn resolvent_round_trip_with_variable_gamma() {
        let (space, _) = setup(5, 4);
        let mut gamma_field = space.zero_field();
        gamma_field.set(0, 1, TrigKind::Cos, -0.3);
        gamma_field.set(2, 2, TrigKind::Cos, 0.05);
        let gamma = Multiplier::Field(gamma_field);
        let rhs = space.random_field(5, Parity::Odd, 1.0);
        let y = resolvent_apply(&space, &gamma, &rhs, 1e-6, 1e-12).unwrap();
        // forward apply reproduces the right-hand side
        let grid = space.multiplier_grid(&gamma, true);
        let op = OddMultiplierOp::new(space.clone(), grid);
        let back = op.apply(&space.pack_odd(&y));
        let defect = (back - space.pack_odd(&rhs)).norm();
        assert!(defect < 1e-10, "round trip defect {defect}");
    }

    #[test]
    fn resolvent_rejects_resonant_diagonal() {
        let (space, _) = setup(5, 4);
        let rhs = space.basis_field(1, 1, TrigKind::Cos);
        // γ = 3/4 annihilates the (1,1) mode
        assert!(matches!(
            resolvent_apply(&space, &Multiplier::Constant(0.75), &rhs, 1e-6, 1e-12),
            Err(VarwaveError::ResonantMode { m: 1, n: 1, .. })
        ));
    }

    #[test]
    fn zero_problem_solves_to_zero() {
        let (space, spectrum) = setup(5, 4);
        let nl = NonlinearitySpec::odd(0.0, 0.0, 0.0);
        let cfg = SolveConfig::new(Multiplier::Constant(-1.15), Multiplier::Constant(0.65));
        let report = continuation_solve(&space, &spectrum, &nl, &cfg).unwrap();
        assert_eq!(report.solution.norm(), 0.0);
        assert_eq!(report.residual_norm, 0.0);
        assert!(report.bound_satisfied);
    }

    #[test]
    fn linear_solve_matches_spectral_division() {
        let (space, spectrum) = setup(5, 4);
        // f̂ = e: y = e/μ at (1, 1) hence 4/3
        let forcing = space.basis_field(1, 1, TrigKind::Cos);
        let nl = NonlinearitySpec::with_forcing(0.0, 0.0, 0.0, forcing).unwrap();
        let cfg = SolveConfig::new(Multiplier::Constant(-0.25), Multiplier::Constant(0.25));
        let report = continuation_solve(&space, &spectrum, &nl, &cfg).unwrap();
        assert_abs_diff_eq!(
            report.solution.get(1, 1, TrigKind::Cos),
            4.0 / 3.0,
            epsilon = 1e-8
        );
        // f̂ = −y/4 + e: y = e/(μ + 1/4) = 1 at (1, 1); independent of the
        // number of continuation steps
        for steps in [1, 3, 10] {
            let forcing = space.basis_field(1, 1, TrigKind::Cos);
            let nl = NonlinearitySpec::with_forcing(-0.25, 0.0, 0.0, forcing).unwrap();
            let mut cfg = SolveConfig::new(Multiplier::Constant(-0.25), Multiplier::Constant(0.25));
            cfg.continuation_steps = steps;
            let report = continuation_solve(&space, &spectrum, &nl, &cfg).unwrap();
            assert_abs_diff_eq!(report.solution.get(1, 1, TrigKind::Cos), 1.0, epsilon = 1e-8);
            let other_mass = report.solution.norm_sq()
                - report.solution.get(1, 1, TrigKind::Cos).powi(2);
            assert!(other_mass.abs() < 1e-16);
        }
    }

    #[test]
    fn iterates_stay_odd_and_bound_holds() {
        let (space, spectrum) = setup(7, 5);
        let forcing = space.basis_field(1, 1, TrigKind::Cos).scaled(0.5);
        let nl = NonlinearitySpec::with_forcing(-0.25, 0.125, 0.0, forcing).unwrap();
        let cfg = SolveConfig::new(Multiplier::Constant(-1.15), Multiplier::Constant(0.65));
        let report = continuation_solve(&space, &spectrum, &nl, &cfg).unwrap();
        assert_eq!(report.solution.even_part_norm(), 0.0);
        assert!(report.bound_satisfied);
        assert!(report.residual_norm <= 1e-9);
        assert_eq!(report.continuation_path.len(), 10);
        // residual recomputed independently
        let ly = space.apply_wave_operator(&report.solution);
        let fy = space.apply_nonlinearity(&nl, &report.solution).unwrap();
        let res = space
            .pack_odd(&ly.add_scaled(&fy, -1.0))
            .norm();
        assert!(res <= 1e-9, "recomputed residual {res}");
    }

    #[test]
    fn probe_trivial_and_linear_cases() {
        let (space, spectrum) = setup(5, 4);
        // f̂ = 0: one-step convergence to zero everywhere
        let nl = NonlinearitySpec::odd(0.0, 0.0, 0.0);
        let cfg = SolveConfig::new(Multiplier::Constant(-1.15), Multiplier::Constant(0.65));
        let report = uniqueness_probe(&space, &spectrum, &nl, &cfg, 6).unwrap();
        assert_eq!(report.distinct_solutions, 1);
        assert!(report.max_pairwise_distance <= 1e-6);
        assert!(report.runs.iter().all(|r| r.converged && r.solution_norm < 1e-8));

        // f̂ = −y/4: slope −1/4 ∈ (−5/4, 3/4)
        let nl = NonlinearitySpec::odd(-0.25, 0.0, 0.0);
        let report = uniqueness_probe(&space, &spectrum, &nl, &cfg, 6).unwrap();
        assert_eq!(report.distinct_solutions, 1);
        assert!(report.runs.iter().all(|r| r.converged && r.solution_norm < 1e-8));
    }

    #[test]
    fn probe_rejects_out_of_bracket_slopes() {
        let (space, spectrum) = setup(5, 4);
        // f̂ = y has slope 1 > 3/4
        let nl = NonlinearitySpec::odd(1.0, 0.0, 0.0);
        let cfg = SolveConfig::new(Multiplier::Constant(-1.15), Multiplier::Constant(0.65));
        assert!(uniqueness_probe(&space, &spectrum, &nl, &cfg, 3).is_err());
    }

    #[test]
    fn probe_rejects_forced_nonlinearity() {
        let (space, spectrum) = setup(5, 4);
        let forcing = space.basis_field(1, 1, TrigKind::Cos);
        let nl = NonlinearitySpec::with_forcing(-0.25, 0.0, 0.0, forcing).unwrap();
        let cfg = SolveConfig::new(Multiplier::Constant(-1.15), Multiplier::Constant(0.65));
        assert!(uniqueness_probe(&space, &spectrum, &nl, &cfg, 3).is_err());
    }

    #[test]
    fn solve_rejects_escaping_multipliers() {
        let (space, spectrum) = setup(5, 4);
        let nl = NonlinearitySpec::odd(0.0, 0.0, 0.0);
        let cfg = SolveConfig::new(Multiplier::Constant(-1.15), Multiplier::Constant(1.25));
        assert!(continuation_solve(&space, &spectrum, &nl, &cfg).is_err());
    }
}
