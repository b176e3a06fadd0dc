//! Numerical certification of the nonresonance hypotheses and solution
//! quality: pointwise bracketing between consecutive eigenvalues, strict
//! positivity of the kernel Gram forms, the coercivity surrogate δ_num,
//! weak-solution residuals against smooth test functions, and the global
//! slope condition for uniqueness.

use crate::error::{Result, VarwaveError};
use crate::function_space::{FieldSpace, Multiplier, NonlinearitySpec, SpectralField, TrigKind};
use crate::krylov;
use crate::solver::resolvent_packed;
use crate::wave_spectrum::OperatorSpectrum;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Outcome of the nonresonance check. `gram_lower`/`gram_upper` are the
/// smallest eigenvalues of the (3-g)/(3-h) forms; an empty kernel reports
/// +∞ and passes.
#[derive(Debug, Clone)]
pub struct NonresonanceReport {
    pub bracketing_ok: bool,
    pub gram_lower: f64,
    pub gram_upper: f64,
    pub epsilon_margin: f64,
    pub verdict: bool,
    pub lambda_lower: f64,
    pub lambda_upper: f64,
}

/// Strictness threshold on the Gram eigenvalues.
pub const GRAM_POSITIVITY_TOL: f64 = 1e-10;

/// Checks λ̲ ≤ α ≤ β ≤ λ̄ pointwise and the strict kernel conditions
/// ∫(α−λ̲)v² > 0, ∫(λ̄−β)w² > 0. The Gram integrals use the plain dt dx
/// measure exactly as the hypothesis states them (D21); `weighted_gram`
/// switches to the u-weighted variant for sensitivity studies.
pub fn check_nonresonance(
    space: &Arc<FieldSpace>,
    spectrum: &OperatorSpectrum,
    alpha: &Multiplier,
    beta: &Multiplier,
    weighted_gram: bool,
) -> Result<NonresonanceReport> {
    if !alpha.is_even_parity() || !beta.is_even_parity() {
        return Err(VarwaveError::InvalidInput(
            "alpha and beta must be even-parity multipliers".into(),
        ));
    }
    let (alpha_lo, _) = alpha.range(space);
    let (_, beta_hi) = beta.range(space);
    let level = 0.5 * (alpha_lo + beta_hi);
    let (lam_lo, lam_hi) = match spectrum.consecutive_pair(level) {
        Ok(pair) => pair,
        Err(VarwaveError::LevelOnSpectrum { .. }) => {
            return Ok(NonresonanceReport {
                bracketing_ok: false,
                gram_lower: 0.0,
                gram_upper: 0.0,
                epsilon_margin: 0.0,
                verdict: false,
                lambda_lower: f64::NAN,
                lambda_upper: f64::NAN,
            })
        }
        Err(e) => return Err(e),
    };

    let tol = 1e-12;
    let bracketing_ok = alpha_lo >= lam_lo - tol
        && beta_hi <= lam_hi + tol
        && pointwise_ordered(space, alpha, beta, tol);

    let gram_lower = gram_min_eigenvalue(space, spectrum, lam_lo, alpha, 1.0, weighted_gram)?;
    let gram_upper = gram_min_eigenvalue(space, spectrum, lam_hi, beta, -1.0, weighted_gram)?;

    let epsilon_margin = ((alpha_lo - lam_lo).min(lam_hi - beta_hi)
        - 10.0 * spectrum.kernel_tol())
    .max(0.0);

    Ok(NonresonanceReport {
        bracketing_ok,
        gram_lower,
        gram_upper,
        epsilon_margin,
        verdict: bracketing_ok
            && gram_lower > GRAM_POSITIVITY_TOL
            && gram_upper > GRAM_POSITIVITY_TOL,
        lambda_lower: lam_lo,
        lambda_upper: lam_hi,
    })
}

fn pointwise_ordered(space: &FieldSpace, alpha: &Multiplier, beta: &Multiplier, tol: f64) -> bool {
    match (alpha, beta) {
        (Multiplier::Constant(a), Multiplier::Constant(b)) => a <= &(b + tol),
        _ => {
            let ag = space.multiplier_grid(alpha, false);
            let bg = space.multiplier_grid(beta, false);
            ag.values
                .iter()
                .zip(bg.values.iter())
                .all(|(a, b)| *a <= b + tol)
        }
    }
}

/// Smallest eigenvalue of M_kl = sign·∫(mult − value)v_k v_l dt dx over the
/// kernel basis at `value` (sign = −1 flips to (value − mult)).
fn gram_min_eigenvalue(
    space: &Arc<FieldSpace>,
    spectrum: &OperatorSpectrum,
    value: f64,
    mult: &Multiplier,
    sign: f64,
    weighted: bool,
) -> Result<f64> {
    let pairs = spectrum.kernel_basis(value)?;
    if pairs.is_empty() {
        return Ok(f64::INFINITY);
    }
    let mut kernel_fns: Vec<SpectralField> = Vec::with_capacity(2 * pairs.len());
    for &(m, n) in &pairs {
        kernel_fns.push(space.basis_field(m as usize, n as usize, TrigKind::Cos));
        kernel_fns.push(space.basis_field(m as usize, n as usize, TrigKind::Sin));
    }
    let grids: Vec<_> = kernel_fns.iter().map(|f| space.synthesize(f)).collect();
    let mg = space.multiplier_grid(mult, false);
    // weight grid: sign·(mult − value), with or without the u factor
    let grid = space.basis().grid();
    let n_x = space.n_x();
    let n_t = space.n_t();
    let dt = space.period().t_period() / n_t as f64;
    let dim = grids.len();
    let mut gram = DMatrix::zeros(dim, dim);
    for k in 0..dim {
        for l in k..dim {
            let mut acc = 0.0;
            for j in 0..n_x {
                let u_factor = if weighted { grid.u()[j] } else { 1.0 };
                let wj = grid.weights()[j] * u_factor;
                let mut col = 0.0;
                for i in 0..n_t {
                    col += sign
                        * (mg.values[(i, j)] - value)
                        * grids[k].values[(i, j)]
                        * grids[l].values[(i, j)];
                }
                acc += wj * col;
            }
            gram[(k, l)] = acc * dt;
            gram[(l, k)] = acc * dt;
        }
    }
    Ok(gram
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min))
}

/// Smallest singular value of (L_o − Γ_γ) on the truncated odd subspace:
/// the numerical surrogate δ_num for the coercivity constant of the lemma.
/// Computed by Lanczos on the inverse operator (resolvent solves); an
/// exactly resonant constant γ short-circuits to the enumerated minimum,
/// reporting the near-zero value instead of failing.
pub fn estimate_delta(
    space: &Arc<FieldSpace>,
    gamma: &Multiplier,
    kernel_tol: f64,
    seed: u64,
) -> Result<f64> {
    if !gamma.is_even_parity() {
        return Err(VarwaveError::InvalidInput(
            "gamma must be an even-parity multiplier".into(),
        ));
    }
    if let Multiplier::Constant(c) = gamma {
        let diag = space.packed_odd_mu();
        let delta_direct = diag.iter().map(|mu| (mu - c).abs()).fold(f64::INFINITY, f64::min);
        if delta_direct <= kernel_tol {
            return Ok(delta_direct);
        }
    }
    let dim = space.odd_dim();
    let inverse_apply = |v: &DVector<f64>| resolvent_packed(space, gamma, v, kernel_tol, 1e-13);
    let extreme = krylov::lanczos_extreme_abs(inverse_apply, dim, seed, 1e-13, 400)?;
    Ok(1.0 / extreme)
}

/// Maximum normalized weak-solution defect of `y` against `num_tests`
/// random smooth test functions ψ built from sin(kx)·{cos, sin}(qjt/p)
/// combinations (D23): |∫y(uψ_tt − (uψ_x)_x) − ∫fψ| / ‖ψ‖ with f = u·f̂.
pub fn weak_residual(
    space: &Arc<FieldSpace>,
    y: &SpectralField,
    nl: &NonlinearitySpec,
    num_tests: usize,
    seed: u64,
) -> Result<f64> {
    if num_tests == 0 {
        return Err(VarwaveError::InvalidInput("num_tests must be >= 1".into()));
    }
    let y_grid = space.synthesize(y);
    if !y_grid.is_finite() {
        return Err(VarwaveError::NonFinite("weak_residual input".into()));
    }
    let f_hat = space.nemytskii(nl, &y_grid)?;
    let grid = space.basis().grid();
    let profile = space.basis().profile();
    let n_x = space.n_x();
    let n_t = space.n_t();
    let dt = space.period().t_period() / n_t as f64;
    let omega = space.period().q() as f64 / space.period().p() as f64;
    let ts = space.t_values(false);

    // f = u·f̂ carries the weight; all integrals below use plain dt dx
    let mut f_grid = f_hat;
    for j in 0..n_x {
        for i in 0..n_t {
            f_grid.values[(i, j)] *= grid.u()[j];
        }
    }

    let k_modes = 6usize;
    let j_modes = 6usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;

    for _ in 0..num_tests {
        // ψ = Σ c_{kj}^{cos} sin(kx)cos(ωjt) + c_{kj}^{sin} sin(kx)sin(ωjt)
        let mut psi = DMatrix::<f64>::zeros(n_t, n_x);
        let mut psi_tt = DMatrix::<f64>::zeros(n_t, n_x);
        let mut u_psi_x_x = DMatrix::<f64>::zeros(n_t, n_x);
        for k in 1..=k_modes {
            for j_mode in 0..=j_modes {
                for (trig, has) in [(TrigKind::Cos, true), (TrigKind::Sin, j_mode >= 1)] {
                    if !has {
                        continue;
                    }
                    let c: f64 = rng.random_range(-1.0..1.0);
                    if c.abs() < 0.2 {
                        continue; // sparse combinations
                    }
                    let freq = omega * j_mode as f64;
                    for (i, &t) in ts.iter().enumerate() {
                        let tv = match trig {
                            TrigKind::Cos => (freq * t).cos(),
                            TrigKind::Sin => (freq * t).sin(),
                        };
                        for (jx, &x) in grid.x().iter().enumerate() {
                            let s = (k as f64 * x).sin();
                            let sc = (k as f64 * x).cos();
                            let v = profile.values(x)?;
                            psi[(i, jx)] += c * s * tv;
                            psi_tt[(i, jx)] -= c * freq * freq * s * tv;
                            // (uψ_x)_x = u'ψ_x + uψ_xx
                            u_psi_x_x[(i, jx)] += c
                                * tv
                                * (v.du * k as f64 * sc - v.u * (k * k) as f64 * s);
                        }
                    }
                }
            }
        }

        let mut lhs = 0.0;
        let mut rhs = 0.0;
        let mut psi_norm_sq = 0.0;
        for jx in 0..n_x {
            let w = grid.weights()[jx];
            let u = grid.u()[jx];
            for i in 0..n_t {
                let p = psi[(i, jx)];
                lhs += w * y_grid.values[(i, jx)] * (u * psi_tt[(i, jx)] - u_psi_x_x[(i, jx)]);
                rhs += w * f_grid.values[(i, jx)] * p;
                psi_norm_sq += w * u * p * p;
            }
        }
        let psi_norm = (psi_norm_sq * dt).sqrt();
        if psi_norm == 0.0 {
            continue;
        }
        worst = worst.max(((lhs - rhs) * dt).abs() / psi_norm);
    }
    Ok(worst)
}

/// Analytic verification of the global slope condition (3.9) for the
/// parametric family: the incremental slope range must lie within [α, β].
/// Only meaningful for the odd zero-forcing family.
pub fn check_global_slopes(nl: &NonlinearitySpec, alpha: f64, beta: f64) -> Result<bool> {
    if nl.has_forcing() {
        return Err(VarwaveError::InvalidInput(
            "global slope condition applies to the zero-forcing odd family".into(),
        ));
    }
    Ok(nl.derivative_bounds().within(alpha, beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficient::CoefficientProfile;
    use crate::function_space::Parity;
    use crate::solver::{continuation_solve, SolveConfig};
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
    fn nonresonance_with_margins_passes() {
        let (space, spectrum) = setup(5, 4);
        let report = check_nonresonance(
            &space,
            &spectrum,
            &Multiplier::Constant(-1.25 + 0.1),
            &Multiplier::Constant(0.75 - 0.1),
            false,
        )
        .unwrap();
        assert!(report.bracketing_ok);
        assert!(report.verdict);
        assert_eq!(report.lambda_lower, -1.25);
        assert_eq!(report.lambda_upper, 0.75);
        // kernel at λ̲ is the (3,1) pair: Gram = 0.1·I₂ for u ≡ 1
        assert_abs_diff_eq!(report.gram_lower, 0.1, epsilon = 1e-8);
        assert_abs_diff_eq!(report.gram_upper, 0.1, epsilon = 1e-8);
        assert!(report.epsilon_margin > 0.09);
    }

    #[test]
    fn nonresonance_margin_sweep() {
        let (space, spectrum) = setup(5, 4);
        for eps in [0.01, 0.1] {
            let report = check_nonresonance(
                &space,
                &spectrum,
                &Multiplier::Constant(-1.25 + eps),
                &Multiplier::Constant(0.75 - eps),
                false,
            )
            .unwrap();
            assert!(report.verdict, "margin {eps} should pass");
        }
    }

    #[test]
    fn nonresonance_touching_lower_eigenvalue_fails() {
        let (space, spectrum) = setup(5, 4);
        let report = check_nonresonance(
            &space,
            &spectrum,
            &Multiplier::Constant(-1.25),
            &Multiplier::Constant(0.5),
            false,
        )
        .unwrap();
        assert!(report.bracketing_ok);
        assert!(report.gram_lower <= GRAM_POSITIVITY_TOL);
        assert!(!report.verdict);
    }

    #[test]
    fn nonresonance_escaping_beta_fails_bracketing() {
        let (space, spectrum) = setup(5, 4);
        let report = check_nonresonance(
            &space,
            &spectrum,
            &Multiplier::Constant(-1.15),
            &Multiplier::Constant(0.75 + 0.5),
            false,
        )
        .unwrap();
        assert!(!report.bracketing_ok);
        assert!(!report.verdict);
    }

    #[test]
    fn gram_weighted_variant_close_for_unit_coefficient() {
        let (space, spectrum) = setup(5, 4);
        let a = Multiplier::Constant(-1.15);
        let b = Multiplier::Constant(0.65);
        let plain = check_nonresonance(&space, &spectrum, &a, &b, false).unwrap();
        let weighted = check_nonresonance(&space, &spectrum, &a, &b, true).unwrap();
        assert_abs_diff_eq!(plain.gram_lower, weighted.gram_lower, epsilon = 1e-10);
    }

    #[test]
    fn delta_diagonal_cases() {
        let (space, _) = setup(9, 8);
        // γ = −1/4: singular values |μ + 1/4| minimized at μ = 3/4 and −5/4
        let d = estimate_delta(&space, &Multiplier::Constant(-0.25), 1e-6, 3).unwrap();
        assert_abs_diff_eq!(d, 1.0, epsilon = 1e-9);
        // γ = 0: min |μ| = 3/4
        let d = estimate_delta(&space, &Multiplier::Constant(0.0), 1e-6, 3).unwrap();
        assert_abs_diff_eq!(d, 0.75, epsilon = 1e-9);
        // γ touching an eigenvalue: flagged near-singular value
        let d = estimate_delta(&space, &Multiplier::Constant(0.75), 1e-6, 3).unwrap();
        assert!(d <= 1e-6);
    }

    #[test]
    fn delta_matches_enumeration_oracle() {
        let (space, spectrum) = setup(7, 6);
        let gamma = -0.25;
        let oracle = spectrum
            .entries()
            .iter()
            .filter(|e| e.m <= 7 && (e.n as usize) <= 6)
            .map(|e| (e.mu - gamma).abs())
            .fold(f64::INFINITY, f64::min);
        let d = estimate_delta(&space, &Multiplier::Constant(gamma), 1e-6, 1).unwrap();
        assert_abs_diff_eq!(d, oracle, epsilon = 1e-9);
    }

    #[test]
    fn delta_stable_under_truncation_growth() {
        let basis = Arc::new(
            solve_eigenbasis(
                Arc::new(CoefficientProfile::constant(1.0, 257).unwrap()),
                12,
            )
            .unwrap(),
        );
        let period = RationalPeriod::new(2, 1).unwrap();
        let small = FieldSpace::new(basis.clone(), period, 6, 6).unwrap();
        let large = FieldSpace::new(basis, period, 9, 9).unwrap();
        let d_small = estimate_delta(&small, &Multiplier::Constant(-0.25), 1e-6, 5).unwrap();
        let d_large = estimate_delta(&large, &Multiplier::Constant(-0.25), 1e-6, 5).unwrap();
        assert!((d_small - d_large).abs() < 1e-6);
    }

    #[test]
    fn delta_with_variable_gamma() {
        // sandwich oracle: for a multiplication operator, |δ(Γ) − δ(c̄)| is
        // bounded by sup|γ − c̄| (operator-norm perturbation of a symmetric
        // operator)
        let (space, _) = setup(5, 4);
        let mut g = space.zero_field();
        g.set(0, 1, TrigKind::Cos, -0.2);
        g.set(2, 1, TrigKind::Cos, 0.03);
        let gamma = Multiplier::Field(g);
        let mean = gamma.mean(&space);
        let (lo, hi) = gamma.range(&space);
        let radius = (hi - mean).max(mean - lo);
        let d_mean = space
            .packed_odd_mu()
            .iter()
            .map(|mu| (mu - mean).abs())
            .fold(f64::INFINITY, f64::min);
        let d = estimate_delta(&space, &gamma, 1e-6, 9).unwrap();
        assert!(
            (d - d_mean).abs() <= radius + 1e-9,
            "delta = {d}, mean-case = {d_mean}, radius = {radius}"
        );
    }

    #[test]
    fn weak_residual_zero_case() {
        let (space, _) = setup(5, 4);
        let nl = NonlinearitySpec::odd(0.0, 0.0, 0.0);
        let zero = space.zero_field();
        let d = weak_residual(&space, &zero, &nl, 5, 17).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn weak_residual_discriminates() {
        let (space, spectrum) = setup(5, 4);
        let forcing = space.basis_field(1, 1, TrigKind::Cos);
        let nl = NonlinearitySpec::with_forcing(-0.25, 0.0, 0.0, forcing).unwrap();
        let cfg = SolveConfig::new(Multiplier::Constant(-0.25), Multiplier::Constant(0.25));
        let report = continuation_solve(&space, &spectrum, &nl, &cfg).unwrap();
        let good = weak_residual(&space, &report.solution, &nl, 20, 23).unwrap();
        assert!(good <= 1e-6, "defect of true solution {good}");
        // perturbed non-solution must be flagged loudly
        let bad_field = report
            .solution
            .add_scaled(&space.basis_field(3, 2, TrigKind::Cos), 0.1);
        let bad = weak_residual(&space, &bad_field, &nl, 20, 23).unwrap();
        assert!(bad > 1e-3, "perturbed defect {bad}");
    }

    #[test]
    fn global_slopes_examples() {
        assert!(check_global_slopes(&NonlinearitySpec::odd(-0.25, 0.0, 0.0), -1.25, 0.75).unwrap());
        let mixed = NonlinearitySpec::odd(-0.25, 0.0, 0.125);
        assert!(check_global_slopes(&mixed, -1.25, 0.75).unwrap());
        let b = mixed.derivative_bounds();
        assert_abs_diff_eq!(b.lo, -0.375, epsilon = 1e-15);
        assert_abs_diff_eq!(b.hi, -0.125, epsilon = 1e-15);
        assert!(!check_global_slopes(&NonlinearitySpec::odd(1.0, 0.0, 0.0), -1.25, 0.75).unwrap());
    }

    #[test]
    fn nonresonance_rejects_odd_multipliers() {
        let (space, spectrum) = setup(5, 4);
        let odd_mult = Multiplier::Field(space.random_field(3, Parity::Odd, 0.05));
        assert!(check_nonresonance(
            &space,
            &spectrum,
            &odd_mult,
            &Multiplier::Constant(0.5),
            false
        )
        .is_err());
    }
}
