//! Sturm–Liouville eigenbasis of (uφ')' = −λ²uφ, φ(0) = φ(π) = 0.
//!
//! The substitution ψ = u^{1/2}φ turns the problem into the Schrödinger form
//! −ψ'' + η_u(x)ψ = λ²ψ with the same Dirichlet conditions (D6), which a
//! sine-Galerkin discretization reduces to a dense *symmetric* standard
//! eigenproblem A_kl = k²δ_kl + (2/π)∫η_u sin(kx)sin(lx)dx. The assembly
//! needs only the cosine moments H(j) = ∫η_u cos(jx)dx for j ≤ 2K since
//! (2/π)∫η sin(kx)sin(lx) = (H(|k−l|) − H(k+l))/π.

use crate::coefficient::CoefficientProfile;
use crate::error::{Result, VarwaveError};
use crate::quad;
use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;
use std::sync::Arc;

/// Uniform x-grid on [0, π] with the coefficient samples and trapezoid
/// weights used by every u-weighted inner product downstream.
#[derive(Debug, Clone)]
pub struct SpaceGrid {
    x: Vec<f64>,
    u: Vec<f64>,
    sqrt_u: Vec<f64>,
    trap_w: Vec<f64>,
}

impl SpaceGrid {
    fn build(profile: &CoefficientProfile, n_x: usize) -> Result<Self> {
        let h = PI / (n_x - 1) as f64;
        let mut x = Vec::with_capacity(n_x);
        let mut u = Vec::with_capacity(n_x);
        for j in 0..n_x {
            let xj = j as f64 * h;
            x.push(xj);
            u.push(profile.values(xj)?.u);
        }
        let sqrt_u = u.iter().map(|v| v.sqrt()).collect();
        let trap_w = quad::trapezoid_weights(n_x, PI);
        Ok(Self { x, u, sqrt_u, trap_w })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn sqrt_u(&self) -> &[f64] {
        &self.sqrt_u
    }

    /// Trapezoid weights (exact for sine-band-limited integrands).
    pub fn weights(&self) -> &[f64] {
        &self.trap_w
    }

    /// ∫₀^π u f g dx on the grid.
    pub fn weighted_inner_x(&self, f: &[f64], g: &[f64]) -> f64 {
        self.trap_w
            .iter()
            .zip(&self.u)
            .zip(f.iter().zip(g))
            .map(|((w, u), (a, b))| w * u * a * b)
            .sum()
    }
}

/// The first n_max eigenpairs of the Sturm–Liouville problem, u-weighted
/// orthonormal, with the sign convention φ_n > 0 just inside x = 0 (D4).
/// Immutable after construction.
#[derive(Debug)]
pub struct EigenBasis {
    profile: Arc<CoefficientProfile>,
    n_max: usize,
    lambda_sq: Vec<f64>,
    /// φ_n(x_j), row n−1, column j.
    phi: DMatrix<f64>,
    grid: SpaceGrid,
    galerkin_dim: usize,
    kappa: f64,
}

/// Solves for the first `n_max` eigenpairs with the default Galerkin
/// dimension K = max(4·n_max, 128) (D5).
pub fn solve_eigenbasis(profile: Arc<CoefficientProfile>, n_max: usize) -> Result<EigenBasis> {
    let k = (4 * n_max).max(128);
    solve_eigenbasis_with_dim(profile, n_max, k)
}

/// Same with an explicit sine-Galerkin dimension; n_max ≤ K/2 is enforced as
/// an accuracy guard.
pub fn solve_eigenbasis_with_dim(
    profile: Arc<CoefficientProfile>,
    n_max: usize,
    galerkin_dim: usize,
) -> Result<EigenBasis> {
    if n_max == 0 {
        return Err(VarwaveError::InvalidInput("n_max must be >= 1".into()));
    }
    let k = galerkin_dim;
    if n_max > k / 2 {
        return Err(VarwaveError::InvalidInput(format!(
            "n_max = {n_max} exceeds K/2 = {} (accuracy guard)",
            k / 2
        )));
    }

    // Cosine moments of the potential; panel count tied to the top frequency
    // keeps the quadrature exact to roundoff.
    let moments_res: Vec<Result<f64>> = {
        let prof = profile.as_ref();
        let eta = |x: f64| prof.eta_u(x).unwrap_or(f64::NAN);
        quad::cosine_moments(eta, 2 * k).into_iter().map(Ok).collect()
    };
    let mut moments = Vec::with_capacity(2 * k + 1);
    for m in moments_res {
        let m = m?;
        if !m.is_finite() {
            return Err(VarwaveError::EigenSolveFailed {
                profile: profile.describe(),
                reason: "non-finite potential moment (NaN in eta_u)".into(),
            });
        }
        moments.push(m);
    }

    // A = diag(k²) + (H(|k-l|) - H(k+l))/π, exactly symmetric by construction.
    let mut coupling_is_zero = true;
    let mut a = DMatrix::<f64>::zeros(k, k);
    for row in 0..k {
        for col in row..k {
            let kk = row + 1;
            let ll = col + 1;
            let b = (moments[kk.abs_diff(ll)] - moments[kk + ll]) / PI;
            if b != 0.0 {
                coupling_is_zero = false;
            }
            let v = if row == col { (kk * kk) as f64 + b } else { b };
            a[(row, col)] = v;
            a[(col, row)] = v;
        }
    }

    // Eigen decomposition. When the potential couples nothing (η ≡ 0 computes
    // to exact zeros) the diagonal already is the spectrum; taking it directly
    // keeps constant-coefficient eigenvalues bit-exact.
    let (mut eigvals, mut eigvecs): (Vec<f64>, DMatrix<f64>) = if coupling_is_zero {
        let vals = (1..=k).map(|i| (i * i) as f64).collect();
        (vals, DMatrix::identity(k, k))
    } else {
        let se = a.clone().symmetric_eigen();
        let vals: Vec<f64> = se.eigenvalues.iter().copied().collect();
        (vals, se.eigenvectors)
    };
    sort_eigenpairs(&mut eigvals, &mut eigvecs);

    for w in eigvals.windows(2).take(n_max) {
        if !(w[1] > w[0]) {
            return Err(VarwaveError::EigenSolveFailed {
                profile: profile.describe(),
                reason: format!("eigenvalues not strictly increasing: {} !< {}", w[0], w[1]),
            });
        }
    }
    if eigvals.iter().take(n_max).any(|v| !v.is_finite()) {
        return Err(VarwaveError::EigenSolveFailed {
            profile: profile.describe(),
            reason: "non-finite eigenvalue".into(),
        });
    }

    // Evaluation grid: fine enough that sine products up to 2K stay below the
    // trapezoid aliasing threshold (machine-exact inner products).
    let n_x_min = 2 * k + 1;
    let mut n_x = profile.grid_size().max(n_x_min);
    if n_x % 2 == 0 {
        n_x += 1;
    }
    let grid = SpaceGrid::build(&profile, n_x)?;

    // ψ_n = Σ_k v_k √(2/π) sin(kx); φ_n = ψ_n / √u. Coefficient vectors are
    // orthonormal, so φ_n is u-weighted orthonormal automatically; we still
    // renormalize in the discrete norm and fix the sign (D4).
    let scale = (2.0 / PI).sqrt();
    let mut phi = DMatrix::<f64>::zeros(n_max, n_x);
    for n in 0..n_max {
        for j in 0..n_x {
            let xj = grid.x[j];
            let mut acc = 0.0;
            for kk in 0..k {
                acc += eigvecs[(kk, n)] * ((kk + 1) as f64 * xj).sin();
            }
            phi[(n, j)] = scale * acc / grid.sqrt_u[j];
        }
        let row: Vec<f64> = phi.row(n).iter().copied().collect();
        let norm = grid.weighted_inner_x(&row, &row).sqrt();
        let sign = if phi[(n, 1)] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n_x {
            phi[(n, j)] *= sign / norm;
        }
    }

    let kappa = profile.kappa()?;
    Ok(EigenBasis {
        profile,
        n_max,
        lambda_sq: eigvals.into_iter().take(n_max).collect(),
        phi,
        grid,
        galerkin_dim: k,
        kappa,
    })
}

fn sort_eigenpairs(vals: &mut [f64], vecs: &mut DMatrix<f64>) {
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&i, &j| vals[i].partial_cmp(&vals[j]).unwrap());
    let sorted_vals: Vec<f64> = idx.iter().map(|&i| vals[i]).collect();
    vals.copy_from_slice(&sorted_vals);
    let cols: Vec<DVector<f64>> = idx.iter().map(|&i| vecs.column(i).into_owned()).collect();
    for (c, col) in cols.into_iter().enumerate() {
        vecs.set_column(c, &col);
    }
}

impl EigenBasis {
    pub fn profile(&self) -> &Arc<CoefficientProfile> {
        &self.profile
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// λ_n² for n = 1..=n_max (1-based n).
    pub fn lambda_sq(&self, n: usize) -> f64 {
        self.lambda_sq[n - 1]
    }

    pub fn lambda_sq_all(&self) -> &[f64] {
        &self.lambda_sq
    }

    /// Grid values of φ_n (1-based n).
    pub fn phi_row(&self, n: usize) -> Vec<f64> {
        self.phi.row(n - 1).iter().copied().collect()
    }

    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn grid(&self) -> &SpaceGrid {
        &self.grid
    }

    pub fn galerkin_dim(&self) -> usize {
        self.galerkin_dim
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Defect sequence d_n = λ_n² − n² − κ/π against the asymptotic law.
    pub fn asymptotics_report(&self) -> Result<Vec<(usize, f64)>> {
        if self.n_max < 10 {
            return Err(VarwaveError::InvalidInput(
                "asymptotics_report needs n_max >= 10".into(),
            ));
        }
        let shift = self.kappa / PI;
        Ok((1..=self.n_max)
            .map(|n| (n, self.lambda_sq[n - 1] - (n * n) as f64 - shift))
            .collect())
    }

    /// max of n²·|d_n| over the upper half of the computed range; feeds the
    /// truncation-window guard's uncertainty estimate for n > n_max.
    pub fn defect_tail_constant(&self) -> f64 {
        let lo = (self.n_max / 2).max(5).min(self.n_max);
        let shift = self.kappa / PI;
        (lo..=self.n_max)
            .map(|n| {
                let d = self.lambda_sq[n - 1] - (n * n) as f64 - shift;
                (n * n) as f64 * d.abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Least-squares slope of log|d_n| vs log n over n ∈ [n_lo, n_hi].
/// Values below `floor` are censored at the floor.
pub fn loglog_slope(defects: &[(usize, f64)], n_lo: usize, n_hi: usize, floor: f64) -> f64 {
    let pts: Vec<(f64, f64)> = defects
        .iter()
        .filter(|(n, _)| (n_lo..=n_hi).contains(n))
        .map(|(n, d)| ((*n as f64).ln(), d.abs().max(floor).ln()))
        .collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficient::CoefficientProfile;
    use approx::assert_abs_diff_eq;

    fn arc(p: CoefficientProfile) -> Arc<CoefficientProfile> {
        Arc::new(p)
    }

    fn sampled_two_plus_cos(n: usize) -> Arc<CoefficientProfile> {
        let mut u = Vec::with_capacity(n);
        let mut du = Vec::with_capacity(n);
        let mut ddu = Vec::with_capacity(n);
        for j in 0..n {
            let x = j as f64 * PI / (n - 1) as f64;
            u.push(2.0 + x.cos());
            du.push(-x.sin());
            ddu.push(-x.cos());
        }
        arc(CoefficientProfile::from_samples(u, du, ddu, n).unwrap())
    }

    #[test]
    fn constant_coefficient_is_exact() {
        let basis = solve_eigenbasis(arc(CoefficientProfile::constant(1.0, 129).unwrap()), 3).unwrap();
        assert_eq!(basis.lambda_sq_all(), &[1.0, 4.0, 9.0]);
        let scale = (2.0 / PI).sqrt();
        for n in 1..=3 {
            let row = basis.phi_row(n);
            for (j, &xj) in basis.grid().x().iter().enumerate() {
                assert_abs_diff_eq!(row[j], scale * (n as f64 * xj).sin(), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn exponential_two_closed_form() {
        // φ'' + 2φ' + λ²φ = 0 with Dirichlet ends gives λ_n² = n² + 1 and
        // φ_n = √(2/π) e^{-x} sin(nx).
        let basis =
            solve_eigenbasis(arc(CoefficientProfile::exponential(2.0, 257).unwrap()), 3).unwrap();
        for (n, expect) in [(1usize, 2.0), (2, 5.0), (3, 10.0)] {
            assert_abs_diff_eq!(basis.lambda_sq(n), expect, epsilon = 1e-10);
        }
        let scale = (2.0 / PI).sqrt();
        for n in 1..=3 {
            let row = basis.phi_row(n);
            let sup = basis
                .grid()
                .x()
                .iter()
                .enumerate()
                .map(|(j, &xj)| (row[j] - scale * (-xj).exp() * (n as f64 * xj).sin()).abs())
                .fold(0.0, f64::max);
            assert!(sup < 1e-9, "sup deviation {sup}");
        }
    }

    #[test]
    fn square_polynomial_closed_form() {
        // η_u ≡ 0 so the transformed problem is ψ'' = −λ²ψ: λ_n = n and
        // φ_n = √(2/π) sin(nx)/(1 + x/π).
        let basis =
            solve_eigenbasis(arc(CoefficientProfile::square_polynomial(257).unwrap()), 3).unwrap();
        for n in 1..=3usize {
            assert_abs_diff_eq!(basis.lambda_sq(n), (n * n) as f64, epsilon = 1e-10);
        }
        let scale = (2.0 / PI).sqrt();
        for n in 1..=3 {
            let row = basis.phi_row(n);
            let sup = basis
                .grid()
                .x()
                .iter()
                .enumerate()
                .map(|(j, &xj)| {
                    (row[j] - scale * (n as f64 * xj).sin() / (1.0 + xj / PI)).abs()
                })
                .fold(0.0, f64::max);
            assert!(sup < 1e-7, "sup deviation {sup}");
        }
    }

    #[test]
    fn square_polynomial_ode_residual() {
        // independent route: finite-difference residual of the original
        // equation (uφ')' + λ²uφ = 0 on the grid, interior points only
        let basis =
            solve_eigenbasis(arc(CoefficientProfile::square_polynomial(513).unwrap()), 2).unwrap();
        let grid = basis.grid();
        let h = grid.x()[1];
        let profile = basis.profile();
        for n in 1..=2 {
            let phi = basis.phi_row(n);
            let lam = basis.lambda_sq(n);
            let mut res_max: f64 = 0.0;
            for j in 2..grid.len() - 2 {
                let x = grid.x()[j];
                let v = profile.values(x).unwrap();
                let dphi = (phi[j + 1] - phi[j - 1]) / (2.0 * h);
                let ddphi = (phi[j + 1] - 2.0 * phi[j] + phi[j - 1]) / (h * h);
                let res = v.u * ddphi + v.du * dphi + lam * v.u * phi[j];
                res_max = res_max.max(res.abs());
            }
            // second-order FD of smooth φ: O(h²·λ²)
            assert!(res_max < 5e-3, "residual {res_max}");
        }
    }

    #[test]
    fn residual_decreases_under_refinement() {
        let res_for = |grid_size: usize| {
            let basis = solve_eigenbasis(
                arc(CoefficientProfile::exponential(1.0, grid_size).unwrap()),
                2,
            )
            .unwrap();
            let grid = basis.grid();
            let h = grid.x()[1];
            let phi = basis.phi_row(2);
            let lam = basis.lambda_sq(2);
            let mut res_max: f64 = 0.0;
            for j in 2..grid.len() - 2 {
                let v = basis.profile().values(grid.x()[j]).unwrap();
                let dphi = (phi[j + 1] - phi[j - 1]) / (2.0 * h);
                let ddphi = (phi[j + 1] - 2.0 * phi[j] + phi[j - 1]) / (h * h);
                res_max = res_max.max((v.u * ddphi + v.du * dphi + lam * v.u * phi[j]).abs());
            }
            res_max
        };
        let coarse = res_for(513);
        let fine = res_for(1025);
        assert!(
            fine < 0.5 * coarse,
            "refinement did not reduce residual: {coarse} -> {fine}"
        );
    }

    #[test]
    fn gram_matrix_is_identity() {
        let basis = solve_eigenbasis(sampled_two_plus_cos(1025), 8).unwrap();
        let grid = basis.grid();
        for n in 1..=8 {
            for k in 1..=8 {
                let g = grid.weighted_inner_x(&basis.phi_row(n), &basis.phi_row(k));
                let expect = if n == k { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(g, expect, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn eigenvalues_stable_under_galerkin_doubling() {
        let profile = sampled_two_plus_cos(2049);
        let a = solve_eigenbasis_with_dim(profile.clone(), 10, 128).unwrap();
        let b = solve_eigenbasis_with_dim(profile, 10, 256).unwrap();
        for n in 1..=10 {
            assert_abs_diff_eq!(a.lambda_sq(n), b.lambda_sq(n), epsilon = 1e-9);
        }
    }

    #[test]
    fn asymptotics_constant_and_exponential() {
        let basis =
            solve_eigenbasis(arc(CoefficientProfile::constant(1.0, 129).unwrap()), 12).unwrap();
        for (_, d) in basis.asymptotics_report().unwrap() {
            assert_abs_diff_eq!(d, 0.0, epsilon = 1e-9);
        }
        // η_u ≡ 1 for a = 2, so λ_n² = n² + 1 and κ/π = 1: defect is zero to
        // eigensolve tolerance
        let basis =
            solve_eigenbasis(arc(CoefficientProfile::exponential(2.0, 257).unwrap()), 12).unwrap();
        for (_, d) in basis.asymptotics_report().unwrap() {
            assert_abs_diff_eq!(d, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn asymptotics_exponential_one_bounded() {
        // η_u is constant for every exponential coefficient, so the defect is
        // identically zero (far below any C/n² envelope); n²|d_n| stays tiny.
        let basis =
            solve_eigenbasis(arc(CoefficientProfile::exponential(1.0, 257).unwrap()), 40).unwrap();
        let report = basis.asymptotics_report().unwrap();
        let max_scaled = report
            .iter()
            .filter(|(n, _)| (5..=40).contains(n))
            .map(|(n, d)| (n * n) as f64 * d.abs())
            .fold(0.0, f64::max);
        assert!(max_scaled < 1e-6, "n²|d_n| = {max_scaled}");
    }

    #[test]
    fn asymptotics_slope_for_genuinely_varying_potential() {
        // u = 2 + cos x has a non-constant Liouville potential, so the 1/n²
        // defect term is real and the log-log fit must see it.
        let basis = solve_eigenbasis(sampled_two_plus_cos(4097), 40).unwrap();
        let report = basis.asymptotics_report().unwrap();
        let max_abs = report
            .iter()
            .filter(|(n, _)| (5..=40).contains(n))
            .map(|(_, d)| d.abs())
            .fold(0.0, f64::max);
        assert!(max_abs > 1e-9, "defect unexpectedly at noise level: {max_abs}");
        let slope = loglog_slope(&report, 5, 40, 1e-14);
        assert!(slope <= -1.8, "fitted slope {slope}");
        let max_scaled = report
            .iter()
            .filter(|(n, _)| (5..=40).contains(n))
            .map(|(n, d)| (n * n) as f64 * d.abs())
            .fold(0.0, f64::max);
        assert!(max_scaled < 1.0, "n²|d_n| = {max_scaled}");
    }

    #[test]
    fn rejects_excessive_n_max() {
        let p = arc(CoefficientProfile::constant(1.0, 129).unwrap());
        assert!(solve_eigenbasis_with_dim(p, 80, 128).is_err());
    }

    #[test]
    fn sign_convention_positive_at_left() {
        let basis = solve_eigenbasis(sampled_two_plus_cos(513), 6).unwrap();
        for n in 1..=6 {
            assert!(basis.phi_row(n)[1] > 0.0);
        }
    }
}
