//! Spectrum of the wave operator L: μ_mn = λ_n² − (qm/p)², its restriction
//! to the parity-invariant subspaces, and the gap/kernel structure used by
//! the nonresonance conditions.
//!
//! For p even and m odd, np ≠ mq, so μ_mn = (np−mq)(np+mq)/p² + κ/π + d_n
//! with |np−mq| ≥ 1: the odd spectrum has no kernel and escapes to ±∞ along
//! any sequence with m + n → ∞. The truncation guard below leans on exactly
//! that factorization.

use crate::error::{Result, VarwaveError};
use crate::sturm_liouville::EigenBasis;

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// The time period T = 2πp/q in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RationalPeriod {
    p: u32,
    q: u32,
}

impl RationalPeriod {
    pub fn new(p: u32, q: u32) -> Result<Self> {
        if p == 0 || q == 0 {
            return Err(VarwaveError::InvalidInput(
                "p and q must be positive".into(),
            ));
        }
        if gcd(p, q) != 1 {
            return Err(VarwaveError::InvalidInput(format!(
                "gcd(p, q) must be 1, got gcd({p}, {q}) = {}",
                gcd(p, q)
            )));
        }
        Ok(Self { p, q })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn p_is_even(&self) -> bool {
        self.p % 2 == 0
    }

    /// T = 2πp/q.
    pub fn t_period(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.p as f64 / self.q as f64
    }

    /// (qm/p)² computed in integer arithmetic before the single float
    /// division (D8).
    pub fn freq_sq(&self, m: u32) -> f64 {
        let num = (self.q as i64 * m as i64).pow(2);
        let den = (self.p as i64).pow(2);
        num as f64 / den as f64
    }
}

/// μ_mn = λ_n² − (qm/p)² (1-based n).
pub fn mu(basis: &EigenBasis, period: RationalPeriod, m: u32, n: usize) -> Result<f64> {
    if n == 0 || n > basis.n_max() {
        return Err(VarwaveError::InvalidInput(format!(
            "n = {n} out of range 1..={}",
            basis.n_max()
        )));
    }
    Ok(basis.lambda_sq(n) - period.freq_sq(m))
}

/// Parity of a spectral entry: odd m ↔ T/2-antiperiodic subspace M_o.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumParity {
    Odd,
    Even,
}

#[derive(Debug, Clone, Copy)]
pub struct SpectrumEntry {
    pub m: u32,
    pub n: u32,
    pub mu: f64,
    pub parity: SpectrumParity,
}

/// Truncated window of wave-operator eigenvalues, sorted by μ.
#[derive(Debug, Clone)]
pub struct OperatorSpectrum {
    entries: Vec<SpectrumEntry>,
    period: RationalPeriod,
    m_max: u32,
    n_max: usize,
    kernel_tol: f64,
    kappa: f64,
    /// max n²|d_n| over the computed tail; uncertainty model C/n² for n beyond
    /// the window (used by the completeness guard).
    defect_tail: f64,
    parity: SpectrumParity,
}

/// Default kernel tolerance (D9).
pub const DEFAULT_KERNEL_TOL: f64 = 1e-6;

/// All odd-m eigenvalues in the window, sorted; errors if p is odd or if any
/// |μ| falls within kernel_tol of zero (violating the nonresonance the odd
/// subspace is built on).
pub fn odd_spectrum(
    basis: &EigenBasis,
    period: RationalPeriod,
    m_max: u32,
    n_max: usize,
    kernel_tol: f64,
) -> Result<OperatorSpectrum> {
    if !period.p_is_even() {
        return Err(VarwaveError::PeriodParity { p: period.p() });
    }
    let spec = build_spectrum(basis, period, m_max, n_max, kernel_tol, SpectrumParity::Odd)?;
    for e in &spec.entries {
        if e.mu.abs() <= kernel_tol {
            return Err(VarwaveError::NearResonance {
                m: e.m,
                n: e.n,
                mu_abs: e.mu.abs(),
                kernel_tol,
            });
        }
    }
    Ok(spec)
}

/// Even-m eigenvalues; same code path, exposed for diagnostics only (D11).
/// The kernel-freeness check does not apply here (μ can vanish for even m).
pub fn even_spectrum(
    basis: &EigenBasis,
    period: RationalPeriod,
    m_max: u32,
    n_max: usize,
    kernel_tol: f64,
) -> Result<OperatorSpectrum> {
    build_spectrum(basis, period, m_max, n_max, kernel_tol, SpectrumParity::Even)
}

fn build_spectrum(
    basis: &EigenBasis,
    period: RationalPeriod,
    m_max: u32,
    n_max: usize,
    kernel_tol: f64,
    parity: SpectrumParity,
) -> Result<OperatorSpectrum> {
    if n_max == 0 || n_max > basis.n_max() {
        return Err(VarwaveError::InvalidInput(format!(
            "window n_max = {n_max} out of range 1..={}",
            basis.n_max()
        )));
    }
    if kernel_tol <= 0.0 {
        return Err(VarwaveError::InvalidInput("kernel_tol must be > 0".into()));
    }
    let m_iter: Vec<u32> = match parity {
        SpectrumParity::Odd => (1..=m_max).step_by(2).collect(),
        SpectrumParity::Even => (0..=m_max).step_by(2).collect(),
    };
    let mut entries = Vec::with_capacity(m_iter.len() * n_max);
    for &m in &m_iter {
        for n in 1..=n_max {
            entries.push(SpectrumEntry {
                m,
                n: n as u32,
                mu: mu(basis, period, m, n)?,
                parity,
            });
        }
    }
    entries.sort_by(|a, b| a.mu.partial_cmp(&b.mu).unwrap());
    Ok(OperatorSpectrum {
        entries,
        period,
        m_max,
        n_max,
        kernel_tol,
        kappa: basis.kappa(),
        defect_tail: basis.defect_tail_constant(),
        parity,
    })
}

impl OperatorSpectrum {
    pub fn entries(&self) -> &[SpectrumEntry] {
        &self.entries
    }

    pub fn period(&self) -> RationalPeriod {
        self.period
    }

    pub fn m_max(&self) -> u32 {
        self.m_max
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn kernel_tol(&self) -> f64 {
        self.kernel_tol
    }

    pub fn parity(&self) -> SpectrumParity {
        self.parity
    }

    /// Smallest |μ| in the window with its attaining indices.
    pub fn min_abs_mu(&self) -> (f64, u32, u32) {
        let e = self
            .entries
            .iter()
            .min_by(|a, b| a.mu.abs().partial_cmp(&b.mu.abs()).unwrap())
            .expect("spectrum is nonempty");
        (e.mu.abs(), e.m, e.n)
    }

    /// Distinct spectrum values after multiplicity grouping within
    /// kernel_tol. Values separated by more than kernel_tol never merge.
    pub fn distinct_values(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for e in &self.entries {
            match out.last() {
                Some(&v) if (e.mu - v).abs() <= self.kernel_tol => {}
                _ => out.push(e.mu),
            }
        }
        out
    }

    /// The consecutive pair (λ̲, λ̄) of distinct spectrum values with
    /// λ̲ ≤ level < λ̄, certified complete by the truncation guard (D10).
    pub fn consecutive_pair(&self, level: f64) -> Result<(f64, f64)> {
        for e in &self.entries {
            if (e.mu - level).abs() <= self.kernel_tol {
                return Err(VarwaveError::LevelOnSpectrum {
                    level,
                    mu: e.mu,
                    m: e.m,
                    n: e.n,
                });
            }
        }
        let values = self.distinct_values();
        let lower = values.iter().copied().filter(|&v| v <= level).next_back();
        let upper = values.iter().copied().find(|&v| v > level);
        let (lo, hi) = match (lower, upper) {
            (Some(lo), Some(hi)) => (lo, hi),
            _ => {
                return Err(VarwaveError::WindowTooSmall(format!(
                    "level {level} not bracketed by the computed window \
                     [{:.6}, {:.6}]",
                    values.first().copied().unwrap_or(f64::NAN),
                    values.last().copied().unwrap_or(f64::NAN),
                )))
            }
        };
        self.guard_interval(lo - self.kernel_tol, hi + self.kernel_tol)?;
        Ok((lo, hi))
    }

    /// Index pairs (m, n) with |μ_mn − value| ≤ kernel_tol. Each pair
    /// contributes the two basis functions T_m φ_n cos(qmt/p), sin(qmt/p).
    /// The guard certifies no out-of-window mode could join the kernel.
    pub fn kernel_basis(&self, value: f64) -> Result<Vec<(u32, u32)>> {
        self.guard_interval(value - self.kernel_tol, value + self.kernel_tol)?;
        Ok(self
            .entries
            .iter()
            .filter(|e| (e.mu - value).abs() <= self.kernel_tol)
            .map(|e| (e.m, e.n))
            .collect())
    }

    /// min over the window of dist(μ, [lo, hi]); the enumeration surrogate
    /// for the coercivity constant with constant multipliers. The guard
    /// certifies out-of-window modes cannot come closer.
    pub fn min_distance_to_interval(&self, lo: f64, hi: f64) -> Result<f64> {
        self.guard_interval(lo, hi)?;
        Ok(self
            .entries
            .iter()
            .map(|e| {
                if e.mu < lo {
                    lo - e.mu
                } else if e.mu > hi {
                    e.mu - hi
                } else {
                    0.0
                }
            })
            .fold(f64::INFINITY, f64::min))
    }

    /// Certifies that every eigenvalue in [lo, hi] (odd window only) belongs
    /// to the computed truncation. Two escape routes are checked by
    /// enumeration on the exact factorization of μ − κ/π:
    /// larger m at known n (λ_n² exact), and n beyond the window, where
    /// λ_n² = n² + κ/π carries a C/n² uncertainty from the computed tail.
    fn guard_interval(&self, lo: f64, hi: f64) -> Result<()> {
        if self.parity == SpectrumParity::Even {
            // diagnostics-only path: no completeness claims for M_e
            return Ok(());
        }
        let p = self.period.p() as f64;
        let q = self.period.q() as f64;
        let shift = self.kappa / std::f64::consts::PI;

        // (a) n within the window, m beyond it: μ decreases in m, so scan odd
        // m > m_max until even the largest λ_n² keeps μ below lo.
        let lam_sq: Vec<f64> = (1..=self.n_max)
            .map(|n| {
                self.entries
                    .iter()
                    .find(|e| e.n == n as u32)
                    .map(|e| e.mu + self.period.freq_sq(e.m))
                    .expect("every n appears in the window")
            })
            .collect();
        let lam_top = lam_sq.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut m = self.m_max + if self.m_max % 2 == 1 { 2 } else { 1 };
        while lam_top - self.period.freq_sq(m) >= lo {
            for (idx, &l) in lam_sq.iter().enumerate() {
                let v = l - self.period.freq_sq(m);
                if v >= lo && v <= hi {
                    return Err(VarwaveError::WindowTooSmall(format!(
                        "mode (m, n) = ({m}, {}) outside m_max = {} has mu = {v:.6} \
                         inside [{lo:.6}, {hi:.6}]; enlarge the window",
                        idx + 1,
                        self.m_max
                    )));
                }
            }
            m += 2;
        }

        // (b) n beyond the window: |μ − κ/π − d_n| = |np−mq|(np+mq)/p² with
        // |np−mq| ≥ 1 for odd m, so (np+mq)/p² ≤ bound confines candidates to
        // finitely many n; λ_n² ≈ n² + κ/π within C/n².
        let width = lo.abs().max(hi.abs()) + shift.abs();
        let tail_c = 10.0 * self.defect_tail + 1e-6;
        let n_stop = (p * (width + tail_c) ).ceil() as usize + 1;
        for n in (self.n_max + 1)..=n_stop.max(self.n_max + 1) {
            let unc = tail_c / (n * n) as f64;
            let lam_est = (n * n) as f64 + shift;
            let mut m = 1u32;
            loop {
                let f = self.period.freq_sq(m);
                let v = lam_est - f;
                if v + unc >= lo && v - unc <= hi {
                    return Err(VarwaveError::WindowTooSmall(format!(
                        "estimated mode (m, n) = ({m}, {n}) beyond n_max = {} may have \
                         mu = {v:.6} (±{unc:.2e}) inside [{lo:.6}, {hi:.6}]; enlarge the window",
                        self.n_max
                    )));
                }
                if v < lo {
                    break;
                }
                m += 2;
            }
            // once even m = 1 sits above hi with margin growing like 2n/p,
            // larger n cannot re-enter
            let min_gap = (n as f64 * p + q) / (p * p) - unc;
            if min_gap > width + hi.abs() + 1.0 {
                break;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficient::CoefficientProfile;
    use crate::sturm_liouville::solve_eigenbasis;
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    fn unit_basis(n_max: usize) -> EigenBasis {
        solve_eigenbasis(
            Arc::new(CoefficientProfile::constant(1.0, 129).unwrap()),
            n_max,
        )
        .unwrap()
    }

    /// Independent brute-force oracle for u ≡ 1, p = 2, q = 1: μ in exact
    /// quarter-integer arithmetic.
    fn enumerate_quarters(m_max: i64, n_max: i64) -> Vec<(i64, i64, i64)> {
        // returns (m, n, 4μ) for odd m
        let mut out = Vec::new();
        for m in (1..=m_max).step_by(2) {
            for n in 1..=n_max {
                out.push((m, n, 4 * n * n - m * m));
            }
        }
        out
    }

    #[test]
    fn mu_values_match_trivial_cases() {
        let basis = unit_basis(3);
        let period = RationalPeriod::new(2, 1).unwrap();
        assert_eq!(mu(&basis, period, 1, 1).unwrap(), 0.75);
        assert_eq!(mu(&basis, period, 3, 1).unwrap(), -1.25);
        let exp_basis = solve_eigenbasis(
            Arc::new(CoefficientProfile::exponential(2.0, 257).unwrap()),
            1,
        )
        .unwrap();
        assert_abs_diff_eq!(mu(&exp_basis, period, 1, 1).unwrap(), 1.75, epsilon = 1e-10);
    }

    #[test]
    fn odd_spectrum_minimum_matches_enumeration() {
        let basis = unit_basis(9);
        let period = RationalPeriod::new(2, 1).unwrap();
        let spec = odd_spectrum(&basis, period, 9, 9, DEFAULT_KERNEL_TOL).unwrap();
        let (min_abs, m, n) = spec.min_abs_mu();
        assert_eq!(min_abs, 0.75);
        assert_eq!((m, n), (1, 1));
        // oracle: 4n² − m² is odd for odd m so |4μ| ≥ 1, and 3 is attained
        let oracle_min = enumerate_quarters(9, 9)
            .into_iter()
            .map(|(_, _, q4)| q4.abs())
            .min()
            .unwrap();
        assert_eq!(oracle_min, 3);
        // kernel emptiness: no |μ| < 1/4
        assert!(spec.entries().iter().all(|e| e.mu.abs() >= 0.25));
    }

    #[test]
    fn consecutive_pairs_match_enumeration() {
        let basis = unit_basis(30);
        let period = RationalPeriod::new(2, 1).unwrap();
        let spec = odd_spectrum(&basis, period, 59, 30, DEFAULT_KERNEL_TOL).unwrap();
        assert_eq!(spec.consecutive_pair(0.0).unwrap(), (-1.25, 0.75));
        assert_eq!(spec.consecutive_pair(1.0).unwrap(), (0.75, 1.75));
        // pins the ≤ / > convention: 3/4 > 0.5 so the pair is unchanged
        assert_eq!(spec.consecutive_pair(0.5).unwrap(), (-1.25, 0.75));
    }

    #[test]
    fn kernel_basis_matches_enumeration() {
        let basis = unit_basis(30);
        let period = RationalPeriod::new(2, 1).unwrap();
        let spec = odd_spectrum(&basis, period, 59, 30, DEFAULT_KERNEL_TOL).unwrap();
        assert_eq!(spec.kernel_basis(0.75).unwrap(), vec![(1, 1)]);
        assert_eq!(spec.kernel_basis(0.0).unwrap(), Vec::<(u32, u32)>::new());
        assert_eq!(spec.kernel_basis(-1.25).unwrap(), vec![(3, 1)]);
        // cross-check against the quarter-integer oracle
        for (m, n, q4) in enumerate_quarters(59, 30) {
            if q4 == 3 {
                assert_eq!((m, n), (1, 1));
            }
            if q4 == -5 {
                assert_eq!((m, n), (3, 1));
            }
        }
    }

    #[test]
    fn quarter_integer_structure_is_exact() {
        // all odd-parity μ are odd integers divided by 4, exactly
        let basis = unit_basis(12);
        let period = RationalPeriod::new(2, 1).unwrap();
        let spec = odd_spectrum(&basis, period, 15, 12, DEFAULT_KERNEL_TOL).unwrap();
        for e in spec.entries() {
            let four_mu = 4.0 * e.mu;
            assert_eq!(four_mu, four_mu.round());
            assert_eq!((four_mu.round() as i64).rem_euclid(2), 1);
        }
    }

    #[test]
    fn level_on_spectrum_is_rejected() {
        let basis = unit_basis(10);
        let period = RationalPeriod::new(2, 1).unwrap();
        let spec = odd_spectrum(&basis, period, 9, 10, DEFAULT_KERNEL_TOL).unwrap();
        assert!(matches!(
            spec.consecutive_pair(0.75),
            Err(VarwaveError::LevelOnSpectrum { .. })
        ));
    }

    #[test]
    fn window_guard_catches_missing_m() {
        // with m_max = 1, n_max = 2 the window sees 3/4 and 15/4 around
        // level 1 but (m, n) = (3, 2) has μ = 7/4 inside; the guard must balk
        let basis = unit_basis(2);
        let period = RationalPeriod::new(2, 1).unwrap();
        let spec = odd_spectrum(&basis, period, 1, 2, DEFAULT_KERNEL_TOL).unwrap();
        assert!(matches!(
            spec.consecutive_pair(1.0),
            Err(VarwaveError::WindowTooSmall(_))
        ));
    }

    #[test]
    fn odd_spectrum_requires_even_p() {
        let basis = unit_basis(3);
        let period = RationalPeriod::new(3, 2).unwrap();
        assert!(matches!(
            odd_spectrum(&basis, period, 5, 3, DEFAULT_KERNEL_TOL),
            Err(VarwaveError::PeriodParity { p: 3 })
        ));
    }

    #[test]
    fn divergence_along_window_tail() {
        // |μ| grows along m + n → ∞ within the factorized structure
        let basis = unit_basis(40);
        let period = RationalPeriod::new(2, 1).unwrap();
        let spec = odd_spectrum(&basis, period, 79, 40, DEFAULT_KERNEL_TOL).unwrap();
        let bound_for = |s: u32| {
            spec.entries()
                .iter()
                .filter(|e| e.m + e.n >= s)
                .map(|e| e.mu.abs())
                .fold(f64::INFINITY, f64::min)
        };
        assert!(bound_for(40) > bound_for(4));
        assert!(bound_for(80) > bound_for(40));
    }

    #[test]
    fn rational_period_validation() {
        assert!(RationalPeriod::new(2, 4).is_err());
        assert!(RationalPeriod::new(0, 1).is_err());
        let p = RationalPeriod::new(2, 1).unwrap();
        assert_abs_diff_eq!(p.t_period(), 4.0 * std::f64::consts::PI, epsilon = 1e-15);
        assert_eq!(p.freq_sq(3), 2.25);
    }

    #[test]
    fn even_spectrum_is_diagnostic() {
        let basis = unit_basis(5);
        let period = RationalPeriod::new(2, 1).unwrap();
        let spec = even_spectrum(&basis, period, 8, 5, DEFAULT_KERNEL_TOL).unwrap();
        assert!(spec.entries().iter().all(|e| e.m % 2 == 0));
        // (m, n) = (2, 1): μ = 1 − 1 = 0 allowed here
        assert!(spec.entries().iter().any(|e| e.mu == 0.0));
    }
}
