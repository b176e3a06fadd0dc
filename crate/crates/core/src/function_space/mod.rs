//! Spectral representation of functions on Ω = (0, T) × (0, π).
//!
//! Fields live in the orthonormal system {T_m φ_n cos(qmt/p), T_m φ_n
//! sin(qmt/p)} of the u-weighted L²(Ω), T_0 = 1/√T, T_m = √(2/T). The time
//! direction is handled by FFTs on a uniform periodic grid (exact for the
//! truncated band), the x direction by u-weighted trapezoid projection
//! against φ_n (exact below the sine aliasing threshold, see quad.rs). The
//! T/2 shift that defines the parity split lands on grid points because n_t
//! is a multiple of 2p (D12).

mod nonlinearity;

pub use nonlinearity::{Multiplier, NonlinearitySpec, SlopeInterval, SymmetryClass};

use crate::error::{Result, VarwaveError};
use crate::sturm_liouville::EigenBasis;
use crate::wave_spectrum::RationalPeriod;
use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Parity subspace tag. Odd = T/2-antiperiodic (odd m), the solver's home.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Odd,
    Even,
    Mixed,
}

/// Cosine or sine member of a basis pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrigKind {
    Cos,
    Sin,
}

/// Truncated tensor function space: eigenbasis ⊗ trigonometric band.
pub struct FieldSpace {
    basis: Arc<EigenBasis>,
    period: RationalPeriod,
    m_max: usize,
    n_max: usize,
    n_t: usize,
    n_t_pad: usize,
    t_norm: Vec<f64>,
    /// μ_mn with m as row (0-based), n as column (0-based for n−1).
    mu: DMatrix<f64>,
    /// φ_n(x_j), n_max × n_x.
    phi: DMatrix<f64>,
    /// u-weighted trapezoid projection: proj[n][j] = w_j u_j φ_n(x_j).
    proj: DMatrix<f64>,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
    fft_fwd_pad: Arc<dyn Fft<f64>>,
    fft_inv_pad: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FieldSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FieldSpace")
            .field("m_max", &self.m_max)
            .field("n_max", &self.n_max)
            .field("n_t", &self.n_t)
            .field("n_t_pad", &self.n_t_pad)
            .finish()
    }
}

fn round_up_multiple(value: usize, base: usize) -> usize {
    value.div_ceil(base) * base
}

impl FieldSpace {
    pub fn new(
        basis: Arc<EigenBasis>,
        period: RationalPeriod,
        m_max: usize,
        n_max: usize,
    ) -> Result<Arc<Self>> {
        if m_max == 0 {
            return Err(VarwaveError::InvalidInput("m_max must be >= 1".into()));
        }
        if n_max == 0 || n_max > basis.n_max() {
            return Err(VarwaveError::InvalidInput(format!(
                "n_max = {n_max} out of range 1..={}",
                basis.n_max()
            )));
        }
        let two_p = 2 * period.p() as usize;
        let n_t = round_up_multiple((4 * m_max).max(8), two_p);
        let n_t_pad = round_up_multiple((6 * m_max).max(12), two_p);

        let t = period.t_period();
        let mut t_norm = vec![(2.0 / t).sqrt(); m_max + 1];
        t_norm[0] = 1.0 / t.sqrt();

        let mut mu = DMatrix::zeros(m_max + 1, n_max);
        for m in 0..=m_max {
            for n in 1..=n_max {
                mu[(m, n - 1)] = basis.lambda_sq(n) - period.freq_sq(m as u32);
            }
        }

        let grid = basis.grid();
        let n_x = grid.len();
        let mut phi = DMatrix::zeros(n_max, n_x);
        let mut proj = DMatrix::zeros(n_max, n_x);
        for n in 0..n_max {
            for j in 0..n_x {
                let v = basis.phi()[(n, j)];
                phi[(n, j)] = v;
                proj[(n, j)] = grid.weights()[j] * grid.u()[j] * v;
            }
        }

        let mut planner = FftPlanner::new();
        Ok(Arc::new(Self {
            fft_fwd: planner.plan_fft_forward(n_t),
            fft_inv: planner.plan_fft_inverse(n_t),
            fft_fwd_pad: planner.plan_fft_forward(n_t_pad),
            fft_inv_pad: planner.plan_fft_inverse(n_t_pad),
            basis,
            period,
            m_max,
            n_max,
            n_t,
            n_t_pad,
            t_norm,
            mu,
            phi,
            proj,
        }))
    }

    pub fn basis(&self) -> &Arc<EigenBasis> {
        &self.basis
    }

    pub fn period(&self) -> RationalPeriod {
        self.period
    }

    pub fn m_max(&self) -> usize {
        self.m_max
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn n_t_pad(&self) -> usize {
        self.n_t_pad
    }

    pub fn n_x(&self) -> usize {
        self.basis.grid().len()
    }

    /// μ_mn (1-based n).
    pub fn mu(&self, m: usize, n: usize) -> f64 {
        self.mu[(m, n - 1)]
    }

    pub fn t_values(&self, padded: bool) -> Vec<f64> {
        let nt = if padded { self.n_t_pad } else { self.n_t };
        let dt = self.period.t_period() / nt as f64;
        (0..nt).map(|i| i as f64 * dt).collect()
    }

    fn fft_pair(&self, nt: usize) -> Result<(&Arc<dyn Fft<f64>>, &Arc<dyn Fft<f64>>)> {
        if nt == self.n_t {
            Ok((&self.fft_fwd, &self.fft_inv))
        } else if nt == self.n_t_pad {
            Ok((&self.fft_fwd_pad, &self.fft_inv_pad))
        } else {
            Err(VarwaveError::GridMismatch(format!(
                "time grid of {nt} rows is neither the standard ({}) nor padded ({}) grid",
                self.n_t, self.n_t_pad
            )))
        }
    }

    /// Zero field in coefficient space.
    pub fn zero_field(self: &Arc<Self>) -> SpectralField {
        SpectralField {
            space: self.clone(),
            a: DMatrix::zeros(self.m_max + 1, self.n_max),
            b: DMatrix::zeros(self.m_max + 1, self.n_max),
        }
    }

    /// Unit coefficient at (m, n) on the cos or sin side (1-based n).
    pub fn basis_field(self: &Arc<Self>, m: usize, n: usize, kind: TrigKind) -> SpectralField {
        let mut f = self.zero_field();
        f.set(m, n, kind, 1.0);
        f
    }

    /// Synthesis onto the uniform grid: y(t_i, x_j) from coefficients.
    pub fn synthesize(&self, field: &SpectralField) -> GridField {
        self.synthesize_on(field, false)
    }

    /// Synthesis onto the 3/2-dealiasing grid (D13).
    pub fn synthesize_padded(&self, field: &SpectralField) -> GridField {
        self.synthesize_on(field, true)
    }

    fn synthesize_on(&self, field: &SpectralField, padded: bool) -> GridField {
        let nt = if padded { self.n_t_pad } else { self.n_t };
        let (_, inv) = self.fft_pair(nt).expect("internal grid");
        let n_x = self.n_x();
        // g_c[m][j] = T_m Σ_n a_mn φ_n(x_j); same for sin
        let mut g_c = &field.a * &self.phi;
        let mut g_s = &field.b * &self.phi;
        for m in 0..=self.m_max {
            for j in 0..n_x {
                g_c[(m, j)] *= self.t_norm[m];
                g_s[(m, j)] *= self.t_norm[m];
            }
        }
        let mut values = DMatrix::zeros(nt, n_x);
        let mut buf = vec![Complex::new(0.0, 0.0); nt];
        for j in 0..n_x {
            buf.iter_mut().for_each(|z| *z = Complex::new(0.0, 0.0));
            buf[0] = Complex::new(g_c[(0, j)], 0.0);
            for m in 1..=self.m_max {
                let z = Complex::new(0.5 * g_c[(m, j)], -0.5 * g_s[(m, j)]);
                buf[m] = z;
                buf[nt - m] = z.conj();
            }
            inv.process(&mut buf);
            for i in 0..nt {
                values[(i, j)] = buf[i].re;
            }
        }
        GridField {
            values,
            dt: self.period.t_period() / nt as f64,
        }
    }

    /// Fourier analysis: coefficients a_mn = T_m ∫ u φ_n y cos(qmt/p) dt dx
    /// and the sine analogue, via FFT in t and weighted projection in x (D14).
    pub fn analyze(self: &Arc<Self>, grid: &GridField) -> Result<SpectralField> {
        let nt = grid.values.nrows();
        let n_x = grid.values.ncols();
        if n_x != self.n_x() {
            return Err(VarwaveError::GridMismatch(format!(
                "x grid has {n_x} points, expected {}",
                self.n_x()
            )));
        }
        if nt < 2 * self.m_max + 2 {
            return Err(VarwaveError::UnderResolved(format!(
                "time grid of {nt} rows cannot resolve m_max = {}",
                self.m_max
            )));
        }
        let (fwd, _) = self.fft_pair(nt)?;
        let dt = self.period.t_period() / nt as f64;
        let mut tc = DMatrix::zeros(self.m_max + 1, n_x);
        let mut ts = DMatrix::zeros(self.m_max + 1, n_x);
        let mut buf = vec![Complex::new(0.0, 0.0); nt];
        for j in 0..n_x {
            for i in 0..nt {
                buf[i] = Complex::new(grid.values[(i, j)], 0.0);
            }
            fwd.process(&mut buf);
            for m in 0..=self.m_max {
                tc[(m, j)] = dt * buf[m].re;
                ts[(m, j)] = -dt * buf[m].im;
            }
        }
        let mut a = tc * self.proj.transpose();
        let mut b = ts * self.proj.transpose();
        for m in 0..=self.m_max {
            for n in 0..self.n_max {
                a[(m, n)] *= self.t_norm[m];
                b[(m, n)] *= self.t_norm[m];
            }
        }
        for n in 0..self.n_max {
            b[(0, n)] = 0.0;
        }
        Ok(SpectralField {
            space: self.clone(),
            a,
            b,
        })
    }

    /// ⟨y, z⟩ = ∫_Ω u y z dt dx by tensor quadrature (periodic trapezoid in
    /// t, trapezoid with u-weight in x — exact for the truncated band).
    pub fn weighted_inner(&self, y: &GridField, z: &GridField) -> Result<f64> {
        if y.values.shape() != z.values.shape() {
            return Err(VarwaveError::GridMismatch(format!(
                "shapes {:?} vs {:?}",
                y.values.shape(),
                z.values.shape()
            )));
        }
        if y.values.ncols() != self.n_x() {
            return Err(VarwaveError::GridMismatch(format!(
                "x grid has {} points, expected {}",
                y.values.ncols(),
                self.n_x()
            )));
        }
        let grid = self.basis.grid();
        let mut acc = 0.0;
        for j in 0..y.values.ncols() {
            let wuj = grid.weights()[j] * grid.u()[j];
            let mut col = 0.0;
            for i in 0..y.values.nrows() {
                col += y.values[(i, j)] * z.values[(i, j)];
            }
            acc += wuj * col;
        }
        Ok(acc * y.dt)
    }

    /// Weighted L² norm of a grid field.
    pub fn grid_norm(&self, y: &GridField) -> Result<f64> {
        Ok(self.weighted_inner(y, y)?.max(0.0).sqrt())
    }

    /// Diagonal action of the wave operator: coefficient (m, n) times μ_mn.
    /// Commutes with the parity projections (complete reduction).
    pub fn apply_wave_operator(&self, field: &SpectralField) -> SpectralField {
        let mut out = field.clone();
        for m in 0..=self.m_max {
            for n in 0..self.n_max {
                out.a[(m, n)] *= self.mu[(m, n)];
                out.b[(m, n)] *= self.mu[(m, n)];
            }
        }
        out
    }

    /// Packs the odd-m coefficients into a flat vector (cos block then sin
    /// block, m ascending, n ascending within m).
    pub fn pack_odd(&self, field: &SpectralField) -> DVector<f64> {
        let odd_ms: Vec<usize> = (1..=self.m_max).step_by(2).collect();
        let len = 2 * odd_ms.len() * self.n_max;
        let mut v = DVector::zeros(len);
        let mut idx = 0;
        for &m in &odd_ms {
            for n in 0..self.n_max {
                v[idx] = field.a[(m, n)];
                idx += 1;
            }
        }
        for &m in &odd_ms {
            for n in 0..self.n_max {
                v[idx] = field.b[(m, n)];
                idx += 1;
            }
        }
        v
    }

    /// Inverse of [`Self::pack_odd`]; even rows are exactly zero.
    pub fn unpack_odd(self: &Arc<Self>, v: &DVector<f64>) -> SpectralField {
        let mut f = self.zero_field();
        let odd_ms: Vec<usize> = (1..=self.m_max).step_by(2).collect();
        let mut idx = 0;
        for &m in &odd_ms {
            for n in 0..self.n_max {
                f.a[(m, n)] = v[idx];
                idx += 1;
            }
        }
        for &m in &odd_ms {
            for n in 0..self.n_max {
                f.b[(m, n)] = v[idx];
                idx += 1;
            }
        }
        f
    }

    /// Dimension of the packed odd subspace.
    pub fn odd_dim(&self) -> usize {
        2 * (1..=self.m_max).step_by(2).count() * self.n_max
    }

    /// μ values in packed-odd order (cos block then sin block).
    pub fn packed_odd_mu(&self) -> DVector<f64> {
        let odd_ms: Vec<usize> = (1..=self.m_max).step_by(2).collect();
        let half = odd_ms.len() * self.n_max;
        let mut v = DVector::zeros(2 * half);
        let mut idx = 0;
        for &m in &odd_ms {
            for n in 0..self.n_max {
                v[idx] = self.mu[(m, n)];
                v[half + idx] = self.mu[(m, n)];
                idx += 1;
            }
        }
        v
    }

    /// Packed index back to (m, n, cos/sin) for error reporting (1-based n).
    pub fn packed_odd_index(&self, idx: usize) -> (u32, u32, TrigKind) {
        let odd_ms: Vec<usize> = (1..=self.m_max).step_by(2).collect();
        let half = odd_ms.len() * self.n_max;
        let (kind, k) = if idx < half {
            (TrigKind::Cos, idx)
        } else {
            (TrigKind::Sin, idx - half)
        };
        let m = odd_ms[k / self.n_max];
        let n = k % self.n_max + 1;
        (m as u32, n as u32, kind)
    }
}

/// Function values y(t_i, x_j) on a uniform tensor grid; rows are time.
#[derive(Debug, Clone)]
pub struct GridField {
    pub values: DMatrix<f64>,
    /// time step of the grid the values live on
    pub dt: f64,
}

impl GridField {
    pub fn n_t(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_x(&self) -> usize {
        self.values.ncols()
    }

    /// y(t + T/2, x) on the same grid (n_t is even by construction).
    pub fn half_period_shift(&self) -> GridField {
        let nt = self.values.nrows();
        let mut shifted = self.values.clone();
        for i in 0..nt {
            for j in 0..self.values.ncols() {
                shifted[(i, j)] = self.values[((i + nt / 2) % nt, j)];
            }
        }
        GridField {
            values: shifted,
            dt: self.dt,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// A function of the truncated space as coefficients over the trig ⊗ φ_n
/// basis. b row 0 is structurally zero (no sin at m = 0, D15).
#[derive(Clone)]
pub struct SpectralField {
    space: Arc<FieldSpace>,
    /// cosine coefficients, (m_max+1) × n_max
    pub a: DMatrix<f64>,
    /// sine coefficients, same shape, row 0 zero
    pub b: DMatrix<f64>,
}

impl std::fmt::Debug for SpectralField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralField")
            .field("m_max", &self.space.m_max)
            .field("n_max", &self.space.n_max)
            .field("norm", &self.norm())
            .field("parity", &self.parity_tag())
            .finish()
    }
}

impl SpectralField {
    pub fn space(&self) -> &Arc<FieldSpace> {
        &self.space
    }

    /// Coefficient getter, 1-based n.
    pub fn get(&self, m: usize, n: usize, kind: TrigKind) -> f64 {
        match kind {
            TrigKind::Cos => self.a[(m, n - 1)],
            TrigKind::Sin => self.b[(m, n - 1)],
        }
    }

    /// Coefficient setter, 1-based n; sin at m = 0 is rejected.
    pub fn set(&mut self, m: usize, n: usize, kind: TrigKind, value: f64) {
        match kind {
            TrigKind::Cos => self.a[(m, n - 1)] = value,
            TrigKind::Sin => {
                assert!(m >= 1, "no sine coefficient at m = 0");
                self.b[(m, n - 1)] = value;
            }
        }
    }

    /// ‖y‖ via Parseval in the orthonormal basis.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.a.iter().map(|v| v * v).sum::<f64>() + self.b.iter().map(|v| v * v).sum::<f64>()
    }

    /// Coefficient-space inner product (= weighted L² inner product).
    pub fn inner(&self, other: &SpectralField) -> f64 {
        self.a.iter().zip(other.a.iter()).map(|(x, y)| x * y).sum::<f64>()
            + self.b.iter().zip(other.b.iter()).map(|(x, y)| x * y).sum::<f64>()
    }

    /// self + factor · other.
    pub fn add_scaled(&self, other: &SpectralField, factor: f64) -> SpectralField {
        let mut out = self.clone();
        out.a += factor * &other.a;
        out.b += factor * &other.b;
        out
    }

    pub fn scaled(&self, factor: f64) -> SpectralField {
        let mut out = self.clone();
        out.a *= factor;
        out.b *= factor;
        out
    }

    /// Norm of the even-m (T/2-periodic) component.
    pub fn even_part_norm(&self) -> f64 {
        self.parity_norm(Parity::Even)
    }

    /// Norm of the odd-m (T/2-antiperiodic) component.
    pub fn odd_part_norm(&self) -> f64 {
        self.parity_norm(Parity::Odd)
    }

    fn parity_norm(&self, parity: Parity) -> f64 {
        let want_odd = parity == Parity::Odd;
        let mut acc = 0.0;
        for m in 0..self.a.nrows() {
            if (m % 2 == 1) == want_odd {
                for n in 0..self.a.ncols() {
                    acc += self.a[(m, n)].powi(2) + self.b[(m, n)].powi(2);
                }
            }
        }
        acc.sqrt()
    }

    /// Exact parity classification: a tag is only claimed when the
    /// complementary rows are identically zero.
    pub fn parity_tag(&self) -> Parity {
        let even_zero = self.parity_norm(Parity::Even) == 0.0;
        let odd_zero = self.parity_norm(Parity::Odd) == 0.0;
        match (even_zero, odd_zero) {
            (true, false) => Parity::Odd,
            (false, true) => Parity::Even,
            (true, true) => Parity::Odd, // zero field counts as odd-subspace
            (false, false) => Parity::Mixed,
        }
    }

    /// Projection onto the requested parity: complementary coefficients are
    /// zeroed exactly. project_odd + project_even reassembles the field.
    pub fn project_parity(&self, target: Parity) -> SpectralField {
        assert!(target != Parity::Mixed, "project onto Odd or Even");
        let want_odd = target == Parity::Odd;
        let mut out = self.clone();
        for m in 0..out.a.nrows() {
            if (m % 2 == 1) != want_odd {
                for n in 0..out.a.ncols() {
                    out.a[(m, n)] = 0.0;
                    out.b[(m, n)] = 0.0;
                }
            }
        }
        out
    }
}
