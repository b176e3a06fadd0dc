//! The parametric nonlinearity family and its Nemytskii (superposition)
//! action on grid fields.
//!
//! f̂(t, x, y) = c_lin·y + c_sat·y³/(1+y²) + c_osc·sin(y) + e(t, x).
//!
//! The y-dependent part is odd in y and t-independent, hence T/2-periodic:
//! it is an f̂₁ in the symmetry split. The forcing e is y-independent (even
//! in y) and must be T/2-antiperiodic (odd parity tag) to act as f̂₂, which
//! is what keeps F(M_o) ⊂ M_o.

use super::{FieldSpace, GridField, Parity, SpectralField};
use crate::error::{Result, VarwaveError};
use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Declared symmetry structure of the nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetryClass {
    /// f̂ = f̂₁ only: odd in y, T/2-periodic in t, no forcing.
    OddF1Only,
    /// f̂ = f̂₁ + f̂₂ with f̂₂ the odd-parity forcing term.
    SplitF1F2,
}

/// Closed interval of slopes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeInterval {
    pub lo: f64,
    pub hi: f64,
}

impl SlopeInterval {
    pub fn within(&self, lo: f64, hi: f64) -> bool {
        self.lo >= lo && self.hi <= hi
    }
}

/// Parametric closed-form nonlinearity with symmetry declaration and
/// analytic slope information.
#[derive(Debug, Clone)]
pub struct NonlinearitySpec {
    c_lin: f64,
    c_sat: f64,
    c_osc: f64,
    forcing: Option<SpectralField>,
    symmetry: SymmetryClass,
}

/// sup over ℝ of d/dy [y³/(1+y²)] = (y⁴+3y²)/(1+y²)², attained at y² = 3.
const SAT_DERIV_MAX: f64 = 9.0 / 8.0;

impl NonlinearitySpec {
    /// Odd family without forcing (satisfies the global symmetry (3-m)).
    pub fn odd(c_lin: f64, c_sat: f64, c_osc: f64) -> Self {
        Self {
            c_lin,
            c_sat,
            c_osc,
            forcing: None,
            symmetry: SymmetryClass::OddF1Only,
        }
    }

    /// Odd family plus a T/2-antiperiodic forcing; the forcing must carry the
    /// odd parity tag or the operator would leak out of M_o.
    pub fn with_forcing(c_lin: f64, c_sat: f64, c_osc: f64, forcing: SpectralField) -> Result<Self> {
        if forcing.parity_tag() != Parity::Odd {
            return Err(VarwaveError::InvalidInput(
                "forcing must have odd parity tag (T/2-antiperiodic)".into(),
            ));
        }
        Ok(Self {
            c_lin,
            c_sat,
            c_osc,
            forcing: Some(forcing),
            symmetry: SymmetryClass::SplitF1F2,
        })
    }

    pub fn c_lin(&self) -> f64 {
        self.c_lin
    }

    pub fn c_sat(&self) -> f64 {
        self.c_sat
    }

    pub fn c_osc(&self) -> f64 {
        self.c_osc
    }

    pub fn symmetry(&self) -> SymmetryClass {
        self.symmetry
    }

    pub fn forcing(&self) -> Option<&SpectralField> {
        self.forcing.as_ref()
    }

    pub fn has_forcing(&self) -> bool {
        self.forcing.is_some()
    }

    /// The y-dependent part f̂₁(y).
    pub fn eval_scalar(&self, y: f64) -> f64 {
        self.c_lin * y + self.c_sat * y * y * y / (1.0 + y * y) + self.c_osc * y.sin()
    }

    /// f̂₁'(y), closed form (D18).
    pub fn deriv_scalar(&self, y: f64) -> f64 {
        let y2 = y * y;
        let denom = (1.0 + y2) * (1.0 + y2);
        self.c_lin + self.c_sat * (y2 * y2 + 3.0 * y2) / denom + self.c_osc * y.cos()
    }

    /// lim f̂₁(y)/y as |y| → ∞ (sin(y)/y → 0, y³/(1+y²) → y).
    pub fn asymptotic_slope(&self) -> f64 {
        self.c_lin + self.c_sat
    }

    /// Closed-form interval containing f̂₁'(y) for all y ∈ ℝ; by the mean
    /// value theorem it also contains every incremental slope (3.9).
    pub fn derivative_bounds(&self) -> SlopeInterval {
        let sat = self.c_sat * SAT_DERIV_MAX;
        SlopeInterval {
            lo: self.c_lin + sat.min(0.0) - self.c_osc.abs(),
            hi: self.c_lin + sat.max(0.0) + self.c_osc.abs(),
        }
    }

    /// Interval containing f̂₁(y)/y for |y| ≥ R.
    pub fn tail_slope_bounds(&self, r: f64) -> SlopeInterval {
        let s_lo = r * r / (1.0 + r * r);
        let (sat_lo, sat_hi) = if self.c_sat >= 0.0 {
            (self.c_sat * s_lo, self.c_sat)
        } else {
            (self.c_sat, self.c_sat * s_lo)
        };
        let osc = self.c_osc.abs() / r;
        SlopeInterval {
            lo: self.c_lin + sat_lo - osc,
            hi: self.c_lin + sat_hi + osc,
        }
    }

    /// Largest |e(t, x)| over the standard grid (0 without forcing).
    pub fn forcing_sup(&self, space: &FieldSpace) -> f64 {
        self.forcing
            .as_ref()
            .map(|e| space.synthesize(e).max_abs())
            .unwrap_or(0.0)
    }

    /// ‖h_R‖: weighted L² norm of the envelope
    /// (|c_lin| + |c_sat|)·R + |c_osc| + |e(t, x)|, valid for |y| ≤ R (D19).
    pub fn envelope_norm(&self, space: &FieldSpace, r: f64) -> Result<f64> {
        let base = (self.c_lin.abs() + self.c_sat.abs()) * r + self.c_osc.abs();
        let grid = match &self.forcing {
            Some(e) => {
                let mut g = space.synthesize(e);
                g.values.iter_mut().for_each(|v| *v = v.abs() + base);
                g
            }
            None => {
                let nt = space.n_t();
                GridField {
                    values: nalgebra::DMatrix::from_element(nt, space.n_x(), base),
                    dt: space.period().t_period() / nt as f64,
                }
            }
        };
        if !grid.is_finite() {
            return Err(VarwaveError::NonFinite("envelope grid".into()));
        }
        space.grid_norm(&grid)
    }
}

impl FieldSpace {
    /// Pointwise Nemytskii evaluation f̂(t, x, y(t, x)) on the grid carrying
    /// `y`; the forcing is synthesized on the same grid. Callers wanting the
    /// dealiased pipeline should hand in a padded-grid field (D13).
    pub fn nemytskii(&self, spec: &NonlinearitySpec, y: &GridField) -> Result<GridField> {
        if !y.is_finite() {
            return Err(VarwaveError::NonFinite("nemytskii input".into()));
        }
        if y.n_x() != self.n_x() {
            return Err(VarwaveError::GridMismatch(format!(
                "x grid has {} points, expected {}",
                y.n_x(),
                self.n_x()
            )));
        }
        let padded = match y.n_t() {
            nt if nt == self.n_t() => false,
            nt if nt == self.n_t_pad() => true,
            nt => {
                return Err(VarwaveError::GridMismatch(format!(
                    "time grid of {nt} rows is neither standard nor padded"
                )))
            }
        };
        let mut out = y.clone();
        out.values.iter_mut().for_each(|v| *v = spec.eval_scalar(*v));
        if let Some(e) = &spec.forcing {
            let eg = if padded {
                self.synthesize_padded(e)
            } else {
                self.synthesize(e)
            };
            out.values += eg.values;
        }
        Ok(out)
    }

    /// F(y) in coefficient space through the dealiased pseudo-spectral
    /// pipeline: synthesize on the 3/2 grid, apply f̂ pointwise, re-analyze
    /// (which truncates to the band).
    pub fn apply_nonlinearity(
        self: &Arc<Self>,
        spec: &NonlinearitySpec,
        field: &SpectralField,
    ) -> Result<SpectralField> {
        let grid = self.synthesize_padded(field);
        let fg = self.nemytskii(spec, &grid)?;
        self.analyze(&fg)
    }

    /// Multiplier field f̂₁'(y(t, x)) on the padded grid, for Jacobian
    /// applications (D17/D18).
    pub fn nonlinearity_derivative_grid(
        &self,
        spec: &NonlinearitySpec,
        field: &SpectralField,
    ) -> GridField {
        let mut grid = self.synthesize_padded(field);
        grid.values.iter_mut().for_each(|v| *v = spec.deriv_scalar(*v));
        grid
    }

    /// Seeded random field with coefficients decaying like 1/(1+m²+n²),
    /// masked to the requested parity and scaled to `target_norm` (D20).
    pub fn random_field(
        self: &Arc<Self>,
        seed: u64,
        parity: Parity,
        target_norm: f64,
    ) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = self.zero_field();
        for m in 0..=self.m_max() {
            let keep = match parity {
                Parity::Odd => m % 2 == 1,
                Parity::Even => m % 2 == 0,
                Parity::Mixed => true,
            };
            for n in 1..=self.n_max() {
                let decay = 1.0 / (1.0 + (m * m + n * n) as f64);
                let ca: f64 = rng.random_range(-1.0..1.0);
                let cb: f64 = rng.random_range(-1.0..1.0);
                if keep {
                    f.a[(m, n - 1)] = ca * decay;
                    if m >= 1 {
                        f.b[(m, n - 1)] = cb * decay;
                    }
                }
            }
        }
        let norm = f.norm();
        if norm > 0.0 {
            f = f.scaled(target_norm / norm);
        }
        f
    }

    /// Grid values of a multiplier given either as a constant or a field.
    pub fn multiplier_grid(&self, values: &Multiplier, padded: bool) -> GridField {
        let nt = if padded { self.n_t_pad() } else { self.n_t() };
        match values {
            Multiplier::Constant(c) => GridField {
                values: nalgebra::DMatrix::from_element(nt, self.n_x(), *c),
                dt: self.period().t_period() / nt as f64,
            },
            Multiplier::Field(f) => {
                if padded {
                    self.synthesize_padded(f)
                } else {
                    self.synthesize(f)
                }
            }
        }
    }
}

/// Constant-or-field multiplier payload shared by solver and verification.
#[derive(Debug, Clone)]
pub enum Multiplier {
    Constant(f64),
    Field(SpectralField),
}

impl Multiplier {
    /// Pointwise range over the grid (exact for constants).
    pub fn range(&self, space: &FieldSpace) -> (f64, f64) {
        match self {
            Multiplier::Constant(c) => (*c, *c),
            Multiplier::Field(f) => {
                let g = space.synthesize(f);
                let lo = g.values.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = g.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            }
        }
    }

    /// Mean over Ω (unweighted), used for resolvent preconditioning.
    pub fn mean(&self, space: &FieldSpace) -> f64 {
        match self {
            Multiplier::Constant(c) => *c,
            Multiplier::Field(f) => {
                let g = space.synthesize(f);
                g.values.iter().sum::<f64>() / g.values.len() as f64
            }
        }
    }

    pub fn is_even_parity(&self) -> bool {
        match self {
            Multiplier::Constant(_) => true,
            Multiplier::Field(f) => f.parity_tag() == Parity::Even,
        }
    }

    /// Packed-odd diagonal of μ − (this multiplier's mean): the exact inverse
    /// diagonal for constant multipliers, a preconditioner otherwise.
    pub fn shifted_mu_diagonal(&self, space: &FieldSpace) -> DVector<f64> {
        let shift = self.mean(space);
        let mut d = space.packed_odd_mu();
        d.iter_mut().for_each(|v| *v -= shift);
        d
    }
}
