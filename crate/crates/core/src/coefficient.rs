//! The variable coefficient u(x) on [0, π] and its derived quantities.
//!
//! η_u = (1/2)u''/u − (1/4)(u'/u)² is the potential of the Liouville normal
//! form and κ = ∫₀^π η_u dx feeds the eigenvalue asymptotics λ_n² ≈ n² + κ/π.

use crate::error::{Result, VarwaveError};
use crate::quad;
use std::f64::consts::PI;

/// Closed-form or sampled description of the coefficient.
#[derive(Debug, Clone)]
pub enum CoefficientKind {
    /// u ≡ c.
    Constant(f64),
    /// u = e^{a·x}.
    Exponential(f64),
    /// u = (1 + x/π)².
    SquarePolynomial,
    /// u, u', u'' sampled on a uniform grid over [0, π].
    UserSampled {
        u: Vec<f64>,
        du: Vec<f64>,
        ddu: Vec<f64>,
    },
}

impl CoefficientKind {
    fn describe(&self) -> String {
        match self {
            CoefficientKind::Constant(c) => format!("constant({c})"),
            CoefficientKind::Exponential(a) => format!("exponential({a})"),
            CoefficientKind::SquarePolynomial => "square-polynomial".to_string(),
            CoefficientKind::UserSampled { u, .. } => format!("user-sampled({} points)", u.len()),
        }
    }
}

/// The coefficient u(x) with enough structure to evaluate u, u', u'' and η_u
/// anywhere on [0, π]. Immutable after construction; all evaluations are pure.
#[derive(Debug, Clone)]
pub struct CoefficientProfile {
    kind: CoefficientKind,
    grid_size: usize,
}

/// Point values (u, u', u'') at one location.
#[derive(Debug, Clone, Copy)]
pub struct CoefficientValues {
    pub u: f64,
    pub du: f64,
    pub ddu: f64,
}

impl CoefficientProfile {
    /// Builds a profile, rejecting non-positive u (hypothesis H1 is hard).
    pub fn new(kind: CoefficientKind, grid_size: usize) -> Result<Self> {
        if grid_size < 129 {
            return Err(VarwaveError::InvalidInput(format!(
                "grid_size must be >= 129, got {grid_size}"
            )));
        }
        match &kind {
            CoefficientKind::Constant(c) => {
                if !c.is_finite() || *c <= 0.0 {
                    return Err(VarwaveError::ProfileRejected(format!(
                        "constant coefficient must be positive, got {c}"
                    )));
                }
            }
            CoefficientKind::Exponential(a) => {
                if !a.is_finite() {
                    return Err(VarwaveError::ProfileRejected("non-finite exponent".into()));
                }
            }
            CoefficientKind::SquarePolynomial => {}
            CoefficientKind::UserSampled { u, du, ddu } => {
                if u.len() != du.len() || u.len() != ddu.len() {
                    return Err(VarwaveError::ProfileRejected(format!(
                        "sampled arrays must have equal length: {} / {} / {}",
                        u.len(),
                        du.len(),
                        ddu.len()
                    )));
                }
                if u.len() < 129 {
                    return Err(VarwaveError::ProfileRejected(format!(
                        "sampled profile needs >= 129 points, got {}",
                        u.len()
                    )));
                }
                if u.iter().chain(du).chain(ddu).any(|v| !v.is_finite()) {
                    return Err(VarwaveError::ProfileRejected(
                        "sampled profile contains non-finite values".into(),
                    ));
                }
            }
        }
        let profile = Self { kind, grid_size };
        // positivity at every grid point, strictly
        for j in 0..profile.grid_size {
            let x = profile.grid_x(j);
            let u = profile.values(x)?.u;
            if !(u > 0.0) {
                return Err(VarwaveError::ProfileRejected(format!(
                    "u({x:.6}) = {u:.6e} violates u > 0 (profile {})",
                    profile.kind.describe()
                )));
            }
        }
        Ok(profile)
    }

    /// Shorthand for u ≡ c.
    pub fn constant(c: f64, grid_size: usize) -> Result<Self> {
        Self::new(CoefficientKind::Constant(c), grid_size)
    }

    /// Shorthand for u = e^{a·x}.
    pub fn exponential(a: f64, grid_size: usize) -> Result<Self> {
        Self::new(CoefficientKind::Exponential(a), grid_size)
    }

    /// Shorthand for u = (1 + x/π)².
    pub fn square_polynomial(grid_size: usize) -> Result<Self> {
        Self::new(CoefficientKind::SquarePolynomial, grid_size)
    }

    /// Builds a UserSampled profile from a smooth closed form, mostly for tests
    /// and for table-driven runs that were generated analytically.
    pub fn from_samples(u: Vec<f64>, du: Vec<f64>, ddu: Vec<f64>, grid_size: usize) -> Result<Self> {
        Self::new(CoefficientKind::UserSampled { u, du, ddu }, grid_size)
    }

    pub fn kind(&self) -> &CoefficientKind {
        &self.kind
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn describe(&self) -> String {
        self.kind.describe()
    }

    fn grid_x(&self, j: usize) -> f64 {
        j as f64 * PI / (self.grid_size - 1) as f64
    }

    /// u, u', u'' at x ∈ [0, π]. UserSampled kinds interpolate each array
    /// independently with local cubics (D1).
    pub fn values(&self, x: f64) -> Result<CoefficientValues> {
        if !(0.0..=PI + 1e-12).contains(&x) {
            return Err(VarwaveError::InvalidInput(format!(
                "x = {x} outside [0, pi]"
            )));
        }
        let x = x.min(PI);
        Ok(match &self.kind {
            CoefficientKind::Constant(c) => CoefficientValues {
                u: *c,
                du: 0.0,
                ddu: 0.0,
            },
            CoefficientKind::Exponential(a) => {
                let u = (a * x).exp();
                CoefficientValues {
                    u,
                    du: a * u,
                    ddu: a * a * u,
                }
            }
            CoefficientKind::SquarePolynomial => {
                let s = 1.0 + x / PI;
                CoefficientValues {
                    u: s * s,
                    du: 2.0 * s / PI,
                    ddu: 2.0 / (PI * PI),
                }
            }
            CoefficientKind::UserSampled { u, du, ddu } => CoefficientValues {
                u: interp_cubic(u, x),
                du: interp_cubic(du, x),
                ddu: interp_cubic(ddu, x),
            },
        })
    }

    /// η_u(x) = (1/2)u''/u − (1/4)(u'/u)².
    pub fn eta_u(&self, x: f64) -> Result<f64> {
        let v = self.values(x)?;
        let r1 = v.du / v.u;
        let r2 = v.ddu / v.u;
        Ok(0.5 * r2 - 0.25 * r1 * r1)
    }

    /// κ = ∫₀^π η_u dx by composite Simpson on the profile grid (D2).
    pub fn kappa(&self) -> Result<f64> {
        let w = quad::simpson_weights(self.grid_size, PI);
        let mut acc = 0.0;
        for (j, wj) in w.iter().enumerate() {
            acc += wj * self.eta_u(self.grid_x(j))?;
        }
        Ok(acc)
    }
}

/// Local 4-point Lagrange cubic on the uniform sample grid.
fn interp_cubic(samples: &[f64], x: f64) -> f64 {
    let n = samples.len();
    let h = PI / (n - 1) as f64;
    let pos = x / h;
    // left index of the 4-point stencil, clamped to the interior
    let i0 = (pos.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
    let mut acc = 0.0;
    for a in 0..4 {
        let xa = (i0 + a) as f64;
        let mut l = 1.0;
        for b in 0..4 {
            if a != b {
                let xb = (i0 + b) as f64;
                l *= (pos - xb) / (xa - xb);
            }
        }
        acc += l * samples[i0 + a];
    }
    acc
}
