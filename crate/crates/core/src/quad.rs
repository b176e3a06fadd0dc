//! Quadrature rules on the uniform [0, π] grid.
//!
//! Two regimes coexist here. Coefficient-level integrals (κ = ∫η_u) use
//! composite Simpson: the integrand does not vanish at the endpoints, so the
//! O(h⁴) closed rule is the right tool. Function-space inner products instead
//! use the uniform trapezoid rule, which by discrete sine orthogonality is
//! *exact* for products of sine modes below the grid aliasing threshold —
//! every field in this crate is u^{-1/2}·(finite sine polynomial) per time
//! slice, so the weighted inner products reduce to exactly that case.

/// 8-point Gauss–Legendre nodes on [-1, 1].
const GL8_NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];

/// 8-point Gauss–Legendre weights on [-1, 1].
const GL8_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Trapezoid weights for a uniform grid of `n` points spanning [0, len].
pub fn trapezoid_weights(n: usize, len: f64) -> Vec<f64> {
    assert!(n >= 2);
    let h = len / (n - 1) as f64;
    let mut w = vec![h; n];
    w[0] = 0.5 * h;
    w[n - 1] = 0.5 * h;
    w
}

/// Composite Simpson weights for a uniform grid of `n` points spanning [0, len].
///
/// For even `n` the last three points use the 3/8 rule so arbitrary sampled
/// tables are accepted without resampling.
pub fn simpson_weights(n: usize, len: f64) -> Vec<f64> {
    assert!(n >= 5);
    let h = len / (n - 1) as f64;
    let mut w = vec![0.0; n];
    // number of points covered by plain Simpson pairs (odd count)
    let n_simpson = if n % 2 == 1 { n } else { n - 3 };
    w[0] += h / 3.0;
    for (i, wi) in w.iter_mut().enumerate().take(n_simpson - 1).skip(1) {
        *wi += if i % 2 == 1 { 4.0 * h / 3.0 } else { 2.0 * h / 3.0 };
    }
    w[n_simpson - 1] += h / 3.0;
    if n % 2 == 0 {
        // Simpson 3/8 on the final three intervals
        let c = 3.0 * h / 8.0;
        w[n - 4] += c;
        w[n - 3] += 3.0 * c;
        w[n - 2] += 3.0 * c;
        w[n - 1] += c;
    }
    w
}

/// ∫₀^π f(x) cos(jx) dx for j = 0..=j_max by panelwise Gauss–Legendre.
///
/// Panel count is chosen so the phase advance j·h stays ≤ π for the highest
/// requested frequency; at that phase the 8-point rule is exact to roundoff,
/// so the only error left is whatever `f` evaluation itself carries.
pub fn cosine_moments<F: Fn(f64) -> f64>(f: F, j_max: usize) -> Vec<f64> {
    let panels = j_max.max(64);
    let h = std::f64::consts::PI / panels as f64;
    // sample f once per quadrature node
    let mut nodes = Vec::with_capacity(panels * 8);
    for p in 0..panels {
        let a = p as f64 * h;
        for (t, w) in GL8_NODES.iter().zip(GL8_WEIGHTS.iter()) {
            let x = a + 0.5 * h * (t + 1.0);
            nodes.push((x, 0.5 * h * w * f(x)));
        }
    }
    (0..=j_max)
        .map(|j| {
            nodes
                .iter()
                .map(|&(x, wf)| wf * (j as f64 * x).cos())
                .sum()
        })
        .collect()
}
