//! Two-sided estimates for the model gap: Muckenhoupt's Hardy-type criterion,
//! closed-form brackets in each curvature regime, and the older constants it
//! is compared with.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{sigma_coeff, CurvatureParams};
use crate::grid::GridDensity;

/// Left integrals past this size are treated as divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

const REFINE: usize = 8;

/// Which formula produced a [`BoundsPair`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// `(1/(4A), 1/A)` from the Hardy constant `A`.
    Muckenhoupt,
    /// The flat bracket `[N^2 2^{-(N-1)}/4, pi^2 N^2 2^{-(N-1)}]`.
    Flat,
    /// Negative curvature: the sigma lower bound, with the flat upper bound
    /// carried over by the oscillation of the two model densities.
    NegativeOscTransport,
    /// Positive curvature: flat bracket with the sine-ratio factor on top,
    /// capped by the sphere value.
    PositiveComparison,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundsPair {
    pub lower: f64,
    pub upper: f64,
    pub provenance: Provenance,
}

impl BoundsPair {
    pub fn contains(&self, value: f64, slack: f64) -> bool {
        value >= self.lower - slack && value <= self.upper + slack
    }

    fn scaled(self, c: f64) -> Self {
        Self {
            lower: self.lower * c,
            upper: self.upper * c,
            ..self
        }
    }
}

/// `int_{a}^{x_i} 1/h` at every node; the first entry is zero. When `h(a) = 0`
/// the first cell is integrated against a fitted power law `h ~ t^p`, which
/// diverges for `p >= 1`.
fn left_integrals(h: &[f64], dx: f64) -> Result<Vec<f64>> {
    if h[1..].iter().any(|&v| v <= 0.0) {
        return Err(Error::InvalidGrid(
            "density must be positive away from the left end".into(),
        ));
    }
    let mut out = vec![0.0; h.len()];
    out[1] = if h[0] > 0.0 {
        0.5 * dx * (1.0 / h[0] + 1.0 / h[1])
    } else if h.len() > 2 {
        let p = (h[2] / h[1]).log2();
        if p >= 1.0 {
            f64::INFINITY
        } else {
            dx / (h[1] * (1.0 - p))
        }
    } else {
        f64::INFINITY
    };
    for i in 2..h.len() {
        out[i] = out[i - 1] + 0.5 * dx * (1.0 / h[i - 1] + 1.0 / h[i]);
    }
    Ok(out)
}

fn right_integrals(h: &[f64], dx: f64) -> Vec<f64> {
    let n = h.len();
    let mut out = vec![0.0; n];
    for i in (0..n - 1).rev() {
        out[i] = out[i + 1] + 0.5 * dx * (h[i] + h[i + 1]);
    }
    out
}

/// Hardy constant `A = sup_x int_a^x 1/h * int_x^b h` of a density sampled on
/// `[a, b]`. Returns `+inf` when the left integral blows up.
pub fn muckenhoupt_a(h: &GridDensity) -> Result<f64> {
    let s = h.samples();
    let dx = h.dx();
    let left = left_integrals(s, dx)?;
    if left
        .iter()
        .any(|v| !v.is_finite() || *v > DIVERGENCE_THRESHOLD)
    {
        return Ok(f64::INFINITY);
    }
    let right = right_integrals(s, dx);
    let (best, mut a) = left
        .iter()
        .zip(&right)
        .map(|(l, r)| l * r)
        .enumerate()
        .fold(
            (0, f64::NEG_INFINITY),
            |m, (i, v)| if v > m.1 { (i, v) } else { m },
        );

    // Sub-cell pass on the two cells around the best node, with h linear in
    // each cell and exact integrals of that interpolant.
    let n = s.len() - 1;
    for cell in best.saturating_sub(1)..best.min(n - 1) + 1 {
        let (h0, h1) = (s[cell], s[cell + 1]);
        if h0 <= 0.0 {
            continue;
        }
        for j in 1..REFINE {
            let t = j as f64 / REFINE as f64;
            let ht = h0 + t * (h1 - h0);
            let inv = if (h1 - h0).abs() <= 1e-12 * h0 {
                t * dx / h0
            } else {
                t * dx * (ht / h0).ln() / (ht - h0)
            };
            let l = left[cell] + inv;
            let r = right[cell + 1] + 0.5 * (1.0 - t) * dx * (ht + h1);
            a = a.max(l * r);
        }
    }
    Ok(a)
}

/// `(1/(4A), 1/A)`, a bracket for the Dirichlet-left, Neumann-right gap.
pub fn muckenhoupt_bounds(h: &GridDensity) -> Result<BoundsPair> {
    let a = muckenhoupt_a(h)?;
    if !a.is_finite() {
        return Err(Error::Divergent("left integral of 1/h diverges".into()));
    }
    Ok(BoundsPair {
        lower: 0.25 / a,
        upper: 1.0 / a,
        provenance: Provenance::Muckenhoupt,
    })
}

fn flat(n: f64) -> BoundsPair {
    let c = n * n * 2f64.powf(-(n - 1.0));
    BoundsPair {
        lower: 0.25 * c,
        upper: PI * PI * c,
        provenance: Provenance::Flat,
    }
}

/// Bracket for the scale-free quantity `D^2 lambda[h_{K,N,D}]`.
pub fn closed_form_bounds(params: CurvatureParams, d: f64) -> Result<BoundsPair> {
    params.check_diameter(d)?;
    let (k, n) = (params.k(), params.n());
    let base = flat(n);
    if k == 0.0 {
        return Ok(base);
    }
    if k < 0.0 {
        let sigma = sigma_coeff(0.5, params, d).powf(n - 1.0);
        let lower = 0.25 * d * d * (-k * (n - 1.0)).max(n * n / (d * d)) * sigma;
        // osc(h_{0,N,D}, h_{K,N,D}) on the right half is (2 sigma)^{-(N-1)}.
        let upper = base.upper / (2.0 * sigma_coeff(0.5, params, d)).powf(n - 1.0);
        return Ok(BoundsPair {
            lower,
            upper,
            provenance: Provenance::NegativeOscTransport,
        });
    }
    // D^2 lambda is non-decreasing in D for K > 0, so the sphere caps it.
    let sphere = PI * PI * n;
    let upper = if params.is_maximal_diameter(d) {
        sphere
    } else {
        let w = params.kappa().sqrt() * d;
        let ratio = 2.0 * (0.5 * w).sin() / w.sin();
        (base.upper * ratio.powf(n - 1.0)).min(sphere)
    };
    Ok(BoundsPair {
        lower: base.lower,
        upper,
        provenance: Provenance::PositiveComparison,
    })
}

/// [`closed_form_bounds`] divided by `D^2`, a bracket for `lambda` itself.
pub fn model_gap_bounds(params: CurvatureParams, d: f64) -> Result<BoundsPair> {
    Ok(closed_form_bounds(params, d)?.scaled(1.0 / (d * d)))
}

/// `N K / (N - 1)`: the gap of `sin(sqrt(K/(N-1)) t)^{N-1}` on `[0, D_{K,N}]`,
/// with eigenfunction `cos(sqrt(K/(N-1)) t)`.
pub fn sphere_eigenvalue(params: CurvatureParams) -> Result<f64> {
    if params.k() <= 0.0 {
        return Err(Error::Domain(format!(
            "sphere value needs K > 0, got {}",
            params.k()
        )));
    }
    Ok(params.n() * params.k() / (params.n() - 1.0))
}

/// Explicit lower bound on the class constant for diameter `D`.
pub fn intro_lower_bound(params: CurvatureParams, d: f64) -> f64 {
    let (k, n) = (params.k(), params.n());
    let flat = n * n / (d * d);
    if k >= 0.0 {
        return 0.25 * flat * 2f64.powf(-(n - 1.0));
    }
    let w = (-params.kappa()).sqrt();
    let ratio = (0.5 * w * d).sinh() / (w * d).sinh();
    0.25 * (-k * (n - 1.0)).max(flat) * ratio.powf(n - 1.0)
}

/// Local L2 constant on balls of radius `r` from the older averaging argument.
pub fn sturm_constant(params: CurvatureParams, r: f64) -> f64 {
    let n = params.n();
    let base = (2.0 + n) / (n * 2f64.powf(n)) / (4.0 * r * r);
    if params.k() >= 0.0 {
        return base;
    }
    let two_r = 2.0 * r;
    base * (two_r / params.s(two_r)).powf(n - 1.0)
}

/// L1 constant on balls of radius `r`.
pub fn von_renesse_constant(params: CurvatureParams, r: f64) -> f64 {
    let n = params.n();
    let factor = if params.k() >= 0.0 {
        2f64.powf(-(n - 1.0))
    } else {
        sigma_coeff(0.5, params, 2.0 * r).powf(n - 1.0)
    };
    0.25 / r * factor
}
