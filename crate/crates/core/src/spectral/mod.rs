//! First eigenvalues of the weighted operator `-(h u')' = lambda h u` on an
//! interval, discretized in self-adjoint flux form on a uniform grid.
//!
//! The flux coefficient on each cell is the mean of its two end samples; node
//! masses are trapezoid weights. Neumann ends keep their node (ghost reflection
//! halves the boundary mass), Dirichlet ends are eliminated. The stiffness
//! matrix factors as `G^T G` with `G` a weighted difference operator, so the
//! eigenvalues of the pencil are the squared singular values of
//! `G M^{-1/2}`, computed by Sturm bisection on the Golub-Kahan chain.

mod tridiag;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{mcp_density_from_mixing, CurvatureParams, ModelDensity};
use crate::grid::GridDensity;

use tridiag::{smallest_positive, TridiagLu};

/// Samples below this fraction of the maximum are raised to it.
pub const WEIGHT_FLOOR: f64 = 1e-13;

/// Inverse-iteration sweeps for the eigenfunction.
const INVERSE_ITERATIONS: usize = 3;

/// Default number of cells of the coarse member of the Richardson pair.
pub const DEFAULT_CELLS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Boundary {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BoundaryConditions {
    pub left: Boundary,
    pub right: Boundary,
}

impl BoundaryConditions {
    pub const NEUMANN_NEUMANN: Self = Self::new(Boundary::Neumann, Boundary::Neumann);
    pub const DIRICHLET_NEUMANN: Self = Self::new(Boundary::Dirichlet, Boundary::Neumann);
    pub const NEUMANN_DIRICHLET: Self = Self::new(Boundary::Neumann, Boundary::Dirichlet);
    pub const DIRICHLET_DIRICHLET: Self = Self::new(Boundary::Dirichlet, Boundary::Dirichlet);

    pub const fn new(left: Boundary, right: Boundary) -> Self {
        BoundaryConditions { left, right }
    }

    pub fn is_neumann_neumann(&self) -> bool {
        self.left == Boundary::Neumann && self.right == Boundary::Neumann
    }
}

/// Richardson-extrapolated eigenvalue from the grid pair `(n, 2n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapEstimate {
    pub eigenvalue: f64,
    /// `|lambda_2n - lambda_n| / 3`.
    pub error_estimate: f64,
    /// Cells of the fine grid.
    pub n: usize,
    pub floored_nodes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResult {
    pub eigenvalue: f64,
    pub error_estimate: f64,
    /// Fine-grid samples with unit weighted L2 norm, oriented to increase
    /// from left to right. Dirichlet ends hold exact zeros.
    pub eigenfunction: Vec<f64>,
    pub zero_location: Option<f64>,
    pub n: usize,
    pub bc: BoundaryConditions,
    pub interval: (f64, f64),
    pub floored_nodes: usize,
}

/// Wire form of a [`SpectralResult`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralSummary {
    pub lambda: f64,
    pub error: f64,
    pub zero: Option<f64>,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigenfunction: Option<Vec<f64>>,
}

impl SpectralResult {
    pub fn summary(&self, with_eigenfunction: bool) -> SpectralSummary {
        SpectralSummary {
            lambda: self.eigenvalue,
            error: self.error_estimate,
            zero: self.zero_location,
            n: self.n,
            eigenfunction: with_eigenfunction.then(|| self.eigenfunction.clone()),
        }
    }

    pub fn estimate(&self) -> GapEstimate {
        GapEstimate {
            eigenvalue: self.eigenvalue,
            error_estimate: self.error_estimate,
            n: self.n,
            floored_nodes: self.floored_nodes,
        }
    }
}

/// Flux coefficients and masses of the discrete pencil.
struct Pencil {
    /// `h_{j+1/2} / dx` on each cell.
    flux: Vec<f64>,
    /// Trapezoid node masses.
    mass: Vec<f64>,
    first: usize,
    last: usize,
    floored: usize,
}

impl Pencil {
    fn assemble(h: &GridDensity, bc: BoundaryConditions) -> Result<Self> {
        let n = h.cells();
        let dx = h.dx();
        let hmax = h.max();
        let floor = WEIGHT_FLOOR * hmax;
        if !(floor > 0.0 && floor.is_finite()) {
            return Err(Error::DegenerateWeight(format!(
                "maximum sample {hmax} gives no usable floor"
            )));
        }
        let mut floored = 0;
        let w: Vec<f64> = h
            .samples()
            .iter()
            .map(|&v| {
                if v < floor {
                    floored += 1;
                    floor
                } else {
                    v
                }
            })
            .collect();
        let flux: Vec<f64> = w.windows(2).map(|p| 0.5 * (p[0] + p[1]) / dx).collect();
        let mut mass: Vec<f64> = w.iter().map(|v| v * dx).collect();
        mass[0] *= 0.5;
        mass[n] *= 0.5;
        let first = usize::from(bc.left == Boundary::Dirichlet);
        let last = if bc.right == Boundary::Dirichlet {
            n - 1
        } else {
            n
        };
        if last < first {
            return Err(Error::InvalidGrid(
                "no unknowns left after elimination".into(),
            ));
        }
        if flux
            .iter()
            .chain(&mass)
            .any(|v| !(v.is_finite() && *v > 0.0))
        {
            return Err(Error::DegenerateWeight(
                "non-finite or vanishing coefficient after flooring".into(),
            ));
        }
        Ok(Pencil {
            flux,
            mass,
            first,
            last,
            floored,
        })
    }

    fn cells(&self) -> usize {
        self.flux.len()
    }

    /// Squared off-diagonals of the Golub-Kahan chain node - cell - node - ...
    fn chain(&self) -> Vec<f64> {
        let n = self.cells();
        let mut e2 = Vec::with_capacity(2 * n + 1);
        let mut node = (self.first == 0).then_some(0);
        for j in 0..n {
            if let Some(i) = node {
                e2.push(self.flux[j] / self.mass[i]);
            }
            node = (j < self.last).then_some(j + 1);
            if let Some(i) = node {
                e2.push(self.flux[j] / self.mass[i]);
            }
        }
        e2
    }

    fn eigenvalue(&self) -> Result<f64> {
        let sigma = smallest_positive(&self.chain())?;
        Ok(sigma * sigma)
    }

    /// Inverse iteration on `M^{-1/2} A M^{-1/2}` shifted by `lambda`.
    fn eigenvector(&self, lambda: f64) -> Vec<f64> {
        let n = self.cells();
        let (first, last) = (self.first, self.last);
        let size = last - first + 1;
        let mut d = Vec::with_capacity(size);
        let mut off = Vec::with_capacity(size.saturating_sub(1));
        for i in first..=last {
            let left = if i > 0 { self.flux[i - 1] } else { 0.0 };
            let right = if i < n { self.flux[i] } else { 0.0 };
            d.push((left + right) / self.mass[i] - lambda);
            if i < last {
                off.push(-self.flux[i] / (self.mass[i] * self.mass[i + 1]).sqrt());
            }
        }
        let lu = TridiagLu::factor(off.clone(), d, off);
        let mid = 0.5 * (first + last) as f64;
        let mut y: Vec<f64> = (first..=last)
            .map(|i| (i as f64 - mid) / size as f64 + 1e-3)
            .collect();
        for _ in 0..INVERSE_ITERATIONS {
            lu.solve(&mut y);
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            y.iter_mut().for_each(|v| *v /= norm);
        }
        let mut u = vec![0.0; n + 1];
        for (k, i) in (first..=last).enumerate() {
            u[i] = y[k] / self.mass[i].sqrt();
        }
        let weighted_norm = u
            .iter()
            .zip(&self.mass)
            .map(|(v, m)| m * v * v)
            .sum::<f64>()
            .sqrt();
        let trend: f64 = u
            .iter()
            .zip(&self.mass)
            .enumerate()
            .map(|(i, (v, m))| (i as f64 - 0.5 * n as f64) * v * m)
            .sum();
        let scale = trend.signum() / weighted_norm;
        u.iter_mut().for_each(|v| *v *= scale);
        u
    }
}

/// First eigenvalue (first nonzero one for Neumann-Neumann) on the grid of `h`
/// alone, without extrapolation.
pub fn discrete_eigenvalue(h: &GridDensity, bc: BoundaryConditions) -> Result<f64> {
    Pencil::assemble(h, bc)?.eigenvalue()
}

/// Richardson-extrapolated eigenvalue using `h` as the fine grid and every
/// second node of `h` as the coarse grid.
pub fn gap_estimate(h: &GridDensity, bc: BoundaryConditions) -> Result<GapEstimate> {
    let coarse = h.coarsen()?;
    let fine = Pencil::assemble(h, bc)?;
    let lambda_fine = fine.eigenvalue()?;
    let lambda_coarse = Pencil::assemble(&coarse, bc)?.eigenvalue()?;
    Ok(GapEstimate {
        eigenvalue: (4.0 * lambda_fine - lambda_coarse) / 3.0,
        error_estimate: (lambda_fine - lambda_coarse).abs() / 3.0,
        n: h.cells(),
        floored_nodes: fine.floored,
    })
}

/// Samples `f` on `[a, b]` with `2n` cells and returns the `(n, 2n)` estimate.
pub fn gap_estimate_fn(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    n: usize,
    bc: BoundaryConditions,
) -> Result<GapEstimate> {
    gap_estimate(&GridDensity::from_fn(a, b, 2 * n, f)?, bc)
}

/// Eigenvalue with error estimate, eigenfunction and (Neumann-Neumann) zero.
pub fn spectral_gap(h: &GridDensity, bc: BoundaryConditions) -> Result<SpectralResult> {
    let est = gap_estimate(h, bc)?;
    let pencil = Pencil::assemble(h, bc)?;
    let lambda_fine = pencil.eigenvalue()?;
    let eigenfunction = pencil.eigenvector(lambda_fine);
    let mut result = SpectralResult {
        eigenvalue: est.eigenvalue,
        error_estimate: est.error_estimate,
        eigenfunction,
        zero_location: None,
        n: est.n,
        bc,
        interval: (h.a(), h.b()),
        floored_nodes: est.floored_nodes,
    };
    if bc.is_neumann_neumann() {
        result.zero_location = Some(eigenfunction_zero(&result)?);
    }
    Ok(result)
}

/// [`spectral_gap`] on `f` sampled with `2n` cells.
pub fn spectral_gap_fn(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    n: usize,
    bc: BoundaryConditions,
) -> Result<SpectralResult> {
    spectral_gap(&GridDensity::from_fn(a, b, 2 * n, f)?, bc)
}

/// Discrete Rayleigh quotient `int |f'|^2 h / int |f - mean|^2 h`.
///
/// Derivatives are cell-centered differences weighted by the mean of the two
/// end samples and the denominator uses trapezoid weights, which is the same
/// quadratic form the solver minimizes.
pub fn rayleigh_quotient(h: &GridDensity, f: &[f64]) -> Result<f64> {
    if f.len() != h.samples().len() {
        return Err(Error::InvalidGrid(format!(
            "function has {} samples, grid has {}",
            f.len(),
            h.samples().len()
        )));
    }
    let dx = h.dx();
    let w = h.samples();
    let n = h.cells();
    let mass = |i: usize| {
        if i == 0 || i == n {
            0.5 * w[i] * dx
        } else {
            w[i] * dx
        }
    };
    let total: f64 = (0..=n).map(mass).sum();
    let mean = (0..=n).map(|i| mass(i) * f[i]).sum::<f64>() / total;
    let denom: f64 = (0..=n).map(|i| mass(i) * (f[i] - mean).powi(2)).sum();
    let numer: f64 = (0..n)
        .map(|j| 0.5 * (w[j] + w[j + 1]) * (f[j + 1] - f[j]).powi(2) / dx)
        .sum();
    let scale = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if denom.is_nan() || denom <= 1e-24 * scale * scale * total {
        return Err(Error::Domain(
            "function is constant in the weighted mean; Rayleigh quotient undefined".into(),
        ));
    }
    Ok(numer / denom)
}

/// Location of the unique sign change of a Neumann-Neumann eigenfunction, by
/// linear interpolation between the bracketing samples.
pub fn eigenfunction_zero(result: &SpectralResult) -> Result<f64> {
    if !result.bc.is_neumann_neumann() {
        return Err(Error::Domain(
            "zero location is defined for Neumann-Neumann results only".into(),
        ));
    }
    let u = &result.eigenfunction;
    let (a, b) = result.interval;
    let dx = (b - a) / (u.len() - 1) as f64;
    let mut changes = Vec::new();
    let mut last: Option<usize> = None;
    for (i, &v) in u.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        if let Some(j) = last {
            if (u[j] < 0.0) != (v < 0.0) {
                changes.push((j, i));
            }
        }
        last = Some(i);
    }
    if changes.len() != 1 {
        return Err(Error::SignChanges(changes.len()));
    }
    let (j, i) = changes[0];
    let t = u[j] / (u[j] - u[i]);
    Ok(a + (j as f64 + t * (i - j) as f64) * dx)
}

/// `(max h2/h1) * (max h1/h2)` over the grid nodes.
pub fn osc(h1: &GridDensity, h2: &GridDensity) -> Result<f64> {
    if !h1.same_grid(h2) {
        return Err(Error::InvalidGrid(
            "densities live on different grids".into(),
        ));
    }
    if h1.samples().iter().chain(h2.samples()).any(|v| *v <= 0.0) {
        return Err(Error::InvalidGrid(
            "osc needs strictly positive densities".into(),
        ));
    }
    let (up, down) = h1
        .samples()
        .iter()
        .zip(h2.samples())
        .fold((0.0f64, 0.0f64), |(u, d), (a, b)| {
            (u.max(b / a), d.max(a / b))
        });
    Ok(up * down)
}

/// Outcome of [`check_ode_comparison`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub lambda_model: f64,
    pub error_model: f64,
    pub lambda_perturbed: f64,
    pub error_perturbed: f64,
    pub holds: bool,
}

/// Compares the Neumann gap of `h_{K,N,D}` with that of the density whose
/// log-derivative mixes the envelope branches by `theta`.
///
/// Every `theta` with values in `[0, 1]` keeps the perturbed log-derivative above
/// the model's on the left half and below it on the right half; other values
/// are rejected.
pub fn check_ode_comparison(
    params: CurvatureParams,
    d: f64,
    theta: impl Fn(f64) -> f64,
    n: usize,
) -> Result<ComparisonReport> {
    params.check_diameter(d)?;
    if params.is_maximal_diameter(d) {
        return Err(Error::Domain(format!(
            "comparison needs D < D_(K,N) = {}",
            params.diameter_bound()
        )));
    }
    let perturbed = mcp_density_from_mixing(params, d, 2 * n, theta)?;
    let model = ModelDensity::new(params, d)?.sample(2 * n)?;
    let bc = BoundaryConditions::NEUMANN_NEUMANN;
    let m = gap_estimate(&model, bc)?;
    let p = gap_estimate(&perturbed, bc)?;
    Ok(ComparisonReport {
        lambda_model: m.eigenvalue,
        error_model: m.error_estimate,
        lambda_perturbed: p.eigenvalue,
        error_perturbed: p.error_estimate,
        holds: p.eigenvalue >= m.eigenvalue - (m.error_estimate + p.error_estimate),
    })
}

#[cfg(test)]
mod tests;
