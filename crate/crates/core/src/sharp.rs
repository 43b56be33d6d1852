//! The model gap `lambda[h_{K,N,D}]`, the class constant obtained by
//! minimizing it over the diameter, and diameter sweeps.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::sphere_eigenvalue;
use crate::error::{Error, Result};
use crate::geometry::{CurvatureParams, ModelDensity};
use crate::spectral::{gap_estimate, BoundaryConditions};

/// Diameters above this fraction of `D_{K,N}` are not sent to the solver.
pub const BLEND_START: f64 = 0.999;
/// Sweeps start at `D_max / SCAN_FLOOR`. Below it `D'^2 lambda` has settled to
/// its small-scale limit, so `lambda ~ c / D'^2` is far above the minimum.
pub const SCAN_FLOOR: f64 = 1024.0;
pub const COARSE_POINTS: usize = 64;
pub const DENSE_POINTS: usize = 512;
/// Relative width at which golden-section refinement stops.
pub const REFINE_WIDTH: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelRoute {
    Solver,
    /// Closed form at `D = D_{K,N}`.
    Sphere,
    /// Linear blend between the solver at `0.999 D_{K,N}` and the sphere value.
    Blend,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelPoincare {
    pub value: f64,
    pub error: f64,
    pub route: ModelRoute,
}

fn check_cells(n: usize) -> Result<()> {
    if n < 16 || !n.is_multiple_of(4) {
        return Err(Error::InvalidGrid(format!(
            "cell count must be a multiple of 4 and at least 16, got {n}"
        )));
    }
    Ok(())
}

fn solve_model(params: CurvatureParams, d: f64, n: usize) -> Result<ModelPoincare> {
    let h = ModelDensity::new(params, d)?.sample(n)?;
    let full = gap_estimate(&h, BoundaryConditions::NEUMANN_NEUMANN)?;
    let half = gap_estimate(
        &h.restrict(n / 2, n)?,
        BoundaryConditions::DIRICHLET_NEUMANN,
    )?;
    let slack = full.error_estimate + half.error_estimate + 1e-9 * full.eigenvalue;
    if (full.eigenvalue - half.eigenvalue).abs() > slack {
        return Err(Error::Inconsistent(format!(
            "full-interval gap {} and half-interval gap {} disagree",
            full.eigenvalue, half.eigenvalue
        )));
    }
    Ok(ModelPoincare {
        value: full.eigenvalue,
        error: full.error_estimate,
        route: ModelRoute::Solver,
    })
}

/// `lambda[h_{K,N,D}]` from `n` cells on `[0, D]` (Richardson against `n/2`).
pub fn model_poincare(params: CurvatureParams, d: f64, n: usize) -> Result<ModelPoincare> {
    params.check_diameter(d)?;
    check_cells(n)?;
    if params.k() <= 0.0 {
        return solve_model(params, d, n);
    }
    let dkn = params.diameter_bound();
    if params.is_maximal_diameter(d) {
        return Ok(ModelPoincare {
            value: sphere_eigenvalue(params)?,
            error: 0.0,
            route: ModelRoute::Sphere,
        });
    }
    let start = BLEND_START * dkn;
    if d <= start {
        return solve_model(params, d, n);
    }
    let base = solve_model(params, start, n)?;
    let sphere = sphere_eigenvalue(params)?;
    let t = ((d - start) / (dkn - start)).clamp(0.0, 1.0);
    Ok(ModelPoincare {
        value: (1.0 - t) * base.value + t * sphere,
        error: (1.0 - t) * base.error + t * (1.0 - t) * (sphere - base.value).abs(),
        route: ModelRoute::Blend,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    #[serde(rename = "D_prime")]
    pub d_prime: f64,
    pub lambda: f64,
    pub scaled: f64,
    pub error: f64,
}

fn geometric(d_max: f64, count: usize) -> Vec<f64> {
    let lo = d_max / SCAN_FLOOR;
    let step = SCAN_FLOOR.ln() / (count - 1) as f64;
    (0..count)
        .map(|i| {
            if i + 1 == count {
                d_max
            } else {
                lo * (step * i as f64).exp()
            }
        })
        .collect()
}

fn evaluate(params: CurvatureParams, ds: &[f64], n: usize) -> Result<Vec<ScanRow>> {
    ds.par_iter()
        .map(|&d| {
            let m = model_poincare(params, d, n)?;
            Ok(ScanRow {
                d_prime: d,
                lambda: m.value,
                scaled: d * d * m.value,
                error: m.error,
            })
        })
        .collect()
}

/// Monotonicity verdict for a column of values with per-row errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trend {
    Constant,
    StrictlyIncreasing,
    StrictlyDecreasing,
    NonDecreasing,
    NonIncreasing,
    NotMonotone,
}

impl fmt::Display for Trend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Trend::Constant => "constant",
            Trend::StrictlyIncreasing => "strictly increasing",
            Trend::StrictlyDecreasing => "strictly decreasing",
            Trend::NonDecreasing => "non-decreasing",
            Trend::NonIncreasing => "non-increasing",
            Trend::NotMonotone => "not monotone",
        })
    }
}

impl Trend {
    pub fn is_non_increasing(self) -> bool {
        matches!(
            self,
            Trend::Constant | Trend::StrictlyDecreasing | Trend::NonIncreasing
        )
    }

    pub fn is_non_decreasing(self) -> bool {
        matches!(
            self,
            Trend::Constant | Trend::StrictlyIncreasing | Trend::NonDecreasing
        )
    }
}

/// Classifies `values` in order. Steps smaller than the two rows' errors plus
/// `rel` times the larger value count as ties.
pub fn trend(values: &[f64], errors: &[f64], rel: f64) -> Trend {
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let worst = errors.iter().cloned().fold(0.0, f64::max);
    if hi - lo <= rel * hi.abs() + 2.0 * worst {
        return Trend::Constant;
    }
    let (mut up, mut down, mut strict_up, mut strict_down) = (true, true, true, true);
    for i in 0..values.len().saturating_sub(1) {
        let (a, b) = (values[i], values[i + 1]);
        let tol = errors[i] + errors[i + 1] + rel * a.abs().max(b.abs());
        let step = b - a;
        up &= step >= -tol;
        down &= step <= tol;
        strict_up &= step > tol;
        strict_down &= step < -tol;
    }
    match (strict_up, strict_down, up, down) {
        (true, ..) => Trend::StrictlyIncreasing,
        (_, true, ..) => Trend::StrictlyDecreasing,
        (_, _, true, _) => Trend::NonDecreasing,
        (_, _, _, true) => Trend::NonIncreasing,
        _ => Trend::NotMonotone,
    }
}

const LAMBDA_TIE: f64 = 1e-9;
const SCALED_TIE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanProfile {
    pub rows: Vec<ScanRow>,
    pub lambda_trend: Trend,
    pub scaled_trend: Trend,
    /// Whether the scaled column behaves as the sign of `K` predicts:
    /// non-increasing for `K < 0`, constant for `K = 0`, non-decreasing for `K > 0`.
    pub scaled_as_expected: bool,
}

impl ScanProfile {
    fn from_rows(params: CurvatureParams, rows: Vec<ScanRow>) -> Self {
        let errors: Vec<f64> = rows.iter().map(|r| r.error).collect();
        let scaled_errors: Vec<f64> = rows
            .iter()
            .map(|r| r.error * r.d_prime * r.d_prime)
            .collect();
        let lambda: Vec<f64> = rows.iter().map(|r| r.lambda).collect();
        let scaled: Vec<f64> = rows.iter().map(|r| r.scaled).collect();
        let lambda_trend = trend(&lambda, &errors, LAMBDA_TIE);
        let scaled_trend = trend(&scaled, &scaled_errors, SCALED_TIE);
        let k = params.k();
        let scaled_as_expected = if k < 0.0 {
            scaled_trend.is_non_increasing()
        } else if k == 0.0 {
            scaled_trend == Trend::Constant
        } else {
            scaled_trend.is_non_decreasing()
        };
        Self {
            rows,
            lambda_trend,
            scaled_trend,
            scaled_as_expected,
        }
    }
}

/// `count` geometrically spaced diameters in `[D_max/1024, D_max]`.
pub fn scan_profile(
    params: CurvatureParams,
    d_max: f64,
    count: usize,
    n: usize,
) -> Result<ScanProfile> {
    params.check_diameter(d_max)?;
    if count < 8 {
        return Err(Error::InvalidParams(format!(
            "scan needs at least 8 rows, got {count}"
        )));
    }
    check_cells(n)?;
    let rows = evaluate(params, &geometric(d_max, count), n)?;
    Ok(ScanProfile::from_rows(params, rows))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    #[serde(rename = "direct")]
    Direct,
    #[serde(rename = "grid+refine")]
    GridRefine,
    #[serde(rename = "dense-scan")]
    DenseScan,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Direct => "direct",
            Method::GridRefine => "grid+refine",
            Method::DenseScan => "dense-scan",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SharpOptions {
    pub n: usize,
    pub dense_scan: bool,
}

impl Default for SharpOptions {
    fn default() -> Self {
        Self {
            n: crate::spectral::DEFAULT_CELLS,
            dense_scan: false,
        }
    }
}

/// Minimizers found by the coarse and dense searches when they differ by more
/// than twice the refinement width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Disagreement {
    pub coarse_argmin: f64,
    pub dense_argmin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SharpConstantResult {
    pub params: CurvatureParams,
    /// Effective diameter `min(D, D_{K,N})`.
    pub d: f64,
    pub value: f64,
    pub error: f64,
    pub minimizing_d_prime: f64,
    pub method: Method,
    pub rows: Option<Vec<ScanRow>>,
    pub disagreement: Option<Disagreement>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SharpSummary {
    pub value: f64,
    pub argmin: f64,
    pub method: Method,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "N")]
    pub n: f64,
    #[serde(rename = "D")]
    pub d: f64,
}

impl SharpConstantResult {
    pub fn summary(&self) -> SharpSummary {
        SharpSummary {
            value: self.value,
            argmin: self.minimizing_d_prime,
            method: self.method,
            k: self.params.k(),
            n: self.params.n(),
            d: self.d,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Best {
    d: f64,
    value: f64,
    error: f64,
}

/// Golden-section search in `log D'` on `[lo, hi]`, seeded with the best grid
/// point. Returns the best point evaluated, grid seed included.
fn refine(params: CurvatureParams, lo: f64, hi: f64, seed: Best, n: usize) -> Result<Best> {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let f = |ld: f64| -> Result<Best> {
        let d = ld.exp();
        let m = model_poincare(params, d, n)?;
        Ok(Best {
            d,
            value: m.value,
            error: m.error,
        })
    };
    let mut best = seed;
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut c = b - INV_PHI * (b - a);
    let mut e = a + INV_PHI * (b - a);
    let (mut fc, mut fe) = (f(c)?, f(e)?);
    while b - a > REFINE_WIDTH {
        if fc.value <= fe.value {
            b = e;
            e = c;
            fe = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + INV_PHI * (b - a);
            fe = f(e)?;
        }
        for p in [fc, fe] {
            if p.value < best.value {
                best = p;
            }
        }
    }
    Ok(best)
}

fn grid_search(
    params: CurvatureParams,
    d_max: f64,
    count: usize,
    n: usize,
) -> Result<(Best, Vec<ScanRow>)> {
    let rows = evaluate(params, &geometric(d_max, count), n)?;
    let (i, r) = rows
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.lambda.total_cmp(&b.1.lambda))
        .expect("scan grid is non-empty");
    let seed = Best {
        d: r.d_prime,
        value: r.lambda,
        error: r.error,
    };
    let lo = rows[i.saturating_sub(1)].d_prime;
    let hi = rows[(i + 1).min(rows.len() - 1)].d_prime;
    Ok((refine(params, lo, hi, seed, n)?, rows))
}

/// The class constant: `lambda[h_{K,N,D}]` for `K <= 0`, and the infimum of
/// `lambda[h_{K,N,D'}]` over `D' in (0, min(D, D_{K,N})]` for `K > 0`.
pub fn sharp_poincare(
    params: CurvatureParams,
    d: f64,
    opts: SharpOptions,
) -> Result<SharpConstantResult> {
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::Domain(format!(
            "diameter must be positive and finite, got {d}"
        )));
    }
    check_cells(opts.n)?;
    if params.k() <= 0.0 {
        let m = model_poincare(params, d, opts.n)?;
        return Ok(SharpConstantResult {
            params,
            d,
            value: m.value,
            error: m.error,
            minimizing_d_prime: d,
            method: Method::Direct,
            rows: None,
            disagreement: None,
        });
    }
    let d_max = d.min(params.diameter_bound());
    let (coarse, coarse_rows) = grid_search(params, d_max, COARSE_POINTS, opts.n)?;
    let (best, rows, method, disagreement) = if opts.dense_scan {
        let (dense, dense_rows) = grid_search(params, d_max, DENSE_POINTS, opts.n)?;
        let gap = (dense.d - coarse.d).abs() / coarse.d;
        let disagreement = (gap > 2.0 * REFINE_WIDTH).then_some(Disagreement {
            coarse_argmin: coarse.d,
            dense_argmin: dense.d,
        });
        let best = if dense.value < coarse.value {
            dense
        } else {
            coarse
        };
        (best, dense_rows, Method::DenseScan, disagreement)
    } else {
        (coarse, coarse_rows, Method::GridRefine, None)
    };
    Ok(SharpConstantResult {
        params,
        d: d_max,
        value: best.value,
        error: best.error,
        minimizing_d_prime: best.d,
        method,
        rows: Some(rows),
        disagreement,
    })
}
