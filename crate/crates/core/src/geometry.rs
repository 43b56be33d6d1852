//! Comparison-geometry coefficients, the model densities `h_{K,N,D}`, and the
//! two-sided ratio test characterizing one-dimensional MCP(K,N) densities.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridDensity;

/// Relative slack when comparing a diameter against `D_{K,N}`.
const DIAMETER_SLACK: f64 = 1e-12;

/// Below this value of `|kappa| theta^2` the Taylor series is used.
const SERIES_CUTOFF: f64 = 1e-8;

/// Curvature lower bound `K` and dimension upper bound `N > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvatureParams {
    #[serde(rename = "K")]
    k: f64,
    #[serde(rename = "N")]
    n: f64,
}

impl CurvatureParams {
    pub fn new(k: f64, n: f64) -> Result<Self> {
        if !k.is_finite() {
            return Err(Error::InvalidParams(format!("K = {k} is not finite")));
        }
        if !(n.is_finite() && n > 1.0) {
            return Err(Error::InvalidParams(format!("N = {n} must satisfy N > 1")));
        }
        Ok(CurvatureParams { k, n })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    /// `K / (N - 1)`, the curvature of the comparison sine `s_kappa`.
    pub fn kappa(&self) -> f64 {
        self.k / (self.n - 1.0)
    }

    /// The comparison sine `s_{K/(N-1)}`, clamped to zero past `D_{K,N}`.
    pub fn s(&self, theta: f64) -> f64 {
        sk(self.kappa(), theta)
    }

    pub fn diameter_bound(&self) -> f64 {
        bonnet_myers_diameter(*self)
    }

    /// Checks `0 < d <= D_{K,N}` (up to rounding).
    pub fn check_diameter(&self, d: f64) -> Result<()> {
        let dkn = self.diameter_bound();
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::Domain(format!("diameter D = {d} must be positive")));
        }
        if d > dkn * (1.0 + DIAMETER_SLACK) {
            return Err(Error::Domain(format!(
                "diameter D = {d} exceeds the Bonnet-Myers bound {dkn}"
            )));
        }
        Ok(())
    }

    /// True when `d` equals `D_{K,N}` up to rounding.
    pub fn is_maximal_diameter(&self, d: f64) -> bool {
        let dkn = self.diameter_bound();
        dkn.is_finite() && (d - dkn).abs() <= dkn * DIAMETER_SLACK
    }
}

/// Unchecked `s_kappa`; returns 0 at and beyond the first zero when `kappa > 0`.
pub(crate) fn sk(kappa: f64, theta: f64) -> f64 {
    let x = kappa * theta * theta;
    if x.abs() < SERIES_CUTOFF {
        return theta * (1.0 - x / 6.0 + x * x / 120.0);
    }
    if kappa > 0.0 {
        let r = kappa.sqrt();
        if r * theta >= PI {
            return 0.0;
        }
        ((r * theta).sin() / r).max(0.0)
    } else {
        let r = (-kappa).sqrt();
        (r * theta).sinh() / r
    }
}

/// `s_kappa' / s_kappa` at `theta > 0`.
pub(crate) fn sk_log_derivative(kappa: f64, theta: f64) -> f64 {
    let x = kappa * theta * theta;
    if x.abs() < SERIES_CUTOFF {
        return (1.0 - x / 3.0 - x * x / 45.0) / theta;
    }
    if kappa > 0.0 {
        let r = kappa.sqrt();
        r / (r * theta).tan()
    } else {
        let r = (-kappa).sqrt();
        r / (r * theta).tanh()
    }
}

/// The comparison sine: `sin(sqrt(k) t)/sqrt(k)`, `t`, or `sinh(sqrt(-k) t)/sqrt(-k)`.
///
/// Near `kappa = 0` the Taylor series is used, so the three branches join
/// continuously.
pub fn s_kappa(kappa: f64, theta: f64) -> Result<f64> {
    if !(kappa.is_finite() && theta.is_finite() && theta >= 0.0) {
        return Err(Error::Domain(format!(
            "s_kappa needs finite kappa and theta >= 0, got ({kappa}, {theta})"
        )));
    }
    if kappa > 0.0 && theta >= PI / kappa.sqrt() {
        return Err(Error::Domain(format!(
            "theta = {theta} is outside [0, pi/sqrt(kappa)) for kappa = {kappa}"
        )));
    }
    Ok(sk(kappa, theta))
}

/// `D_{K,N} = pi / sqrt(K/(N-1))` for `K > 0`, infinite otherwise.
pub fn bonnet_myers_diameter(params: CurvatureParams) -> f64 {
    if params.k > 0.0 {
        PI / params.kappa().sqrt()
    } else {
        f64::INFINITY
    }
}

/// Distortion coefficient `sigma^{(t)}_{K,N-1}(theta)`; infinite once `theta >= D_{K,N}`.
pub fn sigma_coeff(t: f64, params: CurvatureParams, theta: f64) -> f64 {
    if theta >= params.diameter_bound() {
        return f64::INFINITY;
    }
    let kappa = params.kappa();
    sk(kappa, t * theta) / sk(kappa, theta)
}

/// `tau^{(t)}_{K,N}(theta) = t^{1/N} sigma^{(t)}_{K,N-1}(theta)^{1 - 1/N}`.
pub fn tau_coeff(t: f64, params: CurvatureParams, theta: f64) -> f64 {
    let n = params.n;
    t.powf(1.0 / n) * sigma_coeff(t, params, theta).powf((n - 1.0) / n)
}

/// The symmetric model density `h_{K,N,D}` on `[0, D]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelDensity {
    params: CurvatureParams,
    d: f64,
}

impl ModelDensity {
    pub fn new(params: CurvatureParams, d: f64) -> Result<Self> {
        params.check_diameter(d)?;
        Ok(ModelDensity { params, d })
    }

    pub fn params(&self) -> CurvatureParams {
        self.params
    }

    pub fn diameter(&self) -> f64 {
        self.d
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(0.0..=self.d).contains(&x) {
            return Err(Error::Domain(format!(
                "x = {x} outside the support [0, {}]",
                self.d
            )));
        }
        Ok(self.eval_unchecked(x))
    }

    /// Evaluates without range checks; both branches use the same formula at `D/2`.
    pub(crate) fn eval_unchecked(&self, x: f64) -> f64 {
        let t = if x <= 0.5 * self.d { self.d - x } else { x };
        self.params.s(t).powf(self.params.n - 1.0)
    }

    /// Samples on an `n`-cell grid of `[0, D]`, mirroring the left half so that
    /// the samples are exactly symmetric.
    pub fn sample(&self, n: usize) -> Result<GridDensity> {
        let dx = self.d / n as f64;
        let samples = (0..=n)
            .map(|i| {
                let j = i.max(n - i);
                let x = if j == n { self.d } else { j as f64 * dx };
                self.params.s(x).powf(self.params.n - 1.0)
            })
            .collect();
        GridDensity::new(0.0, self.d, samples)
    }
}

/// Evaluates `h_{K,N,D}(x)`.
pub fn model_density(params: CurvatureParams, d: f64, x: f64) -> Result<f64> {
    ModelDensity::new(params, d)?.eval(x)
}

/// Pointwise bounds on `(log h)'` valid for every MCP(K,N) density on `[0, D]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopePair {
    pub lower: f64,
    pub upper: f64,
}

/// `upper = (N-1) (s'/s)(x)`, `lower = -(N-1) (s'/s)(D - x)` with `s = s_{K/(N-1)}`.
pub fn log_derivative_envelope(params: CurvatureParams, d: f64, x: f64) -> Result<EnvelopePair> {
    params.check_diameter(d)?;
    if !(x > 0.0 && x < d) {
        return Err(Error::Domain(format!(
            "x = {x} outside the open interval (0, {d})"
        )));
    }
    let kappa = params.kappa();
    let m = params.n - 1.0;
    Ok(EnvelopePair {
        lower: -m * sk_log_derivative(kappa, d - x),
        upper: m * sk_log_derivative(kappa, x),
    })
}

/// Outcome of [`validate_mcp_density`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub pass: bool,
    /// Largest factor by which a ratio bound is exceeded; values `<= 1` mean no violation.
    pub worst_ratio: f64,
    /// Grid locations `(x0, x1)` of the worst pair, relative to the left endpoint.
    pub location: (f64, f64),
    pub diameter_ok: bool,
    pub pairs_checked: usize,
}

/// Full pairwise scans are used up to this many cells.
const FULL_SCAN_CELLS: usize = 256;
const STRATA: usize = 256;
/// Multiplicative slack on the ratio bounds.
pub const VALIDATION_SLACK: f64 = 1e-9;

/// Checks the two-sided ratio condition
/// `(s(D-x1)/s(D-x0))^{N-1} <= h(x1)/h(x0) <= (s(x1)/s(x0))^{N-1}` on grid pairs.
///
/// Grids with more than 256 cells are checked on all adjacent pairs plus a
/// stratified sample of 256 x 256 pairs drawn with a fixed seed.
pub fn validate_mcp_density(h: &GridDensity, params: CurvatureParams) -> Result<ValidationReport> {
    let n = h.cells();
    let samples = h.samples();
    if let Some(i) = (1..n).find(|&i| samples[i] <= 0.0) {
        return Err(Error::InvalidGrid(format!(
            "density vanishes at interior node {i} (x = {})",
            h.x(i)
        )));
    }
    let d = h.len();
    let dkn = params.diameter_bound();
    let diameter_ok = d <= dkn * (1.0 + DIAMETER_SLACK);
    let kappa = params.kappa();
    let m = params.n - 1.0;
    let dx = h.dx();
    let pos = |i: usize| if i == n { d } else { i as f64 * dx };
    let log_s: Vec<f64> = (0..=n).map(|i| sk(kappa, pos(i)).ln()).collect();
    let log_s_rev: Vec<f64> = (0..=n).map(|i| sk(kappa, d - pos(i)).ln()).collect();
    let log_h: Vec<f64> = samples.iter().map(|v| v.ln()).collect();

    let mut worst = f64::NEG_INFINITY;
    let mut worst_pair = (0, 0);
    let mut checked = 0usize;
    let mut check = |i: usize, j: usize| {
        if i >= j || samples[i] == 0.0 || samples[j] == 0.0 {
            return;
        }
        checked += 1;
        let log_ratio = log_h[j] - log_h[i];
        let lower = m * (log_s_rev[j] - log_s_rev[i]);
        let upper = m * (log_s[j] - log_s[i]);
        // NaN bounds come from 0/0 limits and never count as violations.
        for v in [lower - log_ratio, log_ratio - upper] {
            if v > worst {
                worst = v;
                worst_pair = (i, j);
            }
        }
    };
    if n <= FULL_SCAN_CELLS {
        for i in 0..=n {
            for j in i + 1..=n {
                check(i, j);
            }
        }
    } else {
        for i in 0..n {
            check(i, i + 1);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x6d63_7076);
        let bounds = |p: usize| (p * (n + 1) / STRATA, (p + 1) * (n + 1) / STRATA);
        for p in 0..STRATA {
            for q in 0..STRATA {
                let (p0, p1) = bounds(p);
                let (q0, q1) = bounds(q);
                let i = rng.random_range(p0..p1);
                let j = rng.random_range(q0..q1);
                check(i.min(j), i.max(j));
            }
        }
    }
    let worst_ratio = if worst == f64::NEG_INFINITY {
        0.0
    } else {
        worst.exp()
    };
    Ok(ValidationReport {
        pass: diameter_ok && worst_ratio <= 1.0 + VALIDATION_SLACK,
        worst_ratio,
        location: (pos(worst_pair.0), pos(worst_pair.1)),
        diameter_ok,
        pairs_checked: checked,
    })
}

/// Builds an MCP(K,N) density on an `n`-cell grid of `[0, D]` whose log-derivative
/// is the convex combination `theta * upper + (1 - theta) * lower` of the envelope.
///
/// Each cell increment of `log h` is the mixture of the exact cell integrals of
/// the two envelope branches, taken with `theta` at the cell midpoint, so every
/// grid pair satisfies the ratio condition up to rounding. Increments are capped
/// at `4n/D` times the cell width to tame the endpoint singularities.
pub fn mcp_density_from_mixing(
    params: CurvatureParams,
    d: f64,
    n: usize,
    theta: impl Fn(f64) -> f64,
) -> Result<GridDensity> {
    params.check_diameter(d)?;
    if n < 2 {
        return Err(Error::InvalidGrid(format!(
            "need at least 2 cells, got {n}"
        )));
    }
    if params.is_maximal_diameter(d) {
        // At D = D_{K,N} the only admissible densities are multiples of s^{N-1}.
        let m = params.n - 1.0;
        return GridDensity::from_fn(0.0, d, n, |x| params.s(x).powf(m));
    }
    let kappa = params.kappa();
    let m = params.n - 1.0;
    let dx = d / n as f64;
    let pos = |i: usize| if i == n { d } else { i as f64 * dx };
    let cap = 4.0;
    let mut increments = Vec::with_capacity(n);
    for i in 0..n {
        let (x0, x1) = (pos(i), pos(i + 1));
        let th = theta(0.5 * (x0 + x1));
        if !(0.0..=1.0).contains(&th) {
            return Err(Error::Domain(format!(
                "mixing field {th} at x = {} is outside [0, 1]",
                0.5 * (x0 + x1)
            )));
        }
        let upper = m * (sk(kappa, x1).ln() - sk(kappa, x0).ln());
        let lower = m * (sk(kappa, d - x1).ln() - sk(kappa, d - x0).ln());
        let mut inc = 0.0;
        if th > 0.0 {
            inc += th * upper;
        }
        if th < 1.0 {
            inc += (1.0 - th) * lower;
        }
        increments.push(inc.clamp(-cap, cap).clamp(lower, upper));
    }
    let mid = n / 2;
    let mut log_h = vec![0.0; n + 1];
    for i in mid..n {
        log_h[i + 1] = log_h[i] + increments[i];
    }
    for i in (0..mid).rev() {
        log_h[i] = log_h[i + 1] - increments[i];
    }
    GridDensity::new(0.0, d, log_h.into_iter().map(f64::exp).collect())
}

/// A smooth random field on `[0, D]` with values in `(0, 1)`: a low-order
/// trigonometric series passed through the logistic function.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingField {
    d: f64,
    offset: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

const MIXING_MODES: usize = 4;
const MIXING_SCALE: f64 = 2.0;

impl MixingField {
    pub fn random(d: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, MIXING_SCALE).expect("positive scale");
        let offset = normal.sample(&mut rng);
        let mut draw = |k: usize| normal.sample(&mut rng) / k as f64;
        let (cos, sin) = (1..=MIXING_MODES).map(|k| (draw(k), draw(k))).unzip();
        MixingField {
            d,
            offset,
            cos,
            sin,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let w = PI * x / self.d;
        let g = self.offset
            + self
                .cos
                .iter()
                .zip(&self.sin)
                .enumerate()
                .map(|(k, (c, s))| {
                    let a = (k + 1) as f64 * w;
                    c * a.cos() + s * a.sin()
                })
                .sum::<f64>();
        1.0 / (1.0 + (-g).exp())
    }
}

/// Random MCP(K,N) density on `[0, D]`, deterministic in `seed`.
pub fn random_mcp_density(
    params: CurvatureParams,
    d: f64,
    seed: u64,
    n: usize,
) -> Result<GridDensity> {
    if n < 64 {
        return Err(Error::InvalidGrid(format!(
            "random densities need n >= 64, got {n}"
        )));
    }
    let field = MixingField::random(d, seed);
    mcp_density_from_mixing(params, d, n, |x| field.eval(x))
}
