//! Uniformly sampled densities on a compact interval.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A nonnegative density sampled at the `n + 1` nodes `a + i (b - a) / n`.
///
/// Serialized as `{"a": .., "b": .., "n": .., "samples": [..]}`; deserialization
/// runs the same checks as [`GridDensity::new`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct GridDensity {
    a: f64,
    b: f64,
    samples: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawGrid {
    a: f64,
    b: f64,
    n: usize,
    samples: Vec<f64>,
}

impl TryFrom<RawGrid> for GridDensity {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        if raw.samples.len() != raw.n + 1 {
            return Err(Error::InvalidGrid(format!(
                "n = {} requires {} samples, got {}",
                raw.n,
                raw.n + 1,
                raw.samples.len()
            )));
        }
        GridDensity::new(raw.a, raw.b, raw.samples)
    }
}

impl From<GridDensity> for RawGrid {
    fn from(g: GridDensity) -> Self {
        RawGrid {
            a: g.a,
            b: g.b,
            n: g.cells(),
            samples: g.samples,
        }
    }
}

impl GridDensity {
    pub fn new(a: f64, b: f64, samples: Vec<f64>) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::InvalidGrid(format!("interval [{a}, {b}] is empty")));
        }
        if samples.len() < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 cells, got {}",
                samples.len().saturating_sub(1)
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidGrid(format!(
                "sample {i} = {} is negative or not finite",
                samples[i]
            )));
        }
        if !samples.iter().any(|v| *v > 0.0) {
            return Err(Error::InvalidGrid("all samples are zero".into()));
        }
        Ok(GridDensity { a, b, samples })
    }

    /// Samples `f` at the nodes of an `n`-cell grid on `[a, b]`.
    pub fn from_fn(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let dx = (b - a) / n as f64;
        let samples = (0..=n)
            .map(|i| {
                let x = if i == n { b } else { a + i as f64 * dx };
                f(x)
            })
            .collect();
        Self::new(a, b, samples)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    /// Number of cells.
    pub fn cells(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn dx(&self) -> f64 {
        (self.b - self.a) / self.cells() as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i == self.cells() {
            self.b
        } else {
            self.a + i as f64 * self.dx()
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn max(&self) -> f64 {
        self.samples.iter().cloned().fold(0.0, f64::max)
    }

    /// The density restricted to the nodes `lo..=hi`.
    pub fn restrict(&self, lo: usize, hi: usize) -> Result<Self> {
        if hi > self.cells() || hi < lo + 2 {
            return Err(Error::InvalidGrid(format!(
                "cannot restrict {} cells to nodes {lo}..={hi}",
                self.cells()
            )));
        }
        Self::new(self.x(lo), self.x(hi), self.samples[lo..=hi].to_vec())
    }

    /// Every second node; requires an even number of cells.
    pub fn coarsen(&self) -> Result<Self> {
        let n = self.cells();
        if !n.is_multiple_of(2) || n < 4 {
            return Err(Error::InvalidGrid(format!(
                "coarsening needs an even cell count >= 4, got {n}"
            )));
        }
        Self::new(
            self.a,
            self.b,
            self.samples.iter().step_by(2).cloned().collect(),
        )
    }

    pub fn same_grid(&self, other: &GridDensity) -> bool {
        self.a == other.a && self.b == other.b && self.samples.len() == other.samples.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_inputs() {
        assert!(GridDensity::new(1.0, 0.0, vec![1.0; 3]).is_err());
        assert!(GridDensity::new(0.0, 1.0, vec![1.0; 2]).is_err());
        assert!(GridDensity::new(0.0, 1.0, vec![1.0, -1.0, 1.0]).is_err());
        assert!(GridDensity::new(0.0, 1.0, vec![0.0; 5]).is_err());
        assert!(GridDensity::new(0.0, 1.0, vec![1.0, f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn json_shape() {
        let g = GridDensity::new(0.0, 2.0, vec![1.0, 2.0, 3.0]).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, r#"{"a":0.0,"b":2.0,"n":2,"samples":[1.0,2.0,3.0]}"#);
        let back: GridDensity = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn json_rejects_count_mismatch() {
        let r: std::result::Result<GridDensity, _> =
            serde_json::from_str(r#"{"a":0,"b":1,"n":3,"samples":[1,1,1]}"#);
        assert!(r.is_err());
    }

    #[test]
    fn coarsen_and_restrict() {
        let g = GridDensity::from_fn(0.0, 1.0, 8, |x| 1.0 + x).unwrap();
        let c = g.coarsen().unwrap();
        assert_eq!(c.cells(), 4);
        assert_eq!(c.samples()[1], g.samples()[2]);
        let r = g.restrict(4, 8).unwrap();
        assert_eq!(r.a(), 0.5);
        assert_eq!(r.cells(), 4);
        assert!(g.restrict(4, 5).is_err());
        assert!(GridDensity::from_fn(0.0, 1.0, 5, |_| 1.0)
            .unwrap()
            .coarsen()
            .is_err());
    }
}
