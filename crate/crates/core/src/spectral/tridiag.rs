//! Symmetric tridiagonal kernels: Sturm counts on the zero-diagonal
//! Golub-Kahan chain, and a pivoted tridiagonal solve for inverse iteration.

use crate::error::{Error, Result};

pub(crate) const MAX_BISECTIONS: usize = 200;

/// Number of eigenvalues below `x` of the symmetric tridiagonal matrix with
/// zero diagonal and squared off-diagonals `e2`.
fn count_below(e2: &[f64], x: f64, pivmin: f64) -> usize {
    let mut q = -x;
    if q.abs() < pivmin {
        q = -pivmin;
    }
    let mut count = usize::from(q < 0.0);
    for &e in e2 {
        q = -x - e / q;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        count += usize::from(q < 0.0);
    }
    count
}

/// Smallest positive eigenvalue of the zero-diagonal chain with squared
/// off-diagonals `e2` (all positive). The spectrum of such a chain is
/// symmetric about zero with one zero eigenvalue when its length is odd.
///
/// Bisection on this form is accurate to a few ulps relative to the result,
/// independently of how strongly the entries are graded.
pub(crate) fn smallest_positive(e2: &[f64]) -> Result<f64> {
    let len = e2.len() + 1;
    let nonpositive = len.div_ceil(2);
    let emax = e2.iter().cloned().fold(0.0, f64::max);
    let pivmin = f64::MIN_POSITIVE * emax.max(1.0);

    let mut hi = 0.0f64;
    for i in 0..len {
        let left = if i > 0 { e2[i - 1].sqrt() } else { 0.0 };
        let right = if i < e2.len() { e2[i].sqrt() } else { 0.0 };
        hi = hi.max(left + right);
    }
    hi *= 1.0 + 4.0 * f64::EPSILON;
    if !(hi.is_finite() && hi > 0.0) || count_below(e2, hi, pivmin) <= nonpositive {
        return Err(Error::NoConvergence { iterations: 0 });
    }
    let mut lo = 0.0f64;
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= 2.0 * f64::EPSILON * hi {
            return Ok(0.5 * (lo + hi));
        }
        let mid = 0.5 * (lo + hi);
        if count_below(e2, mid, pivmin) > nonpositive {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_BISECTIONS,
    })
}

/// LU factors of a tridiagonal matrix with partial pivoting.
pub(crate) struct TridiagLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagLu {
    /// Factors the matrix with diagonal `d`, sub-diagonal `dl` and super-diagonal `du`.
    /// Zero pivots are replaced by a tiny multiple of the matrix norm, which is
    /// the usual treatment inside inverse iteration.
    pub(crate) fn factor(mut dl: Vec<f64>, mut d: Vec<f64>, mut du: Vec<f64>) -> Self {
        let n = d.len();
        let norm = d
            .iter()
            .chain(&dl)
            .chain(&du)
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let tiny = f64::EPSILON * norm.max(f64::MIN_POSITIVE);
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let f = dl[i] / d[i];
                dl[i] = f;
                d[i + 1] -= f * du[i];
            } else {
                let f = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = f;
                let tmp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = tmp - f * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -f;
                }
                swapped[i] = true;
            }
        }
        if n > 0 && d[n - 1] == 0.0 {
            d[n - 1] = tiny;
        }
        TridiagLu {
            dl,
            d,
            du,
            du2,
            swapped,
        }
    }

    pub(crate) fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                b.swap(i, i + 1);
            }
            b[i + 1] -= self.dl[i] * b[i];
        }
        for i in (0..n).rev() {
            let mut v = b[i];
            if i + 1 < n {
                v -= self.du[i] * b[i + 1];
            }
            if i + 2 < n {
                v -= self.du2[i] * b[i + 2];
            }
            b[i] = v / self.d[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_of_two() {
        // [[0, 3], [3, 0]] has eigenvalues -3, 3
        let s = smallest_positive(&[9.0]).unwrap();
        assert!((s - 3.0).abs() < 1e-15);
    }

    #[test]
    fn odd_chain_skips_zero() {
        // zero diagonal, off-diagonals 1, 1: eigenvalues -sqrt2, 0, sqrt2
        let s = smallest_positive(&[1.0, 1.0]).unwrap();
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn graded_chain_relative_accuracy() {
        // Golub-Kahan chain of a 2x2 upper bidiagonal [[a, b], [0, c]]:
        // singular values satisfy s1 s2 = a c, s1^2 + s2^2 = a^2 + b^2 + c^2.
        let (a, b, c) = (1e8, 1.0, 1e-6);
        let s = smallest_positive(&[a * a, b * b, c * c]).unwrap();
        let sum = a * a + b * b + c * c;
        let big = ((sum + (sum * sum - 4.0 * (a * c).powi(2)).sqrt()) / 2.0).sqrt();
        let small = a * c / big;
        assert!((s - small).abs() < 1e-14 * small, "{s} {small}");
    }

    #[test]
    fn pivoted_solve_matches_dense() {
        let d = vec![1e-12, 2.0, -1.0, 4.0];
        let dl = vec![3.0, 1.0, 0.5];
        let du = vec![1.0, -2.0, 1.5];
        let x = [1.0, -2.0, 0.5, 3.0];
        let mut b = vec![0.0; 4];
        for i in 0..4 {
            b[i] = d[i] * x[i];
            if i > 0 {
                b[i] += dl[i - 1] * x[i - 1];
            }
            if i < 3 {
                b[i] += du[i] * x[i + 1];
            }
        }
        let lu = TridiagLu::factor(dl, d, du);
        lu.solve(&mut b);
        for i in 0..4 {
            assert!((b[i] - x[i]).abs() < 1e-10, "{b:?}");
        }
    }
}
