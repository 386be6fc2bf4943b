//! Uniform 1-D grids and the sine eigenbasis of the discrete Laplacian.
//!
//! A grid with `n` nodes on `(a, b)` uses the spacing `h = (b - a) / n` and
//! places nodes at `x_i = a + i h` for `i = 1..=n`. Homogeneous Dirichlet
//! conditions are imposed through phantom nodes at `i = 0` and `i = n + 1`,
//! so the discrete operators below are `n x n` and the rightmost physical
//! node sits at `b` itself.

use alloc::vec::Vec;

use crate::linalg::Mat;

/// Uniform grid with Dirichlet phantom nodes just outside both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1d {
    /// Left end of the interval.
    pub a: f64,
    /// Right end of the interval.
    pub b: f64,
    /// Number of stored nodes.
    pub n: usize,
}

impl Grid1d {
    /// Grid on `(a, b)` with `n` nodes.
    pub fn new(a: f64, b: f64, n: usize) -> Self {
        assert!(n > 0 && b > a);
        Grid1d { a, b, n }
    }

    /// Mesh spacing.
    pub fn h(&self) -> f64 {
        (self.b - self.a) / self.n as f64
    }

    /// Coordinate of node `i` (zero-based storage index).
    pub fn node(&self, i: usize) -> f64 {
        self.a + (i as f64 + 1.0) * self.h()
    }

    /// All node coordinates.
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Eigenvalue `k` (zero-based) of the Dirichlet second-difference
    /// operator `-Δ_h` on this grid: `(4/h²) sin²((k+1)π / (2(n+1)))`.
    pub fn laplacian_eigenvalue(&self, k: usize) -> f64 {
        let h = self.h();
        let s = libm::sin((k as f64 + 1.0) * core::f64::consts::PI / (2.0 * (self.n as f64 + 1.0)));
        4.0 / (h * h) * s * s
    }
}

/// Orthonormal sine eigenbasis of the Dirichlet Laplacian.
///
/// The matrix `S` with entries `S[k][i] = sqrt(2/(n+1)) sin((k+1)(i+1)π/(n+1))`
/// is symmetric and involutive (`S S = I`), so the same multiplication maps
/// both ways between nodal and spectral coordinates.
#[derive(Debug, Clone)]
pub struct SineBasis {
    s: Mat,
}

impl SineBasis {
    /// Basis for a grid with `n` nodes.
    pub fn new(n: usize) -> Self {
        let scale = libm::sqrt(2.0 / (n as f64 + 1.0));
        let s = Mat::from_fn(n, n, |k, i| {
            scale
                * libm::sin(
                    (k as f64 + 1.0) * (i as f64 + 1.0) * core::f64::consts::PI
                        / (n as f64 + 1.0),
                )
        });
        SineBasis { s }
    }

    /// Dimension of the basis.
    pub fn len(&self) -> usize {
        self.s.rows()
    }

    /// True when the basis is empty (never for a constructed grid).
    pub fn is_empty(&self) -> bool {
        self.s.rows() == 0
    }

    /// The transform matrix itself.
    pub fn matrix(&self) -> &Mat {
        &self.s
    }

    /// Applies the transform (its own inverse) to a vector.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.s.matvec(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm2;

    #[test]
    fn node_placement_includes_right_end() {
        let g = Grid1d::new(0.0, core::f64::consts::PI, 50);
        assert!((g.h() - core::f64::consts::PI / 50.0).abs() < 1e-15);
        assert!((g.node(0) - g.h()).abs() < 1e-15);
        assert!((g.node(49) - core::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn laplacian_eigenvalues_match_reference() {
        // [DERIVED] frozen values for n = 50 on (0, π).
        let g = Grid1d::new(0.0, core::f64::consts::PI, 50);
        let cases = [
            (0usize, 0.9608648867155083),
            (1, 3.8398146572256),
            (49, 1012.2509715366623),
        ];
        for (k, want) in cases {
            let got = g.laplacian_eigenvalue(k);
            assert!(
                (got - want).abs() <= 1e-10 * want,
                "lambda_{k} = {got}, want {want}"
            );
        }
    }

    #[test]
    fn sine_basis_is_orthonormal_involution() {
        for n in [2usize, 5, 17, 33] {
            let basis = SineBasis::new(n);
            let prod = basis.matrix().matmul(basis.matrix());
            for i in 0..n {
                for j in 0..n {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((prod[(i, j)] - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn sine_columns_diagonalize_second_difference() {
        let n = 20;
        let g = Grid1d::new(0.0, 1.0, n);
        let basis = SineBasis::new(n);
        let h2 = g.h() * g.h();
        for k in [0usize, 3, n - 1] {
            let v = basis.matrix().row(k).to_vec();
            // Apply -Δ_h with phantom Dirichlet zeros at both ends.
            let mut av = alloc::vec![0.0; n];
            for i in 0..n {
                let left = if i == 0 { 0.0 } else { v[i - 1] };
                let right = if i + 1 == n { 0.0 } else { v[i + 1] };
                av[i] = (2.0 * v[i] - left - right) / h2;
            }
            let lam = g.laplacian_eigenvalue(k);
            let mut resid = av.clone();
            for i in 0..n {
                resid[i] -= lam * v[i];
            }
            assert!(norm2(&resid) < 1e-9 * lam.max(1.0));
        }
    }
}
