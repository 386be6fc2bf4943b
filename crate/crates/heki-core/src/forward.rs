//! Discretized linear forward problem: a one-dimensional elliptic solve
//! followed by pointwise observation.
//!
//! The operator maps a field `u` on the grid to the solution `p` of
//! `-p'' + p = u` with homogeneous Dirichlet conditions, sampled at a
//! fixed set of interior nodes. The second difference acts on the
//! `n - 1` interior nodes; the field's rightmost degree of freedom sits on
//! the boundary where `p` vanishes, so it never influences the data.

use alloc::vec;
use alloc::vec::Vec;

use crate::grid::Grid1d;
use crate::linalg::{thomas_solve, Mat};
use crate::{Error, Result};

/// Tridiagonal solver for `-p'' + p = f` with Dirichlet conditions.
#[derive(Debug, Clone)]
pub struct EllipticSolver {
    grid: Grid1d,
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
}

impl EllipticSolver {
    /// Assembles the interior operator for `grid`.
    pub fn new(grid: Grid1d) -> Result<Self> {
        if grid.n < 2 {
            return Err(Error::InvalidParameter(
                "elliptic solver needs at least two grid nodes",
            ));
        }
        let n = grid.n - 1;
        let h2 = grid.h() * grid.h();
        Ok(EllipticSolver {
            grid,
            sub: vec![-1.0 / h2; n],
            diag: vec![1.0 + 2.0 / h2; n],
            sup: vec![-1.0 / h2; n],
        })
    }

    /// The grid the solver was assembled on.
    pub fn grid(&self) -> &Grid1d {
        &self.grid
    }

    /// Number of interior nodes carrying the solution.
    pub fn interior_len(&self) -> usize {
        self.grid.n - 1
    }

    /// Solves the interior system for a right-hand side of interior length.
    pub fn solve_interior(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.interior_len() {
            return Err(Error::DimensionMismatch {
                expected: self.interior_len(),
                got: rhs.len(),
            });
        }
        thomas_solve(&self.sub, &self.diag, &self.sup, rhs)
    }

    /// Solves with a full-grid field as source, ignoring its boundary node.
    pub fn apply(&self, field: &[f64]) -> Result<Vec<f64>> {
        if field.len() != self.grid.n {
            return Err(Error::DimensionMismatch {
                expected: self.grid.n,
                got: field.len(),
            });
        }
        self.solve_interior(&field[..self.interior_len()])
    }
}

/// Pointwise observation at a fixed set of interior nodes (1-based node
/// numbers, so node `i` sits at `x = a + i h`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationOperator {
    indices: Vec<usize>,
}

impl ObservationOperator {
    /// Validated constructor from explicit 1-based interior node indices.
    pub fn from_indices(indices: Vec<usize>, interior_len: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidParameter("observation set is empty"));
        }
        for w in indices.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidParameter(
                    "observation indices must be strictly increasing",
                ));
            }
        }
        if indices[0] < 1 || *indices.last().unwrap() > interior_len {
            return Err(Error::InvalidParameter(
                "observation index outside interior",
            ));
        }
        Ok(ObservationOperator { indices })
    }

    /// `count` observation nodes spread evenly over a grid with `n` nodes:
    /// node `round(n j / (count + 1))` for `j = 1..=count`.
    pub fn spread(n: usize, count: usize) -> Result<Self> {
        if count == 0 || count + 1 >= n {
            return Err(Error::InvalidParameter(
                "observation count must fit inside the grid",
            ));
        }
        let indices = (1..=count)
            .map(|j| libm::round(n as f64 * j as f64 / (count as f64 + 1.0)) as usize)
            .collect();
        Self::from_indices(indices, n - 1)
    }

    /// Number of observations.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    /// True when no observation nodes are configured (constructors forbid it).
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// The 1-based node indices.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Physical coordinates of the observation nodes on `grid`.
    pub fn positions(&self, grid: &Grid1d) -> Vec<f64> {
        self.indices
            .iter()
            .map(|&i| grid.a + i as f64 * grid.h())
            .collect()
    }

    /// Samples an interior solution vector at the observation nodes.
    pub fn observe(&self, p: &[f64]) -> Result<Vec<f64>> {
        if *self.indices.last().unwrap() > p.len() {
            return Err(Error::DimensionMismatch {
                expected: *self.indices.last().unwrap(),
                got: p.len(),
            });
        }
        Ok(self.indices.iter().map(|&i| p[i - 1]).collect())
    }
}

/// Composition of the elliptic solve and the observation operator.
#[derive(Debug, Clone)]
pub struct ForwardMap {
    solver: EllipticSolver,
    obs: ObservationOperator,
}

impl ForwardMap {
    /// Couples a solver with an observation set.
    pub fn new(solver: EllipticSolver, obs: ObservationOperator) -> Result<Self> {
        if *obs.indices().last().unwrap() > solver.interior_len() {
            return Err(Error::InvalidParameter(
                "observation index outside interior",
            ));
        }
        Ok(ForwardMap { solver, obs })
    }

    /// The underlying solver.
    pub fn solver(&self) -> &EllipticSolver {
        &self.solver
    }

    /// The observation operator.
    pub fn observations(&self) -> &ObservationOperator {
        &self.obs
    }

    /// Number of data points produced per field.
    pub fn data_len(&self) -> usize {
        self.obs.len()
    }

    /// Predicted data for one field.
    pub fn predict(&self, field: &[f64]) -> Result<Vec<f64>> {
        self.obs.observe(&self.solver.apply(field)?)
    }

    /// Predicted data for every column of an ensemble.
    pub fn predict_ensemble(&self, fields: &Mat) -> Result<Mat> {
        let mut out = Mat::zeros(self.data_len(), fields.cols());
        for j in 0..fields.cols() {
            let p = self.predict(&fields.col(j))?;
            out.set_col(j, &p);
        }
        Ok(out)
    }

    /// Dense matrix of the (linear) map, assembled column by column.
    pub fn matrix(&self) -> Result<Mat> {
        let n = self.solver.grid().n;
        let mut out = Mat::zeros(self.data_len(), n);
        let mut e = vec![0.0; n];
        for i in 0..n {
            e[i] = 1.0;
            let col = self.predict(&e)?;
            out.set_col(i, &col);
            e[i] = 0.0;
        }
        Ok(out)
    }
}
