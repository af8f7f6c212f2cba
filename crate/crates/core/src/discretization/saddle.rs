//! Coupled velocity/pressure systems, essential constraints, and direct solves.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};

use super::sparse::{norm, CsrMatrix, TripletBuilder};
use super::spaces::FunctionSpaces;
use crate::error::{Error, Result};
use crate::geometry::BoundaryTag;
use crate::params::FluidParams;

/// Prescribed values on a subset of the coupled unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraints {
    values: Vec<Option<f64>>,
}

impl Constraints {
    pub fn none(n: usize) -> Self {
        Self { values: vec![None; n] }
    }

    pub fn set(&mut self, dof: usize, value: f64) {
        self.values[dof] = Some(value);
    }

    pub fn get(&self, dof: usize) -> Option<f64> {
        self.values[dof]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_constrained(&self, dof: usize) -> bool {
        self.values[dof].is_some()
    }

    pub fn count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    /// Same dof set with all values replaced by zero.
    pub fn homogeneous(&self) -> Self {
        Self { values: self.values.iter().map(|v| v.map(|_| 0.0)).collect() }
    }

    /// Writes the prescribed values into `x`.
    pub fn impose(&self, x: &mut [f64]) {
        for (xi, v) in x.iter_mut().zip(&self.values) {
            if let Some(v) = v {
                *xi = *v;
            }
        }
    }

    /// Zeroes the entries of `x` at constrained dofs.
    pub fn zero_constrained(&self, x: &mut [f64]) {
        for (xi, v) in x.iter_mut().zip(&self.values) {
            if v.is_some() {
                *xi = 0.0;
            }
        }
    }
}

/// Velocity boundary data: inlet profile on E, no-slip on the wall (which
/// wins at the corners), and `u_r = 0` on the axis.
pub fn velocity_constraints(spaces: &FunctionSpaces, params: &FluidParams) -> Constraints {
    let mut cons = Constraints::none(spaces.n_total());
    for k in 0..spaces.n_p2() {
        let tags = spaces.p2_tags(k);
        let [r, _] = spaces.p2_coords()[k];
        if tags.contains(&BoundaryTag::Wall) {
            cons.set(2 * k, 0.0);
            cons.set(2 * k + 1, 0.0);
        } else if tags.contains(&BoundaryTag::Inlet) {
            let u0 = params.inlet_velocity(r);
            cons.set(2 * k, u0[0]);
            cons.set(2 * k + 1, u0[1]);
        }
        if tags.contains(&BoundaryTag::Axis) {
            cons.set(2 * k, 0.0);
        }
    }
    cons
}

/// Block system `[[A, -B^T], [-B, 0]] x = rhs` on the coupled unknowns.
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub n_velocity: usize,
    pub constraints: Option<Constraints>,
}

impl SaddleSystem {
    pub fn from_blocks(a: &CsrMatrix, b: &CsrMatrix, f: &[f64]) -> Self {
        let nv = a.nrows();
        let np = b.nrows();
        let mut t = TripletBuilder::with_capacity(nv + np, nv + np, a.nnz() + 2 * b.nnz());
        for (i, j, v) in a.triplets() {
            t.push(i, j, v);
        }
        for (p, j, v) in b.triplets() {
            t.push(j, nv + p, -v);
            t.push(nv + p, j, -v);
        }
        let mut rhs = f.to_vec();
        rhs.resize(nv + np, 0.0);
        Self { matrix: t.build(), rhs, n_velocity: nv, constraints: None }
    }

    pub fn n_total(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Symmetric elimination: constrained rows and columns are removed, their
/// known contributions moved to the right-hand side, and identity rows put
/// in their place.
pub fn apply_constraints(system: &SaddleSystem, cons: &Constraints) -> SaddleSystem {
    let n = system.n_total();
    assert_eq!(cons.len(), n);
    let mut rhs = system.rhs.clone();
    let mut t = TripletBuilder::with_capacity(n, n, system.matrix.nnz());
    for (i, j, v) in system.matrix.triplets() {
        if cons.is_constrained(i) {
            continue;
        }
        match cons.get(j) {
            Some(g) => rhs[i] -= v * g,
            None => t.push(i, j, v),
        }
    }
    for i in 0..n {
        if let Some(g) = cons.get(i) {
            t.push(i, i, 1.0);
            rhs[i] = g;
        }
    }
    SaddleSystem { matrix: t.build(), rhs, n_velocity: system.n_velocity, constraints: Some(cons.clone()) }
}

pub fn apply_essential(system: &SaddleSystem, spaces: &FunctionSpaces, params: &FluidParams) -> SaddleSystem {
    apply_constraints(system, &velocity_constraints(spaces, params))
}

/// Sparse LU solve of `matrix * x = rhs` with a relative residual check.
pub fn solve_sparse(matrix: &CsrMatrix, rhs: &[f64], tol: f64) -> Result<Vec<f64>> {
    let n = matrix.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let trip: Vec<Triplet<usize, usize, f64>> = matrix.triplets().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, matrix.ncols(), &trip)
        .map_err(|e| Error::SingularSystem(format!("matrix construction failed: {e:?}")))?;
    let lu = a.sp_lu().map_err(|e| Error::SingularSystem(format!("LU factorization failed: {e:?}")))?;
    let b = Mat::from_fn(n, 1, |i, _| rhs[i]);
    let xm = lu.solve(&b);
    let x: Vec<f64> = (0..n).map(|i| xm[(i, 0)]).collect();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem("non-finite solution from LU".into()));
    }
    let ax = matrix.matvec(&x);
    let res = norm(&ax.iter().zip(rhs).map(|(a, b)| a - b).collect::<Vec<_>>());
    let scale = norm(rhs).max(f64::MIN_POSITIVE);
    let rel = if norm(rhs) == 0.0 { res } else { res / scale };
    if !(rel <= tol) {
        return Err(Error::SingularSystem(format!("relative residual {rel:.3e} exceeds {tol:.1e} (n = {n})")));
    }
    Ok(x)
}

/// Relative algebraic residual accepted by [`solve_saddle`].
pub const SOLVE_TOLERANCE: f64 = 1e-11;

/// Direct solve returning `(velocity, pressure)` dofs.
pub fn solve_saddle(system: &SaddleSystem) -> Result<(Vec<f64>, Vec<f64>)> {
    let x = solve_sparse(&system.matrix, &system.rhs, SOLVE_TOLERANCE)?;
    let p = x[system.n_velocity..].to_vec();
    let mut u = x;
    u.truncate(system.n_velocity);
    Ok((u, p))
}
