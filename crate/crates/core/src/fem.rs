//! Bilinear quadrilateral element kernels, sparse assembly and the
//! Jacobi-preconditioned conjugate-gradient solve used by the flow solvers.

use crate::error::{Error, Result};
use crate::geometry::MeridianMesh;
use crate::{lit, Scalar};

/// Abscissa of the two-point Gauss rule on [-1, 1] (weights are 1).
pub const GAUSS_2: f64 = 0.577_350_269_189_625_8;

/// Isoparametric data of a bilinear quad at one reference point.
///
/// Local corners are ordered counterclockwise from the low-r, low-z corner,
/// matching [`MeridianMesh::cell_nodes`].
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry<T> {
    pub r: T,
    pub z: T,
    pub det_j: T,
    pub shape: [T; 4],
    pub dn_dr: [T; 4],
    pub dn_dz: [T; 4],
}

impl<T: Scalar> ElementGeometry<T> {
    pub fn at(mesh: &MeridianMesh<T>, ic: usize, jc: usize, xi: T, eta: T) -> Self {
        let nodes = mesh.cell_nodes(ic, jc);
        let rs = [
            mesh.radii[nodes[0]],
            mesh.radii[nodes[1]],
            mesh.radii[nodes[2]],
            mesh.radii[nodes[3]],
        ];
        let zs = [
            mesh.node_z(jc),
            mesh.node_z(jc),
            mesh.node_z(jc + 1),
            mesh.node_z(jc + 1),
        ];
        Self::from_corners(rs, zs, xi, eta)
    }

    pub fn from_corners(rs: [T; 4], zs: [T; 4], xi: T, eta: T) -> Self {
        let quarter = lit::<T>(0.25);
        let one = T::one();
        let xi_s = [-one, one, one, -one];
        let eta_s = [-one, -one, one, one];
        let mut shape = [T::zero(); 4];
        let mut dxi = [T::zero(); 4];
        let mut deta = [T::zero(); 4];
        for a in 0..4 {
            shape[a] = quarter * (one + xi_s[a] * xi) * (one + eta_s[a] * eta);
            dxi[a] = quarter * xi_s[a] * (one + eta_s[a] * eta);
            deta[a] = quarter * eta_s[a] * (one + xi_s[a] * xi);
        }
        let mut r = T::zero();
        let mut z = T::zero();
        let (mut j11, mut j12, mut j21, mut j22) = (T::zero(), T::zero(), T::zero(), T::zero());
        for a in 0..4 {
            r = r + shape[a] * rs[a];
            z = z + shape[a] * zs[a];
            j11 = j11 + dxi[a] * rs[a];
            j12 = j12 + deta[a] * rs[a];
            j21 = j21 + dxi[a] * zs[a];
            j22 = j22 + deta[a] * zs[a];
        }
        let det_j = j11 * j22 - j12 * j21;
        let mut dn_dr = [T::zero(); 4];
        let mut dn_dz = [T::zero(); 4];
        for a in 0..4 {
            dn_dr[a] = (j22 * dxi[a] - j21 * deta[a]) / det_j;
            dn_dz[a] = (-j12 * dxi[a] + j11 * deta[a]) / det_j;
        }
        ElementGeometry {
            r,
            z,
            det_j,
            shape,
            dn_dr,
            dn_dz,
        }
    }

    /// Gradient of a nodal field restricted to this element.
    ///
    /// Summed corner by corner in a fixed order; a constant shift of the
    /// nodal values cancels exactly because the shape-derivative values
    /// come in bitwise-negating pairs.
    #[inline]
    pub fn gradient(&self, values: [T; 4]) -> (T, T) {
        let mut gr = T::zero();
        let mut gz = T::zero();
        for a in 0..4 {
            gr = gr + self.dn_dr[a] * values[a];
            gz = gz + self.dn_dz[a] * values[a];
        }
        (gr, gz)
    }

    #[inline]
    pub fn interpolate(&self, values: [T; 4]) -> T {
        let mut v = T::zero();
        for a in 0..4 {
            v = v + self.shape[a] * values[a];
        }
        v
    }
}

/// Compressed sparse row matrix over the reduced (Dirichlet-eliminated)
/// unknowns.
#[derive(Debug, Clone)]
pub struct Csr<T> {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<T>,
}

impl<T: Scalar> Csr<T> {
    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        for row in 0..self.n {
            let mut acc = T::zero();
            for k in self.row_ptr[row]..self.row_ptr[row + 1] {
                acc = acc + self.val[k] * x[self.col[k]];
            }
            y[row] = acc;
        }
    }

    pub fn diagonal(&self) -> Vec<T> {
        let mut d = vec![T::zero(); self.n];
        for row in 0..self.n {
            for k in self.row_ptr[row]..self.row_ptr[row + 1] {
                if self.col[k] == row {
                    d[row] = self.val[k];
                }
            }
        }
        d
    }
}

/// Reduced linear system on the non-Dirichlet nodes of a structured mesh.
///
/// Inlet nodes (station 0) are eliminated; the solved field is the
/// homogeneous part, to which the inlet datum is added afterwards. This
/// keeps the assembled system independent of the datum, so velocities are
/// bitwise invariant under gauge shifts.
pub struct ReducedSystem<T> {
    pub eq_of_node: Vec<Option<usize>>,
    pub node_of_eq: Vec<usize>,
    pub matrix: Csr<T>,
    pub rhs: Vec<T>,
}

impl<T: Scalar> ReducedSystem<T> {
    pub fn new(mesh: &MeridianMesh<T>) -> Self {
        let n_nodes = mesh.node_count();
        let n_s = mesh.n_s;
        let mut eq_of_node = vec![None; n_nodes];
        let mut node_of_eq = Vec::with_capacity(n_nodes);
        for j in 1..=mesh.n_z {
            for i in 0..=n_s {
                let node = mesh.node_id(i, j);
                eq_of_node[node] = Some(node_of_eq.len());
                node_of_eq.push(node);
            }
        }
        let n = node_of_eq.len();

        // 9-point stencil sparsity in reduced numbering
        let stride = n_s + 1;
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col = Vec::new();
        row_ptr.push(0);
        for &node in &node_of_eq {
            let i = node % stride;
            let j = node / stride;
            for dj in -1i64..=1 {
                let jj = j as i64 + dj;
                if jj < 0 || jj > mesh.n_z as i64 {
                    continue;
                }
                for di in -1i64..=1 {
                    let ii = i as i64 + di;
                    if ii < 0 || ii > n_s as i64 {
                        continue;
                    }
                    let neighbor = jj as usize * stride + ii as usize;
                    if let Some(eq) = eq_of_node[neighbor] {
                        col.push(eq);
                    }
                }
            }
            let start = *row_ptr.last().unwrap();
            col[start..].sort_unstable();
            row_ptr.push(col.len());
        }
        let val = vec![T::zero(); col.len()];
        ReducedSystem {
            eq_of_node,
            node_of_eq,
            matrix: Csr {
                n,
                row_ptr,
                col,
                val,
            },
            rhs: vec![T::zero(); n],
        }
    }

    pub fn reset(&mut self) {
        for v in &mut self.matrix.val {
            *v = T::zero();
        }
        for v in &mut self.rhs {
            *v = T::zero();
        }
    }

    #[inline]
    fn entry_index(&self, row: usize, column: usize) -> usize {
        let lo = self.matrix.row_ptr[row];
        let hi = self.matrix.row_ptr[row + 1];
        let slice = &self.matrix.col[lo..hi];
        lo + slice.binary_search(&column).expect("entry in stencil")
    }

    /// Accumulates a 4x4 element matrix; Dirichlet rows and columns are
    /// dropped (the eliminated values are zero in the homogeneous system).
    pub fn add_element(&mut self, nodes: [usize; 4], local: [[T; 4]; 4]) {
        for (a, &na) in nodes.iter().enumerate() {
            let Some(row) = self.eq_of_node[na] else {
                continue;
            };
            for (b, &nb) in nodes.iter().enumerate() {
                let Some(colu) = self.eq_of_node[nb] else {
                    continue;
                };
                let k = self.entry_index(row, colu);
                self.matrix.val[k] = self.matrix.val[k] + local[a][b];
            }
        }
    }

    pub fn add_rhs(&mut self, node: usize, v: T) {
        if let Some(eq) = self.eq_of_node[node] {
            self.rhs[eq] = self.rhs[eq] + v;
        }
    }

    /// Solves the reduced system and scatters to a full nodal vector with
    /// zeros on the eliminated (inlet) nodes.
    pub fn solve(
        &self,
        x0: Option<&[T]>,
        tol: T,
        max_iter: usize,
    ) -> Result<(Vec<T>, PcgStats<T>)> {
        let reduced_x0: Option<Vec<T>> =
            x0.map(|full| self.node_of_eq.iter().map(|&n| full[n]).collect());
        let (x, stats) = pcg(&self.matrix, &self.rhs, reduced_x0.as_deref(), tol, max_iter)?;
        let mut full = vec![T::zero(); self.eq_of_node.len()];
        for (eq, &node) in self.node_of_eq.iter().enumerate() {
            full[node] = x[eq];
        }
        Ok((full, stats))
    }
}

#[derive(Debug, Clone)]
pub struct PcgStats<T> {
    pub iterations: usize,
    pub final_residual: T,
}

/// Jacobi-preconditioned conjugate gradients with a relative residual
/// stopping rule; reductions run in a fixed order, so results are
/// reproducible bit for bit.
pub fn pcg<T: Scalar>(
    a: &Csr<T>,
    b: &[T],
    x0: Option<&[T]>,
    tol: T,
    max_iter: usize,
) -> Result<(Vec<T>, PcgStats<T>)> {
    let n = a.n;
    let mut x = match x0 {
        Some(v) => v.to_vec(),
        None => vec![T::zero(); n],
    };
    let diag = a.diagonal();
    let inv_diag: Vec<T> = diag
        .iter()
        .map(|&d| if d != T::zero() { d.recip() } else { T::one() })
        .collect();

    let mut r = vec![T::zero(); n];
    a.matvec(&x, &mut r);
    for k in 0..n {
        r[k] = b[k] - r[k];
    }
    let norm_b = dot(b, b).sqrt();
    let threshold = if norm_b > T::zero() { tol * norm_b } else { tol };

    let mut z: Vec<T> = r.iter().zip(&inv_diag).map(|(&ri, &di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![T::zero(); n];
    let mut history: Vec<f64> = Vec::new();

    let mut res = dot(&r, &r).sqrt();
    if res <= threshold {
        return Ok((
            x,
            PcgStats {
                iterations: 0,
                final_residual: res,
            },
        ));
    }

    for iter in 1..=max_iter {
        a.matvec(&p, &mut ap);
        let denom = dot(&p, &ap);
        if !(denom > T::zero()) {
            return Err(Error::Convergence {
                stage: "linear solve",
                detail: format!(
                    "conjugate gradients lost positive definiteness at iteration {iter}"
                ),
                history: tail(&history),
            });
        }
        let alpha = rz / denom;
        for k in 0..n {
            x[k] = x[k] + alpha * p[k];
            r[k] = r[k] - alpha * ap[k];
        }
        res = dot(&r, &r).sqrt();
        history.push(res.to_f64().unwrap_or(f64::NAN));
        if res <= threshold {
            return Ok((
                x,
                PcgStats {
                    iterations: iter,
                    final_residual: res,
                },
            ));
        }
        for k in 0..n {
            z[k] = r[k] * inv_diag[k];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    Err(Error::Convergence {
        stage: "linear solve",
        detail: format!(
            "conjugate gradients stagnated: residual {res:e} above {threshold:e} after {max_iter} iterations"
        ),
        history: tail(&history),
    })
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for k in 0..a.len() {
        acc = acc + a[k] * b[k];
    }
    acc
}

fn tail(history: &[f64]) -> Vec<f64> {
    let start = history.len().saturating_sub(8);
    history[start..].to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, build_profile, ProfileKind, Symmetry};

    #[test]
    fn element_geometry_partition_of_unity() {
        let profile = build_profile(
            ProfileKind::Algebraic {
                a1: 2.0,
                amplitude: 0.2,
            },
            None,
            2.0,
        )
        .unwrap();
        let mesh = build_mesh(&profile, 6.0, 4, 0.5, Symmetry::Axisymmetric).unwrap();
        let g = ElementGeometry::at(&mesh, 2, 3, 0.3, -0.7);
        let sum: f64 = g.shape.iter().sum();
        assert!((sum - 1.0).abs() < 1e-15);
        let (gr, gz) = g.gradient([1.0, 1.0, 1.0, 1.0]);
        assert_eq!(gr, 0.0);
        assert_eq!(gz, 0.0);

        // gradient of a linear field is exact
        let nodes = mesh.cell_nodes(2, 3);
        let vals = [
            2.0 * mesh.radii[nodes[0]] + 3.0 * mesh.node_z(3),
            2.0 * mesh.radii[nodes[1]] + 3.0 * mesh.node_z(3),
            2.0 * mesh.radii[nodes[2]] + 3.0 * mesh.node_z(4),
            2.0 * mesh.radii[nodes[3]] + 3.0 * mesh.node_z(4),
        ];
        let (gr, gz) = g.gradient(vals);
        assert!((gr - 2.0).abs() < 1e-13);
        assert!((gz - 3.0).abs() < 1e-13);
    }

    #[test]
    fn pcg_solves_small_spd_system() {
        // 1D Laplacian, n = 20
        let n = 20;
        let mut row_ptr = vec![0usize];
        let mut col = Vec::new();
        let mut val = Vec::new();
        for i in 0..n {
            if i > 0 {
                col.push(i - 1);
                val.push(-1.0);
            }
            col.push(i);
            val.push(2.0);
            if i + 1 < n {
                col.push(i + 1);
                val.push(-1.0);
            }
            row_ptr.push(col.len());
        }
        let a: Csr<f64> = Csr {
            n,
            row_ptr,
            col,
            val,
        };
        let b = vec![1.0; n];
        let (x, stats) = pcg(&a, &b, None, 1e-14, 1000).unwrap();
        let mut ax = vec![0.0; n];
        a.matvec(&x, &mut ax);
        for k in 0..n {
            assert!((ax[k] - 1.0).abs() < 1e-11);
        }
        assert!(stats.iterations <= n + 1);
    }

    #[test]
    fn pcg_reports_stagnation() {
        // 1D Laplacian needs ~n iterations; cap it far below that
        let n = 40;
        let mut row_ptr = vec![0usize];
        let mut col = Vec::new();
        let mut val = Vec::new();
        for i in 0..n {
            if i > 0 {
                col.push(i - 1);
                val.push(-1.0);
            }
            col.push(i);
            val.push(2.0);
            if i + 1 < n {
                col.push(i + 1);
                val.push(-1.0);
            }
            row_ptr.push(col.len());
        }
        let a: Csr<f64> = Csr {
            n,
            row_ptr,
            col,
            val,
        };
        let err = pcg(&a, &vec![1.0; n], None, 1e-15, 3).unwrap_err();
        match err {
            Error::Convergence { history, .. } => assert!(!history.is_empty()),
            other => panic!("unexpected error {other}"),
        }
    }
}
