//! Assembly and solution of the weighted discrete bilinear form
//! `a(u, phi) = int sum_ij b^ij du/dx_i dphi/dx_j` with the solution pinned
//! to zero on the admissible set.
//!
//! Discretization is finite differences in flux form on the structured grid:
//! diagonal coefficients enter through harmonic-mean face values (the
//! conservative treatment for strongly varying or degenerate coefficients,
//! and the one that preserves the discrete maximum principle), mixed
//! `b^ij` terms through the centered 4-point cross stencil with node-centered
//! coefficients. Faces where the harmonic mean vanishes are floored at
//! `1e-14` times the largest face coefficient so the system stays definite.

pub mod solver;

use std::sync::Arc;

use crate::coeff::CoefficientField;
use crate::domain::{Mesh, NodeClass, MAX_DIM};
use crate::error::{Error, Result};
use solver::{pcg, BandCholesky, Csr};

/// Relative floor applied to degenerate face coefficients.
pub const FACE_FLOOR_REL: f64 = 1e-14;

/// Unknown count below which the direct factorization backs up CG.
pub const DIRECT_FALLBACK_LIMIT: usize = 20_000;

/// Default relative-residual tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Nodal scalar field tied to a grid shape.
#[derive(Clone, Debug)]
pub struct DiscreteField {
    pub shape: [usize; MAX_DIM],
    pub values: Vec<f64>,
}

impl DiscreteField {
    pub fn zeros(mesh: &Mesh) -> DiscreteField {
        DiscreteField { shape: mesh.n(), values: vec![0.0; mesh.num_nodes()] }
    }

    pub fn from_fn(mesh: &Mesh, mut f: impl FnMut(&[f64; MAX_DIM]) -> f64) -> DiscreteField {
        let values = (0..mesh.num_nodes()).map(|i| f(&mesh.coords(i))).collect();
        DiscreteField { shape: mesh.n(), values }
    }

    pub fn matches(&self, mesh: &Mesh) -> bool {
        self.shape == mesh.n() && self.values.len() == mesh.num_nodes()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Assembled weighted operator over the free (non-pinned) nodes.
pub struct WeightedOperator {
    mesh: Arc<Mesh>,
    coeff: Arc<CoefficientField>,
    system: Csr,
    /// Free-unknown index per node, `None` for pinned or removed nodes.
    free_of_node: Vec<Option<usize>>,
    node_of_free: Vec<usize>,
    /// Trapezoidal lumped cell volume per node.
    volume: Vec<f64>,
    dirichlet_set: Vec<usize>,
}

/// Assemble the weighted operator on a marked mesh.
///
/// Requires at least one admissible node (otherwise the pure-Neumann system
/// is singular) and a coefficient field built on the same mesh.
pub fn assemble(mesh: &Mesh, coeff: &CoefficientField) -> Result<WeightedOperator> {
    if coeff.num_nodes() != mesh.num_nodes() || coeff.dim() != mesh.dim() {
        return Err(Error::MeshMismatch(
            "coefficient field was built on a different mesh".into(),
        ));
    }
    let dirichlet_set: Vec<usize> = (0..mesh.num_nodes())
        .filter(|&i| mesh.node_class(i) == NodeClass::Admissible)
        .collect();
    if dirichlet_set.is_empty() {
        return Err(Error::EmptyAdmissibleSet(
            "assemble requires a marked mesh with a nonempty admissible set".into(),
        ));
    }

    let dim = mesh.dim();
    let total = mesh.num_nodes();
    let mut free_of_node = vec![None; total];
    let mut node_of_free = Vec::new();
    for idx in 0..total {
        match mesh.node_class(idx) {
            NodeClass::Interior | NodeClass::FreeBoundary => {
                free_of_node[idx] = Some(node_of_free.len());
                node_of_free.push(idx);
            }
            NodeClass::Admissible | NodeClass::Removed => {}
        }
    }
    let nfree = node_of_free.len();
    let volume: Vec<f64> = (0..total).map(|i| mesh.node_volume(i)).collect();

    // Pass 1: face coefficients (harmonic means) and their maximum, per axis.
    let h = mesh.h();
    let n = mesh.n();
    let mut max_face = 0.0f64;
    let mut faces: Vec<(usize, usize, usize, f64, f64)> = Vec::new(); // (a, b, axis, face coeff, transverse vol)
    for idx in 0..total {
        if mesh.node_class(idx) == NodeClass::Removed {
            continue;
        }
        let iv = mesh.multi_index(idx);
        for d in 0..dim {
            if iv[d] + 1 >= n[d] {
                continue;
            }
            let nb = mesh.shift(idx, d, 1);
            if mesh.node_class(nb) == NodeClass::Removed {
                continue;
            }
            let ba = coeff.diag_entry(idx, d);
            let bb = coeff.diag_entry(nb, d);
            let face = if ba > 0.0 && bb > 0.0 { 2.0 * ba * bb / (ba + bb) } else { 0.0 };
            max_face = max_face.max(face);
            // Edge quadrature volume: full h_d along the edge, trapezoidal
            // weights transverse to it.
            let mut tvol = h[d];
            for k in 0..dim {
                if k == d {
                    continue;
                }
                let w = if iv[k] == 0 || iv[k] == n[k] - 1 { 0.5 } else { 1.0 };
                tvol *= h[k] * w;
            }
            faces.push((idx, nb, d, face, tvol));
        }
    }
    if max_face <= 0.0 {
        return Err(Error::invalid("all face coefficients vanish"));
    }
    let floor = FACE_FLOOR_REL * max_face;

    // Pass 2: flux-form stiffness from faces.
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    for &(a, b, d, face, tvol) in &faces {
        let wgt = face.max(floor) * tvol / (h[d] * h[d]);
        let fa = free_of_node[a];
        let fb = free_of_node[b];
        if let Some(ia) = fa {
            triplets.push((ia, ia, wgt));
        }
        if let Some(ib) = fb {
            triplets.push((ib, ib, wgt));
        }
        if let (Some(ia), Some(ib)) = (fa, fb) {
            triplets.push((ia, ib, -wgt));
            triplets.push((ib, ia, -wgt));
        }
    }

    // Pass 3: mixed-derivative cross terms, node-centered.
    if !coeff.is_diagonal() {
        for idx in 0..total {
            if mesh.node_class(idx) == NodeClass::Removed {
                continue;
            }
            for i in 0..dim {
                for j in (i + 1)..dim {
                    let c = coeff.offdiag_entry(idx, i, j);
                    if c == 0.0 {
                        continue;
                    }
                    let si = difference_stencil(mesh, idx, i);
                    let sj = difference_stencil(mesh, idx, j);
                    let scale = 2.0 * c * volume[idx];
                    for &(p, wp) in &si {
                        for &(q, wq) in &sj {
                            let (fp, fq) = (free_of_node[p], free_of_node[q]);
                            if let (Some(ip), Some(iq)) = (fp, fq) {
                                // Symmetrized: (g_i^T g_j + g_j^T g_i) / 2.
                                triplets.push((ip, iq, 0.5 * scale * wp * wq));
                                triplets.push((iq, ip, 0.5 * scale * wp * wq));
                            }
                        }
                    }
                }
            }
        }
    }

    let system = Csr::from_triplets(nfree, &mut triplets);
    Ok(WeightedOperator {
        mesh: Arc::new(mesh.clone()),
        coeff: Arc::new(coeff.clone()),
        system,
        free_of_node,
        node_of_free,
        volume,
        dirichlet_set,
    })
}

/// Two-point centered difference stencil at a node (one-sided at the grid
/// edge or next to a removed node): list of (node, weight).
fn difference_stencil(mesh: &Mesh, idx: usize, d: usize) -> Vec<(usize, f64)> {
    let iv = mesh.multi_index(idx);
    let n = mesh.n();
    let h = mesh.h()[d];
    let has_lo = iv[d] > 0 && mesh.node_class(mesh.shift(idx, d, -1)) != NodeClass::Removed;
    let has_hi = iv[d] + 1 < n[d] && mesh.node_class(mesh.shift(idx, d, 1)) != NodeClass::Removed;
    match (has_lo, has_hi) {
        (true, true) => {
            let lo = mesh.shift(idx, d, -1);
            let hi = mesh.shift(idx, d, 1);
            vec![(hi, 0.5 / h), (lo, -0.5 / h)]
        }
        (false, true) => {
            let hi = mesh.shift(idx, d, 1);
            vec![(hi, 1.0 / h), (idx, -1.0 / h)]
        }
        (true, false) => {
            let lo = mesh.shift(idx, d, -1);
            vec![(idx, 1.0 / h), (lo, -1.0 / h)]
        }
        (false, false) => vec![],
    }
}

impl WeightedOperator {
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> Arc<Mesh> {
        Arc::clone(&self.mesh)
    }

    pub fn coeff(&self) -> &CoefficientField {
        &self.coeff
    }

    pub fn system(&self) -> &Csr {
        &self.system
    }

    pub fn num_free(&self) -> usize {
        self.node_of_free.len()
    }

    pub fn dirichlet_set(&self) -> &[usize] {
        &self.dirichlet_set
    }

    pub fn volume(&self, node: usize) -> f64 {
        self.volume[node]
    }

    pub fn free_index(&self, node: usize) -> Option<usize> {
        self.free_of_node[node]
    }

    pub fn node_of_free(&self, free: usize) -> usize {
        self.node_of_free[free]
    }

    /// Restrict a nodal field to the free unknowns.
    pub fn restrict(&self, f: &DiscreteField) -> Vec<f64> {
        self.node_of_free.iter().map(|&i| f.values[i]).collect()
    }

    /// Scatter free unknowns back to a nodal field (zero on pinned nodes).
    pub fn prolongate(&self, x: &[f64]) -> DiscreteField {
        let mut out = DiscreteField {
            shape: self.mesh.n(),
            values: vec![0.0; self.mesh.num_nodes()],
        };
        for (free, &node) in self.node_of_free.iter().enumerate() {
            out.values[node] = x[free];
        }
        out
    }

    /// Mass-lumped right-hand side `M f` on the free unknowns.
    fn lumped_rhs(&self, f: &DiscreteField) -> Vec<f64> {
        self.node_of_free
            .iter()
            .map(|&i| f.values[i] * self.volume[i])
            .collect()
    }

    /// Solve `a(u, phi) = int f phi` for the nodal source `f`.
    ///
    /// CG with Jacobi preconditioning is tried first; if it stalls and the
    /// system is small enough, the banded direct factorization finishes the
    /// job (degenerate weights can push the condition number past what CG
    /// tolerates).
    pub fn solve(&self, f: &DiscreteField, tol: f64) -> Result<DiscreteField> {
        if !(tol > 0.0) {
            return Err(Error::invalid(format!("solver tol must be positive, got {tol}")));
        }
        if !f.matches(&self.mesh) {
            return Err(Error::MeshMismatch("source field shape mismatch".into()));
        }
        let rhs = self.lumped_rhs(f);
        let x = self.solve_rhs(&rhs, tol)?;
        Ok(self.prolongate(&x))
    }

    /// Solve with a raw free-node right-hand side.
    pub fn solve_rhs(&self, rhs: &[f64], tol: f64) -> Result<Vec<f64>> {
        let max_iter = 200 + 8 * self.num_free().max(64);
        match pcg(&self.system, rhs, tol, max_iter.min(60_000)) {
            Ok((x, _)) => Ok(x),
            Err(err) => {
                if self.num_free() <= DIRECT_FALLBACK_LIMIT {
                    let chol = BandCholesky::factor(&self.system)?;
                    Ok(chol.solve(rhs))
                } else {
                    Err(err)
                }
            }
        }
    }

    /// Factor once for repeated solves (kernel batch extraction).
    pub fn factorize(&self) -> Result<BandCholesky> {
        BandCholesky::factor(&self.system)
    }

    /// Energy norm `(u^T S u)^{1/2}` of a nodal field.
    pub fn energy_norm(&self, u: &DiscreteField) -> f64 {
        let x = self.restrict(u);
        self.system.quadratic_form(&x, &x).max(0.0).sqrt()
    }

    /// Lower-envelope gradient seminorm: the same face quadrature as the
    /// stiffness, weighted by the harmonic mean of the scalar envelope `b`
    /// instead of the per-axis coefficients. Below the energy norm by
    /// construction, equal to it for constant isotropic fields.
    pub fn envelope_seminorm(&self, u: &DiscreteField) -> f64 {
        let mesh = &self.mesh;
        let dim = mesh.dim();
        let n = mesh.n();
        let h = mesh.h();
        let mut acc = 0.0;
        for idx in 0..mesh.num_nodes() {
            if mesh.node_class(idx) == NodeClass::Removed {
                continue;
            }
            let iv = mesh.multi_index(idx);
            for d in 0..dim {
                if iv[d] + 1 >= n[d] {
                    continue;
                }
                let nb = mesh.shift(idx, d, 1);
                if mesh.node_class(nb) == NodeClass::Removed {
                    continue;
                }
                let (ba, bb) = (self.coeff.envelope_lo(idx), self.coeff.envelope_lo(nb));
                let face = if ba > 0.0 && bb > 0.0 { 2.0 * ba * bb / (ba + bb) } else { 0.0 };
                let mut tvol = h[d];
                for k in 0..dim {
                    if k != d {
                        let w = if iv[k] == 0 || iv[k] == n[k] - 1 { 0.5 } else { 1.0 };
                        tvol *= h[k] * w;
                    }
                }
                let ua = value_or_zero(self, u, idx);
                let ub = value_or_zero(self, u, nb);
                let du = (ub - ua) / h[d];
                acc += face * du * du * tvol;
            }
        }
        acc.sqrt()
    }

    /// Matrix-free recomputation of the diagonal-part energy (flux form,
    /// no floor). Used as the reference norm in the equivalence diagnostic.
    fn diagonal_energy(&self, u: &DiscreteField) -> f64 {
        let mesh = &self.mesh;
        let dim = mesh.dim();
        let n = mesh.n();
        let h = mesh.h();
        let mut acc = 0.0;
        for idx in 0..mesh.num_nodes() {
            if mesh.node_class(idx) == NodeClass::Removed {
                continue;
            }
            let iv = mesh.multi_index(idx);
            for d in 0..dim {
                if iv[d] + 1 >= n[d] {
                    continue;
                }
                let nb = mesh.shift(idx, d, 1);
                if mesh.node_class(nb) == NodeClass::Removed {
                    continue;
                }
                let (ba, bb) = (self.coeff.diag_entry(idx, d), self.coeff.diag_entry(nb, d));
                let face = if ba > 0.0 && bb > 0.0 { 2.0 * ba * bb / (ba + bb) } else { 0.0 };
                let mut tvol = h[d];
                for k in 0..dim {
                    if k != d {
                        let w = if iv[k] == 0 || iv[k] == n[k] - 1 { 0.5 } else { 1.0 };
                        tvol *= h[k] * w;
                    }
                }
                let du = (value_or_zero(self, u, nb) - value_or_zero(self, u, idx)) / h[d];
                acc += face * du * du * tvol;
            }
        }
        acc
    }

    /// Ratio of the full quadratic-form norm to the decoupled diagonal-part
    /// norm over a set of sample fields: `(min, max)` of
    /// `||u||_form / ||u||_diag`. Exactly one for diagonal fields; recorded
    /// as the `nu`-equivalence diagnostic for general matrices.
    pub fn norm_equivalence_ratio(&self, samples: &[DiscreteField]) -> Result<(f64, f64)> {
        if samples.is_empty() {
            return Err(Error::invalid("norm_equivalence_ratio needs samples"));
        }
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for u in samples {
            if !u.matches(&self.mesh) {
                return Err(Error::MeshMismatch("sample field shape mismatch".into()));
            }
            let x = self.restrict(u);
            let q = self.system.quadratic_form(&x, &x).max(0.0);
            let d = self.diagonal_energy(u);
            if d <= 0.0 {
                continue;
            }
            let r = (q / d).sqrt();
            lo = lo.min(r);
            hi = hi.max(r);
        }
        if !lo.is_finite() {
            return Err(Error::invalid("all samples had zero diagonal energy"));
        }
        Ok((lo, hi))
    }

    /// Quadrature of `int f u` with the lumped volumes.
    pub fn lumped_inner(&self, f: &DiscreteField, u: &DiscreteField) -> f64 {
        (0..self.mesh.num_nodes())
            .map(|i| f.values[i] * u.values[i] * self.volume[i])
            .sum()
    }

    /// Dump the free-node system as `row,col,value` coordinate text.
    pub fn system_to_coordinate_text(&self) -> String {
        let mut out = String::from("row,col,value\n");
        let a = &self.system;
        for r in 0..a.n {
            for k in a.row_ptr[r]..a.row_ptr[r + 1] {
                out.push_str(&format!("{r},{},{}\n", a.col_idx[k], a.values[k]));
            }
        }
        out
    }
}

fn value_or_zero(op: &WeightedOperator, u: &DiscreteField, node: usize) -> f64 {
    match op.mesh.node_class(node) {
        NodeClass::Admissible => 0.0,
        _ => u.values[node],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{constant_field, diagonal_field, distance_weight};
    use crate::domain::{build_mesh, mark_admissible, AdmissiblePreset};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dirichlet_square(n: usize) -> Mesh {
        let mesh = build_mesh(2, &[n, n], &[1.0, 1.0]).unwrap();
        mark_admissible(&mesh, &AdmissiblePreset::FullBoundary).unwrap()
    }

    #[test]
    fn five_point_laplacian_structure() {
        let mesh = dirichlet_square(5);
        let coeff = constant_field(&mesh, 1.0).unwrap();
        let op = assemble(&mesh, &coeff).unwrap();
        assert_eq!(op.num_free(), 9);
        let a = op.system();
        let h = 0.25f64;
        let cellvol = h * h;
        for r in 0..9 {
            assert!((a.get(r, r) - 4.0 / (h * h) * cellvol).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_in_coefficients() {
        let mesh = dirichlet_square(5);
        let op1 = assemble(&mesh, &constant_field(&mesh, 1.0).unwrap()).unwrap();
        let op2 = assemble(&mesh, &constant_field(&mesh, 2.0).unwrap()).unwrap();
        for r in 0..op1.system().n {
            for k in op1.system().row_ptr[r]..op1.system().row_ptr[r + 1] {
                let c = op1.system().col_idx[k];
                assert!((op2.system().get(r, c) - 2.0 * op1.system().values[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn interior_rows_conserve() {
        // Row sums vanish on rows whose full stencil is made of free nodes.
        let mesh = dirichlet_square(9);
        let m = mesh.num_nodes();
        let coeff = diagonal_field(&mesh, &[vec![1.0; m], vec![4.0; m]]).unwrap();
        let op = assemble(&mesh, &coeff).unwrap();
        let a = op.system();
        for r in 0..a.n {
            let node = op.node_of_free(r);
            let iv = mesh.multi_index(node);
            if iv[0] >= 2 && iv[0] <= 6 && iv[1] >= 2 && iv[1] <= 6 {
                let sum: f64 = (a.row_ptr[r]..a.row_ptr[r + 1]).map(|k| a.values[k]).sum();
                assert!(sum.abs() < 1e-12, "row {r} sum {sum}");
            }
        }
    }

    #[test]
    fn system_is_symmetric() {
        let mesh = dirichlet_square(9);
        let w = distance_weight(&mesh, 0.25).unwrap();
        let coeff =
            diagonal_field(&mesh, &[w.values, vec![1.0; mesh.num_nodes()]]).unwrap();
        let op = assemble(&mesh, &coeff).unwrap();
        assert!(op.system().symmetry_defect() < 1e-13);
    }

    #[test]
    fn zero_source_zero_solution() {
        let mesh = dirichlet_square(9);
        let op = assemble(&mesh, &constant_field(&mesh, 1.0).unwrap()).unwrap();
        let u = op.solve(&DiscreteField::zeros(&mesh), 1e-10).unwrap();
        assert_eq!(u.max_abs(), 0.0);
    }

    #[test]
    fn poisson_unit_square_peak() {
        let mesh = dirichlet_square(65);
        let op = assemble(&mesh, &constant_field(&mesh, 1.0).unwrap()).unwrap();
        let f = DiscreteField::from_fn(&mesh, |_| 1.0);
        let u = op.solve(&f, 1e-10).unwrap();
        // Series value of max u for -lap u = 1 on the unit square.
        assert!((u.max_abs() - 0.07367).abs() < 3e-4, "max {}", u.max_abs());
    }

    #[test]
    fn refinement_order_two() {
        let mut errs = Vec::new();
        for n in [33usize, 65, 129] {
            let mesh = dirichlet_square(n);
            let op = assemble(&mesh, &constant_field(&mesh, 1.0).unwrap()).unwrap();
            let f = DiscreteField::from_fn(&mesh, |_| 1.0);
            let u = op.solve(&f, 1e-11).unwrap();
            errs.push((u.max_abs() - 0.07367135328).abs());
        }
        let order1 = (errs[0] / errs[1]).log2();
        let order2 = (errs[1] / errs[2]).log2();
        assert!(order1 > 1.5 && order1 < 2.8, "observed order {order1}");
        assert!(order2 > 1.5 && order2 < 3.2, "observed order {order2}");
    }

    #[test]
    fn energy_identity_and_norm() {
        let mesh = dirichlet_square(17);
        let op = assemble(&mesh, &constant_field(&mesh, 1.0).unwrap()).unwrap();
        let f = DiscreteField::from_fn(&mesh, |x| (x[0] * 7.0).sin() + x[1]);
        let tol = 1e-11;
        let u = op.solve(&f, tol).unwrap();
        let energy = op.energy_norm(&u).powi(2);
        let pairing = op.lumped_inner(&f, &u);
        assert!((energy - pairing).abs() <= 10.0 * tol * energy.abs().max(1.0));
    }

    #[test]
    fn maximum_principle_diagonal() {
        let mesh = dirichlet_square(17);
        let w = distance_weight(&mesh, 0.25).unwrap();
        let coeff =
            diagonal_field(&mesh, &[w.values, vec![1.0; mesh.num_nodes()]]).unwrap();
        let op = assemble(&mesh, &coeff).unwrap();
        let f = DiscreteField::from_fn(&mesh, |x| 1.0 + x[0]);
        let u = op.solve(&f, 1e-10).unwrap();
        let min = u.values.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min >= -1e-12 * u.max_abs());
    }

    #[test]
    fn envelope_seminorm_ordering() {
        let mesh = dirichlet_square(17);
        let m = mesh.num_nodes();
        let coeff = diagonal_field(&mesh, &[vec![1.0; m], vec![4.0; m]]).unwrap();
        let op = assemble(&mesh, &coeff).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let u = DiscreteField::from_fn(&mesh, |_| rng.gen_range(-1.0..1.0));
            assert!(op.envelope_seminorm(&u) <= op.energy_norm(&u) + 1e-12);
        }
        // Constant isotropic coefficients: the two norms coincide.
        let opc = assemble(&mesh, &constant_field(&mesh, 2.0).unwrap()).unwrap();
        let u = DiscreteField::from_fn(&mesh, |x| x[0] * (1.0 - x[0]) * x[1]);
        assert!((opc.envelope_seminorm(&u) - opc.energy_norm(&u)).abs() < 1e-10);
    }

    #[test]
    fn norm_equivalence_diagonal_is_one() {
        let mesh = dirichlet_square(9);
        let m = mesh.num_nodes();
        let coeff = diagonal_field(&mesh, &[vec![1.0; m], vec![4.0; m]]).unwrap();
        let op = assemble(&mesh, &coeff).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let samples: Vec<DiscreteField> = (0..10)
            .map(|_| DiscreteField::from_fn(&mesh, |_| rng.gen_range(-1.0..1.0)))
            .collect();
        let (lo, hi) = op.norm_equivalence_ratio(&samples).unwrap();
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn norm_equivalence_full_matrix_finite() {
        use crate::coeff::full_field;
        let mesh = dirichlet_square(9);
        let m = mesh.num_nodes();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut mats = Vec::with_capacity(m * 4);
        for _ in 0..m {
            let off = rng.gen_range(-0.3..0.3);
            mats.extend_from_slice(&[1.5, off, off, 1.0]);
        }
        let coeff = full_field(&mesh, mats).unwrap();
        let op = assemble(&mesh, &coeff).unwrap();
        let samples: Vec<DiscreteField> = (0..50)
            .map(|_| DiscreteField::from_fn(&mesh, |_| rng.gen_range(-1.0..1.0)))
            .collect();
        let (lo, hi) = op.norm_equivalence_ratio(&samples).unwrap();
        assert!(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi >= lo);
    }

    #[test]
    fn unmarked_mesh_rejected() {
        let mesh = build_mesh(2, &[5, 5], &[1.0, 1.0]).unwrap();
        let coeff = constant_field(&mesh, 1.0).unwrap();
        assert!(matches!(
            assemble(&mesh, &coeff),
            Err(Error::EmptyAdmissibleSet(_))
        ));
    }
}
