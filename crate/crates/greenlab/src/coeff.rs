//! Coefficient fields with ellipticity envelopes.
//!
//! A [`CoefficientField`] stores the symmetric matrix `B = {b^ij}` at every
//! node together with pointwise scalar envelopes `env_lo <= xi^T B xi / |xi|^2
//! <= env_hi`. Degenerate envelopes (zero on the boundary) are allowed; the
//! operator module floors face coefficients when assembling.

pub mod pathological;

use crate::domain::{Mesh, NodeClass, MAX_DIM};
use crate::error::{Error, Result};

/// Scalar field sampled at mesh nodes.
#[derive(Clone, Debug)]
pub struct ScalarField {
    pub values: Vec<f64>,
}

#[derive(Clone)]
enum CoeffData {
    /// Diagonal matrix `b^ij = b_i delta_ij`, one scalar field per axis.
    Diagonal(Vec<Vec<f64>>),
    /// Full symmetric matrix per node, row-major `dim x dim`.
    Full(Vec<f64>),
}

/// Symmetric coefficient matrix field with pointwise ellipticity envelopes.
#[derive(Clone)]
pub struct CoefficientField {
    dim: usize,
    num_nodes: usize,
    data: CoeffData,
    env_lo: Vec<f64>,
    env_hi: Vec<f64>,
}

/// `B = value * I` everywhere.
pub fn constant_field(mesh: &Mesh, value: f64) -> Result<CoefficientField> {
    if !(value > 0.0) {
        return Err(Error::invalid(format!(
            "constant coefficient must be positive (ellipticity), got {value}"
        )));
    }
    let axis = vec![vec![value; mesh.num_nodes()]; mesh.dim()];
    diagonal_field(mesh, &axis)
}

/// Diagonal field `b^ij = b_i delta_ij` from per-axis nodal scalars.
///
/// Envelopes are the exact pointwise min/max over the axes. Rejects a
/// nonpositive axis value at any interior node; boundary values may vanish.
pub fn diagonal_field(mesh: &Mesh, b_axis: &[Vec<f64>]) -> Result<CoefficientField> {
    let dim = mesh.dim();
    if b_axis.len() != dim {
        return Err(Error::invalid(format!(
            "expected {dim} axis fields, got {}",
            b_axis.len()
        )));
    }
    let m = mesh.num_nodes();
    for (d, field) in b_axis.iter().enumerate() {
        if field.len() != m {
            return Err(Error::MeshMismatch(format!(
                "axis field {d} has {} values, mesh has {m} nodes",
                field.len()
            )));
        }
        for idx in 0..m {
            let v = field[idx];
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!(
                    "axis field {d} has invalid value {v} at node {idx}"
                )));
            }
            if v == 0.0 && mesh.node_class(idx) == NodeClass::Interior {
                return Err(Error::invalid(format!(
                    "axis field {d} vanishes at interior node {idx}; ellipticity requires b > 0 inside"
                )));
            }
        }
    }
    let mut env_lo = vec![f64::INFINITY; m];
    let mut env_hi = vec![0.0f64; m];
    for idx in 0..m {
        for field in b_axis {
            env_lo[idx] = env_lo[idx].min(field[idx]);
            env_hi[idx] = env_hi[idx].max(field[idx]);
        }
    }
    Ok(CoefficientField {
        dim,
        num_nodes: m,
        data: CoeffData::Diagonal(b_axis.to_vec()),
        env_lo,
        env_hi,
    })
}

/// Full symmetric matrix field from user-supplied per-node values
/// (row-major `dim x dim` blocks). Envelopes come from eigenvalue bounds of
/// each block (exact for `dim <= 3` via the symmetric eigen solve).
pub fn full_field(mesh: &Mesh, mats: Vec<f64>) -> Result<CoefficientField> {
    let dim = mesh.dim();
    let m = mesh.num_nodes();
    if mats.len() != m * dim * dim {
        return Err(Error::MeshMismatch(format!(
            "expected {} matrix entries, got {}",
            m * dim * dim,
            mats.len()
        )));
    }
    let mut env_lo = vec![0.0f64; m];
    let mut env_hi = vec![0.0f64; m];
    for idx in 0..m {
        let blk = &mats[idx * dim * dim..(idx + 1) * dim * dim];
        for i in 0..dim {
            for j in (i + 1)..dim {
                let diff = (blk[i * dim + j] - blk[j * dim + i]).abs();
                let scale = blk[i * dim + j].abs().max(blk[j * dim + i].abs()).max(1e-300);
                if diff > 1e-12 * scale {
                    return Err(Error::invalid(format!(
                        "matrix at node {idx} is not symmetric: b[{i}{j}] != b[{j}{i}]"
                    )));
                }
            }
        }
        let (lo, hi) = sym_eig_bounds(blk, dim);
        if lo <= 0.0 && mesh.node_class(idx) == NodeClass::Interior {
            return Err(Error::invalid(format!(
                "matrix at interior node {idx} is not positive definite (min eigenvalue {lo:.3e})"
            )));
        }
        env_lo[idx] = lo.max(0.0);
        env_hi[idx] = hi;
    }
    Ok(CoefficientField {
        dim,
        num_nodes: m,
        data: CoeffData::Full(mats),
        env_lo,
        env_hi,
    })
}

/// Distance-to-boundary weight `dist(x, dOmega)^gamma`; vanishes exactly on
/// boundary nodes for `gamma > 0`, identically one for `gamma = 0`.
pub fn distance_weight(mesh: &Mesh, gamma: f64) -> Result<ScalarField> {
    if !(gamma >= 0.0) {
        return Err(Error::invalid(format!("gamma must be >= 0, got {gamma}")));
    }
    let mut values = vec![0.0f64; mesh.num_nodes()];
    for idx in 0..mesh.num_nodes() {
        if gamma == 0.0 {
            values[idx] = 1.0;
        } else {
            let x = mesh.coords(idx);
            values[idx] = mesh.dist_to_boundary(&x).powf(gamma);
        }
    }
    Ok(ScalarField { values })
}

/// Discrete `L^p` norm of a nonnegative scalar field, `(sum f^p vol)^(1/p)`.
///
/// With `inverted = true` the integrand is `f^{-p}`; nodes where the field
/// vanishes (a set of boundary nodes of measure zero) are excluded from the
/// quadrature. A non-finite sum is reported as an error.
pub fn check_integrability(
    field: &ScalarField,
    exponent: f64,
    inverted: bool,
    mesh: &Mesh,
) -> Result<f64> {
    if !(exponent >= 1.0) {
        return Err(Error::invalid(format!(
            "integrability exponent must be >= 1, got {exponent}"
        )));
    }
    if field.values.len() != mesh.num_nodes() {
        return Err(Error::MeshMismatch("field/mesh node count mismatch".into()));
    }
    let mut sum = 0.0f64;
    for idx in 0..mesh.num_nodes() {
        if mesh.node_class(idx) == NodeClass::Removed {
            continue;
        }
        let f = field.values[idx];
        if f < 0.0 {
            return Err(Error::invalid(format!("field negative at node {idx}")));
        }
        let g = if inverted {
            if f == 0.0 {
                continue;
            }
            f.powf(-exponent)
        } else {
            f.powf(exponent)
        };
        sum += g * mesh.node_volume(idx);
    }
    let norm = sum.powf(1.0 / exponent);
    if !norm.is_finite() {
        return Err(Error::NonFinite(format!(
            "L^{exponent} quadrature overflowed (sum {sum:.3e})"
        )));
    }
    Ok(norm)
}

impl CoefficientField {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.data, CoeffData::Diagonal(_))
    }

    /// Lower ellipticity envelope at a node.
    pub fn envelope_lo(&self, idx: usize) -> f64 {
        self.env_lo[idx]
    }

    /// Upper ellipticity envelope at a node.
    pub fn envelope_hi(&self, idx: usize) -> f64 {
        self.env_hi[idx]
    }

    /// Diagonal entry `b^dd` at a node.
    pub fn diag_entry(&self, idx: usize, d: usize) -> f64 {
        match &self.data {
            CoeffData::Diagonal(axes) => axes[d][idx],
            CoeffData::Full(mats) => mats[idx * self.dim * self.dim + d * self.dim + d],
        }
    }

    /// Off-diagonal entry `b^ij` (i != j) at a node; zero for diagonal fields.
    pub fn offdiag_entry(&self, idx: usize, i: usize, j: usize) -> f64 {
        match &self.data {
            CoeffData::Diagonal(_) => 0.0,
            CoeffData::Full(mats) => mats[idx * self.dim * self.dim + i * self.dim + j],
        }
    }

    /// Full matrix at a node, row-major `dim x dim`.
    pub fn matrix_at(&self, idx: usize) -> [[f64; MAX_DIM]; MAX_DIM] {
        let mut out = [[0.0; MAX_DIM]; MAX_DIM];
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[i][j] = if i == j {
                    self.diag_entry(idx, i)
                } else {
                    self.offdiag_entry(idx, i, j)
                };
            }
        }
        out
    }

    /// Quadratic form `xi^T B(x) xi`.
    pub fn quad_form(&self, idx: usize, xi: &[f64]) -> f64 {
        match &self.data {
            CoeffData::Diagonal(axes) => (0..self.dim).map(|d| axes[d][idx] * xi[d] * xi[d]).sum(),
            CoeffData::Full(mats) => {
                let blk = &mats[idx * self.dim * self.dim..(idx + 1) * self.dim * self.dim];
                let mut s = 0.0;
                for i in 0..self.dim {
                    for j in 0..self.dim {
                        s += blk[i * self.dim + j] * xi[i] * xi[j];
                    }
                }
                s
            }
        }
    }
}

/// Eigenvalue bounds of a small symmetric matrix: exact closed forms for
/// 1x1/2x2, bisection on the characteristic polynomial for 3x3.
fn sym_eig_bounds(blk: &[f64], dim: usize) -> (f64, f64) {
    match dim {
        1 => (blk[0], blk[0]),
        2 => {
            let (a, b, c) = (blk[0], blk[1], blk[3]);
            let t = 0.5 * (a + c);
            let d = (0.25 * (a - c) * (a - c) + b * b).sqrt();
            (t - d, t + d)
        }
        3 => {
            let (a, b, c) = (blk[0], blk[4], blk[8]);
            let (d, e, f) = (blk[1], blk[2], blk[5]);
            // Characteristic polynomial det(B - x I); eigenvalues bracketed by
            // Gershgorin discs, then bisected.
            let p = |x: f64| {
                (a - x) * ((b - x) * (c - x) - f * f) - d * (d * (c - x) - f * e)
                    + e * (d * f - (b - x) * e)
            };
            let r0 = d.abs() + e.abs();
            let r1 = d.abs() + f.abs();
            let r2 = e.abs() + f.abs();
            let lo = (a - r0).min(b - r1).min(c - r2);
            let hi = (a + r0).max(b + r1).max(c + r2);
            let bisect = |mut l: f64, mut r: f64, want_sign_change: bool| -> f64 {
                if !want_sign_change {
                    return l;
                }
                for _ in 0..200 {
                    let m = 0.5 * (l + r);
                    if (p(l) > 0.0) == (p(m) > 0.0) {
                        l = m;
                    } else {
                        r = m;
                    }
                }
                0.5 * (l + r)
            };
            // p is a downward cubic: p(lo) > 0 >= p at min eig, sign flips at
            // each eigenvalue. Scan for the outermost roots.
            let mut lmin = lo;
            let mut lmax = hi;
            let steps = 400;
            let mut prev = p(lo);
            let mut first_root = None;
            let mut last_root = None;
            for k in 1..=steps {
                let x = lo + (hi - lo) * k as f64 / steps as f64;
                let cur = p(x);
                if (prev > 0.0) != (cur > 0.0) {
                    let root = bisect(x - (hi - lo) / steps as f64, x, true);
                    if first_root.is_none() {
                        first_root = Some(root);
                    }
                    last_root = Some(root);
                }
                prev = cur;
            }
            if let Some(r) = first_root {
                lmin = r;
            }
            if let Some(r) = last_root {
                lmax = r;
            }
            (lmin, lmax)
        }
        _ => unreachable!("dim is at most 3"),
    }
}
