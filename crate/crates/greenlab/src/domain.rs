//! Structured box domains with per-node boundary classification.
//!
//! A [`Mesh`] is an axis-aligned box `[0, extent_d]` sampled on a regular
//! node-centered grid. Every node carries a class tag: interior nodes,
//! boundary nodes pinned by the Dirichlet condition (the admissible set), and
//! boundary nodes left free. Annulus-type geometries are realized on the same
//! grid by masking the nodes inside an interior ball and pinning the nodes
//! adjacent to the hole.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

/// Classification of a grid node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeClass {
    Interior,
    /// Boundary node in the admissible set: solutions vanish here.
    Admissible,
    /// Boundary node outside the admissible set: the solution is free here.
    FreeBoundary,
    /// Node masked out of the domain (interior hole of an annulus preset).
    Removed,
}

/// Selects which part of the boundary is pinned.
#[derive(Clone)]
pub enum AdmissiblePreset {
    /// All boundary nodes pinned.
    FullBoundary,
    /// Box boundary minus the open face `x_1 = 0`; nodes the face shares
    /// with other faces stay pinned (Dirichlet wins ties).
    CubeFaceComplement,
    /// Interior spherical hole: nodes strictly inside `B(center, 2s)` are
    /// removed, hole-adjacent nodes are pinned, the outer box boundary is
    /// left free.
    AnnulusInner { center: [f64; MAX_DIM], s: f64 },
    /// Pin exactly the boundary nodes for which the predicate holds.
    CustomPredicate(Arc<dyn Fn(&[f64; MAX_DIM]) -> bool + Send + Sync>),
}

impl fmt::Debug for AdmissiblePreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdmissiblePreset::FullBoundary => write!(f, "FullBoundary"),
            AdmissiblePreset::CubeFaceComplement => write!(f, "CubeFaceComplement"),
            AdmissiblePreset::AnnulusInner { center, s } => {
                write!(f, "AnnulusInner {{ center: {center:?}, s: {s} }}")
            }
            AdmissiblePreset::CustomPredicate(_) => write!(f, "CustomPredicate(..)"),
        }
    }
}

/// Immutable structured grid over an axis-aligned box.
#[derive(Clone, Debug)]
pub struct Mesh {
    dim: usize,
    n: [usize; MAX_DIM],
    extent: [f64; MAX_DIM],
    h: [f64; MAX_DIM],
    node_class: Vec<NodeClass>,
}

/// Build a structured mesh over the box `[0, extent_d]^dim`.
///
/// Boundary nodes are identified and tagged free; apply
/// [`mark_admissible`] to pin a subset.
pub fn build_mesh(dim: usize, n: &[usize], extent: &[f64]) -> Result<Mesh> {
    if dim < 2 || dim > MAX_DIM {
        return Err(Error::invalid(format!("dim must be 2 or 3, got {dim}")));
    }
    if n.len() != dim || extent.len() != dim {
        return Err(Error::invalid(format!(
            "expected {dim} per-axis counts and extents, got {} and {}",
            n.len(),
            extent.len()
        )));
    }
    for (d, &nd) in n.iter().enumerate() {
        if nd < 5 {
            return Err(Error::invalid(format!(
                "n[{d}] = {nd} < 5: the interior stencil needs at least 5 nodes per axis"
            )));
        }
    }
    for (d, &ed) in extent.iter().enumerate() {
        if !(ed > 0.0) {
            return Err(Error::invalid(format!("extent[{d}] = {ed} must be positive")));
        }
    }

    let mut na = [1usize; MAX_DIM];
    let mut ea = [0.0f64; MAX_DIM];
    let mut ha = [0.0f64; MAX_DIM];
    for d in 0..dim {
        na[d] = n[d];
        ea[d] = extent[d];
        ha[d] = extent[d] / (n[d] - 1) as f64;
    }

    let total: usize = na[..dim].iter().product();
    let mut node_class = vec![NodeClass::Interior; total];
    let mesh = Mesh {
        dim,
        n: na,
        extent: ea,
        h: ha,
        node_class: Vec::new(),
    };
    for idx in 0..total {
        let iv = mesh.multi_index(idx);
        if (0..dim).any(|d| iv[d] == 0 || iv[d] == na[d] - 1) {
            node_class[idx] = NodeClass::FreeBoundary;
        }
    }
    Ok(Mesh { node_class, ..mesh })
}

/// Apply an admissible-set preset, returning the re-marked mesh.
///
/// Marking starts from the raw boundary classification, so re-marking is
/// idempotent. Rejects presets that pin no node.
pub fn mark_admissible(mesh: &Mesh, preset: &AdmissiblePreset) -> Result<Mesh> {
    let mut out = mesh.clone();
    // Reset to the raw classification first.
    for idx in 0..out.node_class.len() {
        let iv = out.multi_index(idx);
        out.node_class[idx] = if (0..out.dim).any(|d| iv[d] == 0 || iv[d] == out.n[d] - 1) {
            NodeClass::FreeBoundary
        } else {
            NodeClass::Interior
        };
    }

    match preset {
        AdmissiblePreset::FullBoundary => {
            for c in out.node_class.iter_mut() {
                if *c == NodeClass::FreeBoundary {
                    *c = NodeClass::Admissible;
                }
            }
        }
        AdmissiblePreset::CubeFaceComplement => {
            for idx in 0..out.node_class.len() {
                if out.node_class[idx] != NodeClass::FreeBoundary {
                    continue;
                }
                let iv = out.multi_index(idx);
                let on_face_x0 = iv[0] == 0;
                let on_other = (0..out.dim)
                    .any(|d| (d > 0 && (iv[d] == 0 || iv[d] == out.n[d] - 1)) || iv[0] == out.n[0] - 1);
                if !on_face_x0 || on_other {
                    out.node_class[idx] = NodeClass::Admissible;
                }
            }
        }
        AdmissiblePreset::AnnulusInner { center, s } => {
            if !(*s > 0.0) {
                return Err(Error::invalid("annulus radius parameter s must be positive"));
            }
            let hole = 2.0 * s;
            let hmax = out.h[..out.dim].iter().cloned().fold(0.0, f64::max);
            for d in 0..out.dim {
                if center[d] - hole < hmax || center[d] + hole > out.extent[d] - hmax {
                    return Err(Error::invalid(
                        "annulus hole B(center, 2s) must stay clear of the outer box boundary",
                    ));
                }
            }
            let total = out.node_class.len();
            let mut removed = vec![false; total];
            for idx in 0..total {
                let x = out.coords(idx);
                let r2: f64 = (0..out.dim).map(|d| (x[d] - center[d]).powi(2)).sum();
                if r2.sqrt() < hole {
                    removed[idx] = true;
                }
            }
            for idx in 0..total {
                if removed[idx] {
                    out.node_class[idx] = NodeClass::Removed;
                }
            }
            for idx in 0..total {
                if removed[idx] {
                    continue;
                }
                let iv = out.multi_index(idx);
                let mut adjacent = false;
                for d in 0..out.dim {
                    if iv[d] > 0 && removed[out.shift(idx, d, -1)] {
                        adjacent = true;
                    }
                    if iv[d] + 1 < out.n[d] && removed[out.shift(idx, d, 1)] {
                        adjacent = true;
                    }
                }
                if adjacent {
                    out.node_class[idx] = NodeClass::Admissible;
                }
            }
        }
        AdmissiblePreset::CustomPredicate(pred) => {
            for idx in 0..out.node_class.len() {
                if out.node_class[idx] == NodeClass::FreeBoundary && pred(&out.coords(idx)) {
                    out.node_class[idx] = NodeClass::Admissible;
                }
            }
        }
    }

    if out.count(NodeClass::Admissible) == 0 {
        return Err(Error::EmptyAdmissibleSet(format!(
            "preset {preset:?} pinned no node"
        )));
    }
    Ok(out)
}

impl Mesh {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Per-axis node counts (entries past `dim` are 1).
    pub fn n(&self) -> [usize; MAX_DIM] {
        self.n
    }

    pub fn extent(&self) -> [f64; MAX_DIM] {
        self.extent
    }

    /// Per-axis grid spacing `extent / (n - 1)`.
    pub fn h(&self) -> [f64; MAX_DIM] {
        self.h
    }

    pub fn num_nodes(&self) -> usize {
        self.node_class.len()
    }

    pub fn node_class(&self, idx: usize) -> NodeClass {
        self.node_class[idx]
    }

    pub fn classes(&self) -> &[NodeClass] {
        &self.node_class
    }

    pub fn count(&self, class: NodeClass) -> usize {
        self.node_class.iter().filter(|&&c| c == class).count()
    }

    pub fn num_boundary(&self) -> usize {
        self.count(NodeClass::Admissible) + self.count(NodeClass::FreeBoundary)
    }

    /// Flat index from a multi-index (x fastest).
    pub fn flat_index(&self, iv: [usize; MAX_DIM]) -> usize {
        let mut idx = iv[self.dim - 1];
        for d in (0..self.dim - 1).rev() {
            idx = idx * self.n[d] + iv[d];
        }
        idx
    }

    pub fn multi_index(&self, mut idx: usize) -> [usize; MAX_DIM] {
        let mut iv = [0usize; MAX_DIM];
        for d in 0..self.dim {
            iv[d] = idx % self.n[d];
            idx /= self.n[d];
        }
        iv
    }

    /// Neighbor flat index shifted by `step` along axis `d`. Caller
    /// guarantees the shift stays on the grid.
    pub fn shift(&self, idx: usize, d: usize, step: isize) -> usize {
        let mut iv = self.multi_index(idx);
        iv[d] = (iv[d] as isize + step) as usize;
        self.flat_index(iv)
    }

    pub fn coords(&self, idx: usize) -> [f64; MAX_DIM] {
        let iv = self.multi_index(idx);
        let mut x = [0.0f64; MAX_DIM];
        for d in 0..self.dim {
            x[d] = iv[d] as f64 * self.h[d];
        }
        x
    }

    /// Index of the node nearest to a point.
    pub fn nearest_node(&self, x: &[f64]) -> usize {
        let mut iv = [0usize; MAX_DIM];
        for d in 0..self.dim {
            let t = (x[d] / self.h[d]).round();
            iv[d] = t.clamp(0.0, (self.n[d] - 1) as f64) as usize;
        }
        self.flat_index(iv)
    }

    /// Euclidean distance from a point to the box boundary (hole faces are
    /// not counted).
    pub fn dist_to_boundary(&self, x: &[f64]) -> f64 {
        let mut d = f64::INFINITY;
        for k in 0..self.dim {
            d = d.min(x[k]).min(self.extent[k] - x[k]);
        }
        d
    }

    /// Trapezoidal lumped cell volume of a node: product of `h_d`, halved at
    /// each axis end. Summing over all nodes reproduces the box volume.
    pub fn node_volume(&self, idx: usize) -> f64 {
        let iv = self.multi_index(idx);
        let mut v = 1.0;
        for d in 0..self.dim {
            let w = if iv[d] == 0 || iv[d] == self.n[d] - 1 { 0.5 } else { 1.0 };
            v *= self.h[d] * w;
        }
        v
    }

    pub fn box_volume(&self) -> f64 {
        self.extent[..self.dim].iter().product()
    }

    /// JSON descriptor with run-length-encoded node classes.
    pub fn to_descriptor(&self) -> MeshDescriptor {
        let mut rle: Vec<(usize, NodeClass)> = Vec::new();
        for &c in &self.node_class {
            match rle.last_mut() {
                Some((count, tag)) if *tag == c => *count += 1,
                _ => rle.push((1, c)),
            }
        }
        MeshDescriptor {
            dim: self.dim,
            n: self.n[..self.dim].to_vec(),
            extent: self.extent[..self.dim].to_vec(),
            node_class_rle: rle,
        }
    }

    pub fn from_descriptor(desc: &MeshDescriptor) -> Result<Mesh> {
        let mut mesh = build_mesh(desc.dim, &desc.n, &desc.extent)?;
        let total: usize = desc.node_class_rle.iter().map(|(c, _)| c).sum();
        if total != mesh.num_nodes() {
            return Err(Error::invalid(format!(
                "descriptor encodes {total} nodes, mesh has {}",
                mesh.num_nodes()
            )));
        }
        let mut out = Vec::with_capacity(total);
        for &(count, tag) in &desc.node_class_rle {
            out.extend(std::iter::repeat(tag).take(count));
        }
        mesh.node_class = out;
        Ok(mesh)
    }
}

/// Serializable mesh snapshot.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeshDescriptor {
    pub dim: usize,
    pub n: Vec<usize>,
    pub extent: Vec<f64>,
    pub node_class_rle: Vec<(usize, NodeClass)>,
}
