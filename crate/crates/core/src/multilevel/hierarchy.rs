use std::sync::Arc;
use std::time::Instant;

use super::MultilevelError;
use crate::assembly::{assemble_a, assemble_b, BForm, Material};
use crate::eigen::{shift_invert_arnoldi, ArnoldiOptions, ArnoldiResult};
use crate::fespace::{prolongate, ProductDegrees, ProductSpace};
use crate::linalg::SparseMatrix;
use crate::mesh::{Mesh, MeshIssue};

/// One discretization level: mesh, product space and the assembled pencil.
#[derive(Debug, Clone)]
pub struct Level {
    pub space: ProductSpace,
    pub a: SparseMatrix,
    pub b: SparseMatrix,
    pub h: f64,
    pub assembly_seconds: f64,
}

impl Level {
    pub fn mesh(&self) -> &Arc<Mesh> {
        self.space.mesh()
    }

    pub fn dim(&self) -> usize {
        self.space.system_dim()
    }
}

/// Nested levels `0..=N` obtained by red refinement, with inter-level prolongations.
#[derive(Debug, Clone)]
pub struct LevelHierarchy {
    pub levels: Vec<Level>,
    /// `prolongations[i]` maps level `i` to level `i + 1`.
    pub prolongations: Vec<SparseMatrix>,
    /// `composite[i]` maps level 0 to level `i` (`composite[0]` is the identity).
    pub composite: Vec<SparseMatrix>,
    pub material: Material,
    pub bform: BForm,
}

/// Assembles `refinements + 1` nested levels starting from `initial`.
pub fn build_hierarchy(
    initial: Mesh,
    refinements: usize,
    degrees: ProductDegrees,
    material: &Material,
    bform: BForm,
) -> Result<LevelHierarchy, MultilevelError> {
    let issues: Vec<MeshIssue> = initial.validate();
    if !issues.is_empty() {
        let text: Vec<String> = issues.iter().map(|i| i.to_string()).collect();
        return Err(MultilevelError::InvalidMesh(text.join("; ")));
    }
    let mut meshes = vec![Arc::new(initial.into_root())];
    for _ in 0..refinements {
        let next = meshes.last().unwrap().refine_red();
        meshes.push(Arc::new(next));
    }
    let mut levels = Vec::with_capacity(meshes.len());
    for mesh in meshes {
        let t0 = Instant::now();
        let h = mesh.mesh_size();
        let space = ProductSpace::new(mesh, degrees)?;
        let a = assemble_a(&space, material)?;
        let b = assemble_b(&space, bform);
        levels.push(Level {
            space,
            a,
            b,
            h,
            assembly_seconds: t0.elapsed().as_secs_f64(),
        });
    }
    let mut prolongations = Vec::with_capacity(refinements);
    let mut composite = vec![SparseMatrix::identity(levels[0].dim())];
    for i in 0..refinements {
        let p = prolongate(&levels[i].space, &levels[i + 1].space)?;
        composite.push(p.matmul(&composite[i]));
        prolongations.push(p);
    }
    Ok(LevelHierarchy {
        levels,
        prolongations,
        composite,
        material: material.clone(),
        bform,
    })
}

impl LevelHierarchy {
    pub fn finest(&self) -> usize {
        self.levels.len() - 1
    }

    /// Prolongs a level-`from` vector to level `to >= from`.
    pub fn prolong_vector(&self, from: usize, to: usize, x: &[num_complex::Complex64]) -> Vec<num_complex::Complex64> {
        let mut v = x.to_vec();
        for p in &self.prolongations[from..to] {
            v = p.matvec_complex(&v);
        }
        v
    }
}

/// First `k` eigenpairs of level `level` by shift-invert Arnoldi on the full pencil.
pub fn single_level_solve(h: &LevelHierarchy, level: usize, opts: &ArnoldiOptions) -> Result<ArnoldiResult, MultilevelError> {
    let l = h
        .levels
        .get(level)
        .ok_or_else(|| MultilevelError::BadLevel(level, h.levels.len()))?;
    Ok(shift_invert_arnoldi(&l.a, &l.b, opts)?)
}
