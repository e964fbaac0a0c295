//! Prolongation between nested Lagrange spaces on red-refined meshes.

use super::basis::CellGeometry;
use super::product::{Field, ProductSpace};
use super::space::LagrangeSpace;
use super::FeError;
use crate::linalg::{SparseMatrix, TripletBuilder};
use crate::mesh::barycentric;

/// Entries within this distance of 0 or 1 are snapped; they arise from rational lattice values.
const SNAP: f64 = 1e-14;

/// Matrix `P` (fine DOFs x coarse DOFs) with `P c` representing the same function as `c`.
///
/// Built by evaluating every coarse basis function at every fine DOF node inside the parent triangle.
pub fn prolongate_scalar(coarse: &LagrangeSpace, fine: &LagrangeSpace) -> Result<SparseMatrix, FeError> {
    let cmesh = coarse.mesh();
    let fmesh = fine.mesh();
    let parent = fmesh
        .parent()
        .ok_or_else(|| FeError::NotNested("fine mesh has no parent map".into()))?;
    if parent.triangle_parent.len() != fmesh.num_triangles()
        || parent.triangle_parent.iter().any(|(p, _)| *p >= cmesh.num_triangles())
        || fmesh.num_triangles() != 4 * cmesh.num_triangles()
        || fmesh.level() != cmesh.level() + 1
    {
        return Err(FeError::NotNested("fine mesh is not a red refinement of the coarse mesh".into()));
    }
    if coarse.degree() != fine.degree() || coarse.constraint() != fine.constraint() {
        return Err(FeError::NotNested(format!(
            "degree/constraint mismatch: coarse ({}, {}) vs fine ({}, {})",
            coarse.degree(),
            coarse.constraint().name(),
            fine.degree(),
            fine.constraint().name()
        )));
    }
    let celem = coarse.element();
    let felem = fine.element();
    let mut done = vec![false; fine.dof_count()];
    let mut builder = TripletBuilder::with_capacity(fine.dof_count(), coarse.dof_count(), fine.dof_count() * 4);
    for t in 0..fmesh.num_triangles() {
        let (pt, _) = parent.triangle_parent[t];
        let fgeo = CellGeometry::new(fmesh, t);
        let cpoints = cmesh.triangle_points(pt);
        let cdofs = coarse.cell_dofs(pt);
        for (k, d) in fine.cell_dofs(t).iter().enumerate() {
            let Some(d) = *d else { continue };
            if done[d] {
                continue;
            }
            done[d] = true;
            let x = fgeo.point(felem.node_bary(k));
            let l = barycentric(&cpoints, &x);
            for (c, v) in cdofs.iter().zip(celem.eval(l)) {
                let Some(c) = *c else { continue };
                let v = if v.abs() < SNAP {
                    continue;
                } else if (v - 1.0).abs() < SNAP {
                    1.0
                } else {
                    v
                };
                builder.push(d, c, v);
            }
        }
    }
    Ok(builder.build())
}

/// Block-diagonal prolongation over all seven components plus the multiplier (mapped to itself).
pub fn prolongate(coarse: &ProductSpace, fine: &ProductSpace) -> Result<SparseMatrix, FeError> {
    if coarse.degrees() != fine.degrees() {
        return Err(FeError::NotNested("product spaces use different degrees".into()));
    }
    let mut builder = TripletBuilder::new(fine.system_dim(), coarse.system_dim());
    let mut cache: Vec<(*const LagrangeSpace, SparseMatrix)> = Vec::new();
    for f in Field::ALL {
        let key = coarse.space(f) as *const LagrangeSpace;
        let idx = match cache.iter().position(|(k, _)| *k == key) {
            Some(i) => i,
            None => {
                cache.push((key, prolongate_scalar(coarse.space(f), fine.space(f))?));
                cache.len() - 1
            }
        };
        let p = &cache[idx].1;
        let (ro, co) = (fine.offset(f), coarse.offset(f));
        for (i, j, v) in p.triplets() {
            builder.push(ro + i, co + j, v);
        }
    }
    builder.push(fine.multiplier_index(), coarse.multiplier_index(), 1.0);
    Ok(builder.build())
}
