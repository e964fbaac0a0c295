//! Assembles the mixed pencil (A, B) for both formulations and prints its structure.
use std::sync::Arc;

use teig::assembly::{assemble_a, assemble_b, BForm, Material};
use teig::fespace::{Field, ProductDegrees, ProductSpace};
use teig::mesh::{build_builtin_domain, Domain};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mesh = Arc::new(build_builtin_domain(&Domain::UnitSquare, 0.25)?);
    let ps = ProductSpace::new(mesh, ProductDegrees::taylor_hood(2))?;
    for f in Field::ALL {
        println!("{:<6} degree {}  {:5} dofs", f.name(), ps.degrees().degree(f), ps.dim(f));
    }
    println!("system dimension {} (with the zero-mean multiplier)", ps.system_dim());

    for n in [16.0, 0.25] {
        let material = Material::constant(n)?;
        let a = assemble_a(&ps, &material)?;
        let b = assemble_b(&ps, BForm::Standard);
        let (w, wyy, wdiv) = material.weights(n);
        println!(
            "n = {n:<5} case {:<2} weights ({w:.4}, {wyy:.4}, {wdiv:.4})  nnz(A) = {}  nnz(B) = {}  |A - A^T| = {:.1e}  |B - B^T| = {:.1e}",
            material.case,
            a.nnz(),
            b.nnz(),
            a.asymmetry(),
            b.asymmetry()
        );
    }
    Ok(())
}
