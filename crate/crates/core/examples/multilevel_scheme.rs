//! The multi-level correction scheme against direct solves on every level.
use teig::assembly::{BForm, Material};
use teig::eigen::ArnoldiOptions;
use teig::fespace::ProductDegrees;
use teig::mesh::{build_builtin_domain, Domain};
use teig::multilevel::{algorithm1, build_hierarchy, single_level_solve};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mesh = build_builtin_domain(&Domain::UnitSquare, 0.25)?;
    let material = Material::constant(16.0)?;
    let h = build_hierarchy(mesh, 2, ProductDegrees::taylor_hood(2), &material, BForm::Standard)?;
    let opts = ArnoldiOptions::default();
    let multi = algorithm1(&h, &opts)?;
    for rec in &multi.records {
        println!(
            "level {}: {:6} unknowns, enriched basis {} ({} corrections, {} dropped), {:.2}s",
            rec.level, rec.dofs, rec.basis_dim, rec.corrections, rec.dropped, rec.seconds
        );
    }
    let single = single_level_solve(&h, h.finest(), &opts)?;
    println!("{:>14} {:>14} {:>10}", "multi", "single", "rel diff");
    for (m, s) in multi.finest().iter().zip(&single.pairs) {
        println!("{:>14.9} {:>14.9} {:>10.2e}", m.lambda.re, s.lambda.re, (m.lambda - s.lambda).norm() / s.lambda.norm());
    }
    Ok(())
}
