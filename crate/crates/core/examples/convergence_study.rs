//! Eigenvalue and eigenfunction convergence orders on the unit square.
use teig::assembly::{BForm, Material};
use teig::eigen::ArnoldiOptions;
use teig::fespace::ProductDegrees;
use teig::mesh::{build_builtin_domain, Domain};
use teig::multilevel::{build_hierarchy, convergence_report, single_level_solve};

fn fmt(o: &[Option<f64>]) -> String {
    o.iter().map(|v| v.map(|v| format!("{v:6.3}")).unwrap_or_else(|| "     -".into())).collect::<Vec<_>>().join(" ")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mesh = build_builtin_domain(&Domain::UnitSquare, 0.25)?;
    let h = build_hierarchy(mesh, 3, ProductDegrees::taylor_hood(2), &Material::constant(16.0)?, BForm::Standard)?;
    let opts = ArnoldiOptions::default();
    let mut pairs = Vec::new();
    for level in 0..h.levels.len() {
        pairs.push(single_level_solve(&h, level, &opts)?.pairs);
    }
    let report = convergence_report(&h, &pairs);
    println!("mesh sizes {:?}", report.mesh_sizes);
    for seq in &report.sequences {
        let fine = seq.values.last().unwrap().unwrap();
        println!("lambda_{} = {:.8}: orders {}", seq.index, fine.0, fmt(&seq.orders));
        if let (Some(u), Some(phi)) = (&seq.u_orders, &seq.phi_orders) {
            println!("    u (H1) {}   phi (H1) {}", fmt(u), fmt(phi));
        }
    }
    for flag in &report.flags {
        println!("flag: {flag}");
    }
    Ok(())
}
