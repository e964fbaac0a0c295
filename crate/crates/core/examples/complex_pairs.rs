//! A variable refraction index produces complex conjugate eigenvalue pairs.
use teig::assembly::{BForm, Material};
use teig::coefficient::parse_coefficient;
use teig::eigen::{verify_conjugate_closure, ArnoldiOptions};
use teig::fespace::ProductDegrees;
use teig::mesh::{build_builtin_domain, Domain};
use teig::multilevel::{build_hierarchy, single_level_solve};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = parse_coefficient("x1^2 + x2^2 + 4")?;
    let material = Material::new(n, 4.0, 6.0, None)?;
    let mesh = build_builtin_domain(&Domain::UnitSquare, 0.25)?;
    let h = build_hierarchy(mesh, 2, ProductDegrees::taylor_hood(2), &material, BForm::Standard)?;
    for level in 0..h.levels.len() {
        let res = single_level_solve(&h, level, &ArnoldiOptions::default())?;
        let values = res.eigenvalues();
        let closed = verify_conjugate_closure(&values, 1e-6).is_closed();
        let text: Vec<String> = values.iter().map(|z| format!("{:.4}{:+.4}i", z.re, z.im)).collect();
        println!("level {level} (closed: {closed}): {}", text.join("  "));
    }
    Ok(())
}
