//! Meshes a user polygon and solves on it with cubic elements.
use teig::assembly::{BForm, Material};
use teig::eigen::ArnoldiOptions;
use teig::fespace::ProductDegrees;
use teig::mesh::{build_builtin_domain, Domain, Point2};
use teig::multilevel::{build_hierarchy, single_level_solve};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let trapezoid = vec![
        Point2::new(0.0, 0.0),
        Point2::new(2.0, 0.0),
        Point2::new(1.5, 1.0),
        Point2::new(0.5, 1.0),
    ];
    let mesh = build_builtin_domain(&Domain::Polygon(trapezoid), 0.3)?;
    println!("{} triangles, h = {:.3}", mesh.num_triangles(), mesh.mesh_size());
    let h = build_hierarchy(mesh, 1, ProductDegrees::taylor_hood(3), &Material::constant(16.0)?, BForm::Standard)?;
    let opts = ArnoldiOptions {
        k: 4,
        ..ArnoldiOptions::default()
    };
    for level in 0..h.levels.len() {
        let res = single_level_solve(&h, level, &opts)?;
        let text: Vec<String> = res.pairs.iter().map(|p| format!("{:.6}", p.lambda.re)).collect();
        println!("level {level} ({} unknowns): {}", h.levels[level].dim(), text.join("  "));
    }
    Ok(())
}
