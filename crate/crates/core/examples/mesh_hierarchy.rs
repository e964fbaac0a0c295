//! Builds the built-in domains, red-refines them and round-trips a mesh through the text format.
use teig::mesh::{build_builtin_domain, Domain, Mesh};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for domain in [Domain::UnitSquare, Domain::RightTriangle, Domain::LShape] {
        let mut mesh = build_builtin_domain(&domain, 0.25)?;
        println!("{}", domain.name());
        for level in 0..4 {
            if level > 0 {
                mesh = mesh.refine_red();
            }
            println!(
                "  level {level}: {:5} vertices {:5} triangles  h = {:.4}",
                mesh.num_vertices(),
                mesh.num_triangles(),
                mesh.mesh_size()
            );
        }
    }

    let dir = std::env::temp_dir().join("teig-mesh-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("l_shape.mesh");
    let mesh = build_builtin_domain(&Domain::LShape, 0.5)?;
    mesh.save(&path)?;
    let back = Mesh::load(&path)?;
    println!("saved and reloaded {}: {} triangles, issues: {:?}", path.display(), back.num_triangles(), back.validate());
    Ok(())
}
