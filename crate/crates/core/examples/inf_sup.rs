//! Discrete inf-sup constant of the rot coupling for stable and equal-order sigma spaces.
use teig::infsup::inf_sup_study;
use teig::mesh::{build_builtin_domain, Domain};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (m, sigma) in [(2, 1), (2, 2), (3, 2)] {
        let mesh = build_builtin_domain(&Domain::UnitSquare, 0.25)?;
        println!("m = {m}, sigma degree {sigma}");
        for e in inf_sup_study(mesh, 3, m, sigma, 1)? {
            let beta = e.beta.map(|b| format!("{b:.5}")).unwrap_or_else(|| "none".into());
            println!(
                "  level {} h = {:.4}: beta = {beta}  ({} zero modes, {} phi / {} sigma dofs)",
                e.level, e.h, e.zero_modes, e.phi_dofs, e.sigma_dofs
            );
        }
    }
    Ok(())
}
