//! Lowest transmission eigenvalues of one level by shift-invert Arnoldi, checked against the
//! full dense spectrum of the shift-inverted pencil.
use std::sync::Arc;

use teig::assembly::{assemble_a, assemble_b, BForm, Material};
use teig::eigen::{shift_invert_arnoldi, ArnoldiOptions};
use teig::fespace::{ProductDegrees, ProductSpace};
use teig::linalg::{dense_eig, DenseLu};
use teig::mesh::{build_builtin_domain, Domain};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mesh = Arc::new(build_builtin_domain(&Domain::UnitSquare, 0.25)?);
    let ps = ProductSpace::new(mesh, ProductDegrees::taylor_hood(2))?;
    let a = assemble_a(&ps, &Material::constant(16.0)?)?;
    let b = assemble_b(&ps, BForm::Standard);
    let opts = ArnoldiOptions::default();
    let res = shift_invert_arnoldi(&a, &b, &opts)?;
    println!("{} unknowns, {} restarts, {} operator applications", a.nrows(), res.restarts, res.operator_applications);

    let shifted = a.add_scaled(-opts.shift, &b).to_dense();
    let op = DenseLu::factorize(&shifted)?.solve_matrix(&b.to_dense());
    let mut dense: Vec<_> = dense_eig(&op)?
        .into_iter()
        .filter(|p| p.value.norm() > 1e-10)
        .map(|p| opts.shift + 1.0 / p.value)
        .collect();
    dense.sort_by(|x, y| teig::eigen::compare_eqslantless(*x, *y));
    for (p, d) in res.pairs.iter().zip(&dense) {
        println!(
            "{:>12.8} {:+.2e}i   dense {:>12.8}   residual {:.1e}",
            p.lambda.re, p.lambda.im, d.re, p.residual
        );
    }
    Ok(())
}
