//! Prolongation between nested product spaces preserves point values of every component.
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use teig::fespace::{prolongate, Field, ProductDegrees, ProductSpace};
use teig::mesh::{build_builtin_domain, Domain, Point2};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let coarse = Arc::new(build_builtin_domain(&Domain::LShape, 0.5)?);
    let fine = Arc::new(coarse.refine_red());
    let cs = ProductSpace::new(coarse, ProductDegrees::taylor_hood(3))?;
    let fs = ProductSpace::new(fine, ProductDegrees::taylor_hood(3))?;
    let p = prolongate(&cs, &fs)?;
    println!("P: {} x {}, {} nonzeros", p.nrows(), p.ncols(), p.nnz());

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let x: Vec<f64> = (0..cs.system_dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y = p.matvec(&x);
    for f in Field::ALL {
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let q = Point2::new(rng.random_range(0.0..2.0), rng.random_range(0.0..2.0));
            if q.x1 > 1.0 && q.x2 > 1.0 {
                continue;
            }
            let a = cs.space(f).evaluate(cs.component(f, &x), &q).unwrap();
            let b = fs.space(f).evaluate(fs.component(f, &y), &q).unwrap();
            worst = worst.max((a - b).abs());
        }
        println!("{:<6} max point difference {worst:.1e}", f.name());
    }
    Ok(())
}
