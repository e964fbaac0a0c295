//! Dense nonsymmetric eigenvalues by Hessenberg QR.
use teig::linalg::{dense_eig, DenseMatrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // companion matrix of (x - 1)(x - 2)(x^2 - 2x + 5): roots 1, 2, 1 +- 2i
    let c = [10.0, -19.0, 13.0, -5.0];
    let mut rows = vec![vec![0.0; 4]; 4];
    for i in 1..4 {
        rows[i][i - 1] = 1.0;
    }
    for i in 0..4 {
        rows[i][3] = -c[i];
    }
    let m = DenseMatrix::from_rows(&rows);
    for p in dense_eig(&m)? {
        let r = m.matvec_complex(&p.vector);
        let res: f64 = r.iter().zip(&p.vector).map(|(a, x)| (a - p.value * x).norm_sqr()).sum::<f64>().sqrt();
        println!("{:>8.5} {:+.5}i   residual {res:.1e}", p.value.re, p.value.im);
    }
    Ok(())
}
