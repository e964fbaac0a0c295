//! Parses refraction coefficients and shows how malformed input is reported.
use teig::coefficient::parse_coefficient;
use teig::mesh::Point2;

fn main() {
    let p = Point2::new(0.5, 0.25);
    for text in ["16", "x1^2 + x2^2 + 4", "(x1 - 0.5)^2 * 8 + 2", "1.5e1 / (1 + x2)"] {
        let n = parse_coefficient(text).unwrap();
        println!("{text:<24} constant: {:<5}  n(0.5, 0.25) = {}", n.is_constant(), n.eval(&p));
    }
    for text in ["x1^-2", "x1 + y", "x1^2.5", "(x1 + 1", "-x1"] {
        let err = parse_coefficient(text).unwrap_err();
        println!("{text:<24} {err}");
    }
}
