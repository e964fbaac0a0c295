//! Parses a configuration, runs it into a temporary directory and prints the result table.
use std::path::Path;

use teig::config::RunConfig;
use teig::run::{print_table, run};

const CONFIG: &str = "
[domain]
builtin = right_triangle
h0 = 0.25

[coefficient]
n = 16

[discretization]
degree = 2
levels = 2

[solver]
k = 4
mode = both
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("teig-config-example");
    let mut cfg = RunConfig::parse(CONFIG, Path::new("."))?;
    cfg.output_dir = dir.clone();
    let result = run(&cfg)?;
    print!("{}", print_table(&result));
    println!("\necho of the configuration:\n{}", cfg.to_text());
    for entry in std::fs::read_dir(&dir)? {
        println!("wrote {}", entry?.path().display());
    }
    Ok(())
}
