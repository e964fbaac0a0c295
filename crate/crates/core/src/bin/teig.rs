use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use teig::config::RunConfig;
use teig::mesh::Mesh;
use teig::run::{check, print_table, run, RunError};

#[derive(Parser)]
#[command(name = "teig", version, about = "Transmission eigenvalues by mixed finite elements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a configuration file.
    Run {
        config: PathBuf,
        /// Do not print the eigenvalue table.
        #[arg(short, long)]
        quiet: bool,
    },
    /// Print statistics and validation results of a mesh file.
    MeshInfo { meshfile: PathBuf },
    /// Red-refine a mesh file `levels` times.
    Refine {
        meshfile: PathBuf,
        levels: usize,
        /// Output path (standard output when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Validate a configuration without solving.
    Check { config: PathBuf },
}

fn fail(err: RunError) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(err.exit_code() as u8)
}

fn load_config(path: &PathBuf) -> Result<RunConfig, ExitCode> {
    RunConfig::load(path).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        ExitCode::from(2)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, quiet } => {
            let cfg = match load_config(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            match run(&cfg) {
                Ok(r) => {
                    if !quiet {
                        print!("{}", print_table(&r));
                    }
                    println!("outputs written to {}", cfg.output_dir.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    if matches!(e, RunError::Solver(_)) {
                        eprintln!("partial outputs written to {}", cfg.output_dir.display());
                    }
                    fail(e)
                }
            }
        }
        Command::MeshInfo { meshfile } => {
            let mesh = match Mesh::load(&meshfile) {
                Ok(m) => m,
                Err(e) => return fail(e.into()),
            };
            let areas: Vec<f64> = (0..mesh.num_triangles()).map(|t| mesh.triangle_area(t)).collect();
            println!("vertices        {}", mesh.num_vertices());
            println!("triangles       {}", mesh.num_triangles());
            println!("edges           {}", mesh.num_edges());
            println!("boundary edges  {}", mesh.boundary_edges().len());
            println!("h (longest)     {:.6e}", mesh.mesh_size());
            println!("area            {:.6e}", areas.iter().sum::<f64>());
            println!("min/max area    {:.6e} / {:.6e}", areas.iter().copied().fold(f64::INFINITY, f64::min), areas.iter().copied().fold(0.0, f64::max));
            let issues = mesh.validate();
            if issues.is_empty() {
                println!("valid           yes");
                ExitCode::SUCCESS
            } else {
                for i in &issues {
                    println!("issue           {i}");
                }
                ExitCode::from(2)
            }
        }
        Command::Refine { meshfile, levels, output } => {
            let mut mesh = match Mesh::load(&meshfile) {
                Ok(m) => m,
                Err(e) => return fail(e.into()),
            };
            for _ in 0..levels {
                mesh = mesh.refine_red();
            }
            let written = match &output {
                Some(p) => mesh.save(p).map_err(RunError::from),
                None => mesh.write_to(&mut std::io::stdout().lock()).map_err(|source| RunError::Io {
                    path: "<stdout>".into(),
                    source,
                }),
            };
            match written {
                Ok(()) => {
                    if let Some(p) = output {
                        eprintln!("{} triangles written to {}", mesh.num_triangles(), p.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Check { config } => {
            let cfg = match load_config(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            match check(&cfg) {
                Ok(s) => {
                    println!("configuration ok: case {}, m = {}, mode {}", s.case, cfg.degree, cfg.mode.name());
                    for (i, (d, h)) in s.dofs.iter().zip(&s.mesh_sizes).enumerate() {
                        println!("  level {i}: h = {h:.4e}, {d} unknowns");
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
    }
}
