use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use teig::mesh::{build_builtin_domain, Domain, Mesh};
use teig::run::{parse_eigenvalues_csv, EIGENVALUES_HEADER};

fn teig(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_teig")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn small_config(dir: &Path, extra_discretization: &str, mode: &str) -> String {
    format!(
        "[domain]\nbuiltin = unit_square\nh0 = 0.5\n\n[coefficient]\nn = 16\n\n\
         [discretization]\ndegree = 2\nlevels = 1\n{extra_discretization}\n\n\
         [solver]\nk = 2\nshift = 0.5\nmode = {mode}\n\n[output]\ndir = {}\n",
        dir.display()
    )
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn run_writes_outputs_and_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let cfg = write(tmp.path(), "run.conf", &small_config(&out_dir, "", "both"));
    let out = teig(&["run", &cfg]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("outputs written to"), "{stdout}");
    for f in ["eigenvalues.csv", "orders.csv", "config.echo", "run.json"] {
        assert!(out_dir.join(f).is_file(), "{f} missing");
    }
    let csv = fs::read_to_string(out_dir.join("eigenvalues.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some(EIGENVALUES_HEADER));
    let rows = parse_eigenvalues_csv(&csv).unwrap();
    assert!(rows.len() >= 8, "two schemes, two levels, k = 2: {} rows", rows.len());

    // the echoed configuration reproduces the run
    let echo = out_dir.join("config.echo").display().to_string();
    let again = teig(&["run", "--quiet", &echo]);
    assert_eq!(code(&again), 0);
    assert_eq!(fs::read_to_string(out_dir.join("eigenvalues.csv")).unwrap(), csv);
}

#[test]
fn check_reports_levels() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.conf", &small_config(&tmp.path().join("o"), "", "single"));
    let out = teig(&["check", &cfg]);
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("case I"), "{stdout}");
    assert!(stdout.contains("level 1"), "{stdout}");
    assert!(!tmp.path().join("o").exists(), "check must not write outputs");
}

#[test]
fn config_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let base = small_config(&tmp.path().join("o"), "", "both");
    let cases = [
        ("unknown_key.conf", base.replace("levels = 1", "levels = 1\nlevles = 2")),
        ("bad_value.conf", base.replace("k = 2", "k = two")),
        ("wrong_case.conf", base.replace("n = 16", "n = 16\ncase = II")),
        ("bad_section.conf", format!("{base}\n[extras]\nx = 1\n")),
        ("no_domain.conf", base.replace("builtin = unit_square\n", "")),
    ];
    for (name, text) in cases {
        let cfg = write(tmp.path(), name, &text);
        for cmd in ["check", "run"] {
            let out = teig(&[cmd, &cfg]);
            assert_eq!(code(&out), 2, "{cmd} {name}: {}", String::from_utf8_lossy(&out.stderr));
            assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
        }
    }
    let missing = tmp.path().join("absent.conf").display().to_string();
    assert_eq!(code(&teig(&["run", &missing])), 2);
}

#[test]
fn index_outside_declared_bounds_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let text = small_config(&tmp.path().join("o"), "", "single")
        .replace("n = 16", "n = 4 + 10 * x1\nn_s = 4\nn_b = 6");
    let cfg = write(tmp.path(), "bounds.conf", &text);
    assert_eq!(code(&teig(&["run", &cfg])), 2);
}

#[test]
fn singular_operator_exits_three_with_partial_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let cfg = write(tmp.path(), "singular.conf", &small_config(&out_dir, "p_degree = m", "multi"));
    let out = teig(&["run", &cfg]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("partial outputs"));
    assert!(out_dir.join("config.echo").is_file());
}

#[test]
fn mesh_info_and_refine() {
    let tmp = tempfile::tempdir().unwrap();
    let mesh = build_builtin_domain(&Domain::LShape, 0.5).unwrap();
    let path = tmp.path().join("l.mesh");
    mesh.save(&path).unwrap();
    let p = path.display().to_string();

    let info = teig(&["mesh-info", &p]);
    assert_eq!(code(&info), 0);
    let text = String::from_utf8_lossy(&info.stdout);
    assert!(text.contains(&format!("triangles       {}", mesh.num_triangles())), "{text}");
    assert!(text.contains("valid           yes"));

    let refined = tmp.path().join("l2.mesh").display().to_string();
    assert_eq!(code(&teig(&["refine", &p, "2", "-o", &refined])), 0);
    let fine = Mesh::load(&refined).unwrap();
    assert_eq!(fine.num_triangles(), 16 * mesh.num_triangles());
    assert!(fine.validate().is_empty());

    let stdout = teig(&["refine", &p, "1"]);
    assert_eq!(code(&stdout), 0);
    let once = Mesh::parse(&String::from_utf8_lossy(&stdout.stdout), "stdout").unwrap();
    assert_eq!(once.num_triangles(), 4 * mesh.num_triangles());

    let broken = write(tmp.path(), "broken.mesh", "3 1 3\n0 0\n1 0\n0 1\n1 2 7\n1 2\n2 3\n3 1\n");
    assert_eq!(code(&teig(&["mesh-info", &broken])), 2);
    assert_eq!(code(&teig(&["refine", &broken, "1"])), 2);
    assert_eq!(code(&teig(&["mesh-info", "/nonexistent/x.mesh"])), 2);
}
