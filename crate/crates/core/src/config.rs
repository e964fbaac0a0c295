//! Run configuration: a line-oriented `key = value` file with sections.
//!
//! ```text
//! [domain]
//! builtin = unit_square        # or: mesh = coarse.mesh, polygon = 0 0; 2 0; 2 1; 0 1
//! h0 = 0.125
//!
//! [coefficient]
//! n = x1^2 + x2^2 + 4
//! n_s = 4
//! n_b = 6
//!
//! [discretization]
//! degree = 2
//! levels = 4
//!
//! [solver]
//! k = 6
//! mode = both
//!
//! [output]
//! dir = out
//! ```
//!
//! Unknown sections and keys are errors. Relative paths are resolved against the directory of the
//! configuration file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::json;
use thiserror::Error;

use crate::assembly::{BForm, Case, Material};
use crate::coefficient::{parse_coefficient, Coefficient};
use crate::eigen::ArnoldiOptions;
use crate::fespace::ProductDegrees;
use crate::mesh::{build_builtin_domain, check_simple_polygon, Domain, Mesh, MeshError, Point2};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown section [{name}]")]
    UnknownSection { line: usize, name: String },
    #[error("line {line}: unknown key `{key}` in [{section}]")]
    UnknownKey { line: usize, section: String, key: String },
    #[error("line {line}: duplicate key `{key}` (first set on line {first})")]
    Duplicate { line: usize, first: usize, key: String },
    #[error("line {line}: invalid value for `{key}`: {message}")]
    Invalid { line: usize, key: String, message: String },
    #[error("missing required key `{0}`")]
    Missing(String),
    #[error("{0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum DomainSource {
    Builtin(Domain),
    MeshFile(PathBuf),
    Polygon(Vec<Point2>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Single,
    Multi,
    Both,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Single => "single",
            Mode::Multi => "multi",
            Mode::Both => "both",
        }
    }

    pub fn single(self) -> bool {
        matches!(self, Mode::Single | Mode::Both)
    }

    pub fn multi(self) -> bool {
        matches!(self, Mode::Multi | Mode::Both)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub domain: DomainSource,
    /// Target size of the initial mesh (built-in and polygon domains).
    pub h0: f64,
    pub n: Coefficient,
    pub n_s: f64,
    pub n_b: f64,
    /// Declared case; selected from the bounds when `None`.
    pub case: Option<Case>,
    pub degree: usize,
    pub sigma_degree: usize,
    pub p_degree: usize,
    /// Number of red refinements of the initial mesh.
    pub levels: usize,
    pub bform: BForm,
    pub solver: ArnoldiOptions,
    pub mode: Mode,
    pub output_dir: PathBuf,
}

const KEYS: &[(&str, &[&str])] = &[
    ("domain", &["builtin", "mesh", "polygon", "h0"]),
    ("coefficient", &["n", "n_s", "n_b", "case"]),
    ("discretization", &["degree", "sigma_degree", "p_degree", "levels", "bform"]),
    ("solver", &["k", "shift", "tol", "max_restarts", "seed", "ncv", "mode"]),
    ("output", &["dir"]),
];

struct Entries {
    map: BTreeMap<(String, String), (String, usize)>,
}

impl Entries {
    fn get(&self, section: &str, key: &str) -> Option<(&str, usize)> {
        self.map
            .get(&(section.to_string(), key.to_string()))
            .map(|(v, l)| (v.as_str(), *l))
    }

    fn parse<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(section, key) {
            None => Ok(None),
            Some((v, line)) => v.parse::<T>().map(Some).map_err(|e| ConfigError::Invalid {
                line,
                key: key.to_string(),
                message: format!("`{v}`: {e}"),
            }),
        }
    }

    fn line(&self, section: &str, key: &str) -> usize {
        self.get(section, key).map(|(_, l)| l).unwrap_or(0)
    }
}

fn tokenize(text: &str) -> Result<Entries, ConfigError> {
    let mut map: BTreeMap<(String, String), (String, usize)> = BTreeMap::new();
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::Syntax {
                    line,
                    message: format!("malformed section header `{content}`"),
                })?
                .trim();
            if !KEYS.iter().any(|(s, _)| *s == name) {
                return Err(ConfigError::UnknownSection {
                    line,
                    name: name.to_string(),
                });
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            message: format!("expected `key = value`, found `{content}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        let sec = section.as_deref().ok_or_else(|| ConfigError::Syntax {
            line,
            message: format!("key `{key}` appears before any section header"),
        })?;
        let known = KEYS.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
        if !known.contains(&key) {
            return Err(ConfigError::UnknownKey {
                line,
                section: sec.to_string(),
                key: key.to_string(),
            });
        }
        if value.is_empty() {
            return Err(ConfigError::Invalid {
                line,
                key: key.to_string(),
                message: "empty value".into(),
            });
        }
        let k = (sec.to_string(), key.to_string());
        if let Some((_, first)) = map.get(&k) {
            return Err(ConfigError::Duplicate {
                line,
                first: *first,
                key: key.to_string(),
            });
        }
        map.insert(k, (value.to_string(), line));
    }
    Ok(Entries { map })
}

fn parse_polygon(text: &str, line: usize) -> Result<Vec<Point2>, ConfigError> {
    let bad = |message: String| ConfigError::Invalid {
        line,
        key: "polygon".into(),
        message,
    };
    let mut pts = Vec::new();
    for vertex in text.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let coords: Vec<&str> = vertex.split_whitespace().collect();
        if coords.len() != 2 {
            return Err(bad(format!("vertex `{vertex}` must have two coordinates")));
        }
        let x: f64 = coords[0].parse().map_err(|_| bad(format!("bad coordinate `{}`", coords[0])))?;
        let y: f64 = coords[1].parse().map_err(|_| bad(format!("bad coordinate `{}`", coords[1])))?;
        pts.push(Point2::new(x, y));
    }
    check_simple_polygon(&pts).map_err(|e| bad(e.to_string()))?;
    Ok(pts)
}

/// Parses `m-1`, `m` or an explicit integer, which must equal `m - 1` or `m`.
fn parse_relative_degree(entries: &Entries, key: &str, m: usize) -> Result<usize, ConfigError> {
    let Some((v, line)) = entries.get("discretization", key) else {
        return Ok(m - 1);
    };
    let d = match v.replace(' ', "").as_str() {
        "m-1" => m - 1,
        "m" => m,
        other => other.parse::<usize>().map_err(|_| ConfigError::Invalid {
            line,
            key: key.into(),
            message: format!("`{v}` is not `m-1`, `m` or an integer"),
        })?,
    };
    if d + 1 != m && d != m {
        return Err(ConfigError::Invalid {
            line,
            key: key.into(),
            message: format!("degree {d} must be m-1 = {} or m = {m}", m - 1),
        });
    }
    Ok(d)
}

impl RunConfig {
    /// Reads and validates a configuration file.
    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        RunConfig::parse(&text, &base)
    }

    /// Parses configuration text; relative paths are joined onto `base`.
    pub fn parse(text: &str, base: &Path) -> Result<RunConfig, ConfigError> {
        let e = tokenize(text)?;
        let resolve = |p: &str| {
            let p = PathBuf::from(p);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };

        let sources = ["builtin", "mesh", "polygon"]
            .iter()
            .filter(|k| e.get("domain", k).is_some())
            .count();
        if sources != 1 {
            return Err(ConfigError::Inconsistent(
                "[domain] needs exactly one of `builtin`, `mesh`, `polygon`".into(),
            ));
        }
        let domain = if let Some((name, line)) = e.get("domain", "builtin") {
            DomainSource::Builtin(Domain::from_name(name).ok_or_else(|| ConfigError::Invalid {
                line,
                key: "builtin".into(),
                message: format!("unknown domain `{name}` (unit_square, right_triangle, l_shape)"),
            })?)
        } else if let Some((p, _)) = e.get("domain", "mesh") {
            DomainSource::MeshFile(resolve(p))
        } else {
            let (v, line) = e.get("domain", "polygon").unwrap();
            DomainSource::Polygon(parse_polygon(v, line)?)
        };

        let degree: usize = e.parse("discretization", "degree")?.unwrap_or(2);
        if degree != 2 && degree != 3 {
            return Err(ConfigError::Invalid {
                line: e.line("discretization", "degree"),
                key: "degree".into(),
                message: format!("m = {degree} is not supported (2 or 3)"),
            });
        }
        let sigma_degree = parse_relative_degree(&e, "sigma_degree", degree)?;
        let p_degree = parse_relative_degree(&e, "p_degree", degree)?;

        let h0: Option<f64> = e.parse("domain", "h0")?;
        if h0.is_some() && matches!(domain, DomainSource::MeshFile(_)) {
            return Err(ConfigError::Invalid {
                line: e.line("domain", "h0"),
                key: "h0".into(),
                message: "`h0` does not apply to a mesh file".into(),
            });
        }
        let h0 = h0.unwrap_or(if degree == 2 { 0.125 } else { 0.25 });
        if !(h0 > 0.0 && h0.is_finite()) {
            return Err(ConfigError::Invalid {
                line: e.line("domain", "h0"),
                key: "h0".into(),
                message: format!("{h0} must be positive"),
            });
        }

        let (n_text, n_line) = e
            .get("coefficient", "n")
            .ok_or_else(|| ConfigError::Missing("coefficient.n".into()))?;
        let n = parse_coefficient(n_text).map_err(|err| ConfigError::Invalid {
            line: n_line,
            key: "n".into(),
            message: err.to_string(),
        })?;
        let n_s: Option<f64> = e.parse("coefficient", "n_s")?;
        let n_b: Option<f64> = e.parse("coefficient", "n_b")?;
        let (n_s, n_b) = match (&n, n_s, n_b) {
            (_, Some(s), Some(b)) => (s, b),
            (Coefficient::Constant(c), s, b) => (s.unwrap_or(*c), b.unwrap_or(*c)),
            (Coefficient::Expression { .. }, _, _) => {
                return Err(ConfigError::Inconsistent(
                    "a non-constant n needs both bounds `n_s` and `n_b`".into(),
                ))
            }
        };
        if let Coefficient::Constant(c) = n {
            if c < n_s || c > n_b {
                return Err(ConfigError::Inconsistent(format!(
                    "n = {c} lies outside the declared bounds [{n_s}, {n_b}]"
                )));
            }
        }
        let case = match e.get("coefficient", "case") {
            None | Some(("auto", _)) => None,
            Some(("I", _)) | Some(("1", _)) => Some(Case::I),
            Some(("II", _)) | Some(("2", _)) => Some(Case::II),
            Some((v, line)) => {
                return Err(ConfigError::Invalid {
                    line,
                    key: "case".into(),
                    message: format!("`{v}` is not I, II or auto"),
                })
            }
        };

        let levels: usize = e.parse("discretization", "levels")?.unwrap_or(4);
        if levels < 1 {
            return Err(ConfigError::Invalid {
                line: e.line("discretization", "levels"),
                key: "levels".into(),
                message: "at least one refinement is required".into(),
            });
        }
        let bform = match e.get("discretization", "bform") {
            None | Some(("standard", _)) => BForm::Standard,
            Some(("grad_grad", _)) => BForm::GradGrad,
            Some((v, line)) => {
                return Err(ConfigError::Invalid {
                    line,
                    key: "bform".into(),
                    message: format!("`{v}` is not standard or grad_grad"),
                })
            }
        };

        let d = ArnoldiOptions::default();
        let solver = ArnoldiOptions {
            k: e.parse("solver", "k")?.unwrap_or(d.k),
            shift: e.parse("solver", "shift")?.unwrap_or(d.shift),
            tol: e.parse("solver", "tol")?.unwrap_or(d.tol),
            max_restarts: e.parse("solver", "max_restarts")?.unwrap_or(d.max_restarts),
            ncv: e.parse("solver", "ncv")?,
            seed: e.parse("solver", "seed")?.unwrap_or(d.seed),
        };
        let invalid = |key: &str, message: String| ConfigError::Invalid {
            line: e.line("solver", key),
            key: key.into(),
            message,
        };
        if solver.k < 1 {
            return Err(invalid("k", "k must be at least 1".into()));
        }
        if !solver.shift.is_finite() {
            return Err(invalid("shift", "shift must be finite".into()));
        }
        if !(solver.tol > 0.0) {
            return Err(invalid("tol", "tol must be positive".into()));
        }
        if let Some(ncv) = solver.ncv {
            if ncv < solver.k + 4 {
                return Err(invalid("ncv", format!("ncv = {ncv} must be at least k + 4 = {}", solver.k + 4)));
            }
        }
        let mode = match e.get("solver", "mode") {
            None | Some(("both", _)) => Mode::Both,
            Some(("single", _)) => Mode::Single,
            Some(("multi", _)) => Mode::Multi,
            Some((v, line)) => {
                return Err(ConfigError::Invalid {
                    line,
                    key: "mode".into(),
                    message: format!("`{v}` is not single, multi or both"),
                })
            }
        };
        let output_dir = resolve(e.get("output", "dir").map(|(v, _)| v).unwrap_or("out"));

        let cfg = RunConfig {
            domain,
            h0,
            n,
            n_s,
            n_b,
            case,
            degree,
            sigma_degree,
            p_degree,
            levels,
            bform,
            solver,
            mode,
            output_dir,
        };
        cfg.material().map_err(|err| ConfigError::Inconsistent(err.to_string()))?;
        Ok(cfg)
    }

    pub fn material(&self) -> Result<Material, crate::assembly::AssemblyError> {
        Material::new(self.n.clone(), self.n_s, self.n_b, self.case)
    }

    pub fn degrees(&self) -> ProductDegrees {
        ProductDegrees::new(self.degree, self.sigma_degree, self.p_degree)
    }

    pub fn initial_mesh(&self) -> Result<Mesh, MeshError> {
        match &self.domain {
            DomainSource::Builtin(d) => build_builtin_domain(d, self.h0),
            DomainSource::Polygon(pts) => build_builtin_domain(&Domain::Polygon(pts.clone()), self.h0),
            DomainSource::MeshFile(p) => Mesh::load(p),
        }
    }

    /// Configuration text that parses back to `self` (paths absolute when `self` holds them so).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[domain]");
        match &self.domain {
            DomainSource::Builtin(d) => {
                let _ = writeln!(s, "builtin = {}", d.name());
            }
            DomainSource::MeshFile(p) => {
                let _ = writeln!(s, "mesh = {}", p.display());
            }
            DomainSource::Polygon(pts) => {
                let v: Vec<String> = pts.iter().map(|p| format!("{:?} {:?}", p.x1, p.x2)).collect();
                let _ = writeln!(s, "polygon = {}", v.join("; "));
            }
        }
        if !matches!(self.domain, DomainSource::MeshFile(_)) {
            let _ = writeln!(s, "h0 = {:?}", self.h0);
        }
        let _ = writeln!(s, "\n[coefficient]");
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "n_s = {:?}", self.n_s);
        let _ = writeln!(s, "n_b = {:?}", self.n_b);
        if let Some(c) = self.case {
            let _ = writeln!(s, "case = {c}");
        }
        let _ = writeln!(s, "\n[discretization]");
        let _ = writeln!(s, "degree = {}", self.degree);
        let _ = writeln!(s, "sigma_degree = {}", self.sigma_degree);
        let _ = writeln!(s, "p_degree = {}", self.p_degree);
        let _ = writeln!(s, "levels = {}", self.levels);
        let _ = writeln!(
            s,
            "bform = {}",
            match self.bform {
                BForm::Standard => "standard",
                BForm::GradGrad => "grad_grad",
            }
        );
        let _ = writeln!(s, "\n[solver]");
        let _ = writeln!(s, "k = {}", self.solver.k);
        let _ = writeln!(s, "shift = {:?}", self.solver.shift);
        let _ = writeln!(s, "tol = {:?}", self.solver.tol);
        let _ = writeln!(s, "max_restarts = {}", self.solver.max_restarts);
        let _ = writeln!(s, "seed = {}", self.solver.seed);
        if let Some(ncv) = self.solver.ncv {
            let _ = writeln!(s, "ncv = {ncv}");
        }
        let _ = writeln!(s, "mode = {}", self.mode.name());
        let _ = writeln!(s, "\n[output]");
        let _ = writeln!(s, "dir = {}", self.output_dir.display());
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        let domain = match &self.domain {
            DomainSource::Builtin(d) => json!({ "builtin": d.name(), "h0": self.h0 }),
            DomainSource::MeshFile(p) => json!({ "mesh": p.display().to_string() }),
            DomainSource::Polygon(pts) => json!({
                "polygon": pts.iter().map(|p| [p.x1, p.x2]).collect::<Vec<_>>(),
                "h0": self.h0,
            }),
        };
        json!({
            "domain": domain,
            "coefficient": {
                "n": self.n.to_string(),
                "n_s": self.n_s,
                "n_b": self.n_b,
                "case": self.material().map(|m| m.case.to_string()).unwrap_or_default(),
            },
            "discretization": {
                "degree": self.degree,
                "sigma_degree": self.sigma_degree,
                "p_degree": self.p_degree,
                "levels": self.levels,
                "bform": match self.bform { BForm::Standard => "standard", BForm::GradGrad => "grad_grad" },
            },
            "solver": self.solver,
            "mode": self.mode.name(),
            "output_dir": self.output_dir.display().to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = "\
[domain]
builtin = unit_square   # comment
h0 = 0.25

[coefficient]
n = 16

[discretization]
degree = 2
levels = 2

[solver]
k = 4
mode = single
";

    #[test]
    fn defaults_and_round_trip() {
        let c = RunConfig::parse(BASIC, Path::new("/tmp/x")).unwrap();
        assert_eq!(c.n_s, 16.0);
        assert_eq!(c.sigma_degree, 1);
        assert_eq!(c.solver.shift, 0.5);
        assert_eq!(c.mode, Mode::Single);
        assert_eq!(c.output_dir, PathBuf::from("/tmp/x/out"));
        let again = RunConfig::parse(&c.to_text(), Path::new("/elsewhere")).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn default_h0_follows_degree() {
        let text = BASIC.replace("h0 = 0.25\n", "").replace("degree = 2", "degree = 3");
        assert_eq!(RunConfig::parse(&text, Path::new(".")).unwrap().h0, 0.25);
        let text = BASIC.replace("h0 = 0.25\n", "");
        assert_eq!(RunConfig::parse(&text, Path::new(".")).unwrap().h0, 0.125);
    }

    #[test]
    fn unknown_key_reports_line() {
        let text = BASIC.replace("k = 4", "kk = 4");
        match RunConfig::parse(&text, Path::new(".")) {
            Err(ConfigError::UnknownKey { line, key, .. }) => {
                assert_eq!(line, 13);
                assert_eq!(key, "kk");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn case_contradiction_is_rejected() {
        let text = BASIC.replace("n = 16", "n = 16\nn_b = 0.5");
        assert!(RunConfig::parse(&text, Path::new(".")).is_err());
        let text = BASIC.replace("n = 16", "n = 16\ncase = II");
        assert!(matches!(RunConfig::parse(&text, Path::new(".")), Err(ConfigError::Inconsistent(_))));
    }

    #[test]
    fn expression_needs_bounds() {
        let text = BASIC.replace("n = 16", "n = x1^2 + x2^2 + 4");
        assert!(matches!(RunConfig::parse(&text, Path::new(".")), Err(ConfigError::Inconsistent(_))));
        let text = BASIC.replace("n = 16", "n = x1^2 + x2^2 + 4\nn_s = 4\nn_b = 6");
        let c = RunConfig::parse(&text, Path::new(".")).unwrap();
        assert_eq!(c.material().unwrap().case, Case::I);
    }

    #[test]
    fn polygon_and_mesh_sources() {
        let text = BASIC.replace("builtin = unit_square", "polygon = 0 0; 2 0; 2 1; 0 1");
        let c = RunConfig::parse(&text, Path::new(".")).unwrap();
        assert!(matches!(c.domain, DomainSource::Polygon(ref p) if p.len() == 4));
        assert_eq!(RunConfig::parse(&c.to_text(), Path::new(".")).unwrap(), c);
        let text = BASIC.replace("builtin = unit_square   # comment\nh0 = 0.25", "mesh = meshes/a.mesh");
        let c = RunConfig::parse(&text, Path::new("/cfg")).unwrap();
        assert_eq!(c.domain, DomainSource::MeshFile(PathBuf::from("/cfg/meshes/a.mesh")));
        let text = BASIC.replace("builtin = unit_square", "builtin = unit_square\nmesh = a.mesh");
        assert!(RunConfig::parse(&text, Path::new(".")).is_err());
    }

    #[test]
    fn malformed_values() {
        for (from, to) in [
            ("levels = 2", "levels = 0"),
            ("k = 4", "k = 0"),
            ("k = 4", "k = four"),
            ("degree = 2", "degree = 4"),
            ("mode = single", "mode = fast"),
            ("h0 = 0.25", "h0 = -1"),
            ("n = 16", "n = 16 +"),
            ("[solver]", "[solve]"),
            ("k = 4", "k = 4\nk = 5"),
            ("k = 4", "k"),
        ] {
            let text = BASIC.replace(from, to);
            assert!(RunConfig::parse(&text, Path::new(".")).is_err(), "{to}");
        }
    }
}
