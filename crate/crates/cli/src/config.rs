//! TOML experiment configuration.
//!
//! ```toml
//! study = "h_study"            # patch | p_study | h_study | collapse
//! solution = "u1"              # u1 | u2; defaults to u2 for patch, u1 otherwise
//! p = [1, 2]
//! choices = ["standard"]       # default: all three
//! stabilizations = ["S2"]      # default: ["S2"]
//! condition = true             # estimate κ of the reduced matrix (default true)
//! output = "out"               # overridden by --out
//!
//! [mesh]
//! kind = "cube"                # cube: n = [...]; collapse: levels = [...]; file: paths = [...]
//! n = [2, 4, 8]
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use vem3d_core::elemvem::{BasisChoice, Stabilization};
use vem3d_core::mesh::{build_collapsing_mesh, build_cube_mesh, load_mesh, PolyMesh};
use vem3d_core::problems::ExactSolution;

/// Largest degree accepted without `--allow-extreme-p`.
pub const DESK_MAX_P: u32 = 6;
pub const HARD_MAX_P: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Study {
    Patch,
    PStudy,
    HStudy,
    Collapse,
}

impl Study {
    pub fn name(self) -> &'static str {
        match self {
            Study::Patch => "patch",
            Study::PStudy => "p_study",
            Study::HStudy => "h_study",
            Study::Collapse => "collapse",
        }
    }
}

impl fmt::Display for Study {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum MeshSpec {
    Cube { n: Vec<usize> },
    Collapse { levels: Vec<u32> },
    File { paths: Vec<PathBuf> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    study: Study,
    solution: Option<String>,
    p: Vec<u32>,
    choices: Option<Vec<String>>,
    stabilizations: Option<Vec<String>>,
    condition: Option<bool>,
    output: Option<PathBuf>,
    mesh: MeshSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    Cube(usize),
    Collapse(u32),
    File(PathBuf),
}

impl MeshSource {
    /// Identifier used in the `mesh` column.
    pub fn id(&self) -> String {
        match self {
            MeshSource::Cube(n) => format!("cube-{n}"),
            MeshSource::Collapse(k) => format!("collapse-{k}"),
            MeshSource::File(p) => p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned()),
        }
    }

    pub fn build(&self) -> vem3d_core::Result<PolyMesh> {
        match self {
            MeshSource::Cube(n) => build_cube_mesh(*n),
            MeshSource::Collapse(k) => build_collapsing_mesh(*k),
            MeshSource::File(p) => load_mesh(p),
        }
    }

    pub fn level(&self) -> Option<u32> {
        match self {
            MeshSource::Collapse(k) => Some(*k),
            _ => None,
        }
    }
}

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub allow_extreme_p: bool,
}

/// A validated study: the cross product meshes × p × choices × stabilizations.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub study: Study,
    pub solution: ExactSolution,
    pub degrees: Vec<u32>,
    pub choices: Vec<BasisChoice>,
    pub stabilizations: Vec<Stabilization>,
    pub meshes: Vec<MeshSource>,
    pub condition: bool,
    pub output: PathBuf,
    /// Degrees above the desk-scale range that were explicitly allowed.
    pub extreme_degrees: Vec<u32>,
}

impl Experiment {
    pub fn load(path: &Path, opts: &RunOptions) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base, opts).with_context(|| format!("in {}", path.display()))
    }

    /// Parses a configuration; relative mesh paths are taken from `base`.
    pub fn parse(text: &str, base: &Path, opts: &RunOptions) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text)?;
        if raw.p.is_empty() {
            bail!("the p list is empty");
        }
        let mut extreme = Vec::new();
        for &p in &raw.p {
            if p == 0 {
                bail!("polynomial degree must be at least 1");
            }
            if p > HARD_MAX_P {
                bail!("degree {p} exceeds the supported maximum {HARD_MAX_P}");
            }
            if p > DESK_MAX_P {
                if !opts.allow_extreme_p {
                    bail!("degree {p} is above {DESK_MAX_P}; pass --allow-extreme-p to run it");
                }
                extreme.push(p);
            }
        }
        let solution = match raw.solution.as_deref() {
            Some(s) => s.parse::<ExactSolution>()?,
            None if raw.study == Study::Patch => ExactSolution::Linear,
            None => ExactSolution::Sine,
        };
        let choices = match raw.choices {
            Some(list) if list.is_empty() => bail!("the choices list is empty"),
            Some(list) => list.iter().map(|s| s.parse()).collect::<vem3d_core::Result<Vec<BasisChoice>>>()?,
            None => BasisChoice::ALL.to_vec(),
        };
        let stabilizations = match raw.stabilizations {
            Some(list) if list.is_empty() => bail!("the stabilizations list is empty"),
            Some(list) => list.iter().map(|s| s.parse()).collect::<vem3d_core::Result<Vec<Stabilization>>>()?,
            None => vec![Stabilization::S2],
        };
        let meshes: Vec<MeshSource> = match raw.mesh {
            MeshSpec::Cube { n } => n.into_iter().map(MeshSource::Cube).collect(),
            MeshSpec::Collapse { levels } => levels.into_iter().map(MeshSource::Collapse).collect(),
            MeshSpec::File { paths } => paths.into_iter().map(|p| MeshSource::File(base.join(p))).collect(),
        };
        if meshes.is_empty() {
            bail!("no meshes given");
        }
        let output = opts.out.clone().or(raw.output).unwrap_or_else(|| PathBuf::from("out"));
        Ok(Experiment {
            study: raw.study,
            solution,
            degrees: raw.p,
            choices,
            stabilizations,
            meshes,
            condition: raw.condition.unwrap_or(true),
            output,
            extreme_degrees: extreme,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "study = \"p_study\"\np = [1, 2]\n[mesh]\nkind = \"cube\"\nn = [2]\n";

    #[test]
    fn defaults() {
        let e = Experiment::parse(BASE, Path::new("."), &RunOptions::default()).unwrap();
        assert_eq!(e.solution, ExactSolution::Sine);
        assert_eq!(e.choices, BasisChoice::ALL.to_vec());
        assert_eq!(e.stabilizations, vec![Stabilization::S2]);
        assert_eq!(e.meshes, vec![MeshSource::Cube(2)]);
        assert!(e.condition);
        assert_eq!(e.output, PathBuf::from("out"));
    }

    #[test]
    fn patch_defaults_to_linear_solution() {
        let text = BASE.replace("p_study", "patch");
        let e = Experiment::parse(&text, Path::new("."), &RunOptions::default()).unwrap();
        assert_eq!(e.solution, ExactSolution::Linear);
    }

    #[test]
    fn degree_limits() {
        let text = BASE.replace("[1, 2]", "[7]");
        assert!(Experiment::parse(&text, Path::new("."), &RunOptions::default()).is_err());
        let opts = RunOptions {
            allow_extreme_p: true,
            ..Default::default()
        };
        assert_eq!(Experiment::parse(&text, Path::new("."), &opts).unwrap().extreme_degrees, vec![7]);
        let text = BASE.replace("[1, 2]", "[11]");
        assert!(Experiment::parse(&text, Path::new("."), &opts).is_err());
        let text = BASE.replace("[1, 2]", "[]");
        assert!(Experiment::parse(&text, Path::new("."), &opts).is_err());
    }

    #[test]
    fn rejects_unknown_names() {
        let text = format!("choices = [\"fancy\"]\n{BASE}");
        assert!(Experiment::parse(&text, Path::new("."), &RunOptions::default()).is_err());
        let text = BASE.replace("kind = \"cube\"", "kind = \"sphere\"");
        assert!(Experiment::parse(&text, Path::new("."), &RunOptions::default()).is_err());
    }

    #[test]
    fn out_flag_overrides_file_and_paths_are_relative() {
        let text = "study = \"patch\"\np = [1]\noutput = \"a\"\n[mesh]\nkind = \"file\"\npaths = [\"m.mesh\"]\n";
        let opts = RunOptions {
            out: Some(PathBuf::from("b")),
            ..Default::default()
        };
        let e = Experiment::parse(text, Path::new("/data"), &opts).unwrap();
        assert_eq!(e.output, PathBuf::from("b"));
        assert_eq!(e.meshes, vec![MeshSource::File(PathBuf::from("/data/m.mesh"))]);
        assert_eq!(e.meshes[0].id(), "m");
    }
}
