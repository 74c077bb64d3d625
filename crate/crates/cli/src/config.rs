//! Experiment configuration: JSON loading, default filling and the echo that
//! marks every filled-in value.

use std::path::{Path, PathBuf};

use elasteig_core::adaptive::{
    Geometry, LoopKind, Reference, StudyConfig, DEFAULT_FRACTION, DEFAULT_MAX_DOFS, DEFAULT_MAX_ITERATIONS,
};
use elasteig_core::coefficients::{MaterialModel, MaterialSpec};
use elasteig_core::eigensolve::EigenOptions;
use elasteig_core::fem::{ElementFamily, DEFAULT_QUAD_DEGREE, MAX_DEGREE};
use elasteig_core::mesh::{Mesh, MeshFormat};
use elasteig_core::{Error as CoreError, Execution};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub name: String,
    pub geometry: Geometry,
    pub material: MaterialSpec,
    pub family: ElementFamily,
    /// 1-based mode indices.
    pub modes: Vec<usize>,
    pub references: Vec<Reference>,
    /// Mesh level of a single solve.
    pub level: usize,
    pub study: StudySection,
    pub eigen: EigenSection,
    pub quad_degree: usize,
    pub output: OutputSection,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    pub kind: LoopKind,
    pub levels: Vec<usize>,
    pub initial_level: usize,
    pub fraction: f64,
    pub max_dofs: usize,
    pub max_iterations: usize,
    /// Poisson ratios run one after another; empty means `material.nu` only.
    pub poisson_sweep: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenSection {
    pub k: usize,
    pub shift: f64,
    pub tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
    pub buffer: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub table: bool,
    pub plot: bool,
    pub matrices: bool,
    pub indicators: bool,
}

/// Values given on the command line; they take precedence over the file.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Overrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

pub struct LoadedConfig {
    pub config: ExperimentConfig,
    /// The effective configuration with filled-in leaves written as
    /// `{"value": v, "defaulted": true}`.
    pub echo: Value,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<CoreError> for ConfigError {
    fn from(e: CoreError) -> Self {
        ConfigError(e.to_string())
    }
}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// Replaces every `{"value": v, "defaulted": true}` object by `v`, so an echo
/// can be fed back as a configuration.
pub fn strip_markers(v: &mut Value) {
    match v {
        Value::Object(map) => {
            let is_marker = map.len() == 2 && map.contains_key("value") && map.get("defaulted") == Some(&Value::Bool(true));
            if is_marker {
                let mut inner = map.remove("value").expect("marker has a value");
                strip_markers(&mut inner);
                *v = inner;
            } else {
                map.values_mut().for_each(strip_markers);
            }
        }
        Value::Array(items) => items.iter_mut().for_each(strip_markers),
        _ => {}
    }
}

/// Inserts every key of `defaults` missing from `target`, recursing into
/// objects present on both sides, and records the path of each inserted leaf.
fn fill(target: &mut Map<String, Value>, defaults: &Map<String, Value>, path: &mut Vec<String>, filled: &mut Vec<Vec<String>>) {
    for (key, dv) in defaults {
        path.push(key.clone());
        match target.get_mut(key) {
            None => {
                collect_leaves(dv, path, filled);
                target.insert(key.clone(), dv.clone());
            }
            Some(Value::Object(t)) => {
                if let Value::Object(d) = dv {
                    fill(t, d, path, filled);
                }
            }
            Some(_) => {}
        }
        path.pop();
    }
}

fn collect_leaves(v: &Value, path: &mut Vec<String>, out: &mut Vec<Vec<String>>) {
    match v {
        Value::Object(map) if !map.is_empty() => {
            for (k, child) in map {
                path.push(k.clone());
                collect_leaves(child, path, out);
                path.pop();
            }
        }
        _ => out.push(path.clone()),
    }
}

fn mark_defaulted(v: &mut Value, path: &[String]) {
    let Some((head, rest)) = path.split_first() else {
        let inner = v.take();
        *v = json!({"value": inner, "defaulted": true});
        return;
    };
    if let Some(child) = v.get_mut(head) {
        mark_defaulted(child, rest);
    }
}

fn base_defaults(name: &str) -> Value {
    let eigen = EigenOptions::default();
    json!({
        "schema_version": SCHEMA_VERSION,
        "name": name,
        "family": "taylor_hood",
        "modes": [1],
        "references": [],
        "material": {"rho": 1.0},
        "study": {
            "kind": "uniform",
            "levels": [8, 16, 32, 64],
            "initial_level": 4,
            "fraction": DEFAULT_FRACTION,
            "max_dofs": DEFAULT_MAX_DOFS,
            "max_iterations": DEFAULT_MAX_ITERATIONS,
            "poisson_sweep": [],
        },
        "eigen": {
            "k": eigen.k,
            "shift": eigen.shift,
            "tol": eigen.tol,
            "max_restarts": eigen.max_restarts,
            "seed": eigen.seed,
            "buffer": eigen.buffer,
        },
        "quad_degree": DEFAULT_QUAD_DEGREE,
        "output": {
            "dir": format!("out/{name}"),
            "table": true,
            "plot": true,
            "matrices": false,
            "indicators": false,
        },
    })
}

/// Defaults that depend on values already present: boundary sides and mesh
/// format of the geometry, and the solve level.
fn dependent_defaults(root: &Map<String, Value>) -> Value {
    let mut d = Map::new();
    if let Some(Value::Object(geo)) = root.get("geometry") {
        match geo.get("kind").and_then(Value::as_str) {
            Some("unit_square") | Some("three_strip_square") => {
                d.insert(
                    "geometry".into(),
                    json!({"sides": {"bottom": "dirichlet", "right": "neumann", "top": "neumann", "left": "neumann"}}),
                );
            }
            Some("file") => {
                if let Some(p) = geo.get("path").and_then(Value::as_str) {
                    let format = MeshFormat::from_path(Path::new(p));
                    d.insert("geometry".into(), json!({ "format": format }));
                }
            }
            _ => {}
        }
    }
    let study = root.get("study");
    let adaptive = study.and_then(|s| s.get("kind")).and_then(Value::as_str) == Some("adaptive");
    let level = if adaptive {
        study.and_then(|s| s.get("initial_level")).cloned()
    } else {
        study
            .and_then(|s| s.get("levels"))
            .and_then(Value::as_array)
            .and_then(|l| l.last())
            .cloned()
    };
    if let Some(level) = level {
        d.insert("level".into(), level);
    }
    Value::Object(d)
}

/// Reads, completes and validates a configuration file.
pub fn load(path: &Path, overrides: &Overrides) -> Result<LoadedConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
    let mut root: Value =
        serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: invalid JSON: {e}", path.display())))?;
    strip_markers(&mut root);
    let Value::Object(map) = &mut root else {
        return err(format!("{}: the configuration must be a JSON object", path.display()));
    };
    if !map.contains_key("geometry") {
        return err("missing required field 'geometry'");
    }
    if !map.contains_key("material") {
        return err("missing required field 'material'");
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("experiment").to_string();
    let name = map.get("name").and_then(Value::as_str).map(str::to_string).unwrap_or(stem);

    let mut filled = Vec::new();
    let Value::Object(base) = base_defaults(&name) else { unreachable!() };
    fill(map, &base, &mut Vec::new(), &mut filled);
    let Value::Object(dependent) = dependent_defaults(map) else { unreachable!() };
    fill(map, &dependent, &mut Vec::new(), &mut filled);

    if let Some(out) = &overrides.out {
        map.entry("output").or_insert_with(|| json!({}))["dir"] = json!(out);
        filled.retain(|p| p != &["output", "dir"]);
    }
    if let Some(seed) = overrides.seed {
        map.entry("eigen").or_insert_with(|| json!({}))["seed"] = json!(seed);
        filled.retain(|p| p != &["eigen", "seed"]);
    }

    let mut echo = root.clone();
    for p in &filled {
        mark_defaulted(&mut echo, p);
    }

    let mut config: ExperimentConfig =
        serde_json::from_value(root).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    if let Geometry::File { path: mesh_path, .. } = &mut config.geometry {
        if mesh_path.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            *mesh_path = base.join(&*mesh_path);
        }
    }
    config.validate()?;
    Ok(LoadedConfig {
        config,
        echo,
    })
}

impl ExperimentConfig {
    /// Checks that do not need a mesh.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return err(format!(
                "unsupported schema_version {} (this build reads {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        for nu in self.poisson_values() {
            check_poisson(nu)?;
        }
        MaterialModel::from_spec(&self.material)?;
        if let Geometry::File { path, .. } = &self.geometry {
            if !path.is_file() {
                return err(format!("mesh file not found: {}", path.display()));
            }
        }
        if let Geometry::ThreeStripSquare { .. } = self.geometry {
            let levels = std::iter::once(self.level).chain(match self.study.kind {
                LoopKind::Uniform => self.study.levels.clone(),
                LoopKind::Adaptive => vec![self.study.initial_level],
            });
            for n in levels {
                if n == 0 || n % 3 != 0 {
                    return err(format!("three-strip levels must be positive multiples of 3, got {n}"));
                }
            }
        }
        if self.eigen.k == 0 {
            return err("eigen.k must be at least 1");
        }
        if !(self.eigen.tol > 0.0 && self.eigen.tol < 1.0) {
            return err(format!("eigen.tol must lie in (0, 1), got {}", self.eigen.tol));
        }
        if !self.eigen.shift.is_finite() {
            return err("eigen.shift must be finite");
        }
        if !(2..=MAX_DEGREE).contains(&self.quad_degree) {
            return err(format!("quad_degree must lie in 2..={MAX_DEGREE}, got {}", self.quad_degree));
        }
        if self.study.max_dofs == 0 {
            return err("study.max_dofs must be positive");
        }
        self.study_config(self.poisson_values()[0], Execution::Sequential)?.validate()?;
        Ok(())
    }

    /// Poisson ratios a study runs.
    pub fn poisson_values(&self) -> Vec<f64> {
        if self.study.poisson_sweep.is_empty() {
            vec![self.material.nu]
        } else {
            self.study.poisson_sweep.clone()
        }
    }

    pub fn material_model(&self, nu: f64) -> Result<MaterialModel, ConfigError> {
        check_poisson(nu)?;
        Ok(MaterialModel::from_spec(&self.material)?.with_poisson(nu)?)
    }

    pub fn eigen_options(&self) -> EigenOptions {
        let top = self.modes.iter().copied().max().unwrap_or(1);
        EigenOptions {
            k: self.eigen.k.max(top),
            shift: self.eigen.shift,
            tol: self.eigen.tol,
            max_restarts: self.eigen.max_restarts,
            seed: self.eigen.seed,
            buffer: self.eigen.buffer,
            subspace: None,
        }
    }

    pub fn study_config(&self, nu: f64, exec: Execution) -> Result<StudyConfig, ConfigError> {
        Ok(StudyConfig {
            geometry: self.geometry.clone(),
            material: self.material_model(nu)?,
            family: self.family,
            modes: self.modes.clone(),
            references: self.references.clone(),
            kind: self.study.kind,
            levels: self.study.levels.clone(),
            initial_level: self.study.initial_level,
            fraction: self.study.fraction,
            max_dofs: self.study.max_dofs,
            max_iterations: self.study.max_iterations,
            eigen: self.eigen_options(),
            quad_degree: self.quad_degree,
            exec,
        })
    }
}

/// `0 < ν ≤ 0.5`: the mixed formulation stores `1/λ`, which is unbounded at 0.
pub fn check_poisson(nu: f64) -> Result<(), ConfigError> {
    if !(nu > 0.0 && nu <= 0.5) {
        return err(format!(
            "poisson ratio out of range: {nu} (the mixed formulation needs 0 < nu <= 0.5)"
        ));
    }
    Ok(())
}

/// Mesh-dependent checks: moduli positive on every cell and a well-posed
/// pressure in the Stokes limit.
pub fn check_mesh(mesh: &Mesh, model: &MaterialModel) -> Result<(), ConfigError> {
    model.validate_on(mesh)?;
    if model.stokes_limit() && !mesh.has_neumann_boundary() {
        return Err(CoreError::PressureNonUnique.into());
    }
    Ok(())
}
