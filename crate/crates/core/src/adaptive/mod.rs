//! Solve, estimate, mark and refine: uniform convergence studies and the
//! adaptive loop.

mod fit;

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use fit::{
    extrapolate_sequence, least_squares_line, power_law_fit, Extrapolation, ExtrapolationMethod, LineFit, RateFit,
};

use crate::coefficients::{project_coefficients, MaterialModel};
use crate::eigensolve::{cluster_eigenvalues, solve_eigen, EigenOptions, EigenResult, SaddleSystem, DEFAULT_CLUSTER_TOL};
use crate::error::{Error, Result};
use crate::estimator::{Eigenpair, ErrorIndicators, Estimator};
use crate::exec::Execution;
use crate::fem::{assemble, build_dof_map, AssemblyOptions, DofMap, ElementFamily};
use crate::mesh::{l_shape_mesh, load_mesh, refine, three_strip_square_mesh, unit_square_mesh_with, Mesh, MeshFormat, SideKinds};

/// Relative window for matching a tracked eigenvalue to the previous mesh.
pub const TRACKING_WINDOW: f64 = 0.2;
pub const DEFAULT_FRACTION: f64 = 0.5;
pub const DEFAULT_MAX_DOFS: usize = 300_000;
pub const DEFAULT_MAX_ITERATIONS: usize = 12;
/// Label of references taken from the study's own extrapolation.
pub const EXTRAPOLATED: &str = "extrapolated";

/// Domain and mesh family. For the built-in geometries a level is the number
/// of subdivisions per unit length; for a file it is the number of uniform
/// refinements applied to the loaded mesh.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Geometry {
    UnitSquare { sides: SideKinds },
    ThreeStripSquare { sides: SideKinds },
    LShape,
    File { path: PathBuf, format: MeshFormat },
}

impl Geometry {
    pub fn mesh(&self, level: usize) -> Result<Mesh> {
        match self {
            Geometry::UnitSquare { sides } => unit_square_mesh_with(level, *sides),
            Geometry::ThreeStripSquare { sides } => three_strip_square_mesh(level, *sides),
            Geometry::LShape => l_shape_mesh(level),
            Geometry::File { path, format } => {
                let mut mesh = load_mesh(path, *format)?;
                for _ in 0..level {
                    mesh = refine_all(&mesh);
                }
                Ok(mesh)
            }
        }
    }
}

pub fn refine_all(mesh: &Mesh) -> Mesh {
    let all: Vec<usize> = (0..mesh.num_cells()).collect();
    refine(mesh, &all).mesh
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopKind {
    Uniform,
    Adaptive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceQuantity {
    /// `√κ̂`.
    Frequency,
    /// `κ̂`.
    KappaHat,
}

/// Externally supplied exact value for one tracked mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    /// 1-based mode index.
    pub mode: usize,
    pub value: f64,
    pub quantity: ReferenceQuantity,
    pub provenance: String,
}

impl Reference {
    pub fn kappa_hat(&self) -> f64 {
        match self.quantity {
            ReferenceQuantity::Frequency => self.value * self.value,
            ReferenceQuantity::KappaHat => self.value,
        }
    }
}

#[derive(Clone, Debug)]
pub struct StudyConfig {
    pub geometry: Geometry,
    pub material: MaterialModel,
    pub family: ElementFamily,
    /// 1-based mode indices; the first one drives the estimator and marking.
    pub modes: Vec<usize>,
    pub references: Vec<Reference>,
    pub kind: LoopKind,
    /// Mesh levels of a uniform study, strictly increasing.
    pub levels: Vec<usize>,
    /// Starting level of an adaptive study.
    pub initial_level: usize,
    pub fraction: f64,
    pub max_dofs: usize,
    pub max_iterations: usize,
    pub eigen: EigenOptions,
    pub quad_degree: usize,
    pub exec: Execution,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.modes.is_empty() {
            return Err(Error::InvalidArgument("at least one mode must be tracked".into()));
        }
        if self.modes.contains(&0) {
            return Err(Error::InvalidArgument("mode indices are 1-based".into()));
        }
        if !(self.fraction > 0.0 && self.fraction <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "marking fraction must lie in (0, 1], got {}",
                self.fraction
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be at least 1".into()));
        }
        for r in &self.references {
            if !self.modes.contains(&r.mode) {
                return Err(Error::InvalidArgument(format!("reference for untracked mode {}", r.mode)));
            }
            if r.provenance.trim().is_empty() {
                return Err(Error::InvalidArgument(format!("reference for mode {} lacks a provenance label", r.mode)));
            }
            if !(r.value > 0.0 && r.value.is_finite()) {
                return Err(Error::InvalidArgument(format!("reference for mode {} must be positive", r.mode)));
            }
        }
        match self.kind {
            LoopKind::Uniform => {
                if self.levels.is_empty() {
                    return Err(Error::InvalidArgument("a uniform study needs at least one level".into()));
                }
                if self.levels.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidArgument("uniform levels must be strictly increasing".into()));
                }
            }
            LoopKind::Adaptive => {}
        }
        Ok(())
    }

    fn eigen_options(&self) -> EigenOptions {
        let top = self.modes.iter().copied().max().unwrap_or(1);
        EigenOptions {
            k: self.eigen.k.max(top + 1),
            ..self.eigen.clone()
        }
    }
}

/// A discrete eigenproblem solved on one mesh.
pub struct Discretization {
    pub dofs: DofMap,
    pub eigen: EigenResult,
}

/// Assembles and solves the eigenproblem on `mesh`.
pub fn solve_mesh(
    mesh: &Mesh,
    model: &MaterialModel,
    family: ElementFamily,
    eigen: &EigenOptions,
    quad_degree: usize,
    exec: Execution,
) -> Result<Discretization> {
    model.validate_on(mesh)?;
    let dofs = build_dof_map(mesh, family)?;
    let mats = assemble(mesh, &dofs, model, AssemblyOptions { quad_degree, exec })?;
    let system = SaddleSystem::new(&mats)?;
    let eigen = solve_eigen(&system, eigen)?;
    Ok(Discretization { dofs, eigen })
}

/// Indicators of pair `index` of a discretization.
pub fn estimate(
    mesh: &Mesh,
    model: &MaterialModel,
    disc: &Discretization,
    index: usize,
    quad_degree: usize,
    exec: Execution,
) -> Result<ErrorIndicators> {
    let proj = project_coefficients(model, mesh, quad_degree.max(2), exec)?;
    let u = disc.dofs.extend(&disc.eigen.displacements[index]);
    let pair = Eigenpair {
        u: &u,
        p: &disc.eigen.pressures[index],
        kappa: disc.eigen.kappas[index],
    };
    Estimator::new(mesh, &disc.dofs, model, &proj)?.assemble_indicators(&pair, exec)
}

/// Cells whose `η_T = √indicator` reaches `fraction · max η_T`. `indicators`
/// holds the squared per-cell values.
pub fn mark(indicators: &[f64], fraction: f64) -> Vec<usize> {
    let max = indicators.iter().cloned().fold(0.0f64, f64::max);
    let threshold = fraction * max.sqrt();
    let marked: Vec<usize> = (0..indicators.len())
        .filter(|&c| indicators[c].sqrt() >= threshold)
        .collect();
    if marked.is_empty() && !indicators.is_empty() {
        // all-zero or non-finite indicators: fall back to refining everything
        return (0..indicators.len()).collect();
    }
    marked
}

/// Reference resolved to `κ̂`, or absent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedReference {
    pub mode: usize,
    pub kappa_hat: Option<f64>,
    pub provenance: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Mesh level of a uniform study.
    pub level: Option<usize>,
    pub cells: usize,
    /// Total dofs: every displacement component and every pressure node.
    pub dofs: usize,
    pub free_dofs: usize,
    pub h_max: f64,
    /// Tracked `κ̂_h`, one per configured mode.
    pub kappa_hat: Vec<f64>,
    pub frequency: Vec<f64>,
    pub residual: Vec<f64>,
    /// 0-based position of each tracked mode in this mesh's spectrum.
    pub spectrum_index: Vec<usize>,
    /// Set when no eigenvalue was within the tracking window.
    pub crossing: Vec<bool>,
    pub err: Vec<Option<f64>>,
    pub eta: f64,
    pub theta: f64,
    pub eff: Option<f64>,
    pub marked: usize,
    pub restarts: usize,
    pub operator_applications: usize,
    pub wall_time_s: f64,
}

impl IterationRecord {
    pub fn eta_sq(&self) -> f64 {
        self.eta * self.eta
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RateAxis {
    /// `h_max`; the slope is the order `t` in `err ≈ C hᵗ`.
    H,
    Dofs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceHistory {
    pub kind: LoopKind,
    pub family: ElementFamily,
    pub poisson: f64,
    pub modes: Vec<usize>,
    pub references: Vec<ResolvedReference>,
    pub records: Vec<IterationRecord>,
    pub warnings: Vec<String>,
}

impl ConvergenceHistory {
    fn mode_position(&self, mode: usize) -> Result<usize> {
        self.modes
            .iter()
            .position(|&m| m == mode)
            .ok_or_else(|| Error::InvalidArgument(format!("mode {mode} is not tracked")))
    }

    /// Mesh-size proxy: `h_max` for uniform studies, `dofs^{-1/2}` for adaptive
    /// ones where `h_max` stalls.
    pub fn mesh_size(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| match self.kind {
                LoopKind::Uniform => r.h_max,
                LoopKind::Adaptive => (r.dofs as f64).powf(-0.5),
            })
            .collect()
    }

    pub fn kappa_hat(&self, mode: usize) -> Result<Vec<f64>> {
        let i = self.mode_position(mode)?;
        Ok(self.records.iter().map(|r| r.kappa_hat[i]).collect())
    }

    pub fn errors(&self, mode: usize) -> Result<Vec<f64>> {
        let i = self.mode_position(mode)?;
        Ok(self.records.iter().map(|r| r.err[i].unwrap_or(f64::NAN)).collect())
    }

    /// CSV, one row per iteration. Per-mode columns are suffixed `_m<mode>`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut header = vec!["iteration", "level", "cells", "dofs", "free_dofs", "h_max"]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>();
        for m in &self.modes {
            for col in ["kappa_hat", "frequency", "residual", "err", "crossing"] {
                header.push(format!("{col}_m{m}"));
            }
        }
        for col in ["eta", "eta_sq", "theta", "eff", "marked", "restarts", "wall_time_s"] {
            header.push(col.into());
        }
        writeln!(out, "{}", header.join(","))?;
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:e}"));
        for r in &self.records {
            let mut row = vec![
                r.iteration.to_string(),
                r.level.map_or(String::new(), |l| l.to_string()),
                r.cells.to_string(),
                r.dofs.to_string(),
                r.free_dofs.to_string(),
                format!("{:e}", r.h_max),
            ];
            for i in 0..self.modes.len() {
                row.push(format!("{:e}", r.kappa_hat[i]));
                row.push(format!("{:e}", r.frequency[i]));
                row.push(format!("{:e}", r.residual[i]));
                row.push(opt(r.err[i]));
                row.push(r.crossing[i].to_string());
            }
            row.push(format!("{:e}", r.eta));
            row.push(format!("{:e}", r.eta_sq()));
            row.push(format!("{:e}", r.theta));
            row.push(opt(r.eff));
            row.push(r.marked.to_string());
            row.push(r.restarts.to_string());
            row.push(format!("{:.6}", r.wall_time_s));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

pub fn fit_rate(history: &ConvergenceHistory, axis: RateAxis, mode: usize) -> Result<RateFit> {
    let err = history.errors(mode)?;
    let x: Vec<f64> = match axis {
        RateAxis::H => history.records.iter().map(|r| r.h_max).collect(),
        RateAxis::Dofs => history.records.iter().map(|r| r.dofs as f64).collect(),
    };
    power_law_fit(&x, &err)
}

/// Extrapolated `κ̂` of `mode` against the history's mesh-size proxy.
pub fn extrapolate(history: &ConvergenceHistory, mode: usize) -> Result<Extrapolation> {
    extrapolate_sequence(&history.mesh_size(), &history.kappa_hat(mode)?)
}

/// Study aborted by a failure; the iterations completed so far are kept.
#[derive(Debug)]
pub struct StudyError {
    pub history: ConvergenceHistory,
    pub error: Error,
}

impl std::fmt::Display for StudyError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (after {} completed iterations)", self.error, self.history.records.len())
    }
}

impl std::error::Error for StudyError {}

/// Matches each tracked mode to the cluster of the new spectrum nearest to its
/// previous value.
fn track(previous: Option<&[f64]>, modes: &[usize], kappas: &[f64]) -> (Vec<usize>, Vec<bool>) {
    let clusters = cluster_eigenvalues(kappas, DEFAULT_CLUSTER_TOL);
    let mut index = Vec::with_capacity(modes.len());
    let mut crossing = Vec::with_capacity(modes.len());
    for (i, &m) in modes.iter().enumerate() {
        let natural = (m - 1).min(kappas.len() - 1);
        let Some(prev) = previous.map(|p| p[i]) else {
            index.push(natural);
            crossing.push(false);
            continue;
        };
        let best = clusters
            .iter()
            .min_by(|a, b| (a.mean - prev).abs().total_cmp(&(b.mean - prev).abs()))
            .expect("nonempty spectrum");
        if (best.mean - prev).abs() <= TRACKING_WINDOW * prev.abs() {
            // inside a multiplet keep the member closest to the natural position
            let member = *best
                .members
                .iter()
                .min_by_key(|&&j| j.abs_diff(natural))
                .expect("nonempty cluster");
            index.push(member);
            crossing.push(false);
        } else {
            index.push(natural);
            crossing.push(true);
        }
    }
    (index, crossing)
}

pub fn run_study(config: &StudyConfig) -> std::result::Result<ConvergenceHistory, Box<StudyError>> {
    let nu = config.material.poisson();
    let mut history = ConvergenceHistory {
        kind: config.kind,
        family: config.family,
        poisson: nu,
        modes: config.modes.clone(),
        references: config
            .modes
            .iter()
            .map(|&m| {
                let r = config.references.iter().find(|r| r.mode == m);
                ResolvedReference {
                    mode: m,
                    kappa_hat: r.map(Reference::kappa_hat),
                    provenance: r.map(|r| r.provenance.clone()),
                }
            })
            .collect(),
        records: Vec::new(),
        warnings: Vec::new(),
    };
    let fail = |history: &ConvergenceHistory, error: Error| {
        Box::new(StudyError {
            history: history.clone(),
            error,
        })
    };
    if let Err(e) = config.validate() {
        return Err(fail(&history, e));
    }
    let eigen = config.eigen_options();

    let mut mesh = match config.kind {
        LoopKind::Adaptive => match config.geometry.mesh(config.initial_level) {
            Ok(m) => Some(m),
            Err(e) => return Err(fail(&history, e)),
        },
        LoopKind::Uniform => None,
    };
    let mut previous: Option<Vec<f64>> = None;
    for iteration in 0..config.max_iterations {
        let start = Instant::now();
        let (current, level) = match config.kind {
            LoopKind::Uniform => {
                let Some(&level) = config.levels.get(iteration) else {
                    break;
                };
                match config.geometry.mesh(level) {
                    Ok(m) => (m, Some(level)),
                    Err(e) => return Err(fail(&history, e)),
                }
            }
            LoopKind::Adaptive => (mesh.take().expect("mesh for the next iteration"), None),
        };
        // `None` when the mesh exceeds the dof budget
        let step = || -> Result<Option<(IterationRecord, Vec<f64>, Option<Mesh>)>> {
            let dofs = build_dof_map(&current, config.family)?;
            if dofs.total_dofs() > config.max_dofs {
                if iteration == 0 {
                    return Err(Error::InvalidArgument(format!(
                        "the initial mesh already has {} dofs, above max_dofs = {}",
                        dofs.total_dofs(),
                        config.max_dofs
                    )));
                }
                return Ok(None);
            }
            let disc = solve_mesh(
                &current,
                &config.material,
                config.family,
                &eigen,
                config.quad_degree,
                config.exec,
            )?;
            let spectrum: Vec<f64> = disc.eigen.kappas.iter().map(|k| k / (1.0 + nu)).collect();
            let (index, crossing) = track(previous.as_deref(), &config.modes, &spectrum);
            let ind = estimate(&current, &config.material, &disc, index[0], config.quad_degree, config.exec)?;
            let next = match config.kind {
                LoopKind::Adaptive => {
                    let marked = mark(&ind.marking_indicator(), config.fraction);
                    Some((marked.len(), refine(&current, &marked).mesh))
                }
                LoopKind::Uniform => None,
            };
            let kappa_hat: Vec<f64> = index.iter().map(|&j| spectrum[j]).collect();
            let err: Vec<Option<f64>> = history
                .references
                .iter()
                .zip(&kappa_hat)
                .map(|(r, k)| r.kappa_hat.map(|x| (k - x).abs()))
                .collect();
            let record = IterationRecord {
                iteration,
                level,
                cells: current.num_cells(),
                dofs: disc.dofs.total_dofs(),
                free_dofs: disc.dofs.num_free_displacement() + disc.dofs.num_pressure(),
                h_max: current.h_max(),
                frequency: kappa_hat.iter().map(|k| k.sqrt()).collect(),
                residual: index.iter().map(|&j| disc.eigen.residuals[j]).collect(),
                spectrum_index: index.clone(),
                crossing,
                eff: err[0].map(|e| e / ind.eta_sq()),
                err,
                eta: ind.eta,
                theta: ind.theta,
                marked: next.as_ref().map_or(0, |n| n.0),
                restarts: disc.eigen.diagnostics.restarts,
                operator_applications: disc.eigen.diagnostics.operator_applications,
                wall_time_s: 0.0,
                kappa_hat: kappa_hat.clone(),
            };
            Ok(Some((record, kappa_hat, next.map(|n| n.1))))
        };
        match step() {
            Ok(Some((mut record, tracked, next))) => {
                record.wall_time_s = start.elapsed().as_secs_f64();
                log::info!(
                    "iteration {iteration}: {} dofs, kappa_hat = {:?}, eta = {:e}",
                    record.dofs,
                    record.kappa_hat,
                    record.eta
                );
                for (m, c) in config.modes.iter().zip(&record.crossing) {
                    if *c {
                        history
                            .warnings
                            .push(format!("iteration {iteration}: mode {m} left the tracking window (possible crossing)"));
                    }
                }
                history.records.push(record);
                previous = Some(tracked);
                mesh = next;
            }
            Ok(None) => break,
            Err(e) => return Err(fail(&history, e)),
        }
    }
    fill_extrapolated_references(&mut history);
    Ok(history)
}

/// Modes without an external reference are measured against the study's own
/// extrapolation when at least 3 iterations exist.
fn fill_extrapolated_references(history: &mut ConvergenceHistory) {
    for i in 0..history.modes.len() {
        if history.references[i].kappa_hat.is_some() {
            continue;
        }
        let mode = history.modes[i];
        match extrapolate(history, mode) {
            Ok(e) => {
                history.references[i].kappa_hat = Some(e.value);
                history.references[i].provenance = Some(EXTRAPOLATED.into());
                for r in &mut history.records {
                    r.err[i] = Some((r.kappa_hat[i] - e.value).abs());
                    if i == 0 {
                        r.eff = Some(r.err[0].unwrap() / r.eta_sq());
                    }
                }
            }
            Err(e) => history
                .warnings
                .push(format!("mode {mode}: no reference and no extrapolation ({e})")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn marking_threshold() {
        assert_eq!(mark(&[4.0, 1.0, 0.9], 0.5), vec![0, 1]);
        assert_eq!(mark(&[2.0; 5], 0.5), vec![0, 1, 2, 3, 4]);
        assert_eq!(mark(&[2.0; 5], 1.0), vec![0, 1, 2, 3, 4]);
        assert_eq!(mark(&[1.0, 3.0, 2.0], 1.0), vec![1]);
        assert!(mark(&[], 0.5).is_empty());
    }

    #[test]
    fn marking_scale_invariant() {
        let ind = [0.3, 1.7, 0.02, 0.9, 1.69, 0.44];
        for c in [1e-12, 3.0, 1e9] {
            let scaled: Vec<f64> = ind.iter().map(|v| v * c).collect();
            assert_eq!(mark(&scaled, 0.5), mark(&ind, 0.5));
        }
    }

    #[test]
    fn tracking_follows_nearest_value() {
        let (i, c) = track(None, &[1, 2], &[1.0, 2.0, 3.0]);
        assert_eq!((i, c), (vec![0, 1], vec![false, false]));
        // a new eigenvalue appears below the tracked ones
        let (i, c) = track(Some(&[1.0, 2.0]), &[1, 2], &[0.5, 1.02, 1.98]);
        assert_eq!((i, c), (vec![1, 2], vec![false, false]));
        let (i, c) = track(Some(&[1.0]), &[1], &[5.0, 6.0]);
        assert_eq!((i, c), (vec![0], vec![true]));
    }

    #[test]
    fn reference_conversion() {
        let r = Reference {
            mode: 1,
            value: 3.0,
            quantity: ReferenceQuantity::Frequency,
            provenance: "x".into(),
        };
        assert_eq!(r.kappa_hat(), 9.0);
    }
}
