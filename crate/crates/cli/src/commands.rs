//! `solve` and `study`.

use std::time::Instant;

use elasteig_core::adaptive::{
    estimate, extrapolate, fit_rate, run_study, solve_mesh, ConvergenceHistory, LoopKind, RateAxis,
};
use elasteig_core::eigensolve::{cluster_eigenvalues, SaddleSystem, DEFAULT_CLUSTER_TOL};
use elasteig_core::fem::{assemble, build_dof_map, AssemblyOptions};
use elasteig_core::postprocess::{build_table, emit_plot_data, DEFAULT_DIGITS};
use elasteig_core::Execution;
use serde_json::{json, Value};

use crate::config::{check_mesh, ConfigError, LoadedConfig};
use crate::output::{envelope, OutDir};
use crate::CliError;

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

pub fn solve(loaded: &LoadedConfig, cli: &Value, exec: Execution) -> Result<(), CliError> {
    let cfg = &loaded.config;
    let start = Instant::now();
    let nu = cfg.material.nu;
    let model = cfg.material_model(nu)?;
    let mesh = cfg.geometry.mesh(cfg.level).map_err(|e| CliError::Config(e.to_string()))?;
    check_mesh(&mesh, &model)?;
    let out = OutDir::create(&cfg.output.dir)?;
    let mut doc = envelope("solve", Some(&loaded.echo), cli);
    doc.insert(
        "mesh".into(),
        json!({
            "level": cfg.level,
            "cells": mesh.num_cells(),
            "vertices": mesh.num_vertices(),
            "h_max": mesh.h_max(),
            "min_angle_deg": mesh.min_angle().to_degrees(),
        }),
    );

    let disc = match solve_mesh(&mesh, &model, cfg.family, &cfg.eigen_options(), cfg.quad_degree, exec) {
        Ok(d) => d,
        Err(e) => {
            doc.insert("status".into(), json!("failed"));
            doc.insert("error".into(), json!(e.to_string()));
            out.write_json("eigenvalues.json", &Value::Object(doc))?;
            return Err(CliError::Solver(e.to_string()));
        }
    };
    let eig = &disc.eigen;
    let kappa_hat = eig.kappa_hat(nu);
    let modes: Vec<Value> = (0..eig.len())
        .map(|i| {
            json!({
                "index": i + 1,
                "kappa": eig.kappas[i],
                "kappa_hat": kappa_hat[i],
                "frequency": kappa_hat[i].sqrt(),
                "residual": eig.residuals[i],
            })
        })
        .collect();
    let clusters: Vec<Value> = cluster_eigenvalues(&kappa_hat, DEFAULT_CLUSTER_TOL)
        .iter()
        .map(|c| json!({"kappa_hat": c.mean, "modes": c.members.iter().map(|m| m + 1).collect::<Vec<_>>()}))
        .collect();
    doc.insert("status".into(), json!("ok"));
    doc.insert("poisson".into(), json!(nu));
    doc.insert(
        "dofs".into(),
        json!({
            "total": disc.dofs.total_dofs(),
            "free_displacement": disc.dofs.num_free_displacement(),
            "pressure": disc.dofs.num_pressure(),
        }),
    );
    doc.insert("modes".into(), Value::Array(modes));
    doc.insert("clusters".into(), Value::Array(clusters));
    doc.insert("diagnostics".into(), serde_json::to_value(&eig.diagnostics).expect("diagnostics serialize"));

    if cfg.output.indicators {
        let first = cfg.modes[0] - 1;
        if first >= eig.len() {
            return Err(CliError::Solver(format!("mode {} was not computed", first + 1)));
        }
        let ind = estimate(&mesh, &model, &disc, first, cfg.quad_degree, exec)
            .map_err(|e| CliError::Solver(e.to_string()))?;
        out.write_with("indicators.csv", |w| ind.write_csv(w))?;
        doc.insert("estimator".into(), json!({"mode": first + 1, "eta": ind.eta, "theta": ind.theta}));
    }
    if cfg.output.matrices {
        let dofs = build_dof_map(&mesh, cfg.family).map_err(|e| CliError::Solver(e.to_string()))?;
        let mats = assemble(
            &mesh,
            &dofs,
            &model,
            AssemblyOptions {
                quad_degree: cfg.quad_degree,
                exec,
            },
        )
        .map_err(|e| CliError::Solver(e.to_string()))?;
        for (name, m) in [("A.mtx", &mats.a), ("B.mtx", &mats.b), ("C.mtx", &mats.c), ("M.mtx", &mats.m)] {
            out.write_with(name, |w| m.write_matrix_market(w))?;
        }
        let system = SaddleSystem::new(&mats).map_err(|e| CliError::Solver(e.to_string()))?;
        doc.insert("matrix_files".into(), json!(["A.mtx", "B.mtx", "C.mtx", "M.mtx"]));
        doc.insert("system_size".into(), json!(system.size()));
    }
    doc.insert("wall_time_s".into(), json!(start.elapsed().as_secs_f64()));
    out.write_json("eigenvalues.json", &Value::Object(doc))?;
    println!("{}", summary_line(&kappa_hat, &out));
    Ok(())
}

fn summary_line(kappa_hat: &[f64], out: &OutDir) -> String {
    let f: Vec<String> = kappa_hat.iter().map(|k| format!("{:.6}", k.sqrt())).collect();
    format!("sqrt(kappa_hat): {} -> {}", f.join(" "), out.dir.display())
}

/// Rate and extrapolation of each tracked mode; failures are reported in place.
fn fits(history: &ConvergenceHistory) -> Value {
    if history.records.len() < 3 {
        return json!({"skipped": "fewer than 3 iterations"});
    }
    let modes: Vec<Value> = history
        .modes
        .iter()
        .map(|&m| {
            let show = |r: elasteig_core::Result<Value>| r.unwrap_or_else(|e| json!({"error": e.to_string()}));
            let rate = |axis| show(fit_rate(history, axis, m).map(|f| json!(f)));
            json!({
                "mode": m,
                "rate_h": if history.kind == LoopKind::Uniform { rate(RateAxis::H) } else { Value::Null },
                "rate_dofs": rate(RateAxis::Dofs),
                "extrapolation": show(extrapolate(history, m).map(|e| json!(e))),
            })
        })
        .collect();
    Value::Array(modes)
}

fn suffix(label: &str, many: bool) -> String {
    if many {
        format!("_{label}")
    } else {
        String::new()
    }
}

pub fn study(loaded: &LoadedConfig, cli: &Value, exec: Execution) -> Result<(), CliError> {
    let cfg = &loaded.config;
    let nus = cfg.poisson_values();
    // validate every mesh-dependent condition before the first solve
    for &nu in &nus {
        let model = cfg.material_model(nu)?;
        let level = match cfg.study.kind {
            LoopKind::Uniform => cfg.study.levels[0],
            LoopKind::Adaptive => cfg.study.initial_level,
        };
        let mesh = cfg.geometry.mesh(level).map_err(|e| CliError::Config(e.to_string()))?;
        check_mesh(&mesh, &model)?;
    }
    let out = OutDir::create(&cfg.output.dir)?;
    let many = nus.len() > 1;
    let mut doc = envelope("study", Some(&loaded.echo), cli);
    let mut entries = Vec::new();
    let mut histories = Vec::new();
    let mut failure = None;
    for &nu in &nus {
        let label = format!("nu{nu}");
        let study = cfg.study_config(nu, exec)?;
        let (history, error) = match run_study(&study) {
            Ok(h) => (h, None),
            Err(e) => (e.history.clone(), Some(e.to_string())),
        };
        let sfx = suffix(&label, many);
        out.write_with(&format!("history{sfx}.csv"), |w| history.write_csv(w))?;
        if cfg.output.plot && !history.records.is_empty() {
            out.write_with(&format!("plot{sfx}.csv"), |w| emit_plot_data(&history, w))?;
        }
        for r in &history.records {
            log::info!("{label} iteration {} dofs {} sqrt(kappa_hat) {:?}", r.iteration, r.dofs, r.frequency);
        }
        entries.push(json!({
            "label": label,
            "poisson": nu,
            "status": if error.is_some() { "failed" } else { "ok" },
            "error": error,
            "history": history,
            "fits": fits(&history),
        }));
        histories.push((label, history));
        if let Some(e) = error {
            failure = Some(e);
            break;
        }
    }
    doc.insert("status".into(), json!(if failure.is_some() { "failed" } else { "ok" }));
    doc.insert("histories".into(), Value::Array(entries));

    let tabulate = failure.is_none()
        && cfg.output.table
        && cfg.study.kind == LoopKind::Uniform
        && histories.iter().all(|(_, h)| h.records.len() >= 4);
    if tabulate {
        let refs: Vec<(String, &ConvergenceHistory)> = histories.iter().map(|(l, h)| (l.clone(), h)).collect();
        match build_table(&refs, DEFAULT_DIGITS) {
            Ok(table) => {
                out.write_with("table.csv", |w| table.write_csv(w))?;
                doc.insert("table".into(), json!(table));
            }
            Err(e) => {
                log::warn!("no table: {e}");
                doc.insert("table_error".into(), json!(e.to_string()));
            }
        }
    }
    out.write_json("history.json", &Value::Object(doc))?;
    if let Some(e) = failure {
        return Err(CliError::Solver(e));
    }
    for (label, h) in &histories {
        let last = h.records.last().expect("a completed study has records");
        println!(
            "{label}: {} iterations, {} dofs, sqrt(kappa_hat) {:?}",
            h.records.len(),
            last.dofs,
            last.frequency
        );
    }
    println!("outputs in {}", out.dir.display());
    Ok(())
}
