//! Built-in invariant checks run by `elasteig verify`.

use std::time::Instant;

use clap::ValueEnum;
use elasteig_core::adaptive::{mark, run_study, solve_mesh, Geometry, LoopKind, StudyConfig};
use elasteig_core::coefficients::{project_coefficients, MaterialModel, MaterialSpec, YoungField};
use elasteig_core::eigensolve::dense::dense_eigenvalues;
use elasteig_core::eigensolve::{solve_eigen, EigenOptions, SaddleSystem};
use elasteig_core::estimator::{Eigenpair, Estimator};
use elasteig_core::fem::{
    assemble, build_dof_map, build_unconstrained_dof_map, interpolate_vector, AssemblyOptions, ElementFamily,
    SystemMatrices,
};
use elasteig_core::mesh::{l_shape_mesh, refine, three_strip_square_mesh, unit_square_mesh, EdgeClass, Mesh, SideKinds};
use elasteig_core::sparse::CsrMatrix;
use elasteig_core::Execution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Deliberate corruptions used to test that `verify` detects failures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Fault {
    /// Perturbs one off-diagonal stiffness entry after assembly.
    Assembly,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

type Outcome = Result<String, String>;

pub struct Verifier {
    pub fault: Option<Fault>,
    pub seed: u64,
    pub exec: Execution,
}

fn lshape_model(nu: f64) -> MaterialModel {
    let spec: MaterialSpec = serde_json::from_value(serde_json::json!({
        "nu": nu,
        "rho": 1.0,
        "young": {"1": "sqrt(x^2+y^2+4)", "2": "sqrt(x^2+y^2+2)", "3": "sqrt(x^2+y^2+4)"},
    }))
    .expect("built-in material");
    MaterialModel::from_spec(&spec).expect("built-in material")
}

fn strip_model(nu: f64) -> MaterialModel {
    let young = [(1, YoungField::Constant(2.0)), (2, YoungField::Constant(1.0)), (3, YoungField::Constant(3.0))];
    MaterialModel::new(young.into(), nu, 1.0).expect("built-in material")
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn corrupt(a: &mut CsrMatrix) {
    let scale = a.max_abs();
    let offdiag = a.triplets().position(|(r, c, _)| r != c);
    if let Some(k) = offdiag {
        a.values_mut()[k] += 1e-3 * scale;
    }
}

impl Verifier {
    fn assemble(&self, mesh: &Mesh, family: ElementFamily, model: &MaterialModel, constrained: bool) -> Result<SystemMatrices, String> {
        let dofs = if constrained {
            build_dof_map(mesh, family)
        } else {
            build_unconstrained_dof_map(mesh, family)
        }
        .map_err(|e| e.to_string())?;
        let mut mats = assemble(mesh, &dofs, model, AssemblyOptions { quad_degree: 6, exec: self.exec })
            .map_err(|e| e.to_string())?;
        if self.fault == Some(Fault::Assembly) {
            corrupt(&mut mats.a);
        }
        Ok(mats)
    }

    pub fn run(&self) -> Vec<CheckResult> {
        let checks: [(&'static str, fn(&Verifier) -> Outcome); 9] = [
            ("matrix symmetry", Verifier::symmetry),
            ("rigid-motion kernel", Verifier::kernel),
            ("dirichlet edge jumps vanish", Verifier::dirichlet_jumps),
            ("oscillation vanishes for piecewise-constant modulus", Verifier::oscillation),
            ("marking scale invariance", Verifier::marking),
            ("refinement area and conformity", Verifier::refinement),
            ("spectrum scale equivariance", Verifier::scaling),
            ("dense oracle equivalence", Verifier::oracle),
            ("sequential determinism", Verifier::determinism),
        ];
        checks
            .iter()
            .map(|(name, check)| {
                let start = Instant::now();
                let outcome = check(self);
                let seconds = start.elapsed().as_secs_f64();
                match outcome {
                    Ok(detail) => CheckResult { name, passed: true, detail, seconds },
                    Err(detail) => CheckResult { name, passed: false, detail, seconds },
                }
            })
            .collect()
    }

    fn symmetry(&self) -> Outcome {
        let cases = [
            (unit_square_mesh(4).map_err(|e| e.to_string())?, MaterialModel::uniform(1.0, 0.35, 1.0).expect("model")),
            (l_shape_mesh(2).map_err(|e| e.to_string())?, lshape_model(0.49)),
        ];
        let mut worst = 0.0f64;
        for (mesh, model) in &cases {
            for family in [ElementFamily::TaylorHood, ElementFamily::Mini] {
                let mats = self.assemble(mesh, family, model, true)?;
                for (name, m) in [("A", &mats.a), ("C", &mats.c), ("M", &mats.m)] {
                    let defect = m.symmetry_defect() / m.max_abs().max(f64::MIN_POSITIVE);
                    worst = worst.max(defect);
                    if defect > 1e-12 {
                        return Err(format!("{name} ({family:?}) relative asymmetry {defect:.3e}"));
                    }
                }
            }
        }
        Ok(format!("max relative asymmetry {worst:.1e}"))
    }

    fn kernel(&self) -> Outcome {
        let mesh = l_shape_mesh(2).map_err(|e| e.to_string())?;
        let model = lshape_model(0.35);
        let mut worst = 0.0f64;
        for family in [ElementFamily::TaylorHood, ElementFamily::Mini] {
            let dofs = build_unconstrained_dof_map(&mesh, family).map_err(|e| e.to_string())?;
            let mats = self.assemble(&mesh, family, &model, false)?;
            let motions: [fn([f64; 2]) -> [f64; 2]; 3] = [|_| [1.0, 0.0], |_| [0.0, 1.0], |p| [-p[1], p[0]]];
            for (k, f) in motions.iter().enumerate() {
                let z = dofs.restrict(&interpolate_vector(&mesh, &dofs, f));
                let az = mats.a.mul_vec(&z);
                let norm = az.iter().map(|v| v * v).sum::<f64>().sqrt();
                let scale = mats.a.max_abs() * z.iter().map(|v| v * v).sum::<f64>().sqrt();
                let r = norm / scale;
                worst = worst.max(r);
                if r > 1e-12 {
                    return Err(format!("{family:?} rigid motion {k}: |A z| / (|A| |z|) = {r:.3e}"));
                }
            }
        }
        Ok(format!("max relative |A z| {worst:.1e}"))
    }

    fn dirichlet_jumps(&self) -> Outcome {
        let mesh = l_shape_mesh(4).map_err(|e| e.to_string())?;
        let model = lshape_model(0.35);
        let opts = EigenOptions { k: 1, seed: self.seed, ..Default::default() };
        let disc = solve_mesh(&mesh, &model, ElementFamily::Mini, &opts, 6, self.exec).map_err(|e| e.to_string())?;
        let proj = project_coefficients(&model, &mesh, 6, self.exec).map_err(|e| e.to_string())?;
        let est = Estimator::new(&mesh, &disc.dofs, &model, &proj).map_err(|e| e.to_string())?;
        let u = disc.dofs.extend(&disc.eigen.displacements[0]);
        let pair = Eigenpair { u: &u, p: &disc.eigen.pressures[0], kappa: disc.eigen.kappas[0] };
        let mut count = 0;
        for (e, edge) in disc.dofs.topology().edges.iter().enumerate() {
            if edge.class == EdgeClass::Dirichlet {
                let j = est.edge_jump(e, &pair).map_err(|e| e.to_string())?;
                if j != 0.0 {
                    return Err(format!("Dirichlet edge {e} has jump indicator {j:e}"));
                }
                count += 1;
            }
        }
        Ok(format!("{count} Dirichlet edges, all zero"))
    }

    fn oscillation(&self) -> Outcome {
        let mesh = three_strip_square_mesh(6, SideKinds::BOTTOM_CLAMPED).map_err(|e| e.to_string())?;
        let model = strip_model(0.35);
        let opts = EigenOptions { k: 1, seed: self.seed, ..Default::default() };
        let disc = solve_mesh(&mesh, &model, ElementFamily::TaylorHood, &opts, 6, self.exec).map_err(|e| e.to_string())?;
        let ind = elasteig_core::adaptive::estimate(&mesh, &model, &disc, 0, 6, self.exec).map_err(|e| e.to_string())?;
        let worst = ind.theta_sq.iter().cloned().fold(0.0f64, f64::max);
        if worst > 1e-24 * ind.eta * ind.eta {
            return Err(format!("oscillation {worst:e} on a piecewise-constant modulus"));
        }
        Ok(format!("max theta_K^2 {worst:.1e}, eta {:.3e}", ind.eta))
    }

    fn marking(&self) -> Outcome {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for trial in 0..20 {
            let n = rng.gen_range(1..200);
            let ind: Vec<f64> = (0..n).map(|_| rng.gen::<f64>().powi(4)).collect();
            let fraction = rng.gen_range(0.05..=1.0);
            let base = mark(&ind, fraction);
            for c in [1e-8, 7.3, 1e6] {
                let scaled: Vec<f64> = ind.iter().map(|v| v * c).collect();
                if mark(&scaled, fraction) != base {
                    return Err(format!("trial {trial}: scaling by {c} changed the marked set"));
                }
            }
        }
        Ok("20 random indicator sets, 3 scales each".into())
    }

    fn refinement(&self) -> Outcome {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x5eed);
        let mut mesh = l_shape_mesh(2).map_err(|e| e.to_string())?;
        let area = mesh.total_area();
        let angle = mesh.min_angle();
        for round in 0..8 {
            let marked: Vec<usize> = (0..mesh.num_cells()).filter(|_| rng.gen_bool(0.3)).collect();
            mesh = refine(&mesh, &marked).mesh;
            mesh.check_conformity().map_err(|e| format!("round {round}: {e}"))?;
            if rel(mesh.total_area(), area) > 1e-12 {
                return Err(format!("round {round}: area {} vs {area}", mesh.total_area()));
            }
            if mesh.min_angle() < 0.5 * angle {
                return Err(format!("round {round}: minimum angle degraded to {:.2} deg", mesh.min_angle().to_degrees()));
            }
        }
        Ok(format!("8 random rounds, {} cells, min angle {:.1} deg", mesh.num_cells(), mesh.min_angle().to_degrees()))
    }

    fn scaling(&self) -> Outcome {
        let mesh = unit_square_mesh(4).map_err(|e| e.to_string())?;
        let opts = EigenOptions { k: 4, seed: self.seed, ..Default::default() };
        let solve = |e: f64| -> Result<Vec<f64>, String> {
            let model = MaterialModel::uniform(e, 0.35, 1.0).expect("model");
            let mats = self.assemble(&mesh, ElementFamily::TaylorHood, &model, true)?;
            let sys = SaddleSystem::new(&mats).map_err(|e| e.to_string())?;
            Ok(solve_eigen(&sys, &opts).map_err(|e| e.to_string())?.kappas)
        };
        let (a, b) = (solve(1.0)?, solve(100.0)?);
        let worst = a.iter().zip(&b).map(|(x, y)| rel(100.0 * x, *y)).fold(0.0f64, f64::max);
        if worst > 1e-8 {
            return Err(format!("kappa(100 E) / (100 kappa(E)) deviates by {worst:.3e}"));
        }
        Ok(format!("4 modes, max deviation {worst:.1e}"))
    }

    fn oracle(&self) -> Outcome {
        let cases: Vec<(&str, Mesh, ElementFamily, MaterialModel)> = vec![
            ("square TH nu=0.35", unit_square_mesh(3).map_err(|e| e.to_string())?, ElementFamily::TaylorHood, MaterialModel::uniform(1.0, 0.35, 1.0).expect("model")),
            ("square mini nu=0.5", unit_square_mesh(4).map_err(|e| e.to_string())?, ElementFamily::Mini, MaterialModel::uniform(1.0, 0.5, 1.0).expect("model")),
            ("strip TH nu=0.49999", three_strip_square_mesh(3, SideKinds::ALL_DIRICHLET).map_err(|e| e.to_string())?, ElementFamily::TaylorHood, strip_model(0.49999)),
            ("L-shape mini nu=0.35", l_shape_mesh(2).map_err(|e| e.to_string())?, ElementFamily::Mini, lshape_model(0.35)),
        ];
        let opts = EigenOptions { k: 6, seed: self.seed, ..Default::default() };
        let mut worst = 0.0f64;
        for (name, mesh, family, model) in &cases {
            let mats = self.assemble(mesh, *family, model, true)?;
            let sys = SaddleSystem::new(&mats).map_err(|e| e.to_string())?;
            let dense = dense_eigenvalues(&sys).map_err(|e| e.to_string())?;
            let sparse = solve_eigen(&sys, &opts).map_err(|e| format!("{name}: {e}"))?;
            for (i, (k, d)) in sparse.kappas.iter().zip(&dense).enumerate() {
                let r = rel(*k, *d);
                worst = worst.max(r);
                if r > 1e-8 {
                    return Err(format!("{name} mode {}: {k} vs dense {d}", i + 1));
                }
            }
        }
        Ok(format!("{} problems, 6 modes, max relative difference {worst:.1e}", cases.len()))
    }

    fn determinism(&self) -> Outcome {
        let study = StudyConfig {
            geometry: Geometry::LShape,
            material: lshape_model(0.35),
            family: ElementFamily::Mini,
            modes: vec![1],
            references: vec![],
            kind: LoopKind::Adaptive,
            levels: vec![],
            initial_level: 4,
            fraction: 0.5,
            max_dofs: 20_000,
            max_iterations: 3,
            eigen: EigenOptions { k: 2, seed: self.seed, ..Default::default() },
            quad_degree: 6,
            exec: Execution::Sequential,
        };
        let run = || -> Result<String, String> {
            let mut h = run_study(&study).map_err(|e| e.to_string())?;
            for r in &mut h.records {
                r.wall_time_s = 0.0;
            }
            serde_json::to_string(&h).map_err(|e| e.to_string())
        };
        let (a, b) = (run()?, run()?);
        if a != b {
            return Err("two sequential adaptive runs differ".into());
        }
        // the parallel loops collect in index order, so assembly agrees bitwise
        let mesh = l_shape_mesh(8).map_err(|e| e.to_string())?;
        let dofs = build_dof_map(&mesh, ElementFamily::TaylorHood).map_err(|e| e.to_string())?;
        let model = lshape_model(0.35);
        let seq = assemble(&mesh, &dofs, &model, AssemblyOptions { quad_degree: 6, exec: Execution::Sequential })
            .map_err(|e| e.to_string())?;
        let par = assemble(&mesh, &dofs, &model, AssemblyOptions { quad_degree: 6, exec: Execution::Parallel })
            .map_err(|e| e.to_string())?;
        if seq.a.values() != par.a.values() || seq.m.values() != par.m.values() {
            return Err("parallel and sequential assembly differ".into());
        }
        Ok("adaptive history and assembly reproduced bitwise".into())
    }
}
