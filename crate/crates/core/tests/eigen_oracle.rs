use elasteig_core::coefficients::MaterialModel;
use elasteig_core::eigensolve::dense::dense_eigenvalues;
use elasteig_core::eigensolve::{rayleigh_quotient, solve_eigen, solve_source, EigenOptions, SaddleSystem};
use elasteig_core::fem::{assemble, build_dof_map, AssemblyOptions, ElementFamily};
use elasteig_core::mesh::{three_strip_square_mesh, unit_square_mesh, Mesh, SideKinds};

fn system(mesh: &Mesh, fam: ElementFamily, model: &MaterialModel) -> SaddleSystem {
    let dofs = build_dof_map(mesh, fam).unwrap();
    let mats = assemble(mesh, &dofs, model, AssemblyOptions::default()).unwrap();
    SaddleSystem::new(&mats).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn two_cell_square_matches_dense() {
    let mesh = unit_square_mesh(1).unwrap();
    let sys = system(&mesh, ElementFamily::TaylorHood, &MaterialModel::uniform(1.0, 0.35, 1.0).unwrap());
    let dense = dense_eigenvalues(&sys).unwrap();
    let res = solve_eigen(&sys, &EigenOptions { k: 4, ..Default::default() }).unwrap();
    for (k, d) in res.kappas.iter().zip(&dense) {
        assert!(rel(*k, *d) <= 1e-8, "{k} vs {d}");
    }
    assert!(res.kappas.windows(2).all(|w| w[0] <= w[1]));
    assert!(res.kappas.iter().all(|&k| k > 0.0));
}

#[test]
fn small_meshes_match_dense() {
    let cases: Vec<(Mesh, ElementFamily, MaterialModel)> = vec![
        (unit_square_mesh(3).unwrap(), ElementFamily::TaylorHood, MaterialModel::uniform(1.0, 0.35, 1.0).unwrap()),
        (unit_square_mesh(4).unwrap(), ElementFamily::Mini, MaterialModel::uniform(1.0, 0.5, 1.0).unwrap()),
        (unit_square_mesh(3).unwrap(), ElementFamily::TaylorHood, MaterialModel::uniform(1.44e11, 0.49999, 7.7e3).unwrap()),
        (
            three_strip_square_mesh(3, SideKinds::BOTTOM_CLAMPED).unwrap(),
            ElementFamily::TaylorHood,
            MaterialModel::new(
                [(1, elasteig_core::coefficients::YoungField::Constant(2.0)),
                 (2, elasteig_core::coefficients::YoungField::Constant(1.0)),
                 (3, elasteig_core::coefficients::YoungField::Constant(3.0))].into(),
                0.49999, 1.0).unwrap(),
        ),
    ];
    for (mesh, fam, model) in cases {
        let sys = system(&mesh, fam, &model);
        assert!(sys.size() <= 500, "size {}", sys.size());
        let dense = dense_eigenvalues(&sys).unwrap();
        let res = solve_eigen(&sys, &EigenOptions::default()).unwrap();
        for (i, (k, d)) in res.kappas.iter().zip(&dense).enumerate() {
            assert!(rel(*k, *d) <= 1e-8, "{fam:?} mode {i}: {k} vs {d}");
        }
        for r in &res.residuals {
            assert!(*r <= 1e-8);
        }
    }
}

#[test]
fn rayleigh_and_source() {
    let mesh = unit_square_mesh(2).unwrap();
    let sys = system(&mesh, ElementFamily::TaylorHood, &MaterialModel::uniform(1.0, 0.35, 1.0).unwrap());
    let res = solve_eigen(&sys, &EigenOptions { k: 2, ..Default::default() }).unwrap();
    let x = res.vector(0);
    let rq = rayleigh_quotient(&sys, &x).unwrap();
    assert!(rel(rq, res.kappas[0]) <= 1e-8);
    let x10: Vec<f64> = x.iter().map(|v| 10.0 * v).collect();
    assert!(rel(rayleigh_quotient(&sys, &x10).unwrap(), rq) <= 1e-13);
    let (u, p) = solve_source(&sys, &vec![0.0; sys.num_displacement()]).unwrap();
    assert!(u.iter().chain(&p).all(|&v| v == 0.0));
}
