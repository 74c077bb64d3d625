use elasteig_core::adaptive::{
    estimate, mark, run_study, solve_mesh, Geometry, LoopKind, Reference, ReferenceQuantity, StudyConfig,
    EXTRAPOLATED,
};
use elasteig_core::coefficients::{MaterialModel, MaterialSpec};
use elasteig_core::eigensolve::EigenOptions;
use elasteig_core::fem::ElementFamily;
use elasteig_core::mesh::{l_shape_mesh, refine, SideKinds};
use elasteig_core::postprocess::{build_table, emit_plot_data, ReportTable};
use elasteig_core::Execution;

fn lshape(nu: f64) -> MaterialModel {
    let spec: MaterialSpec = serde_json::from_value(serde_json::json!({
        "nu": nu,
        "rho": 1.0,
        "young": {"1": "sqrt(x^2+y^2+4)", "2": "sqrt(x^2+y^2+2)", "3": "sqrt(x^2+y^2+4)"},
    }))
    .unwrap();
    MaterialModel::from_spec(&spec).unwrap()
}

fn square_study(young: f64, nu: f64, levels: Vec<usize>) -> StudyConfig {
    StudyConfig {
        geometry: Geometry::UnitSquare {
            sides: SideKinds::BOTTOM_CLAMPED,
        },
        material: MaterialModel::uniform(young, nu, 1.0).unwrap(),
        family: ElementFamily::Mini,
        modes: vec![1, 2],
        references: vec![],
        kind: LoopKind::Uniform,
        levels,
        initial_level: 4,
        fraction: 0.5,
        max_dofs: 300_000,
        max_iterations: 12,
        eigen: EigenOptions {
            k: 4,
            ..Default::default()
        },
        quad_degree: 6,
        exec: Execution::Parallel,
    }
}

#[test]
fn adaptive_refinement_concentrates_at_singular_points() {
    let mut mesh = l_shape_mesh(4).unwrap();
    let model = lshape(0.35);
    let opts = EigenOptions {
        k: 2,
        ..Default::default()
    };
    for _ in 0..5 {
        let disc = solve_mesh(&mesh, &model, ElementFamily::Mini, &opts, 6, Execution::Parallel).unwrap();
        let ind = estimate(&mesh, &model, &disc, 0, 6, Execution::Parallel).unwrap();
        let marked = mark(&ind.marking_indicator(), 0.5);
        assert!(!marked.is_empty() && marked.len() < mesh.num_cells());
        mesh = refine(&mesh, &marked).mesh;
    }
    // re-entrant corner and the four points where clamped and free sides meet
    let singular = [[0.0, 0.0], [0.0, -1.0], [1.0, 0.0], [-1.0, -1.0], [1.0, 1.0]];
    let mut cells: Vec<usize> = (0..mesh.num_cells()).collect();
    cells.sort_by(|&a, &b| mesh.cell_area(a).total_cmp(&mesh.cell_area(b)));
    let smallest = &cells[..cells.len() / 10];
    let dist = |c: usize, s: &[f64; 2]| {
        let p = mesh.cell_centroid(c);
        (p[0] - s[0]).hypot(p[1] - s[1])
    };
    let near = smallest.iter().filter(|&&c| singular.iter().any(|s| dist(c, s) <= 0.15)).count();
    let corner = smallest.iter().filter(|&&c| dist(c, &singular[0]) <= 0.15).count();
    assert_eq!(near, smallest.len(), "{near} of {} smallest cells near singular points", smallest.len());
    assert!(3 * corner >= smallest.len(), "{corner} of {} smallest cells at the corner", smallest.len());
}

#[test]
fn effectivity_is_independent_of_the_modulus() {
    let effs: Vec<Vec<f64>> = [10.0, 1e4]
        .into_iter()
        .map(|e| {
            let mut c = square_study(e, 0.5, vec![3, 5, 9, 17]);
            c.modes = vec![1];
            c.references = vec![Reference {
                mode: 1,
                value: 0.492273855811713 * e,
                quantity: ReferenceQuantity::KappaHat,
                provenance: "tabulated".into(),
            }];
            run_study(&c).unwrap().records.iter().map(|r| r.eff.unwrap()).collect()
        })
        .collect();
    for (a, b) in effs[0].iter().zip(&effs[1]) {
        assert!((a - b).abs() <= 1e-8 * a, "{a} vs {b}");
    }
}

#[test]
fn uniform_study_feeds_table_and_plot() {
    let h = run_study(&square_study(1.0, 0.35, vec![4, 6, 8, 10])).unwrap();
    assert_eq!(h.records.len(), 4);
    assert!(h.records.windows(2).all(|w| w[1].dofs > w[0].dofs));
    // without references the study's own extrapolation is used and labelled
    assert_eq!(h.references[0].provenance.as_deref(), Some(EXTRAPOLATED));
    assert!(h.records.iter().all(|r| r.err[0].is_some() && r.eff.is_some()));
    let t = build_table(&[("nu0.35".into(), &h)], 4).unwrap();
    assert_eq!(ReportTable::parse_csv(&t.to_csv_string()).unwrap(), t);
    let mut plot = Vec::new();
    emit_plot_data(&h, &mut plot).unwrap();
    assert_eq!(String::from_utf8(plot).unwrap().lines().count(), 5);
}

#[test]
fn adaptive_study_stops_at_the_dof_budget() {
    let mut c = square_study(1.0, 0.35, vec![]);
    c.kind = LoopKind::Adaptive;
    c.geometry = Geometry::LShape;
    c.material = lshape(0.35);
    c.modes = vec![1];
    c.max_dofs = 3000;
    let h = run_study(&c).unwrap();
    assert!(h.records.len() >= 2);
    assert!(h.records.iter().all(|r| r.dofs <= 3000));
    assert!(h.records.windows(2).all(|w| w[1].cells > w[0].cells));
    assert!(h.records.iter().all(|r| !r.crossing[0]));

    c.max_dofs = 10;
    let err = run_study(&c).unwrap_err();
    assert!(err.history.records.is_empty());
}

#[test]
fn reference_errors_use_kappa_hat() {
    let mut c = square_study(1.0, 0.35, vec![4, 8]);
    c.modes = vec![1];
    c.references = vec![Reference {
        mode: 1,
        value: 1.0,
        quantity: ReferenceQuantity::Frequency,
        provenance: "test".into(),
    }];
    let h = run_study(&c).unwrap();
    for r in &h.records {
        assert!((r.err[0].unwrap() - (r.kappa_hat[0] - 1.0).abs()).abs() <= 1e-14);
        assert!((r.frequency[0] - r.kappa_hat[0].sqrt()).abs() <= 1e-14);
    }
}

#[test]
fn stokes_limit_is_approached_monotonically() {
    let mesh = elasteig_core::mesh::unit_square_mesh(8).unwrap();
    let opts = EigenOptions {
        k: 4,
        ..Default::default()
    };
    let spectrum = |nu: f64| {
        let model = MaterialModel::uniform(1.0, nu, 1.0).unwrap();
        let d = solve_mesh(&mesh, &model, ElementFamily::TaylorHood, &opts, 6, Execution::Parallel).unwrap();
        d.eigen.kappa_hat(nu)
    };
    let limit = spectrum(0.5);
    // below 0.4 modes 3 and 4 swap order, so positions are compared above it
    let nus = [0.4, 0.45, 0.49, 0.499, 0.49999];
    let dist: Vec<Vec<f64>> = nus
        .iter()
        .map(|&nu| spectrum(nu).iter().zip(&limit).map(|(a, b)| (a - b).abs() / b).collect())
        .collect();
    for m in 0..4 {
        assert!(dist.windows(2).all(|w| w[1][m] <= w[0][m]), "mode {m}: {dist:?}");
    }
    assert!(dist.last().unwrap().iter().all(|&d| d <= 1e-4));
}
