//! Property tests over random meshes, markings and material parameters.

use elasteig_core::adaptive::mark;
use elasteig_core::coefficients::MaterialModel;
use elasteig_core::eigensolve::dense::dense_eigenvalues;
use elasteig_core::eigensolve::{solve_eigen, EigenOptions, SaddleSystem};
use elasteig_core::fem::{assemble, build_dof_map, AssemblyOptions, ElementFamily};
use elasteig_core::mesh::{l_shape_mesh, parse_native, refine, unit_square_mesh, write_native, Mesh};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_refinement(mut mesh: Mesh, seed: u64, rounds: usize, p: f64) -> Mesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..rounds {
        let marked: Vec<usize> = (0..mesh.num_cells()).filter(|_| rng.gen_bool(p)).collect();
        mesh = refine(&mesh, &marked).mesh;
    }
    mesh
}

fn base_mesh(kind: u8, n: usize) -> Mesh {
    if kind == 0 {
        unit_square_mesh(n).unwrap()
    } else {
        l_shape_mesh(n).unwrap()
    }
}

fn system(mesh: &Mesh, family: ElementFamily, model: &MaterialModel) -> SaddleSystem {
    let dofs = build_dof_map(mesh, family).unwrap();
    let mats = assemble(mesh, &dofs, model, AssemblyOptions::default()).unwrap();
    SaddleSystem::new(&mats).unwrap()
}

fn family(mini: bool) -> ElementFamily {
    if mini {
        ElementFamily::Mini
    } else {
        ElementFamily::TaylorHood
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn marking_is_scale_invariant(
        ind in prop::collection::vec(0.0f64..1e3, 1..300),
        fraction in 0.01f64..=1.0,
        k in -30i32..30,
    ) {
        // powers of four scale the square roots exactly
        let c = 4f64.powi(k);
        let scaled: Vec<f64> = ind.iter().map(|v| v * c).collect();
        prop_assert_eq!(mark(&ind, fraction), mark(&scaled, fraction));
    }

    #[test]
    fn marked_set_contains_the_maximum(ind in prop::collection::vec(1e-6f64..1e3, 1..300), fraction in 0.01f64..=1.0) {
        let m = mark(&ind, fraction);
        let argmax = (0..ind.len()).max_by(|&a, &b| ind[a].total_cmp(&ind[b])).unwrap();
        prop_assert!(m.contains(&argmax));
        prop_assert!(m.windows(2).all(|w| w[0] < w[1]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn refinement_conserves_area_and_conformity(
        kind in 0u8..2, n in 1usize..4, seed in any::<u64>(), rounds in 1usize..6, p in 0.05f64..0.6,
    ) {
        let mesh = base_mesh(kind, n);
        let area = mesh.total_area();
        let angle = mesh.min_angle();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut current = mesh;
        for _ in 0..rounds {
            let marked: Vec<usize> = (0..current.num_cells()).filter(|_| rng.gen_bool(p)).collect();
            let r = refine(&current, &marked);
            for &c in &marked {
                prop_assert!(r.children[c].len() >= 2, "marked cell {} was not refined", c);
            }
            let child_area: f64 = r.children.iter().enumerate()
                .map(|(parent, kids)| (kids.iter().map(|&k| r.mesh.cell_area(k)).sum::<f64>() - current.cell_area(parent)).abs())
                .fold(0.0, f64::max);
            prop_assert!(child_area <= 1e-14 * area);
            current = r.mesh;
            prop_assert!(current.check_conformity().is_ok());
            prop_assert!((current.total_area() - area).abs() <= 1e-12 * area);
            prop_assert!(current.min_angle() >= 0.5 * angle - 1e-12);
        }
    }

    #[test]
    fn native_format_round_trips(kind in 0u8..2, n in 1usize..4, seed in any::<u64>()) {
        let mesh = random_refinement(base_mesh(kind, n), seed, 2, 0.3);
        let back = parse_native(&write_native(&mesh), "roundtrip").unwrap();
        prop_assert_eq!(back.vertices(), mesh.vertices());
        prop_assert_eq!(back.cells(), mesh.cells());
        prop_assert_eq!(back.boundary_edges(), mesh.boundary_edges());
        prop_assert_eq!(back.cell_subdomain(), mesh.cell_subdomain());
    }

    #[test]
    fn spectrum_scales_with_modulus_and_density(
        young in 1e-3f64..1e9, c in 1e-4f64..1e4, nu in 0.05f64..=0.5, mini in any::<bool>(),
    ) {
        let mesh = unit_square_mesh(3).unwrap();
        let opts = EigenOptions { k: 4, ..Default::default() };
        let fam = family(mini);
        let base = solve_eigen(&system(&mesh, fam, &MaterialModel::uniform(young, nu, 1.0).unwrap()), &opts).unwrap();
        let stiff = solve_eigen(&system(&mesh, fam, &MaterialModel::uniform(c * young, nu, 1.0).unwrap()), &opts).unwrap();
        let heavy = solve_eigen(&system(&mesh, fam, &MaterialModel::uniform(young, nu, c).unwrap()), &opts).unwrap();
        for i in 0..4 {
            prop_assert!((stiff.kappas[i] / (c * base.kappas[i]) - 1.0).abs() <= 1e-8);
            prop_assert!((heavy.kappas[i] * c / base.kappas[i] - 1.0).abs() <= 1e-8);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn shift_invert_matches_dense_on_small_meshes(
        kind in 0u8..2, n in 1usize..4, seed in any::<u64>(), rounds in 0usize..3,
        nu in 0.05f64..=0.5, mini in any::<bool>(), variable in any::<bool>(),
    ) {
        let mesh = random_refinement(base_mesh(kind, n), seed, rounds, 0.3);
        let model = if variable && kind == 1 {
            let spec = serde_json::json!({"nu": nu, "young": {"*": "sqrt(x^2+y^2+4)", "2": "sqrt(x^2+y^2+2)"}});
            MaterialModel::from_spec(&serde_json::from_value(spec).unwrap()).unwrap()
        } else {
            MaterialModel::uniform(1.0 + 10.0 * (seed % 7) as f64, nu, 1.0).unwrap()
        };
        let sys = system(&mesh, family(mini), &model);
        prop_assume!(sys.size() <= 500);
        let dense = dense_eigenvalues(&sys).unwrap();
        let k = dense.len().min(6);
        prop_assume!(k > 0);
        let res = solve_eigen(&sys, &EigenOptions { k, ..Default::default() }).unwrap();
        for i in 0..k {
            let rel = (res.kappas[i] - dense[i]).abs() / dense[i];
            prop_assert!(rel <= 1e-8, "mode {}: {} vs {}", i + 1, res.kappas[i], dense[i]);
        }
    }
}
