//! Per-cell loops under both execution policies: assembly, coefficient
//! projection and the error estimator on the variable-modulus L-shape.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use elasteig_core::adaptive::{estimate, solve_mesh};
use elasteig_core::coefficients::{project_coefficients, MaterialModel, MaterialSpec};
use elasteig_core::eigensolve::EigenOptions;
use elasteig_core::fem::{assemble, build_dof_map, AssemblyOptions, ElementFamily};
use elasteig_core::mesh::l_shape_mesh;
use elasteig_core::Execution;

fn material() -> MaterialModel {
    let spec: MaterialSpec = serde_json::from_str(
        r#"{"nu": 0.35, "rho": 1.0, "young": {"1": "sqrt(x^2+y^2+2)", "2": "sqrt(x^2+y^2+4)", "3": "sqrt(x^2+y^2+4)"}}"#,
    )
    .expect("valid material");
    MaterialModel::from_spec(&spec).expect("valid material")
}

const POLICIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn bench(c: &mut Criterion) {
    let model = material();
    let mesh = l_shape_mesh(32).expect("mesh");
    let dofs = build_dof_map(&mesh, ElementFamily::TaylorHood).expect("dofs");
    let disc = solve_mesh(
        &mesh,
        &model,
        ElementFamily::TaylorHood,
        &EigenOptions {
            k: 1,
            ..Default::default()
        },
        6,
        Execution::Parallel,
    )
    .expect("solve");

    let mut group = c.benchmark_group("per_cell");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        group.bench_with_input(BenchmarkId::new("assemble", name), &exec, |b, &exec| {
            b.iter(|| assemble(&mesh, &dofs, &model, AssemblyOptions { quad_degree: 6, exec }).expect("assembly"))
        });
        group.bench_with_input(BenchmarkId::new("project", name), &exec, |b, &exec| {
            b.iter(|| project_coefficients(&model, &mesh, 6, exec).expect("projection"))
        });
        group.bench_with_input(BenchmarkId::new("estimate", name), &exec, |b, &exec| {
            b.iter(|| estimate(&mesh, &model, black_box(&disc), 0, 6, exec).expect("estimator"))
        });
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
