use proptest::prelude::*;

use super::*;
use crate::assembly::{Params, Preset};
use crate::interp::canonical_interpolant;
use crate::mesh::{build_square_with_hole_mesh, build_unit_square_mesh};
use crate::solver::{Backend, FactorizationReport};

type FieldFn = dyn Fn(Field, [f64; 2]) -> [f64; 3];

fn synthetic(mesh: &Mesh, preset: Preset, kn: f64, f: &FieldFn) -> Solution {
    let dofs = DofMap::for_preset(mesh, preset);
    let mut coefficients = vec![0.0; dofs.total];
    for fld in Field::ALL {
        let c = canonical_interpolant(mesh, &dofs, fld, |x| f(fld, x));
        for i in dofs.range(fld) {
            coefficients[i] = c[i];
        }
    }
    Solution {
        report: FactorizationReport { dim: dofs.total, nnz: 0, condition_estimate: f64::NAN, nonfinite: false, refinement_steps: 0, scaling_range: (1.0, 1.0), backend: Backend::Lu },
        dofs,
        params: Params::new(kn, 1.0).unwrap(),
        preset: Some(preset),
        coefficients,
        residual: 0.0,
    }
}

fn only(target: Field, g: impl Fn([f64; 2]) -> [f64; 3] + 'static) -> Box<FieldFn> {
    Box::new(move |f, x| if f == target { g(x) } else { [0.0; 3] })
}

#[test]
fn zero_field_has_zero_norms() {
    let mesh = build_unit_square_mesh(3).unwrap();
    let sol = synthetic(&mesh, Preset::Enriched, 0.1, &|_, _| [0.0; 3]);
    for kind in [NormKind::L2, NormKind::H1Semi, NormKind::H1] {
        assert_eq!(field_norms(&mesh, &sol, kind), [0.0; 5]);
    }
}

#[test]
fn linear_pressure_and_rotation_norms() {
    let mesh = build_unit_square_mesh(4).unwrap();
    let sol = synthetic(&mesh, Preset::Enriched, 0.1, &|f, x| match f {
        Field::P => [x[0], 0.0, 0.0],
        Field::U => [x[1], -x[0], 0.0],
        _ => [0.0; 3],
    });
    let l2 = field_norms(&mesh, &sol, NormKind::L2);
    let semi = field_norms(&mesh, &sol, NormKind::H1Semi);
    assert!((l2[Field::P.index()] - (1.0f64 / 3.0).sqrt()).abs() < 1e-13);
    assert!((semi[Field::U.index()] - 2f64.sqrt()).abs() < 1e-13);
    assert!((semi[Field::P.index()] - 1.0).abs() < 1e-13);
}

#[test]
fn p1_norm_matches_exact_vertex_formula() {
    let mesh = build_unit_square_mesh(8).unwrap();
    let g = |x: [f64; 2]| (std::f64::consts::PI * x[0]).sin();
    let sol = synthetic(&mesh, Preset::Enriched, 0.1, &*only(Field::P, move |x| [g(x), 0.0, 0.0]));
    // ∫_K v² = |K|/12 (Σ vᵢ² + (Σ vᵢ)²) for linear v
    let mut oracle = 0.0;
    for t in 0..mesh.num_triangles() {
        let v = mesh.triangles[t].map(|i| g(mesh.vertices[i]));
        let s: f64 = v.iter().sum();
        let s2: f64 = v.iter().map(|a| a * a).sum();
        oracle += mesh.signed_area(t).abs() / 12.0 * (s2 + s * s);
    }
    let got = field_norms(&mesh, &sol, NormKind::L2)[Field::P.index()];
    assert!((got - oracle.sqrt()).abs() < 1e-13, "{got} vs {}", oracle.sqrt());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn norms_are_absolutely_homogeneous(a in -5.0f64..5.0, c in -2.0f64..2.0) {
        let mesh = build_unit_square_mesh(2).unwrap();
        let base: Box<FieldFn> = Box::new(move |_, x| [x[0] * x[1] + c, x[0] - x[1] * x[1], 1.0 + x[0]]);
        let s1 = synthetic(&mesh, Preset::Enriched, 0.1, &*base);
        let mut s2 = s1.clone();
        for v in s2.coefficients.iter_mut() {
            *v *= a;
        }
        for kind in [NormKind::L2, NormKind::H1Semi, NormKind::H1] {
            let (n1, n2) = (field_norms(&mesh, &s1, kind), field_norms(&mesh, &s2, kind));
            for k in 0..5 {
                prop_assert!((n2[k] - a.abs() * n1[k]).abs() <= 1e-12 * (1.0 + n1[k]));
            }
        }
    }
}

fn smooth(f: Field, x: [f64; 2]) -> [f64; 3] {
    let (a, b) = (x[0], x[1]);
    let s = (2.0 * a).sin() * (1.0 + b * b);
    match f {
        Field::Sigma => [s, a * b * b, (b - a).cos()],
        Field::S => [a.exp() * b, s, 0.0],
        Field::P | Field::Theta => [(a + 2.0 * b).sin(), 0.0, 0.0],
        Field::U => [b.cos() * a, (a * b).sin(), 0.0],
    }
}

#[test]
fn self_error_is_zero_and_cross_mesh_error_decreases() {
    let fine = build_unit_square_mesh(16).unwrap();
    let reference = synthetic(&fine, Preset::Enriched, 0.1, &smooth);
    let e = error_between(&fine, &reference, Reference::Discrete { mesh: &fine, solution: &reference }).unwrap();
    assert!(e.l2.iter().chain(&e.h1).all(|v| *v < 1e-12), "{e:?}");
    let mut prev: Option<FieldErrors> = None;
    for n in [2, 4, 8] {
        let mesh = build_unit_square_mesh(n).unwrap();
        let sol = synthetic(&mesh, Preset::Enriched, 0.1, &smooth);
        let e = error_between(&mesh, &sol, Reference::Discrete { mesh: &fine, solution: &reference }).unwrap();
        if let Some(p) = prev {
            for k in 0..5 {
                assert!(e.l2[k] < p.l2[k] && e.h1[k] < p.h1[k], "field {k} at n={n}");
            }
        }
        prev = Some(e);
    }
}

#[test]
fn analytic_error_of_exact_polynomial_vanishes() {
    let mesh = build_unit_square_mesh(3).unwrap();
    // quadratic where the space allows it, linear in the P1 fields
    let poly = |f: Field, x: [f64; 2]| -> FieldPoint {
        match f {
            Field::P | Field::Theta => ([x[0] + 2.0 * x[1], 0.0, 0.0], [[1.0, 2.0], [0.0; 2], [0.0; 2]]),
            _ => ([x[0] * x[1], 0.0, 0.0], [[x[1], x[0]], [0.0; 2], [0.0; 2]]),
        }
    };
    let sol = synthetic(&mesh, Preset::Enriched, 0.1, &move |f, x| poly(f, x).0);
    let e = error_between(&mesh, &sol, Reference::Analytic(&poly)).unwrap();
    assert!(e.l2.iter().chain(&e.h1).all(|v| *v < 1e-13), "{e:?}");
}

fn errs(v: f64) -> FieldErrors {
    FieldErrors { l2: [v; 5], h1: [2.0 * v; 5] }
}

#[test]
fn eoc_of_quadratic_sequence() {
    let t = eoc(&[(0.4, errs(0.16)), (0.2, errs(0.04)), (0.1, errs(0.01))]).unwrap();
    assert!(t.rows[0].eoc_l2.is_none());
    for r in &t.rows[1..] {
        for v in r.eoc_l2.unwrap().iter().chain(&r.eoc_h1.unwrap()) {
            assert!((v - 2.0).abs() < 1e-12);
        }
    }
    assert!((t.min_eoc_l2(Field::Sigma).unwrap() - 2.0).abs() < 1e-12);
    let csv = t.to_csv();
    assert!(csv.starts_with("h,e_sigma_L2,"));
    assert_eq!(csv.lines().count(), 4);
    assert_eq!(csv.lines().nth(1).unwrap().split(',').count(), ConvergenceTable::csv_header().split(',').count());
}

#[test]
fn eoc_examples() {
    assert!((eoc_value(0.2, 0.04, 0.1, 0.01) - 2.0).abs() < 1e-14);
    assert!((eoc_value(0.2, 0.2, 0.1, 0.1) - 1.0).abs() < 1e-14);
    assert_eq!(eoc_value(0.2, 0.3, 0.1, 0.3), 0.0);
}

#[test]
fn eoc_rejects_bad_tables() {
    assert!(matches!(eoc(&[(0.1, errs(1.0))]), Err(PostError::Table(_))));
    assert!(eoc(&[(0.1, errs(1.0)), (0.2, errs(0.5))]).is_err());
    assert!(eoc(&[(0.1, errs(1.0)), (0.1, errs(0.5))]).is_err());
    assert!(eoc(&[(0.2, errs(1.0)), (0.1, errs(0.0))]).is_err());
    assert!(eoc(&[(0.0, errs(1.0)), (-0.1, errs(0.5))]).is_err());
}

#[test]
fn closure_of_linear_stress_matches_hand_projection() {
    let mesh = build_unit_square_mesh(2).unwrap();
    let (kn, a) = (0.5, 3.0);
    let sol = synthetic(&mesh, Preset::Enriched, kn, &*only(Field::Sigma, move |x| [a * x[0], 0.0, 0.0]));
    // σ̃ = diag(a x, 0, −a x): stf of ∇σ̃ has m₁₁₁ = 3a/5, m₂₂₁ = −2a/15, m₃₃₁ = −7a/15
    let f = -2.0 * kn;
    for c in closure_moments(&mesh, &sol) {
        assert!((c.m.get(0, 0, 0) - f * 3.0 * a / 5.0).abs() < 1e-12);
        assert!((c.m.get(1, 1, 0) - f * -2.0 * a / 15.0).abs() < 1e-12);
        assert!((c.m.get(0, 1, 1) - f * -2.0 * a / 15.0).abs() < 1e-12);
        assert!((c.m.get(2, 0, 2) - f * -7.0 * a / 15.0).abs() < 1e-12);
        assert!(c.m.get(0, 0, 1).abs() < 1e-12 && c.m.get(1, 1, 1).abs() < 1e-12);
        assert!(c.m.symmetry_defect() < 1e-12 && c.m.trace_defect() < 1e-12);
        assert_eq!(c.delta, 0.0);
    }
}

#[test]
fn closure_of_solenoidal_flux() {
    let mesh = build_unit_square_mesh(2).unwrap();
    let kn = 0.2;
    let sol = synthetic(&mesh, Preset::Enriched, kn, &*only(Field::S, |x| [x[0], -x[1], 0.0]));
    for c in closure_moments(&mesh, &sol) {
        assert!(c.delta.abs() < 1e-12);
        let r = -24.0 / 5.0 * kn;
        assert!((c.r[0][0] - r).abs() < 1e-12 && (c.r[1][1] + r).abs() < 1e-12);
        assert!(c.r[2][2].abs() < 1e-12 && c.r[0][1].abs() < 1e-12);
    }
    let sol = synthetic(&mesh, Preset::Enriched, kn, &*only(Field::S, |x| [x[0] * x[1], 0.5 * x[1] * x[1], 0.0]));
    for c in closure_moments(&mesh, &sol) {
        assert!((c.delta + 12.0 * kn * 2.0 * c.x[1]).abs() < 1e-11);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn closure_tensors_are_symmetric_and_trace_free(g in proptest::array::uniform6(-3.0f64..3.0)) {
        let mesh = build_unit_square_mesh(1).unwrap();
        let sol = synthetic(&mesh, Preset::Enriched, 0.3, &move |f, x| match f {
            Field::Sigma => [g[0] * x[0] + g[1] * x[1] * x[1], g[2] * x[0] * x[1], g[3] * x[1]],
            Field::S => [g[4] * x[0] * x[1], g[5] * x[0], 0.0],
            _ => [0.0; 3],
        });
        for c in closure_moments(&mesh, &sol) {
            prop_assert!(c.m.symmetry_defect() < 1e-11 && c.m.trace_defect() < 1e-11);
            let tr = c.r[0][0] + c.r[1][1] + c.r[2][2];
            prop_assert!(tr.abs() < 1e-11 && (c.r[0][1] - c.r[1][0]).abs() < 1e-12);
        }
    }
}

#[test]
fn slice_of_constant_and_linear_fields() {
    let mesh = build_unit_square_mesh(4).unwrap();
    let sol = synthetic(&mesh, Preset::Enriched, 0.1, &|f, x| match f {
        Field::P => [x[0], 0.0, 0.0],
        Field::Theta => [2.5, 0.0, 0.0],
        _ => [0.0; 3],
    });
    let prof = sample_slice(&mesh, &sol, SliceLine::Horizontal { at: 0.5, from: 0.0, to: 1.0 }, 11);
    assert_eq!(prof.skipped().count(), 0);
    for (i, v) in prof.series(Field::P, 0).into_iter().enumerate() {
        assert!((v.unwrap() - i as f64 / 10.0).abs() < 1e-13);
    }
    assert!(prof.series(Field::Theta, 0).iter().all(|v| (v.unwrap() - 2.5).abs() < 1e-13));
    let csv = prof.to_csv();
    assert_eq!(csv.lines().count(), 12);
    assert!(csv.lines().all(|l| l.split(',').count() == 12));
}

#[test]
fn slice_through_obstacle_skips_hole() {
    let mesh = build_square_with_hole_mesh(0.5).unwrap();
    let sol = synthetic(&mesh, Preset::Enriched, 0.1, &|_, _| [1.0, 1.0, 1.0]);
    let prof = sample_slice(&mesh, &sol, SliceLine::Horizontal { at: 2.0, from: 0.0, to: 8.0 }, 81);
    for s in &prof.samples {
        let inside_hole = s.x[0] > 1.0 + 1e-9 && s.x[0] < 3.0 - 1e-9;
        assert_eq!(s.values.is_none(), inside_hole, "x = {}", s.x[0]);
    }
    assert_eq!(prof.skipped().count(), 19);
    let vert = sample_slice(&mesh, &sol, SliceLine::Vertical { at: 5.0, from: 0.0, to: 8.0 }, 9);
    assert_eq!(vert.skipped().count(), 0);
}

#[test]
fn oscillation_of_constants_and_scaling() {
    let mesh = build_unit_square_mesh(6).unwrap();
    assert_eq!(oscillation_indicator(&mesh, |_, _| 3.0), 0.0);
    assert_eq!(oscillation_indicator(&mesh, |_, _| 0.0), 0.0);
    let tris: Vec<_> = (0..mesh.num_triangles()).map(|t| Triangle::new(mesh.triangle_vertices(t)).unwrap()).collect();
    let q = |t: usize, l: [f64; 3]| {
        let x = tris[t].map(l);
        (7.0 * x[0]).sin() + x[1]
    };
    let base = oscillation_indicator(&mesh, q);
    assert!(base > 0.0);
    assert!((oscillation_indicator(&mesh, |t, l| -4.0 * q(t, l)) - base).abs() < 1e-13 * base);
    let sol = synthetic(&mesh, Preset::Enriched, 0.1, &*only(Field::U, |_| [0.6, 0.8, 0.0]));
    assert!(velocity_oscillation(&mesh, &sol) < 1e-14);
}

#[test]
fn symmetry_defect_and_pressure_mean() {
    let mesh = build_unit_square_mesh(4).unwrap();
    let sol = synthetic(&mesh, Preset::Enriched, 0.1, &|f, x| match f {
        Field::P => [x[0] - 0.5, 0.0, 0.0],
        Field::Theta => [(x[0] - 0.5).powi(2), 0.0, 0.0],
        _ => [0.0; 3],
    });
    let mirror = |x: [f64; 2]| [1.0 - x[0], x[1]];
    assert!(symmetry_defect(&mesh, &sol, Field::Theta, 0, mirror).unwrap() < 1e-13);
    assert!((symmetry_defect(&mesh, &sol, Field::P, 0, mirror).unwrap() - 2.0).abs() < 1e-12);
    assert!(pressure_mean(&mesh, &sol).abs() < 1e-15);
    assert!(matches!(symmetry_defect(&mesh, &sol, Field::P, 0, |x| [x[0] + 5.0, x[1]]), Err(PostError::PointLocation(_))));
}

#[test]
fn vtk_round_trip() {
    let mesh = build_unit_square_mesh(3).unwrap();
    let sol = synthetic(&mesh, Preset::Enriched, 0.1, &smooth);
    let dir = tempfile::tempdir().unwrap();
    let files = export_fields(&mesh, &sol, dir.path(), "fields").unwrap();
    assert_eq!(files.len(), 2);
    let back = read_vtk(&files[0]).unwrap();
    let data = VtkData::from_solution(&mesh, &sol);
    assert_eq!(back.points.len(), mesh.num_vertices() + mesh.num_edges());
    assert_eq!(back.cells.len(), 4 * mesh.num_triangles());
    assert_eq!(back.cells, data.cells);
    assert_eq!(back.arrays.len(), 10);
    for ((n1, a), (n2, b)) in data.arrays.iter().zip(&back.arrays) {
        assert_eq!(n1, n2);
        assert_eq!(a.len(), back.points.len());
        assert!(a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + x.abs())));
    }
    // nodal values at the mesh vertices
    for (i, p) in back.points.iter().enumerate().take(mesh.num_vertices()) {
        let expect = smooth(Field::P, [p[0], p[1]])[0];
        assert!((back.array("p").unwrap()[i] - expect).abs() < 1e-12);
    }
    let csv = std::fs::read_to_string(&files[1]).unwrap();
    assert_eq!(csv.lines().count(), back.points.len() + 1);
    assert!(csv.starts_with("x,y,sigma_xx"));
}

#[test]
fn vtk_subdivision_cells_are_positive_and_cover_area() {
    let mesh = build_unit_square_mesh(2).unwrap();
    let sol = synthetic(&mesh, Preset::Enriched, 0.1, &|_, _| [0.0; 3]);
    let data = VtkData::from_solution(&mesh, &sol);
    let mut area = 0.0;
    for c in &data.cells {
        let [a, b, d] = c.map(|i| data.points[i]);
        let s = 0.5 * ((b[0] - a[0]) * (d[1] - a[1]) - (d[0] - a[0]) * (b[1] - a[1]));
        assert!(s > 0.0);
        area += s;
    }
    assert!((area - 1.0).abs() < 1e-14);
    assert!(data.arrays.iter().all(|(_, v)| v.iter().all(|x| *x == 0.0)));
}

#[test]
fn vtk_reader_reports_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.vtk");
    std::fs::write(&p, "not vtk\n").unwrap();
    assert!(matches!(read_vtk(&p), Err(PostError::Parse { line: 1, .. })));
    std::fs::write(&p, "# vtk DataFile Version 3.0\nt\nASCII\nDATASET UNSTRUCTURED_GRID\nPOINTS 2 double\n0 0 0\n1 x 0\n").unwrap();
    assert!(matches!(read_vtk(&p), Err(PostError::Parse { .. })));
    assert!(matches!(read_vtk(&dir.path().join("missing.vtk")), Err(PostError::Io { .. })));
}
