use super::*;

#[test]
fn unit_square_counts_and_frames() {
    let m = build_unit_square_mesh(1).unwrap();
    assert_eq!((m.num_vertices(), m.num_triangles(), m.boundary.len()), (4, 2, 4));
    assert!((m.h_max - 2f64.sqrt()).abs() < 1e-14);
    let m = build_unit_square_mesh(2).unwrap();
    let b = m
        .boundary
        .iter()
        .find(|b| {
            let [i, j] = m.edges[b.edge].v;
            m.vertices[i] == [0.0, 0.0] || m.vertices[j] == [0.0, 0.0]
        })
        .filter(|b| b.label == Some(GAMMA1))
        .unwrap();
    assert_eq!(b.normal, [0.0, -1.0]);
    assert_eq!(b.tangent, [1.0, 0.0]);
    let m = build_unit_square_mesh(4).unwrap();
    assert_eq!(m.euler_characteristic(), 1);
    assert!((m.total_area() - 1.0).abs() < 1e-14);
    assert!(build_unit_square_mesh(0).is_err());
}

#[test]
fn unit_square_labels() {
    let m = build_unit_square_mesh(4).unwrap();
    for b in &m.boundary {
        let [i, j] = m.edges[b.edge].v;
        let on_bottom = m.vertices[i][1] == 0.0 && m.vertices[j][1] == 0.0;
        assert_eq!(b.label, Some(if on_bottom { GAMMA1 } else { GAMMA2 }));
    }
    assert_eq!(m.boundary_with_label(GAMMA1).count(), 4);
    assert_eq!(m.labels(), vec![GAMMA1, GAMMA2]);
}

#[test]
fn mirrored_square_is_reflection_invariant() {
    let m = build_unit_square_mesh_with(4, SquareSplit::Mirrored).unwrap();
    let r = validate_mesh(&m);
    assert_eq!(r.orientation_violations, 0);
    let key = |p: [f64; 2]| ((p[0] * 1e6).round() as i64, (p[1] * 1e6).round() as i64);
    let mut cents: Vec<_> = (0..m.num_triangles())
        .map(|t| {
            let p = m.triangle_vertices(t);
            key([(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0])
        })
        .collect();
    let mut mirrored: Vec<_> = (0..m.num_triangles())
        .map(|t| {
            let p = m.triangle_vertices(t);
            key([1.0 - (p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0])
        })
        .collect();
    cents.sort();
    mirrored.sort();
    assert_eq!(cents, mirrored);
    assert!(build_unit_square_mesh_with(3, SquareSplit::Mirrored).is_err());
}

#[test]
fn annulus_geometry() {
    let m = build_annulus_mesh(0.5, 2.0, 0.2).unwrap();
    for b in &m.boundary {
        for v in m.edges[b.edge].v {
            let r = (m.vertices[v][0].powi(2) + m.vertices[v][1].powi(2)).sqrt();
            assert!((r - 0.5).abs() < 1e-10 || (r - 2.0).abs() < 1e-10);
            let expect = if r < 1.0 { INNER } else { OUTER };
            assert_eq!(b.label, Some(expect));
        }
    }
    assert_eq!(m.euler_characteristic(), 0);
    assert!(m.h_max <= 1.5 * 0.2, "h_max {}", m.h_max);
    let r = validate_mesh(&m);
    assert_eq!(r.conformity_violations, 0);
    assert_eq!(r.orientation_violations, 0);
    assert_eq!(r.frame_violations, 0);
    assert!(r.within_quality_bound);
    let exact = std::f64::consts::PI * (4.0 - 0.25);
    assert!((m.total_area() - exact).abs() / exact < 1e-2);
}

#[test]
fn annulus_area_deficit_shrinks_quadratically() {
    let exact = std::f64::consts::PI * (4.0 - 0.25);
    let d1 = exact - build_annulus_mesh(0.5, 2.0, 0.2).unwrap().total_area();
    let d2 = exact - build_annulus_mesh(0.5, 2.0, 0.1).unwrap().total_area();
    assert!(d1 > 0.0 && d2 > 0.0);
    assert!(d1 / d2 > 3.0, "{d1} {d2}");
    let fine = build_annulus_mesh(0.5, 2.0, 0.05).unwrap();
    assert!((exact - fine.total_area()) / exact < 1e-3);
}

#[test]
fn annulus_refinement_halves_hmax() {
    let a = build_annulus_mesh(0.5, 2.0, 0.2).unwrap();
    let b = build_annulus_mesh(0.5, 2.0, 0.1).unwrap();
    let ratio = a.h_max / b.h_max;
    assert!(ratio > 2.0 / QUALITY_BOUND && ratio < 2.0 * QUALITY_BOUND / 2.0, "{ratio}");
}

#[test]
fn annulus_rejects_bad_parameters() {
    assert!(build_annulus_mesh(0.0, 2.0, 0.1).is_err());
    assert!(build_annulus_mesh(2.0, 1.0, 0.1).is_err());
    assert!(build_annulus_mesh(0.5, 2.0, 1.6).is_err());
    assert!(build_annulus_mesh(0.5, 2.0, 0.0).is_err());
}

#[test]
fn square_with_hole() {
    let m = build_square_with_hole_mesh(0.2).unwrap();
    assert_eq!(m.euler_characteristic(), 0);
    for v in &m.vertices {
        assert!(!(v[0] > 1.0 + 1e-12 && v[0] < 3.0 - 1e-12 && v[1] > 1.0 + 1e-12 && v[1] < 3.0 - 1e-12));
    }
    for c in [[1.0, 1.0], [3.0, 1.0], [1.0, 3.0], [3.0, 3.0]] {
        assert!(m.vertices.iter().any(|v| (v[0] - c[0]).abs() < 1e-12 && (v[1] - c[1]).abs() < 1e-12));
    }
    assert!((m.total_area() - 60.0).abs() < 1e-10);
    let left = m
        .boundary
        .iter()
        .find(|b| {
            let [i, j] = m.edges[b.edge].v;
            let (a, c) = (m.vertices[i], m.vertices[j]);
            (a[0] - 1.0).abs() < 1e-12 && (c[0] - 1.0).abs() < 1e-12 && a[1] > 1.0 && c[1] > 1.0 && a[1] < 3.0 && c[1] < 3.0
        })
        .unwrap();
    assert_eq!(left.label, Some(INNER));
    assert_eq!(left.normal, [1.0, 0.0]);
    assert_eq!(validate_mesh(&m).frame_violations, 0);
    assert!(build_square_with_hole_mesh(0.6).is_err());
}

#[test]
fn validation_reports() {
    let m = build_unit_square_mesh(1).unwrap();
    let r = validate_mesh(&m);
    assert!((r.min_angle_deg - 45.0).abs() < 1e-10);
    assert_eq!(r.orientation_violations, 0);
    let mut flipped = m.triangles.clone();
    flipped[0].swap(1, 2);
    let bad = Mesh::from_parts(m.vertices.clone(), flipped, &HashMap::new()).unwrap();
    let r = validate_mesh(&bad);
    assert_eq!(r.orientation_violations, 1);
    assert_eq!(r.unlabeled_boundary_edges, 4);
    // normals are still outward for the flipped triangle
    assert_eq!(r.frame_violations, 0);
}

#[test]
fn hanging_vertex_is_detected() {
    // triangle split on one side only: the midpoint hangs on the long edge
    let v = vec![[0.0, 0.0], [2.0, 0.0], [1.0, 1.0], [1.0, 0.0], [1.0, -1.0]];
    let t = vec![[0, 1, 2], [0, 4, 3], [3, 4, 1]];
    let m = Mesh::from_parts(v, t, &HashMap::new()).unwrap();
    assert!(validate_mesh(&m).conformity_violations >= 1);
}

#[test]
fn file_round_trip() {
    let m = build_annulus_mesh(0.5, 2.0, 0.4).unwrap();
    let s = write_mesh_string(&m);
    let back = read_mesh_str(&s).unwrap();
    assert_eq!(back.triangles, m.triangles);
    assert_eq!(back.boundary, m.boundary);
    for (a, b) in back.vertices.iter().zip(&m.vertices) {
        assert_eq!(a, b);
    }
    assert!(read_mesh_str("mesh2d 2\n").is_err());
    assert!(matches!(read_mesh_str("mesh2d 1\n1 0 0\n0.0\n"), Err(MeshError::Parse { line: 3, .. })));
}

#[test]
fn locator_finds_points() {
    let m = build_unit_square_mesh(8).unwrap();
    let loc = PointLocator::new(&m);
    for x in [[0.0, 0.0], [0.5, 0.5], [1.0, 1.0], [0.123, 0.987]] {
        let (t, l) = loc.locate(x).unwrap();
        let tri = crate::elements::Triangle::new(m.triangle_vertices(t)).unwrap();
        let y = tri.map(l);
        assert!((y[0] - x[0]).abs() < 1e-12 && (y[1] - x[1]).abs() < 1e-12);
    }
    assert!(loc.locate([1.1, 0.5]).is_none());
    let (_, l) = loc.locate_within([1.0 + 1e-6, 0.5], 1e-5).unwrap();
    assert!(l.iter().all(|v| *v >= 0.0));
    let h = build_square_with_hole_mesh(0.5).unwrap();
    assert!(PointLocator::new(&h).locate([2.0, 2.0]).is_none());
}

#[test]
fn rigid_motion_keeps_frames_consistent() {
    let m = build_unit_square_mesh(2).unwrap().rigidly_moved([3.0, -1.0], 0.7).unwrap();
    let r = validate_mesh(&m);
    assert_eq!(r.frame_violations, 0);
    assert_eq!(r.unlabeled_boundary_edges, 0);
    assert!((m.total_area() - 1.0).abs() < 1e-13);
}
