use super::*;
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fact(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `∫_K λ1^a λ2^b λ3^c / |K| = 2 a! b! c! / (a+b+c+2)!`.
fn moment(a: u32, b: u32, c: u32) -> f64 {
    2.0 * fact(a) * fact(b) * fact(c) / fact(a + b + c + 2)
}

fn random_triangle(rng: &mut impl Rng) -> Triangle {
    loop {
        let v: [[f64; 2]; 3] = std::array::from_fn(|_| [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]);
        if let Ok(t) = Triangle::new(v) {
            if t.area.abs() > 0.05 {
                return t;
            }
        }
    }
}

fn random_lambda(rng: &mut impl Rng) -> [f64; 3] {
    let a: f64 = rng.random_range(0.05..0.9);
    let b: f64 = rng.random_range(0.05..(0.95 - a));
    [a, b, 1.0 - a - b]
}

#[test]
fn rules_integrate_barycentric_monomials() {
    for deg in 0..=quadrature::MAX_DEGREE {
        let q = quadrature(deg).unwrap();
        assert!((q.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        for a in 0..=deg as u32 {
            for b in 0..=(deg as u32 - a) {
                let c = deg as u32 - a - b;
                let s: f64 = q
                    .points
                    .iter()
                    .zip(&q.weights)
                    .map(|(l, w)| w * l[0].powi(a as i32) * l[1].powi(b as i32) * l[2].powi(c as i32))
                    .sum();
                assert!((s - moment(a, b, c)).abs() < 1e-14, "deg {deg} ({a},{b},{c})");
            }
        }
    }
    assert_eq!(quadrature(13).unwrap_err(), ElementError::QuadratureDegree(13));
}

#[test]
fn quadrature_examples() {
    let q2 = quadrature(2).unwrap();
    let s: f64 = q2.points.iter().zip(&q2.weights).map(|(l, w)| w * l[0] * l[1]).sum();
    assert!((s - 1.0 / 12.0).abs() < 1e-15);
    let q6 = quadrature(6).unwrap();
    let s: f64 = q6.points.iter().zip(&q6.weights).map(|(l, w)| w * (l[0] * l[1] * l[2]).powi(2)).sum();
    assert!((s - 1.0 / 2520.0).abs() < 1e-16);
}

#[test]
fn edge_rules_are_exact() {
    for deg in 0..=quadrature::MAX_DEGREE {
        let e = edge_quadrature(deg).unwrap();
        for p in 0..=deg as i32 {
            let s: f64 = e.points.iter().zip(&e.weights).map(|(t, w)| w * t.powi(p)).sum();
            assert!((s - 1.0 / (p as f64 + 1.0)).abs() < 1e-14);
        }
    }
}

#[test]
fn enriched_vertex_values() {
    let t = Triangle::reference();
    let (v, _) = eval_enriched_basis(&t, [1.0, 0.0, 0.0]);
    assert!((v[0] - 1.0).abs() < 1e-15);
    assert!(v[1..].iter().all(|x| x.abs() < 1e-15));
}

#[test]
fn enriched_edge_and_interior_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let t = random_triangle(&mut rng);
    // edge 2 joins vertices 0 and 1
    let d = enriched_dofs(&t, |l| eval_enriched_basis(&t, l).0[5]).unwrap();
    assert!((d[5] - 1.0).abs() < 1e-13);
    let d = enriched_dofs(&t, |l| eval_enriched_basis(&t, l).0[6]).unwrap();
    assert!((d[6] - 1.0).abs() < 1e-12);
    assert!(d[7].abs() < 1e-12 && d[8].abs() < 1e-12);
    // closed-form check of the interior coefficients
    let m = 900.0 * moment(3, 1, 1) - 360.0 * moment(2, 2, 1) - 360.0 * moment(2, 1, 2);
    assert!((m - 1.0).abs() < 1e-12);
    let m = 900.0 * moment(2, 2, 1) - 360.0 * moment(1, 3, 1) - 360.0 * moment(1, 2, 2);
    assert!(m.abs() < 1e-12);
}

#[test]
fn duality_on_random_triangles() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let t = random_triangle(&mut rng);
        let b = LocalTensorBasis { tri: t };
        let d = b.duality_matrix().unwrap();
        for i in 0..27 {
            for j in 0..27 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((d[i][j] - e).abs() < 1e-12, "({i},{j}) {}", d[i][j]);
            }
        }
    }
}

#[test]
fn lagrange_bases() {
    let t = Triangle::reference();
    let (v, _) = eval_lagrange_basis(1, &t, [1.0 / 3.0; 3]).unwrap();
    for x in v {
        assert!((x - 1.0 / 3.0).abs() < 1e-15);
    }
    let nodes = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]];
    for (i, n) in nodes.iter().enumerate() {
        let (v, _) = eval_lagrange_basis(2, &t, *n).unwrap();
        for (j, x) in v.iter().enumerate() {
            assert!((x - if i == j { 1.0 } else { 0.0 }).abs() < 1e-15);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let l = random_lambda(&mut rng);
        for deg in [1, 2] {
            let (v, g) = eval_lagrange_basis(deg, &t, l).unwrap();
            assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            let gs = g.iter().fold([0.0, 0.0], |a, b| [a[0] + b[0], a[1] + b[1]]);
            assert!(gs[0].abs() < 1e-13 && gs[1].abs() < 1e-13);
        }
    }
    assert_eq!(eval_lagrange_basis(3, &t, [1.0, 0.0, 0.0]).unwrap_err(), ElementError::LagrangeDegree(3));
}

#[test]
fn gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10 {
        let t = random_triangle(&mut rng);
        let l = random_lambda(&mut rng);
        let x = t.map(l);
        for space in [ScalarSpace::P1, ScalarSpace::P2, ScalarSpace::P2Bubble] {
            let (_, g) = space.eval(&t, l);
            let h = 1e-6;
            for axis in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[axis] += h;
                xm[axis] -= h;
                let (vp, _) = space.eval(&t, t.barycentric(xp));
                let (vm, _) = space.eval(&t, t.barycentric(xm));
                for i in 0..space.local_dim() {
                    let fd = (vp[i] - vm[i]) / (2.0 * h);
                    let scale = 1.0 + g[i][axis].abs();
                    assert!((fd - g[i][axis]).abs() < 1e-6 * scale, "{:?} {i}", space);
                }
            }
        }
    }
}

#[test]
fn bubble_part_vanishes_on_edges() {
    let t = Triangle::reference();
    // basis minus its ℙ₂ interpolant is the bubble part
    for k in 0..3 {
        let (i, j) = edge_vertices(k);
        for s in 0..10 {
            let tt = s as f64 / 9.0;
            let mut l = [0.0; 3];
            l[i] = 1.0 - tt;
            l[j] = tt;
            let (v, _) = eval_enriched_basis(&t, l);
            for m in 0..3 {
                assert!(v[6 + m].abs() < 1e-14);
            }
            let b = l[0] * l[1] * l[2];
            assert!(b.abs() < 1e-14);
        }
    }
}

#[test]
fn enriched_space_contains_p2_and_bubbles() {
    // interpolate each ℙ₂ monomial times constant and b·λ_m through the
    // functionals; the interpolant must reproduce the function exactly
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let t = random_triangle(&mut rng);
    let funcs: Vec<Box<dyn Fn([f64; 3]) -> f64>> = vec![
        Box::new(|l| l[0] * l[0]),
        Box::new(|l| l[0] * l[1]),
        Box::new(|l| l[2]),
        Box::new(|l| l[0] * l[1] * l[2] * l[0]),
        Box::new(|l| l[0] * l[1] * l[2] * l[1]),
        Box::new(|_| 1.0),
    ];
    for f in &funcs {
        let d = enriched_dofs(&t, f).unwrap();
        for _ in 0..5 {
            let l = random_lambda(&mut rng);
            let (v, _) = eval_enriched_basis(&t, l);
            let r: f64 = (0..9).map(|i| d[i] * v[i]).sum();
            assert!((r - f(l)).abs() < 1e-11);
        }
    }
}

#[test]
fn sym_grad_of_p2_onto_p1_tensors_is_surjective() {
    // ℙ₂ vector fields: 12 coefficients on monomials {1,x,y,x²,xy,y²}²;
    // sym∇ lands in ℙ₁ symmetric tensors with basis {1,x,y} × (11,12,22)
    let mut m = Mat::<f64>::zeros(9, 12);
    // derivatives of monomials: d/dx, d/dy as coefficient vectors on {1,x,y}
    let dx: [[f64; 3]; 6] = [[0.0; 3], [1.0, 0.0, 0.0], [0.0; 3], [0.0, 2.0, 0.0], [0.0, 0.0, 1.0], [0.0; 3]];
    let dy: [[f64; 3]; 6] = [[0.0; 3], [0.0; 3], [1.0, 0.0, 0.0], [0.0; 3], [0.0, 1.0, 0.0], [0.0, 0.0, 2.0]];
    for mono in 0..6 {
        for r in 0..3 {
            // v = (m, 0): ε11 = ∂x m, ε12 = ∂y m / 2
            m[(r, mono)] = dx[mono][r];
            m[(3 + r, mono)] = 0.5 * dy[mono][r];
            // v = (0, m): ε22 = ∂y m, ε12 = ∂x m / 2
            m[(6 + r, 6 + mono)] = dy[mono][r];
            m[(3 + r, 6 + mono)] += 0.5 * dx[mono][r];
        }
    }
    let s = m.singular_values().unwrap();
    let rank = s.iter().filter(|v| **v > 1e-10).count();
    assert_eq!(rank, 9);
}

#[test]
fn degenerate_triangle_rejected() {
    assert!(matches!(Triangle::new([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]), Err(ElementError::Degenerate(_))));
    let b = LocalTensorBasis::new([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
    assert_eq!(LocalTensorBasis::DIM, 27);
    assert_eq!(b.value(10, [0.0, 1.0, 0.0]), [0.0, 1.0, 0.0]);
}

#[test]
fn barycentric_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let t = random_triangle(&mut rng);
    let l = random_lambda(&mut rng);
    let back = t.barycentric(t.map(l));
    for k in 0..3 {
        assert!((back[k] - l[k]).abs() < 1e-13);
    }
}
