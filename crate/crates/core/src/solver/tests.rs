use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::assembly::{build_system, Field, Params, Preset, WallData};
use crate::mesh::{build_annulus_mesh, build_unit_square_mesh, GAMMA1, GAMMA2, INNER, OUTER};

fn square_walls() -> WallData {
    WallData::new().with(GAMMA1, 1.0, 1.0).with(GAMMA2, 0.0, 0.0)
}

#[test]
fn zero_data_gives_zero_solution() {
    let mesh = build_unit_square_mesh(2).unwrap();
    let wall = WallData::uniform(&[GAMMA1, GAMMA2], 0.0, 0.0);
    let sys = build_system(&mesh, Preset::Enriched, Params::new(0.1, 1.0).unwrap(), &wall).unwrap();
    let sol = solve(&sys).unwrap();
    assert!(sol.coefficients.iter().all(|v| *v == 0.0));
    assert_eq!(sol.residual, 0.0);
    assert!(sol.report.condition_estimate < SINGULAR_CONDITION);
}

#[test]
fn enriched_square_solve_meets_residual_and_mean() {
    let mesh = build_unit_square_mesh(4).unwrap();
    let sys = build_system(&mesh, Preset::Enriched, Params::new(0.1, 1.0).unwrap(), &square_walls()).unwrap();
    let sol = solve(&sys).unwrap();
    assert!(sol.residual <= RESIDUAL_TOL);
    let mean: f64 = sys.matrix.row(sys.dofs.multiplier).1.iter().zip(sys.matrix.row(sys.dofs.multiplier).0).map(|(v, j)| v * sol.coefficients[*j]).sum();
    let pn = norm2(sol.field(Field::P));
    assert!(mean.abs() <= 1e-10 * pn.max(1e-300), "{mean} vs {pn}");
    assert!(pn > 0.0);
}

#[test]
fn annulus_couette_solves() {
    let mesh = build_annulus_mesh(0.5, 2.0, 0.4).unwrap();
    let wall = WallData::uniform(&[INNER, OUTER], 1.0, 1.0);
    let sys = build_system(&mesh, Preset::Enriched, Params::new(0.1, 1.0).unwrap(), &wall).unwrap();
    let sol = solve(&sys).unwrap();
    assert!(sol.residual <= RESIDUAL_TOL, "{}", sol.residual);
    assert!(norm2(sol.field(Field::U)) > 0.0);
}

#[test]
fn equal_order_mixed_annulus_is_singular() {
    let mesh = build_annulus_mesh(0.5, 2.0, 0.4).unwrap();
    let wall = WallData::new().with(INNER, 1.0, 1.0).with(OUTER, 1.0, 2.0);
    let sys = build_system(&mesh, Preset::EqualOrder, Params::new(0.1, 1.0).unwrap(), &wall).unwrap();
    match solve(&sys) {
        Err(SolveError::Singular { report }) => assert!(report.nonfinite || report.condition_estimate >= SINGULAR_CONDITION),
        other => panic!("expected singular, got {:?}", other.map(|s| s.report)),
    }
    let mn = solve_min_norm(&sys).unwrap();
    assert!(mn.coefficients.iter().all(|v| v.is_finite()));
    assert!(mn.residual < 1e-8, "{}", mn.residual);
}

#[test]
fn min_norm_textbook_pseudo_inverse() {
    let k = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0)]);
    let r = min_norm_solve(&k, &[2.0, 0.0], None).unwrap();
    assert_eq!(r.null_dim, 1);
    assert!((r.x[0] - 2.0).abs() < 1e-14 && r.x[1].abs() < 1e-14, "{:?}", r.x);
}

#[test]
fn min_norm_matches_regular_solve() {
    let mesh = build_unit_square_mesh(2).unwrap();
    let sys = build_system(&mesh, Preset::Enriched, Params::new(0.5, 1.0).unwrap(), &square_walls()).unwrap();
    let a = solve(&sys).unwrap();
    let b = solve_min_norm(&sys).unwrap();
    let d: Vec<f64> = a.coefficients.iter().zip(&b.coefficients).map(|(x, y)| x - y).collect();
    assert!(norm2(&d) <= 1e-8 * norm2(&a.coefficients));
}

/// Pseudo-inverse via the dense SVD as an independent oracle.
fn pinv_solve(a: &Mat<f64>, b: &[f64]) -> Vec<f64> {
    let svd = a.svd().unwrap();
    let s: Vec<f64> = svd.S().column_vector().iter().copied().collect();
    let (u, v) = (svd.U(), svd.V());
    let n = a.ncols();
    let mut x = vec![0.0; n];
    for q in 0..s.len() {
        if s[q] > 1e-10 * s[0] {
            let c: f64 = (0..a.nrows()).map(|i| u[(i, q)] * b[i]).sum::<f64>() / s[q];
            for i in 0..n {
                x[i] += c * v[(i, q)];
            }
        }
    }
    x
}

#[test]
fn min_norm_rank_deficient_symmetric_against_svd() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 12;
    let r = 8;
    let g = Mat::from_fn(n, r, |_, _| rng.random_range(-1.0..1.0));
    let d: Vec<f64> = (0..r).map(|i| if i % 2 == 0 { 1.0 + i as f64 } else { -(2.0 + i as f64) }).collect();
    let a = Mat::from_fn(n, n, |i, j| (0..r).map(|q| g[(i, q)] * d[q] * g[(j, q)]).sum());
    let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let trip: Vec<_> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| (i, j, a[(i, j)])).collect();
    let k = CsrMatrix::from_triplets(n, n, &trip);
    let res = min_norm_solve(&k, &b, None).unwrap();
    assert_eq!(res.null_dim, n - r);
    assert!(res.inconsistency > 0.0);
    let oracle = pinv_solve(&a, &b);
    let diff: Vec<f64> = res.x.iter().zip(&oracle).map(|(x, y)| x - y).collect();
    assert!(norm2(&diff) <= 1e-9 * norm2(&oracle), "{}", norm2(&diff));
}

#[test]
fn min_norm_large_neumann_laplacian() {
    // grid-graph Laplacian: null space is the constants
    let m = 50;
    let n = m * m;
    let mut trip = Vec::new();
    for i in 0..m {
        for j in 0..m {
            let a = i * m + j;
            for (di, dj) in [(1, 0), (0, 1)] {
                if i + di < m && j + dj < m {
                    let b = (i + di) * m + j + dj;
                    trip.extend([(a, a, 1.0), (b, b, 1.0), (a, b, -1.0), (b, a, -1.0)]);
                }
            }
        }
    }
    let k = CsrMatrix::from_triplets(n, n, &trip);
    let b: Vec<f64> = (0..n).map(|i| ((i as f64) * 0.01).sin() + 0.3).collect();
    let res = min_norm_solve(&k, &b, None).unwrap();
    assert_eq!(res.null_dim, 1);
    let mean = res.x.iter().sum::<f64>() / n as f64;
    assert!(mean.abs() < 1e-9 * norm2(&res.x));
    let bmean = b.iter().sum::<f64>() / n as f64;
    let proj: Vec<f64> = b.iter().map(|v| v - bmean).collect();
    let kx = k.matvec(&res.x);
    let r: Vec<f64> = kx.iter().zip(&proj).map(|(a, b)| a - b).collect();
    assert!(norm2(&r) <= 1e-9 * norm2(&proj), "{}", norm2(&r));
}

#[test]
fn min_norm_rejects_nonsymmetric_and_oversized() {
    let k = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0)]);
    assert!(matches!(min_norm_solve(&k, &[1.0, 0.0], None), Err(SolveError::NotSymmetric(_))));
    let big = CsrMatrix::identity(MAX_DENSE_DIM + 1);
    assert!(matches!(min_norm_solve(&big, &vec![0.0; MAX_DENSE_DIM + 1], None), Err(SolveError::DimensionCap { .. })));
}

#[test]
fn singular_matrix_detected() {
    let k = CsrMatrix::from_triplets(3, 3, &[(0, 0, 1.0), (1, 1, 1.0), (1, 2, 1.0), (2, 1, 1.0), (2, 2, 1.0)]);
    assert!(matches!(solve_csr(&k, &[1.0, 1.0, 1.0]), Err(SolveError::Singular { .. }) | Err(SolveError::Factorization(_))));
}

#[test]
fn condition_estimate_of_diagonal() {
    let k = CsrMatrix::from_triplets(3, 3, &[(0, 0, 1.0), (1, 1, 4.0), (2, 2, 9.0)]);
    let mut f = Factorization::new(&k).unwrap();
    // equilibration makes the matrix the identity
    assert!((f.condition_estimate() - 1.0).abs() < 1e-12);
}

#[test]
fn u_p_infsup_bounded_and_stable() {
    let b4 = infsup_constant(&build_unit_square_mesh(4).unwrap(), InfSupPair::UP, Preset::Enriched).unwrap();
    let b8 = infsup_constant(&build_unit_square_mesh(8).unwrap(), InfSupPair::UP, Preset::Enriched).unwrap();
    assert_eq!(b4.near_null, 1);
    assert!(b4.beta > 0.1, "{}", b4.beta);
    assert!((b4.beta - b8.beta).abs() < 0.2 * b4.beta, "{} {}", b4.beta, b8.beta);
}

#[test]
fn infsup_frame_independent() {
    let mesh = build_unit_square_mesh(2).unwrap();
    let moved = mesh.rigidly_moved([3.0, -1.5], 0.7).unwrap();
    for pair in InfSupPair::ALL {
        let a = infsup_constant(&mesh, pair, Preset::Enriched).unwrap();
        let b = infsup_constant(&moved, pair, Preset::Enriched).unwrap();
        assert!((a.beta - b.beta).abs() < 1e-8, "{pair}: {} {}", a.beta, b.beta);
        assert_eq!(a.near_null, b.near_null);
    }
}

#[test]
fn s_theta_bounded_below() {
    let betas: Vec<f64> = [2, 4, 8].iter().map(|n| infsup_constant(&build_unit_square_mesh(*n).unwrap(), InfSupPair::STheta, Preset::Enriched).unwrap().beta).collect();
    let (lo, hi) = betas.iter().fold((f64::INFINITY, 0.0f64), |(l, h), b| (l.min(*b), h.max(*b)));
    assert!(lo >= 0.8 * hi, "{betas:?}");
}

#[test]
fn coercivity_on_kernel_positive() {
    let mesh = build_unit_square_mesh(2).unwrap();
    let r = coercivity_witness(&mesh, Preset::Enriched, Params::new(1.0, 1.0).unwrap(), 50, 3).unwrap();
    assert!(r.kernel_dim > 0);
    assert!(r.min_rayleigh > 0.0 && r.sample_min >= r.min_rayleigh * (1.0 - 1e-9));
}

#[test]
fn symmetric_backend_matches_lu() {
    let mesh = build_annulus_mesh(0.5, 2.0, 0.4).unwrap();
    let wall = WallData::new().with(INNER, 1.0, 1.0).with(OUTER, 1.0, 2.0);
    let sys = build_system(&mesh, Preset::Enriched, Params::new(0.1, 1.0).unwrap(), &wall).unwrap();
    let sol = solve(&sys).unwrap();
    assert_eq!(sol.report.backend, Backend::Ldlt);
    let (x, _, lu) = solve_csr(&sys.matrix, &sys.rhs).unwrap();
    assert_eq!(lu.backend, Backend::Lu);
    let diff: Vec<f64> = x.iter().zip(&sol.coefficients).map(|(a, b)| a - b).collect();
    assert!(norm2(&diff) <= 1e-8 * norm2(&x));
    let ratio = sol.report.condition_estimate / lu.condition_estimate;
    assert!((0.5..2.0).contains(&ratio), "{ratio}");
}

#[test]
fn symmetric_backend_flags_singular_matrix() {
    let k = CsrMatrix::from_triplets(3, 3, &[(0, 0, 1.0), (1, 1, 1.0), (1, 2, 1.0), (2, 1, 1.0), (2, 2, 1.0)]);
    let mut f = Factorization::symmetric(&k, &[1.0; 3], &[1; 3]).unwrap();
    assert!(f.condition_estimate().is_infinite());
    assert!(f.stalled());
    let err = solve_symmetric(&k, &[1.0, 1.0, 1.0], &[1.0; 3], &[1; 3]);
    assert!(matches!(err, Err(SolveError::Singular { .. }) | Err(SolveError::Factorization(_))));
}

#[test]
fn symmetric_backend_solves_saddle_point() {
    // [[2, 1], [1, 0]] has a zero pivot in its natural order
    let k = CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0)]);
    let mut f = Factorization::symmetric(&k, &[1.0, 1.0], &[1, -1]).unwrap();
    let (x, _) = f.solve(&[3.0, 1.0]);
    assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    assert!(f.condition_estimate().is_finite());
    assert!(matches!(Factorization::symmetric(&k, &[1.0], &[1, -1]), Err(SolveError::Shape(_))));
}
