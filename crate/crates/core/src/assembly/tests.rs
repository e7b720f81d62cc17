use super::*;
use crate::elements::{Triangle, TENSOR_UNITS};
use crate::interp::canonical_interpolant;
use crate::mesh::{build_annulus_mesh, build_unit_square_mesh, GAMMA1, GAMMA2};
use crate::tensorops::{embed_2d, stf3_project, SymTensor2, ThirdOrderTensor3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit(kn: f64, chi: f64) -> Params {
    Params::new(kn, chi).unwrap()
}

fn square_walls() -> WallData {
    WallData::uniform(&[GAMMA1, GAMMA2], 0.0, 0.0)
}

fn form_value(mesh: &Mesh, dofs: &DofMap, p: Params, form: Form, x: &[f64], y: &[f64]) -> f64 {
    form_matrix(mesh, dofs, p, form).unwrap().bilinear(y, x)
}

#[test]
fn a_form_of_constant_flux() {
    let m = build_unit_square_mesh(2).unwrap();
    let d = DofMap::for_preset(&m, Preset::Enriched);
    let s = canonical_interpolant(&m, &d, Field::S, |_| [1.0, 0.0, 0.0]);
    let p = unit(1.0, 1.0);
    let vol = form_value(&m, &d, p, Form::AVolume, &s, &s);
    let bnd = form_value(&m, &d, p, Form::ABoundary, &s, &s);
    assert!((vol - 4.0 / 15.0).abs() < 1e-12, "{vol}");
    assert!((bnd - 49.0 / 25.0).abs() < 1e-12, "{bnd}");
    assert!((vol + bnd - 167.0 / 75.0).abs() < 1e-12);
}

#[test]
fn d_boundary_of_identity() {
    let m = build_unit_square_mesh(2).unwrap();
    let d = DofMap::for_preset(&m, Preset::Enriched);
    let sig = canonical_interpolant(&m, &d, Field::Sigma, |_| [1.0, 0.0, 1.0]);
    let v = form_value(&m, &d, unit(1.0, 1.0), Form::DBoundary, &sig, &sig);
    assert!((v - 13.5).abs() < 1e-12, "{v}");
}

#[test]
fn coupling_forms_on_linear_fields() {
    let m = build_unit_square_mesh(3).unwrap();
    let d = DofMap::for_preset(&m, Preset::Enriched);
    let p = unit(1.0, 1.0);
    let px = canonical_interpolant(&m, &d, Field::P, |x| [x[0], 0.0, 0.0]);
    let v = canonical_interpolant(&m, &d, Field::U, |_| [1.0, 0.0, 0.0]);
    assert!((form_value(&m, &d, p, Form::G, &px, &v) - 1.0).abs() < 1e-12);
    let th = canonical_interpolant(&m, &d, Field::Theta, |_| [1.0, 0.0, 0.0]);
    let r = canonical_interpolant(&m, &d, Field::S, |x| [x[0], 0.0, 0.0]);
    assert!((form_value(&m, &d, p, Form::B, &th, &r) - 1.0).abs() < 1e-12);
    // e(u, τ) with u = e1, τ = x e1⊗e1: ∫ ∂x τ11 = 1
    let tau = canonical_interpolant(&m, &d, Field::Sigma, |x| [x[0], 0.0, 0.0]);
    assert!((form_value(&m, &d, p, Form::E, &v, &tau) - 1.0).abs() < 1e-12);
    // c(r, σ) volume part with σ = I, r = (x, 0): 2/5 ∫ ∂x r1 = 2/5
    let sig = canonical_interpolant(&m, &d, Field::Sigma, |_| [1.0, 0.0, 1.0]);
    assert!((form_value(&m, &d, p, Form::CVolume, &r, &sig) - 0.4).abs() < 1e-12);
}

#[test]
fn c_boundary_oracle() {
    // σ = I, r = e1: σ_nn = 1, σ_nt = 0, r_n = n1 → −3/20 ∮ n1 = 0;
    // σ = e1⊗e2 + e2⊗e1, r = e1 on the bottom and top edges: σ_nt = n1 t2 + n2 t1
    let m = build_unit_square_mesh(2).unwrap();
    let d = DofMap::for_preset(&m, Preset::Enriched);
    let p = unit(1.0, 1.0);
    let r = canonical_interpolant(&m, &d, Field::S, |_| [1.0, 0.0, 0.0]);
    let sig = canonical_interpolant(&m, &d, Field::Sigma, |_| [1.0, 0.0, 1.0]);
    assert!(form_value(&m, &d, p, Form::CBoundary, &r, &sig).abs() < 1e-13);
    let shear = canonical_interpolant(&m, &d, Field::Sigma, |_| [0.0, 1.0, 0.0]);
    // per edge: σ_nt r_t with r_t = t1; bottom n=(0,−1) t=(1,0): σ_nt = −1, r_t = 1
    // top n=(0,1) t=(−1,0): σ_nt = −1, r_t = −1; left/right give σ_nt r_t = 0·… + …
    let mut expect = 0.0;
    for (n, t) in [([0.0, -1.0], [1.0, 0.0]), ([1.0, 0.0], [0.0, 1.0]), ([0.0, 1.0], [-1.0, 0.0]), ([-1.0, 0.0], [0.0, -1.0])] {
        let nt = n[0] * t[1] + n[1] * t[0];
        let sn = n[1] * n[0] * 2.0;
        expect += -3.0 / 20.0 * sn * n[0] - 0.2 * nt * t[0];
    }
    assert!((form_value(&m, &d, p, Form::CBoundary, &r, &shear) - expect).abs() < 1e-13);
}

#[test]
fn rhs_oracles() {
    let m = build_unit_square_mesh(2).unwrap();
    let d = DofMap::for_preset(&m, Preset::Enriched);
    let zero = assemble_rhs(&m, &d, &square_walls()).unwrap();
    assert!(zero.iter().all(|v| *v == 0.0));
    let both = WallData::uniform(&[GAMMA1, GAMMA2], 0.0, 1.0);
    let f = assemble_rhs(&m, &d, &both).unwrap();
    let r = canonical_interpolant(&m, &d, Field::S, |_| [1.0, 0.0, 0.0]);
    assert!(dot(&f, &r).abs() < 1e-13);
    let bottom = WallData::new().with(GAMMA1, 0.0, 1.0).with(GAMMA2, 0.0, 0.0);
    let f = assemble_rhs(&m, &d, &bottom).unwrap();
    let r = canonical_interpolant(&m, &d, Field::S, |_| [0.0, 1.0, 0.0]);
    assert!((dot(&f, &r) - 1.0).abs() < 1e-13);
    // l2 with u_t = 1 everywhere against τ = e1⊗e2 + e2⊗e1: −∮ (n1 t2 + n2 t1)
    let moving = WallData::uniform(&[GAMMA1, GAMMA2], 1.0, 0.0);
    let f = assemble_rhs(&m, &d, &moving).unwrap();
    let tau = canonical_interpolant(&m, &d, Field::Sigma, |_| [0.0, 1.0, 0.0]);
    // n1 t2 + n2 t1 = n1² − n2² for t = (−n2, n1): bottom/top −1, left/right +1
    assert!(dot(&f, &tau).abs() < 1e-13);
    let tau = canonical_interpolant(&m, &d, Field::Sigma, |_| [1.0, 0.0, 0.0]);
    // n1 t1 = −n1 n2 = 0 on axis-aligned edges
    assert!(dot(&f, &tau).abs() < 1e-13);
}

#[test]
fn missing_wall_data_is_rejected() {
    let m = build_unit_square_mesh(1).unwrap();
    let w = WallData::new().with(GAMMA1, 0.0, 0.0);
    assert!(matches!(build_system(&m, Preset::Enriched, unit(1.0, 1.0), &w), Err(AssemblyError::MissingWallData(2))));
    assert!(Params::new(0.0, 1.0).is_err());
    assert!(Params::new(1.0, -1.0).is_err());
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn dof_counts() {
    let m = build_unit_square_mesh(1).unwrap();
    assert_eq!((m.num_vertices(), m.num_edges(), m.num_triangles()), (4, 5, 2));
    let d = DofMap::for_preset(&m, Preset::Enriched);
    // σ 3·(4+5+6), s 2·9, p 4, u 2·9, θ 4, multiplier 1
    assert_eq!(d.total, 45 + 18 + 4 + 18 + 4 + 1);
    assert_eq!(d.total, 90);
    assert_eq!(DofMap::for_preset(&m, Preset::EqualOrder).total, 27 + 18 + 4 + 18 + 4 + 1);
    assert_eq!(DofMap::for_preset(&m, Preset::TaylorHood).total, 27 + 18 + 4 + 8 + 4 + 1);
    let mut seen = vec![false; d.total];
    for f in Field::ALL {
        for i in d.range(f) {
            assert!(!seen[i]);
            seen[i] = true;
            assert_eq!(d.field_of(i), Some(f));
        }
    }
    assert_eq!(seen.iter().filter(|s| !**s).count(), 1);
    assert_eq!(d.field_of(d.multiplier), None);
}

fn small_system(preset: Preset) -> (Mesh, BlockSystem) {
    let m = build_unit_square_mesh(2).unwrap();
    let w = WallData::new().with(GAMMA1, 0.3, 1.0).with(GAMMA2, -0.2, 0.5);
    let s = build_system(&m, preset, unit(0.7, 1.3), &w).unwrap();
    (m, s)
}

#[test]
fn symmetrized_matrix_is_symmetric() {
    for preset in Preset::ALL {
        let (_, s) = small_system(preset);
        let j = s.symmetrizer();
        let k = s.matrix.scaled(&j, &vec![1.0; s.dim()]);
        let kt = k.transpose();
        let scale = k.max_abs();
        for (i, jj, v) in k.triplets() {
            assert!((v - kt.get(i, jj)).abs() < 1e-12 * scale, "{preset} ({i},{jj})");
        }
    }
}

#[test]
fn block_structure() {
    let (_, s) = small_system(Preset::Enriched);
    let d = &s.dofs;
    let w: Vec<usize> = d.range(Field::U).chain(d.range(Field::Theta)).collect();
    for &i in &w {
        for &j in &w {
            assert_eq!(s.matrix.get(i, j), 0.0);
        }
    }
    // a and d blocks symmetric; A − Aᵀ only where c pairs σ with s
    let t: Vec<usize> = d.range(Field::Sigma).chain(d.range(Field::S)).chain(d.range(Field::P)).collect();
    let scale = s.matrix.max_abs();
    for &i in &t {
        for &j in &t {
            let asym = s.matrix.get(i, j) - s.matrix.get(j, i);
            let (fi, fj) = (d.field_of(i).unwrap(), d.field_of(j).unwrap());
            let c_pair = (fi == Field::Sigma && fj == Field::S) || (fi == Field::S && fj == Field::Sigma);
            if !c_pair {
                assert!(asym.abs() < 1e-12 * scale, "{fi:?} {fj:?}");
            }
        }
    }
}

#[test]
fn a_block_is_positive_semidefinite() {
    let (_, s) = small_system(Preset::Enriched);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let d = &s.dofs;
    for _ in 0..100 {
        let mut x = vec![0.0; s.dim()];
        for f in [Field::Sigma, Field::S, Field::P] {
            for i in d.range(f) {
                x[i] = rng.random_range(-1.0..1.0);
            }
        }
        assert!(s.matrix.bilinear(&x, &x) > 0.0);
    }
}

#[test]
fn stf_metric_matches_direct_projection() {
    let metric = stf_gradient_metric();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..20 {
        // random gradients of two tensor fields: ∂_a σ_c
        let gs: [[f64; 2]; 3] = std::array::from_fn(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
        let gt: [[f64; 2]; 3] = std::array::from_fn(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
        let grad3 = |g: &[[f64; 2]; 3]| {
            let mut m = ThirdOrderTensor3::default();
            for a in 0..2 {
                let e = embed_2d(&SymTensor2::new(g[0][a], g[1][a], g[2][a])).0;
                for i in 0..3 {
                    for j in 0..3 {
                        m.set(i, j, a, e[i][j]);
                    }
                }
            }
            stf3_project(&m)
        };
        let direct = grad3(&gs).ddot(&grad3(&gt));
        let mut via = 0.0;
        for c in 0..3 {
            for a in 0..2 {
                for dd in 0..3 {
                    for b in 0..2 {
                        via += gs[c][a] * gt[dd][b] * metric.g[2 * c + a][2 * dd + b];
                    }
                }
            }
        }
        assert!((direct - via).abs() < 1e-13);
    }
    // the ℙ₂-tensor component units enter as E12 = e1⊗e2 + e2⊗e1
    assert_eq!(TENSOR_UNITS[1][0][1], 1.0);
}

#[test]
fn discrete_adjoint_identity() {
    // (u, ∇·σ) + (sym∇u, σ) = 0 for σ with vanishing trace
    let m = build_unit_square_mesh(3).unwrap();
    let d = DofMap::for_preset(&m, Preset::Enriched);
    let p = unit(1.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut boundary = vec![false; d.scalar_dims[0]];
    for b in &m.boundary {
        let e = &m.edges[b.edge];
        boundary[e.v[0]] = true;
        boundary[e.v[1]] = true;
        boundary[m.num_vertices() + b.edge] = true;
    }
    let mut sig = vec![0.0; d.total];
    for c in 0..3 {
        for (s, on_b) in boundary.iter().enumerate() {
            if !on_b {
                sig[d.global(Field::Sigma, c, s)] = rng.random_range(-1.0..1.0);
            }
        }
    }
    let mut u = vec![0.0; d.total];
    for i in d.range(Field::U) {
        u[i] = rng.random_range(-1.0..1.0);
    }
    // u lives in the same ℙ₂ space as s, so c(u, σ) = 2/5 (σ, ∇u)
    let mut u_as_s = vec![0.0; d.total];
    let (ru, rs) = (d.range(Field::U), d.range(Field::S));
    u_as_s[rs].copy_from_slice(&u[ru]);
    let e = form_value(&m, &d, p, Form::E, &u, &sig);
    let c = form_value(&m, &d, p, Form::CVolume, &u_as_s, &sig);
    assert!((e + 2.5 * c).abs() < 1e-10, "{e} {c}");
    assert!(e.abs() > 1e-3);
}

#[test]
fn flipped_tangents_leave_matrix_unchanged() {
    let m = build_unit_square_mesh(2).unwrap();
    let mut flipped = m.clone();
    for b in flipped.boundary.iter_mut() {
        b.tangent = [-b.tangent[0], -b.tangent[1]];
    }
    let w = square_walls();
    let a = build_system(&m, Preset::Enriched, unit(0.5, 1.0), &w).unwrap();
    let b = build_system(&flipped, Preset::Enriched, unit(0.5, 1.0), &w).unwrap();
    for (x, y) in a.matrix.values.iter().zip(&b.matrix.values) {
        assert!((x - y).abs() < 1e-13);
    }
}

#[test]
fn polynomial_forms_are_refinement_invariant() {
    // a(s, s) for s ∈ ℙ₂ is reproduced exactly on a refined mesh
    let f = |x: [f64; 2]| [x[0] * x[0] - x[1], x[0] * x[1], 0.0];
    let mut vals = Vec::new();
    for n in [2, 4] {
        let m = build_unit_square_mesh(n).unwrap();
        let d = DofMap::for_preset(&m, Preset::Enriched);
        let s = canonical_interpolant(&m, &d, Field::S, f);
        let k = assemble_terms(&m, &d, unit(0.3, 2.0), &[Term::new(Form::AVolume, 1.0, 0.0), Term::new(Form::ABoundary, 1.0, 0.0)]).unwrap();
        vals.push(k.bilinear(&s, &s));
    }
    assert!((vals[0] - vals[1]).abs() < 1e-11 * vals[0].abs());
}

#[test]
fn matrix_dump_writes_sidecar() {
    let (_, s) = small_system(Preset::TaylorHood);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k.coo");
    s.write_matrix(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), s.matrix.nnz() + 1);
    let meta = std::fs::read_to_string(path.with_extension("meta")).unwrap();
    assert!(meta.contains("u P1"));
}

#[test]
fn annulus_system_assembles() {
    let m = build_annulus_mesh(0.5, 2.0, 0.6).unwrap();
    let w = WallData::uniform(&[crate::mesh::INNER, crate::mesh::OUTER], 1.0, 1.0);
    let s = build_system(&m, Preset::Enriched, unit(0.1, 1.0), &w).unwrap();
    assert_eq!(s.dim(), s.dofs.total);
    assert!(s.rhs.iter().any(|v| *v != 0.0));
    let _ = Triangle::reference();
}
