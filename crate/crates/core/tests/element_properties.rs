mod common;

use common::Tri;
use femasm::elements::{elem_mass, elem_mass_weighted, elem_stiff, elem_stiff_elastic, ElasticParams};
use femasm::mesh::triangle_area;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TRIANGLES: usize = 100;

fn triangles() -> Vec<Tri> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    (0..TRIANGLES).map(|_| common::random_triangle(&mut rng)).collect()
}

fn dense<const N: usize>(e: &[[f64; N]; N]) -> DMatrix<f64> {
    DMatrix::from_fn(N, N, |i, j| e[i][j])
}

fn rel_diff<const N: usize>(a: &[[f64; N]; N], b: &DMatrix<f64>) -> f64 {
    let scale = common::max_abs(b);
    let mut worst = 0.0f64;
    for i in 0..N {
        for j in 0..N {
            worst = worst.max((a[i][j] - b[(i, j)]).abs());
        }
    }
    worst / scale
}

fn eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn is_symmetric<const N: usize>(e: &[[f64; N]; N]) -> bool {
    (0..N).all(|i| (0..N).all(|j| e[i][j] == e[j][i]))
}

#[test]
fn stiffness_matches_barycentric_gradient_integral() {
    for q in triangles() {
        let s = elem_stiff(q, triangle_area(q[0], q[1], q[2])).unwrap();
        let r = dense(&common::stiff(q));
        assert!(rel_diff(&s.entries, &r) <= 1e-13, "triangle {q:?}");
    }
}

#[test]
fn mass_matrices_match_exact_integrals() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for q in triangles() {
        let t = triangle_area(q[0], q[1], q[2]);
        let m = elem_mass(t).unwrap();
        assert!(rel_diff(&m.entries, &dense(&common::mass(q))) <= 1e-13);

        let w = [rng.gen_range(-1.0..3.0), rng.gen_range(-1.0..3.0), rng.gen_range(-1.0..3.0)];
        let mw = elem_mass_weighted(t, w).unwrap();
        assert!(rel_diff(&mw.entries, &dense(&common::mass_weighted(q, w))) <= 1e-13);
    }
}

#[test]
fn elastic_matches_dense_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for q in triangles() {
        let (lambda, mu) = (rng.gen_range(-0.4..5.0), rng.gen_range(0.5..3.0));
        let k = elem_stiff_elastic(q, triangle_area(q[0], q[1], q[2]), &ElasticParams::new(lambda, mu).unwrap()).unwrap();
        assert!(rel_diff(&k.entries, &DMatrix::from_iterator(6, 6, common::elastic(q, lambda, mu).iter().copied())) <= 1e-13);
    }
}

#[test]
fn all_element_matrices_are_exactly_symmetric() {
    let params = ElasticParams::new(1.7, 0.6).unwrap();
    for q in triangles() {
        let t = triangle_area(q[0], q[1], q[2]);
        assert!(is_symmetric(&elem_mass(t).unwrap().entries));
        assert!(is_symmetric(&elem_mass_weighted(t, [0.3, 1.9, 2.2]).unwrap().entries));
        assert!(is_symmetric(&elem_stiff(q, t).unwrap().entries));
        assert!(is_symmetric(&elem_stiff_elastic(q, t, &params).unwrap().entries));
    }
}

#[test]
fn mass_matrices_are_positive_definite() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for q in triangles() {
        let t = triangle_area(q[0], q[1], q[2]);
        assert!(eigenvalues(dense(&elem_mass(t).unwrap().entries))[0] > 0.0);
        let w = [rng.gen_range(0.1..4.0), rng.gen_range(0.1..4.0), rng.gen_range(0.1..4.0)];
        let mw = elem_mass_weighted(t, w).unwrap();
        assert!(mw.entries.iter().flatten().all(|&v| v >= 0.0));
        assert!(eigenvalues(dense(&mw.entries))[0] > 0.0);
    }
}

#[test]
fn stiffness_kernel_is_the_constants() {
    for q in triangles() {
        let s = elem_stiff(q, triangle_area(q[0], q[1], q[2])).unwrap();
        let ev = eigenvalues(dense(&s.entries));
        let tol = 1e-12 * ev[2];
        assert!(ev[0].abs() <= tol, "{ev:?}");
        assert!(ev[1] > tol, "{ev:?}");
        assert!(s.mul_vec(&[1.0; 3]).iter().all(|v| v.abs() <= tol));
    }
}

#[test]
fn elastic_kernel_is_the_rigid_motions() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for q in triangles() {
        let (lambda, mu) = (rng.gen_range(-0.4..5.0), rng.gen_range(0.5..3.0));
        let k = elem_stiff_elastic(q, triangle_area(q[0], q[1], q[2]), &ElasticParams::new(lambda, mu).unwrap()).unwrap();
        let ev = eigenvalues(dense(&k.entries));
        let tol = 1e-12 * ev[5];
        assert!(ev[..3].iter().all(|v| v.abs() <= tol), "{ev:?}");
        assert!(ev[3] > tol, "{ev:?}");

        let rotation = [-q[0][1], q[0][0], -q[1][1], q[1][0], -q[2][1], q[2][0]];
        for mode in [[1.0, 0.0, 1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, 1.0, 0.0, 1.0], rotation] {
            assert!(k.mul_vec(&mode).iter().all(|v| v.abs() <= 1e-12 * ev[5] * 2.0));
        }
    }
}

#[test]
fn areas_ignore_cyclic_vertex_order() {
    for q in triangles() {
        let a = triangle_area(q[0], q[1], q[2]);
        assert!((a - triangle_area(q[1], q[2], q[0])).abs() <= 1e-14 * a);
        assert!((a - triangle_area(q[2], q[0], q[1])).abs() <= 1e-14 * a);
        assert!((a - common::area(q)).abs() <= 1e-12 * a);
    }
}

#[test]
fn degenerate_areas_are_rejected() {
    let q = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    let params = ElasticParams::new(1.0, 1.0).unwrap();
    for area in [0.0, -0.5, 1e-301, f64::NAN] {
        assert!(elem_mass(area).is_err());
        assert!(elem_mass_weighted(area, [1.0; 3]).is_err());
        assert!(elem_stiff(q, area).is_err());
        assert!(elem_stiff_elastic(q, area, &params).is_err());
    }
}
