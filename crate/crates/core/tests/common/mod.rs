//! Reference computations that share no code with the library: element
//! matrices from barycentric coordinates obtained by inverting the vertex
//! matrix, exact monomial integrals, and dense global accumulation.
#![allow(dead_code)]

use femasm::{CscMatrix, MatrixKind, Mesh};
use nalgebra::{DMatrix, Matrix3, SMatrix};
use rand::Rng;

pub type Tri = [[f64; 2]; 3];

pub fn area(q: Tri) -> f64 {
    let m = Matrix3::new(1.0, q[0][0], q[0][1], 1.0, q[1][0], q[1][1], 1.0, q[2][0], q[2][1]);
    0.5 * m.determinant().abs()
}

/// `∇λ_a` for the barycentric coordinates `λ_a(x, y) = c0 + c1·x + c2·y`.
pub fn gradients(q: Tri) -> [[f64; 2]; 3] {
    let m = Matrix3::new(1.0, q[0][0], q[0][1], 1.0, q[1][0], q[1][1], 1.0, q[2][0], q[2][1]);
    // column a of the inverse holds the coefficients of λ_a
    let inv = m.try_inverse().expect("nondegenerate triangle");
    std::array::from_fn(|a| [inv[(1, a)], inv[(2, a)]])
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `∫_T λ_0^i λ_1^j λ_2^k = 2|T| i! j! k! / (i + j + k + 2)!`
pub fn monomial_integral(area: f64, e: [u32; 3]) -> f64 {
    2.0 * area * factorial(e[0]) * factorial(e[1]) * factorial(e[2]) / factorial(e[0] + e[1] + e[2] + 2)
}

pub fn mass(q: Tri) -> [[f64; 3]; 3] {
    let t = area(q);
    std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            let mut e = [0; 3];
            e[a] += 1;
            e[b] += 1;
            monomial_integral(t, e)
        })
    })
}

/// `∫_T w_h λ_a λ_b` with `w_h = Σ_c w_c λ_c` the P1 interpolant of the vertex samples.
pub fn mass_weighted(q: Tri, w: [f64; 3]) -> [[f64; 3]; 3] {
    let t = area(q);
    std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            (0..3)
                .map(|c| {
                    let mut e = [0; 3];
                    e[a] += 1;
                    e[b] += 1;
                    e[c] += 1;
                    w[c] * monomial_integral(t, e)
                })
                .sum()
        })
    })
}

pub fn stiff(q: Tri) -> [[f64; 3]; 3] {
    let t = area(q);
    let g = gradients(q);
    std::array::from_fn(|a| std::array::from_fn(|b| t * (g[a][0] * g[b][0] + g[a][1] * g[b][1])))
}

/// `|T| BᵀCB` with the strain `(ε_xx, ε_yy, 2ε_xy)` of interleaved displacements.
pub fn elastic(q: Tri, lambda: f64, mu: f64) -> SMatrix<f64, 6, 6> {
    let g = gradients(q);
    let mut b = SMatrix::<f64, 3, 6>::zeros();
    for a in 0..3 {
        b[(0, 2 * a)] = g[a][0];
        b[(1, 2 * a + 1)] = g[a][1];
        b[(2, 2 * a)] = g[a][1];
        b[(2, 2 * a + 1)] = g[a][0];
    }
    let c = Matrix3::new(lambda + 2.0 * mu, lambda, 0.0, lambda, lambda + 2.0 * mu, 0.0, 0.0, 0.0, mu);
    b.transpose() * c * b * area(q)
}

pub fn triangle(mesh: &Mesh, k: usize) -> Tri {
    mesh.triangles()[k].map(|i| mesh.vertices()[i])
}

/// Dense global matrix by direct accumulation of the reference element matrices.
pub fn dense_oracle(mesh: &Mesh, kind: MatrixKind, w: &dyn Fn(f64, f64) -> f64, lambda: f64, mu: f64) -> DMatrix<f64> {
    let n = kind.n_df(mesh.nq());
    let mut m = DMatrix::zeros(n, n);
    for (k, t) in mesh.triangles().iter().enumerate() {
        let q = triangle(mesh, k);
        if kind == MatrixKind::ElasticStiffness {
            let e = elastic(q, lambda, mu);
            let dofs = [2 * t[0], 2 * t[0] + 1, 2 * t[1], 2 * t[1] + 1, 2 * t[2], 2 * t[2] + 1];
            for a in 0..6 {
                for b in 0..6 {
                    m[(dofs[a], dofs[b])] += e[(a, b)];
                }
            }
        } else {
            let e = match kind {
                MatrixKind::Mass => mass(q),
                MatrixKind::WeightedMass => mass_weighted(q, q.map(|p| w(p[0], p[1]))),
                _ => stiff(q),
            };
            for a in 0..3 {
                for b in 0..3 {
                    m[(t[a], t[b])] += e[a][b];
                }
            }
        }
    }
    m
}

pub fn to_dmatrix(a: &CscMatrix) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(a.n_rows(), a.n_cols());
    for (i, j, v) in a.iter() {
        m[(i, j)] += v;
    }
    m
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Largest `|a_ij − a_ji|` over the stored entries.
pub fn asymmetry(a: &CscMatrix) -> f64 {
    let mut worst = 0.0f64;
    for (i, j, v) in a.iter() {
        worst = worst.max((v - a.get(j, i).unwrap()).abs());
    }
    worst
}

pub fn mul_vec(a: &CscMatrix, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.n_rows()];
    for (i, j, v) in a.iter() {
        y[i] += v * x[j];
    }
    y
}

/// Translations in x and y and the infinitesimal rotation `(−y, x)`, interleaved.
pub fn rigid_modes(mesh: &Mesh) -> [Vec<f64>; 3] {
    let tx = mesh.vertices().iter().flat_map(|_| [1.0, 0.0]).collect();
    let ty = mesh.vertices().iter().flat_map(|_| [0.0, 1.0]).collect();
    let rot = mesh.vertices().iter().flat_map(|p| [-p[1], p[0]]).collect();
    [tx, ty, rot]
}

/// A random triangle in `[-2, 2]²` whose smallest angle is not tiny.
pub fn random_triangle<R: Rng>(rng: &mut R) -> Tri {
    loop {
        let q: Tri = std::array::from_fn(|_| [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]);
        let edges = [(0, 1), (1, 2), (2, 0)].map(|(i, j)| ((q[i][0] - q[j][0]).powi(2) + (q[i][1] - q[j][1]).powi(2)).sqrt());
        let longest = edges.iter().cloned().fold(0.0, f64::max);
        // area relative to the longest edge squared bounds the smallest angle from below
        if area(q) > 0.05 * longest * longest {
            return q;
        }
    }
}
