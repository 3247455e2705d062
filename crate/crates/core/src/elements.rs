//! Dense P1 element matrices on a single triangle.
//!
//! With local vertices `q1, q2, q3` the edge vectors are
//! `u = q2 − q3`, `v = q3 − q1`, `w = q1 − q2`; the barycentric gradients are
//! `(u_y, −u_x) / 2|T|` and so on. Every matrix is built from its upper
//! triangle and mirrored, so symmetry holds exactly.

use crate::error::{invalid, Result};
use crate::mesh::{Point, AREA_EPS};

/// Dense `N × N` element matrix (`N` is 3 for scalar problems, 6 for 2D elasticity).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementMatrix<const N: usize> {
    pub entries: [[f64; N]; N],
}

impl<const N: usize> ElementMatrix<N> {
    fn from_upper(mut entries: [[f64; N]; N]) -> Self {
        for a in 0..N {
            for b in 0..a {
                entries[a][b] = entries[b][a];
            }
        }
        ElementMatrix { entries }
    }

    pub fn order(&self) -> usize {
        N
    }

    /// Entries stored column by column, the layout of a triplet column.
    pub fn column_major(&self) -> Vec<f64> {
        (0..N).flat_map(|b| (0..N).map(move |a| self.entries[a][b])).collect()
    }

    pub fn mul_vec(&self, x: &[f64; N]) -> [f64; N] {
        let mut y = [0.0; N];
        for a in 0..N {
            y[a] = (0..N).map(|b| self.entries[a][b] * x[b]).sum();
        }
        y
    }
}

fn check_area(area: f64) -> Result<()> {
    if !(area > AREA_EPS) || !area.is_finite() {
        return invalid(format!("element area must be positive, got {area:e}"));
    }
    Ok(())
}

/// `(|T|/12) [[2,1,1],[1,2,1],[1,1,2]]`.
pub fn elem_mass(area: f64) -> Result<ElementMatrix<3>> {
    check_area(area)?;
    let d = area / 6.0;
    let o = area / 12.0;
    Ok(ElementMatrix { entries: [[d, o, o], [o, d, o], [o, o, d]] })
}

/// Weighted mass matrix with the weight sampled at the three vertices.
pub fn elem_mass_weighted(area: f64, w: [f64; 3]) -> Result<ElementMatrix<3>> {
    check_area(area)?;
    let [w1, w2, w3] = w.map(|x| x * area / 30.0);
    Ok(ElementMatrix::from_upper([
        [3.0 * w1 + w2 + w3, w1 + w2 + w3 / 2.0, w1 + w2 / 2.0 + w3],
        [0.0, w1 + 3.0 * w2 + w3, w1 / 2.0 + w2 + w3],
        [0.0, 0.0, w1 + w2 + 3.0 * w3],
    ]))
}

/// Edge vectors `u = q2 − q3`, `v = q3 − q1`, `w = q1 − q2`.
pub fn edge_vectors(q: [Point; 3]) -> [[f64; 2]; 3] {
    let sub = |a: Point, b: Point| [a[0] - b[0], a[1] - b[1]];
    [sub(q[1], q[2]), sub(q[2], q[0]), sub(q[0], q[1])]
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Stiffness matrix `(1/4|T|) [e_a · e_b]` over the edge vectors.
pub fn elem_stiff(q: [Point; 3], area: f64) -> Result<ElementMatrix<3>> {
    check_area(area)?;
    let e = edge_vectors(q);
    let area4 = 4.0 * area;
    let mut k = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in a..3 {
            k[a][b] = dot(e[b], e[a]) / area4;
        }
    }
    Ok(ElementMatrix::from_upper(k))
}

/// Isotropic Hooke tensor in Voigt form for strains `(ε_xx, ε_yy, 2ε_xy)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticParams {
    lambda: f64,
    mu: f64,
    c: [[f64; 3]; 3],
}

impl ElasticParams {
    /// Requires `μ > 0` and `λ + μ > 0`.
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        if !lambda.is_finite() || !mu.is_finite() || !(mu > 0.0) || !(lambda + mu > 0.0) {
            return invalid(format!("Lamé parameters need mu > 0 and lambda + mu > 0, got lambda = {lambda}, mu = {mu}"));
        }
        let d = lambda + 2.0 * mu;
        Ok(ElasticParams { lambda, mu, c: [[d, lambda, 0.0], [lambda, d, 0.0], [0.0, 0.0, mu]] })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn tensor(&self) -> &[[f64; 3]; 3] {
        &self.c
    }
}

/// Elastic stiffness `|T| Bᵀ C B` for interleaved DOFs `(x1, y1, x2, y2, x3, y3)`.
pub fn elem_stiff_elastic(q: [Point; 3], area: f64, params: &ElasticParams) -> Result<ElementMatrix<6>> {
    check_area(area)?;
    let [u, v, w] = edge_vectors(q);
    // unscaled strain-displacement matrix; the 1/(2|T|) factors become 1/(4|T|) overall
    let b = [
        [u[1], 0.0, v[1], 0.0, w[1], 0.0],
        [0.0, -u[0], 0.0, -v[0], 0.0, -w[0]],
        [-u[0], u[1], -v[0], v[1], -w[0], w[1]],
    ];
    let c = params.tensor();
    let mut cb = [[0.0; 6]; 3];
    for r in 0..3 {
        for col in 0..6 {
            cb[r][col] = (0..3).map(|s| c[r][s] * b[s][col]).sum();
        }
    }
    let area4 = 4.0 * area;
    let mut k = [[0.0; 6]; 6];
    for a in 0..6 {
        for bb in a..6 {
            k[a][bb] = (0..3).map(|r| b[r][a] * cb[r][bb]).sum::<f64>() / area4;
        }
    }
    Ok(ElementMatrix::from_upper(k))
}
