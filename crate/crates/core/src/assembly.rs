//! Global assembly of P1 matrices with four strategies.
//!
//! `Classical` and `OptV0` insert into a [`CscMatrix`] one entry (or one
//! element block) at a time. `OptV1` fills flat triplet arrays of length
//! `r·nme` element by element and converts once. `OptV2` never loops over
//! elements to build a matrix: the index arrays are gathered from the
//! connectivity with fixed row patterns and each row of the `r × nme` value
//! array is computed by one vectorized pass over the triangles.
//!
//! Batched `r × nme` arrays are stored column-major, so the `r` entries of an
//! element are contiguous and the triplet stream has the same order as in
//! `OptV1`. Row `il = r_loc·b + a` holds local entry `(a, b)` of every
//! element, `r_loc` being 3 or 6. Row passes run over chunks of elements that
//! fit in cache, and each chunk's index columns are written in the same sweep.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use crate::elements::{elem_mass, elem_mass_weighted, elem_stiff, elem_stiff_elastic, ElasticParams, ElementMatrix};
use crate::error::{invalid, Error, Result};
use crate::mesh::Mesh;
use crate::sparse::CscMatrix;

/// Which global matrix to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MatrixKind {
    Mass,
    WeightedMass,
    Stiffness,
    ElasticStiffness,
}

impl MatrixKind {
    pub const ALL: [MatrixKind; 4] =
        [MatrixKind::Mass, MatrixKind::WeightedMass, MatrixKind::Stiffness, MatrixKind::ElasticStiffness];

    /// Matrix dimension for a mesh with `nq` vertices.
    pub fn n_df(self, nq: usize) -> usize {
        match self {
            MatrixKind::ElasticStiffness => 2 * nq,
            _ => nq,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MatrixKind::Mass => "mass",
            MatrixKind::WeightedMass => "massw",
            MatrixKind::Stiffness => "stiff",
            MatrixKind::ElasticStiffness => "elastic",
        }
    }
}

impl fmt::Display for MatrixKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MatrixKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mass" => Ok(MatrixKind::Mass),
            "massw" => Ok(MatrixKind::WeightedMass),
            "stiff" => Ok(MatrixKind::Stiffness),
            "elastic" => Ok(MatrixKind::ElasticStiffness),
            _ => invalid(format!("unknown matrix kind `{s}` (expected mass, massw, stiff or elastic)")),
        }
    }
}

/// Global assembly strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Classical,
    OptV0,
    OptV1,
    OptV2,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Classical, Strategy::OptV0, Strategy::OptV1, Strategy::OptV2];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Classical => "classical",
            Strategy::OptV0 => "optv0",
            Strategy::OptV1 => "optv1",
            Strategy::OptV2 => "optv2",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classical" => Ok(Strategy::Classical),
            "optv0" => Ok(Strategy::OptV0),
            "optv1" => Ok(Strategy::OptV1),
            "optv2" => Ok(Strategy::OptV2),
            _ => invalid(format!("unknown strategy `{s}` (expected classical, optv0, optv1 or optv2)")),
        }
    }
}

/// Named scalar field `w(x, y)` for the weighted mass matrix.
pub struct WeightField {
    name: String,
    eval: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for WeightField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightField").field("name", &self.name).finish()
    }
}

impl WeightField {
    pub const PRESETS: [&'static str; 3] = ["quadratic", "one", "linear"];

    pub fn new(name: impl Into<String>, eval: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        WeightField { name: name.into(), eval: Box::new(eval) }
    }

    /// `1 + x² + y²`, the default benchmark weight.
    pub fn quadratic() -> Self {
        Self::new("quadratic", |x, y| 1.0 + x * x + y * y)
    }

    pub fn one() -> Self {
        Self::new("one", |_, _| 1.0)
    }

    /// `x + y`
    pub fn linear() -> Self {
        Self::new("linear", |x, y| x + y)
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "quadratic" => Ok(Self::quadratic()),
            "one" => Ok(Self::one()),
            "linear" => Ok(Self::linear()),
            _ => invalid(format!("unknown weight field `{name}` (expected one of {:?})", Self::PRESETS)),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        (self.eval)(x, y)
    }

    /// Values at every mesh vertex.
    pub fn sample(&self, mesh: &Mesh) -> Vec<f64> {
        mesh.vertices().iter().map(|&[x, y]| self.eval(x, y)).collect()
    }
}

/// Extra data some matrix kinds need.
#[derive(Debug, Default, Clone, Copy)]
pub struct Coefficients<'a> {
    pub weight: Option<&'a WeightField>,
    pub elastic: Option<ElasticParams>,
}

/// Constant P1 gradients of the three local basis functions on every triangle.
///
/// `dx[a][k]`, `dy[a][k]` are the components of ∇φ_a on triangle `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBatch {
    pub dx: [Vec<f64>; 3],
    pub dy: [Vec<f64>; 3],
}

/// Triplet arrays `Ig`, `Jg`, `Kg`, each an `rows_per_elem × nme` array stored
/// column-major: entry `il` of element `k` sits at `k·rows_per_elem + il`.
#[derive(Debug, Clone, PartialEq)]
pub struct TripletBatch {
    pub rows_per_elem: usize,
    pub nme: usize,
    pub ig: Vec<u32>,
    pub jg: Vec<u32>,
    pub kg: Vec<f64>,
}

impl TripletBatch {
    pub fn new(rows_per_elem: usize, nme: usize, ig: Vec<u32>, jg: Vec<u32>, kg: Vec<f64>) -> Result<Self> {
        let len = rows_per_elem * nme;
        if ig.len() != len || jg.len() != len || kg.len() != len {
            return invalid(format!(
                "batch arrays must all hold {rows_per_elem}x{nme} entries, got {}, {}, {}",
                ig.len(),
                jg.len(),
                kg.len()
            ));
        }
        Ok(TripletBatch { rows_per_elem, nme, ig, jg, kg })
    }

    /// The triplets of element `k`, in local column-major order.
    pub fn column(&self, k: usize) -> Vec<(u32, u32, f64)> {
        let s = k * self.rows_per_elem..(k + 1) * self.rows_per_elem;
        self.ig[s.clone()].iter().zip(&self.jg[s.clone()]).zip(&self.kg[s]).map(|((&i, &j), &v)| (i, j, v)).collect()
    }

    pub fn to_csc(&self, n: usize) -> Result<CscMatrix> {
        CscMatrix::from_triplets(n, n, &self.ig, &self.jg, &self.kg)
    }
}

/// Global index arrays (9 × nme) for scalar P1 matrices.
///
/// Row `3b + a` is `me(a, :)` in `Ig` and `me(b, :)` in `Jg`.
pub fn build_ig_jg_p1(triangles: &[[usize; 3]]) -> (Vec<u32>, Vec<u32>) {
    gather_rows(triangles.iter().map(|t| t.map(|i| i as u32)), triangles.len())
}

/// Global index arrays (36 × nme) for 2D elasticity with interleaved DOFs.
///
/// Vertex `i` carries DOFs `2i` (x) and `2i + 1` (y); row `6b + a` is
/// `T(a, :)` in `Ig` and `T(b, :)` in `Jg` with `T` the 6 × nme DOF table.
pub fn build_ig_jg_p1_vector(triangles: &[[usize; 3]]) -> (Vec<u32>, Vec<u32>) {
    let dofs = triangles.iter().map(|t| std::array::from_fn(|a| (2 * t[a / 2] + a % 2) as u32));
    gather_rows::<6>(dofs, triangles.len())
}

fn gather_rows<const L: usize>(table: impl Iterator<Item = [u32; L]>, nme: usize) -> (Vec<u32>, Vec<u32>) {
    let mut ig = vec![0u32; L * L * nme];
    let mut jg = vec![0u32; L * L * nme];
    scatter_ids(table, &mut ig, &mut jg);
    (ig, jg)
}

/// Writes the index columns of consecutive elements into `ig` and `jg`.
#[inline]
fn scatter_ids<const L: usize>(table: impl Iterator<Item = [u32; L]>, ig: &mut [u32], jg: &mut [u32]) {
    for ((ids, ic), jc) in table.zip(ig.chunks_exact_mut(L * L)).zip(jg.chunks_exact_mut(L * L)) {
        for b in 0..L {
            for a in 0..L {
                ic[L * b + a] = ids[a];
                jc[L * b + a] = ids[b];
            }
        }
    }
}

/// Elements per pass of the batched kernels. Each row of the values array is
/// computed over a whole chunk before the next row, and a chunk of a 36-row
/// array stays in cache.
const CHUNK: usize = 256;

/// Edge vectors and areas of a contiguous run of triangles, one array per component.
#[derive(Default)]
struct ChunkGeometry {
    /// `e[a][c]`: component `c` of `u`, `v`, `w` for `a` = 0, 1, 2.
    e: [[Vec<f64>; 2]; 3],
    area: Vec<f64>,
}

impl ChunkGeometry {
    fn load(&mut self, mesh: &Mesh, range: Range<usize>) {
        let q = mesh.vertices();
        let n = range.len();
        for c in self.e.iter_mut().flatten() {
            c.resize(n, 0.0);
        }
        let [[ux, uy], [vx, vy], [wx, wy]] = &mut self.e;
        let (ux, uy, vx, vy, wx, wy) = (&mut ux[..n], &mut uy[..n], &mut vx[..n], &mut vy[..n], &mut wx[..n], &mut wy[..n]);
        for (k, t) in mesh.triangles()[range.clone()].iter().enumerate() {
            let [p1, p2, p3] = t.map(|i| q[i]);
            (ux[k], uy[k]) = (p2[0] - p3[0], p2[1] - p3[1]);
            (vx[k], vy[k]) = (p3[0] - p1[0], p3[1] - p1[1]);
            (wx[k], wy[k]) = (p1[0] - p2[0], p1[1] - p2[1]);
        }
        self.area.clear();
        self.area.extend_from_slice(&mesh.areas()[range]);
    }

    /// Overwrites the edges with gradients `∇φ_a = (e_a,y, −e_a,x) / 2|T|` as `[x, y]`.
    fn make_gradients(&mut self) {
        for k in 0..self.area.len() {
            let s = 0.5 / self.area[k];
            for e in &mut self.e {
                let (x, y) = (e[0][k], e[1][k]);
                e[0][k] = y * s;
                e[1][k] = -x * s;
            }
        }
    }
}

/// Fills a column-major `r × nme` array chunk by chunk.
fn fill_chunks(nme: usize, r: usize, mut fill: impl FnMut(Range<usize>, &mut [f64])) -> Vec<f64> {
    let mut kg = vec![0.0; r * nme];
    for (c, out) in kg.chunks_mut(r * CHUNK).enumerate() {
        let start = c * CHUNK;
        fill(start..start + out.len() / r, out);
    }
    kg
}

/// Fills `Ig`, `Jg` and `Kg` together, one chunk of elements at a time.
fn fill_batch<const L: usize>(
    mesh: &Mesh,
    dofs: impl Fn([usize; 3]) -> [u32; L],
    mut fill: impl FnMut(Range<usize>, &mut [f64]),
) -> TripletBatch {
    let (nme, r) = (mesh.nme(), L * L);
    let mut ig = vec![0u32; r * nme];
    let mut jg = vec![0u32; r * nme];
    let mut kg = vec![0.0; r * nme];
    let chunks = ig.chunks_mut(r * CHUNK).zip(jg.chunks_mut(r * CHUNK)).zip(kg.chunks_mut(r * CHUNK));
    for (c, ((ic, jc), out)) in chunks.enumerate() {
        let range = c * CHUNK..c * CHUNK + out.len() / r;
        scatter_ids(mesh.triangles()[range.clone()].iter().map(|&t| dofs(t)), ic, jc);
        fill(range, out);
    }
    TripletBatch { rows_per_elem: r, nme, ig, jg, kg }
}

/// Sets row `il` of a column-major chunk with `r` rows.
#[inline]
fn set_row(out: &mut [f64], r: usize, il: usize, values: impl Iterator<Item = f64>) {
    for (col, v) in out.chunks_exact_mut(r).zip(values) {
        col[il] = v;
    }
}

/// Copies rows `src` onto rows `dst` of a column-major chunk with `r` rows.
fn copy_rows(out: &mut [f64], r: usize, dst: &[usize], src: &[usize]) {
    for col in out.chunks_exact_mut(r) {
        for (&d, &s) in dst.iter().zip(src) {
            col[d] = col[s];
        }
    }
}

/// Constant P1 gradients of the three local basis functions on every triangle.
pub fn batch_gradients(mesh: &Mesh) -> GradientBatch {
    let mut g = ChunkGeometry::default();
    g.load(mesh, 0..mesh.nme());
    g.make_gradients();
    let [[dx0, dy0], [dx1, dy1], [dx2, dy2]] = g.e;
    GradientBatch { dx: [dx0, dx1, dx2], dy: [dy0, dy1, dy2] }
}

/// Mass values: rows {0, 4, 8} hold |T|/6, the others |T|/12.
pub fn batch_kg_mass(areas: &[f64]) -> Vec<f64> {
    fill_chunks(areas.len(), 9, mass_rows(areas))
}

fn mass_rows(areas: &[f64]) -> impl FnMut(Range<usize>, &mut [f64]) + '_ {
    move |range, out| {
        let areas = &areas[range];
        for il in 0..9 {
            let d = if il % 4 == 0 { 6.0 } else { 12.0 };
            set_row(out, 9, il, areas.iter().map(|a| a / d));
        }
    }
}

/// Weighted mass values from the vertex-sampled weight.
pub fn batch_kg_mass_weighted(mesh: &Mesh, weight: &WeightField) -> Vec<f64> {
    let tw = weight.sample(mesh);
    fill_chunks(mesh.nme(), 9, mass_weighted_rows(mesh, &tw))
}

fn mass_weighted_rows<'a>(mesh: &'a Mesh, tw: &'a [f64]) -> impl FnMut(Range<usize>, &mut [f64]) + 'a {
    let me = mesh.triangles();
    let areas = mesh.areas();
    let mut w: [Vec<f64>; 3] = Default::default();
    move |range, out| {
        for (a, wa) in w.iter_mut().enumerate() {
            wa.clear();
            wa.extend(range.clone().map(|k| tw[me[k][a]] * areas[k] / 30.0));
        }
        let [w1, w2, w3] = [&w[0], &w[1], &w[2]];
        let row = |f: fn(f64, f64, f64) -> f64| (0..w1.len()).map(move |k| f(w1[k], w2[k], w3[k]));
        set_row(out, 9, 0, row(|a, b, c| 3.0 * a + b + c));
        set_row(out, 9, 1, row(|a, b, c| a + b + c / 2.0));
        set_row(out, 9, 2, row(|a, b, c| a + b / 2.0 + c));
        set_row(out, 9, 4, row(|a, b, c| a + 3.0 * b + c));
        set_row(out, 9, 5, row(|a, b, c| a / 2.0 + b + c));
        set_row(out, 9, 8, row(|a, b, c| a + b + 3.0 * c));
        copy_rows(out, 9, &[3, 6, 7], &[1, 2, 5]);
    }
}

/// Stiffness values `e_a · e_b / 4|T|`.
pub fn batch_kg_stiff(mesh: &Mesh) -> Vec<f64> {
    fill_chunks(mesh.nme(), 9, stiff_rows(mesh))
}

fn stiff_rows(mesh: &Mesh) -> impl FnMut(Range<usize>, &mut [f64]) + '_ {
    let mut g = ChunkGeometry::default();
    let mut inv = Vec::with_capacity(CHUNK);
    move |range, out| {
        g.load(mesh, range);
        let e = &g.e;
        inv.clear();
        inv.extend(g.area.iter().map(|a| 0.25 / a));
        for b in 0..3 {
            for a in b..3 {
                let (ax, ay, bx, by) = (&e[a][0], &e[a][1], &e[b][0], &e[b][1]);
                set_row(out, 9, 3 * b + a, (0..inv.len()).map(|k| (ax[k] * bx[k] + ay[k] * by[k]) * inv[k]));
            }
        }
        copy_rows(out, 9, &[3, 6, 7], &[1, 2, 5]);
    }
}

/// Elastic stiffness values: 21 rows computed from the gradients and the
/// Lamé parameters, the strictly upper ones copied by symmetry.
pub fn batch_kg_elastic(mesh: &Mesh, params: &ElasticParams) -> Vec<f64> {
    fill_chunks(mesh.nme(), 36, elastic_rows(mesh, params))
}

fn elastic_rows<'a>(mesh: &'a Mesh, params: &ElasticParams) -> impl FnMut(Range<usize>, &mut [f64]) + 'a {
    let (lam, mu) = (params.lambda(), params.mu());
    let l2m = lam + 2.0 * mu;
    let (mut dst, mut src) = (Vec::with_capacity(15), Vec::with_capacity(15));
    for beta in 0..6 {
        for alpha in 0..beta {
            dst.push(6 * beta + alpha);
            src.push(6 * alpha + beta);
        }
    }
    let mut g = ChunkGeometry::default();
    move |range, out| {
        g.load(mesh, range);
        g.make_gradients();
        let area = &g.area;
        // entry (α, β) with α = 2a + s, β = 2b + t; s, t = 0 for x and 1 for y
        for beta in 0..6 {
            for alpha in beta..6 {
                let (a, s, b, t) = (alpha / 2, alpha % 2, beta / 2, beta % 2);
                let (ax, ay, bx, by) = (&g.e[a][0], &g.e[a][1], &g.e[b][0], &g.e[b][1]);
                let il = 6 * beta + alpha;
                let ks = 0..area.len();
                match (s, t) {
                    (0, 0) => set_row(out, 36, il, ks.map(|k| (l2m * ax[k] * bx[k] + mu * ay[k] * by[k]) * area[k])),
                    (1, 1) => set_row(out, 36, il, ks.map(|k| (l2m * ay[k] * by[k] + mu * ax[k] * bx[k]) * area[k])),
                    (1, 0) => set_row(out, 36, il, ks.map(|k| (lam * ay[k] * bx[k] + mu * ax[k] * by[k]) * area[k])),
                    _ => set_row(out, 36, il, ks.map(|k| (lam * ax[k] * by[k] + mu * ay[k] * bx[k]) * area[k])),
                }
            }
        }
        copy_rows(out, 36, &dst, &src);
    }
}

/// Index arrays and values of the batched (`OptV2`) assembly, before conversion.
///
/// The three arrays are filled chunk by chunk so each chunk's connectivity is
/// read once while its index and value columns are written.
pub fn build_batch(mesh: &Mesh, kind: MatrixKind, coef: &Coefficients) -> Result<TripletBatch> {
    check_dims(mesh, kind)?;
    let scalar = |t: [usize; 3]| t.map(|i| i as u32);
    let batch = match kind {
        MatrixKind::Mass => fill_batch(mesh, scalar, mass_rows(mesh.areas())),
        MatrixKind::WeightedMass => {
            let tw = weight_field(coef)?.sample(mesh);
            fill_batch(mesh, scalar, mass_weighted_rows(mesh, &tw))
        }
        MatrixKind::Stiffness => fill_batch(mesh, scalar, stiff_rows(mesh)),
        MatrixKind::ElasticStiffness => {
            let params = elastic_params(coef)?;
            let vector = |t: [usize; 3]| std::array::from_fn::<u32, 6, _>(|a| (2 * t[a / 2] + a % 2) as u32);
            fill_batch(mesh, vector, elastic_rows(mesh, &params))
        }
    };
    Ok(batch)
}

fn check_dims(mesh: &Mesh, kind: MatrixKind) -> Result<()> {
    let n = kind.n_df(mesh.nq());
    if n > u32::MAX as usize {
        return invalid(format!("{n} degrees of freedom exceed the 32-bit index range"));
    }
    Ok(())
}

fn elastic_params(coef: &Coefficients) -> Result<ElasticParams> {
    coef.elastic.ok_or_else(|| Error::InvalidArgument("elastic stiffness needs Lamé parameters".into()))
}

fn weight_field<'a>(coef: &Coefficients<'a>) -> Result<&'a WeightField> {
    coef.weight.ok_or_else(|| Error::InvalidArgument("weighted mass needs a weight field".into()))
}

/// Per-element data for the element-loop strategies.
enum Kernel {
    Mass,
    Weighted(Vec<f64>),
    Stiff,
}

impl Kernel {
    fn element(&self, mesh: &Mesh, k: usize) -> Result<([usize; 3], ElementMatrix<3>)> {
        let t = mesh.triangles()[k];
        let area = mesh.areas()[k];
        let e = match self {
            Kernel::Mass => elem_mass(area)?,
            Kernel::Weighted(tw) => elem_mass_weighted(area, t.map(|i| tw[i]))?,
            Kernel::Stiff => elem_stiff(mesh.triangle_points(k), area)?,
        };
        Ok((t, e))
    }
}

fn elastic_element(mesh: &Mesh, k: usize, params: &ElasticParams) -> Result<([usize; 6], ElementMatrix<6>)> {
    let t = mesh.triangles()[k];
    let dofs = [2 * t[0], 2 * t[0] + 1, 2 * t[1], 2 * t[1] + 1, 2 * t[2], 2 * t[2] + 1];
    Ok((dofs, elem_stiff_elastic(mesh.triangle_points(k), mesh.areas()[k], params)?))
}

fn classical<const N: usize>(
    n: usize,
    nme: usize,
    element: impl Fn(usize) -> Result<([usize; N], ElementMatrix<N>)>,
) -> Result<CscMatrix> {
    let mut m = CscMatrix::zeros(n, n);
    for k in 0..nme {
        let (ids, e) = element(k)?;
        for il in 0..N {
            for jl in 0..N {
                m.add(ids[il], ids[jl], e.entries[il][jl])?;
            }
        }
    }
    Ok(m)
}

fn opt_v0<const N: usize>(
    n: usize,
    nme: usize,
    element: impl Fn(usize) -> Result<([usize; N], ElementMatrix<N>)>,
) -> Result<CscMatrix> {
    let mut m = CscMatrix::zeros(n, n);
    for k in 0..nme {
        let (ids, e) = element(k)?;
        m.add_block(&ids, &ids, &e.entries)?;
    }
    Ok(m)
}

fn opt_v1<const N: usize>(
    n: usize,
    nme: usize,
    element: impl Fn(usize) -> Result<([usize; N], ElementMatrix<N>)>,
) -> Result<CscMatrix> {
    let r = N * N;
    let mut ig = vec![0u32; r * nme];
    let mut jg = vec![0u32; r * nme];
    let mut kg = vec![0f64; r * nme];
    let mut kk = 0;
    for k in 0..nme {
        let (ids, e) = element(k)?;
        for jl in 0..N {
            for il in 0..N {
                ig[kk] = ids[il] as u32;
                jg[kk] = ids[jl] as u32;
                kg[kk] = e.entries[il][jl];
                kk += 1;
            }
        }
    }
    CscMatrix::from_triplets(n, n, &ig, &jg, &kg)
}

/// Assembles the global `kind` matrix on `mesh` with the given strategy.
///
/// Returns an `nq × nq` matrix, or `2nq × 2nq` for elasticity with DOFs
/// interleaved per vertex. The incremental strategies keep explicit zeros.
pub fn assemble(mesh: &Mesh, kind: MatrixKind, strategy: Strategy, coef: &Coefficients) -> Result<CscMatrix> {
    check_dims(mesh, kind)?;
    let n = kind.n_df(mesh.nq());
    let nme = mesh.nme();

    if strategy == Strategy::OptV2 {
        return build_batch(mesh, kind, coef)?.to_csc(n);
    }

    if kind == MatrixKind::ElasticStiffness {
        let params = elastic_params(coef)?;
        let element = |k| elastic_element(mesh, k, &params);
        return match strategy {
            Strategy::Classical => classical(n, nme, element),
            Strategy::OptV0 => opt_v0(n, nme, element),
            _ => opt_v1(n, nme, element),
        };
    }

    let kernel = match kind {
        MatrixKind::Mass => Kernel::Mass,
        MatrixKind::WeightedMass => Kernel::Weighted(weight_field(coef)?.sample(mesh)),
        _ => Kernel::Stiff,
    };
    let element = |k| kernel.element(mesh, k);
    match strategy {
        Strategy::Classical => classical(n, nme, element),
        Strategy::OptV0 => opt_v0(n, nme, element),
        _ => opt_v1(n, nme, element),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{unit_disk, unit_square};

    fn unit_triangle() -> Mesh {
        Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]]).unwrap()
    }

    #[test]
    fn scalar_index_pattern() {
        let (ig, jg) = build_ig_jg_p1(&[[5, 7, 9]]);
        assert_eq!(ig, vec![5, 7, 9, 5, 7, 9, 5, 7, 9]);
        assert_eq!(jg, vec![5, 5, 5, 7, 7, 7, 9, 9, 9]);

        let me = [[0, 1, 2], [3, 4, 5]];
        let (ig, jg) = build_ig_jg_p1(&me);
        assert_eq!((ig.len(), jg.len()), (18, 18));
        for k in 0..2 {
            for b in 0..3 {
                for a in 0..3 {
                    assert_eq!(ig[9 * k + 3 * b + a] as usize, me[k][a]);
                    assert_eq!(jg[9 * k + 3 * b + a] as usize, me[k][b]);
                }
            }
        }
    }

    #[test]
    fn vector_index_pattern() {
        let (ig, jg) = build_ig_jg_p1_vector(&[[0, 1, 2]]);
        let expect_i: Vec<u32> = (0..6).flat_map(|_| 0..6).collect();
        let expect_j: Vec<u32> = (0..6).flat_map(|b| std::iter::repeat(b).take(6)).collect();
        assert_eq!(ig, expect_i);
        assert_eq!(jg, expect_j);

        let me = [[4, 0, 2], [1, 3, 2], [7, 5, 6]];
        let (ig, jg) = build_ig_jg_p1_vector(&me);
        assert_eq!(ig.len(), 36 * 3);
        for (k, t) in me.iter().enumerate() {
            let dofs = [2 * t[0], 2 * t[0] + 1, 2 * t[1], 2 * t[1] + 1, 2 * t[2], 2 * t[2] + 1];
            for b in 0..6 {
                for a in 0..6 {
                    assert_eq!(ig[36 * k + 6 * b + a] as usize, dofs[a]);
                    assert_eq!(jg[36 * k + 6 * b + a] as usize, dofs[b]);
                }
            }
        }
    }

    #[test]
    fn gradients_on_unit_triangle() {
        let g = batch_gradients(&unit_triangle());
        assert_eq!((g.dx[0][0], g.dy[0][0]), (-1.0, -1.0));
        assert_eq!((g.dx[1][0], g.dy[1][0]), (1.0, 0.0));
        assert_eq!((g.dx[2][0], g.dy[2][0]), (0.0, 1.0));
    }

    #[test]
    fn gradients_sum_to_zero_and_ignore_translation() {
        let m = unit_disk(6).unwrap();
        let g = batch_gradients(&m);
        for k in 0..m.nme() {
            let sx = g.dx[0][k] + g.dx[1][k] + g.dx[2][k];
            let sy = g.dy[0][k] + g.dy[1][k] + g.dy[2][k];
            assert!(sx.abs() < 1e-12 && sy.abs() < 1e-12);
        }
        let shifted = Mesh::new(
            m.vertices().iter().map(|p| [p[0] + 0.25, p[1] - 0.5]).collect(),
            m.triangles().to_vec(),
        )
        .unwrap();
        let h = batch_gradients(&shifted);
        for a in 0..3 {
            for k in 0..m.nme() {
                assert!((g.dx[a][k] - h.dx[a][k]).abs() < 1e-12);
                assert!((g.dy[a][k] - h.dy[a][k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mass_batch_values() {
        let (d, o) = (1.0 / 12.0, 1.0 / 24.0);
        assert_eq!(batch_kg_mass(&[0.5]), vec![d, o, o, o, d, o, o, o, d]);
        let kg = batch_kg_mass(&[6.0, 12.0]);
        for il in [0, 4, 8] {
            assert_eq!((kg[il], kg[9 + il]), (1.0, 2.0));
        }
        let kg = batch_kg_mass(&[0.3]);
        assert!((kg.iter().sum::<f64>() - 0.3).abs() < 1e-16);
    }

    #[test]
    fn weighted_batch_values() {
        let tri = Mesh::new(vec![[0.0, 0.0], [30.0, 0.0], [0.0, 2.0]], vec![[0, 1, 2]]).unwrap();
        assert_eq!(tri.areas(), &[30.0]);
        let w = WeightField::new("samples", |x, y| if x > 0.0 { 2.0 } else if y > 0.0 { 3.0 } else { 1.0 });
        assert_eq!(batch_kg_mass_weighted(&tri, &w), vec![8.0, 4.5, 5.0, 4.5, 10.0, 5.5, 5.0, 5.5, 12.0]);

        let m = unit_square(3).unwrap();
        let (w, p) = (batch_kg_mass_weighted(&m, &WeightField::one()), batch_kg_mass(m.areas()));
        assert!(w.iter().zip(&p).all(|(x, y)| (x - y).abs() <= 1e-15));
        assert!(batch_kg_mass_weighted(&m, &WeightField::new("zero", |_, _| 0.0)).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stiffness_batch_values() {
        assert_eq!(batch_kg_stiff(&unit_triangle()), vec![1.0, -0.5, -0.5, -0.5, 0.5, 0.0, -0.5, 0.0, 0.5]);
        let m = unit_disk(4).unwrap();
        let batch = build_batch(&m, MatrixKind::Stiffness, &Coefficients::default()).unwrap();
        for k in 0..m.nme() {
            let s: f64 = batch.column(k).iter().map(|e| e.2).sum();
            assert!(s.abs() < 1e-12);
        }
    }

    #[test]
    fn elastic_batch_matches_element_matrices() {
        let m = unit_disk(3).unwrap();
        let params = ElasticParams::new(1.3, 0.4).unwrap();
        let batch = build_batch(&m, MatrixKind::ElasticStiffness, &Coefficients { elastic: Some(params), weight: None })
            .unwrap();
        assert_eq!(batch.rows_per_elem, 36);
        for k in 0..m.nme() {
            let col: Vec<f64> = batch.column(k).iter().map(|e| e.2).collect();
            let e = elem_stiff_elastic(m.triangle_points(k), m.areas()[k], &params).unwrap();
            for (x, y) in col.iter().zip(e.column_major()) {
                assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
            }
            for a in 0..6 {
                for b in 0..6 {
                    assert_eq!(col[6 * b + a], col[6 * a + b]);
                }
            }
        }
    }

    #[test]
    fn fused_batch_matches_separate_builders() {
        // more than one chunk, with a partial last chunk
        let m = unit_square(15).unwrap();
        assert!(m.nme() > CHUNK && m.nme() % CHUNK != 0);
        let w = WeightField::quadratic();
        let params = ElasticParams::new(2.0, 0.5).unwrap();
        let coef = Coefficients { weight: Some(&w), elastic: Some(params) };
        let (ig, jg) = build_ig_jg_p1(m.triangles());
        let (ig6, jg6) = build_ig_jg_p1_vector(m.triangles());
        let cases = [
            (MatrixKind::Mass, &ig, &jg, batch_kg_mass(m.areas())),
            (MatrixKind::WeightedMass, &ig, &jg, batch_kg_mass_weighted(&m, &w)),
            (MatrixKind::Stiffness, &ig, &jg, batch_kg_stiff(&m)),
            (MatrixKind::ElasticStiffness, &ig6, &jg6, batch_kg_elastic(&m, &params)),
        ];
        for (kind, ig, jg, kg) in cases {
            let b = build_batch(&m, kind, &coef).unwrap();
            assert_eq!((&b.ig, &b.jg, &b.kg), (ig, jg, &kg), "{kind}");
        }
    }

    #[test]
    fn missing_coefficients_are_rejected() {
        let m = unit_square(2).unwrap();
        for s in Strategy::ALL {
            let none = Coefficients::default();
            assert!(matches!(assemble(&m, MatrixKind::WeightedMass, s, &none), Err(Error::InvalidArgument(_))));
            assert!(matches!(assemble(&m, MatrixKind::ElasticStiffness, s, &none), Err(Error::InvalidArgument(_))));
        }
    }

    #[test]
    fn two_triangle_square() {
        let m = unit_square(1).unwrap();
        let none = Coefficients::default();
        for s in Strategy::ALL {
            let mass = assemble(&m, MatrixKind::Mass, s, &none).unwrap();
            assert!((mass.values().iter().sum::<f64>() - 1.0).abs() < 1e-15);
            let stiff = assemble(&m, MatrixKind::Stiffness, s, &none).unwrap();
            let reference = assemble(&m, MatrixKind::Stiffness, Strategy::Classical, &none).unwrap();
            assert!(stiff.max_abs_diff(&reference).unwrap() <= 1e-15);
        }
    }

    #[test]
    fn names_round_trip() {
        for k in MatrixKind::ALL {
            assert_eq!(k.name().parse::<MatrixKind>().unwrap(), k);
        }
        for s in Strategy::ALL {
            assert_eq!(s.to_string().parse::<Strategy>().unwrap(), s);
        }
        assert!("dense".parse::<Strategy>().is_err());
        assert!("heat".parse::<MatrixKind>().is_err());
        assert!(WeightField::from_name("cubic").is_err());
        assert_eq!(WeightField::from_name("linear").unwrap().eval(0.25, 0.5), 0.75);
    }
}
