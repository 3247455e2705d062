//! Triangular meshes: vertices, connectivity and precomputed triangle areas.
//!
//! The text exchange format is line oriented:
//!
//! ```text
//! nq nme
//! x y            (nq lines)
//! i1 i2 i3       (nme lines, 1-based vertex indices)
//! ```
//!
//! Coordinates are written with 17 significant digits so that a
//! write/read cycle reproduces every `f64` bit for bit.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{invalid, Error, Result};

pub type Point = [f64; 2];

/// Triangles with an area at or below this are rejected as degenerate.
pub const AREA_EPS: f64 = 1e-300;

/// A 2D triangulation with its triangle areas.
///
/// Immutable once built; every constructor validates connectivity and
/// rejects degenerate triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    areas: Vec<f64>,
}

impl Mesh {
    /// Builds a mesh from vertex coordinates and 0-based connectivity.
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if vertices.is_empty() {
            return invalid("mesh has no vertices");
        }
        if triangles.is_empty() {
            return invalid("mesh has no triangles");
        }
        let nq = vertices.len();
        for (k, t) in triangles.iter().enumerate() {
            if let Some(&i) = t.iter().find(|&&i| i >= nq) {
                return invalid(format!("triangle {k}: vertex index {i} out of range (nq = {nq})"));
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return invalid(format!("triangle {k}: repeated vertex in {t:?}"));
            }
        }
        let areas = compute_areas(&vertices, &triangles)?;
        Ok(Mesh { vertices, triangles, areas })
    }

    /// Number of vertices.
    pub fn nq(&self) -> usize {
        self.vertices.len()
    }

    /// Number of triangles.
    pub fn nme(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Connectivity, 0-based.
    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    /// The three vertices of triangle `k`.
    pub fn triangle_points(&self, k: usize) -> [Point; 3] {
        let t = self.triangles[k];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    /// Same triangulation with the triangles listed in the order given by `order`.
    ///
    /// `order` must be a permutation of `0..nme`.
    pub fn reorder_triangles(&self, order: &[usize]) -> Result<Mesh> {
        let nme = self.nme();
        if order.len() != nme {
            return invalid(format!("ordering has {} entries, mesh has {nme} triangles", order.len()));
        }
        let mut seen = vec![false; nme];
        for &k in order {
            if k >= nme || seen[k] {
                return invalid(format!("ordering is not a permutation (entry {k})"));
            }
            seen[k] = true;
        }
        Ok(Mesh {
            vertices: self.vertices.clone(),
            triangles: order.iter().map(|&k| self.triangles[k]).collect(),
            areas: order.iter().map(|&k| self.areas[k]).collect(),
        })
    }

    /// Same triangulation with the triangle order shuffled by a seeded RNG.
    ///
    /// Structured generators number triangles in sweep order; mesh generators
    /// used in practice do not, and incremental CSC insertion is very
    /// sensitive to that ordering.
    pub fn shuffled_triangles(&self, seed: u64) -> Mesh {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut order: Vec<usize> = (0..self.nme()).collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
        self.reorder_triangles(&order).expect("shuffle is a permutation")
    }

    /// Reads a mesh in the text exchange format.
    pub fn read(path: impl AsRef<Path>) -> Result<Mesh> {
        let path = path.as_ref();
        let file = File::open(path)?;
        parse_mesh(BufReader::new(file), path)
    }

    /// Writes the mesh in the text exchange format.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write_to(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn write_to<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.nq(), self.nme())?;
        for [x, y] in &self.vertices {
            writeln!(out, "{x:.16e} {y:.16e}")?;
        }
        for [a, b, c] in &self.triangles {
            writeln!(out, "{} {} {}", a + 1, b + 1, c + 1)?;
        }
        Ok(())
    }
}

/// Parses the text exchange format; `source` only labels error messages.
pub fn parse_mesh<R: BufRead>(reader: R, source: &Path) -> Result<Mesh> {
    let err = |line: usize, msg: String| Error::Parse { path: PathBuf::from(source), line, msg };

    // (line number, content) of non-blank lines
    let mut lines = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if !line.trim().is_empty() {
            lines.push((n + 1, line));
        }
    }
    let mut it = lines.into_iter();

    let (hline, header) = it.next().ok_or_else(|| err(1, "empty mesh file".into()))?;
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() != 2 {
        return Err(err(hline, format!("expected header `nq nme`, found `{header}`")));
    }
    let nq: usize = head[0].parse().map_err(|_| err(hline, format!("bad vertex count `{}`", head[0])))?;
    let nme: usize = head[1].parse().map_err(|_| err(hline, format!("bad triangle count `{}`", head[1])))?;
    if nq == 0 || nme == 0 {
        return Err(err(hline, "vertex and triangle counts must be positive".into()));
    }

    let mut vertices = Vec::with_capacity(nq);
    for i in 0..nq {
        let (n, line) = it
            .next()
            .ok_or_else(|| err(hline, format!("expected {nq} vertices, found {i}")))?;
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 2 {
            return Err(err(n, format!("expected `x y`, found `{line}`")));
        }
        let x: f64 = f[0].parse().map_err(|_| err(n, format!("bad coordinate `{}`", f[0])))?;
        let y: f64 = f[1].parse().map_err(|_| err(n, format!("bad coordinate `{}`", f[1])))?;
        vertices.push([x, y]);
    }

    let mut triangles = Vec::with_capacity(nme);
    for k in 0..nme {
        let (n, line) = it
            .next()
            .ok_or_else(|| err(hline, format!("expected {nme} triangles, found {k}")))?;
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            return Err(err(n, format!("expected `i1 i2 i3`, found `{line}`")));
        }
        let mut t = [0usize; 3];
        for (slot, s) in t.iter_mut().zip(&f) {
            let i: usize = s.parse().map_err(|_| err(n, format!("bad vertex index `{s}`")))?;
            if i == 0 || i > nq {
                return Err(err(n, format!("vertex index {i} out of range 1..={nq}")));
            }
            *slot = i - 1;
        }
        if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
            return Err(err(n, format!("repeated vertex in `{line}`")));
        }
        triangles.push(t);
    }
    if let Some((n, _)) = it.next() {
        return Err(err(n, format!("trailing data after {nq} vertices and {nme} triangles")));
    }

    match compute_areas(&vertices, &triangles) {
        Ok(areas) => Ok(Mesh { vertices, triangles, areas }),
        Err(Error::DegenerateElement { index, .. }) => {
            Err(err(1 + nq + index + 1, format!("triangle {} is degenerate", index + 1)))
        }
        Err(e) => Err(e),
    }
}

/// Area of a single triangle, ½|(x2−x1)(y3−y1) − (x3−x1)(y2−y1)|.
pub fn triangle_area(p1: Point, p2: Point, p3: Point) -> f64 {
    0.5 * ((p2[0] - p1[0]) * (p3[1] - p1[1]) - (p3[0] - p1[0]) * (p2[1] - p1[1])).abs()
}

/// Areas of all triangles; fails on the first degenerate one.
pub fn compute_areas(vertices: &[Point], triangles: &[[usize; 3]]) -> Result<Vec<f64>> {
    triangles
        .iter()
        .enumerate()
        .map(|(index, t)| {
            let area = triangle_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
            if area > AREA_EPS {
                Ok(area)
            } else {
                Err(Error::DegenerateElement { index, area })
            }
        })
        .collect()
}

/// Structured triangulation of [0,1]² with `n` cells per side.
///
/// Vertex `(i, j)` (column `i`, row `j`) has index `j (n+1) + i`; each cell is
/// cut along its lower-left to upper-right diagonal.
pub fn unit_square(n: usize) -> Result<Mesh> {
    if n == 0 {
        return invalid("unit square mesh needs n >= 1");
    }
    let h = 1.0 / n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            // exact on the boundary
            let x = if i == n { 1.0 } else { i as f64 * h };
            let y = if j == n { 1.0 } else { j as f64 * h };
            vertices.push([x, y]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    let id = |i: usize, j: usize| j * (n + 1) + i;
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    Mesh::new(vertices, triangles)
}

/// Polar triangulation of the unit disk with `n` rings.
///
/// Ring `r` carries `6r` equally spaced vertices at radius `r/n`; neighbouring
/// rings are stitched by walking both in angle order. Gives `1 + 3n(n+1)`
/// vertices and `6n²` triangles.
pub fn unit_disk(n: usize) -> Result<Mesh> {
    if n < 2 {
        return invalid("disk mesh needs n >= 2 rings");
    }
    let mut vertices = vec![[0.0, 0.0]];
    let mut ring_start = vec![0usize];
    for r in 1..=n {
        ring_start.push(vertices.len());
        let count = 6 * r;
        let radius = r as f64 / n as f64;
        for j in 0..count {
            let theta = 2.0 * PI * j as f64 / count as f64;
            vertices.push([radius * theta.cos(), radius * theta.sin()]);
        }
    }

    let mut triangles = Vec::with_capacity(6 * n * n);
    for o in 0..6 {
        triangles.push([0, 1 + o, 1 + (o + 1) % 6]);
    }
    for r in 2..=n {
        let (inner0, inner_n) = (ring_start[r - 1], 6 * (r - 1));
        let (outer0, outer_n) = (ring_start[r], 6 * r);
        let (mut i, mut o) = (0, 0);
        while i < inner_n || o < outer_n {
            // compare the angles of the next vertex on each ring: (o+1)/outer_n vs (i+1)/inner_n
            let take_outer = o < outer_n && (i == inner_n || (o + 1) * inner_n <= (i + 1) * outer_n);
            let a = inner0 + i % inner_n;
            if take_outer {
                triangles.push([a, outer0 + o % outer_n, outer0 + (o + 1) % outer_n]);
                o += 1;
            } else {
                triangles.push([a, outer0 + o % outer_n, inner0 + (i + 1) % inner_n]);
                i += 1;
            }
        }
    }
    Mesh::new(vertices, triangles)
}
