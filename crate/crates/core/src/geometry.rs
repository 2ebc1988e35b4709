//! Explicit tetrahedra from split areas, and mesh export.
//!
//! Vertex `v_i` is the one opposite face `i`, so face `i` has area
//! `C^2_{i(jkl)}`. The split area `sigma_ij` belongs to the edge shared by
//! faces `i` and `j`, which joins the two remaining vertices `v_k, v_l`.

use nalgebra::{Matrix5, SMatrix, SVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::concurrence::PAIRS;
use crate::error::{Error, Result};
use crate::solver::{volume, DegeneracyClass, SigmaSolution, VOLUME_TOL};

type Vec6 = SVector<f64, 6>;
type Mat6 = SMatrix<f64, 6, 6>;

/// Index in [`PAIRS`] of the pair complementary to `PAIRS[p]`.
fn complement(p: usize) -> usize {
    5 - p
}

/// A tetrahedron with its inscribed-sphere face split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TetraEmbedding {
    pub vertices: [[f64; 3]; 4],
    /// Lengths of the vertex edges, in [`PAIRS`] order of vertex labels.
    pub edge_lengths: [f64; 6],
    /// Area of face `i` (opposite `v_i`).
    pub face_areas: [f64; 4],
    pub incenter: [f64; 3],
    pub inradius: f64,
    /// Tangency point of the inscribed sphere on each face.
    pub contacts: [[f64; 3]; 4],
    /// For each face pair `(i, j)` in [`PAIRS`] order, the split area measured
    /// on face `i` and on face `j`.
    pub split_areas: [[f64; 2]; 6],
    /// Cayley-Menger volume of the vertices.
    pub volume: f64,
}

impl TetraEmbedding {
    /// Mean of each equal pair of split areas, in `sigma` order.
    pub fn sigma(&self) -> [f64; 6] {
        self.split_areas.map(|[a, b]| 0.5 * (a + b))
    }

    /// Faces as vertex index triples (0-based) with outward normals.
    pub fn faces(&self) -> [[usize; 3]; 4] {
        let v = self.vertices.map(Vector3::from);
        let mut out = [[0; 3]; 4];
        for (i, face) in out.iter_mut().enumerate() {
            let mut tri: Vec<usize> = (0..4).filter(|&k| k != i).collect();
            let n = (v[tri[1]] - v[tri[0]]).cross(&(v[tri[2]] - v[tri[0]]));
            if n.dot(&(v[i] - v[tri[0]])) > 0.0 {
                tri.swap(1, 2);
            }
            *face = [tri[0], tri[1], tri[2]];
        }
        out
    }
}

/// Zero-volume limits of the concurrence tetrahedron.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Primitive {
    /// All split areas vanish.
    Point,
    /// Unbounded line; exported as a unit segment.
    Line,
    /// Flat triangle of the given area.
    Triangle { area: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[allow(clippy::large_enum_variant)]
pub enum Shape {
    Tetrahedron(TetraEmbedding),
    Degenerate(Primitive),
}

fn triangle_area(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

/// Cayley-Menger volume from the six vertex edge lengths.
pub fn cayley_menger_volume(edges: &[f64; 6]) -> f64 {
    let d2 = |i: usize, j: usize| -> f64 {
        if i == j {
            0.0
        } else {
            let p = crate::concurrence::pair_index(i, j);
            edges[p] * edges[p]
        }
    };
    let m = Matrix5::from_fn(|r, c| match (r, c) {
        (0, 0) => 0.0,
        (0, _) | (_, 0) => 1.0,
        _ => d2(r, c),
    });
    (m.determinant() / 288.0).max(0.0).sqrt()
}

/// Places vertices canonically from edge lengths: `v1` at the origin, `v2`
/// on the x axis, `v3` in the xy plane, `v4` above it. `None` when the
/// lengths do not close a nondegenerate tetrahedron.
fn place(edges: &[f64; 6]) -> Option<[Vector3<f64>; 4]> {
    let d = |i: usize, j: usize| edges[crate::concurrence::pair_index(i, j)];
    let (d12, d13, d14, d23, d24, d34) = (d(1, 2), d(1, 3), d(1, 4), d(2, 3), d(2, 4), d(3, 4));
    let x3 = (d13 * d13 + d12 * d12 - d23 * d23) / (2.0 * d12);
    let y3sq = d13 * d13 - x3 * x3;
    if y3sq.is_nan() || y3sq <= 0.0 {
        return None;
    }
    let y3 = y3sq.sqrt();
    let x4 = (d14 * d14 + d12 * d12 - d24 * d24) / (2.0 * d12);
    let y4 = (d14 * d14 - d34 * d34 + (x3 * x3 + y3 * y3) - 2.0 * x3 * x4) / (2.0 * y3);
    let z4sq = d14 * d14 - x4 * x4 - y4 * y4;
    if z4sq.is_nan() || z4sq <= 0.0 {
        return None;
    }
    Some([
        Vector3::zeros(),
        Vector3::new(d12, 0.0, 0.0),
        Vector3::new(x3, y3, 0.0),
        Vector3::new(x4, y4, z4sq.sqrt()),
    ])
}

/// Full embedding data for placed vertices.
fn describe(v: &[Vector3<f64>; 4]) -> TetraEmbedding {
    let face_of = |i: usize| -> [usize; 3] {
        let t: Vec<usize> = (0..4).filter(|&k| k != i).collect();
        [t[0], t[1], t[2]]
    };
    let face_areas: [f64; 4] = std::array::from_fn(|i| {
        let [a, b, c] = face_of(i);
        triangle_area(&v[a], &v[b], &v[c])
    });
    let total: f64 = face_areas.iter().sum();
    let incenter = (0..4).fold(Vector3::zeros(), |acc, i| acc + v[i] * face_areas[i]) / total;

    let contacts: [Vector3<f64>; 4] = std::array::from_fn(|i| {
        let [a, b, c] = face_of(i);
        let n = (v[b] - v[a]).cross(&(v[c] - v[a])).normalize();
        incenter - n * n.dot(&(incenter - v[a]))
    });
    let inradius = (contacts[0] - incenter).norm();

    let mut split_areas = [[0.0; 2]; 6];
    for (p, &(i, j)) in PAIRS.iter().enumerate() {
        let (k, l) = PAIRS[complement(p)];
        let (vk, vl) = (v[k - 1], v[l - 1]);
        split_areas[p] = [
            triangle_area(&contacts[i - 1], &vk, &vl),
            triangle_area(&contacts[j - 1], &vk, &vl),
        ];
    }
    let edge_lengths: [f64; 6] =
        std::array::from_fn(|p| (v[PAIRS[p].0 - 1] - v[PAIRS[p].1 - 1]).norm());

    TetraEmbedding {
        vertices: v.map(|x| [x.x, x.y, x.z]),
        edge_lengths,
        face_areas,
        incenter: [incenter.x, incenter.y, incenter.z],
        inradius,
        contacts: contacts.map(|x| [x.x, x.y, x.z]),
        split_areas,
        volume: cayley_menger_volume(&edge_lengths),
    }
}

/// Split areas (first-face measurement) for given log edge lengths.
fn split_of(log_edges: &Vec6) -> Option<Vec6> {
    let edges: [f64; 6] = std::array::from_fn(|p| log_edges[p].exp());
    let v = place(&edges)?;
    let e = describe(&v);
    Some(Vec6::from_iterator(e.sigma()))
}

fn newton_edges(target: &Vec6, mut x: Vec6, max_iter: usize) -> Option<Vec6> {
    let scale = target.amax().max(f64::MIN_POSITIVE);
    let mut r = split_of(&x)? - target;
    let tol = 1e-14 * scale;
    for _ in 0..max_iter {
        if r.amax() <= tol {
            return Some(x);
        }
        let h = 1e-6;
        let mut jac = Mat6::zeros();
        for c in 0..6 {
            let (mut xp, mut xm) = (x, x);
            xp[c] += h;
            xm[c] -= h;
            let col = (split_of(&xp)? - split_of(&xm)?) / (2.0 * h);
            jac.set_column(c, &col);
        }
        let step = jac.lu().solve(&(-r))?;
        let mut t = 1.0;
        let norm = r.norm();
        loop {
            if t < 1e-8 {
                return (r.amax() <= 1e-11 * scale).then_some(x);
            }
            let cand = x + step * t;
            if let Some(cr) = split_of(&cand).map(|s| s - target) {
                if cr.norm() < norm {
                    x = cand;
                    r = cr;
                    break;
                }
            }
            t *= 0.5;
        }
    }
    (r.amax() <= 1e-11 * scale).then_some(x)
}

/// Edge lengths reproducing the split areas, by Newton continuation from the
/// regular tetrahedron with the same total surface.
fn solve_edges(sigma: &[f64; 6]) -> Option<[f64; 6]> {
    let target = Vec6::from_iterator(sigma.iter().copied());
    let mean = target.mean();
    // regular tetrahedron: face 3 mean = sqrt(3)/4 L^2
    let edge0 = (4.0 * 3.0 * mean / 3f64.sqrt()).sqrt();
    let start = Vec6::from_element(mean);
    let mut x = Vec6::from_element(edge0.ln());
    let mut t: f64 = 0.0;
    let mut dt: f64 = 1.0;
    while t < 1.0 {
        let next = (t + dt).min(1.0);
        let goal = start * (1.0 - next) + target * next;
        match newton_edges(&goal, x, 60) {
            Some(sol) => {
                x = sol;
                t = next;
                dt = (dt * 2.0).min(1.0);
            }
            None => {
                dt *= 0.5;
                if dt < 1e-6 {
                    return None;
                }
            }
        }
    }
    Some(std::array::from_fn(|p| x[p].exp()))
}

/// Builds the tetrahedron whose inscribed sphere splits its faces into the
/// given areas.
pub fn embed_tetrahedron(sol: &SigmaSolution) -> Result<TetraEmbedding> {
    let breakdown = volume(&sol.sigma)?;
    if breakdown.volume <= VOLUME_TOL {
        return Err(Error::DegenerateShape);
    }
    let edges = solve_edges(&sol.sigma).ok_or(Error::NonConvergence {
        residual: f64::NAN,
        iterations: 0,
    })?;
    let v = place(&edges).ok_or_else(|| Error::Internal("edge solve left a flat tetrahedron".into()))?;
    Ok(describe(&v))
}

/// The limiting primitive for a zero-volume solution.
pub fn degenerate_primitive(sol: &SigmaSolution) -> Primitive {
    let tol = crate::solver::DEGENERATE_TOL;
    let positive: Vec<f64> = sol.sigma.iter().copied().filter(|&s| s > tol).collect();
    match positive.as_slice() {
        [] => Primitive::Point,
        [area] => Primitive::Triangle { area: *area },
        _ => Primitive::Line,
    }
}

/// Embedding, or the zero-volume primitive when there is none.
pub fn shape_for(sol: &SigmaSolution) -> Result<Shape> {
    match embed_tetrahedron(sol) {
        Ok(e) => Ok(Shape::Tetrahedron(e)),
        Err(Error::DegenerateShape) => Ok(Shape::Degenerate(degenerate_primitive(sol))),
        Err(e) => Err(e),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Json,
}

impl std::str::FromStr for MeshFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "obj" => Ok(MeshFormat::Obj),
            "json" => Ok(MeshFormat::Json),
            other => Err(Error::UnsupportedFormat(other.to_string())),
        }
    }
}

/// Metadata stored alongside JSON meshes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshMeta {
    pub volume: f64,
    pub f4: f64,
    pub degeneracy: DegeneracyClass,
}

/// JSON mesh document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshJson {
    pub vertices: Vec<[f64; 3]>,
    /// Triangles, 0-based vertex indices.
    pub faces: Vec<[usize; 3]>,
    /// Polylines, 0-based vertex indices.
    pub lines: Vec<[usize; 2]>,
    pub points: Vec<usize>,
    pub meta: MeshMeta,
}

/// Vertices and elements of a shape, ready for either format.
pub fn mesh_of(shape: &Shape, meta: MeshMeta) -> MeshJson {
    let mut mesh = MeshJson {
        vertices: Vec::new(),
        faces: Vec::new(),
        lines: Vec::new(),
        points: Vec::new(),
        meta,
    };
    match shape {
        Shape::Tetrahedron(e) => {
            mesh.vertices = e.vertices.to_vec();
            mesh.faces = e.faces().to_vec();
        }
        Shape::Degenerate(Primitive::Point) => {
            mesh.vertices = vec![[0.0; 3]];
            mesh.points = vec![0];
        }
        Shape::Degenerate(Primitive::Line) => {
            mesh.vertices = vec![[0.0; 3], [1.0, 0.0, 0.0]];
            mesh.lines = vec![[0, 1]];
        }
        Shape::Degenerate(Primitive::Triangle { area }) => {
            // equilateral with the given area
            let side = (4.0 * area / 3f64.sqrt()).sqrt();
            mesh.vertices = vec![
                [0.0; 3],
                [side, 0.0, 0.0],
                [0.5 * side, 0.5 * 3f64.sqrt() * side, 0.0],
            ];
            mesh.faces = vec![[0, 1, 2]];
        }
    }
    mesh
}

fn obj_number(x: f64) -> String {
    // 9 significant digits; avoid printing negative zero
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.8e}")
}

/// Serializes a shape as Wavefront OBJ (`v`, `f`, `l`, `p`) or JSON.
pub fn export_mesh(shape: &Shape, meta: MeshMeta, format: MeshFormat) -> Result<Vec<u8>> {
    let mesh = mesh_of(shape, meta);
    match format {
        MeshFormat::Json => Ok(serde_json::to_vec_pretty(&mesh)?),
        MeshFormat::Obj => {
            let mut out = String::new();
            for v in &mesh.vertices {
                out.push_str(&format!(
                    "v {} {} {}\n",
                    obj_number(v[0]),
                    obj_number(v[1]),
                    obj_number(v[2])
                ));
            }
            for f in &mesh.faces {
                out.push_str(&format!("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1));
            }
            for l in &mesh.lines {
                out.push_str(&format!("l {} {}\n", l[0] + 1, l[1] + 1));
            }
            for p in &mesh.points {
                out.push_str(&format!("p {}\n", p + 1));
            }
            Ok(out.into_bytes())
        }
    }
}

/// Vertices and triangles read back from the OBJ subset written above.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ObjMesh {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
    pub lines: Vec<[usize; 2]>,
    pub points: Vec<usize>,
}

/// Parses `v`/`f`/`l`/`p` records; indices are returned 0-based.
pub fn parse_obj(text: &str) -> Result<ObjMesh> {
    let bad = |line: &str| Error::Internal(format!("malformed OBJ record `{line}`"));
    let mut mesh = ObjMesh::default();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let mut parts = line.split_whitespace();
        let tag = parts.next().unwrap_or_default();
        let nums: Vec<&str> = parts.collect();
        let idx = |s: &str| -> Result<usize> {
            s.split('/')
                .next()
                .and_then(|i| i.parse::<usize>().ok())
                .filter(|&i| i > 0)
                .map(|i| i - 1)
                .ok_or_else(|| bad(line))
        };
        match (tag, nums.len()) {
            ("v", 3) => {
                let mut v = [0.0; 3];
                for (slot, s) in v.iter_mut().zip(&nums) {
                    *slot = s.parse().map_err(|_| bad(line))?;
                }
                mesh.vertices.push(v);
            }
            ("f", 3) => mesh.faces.push([idx(nums[0])?, idx(nums[1])?, idx(nums[2])?]),
            ("l", 2) => mesh.lines.push([idx(nums[0])?, idx(nums[1])?]),
            ("p", 1) => mesh.points.push(idx(nums[0])?),
            _ => return Err(bad(line)),
        }
    }
    Ok(mesh)
}

/// Volume enclosed by a closed triangle mesh (divergence theorem).
pub fn enclosed_volume(vertices: &[[f64; 3]], faces: &[[usize; 3]]) -> f64 {
    faces
        .iter()
        .map(|f| {
            let [a, b, c] = f.map(|i| Vector3::from(vertices[i]));
            a.dot(&b.cross(&c)) / 6.0
        })
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concurrence::concurrence_profile;
    use crate::solver::{solve_sigma, SolverOptions};
    use crate::state::{haar_random_state, NamedState};
    use approx::assert_abs_diff_eq;

    fn solution(s: NamedState) -> SigmaSolution {
        solve_sigma(&concurrence_profile(&s.state()).unwrap(), &SolverOptions::default()).unwrap()
    }

    fn plane_distance(e: &TetraEmbedding, face: usize, x: &Vector3<f64>) -> f64 {
        let v = e.vertices.map(Vector3::from);
        let t: Vec<usize> = (0..4).filter(|&k| k != face).collect();
        let n = (v[t[1]] - v[t[0]]).cross(&(v[t[2]] - v[t[0]])).normalize();
        n.dot(&(x - v[t[0]])).abs()
    }

    #[test]
    fn ghz_is_regular() {
        let e = embed_tetrahedron(&solution(NamedState::Ghz4)).unwrap();
        let l0 = e.edge_lengths[0];
        for l in e.edge_lengths {
            assert_abs_diff_eq!(l, l0, epsilon = 1e-10);
        }
        for (i, area) in e.face_areas.iter().enumerate() {
            assert_abs_diff_eq!(*area, 1.0, epsilon = 1e-10);
            for pair in e.split_areas {
                // each face is cut into thirds
                assert_abs_diff_eq!(pair[0], e.face_areas[i] / 3.0, epsilon = 1e-10);
            }
        }
        let v4 = e.vertices[3];
        assert!(v4[2] > 0.0);
        assert_eq!(e.vertices[0], [0.0; 3]);
        assert_eq!(e.vertices[1][1], 0.0);
        assert_eq!(e.vertices[2][2], 0.0);
    }

    #[test]
    fn embedding_invariants_on_random_states() {
        for seed in 0..20 {
            let p = concurrence_profile(&haar_random_state(4, seed).unwrap()).unwrap();
            let sol = solve_sigma(&p, &SolverOptions::default()).unwrap();
            let e = embed_tetrahedron(&sol).unwrap();
            for (i, a) in e.face_areas.iter().enumerate() {
                assert_abs_diff_eq!(*a / p.one_to_other[i], 1.0, epsilon = 1e-8);
            }
            for [a, b] in e.split_areas {
                assert_abs_diff_eq!(a / b, 1.0, epsilon = 1e-8);
            }
            let v = volume(&sol.sigma).unwrap().volume;
            assert_abs_diff_eq!(e.volume / v, 1.0, epsilon = 1e-9);
            let inc = Vector3::from(e.incenter);
            for face in 0..4 {
                assert_abs_diff_eq!(plane_distance(&e, face, &inc), e.inradius, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn degenerate_primitives() {
        let sol = solution(NamedState::Product4);
        assert!(matches!(embed_tetrahedron(&sol), Err(Error::DegenerateShape)));
        assert_eq!(shape_for(&sol).unwrap(), Shape::Degenerate(Primitive::Point));

        let sol = solution(NamedState::BisepOneOneTwo);
        match shape_for(&sol).unwrap() {
            Shape::Degenerate(Primitive::Triangle { area }) => assert_abs_diff_eq!(area, 1.0, epsilon = 1e-12),
            other => panic!("expected triangle, got {other:?}"),
        }
        for s in [NamedState::BisepOneToOther, NamedState::BisepTwoToTwo] {
            assert_eq!(shape_for(&solution(s)).unwrap(), Shape::Degenerate(Primitive::Line));
        }
    }

    fn meta() -> MeshMeta {
        MeshMeta {
            volume: 0.0,
            f4: 0.0,
            degeneracy: DegeneracyClass::Generic,
        }
    }

    #[test]
    fn obj_structure() {
        let shape = shape_for(&solution(NamedState::Ghz4)).unwrap();
        let text = String::from_utf8(export_mesh(&shape, meta(), MeshFormat::Obj).unwrap()).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 4);
        assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count(), 4);

        let dot = Shape::Degenerate(Primitive::Point);
        let text = String::from_utf8(export_mesh(&dot, meta(), MeshFormat::Obj).unwrap()).unwrap();
        assert_eq!(text, "v 0.00000000e0 0.00000000e0 0.00000000e0\np 1\n");

        assert!(matches!("stl".parse::<MeshFormat>(), Err(Error::UnsupportedFormat(_))));
    }

    #[test]
    fn outward_faces_give_positive_volume() {
        let p = concurrence_profile(&haar_random_state(4, 99).unwrap()).unwrap();
        let e = embed_tetrahedron(&solve_sigma(&p, &SolverOptions::default()).unwrap()).unwrap();
        let v = enclosed_volume(&e.vertices, &e.faces());
        assert_abs_diff_eq!(v / e.volume, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn cayley_menger_unit_simplex() {
        // corner simplex with unit legs has volume 1/6
        let s = 2f64.sqrt();
        assert_abs_diff_eq!(cayley_menger_volume(&[1.0, 1.0, 1.0, s, s, s]), 1.0 / 6.0, epsilon = 1e-14);
    }

    #[test]
    fn obj_parser_rejects_garbage() {
        assert!(parse_obj("v 1 2\n").is_err());
        assert!(parse_obj("f 0 1 2\n").is_err());
        assert!(parse_obj("vt 0 0\n").is_err());
    }
}
