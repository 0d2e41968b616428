//! Triangulated spheres S¹ and S² carrying a piecewise-linear map into ℂⁿ.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CPoint, Domain, C64};

/// A triangulation of the unit Sᵏ (k = 1, 2) together with the images of
/// its vertices. Simplices are index tuples of length k + 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereMeshMap {
    k: usize,
    vertices: Vec<Vec<f64>>,
    simplices: Vec<Vec<usize>>,
    images: Vec<CPoint>,
}

impl SphereMeshMap {
    pub fn new(
        k: usize,
        vertices: Vec<Vec<f64>>,
        simplices: Vec<Vec<usize>>,
        images: Vec<CPoint>,
    ) -> Result<Self> {
        let mesh = SphereMeshMap { k, vertices, simplices, images };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Regular polygon on S¹ with the identity (inclusion into ℝ² ⊂ ℂ²) as map.
    pub fn circle(segments: usize) -> Result<Self> {
        if segments < 3 {
            return Err(Error::InvalidMesh("a circle mesh needs at least 3 segments".into()));
        }
        let vertices: Vec<Vec<f64>> = (0..segments)
            .map(|i| {
                let th = std::f64::consts::TAU * i as f64 / segments as f64;
                vec![th.cos(), th.sin()]
            })
            .collect();
        let simplices = (0..segments).map(|i| vec![i, (i + 1) % segments]).collect();
        let images = vertices.iter().map(|v| real_point(v)).collect();
        Self::new(1, vertices, simplices, images)
    }

    /// Icosahedron refined `subdivisions` times by edge midpoints pushed back
    /// to the sphere; faces are oriented outward and the map is the identity.
    pub fn icosphere(subdivisions: usize) -> Result<Self> {
        let (vertices, faces) = icosphere_geometry(subdivisions);
        let images = vertices.iter().map(|v| real_point(v)).collect();
        Self::new(2, vertices, faces, images)
    }

    /// Standard sphere mesh for dimension k at the given density: a
    /// polygon with `density` segments for k = 1, an icosphere with
    /// `density` subdivisions for k = 2.
    pub fn standard(k: usize, density: usize) -> Result<Self> {
        match k {
            1 => Self::circle(density),
            2 => Self::icosphere(density),
            _ => Err(Error::InvalidMesh(format!("only S¹ and S² are supported, got k = {k}"))),
        }
    }

    /// Replaces the vertex images by `f(vertex)`.
    pub fn with_map(&self, mut f: impl FnMut(&[f64]) -> Vec<C64>) -> Result<Self> {
        let images = self
            .vertices
            .iter()
            .map(|v| CPoint::new(f(v)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.k, self.vertices.clone(), self.simplices.clone(), images)
    }

    /// Post-composes the current images with `g`.
    pub fn map_images(&self, mut g: impl FnMut(&[C64]) -> Vec<C64>) -> Result<Self> {
        let images = self
            .images
            .iter()
            .map(|p| CPoint::new(g(p.coords())))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.k, self.vertices.clone(), self.simplices.clone(), images)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn simplices(&self) -> &[Vec<usize>] {
        &self.simplices
    }

    pub fn images(&self) -> &[CPoint] {
        &self.images
    }

    pub fn image_dim(&self) -> usize {
        self.images[0].dim()
    }

    pub fn check_inside(&self, d: &Domain) -> Result<()> {
        d.check_dim(self.image_dim())?;
        match self.images.iter().position(|p| !d.contains_raw(p.coords())) {
            Some(i) => Err(Error::CurveExitsDomain(i)),
            None => Ok(()),
        }
    }

    /// Checks the triangulation: sphere vertices, manifold edge counts,
    /// consistent orientation and the Euler characteristic.
    pub fn validate(&self) -> Result<()> {
        let k = self.k;
        if k != 1 && k != 2 {
            return Err(Error::InvalidMesh(format!("only k ∈ {{1, 2}} is supported, got {k}")));
        }
        let nv = self.vertices.len();
        if nv == 0 || self.images.len() != nv {
            return Err(Error::InvalidMesh("need one image per vertex".into()));
        }
        let n_img = self.images[0].dim();
        if self.images.iter().any(|p| p.dim() != n_img) {
            return Err(Error::InvalidMesh("images must share one dimension".into()));
        }
        for (i, v) in self.vertices.iter().enumerate() {
            if v.len() != k + 1 {
                return Err(Error::InvalidMesh(format!("vertex {i} is not in ℝ^{}", k + 1)));
            }
            let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (r - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidMesh(format!("vertex {i} is off the unit sphere")));
            }
        }
        for s in &self.simplices {
            if s.len() != k + 1 || s.iter().any(|&i| i >= nv) {
                return Err(Error::InvalidMesh("malformed simplex".into()));
            }
            for a in 0..s.len() {
                for b in a + 1..s.len() {
                    if s[a] == s[b] {
                        return Err(Error::InvalidMesh("simplex with repeated vertex".into()));
                    }
                }
            }
        }
        if k == 1 {
            let mut starts = vec![0usize; nv];
            let mut ends = vec![0usize; nv];
            for s in &self.simplices {
                starts[s[0]] += 1;
                ends[s[1]] += 1;
            }
            if starts.iter().zip(&ends).any(|(a, b)| *a != 1 || *b != 1) {
                return Err(Error::InvalidMesh(
                    "every vertex needs exactly one outgoing and one incoming edge".into(),
                ));
            }
            if nv as i64 - self.simplices.len() as i64 != 0 {
                return Err(Error::InvalidMesh("Euler characteristic of S¹ must be 0".into()));
            }
            // a single cycle
            let next: HashMap<usize, usize> = self.simplices.iter().map(|s| (s[0], s[1])).collect();
            let mut cur = 0;
            for _ in 0..nv {
                cur = next[&cur];
            }
            let mut len = 1;
            let mut walk = next[&0];
            while walk != 0 {
                walk = next[&walk];
                len += 1;
            }
            if len != nv || cur != 0 {
                return Err(Error::InvalidMesh("edges must form one cycle".into()));
            }
        } else {
            let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
            for s in &self.simplices {
                for (a, b) in [(s[0], s[1]), (s[1], s[2]), (s[2], s[0])] {
                    *directed.entry((a, b)).or_default() += 1;
                }
            }
            for (&(a, b), &count) in &directed {
                if count != 1 || directed.get(&(b, a)) != Some(&1) {
                    return Err(Error::InvalidMesh(format!(
                        "edge ({a}, {b}) is not shared by exactly two consistently oriented triangles"
                    )));
                }
            }
            let edges = directed.len() / 2;
            let chi = nv as i64 - edges as i64 + self.simplices.len() as i64;
            if chi != 2 {
                return Err(Error::InvalidMesh(format!("Euler characteristic {chi}, expected 2")));
            }
        }
        Ok(())
    }
}

fn real_point(v: &[f64]) -> CPoint {
    CPoint::from_vec_unchecked(v.iter().map(|&x| C64::new(x, 0.0)).collect())
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / r, v[1] / r, v[2] / r]
}

fn icosphere_geometry(subdivisions: usize) -> (Vec<Vec<f64>>, Vec<Vec<usize>>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<[f64; 3]> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .into_iter()
    .map(normalize)
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<[f64; 3]>| -> usize {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                let (p, q) = (verts[a], verts[b]);
                verts.push(normalize([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    (
        verts.into_iter().map(|v| v.to_vec()).collect(),
        faces.into_iter().map(|f| f.to_vec()).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_is_a_valid_sphere() {
        for s in 0..4 {
            let m = SphereMeshMap::icosphere(s).unwrap();
            assert_eq!(m.simplices().len(), 20 * 4usize.pow(s as u32));
        }
    }

    #[test]
    fn icosphere_faces_point_outward() {
        let m = SphereMeshMap::icosphere(1).unwrap();
        for f in m.simplices() {
            let [a, b, c] = [&m.vertices()[f[0]], &m.vertices()[f[1]], &m.vertices()[f[2]]];
            let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
            let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
            let n = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
            assert!(n[0] * a[0] + n[1] * a[1] + n[2] * a[2] > 0.0);
        }
    }

    #[test]
    fn rejects_non_manifold_triangulations() {
        let m = SphereMeshMap::icosphere(0).unwrap();
        // drop a face: boundary edges appear once
        let mut faces = m.simplices().to_vec();
        faces.pop();
        let err = SphereMeshMap::new(2, m.vertices().to_vec(), faces, m.images().to_vec());
        assert!(matches!(err, Err(Error::InvalidMesh(_))));
        // duplicate a face: edges appear three times
        let mut faces = m.simplices().to_vec();
        faces.push(faces[0].clone());
        assert!(SphereMeshMap::new(2, m.vertices().to_vec(), faces, m.images().to_vec()).is_err());
        // flip one face: orientation becomes inconsistent
        let mut faces = m.simplices().to_vec();
        faces[3].swap(0, 1);
        assert!(SphereMeshMap::new(2, m.vertices().to_vec(), faces, m.images().to_vec()).is_err());
    }

    #[test]
    fn circle_mesh_validation() {
        let m = SphereMeshMap::circle(8).unwrap();
        assert_eq!(m.simplices().len(), 8);
        // two disjoint cycles are rejected
        let mut s = m.simplices().to_vec();
        s[3] = vec![3, 0];
        s[7] = vec![7, 4];
        assert!(SphereMeshMap::new(1, m.vertices().to_vec(), s, m.images().to_vec()).is_err());
    }
}
