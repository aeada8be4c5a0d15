//! Icosphere mesh generation and cotangent-weight operators on the unit
//! sphere.

use std::collections::HashMap;

#[derive(Debug, Clone)]
pub struct SphereMesh {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
    pub face_areas: Vec<f64>,
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Icosahedron subdivided `level` times, vertices projected to the unit
/// sphere.
pub fn build(level: u32) -> SphereMesh {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    let mut vertices: Vec<[f64; 3]> = raw.iter().map(|&v| normalize(v)).collect();
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

    for _ in 0..level {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next_faces = Vec::with_capacity(faces.len() * 4);
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<[f64; 3]>| -> usize {
            let key = (a.min(b), a.max(b));
            if let Some(&m) = midpoint.get(&key) {
                return m;
            }
            let va = vertices[a];
            let vb = vertices[b];
            let m = normalize([
                (va[0] + vb[0]) / 2.0,
                (va[1] + vb[1]) / 2.0,
                (va[2] + vb[2]) / 2.0,
            ]);
            vertices.push(m);
            let idx = vertices.len() - 1;
            midpoint.insert(key, idx);
            idx
        };
        for &[a, b, c] in &faces {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            next_faces.push([a, ab, ca]);
            next_faces.push([b, bc, ab]);
            next_faces.push([c, ca, bc]);
            next_faces.push([ab, bc, ca]);
        }
        faces = next_faces;
    }

    let face_areas = faces
        .iter()
        .map(|&[a, b, c]| {
            let e1 = sub(vertices[b], vertices[a]);
            let e2 = sub(vertices[c], vertices[a]);
            0.5 * norm(cross(e1, e2))
        })
        .collect();

    SphereMesh { vertices, faces, face_areas }
}

impl SphereMesh {
    /// Cotangent edge weights as (i, j, w) with i < j, plus barycentric dual
    /// vertex areas.
    pub fn cotan_weights(&self) -> (Vec<(usize, usize, f64)>, Vec<f64>) {
        let mut w: HashMap<(usize, usize), f64> = HashMap::new();
        let mut areas = vec![0.0; self.vertices.len()];
        for (f, &[a, b, c]) in self.faces.iter().enumerate() {
            let area = self.face_areas[f];
            for &v in &[a, b, c] {
                areas[v] += area / 3.0;
            }
            // For each corner, the cotangent contributes to the opposite edge.
            for &(apex, i, j) in &[(a, b, c), (b, c, a), (c, a, b)] {
                let e1 = sub(self.vertices[i], self.vertices[apex]);
                let e2 = sub(self.vertices[j], self.vertices[apex]);
                let cot = dot(e1, e2) / norm(cross(e1, e2));
                *w.entry((i.min(j), i.max(j))).or_insert(0.0) += 0.5 * cot;
            }
        }
        let mut edges: Vec<(usize, usize, f64)> =
            w.into_iter().map(|((i, j), v)| (i, j, v)).collect();
        edges.sort_by_key(|&(i, j, _)| (i, j));
        (edges, areas)
    }

    /// Squared norm of the per-face linear-interpolant gradient, averaged to
    /// vertices with face-area weights.
    pub fn gradient_sq_vertices(&self, f: &[f64]) -> Vec<f64> {
        self.gradient_dot_vertices(f, f)
    }

    pub fn gradient_dot_vertices(&self, f: &[f64], g: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; self.vertices.len()];
        let mut wsum = vec![0.0; self.vertices.len()];
        for (k, &[a, b, c]) in self.faces.iter().enumerate() {
            let gf = self.face_gradient(k, f);
            let gg = self.face_gradient(k, g);
            let d = dot(gf, gg);
            let area = self.face_areas[k];
            for &v in &[a, b, c] {
                acc[v] += area * d;
                wsum[v] += area;
            }
        }
        acc.iter().zip(&wsum).map(|(&a, &w)| a / w).collect()
    }

    fn face_gradient(&self, k: usize, f: &[f64]) -> [f64; 3] {
        let [a, b, c] = self.faces[k];
        let n = {
            let e1 = sub(self.vertices[b], self.vertices[a]);
            let e2 = sub(self.vertices[c], self.vertices[a]);
            cross(e1, e2)
        };
        let n2 = dot(n, n);
        // grad = sum_i f_i (n × e_opp_i) / |n|^2, e_opp_i the edge opposite i
        let mut g = [0.0; 3];
        let corners = [(a, b, c), (b, c, a), (c, a, b)];
        for &(i, j, k2) in &corners {
            let e = sub(self.vertices[k2], self.vertices[j]);
            let t = cross(n, e);
            for d in 0..3 {
                g[d] += f[i] * t[d] / n2;
            }
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subdivision_counts() {
        let m = build(0);
        assert_eq!(m.vertices.len(), 12);
        assert_eq!(m.faces.len(), 20);
        let m = build(2);
        assert_eq!(m.faces.len(), 320);
        assert_eq!(m.vertices.len(), 162);
    }

    #[test]
    fn vertices_on_unit_sphere() {
        let m = build(3);
        for v in &m.vertices {
            assert!((dot(*v, *v) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn face_gradient_of_linear_function() {
        // f(x, y, z) = x restricted to a face: gradient lies in the face
        // plane and reproduces the tangential part of e_x.
        let m = build(2);
        let f: Vec<f64> = m.vertices.iter().map(|v| v[0]).collect();
        for k in 0..m.faces.len() {
            let g = m.face_gradient(k, &f);
            // tangential projection of e_x onto face plane
            let [a, b, c] = m.faces[k];
            let e1 = sub(m.vertices[b], m.vertices[a]);
            let e2 = sub(m.vertices[c], m.vertices[a]);
            let n = cross(e1, e2);
            let n2 = dot(n, n);
            let ex = [1.0, 0.0, 0.0];
            let coef = dot(ex, n) / n2;
            let proj = [
                ex[0] - coef * n[0],
                ex[1] - coef * n[1],
                ex[2] - coef * n[2],
            ];
            for d in 0..3 {
                assert!((g[d] - proj[d]).abs() < 1e-10);
            }
        }
    }
}
