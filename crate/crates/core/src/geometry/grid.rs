//! Periodic structured-grid indexing and finite-difference stencils.

/// Row-major periodic grid; axis 0 is the fastest-varying index.
#[derive(Debug, Clone)]
pub struct GridInfo {
    pub shape: Vec<usize>,
    pub spacing: Vec<f64>,
    strides: Vec<usize>,
}

impl GridInfo {
    pub fn new(shape: Vec<usize>, spacing: Vec<f64>) -> Self {
        let mut strides = vec![1usize; shape.len()];
        for a in 1..shape.len() {
            strides[a] = strides[a - 1] * shape[a - 1];
        }
        Self { shape, spacing, strides }
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn coords_of(&self, idx: usize) -> Vec<usize> {
        let mut c = vec![0usize; self.dim()];
        let mut rem = idx;
        for a in 0..self.dim() {
            c[a] = rem % self.shape[a];
            rem /= self.shape[a];
        }
        c
    }

    pub fn index_of(&self, coords: &[usize]) -> usize {
        coords
            .iter()
            .zip(&self.strides)
            .map(|(&c, &s)| c * s)
            .sum()
    }

    /// Neighbor along `axis`, shifted by `step` (periodic wrap).
    pub fn shift(&self, idx: usize, axis: usize, step: isize) -> usize {
        let n = self.shape[axis] as isize;
        let stride = self.strides[axis];
        let c = (idx / stride) % self.shape[axis];
        let nc = (((c as isize + step) % n) + n) % n;
        idx + (nc as usize) * stride - c * stride
    }

    pub fn position(&self, idx: usize) -> Vec<f64> {
        self.coords_of(idx)
            .iter()
            .zip(&self.spacing)
            .map(|(&c, &h)| c as f64 * h)
            .collect()
    }

    /// Centered first difference along `axis`.
    pub fn d1(&self, f: &[f64], idx: usize, axis: usize) -> f64 {
        let p = self.shift(idx, axis, 1);
        let m = self.shift(idx, axis, -1);
        (f[p] - f[m]) / (2.0 * self.spacing[axis])
    }

    /// Centered second difference along `axis`.
    pub fn d2(&self, f: &[f64], idx: usize, axis: usize) -> f64 {
        let p = self.shift(idx, axis, 1);
        let m = self.shift(idx, axis, -1);
        let h = self.spacing[axis];
        (f[p] - 2.0 * f[idx] + f[m]) / (h * h)
    }

    /// Centered mixed second difference along axes `a`, `b` (a != b).
    pub fn d2_mixed(&self, f: &[f64], idx: usize, a: usize, b: usize) -> f64 {
        let pp = self.shift(self.shift(idx, a, 1), b, 1);
        let pm = self.shift(self.shift(idx, a, 1), b, -1);
        let mp = self.shift(self.shift(idx, a, -1), b, 1);
        let mm = self.shift(self.shift(idx, a, -1), b, -1);
        (f[pp] - f[pm] - f[mp] + f[mm]) / (4.0 * self.spacing[a] * self.spacing[b])
    }
}
