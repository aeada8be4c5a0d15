//! Discrete manifolds (flat torus, 2-D conformal torus, unit icosphere) and
//! metric-aware differential operators.
//!
//! Every manifold carries a symmetric stiffness matrix `C` and positive
//! volume weights `m` so that the Laplace-Beltrami operator is
//! `Δ_g f = C f / m` pointwise. `C` annihilates constants, is symmetric and
//! negative semidefinite, which gives the constant-kernel, self-adjointness
//! (under the volume-weighted inner product) and Green's-identity contracts
//! for free.

pub mod grid;
pub mod icosphere;

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::field::ScalarField;
use crate::sparse::{CooBuilder, CsrMatrix};
use crate::{Error, Result};

use grid::GridInfo;
use icosphere::SphereMesh;

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GridSpec {
    pub dimension: usize,
    pub nodes_per_axis: usize,
    pub period_lengths: Vec<f64>,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dimension) {
            return Err(Error::InvalidSpec(format!(
                "dimension must be 1, 2 or 3, got {}",
                self.dimension
            )));
        }
        if self.nodes_per_axis < 8 {
            return Err(Error::InvalidSpec(format!(
                "nodes_per_axis must be ≥ 8, got {}",
                self.nodes_per_axis
            )));
        }
        if self.period_lengths.len() != self.dimension {
            return Err(Error::InvalidSpec(format!(
                "expected {} period lengths, got {}",
                self.dimension,
                self.period_lengths.len()
            )));
        }
        if self.period_lengths.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidSpec("period lengths must be positive".into()));
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.nodes_per_axis.pow(self.dimension as u32)
    }

    fn spacing(&self) -> Vec<f64> {
        self.period_lengths
            .iter()
            .map(|&l| l / self.nodes_per_axis as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManifoldSpec {
    FlatTorus { grid: GridSpec },
    /// 2-D torus with metric `g = e^{2φ} δ`; `phi` is sampled at the nodes.
    ConformalTorus { grid: GridSpec, phi: Vec<f64> },
    Icosphere { subdivision: u32 },
}

impl ManifoldSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ManifoldSpec::FlatTorus { .. } => "flat_torus",
            ManifoldSpec::ConformalTorus { .. } => "conformal_torus",
            ManifoldSpec::Icosphere { .. } => "icosphere",
        }
    }

    /// Intrinsic dimension N.
    pub fn dimension(&self) -> usize {
        match self {
            ManifoldSpec::FlatTorus { grid } => grid.dimension,
            ManifoldSpec::ConformalTorus { .. } => 2,
            ManifoldSpec::Icosphere { .. } => 2,
        }
    }
}

#[derive(Debug)]
enum GeometryData {
    Grid {
        info: GridInfo,
        /// Conformal factor at nodes, if the metric is `e^{2φ} δ`.
        phi: Option<Vec<f64>>,
    },
    Sphere(SphereMesh),
}

#[derive(Debug)]
pub struct DiscreteManifold {
    id: u64,
    spec: ManifoldSpec,
    node_count: usize,
    volume_weights: Vec<f64>,
    stiffness: CsrMatrix,
    total_volume: f64,
    ricci_lower: f64,
    k_bound: f64,
    data: GeometryData,
}

pub fn build_manifold(spec: ManifoldSpec) -> Result<DiscreteManifold> {
    let id = NEXT_ID.fetch_add(1, Ordering::Relaxed);
    match spec {
        ManifoldSpec::FlatTorus { ref grid } => {
            grid.validate()?;
            let info = GridInfo::new(
                vec![grid.nodes_per_axis; grid.dimension],
                grid.spacing(),
            );
            let cell: f64 = info.spacing.iter().product();
            let n = info.len();
            let stiffness = grid_stiffness(&info, cell);
            Ok(DiscreteManifold {
                id,
                node_count: n,
                volume_weights: vec![cell; n],
                total_volume: cell * n as f64,
                stiffness,
                ricci_lower: 0.0,
                k_bound: 0.0,
                data: GeometryData::Grid { info, phi: None },
                spec,
            })
        }
        ManifoldSpec::ConformalTorus { ref grid, ref phi } => {
            grid.validate()?;
            if grid.dimension != 2 {
                return Err(Error::InvalidSpec(
                    "conformal torus requires dimension 2".into(),
                ));
            }
            if phi.len() != grid.node_count() {
                return Err(Error::InvalidSpec(format!(
                    "conformal factor has {} samples, expected {}",
                    phi.len(),
                    grid.node_count()
                )));
            }
            if phi.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidSpec("conformal factor must be finite".into()));
            }
            let info = GridInfo::new(vec![grid.nodes_per_axis; 2], grid.spacing());
            let cell: f64 = info.spacing.iter().product();
            let n = info.len();
            // Δ_g = e^{-2φ} Δ_flat with volume weights e^{2φ} h², so the
            // stiffness matrix is the flat one; only the mass changes.
            let stiffness = grid_stiffness(&info, cell);
            let volume_weights: Vec<f64> =
                phi.iter().map(|&p| (2.0 * p).exp() * cell).collect();
            let total_volume = volume_weights.iter().sum();
            // In 2-D, Ric = K_gauss · g with K_gauss = -e^{-2φ} Δ_flat φ.
            let kg = gauss_curvature(&info, phi);
            let ricci_lower = kg.iter().cloned().fold(f64::INFINITY, f64::min);
            let phi_values = phi.clone();
            Ok(DiscreteManifold {
                id,
                node_count: n,
                volume_weights,
                total_volume,
                stiffness,
                ricci_lower,
                k_bound: (-ricci_lower).max(0.0),
                data: GeometryData::Grid { info, phi: Some(phi_values) },
                spec,
            })
        }
        ManifoldSpec::Icosphere { subdivision } => {
            if subdivision < 2 {
                return Err(Error::InvalidSpec(format!(
                    "icosphere subdivision must be ≥ 2, got {subdivision}"
                )));
            }
            let mesh = icosphere::build(subdivision);
            let (edges, areas) = mesh.cotan_weights();
            let n = mesh.vertices.len();
            let mut b = CooBuilder::new(n);
            for &(i, j, w) in &edges {
                b.push(i, j, w);
                b.push(j, i, w);
                b.push(i, i, -w);
                b.push(j, j, -w);
            }
            let total_volume = mesh.face_areas.iter().sum();
            Ok(DiscreteManifold {
                id,
                node_count: n,
                volume_weights: areas,
                stiffness: b.build(),
                total_volume,
                // unit sphere: Ric = (N-1) g = g
                ricci_lower: 1.0,
                k_bound: 0.0,
                data: GeometryData::Sphere(mesh),
                spec,
            })
        }
    }
}

fn grid_stiffness(info: &GridInfo, cell: f64) -> CsrMatrix {
    let n = info.len();
    let mut b = CooBuilder::new(n);
    for idx in 0..n {
        for a in 0..info.dim() {
            let w = cell / (info.spacing[a] * info.spacing[a]);
            b.push(idx, info.shift(idx, a, 1), w);
            b.push(idx, info.shift(idx, a, -1), w);
            b.push(idx, idx, -2.0 * w);
        }
    }
    b.build()
}

fn gauss_curvature(info: &GridInfo, phi: &[f64]) -> Vec<f64> {
    (0..info.len())
        .map(|i| {
            let lap_flat: f64 = (0..info.dim()).map(|a| info.d2(phi, i, a)).sum();
            -(-2.0 * phi[i]).exp() * lap_flat
        })
        .collect()
}

impl DiscreteManifold {
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn spec(&self) -> &ManifoldSpec {
        &self.spec
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn volume_weights(&self) -> &[f64] {
        &self.volume_weights
    }

    pub fn total_volume(&self) -> f64 {
        self.total_volume
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    /// Intrinsic dimension N.
    pub fn dimension(&self) -> usize {
        self.spec.dimension()
    }

    /// Minimum eigenvalue of Ricci over nodes, and K = max(0, -λ_min).
    pub fn ricci_lower_bound(&self) -> (f64, f64) {
        (self.ricci_lower, self.k_bound)
    }

    pub fn field(&self, values: Vec<f64>) -> Result<ScalarField> {
        if values.len() != self.node_count {
            return Err(Error::InvalidArgument(format!(
                "field has {} values, manifold has {} nodes",
                values.len(),
                self.node_count
            )));
        }
        ScalarField::new(self.id, values)
    }

    pub fn field_from_fn(&self, f: impl Fn(&[f64]) -> f64) -> ScalarField {
        let values = (0..self.node_count)
            .map(|i| f(&self.node_position(i)))
            .collect();
        ScalarField::from_raw(self.id, values)
    }

    pub fn constant_field(&self, c: f64) -> ScalarField {
        ScalarField::constant(self.id, self.node_count, c)
    }

    /// Node position: grid coordinates for tori, ambient R³ coordinates for
    /// the icosphere.
    pub fn node_position(&self, idx: usize) -> Vec<f64> {
        match &self.data {
            GeometryData::Grid { info, .. } => info.position(idx),
            GeometryData::Sphere(mesh) => mesh.vertices[idx].to_vec(),
        }
    }

    fn check_field(&self, f: &ScalarField) -> Result<()> {
        if f.manifold_id() != self.id {
            return Err(Error::ManifoldMismatch {
                field: f.manifold_id(),
                manifold: self.id,
            });
        }
        if f.len() != self.node_count {
            return Err(Error::InvalidArgument(format!(
                "field has {} values, manifold has {} nodes",
                f.len(),
                self.node_count
            )));
        }
        Ok(())
    }

    /// Δ_g f at every node.
    pub fn laplacian_apply(&self, f: &ScalarField) -> Result<ScalarField> {
        self.check_field(f)?;
        let cf = self.stiffness.apply_vec(f.values());
        let values = cf
            .iter()
            .zip(&self.volume_weights)
            .map(|(&c, &m)| c / m)
            .collect();
        Ok(ScalarField::from_raw(self.id, values))
    }

    /// |∇f|²_g at every node.
    pub fn gradient_sq(&self, f: &ScalarField) -> Result<ScalarField> {
        self.gradient_dot(f, f)
    }

    /// Metric inner product g(∇f, ∇g) at every node.
    pub fn gradient_dot(&self, f: &ScalarField, g: &ScalarField) -> Result<ScalarField> {
        self.check_field(f)?;
        self.check_field(g)?;
        match &self.data {
            GeometryData::Grid { info, phi } => {
                let fv = f.values();
                let gv = g.values();
                let values = (0..self.node_count)
                    .map(|i| {
                        let mut dotp = 0.0;
                        for a in 0..info.dim() {
                            dotp += info.d1(fv, i, a) * info.d1(gv, i, a);
                        }
                        match phi {
                            Some(p) => (-2.0 * p[i]).exp() * dotp,
                            None => dotp,
                        }
                    })
                    .collect();
                Ok(ScalarField::from_raw(self.id, values))
            }
            GeometryData::Sphere(mesh) => Ok(ScalarField::from_raw(
                self.id,
                mesh.gradient_dot_vertices(f.values(), g.values()),
            )),
        }
    }

    /// Squared norm of the covariant Hessian; structured grids only.
    pub fn hessian_sq(&self, f: &ScalarField) -> Result<ScalarField> {
        self.check_field(f)?;
        let (info, phi) = match &self.data {
            GeometryData::Grid { info, phi } => (info, phi),
            GeometryData::Sphere(_) => {
                return Err(Error::UnsupportedManifold {
                    op: "hessian_sq",
                    kind: self.spec.kind_name(),
                })
            }
        };
        let fv = f.values();
        let d = info.dim();
        let values = (0..self.node_count)
            .map(|i| {
                let mut partials = vec![0.0; d];
                for a in 0..d {
                    partials[a] = info.d1(fv, i, a);
                }
                let mut sum = 0.0;
                for a in 0..d {
                    for b2 in 0..d {
                        let second = if a == b2 {
                            info.d2(fv, i, a)
                        } else {
                            info.d2_mixed(fv, i, a, b2)
                        };
                        let cov = match phi {
                            None => second,
                            Some(p) => {
                                // conformal 2-D Christoffels from φ
                                let px = info.d1(p, i, 0);
                                let py = info.d1(p, i, 1);
                                let gamma = conformal_christoffel(px, py, a, b2);
                                second - gamma[0] * partials[0] - gamma[1] * partials[1]
                            }
                        };
                        sum += cov * cov;
                    }
                }
                match phi {
                    Some(p) => (-4.0 * p[i]).exp() * sum,
                    None => sum,
                }
            })
            .collect();
        Ok(ScalarField::from_raw(self.id, values))
    }

    /// Gaussian curvature field (2-D conformal torus) or the constant
    /// curvature of the simple kinds.
    pub fn gauss_curvature_field(&self) -> Result<ScalarField> {
        match &self.data {
            GeometryData::Grid { info, phi: Some(p) } => Ok(ScalarField::from_raw(
                self.id,
                gauss_curvature(info, p),
            )),
            GeometryData::Grid { .. } => Ok(self.constant_field(0.0)),
            GeometryData::Sphere(_) => Ok(self.constant_field(1.0)),
        }
    }

    /// Max over nodes of the Bochner identity defect
    /// |Δ|∇U|² - 2|∇²U|² - 2∇U·∇ΔU - 2Ric(∇U,∇U)|; structured grids only.
    pub fn bochner_residual(&self, u: &ScalarField) -> Result<f64> {
        self.check_field(u)?;
        if matches!(self.data, GeometryData::Sphere(_)) {
            return Err(Error::UnsupportedManifold {
                op: "bochner_residual",
                kind: self.spec.kind_name(),
            });
        }
        let grad_sq = self.gradient_sq(u)?;
        let lhs = self.laplacian_apply(&grad_sq)?;
        let hess = self.hessian_sq(u)?;
        let lap_u = self.laplacian_apply(u)?;
        let cross = self.gradient_dot(u, &lap_u)?;
        let ric = self.gauss_curvature_field()?; // Ric(∇U,∇U) = K_gauss |∇U|² in 2-D, 0 flat
        let is_conformal = matches!(&self.data, GeometryData::Grid { phi: Some(_), .. });
        let mut worst: f64 = 0.0;
        for i in 0..self.node_count {
            let ric_term = if is_conformal {
                ric.values()[i] * grad_sq.values()[i]
            } else {
                0.0
            };
            let r = lhs.values()[i]
                - 2.0 * hess.values()[i]
                - 2.0 * cross.values()[i]
                - 2.0 * ric_term;
            worst = worst.max(r.abs());
        }
        Ok(worst)
    }
}

/// Christoffel symbols of `g = e^{2φ}δ` contracted with nothing: returns
/// (Γ^x_{ab}, Γ^y_{ab}) given ∂φ.
fn conformal_christoffel(px: f64, py: f64, a: usize, b: usize) -> [f64; 2] {
    match (a, b) {
        (0, 0) => [px, -py],
        (1, 1) => [-px, py],
        _ => [py, px],
    }
}

/// Closed-form Laplacian comparison margin on the unit sphere: max over
/// sampled mesh radii r ∈ (0.1, π-0.1) of r·cot(r) - (1 + √K·r). For a
/// correct comparison this is ≤ 0 when K = 0.
pub fn laplace_comparison_check(subdivision: u32, k: f64) -> Result<f64> {
    if k < 0.0 {
        return Err(Error::InvalidArgument("K must be nonnegative".into()));
    }
    let mesh = icosphere::build(subdivision.max(2));
    let pole = mesh.vertices[0];
    let mut worst = f64::NEG_INFINITY;
    for v in &mesh.vertices {
        let r = icosphere::dot(*v, pole).clamp(-1.0, 1.0).acos();
        if r <= 0.1 || r >= std::f64::consts::PI - 0.1 {
            continue;
        }
        let margin = r * (r.cos() / r.sin()) - (1.0 + k.sqrt() * r);
        worst = worst.max(margin);
    }
    if worst == f64::NEG_INFINITY {
        return Err(Error::InsufficientData("no sampled radii in (0.1, π-0.1)".into()));
    }
    Ok(worst)
}
