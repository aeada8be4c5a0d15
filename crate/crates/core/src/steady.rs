//! Sign-changing steady states: minimize the Dirichlet energy
//! E(u) = ½∫|∇u|² over the family 𝒜 = {∫|u|^{p+1} = 1, ∫|u|^{p−1}u = 0},
//! recover the Euler–Lagrange multipliers, and rescale to a solution of
//! ΔU + |U|^{p−1}U = 0. A one-dimensional elliptic-function/shooting oracle
//! provides the reference profile.

use serde::Serialize;

use crate::field::ScalarField;
use crate::geometry::{DiscreteManifold, ManifoldSpec};
use crate::heatflow::adaptive_simpson;
use crate::sparse::{solve_cg, ShiftedOperator};
use crate::{Error, Result};

fn integrate(m: &DiscreteManifold, f: impl Fn(f64) -> f64, u: &ScalarField) -> f64 {
    u.values()
        .iter()
        .zip(m.volume_weights())
        .map(|(&v, &w)| f(v) * w)
        .sum()
}

fn dirichlet_energy(m: &DiscreteManifold, u: &ScalarField) -> f64 {
    let cu = m.stiffness().apply_vec(u.values());
    -0.5 * u.values().iter().zip(&cu).map(|(&a, &b)| a * b).sum::<f64>()
}

/// Projects onto 𝒜: a shift c (bisection on the strictly decreasing map
/// c ↦ ∫|u−c|^{p−1}(u−c)) kills the signed moment, then scaling normalizes
/// ∫|·|^{p+1}; the scaling is moment-neutral by homogeneity.
pub fn project_to_a(u: &ScalarField, m: &DiscreteManifold, p: f64) -> Result<ScalarField> {
    let span = u.max() - u.min();
    if span <= 1e-14 {
        return Err(Error::InvalidArgument(
            "cannot project a constant field onto the constraint family".into(),
        ));
    }
    let moment = |c: f64| integrate(m, |v| (v - c).abs().powf(p - 1.0) * (v - c), u);
    let (mut lo, mut hi) = (u.min(), u.max());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if moment(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * span {
            break;
        }
    }
    let c = 0.5 * (lo + hi);
    let shifted = u.map(|v| v - c);
    let norm = integrate(m, |v| v.abs().powf(p + 1.0), &shifted);
    if !(norm > 0.0) {
        return Err(Error::InvalidArgument("projection produced the zero field".into()));
    }
    let s = norm.powf(-1.0 / (p + 1.0));
    Ok(shifted.map(|v| s * v))
}

#[derive(Debug, Clone, Copy)]
pub struct MinimizeOpts {
    pub max_iter: usize,
    pub energy_tol: f64,
    pub grad_tol: f64,
}

impl Default for MinimizeOpts {
    fn default() -> Self {
        Self { max_iter: 50_000, energy_tol: 1e-12, grad_tol: 1e-8 }
    }
}

#[derive(Debug, Serialize)]
pub struct SteadyResult {
    #[serde(skip)]
    pub u_inf: ScalarField,
    pub energy: f64,
    pub lambda: f64,
    pub mu: f64,
    #[serde(skip)]
    pub rescaled: ScalarField,
    pub pde_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves (M − C) x = M·rhs, i.e. applies the (I − Δ)^{−1} preconditioner in
/// the volume-weighted inner product.
fn precondition(m: &DiscreteManifold, rhs: &[f64]) -> Result<Vec<f64>> {
    let mass = m.volume_weights();
    let b: Vec<f64> = rhs.iter().zip(mass).map(|(&r, &w)| r * w).collect();
    let op = ShiftedOperator { mass, stiffness: m.stiffness(), coeff: 1.0 };
    let (x, _) = solve_cg(&op, &b, None, 1e-10, 50 * m.node_count())?;
    Ok(x)
}

fn weighted_dot(m: &DiscreteManifold, a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(m.volume_weights())
        .map(|((&x, &y), &w)| x * y * w)
        .sum()
}

/// Projected-gradient minimization of E over 𝒜. The preconditioned descent
/// direction is orthogonalized against both constraint gradients (in the
/// preconditioned metric) before stepping; without that the shift-and-scale
/// retraction destroys the descent property and the line search stalls.
pub fn minimize_energy(
    m: &DiscreteManifold,
    p: f64,
    seed: &ScalarField,
    opts: MinimizeOpts,
) -> Result<SteadyResult> {
    let n_sob = crate::exponents::p_sobolev(m.dimension() as u32);
    if !(p > 1.0) || p >= n_sob {
        return Err(Error::InvalidArgument(format!(
            "need 1 < p < {n_sob} (subcritical), got {p}"
        )));
    }
    let mut u = project_to_a(seed, m, p)?;
    let mut energy = dirichlet_energy(m, &u);
    let mut tau = 1.0;
    let mut converged = false;
    let mut iterations = 0;

    for it in 0..opts.max_iter {
        iterations = it + 1;
        // energy gradient in L²(dvol): -Δu = -Cu/m; preconditioned solve
        // uses the raw Cu as the right-hand side
        let cu = m.stiffness().apply_vec(u.values());
        let neg_lap: Vec<f64> = cu
            .iter()
            .zip(m.volume_weights())
            .map(|(&c, &w)| -c / w)
            .collect();
        let d = precondition(m, &neg_lap)?;

        // constraint gradients and their preconditioned images
        let g1: Vec<f64> =
            u.values().iter().map(|&v| v.abs().powf(p - 1.0) * v).collect();
        let g2: Vec<f64> = u.values().iter().map(|&v| v.abs().powf(p - 1.0)).collect();
        let pg1 = precondition(m, &g1)?;
        let pg2 = precondition(m, &g2)?;
        let a11 = weighted_dot(m, &g1, &pg1);
        let a12 = weighted_dot(m, &g1, &pg2);
        let a21 = weighted_dot(m, &g2, &pg1);
        let a22 = weighted_dot(m, &g2, &pg2);
        let b1 = weighted_dot(m, &g1, &d);
        let b2 = weighted_dot(m, &g2, &d);
        let det = a11 * a22 - a12 * a21;
        let (ca, cb) = if det.abs() > 1e-300 {
            ((b1 * a22 - b2 * a12) / det, (a11 * b2 - a21 * b1) / det)
        } else {
            (0.0, 0.0)
        };
        let dir: Vec<f64> = (0..d.len())
            .map(|i| d[i] - ca * pg1[i] - cb * pg2[i])
            .collect();
        let grad_norm = weighted_dot(m, &dir, &dir).sqrt();

        // backtracking line search on the retracted iterate
        tau = (tau * 2.0f64).min(1e3);
        let mut accepted = None;
        for _ in 0..60 {
            let trial = ScalarField::from_raw(
                u.manifold_id(),
                u.values()
                    .iter()
                    .zip(&dir)
                    .map(|(&v, &g)| v - tau * g)
                    .collect(),
            );
            if let Ok(projected) = project_to_a(&trial, m, p) {
                let e_new = dirichlet_energy(m, &projected);
                if e_new < energy {
                    accepted = Some((projected, e_new));
                    break;
                }
            }
            tau *= 0.5;
        }
        match accepted {
            Some((next, e_new)) => {
                let de = energy - e_new;
                u = next;
                energy = e_new;
                if de <= opts.energy_tol && grad_norm <= opts.grad_tol {
                    converged = true;
                    break;
                }
            }
            None => {
                converged = grad_norm <= opts.grad_tol;
                break;
            }
        }
    }

    let (lambda, mu) = multipliers(&u, m, p)?;
    let (rescaled, pde_residual) = rescale_and_residual(&u, lambda, m, p)?;
    Ok(SteadyResult {
        u_inf: u,
        energy,
        lambda,
        mu,
        rescaled,
        pde_residual,
        iterations,
        converged,
    })
}

/// Euler–Lagrange multipliers of the constrained minimizer:
/// λ = ∫(−Δu)u = 2E (testing against u), μ = ∫(−Δu)/∫|u|^{p−1} (≈ 0 by
/// Green's identity on a closed manifold).
pub fn multipliers(u: &ScalarField, m: &DiscreteManifold, p: f64) -> Result<(f64, f64)> {
    let cu = m.stiffness().apply_vec(u.values());
    let lambda = -u.values().iter().zip(&cu).map(|(&a, &b)| a * b).sum::<f64>();
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "nonpositive multiplier λ = {lambda}: minimization failed"
        )));
    }
    let numerator = -cu.iter().sum::<f64>();
    let denom = integrate(m, |v| v.abs().powf(p - 1.0), u);
    Ok((lambda, numerator / denom))
}

/// U = λ^{1/(p−1)} u∞ solves ΔU + |U|^{p−1}U = 0; returns U and the relative
/// sup-norm residual.
pub fn rescale_and_residual(
    u: &ScalarField,
    lambda: f64,
    m: &DiscreteManifold,
    p: f64,
) -> Result<(ScalarField, f64)> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("λ must be positive, got {lambda}")));
    }
    let big_u = u.map(|v| lambda.powf(1.0 / (p - 1.0)) * v);
    let lap = m.laplacian_apply(&big_u)?;
    let sup = big_u.max_abs();
    let residual = (0..big_u.len())
        .map(|i| {
            let v = big_u.values()[i];
            (lap.values()[i] + v.abs().powf(p - 1.0) * v).abs()
        })
        .fold(0.0f64, f64::max)
        / sup.powf(p);
    Ok((big_u, residual))
}

/// Jacobi elliptic sn, cn, dn for parameter m = k² ∈ [0, 1); descending
/// Landen transformation.
pub fn sncndn(u: f64, m_param: f64) -> (f64, f64, f64) {
    const CA: f64 = 1e-14;
    let emc = 1.0 - m_param;
    if emc == 0.0 {
        let cn = 1.0 / u.cosh();
        return (u.tanh(), cn, cn);
    }
    let mut emc = emc;
    let mut a = 1.0f64;
    let mut dn = 1.0f64;
    let mut em = [0.0f64; 16];
    let mut en = [0.0f64; 16];
    let mut l = 0;
    let mut c = 0.0;
    for i in 0..16 {
        l = i;
        em[i] = a;
        emc = emc.sqrt();
        en[i] = emc;
        c = 0.5 * (a + emc);
        if (a - emc).abs() <= CA * a {
            break;
        }
        emc *= a;
        a = c;
    }
    let uc = u * c;
    let mut sn = uc.sin();
    let mut cn = uc.cos();
    if sn != 0.0 {
        let mut aa = cn / sn;
        c *= aa;
        for i in (0..=l).rev() {
            let b = em[i];
            aa *= c;
            c *= dn;
            dn = (en[i] + aa) / (b + aa);
            aa = c / b;
        }
        let a2 = 1.0 / (c * c + 1.0).sqrt();
        sn = if sn < 0.0 { -a2 } else { a2 };
        cn = c * sn;
    }
    (sn, cn, dn)
}

/// Complete elliptic integral K(m) by the arithmetic-geometric mean.
pub fn elliptic_k(m_param: f64) -> f64 {
    let mut a = 1.0f64;
    let mut b = (1.0 - m_param).sqrt();
    for _ in 0..64 {
        if (a - b).abs() <= 1e-16 * a {
            break;
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    std::f64::consts::FRAC_PI_2 / a
}

#[derive(Debug)]
pub struct OracleProfile {
    /// Solution U of ΔU + |U|^{p−1}U = 0 sampled at the nodes.
    pub profile: ScalarField,
    /// Amplitude max U.
    pub amplitude: f64,
    /// Dirichlet energy of the 𝒜-normalized profile.
    pub energy: f64,
}

/// One-dimensional reference solution with `modes` full periods on the
/// circle. p = 3 uses the exact elliptic-function branch U = a·cn(ax, 1/√2);
/// other exponents use an amplitude-matched quadrature/integration fallback.
pub fn oracle_1d(m: &DiscreteManifold, p: f64, modes: u32) -> Result<OracleProfile> {
    let grid = match m.spec() {
        ManifoldSpec::FlatTorus { grid } if grid.dimension == 1 => grid,
        _ => {
            return Err(Error::UnsupportedManifold {
                op: "oracle_1d",
                kind: m.spec().kind_name(),
            })
        }
    };
    if modes == 0 {
        return Err(Error::InvalidArgument("mode count must be ≥ 1".into()));
    }
    let l = grid.period_lengths[0];
    let profile = if (p - 3.0).abs() < 1e-14 {
        // cn(·, k²=1/2) has period 4K; amplitude equals frequency for p = 3
        let a = 4.0 * elliptic_k(0.5) * modes as f64 / l;
        m.field_from_fn(|x| {
            let (_, cn, _) = sncndn(a * x[0], 0.5);
            a * cn
        })
    } else {
        // quarter period of the oscillator U'' = -|U|^{p-1}U at amplitude A
        // is A^{(1-p)/2}·sqrt((p+1)/2)·∫₀¹ ds/√(1-s^{p+1});
        // match it to L/(4·modes) to pin A, then integrate the ODE.
        // 1 − (1−x²)^{p+1} evaluated via expm1/ln_1p: the direct form loses
        // all precision as x → 0 and poisons the quadrature with infinities
        let ip = adaptive_simpson(
            &|x: f64| {
                if x == 0.0 {
                    return 2.0 / (p + 1.0).sqrt();
                }
                let denom = -f64::exp_m1((p + 1.0) * f64::ln_1p(-x * x));
                2.0 * x / denom.sqrt()
            },
            0.0,
            1.0,
            1e-13,
            40,
        );
        let quarter = l / (4.0 * modes as f64);
        let amp = (((p + 1.0) / 2.0f64).sqrt() * ip / quarter).powf(2.0 / (p - 1.0));
        if !amp.is_finite() || amp <= 0.0 {
            return Err(Error::NoOrbit(format!(
                "no periodic orbit at p={p}, L={l}, modes={modes}"
            )));
        }
        // RK4 on (U, U') from the maximum, sampled at the nodes
        let n = grid.nodes_per_axis;
        let sub = 64usize;
        let h = l / (n * sub) as f64;
        let f = |y: [f64; 2]| [y[1], -y[0].abs().powf(p - 1.0) * y[0]];
        let mut y = [amp, 0.0];
        let mut samples = Vec::with_capacity(n);
        for i in 0..n * sub {
            if i % sub == 0 {
                samples.push(y[0]);
            }
            let k1 = f(y);
            let k2 = f([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
            let k3 = f([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
            let k4 = f([y[0] + h * k3[0], y[1] + h * k3[1]]);
            for j in 0..2 {
                y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
        }
        // periodicity check: the orbit must close after `modes` periods
        if (y[0] - amp).abs() > 1e-6 * amp || y[1].abs() > 1e-6 * amp {
            return Err(Error::NoOrbit(format!(
                "orbit fails to close: end state ({}, {}) vs ({amp}, 0)",
                y[0], y[1]
            )));
        }
        ScalarField::from_raw(m.id(), samples)
    };
    let amplitude = profile.max();
    let normalized = project_to_a(&profile, m, p)?;
    let energy = dirichlet_energy(m, &normalized);
    Ok(OracleProfile { profile, amplitude, energy })
}

/// L² distance between two fields on a 1-D circle after optimizing over a
/// continuous translation and a global sign; reference values between nodes
/// come from periodic linear interpolation.
pub fn aligned_distance_1d(
    u: &ScalarField,
    reference: &ScalarField,
    m: &DiscreteManifold,
) -> Result<f64> {
    let grid = match m.spec() {
        ManifoldSpec::FlatTorus { grid } if grid.dimension == 1 => grid,
        _ => {
            return Err(Error::UnsupportedManifold {
                op: "aligned_distance_1d",
                kind: m.spec().kind_name(),
            })
        }
    };
    let n = grid.nodes_per_axis;
    let l = grid.period_lengths[0];
    let h = l / n as f64;
    let rv = reference.values();
    let sample = |x: f64| {
        let s = (x / h).rem_euclid(n as f64);
        let i = s.floor() as usize % n;
        let frac = s - s.floor();
        rv[i] * (1.0 - frac) + rv[(i + 1) % n] * frac
    };
    let dist = |shift: f64, sign: f64| {
        let mut acc = 0.0;
        for (i, &v) in u.values().iter().enumerate() {
            let d = v - sign * sample(i as f64 * h + shift);
            acc += d * d * h;
        }
        acc.sqrt()
    };
    let mut best = f64::INFINITY;
    for &sign in &[1.0, -1.0] {
        // coarse scan at node resolution, then golden-section refinement
        let mut best_shift = 0.0;
        let mut best_d = f64::INFINITY;
        for i in 0..n {
            let d = dist(i as f64 * h, sign);
            if d < best_d {
                best_d = d;
                best_shift = i as f64 * h;
            }
        }
        let phi = 0.5 * (5.0f64.sqrt() - 1.0);
        let (mut a, mut b) = (best_shift - h, best_shift + h);
        let mut x1 = b - phi * (b - a);
        let mut x2 = a + phi * (b - a);
        let mut f1 = dist(x1, sign);
        let mut f2 = dist(x2, sign);
        for _ in 0..80 {
            if f1 < f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - phi * (b - a);
                f1 = dist(x1, sign);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + phi * (b - a);
                f2 = dist(x2, sign);
            }
        }
        best = best.min(f1.min(f2));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::tests::flat_torus;
    use std::f64::consts::PI;

    #[test]
    fn projection_examples() {
        let m = flat_torus(1, 256, 2.0 * PI);
        let u = m.field_from_fn(|x| x[0].sin());
        let proj = project_to_a(&u, &m, 3.0).unwrap();
        // c = 0 by odd symmetry, s = (3π/4)^{-1/4}
        let s = (3.0 * PI / 4.0).powf(-0.25);
        let err = (0..m.node_count())
            .map(|i| (proj.values()[i] - s * m.node_position(i)[0].sin()).abs())
            .fold(0.0f64, f64::max);
        assert!(err < 1e-4, "err = {err}");
        let c1 = integrate(&m, |v| v.abs().powi(4), &proj);
        let c2 = integrate(&m, |v| v * v * v, &proj);
        assert!((c1 - 1.0).abs() <= 1e-10);
        assert!(c2.abs() <= 1e-10 * integrate(&m, |v| v.abs().powi(3), &proj));

        // idempotence
        let again = project_to_a(&proj, &m, 3.0).unwrap();
        let d = (0..m.node_count())
            .map(|i| (again.values()[i] - proj.values()[i]).abs())
            .fold(0.0f64, f64::max);
        assert!(d <= 1e-10, "projection not idempotent: {d}");

        // u = 1 + sin x: some interior shift
        let v = m.field_from_fn(|x| 1.0 + x[0].sin());
        let pv = project_to_a(&v, &m, 3.0).unwrap();
        let c2v = integrate(&m, |w| w * w * w, &pv);
        assert!(c2v.abs() <= 1e-10);

        assert!(project_to_a(&m.constant_field(2.0), &m, 3.0).is_err());
    }

    #[test]
    fn elliptic_function_identities() {
        assert!((elliptic_k(0.5) - 1.8540746773013719).abs() < 1e-12);
        // pointwise identities sn²+cn²=1, dn² = 1 - m sn²
        for i in 0..50 {
            let x = -3.0 + 0.13 * i as f64;
            let (sn, cn, dn) = sncndn(x, 0.5);
            assert!((sn * sn + cn * cn - 1.0).abs() < 1e-12);
            assert!((dn * dn - (1.0 - 0.5 * sn * sn)).abs() < 1e-12);
        }
        // quarter-period zero of cn
        let (_, cn, _) = sncndn(elliptic_k(0.5), 0.5);
        assert!(cn.abs() < 1e-12);
    }

    #[test]
    fn oracle_profile_solves_the_ode() {
        let m = flat_torus(1, 256, 2.0 * PI);
        let oracle = oracle_1d(&m, 3.0, 1).unwrap();
        assert!((oracle.amplitude - 1.1803405990160938).abs() < 1e-6);
        // five-point finite-difference second derivative vs -U³
        let a = oracle.amplitude;
        let h = 1e-3;
        let u_of = |x: f64| {
            let (_, cn, _) = sncndn(a * x, 0.5);
            a * cn
        };
        let mut worst: f64 = 0.0;
        for i in 0..100 {
            let x = 2.0 * PI * i as f64 / 100.0;
            let d2 = (-u_of(x - 2.0 * h) + 16.0 * u_of(x - h) - 30.0 * u_of(x)
                + 16.0 * u_of(x + h)
                - u_of(x + 2.0 * h))
                / (12.0 * h * h);
            worst = worst.max((d2 + u_of(x).powi(3)).abs());
        }
        assert!(worst <= 1e-8, "ODE residual = {worst}");

        // -U is a solution too: distance after sign alignment is ~0
        let neg = oracle.profile.map(|v| -v);
        let d = aligned_distance_1d(&neg, &oracle.profile, &m).unwrap();
        assert!(d < 1e-10);

        // mode count 2: amplitude doubles
        let two = oracle_1d(&m, 3.0, 2).unwrap();
        assert!((two.amplitude - 2.0 * oracle.amplitude).abs() < 1e-6);
    }

    #[test]
    fn shooting_fallback_recovers_p3() {
        let m = flat_torus(1, 256, 2.0 * PI);
        let exact = oracle_1d(&m, 3.0, 1).unwrap();
        // run the generic branch at p = 3 + tiny offset and compare
        let shot = oracle_1d(&m, 3.0 + 1e-9, 1).unwrap();
        assert!((shot.amplitude - exact.amplitude).abs() < 1e-5);
        let d = aligned_distance_1d(&shot.profile, &exact.profile, &m).unwrap();
        assert!(d < 1e-5, "profiles differ by {d}");
    }

    #[test]
    fn minimizer_matches_oracle_on_circle() {
        let m = flat_torus(1, 256, 2.0 * PI);
        let seed = m.field_from_fn(|x| x[0].sin() + 0.1 * (2.0 * x[0]).cos());
        let result = minimize_energy(&m, 3.0, &seed, MinimizeOpts::default()).unwrap();
        assert!(result.converged, "stopped after {} iterations", result.iterations);
        let oracle = oracle_1d(&m, 3.0, 1).unwrap();
        assert!(
            (result.energy - oracle.energy).abs() < 1e-4,
            "E = {}, oracle = {}",
            result.energy,
            oracle.energy
        );
        assert!((result.lambda - 2.0 * result.energy).abs() <= 1e-8 * result.lambda);
        assert!(result.mu.abs() <= 1e-6 * result.lambda, "μ = {}", result.mu);
        assert!(result.pde_residual <= 5e-3, "residual = {}", result.pde_residual);
        // sign change forced by the constraint
        assert!(result.u_inf.min() < 0.0 && result.u_inf.max() > 0.0);
        let d = aligned_distance_1d(&result.rescaled, &oracle.profile, &m).unwrap();
        assert!(d <= 1e-2, "L² distance to oracle = {d}");
    }

    #[test]
    fn two_dimensional_minimizer_beats_extended_profile() {
        let m = flat_torus(2, 32, 2.0 * PI);
        let seed = m.field_from_fn(|x| x[0].sin() + 0.05 * (x[0] + x[1]).sin());
        let result = minimize_energy(&m, 3.0, &seed, MinimizeOpts::default()).unwrap();
        assert!(result.pde_residual <= 5e-3, "residual = {}", result.pde_residual);
        // the 1-D profile extended constantly in y is admissible after
        // projection, so the minimum can only be lower
        let extended = m.field_from_fn(|x| x[0].sin());
        let candidate = project_to_a(&extended, &m, 3.0).unwrap();
        let e_candidate = dirichlet_energy(&m, &candidate);
        // fair comparison: run the minimizer from the candidate itself
        assert!(
            result.energy <= e_candidate + 1e-8,
            "E = {} vs extended candidate {}",
            result.energy,
            e_candidate
        );
        assert!(result.u_inf.min() < 0.0 && result.u_inf.max() > 0.0);
    }

    #[test]
    fn rescaling_consistency() {
        let m = flat_torus(1, 128, 2.0 * PI);
        let seed = m.field_from_fn(|x| x[0].sin());
        let u = project_to_a(&seed, &m, 3.0).unwrap();
        let (lambda, _) = multipliers(&u, &m, 3.0).unwrap();
        let (big_u, _) = rescale_and_residual(&u, lambda, &m, 3.0).unwrap();
        // scaling u by α and λ by α^{1-p} leaves U unchanged
        let alpha = 1.7;
        let u2 = u.map(|v| alpha * v);
        let lambda2 = lambda * alpha.powf(1.0 - 3.0);
        let (big_u2, _) = rescale_and_residual(&u2, lambda2, &m, 3.0).unwrap();
        let d = (0..big_u.len())
            .map(|i| (big_u.values()[i] - big_u2.values()[i]).abs())
            .fold(0.0f64, f64::max);
        assert!(d < 1e-12, "rescaled fields differ by {d}");
    }

    #[test]
    fn oracle_residual_after_rescale_roundtrip() {
        // injecting the exact profile: the PDE residual is discretization-only
        let m = flat_torus(1, 256, 2.0 * PI);
        let oracle = oracle_1d(&m, 3.0, 1).unwrap();
        let normalized = project_to_a(&oracle.profile, &m, 3.0).unwrap();
        let (lambda, _) = multipliers(&normalized, &m, 3.0).unwrap();
        let (_, residual) = rescale_and_residual(&normalized, lambda, &m, 3.0).unwrap();
        assert!(residual <= 5e-4, "residual = {residual}");
    }

    #[test]
    fn mesh_refinement_shrinks_energy_gap() {
        let mut energies = Vec::new();
        for n in [64usize, 128, 256] {
            let m = flat_torus(1, n, 2.0 * PI);
            let seed = m.field_from_fn(|x| x[0].sin() + 0.1 * (2.0 * x[0]).cos());
            let r = minimize_energy(&m, 3.0, &seed, MinimizeOpts::default()).unwrap();
            energies.push(r.energy);
        }
        let gap_coarse = (energies[0] - energies[2]).abs();
        let gap_fine = (energies[1] - energies[2]).abs();
        assert!(gap_fine < gap_coarse, "gaps: {gap_coarse} vs {gap_fine}");
    }
}
