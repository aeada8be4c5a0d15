//! End-to-end acceptance suite: one test per numbered criterion, each
//! printing a single PASS/FAIL line with its tolerance before asserting.
//! Run with `--nocapture` to see the lines for passing tests too.

use std::f64::consts::PI;
use std::time::Instant;

use harnack_lab::exponents::p_star;
use harnack_lab::feasibility::{find_params, threshold_estimate};
use harnack_lab::field::ScalarField;
use harnack_lab::geometry::{
    build_manifold, laplace_comparison_check, DiscreteManifold, GridSpec, ManifoldSpec,
};
use harnack_lab::harnack::{
    frames_from_trajectory, gaussian_kernel_frames, harnack_trend_check,
    inequality_3_11_residual, linear_flow_residual,
};
use harnack_lab::heatflow::{
    evolve, jensen_check, scaling_symmetry_check, FlowConfig, ReactionTerm, Scheme,
};
use harnack_lab::steady::{aligned_distance_1d, minimize_energy, oracle_1d, MinimizeOpts};

fn flat_torus(dim: usize, n: usize, l: f64) -> DiscreteManifold {
    build_manifold(ManifoldSpec::FlatTorus {
        grid: GridSpec {
            dimension: dim,
            nodes_per_axis: n,
            period_lengths: vec![l; dim],
        },
    })
    .unwrap()
}

fn verdict(criterion: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion:02} {name}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion:02} {name} failed: {detail}");
}

#[test]
fn criterion_01_exponent_table() {
    let start = Instant::now();
    let e1 = (p_star(1) - 8.0).abs();
    let e2 = (p_star(2) - (2.0 + 5.0f64.sqrt())).abs();
    let e3 = (p_star(3) - (5.0 + 33.0f64.sqrt()) / 4.0).abs();
    let dt = start.elapsed().as_secs_f64();
    let pass = e1 == 0.0 && e2 <= 1e-12 && e3 <= 1e-12 && dt < 1.0;
    verdict(
        1,
        "exponent table",
        pass,
        &format!(
            "p*(1) err {e1:.1e} (exact), p*(2) err {e2:.1e} ≤ 1e-12, \
             p*(3) err {e3:.1e} ≤ 1e-12, runtime {dt:.3}s < 1s"
        ),
    );
}

#[test]
fn criterion_02_feasibility_threshold() {
    // The scan-driven bisection locates the boundary of the region that is
    // *strictly* feasible on a finite grid. For N = 2 the constraint system
    // admits points arbitrarily close to, but bounded away from, the
    // closed-form exponent: the measured boundary sits near p = 4.0 rather
    // than 2+√5 ≈ 4.236. Reported honestly; analysis in the project notes.
    let mut detail = String::new();
    let mut pass = true;
    for dim in 1..=4u32 {
        let start = Instant::now();
        let est = threshold_estimate(dim, 1e-3).unwrap();
        let elapsed = start.elapsed().as_secs_f64();
        let err = (est - p_star(dim)).abs();
        let ok = err <= 0.02 && elapsed < 30.0;
        pass &= ok;
        detail.push_str(&format!(
            "N={dim}: est {est:.4} vs p* {:.4} (err {err:.3} ≤ 0.02, {elapsed:.1}s < 30s){} ",
            p_star(dim),
            if ok { "" } else { " ✗" }
        ));
    }
    verdict(2, "feasibility threshold", pass, detail.trim());
}

#[test]
fn criterion_03_bochner_identity() {
    let start = Instant::now();
    let mut residuals = Vec::new();
    for n in [64usize, 128] {
        let m = flat_torus(2, n, 2.0 * PI);
        let u = m.field_from_fn(|x| x[0].sin());
        residuals.push(m.bochner_residual(&u).unwrap());
    }
    let ratio = residuals[0] / residuals[1];
    let dt = start.elapsed().as_secs_f64();
    let pass = residuals[0] <= 0.01 && (3.5..=4.5).contains(&ratio) && dt < 5.0;
    verdict(
        3,
        "Bochner identity",
        pass,
        &format!(
            "n=64 residual {:.2e} ≤ 0.01, refinement ratio {ratio:.2} ∈ [3.5, 4.5], \
             runtime {dt:.2}s < 5s",
            residuals[0]
        ),
    );
}

#[test]
fn criterion_04_laplace_comparison() {
    let start = Instant::now();
    let worst = laplace_comparison_check(3, 0.0).unwrap();
    let dt = start.elapsed().as_secs_f64();
    let pass = worst <= 0.0 && dt < 1.0;
    verdict(
        4,
        "Laplacian comparison on the unit sphere",
        pass,
        &format!("max over r of r·cot(r) − 1 = {worst:.3e} ≤ 0, runtime {dt:.3}s < 1s"),
    );
}

#[test]
fn criterion_05_blowup_oracle() {
    let mut detail = String::new();
    let mut pass = true;
    for (p, lo, hi) in [(2.0, 0.98, 1.02), (3.0, 0.49, 0.51)] {
        let start = Instant::now();
        let m = flat_torus(1, 16, 1.0);
        let u0 = m.constant_field(1.0);
        let cfg = FlowConfig::new(ReactionTerm::PowerPositive { p }, Scheme::ImexEuler, 2.0);
        let traj = evolve(&u0, &m, &cfg).unwrap();
        let elapsed = start.elapsed().as_secs_f64();
        let ts = traj
            .blowup
            .as_ref()
            .map(|b| b.t_star_estimate)
            .unwrap_or(f64::NAN);
        let ok = (lo..=hi).contains(&ts) && elapsed < 60.0;
        pass &= ok;
        detail.push_str(&format!(
            "p={p}: T* {ts:.4} ∈ [{lo}, {hi}] ({elapsed:.1}s < 60s){} ",
            if ok { "" } else { " ✗" }
        ));
    }
    verdict(5, "blow-up oracle", pass, detail.trim());
}

#[test]
fn criterion_06_jensen_bound() {
    let start = Instant::now();
    let tol = 0.02;
    let m = flat_torus(1, 128, 1.0);
    let u0 = m.field_from_fn(|x| 1.0 + 0.5 * (2.0 * PI * x[0]).sin());
    let reaction = ReactionTerm::PowerPositive { p: 2.0 };
    let cfg = FlowConfig::new(reaction, Scheme::ImexEuler, 2.0);
    let traj = evolve(&u0, &m, &cfg).unwrap();
    let rep = jensen_check(&traj, &reaction, tol).unwrap();
    let ts = rep.t_star.unwrap_or(f64::NAN);
    let dt = start.elapsed().as_secs_f64();
    let pass = rep.pass && ts <= 1.0 + tol && rep.min_defect >= -tol && dt < 60.0;
    verdict(
        6,
        "Jensen blow-up bound",
        pass,
        &format!(
            "T* {ts:.4} ≤ 1.02, min normalized defect {:.2e} ≥ -{tol}, \
             integral bound {:.4}, runtime {dt:.1}s < 60s",
            rep.min_defect, rep.t_bound
        ),
    );
}

#[test]
fn criterion_07_gaussian_kernel_oracle() {
    let start = Instant::now();
    // analytic part: sup over r of ρ_lin is attained at r = 0 with value
    // γN/(2t)
    let gamma = 2.0;
    let dim = 2;
    let times = [0.5, 1.0, 2.0];
    let radii: Vec<f64> = (0..200).map(|i| i as f64 * 0.05).collect();
    let frames = gaussian_kernel_frames(dim, gamma, &times, &radii).unwrap();
    let mut analytic_err: f64 = 0.0;
    for &t in &times {
        let sup = frames
            .iter()
            .filter(|g| g.t == t)
            .map(|g| g.rho_lin)
            .fold(f64::NEG_INFINITY, f64::max);
        analytic_err = analytic_err.max((sup - gamma * dim as f64 / (2.0 * t)).abs());
    }

    // simulated part: linear flow on the flat 2-torus, K = 0
    let m = flat_torus(2, 32, 2.0 * PI);
    let u0 = m.field_from_fn(|x| 2.0 + 0.5 * x[0].sin() * x[1].sin());
    let cfg = FlowConfig::new(ReactionTerm::None, Scheme::ImexEuler, 3.0)
        .with_dt(1e-3)
        .with_stride(50);
    let traj = evolve(&u0, &m, &cfg).unwrap();
    let params = harnack_lab::feasibility::HarnackParams {
        dim: 2,
        p: 2.0,
        beta: 0.0,
        gamma,
        alpha: 0.0,
        alpha1: 0.0,
        alpha2: 0.0,
        alpha3: 0.0,
        c0: 1.0,
    };
    let monitor = frames_from_trajectory(&traj, &m, &params, true).unwrap();
    let samples: Vec<(f64, f64)> = monitor.iter().map(|f| (f.t, f.sup_rho())).collect();
    let rep = harnack_trend_check(&samples, 1.0, 0.0, 0.05, false).unwrap();
    let dt = start.elapsed().as_secs_f64();
    let pass = analytic_err <= 1e-12 && rep.asymptote <= 0.05 && dt < 120.0;
    verdict(
        7,
        "Gaussian-kernel oracle and linear trend",
        pass,
        &format!(
            "analytic sup ρ_lin err {analytic_err:.1e} ≤ 1e-12, fitted asymptote \
             {:.3e} ≤ 0.05 (K = 0), runtime {dt:.1}s < 120s",
            rep.asymptote
        ),
    );
}

#[test]
fn criterion_08_li_yau_slack() {
    let start = Instant::now();
    let params = find_params(1, 2.0).unwrap();
    let m = flat_torus(1, 128, 2.0 * PI);
    let step = 1e-3;

    // calibrated tolerance: 10× the measured linear-flow identity residual
    // at the same (h, dt)
    let u_lin = m.field_from_fn(|x| 2.0 + x[0].sin());
    let residual = linear_flow_residual(&m, &u_lin, step, 20.0 * step, params.gamma).unwrap();
    let tol = 10.0 * residual;

    // pre-blow-up window of the nonlinear flow (blow-up well past t_end
    // for this data)
    let u0 = m.field_from_fn(|x| 1.0 + 0.5 * x[0].sin());
    let cfg = FlowConfig::new(ReactionTerm::PowerPositive { p: 2.0 }, Scheme::ImexEuler, 0.3)
        .with_dt(step);
    let traj = evolve(&u0, &m, &cfg).unwrap();
    let snaps = &traj.snapshots;
    let k = m.ricci_lower_bound().1;
    let mut min_slack = f64::INFINITY;
    for i in 0..=snaps.len() - 5 {
        let rep = inequality_3_11_residual(&snaps[i..i + 5], &m, &params, k).unwrap();
        min_slack = min_slack.min(rep.min_slack);
    }
    let dt = start.elapsed().as_secs_f64();
    let pass = min_slack >= -tol && dt < 120.0;
    verdict(
        8,
        "pointwise evolution-inequality slack",
        pass,
        &format!(
            "min slack {min_slack:.3e} ≥ -tol, tol = 10×{residual:.3e} = {tol:.3e}, \
             runtime {dt:.1}s < 120s"
        ),
    );
}

#[test]
fn criterion_09_steady_state() {
    let start = Instant::now();
    let m = flat_torus(1, 256, 2.0 * PI);
    let p = 3.0;
    let seed = m.field_from_fn(|x| x[0].sin());
    let result = minimize_energy(&m, p, &seed, MinimizeOpts::default()).unwrap();
    let oracle = oracle_1d(&m, p, 1).unwrap();
    let mu_ratio = result.mu.abs() / result.lambda;
    let lam_rel = (result.lambda - 2.0 * result.energy).abs() / result.lambda;
    let dist = aligned_distance_1d(&result.rescaled, &oracle.profile, &m).unwrap();
    let dt = start.elapsed().as_secs_f64();
    let pass = result.converged
        && mu_ratio <= 1e-6
        && lam_rel <= 1e-8
        && result.pde_residual <= 5e-3
        && dist <= 1e-2
        && dt < 300.0;
    verdict(
        9,
        "sign-changing steady state",
        pass,
        &format!(
            "converged {}, |μ|/λ {mu_ratio:.1e} ≤ 1e-6, |λ-2E|/λ {lam_rel:.1e} ≤ 1e-8, \
             PDE residual {:.2e} ≤ 5e-3, aligned L² distance {dist:.2e} ≤ 1e-2 \
             (oracle amplitude {:.5}), runtime {dt:.1}s < 300s",
            result.converged, result.pde_residual, oracle.amplitude
        ),
    );
}

#[test]
fn criterion_10_scaling_symmetry() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for p in [2.0, 3.0] {
        for k in [0.5, 1.0, 2.0] {
            worst = worst.max(scaling_symmetry_check(p, k).unwrap());
        }
    }
    let dt = start.elapsed().as_secs_f64();
    let pass = worst <= 1e-12 && dt < 1.0;
    verdict(
        10,
        "parabolic scaling symmetry",
        pass,
        &format!("max family residual {worst:.1e} ≤ 1e-12, runtime {dt:.3}s < 1s"),
    );
}

#[test]
fn criterion_11_operator_contracts() {
    let start = Instant::now();
    let flat = flat_torus(2, 32, 2.0 * PI);
    let phi_sampler = flat_torus(2, 32, 2.0 * PI);
    let phi: Vec<f64> = (0..phi_sampler.node_count())
        .map(|i| {
            let x = phi_sampler.node_position(i);
            0.2 * x[0].sin() * x[1].cos()
        })
        .collect();
    let conformal = build_manifold(ManifoldSpec::ConformalTorus {
        grid: GridSpec {
            dimension: 2,
            nodes_per_axis: 32,
            period_lengths: vec![2.0 * PI; 2],
        },
        phi,
    })
    .unwrap();
    let sphere = build_manifold(ManifoldSpec::Icosphere { subdivision: 3 }).unwrap();

    let mut detail = String::new();
    let mut pass = true;
    for m in [&flat, &conformal, &sphere] {
        let c = m.stiffness();
        let scale = c.inf_norm();
        let n = m.node_count();

        // constant kernel
        let ones = vec![1.0; n];
        let c_ones = c.apply_vec(&ones);
        let kernel_err = c_ones.iter().fold(0.0f64, |a, &v| a.max(v.abs()));

        // self-adjointness of the assembled matrix
        let asym = c.max_asymmetry();

        // negative semidefiniteness and Green's identity on pseudo-random
        // fields (deterministic xorshift stream)
        let mut state = 0x193a_6754_u64;
        let mut rand = || {
            state ^= state >> 12;
            state ^= state << 25;
            state ^= state >> 27;
            (state.wrapping_mul(0x2545_f491_4f6c_dd1d) >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut max_quad: f64 = f64::NEG_INFINITY;
        let mut green_err: f64 = 0.0;
        for _ in 0..20 {
            let u: Vec<f64> = (0..n).map(|_| rand()).collect();
            let v: Vec<f64> = (0..n).map(|_| rand()).collect();
            let cu = c.apply_vec(&u);
            let cv = c.apply_vec(&v);
            let quad: f64 = u.iter().zip(&cu).map(|(&a, &b)| a * b).sum();
            let ucv: f64 = u.iter().zip(&cv).map(|(&a, &b)| a * b).sum();
            let vcu: f64 = v.iter().zip(&cu).map(|(&a, &b)| a * b).sum();
            let norm: f64 = scale * n as f64;
            max_quad = max_quad.max(quad / norm);
            green_err = green_err.max((ucv - vcu).abs() / norm);
        }

        let tol = 1e-12;
        let ok = kernel_err <= tol * scale.max(1.0)
            && asym <= tol * scale.max(1.0)
            && max_quad <= tol
            && green_err <= tol;
        pass &= ok;
        detail.push_str(&format!(
            "{}: kernel {kernel_err:.1e}, asym {asym:.1e}, max uᵀCu/scale {max_quad:.1e}, \
             Green {green_err:.1e}{} ",
            m.spec().kind_name(),
            if ok { "" } else { " ✗" }
        ));
    }
    let dt = start.elapsed().as_secs_f64();
    pass &= dt < 30.0;
    verdict(
        11,
        "operator contracts",
        pass,
        &format!("{}runtime {dt:.1}s < 30s", detail),
    );
}
