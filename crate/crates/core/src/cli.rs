//! Batch front end: experiment configs, pipeline dispatch, and report
//! rendering. One run per process invocation; independent runs are safe to
//! parallelize across processes as long as the output directories differ.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::exponents::{exponent_table, p_star};
use crate::feasibility::{check_constraints, find_params, threshold_trace, feasible_scan, HarnackParams, SearchBox};
use crate::geometry::{build_manifold, DiscreteManifold, ManifoldSpec};
use crate::harnack::{
    frames_from_trajectory, harnack_trend_check, identity_residual, inequality_3_11_residual,
    lemma_4_1_check, linear_flow_residual, ode_comparison_check, IdentityKind, MonitorFrame,
    TrendStatus,
};
use crate::heatflow::{
    evolve, jensen_check, min_tracker_check, scaling_symmetry_check, FlowConfig, Trajectory,
};
use crate::steady::{aligned_distance_1d, minimize_energy, oracle_1d, MinimizeOpts};
use crate::{Error, Result};

/// Checks the `run` pipeline knows how to execute, in execution order.
pub const CHECK_REGISTRY: &[&str] = &[
    "feasibility",
    "blowup",
    "jensen",
    "min_tracker",
    "harnack_trend",
    "slack",
    "lemma_4_1",
    "ode_comparison",
    "steady",
    "scaling",
];

fn default_one() -> f64 {
    1.0
}

/// Constants of the two pointwise bounds. `gamma`/`beta` left unset means
/// "derive them from the feasibility recipe for (N, p)", which requires
/// p < p_*(N).
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct HarnackSettings {
    pub gamma: Option<f64>,
    pub beta: Option<f64>,
    /// Constant C₀ of the nonlinear bound ρ ≤ C₀K.
    #[serde(default = "default_one")]
    pub c0: f64,
    /// Constant of the linear-flow bound.
    #[serde(default = "default_one")]
    pub c_lin: f64,
}

impl Default for HarnackSettings {
    fn default() -> Self {
        Self { gamma: None, beta: None, c0: 1.0, c_lin: 1.0 }
    }
}

/// Initial condition recipes expressible in a config file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    Constant { value: f64 },
    /// base + amplitude·sin(2π·mode·x₁/L₁) along the first coordinate.
    Sine { base: f64, amplitude: f64, mode: u32 },
    /// base plus a seeded superposition of low-frequency waves in the
    /// ambient coordinates; same seed ⇒ same field.
    RandomModes { base: f64, amplitude: f64, modes: u32 },
}

impl InitialData {
    pub fn build(&self, m: &DiscreteManifold, seed: u64) -> Result<crate::field::ScalarField> {
        match *self {
            InitialData::Constant { value } => Ok(m.constant_field(value)),
            InitialData::Sine { base, amplitude, mode } => {
                let l = first_period(m);
                let k = 2.0 * std::f64::consts::PI * mode as f64 / l;
                Ok(m.field_from_fn(|x| base + amplitude * (k * x[0]).sin()))
            }
            InitialData::RandomModes { base, amplitude, modes } => {
                if modes == 0 {
                    return Err(Error::Config("random_modes needs modes ≥ 1".into()));
                }
                let mut state = seed ^ 0x9e37_79b9_7f4a_7c15;
                let mut rand_unit = || {
                    // xorshift64*: reproducible across platforms, no deps
                    state ^= state >> 12;
                    state ^= state << 25;
                    state ^= state >> 27;
                    (state.wrapping_mul(0x2545_f491_4f6c_dd1d) >> 11) as f64
                        / (1u64 << 53) as f64
                };
                let dim = m.node_position(0).len();
                let waves: Vec<(Vec<f64>, f64, f64)> = (1..=modes)
                    .map(|j| {
                        let dir: Vec<f64> = (0..dim).map(|_| rand_unit() - 0.5).collect();
                        let phase = 2.0 * std::f64::consts::PI * rand_unit();
                        (dir, phase, 1.0 / j as f64)
                    })
                    .collect();
                let l = first_period(m);
                let k0 = 2.0 * std::f64::consts::PI / l;
                Ok(m.field_from_fn(|x| {
                    let mut v = base;
                    for (j, (dir, phase, weight)) in waves.iter().enumerate() {
                        let dot: f64 =
                            dir.iter().zip(x).map(|(&d, &xi)| d * xi).sum();
                        v += amplitude * weight * ((j + 1) as f64 * k0 * dot + phase).sin();
                    }
                    v
                }))
            }
        }
    }
}

fn first_period(m: &DiscreteManifold) -> f64 {
    match m.spec() {
        ManifoldSpec::FlatTorus { grid } | ManifoldSpec::ConformalTorus { grid, .. } => {
            grid.period_lengths[0]
        }
        // unit sphere: use the equator length as the natural wavelength
        ManifoldSpec::Icosphere { .. } => 2.0 * std::f64::consts::PI,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExperimentConfig {
    pub manifold: ManifoldSpec,
    pub initial: InitialData,
    pub flow: FlowConfig,
    #[serde(default)]
    pub harnack: HarnackSettings,
    pub checks: Vec<String>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub random_seed: u64,
    /// Slack tolerance override; when unset, flow-based slack checks use
    /// 10× the measured linear-flow identity residual at the same
    /// discretization.
    #[serde(default)]
    pub tol: Option<f64>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for name in &self.checks {
            if !CHECK_REGISTRY.contains(&name.as_str()) {
                return Err(Error::Config(format!(
                    "unknown check `{name}`; known checks: {}",
                    CHECK_REGISTRY.join(", ")
                )));
            }
        }
        for (i, name) in self.checks.iter().enumerate() {
            if self.checks[..i].contains(name) {
                return Err(Error::Config(format!("check `{name}` requested twice")));
            }
        }
        self.flow.reaction.validate()?;
        // the auto-parameter invariant: a derivable (β, γ) pair exists only
        // below the feasibility threshold
        if self.harnack.gamma.is_none() || self.harnack.beta.is_none() {
            if let Some(p) = self.flow.reaction.p() {
                let dim = self.manifold.dimension() as u32;
                let star = p_star(dim);
                if p >= star - 1e-6 {
                    return Err(Error::Infeasible { dim, p, threshold: star });
                }
            }
        }
        Ok(())
    }

    /// Resolved monitor parameters and whether the run is a linear flow.
    pub fn resolve_params(&self, dim: u32) -> Result<(HarnackParams, bool)> {
        match self.flow.reaction.p() {
            None => {
                let gamma = self.harnack.gamma.unwrap_or(2.0);
                Ok((
                    HarnackParams {
                        dim,
                        p: 2.0,
                        beta: 0.0,
                        gamma,
                        alpha: 0.0,
                        alpha1: 0.0,
                        alpha2: 0.0,
                        alpha3: 0.0,
                        c0: self.harnack.c_lin,
                    },
                    true,
                ))
            }
            Some(p) => match (self.harnack.beta, self.harnack.gamma) {
                (Some(beta), Some(gamma)) => {
                    let rep = check_constraints(dim, p, beta, gamma)?;
                    if !rep.feasible {
                        return Err(Error::Config(format!(
                            "(β, γ) = ({beta}, {gamma}) violates the constraint system: \
                             s1 = {}, s2 = {}",
                            rep.s1, rep.s2
                        )));
                    }
                    let n = dim as f64;
                    let alpha = 0.5 * (2.0 / n - gamma * gamma * (p - 1.0) / (4.0 * (gamma - beta)));
                    Ok((
                        HarnackParams {
                            dim,
                            p,
                            beta,
                            gamma,
                            alpha,
                            alpha1: 2.0 / n - alpha,
                            alpha2: alpha / (gamma * gamma),
                            alpha3: alpha * (gamma - 1.0) * (gamma - 1.0) / (gamma * gamma),
                            c0: self.harnack.c0,
                        },
                        false,
                    ))
                }
                _ => {
                    let mut params = find_params(dim, p)?;
                    params.c0 = self.harnack.c0;
                    Ok((params, false))
                }
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CheckStatus {
    Pass,
    Fail,
    Vacuous,
}

impl CheckStatus {
    fn label(self) -> &'static str {
        match self {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Vacuous => "VACUOUS",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub quantity: String,
    pub bound: f64,
    pub measured: f64,
    /// Positive means the bound holds with room to spare.
    pub slack: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub status: CheckStatus,
    pub rows: Vec<ReportRow>,
    pub note: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub checks: Vec<CheckOutcome>,
    pub files: Vec<String>,
}

impl RunReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }
}

/// Six significant digits, fixed notation when the magnitude allows it.
fn fmt6(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0.00000".into();
    }
    let exp = v.abs().log10().floor() as i32;
    if (-3..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{v:.5e}")
    }
}

pub fn report_render(report: &RunReport) -> String {
    let mut out = String::new();
    out.push_str("# Run report\n");
    for check in &report.checks {
        let _ = write!(out, "\n## {} — {}\n\n", check.name, check.status.label());
        if !check.rows.is_empty() {
            out.push_str("| quantity | bound | measured | slack |\n");
            out.push_str("|---|---|---|---|\n");
            for row in &check.rows {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} |",
                    row.quantity,
                    fmt6(row.bound),
                    fmt6(row.measured),
                    fmt6(row.slack)
                );
            }
        }
        if !check.note.is_empty() {
            let _ = writeln!(out, "\n{}", check.note);
        }
    }
    if !report.files.is_empty() {
        out.push_str("\n## Artifacts\n\n");
        for f in &report.files {
            let _ = writeln!(out, "- `{f}`");
        }
    }
    out
}

struct Pipeline<'a> {
    config: &'a ExperimentConfig,
    m: DiscreteManifold,
    out_dir: PathBuf,
    quiet: bool,
    traj: Option<Trajectory>,
    frames: Option<Vec<MonitorFrame>>,
    params: Option<(HarnackParams, bool)>,
    tol: Option<f64>,
    files: Vec<String>,
}

impl<'a> Pipeline<'a> {
    fn new(config: &'a ExperimentConfig, out_dir: PathBuf, quiet: bool) -> Result<Self> {
        let m = build_manifold(config.manifold.clone())?;
        fs::create_dir_all(&out_dir)?;
        Ok(Self {
            config,
            m,
            out_dir,
            quiet,
            traj: None,
            frames: None,
            params: None,
            tol: None,
            files: Vec::new(),
        })
    }

    fn say(&self, msg: &str) {
        if !self.quiet {
            println!("{msg}");
        }
    }

    fn params(&mut self) -> Result<(HarnackParams, bool)> {
        if self.params.is_none() {
            self.params = Some(self.config.resolve_params(self.m.dimension() as u32)?);
        }
        Ok(self.params.unwrap())
    }

    fn trajectory(&mut self) -> Result<&Trajectory> {
        if self.traj.is_none() {
            let seed = self.config.random_seed;
            let u0 = self.config.initial.build(&self.m, seed)?;
            self.say("integrating flow…");
            let traj = evolve(&u0, &self.m, &self.config.flow)?;
            self.write_series_csv(&traj)?;
            self.write_final_state_csv(&traj)?;
            self.traj = Some(traj);
        }
        Ok(self.traj.as_ref().unwrap())
    }

    fn frames(&mut self) -> Result<()> {
        if self.frames.is_some() {
            return Ok(());
        }
        let (params, linear) = self.params()?;
        self.trajectory()?;
        let traj = self.traj.as_ref().unwrap();
        let frames = frames_from_trajectory(traj, &self.m, &params, linear)?;
        self.frames = Some(frames);
        self.write_monitor_csv(&params, linear)?;
        Ok(())
    }

    /// 10× the measured linear-flow identity residual at this discretization.
    fn tol(&mut self) -> Result<f64> {
        if let Some(t) = self.config.tol {
            return Ok(t);
        }
        if self.tol.is_none() {
            let (params, _) = self.params()?;
            let u0 = self.m.field_from_fn(|x| 2.0 + (x[0]).sin());
            let traj = self.trajectory()?;
            let dt = traj.base_dt;
            let horizon = 20.0 * dt;
            let residual = linear_flow_residual(&self.m, &u0, dt, horizon, params.gamma)?;
            self.tol = Some(10.0 * residual);
        }
        Ok(self.tol.unwrap())
    }

    fn write_series_csv(&mut self, traj: &Trajectory) -> Result<()> {
        let mut text = String::from("t,max,min,mean,energy\n");
        for s in &traj.series {
            let _ = writeln!(text, "{},{},{},{},{}", s.t, s.max, s.min, s.mean, s.energy);
        }
        self.write_file("series.csv", &text)
    }

    fn write_final_state_csv(&mut self, traj: &Trajectory) -> Result<()> {
        let mut text = String::from("node,coordinates,value\n");
        if let Some((_, u)) = traj.snapshots.last() {
            for i in 0..u.len() {
                let pos = self
                    .m
                    .node_position(i)
                    .iter()
                    .map(|c| c.to_string())
                    .collect::<Vec<_>>()
                    .join(" ");
                let _ = writeln!(text, "{},{},{}", i, pos, u.values()[i]);
            }
        }
        self.write_file("final_state.csv", &text)
    }

    fn write_monitor_csv(&mut self, params: &HarnackParams, linear: bool) -> Result<()> {
        let traj = self.traj.as_ref().unwrap();
        let frames = self.frames.as_ref().unwrap();
        let snaps = &traj.snapshots;
        let kind = if linear { IdentityKind::Eq32 } else { IdentityKind::Eq37 };
        let mut rows = Vec::new();
        for (i, frame) in frames.iter().enumerate() {
            let window = &snaps[i..i + 3];
            let r32 = identity_residual(IdentityKind::Eq32, window, &self.m, params, linear)?;
            let r37 = if linear {
                f64::NAN
            } else {
                identity_residual(kind, window, &self.m, params, linear)?
            };
            let slack = if !linear && i + 5 <= snaps.len() && params.alpha1 > 0.0 {
                let k = self.m.ricci_lower_bound().1;
                inequality_3_11_residual(&snaps[i..i + 5], &self.m, params, k)
                    .map(|r| r.min_slack)
                    .unwrap_or(f64::NAN)
            } else {
                f64::NAN
            };
            rows.push(format!(
                "{},{},{},{},{},{},{}",
                frame.t,
                frame.sup_rho(),
                frame.inf_rho(),
                slack,
                r32,
                r37,
                frame.clamped_count()
            ));
        }
        let mut text =
            String::from("t,sup_rho,inf_rho,min_slack_3_11,residual_3_2,residual_3_7,clamped_count\n");
        for r in rows {
            let _ = writeln!(text, "{r}");
        }
        self.write_file("monitor.csv", &text)
    }

    fn write_file(&mut self, name: &str, text: &str) -> Result<()> {
        fs::write(self.out_dir.join(name), text)?;
        if !self.files.contains(&name.to_string()) {
            self.files.push(name.to_string());
        }
        Ok(())
    }

    fn run_check(&mut self, name: &str) -> Result<CheckOutcome> {
        self.say(&format!("check: {name}"));
        match name {
            "feasibility" => self.check_feasibility(),
            "blowup" => self.check_blowup(),
            "jensen" => self.check_jensen(),
            "min_tracker" => self.check_min_tracker(),
            "harnack_trend" => self.check_trend(),
            "slack" => self.check_slack(),
            "lemma_4_1" => self.check_lemma_4_1(),
            "ode_comparison" => self.check_ode_comparison(),
            "steady" => self.check_steady(),
            "scaling" => self.check_scaling(),
            _ => Err(Error::Config(format!("unknown check `{name}`"))),
        }
    }

    fn check_feasibility(&mut self) -> Result<CheckOutcome> {
        let (params, linear) = self.params()?;
        if linear {
            return Ok(CheckOutcome {
                name: "feasibility".into(),
                status: CheckStatus::Vacuous,
                rows: vec![],
                note: "linear flow: no (β, γ) constraint system to satisfy".into(),
            });
        }
        let rep = check_constraints(params.dim, params.p, params.beta, params.gamma)?;
        let rows = vec![
            ReportRow {
                quantity: "s1 = γ − max{1, β, 2 − βp}".into(),
                bound: 0.0,
                measured: rep.s1,
                slack: rep.s1,
            },
            ReportRow {
                quantity: "s2 = 8/N − γ²(p−1)/(γ−β)".into(),
                bound: 0.0,
                measured: rep.s2,
                slack: rep.s2,
            },
        ];
        Ok(CheckOutcome {
            name: "feasibility".into(),
            status: if rep.feasible { CheckStatus::Pass } else { CheckStatus::Fail },
            rows,
            note: format!(
                "(β, γ) = ({}, {}), α = {}",
                fmt6(params.beta),
                fmt6(params.gamma),
                fmt6(params.alpha)
            ),
        })
    }

    fn check_blowup(&mut self) -> Result<CheckOutcome> {
        let t_end = self.config.flow.t_end;
        let threshold = self.config.flow.blowup_threshold;
        let traj = self.trajectory()?;
        match &traj.blowup {
            Some(info) if info.detected => {
                let ts = info.t_star_estimate;
                Ok(CheckOutcome {
                    name: "blowup".into(),
                    status: if ts.is_finite() && ts > 0.0 && ts <= t_end {
                        CheckStatus::Pass
                    } else {
                        CheckStatus::Fail
                    },
                    rows: vec![ReportRow {
                        quantity: "estimated T*".into(),
                        bound: t_end,
                        measured: ts,
                        slack: t_end - ts,
                    }],
                    note: info.note.clone(),
                })
            }
            _ => Ok(CheckOutcome {
                name: "blowup".into(),
                status: CheckStatus::Fail,
                rows: vec![ReportRow {
                    quantity: "final max u".into(),
                    bound: threshold,
                    measured: traj.final_max(),
                    slack: threshold - traj.final_max(),
                }],
                note: "no blow-up detected inside the time window".into(),
            }),
        }
    }

    fn check_jensen(&mut self) -> Result<CheckOutcome> {
        let tol = self.config.tol.unwrap_or(0.02);
        let reaction = self.config.flow.reaction;
        let traj = self.trajectory()?;
        let rep = jensen_check(traj, &reaction, tol)?;
        let mut rows = vec![ReportRow {
            quantity: "min normalized Jensen defect".into(),
            bound: -tol,
            measured: rep.min_defect,
            slack: rep.min_defect + tol,
        }];
        if let Some(ts) = rep.t_star {
            rows.push(ReportRow {
                quantity: "T* vs integral bound".into(),
                bound: rep.t_bound + tol,
                measured: ts,
                slack: rep.t_bound + tol - ts,
            });
        }
        Ok(CheckOutcome {
            name: "jensen".into(),
            status: if rep.pass { CheckStatus::Pass } else { CheckStatus::Fail },
            rows,
            note: format!("integral blow-up bound T ≤ {}", fmt6(rep.t_bound)),
        })
    }

    fn check_min_tracker(&mut self) -> Result<CheckOutcome> {
        let tol = self.config.tol.unwrap_or(1e-3);
        let reaction = self.config.flow.reaction;
        let traj = self.trajectory()?;
        let rep = min_tracker_check(traj, &reaction)?;
        Ok(CheckOutcome {
            name: "min_tracker".into(),
            status: if rep.min_residual >= -tol { CheckStatus::Pass } else { CheckStatus::Fail },
            rows: vec![ReportRow {
                quantity: "min dφ/dt − f(φ), φ = min u".into(),
                bound: -tol,
                measured: rep.min_residual,
                slack: rep.min_residual + tol,
            }],
            note: String::new(),
        })
    }

    fn check_trend(&mut self) -> Result<CheckOutcome> {
        let (params, _) = self.params()?;
        self.frames()?;
        let tol = self.tol()?;
        let k = self.m.ricci_lower_bound().1;
        let blew_up = self
            .traj
            .as_ref()
            .unwrap()
            .blowup
            .as_ref()
            .map(|b| b.detected)
            .unwrap_or(false);
        let samples: Vec<(f64, f64)> = self
            .frames
            .as_ref()
            .unwrap()
            .iter()
            .map(|f| (f.t, f.sup_rho()))
            .collect();
        let rep = harnack_trend_check(&samples, params.c0, k, tol, blew_up)?;
        let status = match rep.status {
            TrendStatus::Pass => CheckStatus::Pass,
            TrendStatus::Fail => CheckStatus::Fail,
            TrendStatus::BlowupRegime => CheckStatus::Vacuous,
        };
        Ok(CheckOutcome {
            name: "harnack_trend".into(),
            status,
            rows: vec![ReportRow {
                quantity: "fitted sup ρ asymptote".into(),
                bound: rep.bound + tol,
                measured: rep.asymptote,
                slack: rep.bound + tol - rep.asymptote,
            }],
            note: match rep.status {
                TrendStatus::BlowupRegime => {
                    "flow blew up inside the window: no asymptote to fit".into()
                }
                _ => format!("shift parameter {}", fmt6(rep.shift)),
            },
        })
    }

    fn check_slack(&mut self) -> Result<CheckOutcome> {
        let (params, linear) = self.params()?;
        if linear {
            return Ok(CheckOutcome {
                name: "slack".into(),
                status: CheckStatus::Vacuous,
                rows: vec![],
                note: "pointwise slack is defined for the nonlinear monitor only".into(),
            });
        }
        self.trajectory()?;
        let tol = self.tol()?;
        let k = self.m.ricci_lower_bound().1;
        let snaps = &self.traj.as_ref().unwrap().snapshots;
        if snaps.len() < 5 {
            return Err(Error::InsufficientData(
                "slack check needs at least 5 snapshots".into(),
            ));
        }
        let mut min_slack = f64::INFINITY;
        for i in 0..=snaps.len() - 5 {
            let rep = inequality_3_11_residual(&snaps[i..i + 5], &self.m, &params, k)?;
            min_slack = min_slack.min(rep.min_slack);
        }
        Ok(CheckOutcome {
            name: "slack".into(),
            status: if min_slack >= -tol { CheckStatus::Pass } else { CheckStatus::Fail },
            rows: vec![ReportRow {
                quantity: "min pointwise slack of the ρ evolution inequality".into(),
                bound: -tol,
                measured: min_slack,
                slack: min_slack + tol,
            }],
            note: format!("tolerance = 10× measured linear-flow residual = {}", fmt6(tol)),
        })
    }

    fn check_lemma_4_1(&mut self) -> Result<CheckOutcome> {
        let (params, linear) = self.params()?;
        if linear {
            return Ok(CheckOutcome {
                name: "lemma_4_1".into(),
                status: CheckStatus::Vacuous,
                rows: vec![],
                note: "the Laplacian lower bound involves the nonlinear monitor".into(),
            });
        }
        self.frames()?;
        let tol = self.tol()?;
        let mut min_slack = f64::INFINITY;
        let mut points = 0usize;
        for frame in self.frames.as_ref().unwrap() {
            let rep = lemma_4_1_check(frame, &params);
            if let Some(s) = rep.min_slack {
                min_slack = min_slack.min(s);
                points += rep.points;
            }
        }
        if points == 0 {
            return Ok(CheckOutcome {
                name: "lemma_4_1".into(),
                status: CheckStatus::Vacuous,
                rows: vec![],
                note: "ρ ≤ 0 at every sampled node: the bound is vacuous here".into(),
            });
        }
        Ok(CheckOutcome {
            name: "lemma_4_1".into(),
            status: if min_slack >= -tol { CheckStatus::Pass } else { CheckStatus::Fail },
            rows: vec![ReportRow {
                quantity: "min |Δ log u|² slack at ρ > 0 nodes".into(),
                bound: -tol,
                measured: min_slack,
                slack: min_slack + tol,
            }],
            note: format!("{points} space-time points with ρ > 0"),
        })
    }

    fn check_ode_comparison(&mut self) -> Result<CheckOutcome> {
        let (params, linear) = self.params()?;
        if linear {
            return Ok(CheckOutcome {
                name: "ode_comparison".into(),
                status: CheckStatus::Vacuous,
                rows: vec![],
                note: "the u_t lower bound involves the nonlinear monitor".into(),
            });
        }
        self.frames()?;
        let tol = self.tol()?;
        let k = self.m.ricci_lower_bound().1;
        let rep = ode_comparison_check(self.frames.as_ref().unwrap(), &params, params.c0, k);
        match rep.min_slack {
            None => Ok(CheckOutcome {
                name: "ode_comparison".into(),
                status: CheckStatus::Vacuous,
                rows: vec![],
                note: "ρ > 0 at every sampled node: the bound is vacuous here".into(),
            }),
            Some(s) => Ok(CheckOutcome {
                name: "ode_comparison".into(),
                status: if s >= -tol { CheckStatus::Pass } else { CheckStatus::Fail },
                rows: vec![ReportRow {
                    quantity: "min u_t − (β/γ)u^p + (C₀K/γ)u at ρ ≤ 0 nodes".into(),
                    bound: -tol,
                    measured: s,
                    slack: s + tol,
                }],
                note: format!("{} space-time points with ρ ≤ 0", rep.points),
            }),
        }
    }

    fn check_steady(&mut self) -> Result<CheckOutcome> {
        let p = self.config.flow.reaction.p().ok_or_else(|| {
            Error::Config("steady check needs a power reaction to fix p".into())
        })?;
        let seed_field = self.config.initial.build(&self.m, self.config.random_seed)?;
        self.say("minimizing constrained energy…");
        let result = minimize_energy(&self.m, p, &seed_field, MinimizeOpts::default())?;
        let mu_ratio = result.mu.abs() / result.lambda;
        let lam_rel = (result.lambda - 2.0 * result.energy).abs() / result.lambda;
        let mut rows = vec![
            ReportRow {
                quantity: "PDE residual of rescaled profile".into(),
                bound: 5e-3,
                measured: result.pde_residual,
                slack: 5e-3 - result.pde_residual,
            },
            ReportRow {
                quantity: "|μ|/λ".into(),
                bound: 1e-6,
                measured: mu_ratio,
                slack: 1e-6 - mu_ratio,
            },
            ReportRow {
                quantity: "|λ − 2E|/λ".into(),
                bound: 1e-8,
                measured: lam_rel,
                slack: 1e-8 - lam_rel,
            },
        ];
        let mut note = format!(
            "E = {}, λ = {}, {} iterations",
            fmt6(result.energy),
            fmt6(result.lambda),
            result.iterations
        );
        if let Ok(oracle) = oracle_1d(&self.m, p, 1) {
            if let Ok(dist) = aligned_distance_1d(&result.rescaled, &oracle.profile, &self.m) {
                rows.push(ReportRow {
                    quantity: "L² distance to 1-D reference profile".into(),
                    bound: 1e-2,
                    measured: dist,
                    slack: 1e-2 - dist,
                });
                note.push_str(&format!(", reference amplitude {}", fmt6(oracle.amplitude)));
            }
        }
        let ok = result.converged && rows.iter().all(|r| r.slack >= 0.0);
        let mut text = String::from("node,coordinates,value\n");
        for i in 0..result.rescaled.len() {
            let pos = self
                .m
                .node_position(i)
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            let _ = writeln!(text, "{},{},{}", i, pos, result.rescaled.values()[i]);
        }
        self.write_file("steady_state.csv", &text)?;
        Ok(CheckOutcome {
            name: "steady".into(),
            status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
            rows,
            note,
        })
    }

    fn check_scaling(&mut self) -> Result<CheckOutcome> {
        let p = self.config.flow.reaction.p().ok_or_else(|| {
            Error::Config("scaling check needs a power reaction to fix p".into())
        })?;
        let mut worst: f64 = 0.0;
        for k in [0.5, 1.0, 2.0] {
            worst = worst.max(scaling_symmetry_check(p, k)?);
        }
        Ok(CheckOutcome {
            name: "scaling".into(),
            status: if worst <= 1e-12 { CheckStatus::Pass } else { CheckStatus::Fail },
            rows: vec![ReportRow {
                quantity: "max scaling-family residual, k ∈ {1/2, 1, 2}".into(),
                bound: 1e-12,
                measured: worst,
                slack: 1e-12 - worst,
            }],
            note: String::new(),
        })
    }
}

/// Runs the requested checks and writes all artifacts. Returns the report
/// and the process exit code (0 all pass, 1 any check failed).
pub fn run(
    config: &ExperimentConfig,
    out_override: Option<&Path>,
    quiet: bool,
) -> Result<(RunReport, i32)> {
    run_filtered(config, out_override, quiet, None)
}

fn run_filtered(
    config: &ExperimentConfig,
    out_override: Option<&Path>,
    quiet: bool,
    filter: Option<&[&str]>,
) -> Result<(RunReport, i32)> {
    config.validate()?;
    let out_dir = out_override.map(Path::to_path_buf).unwrap_or_else(|| config.output_dir.clone());
    let mut pipeline = Pipeline::new(config, out_dir, quiet)?;

    // execute in registry order so reports are deterministic regardless of
    // the order checks were listed in
    let mut outcomes = Vec::new();
    for &name in CHECK_REGISTRY {
        let requested = config.checks.iter().any(|c| c == name);
        let in_filter = filter.map(|f| f.contains(&name)).unwrap_or(true);
        if requested && in_filter {
            outcomes.push(pipeline.run_check(name)?);
        }
    }

    let mut report = RunReport { checks: outcomes, files: Vec::new() };
    let json = serde_json::to_string_pretty(&report)?;
    pipeline.write_file("report.json", &json)?;
    report.files = pipeline.files.clone();
    let md = report_render(&report);
    fs::write(pipeline.out_dir.join("report.md"), &md)?;
    report.files.push("report.md".into());

    if !quiet {
        for check in &report.checks {
            println!("{}: {}", check.name, check.status.label());
        }
    }
    let exit = if report.all_pass() { 0 } else { 1 };
    Ok((report, exit))
}

#[derive(Debug, Parser)]
#[command(name = "harnack-lab", version, about = "Harnack-inequality and blow-up laboratory for semilinear heat flows on discrete manifolds")]
struct CliArgs {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// Path to the experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory override.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress progress output.
    #[arg(long)]
    quiet: bool,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.random_seed = seed;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the critical-exponent table for a dimension.
    Exponents {
        #[arg(long)]
        dim: u32,
    },
    /// Check or search (β, γ) feasibility for a given (N, p).
    Feasible {
        #[arg(long)]
        dim: u32,
        #[arg(long)]
        p: f64,
        /// Brute-force region scan instead of the closed-form recipe.
        #[arg(long)]
        scan: bool,
    },
    /// Bisect the feasibility threshold in p; prints the trace as CSV.
    Threshold {
        #[arg(long)]
        dim: u32,
        #[arg(long, default_value_t = 0.01)]
        tol: f64,
    },
    /// Integrate the flow and run the time-series checks only.
    Evolve(ConfigArgs),
    /// Run the pointwise-monitor checks only.
    Harnack(ConfigArgs),
    /// Run the steady-state check only.
    Steady(ConfigArgs),
    /// Full pipeline: every check requested in the config.
    Run(ConfigArgs),
    /// Measure the linear-flow identity residual and the implied tolerance
    /// at a given discretization.
    Calibrate {
        #[arg(long, default_value_t = 1)]
        dim: u32,
        #[arg(long, default_value_t = 64)]
        nodes: usize,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 2.0)]
        gamma: f64,
    },
}

pub fn run_main() -> Result<i32> {
    let args = CliArgs::parse();
    dispatch(args)
}

fn dispatch(args: CliArgs) -> Result<i32> {
    match args.command {
        Command::Exponents { dim } => {
            let table = exponent_table(dim)?;
            println!("{table}");
            println!("{}", serde_json::to_string_pretty(&table)?);
            Ok(0)
        }
        Command::Feasible { dim, p, scan } => {
            let report = if scan {
                feasible_scan(dim, p, SearchBox::default())?
            } else {
                match find_params(dim, p) {
                    Ok(params) => {
                        println!("{}", serde_json::to_string_pretty(&params)?);
                        check_constraints(dim, p, params.beta, params.gamma)?
                    }
                    Err(Error::Infeasible { dim, p, threshold }) => {
                        println!(
                            "{{\"feasible\": false, \"threshold\": {threshold}}}"
                        );
                        return Err(Error::Infeasible { dim, p, threshold });
                    }
                    Err(e) => return Err(e),
                }
            };
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(if report.feasible { 0 } else { 1 })
        }
        Command::Threshold { dim, tol } => {
            let trace = threshold_trace(dim, tol)?;
            println!("iter,p,feasible");
            for (i, (p, feasible)) in trace.steps.iter().enumerate() {
                println!("{i},{p},{feasible}");
            }
            println!("threshold,{},", trace.threshold);
            Ok(0)
        }
        Command::Evolve(cargs) => {
            let cfg = cargs.load()?;
            let filter = ["feasibility", "blowup", "jensen", "min_tracker", "scaling"];
            let (_, exit) =
                run_filtered(&cfg, cargs.out.as_deref(), cargs.quiet, Some(&filter))?;
            Ok(exit)
        }
        Command::Harnack(cargs) => {
            let cfg = cargs.load()?;
            let filter = ["harnack_trend", "slack", "lemma_4_1", "ode_comparison"];
            let (_, exit) =
                run_filtered(&cfg, cargs.out.as_deref(), cargs.quiet, Some(&filter))?;
            Ok(exit)
        }
        Command::Steady(cargs) => {
            let cfg = cargs.load()?;
            let (_, exit) =
                run_filtered(&cfg, cargs.out.as_deref(), cargs.quiet, Some(&["steady"]))?;
            Ok(exit)
        }
        Command::Run(cargs) => {
            let cfg = cargs.load()?;
            let (_, exit) = run(&cfg, cargs.out.as_deref(), cargs.quiet)?;
            Ok(exit)
        }
        Command::Calibrate { dim, nodes, dt, gamma } => {
            let spec = ManifoldSpec::FlatTorus {
                grid: crate::geometry::GridSpec {
                    dimension: dim as usize,
                    nodes_per_axis: nodes,
                    period_lengths: vec![2.0 * std::f64::consts::PI; dim as usize],
                },
            };
            let m = build_manifold(spec)?;
            let u0 = m.field_from_fn(|x| 2.0 + x[0].sin());
            let residual = linear_flow_residual(&m, &u0, dt, 20.0 * dt, gamma)?;
            println!("linear-flow identity residual: {}", fmt6(residual));
            println!("implied slack tolerance (10×): {}", fmt6(10.0 * residual));
            Ok(0)
        }
    }
}
