//! Batch command-line driver: `covep <command> --config c.json [--out dir]`.
//!
//! Every command reads one JSON config, validates it fully, computes, and
//! writes CSV/JSON artifacts into the output directory. Identical config and
//! seed produce bitwise-identical outputs.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{ConnectionSection, HarmonicSection, RunConfig};
use crate::error::{Error, Result};
use crate::fields::{
    curvature, reduce_jet, variation_delta_sigma, AlgebraOneForm, ConnectionForm,
    CoalgebraVectorField, GroupField,
};
use crate::fourier;
use crate::grid::{Boundary, MetricGrid};
use crate::io;
use crate::lie::{pairing, GroupElement, GroupModel, GroupName};
use crate::reduction::{
    coadjoint_term, covariant_divergence, ep_residual, ReducedLagrangian,
};
use crate::solvers::{
    classical_ep_step, harmonic_descent, verify_equivalence, DescentOptions, RigidBodyState,
};

#[derive(Debug, Parser)]
#[command(name = "covep", about = "covariant Euler-Poincare reduction toolkit", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON run configuration
    #[arg(long)]
    pub config: PathBuf,
    /// output directory for CSV/JSON artifacts
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// overrides the seed from the config
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Project a group-valued section to its reduced jet
    Reduce(CommonArgs),
    /// Run the invariant verification suite
    Verify(CommonArgs),
    /// Integrate the classical Euler-Poincare ODE
    RigidBody(CommonArgs),
    /// Minimize the reduced harmonic energy
    Harmonic(CommonArgs),
}

/// Entry point used by main; the Ok value is the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Reduce(a) => cmd_reduce(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::RigidBody(a) => cmd_rigid_body(&a),
        Command::Harmonic(a) => cmd_harmonic(&a),
    }
}

fn load(args: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = RunConfig::from_path(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    std::fs::create_dir_all(&args.out)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", args.out.display())))?;
    Ok(cfg)
}

fn connection_for(
    cfg: &RunConfig,
    grid: &MetricGrid,
    m: usize,
) -> (ConnectionForm, Option<u64>) {
    match &cfg.connection {
        ConnectionSection::Zero => (AlgebraOneForm::zeros(grid, m), None),
        ConnectionSection::Fourier { amplitude, seed } => {
            let mut rng = fourier::rng_from_seed(*seed);
            (fourier::smooth_connection_form(grid, m, &mut rng, *amplitude), Some(*seed))
        }
    }
}

// ---------------------------------------------------------------- reduce

#[derive(Serialize)]
struct ReduceSummary {
    command: &'static str,
    seed: u64,
    input: String,
    nodes: usize,
    max_curvature: f64,
    l2_curvature: f64,
    sigma_file: String,
}

fn cmd_reduce(args: &CommonArgs) -> Result<i32> {
    let cfg = load(args)?;
    let section = cfg
        .reduce
        .as_ref()
        .ok_or_else(|| Error::Config("missing \"reduce\" section in config".into()))?
        .clone();
    let model = cfg.build_group()?;
    let grid = cfg.build_grid()?;
    let s = io::read_group_field(Path::new(&section.input), &model, &grid)?;
    let sigma = reduce_jet(&model, &grid, &s)?;
    let f = curvature(&model, &grid, &sigma);

    // L2 norm sqrt(integral of sum_{i<j,gamma} F^2 against the volume)
    let mut density = vec![0.0; grid.node_count];
    for lin in 0..grid.node_count {
        for i in 0..grid.n {
            for j in (i + 1)..grid.n {
                for gamma in 0..model.m {
                    let v = f.get(lin, i, j, gamma);
                    density[lin] += v * v;
                }
            }
        }
    }
    let l2 = grid.integrate(&density).max(0.0).sqrt();

    let sigma_path = args.out.join("sigma.csv");
    io::write_one_form(&sigma_path, &grid, &sigma)?;
    io::write_summary(
        &args.out.join("summary.json"),
        &ReduceSummary {
            command: "reduce",
            seed: cfg.seed,
            input: section.input.clone(),
            nodes: grid.node_count,
            max_curvature: f.max_abs(),
            l2_curvature: l2,
            sigma_file: sigma_path.display().to_string(),
        },
    )?;
    Ok(0)
}

// ---------------------------------------------------------------- verify

#[derive(Serialize)]
struct CheckReport {
    name: &'static str,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    measured: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
}

impl CheckReport {
    fn judged(name: &'static str, measured: f64, tolerance: f64) -> Self {
        CheckReport {
            name,
            status: if measured <= tolerance { "pass" } else { "fail" },
            measured: Some(measured),
            tolerance: Some(tolerance),
            reason: None,
        }
    }

    fn skipped(name: &'static str, reason: &str) -> Self {
        CheckReport {
            name,
            status: "skipped",
            measured: None,
            tolerance: None,
            reason: Some(reason.to_string()),
        }
    }
}

#[derive(Serialize)]
struct VerifySummary {
    command: &'static str,
    seed: u64,
    connection_seed: Option<u64>,
    group: String,
    shape: Vec<usize>,
    boundary: Boundary,
    tolerance_scale: f64,
    trials: usize,
    ladder: Vec<usize>,
    checks: Vec<CheckReport>,
    passed: bool,
}

/// True when h([a,b],c) + h(b,[a,c]) = 0 on the basis.
fn h_is_bi_invariant(model: &GroupModel) -> bool {
    let m = model.m;
    let e = |k: usize| -> Vec<f64> {
        let mut v = vec![0.0; m];
        v[k] = 1.0;
        v
    };
    let mut max_defect: f64 = 0.0;
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                let ab = model.bracket(&e(a), &e(b));
                let ac = model.bracket(&e(a), &e(c));
                let mut d = 0.0;
                for k in 0..m {
                    d += ab[k] * model.h[(k, c)] + ac[k] * model.h[(b, k)];
                }
                max_defect = max_defect.max(d.abs());
            }
        }
    }
    max_defect < 1e-12
}

/// The flatness-ladder section of the verification suite: a product of two
/// one-axis exponentials, whose reduced jet is flat in the continuum.
fn ladder_section(model: &GroupModel, grid: &MetricGrid) -> GroupField {
    use std::f64::consts::PI;
    GroupField::from_fn(grid, |_, mi| {
        let x = grid.coord(mi);
        let mut a = vec![0.0; model.m];
        a[0] = 0.5 * (2.0 * PI * x[0] / grid.extent[0]).sin();
        let mut b = vec![0.0; model.m];
        b[model.m.min(2) - 1] = 0.4 * (2.0 * PI * x[1] / grid.extent[1]).cos();
        model.mul(&model.exp(&a), &model.exp(&b))
    })
}

fn cmd_verify(args: &CommonArgs) -> Result<i32> {
    let cfg = load(args)?;
    let vs = cfg.verify.clone().unwrap_or_default();
    let scale = vs.tolerance_scale;
    let model = cfg.build_group()?;
    let grid = cfg.build_grid()?;
    let m = model.m;
    let h = grid.spacing.iter().cloned().fold(0.0, f64::max);
    let lag = ReducedLagrangian::Harmonic;
    let (a, connection_seed) = match &cfg.connection {
        // the independence check needs a nonzero connection; derive one
        // from the run seed when the config keeps the trivial one
        ConnectionSection::Zero => {
            let seed = cfg.seed.wrapping_add(1);
            let mut rng = fourier::rng_from_seed(seed);
            (fourier::smooth_connection_form(&grid, m, &mut rng, 0.2), Some(seed))
        }
        _ => connection_for(&cfg, &grid, m),
    };
    let a0 = AlgebraOneForm::zeros(&grid, m);

    let mut rng = fourier::rng_from_seed(cfg.seed);
    let s = fourier::smooth_group_field(&model, &grid, &mut rng, 0.3);
    let eta = fourier::smooth_algebra_field(&grid, m, &mut rng, 0.2, false);
    let sigma = reduce_jet(&model, &grid, &s)?;

    let mut checks = Vec::new();

    // connection independence of residual and variation
    {
        let r0 = ep_residual(&model, &grid, &lag, &sigma, &a0);
        let ra = ep_residual(&model, &grid, &lag, &sigma, &a);
        let dr = r0
            .data
            .iter()
            .zip(&ra.data)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        let v0 = variation_delta_sigma(&model, &grid, &sigma, &eta, &a0);
        let va = variation_delta_sigma(&model, &grid, &sigma, &eta, &a);
        let dv = v0
            .data
            .iter()
            .zip(&va.data)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        checks.push(CheckReport::judged("connection_independence", dr.max(dv), 1e-12 * scale));
    }

    // variational identity oracle vs residual pairing
    if grid.boundary == Boundary::Dirichlet {
        checks.push(CheckReport::skipped(
            "variational_identity",
            "Dirichlet grid: boundary terms of the discrete integration by parts \
             are not controlled for non-compactly-supported variations",
        ));
    } else {
        let rep = verify_equivalence(&model, &grid, &lag, &s, vs.trials, cfg.seed)?;
        let tol = (20.0 * h * h).max(1e-3) * scale;
        checks.push(CheckReport::judged("variational_identity", rep.max_relative_error, tol));
    }

    // flatness convergence over the grid ladder
    if grid.n < 2 {
        checks.push(CheckReport::skipped(
            "flatness_convergence",
            "curvature vanishes identically on one-dimensional grids",
        ));
    } else {
        let mut norms = Vec::new();
        for &nodes in &vs.ladder {
            let shape = vec![nodes; grid.n];
            let g = cfg.build_grid_with_shape(&shape)?;
            let s_l = ladder_section(&model, &g);
            let f = curvature(&model, &g, &reduce_jet(&model, &g, &s_l)?);
            norms.push(f.max_abs());
        }
        if norms.iter().all(|&v| v < 1e-13) {
            checks.push(CheckReport {
                name: "flatness_convergence",
                status: "pass",
                measured: Some(0.0),
                tolerance: Some(0.3 * scale),
                reason: Some("discrete curvature identically zero (abelian jet)".into()),
            });
        } else {
            let last = norms.len() - 1;
            let order = (norms[last - 1] / norms[last]).log2();
            checks.push(CheckReport::judged(
                "flatness_convergence",
                (order - 2.0).abs(),
                0.3 * scale,
            ));
        }
    }

    // Lemma 3.1 i): additivity of the covariant divergence
    let mk_mu = |amp: f64, rng: &mut rand_chacha::ChaCha8Rng| -> CoalgebraVectorField {
        let form = fourier::smooth_connection_form(&grid, m, rng, amp);
        CoalgebraVectorField { m, n: grid.n, data: form.data }
    };
    let mu1 = mk_mu(0.05, &mut rng);
    let mu2 = mk_mu(0.03, &mut rng);
    {
        let sum = CoalgebraVectorField {
            m,
            n: grid.n,
            data: mu1.data.iter().zip(&mu2.data).map(|(x, y)| x + y).collect(),
        };
        let lhs = covariant_divergence(&model, &grid, &sum, &a);
        let d1 = covariant_divergence(&model, &grid, &mu1, &a);
        let d2 = covariant_divergence(&model, &grid, &mu2, &a);
        let err = lhs
            .data
            .iter()
            .zip(d1.data.iter().zip(&d2.data))
            .map(|(s, (x, y))| (s - x - y).abs())
            .fold(0.0, f64::max);
        checks.push(CheckReport::judged("lemma31_additivity", err, 1e-12 * scale));
    }

    // Lemma 3.1 ii): Leibniz rule with a smooth scalar factor
    {
        let f = fourier::smooth_scalar_field(&grid, &mut rng, 0.05, false);
        let fmu = CoalgebraVectorField {
            m,
            n: grid.n,
            data: (0..grid.node_count)
                .flat_map(|lin| {
                    mu1.data[lin * grid.n * m..(lin + 1) * grid.n * m]
                        .iter()
                        .map(|v| v * f[lin])
                        .collect::<Vec<_>>()
                })
                .collect(),
        };
        let lhs = covariant_divergence(&model, &grid, &fmu, &a);
        let d1 = covariant_divergence(&model, &grid, &mu1, &a);
        let df: Vec<Vec<f64>> = (0..grid.n).map(|i| grid.partial_derivative(&f, i)).collect();
        let mut err = 0.0f64;
        for lin in 0..grid.node_count {
            for b in 0..m {
                let mut rhs = f[lin] * d1.data[lin * m + b];
                for i in 0..grid.n {
                    rhs += mu1.data[(lin * grid.n + i) * m + b] * df[i][lin];
                }
                err = err.max((lhs.data[lin * m + b] - rhs).abs());
            }
        }
        checks.push(CheckReport::judged("lemma31_leibniz", err, 10.0 * h * h * scale));
    }

    // Lemma 3.1 iii): product/Stokes rule under the volume integral
    if grid.boundary == Boundary::Dirichlet {
        checks.push(CheckReport::skipped(
            "lemma31_stokes",
            "Dirichlet grid: the Stokes identity needs a closed manifold or \
             compact support",
        ));
    } else {
        let d1 = covariant_divergence(&model, &grid, &mu1, &a);
        let deta = crate::fields::covariant_derivative_ad(&model, &grid, &eta, &a);
        let mut field = vec![0.0; grid.node_count];
        for lin in 0..grid.node_count {
            field[lin] = pairing(d1.at(lin), eta.at(lin));
            for i in 0..grid.n {
                field[lin] += pairing(mu1.at(lin, i), deta.at(lin, i));
            }
        }
        checks.push(CheckReport::judged(
            "lemma31_stokes",
            grid.integrate(&field).abs(),
            10.0 * h * h * scale,
        ));
    }

    // bi-invariant metrics kill the coadjoint term pointwise
    if h_is_bi_invariant(&model) {
        let c = coadjoint_term(&model, &grid, &lag, &sigma, &a0);
        checks.push(CheckReport::judged("coadjoint_biinvariant", c.max_abs(), 1e-12 * scale));
    } else {
        checks.push(CheckReport::skipped(
            "coadjoint_biinvariant",
            "algebra metric is not bi-invariant; the coadjoint term need not vanish",
        ));
    }

    let passed = checks.iter().all(|c| c.status != "fail");
    io::write_summary(
        &args.out.join("summary.json"),
        &VerifySummary {
            command: "verify",
            seed: cfg.seed,
            connection_seed,
            group: cfg.group.name.clone(),
            shape: grid.shape.clone(),
            boundary: grid.boundary,
            tolerance_scale: scale,
            trials: vs.trials,
            ladder: vs.ladder.clone(),
            checks,
            passed,
        },
    )?;
    Ok(if passed { 0 } else { 1 })
}

// ---------------------------------------------------------------- rigid body

#[derive(Serialize)]
struct RigidBodySummary {
    command: &'static str,
    seed: u64,
    steps: usize,
    t_end: f64,
    mu_final: Vec<f64>,
    casimir_drift: f64,
    energy_drift: f64,
    trajectory_file: String,
}

fn cmd_rigid_body(args: &CommonArgs) -> Result<i32> {
    let cfg = load(args)?;
    let section = cfg
        .rigid_body
        .as_ref()
        .ok_or_else(|| Error::Config("missing \"rigid_body\" section in config".into()))?
        .clone();
    let model = cfg.build_group()?;
    if section.mu0.len() != model.m {
        return Err(Error::Config(format!(
            "rigid_body.mu0 has {} entries, algebra dimension is {}",
            section.mu0.len(),
            model.m
        )));
    }
    let mut state = RigidBodyState::new(section.mu0.clone());
    let c0 = state.casimir();
    let e0 = state.energy(&model);
    let steps = (section.t_end / section.dt).round() as usize;
    let mut rows = Vec::new();
    let mut push = |state: &RigidBodyState| {
        rows.push(io::TrajectoryRow {
            t: state.t,
            mu: state.mu.clone(),
            casimir_drift: (state.casimir() - c0).abs(),
            energy_drift: (state.energy(&model) - e0).abs(),
        });
    };
    push(&state);
    for k in 1..=steps {
        state = classical_ep_step(&model, &state, section.dt);
        if k % section.output_every == 0 || k == steps {
            push(&state);
        }
    }
    let traj_path = args.out.join("trajectory.csv");
    io::write_trajectory(&traj_path, model.m, &rows)?;
    io::write_summary(
        &args.out.join("summary.json"),
        &RigidBodySummary {
            command: "rigid_body",
            seed: cfg.seed,
            steps,
            t_end: state.t,
            mu_final: state.mu.clone(),
            casimir_drift: (state.casimir() - c0).abs(),
            energy_drift: (state.energy(&model) - e0).abs(),
            trajectory_file: traj_path.display().to_string(),
        },
    )?;
    Ok(0)
}

// ---------------------------------------------------------------- harmonic

#[derive(Serialize)]
struct HarmonicSummary {
    command: &'static str,
    seed: u64,
    problem: String,
    converged: bool,
    stalled: bool,
    iterations: usize,
    energy: f64,
    grad_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_interior_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error_tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    path_error: Option<f64>,
    solution_file: String,
    trace_file: String,
}

fn square_target(x: &[f64]) -> f64 {
    x[0] * x[0] - x[1] * x[1]
}

fn cmd_harmonic(args: &CommonArgs) -> Result<i32> {
    let cfg = load(args)?;
    let section = cfg
        .harmonic
        .as_ref()
        .ok_or_else(|| Error::Config("missing \"harmonic\" section in config".into()))?
        .clone();
    let model = cfg.build_group()?;
    let grid = cfg.build_grid()?;
    let lag = ReducedLagrangian::Harmonic;

    let (s0, problem_name) = match &section {
        HarmonicSection::AbelianSquare => {
            if model.name != GroupName::AbelianR || model.m != 1 {
                return Err(Error::Config(
                    "harmonic.problem abelian_square needs group abelian_r:1".into(),
                ));
            }
            if grid.n != 2 || grid.boundary != Boundary::Dirichlet {
                return Err(Error::Config(
                    "harmonic.problem abelian_square needs a 2-D Dirichlet grid".into(),
                ));
            }
            let s0 = GroupField::from_fn(&grid, |_, mi| {
                let x = grid.coord(mi);
                let v = if grid.is_boundary(mi) { square_target(&x) } else { 0.0 };
                GroupElement::Abelian(vec![v])
            });
            (s0, "abelian_square")
        }
        HarmonicSection::Geodesic { xi0 } => {
            if grid.n != 1 || grid.boundary != Boundary::Dirichlet {
                return Err(Error::Config(
                    "harmonic.problem geodesic needs a 1-D Dirichlet grid".into(),
                ));
            }
            if xi0.len() != model.m {
                return Err(Error::Config(format!(
                    "harmonic.xi0 has {} entries, algebra dimension is {}",
                    xi0.len(),
                    model.m
                )));
            }
            // straight-line interpolation plus a seeded interior perturbation
            // so the run exercises the solver
            let mut rng = fourier::rng_from_seed(cfg.seed);
            let bump = fourier::smooth_algebra_field(&grid, model.m, &mut rng, 0.2, true);
            let l = grid.extent[0];
            let s0 = GroupField::from_fn(&grid, |lin, mi| {
                let t = grid.coord(mi)[0] / l;
                let base: Vec<f64> = xi0.iter().map(|v| t * v).collect();
                model.mul(&model.exp(bump.at(lin)), &model.exp(&base))
            });
            (s0, "geodesic")
        }
        HarmonicSection::Random { amplitude } => {
            if grid.boundary != Boundary::Periodic {
                return Err(Error::Config("harmonic.problem random needs a periodic grid".into()));
            }
            let mut rng = fourier::rng_from_seed(cfg.seed);
            let s0 = fourier::smooth_group_field(&model, &grid, &mut rng, *amplitude);
            (s0, "random")
        }
    };

    let opts = DescentOptions {
        max_iter: cfg.solver.max_iter,
        grad_tol: cfg.solver.grad_tol,
        tau0: cfg.solver.tau0,
    };
    let out = harmonic_descent(&model, &grid, &lag, s0, &opts)?;

    // problem-specific error reports
    let mut max_interior_error = None;
    let mut error_tolerance = None;
    let mut p_error = None;
    let mut path_error = None;
    match &section {
        HarmonicSection::AbelianSquare => {
            let h = grid.spacing.iter().cloned().fold(0.0, f64::max);
            let mut err: f64 = 0.0;
            grid.for_each_node(|lin, mi| {
                let x = grid.coord(mi);
                if let GroupElement::Abelian(v) = &out.s.values[lin] {
                    err = err.max((v[0] - square_target(&x)).abs());
                }
            });
            max_interior_error = Some(err);
            error_tolerance = Some(5.0 * h * h);
        }
        HarmonicSection::Geodesic { xi0 } => {
            let sigma = reduce_jet(&model, &grid, &out.s)?;
            let mut perr: f64 = 0.0;
            let mut serr: f64 = 0.0;
            let l = grid.extent[0];
            grid.for_each_node(|lin, mi| {
                let p = sigma.at(lin, 0);
                for (alpha, v) in xi0.iter().enumerate() {
                    perr = perr.max((p[alpha] * l - v).abs());
                }
                let t = grid.coord(mi)[0] / l;
                let base: Vec<f64> = xi0.iter().map(|v| t * v).collect();
                let diff = model.mul(&out.s.values[lin], &model.inv(&model.exp(&base)));
                if let Ok(log) = model.log(&diff) {
                    serr = serr.max(log.iter().map(|v| v.abs()).fold(0.0, f64::max));
                } else {
                    serr = f64::INFINITY;
                }
            });
            p_error = Some(perr);
            path_error = Some(serr);
        }
        HarmonicSection::Random { .. } => {}
    }

    let solution_path = args.out.join("solution.csv");
    let trace_path = args.out.join("trace.csv");
    io::write_group_field(&solution_path, &model, &grid, &out.s)?;
    io::write_trace(&trace_path, &out.trace)?;
    io::write_summary(
        &args.out.join("summary.json"),
        &HarmonicSummary {
            command: "harmonic",
            seed: cfg.seed,
            problem: problem_name.to_string(),
            converged: out.converged,
            stalled: out.stalled,
            iterations: out.iterations,
            energy: out.energy,
            grad_norm: out.grad_norm,
            max_interior_error,
            error_tolerance,
            p_error,
            path_error,
            solution_file: solution_path.display().to_string(),
            trace_file: trace_path.display().to_string(),
        },
    )?;
    Ok(0)
}
