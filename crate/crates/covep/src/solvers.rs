//! Desk-scale solvers: fixed-step RK4 for the classical Euler-Poincare ODE
//! and Armijo-backtracked Riemannian gradient descent for harmonic maps
//! into the structure group.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{reduce_jet, AlgebraField, GroupField};
use crate::fourier;
use crate::grid::{Boundary, MetricGrid};
use crate::lie::GroupModel;
use crate::reduction::{
    energy_gradient_oracle, ep_residual, fiber_derivative, pair_integral, reduced_energy,
    ReducedLagrangian,
};

/// State of the reduced rigid-body ODE mu_dot = -coad(sharp_h(mu), mu).
/// The inertia tensor is the algebra metric h of the group model.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidBodyState {
    pub t: f64,
    pub mu: Vec<f64>,
}

impl RigidBodyState {
    pub fn new(mu: Vec<f64>) -> Self {
        RigidBodyState { t: 0.0, mu }
    }

    /// Casimir ||mu||_2 (conserved for epsilon structure constants).
    pub fn casimir(&self) -> f64 {
        self.mu.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Kinetic energy (1/2)<sharp_h(mu), mu>.
    pub fn energy(&self, model: &GroupModel) -> f64 {
        0.5 * crate::lie::pairing(&self.mu, &model.sharp(&self.mu))
    }
}

fn rigid_body_rhs(model: &GroupModel, mu: &[f64]) -> Vec<f64> {
    let xi = model.sharp(mu);
    model.coad(&xi, mu).iter().map(|v| -v).collect()
}

/// One classical RK4 step of the Euler-Poincare ODE.
pub fn classical_ep_step(model: &GroupModel, state: &RigidBodyState, dt: f64) -> RigidBodyState {
    assert!(dt > 0.0, "classical_ep_step: dt must be positive");
    let m = state.mu.len();
    let k1 = rigid_body_rhs(model, &state.mu);
    let stage = |k: &[f64], c: f64| -> Vec<f64> {
        (0..m).map(|i| state.mu[i] + c * dt * k[i]).collect()
    };
    let k2 = rigid_body_rhs(model, &stage(&k1, 0.5));
    let k3 = rigid_body_rhs(model, &stage(&k2, 0.5));
    let k4 = rigid_body_rhs(model, &stage(&k3, 1.0));
    let mu = (0..m)
        .map(|i| state.mu[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    RigidBodyState { t: state.t + dt, mu }
}

#[derive(Debug, Clone, Serialize)]
pub struct DescentOptions {
    pub max_iter: usize,
    pub grad_tol: f64,
    pub tau0: f64,
}

impl Default for DescentOptions {
    fn default() -> Self {
        DescentOptions { max_iter: 10_000, grad_tol: 1e-6, tau0: 0.1 }
    }
}

const BACKTRACK: f64 = 0.5;
const ARMIJO_C: f64 = 1e-4;
const TAU_MIN: f64 = 1e-14;

#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub tau: f64,
}

#[derive(Debug)]
pub struct DescentState {
    pub iterations: usize,
    pub s: GroupField,
    pub energy: f64,
    pub grad_norm: f64,
    pub tau: f64,
    pub converged: bool,
    pub stalled: bool,
    pub trace: Vec<TraceRow>,
}

/// Per-node first variation of the reduced energy under the vertical flow
/// s -> exp(eps eta) s, assembled as the exact adjoint of the discrete
/// stencils: dE/d_eps = sum_z <grad(z), eta(z)>. In the interior this is
/// -w(z) sqrt(g) times the Euler-Poincare residual (the variational
/// identity); near Dirichlet boundaries the adjoint of the one-sided
/// stencils and trapezoid weights replaces the central divergence, so the
/// direction stays a descent direction all the way to the stencil's own
/// critical point.
fn descent_gradient(
    model: &GroupModel,
    grid: &MetricGrid,
    lag: &ReducedLagrangian,
    sigma: &crate::fields::AlgebraOneForm,
) -> AlgebraField {
    let m = model.m;
    let mu = fiber_derivative(model, grid, lag, sigma);
    let mut grad = AlgebraField::zeros(grid, m);
    let mut c = vec![0.0; m];
    grid.for_each_node(|ylin, ymi| {
        let wy = grid.quad_weight(ymi) * grid.sqrt_det_g[ylin];
        for i in 0..grid.n {
            let mu_yi = mu.at(ylin, i);
            // delta p_i = D_i eta - [p_i, eta]; scatter the transpose of D_i
            for (zlin, coeff) in grid.derivative_stencil(ylin, ymi, i) {
                for b in 0..m {
                    grad.data[zlin * m + b] += wy * coeff * mu_yi[b];
                }
            }
            model.coad_into(sigma.at(ylin, i), mu_yi, &mut c);
            for b in 0..m {
                grad.data[ylin * m + b] -= wy * c[b];
            }
        }
    });
    grad
}

/// Gradient descent for the reduced energy over group-valued fields.
///
/// The descent direction at each node is rho = sharp_h(R) with R the
/// Euler-Poincare residual of reduce_jet(s): by the variational identity,
/// dE/d_eps along exp(eps rho) s is -<R, rho> integrated, and the flow
/// drives the residual to zero while staying in the smooth (alias-free)
/// part of the discrete phase space. The solver runs in two phases:
///
/// 1. Armijo-backtracked line search (factor 0.5, constant 1e-4, growth 2
///    after acceptance) on the reduced energy, using the true directional
///    derivative from descent_gradient. On periodic grids this carries the
///    iterate all the way to the critical section.
/// 2. On Dirichlet grids the one-sided boundary closure makes the last
///    stretch of the path toward R = 0 non-monotone in the wide-stencil
///    discrete energy, so once the line search can make no monotone
///    progress the solver switches to a damped fixed-point iteration
///    s <- exp(tau_fix rho) s with a conservative CFL-limited step, which
///    contracts the residual to the tolerance.
///
/// Dirichlet grids hold boundary nodes fixed throughout. A stall is
/// reported when neither phase can reduce the residual further.
pub fn harmonic_descent(
    model: &GroupModel,
    grid: &MetricGrid,
    lag: &ReducedLagrangian,
    s0: GroupField,
    opts: &DescentOptions,
) -> Result<DescentState> {
    let m = model.m;
    let mut s = s0;
    let mut tau = opts.tau0;
    let mut trace = Vec::new();

    let energy_of = |s: &GroupField| -> Result<f64> {
        let sigma = reduce_jet(model, grid, s)?;
        let e = reduced_energy(model, grid, lag, &sigma);
        if !e.is_finite() {
            return Err(Error::Numeric(format!("non-finite energy {e} in descent")));
        }
        Ok(e)
    };
    // residual direction rho = sharp_h(R), its weighted norm squared, and
    // the true energy slope along it (from the adjoint of the stencils)
    let direction = |s: &GroupField| -> Result<(AlgebraField, f64, f64)> {
        let sigma = reduce_jet(model, grid, s)?;
        let a = crate::fields::AlgebraOneForm::zeros(grid, m);
        let mut r = ep_residual(model, grid, lag, &sigma, &a);
        let grad = descent_gradient(model, grid, lag, &sigma);
        if grid.boundary == Boundary::Dirichlet {
            grid.for_each_node(|lin, mi| {
                if grid.is_boundary(mi) {
                    for b in 0..m {
                        r.data[lin * m + b] = 0.0;
                    }
                }
            });
        }
        let mut rho = AlgebraField::zeros(grid, m);
        for lin in 0..grid.node_count {
            let sharp = model.sharp(r.at(lin));
            rho.data[lin * m..(lin + 1) * m].copy_from_slice(&sharp);
        }
        let gg = pair_integral(grid, &r, &rho);
        let slope: f64 = (0..grid.node_count)
            .map(|lin| crate::lie::pairing(grad.at(lin), rho.at(lin)))
            .sum();
        Ok((rho, gg, slope))
    };
    let step = |s: &GroupField, rho: &AlgebraField, tau: f64| -> GroupField {
        GroupField {
            values: (0..grid.node_count)
                .map(|lin| {
                    let d: Vec<f64> = rho.at(lin).iter().map(|v| tau * v).collect();
                    model.mul(&model.exp(&d), &s.values[lin])
                })
                .collect(),
        }
    };

    let mut energy = energy_of(&s)?;
    let mut iterations = 0;
    let mut converged = false;
    let mut stalled = false;
    let mut grad_norm;
    let mut armijo = true; // phase 1 flag

    // conservative explicit step bound for the fixed-point phase:
    // tau <= 0.2 / sum_i max_x g^ii(x) / h_i^2
    let mut lam_max: f64 = 0.0;
    for lin in 0..grid.node_count {
        let ginv = &grid.g_inv[lin * grid.n * grid.n..(lin + 1) * grid.n * grid.n];
        let lam: f64 = (0..grid.n)
            .map(|i| ginv[i * grid.n + i] / (grid.spacing[i] * grid.spacing[i]))
            .sum();
        lam_max = lam_max.max(lam);
    }
    let mut tau_fix = 0.2 / lam_max;
    let mut best_norm = f64::INFINITY;
    let mut checkpoint_norm = f64::INFINITY;

    loop {
        let (rho, gg, slope) = direction(&s)?;
        grad_norm = gg.max(0.0).sqrt();
        trace.push(TraceRow { iteration: iterations, energy, grad_norm, tau: if armijo { tau } else { tau_fix } });

        if grad_norm <= opts.grad_tol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }

        if armijo && slope < 0.0 {
            // phase 1: monotone line search on the energy
            let mut accepted = false;
            while tau >= TAU_MIN {
                let candidate = step(&s, &rho, tau);
                match energy_of(&candidate) {
                    // strict decrease so that a rounding-level plateau ends
                    // the phase instead of spinning in place
                    Ok(e_new) if e_new < energy + ARMIJO_C * tau * slope => {
                        s = candidate;
                        energy = e_new;
                        accepted = true;
                        break;
                    }
                    Ok(_) => tau *= BACKTRACK,
                    // a step that leaves the log domain is treated as too long
                    Err(Error::LogDomain(_)) => tau *= BACKTRACK,
                    Err(e) => return Err(e),
                }
            }
            if accepted {
                tau = (tau * 2.0).min(1e6);
                iterations += 1;
                continue;
            }
            armijo = false; // line search exhausted; fall through to phase 2
        } else if armijo {
            armijo = false; // residual direction no longer descends the energy
        }

        // phase 2: damped fixed-point contraction of the residual
        if grad_norm < best_norm {
            best_norm = grad_norm;
        }
        if iterations % 256 == 0 {
            if best_norm > 0.99 * checkpoint_norm {
                stalled = true; // residual plateau: no contraction left
                break;
            }
            checkpoint_norm = best_norm;
        }
        if !grad_norm.is_finite() || grad_norm > 1e3 * best_norm.max(1.0) {
            return Err(Error::Numeric(format!(
                "residual iteration diverged: |R| = {grad_norm:.3e}"
            )));
        }
        let candidate = step(&s, &rho, tau_fix);
        match energy_of(&candidate) {
            Ok(e_new) => {
                s = candidate;
                energy = e_new;
            }
            Err(Error::LogDomain(_)) => {
                tau_fix *= BACKTRACK;
                if tau_fix < TAU_MIN {
                    stalled = true;
                    break;
                }
            }
            Err(e) => return Err(e),
        }
        iterations += 1;
    }

    Ok(DescentState { iterations, s, energy, grad_norm, tau, converged, stalled, trace })
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub seed: u64,
    pub trials: usize,
    pub eps: f64,
    pub relative_errors: Vec<f64>,
    pub max_relative_error: f64,
}

/// Batch check of the variational identity: for `trials` seeded random
/// smooth variations eta, compare the finite-difference energy derivative
/// along exp(eps eta) s against -integral <R, eta>, where R is the
/// Euler-Poincare residual. Errors are relative when the pairing is O(1)
/// and absolute when it is small.
pub fn verify_equivalence(
    model: &GroupModel,
    grid: &MetricGrid,
    lag: &ReducedLagrangian,
    s: &GroupField,
    trials: usize,
    seed: u64,
) -> Result<EquivalenceReport> {
    assert!(trials >= 1, "verify_equivalence: trials must be >= 1");
    let eps = 1e-5;
    let sigma = reduce_jet(model, grid, s)?;
    let a = crate::fields::AlgebraOneForm::zeros(grid, model.m);
    let r = ep_residual(model, grid, lag, &sigma, &a);

    let mut rng = fourier::rng_from_seed(seed);
    let vanish = grid.boundary == Boundary::Dirichlet;
    let mut relative_errors = Vec::with_capacity(trials);
    for _ in 0..trials {
        let eta = fourier::smooth_algebra_field(grid, model.m, &mut rng, 0.2, vanish);
        let oracle = energy_gradient_oracle(model, grid, lag, s, &eta, eps)?;
        let residual_pairing = -pair_integral(grid, &r, &eta);
        let err = (oracle - residual_pairing).abs() / residual_pairing.abs().max(1.0);
        relative_errors.push(err);
    }
    let max_relative_error = relative_errors.iter().cloned().fold(0.0, f64::max);
    Ok(EquivalenceReport { seed, trials, eps, relative_errors, max_relative_error })
}

/// Momentum map of the converged section; exposed for fixed-point checks.
pub fn residual_and_momentum(
    model: &GroupModel,
    grid: &MetricGrid,
    lag: &ReducedLagrangian,
    s: &GroupField,
) -> Result<(crate::fields::CoalgebraField, crate::fields::CoalgebraVectorField)> {
    let sigma = reduce_jet(model, grid, s)?;
    let a = crate::fields::AlgebraOneForm::zeros(grid, model.m);
    let r = ep_residual(model, grid, lag, &sigma, &a);
    let mu = fiber_derivative(model, grid, lag, &sigma);
    Ok((r, mu))
}
