//! Reduced Lagrangians on the bundle of connections, the fiber derivative
//! delta l / delta sigma, the covariant divergence, the Euler-Poincare
//! residual and the independent energy-gradient oracle.

use crate::error::Result;
use crate::fields::{
    reduce_jet, sigma_h, AlgebraField, AlgebraOneForm, CoalgebraField, CoalgebraVectorField,
    ConnectionForm, GroupField,
};
use crate::grid::MetricGrid;
use crate::lie::{pairing, GroupModel};

pub type DensityFn = Box<dyn Fn(usize, &[f64]) -> f64 + Send + Sync>;
pub type FiberFn = Box<dyn Fn(usize, &[f64]) -> Vec<f64> + Send + Sync>;

/// A first-order reduced Lagrangian density: a pointwise function of the
/// node and the fiber value p (layout axis-major, m components per axis).
pub enum ReducedLagrangian {
    /// l(sigma) = (1/2) g^{ij} p^a_i p^b_j h_{ab}, quadratic in p.
    Harmonic,
    /// User density with an optional analytic fiber derivative; without one
    /// the fiber derivative falls back to central differences in the fiber.
    Custom { density: DensityFn, fiber: Option<FiberFn> },
}

impl ReducedLagrangian {
    pub fn density_at(
        &self,
        model: &GroupModel,
        grid: &MetricGrid,
        node: usize,
        p: &[f64],
    ) -> f64 {
        match self {
            ReducedLagrangian::Harmonic => {
                let n = grid.n;
                let m = model.m;
                let ginv = &grid.g_inv[node * n * n..(node + 1) * n * n];
                let mut acc = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        let gij = ginv[i * n + j];
                        if gij == 0.0 {
                            continue;
                        }
                        for a in 0..m {
                            for b in 0..m {
                                acc += gij * p[i * m + a] * p[j * m + b] * model.h[(a, b)];
                            }
                        }
                    }
                }
                0.5 * acc
            }
            ReducedLagrangian::Custom { density, .. } => density(node, p),
        }
    }
}

/// Total reduced action: integral of l(sigma) over the base.
pub fn reduced_energy(
    model: &GroupModel,
    grid: &MetricGrid,
    lag: &ReducedLagrangian,
    sigma: &AlgebraOneForm,
) -> f64 {
    let nm = grid.n * model.m;
    assert_eq!(sigma.data.len(), grid.node_count * nm, "reduced_energy: shape mismatch");
    let density: Vec<f64> = (0..grid.node_count)
        .map(|lin| lag.density_at(model, grid, lin, &sigma.data[lin * nm..(lin + 1) * nm]))
        .collect();
    grid.integrate(&density)
}

/// Fiber derivative delta l / delta sigma, a section of TM x (adP)*.
///
/// Harmonic closed form: mu^{j b} = g^{ij} p^a_i h_{ab}. Custom densities
/// without an analytic derivative use central fiber differences, step 1e-6.
pub fn fiber_derivative(
    model: &GroupModel,
    grid: &MetricGrid,
    lag: &ReducedLagrangian,
    sigma: &AlgebraOneForm,
) -> CoalgebraVectorField {
    let n = grid.n;
    let m = model.m;
    let nm = n * m;
    let mut out = CoalgebraVectorField::zeros(grid, m);
    match lag {
        ReducedLagrangian::Harmonic => {
            for lin in 0..grid.node_count {
                let ginv = &grid.g_inv[lin * n * n..(lin + 1) * n * n];
                let p = &sigma.data[lin * nm..(lin + 1) * nm];
                for j in 0..n {
                    for b in 0..m {
                        let mut acc = 0.0;
                        for i in 0..n {
                            let gij = ginv[i * n + j];
                            for a in 0..m {
                                acc += gij * p[i * m + a] * model.h[(a, b)];
                            }
                        }
                        out.data[(lin * n + j) * m + b] = acc;
                    }
                }
            }
        }
        ReducedLagrangian::Custom { density, fiber } => {
            for lin in 0..grid.node_count {
                let p = &sigma.data[lin * nm..(lin + 1) * nm];
                if let Some(fiber) = fiber {
                    out.data[lin * nm..(lin + 1) * nm].copy_from_slice(&fiber(lin, p));
                } else {
                    let step = 1e-6;
                    let mut q = p.to_vec();
                    for k in 0..nm {
                        let saved = q[k];
                        q[k] = saved + step;
                        let up = density(lin, &q);
                        q[k] = saved - step;
                        let dn = density(lin, &q);
                        q[k] = saved;
                        out.data[lin * nm + k] = (up - dn) / (2.0 * step);
                    }
                }
            }
        }
    }
    out
}

/// Covariant divergence of Lemma form:
/// (div^H mu)_b = riemannian div of mu^{. b} - sum_i coad(A_i, mu^{i .})_b.
/// With the trivial connection it is the componentwise Riemannian divergence.
pub fn covariant_divergence(
    model: &GroupModel,
    grid: &MetricGrid,
    mu: &CoalgebraVectorField,
    a: &ConnectionForm,
) -> CoalgebraField {
    let n = grid.n;
    let m = model.m;
    assert_eq!(mu.data.len(), grid.node_count * n * m, "covariant_divergence: shape mismatch");
    let mut out = CoalgebraField::zeros(grid, m);
    let mut x = vec![0.0; grid.node_count * n];
    for b in 0..m {
        for lin in 0..grid.node_count {
            for i in 0..n {
                x[lin * n + i] = mu.data[(lin * n + i) * m + b];
            }
        }
        let div = grid.riemannian_divergence(&x);
        for lin in 0..grid.node_count {
            out.data[lin * m + b] = div[lin];
        }
    }
    let mut c = vec![0.0; m];
    for lin in 0..grid.node_count {
        for i in 0..n {
            model.coad_into(a.at(lin, i), mu.at(lin, i), &mut c);
            for b in 0..m {
                out.data[lin * m + b] -= c[b];
            }
        }
    }
    out
}

/// Euler-Poincare residual of Theorem form, moved to one side:
/// R = div^H(delta l / delta sigma) + sum_i coad(sigma^H_i, mu^{i .}).
/// Vanishes on reduced critical sections; connection independent.
pub fn ep_residual(
    model: &GroupModel,
    grid: &MetricGrid,
    lag: &ReducedLagrangian,
    sigma: &AlgebraOneForm,
    a: &ConnectionForm,
) -> CoalgebraField {
    let mu = fiber_derivative(model, grid, lag, sigma);
    let mut out = covariant_divergence(model, grid, &mu, a);
    let sh = sigma_h(sigma, a);
    let m = model.m;
    let mut c = vec![0.0; m];
    for lin in 0..grid.node_count {
        for i in 0..grid.n {
            model.coad_into(sh.at(lin, i), mu.at(lin, i), &mut c);
            for b in 0..m {
                out.data[lin * m + b] += c[b];
            }
        }
    }
    out
}

/// The coadjoint part of the residual alone (diagnostic; vanishes pointwise
/// for bi-invariant algebra metrics).
pub fn coadjoint_term(
    model: &GroupModel,
    grid: &MetricGrid,
    lag: &ReducedLagrangian,
    sigma: &AlgebraOneForm,
    a: &ConnectionForm,
) -> CoalgebraField {
    let mu = fiber_derivative(model, grid, lag, sigma);
    let sh = sigma_h(sigma, a);
    let m = model.m;
    let mut out = CoalgebraField::zeros(grid, m);
    let mut c = vec![0.0; m];
    for lin in 0..grid.node_count {
        for i in 0..grid.n {
            model.coad_into(sh.at(lin, i), mu.at(lin, i), &mut c);
            for b in 0..m {
                out.data[lin * m + b] += c[b];
            }
        }
    }
    out
}

/// Integral of the dual pairing <r, eta> against the Riemannian volume.
pub fn pair_integral(
    grid: &MetricGrid,
    r: &CoalgebraField,
    eta: &AlgebraField,
) -> f64 {
    assert_eq!(r.m, eta.m, "pair_integral: algebra dimension mismatch");
    let f: Vec<f64> = (0..grid.node_count)
        .map(|lin| pairing(r.at(lin), eta.at(lin)))
        .collect();
    grid.integrate(&f)
}

/// Symmetric-difference derivative of the unreduced energy along the
/// vertical flow s_eps(x) = exp(eps xi(x)) s(x). Independent of the
/// Euler-Poincare code path; the discrete Euler-Lagrange oracle.
pub fn energy_gradient_oracle(
    model: &GroupModel,
    grid: &MetricGrid,
    lag: &ReducedLagrangian,
    s: &GroupField,
    eta: &AlgebraField,
    eps: f64,
) -> Result<f64> {
    assert!(
        (1e-7..=1e-3).contains(&eps),
        "energy_gradient_oracle: eps {eps} outside [1e-7, 1e-3]"
    );
    let flow = |sign: f64| -> Result<f64> {
        let s_eps = GroupField {
            values: (0..grid.node_count)
                .map(|lin| {
                    let xi: Vec<f64> = eta.at(lin).iter().map(|v| v * eps * sign).collect();
                    model.mul(&model.exp(&xi), &s.values[lin])
                })
                .collect(),
        };
        let sigma = reduce_jet(model, grid, &s_eps)?;
        Ok(reduced_energy(model, grid, lag, &sigma))
    };
    Ok((flow(1.0)? - flow(-1.0)?) / (2.0 * eps))
}
