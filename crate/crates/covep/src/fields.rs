//! Fields over the grid valued in G, its algebra and the dual algebra, and
//! the reduced calculus on them: right logarithmic derivative of a section,
//! curvature, covariant derivatives relative to a reference connection, the
//! variation formula and reconstruction of a section from a flat reduced
//! field.

use crate::error::{Error, Result};
use crate::grid::{Boundary, MetricGrid};
use crate::lie::{GroupElement, GroupModel};

/// Section of the trivial bundle: one group element per node.
#[derive(Clone, Debug)]
pub struct GroupField {
    pub values: Vec<GroupElement>,
}

impl GroupField {
    pub fn constant(grid: &MetricGrid, g: GroupElement) -> Self {
        GroupField { values: vec![g; grid.node_count] }
    }

    pub fn from_fn<F: FnMut(usize, &[usize]) -> GroupElement>(grid: &MetricGrid, mut f: F) -> Self {
        let mut values = Vec::with_capacity(grid.node_count);
        grid.for_each_node(|lin, mi| values.push(f(lin, mi)));
        GroupField { values }
    }

    /// Right translation by a constant group element.
    pub fn translated(&self, model: &GroupModel, g0: &GroupElement) -> Self {
        GroupField {
            values: self.values.iter().map(|v| model.mul(v, g0)).collect(),
        }
    }
}

/// Algebra-valued scalar field xi(x), node-major with m components per node.
#[derive(Clone, Debug)]
pub struct AlgebraField {
    pub m: usize,
    pub data: Vec<f64>,
}

impl AlgebraField {
    pub fn zeros(grid: &MetricGrid, m: usize) -> Self {
        AlgebraField { m, data: vec![0.0; grid.node_count * m] }
    }

    #[inline]
    pub fn at(&self, node: usize) -> &[f64] {
        &self.data[node * self.m..(node + 1) * self.m]
    }
}

/// Algebra-valued 1-form p^alpha_i(x): layout node-major, then axis, then
/// algebra component.
#[derive(Clone, Debug)]
pub struct AlgebraOneForm {
    pub m: usize,
    pub n: usize,
    pub data: Vec<f64>,
}

/// Local connection 1-form of a reference connection; all-zero is the
/// trivial connection. Same storage as a reduced section.
pub type ConnectionForm = AlgebraOneForm;

impl AlgebraOneForm {
    pub fn zeros(grid: &MetricGrid, m: usize) -> Self {
        AlgebraOneForm { m, n: grid.n, data: vec![0.0; grid.node_count * grid.n * m] }
    }

    #[inline]
    pub fn at(&self, node: usize, axis: usize) -> &[f64] {
        let o = (node * self.n + axis) * self.m;
        &self.data[o..o + self.m]
    }

    #[inline]
    pub fn at_mut(&mut self, node: usize, axis: usize) -> &mut [f64] {
        let o = (node * self.n + axis) * self.m;
        &mut self.data[o..o + self.m]
    }

    /// Scalar view of one (axis, component) slice, one value per node.
    pub fn component(&self, axis: usize, alpha: usize) -> Vec<f64> {
        let nodes = self.data.len() / (self.n * self.m);
        (0..nodes)
            .map(|l| self.data[(l * self.n + axis) * self.m + alpha])
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }
}

/// Section of TM x (adP)*: mu^{i beta}(x), node-major, axis, dual component.
#[derive(Clone, Debug)]
pub struct CoalgebraVectorField {
    pub m: usize,
    pub n: usize,
    pub data: Vec<f64>,
}

impl CoalgebraVectorField {
    pub fn zeros(grid: &MetricGrid, m: usize) -> Self {
        CoalgebraVectorField { m, n: grid.n, data: vec![0.0; grid.node_count * grid.n * m] }
    }

    #[inline]
    pub fn at(&self, node: usize, axis: usize) -> &[f64] {
        let o = (node * self.n + axis) * self.m;
        &self.data[o..o + self.m]
    }
}

/// Dual-algebra-valued scalar field (e.g. an Euler-Poincare residual).
#[derive(Clone, Debug)]
pub struct CoalgebraField {
    pub m: usize,
    pub data: Vec<f64>,
}

impl CoalgebraField {
    pub fn zeros(grid: &MetricGrid, m: usize) -> Self {
        CoalgebraField { m, data: vec![0.0; grid.node_count * m] }
    }

    #[inline]
    pub fn at(&self, node: usize) -> &[f64] {
        &self.data[node * self.m..(node + 1) * self.m]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }
}

/// Curvature 2-form F^gamma_{ij}; only i < j pairs are stored, the full
/// antisymmetric tensor is expanded on demand through `get`.
#[derive(Clone, Debug)]
pub struct CurvatureField {
    pub m: usize,
    pub n: usize,
    pub pairs: Vec<(usize, usize)>,
    pub data: Vec<f64>,
}

impl CurvatureField {
    pub fn get(&self, node: usize, i: usize, j: usize, gamma: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let (a, b, sign) = if i < j { (i, j, 1.0) } else { (j, i, -1.0) };
        let p = self.pairs.iter().position(|&(x, y)| (x, y) == (a, b)).expect("pair");
        sign * self.data[(node * self.pairs.len() + p) * self.m + gamma]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }
}

fn log_difference(
    model: &GroupModel,
    s: &GroupField,
    from: usize,
    to: usize,
    node_label: &[usize],
    axis: usize,
) -> Result<Vec<f64>> {
    let rel = model.mul(&s.values[to], &model.inv(&s.values[from]));
    model.log(&rel).map_err(|e| {
        Error::LogDomain(format!(
            "neighbor pair outside log domain at node {node_label:?}, axis {axis}: {e}"
        ))
    })
}

/// Right logarithmic derivative of a section: the quotient of its first jet.
///
/// p_i(x) = [log(s(x+h e_i) s(x)^-1) - log(s(x-h e_i) s(x)^-1)] / 2h, with
/// one-sided log-differences at Dirichlet boundaries. Exact on one-parameter
/// subgroups, second order otherwise.
pub fn reduce_jet(model: &GroupModel, grid: &MetricGrid, s: &GroupField) -> Result<AlgebraOneForm> {
    assert_eq!(s.values.len(), grid.node_count, "reduce_jet: field shape mismatch");
    let m = model.m;
    let n = grid.n;
    let mut out = AlgebraOneForm::zeros(grid, m);
    let mut mi = vec![0usize; n];
    for lin in 0..grid.node_count {
        grid.multi_index(lin, &mut mi);
        for axis in 0..n {
            let h = grid.spacing[axis];
            let stride = grid_stride(grid, axis);
            let size = grid.shape[axis];
            let i = mi[axis];
            let p: Vec<f64> = match grid.boundary {
                Boundary::Periodic => {
                    let up = if i + 1 == size { lin + stride - stride * size } else { lin + stride };
                    let dn = if i == 0 { lin + stride * (size - 1) } else { lin - stride };
                    let lu = log_difference(model, s, lin, up, &mi, axis)?;
                    let ld = log_difference(model, s, lin, dn, &mi, axis)?;
                    lu.iter().zip(&ld).map(|(u, d)| (u - d) / (2.0 * h)).collect()
                }
                Boundary::Dirichlet => {
                    if i == 0 {
                        let l1 = log_difference(model, s, lin, lin + stride, &mi, axis)?;
                        let l2 = log_difference(model, s, lin, lin + 2 * stride, &mi, axis)?;
                        l1.iter().zip(&l2).map(|(a, b)| (4.0 * a - b) / (2.0 * h)).collect()
                    } else if i + 1 == size {
                        let l1 = log_difference(model, s, lin, lin - stride, &mi, axis)?;
                        let l2 = log_difference(model, s, lin, lin - 2 * stride, &mi, axis)?;
                        l1.iter().zip(&l2).map(|(a, b)| (-4.0 * a + b) / (2.0 * h)).collect()
                    } else {
                        let lu = log_difference(model, s, lin, lin + stride, &mi, axis)?;
                        let ld = log_difference(model, s, lin, lin - stride, &mi, axis)?;
                        lu.iter().zip(&ld).map(|(u, d)| (u - d) / (2.0 * h)).collect()
                    }
                }
            };
            out.at_mut(lin, axis).copy_from_slice(&p);
        }
    }
    Ok(out)
}

fn grid_stride(grid: &MetricGrid, axis: usize) -> usize {
    grid.shape[axis + 1..].iter().product()
}

/// Curvature of a reduced section:
/// F^gamma_{ij} = d_j p^gamma_i - d_i p^gamma_j + c^gamma_{ab} p^a_i p^b_j.
pub fn curvature(model: &GroupModel, grid: &MetricGrid, sigma: &AlgebraOneForm) -> CurvatureField {
    let m = model.m;
    let n = grid.n;
    assert_eq!(sigma.data.len(), grid.node_count * n * m, "curvature: shape mismatch");
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            pairs.push((i, j));
        }
    }
    let np = pairs.len();
    let mut data = vec![0.0; grid.node_count * np * m];
    // derivative terms
    for (p, &(i, j)) in pairs.iter().enumerate() {
        for alpha in 0..m {
            let pi = sigma.component(i, alpha);
            let pj = sigma.component(j, alpha);
            let dj_pi = grid.partial_derivative(&pi, j);
            let di_pj = grid.partial_derivative(&pj, i);
            for lin in 0..grid.node_count {
                data[(lin * np + p) * m + alpha] = dj_pi[lin] - di_pj[lin];
            }
        }
    }
    // bracket term
    let mut br = vec![0.0; m];
    for lin in 0..grid.node_count {
        for (p, &(i, j)) in pairs.iter().enumerate() {
            model.bracket_into(sigma.at(lin, i), sigma.at(lin, j), &mut br);
            for gamma in 0..m {
                data[(lin * np + p) * m + gamma] += br[gamma];
            }
        }
    }
    CurvatureField { m, n, pairs, data }
}

/// Covariant derivative on the adjoint bundle:
/// (nabla eta)_i = d_i xi + [A_i, xi].
pub fn covariant_derivative_ad(
    model: &GroupModel,
    grid: &MetricGrid,
    eta: &AlgebraField,
    a: &ConnectionForm,
) -> AlgebraOneForm {
    let m = model.m;
    let n = grid.n;
    assert_eq!(eta.data.len(), grid.node_count * m, "covariant_derivative_ad: shape mismatch");
    let mut out = AlgebraOneForm::zeros(grid, m);
    for axis in 0..n {
        for alpha in 0..m {
            let comp: Vec<f64> = (0..grid.node_count).map(|l| eta.data[l * m + alpha]).collect();
            let d = grid.partial_derivative(&comp, axis);
            for lin in 0..grid.node_count {
                out.data[(lin * n + axis) * m + alpha] = d[lin];
            }
        }
    }
    let mut br = vec![0.0; m];
    for lin in 0..grid.node_count {
        for axis in 0..n {
            model.bracket_into(a.at(lin, axis), eta.at(lin), &mut br);
            for alpha in 0..m {
                out.data[(lin * n + axis) * m + alpha] += br[alpha];
            }
        }
    }
    out
}

/// Dual covariant derivative on (adP)*:
/// (nabla~ nu)_i = d_i psi - coad(A_i, psi).
pub fn covariant_derivative_coad(
    model: &GroupModel,
    grid: &MetricGrid,
    nu: &CoalgebraField,
    a: &ConnectionForm,
) -> CoalgebraVectorField {
    let m = model.m;
    let n = grid.n;
    assert_eq!(nu.data.len(), grid.node_count * m, "covariant_derivative_coad: shape mismatch");
    let mut out = CoalgebraVectorField::zeros(grid, m);
    for axis in 0..n {
        for beta in 0..m {
            let comp: Vec<f64> = (0..grid.node_count).map(|l| nu.data[l * m + beta]).collect();
            let d = grid.partial_derivative(&comp, axis);
            for lin in 0..grid.node_count {
                out.data[(lin * n + axis) * m + beta] = d[lin];
            }
        }
    }
    let mut c = vec![0.0; m];
    for lin in 0..grid.node_count {
        for axis in 0..n {
            model.coad_into(a.at(lin, axis), nu.at(lin), &mut c);
            for beta in 0..m {
                out.data[(lin * n + axis) * m + beta] -= c[beta];
            }
        }
    }
    out
}

/// Variation of the reduced section induced by a vertical flow with
/// generator eta: (delta sigma)_i = d_i xi + [A_i, xi] - [p_i + A_i, xi].
/// The A terms cancel algebraically, making the result connection
/// independent node by node.
pub fn variation_delta_sigma(
    model: &GroupModel,
    grid: &MetricGrid,
    sigma: &AlgebraOneForm,
    eta: &AlgebraField,
    a: &ConnectionForm,
) -> AlgebraOneForm {
    let m = model.m;
    let n = grid.n;
    let mut out = covariant_derivative_ad(model, grid, eta, a);
    let mut sh = vec![0.0; m];
    let mut br = vec![0.0; m];
    for lin in 0..grid.node_count {
        for axis in 0..n {
            let pa = sigma.at(lin, axis);
            let aa = a.at(lin, axis);
            for alpha in 0..m {
                sh[alpha] = pa[alpha] + aa[alpha];
            }
            model.bracket_into(&sh, eta.at(lin), &mut br);
            for alpha in 0..m {
                out.data[(lin * n + axis) * m + alpha] -= br[alpha];
            }
        }
    }
    out
}

/// Reduced section measured relative to the reference connection:
/// sigma^H = sigma + A in the trivial-connection chart.
pub fn sigma_h(sigma: &AlgebraOneForm, a: &ConnectionForm) -> AlgebraOneForm {
    assert_eq!(sigma.data.len(), a.data.len(), "sigma_h: shape mismatch");
    AlgebraOneForm {
        m: sigma.m,
        n: sigma.n,
        data: sigma.data.iter().zip(&a.data).map(|(p, q)| p + q).collect(),
    }
}

/// Integrate a flat reduced section back to a group-valued section along a
/// deterministic axis-ordered spanning tree from `base_node`, with midpoint
/// exponential steps. Refuses input whose curvature exceeds `flatness_tol`
/// (reconstruction is path dependent otherwise).
pub fn reconstruct_section(
    model: &GroupModel,
    grid: &MetricGrid,
    sigma: &AlgebraOneForm,
    base_value: &GroupElement,
    base_node: &[usize],
    flatness_tol: f64,
) -> Result<GroupField> {
    let max_curv = curvature(model, grid, sigma).max_abs();
    if max_curv > flatness_tol {
        return Err(Error::NotFlat { max_curvature: max_curv, tol: flatness_tol });
    }
    let n = grid.n;
    let m = model.m;
    let mut values: Vec<Option<GroupElement>> = vec![None; grid.node_count];
    let base_lin = grid.lin_index(base_node);
    values[base_lin] = Some(base_value.clone());

    // Stage d extends the block filled by axes 0..d along axis d, so every
    // node is reached by adjusting axis 0 first, then axis 1, and so on.
    let mut mi = vec![0usize; n];
    for d in 0..n {
        let stride = grid_stride(grid, d);
        for lin in 0..grid.node_count {
            if values[lin].is_none() {
                continue;
            }
            grid.multi_index(lin, &mut mi);
            if mi[d] != base_node[d] {
                continue;
            }
            let h = grid.spacing[d];
            // upward sweep
            let mut cur = lin;
            for step in mi[d]..grid.shape[d] - 1 {
                let _ = step;
                let next = cur + stride;
                let mut mid = vec![0.0; m];
                for alpha in 0..m {
                    mid[alpha] = 0.5 * h * (sigma.at(cur, d)[alpha] + sigma.at(next, d)[alpha]);
                }
                let g = model.mul(&model.exp(&mid), values[cur].as_ref().unwrap());
                values[next] = Some(g);
                cur = next;
            }
            // downward sweep
            let mut cur = lin;
            for step in (1..=mi[d]).rev() {
                let _ = step;
                let next = cur - stride;
                let mut mid = vec![0.0; m];
                for alpha in 0..m {
                    mid[alpha] = -0.5 * h * (sigma.at(cur, d)[alpha] + sigma.at(next, d)[alpha]);
                }
                let g = model.mul(&model.exp(&mid), values[cur].as_ref().unwrap());
                values[next] = Some(g);
                cur = next;
            }
        }
    }
    Ok(GroupField { values: values.into_iter().map(|v| v.expect("grid connected")).collect() })
}
