//! Discretized Riemannian base manifold: uniform lattice, metric tensor
//! field, Christoffel symbols, second-order finite differences, divergence
//! and quadrature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Dirichlet,
}

/// Analytic metric family. Christoffels come from the analytic derivative
/// closure when one exists and fall back to central differences of g.
#[derive(Clone, Debug)]
pub enum MetricFamily {
    /// g = identity.
    Flat,
    /// Diagonal 2-D metric g_11 = a + b sin(2 pi x^2 / L_2), g_22 = 1.
    DiagPeriodic { a: f64, b: f64 },
    /// Per-node metric table, row-major n x n per node; FD Christoffels.
    Table(Vec<f64>),
}

#[derive(Clone, Debug)]
pub struct MetricGrid {
    pub n: usize,
    pub shape: Vec<usize>,
    pub extent: Vec<f64>,
    pub spacing: Vec<f64>,
    pub boundary: Boundary,
    pub node_count: usize,
    strides: Vec<usize>,
    /// g_ij per node, index node*n*n + i*n + j.
    pub g: Vec<f64>,
    pub g_inv: Vec<f64>,
    pub sqrt_det_g: Vec<f64>,
    /// Gamma^k_{ij} per node, index node*n^3 + k*n*n + i*n + j.
    pub christoffel: Vec<f64>,
}

impl MetricGrid {
    pub fn build(
        shape: &[usize],
        extent: &[f64],
        boundary: Boundary,
        family: &MetricFamily,
    ) -> Result<Self> {
        let n = shape.len();
        if n == 0 || n > 3 {
            return Err(Error::GridConstruction(format!(
                "base dimension must be 1, 2 or 3, got {n}"
            )));
        }
        if extent.len() != n {
            return Err(Error::GridConstruction("extent length does not match shape".into()));
        }
        if shape.iter().any(|&s| s < 3) {
            return Err(Error::GridConstruction("each axis needs at least 3 nodes".into()));
        }
        if extent.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::GridConstruction("extents must be positive".into()));
        }
        let spacing: Vec<f64> = shape
            .iter()
            .zip(extent)
            .map(|(&s, &l)| match boundary {
                Boundary::Periodic => l / s as f64,
                Boundary::Dirichlet => l / (s - 1) as f64,
            })
            .collect();
        let node_count: usize = shape.iter().product();
        let mut strides = vec![1usize; n];
        for i in (0..n.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * shape[i + 1];
        }
        let mut grid = MetricGrid {
            n,
            shape: shape.to_vec(),
            extent: extent.to_vec(),
            spacing,
            boundary,
            node_count,
            strides,
            g: vec![0.0; node_count * n * n],
            g_inv: vec![0.0; node_count * n * n],
            sqrt_det_g: vec![0.0; node_count],
            christoffel: vec![0.0; node_count * n * n * n],
        };
        grid.fill_metric(family)?;
        grid.fill_christoffel(family);
        Ok(grid)
    }

    pub fn flat(shape: &[usize], extent: &[f64], boundary: Boundary) -> Result<Self> {
        Self::build(shape, extent, boundary, &MetricFamily::Flat)
    }

    /// Unit flat torus with the same number of nodes on every axis.
    pub fn unit_torus(n: usize, nodes: usize) -> Self {
        Self::flat(&vec![nodes; n], &vec![1.0; n], Boundary::Periodic).expect("unit torus")
    }

    #[inline]
    pub fn lin_index(&self, mi: &[usize]) -> usize {
        mi.iter().zip(&self.strides).map(|(&i, &s)| i * s).sum()
    }

    #[inline]
    pub fn multi_index(&self, mut lin: usize, out: &mut [usize]) {
        for i in 0..self.n {
            out[i] = lin / self.strides[i];
            lin %= self.strides[i];
        }
    }

    /// Physical coordinates of a lattice node.
    pub fn coord(&self, mi: &[usize]) -> Vec<f64> {
        mi.iter().zip(&self.spacing).map(|(&i, &h)| i as f64 * h).collect()
    }

    /// Call f(linear index, multi index) for every node, in linear order.
    pub fn for_each_node<F: FnMut(usize, &[usize])>(&self, mut f: F) {
        let mut mi = vec![0usize; self.n];
        for lin in 0..self.node_count {
            f(lin, &mi);
            for d in (0..self.n).rev() {
                mi[d] += 1;
                if mi[d] < self.shape[d] {
                    break;
                }
                mi[d] = 0;
            }
        }
    }

    /// True if the node touches a Dirichlet boundary on any axis.
    pub fn is_boundary(&self, mi: &[usize]) -> bool {
        matches!(self.boundary, Boundary::Dirichlet)
            && mi
                .iter()
                .zip(&self.shape)
                .any(|(&i, &s)| i == 0 || i == s - 1)
    }

    fn metric_at(&self, family: &MetricFamily, x: &[f64], lin: usize) -> Vec<f64> {
        let n = self.n;
        match family {
            MetricFamily::Flat => {
                let mut g = vec![0.0; n * n];
                for i in 0..n {
                    g[i * n + i] = 1.0;
                }
                g
            }
            MetricFamily::DiagPeriodic { a, b } => {
                let mut g = vec![0.0; n * n];
                for i in 0..n {
                    g[i * n + i] = 1.0;
                }
                let x2 = if n >= 2 { x[1] } else { 0.0 };
                let l2 = if n >= 2 { self.extent[1] } else { 1.0 };
                g[0] = a + b * (2.0 * std::f64::consts::PI * x2 / l2).sin();
                g
            }
            MetricFamily::Table(t) => t[lin * n * n..(lin + 1) * n * n].to_vec(),
        }
    }

    /// Analytic d g_ij / d x^k when the family has a closed form.
    fn metric_derivative_at(&self, family: &MetricFamily, x: &[f64]) -> Option<Vec<f64>> {
        let n = self.n;
        match family {
            MetricFamily::Flat => Some(vec![0.0; n * n * n]),
            MetricFamily::DiagPeriodic { b, .. } => {
                let mut dg = vec![0.0; n * n * n]; // index (i*n + j)*n + k
                if n >= 2 {
                    let l2 = self.extent[1];
                    let w = 2.0 * std::f64::consts::PI / l2;
                    dg[1] = b * w * (w * x[1]).cos(); // d g_00 / d x^1
                }
                Some(dg)
            }
            MetricFamily::Table(_) => None,
        }
    }

    fn fill_metric(&mut self, family: &MetricFamily) -> Result<()> {
        let n = self.n;
        let mut bad: Option<Vec<usize>> = None;
        let mut work: Vec<(usize, Vec<usize>)> = Vec::with_capacity(self.node_count);
        self.for_each_node(|lin, mi| work.push((lin, mi.to_vec())));
        for (lin, mi) in work {
            let x = self.coord(&mi);
            let g = self.metric_at(family, &x, lin);
            for i in 0..n {
                for j in 0..n {
                    if (g[i * n + j] - g[j * n + i]).abs() > 1e-12 {
                        return Err(Error::GridConstruction(format!(
                            "metric not symmetric at node {mi:?}"
                        )));
                    }
                }
            }
            let (inv, det) = match invert_spd(&g, n) {
                Some(v) => v,
                None => {
                    bad = Some(mi.clone());
                    break;
                }
            };
            self.g[lin * n * n..(lin + 1) * n * n].copy_from_slice(&g);
            self.g_inv[lin * n * n..(lin + 1) * n * n].copy_from_slice(&inv);
            self.sqrt_det_g[lin] = det.sqrt();
        }
        if let Some(mi) = bad {
            return Err(Error::GridConstruction(format!(
                "metric is not positive-definite at node {mi:?}"
            )));
        }
        Ok(())
    }

    fn fill_christoffel(&mut self, family: &MetricFamily) {
        let n = self.n;
        // dg[node][(i*n+j)*n + k] = d g_ij / d x^k
        let mut dg = vec![0.0; self.node_count * n * n * n];
        let mut analytic = true;
        {
            let mut work: Vec<(usize, Vec<usize>)> = Vec::with_capacity(self.node_count);
            self.for_each_node(|lin, mi| work.push((lin, mi.to_vec())));
            for (lin, mi) in &work {
                let x = self.coord(mi);
                match self.metric_derivative_at(family, &x) {
                    Some(d) => dg[lin * n * n * n..(lin + 1) * n * n * n].copy_from_slice(&d),
                    None => {
                        analytic = false;
                        break;
                    }
                }
            }
        }
        if !analytic {
            // central differences of the stored metric components
            for i in 0..n {
                for j in 0..n {
                    let comp: Vec<f64> = (0..self.node_count)
                        .map(|lin| self.g[lin * n * n + i * n + j])
                        .collect();
                    for k in 0..n {
                        let d = self.partial_derivative(&comp, k);
                        for lin in 0..self.node_count {
                            dg[lin * n * n * n + (i * n + j) * n + k] = d[lin];
                        }
                    }
                }
            }
        }
        for lin in 0..self.node_count {
            let ginv = &self.g_inv[lin * n * n..(lin + 1) * n * n];
            let d = &dg[lin * n * n * n..(lin + 1) * n * n * n];
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let mut s = 0.0;
                        for l in 0..n {
                            s += ginv[k * n + l]
                                * (d[(j * n + l) * n + i] + d[(i * n + l) * n + j]
                                    - d[(i * n + j) * n + l]);
                        }
                        self.christoffel[lin * n * n * n + k * n * n + i * n + j] = 0.5 * s;
                    }
                }
            }
        }
    }

    /// The first-derivative stencil at one node along one axis as
    /// (neighbor linear index, coefficient) triples: central second-order
    /// stencils, one-sided second-order at Dirichlet boundaries. Unused
    /// entries carry a zero coefficient.
    pub fn derivative_stencil(&self, lin: usize, mi: &[usize], axis: usize) -> [(usize, f64); 3] {
        let h = self.spacing[axis];
        let stride = self.strides[axis];
        let size = self.shape[axis];
        let i = mi[axis];
        match self.boundary {
            Boundary::Periodic => {
                let up = if i + 1 == size { lin + stride - stride * size } else { lin + stride };
                let dn = if i == 0 { lin + stride * (size - 1) } else { lin - stride };
                [(up, 0.5 / h), (dn, -0.5 / h), (lin, 0.0)]
            }
            Boundary::Dirichlet => {
                if i == 0 {
                    [(lin, -1.5 / h), (lin + stride, 2.0 / h), (lin + 2 * stride, -0.5 / h)]
                } else if i + 1 == size {
                    [(lin, 1.5 / h), (lin - stride, -2.0 / h), (lin - 2 * stride, 0.5 / h)]
                } else {
                    [(lin + stride, 0.5 / h), (lin - stride, -0.5 / h), (lin, 0.0)]
                }
            }
        }
    }

    /// Central second-order partial derivative of a per-node scalar along
    /// one axis; one-sided second-order stencils at Dirichlet boundaries.
    pub fn partial_derivative(&self, f: &[f64], axis: usize) -> Vec<f64> {
        assert_eq!(f.len(), self.node_count, "partial_derivative: field shape mismatch");
        assert!(axis < self.n, "partial_derivative: axis out of range");
        let mut out = vec![0.0; self.node_count];
        self.for_each_node(|lin, mi| {
            out[lin] = self
                .derivative_stencil(lin, mi, axis)
                .iter()
                .map(|&(j, c)| c * f[j])
                .sum();
        });
        out
    }

    /// Riemannian divergence (1/sqrt g) d_i (sqrt g X^i) of a vector field
    /// stored node-major with n components per node.
    pub fn riemannian_divergence(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.node_count * self.n, "riemannian_divergence: shape mismatch");
        let mut out = vec![0.0; self.node_count];
        let mut tmp = vec![0.0; self.node_count];
        for i in 0..self.n {
            for lin in 0..self.node_count {
                tmp[lin] = self.sqrt_det_g[lin] * x[lin * self.n + i];
            }
            let d = self.partial_derivative(&tmp, i);
            for lin in 0..self.node_count {
                out[lin] += d[lin];
            }
        }
        for lin in 0..self.node_count {
            out[lin] /= self.sqrt_det_g[lin];
        }
        out
    }

    /// Quadrature weight of a node (trapezoid factors on Dirichlet boundaries).
    pub fn quad_weight(&self, mi: &[usize]) -> f64 {
        let mut w: f64 = self.spacing.iter().product();
        if matches!(self.boundary, Boundary::Dirichlet) {
            for (d, &i) in mi.iter().enumerate() {
                if i == 0 || i == self.shape[d] - 1 {
                    w *= 0.5;
                }
            }
        }
        w
    }

    /// Integral of a scalar field against the Riemannian volume sqrt(det g) dx.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        assert_eq!(f.len(), self.node_count, "integrate: field shape mismatch");
        let mut acc = 0.0;
        self.for_each_node(|lin, mi| {
            acc += f[lin] * self.sqrt_det_g[lin] * self.quad_weight(mi);
        });
        acc
    }
}

/// Inverse and determinant of a symmetric positive-definite n x n matrix,
/// n <= 3. Returns None when the matrix is not positive-definite.
fn invert_spd(g: &[f64], n: usize) -> Option<(Vec<f64>, f64)> {
    match n {
        1 => {
            if g[0] <= 0.0 {
                return None;
            }
            Some((vec![1.0 / g[0]], g[0]))
        }
        2 => {
            let det = g[0] * g[3] - g[1] * g[2];
            if g[0] <= 0.0 || det <= 0.0 {
                return None;
            }
            Some((vec![g[3] / det, -g[1] / det, -g[2] / det, g[0] / det], det))
        }
        3 => {
            let (a, b, c) = (g[0], g[1], g[2]);
            let (d, e) = (g[4], g[5]);
            let f = g[8];
            let det = a * (d * f - e * e) - b * (b * f - e * c) + c * (b * e - d * c);
            // leading principal minors for positive-definiteness
            if a <= 0.0 || a * d - b * b <= 0.0 || det <= 0.0 {
                return None;
            }
            let inv = vec![
                (d * f - e * e) / det,
                (c * e - b * f) / det,
                (b * e - c * d) / det,
                (c * e - b * f) / det,
                (a * f - c * c) / det,
                (b * c - a * e) / det,
                (b * e - c * d) / det,
                (b * c - a * e) / det,
                (a * d - b * b) / det,
            ];
            Some((inv, det))
        }
        _ => None,
    }
}
