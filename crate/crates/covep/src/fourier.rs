//! Seeded random smooth fields as truncated Fourier series (three lowest
//! modes per axis), used for test connections, variations and sections.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::fields::{AlgebraField, AlgebraOneForm, ConnectionForm, GroupField};
use crate::grid::MetricGrid;
use crate::lie::GroupModel;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const MODES: usize = 3;
const TERMS: usize = 4;

/// Smooth random scalar field with |f| of order `amplitude`. With
/// `vanish_on_boundary` the field is windowed to vanish (to second order)
/// on Dirichlet boundaries, approximating compact support.
pub fn smooth_scalar_field(
    grid: &MetricGrid,
    rng: &mut ChaCha8Rng,
    amplitude: f64,
    vanish_on_boundary: bool,
) -> Vec<f64> {
    let n = grid.n;
    // draw per-term coefficients and per-axis wavenumbers / phases
    let mut coeffs = Vec::with_capacity(TERMS);
    for _ in 0..TERMS {
        let c: f64 = rng.gen_range(-1.0..1.0);
        let axes: Vec<(usize, bool)> = (0..n)
            .map(|_| (rng.gen_range(0..=MODES), rng.gen_bool(0.5)))
            .collect();
        coeffs.push((c, axes));
    }
    let mut out = vec![0.0; grid.node_count];
    grid.for_each_node(|lin, mi| {
        let x = grid.coord(mi);
        let mut v = 0.0;
        for (c, axes) in &coeffs {
            let mut term = *c;
            for (d, &(k, use_sin)) in axes.iter().enumerate() {
                let phase = 2.0 * std::f64::consts::PI * k as f64 * x[d] / grid.extent[d];
                term *= if use_sin { phase.sin() } else { phase.cos() };
            }
            v += term;
        }
        if vanish_on_boundary {
            for d in 0..n {
                let t = x[d] / grid.extent[d];
                let w = 4.0 * t * (1.0 - t);
                v *= w * w;
            }
        }
        out[lin] = v * amplitude / TERMS as f64;
    });
    out
}

pub fn smooth_algebra_field(
    grid: &MetricGrid,
    m: usize,
    rng: &mut ChaCha8Rng,
    amplitude: f64,
    vanish_on_boundary: bool,
) -> AlgebraField {
    let mut field = AlgebraField::zeros(grid, m);
    for alpha in 0..m {
        let comp = smooth_scalar_field(grid, rng, amplitude, vanish_on_boundary);
        for lin in 0..grid.node_count {
            field.data[lin * m + alpha] = comp[lin];
        }
    }
    field
}

pub fn smooth_connection_form(
    grid: &MetricGrid,
    m: usize,
    rng: &mut ChaCha8Rng,
    amplitude: f64,
) -> ConnectionForm {
    let mut a = AlgebraOneForm::zeros(grid, m);
    for axis in 0..grid.n {
        for alpha in 0..m {
            let comp = smooth_scalar_field(grid, rng, amplitude, false);
            for lin in 0..grid.node_count {
                a.data[(lin * grid.n + axis) * m + alpha] = comp[lin];
            }
        }
    }
    a
}

/// Smooth random section: pointwise exponential of a smooth algebra field.
pub fn smooth_group_field(
    model: &GroupModel,
    grid: &MetricGrid,
    rng: &mut ChaCha8Rng,
    amplitude: f64,
) -> GroupField {
    let xi = smooth_algebra_field(grid, model.m, rng, amplitude, false);
    GroupField {
        values: (0..grid.node_count).map(|lin| model.exp(xi.at(lin))).collect(),
    }
}
