//! End-to-end acceptance suite. Each test prints one pass/fail line so the
//! full run reads as a checklist:
//!
//! ```text
//! cargo test --test acceptance -- --nocapture
//! ```

use std::f64::consts::PI;
use std::process::Command;
use std::time::Instant;

use covep::fields::{
    curvature, reduce_jet, reconstruct_section, variation_delta_sigma, AlgebraOneForm, GroupField,
};
use covep::fourier;
use covep::lie::GroupElement;
use covep::reduction::{
    coadjoint_term, energy_gradient_oracle, ep_residual, pair_integral, ReducedLagrangian,
};
use covep::solvers::{
    classical_ep_step, harmonic_descent, DescentOptions, RigidBodyState,
};
use covep::{Boundary, GroupModel, MetricGrid};

fn report(criterion: usize, what: &str, ok: bool, detail: &str) {
    println!(
        "criterion {criterion:2} ({what}): {} [{detail}]",
        if ok { "pass" } else { "FAIL" }
    );
    assert!(ok, "criterion {criterion} failed: {detail}");
}

/// 1. Flatness of reduced jets converges at second order; 128^2 stays fast.
#[test]
fn criterion_01_flatness_convergence() {
    let model = GroupModel::su2();
    let curv_at = |nodes: usize| {
        let grid = MetricGrid::unit_torus(2, nodes);
        let s = GroupField::from_fn(&grid, |_, mi| {
            let x = grid.coord(mi);
            let a = model.exp(&[(2.0 * PI * x[0]).sin(), 0.0, 0.0]);
            let b = model.exp(&[0.0, (2.0 * PI * x[1]).cos(), 0.0]);
            model.mul(&a, &b)
        });
        curvature(&model, &grid, &reduce_jet(&model, &grid, &s).unwrap()).max_abs()
    };
    let c32 = curv_at(32);
    let c64 = curv_at(64);
    let start = Instant::now();
    let c128 = curv_at(128);
    let elapsed = start.elapsed().as_secs_f64();
    let o1 = (c32 / c64).log2();
    let o2 = (c64 / c128).log2();
    let ok = (1.7..=2.3).contains(&o1) && (1.7..=2.3).contains(&o2) && elapsed < 10.0;
    report(
        1,
        "flatness order",
        ok,
        &format!("orders {o1:.3}/{o2:.3}, 128^2 in {elapsed:.2}s"),
    );
}

/// 2. Energy-gradient oracle against the residual pairing, R and SU2.
#[test]
fn criterion_02_four_way_equivalence() {
    let grid = MetricGrid::unit_torus(2, 64);
    let h = grid.spacing[0];
    let tol = (20.0 * h * h).max(1e-3);
    let lag = ReducedLagrangian::Harmonic;
    let mut worst: f64 = 0.0;
    for model in [GroupModel::abelian(2).unwrap(), GroupModel::su2()] {
        for trial in 0..5u64 {
            let mut rng = fourier::rng_from_seed(100 + trial);
            let s = fourier::smooth_group_field(&model, &grid, &mut rng, 0.3);
            let eta = fourier::smooth_algebra_field(&grid, model.m, &mut rng, 0.2, false);
            let oracle = energy_gradient_oracle(&model, &grid, &lag, &s, &eta, 1e-5).unwrap();
            let sigma = reduce_jet(&model, &grid, &s).unwrap();
            let a0 = AlgebraOneForm::zeros(&grid, model.m);
            let r = ep_residual(&model, &grid, &lag, &sigma, &a0);
            let pairing = pair_integral(&grid, &r, &eta);
            let rel = (oracle + pairing).abs() / pairing.abs().max(1.0);
            worst = worst.max(rel);
        }
    }
    report(2, "variational equivalence", worst <= tol, &format!("max rel err {worst:.3e} vs {tol:.3e}"));
}

/// 3. Residual and variation do not see the choice of connection.
#[test]
fn criterion_03_connection_independence() {
    let model = GroupModel::su2();
    let grid = MetricGrid::unit_torus(2, 32);
    let lag = ReducedLagrangian::Harmonic;
    let mut rng = fourier::rng_from_seed(31);
    let s = fourier::smooth_group_field(&model, &grid, &mut rng, 0.4);
    let eta = fourier::smooth_algebra_field(&grid, 3, &mut rng, 0.3, false);
    let a = fourier::smooth_connection_form(&grid, 3, &mut rng, 0.5);
    let a0 = AlgebraOneForm::zeros(&grid, 3);
    let sigma = reduce_jet(&model, &grid, &s).unwrap();

    let dr = ep_residual(&model, &grid, &lag, &sigma, &a0)
        .data
        .iter()
        .zip(&ep_residual(&model, &grid, &lag, &sigma, &a).data)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f64, f64::max);
    let dv = variation_delta_sigma(&model, &grid, &sigma, &eta, &a0)
        .data
        .iter()
        .zip(&variation_delta_sigma(&model, &grid, &sigma, &eta, &a).data)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f64, f64::max);
    let worst = dr.max(dv);
    report(3, "connection independence", worst <= 1e-12, &format!("max dev {worst:.3e}"));
}

/// 4. Variation formula against the flow difference of reduce_jet.
#[test]
fn criterion_04_variation_formula() {
    let grid = MetricGrid::unit_torus(2, 64);
    let h = grid.spacing[0];
    let tol = 1e-4 + 10.0 * h * h;
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    for model in [GroupModel::su2(), GroupModel::so3()] {
        let mut rng = fourier::rng_from_seed(41);
        let s = fourier::smooth_group_field(&model, &grid, &mut rng, 0.3);
        let eta = fourier::smooth_algebra_field(&grid, model.m, &mut rng, 0.2, false);
        let sigma = reduce_jet(&model, &grid, &s).unwrap();
        let a0 = AlgebraOneForm::zeros(&grid, model.m);
        let predicted = variation_delta_sigma(&model, &grid, &sigma, &eta, &a0);

        let flow = |sign: f64| -> AlgebraOneForm {
            let moved = GroupField {
                values: (0..grid.node_count)
                    .map(|lin| {
                        let xi: Vec<f64> =
                            eta.at(lin).iter().map(|v| v * eps * sign).collect();
                        model.mul(&model.exp(&xi), &s.values[lin])
                    })
                    .collect(),
            };
            reduce_jet(&model, &grid, &moved).unwrap()
        };
        let plus = flow(1.0);
        let minus = flow(-1.0);
        let dev = predicted
            .data
            .iter()
            .enumerate()
            .map(|(k, v)| ((plus.data[k] - minus.data[k]) / (2.0 * eps) - v).abs())
            .fold(0.0f64, f64::max);
        worst = worst.max(dev);
    }
    report(4, "variation formula", worst <= tol, &format!("L-inf dev {worst:.3e} vs {tol:.3e}"));
}

/// 5. Lemma 3.1: additivity, Leibniz, Stokes for the covariant divergence.
#[test]
fn criterion_05_divergence_lemma() {
    use covep::fields::{covariant_derivative_ad, CoalgebraVectorField};
    use covep::reduction::covariant_divergence;

    let model = GroupModel::su2();
    let grid = MetricGrid::unit_torus(2, 32);
    let h = grid.spacing[0];
    let mut rng = fourier::rng_from_seed(51);
    let mk = |rng: &mut rand_chacha::ChaCha8Rng, amp: f64| CoalgebraVectorField {
        m: 3,
        n: 2,
        data: fourier::smooth_connection_form(&grid, 3, rng, amp).data,
    };
    let mu = mk(&mut rng, 0.05);
    let mu2 = mk(&mut rng, 0.03);
    let eta = fourier::smooth_algebra_field(&grid, 3, &mut rng, 0.05, false);
    let a = fourier::smooth_connection_form(&grid, 3, &mut rng, 0.05);
    let f = fourier::smooth_scalar_field(&grid, &mut rng, 0.05, false);

    let d1 = covariant_divergence(&model, &grid, &mu, &a);

    let sum = CoalgebraVectorField {
        m: 3,
        n: 2,
        data: mu.data.iter().zip(&mu2.data).map(|(x, y)| x + y).collect(),
    };
    let additivity = covariant_divergence(&model, &grid, &sum, &a)
        .data
        .iter()
        .zip(d1.data.iter().zip(&covariant_divergence(&model, &grid, &mu2, &a).data))
        .map(|(s, (x, y))| (s - x - y).abs())
        .fold(0.0f64, f64::max);

    let fmu = CoalgebraVectorField {
        m: 3,
        n: 2,
        data: (0..grid.node_count)
            .flat_map(|lin| {
                mu.data[lin * 6..(lin + 1) * 6].iter().map(|v| v * f[lin]).collect::<Vec<_>>()
            })
            .collect(),
    };
    let d_fmu = covariant_divergence(&model, &grid, &fmu, &a);
    let df: Vec<Vec<f64>> = (0..2).map(|i| grid.partial_derivative(&f, i)).collect();
    let mut leibniz = 0.0f64;
    for lin in 0..grid.node_count {
        for b in 0..3 {
            let mut rhs = f[lin] * d1.data[lin * 3 + b];
            for i in 0..2 {
                rhs += mu.data[(lin * 2 + i) * 3 + b] * df[i][lin];
            }
            leibniz = leibniz.max((d_fmu.data[lin * 3 + b] - rhs).abs());
        }
    }

    let deta = covariant_derivative_ad(&model, &grid, &eta, &a);
    let mut field = vec![0.0; grid.node_count];
    for lin in 0..grid.node_count {
        field[lin] = covep::pairing(d1.at(lin), eta.at(lin));
        for i in 0..2 {
            field[lin] += covep::pairing(mu.at(lin, i), deta.at(lin, i));
        }
    }
    let stokes = grid.integrate(&field).abs();

    let tol = 10.0 * h * h;
    let ok = additivity <= 1e-12 && leibniz <= tol && stokes <= tol;
    report(
        5,
        "divergence lemma",
        ok,
        &format!("additivity {additivity:.2e}, Leibniz {leibniz:.2e}, Stokes {stokes:.2e} vs {tol:.2e}"),
    );
}

/// 6. Classical rigid body: conservation and principal-axis equilibria.
#[test]
fn criterion_06_rigid_body() {
    let h = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&[1.0, 2.0, 3.0]));
    let model = GroupModel::so3().with_metric(h).unwrap();
    let mut state = RigidBodyState::new(vec![1.0, 1.0, 1.0]);
    let c0 = state.casimir();
    let e0 = state.energy(&model);
    for _ in 0..10_000 {
        state = classical_ep_step(&model, &state, 1e-3);
    }
    let casimir_drift = (state.casimir() - c0).abs();
    let energy_drift = (state.energy(&model) - e0).abs();

    let mut eq = RigidBodyState::new(vec![0.0, 1.0, 0.0]);
    let mut eq_dev: f64 = 0.0;
    for _ in 0..1000 {
        eq = classical_ep_step(&model, &eq, 1e-3);
        eq_dev = eq_dev.max((eq.mu[0]).abs()).max((eq.mu[1] - 1.0).abs()).max(eq.mu[2].abs());
    }

    let ok = casimir_drift <= 1e-8 && energy_drift <= 1e-8 && eq_dev <= 1e-12;
    report(
        6,
        "rigid body conservation",
        ok,
        &format!("casimir {casimir_drift:.2e}, energy {energy_drift:.2e}, equilibrium {eq_dev:.2e}"),
    );
}

/// 7. Abelian harmonic map on the Dirichlet square converges at order 2.
#[test]
fn criterion_07_abelian_harmonic_square() {
    let model = GroupModel::abelian(1).unwrap();
    let solve = |nodes: usize| -> (f64, f64) {
        let grid = MetricGrid::flat(&[nodes, nodes], &[1.0, 1.0], Boundary::Dirichlet).unwrap();
        let h = grid.spacing[0];
        let target = |x: &[f64]| x[0] * x[0] - x[1] * x[1];
        let s0 = GroupField::from_fn(&grid, |_, mi| {
            let x = grid.coord(mi);
            let v = if grid.is_boundary(mi) { target(&x) } else { 0.0 };
            GroupElement::Abelian(vec![v])
        });
        // stopping at |R| = h^2 leaves an O(h^2) algebraic error, which is
        // what the refinement ratio below measures
        let opts = DescentOptions { max_iter: 200_000, grad_tol: h * h, tau0: 1e-3 };
        let out = harmonic_descent(&model, &grid, &ReducedLagrangian::Harmonic, s0, &opts).unwrap();
        assert!(out.converged, "descent did not converge at {nodes}^2");
        let mut err: f64 = 0.0;
        grid.for_each_node(|lin, mi| {
            let x = grid.coord(mi);
            if let GroupElement::Abelian(v) = &out.s.values[lin] {
                err = err.max((v[0] - target(&x)).abs());
            }
        });
        (err, h)
    };
    let (e33, h33) = solve(33);
    let (e65, h65) = solve(65);
    let ratio = e33 / e65;
    let ok = e33 <= 5.0 * h33 * h33 && e65 <= 5.0 * h65 * h65 && (3.4..=4.6).contains(&ratio);
    report(
        7,
        "abelian harmonic square",
        ok,
        &format!("errors {e33:.3e}/{e65:.3e}, ratio {ratio:.2}"),
    );
}

/// 8. SU(2) geodesic between group elements, with vanishing coadjoint term.
#[test]
fn criterion_08_su2_geodesic() {
    let model = GroupModel::su2();
    let grid = MetricGrid::flat(&[65], &[1.0], Boundary::Dirichlet).unwrap();
    let xi0 = [PI / 2.0, 0.0, 0.0];
    let mut rng = fourier::rng_from_seed(81);
    let bump = fourier::smooth_algebra_field(&grid, 3, &mut rng, 0.2, true);
    let s0 = GroupField::from_fn(&grid, |lin, mi| {
        let t = grid.coord(mi)[0];
        let base: Vec<f64> = xi0.iter().map(|v| t * v).collect();
        model.mul(&model.exp(bump.at(lin)), &model.exp(&base))
    });
    let lag = ReducedLagrangian::Harmonic;
    let a0 = AlgebraOneForm::zeros(&grid, 3);
    let sigma0 = reduce_jet(&model, &grid, &s0).unwrap();
    let coad_start = coadjoint_term(&model, &grid, &lag, &sigma0, &a0).max_abs();

    let opts = DescentOptions { max_iter: 200_000, grad_tol: 1e-6, tau0: 1e-2 };
    let out = harmonic_descent(&model, &grid, &lag, s0, &opts).unwrap();
    assert!(out.converged, "geodesic descent did not converge");
    let sigma = reduce_jet(&model, &grid, &out.s).unwrap();
    let coad_end = coadjoint_term(&model, &grid, &lag, &sigma, &a0).max_abs();

    let mut p_err: f64 = 0.0;
    let mut path_err: f64 = 0.0;
    grid.for_each_node(|lin, mi| {
        let p = sigma.at(lin, 0);
        for (alpha, v) in xi0.iter().enumerate() {
            p_err = p_err.max((p[alpha] - v).abs());
        }
        let t = grid.coord(mi)[0];
        let base: Vec<f64> = xi0.iter().map(|v| t * v).collect();
        let diff = model.mul(&out.s.values[lin], &model.inv(&model.exp(&base)));
        let log = model.log(&diff).unwrap();
        path_err = path_err.max(log.iter().map(|v| v.abs()).fold(0.0, f64::max));
    });
    let coad = coad_start.max(coad_end);
    let ok = p_err <= 1e-4 && path_err <= 1e-4 && coad <= 1e-12;
    report(
        8,
        "su2 geodesic",
        ok,
        &format!("p dev {p_err:.3e}, path dev {path_err:.3e}, coad term {coad:.2e}"),
    );
}

/// 9. Reconstruction roundtrip at order 2 plus the non-flat refusal path.
#[test]
fn criterion_09_reconstruction() {
    let model = GroupModel::su2();
    let err_at = |nodes: usize| -> f64 {
        let grid = MetricGrid::unit_torus(2, nodes);
        let s = GroupField::from_fn(&grid, |_, mi| {
            let x = grid.coord(mi);
            let a = model.exp(&[0.5 * (2.0 * PI * x[0]).sin(), 0.0, 0.0]);
            let b = model.exp(&[0.0, 0.4 * (2.0 * PI * x[1]).cos(), 0.0]);
            model.mul(&a, &b)
        });
        let sigma = reduce_jet(&model, &grid, &s).unwrap();
        let rebuilt =
            reconstruct_section(&model, &grid, &sigma, &s.values[0], &[0, 0], 1.0).unwrap();
        // quotient by the constant right factor fixed at the base node
        let mut err: f64 = 0.0;
        for lin in 0..grid.node_count {
            let d = model.mul(&model.inv(&s.values[lin]), &rebuilt.values[lin]);
            let xi = model.log(&d).unwrap();
            err = err.max(xi.iter().map(|v| v.abs()).fold(0.0, f64::max));
        }
        err
    };
    let e16 = err_at(16);
    let e32 = err_at(32);
    let ratio = e16 / e32;

    // a random one-form is not flat; reconstruction must refuse with the
    // numeric-failure exit code
    let grid = MetricGrid::unit_torus(2, 16);
    let mut rng = fourier::rng_from_seed(91);
    let mut bad = fourier::smooth_connection_form(&grid, 3, &mut rng, 1.0);
    let f = curvature(&model, &grid, &bad);
    let scale = 1.0 / f.max_abs();
    for v in &mut bad.data {
        *v *= scale.sqrt().min(1.0);
    }
    let max_f = curvature(&model, &grid, &bad).max_abs();
    let refusal =
        reconstruct_section(&model, &grid, &bad, &model.identity(), &[0, 0], 0.5 * max_f);
    let refusal_code = refusal.as_ref().err().map(|e| e.exit_code());

    let ok = e32 <= 0.05 && (2.8..=6.0).contains(&ratio) && refusal_code == Some(1);
    report(
        9,
        "reconstruction roundtrip",
        ok,
        &format!("errors {e16:.3e}/{e32:.3e}, ratio {ratio:.2}, refusal exit {refusal_code:?}"),
    );
}

/// 10. cmd_verify is byte-deterministic for a fixed seed.
#[test]
fn criterion_10_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("verify.json");
    std::fs::write(
        &config,
        r#"{
  "seed": 424242,
  "group": { "name": "su2" },
  "grid": { "dims": 2, "shape": [24, 24], "extent": [1.0, 1.0], "boundary": "periodic" },
  "verify": { "trials": 3, "ladder": [12, 24] }
}
"#,
    )
    .unwrap();
    let run = |out: &str| -> Vec<u8> {
        let out_dir = dir.path().join(out);
        let status = Command::new(env!("CARGO_BIN_EXE_covep"))
            .args(["verify", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out_dir)
            .status()
            .unwrap();
        assert!(status.success(), "verify run failed");
        std::fs::read(out_dir.join("summary.json")).unwrap()
    };
    let first = run("a");
    let second = run("b");
    let ok = first == second;
    report(10, "verify determinism", ok, &format!("{} bytes compared", first.len()));
}
