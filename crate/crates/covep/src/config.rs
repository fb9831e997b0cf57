//! JSON run configuration. The schema is published in docs/config.schema.json;
//! parsing rejects unknown keys and `validate` checks every cross-field
//! constraint before any field is allocated.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Boundary, MetricFamily, MetricGrid};
use crate::lie::GroupModel;

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub group: GroupSection,
    pub grid: GridSection,
    #[serde(default)]
    pub lagrangian: LagrangianSection,
    #[serde(default)]
    pub connection: ConnectionSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub reduce: Option<ReduceSection>,
    #[serde(default)]
    pub verify: Option<VerifySection>,
    #[serde(default)]
    pub rigid_body: Option<RigidBodySection>,
    #[serde(default)]
    pub harmonic: Option<HarmonicSection>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSection {
    /// "abelian_r:k", "so3" or "su2"
    pub name: String,
    /// algebra metric h as a dense row-major matrix; identity when absent
    #[serde(default)]
    pub h: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dims: usize,
    pub shape: Vec<usize>,
    pub extent: Vec<f64>,
    pub boundary: Boundary,
    #[serde(default)]
    pub metric: MetricSection,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "family")]
pub enum MetricSection {
    Flat,
    DiagPeriodic { a: f64, b: f64 },
}

impl Default for MetricSection {
    fn default() -> Self {
        MetricSection::Flat
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "kind")]
pub enum LagrangianSection {
    Harmonic,
}

impl Default for LagrangianSection {
    fn default() -> Self {
        LagrangianSection::Harmonic
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "family")]
pub enum ConnectionSection {
    Zero,
    Fourier {
        amplitude: f64,
        seed: u64,
    },
}

impl Default for ConnectionSection {
    fn default() -> Self {
        ConnectionSection::Zero
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub max_iter: usize,
    pub grad_tol: f64,
    pub tau0: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection { max_iter: 10_000, grad_tol: 1e-6, tau0: 0.1 }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ReduceSection {
    /// CSV file holding the input group-valued section
    pub input: String,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// per-axis node counts of the flatness-convergence grid ladder
    #[serde(default = "default_ladder")]
    pub ladder: Vec<usize>,
    /// multiplies every tolerance; 0 forces failure
    #[serde(default = "default_tolerance_scale")]
    pub tolerance_scale: f64,
}

fn default_trials() -> usize {
    5
}
fn default_ladder() -> Vec<usize> {
    vec![16, 32, 64]
}
fn default_tolerance_scale() -> f64 {
    1.0
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            trials: default_trials(),
            ladder: default_ladder(),
            tolerance_scale: default_tolerance_scale(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RigidBodySection {
    pub mu0: Vec<f64>,
    pub dt: f64,
    pub t_end: f64,
    /// write every k-th step to the trajectory CSV
    #[serde(default = "default_output_every")]
    pub output_every: usize,
}

fn default_output_every() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "problem")]
pub enum HarmonicSection {
    /// Dirichlet Laplace problem on the unit square, boundary trace x^2 - y^2
    AbelianSquare,
    /// 1-D geodesic between the identity and exp(xi0)
    Geodesic { xi0: Vec<f64> },
    /// seeded random smooth initial section on a periodic grid
    Random { amplitude: f64 },
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if g.dims == 0 || g.dims > 3 {
            return Err(Error::Config(format!("grid.dims must be 1..=3, got {}", g.dims)));
        }
        if g.shape.len() != g.dims {
            return Err(Error::Config(format!(
                "grid.shape has {} entries but grid.dims = {}",
                g.shape.len(),
                g.dims
            )));
        }
        if g.extent.len() != g.dims {
            return Err(Error::Config(format!(
                "grid.extent has {} entries but grid.dims = {}",
                g.extent.len(),
                g.dims
            )));
        }
        if g.shape.iter().any(|&s| s < 3) {
            return Err(Error::Config("grid.shape entries must be >= 3".into()));
        }
        if g.extent.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::Config("grid.extent entries must be positive and finite".into()));
        }
        if let MetricSection::DiagPeriodic { a, b } = &g.metric {
            if g.dims != 2 {
                return Err(Error::Config("metric family diag_periodic needs grid.dims = 2".into()));
            }
            if !(a.abs() > b.abs()) {
                return Err(Error::Config(
                    "metric family diag_periodic needs |a| > |b| for positivity".into(),
                ));
            }
        }
        if let ConnectionSection::Fourier { amplitude, .. } = &self.connection {
            if !amplitude.is_finite() {
                return Err(Error::Config("connection.amplitude must be finite".into()));
            }
        }
        if !(self.solver.grad_tol >= 0.0) {
            return Err(Error::Config("solver.grad_tol must be >= 0".into()));
        }
        if !(self.solver.tau0 > 0.0) {
            return Err(Error::Config("solver.tau0 must be > 0".into()));
        }
        if let Some(rb) = &self.rigid_body {
            if !(rb.dt > 0.0) {
                return Err(Error::Config(format!("rigid_body.dt must be > 0, got {}", rb.dt)));
            }
            if !(rb.t_end > 0.0) {
                return Err(Error::Config("rigid_body.t_end must be > 0".into()));
            }
            if rb.output_every == 0 {
                return Err(Error::Config("rigid_body.output_every must be >= 1".into()));
            }
        }
        if let Some(v) = &self.verify {
            if v.trials == 0 {
                return Err(Error::Config("verify.trials must be >= 1".into()));
            }
            if v.ladder.len() < 2 {
                return Err(Error::Config("verify.ladder needs at least two grids".into()));
            }
            if !(v.tolerance_scale >= 0.0) {
                return Err(Error::Config("verify.tolerance_scale must be >= 0".into()));
            }
        }
        // group name and metric are validated by the model constructor
        self.build_group()?;
        Ok(())
    }

    pub fn build_group(&self) -> Result<GroupModel> {
        let h = match &self.group.h {
            None => None,
            Some(rows) => {
                let m = rows.len();
                if rows.iter().any(|r| r.len() != m) {
                    return Err(Error::Config("group.h must be a square matrix".into()));
                }
                Some(DMatrix::from_fn(m, m, |i, j| rows[i][j]))
            }
        };
        GroupModel::from_config_name(&self.group.name, h)
    }

    pub fn build_grid(&self) -> Result<MetricGrid> {
        self.build_grid_with_shape(&self.grid.shape)
    }

    /// Same metric/boundary/extent on a different lattice (grid ladders).
    pub fn build_grid_with_shape(&self, shape: &[usize]) -> Result<MetricGrid> {
        let family = match &self.grid.metric {
            MetricSection::Flat => MetricFamily::Flat,
            MetricSection::DiagPeriodic { a, b } => MetricFamily::DiagPeriodic { a: *a, b: *b },
        };
        MetricGrid::build(shape, &self.grid.extent, self.grid.boundary, &family)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_json() -> serde_json::Value {
        serde_json::json!({
            "seed": 1,
            "group": { "name": "su2" },
            "grid": {
                "dims": 2,
                "shape": [8, 8],
                "extent": [1.0, 1.0],
                "boundary": "periodic"
            }
        })
    }

    #[test]
    fn minimal_config_parses() {
        let cfg: RunConfig = serde_json::from_value(base_json()).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.build_group().unwrap().m, 3);
        assert_eq!(cfg.build_grid().unwrap().node_count, 64);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut v = base_json();
        v["grid"]["spacing"] = serde_json::json!(0.1);
        let err = serde_json::from_value::<RunConfig>(v).unwrap_err();
        assert!(err.to_string().contains("spacing"));
    }

    #[test]
    fn shape_dims_mismatch_names_the_field() {
        let mut v = base_json();
        v["grid"]["dims"] = serde_json::json!(3);
        let cfg: RunConfig = serde_json::from_value(v).unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("grid.shape"));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn bad_rigid_body_dt_is_a_config_error() {
        let mut v = base_json();
        v["rigid_body"] = serde_json::json!({ "mu0": [1.0, 1.0, 1.0], "dt": -0.1, "t_end": 1.0 });
        let cfg: RunConfig = serde_json::from_value(v).unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("rigid_body.dt"));
    }

    #[test]
    fn group_metric_flows_into_model() {
        let mut v = base_json();
        v["group"]["h"] = serde_json::json!([[1.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 3.0]]);
        let cfg: RunConfig = serde_json::from_value(v).unwrap();
        let model = cfg.build_group().unwrap();
        assert_eq!(model.h[(2, 2)], 3.0);
    }
}
