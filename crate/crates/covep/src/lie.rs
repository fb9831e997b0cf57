//! Matrix Lie groups and their algebras in a fixed basis.
//!
//! Supported groups: the abelian translation group R^k, SO(3) stored as
//! 3x3 rotation matrices, and SU(2) stored as unit quaternions. Algebra
//! elements are coordinate vectors in the basis {E_alpha}; for so(3) and
//! su(2) the basis is normalized so that the structure constants are the
//! Levi-Civita symbol, c^gamma_{alpha beta} = eps_{alpha beta gamma}.
//! For SU(2) this means E_alpha is half the corresponding quaternion unit,
//! so exp of a coordinate vector of norm theta rotates by angle theta.

use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupName {
    AbelianR,
    SO3,
    SU2,
}

/// A matrix Lie group descriptor: algebra dimension, structure constants
/// and a constant metric on the algebra (extended to G by right translation).
#[derive(Clone, Debug)]
pub struct GroupModel {
    pub name: GroupName,
    /// Algebra dimension.
    pub m: usize,
    /// Structure constants c^gamma_{alpha beta}, index [gamma][alpha][beta].
    c: Vec<f64>,
    pub h: DMatrix<f64>,
    pub h_inv: DMatrix<f64>,
}

/// A group element in its representation payload.
#[derive(Clone, Debug, PartialEq)]
pub enum GroupElement {
    /// Translation vector in R^k.
    Abelian(Vec<f64>),
    /// Rotation matrix in SO(3).
    Rotation(Matrix3<f64>),
    /// Unit quaternion (w, x, y, z) for SU(2).
    Quaternion([f64; 4]),
}

/// Natural dual pairing <mu, a> = sum mu_alpha a^alpha.
pub fn pairing(mu: &[f64], a: &[f64]) -> f64 {
    assert_eq!(mu.len(), a.len(), "pairing: dimension mismatch");
    mu.iter().zip(a).map(|(m, x)| m * x).sum()
}

fn epsilon_structure_constants() -> Vec<f64> {
    let mut c = vec![0.0; 27];
    // c^gamma_{alpha beta} = eps_{alpha beta gamma}
    let eps = [(0, 1, 2, 1.0), (1, 2, 0, 1.0), (2, 0, 1, 1.0),
               (1, 0, 2, -1.0), (2, 1, 0, -1.0), (0, 2, 1, -1.0)];
    for &(a, b, g, v) in &eps {
        c[(g * 3 + a) * 3 + b] = v;
    }
    c
}

impl GroupModel {
    pub fn new(name: GroupName, m: usize, h: DMatrix<f64>) -> Result<Self> {
        let c = match name {
            GroupName::AbelianR => vec![0.0; m * m * m],
            GroupName::SO3 | GroupName::SU2 => {
                if m != 3 {
                    return Err(Error::InvalidGroup(format!(
                        "{name:?} has algebra dimension 3, got {m}"
                    )));
                }
                epsilon_structure_constants()
            }
        };
        if m == 0 {
            return Err(Error::InvalidGroup("algebra dimension must be positive".into()));
        }
        if h.nrows() != m || h.ncols() != m {
            return Err(Error::InvalidGroup(format!(
                "metric h must be {m}x{m}, got {}x{}",
                h.nrows(),
                h.ncols()
            )));
        }
        for i in 0..m {
            for j in 0..m {
                if (h[(i, j)] - h[(j, i)]).abs() > 1e-12 {
                    return Err(Error::InvalidGroup("metric h is not symmetric".into()));
                }
            }
        }
        let chol = nalgebra::Cholesky::new(h.clone())
            .ok_or_else(|| Error::InvalidGroup("metric h is not positive-definite".into()))?;
        let h_inv = chol.inverse();
        let prod = &h * &h_inv;
        for i in 0..m {
            for j in 0..m {
                let target = if i == j { 1.0 } else { 0.0 };
                if (prod[(i, j)] - target).abs() > 1e-12 {
                    return Err(Error::InvalidGroup("h * h_inv deviates from identity".into()));
                }
            }
        }
        let model = GroupModel { name, m, c, h, h_inv };
        model.check_structure_constants()?;
        Ok(model)
    }

    pub fn abelian(k: usize) -> Result<Self> {
        Self::new(GroupName::AbelianR, k, DMatrix::identity(k, k))
    }

    pub fn so3() -> Self {
        Self::new(GroupName::SO3, 3, DMatrix::identity(3, 3)).expect("so3 model")
    }

    pub fn su2() -> Self {
        Self::new(GroupName::SU2, 3, DMatrix::identity(3, 3)).expect("su2 model")
    }

    pub fn with_metric(self, h: DMatrix<f64>) -> Result<Self> {
        Self::new(self.name, self.m, h)
    }

    /// Parse a config group name: "abelian_r:k", "so3" or "su2".
    pub fn from_config_name(name: &str, h: Option<DMatrix<f64>>) -> Result<Self> {
        let (group, m) = if let Some(k) = name.strip_prefix("abelian_r:") {
            let k: usize = k
                .parse()
                .map_err(|_| Error::Config(format!("bad abelian dimension in group name {name:?}")))?;
            (GroupName::AbelianR, k)
        } else {
            match name {
                "so3" => (GroupName::SO3, 3),
                "su2" => (GroupName::SU2, 3),
                other => return Err(Error::Config(format!("unknown group name {other:?}"))),
            }
        };
        let h = h.unwrap_or_else(|| DMatrix::identity(m, m));
        Self::new(group, m, h)
    }

    fn check_structure_constants(&self) -> Result<()> {
        let m = self.m;
        for g in 0..m {
            for a in 0..m {
                for b in 0..m {
                    if (self.cst(g, a, b) + self.cst(g, b, a)).abs() > 1e-14 {
                        return Err(Error::InvalidGroup("structure constants not antisymmetric".into()));
                    }
                }
            }
        }
        // Jacobi identity.
        for a in 0..m {
            for b in 0..m {
                for g in 0..m {
                    for d in 0..m {
                        let mut s = 0.0;
                        for r in 0..m {
                            s += self.cst(r, a, b) * self.cst(d, r, g)
                                + self.cst(r, b, g) * self.cst(d, r, a)
                                + self.cst(r, g, a) * self.cst(d, r, b);
                        }
                        if s.abs() > 1e-12 {
                            return Err(Error::InvalidGroup("Jacobi identity violated".into()));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn cst(&self, gamma: usize, alpha: usize, beta: usize) -> f64 {
        self.c[(gamma * self.m + alpha) * self.m + beta]
    }

    /// Lie bracket [a, b]^gamma = c^gamma_{alpha beta} a^alpha b^beta.
    pub fn bracket(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        self.bracket_into(a, b, &mut out);
        out
    }

    pub fn bracket_into(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        let m = self.m;
        assert!(a.len() == m && b.len() == m && out.len() == m, "bracket: dimension mismatch");
        match self.name {
            GroupName::AbelianR => out.fill(0.0),
            // eps structure constants: [a, b] = a x b.
            GroupName::SO3 | GroupName::SU2 => {
                out[0] = a[1] * b[2] - a[2] * b[1];
                out[1] = a[2] * b[0] - a[0] * b[2];
                out[2] = a[0] * b[1] - a[1] * b[0];
            }
        }
    }

    /// Coadjoint action: coad(a, mu)_beta = mu_gamma c^gamma_{alpha beta} a^alpha,
    /// the dual of the bracket: <coad(a, mu), z> = <mu, [a, z]>.
    pub fn coad(&self, a: &[f64], mu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        self.coad_into(a, mu, &mut out);
        out
    }

    pub fn coad_into(&self, a: &[f64], mu: &[f64], out: &mut [f64]) {
        let m = self.m;
        assert!(a.len() == m && mu.len() == m && out.len() == m, "coad: dimension mismatch");
        match self.name {
            GroupName::AbelianR => out.fill(0.0),
            // <coad(a, mu), z> = mu . (a x z) = (mu x a) . z
            GroupName::SO3 | GroupName::SU2 => {
                out[0] = mu[1] * a[2] - mu[2] * a[1];
                out[1] = mu[2] * a[0] - mu[0] * a[2];
                out[2] = mu[0] * a[1] - mu[1] * a[0];
            }
        }
    }

    /// Index lowering with the algebra metric: flat(a)_beta = h_{alpha beta} a^alpha.
    pub fn flat(&self, a: &[f64]) -> Vec<f64> {
        assert_eq!(a.len(), self.m, "flat: dimension mismatch");
        (0..self.m)
            .map(|b| (0..self.m).map(|al| self.h[(al, b)] * a[al]).sum())
            .collect()
    }

    /// Index raising: sharp(mu)^alpha = h^{alpha beta} mu_beta.
    pub fn sharp(&self, mu: &[f64]) -> Vec<f64> {
        assert_eq!(mu.len(), self.m, "sharp: dimension mismatch");
        (0..self.m)
            .map(|a| (0..self.m).map(|b| self.h_inv[(a, b)] * mu[b]).sum())
            .collect()
    }

    pub fn identity(&self) -> GroupElement {
        match self.name {
            GroupName::AbelianR => GroupElement::Abelian(vec![0.0; self.m]),
            GroupName::SO3 => GroupElement::Rotation(Matrix3::identity()),
            GroupName::SU2 => GroupElement::Quaternion([1.0, 0.0, 0.0, 0.0]),
        }
    }

    /// Exponential map from algebra coordinates to the group.
    pub fn exp(&self, xi: &[f64]) -> GroupElement {
        assert_eq!(xi.len(), self.m, "exp: dimension mismatch");
        match self.name {
            GroupName::AbelianR => GroupElement::Abelian(xi.to_vec()),
            GroupName::SO3 => GroupElement::Rotation(so3_exp(xi)),
            GroupName::SU2 => GroupElement::Quaternion(quat_exp(xi)),
        }
    }

    /// Logarithm; errors outside the injectivity radius (SO3: angle < pi - 1e-6,
    /// SU2: quaternion scalar part w > -1 + 1e-9).
    pub fn log(&self, g: &GroupElement) -> Result<Vec<f64>> {
        match (self.name, g) {
            (GroupName::AbelianR, GroupElement::Abelian(v)) => Ok(v.clone()),
            (GroupName::SO3, GroupElement::Rotation(r)) => so3_log(r),
            (GroupName::SU2, GroupElement::Quaternion(q)) => quat_log(q),
            _ => panic!("log: group element does not match model"),
        }
    }

    pub fn mul(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        match (a, b) {
            (GroupElement::Abelian(x), GroupElement::Abelian(y)) => {
                assert_eq!(x.len(), y.len(), "mul: dimension mismatch");
                GroupElement::Abelian(x.iter().zip(y).map(|(p, q)| p + q).collect())
            }
            (GroupElement::Rotation(r), GroupElement::Rotation(s)) => {
                GroupElement::Rotation(renorm_so3(r * s))
            }
            (GroupElement::Quaternion(p), GroupElement::Quaternion(q)) => {
                GroupElement::Quaternion(renorm_quat(quat_mul(p, q)))
            }
            _ => panic!("mul: mixed group element representations"),
        }
    }

    pub fn inv(&self, g: &GroupElement) -> GroupElement {
        match g {
            GroupElement::Abelian(v) => GroupElement::Abelian(v.iter().map(|x| -x).collect()),
            GroupElement::Rotation(r) => GroupElement::Rotation(r.transpose()),
            GroupElement::Quaternion([w, x, y, z]) => GroupElement::Quaternion([*w, -x, -y, -z]),
        }
    }

    /// Number of scalar components in the CSV payload of one group element.
    pub fn payload_len(&self) -> usize {
        match self.name {
            GroupName::AbelianR => self.m,
            GroupName::SO3 => 9,
            GroupName::SU2 => 4,
        }
    }

    pub fn payload(&self, g: &GroupElement) -> Vec<f64> {
        match g {
            GroupElement::Abelian(v) => v.clone(),
            GroupElement::Rotation(r) => (0..3).flat_map(|i| (0..3).map(move |j| (i, j)))
                .map(|(i, j)| r[(i, j)])
                .collect(),
            GroupElement::Quaternion(q) => q.to_vec(),
        }
    }

    pub fn element_from_payload(&self, p: &[f64]) -> Result<GroupElement> {
        if p.len() != self.payload_len() {
            return Err(Error::Parse(format!(
                "group element payload has {} components, expected {}",
                p.len(),
                self.payload_len()
            )));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse("non-finite group element payload".into()));
        }
        let g = match self.name {
            GroupName::AbelianR => GroupElement::Abelian(p.to_vec()),
            GroupName::SO3 => {
                let r = Matrix3::from_fn(|i, j| p[i * 3 + j]);
                GroupElement::Rotation(r)
            }
            GroupName::SU2 => GroupElement::Quaternion([p[0], p[1], p[2], p[3]]),
        };
        self.check_element(&g)?;
        Ok(g)
    }

    /// Validate the representation invariants of a group element.
    pub fn check_element(&self, g: &GroupElement) -> Result<()> {
        match g {
            GroupElement::Abelian(v) => {
                if v.len() != self.m {
                    return Err(Error::Parse("abelian element dimension mismatch".into()));
                }
            }
            GroupElement::Rotation(r) => {
                let err = (r.transpose() * r - Matrix3::identity()).abs().max();
                if err > 1e-10 {
                    return Err(Error::Parse(format!("matrix not orthogonal (drift {err:.2e})")));
                }
                if (r.determinant() - 1.0).abs() > 1e-10 {
                    return Err(Error::Parse("matrix determinant is not 1".into()));
                }
            }
            GroupElement::Quaternion(q) => {
                let n2: f64 = q.iter().map(|v| v * v).sum();
                if (n2 - 1.0).abs() > 1e-12 {
                    return Err(Error::Parse(format!(
                        "quaternion norm^2 deviates from 1 by {:.2e}",
                        (n2 - 1.0).abs()
                    )));
                }
            }
        }
        Ok(())
    }
}

fn hat(xi: &[f64]) -> Matrix3<f64> {
    Matrix3::new(0.0, -xi[2], xi[1], xi[2], 0.0, -xi[0], -xi[1], xi[0], 0.0)
}

fn so3_exp(xi: &[f64]) -> Matrix3<f64> {
    let theta2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    let theta = theta2.sqrt();
    let k = hat(xi);
    let (a, b) = if theta < 1e-4 {
        // Taylor: sin t / t and (1 - cos t)/t^2.
        (1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0, 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    Matrix3::identity() + k * a + k * k * b
}

fn so3_log(r: &Matrix3<f64>) -> Result<Vec<f64>> {
    // Go through a unit quaternion (Shepperd); well conditioned for all angles.
    let q = rotation_to_quat(r);
    let v = Vector3::new(q[1], q[2], q[3]);
    let vn = v.norm();
    let theta = 2.0 * vn.atan2(q[0]);
    if theta >= std::f64::consts::PI - 1e-6 {
        return Err(Error::LogDomain(format!(
            "rotation angle {theta:.9} is not below pi - 1e-6"
        )));
    }
    if vn < 1e-12 {
        return Ok(vec![2.0 * q[1], 2.0 * q[2], 2.0 * q[3]]);
    }
    let axis = v / vn;
    Ok(vec![theta * axis[0], theta * axis[1], theta * axis[2]])
}

fn quat_exp(xi: &[f64]) -> [f64; 4] {
    // E_alpha = (1/2) * quaternion unit, so |xi| is the full rotation angle.
    let theta = (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt();
    let half = 0.5 * theta;
    let s = if theta < 1e-8 {
        0.5 - half * half / 12.0
    } else {
        half.sin() / theta
    };
    [half.cos(), s * xi[0], s * xi[1], s * xi[2]]
}

fn quat_log(q: &[f64; 4]) -> Result<Vec<f64>> {
    if q[0] <= -1.0 + 1e-9 {
        return Err(Error::LogDomain(format!(
            "quaternion scalar part {:.12} is not above -1 + 1e-9",
            q[0]
        )));
    }
    let vn = (q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    let theta = 2.0 * vn.atan2(q[0]);
    if vn < 1e-12 {
        return Ok(vec![2.0 * q[1], 2.0 * q[2], 2.0 * q[3]]);
    }
    let k = theta / vn;
    Ok(vec![k * q[1], k * q[2], k * q[3]])
}

fn quat_mul(p: &[f64; 4], q: &[f64; 4]) -> [f64; 4] {
    [
        p[0] * q[0] - p[1] * q[1] - p[2] * q[2] - p[3] * q[3],
        p[0] * q[1] + p[1] * q[0] + p[2] * q[3] - p[3] * q[2],
        p[0] * q[2] - p[1] * q[3] + p[2] * q[0] + p[3] * q[1],
        p[0] * q[3] + p[1] * q[2] - p[2] * q[1] + p[3] * q[0],
    ]
}

fn renorm_quat(q: [f64; 4]) -> [f64; 4] {
    let n = (q.iter().map(|v| v * v).sum::<f64>()).sqrt();
    [q[0] / n, q[1] / n, q[2] / n, q[3] / n]
}

/// Re-orthonormalize only when drift exceeds 1e-8; long solver loops otherwise
/// keep the cheap path.
fn renorm_so3(r: Matrix3<f64>) -> Matrix3<f64> {
    let drift = (r.transpose() * r - Matrix3::identity()).abs().max();
    if drift <= 1e-8 {
        return r;
    }
    // Modified Gram-Schmidt on the columns.
    let mut c0 = r.column(0).into_owned();
    c0 /= c0.norm();
    let mut c1 = r.column(1).into_owned();
    c1 -= c0 * c0.dot(&c1);
    c1 /= c1.norm();
    let c2 = c0.cross(&c1);
    Matrix3::from_columns(&[c0, c1, c2])
}

fn rotation_to_quat(r: &Matrix3<f64>) -> [f64; 4] {
    let tr = r[(0, 0)] + r[(1, 1)] + r[(2, 2)];
    let q = if tr > 0.0 {
        let s = (tr + 1.0).sqrt() * 2.0;
        [
            0.25 * s,
            (r[(2, 1)] - r[(1, 2)]) / s,
            (r[(0, 2)] - r[(2, 0)]) / s,
            (r[(1, 0)] - r[(0, 1)]) / s,
        ]
    } else if r[(0, 0)] > r[(1, 1)] && r[(0, 0)] > r[(2, 2)] {
        let s = (1.0 + r[(0, 0)] - r[(1, 1)] - r[(2, 2)]).sqrt() * 2.0;
        [
            (r[(2, 1)] - r[(1, 2)]) / s,
            0.25 * s,
            (r[(0, 1)] + r[(1, 0)]) / s,
            (r[(0, 2)] + r[(2, 0)]) / s,
        ]
    } else if r[(1, 1)] > r[(2, 2)] {
        let s = (1.0 + r[(1, 1)] - r[(0, 0)] - r[(2, 2)]).sqrt() * 2.0;
        [
            (r[(0, 2)] - r[(2, 0)]) / s,
            (r[(0, 1)] + r[(1, 0)]) / s,
            0.25 * s,
            (r[(1, 2)] + r[(2, 1)]) / s,
        ]
    } else {
        let s = (1.0 + r[(2, 2)] - r[(0, 0)] - r[(1, 1)]).sqrt() * 2.0;
        [
            (r[(1, 0)] - r[(0, 1)]) / s,
            (r[(0, 2)] + r[(2, 0)]) / s,
            (r[(1, 2)] + r[(2, 1)]) / s,
            0.25 * s,
        ]
    };
    // Fix the double-cover sign so the scalar part is non-negative.
    if q[0] < 0.0 {
        [-q[0], -q[1], -q[2], -q[3]]
    } else {
        q
    }
}
