//! Dynamically extended Type 2 (N = 2) system.
//!
//! Two integrators are placed in front of each thrust channel, so the
//! combined state is `X = (q, q̇, z11, z12, z13, z14)` with
//! `ż11 = z13`, `ż12 = z14`, `ż13 = v1`, `ż14 = v2`, and the plant is driven
//! by `u = (z11, z12, w)` where `w` is the moment channel. The pose output
//! then has relative degree 4 in every channel:
//!
//! `y⁽⁴⁾ = b(X) + A(X)·(v1, v2, w)`.
//!
//! All Lie derivatives are evaluated with nested dual numbers on the same
//! closed-form model used for simulation.

use serde::{Deserialize, Serialize};

use crate::dual::{seed, Dual, Scalar};
use crate::dynamics::{accel_s, GenState, InputVector, VehicleParams, VehicleType};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, Mat};

/// Length of the extended state vector.
pub const EXT_DIM: usize = 14;
const NQ: usize = 5;
const Z: usize = 2 * NQ;

/// Plant state plus the four compensator states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtendedState {
    pub plant: GenState,
    /// `(z11, z12, z13, z14)`: thrusts `u_1`, `u_Ns` and their rates.
    pub z: [f64; 4],
}

impl ExtendedState {
    /// Compensator initialized at hover: `z11 = z12 = g·m_tot/N`, rates zero.
    pub fn hover(params: &VehicleParams, plant: GenState) -> Self {
        let h = params.hover_thrust();
        ExtendedState {
            plant,
            z: [h, h, 0.0, 0.0],
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(EXT_DIM);
        x.extend_from_slice(&self.plant.q);
        x.extend_from_slice(&self.plant.qd);
        x.extend_from_slice(&self.z);
        x
    }

    pub fn from_slice(x: &[f64]) -> Result<Self> {
        check_dim("extended state", EXT_DIM, x.len())?;
        Ok(ExtendedState {
            plant: GenState {
                q: x[..NQ].to_vec(),
                qd: x[NQ..Z].to_vec(),
            },
            z: [x[Z], x[Z + 1], x[Z + 2], x[Z + 3]],
        })
    }

    /// Physical plant input `(u_1, lift, moment) = (z11, z12, w)`.
    pub fn physical_input(&self, moment: f64) -> InputVector {
        InputVector(vec![self.z[0], self.z[1], moment])
    }
}

/// Output derivatives `(y, ẏ, ÿ, y⁽³⁾)` for the channels `x`, `y`, `φ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutputDerivatives(pub [[f64; 4]; 3]);

/// `y⁽⁴⁾ = b + A·(v1, v2, w)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedDecoupling {
    pub a: nalgebra::Matrix3<f64>,
    pub b: nalgebra::Vector3<f64>,
}

impl ExtendedDecoupling {
    pub fn determinant(&self) -> f64 {
        self.a.determinant()
    }

    pub fn condition_number(&self) -> f64 {
        linalg::condition_number(&nalgebra::DMatrix::from_iterator(3, 3, self.a.iter().cloned()))
    }
}

pub(crate) fn check_supported(params: &VehicleParams) -> Result<()> {
    if params.vehicle_type != VehicleType::Type2 || params.n != 2 {
        return Err(Error::Unsupported(
            "the dynamic extension is defined for Type 2 vehicles with N = 2".into(),
        ));
    }
    Ok(())
}

fn accel<S: Scalar>(p: &VehicleParams, x: &[S], w: S) -> Option<Vec<S>> {
    accel_s(p, &x[..NQ], &x[NQ..Z], &[x[Z], x[Z + 1], w])
}

/// `Ẋ` for inputs `(v1, v2, w)`.
fn field<S: Scalar>(p: &VehicleParams, x: &[S], v: [S; 2], w: S) -> Option<Vec<S>> {
    let qdd = accel(p, x, w)?;
    let mut f = Vec::with_capacity(EXT_DIM);
    f.extend_from_slice(&x[NQ..Z]);
    f.extend(qdd);
    f.extend_from_slice(&[x[Z + 2], x[Z + 3], v[0], v[1]]);
    Some(f)
}

/// `ÿ`. The moment channel has no instantaneous effect on the pose (the
/// moment-actuated link has its CoM on the joint axis), so it is set to 0.
fn ydd<S: Scalar>(p: &VehicleParams, x: &[S]) -> Option<[S; 3]> {
    let a = accel(p, x, S::zero())?;
    Some([a[0], a[1], a[2]])
}

/// `y⁽³⁾ = L_F ÿ`, taken along the drift.
fn y3<S: Scalar>(p: &VehicleParams, x: &[S]) -> Option<[S; 3]> {
    let f0 = field(p, x, [S::zero(); 2], S::zero())?;
    let xs = seed(x, &f0);
    let r = ydd(p, &xs)?;
    Some([r[0].eps, r[1].eps, r[2].eps])
}

/// Derivative of `y⁽³⁾` along `dir`, plus its value.
fn y3_along(p: &VehicleParams, x: &[f64], dir: &[f64]) -> Option<([f64; 3], [f64; 3])> {
    let xs: Vec<Dual<f64>> = seed(x, dir);
    let r = y3(p, &xs)?;
    Some(([r[0].re, r[1].re, r[2].re], [r[0].eps, r[1].eps, r[2].eps]))
}

fn ext_vec(params: &VehicleParams, ext: &ExtendedState) -> Result<Vec<f64>> {
    check_supported(params)?;
    check_dim("q", NQ, ext.plant.q.len())?;
    check_dim("qd", NQ, ext.plant.qd.len())?;
    Ok(ext.to_vec())
}

/// Everything the tracking controller needs in one pass.
#[derive(Clone, Debug, PartialEq)]
pub struct LieData {
    pub derivs: OutputDerivatives,
    pub decoupling: ExtendedDecoupling,
}

pub(crate) fn lie_data_vec(params: &VehicleParams, x: &[f64]) -> Result<LieData> {
    let n = x.len();
    let f0 = field(params, x, [0.0; 2], 0.0).ok_or(Error::SingularMass)?;
    let (y3v, b) = y3_along(params, x, &f0).ok_or(Error::SingularMass)?;
    let acc = ydd(params, x).ok_or(Error::SingularMass)?;

    // q̈ is affine in w
    let dw = {
        let xs: Vec<Dual<f64>> = x.iter().map(|&v| Dual::cst(v)).collect();
        accel(params, &xs, Dual::variable(0.0)).ok_or(Error::SingularMass)?
    };
    let mut dir_w = vec![0.0; n];
    for k in 0..NQ {
        dir_w[NQ + k] = dw[k].eps;
    }
    let mut a = nalgebra::Matrix3::zeros();
    // y⁽³⁾ depends on z13, z14 only through the drift term ∂ÿ/∂z11·z13 +
    // ∂ÿ/∂z12·z14, so those columns are first derivatives of ÿ.
    for (c, slot) in [Z, Z + 1].into_iter().enumerate() {
        let xs: Vec<Dual<f64>> = x
            .iter()
            .enumerate()
            .map(|(i, &v)| Dual::new(v, if i == slot { 1.0 } else { 0.0 }))
            .collect();
        let col = ydd(params, &xs).ok_or(Error::SingularMass)?;
        for r in 0..3 {
            a[(r, c)] = col[r].eps;
        }
    }
    let (_, col) = y3_along(params, x, &dir_w).ok_or(Error::SingularMass)?;
    for r in 0..3 {
        a[(r, 2)] = col[r];
    }

    let mut d = [[0.0; 4]; 3];
    for i in 0..3 {
        d[i] = [x[i], x[NQ + i], acc[i], y3v[i]];
    }
    Ok(LieData {
        derivs: OutputDerivatives(d),
        decoupling: ExtendedDecoupling {
            a,
            b: nalgebra::Vector3::from(b),
        },
    })
}

/// Output derivatives and decoupling data at `ext`.
pub fn lie_data(params: &VehicleParams, ext: &ExtendedState) -> Result<LieData> {
    let x = ext_vec(params, ext)?;
    lie_data_vec(params, &x)
}

/// `(y, ẏ, ÿ, y⁽³⁾)` per pose channel.
pub fn output_derivatives(params: &VehicleParams, ext: &ExtendedState) -> Result<OutputDerivatives> {
    let x = ext_vec(params, ext)?;
    let acc = ydd(params, &x).ok_or(Error::SingularMass)?;
    let jerk = y3(params, &x).ok_or(Error::SingularMass)?;
    let mut d = [[0.0; 4]; 3];
    for i in 0..3 {
        d[i] = [x[i], x[NQ + i], acc[i], jerk[i]];
    }
    Ok(OutputDerivatives(d))
}

/// `(A, b)` with `y⁽⁴⁾ = b + A·(v1, v2, w)`.
pub fn extended_decoupling(params: &VehicleParams, ext: &ExtendedState) -> Result<ExtendedDecoupling> {
    Ok(lie_data(params, ext)?.decoupling)
}

/// `y⁽⁴⁾` for explicit inputs, by differentiating `y⁽³⁾` along the full
/// vector field. Independent of the `(A, b)` split.
pub fn fourth_derivative(params: &VehicleParams, ext: &ExtendedState, inputs: [f64; 3]) -> Result<[f64; 3]> {
    let x = ext_vec(params, ext)?;
    let f = field(params, &x, [inputs[0], inputs[1]], inputs[2]).ok_or(Error::SingularMass)?;
    Ok(y3_along(params, &x, &f).ok_or(Error::SingularMass)?.1)
}

/// Closed-loop extended vector field for given new inputs.
pub fn extended_field(params: &VehicleParams, ext: &ExtendedState, inputs: [f64; 3]) -> Result<Vec<f64>> {
    let x = ext_vec(params, ext)?;
    field(params, &x, [inputs[0], inputs[1]], inputs[2]).ok_or(Error::SingularMass)
}

/// Solve a 3×3 system on the generic eliminator (returns `None` if singular).
pub(crate) fn solve3(a: &nalgebra::Matrix3<f64>, rhs: [f64; 3]) -> Option<[f64; 3]> {
    let mut m = Mat::<f64>::zeros(3, 3);
    for r in 0..3 {
        for c in 0..3 {
            m.set(r, c, a[(r, c)]);
        }
    }
    let x = linalg::solve(&m, &rhs)?;
    Some([x[0], x[1], x[2]])
}
