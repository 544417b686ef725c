//! Closed-form Euler-Lagrange model of the planar multi-link vehicle.
//!
//! Kinematic convention (all signs below follow from it, and the `oracle`
//! module re-derives everything from the same kinematics):
//!
//! * platform CoM at `(x, y)`, orientation `φ`;
//! * joint `j` at body position `(r_j, 0)`, see [`VehicleParams::joint_lever`];
//! * link `j` has absolute angle `ψ_j = φ + θ_j + θ_{l_j}` and relative angle
//!   `β_j = θ_j + θ_{l_j}`; its CoM lies `d_j` below the joint along the link
//!   body y-axis;
//! * propeller thrust acts along the link body y-axis, `f·(-sin ψ, cos ψ)`,
//!   on a line through the joint, so it exerts no torque about the joint.
//!
//! The equations of motion read `M(q) q̈ + h(q, q̇) + g(q) = Q(q, q̇, u)`.

mod params;

pub use params::{ActuationOption, VehicleParams, VehicleType, STANDARD_GRAVITY};

use serde::{Deserialize, Serialize};

use crate::dual::Scalar;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, Mat};

/// Configuration and velocity, each of length `N + 3`:
/// `(x, y, φ, θ_1, …, θ_N)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenState {
    pub q: Vec<f64>,
    pub qd: Vec<f64>,
}

impl GenState {
    pub fn new(params: &VehicleParams, q: Vec<f64>, qd: Vec<f64>) -> Result<Self> {
        check_dim("q", params.dof(), q.len())?;
        check_dim("qd", params.dof(), qd.len())?;
        if q.iter().chain(&qd).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("state has non-finite entries".into()));
        }
        Ok(GenState { q, qd })
    }

    pub fn at_rest(q: Vec<f64>) -> Self {
        let qd = vec![0.0; q.len()];
        GenState { q, qd }
    }

    pub fn pose(&self) -> [f64; 3] {
        [self.q[0], self.q[1], self.q[2]]
    }
}

/// Actuator inputs.
///
/// Type 1: `(f_1, …, f_N)`. Type 2: `(f_1, …, f_{N-1}, lift, moment)` where
/// the lift channel is `u_Ns` (coupled rotor) or `f_N` (servo) and the moment
/// channel is `u_Nd` (coupled rotor) or the servo command `τ_a`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputVector(pub Vec<f64>);

impl InputVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Thrust of every lift-generating channel (`N` entries).
    pub fn lift_channels(&self, params: &VehicleParams) -> &[f64] {
        &self.0[..params.n]
    }

    /// Moment channel of a Type 2 vehicle.
    pub fn moment_channel(&self, params: &VehicleParams) -> Option<f64> {
        match params.vehicle_type {
            VehicleType::Type1 => None,
            VehicleType::Type2 => Some(self.0[params.n]),
        }
    }

    /// Check dimension, unidirectional thrust and (coupled rotor)
    /// `|u_Nd| ≤ u_Ns`.
    pub fn validate(&self, params: &VehicleParams) -> Result<()> {
        check_dim("input", params.n_inputs(), self.0.len())?;
        if self.0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite entry".into()));
        }
        if let Some(k) = self.lift_channels(params).iter().position(|&f| f < 0.0) {
            return Err(Error::InvalidInput(format!(
                "thrust channel {k} is negative ({})",
                self.0[k]
            )));
        }
        if params.vehicle_type == VehicleType::Type2
            && params.actuation_option == ActuationOption::CoupledRotor
        {
            let sum = self.0[params.n - 1];
            let diff = self.0[params.n];
            if diff.abs() > sum {
                return Err(Error::InvalidInput(format!(
                    "|u_Nd| = {} exceeds u_Ns = {sum}",
                    diff.abs()
                )));
            }
        }
        Ok(())
    }
}

/// Desired platform pose `(x_d, y_d, φ_d)` in m, m, rad.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumPose {
    pub x: f64,
    pub y: f64,
    pub phi: f64,
}

impl EquilibriumPose {
    pub fn new(x: f64, y: f64, phi: f64) -> Self {
        EquilibriumPose { x, y, phi }
    }

    /// `φ_d` away from `π/2 + kπ` by more than `tol`.
    pub fn admissible(&self, tol: f64) -> bool {
        let r = (self.phi - std::f64::consts::FRAC_PI_2).rem_euclid(std::f64::consts::PI);
        r.min(std::f64::consts::PI - r) > tol
    }
}

struct LinkTrig<S> {
    s_psi: S,
    c_psi: S,
    s_beta: S,
    c_beta: S,
}

fn link_trig<S: Scalar>(p: &VehicleParams, q: &[S]) -> Vec<LinkTrig<S>> {
    (0..p.n)
        .map(|j| {
            let beta = q[3 + j] + p.theta_offset(j);
            let psi = q[2] + beta;
            let (s_psi, c_psi) = psi.sin_cos();
            let (s_beta, c_beta) = beta.sin_cos();
            LinkTrig {
                s_psi,
                c_psi,
                s_beta,
                c_beta,
            }
        })
        .collect()
}

fn mass_matrix_from<S: Scalar>(p: &VehicleParams, sphi: S, cphi: S, trig: &[LinkTrig<S>]) -> Mat<S> {
    let n = p.dof();
    let mut m = Mat::zeros(n, n);
    let m_tot = p.m_tot();
    m.set(0, 0, S::cst(m_tot));
    m.set(1, 1, S::cst(m_tot));
    let mut m02 = S::zero();
    let mut m12 = S::zero();
    let mut m22 = S::cst(p.i_b);
    for (j, t) in trig.iter().enumerate() {
        let r = p.joint_lever(j);
        let k1 = p.k1(j);
        let k2 = p.k2(j);
        let k4 = p.k4(j);
        let col = 3 + j;
        m02 += t.c_psi * k1 - sphi * (p.m_p * r);
        m12 += t.s_psi * k1 + cphi * (p.m_p * r);
        m22 += t.s_beta * (2.0 * k4) + (p.m_p * r * r + k2);
        m.set_sym(0, col, t.c_psi * k1);
        m.set_sym(1, col, t.s_psi * k1);
        m.set_sym(2, col, t.s_beta * k4 + k2);
        m.set(col, col, S::cst(k2));
    }
    m.set_sym(0, 2, m02);
    m.set_sym(1, 2, m12);
    m.set(2, 2, m22);
    m
}

fn bias_from<S: Scalar>(
    p: &VehicleParams,
    qd: &[S],
    sphi: S,
    cphi: S,
    trig: &[LinkTrig<S>],
) -> (Vec<S>, Vec<S>) {
    let n = p.dof();
    let mut h = vec![S::zero(); n];
    let mut g = vec![S::zero(); n];
    let grav = p.gravity;
    let phid = qd[2];
    let phid2 = phid * phid;
    g[1] = S::cst(grav * p.m_tot());
    for (j, t) in trig.iter().enumerate() {
        let r = p.joint_lever(j);
        let k1 = p.k1(j);
        let k4 = p.k4(j);
        let thd = qd[3 + j];
        let psid = phid + thd;
        let psid2 = psid * psid;
        let mr = p.m_p * r;
        h[0] -= cphi * phid2 * mr + t.s_psi * psid2 * k1;
        h[1] += t.c_psi * psid2 * k1 - sphi * phid2 * mr;
        h[2] += t.c_beta * thd * (phid * 2.0 + thd) * k4;
        h[3 + j] = -(t.c_beta * phid2 * k4);
        g[2] += (cphi * mr + t.s_psi * k1) * grav;
        g[3 + j] = t.s_psi * (grav * k1);
    }
    (h, g)
}

fn forces_from<S: Scalar>(p: &VehicleParams, qd: &[S], u: &[S], trig: &[LinkTrig<S>]) -> Vec<S> {
    let n = p.dof();
    let mut q = vec![S::zero(); n];
    for (j, t) in trig.iter().enumerate() {
        let f = u[j];
        q[0] -= f * t.s_psi;
        q[1] += f * t.c_psi;
        q[2] += f * t.c_beta * p.joint_lever(j);
        q[3 + j] = -(qd[3 + j] * p.friction(j));
    }
    if p.vehicle_type == VehicleType::Type2 {
        let last = 3 + p.n - 1;
        let moment = u[p.n];
        match p.actuation_option {
            ActuationOption::CoupledRotor => {
                q[2] += moment * p.a11;
                q[last] += moment * p.a11;
            }
            ActuationOption::Servo => {
                q[last] += moment;
            }
        }
    }
    q
}

/// Generic mass matrix.
pub(crate) fn mass_matrix_s<S: Scalar>(p: &VehicleParams, q: &[S]) -> Mat<S> {
    let trig = link_trig(p, q);
    let (sphi, cphi) = q[2].sin_cos();
    mass_matrix_from(p, sphi, cphi, &trig)
}

/// Generic `(h, g)`.
pub(crate) fn bias_s<S: Scalar>(p: &VehicleParams, q: &[S], qd: &[S]) -> (Vec<S>, Vec<S>) {
    let trig = link_trig(p, q);
    let (sphi, cphi) = q[2].sin_cos();
    bias_from(p, qd, sphi, cphi, &trig)
}

/// Generic generalized forces.
pub(crate) fn forces_s<S: Scalar>(p: &VehicleParams, q: &[S], qd: &[S], u: &[S]) -> Vec<S> {
    let trig = link_trig(p, q);
    forces_from(p, qd, u, &trig)
}

/// Generic forward dynamics without disturbance. `None` if the mass matrix
/// is numerically singular.
pub(crate) fn accel_s<S: Scalar>(p: &VehicleParams, q: &[S], qd: &[S], u: &[S]) -> Option<Vec<S>> {
    let trig = link_trig(p, q);
    let (sphi, cphi) = q[2].sin_cos();
    let m = mass_matrix_from(p, sphi, cphi, &trig);
    let (h, g) = bias_from(p, qd, sphi, cphi, &trig);
    let f = forces_from(p, qd, u, &trig);
    let n = p.dof();
    let rhs: Vec<S> = (0..n).map(|i| f[i] - h[i] - g[i]).collect();
    if !p.has_servo() {
        return linalg::solve(&m, &rhs);
    }
    // The servo joint follows its acceleration command; its own EL row only
    // determines the (unmodelled) servo torque and is dropped.
    let last = n - 1;
    let cmd = u[p.n];
    let mut mr = Mat::zeros(last, last);
    let mut br = Vec::with_capacity(last);
    for r in 0..last {
        for c in 0..last {
            mr.set(r, c, m.get(r, c));
        }
        br.push(rhs[r] - m.get(r, last) * cmd);
    }
    let mut acc = linalg::solve(&mr, &br)?;
    acc.push(cmd);
    Some(acc)
}

fn check_q(params: &VehicleParams, q: &[f64]) -> Result<()> {
    check_dim("q", params.dof(), q.len())
}

fn check_state(params: &VehicleParams, state: &GenState) -> Result<()> {
    check_dim("q", params.dof(), state.q.len())?;
    check_dim("qd", params.dof(), state.qd.len())
}

/// Symmetric `(N+3)×(N+3)` generalized mass matrix `M(q)`.
pub fn mass_matrix(params: &VehicleParams, q: &[f64]) -> Result<nalgebra::DMatrix<f64>> {
    check_q(params, q)?;
    Ok(mass_matrix_s(params, q).to_real())
}

/// Coriolis/centrifugal vector `h` and gravity vector `g`.
pub fn bias_forces(params: &VehicleParams, state: &GenState) -> Result<(Vec<f64>, Vec<f64>)> {
    check_state(params, state)?;
    Ok(bias_s(params, &state.q, &state.qd))
}

/// Generalized force vector `Q(q, q̇, u)` including passive-joint friction.
///
/// Servo vehicles carry the servo command in row `N+3`; the servo row is
/// replaced by the acceleration constraint in [`forward_dynamics`].
pub fn generalized_forces(params: &VehicleParams, state: &GenState, u: &InputVector) -> Result<Vec<f64>> {
    check_state(params, state)?;
    check_dim("input", params.n_inputs(), u.0.len())?;
    Ok(forces_s(params, &state.q, &state.qd, &u.0))
}

/// `q̈ = M⁻¹(Q − h − g)` with `d_ext` added to the three pose accelerations.
pub fn forward_dynamics(
    params: &VehicleParams,
    state: &GenState,
    u: &InputVector,
    d_ext: [f64; 3],
) -> Result<Vec<f64>> {
    check_state(params, state)?;
    check_dim("input", params.n_inputs(), u.0.len())?;
    let mut acc = accel_s(params, &state.q, &state.qd, &u.0).ok_or(Error::SingularMass)?;
    for k in 0..3 {
        acc[k] += d_ext[k];
    }
    Ok(acc)
}

/// Every lift channel at `g·m_tot/N`, moment channel at zero.
pub fn equilibrium_input(params: &VehicleParams) -> InputVector {
    let hover = params.hover_thrust();
    let mut u = vec![hover; params.n];
    if params.vehicle_type == VehicleType::Type2 {
        u.push(0.0);
    }
    InputVector(u)
}

/// Rest state with every propeller vertical: `θ_j = −φ_d − θ_{l_j}`.
pub fn equilibrium_state(params: &VehicleParams, pose: EquilibriumPose) -> GenState {
    let mut q = vec![pose.x, pose.y, pose.phi];
    q.extend((0..params.n).map(|j| -pose.phi - params.theta_offset(j)));
    GenState::at_rest(q)
}

/// Membership in the equilibrium state set: rest, and every joint at
/// `−φ − θ_{l_j}` within `tol`.
pub fn in_equilibrium_set(params: &VehicleParams, state: &GenState, tol: f64) -> bool {
    if state.q.len() != params.dof() || state.qd.len() != params.dof() {
        return false;
    }
    let phi = state.q[2];
    state.qd.iter().all(|v| v.abs() <= tol)
        && (0..params.n).all(|j| (state.q[3 + j] + phi + params.theta_offset(j)).abs() <= tol)
}

/// `g(q) − Q(q, 0, u)`; zero exactly at static equilibria.
pub fn static_balance_residual(params: &VehicleParams, q: &[f64], u: &InputVector) -> Result<Vec<f64>> {
    check_q(params, q)?;
    check_dim("input", params.n_inputs(), u.0.len())?;
    let qd = vec![0.0; params.dof()];
    let (_, g) = bias_s(params, q, &qd);
    let f = forces_s(params, q, &qd, &u.0);
    Ok(g.iter().zip(&f).map(|(a, b)| a - b).collect())
}

/// `(T, U)`: kinetic energy `½ q̇ᵀ M q̇` and gravitational potential of all
/// bodies (zero at `y = 0`).
pub fn total_energy(params: &VehicleParams, state: &GenState) -> Result<(f64, f64)> {
    check_state(params, state)?;
    let m = mass_matrix_s(params, &state.q);
    let mq = m.mul_vec(&state.qd);
    let t = 0.5 * mq.iter().zip(&state.qd).map(|(a, b)| a * b).sum::<f64>();
    let com = center_of_mass(params, &state.q);
    Ok((t, params.gravity * params.m_tot() * com[1]))
}

/// World position of the whole-vehicle CoM.
pub fn center_of_mass(params: &VehicleParams, q: &[f64]) -> [f64; 2] {
    let (sphi, cphi) = q[2].sin_cos();
    let mut sx = params.m_b * q[0];
    let mut sy = params.m_b * q[1];
    for j in 0..params.n {
        let psi = q[2] + q[3 + j] + params.theta_offset(j);
        let r = params.joint_lever(j);
        let d = params.d[j];
        sx += params.m_p * (q[0] + r * cphi + d * psi.sin());
        sy += params.m_p * (q[1] + r * sphi - d * psi.cos());
    }
    [sx / params.m_tot(), sy / params.m_tot()]
}
