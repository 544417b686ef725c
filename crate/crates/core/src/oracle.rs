//! Ground-truth equations of motion derived from kinematics and energies.
//!
//! Nothing here reuses the closed-form expressions of [`crate::dynamics`]:
//! body positions and orientations are written down directly, kinetic and
//! potential energy are assembled from them, and every derivative in the
//! Euler-Lagrange equation is taken with (nested) dual numbers. This is slow
//! and exact to rounding, which is all a reference needs to be.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dual::{Dual, Scalar};
use crate::dynamics::{ActuationOption, GenState, InputVector, VehicleParams, VehicleType};
use crate::error::{check_dim, Result};

/// Pose of one rigid body and its Jacobians with respect to `q`.
#[derive(Clone, Debug, PartialEq)]
pub struct BodyKinematics {
    pub mass: f64,
    pub inertia: f64,
    pub com: [f64; 2],
    pub angle: f64,
    /// `∂com/∂q`, 2 × (N+3).
    pub com_jacobian: DMatrix<f64>,
    /// `∂angle/∂q`.
    pub angle_jacobian: Vec<f64>,
}

struct Body<S> {
    mass: f64,
    inertia: f64,
    com: [S; 2],
    angle: S,
}

fn link_angle<S: Scalar>(p: &VehicleParams, q: &[S], j: usize) -> S {
    q[2] + q[3 + j] + p.theta_offset(j)
}

fn joint_point<S: Scalar>(p: &VehicleParams, q: &[S], j: usize) -> [S; 2] {
    let r = p.joint_lever(j);
    let (s, c) = q[2].sin_cos();
    [q[0] + c * r, q[1] + s * r]
}

fn bodies<S: Scalar>(p: &VehicleParams, q: &[S]) -> Vec<Body<S>> {
    let mut out = Vec::with_capacity(p.n + 1);
    out.push(Body {
        mass: p.m_b,
        inertia: p.i_b,
        com: [q[0], q[1]],
        angle: q[2],
    });
    for j in 0..p.n {
        let psi = link_angle(p, q, j);
        let joint = joint_point(p, q, j);
        // CoM sits d_j along the link's negative body y-axis: R(ψ)·(0, −d)
        let (s, c) = psi.sin_cos();
        let d = p.d[j];
        out.push(Body {
            mass: p.m_p,
            inertia: p.link_inertia(j),
            com: [joint[0] + s * d, joint[1] - c * d],
            angle: psi,
        });
    }
    out
}

/// Kinetic energy, with body velocities obtained by differentiating the body
/// poses along `q̇`.
fn kinetic<S: Scalar>(p: &VehicleParams, q: &[S], qd: &[S]) -> S {
    let moving: Vec<Dual<S>> = q.iter().zip(qd).map(|(&a, &b)| Dual::new(a, b)).collect();
    bodies(p, &moving)
        .iter()
        .fold(S::zero(), |acc, b| {
            let vx = b.com[0].eps;
            let vy = b.com[1].eps;
            let w = b.angle.eps;
            acc + (vx * vx + vy * vy) * (0.5 * b.mass) + w * w * (0.5 * b.inertia)
        })
}

fn potential<S: Scalar>(p: &VehicleParams, q: &[S]) -> S {
    bodies(p, q)
        .iter()
        .fold(S::zero(), |acc, b| acc + b.com[1] * (b.mass * p.gravity))
}

type D1 = Dual<f64>;
type D2 = Dual<Dual<f64>>;

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = 1.0;
    e
}

/// `∂f/∂q_i` for every `i` of a real-valued function of `q`.
fn gradient(n: usize, q: &[f64], f: impl Fn(&[D1]) -> D1) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let e = unit(n, i);
            let qs: Vec<D1> = q.iter().zip(&e).map(|(&a, &b)| Dual::new(a, b)).collect();
            f(&qs).eps
        })
        .collect()
}

/// Body poses and Jacobians at `q` (platform first, then links `0..N`).
pub fn body_kinematics(params: &VehicleParams, q: &[f64]) -> Result<Vec<BodyKinematics>> {
    check_dim("q", params.dof(), q.len())?;
    let n = params.dof();
    let base = bodies(params, q);
    let mut out: Vec<BodyKinematics> = base
        .iter()
        .map(|b| BodyKinematics {
            mass: b.mass,
            inertia: b.inertia,
            com: b.com,
            angle: b.angle,
            com_jacobian: DMatrix::zeros(2, n),
            angle_jacobian: vec![0.0; n],
        })
        .collect();
    for k in 0..n {
        let e = unit(n, k);
        let qs: Vec<D1> = q.iter().zip(&e).map(|(&a, &b)| Dual::new(a, b)).collect();
        for (dst, b) in out.iter_mut().zip(bodies(params, &qs)) {
            dst.com_jacobian[(0, k)] = b.com[0].eps;
            dst.com_jacobian[(1, k)] = b.com[1].eps;
            dst.angle_jacobian[k] = b.angle.eps;
        }
    }
    Ok(out)
}

/// `M_ij = ∂²T/∂q̇_i∂q̇_j`.
pub fn oracle_mass_matrix(params: &VehicleParams, q: &[f64]) -> Result<DMatrix<f64>> {
    check_dim("q", params.dof(), q.len())?;
    let n = params.dof();
    let qs: Vec<D2> = q.iter().map(|&v| D2::cst(v)).collect();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            // T is quadratic in q̇, so evaluating at q̇ = 0 loses nothing
            let qd: Vec<D2> = (0..n)
                .map(|k| {
                    let inner = Dual::new(0.0, if k == j { 1.0 } else { 0.0 });
                    let outer = Dual::new(if k == i { 1.0 } else { 0.0 }, 0.0);
                    Dual::new(inner, outer)
                })
                .collect();
            let v = kinetic(params, &qs, &qd).eps.eps;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// `h + g` from `d/dt ∂L/∂q̇ − ∂L/∂q` with the `M q̈` part removed:
/// `Σ_j ∂²T/∂q̇_i∂q_j q̇_j − ∂T/∂q_i + ∂U/∂q_i`.
pub fn oracle_bias(params: &VehicleParams, state: &GenState) -> Result<Vec<f64>> {
    check_dim("q", params.dof(), state.q.len())?;
    check_dim("qd", params.dof(), state.qd.len())?;
    let n = params.dof();
    let (q, qd) = (&state.q, &state.qd);

    // inner level: q moves along q̇; outer level: q̇_i
    let q2: Vec<D2> = q
        .iter()
        .zip(qd)
        .map(|(&a, &b)| Dual::new(Dual::new(a, b), Dual::cst(0.0)))
        .collect();
    let mixed: Vec<f64> = (0..n)
        .map(|i| {
            let qd2: Vec<D2> = qd
                .iter()
                .enumerate()
                .map(|(k, &v)| Dual::new(Dual::cst(v), Dual::cst(if k == i { 1.0 } else { 0.0 })))
                .collect();
            kinetic(params, &q2, &qd2).eps.eps
        })
        .collect();

    let qd1: Vec<D1> = qd.iter().map(|&v| D1::cst(v)).collect();
    let dtdq = gradient(n, q, |qs| kinetic(params, qs, &qd1));
    let dudq = gradient(n, q, |qs| potential(params, qs));
    Ok((0..n).map(|i| mixed[i] - dtdq[i] + dudq[i]).collect())
}

/// Generalized forces by virtual work: `Σ J_fᵀ f` for every thrust, `∂ψ/∂q·τ`
/// for pure moments, and `∂θ/∂q·(−b θ̇)` for joint friction.
pub fn oracle_generalized_forces(params: &VehicleParams, state: &GenState, u: &InputVector) -> Result<Vec<f64>> {
    check_dim("q", params.dof(), state.q.len())?;
    check_dim("qd", params.dof(), state.qd.len())?;
    check_dim("input", params.n_inputs(), u.0.len())?;
    let n = params.dof();
    let q = &state.q;
    let mut out = vec![0.0; n];

    for j in 0..params.n {
        let thrust = u.0[j];
        let psi = link_angle(params, q, j);
        let force = [-psi.sin() * thrust, psi.cos() * thrust];
        for k in 0..n {
            let e = unit(n, k);
            let qs: Vec<D1> = q.iter().zip(&e).map(|(&a, &b)| Dual::new(a, b)).collect();
            let pt = joint_point(params, &qs, j);
            out[k] += pt[0].eps * force[0] + pt[1].eps * force[1];
        }
        let b = params.friction(j);
        if b != 0.0 {
            let grad = gradient(n, q, |qs| qs[3 + j]);
            let torque = -b * state.qd[3 + j];
            for k in 0..n {
                out[k] += grad[k] * torque;
            }
        }
    }

    if params.vehicle_type == VehicleType::Type2 {
        let last = params.n - 1;
        let moment = u.0[params.n];
        let grad = match params.actuation_option {
            // differential thrust is a pure moment on link N
            ActuationOption::CoupledRotor => gradient(n, q, |qs| link_angle(params, qs, last)),
            // servo torque acts across the joint
            ActuationOption::Servo => gradient(n, q, |qs| qs[3 + last]),
        };
        let torque = match params.actuation_option {
            ActuationOption::CoupledRotor => params.a11 * moment,
            ActuationOption::Servo => moment,
        };
        for k in 0..n {
            out[k] += grad[k] * torque;
        }
    }
    Ok(out)
}

/// Kinetic and potential energy from the body poses.
pub fn oracle_energy(params: &VehicleParams, state: &GenState) -> Result<(f64, f64)> {
    check_dim("q", params.dof(), state.q.len())?;
    check_dim("qd", params.dof(), state.qd.len())?;
    Ok((kinetic(params, &state.q, &state.qd), potential(params, &state.q)))
}

/// Largest relative deviations between the closed-form model and the oracle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    pub states: usize,
    pub mass_matrix: f64,
    pub bias: f64,
    pub forces: f64,
}

impl OracleComparison {
    pub fn max(&self) -> f64 {
        self.mass_matrix.max(self.bias).max(self.forces)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Compare `M`, `h + g` and `Q` with the oracle at `n` seeded random states
/// and inputs.
pub fn compare_with_oracle(params: &VehicleParams, n: usize, seed: u64) -> Result<OracleComparison> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dof = params.dof();
    let mut out = OracleComparison {
        states: n,
        mass_matrix: 0.0,
        bias: 0.0,
        forces: 0.0,
    };
    for _ in 0..n {
        let state = GenState {
            q: (0..dof).map(|_| rng.random_range(-3.0..3.0)).collect(),
            qd: (0..dof).map(|_| rng.random_range(-2.0..2.0)).collect(),
        };
        let u = InputVector((0..params.n_inputs()).map(|_| rng.random_range(0.0..50.0)).collect());
        let m = crate::dynamics::mass_matrix(params, &state.q)?;
        let mo = oracle_mass_matrix(params, &state.q)?;
        let (h, g) = crate::dynamics::bias_forces(params, &state)?;
        let bo = oracle_bias(params, &state)?;
        let f = crate::dynamics::generalized_forces(params, &state, &u)?;
        let fo = oracle_generalized_forces(params, &state, &u)?;
        for i in 0..dof {
            for j in 0..dof {
                out.mass_matrix = out.mass_matrix.max(rel(m[(i, j)], mo[(i, j)]));
            }
            out.bias = out.bias.max(rel(h[i] + g[i], bo[i]));
            out.forces = out.forces.max(rel(f[i], fo[i]));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{equilibrium_input, equilibrium_state, EquilibriumPose};

    fn sample_state(p: &VehicleParams) -> GenState {
        let q: Vec<f64> = (0..p.dof()).map(|i| 0.3 * i as f64 - 0.4).collect();
        let qd: Vec<f64> = (0..p.dof()).map(|i| 0.7 - 0.25 * i as f64).collect();
        GenState { q, qd }
    }

    #[test]
    fn translational_block() {
        let p = VehicleParams::main_paper();
        let m = oracle_mass_matrix(&p, &sample_state(&p).q).unwrap();
        assert!((m[(0, 0)] - p.m_tot()).abs() < 1e-12);
        assert!((m[(1, 1)] - p.m_tot()).abs() < 1e-12);
        assert!(m[(0, 1)].abs() < 1e-12);
        assert_eq!(m, m.transpose());
    }

    #[test]
    fn zero_offsets_decouple_translation_from_joints() {
        let mut p = VehicleParams::type1(3);
        p.d = vec![0.0; 3];
        let m = oracle_mass_matrix(&p, &sample_state(&p).q).unwrap();
        for j in 3..p.dof() {
            assert!(m[(0, j)].abs() < 1e-15 && m[(1, j)].abs() < 1e-15);
        }
    }

    #[test]
    fn rest_bias_is_gravity_gradient() {
        let p = VehicleParams::type1(3);
        let mut s = sample_state(&p);
        s.qd.iter_mut().for_each(|v| *v = 0.0);
        let b = oracle_bias(&p, &s).unwrap();
        assert!(b[0].abs() < 1e-12);
        assert!((b[1] - p.gravity * p.m_tot()).abs() < 1e-10);
    }

    #[test]
    fn x_is_cyclic() {
        // shifting x changes nothing in the bias
        let p = VehicleParams::main_paper();
        let s = sample_state(&p);
        let mut s2 = s.clone();
        s2.q[0] += 3.0;
        let (a, b) = (oracle_bias(&p, &s).unwrap(), oracle_bias(&p, &s2).unwrap());
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn forces_translational_rows_are_world_thrust_sum() {
        let p = VehicleParams::main_paper();
        let s = sample_state(&p);
        let u = InputVector(vec![3.0, 5.0, 1.0]);
        let q = oracle_generalized_forces(&p, &s, &u).unwrap();
        let mut fx = 0.0;
        let mut fy = 0.0;
        for j in 0..p.n {
            let psi = s.q[2] + s.q[3 + j];
            fx -= u.0[j] * psi.sin();
            fy += u.0[j] * psi.cos();
        }
        assert!((q[0] - fx).abs() < 1e-12 && (q[1] - fy).abs() < 1e-12);
    }

    #[test]
    fn zero_input_at_rest_is_zero() {
        let p = VehicleParams::type1(3);
        let mut s = sample_state(&p);
        s.qd.iter_mut().for_each(|v| *v = 0.0);
        let q = oracle_generalized_forces(&p, &s, &InputVector(vec![0.0; 3])).unwrap();
        assert!(q.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn jacobians_match_central_differences() {
        let p = VehicleParams::type1(3);
        let q = sample_state(&p).q;
        let kin = body_kinematics(&p, &q).unwrap();
        let h = 1e-6;
        for k in 0..p.dof() {
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[k] += h;
            qm[k] -= h;
            let (kp, km) = (body_kinematics(&p, &qp).unwrap(), body_kinematics(&p, &qm).unwrap());
            for b in 0..kin.len() {
                for c in 0..2 {
                    let fd = (kp[b].com[c] - km[b].com[c]) / (2.0 * h);
                    let ad = kin[b].com_jacobian[(c, k)];
                    assert!((fd - ad).abs() <= 1e-5 * ad.abs().max(1.0), "body {b} c {c} k {k}");
                }
                let fd = (kp[b].angle - km[b].angle) / (2.0 * h);
                assert!((fd - kin[b].angle_jacobian[k]).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn energy_gradient_matches_central_differences() {
        let p = VehicleParams::main_paper();
        let s = sample_state(&p);
        let qd1: Vec<D1> = s.qd.iter().map(|&v| D1::cst(v)).collect();
        let grad = gradient(p.dof(), &s.q, |qs| kinetic(&p, qs, &qd1));
        let h = 1e-6;
        for k in 0..p.dof() {
            let mut sp = s.clone();
            let mut sm = s.clone();
            sp.q[k] += h;
            sm.q[k] -= h;
            let fd = (oracle_energy(&p, &sp).unwrap().0 - oracle_energy(&p, &sm).unwrap().0) / (2.0 * h);
            assert!((fd - grad[k]).abs() <= 1e-5 * grad[k].abs().max(1.0));
        }
    }

    #[test]
    fn equilibrium_balances_in_oracle_too() {
        let p = VehicleParams::main_paper();
        let s = equilibrium_state(&p, EquilibriumPose::new(1.0, 2.0, 0.7));
        let g = oracle_bias(&p, &s).unwrap();
        let q = oracle_generalized_forces(&p, &s, &equilibrium_input(&p)).unwrap();
        for (a, b) in g.iter().zip(&q) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
