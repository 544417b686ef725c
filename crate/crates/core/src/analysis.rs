//! Omnidirectionality, decoupling-matrix rank analysis and zero dynamics.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dual::{Dual, Scalar};
use crate::dynamics::{
    accel_s, equilibrium_input, generalized_forces, ActuationOption, GenState, InputVector, VehicleParams,
    VehicleType,
};
pub use crate::extended::{extended_decoupling, ExtendedDecoupling};
use crate::error::{check_dim, Error, Result};
use crate::extended::{check_supported, ExtendedState};
use crate::linalg::{self, Mat};

/// Relative singular-value threshold for numerical rank.
pub const RANK_TOL: f64 = 1e-9;

/// Planar wrench at the platform CoM.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Wrench {
    pub fx: f64,
    pub fy: f64,
    pub m: f64,
}

/// First three rows of the generalized force vector.
pub fn wrench(params: &VehicleParams, state: &GenState, u: &InputVector) -> Result<Wrench> {
    let q = generalized_forces(params, state, u)?;
    Ok(Wrench {
        fx: q[0],
        fy: q[1],
        m: q[2],
    })
}

/// `∂W/∂u`, 3 × (number of inputs).
pub fn wrench_jacobian(params: &VehicleParams, q: &[f64]) -> Result<DMatrix<f64>> {
    check_dim("q", params.dof(), q.len())?;
    let mut j = DMatrix::zeros(3, params.n_inputs());
    for k in 0..params.n {
        let beta = q[3 + k] + params.theta_offset(k);
        let psi = q[2] + beta;
        j[(0, k)] = -psi.sin();
        j[(1, k)] = psi.cos();
        j[(2, k)] = params.joint_lever(k) * beta.cos();
    }
    if params.vehicle_type == VehicleType::Type2 && params.actuation_option == ActuationOption::CoupledRotor {
        j[(2, params.n)] = params.a11;
    }
    Ok(j)
}

/// Full allocation matrix of a Type 2 vehicle: `∂W` with respect to every
/// lift channel and to the actuated joint angle `θ_N`, at lift `u`.
pub fn full_allocation_matrix(params: &VehicleParams, q: &[f64], u: &InputVector) -> Result<DMatrix<f64>> {
    check_dim("q", params.dof(), q.len())?;
    check_dim("input", params.n_inputs(), u.0.len())?;
    if params.vehicle_type != VehicleType::Type2 {
        return Err(Error::Unsupported("the full allocation matrix is defined for Type 2".into()));
    }
    let jw = wrench_jacobian(params, q)?;
    let mut fa = DMatrix::zeros(3, params.n + 1);
    for k in 0..params.n {
        fa.set_column(k, &jw.column(k));
    }
    let last = params.n - 1;
    let beta = q[3 + last] + params.theta_offset(last);
    let psi = q[2] + beta;
    let lift = u.0[last];
    fa[(0, params.n)] = -lift * psi.cos();
    fa[(1, params.n)] = -lift * psi.sin();
    fa[(2, params.n)] = -lift * params.joint_lever(last) * beta.sin();
    Ok(fa)
}

/// First three rows of `M⁻¹ ∂Q/∂u`, i.e. `∂(ẍ, ÿ, φ̈)/∂u`.
pub fn decoupling_matrix(params: &VehicleParams, state: &GenState) -> Result<DMatrix<f64>> {
    check_dim("q", params.dof(), state.q.len())?;
    check_dim("qd", params.dof(), state.qd.len())?;
    let m = params.n_inputs();
    let q: Vec<Dual<f64>> = state.q.iter().map(|&v| Dual::cst(v)).collect();
    let qd: Vec<Dual<f64>> = state.qd.iter().map(|&v| Dual::cst(v)).collect();
    let base = equilibrium_input(params);
    let mut d = DMatrix::zeros(3, m);
    for c in 0..m {
        // q̈ is affine in u, so the base point does not matter
        let u: Vec<Dual<f64>> = (0..m)
            .map(|i| Dual::new(base.0[i], if i == c { 1.0 } else { 0.0 }))
            .collect();
        let acc = accel_s(params, &q, &qd, &u).ok_or(Error::SingularMass)?;
        for r in 0..3 {
            d[(r, c)] = acc[r].eps;
        }
    }
    Ok(d)
}

/// Omnidirectionality class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OmniKind {
    NotOmnidirectional,
    PartiallyOmnidirectional,
    FullyOmnidirectional,
}

/// Classification plus the evidence behind it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmniClass {
    pub kind: OmniKind,
    /// Rank of the matrix used for the actuation condition.
    pub rank: usize,
    pub actuation_condition: bool,
    pub feasible_directions: usize,
    pub directions: usize,
    /// Smallest per-direction thrust margin (normalized by `f_max`; negative
    /// when infeasible).
    pub worst_margin: f64,
}

/// Magnitude of the demanded net force, as a fraction of the weight.
pub const OMNI_FORCE_FRACTION: f64 = 0.5;

/// Thrust margin of the zero-moment allocation for one demanded force.
fn direction_margin(params: &VehicleParams, q: &[f64], target: [f64; 2]) -> f64 {
    let fmax = params.f_max;
    let phi = q[2];
    let n = params.n;
    let dirs: Vec<[f64; 2]> = (0..n)
        .map(|j| {
            let psi = phi + q[3 + j] + params.theta_offset(j);
            [-psi.sin(), psi.cos()]
        })
        .collect();
    let e_phi = [-phi.sin(), phi.cos()];
    let dot = |a: [f64; 2], b: [f64; 2]| a[0] * b[0] + a[1] * b[1];
    let cbeta: Vec<f64> = dirs.iter().map(|d| dot(*d, e_phi)).collect();

    match params.vehicle_type {
        VehicleType::Type1 => {
            // min-norm thrusts realizing (target, 0)
            let mut j = DMatrix::zeros(3, n);
            for k in 0..n {
                j[(0, k)] = dirs[k][0];
                j[(1, k)] = dirs[k][1];
                j[(2, k)] = params.joint_lever(k) * cbeta[k];
            }
            let w = nalgebra::DVector::from_vec(vec![target[0], target[1], 0.0]);
            let Ok(pinv) = j.clone().pseudo_inverse(1e-12) else {
                return -1.0;
            };
            let u = &pinv * &w;
            let resid = (&j * &u - &w).norm();
            if resid > 1e-9 * w.norm().max(1.0) {
                return -resid / fmax;
            }
            u.iter().map(|&f| f.min(fmax - f)).fold(f64::INFINITY, f64::min) / fmax
        }
        VehicleType::Type2 => {
            // passive thrusts f_0..f_{N-2}; the actuated link supplies the
            // remaining force vector v, whose direction is free.
            let last = n - 1;
            let rn = params.joint_lever(last);
            let coef: Vec<f64> = (0..last).map(|j| (params.joint_lever(j) - rn) * cbeta[j]).collect();
            let rhs = -rn * dot(target, e_phi);
            let eval = |f: &[f64]| -> f64 {
                let mut v = target;
                for (j, &fj) in f.iter().enumerate() {
                    v[0] -= fj * dirs[j][0];
                    v[1] -= fj * dirs[j][1];
                }
                let lift = v[0].hypot(v[1]);
                f.iter().map(|&x| x.min(fmax - x)).fold(fmax - lift, f64::min) / fmax
            };
            if last == 0 {
                // single link: zero moment needs r_N (v·e_φ) = 0
                let need = rn * dot(target, e_phi);
                return if need.abs() > 1e-9 * fmax { -1.0 } else { eval(&[]) };
            }
            // grid over all passive thrusts but the last, solve for the last
            let free = last - 1;
            let steps = if free == 0 { 1 } else { 21usize };
            let mut best = f64::NEG_INFINITY;
            let total = steps.pow(free as u32);
            for idx in 0..total {
                let mut f = vec![0.0; last];
                let mut k = idx;
                let mut acc = rhs;
                for j in 0..free {
                    f[j] = fmax * (k % steps) as f64 / (steps - 1) as f64;
                    k /= steps;
                    acc -= coef[j] * f[j];
                }
                let c = coef[last - 1];
                if c.abs() < 1e-12 {
                    if acc.abs() > 1e-9 * fmax {
                        continue;
                    }
                    f[last - 1] = 0.0;
                } else {
                    f[last - 1] = acc / c;
                }
                best = best.max(eval(&f));
            }
            if best == f64::NEG_INFINITY {
                -1.0
            } else {
                best
            }
        }
    }
}

/// Classify omnidirectionality at configuration `q` over a grid of
/// demanded force directions.
pub fn omni_classify(params: &VehicleParams, q: &[f64], direction_grid_size: usize) -> Result<OmniClass> {
    check_dim("q", params.dof(), q.len())?;
    if direction_grid_size < 8 {
        return Err(Error::InvalidInput(format!(
            "direction grid needs at least 8 entries, got {direction_grid_size}"
        )));
    }
    let rank = match params.vehicle_type {
        VehicleType::Type1 => linalg::numerical_rank(&wrench_jacobian(params, q)?, RANK_TOL),
        VehicleType::Type2 => {
            linalg::numerical_rank(&full_allocation_matrix(params, q, &equilibrium_input(params))?, RANK_TOL)
        }
    };
    let actuation_condition = rank == 3;
    let weight = params.gravity * params.m_tot();
    let mut feasible = 0;
    let mut worst = f64::INFINITY;
    for k in 0..direction_grid_size {
        let alpha = std::f64::consts::TAU * k as f64 / direction_grid_size as f64;
        let target = [
            OMNI_FORCE_FRACTION * weight * alpha.cos(),
            weight * (1.0 + OMNI_FORCE_FRACTION * alpha.sin()),
        ];
        let m = direction_margin(params, q, target);
        if m >= 0.0 {
            feasible += 1;
        }
        worst = worst.min(m);
    }
    let kind = if !actuation_condition || feasible == 0 {
        OmniKind::NotOmnidirectional
    } else if feasible == direction_grid_size {
        OmniKind::FullyOmnidirectional
    } else {
        OmniKind::PartiallyOmnidirectional
    };
    Ok(OmniClass {
        kind,
        rank,
        actuation_condition,
        feasible_directions: feasible,
        directions: direction_grid_size,
        worst_margin: worst,
    })
}

/// Internal state of the passive link: `(θ_1, θ̇_1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroDynState {
    pub eta1: f64,
    pub eta2: f64,
}

impl ZeroDynState {
    pub fn new(eta1: f64, eta2: f64) -> Self {
        ZeroDynState { eta1, eta2 }
    }
}

/// `(η̇1, η̇2) = (η2, l (cos η1 − cos φ_d))`.
pub fn zero_dynamics_simplified_rhs(_params: &VehicleParams, phi_d: f64, z: ZeroDynState, l: f64) -> ZeroDynState {
    ZeroDynState {
        eta1: z.eta2,
        eta2: l * (z.eta1.cos() - phi_d.cos()),
    }
}

/// Eigenvalues of the simplified zero dynamics linearized at `η1 = −φ_d`.
/// Returns `(λ₊, λ₋)` when real (`l sin φ_d > 0`, saddle) or `None`
/// (centre).
pub fn simplified_linearization(phi_d: f64, l: f64) -> Option<(f64, f64)> {
    let k = l * phi_d.sin();
    (k >= 0.0).then(|| (k.sqrt(), -k.sqrt()))
}

const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 50;

/// Unknowns `(θ_2, θ̇_2, z11, z12, z13, z14)` → extended state with the pose
/// pinned at `(x_d, y_d, φ_d)` and at rest.
fn pinned_state<S: Scalar>(pose: [f64; 3], z: ZeroDynState, u: &[S]) -> Vec<S> {
    vec![
        S::cst(pose[0]),
        S::cst(pose[1]),
        S::cst(pose[2]),
        S::cst(z.eta1),
        u[0],
        S::zero(),
        S::zero(),
        S::zero(),
        S::cst(z.eta2),
        u[1],
        u[2],
        u[3],
        u[4],
        u[5],
    ]
}

/// `(ÿ, y⁽³⁾)` as a 6-vector.
fn pinned_residual<S: Scalar>(params: &VehicleParams, x: &[S]) -> Option<Vec<S>> {
    let qdd = accel_s(params, &x[..5], &x[5..10], &[x[10], x[11], S::zero()])?;
    let mut drift: Vec<S> = x[5..10].to_vec();
    drift.extend(qdd.iter().cloned());
    drift.extend_from_slice(&[x[12], x[13], S::zero(), S::zero()]);
    let xs = crate::dual::seed(x, &drift);
    let jerk = accel_s(params, &xs[..5], &xs[5..10], &[xs[10], xs[11], Dual::cst(0.0)])?;
    Some(vec![qdd[0], qdd[1], qdd[2], jerk[0].eps, jerk[1].eps, jerk[2].eps])
}

/// Extended state on the zero-output manifold: pose pinned at `pose` with
/// `ẏ = ÿ = y⁽³⁾ = 0` and internal state `z`, found by damped Newton from
/// the equilibrium fiber.
pub fn zero_output_state(params: &VehicleParams, pose: [f64; 3], z: ZeroDynState) -> Result<ExtendedState> {
    check_supported(params)?;
    let hover = params.hover_thrust();
    let mut u = vec![-pose[2] - params.theta_offset(1), 0.0, hover, hover, 0.0, 0.0];
    let norm = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let eval = |u: &[f64]| -> Result<Vec<f64>> {
        pinned_residual(params, &pinned_state(pose, z, u)).ok_or(Error::SingularMass)
    };
    let mut r = eval(&u)?;
    let mut iterations = 0;
    while norm(&r) > NEWTON_TOL {
        if iterations == NEWTON_MAX_ITER {
            return Err(Error::NewtonDiverged {
                residual: norm(&r),
                iterations,
            });
        }
        iterations += 1;
        let mut jac = Mat::<f64>::zeros(6, 6);
        for c in 0..6 {
            let ud: Vec<Dual<f64>> = u
                .iter()
                .enumerate()
                .map(|(i, &v)| Dual::new(v, if i == c { 1.0 } else { 0.0 }))
                .collect();
            let rd = pinned_residual(params, &pinned_state(pose, z, &ud)).ok_or(Error::SingularMass)?;
            for (row, v) in rd.iter().enumerate() {
                jac.set(row, c, v.eps);
            }
        }
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let step = linalg::solve(&jac, &neg).ok_or(Error::NewtonDiverged {
            residual: norm(&r),
            iterations,
        })?;
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(&step).map(|(a, b)| a + lambda * b).collect();
            let rt = eval(&trial)?;
            if norm(&rt) < norm(&r) || lambda < 1e-6 {
                u = trial;
                r = rt;
                break;
            }
            lambda *= 0.5;
        }
    }
    ExtendedState::from_slice(&pinned_state(pose, z, &u))
}

/// Internal dynamics with the pose pinned at `(0, 0, φ_d)`: returns
/// `(η2, θ̈_1)`.
pub fn zero_dynamics_general_rhs(params: &VehicleParams, phi_d: f64, z: ZeroDynState) -> Result<ZeroDynState> {
    let ext = zero_output_state(params, [0.0, 0.0, phi_d], z)?;
    let x = ext.to_vec();
    let qdd = accel_s(params, &x[..5], &x[5..10], &[x[10], x[11], 0.0]).ok_or(Error::SingularMass)?;
    Ok(ZeroDynState {
        eta1: z.eta2,
        eta2: qdd[3],
    })
}

/// RK4 trajectory of `η̇ = rhs(η)` sampled every `dt`.
pub fn integrate_zero_dynamics<F>(mut rhs: F, z0: ZeroDynState, t_final: f64, dt: f64) -> Result<Vec<ZeroDynState>>
where
    F: FnMut(ZeroDynState) -> Result<ZeroDynState>,
{
    let steps = (t_final / dt).round() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(z0);
    let mut f = |_t: f64, x: &[f64]| -> Result<Vec<f64>> {
        let d = rhs(ZeroDynState::new(x[0], x[1]))?;
        Ok(vec![d.eta1, d.eta2])
    };
    let mut x = vec![z0.eta1, z0.eta2];
    for i in 0..steps {
        x = crate::simulate::rk4(&mut f, i as f64 * dt, &x, dt)?;
        out.push(ZeroDynState::new(x[0], x[1]));
    }
    Ok(out)
}

/// Least-squares `l` from `η̈ ≈ l (cos η1 − cos φ_d)` over the given
/// samples of the general zero dynamics. Returns 0 when the regressor
/// vanishes.
pub fn fit_simplified_constant(params: &VehicleParams, phi_d: f64, samples: &[ZeroDynState]) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for &z in samples {
        let d = zero_dynamics_general_rhs(params, phi_d, z)?;
        let reg = z.eta1.cos() - phi_d.cos();
        num += reg * d.eta2;
        den += reg * reg;
    }
    Ok(if den > 0.0 { num / den } else { 0.0 })
}

/// Rank, determinant and conditioning summary at one state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub wrench_jacobian_rank: usize,
    pub decoupling_rank: usize,
    pub full_allocation_rank: Option<usize>,
    pub full_allocation_det: Option<f64>,
    pub extended_det: Option<f64>,
    pub extended_condition: Option<f64>,
}

/// Evaluate every rank claim at a hover state.
pub fn rank_report(params: &VehicleParams, state: &GenState) -> Result<RankReport> {
    let jw = wrench_jacobian(params, &state.q)?;
    let d = decoupling_matrix(params, state)?;
    let (fa_rank, fa_det) = if params.vehicle_type == VehicleType::Type2 {
        let fa = full_allocation_matrix(params, &state.q, &equilibrium_input(params))?;
        let det = (fa.nrows() == fa.ncols()).then(|| fa.determinant());
        (Some(linalg::numerical_rank(&fa, RANK_TOL)), det)
    } else {
        (None, None)
    };
    let (ext_det, ext_cond) = if check_supported(params).is_ok() {
        let dec = extended_decoupling(params, &ExtendedState::hover(params, state.clone()))?;
        (Some(dec.determinant()), Some(dec.condition_number()))
    } else {
        (None, None)
    };
    Ok(RankReport {
        wrench_jacobian_rank: linalg::numerical_rank(&jw, RANK_TOL),
        decoupling_rank: linalg::numerical_rank(&d, RANK_TOL),
        full_allocation_rank: fa_rank,
        full_allocation_det: fa_det,
        extended_det: ext_det,
        extended_condition: ext_cond,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{equilibrium_state, EquilibriumPose};

    #[test]
    fn type1_rank_two() {
        let p = VehicleParams::type1(3);
        let s = equilibrium_state(&p, EquilibriumPose::new(1.0, 2.0, 0.4));
        let r = rank_report(&p, &s).unwrap();
        assert_eq!(r.wrench_jacobian_rank, 2);
        assert_eq!(r.decoupling_rank, 2);
    }

    #[test]
    fn type2_moment_column_and_decoupling() {
        let p = VehicleParams::main_paper();
        let s = equilibrium_state(&p, EquilibriumPose::new(1.0, 2.0, 0.4));
        let jw = wrench_jacobian(&p, &s.q).unwrap();
        assert_eq!(jw[(2, 2)], p.a11);
        let d = decoupling_matrix(&p, &s).unwrap();
        assert!(d.column(2).norm() < 1e-9);
        assert_eq!(linalg::numerical_rank(&d, RANK_TOL), 2);
    }

    #[test]
    fn wrench_jacobian_matches_forces() {
        let p = VehicleParams::main_paper();
        let s = GenState::at_rest(vec![0.0, 0.0, 0.3, -0.2, 0.5]);
        let jw = wrench_jacobian(&p, &s.q).unwrap();
        let u = InputVector(vec![3.0, 4.0, 1.5]);
        let w = wrench(&p, &s, &u).unwrap();
        let pred = &jw * nalgebra::DVector::from_vec(u.0.clone());
        assert!((pred[0] - w.fx).abs() < 1e-12 && (pred[1] - w.fy).abs() < 1e-12 && (pred[2] - w.m).abs() < 1e-12);
    }

    #[test]
    fn allocation_determinant_structure() {
        let p = VehicleParams::main_paper();
        for phi in [0.0, 0.5, -1.0] {
            let s = equilibrium_state(&p, EquilibriumPose::new(0.0, 0.0, phi));
            let u = equilibrium_input(&p);
            let det = full_allocation_matrix(&p, &s.q, &u).unwrap().determinant();
            let expect = -2.0 * p.a * u.0[1] * f64::cos(phi);
            assert!((det - expect).abs() < 1e-9 * expect.abs());
        }
    }

    #[test]
    fn omni_classes() {
        let p1 = VehicleParams::type1(3);
        let s1 = equilibrium_state(&p1, EquilibriumPose::new(0.0, 0.0, 0.0));
        assert_eq!(omni_classify(&p1, &s1.q, 64).unwrap().kind, OmniKind::NotOmnidirectional);
        let p2 = VehicleParams::main_paper();
        let s2 = equilibrium_state(&p2, EquilibriumPose::new(0.0, 0.0, 0.0));
        let c = omni_classify(&p2, &s2.q, 64).unwrap();
        assert_eq!(c.kind, OmniKind::FullyOmnidirectional);
        assert!(c.worst_margin > 0.0);
        let mut heavy = p2.clone();
        heavy.gravity *= 1000.0;
        assert_ne!(omni_classify(&heavy, &s2.q, 64).unwrap().kind, OmniKind::FullyOmnidirectional);
        assert!(omni_classify(&p2, &s2.q, 4).is_err());
    }

    #[test]
    fn zero_dynamics_equilibrium() {
        let p = VehicleParams::report_nominal();
        let phi = 60f64.to_radians();
        let d = zero_dynamics_general_rhs(&p, phi, ZeroDynState::new(-phi, 0.0)).unwrap();
        assert_eq!(d.eta1, 0.0);
        assert!(d.eta2.abs() < 1e-10);
        let s = zero_dynamics_simplified_rhs(&p, phi, ZeroDynState::new(-phi, 0.0), 3.0);
        assert_eq!((s.eta1, s.eta2), (0.0, 0.0));
        assert!(simplified_linearization(phi, 1.0).unwrap().0 > 0.0);
    }

    #[test]
    fn pinned_state_satisfies_outputs() {
        let p = VehicleParams::report_nominal();
        let phi = 60f64.to_radians();
        let ext = zero_output_state(&p, [1.0, 2.0, phi], ZeroDynState::new(-phi + 0.15, -0.1)).unwrap();
        let d = crate::extended::output_derivatives(&p, &ext).unwrap();
        assert_eq!([d.0[0][0], d.0[1][0], d.0[2][0]], [1.0, 2.0, phi]);
        for ch in d.0 {
            for v in &ch[1..] {
                assert!(v.abs() < 1e-10, "{ch:?}");
            }
        }
    }
}
