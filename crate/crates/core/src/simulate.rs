//! Fixed-step RK4 closed-loop simulation, disturbance injection, logging and
//! error metrics.

use serde::{Deserialize, Serialize};

use crate::control::{ControlOutput, Controller, Reference};
use crate::dynamics::{forward_dynamics, GenState, InputVector, VehicleParams};
use crate::error::{Error, Result};
use crate::extended::{ExtendedState, EXT_DIM};

/// Default integration step (s).
pub const DEFAULT_DT: f64 = 1e-3;
/// Fraction of the run, at the end, used for steady-state means.
pub const STEADY_STATE_FRACTION: f64 = 0.2;
const DIVERGED_STATE: f64 = 1e6;
const DIVERGED_POSE_ERROR: f64 = 1e3;

/// `d(t) = A sin(ωt + ψ)`, added to `ẍ`, `ÿ` and `φ̈`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSpec {
    /// `A` (m/s², rad/s²).
    pub amplitude: f64,
    /// `ω` (rad/s).
    pub omega: f64,
    /// `ψ` (rad).
    pub phase: f64,
}

impl DisturbanceSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn new(amplitude: f64, omega: f64, phase: f64) -> Result<Self> {
        if !(amplitude >= 0.0) || !omega.is_finite() || !phase.is_finite() {
            return Err(Error::InvalidParams(format!(
                "disturbance needs A ≥ 0 and finite ω, ψ (got {amplitude}, {omega}, {phase})"
            )));
        }
        Ok(DisturbanceSpec { amplitude, omega, phase })
    }

    pub fn value(&self, t: f64) -> f64 {
        if self.amplitude == 0.0 {
            0.0
        } else {
            self.amplitude * (self.omega * t + self.phase).sin()
        }
    }
}

/// Why a run stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Completed,
    Singularity,
    Diverged,
}

/// Run metadata carried into every output file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LogMeta {
    pub params_hash: String,
    pub seed: u64,
    pub dt: f64,
}

/// Uniformly sampled record of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimLog {
    pub times: Vec<f64>,
    /// Extended state `(q, q̇, z)` at each time.
    pub states: Vec<Vec<f64>>,
    /// Physical input `(u_1, lift, moment)` commanded at each time.
    pub inputs: Vec<Vec<f64>>,
    /// Reference pose at each time.
    pub refs: Vec<[f64; 3]>,
    /// Injected disturbance `d(t)`.
    pub disturbance: Vec<f64>,
    pub e_pos: Vec<f64>,
    /// `|φ − φ_d|`.
    pub e_phi: Vec<f64>,
    pub termination: Termination,
    pub meta: LogMeta,
}

impl SimLog {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> Option<&[f64]> {
        self.states.last().map(|v| v.as_slice())
    }
}

/// Tracking-error summary of a log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// `‖e_pos‖∞`.
    pub e_pos: f64,
    /// `‖φ − φ_d‖∞`.
    pub e_phi: f64,
    pub steady_state_pos: f64,
    pub steady_state_phi: f64,
}

/// Classical RK4 step of `ẋ = f(t, x)`.
pub fn rk4<F>(f: &mut F, t: f64, x: &[f64], dt: f64) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    let k1 = f(t, x)?;
    rk4_with_slope(f, t, x, dt, &k1)
}

/// RK4 step when the slope at `(t, x)` is already known.
pub fn rk4_with_slope<F>(f: &mut F, t: f64, x: &[f64], dt: f64, k1: &[f64]) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    let n = x.len();
    let axpy = |a: f64, k: &[f64]| -> Vec<f64> { (0..n).map(|i| x[i] + a * k[i]).collect() };
    let k2 = f(t + 0.5 * dt, &axpy(0.5 * dt, k1))?;
    let k3 = f(t + 0.5 * dt, &axpy(0.5 * dt, &k2))?;
    let k4 = f(t + dt, &axpy(dt, &k3))?;
    Ok((0..n)
        .map(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Closed-loop extended vector field: controller on its own (nominal) model,
/// plant on `plant` parameters, disturbance on the pose accelerations.
pub fn closed_loop_field(
    plant: &VehicleParams,
    controller: &Controller,
    reference: &Reference,
    dist: &DisturbanceSpec,
    t: f64,
    x: &[f64],
) -> Result<Vec<f64>> {
    let out = controller.control_vec(x, &reference.eval(t))?;
    plant_field(plant, dist, t, x, &out)
}

fn plant_field(plant: &VehicleParams, dist: &DisturbanceSpec, t: f64, x: &[f64], out: &ControlOutput) -> Result<Vec<f64>> {
    let state = GenState {
        q: x[..5].to_vec(),
        qd: x[5..10].to_vec(),
    };
    let d = dist.value(t);
    let qdd = forward_dynamics(plant, &state, &out.input, [d; 3])?;
    let mut f = Vec::with_capacity(EXT_DIM);
    f.extend_from_slice(&x[5..10]);
    f.extend(qdd);
    f.extend_from_slice(&[x[12], x[13], out.new_inputs[0], out.new_inputs[1]]);
    Ok(f)
}

/// One RK4 step of the closed loop.
pub fn step_rk4(
    plant: &VehicleParams,
    controller: &Controller,
    reference: &Reference,
    ext: &ExtendedState,
    t: f64,
    dt: f64,
    dist: &DisturbanceSpec,
) -> Result<ExtendedState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParams(format!("dt must be positive, got {dt}")));
    }
    let mut f = |t: f64, x: &[f64]| closed_loop_field(plant, controller, reference, dist, t, x);
    let x = rk4(&mut f, t, &ext.to_vec(), dt)?;
    ExtendedState::from_slice(&x)
}

fn pose_errors(x: &[f64], r: &[f64; 3]) -> (f64, f64) {
    ((x[0] - r[0]).hypot(x[1] - r[1]), (x[2] - r[2]).abs())
}

/// Closed-loop run from `initial` to `t_final` (or early termination).
pub fn run(
    plant: &VehicleParams,
    controller: &Controller,
    reference: &Reference,
    dist: &DisturbanceSpec,
    initial: &ExtendedState,
    t_final: f64,
    dt: f64,
) -> Result<SimLog> {
    if !(dt > 0.0) || !(t_final >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "need dt > 0 and t_final ≥ 0 (got {dt}, {t_final})"
        )));
    }
    plant.validate()?;
    let steps = (t_final / dt).round() as usize;
    let mut log = SimLog {
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        inputs: Vec::with_capacity(steps + 1),
        refs: Vec::with_capacity(steps + 1),
        disturbance: Vec::with_capacity(steps + 1),
        e_pos: Vec::with_capacity(steps + 1),
        e_phi: Vec::with_capacity(steps + 1),
        termination: Termination::Completed,
        meta: LogMeta {
            params_hash: plant.hash_hex(),
            seed: 0,
            dt,
        },
    };
    let mut x = initial.to_vec();
    let mut field = |t: f64, x: &[f64]| closed_loop_field(plant, controller, reference, dist, t, x);

    for i in 0..=steps {
        let t = i as f64 * dt;
        let r = reference.eval(t);
        let pose = r.pose();
        let (ep, ephi) = pose_errors(&x, &pose);
        let out = controller.control_vec(&x, &r);
        let diverged = x.iter().take(10).any(|v| !v.is_finite() || v.abs() > DIVERGED_STATE)
            || !(ep <= DIVERGED_POSE_ERROR);
        log.times.push(t);
        log.states.push(x.clone());
        log.refs.push(pose);
        log.disturbance.push(dist.value(t));
        log.e_pos.push(ep);
        log.e_phi.push(ephi);
        log.inputs.push(match &out {
            Ok(o) => o.input.0.clone(),
            Err(_) => vec![f64::NAN; 3],
        });
        if diverged {
            log.termination = Termination::Diverged;
            break;
        }
        let out = match out {
            Ok(o) => o,
            Err(Error::Singularity { .. }) => {
                log.termination = Termination::Singularity;
                break;
            }
            Err(_) => {
                log.termination = Termination::Diverged;
                break;
            }
        };
        if i == steps {
            break;
        }
        let step = plant_field(plant, dist, t, &x, &out).and_then(|k1| rk4_with_slope(&mut field, t, &x, dt, &k1));
        match step {
            Ok(next) => x = next,
            Err(Error::Singularity { .. }) => {
                log.termination = Termination::Singularity;
                break;
            }
            Err(_) => {
                log.termination = Termination::Diverged;
                break;
            }
        }
    }
    Ok(log)
}

/// `L∞` errors over the whole log and steady-state means over the final
/// fifth of it.
pub fn metrics(log: &SimLog) -> Result<Metrics> {
    if log.is_empty() {
        return Err(Error::EmptyLog);
    }
    let t_end = *log.times.last().unwrap();
    let t_ss = t_end - STEADY_STATE_FRACTION * (t_end - log.times[0]);
    let max = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max);
    let tail: Vec<usize> = (0..log.len()).filter(|&i| log.times[i] >= t_ss).collect();
    let mean = |v: &[f64]| tail.iter().map(|&i| v[i]).sum::<f64>() / tail.len() as f64;
    Ok(Metrics {
        e_pos: max(&log.e_pos),
        e_phi: max(&log.e_phi),
        steady_state_pos: mean(&log.e_pos),
        steady_state_phi: mean(&log.e_phi),
    })
}

/// `(max e_pos, max e_φ)` over samples with `t0 ≤ t ≤ t1`.
pub fn windowed_max(log: &SimLog, t0: f64, t1: f64) -> Result<(f64, f64)> {
    let idx: Vec<usize> = (0..log.len())
        .filter(|&i| log.times[i] >= t0 - 1e-12 && log.times[i] <= t1 + 1e-12)
        .collect();
    if idx.is_empty() {
        return Err(Error::EmptyLog);
    }
    Ok((
        idx.iter().map(|&i| log.e_pos[i]).fold(0.0, f64::max),
        idx.iter().map(|&i| log.e_phi[i]).fold(0.0, f64::max),
    ))
}

/// Open-loop plant integration with an input schedule (no controller).
pub fn integrate_plant<F>(
    params: &VehicleParams,
    initial: &GenState,
    mut input: F,
    t_final: f64,
    dt: f64,
) -> Result<Vec<GenState>>
where
    F: FnMut(f64, &GenState) -> InputVector,
{
    let n = params.dof();
    let steps = (t_final / dt).round() as usize;
    let mut x: Vec<f64> = initial.q.iter().chain(&initial.qd).cloned().collect();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(initial.clone());
    let mut f = |t: f64, x: &[f64]| -> Result<Vec<f64>> {
        let s = GenState {
            q: x[..n].to_vec(),
            qd: x[n..].to_vec(),
        };
        let u = input(t, &s);
        let qdd = forward_dynamics(params, &s, &u, [0.0; 3])?;
        Ok(s.qd.iter().cloned().chain(qdd).collect())
    };
    for i in 0..steps {
        x = rk4(&mut f, i as f64 * dt, &x, dt)?;
        out.push(GenState {
            q: x[..n].to_vec(),
            qd: x[n..].to_vec(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::GainSet;
    use crate::dynamics::{equilibrium_state, EquilibriumPose};

    #[test]
    fn rk4_exponential() {
        let mut f = |_t: f64, x: &[f64]| Ok(vec![-x[0]]);
        let mut x = vec![1.0];
        for i in 0..100 {
            x = rk4(&mut f, i as f64 * 0.01, &x, 0.01).unwrap();
        }
        assert!((x[0] - (-1.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn disturbance_values() {
        let d = DisturbanceSpec::new(2.0, 0.0, std::f64::consts::FRAC_PI_2).unwrap();
        assert!((d.value(0.0) - 2.0).abs() < 1e-15 && (d.value(7.3) - 2.0).abs() < 1e-15);
        assert!(DisturbanceSpec::new(-1.0, 0.0, 0.0).is_err());
        assert_eq!(DisturbanceSpec::none().value(3.0), 0.0);
    }

    fn synthetic(e: Vec<f64>) -> SimLog {
        let n = e.len();
        SimLog {
            times: (0..n).map(|i| i as f64).collect(),
            states: vec![vec![]; n],
            inputs: vec![vec![]; n],
            refs: vec![[0.0; 3]; n],
            disturbance: vec![0.0; n],
            e_phi: e.clone(),
            e_pos: e,
            termination: Termination::Completed,
            meta: LogMeta::default(),
        }
    }

    #[test]
    fn metrics_on_synthetic_logs() {
        let m = metrics(&synthetic(vec![0.0; 11])).unwrap();
        assert_eq!(m.e_pos, 0.0);
        assert_eq!(m.steady_state_phi, 0.0);
        let e: Vec<f64> = (0..=1000).map(|i| (i as f64 * 0.01).sin().abs()).collect();
        let m = metrics(&synthetic(e)).unwrap();
        assert!((m.e_pos - 1.0).abs() < 1e-3);
        let m = metrics(&synthetic((0..=10).map(|i| i as f64).collect())).unwrap();
        // final fifth covers t = 8, 9, 10
        assert_eq!(m.steady_state_pos, 9.0);
        assert!(matches!(metrics(&synthetic(vec![])), Err(Error::EmptyLog)));
    }

    #[test]
    fn hover_stays_put() {
        let p = VehicleParams::main_paper();
        let ctl = Controller::new(p.clone(), GainSet::default()).unwrap();
        let pose = EquilibriumPose::new(1.0, 2.0, 0.5);
        let init = ExtendedState::hover(&p, equilibrium_state(&p, pose));
        let r = Reference::regulate_rad(1.0, 2.0, 0.5);
        let log = run(&p, &ctl, &r, &DisturbanceSpec::none(), &init, 0.5, 1e-3).unwrap();
        assert_eq!(log.termination, Termination::Completed);
        assert_eq!(log.len(), 501);
        assert!(log.e_pos.iter().all(|&e| e < 1e-12));
    }

    #[test]
    fn singular_target_terminates() {
        let p = VehicleParams::main_paper();
        let ctl = Controller::new(p.clone(), GainSet::default()).unwrap();
        let init = ExtendedState::hover(&p, equilibrium_state(&p, EquilibriumPose::new(0.0, 0.0, 1.2)));
        let r = Reference::regulate_rad(0.0, 0.0, std::f64::consts::FRAC_PI_2);
        let log = run(&p, &ctl, &r, &DisturbanceSpec::none(), &init, 10.0, 1e-3).unwrap();
        assert_eq!(log.termination, Termination::Singularity);
    }
}
