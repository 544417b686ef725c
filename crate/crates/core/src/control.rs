//! Reference generation and the dynamic feedback-linearizing tracking
//! controller for the Type 2, N = 2 vehicle.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{InputVector, VehicleParams};
pub use crate::extended::{output_derivatives, ExtendedState, OutputDerivatives};
use crate::extended::{check_supported, lie_data_vec, solve3};
use crate::error::{Error, Result};

/// Runs abort once [`singularity_margin`] drops below this value.
pub const SINGULARITY_THRESHOLD: f64 = 0.02;

/// Reference pose at one instant: value and derivatives of order 1..=4 for
/// each of `x`, `y`, `φ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseRef {
    pub t: f64,
    pub x: [f64; 5],
    pub y: [f64; 5],
    pub phi: [f64; 5],
}

impl PoseRef {
    pub fn constant(t: f64, x: f64, y: f64, phi: f64) -> Self {
        PoseRef {
            t,
            x: [x, 0.0, 0.0, 0.0, 0.0],
            y: [y, 0.0, 0.0, 0.0, 0.0],
            phi: [phi, 0.0, 0.0, 0.0, 0.0],
        }
    }

    pub fn channel(&self, i: usize) -> &[f64; 5] {
        match i {
            0 => &self.x,
            1 => &self.y,
            _ => &self.phi,
        }
    }

    pub fn pose(&self) -> [f64; 3] {
        [self.x[0], self.y[0], self.phi[0]]
    }
}

/// `c·cos(ωt + α)` and its first four derivatives.
fn harmonic(amplitude: f64, omega: f64, t: f64, phase: f64) -> [f64; 5] {
    let (s, c) = (omega * t + phase).sin_cos();
    let w = omega;
    [
        amplitude * c,
        -amplitude * w * s,
        -amplitude * w * w * c,
        amplitude * w.powi(3) * s,
        amplitude * w.powi(4) * c,
    ]
}

/// Circle of radius `r1` about `center`, angular rate `rate`, `φ_d = 0`.
pub fn circle_reference(t: f64, r1: f64, center: [f64; 2], rate: f64) -> PoseRef {
    let mut x = harmonic(r1, rate, t, 0.0);
    let mut y = harmonic(r1, rate, t, -std::f64::consts::FRAC_PI_2);
    x[0] += center[0];
    y[0] += center[1];
    PoseRef {
        t,
        x,
        y,
        phi: [0.0; 5],
    }
}

/// `φ_d = r2 sin(r3 t)` with derivatives; angles in rad, `r3` in rad/s.
pub fn sinusoidal_orientation_reference(t: f64, r2: f64, r3: f64) -> [f64; 5] {
    harmonic(r2, r3, t, -std::f64::consts::FRAC_PI_2)
}

/// Angle unit accepted in configuration files.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngleUnit {
    #[default]
    Rad,
    Deg,
}

impl AngleUnit {
    pub fn to_rad(self, v: f64) -> f64 {
        match self {
            AngleUnit::Rad => v,
            AngleUnit::Deg => v.to_radians(),
        }
    }
}

/// Sinusoidal orientation reference `amplitude·sin(rate·t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sinusoid {
    pub amplitude: f64,
    /// Angular frequency (unit per second of `unit`).
    pub rate: f64,
    #[serde(default)]
    pub unit: AngleUnit,
}

impl Sinusoid {
    /// 80° amplitude at 30 °/s.
    pub fn default_orientation() -> Self {
        Sinusoid {
            amplitude: 80.0,
            rate: 30.0,
            unit: AngleUnit::Deg,
        }
    }
}

/// Reference trajectory description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Reference {
    /// Constant pose `(x, y, φ)`; `φ` in `unit`.
    Regulate {
        x: f64,
        y: f64,
        phi: f64,
        #[serde(default)]
        unit: AngleUnit,
    },
    /// Circle, optionally with a sinusoidal orientation.
    Circle {
        radius: f64,
        center: [f64; 2],
        rate: f64,
        #[serde(default)]
        orientation: Option<Sinusoid>,
    },
}

impl Reference {
    pub fn regulate_rad(x: f64, y: f64, phi: f64) -> Self {
        Reference::Regulate {
            x,
            y,
            phi,
            unit: AngleUnit::Rad,
        }
    }

    /// Radius 1 m about (5, 5) at 0.5 rad/s.
    pub fn default_circle(orientation: Option<Sinusoid>) -> Self {
        Reference::Circle {
            radius: 1.0,
            center: [5.0, 5.0],
            rate: 0.5,
            orientation,
        }
    }

    pub fn eval(&self, t: f64) -> PoseRef {
        match self {
            Reference::Regulate { x, y, phi, unit } => PoseRef::constant(t, *x, *y, unit.to_rad(*phi)),
            Reference::Circle {
                radius,
                center,
                rate,
                orientation,
            } => {
                let mut r = circle_reference(t, *radius, *center, *rate);
                if let Some(s) = orientation {
                    r.phi = sinusoidal_orientation_reference(t, s.unit.to_rad(s.amplitude), s.unit.to_rad(s.rate));
                }
                r
            }
        }
    }

    /// True when the orientation reference is identically zero.
    pub fn phi_identically_zero(&self) -> bool {
        match self {
            Reference::Regulate { phi, .. } => *phi == 0.0,
            Reference::Circle { orientation, .. } => orientation.is_none_or(|s| s.amplitude == 0.0),
        }
    }
}

/// Per-channel error-feedback coefficients `k0..k3`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainSet {
    pub k: [[f64; 4]; 3],
}

impl GainSet {
    /// Same pole set on all three channels.
    pub fn from_poles(poles: &[Complex64; 4]) -> Result<Self> {
        let k = design_gains(poles)?;
        Ok(GainSet { k: [k; 3] })
    }

    pub fn from_real_poles(poles: [f64; 4]) -> Result<Self> {
        Self::from_poles(&poles.map(|p| Complex64::new(p, 0.0)))
    }

    /// Check the Hurwitz property of every channel polynomial.
    pub fn validate(&self) -> Result<()> {
        for (i, k) in self.k.iter().enumerate() {
            if !hurwitz4(k) {
                return Err(Error::InvalidGains(format!("channel {i} polynomial is not Hurwitz")));
            }
        }
        Ok(())
    }
}

impl Default for GainSet {
    fn default() -> Self {
        GainSet::from_real_poles([-3.0; 4]).expect("default poles are stable")
    }
}

/// Routh-Hurwitz test for `s⁴ + k3 s³ + k2 s² + k1 s + k0`.
fn hurwitz4(k: &[f64; 4]) -> bool {
    let [a0, a1, a2, a3] = *k;
    a0 > 0.0 && a1 > 0.0 && a2 > 0.0 && a3 > 0.0 && a3 * a2 > a1 && a3 * a2 * a1 > a1 * a1 + a3 * a3 * a0
}

/// Expand `(s − p1)…(s − p4)` into `(k0, k1, k2, k3)`.
pub fn design_gains(poles: &[Complex64; 4]) -> Result<[f64; 4]> {
    if let Some(p) = poles.iter().find(|p| !(p.re < 0.0) || !p.im.is_finite()) {
        return Err(Error::InvalidGains(format!("pole {p} is not in the open left half-plane")));
    }
    // coefficients, lowest order first
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for &p in poles {
        let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (i, &ci) in c.iter().enumerate() {
            next[i + 1] += ci;
            next[i] -= ci * p;
        }
        c = next;
    }
    let scale = c.iter().map(|v| v.norm()).fold(1.0, f64::max);
    if c.iter().any(|v| v.im.abs() > 1e-9 * scale) {
        return Err(Error::InvalidGains("complex poles must come in conjugate pairs".into()));
    }
    Ok([c[0].re, c[1].re, c[2].re, c[3].re])
}

/// `min(|z12| / hover thrust, distance of φ to the nearest π/2 + kπ)`.
pub fn singularity_margin(params: &VehicleParams, ext: &ExtendedState) -> f64 {
    let lift = ext.z[1].abs() / params.hover_thrust();
    let r = (ext.plant.q[2] - std::f64::consts::FRAC_PI_2).rem_euclid(std::f64::consts::PI);
    let angle = r.min(std::f64::consts::PI - r);
    lift.min(angle)
}

/// Controller result.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlOutput {
    /// `(v1, v2, w)`.
    pub new_inputs: [f64; 3],
    /// `(u_1, lift, moment) = (z11, z12, w)`.
    pub input: InputVector,
    pub margin: f64,
    /// Commanded `y⁽⁴⁾`.
    pub commanded: [f64; 3],
}

/// One evaluation of the linearizing law.
pub fn fbl_control(params: &VehicleParams, gains: &GainSet, ext: &ExtendedState, reference: &PoseRef) -> Result<ControlOutput> {
    Controller::new(params.clone(), gains.clone())?.control(ext, reference)
}

/// Controller holding the nominal model and gains.
#[derive(Clone, Debug)]
pub struct Controller {
    params: VehicleParams,
    gains: GainSet,
    threshold: f64,
}

impl Controller {
    pub fn new(params: VehicleParams, gains: GainSet) -> Result<Self> {
        check_supported(&params)?;
        params.validate()?;
        gains.validate()?;
        Ok(Controller {
            params,
            gains,
            threshold: SINGULARITY_THRESHOLD,
        })
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn params(&self) -> &VehicleParams {
        &self.params
    }

    pub fn gains(&self) -> &GainSet {
        &self.gains
    }

    pub fn control(&self, ext: &ExtendedState, reference: &PoseRef) -> Result<ControlOutput> {
        self.control_vec(&ext.to_vec(), reference)
    }

    /// Same as [`Controller::control`] on a flat extended state.
    pub fn control_vec(&self, x: &[f64], reference: &PoseRef) -> Result<ControlOutput> {
        let ext = ExtendedState::from_slice(x)?;
        let margin = singularity_margin(&self.params, &ext);
        if !(margin >= self.threshold) {
            return Err(Error::Singularity { margin });
        }
        let lie = lie_data_vec(&self.params, x)?;
        let mut nu = [0.0; 3];
        let mut rhs = [0.0; 3];
        for i in 0..3 {
            let r = reference.channel(i);
            let y = &lie.derivs.0[i];
            let k = &self.gains.k[i];
            nu[i] = r[4] + (0..4).map(|j| k[j] * (r[j] - y[j])).sum::<f64>();
            rhs[i] = nu[i] - lie.decoupling.b[i];
        }
        let v = solve3(&lie.decoupling.a, rhs).ok_or(Error::Singularity { margin })?;
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::Singularity { margin });
        }
        Ok(ControlOutput {
            new_inputs: v,
            input: ext.physical_input(v[2]),
            margin,
            commanded: nu,
        })
    }
}
