use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const STANDARD_GRAVITY: f64 = 9.81;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VehicleType {
    /// Every link hangs from a passive joint with viscous friction.
    Type1,
    /// Link N is moment-actuated, the remaining N-1 joints are passive.
    Type2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActuationOption {
    /// Servo on joint N (`m = 1`). The servo is modelled as an acceleration
    /// source, `q̈_{N+3} = τ_a`, driving a link with no rotational inertia.
    Servo,
    /// Coupled-rotor module on link N (`m = 0`): sum and difference of two
    /// rotor thrusts separated by `2·a11`.
    CoupledRotor,
}

impl ActuationOption {
    /// Binary active-joint indicator `m`.
    pub fn indicator(self) -> f64 {
        match self {
            ActuationOption::Servo => 1.0,
            ActuationOption::CoupledRotor => 0.0,
        }
    }
}

/// Physical constants of a planar multi-link vehicle (SI units).
///
/// Links are indexed `0..n`; link `j` hangs from joint `j` whose generalized
/// coordinate is `q[3 + j]`. Joints sit on the platform body x-axis, evenly
/// spaced between `-a` and `+a` (for `n = 2` exactly at `∓a`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleParams {
    pub vehicle_type: VehicleType,
    #[serde(default = "default_option")]
    pub actuation_option: ActuationOption,
    /// Number of links `N`.
    pub n: usize,
    /// Platform mass (kg).
    pub m_b: f64,
    /// Link mass (kg), identical for every link.
    pub m_p: f64,
    /// Platform inertia (kg·m²).
    pub i_b: f64,
    /// Link inertia about its CoM (kg·m²).
    pub i_p: f64,
    /// Distance from the platform CoM to the outermost joints (m).
    pub a: f64,
    /// Per-link CoM offset below its joint (m), length `n`.
    pub d: Vec<f64>,
    /// Half separation of the coupled rotors (m).
    #[serde(default)]
    pub a11: f64,
    /// Viscous friction of each passive joint (N·m·s/rad), length `n` for
    /// Type 1 and `n - 1` for Type 2.
    pub b_f: Vec<f64>,
    /// Constant frame offset of each link (rad), length `n`. Defaults to zero.
    #[serde(default)]
    pub theta_l: Vec<f64>,
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    /// Thrust limit of each lift channel (N). Only used by the
    /// omnidirectionality classifier; simulations do not saturate.
    #[serde(default = "default_f_max")]
    pub f_max: f64,
}

fn default_option() -> ActuationOption {
    ActuationOption::CoupledRotor
}

fn default_gravity() -> f64 {
    STANDARD_GRAVITY
}

fn default_f_max() -> f64 {
    100.0
}

impl VehicleParams {
    /// Type 2, N = 2 vehicle with the pose-regulation numbers
    /// (`m_tot = 10 kg`, `a = c = 0.5 m`, `a11 = 0.1 m`).
    pub fn main_paper() -> Self {
        VehicleParams {
            vehicle_type: VehicleType::Type2,
            actuation_option: ActuationOption::CoupledRotor,
            n: 2,
            m_b: 6.0,
            m_p: 2.0,
            i_b: 0.0095,
            i_p: 0.002,
            a: 0.5,
            d: vec![0.5, 0.0],
            a11: 0.1,
            b_f: vec![0.9],
            theta_l: vec![0.0, 0.0],
            gravity: STANDARD_GRAVITY,
            f_max: default_f_max(),
        }
    }

    /// Type 2, N = 2 vehicle with the robustness-study nominal values
    /// (`m_p = 2`, `m_b = 5`, `b2 = 0.9`, `I_p = 1.86e-3`, `I_b = 9.5e-3`).
    pub fn report_nominal() -> Self {
        VehicleParams {
            m_b: 5.0,
            i_p: 1.86e-3,
            i_b: 9.5e-3,
            ..Self::main_paper()
        }
    }

    /// Type 1 vehicle with `n` identical links and `m_tot = 10 kg` for `n = 3`.
    pub fn type1(n: usize) -> Self {
        VehicleParams {
            vehicle_type: VehicleType::Type1,
            actuation_option: ActuationOption::CoupledRotor,
            n,
            m_b: 4.0,
            m_p: 2.0,
            i_b: 0.0095,
            i_p: 0.002,
            a: 0.5,
            d: vec![0.5; n],
            a11: 0.0,
            b_f: vec![0.9; n],
            theta_l: vec![0.0; n],
            gravity: STANDARD_GRAVITY,
            f_max: default_f_max(),
        }
    }

    /// Look up a shipped preset by name.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "main-paper" => Ok(Self::main_paper()),
            "report-nominal" => Ok(Self::report_nominal()),
            "type1-n3" => Ok(Self::type1(3)),
            other => Err(Error::Config(format!(
                "unknown preset '{other}' (expected main-paper, report-nominal or type1-n3)"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if self.vehicle_type == VehicleType::Type2 && self.n < 2 {
            return bad("Type 2 needs n >= 2".into());
        }
        for (name, v) in [
            ("m_b", self.m_b),
            ("m_p", self.m_p),
            ("i_b", self.i_b),
            ("i_p", self.i_p),
            ("gravity", self.gravity),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        for (name, v) in [("a", self.a), ("a11", self.a11)] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be non-negative, got {v}"));
            }
        }
        if !(self.f_max > 0.0) {
            return bad(format!("f_max must be positive, got {}", self.f_max));
        }
        if self.d.len() != self.n {
            return bad(format!("d has {} entries, expected {}", self.d.len(), self.n));
        }
        if self.d.iter().any(|v| !v.is_finite()) {
            return bad("d must be finite".into());
        }
        let passive = self.passive_count();
        if self.b_f.len() != passive {
            return bad(format!(
                "b_f has {} entries, expected one per passive joint ({passive})",
                self.b_f.len()
            ));
        }
        if self.b_f.iter().any(|&b| !(b.is_finite() && b >= 0.0)) {
            return bad("b_f entries must be non-negative".into());
        }
        if !self.theta_l.is_empty() && self.theta_l.len() != self.n {
            return bad(format!(
                "theta_l has {} entries, expected {} (or none)",
                self.theta_l.len(),
                self.n
            ));
        }
        if self.vehicle_type == VehicleType::Type2 && self.d[self.n - 1] != 0.0 {
            return bad("Type 2 requires d[n-1] = 0 for the moment-actuated link".into());
        }
        Ok(())
    }

    /// Generalized coordinate count `N + 3`.
    pub fn dof(&self) -> usize {
        self.n + 3
    }

    /// Input dimension: `N` for Type 1, `N + 1` for Type 2.
    pub fn n_inputs(&self) -> usize {
        match self.vehicle_type {
            VehicleType::Type1 => self.n,
            VehicleType::Type2 => self.n + 1,
        }
    }

    pub fn passive_count(&self) -> usize {
        match self.vehicle_type {
            VehicleType::Type1 => self.n,
            VehicleType::Type2 => self.n - 1,
        }
    }

    pub fn m_tot(&self) -> f64 {
        self.m_b + self.n as f64 * self.m_p
    }

    /// Signed position of joint `j` along the platform body x-axis.
    pub fn joint_lever(&self, j: usize) -> f64 {
        if self.n == 1 {
            0.0
        } else {
            self.a * (2.0 * j as f64 / (self.n - 1) as f64 - 1.0)
        }
    }

    /// Rotational inertia of link `j` about its CoM. The servo-driven link is
    /// massless in rotation; its mass stays lumped at the joint.
    pub fn link_inertia(&self, j: usize) -> f64 {
        if self.servo_driven(j) {
            0.0
        } else {
            self.i_p
        }
    }

    pub fn theta_offset(&self, j: usize) -> f64 {
        self.theta_l.get(j).copied().unwrap_or(0.0)
    }

    /// Viscous friction at joint `j` (zero on the moment-actuated joint).
    pub fn friction(&self, j: usize) -> f64 {
        if j < self.passive_count() {
            self.b_f[j]
        } else {
            0.0
        }
    }

    pub fn servo_driven(&self, j: usize) -> bool {
        self.vehicle_type == VehicleType::Type2
            && self.actuation_option == ActuationOption::Servo
            && j == self.n - 1
    }

    pub fn has_servo(&self) -> bool {
        self.vehicle_type == VehicleType::Type2 && self.actuation_option == ActuationOption::Servo
    }

    /// `k_{1j} = d_j m_p`.
    pub fn k1(&self, j: usize) -> f64 {
        self.d[j] * self.m_p
    }

    /// `k_{2j} = I_j + d_j² m_p`.
    pub fn k2(&self, j: usize) -> f64 {
        self.link_inertia(j) + self.d[j] * self.d[j] * self.m_p
    }

    /// `k_3 = I_b + Σ m_p r_j²` (equals `N m_p a² + I_b` when every joint sits
    /// at distance `a`).
    pub fn k3(&self) -> f64 {
        self.i_b
            + (0..self.n)
                .map(|j| self.m_p * self.joint_lever(j).powi(2))
                .sum::<f64>()
    }

    /// `k_{4j} = r_j d_j m_p` with the signed lever `r_j`.
    pub fn k4(&self, j: usize) -> f64 {
        self.joint_lever(j) * self.d[j] * self.m_p
    }

    /// Per-channel hover thrust `g·m_tot/N`.
    pub fn hover_thrust(&self) -> f64 {
        self.gravity * self.m_tot() / self.n as f64
    }

    /// Stable identifier of the parameter set (hex SHA-256 of its JSON form).
    pub fn hash_hex(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(self).expect("params serialize");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for p in [
            VehicleParams::main_paper(),
            VehicleParams::report_nominal(),
            VehicleParams::type1(3),
        ] {
            p.validate().unwrap();
        }
        assert_eq!(VehicleParams::main_paper().m_tot(), 10.0);
        assert_eq!(VehicleParams::report_nominal().m_tot(), 9.0);
        assert_eq!(VehicleParams::type1(3).m_tot(), 10.0);
    }

    #[test]
    fn type2_requires_zero_offset_on_actuated_link() {
        let mut p = VehicleParams::main_paper();
        p.d[1] = 0.1;
        assert!(matches!(p.validate(), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn friction_vector_length_checked() {
        let mut p = VehicleParams::main_paper();
        p.b_f = vec![0.9, 0.9];
        assert!(p.validate().is_err());
    }

    #[test]
    fn levers_are_symmetric() {
        let p = VehicleParams::type1(3);
        assert_eq!(
            (0..3).map(|j| p.joint_lever(j)).collect::<Vec<_>>(),
            vec![-0.5, 0.0, 0.5]
        );
        let p2 = VehicleParams::main_paper();
        assert_eq!((p2.joint_lever(0), p2.joint_lever(1)), (-0.5, 0.5));
        assert!((p2.k3() - (2.0 * 2.0 * 0.25 + 0.0095)).abs() < 1e-15);
    }

    #[test]
    fn unknown_keys_rejected() {
        let json = r#"{"vehicle_type":"type2","n":2,"m_b":5,"m_p":2,"i_b":0.01,"i_p":0.002,
            "a":0.5,"d":[0.5,0],"b_f":[0.9],"bogus":1}"#;
        assert!(serde_json::from_str::<VehicleParams>(json).is_err());
    }

    #[test]
    fn preset_lookup() {
        assert!(VehicleParams::preset("main-paper").is_ok());
        assert!(VehicleParams::preset("nope").is_err());
    }
}
