//! Scenario descriptions and the configuration-file schema.
//!
//! Configuration files are TOML or JSON with the same keys; unknown keys are
//! rejected. Units are SI unless a key says otherwise (`unit = "deg"`).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::control::{AngleUnit, Controller, GainSet, Reference, Sinusoid};
use crate::dynamics::{equilibrium_state, EquilibriumPose, VehicleParams};
use crate::error::{Error, Result};
use crate::extended::ExtendedState;
use crate::simulate::{run, DisturbanceSpec, SimLog};

/// Where the vehicle starts.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialCondition {
    /// Hovering at the reference pose at `t = 0`.
    #[default]
    AtReference,
    /// Hovering at an explicit equilibrium pose.
    Equilibrium {
        x: f64,
        y: f64,
        phi: f64,
        #[serde(default)]
        unit: AngleUnit,
    },
}

/// Reference, disturbance, initial condition and integration settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub reference: Reference,
    #[serde(default)]
    pub initial: InitialCondition,
    #[serde(default)]
    pub disturbance: DisturbanceSpec,
    /// Duration (s).
    pub t_final: f64,
    /// RK4 step (s).
    pub dt: f64,
}

impl Scenario {
    /// Regulation to (10 m, 8 m, 60°) from hover at (9 m, 7 m, 45°).
    pub fn regulation() -> Self {
        Scenario {
            reference: Reference::Regulate {
                x: 10.0,
                y: 8.0,
                phi: 60.0,
                unit: AngleUnit::Deg,
            },
            initial: InitialCondition::Equilibrium {
                x: 9.0,
                y: 7.0,
                phi: 45.0,
                unit: AngleUnit::Deg,
            },
            disturbance: DisturbanceSpec::none(),
            t_final: 15.0,
            dt: 1e-3,
        }
    }

    /// Circle of radius 1 m about (5, 5) at 0.5 rad/s, 20 s.
    pub fn circle(orientation: Option<Sinusoid>) -> Self {
        Scenario {
            reference: Reference::default_circle(orientation),
            initial: InitialCondition::AtReference,
            disturbance: DisturbanceSpec::none(),
            t_final: 20.0,
            dt: 1e-3,
        }
    }

    /// Circle tracking with `φ_d ≡ 0` as used by the parameter searches
    /// (coarser step to keep 1000-sample sweeps affordable).
    pub fn robustness() -> Self {
        Scenario {
            dt: 2e-3,
            ..Scenario::circle(None)
        }
    }

    /// Long circle-tracking horizon for disturbance sweeps: the final fifth
    /// spans one full period at 0.1 rad/s.
    pub fn disturbance() -> Self {
        Scenario {
            disturbance: DisturbanceSpec {
                amplitude: 0.0,
                omega: 0.0,
                phase: std::f64::consts::FRAC_PI_2,
            },
            t_final: 320.0,
            dt: 5e-3,
            ..Scenario::circle(None)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t_final >= 0.0) || !self.t_final.is_finite() {
            return Err(Error::Config(format!(
                "need dt > 0 and finite t_final ≥ 0 (got dt = {}, t_final = {})",
                self.dt, self.t_final
            )));
        }
        if !(self.disturbance.amplitude >= 0.0) {
            return Err(Error::Config("disturbance amplitude must be ≥ 0".into()));
        }
        Ok(())
    }

    /// Initial extended state, built from the controller's model.
    pub fn initial_state(&self, model: &VehicleParams) -> ExtendedState {
        let pose = match &self.initial {
            InitialCondition::AtReference => {
                let p = self.reference.eval(0.0).pose();
                EquilibriumPose::new(p[0], p[1], p[2])
            }
            InitialCondition::Equilibrium { x, y, phi, unit } => EquilibriumPose::new(*x, *y, unit.to_rad(*phi)),
        };
        ExtendedState::hover(model, equilibrium_state(model, pose))
    }

    /// Simulate `plant` under `controller`.
    pub fn simulate(&self, plant: &VehicleParams, controller: &Controller) -> Result<SimLog> {
        self.validate()?;
        let init = self.initial_state(controller.params());
        run(plant, controller, &self.reference, &self.disturbance, &init, self.t_final, self.dt)
    }

    pub fn with_disturbance(&self, disturbance: DisturbanceSpec) -> Self {
        Scenario {
            disturbance,
            ..self.clone()
        }
    }
}

/// One closed-loop pole: a real number or `[re, im]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PoleSpec {
    Real(f64),
    Complex([f64; 2]),
}

impl PoleSpec {
    pub fn to_complex(self) -> Complex64 {
        match self {
            PoleSpec::Real(r) => Complex64::new(r, 0.0),
            PoleSpec::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

/// Complete scenario configuration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Named parameter preset; ignored when `params` is given.
    #[serde(default)]
    pub preset: Option<String>,
    /// Inline vehicle parameters.
    #[serde(default)]
    pub params: Option<VehicleParams>,
    /// Four closed-loop poles shared by all channels.
    #[serde(default)]
    pub poles: Option<Vec<PoleSpec>>,
    pub scenario: Scenario,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn new(preset: &str, scenario: Scenario) -> Self {
        ScenarioConfig {
            preset: Some(preset.into()),
            params: None,
            poles: None,
            scenario,
            seed: 0,
        }
    }

    /// Parse TOML or JSON (chosen by the first non-blank character).
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?
        };
        cfg.params()?;
        cfg.gains()?;
        cfg.scenario.validate()?;
        Ok(cfg)
    }

    pub fn params(&self) -> Result<VehicleParams> {
        let p = match (&self.params, &self.preset) {
            (Some(p), _) => p.clone(),
            (None, Some(name)) => VehicleParams::preset(name)?,
            (None, None) => return Err(Error::Config("either `preset` or `params` is required".into())),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn gains(&self) -> Result<GainSet> {
        match &self.poles {
            None => Ok(GainSet::default()),
            Some(p) => {
                let poles: [Complex64; 4] = p
                    .iter()
                    .map(|s| s.to_complex())
                    .collect::<Vec<_>>()
                    .try_into()
                    .map_err(|_| Error::Config(format!("exactly 4 poles are required, got {}", p.len())))?;
                GainSet::from_poles(&poles)
            }
        }
    }

    pub fn controller(&self) -> Result<Controller> {
        Controller::new(self.params()?, self.gains()?)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash_hex(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}
