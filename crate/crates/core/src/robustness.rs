//! Parametric-uncertainty and disturbance robustness searches.
//!
//! The plant is perturbed parameter by parameter as `p → (1 + Δ)·p` while the
//! controller keeps the nominal model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{Controller, GainSet};
use crate::dynamics::VehicleParams;
use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::simulate::{metrics, DisturbanceSpec, Metrics, SimLog, Termination};

/// Perturbable plant parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamId {
    /// Joint offset `a`.
    A,
    /// CoM offset of the passive link, `d[0]`.
    C,
    Mp,
    Mb,
    /// Friction of the passive joint, `b_f[0]`.
    B2,
    Ip,
    Ib,
}

/// Floor applied to perturbed inertias, relative to the nominal value.
pub const INERTIA_FLOOR: f64 = 1e-3;

impl ParamId {
    pub const ALL: [ParamId; 7] = [
        ParamId::A,
        ParamId::C,
        ParamId::Mp,
        ParamId::Mb,
        ParamId::B2,
        ParamId::Ip,
        ParamId::Ib,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ParamId::A => "a",
            ParamId::C => "c",
            ParamId::Mp => "m_p",
            ParamId::Mb => "m_b",
            ParamId::B2 => "b2",
            ParamId::Ip => "I_p",
            ParamId::Ib => "I_b",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        ParamId::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown parameter '{s}'")))
    }

    fn is_inertia(self) -> bool {
        matches!(self, ParamId::Ip | ParamId::Ib)
    }

    /// Largest `|Δ|` explored by the range search in a direction.
    pub fn search_cap(self, direction: Direction) -> f64 {
        match (direction, self) {
            (Direction::Up, _) => 9.0,
            (Direction::Down, ParamId::Mp | ParamId::Mb) => 0.99,
            (Direction::Down, ParamId::Ip | ParamId::Ib) => 9.0,
            (Direction::Down, _) => 1.0,
        }
    }

    pub fn value(self, p: &VehicleParams) -> f64 {
        match self {
            ParamId::A => p.a,
            ParamId::C => p.d[0],
            ParamId::Mp => p.m_p,
            ParamId::Mb => p.m_b,
            ParamId::B2 => p.b_f.first().copied().unwrap_or(0.0),
            ParamId::Ip => p.i_p,
            ParamId::Ib => p.i_b,
        }
    }

    fn set(self, p: &mut VehicleParams, v: f64) {
        match self {
            ParamId::A => p.a = v,
            ParamId::C => p.d[0] = v,
            ParamId::Mp => p.m_p = v,
            ParamId::Mb => p.m_b = v,
            ParamId::B2 => {
                if let Some(b) = p.b_f.first_mut() {
                    *b = v
                }
            }
            ParamId::Ip => p.i_p = v,
            ParamId::Ib => p.i_b = v,
        }
    }
}

/// Search direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Up => 1.0,
            Direction::Down => -1.0,
        }
    }
}

/// One relative perturbation per parameter, indexed by [`ParamId::index`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CombinedPerturbation(pub [f64; 7]);

impl CombinedPerturbation {
    pub fn single(id: ParamId, delta: f64) -> Self {
        let mut d = [0.0; 7];
        d[id.index()] = delta;
        CombinedPerturbation(d)
    }

    pub fn get(&self, id: ParamId) -> f64 {
        self.0[id.index()]
    }
}

/// Perturbed parameters and the list of inertias that had to be clamped.
#[derive(Clone, Debug, PartialEq)]
pub struct Perturbed {
    pub params: VehicleParams,
    pub clamped: Vec<ParamId>,
}

/// `p → (1 + Δ_p)·p` for every parameter. Inertias that would become
/// non-positive are clamped to `INERTIA_FLOOR` times nominal; any other
/// non-physical result is an error.
pub fn apply_perturbation(nominal: &VehicleParams, delta: &CombinedPerturbation) -> Result<Perturbed> {
    let mut p = nominal.clone();
    let mut clamped = Vec::new();
    for id in ParamId::ALL {
        let d = delta.get(id);
        if !d.is_finite() {
            return Err(Error::InvalidParams(format!("Δ for {} is not finite", id.name())));
        }
        let nom = id.value(nominal);
        let mut v = (1.0 + d) * nom;
        if id.is_inertia() && v <= INERTIA_FLOOR * nom {
            v = INERTIA_FLOOR * nom;
            clamped.push(id);
        }
        id.set(&mut p, v);
    }
    p.validate()?;
    Ok(Perturbed { params: p, clamped })
}

/// Per-parameter box `[lo, hi]` of relative perturbations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationBox {
    pub lo: [f64; 7],
    pub hi: [f64; 7],
}

impl PerturbationBox {
    pub fn validate(&self) -> Result<()> {
        for id in ParamId::ALL {
            let (l, h) = (self.lo[id.index()], self.hi[id.index()]);
            if !(l.is_finite() && h.is_finite() && l <= h) {
                return Err(Error::InvalidParams(format!(
                    "range for {} must satisfy lo ≤ hi (got [{l}, {h}])",
                    id.name()
                )));
            }
        }
        Ok(())
    }

    /// Box collapsed to a single point.
    pub fn point(delta: &CombinedPerturbation) -> Self {
        PerturbationBox {
            lo: delta.0,
            hi: delta.0,
        }
    }

    /// Box with only some parameters free.
    pub fn only(ranges: &[(ParamId, f64, f64)]) -> Self {
        let mut b = PerturbationBox {
            lo: [0.0; 7],
            hi: [0.0; 7],
        };
        for &(id, l, h) in ranges {
            b.lo[id.index()] = l;
            b.hi[id.index()] = h;
        }
        b
    }

    /// Ranges found by [`param_range_search`] on the report-nominal vehicle
    /// with the default robustness scenario, rounded inwards and limited to
    /// ±90% where no failure was found.
    pub fn shipped() -> Self {
        PerturbationBox::only(&[
            (ParamId::A, -0.9, 0.9),
            (ParamId::C, -0.88, 0.9),
            (ParamId::Mp, -0.88, 0.9),
            (ParamId::Mb, -0.9, 0.9),
            (ParamId::B2, -0.84, 0.9),
            (ParamId::Ip, -0.9, 2.9),
            (ParamId::Ib, -0.9, 9.0),
        ])
    }

    /// Both endpoints of every parameter, one parameter at a time.
    pub fn extremes(&self) -> Vec<CombinedPerturbation> {
        ParamId::ALL
            .iter()
            .flat_map(|&id| {
                [
                    CombinedPerturbation::single(id, self.lo[id.index()]),
                    CombinedPerturbation::single(id, self.hi[id.index()]),
                ]
            })
            .collect()
    }
}

/// How random samples are placed in the box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Sampler {
    Uniform,
    /// Uniform over `levels` evenly spaced values per parameter (endpoints
    /// included).
    Lattice { levels: usize },
}

/// Sample `index` of the stream seeded by `seed`.
pub fn draw_sample(seed: u64, index: u64, b: &PerturbationBox, sampler: Sampler) -> CombinedPerturbation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut d = [0.0; 7];
    for id in ParamId::ALL {
        let (l, h) = (b.lo[id.index()], b.hi[id.index()]);
        d[id.index()] = match sampler {
            Sampler::Uniform => {
                let u: f64 = rng.random();
                l + (h - l) * u
            }
            Sampler::Lattice { levels } => {
                let k = rng.random_range(0..levels.max(1));
                if levels <= 1 {
                    l
                } else {
                    l + (h - l) * k as f64 / (levels - 1) as f64
                }
            }
        };
    }
    CombinedPerturbation(d)
}

/// Outcome of one bracketed bisection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    /// Largest value found to succeed.
    pub success: f64,
    /// Smallest value found to fail (`None` if the cap itself succeeded).
    pub failure: Option<f64>,
    pub evaluations: usize,
}

impl Bracket {
    pub fn capped(&self) -> bool {
        self.failure.is_none()
    }
}

/// Largest `s ∈ [0, cap]` with `ok(s)`, assuming a single success→failure
/// transition. Brackets by doubling from `start`, then bisects until the
/// bracket is narrower than `resolution`.
pub fn bisect_boundary<F>(mut ok: F, start: f64, cap: f64, resolution: f64) -> Result<Bracket>
where
    F: FnMut(f64) -> Result<bool>,
{
    if !(resolution > 0.0) || !(start > 0.0) || !(cap > 0.0) {
        return Err(Error::InvalidParams("bisection needs positive start, cap and resolution".into()));
    }
    let mut evaluations = 1;
    if !ok(0.0)? {
        return Err(Error::NominalFailed("the unperturbed case fails".into()));
    }
    let mut lo = 0.0;
    let mut probe = start.min(cap);
    let hi = loop {
        evaluations += 1;
        if !ok(probe)? {
            break probe;
        }
        lo = probe;
        if probe >= cap {
            return Ok(Bracket {
                success: lo,
                failure: None,
                evaluations,
            });
        }
        probe = (probe * 2.0).min(cap);
    };
    let mut hi = hi;
    while hi - lo > resolution {
        let mid = 0.5 * (lo + hi);
        evaluations += 1;
        if ok(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Bracket {
        success: lo,
        failure: Some(hi),
        evaluations,
    })
}

/// Shared inputs of every robustness search.
#[derive(Clone, Debug)]
pub struct Study {
    pub nominal: VehicleParams,
    pub gains: GainSet,
    pub scenario: Scenario,
}

impl Study {
    pub fn new(nominal: VehicleParams, gains: GainSet, scenario: Scenario) -> Result<Self> {
        nominal.validate()?;
        gains.validate()?;
        scenario.validate()?;
        Ok(Study {
            nominal,
            gains,
            scenario,
        })
    }

    pub fn controller(&self) -> Result<Controller> {
        Controller::new(self.nominal.clone(), self.gains.clone())
    }

    /// Simulate the scenario on a perturbed plant.
    pub fn simulate(&self, delta: &CombinedPerturbation) -> Result<(SimLog, Vec<ParamId>)> {
        let p = apply_perturbation(&self.nominal, delta)?;
        let log = self.scenario.simulate(&p.params, &self.controller()?)?;
        Ok((log, p.clamped))
    }

    /// `Completed` under a perturbation.
    pub fn survives(&self, delta: &CombinedPerturbation) -> Result<bool> {
        Ok(self.simulate(delta)?.0.termination == Termination::Completed)
    }
}

/// Admissible perturbation of one parameter in one direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeResult {
    pub param: ParamId,
    pub direction: Direction,
    /// Signed largest surviving `Δ`.
    pub delta: f64,
    /// Signed smallest failing `Δ` found (absent when the cap survives).
    pub failing_delta: Option<f64>,
    pub capped: bool,
    pub evaluations: usize,
}

/// Largest surviving perturbation of `param` in `direction`.
pub fn param_range_search(study: &Study, param: ParamId, direction: Direction, resolution: f64) -> Result<RangeResult> {
    let sign = direction.sign();
    let b = bisect_boundary(
        |s| study.survives(&CombinedPerturbation::single(param, sign * s)),
        0.01,
        param.search_cap(direction),
        resolution,
    )?;
    Ok(RangeResult {
        param,
        direction,
        delta: sign * b.success,
        failing_delta: b.failure.map(|f| sign * f),
        capped: b.capped(),
        evaluations: b.evaluations,
    })
}

/// Every parameter, both directions.
pub fn all_ranges(study: &Study, resolution: f64, workers: usize) -> Result<Vec<RangeResult>> {
    let jobs: Vec<(ParamId, Direction)> = ParamId::ALL
        .iter()
        .flat_map(|&p| [(p, Direction::Down), (p, Direction::Up)])
        .collect();
    pool(workers)?.install(|| {
        jobs.par_iter()
            .map(|&(p, d)| param_range_search(study, p, d, resolution))
            .collect()
    })
}

/// One evaluated sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub index: usize,
    pub delta: CombinedPerturbation,
    /// Single-parameter extreme included ahead of the random draws.
    pub forced: bool,
    pub termination: Termination,
    pub metrics: Option<Metrics>,
    pub clamped: Vec<ParamId>,
}

/// Worst sample for one metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorstCase {
    pub index: usize,
    pub delta: CombinedPerturbation,
    pub value: f64,
}

/// Result of a Monte-Carlo worst-case search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub seed: u64,
    pub n_samples: usize,
    pub sampler: Sampler,
    pub perturbation_box: PerturbationBox,
    pub params_hash: String,
    pub worst_pos: WorstCase,
    pub worst_phi: WorstCase,
    pub failed: usize,
    pub samples: Vec<SampleRecord>,
}

/// Options of [`worst_case_search`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchOptions {
    pub n_samples: usize,
    pub seed: u64,
    pub sampler: Sampler,
    /// Put the 14 single-parameter extremes first.
    pub include_extremes: bool,
    pub workers: usize,
}

impl SearchOptions {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        SearchOptions {
            n_samples,
            seed,
            sampler: Sampler::Uniform,
            include_extremes: true,
            workers: default_workers(),
        }
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// The sample set: forced extremes (if requested) followed by seeded draws.
pub fn sample_set(b: &PerturbationBox, opts: &SearchOptions) -> Vec<(CombinedPerturbation, bool)> {
    let forced: Vec<CombinedPerturbation> = if opts.include_extremes { b.extremes() } else { Vec::new() };
    (0..opts.n_samples)
        .map(|i| match forced.get(i) {
            Some(d) => (*d, true),
            None => (draw_sample(opts.seed, i as u64, b, opts.sampler), false),
        })
        .collect()
}

/// Argmax of `E_pos` and `E_φ` over the samples; failures are skipped and
/// ties go to the lowest index.
pub fn worst_of(samples: &[SampleRecord]) -> Option<(WorstCase, WorstCase)> {
    let mut pos: Option<WorstCase> = None;
    let mut phi: Option<WorstCase> = None;
    for s in samples {
        let Some(m) = s.metrics.filter(|_| s.termination == Termination::Completed) else {
            continue;
        };
        if pos.as_ref().is_none_or(|w| m.e_pos > w.value) {
            pos = Some(WorstCase {
                index: s.index,
                delta: s.delta,
                value: m.e_pos,
            });
        }
        if phi.as_ref().is_none_or(|w| m.e_phi > w.value) {
            phi = Some(WorstCase {
                index: s.index,
                delta: s.delta,
                value: m.e_phi,
            });
        }
    }
    Some((pos?, phi?))
}

/// Monte-Carlo search for the combined perturbations with the largest
/// position and orientation errors.
pub fn worst_case_search(study: &Study, b: &PerturbationBox, opts: &SearchOptions) -> Result<RobustnessReport> {
    b.validate()?;
    if !study.survives(&CombinedPerturbation::default())? {
        return Err(Error::NominalFailed("nominal scenario does not complete".into()));
    }
    let set = sample_set(b, opts);
    let samples: Vec<SampleRecord> = pool(opts.workers)?.install(|| {
        set.par_iter()
            .enumerate()
            .map(|(index, &(delta, forced))| {
                let (termination, metrics, clamped) = match study.simulate(&delta) {
                    Ok((log, clamped)) => {
                        let m = metrics(&log).ok();
                        (log.termination, m, clamped)
                    }
                    Err(_) => (Termination::Diverged, None, Vec::new()),
                };
                SampleRecord {
                    index,
                    delta,
                    forced,
                    termination,
                    metrics,
                    clamped,
                }
            })
            .collect()
    });
    let failed = samples.iter().filter(|s| s.termination != Termination::Completed).count();
    let (worst_pos, worst_phi) = worst_of(&samples).ok_or(Error::AllSamplesFailed(samples.len()))?;
    Ok(RobustnessReport {
        seed: opts.seed,
        n_samples: opts.n_samples,
        sampler: opts.sampler,
        perturbation_box: b.clone(),
        params_hash: study.nominal.hash_hex(),
        worst_pos,
        worst_phi,
        failed,
        samples,
    })
}

/// Largest tolerated amplitude at one frequency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToleranceResult {
    pub omega: f64,
    pub a_max: f64,
    /// Smallest failing amplitude found (absent when the cap survives).
    pub a_fail: Option<f64>,
    pub evaluations: usize,
    pub metrics: Metrics,
    #[serde(skip)]
    pub log: Option<SimLog>,
}

/// Upper limit of the amplitude bracket search (m/s²).
pub const AMPLITUDE_CAP: f64 = 1e4;

/// Per frequency, the largest `A` in `d(t) = A sin(ωt + ψ)` for which the
/// nominal closed loop completes the scenario, with its log.
pub fn disturbance_tolerance(
    study: &Study,
    omegas: &[f64],
    phase: f64,
    resolution: f64,
    workers: usize,
) -> Result<Vec<ToleranceResult>> {
    let controller = study.controller()?;
    let sim = |a: f64, omega: f64| -> Result<SimLog> {
        let dist = DisturbanceSpec::new(a, omega, phase)?;
        study.scenario.with_disturbance(dist).simulate(&study.nominal, &controller)
    };
    if sim(0.0, 0.0)?.termination != Termination::Completed {
        return Err(Error::NominalFailed("undisturbed scenario does not complete".into()));
    }
    pool(workers)?.install(|| {
        omegas
            .par_iter()
            .map(|&omega| {
                let b = bisect_boundary(
                    |a| Ok(sim(a, omega)?.termination == Termination::Completed),
                    0.25,
                    AMPLITUDE_CAP,
                    resolution,
                )?;
                let log = sim(b.success, omega)?;
                Ok(ToleranceResult {
                    omega,
                    a_max: b.success,
                    a_fail: b.failure,
                    evaluations: b.evaluations,
                    metrics: metrics(&log)?,
                    log: Some(log),
                })
            })
            .collect()
    })
}

/// Metrics at a fixed amplitude for each frequency.
pub fn disturbance_response(
    study: &Study,
    amplitude: f64,
    omegas: &[f64],
    phase: f64,
    workers: usize,
) -> Result<Vec<(f64, SimLog)>> {
    let controller = study.controller()?;
    pool(workers)?.install(|| {
        omegas
            .par_iter()
            .map(|&omega| {
                let dist = DisturbanceSpec::new(amplitude, omega, phase)?;
                let log = study.scenario.with_disturbance(dist).simulate(&study.nominal, &controller)?;
                Ok((omega, log))
            })
            .collect()
    })
}
