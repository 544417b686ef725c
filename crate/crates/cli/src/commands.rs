use omav::analysis::{
    fit_simplified_constant, integrate_zero_dynamics, omni_classify, rank_report, simplified_linearization,
    zero_dynamics_general_rhs, OmniClass, RankReport, ZeroDynState,
};
use omav::control::{AngleUnit, Reference, Sinusoid};
use omav::dynamics::{equilibrium_state, ActuationOption, EquilibriumPose, VehicleParams, VehicleType};
use omav::oracle::{compare_with_oracle, OracleComparison};
use omav::robustness::{
    all_ranges, default_workers, disturbance_response, disturbance_tolerance, param_range_search, worst_case_search,
    CombinedPerturbation, Direction, ParamId, PerturbationBox, RangeResult, Sampler, SearchOptions, Study,
    ToleranceResult,
};
use omav::scenario::{Scenario, ScenarioConfig};
use omav::simulate::{metrics, Metrics, SimLog, Termination};
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::output::{log_header, log_plots, log_rows, num, OutDir};
use crate::plot::{range_bars, LinePlot, Series};
use crate::{Cli, Command, Common, DirArg, SamplerArg};

/// Largest oracle deviation accepted by `validate`.
const ORACLE_TOLERANCE: f64 = 1e-9;

pub fn dispatch(cli: &Cli) -> Result<()> {
    let c = &cli.common;
    match &cli.command {
        Command::Regulate { x, y, phi } => regulate(c, *x, *y, *phi),
        Command::Track { sinusoid } => track(c, *sinusoid),
        Command::Analyze {
            x,
            y,
            phi,
            grid,
            zd_time,
        } => analyze(c, *x, *y, *phi, *grid, *zd_time),
        Command::Validate => validate(c),
        Command::ParamRange {
            param,
            direction,
            resolution,
        } => param_range(c, param, *direction, *resolution),
        Command::WorstCase {
            sampler,
            levels,
            no_extremes,
        } => worst_case(c, *sampler, *levels, *no_extremes),
        Command::DisturbanceSweep {
            omegas,
            resolution,
            fraction,
        } => disturbance_sweep(c, omegas, *resolution, *fraction),
    }
}

/// Config file (or the command's default) with command-line overrides.
fn load_config(c: &Common, preset: &str, scenario: Scenario) -> Result<ScenarioConfig> {
    let mut cfg = match &c.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            ScenarioConfig::parse(&text)?
        }
        None => ScenarioConfig::new(preset, scenario),
    };
    if let Some(p) = &c.preset {
        cfg.preset = Some(p.clone());
        cfg.params = None;
    }
    if let Some(dt) = c.dt {
        cfg.scenario.dt = dt;
    }
    if let Some(t) = c.t_final {
        cfg.scenario.t_final = t;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    cfg.params()?;
    cfg.gains()?;
    cfg.scenario.validate()?;
    Ok(cfg)
}

fn open_out(c: &Common, cfg: &ScenarioConfig) -> Result<OutDir> {
    let mut out = OutDir::create(&c.out, cfg.hash_hex(), cfg.seed)?;
    out.json("config.json", cfg)?;
    Ok(out)
}

fn workers(c: &Common) -> usize {
    c.workers.unwrap_or_else(default_workers).max(1)
}

fn done(dir: &std::path::Path, files: Vec<String>) {
    println!("wrote {} files to {}", files.len() + 1, dir.display());
}

#[derive(Serialize)]
struct RunSummary {
    termination: Termination,
    samples: usize,
    t_end: f64,
    final_e_pos: f64,
    final_e_phi: f64,
    metrics: Option<Metrics>,
    min_lift: f64,
    min_unidirectional_margin: f64,
}

fn summarize(log: &SimLog) -> RunSummary {
    let finite = log.inputs.iter().filter(|u| u.iter().all(|v| v.is_finite()));
    let (min_lift, min_margin) = finite.fold((f64::INFINITY, f64::INFINITY), |(l, m), u| {
        (l.min(u[0]).min(u[1]), m.min(u[1] - u[2].abs()))
    });
    RunSummary {
        termination: log.termination,
        samples: log.len(),
        t_end: log.times.last().copied().unwrap_or(0.0),
        final_e_pos: log.e_pos.last().copied().unwrap_or(f64::NAN),
        final_e_phi: log.e_phi.last().copied().unwrap_or(f64::NAN),
        metrics: metrics(log).ok(),
        min_lift,
        min_unidirectional_margin: min_margin,
    }
}

fn simulate_and_write(c: &Common, cfg: &ScenarioConfig, command: &str) -> Result<()> {
    let plant = cfg.params()?;
    let ctl = cfg.controller()?;
    let mut log = cfg.scenario.simulate(&plant, &ctl)?;
    log.meta.seed = cfg.seed;
    let mut out = open_out(c, cfg)?;
    out.csv("log.csv", &log_header(), log_rows(&log))?;
    let summary = summarize(&log);
    out.json("summary.json", &summary)?;
    log_plots(&mut out, "", &log)?;
    done(&c.out, out.finish(command)?);
    println!(
        "{:?} at t = {} s; final e_pos = {:.3e} m, e_phi = {:.3e} rad",
        summary.termination, summary.t_end, summary.final_e_pos, summary.final_e_phi
    );
    match log.termination {
        Termination::Completed => Ok(()),
        other => Err(CliError::RunFailed(format!("run ended early: {other:?} at t = {} s", summary.t_end))),
    }
}

fn regulate(c: &Common, x: Option<f64>, y: Option<f64>, phi: Option<f64>) -> Result<()> {
    let mut cfg = load_config(c, "main-paper", Scenario::regulation())?;
    if let (Some(x), Some(y), Some(phi)) = (x, y, phi) {
        cfg.scenario.reference = Reference::Regulate {
            x,
            y,
            phi,
            unit: AngleUnit::Deg,
        };
    }
    if !matches!(cfg.scenario.reference, Reference::Regulate { .. }) {
        return Err(CliError::Usage("regulate needs a `regulate` reference".into()));
    }
    simulate_and_write(c, &cfg, "regulate")
}

fn track(c: &Common, sinusoid: bool) -> Result<()> {
    let mut cfg = load_config(c, "report-nominal", Scenario::circle(None))?;
    match &mut cfg.scenario.reference {
        Reference::Circle { orientation, .. } => {
            if sinusoid {
                *orientation = Some(Sinusoid::default_orientation());
            }
        }
        Reference::Regulate { .. } => return Err(CliError::Usage("track needs a `circle` reference".into())),
    }
    simulate_and_write(c, &cfg, "track")
}

#[derive(Serialize)]
struct ZeroDynTrajectory {
    start: [f64; 2],
    end: Option<[f64; 2]>,
    error: Option<String>,
}

#[derive(Serialize)]
struct ZeroDynReport {
    phi_d: f64,
    fitted_l: f64,
    saddle_eigenvalues: Option<(f64, f64)>,
    trajectories: Vec<ZeroDynTrajectory>,
}

#[derive(Serialize)]
struct AnalyzeReport {
    pose: [f64; 3],
    ranks: RankReport,
    omnidirectionality: OmniClass,
    zero_dynamics: Option<ZeroDynReport>,
}

fn analyze(c: &Common, x: f64, y: f64, phi_deg: f64, grid: usize, zd_time: f64) -> Result<()> {
    let cfg = load_config(c, "report-nominal", Scenario::regulation())?;
    let p = cfg.params()?;
    let phi = phi_deg.to_radians();
    let state = equilibrium_state(&p, EquilibriumPose::new(x, y, phi));
    let ranks = rank_report(&p, &state)?;
    let omni = omni_classify(&p, &state.q, grid)?;
    let mut out = open_out(c, &cfg)?;

    let supported = p.vehicle_type == VehicleType::Type2 && p.n == 2;
    let zero_dynamics = if supported {
        let samples: Vec<ZeroDynState> = [-0.02, -0.01, 0.01, 0.02]
            .iter()
            .map(|e| ZeroDynState::new(-phi + e, 0.0))
            .collect();
        let l = fit_simplified_constant(&p, phi, &samples)?;
        let dt = 1e-3;
        let mut rows = Vec::new();
        let mut plot = LinePlot::new("Zero dynamics", "η1 (rad)", "η2 (rad/s)");
        let mut trajectories = Vec::new();
        for (k, (d1, d2)) in [(0.1, 0.1), (-0.1, -0.1), (0.2, -0.1), (-0.2, 0.2)].into_iter().enumerate() {
            let z0 = ZeroDynState::new(-phi + d1, d2);
            match integrate_zero_dynamics(|z| zero_dynamics_general_rhs(&p, phi, z), z0, zd_time, dt) {
                Ok(traj) => {
                    for (i, z) in traj.iter().enumerate() {
                        rows.push(vec![k.to_string(), num(i as f64 * dt), num(z.eta1), num(z.eta2)]);
                    }
                    let last = traj.last().copied().unwrap_or(z0);
                    plot.series.push(Series::new(
                        format!("start {k}"),
                        traj.iter().map(|z| z.eta1).collect(),
                        traj.iter().map(|z| z.eta2).collect(),
                    ));
                    trajectories.push(ZeroDynTrajectory {
                        start: [z0.eta1, z0.eta2],
                        end: Some([last.eta1, last.eta2]),
                        error: None,
                    });
                }
                Err(e) => trajectories.push(ZeroDynTrajectory {
                    start: [z0.eta1, z0.eta2],
                    end: None,
                    error: Some(e.to_string()),
                }),
            }
        }
        let header = ["start", "t", "eta1", "eta2"].map(String::from);
        out.csv("zero_dynamics.csv", &header, rows)?;
        out.svg("zero_dynamics.svg", &plot)?;
        Some(ZeroDynReport {
            phi_d: phi,
            fitted_l: l,
            saddle_eigenvalues: simplified_linearization(phi, l),
            trajectories,
        })
    } else {
        None
    };
    let report = AnalyzeReport {
        pose: [x, y, phi],
        ranks,
        omnidirectionality: omni,
        zero_dynamics,
    };
    out.json("analysis.json", &report)?;
    println!(
        "ranks: wrench {} / decoupling {}; {:?}",
        report.ranks.wrench_jacobian_rank, report.ranks.decoupling_rank, report.omnidirectionality.kind
    );
    done(&c.out, out.finish("analyze")?);
    Ok(())
}

#[derive(Serialize)]
struct OracleEntry {
    vehicle: String,
    comparison: OracleComparison,
    pass: bool,
}

#[derive(Serialize)]
struct ValidateReport {
    tolerance: f64,
    vehicles: Vec<OracleEntry>,
}

fn validate(c: &Common) -> Result<()> {
    let cfg = load_config(c, "main-paper", Scenario::regulation())?;
    let vehicles: Vec<(String, VehicleParams)> = if c.config.is_some() || c.preset.is_some() {
        vec![(cfg.preset.clone().unwrap_or_else(|| "config".into()), cfg.params()?)]
    } else {
        let mut servo = VehicleParams::main_paper();
        servo.actuation_option = ActuationOption::Servo;
        vec![
            ("type1-n3".into(), VehicleParams::type1(3)),
            ("main-paper".into(), VehicleParams::main_paper()),
            ("report-nominal".into(), VehicleParams::report_nominal()),
            ("main-paper-servo".into(), servo),
        ]
    };
    let n = c.samples.unwrap_or(100);
    let mut entries = Vec::new();
    for (name, p) in vehicles {
        let cmp = compare_with_oracle(&p, n, cfg.seed)?;
        println!(
            "{name}: max relative deviation M {:.2e}, h+g {:.2e}, Q {:.2e} over {n} states",
            cmp.mass_matrix, cmp.bias, cmp.forces
        );
        entries.push(OracleEntry {
            vehicle: name,
            pass: cmp.max() < ORACLE_TOLERANCE,
            comparison: cmp,
        });
    }
    let mut out = open_out(c, &cfg)?;
    let failed: Vec<String> = entries.iter().filter(|e| !e.pass).map(|e| e.vehicle.clone()).collect();
    out.json(
        "validation.json",
        &ValidateReport {
            tolerance: ORACLE_TOLERANCE,
            vehicles: entries,
        },
    )?;
    done(&c.out, out.finish("validate")?);
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::RunFailed(format!("oracle mismatch for {}", failed.join(", "))))
    }
}

fn study(cfg: &ScenarioConfig) -> Result<Study> {
    Ok(Study::new(cfg.params()?, cfg.gains()?, cfg.scenario.clone())?)
}

#[derive(Serialize)]
struct RangeReport {
    resolution: f64,
    ranges: Vec<RangeResult>,
}

fn param_range(c: &Common, param: &str, dir: DirArg, resolution: f64) -> Result<()> {
    let cfg = load_config(c, "report-nominal", Scenario::robustness())?;
    let st = study(&cfg)?;
    let params: Vec<ParamId> = if param == "all" {
        ParamId::ALL.to_vec()
    } else {
        vec![ParamId::from_name(param)?]
    };
    let dirs: &[Direction] = match dir {
        DirArg::Up => &[Direction::Up],
        DirArg::Down => &[Direction::Down],
        DirArg::Both => &[Direction::Down, Direction::Up],
    };
    let ranges = if params.len() == ParamId::ALL.len() && dirs.len() == 2 {
        all_ranges(&st, resolution, workers(c))?
    } else {
        let mut v = Vec::new();
        for &p in &params {
            for &d in dirs {
                v.push(param_range_search(&st, p, d, resolution)?);
            }
        }
        v
    };
    let mut out = open_out(c, &cfg)?;
    let header = ["param", "direction", "delta", "failing_delta", "capped", "evaluations"].map(String::from);
    out.csv(
        "ranges.csv",
        &header,
        ranges.iter().map(|r| {
            vec![
                r.param.name().to_string(),
                format!("{:?}", r.direction).to_lowercase(),
                num(r.delta),
                r.failing_delta.map(num).unwrap_or_default(),
                r.capped.to_string(),
                r.evaluations.to_string(),
            ]
        }),
    )?;
    let mut rows: Vec<(String, f64, f64)> = Vec::new();
    for p in &params {
        let lo = ranges.iter().filter(|r| r.param == *p && r.direction == Direction::Down).map(|r| r.delta).next();
        let hi = ranges.iter().filter(|r| r.param == *p && r.direction == Direction::Up).map(|r| r.delta).next();
        rows.push((p.name().to_string(), lo.unwrap_or(0.0), hi.unwrap_or(0.0)));
    }
    let svg = range_bars("Tolerated single-parameter perturbation", "Δ (relative)", &rows, &out.stamp());
    out.write("ranges.svg", svg.as_bytes())?;
    for r in &ranges {
        println!(
            "{:>4} {:<4} Δ = {:+.4}{}",
            r.param.name(),
            format!("{:?}", r.direction).to_lowercase(),
            r.delta,
            if r.capped { " (search cap, no failure)" } else { "" }
        );
    }
    out.json("ranges.json", &RangeReport { resolution, ranges })?;
    done(&c.out, out.finish("param-range")?);
    Ok(())
}

fn worst_case(c: &Common, sampler: SamplerArg, levels: usize, no_extremes: bool) -> Result<()> {
    let cfg = load_config(c, "report-nominal", Scenario::robustness())?;
    let st = study(&cfg)?;
    let b = PerturbationBox::shipped();
    let opts = SearchOptions {
        n_samples: c.samples.unwrap_or(1000),
        seed: cfg.seed,
        sampler: match sampler {
            SamplerArg::Uniform => Sampler::Uniform,
            SamplerArg::Lattice => Sampler::Lattice { levels },
        },
        include_extremes: !no_extremes,
        workers: workers(c),
    };
    let report = worst_case_search(&st, &b, &opts)?;
    let mut out = open_out(c, &cfg)?;
    let mut header = vec!["index".to_string(), "forced".into(), "termination".into()];
    header.extend(ParamId::ALL.iter().map(|p| format!("delta_{}", p.name())));
    header.extend(["e_pos", "e_phi", "ss_pos", "ss_phi", "clamped"].map(String::from));
    out.csv(
        "samples.csv",
        &header,
        report.samples.iter().map(|s| {
            let mut r = vec![s.index.to_string(), s.forced.to_string(), format!("{:?}", s.termination)];
            r.extend(s.delta.0.iter().copied().map(num));
            match s.metrics {
                Some(m) => r.extend([m.e_pos, m.e_phi, m.steady_state_pos, m.steady_state_phi].map(num)),
                None => r.extend(std::iter::repeat_n(String::new(), 4)),
            }
            r.push(s.clamped.iter().map(|p| p.name()).collect::<Vec<_>>().join(" "));
            r
        }),
    )?;
    out.json("worst_case.json", &report)?;

    let runs = [
        ("nominal", CombinedPerturbation::default()),
        ("worst E_pos", report.worst_pos.delta),
        ("worst E_φ", report.worst_phi.delta),
    ];
    let mut pos = LinePlot::new("Position error", "t (s)", "e_pos (m)");
    let mut phi = LinePlot::new("Attitude error", "t (s)", "e_φ (rad)");
    for (name, d) in runs {
        let (log, _) = st.simulate(&d)?;
        pos.series.push(Series::new(name, log.times.clone(), log.e_pos.clone()));
        phi.series.push(Series::new(name, log.times.clone(), log.e_phi.clone()));
    }
    out.svg("e_pos.svg", &pos)?;
    out.svg("e_phi.svg", &phi)?;
    println!(
        "{} samples ({} failed); worst E_pos {:.4e} m at #{}, worst E_phi {:.4e} rad at #{}",
        report.samples.len(),
        report.failed,
        report.worst_pos.value,
        report.worst_pos.index,
        report.worst_phi.value,
        report.worst_phi.index
    );
    done(&c.out, out.finish("worst-case")?);
    Ok(())
}

#[derive(Serialize)]
struct ResponseEntry {
    omega: f64,
    termination: Termination,
    metrics: Option<Metrics>,
}

#[derive(Serialize)]
struct SweepReport {
    phase: f64,
    resolution: f64,
    tolerance: Vec<ToleranceResult>,
    response_amplitude: f64,
    responses: Vec<ResponseEntry>,
}

fn disturbance_sweep(c: &Common, omegas: &[f64], resolution: f64, fraction: f64) -> Result<()> {
    if omegas.is_empty() {
        return Err(CliError::Usage("at least one frequency is required".into()));
    }
    if !(fraction > 0.0) {
        return Err(CliError::Usage("--fraction must be positive".into()));
    }
    let cfg = load_config(c, "report-nominal", Scenario::disturbance())?;
    let st = study(&cfg)?;
    let phase = cfg.scenario.disturbance.phase;
    let tolerance = disturbance_tolerance(&st, omegas, phase, resolution, workers(c))?;
    let amplitude = fraction * tolerance[0].a_max;
    let logs = disturbance_response(&st, amplitude, omegas, phase, workers(c))?;
    let mut out = open_out(c, &cfg)?;
    let mut pos = LinePlot::new("Position error under disturbance", "t (s)", "e_pos (m)");
    let mut phi = LinePlot::new("Attitude error under disturbance", "t (s)", "e_φ (rad)");
    let mut responses = Vec::new();
    for (w, log) in &logs {
        pos.series.push(Series::new(format!("ω = {w}"), log.times.clone(), log.e_pos.clone()));
        phi.series.push(Series::new(format!("ω = {w}"), log.times.clone(), log.e_phi.clone()));
        responses.push(ResponseEntry {
            omega: *w,
            termination: log.termination,
            metrics: metrics(log).ok(),
        });
    }
    out.svg("e_pos.svg", &pos)?;
    out.svg("e_phi.svg", &phi)?;
    let header = ["omega", "a_max", "termination", "ss_pos", "ss_phi", "e_pos", "e_phi"].map(String::from);
    out.csv(
        "response.csv",
        &header,
        tolerance.iter().zip(&responses).map(|(t, r)| {
            let m = r.metrics.map(|m| [m.steady_state_pos, m.steady_state_phi, m.e_pos, m.e_phi]);
            let mut row = vec![num(t.omega), num(t.a_max), format!("{:?}", r.termination)];
            row.extend(m.map(|v| v.map(num).to_vec()).unwrap_or_else(|| vec![String::new(); 4]));
            row
        }),
    )?;
    for (t, r) in tolerance.iter().zip(&responses) {
        let ss = r.metrics.map(|m| (m.steady_state_pos, m.steady_state_phi)).unwrap_or((f64::NAN, f64::NAN));
        println!(
            "ω = {:<6} A_max = {:.4}  steady-state e_pos = {:.3e} m, e_phi = {:.3e} rad at A = {amplitude:.4}",
            t.omega, t.a_max, ss.0, ss.1
        );
    }
    out.json(
        "disturbance.json",
        &SweepReport {
            phase,
            resolution,
            tolerance,
            response_amplitude: amplitude,
            responses,
        },
    )?;
    done(&c.out, out.finish("disturbance-sweep")?);
    Ok(())
}
