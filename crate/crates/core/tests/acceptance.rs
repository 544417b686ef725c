//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Pass criterion numbers as arguments to
//! run a subset, e.g. `cargo test --test acceptance -- 5 6`.

use std::f64::consts::FRAC_PI_2;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use omav::analysis::{
    decoupling_matrix, extended_decoupling, integrate_zero_dynamics, omni_classify, wrench_jacobian,
    zero_dynamics_general_rhs, zero_output_state, OmniKind, ZeroDynState,
};
use omav::control::{Controller, GainSet, Reference, Sinusoid};
use omav::dynamics::{
    bias_forces, equilibrium_input, equilibrium_state, forward_dynamics, generalized_forces, mass_matrix,
    static_balance_residual, total_energy, ActuationOption, EquilibriumPose, GenState, InputVector, VehicleParams,
};
use omav::extended::ExtendedState;
use omav::linalg::numerical_rank;
use omav::oracle::{oracle_bias, oracle_generalized_forces, oracle_mass_matrix};
use omav::robustness::{
    disturbance_response, disturbance_tolerance, param_range_search, worst_case_search, CombinedPerturbation, Direction,
    ParamId, PerturbationBox, Sampler, SearchOptions, Study, ToleranceResult,
};
use omav::scenario::Scenario;
use omav::simulate::{integrate_plant, metrics, run, windowed_max, DisturbanceSpec, Termination};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1.0)
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_state(p: &VehicleParams, r: &mut ChaCha8Rng) -> GenState {
    let q = (0..p.dof()).map(|_| r.random_range(-3.0..3.0)).collect();
    let qd = (0..p.dof()).map(|_| r.random_range(-2.0..2.0)).collect();
    GenState { q, qd }
}

fn random_pose(r: &mut ChaCha8Rng) -> EquilibriumPose {
    EquilibriumPose::new(r.random_range(-20.0..20.0), r.random_range(-20.0..20.0), r.random_range(-1.2..1.2))
}

fn c1_oracle() -> Outcome {
    let t0 = Instant::now();
    let mut servo = VehicleParams::main_paper();
    servo.actuation_option = ActuationOption::Servo;
    let mut worst = 0.0f64;
    for (k, p) in [VehicleParams::type1(3), VehicleParams::report_nominal(), servo].iter().enumerate() {
        let mut r = rng(100 + k as u64);
        for _ in 0..100 {
            let s = random_state(p, &mut r);
            let u = InputVector((0..p.n_inputs()).map(|_| r.random_range(0.0..50.0)).collect());
            let m = mass_matrix(p, &s.q).map_err(|e| e.to_string())?;
            let mo = oracle_mass_matrix(p, &s.q).map_err(|e| e.to_string())?;
            let (h, g) = bias_forces(p, &s).map_err(|e| e.to_string())?;
            let bo = oracle_bias(p, &s).map_err(|e| e.to_string())?;
            let f = generalized_forces(p, &s, &u).map_err(|e| e.to_string())?;
            let fo = oracle_generalized_forces(p, &s, &u).map_err(|e| e.to_string())?;
            for i in 0..p.dof() {
                for j in 0..p.dof() {
                    ensure(close(m[(i, j)], mo[(i, j)], 1e-9), || format!("M[{i}][{j}] differs"))?;
                    worst = worst.max((m[(i, j)] - mo[(i, j)]).abs() / mo[(i, j)].abs().max(1.0));
                }
                ensure(close(h[i] + g[i], bo[i], 1e-9), || format!("h+g[{i}] differs"))?;
                ensure(close(f[i], fo[i], 1e-9), || format!("Q[{i}] differs"))?;
                worst = worst.max((h[i] + g[i] - bo[i]).abs() / bo[i].abs().max(1.0));
                worst = worst.max((f[i] - fo[i]).abs() / fo[i].abs().max(1.0));
            }
        }
    }
    let el = t0.elapsed();
    ensure(el < Duration::from_secs(10), || format!("took {el:?}"))?;
    Ok(format!("max relative deviation {worst:.2e} over 300 states, {el:.2?}"))
}

fn c2_equilibrium() -> Outcome {
    let mut worst = 0.0f64;
    for p in [VehicleParams::type1(3), VehicleParams::main_paper(), VehicleParams::report_nominal()] {
        let mut r = rng(2);
        let u = equilibrium_input(&p);
        let hover = p.gravity * p.m_tot() / p.n as f64;
        for (k, &f) in u.lift_channels(&p).iter().enumerate() {
            ensure(f == hover, || format!("channel {k}: {f} != {hover}"))?;
        }
        if let Some(m) = u.moment_channel(&p) {
            ensure(m == 0.0, || "moment channel not zero".into())?;
        }
        for _ in 0..50 {
            let s = equilibrium_state(&p, random_pose(&mut r));
            let res = static_balance_residual(&p, &s.q, &u).map_err(|e| e.to_string())?;
            let n = res.iter().map(|v| v * v).sum::<f64>().sqrt();
            worst = worst.max(n);
            ensure(n < 1e-12, || format!("residual {n:e}"))?;
        }
    }
    Ok(format!("max residual norm {worst:.2e}"))
}

fn c3_energy() -> Outcome {
    let mut worst = 0.0f64;
    let mut t2 = VehicleParams::main_paper();
    t2.b_f = vec![0.0];
    let mut t1 = VehicleParams::type1(3);
    t1.b_f = vec![0.0; 3];
    for (k, p) in [t2, t1].iter().enumerate() {
        let mut r = rng(30 + k as u64);
        let mut s = random_state(p, &mut r);
        s.q[1] = 50.0;
        let zero = InputVector(vec![0.0; p.n_inputs()]);
        let traj = integrate_plant(p, &s, |_, _| zero.clone(), 5.0, 1e-3).map_err(|e| e.to_string())?;
        let energy: Vec<(f64, f64)> = traj.iter().map(|s| total_energy(p, s).unwrap()).collect();
        let e0 = energy[0].0 + energy[0].1;
        let scale = energy.iter().map(|(t, u)| t + u.abs()).fold(0.0, f64::max);
        let drift = energy.iter().map(|(t, u)| (t + u - e0).abs()).fold(0.0, f64::max) / scale;
        worst = worst.max(drift);
    }
    ensure(worst < 1e-6, || format!("relative drift {worst:e}"))?;
    Ok(format!("max relative energy drift {worst:.2e}"))
}

fn c4_ranks() -> Outcome {
    let p1 = VehicleParams::type1(3);
    let p2 = VehicleParams::main_paper();
    let mut r = rng(4);
    let mut worst_cond = 0.0f64;
    for _ in 0..20 {
        let pose = random_pose(&mut r);
        let s1 = equilibrium_state(&p1, pose);
        let jw = wrench_jacobian(&p1, &s1.q).map_err(|e| e.to_string())?;
        let d = decoupling_matrix(&p1, &s1).map_err(|e| e.to_string())?;
        ensure(numerical_rank(&jw, 1e-9) == 2, || "Type 1 wrench Jacobian rank != 2".into())?;
        ensure(numerical_rank(&d, 1e-9) == 2, || "Type 1 decoupling rank != 2".into())?;
        let s2 = equilibrium_state(&p2, pose);
        let dec = extended_decoupling(&p2, &ExtendedState::hover(&p2, s2)).map_err(|e| e.to_string())?;
        let c = dec.condition_number();
        worst_cond = worst_cond.max(c);
        ensure(c < 1e6, || format!("condition number {c:e} at φ = {}", pose.phi))?;
    }
    // det → 0 linearly as z12 → 0
    let base = ExtendedState::hover(&p2, equilibrium_state(&p2, EquilibriumPose::new(0.0, 0.0, 0.6)));
    let det0 = extended_decoupling(&p2, &base).unwrap().determinant();
    for s in [1e-1, 1e-2, 1e-3] {
        let mut e = base.clone();
        e.z[1] *= s;
        let ratio = extended_decoupling(&p2, &e).unwrap().determinant() / det0;
        ensure((ratio / s - 1.0).abs() < 0.5, || format!("det ratio {ratio:e} at lift scale {s}"))?;
    }
    let mut e = base.clone();
    e.z[1] = 0.0;
    ensure(extended_decoupling(&p2, &e).unwrap().determinant().abs() < 1e-12 * det0.abs().max(1.0), || {
        "det not zero at z12 = 0".into()
    })?;
    // det → 0 linearly as φ → π/2, with a sign change across it
    let det_at = |phi: f64| {
        let e = ExtendedState::hover(&p2, equilibrium_state(&p2, EquilibriumPose::new(0.0, 0.0, phi)));
        extended_decoupling(&p2, &e).unwrap().determinant()
    };
    let mut prev = det_at(FRAC_PI_2 - 1e-1);
    for eps in [1e-2, 1e-3, 1e-4] {
        let d = det_at(FRAC_PI_2 - eps);
        let ratio = d / prev;
        ensure((ratio / 0.1 - 1.0).abs() < 0.5, || format!("det ratio {ratio} approaching π/2"))?;
        ensure(d * det_at(FRAC_PI_2 + eps) < 0.0, || "no sign change across π/2".into())?;
        prev = d;
    }
    let s1 = equilibrium_state(&p1, EquilibriumPose::new(0.0, 0.0, 0.0));
    let s2 = equilibrium_state(&p2, EquilibriumPose::new(0.0, 0.0, 0.0));
    let c1 = omni_classify(&p1, &s1.q, 64).map_err(|e| e.to_string())?;
    let c2 = omni_classify(&p2, &s2.q, 64).map_err(|e| e.to_string())?;
    ensure(c1.kind == OmniKind::NotOmnidirectional, || format!("Type 1 classified {:?}", c1.kind))?;
    ensure(c2.kind == OmniKind::FullyOmnidirectional, || format!("Type 2 classified {:?}", c2.kind))?;
    Ok(format!(
        "ranks 2/2 at 20 equilibria, worst cond(A) {worst_cond:.2e}, det linear in z12 and cos φ, omni {:?}/{:?}",
        c1.kind, c2.kind
    ))
}

fn c5_regulation() -> Outcome {
    let t0 = Instant::now();
    let p = VehicleParams::main_paper();
    let ctl = Controller::new(p.clone(), GainSet::default()).map_err(|e| e.to_string())?;
    let log = Scenario::regulation().simulate(&p, &ctl).map_err(|e| e.to_string())?;
    let el = t0.elapsed();
    ensure(log.termination == Termination::Completed, || format!("{:?}", log.termination))?;
    let (ep, ephi) = (*log.e_pos.last().unwrap(), *log.e_phi.last().unwrap());
    ensure(ep.hypot(ephi) < 1e-3, || format!("final pose error {ep:e} m / {ephi:e} rad"))?;
    for (k, u) in log.inputs.iter().enumerate() {
        InputVector(u.clone()).validate(&p).map_err(|e| format!("sample {k}: {e}"))?;
    }
    ensure(el < Duration::from_secs(5), || format!("took {el:?}"))?;
    Ok(format!("final error {ep:.1e} m, {ephi:.1e} rad; inputs valid at {} samples; {el:.2?}", log.len()))
}

fn c6_tracking() -> Outcome {
    let p = VehicleParams::report_nominal();
    let ctl = Controller::new(p.clone(), GainSet::default()).map_err(|e| e.to_string())?;
    let a = Scenario::circle(None).simulate(&p, &ctl).map_err(|e| e.to_string())?;
    let b = Scenario::circle(Some(Sinusoid::default_orientation()))
        .simulate(&p, &ctl)
        .map_err(|e| e.to_string())?;
    ensure(a.termination == Termination::Completed && b.termination == Termination::Completed, || {
        "run did not complete".into()
    })?;
    let (e_win, _) = windowed_max(&a, 10.0, 20.0).map_err(|e| e.to_string())?;
    ensure(e_win < 1e-4, || format!("E_pos over [10, 20] s = {e_win:e}"))?;
    let diff = a.e_pos.iter().zip(&b.e_pos).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    ensure(diff < 1e-6, || format!("position error series differ by {diff:e}"))?;
    Ok(format!("E_pos[10,20] = {e_win:.2e} m, series difference with sinusoidal φ_d {diff:.2e}"))
}

fn c7_zero_dynamics() -> Outcome {
    let phi = 60f64.to_radians();
    let pose = [10.0, 8.0, phi];
    let nominal = VehicleParams::report_nominal();
    let mut simple = nominal.clone();
    simple.d[0] = 0.0;
    simple.b_f[0] = 0.0;
    let starts = [
        (0.1, 0.1),
        (0.1, -0.1),
        (-0.1, 0.1),
        (-0.1, -0.1),
        (0.2, 0.2),
        (0.2, -0.2),
        (-0.2, 0.2),
        (-0.2, -0.2),
        (0.2, -0.1),
        (-0.1, 0.2),
    ];
    let reference = Reference::regulate_rad(pose[0], pose[1], pose[2]);
    let mut worst_final = 0.0f64;
    let mut min_growth = f64::INFINITY;
    for &(de, e2) in &starts {
        let z0 = ZeroDynState::new(-phi + de, e2);
        // report-nominal: converges
        let ctl = Controller::new(nominal.clone(), GainSet::default()).unwrap();
        let ext = zero_output_state(&nominal, pose, z0).map_err(|e| e.to_string())?;
        let log = run(&nominal, &ctl, &reference, &DisturbanceSpec::none(), &ext, 15.0, 1e-3).map_err(|e| e.to_string())?;
        ensure(log.termination == Termination::Completed, || format!("start {de},{e2}: {:?}", log.termination))?;
        let x = log.final_state().unwrap();
        let dist = (x[3] + phi).abs().max(x[8].abs());
        worst_final = worst_final.max(dist);
        ensure(dist < 1e-3, || format!("start ({de}, {e2}) ends {dist:e} from (−φ_d, 0)"))?;
        // frictionless d = 0 variant: does not return
        let ctl = Controller::new(simple.clone(), GainSet::default()).unwrap();
        let ext = zero_output_state(&simple, pose, z0).map_err(|e| e.to_string())?;
        let log = run(&simple, &ctl, &reference, &DisturbanceSpec::none(), &ext, 15.0, 1e-3).map_err(|e| e.to_string())?;
        let x = log.final_state().unwrap();
        let initial = de.abs().max(e2.abs());
        let dist = (x[3] + phi).abs().max(x[8].abs());
        let growth = if log.termination == Termination::Completed { dist / initial } else { f64::INFINITY };
        min_growth = min_growth.min(growth);
        ensure(growth > 2.0, || format!("d = 0 start ({de}, {e2}) stayed within {dist:e}"))?;
    }
    // numerical zero dynamics vs the full closed loop
    let mut worst_traj = 0.0f64;
    let mut worst_rhs = 0.0f64;
    for &(de, e2) in &starts[..3] {
        let z0 = ZeroDynState::new(-phi + de, e2);
        let ctl = Controller::new(nominal.clone(), GainSet::default()).unwrap();
        let ext = zero_output_state(&nominal, pose, z0).map_err(|e| e.to_string())?;
        let dt = 1e-3;
        let log = run(&nominal, &ctl, &reference, &DisturbanceSpec::none(), &ext, 5.0, dt).map_err(|e| e.to_string())?;
        let zd = integrate_zero_dynamics(|z| zero_dynamics_general_rhs(&nominal, phi, z), z0, 5.0, dt)
            .map_err(|e| e.to_string())?;
        for (k, (x, z)) in log.states.iter().zip(&zd).enumerate() {
            worst_traj = worst_traj.max((x[3] - z.eta1).abs()).max((x[8] - z.eta2).abs());
            if k % 250 == 0 {
                let s = GenState {
                    q: x[..5].to_vec(),
                    qd: x[5..10].to_vec(),
                };
                let qdd = forward_dynamics(&nominal, &s, &InputVector(log.inputs[k].clone()), [0.0; 3]).unwrap();
                let rhs = zero_dynamics_general_rhs(&nominal, phi, ZeroDynState::new(x[3], x[8])).map_err(|e| e.to_string())?;
                worst_rhs = worst_rhs.max((rhs.eta1 - x[8]).abs()).max((rhs.eta2 - qdd[3]).abs());
            }
        }
    }
    ensure(worst_traj < 1e-4, || format!("trajectory deviation {worst_traj:e}"))?;
    ensure(worst_rhs < 1e-4, || format!("η̇ deviation {worst_rhs:e}"))?;
    Ok(format!(
        "10/10 converge (worst {worst_final:.1e}), d = 0 variant grows ≥ {min_growth:.1}×, ZD vs full sim {worst_traj:.1e} (traj) / {worst_rhs:.1e} (η̇)"
    ))
}

fn short_study(seconds: f64) -> Study {
    let scenario = Scenario {
        t_final: seconds,
        ..Scenario::robustness()
    };
    Study::new(VehicleParams::report_nominal(), GainSet::default(), scenario).unwrap()
}

fn c8_sampler() -> Outcome {
    // 3×3×3 lattice against brute force
    let study = short_study(5.0);
    let b = PerturbationBox::only(&[(ParamId::A, -0.3, 0.3), (ParamId::Mp, -0.3, 0.3), (ParamId::Ib, -0.5, 0.5)]);
    let mut opts = SearchOptions::new(150, 11);
    opts.sampler = Sampler::Lattice { levels: 3 };
    opts.include_extremes = false;
    let report = worst_case_search(&study, &b, &opts).map_err(|e| e.to_string())?;
    let mut cells: Vec<[u64; 3]> = report
        .samples
        .iter()
        .map(|s| [s.delta.get(ParamId::A), s.delta.get(ParamId::Mp), s.delta.get(ParamId::Ib)].map(f64::to_bits))
        .collect();
    cells.sort();
    cells.dedup();
    ensure(cells.len() == 27, || format!("sampler covered {} of 27 cells", cells.len()))?;
    let mut best_pos = (f64::NEG_INFINITY, CombinedPerturbation::default());
    let mut best_phi = best_pos;
    for i in 0..27 {
        let lv = |k: usize, lo: f64, hi: f64| lo + (hi - lo) * ((i / 3usize.pow(k as u32)) % 3) as f64 / 2.0;
        let mut d = CombinedPerturbation::default();
        d.0[ParamId::A.index()] = lv(0, -0.3, 0.3);
        d.0[ParamId::Mp.index()] = lv(1, -0.3, 0.3);
        d.0[ParamId::Ib.index()] = lv(2, -0.5, 0.5);
        let (log, _) = study.simulate(&d).map_err(|e| e.to_string())?;
        if log.termination != Termination::Completed {
            continue;
        }
        let m = metrics(&log).unwrap();
        if m.e_pos > best_pos.0 {
            best_pos = (m.e_pos, d);
        }
        if m.e_phi > best_phi.0 {
            best_phi = (m.e_phi, d);
        }
    }
    ensure(report.worst_pos.value == best_pos.0 && report.worst_pos.delta == best_pos.1, || {
        format!("E_pos argmax {:?} vs brute force {:?}", report.worst_pos, best_pos)
    })?;
    ensure(report.worst_phi.value == best_phi.0 && report.worst_phi.delta == best_phi.1, || {
        format!("E_φ argmax {:?} vs brute force {:?}", report.worst_phi, best_phi)
    })?;

    // reproducibility
    let small = SearchOptions::new(24, 42);
    let r1 = worst_case_search(&study, &PerturbationBox::shipped(), &small).map_err(|e| e.to_string())?;
    let r2 = worst_case_search(&study, &PerturbationBox::shipped(), &small).map_err(|e| e.to_string())?;
    let (j1, j2) = (serde_json::to_string(&r1).unwrap(), serde_json::to_string(&r2).unwrap());
    ensure(j1 == j2, || "identical seeds gave different reports".into())?;

    // full sweep
    let t0 = Instant::now();
    let full = Study::new(VehicleParams::report_nominal(), GainSet::default(), Scenario::robustness()).unwrap();
    let big = worst_case_search(&full, &PerturbationBox::shipped(), &SearchOptions::new(1000, 2024))
        .map_err(|e| e.to_string())?;
    let el = t0.elapsed();
    ensure(el < Duration::from_secs(600), || format!("1000-sample sweep took {el:?}"))?;
    let forced_max = big
        .samples
        .iter()
        .filter(|s| s.forced && s.termination == Termination::Completed)
        .filter_map(|s| s.metrics.map(|m| m.e_pos))
        .fold(0.0, f64::max);
    ensure(big.worst_pos.value >= forced_max, || "worst case below a forced extreme".into())?;
    Ok(format!(
        "lattice argmax matches brute force, reports reproducible, 1000 samples in {el:.1?} on {} worker(s) \
         ({} failed; worst E_pos {:.3} m at #{}, worst E_φ {:.3} rad at #{})",
        SearchOptions::new(1, 0).workers,
        big.failed,
        big.worst_pos.value,
        big.worst_pos.index,
        big.worst_phi.value,
        big.worst_phi.index
    ))
}

const DIST_RESOLUTION: f64 = 1e-2;

fn disturbance_study() -> &'static Study {
    static S: OnceLock<Study> = OnceLock::new();
    S.get_or_init(|| Study::new(VehicleParams::report_nominal(), GainSet::default(), Scenario::disturbance()).unwrap())
}

fn tolerance_at_zero() -> &'static Result<ToleranceResult, String> {
    static T: OnceLock<Result<ToleranceResult, String>> = OnceLock::new();
    T.get_or_init(|| {
        disturbance_tolerance(disturbance_study(), &[0.0], FRAC_PI_2, DIST_RESOLUTION, 1)
            .map(|mut v| v.remove(0))
            .map_err(|e| e.to_string())
    })
}

fn c9_disturbance() -> Outcome {
    let tol = tolerance_at_zero().as_ref().map_err(|e| e.clone())?;
    let a = 0.5 * tol.a_max;
    let omegas = [0.0, 0.1, 1.0, 10.0];
    let logs = disturbance_response(disturbance_study(), a, &omegas, FRAC_PI_2, 1).map_err(|e| e.to_string())?;
    let mut pos = Vec::new();
    let mut phi = Vec::new();
    for (w, log) in &logs {
        ensure(log.termination == Termination::Completed, || format!("ω = {w}: {:?}", log.termination))?;
        let m = metrics(log).unwrap();
        pos.push(m.steady_state_pos);
        phi.push(m.steady_state_phi);
    }
    ensure(pos.windows(2).all(|w| w[1] < w[0]), || format!("position steady state {pos:?}"))?;
    ensure(phi.windows(2).all(|w| w[1] < w[0]), || format!("orientation steady state {phi:?}"))?;
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" > ");
    Ok(format!("A = {a:.3} (A_max(0) = {:.3}); e_pos: {}; e_φ: {}", tol.a_max, fmt(&pos), fmt(&phi)))
}

fn c10_brackets() -> Outcome {
    let study = Study::new(VehicleParams::report_nominal(), GainSet::default(), Scenario::robustness()).unwrap();
    let res = 1e-3;
    let mut notes = Vec::new();
    for (param, dir) in [(ParamId::Ip, Direction::Up), (ParamId::Mp, Direction::Down)] {
        let r = param_range_search(&study, param, dir, res).map_err(|e| e.to_string())?;
        ensure(!r.capped, || format!("{} {:?}: no failure found", param.name(), dir))?;
        let ok = study.survives(&CombinedPerturbation::single(param, r.delta)).map_err(|e| e.to_string())?;
        let beyond = r.delta + dir.sign() * res;
        let fails = !study.survives(&CombinedPerturbation::single(param, beyond)).map_err(|e| e.to_string())?;
        ensure(ok && fails, || format!("{}: bracket broken at {} / {beyond}", param.name(), r.delta))?;
        notes.push(format!("{} {:?} Δ = {:+.3}", param.name(), dir, r.delta));
    }
    let tol = tolerance_at_zero().as_ref().map_err(|e| e.clone())?;
    let ctl = study.controller().unwrap();
    let sim = |a: f64| {
        disturbance_study()
            .scenario
            .with_disturbance(DisturbanceSpec::new(a, 0.0, FRAC_PI_2).unwrap())
            .simulate(&disturbance_study().nominal, &ctl)
            .unwrap()
            .termination
    };
    ensure(sim(tol.a_max) == Termination::Completed, || "A_max does not survive".into())?;
    ensure(sim(tol.a_max + DIST_RESOLUTION) != Termination::Completed, || "A_max + resolution survives".into())?;
    notes.push(format!("A_max(ω=0) = {:.3}", tol.a_max));
    Ok(notes.join(", "))
}

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "oracle equivalence", c1_oracle),
        (2, "equilibrium", c2_equilibrium),
        (3, "energy conservation", c3_energy),
        (4, "rank claims and omnidirectionality", c4_ranks),
        (5, "pose regulation", c5_regulation),
        (6, "exact tracking and decoupling", c6_tracking),
        (7, "zero dynamics", c7_zero_dynamics),
        (8, "sampler correctness", c8_sampler),
        (9, "disturbance frequency ordering", c9_disturbance),
        (10, "bisection brackets", c10_brackets),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, name, f) in criteria {
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let t0 = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let el = t0.elapsed();
        match outcome {
            Ok(detail) => println!("PASS criterion {n:>2} ({name}): {detail} [{el:.1?}]"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {n:>2} ({name}): {why} [{el:.1?}]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
