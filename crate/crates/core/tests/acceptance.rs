//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qwitness::document::{report_json, TripleDocument};
use qwitness::golden::golden_triple;
use qwitness::matcore::{Hermitian2, QubitState};
use qwitness::optimizer::{full_search, grid_search, refine_local, FullParams};
use qwitness::simulator::{
    fibonacci_probes, noise_threshold, run_protocol, sweep, write_sweep_csv, zero_crossing, ExperimentPlan, NoiseFamily,
};
use qwitness::witness::{violation_eigs_closed_form, ClassicalModel, WitnessTriple};

/// Targets and tolerances. Values marked "oracle" were computed beforehand by an
/// independent numpy script (`tools/oracle.py`).
mod pinned {
    pub const FIRST_GAP: f64 = 0.0528;
    pub const SECOND_GAP: f64 = -0.0590;
    pub const GAP_TOL: f64 = 5e-4;
    pub const ORDER_TOL: f64 = 1e-9;
    pub const VERIFY_BUDGET_MS: u64 = 1;

    pub const EIG_HI: f64 = 0.809;
    pub const EIG_LO: f64 = 0.0;
    pub const EIG_TOL: f64 = 5e-4;
    pub const VEC_HI: [f64; 2] = [0.946, 0.325];
    pub const VEC_TOL: f64 = 5e-3;

    pub const OPT_GRID: f64 = 1e-3;
    pub const OPT_REFINE_TOL: f64 = 1e-8;
    pub const OPT_A1: f64 = 0.724;
    pub const OPT_A2: f64 = 0.0854;
    pub const OPT_B: f64 = 0.309;
    pub const OPT_XI: f64 = 0.249;
    pub const OPT_PARAM_TOL: f64 = 2e-3;
    /// Oracle: exhaustive 1e-4 scan of the boundary family.
    pub const OPT_OBJECTIVE: f64 = -0.059017;
    pub const OPT_OBJECTIVE_TOL: f64 = 1e-4;
    pub const OPT_BUDGET_S: u64 = 30;

    pub const FULL_STEP: f64 = 0.02;
    pub const FULL_SLACK_MAX: f64 = 0.04;
    pub const FULL_OBJECTIVE_TOL: f64 = 0.005;
    pub const FULL_BUDGET_S: u64 = 120;

    pub const CLOSED_FORM_DRAWS: usize = 10_000;
    pub const CLOSED_FORM_TOL: f64 = 1e-10;

    pub const CLASSICAL_DRAWS: usize = 10_000;
    pub const COMMUTING_FLOOR: f64 = -1e-12;

    pub const SIM_SHOTS: usize = 1_000_000;
    pub const SIM_SEED: u64 = 42;
    pub const SIM_PROBE_GRID: usize = 102;
    pub const SIM_Z: f64 = 5.0;
    pub const SIM_SE_MULTIPLE: f64 = 4.0;
    pub const SIM_BUDGET_S: u64 = 10;

    /// Oracle: affine depolarizing mixing, `g0 / (g0 - Tr(B² - A²)/2)`.
    pub const P_STAR: f64 = 0.211;
    pub const P_STAR_TOL: f64 = 0.002;
    pub const SWEEP_TOL: f64 = 0.01;
    pub const SWEEP_SHOTS: usize = 100_000;
    pub const SWEEP_STEPS: usize = 81;
    pub const SWEEP_TO: f64 = 0.4;
    pub const SWEEP_SEED: u64 = 42;
    pub const SWEEP_BUDGET_S: u64 = 60;

    pub const BASIS_ANGLE: f64 = 19.0;
    pub const STATE_ANGLE: f64 = 67.0;
    pub const ANGLE_TOL: f64 = 0.5;
    pub const VALUES_B: (f64, f64) = (1.0, 0.309);
    pub const VALUES_A: (f64, f64) = (0.809, 0.0);
    pub const VALUE_TOL: f64 = 5e-4;
}

struct Line {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

/// Serialized outputs kept for the reproducibility rerun.
#[derive(Default)]
struct Artifacts {
    optimize: Option<String>,
    simulate: Option<String>,
    sweep: Option<Vec<u8>>,
}

fn close(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn within(elapsed: Duration, budget: Duration) -> bool {
    elapsed <= budget
}

fn single_threaded<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("thread pool")
        .install(f)
}

fn golden_verification() -> Line {
    let start = Instant::now();
    let t = golden_triple();
    let ordering = t.check_ordering(pinned::ORDER_TOL);
    let v = t.violation_report();
    let elapsed = start.elapsed();
    let pass = ordering.ordered
        && v.witnessed
        && close(v.first_gap, pinned::FIRST_GAP, pinned::GAP_TOL)
        && close(v.second_gap, pinned::SECOND_GAP, pinned::GAP_TOL)
        && within(elapsed, Duration::from_millis(pinned::VERIFY_BUDGET_MS));
    Line {
        id: 1,
        name: "golden triple verification",
        pass,
        detail: format!(
            "first_gap={:.5} second_gap={:.5} ordered={} time={:?}",
            v.first_gap, v.second_gap, ordering.ordered, elapsed
        ),
    }
}

fn eigenstructure() -> Line {
    let e = golden_triple().a.m.eig();
    // Global phase: align so the first component is real and non-negative.
    let v = qwitness::matcore::gauge_fix(&e.vec_hi);
    let comp_ok = v
        .iter()
        .zip(pinned::VEC_HI)
        .all(|(c, target)| close(c.re, target, pinned::VEC_TOL) && c.im.abs() <= pinned::VEC_TOL);
    let pass = close(e.hi, pinned::EIG_HI, pinned::EIG_TOL) && close(e.lo, pinned::EIG_LO, pinned::EIG_TOL) && comp_ok;
    Line {
        id: 2,
        name: "eigenstructure of A",
        pass,
        detail: format!(
            "eigs=({:.5}, {:.2e}) hi_vec=({:.5}, {:.5})",
            e.hi, e.lo, v[0].re, v[1].re
        ),
    }
}

fn optimize_once() -> (qwitness::Optimum<f64>, String, Duration) {
    let start = Instant::now();
    let opt = single_threaded(|| {
        let coarse = grid_search(pinned::OPT_GRID).expect("grid search");
        let start = qwitness::ReducedParams::new(coarse.params.a1, coarse.params.a2).expect("grid point feasible");
        refine_local(start, pinned::OPT_REFINE_TOL).expect("refinement converges")
    });
    let elapsed = start.elapsed();
    let doc = TripleDocument::from_optimum(&opt, "reduced", pinned::OPT_GRID, Some(pinned::OPT_REFINE_TOL)).to_json();
    (opt, doc, elapsed)
}

fn optimizer_reproduction(art: &mut Artifacts) -> Line {
    let (opt, doc, elapsed) = optimize_once();
    let p = opt.params;
    let pass = close(p.a1, pinned::OPT_A1, pinned::OPT_PARAM_TOL)
        && close(p.a2, pinned::OPT_A2, pinned::OPT_PARAM_TOL)
        && close(p.b, pinned::OPT_B, pinned::OPT_PARAM_TOL)
        && close(p.xi, pinned::OPT_XI, pinned::OPT_PARAM_TOL)
        && close(opt.objective, pinned::OPT_OBJECTIVE, pinned::OPT_OBJECTIVE_TOL)
        && within(elapsed, Duration::from_secs(pinned::OPT_BUDGET_S));
    art.optimize = Some(doc);
    Line {
        id: 3,
        name: "optimizer reproduction",
        pass,
        detail: format!(
            "a1={:.5} a2={:.5} b={:.5} xi={:.5} objective={:.7} (target {} ± {}) time={:?}",
            p.a1, p.a2, p.b, p.xi, opt.objective, pinned::OPT_OBJECTIVE, pinned::OPT_OBJECTIVE_TOL, elapsed
        ),
    }
}

fn boundary_activity() -> Line {
    let start = Instant::now();
    let full = full_search(pinned::FULL_STEP).expect("full search");
    let elapsed = start.elapsed();
    let reduced = refine_local(
        qwitness::ReducedParams::new(0.72, 0.085).expect("feasible"),
        pinned::OPT_REFINE_TOL,
    )
    .expect("refinement converges");
    let (s1, s2) = full.constraint_slacks;
    let gap = (full.objective - reduced.objective).abs();
    let pass = s1.abs() < pinned::FULL_SLACK_MAX
        && s2.abs() < pinned::FULL_SLACK_MAX
        && gap <= pinned::FULL_OBJECTIVE_TOL
        && within(elapsed, Duration::from_secs(pinned::FULL_BUDGET_S));
    Line {
        id: 4,
        name: "boundary activity",
        pass,
        detail: format!(
            "slacks=({s1:.4}, {s2:.4}) objective={:.5} reduced={:.5} |diff|={gap:.4} time={elapsed:?}",
            full.objective, reduced.objective
        ),
    }
}

/// A uniformly drawn feasible point, with a random phase on the coupling.
fn feasible_draw(rng: &mut impl Rng) -> (FullParams<f64>, Hermitian2<f64>, Hermitian2<f64>) {
    let b: f64 = rng.random();
    let a1: f64 = rng.random();
    let a2: f64 = rng.random::<f64>() * b;
    let cap = (a1 * a2).min((1.0 - a1) * (b - a2)).max(0.0);
    let xi = rng.random::<f64>() * cap.sqrt();
    let phase: f64 = rng.random::<f64>() * std::f64::consts::TAU;
    let a = Hermitian2::new(a1, a2, Complex::from_polar(xi, phase)).expect("finite");
    let bm = Hermitian2::diag(1.0, b).expect("finite");
    (FullParams::new(a1, a2, b, xi), a, bm)
}

fn closed_form_cross_check() -> Line {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..pinned::CLOSED_FORM_DRAWS {
        let (p, a, b) = feasible_draw(&mut rng);
        let (minus, plus) = violation_eigs_closed_form(p.a1, p.a2, p.b, p.xi);
        let (lo, hi) = (b.square() - a.square()).spectrum();
        worst = worst.max((minus - lo).abs()).max((plus - hi).abs());
    }
    Line {
        id: 5,
        name: "closed-form cross-check",
        pass: worst <= pinned::CLOSED_FORM_TOL,
        detail: format!("{} draws, max |closed form - eigensolve| = {worst:.2e}", pinned::CLOSED_FORM_DRAWS),
    }
}

fn classical_soundness() -> Line {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut model_violations = 0;
    for _ in 0..pinned::CLASSICAL_DRAWS {
        let n = rng.random_range(2..=16);
        let g: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let f: Vec<f64> = g.iter().map(|&gi| gi * rng.random::<f64>()).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
        let total: f64 = w.iter().sum();
        let mut rho: Vec<f64> = w.iter().map(|x| x / total).collect();
        let rest: f64 = rho[1..].iter().sum();
        rho[0] = 1.0 - rest;
        let m = ClassicalModel::new(f, g, rho).expect("valid model");
        if !m.second_moment_check().holds {
            model_violations += 1;
        }
    }

    let mut worst = f64::INFINITY;
    for _ in 0..pinned::CLASSICAL_DRAWS {
        let b = [rng.random::<f64>(), rng.random::<f64>()];
        let a = [b[0] * rng.random::<f64>(), b[1] * rng.random::<f64>()];
        let (s, c) = (rng.random::<f64>() * std::f64::consts::PI).sin_cos();
        let ph = Complex::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU);
        let u = [[Complex::new(c, 0.0), -ph.conj() * s], [ph * s, Complex::new(c, 0.0)]];
        let am = Hermitian2::diag(a[0], a[1]).expect("finite").conjugate_by(&u);
        let bm = Hermitian2::diag(b[0], b[1]).expect("finite").conjugate_by(&u);
        let t = WitnessTriple::new(am, bm, QubitState::pure_real(1.0, 0.0).expect("basis"));
        worst = worst.min(t.violation_report().min_eig_b2_a2);
    }
    Line {
        id: 6,
        name: "classical soundness",
        pass: model_violations == 0 && worst >= pinned::COMMUTING_FLOOR,
        detail: format!(
            "{} models, {model_violations} violations; {} commuting triples, min eig(B²-A²) = {worst:.2e}",
            pinned::CLASSICAL_DRAWS,
            pinned::CLASSICAL_DRAWS
        ),
    }
}

fn simulate_plan() -> ExperimentPlan {
    let mut plan = ExperimentPlan::new(golden_triple(), pinned::SIM_SEED);
    plan.shots_per_observable = pinned::SIM_SHOTS;
    plan.probe_states.extend(fibonacci_probes(pinned::SIM_PROBE_GRID));
    plan
}

fn statistical_protocol(art: &mut Artifacts) -> Line {
    let plan = simulate_plan();
    let start = Instant::now();
    let v = run_protocol(&plan).expect("protocol runs");
    let elapsed = start.elapsed();
    let exact = plan.triple.violation_report();
    let own = &v.details[0];
    let first_ok = (own.first_gap - exact.first_gap).abs() <= pinned::SIM_SE_MULTIPLE * own.first_gap_se;
    let second_ok = (own.second_gap - exact.second_gap).abs() <= pinned::SIM_SE_MULTIPLE * own.second_gap_se;
    let pass = v.stage1_pass
        && v.stage2_violation
        && v.z_score >= pinned::SIM_Z
        && first_ok
        && second_ok
        && within(elapsed, Duration::from_secs(pinned::SIM_BUDGET_S));
    art.simulate = Some(report_json(&v));
    Line {
        id: 7,
        name: "statistical protocol",
        pass,
        detail: format!(
            "stage1={} stage2={} z={:.1} first_gap={:.5}±{:.1e} second_gap={:.5}±{:.1e} time={elapsed:?}",
            v.stage1_pass, v.stage2_violation, v.z_score, own.first_gap, own.first_gap_se, own.second_gap, own.second_gap_se
        ),
    }
}

fn sweep_plan() -> ExperimentPlan {
    let mut plan = ExperimentPlan::new(golden_triple(), pinned::SWEEP_SEED);
    plan.shots_per_observable = pinned::SWEEP_SHOTS;
    plan
}

fn sweep_csv() -> (Vec<u8>, Option<f64>) {
    let rows = sweep(&sweep_plan(), 0.0, pinned::SWEEP_TO, pinned::SWEEP_STEPS).expect("sweep runs");
    let mut buf = Vec::new();
    write_sweep_csv(&rows, &mut buf).expect("csv");
    (buf, zero_crossing(&rows))
}

fn noise_threshold_check(art: &mut Artifacts) -> Line {
    let p_star = noise_threshold(&golden_triple(), NoiseFamily::Depolarizing).expect("threshold");
    let start = Instant::now();
    let (csv, crossing) = sweep_csv();
    let elapsed = start.elapsed();
    let crossing_ok = crossing.is_some_and(|c| close(c, p_star, pinned::SWEEP_TOL));
    let pass = close(p_star, pinned::P_STAR, pinned::P_STAR_TOL)
        && crossing_ok
        && within(elapsed, Duration::from_secs(pinned::SWEEP_BUDGET_S));
    art.sweep = Some(csv);
    Line {
        id: 8,
        name: "noise threshold",
        pass,
        detail: format!("p*={p_star:.5} sweep crossing={crossing:.5?} time={elapsed:?}"),
    }
}

fn photon_translation() -> Line {
    let setup = golden_triple().photon_angles().expect("pure ordered triple");
    let pair_close = |(x, y): (f64, f64), (tx, ty): (f64, f64)| close(x, tx, pinned::VALUE_TOL) && close(y, ty, pinned::VALUE_TOL);
    let pass = close(setup.basis_rotation_deg, pinned::BASIS_ANGLE, pinned::ANGLE_TOL)
        && close(setup.state_angle_deg, pinned::STATE_ANGLE, pinned::ANGLE_TOL)
        && pair_close(setup.outcome_values_b, pinned::VALUES_B)
        && pair_close(setup.outcome_values_a, pinned::VALUES_A);
    Line {
        id: 9,
        name: "photon translation",
        pass,
        detail: format!(
            "basis={:.3}° state={:.3}° B values=({:.4}, {:.4}) A values=({:.4}, {:.2e})",
            setup.basis_rotation_deg,
            setup.state_angle_deg,
            setup.outcome_values_b.0,
            setup.outcome_values_b.1,
            setup.outcome_values_a.0,
            setup.outcome_values_a.1
        ),
    }
}

/// Reruns criteria 3, 7 and 8 on a single worker thread and compares bytes.
fn reproducibility(art: &Artifacts) -> Line {
    let (_, optimize, _) = optimize_once();
    let simulate = single_threaded(|| report_json(&run_protocol(&simulate_plan()).expect("protocol runs")));
    let (csv, _) = single_threaded(sweep_csv);
    let same = [
        art.optimize.as_deref() == Some(optimize.as_str()),
        art.simulate.as_deref() == Some(simulate.as_str()),
        art.sweep.as_deref() == Some(csv.as_slice()),
    ];
    Line {
        id: 10,
        name: "reproducibility",
        pass: same.iter().all(|&s| s),
        detail: format!("identical bytes: optimize={} simulate={} sweep={}", same[0], same[1], same[2]),
    }
}

fn main() -> ExitCode {
    let mut art = Artifacts::default();
    let lines = vec![
        golden_verification(),
        eigenstructure(),
        optimizer_reproduction(&mut art),
        boundary_activity(),
        closed_form_cross_check(),
        classical_soundness(),
        statistical_protocol(&mut art),
        noise_threshold_check(&mut art),
        photon_translation(),
        reproducibility(&art),
    ];
    for l in &lines {
        println!(
            "{} AC{:<2} {:<28} {}",
            if l.pass { "PASS" } else { "FAIL" },
            l.id,
            l.name,
            l.detail
        );
    }
    let failed = lines.iter().filter(|l| !l.pass).count();
    println!("acceptance: {} passed, {failed} failed", lines.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
