//! Acceptance suite. Runs without the test harness so that every criterion
//! prints one PASS/FAIL line; exits non-zero if any criterion fails.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use collapse_core::bullet::{bullet_report, ground_state, packet_constant, BulletParams, GridSpec};
use collapse_core::collapse::{
    cnot_system_control, decompose, derive_measurement_operators, detector_unitary, sample_outcome, BasisMethod, CandidateBasis,
};
use collapse_core::energy::{audit_at_first_peak, energy_after_ensemble, energy_before, energy_delta, energy_sweep, SweepConfig};
use collapse_core::entanglement::{unitary_trace, EntanglementProbe};
use collapse_core::experiment::InitialState;
use collapse_core::quantum::{build_hamiltonian, evolve, ModelSpec, PauliTermSum, StateVector};
use collapse_core::Result;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Result<Verdict> {
    Ok(Verdict { pass, detail: detail.into() })
}

fn ising(n: usize, g: f64) -> PauliTermSum {
    build_hamiltonian(&ModelSpec::DegenerateIsing { n, g }).unwrap()
}

/// `2^(−(N+1)/2) Σ exp(−i g t s_a Σ_k s_k) |a, e⟩`, written out directly.
fn ising_closed_form(n: usize, g: f64, t: f64) -> StateVector {
    let norm = 2f64.powf(-((n + 1) as f64) / 2.0);
    let amps = (0..1usize << (n + 1))
        .map(|index| {
            let sa = if index >> n == 0 { 1.0 } else { -1.0 };
            let sum_env: f64 = (0..n).map(|k| if index >> k & 1 == 0 { 1.0 } else { -1.0 }).sum();
            C64::from_polar(norm, -g * t * sa * sum_env)
        })
        .collect();
    StateVector::from_amplitudes(amps).unwrap()
}

fn random_unitary(n: usize, rng: &mut ChaCha20Rng) -> DMatrix<C64> {
    DMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).qr().q()
}

fn random_hamiltonian(num_sites: usize, rng: &mut ChaCha20Rng) -> PauliTermSum {
    let letters = ['I', 'X', 'Y', 'Z'];
    let terms = (0..3 * num_sites)
        .map(|_| {
            let label: String = (0..num_sites).map(|_| letters[rng.random_range(0..4)]).collect();
            (C64::new(rng.random_range(-1.0..1.0), 0.0), label)
        })
        .collect();
    build_hamiltonian(&ModelSpec::Custom { num_sites, terms }).unwrap()
}

fn computational_basis(d: usize) -> Vec<Vec<C64>> {
    (0..d).map(|k| (0..d).map(|j| C64::new(if j == k { 1.0 } else { 0.0 }, 0.0)).collect()).collect()
}

fn analytic_evolution() -> Result<Verdict> {
    let start = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.random_range(1..=10);
        let g = rng.random_range(0.2..3.0);
        let gt = rng.random_range(0.0..TAU);
        let numeric = evolve(&StateVector::plus(n + 1)?, &ising(n, g), gt / g)?;
        worst = worst.max(1.0 - numeric.fidelity(&ising_closed_form(n, g, gt / g))?);
    }
    let elapsed = start.elapsed();
    verdict(worst < 1e-9 && elapsed < Duration::from_secs(10), format!("max infidelity {worst:.2e}, {elapsed:.2?}"))
}

fn revival() -> Result<Verdict> {
    let mut worst: f64 = 0.0;
    for n in 2..=10 {
        for g in [0.5, 1.0, 1.7] {
            let psi0 = StateVector::plus(n + 1)?;
            let back = evolve(&psi0, &ising(n, g), TAU / g)?;
            worst = worst.max((back.fidelity(&psi0)? - 1.0).abs());
        }
    }
    verdict(worst < 1e-8, format!("max |F − 1| {worst:.2e} over N = 2..10"))
}

fn speed_trend() -> Result<Verdict> {
    let start = Instant::now();
    let mut peaks = Vec::new();
    for n in [2, 4, 6, 8] {
        let h = build_hamiltonian(&ModelSpec::TransverseCoupled { n })?;
        let trace = unitary_trace(&EntanglementProbe::new(&h), &StateVector::plus(n + 1)?, "transverse_coupled", 3.0, 0.01)?;
        peaks.push(trace.peak_speed().unwrap().epsilon_dot);
    }
    let elapsed = start.elapsed();
    let monotone = peaks.windows(2).all(|w| w[1] >= w[0]);
    verdict(monotone && elapsed < Duration::from_secs(120), format!("max ε̇ {peaks:.4?}, {elapsed:.2?}"))
}

fn energy_trend() -> Result<Verdict> {
    let rows = energy_sweep(&[2, 4, 6, 8], &SweepConfig::default())?;
    let dev: Vec<f64> = rows.iter().map(|r| r.audit.relative_deviation).collect();
    let banded = dev.windows(2).all(|w| w[1] <= 1.1 * w[0]);
    verdict(banded, format!("|ΔE/E| {dev:.4?}"))
}

fn energy_identity() -> Result<Verdict> {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let sites = rng.random_range(2..=6);
        let psi = StateVector::random(sites, &mut rng)?;
        let h = random_hamiltonian(sites, &mut rng);
        let basis = CandidateBasis::new(rng.random_range(0.0..PI), rng.random_range(0.0..TAU))?;
        let d = decompose(&psi, &basis)?;
        let direct = energy_before(&psi, &h)? - energy_after_ensemble(&d, &h)?;
        worst = worst.max((energy_delta(&d, &h)? - direct).abs());
    }
    verdict(worst < 1e-10, format!("max |cross terms − ΔE| {worst:.2e} over 1000 pairs"))
}

fn born_statistics() -> Result<Verdict> {
    // (|0⟩|0⟩ + |1⟩|1⟩)/√2 in the Z basis has weights ½, ½
    let h = ising(1, 1.0);
    let probe = EntanglementProbe::new(&h);
    let amp = C64::new(FRAC_1_SQRT_2, 0.0);
    let zero = C64::new(0.0, 0.0);
    let bell = StateVector::from_amplitudes(vec![amp, zero, zero, amp])?;
    let d = decompose(&bell, &CandidateBasis::computational())?;
    let mut rng = ChaCha20Rng::seed_from_u64(2024);
    let samples = 100_000;
    let (mut ones, mut worst) = (0usize, 0.0f64);
    for _ in 0..samples {
        let o = sample_outcome(&d, &mut rng);
        ones += o.index;
        worst = worst.max(probe.entropy(&o.state)?);
    }
    let freq = ones as f64 / samples as f64;
    verdict((freq - 0.5).abs() <= 0.01 && worst < 1e-9, format!("frequency {freq:.4}, max post-collapse entropy {worst:.1e}"))
}

fn completeness() -> Result<Verdict> {
    let ready = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
    let detector = derive_measurement_operators(&detector_unitary(C64::new(0.6, 0.4))?, &ready, &computational_basis(2))?;
    let mut worst = detector.completeness_residual();
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    for _ in 0..100 {
        let (d_s, d_a) = (rng.random_range(2..=4), rng.random_range(2..=4));
        let mut ready = vec![C64::new(0.0, 0.0); d_a];
        ready[0] = C64::new(1.0, 0.0);
        let ops = derive_measurement_operators(&random_unitary(d_s * d_a, &mut rng), &ready, &computational_basis(d_a))?;
        worst = worst.max(ops.completeness_residual());
    }
    let cnot = derive_measurement_operators(&cnot_system_control(), &ready, &computational_basis(2))?;
    let mut projector_err: f64 = 0.0;
    for (m, op) in cnot.operators().iter().enumerate() {
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == m && j == m { 1.0 } else { 0.0 };
                projector_err = projector_err.max((op[(i, j)] - C64::new(want, 0.0)).norm());
            }
        }
    }
    verdict(
        worst < 1e-9 && projector_err == 0.0,
        format!("max completeness residual {worst:.2e}, CNOT projector error {projector_err:.1e}"),
    )
}

fn within(value: f64, target: f64, rel: f64) -> bool {
    ((value - target) / target).abs() <= rel
}

fn bullet_numbers() -> Result<Verdict> {
    let start = Instant::now();
    let p = BulletParams::default();
    let r = bullet_report(&p)?;
    let elapsed = start.elapsed();
    let checks = [
        within(r.delta_x_formula, 1.9e-28, 0.05),
        within(r.delta_v_formula, 2.8e-5, 0.05),
        (0.5..=2.0).contains(&(r.delta_x_numeric / 1.9e-28)),
        (0.5..=2.0).contains(&(r.delta_v_numeric / 2.8e-5)),
        within(r.dominance_ratio, 3.9e4, 0.03),
        within(r.a, 0.0054, 0.01),
        (0.4..=0.6).contains(&r.product_over_hbar),
        elapsed < Duration::from_secs(1),
    ];
    verdict(
        checks.iter().all(|&c| c),
        format!(
            "Δx {:.3e} m (grid {:.3e}), Δv {:.3e} m/s (grid {:.3e}), ratio {:.4e}, a {:.5} m, mΔxΔv/ħ {:.4}, {elapsed:.2?}",
            r.delta_x_formula,
            r.delta_x_numeric,
            r.delta_v_formula,
            r.delta_v_numeric,
            r.dominance_ratio,
            r.a,
            r.product_over_hbar
        ),
    )
}

fn airy_constant() -> Result<Verdict> {
    let gs = ground_state(&BulletParams::default(), &GridSpec::default())?;
    let constant = packet_constant(gs.energy_numeric);
    let diff = (constant - 0.808614).abs();
    verdict(diff < 1e-5 && gs.l2_distance < 1e-4, format!("constant {constant:.7} (|Δ| {diff:.1e}), L² distance {:.1e}", gs.l2_distance))
}

/// Resolution of the refined scan: twice its stopping tolerance.
const SCAN_RESOLUTION: f64 = 2e-6;

fn basis_agreement() -> Result<Verdict> {
    let mut gaps = Vec::new();
    let mut degenerate = false;
    for n in [4, 6, 8] {
        let h = build_hamiltonian(&ModelSpec::TransverseCoupled { n })?;
        let initial = InitialState::PlusRandomEnv.prepare(n, 3)?;
        let scan = audit_at_first_peak(&h, &initial, &SweepConfig { method: BasisMethod::Scan, ..SweepConfig::default() })?;
        let op = audit_at_first_peak(&h, &initial, &SweepConfig { method: BasisMethod::CollapseOperator, ..SweepConfig::default() })?;
        degenerate |= op.fallback;
        let a = CandidateBasis::new(scan.theta, scan.phi)?;
        let b = CandidateBasis::new(op.theta, op.phi)?;
        gaps.push(a.angular_distance(&b));
    }
    let trend = gaps.windows(2).all(|w| w[1] <= w[0] + SCAN_RESOLUTION);
    let strict = gaps.windows(2).all(|w| w[1] <= w[0]);
    verdict(
        !degenerate && gaps[2] < 0.1 && trend,
        format!(
            "gap N=4,6,8 {gaps:.8?} rad; nonincreasing within scan resolution {SCAN_RESOLUTION:.0e}: {trend}, strictly: {strict}"
        ),
    )
}

fn run_cli(out: &Path, args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_collapse-lab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Result<Verdict> {
    let runs: [&[&str]; 5] = [
        &["trace", "--set", "n=[2,3]", "--set", "t_max=1"],
        &["energy-sweep", "--set", "n=[2,3]"],
        &["trajectory", "--set", "n=[3]", "--set", "threshold=0.5", "--set", "t_max=1", "--seed", "17"],
        &["bullet"],
        &["revival", "--set", "n=[2,3]", "--set", "revival_n=3", "--set", "trials=4", "--set", "threshold=2", "--set", "sample_clicks=true"],
    ];
    let tmp = tempfile::tempdir()?;
    let mut identical = 0;
    for (k, args) in runs.iter().enumerate() {
        let (a, b) = (tmp.path().join(format!("{k}a")), tmp.path().join(format!("{k}b")));
        let ok = run_cli(&a, args) && run_cli(&b, &[args, &["--jobs", "1"][..]].concat());
        if ok && snapshot(&a) == snapshot(&b) && !snapshot(&a).is_empty() {
            identical += 1;
        }
    }
    verdict(identical == runs.len(), format!("{identical}/{} commands byte-identical across reruns", runs.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Result<Verdict>); 11] = [
        ("analytic evolution", analytic_evolution),
        ("revival", revival),
        ("entangling-speed trend", speed_trend),
        ("energy-deviation trend", energy_trend),
        ("energy identity", energy_identity),
        ("Born statistics", born_statistics),
        ("measurement completeness", completeness),
        ("bullet numbers", bullet_numbers),
        ("Airy constant", airy_constant),
        ("basis-method agreement", basis_agreement),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = check().unwrap_or_else(|e| Verdict { pass: false, detail: format!("error: {e}") });
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {tag} {name}: {} [{:.2?}]", k + 1, v.detail, start.elapsed());
        failed += usize::from(!v.pass);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
