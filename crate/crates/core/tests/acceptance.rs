//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ionjc::chain::{equilibrium_positions, normal_modes, ChainModel, LaserDrive};
use ionjc::experiments::{sweep_rabi, ExperimentConfig};
use ionjc::fock::{guarded_distance, ladder, spectral_norm, spin_op, BasisState, Ladder, Spin, SpinOp};
use ionjc::hamiltonians::{breve_frame, breve_h, diagonal_energies, intermediate, jc_interaction, ModelSpec};
use ionjc::propagators::{
    balanced_coupling, exact_propagator, jc_closed_form, jc_generator, pipeline_propagator, propagator_infidelity,
    rwa_jc_propagator, PipelineMode,
};
use ionjc::transforms::{build_t1, build_t2, build_t3, build_t_delta, build_t_delta_closed, BalancedParams};
use ionjc::{CMatrix, HilbertConfig, OperatorMatrix, C64};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn conj(u: &OperatorMatrix, h: &OperatorMatrix) -> OperatorMatrix {
    &(u * h) * &u.dagger()
}

fn shifted(h: &OperatorMatrix, x: f64) -> OperatorMatrix {
    h + &OperatorMatrix::identity(*h.config()).scale(C64::from(x))
}

fn diagonal(config: &HilbertConfig, e: &DVector<f64>) -> OperatorMatrix {
    let m = CMatrix::from_diagonal(&e.map(C64::from));
    OperatorMatrix::new(*config, m).unwrap()
}

// Scaling-and-squaring Taylor series, independent of the library exponential.
fn expm_taylor(a: &CMatrix) -> CMatrix {
    let norm = a.norm();
    let squarings = if norm > 0.25 { (norm / 0.25).log2().ceil() as u32 } else { 0 };
    let scaled = a / C64::from(2f64.powi(squarings as i32));
    let n = a.nrows();
    let mut sum = CMatrix::identity(n, n);
    let mut term = CMatrix::identity(n, n);
    for k in 1..30 {
        term = &term * &scaled / C64::from(k as f64);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

fn within(elapsed: Duration, budget_secs: u64) -> bool {
    elapsed <= Duration::from_secs(budget_secs)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let rabi = 10f64.powf(rng.gen_range(-2.0..1.0));
        let detuning = rng.gen_range(-3.0..3.0);
        let t = rng.gen_range(0.0..20.0);
        let model = ModelSpec::single_ion(0.1, rabi, detuning, 40, 10).unwrap();
        let u = exact_propagator(&model, t, 0.0).unwrap();
        let v = pipeline_propagator(&model, t, 0.0, &PipelineMode::Exact).unwrap();
        worst = worst.max(propagator_infidelity(&u, &v).unwrap());
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-8 && within(elapsed, 120),
        format!("max guarded infidelity {worst:.2e} over 50 draws, {:.1}s", elapsed.as_secs_f64()),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let rabi = 10f64.powf(rng.gen_range(-3.0..2.0));
        let detuning = rng.gen_range(-5.0..5.0);
        let eta = rng.gen_range(0.0..0.3);
        let model = ModelSpec::single_ion(eta, rabi, detuning, 16, 0).unwrap();
        let cfg = model.config;
        let z = spin_op(&cfg, 0, SpinOp::Z).unwrap();
        let x = spin_op(&cfg, 0, SpinOp::X).unwrap();

        let t1 = build_t1(&cfg, 0, &[eta]).unwrap();
        worst = worst.max(conj(&t1, &z).max_abs_diff(&-&x));

        let p = model.balanced().unwrap().remove(0);
        let t2 = build_t2(&cfg, 0, p.theta).unwrap();
        let rotated = conj(&t2, &intermediate::frak_h0(&model, 0).unwrap());
        let target = diagonal(&cfg, &diagonal_energies(&cfg, &[1.0], &[p.delta_breve]));
        worst = worst.max(rotated.max_abs_diff(&target));

        worst = worst.max((p.kappa_plus.powi(2) + p.kappa_minus.powi(2) - 1.0).abs());
        worst = worst.max((p.eps_plus - p.eps_minus - 1.0).abs());
        let floor = (2.0 * rabi).max(detuning.abs());
        if p.delta_breve < floor * (1.0 - 1e-15) {
            worst = f64::INFINITY;
        }
    }
    outcome(worst <= 1e-12, format!("max deviation {worst:.2e} over 20 parameter sets"))
}

fn criterion_3() -> Outcome {
    let mut worst = 0.0f64;
    for (rabi, detuning) in [(0.37, 0.81), (0.2, -0.9), (1.3, 0.4), (0.05, 2.0)] {
        let model = ModelSpec::single_ion(0.1, rabi, detuning, 40, 10).unwrap();
        let cfg = model.config;
        let p = model.balanced().unwrap().remove(0);

        let t1 = build_t1(&cfg, 0, &model.eta_row(0)).unwrap();
        let z = spin_op(&cfg, 0, SpinOp::Z).unwrap();
        let flipped = conj(&t1, &intermediate::recoil_flip(&model, 0).unwrap());
        worst = worst.max(guarded_distance(&flipped, &z).unwrap());

        let t3 = build_t3(&cfg, 0, &p.alpha).unwrap();
        let lhs = conj(&t3, &intermediate::hat_h0(&model, 0).unwrap());
        let e = diagonal_energies(&cfg, &[1.0], &[p.delta_breve]);
        let rhs = shifted(&diagonal(&cfg, &e), intermediate::t3_constant(&model, 0).unwrap());
        worst = worst.max(guarded_distance(&lhs, &rhs).unwrap());

        let prod = build_t_delta(&cfg, std::slice::from_ref(&p)).unwrap();
        let closed = build_t_delta_closed(&cfg, std::slice::from_ref(&p)).unwrap();
        worst = worst.max(guarded_distance(&prod, &closed).unwrap());

        let b = breve_h(&model).unwrap();
        for t in [0.0, 0.9, 6.3, 17.5] {
            let v = breve_frame(&model, &b.params, t);
            let jc = jc_interaction(&model, t).unwrap();
            worst = worst.max(guarded_distance(&conj(&v, &b.flip), &jc).unwrap());
        }
    }
    outcome(worst <= 1e-8, format!("max guarded distance {worst:.2e}"))
}

fn criterion_4() -> Outcome {
    let cfg = HilbertConfig::new(1, 20, 1, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let g = rng.gen_range(-1.0..1.0);
        let tau = rng.gen_range(0.0..10.0);
        let closed = jc_closed_form(&cfg, 0, 0, g, tau).unwrap();
        let h = jc_generator(&cfg, 0, 0, g).unwrap();
        let oracle = expm_taylor(&(h.matrix() * C64::new(0.0, -tau)));
        worst = worst.max(ionjc::fock::max_abs(&(closed.matrix() - oracle)));
    }

    let mut pop_err = 0.0f64;
    let g1 = cfg.index_of(&BasisState { occupations: vec![1], spins: vec![Spin::Ground] });
    for _ in 0..20 {
        let g = rng.gen_range(-1.0..1.0);
        let t = rng.gen_range(0.0..30.0);
        let u = jc_closed_form(&cfg, 0, 0, g, t).unwrap();
        let excited: f64 = (0..cfg.dim())
            .filter(|&i| cfg.state_at(i).spins[0] == Spin::Excited)
            .map(|i| u.matrix()[(i, g1)].norm_sqr())
            .sum();
        pop_err = pop_err.max((excited - (g * t).sin().powi(2)).abs());
    }
    outcome(
        worst <= 1e-10 && pop_err <= 1e-10,
        format!("closed form vs series {worst:.2e}, |g,1> population error {pop_err:.2e}"),
    )
}

fn criterion_5() -> Outcome {
    let eta = 0.1;
    let norms: Vec<f64> = (3..=6)
        .map(|m| {
            let model = ModelSpec::single_ion(eta, 10f64.powi(-m), 1.0, 40, 10).unwrap();
            spectral_norm(breve_h(&model).unwrap().flip.matrix())
        })
        .collect();
    // least-squares slope of log10 norm against -m
    let xs: Vec<f64> = (3..=6).map(|m| -(m as f64)).collect();
    let ys: Vec<f64> = norms.iter().map(|n| n.log10()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 4.0, ys.iter().sum::<f64>() / 4.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let slope_ok = (slope - 1.0).abs() <= 0.02;

    let strong = ModelSpec::single_ion(eta, 1e6, 1.0, 40, 10).unwrap();
    let cfg = strong.config;
    let a = ladder(&cfg, 0, Ladder::Annihilate).unwrap();
    let x = spin_op(&cfg, 0, SpinOp::X).unwrap();
    let limit = (&(&a - &a.dagger()) * &x).scale(C64::new(0.0, 0.5 * eta));
    let flip = breve_h(&strong).unwrap().flip;
    let rel = spectral_norm(&(flip.matrix() - limit.matrix())) / spectral_norm(limit.matrix());

    let weak = BalancedParams::new(1e-4, 1.0, &[eta]).unwrap();
    let weak_err = (weak.eta_breve[0] - eta).abs();
    let big = BalancedParams::new(1e6, 1.0, &[eta]).unwrap();
    let strong_err = big.eta_breve[0].abs().max((big.eta_breve[0] / big.delta_ratio - eta / 2.0).abs());

    outcome(
        slope_ok && rel <= 1e-5 && weak_err <= 1e-6 && strong_err <= 1e-6,
        format!(
            "norm decay per decade {slope:.5}, strong-field relative error {rel:.2e}, eta limits {weak_err:.2e}/{strong_err:.2e}"
        ),
    )
}

fn hessian_oracle(u: &[f64]) -> DMatrix<f64> {
    let n = u.len();
    DMatrix::from_fn(n, n, |i, k| {
        if i == k {
            1.0 + (0..n).filter(|&l| l != i).map(|l| 2.0 / (u[i] - u[l]).abs().powi(3)).sum::<f64>()
        } else {
            -2.0 / (u[i] - u[k]).abs().powi(3)
        }
    })
}

fn criterion_6() -> Outcome {
    let analytic_positions = [vec![-0.25f64.cbrt(), 0.25f64.cbrt()], vec![-1.25f64.cbrt(), 0.0, 1.25f64.cbrt()]];
    let analytic_freqs = [vec![1.0, 3f64.sqrt()], vec![1.0, 3f64.sqrt(), (29.0f64 / 5.0).sqrt()]];
    let mut worst = 0.0f64;
    for (u, f) in analytic_positions.iter().zip(&analytic_freqs) {
        let pos = equilibrium_positions(u.len()).unwrap();
        for (a, b) in pos.iter().zip(u) {
            worst = worst.max((a - b).abs());
        }
        let (_, freqs) = normal_modes(&pos);
        let mut oracle: Vec<f64> = hessian_oracle(u).symmetric_eigen().eigenvalues.iter().map(|l| l.sqrt()).collect();
        oracle.sort_by(f64::total_cmp);
        let chain = ChainModel::dimensionless(u.len()).unwrap();
        for k in 0..u.len() {
            worst = worst.max((freqs[k] - f[k]).abs());
            worst = worst.max((oracle[k] - f[k]).abs());
            worst = worst.max((chain.frequencies[k] - f[k]).abs());
        }
    }
    outcome(worst <= 1e-10, format!("max deviation {worst:.2e}"))
}

fn default_sweep_config() -> ExperimentConfig {
    ExperimentConfig::parse(
        r#"{
          "experiment": "sweep-rabi",
          "chain": { "ions": 1 },
          "drives": [ { "ion": 1, "rabi": 0.1, "detuning": 1.0, "wavevector": 0.05 } ]
        }"#,
    )
    .unwrap()
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let points = sweep_rabi(&default_sweep_config()).unwrap();
    let elapsed = start.elapsed();
    let ordering = points
        .iter()
        .filter(|p| p.rabi >= 1.0)
        .all(|p| p.infidelity_pipeline <= p.infidelity_standard);
    let low = points.iter().find(|p| (p.rabi - 0.01).abs() < 1e-12).unwrap();
    let high = points.iter().find(|p| (p.rabi - 10.0).abs() < 1e-9).unwrap();
    let ratio = high.infidelity_standard / low.infidelity_standard;
    outcome(
        points.len() == 25 && ordering && ratio >= 10.0 && within(elapsed, 600),
        format!(
            "{} points, ordering at Omega >= 1 {}, standard infidelity ratio {ratio:.1}, {:.1}s",
            points.len(),
            if ordering { "holds" } else { "violated" },
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let chain = ChainModel::dimensionless(2).unwrap();
    let drives = vec![
        LaserDrive::with_detuning(0, 0.3, 0.8, 0.0, 0.1),
        LaserDrive::with_detuning(1, 0.2, 1.5, 0.0, 0.1),
    ];
    let cfg = HilbertConfig::new(2, 12, 2, 4).unwrap();
    let model = ModelSpec::new(&chain, drives, cfg, 0.0).unwrap();
    let mut closure = 0.0f64;
    for t in [0.7, 3.1, 8.0] {
        let u = exact_propagator(&model, t, 0.0).unwrap();
        let v = pipeline_propagator(&model, t, 0.0, &PipelineMode::Exact).unwrap();
        closure = closure.max(propagator_infidelity(&u, &v).unwrap());
    }

    let pairs = [(0, 0), (1, 1)];
    let tau = 5.3;
    let g0 = balanced_coupling(&model, 0, 0).unwrap();
    let g1 = balanced_coupling(&model, 1, 1).unwrap();
    let a = jc_closed_form(&cfg, 0, 0, g0, tau).unwrap();
    let b = jc_closed_form(&cfg, 1, 1, g1, tau).unwrap();
    let commute = (&a * &b).max_abs_diff(&(&b * &a));
    let joint = rwa_jc_propagator(&model, &pairs, tau, 0.0).unwrap();
    let product = joint.max_abs_diff(&(&a * &b));
    let elapsed = start.elapsed();
    outcome(
        closure <= 1e-6 && commute <= 1e-12 && product <= 1e-12 && within(elapsed, 600),
        format!(
            "closure {closure:.2e}, factor commutator {commute:.2e}, product mismatch {product:.2e}, {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn run_cli(command: &str, config: &Path, out: &Path) -> bool {
    Command::new(env!("CARGO_BIN_EXE_ionjc"))
        .args([command, "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .status()
        .map(|s| s.success())
        .unwrap_or(false)
}

fn without_comments(path: &Path) -> Vec<u8> {
    let text = std::fs::read(path).unwrap();
    text.split_inclusive(|&b| b == b'\n').filter(|line| !line.starts_with(b"#")).flatten().copied().collect()
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let configs = [
        ("sweep-rabi", default_sweep_config().to_json().unwrap()),
        (
            "evolve",
            r#"{
              "experiment": "evolve",
              "chain": { "ions": 1 },
              "drives": [ { "ion": 1, "rabi": 0.25, "detuning": 0.8660254037844386, "wavevector": 0.1 } ],
              "hilbert": { "n_max": 30, "guard": 8 },
              "evolution": { "times": { "start": 0.0, "stop": 50.0, "steps": 20 }, "method": "pipeline_exact" },
              "initial_state": { "modes": [ { "coherent": [1.0, 0.5] } ], "spins": ["g"] }
            }"#
            .to_string(),
        ),
    ];
    let mut identical = true;
    let mut rows = 0;
    for (command, json) in &configs {
        let cfg = dir.path().join(format!("{command}.json"));
        std::fs::write(&cfg, json).unwrap();
        let first = dir.path().join(format!("{command}-1.csv"));
        let second = dir.path().join(format!("{command}-2.csv"));
        if !(run_cli(command, &cfg, &first) && run_cli(command, &cfg, &second)) {
            return outcome(false, format!("{command} run failed"));
        }
        let (a, b) = (without_comments(&first), without_comments(&second));
        identical &= !a.is_empty() && a == b;
        rows += a.iter().filter(|&&c| c == b'\n').count();
    }
    outcome(identical, format!("two runs each of sweep-rabi and evolve, {rows} CSV lines compared"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("transformation cascade closure", criterion_1),
        ("identities, exact tier", criterion_2),
        ("identities, guarded tier", criterion_3),
        ("closed-form JC propagator", criterion_4),
        ("limit behaviour", criterion_5),
        ("normal modes and equilibrium", criterion_6),
        ("intensity-robustness ordering", criterion_7),
        ("multi-drive smoke test", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = check();
        if !result.pass {
            failures += 1;
        }
        println!("{} {}. {name}: {}", if result.pass { "PASS" } else { "FAIL" }, i + 1, result.detail);
    }
    println!("{}/{} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
