//! End-to-end acceptance gate: one test per criterion, each printing a
//! PASS/FAIL line (visible with `cargo test --test acceptance -- --nocapture`).

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bilevel_fbf::bifunctions::{
    operator_resolvent, prox_resolvent, resolvent_certificate, EquilibriumBifunction,
    PairedOperatorBifunction, ProxBifunction,
};
use bilevel_fbf::dynamics::{integrate, lipschitz_h_check, IntegrationMethod, ScheduleFn};
use bilevel_fbf::fbf::{fbf_step, run_fbf, BepInstance, StoppingRule};
use bilevel_fbf::geometry::{BoxSet, DenseMatrix, Point};
use bilevel_fbf::operators::{validation_region, MonotoneMap};
use bilevel_fbf::oracle::{solve_bep_grid, solve_ep_grid};
use bilevel_fbf::saddle::{example_conjugates, fitzpatrick_grid};
use bilevel_fbf::{SaddleProblem, Schedule};

fn report(criterion: &str, pass: bool, detail: String) {
    println!(
        "criterion {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn example_instance() -> BepInstance {
    let sp = SaddleProblem::example();
    let k = sp.feasible_set();
    let g = ProxBifunction::new(Point(vec![0.5, 0.5]), 1.0).unwrap();
    sp.build_bep(EquilibriumBifunction::prox(g, k)).unwrap()
}

fn selection_instance() -> BepInstance {
    let k = BoxSet::cube(0.0, 1.0, 2).unwrap();
    let g = ProxBifunction::new(Point(vec![0.3, 0.7]), 1.0).unwrap();
    BepInstance::new(
        MonotoneMap::zero(2),
        EquilibriumBifunction::prox(g, k.clone()),
        k,
    )
    .unwrap()
}

fn example_run() -> bilevel_fbf::IterationTrace {
    let inst = example_instance();
    let sched = Schedule::coupled_growth(0.9, inst.lipschitz(), 1.0, 0.5);
    run_fbf(
        &inst,
        &Point(vec![0.5, 0.5]),
        &sched,
        &StoppingRule {
            tol_fix: 1e-10,
            tol_gap: 1e-10,
            max_iter: 100_000,
        },
        Some(&Point(vec![0.0, 1.0])),
    )
    .unwrap()
}

fn selection_run() -> bilevel_fbf::IterationTrace {
    run_fbf(
        &selection_instance(),
        &Point(vec![1.0, 0.0]),
        &Schedule::constant(1.0, 1.0),
        &StoppingRule {
            tol_fix: 1e-10,
            tol_gap: 1e-10,
            max_iter: 10_000,
        },
        Some(&Point(vec![0.3, 0.7])),
    )
    .unwrap()
}

#[test]
fn criterion_1_worked_example_convergence() {
    let start = Instant::now();
    let trace = example_run();
    let elapsed = start.elapsed();
    let dist = trace.final_point.dist(&Point(vec![0.0, 1.0]));
    let pass = dist <= 1e-3 && trace.iterations() <= 100_000 && elapsed.as_secs_f64() < 5.0;
    report(
        "1 (worked-example convergence)",
        pass,
        format!(
            "dist {dist:.3e} after {} iters in {:.2}s",
            trace.iterations(),
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_2_upper_level_selection() {
    let trace = selection_run();
    let dist = trace.final_point.dist(&Point(vec![0.3, 0.7]));
    let pass = dist <= 1e-4 && trace.iterations() <= 10_000;
    report(
        "2 (upper-level selection)",
        pass,
        format!("dist {dist:.3e} after {} iters", trace.iterations()),
    );
}

#[test]
fn criterion_3_per_iteration_estimate() {
    let mut worst = f64::INFINITY;
    for trace in [example_run(), selection_run()] {
        for r in &trace.records {
            worst = worst.min(r.estimate_slack.expect("reference supplied"));
        }
    }
    report(
        "3 (per-iteration estimate slack)",
        worst >= -1e-8,
        format!("worst slack {worst:.3e}"),
    );
}

#[test]
fn criterion_4_sqrt6_lipschitz_bound() {
    let inst = example_instance();
    let region = validation_region(&inst.k);
    let bound = 6f64.sqrt();
    let mut worst = 0.0f64;
    for i in 1..=10 {
        // lambda * beta sweeps (0, 1/L) with beta fixed at 1.
        let product = 0.095 * i as f64;
        let ratio = lipschitz_h_check(&inst, product, 1.0, &region, 100_000, 42 + i).unwrap();
        worst = worst.max(ratio);
    }
    report(
        "4 (sqrt(6) Lipschitz bound)",
        worst <= bound + 1e-9,
        format!("max ratio {worst:.6} vs bound {bound:.6}"),
    );
}

#[test]
fn criterion_5_euler_step_one_identity() {
    let cases: Vec<(BepInstance, Schedule)> = vec![
        (
            example_instance(),
            Schedule::coupled_growth(0.9, 1.0, 1.0, 0.5),
        ),
        (selection_instance(), Schedule::constant(1.0, 1.0)),
    ];
    let mut worst = 0.0f64;
    for (inst, sched) in &cases {
        let traj = integrate(
            inst,
            &Point(vec![0.5, 0.5]),
            &ScheduleFn::from_discrete(sched),
            IntegrationMethod::Euler,
            1.0,
            100.0,
            None,
        )
        .unwrap();
        assert!(traj.completed);
        let mut x = Point(vec![0.5, 0.5]);
        for (n, record) in traj.records.iter().enumerate() {
            worst = worst.max(record.x.dist(&x));
            let (_, x_next) = fbf_step(inst, &x, sched.lambda(n + 1), sched.beta(n + 1)).unwrap();
            x = x_next;
        }
    }
    report(
        "5 (Euler step-1 identity)",
        worst <= 1e-12,
        format!("max deviation {worst:.3e} over 100 steps x 2 instances"),
    );
}

#[test]
fn criterion_6_random_instances_vs_grid_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let unit = BoxSet::cube(0.0, 1.0, 1).unwrap();
    let mut accepted = 0;
    let mut worst = 0.0f64;
    let mut draws = 0;
    while accepted < 10 {
        draws += 1;
        assert!(draws < 1_000, "instance generator exhausted");
        let sp = SaddleProblem::new(
            DenseMatrix::new(1, 1, vec![rng.gen_range(-2.0..2.0)]).unwrap(),
            Point(vec![rng.gen_range(-1.0..1.0)]),
            Point(vec![rng.gen_range(-1.0..1.0)]),
            unit.clone(),
            unit.clone(),
        )
        .unwrap();
        let k = sp.feasible_set();
        // Keep only instances whose lower-level grid solution set is a
        // singleton, so the comparison target is unambiguous.
        let lower_set = match solve_ep_grid(|x, y| sp.coupling(x, y), &k, 101, 1e-9) {
            Ok(s) => s,
            Err(_) => continue,
        };
        if lower_set.len() != 1 {
            continue;
        }
        let g = ProxBifunction::new(k.center(), 1.0).unwrap();
        let inst = sp
            .build_bep(EquilibriumBifunction::prox(g, k.clone()))
            .unwrap();
        let oracle = solve_bep_grid(&inst, 101, 1e-9).unwrap();
        assert_eq!(oracle.len(), 1);
        let sched = Schedule::coupled_growth(0.9, inst.lipschitz(), 1.0, 0.5);
        let trace = run_fbf(
            &inst,
            &k.center(),
            &sched,
            &StoppingRule {
                tol_fix: 1e-9,
                tol_gap: 1e-9,
                max_iter: 100_000,
            },
            None,
        )
        .unwrap();
        worst = worst.max(trace.final_point.dist(&oracle[0]));
        accepted += 1;
    }
    let tol = 0.01 + 1e-3;
    report(
        "6 (random instances vs grid oracle)",
        worst <= tol,
        format!("worst distance {worst:.3e} over 10 instances, tol {tol:.3e}"),
    );
}

#[test]
fn criterion_7_conjugate_closed_forms() {
    let sp = SaddleProblem::example();
    let u = Point(vec![0.0, 1.0]);
    let mut worst = 0.0f64;
    for &beta in &[0.5, 1.0, 10.0] {
        for i in 0..20 {
            for j in 0..20 {
                let p = -5.0 + 10.0 * i as f64 / 19.0;
                let q = -5.0 + 10.0 * j as f64 / 19.0;
                let (c1, c2, _) = example_conjugates(p, q, beta);
                let w = Point(vec![2.0 * p / beta, 2.0 * q / beta]);
                let fitz = fitzpatrick_grid(&sp, &u, &w, 21);
                worst = worst.max((fitz - (c1 + c2)).abs());
            }
        }
    }
    // Case II vanishes exactly and the case-I term has its closed form.
    let (c1, c2, sigma) = example_conjugates(0.0, 0.0, 1.0);
    let case_two_exact = c1 + c2 - sigma == 0.0;
    let beta = 10.0;
    let p = 2.0 * beta;
    let (c1, c2, sigma) = example_conjugates(p, 0.0, beta);
    let case_one_exact = c1 + c2 - sigma == 2.0 * p / beta - 2.0;
    report(
        "7 (conjugate closed forms)",
        worst <= 1e-9 && case_two_exact && case_one_exact,
        format!("worst gap {worst:.3e}, case II exact {case_two_exact}, case I exact {case_one_exact}"),
    );
}

#[test]
fn criterion_8_resolvent_suites() {
    let k = BoxSet::cube(0.0, 1.0, 2).unwrap();
    let region = validation_region(&k);
    let g = ProxBifunction::new(Point(vec![0.5, 0.5]), 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    // Firm nonexpansiveness over sampled pairs.
    let mut worst_firm = f64::INFINITY;
    for _ in 0..10_000 {
        let (x, y) = (region.sample(&mut rng), region.sample(&mut rng));
        let (jx, jy) = (
            prox_resolvent(&g, &k, 1.0, &x),
            prox_resolvent(&g, &k, 1.0, &y),
        );
        let d = jx.sub(&jy);
        worst_firm = worst_firm.min(x.sub(&y).dot(&d) - d.norm_sq());
    }

    // Iterative operator resolvent agrees with the closed form.
    let paired = PairedOperatorBifunction {
        a1: MonotoneMap::quadratic_gradient(Point(vec![0.5]), 1.0),
        a2: MonotoneMap::quadratic_gradient(Point(vec![0.5]), 1.0),
    };
    let mut worst_agree = 0.0f64;
    for _ in 0..100 {
        let x = region.sample(&mut rng);
        let zp = prox_resolvent(&g, &k, 0.7, &x);
        let zo = operator_resolvent(&paired, &k, 0.7, &x, 1e-12, 1_000_000).unwrap();
        worst_agree = worst_agree.max(zp.dist(&zo));
    }

    // Defining-inequality certificates for resolvent outputs.
    let mut worst_cert = f64::INFINITY;
    for _ in 0..100 {
        let x = region.sample(&mut rng);
        let z = prox_resolvent(&g, &k, 1.0, &x);
        let cert = resolvent_certificate(|a, b| g.eval(a, b), &k, 1.0, &x, &z, 21);
        worst_cert = worst_cert.min(cert);
    }

    let pass = worst_firm >= -1e-10 && worst_agree <= 1e-8 && worst_cert >= -1e-9;
    report(
        "8 (resolvent suites)",
        pass,
        format!(
            "firm margin {worst_firm:.3e}, agreement {worst_agree:.3e}, certificate {worst_cert:.3e}"
        ),
    );
}

#[test]
fn criterion_9_deterministic_outputs() {
    let bin = env!("CARGO_BIN_EXE_bep");
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/saddle_example.json");
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let status = std::process::Command::new(bin)
            .args(["solve", "--config", config, "--seed", "17"])
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let same_trace =
        std::fs::read(a.join("trace.csv")).unwrap() == std::fs::read(b.join("trace.csv")).unwrap();
    let same_summary = std::fs::read(a.join("summary.json")).unwrap()
        == std::fs::read(b.join("summary.json")).unwrap();
    report(
        "9 (deterministic outputs)",
        same_trace && same_summary,
        format!("trace identical {same_trace}, summary identical {same_summary}"),
    );
}

// Negative control: an operator whose declared Lipschitz constant understates
// the truth must be caught, not silently accepted.
#[test]
fn negative_control_corrupted_lipschitz() {
    let sp = SaddleProblem::example();
    let k = sp.feasible_set();
    let mut op = sp.operator().unwrap();
    op.lipschitz = 0.1; // corrupted: true constant is 1
    let inst = BepInstance::new(op, EquilibriumBifunction::zero(k.clone()), k).unwrap();
    let region = validation_region(&inst.k);
    // lambda * beta = 0.95 / 0.1 claims to satisfy the step bound but does
    // not; the sampled ratio must blow past sqrt(6).
    let ratio = lipschitz_h_check(&inst, 9.5, 1.0, &region, 10_000, 3).unwrap();
    assert!(
        ratio > 6f64.sqrt(),
        "corrupted constant went undetected: ratio {ratio}"
    );
}
