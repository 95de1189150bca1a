use std::path::Path;

use bilevel_fbf::bifunctions::{prox_resolvent, EquilibriumBifunction, ProxBifunction};
use bilevel_fbf::dynamics::{integrate, lipschitz_h_check};
use bilevel_fbf::fbf::{run_fbf, StoppingRule};
use bilevel_fbf::geometry::Point;
use bilevel_fbf::operators::{monotonicity_deficit, validation_region};
use bilevel_fbf::oracle::{dual_ep_residual, ep_residual, solve_bep_grid};
use bilevel_fbf::saddle::{fitzpatrick_grid, selection_condition_partial_sum};
use bilevel_fbf::schedule::check_schedule;
use bilevel_fbf::SaddleProblem;

use crate::config::RunConfig;
use crate::output;

const EXIT_OK: u8 = 0;
const EXIT_CONFIG: u8 = 1;
const EXIT_NOT_CONVERGED: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

fn fail_config(msg: &str) -> u8 {
    eprintln!("config error: {msg}");
    EXIT_CONFIG
}

fn fail_numeric(msg: &str) -> u8 {
    eprintln!("numeric failure: {msg}");
    EXIT_NUMERIC
}

fn write_or_fail(path: &Path, contents: &str) -> Option<u8> {
    match output::write_atomic(path, contents) {
        Ok(()) => None,
        Err(e) => {
            eprintln!("cannot write {}: {e}", path.display());
            Some(EXIT_NUMERIC)
        }
    }
}

pub fn cmd_solve(config: &Path, out: &Path, seed: Option<u64>, format: &str) -> u8 {
    let mut cfg = match RunConfig::load(config) {
        Ok(c) => c,
        Err(e) => return fail_config(&e),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let inst = match cfg.build_instance() {
        Ok(i) => i,
        Err(e) => return fail_config(&e),
    };
    if let Err(e) = cfg.schedule.validate(inst.lipschitz(), 1000) {
        return fail_config(&e.to_string());
    }
    let reference = cfg.reference();
    let trace = match run_fbf(
        &inst,
        &cfg.x0(),
        &cfg.schedule,
        &cfg.stopping_rule(),
        reference.as_ref(),
    ) {
        Ok(t) => t,
        Err(e) => return fail_numeric(&e.to_string()),
    };
    let dim = inst.dim();
    let trace_path = out.join(if format == "json" {
        "trace.json"
    } else {
        "trace.csv"
    });
    let trace_text = if format == "json" {
        output::to_pretty(&output::solve_trace_json(&trace))
    } else {
        output::solve_trace_csv(&trace, dim)
    };
    if let Some(code) = write_or_fail(&trace_path, &trace_text) {
        return code;
    }
    let last = trace.records.last();
    let summary = serde_json::json!({
        "converged": trace.converged,
        "iterations": trace.iterations(),
        "final_point": trace.final_point.as_slice(),
        "final_res_fix": last.map(|r| r.res_fix),
        "final_res_gap": last.map(|r| r.res_gap),
        "final_dist_ref": last.and_then(|r| r.dist_ref),
        "x0_in_k": trace.x0_in_k,
        "seed": cfg.seed,
    });
    if let Some(code) = write_or_fail(&out.join("summary.json"), &output::to_pretty(&summary)) {
        return code;
    }
    if trace.converged {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    }
}

pub fn cmd_dynamics(config: &Path, out: &Path, seed: Option<u64>, format: &str) -> u8 {
    let mut cfg = match RunConfig::load(config) {
        Ok(c) => c,
        Err(e) => return fail_config(&e),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if cfg.solver.step <= 0.0 || cfg.solver.t_end <= 0.0 {
        return fail_config("dynamics needs step > 0 and t_end > 0");
    }
    let inst = match cfg.build_instance() {
        Ok(i) => i,
        Err(e) => return fail_config(&e),
    };
    let reference = cfg.reference();
    let traj = match integrate(
        &inst,
        &cfg.x0(),
        &cfg.time_schedule(),
        cfg.solver.method,
        cfg.solver.step,
        cfg.solver.t_end,
        reference.as_ref(),
    ) {
        Ok(t) => t,
        Err(e) => return fail_numeric(&e.to_string()),
    };
    let dim = inst.dim();
    let trace_path = out.join(if format == "json" {
        "trajectory.json"
    } else {
        "trajectory.csv"
    });
    let trace_text = if format == "json" {
        output::to_pretty(&output::dynamics_trace_json(&traj))
    } else {
        output::dynamics_trace_csv(&traj, dim)
    };
    if let Some(code) = write_or_fail(&trace_path, &trace_text) {
        return code;
    }
    let summary = serde_json::json!({
        "completed": traj.completed,
        "samples": traj.records.len(),
        "final_point": traj.final_point.as_slice(),
        "final_norm_h": traj.records.last().map(|r| r.norm_h),
        "final_dist_ref": traj.records.last().and_then(|r| r.dist_ref),
        "seed": cfg.seed,
    });
    if let Some(code) = write_or_fail(&out.join("summary.json"), &output::to_pretty(&summary)) {
        return code;
    }
    if traj.completed {
        EXIT_OK
    } else {
        EXIT_NUMERIC
    }
}

pub fn cmd_check(config: &Path, out: &Path) -> u8 {
    let cfg = match RunConfig::load(config) {
        Ok(c) => c,
        Err(e) => return fail_config(&e),
    };
    let inst = match cfg.build_instance() {
        Ok(i) => i,
        Err(e) => return fail_config(&e),
    };
    let report = check_schedule(&cfg.schedule, inst.lipschitz(), cfg.horizon);
    let (p, q) = cfg.condition_pq.unwrap_or((0.0, 0.0));
    // Closed-form condition terms are only available for the worked saddle
    // instance; otherwise fall back to the grid Fitzpatrick value at p = 0.
    let condition = cfg.saddle_problem().map(|sp| {
        let cond = selection_condition_partial_sum(&cfg.schedule, p, q, cfg.horizon.min(1_000_000));
        let fitz_p0 = cfg
            .reference()
            .map(|u| fitzpatrick_grid(&sp, &u, &Point::zeros(sp.dim()), 21));
        serde_json::json!({
            "p": p,
            "q": q,
            "partial_sum": cond.partial_sum,
            "half_sum": cond.half_sum,
            "diverging": cond.diverging,
            "fitzpatrick_p0_at_reference": fitz_p0,
        })
    });
    let doc = serde_json::json!({
        "lipschitz": inst.lipschitz(),
        "schedule": report,
        "selection_condition": condition,
    });
    match write_or_fail(&out.join("check.json"), &output::to_pretty(&doc)) {
        Some(code) => code,
        None => EXIT_OK,
    }
}

pub fn cmd_oracle(config: &Path, out: &Path) -> u8 {
    let cfg = match RunConfig::load(config) {
        Ok(c) => c,
        Err(e) => return fail_config(&e),
    };
    let inst = match cfg.build_instance() {
        Ok(i) => i,
        Err(e) => return fail_config(&e),
    };
    let grid = 101;
    let tol = 1e-9;
    let sols = match solve_bep_grid(&inst, grid, tol) {
        Ok(s) => s,
        Err(e) => return fail_numeric(&e.to_string()),
    };
    let residuals: Vec<serde_json::Value> = sols
        .iter()
        .map(|x| {
            serde_json::json!({
                "point": x.as_slice(),
                "ep_residual": ep_residual(|a, b| inst.f(a, b), x, &inst.k, grid),
                "dual_ep_residual": dual_ep_residual(|a, b| inst.f(a, b), x, &inst.k, grid),
            })
        })
        .collect();
    let doc = serde_json::json!({
        "grid": grid,
        "tol": tol,
        "solutions": residuals,
    });
    match write_or_fail(&out.join("oracle.json"), &output::to_pretty(&doc)) {
        Some(code) => code,
        None => EXIT_OK,
    }
}

/// Run the sampled invariant suites; each reports its worst witness.
pub fn cmd_properties(seed: u64, samples: usize, out: &Path) -> u8 {
    if samples == 0 {
        return fail_config("samples must be at least 1");
    }
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);

    let sp = SaddleProblem::example();
    let k = sp.feasible_set();
    let inst = match sp.build_bep(EquilibriumBifunction::zero(k.clone())) {
        Ok(i) => i,
        Err(e) => return fail_numeric(&e.to_string()),
    };
    let region = validation_region(&k);
    let mut suites = Vec::new();

    // Firm nonexpansiveness of the prox resolvent.
    {
        let g = ProxBifunction::new(Point(vec![0.5, 0.5]), 1.0).unwrap();
        let mut worst = f64::INFINITY;
        for _ in 0..samples.min(10_000) {
            let x = region.sample(&mut rng);
            let y = region.sample(&mut rng);
            let jx = prox_resolvent(&g, &k, 1.0, &x);
            let jy = prox_resolvent(&g, &k, 1.0, &y);
            let margin = x.sub(&y).dot(&jx.sub(&jy)) - jx.sub(&jy).norm_sq();
            worst = worst.min(margin);
        }
        suites.push(("firm_nonexpansiveness", worst >= -1e-10, worst));
    }

    // sqrt(6) Lipschitz bound on h across a grid of step products.
    {
        let mut worst = 0.0_f64;
        for i in 1..=10 {
            let product = 0.095 * i as f64; // lambda * beta in (0, 1/L)
            match lipschitz_h_check(&inst, product, 1.0, &region, samples / 10 + 1, seed + i) {
                Ok(r) => worst = worst.max(r),
                Err(e) => return fail_numeric(&e.to_string()),
            }
        }
        suites.push(("sqrt6_lipschitz", worst <= 6f64.sqrt() + 1e-9, worst));
    }

    // Skew-affine monotonicity deficit.
    {
        let b = match sp.operator() {
            Ok(b) => b,
            Err(e) => return fail_numeric(&e.to_string()),
        };
        let deficit = monotonicity_deficit(&b, &region, samples, seed);
        suites.push(("skew_monotonicity", deficit >= -1e-10, deficit));
    }

    // Bifunction identity f(x, y) = <Bx, y - x>.
    {
        let mut worst = 0.0_f64;
        for _ in 0..samples {
            let x = k.sample(&mut rng);
            let y = k.sample(&mut rng);
            let diff = (sp.coupling(&x, &y) - inst.f(&x, &y)).abs();
            worst = worst.max(diff);
        }
        suites.push(("bifunction_identity", worst <= 1e-12, worst));
    }

    // Per-iteration estimate slack with p = 0 along the worked-example run.
    {
        let g = ProxBifunction::new(Point(vec![0.5, 0.5]), 1.0).unwrap();
        let inst_g = match sp.build_bep(EquilibriumBifunction::prox(g, k.clone())) {
            Ok(i) => i,
            Err(e) => return fail_numeric(&e.to_string()),
        };
        let sched = bilevel_fbf::Schedule::coupled_growth(0.9, inst_g.lipschitz(), 1.0, 0.5);
        let x0 = Point(vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)]);
        let trace = match run_fbf(
            &inst_g,
            &x0,
            &sched,
            &StoppingRule::default(),
            Some(&Point(vec![0.0, 1.0])),
        ) {
            Ok(t) => t,
            Err(e) => return fail_numeric(&e.to_string()),
        };
        let worst = trace
            .records
            .iter()
            .filter_map(|r| r.estimate_slack)
            .fold(f64::INFINITY, f64::min);
        suites.push(("estimate_slack", worst >= -1e-8, worst));
    }

    let all_pass = suites.iter().all(|(_, pass, _)| *pass);
    let doc = serde_json::json!({
        "seed": seed,
        "samples": samples,
        "all_pass": all_pass,
        "suites": suites
            .iter()
            .map(|(name, pass, worst)| serde_json::json!({
                "suite": name,
                "pass": pass,
                "worst_witness": worst,
            }))
            .collect::<Vec<_>>(),
    });
    if let Some(code) = write_or_fail(&out.join("properties.json"), &output::to_pretty(&doc)) {
        return code;
    }
    if all_pass {
        EXIT_OK
    } else {
        EXIT_NUMERIC
    }
}
