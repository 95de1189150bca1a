//! Trace-level convergence diagnostics on the worked example.

use bilevel_fbf::bifunctions::{EquilibriumBifunction, ProxBifunction};
use bilevel_fbf::fbf::{run_fbf, StoppingRule};
use bilevel_fbf::geometry::Point;
use bilevel_fbf::{SaddleProblem, Schedule};

// The squared gap ||x_n - y_n||^2 is summable along the run: the last 10% of
// iterations contribute under 1% of the total.
#[test]
fn gap_square_sum_concentrates_early() {
    let sp = SaddleProblem::example();
    let k = sp.feasible_set();
    let g = ProxBifunction::new(Point(vec![0.5, 0.5]), 1.0).unwrap();
    let inst = sp.build_bep(EquilibriumBifunction::prox(g, k)).unwrap();
    let sched = Schedule::coupled_growth(0.9, inst.lipschitz(), 1.0, 0.5);
    let trace = run_fbf(
        &inst,
        &Point(vec![0.5, 0.5]),
        &sched,
        &StoppingRule {
            tol_fix: 0.0,
            tol_gap: 0.0,
            max_iter: 2_000,
        },
        Some(&Point(vec![0.0, 1.0])),
    )
    .unwrap();
    assert!(trace.gap_square_sum().is_finite());
    let tail = trace.gap_square_tail_fraction(0.1);
    assert!(tail <= 0.01, "tail fraction {tail}");
    // Distances to the solution are non-diverging along the same run.
    let first = trace.records.first().unwrap().dist_ref.unwrap();
    let last = trace.records.last().unwrap().dist_ref.unwrap();
    assert!(last <= first);
}
