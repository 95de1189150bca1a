//! The continuous-time forward-backward-forward system.
//!
//! The trajectory solves `dx/dt = h(lambda(t), beta(t), x(t))` where
//!
//! ```text
//! h(lambda, beta, x) = y - x + lambda beta (Bx - By),
//! y = J_lambda^g (x - lambda beta Bx)
//! ```
//!
//! so the explicit Euler step of size 1 is algebraically the discrete
//! iteration. `h` is globally sqrt(6)-Lipschitz in `x` whenever
//! `lambda beta < 1/L`, which keeps fixed-step explicit integration stable
//! at desk scale.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SolverError};
use crate::fbf::BepInstance;
use crate::geometry::{BoxSet, Point};
use crate::schedule::{LambdaRule, PowerSeq, Schedule};

pub const DEFAULT_STEP: f64 = 0.1;

/// A time-dependent parameter with a closed-form derivative.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeCurve {
    Constant { value: f64 },
    /// `offset + coeff * (1 + t)^exponent`; at `t = n - 1` this equals the
    /// discrete power sequence at index `n`.
    Power {
        offset: f64,
        coeff: f64,
        exponent: f64,
    },
    /// `floor + coeff * exp(-t)`
    ExpDecay { floor: f64, coeff: f64 },
}

impl TimeCurve {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            TimeCurve::Constant { value } => value,
            TimeCurve::Power {
                offset,
                coeff,
                exponent,
            } => offset + coeff * (1.0 + t).powf(exponent),
            TimeCurve::ExpDecay { floor, coeff } => floor + coeff * (-t).exp(),
        }
    }

    pub fn deriv(&self, t: f64) -> f64 {
        match *self {
            TimeCurve::Constant { .. } => 0.0,
            TimeCurve::Power {
                coeff, exponent, ..
            } => {
                if exponent == 0.0 {
                    0.0
                } else {
                    coeff * exponent * (1.0 + t).powf(exponent - 1.0)
                }
            }
            TimeCurve::ExpDecay { coeff, .. } => -coeff * (-t).exp(),
        }
    }
}

/// How `lambda(t)` is derived.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaCurve {
    Explicit(TimeCurve),
    /// `lambda(t) = product / beta(t)`
    CoupledProduct { product: f64 },
}

/// The pair `(lambda(t), beta(t))` with derivative oracles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleFn {
    pub beta: TimeCurve,
    pub lambda: LambdaCurve,
}

impl ScheduleFn {
    pub fn constant(lambda: f64, beta: f64) -> Self {
        ScheduleFn {
            beta: TimeCurve::Constant { value: beta },
            lambda: LambdaCurve::Explicit(TimeCurve::Constant { value: lambda }),
        }
    }

    /// Continuous counterpart of a discrete schedule; sampling at
    /// `t = n - 1` reproduces the discrete terms exactly.
    pub fn from_discrete(sched: &Schedule) -> Self {
        fn curve(seq: PowerSeq) -> TimeCurve {
            TimeCurve::Power {
                offset: seq.offset,
                coeff: seq.coeff,
                exponent: seq.exponent,
            }
        }
        ScheduleFn {
            beta: curve(sched.beta),
            lambda: match sched.lambda {
                LambdaRule::Explicit(seq) => LambdaCurve::Explicit(curve(seq)),
                LambdaRule::CoupledProduct { product } => LambdaCurve::CoupledProduct { product },
            },
        }
    }

    pub fn beta(&self, t: f64) -> f64 {
        self.beta.value(t)
    }

    pub fn beta_dot(&self, t: f64) -> f64 {
        self.beta.deriv(t)
    }

    pub fn lambda(&self, t: f64) -> f64 {
        match self.lambda {
            LambdaCurve::Explicit(c) => c.value(t),
            LambdaCurve::CoupledProduct { product } => product / self.beta(t),
        }
    }

    pub fn lambda_dot(&self, t: f64) -> f64 {
        match self.lambda {
            LambdaCurve::Explicit(c) => c.deriv(t),
            LambdaCurve::CoupledProduct { product } => {
                let b = self.beta(t);
                -product * self.beta_dot(t) / (b * b)
            }
        }
    }
}

/// The dynamics vector field; identical to the displacement
/// `x_next - x` of one discrete step at the same parameters.
pub fn h_map(inst: &BepInstance, lambda: f64, beta: f64, x: &Point) -> Result<Point> {
    if lambda <= 0.0 || beta <= 0.0 {
        return Err(SolverError::InvalidParameter(
            "h_map needs lambda > 0 and beta > 0".into(),
        ));
    }
    let bx = inst.lower.eval(x);
    let y = inst
        .upper
        .resolvent(lambda, &x.add_scaled(-lambda * beta, &bx))?;
    let by = inst.lower.eval(&y);
    Ok(y.sub(x).add_scaled(lambda * beta, &bx.sub(&by)))
}

/// Max sampled ratio `||h(x) - h(x')|| / ||x - x'||` over `region`.
///
/// Bounded by `sqrt(6)` whenever `lambda beta < 1/L`.
pub fn lipschitz_h_check(
    inst: &BepInstance,
    lambda: f64,
    beta: f64,
    region: &BoxSet,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if lambda * beta * inst.lipschitz() >= 1.0 {
        return Err(SolverError::InvalidParameter(
            "lipschitz_h_check needs lambda * beta in (0, 1/L)".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_ratio = 0.0_f64;
    let mut done = 0;
    while done < samples {
        let x = region.sample(&mut rng);
        let x2 = region.sample(&mut rng);
        let d = x.sub(&x2).norm();
        if d == 0.0 {
            continue; // degenerate pair
        }
        let hx = h_map(inst, lambda, beta, &x)?;
        let hx2 = h_map(inst, lambda, beta, &x2)?;
        max_ratio = max_ratio.max(hx.sub(&hx2).norm() / d);
        done += 1;
    }
    Ok(max_ratio)
}

/// `||h(lambda, beta, x)||` along a decreasing sequence of `lambda` values;
/// decays to zero for `x` in the domain of the upper-level operator.
pub fn small_lambda_limit_check(
    inst: &BepInstance,
    beta: f64,
    x: &Point,
    lambda_seq: &[f64],
) -> Result<Vec<f64>> {
    lambda_seq
        .iter()
        .map(|&lam| Ok(h_map(inst, lam, beta, x)?.norm()))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntegrationMethod {
    Euler,
    Rk4,
}

#[derive(Clone, Debug)]
pub struct TrajRecord {
    pub t: f64,
    pub x: Point,
    pub y: Point,
    pub norm_h: f64,
    /// `||x(t) - y(t)||`
    pub gap: f64,
    pub dist_ref: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TrajectoryTrace {
    pub records: Vec<TrajRecord>,
    pub final_point: Point,
    /// False when a resolvent failure truncated the integration.
    pub completed: bool,
}

fn resolvent_y(inst: &BepInstance, lambda: f64, beta: f64, x: &Point) -> Result<Point> {
    let bx = inst.lower.eval(x);
    inst.upper
        .resolvent(lambda, &x.add_scaled(-lambda * beta, &bx))
}

/// Fixed-step explicit integration of the dynamical system; the trace is
/// sampled at every step.
pub fn integrate(
    inst: &BepInstance,
    x0: &Point,
    sched: &ScheduleFn,
    method: IntegrationMethod,
    step: f64,
    t_end: f64,
    reference: Option<&Point>,
) -> Result<TrajectoryTrace> {
    if step <= 0.0 || t_end <= 0.0 {
        return Err(SolverError::InvalidParameter(
            "integrate needs step > 0 and t_end > 0".into(),
        ));
    }
    let steps = (t_end / step).round().max(1.0) as usize;
    let mut records = Vec::with_capacity(steps + 1);
    let mut x = x0.clone();
    let mut completed = true;
    for k in 0..=steps {
        let t = k as f64 * step;
        let (lam, bet) = (sched.lambda(t), sched.beta(t));
        let sample = (|| -> Result<(Point, Point)> {
            let y = resolvent_y(inst, lam, bet, &x)?;
            let h = h_map(inst, lam, bet, &x)?;
            Ok((y, h))
        })();
        let (y, h) = match sample {
            Ok(pair) => pair,
            Err(_) => {
                completed = false;
                break;
            }
        };
        let gap = x.sub(&y).norm();
        records.push(TrajRecord {
            t,
            x: x.clone(),
            y,
            norm_h: h.norm(),
            gap,
            dist_ref: reference.map(|u| x.dist(u)),
        });
        if k == steps {
            break;
        }
        let advance = match method {
            IntegrationMethod::Euler => h.scale(step),
            IntegrationMethod::Rk4 => {
                let half_t = t + 0.5 * step;
                let full_t = t + step;
                let k1 = h;
                let k2 = h_map(
                    inst,
                    sched.lambda(half_t),
                    sched.beta(half_t),
                    &x.add_scaled(0.5 * step, &k1),
                )?;
                let k3 = h_map(
                    inst,
                    sched.lambda(half_t),
                    sched.beta(half_t),
                    &x.add_scaled(0.5 * step, &k2),
                )?;
                let k4 = h_map(
                    inst,
                    sched.lambda(full_t),
                    sched.beta(full_t),
                    &x.add_scaled(step, &k3),
                )?;
                k1.add_scaled(2.0, &k2)
                    .add_scaled(2.0, &k3)
                    .add(&k4)
                    .scale(step / 6.0)
            }
        };
        x = x.add(&advance);
    }
    Ok(TrajectoryTrace {
        final_point: x,
        records,
        completed,
    })
}

/// Finite-difference estimate of `||dy/dt||` at an interior sample against
/// the closed-form bound; returns `(lhs, rhs)` for assertion with a
/// discretization slack.
pub fn ydot_bound_check(
    inst: &BepInstance,
    sched: &ScheduleFn,
    trace: &TrajectoryTrace,
    index: usize,
) -> Result<(f64, f64)> {
    if index == 0 || index + 1 >= trace.records.len() {
        return Err(SolverError::InvalidParameter(
            "ydot_bound_check needs an interior sample index".into(),
        ));
    }
    let prev = &trace.records[index - 1];
    let here = &trace.records[index];
    let next = &trace.records[index + 1];
    let dt = next.t - prev.t;
    let lhs = next.y.sub(&prev.y).norm() / dt;

    let t = here.t;
    let (lam, bet) = (sched.lambda(t), sched.beta(t));
    let (lam_dot, bet_dot) = (sched.lambda_dot(t), sched.beta_dot(t));
    let l = inst.lipschitz();
    let lbl = lam * bet * l;
    let coeff = 1.0 + lam_dot.abs() / lam + lbl + lbl * (1.0 + lbl * lbl).sqrt();
    let rhs = coeff * here.gap + l * bet_dot.abs() * lam * inst.lower.eval(&here.x).norm();
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bifunctions::{EquilibriumBifunction, ProxBifunction};
    use crate::fbf::{fbf_step, run_fbf, StoppingRule};
    use crate::operators::MonotoneMap;
    use crate::saddle::SaddleProblem;

    fn saddle_instance() -> BepInstance {
        let sp = SaddleProblem::example();
        let k = sp.feasible_set();
        sp.build_bep(EquilibriumBifunction::zero(k)).unwrap()
    }

    #[test]
    fn h_map_matches_step_displacement() {
        let inst = saddle_instance();
        let x = Point(vec![0.5, 0.5]);
        let h = h_map(&inst, 0.5, 1.0, &x).unwrap();
        assert!(h.sub(&Point(vec![-0.75, 0.25])).norm() < 1e-15);
        let (_, x_next) = fbf_step(&inst, &x, 0.5, 1.0).unwrap();
        assert!(h.sub(&x_next.sub(&x)).norm() < 1e-15);
    }

    #[test]
    fn h_map_vanishes_at_fixed_point() {
        let inst = saddle_instance();
        let h = h_map(&inst, 0.5, 1.0, &Point(vec![0.0, 1.0])).unwrap();
        assert!(h.norm() < 1e-15);
    }

    #[test]
    fn h_map_zero_operator_at_solution() {
        let k = BoxSet::cube(0.0, 1.0, 2).unwrap();
        let c = Point(vec![0.3, 0.7]);
        let g = ProxBifunction::new(c.clone(), 1.0).unwrap();
        let inst = crate::fbf::BepInstance::new(
            MonotoneMap::zero(2),
            EquilibriumBifunction::prox(g, k.clone()),
            k,
        )
        .unwrap();
        let h = h_map(&inst, 1.0, 1.0, &c).unwrap();
        assert!(h.norm() < 1e-15);
    }

    #[test]
    fn sqrt6_bound_holds_on_samples() {
        let inst = saddle_instance();
        let region = BoxSet::cube(-1.0, 2.0, 2).unwrap();
        let ratio = lipschitz_h_check(&inst, 0.5, 1.0, &region, 20_000, 11).unwrap();
        assert!(ratio <= 6f64.sqrt() + 1e-9, "ratio {ratio}");
    }

    #[test]
    fn projection_residual_bound_for_trivial_problem() {
        // B = 0, g = 0: h = P_K - I, Lipschitz constant at most 2.
        let k = BoxSet::cube(0.0, 1.0, 2).unwrap();
        let inst = crate::fbf::BepInstance::new(
            MonotoneMap::zero(2),
            EquilibriumBifunction::zero(k.clone()),
            k,
        )
        .unwrap();
        let region = BoxSet::cube(-2.0, 3.0, 2).unwrap();
        let ratio = lipschitz_h_check(&inst, 0.7, 1.0, &region, 20_000, 5).unwrap();
        assert!(ratio <= 2.0 + 1e-12, "ratio {ratio}");
    }

    #[test]
    fn euler_step_one_reproduces_discrete_iterates() {
        let inst = saddle_instance();
        let sched = Schedule::constant(0.5, 1.0);
        let trace = run_fbf(
            &inst,
            &Point(vec![0.5, 0.5]),
            &sched,
            &StoppingRule {
                max_iter: 50,
                tol_fix: 0.0,
                tol_gap: 0.0,
            },
            None,
        )
        .unwrap();
        let traj = integrate(
            &inst,
            &Point(vec![0.5, 0.5]),
            &ScheduleFn::from_discrete(&sched),
            IntegrationMethod::Euler,
            1.0,
            50.0,
            None,
        )
        .unwrap();
        for (r, d) in traj.records.iter().zip(&trace.records) {
            for i in 0..2 {
                assert!((r.x[i] - d.x[i]).abs() <= 1e-12, "t = {}", r.t);
            }
        }
    }

    #[test]
    fn fixed_point_trajectory_is_constant() {
        let inst = saddle_instance();
        let x0 = Point(vec![0.0, 1.0]);
        let traj = integrate(
            &inst,
            &x0,
            &ScheduleFn::constant(0.5, 1.0),
            IntegrationMethod::Rk4,
            0.1,
            5.0,
            None,
        )
        .unwrap();
        for r in &traj.records {
            assert!(r.x.sub(&x0).norm() < 1e-14);
        }
    }

    #[test]
    fn rk4_saddle_with_prox_upper_converges() {
        let sp = SaddleProblem::example();
        let k = sp.feasible_set();
        let g = ProxBifunction::new(Point(vec![0.5, 0.5]), 1.0).unwrap();
        let inst = sp.build_bep(EquilibriumBifunction::prox(g, k)).unwrap();
        let sched = ScheduleFn {
            beta: TimeCurve::Power {
                offset: 1.0,
                coeff: 1.0,
                exponent: 0.5,
            },
            lambda: LambdaCurve::CoupledProduct { product: 0.9 },
        };
        let traj = integrate(
            &inst,
            &Point(vec![0.5, 0.5]),
            &sched,
            IntegrationMethod::Rk4,
            0.05,
            200.0,
            Some(&Point(vec![0.0, 1.0])),
        )
        .unwrap();
        assert!(traj.completed);
        let d = traj.final_point.dist(&Point(vec![0.0, 1.0]));
        assert!(d <= 1e-2, "dist {d}");
    }

    #[test]
    fn small_lambda_decay() {
        let inst = saddle_instance();
        let lams: Vec<f64> = (1..=6).map(|k| 10f64.powi(-k)).collect();
        let norms =
            small_lambda_limit_check(&inst, 1.0, &Point(vec![0.5, 0.5]), &lams).unwrap();
        for w in norms.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "not decaying: {norms:?}");
        }
        assert!(*norms.last().unwrap() < 1e-3);
        // boundary point of K still decays
        let norms_b =
            small_lambda_limit_check(&inst, 1.0, &Point(vec![0.0, 0.5]), &lams).unwrap();
        assert!(*norms_b.last().unwrap() < 1e-3);
    }

    #[test]
    fn ydot_bound_constant_schedules() {
        let inst = saddle_instance();
        let sched = ScheduleFn::constant(0.5, 1.0);
        let step = 1e-3;
        let traj = integrate(
            &inst,
            &Point(vec![0.5, 0.5]),
            &sched,
            IntegrationMethod::Euler,
            step,
            1.0,
            None,
        )
        .unwrap();
        // local Lipschitz budget ~ sqrt(6); slack 10 * step * that.
        let slack = 10.0 * step * 6f64.sqrt();
        for idx in [1, 100, 500, 900] {
            let (lhs, rhs) = ydot_bound_check(&inst, &sched, &traj, idx).unwrap();
            assert!(lhs <= rhs + slack, "idx {idx}: lhs {lhs} rhs {rhs}");
        }
    }

    #[test]
    fn ydot_bound_exp_decay_lambda() {
        let inst = saddle_instance();
        let sched = ScheduleFn {
            beta: TimeCurve::Constant { value: 1.0 },
            lambda: LambdaCurve::Explicit(TimeCurve::ExpDecay {
                floor: 0.1,
                coeff: 0.4,
            }),
        };
        let step = 1e-3;
        let traj = integrate(
            &inst,
            &Point(vec![0.5, 0.5]),
            &sched,
            IntegrationMethod::Euler,
            step,
            1.0,
            None,
        )
        .unwrap();
        let slack = 10.0 * step * 6f64.sqrt();
        for idx in [1, 250, 750] {
            let (lhs, rhs) = ydot_bound_check(&inst, &sched, &traj, idx).unwrap();
            assert!(lhs <= rhs + slack, "idx {idx}: lhs {lhs} rhs {rhs}");
        }
    }

    #[test]
    fn ydot_bound_rejects_boundary_index() {
        let inst = saddle_instance();
        let sched = ScheduleFn::constant(0.5, 1.0);
        let traj = integrate(
            &inst,
            &Point(vec![0.5, 0.5]),
            &sched,
            IntegrationMethod::Euler,
            0.1,
            1.0,
            None,
        )
        .unwrap();
        assert!(ydot_bound_check(&inst, &sched, &traj, 0).is_err());
    }
}
