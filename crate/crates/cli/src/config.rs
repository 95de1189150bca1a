use serde::{Deserialize, Serialize};

use bilevel_fbf::bifunctions::{EquilibriumBifunction, PairedOperatorBifunction, ProxBifunction};
use bilevel_fbf::dynamics::ScheduleFn;
use bilevel_fbf::fbf::{BepInstance, StoppingRule};
use bilevel_fbf::geometry::{BoxSet, DenseMatrix, Point};
use bilevel_fbf::operators::{AffineMap, MonotoneMap};
use bilevel_fbf::{SaddleProblem, Schedule};

/// A complete run description, loaded from a JSON file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub upper: UpperSpec,
    pub schedule: Schedule,
    /// Continuous schedule for `dynamics`; derived from `schedule` when
    /// absent.
    #[serde(default)]
    pub time_schedule: Option<ScheduleFn>,
    #[serde(default)]
    pub solver: SolverSpec,
    pub x0: Vec<f64>,
    #[serde(default)]
    pub reference: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
    /// Horizon for schedule/condition checks.
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    /// Normal-cone components for the worked-example condition sum.
    #[serde(default)]
    pub condition_pq: Option<(f64, f64)>,
}

fn default_horizon() -> usize {
    100_000
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    /// Bilinear saddle coupling on `U x V`.
    Saddle {
        m: Vec<Vec<f64>>,
        a: Vec<f64>,
        b: Vec<f64>,
        u_box: BoxSpec,
        v_box: BoxSpec,
    },
    /// `B = 0` on a box `K` (pure upper-level selection).
    Zero { k: BoxSpec },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxSpec {
    pub fn build(&self) -> Result<BoxSet, String> {
        BoxSet::new(Point(self.lower.clone()), Point(self.upper.clone()))
            .map_err(|e| e.to_string())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum UpperSpec {
    Zero,
    Prox {
        c: Vec<f64>,
        w: f64,
    },
    Paired {
        a1_matrix: Vec<Vec<f64>>,
        a1_offset: Vec<f64>,
        a2_matrix: Vec<Vec<f64>>,
        a2_offset: Vec<f64>,
    },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Integration method for `dynamics`.
    #[serde(default = "default_method")]
    pub method: bilevel_fbf::dynamics::IntegrationMethod,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
}

fn default_tol() -> f64 {
    1e-8
}
fn default_max_iter() -> usize {
    100_000
}
fn default_method() -> bilevel_fbf::dynamics::IntegrationMethod {
    bilevel_fbf::dynamics::IntegrationMethod::Euler
}
fn default_step() -> f64 {
    bilevel_fbf::dynamics::DEFAULT_STEP
}
fn default_t_end() -> f64 {
    100.0
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec {
            tol: default_tol(),
            max_iter: default_max_iter(),
            method: default_method(),
            step: default_step(),
            t_end: default_t_end(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("malformed config: {e}"))
    }

    fn affine_monotone(matrix: &[Vec<f64>], offset: &[f64]) -> Result<MonotoneMap, String> {
        let m = DenseMatrix::from_rows(matrix).map_err(|e| e.to_string())?;
        AffineMap::new(m, Point(offset.to_vec()))
            .and_then(|a| a.into_monotone_map())
            .map_err(|e| e.to_string())
    }

    pub fn build_instance(&self) -> Result<BepInstance, String> {
        let (lower, k) = match &self.problem {
            ProblemSpec::Saddle { m, a, b, u_box, v_box } => {
                let sp = SaddleProblem::new(
                    DenseMatrix::from_rows(m).map_err(|e| e.to_string())?,
                    Point(a.clone()),
                    Point(b.clone()),
                    u_box.build()?,
                    v_box.build()?,
                )
                .map_err(|e| e.to_string())?;
                let op = sp.operator().map_err(|e| e.to_string())?;
                (op, sp.feasible_set())
            }
            ProblemSpec::Zero { k } => {
                let k = k.build()?;
                (MonotoneMap::zero(k.dim()), k)
            }
        };
        let upper = match &self.upper {
            UpperSpec::Zero => EquilibriumBifunction::zero(k.clone()),
            UpperSpec::Prox { c, w } => EquilibriumBifunction::prox(
                ProxBifunction::new(Point(c.clone()), *w).map_err(|e| e.to_string())?,
                k.clone(),
            ),
            UpperSpec::Paired {
                a1_matrix,
                a1_offset,
                a2_matrix,
                a2_offset,
            } => {
                let g = PairedOperatorBifunction {
                    a1: Self::affine_monotone(a1_matrix, a1_offset)?,
                    a2: Self::affine_monotone(a2_matrix, a2_offset)?,
                };
                EquilibriumBifunction::paired(g, k.clone())
            }
        };
        BepInstance::new(lower, upper, k).map_err(|e| e.to_string())
    }

    pub fn saddle_problem(&self) -> Option<SaddleProblem> {
        match &self.problem {
            ProblemSpec::Saddle { m, a, b, u_box, v_box } => SaddleProblem::new(
                DenseMatrix::from_rows(m).ok()?,
                Point(a.clone()),
                Point(b.clone()),
                u_box.build().ok()?,
                v_box.build().ok()?,
            )
            .ok(),
            ProblemSpec::Zero { .. } => None,
        }
    }

    pub fn stopping_rule(&self) -> StoppingRule {
        StoppingRule {
            tol_fix: self.solver.tol,
            tol_gap: self.solver.tol,
            max_iter: self.solver.max_iter,
        }
    }

    pub fn x0(&self) -> Point {
        Point(self.x0.clone())
    }

    pub fn reference(&self) -> Option<Point> {
        self.reference.as_ref().map(|r| Point(r.clone()))
    }

    pub fn time_schedule(&self) -> ScheduleFn {
        self.time_schedule
            .unwrap_or_else(|| ScheduleFn::from_discrete(&self.schedule))
    }
}
