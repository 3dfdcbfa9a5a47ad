//! Constrained first-order minimisation of the per-object objective.
//!
//! Unknowns are packed into one flat vector (translation, raw quaternion,
//! log-scale, then `κx, κy, β` per observation). Each iteration takes a
//! descent step with Armijo backtracking and then projects: the quaternion is
//! renormalised and every depth is clamped to `beta_min`.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datamodel::{Observation, SceneInput};
use crate::geometry::{CameraFrame, Pose9DoF, Quat, Symmetry, Vec2, Vec3, NEAR_PLANE};
use crate::objective::{
    scale_box_term_matrix, AuxPerFrame, ObjectProblem, ObjectVariables, ObjectiveError, ObjectiveWeights, Smoothing,
    TermBreakdown, AUX_OFF, Q_OFF, S_OFF, T_OFF,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("no observations to solve over")]
    NoObservations,
    #[error("objective became non-finite at iteration {iteration}: {diagnostics}")]
    NonFiniteObjective { iteration: usize, diagnostics: String },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error("no depth in [0.1, 100] m improves on the interval ends")]
    Divergent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    /// `t = 0`, `s = 1`, `R = I`, `κ` at the image center, `β = 1 m`.
    Fixed,
    /// As `Fixed`, but `R` starts at the rotation implied by the
    /// highest-scoring observation. `R = I` is a stationary point of the
    /// rotation term when the object is turned half a revolution.
    ObservedRotation,
    /// Translation and rotation read off the highest-scoring observation.
    Observations,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Preconditioned gradient with a Barzilai-Borwein step.
    Gradient,
    /// Limited-memory BFGS two-loop direction.
    Lbfgs,
}

/// Relative step sizes of the variable blocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockRates {
    /// Translation, image centers (per focal length) and depths.
    pub linear: f64,
    pub rotation: f64,
    pub log_scale: f64,
}

impl Default for BlockRates {
    fn default() -> Self {
        BlockRates {
            linear: 1e-2,
            rotation: 1e-3,
            log_scale: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Length of the very first step; later steps come from the direction update.
    pub learning_rate: f64,
    pub block_rates: BlockRates,
    pub convergence_tol: f64,
    /// Window (in iterations) over which `convergence_tol` is measured.
    pub convergence_window: usize,
    pub beta_min: f64,
    pub init: InitStrategy,
    pub direction: Direction,
    pub lbfgs_memory: usize,
    /// Solve without the box term first, then with all terms.
    pub staged: bool,
    /// Huber widths in pixels, applied in order; an empty list means exact penalties.
    pub smoothing_px: Vec<f64>,
    pub max_observations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iterations: 2000,
            learning_rate: 1e-2,
            block_rates: BlockRates::default(),
            convergence_tol: 1e-7,
            convergence_window: 10,
            beta_min: NEAR_PLANE,
            init: InitStrategy::Observations,
            direction: Direction::Lbfgs,
            lbfgs_memory: 8,
            staged: false,
            smoothing_px: vec![4.0, 1.0, 0.25, 0.05],
            max_observations: 40,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::InvalidConfig(m.into()));
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be > 0");
        }
        if !(self.beta_min > 0.0) {
            return bad("beta_min must be > 0");
        }
        let r = &self.block_rates;
        if !(r.linear > 0.0 && r.rotation > 0.0 && r.log_scale > 0.0) {
            return bad("block rates must be > 0");
        }
        if !(self.convergence_tol >= 0.0) || self.convergence_window == 0 {
            return bad("convergence_tol must be >= 0 and convergence_window >= 1");
        }
        if self.smoothing_px.iter().any(|d| !(*d >= 0.0)) {
            return bad("smoothing widths must be >= 0");
        }
        if self.max_observations == 0 {
            return bad("max_observations must be >= 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations_used: usize,
    /// Exact (unsmoothed) objective at the returned variables.
    pub final_objective: f64,
    pub per_term_residuals: TermBreakdown,
    pub converged: bool,
    /// All camera centers lie within 1 cm of one line through the object center.
    pub ill_conditioned: bool,
    pub n_observations: usize,
}

/// State after an accepted iteration, handed to an optional observer.
#[derive(Debug, Clone)]
pub struct IterationEvent<'a> {
    pub iteration: usize,
    pub stage: usize,
    pub smoothing_px: f64,
    /// Objective being minimised in this stage (smoothed, stage weights).
    pub objective: f64,
    pub translation: Vec3,
    pub quaternion: [f64; 4],
    pub scale: Vec3,
    pub betas: &'a [f64],
}

pub type Observer<'o> = &'o mut dyn FnMut(&IterationEvent<'_>);

/// Uniformly spaced subset of at most `max` items, keeping both ends.
pub fn subsample<T: Clone>(items: &[T], max: usize) -> Vec<T> {
    let n = items.len();
    if n <= max {
        return items.to_vec();
    }
    if max == 1 {
        return vec![items[0].clone()];
    }
    (0..max)
        .map(|i| items[(i * (n - 1) + (max - 1) / 2) / (max - 1)].clone())
        .collect()
}

/// One observation per frame (highest score, then first), ordered by frame.
pub fn dedupe_by_frame<'a>(observations: &[&'a Observation]) -> Vec<&'a Observation> {
    let mut by_frame: BTreeMap<u32, &'a Observation> = BTreeMap::new();
    for o in observations {
        by_frame
            .entry(o.frame_index)
            .and_modify(|cur| {
                if o.score > cur.score {
                    *cur = o;
                }
            })
            .or_insert(o);
    }
    by_frame.into_values().collect()
}

/// Minimises the weighted objective for one object from the configured initialization.
pub fn solve_object(
    scene: &SceneInput,
    observations: &[&Observation],
    weights: &ObjectiveWeights,
    config: &SolverConfig,
    vertices: &[Vec3],
    symmetry: Symmetry,
) -> Result<(Pose9DoF, SolveReport), SolverError> {
    let (vars, report) = solve_object_with(scene, observations, weights, config, vertices, symmetry, None, None)?;
    Ok((vars.pose, report))
}

/// Relative decrease over the convergence window that ends an intermediate
/// smoothing level or stage.
const CONTINUATION_TOL: f64 = 1e-5;

/// Full-control variant: optional warm-start pose and per-iteration observer.
#[allow(clippy::too_many_arguments)]
pub fn solve_object_with(
    scene: &SceneInput,
    observations: &[&Observation],
    weights: &ObjectiveWeights,
    config: &SolverConfig,
    vertices: &[Vec3],
    symmetry: Symmetry,
    warm_start: Option<&Pose9DoF>,
    mut observer: Option<Observer<'_>>,
) -> Result<(ObjectVariables, SolveReport), SolverError> {
    config.validate()?;
    weights.validate()?;
    if observations.is_empty() {
        return Err(SolverError::NoObservations);
    }
    let used = subsample(&dedupe_by_frame(observations), config.max_observations);
    let problem = ObjectProblem::new(scene, &used, vertices.to_vec(), symmetry)?;
    let init = match warm_start {
        Some(p) => warm_variables(&problem, p, config.beta_min),
        None => initial_variables(&problem, config),
    };
    let mut x = problem.pack(&init)?;
    // the optimiser works on log-scale
    for i in 0..3 {
        x[S_OFF + i] = x[S_OFF + i].ln();
    }

    // (weights, scale only)
    let mut stages: Vec<(ObjectiveWeights, bool)> = Vec::new();
    if config.staged && warm_start.is_none() && weights.a_scale_box > 0.0 {
        // pose from centers and rotations first, then scale from boxes, then everything
        let no_box = ObjectiveWeights {
            a_scale_box: 0.0,
            ..*weights
        };
        stages.push((no_box, false));
        stages.push((*weights, true));
    }
    stages.push((*weights, false));
    let widths: Vec<f64> = if config.smoothing_px.is_empty() {
        vec![0.0]
    } else {
        config.smoothing_px.clone()
    };

    let mut opt = Optimizer::new(&problem, config);
    let mut converged = config.max_iterations == 0;
    let levels = stages.len() * widths.len();
    let mut level = 0;
    'outer: for (si, (w, scale_only)) in stages.iter().enumerate() {
        opt.scale_only = *scale_only;
        for &px in &widths {
            if opt.iterations >= config.max_iterations {
                converged = false;
                break 'outer;
            }
            let remaining = config.max_iterations - opt.iterations;
            let budget = if level + 1 == levels { remaining } else { remaining.div_ceil(levels - level) };
            level += 1;
            // intermediate levels only warm-start the next one
            let tol = if level == levels { None } else { Some(CONTINUATION_TOL) };
            converged = opt.run(&mut x, w, &Smoothing::from_pixels(px), budget, tol, si, px, &mut observer)?;
        }
    }

    let mut vars = unpack(&problem, &x);
    vars.pose.rotation = Quat::new_normalize(vars.pose.rotation.into_inner());
    let mut breakdown = TermBreakdown::default();
    let mut g = vec![0.0; problem.n_vars()];
    let xs = problem.pack(&vars)?;
    let final_objective = problem.evaluate(&xs, &mut g, weights, &Smoothing::NONE, Some(&mut breakdown))?;
    if !final_objective.is_finite() {
        return Err(SolverError::NonFiniteObjective {
            iteration: opt.iterations,
            diagnostics: format!("final pose {:?}", vars.pose),
        });
    }
    let report = SolveReport {
        iterations_used: opt.iterations,
        final_objective,
        per_term_residuals: breakdown,
        converged,
        ill_conditioned: ill_conditioned(problem.items.iter().map(|(f, _)| *f), &vars.pose.translation),
        n_observations: used.len(),
    };
    Ok((vars, report))
}

/// Camera centers all within 1 cm of a single line through `center`.
pub fn ill_conditioned<'a>(frames: impl Iterator<Item = &'a CameraFrame>, center: &Vec3) -> bool {
    let centers: Vec<Vec3> = frames.map(|f| f.center()).collect();
    let Some(axis) = centers
        .iter()
        .map(|c| c - center)
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .and_then(|d| d.try_normalize(1e-12))
    else {
        return true;
    };
    centers.iter().all(|c| {
        let d = c - center;
        (d - axis * d.dot(&axis)).norm() <= 0.01
    })
}

fn initial_variables(problem: &ObjectProblem<'_>, config: &SolverConfig) -> ObjectVariables {
    let mut aux = BTreeMap::new();
    for (f, o) in &problem.items {
        aux.insert(
            o.frame_index,
            AuxPerFrame {
                kappa: f.image_center(),
                beta: 1.0f64.max(config.beta_min),
            },
        );
    }
    let mut pose = Pose9DoF::identity();
    let (f, o) = problem
        .items
        .iter()
        .max_by(|a, b| a.1.score.total_cmp(&b.1.score).then(b.1.frame_index.cmp(&a.1.frame_index)))
        .expect("non-empty");
    if config.init != InitStrategy::Fixed {
        let r_world = f.rotation.transpose() * o.rotation.to_rotation_matrix().into_inner();
        pose.rotation = Quat::from_matrix(&r_world);
    }
    if config.init == InitStrategy::Observations {
        if let Some(s) = o.scale {
            pose.scale = s;
        }
        let beta = derive_depth_single_frame(f, o, &pose.scale, &pose.rotation, &problem.vertices)
            .unwrap_or(1.0)
            .max(config.beta_min);
        pose.translation = f.backproject_unchecked(&o.center, beta);
        for (f, o) in &problem.items {
            let pc = f.world_to_camera(&pose.translation);
            let a = aux.get_mut(&o.frame_index).expect("inserted above");
            a.kappa = o.center;
            a.beta = pc.z.max(config.beta_min);
        }
    }
    ObjectVariables { pose, aux }
}

fn warm_variables(problem: &ObjectProblem<'_>, pose: &Pose9DoF, beta_min: f64) -> ObjectVariables {
    let aux = problem
        .items
        .iter()
        .map(|(f, o)| {
            let pc = f.world_to_camera(&pose.translation);
            let a = if pc.z > beta_min {
                AuxPerFrame {
                    kappa: f.intrinsics.project_unchecked(&pc),
                    beta: pc.z,
                }
            } else {
                AuxPerFrame {
                    kappa: o.center,
                    beta: 1.0f64.max(beta_min),
                }
            };
            (o.frame_index, a)
        })
        .collect();
    ObjectVariables { pose: *pose, aux }
}

fn unpack(problem: &ObjectProblem<'_>, x: &[f64]) -> ObjectVariables {
    let pose = Pose9DoF::new(
        Vec3::new(x[T_OFF], x[T_OFF + 1], x[T_OFF + 2]),
        Quat::new_normalize(nalgebra::Quaternion::new(x[Q_OFF], x[Q_OFF + 1], x[Q_OFF + 2], x[Q_OFF + 3])),
        Vec3::new(x[S_OFF].exp(), x[S_OFF + 1].exp(), x[S_OFF + 2].exp()),
    );
    let aux = problem
        .items
        .iter()
        .enumerate()
        .map(|(i, (_, o))| {
            let k = AUX_OFF + 3 * i;
            (
                o.frame_index,
                AuxPerFrame {
                    kappa: Vec2::new(x[k], x[k + 1]),
                    beta: x[k + 2],
                },
            )
        })
        .collect();
    ObjectVariables { pose, aux }
}

struct Optimizer<'p, 'a> {
    problem: &'p ObjectProblem<'a>,
    config: &'p SolverConfig,
    /// Diagonal preconditioner (squared variable scales).
    precond: Vec<f64>,
    iterations: usize,
    xs: Vec<f64>,
    /// Freeze every block except the log-scale.
    scale_only: bool,
}

impl<'p, 'a> Optimizer<'p, 'a> {
    fn new(problem: &'p ObjectProblem<'a>, config: &'p SolverConfig) -> Self {
        let n = problem.n_vars();
        let r = &config.block_rates;
        let mut precond = vec![r.linear; n];
        for i in 0..4 {
            precond[Q_OFF + i] = r.rotation;
        }
        for i in 0..3 {
            precond[S_OFF + i] = r.log_scale;
        }
        for (i, (f, _)) in problem.items.iter().enumerate() {
            let k = AUX_OFF + 3 * i;
            precond[k] = r.linear * f.intrinsics.fx * f.intrinsics.fx;
            precond[k + 1] = r.linear * f.intrinsics.fy * f.intrinsics.fy;
        }
        Optimizer {
            problem,
            config,
            precond,
            iterations: 0,
            xs: vec![0.0; n],
            scale_only: false,
        }
    }

    /// Objective and gradient at `x` (log-scale layout).
    fn eval(&mut self, x: &[f64], g: &mut [f64], w: &ObjectiveWeights, sm: &Smoothing) -> Result<f64, SolverError> {
        self.xs.copy_from_slice(x);
        for i in 0..3 {
            self.xs[S_OFF + i] = x[S_OFF + i].exp();
        }
        let v = self.problem.evaluate(&self.xs, g, w, sm, None)?;
        for i in 0..3 {
            g[S_OFF + i] *= self.xs[S_OFF + i];
        }
        if self.scale_only {
            for (i, gi) in g.iter_mut().enumerate() {
                if !(S_OFF..S_OFF + 3).contains(&i) {
                    *gi = 0.0;
                }
            }
        }
        Ok(v)
    }

    fn project(&self, x: &mut [f64]) {
        let n = (x[Q_OFF..Q_OFF + 4].iter().map(|v| v * v).sum::<f64>()).sqrt();
        if n > 0.0 && n.is_finite() {
            x[Q_OFF..Q_OFF + 4].iter_mut().for_each(|v| *v /= n);
        }
        for i in 0..self.problem.items.len() {
            let k = AUX_OFF + 3 * i + 2;
            if x[k] < self.config.beta_min {
                x[k] = self.config.beta_min;
            }
        }
    }

    fn notify(&self, observer: &mut Option<Observer<'_>>, x: &[f64], f: f64, stage: usize, px: f64) {
        if let Some(obs) = observer.as_mut() {
            let betas: Vec<f64> = (0..self.problem.items.len()).map(|i| x[AUX_OFF + 3 * i + 2]).collect();
            obs(&IterationEvent {
                iteration: self.iterations,
                stage,
                smoothing_px: px,
                objective: f,
                translation: Vec3::new(x[T_OFF], x[T_OFF + 1], x[T_OFF + 2]),
                quaternion: [x[Q_OFF], x[Q_OFF + 1], x[Q_OFF + 2], x[Q_OFF + 3]],
                scale: Vec3::new(x[S_OFF].exp(), x[S_OFF + 1].exp(), x[S_OFF + 2].exp()),
                betas: &betas,
            });
        }
    }

    /// Runs descent on one smoothing level; true if the level converged.
    #[allow(clippy::too_many_arguments)]
    fn run(
        &mut self,
        x: &mut [f64],
        w: &ObjectiveWeights,
        sm: &Smoothing,
        budget: usize,
        relative_tol: Option<f64>,
        stage: usize,
        px: f64,
        observer: &mut Option<Observer<'_>>,
    ) -> Result<bool, SolverError> {
        let n = x.len();
        self.project(x);
        let mut g = vec![0.0; n];
        let mut f = self.eval(x, &mut g, w, sm)?;
        if !f.is_finite() {
            return Err(SolverError::NonFiniteObjective {
                iteration: self.iterations,
                diagnostics: format!("objective {f} at start of stage {stage}"),
            });
        }
        let mut history: VecDeque<f64> = VecDeque::from([f]);
        let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
        let mut bb_step = self.config.learning_rate;
        let mut xt = vec![0.0; n];
        let mut gt = vec![0.0; n];
        let mut first = true;

        for _ in 0..budget {
            let gnorm2: f64 = g.iter().map(|v| v * v).sum();
            if gnorm2 == 0.0 {
                return Ok(true);
            }
            let (d, step0) = match self.config.direction {
                Direction::Lbfgs if !memory.is_empty() => (self.lbfgs_direction(&g, &memory), 1.0),
                _ => {
                    let d: Vec<f64> = g.iter().zip(&self.precond).map(|(gi, p)| -gi * p).collect();
                    let s = if first {
                        let dn = d.iter().map(|v| v * v).sum::<f64>().sqrt();
                        self.config.learning_rate / dn.max(1e-300)
                    } else {
                        bb_step
                    };
                    (d, s)
                }
            };
            let slope: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
            let (d, slope, step0) = if slope < 0.0 {
                (d, slope, step0)
            } else {
                memory.clear();
                let d: Vec<f64> = g.iter().zip(&self.precond).map(|(gi, p)| -gi * p).collect();
                let slope = g.iter().zip(&d).map(|(a, b)| a * b).sum();
                let dn = d.iter().map(|v| v * v).sum::<f64>().sqrt();
                (d, slope, self.config.learning_rate / dn.max(1e-300))
            };

            // Armijo backtracking on the projected trial point
            let mut step = step0;
            let mut accepted = None;
            for _ in 0..60 {
                for i in 0..n {
                    xt[i] = x[i] + step * d[i];
                }
                self.project(&mut xt);
                if let Ok(ft) = self.eval(&xt, &mut gt, w, sm) {
                    if ft.is_finite() && ft <= f + 1e-4 * step * slope && ft < f {
                        accepted = Some(ft);
                        break;
                    }
                }
                step *= 0.5;
            }
            let Some(ft) = accepted else {
                // no decrease representable along this direction; retry once along the gradient
                if memory.is_empty() && first {
                    return Ok(true);
                }
                memory.clear();
                first = true;
                continue;
            };
            first = false;
            self.iterations += 1;

            let s: Vec<f64> = xt.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
            if sy > 1e-12 * s.iter().map(|v| v * v).sum::<f64>().sqrt() * y.iter().map(|v| v * v).sum::<f64>().sqrt() {
                let s_pinv_s: f64 = s.iter().zip(&self.precond).map(|(a, p)| a * a / p).sum();
                bb_step = (s_pinv_s / sy).clamp(1e-12, 1e12);
                memory.push_back((s, y, 1.0 / sy));
                if memory.len() > self.config.lbfgs_memory {
                    memory.pop_front();
                }
            }
            x.copy_from_slice(&xt);
            g.copy_from_slice(&gt);
            f = ft;
            #[cfg(feature = "invariant-checks")]
            invariants::check(x, self.problem.items.len(), self.config.beta_min);
            self.notify(observer, x, f, stage, px);

            history.push_back(f);
            if history.len() > self.config.convergence_window + 1 {
                history.pop_front();
            }
            let tol = relative_tol.map_or(self.config.convergence_tol, |r| self.config.convergence_tol.max(r * f.abs()));
            if history.len() == self.config.convergence_window + 1 && history.front().expect("non-empty") - f < tol {
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn lbfgs_direction(&self, g: &[f64], memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
        let mut q = g.to_vec();
        let mut alphas = Vec::with_capacity(memory.len());
        for (s, y, rho) in memory.iter().rev() {
            let a = rho * s.iter().zip(&q).map(|(a, b)| a * b).sum::<f64>();
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        // initial inverse Hessian: preconditioner scaled to the latest curvature pair
        let (s, y, _) = memory.back().expect("non-empty");
        let sy: f64 = s.iter().zip(y).map(|(a, b)| a * b).sum();
        let ypy: f64 = y.iter().zip(&self.precond).map(|(a, p)| a * a * p).sum();
        let gamma = sy / ypy.max(1e-300);
        let mut r: Vec<f64> = q.iter().zip(&self.precond).map(|(qi, p)| gamma * p * qi).collect();
        for ((s, y, rho), a) in memory.iter().zip(alphas.iter().rev()) {
            let b = rho * y.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>();
            r.iter_mut().zip(s).for_each(|(ri, si)| *ri += (a - b) * si);
        }
        r.iter_mut().for_each(|v| *v = -*v);
        r
    }
}

/// Box distance between `obs.bbox` and the model box placed at depth `beta`
/// along the ray through the observed center.
fn box_distance_at_depth(
    frame: &CameraFrame,
    obs: &Observation,
    scale: &Vec3,
    rotation: &Quat,
    vertices: &[Vec3],
    beta: f64,
) -> Option<f64> {
    let t = frame.backproject_unchecked(&obs.center, beta);
    let r = rotation.to_rotation_matrix().into_inner();
    scale_box_term_matrix(frame, obs, &t, &r, scale, vertices, &Smoothing::NONE)
        .ok()
        .map(|(v, ..)| v)
}

/// Depth along the ray through the observed center that best reproduces the
/// observed box, for a given world rotation and scale.
pub fn derive_depth_single_frame(
    frame: &CameraFrame,
    obs: &Observation,
    scale: &Vec3,
    rotation: &Quat,
    vertices: &[Vec3],
) -> Result<f64, SolverError> {
    const LO: f64 = 0.1;
    const HI: f64 = 100.0;
    const GRID: usize = 512;
    let f = |b: f64| box_distance_at_depth(frame, obs, scale, rotation, vertices, b).unwrap_or(f64::INFINITY);
    let depth = |i: usize| LO * (HI / LO).powf(i as f64 / (GRID - 1) as f64);
    let values: Vec<f64> = (0..GRID).map(|i| f(depth(i))).collect();
    let best = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("non-empty grid");
    let (mut a, mut b) = (depth(best.saturating_sub(1)), depth((best + 1).min(GRID - 1)));
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-10 * b.max(1.0) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    let beta = (a + b) / 2.0;
    let fb = f(beta).min(values[best]);
    let beta = if f(beta) <= values[best] { beta } else { depth(best) };
    if !(fb < values[0] && fb < values[GRID - 1]) {
        return Err(SolverError::Divergent);
    }
    Ok(beta)
}

mod online;

pub use online::{chunk_scene, solve_incremental, OnlineError, OnlineSession};

#[cfg(test)]
mod tests;

/// Assertions run after every accepted iteration in builds with the
/// `invariant-checks` feature.
#[cfg(feature = "invariant-checks")]
pub mod invariants {
    use std::sync::atomic::{AtomicU64, Ordering};

    use crate::objective::{AUX_OFF, Q_OFF};

    static CHECKED: AtomicU64 = AtomicU64::new(0);

    /// Number of iterations checked so far in this process.
    pub fn iterations_checked() -> u64 {
        CHECKED.load(Ordering::Relaxed)
    }

    pub(super) fn check(x: &[f64], n_items: usize, beta_min: f64) {
        let qn = x[Q_OFF..Q_OFF + 4].iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((qn - 1.0).abs() <= 1e-9, "quaternion norm {qn} after an iteration");
        for i in 0..n_items {
            let b = x[AUX_OFF + 3 * i + 2];
            assert!(b >= beta_min, "depth {b} below {beta_min} after an iteration");
        }
        CHECKED.fetch_add(1, Ordering::Relaxed);
    }
}
