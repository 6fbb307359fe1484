use std::fs;
use std::path::PathBuf;
use std::time::Duration;

use rdis_core::optim::{multi_start, Budget, Counts, OptimizerConfig, OptimizerKind, RngStream, SearchBox, Subspace};
use rdis_core::rdis::{BestRecord, Rdis, RdisConfig, Selection};

use crate::algorithm::Algorithm;
use crate::bcd::bcd_minimize;
use crate::error::{Error, Result};
use crate::problem::{Problem, ProblemSource, RestartStates};
use crate::trajectory::{svg_chart, CsvSink, Record, Trajectory};

/// Grid search without a budget is refused above this many lattice points.
const UNBOUNDED_GRID_CAP: f64 = 1e9;

/// One algorithm on one problem with one seed.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub problem: ProblemSource,
    pub algorithm: Algorithm,
    /// Settings for the RDIS variants; its `epsilon` and `optimizer` are
    /// replaced by the fields below.
    pub rdis: RdisConfig,
    /// The local optimizer: RDIS's subspace optimizer, and the settings of
    /// the baselines, which fix its kind themselves.
    pub optimizer: OptimizerConfig,
    pub epsilon: f64,
    pub seed: u64,
    pub time_limit: Option<f64>,
    /// Limit on term evaluations.
    pub eval_limit: Option<u64>,
    /// Top-level restarts, each from the next state of the shared sequence.
    pub restarts: usize,
    /// Sweep cap for the block coordinate descent baselines.
    pub bcd_rounds: usize,
    /// Record wall-clock times; when false every time is written as zero so
    /// outputs are byte-for-byte reproducible.
    pub timing: bool,
    pub trajectory: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(problem: ProblemSource, algorithm: Algorithm) -> Self {
        RunConfig {
            problem,
            algorithm,
            rdis: RdisConfig::default(),
            optimizer: OptimizerConfig::default(),
            epsilon: 0.0,
            seed: 0,
            time_limit: None,
            eval_limit: None,
            restarts: 10,
            bcd_rounds: 100,
            timing: true,
            trajectory: None,
            svg: None,
            summary: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::config("restart budget must be positive"));
        }
        if self.eval_limit == Some(0) {
            return Err(Error::config("evaluation limit must be positive"));
        }
        if let Some(t) = self.time_limit {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::config("time limit must be positive"));
            }
        }
        if self.bcd_rounds == 0 {
            return Err(Error::config("bcd rounds must be positive"));
        }
        self.rdis_config()
            .validate()
            .map_err(|e| Error::config(e.to_string()))?;
        self.local_config().validate().map_err(|e| Error::config(e.to_string()))
    }

    /// The RDIS settings this run uses.
    pub fn rdis_config(&self) -> RdisConfig {
        let mut c = self.rdis.clone();
        c.epsilon = self.epsilon;
        c.optimizer = self.optimizer.clone();
        match self.algorithm {
            Algorithm::RdisRnd => c.selection = Selection::Random,
            Algorithm::RdisNrr => {
                c.restarts = 1;
                c.optimizer.restarts = 1;
            }
            _ => {}
        }
        c
    }

    /// The local optimizer settings of a baseline.
    pub fn local_config(&self) -> OptimizerConfig {
        let mut c = self.optimizer.clone();
        if let Some(kind) = self.algorithm.baseline_kind() {
            c.kind = kind;
        }
        c
    }

    fn limited(&self) -> bool {
        self.eval_limit.is_some() || self.time_limit.is_some()
    }
}

/// Result of [`run`].
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub problem: String,
    pub problem_hash: u64,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub epsilon: f64,
    pub trajectory: Trajectory,
    /// Best state over all restarts; `value` equals `true_value` except for
    /// RDIS runs with a positive epsilon.
    pub best: BestRecord<f64>,
    pub counts: Counts,
    pub restarts: usize,
    /// Wall time in seconds, zero when timing is off.
    pub wall: f64,
    /// Terms with a free variable that RDIS simplifications replaced by
    /// constants, summed over all simplify calls.
    pub simplified_terms: usize,
}

/// Collects improvements into the trajectory and its CSV file.
struct Recorder<'b> {
    budget: &'b Budget,
    timing: bool,
    trajectory: Trajectory,
    sink: Option<CsvSink>,
    failed: Option<Error>,
}

impl Recorder<'_> {
    fn now(&self) -> Record {
        Record {
            elapsed: if self.timing {
                self.budget.elapsed().as_secs_f64()
            } else {
                0.0
            },
            evals: self.budget.term_evals(),
            best: self.trajectory.best().unwrap_or(f64::INFINITY),
        }
    }

    fn push(&mut self, r: Record) {
        if self.trajectory.push(r) {
            if let Some(sink) = &mut self.sink {
                if let Err(e) = sink.write(&r) {
                    self.failed.get_or_insert(e);
                }
            }
        }
    }

    fn observe(&mut self, value: f64) {
        if value.is_finite() && self.trajectory.best().is_none_or(|b| value < b) {
            let r = Record {
                best: value,
                ..self.now()
            };
            self.push(r);
        }
    }

    /// Closes the trajectory with the final counts.
    fn finish(&mut self) {
        let r = self.now();
        if self
            .trajectory
            .last()
            .is_some_and(|l| l.evals != r.evals || l.elapsed != r.elapsed)
        {
            self.push(r);
        }
    }
}

/// Loads the problem and runs the configured algorithm on it.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let problem = cfg.problem.load()?;
    run_problem(&problem, cfg)
}

/// Runs `cfg` on an already loaded problem, ignoring `cfg.problem`.
///
/// Top-level restart `k` starts from the `k`-th state of the seed's shared
/// restart sequence and draws its own randomness from a stream split off
/// the seed, so every algorithm sees the same starts. Runs stop after
/// `cfg.restarts` restarts or once a limit is reached; the restart running
/// at that point ends at its next budget check.
pub fn run_problem(problem: &Problem, cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let f = &problem.function;
    let local = cfg.local_config();
    let rcfg = cfg.rdis_config();
    check_fit(problem, cfg, &local)?;

    let mut budget = Budget::unlimited();
    if let Some(limit) = cfg.eval_limit {
        budget = budget.with_eval_limit(limit);
    }
    if let Some(t) = cfg.time_limit {
        budget = budget.with_time_limit(Duration::from_secs_f64(t));
    }
    let sink = cfg.trajectory.as_deref().map(CsvSink::create).transpose()?;
    let mut rec = Recorder {
        budget: &budget,
        timing: cfg.timing,
        trajectory: Trajectory::new(),
        sink,
        failed: None,
    };

    let mut root = RngStream::new(cfg.seed);
    let states = RestartStates::new(problem, cfg.optimizer.sample_half_width, root.split());
    let mut streams = root.split();
    let vars: Vec<usize> = f.variable_indices().collect();
    let mut best: Option<BestRecord<f64>> = None;
    let mut simplified_terms = 0;
    let mut restarts = 0;

    for (k, x0) in states.take(cfg.restarts).enumerate() {
        if k > 0 && budget.exhausted() {
            break;
        }
        let mut rng = streams.split();
        let found = if cfg.algorithm.is_rdis() {
            let mut solver = Rdis::new(f, rcfg.clone(), &budget)
                .map_err(Error::Runtime)?
                .on_improvement(|b| rec.observe(b.true_value));
            let r = solver.run(&x0, &mut rng).map_err(Error::Runtime)?;
            drop(solver);
            simplified_terms += r.totals.approximated_terms;
            r.best
        } else {
            let mut x = x0;
            match cfg.algorithm {
                Algorithm::BcdCgd | Algorithm::BcdLm => {
                    bcd_minimize(
                        f,
                        &mut x,
                        problem.blocks.blocks(),
                        &local,
                        cfg.bcd_rounds,
                        &budget,
                        &mut rng,
                    )
                    .map_err(Error::Runtime)?;
                }
                _ => {
                    let mut sub = Subspace::full(f, &budget).map_err(Error::Runtime)?;
                    let sbox = SearchBox::new(f, &vars, &x, local.sample_half_width);
                    multi_start(&mut sub, &mut x, &sbox, &local, local.restarts, &mut rng).map_err(Error::Runtime)?;
                }
            }
            let value = f.evaluate(&x).map_err(Error::Runtime)?;
            rec.observe(value);
            BestRecord {
                value,
                true_value: value,
                point: x,
            }
        };
        restarts += 1;
        if best.as_ref().is_none_or(|b| found.true_value < b.true_value) {
            best = Some(found);
        }
        if let Some(e) = rec.failed.take() {
            return Err(e);
        }
        // the lattice is fixed, so further restarts would repeat it
        if cfg.algorithm == Algorithm::Grid {
            break;
        }
    }
    rec.finish();
    if let Some(e) = rec.failed.take() {
        return Err(e);
    }
    let wall = if cfg.timing {
        budget.elapsed().as_secs_f64()
    } else {
        0.0
    };
    let out = RunOutput {
        problem: problem.name.clone(),
        problem_hash: problem.hash,
        algorithm: cfg.algorithm,
        seed: cfg.seed,
        epsilon: cfg.epsilon,
        trajectory: rec.trajectory,
        best: best.ok_or(Error::Runtime(rdis_core::Error::NonFinite))?,
        counts: budget.counts(),
        restarts,
        wall,
        simplified_terms,
    };
    if let Some(path) = &cfg.summary {
        let text = format!(
            "{}\n{}\n",
            SummaryRow::HEADER,
            out.summary_row(cfg.algorithm.name()).csv_line()
        );
        fs::write(path, text).map_err(Error::io(path))?;
    }
    if let Some(path) = &cfg.svg {
        let svg = svg_chart(&out.problem, &[(cfg.algorithm.name(), &out.trajectory)]);
        fs::write(path, svg).map_err(Error::io(path))?;
    }
    Ok(out)
}

/// Rejects algorithm and problem pairs that cannot run.
fn check_fit(problem: &Problem, cfg: &RunConfig, local: &OptimizerConfig) -> Result<()> {
    let f = &problem.function;
    let kind = if cfg.algorithm.is_rdis() {
        cfg.optimizer.kind
    } else {
        local.kind
    };
    match kind {
        OptimizerKind::Lm => {
            if let Some(t) = f.terms().iter().find(|t| t.residual().is_none()) {
                return Err(Error::config(format!(
                    "{} needs squared residual terms; term {} is not one",
                    cfg.algorithm,
                    t.id()
                )));
            }
        }
        OptimizerKind::Grid => {
            if let Some(v) = f.variables().iter().find(|v| !v.domain.is_finite()) {
                return Err(Error::config(format!(
                    "grid search needs bounded domains; `{}` is not",
                    v.name
                )));
            }
            let points = (local.grid_points as f64).powi(f.num_variables() as i32);
            if !cfg.algorithm.is_rdis() && !cfg.limited() && points > UNBOUNDED_GRID_CAP {
                return Err(Error::config(format!(
                    "grid over {} variables has {points:e} points; set an evaluation or time limit",
                    f.num_variables()
                )));
            }
        }
        OptimizerKind::Cgd => {}
    }
    Ok(())
}

/// One line of a summary table.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub label: String,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub epsilon: f64,
    pub best_value: f64,
    pub evals: u64,
    pub wall_s: f64,
    pub restarts: usize,
    pub simplified_terms: usize,
}

impl SummaryRow {
    pub const HEADER: &'static str = "label,algorithm,seed,epsilon,best_value,evals,wall_s,restarts,simplified_terms";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{:.6},{},{}",
            self.label,
            self.algorithm,
            self.seed,
            self.epsilon,
            self.best_value,
            self.evals,
            self.wall_s,
            self.restarts,
            self.simplified_terms
        )
    }
}

impl RunOutput {
    pub fn summary_row(&self, label: &str) -> SummaryRow {
        SummaryRow {
            label: label.to_string(),
            algorithm: self.algorithm,
            seed: self.seed,
            epsilon: self.epsilon,
            best_value: self.best.true_value,
            evals: self.counts.term_evals,
            wall_s: self.wall,
            restarts: self.restarts,
            simplified_terms: self.simplified_terms,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(problem: &str, algorithm: Algorithm) -> RunConfig {
        RunConfig {
            restarts: 3,
            timing: false,
            ..RunConfig::new(problem.parse().unwrap(), algorithm)
        }
    }

    #[test]
    fn zero_budgets_are_config_errors() {
        let base = cfg("gen:sinusoid:h=2", Algorithm::Cgd);
        for c in [
            RunConfig {
                restarts: 0,
                ..base.clone()
            },
            RunConfig {
                eval_limit: Some(0),
                ..base.clone()
            },
            RunConfig {
                time_limit: Some(0.0),
                ..base.clone()
            },
            RunConfig {
                epsilon: -1.0,
                ..base.clone()
            },
        ] {
            assert_eq!(run(&c).unwrap_err().exit_code(), 2);
        }
    }

    #[test]
    fn mismatched_optimizers_are_config_errors() {
        let e = run(&cfg("gen:sinusoid:h=2", Algorithm::Lm)).unwrap_err();
        assert_eq!(e.exit_code(), 2, "{e}");
        let e = run(&cfg("gen:bundle:cameras=2,points=3", Algorithm::Grid)).unwrap_err();
        assert_eq!(e.exit_code(), 2, "{e}");
        let e = run(&cfg("gen:sinusoid:h=5", Algorithm::Grid)).unwrap_err();
        assert_eq!(e.exit_code(), 2, "{e}");
    }

    #[test]
    fn every_algorithm_runs_and_keeps_its_trajectory_ordered() {
        for a in Algorithm::ALL {
            let problem = match a {
                Algorithm::Lm | Algorithm::BcdLm => "gen:bundle:cameras=2,points=4",
                Algorithm::Grid => "gen:sinusoid:h=1,k=2,a=2",
                _ => "gen:sinusoid:h=3,k=2,a=2",
            };
            let out = run(&RunConfig {
                eval_limit: Some(200_000),
                ..cfg(problem, a)
            })
            .unwrap();
            assert!(!out.trajectory.is_empty(), "{a}");
            assert!(out.trajectory.is_monotone(), "{a}");
            assert_eq!(out.trajectory.best(), Some(out.best.true_value), "{a}");
            let f = out.best.true_value;
            assert!(f.is_finite());
        }
    }

    #[test]
    fn eval_limit_stops_the_restart_loop() {
        let c = RunConfig {
            restarts: 1000,
            eval_limit: Some(5_000),
            ..cfg("gen:sinusoid:h=3,k=2,a=2", Algorithm::Cgd)
        };
        let out = run(&c).unwrap();
        assert!(out.restarts < 1000);
        // the restart under way when the limit hits finishes its current step
        assert!(out.counts.term_evals < 5_000 + 2_000, "{}", out.counts.term_evals);
    }

    #[test]
    fn rdis_nrr_forces_single_starts() {
        let c = cfg("gen:sinusoid:h=2", Algorithm::RdisNrr);
        let r = c.rdis_config();
        assert_eq!((r.restarts, r.optimizer.restarts), (1, 1));
        let r = cfg("gen:sinusoid:h=2", Algorithm::RdisRnd).rdis_config();
        assert_eq!(r.selection, Selection::Random);
    }
}
