//! Seeded comparisons of several runs on one problem.
//!
//! The config file is a list of `key = value` lines. Lines before the first
//! `[run]` header set defaults for every run; each `[run]` section then
//! describes one run and may override any default. `#` starts a comment.
//!
//! ```text
//! problem = gen:sinusoid:height=7,branching=2,arity=4
//! seeds = 0..10
//! eval_limit = 2000000
//! restarts = 1000
//!
//! [run]
//! algorithm = rdis
//!
//! [run]
//! label = cgd-baseline
//! algorithm = cgd
//! ```
//!
//! Global-only keys: `seeds` (comma list or `a..b`), `sweep_epsilon` (comma
//! list; every run is repeated for each value), `jobs` (worker threads) and
//! `out` (directory for trajectories and tables). Keys valid everywhere are
//! listed in [`apply_key`].

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rdis_core::optim::OptimizerKind;

use crate::algorithm::Algorithm;
use crate::error::{Error, Result};
use crate::problem::{Problem, ProblemSource};
use crate::run::{run_problem, RunConfig, RunOutput, SummaryRow};
use crate::trajectory::svg_chart;

/// A labelled run template; seeds and sweep values are filled in per job.
#[derive(Clone, Debug)]
pub struct RunSpec {
    pub label: String,
    pub config: RunConfig,
}

#[derive(Clone, Debug)]
pub struct CompareConfig {
    pub runs: Vec<RunSpec>,
    pub seeds: Vec<u64>,
    pub sweep: Option<Vec<f64>>,
    pub jobs: usize,
    pub out: Option<PathBuf>,
    pub svg: bool,
}

/// Results of [`compare`], in job order: runs, then sweep values, then
/// seeds.
#[derive(Clone, Debug)]
pub struct Comparison {
    pub rows: Vec<SummaryRow>,
    pub outputs: Vec<RunOutput>,
    pub totals: Vec<TotalRow>,
}

/// One run label at one epsilon, summed or minimized over seeds.
#[derive(Clone, Debug, PartialEq)]
pub struct TotalRow {
    pub label: String,
    pub epsilon: f64,
    pub min_value: f64,
    pub total_wall_s: f64,
    pub total_evals: u64,
    pub simplified_terms: usize,
}

impl TotalRow {
    pub const HEADER: &'static str = "label,epsilon,min_value,total_wall_s,total_evals,simplified_terms";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{:.6},{},{}",
            self.label, self.epsilon, self.min_value, self.total_wall_s, self.total_evals, self.simplified_terms
        )
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::config(format!("bad value `{s}` in `{key}`")))
        })
        .collect()
}

fn parse_seeds(value: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = value.split_once("..") {
        let bad = || Error::config(format!("bad seed range `{value}`"));
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        return Ok((a..b).collect());
    }
    parse_list("seeds", value)
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(format!("bad value `{value}` for `{key}`")))
}

/// Sets one run setting. Keys: `problem`, `algorithm`, `label`, `epsilon`,
/// `seed`, `restarts`, `eval_limit`, `time_limit`, `timing`, `bcd_rounds`,
/// `optimizer` (the RDIS subspace optimizer: cgd, lm or grid),
/// `grid_points`, `grad_tol`, `max_iters`, `early_stop`, `local_restarts`,
/// `half_width`, `d_min`, `rdis_restarts`, `patience`, `max_rounds`,
/// `progress_tol`,
/// `parts`, `balance`. Returns false for an unknown key.
pub fn apply_key(cfg: &mut RunConfig, label: &mut Option<String>, key: &str, value: &str) -> Result<bool> {
    match key {
        "problem" => cfg.problem = value.parse()?,
        "algorithm" => cfg.algorithm = value.parse()?,
        "label" => *label = Some(value.to_string()),
        "epsilon" => cfg.epsilon = num(key, value)?,
        "seed" => cfg.seed = num(key, value)?,
        "restarts" => cfg.restarts = num(key, value)?,
        "eval_limit" => cfg.eval_limit = Some(num(key, value)?),
        "time_limit" => cfg.time_limit = Some(num(key, value)?),
        "timing" => cfg.timing = num(key, value)?,
        "bcd_rounds" => cfg.bcd_rounds = num(key, value)?,
        "optimizer" => cfg.optimizer.kind = parse_kind(value)?,
        "grid_points" => cfg.optimizer.grid_points = num(key, value)?,
        "grad_tol" => cfg.optimizer.grad_tol = num(key, value)?,
        "max_iters" => cfg.optimizer.max_iters = num(key, value)?,
        "early_stop" => cfg.optimizer.early_stop = num(key, value)?,
        "local_restarts" => cfg.optimizer.restarts = num(key, value)?,
        "half_width" => cfg.optimizer.sample_half_width = num(key, value)?,
        "d_min" => cfg.rdis.d_min = num(key, value)?,
        "rdis_restarts" => cfg.rdis.restarts = num(key, value)?,
        "patience" => cfg.rdis.patience = num(key, value)?,
        "max_rounds" => cfg.rdis.max_rounds = num(key, value)?,
        "progress_tol" => cfg.rdis.progress_tol = num(key, value)?,
        "parts" => cfg.rdis.parts = num(key, value)?,
        "balance" => cfg.rdis.balance = num(key, value)?,
        _ => return Ok(false),
    }
    Ok(true)
}

pub fn parse_kind(value: &str) -> Result<OptimizerKind> {
    [OptimizerKind::Cgd, OptimizerKind::Lm, OptimizerKind::Grid]
        .into_iter()
        .find(|k| k.name() == value)
        .ok_or_else(|| Error::config(format!("unknown optimizer `{value}` (expected cgd, lm or grid)")))
}

type Entry = (usize, String, String);

impl CompareConfig {
    pub fn parse(text: &str) -> Result<Self> {
        // problem and algorithm must come from the file, these are placeholders
        let mut defaults = RunConfig::new(ProblemSource::File(PathBuf::new()), Algorithm::Rdis);
        let mut has_problem = false;
        let mut default_label = None;
        // (header line, [(line, key, value)]) per `[run]` section
        let mut sections: Vec<(usize, Vec<Entry>)> = Vec::new();
        let mut cfg = CompareConfig {
            runs: Vec::new(),
            seeds: vec![0],
            sweep: None,
            jobs: std::thread::available_parallelism().map_or(1, |n| n.get()),
            out: None,
            svg: false,
        };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            let ln = i + 1;
            if line.is_empty() {
                continue;
            }
            if line == "[run]" {
                sections.push((ln, Vec::new()));
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::config(format!("line {ln}: expected key = value or [run]")));
            };
            let (k, v) = (k.trim(), v.trim());
            if let Some((_, entries)) = sections.last_mut() {
                entries.push((ln, k.to_string(), v.to_string()));
                continue;
            }
            let at = |e: Error| Error::config(format!("line {ln}: {e}"));
            match k {
                "seeds" => cfg.seeds = parse_seeds(v).map_err(at)?,
                "sweep_epsilon" => cfg.sweep = Some(parse_list(k, v).map_err(at)?),
                "jobs" => cfg.jobs = num(k, v).map_err(at)?,
                "out" => cfg.out = Some(PathBuf::from(v)),
                "svg" => cfg.svg = num(k, v).map_err(at)?,
                _ => {
                    has_problem |= k == "problem";
                    if !apply_key(&mut defaults, &mut default_label, k, v).map_err(at)? {
                        return Err(Error::config(format!("line {ln}: unknown key `{k}`")));
                    }
                }
            }
        }
        for (start, entries) in sections {
            let mut c = defaults.clone();
            let mut label = default_label.clone();
            let (mut problem, mut algorithm) = (has_problem, false);
            for (ln, k, v) in entries {
                let at = |e: Error| Error::config(format!("line {ln}: {e}"));
                if !apply_key(&mut c, &mut label, &k, &v).map_err(at)? {
                    return Err(Error::config(format!("line {ln}: unknown run key `{k}`")));
                }
                problem |= k == "problem";
                algorithm |= k == "algorithm";
            }
            if !problem || !algorithm {
                return Err(Error::config(format!(
                    "run at line {start} needs a problem and an algorithm"
                )));
            }
            let label = label.unwrap_or_else(|| c.algorithm.name().to_string());
            if label.is_empty() || label.contains([',', '/', '\\']) {
                return Err(Error::config(format!(
                    "run at line {start}: label `{label}` is not usable"
                )));
            }
            cfg.runs.push(RunSpec { label, config: c });
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Input {
            path: path.to_path_buf(),
            source: source.into(),
        })?;
        Self::parse(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        let variants = self.sweep.as_ref().map_or(1, Vec::len);
        if self.runs.len() * variants < 2 {
            return Err(Error::config("a comparison needs at least two runs"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("a comparison needs at least one seed"));
        }
        if self.jobs == 0 {
            return Err(Error::config("jobs must be positive"));
        }
        if let Some(eps) = &self.sweep {
            if eps.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
                return Err(Error::config("sweep values must be finite and non-negative"));
            }
        }
        for r in &self.runs {
            r.config.validate()?;
        }
        Ok(())
    }

    /// Every run this comparison performs, with its label.
    pub fn jobs(&self) -> Vec<(String, RunConfig)> {
        let eps: Vec<Option<f64>> = match &self.sweep {
            Some(v) => v.iter().copied().map(Some).collect(),
            None => vec![None],
        };
        let mut out = Vec::new();
        for r in &self.runs {
            for e in &eps {
                for &seed in &self.seeds {
                    let mut c = r.config.clone();
                    c.seed = seed;
                    if let Some(e) = e {
                        c.epsilon = *e;
                    }
                    c.trajectory = self
                        .out
                        .as_ref()
                        .map(|d| d.join(trajectory_name(&r.label, c.epsilon, seed)));
                    c.summary = None;
                    c.svg = None;
                    out.push((r.label.clone(), c));
                }
            }
        }
        out
    }
}

fn trajectory_name(label: &str, epsilon: f64, seed: u64) -> String {
    format!("{label}-eps{epsilon}-seed{seed}.csv")
}

/// Runs every job, `cfg.jobs` at a time, and builds the summary tables. All
/// runs must share one problem.
pub fn compare(cfg: &CompareConfig) -> Result<Comparison> {
    cfg.validate()?;
    let jobs = cfg.jobs();
    let mut problems: Vec<(ProblemSource, Problem)> = Vec::new();
    let mut which = Vec::with_capacity(jobs.len());
    for (_, c) in &jobs {
        let k = match problems.iter().position(|(s, _)| *s == c.problem) {
            Some(k) => k,
            None => {
                problems.push((c.problem.clone(), c.problem.load()?));
                problems.len() - 1
            }
        };
        which.push(k);
    }
    if let Some((_, p)) = problems.iter().find(|(_, p)| p.hash != problems[0].1.hash) {
        return Err(Error::config(format!(
            "runs use different problems: {} and {}",
            problems[0].1.name, p.name
        )));
    }
    if let Some(dir) = &cfg.out {
        fs::create_dir_all(dir).map_err(Error::io(dir))?;
    }

    let results: Mutex<Vec<Option<Result<RunOutput>>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..cfg.jobs.min(jobs.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some((_, c)) = jobs.get(i) else { break };
                let r = run_problem(&problems[which[i]].1, c);
                results.lock().expect("no worker panicked")[i] = Some(r);
            });
        }
    });
    let mut outputs = Vec::with_capacity(jobs.len());
    for r in results.into_inner().expect("no worker panicked") {
        outputs.push(r.expect("every job ran")?);
    }

    let rows: Vec<SummaryRow> = jobs.iter().zip(&outputs).map(|((l, _), o)| o.summary_row(l)).collect();
    let mut groups: BTreeMap<(usize, u64), TotalRow> = BTreeMap::new();
    let order: Vec<&str> = cfg.runs.iter().map(|r| r.label.as_str()).collect();
    for row in &rows {
        let rank = order.iter().position(|l| *l == row.label).unwrap_or(0);
        let t = groups.entry((rank, row.epsilon.to_bits())).or_insert_with(|| TotalRow {
            label: row.label.clone(),
            epsilon: row.epsilon,
            min_value: f64::INFINITY,
            total_wall_s: 0.0,
            total_evals: 0,
            simplified_terms: 0,
        });
        t.min_value = t.min_value.min(row.best_value);
        t.total_wall_s += row.wall_s;
        t.total_evals += row.evals;
        t.simplified_terms += row.simplified_terms;
    }
    let mut totals: Vec<TotalRow> = groups.into_values().collect();
    totals.sort_by(|a, b| {
        let ra = order.iter().position(|l| *l == a.label);
        let rb = order.iter().position(|l| *l == b.label);
        ra.cmp(&rb).then(a.epsilon.total_cmp(&b.epsilon))
    });

    let cmp = Comparison { rows, outputs, totals };
    if let Some(dir) = &cfg.out {
        write_tables(dir, &cmp, cfg)?;
    }
    Ok(cmp)
}

fn write_tables(dir: &Path, cmp: &Comparison, cfg: &CompareConfig) -> Result<()> {
    let mut summary = format!("{}\n", SummaryRow::HEADER);
    for r in &cmp.rows {
        summary += &r.csv_line();
        summary.push('\n');
    }
    let path = dir.join("summary.csv");
    fs::write(&path, summary).map_err(Error::io(&path))?;
    let mut totals = format!("{}\n", TotalRow::HEADER);
    for t in &cmp.totals {
        totals += &t.csv_line();
        totals.push('\n');
    }
    let path = dir.join("totals.csv");
    fs::write(&path, totals).map_err(Error::io(&path))?;
    if cfg.svg {
        for &seed in &cfg.seeds {
            let series: Vec<(String, &crate::trajectory::Trajectory)> = cmp
                .rows
                .iter()
                .zip(&cmp.outputs)
                .filter(|(r, _)| r.seed == seed)
                .map(|(r, o)| (format!("{} eps={}", r.label, r.epsilon), &o.trajectory))
                .collect();
            let named: Vec<(&str, &crate::trajectory::Trajectory)> =
                series.iter().map(|(n, t)| (n.as_str(), *t)).collect();
            let title = format!("{} (seed {seed})", cmp.outputs[0].problem);
            let path = dir.join(format!("seed{seed}.svg"));
            fs::write(&path, svg_chart(&title, &named)).map_err(Error::io(&path))?;
        }
    }
    Ok(())
}

/// Fixed-width rendering of the totals table for terminals.
pub fn format_totals(totals: &[TotalRow]) -> String {
    let width = totals.iter().map(|t| t.label.len()).max().unwrap_or(5).max(5);
    let mut s = format!(
        "{:<width$}  {:>8}  {:>22}  {:>10}  {:>14}  {:>10}\n",
        "label", "epsilon", "min value", "wall s", "evals", "simplified"
    );
    for t in totals {
        s += &format!(
            "{:<width$}  {:>8}  {:>22.12e}  {:>10.3}  {:>14}  {:>10}\n",
            t.label, t.epsilon, t.min_value, t.total_wall_s, t.total_evals, t.simplified_terms
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = "
# shared
problem = gen:sinusoid:h=3,k=2,a=2
seeds = 0..3
restarts = 2
timing = false
jobs = 2

[run]
algorithm = rdis

[run]
algorithm = cgd
label = plain
";

    #[test]
    fn parses_defaults_and_runs() {
        let c = CompareConfig::parse(BASIC).unwrap();
        assert_eq!(c.seeds, vec![0, 1, 2]);
        assert_eq!(c.runs.len(), 2);
        assert_eq!(c.runs[0].label, "rdis");
        assert_eq!(c.runs[1].label, "plain");
        assert_eq!(c.runs[1].config.restarts, 2);
        assert_eq!(c.jobs().len(), 6);
    }

    #[test]
    fn config_errors_name_the_line() {
        for (text, needle) in [
            (
                "problem = gen:sinusoid:h=2\n[run]\nalgorithm = rdis\nspeed = 3",
                "line 4",
            ),
            ("[run]\nalgorithm = rdis\n[run]\nalgorithm = cgd", "needs a problem"),
            ("problem = gen:sinusoid:h=2\n[run]\nalgorithm = rdis", "at least two"),
            (
                "problem = gen:sinusoid:h=2\nseeds = 1..x\n[run]\nalgorithm = rdis",
                "line 2",
            ),
            ("problem = gen:sinusoid:h=2\njust words", "line 2"),
        ] {
            let e = CompareConfig::parse(text).unwrap_err();
            assert_eq!(e.exit_code(), 2);
            assert!(e.to_string().contains(needle), "{e}");
        }
    }

    #[test]
    fn identical_runs_give_identical_rows() {
        let text = BASIC.replace("algorithm = cgd\nlabel = plain", "algorithm = rdis");
        let c = CompareConfig::parse(&text).unwrap();
        let out = compare(&c).unwrap();
        let (a, b) = out.rows.split_at(3);
        assert_eq!(a, b);
        assert_eq!(out.totals.len(), 1);
    }

    #[test]
    fn different_problems_are_rejected() {
        let text = format!("{BASIC}problem = gen:sinusoid:h=2,k=2,a=2\n");
        let e = compare(&CompareConfig::parse(&text).unwrap()).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("different problems"), "{e}");
    }

    #[test]
    fn outputs_are_written_per_run() {
        let dir = tempfile::tempdir().unwrap();
        let text = format!("out = {}\nsvg = true\n{BASIC}", dir.path().display());
        let out = compare(&CompareConfig::parse(&text).unwrap()).unwrap();
        let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert_eq!(summary.lines().count(), 7);
        assert!(summary.starts_with(SummaryRow::HEADER));
        for r in &out.rows {
            let t = dir.path().join(trajectory_name(&r.label, r.epsilon, r.seed));
            let t = crate::trajectory::Trajectory::from_csv(&fs::read_to_string(t).unwrap()).unwrap();
            assert_eq!(t.best(), Some(r.best_value));
        }
        assert!(dir.path().join("seed2.svg").exists());
        assert!(format_totals(&out.totals).contains("plain"));
    }
}
