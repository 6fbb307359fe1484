//! The acceptance suite: one check per criterion, each writing a PASS or
//! FAIL line straight to stderr so it shows even when test output is
//! captured. Set `RDIS_ACCEPTANCE` to a comma-separated list to run a subset.

use std::collections::{HashMap, VecDeque};
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rdis_core::expr::{parse_problem, Scratch};
use rdis_core::optim::{multi_start, Budget, OptimizerConfig, OptimizerKind, RngStream, SearchBox, Subspace};
use rdis_core::problems::*;
use rdis_core::rdis::{choose_vars, decompose, simplify, Rdis, RdisConfig, SimplifyEvent};
use rdis_core::structure::{partition_cutset, ComponentView, Entity, Hypergraph, TermVarGraph};
use rdis_core::{Interval, Objective};
use rdis_harness::{run_problem, Algorithm, Family, Problem, ProblemSource, RunConfig};

type Check = Result<String, String>;
type CheckFn = fn() -> Check;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

struct Family3 {
    name: &'static str,
    f: Objective,
    center: Vec<f64>,
    half_width: f64,
}

fn families() -> Vec<Family3> {
    let sin = make_sinusoid(&SinusoidSpec::new(4, 2, 4)).unwrap();
    let chain = make_lj_chain(&ChainSpec::new(8)).unwrap();
    let bundle = make_bundle(&BundleSpec::new(4, 12), &mut RngStream::new(5)).unwrap();
    vec![
        Family3 {
            name: "sinusoid",
            center: vec![0.0; sin.universe()],
            half_width: 10.0,
            f: sin,
        },
        Family3 {
            name: "ljchain",
            center: vec![0.0; chain.universe()],
            half_width: 4.0,
            f: chain,
        },
        Family3 {
            name: "bundle",
            center: bundle.truth,
            half_width: 0.05,
            f: bundle.function,
        },
    ]
}

/// Uniform draw for `v` from its domain clipped to `center ± half_width`.
fn draw(fam: &Family3, v: usize, rng: &mut RngStream) -> f64 {
    let (lo, hi) = clip(fam, v);
    rng.uniform(lo, hi)
}

fn clip(fam: &Family3, v: usize) -> (f64, f64) {
    let d = fam.f.domain(v).unwrap();
    let c = fam.center[v];
    (d.lo().max(c - fam.half_width), d.hi().min(c + fam.half_width))
}

fn sample(fam: &Family3, rng: &mut RngStream) -> Vec<f64> {
    let mut x = fam.center.clone();
    for v in fam.f.variable_indices() {
        x[v] = draw(fam, v, rng);
    }
    x
}

fn c01_sinusoid_calibration() -> Check {
    let t = Instant::now();
    let mut counts = Vec::new();
    for (arity, terms) in [(4, 16372), (8, 24404), (12, 30036)] {
        let f = make_sinusoid(&SinusoidSpec::new(11, 2, arity)).map_err(err)?;
        ensure!(f.num_variables() == 4095, "a={arity}: {} variables", f.num_variables());
        ensure!(
            f.num_terms() == terms,
            "a={arity}: {} terms, want {terms}",
            f.num_terms()
        );
        counts.push(f.num_terms().to_string());
    }
    let secs = t.elapsed().as_secs_f64();
    ensure!(secs < 10.0, "took {secs:.1} s");
    Ok(format!("4095 variables, {} terms, {secs:.2} s", counts.join("/")))
}

fn c02_decomposition_exactness() -> Check {
    let mut rng = RngStream::new(2);
    let mut worst = 0.0f64;
    let mut comps_seen = 0;
    for fam in families() {
        let f = &fam.f;
        let vars: Vec<usize> = f.variable_indices().collect();
        let positions: Vec<u32> = (0..f.num_terms() as u32).collect();
        let pos_of: HashMap<usize, usize> = f.terms().iter().enumerate().map(|(p, t)| (t.id(), p)).collect();
        let budget = Budget::unlimited();
        let mut scratch = Scratch::default();
        for i in 0..100 {
            let x = sample(&fam, &mut rng);
            let assigned = if i % 2 == 0 {
                let cfg = RdisConfig {
                    d_min: 1,
                    ..Default::default()
                };
                choose_vars(f, &vars, &positions, &cfg, &mut rng)
            } else {
                let k = 1 + rng.below(vars.len() / 2);
                let mut pick = vars.clone();
                for j in 0..k {
                    let r = j + rng.below(pick.len() - j);
                    pick.swap(j, r);
                }
                pick.truncate(k);
                pick
            };
            let free: Vec<bool> = (0..f.universe()).map(|v| !assigned.contains(&v)).collect();
            let epsilon = [0.0, 0.25, 1.0][i % 3];
            let s = simplify(f, &positions, &free, &x, epsilon, &budget).map_err(err)?;
            let unassigned: Vec<usize> = vars.iter().copied().filter(|&v| free[v]).collect();
            let comps = decompose(f, &unassigned, &s);
            comps_seen += comps.len();

            let mut covered: Vec<usize> = comps.iter().flat_map(|c| c.terms.iter().map(|t| pos_of[t])).collect();
            covered.sort_unstable();
            let mut retained: Vec<usize> = s.retained.iter().map(|&p| p as usize).collect();
            retained.sort_unstable();
            ensure!(
                covered == retained,
                "{}: components do not cover the retained terms",
                fam.name
            );

            let mut y = x.clone();
            for &v in &unassigned {
                y[v] = draw(&fam, v, &mut rng);
            }
            let whole = s.value(f, &y).map_err(err)?;
            let mut parts = s.offset;
            for c in &comps {
                let mut value = 0.0;
                for t in &c.terms {
                    value += f.terms()[pos_of[t]].eval(&y, &mut scratch).map_err(err)?;
                }
                parts += value;
            }
            let rel = (parts - whole).abs() / whole.abs().max(1.0);
            worst = worst.max(rel);
            ensure!(rel <= 1e-12, "{}: assignment {i}: {parts} vs {whole}", fam.name);
        }
    }
    Ok(format!(
        "300 assignments, {comps_seen} components, worst relative gap {worst:.1e}"
    ))
}

fn c03_simplification_bound() -> Check {
    let f = make_lj_chain(&ChainSpec::new(20)).map_err(err)?;
    let x0 = vec![0.0; f.universe()];
    let mut summary = Vec::new();
    for epsilon in [0.5, 1.0, 2.0] {
        let cfg = RdisConfig {
            epsilon,
            restarts: 2,
            max_rounds: 3,
            ..Default::default()
        };
        let budget = Budget::unlimited().with_eval_limit(1_500_000);
        let mut probe = RngStream::new(epsilon.to_bits());
        let (mut events, mut points, mut approximated, mut violations) = (0usize, 0usize, 0usize, 0usize);
        let mut worst = 0.0f64;
        let mut failure = None;
        Rdis::new(&f, cfg, &budget)
            .map_err(err)?
            .on_simplify(|e: &SimplifyEvent<'_, f64>| {
                events += 1;
                let s = e.simplified;
                approximated += s.approximated();
                let bound = s.removed.len() as f64 * epsilon;
                let mut y = e.state.to_vec();
                for _ in 0..100 {
                    for &v in e.vars.iter().filter(|&&v| e.free[v]) {
                        let d = f.domain(v).unwrap();
                        y[v] = probe.uniform(d.lo(), d.hi());
                    }
                    let (approx, exact) = match (s.value(&f, &y), s.exact_value(&f, &y)) {
                        (Ok(a), Ok(b)) => (a, b),
                        (a, b) => {
                            failure.get_or_insert(format!("evaluation failed: {a:?} {b:?}"));
                            return;
                        }
                    };
                    points += 1;
                    let gap = (approx - exact).abs();
                    if bound > 0.0 {
                        worst = worst.max(gap / bound);
                    }
                    if gap > bound {
                        violations += 1;
                    }
                }
            })
            .run(&x0, &mut RngStream::new(3))
            .map_err(err)?;
        if let Some(m) = failure {
            return Err(m);
        }
        ensure!(
            events > 0 && approximated > 0,
            "eps {epsilon}: {events} events, {approximated} approximated terms"
        );
        ensure!(
            violations == 0,
            "eps {epsilon}: {violations} of {points} points break the bound"
        );
        summary.push(format!(
            "eps {epsilon}: {events} events/{points} points, worst gap/bound {worst:.3}"
        ));
    }
    Ok(summary.join("; "))
}

fn c04_interval_soundness() -> Check {
    let mut rng = RngStream::new(4);
    let mut summary = Vec::new();
    for fam in families() {
        let f = &fam.f;
        let mut scratch = Scratch::default();
        let mut boxes = vec![Interval::point(0.0); f.universe()];
        let mut point = fam.center.clone();
        let (mut checked, mut unbounded) = (0, 0);
        for _ in 0..1000 {
            let term = &f.terms()[rng.below(f.num_terms())];
            for &v in term.scope() {
                let (a, b) = (draw(&fam, v, &mut rng), draw(&fam, v, &mut rng));
                let iv = Interval::new(a.min(b), a.max(b)).map_err(err)?;
                boxes[v] = iv;
                point[v] = rng.uniform(iv.lo(), iv.hi());
            }
            let value = term.eval(&point, &mut scratch).map_err(err)?;
            match term.bounds(|v| boxes[v], &mut scratch) {
                Ok(b) => {
                    ensure!(
                        b.lo() <= value && value <= b.hi(),
                        "{}: term {} = {value} outside [{}, {}]",
                        fam.name,
                        term.id(),
                        b.lo(),
                        b.hi()
                    );
                    if !b.is_finite() {
                        unbounded += 1;
                    }
                    checked += 1;
                }
                // no bound is claimed, so nothing can be violated
                Err(_) => unbounded += 1,
            }
        }
        summary.push(format!("{} {checked} ({unbounded} unbounded)", fam.name));
    }
    Ok(format!("zero violations: {}", summary.join(", ")))
}

fn c05_gradient_check() -> Check {
    let mut rng = RngStream::new(5);
    let h = 1e-6;
    let mut summary = Vec::new();
    for fam in families() {
        let f = &fam.f;
        let vars: Vec<usize> = f.variable_indices().collect();
        let mut worst = 0.0f64;
        let mut n = 0;
        while n < 100 {
            let x = sample(&fam, &mut rng);
            // near-collisions of the chain give energies beyond any difference quotient
            if f.evaluate(&x).map_err(err)? > 1e3 {
                continue;
            }
            n += 1;
            let g = f.gradient(&x, &vars).map_err(err)?;
            let mut y = x.clone();
            for (k, &v) in vars.iter().enumerate() {
                y[v] = x[v] + h;
                let up = f.evaluate(&y).map_err(err)?;
                y[v] = x[v] - h;
                let down = f.evaluate(&y).map_err(err)?;
                y[v] = x[v];
                let fd = (up - down) / (2.0 * h);
                let rel = (g[k] - fd).abs() / g[k].abs().max(fd.abs()).max(1.0);
                worst = worst.max(rel);
                ensure!(
                    rel <= 1e-5,
                    "{}: variable {v}: analytic {} vs difference {fd}",
                    fam.name,
                    g[k]
                );
            }
        }
        summary.push(format!("{} {worst:.1e}", fam.name));
    }
    Ok(format!(
        "100 points per family, worst relative error: {}",
        summary.join(", ")
    ))
}

/// Lattice minimum of a pairwise sinusoid by dynamic programming over the
/// tree, children before parents.
fn tree_dp(spec: &SinusoidSpec, s: usize) -> (f64, Vec<f64>) {
    let n = spec.num_variables().unwrap();
    let k = spec.branching;
    let lat: Vec<f64> = (0..s)
        .map(|i| -spec.bound + 2.0 * spec.bound * i as f64 / (s - 1) as f64)
        .collect();
    let children = |v: usize| (k * v + 1..=k * v + k).filter(move |&c| c < n);
    let mut cost = vec![vec![0.0; s]; n];
    let mut arg = vec![Vec::new(); n];
    for v in (0..n).rev() {
        arg[v] = vec![Vec::new(); s];
        for a in 0..s {
            let mut total = spec.c0 * lat[a] + spec.c1 * lat[a] * lat[a];
            for c in children(v) {
                let (b, m) = (0..s)
                    .map(|b| (b, spec.c2 * lat[a].sin() * lat[b].sin() + cost[c][b]))
                    .min_by(|p, q| p.1.total_cmp(&q.1))
                    .unwrap();
                total += m;
                arg[v][a].push(b);
            }
            cost[v][a] = total;
        }
    }
    let root = (0..s).min_by(|&a, &b| cost[0][a].total_cmp(&cost[0][b])).unwrap();
    let mut idx = vec![0; n];
    idx[0] = root;
    for v in 0..n {
        for (j, c) in children(v).enumerate() {
            idx[c] = arg[v][idx[v]][j];
        }
    }
    (cost[0][root], idx.into_iter().map(|i| lat[i]).collect())
}

fn grid_rdis(s: usize) -> RdisConfig {
    RdisConfig {
        d_min: 1,
        optimizer: OptimizerConfig {
            grid_points: s,
            ..OptimizerConfig::with_kind(OptimizerKind::Grid)
        },
        ..Default::default()
    }
}

fn c06_tree_dp_oracle() -> Check {
    let t = Instant::now();
    let spec = SinusoidSpec::new(3, 2, 2);
    let f = make_sinusoid(&spec).map_err(err)?;
    ensure!(f.num_variables() == 15 && spec.bound == 10.0, "unexpected instance");
    let (dp, point) = tree_dp(&spec, 21);
    let budget = Budget::unlimited();
    let run = Rdis::new(&f, grid_rdis(21), &budget)
        .map_err(err)?
        .run(&[0.0; 15], &mut RngStream::new(6))
        .map_err(err)?;
    ensure!(
        run.best.point == point,
        "RDIS point {:?} differs from {point:?}",
        run.best.point
    );
    let at = f.evaluate(&point).map_err(err)?;
    ensure!(
        run.best.true_value == at,
        "RDIS value {} vs {at} at the same point",
        run.best.true_value
    );
    ensure!((dp - at).abs() <= 1e-12 * dp.abs(), "DP sum {dp} vs {at}");
    let secs = t.elapsed().as_secs_f64();
    ensure!(secs < 300.0, "took {secs:.1} s");
    Ok(format!("global lattice minimum {at:.6} matched, {secs:.2} s"))
}

fn separable(n: usize) -> Objective {
    let mut s = String::new();
    for i in 0..n {
        s += &format!("var x{i} in [-10, 10]\n");
    }
    for i in 0..n {
        // targets on the 11-point lattice of [-10, 10]
        s += &format!("term (x{i} - {})^2\n", 2 * (i % 5) as i64 - 4);
    }
    parse_problem(&s).unwrap()
}

fn c07_complexity_scaling() -> Check {
    let s = 11usize;
    let mut lattice = Vec::new();
    for n in [16, 32] {
        let f = separable(n);
        let mut counts = Vec::new();
        for _ in 0..2 {
            let budget = Budget::unlimited();
            let run = Rdis::new(&f, grid_rdis(s), &budget)
                .map_err(err)?
                .run(&vec![0.0; n], &mut RngStream::new(7))
                .map_err(err)?;
            ensure!(run.best.true_value == 0.0, "n={n}: value {}", run.best.true_value);
            counts.push(run.counts.lattice_points);
        }
        ensure!(counts[0] == counts[1], "n={n}: counts differ between identical runs");
        lattice.push(counts[0]);
    }
    let growth = lattice[1] as f64 / lattice[0] as f64;
    let naive = (s as f64).powi(16);
    ensure!(
        lattice[1] <= 4 * lattice[0],
        "lattice points {} -> {}",
        lattice[0],
        lattice[1]
    );
    Ok(format!(
        "lattice points {} -> {} (x{growth:.2}); exhaustive grid grows x{naive:.3e}",
        lattice[0], lattice[1]
    ))
}

fn generated(family: &str, params: &str) -> Result<Problem, String> {
    Family::parse(family, params).and_then(|f| f.build()).map_err(err)
}

fn config(problem: &Problem, algorithm: Algorithm) -> RunConfig {
    let mut cfg = RunConfig::new(ProblemSource::File(problem.name.clone().into()), algorithm);
    cfg.timing = false;
    cfg
}

fn c08_degeneracy() -> Check {
    let mut summary = Vec::new();
    for (family, params) in [("sinusoid", "h=3,k=2,a=4"), ("ljchain", "residues=5")] {
        let p = generated(family, params)?;
        for seed in 0..5 {
            let mut outs = Vec::new();
            for alg in [Algorithm::Rdis, Algorithm::Cgd] {
                let mut cfg = config(&p, alg);
                cfg.seed = seed;
                cfg.restarts = 3;
                cfg.rdis.d_min = p.function.num_variables();
                cfg.rdis.restarts = 4;
                cfg.optimizer.restarts = 4;
                outs.push(run_problem(&p, &cfg).map_err(err)?);
            }
            let (r, c) = (&outs[0], &outs[1]);
            ensure!(
                r.best.true_value.to_bits() == c.best.true_value.to_bits() && r.best.point == c.best.point,
                "{family} seed {seed}: rdis {} vs cgd {}",
                r.best.true_value,
                c.best.true_value
            );
        }
        summary.push(family);
    }
    Ok(format!("bitwise equal on 5 seeds of {}", summary.join(" and ")))
}

fn c09_restart_probability() -> Check {
    let f = parse_problem::<f64>("var x in [-1.5, 3]\nterm (x^2 - 1)^2 + 0.3*x").map_err(err)?;
    let cfg = OptimizerConfig::default();
    let sbox = SearchBox::new(&f, &[0], &[0.0], 1.0);
    let global = |x: f64| x < 0.0;

    let grid = 10_001;
    let mut hits = 0;
    for i in 0..grid {
        let budget = Budget::unlimited();
        let mut sub = Subspace::full(&f, &budget).map_err(err)?;
        let mut x = vec![-1.5 + 4.5 * i as f64 / (grid - 1) as f64];
        multi_start(&mut sub, &mut x, &sbox, &cfg, 1, &mut RngStream::new(0)).map_err(err)?;
        hits += global(x[0]) as usize;
    }
    let ratio = hits as f64 / grid as f64;

    let runs = 200;
    let mut summary = vec![format!("basin ratio {ratio:.4}")];
    for t in [1usize, 3, 10] {
        let mut wins = 0;
        for r in 0..runs {
            let budget = Budget::unlimited();
            let mut sub = Subspace::full(&f, &budget).map_err(err)?;
            let mut rng = RngStream::new(9_000 + 1_000 * t as u64 + r as u64);
            let mut x = vec![0.0];
            sbox.sample_into(&[0], &mut rng, &mut x);
            multi_start(&mut sub, &mut x, &sbox, &cfg, t, &mut rng).map_err(err)?;
            wins += global(x[0]) as usize;
        }
        let p = 1.0 - (1.0 - ratio).powi(t as i32);
        let se = (p * (1.0 - p) / runs as f64).sqrt();
        let freq = wins as f64 / runs as f64;
        ensure!(
            (freq - p).abs() <= 3.0 * se,
            "t={t}: frequency {freq} vs predicted {p:.4} (se {se:.4})"
        );
        summary.push(format!("t={t} {freq:.3} vs {p:.3}"));
    }
    Ok(summary.join(", "))
}

fn c10_sinusoid_ordering() -> Check {
    let t = Instant::now();
    let p = generated("sinusoid", "height=7,branching=2,arity=4")?;
    let mut wins = 0;
    let mut margins = Vec::new();
    for seed in 0..10 {
        let mut best = Vec::new();
        for alg in [Algorithm::Rdis, Algorithm::Cgd, Algorithm::BcdCgd] {
            let mut cfg = config(&p, alg);
            cfg.seed = seed;
            cfg.eval_limit = Some(2_000_000);
            cfg.restarts = 1_000_000;
            cfg.rdis.d_min = 8;
            cfg.rdis.restarts = 2;
            cfg.rdis.patience = 1;
            cfg.rdis.max_rounds = 2;
            best.push(run_problem(&p, &cfg).map_err(err)?.best.true_value);
        }
        if best[0] <= best[1] && best[0] <= best[2] {
            wins += 1;
        }
        margins.push(best[1].min(best[2]) - best[0]);
    }
    let secs = t.elapsed().as_secs_f64();
    let mean = margins.iter().sum::<f64>() / margins.len() as f64;
    ensure!(wins >= 8, "RDIS best on {wins}/10 seeds");
    ensure!(secs < 1800.0, "took {secs:.0} s");
    Ok(format!(
        "RDIS best on {wins}/10 seeds, mean lead {mean:.1}, {secs:.0} s"
    ))
}

fn c11_epsilon_sweep() -> Check {
    let p = generated("ljchain", "residues=30")?;
    let mut rows = Vec::new();
    for epsilon in [0.0, 0.25, 0.5, 1.0, 2.0] {
        let mut cfg = config(&p, Algorithm::RdisNrr);
        cfg.epsilon = epsilon;
        cfg.restarts = 20;
        cfg.rdis.d_min = 8;
        cfg.rdis.patience = 1;
        cfg.rdis.max_rounds = 3;
        cfg.rdis.progress_tol = 1e-3;
        let out = run_problem(&p, &cfg).map_err(err)?;
        ensure!(out.restarts == 20, "eps {epsilon}: {} restarts ran", out.restarts);
        rows.push((epsilon, out.simplified_terms, out.counts.term_evals));
    }
    let table: Vec<String> = rows
        .iter()
        .map(|(e, s, n)| format!("eps {e}: {s} simplified, {n} evals"))
        .collect();
    for w in rows.windows(2) {
        ensure!(w[1].1 >= w[0].1, "simplified terms fall: {}", table.join("; "));
        ensure!(
            w[1].2 as f64 <= 1.05 * w[0].2 as f64,
            "evaluations rise: {}",
            table.join("; ")
        );
    }
    Ok(table.join("; "))
}

fn c12_lm_recovery() -> Check {
    let t = Instant::now();
    let p = generated(
        "bundle",
        "cameras=8,points=50,parameter_noise=0.001,observation_noise=0",
    )?;
    let mut cfg = config(&p, Algorithm::Lm);
    cfg.restarts = 1;
    let out = run_problem(&p, &cfg).map_err(err)?;
    let mut scratch = Scratch::default();
    let mut sum = 0.0;
    for term in p.function.terms() {
        let r = term.residual().ok_or("term is not a squared residual")?;
        sum += r.eval(&out.best.point, &mut scratch).map_err(err)?.powi(2);
    }
    let rms = (sum / p.function.num_terms() as f64).sqrt();
    let secs = t.elapsed().as_secs_f64();
    ensure!(rms <= 1e-6, "RMS residual {rms:e}");
    ensure!(secs < 120.0, "took {secs:.1} s");
    Ok(format!(
        "RMS residual {rms:.2e} over {} residuals, {secs:.2} s",
        p.function.num_terms()
    ))
}

/// Components of the active graph by breadth-first search from scratch.
fn bfs_view(scopes: &[Vec<usize>], var_on: &[bool], term_on: &[bool]) -> ComponentView {
    let mut var_terms = vec![Vec::new(); var_on.len()];
    for (t, s) in scopes.iter().enumerate() {
        for &v in s {
            var_terms[v].push(t);
        }
    }
    let mut seen_v = vec![false; var_on.len()];
    let mut seen_t = vec![false; term_on.len()];
    let mut view = ComponentView::default();
    for s in 0..var_on.len() {
        if !var_on[s] || seen_v[s] {
            continue;
        }
        let (mut vars, mut terms) = (Vec::new(), Vec::new());
        let mut queue = VecDeque::from([s]);
        seen_v[s] = true;
        while let Some(v) = queue.pop_front() {
            vars.push(v);
            for &t in &var_terms[v] {
                if term_on[t] && !seen_t[t] {
                    seen_t[t] = true;
                    terms.push(t);
                    for &u in &scopes[t] {
                        if var_on[u] && !seen_v[u] {
                            seen_v[u] = true;
                            queue.push_back(u);
                        }
                    }
                }
            }
        }
        vars.sort_unstable();
        terms.sort_unstable();
        view.components.push(rdis_core::structure::Component { vars, terms });
    }
    view.empty_terms = (0..term_on.len()).filter(|&t| term_on[t] && !seen_t[t]).collect();
    view
}

fn normalized(v: &ComponentView) -> ComponentView {
    let mut v = v.clone();
    for c in &mut v.components {
        c.vars.sort_unstable();
        c.terms.sort_unstable();
    }
    v.components.sort_by_key(|c| c.vars[0]);
    v
}

fn c13_dynamic_graph() -> Check {
    let mut rng = RngStream::new(13);
    let mut checks = 0;
    for seq in 0..50 {
        let nv = 4 + rng.below(20);
        let nt = 3 + rng.below(25);
        let scopes: Vec<Vec<usize>> = (0..nt)
            .map(|_| {
                let mut s: Vec<usize> = (0..1 + rng.below(3)).map(|_| rng.below(nv)).collect();
                s.sort_unstable();
                s.dedup();
                s
            })
            .collect();
        let mut g = TermVarGraph::from_scopes(nv, &scopes);
        let mut var_on = vec![true; nv];
        let mut term_on = vec![true; nt];
        let mut stack: Vec<Entity> = Vec::new();
        let set = |e: Entity, on: bool, var_on: &mut Vec<bool>, term_on: &mut Vec<bool>| match e {
            Entity::Var(i) => var_on[i] = on,
            Entity::Term(i) => term_on[i] = on,
        };
        for op in 0..200 {
            let roll = rng.below(10);
            if roll < 6 && stack.len() < nv + nt {
                let e = loop {
                    let e = if rng.below(2) == 0 {
                        Entity::Var(rng.below(nv))
                    } else {
                        Entity::Term(rng.below(nt))
                    };
                    if !stack.contains(&e) {
                        break e;
                    }
                };
                g.remove(e).map_err(err)?;
                set(e, false, &mut var_on, &mut term_on);
                stack.push(e);
                if let Some(&again) = stack.last() {
                    ensure!(g.remove(again).is_err(), "sequence {seq}: removed {again} twice");
                }
            } else if roll < 9 {
                if let Some(e) = stack.pop() {
                    if let Some(&below) = stack.last() {
                        ensure!(
                            g.restore(below).is_err(),
                            "sequence {seq}: restore out of order accepted"
                        );
                    }
                    g.restore(e).map_err(err)?;
                    set(e, true, &mut var_on, &mut term_on);
                }
            } else {
                let epoch = rng.below(stack.len() + 1);
                g.rollback_to(epoch);
                for e in stack.drain(epoch..) {
                    set(e, true, &mut var_on, &mut term_on);
                }
            }
            ensure!(g.epoch() == stack.len(), "sequence {seq} op {op}: epoch {}", g.epoch());
            let want = bfs_view(&scopes, &var_on, &term_on);
            ensure!(
                normalized(g.components()) == want,
                "sequence {seq} op {op}: components differ"
            );
            checks += 1;

            let extra_v: Vec<usize> = (0..nv).filter(|&v| var_on[v] && rng.below(4) == 0).collect();
            let extra_t: Vec<usize> = (0..nt).filter(|&t| term_on[t] && rng.below(4) == 0).collect();
            let (mut vo, mut to) = (var_on.clone(), term_on.clone());
            extra_v.iter().for_each(|&v| vo[v] = false);
            extra_t.iter().for_each(|&t| to[t] = false);
            let after = g.components_after(&extra_v, &extra_t);
            ensure!(
                normalized(&after) == bfs_view(&scopes, &vo, &to),
                "sequence {seq} op {op}: hypothetical view differs"
            );
            ensure!(
                normalized(g.components()) == want,
                "sequence {seq} op {op}: hypothetical view leaked"
            );
            checks += 1;
        }
    }
    Ok(format!("{checks} views equal to fresh BFS, zero mismatches"))
}

fn c14_partitioner_quality() -> Check {
    let mut rng = RngStream::new(14);
    let (mut total, mut optimal) = (0, 0);
    for g in 0..20 {
        let nv = 2 + rng.below(7);
        let ne = 1 + rng.below(10);
        let pins: Vec<Vec<u32>> = (0..ne)
            .map(|_| (0..2 + rng.below(3)).map(|_| rng.below(nv) as u32).collect())
            .collect();
        let h = Hypergraph::from_pins(nv, pins);
        let limit = ((1.2 * nv as f64 / 2.0).floor() as usize).max(nv.div_ceil(2));
        let cut_of = |side: &dyn Fn(usize) -> bool| {
            h.pins
                .iter()
                .filter(|p| p.iter().any(|&v| side(v as usize)) && p.iter().any(|&v| !side(v as usize)))
                .count()
        };
        let mut best = usize::MAX;
        for mask in 0u32..1 << nv {
            let ones = mask.count_ones() as usize;
            if ones <= limit && nv - ones <= limit {
                best = best.min(cut_of(&|v| mask >> v & 1 == 1));
            }
        }
        let r = partition_cutset(&h, 2, 0.2);
        ensure!(
            r.parts.len() == 2 && r.parts.iter().all(|p| p.len() <= limit),
            "graph {g}: unbalanced parts {:?}",
            r.parts
        );
        let mut all: Vec<usize> = r.parts.concat();
        all.sort_unstable();
        ensure!(
            all == (0..nv).collect::<Vec<_>>(),
            "graph {g}: parts are not a partition"
        );
        let in_first = |v: usize| r.parts[0].contains(&v);
        ensure!(
            r.cutset.len() == cut_of(&in_first),
            "graph {g}: cutset does not match the parts"
        );
        ensure!(
            r.cutset.len() <= 2 * best,
            "graph {g}: cut {} vs optimum {best}",
            r.cutset.len()
        );
        total += r.cutset.len();
        optimal += best;
    }
    Ok(format!("total cut {total} vs exhaustive {optimal} over 20 hypergraphs"))
}

/// Bypasses the test harness's capture of `println!`.
fn report(line: String) {
    let _ = writeln!(std::io::stderr(), "{line}");
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, CheckFn); 14] = [
        ("sinusoid calibration", c01_sinusoid_calibration),
        ("decomposition exactness", c02_decomposition_exactness),
        ("simplification bound", c03_simplification_bound),
        ("interval soundness", c04_interval_soundness),
        ("gradient check", c05_gradient_check),
        ("grid RDIS equals tree DP", c06_tree_dp_oracle),
        ("complexity scaling", c07_complexity_scaling),
        ("degeneracy equivalence", c08_degeneracy),
        ("restart probability", c09_restart_probability),
        ("sinusoid ordering at equal budget", c10_sinusoid_ordering),
        ("epsilon sweep trend", c11_epsilon_sweep),
        ("LM recovery", c12_lm_recovery),
        ("dynamic graph oracle", c13_dynamic_graph),
        ("partitioner quality", c14_partitioner_quality),
    ];
    // RDIS_ACCEPTANCE=3,7 runs only the listed criteria
    let only: Option<Vec<usize>> = std::env::var("RDIS_ACCEPTANCE")
        .ok()
        .map(|s| s.split(',').filter_map(|n| n.trim().parse().ok()).collect());
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        if only.as_ref().is_some_and(|o| !o.contains(&(i + 1))) {
            continue;
        }
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or(p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => report(format!("PASS {:>2} {name}: {detail} [{secs:.1} s]", i + 1)),
            Err(why) => {
                report(format!("FAIL {:>2} {name}: {why} [{secs:.1} s]", i + 1));
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
