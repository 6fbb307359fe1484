use super::*;
use crate::expr::{parse_problem, ObjectiveFunction};
use crate::optim::{multi_start, Budget, OptimizerConfig, OptimizerKind, RngStream, SearchBox, Subspace};
use crate::problems::{make_bundle, make_lj_chain, make_sinusoid, BundleSpec, ChainSpec, SinusoidSpec};

fn separable(n: usize) -> ObjectiveFunction<f64> {
    let mut s = String::new();
    for i in 1..=n {
        s += &format!("var x{i} in [-10,10]\n");
    }
    for i in 1..=n {
        s += &format!("term (x{i} - {i})^2\n");
    }
    parse_problem(&s).unwrap()
}

fn grid(s: usize) -> RdisConfig {
    RdisConfig {
        d_min: 1,
        optimizer: OptimizerConfig {
            grid_points: s,
            ..OptimizerConfig::with_kind(OptimizerKind::Grid)
        },
        ..Default::default()
    }
}

#[test]
fn separable_quadratic_is_solved_per_variable() {
    let f = separable(6);
    let x0 = vec![0.0; 6];
    let run = rdis(&f, &x0, &grid(21), &mut RngStream::new(1)).unwrap();
    assert_eq!(run.best.true_value, 0.0);
    assert_eq!(run.best.point, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    assert_eq!(run.totals.max_components, 6);
    assert_eq!(run.totals.max_base_vars, 1);

    let cgd = RdisConfig {
        optimizer: OptimizerConfig {
            grad_tol: 1e-12,
            progress_tol: 0.0,
            ..Default::default()
        },
        ..Default::default()
    };
    let run = rdis(&f, &x0, &cgd, &mut RngStream::new(1)).unwrap();
    assert!(run.best.true_value < 1e-16, "{}", run.best.true_value);
    for (i, v) in run.best.point.iter().enumerate() {
        assert!((v - (i + 1) as f64).abs() < 1e-8);
    }
}

/// Lattice minimum of a sinusoid with pairwise terms by dynamic programming
/// over the tree, children before parents.
fn tree_dp(spec: &SinusoidSpec, s: usize) -> (f64, Vec<f64>) {
    let n = spec.num_variables().unwrap();
    let k = spec.branching;
    let lat: Vec<f64> = (0..s)
        .map(|i| -spec.bound + 2.0 * spec.bound * i as f64 / (s - 1) as f64)
        .collect();
    let unary = |v: f64| spec.c0 * v + spec.c1 * v * v;
    let mut cost = vec![vec![0.0; s]; n];
    let mut choice: Vec<Vec<Vec<usize>>> = vec![Vec::new(); n];
    for v in (0..n).rev() {
        let children: Vec<usize> = (k * v + 1..=k * v + k).filter(|&c| c < n).collect();
        choice[v] = vec![vec![0; children.len()]; s];
        for a in 0..s {
            let mut total = unary(lat[a]);
            for (j, &c) in children.iter().enumerate() {
                let (b, m) = (0..s)
                    .map(|b| (b, spec.c2 * lat[a].sin() * lat[b].sin() + cost[c][b]))
                    .min_by(|p, q| p.1.partial_cmp(&q.1).unwrap())
                    .unwrap();
                total += m;
                choice[v][a][j] = b;
            }
            cost[v][a] = total;
        }
    }
    let (root, best) = (0..s)
        .map(|a| (a, cost[0][a]))
        .min_by(|p, q| p.1.partial_cmp(&q.1).unwrap())
        .unwrap();
    let mut idx = vec![0usize; n];
    idx[0] = root;
    for v in 0..n {
        for (j, c) in (k * v + 1..=k * v + k).filter(|&c| c < n).enumerate() {
            idx[c] = choice[v][idx[v]][j];
        }
    }
    (best, idx.into_iter().map(|i| lat[i]).collect())
}

#[test]
fn grid_rdis_matches_tree_dp() {
    let spec = SinusoidSpec::new(3, 2, 2);
    let f = make_sinusoid(&spec).unwrap();
    assert_eq!(f.num_variables(), 15);
    let (dp, point) = tree_dp(&spec, 21);
    let run = rdis(&f, &[0.0; 15], &grid(21), &mut RngStream::new(3)).unwrap();
    assert_eq!(run.best.point, point);
    assert_eq!(run.best.true_value, f.evaluate(&point).unwrap());
    assert!((run.best.true_value - dp).abs() <= 1e-12 * dp.abs());
}

fn degenerate_matches_multistart(f: &ObjectiveFunction<f64>, x0: &[f64], seed: u64) {
    let n = f.num_variables();
    let cfg = RdisConfig {
        d_min: n,
        restarts: 4,
        ..Default::default()
    };
    let run = rdis(f, x0, &cfg, &mut RngStream::new(seed)).unwrap();

    let b = Budget::unlimited();
    let mut sub = Subspace::full(f, &b).unwrap();
    let vars: Vec<usize> = f.variable_indices().collect();
    let sbox = SearchBox::new(f, &vars, x0, cfg.optimizer.sample_half_width);
    let mut x = x0.to_vec();
    let r = multi_start(&mut sub, &mut x, &sbox, &cfg.optimizer, 4, &mut RngStream::new(seed)).unwrap();
    assert_eq!(run.best.value.to_bits(), r.value.to_bits());
    assert_eq!(run.best.point, x);
    assert_eq!(run.stats.nodes(), 1);
    assert!(run.stats.base_case);
    assert_eq!(run.stats.iterations, 4);
}

#[test]
fn degenerate_config_is_plain_multistart() {
    let f = make_sinusoid(&SinusoidSpec::new(2, 2, 2)).unwrap();
    degenerate_matches_multistart(&f, &[1.0; 7], 9);
    let c = make_lj_chain(&ChainSpec::new(3)).unwrap();
    degenerate_matches_multistart(&c, &vec![0.3; c.num_variables()], 2);
}

#[test]
fn chain_cut_is_the_middle_variable() {
    let f = parse_problem::<f64>(
        "var a in [-1,1]\nvar b in [-1,1]\nvar c in [-1,1]\nvar d in [-1,1]\nterm a*b\nterm b*c\nterm c*d\nterm a^2\nterm d^2",
    )
    .unwrap();
    let cfg = RdisConfig {
        d_min: 1,
        ..Default::default()
    };
    let x_c = choose_vars(&f, &[0, 1, 2, 3], &[0, 1, 2, 3, 4], &cfg, &mut RngStream::new(0));
    assert_eq!(x_c.len(), 1);
    assert!(x_c == [1] || x_c == [2], "{x_c:?}");
    let free: Vec<bool> = (0..4).map(|v| !x_c.contains(&v)).collect();
    let s = simplify(&f, &[0, 1, 2, 3, 4], &free, &[0.1; 4], 0.0, &Budget::unlimited()).unwrap();
    let unassigned: Vec<usize> = (0..4).filter(|v| free[*v]).collect();
    assert_eq!(decompose(&f, &unassigned, &s).len(), 2);

    let small = RdisConfig {
        d_min: 4,
        ..cfg.clone()
    };
    assert_eq!(
        choose_vars(&f, &[0, 1, 2, 3], &[0, 1, 2, 3, 4], &small, &mut RngStream::new(0)),
        vec![0, 1, 2, 3]
    );

    let rnd = RdisConfig {
        selection: Selection::Random,
        ..cfg
    };
    for seed in 0..10 {
        let pick = choose_vars(&f, &[0, 1, 2, 3], &[0, 1, 2, 3, 4], &rnd, &mut RngStream::new(seed));
        assert_eq!(pick.len(), 1);
    }
}

#[test]
fn assigning_the_shared_variable_splits() {
    let f =
        parse_problem::<f64>("var x in [-1,1]\nvar y in [-1,1]\nvar z in [-1,1]\nterm x*y + x\nterm sin(y)*z").unwrap();
    let s = simplify(
        &f,
        &[0, 1],
        &[true, false, true],
        &[0.0, 0.5, 0.0],
        0.0,
        &Budget::unlimited(),
    )
    .unwrap();
    assert_eq!(decompose(&f, &[0, 2], &s).len(), 2);
    // nothing assigned, nothing simplified: a single component
    let s = simplify(&f, &[0, 1], &[true; 3], &[0.0; 3], 0.0, &Budget::unlimited()).unwrap();
    assert_eq!(decompose(&f, &[0, 1, 2], &s).len(), 1);
}

#[test]
fn far_lennard_jones_pair_is_simplified() {
    let f = parse_problem::<f64>("var d in [3,4]\nterm (d^2)^(-6) - (d^2)^(-3)").unwrap();
    let s = simplify(&f, &[0], &[true], &[3.5], 0.01, &Budget::unlimited()).unwrap();
    assert!(s.retained.is_empty());
    let b = s.removed[0].bounds;
    assert!(b.width() < 0.02);
    assert!(b.contains(-(3.0f64).powi(-6) + (3.0f64).powi(-12)));
}

#[test]
fn camera_terms_follow_their_points() {
    let b = make_bundle(&BundleSpec::new(3, 10), &mut RngStream::new(4)).unwrap();
    let f = &b.function;
    let cams = 27;
    let free: Vec<bool> = (0..f.universe()).map(|v| v >= cams).collect();
    let all: Vec<u32> = (0..f.num_terms() as u32).collect();
    let s = simplify(f, &all, &free, &b.start, 0.0, &Budget::unlimited()).unwrap();
    let points: Vec<usize> = (cams..f.universe()).collect();
    let comps = decompose(f, &points, &s);
    assert_eq!(comps.len(), 10);
    for c in &comps {
        let p = (c.vars[0] - cams) / 3;
        let expect: Vec<usize> = b
            .observations
            .iter()
            .enumerate()
            .filter(|(_, o)| o.point == p)
            .flat_map(|(i, _)| [2 * i, 2 * i + 1])
            .collect();
        let mut got = c.terms.clone();
        got.sort_unstable();
        assert_eq!(got, expect);
    }
}

/// Runs RDIS on `f` checking every simplification and decomposition.
fn check_invariants(f: &ObjectiveFunction<f64>, x0: &[f64], epsilon: f64, seed: u64) {
    let cfg = RdisConfig {
        epsilon,
        restarts: 2,
        max_rounds: 4,
        record_tree: true,
        ..Default::default()
    };
    let budget = Budget::unlimited().with_eval_limit(200_000);
    let mut events = 0;
    let mut trace = Vec::new();
    let mut probe = RngStream::new(seed ^ 0xabc);
    let run = Rdis::new(f, cfg, &budget)
        .unwrap()
        .on_improvement(|r: &BestRecord<f64>| trace.push(r.true_value))
        .on_simplify(|e: &SimplifyEvent<'_, f64>| {
            events += 1;
            let s = e.simplified;
            let unassigned: Vec<usize> = e.vars.iter().copied().filter(|&v| e.free[v]).collect();
            let comps = decompose(f, &unassigned, s);
            let mut x = e.state.to_vec();
            for _ in 0..5 {
                for &v in &unassigned {
                    let d = f.domain(v).unwrap();
                    x[v] = probe.uniform(d.lo().max(-5.0), d.hi().min(5.0));
                }
                let simplified = s.value(f, &x).unwrap();
                let mut parts = s.offset;
                for c in &comps {
                    for &t in &c.terms {
                        parts += f.terms()[t].eval(&x, &mut Default::default()).unwrap();
                    }
                }
                assert!((parts - simplified).abs() <= 1e-12 * simplified.abs().max(1.0));
                let exact = s.exact_value(f, &x).unwrap();
                assert!((exact - simplified).abs() <= s.removed.len() as f64 * epsilon + 1e-12 * exact.abs().max(1.0));
            }
        })
        .run(x0, &mut RngStream::new(seed))
        .unwrap();
    assert!(events > 0);
    assert!(trace.windows(2).all(|w| w[1] < w[0]));
    assert_eq!(*trace.last().unwrap(), run.best.true_value);
    let n = f.num_variables();
    run.stats.walk(&mut |s| {
        assert!(s.depth <= n);
        assert!(s.children.iter().all(|c| c.vars < s.vars || s.cut == 0));
    });
    if epsilon == 0.0 {
        let tol = 1e-12 * run.best.true_value.abs().max(1.0);
        assert!((run.best.value - run.best.true_value).abs() <= tol);
    }
}

#[test]
fn invariants_hold_on_generated_problems() {
    let sin = make_sinusoid(&SinusoidSpec::new(4, 2, 4)).unwrap();
    let chain = make_lj_chain(&ChainSpec::new(6)).unwrap();
    for (seed, eps) in [(1, 0.0), (2, 0.5), (3, 2.0)] {
        check_invariants(&sin, &vec![0.5; 31], eps, seed);
        check_invariants(&chain, &vec![0.2; chain.num_variables()], eps, seed);
    }
}

#[test]
fn lattice_work_grows_linearly_on_separable_quadratics() {
    let mut lattice = Vec::new();
    let mut calls = Vec::new();
    for n in [8, 16, 32] {
        let f = separable(n);
        let b = Budget::unlimited();
        let run = Rdis::new(&f, grid(11), &b)
            .unwrap()
            .run(&vec![0.0; n], &mut RngStream::new(0))
            .unwrap();
        let t = &run.totals;
        let (d, k) = (t.max_base_vars as f64, t.max_components as f64);
        let bound = (n as f64 / d) * 11f64.powf(d * (n as f64 / d).ln() / k.ln());
        assert!(run.counts.lattice_points as f64 <= bound);
        lattice.push(run.counts.lattice_points);
        calls.push(t.optimizer_calls);
    }
    assert!(lattice[2] <= 4 * lattice[1]);
    for w in calls.windows(2) {
        assert!(w[1] as f64 <= 2.5 * w[0] as f64);
    }
}

#[test]
fn runs_are_deterministic() {
    let f = make_sinusoid(&SinusoidSpec::new(3, 2, 4)).unwrap();
    let a = rdis(&f, &[1.0; 15], &RdisConfig::default(), &mut RngStream::new(5)).unwrap();
    let b = rdis(&f, &[1.0; 15], &RdisConfig::default(), &mut RngStream::new(5)).unwrap();
    assert_eq!(a.best, b.best);
    assert_eq!(a.counts, b.counts);
}
