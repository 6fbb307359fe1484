use std::cmp::Reverse;
use std::collections::HashMap;

use rand::seq::index::sample;

use crate::error::{Error, Result};
use crate::expr::{ObjectiveFunction, Scratch};
use crate::optim::{
    cgd_descent, lm_minimize, multi_start, Budget, Counts, Lattice, OptimizerConfig, OptimizerKind, RngStream,
    SearchBox, Subspace,
};
use crate::scalar::Scalar;
use crate::structure::{build_hypergraph, partition_cutset, Component, ComponentView, Entity, TermVarGraph};

use super::config::{RdisConfig, Selection};
use super::simplify::{simplify_with, SimplifiedFunction};
use super::stats::{RecursionStats, RunTotals};

/// Cached cutsets are dropped once their keys hold this many entries.
const CACHE_LIMIT: usize = 4_000_000;

/// Best state found so far.
#[derive(Clone, Debug, PartialEq)]
pub struct BestRecord<T> {
    /// Value of the simplified function the recursion minimized.
    pub value: T,
    /// Value of the original function at `point`.
    pub true_value: T,
    pub point: Vec<T>,
}

#[derive(Clone, Debug)]
pub struct RdisRun<T> {
    pub best: BestRecord<T>,
    /// Root node; descendants are present when the tree was recorded.
    pub stats: RecursionStats,
    pub totals: RunTotals,
    pub counts: Counts,
}

/// What one simplification step saw, passed to the simplify hook.
pub struct SimplifyEvent<'e, T> {
    pub depth: usize,
    /// Variables and term positions of the node.
    pub vars: &'e [usize],
    pub terms: &'e [u32],
    /// The block just assigned.
    pub assigned: &'e [usize],
    /// Variables ranging over their domains; the rest are fixed at `state`.
    pub free: &'e [bool],
    pub state: &'e [T],
    pub simplified: &'e SimplifiedFunction<T>,
}

type Observer<'a, T> = Box<dyn FnMut(&BestRecord<T>) + 'a>;
type SimplifyHook<'a, T> = Box<dyn FnMut(&SimplifyEvent<'_, T>) + 'a>;

/// A configured solver over one function and one evaluation budget.
pub struct Rdis<'a, T: Scalar> {
    f: &'a ObjectiveFunction<T>,
    cfg: RdisConfig,
    budget: &'a Budget,
    observer: Option<Observer<'a, T>>,
    hook: Option<SimplifyHook<'a, T>>,
}

impl<'a, T: Scalar> Rdis<'a, T> {
    pub fn new(f: &'a ObjectiveFunction<T>, cfg: RdisConfig, budget: &'a Budget) -> Result<Self> {
        cfg.validate()?;
        Ok(Rdis {
            f,
            cfg,
            budget,
            observer: None,
            hook: None,
        })
    }

    /// Called whenever the top level finds a state with a lower true value.
    pub fn on_improvement(mut self, observer: impl FnMut(&BestRecord<T>) + 'a) -> Self {
        self.observer = Some(Box::new(observer));
        self
    }

    /// Called after every simplification.
    pub fn on_simplify(mut self, hook: impl FnMut(&SimplifyEvent<'_, T>) + 'a) -> Self {
        self.hook = Some(Box::new(hook));
        self
    }

    pub fn config(&self) -> &RdisConfig {
        &self.cfg
    }

    pub fn run(&mut self, x0: &[T], rng: &mut RngStream) -> Result<RdisRun<T>> {
        let f = self.f;
        if x0.len() < f.universe() {
            return Err(Error::MissingValue(x0.len()));
        }
        for v in f.variables() {
            if !v.domain.contains(x0[v.index]) {
                return Err(Error::OutOfDomain {
                    index: v.index,
                    value: x0[v.index].as_f64(),
                });
            }
        }
        let max_id = f.terms().iter().map(|t| t.id() + 1).max().unwrap_or(0);
        let mut pos_of = vec![u32::MAX; max_id];
        for (p, t) in f.terms().iter().enumerate() {
            pos_of[t.id()] = p as u32;
        }
        let mut engine = Engine {
            f,
            cfg: &self.cfg,
            budget: self.budget,
            observer: &mut self.observer,
            hook: &mut self.hook,
            graph: TermVarGraph::from_function(f),
            pos_of,
            free: vec![true; f.universe()],
            x: x0[..f.universe()].to_vec(),
            scratch: Scratch::default(),
            mark: vec![0; f.num_terms()],
            stamp: 0,
            cache: HashMap::new(),
            cached: 0,
            totals: RunTotals::default(),
            best: None,
        };
        let vars: Vec<usize> = f.variable_indices().collect();
        let terms: Vec<u32> = (0..f.num_terms() as u32).collect();
        let mut stats = RecursionStats::default();
        let value = engine.solve(&vars, &terms, 0, rng, &mut stats)?;
        if engine.best.is_none() {
            engine.report(value);
        }
        let best = engine.best.take().ok_or(Error::NonFinite)?;
        Ok(RdisRun {
            best,
            stats,
            totals: engine.totals,
            counts: self.budget.counts(),
        })
    }
}

/// Runs RDIS from `x0` without an evaluation limit.
pub fn rdis<T: Scalar>(
    f: &ObjectiveFunction<T>,
    x0: &[T],
    cfg: &RdisConfig,
    rng: &mut RngStream,
) -> Result<RdisRun<T>> {
    let budget = Budget::unlimited();
    let run = Rdis::new(f, cfg.clone(), &budget)?.run(x0, rng);
    run
}

/// The block `x_C` RDIS assigns at a node with the given variables and term
/// positions. Returns every variable when the node is small enough for the
/// subspace optimizer or no proper cut exists.
pub fn choose_vars<T: Scalar>(
    f: &ObjectiveFunction<T>,
    vars: &[usize],
    terms: &[u32],
    cfg: &RdisConfig,
    rng: &mut RngStream,
) -> Vec<usize> {
    if vars.len() <= cfg.d_min {
        return vars.to_vec();
    }
    let cut = cutset(f, vars, terms, cfg);
    if cut.is_empty() || cut.len() >= vars.len() {
        return vars.to_vec();
    }
    match cfg.selection {
        Selection::Partition => cut,
        Selection::Random => random_subset(vars, cut.len(), rng),
    }
}

fn cutset<T: Scalar>(f: &ObjectiveFunction<T>, vars: &[usize], terms: &[u32], cfg: &RdisConfig) -> Vec<usize> {
    let ids: Vec<usize> = terms.iter().map(|&p| f.terms()[p as usize].id()).collect();
    let h = build_hypergraph(f, vars, &ids);
    let mut cut = partition_cutset(&h, cfg.parts, cfg.balance).cutset;
    cut.sort_unstable();
    cut
}

fn random_subset(vars: &[usize], k: usize, rng: &mut RngStream) -> Vec<usize> {
    let mut pick: Vec<usize> = sample(rng.inner(), vars.len(), k)
        .into_iter()
        .map(|i| vars[i])
        .collect();
    pick.sort_unstable();
    pick
}

/// Independent components of a simplified function once the variables
/// outside `unassigned` are fixed. Components hold term ids.
pub fn decompose<T: Scalar>(
    f: &ObjectiveFunction<T>,
    unassigned: &[usize],
    simplified: &SimplifiedFunction<T>,
) -> Vec<Component> {
    let ids: Vec<usize> = simplified
        .retained
        .iter()
        .map(|&p| f.terms()[p as usize].id())
        .collect();
    let mut graph = TermVarGraph::from_subsets(f, unassigned, &ids);
    graph.components().components.clone()
}

enum Choice {
    Base,
    Cut(Vec<usize>),
}

struct Engine<'r, 'a, T: Scalar> {
    f: &'a ObjectiveFunction<T>,
    cfg: &'r RdisConfig,
    budget: &'a Budget,
    observer: &'r mut Option<Observer<'a, T>>,
    hook: &'r mut Option<SimplifyHook<'a, T>>,
    graph: TermVarGraph,
    pos_of: Vec<u32>,
    /// Variables not assigned by this node or any ancestor.
    free: Vec<bool>,
    /// Working state shared by all nodes.
    x: Vec<T>,
    scratch: Scratch<T>,
    mark: Vec<u32>,
    stamp: u32,
    cache: HashMap<(Vec<usize>, Vec<u32>), Vec<usize>>,
    cached: usize,
    totals: RunTotals,
    best: Option<BestRecord<T>>,
}

impl<T: Scalar> Engine<'_, '_, T> {
    /// Minimizes the node over `vars` with the terms at positions `terms`,
    /// leaving its best state in `x`.
    fn solve(
        &mut self,
        vars: &[usize],
        terms: &[u32],
        depth: usize,
        rng: &mut RngStream,
        st: &mut RecursionStats,
    ) -> Result<T> {
        let evals = self.budget.term_evals();
        let lattice = self.budget.counts().lattice_points;
        st.depth = depth;
        st.vars = vars.len();
        st.terms = terms.len();
        self.totals.nodes += 1;
        self.totals.max_depth = self.totals.max_depth.max(depth);
        let out = if self.budget.exhausted() {
            self.current_value(terms, depth)
        } else {
            match self.choose(vars, terms, depth, rng) {
                Choice::Base => self.base_case(vars, terms, depth, rng, st),
                Choice::Cut(xc) => {
                    st.cut = xc.len();
                    for &v in &xc {
                        self.free[v] = false;
                    }
                    let out = self.rounds(vars, terms, &xc, depth, rng, st);
                    for &v in &xc {
                        self.free[v] = true;
                    }
                    out
                }
            }
        };
        st.term_evals = self.budget.term_evals() - evals;
        st.lattice_points = self.budget.counts().lattice_points - lattice;
        out
    }

    fn choose(&mut self, vars: &[usize], terms: &[u32], depth: usize, rng: &mut RngStream) -> Choice {
        if vars.len() <= self.cfg.d_min {
            return Choice::Base;
        }
        // below the root every node is connected by construction
        if depth == 0 && self.graph.components().components.len() > 1 {
            return Choice::Cut(Vec::new());
        }
        let cut = if self.cfg.cache_partitions {
            let key = (vars.to_vec(), terms.to_vec());
            match self.cache.get(&key) {
                Some(c) => c.clone(),
                None => {
                    let c = cutset(self.f, vars, terms, self.cfg);
                    self.cached += key.0.len() + key.1.len() + c.len();
                    if self.cached > CACHE_LIMIT {
                        self.cache.clear();
                        self.cached = 0;
                    }
                    self.cache.insert(key, c.clone());
                    c
                }
            }
        } else {
            cutset(self.f, vars, terms, self.cfg)
        };
        if cut.is_empty() || cut.len() >= vars.len() {
            return Choice::Base;
        }
        match self.cfg.selection {
            Selection::Partition => Choice::Cut(cut),
            Selection::Random => Choice::Cut(random_subset(vars, cut.len(), rng)),
        }
    }

    fn base_case(
        &mut self,
        vars: &[usize],
        terms: &[u32],
        depth: usize,
        rng: &mut RngStream,
        st: &mut RecursionStats,
    ) -> Result<T> {
        let (f, cfg) = (self.f, self.cfg);
        st.base_case = true;
        st.cut = vars.len();
        self.totals.base_cases += 1;
        self.totals.max_base_vars = self.totals.max_base_vars.max(vars.len());
        let mut sub = Subspace::new(f, vars, terms, &self.x, self.budget)?;
        if depth == 0 {
            sub.shift(f.offset());
        }
        let sbox = SearchBox::new(f, vars, &self.x, cfg.optimizer.sample_half_width);
        let r = multi_start(&mut sub, &mut self.x, &sbox, &cfg.optimizer, cfg.restarts, rng)?;
        st.iterations = r.restarts_used;
        st.optimizer_calls = r.restarts_used;
        self.totals.iterations += r.restarts_used;
        self.totals.optimizer_calls += r.restarts_used;
        if depth == 0 {
            self.report(r.value);
        }
        Ok(r.value)
    }

    /// The value loop of a node that assigns `xc` (sorted, possibly empty).
    fn rounds(
        &mut self,
        vars: &[usize],
        terms: &[u32],
        xc: &[usize],
        depth: usize,
        rng: &mut RngStream,
        st: &mut RecursionStats,
    ) -> Result<T> {
        let (f, cfg, budget) = (self.f, self.cfg, self.budget);
        let xu: Vec<usize> = vars.iter().copied().filter(|v| xc.binary_search(v).is_err()).collect();
        let touching = self.touching(terms, xc);
        let sbox = SearchBox::new(f, xc, &self.x, cfg.optimizer.sample_half_width);
        let grid = cfg.optimizer.kind == OptimizerKind::Grid && !xc.is_empty();
        let mut lattice = if grid {
            Some(Lattice::new(&sbox.domain, xc, cfg.optimizer.grid_points)?)
        } else {
            None
        };
        let mut point = vec![T::zero(); xc.len()];
        let inner = OptimizerConfig {
            max_iters: cfg.optimizer.early_stop,
            ..cfg.optimizer.clone()
        };

        let mut best_state: Vec<T> = vars.iter().map(|&v| self.x[v]).collect();
        let mut best: Option<T> = None;
        let mut last_err = None;
        let (mut starts, mut stale, mut restart) = (1, 0, false);
        let mut reference = None;
        for round in 0.. {
            if round > 0 && budget.exhausted() {
                break;
            }
            if let Some(l) = lattice.as_mut() {
                if !l.next_into(&mut point) {
                    break;
                }
            } else if round >= cfg.max_rounds {
                break;
            }
            for (k, &v) in vars.iter().enumerate() {
                self.x[v] = best_state[k];
            }

            if grid {
                for (k, &v) in xc.iter().enumerate() {
                    self.x[v] = point[k];
                }
                budget.add_lattice(1);
            } else if !xc.is_empty() {
                if restart {
                    if starts >= cfg.restarts {
                        break;
                    }
                    starts += 1;
                    st.restarts += 1;
                    sbox.sample_into(xc, rng, &mut self.x);
                }
                st.optimizer_calls += 1;
                self.totals.optimizer_calls += 1;
                let mut sub = Subspace::new(f, xc, &touching, &self.x, budget)?;
                let r = match cfg.optimizer.kind {
                    OptimizerKind::Lm => lm_minimize(&mut sub, &mut self.x, &inner),
                    _ => cgd_descent(&mut sub, &mut self.x, &inner, inner.max_iters, reference),
                };
                match r {
                    Ok(r) => reference = r.start_grad_norm,
                    Err(e) => {
                        last_err = Some(e);
                        stale += 1;
                        restart = true;
                        if stale >= cfg.patience {
                            break;
                        }
                        continue;
                    }
                }
            }

            st.iterations += 1;
            self.totals.iterations += 1;
            let value = match self.evaluate_round(vars, terms, xc, &xu, depth, rng, st, &best_state) {
                Ok(v) => v,
                Err(e) => {
                    last_err = Some(e);
                    if grid {
                        continue;
                    }
                    stale += 1;
                    restart = true;
                    if stale >= cfg.patience || xc.is_empty() {
                        break;
                    }
                    continue;
                }
            };
            if depth == 0 {
                self.report(value);
            }
            let improved = best.is_none_or(|b| value < b);
            let progress = best.is_none_or(|b| value < b - T::of(cfg.progress_tol) * b.abs());
            if improved {
                best = Some(value);
                for (k, &v) in vars.iter().enumerate() {
                    best_state[k] = self.x[v];
                }
            }
            if grid {
                continue;
            }
            if xc.is_empty() {
                // nothing to choose: one pass is the whole loop
                break;
            }
            if progress {
                stale = 0;
                restart = false;
            } else {
                stale += 1;
                restart = true;
                if stale >= cfg.patience {
                    break;
                }
            }
        }
        for (k, &v) in vars.iter().enumerate() {
            self.x[v] = best_state[k];
        }
        match (best, last_err) {
            (Some(b), _) => Ok(b),
            (None, Some(e)) => Err(e),
            (None, None) => self.current_value(terms, depth),
        }
    }

    /// Simplifies, decomposes and recurses for the current assignment of
    /// `xc`, returning the simplified node value.
    #[allow(clippy::too_many_arguments)]
    fn evaluate_round(
        &mut self,
        vars: &[usize],
        terms: &[u32],
        xc: &[usize],
        xu: &[usize],
        depth: usize,
        rng: &mut RngStream,
        st: &mut RecursionStats,
        best_state: &[T],
    ) -> Result<T> {
        let f = self.f;
        let s = simplify_with(
            f,
            terms,
            &self.free,
            &self.x,
            self.cfg.epsilon,
            self.budget,
            &mut self.scratch,
        )?;
        st.simplify_calls += 1;
        st.removed_terms += s.removed.len();
        self.totals.simplify_calls += 1;
        self.totals.removed_terms += s.removed.len();
        st.approximated_terms += s.approximated();
        self.totals.approximated_terms += s.approximated();
        if let Some(hook) = self.hook.as_mut() {
            hook(&SimplifyEvent {
                depth,
                vars,
                terms,
                assigned: xc,
                free: &self.free,
                state: &self.x,
                simplified: &s,
            });
        }

        let epoch = self.graph.epoch();
        for &v in xc {
            self.graph.remove(Entity::Var(v))?;
        }
        for r in &s.removed {
            self.graph.remove(Entity::Term(r.id))?;
        }
        let ids: Vec<usize> = s.retained.iter().map(|&p| f.terms()[p as usize].id()).collect();
        let view = self.graph.components_from(xu, &ids);
        let out = self.recurse(view, depth, rng, st, vars, best_state);
        self.graph.rollback_to(epoch);
        let base = if depth == 0 { f.offset() } else { T::zero() };
        Ok(base + s.offset + out?)
    }

    fn recurse(
        &mut self,
        view: ComponentView,
        depth: usize,
        rng: &mut RngStream,
        st: &mut RecursionStats,
        vars: &[usize],
        best_state: &[T],
    ) -> Result<T> {
        debug_assert!(
            view.empty_terms.is_empty(),
            "terms without free variables are simplified away"
        );
        let k = view.components.len();
        st.max_components = st.max_components.max(k);
        st.total_components += k;
        self.totals.max_components = self.totals.max_components.max(k);
        let mut rngs: Vec<RngStream> = (0..k).map(|_| rng.split()).collect();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by_key(|&i| Reverse(view.components[i].size()));
        let mut values = vec![T::zero(); k];
        for i in order {
            let c = &view.components[i];
            let mut cv = c.vars.clone();
            cv.sort_unstable();
            let mut ct: Vec<u32> = c.terms.iter().map(|&id| self.pos_of[id]).collect();
            ct.sort_unstable();
            let mut child = RecursionStats::default();
            values[i] = match self.solve(&cv, &ct, depth + 1, &mut rngs[i], &mut child) {
                Ok(v) => v,
                Err(_) => {
                    // the component keeps its inherited state
                    for &v in &cv {
                        let at = vars.binary_search(&v).expect("component variables belong to the node");
                        self.x[v] = best_state[at];
                    }
                    self.current_value(&ct, depth + 1)?
                }
            };
            if self.cfg.record_tree {
                st.children.push(child);
            }
        }
        Ok(values.into_iter().fold(T::zero(), |a, v| a + v))
    }

    /// Node value at the current state, without simplification.
    fn current_value(&mut self, terms: &[u32], depth: usize) -> Result<T> {
        let mut acc = if depth == 0 { self.f.offset() } else { T::zero() };
        for &p in terms {
            acc += self.f.terms()[p as usize].eval(&self.x, &mut self.scratch)?;
        }
        self.budget.add_value(terms.len());
        if !acc.is_finite() {
            return Err(Error::NonFinite);
        }
        if depth == 0 {
            self.report(acc);
        }
        Ok(acc)
    }

    /// Positions among `terms` of the terms that use a variable of `xc`.
    fn touching(&mut self, terms: &[u32], xc: &[usize]) -> Vec<u32> {
        self.stamp = self.stamp.wrapping_add(1);
        if self.stamp == 0 {
            self.mark.iter_mut().for_each(|m| *m = 0);
            self.stamp = 1;
        }
        for &p in terms {
            self.mark[p as usize] = self.stamp;
        }
        let mut out = Vec::new();
        for &v in xc {
            for &p in self.f.terms_touching(v) {
                if self.mark[p as usize] == self.stamp {
                    self.mark[p as usize] = 0;
                    out.push(p);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Records the current state if its true value beats the best so far.
    fn report(&mut self, value: T) {
        let Ok(true_value) = self.f.evaluate_with(&self.x, &mut self.scratch) else {
            return;
        };
        self.budget.add_value(self.f.num_terms());
        if self.best.as_ref().is_none_or(|b| true_value < b.true_value) {
            let record = BestRecord {
                value,
                true_value,
                point: self.x.clone(),
            };
            if let Some(obs) = self.observer.as_mut() {
                obs(&record);
            }
            self.best = Some(record);
        }
    }
}
