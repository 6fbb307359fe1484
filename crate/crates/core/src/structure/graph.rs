use std::collections::VecDeque;
use std::fmt;

use crate::error::{Error, Result};
use crate::expr::ObjectiveFunction;
use crate::scalar::Scalar;

/// A vertex of the bipartite term/variable graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Entity {
    Var(usize),
    Term(usize),
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entity::Var(i) => write!(f, "variable {i}"),
            Entity::Term(i) => write!(f, "term {i}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Component {
    pub vars: Vec<usize>,
    pub terms: Vec<usize>,
}

impl Component {
    pub fn size(&self) -> usize {
        self.vars.len() + self.terms.len()
    }
}

/// Connected components of the active graph. Components are ordered by
/// their smallest variable index; terms with no active variable are listed
/// separately.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ComponentView {
    pub components: Vec<Component>,
    pub empty_terms: Vec<usize>,
}

/// Term/variable incidence with LIFO deletions.
///
/// Variables are addressed by index and terms by id. Removals are stamped
/// with the depth of the removal stack (their epoch) and must be undone in
/// reverse order. The full component view is rebuilt lazily after any change.
#[derive(Clone, Debug)]
pub struct TermVarGraph {
    var_terms: Vec<Vec<usize>>,
    term_vars: Vec<Vec<usize>>,
    var_present: Vec<bool>,
    term_present: Vec<bool>,
    var_active: Vec<bool>,
    term_active: Vec<bool>,
    stack: Vec<Entity>,
    cache: Option<ComponentView>,
    stamp: u32,
    var_seen: Vec<u32>,
    term_seen: Vec<u32>,
}

impl TermVarGraph {
    /// Graph over every variable and term of `f`.
    pub fn from_function<T: Scalar>(f: &ObjectiveFunction<T>) -> Self {
        let vars: Vec<usize> = f.variable_indices().collect();
        let terms: Vec<usize> = f.terms().iter().map(|t| t.id()).collect();
        Self::from_subsets(f, &vars, &terms)
    }

    /// Graph over the given variables and term ids of `f`; incidences to
    /// variables outside `vars` are dropped.
    pub fn from_subsets<T: Scalar>(f: &ObjectiveFunction<T>, vars: &[usize], terms: &[usize]) -> Self {
        let n_vars = f.universe();
        let n_terms = f.terms().iter().map(|t| t.id() + 1).max().unwrap_or(0);
        let mut var_present = vec![false; n_vars];
        for &v in vars {
            var_present[v] = true;
        }
        let mut term_present = vec![false; n_terms];
        for &t in terms {
            term_present[t] = true;
        }
        let mut var_terms = vec![Vec::new(); n_vars];
        let mut term_vars = vec![Vec::new(); n_terms];
        for t in f.terms() {
            if !term_present[t.id()] {
                continue;
            }
            for &v in t.scope() {
                if var_present[v] {
                    var_terms[v].push(t.id());
                    term_vars[t.id()].push(v);
                }
            }
        }
        Self::assemble(var_terms, term_vars, var_present, term_present)
    }

    /// Graph from explicit incidence lists: `scopes[t]` lists the variables of
    /// term `t`, variables are `0..n_vars`.
    pub fn from_scopes(n_vars: usize, scopes: &[Vec<usize>]) -> Self {
        let mut var_terms = vec![Vec::new(); n_vars];
        let mut term_vars = Vec::with_capacity(scopes.len());
        for (t, scope) in scopes.iter().enumerate() {
            let mut s = scope.clone();
            s.sort_unstable();
            s.dedup();
            for &v in &s {
                var_terms[v].push(t);
            }
            term_vars.push(s);
        }
        Self::assemble(var_terms, term_vars, vec![true; n_vars], vec![true; scopes.len()])
    }

    fn assemble(
        var_terms: Vec<Vec<usize>>,
        term_vars: Vec<Vec<usize>>,
        var_present: Vec<bool>,
        term_present: Vec<bool>,
    ) -> Self {
        let nv = var_terms.len();
        let nt = term_vars.len();
        TermVarGraph {
            var_active: var_present.clone(),
            term_active: term_present.clone(),
            var_terms,
            term_vars,
            var_present,
            term_present,
            stack: Vec::new(),
            cache: None,
            stamp: 0,
            var_seen: vec![0; nv],
            term_seen: vec![0; nt],
        }
    }

    pub fn is_active(&self, e: Entity) -> bool {
        match e {
            Entity::Var(i) => self.var_active.get(i).copied().unwrap_or(false),
            Entity::Term(i) => self.term_active.get(i).copied().unwrap_or(false),
        }
    }

    fn is_present(&self, e: Entity) -> bool {
        match e {
            Entity::Var(i) => self.var_present.get(i).copied().unwrap_or(false),
            Entity::Term(i) => self.term_present.get(i).copied().unwrap_or(false),
        }
    }

    fn set_active(&mut self, e: Entity, on: bool) {
        match e {
            Entity::Var(i) => self.var_active[i] = on,
            Entity::Term(i) => self.term_active[i] = on,
        }
    }

    /// Current removal depth; the epoch of the next removal.
    pub fn epoch(&self) -> usize {
        self.stack.len()
    }

    pub fn remove(&mut self, e: Entity) -> Result<()> {
        if !self.is_present(e) || !self.is_active(e) {
            return Err(Error::Inactive(e.to_string()));
        }
        self.set_active(e, false);
        self.stack.push(e);
        self.cache = None;
        Ok(())
    }

    /// Undoes the most recent removal, which must be `e`.
    pub fn restore(&mut self, e: Entity) -> Result<()> {
        match self.stack.last() {
            Some(&top) if top == e => {
                self.stack.pop();
                self.set_active(e, true);
                self.cache = None;
                Ok(())
            }
            Some(&top) => Err(Error::NonLifoRestore {
                requested: e.to_string(),
                expected: top.to_string(),
            }),
            None => Err(Error::NonLifoRestore {
                requested: e.to_string(),
                expected: "nothing".into(),
            }),
        }
    }

    /// Restores removals until the stack is back at `epoch`.
    pub fn rollback_to(&mut self, epoch: usize) {
        while self.stack.len() > epoch {
            let e = self.stack.pop().expect("non-empty stack");
            self.set_active(e, true);
            self.cache = None;
        }
    }

    pub fn active_vars(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.var_active.len()).filter(|&i| self.var_active[i])
    }

    pub fn active_terms(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.term_active.len()).filter(|&i| self.term_active[i])
    }

    /// Active terms incident to variable `v`.
    pub fn terms_of(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.var_terms[v].iter().copied().filter(|&t| self.term_active[t])
    }

    /// Active variables incident to term `t`.
    pub fn vars_of(&self, t: usize) -> impl Iterator<Item = usize> + '_ {
        self.term_vars[t].iter().copied().filter(|&v| self.var_active[v])
    }

    /// Components of the whole active graph, rebuilt when stale.
    pub fn components(&mut self) -> &ComponentView {
        if self.cache.is_none() {
            let vars: Vec<usize> = self.active_vars().collect();
            let terms: Vec<usize> = self.active_terms().collect();
            let view = self.components_from(&vars, &terms);
            self.cache = Some(view);
        }
        self.cache.as_ref().expect("just rebuilt")
    }

    /// Components of the active graph with `assigned_vars` and
    /// `removed_terms` additionally deleted; the graph is left unchanged.
    pub fn components_after(&mut self, assigned_vars: &[usize], removed_terms: &[usize]) -> ComponentView {
        let epoch = self.epoch();
        for &v in assigned_vars {
            if self.is_active(Entity::Var(v)) {
                self.remove(Entity::Var(v)).expect("active");
            }
        }
        for &t in removed_terms {
            if self.is_active(Entity::Term(t)) {
                self.remove(Entity::Term(t)).expect("active");
            }
        }
        let vars: Vec<usize> = self.active_vars().collect();
        let terms: Vec<usize> = self.active_terms().collect();
        let view = self.components_from(&vars, &terms);
        self.rollback_to(epoch);
        view
    }

    /// Components of the active graph reachable from the given active
    /// seeds. Inactive seeds are ignored.
    pub fn components_from(&mut self, seed_vars: &[usize], seed_terms: &[usize]) -> ComponentView {
        self.stamp = self.stamp.wrapping_add(1);
        if self.stamp == 0 {
            self.var_seen.iter_mut().for_each(|s| *s = 0);
            self.term_seen.iter_mut().for_each(|s| *s = 0);
            self.stamp = 1;
        }
        let stamp = self.stamp;
        let mut components = Vec::new();
        let mut seeds: Vec<usize> = seed_vars.to_vec();
        seeds.sort_unstable();
        for &s in &seeds {
            if self.var_active[s] && self.var_seen[s] != stamp {
                components.push(self.grow(s, stamp));
            }
        }
        let mut empty_terms = Vec::new();
        for &t in seed_terms {
            if !self.term_active[t] || self.term_seen[t] == stamp {
                continue;
            }
            if self.vars_of(t).next().is_none() {
                self.term_seen[t] = stamp;
                empty_terms.push(t);
            } else {
                // reachable only through an unseeded variable
                let v = self.vars_of(t).next().expect("non-empty");
                components.push(self.grow(v, stamp));
            }
        }
        empty_terms.sort_unstable();
        components.sort_by_key(|c| c.vars[0]);
        ComponentView {
            components,
            empty_terms,
        }
    }

    fn grow(&mut self, s: usize, stamp: u32) -> Component {
        let mut comp = Component::default();
        let mut queue = VecDeque::new();
        self.var_seen[s] = stamp;
        queue.push_back(Entity::Var(s));
        while let Some(e) = queue.pop_front() {
            match e {
                Entity::Var(v) => {
                    comp.vars.push(v);
                    for &t in &self.var_terms[v] {
                        if self.term_active[t] && self.term_seen[t] != stamp {
                            self.term_seen[t] = stamp;
                            queue.push_back(Entity::Term(t));
                        }
                    }
                }
                Entity::Term(t) => {
                    comp.terms.push(t);
                    for &v in &self.term_vars[t] {
                        if self.var_active[v] && self.var_seen[v] != stamp {
                            self.var_seen[v] = stamp;
                            queue.push_back(Entity::Var(v));
                        }
                    }
                }
            }
        }
        comp.vars.sort_unstable();
        comp.terms.sort_unstable();
        comp
    }
}
