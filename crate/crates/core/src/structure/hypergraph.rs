use crate::expr::ObjectiveFunction;
use crate::scalar::Scalar;

/// Terms as vertices, variables as hyperedges over the terms that use them.
///
/// Vertices and hyperedges are stored densely; `vertices[i]` is the term id
/// of local vertex `i` and `edges[j]` the variable index of local edge `j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hypergraph {
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
    pub vertex_weight: Vec<u32>,
    pub edge_weight: Vec<u32>,
    /// Local vertex positions of each edge, ascending.
    pub pins: Vec<Vec<u32>>,
    /// Local edge positions of each vertex, ascending.
    pub incident: Vec<Vec<u32>>,
}

impl Hypergraph {
    /// Builds from explicit pin lists over local vertices `0..n_vertices`,
    /// with vertex ids and edge ids equal to their positions.
    pub fn from_pins(n_vertices: usize, pins: Vec<Vec<u32>>) -> Self {
        let mut incident = vec![Vec::new(); n_vertices];
        let mut clean = Vec::with_capacity(pins.len());
        for (e, mut p) in pins.into_iter().enumerate() {
            p.sort_unstable();
            p.dedup();
            for &v in &p {
                incident[v as usize].push(e as u32);
            }
            clean.push(p);
        }
        Hypergraph {
            vertices: (0..n_vertices).collect(),
            edges: (0..clean.len()).collect(),
            vertex_weight: vec![1; n_vertices],
            edge_weight: vec![1; clean.len()],
            pins: clean,
            incident,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn pin_count(&self) -> usize {
        self.pins.iter().map(Vec::len).sum()
    }
}

/// Hypergraph of the active part of `f`: one vertex per active term id, one
/// hyperedge per active variable, pins wherever an active term uses an
/// active variable.
pub fn build_hypergraph<T: Scalar>(
    f: &ObjectiveFunction<T>,
    active_vars: &[usize],
    active_terms: &[usize],
) -> Hypergraph {
    let mut vars = active_vars.to_vec();
    vars.sort_unstable();
    vars.dedup();
    let mut terms = active_terms.to_vec();
    terms.sort_unstable();
    terms.dedup();

    let mut edge_of = vec![u32::MAX; f.universe()];
    for (j, &v) in vars.iter().enumerate() {
        edge_of[v] = j as u32;
    }
    let max_id = f.terms().iter().map(|t| t.id() + 1).max().unwrap_or(0);
    let mut pos_of = vec![usize::MAX; max_id];
    for (p, t) in f.terms().iter().enumerate() {
        pos_of[t.id()] = p;
    }

    let mut pins = vec![Vec::new(); vars.len()];
    let mut incident = Vec::with_capacity(terms.len());
    for (i, &id) in terms.iter().enumerate() {
        let term = &f.terms()[pos_of[id]];
        let mut inc = Vec::new();
        for &v in term.scope() {
            let e = edge_of[v];
            if e != u32::MAX {
                pins[e as usize].push(i as u32);
                inc.push(e);
            }
        }
        inc.sort_unstable();
        incident.push(inc);
    }
    Hypergraph {
        vertex_weight: vec![1; terms.len()],
        edge_weight: vec![1; vars.len()],
        vertices: terms,
        edges: vars,
        pins,
        incident,
    }
}
