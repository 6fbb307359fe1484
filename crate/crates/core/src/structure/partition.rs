//! Multilevel hypergraph bisection: heavy-pin coarsening, greedy growing on
//! the coarsest level, Fiduccia–Mattheyses refinement while projecting back.
//! More than two parts come from recursive bisection.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::hypergraph::Hypergraph;

/// Result of [`partition_cutset`]: the cut variables (hyperedge ids) and the
/// term ids of each part.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionResult {
    pub cutset: Vec<usize>,
    pub parts: Vec<Vec<usize>>,
    pub imbalance: f64,
}

pub const DEFAULT_PARTS: usize = 2;
pub const DEFAULT_BALANCE: f64 = 0.2;

const COARSEST: usize = 40;
const MATCH_PIN_LIMIT: usize = 64;
const INITIAL_TRIES: usize = 24;
const MAX_PASSES: usize = 10;

#[derive(Clone, Debug)]
struct Level {
    vw: Vec<u64>,
    ew: Vec<u64>,
    pins: Vec<Vec<u32>>,
    incident: Vec<Vec<u32>>,
}

impl Level {
    fn from_parts(vw: Vec<u64>, ew: Vec<u64>, pins: Vec<Vec<u32>>) -> Self {
        let mut incident = vec![Vec::new(); vw.len()];
        for (e, p) in pins.iter().enumerate() {
            for &v in p {
                incident[v as usize].push(e as u32);
            }
        }
        Level { vw, ew, pins, incident }
    }

    fn len(&self) -> usize {
        self.vw.len()
    }

    fn total(&self) -> u64 {
        self.vw.iter().sum()
    }

    /// Sub-level induced by `keep` (local ids in ascending order); edges with
    /// fewer than two remaining pins cannot be cut and are dropped.
    fn induced(&self, keep: &[u32]) -> Level {
        let mut map = vec![u32::MAX; self.len()];
        for (i, &v) in keep.iter().enumerate() {
            map[v as usize] = i as u32;
        }
        let mut pins = Vec::new();
        let mut ew = Vec::new();
        for (e, p) in self.pins.iter().enumerate() {
            let q: Vec<u32> = p.iter().map(|&v| map[v as usize]).filter(|&v| v != u32::MAX).collect();
            if q.len() >= 2 {
                pins.push(q);
                ew.push(self.ew[e]);
            }
        }
        let vw = keep.iter().map(|&v| self.vw[v as usize]).collect();
        Level::from_parts(vw, ew, pins)
    }
}

/// Cut of `h` into `k` balanced parts. A part may weigh at most
/// `max(floor((1+balance)·W/k), ceil(W/k))` where `W` is the total vertex
/// weight. When `h` has fewer than `k` vertices every hyperedge is returned.
pub fn partition_cutset(h: &Hypergraph, k: usize, balance: f64) -> PartitionResult {
    assert!(k >= 2, "partition needs at least two parts");
    let n = h.num_vertices();
    if n < k {
        let mut parts = vec![Vec::new(); k];
        parts[0] = h.vertices.clone();
        return PartitionResult {
            cutset: h.edges.clone(),
            parts,
            imbalance: if n == 0 { 0.0 } else { k as f64 - 1.0 },
        };
    }
    let level = Level::from_parts(
        h.vertex_weight.iter().map(|&w| w as u64).collect(),
        h.edge_weight.iter().map(|&w| w as u64).collect(),
        h.pins.clone(),
    );
    let mut label = vec![0usize; n];
    let all: Vec<u32> = (0..n as u32).collect();
    split(&level, &all, k, 0, balance, &mut label);
    // number parts by their lowest vertex
    let mut rename = vec![usize::MAX; k];
    let mut next = 0;
    for l in label.iter_mut() {
        if rename[*l] == usize::MAX {
            rename[*l] = next;
            next += 1;
        }
        *l = rename[*l];
    }

    let mut parts = vec![Vec::new(); k];
    let mut weight = vec![0u64; k];
    for v in 0..n {
        parts[label[v]].push(h.vertices[v]);
        weight[label[v]] += h.vertex_weight[v] as u64;
    }
    let mut cutset = Vec::new();
    for (e, p) in h.pins.iter().enumerate() {
        if let Some(&first) = p.first() {
            let l = label[first as usize];
            if p.iter().any(|&v| label[v as usize] != l) {
                cutset.push(h.edges[e]);
            }
        }
    }
    cutset.sort_unstable();
    let total: u64 = weight.iter().sum();
    let imbalance = if total == 0 {
        0.0
    } else {
        *weight.iter().max().expect("k >= 2") as f64 / (total as f64 / k as f64) - 1.0
    };
    PartitionResult {
        cutset,
        parts,
        imbalance,
    }
}

fn split(level: &Level, ids: &[u32], k: usize, first: usize, balance: f64, label: &mut [usize]) {
    if k == 1 || ids.len() < 2 {
        for &v in ids {
            label[v as usize] = first;
        }
        return;
    }
    let k0 = k / 2;
    let frac = k0 as f64 / k as f64;
    let side = bisect(level, frac, balance);
    let mut left = Vec::new();
    let mut right = Vec::new();
    let mut left_ids = Vec::new();
    let mut right_ids = Vec::new();
    for (i, &s) in side.iter().enumerate() {
        if s == 0 {
            left.push(i as u32);
            left_ids.push(ids[i]);
        } else {
            right.push(i as u32);
            right_ids.push(ids[i]);
        }
    }
    if k0 > 1 {
        split(&level.induced(&left), &left_ids, k0, first, balance, label);
    } else {
        for &v in &left_ids {
            label[v as usize] = first;
        }
    }
    if k - k0 > 1 {
        split(&level.induced(&right), &right_ids, k - k0, first + k0, balance, label);
    } else {
        for &v in &right_ids {
            label[v as usize] = first + k0;
        }
    }
}

fn caps(total: u64, frac: f64, balance: f64) -> [u64; 2] {
    let cap = |t: f64| {
        let ideal = t * total as f64;
        ((1.0 + balance) * ideal).floor().max(ideal.ceil()) as u64
    };
    [cap(frac), cap(1.0 - frac)]
}

/// Two-way split; side 0 targets fraction `frac` of the weight.
fn bisect(fine: &Level, frac: f64, balance: f64) -> Vec<u8> {
    let total = fine.total();
    let cap = caps(total, frac, balance);
    let max_cluster = (cap[0].min(cap[1]) / 3).max(1);

    let mut levels = vec![fine.clone()];
    let mut maps: Vec<Vec<u32>> = Vec::new();
    loop {
        let cur = levels.last().expect("non-empty");
        if cur.len() <= COARSEST {
            break;
        }
        let (map, coarse) = coarsen(cur, max_cluster);
        if coarse.len() * 10 > cur.len() * 9 {
            break;
        }
        maps.push(map);
        levels.push(coarse);
    }

    let coarsest = levels.last().expect("non-empty");
    let mut side = initial_bisection(coarsest, frac, cap);
    for (lvl, map) in levels.iter().rev().skip(1).zip(maps.iter().rev()) {
        side = map.iter().map(|&c| side[c as usize]).collect();
        let mut state = Bisection::new(lvl, side);
        state.refine(cap);
        side = state.side;
    }
    side
}

fn coarsen(level: &Level, max_cluster: u64) -> (Vec<u32>, Level) {
    let n = level.len();
    let mut mate = vec![u32::MAX; n];
    let mut score = vec![0.0f64; n];
    let mut touched = Vec::new();
    for v in 0..n {
        if mate[v] != u32::MAX {
            continue;
        }
        for &e in &level.incident[v] {
            let p = &level.pins[e as usize];
            if p.len() < 2 || p.len() > MATCH_PIN_LIMIT {
                continue;
            }
            let s = level.ew[e as usize] as f64 / (p.len() - 1) as f64;
            for &u in p {
                let u = u as usize;
                if u == v || mate[u] != u32::MAX || level.vw[u] + level.vw[v] > max_cluster {
                    continue;
                }
                if score[u] == 0.0 {
                    touched.push(u);
                }
                score[u] += s;
            }
        }
        let mut best: Option<usize> = None;
        for &u in &touched {
            best = match best {
                Some(b) if score[b] > score[u] || (score[b] == score[u] && b < u) => Some(b),
                _ => Some(u),
            };
        }
        for &u in &touched {
            score[u] = 0.0;
        }
        touched.clear();
        match best {
            Some(u) => {
                mate[v] = u as u32;
                mate[u] = v as u32;
            }
            None => mate[v] = v as u32,
        }
    }
    let mut map = vec![u32::MAX; n];
    let mut vw = Vec::new();
    for v in 0..n {
        if map[v] == u32::MAX {
            let c = vw.len() as u32;
            let m = mate[v] as usize;
            map[v] = c;
            map[m] = c;
            vw.push(level.vw[v] + if m != v { level.vw[m] } else { 0 });
        }
    }
    let mut pins = Vec::new();
    let mut ew = Vec::new();
    for (e, p) in level.pins.iter().enumerate() {
        let mut q: Vec<u32> = p.iter().map(|&v| map[v as usize]).collect();
        q.sort_unstable();
        q.dedup();
        if q.len() >= 2 {
            pins.push(q);
            ew.push(level.ew[e]);
        }
    }
    (map, Level::from_parts(vw, ew, pins))
}

fn initial_bisection(level: &Level, frac: f64, cap: [u64; 2]) -> Vec<u8> {
    let n = level.len();
    let target1 = ((1.0 - frac) * level.total() as f64).round() as u64;
    let tries = n.min(INITIAL_TRIES);
    let mut best: Option<((bool, u64, u64), Vec<u8>)> = None;
    for t in 0..tries {
        let seed = t * n / tries;
        let mut state = Bisection::new(level, vec![0; n]);
        state.apply(seed);
        while state.weight[1] < target1 {
            let mut pick: Option<(i64, usize)> = None;
            for v in 0..n {
                if state.side[v] == 0
                    && state.weight[1] + level.vw[v] <= cap[1]
                    && pick.is_none_or(|(g, _)| state.gain[v] > g)
                {
                    pick = Some((state.gain[v], v));
                }
            }
            match pick {
                Some((_, v)) => state.apply(v),
                None => break,
            }
        }
        state.refine(cap);
        let key = (!state.feasible(cap), state.cut, state.excess(cap));
        if best.as_ref().is_none_or(|(k, _)| key < *k) {
            best = Some((key, state.side));
        }
    }
    best.expect("at least one try").1
}

/// Two-way assignment with per-edge side counts and exact move gains.
struct Bisection<'a> {
    level: &'a Level,
    side: Vec<u8>,
    count: Vec<[u32; 2]>,
    gain: Vec<i64>,
    weight: [u64; 2],
    cut: u64,
}

impl<'a> Bisection<'a> {
    fn new(level: &'a Level, side: Vec<u8>) -> Self {
        let mut count = vec![[0u32; 2]; level.pins.len()];
        let mut weight = [0u64; 2];
        for (v, &s) in side.iter().enumerate() {
            weight[s as usize] += level.vw[v];
        }
        let mut cut = 0;
        for (e, p) in level.pins.iter().enumerate() {
            for &v in p {
                count[e][side[v as usize] as usize] += 1;
            }
            if count[e][0] > 0 && count[e][1] > 0 {
                cut += level.ew[e];
            }
        }
        let gain = (0..level.len())
            .map(|v| {
                let from = side[v] as usize;
                level.incident[v]
                    .iter()
                    .map(|&e| {
                        let c = count[e as usize];
                        let w = level.ew[e as usize] as i64;
                        (if c[from] == 1 { w } else { 0 }) - (if c[1 - from] == 0 { w } else { 0 })
                    })
                    .sum()
            })
            .collect();
        Bisection {
            level,
            side,
            count,
            gain,
            weight,
            cut,
        }
    }

    fn feasible(&self, cap: [u64; 2]) -> bool {
        self.weight[0] <= cap[0] && self.weight[1] <= cap[1]
    }

    fn excess(&self, cap: [u64; 2]) -> u64 {
        self.weight[0].saturating_sub(cap[0]) + self.weight[1].saturating_sub(cap[1])
    }

    /// Moves `v` to the other side, updating counts and neighbour gains.
    fn apply(&mut self, v: usize) {
        let level = self.level;
        let from = self.side[v] as usize;
        let to = 1 - from;
        self.cut = (self.cut as i64 - self.gain[v]) as u64;
        for &e in &level.incident[v] {
            let e = e as usize;
            let w = level.ew[e] as i64;
            let pins = &level.pins[e];
            if self.count[e][to] == 0 {
                for &u in pins {
                    if u as usize != v {
                        self.gain[u as usize] += w;
                    }
                }
            } else if self.count[e][to] == 1 {
                for &u in pins {
                    if self.side[u as usize] as usize == to {
                        self.gain[u as usize] -= w;
                    }
                }
            }
            self.count[e][from] -= 1;
            self.count[e][to] += 1;
            if self.count[e][from] == 0 {
                for &u in pins {
                    if u as usize != v {
                        self.gain[u as usize] -= w;
                    }
                }
            } else if self.count[e][from] == 1 {
                for &u in pins {
                    if u as usize != v && self.side[u as usize] as usize == from {
                        self.gain[u as usize] += w;
                    }
                }
            }
        }
        self.gain[v] = -self.gain[v];
        self.side[v] = to as u8;
        self.weight[from] -= level.vw[v];
        self.weight[to] += level.vw[v];
    }

    /// Fiduccia–Mattheyses passes until a pass brings no improvement.
    fn refine(&mut self, cap: [u64; 2]) {
        let n = self.level.len();
        let patience = 50 + n / 10;
        for _ in 0..MAX_PASSES {
            let start_key = (self.excess(cap), self.cut);
            let mut locked = vec![false; n];
            let mut heaps: [BinaryHeap<(i64, Reverse<u32>)>; 2] = [BinaryHeap::new(), BinaryHeap::new()];
            for v in 0..n {
                heaps[self.side[v] as usize].push((self.gain[v], Reverse(v as u32)));
            }
            let mut moves: Vec<usize> = Vec::new();
            let mut best_key = start_key;
            let mut best_len = 0;
            loop {
                let mut choice: Option<(i64, usize)> = None;
                for s in 0..2 {
                    let heap = &mut heaps[s];
                    while let Some(&(g, Reverse(v))) = heap.peek() {
                        let v = v as usize;
                        if locked[v] || self.side[v] as usize != s || self.gain[v] != g {
                            heap.pop();
                            continue;
                        }
                        break;
                    }
                    let Some(&(g, Reverse(v))) = heap.peek() else {
                        continue;
                    };
                    let v = v as usize;
                    let to = 1 - s;
                    let fits = self.weight[to] + self.level.vw[v] <= cap[to];
                    let relieves = self.weight[s] > cap[s];
                    if !(fits || relieves) {
                        continue;
                    }
                    let better = match choice {
                        None => true,
                        Some((cg, cv)) => {
                            g > cg
                                || (g == cg && self.weight[s] > self.weight[self.side[cv] as usize])
                                || (g == cg && self.weight[s] == self.weight[self.side[cv] as usize] && v < cv)
                        }
                    };
                    if better {
                        choice = Some((g, v));
                    }
                }
                let Some((_, v)) = choice else { break };
                locked[v] = true;
                let touched: Vec<u32> = self.level.incident[v]
                    .iter()
                    .flat_map(|&e| self.level.pins[e as usize].iter().copied())
                    .collect();
                self.apply(v);
                moves.push(v);
                for u in touched {
                    let u = u as usize;
                    if !locked[u] {
                        heaps[self.side[u] as usize].push((self.gain[u], Reverse(u as u32)));
                    }
                }
                let key = (self.excess(cap), self.cut);
                if key < best_key {
                    best_key = key;
                    best_len = moves.len();
                } else if moves.len() - best_len > patience {
                    break;
                }
            }
            while moves.len() > best_len {
                let v = moves.pop().expect("non-empty");
                self.apply(v);
            }
            if best_key >= start_key {
                break;
            }
        }
    }
}
