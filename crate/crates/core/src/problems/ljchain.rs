//! Planar sidechain-placement model: a fixed zigzag backbone with one atom
//! per residue, and per residue a sidechain of unit bonds whose joints are
//! torsion-like angles. Atom pairs at least three bonds apart interact
//! through a Lennard-Jones potential.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::expr::{ExprNode, ObjectiveFunction, Variable};

type E = ExprNode<f64>;

#[derive(Clone, Debug, PartialEq)]
pub struct ChainSpec {
    pub residues: usize,
    /// Angles per residue (0 to 4), cycled over the residues.
    pub angles: Vec<usize>,
    pub bond: f64,
    /// Interior angle of the zigzag backbone.
    pub backbone_angle: f64,
    /// `(A, B)` between a backbone and a sidechain atom.
    pub lj_backbone: (f64, f64),
    /// `(A, B)` between two sidechain atoms.
    pub lj_sidechain: (f64, f64),
    /// Skip pairs that can never come closer than this.
    pub cutoff: Option<f64>,
    /// Positions of the first two backbone atoms.
    pub anchors: [[f64; 2]; 2],
}

impl ChainSpec {
    pub fn new(residues: usize) -> Self {
        ChainSpec {
            residues,
            angles: vec![2, 3, 1, 4, 2, 0],
            bond: 1.0,
            backbone_angle: 2.0 * PI / 3.0,
            lj_backbone: (1.0, 1.0),
            lj_sidechain: (1.0, 1.0),
            cutoff: None,
            anchors: [[0.0, 0.0], [(PI / 6.0).cos(), (PI / 6.0).sin()]],
        }
    }

    pub fn with_angles(mut self, angles: Vec<usize>) -> Self {
        self.angles = angles;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Spec(m.to_string()));
        if self.residues == 0 {
            return bad("chain needs at least one residue");
        }
        if self.angles.is_empty() || self.angles.iter().any(|&a| a > 4) {
            return bad("angles per residue must be between 0 and 4");
        }
        if !(self.bond > 0.0) || !(self.backbone_angle > 0.0 && self.backbone_angle < PI) {
            return bad("bond length and backbone angle must be positive");
        }
        for (a, b) in [self.lj_backbone, self.lj_sidechain] {
            if !(a > 0.0 && b > 0.0) {
                return bad("Lennard-Jones coefficients must be positive");
            }
        }
        let d = dist(self.anchors[0], self.anchors[1]);
        if !((d - self.bond).abs() <= 1e-9 * self.bond.max(1.0)) {
            return bad("anchors must be one bond apart");
        }
        Ok(())
    }

    pub fn angles_of(&self, residue: usize) -> usize {
        self.angles[residue % self.angles.len()]
    }

    /// Fixed backbone atom positions.
    pub fn backbone(&self) -> Vec<[f64; 2]> {
        let [p0, p1] = self.anchors;
        let half = (PI - self.backbone_angle) / 2.0;
        let first = (p1[1] - p0[1]).atan2(p1[0] - p0[0]);
        let axis = first - half;
        let mut out = vec![p0];
        for j in 1..self.residues {
            let turn = if j % 2 == 1 { half } else { -half };
            let prev = out[j - 1];
            let a = axis + turn;
            out.push([prev[0] + self.bond * a.cos(), prev[1] + self.bond * a.sin()]);
        }
        out
    }

    /// Direction (radians) in which residue `j`'s sidechain leaves the
    /// backbone when all its angles are zero.
    pub fn base_angle(&self, j: usize) -> f64 {
        let [p0, p1] = self.anchors;
        let half = (PI - self.backbone_angle) / 2.0;
        let axis = (p1[1] - p0[1]).atan2(p1[0] - p0[0]) - half;
        if j.is_multiple_of(2) {
            axis - PI / 2.0
        } else {
            axis + PI / 2.0
        }
    }

    /// Variable index of the first angle of each residue.
    pub fn first_angle(&self) -> Vec<usize> {
        let mut acc = 0;
        (0..self.residues)
            .map(|j| {
                let here = acc;
                acc += self.angles_of(j);
                here
            })
            .collect()
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// `A / r^12 - B / r^6`.
pub fn lj_energy(r: f64, a: f64, b: f64) -> f64 {
    let r6 = r.powi(6);
    a / (r6 * r6) - b / r6
}

/// Lennard-Jones energy as an expression of the squared distance.
pub fn lj_term(d2: E, a: f64, b: f64) -> E {
    E::constant(a) * d2.clone().powi(-6) - E::constant(b) * d2.powi(-3)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Atom {
    residue: usize,
    /// 0 for the backbone atom, `m` for the m-th sidechain atom.
    depth: usize,
}

fn bond_distance(a: Atom, b: Atom) -> usize {
    if a.residue == b.residue {
        a.depth.abs_diff(b.depth)
    } else {
        a.depth + b.depth + a.residue.abs_diff(b.residue)
    }
}

/// Bond vectors `from..=to` (1-based) of residue `j`'s sidechain as
/// expression pairs. Bond `q` points along `base` plus the angles
/// `pivot..=q`; angles below `pivot` are taken as zero.
fn arm(
    spec: &ChainSpec,
    first: &[usize],
    j: usize,
    (from, to): (usize, usize),
    pivot: usize,
    base: f64,
) -> (Vec<E>, Vec<E>) {
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for q in from..=to {
        let mut angle = E::constant(base);
        for p in pivot..=q {
            angle = angle + E::var(first[j] + p - 1);
        }
        xs.push(E::constant(spec.bond) * angle.clone().cos());
        ys.push(E::constant(spec.bond) * angle.sin());
    }
    (xs, ys)
}

fn coordinate(constant: f64, plus: Vec<E>, minus: Vec<E>) -> E {
    let mut e = E::constant(constant);
    for p in plus {
        e = e + p;
    }
    for m in minus {
        e = e - m;
    }
    e
}

/// Builds the chain energy. Angles have domain `[-pi, pi]`.
pub fn make_lj_chain(spec: &ChainSpec) -> Result<ObjectiveFunction<f64>> {
    spec.validate()?;
    let backbone = spec.backbone();
    let first = spec.first_angle();
    let mut variables = Vec::new();
    for j in 0..spec.residues {
        for p in 0..spec.angles_of(j) {
            variables.push(Variable::new(variables.len(), format!("r{j}_chi{}", p + 1), -PI, PI)?);
        }
    }
    let atoms: Vec<Atom> = (0..spec.residues)
        .flat_map(|j| (0..=spec.angles_of(j)).map(move |depth| Atom { residue: j, depth }))
        .collect();

    let mut exprs = Vec::new();
    for (ia, &a) in atoms.iter().enumerate() {
        for &b in &atoms[ia + 1..] {
            if a.depth == 0 && b.depth == 0 || bond_distance(a, b) < 3 {
                continue;
            }
            let reach = spec.bond * (a.depth + b.depth) as f64;
            if let Some(cut) = spec.cutoff {
                if dist(backbone[a.residue], backbone[b.residue]) - reach > cut {
                    continue;
                }
            }
            let (da, db) = (a.depth, b.depth);
            let (dx, dy) = if a.residue == b.residue {
                // both on one sidechain: the distance depends only on the
                // joints strictly between the two atoms
                let (lo, hi) = (da.min(db), da.max(db));
                let (xs, ys) = arm(spec, &first, a.residue, (lo + 1, hi), lo + 2, 0.0);
                (coordinate(0.0, xs, vec![]), coordinate(0.0, ys, vec![]))
            } else {
                let (pa, pb) = (backbone[a.residue], backbone[b.residue]);
                let (ax, ay) = arm(spec, &first, a.residue, (1, da), 1, spec.base_angle(a.residue));
                let (bx, by) = arm(spec, &first, b.residue, (1, db), 1, spec.base_angle(b.residue));
                (coordinate(pa[0] - pb[0], ax, bx), coordinate(pa[1] - pb[1], ay, by))
            };
            let (ca, cb) = if da == 0 || db == 0 {
                spec.lj_backbone
            } else {
                spec.lj_sidechain
            };
            exprs.push(lj_term(dx.powi(2) + dy.powi(2), ca, cb));
        }
    }
    ObjectiveFunction::new(variables, exprs)
}

/// One block per residue with at least one angle.
pub fn chain_blocks(spec: &ChainSpec) -> Vec<Vec<usize>> {
    let first = spec.first_angle();
    (0..spec.residues)
        .filter(|&j| spec.angles_of(j) > 0)
        .map(|j| (first[j]..first[j] + spec.angles_of(j)).collect())
        .collect()
}
