use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rdis_core::expr::{parse_problem, to_dsl};
use rdis_core::optim::{RngStream, SearchBox};
use rdis_core::problems::{
    bundle_blocks, bundle_objective, chain_blocks, make_bundle, make_lj_chain, make_sinusoid, read_bal,
    sinusoid_blocks, write_bal, BlockSpec, BundleSpec, ChainSpec, SinusoidSpec,
};
use rdis_core::Objective;

use crate::error::{Error, Result};

/// Tree levels per block when block coordinate descent runs on a sinusoid.
pub const SINUSOID_BLOCK_LEVELS: usize = 2;

/// A benchmark generator with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Sinusoid(SinusoidSpec),
    LjChain(ChainSpec),
    Bundle(BundleSpec),
}

fn parse_params(params: &str) -> Result<Vec<(String, String)>> {
    params
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| match p.split_once('=') {
            Some((k, v)) => Ok((k.trim().to_string(), v.trim().to_string())),
            None => Err(Error::config(format!("parameter `{p}` is not key=value"))),
        })
        .collect()
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(format!("bad value `{value}` for `{key}`")))
}

impl Family {
    /// Builds a generator from its name and a `key=value,...` list. Keys not
    /// given keep the generator's defaults.
    pub fn parse(family: &str, params: &str) -> Result<Family> {
        let params = parse_params(params)?;
        let unknown = |k: &str| Err(Error::config(format!("unknown {family} parameter `{k}`")));
        match family {
            "sinusoid" => {
                let mut s = SinusoidSpec::new(3, 2, 2);
                for (k, v) in &params {
                    match k.as_str() {
                        "height" | "h" => s.height = num(k, v)?,
                        "branching" | "k" => s.branching = num(k, v)?,
                        "arity" | "a" => s.arity = num(k, v)?,
                        "bound" => s.bound = num(k, v)?,
                        "c0" => s.c0 = num(k, v)?,
                        "c1" => s.c1 = num(k, v)?,
                        "c2" => s.c2 = num(k, v)?,
                        _ => return unknown(k),
                    }
                }
                Ok(Family::Sinusoid(s))
            }
            "ljchain" => {
                let mut s = ChainSpec::new(10);
                for (k, v) in &params {
                    match k.as_str() {
                        "residues" | "n" => s.residues = num(k, v)?,
                        "cutoff" => s.cutoff = Some(num(k, v)?),
                        "angles" => {
                            s.angles = v.split(':').map(|a| num(k, a)).collect::<Result<_>>()?;
                        }
                        _ => return unknown(k),
                    }
                }
                Ok(Family::LjChain(s))
            }
            "bundle" => {
                let mut s = BundleSpec::new(4, 20);
                for (k, v) in &params {
                    match k.as_str() {
                        "cameras" => s.cameras = num(k, v)?,
                        "points" => s.points = num(k, v)?,
                        "density" => s.density = num(k, v)?,
                        "observation_noise" => s.observation_noise = num(k, v)?,
                        "parameter_noise" => s.parameter_noise = num(k, v)?,
                        "seed" => s.seed = num(k, v)?,
                        _ => return unknown(k),
                    }
                }
                Ok(Family::Bundle(s))
            }
            _ => Err(Error::config(format!(
                "unknown family `{family}` (expected sinusoid, ljchain or bundle)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Sinusoid(_) => "sinusoid",
            Family::LjChain(_) => "ljchain",
            Family::Bundle(_) => "bundle",
        }
    }

    pub fn build(&self) -> Result<Problem> {
        let (function, start, blocks) = match self {
            Family::Sinusoid(s) => {
                let f = make_sinusoid(s).map_err(Error::Problem)?;
                let blocks = sinusoid_blocks(s, SINUSOID_BLOCK_LEVELS);
                (f, None, blocks)
            }
            Family::LjChain(s) => (make_lj_chain(s).map_err(Error::Problem)?, None, chain_blocks(s)),
            Family::Bundle(s) => {
                let b = make_bundle(s, &mut RngStream::new(s.seed)).map_err(Error::Problem)?;
                let blocks = bundle_blocks(b.cameras, b.points);
                (b.function, Some(b.start), blocks)
            }
        };
        Problem::new(self.to_string(), function, start, blocks)
    }

    /// Writes the generated problem: bundles as BAL files, everything else
    /// in the problem text format.
    pub fn write(&self, out: &Path) -> Result<()> {
        let file = std::fs::File::create(out).map_err(Error::io(out))?;
        let mut w = std::io::BufWriter::new(file);
        match self {
            Family::Bundle(s) => {
                let b = make_bundle(s, &mut RngStream::new(s.seed)).map_err(Error::Problem)?;
                write_bal(&mut w, b.cameras, b.points, &b.observations, &b.start).map_err(Error::Problem)?;
            }
            _ => {
                let p = self.build()?;
                std::io::Write::write_all(&mut w, to_dsl(&p.function).as_bytes()).map_err(Error::io(out))?;
            }
        }
        std::io::Write::flush(&mut w).map_err(Error::io(out))
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Sinusoid(s) => write!(
                f,
                "sinusoid:height={},branching={},arity={}",
                s.height, s.branching, s.arity
            ),
            Family::LjChain(s) => write!(f, "ljchain:residues={}", s.residues),
            Family::Bundle(s) => write!(f, "bundle:cameras={},points={},seed={}", s.cameras, s.points, s.seed),
        }
    }
}

/// Where a run's objective comes from: `gen:<family>:<params>` or a file
/// path (`.bal` files are read as bundle adjustment data, anything else as
/// problem text).
#[derive(Clone, Debug, PartialEq)]
pub enum ProblemSource {
    Generated(Family),
    File(PathBuf),
}

impl FromStr for ProblemSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.strip_prefix("gen:") {
            Some(rest) => {
                let (family, params) = rest.split_once(':').unwrap_or((rest, ""));
                Ok(ProblemSource::Generated(Family::parse(family, params)?))
            }
            None if s.is_empty() => Err(Error::config("empty problem source")),
            None => Ok(ProblemSource::File(PathBuf::from(s))),
        }
    }
}

impl ProblemSource {
    pub fn load(&self) -> Result<Problem> {
        match self {
            ProblemSource::Generated(g) => g.build(),
            ProblemSource::File(path) => load_file(path),
        }
    }
}

fn load_file(path: &Path) -> Result<Problem> {
    let input = |source| Error::Input {
        path: path.to_path_buf(),
        source,
    };
    let name = path.display().to_string();
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("bal")) {
        let file = std::fs::File::open(path).map_err(|e| input(e.into()))?;
        let data = read_bal(std::io::BufReader::new(file)).map_err(input)?;
        let f = bundle_objective(data.cameras, data.points, &data.observations).map_err(input)?;
        let blocks = bundle_blocks(data.cameras, data.points);
        Problem::new(name, f, Some(data.state), blocks)
    } else {
        let text = std::fs::read_to_string(path).map_err(|e| input(e.into()))?;
        let f = parse_problem(&text).map_err(input)?;
        let blocks = (0..f.universe())
            .filter(|&v| f.has_variable(v))
            .map(|v| vec![v])
            .collect();
        Problem::new(name, f, None, blocks)
    }
}

/// A loaded objective with its block structure and optional given start.
#[derive(Clone, Debug)]
pub struct Problem {
    pub name: String,
    pub function: Objective,
    /// State of the first restart; later restarts, and the first when this is
    /// `None`, are drawn at random.
    pub start: Option<Vec<f64>>,
    pub blocks: BlockSpec,
    /// Fingerprint of the function text and start, used to check that runs
    /// being compared solve the same problem.
    pub hash: u64,
}

impl Problem {
    pub fn new(name: String, function: Objective, start: Option<Vec<f64>>, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let blocks = BlockSpec::new(function.universe(), blocks).map_err(Error::Problem)?;
        if let Some(s) = &start {
            if s.len() < function.universe() {
                return Err(Error::Problem(rdis_core::Error::MissingValue(s.len())));
            }
        }
        let mut h = DefaultHasher::new();
        to_dsl(&function).hash(&mut h);
        if let Some(s) = &start {
            for v in s {
                v.to_bits().hash(&mut h);
            }
        }
        Ok(Problem {
            name,
            function,
            start,
            blocks,
            hash: h.finish(),
        })
    }
}

/// The sequence of top-level restart states for one seed. Every algorithm
/// draws the same sequence, so comparisons start from the same states.
pub struct RestartStates<'p> {
    problem: &'p Problem,
    sbox: SearchBox<f64>,
    vars: Vec<usize>,
    center: Vec<f64>,
    rng: RngStream,
    drawn: usize,
}

impl<'p> RestartStates<'p> {
    pub fn new(problem: &'p Problem, half_width: f64, rng: RngStream) -> Self {
        let f = &problem.function;
        let vars: Vec<usize> = f.variable_indices().collect();
        let center = problem.start.clone().unwrap_or_else(|| f.default_state());
        let sbox = SearchBox::new(f, &vars, &center, half_width);
        RestartStates {
            problem,
            sbox,
            vars,
            center,
            rng,
            drawn: 0,
        }
    }
}

impl Iterator for RestartStates<'_> {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        let first = self.drawn == 0;
        self.drawn += 1;
        match (&self.problem.start, first) {
            (Some(s), true) => Some(s.clone()),
            _ => {
                let mut x = self.center.clone();
                self.sbox.sample_into(&self.vars, &mut self.rng, &mut x);
                Some(x)
            }
        }
    }
}
