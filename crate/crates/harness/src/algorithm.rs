use std::fmt;
use std::str::FromStr;

use rdis_core::optim::OptimizerKind;

use crate::error::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Rdis,
    /// RDIS with randomly chosen blocks of the partition cutset's size.
    RdisRnd,
    /// RDIS without internal random restarts.
    RdisNrr,
    Cgd,
    BcdCgd,
    Lm,
    BcdLm,
    Grid,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::Rdis,
        Algorithm::RdisRnd,
        Algorithm::RdisNrr,
        Algorithm::Cgd,
        Algorithm::BcdCgd,
        Algorithm::Lm,
        Algorithm::BcdLm,
        Algorithm::Grid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Rdis => "rdis",
            Algorithm::RdisRnd => "rdis-rnd",
            Algorithm::RdisNrr => "rdis-nrr",
            Algorithm::Cgd => "cgd",
            Algorithm::BcdCgd => "bcd-cgd",
            Algorithm::Lm => "lm",
            Algorithm::BcdLm => "bcd-lm",
            Algorithm::Grid => "grid",
        }
    }

    pub fn is_rdis(self) -> bool {
        matches!(self, Algorithm::Rdis | Algorithm::RdisRnd | Algorithm::RdisNrr)
    }

    /// The local optimizer a baseline runs; `None` for the RDIS variants,
    /// whose subspace optimizer is configurable.
    pub fn baseline_kind(self) -> Option<OptimizerKind> {
        match self {
            Algorithm::Cgd | Algorithm::BcdCgd => Some(OptimizerKind::Cgd),
            Algorithm::Lm | Algorithm::BcdLm => Some(OptimizerKind::Lm),
            Algorithm::Grid => Some(OptimizerKind::Grid),
            _ => None,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Algorithm::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Algorithm::ALL.iter().map(|a| a.name()).collect();
            Error::config(format!(
                "unknown algorithm `{s}` (expected one of {})",
                names.join(", ")
            ))
        })
    }
}
