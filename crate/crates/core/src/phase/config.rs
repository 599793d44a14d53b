use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::models::{FmficParams, ModelKind};
use crate::state::ProductMode;

const GRID_TOL: f64 = 1e-9;

/// Quantities a sweep can record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quantity {
    Negativity,
    DRs,
    DeltaRs,
    MutualInfo,
    PurityS,
    PurityRs,
}

impl Quantity {
    pub const ALL: [Quantity; 6] = [
        Quantity::Negativity,
        Quantity::DRs,
        Quantity::DeltaRs,
        Quantity::MutualInfo,
        Quantity::PurityS,
        Quantity::PurityRs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::Negativity => "negativity",
            Quantity::DRs => "D_RS",
            Quantity::DeltaRs => "Delta_RS",
            Quantity::MutualInfo => "mutual_info",
            Quantity::PurityS => "purity_S",
            Quantity::PurityRs => "purity_RS",
        }
    }

    /// Parses a name; `purities` expands to both purities.
    pub fn parse_selection(name: &str) -> Result<Vec<Quantity>> {
        if name == "purities" {
            return Ok(vec![Quantity::PurityS, Quantity::PurityRs]);
        }
        Ok(vec![name.parse()?])
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Quantity::ALL
            .into_iter()
            .find(|q| q.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown quantity {s:?}")))
    }
}

impl Serialize for Quantity {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Quantity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn de_quantities<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Quantity>, D::Error> {
    let names = Vec::<String>::deserialize(d)?;
    let mut out = Vec::new();
    for n in names {
        for q in Quantity::parse_selection(&n).map_err(serde::de::Error::custom)? {
            if !out.contains(&q) {
                out.push(q);
            }
        }
    }
    Ok(out)
}

/// A grid of `p` or `τ` values: explicit values, or `"lo:hi"` meaning every
/// multiple of `1/N` in `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    Range(String),
}

impl Grid {
    /// Integer numerators `k` with value `k / n`, ascending.
    pub fn resolve(&self, n: u32) -> Result<Vec<u32>> {
        let nf = n as f64;
        let mut ks: Vec<u32> = match self {
            Grid::Values(vals) => vals
                .iter()
                .map(|&v| {
                    let k = v * nf;
                    if !(v >= 0.0) || (k - k.round()).abs() > GRID_TOL {
                        return Err(Error::Parameter(format!("grid value {v} is not a multiple of 1/{n}")));
                    }
                    Ok(k.round() as u32)
                })
                .collect::<Result<_>>()?,
            Grid::Range(spec) => {
                let (lo, hi) = spec
                    .split_once(':')
                    .and_then(|(a, b)| Some((a.trim().parse::<f64>().ok()?, b.trim().parse::<f64>().ok()?)))
                    .ok_or_else(|| Error::Parameter(format!("grid range {spec:?} is not \"lo:hi\"")))?;
                if !(lo >= 0.0) || hi < lo {
                    return Err(Error::Parameter(format!("grid range {spec:?} is empty or negative")));
                }
                let first = (lo * nf - GRID_TOL).ceil() as u32;
                let last = (hi * nf + GRID_TOL).floor() as u32;
                (first..=last).collect()
            }
        };
        ks.sort_unstable();
        ks.dedup();
        if ks.is_empty() {
            return Err(Error::Parameter(format!("grid resolves to no points at N = {n}")));
        }
        Ok(ks)
    }
}

fn default_quantities() -> Vec<Quantity> {
    vec![Quantity::Negativity, Quantity::DRs]
}

fn default_true() -> bool {
    true
}

fn default_memory_limit_mb() -> u64 {
    4096
}

fn default_outcome_cap() -> usize {
    crate::ensemble::DEFAULT_OUTCOME_CAP
}

/// A full sweep specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub model: ModelKind,
    pub gamma: f64,
    pub n_list: Vec<u32>,
    pub p_grid: Grid,
    pub tau_grid: Grid,
    /// Defaults to 100, or 1 for FMFIC.
    #[serde(default)]
    pub realizations: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_quantities", deserialize_with = "de_quantities")]
    pub quantities: Vec<Quantity>,
    /// Defaults to `haar_single_qubit` for FMFIC and `zero` otherwise.
    #[serde(default)]
    pub product_mode: Option<ProductMode>,
    /// First qubit of the contiguous block `S` (cyclic).
    #[serde(default)]
    pub s_offset: usize,
    /// Draw a fresh Bell pairing for every realization.
    #[serde(default = "default_true")]
    pub resample_pairing: bool,
    #[serde(default)]
    pub fmfic: FmficParams,
    #[serde(default = "default_memory_limit_mb")]
    pub memory_limit_mb: u64,
    #[serde(default = "default_outcome_cap")]
    pub outcome_cap: usize,
}

impl SweepConfig {
    /// A config with defaults for every optional key.
    pub fn new(model: ModelKind, gamma: f64, n_list: Vec<u32>, p_grid: Grid, tau_grid: Grid) -> Self {
        Self {
            model,
            gamma,
            n_list,
            p_grid,
            tau_grid,
            realizations: None,
            seed: 0,
            quantities: default_quantities(),
            product_mode: None,
            s_offset: 0,
            resample_pairing: true,
            fmfic: FmficParams::default(),
            memory_limit_mb: default_memory_limit_mb(),
            outcome_cap: default_outcome_cap(),
        }
    }

    pub fn realizations(&self) -> u64 {
        self.realizations.unwrap_or(match self.model {
            ModelKind::Fmfic => 1,
            _ => 100,
        })
    }

    pub fn product_mode(&self) -> ProductMode {
        self.product_mode.unwrap_or(match self.model {
            ModelKind::Fmfic => ProductMode::HaarSingleQubit,
            _ => ProductMode::Zero,
        })
    }

    /// `(n_R, weight)` pairs realizing `γN`: one pair when `γN` is an
    /// integer, otherwise floor and ceiling weighted so the mean is `γN`.
    pub fn r_sizes(&self, n: u32) -> Vec<(u32, f64)> {
        let g = self.gamma * n as f64;
        let lo = (g + GRID_TOL).floor();
        let frac = g - lo;
        if frac.abs() <= GRID_TOL {
            vec![(lo as u32, 1.0)]
        } else {
            vec![(lo as u32, 1.0 - frac), (lo as u32 + 1, frac)]
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Parameter(format!("gamma = {} outside (0, 1)", self.gamma)));
        }
        if self.n_list.is_empty() {
            return Err(Error::Parameter("n_list is empty".into()));
        }
        if self.realizations() == 0 {
            return Err(Error::Parameter("realizations must be at least 1".into()));
        }
        if self.quantities.is_empty() {
            return Err(Error::Parameter("quantities is empty".into()));
        }
        for &n in &self.n_list {
            if n < 2 {
                return Err(Error::Parameter(format!("N = {n} is below 2")));
            }
            if self.model == ModelKind::Fruc && n % 2 != 0 {
                return Err(Error::Parameter(format!("brickwork circuit needs even N, got {n}")));
            }
            for k in self.p_grid.resolve(n)? {
                if k > n {
                    return Err(Error::Parameter(format!("p = {k}/{n} exceeds 1")));
                }
            }
            self.tau_grid.resolve(n)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_grid_resolves_to_multiples() {
        assert_eq!(Grid::Range("0:1".into()).resolve(4).unwrap(), vec![0, 1, 2, 3, 4]);
        assert_eq!(Grid::Range("0.25:0.5".into()).resolve(8).unwrap(), vec![2, 3, 4]);
        assert!(Grid::Range("x".into()).resolve(4).is_err());
    }

    #[test]
    fn explicit_grid_checks_multiples() {
        assert_eq!(Grid::Values(vec![0.5, 0.0]).resolve(4).unwrap(), vec![0, 2]);
        assert!(Grid::Values(vec![0.3]).resolve(4).is_err());
    }

    #[test]
    fn r_size_weights() {
        let mut c = SweepConfig::new(ModelKind::Fruc, 0.25, vec![6], Grid::Values(vec![0.0]), Grid::Values(vec![0.0]));
        assert_eq!(c.r_sizes(6), vec![(1, 0.5), (2, 0.5)]);
        c.gamma = 0.2;
        assert_eq!(c.r_sizes(5), vec![(1, 1.0)]);
    }

    #[test]
    fn quantity_names_round_trip() {
        for q in Quantity::ALL {
            assert_eq!(q.name().parse::<Quantity>().unwrap(), q);
        }
        assert_eq!(Quantity::parse_selection("purities").unwrap().len(), 2);
    }
}
