//! Bosonic Fock basis for one or two particles on an open chain.
//!
//! Sites carry the labels `1..=L`, the same labels that enter the tilt term
//! `F * sum_i i * n_i`. Two-boson states are stored as ordered site pairs
//! `(i, j)` with `i <= j`; bosonic `sqrt(n)` factors are applied by
//! [`amplitude_factor`] rather than baked into the basis.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical parameters of the chain.
///
/// The on-site interaction sum runs over the same sites `1..=L` as the
/// tilt; there is no site 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeParams {
    #[serde(rename = "L")]
    pub sites: usize,
    /// Non-reciprocity: hopping `i -> i+1` is `-(1 - delta)`, `i+1 -> i` is `-(1 + delta)`.
    #[serde(default)]
    pub delta: f64,
    #[serde(rename = "U", default)]
    pub interaction: f64,
    #[serde(rename = "F", default)]
    pub tilt: f64,
    #[serde(rename = "N")]
    pub particles: usize,
}

impl LatticeParams {
    pub fn new(sites: usize, particles: usize) -> Self {
        LatticeParams {
            sites,
            delta: 0.0,
            interaction: 0.0,
            tilt: 0.0,
            particles,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_interaction(mut self, interaction: f64) -> Self {
        self.interaction = interaction;
        self
    }

    pub fn with_tilt(mut self, tilt: f64) -> Self {
        self.tilt = tilt;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites < 2 {
            return Err(Error::Parameter(format!(
                "L must be at least 2, got {}",
                self.sites
            )));
        }
        if !(self.delta.abs() < 1.0) {
            return Err(Error::Parameter(format!(
                "|delta| must be below 1, got {}",
                self.delta
            )));
        }
        if !self.interaction.is_finite() || !self.tilt.is_finite() {
            return Err(Error::Parameter("U and F must be finite".into()));
        }
        if !(1..=2).contains(&self.particles) {
            return Err(Error::Parameter(format!(
                "N must be 1 or 2, got {}",
                self.particles
            )));
        }
        Ok(())
    }

    /// Bloch period `2 pi / |F|`, infinite for an untilted chain.
    pub fn bloch_period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.tilt.abs()
    }
}

/// Occupation multiset: the sorted list of occupied site labels, one entry
/// per boson.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Occupation(Vec<usize>);

impl Occupation {
    pub fn new(mut sites: Vec<usize>) -> Self {
        sites.sort_unstable();
        Occupation(sites)
    }

    pub fn single(site: usize) -> Self {
        Occupation(vec![site])
    }

    pub fn pair(a: usize, b: usize) -> Self {
        Occupation::new(vec![a, b])
    }

    pub fn sites(&self) -> &[usize] {
        &self.0
    }

    pub fn particles(&self) -> usize {
        self.0.len()
    }

    /// Number of bosons on `site`.
    pub fn count(&self, site: usize) -> usize {
        self.0.iter().filter(|&&s| s == site).count()
    }

    /// Distinct occupied sites with their occupation numbers, in site order.
    pub fn occupied(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let mut k = 0;
        std::iter::from_fn(move || {
            let site = *self.0.get(k)?;
            let n = self.0[k..].iter().take_while(|&&s| s == site).count();
            k += n;
            Some((site, n))
        })
    }
}

impl fmt::Display for Occupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, s) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ladder {
    Create,
    Annihilate,
}

/// Bosonic ladder matrix element on a single site.
///
/// Returns `sqrt(n)` for annihilation and `sqrt(n + 1)` for creation together
/// with the resulting occupation. Annihilating an empty site gives factor 0
/// and leaves the occupation unchanged.
pub fn amplitude_factor(state: &Occupation, site: usize, action: Ladder) -> (f64, Occupation) {
    let n = state.count(site);
    match action {
        Ladder::Annihilate => {
            if n == 0 {
                return (0.0, state.clone());
            }
            let mut sites = state.0.clone();
            let pos = sites.iter().position(|&s| s == site).unwrap();
            sites.remove(pos);
            ((n as f64).sqrt(), Occupation(sites))
        }
        Ladder::Create => {
            let mut sites = state.0.clone();
            let pos = sites.partition_point(|&s| s <= site);
            sites.insert(pos, site);
            (((n + 1) as f64).sqrt(), Occupation(sites))
        }
    }
}

/// Symmetric basis of the `N`-boson sector, enumerated lexicographically:
/// `(1), (2), ...` for one boson and `(1,1), (1,2), ..., (1,L), (2,2), ...`
/// for two.
#[derive(Clone, Debug)]
pub struct FockBasis {
    sites: usize,
    particles: usize,
    states: Vec<Occupation>,
    index: HashMap<Occupation, usize>,
}

pub fn build_basis(params: &LatticeParams) -> Result<FockBasis> {
    params.validate()?;
    let l = params.sites;
    let states: Vec<Occupation> = match params.particles {
        1 => (1..=l).map(Occupation::single).collect(),
        2 => (1..=l)
            .flat_map(|i| (i..=l).map(move |j| Occupation(vec![i, j])))
            .collect(),
        n => unreachable!("validated particle number {n}"),
    };
    let index = states
        .iter()
        .enumerate()
        .map(|(k, s)| (s.clone(), k))
        .collect();
    Ok(FockBasis {
        sites: l,
        particles: params.particles,
        states,
        index,
    })
}

impl FockBasis {
    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn dimension(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[Occupation] {
        &self.states
    }

    pub fn state(&self, k: usize) -> &Occupation {
        &self.states[k]
    }

    pub fn index_of(&self, state: &Occupation) -> Option<usize> {
        self.index.get(state).copied()
    }

    /// Diagonal of `sum_i n_i` in this basis.
    pub fn number_diagonal(&self) -> Vec<f64> {
        self.states
            .iter()
            .map(|s| s.occupied().map(|(_, n)| n as f64).sum())
            .collect()
    }

    pub(crate) fn matches(&self, params: &LatticeParams) -> bool {
        self.sites == params.sites && self.particles == params.particles
    }
}
