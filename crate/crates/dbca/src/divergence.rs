//! Weighted distributions and Chernoff-coefficient divergences.
//!
//! For distributions `P` and `Q` over a shared key space, the Chernoff
//! coefficient is `C_alpha(P || Q) = sum_k p_k^alpha * q_k^(1 - alpha)`.
//! Atom divergence is `D_A = 1 - C_0.5` (Bhattacharyya); compound divergence
//! is `D_C = 1 - C_0.1`, weighting representation in the train side (`P`)
//! more than proportion. Terms where either mass is zero contribute zero.

use std::collections::BTreeMap;

use crate::compounds::CompoundPool;
use crate::error::{Error, Result};
use crate::example::Example;

/// Exponent used for atom divergence.
pub const ATOM_ALPHA: f64 = 0.5;
/// Exponent used for compound divergence.
pub const COMPOUND_ALPHA: f64 = 0.1;

/// A non-negative mass per key. Masses need not sum to one; all divergence
/// computations normalize internally.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeightedDistribution {
    masses: BTreeMap<String, f64>,
    total: f64,
}

impl WeightedDistribution {
    pub fn new() -> WeightedDistribution {
        WeightedDistribution::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, f64)>) -> Result<WeightedDistribution> {
        let mut d = WeightedDistribution::new();
        for (k, m) in pairs {
            d.add(k, m)?;
        }
        Ok(d)
    }

    /// Accumulate mass for a key.
    pub fn add(&mut self, key: String, mass: f64) -> Result<()> {
        if !mass.is_finite() || mass < 0.0 {
            return Err(Error::Domain(format!(
                "mass for key {key:?} must be finite and non-negative, got {mass}"
            )));
        }
        if mass > 0.0 {
            *self.masses.entry(key).or_insert(0.0) += mass;
            self.total += mass;
        }
        Ok(())
    }

    pub fn mass(&self, key: &str) -> f64 {
        self.masses.get(key).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// Normalized probability of a key.
    pub fn probability(&self, key: &str) -> f64 {
        if self.total == 0.0 {
            0.0
        } else {
            self.mass(key) / self.total
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.masses.iter().map(|(k, &m)| (k.as_str(), m))
    }
}

/// `C_alpha(P || Q)` over normalized probabilities.
pub fn chernoff_coefficient(
    p: &WeightedDistribution,
    q: &WeightedDistribution,
    alpha: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha must be in [0, 1], got {alpha}")));
    }
    if p.is_empty() || q.is_empty() {
        return Err(Error::Domain(
            "Chernoff coefficient of an empty distribution".into(),
        ));
    }
    // Identical distributions have coefficient exactly 1; the shortcut keeps
    // D(X || X) at exactly zero in floating point.
    if p.masses == q.masses {
        return Ok(1.0);
    }
    let mut sum = 0.0;
    for (k, pm) in p.iter() {
        let qm = q.mass(k);
        if qm > 0.0 {
            sum += (pm / p.total).powf(alpha) * (qm / q.total).powf(1.0 - alpha);
        }
    }
    Ok(sum.clamp(0.0, 1.0))
}

/// Distribution of rule applications (atoms) over a sample, weighted by the
/// number of occurrences of each atom.
pub fn atom_distribution<'a>(
    sample: impl IntoIterator<Item = &'a Example>,
) -> Result<WeightedDistribution> {
    let mut dist = WeightedDistribution::new();
    let mut any = false;
    for e in sample {
        let dag = e.dag.as_ref().ok_or_else(|| {
            Error::Domain(format!("example {} has no rule application DAG", e.id))
        })?;
        any = true;
        for atom in dag.nodes() {
            dist.add(atom.key(), 1.0)?;
        }
    }
    if !any {
        return Err(Error::Domain("empty sample has no atom distribution".into()));
    }
    Ok(dist)
}

/// Distribution of pool compounds over a sample, each example contributing
/// its per-example compound weights.
pub fn compound_distribution<'a>(
    sample: impl IntoIterator<Item = &'a Example>,
    pool: &CompoundPool,
) -> Result<WeightedDistribution> {
    let mut dist = WeightedDistribution::new();
    let mut any = false;
    for e in sample {
        any = true;
        for (key, w) in pool.compute_weights(e)? {
            dist.add(key, w)?;
        }
    }
    if !any {
        return Err(Error::Domain(
            "empty sample has no compound distribution".into(),
        ));
    }
    Ok(dist)
}

/// `D_A(train || test) = 1 - C_0.5`.
pub fn atom_divergence(train: &WeightedDistribution, test: &WeightedDistribution) -> Result<f64> {
    Ok(1.0 - chernoff_coefficient(train, test, ATOM_ALPHA)?)
}

/// `D_C(train || test) = 1 - C_0.1`.
pub fn compound_divergence(
    train: &WeightedDistribution,
    test: &WeightedDistribution,
) -> Result<f64> {
    Ok(1.0 - chernoff_coefficient(train, test, COMPOUND_ALPHA)?)
}
