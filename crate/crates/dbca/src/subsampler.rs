//! Entropy-driven subsampling.
//!
//! Generated corpora are heavily skewed toward frequent rule combinations.
//! The subsampler selects a fixed-size subset, one complexity level at a
//! time, greedily picking at each step the example whose addition maximizes
//! the Shannon entropy of the accumulated compound distribution. This
//! flattens the distribution: rare compounds are preferentially retained.

use crate::corpus::Corpus;
use crate::divergence::WeightedDistribution;
use crate::error::{Error, Result};

/// Shannon entropy (natural log) of a weighted distribution after
/// normalization.
pub fn entropy(dist: &WeightedDistribution) -> Result<f64> {
    if dist.is_empty() || dist.total() <= 0.0 {
        return Err(Error::Domain("entropy of an empty distribution".into()));
    }
    let total = dist.total();
    let mut h = 0.0;
    for (_, m) in dist.iter() {
        let p = m / total;
        if p > 0.0 {
            h -= p * p.ln();
        }
    }
    Ok(h)
}

/// Entropy of an accumulated unnormalized mass vector, maintained
/// incrementally as `H = ln(T) - S / T` with `S = sum of m * ln(m)`.
struct EntropyState {
    masses: Vec<f64>,
    total: f64,
    /// sum over keys of m * ln(m)
    mlogm: f64,
}

impl EntropyState {
    fn new(n: usize) -> EntropyState {
        EntropyState {
            masses: vec![0.0; n],
            total: 0.0,
            mlogm: 0.0,
        }
    }

    fn entropy_terms(total: f64, mlogm: f64) -> f64 {
        if total <= 0.0 {
            0.0
        } else {
            total.ln() - mlogm / total
        }
    }

    /// Entropy after hypothetically adding an example's sparse masses.
    fn entropy_with(&self, add: &[(u32, f64)]) -> f64 {
        let mut total = self.total;
        let mut mlogm = self.mlogm;
        for &(k, m) in add {
            let old = self.masses[k as usize];
            let new = old + m;
            mlogm += xlogx(new) - xlogx(old);
            total += m;
        }
        Self::entropy_terms(total, mlogm)
    }

    fn add(&mut self, add: &[(u32, f64)]) {
        for &(k, m) in add {
            let old = self.masses[k as usize];
            let new = old + m;
            self.mlogm += xlogx(new) - xlogx(old);
            self.masses[k as usize] = new;
            self.total += m;
        }
    }
}

fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Select `target` example ids maximizing compound-distribution entropy.
///
/// Examples with complexity above `max_level` are excluded. The remaining
/// complexity levels share the target budget evenly (remainders go to the
/// lowest levels); within a level, selection is greedy by entropy gain with
/// ties broken by lowest example id. `_seed` is reserved for an optional
/// stochastic tie relaxation and does not affect the default deterministic
/// selection.
pub fn subsample(corpus: &Corpus, target: usize, max_level: usize, _seed: u64) -> Result<Vec<usize>> {
    if target == 0 {
        return Err(Error::Config("subsample target must be positive".into()));
    }
    let eligible: Vec<usize> = (0..corpus.len())
        .filter(|&i| corpus.examples[i].complexity <= max_level && corpus.examples[i].dag.is_some())
        .collect();
    if eligible.len() < target {
        return Err(Error::Infeasible {
            side: "eligible".into(),
            available: eligible.len(),
            required: target,
        });
    }
    // Group by complexity level, ascending.
    let mut levels: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for &i in &eligible {
        levels.entry(corpus.examples[i].complexity).or_default().push(i);
    }
    let n_levels = levels.len();
    let base = target / n_levels;
    let mut remainder = target % n_levels;
    let mut caps: Vec<(usize, usize)> = Vec::new(); // (level, cap)
    for (&level, _) in &levels {
        let extra = if remainder > 0 {
            remainder -= 1;
            1
        } else {
            0
        };
        caps.push((level, base + extra));
    }

    let mut state = EntropyState::new(corpus.pool.len());
    let mut picked = Vec::with_capacity(target);
    let mut shortfall = 0usize;
    for &(level, cap) in &caps {
        let mut pool: Vec<usize> = levels[&level].clone();
        let want = cap + shortfall.min(pool.len());
        let mut taken = 0;
        while taken < want && !pool.is_empty() {
            let (best_pos, _) = pool
                .iter()
                .enumerate()
                .map(|(pos, &id)| {
                    (
                        pos,
                        (
                            -state.entropy_with(&corpus.example_compounds[id]),
                            id,
                        ),
                    )
                })
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .map(|(pos, key)| (pos, key))
                .unwrap();
            let id = pool.swap_remove(best_pos);
            state.add(&corpus.example_compounds[id]);
            picked.push(id);
            taken += 1;
        }
        shortfall = (cap + shortfall).saturating_sub(taken);
    }
    // If upper levels were too small, backfill from any remaining examples.
    if picked.len() < target {
        let chosen: std::collections::HashSet<usize> = picked.iter().copied().collect();
        let mut rest: Vec<usize> = eligible.iter().copied().filter(|i| !chosen.contains(i)).collect();
        while picked.len() < target && !rest.is_empty() {
            let (best_pos, _) = rest
                .iter()
                .enumerate()
                .map(|(pos, &id)| (pos, (-state.entropy_with(&corpus.example_compounds[id]), id)))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap();
            let id = rest.swap_remove(best_pos);
            state.add(&corpus.example_compounds[id]);
            picked.push(id);
        }
    }
    picked.sort_unstable();
    Ok(picked)
}
