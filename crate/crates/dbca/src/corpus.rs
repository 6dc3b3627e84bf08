//! An analyzed corpus: examples plus precomputed atom/compound vectors.
//!
//! Splitting and reporting repeatedly evaluate divergences over candidate
//! subsets, so the per-example distributions are computed once here and kept
//! as sparse vectors over dense ids.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::compounds::{CompoundPool, PoolConfig};
use crate::divergence::{ATOM_ALPHA, COMPOUND_ALPHA};
use crate::error::{Error, Result};
use crate::example::Example;

/// Examples together with the compound pool and per-example sparse mass
/// vectors for atoms and pool compounds.
#[derive(Clone, Debug)]
pub struct Corpus {
    pub examples: Vec<Example>,
    pub pool: CompoundPool,
    /// Atom keys, sorted; index is the dense atom id.
    pub atom_keys: Vec<String>,
    /// Per example: (atom id, occurrence count), sorted by id.
    pub example_atoms: Vec<Vec<(u32, f64)>>,
    /// Per example: (pool member rank, weight), sorted by rank.
    pub example_compounds: Vec<Vec<(u32, f64)>>,
    /// Number of ingested examples lacking a DAG (divergence-ineligible).
    pub ineligible: usize,
}

impl Corpus {
    /// Analyze a dataset: build the pool and per-example vectors.
    pub fn analyze(examples: Vec<Example>, config: PoolConfig) -> Result<Corpus> {
        let pool = CompoundPool::build(&examples, config)?;
        let mut atom_keys: Vec<String> = Vec::new();
        {
            let mut seen = std::collections::BTreeSet::new();
            for e in &examples {
                if let Some(dag) = &e.dag {
                    for a in dag.nodes() {
                        seen.insert(a.key());
                    }
                }
            }
            atom_keys.extend(seen);
        }
        let atom_index: HashMap<&str, u32> = atom_keys
            .iter()
            .enumerate()
            .map(|(i, k)| (k.as_str(), i as u32))
            .collect();

        let example_atoms: Vec<Vec<(u32, f64)>> = examples
            .iter()
            .map(|e| match &e.dag {
                None => Vec::new(),
                Some(dag) => {
                    let mut counts: HashMap<u32, f64> = HashMap::new();
                    for a in dag.nodes() {
                        *counts.entry(atom_index[a.key().as_str()]).or_insert(0.0) += 1.0;
                    }
                    let mut v: Vec<(u32, f64)> = counts.into_iter().collect();
                    v.sort_unstable_by_key(|&(id, _)| id);
                    v
                }
            })
            .collect();

        let example_compounds: Vec<Vec<(u32, f64)>> = examples
            .par_iter()
            .map(|e| {
                if e.dag.is_none() {
                    Ok(Vec::new())
                } else {
                    pool.member_weights(e)
                }
            })
            .collect::<Result<Vec<_>>>()?;

        let ineligible = examples.iter().filter(|e| e.dag.is_none()).count();
        Ok(Corpus {
            examples,
            pool,
            atom_keys,
            example_atoms,
            example_compounds,
            ineligible,
        })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Dense mass vectors (atoms, compounds) summed over a subset.
    pub fn mass_vectors(&self, ids: &[usize]) -> (Vec<f64>, Vec<f64>) {
        let mut atoms = vec![0.0; self.atom_keys.len()];
        let mut comps = vec![0.0; self.pool.len()];
        for &i in ids {
            for &(k, m) in &self.example_atoms[i] {
                atoms[k as usize] += m;
            }
            for &(k, m) in &self.example_compounds[i] {
                comps[k as usize] += m;
            }
        }
        (atoms, comps)
    }

    /// Atom and compound divergence between two index subsets.
    pub fn divergences(&self, train: &[usize], test: &[usize]) -> Result<(f64, f64)> {
        if train.is_empty() || test.is_empty() {
            return Err(Error::Domain(
                "divergence of an empty sample is undefined".into(),
            ));
        }
        // Identical subsets are exactly zero-divergent.
        let mut a = train.to_vec();
        let mut b = test.to_vec();
        a.sort_unstable();
        b.sort_unstable();
        if a == b {
            return Ok((0.0, 0.0));
        }
        let (ta, tc) = self.mass_vectors(train);
        let (ea, ec) = self.mass_vectors(test);
        let d_a = 1.0 - chernoff_masses(&ta, &ea, ATOM_ALPHA);
        let d_c = 1.0 - chernoff_masses(&tc, &ec, COMPOUND_ALPHA);
        Ok((d_a, d_c))
    }
}

/// Chernoff coefficient over two dense unnormalized mass vectors.
pub(crate) fn chernoff_masses(p: &[f64], q: &[f64], alpha: f64) -> f64 {
    let pt: f64 = p.iter().sum();
    let qt: f64 = q.iter().sum();
    if pt == 0.0 || qt == 0.0 {
        return 0.0;
    }
    let mut sum = 0.0;
    for (&pm, &qm) in p.iter().zip(q) {
        if pm > 0.0 && qm > 0.0 {
            sum += pm.powf(alpha) * qm.powf(1.0 - alpha);
        }
    }
    (sum / (pt.powf(alpha) * qt.powf(1.0 - alpha))).clamp(0.0, 1.0)
}
