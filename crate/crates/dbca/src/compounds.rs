//! Atoms, rule application DAGs, and compound (sub-DAG) extraction.
//!
//! An *atom* is a single rule application. A rule application DAG records all
//! applications used to generate one example, with an edge `a -> b` whenever
//! `b` directly depends on the result of `a`. A *compound* is a connected
//! induced sub-DAG of such a graph, identified up to isomorphism by a
//! canonical key.
//!
//! Compound weighting follows the subsumption principle: an occurrence of a
//! compound counts fully only to the extent that it is not always part of the
//! same larger compound. For a compound `G` with occurrences `occ(G)`,
//!
//! ```text
//! w(G) = max over g in occ(G) of (1 - max over G' with g < g' of P(G' | G))
//! ```
//!
//! where `P(G' | G)` is the empirical probability, over the full sample set,
//! that an occurrence of `G` extends to an occurrence of `G'`.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::example::Example;

/// Separators used inside canonical keys. Atom keys never contain control
/// characters, so these cannot collide with rule names.
const LABEL_SEP: char = '\u{1f}';
const EDGE_SEP: char = '\u{1e}';

/// The rule family an atom belongs to.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub enum RuleType {
    Grammar,
    Inference,
    Resolution,
    Knowledge,
    /// The synthetic node joining the grammar and resolution phases.
    Join,
    /// Rule types from external datasets that do not map onto the above.
    Other(String),
}

impl RuleType {
    /// Short tag used in atom keys.
    pub fn tag(&self) -> &str {
        match self {
            RuleType::Grammar => "G",
            RuleType::Inference => "I",
            RuleType::Resolution => "R",
            RuleType::Knowledge => "K",
            RuleType::Join => "J",
            RuleType::Other(s) => s,
        }
    }

    /// Type string used by CFQ-style JSON records.
    pub fn dataset_name(&self) -> &str {
        match self {
            RuleType::Grammar => "GRAMMAR_RULE",
            RuleType::Inference => "INFERENCE_RULE",
            RuleType::Resolution => "SPARQL_GENERATION",
            RuleType::Knowledge => "KNOWLEDGE",
            RuleType::Join => "JOIN_RULE",
            RuleType::Other(s) => s,
        }
    }

    /// Inverse of [`RuleType::dataset_name`]; unknown strings are preserved.
    pub fn from_dataset_name(s: &str) -> RuleType {
        match s {
            "GRAMMAR_RULE" => RuleType::Grammar,
            "INFERENCE_RULE" => RuleType::Inference,
            "SPARQL_GENERATION" => RuleType::Resolution,
            "KNOWLEDGE" => RuleType::Knowledge,
            "JOIN_RULE" => RuleType::Join,
            other => RuleType::Other(other.to_string()),
        }
    }
}

/// A single rule application kind: rule family plus rule name.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct Atom {
    pub rule_type: RuleType,
    pub name: String,
}

impl Atom {
    pub fn new(rule_type: RuleType, name: impl Into<String>) -> Atom {
        Atom {
            rule_type,
            name: name.into(),
        }
    }

    /// Stable string key, e.g. `G:S=WHQ`.
    pub fn key(&self) -> String {
        format!("{}:{}", self.rule_type.tag(), self.name)
    }
}

/// The rule application DAG of one example.
///
/// Nodes are atoms; edge `(a, b)` means node `b` directly depends on node
/// `a`. The graph must be acyclic. [`RuleApplicationDag::normalize`] reduces
/// edges to the transitive reduction and reorders nodes canonically so that
/// equal derivations compare byte-equal.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct RuleApplicationDag {
    nodes: Vec<Atom>,
    edges: Vec<(u32, u32)>,
}

impl RuleApplicationDag {
    pub fn new(nodes: Vec<Atom>, mut edges: Vec<(u32, u32)>) -> Result<RuleApplicationDag> {
        let n = nodes.len();
        if n == 0 {
            return Err(Error::Structure("rule application DAG has no nodes".into()));
        }
        for &(a, b) in &edges {
            if a as usize >= n || b as usize >= n {
                return Err(Error::Structure(format!(
                    "edge ({a}, {b}) out of bounds for {n} nodes"
                )));
            }
            if a == b {
                return Err(Error::Structure(format!("self-loop on node {a}")));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        let dag = RuleApplicationDag { nodes, edges };
        if !dag.is_acyclic() {
            return Err(Error::Structure("rule application graph is cyclic".into()));
        }
        Ok(dag)
    }

    pub fn nodes(&self) -> &[Atom] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn out_adj(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for &(a, b) in &self.edges {
            adj[a as usize].push(b as usize);
        }
        adj
    }

    fn is_acyclic(&self) -> bool {
        // Kahn's algorithm.
        let n = self.nodes.len();
        let adj = self.out_adj();
        let mut indeg = vec![0usize; n];
        for &(_, b) in &self.edges {
            indeg[b as usize] += 1;
        }
        let mut queue: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut seen = 0;
        while let Some(v) = queue.pop() {
            seen += 1;
            for &w in &adj[v] {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    queue.push(w);
                }
            }
        }
        seen == n
    }

    /// Transitive reduction plus canonical node reordering. Idempotent.
    pub fn normalize(&self) -> RuleApplicationDag {
        let n = self.nodes.len();
        // Transitive reduction: drop edge (a, b) when b is reachable from a
        // through some other out-neighbor.
        let adj = self.out_adj();
        let mut reach: Vec<HashSet<usize>> = vec![HashSet::new(); n];
        // Process in reverse topological order so reach sets are complete.
        for &v in self.topo_order().iter().rev() {
            for &w in &adj[v] {
                reach[v].insert(w);
                let ws: Vec<usize> = reach[w].iter().copied().collect();
                reach[v].extend(ws);
            }
        }
        let reduced: Vec<(u32, u32)> = self
            .edges
            .iter()
            .copied()
            .filter(|&(a, b)| {
                !adj[a as usize]
                    .iter()
                    .any(|&w| w != b as usize && reach[w].contains(&(b as usize)))
            })
            .collect();

        // Canonical reordering of nodes.
        let labels: Vec<String> = self.nodes.iter().map(Atom::key).collect();
        let edge_idx: Vec<(usize, usize)> = reduced
            .iter()
            .map(|&(a, b)| (a as usize, b as usize))
            .collect();
        let perm = canonical_order(&labels, &edge_idx);
        let mut pos = vec![0usize; n];
        for (p, &orig) in perm.iter().enumerate() {
            pos[orig] = p;
        }
        let nodes: Vec<Atom> = perm.iter().map(|&i| self.nodes[i].clone()).collect();
        let mut edges: Vec<(u32, u32)> = reduced
            .iter()
            .map(|&(a, b)| (pos[a as usize] as u32, pos[b as usize] as u32))
            .collect();
        edges.sort_unstable();
        RuleApplicationDag { nodes, edges }
    }

    fn topo_order(&self) -> Vec<usize> {
        let n = self.nodes.len();
        let adj = self.out_adj();
        let mut indeg = vec![0usize; n];
        for &(_, b) in &self.edges {
            indeg[b as usize] += 1;
        }
        let mut queue: BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(&v) = queue.iter().next() {
            queue.remove(&v);
            order.push(v);
            for &w in &adj[v] {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    queue.insert(w);
                }
            }
        }
        order
    }

    /// Canonical key of the full DAG; equal for isomorphic derivations.
    pub fn canonical_signature(&self) -> String {
        let labels: Vec<String> = self.nodes.iter().map(Atom::key).collect();
        let edges: Vec<(usize, usize)> = self
            .edges
            .iter()
            .map(|&(a, b)| (a as usize, b as usize))
            .collect();
        render_key(&labels, &edges, &canonical_order(&labels, &edges))
    }
}

/// A compound: a connected induced sub-DAG, stored in canonical orientation.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Compound {
    /// Atom keys in canonical node order.
    pub node_labels: Vec<String>,
    /// Edges over canonical node indices, sorted.
    pub edges: Vec<(u32, u32)>,
    pub canonical_key: String,
}

/// Where a compound occurred: an example and the node subset within its DAG.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct CompoundOccurrence {
    pub example_id: usize,
    /// Node indices into the example's normalized DAG, sorted.
    pub nodes: Vec<u32>,
}

/// Canonical key for a labeled DAG fragment given label strings and edges
/// over local indices. Isomorphic fragments yield equal keys.
///
/// The canonical order is found by iterated color refinement (seeded with the
/// node labels) with a backtracking tiebreaker over non-singleton color
/// classes, keeping the lexicographically smallest rendering.
pub fn canonical_key(labels: &[String], edges: &[(usize, usize)]) -> Result<String> {
    if labels.is_empty() {
        return Err(Error::Domain("empty fragment has no canonical key".into()));
    }
    for &(a, b) in edges {
        if a >= labels.len() || b >= labels.len() {
            return Err(Error::Structure(format!(
                "edge ({a}, {b}) out of bounds for fragment of {} nodes",
                labels.len()
            )));
        }
    }
    if has_cycle(labels.len(), edges) {
        return Err(Error::Structure("fragment is cyclic".into()));
    }
    Ok(render_key(labels, edges, &canonical_order(labels, edges)))
}

fn has_cycle(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut indeg = vec![0usize; n];
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        if a == b {
            return true;
        }
        adj[a].push(b);
        indeg[b] += 1;
    }
    let mut queue: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut seen = 0;
    while let Some(v) = queue.pop() {
        seen += 1;
        for &w in &adj[v] {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                queue.push(w);
            }
        }
    }
    seen != n
}

fn render_key(labels: &[String], edges: &[(usize, usize)], order: &[usize]) -> String {
    if labels.len() == 1 {
        return labels[0].clone();
    }
    let mut pos = vec![0usize; labels.len()];
    for (p, &orig) in order.iter().enumerate() {
        pos[orig] = p;
    }
    let mut canon_edges: Vec<(usize, usize)> = edges.iter().map(|&(a, b)| (pos[a], pos[b])).collect();
    canon_edges.sort_unstable();
    let mut out = String::new();
    for (i, &orig) in order.iter().enumerate() {
        if i > 0 {
            out.push(LABEL_SEP);
        }
        out.push_str(&labels[orig]);
    }
    out.push(EDGE_SEP);
    for (i, &(a, b)) in canon_edges.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&format!("{a}>{b}"));
    }
    out
}

/// Compute a canonical node order (canonical position -> original index).
fn canonical_order(labels: &[String], edges: &[(usize, usize)]) -> Vec<usize> {
    let n = labels.len();
    if n == 1 {
        return vec![0];
    }
    let mut sorted_labels: Vec<&String> = labels.iter().collect();
    sorted_labels.sort_unstable();
    sorted_labels.dedup();
    let label_rank: Vec<u32> = labels
        .iter()
        .map(|l| sorted_labels.binary_search(&l).unwrap() as u32)
        .collect();
    let mut out_adj = vec![Vec::new(); n];
    let mut in_adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        out_adj[a].push(b);
        in_adj[b].push(a);
    }
    let mut best: Option<(Vec<u32>, Vec<usize>)> = None;
    search_order(
        &label_rank,
        &out_adj,
        &in_adj,
        edges,
        label_rank.clone(),
        &mut best,
    );
    best.expect("canonical search yields at least one ordering").1
}

/// Refine colors to a stable partition.
fn refine(colors: &mut Vec<u32>, out_adj: &[Vec<usize>], in_adj: &[Vec<usize>]) {
    let n = colors.len();
    loop {
        let mut sigs: Vec<(u32, Vec<u32>, Vec<u32>)> = Vec::with_capacity(n);
        for v in 0..n {
            let mut outs: Vec<u32> = out_adj[v].iter().map(|&w| colors[w]).collect();
            outs.sort_unstable();
            let mut ins: Vec<u32> = in_adj[v].iter().map(|&w| colors[w]).collect();
            ins.sort_unstable();
            sigs.push((colors[v], outs, ins));
        }
        let mut uniq: Vec<&(u32, Vec<u32>, Vec<u32>)> = sigs.iter().collect();
        uniq.sort_unstable();
        uniq.dedup();
        let new: Vec<u32> = sigs
            .iter()
            .map(|s| uniq.binary_search(&s).unwrap() as u32)
            .collect();
        if new == *colors {
            return;
        }
        *colors = new;
    }
}

fn search_order(
    label_rank: &[u32],
    out_adj: &[Vec<usize>],
    in_adj: &[Vec<usize>],
    edges: &[(usize, usize)],
    mut colors: Vec<u32>,
    best: &mut Option<(Vec<u32>, Vec<usize>)>,
) {
    refine(&mut colors, out_adj, in_adj);
    let n = colors.len();
    let mut by_color: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (v, &c) in colors.iter().enumerate() {
        by_color.entry(c).or_default().push(v);
    }
    if let Some((_, cell)) = by_color.iter().find(|(_, vs)| vs.len() > 1) {
        // Backtracking tiebreaker: individualize each member of the first
        // non-singleton cell in turn.
        for &v in cell {
            let mut next = colors.clone();
            // Give v a color just below its current class, then re-rank.
            let sigs: Vec<(u32, u32)> = (0..n)
                .map(|i| (next[i], if i == v { 0 } else { 1 }))
                .collect();
            let mut uniq = sigs.clone();
            uniq.sort_unstable();
            uniq.dedup();
            for i in 0..n {
                next[i] = uniq.binary_search(&sigs[i]).unwrap() as u32;
            }
            search_order(label_rank, out_adj, in_adj, edges, next, best);
        }
        return;
    }
    // Discrete coloring: derive the ordering and its comparable key.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by_key(|&v| colors[v]);
    let mut pos = vec![0usize; n];
    for (p, &orig) in order.iter().enumerate() {
        pos[orig] = p;
    }
    let mut key: Vec<u32> = order.iter().map(|&v| label_rank[v]).collect();
    let mut canon_edges: Vec<(u32, u32)> = edges
        .iter()
        .map(|&(a, b)| (pos[a] as u32, pos[b] as u32))
        .collect();
    canon_edges.sort_unstable();
    key.push(u32::MAX);
    for (a, b) in canon_edges {
        key.push(a);
        key.push(b);
    }
    if best.as_ref().map_or(true, |(bk, _)| key < *bk) {
        *best = Some((key, order));
    }
}

/// Enumerate all connected induced sub-DAGs with at most `max_nodes` nodes.
///
/// Each occurrence (node subset) is reported exactly once, paired with its
/// compound in canonical orientation.
pub fn enumerate_subgraphs(
    dag: &RuleApplicationDag,
    max_nodes: usize,
    example_id: usize,
) -> Result<Vec<(Compound, CompoundOccurrence)>> {
    if max_nodes == 0 {
        return Err(Error::Config("max_nodes must be at least 1".into()));
    }
    let labels: Vec<String> = dag.nodes().iter().map(Atom::key).collect();
    let raw = enumerate_occurrences(dag, max_nodes);
    let mut out = Vec::with_capacity(raw.len());
    for nodes in raw {
        let (key, compound) = compound_for_subset(&labels, dag.edges(), &nodes);
        debug_assert_eq!(key, compound.canonical_key);
        out.push((
            compound,
            CompoundOccurrence {
                example_id,
                nodes: nodes.iter().map(|&v| v as u32).collect(),
            },
        ));
    }
    Ok(out)
}

/// ESU-style enumeration of connected node subsets of size <= `max_nodes`.
/// Returns sorted subsets, each exactly once, in deterministic order.
fn enumerate_occurrences(dag: &RuleApplicationDag, max_nodes: usize) -> Vec<Vec<usize>> {
    let n = dag.node_count();
    let mut und = vec![BTreeSet::new(); n];
    for &(a, b) in dag.edges() {
        und[a as usize].insert(b as usize);
        und[b as usize].insert(a as usize);
    }
    let mut out = Vec::new();
    for v in 0..n {
        let ext: Vec<usize> = und[v].iter().copied().filter(|&u| u > v).collect();
        let mut in_sub = vec![false; n];
        in_sub[v] = true;
        let mut in_hood = vec![false; n];
        for &u in &und[v] {
            in_hood[u] = true;
        }
        extend_subgraph(
            &und,
            v,
            &mut vec![v],
            ext,
            &mut in_sub,
            &mut in_hood,
            max_nodes,
            &mut out,
        );
    }
    out.sort_unstable();
    out
}

#[allow(clippy::too_many_arguments)]
fn extend_subgraph(
    und: &[BTreeSet<usize>],
    root: usize,
    sub: &mut Vec<usize>,
    ext: Vec<usize>,
    in_sub: &mut Vec<bool>,
    in_hood: &mut Vec<bool>,
    max_nodes: usize,
    out: &mut Vec<Vec<usize>>,
) {
    let mut sorted = sub.clone();
    sorted.sort_unstable();
    out.push(sorted);
    if sub.len() == max_nodes {
        return;
    }
    let mut ext = ext;
    while let Some(w) = ext.pop() {
        // Exclusive neighborhood of w: nodes beyond the current subgraph's
        // neighborhood, indexed above the root.
        let mut added_hood = Vec::new();
        let mut next_ext = ext.clone();
        for &u in &und[w] {
            if u > root && !in_sub[u] && !in_hood[u] {
                next_ext.push(u);
            }
        }
        sub.push(w);
        in_sub[w] = true;
        for &u in &und[w] {
            if !in_hood[u] {
                in_hood[u] = true;
                added_hood.push(u);
            }
        }
        extend_subgraph(und, root, sub, next_ext, in_sub, in_hood, max_nodes, out);
        sub.pop();
        in_sub[w] = false;
        for u in added_hood {
            in_hood[u] = false;
        }
    }
}

fn compound_for_subset(
    labels: &[String],
    edges: &[(u32, u32)],
    nodes: &[usize],
) -> (String, Compound) {
    let local_labels: Vec<String> = nodes.iter().map(|&v| labels[v].clone()).collect();
    let mut local_edges = Vec::new();
    for &(a, b) in edges {
        if let (Ok(la), Ok(lb)) = (
            nodes.binary_search(&(a as usize)),
            nodes.binary_search(&(b as usize)),
        ) {
            local_edges.push((la, lb));
        }
    }
    let order = canonical_order(&local_labels, &local_edges);
    let key = render_key(&local_labels, &local_edges, &order);
    let mut pos = vec![0usize; nodes.len()];
    for (p, &orig) in order.iter().enumerate() {
        pos[orig] = p;
    }
    let node_labels: Vec<String> = order.iter().map(|&i| local_labels[i].clone()).collect();
    let mut cedges: Vec<(u32, u32)> = local_edges
        .iter()
        .map(|&(a, b)| (pos[a] as u32, pos[b] as u32))
        .collect();
    cedges.sort_unstable();
    (
        key.clone(),
        Compound {
            node_labels,
            edges: cedges,
            canonical_key: key,
        },
    )
}

/// Pool construction parameters.
#[derive(Clone, Copy, Debug)]
pub struct PoolConfig {
    /// Maximum compound size in nodes.
    pub max_nodes: usize,
    /// Number of top-weighted compounds retained in the pool.
    pub pool_cap: usize,
}

impl Default for PoolConfig {
    fn default() -> Self {
        PoolConfig {
            max_nodes: 7,
            pool_cap: 50_000,
        }
    }
}

/// The compound pool: every compound seen in a sample set, subsumption
/// statistics over the full set, and the top-weighted subset used for
/// divergence measurement.
#[derive(Clone, Debug)]
pub struct CompoundPool {
    pub config: PoolConfig,
    /// All compound keys seen, sorted; index is the compound id.
    keys: Vec<String>,
    key_index: HashMap<String, u32>,
    /// Total occurrences of each compound over the full sample set.
    occ_total: Vec<u64>,
    /// P(super | compound) for every observed strict-supergraph pair.
    super_prob: HashMap<(u32, u32), f64>,
    /// Sum of per-example weights for each compound.
    total_weight: Vec<f64>,
    /// Pool member compound ids, ordered by descending total weight.
    members: Vec<u32>,
    member_pos: HashMap<u32, u32>,
}

/// Per-example compound statistics used during pool construction: each
/// occurrence's canonical key plus the indices of the occurrences that
/// strictly contain it.
struct ExampleOccurrences {
    /// Canonical key of each occurrence.
    keys: Vec<String>,
    /// Per occurrence: indices (into `keys`) of strict supergraph occurrences.
    supers: Vec<Vec<u32>>,
}

fn example_occurrence_stats(dag: &RuleApplicationDag, max_nodes: usize) -> ExampleOccurrences {
    let labels: Vec<String> = dag.nodes().iter().map(Atom::key).collect();
    let subsets = enumerate_occurrences(dag, max_nodes);
    let keys: Vec<String> = subsets
        .iter()
        .map(|nodes| compound_for_subset(&labels, dag.edges(), nodes).0)
        .collect();
    let mut supers: Vec<Vec<u32>> = vec![Vec::new(); subsets.len()];
    // Every strict non-empty subset of an occurrence that is itself connected
    // appears in the occurrence map; record the occurrence as its supergraph.
    if dag.node_count() <= 64 {
        // Fast path: node subsets as bitmasks.
        let mask_of = |nodes: &[usize]| nodes.iter().fold(0u64, |m, &v| m | (1u64 << v));
        let by_mask: HashMap<u64, u32> = subsets
            .iter()
            .enumerate()
            .map(|(i, s)| (mask_of(s), i as u32))
            .collect();
        for (i, nodes) in subsets.iter().enumerate() {
            let k = nodes.len();
            if k < 2 {
                continue;
            }
            for mask in 1..((1u32 << k) - 1) {
                let mut sub = 0u64;
                for (j, &v) in nodes.iter().enumerate() {
                    if mask & (1 << j) != 0 {
                        sub |= 1u64 << v;
                    }
                }
                if let Some(&si) = by_mask.get(&sub) {
                    supers[si as usize].push(i as u32);
                }
            }
        }
    } else {
        let by_subset: HashMap<&[usize], u32> = subsets
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_slice(), i as u32))
            .collect();
        for (i, nodes) in subsets.iter().enumerate() {
            let k = nodes.len();
            if k < 2 {
                continue;
            }
            for mask in 1..((1u64 << k) - 1) {
                let sub: Vec<usize> = (0..k)
                    .filter(|&j| mask & (1 << j) != 0)
                    .map(|j| nodes[j])
                    .collect();
                if let Some(&si) = by_subset.get(sub.as_slice()) {
                    supers[si as usize].push(i as u32);
                }
            }
        }
    }
    ExampleOccurrences { keys, supers }
}

/// Per-example compound weights given final subsumption statistics.
fn example_weights(
    stats: &ExampleOccurrences,
    key_index: &HashMap<String, u32>,
    super_prob: &HashMap<(u32, u32), f64>,
) -> BTreeMap<u32, f64> {
    // w(G) = max over occurrences of (1 - max over supergraphs of P(G'|G)).
    let mut weights: BTreeMap<u32, f64> = BTreeMap::new();
    for (si, supers) in stats.supers.iter().enumerate() {
        let id = key_index[&stats.keys[si]];
        let max_p = supers
            .iter()
            .map(|&i| {
                super_prob
                    .get(&(id, key_index[&stats.keys[i as usize]]))
                    .copied()
                    .unwrap_or(0.0)
            })
            .fold(0.0_f64, f64::max);
        let w = 1.0 - max_p;
        let entry = weights.entry(id).or_insert(w);
        if w > *entry {
            *entry = w;
        }
    }
    weights
}

impl CompoundPool {
    /// Build the pool from a sample set. Examples without DAGs are skipped.
    pub fn build(examples: &[Example], config: PoolConfig) -> Result<CompoundPool> {
        if config.max_nodes == 0 {
            return Err(Error::Config("max_nodes must be at least 1".into()));
        }
        if config.pool_cap == 0 {
            return Err(Error::Config("pool_cap must be at least 1".into()));
        }
        let eligible: Vec<&Example> = examples.iter().filter(|e| e.dag.is_some()).collect();
        if eligible.is_empty() {
            return Err(Error::Domain(
                "no examples with rule application DAGs to build a pool from".into(),
            ));
        }

        // Per-example statistics are recomputed in each pass instead of being
        // stored: corpora like SCAN have tens of thousands of occurrences per
        // example, and holding them all at once dominates memory.
        const BUILD_CHUNK: usize = 512;

        // Pass 1: distinct compound keys and total occurrence counts.
        let occ_count: HashMap<String, u64> = eligible
            .par_chunks(BUILD_CHUNK)
            .map(|chunk| {
                let mut occ: HashMap<String, u64> = HashMap::new();
                for e in chunk {
                    let st = example_occurrence_stats(e.dag.as_ref().unwrap(), config.max_nodes);
                    for key in st.keys {
                        *occ.entry(key).or_insert(0) += 1;
                    }
                }
                occ
            })
            .reduce(HashMap::new, |mut a, b| {
                for (k, c) in b {
                    *a.entry(k).or_insert(0) += c;
                }
                a
            });
        let mut keys: Vec<String> = occ_count.keys().cloned().collect();
        keys.sort_unstable();
        let key_index: HashMap<String, u32> = keys
            .iter()
            .enumerate()
            .map(|(i, k)| (k.clone(), i as u32))
            .collect();
        let occ_total: Vec<u64> = keys.iter().map(|k| occ_count[k]).collect();
        drop(occ_count);

        // Pass 2: supergraph containment counts over interned ids.
        let super_count: HashMap<(u32, u32), u64> = eligible
            .par_chunks(BUILD_CHUNK)
            .map(|chunk| {
                let mut sup: HashMap<(u32, u32), u64> = HashMap::new();
                let mut seen: HashSet<u32> = HashSet::new();
                for e in chunk {
                    let st = example_occurrence_stats(e.dag.as_ref().unwrap(), config.max_nodes);
                    let ids: Vec<u32> = st.keys.iter().map(|k| key_index[k]).collect();
                    for (si, supers) in st.supers.iter().enumerate() {
                        if supers.is_empty() {
                            continue;
                        }
                        // An occurrence counts once per distinct supergraph
                        // key containing it.
                        seen.clear();
                        for &i in supers {
                            let sid = ids[i as usize];
                            if seen.insert(sid) {
                                *sup.entry((ids[si], sid)).or_insert(0) += 1;
                            }
                        }
                    }
                }
                sup
            })
            .reduce(HashMap::new, |mut a, b| {
                for (k, c) in b {
                    *a.entry(k).or_insert(0) += c;
                }
                a
            });
        let super_prob: HashMap<(u32, u32), f64> = super_count
            .into_iter()
            .map(|((g, s), c)| ((g, s), c as f64 / occ_total[g as usize] as f64))
            .collect();

        // Pass 3: total weights. Each chunk accumulates in example order and
        // chunk partials are folded in chunk order, so the result does not
        // depend on the thread count.
        let partials: Vec<Vec<f64>> = eligible
            .par_chunks(BUILD_CHUNK)
            .map(|chunk| {
                let mut tw = vec![0.0f64; keys.len()];
                for e in chunk {
                    let st = example_occurrence_stats(e.dag.as_ref().unwrap(), config.max_nodes);
                    for (id, w) in example_weights(&st, &key_index, &super_prob) {
                        tw[id as usize] += w;
                    }
                }
                tw
            })
            .collect();
        let mut total_weight = vec![0.0f64; keys.len()];
        for partial in partials {
            for (i, v) in partial.into_iter().enumerate() {
                total_weight[i] += v;
            }
        }

        let mut ranked: Vec<u32> = (0..keys.len() as u32).collect();
        ranked.sort_by(|&a, &b| {
            total_weight[b as usize]
                .partial_cmp(&total_weight[a as usize])
                .unwrap()
                .then_with(|| keys[a as usize].cmp(&keys[b as usize]))
        });
        ranked.truncate(config.pool_cap);
        let member_pos: HashMap<u32, u32> = ranked
            .iter()
            .enumerate()
            .map(|(p, &id)| (id, p as u32))
            .collect();

        Ok(CompoundPool {
            config,
            keys,
            key_index,
            occ_total,
            super_prob,
            total_weight,
            members: ranked,
            member_pos,
        })
    }

    /// Number of pool members.
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Pool member keys in rank order (descending total weight).
    pub fn member_keys(&self) -> impl Iterator<Item = &str> {
        self.members.iter().map(|&id| self.keys[id as usize].as_str())
    }

    /// Total occurrences of a compound over the sample set, if seen.
    pub fn occurrence_count_of(&self, key: &str) -> Option<u64> {
        self.key_index
            .get(key)
            .map(|&id| self.occ_total[id as usize])
    }

    /// Total (summed) weight of a compound over the sample set, if seen.
    pub fn total_weight_of(&self, key: &str) -> Option<f64> {
        self.key_index
            .get(key)
            .map(|&id| self.total_weight[id as usize])
    }

    /// Per-example weights of pool-member compounds occurring in `example`,
    /// keyed by canonical key.
    pub fn compute_weights(&self, example: &Example) -> Result<BTreeMap<String, f64>> {
        Ok(self
            .member_weights(example)?
            .into_iter()
            .map(|(pos, w)| (self.keys[self.members[pos as usize] as usize].clone(), w))
            .collect())
    }

    /// Per-example weights keyed by pool member rank (dense id for vectors).
    pub fn member_weights(&self, example: &Example) -> Result<Vec<(u32, f64)>> {
        let dag = example.dag.as_ref().ok_or_else(|| {
            Error::Domain(format!(
                "example {} has no rule application DAG",
                example.id
            ))
        })?;
        let stats = example_occurrence_stats(dag, self.config.max_nodes);
        // Weights must use global statistics; compounds never seen during
        // pool construction carry no statistics and are skipped.
        let mut weights: BTreeMap<u32, f64> = BTreeMap::new();
        for (si, supers) in stats.supers.iter().enumerate() {
            let Some(&id) = self.key_index.get(&stats.keys[si]) else {
                continue;
            };
            let Some(&pos) = self.member_pos.get(&id) else {
                continue;
            };
            let max_p = supers
                .iter()
                .filter_map(|&i| self.key_index.get(&stats.keys[i as usize]))
                .filter_map(|&sid| self.super_prob.get(&(id, sid)))
                .fold(0.0_f64, |acc, &p| acc.max(p));
            let w = 1.0 - max_p;
            let entry = weights.entry(pos).or_insert(w);
            if w > *entry {
                *entry = w;
            }
        }
        Ok(weights.into_iter().collect())
    }

    /// Reconstruct the structure of a pool member from its canonical key.
    pub fn member_compound(&self, key: &str) -> Option<Compound> {
        self.key_index.get(key)?;
        Some(parse_key(key))
    }
}

/// Parse a canonical key back into a compound structure.
fn parse_key(key: &str) -> Compound {
    match key.split_once(EDGE_SEP) {
        None => Compound {
            node_labels: vec![key.to_string()],
            edges: Vec::new(),
            canonical_key: key.to_string(),
        },
        Some((labels, edges)) => {
            let node_labels: Vec<String> = labels.split(LABEL_SEP).map(str::to_string).collect();
            let edges: Vec<(u32, u32)> = if edges.is_empty() {
                Vec::new()
            } else {
                edges
                    .split(',')
                    .map(|e| {
                        let (a, b) = e.split_once('>').expect("canonical key edge");
                        (a.parse().unwrap(), b.parse().unwrap())
                    })
                    .collect()
            };
            Compound {
                node_labels,
                edges,
                canonical_key: key.to_string(),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn atom(name: &str) -> Atom {
        Atom::new(RuleType::Grammar, name)
    }

    fn dag(names: &[&str], edges: &[(u32, u32)]) -> RuleApplicationDag {
        RuleApplicationDag::new(names.iter().map(|n| atom(n)).collect(), edges.to_vec()).unwrap()
    }

    #[test]
    fn rejects_cycles_and_bad_edges() {
        let nodes = vec![atom("a"), atom("b")];
        assert!(RuleApplicationDag::new(nodes.clone(), vec![(0, 1), (1, 0)]).is_err());
        assert!(RuleApplicationDag::new(nodes.clone(), vec![(0, 5)]).is_err());
        assert!(RuleApplicationDag::new(nodes, vec![(0, 0)]).is_err());
    }

    #[test]
    fn single_node_key_is_label() {
        let key = canonical_key(&["G:S=WHQ".to_string()], &[]).unwrap();
        assert_eq!(key, "G:S=WHQ");
    }

    #[test]
    fn canonical_key_rejects_cycles() {
        let labels = vec!["a".to_string(), "b".to_string()];
        assert!(canonical_key(&labels, &[(0, 1), (1, 0)]).is_err());
    }

    #[test]
    fn canonical_key_invariant_under_relabeling() {
        let labels = vec![
            "x".to_string(),
            "y".to_string(),
            "y".to_string(),
            "z".to_string(),
        ];
        let edges = vec![(0, 1), (0, 2), (1, 3), (2, 3)];
        let base = canonical_key(&labels, &edges).unwrap();
        // Permute node indices; key must not change.
        let perm = [2usize, 0, 3, 1];
        let plabels: Vec<String> = {
            let mut v = vec![String::new(); 4];
            for (old, &new) in perm.iter().enumerate() {
                v[new] = labels[old].clone();
            }
            v
        };
        let pedges: Vec<(usize, usize)> = edges.iter().map(|&(a, b)| (perm[a], perm[b])).collect();
        assert_eq!(canonical_key(&plabels, &pedges).unwrap(), base);
    }

    /// Brute-force isomorphism check used as an oracle for canonical keys.
    fn isomorphic(
        l1: &[String],
        e1: &[(usize, usize)],
        l2: &[String],
        e2: &[(usize, usize)],
    ) -> bool {
        if l1.len() != l2.len() || e1.len() != e2.len() {
            return false;
        }
        let n = l1.len();
        let set2: HashSet<(usize, usize)> = e2.iter().copied().collect();
        let mut idx: Vec<usize> = (0..n).collect();
        // Heap's algorithm is overkill; use simple permutations via sorting.
        let mut perms = Vec::new();
        permute(&mut idx, 0, &mut perms);
        perms.iter().any(|p| {
            (0..n).all(|v| l1[v] == l2[p[v]])
                && e1.iter().all(|&(a, b)| set2.contains(&(p[a], p[b])))
        })
    }

    fn permute(idx: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
        if k == idx.len() {
            out.push(idx.clone());
            return;
        }
        for i in k..idx.len() {
            idx.swap(k, i);
            permute(idx, k + 1, out);
            idx.swap(k, i);
        }
    }

    fn random_dag(rng: &mut ChaCha8Rng, n: usize, labels: &[&str]) -> (Vec<String>, Vec<(usize, usize)>) {
        let ls: Vec<String> = (0..n)
            .map(|_| labels[rng.gen_range(0..labels.len())].to_string())
            .collect();
        let mut edges = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                if rng.gen_bool(0.45) {
                    edges.push((a, b));
                }
            }
        }
        (ls, edges)
    }

    #[test]
    fn canonical_key_matches_brute_force_isomorphism() {
        // Equal keys iff isomorphic, over random labeled DAGs up to 6 nodes.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let alphabet = ["p", "q", "r"];
        let mut graphs = Vec::new();
        for _ in 0..120 {
            let n = rng.gen_range(2..=6);
            graphs.push(random_dag(&mut rng, n, &alphabet));
        }
        for i in 0..graphs.len() {
            for j in (i + 1)..graphs.len() {
                let (l1, e1) = &graphs[i];
                let (l2, e2) = &graphs[j];
                if l1.len() != l2.len() {
                    continue;
                }
                let k1 = canonical_key(l1, e1).unwrap();
                let k2 = canonical_key(l2, e2).unwrap();
                assert_eq!(
                    k1 == k2,
                    isomorphic(l1, e1, l2, e2),
                    "canonical key disagreement on graphs {i} and {j}"
                );
            }
        }
    }

    #[test]
    fn normalize_is_idempotent_and_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let alphabet = ["a", "b", "c", "d"];
        for _ in 0..100 {
            let n = rng.gen_range(2..=7);
            let (labels, edges) = random_dag(&mut rng, n, &alphabet);
            let nodes: Vec<Atom> = labels.iter().map(|l| atom(l)).collect();
            let edges32: Vec<(u32, u32)> = edges.iter().map(|&(a, b)| (a as u32, b as u32)).collect();
            let d = RuleApplicationDag::new(nodes.clone(), edges32.clone()).unwrap();
            let norm = d.normalize();
            assert_eq!(norm.normalize(), norm, "normalize must be idempotent");

            // Random permutation of node ids must normalize identically.
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let mut pnodes = vec![atom("x"); n];
            for (old, &new) in perm.iter().enumerate() {
                pnodes[new] = nodes[old].clone();
            }
            let pedges: Vec<(u32, u32)> = edges
                .iter()
                .map(|&(a, b)| (perm[a] as u32, perm[b] as u32))
                .collect();
            let pd = RuleApplicationDag::new(pnodes, pedges).unwrap();
            assert_eq!(pd.normalize(), norm);
        }
    }

    #[test]
    fn transitive_reduction_drops_implied_edges() {
        let d = dag(&["a", "b", "c"], &[(0, 1), (1, 2), (0, 2)]);
        let norm = d.normalize();
        assert_eq!(norm.edges().len(), 2);
        // Reduced graph keeps the same reachability (a before b before c).
        assert_eq!(norm.canonical_signature(), dag(&["a", "b", "c"], &[(0, 1), (1, 2)]).normalize().canonical_signature());
    }

    /// Brute-force connected-subset enumeration used as an oracle for ESU.
    fn brute_force_subsets(d: &RuleApplicationDag, max_nodes: usize) -> Vec<Vec<usize>> {
        let n = d.node_count();
        let mut und = vec![BTreeSet::new(); n];
        for &(a, b) in d.edges() {
            und[a as usize].insert(b as usize);
            und[b as usize].insert(a as usize);
        }
        let mut out = Vec::new();
        for mask in 1u32..(1 << n) {
            let nodes: Vec<usize> = (0..n).filter(|&v| mask & (1 << v) != 0).collect();
            if nodes.len() > max_nodes {
                continue;
            }
            // Connectivity check via BFS over the subset.
            let mut seen = vec![nodes[0]];
            let mut frontier = vec![nodes[0]];
            while let Some(v) = frontier.pop() {
                for &u in &und[v] {
                    if nodes.contains(&u) && !seen.contains(&u) {
                        seen.push(u);
                        frontier.push(u);
                    }
                }
            }
            if seen.len() == nodes.len() {
                out.push(nodes);
            }
        }
        out.sort_unstable();
        out
    }

    #[test]
    fn esu_matches_brute_force_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let alphabet = ["a", "b"];
        for _ in 0..60 {
            let n = rng.gen_range(1..=9);
            let (labels, edges) = random_dag(&mut rng, n, &alphabet);
            let nodes: Vec<Atom> = labels.iter().map(|l| atom(l)).collect();
            let edges32: Vec<(u32, u32)> = edges.iter().map(|&(a, b)| (a as u32, b as u32)).collect();
            let d = RuleApplicationDag::new(nodes, edges32).unwrap();
            for max_nodes in 1..=4 {
                let got = enumerate_occurrences(&d, max_nodes);
                let want = brute_force_subsets(&d, max_nodes);
                assert_eq!(got, want, "n={n} max_nodes={max_nodes}");
            }
        }
    }

    fn example_with_dag(id: usize, d: RuleApplicationDag) -> Example {
        Example {
            id,
            kind: crate::example::ExampleKind::Scan,
            input: String::new(),
            output: String::new(),
            complexity: d.node_count(),
            input_length: 0,
            output_length: 0,
            dag: Some(d.normalize()),
            extras: None,
        }
    }

    #[test]
    fn weight_is_zero_when_always_subsumed() {
        // Every example is the same chain a -> b -> c. Every strict
        // sub-compound always extends to the same supergraph, so only the
        // maximal compound has positive weight.
        let examples: Vec<Example> = (0..5)
            .map(|i| example_with_dag(i, dag(&["a", "b", "c"], &[(0, 1), (1, 2)])))
            .collect();
        let pool = CompoundPool::build(&examples, PoolConfig { max_nodes: 3, pool_cap: 100 }).unwrap();
        let full_key = canonical_key(
            &["G:a".into(), "G:b".into(), "G:c".into()],
            &[(0, 1), (1, 2)],
        )
        .unwrap();
        assert_eq!(pool.total_weight_of(&full_key), Some(5.0));
        assert_eq!(pool.total_weight_of("G:a"), Some(0.0));
        let ab = canonical_key(&["G:a".into(), "G:b".into()], &[(0, 1)]).unwrap();
        assert_eq!(pool.total_weight_of(&ab), Some(0.0));
    }

    #[test]
    fn weight_is_one_without_supergraphs() {
        // max_nodes = 1: single atoms have no supergraphs at all.
        let examples: Vec<Example> = (0..3)
            .map(|i| example_with_dag(i, dag(&["a", "b"], &[(0, 1)])))
            .collect();
        let pool = CompoundPool::build(&examples, PoolConfig { max_nodes: 1, pool_cap: 100 }).unwrap();
        assert_eq!(pool.total_weight_of("G:a"), Some(3.0));
        let w = pool.compute_weights(&examples[0]).unwrap();
        assert_eq!(w["G:a"], 1.0);
        assert_eq!(w["G:b"], 1.0);
    }

    #[test]
    fn varied_contexts_yield_intermediate_weights() {
        // "b" extends to a->b in half the examples and c->b in the other
        // half, so P(super|b) = 0.5 for each and w(b) = 0.5.
        let mut examples = Vec::new();
        for i in 0..4 {
            examples.push(example_with_dag(i, dag(&["a", "b"], &[(0, 1)])));
        }
        for i in 4..8 {
            examples.push(example_with_dag(i, dag(&["c", "b"], &[(0, 1)])));
        }
        let pool = CompoundPool::build(&examples, PoolConfig { max_nodes: 2, pool_cap: 100 }).unwrap();
        let w = pool.compute_weights(&examples[0]).unwrap();
        assert!((w["G:b"] - 0.5).abs() < 1e-12);
        // The pair compounds themselves are maximal: weight 1 per example.
        let ab = canonical_key(&["G:a".into(), "G:b".into()], &[(0, 1)]).unwrap();
        assert!((w[&ab] - 1.0).abs() < 1e-12);
    }

    /// Brute-force weight oracle: recompute w(G) per example directly from
    /// the definition, without any of the pool's incremental bookkeeping.
    #[test]
    fn pool_weights_match_brute_force_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let alphabet = ["a", "b", "c"];
        let mut examples = Vec::new();
        for i in 0..20 {
            let n = rng.gen_range(2..=6);
            let (labels, edges) = random_dag(&mut rng, n, &alphabet);
            let nodes: Vec<Atom> = labels.iter().map(|l| atom(l)).collect();
            let edges32: Vec<(u32, u32)> = edges.iter().map(|&(a, b)| (a as u32, b as u32)).collect();
            examples.push(example_with_dag(
                i,
                RuleApplicationDag::new(nodes, edges32).unwrap(),
            ));
        }
        let config = PoolConfig { max_nodes: 3, pool_cap: 10_000 };
        let pool = CompoundPool::build(&examples, config).unwrap();

        // Oracle: enumerate everything with the public API only.
        let mut occs: HashMap<String, Vec<(usize, Vec<u32>)>> = HashMap::new();
        for e in &examples {
            for (c, o) in enumerate_subgraphs(e.dag.as_ref().unwrap(), 3, e.id).unwrap() {
                occs.entry(c.canonical_key).or_default().push((o.example_id, o.nodes));
            }
        }
        let is_sub = |small: &[u32], big: &[u32]| small.iter().all(|v| big.contains(v));
        for e in &examples {
            let got = pool.compute_weights(e).unwrap();
            // Recompute each weight from the definition.
            for (key, &w) in &got {
                let all = &occs[key];
                let mut best = f64::MIN;
                for (ex, nodes) in all.iter().filter(|(ex, _)| *ex == e.id) {
                    // max over supergraph kinds of P(G'|G) for this occurrence
                    let mut worst = 0.0f64;
                    for (skey, soccs) in &occs {
                        if skey == key {
                            continue;
                        }
                        let covers = soccs
                            .iter()
                            .any(|(sex, snodes)| sex == ex && snodes.len() > nodes.len() && is_sub(nodes, snodes));
                        if !covers {
                            continue;
                        }
                        // P(G'|G): fraction of all occurrences of G extended by G'.
                        let total = all.len() as f64;
                        let covered = all
                            .iter()
                            .filter(|(gex, gnodes)| {
                                soccs.iter().any(|(sex, snodes)| {
                                    sex == gex && snodes.len() > gnodes.len() && is_sub(gnodes, snodes)
                                })
                            })
                            .count() as f64;
                        worst = worst.max(covered / total);
                    }
                    best = best.max(1.0 - worst);
                }
                assert!(
                    (w - best).abs() < 1e-12,
                    "weight mismatch for {key} in example {}: got {w}, oracle {best}",
                    e.id
                );
            }
        }
    }
}
