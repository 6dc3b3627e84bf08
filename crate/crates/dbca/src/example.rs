//! Dataset examples: an input/output pair plus its rule application DAG.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::compounds::{Atom, RuleApplicationDag};

/// Which family of surface conventions an example follows. SCAN examples are
/// lowercase command/action-sequence pairs; CFQ-style examples are questions
/// paired with SPARQL queries.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum ExampleKind {
    Scan,
    Cfq,
}

/// Raw fields preserved from ingested CFQ-style records so that patterns and
/// divergences can reuse the published values where they exist.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct CfqExtras {
    /// `questionPatternModEntities`: question with entities anonymized.
    pub question_pattern_mod_entities: Option<String>,
    /// `sparqlPatternModEntities`: query with entity MIDs anonymized.
    pub sparql_pattern_mod_entities: Option<String>,
    /// `sparqlPattern`: query with entities and properties anonymized.
    pub sparql_pattern: Option<String>,
    /// `expectedResponse` rendered to text, when present.
    pub expected_response: Option<String>,
    /// Rules listed in `aggregatedRuleInfo` (presence only, no counts).
    pub aggregated_rules: Vec<Atom>,
    /// Numeric `complexityMeasures` fields, passed through verbatim.
    pub complexity_measures: BTreeMap<String, f64>,
}

/// One dataset example.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Example {
    /// Position of the example in its dataset; split files index by this.
    pub id: usize,
    pub kind: ExampleKind,
    /// Question or command text.
    pub input: String,
    /// SPARQL query or action sequence.
    pub output: String,
    /// Normalized rule application DAG. `None` for ingested records that did
    /// not carry one; such examples are ineligible for divergence statistics.
    pub dag: Option<RuleApplicationDag>,
    /// Node count of `dag` (0 when absent); the complexity level used by the
    /// subsampler.
    pub complexity: usize,
    /// Token count of the input (parse tree leaves for generated examples).
    pub input_length: usize,
    /// Output size: action count for SCAN, constraint (triple + FILTER)
    /// count for queries.
    pub output_length: usize,
    /// Preserved fields from ingested CFQ records.
    pub extras: Option<Box<CfqExtras>>,
}

impl Example {
    /// True when the example can contribute to atom/compound distributions.
    pub fn divergence_eligible(&self) -> bool {
        self.dag.is_some()
    }
}
