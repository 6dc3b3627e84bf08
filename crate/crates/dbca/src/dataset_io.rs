//! Dataset and split file input/output.
//!
//! Reads CFQ-format records — either a single JSON array or JSON lines —
//! into [`Example`]s, writes generated datasets back out as JSON lines, and
//! round-trips split index files. Reading is streaming: records are carved
//! out of the byte stream one at a time by a small balanced-brace scanner,
//! so peak memory stays bounded by one record plus the accumulated examples.
//!
//! Rule application DAGs are reconstructed from the `ruleTree` field, whose
//! nested `{ruleId, subTree}` nodes yield tree-shaped dependencies only; the
//! sharing present in the original derivation is not recoverable from it.
//! Datasets written by this module therefore add a `ruleDag` field carrying
//! the exact node and edge lists, which takes precedence when reading.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::compounds::{Atom, RuleApplicationDag, RuleType};
use crate::error::{Error, Result};
use crate::example::{CfqExtras, Example, ExampleKind};
use crate::metrics;
use crate::splitter::Split;

// -- record schema -----------------------------------------------------------

/// A rule reference as it appears in `aggregatedRuleInfo`, `ruleTree`, and
/// `ruleDag` entries.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct RuleRef {
    #[serde(rename = "type")]
    rule_type: String,
    #[serde(rename = "stringValue")]
    string_value: String,
}

impl RuleRef {
    fn atom(&self) -> Atom {
        Atom::new(RuleType::from_dataset_name(&self.rule_type), &self.string_value)
    }

    fn from_atom(atom: &Atom) -> RuleRef {
        RuleRef {
            rule_type: atom.rule_type.dataset_name().to_string(),
            string_value: atom.name.clone(),
        }
    }
}

/// Recursive `ruleTree` node.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct RuleTreeNode {
    #[serde(rename = "ruleId")]
    rule_id: RuleRef,
    #[serde(rename = "subTree", default)]
    sub_tree: Vec<RuleTreeNode>,
}

/// Exact DAG emitted alongside generated records.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct RuleDagJson {
    nodes: Vec<RuleRef>,
    edges: Vec<(u32, u32)>,
}

/// One dataset record, using the published CFQ field names.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
struct DatasetRecord {
    #[serde(skip_serializing_if = "Option::is_none")]
    question: Option<String>,
    #[serde(rename = "questionWithBrackets", skip_serializing_if = "Option::is_none")]
    question_with_brackets: Option<String>,
    #[serde(
        rename = "questionPatternModEntities",
        skip_serializing_if = "Option::is_none"
    )]
    question_pattern_mod_entities: Option<String>,
    #[serde(rename = "expectedResponse", skip_serializing_if = "Option::is_none")]
    expected_response: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sparql: Option<String>,
    #[serde(
        rename = "sparqlPatternModEntities",
        skip_serializing_if = "Option::is_none"
    )]
    sparql_pattern_mod_entities: Option<String>,
    #[serde(rename = "sparqlPattern", skip_serializing_if = "Option::is_none")]
    sparql_pattern: Option<String>,
    #[serde(rename = "complexityMeasures", skip_serializing_if = "Option::is_none")]
    complexity_measures: Option<BTreeMap<String, serde_json::Value>>,
    #[serde(rename = "aggregatedRuleInfo", skip_serializing_if = "Option::is_none")]
    aggregated_rule_info: Option<Vec<RuleRef>>,
    #[serde(rename = "ruleTree", skip_serializing_if = "Option::is_none")]
    rule_tree: Option<RuleTreeNode>,
    #[serde(rename = "ruleDag", skip_serializing_if = "Option::is_none")]
    rule_dag: Option<RuleDagJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kind: Option<String>,
}

// -- streaming record scanner ------------------------------------------------

/// Pulls balanced top-level `{...}` objects out of a byte stream, accepting
/// both a surrounding JSON array and bare JSON-lines layout.
struct RecordScanner<R: Read> {
    bytes: std::io::Bytes<BufReader<R>>,
    index: usize,
}

impl<R: Read> RecordScanner<R> {
    fn new(reader: R) -> RecordScanner<R> {
        RecordScanner {
            bytes: BufReader::new(reader).bytes(),
            index: 0,
        }
    }

    fn next_record(&mut self) -> Result<Option<String>> {
        // Skip array punctuation and whitespace until the next object.
        loop {
            match self.bytes.next().transpose()? {
                None => return Ok(None),
                Some(b) if b.is_ascii_whitespace() || matches!(b, b',' | b'[' | b']') => {}
                Some(b'{') => break,
                Some(b) => {
                    return Err(Error::Data(format!(
                        "unexpected byte {:?} before record {}",
                        b as char, self.index
                    )))
                }
            }
        }
        let mut buf = vec![b'{'];
        let mut depth = 1usize;
        let mut in_string = false;
        let mut escaped = false;
        while depth > 0 {
            let b = self.bytes.next().transpose()?.ok_or_else(|| {
                Error::Data(format!("unterminated record {}", self.index))
            })?;
            buf.push(b);
            if in_string {
                if escaped {
                    escaped = false;
                } else if b == b'\\' {
                    escaped = true;
                } else if b == b'"' {
                    in_string = false;
                }
            } else {
                match b {
                    b'"' => in_string = true,
                    b'{' => depth += 1,
                    b'}' => depth -= 1,
                    _ => {}
                }
            }
        }
        self.index += 1;
        String::from_utf8(buf)
            .map(Some)
            .map_err(|e| Error::Data(format!("record {} is not UTF-8: {e}", self.index - 1)))
    }
}

// -- conversion --------------------------------------------------------------

fn dag_from_tree(tree: &RuleTreeNode) -> Result<RuleApplicationDag> {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    fn walk(
        node: &RuleTreeNode,
        nodes: &mut Vec<Atom>,
        edges: &mut Vec<(u32, u32)>,
    ) -> u32 {
        let id = nodes.len() as u32;
        nodes.push(node.rule_id.atom());
        for child in &node.sub_tree {
            let c = walk(child, nodes, edges);
            edges.push((c, id));
        }
        id
    }
    walk(tree, &mut nodes, &mut edges);
    Ok(RuleApplicationDag::new(nodes, edges)?.normalize())
}

fn example_from_record(record: DatasetRecord, id: usize) -> Result<Example> {
    let kind = match record.kind.as_deref() {
        Some("scan") => ExampleKind::Scan,
        _ => ExampleKind::Cfq,
    };
    let input = record
        .question
        .or(record.question_with_brackets)
        .ok_or_else(|| Error::Data(format!("record {id} has no question")))?;
    let output = record
        .sparql
        .ok_or_else(|| Error::Data(format!("record {id} has no sparql")))?;
    let dag = match (&record.rule_dag, &record.rule_tree) {
        (Some(dag), _) => Some(
            RuleApplicationDag::new(
                dag.nodes.iter().map(RuleRef::atom).collect(),
                dag.edges.clone(),
            )
            .map_err(|e| Error::Data(format!("record {id}: {e}")))?
            .normalize(),
        ),
        (None, Some(tree)) => {
            Some(dag_from_tree(tree).map_err(|e| Error::Data(format!("record {id}: {e}")))?)
        }
        (None, None) => None,
    };
    let mut complexity_measures = BTreeMap::new();
    if let Some(measures) = &record.complexity_measures {
        for (k, v) in measures {
            if let Some(x) = v.as_f64() {
                complexity_measures.insert(k.clone(), x);
            }
        }
    }
    let input_length = complexity_measures
        .get("parseTreeLeafCount")
        .map(|&x| x as usize)
        .unwrap_or_else(|| input.split_whitespace().count());
    let output_length = match kind {
        ExampleKind::Scan => output.split_whitespace().count(),
        ExampleKind::Cfq => complexity_measures
            .get("sparqlNumConstraints")
            .map(|&x| x as usize)
            .unwrap_or_else(|| {
                let (triples, filters) = metrics::query_constraints(&output);
                triples + filters
            }),
    };
    let extras = CfqExtras {
        question_pattern_mod_entities: record.question_pattern_mod_entities,
        sparql_pattern_mod_entities: record.sparql_pattern_mod_entities,
        sparql_pattern: record.sparql_pattern,
        expected_response: record.expected_response.map(|v| match v {
            serde_json::Value::String(s) => s,
            other => other.to_string(),
        }),
        aggregated_rules: record
            .aggregated_rule_info
            .unwrap_or_default()
            .iter()
            .map(RuleRef::atom)
            .collect(),
        complexity_measures,
    };
    Ok(Example {
        id,
        kind,
        complexity: dag.as_ref().map_or(0, |d| d.node_count()),
        input_length,
        output_length,
        input,
        output,
        dag,
        extras: Some(Box::new(extras)),
    })
}

fn record_from_example(example: &Example) -> DatasetRecord {
    let mut record = DatasetRecord {
        question: Some(example.input.clone()),
        sparql: Some(example.output.clone()),
        kind: Some(
            match example.kind {
                ExampleKind::Scan => "scan",
                ExampleKind::Cfq => "cfq",
            }
            .to_string(),
        ),
        ..DatasetRecord::default()
    };
    if let Some(extras) = &example.extras {
        record.question_pattern_mod_entities = extras.question_pattern_mod_entities.clone();
        record.sparql_pattern_mod_entities = extras.sparql_pattern_mod_entities.clone();
        record.sparql_pattern = extras.sparql_pattern.clone();
        record.expected_response = extras
            .expected_response
            .clone()
            .map(serde_json::Value::String);
        if !extras.aggregated_rules.is_empty() {
            record.aggregated_rule_info =
                Some(extras.aggregated_rules.iter().map(RuleRef::from_atom).collect());
        }
        if !extras.complexity_measures.is_empty() {
            record.complexity_measures = Some(
                extras
                    .complexity_measures
                    .iter()
                    .map(|(k, &v)| (k.clone(), serde_json::json!(v)))
                    .collect(),
            );
        }
    }
    let mut measures = record.complexity_measures.take().unwrap_or_default();
    measures
        .entry("parseTreeLeafCount".to_string())
        .or_insert_with(|| serde_json::json!(example.input_length));
    if example.kind == ExampleKind::Cfq {
        measures
            .entry("sparqlNumConstraints".to_string())
            .or_insert_with(|| serde_json::json!(example.output_length));
    }
    record.complexity_measures = Some(measures);
    if let Some(dag) = &example.dag {
        record.rule_dag = Some(RuleDagJson {
            nodes: dag.nodes().iter().map(RuleRef::from_atom).collect(),
            edges: dag.edges().to_vec(),
        });
        if record.aggregated_rule_info.is_none() {
            let mut atoms: Vec<&Atom> = dag.nodes().iter().collect();
            atoms.sort();
            atoms.dedup();
            record.aggregated_rule_info =
                Some(atoms.into_iter().map(RuleRef::from_atom).collect());
        }
    }
    record
}

// -- public API --------------------------------------------------------------

/// Read a dataset file (JSON array or JSON lines of records) into examples.
/// Record order becomes the example ids.
pub fn read_dataset(path: impl AsRef<Path>) -> Result<Vec<Example>> {
    read_dataset_from(File::open(path)?)
}

/// [`read_dataset`] over any byte source.
pub fn read_dataset_from(reader: impl Read) -> Result<Vec<Example>> {
    let mut scanner = RecordScanner::new(reader);
    let mut out = Vec::new();
    while let Some(text) = scanner.next_record()? {
        let id = out.len();
        let record: DatasetRecord = serde_json::from_str(&text)
            .map_err(|e| Error::Data(format!("record {id}: {e}")))?;
        out.push(example_from_record(record, id)?);
    }
    Ok(out)
}

/// Write examples as JSON lines, one record per example.
pub fn write_dataset(examples: &[Example], path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_dataset_to(examples, &mut w)?;
    w.flush()?;
    Ok(())
}

/// [`write_dataset`] over any byte sink.
pub fn write_dataset_to(examples: &[Example], writer: &mut impl Write) -> Result<()> {
    for example in examples {
        let record = record_from_example(example);
        serde_json::to_writer(&mut *writer, &record)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// JSON schema of split index files.
#[derive(Serialize, Deserialize)]
struct SplitJson {
    #[serde(rename = "trainIdxs")]
    train_idxs: Vec<usize>,
    #[serde(rename = "devIdxs")]
    dev_idxs: Vec<usize>,
    #[serde(rename = "testIdxs")]
    test_idxs: Vec<usize>,
}

/// Read a split index file, rejecting overlapping indices. Bounds against a
/// particular dataset are checked separately by [`Split::validate`].
pub fn read_split(path: impl AsRef<Path>) -> Result<Split> {
    let json: SplitJson = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    let split = Split {
        train: json.train_idxs,
        validation: json.dev_idxs,
        test: json.test_idxs,
    };
    let max = split
        .train
        .iter()
        .chain(&split.validation)
        .chain(&split.test)
        .max()
        .copied()
        .map_or(0, |m| m + 1);
    split.validate(max)?;
    Ok(split)
}

/// Write a split index file.
pub fn write_split(split: &Split, path: impl AsRef<Path>) -> Result<()> {
    let json = SplitJson {
        train_idxs: split.train.clone(),
        dev_idxs: split.validation.clone(),
        test_idxs: split.test.clone(),
    };
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, &json)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"[
      {
        "question": "Who directed [Inception]",
        "questionPatternModEntities": "Who directed M0",
        "sparql": "SELECT DISTINCT ?x0 WHERE { ?x0 a ns:people.person . ?x0 ns:film.director.film M0 }",
        "sparqlPatternModEntities": "SELECT DISTINCT ?x0 WHERE { ?x0 a ns:people.person . ?x0 ns:film.director.film M0 }",
        "complexityMeasures": {"parseTreeLeafCount": 3, "sparqlNumConstraints": 2},
        "aggregatedRuleInfo": [{"type": "GRAMMAR_RULE", "stringValue": "S=WHQ"}],
        "ruleTree": {
          "ruleId": {"type": "GRAMMAR_RULE", "stringValue": "S=WHQ"},
          "subTree": [
            {"ruleId": {"type": "GRAMMAR_RULE", "stringValue": "WHO"}, "subTree": []},
            {"ruleId": {"type": "SPARQL_GENERATION", "stringValue": "GET_SPECIALIZATIONS"}, "subTree": []}
          ]
        }
      },
      {
        "question": "Who acted",
        "sparql": "SELECT count(*) WHERE { ?x0 a ns:film.actor }"
      }
    ]"#;

    #[test]
    fn reads_array_and_jsonl_identically() {
        let from_array = read_dataset_from(SAMPLE.as_bytes()).unwrap();
        let jsonl = {
            let mut buf = Vec::new();
            write_dataset_to(&from_array, &mut buf).unwrap();
            buf
        };
        let from_lines = read_dataset_from(jsonl.as_slice()).unwrap();
        assert_eq!(from_array.len(), 2);
        assert_eq!(from_lines.len(), 2);
        for (a, b) in from_array.iter().zip(&from_lines) {
            assert_eq!(a.input, b.input);
            assert_eq!(a.output, b.output);
            assert_eq!(a.dag, b.dag);
        }
    }

    #[test]
    fn rule_tree_reconstruction_and_missing_tree() {
        let examples = read_dataset_from(SAMPLE.as_bytes()).unwrap();
        let dag = examples[0].dag.as_ref().unwrap();
        assert_eq!(dag.node_count(), 3);
        assert_eq!(dag.edges().len(), 2);
        assert!(examples[0].divergence_eligible());
        assert!(!examples[1].divergence_eligible());
        assert_eq!(examples[0].input_length, 3);
        assert_eq!(examples[0].output_length, 2);
        let extras = examples[0].extras.as_ref().unwrap();
        assert_eq!(
            extras.question_pattern_mod_entities.as_deref(),
            Some("Who directed M0")
        );
        assert_eq!(extras.aggregated_rules.len(), 1);
    }

    #[test]
    fn written_dag_round_trips_exactly() {
        let ruleset = crate::rulesets::builtin_mini_cfq();
        let generator = crate::gramgen::engine::Generator::new(&ruleset).unwrap();
        let examples = generator.generate_all().unwrap();
        let mut buf = Vec::new();
        write_dataset_to(&examples, &mut buf).unwrap();
        let back = read_dataset_from(buf.as_slice()).unwrap();
        assert_eq!(back.len(), examples.len());
        for (a, b) in examples.iter().zip(&back) {
            assert_eq!(a.input, b.input);
            assert_eq!(a.output, b.output);
            assert_eq!(a.input_length, b.input_length);
            assert_eq!(a.output_length, b.output_length);
            assert_eq!(a.dag, b.dag);
            assert_eq!(a.complexity, b.complexity);
        }
    }

    #[test]
    fn malformed_record_reports_its_index() {
        let bad = r#"{"question": "a", "sparql": "b"}
{"question": 5}"#;
        let err = read_dataset_from(bad.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("record 1"), "{err}");
    }

    #[test]
    fn split_round_trip_and_overlap_rejection() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("split.json");
        let split = Split {
            train: vec![0, 1],
            validation: vec![2],
            test: vec![3],
        };
        write_split(&split, &path).unwrap();
        assert_eq!(read_split(&path).unwrap(), split);

        std::fs::write(
            &path,
            r#"{"trainIdxs": [0, 1], "devIdxs": [1], "testIdxs": [2]}"#,
        )
        .unwrap();
        let err = read_split(&path).unwrap_err();
        assert!(err.to_string().contains("1"), "{err}");
    }

    #[test]
    fn scanner_rejects_garbage() {
        let err = read_dataset_from("not json".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("unexpected byte"), "{err}");
    }
}
