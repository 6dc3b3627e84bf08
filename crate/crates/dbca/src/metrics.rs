//! Pattern anonymization, length measures, and split reports.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::example::{Example, ExampleKind};
use crate::splitter::Split;

/// Anonymization mode for query patterns.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QueryPatternMode {
    /// Anonymize entity MIDs only (`M0`, `M1`, ...).
    ModEntities,
    /// Anonymize entities and properties (`P0`, `P1`, ...).
    ModEntitiesAndProperties,
}

/// Question pattern: bracketed entity spans become `M0`, `M1`, ... in order
/// of appearance; repeated named entities share a placeholder. Anonymous
/// `[entity]` placeholders are always distinct entities.
pub fn question_pattern(question: &str) -> String {
    let mut out = String::new();
    let mut seen: Vec<String> = Vec::new();
    let mut rest = question;
    while let Some(start) = rest.find('[') {
        out.push_str(&rest[..start]);
        let tail = &rest[start..];
        match tail.find(']') {
            None => {
                out.push_str(tail);
                rest = "";
                break;
            }
            Some(end) => {
                let span = &tail[..=end];
                let idx = if span == "[entity]" {
                    seen.push(String::new());
                    seen.len() - 1
                } else {
                    match seen.iter().position(|s| s == span) {
                        Some(i) => i,
                        None => {
                            seen.push(span.to_string());
                            seen.len() - 1
                        }
                    }
                };
                out.push_str(&format!("M{idx}"));
                rest = &tail[end + 1..];
            }
        }
    }
    out.push_str(rest);
    out
}

/// Query pattern: tokens starting `ns:m.` become `M0`, `M1`, ... (repeats
/// share a placeholder); in the entities-and-properties mode all other `ns:`
/// tokens become `P0`, `P1`, ....
pub fn query_pattern(sparql: &str, mode: QueryPatternMode) -> String {
    let mut entities: Vec<&str> = Vec::new();
    let mut properties: Vec<&str> = Vec::new();
    let mapped: Vec<String> = sparql
        .split_whitespace()
        .map(|tok| {
            if let Some(rest) = tok.strip_prefix("ns:") {
                if rest.starts_with("m.") {
                    let idx = match entities.iter().position(|e| *e == tok) {
                        Some(i) => i,
                        None => {
                            entities.push(tok);
                            entities.len() - 1
                        }
                    };
                    return format!("M{idx}");
                }
                if mode == QueryPatternMode::ModEntitiesAndProperties {
                    let idx = match properties.iter().position(|p| *p == tok) {
                        Some(i) => i,
                        None => {
                            properties.push(tok);
                            properties.len() - 1
                        }
                    };
                    return format!("P{idx}");
                }
            }
            tok.to_string()
        })
        .collect();
    mapped.join(" ")
}

/// SCAN command pattern: verbs, directions, manner adverbs, and repetition
/// counts collapse to placeholder classes.
pub fn scan_input_pattern(command: &str) -> String {
    command
        .split_whitespace()
        .map(|tok| match tok {
            "walk" | "look" | "run" | "jump" => "V",
            "left" | "right" => "D",
            "opposite" | "around" => "M",
            "twice" | "thrice" => "T",
            other => other,
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// SCAN action pattern: primitive actions collapse to `A`, turns to `T`.
pub fn scan_output_pattern(actions: &str) -> String {
    actions
        .split_whitespace()
        .map(|tok| match tok {
            "WALK" | "LOOK" | "RUN" | "JUMP" => "A",
            "LTURN" | "RTURN" => "T",
            other => other,
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// The input pattern of an example, preferring published fields when present.
pub fn input_pattern(e: &Example) -> String {
    match e.kind {
        ExampleKind::Scan => scan_input_pattern(&e.input),
        ExampleKind::Cfq => e
            .extras
            .as_ref()
            .and_then(|x| x.question_pattern_mod_entities.clone())
            .unwrap_or_else(|| question_pattern(&e.input)),
    }
}

/// The output pattern of an example (entities and properties anonymized for
/// queries), preferring published fields when present.
pub fn output_pattern(e: &Example) -> String {
    match e.kind {
        ExampleKind::Scan => scan_output_pattern(&e.output),
        ExampleKind::Cfq => e
            .extras
            .as_ref()
            .and_then(|x| x.sparql_pattern.clone())
            .unwrap_or_else(|| query_pattern(&e.output, QueryPatternMode::ModEntitiesAndProperties)),
    }
}

/// Constraint counts of a SPARQL query: (triple patterns, FILTER clauses).
pub fn query_constraints(sparql: &str) -> (usize, usize) {
    let body = match (sparql.find('{'), sparql.rfind('}')) {
        (Some(a), Some(b)) if b > a => &sparql[a + 1..b],
        _ => sparql,
    };
    let mut triples = 0;
    let mut filters = 0;
    for clause in body.split(" . ") {
        let c = clause.trim();
        if c.is_empty() {
            continue;
        }
        if c.starts_with("FILTER") {
            filters += 1;
        } else {
            triples += 1;
        }
    }
    (triples, filters)
}

/// (input length, output length) of an example. Inputs count tokens; outputs
/// count actions for SCAN and constraints (triples + FILTERs) for queries.
pub fn length_measures(e: &Example) -> (usize, usize) {
    (e.input_length, e.output_length)
}

/// Divergence and baseline statistics of one split, as in a dataset
/// comparison table row.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SplitReport {
    pub train_size: usize,
    pub validation_size: usize,
    pub test_size: usize,
    /// Atom divergence D_A(train || validation + test).
    pub atom_divergence: f64,
    /// Compound divergence D_C(train || validation + test).
    pub compound_divergence: f64,
    /// Fraction of distinct test input patterns that also occur in train.
    pub input_pattern_coverage: f64,
    /// Fraction of distinct test output patterns that also occur in train.
    pub output_pattern_coverage: f64,
    /// Mean train input length divided by mean test input length.
    pub input_length_ratio: f64,
    /// Mean train output length divided by mean test output length.
    pub output_length_ratio: f64,
}

impl std::fmt::Display for SplitReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "sizes: train={} validation={} test={}",
            self.train_size, self.validation_size, self.test_size
        )?;
        writeln!(f, "atom divergence:        {:.4}", self.atom_divergence)?;
        writeln!(f, "compound divergence:    {:.4}", self.compound_divergence)?;
        writeln!(f, "input pattern coverage: {:.4}", self.input_pattern_coverage)?;
        writeln!(f, "output pattern coverage:{:.4}", self.output_pattern_coverage)?;
        writeln!(f, "input length ratio:     {:.4}", self.input_length_ratio)?;
        write!(f, "output length ratio:    {:.4}", self.output_length_ratio)
    }
}

fn coverage(train: &HashSet<String>, test: &HashSet<String>) -> f64 {
    if test.is_empty() {
        return 0.0;
    }
    test.iter().filter(|p| train.contains(*p)).count() as f64 / test.len() as f64
}

fn mean<I: Iterator<Item = usize>>(iter: I) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in iter {
        sum += v as f64;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Compute the full report for a split of an analyzed corpus. Divergences
/// compare train against the union of validation and test.
pub fn split_report(corpus: &Corpus, split: &Split) -> Result<SplitReport> {
    split.validate(corpus.len())?;
    if split.train.is_empty() || (split.validation.is_empty() && split.test.is_empty()) {
        return Err(Error::Domain("split report needs non-empty sides".into()));
    }
    let heldout: Vec<usize> = split
        .validation
        .iter()
        .chain(&split.test)
        .copied()
        .collect();
    let (d_a, d_c) = corpus.divergences(&split.train, &heldout)?;

    let test_ids: &[usize] = if split.test.is_empty() {
        &split.validation
    } else {
        &split.test
    };
    let train_in: HashSet<String> = split
        .train
        .iter()
        .map(|&i| input_pattern(&corpus.examples[i]))
        .collect();
    let test_in: HashSet<String> = test_ids
        .iter()
        .map(|&i| input_pattern(&corpus.examples[i]))
        .collect();
    let train_out: HashSet<String> = split
        .train
        .iter()
        .map(|&i| output_pattern(&corpus.examples[i]))
        .collect();
    let test_out: HashSet<String> = test_ids
        .iter()
        .map(|&i| output_pattern(&corpus.examples[i]))
        .collect();

    let train_in_mean = mean(split.train.iter().map(|&i| corpus.examples[i].input_length));
    let test_in_mean = mean(test_ids.iter().map(|&i| corpus.examples[i].input_length));
    let train_out_mean = mean(split.train.iter().map(|&i| corpus.examples[i].output_length));
    let test_out_mean = mean(test_ids.iter().map(|&i| corpus.examples[i].output_length));

    Ok(SplitReport {
        train_size: split.train.len(),
        validation_size: split.validation.len(),
        test_size: split.test.len(),
        atom_divergence: d_a,
        compound_divergence: d_c,
        input_pattern_coverage: coverage(&train_in, &test_in),
        output_pattern_coverage: coverage(&train_out, &test_out),
        input_length_ratio: if test_in_mean > 0.0 {
            train_in_mean / test_in_mean
        } else {
            0.0
        },
        output_length_ratio: if test_out_mean > 0.0 {
            train_out_mean / test_out_mean
        } else {
            0.0
        },
    })
}
