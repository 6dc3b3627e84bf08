//! Rule-driven example generation.
//!
//! A [`Generator`] derives parse trees from a rule set's unification
//! grammar, evaluates them bottom-up into text plus a logical form, applies
//! the inference closure to the final logical form, and resolves the result
//! into output tokens — recording every rule application as a node of the
//! example's rule application DAG along the way. Resolution is memoized on
//! the (argument-reduced) call term, so repeated sub-derivations share DAG
//! nodes exactly as repeated subexpressions share work.

use std::collections::{BTreeSet, HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::compounds::{Atom, RuleApplicationDag, RuleType};
use crate::error::{Error, Result};
use crate::example::{CfqExtras, Example, ExampleKind};
use crate::gramgen::features::{Bindings, FSpec, FeatureList, unify_features};
use crate::gramgen::logic::{
    instantiate_new_vars, match_pattern, rename_vars, rewrite_once, solve_preconditions, Lf,
};
use crate::gramgen::sparql::normalize_sparql;
use crate::metrics;
use crate::rulesets::{GrammarRule, InferenceRule, ResolutionRule, RhsTerm, RuleSet};

/// Maximum derivation depth.
const MAX_DEPTH: usize = 60;
/// Random derivations that fail to resolve are retried this many times.
const RETRY_BUDGET: usize = 100;
/// Upper bound on inference closure steps.
const CLOSURE_BUDGET: usize = 10_000;

/// Name of the node joining the grammar phase to resolution.
pub const JOIN_RULE_NAME: &str = "JOIN_BY_LOGICAL_FORM";

/// Example generator for one rule set.
pub struct Generator<'a> {
    ruleset: &'a RuleSet,
    by_cat: HashMap<&'a str, Vec<&'a GrammarRule>>,
    /// Inference rules sorted by name (closure priority order).
    inference: Vec<&'a InferenceRule>,
    /// Resolution rules per head function, sorted by name.
    by_head: HashMap<&'a str, Vec<&'a ResolutionRule>>,
    resolution_heads: HashSet<&'a str>,
    /// Knowledge facts sorted by name.
    kb: Vec<(String, Lf)>,
}

/// One derived parse tree, self-contained for evaluation.
#[derive(Clone, Debug)]
struct ParseNode {
    rule_name: String,
    /// Instantiated logical form of the rule's left-hand side.
    lf: Lf,
    children: Vec<ParseChild>,
}

#[derive(Clone, Debug)]
enum ParseChild {
    Terminal(String),
    Node { lf_var: Option<String>, node: ParseNode },
}

/// Accumulates DAG nodes and edges during evaluation.
struct DagBuilder {
    nodes: Vec<Atom>,
    edges: BTreeSet<(u32, u32)>,
    knowledge: HashMap<String, u32>,
}

impl DagBuilder {
    fn new() -> DagBuilder {
        DagBuilder {
            nodes: Vec::new(),
            edges: BTreeSet::new(),
            knowledge: HashMap::new(),
        }
    }

    fn add(&mut self, atom: Atom) -> u32 {
        self.nodes.push(atom);
        (self.nodes.len() - 1) as u32
    }

    fn edge(&mut self, from: u32, to: u32) {
        if from != to {
            self.edges.insert((from, to));
        }
    }

    /// One node per distinct knowledge fact per example.
    fn knowledge_node(&mut self, name: &str) -> u32 {
        if let Some(&n) = self.knowledge.get(name) {
            return n;
        }
        let n = self.add(Atom::new(RuleType::Knowledge, name));
        self.knowledge.insert(name.to_string(), n);
        n
    }

    fn finish(self) -> Result<RuleApplicationDag> {
        Ok(RuleApplicationDag::new(self.nodes, self.edges.into_iter().collect())?.normalize())
    }
}

impl<'a> Generator<'a> {
    pub fn new(ruleset: &'a RuleSet) -> Result<Generator<'a>> {
        ruleset.validate()?;
        let mut by_cat: HashMap<&str, Vec<&GrammarRule>> = HashMap::new();
        for rule in &ruleset.grammar {
            by_cat.entry(rule.lhs_cat.as_str()).or_default().push(rule);
        }
        let mut inference: Vec<&InferenceRule> = ruleset.inference.iter().collect();
        inference.sort_by(|a, b| a.name.cmp(&b.name));
        let mut by_head: HashMap<&str, Vec<&ResolutionRule>> = HashMap::new();
        for rule in &ruleset.resolution {
            by_head.entry(rule.head.as_str()).or_default().push(rule);
        }
        for rules in by_head.values_mut() {
            rules.sort_by(|a, b| a.name.cmp(&b.name));
        }
        let resolution_heads = by_head.keys().copied().collect();
        let mut kb = ruleset.knowledge.clone();
        kb.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(Generator { ruleset, by_cat, inference, by_head, resolution_heads, kb })
    }

    /// Generate one example from a random derivation. Derivations that get
    /// stuck (grammatically valid but unresolvable) are retried.
    pub fn generate_one(&self, seed: u64) -> Result<Example> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut last_err = None;
        for _ in 0..RETRY_BUDGET {
            let attempt = self
                .derive_random(&mut rng)
                .and_then(|parse| self.build_example(&parse));
            match attempt {
                Ok(example) => return Ok(example),
                Err(e) => last_err = Some(e),
            }
        }
        Err(Error::Generation(format!(
            "no derivation succeeded within {RETRY_BUDGET} attempts: {}",
            last_err.expect("at least one attempt")
        )))
    }

    /// Generate `n` examples from one seeded stream, ids `0..n`.
    pub fn generate_random(&self, seed: u64, n: usize) -> Result<Vec<Example>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n);
        for id in 0..n {
            let mut produced = None;
            let mut last_err = None;
            for _ in 0..RETRY_BUDGET {
                let attempt = self
                    .derive_random(&mut rng)
                    .and_then(|parse| self.build_example(&parse));
                match attempt {
                    Ok(e) => {
                        produced = Some(e);
                        break;
                    }
                    Err(e) => last_err = Some(e),
                }
            }
            let mut example = produced.ok_or_else(|| {
                Error::Generation(format!(
                    "no derivation succeeded within {RETRY_BUDGET} attempts: {}",
                    last_err.expect("at least one attempt")
                ))
            })?;
            example.id = id;
            out.push(example);
        }
        Ok(out)
    }

    /// Generate every derivable example, in deterministic grammar order.
    /// Derivations that fail at resolution are skipped.
    pub fn generate_all(&self) -> Result<Vec<Example>> {
        let mut counter = 0usize;
        let parses = self.enum_derive(
            &self.ruleset.start,
            &FeatureList::new(),
            &Bindings::new(),
            MAX_DEPTH,
            &mut counter,
        );
        let mut out = Vec::new();
        for (parse, _) in parses {
            match self.build_example(&parse) {
                Ok(mut example) => {
                    example.id = out.len();
                    out.push(example);
                }
                Err(Error::Resolution(_)) => {}
                Err(other) => return Err(other),
            }
        }
        if out.is_empty() {
            return Err(Error::Generation("grammar produced no examples".into()));
        }
        Ok(out)
    }

    // -- derivation ---------------------------------------------------------

    /// Instantiate a rule with a unique variable suffix and apply head
    /// inheritance: attributes of the head child's feature list that the
    /// left-hand side lacks are shared with it.
    fn instantiate(
        &self,
        rule: &GrammarRule,
        counter: &mut usize,
    ) -> (FeatureList, Vec<(Option<RhsInst>, Option<String>)>, Lf, String) {
        let suffix = format!("#{}", *counter);
        *counter += 1;
        let mut f0 = suffix_features(&rule.lhs_features, &suffix);
        let mut rhs = Vec::with_capacity(rule.rhs.len());
        for term in &rule.rhs {
            match term {
                RhsTerm::Terminal(t) => rhs.push((None, Some(t.clone()))),
                RhsTerm::NonTerminal { cat, features, lf_var } => {
                    let inst = RhsInst {
                        cat: cat.clone(),
                        features: suffix_features(features, &suffix),
                        lf_var: lf_var.as_ref().map(|v| format!("{v}{suffix}")),
                    };
                    rhs.push((Some(inst), None));
                }
            }
        }
        if let Some(head) = &rule.head {
            let head = format!("{head}{suffix}");
            if let Some(f_head) = rhs.iter().find_map(|(inst, _)| {
                inst.as_ref()
                    .filter(|i| i.lf_var.as_deref() == Some(head.as_str()))
                    .map(|i| &i.features)
            }) {
                for (attr, spec) in &f_head.0 {
                    if f0.get(attr).is_none() {
                        f0.insert(attr.clone(), spec.clone());
                    }
                }
            }
        }
        let lf = rename_vars(&rule.lhs_lf, &suffix);
        (f0, rhs, lf, rule.name.clone())
    }

    fn applicable(
        &self,
        cat: &str,
        target: &FeatureList,
        env: &Bindings,
        counter: &mut usize,
    ) -> Vec<(Bindings, Vec<(Option<RhsInst>, Option<String>)>, Lf, String)> {
        let mut out = Vec::new();
        let Some(rules) = self.by_cat.get(cat) else {
            return out;
        };
        for rule in rules {
            let (f0, rhs, lf, name) = self.instantiate(rule, counter);
            let mut env2 = env.clone();
            if unify_features(target, &f0, &mut env2).is_some() {
                out.push((env2, rhs, lf, name));
            }
        }
        out
    }

    fn derive_random(&self, rng: &mut ChaCha8Rng) -> Result<ParseNode> {
        let mut env = Bindings::new();
        let mut counter = 0usize;
        self.derive_node(
            &self.ruleset.start,
            &FeatureList::new(),
            &mut env,
            rng,
            MAX_DEPTH,
            &mut counter,
        )
    }

    fn derive_node(
        &self,
        cat: &str,
        target: &FeatureList,
        env: &mut Bindings,
        rng: &mut ChaCha8Rng,
        depth: usize,
        counter: &mut usize,
    ) -> Result<ParseNode> {
        if depth == 0 {
            return Err(Error::Generation("derivation depth exhausted".into()));
        }
        let mut options = self.applicable(cat, target, env, counter);
        if options.is_empty() {
            return Err(Error::Generation(format!("no rule applies to {cat}")));
        }
        let pick = rng.gen_range(0..options.len());
        let (env2, rhs, lf, rule_name) = options.swap_remove(pick);
        *env = env2;
        let mut children = Vec::with_capacity(rhs.len());
        for (inst, terminal) in rhs {
            match (inst, terminal) {
                (None, Some(t)) => children.push(ParseChild::Terminal(t)),
                (Some(inst), None) => {
                    let node =
                        self.derive_node(&inst.cat, &inst.features, env, rng, depth - 1, counter)?;
                    children.push(ParseChild::Node { lf_var: inst.lf_var, node });
                }
                _ => unreachable!(),
            }
        }
        Ok(ParseNode { rule_name, lf, children })
    }

    fn enum_derive(
        &self,
        cat: &str,
        target: &FeatureList,
        env: &Bindings,
        depth: usize,
        counter: &mut usize,
    ) -> Vec<(ParseNode, Bindings)> {
        if depth == 0 {
            return Vec::new();
        }
        let mut out = Vec::new();
        for (env2, rhs, lf, rule_name) in self.applicable(cat, target, env, counter) {
            // Thread the environment through the children left to right,
            // branching on every alternative sub-derivation.
            let mut states: Vec<(Vec<ParseChild>, Bindings)> = vec![(Vec::new(), env2)];
            for (inst, terminal) in &rhs {
                match (inst, terminal) {
                    (None, Some(t)) => {
                        for (children, _) in &mut states {
                            children.push(ParseChild::Terminal(t.clone()));
                        }
                    }
                    (Some(inst), None) => {
                        let mut next = Vec::new();
                        for (children, state_env) in states {
                            for (node, env3) in
                                self.enum_derive(&inst.cat, &inst.features, &state_env, depth - 1, counter)
                            {
                                let mut children = children.clone();
                                children.push(ParseChild::Node {
                                    lf_var: inst.lf_var.clone(),
                                    node,
                                });
                                next.push((children, env3));
                            }
                        }
                        states = next;
                    }
                    _ => unreachable!(),
                }
            }
            for (children, env3) in states {
                out.push((
                    ParseNode { rule_name: rule_name.clone(), lf: lf.clone(), children },
                    env3,
                ));
            }
        }
        out
    }

    // -- evaluation ---------------------------------------------------------

    fn build_example(&self, parse: &ParseNode) -> Result<Example> {
        let mut builder = DagBuilder::new();
        let mut var_counter = 0usize;
        let (tokens, lf, producer) = self.eval(parse, &mut builder, &mut var_counter);
        let (lf, producer) = self.closure(lf, producer, &mut builder)?;
        let join = builder.add(Atom::new(RuleType::Join, JOIN_RULE_NAME));
        builder.edge(producer, join);
        let start = Lf::Call(self.ruleset.resolve_fn.clone(), vec![lf]);
        let mut resolver = Resolver {
            generator: self,
            builder: &mut builder,
            memo: HashMap::new(),
            var_counter: &mut var_counter,
        };
        let (out_tokens, _) = resolver.resolve(start, join)?;
        let output = normalize_sparql(&out_tokens.join(" "));
        let mut input = tokens.join(" ");
        if self.ruleset.kind == ExampleKind::Cfq {
            // Surface realization: sentence case plus question punctuation
            // (neither is part of the grammar).
            let mut chars = input.chars();
            if let Some(first) = chars.next() {
                input = first.to_uppercase().chain(chars).collect();
            }
            input.push('?');
        }
        let dag = builder.finish()?;
        let (output_length, extras) = match self.ruleset.kind {
            ExampleKind::Scan => (output.split_whitespace().count(), None),
            ExampleKind::Cfq => {
                let (triples, filters) = metrics::query_constraints(&output);
                let extras = CfqExtras {
                    question_pattern_mod_entities: Some(metrics::question_pattern(&input)),
                    sparql_pattern_mod_entities: Some(metrics::query_pattern(
                        &output,
                        metrics::QueryPatternMode::ModEntities,
                    )),
                    sparql_pattern: Some(metrics::query_pattern(
                        &output,
                        metrics::QueryPatternMode::ModEntitiesAndProperties,
                    )),
                    ..CfqExtras::default()
                };
                (triples + filters, Some(Box::new(extras)))
            }
        };
        Ok(Example {
            id: 0,
            kind: self.ruleset.kind,
            input_length: tokens.len(),
            input,
            output_length,
            output,
            complexity: dag.node_count(),
            dag: Some(dag),
            extras,
        })
    }

    fn eval(
        &self,
        node: &ParseNode,
        builder: &mut DagBuilder,
        var_counter: &mut usize,
    ) -> (Vec<String>, Lf, u32) {
        let mut tokens = Vec::new();
        let mut lf_env: HashMap<String, Lf> = HashMap::new();
        let mut child_producers = Vec::new();
        for child in &node.children {
            match child {
                ParseChild::Terminal(t) => tokens.push(t.clone()),
                ParseChild::Node { lf_var, node } => {
                    let (ctokens, clf, cprod) = self.eval(node, builder, var_counter);
                    tokens.extend(ctokens);
                    if let Some(v) = lf_var {
                        lf_env.insert(v.clone(), clf);
                    }
                    child_producers.push(cprod);
                }
            }
        }
        let app = builder.add(Atom::new(RuleType::Grammar, &node.rule_name));
        for cprod in child_producers {
            builder.edge(cprod, app);
        }
        let lf = instantiate_new_vars(&node.lf.subst(&lf_env), var_counter).normalize();
        (tokens, lf, app)
    }

    /// Greedy inference closure: repeatedly apply the first (by rule name)
    /// applicable rewrite anywhere in the logical form, until none applies.
    fn closure(&self, mut lf: Lf, mut producer: u32, builder: &mut DagBuilder) -> Result<(Lf, u32)> {
        for _ in 0..CLOSURE_BUDGET {
            let mut applied = false;
            for rule in &self.inference {
                if let Some((next, facts)) =
                    rewrite_once(&lf, &rule.lhs, &rule.rhs, &rule.preconditions, &self.kb)
                {
                    let node = builder.add(Atom::new(RuleType::Inference, &rule.name));
                    builder.edge(producer, node);
                    for fact in facts {
                        let k = builder.knowledge_node(&fact);
                        builder.edge(k, node);
                    }
                    lf = next;
                    producer = node;
                    applied = true;
                    break;
                }
            }
            if !applied {
                return Ok((lf, producer));
            }
        }
        Err(Error::Generation("inference closure did not terminate".into()))
    }
}

/// Instantiated right-hand-side nonterminal.
struct RhsInst {
    cat: String,
    features: FeatureList,
    lf_var: Option<String>,
}

fn suffix_features(features: &FeatureList, suffix: &str) -> FeatureList {
    let mut out = FeatureList::new();
    for (attr, spec) in &features.0 {
        let spec = match spec {
            FSpec::Var(v) => FSpec::Var(format!("{v}{suffix}")),
            other => other.clone(),
        };
        out.insert(attr.clone(), spec);
    }
    out
}

/// Memoizing resolution: rewrites call terms into output tokens, adding one
/// DAG node per distinct (reduced) call term.
struct Resolver<'g, 'a, 'b> {
    generator: &'g Generator<'a>,
    builder: &'b mut DagBuilder,
    memo: HashMap<Lf, (Vec<String>, u32)>,
    var_counter: &'b mut usize,
}

impl Resolver<'_, '_, '_> {
    fn resolve(&mut self, term: Lf, parent: u32) -> Result<(Vec<String>, u32)> {
        // Call-by-value: reduce arguments that are themselves resolution
        // calls before matching any rule against the outer call.
        let reduced = match term {
            Lf::Call(f, args) => {
                let mut new_args = Vec::with_capacity(args.len());
                for arg in args {
                    match arg {
                        Lf::Call(g, gargs)
                            if self.generator.resolution_heads.contains(g.as_str()) =>
                        {
                            let (tokens, _) = self.resolve(Lf::Call(g, gargs), parent)?;
                            new_args.push(Lf::Toks(tokens));
                        }
                        other => new_args.push(other),
                    }
                }
                Lf::Call(f, new_args).normalize()
            }
            other => other.normalize(),
        };
        if let Some((tokens, node)) = self.memo.get(&reduced) {
            let (tokens, node) = (tokens.clone(), *node);
            self.builder.edge(parent, node);
            return Ok((tokens, node));
        }
        let head = match &reduced {
            Lf::Call(f, _) => f.clone(),
            other => return Err(Error::Resolution(other.to_string())),
        };
        let rules = self
            .generator
            .by_head
            .get(head.as_str())
            .ok_or_else(|| Error::Resolution(reduced.to_string()))?;
        for rule in rules {
            for cand in match_pattern(&rule.lhs, &reduced, &HashMap::new(), false) {
                let Some((binds, facts)) =
                    solve_preconditions(&rule.preconditions, cand.binds, &self.generator.kb)
                else {
                    continue;
                };
                let node = self.builder.add(Atom::new(RuleType::Resolution, &rule.name));
                self.builder.edge(parent, node);
                for fact in facts {
                    let k = self.builder.knowledge_node(&fact);
                    self.builder.edge(k, node);
                }
                // Instantiate the right-hand side as one sequence so that
                // `new_var` markers are shared across its terms.
                let seq = Lf::Call(
                    "__seq".into(),
                    rule.rhs.iter().map(|t| t.subst(&binds)).collect(),
                );
                let seq = instantiate_new_vars(&seq, self.var_counter);
                let Lf::Call(_, terms) = seq else { unreachable!() };
                let mut tokens = Vec::new();
                for t in terms {
                    match t {
                        Lf::Str(s) => tokens.push(s),
                        Lf::Toks(ts) => tokens.extend(ts),
                        call @ Lf::Call(..) => {
                            let (ts, _) = self.resolve(call, node)?;
                            tokens.extend(ts);
                        }
                        other => return Err(Error::Resolution(other.to_string())),
                    }
                }
                self.memo.insert(reduced, (tokens.clone(), node));
                return Ok((tokens, node));
            }
        }
        Err(Error::Resolution(reduced.to_string()))
    }
}
