//! Logical forms: a description-logic-flavored AST with conjunction (AC),
//! existential role restrictions, and the matching/rewriting machinery used
//! by inference and resolution rules.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// A logical form or resolution expression.
///
/// The invariant maintained by [`Lf::normalize`]: `Conj` is flattened (no
/// nested `Conj`), sorted, and has at least two elements.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Lf {
    /// The trivially true concept.
    Top,
    /// A named concept, e.g. `Person`.
    Concept(String),
    /// A rule variable (`$X` or `_head`).
    Var(String),
    /// A quoted string literal.
    Str(String),
    /// A resolved token sequence (only during resolution).
    Toks(Vec<String>),
    /// `new_var($S)`: generates a fresh `?x<N>` when instantiated.
    NewVar(String),
    /// Conjunction of at least two conjuncts.
    Conj(Vec<Lf>),
    /// `exists role . restriction`.
    Exists(Box<Lf>, Box<Lf>),
    /// A role built from two role names.
    RolePair(Box<Lf>, Box<Lf>),
    /// Ordered binary conjunction used by sequence semantics.
    And(Box<Lf>, Box<Lf>),
    /// Marks a dependency erased in the final semantics.
    DropDependency(Box<Lf>),
    /// An entity reference.
    Entity(Box<Lf>),
    /// A syntactic predicate annotation binding two role pairs.
    PredicateWithBoundRolePairs(Box<Lf>, Box<Lf>),
    ProjectedRole(Box<Lf>, Box<Lf>),
    TypeInstance(Box<Lf>, Box<Lf>),
    /// A function application (knowledge fact or resolution call).
    Call(String, Vec<Lf>),
}

impl Lf {
    pub fn conj(mut parts: Vec<Lf>) -> Lf {
        let mut flat = Vec::with_capacity(parts.len());
        for p in parts.drain(..) {
            match p {
                Lf::Conj(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        flat.sort();
        match flat.len() {
            0 => Lf::Top,
            1 => flat.pop().unwrap(),
            _ => Lf::Conj(flat),
        }
    }

    /// Restore the `Conj` invariant recursively.
    pub fn normalize(&self) -> Lf {
        match self {
            Lf::Conj(parts) => Lf::conj(parts.iter().map(Lf::normalize).collect()),
            Lf::Exists(r, c) => Lf::Exists(Box::new(r.normalize()), Box::new(c.normalize())),
            Lf::RolePair(a, b) => Lf::RolePair(Box::new(a.normalize()), Box::new(b.normalize())),
            Lf::And(a, b) => Lf::And(Box::new(a.normalize()), Box::new(b.normalize())),
            Lf::DropDependency(x) => Lf::DropDependency(Box::new(x.normalize())),
            Lf::Entity(x) => Lf::Entity(Box::new(x.normalize())),
            Lf::PredicateWithBoundRolePairs(a, b) => Lf::PredicateWithBoundRolePairs(
                Box::new(a.normalize()),
                Box::new(b.normalize()),
            ),
            Lf::ProjectedRole(a, b) => {
                Lf::ProjectedRole(Box::new(a.normalize()), Box::new(b.normalize()))
            }
            Lf::TypeInstance(a, b) => {
                Lf::TypeInstance(Box::new(a.normalize()), Box::new(b.normalize()))
            }
            Lf::Call(f, args) => Lf::Call(f.clone(), args.iter().map(Lf::normalize).collect()),
            leaf => leaf.clone(),
        }
    }

    /// Substitute variables; unresolved variables stay in place.
    pub fn subst(&self, env: &HashMap<String, Lf>) -> Lf {
        match self {
            Lf::Var(name) => env.get(name).cloned().unwrap_or_else(|| self.clone()),
            Lf::Conj(parts) => Lf::conj(parts.iter().map(|p| p.subst(env)).collect()),
            Lf::Exists(r, c) => Lf::Exists(Box::new(r.subst(env)), Box::new(c.subst(env))),
            Lf::RolePair(a, b) => Lf::RolePair(Box::new(a.subst(env)), Box::new(b.subst(env))),
            Lf::And(a, b) => Lf::And(Box::new(a.subst(env)), Box::new(b.subst(env))),
            Lf::DropDependency(x) => Lf::DropDependency(Box::new(x.subst(env))),
            Lf::Entity(x) => Lf::Entity(Box::new(x.subst(env))),
            Lf::PredicateWithBoundRolePairs(a, b) => Lf::PredicateWithBoundRolePairs(
                Box::new(a.subst(env)),
                Box::new(b.subst(env)),
            ),
            Lf::ProjectedRole(a, b) => {
                Lf::ProjectedRole(Box::new(a.subst(env)), Box::new(b.subst(env)))
            }
            Lf::TypeInstance(a, b) => {
                Lf::TypeInstance(Box::new(a.subst(env)), Box::new(b.subst(env)))
            }
            Lf::Call(f, args) => Lf::Call(f.clone(), args.iter().map(|a| a.subst(env)).collect()),
            leaf => leaf.clone(),
        }
    }

    /// Collect variable names appearing in the term.
    pub fn vars(&self, out: &mut Vec<String>) {
        match self {
            Lf::Var(name) => out.push(name.clone()),
            Lf::NewVar(name) => out.push(name.clone()),
            Lf::Conj(parts) => parts.iter().for_each(|p| p.vars(out)),
            Lf::Exists(a, b)
            | Lf::RolePair(a, b)
            | Lf::And(a, b)
            | Lf::PredicateWithBoundRolePairs(a, b)
            | Lf::ProjectedRole(a, b)
            | Lf::TypeInstance(a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Lf::DropDependency(x) | Lf::Entity(x) => x.vars(out),
            Lf::Call(_, args) => args.iter().for_each(|a| a.vars(out)),
            _ => {}
        }
    }

    fn children(&self) -> Vec<&Lf> {
        match self {
            Lf::Conj(parts) => parts.iter().collect(),
            Lf::Exists(a, b)
            | Lf::RolePair(a, b)
            | Lf::And(a, b)
            | Lf::PredicateWithBoundRolePairs(a, b)
            | Lf::ProjectedRole(a, b)
            | Lf::TypeInstance(a, b) => vec![a, b],
            Lf::DropDependency(x) | Lf::Entity(x) => vec![x],
            Lf::Call(_, args) => args.iter().collect(),
            _ => Vec::new(),
        }
    }
}

impl std::fmt::Display for Lf {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Lf::Top => write!(f, "⊤"),
            Lf::Concept(name) => write!(f, "{name}"),
            Lf::Var(name) => write!(f, "{name}"),
            Lf::Str(s) => write!(f, "'{s}'"),
            Lf::Toks(toks) => write!(f, "'{}'", toks.join(" ")),
            Lf::NewVar(name) => write!(f, "new_var({name})"),
            Lf::Conj(parts) => {
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ⊓ ")?;
                    }
                    if matches!(p, Lf::Conj(_)) {
                        write!(f, "({p})")?;
                    } else {
                        write!(f, "{p}")?;
                    }
                }
                Ok(())
            }
            Lf::Exists(r, c) => {
                if matches!(**c, Lf::Conj(_)) {
                    write!(f, "∃{r}.({c})")
                } else {
                    write!(f, "∃{r}.{c}")
                }
            }
            Lf::RolePair(a, b) => write!(f, "RolePair({a}, {b})"),
            Lf::And(a, b) => write!(f, "And({a}, {b})"),
            Lf::DropDependency(x) => write!(f, "DropDependency({x})"),
            Lf::Entity(x) => write!(f, "Entity({x})"),
            Lf::PredicateWithBoundRolePairs(a, b) => {
                write!(f, "PredicateWithBoundRolePairs({a}, {b})")
            }
            Lf::ProjectedRole(a, b) => write!(f, "ProjectedRole({a}, {b})"),
            Lf::TypeInstance(a, b) => write!(f, "TypeInstance({a}, {b})"),
            Lf::Call(name, args) => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// One way a pattern matches a target: variable bindings plus (for matches
/// at a conjunction) the unmatched residue conjuncts.
#[derive(Clone, Debug)]
pub struct MatchCandidate {
    pub binds: HashMap<String, Lf>,
    pub rest: Vec<Lf>,
}

/// All ways `pattern` matches ground `target` under existing bindings, in
/// deterministic order. Conjunction patterns match modulo associativity and
/// commutativity: non-variable conjuncts pair injectively with target
/// conjuncts; variable conjuncts take single conjuncts first, the final
/// variable may absorb all remaining conjuncts; when `allow_rest` is set
/// (rewriting at a conjunction node) leftover conjuncts become the residue.
pub fn match_pattern(
    pattern: &Lf,
    target: &Lf,
    binds: &HashMap<String, Lf>,
    allow_rest: bool,
) -> Vec<MatchCandidate> {
    let mut out = Vec::new();
    match_into(pattern, target, binds.clone(), allow_rest, &mut out);
    out
}

fn match_into(
    pattern: &Lf,
    target: &Lf,
    binds: HashMap<String, Lf>,
    allow_rest: bool,
    out: &mut Vec<MatchCandidate>,
) {
    match pattern {
        Lf::Var(name) => match binds.get(name) {
            Some(bound) => {
                if bound == target {
                    out.push(MatchCandidate { binds, rest: Vec::new() });
                }
            }
            None => {
                let mut binds = binds;
                binds.insert(name.clone(), target.clone());
                out.push(MatchCandidate { binds, rest: Vec::new() });
            }
        },
        Lf::Conj(pats) => {
            let targets: Vec<Lf> = match target {
                Lf::Conj(ts) => ts.clone(),
                _ => return,
            };
            match_conj(pats, &targets, binds, allow_rest, out);
        }
        Lf::Top => {
            if *target == Lf::Top {
                out.push(MatchCandidate { binds, rest: Vec::new() });
            }
        }
        Lf::Concept(n) => {
            if matches!(target, Lf::Concept(tn) if tn == n) {
                out.push(MatchCandidate { binds, rest: Vec::new() });
            }
        }
        Lf::Str(s) => {
            match target {
                Lf::Str(ts) if ts == s => out.push(MatchCandidate { binds, rest: Vec::new() }),
                // A single-token sequence matches its string literal.
                Lf::Toks(ts) if ts.len() == 1 && &ts[0] == s => {
                    out.push(MatchCandidate { binds, rest: Vec::new() })
                }
                _ => {}
            }
        }
        Lf::Toks(s) => {
            if matches!(target, Lf::Toks(ts) if ts == s) {
                out.push(MatchCandidate { binds, rest: Vec::new() });
            }
        }
        Lf::NewVar(_) => {}
        Lf::Exists(pr, pc) => {
            if let Lf::Exists(tr, tc) = target {
                match_binary(pr, pc, tr, tc, binds, out);
            }
        }
        Lf::RolePair(pa, pb) => {
            if let Lf::RolePair(ta, tb) = target {
                match_binary(pa, pb, ta, tb, binds, out);
            }
        }
        Lf::And(pa, pb) => {
            if let Lf::And(ta, tb) = target {
                match_binary(pa, pb, ta, tb, binds, out);
            }
        }
        Lf::PredicateWithBoundRolePairs(pa, pb) => {
            if let Lf::PredicateWithBoundRolePairs(ta, tb) = target {
                match_binary(pa, pb, ta, tb, binds, out);
            }
        }
        Lf::ProjectedRole(pa, pb) => {
            if let Lf::ProjectedRole(ta, tb) = target {
                match_binary(pa, pb, ta, tb, binds, out);
            }
        }
        Lf::TypeInstance(pa, pb) => {
            if let Lf::TypeInstance(ta, tb) = target {
                match_binary(pa, pb, ta, tb, binds, out);
            }
        }
        Lf::DropDependency(px) => {
            if let Lf::DropDependency(tx) = target {
                match_into(px, tx, binds, false, out);
            }
        }
        Lf::Entity(px) => {
            if let Lf::Entity(tx) = target {
                match_into(px, tx, binds, false, out);
            }
        }
        Lf::Call(pf, pargs) => {
            if let Lf::Call(tf, targs) = target {
                if pf == tf && pargs.len() == targs.len() {
                    match_seq(pargs, targs, binds, out);
                }
            }
        }
    }
}

fn match_binary(
    pa: &Lf,
    pb: &Lf,
    ta: &Lf,
    tb: &Lf,
    binds: HashMap<String, Lf>,
    out: &mut Vec<MatchCandidate>,
) {
    let mut first = Vec::new();
    match_into(pa, ta, binds, false, &mut first);
    for cand in first {
        match_into(pb, tb, cand.binds, false, out);
    }
}

fn match_seq(pats: &[Lf], targets: &[Lf], binds: HashMap<String, Lf>, out: &mut Vec<MatchCandidate>) {
    match pats.split_first() {
        None => out.push(MatchCandidate { binds, rest: Vec::new() }),
        Some((p, rest_p)) => {
            let mut first = Vec::new();
            match_into(p, &targets[0], binds, false, &mut first);
            for cand in first {
                match_seq(rest_p, &targets[1..], cand.binds, out);
            }
        }
    }
}

/// AC matching of conjunct patterns against target conjuncts.
fn match_conj(
    pats: &[Lf],
    targets: &[Lf],
    binds: HashMap<String, Lf>,
    allow_rest: bool,
    out: &mut Vec<MatchCandidate>,
) {
    // Partition pattern conjuncts: structured ones (including already-bound
    // variables) match one target conjunct each; unbound variables follow.
    let structured: Vec<&Lf> = pats
        .iter()
        .filter(|p| !matches!(p, Lf::Var(v) if !binds.contains_key(v.as_str())))
        .collect();
    let vars: Vec<&str> = pats
        .iter()
        .filter_map(|p| match p {
            Lf::Var(v) if !binds.contains_key(v.as_str()) => Some(v.as_str()),
            _ => None,
        })
        .collect();
    let used = vec![false; targets.len()];
    match_structured(&structured, 0, targets, used, binds, &vars, allow_rest, out);
}

#[allow(clippy::too_many_arguments)]
fn match_structured(
    structured: &[&Lf],
    idx: usize,
    targets: &[Lf],
    used: Vec<bool>,
    binds: HashMap<String, Lf>,
    vars: &[&str],
    allow_rest: bool,
    out: &mut Vec<MatchCandidate>,
) {
    if idx == structured.len() {
        assign_vars(vars, targets, used, binds, allow_rest, out);
        return;
    }
    for (t, tgt) in targets.iter().enumerate() {
        if used[t] {
            continue;
        }
        let mut cands = Vec::new();
        match_into(structured[idx], tgt, binds.clone(), false, &mut cands);
        for cand in cands {
            let mut used2 = used.clone();
            used2[t] = true;
            match_structured(
                structured,
                idx + 1,
                targets,
                used2,
                cand.binds,
                vars,
                allow_rest,
                out,
            );
        }
    }
}

fn assign_vars(
    vars: &[&str],
    targets: &[Lf],
    used: Vec<bool>,
    binds: HashMap<String, Lf>,
    allow_rest: bool,
    out: &mut Vec<MatchCandidate>,
) {
    match vars.split_first() {
        None => {
            let rest: Vec<Lf> = targets
                .iter()
                .enumerate()
                .filter(|(t, _)| !used[*t])
                .map(|(_, tgt)| tgt.clone())
                .collect();
            if rest.is_empty() || allow_rest {
                out.push(MatchCandidate { binds, rest });
            }
        }
        Some((v, remaining_vars)) => {
            // Single-conjunct assignments first, in target order.
            for (t, tgt) in targets.iter().enumerate() {
                if used[t] {
                    continue;
                }
                let mut used2 = used.clone();
                used2[t] = true;
                let mut binds2 = binds.clone();
                binds2.insert(v.to_string(), tgt.clone());
                assign_vars(remaining_vars, targets, used2, binds2, allow_rest, out);
            }
            // The final variable may absorb all remaining conjuncts.
            if remaining_vars.is_empty() {
                let leftover: Vec<Lf> = targets
                    .iter()
                    .enumerate()
                    .filter(|(t, _)| !used[*t])
                    .map(|(_, tgt)| tgt.clone())
                    .collect();
                if leftover.len() >= 2 {
                    let mut used2 = used;
                    for u in used2.iter_mut() {
                        *u = true;
                    }
                    let mut binds2 = binds;
                    binds2.insert(v.to_string(), Lf::conj(leftover));
                    assign_vars(&[], targets, used2, binds2, allow_rest, out);
                }
            }
        }
    }
}

/// Unify two logical forms (either side may contain variables). Succeeds iff
/// one side matches the other completely; returns the variable bindings.
pub fn unify_logical_forms(a: &Lf, b: &Lf) -> Option<HashMap<String, Lf>> {
    let empty = HashMap::new();
    let cands = match_pattern(a, b, &empty, false);
    if let Some(c) = cands.into_iter().next() {
        return Some(c.binds);
    }
    match_pattern(b, a, &empty, false).into_iter().next().map(|c| c.binds)
}

/// Apply a rewrite `lhs -> rhs` at the first matching subterm (pre-order),
/// subject to `preconditions` solved against the knowledge base. Returns the
/// rewritten term and the names of knowledge facts used.
pub fn rewrite_once(
    term: &Lf,
    lhs: &Lf,
    rhs: &Lf,
    preconditions: &[Lf],
    kb: &[(String, Lf)],
) -> Option<(Lf, Vec<String>)> {
    // Try at this node.
    let allow_rest = matches!(term, Lf::Conj(_));
    for cand in match_pattern(lhs, term, &HashMap::new(), allow_rest) {
        if let Some((binds, facts)) = solve_preconditions(preconditions, cand.binds, kb) {
            let mut replaced = rhs.subst(&binds);
            if !cand.rest.is_empty() {
                let mut parts = cand.rest;
                parts.push(replaced);
                replaced = Lf::conj(parts);
            }
            return Some((replaced.normalize(), facts));
        }
    }
    // Recurse into children, left to right, rebuilding on success.
    let children = term.children();
    for (i, child) in children.iter().enumerate() {
        if let Some((new_child, facts)) = rewrite_once(child, lhs, rhs, preconditions, kb) {
            return Some((replace_child(term, i, new_child), facts));
        }
    }
    None
}

fn replace_child(term: &Lf, idx: usize, new_child: Lf) -> Lf {
    let rebuild2 = |a: &Lf, b: &Lf| -> (Lf, Lf) {
        if idx == 0 {
            (new_child.clone(), b.clone())
        } else {
            (a.clone(), new_child.clone())
        }
    };
    match term {
        Lf::Conj(parts) => {
            let mut parts = parts.clone();
            parts[idx] = new_child;
            Lf::conj(parts)
        }
        Lf::Exists(a, b) => {
            let (a, b) = rebuild2(a, b);
            Lf::Exists(Box::new(a), Box::new(b))
        }
        Lf::RolePair(a, b) => {
            let (a, b) = rebuild2(a, b);
            Lf::RolePair(Box::new(a), Box::new(b))
        }
        Lf::And(a, b) => {
            let (a, b) = rebuild2(a, b);
            Lf::And(Box::new(a), Box::new(b))
        }
        Lf::PredicateWithBoundRolePairs(a, b) => {
            let (a, b) = rebuild2(a, b);
            Lf::PredicateWithBoundRolePairs(Box::new(a), Box::new(b))
        }
        Lf::ProjectedRole(a, b) => {
            let (a, b) = rebuild2(a, b);
            Lf::ProjectedRole(Box::new(a), Box::new(b))
        }
        Lf::TypeInstance(a, b) => {
            let (a, b) = rebuild2(a, b);
            Lf::TypeInstance(Box::new(a), Box::new(b))
        }
        Lf::DropDependency(_) => Lf::DropDependency(Box::new(new_child)),
        Lf::Entity(_) => Lf::Entity(Box::new(new_child)),
        Lf::Call(f, args) => {
            let mut args = args.clone();
            args[idx] = new_child;
            Lf::Call(f.clone(), args)
        }
        _ => unreachable!("leaves have no children"),
    }
}

/// Solve precondition patterns against the knowledge base (facts iterated in
/// name order), extending bindings. Returns bindings plus used fact names.
pub fn solve_preconditions(
    preconditions: &[Lf],
    binds: HashMap<String, Lf>,
    kb: &[(String, Lf)],
) -> Option<(HashMap<String, Lf>, Vec<String>)> {
    match preconditions.split_first() {
        None => Some((binds, Vec::new())),
        Some((pre, rest)) => {
            for (name, fact) in kb {
                for cand in match_pattern(pre, fact, &binds, false) {
                    if let Some((b2, mut facts)) = solve_preconditions(rest, cand.binds, kb) {
                        facts.insert(0, name.clone());
                        return Some((b2, facts));
                    }
                }
            }
            None
        }
    }
}

/// Instantiate `new_var` markers: every `NewVar(name)` gets a fresh `?x<N>`
/// token (one per distinct name per call), and later `Var(name)` references
/// resolve to the same token.
pub fn instantiate_new_vars(term: &Lf, counter: &mut usize) -> Lf {
    let mut assigned: HashMap<String, Lf> = HashMap::new();
    let first = assign_new_vars(term, counter, &mut assigned);
    if assigned.is_empty() {
        first
    } else {
        first.subst(&assigned)
    }
}

fn assign_new_vars(term: &Lf, counter: &mut usize, assigned: &mut HashMap<String, Lf>) -> Lf {
    match term {
        Lf::NewVar(name) => assigned
            .entry(name.clone())
            .or_insert_with(|| {
                let v = Lf::Toks(vec![format!("?x{}", *counter)]);
                *counter += 1;
                v
            })
            .clone(),
        Lf::Conj(parts) => Lf::conj(
            parts
                .iter()
                .map(|p| assign_new_vars(p, counter, assigned))
                .collect(),
        ),
        Lf::Exists(a, b) => Lf::Exists(
            Box::new(assign_new_vars(a, counter, assigned)),
            Box::new(assign_new_vars(b, counter, assigned)),
        ),
        Lf::RolePair(a, b) => Lf::RolePair(
            Box::new(assign_new_vars(a, counter, assigned)),
            Box::new(assign_new_vars(b, counter, assigned)),
        ),
        Lf::And(a, b) => Lf::And(
            Box::new(assign_new_vars(a, counter, assigned)),
            Box::new(assign_new_vars(b, counter, assigned)),
        ),
        Lf::DropDependency(x) => {
            Lf::DropDependency(Box::new(assign_new_vars(x, counter, assigned)))
        }
        Lf::Entity(x) => Lf::Entity(Box::new(assign_new_vars(x, counter, assigned))),
        Lf::PredicateWithBoundRolePairs(a, b) => Lf::PredicateWithBoundRolePairs(
            Box::new(assign_new_vars(a, counter, assigned)),
            Box::new(assign_new_vars(b, counter, assigned)),
        ),
        Lf::ProjectedRole(a, b) => Lf::ProjectedRole(
            Box::new(assign_new_vars(a, counter, assigned)),
            Box::new(assign_new_vars(b, counter, assigned)),
        ),
        Lf::TypeInstance(a, b) => Lf::TypeInstance(
            Box::new(assign_new_vars(a, counter, assigned)),
            Box::new(assign_new_vars(b, counter, assigned)),
        ),
        Lf::Call(f, args) => Lf::Call(
            f.clone(),
            args.iter()
                .map(|a| assign_new_vars(a, counter, assigned))
                .collect(),
        ),
        leaf => leaf.clone(),
    }
}

/// Rename rule variables with a unique suffix so concurrent rule
/// applications cannot clash.
pub fn rename_vars(term: &Lf, suffix: &str) -> Lf {
    match term {
        Lf::Var(name) => Lf::Var(format!("{name}{suffix}")),
        Lf::NewVar(name) => Lf::NewVar(format!("{name}{suffix}")),
        Lf::Conj(parts) => Lf::conj(parts.iter().map(|p| rename_vars(p, suffix)).collect()),
        Lf::Exists(a, b) => Lf::Exists(
            Box::new(rename_vars(a, suffix)),
            Box::new(rename_vars(b, suffix)),
        ),
        Lf::RolePair(a, b) => Lf::RolePair(
            Box::new(rename_vars(a, suffix)),
            Box::new(rename_vars(b, suffix)),
        ),
        Lf::And(a, b) => Lf::And(
            Box::new(rename_vars(a, suffix)),
            Box::new(rename_vars(b, suffix)),
        ),
        Lf::DropDependency(x) => Lf::DropDependency(Box::new(rename_vars(x, suffix))),
        Lf::Entity(x) => Lf::Entity(Box::new(rename_vars(x, suffix))),
        Lf::PredicateWithBoundRolePairs(a, b) => Lf::PredicateWithBoundRolePairs(
            Box::new(rename_vars(a, suffix)),
            Box::new(rename_vars(b, suffix)),
        ),
        Lf::ProjectedRole(a, b) => Lf::ProjectedRole(
            Box::new(rename_vars(a, suffix)),
            Box::new(rename_vars(b, suffix)),
        ),
        Lf::TypeInstance(a, b) => Lf::TypeInstance(
            Box::new(rename_vars(a, suffix)),
            Box::new(rename_vars(b, suffix)),
        ),
        Lf::Call(f, args) => Lf::Call(
            f.clone(),
            args.iter().map(|a| rename_vars(a, suffix)).collect(),
        ),
        leaf => leaf.clone(),
    }
}

/// Convenience error for stuck resolution.
pub fn stuck(term: &Lf) -> Error {
    Error::Resolution(term.to_string())
}

/// Convenience result alias used by the engine.
pub type LfResult<T> = Result<T>;
