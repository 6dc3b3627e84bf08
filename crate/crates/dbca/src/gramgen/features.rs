//! Feature lists and their unification.
//!
//! A feature list constrains attributes to value sets. A constraint is
//! either positive (`form:gerund|infinitive`), negative
//! (`-form:gerund|infinitive`, meaning any other value or absence), or a
//! variable (`number:$n`) shared across a rule. The special value `_none_`
//! unifies with an explicitly absent attribute; an attribute present in only
//! one of two lists is carried over unchanged.

use std::collections::{BTreeMap, BTreeSet, HashMap};

/// The distinguished "attribute is absent" value.
pub const NONE_VALUE: &str = "_none_";

/// One attribute constraint.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum FSpec {
    /// Value must be one of the set.
    OneOf(BTreeSet<String>),
    /// Value must not be any of the set (absence and `_none_` allowed).
    NoneOf(BTreeSet<String>),
    /// Shared variable, bound during unification.
    Var(String),
}

impl FSpec {
    pub fn atomic(value: impl Into<String>) -> FSpec {
        FSpec::OneOf([value.into()].into_iter().collect())
    }

    pub fn one_of(values: impl IntoIterator<Item = String>) -> FSpec {
        FSpec::OneOf(values.into_iter().collect())
    }

    pub fn none_of(values: impl IntoIterator<Item = String>) -> FSpec {
        FSpec::NoneOf(values.into_iter().collect())
    }
}

/// An attribute-to-constraint map.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct FeatureList(pub BTreeMap<String, FSpec>);

impl FeatureList {
    pub fn new() -> FeatureList {
        FeatureList::default()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn insert(&mut self, attr: impl Into<String>, spec: FSpec) {
        self.0.insert(attr.into(), spec);
    }

    pub fn get(&self, attr: &str) -> Option<&FSpec> {
        self.0.get(attr)
    }
}

/// Variable bindings accumulated along one derivation. A variable maps to a
/// constraint, possibly another variable (chains are chased on lookup).
#[derive(Clone, Debug, Default)]
pub struct Bindings {
    map: HashMap<String, FSpec>,
}

impl Bindings {
    pub fn new() -> Bindings {
        Bindings::default()
    }

    /// Follow variable chains; returns the terminal constraint (a concrete
    /// set, or the representative unbound variable).
    pub fn resolve(&self, spec: &FSpec) -> FSpec {
        let (var, concrete) = self.chase(spec);
        concrete.unwrap_or_else(|| FSpec::Var(var.expect("chase yields var or concrete")))
    }

    /// Chase a constraint to (terminal variable in the chain, concrete
    /// constraint if any). At least one of the two is present.
    fn chase(&self, spec: &FSpec) -> (Option<String>, Option<FSpec>) {
        let mut cur = spec.clone();
        let mut last_var = None;
        let mut hops = 0;
        loop {
            match cur {
                FSpec::Var(name) => {
                    match self.map.get(&name) {
                        Some(next) => {
                            let next = next.clone();
                            last_var = Some(name);
                            cur = next;
                        }
                        None => return (Some(name), None),
                    }
                    hops += 1;
                    assert!(hops < 10_000, "binding chain cycle");
                }
                concrete => return (last_var, Some(concrete)),
            }
        }
    }

    fn bind(&mut self, var: &str, spec: FSpec) {
        debug_assert!(!matches!(&spec, FSpec::Var(v) if v == var));
        self.map.insert(var.to_string(), spec);
    }
}

/// Unify two constraints under the current bindings. Returns the combined
/// constraint, updating variable bindings; `None` on conflict. When a bound
/// variable unifies with a narrower constraint, its binding is refined so
/// all other uses of the variable see the narrowing.
pub fn unify_spec(a: &FSpec, b: &FSpec, binds: &mut Bindings) -> Option<FSpec> {
    let (va, ca) = binds.chase(a);
    let (vb, cb) = binds.chase(b);
    let combined = match (&ca, &cb) {
        (None, None) => {
            // Two unbound variables: link them.
            let (x, y) = (va.unwrap(), vb.unwrap());
            if x != y {
                binds.bind(&x, FSpec::Var(y.clone()));
            }
            return Some(FSpec::Var(y));
        }
        (Some(c), None) => c.clone(),
        (None, Some(c)) => c.clone(),
        (Some(FSpec::OneOf(s1)), Some(FSpec::OneOf(s2))) => {
            let inter: BTreeSet<String> = s1.intersection(s2).cloned().collect();
            if inter.is_empty() {
                return None;
            }
            FSpec::OneOf(inter)
        }
        (Some(FSpec::OneOf(s1)), Some(FSpec::NoneOf(s2)))
        | (Some(FSpec::NoneOf(s2)), Some(FSpec::OneOf(s1))) => {
            let diff: BTreeSet<String> = s1.difference(s2).cloned().collect();
            if diff.is_empty() {
                return None;
            }
            FSpec::OneOf(diff)
        }
        (Some(FSpec::NoneOf(s1)), Some(FSpec::NoneOf(s2))) => {
            FSpec::NoneOf(s1.union(s2).cloned().collect())
        }
        (Some(FSpec::Var(_)), _) | (_, Some(FSpec::Var(_))) => unreachable!("chase ends chains"),
    };
    for v in [va, vb].into_iter().flatten() {
        binds.bind(&v, combined.clone());
    }
    Some(combined)
}

/// Unify two feature lists. Attributes present in only one list carry over;
/// shared attributes must unify. Returns the merged list.
pub fn unify_features(
    a: &FeatureList,
    b: &FeatureList,
    binds: &mut Bindings,
) -> Option<FeatureList> {
    let mut merged = a.clone();
    for (attr, spec_b) in &b.0 {
        match merged.0.get(attr) {
            None => {
                merged.0.insert(attr.clone(), spec_b.clone());
            }
            Some(spec_a) => {
                let combined = unify_spec(spec_a, spec_b, binds)?;
                merged.0.insert(attr.clone(), combined);
            }
        }
    }
    Some(merged)
}
