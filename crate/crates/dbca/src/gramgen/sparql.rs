//! SPARQL output normalization: canonical clause order and variable names.
//!
//! Queries produced by resolution can list `WHERE` clauses in any order and
//! number their variables arbitrarily. Normalization makes semantically
//! identical queries textually identical by sorting the clauses and
//! renumbering variables `?x0, ?x1, ...` in order of first appearance, then
//! repeating both steps until a fixed point (sorting can change which
//! variable appears first, which changes the renumbering, which changes the
//! sort order). A cycle in that iteration is broken by picking the
//! lexicographically smallest member.

use std::collections::HashMap;

/// Normalize a SPARQL query string. Inputs without a `{ ... }` body are
/// returned with whitespace collapsed.
pub fn normalize_sparql(query: &str) -> String {
    let collapsed = collapse_ws(query);
    if split_body(&collapsed).is_none() {
        return collapsed;
    }
    let mut current = collapsed;
    let mut seen: Vec<String> = vec![current.clone()];
    loop {
        let (prefix, body, suffix) = split_body(&current).expect("body present");
        let sorted = sort_clauses(body).join(" . ");
        let next = renumber(&format!("{prefix}{{ {sorted} }}{suffix}"));
        if next == current {
            return next;
        }
        if let Some(pos) = seen.iter().position(|s| *s == next) {
            // Cycle: choose the smallest member for determinism.
            return seen[pos..].iter().min().unwrap().clone();
        }
        seen.push(next.clone());
        current = next;
    }
}

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Split into (text before `{`, body, text after `}`), using the first `{`
/// and last `}`.
fn split_body(s: &str) -> Option<(&str, &str, &str)> {
    let open = s.find('{')?;
    let close = s.rfind('}')?;
    if close < open {
        return None;
    }
    Some((
        &s[..open],
        s[open + 1..close].trim(),
        &s[close + 1..],
    ))
}

fn sort_clauses(body: &str) -> Vec<String> {
    let mut clauses: Vec<String> = body
        .split(" . ")
        .map(|c| c.trim().trim_end_matches(" .").trim().to_string())
        .filter(|c| !c.is_empty())
        .collect();
    clauses.sort();
    clauses.dedup();
    clauses
}

/// Renumber `?x<digits>` variables in order of first appearance across the
/// whole query, so the projected variable (named first) becomes `?x0`.
fn renumber(body: &str) -> String {
    let mut mapping: HashMap<String, String> = HashMap::new();
    let mut next = 0usize;
    let mut out = String::with_capacity(body.len());
    let mut chars = body.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if c == '?' {
            let start = i + 1;
            let mut end = start;
            for (j, d) in body[start..].char_indices() {
                if d.is_ascii_alphanumeric() || d == '_' {
                    end = start + j + d.len_utf8();
                } else {
                    break;
                }
            }
            let name = &body[start..end];
            if is_x_var(name) {
                let new = mapping.entry(name.to_string()).or_insert_with(|| {
                    let v = format!("x{next}");
                    next += 1;
                    v
                });
                out.push('?');
                out.push_str(new);
                // Skip the consumed variable name.
                while let Some(&(j, _)) = chars.peek() {
                    if j < end {
                        chars.next();
                    } else {
                        break;
                    }
                }
                continue;
            }
        }
        out.push(c);
    }
    out
}

fn is_x_var(name: &str) -> bool {
    name.len() > 1
        && name.starts_with('x')
        && name[1..].chars().all(|c| c.is_ascii_digit())
}
