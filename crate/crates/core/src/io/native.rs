//! Native format:
//!
//! ```text
//! feature <name> root
//!   feature <name> mandatory
//!   feature <name> optional
//!   group alternative|or
//!     feature <name>
//! constraints
//!   requires <name> <name>
//!   excludes <name> <name>
//! ```
//!
//! Two spaces per indentation level, `#` starts a comment, blank lines are
//! ignored. Names containing whitespace, `#` or `"` are double-quoted.

use std::collections::HashMap;
use std::fmt::Write;

use super::ParseError;
use crate::model::{
    CrossTreeConstraint, CtcKind, Decomposition, Feature, FeatureModel, Group, GroupKind,
};

struct Token {
    text: String,
    column: usize,
}

fn tokenize(line: &str, lineno: usize) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut chars = line.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        let column = line[..i].chars().count() + 1;
        if c == '"' {
            chars.next();
            let mut text = String::new();
            let mut closed = false;
            while let Some((_, c)) = chars.next() {
                match c {
                    '"' => {
                        closed = true;
                        break;
                    }
                    '\\' => match chars.next() {
                        Some((_, e)) => text.push(e),
                        None => break,
                    },
                    _ => text.push(c),
                }
            }
            if !closed {
                return Err(ParseError::syntax(lineno, column, "unterminated quoted name"));
            }
            out.push(Token { text, column });
        } else {
            let mut text = String::new();
            while let Some(&(_, c)) = chars.peek() {
                if c.is_whitespace() || c == '#' {
                    break;
                }
                text.push(c);
                chars.next();
            }
            out.push(Token { text, column });
        }
    }
    Ok(out)
}

enum Frame {
    Feature(String),
    Group(usize),
}

/// Parses the native format.
pub fn parse_native(text: &str) -> Result<FeatureModel, ParseError> {
    let mut features: Vec<Feature> = Vec::new();
    let mut groups: Vec<Group> = Vec::new();
    let mut ctcs = Vec::new();
    let mut names: HashMap<String, String> = HashMap::new();
    let mut stack: Vec<Frame> = Vec::new();
    let mut in_constraints = false;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let tokens = tokenize(raw, lineno)?;
        if tokens.is_empty() {
            continue;
        }
        let indent = raw.len() - raw.trim_start_matches(' ').len();
        if raw[indent..].starts_with('\t') {
            return Err(ParseError::syntax(lineno, indent + 1, "tabs are not allowed for indentation"));
        }
        if indent % 2 != 0 {
            return Err(ParseError::syntax(lineno, 1, "indentation must be a multiple of two spaces"));
        }
        let level = indent / 2;
        let words: Vec<&str> = tokens.iter().map(|t| t.text.as_str()).collect();
        let col = tokens[0].column;

        if level == 0 && words == ["constraints"] {
            in_constraints = true;
            stack.clear();
            continue;
        }

        if in_constraints {
            if level != 1 {
                return Err(ParseError::syntax(lineno, col, "constraints must be indented one level"));
            }
            let kind = match words[0] {
                "requires" => CtcKind::Requires,
                "excludes" => CtcKind::Excludes,
                other => {
                    return Err(ParseError::syntax(
                        lineno,
                        col,
                        format!("expected requires or excludes, found {other:?}"),
                    ))
                }
            };
            if tokens.len() != 3 {
                return Err(ParseError::syntax(lineno, col, "expected two feature names"));
            }
            let mut ids = Vec::new();
            for t in &tokens[1..] {
                match names.get(&t.text) {
                    Some(id) => ids.push(id.clone()),
                    None => {
                        return Err(ParseError::syntax(
                            lineno,
                            t.column,
                            format!("unknown feature {:?}", t.text),
                        ))
                    }
                }
            }
            ctcs.push(CrossTreeConstraint {
                kind,
                lhs: ids[0].clone(),
                rhs: ids[1].clone(),
            });
            continue;
        }

        if level > stack.len() {
            return Err(ParseError::syntax(
                lineno,
                col,
                "declaration under unknown parent (indentation too deep)",
            ));
        }
        stack.truncate(level);

        match words[0] {
            "feature" => {
                let (name, decomposition) = match (stack.last(), tokens.len()) {
                    (None, 3) if words[2] == "root" => {
                        if !features.is_empty() {
                            return Err(ParseError::syntax(lineno, col, "second root feature"));
                        }
                        (&tokens[1], Decomposition::Root)
                    }
                    (None, _) => {
                        return Err(ParseError::syntax(lineno, col, "expected `feature <name> root`"))
                    }
                    (Some(Frame::Feature(_)), 3) => match words[2] {
                        "mandatory" => (&tokens[1], Decomposition::Mandatory),
                        "optional" => (&tokens[1], Decomposition::Optional),
                        other => {
                            return Err(ParseError::syntax(
                                lineno,
                                tokens[2].column,
                                format!("expected mandatory or optional, found {other:?}"),
                            ))
                        }
                    },
                    (Some(Frame::Feature(_)), _) => {
                        return Err(ParseError::syntax(
                            lineno,
                            col,
                            "expected `feature <name> mandatory|optional`",
                        ))
                    }
                    (Some(Frame::Group(_)), 2) => (&tokens[1], Decomposition::GroupMember),
                    (Some(Frame::Group(_)), _) => {
                        return Err(ParseError::syntax(lineno, col, "expected `feature <name>` in group"))
                    }
                };
                let parent = match stack.last() {
                    None => None,
                    Some(Frame::Feature(p)) => Some(p.clone()),
                    Some(Frame::Group(g)) => Some(groups[*g].parent.clone()),
                };
                if names.contains_key(&name.text) {
                    return Err(ParseError::DuplicateName {
                        line: lineno,
                        name: name.text.clone(),
                    });
                }
                let f = Feature::new(&name.text, parent.as_deref(), decomposition);
                names.insert(name.text.clone(), f.id.clone());
                if let Some(Frame::Group(g)) = stack.last() {
                    groups[*g].members.push(f.id.clone());
                }
                stack.push(Frame::Feature(f.id.clone()));
                features.push(f);
            }
            "group" => {
                let Some(Frame::Feature(parent)) = stack.last() else {
                    return Err(ParseError::syntax(lineno, col, "group must be nested under a feature"));
                };
                let kind = match (tokens.len(), words.get(1)) {
                    (2, Some(&"alternative")) => GroupKind::Alternative,
                    (2, Some(&"or")) => GroupKind::Or,
                    _ => {
                        return Err(ParseError::syntax(lineno, col, "expected `group alternative|or`"))
                    }
                };
                groups.push(Group {
                    parent: parent.clone(),
                    kind,
                    members: Vec::new(),
                });
                stack.push(Frame::Group(groups.len() - 1));
            }
            other => {
                return Err(ParseError::syntax(
                    lineno,
                    col,
                    format!("expected feature, group or constraints, found {other:?}"),
                ))
            }
        }
    }

    if features.is_empty() {
        return Err(ParseError::syntax(1, 1, "no root feature declared"));
    }
    FeatureModel::new(features, groups, ctcs).map_err(ParseError::Invalid)
}

fn quote(name: &str) -> String {
    let plain = !name.is_empty()
        && !name
            .chars()
            .any(|c| c.is_whitespace() || c == '#' || c == '"' || c == '\\');
    if plain {
        name.to_string()
    } else {
        let escaped = name.replace('\\', "\\\\").replace('"', "\\\"");
        format!("\"{escaped}\"")
    }
}

/// Canonical native text for a model; `parse_native` inverts it.
pub fn serialize_native(fm: &FeatureModel) -> String {
    let mut out = String::new();
    write_feature(fm, fm.root(), 0, &mut out);
    if !fm.ctcs().is_empty() {
        out.push_str("constraints\n");
        for c in fm.ctcs() {
            let name = |id: &str| quote(&fm.feature(fm.index_of(id).expect("valid")).name);
            let _ = writeln!(out, "  {} {} {}", c.kind, name(&c.lhs), name(&c.rhs));
        }
    }
    out
}

fn write_feature(fm: &FeatureModel, f: usize, depth: usize, out: &mut String) {
    let feature = fm.feature(f);
    let pad = "  ".repeat(depth);
    let suffix = match feature.decomposition {
        Decomposition::Root => " root",
        Decomposition::Mandatory => " mandatory",
        Decomposition::Optional => " optional",
        Decomposition::GroupMember => "",
    };
    let _ = writeln!(out, "{pad}feature {}{suffix}", quote(&feature.name));

    let kids = fm.children(f);
    let mut i = 0;
    while i < kids.len() {
        let c = kids[i];
        match fm.group_of(c) {
            Some(g) => {
                let _ = writeln!(out, "{pad}  group {}", g.kind);
                for m in &g.members {
                    write_feature(fm, fm.index_of(m).expect("valid"), depth + 2, out);
                }
                i += g.members.len();
            }
            None => {
                write_feature(fm, c, depth + 1, out);
                i += 1;
            }
        }
    }
}
