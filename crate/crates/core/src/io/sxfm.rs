//! SXFM (S.P.L.O.T.) subset: a `<feature_model>` document whose
//! `<feature_tree>` holds an indented tree of `:r`, `:m`, `:o`, `:g` and `:`
//! lines, and whose `<constraints>` hold two-literal CNF clauses.

use std::collections::{HashMap, HashSet};

use super::ParseError;
use crate::model::{
    slug, CrossTreeConstraint, CtcKind, Decomposition, Feature, FeatureModel, Group, GroupKind,
};

struct Line<'a> {
    text: &'a str,
    line: usize,
    column: usize,
}

/// Non-blank lines of a text node, with their position in the document.
fn lines_of<'a>(doc: &roxmltree::Document, node: roxmltree::Node<'a, 'a>) -> Vec<Line<'a>> {
    let mut out = Vec::new();
    for child in node.children().filter(|n| n.is_text()) {
        let Some(text) = child.text() else { continue };
        let start = doc.text_pos_at(child.range().start);
        for (i, raw) in text.split('\n').enumerate() {
            let raw = raw.trim_end_matches('\r');
            if raw.trim().is_empty() {
                continue;
            }
            let column = if i == 0 { start.col as usize } else { 1 };
            out.push(Line {
                text: raw,
                line: start.row as usize + i,
                column,
            });
        }
    }
    out
}

fn indent_width(raw: &str) -> usize {
    raw.chars()
        .take_while(|c| c.is_whitespace())
        .map(|c| if c == '\t' { 4 } else { 1 })
        .sum()
}

/// Splits `Name (id)` into name and optional id.
fn name_and_id(rest: &str) -> (String, Option<String>) {
    let rest = rest.trim();
    if rest.ends_with(')') {
        if let Some(open) = rest.rfind('(') {
            let id = rest[open + 1..rest.len() - 1].trim().to_string();
            let name = rest[..open].trim().to_string();
            return (name, Some(id));
        }
    }
    (rest.to_string(), None)
}

enum Node {
    Feature(String),
    Group(usize),
}

/// Parses an SXFM document.
pub fn parse_sxfm(text: &str) -> Result<FeatureModel, ParseError> {
    let doc = roxmltree::Document::parse(text).map_err(|e| {
        let pos = e.pos();
        ParseError::syntax(pos.row as usize, pos.col as usize, e.to_string())
    })?;
    let root = doc.root_element();
    let root_pos = doc.text_pos_at(root.range().start);
    if root.tag_name().name() != "feature_model" {
        return Err(ParseError::syntax(
            root_pos.row as usize,
            root_pos.col as usize,
            format!("expected <feature_model>, found <{}>", root.tag_name().name()),
        ));
    }
    let tree = root
        .children()
        .find(|n| n.has_tag_name("feature_tree"))
        .ok_or_else(|| {
            ParseError::syntax(root_pos.row as usize, root_pos.col as usize, "missing <feature_tree>")
        })?;

    let mut features: Vec<Feature> = Vec::new();
    let mut groups: Vec<Group> = Vec::new();
    let mut by_sxfm_id: HashMap<String, String> = HashMap::new();
    let mut used_ids: HashSet<String> = HashSet::new();
    let mut stack: Vec<(usize, Node)> = Vec::new();

    for l in lines_of(&doc, tree) {
        let width = indent_width(l.text);
        let body = l.text.trim();
        let column = l.column + (l.text.len() - l.text.trim_start().len());
        while stack.last().is_some_and(|(w, _)| *w >= width) {
            stack.pop();
        }

        let Some(body) = body.strip_prefix(':') else {
            return Err(ParseError::syntax(l.line, column, format!("expected a `:` node marker, found {body:?}")));
        };
        let (marker, rest) = match body.chars().next() {
            Some(c @ ('r' | 'm' | 'o' | 'g')) => (Some(c), &body[1..]),
            _ => (None, body),
        };

        if marker == Some('g') {
            let Some((_, Node::Feature(parent))) = stack.last() else {
                return Err(ParseError::syntax(l.line, column, "group must be nested under a feature"));
            };
            let open = rest.rfind('[').ok_or_else(|| {
                ParseError::syntax(l.line, column, "group without cardinality")
            })?;
            let card: String = rest[open..].chars().filter(|c| !c.is_whitespace()).collect();
            let kind = match card.as_str() {
                "[1,1]" => GroupKind::Alternative,
                "[1,*]" => GroupKind::Or,
                other => {
                    return Err(ParseError::Unsupported {
                        line: l.line,
                        message: format!("unsupported construct: group cardinality {other}"),
                    })
                }
            };
            groups.push(Group {
                parent: parent.clone(),
                kind,
                members: Vec::new(),
            });
            stack.push((width, Node::Group(groups.len() - 1)));
            continue;
        }

        let (name, sxfm_id) = name_and_id(rest);
        if name.is_empty() {
            return Err(ParseError::syntax(l.line, column, "feature without a name"));
        }
        let (parent, decomposition) = match (marker, stack.last()) {
            (Some('r'), None) if features.is_empty() => (None, Decomposition::Root),
            (Some('r'), _) => {
                return Err(ParseError::syntax(l.line, column, "root marker below the top level"))
            }
            (_, None) => {
                return Err(ParseError::syntax(l.line, column, "feature outside the root"))
            }
            (Some('m'), Some((_, Node::Feature(p)))) => (Some(p.clone()), Decomposition::Mandatory),
            (Some('o'), Some((_, Node::Feature(p)))) => (Some(p.clone()), Decomposition::Optional),
            (None, Some((_, Node::Group(g)))) => {
                (Some(groups[*g].parent.clone()), Decomposition::GroupMember)
            }
            (None, Some((_, Node::Feature(_)))) => {
                return Err(ParseError::syntax(l.line, column, "group member outside a group"))
            }
            (_, Some((_, Node::Group(_)))) => {
                return Err(ParseError::syntax(l.line, column, "group members use the bare `:` marker"))
            }
            _ => unreachable!("marker is r, m, o or none here"),
        };

        // Repository models reuse names such as "None"; keep ids unique.
        let mut display = name.clone();
        if used_ids.contains(&slug(&display)) {
            display = format!("{name} ({})", sxfm_id.clone().unwrap_or_else(|| features.len().to_string()));
        }
        let f = Feature::new(&display, parent.as_deref(), decomposition);
        used_ids.insert(f.id.clone());
        if let Some(sid) = sxfm_id {
            by_sxfm_id.insert(sid, f.id.clone());
        }
        if let Some((_, Node::Group(g))) = stack.last() {
            groups[*g].members.push(f.id.clone());
        }
        stack.push((width, Node::Feature(f.id.clone())));
        features.push(f);
    }

    if features.is_empty() {
        let p = doc.text_pos_at(tree.range().start);
        return Err(ParseError::syntax(p.row as usize, p.col as usize, "empty feature tree"));
    }

    let mut ctcs = Vec::new();
    if let Some(cnode) = root.children().find(|n| n.has_tag_name("constraints")) {
        for l in lines_of(&doc, cnode) {
            ctcs.push(parse_clause(&l, &by_sxfm_id)?);
        }
    }

    FeatureModel::new(features, groups, ctcs).map_err(ParseError::Invalid)
}

fn parse_clause(l: &Line, ids: &HashMap<String, String>) -> Result<CrossTreeConstraint, ParseError> {
    let body = l.text.trim();
    let clause = match body.split_once(':') {
        Some((_, c)) => c,
        None => body,
    };
    let unsupported = || ParseError::Unsupported {
        line: l.line,
        message: format!("unsupported construct: clause {body:?} is not requires/excludes shaped"),
    };
    let literals: Vec<&str> = clause.split(" or ").map(str::trim).collect();
    if literals.len() != 2 {
        return Err(unsupported());
    }
    let mut lits = Vec::new();
    for lit in literals {
        let (neg, id) = match lit.strip_prefix('~') {
            Some(id) => (true, id.trim()),
            None => (false, lit),
        };
        let fid = ids.get(id).ok_or_else(|| {
            ParseError::syntax(l.line, l.column, format!("clause references unknown feature id {id:?}"))
        })?;
        lits.push((neg, fid.clone()));
    }
    let (a, b) = (&lits[0], &lits[1]);
    let (kind, lhs, rhs) = match (a.0, b.0) {
        (true, false) => (CtcKind::Requires, &a.1, &b.1),
        (false, true) => (CtcKind::Requires, &b.1, &a.1),
        (true, true) => (CtcKind::Excludes, &a.1, &b.1),
        (false, false) => return Err(unsupported()),
    };
    Ok(CrossTreeConstraint {
        kind,
        lhs: lhs.clone(),
        rhs: rhs.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::survey_model;

    const SURVEY: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<feature_model name="survey">
<feature_tree>
:r s(_r)
	:m p(_r_1)
		:g (_r_1_2) [1,1]
			: l(_r_1_2_3)
			: n(_r_1_2_4)
	:o t(_r_5)
	:o st(_r_6)
	:m q(_r_7)
		:g (_r_7_8) [1,*]
			: m(_r_7_8_9)
			: mm(_r_7_8_10)
</feature_tree>
<constraints>
C1:~_r_5 or ~_r_1_2_4
C2:~_r_5 or _r_6
</constraints>
</feature_model>
"#;

    #[test]
    fn survey_sxfm_matches_reference() {
        assert_eq!(parse_sxfm(SURVEY).unwrap(), survey_model());
    }

    #[test]
    fn minimal_document() {
        let fm = parse_sxfm("<feature_model><feature_tree>\n:r Root(_r)\n</feature_tree></feature_model>").unwrap();
        assert_eq!(fm.len(), 1);
        assert!(fm.groups().is_empty());
        assert!(fm.ctcs().is_empty());
    }

    #[test]
    fn unsupported_cardinality() {
        let text = "<feature_model><feature_tree>\n:r R(_r)\n\t:g (_g) [2,3]\n\t\t: a(_a)\n\t\t: b(_b)\n\t\t: c(_c)\n</feature_tree></feature_model>";
        let err = parse_sxfm(text).unwrap_err();
        assert!(matches!(err, ParseError::Unsupported { line: 3, .. }), "{err}");
        assert!(err.to_string().contains("unsupported construct"));
    }

    #[test]
    fn unsupported_clause() {
        let text = "<feature_model><feature_tree>\n:r R(_r)\n\t:o a(_a)\n\t:o b(_b)\n</feature_tree>\n<constraints>\nC1: _a or _b\n</constraints></feature_model>";
        assert!(matches!(parse_sxfm(text), Err(ParseError::Unsupported { line: 7, .. })));
        let three = text.replace("_a or _b", "~_a or _b or ~_r");
        assert!(matches!(parse_sxfm(&three), Err(ParseError::Unsupported { .. })));
    }

    #[test]
    fn malformed_markup_has_position() {
        let err = parse_sxfm("<feature_model>\n<feature_tree>\n</feature_model>").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 3, .. }), "{err}");
    }

    #[test]
    fn duplicate_names_are_disambiguated() {
        let text = "<feature_model><feature_tree>\n:r R(_r)\n\t:o X(_a)\n\t\t:o None(_n1)\n\t:o Y(_b)\n\t\t:o None(_n2)\n</feature_tree></feature_model>";
        let fm = parse_sxfm(text).unwrap();
        assert_eq!(fm.feature(2).name, "None");
        assert_eq!(fm.feature(4).name, "None (_n2)");
    }

    #[test]
    fn names_with_spaces() {
        let text = "<feature_model><feature_tree>\n:r Dell Laptop(_r)\n\t:m Hard Drive (_r_1)\n</feature_tree></feature_model>";
        let fm = parse_sxfm(text).unwrap();
        assert_eq!(fm.feature(1).name, "Hard Drive");
        assert_eq!(fm.feature(1).id, "hard_drive");
    }
}
