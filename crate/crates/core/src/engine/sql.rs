//! SQL-like rendering of conjunctive queries, for inspection only.

use super::{AttrRef, ConjunctiveQuery, Predicate};

fn ident(s: &str) -> String {
    let plain = s
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if plain {
        s.to_string()
    } else {
        format!("\"{}\"", s.replace('"', "\"\""))
    }
}

fn attr(a: &AttrRef) -> String {
    format!("{}.{}", ident(&a.table), ident(&a.attribute))
}

fn pred(p: &Predicate, nested: bool) -> String {
    match p {
        Predicate::True => "TRUE".into(),
        Predicate::Atom { attr: a, value } => format!("{}={}", attr(a), u8::from(*value)),
        Predicate::Eq(a, b) => format!("{}={}", attr(a), attr(b)),
        Predicate::Not(q) => format!("NOT ({})", pred(q, false)),
        Predicate::And(qs) | Predicate::Or(qs) => {
            let is_and = matches!(p, Predicate::And(_));
            let sep = if is_and { " AND " } else { " OR " };
            let body = qs
                .iter()
                .map(|q| pred(q, is_and || !matches!(q, Predicate::And(_))))
                .collect::<Vec<_>>()
                .join(sep);
            if nested && qs.len() > 1 {
                format!("({body})")
            } else {
                body
            }
        }
    }
}

/// `SELECT .. FROM .. WHERE .. LIMIT ..`; identifiers that are not plain
/// SQL words (such as `t-st`) are double-quoted.
pub fn render_sql(q: &ConjunctiveQuery) -> String {
    let select = if q.select.is_empty() {
        "*".to_string()
    } else {
        q.select.iter().map(attr).collect::<Vec<_>>().join(", ")
    };
    let from = q
        .from
        .iter()
        .map(|t| ident(t.name()))
        .collect::<Vec<_>>()
        .join(", ");
    let mut out = format!("SELECT {select} FROM {from}");
    if !q.conjuncts.is_empty() {
        let conds: Vec<String> = q.conjuncts.iter().map(|c| pred(c, true)).collect();
        out.push_str(" WHERE ");
        out.push_str(&conds.join(" AND "));
    }
    if let Some(k) = q.limit {
        out.push_str(&format!(" LIMIT {k}"));
    }
    out
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::engine::Table;

    #[test]
    fn renders_local_consistency_join() {
        let nt = Arc::new(Table::from_bits("n-t", &["n", "t"], &[]).unwrap());
        let tst = Arc::new(Table::from_bits("t-st", &["t", "st"], &[]).unwrap());
        let q = ConjunctiveQuery::new(vec![nt, tst])
            .filter(Predicate::eq(AttrRef::new("n-t", "t"), AttrRef::new("t-st", "t")))
            .select([
                AttrRef::new("n-t", "n"),
                AttrRef::new("n-t", "t"),
                AttrRef::new("t-st", "st"),
            ]);
        assert_eq!(
            render_sql(&q),
            "SELECT \"n-t\".n, \"n-t\".t, \"t-st\".st FROM \"n-t\", \"t-st\" WHERE \"n-t\".t=\"t-st\".t"
        );
    }

    #[test]
    fn renders_nested_conditions_and_limit() {
        let s = Arc::new(Table::from_bits("s", &["val"], &[]).unwrap());
        let p = Arc::new(Table::from_bits("p", &["val"], &[]).unwrap());
        let sv = AttrRef::new("s", "val");
        let pv = AttrRef::new("p", "val");
        let q = ConjunctiveQuery::new(vec![s, p])
            .filter(Predicate::Or(vec![
                Predicate::And(vec![
                    Predicate::atom(sv.clone(), true),
                    Predicate::atom(pv.clone(), true),
                ]),
                Predicate::And(vec![Predicate::atom(sv, false), Predicate::atom(pv, false)]),
            ]))
            .select_all()
            .limit(1);
        assert_eq!(
            render_sql(&q),
            "SELECT s.val, p.val FROM s, p WHERE (s.val=1 AND p.val=1 OR s.val=0 AND p.val=0) LIMIT 1"
        );
    }
}
