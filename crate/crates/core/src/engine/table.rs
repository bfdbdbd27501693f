use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use super::EngineError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TableSchema {
    pub name: String,
    pub attributes: Vec<String>,
}

impl TableSchema {
    pub fn new(name: impl Into<String>, attributes: Vec<String>) -> Result<Self, EngineError> {
        let name = name.into();
        let mut seen = HashSet::new();
        for a in &attributes {
            if !seen.insert(a.as_str()) {
                return Err(EngineError::DuplicateAttribute {
                    table: name,
                    attribute: a.clone(),
                });
            }
        }
        Ok(TableSchema { name, attributes })
    }

    pub fn arity(&self) -> usize {
        self.attributes.len()
    }

    pub fn position(&self, attribute: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a == attribute)
    }
}

/// A duplicate-free relation over {0,1}. Rows keep insertion order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Table {
    schema: TableSchema,
    rows: Vec<Vec<bool>>,
}

impl Table {
    /// Builds a table, dropping repeated rows (first occurrence kept).
    pub fn new<I>(schema: TableSchema, rows: I) -> Result<Self, EngineError>
    where
        I: IntoIterator<Item = Vec<bool>>,
    {
        let mut seen = HashSet::new();
        let mut kept = Vec::new();
        for row in rows {
            if row.len() != schema.arity() {
                return Err(EngineError::Arity {
                    table: schema.name.clone(),
                    expected: schema.arity(),
                    got: row.len(),
                });
            }
            if seen.insert(row.clone()) {
                kept.push(row);
            }
        }
        Ok(Table { schema, rows: kept })
    }

    /// Convenience constructor from 0/1 literals.
    pub fn from_bits(name: &str, attributes: &[&str], rows: &[&[u8]]) -> Result<Self, EngineError> {
        let schema = TableSchema::new(name, attributes.iter().map(|a| a.to_string()).collect())?;
        Table::new(
            schema,
            rows.iter().map(|r| r.iter().map(|&b| b != 0).collect()),
        )
    }

    pub fn schema(&self) -> &TableSchema {
        &self.schema
    }

    pub fn name(&self) -> &str {
        &self.schema.name
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows as 0/1 bytes, handy for comparisons in tests.
    pub fn bits(&self) -> Vec<Vec<u8>> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&b| u8::from(b)).collect())
            .collect()
    }
}

impl fmt::Display for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}({})", self.schema.name, self.schema.attributes.join(", "))?;
        for r in &self.rows {
            let cells: Vec<&str> = r.iter().map(|&b| if b { "1" } else { "0" }).collect();
            writeln!(f, "  ({})", cells.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_rows_are_dropped() {
        let t = Table::from_bits("x", &["a"], &[&[1], &[0], &[1]]).unwrap();
        assert_eq!(t.bits(), vec![vec![1], vec![0]]);
    }

    #[test]
    fn arity_and_attribute_checks() {
        assert!(matches!(
            Table::from_bits("x", &["a", "b"], &[&[1]]),
            Err(EngineError::Arity { expected: 2, got: 1, .. })
        ));
        assert!(matches!(
            TableSchema::new("x", vec!["a".into(), "a".into()]),
            Err(EngineError::DuplicateAttribute { .. })
        ));
    }
}
