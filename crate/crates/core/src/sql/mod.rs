//! A SQL subset compiled to key-value operations. A row's cells live under
//! one key per column, and table membership is a set of primary keys kept
//! as one Boolean key per row, so every cell read goes through the
//! isolation level.

mod ast;
mod exec;
mod keys;
mod parser;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::executor::ExecError;
use crate::value::Value;

pub use ast::{CmpOp, Operand, Pred, Projection, Statement};
pub use exec::{elements, execute, run_script, set_add, set_remove, Outcome};
pub use keys::{decode_components, encode_cell_key, encode_has_key};
pub use parser::{parse_statement, split_statements, SyntaxError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableDef {
    /// Column names; the first is the primary key.
    pub columns: Vec<String>,
}

impl TableDef {
    pub fn pkey(&self) -> &str {
        &self.columns[0]
    }

    pub fn position(&self, column: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == column)
    }
}

/// Schema plus the grow-only registry of primary-key values ever inserted
/// into each table.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    tables: BTreeMap<String, TableDef>,
    registry: BTreeMap<String, BTreeSet<Value>>,
}

impl Catalog {
    pub fn new() -> Self {
        Catalog::default()
    }

    pub fn table(&self, name: &str) -> Result<&TableDef, SqlError> {
        self.tables
            .get(name)
            .ok_or_else(|| SqlError::UnknownTable(name.to_owned()))
    }

    pub fn tables(&self) -> impl Iterator<Item = (&String, &TableDef)> {
        self.tables.iter()
    }

    pub fn create_table(&mut self, name: &str, columns: Vec<String>) -> Result<(), SqlError> {
        if self.tables.contains_key(name) {
            return Err(SqlError::TableExists(name.to_owned()));
        }
        let unique: BTreeSet<&String> = columns.iter().collect();
        if columns.is_empty() || unique.len() != columns.len() {
            return Err(SqlError::DuplicateColumn(name.to_owned()));
        }
        self.tables.insert(name.to_owned(), TableDef { columns });
        self.registry.entry(name.to_owned()).or_default();
        Ok(())
    }

    /// Registered primary-key values, ascending.
    pub fn registered(&self, table: &str) -> Vec<Value> {
        self.registry
            .get(table)
            .map(|r| r.iter().cloned().collect())
            .unwrap_or_default()
    }

    pub(crate) fn register(&mut self, table: &str, pk: Value) {
        self.registry.entry(table.to_owned()).or_default().insert(pk);
    }

    /// Checks that the statement's table and columns exist and that
    /// inserts supply one value per column.
    pub fn validate(&self, stmt: &Statement) -> Result<(), SqlError> {
        let check = |def: &TableDef, table: &str, cols: &mut dyn Iterator<Item = &str>| {
            for c in cols {
                if def.position(c).is_none() {
                    return Err(SqlError::UnknownColumn {
                        table: table.to_owned(),
                        column: c.to_owned(),
                    });
                }
            }
            Ok(())
        };
        fn filter_cols(f: &Option<Pred>) -> Vec<&str> {
            f.as_ref().map(|p| p.columns()).unwrap_or_default()
        }
        match stmt {
            Statement::Select {
                columns,
                table,
                filter,
            } => {
                let def = self.table(table)?;
                if let Projection::Columns(cs) = columns {
                    check(def, table, &mut cs.iter().map(String::as_str))?;
                }
                check(def, table, &mut filter_cols(filter).into_iter())
            }
            Statement::Insert { table, values } => {
                let def = self.table(table)?;
                if values.len() != def.columns.len() {
                    return Err(SqlError::Arity {
                        expected: def.columns.len(),
                        found: values.len(),
                    });
                }
                Ok(())
            }
            Statement::Delete { table, filter } => {
                let def = self.table(table)?;
                check(def, table, &mut filter_cols(filter).into_iter())
            }
            Statement::Update {
                table,
                assignments,
                filter,
            } => {
                let def = self.table(table)?;
                check(def, table, &mut assignments.iter().map(|(c, _)| c.as_str()))?;
                if assignments.iter().any(|(c, _)| c == def.pkey()) {
                    return Err(SqlError::PrimaryKeyUpdate(table.clone()));
                }
                check(def, table, &mut filter_cols(filter).into_iter())
            }
            Statement::CreateTable { .. } | Statement::Begin | Statement::Commit => Ok(()),
        }
    }

    /// Parses and validates one statement.
    pub fn parse(&self, text: &str) -> Result<Statement, SqlError> {
        let stmt = parse_statement(text)?;
        self.validate(&stmt)?;
        Ok(stmt)
    }
}

/// Query result: rows in primary-key order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RowSet {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl RowSet {
    /// Rows as column-name to value maps.
    pub fn records(&self) -> Vec<BTreeMap<String, Value>> {
        self.rows
            .iter()
            .map(|r| self.columns.iter().cloned().zip(r.iter().cloned()).collect())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SqlError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("unknown table {0}")]
    UnknownTable(String),
    #[error("unknown column {column} in table {table}")]
    UnknownColumn { table: String, column: String },
    #[error("table {0} already exists")]
    TableExists(String),
    #[error("duplicate or missing columns in table {0}")]
    DuplicateColumn(String),
    #[error("expected {expected} values, found {found}")]
    Arity { expected: usize, found: usize },
    #[error("duplicate primary key {key} in table {table}")]
    DuplicateKey { table: String, key: Value },
    #[error("primary key of table {0} cannot be null")]
    NullPrimaryKey(String),
    #[error("primary key of table {0} cannot be updated")]
    PrimaryKeyUpdate(String),
    #[error("cannot compare {0} with {1}")]
    TypeError(Value, Value),
    #[error(transparent)]
    Exec(#[from] ExecError),
}
