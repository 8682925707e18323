use std::collections::BTreeMap;
use std::sync::Mutex;

use super::ast::{Operand, Pred, Projection, Statement};
use super::keys::{encode_cell_key, encode_has_key};
use super::parser::{parse_statement, split_statements};
use super::{Catalog, RowSet, SqlError};
use crate::executor::{Kv, TxnControl};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Rows(RowSet),
    Affected(usize),
    Created,
    Begun,
    Committed,
}

/// Adds `pk` to the table's row set; false when already present.
pub fn set_add<K: Kv + ?Sized>(kv: &mut K, table: &str, pk: &Value) -> Result<bool, SqlError> {
    let has = encode_has_key(table, pk);
    if kv.read(&has)? == Value::Bool(true) {
        return Ok(false);
    }
    kv.write(&has, Value::Bool(true))?;
    Ok(true)
}

/// Removes `pk` from the table's row set; false when absent.
pub fn set_remove<K: Kv + ?Sized>(kv: &mut K, table: &str, pk: &Value) -> Result<bool, SqlError> {
    let has = encode_has_key(table, pk);
    if kv.read(&has)? != Value::Bool(true) {
        return Ok(false);
    }
    kv.write(&has, Value::Bool(false))?;
    Ok(true)
}

/// Primary keys of the rows this transaction sees in the table.
pub fn elements<K: Kv + ?Sized>(kv: &mut K, catalog: &Catalog, table: &str) -> Result<Vec<Value>, SqlError> {
    catalog.table(table)?;
    let mut out = Vec::new();
    for pk in catalog.registered(table) {
        if kv.read(&encode_has_key(table, &pk))? == Value::Bool(true) {
            out.push(pk);
        }
    }
    Ok(out)
}

type Cells = BTreeMap<String, Value>;

fn compare(a: &Value, b: &Value) -> Result<Option<std::cmp::Ordering>, SqlError> {
    match (a, b) {
        (Value::Null, _) | (_, Value::Null) => Ok(None),
        (Value::Int(_), Value::Int(_))
        | (Value::Str(_), Value::Str(_))
        | (Value::Bool(_), Value::Bool(_))
        | (Value::List(_), Value::List(_)) => Ok(Some(a.cmp(b))),
        _ => Err(SqlError::TypeError(a.clone(), b.clone())),
    }
}

fn eval(p: &Pred, cells: &Cells) -> Result<bool, SqlError> {
    let operand = |o: &Operand| match o {
        Operand::Column(c) => cells[c].clone(),
        Operand::Literal(v) => v.clone(),
    };
    Ok(match p {
        Pred::Cmp(a, op, b) => compare(&operand(a), &operand(b))?.is_some_and(|o| op.holds(o)),
        Pred::And(a, b) => eval(a, cells)? && eval(b, cells)?,
        Pred::Or(a, b) => eval(a, cells)? || eval(b, cells)?,
        Pred::Not(a) => !eval(a, cells)?,
    })
}

/// Rows present in the table that satisfy `filter`, with the cells read
/// so far. Only the filter's cells of present rows are read.
fn scan<K: Kv + ?Sized>(
    kv: &mut K,
    catalog: &Catalog,
    table: &str,
    filter: Option<&Pred>,
) -> Result<Vec<(Value, Cells)>, SqlError> {
    let mut out = Vec::new();
    for pk in elements(kv, catalog, table)? {
        let mut cells = Cells::new();
        if let Some(p) = filter {
            for c in p.columns() {
                let v = kv.read(&encode_cell_key(table, &pk, c))?;
                cells.insert(c.to_owned(), v);
            }
            if !eval(p, &cells)? {
                continue;
            }
        }
        out.push((pk, cells));
    }
    Ok(out)
}

/// Executes one statement inside the session's live transaction.
/// `BEGIN` and `COMMIT` are handled by [`run_script`].
pub fn execute<K: Kv + ?Sized>(kv: &mut K, catalog: &mut Catalog, stmt: &Statement) -> Result<Outcome, SqlError> {
    catalog.validate(stmt)?;
    match stmt {
        Statement::Select {
            columns,
            table,
            filter,
        } => {
            let def = catalog.table(table)?.clone();
            let columns = match columns {
                Projection::All => def.columns.clone(),
                Projection::Columns(cs) => cs.clone(),
            };
            let mut rows = Vec::new();
            for (pk, mut cells) in scan(kv, catalog, table, filter.as_ref())? {
                let mut row = Vec::with_capacity(columns.len());
                for c in &columns {
                    if !cells.contains_key(c) {
                        let v = kv.read(&encode_cell_key(table, &pk, c))?;
                        cells.insert(c.clone(), v);
                    }
                    row.push(cells[c].clone());
                }
                rows.push(row);
            }
            Ok(Outcome::Rows(RowSet { columns, rows }))
        }
        Statement::Insert { table, values } => {
            let def = catalog.table(table)?.clone();
            let pk = &values[0];
            if *pk == Value::Null {
                return Err(SqlError::NullPrimaryKey(table.clone()));
            }
            if !set_add(kv, table, pk)? {
                return Err(SqlError::DuplicateKey {
                    table: table.clone(),
                    key: pk.clone(),
                });
            }
            catalog.register(table, pk.clone());
            for (c, v) in def.columns.iter().zip(values) {
                kv.write(&encode_cell_key(table, pk, c), v.clone())?;
            }
            Ok(Outcome::Affected(1))
        }
        Statement::Delete { table, filter } => {
            let rows = scan(kv, catalog, table, filter.as_ref())?;
            for (pk, _) in &rows {
                // The scan just saw the row, so removal is a plain write.
                kv.write(&encode_has_key(table, pk), Value::Bool(false))?;
            }
            Ok(Outcome::Affected(rows.len()))
        }
        Statement::Update {
            table,
            assignments,
            filter,
        } => {
            let rows = scan(kv, catalog, table, filter.as_ref())?;
            for (pk, _) in &rows {
                for (c, v) in assignments {
                    kv.write(&encode_cell_key(table, pk, c), v.clone())?;
                }
            }
            Ok(Outcome::Affected(rows.len()))
        }
        Statement::CreateTable { name, columns } => {
            catalog.create_table(name, columns.clone())?;
            Ok(Outcome::Created)
        }
        Statement::Begin | Statement::Commit => unreachable!("transaction control is handled by run_script"),
    }
}

/// Runs `;`-separated statements. Statements outside `BEGIN … COMMIT`
/// run in their own transaction. Stops at the first error; an explicit
/// transaction stays open in that case.
pub fn run_script<S: TxnControl + ?Sized>(
    session: &mut S,
    catalog: &Mutex<Catalog>,
    text: &str,
) -> Result<Vec<Outcome>, SqlError> {
    let lock = || catalog.lock().unwrap_or_else(|e| e.into_inner());
    let mut out = Vec::new();
    for part in split_statements(text) {
        let stmt = parse_statement(part)?;
        match stmt {
            Statement::Begin => {
                session.begin()?;
                out.push(Outcome::Begun);
            }
            Statement::Commit => {
                session.commit()?;
                out.push(Outcome::Committed);
            }
            Statement::CreateTable { name, columns } => {
                lock().create_table(&name, columns)?;
                out.push(Outcome::Created);
            }
            stmt => {
                lock().validate(&stmt)?;
                let implicit = !session.in_txn();
                if implicit {
                    session.begin()?;
                }
                let result = execute(session, &mut lock(), &stmt);
                if implicit {
                    session.commit()?;
                }
                out.push(result?);
            }
        }
    }
    Ok(out)
}
