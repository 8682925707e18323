//! A naive in-memory table store with the SQL front-end's semantics, and
//! random statement sequences to compare the two on.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rand::Rng;

use crate::sql::{CmpOp, Operand, Outcome, Pred, Projection, RowSet, SqlError, Statement};
use crate::value::Value;

#[derive(Debug, Clone, Default)]
struct Table {
    columns: Vec<String>,
    rows: BTreeMap<Value, Vec<Value>>,
}

/// Tables as ordered maps from primary key to row.
#[derive(Debug, Clone, Default)]
pub struct TableOracle {
    tables: BTreeMap<String, Table>,
}

impl TableOracle {
    pub fn new() -> Self {
        TableOracle::default()
    }

    fn table(&self, name: &str) -> Result<&Table, SqlError> {
        self.tables
            .get(name)
            .ok_or_else(|| SqlError::UnknownTable(name.to_owned()))
    }

    fn column(t: &Table, table: &str, c: &str) -> Result<usize, SqlError> {
        t.columns.iter().position(|x| x == c).ok_or_else(|| SqlError::UnknownColumn {
            table: table.to_owned(),
            column: c.to_owned(),
        })
    }

    fn test(t: &Table, table: &str, p: &Pred, row: &[Value]) -> Result<bool, SqlError> {
        let get = |o: &Operand| -> Result<Value, SqlError> {
            match o {
                Operand::Column(c) => Ok(row[Self::column(t, table, c)?].clone()),
                Operand::Literal(v) => Ok(v.clone()),
            }
        };
        Ok(match p {
            Pred::Cmp(a, op, b) => {
                let (a, b) = (get(a)?, get(b)?);
                if a == Value::Null || b == Value::Null {
                    false
                } else if std::mem::discriminant(&a) != std::mem::discriminant(&b) {
                    return Err(SqlError::TypeError(a, b));
                } else {
                    let ord = a.cmp(&b);
                    match op {
                        CmpOp::Eq => ord == Ordering::Equal,
                        CmpOp::Ne => ord != Ordering::Equal,
                        CmpOp::Lt => ord == Ordering::Less,
                        CmpOp::Le => ord != Ordering::Greater,
                        CmpOp::Gt => ord == Ordering::Greater,
                        CmpOp::Ge => ord != Ordering::Less,
                    }
                }
            }
            Pred::And(a, b) => Self::test(t, table, a, row)? && Self::test(t, table, b, row)?,
            Pred::Or(a, b) => Self::test(t, table, a, row)? || Self::test(t, table, b, row)?,
            Pred::Not(a) => !Self::test(t, table, a, row)?,
        })
    }

    fn matching(&self, table: &str, filter: &Option<Pred>) -> Result<Vec<Value>, SqlError> {
        let t = self.table(table)?;
        if let Some(p) = filter {
            for c in p.columns() {
                Self::column(t, table, c)?;
            }
        }
        let mut out = Vec::new();
        for (pk, row) in &t.rows {
            if filter.as_ref().map_or(Ok(true), |p| Self::test(t, table, p, row))? {
                out.push(pk.clone());
            }
        }
        Ok(out)
    }

    pub fn apply(&mut self, stmt: &Statement) -> Result<Outcome, SqlError> {
        match stmt {
            Statement::CreateTable { name, columns } => {
                if self.tables.contains_key(name) {
                    return Err(SqlError::TableExists(name.clone()));
                }
                self.tables.insert(
                    name.clone(),
                    Table {
                        columns: columns.clone(),
                        rows: BTreeMap::new(),
                    },
                );
                Ok(Outcome::Created)
            }
            Statement::Insert { table, values } => {
                let t = self.table(table)?;
                if values.len() != t.columns.len() {
                    return Err(SqlError::Arity {
                        expected: t.columns.len(),
                        found: values.len(),
                    });
                }
                if values[0] == Value::Null {
                    return Err(SqlError::NullPrimaryKey(table.clone()));
                }
                if t.rows.contains_key(&values[0]) {
                    return Err(SqlError::DuplicateKey {
                        table: table.clone(),
                        key: values[0].clone(),
                    });
                }
                let t = self.tables.get_mut(table).expect("checked");
                t.rows.insert(values[0].clone(), values.clone());
                Ok(Outcome::Affected(1))
            }
            Statement::Select {
                columns,
                table,
                filter,
            } => {
                let t = self.table(table)?;
                let columns = match columns {
                    Projection::All => t.columns.clone(),
                    Projection::Columns(cs) => cs.clone(),
                };
                let idx = columns
                    .iter()
                    .map(|c| Self::column(t, table, c))
                    .collect::<Result<Vec<_>, _>>()?;
                let rows = self
                    .matching(table, filter)?
                    .iter()
                    .map(|pk| idx.iter().map(|i| t.rows[pk][*i].clone()).collect())
                    .collect();
                Ok(Outcome::Rows(RowSet { columns, rows }))
            }
            Statement::Delete { table, filter } => {
                let gone = self.matching(table, filter)?;
                let t = self.tables.get_mut(table).expect("checked");
                for pk in &gone {
                    t.rows.remove(pk);
                }
                Ok(Outcome::Affected(gone.len()))
            }
            Statement::Update {
                table,
                assignments,
                filter,
            } => {
                let t = self.table(table)?;
                let mut set = Vec::new();
                for (c, v) in assignments {
                    let i = Self::column(t, table, c)?;
                    if i == 0 {
                        return Err(SqlError::PrimaryKeyUpdate(table.clone()));
                    }
                    set.push((i, v.clone()));
                }
                let hit = self.matching(table, filter)?;
                let t = self.tables.get_mut(table).expect("checked");
                for pk in &hit {
                    let row = t.rows.get_mut(pk).expect("matched");
                    for (i, v) in &set {
                        row[*i] = v.clone();
                    }
                }
                Ok(Outcome::Affected(hit.len()))
            }
            Statement::Begin => Ok(Outcome::Begun),
            Statement::Commit => Ok(Outcome::Committed),
        }
    }
}

/// The two tables random scripts run against: an integer-keyed table
/// with a string and an integer column, and a string-keyed table.
pub fn schema() -> Vec<Statement> {
    vec![
        Statement::CreateTable {
            name: "people".into(),
            columns: vec!["id".into(), "name".into(), "age".into()],
        },
        Statement::CreateTable {
            name: "tags".into(),
            columns: vec!["tag".into(), "score".into()],
        },
    ]
}

fn pick<'a, R: Rng + ?Sized, T>(rng: &mut R, xs: &'a [T]) -> &'a T {
    &xs[rng.gen_range(0..xs.len())]
}

fn int<R: Rng + ?Sized>(rng: &mut R) -> Value {
    Value::Int(rng.gen_range(0..4))
}

fn text<R: Rng + ?Sized>(rng: &mut R) -> Value {
    Value::str(*pick(rng, &["ann", "bob", "it's"]))
}

/// A value for `column`, occasionally null or of the wrong type.
fn value<R: Rng + ?Sized>(rng: &mut R, column: &str) -> Value {
    match rng.gen_range(0..20) {
        0 => Value::Null,
        1 => Value::Bool(rng.gen()),
        _ => match column {
            "name" | "tag" => text(rng),
            _ => int(rng),
        },
    }
}

fn pred<R: Rng + ?Sized>(rng: &mut R, columns: &[&str], depth: usize) -> Pred {
    match rng.gen_range(0..if depth == 0 { 1 } else { 5 }) {
        0 | 1 => {
            let c = *pick(rng, columns);
            let op = *pick(rng, &[CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge]);
            let lit = Operand::Literal(value(rng, c));
            if rng.gen_bool(0.2) {
                Pred::Cmp(lit, op, Operand::Column(c.to_owned()))
            } else {
                Pred::Cmp(Operand::Column(c.to_owned()), op, lit)
            }
        }
        2 => Pred::And(Box::new(pred(rng, columns, depth - 1)), Box::new(pred(rng, columns, depth - 1))),
        3 => Pred::Or(Box::new(pred(rng, columns, depth - 1)), Box::new(pred(rng, columns, depth - 1))),
        _ => Pred::Not(Box::new(pred(rng, columns, depth - 1))),
    }
}

/// `len` random statements over [`schema`].
pub fn random_statements<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<Statement> {
    let tables: [(&str, &[&str]); 2] = [("people", &["id", "name", "age"]), ("tags", &["tag", "score"])];
    (0..len)
        .map(|_| {
            let (table, columns) = *pick(rng, &tables);
            let table = table.to_owned();
            let filter = rng.gen_bool(0.8).then(|| pred(rng, columns, 2));
            match rng.gen_range(0..10) {
                0..=3 => Statement::Insert {
                    values: columns
                        .iter()
                        .enumerate()
                        .map(|(i, c)| if i == 0 && rng.gen_bool(0.95) { pk(rng, c) } else { value(rng, c) })
                        .collect(),
                    table,
                },
                4..=6 => Statement::Select {
                    columns: if rng.gen_bool(0.5) {
                        Projection::All
                    } else {
                        Projection::Columns(
                            columns.iter().filter(|_| rng.gen_bool(0.6)).map(|c| c.to_string()).collect::<Vec<_>>(),
                        )
                    },
                    table,
                    filter,
                },
                7 => Statement::Delete { table, filter },
                _ => Statement::Update {
                    assignments: vec![{
                        let c = *pick(rng, &columns[1..]);
                        (c.to_owned(), value(rng, c))
                    }],
                    table,
                    filter,
                },
            }
        })
        .map(|s| match s {
            // An empty projection list is not valid SQL.
            Statement::Select {
                columns: Projection::Columns(cs),
                table,
                filter,
            } if cs.is_empty() => Statement::Select {
                columns: Projection::All,
                table,
                filter,
            },
            s => s,
        })
        .collect()
}

fn pk<R: Rng + ?Sized>(rng: &mut R, column: &str) -> Value {
    match column {
        "tag" => text(rng),
        _ => int(rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sql::parse_statement;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rendered_statements_parse_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for s in schema().into_iter().chain(random_statements(&mut rng, 500)) {
            assert_eq!(parse_statement(&s.to_string()).unwrap(), s, "{s}");
        }
    }

    #[test]
    fn oracle_basics() {
        let mut o = TableOracle::new();
        for s in schema() {
            o.apply(&s).unwrap();
        }
        let ins = |id: i64| Statement::Insert {
            table: "people".into(),
            values: vec![Value::Int(id), Value::str("x"), Value::Int(id * 10)],
        };
        o.apply(&ins(2)).unwrap();
        o.apply(&ins(1)).unwrap();
        assert!(matches!(o.apply(&ins(1)), Err(SqlError::DuplicateKey { .. })));
        let sel = parse_statement("SELECT id FROM people WHERE age > 10").unwrap();
        let Outcome::Rows(r) = o.apply(&sel).unwrap() else { panic!() };
        assert_eq!(r.rows, vec![vec![Value::Int(2)]]);
    }
}
