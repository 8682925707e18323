use std::fmt;

use crate::value::Value;

#[derive(Debug, Clone, PartialEq)]
pub enum Statement {
    Select {
        columns: Projection,
        table: String,
        filter: Option<Pred>,
    },
    Insert {
        table: String,
        values: Vec<Value>,
    },
    Delete {
        table: String,
        filter: Option<Pred>,
    },
    Update {
        table: String,
        assignments: Vec<(String, Value)>,
        filter: Option<Pred>,
    },
    CreateTable {
        name: String,
        columns: Vec<String>,
    },
    Begin,
    Commit,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Projection {
    All,
    Columns(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Column(String),
    Literal(Value),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            CmpOp::Eq => ord == Equal,
            CmpOp::Ne => ord != Equal,
            CmpOp::Lt => ord == Less,
            CmpOp::Le => ord != Greater,
            CmpOp::Gt => ord == Greater,
            CmpOp::Ge => ord != Less,
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        })
    }
}

/// WHERE predicates.
#[derive(Debug, Clone, PartialEq)]
pub enum Pred {
    Cmp(Operand, CmpOp, Operand),
    And(Box<Pred>, Box<Pred>),
    Or(Box<Pred>, Box<Pred>),
    Not(Box<Pred>),
}

impl Pred {
    pub fn cmp(a: Operand, op: CmpOp, b: Operand) -> Pred {
        Pred::Cmp(a, op, b)
    }

    /// Columns mentioned, in order of first occurrence.
    pub fn columns(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Pred::Cmp(a, _, b) => {
                for o in [a, b] {
                    if let Operand::Column(c) = o {
                        if !out.contains(&c.as_str()) {
                            out.push(c);
                        }
                    }
                }
            }
            Pred::And(a, b) | Pred::Or(a, b) => {
                a.collect(out);
                b.collect(out);
            }
            Pred::Not(a) => a.collect(out),
        }
    }
}

struct Literal<'a>(&'a Value);

impl fmt::Display for Literal<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Value::Null => f.write_str("NULL"),
            Value::Bool(true) => f.write_str("TRUE"),
            Value::Bool(false) => f.write_str("FALSE"),
            Value::Str(s) => write!(f, "'{}'", s.replace('\'', "''")),
            other => write!(f, "{other}"),
        }
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Column(c) => f.write_str(c),
            Operand::Literal(v) => write!(f, "{}", Literal(v)),
        }
    }
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pred::Cmp(a, op, b) => write!(f, "{a} {op} {b}"),
            Pred::And(a, b) => write!(f, "({a} AND {b})"),
            Pred::Or(a, b) => write!(f, "({a} OR {b})"),
            Pred::Not(a) => write!(f, "NOT ({a})"),
        }
    }
}

fn list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: impl IntoIterator<Item = T>) -> fmt::Result {
    for (i, x) in items.into_iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{x}")?;
    }
    Ok(())
}

/// Renders the statement as SQL text that parses back to it.
impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let filter = |f: &mut fmt::Formatter<'_>, p: &Option<Pred>| match p {
            Some(p) => write!(f, " WHERE {p}"),
            None => Ok(()),
        };
        match self {
            Statement::Select {
                columns,
                table,
                filter: p,
            } => {
                f.write_str("SELECT ")?;
                match columns {
                    Projection::All => f.write_str("*")?,
                    Projection::Columns(cs) => list(f, cs)?,
                }
                write!(f, " FROM {table}")?;
                filter(f, p)
            }
            Statement::Insert { table, values } => {
                write!(f, "INSERT INTO {table} VALUES (")?;
                list(f, values.iter().map(Literal))?;
                f.write_str(")")
            }
            Statement::Delete { table, filter: p } => {
                write!(f, "DELETE FROM {table}")?;
                filter(f, p)
            }
            Statement::Update {
                table,
                assignments,
                filter: p,
            } => {
                write!(f, "UPDATE {table} SET ")?;
                list(f, assignments.iter().map(|(c, v)| format!("{c} = {}", Literal(v))))?;
                filter(f, p)
            }
            Statement::CreateTable { name, columns } => {
                write!(f, "CREATE TABLE {name} (")?;
                list(f, columns)?;
                f.write_str(")")
            }
            Statement::Begin => f.write_str("BEGIN"),
            Statement::Commit => f.write_str("COMMIT"),
        }
    }
}
