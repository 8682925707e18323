use std::fmt;

use super::ast::{CmpOp, Operand, Pred, Projection, Statement};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    /// Byte offset into the statement text.
    pub position: usize,
    pub expected: Vec<String>,
    pub found: String,
    /// Set when the input uses a construct outside the supported subset.
    pub unsupported: Option<String>,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(what) = &self.unsupported {
            return write!(f, "unsupported: {what} at position {}", self.position);
        }
        write!(f, "syntax error at position {}: expected ", self.position)?;
        match self.expected.as_slice() {
            [one] => write!(f, "{one}")?,
            many => write!(f, "one of {}", many.join(", "))?,
        }
        write!(f, ", found {}", self.found)
    }
}

impl std::error::Error for SyntaxError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Str(String),
    Int(i64),
    Sym(&'static str),
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Word(w) => write!(f, "{w:?}"),
            Tok::Str(s) => write!(f, "'{s}'"),
            Tok::Int(i) => write!(f, "{i}"),
            Tok::Sym(s) => write!(f, "'{s}'"),
            Tok::End => f.write_str("end of input"),
        }
    }
}

const SYMBOLS: [&str; 13] = ["<>", "!=", "<=", ">=", "=", "<", ">", ",", "(", ")", ";", "*", "."];

const KEYWORDS: [&str; 19] = [
    "SELECT", "FROM", "WHERE", "INSERT", "INTO", "VALUES", "DELETE", "UPDATE", "SET", "CREATE",
    "TABLE", "BEGIN", "COMMIT", "AND", "OR", "NOT", "TRUE", "FALSE", "NULL",
];

const UNSUPPORTED: [(&str, &str); 10] = [
    ("JOIN", "JOIN"),
    ("INNER", "JOIN"),
    ("LEFT", "JOIN"),
    ("RIGHT", "JOIN"),
    ("ORDER", "ORDER BY"),
    ("GROUP", "GROUP BY"),
    ("LIMIT", "LIMIT"),
    ("HAVING", "HAVING"),
    ("UNION", "UNION"),
    ("DISTINCT", "DISTINCT"),
];

const AGGREGATES: [&str; 5] = ["COUNT", "SUM", "AVG", "MIN", "MAX"];

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, SyntaxError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |pos: usize, found: String| SyntaxError {
        position: pos,
        expected: vec!["a token".into()],
        found,
        unsupported: None,
    };
    'outer: while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Word(text[start..i].to_owned()), start));
            continue;
        }
        if c.is_ascii_digit() || (c == b'-' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            i += 1;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let n = text[start..i]
                .parse()
                .map_err(|_| err(start, format!("integer {}", &text[start..i])))?;
            out.push((Tok::Int(n), start));
            continue;
        }
        if c == b'\'' {
            let mut s = String::new();
            i += 1;
            loop {
                match text[i..].chars().next() {
                    None => return Err(err(start, "unterminated string".into())),
                    Some('\'') if bytes.get(i + 1) == Some(&b'\'') => {
                        s.push('\'');
                        i += 2;
                    }
                    Some('\'') => {
                        i += 1;
                        break;
                    }
                    Some(ch) => {
                        s.push(ch);
                        i += ch.len_utf8();
                    }
                }
            }
            out.push((Tok::Str(s), start));
            continue;
        }
        for sym in SYMBOLS {
            if text[i..].starts_with(sym) {
                out.push((Tok::Sym(sym), start));
                i += sym.len();
                continue 'outer;
            }
        }
        let ch = text[i..].chars().next().expect("in bounds");
        return Err(err(start, format!("character {ch:?}")));
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T, SyntaxError> {
        if let Tok::Word(w) = self.peek() {
            let upper = w.to_ascii_uppercase();
            if let Some((_, what)) = UNSUPPORTED.iter().find(|(k, _)| *k == upper) {
                return Err(self.unsupported(what));
            }
        }
        Err(SyntaxError {
            position: self.offset(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().to_string(),
            unsupported: None,
        })
    }

    fn unsupported(&self, what: &str) -> SyntaxError {
        SyntaxError {
            position: self.offset(),
            expected: Vec::new(),
            found: self.peek().to_string(),
            unsupported: Some(what.to_owned()),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Word(w) if w.eq_ignore_ascii_case(kw))
    }

    fn keyword(&mut self, kw: &str) -> Result<(), SyntaxError> {
        if self.at_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            self.fail(&[kw])
        }
    }

    fn at_sym(&self, sym: &str) -> bool {
        matches!(self.peek(), Tok::Sym(s) if *s == sym)
    }

    fn sym(&mut self, sym: &str) -> Result<(), SyntaxError> {
        if self.at_sym(sym) {
            self.bump();
            Ok(())
        } else {
            self.fail(&[&format!("'{sym}'")])
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, SyntaxError> {
        match self.peek() {
            Tok::Word(w) if !KEYWORDS.contains(&w.to_ascii_uppercase().as_str()) => {
                let w = w.clone();
                self.bump();
                Ok(w)
            }
            _ => self.fail(&[what]),
        }
    }

    fn literal(&mut self) -> Result<Value, SyntaxError> {
        let v = match self.peek() {
            Tok::Int(i) => Value::Int(*i),
            Tok::Str(s) => Value::Str(s.clone()),
            Tok::Word(w) if w.eq_ignore_ascii_case("TRUE") => Value::Bool(true),
            Tok::Word(w) if w.eq_ignore_ascii_case("FALSE") => Value::Bool(false),
            Tok::Word(w) if w.eq_ignore_ascii_case("NULL") => Value::Null,
            _ => return self.fail(&["a literal"]),
        };
        self.bump();
        Ok(v)
    }

    fn statement(&mut self) -> Result<Statement, SyntaxError> {
        let Tok::Word(w) = self.peek() else {
            return self.fail(&["SELECT", "INSERT", "DELETE", "UPDATE", "CREATE", "BEGIN", "COMMIT"]);
        };
        let stmt = match w.to_ascii_uppercase().as_str() {
            "SELECT" => self.select()?,
            "INSERT" => self.insert()?,
            "DELETE" => self.delete()?,
            "UPDATE" => self.update()?,
            "CREATE" => self.create()?,
            "BEGIN" => {
                self.bump();
                Statement::Begin
            }
            "COMMIT" => {
                self.bump();
                Statement::Commit
            }
            _ => {
                return self.fail(&["SELECT", "INSERT", "DELETE", "UPDATE", "CREATE", "BEGIN", "COMMIT"])
            }
        };
        if self.at_sym(";") {
            self.bump();
        }
        if *self.peek() != Tok::End {
            return self.fail(&["end of statement"]);
        }
        Ok(stmt)
    }

    fn select(&mut self) -> Result<Statement, SyntaxError> {
        self.keyword("SELECT")?;
        let columns = if self.at_sym("*") {
            self.bump();
            Projection::All
        } else {
            let mut cols = vec![self.column()?];
            while self.at_sym(",") {
                self.bump();
                cols.push(self.column()?);
            }
            Projection::Columns(cols)
        };
        self.keyword("FROM")?;
        let table = self.ident("a table name")?;
        if self.at_sym(",") {
            return Err(self.unsupported("JOIN"));
        }
        let filter = self.where_clause()?;
        Ok(Statement::Select {
            columns,
            table,
            filter,
        })
    }

    fn column(&mut self) -> Result<String, SyntaxError> {
        if let Tok::Word(w) = self.peek() {
            if AGGREGATES.contains(&w.to_ascii_uppercase().as_str())
                && matches!(self.toks.get(self.pos + 1), Some((Tok::Sym("("), _)))
            {
                return Err(self.unsupported("aggregation"));
            }
        }
        self.ident("a column name")
    }

    fn where_clause(&mut self) -> Result<Option<Pred>, SyntaxError> {
        if self.at_keyword("WHERE") {
            self.bump();
            Ok(Some(self.or()?))
        } else {
            Ok(None)
        }
    }

    fn or(&mut self) -> Result<Pred, SyntaxError> {
        let mut p = self.and()?;
        while self.at_keyword("OR") {
            self.bump();
            p = Pred::Or(Box::new(p), Box::new(self.and()?));
        }
        Ok(p)
    }

    fn and(&mut self) -> Result<Pred, SyntaxError> {
        let mut p = self.not()?;
        while self.at_keyword("AND") {
            self.bump();
            p = Pred::And(Box::new(p), Box::new(self.not()?));
        }
        Ok(p)
    }

    fn not(&mut self) -> Result<Pred, SyntaxError> {
        if self.at_keyword("NOT") {
            self.bump();
            return Ok(Pred::Not(Box::new(self.not()?)));
        }
        if self.at_sym("(") {
            self.bump();
            if self.at_keyword("SELECT") {
                return Err(self.unsupported("nested query"));
            }
            let p = self.or()?;
            self.sym(")")?;
            return Ok(p);
        }
        let a = self.operand()?;
        let op = match self.peek() {
            Tok::Sym("=") => CmpOp::Eq,
            Tok::Sym("<>") | Tok::Sym("!=") => CmpOp::Ne,
            Tok::Sym("<") => CmpOp::Lt,
            Tok::Sym("<=") => CmpOp::Le,
            Tok::Sym(">") => CmpOp::Gt,
            Tok::Sym(">=") => CmpOp::Ge,
            _ => return self.fail(&["'='", "'<>'", "'<'", "'<='", "'>'", "'>='"]),
        };
        self.bump();
        let b = self.operand()?;
        Ok(Pred::Cmp(a, op, b))
    }

    fn operand(&mut self) -> Result<Operand, SyntaxError> {
        if self.at_sym("(") && matches!(self.toks.get(self.pos + 1), Some((Tok::Word(w), _)) if w.eq_ignore_ascii_case("SELECT"))
        {
            self.bump();
            return Err(self.unsupported("nested query"));
        }
        match self.peek() {
            Tok::Word(w) if !KEYWORDS.contains(&w.to_ascii_uppercase().as_str()) => {
                Ok(Operand::Column(self.column()?))
            }
            Tok::Int(_) | Tok::Str(_) | Tok::Word(_) => match self.literal() {
                Ok(v) => Ok(Operand::Literal(v)),
                Err(_) => self.fail(&["a column name", "a literal"]),
            },
            _ => self.fail(&["a column name", "a literal"]),
        }
    }

    fn insert(&mut self) -> Result<Statement, SyntaxError> {
        self.keyword("INSERT")?;
        self.keyword("INTO")?;
        let table = self.ident("a table name")?;
        self.keyword("VALUES")?;
        self.sym("(")?;
        let mut values = vec![self.literal()?];
        while self.at_sym(",") {
            self.bump();
            values.push(self.literal()?);
        }
        self.sym(")")?;
        Ok(Statement::Insert { table, values })
    }

    fn delete(&mut self) -> Result<Statement, SyntaxError> {
        self.keyword("DELETE")?;
        self.keyword("FROM")?;
        let table = self.ident("a table name")?;
        let filter = self.where_clause()?;
        Ok(Statement::Delete { table, filter })
    }

    fn update(&mut self) -> Result<Statement, SyntaxError> {
        self.keyword("UPDATE")?;
        let table = self.ident("a table name")?;
        self.keyword("SET")?;
        let mut assignments = Vec::new();
        loop {
            let c = self.ident("a column name")?;
            self.sym("=")?;
            assignments.push((c, self.literal()?));
            if !self.at_sym(",") {
                break;
            }
            self.bump();
        }
        let filter = self.where_clause()?;
        Ok(Statement::Update {
            table,
            assignments,
            filter,
        })
    }

    fn create(&mut self) -> Result<Statement, SyntaxError> {
        self.keyword("CREATE")?;
        self.keyword("TABLE")?;
        let name = self.ident("a table name")?;
        self.sym("(")?;
        let mut columns = vec![self.ident("a column name")?];
        while self.at_sym(",") {
            self.bump();
            columns.push(self.ident("a column name")?);
        }
        self.sym(")")?;
        Ok(Statement::CreateTable { name, columns })
    }
}

/// Parses one statement (an optional trailing `;` is allowed).
pub fn parse_statement(text: &str) -> Result<Statement, SyntaxError> {
    Parser {
        toks: lex(text)?,
        pos: 0,
    }
    .statement()
}

/// Splits a script on `;` outside string literals.
pub fn split_statements(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut in_str = false;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '\'' => in_str = !in_str,
            ';' if !in_str => {
                out.push(&text[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&text[start..]);
    out.into_iter().filter(|s| !s.trim().is_empty()).collect()
}
