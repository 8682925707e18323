use super::{assertion, init, Benchmark};
use crate::executor::{Expr, Instr, Program};
use crate::value::Value;

const HEAD: &str = "head";

/// A pop as three transactions: read the head, read the head node, then
/// compare-and-swap the head to the next node. Stores the popped element
/// in `var`, or leaves it null when the swap fails.
fn pop(var: &str) -> Vec<Vec<Instr>> {
    let live = Expr::ne(Expr::var("h"), Value::Null);
    vec![
        vec![Instr::read_into_session("h", HEAD)],
        vec![Instr::when(live.clone(), vec![Instr::read_into_session("n", Expr::var("h"))])],
        vec![
            Instr::read("cur", HEAD),
            Instr::when(
                Expr::And(vec![live, Expr::eq(Expr::var("cur"), Expr::var("h"))]),
                vec![
                    Instr::write(HEAD, Expr::index(Expr::var("n"), 1)),
                    Instr::assign_session(var, Expr::index(Expr::var("n"), 0)),
                ],
            ),
        ],
    ]
}

fn node(item: &str, next: Option<&str>) -> Value {
    Value::list([Value::str(item), next.map_or(Value::Null, Value::str)])
}

/// A stack of three unique elements popped concurrently by three clients.
pub fn stack() -> Benchmark {
    let sessions = vec![pop("p0"), pop("p1"), pop("p2")];
    let popped: Vec<String> = (0..3).map(|s| format!("s{s}.p{s}")).collect();
    let mut distinct = Vec::new();
    for (i, a) in popped.iter().enumerate() {
        for b in &popped[i + 1..] {
            distinct.push(Expr::Or(vec![
                Expr::eq(Expr::var(a), Value::Null),
                Expr::ne(Expr::var(a), Expr::var(b)),
            ]));
        }
    }
    let program = Program {
        sessions,
        assertions: vec![assertion("element popped more than once", Expr::And(distinct))],
        init: init(
            Value::Null,
            &[
                (HEAD, Value::str("n3")),
                ("n3", node("c", Some("n2"))),
                ("n2", node("b", Some("n1"))),
                ("n1", node("a", None)),
            ],
        ),
    };
    Benchmark { name: "stack", program }
}
