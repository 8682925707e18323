use super::{assertion, count, init, list, strs, Benchmark};
use crate::executor::{Expr, Instr, Program};
use crate::value::Value;

const CART: &str = "cart:u";

fn add_item(item: &str) -> Vec<Instr> {
    vec![
        Instr::read("c", CART),
        Instr::write(CART, Expr::union(Expr::var("c"), list([item]))),
    ]
}

fn delete_item(item: &str) -> Vec<Instr> {
    vec![
        Instr::read("c", CART),
        Instr::write(CART, Expr::remove(Expr::var("c"), item)),
    ]
}

fn get_cart(var: &str) -> Vec<Instr> {
    vec![Instr::read_into_session(var, CART)]
}

/// One user's cart holding a single `I`, shared by three sessions: one
/// adds another `I`, one deletes `I` and then views the cart twice, one
/// adds an unrelated item.
pub fn cart() -> Benchmark {
    let program = Program {
        sessions: vec![
            vec![add_item("I"), get_cart("seen")],
            vec![delete_item("I"), get_cart("first"), get_cart("second")],
            vec![get_cart("seen"), add_item("J"), get_cart("after")],
        ],
        assertions: vec![assertion(
            "item reappears after deletion",
            Expr::not(Expr::And(vec![
                Expr::not(Expr::contains(Expr::var("s1.first"), "I")),
                Expr::le(2, count(Expr::var("s1.second"), "I")),
            ])),
        )],
        init: init(Value::list([]), &[(CART, strs(["I"]))]),
    };
    Benchmark { name: "cart", program }
}
