use super::{assertion, init, list, subset, Benchmark};
use crate::executor::{Expr, Instr, Program};
use crate::value::Value;

const USERS: [&str; 2] = ["A", "B"];
const TWEETS: [&str; 2] = ["t1", "t2"];

fn tweets(user: &str) -> String {
    format!("tweets:{user}")
}

fn following(user: &str) -> String {
    format!("following:{user}")
}

fn tweet(user: &str, text: &str) -> Vec<Instr> {
    vec![
        Instr::read("t", tweets(user).as_str()),
        Instr::write(tweets(user).as_str(), Expr::union(Expr::var("t"), list([text]))),
    ]
}

fn follow(user: &str, other: &str) -> Vec<Instr> {
    vec![
        Instr::read("f", following(user).as_str()),
        Instr::when(
            Expr::not(Expr::contains(Expr::var("f"), other)),
            vec![Instr::write(following(user).as_str(), Expr::union(Expr::var("f"), list([other])))],
        ),
    ]
}

fn timeline(user: &str, var: &str) -> Vec<Instr> {
    vec![Instr::read_into_session(var, tweets(user).as_str())]
}

/// The tweets of everyone `user` follows, gathered in one transaction.
fn news_feed(user: &str, var: &str) -> Vec<Instr> {
    let mut body = vec![
        Instr::read("fw", following(user).as_str()),
        Instr::assign_session(var, Expr::List(Vec::new())),
    ];
    for v in USERS {
        body.push(Instr::when(
            Expr::contains(Expr::var("fw"), v),
            vec![
                Instr::read("t", tweets(v).as_str()),
                Instr::assign_session(var, Expr::union(Expr::var(var), Expr::var("t"))),
            ],
        ));
    }
    body
}

/// User B tweets from two devices and checks their timeline; user A
/// follows B and reads their news feed. Every tweet B saw on the
/// timeline must be in A's feed unless the feed is the older view.
pub fn twitter() -> Benchmark {
    let program = Program {
        sessions: vec![
            vec![tweet("B", TWEETS[0]), timeline("B", "tl")],
            vec![tweet("B", TWEETS[1])],
            vec![follow("A", "B"), news_feed("A", "nf")],
        ],
        assertions: vec![assertion(
            "missing tweets in feed",
            Expr::Or(vec![subset("s0.tl", "s2.nf", &TWEETS), subset("s2.nf", "s0.tl", &TWEETS)]),
        )],
        init: init(Value::list([]), &[]),
    };
    Benchmark { name: "twitter", program }
}
