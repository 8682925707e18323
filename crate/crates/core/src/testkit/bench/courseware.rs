use super::{assertion, init, list, Benchmark};
use crate::executor::{Expr, Instr, Program};
use crate::value::Value;

const COURSE: &str = "course:c";
const ENROLLED: &str = "enrolled:c";

fn student(s: &str) -> String {
    format!("student:{s}")
}

fn register(s: &str) -> Vec<Instr> {
    vec![Instr::write(student(s).as_str(), true)]
}

/// Enrolls a registered student into the active course if a spot is
/// left; records 1 in `ok` on success.
fn enroll(s: &str, capacity: i64) -> Vec<Instr> {
    vec![
        Instr::assign_session("ok", 0),
        Instr::read("reg", student(s).as_str()),
        Instr::read("active", COURSE),
        Instr::read("e", ENROLLED),
        Instr::when(
            Expr::And(vec![
                Expr::eq(Expr::var("reg"), true),
                Expr::eq(Expr::var("active"), true),
                Expr::lt(Expr::len(Expr::var("e")), capacity),
            ]),
            vec![
                Instr::write(ENROLLED, Expr::union(Expr::var("e"), list([s]))),
                Instr::assign_session("ok", 1),
            ],
        ),
    ]
}

fn create_course() -> Vec<Instr> {
    vec![Instr::write(COURSE, true), Instr::write(ENROLLED, Expr::List(Vec::new()))]
}

fn delete_course() -> Vec<Instr> {
    vec![Instr::write(COURSE, false), Instr::write(ENROLLED, Expr::List(Vec::new()))]
}

/// Course status and enrollment, read together.
fn get_course() -> Vec<Instr> {
    vec![
        Instr::read_into_session("active", COURSE),
        Instr::read_into_session("list", ENROLLED),
    ]
}

fn init_state() -> Option<crate::executor::InitSpec> {
    init(Value::Bool(false), &[(ENROLLED, Value::list([]))])
}

/// An admin opens a one-seat course while two students register and try
/// to enroll.
pub fn courseware_overflow() -> Benchmark {
    let ok = |s: usize| Expr::add(Expr::var(&format!("s{s}.ok")), 0);
    let program = Program {
        sessions: vec![
            vec![create_course(), get_course()],
            vec![register("x"), enroll("x", 1)],
            vec![register("y"), enroll("y", 1)],
        ],
        assertions: vec![assertion(
            "course registration overflow",
            Expr::le(Expr::add(ok(1), ok(2)), 1),
        )],
        init: init_state(),
    };
    Benchmark {
        name: "courseware-overflow",
        program,
    }
}

/// An admin creates and later removes a course while one student enrolls
/// and another only browses; the admin then checks that the removed
/// course has no enrollments.
pub fn courseware_removed() -> Benchmark {
    let program = Program {
        sessions: vec![
            vec![create_course(), delete_course(), get_course()],
            vec![register("x"), enroll("x", 2)],
            vec![register("y"), get_course()],
        ],
        assertions: vec![assertion(
            "removed course registration",
            Expr::Or(vec![
                Expr::eq(Expr::var("s0.active"), true),
                Expr::eq(Expr::len(Expr::var("s0.list")), 0),
            ]),
        )],
        init: init_state(),
    };
    Benchmark {
        name: "courseware-removed",
        program,
    }
}
