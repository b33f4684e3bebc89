use std::fmt::Write;

use super::{Program, Term};

/// Where a term is printed, which decides whether it needs parentheses.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Slot {
    /// Last thing before a closing delimiter or end of input.
    Tail,
    /// Followed by a keyword or `|`; open constructs get parentheses.
    Inner,
    /// Function position of an application.
    Head,
    /// Argument position of an application.
    Arg,
}

pub fn pretty(p: &Program) -> String {
    let mut out = String::new();
    for d in &p.defs {
        let _ = writeln!(
            out,
            "at {}: val {} : {} = {}",
            d.peer,
            d.name,
            d.annotation,
            pretty_term(&d.body)
        );
    }
    let _ = writeln!(out, "main at {} = {}", p.main_peer, pretty_term(&p.main));
    out
}

pub fn pretty_term(t: &Term) -> String {
    let mut out = String::new();
    write_term(&mut out, t, Slot::Tail);
    out
}

fn is_open(t: &Term) -> bool {
    matches!(
        t,
        Term::If { .. } | Term::CaseList { .. } | Term::Lam { .. } | Term::Fix { .. }
    )
}

fn write_term(out: &mut String, t: &Term, slot: Slot) {
    let parens = match slot {
        Slot::Tail => false,
        Slot::Inner => is_open(t),
        Slot::Head => is_open(t),
        Slot::Arg => is_open(t) || matches!(t, Term::App(..)),
    };
    if parens {
        out.push('(');
    }
    match t {
        Term::Var(x) => out.push_str(x),
        Term::UnitLit => out.push_str("()"),
        Term::BoolLit(b) => out.push_str(if *b { "true" } else { "false" }),
        Term::NatLit(n) => {
            let _ = write!(out, "{n}");
        }
        Term::SuccT(t) => {
            out.push_str("S(");
            write_term(out, t, Slot::Tail);
            out.push(')');
        }
        Term::Nil(ty) => {
            let _ = write!(out, "nil[{ty}]");
        }
        Term::Cons(h, tl) => {
            out.push_str("cons(");
            write_term(out, h, Slot::Tail);
            out.push_str(", ");
            write_term(out, tl, Slot::Tail);
            out.push(')');
        }
        Term::CaseList {
            scrutinee,
            nil_branch,
            head,
            tail,
            cons_branch,
        } => {
            out.push_str("case ");
            write_term(out, scrutinee, Slot::Inner);
            out.push_str(" of nil => ");
            write_term(out, nil_branch, Slot::Inner);
            let _ = write!(out, " | cons({head}, {tail}) => ");
            write_term(out, cons_branch, Slot::Tail);
        }
        Term::If {
            cond,
            then_branch,
            else_branch,
        } => {
            out.push_str("if ");
            write_term(out, cond, Slot::Inner);
            out.push_str(" then ");
            write_term(out, then_branch, Slot::Inner);
            out.push_str(" else ");
            write_term(out, else_branch, Slot::Tail);
        }
        Term::Lam {
            param,
            param_type,
            size_var,
            body,
        } => {
            let _ = write!(out, "fun ({param} : {param_type} @ {size_var}) => ");
            write_term(out, body, Slot::Tail);
        }
        Term::App(f, a) => {
            write_term(out, f, Slot::Head);
            out.push(' ');
            write_term(out, a, Slot::Arg);
        }
        Term::Fix {
            self_name,
            param,
            param_type,
            size_var,
            result,
            body,
        } => {
            let _ = write!(
                out,
                "fix {self_name} ({param} : {param_type} @ {size_var}) : {result} => "
            );
            write_term(out, body, Slot::Tail);
        }
        Term::Get { target, body } => {
            let _ = write!(out, "get {target} {{ ");
            write_term(out, body, Slot::Tail);
            out.push_str(" }");
        }
    }
    if parens {
        out.push(')');
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse, parse_term};
    use super::*;

    #[test]
    fn atoms() {
        assert_eq!(pretty_term(&Term::UnitLit), "()");
        assert_eq!(pretty_term(&Term::get("Server", Term::var("x"))), "get Server { x }");
        assert_eq!(pretty_term(&Term::nat_list(&[1, 2])), "cons(1, cons(2, nil[Nat]))");
    }

    #[test]
    fn parenthesizes_where_needed() {
        for src in [
            "(fun (x : Nat @ s) => x) 5",
            "f (g x)",
            "if (if a then b else c) then (case l of nil => 1 | cons(h, t) => 2) else 3",
            "case (case l of nil => a | cons(h, t) => t) of nil => 0 | cons(h, t) => h",
        ] {
            let t = parse_term(src).unwrap();
            let printed = pretty_term(&t);
            assert_eq!(printed, src);
            assert_eq!(parse_term(&printed).unwrap(), t);
        }
    }

    #[test]
    fn program_round_trip() {
        let src = "at Server: val x : (Nat, 5, 0) = 5\nmain at Client = get Server { x }\n";
        let p = parse(src).unwrap();
        assert_eq!(pretty(&p), src);
    }
}
