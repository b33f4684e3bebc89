//! Recursive-descent parser for programs, types and arithmetic terms.

use std::fmt;

use num_bigint::BigUint;
use thiserror::Error;

use super::lexer::{lex, Tok, Token, KEYWORDS};
use super::{BasicType, PeerType, PlacedDef, Pos, Program, SizedType, Term};
use crate::arith::ArithTerm;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct SyntaxError {
    pub pos: Pos,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.expected.as_slice() {
            [] => write!(f, "{}", self.found),
            [one] => write!(f, "expected {one}, found {}", self.found),
            many => write!(f, "expected one of {}, found {}", many.join(", "), self.found),
        }
    }
}

type PResult<T> = Result<T, SyntaxError>;

struct Parser {
    toks: Vec<Token>,
    at: usize,
}

fn lex_or_err(src: &str) -> PResult<Vec<Token>> {
    lex(src).map_err(|(pos, msg)| SyntaxError {
        pos,
        expected: vec![],
        found: msg,
    })
}

/// Parses a whole program.
pub fn parse(src: &str) -> PResult<Program> {
    let mut p = Parser {
        toks: lex_or_err(src)?,
        at: 0,
    };
    let prog = p.program()?;
    p.expect_eof()?;
    Ok(prog)
}

/// Parses a single term.
pub fn parse_term(src: &str) -> PResult<Term> {
    let mut p = Parser {
        toks: lex_or_err(src)?,
        at: 0,
    };
    let t = p.term()?;
    p.expect_eof()?;
    Ok(t)
}

/// Parses an arithmetic term such as `s * 200 + max(a, b)`.
pub fn parse_arith(src: &str) -> PResult<ArithTerm> {
    let mut p = Parser {
        toks: lex_or_err(src)?,
        at: 0,
    };
    let a = p.arith()?;
    p.expect_eof()?;
    Ok(a)
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].pos
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, expected: &[&str]) -> PResult<T> {
        Err(SyntaxError {
            pos: self.pos(),
            expected: expected.iter().map(|s| format!("`{s}`")).collect(),
            found: self.peek().to_string(),
        })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(t) if t == k)
    }

    fn is_sym_at(&self, offset: usize, s: &str) -> bool {
        matches!(self.toks.get(self.at + offset).map(|t| &t.tok), Some(Tok::Sym(t)) if *t == s)
    }

    fn sym(&mut self, s: &str) -> PResult<()> {
        if self.is_sym(s) {
            self.bump();
            Ok(())
        } else {
            self.error(&[s])
        }
    }

    fn kw(&mut self, k: &str) -> PResult<()> {
        if self.is_kw(k) {
            self.bump();
            Ok(())
        } else {
            self.error(&[k])
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => self.error(&["identifier"]),
        }
    }

    fn expect_eof(&self) -> PResult<()> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            self.error(&["end of input"])
        }
    }

    fn program(&mut self) -> PResult<Program> {
        let mut defs = Vec::new();
        while self.is_kw("at") {
            defs.push(self.placed_def()?);
        }
        if !self.is_kw("main") {
            return self.error(&["at", "main"]);
        }
        let main_pos = self.pos();
        self.kw("main")?;
        self.kw("at")?;
        let main_peer = PeerType(self.ident()?);
        self.sym("=")?;
        let main = self.term()?;
        Ok(Program {
            defs,
            main_peer,
            main,
            main_pos,
        })
    }

    fn placed_def(&mut self) -> PResult<PlacedDef> {
        let pos = self.pos();
        self.kw("at")?;
        let peer = PeerType(self.ident()?);
        self.sym(":")?;
        self.kw("val")?;
        let name = self.ident()?;
        self.sym(":")?;
        let annotation = self.sized_type()?;
        self.sym("=")?;
        let body = self.term()?;
        Ok(PlacedDef {
            peer,
            name,
            annotation,
            body,
            pos,
        })
    }

    fn sized_type(&mut self) -> PResult<SizedType> {
        self.sym("(")?;
        let base = self.basic()?;
        self.sym(",")?;
        let size = self.arith()?;
        self.sym(",")?;
        let latency = self.arith()?;
        self.sym(")")?;
        Ok(SizedType { base, size, latency })
    }

    fn basic(&mut self) -> PResult<BasicType> {
        let kw = match self.peek() {
            Tok::Ident(s) => s.clone(),
            _ => return self.error(&["Unit", "Bool", "Nat", "List", "forall"]),
        };
        match kw.as_str() {
            "Unit" => {
                self.bump();
                Ok(BasicType::Unit)
            }
            "Bool" => {
                self.bump();
                Ok(BasicType::Bool)
            }
            "Nat" => {
                self.bump();
                Ok(BasicType::Nat)
            }
            "List" => {
                self.bump();
                self.sym("[")?;
                let elem = self.basic()?;
                self.sym("]")?;
                Ok(BasicType::list(elem))
            }
            "forall" => {
                self.bump();
                let size_var = self.ident()?;
                self.sym(".")?;
                self.sym("(")?;
                let arg = self.basic()?;
                self.sym(",")?;
                let arg_size = self.arith()?;
                self.sym(")")?;
                self.sym("->")?;
                let result = self.sized_type()?;
                Ok(BasicType::fun(size_var, arg, arg_size, result))
            }
            _ => self.error(&["Unit", "Bool", "Nat", "List", "forall"]),
        }
    }

    fn arith(&mut self) -> PResult<ArithTerm> {
        let mut acc = self.arith_product()?;
        while self.is_sym("+") {
            self.bump();
            let rhs = self.arith_product()?;
            acc = ArithTerm::add(acc, rhs);
        }
        Ok(acc)
    }

    fn arith_product(&mut self) -> PResult<ArithTerm> {
        let mut acc = self.arith_atom()?;
        while self.is_sym("*") {
            self.bump();
            let rhs = self.arith_atom()?;
            acc = ArithTerm::mul(acc, rhs);
        }
        Ok(acc)
    }

    fn arith_atom(&mut self) -> PResult<ArithTerm> {
        const START: &[&str] = &["number", "identifier", "S", "min", "max", "("];
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                let value: BigUint = n.parse().expect("lexer yields digits");
                Ok(ArithTerm::lit(value))
            }
            Tok::Sym("(") => {
                self.bump();
                let a = self.arith()?;
                self.sym(")")?;
                Ok(a)
            }
            Tok::Ident(s) if s == "S" => {
                self.bump();
                self.sym("(")?;
                let a = self.arith()?;
                self.sym(")")?;
                Ok(ArithTerm::succ(a))
            }
            Tok::Ident(s) if s == "min" || s == "max" => {
                self.bump();
                self.sym("(")?;
                let a = self.arith()?;
                self.sym(",")?;
                let b = self.arith()?;
                self.sym(")")?;
                Ok(if s == "min" {
                    ArithTerm::min(a, b)
                } else {
                    ArithTerm::max(a, b)
                })
            }
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(ArithTerm::Var(s))
            }
            _ => self.error(START),
        }
    }

    fn binder_annotation(&mut self) -> PResult<(String, BasicType, String)> {
        self.sym("(")?;
        let param = self.ident()?;
        self.sym(":")?;
        let ty = self.basic()?;
        self.sym("@")?;
        let size_var = self.ident()?;
        self.sym(")")?;
        Ok((param, ty, size_var))
    }

    fn term(&mut self) -> PResult<Term> {
        if self.is_kw("if") {
            self.bump();
            let cond = self.term()?;
            self.kw("then")?;
            let then_branch = self.term()?;
            self.kw("else")?;
            let else_branch = self.term()?;
            return Ok(Term::if_(cond, then_branch, else_branch));
        }
        if self.is_kw("case") {
            self.bump();
            let scrutinee = self.term()?;
            self.kw("of")?;
            self.kw("nil")?;
            self.sym("=>")?;
            let nil_branch = self.term()?;
            self.sym("|")?;
            self.kw("cons")?;
            self.sym("(")?;
            let head = self.ident()?;
            self.sym(",")?;
            let tail = self.ident()?;
            self.sym(")")?;
            self.sym("=>")?;
            let cons_branch = self.term()?;
            return Ok(Term::CaseList {
                scrutinee: Box::new(scrutinee),
                nil_branch: Box::new(nil_branch),
                head,
                tail,
                cons_branch: Box::new(cons_branch),
            });
        }
        if self.is_kw("fun") {
            self.bump();
            let (param, param_type, size_var) = self.binder_annotation()?;
            self.sym("=>")?;
            let body = self.term()?;
            return Ok(Term::lam(param, param_type, size_var, body));
        }
        if self.is_kw("fix") {
            self.bump();
            let self_name = self.ident()?;
            let (param, param_type, size_var) = self.binder_annotation()?;
            self.sym(":")?;
            let result = self.sized_type()?;
            self.sym("=>")?;
            let body = self.term()?;
            return Ok(Term::Fix {
                self_name,
                param,
                param_type,
                size_var,
                result,
                body: Box::new(body),
            });
        }
        let mut acc = self.atom()?;
        while self.starts_atom() {
            let arg = self.atom()?;
            acc = Term::app(acc, arg);
        }
        Ok(acc)
    }

    fn starts_atom(&self) -> bool {
        match self.peek() {
            Tok::Num(_) => true,
            Tok::Sym("(") => true,
            Tok::Ident(s) => {
                matches!(s.as_str(), "true" | "false" | "S" | "nil" | "cons" | "get")
                    || !KEYWORDS.contains(&s.as_str())
            }
            _ => false,
        }
    }

    fn atom(&mut self) -> PResult<Term> {
        const START: &[&str] = &[
            "()", "true", "false", "number", "S", "nil", "cons", "get", "case", "if", "fun",
            "fix", "(", "identifier",
        ];
        match self.peek().clone() {
            Tok::Num(n) => match n.parse::<u64>() {
                Ok(v) => {
                    self.bump();
                    Ok(Term::NatLit(v))
                }
                Err(_) => Err(SyntaxError {
                    pos: self.pos(),
                    expected: vec![],
                    found: format!("numeric literal `{n}` does not fit in 64 bits"),
                }),
            },
            Tok::Sym("(") => {
                if self.is_sym_at(1, ")") {
                    self.bump();
                    self.bump();
                    return Ok(Term::UnitLit);
                }
                self.bump();
                let t = self.term()?;
                self.sym(")")?;
                Ok(t)
            }
            Tok::Ident(s) => match s.as_str() {
                "true" => {
                    self.bump();
                    Ok(Term::BoolLit(true))
                }
                "false" => {
                    self.bump();
                    Ok(Term::BoolLit(false))
                }
                "S" => {
                    self.bump();
                    self.sym("(")?;
                    let t = self.term()?;
                    self.sym(")")?;
                    Ok(Term::succ(t))
                }
                "nil" => {
                    self.bump();
                    self.sym("[")?;
                    let ty = self.basic()?;
                    self.sym("]")?;
                    Ok(Term::Nil(ty))
                }
                "cons" => {
                    self.bump();
                    self.sym("(")?;
                    let h = self.term()?;
                    self.sym(",")?;
                    let t = self.term()?;
                    self.sym(")")?;
                    Ok(Term::cons(h, t))
                }
                "get" => {
                    self.bump();
                    let target = self.ident()?;
                    self.sym("{")?;
                    let body = self.term()?;
                    self.sym("}")?;
                    Ok(Term::get(target, body))
                }
                _ if !KEYWORDS.contains(&s.as_str()) => {
                    self.bump();
                    Ok(Term::Var(s))
                }
                _ => self.error(START),
            },
            _ => self.error(START),
        }
    }
}
