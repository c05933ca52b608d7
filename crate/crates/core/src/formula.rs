//! A small first-order trace logic, used to re-check goal evidence.
//!
//! Formulas are written in the usual lemma syntax:
//!
//! ```text
//! All ra vj t #i. OsrConfAcceptedBy(ra, vj, t) @ #i
//!     ==> (Ex #j. OsrReqMsgRecvBy(vj, ra, t) @ #j & #j < #i)
//!       | (Ex x #r. VehicleCompromised(vj, x) @ #r)
//! ```
//!
//! Quantifiers range over values occurring in the trace. Evaluation binds
//! variables by matching event atoms, so it never enumerates whole domains
//! unless a variable is mentioned only in comparisons.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::state::Event;
use crate::term::Term;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("unexpected character '{0}' at offset {1}")]
    Char(char, usize),
    #[error("expected {expected} but found {found}")]
    Expected { expected: String, found: String },
    #[error("variable {0} is not bound by a quantifier")]
    Unbound(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Arg {
    Var(String),
    Const(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    Atom {
        label: String,
        args: Vec<Arg>,
        at: String,
    },
    Less(String, String),
    TimeEq(String, String),
    MsgEq(Arg, Arg),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Exists(Vec<String>, Box<Formula>),
    Forall(Vec<String>, Box<Formula>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Time(String),
    Quote(String),
    Sym(&'static str),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "'{s}'"),
            Tok::Time(s) => write!(f, "#{s}"),
            Tok::Quote(s) => write!(f, "'{s}'"),
            Tok::Sym(s) => write!(f, "'{s}'"),
        }
    }
}

fn lex(src: &str) -> Result<Vec<Tok>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let ident = |i: &mut usize| {
        let start = *i;
        while *i < chars.len() && (chars[*i].is_alphanumeric() || chars[*i] == '_') {
            *i += 1;
        }
        chars[start..*i].iter().collect::<String>()
    };
    while i < chars.len() {
        let c = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '#' => {
                i += 1;
                out.push(Tok::Time(format!("#{}", ident(&mut i))));
            }
            '\'' => {
                let start = i + 1;
                let end = chars[start..]
                    .iter()
                    .position(|&c| c == '\'')
                    .ok_or(ParseError::Char(c, i))?
                    + start;
                out.push(Tok::Quote(chars[start..end].iter().collect()));
                i = end + 1;
            }
            '=' if chars.get(i + 1) == Some(&'=') && chars.get(i + 2) == Some(&'>') => {
                out.push(Tok::Sym("==>"));
                i += 3;
            }
            '(' | ')' | ',' | '.' | '@' | '&' | '|' | '<' | '=' => {
                let s = match c {
                    '(' => "(",
                    ')' => ")",
                    ',' => ",",
                    '.' => ".",
                    '@' => "@",
                    '&' => "&",
                    '|' => "|",
                    '<' => "<",
                    _ => "=",
                };
                out.push(Tok::Sym(s));
                i += 1;
            }
            c if c.is_alphabetic() || c == '_' => out.push(Tok::Ident(ident(&mut i))),
            _ => return Err(ParseError::Char(c, i)),
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn found(&self) -> String {
        self.peek()
            .map_or_else(|| "end of input".to_string(), ToString::to_string)
    }

    fn eat(&mut self, sym: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Sym(s)) if *s == sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, sym: &str) -> Result<(), ParseError> {
        if self.eat(sym) {
            Ok(())
        } else {
            Err(ParseError::Expected {
                expected: format!("'{sym}'"),
                found: self.found(),
            })
        }
    }

    fn time(&mut self) -> Result<String, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Time(t)) => {
                self.pos += 1;
                Ok(t)
            }
            _ => Err(ParseError::Expected {
                expected: "a timepoint".into(),
                found: self.found(),
            }),
        }
    }

    fn implication(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disjunction()?;
        if self.eat("==>") {
            let rhs = self.implication()?;
            return Ok(Formula::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let mut parts = vec![self.conjunction()?];
        while self.eat("|") {
            parts.push(self.conjunction()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Formula::Or(parts)
        })
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut parts = vec![self.unary()?];
        while self.eat("&") {
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Formula::And(parts)
        })
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Ident(w)) if w == "not" => {
                self.pos += 1;
                Ok(Formula::Not(Box::new(self.unary()?)))
            }
            Some(Tok::Ident(w)) if w == "All" || w == "Ex" => {
                self.pos += 1;
                let mut vars = Vec::new();
                while let Some(Tok::Ident(v) | Tok::Time(v)) = self.peek().cloned() {
                    self.pos += 1;
                    vars.push(v);
                }
                self.expect(".")?;
                let body = Box::new(self.implication()?);
                Ok(if w == "All" {
                    Formula::Forall(vars, body)
                } else {
                    Formula::Exists(vars, body)
                })
            }
            Some(Tok::Sym("(")) => {
                self.pos += 1;
                let f = self.implication()?;
                self.expect(")")?;
                Ok(f)
            }
            Some(Tok::Time(t)) => {
                self.pos += 1;
                if self.eat("<") {
                    Ok(Formula::Less(t, self.time()?))
                } else {
                    self.expect("=")?;
                    Ok(Formula::TimeEq(t, self.time()?))
                }
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.eat("(") {
                    let mut args = Vec::new();
                    if !self.eat(")") {
                        loop {
                            args.push(self.arg()?);
                            if self.eat(")") {
                                break;
                            }
                            self.expect(",")?;
                        }
                    }
                    self.expect("@")?;
                    let at = self.time()?;
                    Ok(Formula::Atom {
                        label: name,
                        args,
                        at,
                    })
                } else {
                    self.expect("=")?;
                    Ok(Formula::MsgEq(Arg::Var(name), self.arg()?))
                }
            }
            Some(Tok::Quote(c)) => {
                self.pos += 1;
                self.expect("=")?;
                Ok(Formula::MsgEq(Arg::Const(c), self.arg()?))
            }
            _ => Err(ParseError::Expected {
                expected: "a formula".into(),
                found: self.found(),
            }),
        }
    }

    fn arg(&mut self) -> Result<Arg, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Ident(v)) => {
                self.pos += 1;
                Ok(Arg::Var(v))
            }
            Some(Tok::Quote(c)) => {
                self.pos += 1;
                Ok(Arg::Const(c))
            }
            _ => Err(ParseError::Expected {
                expected: "a variable or constant".into(),
                found: self.found(),
            }),
        }
    }
}

fn check_bound(f: &Formula, scope: &mut Vec<String>) -> Result<(), ParseError> {
    let need = |v: &String, scope: &Vec<String>| {
        if scope.contains(v) {
            Ok(())
        } else {
            Err(ParseError::Unbound(v.clone()))
        }
    };
    let need_arg = |a: &Arg, scope: &Vec<String>| match a {
        Arg::Var(v) => need(v, scope),
        Arg::Const(_) => Ok(()),
    };
    match f {
        Formula::Atom { args, at, .. } => {
            args.iter().try_for_each(|a| need_arg(a, scope))?;
            need(at, scope)
        }
        Formula::Less(a, b) | Formula::TimeEq(a, b) => need(a, scope).and(need(b, scope)),
        Formula::MsgEq(a, b) => need_arg(a, scope).and(need_arg(b, scope)),
        Formula::Not(g) => check_bound(g, scope),
        Formula::And(gs) | Formula::Or(gs) => gs.iter().try_for_each(|g| check_bound(g, scope)),
        Formula::Implies(a, b) => check_bound(a, scope).and(check_bound(b, scope)),
        Formula::Exists(vs, g) | Formula::Forall(vs, g) => {
            let n = scope.len();
            scope.extend(vs.iter().cloned());
            let r = check_bound(g, scope);
            scope.truncate(n);
            r
        }
    }
}

/// Parses a closed formula.
pub fn parse(src: &str) -> Result<Formula, ParseError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    };
    let f = p.implication()?;
    if p.pos != p.toks.len() {
        return Err(ParseError::Expected {
            expected: "end of input".into(),
            found: p.found(),
        });
    }
    check_bound(&f, &mut Vec::new())?;
    Ok(f)
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Value {
    Msg(Term),
    Time(usize),
}

type Env = BTreeMap<String, Value>;

struct Model<'a> {
    events: &'a [Event],
    /// Every event argument, for variables no atom binds.
    terms: Vec<Term>,
    last_time: usize,
}

fn resolve(a: &Arg, env: &Env) -> Option<Term> {
    match a {
        Arg::Const(c) => Some(Term::public(c)),
        Arg::Var(v) => match env.get(v) {
            Some(Value::Msg(t)) => Some(t.clone()),
            _ => None,
        },
    }
}

fn time_of(v: &str, env: &Env) -> Option<usize> {
    match env.get(v) {
        Some(Value::Time(t)) => Some(*t),
        _ => None,
    }
}

impl Model<'_> {
    fn eval(&self, f: &Formula, env: &Env) -> bool {
        match f {
            Formula::Atom { .. } => self.solve(&[f], env, &mut Vec::new()),
            Formula::Less(a, b) => time_of(a, env)
                .zip(time_of(b, env))
                .is_some_and(|(x, y)| x < y),
            Formula::TimeEq(a, b) => time_of(a, env)
                .zip(time_of(b, env))
                .is_some_and(|(x, y)| x == y),
            Formula::MsgEq(a, b) => resolve(a, env)
                .zip(resolve(b, env))
                .is_some_and(|(x, y)| x == y),
            Formula::Not(g) => !self.eval(g, env),
            Formula::And(gs) => gs.iter().all(|g| self.eval(g, env)),
            Formula::Or(gs) => gs.iter().any(|g| self.eval(g, env)),
            Formula::Implies(a, b) => !self.eval(a, env) || self.eval(b, env),
            Formula::Exists(vs, body) => {
                let mut env = env.clone();
                vs.iter().for_each(|v| {
                    env.remove(v);
                });
                let parts = conjuncts(body);
                self.solve(&parts, &env, &mut Vec::new())
            }
            Formula::Forall(vs, body) => {
                let mut env = env.clone();
                vs.iter().for_each(|v| {
                    env.remove(v);
                });
                // All x. A ==> B  is  not Ex x. A & not B
                let (mut parts, negated) = match &**body {
                    Formula::Implies(a, b) => (conjuncts(a), Formula::Not(b.clone())),
                    other => (Vec::new(), Formula::Not(Box::new(other.clone()))),
                };
                parts.push(&negated);
                !self.solve(&parts, &env, &mut Vec::new())
            }
        }
    }

    /// Is there an extension of `env` satisfying every conjunct? Atoms with
    /// unbound variables generate bindings; the rest are tested once ground.
    fn solve(&self, parts: &[&Formula], env: &Env, done: &mut Vec<usize>) -> bool {
        let pending: Vec<usize> = (0..parts.len()).filter(|i| !done.contains(i)).collect();
        if pending.is_empty() {
            return true;
        }
        // Ground conjuncts first, so failures prune early.
        if let Some(&i) = pending
            .iter()
            .find(|&&i| free_vars(parts[i], env).is_empty())
        {
            if !self.eval_ground(parts[i], env) {
                return false;
            }
            done.push(i);
            let ok = self.solve(parts, env, done);
            done.pop();
            return ok;
        }
        if let Some(&i) = pending
            .iter()
            .find(|&&i| matches!(parts[i], Formula::Atom { .. }))
        {
            let Formula::Atom { label, args, at } = parts[i] else {
                unreachable!()
            };
            done.push(i);
            let mut ok = false;
            for e in self
                .events
                .iter()
                .filter(|e| *e.label == **label && e.args.len() == args.len())
            {
                let mut ext = env.clone();
                if bind(&mut ext, at, Value::Time(e.time))
                    && args.iter().zip(&e.args).all(|(a, t)| match a {
                        Arg::Const(c) => Term::public(c) == *t,
                        Arg::Var(v) => bind(&mut ext, v, Value::Msg(t.clone())),
                    })
                    && self.solve(parts, &ext, done)
                {
                    ok = true;
                    break;
                }
            }
            done.pop();
            return ok;
        }
        // A variable no atom binds: enumerate its domain.
        let i = pending[0];
        let var = free_vars(parts[i], env)
            .into_iter()
            .next()
            .expect("non-ground conjunct");
        let domain: Vec<Value> = if var.starts_with('#') {
            (0..=self.last_time).map(Value::Time).collect()
        } else {
            self.terms.iter().cloned().map(Value::Msg).collect()
        };
        domain.into_iter().any(|v| {
            let mut ext = env.clone();
            ext.insert(var.clone(), v);
            self.solve(parts, &ext, done)
        })
    }

    fn eval_ground(&self, f: &Formula, env: &Env) -> bool {
        match f {
            Formula::Atom { label, args, at } => {
                let Some(t) = time_of(at, env) else {
                    return false;
                };
                let Some(vals) = args
                    .iter()
                    .map(|a| resolve(a, env))
                    .collect::<Option<Vec<_>>>()
                else {
                    return false;
                };
                self.events
                    .iter()
                    .any(|e| e.time == t && *e.label == **label && e.args == vals)
            }
            other => self.eval(other, env),
        }
    }
}

fn bind(env: &mut Env, var: &str, val: Value) -> bool {
    match env.get(var) {
        Some(v) => *v == val,
        None => {
            env.insert(var.to_string(), val);
            true
        }
    }
}

fn conjuncts(f: &Formula) -> Vec<&Formula> {
    match f {
        Formula::And(gs) => gs.iter().flat_map(conjuncts).collect(),
        other => vec![other],
    }
}

/// Variables occurring free in `f` and not bound in `env`.
fn free_vars(f: &Formula, env: &Env) -> Vec<String> {
    fn go(f: &Formula, env: &Env, bound: &mut Vec<String>, out: &mut Vec<String>) {
        let mut add = |v: &String, bound: &Vec<String>| {
            if !env.contains_key(v) && !bound.contains(v) && !out.contains(v) {
                out.push(v.clone());
            }
        };
        match f {
            Formula::Atom { args, at, .. } => {
                for a in args {
                    if let Arg::Var(v) = a {
                        add(v, bound);
                    }
                }
                add(at, bound);
            }
            Formula::Less(a, b) | Formula::TimeEq(a, b) => {
                add(a, bound);
                add(b, bound);
            }
            Formula::MsgEq(a, b) => {
                for x in [a, b] {
                    if let Arg::Var(v) = x {
                        add(v, bound);
                    }
                }
            }
            Formula::Not(g) => go(g, env, bound, out),
            Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| go(g, env, bound, out)),
            Formula::Implies(a, b) => {
                go(a, env, bound, out);
                go(b, env, bound, out);
            }
            Formula::Exists(vs, g) | Formula::Forall(vs, g) => {
                let n = bound.len();
                bound.extend(vs.iter().cloned());
                go(g, env, bound, out);
                bound.truncate(n);
            }
        }
    }
    let mut out = Vec::new();
    go(f, env, &mut Vec::new(), &mut out);
    out
}

/// Truth of a closed formula on a finite event sequence.
pub fn holds(f: &Formula, events: &[Event]) -> bool {
    let mut terms: Vec<Term> = events.iter().flat_map(|e| e.args.iter().cloned()).collect();
    terms.sort();
    terms.dedup();
    let last_time = events.iter().map(|e| e.time).max().unwrap_or(0);
    Model {
        events,
        terms,
        last_time,
    }
    .eval(f, &Env::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn ev(label: &str, args: &[&str], time: usize) -> Event {
        Event {
            label: Arc::from(label),
            args: args.iter().map(|a| Term::public(a)).collect(),
            time,
        }
    }

    #[test]
    fn parses_nested_quantifiers() {
        let f = parse(
            "All a #i. A(a) @ #i ==> (Ex #j. B(a) @ #j & #j < #i) | not (Ex #k. C('x') @ #k)",
        )
        .unwrap();
        assert!(
            matches!(f, Formula::Forall(ref vs, _) if vs == &["a".to_string(), "#i".to_string()])
        );
    }

    #[test]
    fn rejects_free_variables() {
        assert_eq!(
            parse("Ex #i. A(x) @ #i"),
            Err(ParseError::Unbound("x".into()))
        );
        assert!(parse("Ex #i. A(").is_err());
    }

    #[test]
    fn ordering_is_strict() {
        let f = parse("All a #i. B(a) @ #i ==> Ex #j. A(a) @ #j & #j < #i").unwrap();
        assert!(holds(&f, &[ev("A", &["x"], 0), ev("B", &["x"], 1)]));
        assert!(!holds(&f, &[ev("A", &["x"], 1), ev("B", &["x"], 1)]));
        assert!(!holds(&f, &[ev("A", &["y"], 0), ev("B", &["x"], 1)]));
        assert!(holds(&f, &[]));
    }

    #[test]
    fn existential_needs_a_matching_event() {
        let f =
            parse("Ex a #i #j. A(a) @ #i & B(a) @ #j & #i < #j & not (Ex #r. R(a) @ #r)").unwrap();
        assert!(holds(&f, &[ev("A", &["x"], 0), ev("B", &["x"], 2)]));
        assert!(!holds(
            &f,
            &[ev("A", &["x"], 0), ev("B", &["x"], 2), ev("R", &["x"], 3)]
        ));
        assert!(!holds(&f, &[]));
    }

    #[test]
    fn unguarded_variables_fall_back_to_the_domain() {
        let f = parse("Ex x #t. x = 'b' & #t = #t").unwrap();
        assert!(holds(&f, &[ev("A", &["b"], 0)]));
        assert!(!holds(&f, &[ev("A", &["c"], 0)]));
    }
}
