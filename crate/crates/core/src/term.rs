//! Symbolic message terms and their equational normalization.
//!
//! Terms are immutable and reference counted, so cloning a term or storing
//! it in many facts shares the underlying tree. Pattern variables live in
//! the same type as ground terms; a term is ground when it contains none.
//!
//! The equational theory is a convergent rewrite system:
//!
//! ```text
//! verify(sign(m, k), m, pk(k)) -> true
//! rdec(renc(m, k), k)          -> m
//! odec(oenc(m, k), k)          -> m
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TermError {
    #[error("symbol {symbol} expects {expected} arguments, got {actual}")]
    Arity {
        symbol: String,
        expected: usize,
        actual: usize,
    },
    #[error("unbound variable {0}")]
    UnboundVariable(String),
}

/// Function symbols of the closed signature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Pk,
    Sign,
    Verify,
    Renc,
    Rdec,
    Oenc,
    Odec,
    /// n-ary tuple, n >= 2.
    Tuple(usize),
    True,
}

impl Symbol {
    pub fn arity(self) -> usize {
        match self {
            Symbol::Pk => 1,
            Symbol::Sign | Symbol::Renc | Symbol::Rdec | Symbol::Oenc | Symbol::Odec => 2,
            Symbol::Verify => 3,
            Symbol::Tuple(n) => n,
            Symbol::True => 0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Symbol::Pk => "pk",
            Symbol::Sign => "sign",
            Symbol::Verify => "verify",
            Symbol::Renc => "renc",
            Symbol::Rdec => "rdec",
            Symbol::Oenc => "oenc",
            Symbol::Odec => "odec",
            Symbol::Tuple(_) => "tuple",
            Symbol::True => "true",
        }
    }
}

/// Who created a fresh name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Origin {
    Protocol,
    Adversary,
}

/// A fresh value (nonce or secret key). `hint` is the variable name of the
/// rule that allocated it and only serves rendering; `id` is unique within
/// one execution.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FreshName {
    pub id: u32,
    pub origin: Origin,
    pub hint: Arc<str>,
}

impl FreshName {
    pub fn new(id: u32, origin: Origin, hint: &str) -> Self {
        FreshName {
            id,
            origin,
            hint: Arc::from(hint),
        }
    }

    pub fn with_id(&self, id: u32) -> Self {
        FreshName {
            id,
            origin: self.origin,
            hint: self.hint.clone(),
        }
    }
}

impl fmt::Display for FreshName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.origin {
            Origin::Protocol => write!(f, "~{}#{}", self.hint, self.id),
            Origin::Adversary => write!(f, "~adv:{}#{}", self.hint, self.id),
        }
    }
}

/// Variable sorts follow the usual protocol-modelling convention: `$x`
/// matches public names only, `~x` fresh names only, plain `x` anything.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Public,
    Fresh,
    Msg,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    pub name: Arc<str>,
    pub sort: Sort,
}

impl Var {
    pub fn new(name: &str, sort: Sort) -> Self {
        Var {
            name: Arc::from(name),
            sort,
        }
    }

    pub fn public(name: &str) -> Self {
        Var::new(name, Sort::Public)
    }

    pub fn fresh(name: &str) -> Self {
        Var::new(name, Sort::Fresh)
    }

    pub fn msg(name: &str) -> Self {
        Var::new(name, Sort::Msg)
    }

    fn accepts(&self, t: &Term) -> bool {
        match self.sort {
            Sort::Msg => true,
            Sort::Public => matches!(t.kind(), TermKind::Public(_)),
            Sort::Fresh => matches!(t.kind(), TermKind::Fresh(_)),
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sort {
            Sort::Public => write!(f, "${}", self.name),
            Sort::Fresh => write!(f, "~{}", self.name),
            Sort::Msg => write!(f, "?{}", self.name),
        }
    }
}

#[derive(Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TermKind {
    Public(Arc<str>),
    Fresh(FreshName),
    Var(Var),
    App(Symbol, Vec<Term>),
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term(Arc<TermKind>);

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Term {
    fn node(kind: TermKind) -> Term {
        Term(Arc::new(kind))
    }

    pub fn kind(&self) -> &TermKind {
        &self.0
    }

    pub fn public(label: &str) -> Term {
        Term::node(TermKind::Public(Arc::from(label)))
    }

    pub fn fresh(name: FreshName) -> Term {
        Term::node(TermKind::Fresh(name))
    }

    pub fn var(v: Var) -> Term {
        Term::node(TermKind::Var(v))
    }

    /// Checked constructor for any symbol.
    pub fn apply(symbol: Symbol, args: Vec<Term>) -> Result<Term, TermError> {
        let ok = match symbol {
            Symbol::Tuple(n) => n >= 2 && args.len() == n,
            s => args.len() == s.arity(),
        };
        if !ok {
            let expected = match symbol {
                Symbol::Tuple(n) => n.max(2),
                s => s.arity(),
            };
            return Err(TermError::Arity {
                symbol: symbol.name().to_string(),
                expected,
                actual: args.len(),
            });
        }
        Ok(Term::node(TermKind::App(symbol, args)))
    }

    pub fn pk(k: Term) -> Term {
        Term::node(TermKind::App(Symbol::Pk, vec![k]))
    }

    pub fn sign(m: Term, k: Term) -> Term {
        Term::node(TermKind::App(Symbol::Sign, vec![m, k]))
    }

    pub fn verify(sig: Term, m: Term, pk: Term) -> Term {
        Term::node(TermKind::App(Symbol::Verify, vec![sig, m, pk]))
    }

    pub fn renc(m: Term, k: Term) -> Term {
        Term::node(TermKind::App(Symbol::Renc, vec![m, k]))
    }

    pub fn rdec(c: Term, k: Term) -> Term {
        Term::node(TermKind::App(Symbol::Rdec, vec![c, k]))
    }

    pub fn oenc(m: Term, k: Term) -> Term {
        Term::node(TermKind::App(Symbol::Oenc, vec![m, k]))
    }

    pub fn odec(c: Term, k: Term) -> Term {
        Term::node(TermKind::App(Symbol::Odec, vec![c, k]))
    }

    pub fn truth() -> Term {
        Term::node(TermKind::App(Symbol::True, Vec::new()))
    }

    /// Panics when given fewer than two items.
    pub fn tuple(items: Vec<Term>) -> Term {
        assert!(items.len() >= 2, "tuples need at least two components");
        Term::node(TermKind::App(Symbol::Tuple(items.len()), items))
    }

    pub fn is_truth(&self) -> bool {
        matches!(self.kind(), TermKind::App(Symbol::True, _))
    }

    pub fn as_fresh(&self) -> Option<&FreshName> {
        match self.kind() {
            TermKind::Fresh(n) => Some(n),
            _ => None,
        }
    }

    pub fn as_public(&self) -> Option<&str> {
        match self.kind() {
            TermKind::Public(l) => Some(l),
            _ => None,
        }
    }

    pub fn as_app(&self) -> Option<(Symbol, &[Term])> {
        match self.kind() {
            TermKind::App(s, args) => Some((*s, args)),
            _ => None,
        }
    }

    pub fn tuple_items(&self) -> Option<&[Term]> {
        match self.kind() {
            TermKind::App(Symbol::Tuple(_), items) => Some(items),
            _ => None,
        }
    }

    pub fn is_ground(&self) -> bool {
        match self.kind() {
            TermKind::Var(_) => false,
            TermKind::App(_, args) => args.iter().all(Term::is_ground),
            _ => true,
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        match self.kind() {
            TermKind::App(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
            _ => 1,
        }
    }

    /// Nesting depth of function applications; atoms and constants are 0.
    pub fn height(&self) -> usize {
        match self.kind() {
            TermKind::App(_, args) if !args.is_empty() => {
                1 + args.iter().map(Term::height).max().unwrap_or(0)
            }
            _ => 0,
        }
    }

    pub fn vars(&self, out: &mut Vec<Var>) {
        match self.kind() {
            TermKind::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            TermKind::App(_, args) => args.iter().for_each(|a| a.vars(out)),
            _ => {}
        }
    }

    pub fn fresh_names(&self, out: &mut Vec<FreshName>) {
        match self.kind() {
            TermKind::Fresh(n) => {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
            TermKind::App(_, args) => args.iter().for_each(|a| a.fresh_names(out)),
            _ => {}
        }
    }

    pub fn subterms(&self) -> Vec<Term> {
        let mut out = vec![self.clone()];
        if let TermKind::App(_, args) = self.kind() {
            for a in args {
                out.extend(a.subterms());
            }
        }
        out
    }

    /// Rebuilds the term with every fresh name passed through `f`.
    pub fn map_fresh(&self, f: &mut impl FnMut(&FreshName) -> FreshName) -> Term {
        match self.kind() {
            TermKind::Fresh(n) => Term::fresh(f(n)),
            TermKind::App(s, args) => Term::node(TermKind::App(
                *s,
                args.iter().map(|a| a.map_fresh(f)).collect(),
            )),
            _ => self.clone(),
        }
    }

    /// Rewrites one root redex, if the root is one. Arguments are taken as-is.
    pub fn reduce_root(&self) -> Option<Term> {
        let (sym, args) = self.as_app()?;
        match sym {
            Symbol::Verify => {
                let (s, m, p) = (&args[0], &args[1], &args[2]);
                let (Symbol::Sign, sa) = s.as_app()? else {
                    return None;
                };
                let (Symbol::Pk, pa) = p.as_app()? else {
                    return None;
                };
                (sa[0] == *m && sa[1] == pa[0]).then(Term::truth)
            }
            Symbol::Rdec | Symbol::Odec => {
                let enc = if sym == Symbol::Rdec {
                    Symbol::Renc
                } else {
                    Symbol::Oenc
                };
                let (s, ca) = args[0].as_app()?;
                (s == enc && ca[1] == args[1]).then(|| ca[0].clone())
            }
            _ => None,
        }
    }

    pub fn is_normal(&self) -> bool {
        match self.kind() {
            TermKind::App(_, args) => {
                args.iter().all(Term::is_normal) && self.reduce_root().is_none()
            }
            _ => true,
        }
    }
}

/// Innermost normalization to the unique normal form.
pub fn normalize(t: &Term) -> Term {
    match t.kind() {
        TermKind::App(sym, args) if !args.is_empty() => {
            let nargs: Vec<Term> = args.iter().map(normalize).collect();
            let rebuilt = if nargs.iter().zip(args).all(|(a, b)| Arc::ptr_eq(&a.0, &b.0)) {
                t.clone()
            } else {
                Term::node(TermKind::App(*sym, nargs))
            };
            // Reducts are subterms of normalized arguments (or `true`), so
            // they are already normal.
            rebuilt.reduce_root().unwrap_or(rebuilt)
        }
        _ => t.clone(),
    }
}

/// Finite map from variables to terms.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Substitution(BTreeMap<Var, Term>);

impl Substitution {
    pub fn new() -> Self {
        Substitution(BTreeMap::new())
    }

    pub fn get(&self, v: &Var) -> Option<&Term> {
        self.0.get(v)
    }

    pub fn get_named(&self, name: &str) -> Option<&Term> {
        self.0
            .iter()
            .find(|(v, _)| &*v.name == name)
            .map(|(_, t)| t)
    }

    pub fn contains(&self, v: &Var) -> bool {
        self.0.contains_key(v)
    }

    pub fn insert(&mut self, v: Var, t: Term) {
        self.0.insert(v, t);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Term)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Replaces bound variables, leaving unbound ones in place. No normalization.
    pub fn instantiate(&self, t: &Term) -> Term {
        match t.kind() {
            TermKind::Var(v) => self.0.get(v).cloned().unwrap_or_else(|| t.clone()),
            TermKind::App(s, args) => Term::node(TermKind::App(
                *s,
                args.iter().map(|a| self.instantiate(a)).collect(),
            )),
            _ => t.clone(),
        }
    }

    /// Homomorphic replacement followed by normalization.
    pub fn apply(&self, t: &Term) -> Result<Term, TermError> {
        let mut vars = Vec::new();
        t.vars(&mut vars);
        if let Some(v) = vars.iter().find(|v| !self.0.contains_key(*v)) {
            return Err(TermError::UnboundVariable(v.to_string()));
        }
        Ok(normalize(&self.instantiate(t)))
    }

    pub fn map_fresh(&self, f: &mut impl FnMut(&FreshName) -> FreshName) -> Substitution {
        Substitution(
            self.0
                .iter()
                .map(|(v, t)| (v.clone(), t.map_fresh(f)))
                .collect(),
        )
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, t)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v} -> {t}")?;
        }
        f.write_str("}")
    }
}

/// Syntactic matching of `pattern` against `ground`, extending `subst`.
/// On failure `subst` may hold partial bindings; callers clone first.
pub fn match_into(pattern: &Term, ground: &Term, subst: &mut Substitution) -> bool {
    match (pattern.kind(), ground.kind()) {
        (TermKind::Var(v), _) => match subst.get(v) {
            Some(bound) => bound == ground,
            None => {
                if !v.accepts(ground) {
                    return false;
                }
                subst.insert(v.clone(), ground.clone());
                true
            }
        },
        (TermKind::App(ps, pargs), TermKind::App(gs, gargs)) => {
            ps == gs
                && pargs.len() == gargs.len()
                && pargs
                    .iter()
                    .zip(gargs)
                    .all(|(p, g)| match_into(p, g, subst))
        }
        _ => pattern == ground,
    }
}

/// Returns the substitution `s` with `s(pattern) = ground`, if any.
pub fn match_pattern(pattern: &Term, ground: &Term) -> Option<Substitution> {
    let mut s = Substitution::new();
    match_into(pattern, ground, &mut s).then_some(s)
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            TermKind::Public(l) => write!(f, "'{l}'"),
            TermKind::Fresh(n) => write!(f, "{n}"),
            TermKind::Var(v) => write!(f, "{v}"),
            TermKind::App(Symbol::True, _) => f.write_str("true"),
            TermKind::App(s, args) => {
                write!(f, "({}", s.name())?;
                for a in args {
                    write!(f, " {a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fresh(id: u32, hint: &str) -> Term {
        Term::fresh(FreshName::new(id, Origin::Protocol, hint))
    }

    #[test]
    fn verify_reduces_on_matching_key() {
        let (m, k) = (Term::public("M"), fresh(0, "K"));
        let t = Term::verify(Term::sign(m.clone(), k.clone()), m, Term::pk(k));
        assert_eq!(normalize(&t), Term::truth());
    }

    #[test]
    fn rdec_of_renc_returns_plaintext() {
        let (r, sk) = (Term::public("R"), fresh(1, "SK"));
        let t = Term::rdec(Term::renc(r.clone(), sk.clone()), sk);
        assert_eq!(normalize(&t), r);
    }

    #[test]
    fn odec_of_oenc_returns_plaintext() {
        let (m, k) = (fresh(2, "SK_O"), fresh(1, "LTK"));
        assert_eq!(
            normalize(&Term::odec(Term::oenc(m.clone(), k.clone()), k)),
            m
        );
    }

    #[test]
    fn verify_under_other_key_is_stuck() {
        let m = Term::public("M");
        let t = Term::verify(
            Term::sign(m.clone(), fresh(0, "K1")),
            m,
            Term::pk(fresh(1, "K2")),
        );
        assert_eq!(normalize(&t), t);
        assert!(t.is_normal());
    }

    #[test]
    fn mismatched_decryption_is_stuck() {
        let t = Term::rdec(Term::renc(Term::public("m"), fresh(0, "a")), fresh(1, "b"));
        assert_eq!(normalize(&t), t);
        // renc and oenc do not cancel each other.
        let u = Term::odec(Term::renc(Term::public("m"), fresh(0, "a")), fresh(0, "a"));
        assert_eq!(normalize(&u), u);
    }

    #[test]
    fn nested_redexes_normalize_innermost() {
        let k = fresh(0, "k");
        let inner = Term::rdec(Term::renc(Term::public("m"), k.clone()), k.clone());
        let t = Term::verify(Term::sign(inner, k.clone()), Term::public("m"), Term::pk(k));
        assert_eq!(normalize(&t), Term::truth());
    }

    #[test]
    fn match_examples() {
        let x = Term::var(Var::msg("x"));
        let n = Term::public("N");
        let s = match_pattern(
            &Term::tuple(vec![x.clone(), Term::public("confirm")]),
            &Term::tuple(vec![n.clone(), Term::public("confirm")]),
        )
        .unwrap();
        assert_eq!(s.get(&Var::msg("x")), Some(&n));
        let k = fresh(3, "K");
        let s = match_pattern(&Term::pk(x.clone()), &Term::pk(k.clone())).unwrap();
        assert_eq!(s.get(&Var::msg("x")), Some(&k));
        assert!(match_pattern(&Term::public("revoke"), &Term::public("confirm")).is_none());
    }

    #[test]
    fn sorted_variables_only_match_their_sort() {
        assert!(match_pattern(&Term::var(Var::fresh("k")), &Term::public("A")).is_none());
        assert!(match_pattern(&Term::var(Var::public("a")), &fresh(0, "k")).is_none());
        assert!(match_pattern(&Term::var(Var::fresh("k")), &fresh(0, "k")).is_some());
    }

    #[test]
    fn nonlinear_patterns_need_equal_subterms() {
        let x = Term::var(Var::msg("x"));
        let p = Term::tuple(vec![x.clone(), x]);
        assert!(
            match_pattern(&p, &Term::tuple(vec![Term::public("a"), Term::public("b")])).is_none()
        );
        assert!(
            match_pattern(&p, &Term::tuple(vec![Term::public("a"), Term::public("a")])).is_some()
        );
    }

    #[test]
    fn apply_examples() {
        let x = Var::msg("x");
        let mut s = Substitution::new();
        s.insert(x.clone(), Term::public("A"));
        let t = Term::tuple(vec![Term::var(x.clone()), Term::var(x)]);
        assert_eq!(
            s.apply(&t).unwrap(),
            Term::tuple(vec![Term::public("A"), Term::public("A")])
        );
        assert_eq!(
            Substitution::new().apply(&Term::public("revoke")).unwrap(),
            Term::public("revoke")
        );

        let (k, m) = (Var::fresh("k"), Var::msg("m"));
        let mut s = Substitution::new();
        s.insert(k.clone(), fresh(0, "K"));
        s.insert(m.clone(), Term::public("M"));
        let p = Term::verify(
            Term::sign(Term::var(m.clone()), Term::var(k.clone())),
            Term::var(m),
            Term::pk(Term::var(k)),
        );
        assert_eq!(s.apply(&p).unwrap(), Term::truth());
    }

    #[test]
    fn apply_reports_unbound_variables() {
        let err = Substitution::new()
            .apply(&Term::var(Var::msg("y")))
            .unwrap_err();
        assert_eq!(err, TermError::UnboundVariable("?y".into()));
    }

    #[test]
    fn checked_constructor_rejects_bad_arity() {
        assert!(Term::apply(Symbol::Pk, vec![]).is_err());
        assert!(Term::apply(Symbol::Tuple(1), vec![Term::public("a")]).is_err());
        assert!(Term::apply(Symbol::Tuple(2), vec![Term::public("a"), Term::public("b")]).is_ok());
        assert!(Term::apply(Symbol::True, vec![]).is_ok());
    }

    #[test]
    fn rendering_is_stable() {
        let t = Term::sign(
            Term::tuple(vec![
                Term::public("revoke"),
                fresh(4, "SK_PSi"),
                Term::public("reason"),
            ]),
            fresh(0, "SK_RA"),
        );
        assert_eq!(
            t.to_string(),
            "(sign (tuple 'revoke' ~SK_PSi#4 'reason') ~SK_RA#0)"
        );
        assert_eq!(Term::truth().to_string(), "true");
    }
}
