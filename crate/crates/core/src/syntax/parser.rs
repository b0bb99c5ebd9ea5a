//! Recursive-descent parser. The grammar is documented in docs/grammar.ebnf.
//!
//! The parser tracks which names are in scope: `f(args)` where `f` is not a
//! bound variable, source or earlier definition is a primitive call.

use num_traits::Zero;

use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::ParseError;
use crate::accountant::Variant;
use crate::env::Sens;
use crate::real::{parse_decimal, RealExpr};
use crate::Rational;

pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut p = Parser::new(text)?;
    let prog = p.program()?;
    Ok(prog)
}

/// Parse a standalone expression with the given names in scope.
pub fn parse_expr(text: &str, scope: &[&str]) -> Result<Expr, ParseError> {
    let mut p = Parser::new(text)?;
    p.scope = scope.iter().map(|s| s.to_string()).collect();
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

pub fn parse_type(text: &str) -> Result<TypeAst, ParseError> {
    let mut p = Parser::new(text)?;
    let t = p.ty()?;
    p.expect_eof()?;
    Ok(t)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    scope: Vec<String>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(text: &str) -> PResult<Self> {
        Ok(Parser { toks: lex(text)?, pos: 0, scope: Vec::new() })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &[&str]) -> PResult<T> {
        Err(ParseError {
            span: self.span(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().describe(),
        })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, s: &str) -> bool {
        if self.is_kw(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.error(&[&format!("`{s}`")])
        }
    }

    fn expect_kw(&mut self, s: &str) -> PResult<()> {
        if self.eat_kw(s) {
            Ok(())
        } else {
            self.error(&[&format!("`{s}`")])
        }
    }

    fn expect_eof(&mut self) -> PResult<()> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            self.error(&["end of input"])
        }
    }

    /// A non-keyword identifier.
    fn name(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                Ok(s)
            }
            _ => self.error(&["identifier"]),
        }
    }

    fn in_scope(&self, name: &str) -> bool {
        self.scope.iter().any(|s| s == name)
    }

    fn with_bound<T>(&mut self, names: &[&str], f: impl FnOnce(&mut Self) -> PResult<T>) -> PResult<T> {
        let n = self.scope.len();
        self.scope.extend(names.iter().map(|s| s.to_string()));
        let r = f(self);
        self.scope.truncate(n);
        r
    }

    // ---- numbers ----

    fn natural(&mut self) -> PResult<u64> {
        match self.peek().clone() {
            Tok::Number(n) if !n.contains('.') => match n.parse() {
                Ok(v) => {
                    self.bump();
                    Ok(v)
                }
                Err(_) => self.error(&["natural number below 2^64"]),
            },
            _ => self.error(&["natural number"]),
        }
    }

    fn unsigned_decimal(&mut self) -> PResult<Rational> {
        match self.peek().clone() {
            Tok::Number(n) => {
                self.bump();
                Ok(parse_decimal(&n).expect("lexer produces valid decimals"))
            }
            _ => self.error(&["number"]),
        }
    }

    /// `-`? decimal (`/` decimal)?
    fn rational(&mut self) -> PResult<Rational> {
        let neg = self.eat_sym("-");
        let mut r = self.unsigned_decimal()?;
        if self.is_sym("/") {
            self.bump();
            let d = self.unsigned_decimal()?;
            if d.is_zero() {
                return self.error(&["nonzero denominator"]);
            }
            r /= d;
        }
        Ok(if neg { -r } else { r })
    }

    fn sens(&mut self) -> PResult<Sens> {
        if self.eat_kw("inf") {
            Ok(Sens::Inf)
        } else {
            Ok(Sens::Finite(self.natural()?))
        }
    }

    // ---- program ----

    fn program(&mut self) -> PResult<Program> {
        let mut sources = Vec::new();
        let mut defs = Vec::new();
        loop {
            let span = self.span();
            if self.eat_kw("source") {
                let name = self.name()?;
                self.expect_sym(":")?;
                let ty = self.stype()?;
                self.expect_sym(";")?;
                self.scope.push(name.clone());
                sources.push(SourceDecl { name, ty, span });
            } else if self.eat_kw("def") {
                let name = self.name()?;
                self.expect_sym(":")?;
                let mut quantifiers = Vec::new();
                if self.eat_kw("forall") {
                    loop {
                        quantifiers.push(self.name()?);
                        if self.eat_sym(".") {
                            break;
                        }
                    }
                }
                let sig = self.ty()?;
                self.expect_sym("=")?;
                let body = self.expr()?;
                self.expect_sym(";")?;
                self.scope.push(name.clone());
                defs.push(Def { name, quantifiers, sig, body, span });
            } else if self.eat_kw("main") {
                self.expect_sym("=")?;
                let main = self.expr()?;
                self.eat_sym(";");
                self.expect_eof()?;
                return Ok(Program { sources, defs, main });
            } else {
                return self.error(&["`source`", "`def`", "`main`"]);
            }
        }
    }

    // ---- types ----

    pub(crate) fn ty(&mut self) -> PResult<TypeAst> {
        let a = self.atype()?;
        if self.eat_sym("->") {
            let b = self.ty()?;
            Ok(Type::fun(a, b))
        } else {
            Ok(a)
        }
    }

    fn atype(&mut self) -> PResult<TypeAst> {
        if self.eat_kw("bool") {
            return Ok(Type::Bool);
        }
        if self.eat_kw("real") {
            if self.eat_sym("[") {
                let r = self.rational()?;
                self.expect_sym("]")?;
                return Ok(Type::RealSing(r));
            }
            return Ok(Type::Real);
        }
        if self.eat_kw("list") {
            self.expect_sym("(")?;
            let t = self.ty()?;
            self.expect_sym(")")?;
            return Ok(Type::list(t));
        }
        if self.eat_sym("(") {
            let a = self.ty()?;
            if self.eat_sym(",") {
                let b = self.ty()?;
                self.expect_sym(")")?;
                return Ok(Type::prod(a, b));
            }
            self.expect_sym(")")?;
            return Ok(a);
        }
        for v in [Variant::Eps, Variant::Ed, Variant::Rdp] {
            if self.eat_kw(v.keyword()) {
                let node = self.penv_atom(v)?;
                let t = self.atype()?;
                return Ok(Type::pm(PrivExpr { variant: v, node }, t));
            }
        }
        if self.starts_stype() {
            let s = self.stype()?;
            let env = self.env_atom()?;
            return Ok(Type::Sensitive(s, env));
        }
        self.error(&["type"])
    }

    fn starts_stype(&self) -> bool {
        ["sreal", "spair", "slist", "sset", "smatrix", "sdict"].iter().any(|k| self.is_kw(k))
    }

    fn nmetric(&mut self) -> PResult<NMetric> {
        if self.eat_kw("diff") {
            Ok(NMetric::Diff)
        } else if self.eat_kw("disc") {
            Ok(NMetric::Disc)
        } else {
            self.error(&["`diff`", "`disc`"])
        }
    }

    fn cmetric(&mut self) -> PResult<CMetric> {
        if self.eat_kw("L1") {
            Ok(CMetric::L1)
        } else if self.eat_kw("L2") {
            Ok(CMetric::L2)
        } else if self.eat_kw("LInf") {
            Ok(CMetric::LInf)
        } else {
            self.error(&["`L1`", "`L2`", "`LInf`"])
        }
    }

    pub(crate) fn stype(&mut self) -> PResult<SType> {
        if self.eat_kw("sreal") {
            return Ok(SType::SReal(self.nmetric()?));
        }
        if self.eat_kw("spair") {
            let w = self.cmetric()?;
            let a = self.satom()?;
            let b = self.satom()?;
            return Ok(SType::SProd(w, Box::new(a), Box::new(b)));
        }
        if self.eat_kw("slist") {
            let w = self.cmetric()?;
            let a = self.satom()?;
            return Ok(SType::SList(w, Box::new(a)));
        }
        if self.eat_kw("sset") {
            return Ok(SType::SSet(self.plain_atom()?));
        }
        if self.eat_kw("smatrix") {
            let w = self.cmetric()?;
            let r = self.natural()?;
            let c = self.natural()?;
            if r == 0 || c == 0 {
                return self.error(&["positive matrix dimensions"]);
            }
            let a = self.satom()?;
            return Ok(SType::SMatrix(w, r, c, Box::new(a)));
        }
        if self.eat_kw("sdict") {
            let w = self.cmetric()?;
            let a = self.satom()?;
            let b = self.satom()?;
            return Ok(SType::SDict(w, Box::new(a), Box::new(b)));
        }
        self.error(&["sensitive type"])
    }

    fn satom(&mut self) -> PResult<SType> {
        self.expect_sym("(")?;
        let s = self.stype()?;
        self.expect_sym(")")?;
        Ok(s)
    }

    fn plain_atom(&mut self) -> PResult<PlainType> {
        if self.eat_kw("bool") {
            return Ok(PlainType::Bool);
        }
        if self.eat_kw("real") {
            return Ok(PlainType::Real);
        }
        if self.eat_kw("list") {
            self.expect_sym("(")?;
            let t = self.plain_atom()?;
            self.expect_sym(")")?;
            return Ok(PlainType::List(Box::new(t)));
        }
        if self.eat_sym("(") {
            let a = self.plain_atom()?;
            self.expect_sym(",")?;
            let b = self.plain_atom()?;
            self.expect_sym(")")?;
            return Ok(PlainType::Prod(Box::new(a), Box::new(b)));
        }
        self.error(&["`bool`", "`real`", "`list`", "`(`"])
    }

    // ---- environments ----

    fn env(&mut self) -> PResult<EnvExpr> {
        let mut e = self.env_term()?;
        while self.eat_sym("+") {
            let r = self.env_term()?;
            e = EnvExpr::Plus(Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn env_term(&mut self) -> PResult<EnvExpr> {
        let scalar = match self.peek() {
            Tok::Number(_) => true,
            Tok::Ident(s) if s == "inf" => true,
            _ => false,
        };
        if scalar {
            let k = self.sens()?;
            self.expect_sym("*")?;
            let e = self.env_atom()?;
            return Ok(EnvExpr::Scale(k, Box::new(e)));
        }
        self.env_atom()
    }

    fn env_atom(&mut self) -> PResult<EnvExpr> {
        if self.eat_sym("[") {
            let mut entries = Vec::new();
            if !self.eat_sym("]") {
                loop {
                    let n = self.name()?;
                    self.expect_sym(":")?;
                    entries.push((n, self.sens()?));
                    if self.eat_sym("]") {
                        break;
                    }
                    self.expect_sym(",")?;
                }
            }
            return Ok(EnvExpr::Lit(entries));
        }
        if self.eat_sym("(") {
            let e = self.env()?;
            self.expect_sym(")")?;
            return Ok(e);
        }
        if self.eat_kw("join") {
            self.expect_sym("(")?;
            let a = self.env()?;
            self.expect_sym(",")?;
            let b = self.env()?;
            self.expect_sym(")")?;
            return Ok(EnvExpr::Join(Box::new(a), Box::new(b)));
        }
        match self.peek() {
            Tok::Ident(s) if !is_keyword(s) => Ok(EnvExpr::Var(self.name()?)),
            _ => self.error(&["environment"]),
        }
    }

    fn penv(&mut self, v: Variant) -> PResult<PrivNode> {
        let mut e = self.penv_term(v)?;
        while self.eat_sym("+") {
            let r = self.penv_term(v)?;
            e = PrivNode::Plus(Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn penv_term(&mut self, v: Variant) -> PResult<PrivNode> {
        if matches!(self.peek(), Tok::Number(_)) {
            let k = self.natural()?;
            self.expect_sym("*")?;
            let p = self.penv_atom(v)?;
            return Ok(PrivNode::Scale(k, Box::new(p)));
        }
        self.penv_atom(v)
    }

    fn penv_atom(&mut self, v: Variant) -> PResult<PrivNode> {
        if self.eat_sym("[") {
            let mut entries = Vec::new();
            if !self.eat_sym("]") {
                loop {
                    let n = self.name()?;
                    self.expect_sym(":")?;
                    entries.push((n, self.cost(v)?));
                    if self.eat_sym("]") {
                        break;
                    }
                    self.expect_sym(",")?;
                }
            }
            return Ok(PrivNode::Lit(entries));
        }
        if self.eat_kw("trunc") {
            self.expect_sym("(")?;
            let c = self.cost(v)?;
            self.expect_sym(",")?;
            let e = self.env()?;
            self.expect_sym(")")?;
            return Ok(PrivNode::Trunc(c, e));
        }
        if self.is_kw("inf") && self.peek_at(1) == &Tok::Sym("(") {
            self.bump();
            self.bump();
            let e = self.env()?;
            self.expect_sym(")")?;
            return Ok(PrivNode::Inf(e));
        }
        if self.eat_sym("(") {
            let p = self.penv(v)?;
            self.expect_sym(")")?;
            return Ok(p);
        }
        self.error(&["privacy environment"])
    }

    fn cost(&mut self, v: Variant) -> PResult<CostLit> {
        if self.eat_kw("inf") {
            return Ok(CostLit::Inf);
        }
        match v {
            Variant::Eps => {
                let span = self.span();
                let r = self.rational()?;
                if r < Rational::zero() {
                    return Err(ParseError { span, expected: vec!["nonnegative cost".into()], found: "negative number".into() });
                }
                Ok(CostLit::Eps(r))
            }
            Variant::Ed => {
                self.expect_sym("(")?;
                let e = self.rexpr()?;
                self.expect_sym(",")?;
                let d = self.rexpr()?;
                self.expect_sym(")")?;
                Ok(CostLit::Ed(e, d))
            }
            Variant::Rdp => {
                self.expect_sym("(")?;
                let a = self.rational()?;
                self.expect_sym(",")?;
                let e = self.rexpr()?;
                self.expect_sym(")")?;
                Ok(CostLit::Rdp(a, e))
            }
        }
    }

    fn rexpr(&mut self) -> PResult<RealExpr> {
        let mut e = self.rprod()?;
        while self.eat_sym("+") {
            let r = self.rprod()?;
            e = RealExpr::add(e, r);
        }
        Ok(e)
    }

    fn rprod(&mut self) -> PResult<RealExpr> {
        let mut e = self.ratom()?;
        loop {
            if self.eat_sym("*") {
                let r = self.ratom()?;
                e = RealExpr::mul(e, r);
            } else if self.is_sym("/") {
                let span = self.span();
                self.bump();
                let r = self.ratom()?;
                e = RealExpr::div(e, r).map_err(|err| real_error(span, err))?;
            } else {
                return Ok(e);
            }
        }
    }

    fn ratom(&mut self) -> PResult<RealExpr> {
        let span = self.span();
        if matches!(self.peek(), Tok::Number(_)) {
            return Ok(RealExpr::Lit(self.unsigned_decimal()?));
        }
        if self.eat_kw("inf") {
            return Ok(RealExpr::Inf);
        }
        if self.eat_sym("(") {
            let e = self.rexpr()?;
            self.expect_sym(")")?;
            return Ok(e);
        }
        for (kw, f) in [("sqrt", RealExpr::sqrt as fn(RealExpr) -> _), ("ln", RealExpr::ln)] {
            if self.is_kw(kw) && self.peek_at(1) == &Tok::Sym("(") {
                self.bump();
                self.bump();
                let e = self.rexpr()?;
                self.expect_sym(")")?;
                return f(e).map_err(|err| real_error(span, err));
            }
        }
        self.error(&["real expression"])
    }

    // ---- expressions ----

    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        let span = self.span();
        if self.eat_kw("fn") {
            let mut params = Vec::new();
            loop {
                params.push(self.param()?);
                if !self.is_sym("(") {
                    break;
                }
            }
            self.expect_sym("=>")?;
            let names: Vec<&str> = params.iter().map(|(n, _, _)| n.as_str()).collect();
            let body = self.with_bound(&names, |p| p.expr())?;
            let lam = params.into_iter().rev().fold(body, |body, (param, param_ty, sp)| {
                Expr::new(ExprKind::Lam { self_name: None, param, param_ty, ret_ty: None, body: body.boxed() }, sp)
            });
            return Ok(Expr::new(lam.kind, span));
        }
        if self.eat_kw("fun") {
            let z = self.name()?;
            let (param, param_ty, _) = self.param()?;
            self.expect_sym(":")?;
            let ret = self.ty()?;
            self.expect_sym("=>")?;
            let body = self.with_bound(&[&z, &param], |p| p.expr())?;
            return Ok(Expr::new(
                ExprKind::Lam { self_name: Some(z), param, param_ty, ret_ty: Some(ret), body: body.boxed() },
                span,
            ));
        }
        if self.eat_kw("let") {
            let x = self.name()?;
            self.expect_sym("=")?;
            let e1 = self.expr()?;
            self.expect_kw("in")?;
            let e2 = self.with_bound(&[&x], |p| p.expr())?;
            return Ok(Expr::new(ExprKind::Let(x, e1.boxed(), e2.boxed()), span));
        }
        if matches!(self.peek(), Tok::Ident(s) if !is_keyword(s)) && self.peek_at(1) == &Tok::Sym("<-") {
            let x = self.name()?;
            self.bump();
            let e1 = self.expr()?;
            self.expect_sym(";")?;
            let e2 = self.with_bound(&[&x], |p| p.expr())?;
            return Ok(Expr::new(ExprKind::Bind(x, e1.boxed(), e2.boxed()), span));
        }
        self.cons()
    }

    fn param(&mut self) -> PResult<(String, TypeAst, Span)> {
        let span = self.span();
        self.expect_sym("(")?;
        let x = self.name()?;
        self.expect_sym(":")?;
        let t = self.ty()?;
        self.expect_sym(")")?;
        Ok((x, t, span))
    }

    fn cons(&mut self) -> PResult<Expr> {
        let span = self.span();
        let h = self.add()?;
        if self.eat_sym("::") {
            let t = self.cons()?;
            return Ok(Expr::new(ExprKind::Cons(h.boxed(), t.boxed()), span));
        }
        Ok(h)
    }

    fn add(&mut self) -> PResult<Expr> {
        let span = self.span();
        let mut e = self.mul()?;
        while self.eat_sym("<+>") {
            let r = self.mul()?;
            e = Expr::new(ExprKind::BinOp(BinOp::Add, e.boxed(), r.boxed()), span);
        }
        Ok(e)
    }

    fn mul(&mut self) -> PResult<Expr> {
        let span = self.span();
        let mut e = self.app()?;
        loop {
            let op = if self.eat_sym("<*>") {
                BinOp::Mul
            } else if self.eat_kw("ltimes") {
                BinOp::LTimes
            } else {
                return Ok(e);
            };
            let r = self.app()?;
            e = Expr::new(ExprKind::BinOp(op, e.boxed(), r.boxed()), span);
        }
    }

    fn app(&mut self) -> PResult<Expr> {
        let span = self.span();
        let mut e = self.atom()?;
        while self.is_sym("(") {
            for a in self.args()? {
                e = Expr::new(ExprKind::App(e.boxed(), a.boxed()), span);
            }
        }
        Ok(e)
    }

    /// `(e, ...)` with at least one argument.
    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect_sym("(")?;
        let mut out = vec![self.expr()?];
        while self.eat_sym(",") {
            out.push(self.expr()?);
        }
        self.expect_sym(")")?;
        Ok(out)
    }

    /// `(e, ...)` possibly empty.
    fn args0(&mut self) -> PResult<Vec<Expr>> {
        if self.is_sym("(") && self.peek_at(1) == &Tok::Sym(")") {
            self.bump();
            self.bump();
            return Ok(Vec::new());
        }
        self.args()
    }

    fn one_arg(&mut self) -> PResult<Box<Expr>> {
        self.expect_sym("(")?;
        let e = self.expr()?;
        self.expect_sym(")")?;
        Ok(e.boxed())
    }

    fn two_args(&mut self) -> PResult<(Box<Expr>, Box<Expr>)> {
        self.expect_sym("(")?;
        let a = self.expr()?;
        self.expect_sym(",")?;
        let b = self.expr()?;
        self.expect_sym(")")?;
        Ok((a.boxed(), b.boxed()))
    }

    fn braced(&mut self) -> PResult<Box<Expr>> {
        self.expect_sym("{")?;
        let e = self.expr()?;
        self.expect_sym("}")?;
        Ok(e.boxed())
    }

    /// A static argument: a bare number is a singleton literal.
    fn static_arg(&mut self) -> PResult<Expr> {
        let span = self.span();
        let bare = match self.peek() {
            Tok::Number(_) => true,
            Tok::Sym("-") => matches!(self.peek_at(1), Tok::Number(_)),
            _ => false,
        };
        if bare {
            let r = self.rational()?;
            if !self.is_sym(",") && !self.is_sym("]") {
                return self.error(&["`,`", "`]`"]);
            }
            return Ok(Expr::new(ExprKind::Sing(r), span));
        }
        self.expr()
    }

    fn statics(&mut self) -> PResult<Vec<Expr>> {
        self.expect_sym("[")?;
        let mut out = vec![self.static_arg()?];
        while self.eat_sym(",") {
            out.push(self.static_arg()?);
        }
        self.expect_sym("]")?;
        Ok(out)
    }

    /// `case`/`scase` alternatives: `{nil => e}{h :: t => e}`.
    fn alternatives(&mut self, nil_kw: &str) -> PResult<(Box<Expr>, String, String, Box<Expr>)> {
        self.expect_sym("{")?;
        self.expect_kw(nil_kw)?;
        self.expect_sym("=>")?;
        let nil = self.expr()?;
        self.expect_sym("}")?;
        self.expect_sym("{")?;
        let h = self.name()?;
        self.expect_sym("::")?;
        let tspan = self.span();
        let t = self.name()?;
        if t == h {
            return Err(ParseError { span: tspan, expected: vec!["a name distinct from the head binder".into()], found: format!("`{t}`") });
        }
        self.expect_sym("=>")?;
        let cons = self.with_bound(&[&h, &t], |p| p.expr())?;
        self.expect_sym("}")?;
        Ok((nil.boxed(), h, t, cons.boxed()))
    }

    fn atom(&mut self) -> PResult<Expr> {
        let span = self.span();
        let mk = |k| Ok(Expr::new(k, span));
        match self.peek().clone() {
            Tok::Number(_) => {
                let r = self.rational()?;
                mk(ExprKind::Real(r))
            }
            Tok::Sym("-") if matches!(self.peek_at(1), Tok::Number(_)) => {
                let r = self.rational()?;
                mk(ExprKind::Real(r))
            }
            Tok::Sym("(") => {
                self.bump();
                let a = self.expr()?;
                if self.eat_sym(",") {
                    let b = self.expr()?;
                    self.expect_sym(")")?;
                    return mk(ExprKind::Pair(a.boxed(), b.boxed()));
                }
                self.expect_sym(")")?;
                // keep the inner span so that reparsing is position independent
                Ok(a)
            }
            Tok::Ident(word) => {
                if !is_keyword(&word) {
                    self.bump();
                    if self.is_sym("[") {
                        let statics = self.statics()?;
                        let args = self.args0()?;
                        return mk(ExprKind::Prim { name: word, statics, args });
                    }
                    if self.is_sym("(") && !self.in_scope(&word) {
                        let args = self.args0()?;
                        return mk(ExprKind::Prim { name: word, statics: Vec::new(), args });
                    }
                    return mk(ExprKind::Var(word));
                }
                self.keyword_form(&word, span)
            }
            _ => self.error(&["expression"]),
        }
    }

    fn keyword_form(&mut self, word: &str, span: Span) -> PResult<Expr> {
        let mk = |k| Ok(Expr::new(k, span));
        match word {
            "true" | "false" => {
                self.bump();
                mk(ExprKind::Bool(word == "true"))
            }
            "sing" => {
                self.bump();
                self.expect_sym("(")?;
                let r = self.rational()?;
                self.expect_sym(")")?;
                mk(ExprKind::Sing(r))
            }
            "if" => {
                self.bump();
                let c = self.one_arg()?;
                let a = self.braced()?;
                let b = self.braced()?;
                mk(ExprKind::If(c, a, b))
            }
            "fst" | "snd" => {
                self.bump();
                let e = self.one_arg()?;
                mk(ExprKind::Proj(if word == "fst" { 1 } else { 2 }, e))
            }
            "sfst" | "ssnd" => {
                self.bump();
                let e = self.one_arg()?;
                mk(ExprKind::SProj(if word == "sfst" { 1 } else { 2 }, e))
            }
            "spair" => {
                self.bump();
                self.expect_sym("[")?;
                let w = self.cmetric()?;
                self.expect_sym("]")?;
                let (a, b) = self.two_args()?;
                mk(ExprKind::SPair(w, a, b))
            }
            "nil" => {
                self.bump();
                self.expect_sym("[")?;
                let t = self.ty()?;
                self.expect_sym("]")?;
                mk(ExprKind::Nil(t))
            }
            "snil" => {
                self.bump();
                self.expect_sym("[")?;
                let w = self.cmetric()?;
                self.expect_sym(",")?;
                let s = self.stype()?;
                self.expect_sym("]")?;
                mk(ExprKind::SNil(w, s))
            }
            "scons" => {
                self.bump();
                let (a, b) = self.two_args()?;
                mk(ExprKind::SCons(a, b))
            }
            "case" | "scase" => {
                self.bump();
                let scrut = self.one_arg()?;
                let (nil, head, tail, cons) = self.alternatives(if word == "case" { "nil" } else { "snil" })?;
                if word == "case" {
                    mk(ExprKind::Case { scrut, nil, head, tail, cons })
                } else {
                    mk(ExprKind::SCase { scrut, nil, head, tail, cons })
                }
            }
            "reveal" | "return" => {
                self.bump();
                let e = self.one_arg()?;
                mk(if word == "reveal" { ExprKind::Reveal(e) } else { ExprKind::Return(e) })
            }
            "laplace" => {
                self.bump();
                self.expect_sym("[")?;
                let s = self.static_arg()?;
                self.expect_sym(",")?;
                let eps = self.static_arg()?;
                self.expect_sym("]")?;
                let e = self.one_arg()?;
                mk(ExprKind::Laplace(s.boxed(), eps.boxed(), e))
            }
            _ => self.error(&["expression"]),
        }
    }
}

fn real_error(span: Span, err: crate::real::RealError) -> ParseError {
    ParseError { span, expected: vec!["well-formed real expression".into()], found: err.to_string() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var(x: &str) -> Expr {
        Expr::synth(ExprKind::Var(x.into()))
    }

    fn int(n: i64) -> Rational {
        Rational::from_integer(n.into())
    }

    #[test]
    fn binop_body() {
        let e = parse_expr("x <+> x", &["x"]).unwrap();
        assert_eq!(e.kind, ExprKind::BinOp(BinOp::Add, var("x").boxed(), var("x").boxed()));
    }

    #[test]
    fn laplace_form() {
        let e = parse_expr("laplace[sing(2), sing(1)](e)", &["e"]).unwrap();
        let sing = |n| Expr::synth(ExprKind::Sing(int(n))).boxed();
        assert_eq!(e.kind, ExprKind::Laplace(sing(2), sing(1), var("e").boxed()));
        let bare = parse_expr("laplace[2, 1](e)", &["e"]).unwrap();
        assert_eq!(bare, e);
    }

    #[test]
    fn if_requires_both_branches() {
        let err = parse_expr("if(x){y}", &["x", "y"]).unwrap_err();
        assert_eq!((err.span.line, err.span.col), (1, 9));
        assert!(err.expected.contains(&"`{`".to_string()));
    }

    #[test]
    fn unbound_call_is_primitive() {
        let e = parse_expr("clip(db)", &["db"]).unwrap();
        assert!(matches!(e.kind, ExprKind::Prim { ref name, .. } if name == "clip"));
        let e = parse_expr("f(a, b)", &["f", "a", "b"]).unwrap();
        let expected = ExprKind::App(
            Expr::synth(ExprKind::App(var("f").boxed(), var("a").boxed())).boxed(),
            var("b").boxed(),
        );
        assert_eq!(e.kind, expected);
    }

    #[test]
    fn precedence() {
        let e = parse_expr("a <+> b <*> c :: d", &["a", "b", "c", "d"]).unwrap();
        let ExprKind::Cons(h, _) = e.kind else { panic!() };
        let ExprKind::BinOp(BinOp::Add, _, r) = h.kind else { panic!() };
        assert!(matches!(r.kind, ExprKind::BinOp(BinOp::Mul, _, _)));
    }

    #[test]
    fn literals_are_exact() {
        let e = parse_expr("0.1", &[]).unwrap();
        assert_eq!(e.kind, ExprKind::Real(Rational::new(1.into(), 10.into())));
        let e = parse_expr("-1/3", &[]).unwrap();
        assert_eq!(e.kind, ExprKind::Real(Rational::new((-1).into(), 3.into())));
    }

    #[test]
    fn types() {
        let t = parse_type("sreal diff s -> sreal diff (s + s)").unwrap();
        let s = || EnvExpr::Var("s".into());
        assert_eq!(
            t,
            Type::fun(
                Type::Sensitive(SType::SReal(NMetric::Diff), s()),
                Type::Sensitive(SType::SReal(NMetric::Diff), EnvExpr::Plus(Box::new(s()), Box::new(s())))
            )
        );
        let t = parse_type("EDPM [o:(2*(1/10)*sqrt(200*ln(100000)), 11/100000)] real").unwrap();
        let Type::Pm(p, _) = t else { panic!() };
        let PrivNode::Lit(entries) = p.node else { panic!() };
        let CostLit::Ed(e, _) = &entries[0].1 else { panic!() };
        assert!((e.eval().unwrap() - 9.597051824376162).abs() < 1e-9);
    }

    #[test]
    fn program_scoping() {
        let src = "source db : slist L1 (sreal disc);\n\
                   def dbl : forall s. sreal diff s -> sreal diff (s + s) = fn (x : sreal diff s) => x <+> x;\n\
                   main = dbl(sum(clip(db)));";
        let p = parse_program(src).unwrap();
        assert_eq!(p.defs[0].quantifiers, vec!["s".to_string()]);
        let ExprKind::App(f, arg) = &p.main.kind else { panic!("{:?}", p.main.kind) };
        assert_eq!(f.kind, ExprKind::Var("dbl".into()));
        assert!(matches!(arg.kind, ExprKind::Prim { ref name, .. } if name == "sum"));
    }

    #[test]
    fn error_positions() {
        let err = parse_program("source db : slist L1 sreal;\nmain = db;").unwrap_err();
        assert_eq!((err.span.line, err.span.col), (1, 22));
        let err = parse_program("main = fn x => x;").unwrap_err();
        assert_eq!((err.span.line, err.span.col), (1, 11));
    }
}
