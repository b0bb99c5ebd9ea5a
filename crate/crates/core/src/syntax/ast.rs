use std::fmt;

use crate::accountant::Variant;
use crate::env::Sens;
use crate::real::RealExpr;
use crate::Rational;

/// Source position of a node. Spans never take part in equality, so two
/// ASTs compare equal when their structure does.
#[derive(Debug, Clone, Copy, Default, Eq)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NMetric {
    Diff,
    Disc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CMetric {
    L1,
    L2,
    LInf,
}

impl fmt::Display for NMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NMetric::Diff => "diff",
            NMetric::Disc => "disc",
        })
    }
}

impl fmt::Display for CMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CMetric::L1 => "L1",
            CMetric::L2 => "L2",
            CMetric::LInf => "LInf",
        })
    }
}

/// Element types of sensitive sets: ordinary data with no environments.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PlainType {
    Bool,
    Real,
    Prod(Box<PlainType>, Box<PlainType>),
    List(Box<PlainType>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SType {
    SReal(NMetric),
    SProd(CMetric, Box<SType>, Box<SType>),
    SList(CMetric, Box<SType>),
    SSet(PlainType),
    SMatrix(CMetric, u64, u64, Box<SType>),
    SDict(CMetric, Box<SType>, Box<SType>),
}

/// Types, parameterised by how sensitivity (`S`) and privacy (`P`)
/// environments are represented: written expressions in the AST, concrete
/// environments after checking.
#[derive(Debug, Clone, PartialEq)]
pub enum Type<S, P> {
    Bool,
    Real,
    RealSing(Rational),
    Fun(Box<Type<S, P>>, Box<Type<S, P>>),
    Prod(Box<Type<S, P>>, Box<Type<S, P>>),
    List(Box<Type<S, P>>),
    Pm(P, Box<Type<S, P>>),
    Sensitive(SType, S),
}

impl<S, P> Type<S, P> {
    pub fn fun(a: Self, b: Self) -> Self {
        Type::Fun(Box::new(a), Box::new(b))
    }

    pub fn prod(a: Self, b: Self) -> Self {
        Type::Prod(Box::new(a), Box::new(b))
    }

    pub fn list(a: Self) -> Self {
        Type::List(Box::new(a))
    }

    pub fn pm(p: P, a: Self) -> Self {
        Type::Pm(p, Box::new(a))
    }
}

impl PlainType {
    pub fn to_type<S, P>(&self) -> Type<S, P> {
        match self {
            PlainType::Bool => Type::Bool,
            PlainType::Real => Type::Real,
            PlainType::Prod(a, b) => Type::prod(a.to_type(), b.to_type()),
            PlainType::List(a) => Type::list(a.to_type()),
        }
    }
}

/// A written sensitivity environment.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvExpr {
    Lit(Vec<(String, Sens)>),
    Var(String),
    Plus(Box<EnvExpr>, Box<EnvExpr>),
    Scale(Sens, Box<EnvExpr>),
    Join(Box<EnvExpr>, Box<EnvExpr>),
}

/// A written privacy cost.
#[derive(Debug, Clone, PartialEq)]
pub enum CostLit {
    Inf,
    Eps(Rational),
    Ed(RealExpr, RealExpr),
    Rdp(Rational, RealExpr),
}

/// A written privacy environment of one variant.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivExpr {
    pub variant: Variant,
    pub node: PrivNode,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PrivNode {
    Lit(Vec<(String, CostLit)>),
    Trunc(CostLit, EnvExpr),
    Inf(EnvExpr),
    Plus(Box<PrivNode>, Box<PrivNode>),
    Scale(u64, Box<PrivNode>),
}

pub type TypeAst = Type<EnvExpr, PrivExpr>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Mul,
    LTimes,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "<+>",
            BinOp::Mul => "<*>",
            BinOp::LTimes => "ltimes",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Var(String),
    Bool(bool),
    Real(Rational),
    Sing(Rational),
    BinOp(BinOp, Box<Expr>, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Pair(Box<Expr>, Box<Expr>),
    /// Projection; the index is 1 or 2.
    Proj(u8, Box<Expr>),
    SPair(CMetric, Box<Expr>, Box<Expr>),
    SProj(u8, Box<Expr>),
    Nil(TypeAst),
    Cons(Box<Expr>, Box<Expr>),
    Case { scrut: Box<Expr>, nil: Box<Expr>, head: String, tail: String, cons: Box<Expr> },
    SNil(CMetric, SType),
    SCons(Box<Expr>, Box<Expr>),
    SCase { scrut: Box<Expr>, nil: Box<Expr>, head: String, tail: String, cons: Box<Expr> },
    /// `self_name` is bound to the function itself inside `body`; a named
    /// function must declare its result type.
    Lam { self_name: Option<String>, param: String, param_ty: TypeAst, ret_ty: Option<TypeAst>, body: Box<Expr> },
    App(Box<Expr>, Box<Expr>),
    /// `let x = e1 in e2`, typed and evaluated as `(fn (x : τ) => e2)(e1)`.
    Let(String, Box<Expr>, Box<Expr>),
    Reveal(Box<Expr>),
    Laplace(Box<Expr>, Box<Expr>, Box<Expr>),
    Return(Box<Expr>),
    Bind(String, Box<Expr>, Box<Expr>),
    Prim { name: String, statics: Vec<Expr>, args: Vec<Expr> },
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    /// An expression with a default span, for generated code.
    pub fn synth(kind: ExprKind) -> Self {
        Expr { kind, span: Span::default() }
    }

    pub fn boxed(self) -> Box<Expr> {
        Box::new(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceDecl {
    pub name: String,
    pub ty: SType,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Def {
    pub name: String,
    pub quantifiers: Vec<String>,
    pub sig: TypeAst,
    pub body: Expr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub sources: Vec<SourceDecl>,
    pub defs: Vec<Def>,
    pub main: Expr,
}

impl Program {
    pub fn source(&self, name: &str) -> Option<&SourceDecl> {
        self.sources.iter().find(|s| s.name == name)
    }

    pub fn def(&self, name: &str) -> Option<&Def> {
        self.defs.iter().find(|d| d.name == name)
    }
}

/// Words that cannot be used as variable, source or definition names.
pub const KEYWORDS: &[&str] = &[
    "fn", "fun", "let", "in", "if", "true", "false", "sing", "fst", "snd", "sfst", "ssnd", "spair", "nil",
    "snil", "scons", "case", "scase", "reveal", "return", "laplace", "source", "def", "main", "forall",
    "bool", "real", "list", "sreal", "slist", "sset", "smatrix", "sdict", "diff", "disc", "L1", "L2",
    "LInf", "EpsPM", "EDPM", "RDPPM", "trunc", "inf", "join", "ltimes",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}
