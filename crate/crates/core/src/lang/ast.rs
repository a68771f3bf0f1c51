//! Syntax tree. Equality is structural: source positions are carried for
//! diagnostics but ignored by `==`.

use std::fmt;

use super::diagnostic::Pos;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne => 1,
            BinOp::Add | BinOp::Sub => 2,
            BinOp::Mul | BinOp::Div => 3,
        }
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    X,
    Y,
    Z,
}

impl Field {
    pub fn as_str(self) -> &'static str {
        match self {
            Field::X => "x",
            Field::Y => "y",
            Field::Z => "z",
        }
    }

    pub fn parse(s: &str) -> Option<Field> {
        match s {
            "x" => Some(Field::X),
            "y" => Some(Field::Y),
            "z" => Some(Field::Z),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Number(f64),
    Str(String),
    Bool(bool),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Call { name: String, args: Vec<Expr> },
    Literal(Literal),
    Var(String),
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Attr { target: Box<Expr>, field: Field },
}

#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Expr {
    pub fn new(kind: ExprKind, pos: Pos) -> Self {
        Self { kind, pos }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuncDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Assign { name: String, value: Expr },
    Expr(Expr),
    If { cond: Expr, then_block: Vec<Stmt>, else_block: Option<Vec<Stmt>> },
    FuncDef(FuncDef),
    Comment(String),
}

#[derive(Debug, Clone)]
pub struct Stmt {
    pub kind: StmtKind,
    pub pos: Pos,
}

impl PartialEq for Stmt {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Stmt {
    pub fn new(kind: StmtKind, pos: Pos) -> Self {
        Self { kind, pos }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Program {
    pub statements: Vec<Stmt>,
}

impl Program {
    /// Copy of the program with every comment removed, at all depths.
    pub fn without_comments(&self) -> Program {
        fn strip(stmts: &[Stmt]) -> Vec<Stmt> {
            stmts
                .iter()
                .filter(|s| !matches!(s.kind, StmtKind::Comment(_)))
                .map(|s| {
                    let kind = match &s.kind {
                        StmtKind::If { cond, then_block, else_block } => StmtKind::If {
                            cond: cond.clone(),
                            then_block: strip(then_block),
                            else_block: else_block.as_deref().map(strip),
                        },
                        StmtKind::FuncDef(f) => StmtKind::FuncDef(FuncDef {
                            name: f.name.clone(),
                            params: f.params.clone(),
                            body: strip(&f.body),
                        }),
                        other => other.clone(),
                    };
                    Stmt::new(kind, s.pos)
                })
                .collect()
        }
        Program {
            statements: strip(&self.statements),
        }
    }

    /// Names of every call in the program, in source order (duplicates kept).
    pub fn called_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        for s in &self.statements {
            collect_stmt_calls(s, &mut out);
        }
        out
    }
}

pub(crate) fn collect_stmt_calls(stmt: &Stmt, out: &mut Vec<String>) {
    match &stmt.kind {
        StmtKind::Assign { value, .. } => collect_expr_calls(value, out),
        StmtKind::Expr(e) => collect_expr_calls(e, out),
        StmtKind::If { cond, then_block, else_block } => {
            collect_expr_calls(cond, out);
            for s in then_block.iter().chain(else_block.iter().flatten()) {
                collect_stmt_calls(s, out);
            }
        }
        StmtKind::FuncDef(f) => {
            for s in &f.body {
                collect_stmt_calls(s, out);
            }
        }
        StmtKind::Comment(_) => {}
    }
}

fn collect_expr_calls(expr: &Expr, out: &mut Vec<String>) {
    match &expr.kind {
        ExprKind::Call { name, args } => {
            out.push(name.clone());
            for a in args {
                collect_expr_calls(a, out);
            }
        }
        ExprKind::Binary { lhs, rhs, .. } => {
            collect_expr_calls(lhs, out);
            collect_expr_calls(rhs, out);
        }
        ExprKind::Attr { target, .. } => collect_expr_calls(target, out),
        ExprKind::Literal(_) | ExprKind::Var(_) => {}
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::format::format(self))
    }
}
