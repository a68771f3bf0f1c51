//! Recursive-descent parser for the policy language.
//!
//! ```text
//! program  := { NEWLINE | stmt }
//! stmt     := comment | if | funcdef | assign | expr
//! assign   := IDENT '=' expr
//! if       := 'if' expr ':' stmt* [ 'else' ':' stmt* ] 'end'
//! funcdef  := 'def' IDENT '(' [ IDENT { ',' IDENT } ] ')' ':' stmt* 'end'
//! comment  := '#' { any } EOL
//! expr     := sum [ ('<' | '<=' | '>' | '>=' | '==' | '!=') sum ]*
//! sum      := product { ('+' | '-') product }
//! product  := unary { ('*' | '/') unary }
//! unary    := '-' unary | postfix
//! postfix  := primary { '.' ('x' | 'y' | 'z') }
//! primary  := NUMBER | STRING | 'true' | 'false' | IDENT [ '(' args ')' ] | '(' expr ')'
//! ```

use super::ast::{BinOp, Expr, ExprKind, Field, FuncDef, Literal, Program, Stmt, StmtKind};
use super::diagnostic::{Diagnostic, DiagnosticCode, Phase, Pos};
use super::lexer::{tokenize, Token, TokenKind};

pub fn parse(source: &str) -> Result<Program, Diagnostic> {
    let tokens = tokenize(source)?;
    let mut parser = Parser { tokens, idx: 0 };
    parser.program()
}

struct Parser {
    tokens: Vec<Token>,
    idx: usize,
}

#[derive(Clone, Copy, PartialEq)]
enum Context {
    TopLevel,
    Branch,
    Function,
}

fn syntax(pos: Pos, message: impl Into<String>) -> Diagnostic {
    Diagnostic::new(Phase::Parse, pos, DiagnosticCode::Syntax, message)
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.idx]
    }

    fn peek_kind(&self) -> &TokenKind {
        &self.tokens[self.idx].kind
    }

    fn peek_second(&self) -> &TokenKind {
        let i = (self.idx + 1).min(self.tokens.len() - 1);
        &self.tokens[i].kind
    }

    fn bump(&mut self) -> Token {
        let tok = self.tokens[self.idx].clone();
        if self.idx < self.tokens.len() - 1 {
            self.idx += 1;
        }
        tok
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek_kind() == kind {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> Result<Token, Diagnostic> {
        if self.peek_kind() == &kind {
            Ok(self.bump())
        } else {
            let tok = self.peek();
            Err(syntax(tok.pos, format!("expected {what}, found {}", tok.kind.describe())))
        }
    }

    fn program(&mut self) -> Result<Program, Diagnostic> {
        let mut statements = Vec::new();
        loop {
            match self.peek_kind() {
                TokenKind::Eof => break,
                TokenKind::Newline => {
                    self.bump();
                }
                TokenKind::Else | TokenKind::End => {
                    let tok = self.peek();
                    return Err(syntax(
                        tok.pos,
                        format!("{} without a matching 'if' or 'def'", tok.kind.describe()),
                    ));
                }
                _ => statements.push(self.stmt(Context::TopLevel)?),
            }
        }
        Ok(Program { statements })
    }

    /// Statements up to (not including) one of `stops`.
    fn block(&mut self, ctx: Context, stops: &[TokenKind], opener: &str, opened_at: Pos) -> Result<Vec<Stmt>, Diagnostic> {
        let mut out = Vec::new();
        loop {
            let kind = self.peek_kind();
            if stops.contains(kind) {
                return Ok(out);
            }
            match kind {
                TokenKind::Newline => {
                    self.bump();
                }
                TokenKind::Eof => {
                    return Err(syntax(
                        self.peek().pos,
                        format!("missing 'end' for '{opener}' opened at line {}", opened_at.line),
                    ));
                }
                TokenKind::Else => {
                    return Err(syntax(self.peek().pos, "'else' is only allowed inside an 'if' block"));
                }
                _ => out.push(self.stmt(ctx)?),
            }
        }
    }

    fn end_of_stmt(&mut self) -> Result<(), Diagnostic> {
        match self.peek_kind() {
            TokenKind::Newline => {
                self.bump();
                Ok(())
            }
            TokenKind::Eof | TokenKind::Comment(_) | TokenKind::End | TokenKind::Else => Ok(()),
            other => Err(syntax(
                self.peek().pos,
                format!("expected end of line after statement, found {}", other.describe()),
            )),
        }
    }

    fn stmt(&mut self, ctx: Context) -> Result<Stmt, Diagnostic> {
        let pos = self.peek().pos;
        match self.peek_kind().clone() {
            TokenKind::Comment(text) => {
                self.bump();
                Ok(Stmt::new(StmtKind::Comment(text), pos))
            }
            TokenKind::If => self.if_stmt(ctx),
            TokenKind::Def => {
                match ctx {
                    Context::Function => return Err(syntax(pos, "function definitions cannot be nested")),
                    Context::Branch => return Err(syntax(pos, "function definitions must be at the top level")),
                    Context::TopLevel => {}
                }
                self.funcdef()
            }
            TokenKind::Ident(name) if self.peek_second() == &TokenKind::Assign => {
                self.bump();
                self.bump();
                let value = self.expr()?;
                self.end_of_stmt()?;
                Ok(Stmt::new(StmtKind::Assign { name, value }, pos))
            }
            _ => {
                let expr = self.expr()?;
                if self.peek_kind() == &TokenKind::Assign {
                    return Err(syntax(
                        self.peek().pos,
                        "only plain variable names can be assigned to",
                    ));
                }
                self.end_of_stmt()?;
                Ok(Stmt::new(StmtKind::Expr(expr), pos))
            }
        }
    }

    fn if_stmt(&mut self, ctx: Context) -> Result<Stmt, Diagnostic> {
        let pos = self.bump().pos;
        let ctx = if ctx == Context::TopLevel { Context::Branch } else { ctx };
        let cond = self.expr()?;
        self.expect(TokenKind::Colon, "':' after 'if' condition")?;
        let then_block = self.block(ctx, &[TokenKind::Else, TokenKind::End], "if", pos)?;
        let else_block = if self.eat(&TokenKind::Else) {
            self.expect(TokenKind::Colon, "':' after 'else'")?;
            Some(self.block(ctx, &[TokenKind::End], "if", pos)?)
        } else {
            None
        };
        self.expect(TokenKind::End, "'end'")?;
        self.end_of_stmt()?;
        Ok(Stmt::new(
            StmtKind::If {
                cond,
                then_block,
                else_block,
            },
            pos,
        ))
    }

    fn funcdef(&mut self) -> Result<Stmt, Diagnostic> {
        let pos = self.bump().pos;
        let name = match self.bump() {
            Token {
                kind: TokenKind::Ident(n),
                ..
            } => n,
            tok => {
                return Err(syntax(
                    tok.pos,
                    format!("expected function name after 'def', found {}", tok.kind.describe()),
                ))
            }
        };
        self.expect(TokenKind::LParen, &format!("'(' after function name '{name}'"))?;
        let mut params = Vec::new();
        if !self.eat(&TokenKind::RParen) {
            loop {
                match self.bump() {
                    Token {
                        kind: TokenKind::Ident(p),
                        pos: ppos,
                    } => {
                        if params.contains(&p) {
                            return Err(syntax(ppos, format!("duplicate parameter '{p}' in '{name}'")));
                        }
                        params.push(p);
                    }
                    tok => {
                        return Err(syntax(
                            tok.pos,
                            format!("expected parameter name, found {}", tok.kind.describe()),
                        ))
                    }
                }
                if self.eat(&TokenKind::RParen) {
                    break;
                }
                self.expect(TokenKind::Comma, &format!("',' or ')' in parameter list of '{name}'"))?;
            }
        }
        self.expect(TokenKind::Colon, "':' after function signature")?;
        let body = self.block(Context::Function, &[TokenKind::End], "def", pos)?;
        self.expect(TokenKind::End, "'end'")?;
        self.end_of_stmt()?;
        Ok(Stmt::new(StmtKind::FuncDef(FuncDef { name, params, body }), pos))
    }

    fn expr(&mut self) -> Result<Expr, Diagnostic> {
        let mut lhs = self.sum()?;
        loop {
            let op = match self.peek_kind() {
                TokenKind::Lt => BinOp::Lt,
                TokenKind::Le => BinOp::Le,
                TokenKind::Gt => BinOp::Gt,
                TokenKind::Ge => BinOp::Ge,
                TokenKind::EqEq => BinOp::Eq,
                TokenKind::Ne => BinOp::Ne,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.sum()?;
            lhs = binary(op, lhs, rhs);
        }
    }

    fn sum(&mut self) -> Result<Expr, Diagnostic> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek_kind() {
                TokenKind::Plus => BinOp::Add,
                TokenKind::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.product()?;
            lhs = binary(op, lhs, rhs);
        }
    }

    fn product(&mut self) -> Result<Expr, Diagnostic> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek_kind() {
                TokenKind::Star => BinOp::Mul,
                TokenKind::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, Diagnostic> {
        if self.peek_kind() == &TokenKind::Minus {
            let pos = self.bump().pos;
            if let TokenKind::Number(n) = *self.peek_kind() {
                self.bump();
                return self.postfix(Expr::new(ExprKind::Literal(Literal::Number(-n)), pos));
            }
            let operand = self.unary()?;
            let zero = Expr::new(ExprKind::Literal(Literal::Number(0.0)), pos);
            return Ok(Expr::new(
                ExprKind::Binary {
                    op: BinOp::Sub,
                    lhs: Box::new(zero),
                    rhs: Box::new(operand),
                },
                pos,
            ));
        }
        let primary = self.primary()?;
        self.postfix(primary)
    }

    fn postfix(&mut self, mut expr: Expr) -> Result<Expr, Diagnostic> {
        while self.peek_kind() == &TokenKind::Dot {
            let dot = self.bump();
            let tok = self.bump();
            let TokenKind::Ident(name) = &tok.kind else {
                return Err(syntax(
                    tok.pos,
                    format!("expected attribute name after '.', found {}", tok.kind.describe()),
                ));
            };
            let Some(field) = Field::parse(name) else {
                let hint = if self.peek_kind() == &TokenKind::LParen {
                    format!("; call APIs directly, e.g. {name}(...)")
                } else {
                    String::new()
                };
                return Err(syntax(
                    tok.pos,
                    format!("unsupported attribute '.{name}'; only .x, .y and .z are available{hint}"),
                ));
            };
            let pos = expr.pos;
            let _ = dot;
            expr = Expr::new(
                ExprKind::Attr {
                    target: Box::new(expr),
                    field,
                },
                pos,
            );
        }
        Ok(expr)
    }

    fn primary(&mut self) -> Result<Expr, Diagnostic> {
        let tok = self.bump();
        let pos = tok.pos;
        let kind = match tok.kind {
            TokenKind::Number(n) => ExprKind::Literal(Literal::Number(n)),
            TokenKind::Str(s) => ExprKind::Literal(Literal::Str(s)),
            TokenKind::True => ExprKind::Literal(Literal::Bool(true)),
            TokenKind::False => ExprKind::Literal(Literal::Bool(false)),
            TokenKind::Ident(name) => {
                if self.eat(&TokenKind::LParen) {
                    let args = self.call_args(&name)?;
                    ExprKind::Call { name, args }
                } else {
                    ExprKind::Var(name)
                }
            }
            TokenKind::LParen => {
                let inner = self.expr()?;
                self.expect(TokenKind::RParen, "')' to close parenthesized expression")?;
                if self.peek_kind() == &TokenKind::LParen {
                    return Err(syntax(self.peek().pos, "only named APIs can be called"));
                }
                return Ok(inner);
            }
            other => {
                return Err(syntax(pos, format!("expected an expression, found {}", other.describe())));
            }
        };
        Ok(Expr::new(kind, pos))
    }

    fn call_args(&mut self, name: &str) -> Result<Vec<Expr>, Diagnostic> {
        let mut args = Vec::new();
        if self.eat(&TokenKind::RParen) {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if self.eat(&TokenKind::RParen) {
                return Ok(args);
            }
            if !self.eat(&TokenKind::Comma) {
                let tok = self.peek();
                return Err(syntax(
                    tok.pos,
                    format!("expected ')' to close call to '{name}', found {}", tok.kind.describe()),
                ));
            }
        }
    }
}

fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
    let pos = lhs.pos;
    Expr::new(
        ExprKind::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        },
        pos,
    )
}
