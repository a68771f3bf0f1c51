//! Canonical pretty-printer. `parse(format(p)) == p` for every parsed program.

use std::fmt::Write as _;

use super::ast::{Expr, ExprKind, Literal, Program, Stmt, StmtKind};

const INDENT: &str = "    ";

pub fn format(program: &Program) -> String {
    let mut out = String::new();
    write_block(&mut out, &program.statements, 0);
    out
}

fn write_block(out: &mut String, stmts: &[Stmt], depth: usize) {
    for stmt in stmts {
        write_stmt(out, stmt, depth);
    }
}

fn write_stmt(out: &mut String, stmt: &Stmt, depth: usize) {
    let pad = INDENT.repeat(depth);
    match &stmt.kind {
        StmtKind::Assign { name, value } => {
            let _ = writeln!(out, "{pad}{name} = {}", format_expr(value));
        }
        StmtKind::Expr(e) => {
            let _ = writeln!(out, "{pad}{}", format_expr(e));
        }
        StmtKind::If {
            cond,
            then_block,
            else_block,
        } => {
            let _ = writeln!(out, "{pad}if {}:", format_expr(cond));
            write_block(out, then_block, depth + 1);
            if let Some(else_block) = else_block {
                let _ = writeln!(out, "{pad}else:");
                write_block(out, else_block, depth + 1);
            }
            let _ = writeln!(out, "{pad}end");
        }
        StmtKind::FuncDef(f) => {
            let _ = writeln!(out, "{pad}def {}({}):", f.name, f.params.join(", "));
            write_block(out, &f.body, depth + 1);
            let _ = writeln!(out, "{pad}end");
        }
        StmtKind::Comment(text) => {
            let _ = writeln!(out, "{pad}#{text}");
        }
    }
}

pub fn format_literal(lit: &Literal) -> String {
    match lit {
        Literal::Number(n) => format!("{n}"),
        Literal::Str(s) => format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\"")),
        Literal::Bool(b) => b.to_string(),
    }
}

/// Precedence of the expression as printed; atoms bind tightest.
fn expr_precedence(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Binary { op, .. } => op.precedence(),
        ExprKind::Literal(Literal::Number(n)) if n.is_sign_negative() => 4,
        _ => 5,
    }
}

pub fn format_expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Literal(lit) => format_literal(lit),
        ExprKind::Var(name) => name.clone(),
        ExprKind::Call { name, args } => {
            let args: Vec<String> = args.iter().map(format_expr).collect();
            format!("{name}({})", args.join(", "))
        }
        ExprKind::Attr { target, field } => {
            let inner = format_expr(target);
            let atomic = matches!(target.kind, ExprKind::Var(_) | ExprKind::Call { .. } | ExprKind::Attr { .. });
            if atomic {
                format!("{inner}.{}", field.as_str())
            } else {
                format!("({inner}).{}", field.as_str())
            }
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let prec = op.precedence();
            let left = if expr_precedence(lhs) < prec {
                format!("({})", format_expr(lhs))
            } else {
                format_expr(lhs)
            };
            let right = if expr_precedence(rhs) <= prec {
                format!("({})", format_expr(rhs))
            } else {
                format_expr(rhs)
            };
            format!("{left} {} {right}", op.symbol())
        }
    }
}
