//! Static checker: the "compiler" pass whose diagnostics are fed back to the
//! code generator before anything runs.

use std::collections::HashMap;

use super::ast::{BinOp, Expr, ExprKind, FuncDef, Literal, Program, Stmt, StmtKind};
use super::diagnostic::{Diagnostic, DiagnosticCode, Phase, Pos};
use super::registry::{ApiRegistry, CoreApi, ParamKind, CORE_API_NAMES};
use crate::world::WorldState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ty {
    Num,
    Str,
    Bool,
    Pose,
    Unit,
    Any,
}

impl Ty {
    fn name(self) -> &'static str {
        match self {
            Ty::Num => "number",
            Ty::Str => "string",
            Ty::Bool => "boolean",
            Ty::Pose => "pose",
            Ty::Unit => "nothing",
            Ty::Any => "value",
        }
    }

    fn join(self, other: Ty) -> Ty {
        if self == other {
            self
        } else {
            Ty::Any
        }
    }
}

type Scope = HashMap<String, Ty>;

struct Checker<'a> {
    registry: &'a ApiRegistry,
    world: Option<&'a WorldState>,
    /// Program-local functions defined so far, with their arity.
    locals: HashMap<String, usize>,
    /// Function whose body is being checked; it may not call itself.
    current_fn: Option<String>,
    diags: Vec<Diagnostic>,
}

fn diag(pos: Pos, code: DiagnosticCode, message: impl Into<String>) -> Diagnostic {
    Diagnostic::new(Phase::Check, pos, code, message)
}

/// Checks a parsed program against the API registry and, for object-name
/// string literals, against `world`. Returns every problem found, in source
/// order; an empty list means the program may be executed.
pub fn static_check(program: &Program, registry: &ApiRegistry, world: &WorldState) -> Vec<Diagnostic> {
    let mut checker = Checker {
        registry,
        world: Some(world),
        locals: HashMap::new(),
        current_fn: None,
        diags: Vec::new(),
    };
    let mut scope = Scope::new();
    checker.block(&program.statements, &mut scope);
    checker.diags
}

/// Same rules as [`static_check`] but without a world: object literals are
/// not validated.
pub fn check_without_world(program: &Program, registry: &ApiRegistry) -> Vec<Diagnostic> {
    let mut checker = Checker {
        registry,
        world: None,
        locals: HashMap::new(),
        current_fn: None,
        diags: Vec::new(),
    };
    let mut scope = Scope::new();
    checker.block(&program.statements, &mut scope);
    checker.diags
}

/// Body rules for a learned API: only core and already-learned APIs may be
/// called.
pub(crate) fn check_learned_body(def: &FuncDef, registry: &ApiRegistry) -> Vec<Diagnostic> {
    let mut checker = Checker {
        registry,
        world: None,
        locals: HashMap::new(),
        current_fn: Some(def.name.clone()),
        diags: Vec::new(),
    };
    let mut scope: Scope = def.params.iter().map(|p| (p.clone(), Ty::Any)).collect();
    checker.block(&def.body, &mut scope);
    checker.diags
}

impl Checker<'_> {
    fn block(&mut self, stmts: &[Stmt], scope: &mut Scope) {
        for stmt in stmts {
            self.stmt(stmt, scope);
        }
    }

    fn stmt(&mut self, stmt: &Stmt, scope: &mut Scope) {
        match &stmt.kind {
            StmtKind::Comment(_) => {}
            StmtKind::Assign { name, value } => {
                let ty = self.expr(value, scope);
                if ty == Ty::Unit {
                    self.diags.push(diag(
                        value.pos,
                        DiagnosticCode::Type,
                        format!("cannot assign to '{name}': the expression returns no value"),
                    ));
                }
                scope.insert(name.clone(), if ty == Ty::Unit { Ty::Any } else { ty });
            }
            StmtKind::Expr(e) => {
                self.expr(e, scope);
            }
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                let ty = self.expr(cond, scope);
                if !matches!(ty, Ty::Bool | Ty::Any) {
                    self.diags.push(diag(
                        cond.pos,
                        DiagnosticCode::Type,
                        format!("'if' condition must be a boolean comparison, found {}", ty.name()),
                    ));
                }
                let mut then_scope = scope.clone();
                self.block(then_block, &mut then_scope);
                let mut else_scope = scope.clone();
                if let Some(else_block) = else_block {
                    self.block(else_block, &mut else_scope);
                }
                *scope = then_scope
                    .iter()
                    .filter_map(|(name, ty)| else_scope.get(name).map(|other| (name.clone(), ty.join(*other))))
                    .collect();
            }
            StmtKind::FuncDef(def) => self.funcdef(def, stmt.pos),
        }
    }

    fn funcdef(&mut self, def: &FuncDef, pos: Pos) {
        if CoreApi::from_name(&def.name).is_some() {
            self.diags.push(diag(
                pos,
                DiagnosticCode::UnknownApi,
                format!("'{}' is a core API and cannot be redefined", def.name),
            ));
            return;
        }
        if self.registry.get_learned(&def.name).is_some() || self.locals.contains_key(&def.name) {
            self.diags.push(diag(
                pos,
                DiagnosticCode::UnknownApi,
                format!("function '{}' is already defined", def.name),
            ));
            return;
        }
        let outer = self.current_fn.replace(def.name.clone());
        let mut scope: Scope = def.params.iter().map(|p| (p.clone(), Ty::Any)).collect();
        self.block(&def.body, &mut scope);
        self.current_fn = outer;
        self.locals.insert(def.name.clone(), def.params.len());
    }

    fn expr(&mut self, e: &Expr, scope: &Scope) -> Ty {
        match &e.kind {
            ExprKind::Literal(Literal::Number(_)) => Ty::Num,
            ExprKind::Literal(Literal::Str(_)) => Ty::Str,
            ExprKind::Literal(Literal::Bool(_)) => Ty::Bool,
            ExprKind::Var(name) => match scope.get(name) {
                Some(ty) => *ty,
                None => {
                    self.diags.push(diag(
                        e.pos,
                        DiagnosticCode::Type,
                        format!("variable '{name}' is not defined (or not assigned on every path)"),
                    ));
                    Ty::Any
                }
            },
            ExprKind::Attr { target, field } => {
                let ty = self.expr(target, scope);
                match ty {
                    Ty::Pose | Ty::Any => Ty::Num,
                    other => {
                        self.diags.push(diag(
                            e.pos,
                            DiagnosticCode::Type,
                            format!(
                                "'.{}' needs a pose from get_obj_pose, found {}",
                                field.as_str(),
                                other.name()
                            ),
                        ));
                        Ty::Any
                    }
                }
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let l = self.expr(lhs, scope);
                let r = self.expr(rhs, scope);
                self.binary(*op, l, r, e.pos)
            }
            ExprKind::Call { name, args } => self.call(name, args, e.pos, scope),
        }
    }

    fn binary(&mut self, op: BinOp, l: Ty, r: Ty, pos: Pos) -> Ty {
        let mismatch = |this: &mut Self| {
            this.diags.push(diag(
                pos,
                DiagnosticCode::Type,
                format!("operator '{}' cannot combine {} and {}", op.symbol(), l.name(), r.name()),
            ));
        };
        let operand_ok = |t: Ty, allowed: &[Ty]| t == Ty::Any || allowed.contains(&t);
        match op {
            BinOp::Add => match (l, r) {
                (Ty::Num, Ty::Num) => Ty::Num,
                (Ty::Str, Ty::Str) => Ty::Str,
                (a, b) if operand_ok(a, &[Ty::Num, Ty::Str]) && operand_ok(b, &[Ty::Num, Ty::Str]) => {
                    if a == Ty::Any { b.join(Ty::Any) } else { a.join(b) }
                }
                _ => {
                    mismatch(self);
                    Ty::Any
                }
            },
            BinOp::Sub | BinOp::Mul | BinOp::Div => {
                if operand_ok(l, &[Ty::Num]) && operand_ok(r, &[Ty::Num]) {
                    Ty::Num
                } else {
                    mismatch(self);
                    Ty::Num
                }
            }
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                if !(operand_ok(l, &[Ty::Num]) && operand_ok(r, &[Ty::Num])) {
                    mismatch(self);
                }
                Ty::Bool
            }
            BinOp::Eq | BinOp::Ne => {
                let comparable = [Ty::Num, Ty::Str, Ty::Bool];
                let ok = operand_ok(l, &comparable)
                    && operand_ok(r, &comparable)
                    && (l == Ty::Any || r == Ty::Any || l == r);
                if !ok {
                    mismatch(self);
                }
                Ty::Bool
            }
        }
    }

    fn call(&mut self, name: &str, args: &[Expr], pos: Pos, scope: &Scope) -> Ty {
        let arg_tys: Vec<Ty> = args.iter().map(|a| self.expr(a, scope)).collect();
        for (arg, ty) in args.iter().zip(&arg_tys) {
            if *ty == Ty::Unit {
                self.diags.push(diag(
                    arg.pos,
                    DiagnosticCode::Type,
                    "argument returns no value and cannot be passed on",
                ));
            }
        }

        if let Some(api) = CoreApi::from_name(name) {
            let params = api.params();
            if args.len() != params.len() {
                self.diags.push(diag(
                    pos,
                    DiagnosticCode::Arity,
                    format!(
                        "{name} expects {} argument{} ({}), got {}",
                        params.len(),
                        if params.len() == 1 { "" } else { "s" },
                        params.iter().map(|p| p.0).collect::<Vec<_>>().join(", "),
                        args.len()
                    ),
                ));
                return core_return(api);
            }
            for ((arg, ty), (pname, kind)) in args.iter().zip(&arg_tys).zip(params) {
                let want = match kind {
                    ParamKind::Object => Ty::Str,
                    ParamKind::Number => Ty::Num,
                };
                if !matches!(ty, Ty::Any | Ty::Unit) && *ty != want {
                    self.diags.push(diag(
                        arg.pos,
                        DiagnosticCode::Type,
                        format!("{name} argument '{pname}' must be a {}, found {}", want.name(), ty.name()),
                    ));
                    continue;
                }
                if let (ParamKind::Object, ExprKind::Literal(Literal::Str(obj)), Some(world)) =
                    (kind, &arg.kind, self.world)
                {
                    if !world.objects.contains_key(obj) {
                        let known: Vec<&str> = world.objects.keys().map(String::as_str).collect();
                        self.diags.push(diag(
                            arg.pos,
                            DiagnosticCode::UnknownObject,
                            format!(
                                "object '{obj}' does not exist in the environment; available objects: {}",
                                known.join(", ")
                            ),
                        ));
                    }
                }
            }
            return core_return(api);
        }

        if self.current_fn.as_deref() == Some(name) {
            self.diags.push(diag(
                pos,
                DiagnosticCode::UnknownApi,
                format!("'{name}' cannot call itself; recursion is not supported"),
            ));
            return Ty::Unit;
        }

        let arity = self
            .registry
            .get_learned(name)
            .map(|api| api.def.params.len())
            .or_else(|| self.locals.get(name).copied());
        match arity {
            Some(n) if n != args.len() => {
                self.diags.push(diag(
                    pos,
                    DiagnosticCode::Arity,
                    format!("{name} expects {n} argument{}, got {}", if n == 1 { "" } else { "s" }, args.len()),
                ));
                Ty::Unit
            }
            Some(_) => Ty::Unit,
            None => {
                let mut available: Vec<String> = CORE_API_NAMES.iter().map(|s| s.to_string()).collect();
                available.extend(self.registry.learned().iter().map(|api| api.name.clone()));
                let mut local_names: Vec<&String> = self.locals.keys().collect();
                local_names.sort();
                available.extend(local_names.into_iter().cloned());
                self.diags.push(diag(
                    pos,
                    DiagnosticCode::UnknownApi,
                    format!("unknown API '{name}'; available APIs: {}", available.join(", ")),
                ));
                Ty::Any
            }
        }
    }
}

fn core_return(api: CoreApi) -> Ty {
    match api {
        CoreApi::GetObjPose => Ty::Pose,
        CoreApi::GetObjMass => Ty::Num,
        _ => Ty::Unit,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;
    use crate::world::{spawn_world, ScenarioConfig};

    fn check(src: &str) -> Vec<Diagnostic> {
        let world = spawn_world(ScenarioConfig::Observable, 7);
        let program = parse(src).unwrap();
        static_check(&program, &ApiRegistry::new(), &world)
    }

    fn yellow_world_source() -> String {
        // seed 7 is not guaranteed to contain yellow_block; pick any block
        let world = spawn_world(ScenarioConfig::Observable, 7);
        world.objects.keys().next().unwrap().clone()
    }

    #[test]
    fn flags_unknown_object_literal() {
        let diags = check("pick(\"lemon_block\")");
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, DiagnosticCode::UnknownObject);
        assert!(diags[0].message.contains("lemon_block"));
    }

    #[test]
    fn flags_arity() {
        let diags = check("move(0.1)");
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, DiagnosticCode::Arity);
        assert!(diags[0].message.contains("move expects 3 arguments"), "{}", diags[0].message);
    }

    #[test]
    fn valid_program_is_clean() {
        let obj = yellow_world_source();
        let src = format!(
            "p = get_obj_pose(\"{obj}\")\nm = get_obj_mass(\"{obj}\")\nif m < 0.3:\n    pick(\"{obj}\")\n    move(0, 0, p.z + 0.1)\nend"
        );
        assert!(check(&src).is_empty(), "{:?}", check(&src));
    }

    #[test]
    fn flags_unknown_api_and_types() {
        let diags = check("teleport(1)\nx = 3\ny = x.z\nif x:\nend\npick(4)");
        let codes: Vec<_> = diags.iter().map(|d| d.code).collect();
        assert_eq!(
            codes,
            vec![
                DiagnosticCode::UnknownApi,
                DiagnosticCode::Type,
                DiagnosticCode::Type,
                DiagnosticCode::Type
            ]
        );
    }

    #[test]
    fn definite_assignment_through_branches() {
        assert!(check("if true:\n a = 1\nelse:\n a = 2\nend\nb = a + 1").is_empty());
        let diags = check("if true:\n a = 1\nend\nb = a");
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("'a'"));
    }

    #[test]
    fn unit_values_cannot_flow() {
        let obj = yellow_world_source();
        let diags = check(&format!("x = pick(\"{obj}\")"));
        assert_eq!(diags[0].code, DiagnosticCode::Type);
    }

    #[test]
    fn local_functions() {
        let obj = yellow_world_source();
        let ok = format!("def grab(o):\n pick(o)\nend\ngrab(\"{obj}\")");
        assert!(check(&ok).is_empty());
        let bad = check("grab(\"x\")\ndef grab(o):\n pick(o)\nend");
        assert_eq!(bad[0].code, DiagnosticCode::UnknownApi);
        let arity = check("def grab(o):\n pick(o)\nend\ngrab()");
        assert_eq!(arity[0].code, DiagnosticCode::Arity);
        let scoped = check("g = 1\ndef f():\n h = g\nend");
        assert_eq!(scoped[0].code, DiagnosticCode::Type);
    }

    #[test]
    fn string_concat_and_equality() {
        assert!(check("a = \"blo\" + \"ck\"\nb = a == \"block\"").is_empty());
        assert_eq!(check("a = 1 == \"x\"").len(), 1);
    }
}
