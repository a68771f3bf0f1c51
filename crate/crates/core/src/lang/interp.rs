//! Tree-walking interpreter driving a [`WorldState`].

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::ast::{BinOp, Expr, ExprKind, FuncDef, Literal, Program, Stmt, StmtKind};
use super::diagnostic::{Diagnostic, DiagnosticCode, Phase, Pos};
use super::registry::{ApiRegistry, CoreApi};
use crate::world::{Vec3, WorldState};

/// Maximum number of core-API invocations a single program may perform.
pub const STEP_BUDGET: usize = 200;

/// Maximum nesting of user-function calls.
pub const CALL_DEPTH_LIMIT: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Num(f64),
    Str(String),
    Bool(bool),
    Pose(Vec3),
    Unit,
}

impl Value {
    fn type_name(&self) -> &'static str {
        match self {
            Value::Num(_) => "number",
            Value::Str(_) => "string",
            Value::Bool(_) => "boolean",
            Value::Pose(_) => "pose",
            Value::Unit => "nothing",
        }
    }

    fn describe(&self) -> String {
        match self {
            Value::Num(n) => format!("number {n}"),
            Value::Str(s) => format!("string \"{s}\""),
            Value::Bool(b) => format!("boolean {b}"),
            Value::Pose(p) => format!("pose {p}"),
            Value::Unit => "nothing".into(),
        }
    }
}

/// One executed core-API call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub api: String,
    pub args: Vec<Value>,
    pub outcome: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub steps: Vec<TraceStep>,
    pub world_before: String,
    pub world_after: String,
}

/// Execution stopped at a failing step. The world keeps every mutation made
/// before the failure.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{diagnostic}")]
pub struct RuntimeFailure {
    pub diagnostic: Diagnostic,
    pub trace: ExecutionTrace,
}

type Env = HashMap<String, Value>;

struct Interpreter<'a> {
    registry: &'a ApiRegistry,
    world: &'a mut WorldState,
    locals: HashMap<String, FuncDef>,
    steps: Vec<TraceStep>,
    depth: usize,
}

fn runtime(pos: Pos, code: DiagnosticCode, message: impl Into<String>) -> Diagnostic {
    Diagnostic::new(Phase::Runtime, pos, code, message)
}

/// Runs `program` against `world`, mutating it in place.
pub fn interpret(
    program: &Program,
    world: &mut WorldState,
    registry: &ApiRegistry,
) -> Result<ExecutionTrace, RuntimeFailure> {
    let world_before = world.digest();
    let mut interp = Interpreter {
        registry,
        world,
        locals: HashMap::new(),
        steps: Vec::new(),
        depth: 0,
    };
    let mut env = Env::new();
    let outcome = interp.block(&program.statements, &mut env);
    let trace = ExecutionTrace {
        steps: interp.steps,
        world_before,
        world_after: interp.world.digest(),
    };
    match outcome {
        Ok(()) => Ok(trace),
        Err(diagnostic) => Err(RuntimeFailure { diagnostic, trace }),
    }
}

impl Interpreter<'_> {
    fn block(&mut self, stmts: &[Stmt], env: &mut Env) -> Result<(), Diagnostic> {
        for stmt in stmts {
            self.stmt(stmt, env)?;
        }
        Ok(())
    }

    fn stmt(&mut self, stmt: &Stmt, env: &mut Env) -> Result<(), Diagnostic> {
        match &stmt.kind {
            StmtKind::Comment(_) => Ok(()),
            StmtKind::Assign { name, value } => {
                let v = self.expr(value, env)?;
                if v == Value::Unit {
                    return Err(runtime(
                        value.pos,
                        DiagnosticCode::Type,
                        format!("cannot assign to '{name}': the expression returns no value"),
                    ));
                }
                env.insert(name.clone(), v);
                Ok(())
            }
            StmtKind::Expr(e) => self.expr(e, env).map(|_| ()),
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => match self.expr(cond, env)? {
                Value::Bool(true) => self.block(then_block, env),
                Value::Bool(false) => match else_block {
                    Some(b) => self.block(b, env),
                    None => Ok(()),
                },
                other => Err(runtime(
                    cond.pos,
                    DiagnosticCode::Type,
                    format!("'if' condition must be a boolean, found {}", other.describe()),
                )),
            },
            StmtKind::FuncDef(def) => {
                self.locals.insert(def.name.clone(), def.clone());
                Ok(())
            }
        }
    }

    fn expr(&mut self, e: &Expr, env: &mut Env) -> Result<Value, Diagnostic> {
        match &e.kind {
            ExprKind::Literal(Literal::Number(n)) => Ok(Value::Num(*n)),
            ExprKind::Literal(Literal::Str(s)) => Ok(Value::Str(s.clone())),
            ExprKind::Literal(Literal::Bool(b)) => Ok(Value::Bool(*b)),
            ExprKind::Var(name) => env.get(name).cloned().ok_or_else(|| {
                runtime(e.pos, DiagnosticCode::Type, format!("variable '{name}' is not defined"))
            }),
            ExprKind::Attr { target, field } => match self.expr(target, env)? {
                Value::Pose(p) => Ok(Value::Num(match field {
                    super::ast::Field::X => p.x,
                    super::ast::Field::Y => p.y,
                    super::ast::Field::Z => p.z,
                })),
                other => Err(runtime(
                    e.pos,
                    DiagnosticCode::Type,
                    format!("'.{}' needs a pose, found {}", field.as_str(), other.describe()),
                )),
            },
            ExprKind::Binary { op, lhs, rhs } => {
                let l = self.expr(lhs, env)?;
                let r = self.expr(rhs, env)?;
                binary(*op, l, r, e.pos)
            }
            ExprKind::Call { name, args } => {
                let mut values = Vec::with_capacity(args.len());
                for a in args {
                    values.push(self.expr(a, env)?);
                }
                self.call(name, values, e.pos)
            }
        }
    }

    fn call(&mut self, name: &str, args: Vec<Value>, pos: Pos) -> Result<Value, Diagnostic> {
        if let Some(api) = CoreApi::from_name(name) {
            return self.core_call(api, args, pos);
        }
        let def = match self.registry.get_learned(name) {
            Some(api) => api.def.clone(),
            None => self.locals.get(name).cloned().ok_or_else(|| {
                runtime(pos, DiagnosticCode::UnknownApi, format!("unknown API '{name}'"))
            })?,
        };
        if def.params.len() != args.len() {
            return Err(runtime(
                pos,
                DiagnosticCode::Arity,
                format!("{name} expects {} arguments, got {}", def.params.len(), args.len()),
            ));
        }
        if self.depth >= CALL_DEPTH_LIMIT {
            return Err(runtime(
                pos,
                DiagnosticCode::RuntimeAction,
                format!("calls nested deeper than {CALL_DEPTH_LIMIT} levels"),
            ));
        }
        let mut env: Env = def.params.iter().cloned().zip(args).collect();
        self.depth += 1;
        let outcome = self.block(&def.body, &mut env);
        self.depth -= 1;
        outcome.map(|()| Value::Unit)
    }

    fn core_call(&mut self, api: CoreApi, args: Vec<Value>, pos: Pos) -> Result<Value, Diagnostic> {
        let name = api.name();
        if args.len() != api.params().len() {
            return Err(runtime(
                pos,
                DiagnosticCode::Arity,
                format!("{name} expects {} arguments, got {}", api.params().len(), args.len()),
            ));
        }
        if self.steps.len() >= STEP_BUDGET {
            return Err(runtime(
                pos,
                DiagnosticCode::RuntimeAction,
                format!("step budget exceeded: programs may perform at most {STEP_BUDGET} core API calls"),
            ));
        }
        let object = |i: usize| -> Result<&str, Diagnostic> {
            match &args[i] {
                Value::Str(s) => Ok(s.as_str()),
                other => Err(runtime(
                    pos,
                    DiagnosticCode::Type,
                    format!("{name} expects an object name string, found {}", other.describe()),
                )),
            }
        };
        let number = |i: usize| -> Result<f64, Diagnostic> {
            match &args[i] {
                Value::Num(n) => Ok(*n),
                other => Err(runtime(
                    pos,
                    DiagnosticCode::Type,
                    format!("{name} argument {} must be a number, found {}", i + 1, other.describe()),
                )),
            }
        };
        let result = match api {
            CoreApi::Pick => {
                let o = object(0)?;
                self.world.pick(o).map(|_| Value::Unit)
            }
            CoreApi::PlaceOn => {
                let o = object(0)?;
                self.world.place_on(o).map(|_| Value::Unit)
            }
            CoreApi::PlaceAt => {
                let target = Vec3::new(number(0)?, number(1)?, number(2)?);
                self.world.place_at(target).map(|_| Value::Unit)
            }
            CoreApi::Move => {
                let delta = Vec3::new(number(0)?, number(1)?, number(2)?);
                self.world.move_gripper(delta).map(|_| Value::Unit)
            }
            CoreApi::GetObjPose => {
                let o = object(0)?;
                self.world.get_obj_pose(o).map(Value::Pose)
            }
            CoreApi::GetObjMass => {
                let o = object(0)?;
                self.world.get_obj_mass(o).map(Value::Num)
            }
        };
        match result {
            Ok(outcome) => {
                self.steps.push(TraceStep {
                    api: name.to_string(),
                    args,
                    outcome: outcome.clone(),
                });
                Ok(outcome)
            }
            Err(err) => Err(runtime(pos, DiagnosticCode::RuntimeAction, err.to_string())),
        }
    }
}

fn binary(op: BinOp, l: Value, r: Value, pos: Pos) -> Result<Value, Diagnostic> {
    use Value::*;
    let mismatch = |l: &Value, r: &Value| {
        runtime(
            pos,
            DiagnosticCode::Type,
            format!("operator '{}' cannot combine {} and {}", op.symbol(), l.type_name(), r.type_name()),
        )
    };
    Ok(match (op, &l, &r) {
        (BinOp::Add, Num(a), Num(b)) => Num(a + b),
        (BinOp::Add, Str(a), Str(b)) => Str(format!("{a}{b}")),
        (BinOp::Sub, Num(a), Num(b)) => Num(a - b),
        (BinOp::Mul, Num(a), Num(b)) => Num(a * b),
        (BinOp::Div, Num(_), Num(b)) if *b == 0.0 => {
            return Err(runtime(pos, DiagnosticCode::Type, "division by zero"));
        }
        (BinOp::Div, Num(a), Num(b)) => Num(a / b),
        (BinOp::Lt, Num(a), Num(b)) => Bool(a < b),
        (BinOp::Le, Num(a), Num(b)) => Bool(a <= b),
        (BinOp::Gt, Num(a), Num(b)) => Bool(a > b),
        (BinOp::Ge, Num(a), Num(b)) => Bool(a >= b),
        (BinOp::Eq | BinOp::Ne, Num(_), Num(_))
        | (BinOp::Eq | BinOp::Ne, Str(_), Str(_))
        | (BinOp::Eq | BinOp::Ne, Bool(_), Bool(_)) => {
            let eq = l == r;
            Bool(if op == BinOp::Eq { eq } else { !eq })
        }
        _ => return Err(mismatch(&l, &r)),
    })
}
