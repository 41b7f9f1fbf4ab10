//! A small evaluator for the deterministic part of the R subset, used as an
//! execution oracle. Values are numeric vectors, logicals, strings and
//! closures; every assignment is recorded by (line, name).

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use rdfg_core::syntax::{parse, Arg, AssignOp, Expr, ExprKind, Param, SourceText, Span};

#[derive(Debug, Clone)]
pub enum Val {
    Num(Vec<f64>),
    Lgl(bool),
    Str(String),
    Null,
    Closure(Rc<Closure>),
}

impl PartialEq for Val {
    fn eq(&self, other: &Val) -> bool {
        match (self, other) {
            (Val::Num(a), Val::Num(b)) => a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x == y || (x.is_nan() && y.is_nan())),
            (Val::Lgl(a), Val::Lgl(b)) => a == b,
            (Val::Str(a), Val::Str(b)) => a == b,
            (Val::Null, Val::Null) => true,
            (Val::Closure(a), Val::Closure(b)) => a.text == b.text,
            _ => false,
        }
    }
}

impl Val {
    pub fn scalar(&self) -> Option<f64> {
        match self {
            Val::Num(v) if v.len() == 1 => Some(v[0]),
            _ => None,
        }
    }
}

pub struct Closure {
    /// Source text of the definition, for comparison.
    text: String,
    params: Vec<Param>,
    body: Expr,
    env: Env,
}

impl std::fmt::Debug for Closure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let names: Vec<&str> = self.params.iter().map(|p| p.name.as_str()).collect();
        write!(f, "function({})", names.join(", "))
    }
}

type Env = Rc<RefCell<Frame>>;

#[derive(Debug, Default)]
struct Frame {
    vars: HashMap<String, Val>,
    parent: Option<Env>,
}

fn lookup(env: &Env, name: &str) -> Option<Val> {
    let f = env.borrow();
    match f.vars.get(name) {
        Some(v) => Some(v.clone()),
        None => f.parent.as_ref().and_then(|p| lookup(p, name)),
    }
}

enum Flow {
    Break,
    Next,
    Return(Val),
    Error(String),
}

type Res = Result<Val, Flow>;

fn fail<T>(msg: impl Into<String>) -> Result<T, Flow> {
    Err(Flow::Error(msg.into()))
}

pub struct Interpreter {
    source: SourceText,
    global: Env,
    /// Last value assigned at each (line, name).
    pub trace: BTreeMap<(u32, String), Val>,
    /// Spans of the assignments evaluated, in execution order.
    pub executed: Vec<Span>,
    steps: usize,
}

const STEP_LIMIT: usize = 1_000_000;

impl Interpreter {
    pub fn new(source: SourceText) -> Self {
        Interpreter {
            source,
            global: Rc::new(RefCell::new(Frame::default())),
            trace: BTreeMap::new(),
            executed: Vec::new(),
            steps: 0,
        }
    }

    pub fn run(code: &str) -> Result<Interpreter, String> {
        let source = SourceText::literal(code);
        let tree = parse(&source).map_err(|e| e.to_string())?;
        let mut it = Interpreter::new(source);
        let global = it.global.clone();
        for e in &tree.exprs {
            match it.eval(e, &global) {
                Ok(_) => {}
                Err(Flow::Error(m)) => return Err(m),
                Err(Flow::Return(_)) => return Err("return outside a function".into()),
                Err(_) => return Err("break or next outside a loop".into()),
            }
        }
        Ok(it)
    }

    pub fn global(&self, name: &str) -> Option<Val> {
        self.global.borrow().vars.get(name).cloned()
    }

    fn assign(&mut self, target: &Expr, value: Val, env: &Env, superassign: bool) -> Res {
        let ExprKind::Ident(name) = &target.kind else {
            return fail("unsupported assignment target");
        };
        self.trace.insert((target.span.start.line, name.clone()), value.clone());
        if superassign {
            let mut scope = env.borrow().parent.clone();
            while let Some(s) = scope {
                if s.borrow().vars.contains_key(name) || s.borrow().parent.is_none() {
                    s.borrow_mut().vars.insert(name.clone(), value.clone());
                    return Ok(value);
                }
                scope = s.borrow().parent.clone();
            }
        }
        env.borrow_mut().vars.insert(name.clone(), value.clone());
        Ok(value)
    }

    fn eval(&mut self, e: &Expr, env: &Env) -> Res {
        self.steps += 1;
        if self.steps > STEP_LIMIT {
            return fail("step limit exceeded");
        }
        match &e.kind {
            ExprKind::Num { value, .. } => Ok(Val::Num(vec![*value])),
            ExprKind::Str { value, .. } => Ok(Val::Str(value.clone())),
            ExprKind::Bool(b) => Ok(Val::Lgl(*b)),
            ExprKind::Null => Ok(Val::Null),
            ExprKind::Ident(name) => match lookup(env, name) {
                Some(v) => Ok(v),
                None => fail(format!("object '{name}' not found")),
            },
            ExprKind::Paren(inner) => self.eval(inner, env),
            ExprKind::Block(items) => {
                let mut last = Val::Null;
                for i in items {
                    last = self.eval(i, env)?;
                }
                Ok(last)
            }
            ExprKind::Assign { op, target, value } => {
                let v = self.eval(value, env)?;
                self.executed.push(e.span);
                self.assign(target, v, env, *op == AssignOp::Super)
            }
            ExprKind::RightAssign {
                superassign,
                value,
                target,
            } => {
                let v = self.eval(value, env)?;
                self.assign(target, v, env, *superassign)
            }
            ExprKind::Function { params, body } => Ok(Val::Closure(Rc::new(Closure {
                text: self.source.slice(e.span).unwrap_or_default().to_string(),
                params: params.clone(),
                body: (**body).clone(),
                env: env.clone(),
            }))),
            ExprKind::If { cond, then, otherwise } => {
                let c = self.eval(cond, env)?;
                if truthy(&c)? {
                    self.eval(then, env)
                } else if let Some(o) = otherwise {
                    self.eval(o, env)
                } else {
                    Ok(Val::Null)
                }
            }
            ExprKind::While { cond, body } => {
                loop {
                    let c = self.eval(cond, env)?;
                    if !truthy(&c)? {
                        break;
                    }
                    match self.eval(body, env) {
                        Ok(_) | Err(Flow::Next) => {}
                        Err(Flow::Break) => break,
                        Err(other) => return Err(other),
                    }
                }
                Ok(Val::Null)
            }
            ExprKind::Repeat { body } => {
                loop {
                    match self.eval(body, env) {
                        Ok(_) | Err(Flow::Next) => {}
                        Err(Flow::Break) => break,
                        Err(other) => return Err(other),
                    }
                }
                Ok(Val::Null)
            }
            ExprKind::For { var, var_span, seq, body } => {
                let items = match self.eval(seq, env)? {
                    Val::Num(v) => v,
                    Val::Null => Vec::new(),
                    _ => return fail("unsupported for sequence"),
                };
                for x in items {
                    self.trace.insert((var_span.start.line, var.clone()), Val::Num(vec![x]));
                    env.borrow_mut().vars.insert(var.clone(), Val::Num(vec![x]));
                    match self.eval(body, env) {
                        Ok(_) | Err(Flow::Next) => {}
                        Err(Flow::Break) => break,
                        Err(other) => return Err(other),
                    }
                }
                Ok(Val::Null)
            }
            ExprKind::Break => Err(Flow::Break),
            ExprKind::Next => Err(Flow::Next),
            ExprKind::Unary { op, operand } => {
                let v = self.eval(operand, env)?;
                match (op.as_str(), v) {
                    ("-", Val::Num(x)) => Ok(Val::Num(x.iter().map(|a| -a).collect())),
                    ("+", v @ Val::Num(_)) => Ok(v),
                    ("!", Val::Lgl(b)) => Ok(Val::Lgl(!b)),
                    (op, _) => fail(format!("unsupported unary {op}")),
                }
            }
            ExprKind::Binary { op, lhs, rhs } => {
                if op == "&&" || op == "||" {
                    let l = truthy(&self.eval(lhs, env)?)?;
                    if (op == "&&") != l {
                        return Ok(Val::Lgl(l));
                    }
                    return Ok(Val::Lgl(truthy(&self.eval(rhs, env)?)?));
                }
                let l = self.eval(lhs, env)?;
                let r = self.eval(rhs, env)?;
                binary(op, &l, &r)
            }
            ExprKind::Pipe { lhs, rhs, .. } => {
                let ExprKind::Call { callee, args } = &rhs.kind else {
                    return fail("pipe into a non-call");
                };
                let mut all = vec![Arg {
                    name: None,
                    value: Some((**lhs).clone()),
                    span: lhs.span,
                }];
                all.extend(args.iter().cloned());
                self.call(callee, &all, env)
            }
            ExprKind::Call { callee, args } => self.call(callee, args, env),
            _ => fail("unsupported expression"),
        }
    }

    fn call(&mut self, callee: &Expr, args: &[Arg], env: &Env) -> Res {
        let ExprKind::Ident(name) = &callee.kind else {
            return fail("unsupported callee");
        };
        if let Some(Val::Closure(c)) = lookup(env, name) {
            return self.apply(&c, args, env);
        }
        let mut values = Vec::new();
        for a in args {
            match &a.value {
                Some(v) => values.push(self.eval(v, env)?),
                None => return fail("empty argument"),
            }
        }
        match name.as_str() {
            "c" => {
                let mut out = Vec::new();
                for v in values {
                    match v {
                        Val::Num(x) => out.extend(x),
                        Val::Null => {}
                        _ => return fail("c() of non-numbers"),
                    }
                }
                Ok(Val::Num(out))
            }
            "print" | "invisible" | "identity" => Ok(values.into_iter().next().unwrap_or(Val::Null)),
            "return" => Err(Flow::Return(values.into_iter().next().unwrap_or(Val::Null))),
            "length" => match values.first() {
                Some(Val::Num(x)) => Ok(Val::Num(vec![x.len() as f64])),
                Some(Val::Null) => Ok(Val::Num(vec![0.0])),
                Some(_) => Ok(Val::Num(vec![1.0])),
                None => fail("length() needs an argument"),
            },
            "sum" => {
                let mut s = 0.0;
                for v in values {
                    match v {
                        Val::Num(x) => s += x.iter().sum::<f64>(),
                        _ => return fail("sum() of non-numbers"),
                    }
                }
                Ok(Val::Num(vec![s]))
            }
            "paste0" | "paste" => {
                let sep = if name == "paste" { " " } else { "" };
                let parts: Result<Vec<String>, Flow> = values.iter().map(to_text).collect();
                Ok(Val::Str(parts?.join(sep)))
            }
            other => fail(format!("could not find function \"{other}\"")),
        }
    }

    fn apply(&mut self, c: &Closure, args: &[Arg], env: &Env) -> Res {
        let frame = Rc::new(RefCell::new(Frame {
            vars: HashMap::new(),
            parent: Some(c.env.clone()),
        }));
        let mut positional = Vec::new();
        for a in args {
            let Some(v) = &a.value else { return fail("empty argument") };
            let v = self.eval(v, env)?;
            match &a.name {
                Some(n) => {
                    frame.borrow_mut().vars.insert(n.clone(), v);
                }
                None => positional.push(v),
            }
        }
        let mut positional = positional.into_iter();
        for p in &c.params {
            if frame.borrow().vars.contains_key(&p.name) {
                continue;
            }
            match positional.next() {
                Some(v) => {
                    frame.borrow_mut().vars.insert(p.name.clone(), v);
                }
                None => {
                    if let Some(d) = &p.default {
                        let v = self.eval(d, &frame)?;
                        frame.borrow_mut().vars.insert(p.name.clone(), v);
                    }
                }
            }
        }
        match self.eval(&c.body, &frame) {
            Ok(v) | Err(Flow::Return(v)) => Ok(v),
            Err(Flow::Break | Flow::Next) => fail("break or next outside a loop"),
            Err(e) => Err(e),
        }
    }
}

fn to_text(v: &Val) -> Result<String, Flow> {
    match v {
        Val::Str(s) => Ok(s.clone()),
        Val::Num(x) if x.len() == 1 => Ok(format!("{}", x[0])),
        Val::Lgl(b) => Ok(if *b { "TRUE".into() } else { "FALSE".into() }),
        _ => fail("cannot paste this value"),
    }
}

fn truthy(v: &Val) -> Result<bool, Flow> {
    match v {
        Val::Lgl(b) => Ok(*b),
        Val::Num(x) if x.len() == 1 && !x[0].is_nan() => Ok(x[0] != 0.0),
        _ => fail("argument is not interpretable as logical"),
    }
}

fn binary(op: &str, l: &Val, r: &Val) -> Res {
    let (Val::Num(a), Val::Num(b)) = (l, r) else {
        return match (op, l, r) {
            ("==", Val::Str(a), Val::Str(b)) => Ok(Val::Lgl(a == b)),
            ("!=", Val::Str(a), Val::Str(b)) => Ok(Val::Lgl(a != b)),
            ("&" | "&&", Val::Lgl(a), Val::Lgl(b)) => Ok(Val::Lgl(*a && *b)),
            ("|" | "||", Val::Lgl(a), Val::Lgl(b)) => Ok(Val::Lgl(*a || *b)),
            _ => fail(format!("unsupported operands for {op}")),
        };
    };
    if op == ":" {
        let (Some(&from), Some(&to)) = (a.first(), b.first()) else {
            return fail("empty range");
        };
        let mut out = Vec::new();
        let step = if from <= to { 1.0 } else { -1.0 };
        let mut x = from;
        while (step > 0.0 && x <= to) || (step < 0.0 && x >= to) {
            out.push(x);
            x += step;
        }
        return Ok(Val::Num(out));
    }
    if a.len() != 1 || b.len() != 1 {
        return fail("vector arithmetic is not supported");
    }
    let (x, y) = (a[0], b[0]);
    let num = |v: f64| Ok(Val::Num(vec![v]));
    match op {
        "+" => num(x + y),
        "-" => num(x - y),
        "*" => num(x * y),
        "/" => num(x / y),
        "^" => num(x.powf(y)),
        "%%" => num(x - (x / y).floor() * y),
        "%/%" => num((x / y).floor()),
        "<" => Ok(Val::Lgl(x < y)),
        ">" => Ok(Val::Lgl(x > y)),
        "<=" => Ok(Val::Lgl(x <= y)),
        ">=" => Ok(Val::Lgl(x >= y)),
        "==" => Ok(Val::Lgl(x == y)),
        "!=" => Ok(Val::Lgl(x != y)),
        _ => fail(format!("unsupported operator {op}")),
    }
}
