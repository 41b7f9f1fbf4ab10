//! Random program generators for the subset. Every generated program runs
//! without error under the test interpreter.

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

pub struct Program {
    pub code: String,
    /// Top-level assignments as (line, name).
    pub assignments: Vec<(u32, String)>,
}

struct Gen<'a> {
    rng: &'a mut StdRng,
    lines: Vec<String>,
    vars: Vec<String>,
    funcs: Vec<(String, usize)>,
    assignments: Vec<(u32, String)>,
    next_var: usize,
}

const ARITH: [&str; 3] = ["+", "-", "*"];
const CMP: [&str; 4] = ["<", ">", "<=", "=="];

impl Gen<'_> {
    fn line(&mut self, s: String) {
        self.lines.push(s);
    }

    fn fresh(&mut self) -> String {
        self.next_var += 1;
        format!("v{}", self.next_var)
    }

    fn leaf(&mut self, scope: &[String]) -> String {
        if !scope.is_empty() && self.rng.gen_bool(0.6) {
            scope.choose(self.rng).unwrap().clone()
        } else if self.rng.gen_bool(0.2) {
            format!("{}L", self.rng.gen_range(0..10))
        } else {
            self.rng.gen_range(0..10).to_string()
        }
    }

    fn expr(&mut self, scope: &[String], depth: u32) -> String {
        if depth == 0 || self.rng.gen_bool(0.4) {
            return self.leaf(scope);
        }
        let op = *ARITH.choose(self.rng).unwrap();
        let l = self.expr(scope, depth - 1);
        let r = self.expr(scope, depth - 1);
        if depth >= 2 {
            format!("({l} {op} {r})")
        } else {
            format!("{l} {op} {r}")
        }
    }

    fn top_expr(&mut self, scope: &[String]) -> String {
        let e = self.expr(scope, 2);
        e.strip_prefix('(').and_then(|s| s.strip_suffix(')')).filter(|s| !s.contains('(')).map(str::to_string).unwrap_or(e)
    }

    fn cond(&mut self, scope: &[String]) -> String {
        let op = *CMP.choose(self.rng).unwrap();
        let l = self.expr(scope, 1);
        let r = self.leaf(scope);
        format!("{l} {op} {r}")
    }

    fn target(&mut self) -> String {
        if self.vars.is_empty() || self.rng.gen_bool(0.6) {
            let v = self.fresh();
            self.vars.push(v.clone());
            v
        } else {
            self.vars.choose(self.rng).unwrap().clone()
        }
    }

    fn assignment(&mut self) {
        let scope = self.vars.clone();
        let rhs = self.top_expr(&scope);
        let target = self.target();
        self.assignments.push((self.lines.len() as u32 + 1, target.clone()));
        self.line(format!("{target} <- {rhs}"));
    }

    fn branch(&mut self) {
        let scope = self.vars.clone();
        let cond = self.cond(&scope);
        self.line(format!("if ({cond}) {{"));
        let n = self.rng.gen_range(1..=2);
        for _ in 0..n {
            let t = scope.choose(self.rng).unwrap().clone();
            let e = self.top_expr(&scope);
            self.line(format!("  {t} <- {e}"));
        }
        if self.rng.gen_bool(0.6) {
            self.line("} else {".into());
            let t = scope.choose(self.rng).unwrap().clone();
            let e = self.top_expr(&scope);
            self.line(format!("  {t} <- {e}"));
        }
        self.line("}".into());
    }

    fn function(&mut self) {
        let name = format!("f{}", self.funcs.len() + 1);
        let arity = self.rng.gen_range(1..=2);
        let params: Vec<String> = ["a", "b"][..arity].iter().map(|s| s.to_string()).collect();
        let mut scope = params.clone();
        scope.extend(self.vars.iter().take(3).cloned());
        self.assignments.push((self.lines.len() as u32 + 1, name.clone()));
        self.line(format!("{name} <- function({}) {{", params.join(", ")));
        let e = self.top_expr(&scope);
        self.line(format!("  t <- {e}"));
        scope.push("t".into());
        if self.rng.gen_bool(0.4) {
            let c = self.cond(&scope);
            let e = self.top_expr(&scope);
            self.line(format!("  if ({c}) t <- {e}"));
        }
        let e = self.top_expr(&scope);
        self.line(format!("  t + {e}"));
        self.line("}".into());
        self.funcs.push((name, arity));
    }

    fn call(&mut self) {
        let (f, arity) = self.funcs.choose(self.rng).unwrap().clone();
        let scope = self.vars.clone();
        let args: Vec<String> = (0..arity).map(|_| self.expr(&scope, 1)).collect();
        let target = self.target();
        self.assignments.push((self.lines.len() as u32 + 1, target.clone()));
        self.line(format!("{target} <- {f}({})", args.join(", ")));
    }
}

/// Loop-free program with assignments, branches, functions and calls.
pub fn loop_free(rng: &mut StdRng, max_statements: usize) -> Program {
    let mut g = Gen {
        rng,
        lines: Vec::new(),
        vars: Vec::new(),
        funcs: Vec::new(),
        assignments: Vec::new(),
        next_var: 0,
    };
    let n = g.rng.gen_range(1..=max_statements);
    for _ in 0..n {
        let roll: f64 = g.rng.gen();
        match roll {
            _ if g.vars.is_empty() => g.assignment(),
            r if r < 0.15 => g.branch(),
            r if r < 0.27 => g.function(),
            r if r < 0.45 && !g.funcs.is_empty() => g.call(),
            r if r < 0.5 => {
                let v = g.vars.choose(g.rng).unwrap().clone();
                g.line(format!("print({v})"));
            }
            _ => g.assignment(),
        }
    }
    Program {
        code: g.lines.join("\n") + "\n",
        assignments: g.assignments,
    }
}

/// Straight-line arithmetic over literals and earlier variables, using
/// `+ - * /` (divisors are non-zero literals), `^ 2` and unary minus.
pub fn straight_line(rng: &mut StdRng, statements: usize) -> Program {
    let mut lines = Vec::new();
    let mut assignments = Vec::new();
    let mut vars: Vec<String> = Vec::new();
    for i in 0..statements {
        let operand = |rng: &mut StdRng, vars: &[String]| -> String {
            if !vars.is_empty() && rng.gen_bool(0.6) {
                vars.choose(rng).unwrap().clone()
            } else if rng.gen_bool(0.3) {
                format!("{}.5", rng.gen_range(0..10))
            } else {
                rng.gen_range(0..10).to_string()
            }
        };
        let a = operand(rng, &vars);
        let rhs = match rng.gen_range(0..7) {
            0 => a,
            1 => format!("-{a}"),
            2 => format!("{a} / {}", rng.gen_range(1..5)),
            3 => format!("{a} ^ 2"),
            k => {
                let b = operand(rng, &vars);
                format!("{a} {} {b}", ARITH[k - 4])
            }
        };
        let name = format!("x{i}");
        assignments.push((i as u32 + 1, name.clone()));
        lines.push(format!("{name} <- {rhs}"));
        vars.push(name);
    }
    Program {
        code: lines.join("\n") + "\n",
        assignments,
    }
}

/// A script of roughly `lines` lines mixing every statement kind, used for
/// timing.
pub fn large_script(rng: &mut StdRng, lines: usize) -> String {
    let mut out = String::new();
    let mut count = 0;
    while count < lines {
        let p = loop_free(rng, 30);
        count += p.code.lines().count();
        out.push_str(&p.code);
    }
    out
}
