use std::collections::BTreeSet;
use std::fmt;

use serde::{Serialize, Serializer};

/// Sets larger than this are widened to "any".
pub const MAX_SET: usize = 8;

/// Closed interval over the extended reals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    /// All members are whole numbers.
    pub integral: bool,
}

impl Interval {
    pub fn new(lo: f64, hi: f64, integral: bool) -> Self {
        debug_assert!(lo <= hi, "empty interval [{lo}, {hi}]");
        Interval { lo, hi, integral }
    }

    pub fn point(v: f64) -> Self {
        Interval::new(v, v, v.is_finite() && v.fract() == 0.0)
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    fn hull(&self, other: &Interval) -> Interval {
        Interval::new(
            self.lo.min(other.lo),
            self.hi.max(other.hi),
            self.integral && other.integral,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StringSet {
    Finite(BTreeSet<String>),
    Any,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AbstractValue {
    Bottom,
    Interval(Interval),
    Strings(StringSet),
    Logical(BTreeSet<bool>),
    Top,
}

impl AbstractValue {
    pub fn number(v: f64) -> Self {
        AbstractValue::Interval(Interval::point(v))
    }

    pub fn interval(lo: f64, hi: f64, integral: bool) -> Self {
        AbstractValue::Interval(Interval::new(lo, hi, integral))
    }

    pub fn string(s: impl Into<String>) -> Self {
        AbstractValue::Strings(StringSet::Finite(BTreeSet::from([s.into()])))
    }

    pub fn logical(b: bool) -> Self {
        AbstractValue::Logical(BTreeSet::from([b]))
    }

    pub fn any_logical() -> Self {
        AbstractValue::Logical(BTreeSet::from([false, true]))
    }

    pub fn is_bottom(&self) -> bool {
        matches!(self, AbstractValue::Bottom)
    }

    /// Least upper bound.
    pub fn join(&self, other: &AbstractValue) -> AbstractValue {
        use AbstractValue::*;
        match (self, other) {
            (Bottom, x) | (x, Bottom) => x.clone(),
            (Top, _) | (_, Top) => Top,
            (Interval(a), Interval(b)) => Interval(a.hull(b)),
            (Strings(StringSet::Any), Strings(_)) | (Strings(_), Strings(StringSet::Any)) => Strings(StringSet::Any),
            (Strings(StringSet::Finite(a)), Strings(StringSet::Finite(b))) => {
                Strings(StringSet::Finite(a.union(b).cloned().collect()))
            }
            (Logical(a), Logical(b)) => Logical(a.union(b).copied().collect()),
            _ => Top,
        }
    }

    /// Join that forces termination: bounds that grew become infinite and
    /// oversized sets become "any".
    pub fn widen(&self, new: &AbstractValue) -> AbstractValue {
        use AbstractValue::*;
        let joined = self.join(new);
        match (self, &joined) {
            (Interval(old), Interval(j)) => {
                let lo = if j.lo < old.lo { f64::NEG_INFINITY } else { j.lo };
                let hi = if j.hi > old.hi { f64::INFINITY } else { j.hi };
                Interval(self::Interval::new(lo, hi, j.integral))
            }
            (_, Strings(StringSet::Finite(s))) if s.len() > MAX_SET => Strings(StringSet::Any),
            _ => joined,
        }
    }

    /// Whether a concrete number is described by this value.
    pub fn admits_number(&self, v: f64) -> bool {
        match self {
            AbstractValue::Top => true,
            AbstractValue::Interval(i) => i.contains(v) && (!i.integral || v.fract() == 0.0),
            _ => false,
        }
    }

    pub fn admits_string(&self, v: &str) -> bool {
        match self {
            AbstractValue::Top | AbstractValue::Strings(StringSet::Any) => true,
            AbstractValue::Strings(StringSet::Finite(s)) => s.contains(v),
            _ => false,
        }
    }

    pub fn admits_logical(&self, v: bool) -> bool {
        match self {
            AbstractValue::Top => true,
            AbstractValue::Logical(s) => s.contains(&v),
            _ => false,
        }
    }

    /// The single string this value stands for, if any.
    pub fn as_single_string(&self) -> Option<&str> {
        match self {
            AbstractValue::Strings(StringSet::Finite(s)) if s.len() == 1 => s.iter().next().map(String::as_str),
            _ => None,
        }
    }

    pub fn render(&self) -> String {
        self.to_string()
    }
}

/// R-like rendering of a finite number; whole numbers use an `L` suffix
/// when `integral`.
pub fn format_number(v: f64, integral: bool) -> String {
    if v == f64::INFINITY {
        return "Inf".into();
    }
    if v == f64::NEG_INFINITY {
        return "-Inf".into();
    }
    if v.is_nan() {
        return "NaN".into();
    }
    if integral && v.fract() == 0.0 {
        return format!("{}L", v as i64);
    }
    if v.fract() == 0.0 && v.abs() < 1e15 {
        return format!("{}", v as i64);
    }
    format!("{v}")
}

impl fmt::Display for AbstractValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbstractValue::Bottom => f.write_str("⊥"),
            AbstractValue::Top | AbstractValue::Strings(StringSet::Any) => f.write_str("⊤"),
            AbstractValue::Interval(i) => write!(
                f,
                "[{}, {}]",
                format_number(i.lo, i.integral),
                format_number(i.hi, i.integral)
            ),
            AbstractValue::Strings(StringSet::Finite(s)) => {
                let items: Vec<String> = s.iter().map(|x| format!("{x:?}")).collect();
                f.write_str(&items.join(", "))
            }
            AbstractValue::Logical(s) => {
                let items: Vec<&str> = s.iter().rev().map(|b| if *b { "TRUE" } else { "FALSE" }).collect();
                f.write_str(&items.join(", "))
            }
        }
    }
}

impl Serialize for AbstractValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

fn bound_mul(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

/// Arithmetic on two values. Anything but two intervals gives ⊤ (or ⊥ if
/// an operand is still ⊥).
pub fn arith(op: &str, a: &AbstractValue, b: &AbstractValue) -> AbstractValue {
    use AbstractValue::*;
    let (x, y) = match (a, b) {
        (Bottom, _) | (_, Bottom) => return Bottom,
        (Interval(x), Interval(y)) => (x, y),
        _ => return Top,
    };
    let integral = x.integral && y.integral;
    let result = match op {
        "+" => Some(self::Interval {
            lo: x.lo + y.lo,
            hi: x.hi + y.hi,
            integral,
        }),
        "-" => Some(self::Interval {
            lo: x.lo - y.hi,
            hi: x.hi - y.lo,
            integral,
        }),
        "*" => {
            let p = [
                bound_mul(x.lo, y.lo),
                bound_mul(x.lo, y.hi),
                bound_mul(x.hi, y.lo),
                bound_mul(x.hi, y.hi),
            ];
            Some(self::Interval {
                lo: p.iter().copied().fold(f64::INFINITY, f64::min),
                hi: p.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                integral,
            })
        }
        "/" if y.lo > 0.0 || y.hi < 0.0 => {
            let q = [x.lo / y.lo, x.lo / y.hi, x.hi / y.lo, x.hi / y.hi];
            if q.iter().any(|v| v.is_nan()) {
                None
            } else {
                Some(self::Interval {
                    lo: q.iter().copied().fold(f64::INFINITY, f64::min),
                    hi: q.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    integral: false,
                })
            }
        }
        "^" if y.is_point() && y.lo >= 0.0 && y.lo.fract() == 0.0 && y.lo <= 64.0 => {
            let k = y.lo as i32;
            let (pl, ph) = (x.lo.powi(k), x.hi.powi(k));
            let (lo, hi) = if k % 2 == 0 && x.lo < 0.0 && x.hi > 0.0 {
                (0.0, pl.max(ph))
            } else {
                (pl.min(ph), pl.max(ph))
            };
            Some(self::Interval { lo, hi, integral })
        }
        ":" => Some(self::Interval {
            lo: x.lo.min(y.lo),
            hi: x.hi.max(y.hi),
            integral: x.integral,
        }),
        _ => None,
    };
    match result {
        Some(r) if !r.lo.is_nan() && !r.hi.is_nan() && r.lo <= r.hi => Interval(r),
        _ => Top,
    }
}

/// Comparison of two values as a logical set.
pub fn compare(op: &str, a: &AbstractValue, b: &AbstractValue) -> AbstractValue {
    use AbstractValue::*;
    match (a, b) {
        (Bottom, _) | (_, Bottom) => Bottom,
        (Interval(x), Interval(y)) => {
            let (always, never) = match op {
                "<" => (x.hi < y.lo, x.lo >= y.hi),
                "<=" => (x.hi <= y.lo, x.lo > y.hi),
                ">" => (x.lo > y.hi, x.hi <= y.lo),
                ">=" => (x.lo >= y.hi, x.hi < y.lo),
                "==" => (x.is_point() && y.is_point() && x.lo == y.lo, x.hi < y.lo || y.hi < x.lo),
                "!=" => (x.hi < y.lo || y.hi < x.lo, x.is_point() && y.is_point() && x.lo == y.lo),
                _ => return Top,
            };
            decided(always, never)
        }
        (Strings(StringSet::Finite(x)), Strings(StringSet::Finite(y))) if op == "==" || op == "!=" => {
            let single = x.len() == 1 && y.len() == 1;
            let equal = single && x == y;
            let disjoint = x.is_disjoint(y);
            if op == "==" {
                decided(equal, disjoint)
            } else {
                decided(disjoint, equal)
            }
        }
        (Logical(x), Logical(y)) if op == "==" || op == "!=" => {
            let single = x.len() == 1 && y.len() == 1;
            let equal = single && x == y;
            let disjoint = x.is_disjoint(y);
            if op == "==" {
                decided(equal, disjoint)
            } else {
                decided(disjoint, equal)
            }
        }
        _ => Top,
    }
}

fn decided(always: bool, never: bool) -> AbstractValue {
    match (always, never) {
        (true, _) => AbstractValue::logical(true),
        (_, true) => AbstractValue::logical(false),
        _ => AbstractValue::any_logical(),
    }
}

/// `&`, `&&`, `|`, `||` over logical sets.
pub fn logic(op: &str, a: &AbstractValue, b: &AbstractValue) -> AbstractValue {
    use AbstractValue::*;
    match (a, b) {
        (Bottom, _) | (_, Bottom) => Bottom,
        (Logical(x), Logical(y)) => {
            let mut out = BTreeSet::new();
            for p in x {
                for q in y {
                    out.insert(match op {
                        "&" | "&&" => *p && *q,
                        _ => *p || *q,
                    });
                }
            }
            Logical(out)
        }
        _ => Top,
    }
}

pub fn unary(op: &str, a: &AbstractValue) -> AbstractValue {
    use AbstractValue::*;
    match (op, a) {
        (_, Bottom) => Bottom,
        ("-", Interval(i)) => Interval(self::Interval::new(-i.hi, -i.lo, i.integral)),
        ("+", Interval(_)) => a.clone(),
        ("!", Logical(s)) => Logical(s.iter().map(|b| !b).collect()),
        _ => Top,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rendering() {
        assert_eq!(AbstractValue::number(42.0).to_string(), "[42L, 42L]");
        assert_eq!(AbstractValue::interval(1.5, 2.0, false).to_string(), "[1.5, 2]");
        assert_eq!(
            AbstractValue::interval(f64::NEG_INFINITY, 3.0, true).to_string(),
            "[-Inf, 3L]"
        );
        assert_eq!(AbstractValue::string("id").to_string(), "\"id\"");
        assert_eq!(AbstractValue::any_logical().to_string(), "TRUE, FALSE");
        assert_eq!(AbstractValue::Top.to_string(), "⊤");
        assert_eq!(AbstractValue::Bottom.to_string(), "⊥");
    }

    #[test]
    fn widening() {
        let a = AbstractValue::interval(0.0, 1.0, true);
        let b = AbstractValue::interval(0.0, 2.0, true);
        assert_eq!(a.widen(&b), AbstractValue::interval(0.0, f64::INFINITY, true));
        assert_eq!(b.widen(&b), b);
        let s1 = AbstractValue::string("a");
        let s2 = s1.join(&AbstractValue::string("b"));
        assert_eq!(s1.widen(&s2), s2);
        let many = (0..9).fold(AbstractValue::Bottom, |acc, i| acc.join(&AbstractValue::string(i.to_string())));
        assert_eq!(s1.widen(&many), AbstractValue::Strings(StringSet::Any));
    }

    #[test]
    fn arithmetic() {
        let a = AbstractValue::interval(1.0, 2.0, true);
        let b = AbstractValue::interval(-1.0, 3.0, true);
        assert_eq!(arith("+", &a, &b), AbstractValue::interval(0.0, 5.0, true));
        assert_eq!(arith("-", &a, &b), AbstractValue::interval(-2.0, 3.0, true));
        assert_eq!(arith("*", &a, &b), AbstractValue::interval(-2.0, 6.0, true));
        assert_eq!(arith("/", &a, &b), AbstractValue::Top);
        assert_eq!(arith("^", &b, &AbstractValue::number(2.0)), AbstractValue::interval(0.0, 9.0, true));
        let inf = AbstractValue::interval(0.0, f64::INFINITY, true);
        assert_eq!(arith("*", &AbstractValue::number(0.0), &inf), AbstractValue::number(0.0));
    }

    #[test]
    fn comparisons() {
        let x = AbstractValue::interval(0.0, 19.0, true);
        assert_eq!(compare("<", &x, &AbstractValue::number(20.0)), AbstractValue::logical(true));
        assert_eq!(compare(">", &x, &AbstractValue::number(20.0)), AbstractValue::logical(false));
        assert_eq!(compare("<", &x, &AbstractValue::number(5.0)), AbstractValue::any_logical());
    }
}
