use super::reader::{infix_op, is_symbol_char, prefix_op, OpType};
use super::{atoms, Sym, Term};

/// Shortest text that reads back as the same float.
pub fn format_float(f: f64) -> String {
    if f.is_nan() {
        return "1.5NaN".to_string();
    }
    if f.is_infinite() {
        return if f > 0.0 { "1.0Inf".into() } else { "-1.0Inf".into() };
    }
    // Debug gives the shortest round-trip digits and switches to exponent
    // form for very large or small magnitudes.
    let s = format!("{f:?}");
    if s.contains('.') || s.contains('e') || s.contains("inf") {
        s
    } else {
        s + ".0"
    }
}

fn is_solo(name: &str) -> bool {
    matches!(name, "[]" | "!" | ";")
}

fn is_letter_digit_atom(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => chars.all(|c| c.is_ascii_alphanumeric() || c == '_'),
        _ => false,
    }
}

fn is_symbol_atom(name: &str) -> bool {
    !name.is_empty() && name.chars().all(is_symbol_char) && !name.starts_with("/*") && name != "."
}

fn atom_needs_quotes(name: &str) -> bool {
    !(is_solo(name) || is_letter_digit_atom(name) || is_symbol_atom(name))
}

/// Atom text, single-quoted when it would not read back unquoted.
pub fn write_atom(name: &str) -> String {
    if !atom_needs_quotes(name) {
        return name.to_string();
    }
    let mut out = String::with_capacity(name.len() + 2);
    out.push('\'');
    for c in name.chars() {
        match c {
            '\'' => out.push_str("\\'"),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

fn is_operator_atom(s: Sym) -> bool {
    let name = s.as_str();
    infix_op(name).is_some() || prefix_op(name).is_some()
}

/// Writes a term so that reading the text back gives the same term up to
/// variable renaming. Lists use bracket notation and infix operators are
/// written infix; prefix operators use functional notation.
pub fn write_term(t: &Term) -> String {
    let mut w = Writer { out: String::new() };
    w.term(t, 1200, false);
    w.out
}

struct Writer {
    out: String,
}

impl Writer {
    /// Appends text, inserting a space where two tokens would otherwise fuse.
    fn glue(&mut self, text: &str) {
        if let (Some(prev), Some(next)) = (self.out.chars().last(), text.chars().next()) {
            let fuse = (is_symbol_char(prev) && is_symbol_char(next))
                || (is_alnum(prev) && is_alnum(next))
                || (prev == ',' && next == ',');
            if fuse {
                self.out.push(' ');
            }
        }
        self.out.push_str(text);
    }

    fn term(&mut self, t: &Term, max_prec: u32, operand: bool) {
        match t {
            Term::Var(v) => match v.name {
                Some(n) => self.glue(&format!("{}_{}", n, v.id)),
                None => self.glue(&format!("_G{}", v.id)),
            },
            Term::Int(i) => self.glue(&i.to_string()),
            Term::Float(f) => self.glue(&format_float(*f)),
            Term::Atom(s) => {
                let text = write_atom(s.as_str());
                if operand && is_operator_atom(*s) {
                    self.glue("(");
                    self.out.push_str(&text);
                    self.out.push(')');
                } else if *s == atoms::comma() {
                    self.glue("','");
                } else if s.as_str() == "|" {
                    self.glue("'|'");
                } else {
                    self.glue(&text);
                }
            }
            Term::Compound(c) => {
                if t.as_cons().is_some() {
                    self.list(t);
                    return;
                }
                let name = c.functor().as_str();
                if c.arity() == 2 {
                    if let Some((p, ty)) = infix_op(name) {
                        let (lmax, rmax) = match ty {
                            OpType::Xfx => (p - 1, p - 1),
                            OpType::Xfy => (p - 1, p),
                            OpType::Yfx => (p, p - 1),
                            _ => unreachable!("infix table holds infix types"),
                        };
                        let paren = p > max_prec;
                        if paren {
                            self.glue("(");
                        }
                        self.term(&c.args()[0], lmax, true);
                        match name {
                            "," => self.out.push(','),
                            ":" => self.glue(":"),
                            _ => {
                                self.out.push(' ');
                                self.out.push_str(&write_atom(name));
                                self.out.push(' ');
                            }
                        }
                        self.term(&c.args()[1], rmax, true);
                        if paren {
                            self.out.push(')');
                        }
                        return;
                    }
                }
                self.glue(&write_atom(name));
                self.out.push('(');
                for (i, a) in c.args().iter().enumerate() {
                    if i > 0 {
                        self.out.push(',');
                    }
                    self.term(a, 999, false);
                }
                self.out.push(')');
            }
        }
    }

    fn list(&mut self, t: &Term) {
        self.glue("[");
        let mut cur = t;
        let mut first = true;
        loop {
            match cur.as_cons() {
                Some((h, tail)) => {
                    if !first {
                        self.out.push(',');
                    }
                    first = false;
                    self.term(h, 999, false);
                    cur = tail;
                }
                None => {
                    if !cur.is_nil() {
                        self.out.push('|');
                        self.term(cur, 999, false);
                    }
                    break;
                }
            }
        }
        self.out.push(']');
    }
}

fn is_alnum(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoting() {
        assert_eq!(write_atom("abc"), "abc");
        assert_eq!(write_atom("Bob"), "'Bob'");
        assert_eq!(write_atom(""), "''");
        assert_eq!(write_atom("[]"), "[]");
        assert_eq!(write_atom("it's"), "'it\\'s'");
        assert_eq!(write_atom("=<"), "=<");
        assert_eq!(write_atom(","), "','");
        assert_eq!(write_atom("a b"), "'a b'");
        assert_eq!(write_atom("{\"x\":1}"), "'{\"x\":1}'");
    }

    #[test]
    fn floats_keep_a_fraction_or_exponent() {
        assert_eq!(format_float(3.5), "3.5");
        assert_eq!(format_float(1.0), "1.0");
        assert_eq!(format_float(-0.0), "-0.0");
        assert_eq!(format_float(1e300), "1e300");
        assert_eq!(format_float(f64::INFINITY), "1.0Inf");
    }

    #[test]
    fn pydict_prints_like_writeq() {
        let pair = |k: &str, v: Term| Term::compound_str("", vec![Term::atom(k), v]);
        let t = Term::compound_str(
            "pyDict",
            vec![Term::list(vec![
                pair("name", Term::atom("Bob")),
                pair("langs", Term::list(vec![Term::atom("English"), Term::atom("GERMAN")])),
            ])],
        );
        assert_eq!(
            write_term(&t),
            "pyDict([''(name,'Bob'),''(langs,['English','GERMAN'])])"
        );
    }

    #[test]
    fn nil_and_partial_lists() {
        assert_eq!(write_term(&Term::nil()), "[]");
        let t = Term::list_with_tail(vec![Term::Int(1), Term::Int(2)], Term::var(7));
        assert_eq!(write_term(&t), "[1,2|_G7]");
    }

    #[test]
    fn operators_and_glue() {
        let minus = |a: Term, b: Term| Term::compound_str("-", vec![a, b]);
        assert_eq!(write_term(&minus(Term::atom("a"), Term::Int(-1))), "a - -1");
        let colon = Term::compound_str(":", vec![Term::atom("a"), Term::Int(-1)]);
        assert_eq!(write_term(&colon), "a: -1");
        let neg = Term::compound_str("-", vec![Term::Int(1)]);
        assert_eq!(write_term(&neg), "-(1)");
        let conj = Term::compound_str(",", vec![Term::atom("a"), Term::atom("b")]);
        let in_arg = Term::compound_str("f", vec![conj]);
        assert_eq!(write_term(&in_arg), "f((a,b))");
    }
}
