//! Boolean guard expressions over atomic propositions.
//!
//! Guards label automaton transitions and are evaluated against letters,
//! i.e. subsets of the declared atoms. The concrete syntax is `!`, `&`,
//! `|`, parentheses, the constants `t` / `f`, and atom identifiers, with
//! the usual precedence `!` > `&` > `|`.

use std::collections::BTreeSet;
use std::fmt;

use super::ModelError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Guard {
    True,
    False,
    Atom(String),
    Not(Box<Guard>),
    And(Box<Guard>, Box<Guard>),
    Or(Box<Guard>, Box<Guard>),
}

impl Guard {
    /// Parses a guard from its string form. Errors carry the byte offset of
    /// the offending token so messages are deterministic.
    pub fn parse(text: &str) -> Result<Guard, ModelError> {
        let mut p = Parser {
            src: text.as_bytes(),
            pos: 0,
        };
        let g = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(ModelError::GuardSyntax {
                offset: p.pos,
                message: format!("unexpected trailing input in guard `{text}`"),
            });
        }
        Ok(g)
    }

    /// Atom names referenced by this guard, in first-occurrence order.
    pub fn atoms(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Guard::True | Guard::False => {}
            Guard::Atom(a) => {
                if !out.contains(&a.as_str()) {
                    out.push(a);
                }
            }
            Guard::Not(g) => g.collect_atoms(out),
            Guard::And(l, r) | Guard::Or(l, r) => {
                l.collect_atoms(out);
                r.collect_atoms(out);
            }
        }
    }

    /// Checks that every referenced atom is declared.
    pub fn check_atoms(&self, declared: &[String]) -> Result<(), ModelError> {
        for a in self.atoms() {
            if !declared.iter().any(|d| d == a) {
                return Err(ModelError::UnknownAtom(a.to_string()));
            }
        }
        Ok(())
    }

    fn eval_inner(&self, letter: &BTreeSet<String>) -> bool {
        match self {
            Guard::True => true,
            Guard::False => false,
            Guard::Atom(a) => letter.contains(a),
            Guard::Not(g) => !g.eval_inner(letter),
            Guard::And(l, r) => l.eval_inner(letter) && r.eval_inner(letter),
            Guard::Or(l, r) => l.eval_inner(letter) || r.eval_inner(letter),
        }
    }
}

/// Evaluates a guard on a letter. Both the guard and the letter must only
/// mention atoms from `declared`.
pub fn eval_guard(
    guard: &Guard,
    letter: &BTreeSet<String>,
    declared: &[String],
) -> Result<bool, ModelError> {
    guard.check_atoms(declared)?;
    for a in letter {
        if !declared.iter().any(|d| d == a) {
            return Err(ModelError::UnknownAtom(a.clone()));
        }
    }
    Ok(guard.eval_inner(letter))
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // precedence levels: Or = 0, And = 1, Not/leaf = 2
        fn write_prec(g: &Guard, parent: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            let prec = match g {
                Guard::Or(..) => 0,
                Guard::And(..) => 1,
                _ => 2,
            };
            let parens = prec < parent;
            if parens {
                write!(f, "(")?;
            }
            match g {
                Guard::True => write!(f, "t")?,
                Guard::False => write!(f, "f")?,
                Guard::Atom(a) => write!(f, "{a}")?,
                Guard::Not(inner) => {
                    write!(f, "!")?;
                    write_prec(inner, 2, f)?;
                }
                Guard::And(l, r) => {
                    write_prec(l, 1, f)?;
                    write!(f, " & ")?;
                    write_prec(r, 1, f)?;
                }
                Guard::Or(l, r) => {
                    write_prec(l, 0, f)?;
                    write!(f, " | ")?;
                    write_prec(r, 0, f)?;
                }
            }
            if parens {
                write!(f, ")")?;
            }
            Ok(())
        }
        write_prec(self, 0, f)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Guard, ModelError> {
        let mut left = self.term()?;
        while self.peek() == Some(b'|') {
            self.pos += 1;
            let right = self.term()?;
            left = Guard::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn term(&mut self) -> Result<Guard, ModelError> {
        let mut left = self.factor()?;
        while self.peek() == Some(b'&') {
            self.pos += 1;
            let right = self.factor()?;
            left = Guard::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn factor(&mut self) -> Result<Guard, ModelError> {
        match self.peek() {
            Some(b'!') => {
                self.pos += 1;
                Ok(Guard::Not(Box::new(self.factor()?)))
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(ModelError::GuardSyntax {
                        offset: self.pos,
                        message: "expected `)`".into(),
                    });
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c == b'_' || c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos] == b'_' || self.src[self.pos].is_ascii_alphanumeric())
                {
                    self.pos += 1;
                }
                let ident = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                Ok(match ident {
                    "t" => Guard::True,
                    "f" => Guard::False,
                    _ => Guard::Atom(ident.to_string()),
                })
            }
            Some(c) => Err(ModelError::GuardSyntax {
                offset: self.pos,
                message: format!("unexpected character `{}`", c as char),
            }),
            None => Err(ModelError::GuardSyntax {
                offset: self.pos,
                message: "unexpected end of guard".into(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn letter(atoms: &[&str]) -> BTreeSet<String> {
        atoms.iter().map(|s| s.to_string()).collect()
    }

    fn decl(atoms: &[&str]) -> Vec<String> {
        atoms.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn conjunction_with_negation() {
        let g = Guard::parse("b & !c").unwrap();
        let declared = decl(&["b", "c"]);
        assert!(eval_guard(&g, &letter(&["b"]), &declared).unwrap());
        assert!(!eval_guard(&g, &letter(&["b", "c"]), &declared).unwrap());
    }

    #[test]
    fn constant_true_on_empty_letter() {
        let g = Guard::parse("t").unwrap();
        assert!(eval_guard(&g, &letter(&[]), &decl(&[])).unwrap());
    }

    #[test]
    fn precedence_not_over_and_over_or() {
        // a | b & !c  ==  a | (b & (!c))
        let g = Guard::parse("a | b & !c").unwrap();
        let declared = decl(&["a", "b", "c"]);
        // brute-force truth table against the explicit tree
        let expect = Guard::Or(
            Box::new(Guard::Atom("a".into())),
            Box::new(Guard::And(
                Box::new(Guard::Atom("b".into())),
                Box::new(Guard::Not(Box::new(Guard::Atom("c".into())))),
            )),
        );
        for mask in 0u8..8 {
            let mut l = BTreeSet::new();
            for (i, name) in ["a", "b", "c"].iter().enumerate() {
                if mask & (1 << i) != 0 {
                    l.insert(name.to_string());
                }
            }
            assert_eq!(
                eval_guard(&g, &l, &declared).unwrap(),
                eval_guard(&expect, &l, &declared).unwrap(),
                "mask {mask}"
            );
        }
    }

    #[test]
    fn unknown_atom_in_guard() {
        let g = Guard::parse("x").unwrap();
        let err = eval_guard(&g, &letter(&[]), &decl(&["b"])).unwrap_err();
        assert!(matches!(err, ModelError::UnknownAtom(name) if name == "x"));
    }

    #[test]
    fn unknown_atom_in_letter() {
        let g = Guard::parse("b").unwrap();
        let err = eval_guard(&g, &letter(&["z"]), &decl(&["b"])).unwrap_err();
        assert!(matches!(err, ModelError::UnknownAtom(name) if name == "z"));
    }

    #[test]
    fn syntax_error_offset_is_deterministic() {
        let err = Guard::parse("b & & c").unwrap_err();
        match err {
            ModelError::GuardSyntax { offset, .. } => assert_eq!(offset, 4),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn display_round_trips() {
        for src in [
            "t",
            "f",
            "a",
            "!a",
            "a & b | c",
            "a & (b | c)",
            "!(a | b) & c",
        ] {
            let g = Guard::parse(src).unwrap();
            let printed = g.to_string();
            let again = Guard::parse(&printed).unwrap();
            assert_eq!(g, again, "src `{src}` printed `{printed}`");
        }
    }
}
