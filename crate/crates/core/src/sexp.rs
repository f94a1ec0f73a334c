//! Minimal S-expressions: SMT term construction and solver output parsing.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed s-expression at byte {offset}: {message}")]
pub struct SexpError {
    pub offset: usize,
    pub message: String,
}

pub fn atom(s: impl Into<String>) -> Sexp {
    Sexp::Atom(s.into())
}

/// `(head args...)`
pub fn app(head: &str, args: impl IntoIterator<Item = Sexp>) -> Sexp {
    let mut v = vec![atom(head)];
    v.extend(args);
    Sexp::List(v)
}

#[macro_export]
macro_rules! sx {
    ($head:expr $(, $arg:expr)* $(,)?) => {
        $crate::sexp::app($head, vec![$($arg.clone()),*])
    };
}

impl Sexp {
    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(s) => Some(s),
            Sexp::List(_) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(v) => Some(v),
            Sexp::Atom(_) => None,
        }
    }

    /// Calls `f` on every atom.
    pub fn atoms<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            Sexp::Atom(s) => f(s),
            Sexp::List(v) => v.iter().for_each(|x| x.atoms(f)),
        }
    }

    pub fn is_true(&self) -> bool {
        self.as_atom() == Some("true")
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom(s) => f.write_str(s),
            Sexp::List(v) => {
                f.write_str("(")?;
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str(")")
            }
        }
    }
}

pub fn and(terms: Vec<Sexp>) -> Sexp {
    let terms: Vec<Sexp> = terms.into_iter().filter(|t| !t.is_true()).collect();
    match terms.len() {
        0 => atom("true"),
        1 => terms.into_iter().next().unwrap_or_else(|| atom("true")),
        _ => app("and", terms),
    }
}

pub fn or(terms: Vec<Sexp>) -> Sexp {
    match terms.len() {
        0 => atom("false"),
        1 => terms.into_iter().next().unwrap_or_else(|| atom("false")),
        _ => app("or", terms),
    }
}

pub fn not(t: Sexp) -> Sexp {
    app("not", [t])
}

pub fn implies(a: Sexp, b: Sexp) -> Sexp {
    if a.is_true() {
        b
    } else {
        app("=>", [a, b])
    }
}

/// Parses every top-level expression in `text`. `;` comments are skipped,
/// `|quoted|` symbols keep their bars and string literals keep their quotes.
pub fn parse_all(text: &str) -> Result<Vec<Sexp>, SexpError> {
    let b = text.as_bytes();
    let mut i = 0;
    let mut stack: Vec<Vec<Sexp>> = vec![vec![]];
    let mut opens: Vec<usize> = vec![];
    while i < b.len() {
        let c = b[i];
        match c {
            b';' => {
                while i < b.len() && b[i] != b'\n' {
                    i += 1;
                }
            }
            b'(' => {
                stack.push(vec![]);
                opens.push(i);
                i += 1;
            }
            b')' => {
                if stack.len() < 2 {
                    return Err(SexpError { offset: i, message: "unbalanced `)`".into() });
                }
                let done = stack.pop().unwrap_or_default();
                opens.pop();
                if let Some(top) = stack.last_mut() {
                    top.push(Sexp::List(done));
                }
                i += 1;
            }
            c if c.is_ascii_whitespace() => i += 1,
            b'|' => {
                let start = i;
                i += 1;
                while i < b.len() && b[i] != b'|' {
                    i += 1;
                }
                if i >= b.len() {
                    return Err(SexpError { offset: start, message: "unterminated quoted symbol".into() });
                }
                i += 1;
                push_atom(&mut stack, &text[start..i]);
            }
            b'"' => {
                let start = i;
                i += 1;
                loop {
                    if i >= b.len() {
                        return Err(SexpError { offset: start, message: "unterminated string".into() });
                    }
                    if b[i] == b'"' {
                        if i + 1 < b.len() && b[i + 1] == b'"' {
                            i += 2;
                            continue;
                        }
                        i += 1;
                        break;
                    }
                    i += 1;
                }
                push_atom(&mut stack, &text[start..i]);
            }
            _ => {
                let start = i;
                while i < b.len() && !b[i].is_ascii_whitespace() && !matches!(b[i], b'(' | b')' | b';') {
                    i += 1;
                }
                push_atom(&mut stack, &text[start..i]);
            }
        }
    }
    if let Some(&o) = opens.last() {
        return Err(SexpError { offset: o, message: "unbalanced `(`".into() });
    }
    Ok(stack.pop().unwrap_or_default())
}

fn push_atom(stack: &mut [Vec<Sexp>], s: &str) {
    if let Some(top) = stack.last_mut() {
        top.push(Sexp::Atom(s.to_string()));
    }
}
