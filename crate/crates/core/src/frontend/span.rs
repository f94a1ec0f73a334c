use std::fmt;

use serde::{Deserialize, Serialize};

/// A source region. `line`/`col` are 1-based and point at the first byte.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(start: usize, end: usize, line: u32, col: u32) -> Self {
        Span { start, end, line, col }
    }

    /// Smallest span covering both `self` and `other`.
    pub fn to(self, other: Span) -> Span {
        if other.end <= self.start {
            return Span { start: other.start, end: self.end, line: other.line, col: other.col };
        }
        Span { start: self.start, end: other.end.max(self.end), line: self.line, col: self.col }
    }

    pub fn pos(&self) -> Pos {
        Pos { line: self.line, col: self.col }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Line/column pair used to name a site from outside the tool (CLI, config files).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

impl std::str::FromStr for Pos {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (l, c) = s.split_once(':').ok_or_else(|| format!("expected LINE:COL, got `{s}`"))?;
        let line = l.trim().parse().map_err(|_| format!("bad line in `{s}`"))?;
        let col = c.trim().parse().map_err(|_| format!("bad column in `{s}`"))?;
        Ok(Pos { line, col })
    }
}
