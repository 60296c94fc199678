use std::fmt;

/// A region of source text.
///
/// Byte offsets are half-open (`start..end`). Lines and columns are 1-based and
/// count characters; `end_col` is the column of the last character (inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

impl Span {
    /// Smallest span covering both `self` and `other`.
    pub fn to(self, other: Span) -> Span {
        let (first, last) = if self.start <= other.start {
            (self, other)
        } else {
            (other, self)
        };
        let (end, end_line, end_col) = if last.end >= first.end {
            (last.end, last.end_line, last.end_col)
        } else {
            (first.end, first.end_line, first.end_col)
        };
        Span {
            start: first.start,
            end,
            line: first.line,
            col: first.col,
            end_line,
            end_col,
        }
    }

    /// Shift the line numbers by `lines`. Used when a fragment is compiled as
    /// part of a larger buffer.
    pub fn shifted_lines(self, lines: u32) -> Span {
        Span {
            line: self.line + lines,
            end_line: self.end_line + lines,
            ..self
        }
    }

    pub fn slice<'a>(&self, source: &'a str) -> &'a str {
        source.get(self.start..self.end).unwrap_or("")
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == self.end_line {
            write!(f, "{}:{}-{}", self.line, self.col, self.end_col)
        } else {
            write!(
                f,
                "{}:{}-{}:{}",
                self.line, self.col, self.end_line, self.end_col
            )
        }
    }
}

/// Text of the line containing `line` (1-based), without the trailing newline.
pub fn line_text(source: &str, line: u32) -> &str {
    source
        .split('\n')
        .nth(line.saturating_sub(1) as usize)
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .unwrap_or("")
}
