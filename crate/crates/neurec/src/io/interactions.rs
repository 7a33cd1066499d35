use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use neurec_core::data::{RawInteractions, RawRecord};

use super::{FormatError, FormatResult};

/// Field separator of an interaction log.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delimiter {
    Tab,
    Comma,
    /// `::`, as in the MovieLens `.dat` files.
    Colons,
    /// Any run of spaces or tabs.
    Whitespace,
}

impl Delimiter {
    fn split(self, line: &str) -> Vec<&str> {
        match self {
            Delimiter::Tab => line.split('\t').map(str::trim).collect(),
            Delimiter::Comma => line.split(',').map(str::trim).collect(),
            Delimiter::Colons => line.split("::").map(str::trim).collect(),
            Delimiter::Whitespace => line.split_whitespace().collect(),
        }
    }
}

impl FromStr for Delimiter {
    type Err = FormatError;

    fn from_str(s: &str) -> FormatResult<Self> {
        match s {
            "tab" => Ok(Delimiter::Tab),
            "comma" => Ok(Delimiter::Comma),
            "colons" => Ok(Delimiter::Colons),
            "ws" => Ok(Delimiter::Whitespace),
            other => Err(FormatError::Invalid(format!("unknown delimiter `{other}` (expected tab, comma, colons or ws)"))),
        }
    }
}

impl fmt::Display for Delimiter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Delimiter::Tab => "tab",
            Delimiter::Comma => "comma",
            Delimiter::Colons => "colons",
            Delimiter::Whitespace => "ws",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    User,
    Item,
    Rating,
    Timestamp,
    /// A field that is read but ignored.
    Skip,
}

/// Layout of one interaction log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogFormat {
    pub delimiter: Delimiter,
    pub columns: Vec<Column>,
    /// Leading lines to ignore.
    pub header_lines: usize,
    /// Accept lines with more fields than `columns` describes.
    pub allow_extra: bool,
}

impl LogFormat {
    /// Parses a column spec such as `user,item,rating,ts`. `_` marks an ignored field and a
    /// trailing `...` lets lines carry extra fields.
    pub fn new(delimiter: Delimiter, columns: &str) -> FormatResult<Self> {
        let mut cols = Vec::new();
        let mut allow_extra = false;
        let names: Vec<&str> = columns.split(',').map(str::trim).collect();
        for (n, name) in names.iter().enumerate() {
            let col = match *name {
                "user" => Column::User,
                "item" => Column::Item,
                "rating" => Column::Rating,
                "ts" | "timestamp" => Column::Timestamp,
                "_" => Column::Skip,
                "..." if n + 1 == names.len() => {
                    allow_extra = true;
                    continue;
                }
                other => return Err(FormatError::Invalid(format!("unknown column `{other}` in `{columns}`"))),
            };
            cols.push(col);
        }
        for (col, max) in [(Column::User, 1), (Column::Item, 1), (Column::Rating, 1), (Column::Timestamp, 1)] {
            let count = cols.iter().filter(|&&c| c == col).count();
            if count > max || (count == 0 && matches!(col, Column::User | Column::Item)) {
                return Err(FormatError::Invalid(format!("column spec `{columns}` needs exactly one user and one item column, and at most one rating and ts")));
            }
        }
        Ok(Self { delimiter, columns: cols, header_lines: 0, allow_extra })
    }

    pub fn with_header_lines(mut self, n: usize) -> Self {
        self.header_lines = n;
        self
    }

    /// The column spec in the form accepted by [`LogFormat::new`].
    pub fn columns_spec(&self) -> String {
        let mut parts: Vec<&str> = self
            .columns
            .iter()
            .map(|c| match c {
                Column::User => "user",
                Column::Item => "item",
                Column::Rating => "rating",
                Column::Timestamp => "ts",
                Column::Skip => "_",
            })
            .collect();
        if self.allow_extra {
            parts.push("...");
        }
        parts.join(",")
    }

    fn parse_line(&self, line_no: usize, line: &str) -> FormatResult<RawRecord> {
        let fields = self.delimiter.split(line);
        let expected = self.columns.len();
        if fields.len() < expected || (!self.allow_extra && fields.len() != expected) {
            return Err(FormatError::line(line_no, format!("expected {expected} fields, found {}", fields.len())));
        }
        let mut record = RawRecord { user: String::new(), item: String::new(), rating: 1.0, timestamp: None };
        for (col, field) in self.columns.iter().zip(&fields) {
            match col {
                Column::User => record.user = field.to_string(),
                Column::Item => record.item = field.to_string(),
                Column::Rating => {
                    record.rating = field
                        .parse::<f64>()
                        .ok()
                        .filter(|r| r.is_finite())
                        .ok_or_else(|| FormatError::line(line_no, format!("non-numeric rating `{field}`")))?;
                }
                Column::Timestamp => {
                    record.timestamp = Some(
                        field.parse::<i64>().map_err(|_| FormatError::line(line_no, format!("non-integer timestamp `{field}`")))?,
                    );
                }
                Column::Skip => {}
            }
        }
        if record.user.is_empty() || record.item.is_empty() {
            return Err(FormatError::line(line_no, "empty user or item id"));
        }
        Ok(record)
    }
}

/// Reads one record per non-blank line, in file order. Line numbers in errors are 1-based.
pub fn load_interactions<R: BufRead>(reader: R, format: &LogFormat) -> FormatResult<RawInteractions> {
    let mut records = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = n + 1;
        if line_no <= format.header_lines || line.trim().is_empty() {
            continue;
        }
        records.push(format.parse_line(line_no, line.trim_end_matches('\r'))?);
    }
    Ok(RawInteractions { records })
}

pub fn load_interactions_path(path: &Path, format: &LogFormat) -> FormatResult<RawInteractions> {
    let file = File::open(path).map_err(|e| FormatError::io(path, e))?;
    load_interactions(BufReader::new(file), format).map_err(|e| match e {
        FormatError::Line { line, message } => FormatError::Invalid(format!("{}: line {line}: {message}", path.display())),
        other => other,
    })
}
