use std::path::Path;

use crate::error::Result;

/// Number with 17 significant digits; round-trips every f64.
pub fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// A cell of a CSV row.
pub enum Field {
    Num(f64),
    Int(usize),
    Text(String),
    /// Undefined value, written as an empty field.
    Missing,
}

impl From<f64> for Field {
    fn from(v: f64) -> Self {
        Field::Num(v)
    }
}

impl From<Option<f64>> for Field {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Field::Missing, Field::Num)
    }
}

impl From<usize> for Field {
    fn from(v: usize) -> Self {
        Field::Int(v)
    }
}

impl From<bool> for Field {
    fn from(v: bool) -> Self {
        Field::Int(v as usize)
    }
}

impl From<&str> for Field {
    fn from(v: &str) -> Self {
        Field::Text(v.to_string())
    }
}

/// In-memory CSV table: a `#` comment line, a header row, then data; LF endings.
pub struct Table {
    text: String,
    columns: usize,
}

impl Table {
    pub fn new(comment: &str, header: &[&str]) -> Self {
        let mut text = String::new();
        for line in comment.lines() {
            text.push_str("# ");
            text.push_str(line);
            text.push('\n');
        }
        text.push_str(&header.join(","));
        text.push('\n');
        Self {
            text,
            columns: header.len(),
        }
    }

    pub fn row(&mut self, fields: Vec<Field>) {
        assert_eq!(fields.len(), self.columns, "row width does not match the header");
        let cells: Vec<String> = fields
            .into_iter()
            .map(|f| match f {
                Field::Num(v) => fmt_num(v),
                Field::Int(i) => i.to_string(),
                Field::Text(s) => s,
                Field::Missing => String::new(),
            })
            .collect();
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, &self.text)?;
        Ok(())
    }
}
