//! CSV tables: header row, comma separated, 9 significant digits, LF endings.

use cvqkd::format::sig9;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

pub fn num(x: f64) -> String {
    sig9(x)
}

pub fn flag(b: bool) -> String {
    if b { "1" } else { "0" }.into()
}

/// Free text made safe for an unquoted CSV cell.
pub fn text(s: &str) -> String {
    s.chars().map(|c| if matches!(c, ',' | '\n' | '\r' | '"') { ';' } else { c }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_text() {
        let mut t = Table::new(["a", "b"]);
        t.push(vec![num(0.5), text("x, y")]);
        assert_eq!(t.to_csv(), "a,b\n0.500000000,x; y\n");
        assert_eq!(t.len(), 1);
    }
}
