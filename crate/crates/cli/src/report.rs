use std::fmt::Write as _;

use clap::ValueEnum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Emit {
    /// Aligned plain-text lines and tables.
    #[default]
    Text,
    /// One `key=value` record per line.
    Records,
}

fn quote(v: &str) -> String {
    if v.is_empty() || v.chars().any(|c| c.is_whitespace() || c == '=' || c == '"') {
        format!("\"{}\"", v.replace('\\', "\\\\").replace('"', "\\\""))
    } else {
        v.to_string()
    }
}

/// Key/value lines followed by an optional table.
#[derive(Debug, Default)]
pub struct Report {
    fields: Vec<(String, String)>,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Report {
    pub fn field(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.fields.push((key.to_string(), value.to_string()));
        self
    }

    pub fn columns(&mut self, names: &[&str]) -> &mut Self {
        self.columns = names.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn row(&mut self, cells: Vec<String>) -> &mut Self {
        self.rows.push(cells);
        self
    }

    pub fn render(&self, emit: Emit) -> String {
        let mut out = String::new();
        match emit {
            Emit::Text => {
                let key_width = self.fields.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
                for (k, v) in &self.fields {
                    let _ = writeln!(out, "{k:key_width$}  {v}");
                }
                if !self.columns.is_empty() {
                    let mut widths: Vec<usize> = self.columns.iter().map(String::len).collect();
                    for r in &self.rows {
                        for (w, c) in widths.iter_mut().zip(r) {
                            *w = (*w).max(c.len());
                        }
                    }
                    let line = |cells: &[String]| {
                        let padded: Vec<String> = cells
                            .iter()
                            .zip(&widths)
                            .map(|(c, &w)| format!("{c:w$}"))
                            .collect();
                        padded.join("  ").trim_end().to_string()
                    };
                    if !self.fields.is_empty() {
                        out.push('\n');
                    }
                    let _ = writeln!(out, "{}", line(&self.columns));
                    for r in &self.rows {
                        let _ = writeln!(out, "{}", line(r));
                    }
                }
            }
            Emit::Records => {
                for (k, v) in &self.fields {
                    let _ = writeln!(out, "{k}={}", quote(v));
                }
                for r in &self.rows {
                    let rec: Vec<String> = self
                        .columns
                        .iter()
                        .zip(r)
                        .map(|(k, v)| format!("{k}={}", quote(v)))
                        .collect();
                    let _ = writeln!(out, "{}", rec.join(" "));
                }
            }
        }
        out
    }
}
