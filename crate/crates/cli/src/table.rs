//! CSV output with a `#` metadata header that embeds the resolved config.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::config::{Command, Config};
use crate::error::CliError;

const CONFIG_BEGIN: &str = "# config-begin";
const CONFIG_END: &str = "# config-end";

/// Floats get 17 significant digits so every value round-trips.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(x) => fmt_float(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::Int(n)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as u64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

/// Metadata block shared by every file a command writes.
pub fn header(command: Command, cfg: &Config) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# ide-persist {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "# command: {}", command.name());
    let _ = writeln!(out, "# seed: {}", cfg.numerics.seed);
    out.push_str(CONFIG_BEGIN);
    out.push('\n');
    for line in cfg.reproducible_toml().lines() {
        if line.is_empty() {
            out.push_str("#\n");
        } else {
            let _ = writeln!(out, "# {line}");
        }
    }
    out.push_str(CONFIG_END);
    out.push('\n');
    out
}

#[derive(Debug, Clone)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self, header: &str) -> String {
        let mut out = String::from(header);
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path, header: &str) -> Result<(), CliError> {
        fs::write(path, self.render(header)).map_err(CliError::io(path))
    }
}

/// Command and config recovered from a file written by this tool.
#[derive(Debug, Clone)]
pub struct Provenance {
    pub command: Command,
    pub config_toml: String,
}

pub fn read_provenance(text: &str, origin: &str) -> Result<Provenance, CliError> {
    let bad = |what: &str| CliError::Config(format!("{origin}: {what}"));
    let mut command = None;
    let mut config = None;
    let mut lines = text.lines();
    while let Some(line) = lines.next() {
        if !line.starts_with('#') {
            break;
        }
        if let Some(name) = line.strip_prefix("# command: ") {
            command = Some(
                Command::from_name(name.trim())
                    .ok_or_else(|| bad(&format!("unknown command `{name}`")))?,
            );
        } else if line == CONFIG_BEGIN {
            let mut body = String::new();
            loop {
                let line = lines
                    .next()
                    .ok_or_else(|| bad("config block is not terminated"))?;
                if line == CONFIG_END {
                    break;
                }
                let content = line
                    .strip_prefix("# ")
                    .or_else(|| line.strip_prefix('#'))
                    .ok_or_else(|| bad("config block line without '#'"))?;
                body.push_str(content);
                body.push('\n');
            }
            config = Some(body);
        }
    }
    Ok(Provenance {
        command: command.ok_or_else(|| bad("no `# command:` line"))?,
        config_toml: config.ok_or_else(|| bad("no embedded config block"))?,
    })
}

/// Columns and numeric rows of a CSV written by [`Table::render`].
pub fn parse_numeric(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), String> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let columns: Vec<String> = lines
        .next()
        .ok_or("missing column header")?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| {
            l.split(',')
                .map(|c| c.parse::<f64>().map_err(|e| format!("{c}: {e}")))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((columns, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_carry_seventeen_significant_digits() {
        for x in [0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 0.0] {
            let s = fmt_float(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
            let mantissa = s
                .split('e')
                .next()
                .unwrap()
                .trim_start_matches('-')
                .replace('.', "");
            assert_eq!(mantissa.len(), 17, "{s}");
        }
    }

    #[test]
    fn provenance_round_trips() {
        let cfg = Config::defaults(Command::LambdaSweep);
        let mut t = Table::new(["a", "b"]);
        t.push(vec![1.5.into(), 2usize.into()]);
        let text = t.render(&header(Command::LambdaSweep, &cfg));
        let p = read_provenance(&text, "t").unwrap();
        assert_eq!(p.command, Command::LambdaSweep);
        assert_eq!(p.config_toml, cfg.reproducible_toml());
        let (cols, rows) = parse_numeric(&text).unwrap();
        assert_eq!(cols, ["a", "b"]);
        assert_eq!(rows, vec![vec![1.5, 2.0]]);
    }

    #[test]
    fn missing_block_is_a_config_error() {
        let err = read_provenance("# command: eigen\nx\n1\n", "f.csv").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
