//! Concrete configuration files: a flat TOML table of `name = value`.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use violet_core::lang::Value;

pub fn parse_config(text: &str) -> Result<BTreeMap<String, Value>> {
    let table: toml::Table = text.parse().context("not a TOML table")?;
    let mut out = BTreeMap::new();
    for (k, v) in table {
        let value = match v {
            toml::Value::Boolean(b) => Value::Bool(b),
            toml::Value::Integer(i) => Value::Int(i),
            toml::Value::String(s) => Value::Enum(s),
            other => bail!("`{k}`: unsupported value `{other}`; use a boolean, integer or enum member string"),
        };
        out.insert(k, value);
    }
    Ok(out)
}

pub fn load_config(path: &Path) -> Result<BTreeMap<String, Value>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_tables() {
        let c = parse_config("autocommit = true\nflush = 2\nmode = \"ROW\"\n").unwrap();
        assert_eq!(c["autocommit"], Value::Bool(true));
        assert_eq!(c["flush"], Value::Int(2));
        assert_eq!(c["mode"], Value::Enum("ROW".into()));
        assert!(parse_config("x = 1.5").is_err());
        assert!(parse_config("x = ").is_err());
    }
}
