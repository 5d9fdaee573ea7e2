//! Plain-text reports in the same `[section]` / `key = value` layout as the
//! configuration, so [`super::ini::parse_ini`] reads them back.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::csv::format_value;
use crate::error::Result;

#[derive(Clone, Debug, Default)]
pub struct Report {
    text: String,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn section(&mut self, name: &str) -> &mut Self {
        if !self.text.is_empty() {
            self.text.push('\n');
        }
        let _ = writeln!(self.text, "[{name}]");
        self
    }

    pub fn text(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        let _ = writeln!(self.text, "{key} = {value}");
        self
    }

    pub fn num(&mut self, key: &str, value: f64) -> &mut Self {
        self.text(key, format_value(value))
    }

    /// `none` when absent.
    pub fn opt(&mut self, key: &str, value: Option<f64>) -> &mut Self {
        match value {
            Some(v) => self.num(key, v),
            None => self.text(key, "none"),
        }
    }

    pub fn flag(&mut self, key: &str, value: bool) -> &mut Self {
        self.text(key, value)
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, &self.text)?;
        Ok(())
    }
}

/// Hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Inputs, code version and config hash of one command invocation.
pub fn manifest(command: &str, config_text: &str, inputs: &[(&str, String)]) -> Report {
    let mut r = Report::new();
    r.section("manifest")
        .text("command", command)
        .text("version", env!("CARGO_PKG_VERSION"))
        .text("config_sha256", sha256_hex(config_text.as_bytes()));
    r.section("inputs");
    for (k, v) in inputs {
        r.text(k, v);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::ini::parse_ini;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn reports_parse_back() {
        let mut r = Report::new();
        r.section("a").num("x", 0.1).opt("y", None).flag("ok", true);
        r.section("b").text("label", "outside theorem hypotheses");
        let doc = parse_ini(r.as_str()).unwrap();
        let a = doc.section("a").unwrap();
        assert_eq!(a.get("x").unwrap().unwrap().value.parse::<f64>().unwrap(), 0.1);
        assert_eq!(a.get("y").unwrap().unwrap().value, "none");
        assert_eq!(doc.section("b").unwrap().entries.len(), 1);
    }

    #[test]
    fn manifest_hashes_config() {
        let m = manifest("simulate", "[fluid]\n", &[("config", "x.ini".into())]);
        let doc = parse_ini(m.as_str()).unwrap();
        let s = doc.section("manifest").unwrap();
        assert_eq!(s.get("config_sha256").unwrap().unwrap().value, sha256_hex(b"[fluid]\n"));
    }
}
