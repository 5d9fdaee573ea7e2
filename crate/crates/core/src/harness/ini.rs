//! Flat `key = value` text with `[section]` headers.
//!
//! `#` and `;` start comment lines; blank lines are ignored; keys are unique
//! within a section unless the caller asks for repeated entries.

use crate::error::{NsvError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IniDocument {
    pub sections: Vec<Section>,
}

fn valid_name(s: &str) -> bool {
    !s.is_empty()
        && s
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')
}

pub fn parse_ini(text: &str) -> Result<IniDocument> {
    let mut doc = IniDocument::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') || s.starts_with(';') {
            continue;
        }
        let err = |msg: String| NsvError::ConfigLine { line, msg };
        if let Some(rest) = s.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err("unterminated section header".into()))?
                .trim();
            if !valid_name(name) {
                return Err(err(format!("invalid section name {name:?}")));
            }
            if doc.sections.iter().any(|sec| sec.name == name) {
                return Err(err(format!("section [{name}] appears twice")));
            }
            doc.sections.push(Section {
                name: name.to_string(),
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = s
            .split_once('=')
            .ok_or_else(|| err("expected `key = value`".into()))?;
        let key = key.trim();
        if !valid_name(key) {
            return Err(err(format!("invalid key {key:?}")));
        }
        let section = doc
            .sections
            .last_mut()
            .ok_or_else(|| err(format!("key {key:?} before any [section]")))?;
        section.entries.push(Entry {
            key: key.to_string(),
            value: value.trim().to_string(),
            line,
        });
    }
    Ok(doc)
}

impl IniDocument {
    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }
}

impl Section {
    /// The single entry for `key`; duplicates are an error.
    pub fn get(&self, key: &str) -> Result<Option<&Entry>> {
        let mut found = self.entries.iter().filter(|e| e.key == key);
        let first = found.next();
        if let Some(dup) = found.next() {
            return Err(NsvError::ConfigLine {
                line: dup.line,
                msg: format!("[{}] {key} given more than once", self.name),
            });
        }
        Ok(first)
    }

    pub fn all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a Entry> + 'a {
        self.entries.iter().filter(move |e| e.key == key)
    }

    /// Rejects keys outside `known`.
    pub fn check_keys(&self, known: &[&str]) -> Result<()> {
        match self.entries.iter().find(|e| !known.contains(&e.key.as_str())) {
            Some(e) => Err(NsvError::ConfigLine {
                line: e.line,
                msg: format!("unknown key {:?} in [{}]", e.key, self.name),
            }),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_comments() {
        let doc = parse_ini("# top\n[a]\nx = 1\n\n; note\n[b]\ny=two words \n").unwrap();
        assert_eq!(doc.sections.len(), 2);
        let b = doc.section("b").unwrap();
        assert_eq!(b.get("y").unwrap().unwrap().value, "two words");
        assert_eq!(b.get("y").unwrap().unwrap().line, 7);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("x = 1\n", 1),
            ("[a]\n[a\n", 2),
            ("[a]\nnovalue\n", 2),
            ("[a]\n\n= 3\n", 3),
            ("[a]\n[a]\n", 2),
        ];
        for (text, want) in cases {
            match parse_ini(text) {
                Err(NsvError::ConfigLine { line, .. }) => assert_eq!(line, want, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn duplicate_and_unknown_keys() {
        let doc = parse_ini("[a]\nx = 1\nx = 2\ny = 3\n").unwrap();
        let a = doc.section("a").unwrap();
        assert!(matches!(a.get("x"), Err(NsvError::ConfigLine { line: 3, .. })));
        assert!(matches!(a.check_keys(&["x"]), Err(NsvError::ConfigLine { line: 4, .. })));
        assert_eq!(a.all("x").count(), 2);
    }
}
