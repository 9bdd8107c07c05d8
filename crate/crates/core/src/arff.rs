//! Minimal reader for the dense ARFF files used by ASLib scenarios.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum AttributeKind {
    Numeric,
    Text,
    Nominal(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attribute {
    pub name: String,
    pub kind: AttributeKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Text(String),
    Missing,
}

impl Value {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Number(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Row {
    /// 1-based line number in the source file.
    pub line: usize,
    pub values: Vec<Value>,
}

#[derive(Debug, Clone)]
pub struct ArffFile {
    pub path: PathBuf,
    pub relation: String,
    pub attributes: Vec<Attribute>,
    pub rows: Vec<Row>,
}

impl ArffFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::MissingFile {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        parse(path, &text)
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.attributes
            .iter()
            .position(|a| a.name.eq_ignore_ascii_case(name))
    }

    pub(crate) fn error(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line,
            message: message.into(),
        }
    }
}

/// Splits on top-level delimiters, honouring single and double quotes and
/// `{...}` groups. Quotes are stripped from the returned tokens.
fn split_fields(line: &str, delim: char) -> std::result::Result<Vec<String>, String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quote: Option<char> = None;
    let mut braces = 0usize;
    let mut chars = line.chars();
    while let Some(c) = chars.next() {
        match quote {
            Some(q) => {
                if c == '\\' {
                    if let Some(next) = chars.next() {
                        cur.push(next);
                    }
                } else if c == q {
                    quote = None;
                } else {
                    cur.push(c);
                }
            }
            None => match c {
                '\'' | '"' => quote = Some(c),
                '{' => {
                    braces += 1;
                    cur.push(c);
                }
                '}' => {
                    braces = braces.saturating_sub(1);
                    cur.push(c);
                }
                c if c == delim && braces == 0 => {
                    out.push(cur.trim().to_string());
                    cur.clear();
                }
                c => cur.push(c),
            },
        }
    }
    if quote.is_some() {
        return Err("unterminated quote".into());
    }
    out.push(cur.trim().to_string());
    Ok(out)
}

fn parse_attribute(rest: &str) -> std::result::Result<Attribute, String> {
    let rest = rest.trim();
    let (name, kind) = if let Some(stripped) = rest.strip_prefix(['\'', '"']) {
        let q = rest.chars().next().unwrap();
        let end = stripped.find(q).ok_or("unterminated attribute name")?;
        (stripped[..end].to_string(), stripped[end + 1..].trim())
    } else {
        let mut it = rest.splitn(2, char::is_whitespace);
        let name = it.next().unwrap_or_default().to_string();
        (name, it.next().unwrap_or("").trim())
    };
    if name.is_empty() || kind.is_empty() {
        return Err(format!("malformed @attribute declaration: {rest}"));
    }
    let kind = if kind.starts_with('{') {
        let inner = kind
            .strip_prefix('{')
            .and_then(|s| s.strip_suffix('}'))
            .ok_or("malformed nominal attribute")?;
        AttributeKind::Nominal(split_fields(inner, ',')?)
    } else {
        match kind.to_ascii_lowercase().as_str() {
            "numeric" | "real" | "integer" => AttributeKind::Numeric,
            "string" => AttributeKind::Text,
            other if other.starts_with("date") => AttributeKind::Text,
            other => return Err(format!("unsupported attribute type {other}")),
        }
    };
    Ok(Attribute { name, kind })
}

pub fn parse(path: &Path, text: &str) -> Result<ArffFile> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut relation = String::new();
    let mut attributes = Vec::new();
    let mut rows = Vec::new();
    let mut in_data = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if !in_data {
            let lower = line.to_ascii_lowercase();
            if lower.starts_with("@relation") {
                relation = line[9..].trim().trim_matches(['\'', '"']).to_string();
            } else if lower.starts_with("@attribute") {
                attributes.push(parse_attribute(&line[10..]).map_err(|m| err(line_no, m))?);
            } else if lower.starts_with("@data") {
                in_data = true;
            } else {
                return Err(err(line_no, format!("unexpected header line: {line}")));
            }
            continue;
        }
        if line.starts_with('{') {
            return Err(err(line_no, "sparse ARFF rows are not supported".into()));
        }
        let fields = split_fields(line, ',').map_err(|m| err(line_no, m))?;
        if fields.len() != attributes.len() {
            return Err(err(
                line_no,
                format!("expected {} values, found {}", attributes.len(), fields.len()),
            ));
        }
        let values = fields
            .into_iter()
            .zip(&attributes)
            .map(|(field, attr)| {
                if field == "?" {
                    return Ok(Value::Missing);
                }
                match attr.kind {
                    AttributeKind::Numeric => field
                        .parse::<f64>()
                        .map(Value::Number)
                        .map_err(|_| err(line_no, format!("{}: not a number: {field}", attr.name))),
                    _ => Ok(Value::Text(field)),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(Row { line: line_no, values });
    }
    if !in_data {
        return Err(err(text.lines().count().max(1), "missing @data section".into()));
    }
    Ok(ArffFile {
        path: path.to_path_buf(),
        relation,
        attributes,
        rows,
    })
}
