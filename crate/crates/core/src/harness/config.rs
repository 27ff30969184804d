//! Flat `key = value` configuration files and the arithmetic rules they carry.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use evalexpr::{
    build_operator_tree, ContextWithMutableFunctions, ContextWithMutableVariables, DefaultNumericTypes, Function,
    HashMapContext, Node, Value,
};

use crate::error::{Error, Result};

/// Ordered key/value pairs, remembering the line each key came from.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigMap {
    pub entries: BTreeMap<String, String>,
    pub lines: BTreeMap<String, usize>,
}

impl ConfigMap {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn insert(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), value.into());
    }

    pub fn line(&self, key: &str) -> usize {
        self.lines.get(key).copied().unwrap_or(0)
    }

    /// One `key = value` line per entry, sorted by key.
    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

/// Parses `key = value` lines. Blank lines and `#` comments are skipped; a
/// `#` also starts a trailing comment.
pub fn parse_config_text(text: &str, path: &Path) -> Result<ConfigMap> {
    let mut map = ConfigMap::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let Some((k, v)) = body.split_once('=') else {
            return Err(err(format!("expected `key = value`, found `{body}`")));
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || !k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(err(format!("invalid key `{k}`")));
        }
        if v.is_empty() {
            return Err(err(format!("missing value for `{k}`")));
        }
        if map.entries.contains_key(k) {
            return Err(err(format!("duplicate key `{k}`")));
        }
        map.entries.insert(k.to_string(), v.to_string());
        map.lines.insert(k.to_string(), line);
    }
    Ok(map)
}

pub fn read_config_map(path: &Path) -> Result<ConfigMap> {
    let text = std::fs::read_to_string(path)?;
    parse_config_text(&text, path)
}

/// Arithmetic expression over `n` (dimension), `i` (1-based eigen index) and
/// `c` (swept parameter).
///
/// Integer literals are read as floats, so `n^(3/4)` means what it says.
/// Besides the `evalexpr` builtins, `sqrt`, `ln`, `floor`, `ceil`, `abs`
/// and the constant `pi` are available.
#[derive(Clone)]
pub struct Rule {
    text: String,
    node: Node<DefaultNumericTypes>,
}

impl Rule {
    pub fn parse(text: &str) -> Result<Self> {
        let node = build_operator_tree::<DefaultNumericTypes>(&floatify(text))
            .map_err(|e| Error::Config(format!("cannot parse rule `{text}`: {e}")))?;
        Ok(Self {
            text: text.trim().to_string(),
            node,
        })
    }

    pub fn constant(value: f64) -> Self {
        Self::parse(&format!("{value:?}")).expect("float literal parses")
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn eval(&self, n: usize, i: usize, c: f64) -> Result<f64> {
        let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
        let set = |ctx: &mut HashMapContext, k: &str, v: f64| {
            ctx.set_value(k.into(), Value::Float(v)).expect("variables are writable");
        };
        set(&mut ctx, "n", n as f64);
        set(&mut ctx, "i", i as f64);
        set(&mut ctx, "c", c);
        set(&mut ctx, "pi", std::f64::consts::PI);
        for (name, f) in [
            ("sqrt", f64::sqrt as fn(f64) -> f64),
            ("ln", f64::ln),
            ("floor", f64::floor),
            ("ceil", f64::ceil),
            ("abs", f64::abs),
        ] {
            ctx.set_function(
                name.into(),
                Function::new(move |arg: &Value| Ok(Value::Float(f(arg.as_number()?)))),
            )
            .expect("functions are writable");
        }
        let v = self
            .node
            .eval_number_with_context(&ctx)
            .map_err(|e| Error::Config(format!("rule `{}` at n={n}, i={i}, c={c}: {e}", self.text)))?;
        if !v.is_finite() {
            return Err(Error::Config(format!("rule `{}` is not finite at n={n}, c={c}", self.text)));
        }
        Ok(v)
    }
}

impl PartialEq for Rule {
    fn eq(&self, other: &Self) -> bool {
        self.text == other.text
    }
}

impl fmt::Debug for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Rule({:?})", self.text)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// Appends `.0` to bare integer literals.
fn floatify(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len() + 8);
    let mut k = 0;
    while k < chars.len() {
        let c = chars[k];
        let starts_number = c.is_ascii_digit()
            && (k == 0 || !(chars[k - 1].is_ascii_alphanumeric() || chars[k - 1] == '_' || chars[k - 1] == '.'));
        if !starts_number {
            out.push(c);
            k += 1;
            continue;
        }
        let start = k;
        while k < chars.len() && chars[k].is_ascii_digit() {
            k += 1;
        }
        out.extend(&chars[start..k]);
        let next = chars.get(k).copied();
        if !matches!(next, Some('.') | Some('e') | Some('E')) {
            out.push_str(".0");
        }
    }
    out
}
