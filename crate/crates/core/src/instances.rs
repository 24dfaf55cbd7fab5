//! Benchmark instance groups and the `VSBPP 1` text format.
//!
//! ```text
//! VSBPP 1
//! bins <n>
//! <B_1> <B_2> ... <B_n>
//! items <m>
//! <w_1> <w_2> ... <w_m>
//! ```

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::validate_instance;
use crate::model::{BinTypeTable, Instance, ModelError, RawInstance};

pub const G1_SIZES: [usize; 9] = [3, 5, 10, 15, 30, 100, 200, 500, 1000];
pub const G3_SIZES: [usize; 8] = [100, 200, 500, 1000, 5000, 10000, 50000, 100000];
pub const G1_G3_BINS: [u64; 3] = [300, 200, 100];
pub const G2_BINS: [u64; 4] = [40, 30, 20, 10];

/// `(weight, multiplicity)` pairs of the five hand-specified instances.
const G2A: &[(u64, usize)] = &[(2, 250), (5, 150), (11, 150), (14, 150), (15, 150), (20, 150)];
const G2B: &[(u64, usize)] = &[(7, 200), (10, 200), (12, 200), (14, 200), (15, 200)];
const G2C: &[(u64, usize)] =
    &[(2, 100), (4, 100), (5, 100), (8, 100), (9, 100), (13, 100), (15, 100), (16, 100), (18, 100), (20, 100)];
const G2D: &[(u64, usize)] = &[
    (1, 150),
    (3, 50),
    (4, 100),
    (5, 50),
    (7, 100),
    (9, 50),
    (10, 50),
    (11, 50),
    (12, 50),
    (13, 100),
    (15, 50),
    (16, 50),
    (18, 100),
    (20, 50),
];
const G2E: &[(u64, usize)] = &[(3, 500), (11, 500)];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Group {
    G1,
    G2a,
    G2b,
    G2c,
    G2d,
    G2e,
    G3,
}

impl Group {
    pub const G2: [Group; 5] = [Group::G2a, Group::G2b, Group::G2c, Group::G2d, Group::G2e];

    fn multiset(self) -> Option<&'static [(u64, usize)]> {
        match self {
            Group::G2a => Some(G2A),
            Group::G2b => Some(G2B),
            Group::G2c => Some(G2C),
            Group::G2d => Some(G2D),
            Group::G2e => Some(G2E),
            Group::G1 | Group::G3 => None,
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::G1 => "G1",
            Group::G2a => "G2a",
            Group::G2b => "G2b",
            Group::G2c => "G2c",
            Group::G2d => "G2d",
            Group::G2e => "G2e",
            Group::G3 => "G3",
        })
    }
}

impl FromStr for Group {
    type Err = GenerateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "g1" => Group::G1,
            "g2a" => Group::G2a,
            "g2b" => Group::G2b,
            "g2c" => Group::G2c,
            "g2d" => Group::G2d,
            "g2e" => Group::G2e,
            "g3" => Group::G3,
            _ => return Err(GenerateError::UnknownGroup(s.to_string())),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupSpec {
    pub group: Group,
    /// Item count; fixed at 1000 for the G2 variants.
    pub m: usize,
    pub seed: u64,
}

impl GroupSpec {
    pub fn new(group: Group, m: usize, seed: u64) -> Self {
        Self { group, m, seed }
    }

    /// Short instance name, e.g. `G3-5000-s42` or `G2a`.
    pub fn name(&self) -> String {
        match self.group {
            Group::G1 | Group::G3 => format!("{}-{}-s{}", self.group, self.m, self.seed),
            g => g.to_string(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenerateError {
    #[error("unknown group `{0}` (expected G1, G2a..G2e or G3)")]
    UnknownGroup(String),
    #[error("group {group} does not define m = {m}")]
    BadM { group: Group, m: usize },
}

pub fn generate_instance(spec: &GroupSpec) -> Result<Instance, GenerateError> {
    let (weights, bins) = match spec.group.multiset() {
        Some(multiset) => {
            if spec.m != 1000 {
                return Err(GenerateError::BadM { group: spec.group, m: spec.m });
            }
            let weights = multiset.iter().flat_map(|&(w, n)| std::iter::repeat_n(w, n)).collect();
            (weights, G2_BINS.to_vec())
        }
        None => {
            let sizes: &[usize] = if spec.group == Group::G1 { &G1_SIZES } else { &G3_SIZES };
            if !sizes.contains(&spec.m) {
                return Err(GenerateError::BadM { group: spec.group, m: spec.m });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let weights = (0..spec.m).map(|_| rng.random_range(1..=20u64)).collect();
            (weights, G1_G3_BINS.to_vec())
        }
    };
    Ok(Instance::new(weights, bins).expect("group definitions are valid instances"))
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatError {
    #[error("line {line}, column {column}: unsupported format version `{version}`")]
    UnsupportedVersion { line: usize, column: usize, version: String },
    #[error("line {line}, column {column}: expected {expected}, found `{found}`")]
    Unexpected { line: usize, column: usize, expected: String, found: String },
    #[error("unexpected end of input, expected {expected}")]
    UnexpectedEof { expected: String },
    #[error("line {line}, column {column}: trailing data `{found}`")]
    Trailing { line: usize, column: usize, found: String },
}

#[derive(Debug, Error)]
pub enum InstanceFileError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Invalid(#[from] ModelError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

struct Token<'a> {
    text: &'a str,
    line: usize,
    column: usize,
}

struct Tokens<'a> {
    inner: std::vec::IntoIter<Token<'a>>,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let mut tokens = Vec::new();
        for (line_no, line) in text.lines().enumerate() {
            let mut rest = line;
            let mut offset = 0;
            while let Some(start) = rest.find(|c: char| !c.is_ascii_whitespace()) {
                let len = rest[start..].find(|c: char| c.is_ascii_whitespace()).unwrap_or(rest.len() - start);
                tokens.push(Token { text: &rest[start..start + len], line: line_no + 1, column: offset + start + 1 });
                offset += start + len;
                rest = &rest[start + len..];
            }
        }
        Self { inner: tokens.into_iter() }
    }

    fn next(&mut self, expected: &str) -> Result<Token<'a>, FormatError> {
        self.inner.next().ok_or_else(|| FormatError::UnexpectedEof { expected: expected.to_string() })
    }

    fn keyword(&mut self, word: &str) -> Result<Token<'a>, FormatError> {
        let tok = self.next(&format!("`{word}`"))?;
        if tok.text != word {
            return Err(unexpected(&tok, &format!("`{word}`")));
        }
        Ok(tok)
    }

    fn number(&mut self, what: &str) -> Result<u64, FormatError> {
        let tok = self.next(what)?;
        if !tok.text.bytes().all(|b| b.is_ascii_digit()) {
            return Err(unexpected(&tok, what));
        }
        tok.text.parse().map_err(|_| unexpected(&tok, what))
    }
}

fn unexpected(tok: &Token<'_>, expected: &str) -> FormatError {
    FormatError::Unexpected {
        line: tok.line,
        column: tok.column,
        expected: expected.to_string(),
        found: tok.text.to_string(),
    }
}

pub fn parse_instance_str(text: &str) -> Result<Instance, InstanceFileError> {
    let mut tokens = Tokens::new(text);
    tokens.keyword("VSBPP")?;
    let version = tokens.next("format version")?;
    if version.text != "1" {
        return Err(FormatError::UnsupportedVersion {
            line: version.line,
            column: version.column,
            version: version.text.to_string(),
        }
        .into());
    }
    tokens.keyword("bins")?;
    let n = tokens.number("bin type count")?;
    let capacities = (0..n).map(|_| tokens.number("bin capacity")).collect::<Result<Vec<_>, _>>()?;
    tokens.keyword("items")?;
    let m = tokens.number("item count")?;
    let weights = (0..m).map(|_| tokens.number("item weight")).collect::<Result<Vec<_>, _>>()?;
    if let Some(tok) = tokens.inner.next() {
        return Err(FormatError::Trailing { line: tok.line, column: tok.column, found: tok.text.to_string() }.into());
    }
    let bin_types = BinTypeTable::new(capacities)?;
    Ok(validate_instance(RawInstance { weights, bin_types })?)
}

pub fn parse_instance(path: impl AsRef<Path>) -> Result<Instance, InstanceFileError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| InstanceFileError::Io { path: path.display().to_string(), source })?;
    parse_instance_str(&text)
}

fn join(values: impl Iterator<Item = u64>) -> String {
    let mut out = String::new();
    for (i, v) in values.enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{v}");
    }
    out
}

pub fn format_instance(instance: &Instance) -> String {
    let caps = instance.bin_types().capacities();
    format!(
        "VSBPP 1\nbins {}\n{}\nitems {}\n{}\n",
        caps.len(),
        join(caps.iter().copied()),
        instance.len(),
        join(instance.weights())
    )
}

pub fn write_instance(instance: &Instance, path: impl AsRef<Path>) -> Result<(), InstanceFileError> {
    let path = path.as_ref();
    std::fs::write(path, format_instance(instance))
        .map_err(|source| InstanceFileError::Io { path: path.display().to_string(), source })
}
