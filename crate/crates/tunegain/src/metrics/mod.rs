//! Static code metrics: keyword counts, Halstead complexity, and a few
//! structural approximations, extracted per class from source text, plus a
//! feature table that merges them with externally computed metric CSVs.

pub mod lexer;

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coverage::valid_class_id;
use crate::error::{Error, Result};

pub use lexer::{tokenize_java, Token, TokenKind, RESERVED_WORDS};

/// The default counting list: the 50 reserved words plus `true` and `false`.
pub fn default_keyword_list() -> Vec<String> {
    let mut list: Vec<String> = RESERVED_WORDS.iter().map(|s| s.to_string()).collect();
    list.push("true".to_string());
    list.push("false".to_string());
    list
}

/// One keyword per line; blank lines are skipped.
pub fn load_keyword_list(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut list = Vec::new();
    for line in text.lines() {
        let word = line.trim();
        if word.is_empty() {
            continue;
        }
        if list.iter().any(|w| w == word) {
            return Err(Error::DuplicateKeyword(word.to_string()));
        }
        list.push(word.to_string());
    }
    if list.is_empty() {
        return Err(Error::EmptyKeywordList);
    }
    Ok(list)
}

/// Occurrences of each listed word in the token stream, by token text.
/// Comments and literal bodies never contribute (the lexer dropped them).
pub fn keyword_counts(tokens: &[Token], keywords: &[String]) -> Vec<u64> {
    keywords
        .iter()
        .map(|kw| tokens.iter().filter(|t| &t.text == kw).count() as u64)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalsteadMetrics {
    /// n1: distinct operators (keywords, operators, separators).
    pub distinct_operators: u64,
    /// n2: distinct operands (identifiers, literals).
    pub distinct_operands: u64,
    /// N1: total operator occurrences.
    pub total_operators: u64,
    /// N2: total operand occurrences.
    pub total_operands: u64,
    pub vocabulary: u64,
    pub length: u64,
    pub volume: f64,
    pub difficulty: f64,
    pub effort: f64,
    /// Effort / 18, the classic mental-discrimination rate.
    pub time_seconds: f64,
    /// Set when the measures are undefined (no tokens, or no operands).
    pub degenerate: bool,
}

pub fn halstead(tokens: &[Token]) -> HalsteadMetrics {
    let mut distinct_ops: BTreeSet<&str> = BTreeSet::new();
    let mut distinct_opnds: BTreeSet<&str> = BTreeSet::new();
    let mut total_ops = 0u64;
    let mut total_opnds = 0u64;
    for t in tokens {
        match t.kind {
            TokenKind::Keyword | TokenKind::Operator | TokenKind::Separator => {
                distinct_ops.insert(&t.text);
                total_ops += 1;
            }
            TokenKind::Identifier | TokenKind::Literal => {
                distinct_opnds.insert(&t.text);
                total_opnds += 1;
            }
        }
    }
    let n1 = distinct_ops.len() as u64;
    let n2 = distinct_opnds.len() as u64;
    let vocabulary = n1 + n2;
    let length = total_ops + total_opnds;
    if vocabulary == 0 {
        return HalsteadMetrics {
            distinct_operators: 0,
            distinct_operands: 0,
            total_operators: 0,
            total_operands: 0,
            vocabulary: 0,
            length: 0,
            volume: 0.0,
            difficulty: 0.0,
            effort: 0.0,
            time_seconds: 0.0,
            degenerate: true,
        };
    }
    let volume = (length as f64) * (vocabulary as f64).log2();
    let (difficulty, degenerate) = if n2 == 0 {
        (0.0, true)
    } else {
        (
            (n1 as f64 / 2.0) * (total_opnds as f64 / n2 as f64),
            false,
        )
    };
    let effort = difficulty * volume;
    HalsteadMetrics {
        distinct_operators: n1,
        distinct_operands: n2,
        total_operators: total_ops,
        total_operands: total_opnds,
        vocabulary,
        length,
        volume,
        difficulty,
        effort,
        time_seconds: effort / 18.0,
        degenerate,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuralMetrics {
    /// Lines holding at least one token (blank and comment-only lines drop out).
    pub loc: u64,
    /// Branch tokens (`if` `for` `while` `case` `catch` `&&` `||` `?`)
    /// plus one per detected method.
    pub wmc_approx: u64,
    /// `identifier ( ... ) {` openings in the top two brace depths.
    pub method_count: u64,
    /// Deepest brace nesting reached.
    pub max_nesting: u64,
    /// Brace depth went negative or did not return to zero.
    pub unbalanced_braces: bool,
}

pub fn structural_metrics(tokens: &[Token]) -> StructuralMetrics {
    let mut lines: BTreeSet<usize> = BTreeSet::new();
    let mut depth = 0i64;
    let mut max_depth = 0i64;
    let mut unbalanced = false;
    let mut branch_tokens = 0u64;
    let mut method_count = 0u64;
    // brace depth before each token
    let mut depth_before = Vec::with_capacity(tokens.len());

    for t in tokens {
        lines.insert(t.line);
        depth_before.push(depth);
        match t.text.as_str() {
            "{" => {
                depth += 1;
                max_depth = max_depth.max(depth);
            }
            "}" => {
                depth -= 1;
                if depth < 0 {
                    unbalanced = true;
                    depth = 0;
                }
            }
            "if" | "for" | "while" | "case" | "catch" if t.kind == TokenKind::Keyword => {
                branch_tokens += 1;
            }
            "&&" | "||" | "?" if t.kind == TokenKind::Operator => {
                branch_tokens += 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        unbalanced = true;
    }

    for i in 0..tokens.len().saturating_sub(1) {
        if tokens[i].text != ")" || tokens[i + 1].text != "{" {
            continue;
        }
        if !matches!(depth_before[i + 1], 1 | 2) {
            continue;
        }
        // walk back to the matching `(` and require an identifier before it
        let mut balance = 1i64;
        let mut j = i;
        let opener = loop {
            if j == 0 {
                break None;
            }
            j -= 1;
            match tokens[j].text.as_str() {
                ")" => balance += 1,
                "(" => {
                    balance -= 1;
                    if balance == 0 {
                        break Some(j);
                    }
                }
                _ => {}
            }
        };
        if let Some(open) = opener {
            if open > 0 && tokens[open - 1].kind == TokenKind::Identifier {
                method_count += 1;
            }
        }
    }

    StructuralMetrics {
        loc: lines.len() as u64,
        wmc_approx: branch_tokens + method_count,
        method_count,
        max_nesting: max_depth.max(0) as u64,
        unbalanced_braces: unbalanced,
    }
}

pub const HALSTEAD_FEATURES: [&str; 6] = [
    "Vocabulary",
    "Length",
    "Volume",
    "Difficulty",
    "Effort",
    "Time",
];
pub const STRUCTURAL_FEATURES: [&str; 4] = ["loc", "wmc_approx", "method_count", "max_nesting"];

/// Schema of the natively extracted features: one column per keyword, then
/// the six Halstead measures, then the structural approximations.
pub fn native_feature_names(keywords: &[String]) -> Vec<String> {
    let mut names: Vec<String> = keywords.to_vec();
    names.extend(HALSTEAD_FEATURES.iter().map(|s| s.to_string()));
    names.extend(STRUCTURAL_FEATURES.iter().map(|s| s.to_string()));
    names
}

/// Extract the native feature vector for one source text.
pub fn extract_source(source: &str, keywords: &[String]) -> Result<Vec<f64>> {
    let tokens = tokenize_java(source)?;
    let mut values: Vec<f64> = keyword_counts(&tokens, keywords)
        .into_iter()
        .map(|c| c as f64)
        .collect();
    let h = halstead(&tokens);
    values.extend([
        h.vocabulary as f64,
        h.length as f64,
        h.volume,
        h.difficulty,
        h.effort,
        h.time_seconds,
    ]);
    let s = structural_metrics(&tokens);
    values.extend([
        s.loc as f64,
        s.wmc_approx as f64,
        s.method_count as f64,
        s.max_nesting as f64,
    ]);
    Ok(values)
}

// ==================== feature table ====================

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub class_id: String,
    pub values: Vec<f64>,
}

/// A uniform-schema feature dataset: every row shares the same feature
/// names, all values finite, rows sorted by class id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    names: Vec<String>,
    rows: Vec<FeatureVector>,
}

impl FeatureTable {
    pub fn new(names: Vec<String>, mut rows: Vec<FeatureVector>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(Error::DuplicateFeatureName(n.clone()));
            }
        }
        rows.sort_by(|a, b| a.class_id.cmp(&b.class_id));
        for (i, row) in rows.iter().enumerate() {
            if !valid_class_id(&row.class_id) {
                return Err(Error::InvalidClassId(row.class_id.clone()));
            }
            if i > 0 && rows[i - 1].class_id == row.class_id {
                return Err(Error::DuplicateClassId(row.class_id.clone()));
            }
            if row.values.len() != names.len() {
                return Err(Error::RaggedDataset {
                    row: i,
                    expected: names.len(),
                    got: row.values.len(),
                });
            }
            if let Some(col) = row.values.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteFeature {
                    class_id: row.class_id.clone(),
                    feature: names[col].clone(),
                });
            }
        }
        Ok(FeatureTable { names, rows })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn rows(&self) -> &[FeatureVector] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn class_ids(&self) -> Vec<String> {
        self.rows.iter().map(|r| r.class_id.clone()).collect()
    }

    pub fn get(&self, class_id: &str) -> Option<&[f64]> {
        self.rows
            .binary_search_by(|r| r.class_id.as_str().cmp(class_id))
            .ok()
            .map(|i| self.rows[i].values.as_slice())
    }

    /// Merge two tables over the same class set. Column order: self's names,
    /// then names unique to `other`. On a name collision the value from
    /// `other` wins but keeps self's column position.
    pub fn merge(&self, other: &FeatureTable) -> Result<FeatureTable> {
        for row in &self.rows {
            if other.get(&row.class_id).is_none() {
                return Err(Error::ClassSetMismatch(row.class_id.clone()));
            }
        }
        for row in &other.rows {
            if self.get(&row.class_id).is_none() {
                return Err(Error::ClassSetMismatch(row.class_id.clone()));
            }
        }
        let mut names = self.names.clone();
        let new_names: Vec<&String> = other
            .names
            .iter()
            .filter(|n| !self.names.contains(n))
            .collect();
        names.extend(new_names.iter().map(|n| (*n).to_string()));

        let rows = self
            .rows
            .iter()
            .map(|row| {
                let theirs = other.get(&row.class_id).expect("checked above");
                let values = names
                    .iter()
                    .map(|name| {
                        if let Some(j) = other.names.iter().position(|n| n == name) {
                            theirs[j]
                        } else {
                            let i = self.names.iter().position(|n| n == name).expect("own name");
                            row.values[i]
                        }
                    })
                    .collect();
                FeatureVector {
                    class_id: row.class_id.clone(),
                    values,
                }
            })
            .collect();
        FeatureTable::new(names, rows)
    }

    // ==================== csv ====================

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text, path)
    }

    pub fn parse_csv(text: &str, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::malformed(path, 1, "missing header"))?;
        let mut cols = header.split(',');
        if cols.next() != Some("class_id") {
            return Err(Error::malformed(path, 1, "header must start with class_id"));
        }
        let names: Vec<String> = cols.map(|s| s.to_string()).collect();
        if names.is_empty() {
            return Err(Error::malformed(path, 1, "no feature columns"));
        }
        let mut rows = Vec::new();
        for (ix, line) in lines {
            let lineno = ix + 1;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != names.len() + 1 {
                return Err(Error::malformed(
                    path,
                    lineno,
                    format!("expected {} fields, got {}", names.len() + 1, fields.len()),
                ));
            }
            let mut values = Vec::with_capacity(names.len());
            for (col, raw) in fields[1..].iter().enumerate() {
                let v: f64 = raw.parse().map_err(|_| {
                    Error::malformed(
                        path,
                        lineno,
                        format!("non-numeric value `{raw}` in column `{}`", names[col]),
                    )
                })?;
                if !v.is_finite() {
                    return Err(Error::malformed(
                        path,
                        lineno,
                        format!("non-finite value in column `{}`", names[col]),
                    ));
                }
                values.push(v);
            }
            rows.push(FeatureVector {
                class_id: fields[0].to_string(),
                values,
            });
        }
        FeatureTable::new(names, rows)
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        write!(w, "class_id")?;
        for n in &self.names {
            write!(w, ",{n}")?;
        }
        writeln!(w)?;
        for row in &self.rows {
            write!(w, "{}", row.class_id)?;
            for v in &row.values {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).map_err(|e| Error::io(&path, e))?;
        std::fs::write(&path, buf).map_err(|e| Error::io(&path, e))
    }
}

/// Extract native features for every `.java` file under `root`. Class ids
/// are the dot-joined relative paths without the extension.
pub fn extract_dir(root: impl AsRef<Path>, keywords: &[String]) -> Result<FeatureTable> {
    let root = root.as_ref();
    let mut files = Vec::new();
    collect_java_files(root, &mut files)?;
    if files.is_empty() {
        return Err(Error::NoSourcesFound(root.display().to_string()));
    }
    files.sort();
    let mut rows = Vec::with_capacity(files.len());
    for file in &files {
        let source = std::fs::read_to_string(file).map_err(|e| Error::io(file, e))?;
        let rel = file.strip_prefix(root).unwrap_or(file);
        let class_id = class_id_from_path(rel);
        let values = extract_source(&source, keywords)?;
        rows.push(FeatureVector { class_id, values });
    }
    FeatureTable::new(native_feature_names(keywords), rows)
}

fn collect_java_files(dir: &Path, out: &mut Vec<std::path::PathBuf>) -> Result<()> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.is_dir() {
            collect_java_files(&path, out)?;
        } else if path.extension().is_some_and(|e| e == "java") {
            out.push(path);
        }
    }
    Ok(())
}

fn class_id_from_path(rel: &Path) -> String {
    let no_ext = rel.with_extension("");
    let joined = no_ext
        .components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join(".");
    let cleaned: String = joined
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '$' | '-') {
                c
            } else {
                '_'
            }
        })
        .collect();
    if cleaned.is_empty() {
        "_".to_string()
    } else {
        cleaned
    }
}
