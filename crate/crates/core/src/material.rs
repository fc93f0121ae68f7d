//! Material catalog standing in for the simulator's material library.
//!
//! ```text
//! material FR-4 (lossy)
//!   type: normal
//!   epsilon: 4.3
//!   tan_delta: 0.025
//! ```

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use crate::text::{key_value, strip_comment};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaterialKind {
    Conductor { conductivity: f64 },
    Normal { epsilon_r: f64, tan_delta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialRecord {
    pub name: String,
    pub kind: MaterialKind,
}

impl MaterialRecord {
    pub fn is_conductor(&self) -> bool {
        matches!(self.kind, MaterialKind::Conductor { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatalogError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("unknown material `{name}`{}", suggest(.nearest))]
    UnknownMaterial { name: String, nearest: Vec<String> },
}

fn suggest(nearest: &[String]) -> String {
    if nearest.is_empty() {
        String::new()
    } else {
        format!(" (did you mean {}?)", nearest.join(", "))
    }
}

/// The catalog shipped with the crate.
pub const DEFAULT_CATALOG: &str = include_str!("../data/materials.catalog");

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Catalog {
    records: Vec<MaterialRecord>,
}

impl Catalog {
    pub fn parse(text: &str) -> Result<Catalog, CatalogError> {
        struct Draft {
            line: usize,
            name: String,
            kind: Option<String>,
            values: Vec<(usize, String, f64)>,
        }
        let err = |line: usize, message: String| CatalogError::Format { line, message };
        let mut drafts: Vec<Draft> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix("material ") {
                drafts.push(Draft {
                    line: line_no,
                    name: name.trim().to_string(),
                    kind: None,
                    values: Vec::new(),
                });
                continue;
            }
            let draft = drafts
                .last_mut()
                .ok_or_else(|| err(line_no, "field outside of a material block".into()))?;
            let (key, value) =
                key_value(line).ok_or_else(|| err(line_no, "expected `key: value`".into()))?;
            match key {
                "type" => draft.kind = Some(value.to_string()),
                "epsilon" | "tan_delta" | "conductivity" => {
                    let v: f64 = value
                        .parse()
                        .map_err(|_| err(line_no, format!("bad number `{value}`")))?;
                    draft.values.push((line_no, key.to_string(), v));
                }
                _ => return Err(err(line_no, format!("unknown field `{key}`"))),
            }
        }

        let mut records: Vec<MaterialRecord> = Vec::with_capacity(drafts.len());
        for d in drafts {
            if records.iter().any(|r| r.name == d.name) {
                return Err(err(d.line, format!("duplicate material `{}`", d.name)));
            }
            let get = |k: &str| d.values.iter().find(|(_, key, _)| key == k).map(|(_, _, v)| *v);
            let kind = match d.kind.as_deref() {
                Some("conductor") => {
                    let conductivity = get("conductivity")
                        .ok_or_else(|| err(d.line, "conductor needs `conductivity`".into()))?;
                    if !(conductivity > 0.0) {
                        return Err(err(d.line, "conductivity must be positive".into()));
                    }
                    MaterialKind::Conductor { conductivity }
                }
                Some("normal") => {
                    let epsilon_r = get("epsilon")
                        .ok_or_else(|| err(d.line, "normal material needs `epsilon`".into()))?;
                    let tan_delta = get("tan_delta").unwrap_or(0.0);
                    if !(epsilon_r >= 1.0) || !(tan_delta >= 0.0) {
                        return Err(err(d.line, "need epsilon >= 1 and tan_delta >= 0".into()));
                    }
                    MaterialKind::Normal {
                        epsilon_r,
                        tan_delta,
                    }
                }
                other => {
                    return Err(err(
                        d.line,
                        format!("unknown material type {:?}", other.unwrap_or("")),
                    ))
                }
            };
            records.push(MaterialRecord { name: d.name, kind });
        }
        Ok(Catalog { records })
    }

    /// Parses [`DEFAULT_CATALOG`].
    pub fn builtin() -> Catalog {
        Catalog::parse(DEFAULT_CATALOG).expect("shipped catalog parses")
    }

    pub fn lookup(&self, name: &str) -> Result<&MaterialRecord, CatalogError> {
        self.records
            .iter()
            .find(|r| r.name == name)
            .ok_or_else(|| CatalogError::UnknownMaterial {
                name: name.to_string(),
                nearest: self.nearest(name, 3),
            })
    }

    /// Sorted, unique names.
    pub fn names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.records.iter().map(|r| r.name.clone()).collect();
        names.sort();
        names
    }

    /// Records in file order.
    pub fn records(&self) -> &[MaterialRecord] {
        &self.records
    }

    fn nearest(&self, name: &str, k: usize) -> Vec<String> {
        let mut scored: Vec<(usize, &str)> = self
            .records
            .iter()
            .map(|r| (edit_distance(&name.to_lowercase(), &r.name.to_lowercase()), r.name.as_str()))
            .collect();
        scored.sort();
        scored.into_iter().take(k).map(|(_, n)| n.to_string()).collect()
    }
}

fn edit_distance(a: &str, b: &str) -> usize {
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.chars().enumerate() {
        let mut cur = Vec::with_capacity(b.len() + 1);
        cur.push(i + 1);
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != *cb);
            cur.push(sub.min(prev[j + 1] + 1).min(cur[j] + 1));
        }
        prev = cur;
    }
    prev[b.len()]
}
