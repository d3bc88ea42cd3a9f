//! Problem descriptions and the `key = value` problem file.
//!
//! ```text
//! # p-Poisson with Dirichlet data
//! kind = poisson-dirichlet
//! p = 2.5
//! boundary = [0, 8]
//! boundary_values = [0.0, 1.0]
//! f = rhs.txt
//! ```
//!
//! `kind` is one of `poisson-dirichlet`, `poisson-neumann`, `eigen`,
//! `capacity`. Eigen problems take `mode = dirichlet` (with `boundary`) or
//! `mode = neumann`. Capacity problems take `K` and `omega`. A missing `f`
//! means the zero field; `f` names a field file resolved by the caller.

use std::collections::BTreeMap;

use crate::calculus::ScalarField;
use crate::{util, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum EigenMode {
    /// `u = 0` on the listed vertices.
    Dirichlet { boundary: Vec<usize> },
    /// Constraint `Σ u|u|^{p-2} m = 0`.
    Neumann,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemKind {
    PoissonDirichlet {
        boundary: Vec<usize>,
        boundary_values: Vec<f64>,
        f: ScalarField,
    },
    PoissonNeumann {
        f: ScalarField,
    },
    Eigen(EigenMode),
    Capacity {
        /// Condenser plate where `u = 1`.
        k: Vec<usize>,
        /// Domain; `u = 0` outside.
        omega: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub p: f64,
    pub kind: ProblemKind,
}

impl ProblemSpec {
    pub fn new(p: f64, kind: ProblemKind) -> Result<Self> {
        util::check_exponent(p)?;
        Ok(Self { p, kind })
    }

    /// Short kind label as used in problem files.
    pub fn label(&self) -> &'static str {
        match &self.kind {
            ProblemKind::PoissonDirichlet { .. } => "poisson-dirichlet",
            ProblemKind::PoissonNeumann { .. } => "poisson-neumann",
            ProblemKind::Eigen(EigenMode::Dirichlet { .. }) => "eigen-dirichlet",
            ProblemKind::Eigen(EigenMode::Neumann) => "eigen-neumann",
            ProblemKind::Capacity { .. } => "capacity",
        }
    }
}

pub(crate) fn parse_index_list(text: &str) -> std::result::Result<Vec<usize>, String> {
    parse_list(text)?
        .into_iter()
        .map(|t| t.parse::<usize>().map_err(|_| format!("'{t}' is not a vertex index")))
        .collect()
}

pub(crate) fn parse_real_list(text: &str) -> std::result::Result<Vec<f64>, String> {
    parse_list(text)?
        .into_iter()
        .map(|t| t.parse::<f64>().map_err(|_| format!("'{t}' is not a number")))
        .collect()
}

/// Accepts `[a, b, c]` or bare `a,b,c`.
fn parse_list(text: &str) -> std::result::Result<Vec<&str>, String> {
    let t = text.trim();
    let inner = match (t.strip_prefix('['), t.ends_with(']')) {
        (Some(rest), true) => &rest[..rest.len() - 1],
        (None, false) => t,
        _ => return Err(format!("unbalanced brackets in '{t}'")),
    };
    Ok(inner.split(',').map(str::trim).filter(|s| !s.is_empty()).collect())
}

/// Parses a problem file for a space with `n` vertices. `load_field`
/// resolves the value of the `f` key.
pub fn parse_problem(
    text: &str,
    n: usize,
    load_field: impl Fn(&str) -> Result<ScalarField>,
) -> Result<ProblemSpec> {
    let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("expected 'key = value', got '{line}'"),
            });
        };
        let key = key.trim().to_string();
        if entries.insert(key.clone(), (idx + 1, value.trim().to_string())).is_some() {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("key '{key}' given twice"),
            });
        }
    }
    const KNOWN: [&str; 8] = ["kind", "p", "mode", "boundary", "boundary_values", "f", "K", "omega"];
    if let Some((key, (line, _))) = entries.iter().find(|(k, _)| !KNOWN.contains(&k.as_str())) {
        return Err(Error::Parse {
            line: *line,
            message: format!("unknown key '{key}'"),
        });
    }
    let get = |key: &str| entries.get(key);
    let require = |key: &str| {
        get(key).ok_or_else(|| Error::Parse {
            line: 0,
            message: format!("missing key '{key}'"),
        })
    };
    let indices = |key: &str| -> Result<Vec<usize>> {
        let (line, v) = require(key)?;
        parse_index_list(v).map_err(|message| Error::Parse { line: *line, message })
    };
    let field = || -> Result<ScalarField> {
        match get("f") {
            None => Ok(ScalarField::zeros(n)),
            Some((_, path)) => {
                let f = load_field(path)?;
                if f.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: f.len() });
                }
                Ok(f)
            }
        }
    };
    let (p_line, p_text) = require("p")?;
    let p: f64 = p_text.parse().map_err(|_| Error::Parse {
        line: *p_line,
        message: format!("'{p_text}' is not a number"),
    })?;
    let (kind_line, kind) = require("kind")?;
    let kind = match kind.as_str() {
        "poisson-dirichlet" => {
            let (line, v) = require("boundary_values")?;
            let boundary_values = parse_real_list(v).map_err(|message| Error::Parse { line: *line, message })?;
            ProblemKind::PoissonDirichlet {
                boundary: indices("boundary")?,
                boundary_values,
                f: field()?,
            }
        }
        "poisson-neumann" => ProblemKind::PoissonNeumann { f: field()? },
        "eigen" => match get("mode").map(|(_, m)| m.as_str()) {
            Some("dirichlet") => ProblemKind::Eigen(EigenMode::Dirichlet {
                boundary: indices("boundary")?,
            }),
            Some("neumann") | None => ProblemKind::Eigen(EigenMode::Neumann),
            Some(other) => {
                return Err(Error::Parse {
                    line: get("mode").map_or(0, |e| e.0),
                    message: format!("unknown eigen mode '{other}'"),
                })
            }
        },
        "capacity" => ProblemKind::Capacity {
            k: indices("K")?,
            omega: indices("omega")?,
        },
        other => {
            return Err(Error::Parse {
                line: *kind_line,
                message: format!("unknown problem kind '{other}'"),
            })
        }
    };
    ProblemSpec::new(p, kind)
}
