//! Plain-text space files.
//!
//! ```text
//! # comment
//! v <index> <measure>
//! e <i> <j> <conductance> <length>
//! ```
//!
//! Vertex indices are 0-based and dense. Serialization writes vertices in
//! index order, then edges in lexicographic order, using shortest
//! round-trip float formatting.

use std::fmt::Write as _;

use super::{DiscreteMms, EdgeSpec};
use crate::{Error, Result};

pub fn parse_space(text: &str) -> Result<DiscreteMms> {
    let mut measures: Vec<Option<f64>> = Vec::new();
    let mut edges = Vec::new();
    let mut edge_lines = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { line: line_no, message };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| err(format!("'{s}' is not a number")))
        };
        let index = |s: &str| -> Result<usize> {
            s.parse::<usize>().map_err(|_| err(format!("'{s}' is not a vertex index")))
        };
        match tokens.as_slice() {
            ["v", i, m] => {
                let i = index(i)?;
                if i >= measures.len() {
                    measures.resize(i + 1, None);
                }
                if measures[i].is_some() {
                    return Err(err(format!("vertex {i} declared twice")));
                }
                measures[i] = Some(num(m)?);
            }
            ["e", a, b, w, l] => {
                edges.push(EdgeSpec::new(index(a)?, index(b)?, num(w)?, num(l)?));
                edge_lines.push(line_no);
            }
            _ => return Err(err(format!("malformed record '{line}'"))),
        }
    }
    let n = measures.len();
    let mut measure = Vec::with_capacity(n);
    for (i, m) in measures.into_iter().enumerate() {
        match m {
            Some(m) => measure.push(m),
            None => {
                return Err(Error::Parse {
                    line: 0,
                    message: format!("missing measure entry for vertex {i}"),
                })
            }
        }
    }
    for (e, &line) in edges.iter().zip(&edge_lines) {
        for v in [e.a, e.b] {
            if v >= n {
                return Err(Error::Parse {
                    line,
                    message: format!("edge endpoint {v} exceeds the {n} declared vertices"),
                });
            }
        }
    }
    DiscreteMms::new(measure, &edges)
}

pub fn serialize_space(space: &DiscreteMms) -> String {
    let mut out = String::new();
    for (i, m) in space.measure().iter().enumerate() {
        let _ = writeln!(out, "v {i} {m:?}");
    }
    for e in space.edges() {
        let _ = writeln!(out, "e {} {} {:?} {:?}", e.a, e.b, e.conductance, e.length);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{generate_space, SpaceKind};
    use proptest::prelude::*;

    #[test]
    fn parses_minimal_file() {
        let s = parse_space("v 0 1.0\nv 1 1.0\ne 0 1 1.0 1.0").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.edges().len(), 1);
    }

    #[test]
    fn comments_and_blank_lines() {
        let s = parse_space("# header\n\nv 0 2.5 # trailing\nv 1 1\ne 1 0 3 0.5\n").unwrap();
        assert_eq!(s.measure(), &[2.5, 1.0]);
        assert_eq!(s.edges()[0], EdgeSpec::new(0, 1, 3.0, 0.5));
    }

    #[test]
    fn reports_errors_with_line_numbers() {
        let err = parse_space("v 0 1\nv 1 1\ne 0 5 1 1").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = parse_space("v 0 1\nx 1 2").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_space("v 0 1\nv 2 1").unwrap_err();
        assert!(err.to_string().contains("missing measure entry for vertex 1"));
        assert!(parse_space("v 0 abc").is_err());
    }

    #[test]
    fn grid_round_trip() {
        let g = generate_space(SpaceKind::Grid(3, 3)).unwrap();
        let text = serialize_space(&g);
        assert_eq!(parse_space(&text).unwrap(), g);
        assert_eq!(serialize_space(&parse_space(&text).unwrap()), text);
    }

    proptest! {
        #[test]
        fn random_spaces_round_trip(n in 1usize..15, seed in 0u64..1000, e in -2.0f64..4.0) {
            let a = generate_space(SpaceKind::Random(n, seed)).unwrap();
            prop_assert_eq!(parse_space(&serialize_space(&a)).unwrap(), a);
            let h = generate_space(SpaceKind::Horn(n, e)).unwrap();
            prop_assert_eq!(parse_space(&serialize_space(&h)).unwrap(), h);
        }
    }
}
