use rand::Rng;

use super::{DiscreteMms, EdgeSpec};
use crate::{util, Error, Result};

/// Canonical space families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpaceKind {
    /// Path on `n` vertices.
    Path(usize),
    /// Cycle on `n >= 3` vertices.
    Cycle(usize),
    /// `nx × ny` grid, vertex `i * ny + j`.
    Grid(usize, usize),
    /// Star with center 0 and `k` leaves.
    Star(usize),
    /// Path of `n` vertices on `[0, 1]` with mesh `h = 1/n`, edge length `h`
    /// and vertex measure `((i + 1) h)^exponent`: a weighted cusp.
    Horn(usize, f64),
    /// Seeded random connected graph on `n` vertices: a random spanning
    /// tree plus up to `n` extra edges, conductances in `[0.5, 2]`.
    Random(usize, u64),
}

pub fn generate_space(kind: SpaceKind) -> Result<DiscreteMms> {
    let zero = |what: &str| Err(Error::InvalidParameter(format!("{what} must be at least 1")));
    match kind {
        SpaceKind::Path(n) => {
            if n == 0 {
                return zero("path size");
            }
            let edges: Vec<EdgeSpec> = (1..n).map(|i| EdgeSpec::unit(i - 1, i)).collect();
            DiscreteMms::new(vec![1.0; n], &edges)
        }
        SpaceKind::Cycle(n) => {
            if n == 0 {
                return zero("cycle size");
            }
            if n < 3 {
                return Err(Error::InvalidParameter(format!(
                    "cycle needs at least 3 vertices, got {n}"
                )));
            }
            let edges: Vec<EdgeSpec> = (0..n).map(|i| EdgeSpec::unit(i, (i + 1) % n)).collect();
            DiscreteMms::new(vec![1.0; n], &edges)
        }
        SpaceKind::Grid(nx, ny) => {
            if nx == 0 || ny == 0 {
                return zero("grid side");
            }
            let mut edges = Vec::new();
            for i in 0..nx {
                for j in 0..ny {
                    let v = i * ny + j;
                    if j + 1 < ny {
                        edges.push(EdgeSpec::unit(v, v + 1));
                    }
                    if i + 1 < nx {
                        edges.push(EdgeSpec::unit(v, v + ny));
                    }
                }
            }
            DiscreteMms::new(vec![1.0; nx * ny], &edges)
        }
        SpaceKind::Star(k) => {
            if k == 0 {
                return zero("star leaf count");
            }
            let edges: Vec<EdgeSpec> = (1..=k).map(|i| EdgeSpec::unit(0, i)).collect();
            DiscreteMms::new(vec![1.0; k + 1], &edges)
        }
        SpaceKind::Horn(n, exponent) => {
            if n == 0 {
                return zero("horn size");
            }
            if !exponent.is_finite() {
                return Err(Error::InvalidParameter(format!("horn exponent {exponent}")));
            }
            let h = 1.0 / n as f64;
            let measure = (0..n).map(|i| ((i + 1) as f64 * h).powf(exponent)).collect();
            let edges: Vec<EdgeSpec> = (1..n).map(|i| EdgeSpec::new(i - 1, i, 1.0, h)).collect();
            DiscreteMms::new(measure, &edges)
        }
        SpaceKind::Random(n, seed) => {
            if n == 0 {
                return zero("random graph size");
            }
            let mut rng = util::rng(seed);
            let mut edges = Vec::new();
            let mut present = std::collections::BTreeSet::new();
            for i in 1..n {
                let j = rng.random_range(0..i);
                edges.push(EdgeSpec::new(j, i, rng.random_range(0.5..2.0), 1.0));
                present.insert((j, i));
            }
            if n > 2 {
                for _ in 0..n {
                    let a = rng.random_range(0..n);
                    let b = rng.random_range(0..n);
                    let key = (a.min(b), a.max(b));
                    if a != b && present.insert(key) {
                        edges.push(EdgeSpec::new(key.0, key.1, rng.random_range(0.5..2.0), 1.0));
                    }
                }
            }
            DiscreteMms::new(vec![1.0; n], &edges)
        }
    }
}

/// Parses generator strings `path:n`, `cycle:n`, `grid:AxB`, `star:k`,
/// `horn:n:e` and `random:n:seed`.
pub fn parse_generator(spec: &str) -> Result<SpaceKind> {
    let bad = || Error::InvalidParameter(format!("unrecognized space generator '{spec}'"));
    let mut parts = spec.split(':');
    let kind = parts.next().ok_or_else(bad)?;
    let args: Vec<&str> = parts.collect();
    let int = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    let out = match (kind, args.as_slice()) {
        ("path", [n]) => SpaceKind::Path(int(n)?),
        ("cycle", [n]) => SpaceKind::Cycle(int(n)?),
        ("star", [k]) => SpaceKind::Star(int(k)?),
        ("grid", [dims]) => {
            let (a, b) = dims.split_once('x').ok_or_else(bad)?;
            SpaceKind::Grid(int(a)?, int(b)?)
        }
        ("horn", [n, e]) => SpaceKind::Horn(int(n)?, e.trim().parse().map_err(|_| bad())?),
        ("random", [n, seed]) => SpaceKind::Random(int(n)?, seed.trim().parse().map_err(|_| bad())?),
        _ => return Err(bad()),
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_families() {
        let p = generate_space(SpaceKind::Path(3)).unwrap();
        assert_eq!(p.edges().len(), 2);
        let c = generate_space(SpaceKind::Cycle(4)).unwrap();
        assert_eq!(c.edges().len(), 4);
        assert!((0..4).all(|x| c.degree(x) == 2));
        let g = generate_space(SpaceKind::Grid(3, 4)).unwrap();
        assert_eq!(g.len(), 12);
        assert_eq!(g.edges().len(), 3 * 3 + 2 * 4);
        let s = generate_space(SpaceKind::Star(3)).unwrap();
        assert_eq!(s.degree(0), 3);
    }

    #[test]
    fn horn_measure_is_increasing_power() {
        let h = generate_space(SpaceKind::Horn(10, 3.0)).unwrap();
        let m = h.measure();
        for (i, &mi) in m.iter().enumerate() {
            let expect = ((i + 1) as f64 * 0.1).powi(3);
            assert!((mi - expect).abs() < 1e-15);
        }
        assert!(m.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn zero_size_rejected() {
        for kind in [
            SpaceKind::Path(0),
            SpaceKind::Cycle(0),
            SpaceKind::Grid(0, 3),
            SpaceKind::Star(0),
            SpaceKind::Horn(0, 1.0),
            SpaceKind::Random(0, 1),
        ] {
            assert!(generate_space(kind).is_err(), "{kind:?}");
        }
    }

    #[test]
    fn random_graphs_are_connected_and_seeded() {
        for seed in 0..20 {
            let a = generate_space(SpaceKind::Random(12, seed)).unwrap();
            let b = generate_space(SpaceKind::Random(12, seed)).unwrap();
            assert!(a.is_connected());
            assert_eq!(a, b);
        }
    }

    #[test]
    fn generator_strings() {
        assert_eq!(parse_generator("path:9").unwrap(), SpaceKind::Path(9));
        assert_eq!(parse_generator("grid:4x5").unwrap(), SpaceKind::Grid(4, 5));
        assert_eq!(parse_generator("horn:10:3").unwrap(), SpaceKind::Horn(10, 3.0));
        assert_eq!(parse_generator("random:8:7").unwrap(), SpaceKind::Random(8, 7));
        assert!(parse_generator("grid:4").is_err());
        assert!(parse_generator("blob:3").is_err());
    }
}
