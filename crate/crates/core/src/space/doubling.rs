use rand::seq::index::sample;

use super::DiscreteMms;
use crate::parallel::{map_slice, Execution};
use crate::{util, Error, Result};

/// Centers are sampled when the space has more vertices than this.
pub const MAX_DOUBLING_CENTERS: usize = 2000;
const CENTER_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq)]
pub enum CenterSelection {
    /// Every vertex up to [`MAX_DOUBLING_CENTERS`], else a seeded sample.
    Auto,
    Explicit(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoublingOptions {
    /// Radius cap `R`; only radii `r < R` are sampled.
    pub radius_cap: f64,
    pub radii: Vec<f64>,
    pub centers: CenterSelection,
    pub execution: Execution,
}

impl DoublingOptions {
    pub fn new(radius_cap: f64, radii: Vec<f64>) -> Self {
        Self {
            radius_cap,
            radii,
            centers: CenterSelection::Auto,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoublingReport {
    pub radius_cap: f64,
    /// `max m(B_2r(x)) / m(B_r(x))` over sampled centers and radii.
    pub constant_cd: f64,
    /// Least-squares slope of `log m(B_r1)/m(B_r2)` on `log r1/r2`.
    /// Zero when balls never grow (degenerate).
    pub fitted_dimension_s: f64,
    /// Root-mean-square residual of the fit.
    pub fit_residual: f64,
    pub samples: usize,
    pub degenerate: bool,
}

pub fn doubling_estimates(space: &DiscreteMms, opts: &DoublingOptions) -> Result<DoublingReport> {
    let centers = match &opts.centers {
        CenterSelection::Explicit(c) => {
            for &x in c {
                space.check_vertex(x)?;
            }
            c.clone()
        }
        CenterSelection::Auto if space.len() <= MAX_DOUBLING_CENTERS => (0..space.len()).collect(),
        CenterSelection::Auto => {
            let mut rng = util::rng(CENTER_SEED);
            let mut c = sample(&mut rng, space.len(), MAX_DOUBLING_CENTERS).into_vec();
            c.sort_unstable();
            c
        }
    };
    if centers.is_empty() {
        return Err(Error::InvalidParameter("no ball centers selected".into()));
    }
    let Some(min_len) = space.min_edge_length() else {
        // no edges: every ball is a single vertex
        return Ok(DoublingReport {
            radius_cap: opts.radius_cap,
            constant_cd: 1.0,
            fitted_dimension_s: 0.0,
            fit_residual: 0.0,
            samples: 0,
            degenerate: true,
        });
    };
    if !(opts.radius_cap > min_len) {
        return Err(Error::InvalidParameter(format!(
            "radius cap {} must exceed the smallest edge length {min_len}",
            opts.radius_cap
        )));
    }
    let mut radii: Vec<f64> = opts
        .radii
        .iter()
        .copied()
        .filter(|&r| r > 0.0 && r < opts.radius_cap)
        .collect();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    if radii.is_empty() || radii.iter().all(|&r| r < min_len) {
        return Err(Error::Degenerate(format!(
            "all radii lie below the resolution {min_len}"
        )));
    }

    let per_center = map_slice(opts.execution, &centers, |&x| {
        let dist = space.distances_from(x);
        let ball_mass = |r: f64| -> f64 {
            dist.iter()
                .zip(space.measure())
                .filter(|(&d, _)| d <= r)
                .map(|(_, &m)| m)
                .sum()
        };
        let masses: Vec<f64> = radii.iter().map(|&r| ball_mass(r)).collect();
        let cd = radii
            .iter()
            .zip(&masses)
            .map(|(&r, &mr)| ball_mass(2.0 * r) / mr)
            .fold(1.0, f64::max);
        let mut pairs = Vec::new();
        for i in 0..radii.len() {
            for j in i + 1..radii.len() {
                pairs.push(((radii[i] / radii[j]).ln(), (masses[i] / masses[j]).ln()));
            }
        }
        (cd, pairs)
    });

    let mut constant_cd: f64 = 1.0;
    let (mut sxy, mut sxx, mut count) = (0.0, 0.0, 0usize);
    for (cd, pairs) in &per_center {
        constant_cd = constant_cd.max(*cd);
        for &(x, y) in pairs {
            sxy += x * y;
            sxx += x * x;
            count += 1;
        }
    }
    let (slope, residual) = if count == 0 || sxx == 0.0 {
        (0.0, 0.0)
    } else {
        let s = sxy / sxx;
        let sse: f64 = per_center
            .iter()
            .flat_map(|(_, p)| p.iter())
            .map(|&(x, y)| (y - s * x).powi(2))
            .sum();
        (s, (sse / count as f64).sqrt())
    };
    Ok(DoublingReport {
        radius_cap: opts.radius_cap,
        constant_cd,
        fitted_dimension_s: slope.max(0.0),
        fit_residual: residual,
        samples: count,
        degenerate: slope <= 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{generate_space, SpaceKind};

    #[test]
    fn single_vertex_has_unit_constant() {
        let s = generate_space(SpaceKind::Path(1)).unwrap();
        let r = doubling_estimates(&s, &DoublingOptions::new(4.0, vec![1.0, 2.0])).unwrap();
        assert_eq!(r.constant_cd, 1.0);
    }

    #[test]
    fn constant_at_least_one() {
        let s = generate_space(SpaceKind::Random(10, 3)).unwrap();
        let r = doubling_estimates(&s, &DoublingOptions::new(4.0, vec![0.5, 1.0, 2.0, 3.0])).unwrap();
        assert!(r.constant_cd >= 1.0);
        assert!(r.fitted_dimension_s > 0.0);
    }

    #[test]
    fn degenerate_grid_rejected() {
        let s = generate_space(SpaceKind::Path(5)).unwrap();
        assert!(doubling_estimates(&s, &DoublingOptions::new(4.0, vec![0.2, 0.5])).is_err());
        assert!(doubling_estimates(&s, &DoublingOptions::new(0.5, vec![0.2])).is_err());
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let s = generate_space(SpaceKind::Grid(8, 8)).unwrap();
        let mut opts = DoublingOptions::new(6.0, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        opts.execution = Execution::Sequential;
        let a = doubling_estimates(&s, &opts).unwrap();
        opts.execution = Execution::Parallel;
        let b = doubling_estimates(&s, &opts).unwrap();
        assert_eq!(a, b);
    }
}
