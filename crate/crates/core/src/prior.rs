//! Priors over a family's parameter box and their discretization.
//!
//! Continuous priors are uniform, or coordinate-wise piecewise constant, on
//! the family domain. Up to three dimensions they are discretized on a full
//! tensor grid with trapezoid weights (boundary nodes carry half a cell);
//! beyond that, on particles drawn from the prior with equal weights.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::family::{ModelFamily, ParamVector};
use crate::math::{ln, sqrt};
use crate::mixture::PosteriorGrid;
use crate::rng;

/// Largest dimension discretized on a tensor grid.
pub const MAX_GRID_DIMENSION: usize = 3;

/// Shape of a continuous prior density along every coordinate.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Density {
    Uniform,
    /// Relative density levels on equal-width cells of each coordinate's
    /// interval; the joint density is the product over coordinates.
    Piecewise { levels: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum PriorSpec {
    Continuous {
        density: Density,
        /// Grid nodes per coordinate (tensor grid, dimension ≤ 3).
        grid_nodes: usize,
        /// Importance-sampling particles (dimension > 3).
        particles: usize,
        seed: u64,
    },
    /// Finite hypothesis class with explicit weights.
    Discrete { atoms: Vec<ParamVector>, weights: Vec<f64> },
}

impl PriorSpec {
    pub fn uniform(grid_nodes: usize) -> Self {
        PriorSpec::Continuous { density: Density::Uniform, grid_nodes, particles: 4096, seed: 0 }
    }

    pub fn piecewise(levels: Vec<f64>, grid_nodes: usize) -> Self {
        PriorSpec::Continuous { density: Density::Piecewise { levels }, grid_nodes, particles: 4096, seed: 0 }
    }

    /// Particle count and seed used when the family has more than three
    /// parameters.
    pub fn with_particles(self, count: usize, seed_value: u64) -> Self {
        match self {
            PriorSpec::Continuous { density, grid_nodes, .. } => {
                PriorSpec::Continuous { density, grid_nodes, particles: count, seed: seed_value }
            }
            other => other,
        }
    }

    pub fn discrete(atoms: Vec<ParamVector>, weights: Vec<f64>) -> Self {
        PriorSpec::Discrete { atoms, weights }
    }

    /// Equal weights on the given models.
    pub fn finite_class(atoms: Vec<ParamVector>) -> Self {
        let w = vec![1.0 / atoms.len() as f64; atoms.len()];
        PriorSpec::Discrete { atoms, weights: w }
    }

    pub fn point_mass(theta: ParamVector) -> Self {
        PriorSpec::Discrete { atoms: vec![theta], weights: vec![1.0] }
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self, PriorSpec::Continuous { .. })
    }

    pub fn validate(&self, family: &ModelFamily) -> Result<()> {
        match self {
            PriorSpec::Continuous { density, grid_nodes, particles, .. } => {
                if *grid_nodes < 2 {
                    return Err(Error::InvalidArgument("grid needs at least 2 nodes per coordinate"));
                }
                if family.dimension() > MAX_GRID_DIMENSION && *particles == 0 {
                    return Err(Error::InvalidArgument("particle prior needs at least one particle"));
                }
                if let Density::Piecewise { levels } = density {
                    if levels.is_empty() || levels.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
                        return Err(Error::InvalidArgument("density levels must be positive and finite"));
                    }
                }
                Ok(())
            }
            PriorSpec::Discrete { atoms, weights } => {
                if atoms.is_empty() || atoms.len() != weights.len() {
                    return Err(Error::InvalidArgument("discrete prior needs one weight per atom"));
                }
                if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) || weights.iter().sum::<f64>() <= 0.0 {
                    return Err(Error::InvalidArgument("atom weights must be nonnegative with positive sum"));
                }
                atoms.iter().try_for_each(|a| family.check_param(a))
            }
        }
    }

    /// Radius of the ball enclosing the parameter box, `R = a √d`.
    pub fn ball_radius(family: &ModelFamily) -> f64 {
        family.half_width() * sqrt(family.dimension() as f64)
    }

    /// Ratio of the largest to the smallest density level (1 for uniform).
    pub fn density_ratio(&self) -> f64 {
        match self {
            PriorSpec::Continuous { density: Density::Piecewise { levels }, .. } => {
                let max = levels.iter().copied().fold(f64::MIN, f64::max);
                let min = levels.iter().copied().fold(f64::MAX, f64::min);
                max / min
            }
            _ => 1.0,
        }
    }

    /// Quadrature nodes and normalized weights.
    pub fn discretize(&self, family: &ModelFamily) -> Result<PosteriorGrid> {
        self.validate(family)?;
        match self {
            PriorSpec::Discrete { atoms, weights } => {
                let lw = weights.iter().map(|&w| ln(w)).collect();
                PosteriorGrid::new(atoms.clone(), lw, false)
            }
            PriorSpec::Continuous { density, grid_nodes, particles, seed } => {
                if family.dimension() <= MAX_GRID_DIMENSION {
                    tensor_grid(family, density, *grid_nodes)
                } else {
                    let mut r = rng::stream(*seed, 0x9e37);
                    let nodes = (0..*particles).map(|_| self.sample(family, &mut r)).collect();
                    PosteriorGrid::new(nodes, vec![0.0; *particles], true)
                }
            }
        }
    }

    /// One draw `θ ~ w`.
    pub fn sample<R: Rng + ?Sized>(&self, family: &ModelFamily, r: &mut R) -> ParamVector {
        match self {
            PriorSpec::Discrete { atoms, weights } => atoms[rng::categorical(r, weights)].clone(),
            PriorSpec::Continuous { density, .. } => {
                let bounds = family.bounds();
                let w = family.row_width();
                let block = if w > 1 { w } else { 1 };
                let mut theta = Vec::with_capacity(bounds.len());
                for chunk in bounds.chunks(block) {
                    loop {
                        let start = theta.len();
                        for &(lo, hi) in chunk {
                            theta.push(sample_coordinate(density, lo, hi, r));
                        }
                        if block == 1 || theta[start..].iter().sum::<f64>() <= 1.0 {
                            break;
                        }
                        theta.truncate(start);
                    }
                }
                ParamVector::new(theta)
            }
        }
    }

    /// Gradient of `ln w(θ)`; zero almost everywhere for the supported
    /// continuous densities.
    pub fn log_density_gradient(&self, family: &ModelFamily, _theta: &[f64]) -> Result<Vec<f64>> {
        match self {
            PriorSpec::Continuous { .. } => Ok(vec![0.0; family.dimension()]),
            PriorSpec::Discrete { .. } => Err(Error::NotAvailable("gradient of a discrete prior")),
        }
    }
}

fn sample_coordinate<R: Rng + ?Sized>(density: &Density, lo: f64, hi: f64, r: &mut R) -> f64 {
    match density {
        Density::Uniform => lo + (hi - lo) * rng::uniform(r),
        Density::Piecewise { levels } => {
            let cell = rng::categorical(r, levels);
            let width = (hi - lo) / levels.len() as f64;
            lo + width * (cell as f64 + rng::uniform(r))
        }
    }
}

/// Density level at `u ∈ [lo, hi]`; nodes on an interior cell edge average
/// the two neighbouring levels.
fn level_at(levels: &[f64], lo: f64, hi: f64, u: f64) -> f64 {
    let l = levels.len();
    let pos = (u - lo) / (hi - lo) * l as f64;
    let cell = libm::floor(pos);
    let c = (cell.max(0.0) as usize).min(l - 1);
    if pos == cell && c > 0 && c < l {
        0.5 * (levels[c - 1] + levels[c])
    } else {
        levels[c]
    }
}

fn tensor_grid(family: &ModelFamily, density: &Density, g: usize) -> Result<PosteriorGrid> {
    let bounds = family.bounds();
    let d = bounds.len();
    // per-coordinate node positions and log trapezoid weights
    let axes: Vec<Vec<(f64, f64)>> = bounds
        .iter()
        .map(|&(lo, hi)| {
            let h = (hi - lo) / (g - 1) as f64;
            (0..g)
                .map(|i| {
                    let u = if i == g - 1 { hi } else { lo + h * i as f64 };
                    let mut w = if i == 0 || i == g - 1 { 0.5 * h } else { h };
                    if let Density::Piecewise { levels } = density {
                        w *= level_at(levels, lo, hi, u);
                    }
                    (u, ln(w))
                })
                .collect()
        })
        .collect();
    let total = g.checked_pow(d as u32).ok_or(Error::TooLarge("tensor grid"))?;
    let mut nodes = Vec::with_capacity(total);
    let mut log_w = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        let theta: Vec<f64> = idx.iter().enumerate().map(|(k, &i)| axes[k][i].0).collect();
        if family.contains(&theta) {
            log_w.push(idx.iter().enumerate().map(|(k, &i)| axes[k][i].1).sum());
            nodes.push(ParamVector::new(theta));
        }
        for k in (0..d).rev() {
            idx[k] += 1;
            if idx[k] < g {
                break;
            }
            idx[k] = 0;
        }
    }
    PosteriorGrid::new(nodes, log_w, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::exp;

    #[test]
    fn trapezoid_weights_sum_to_one() {
        let grid = PriorSpec::uniform(11).discretize(&ModelFamily::Bernoulli).unwrap();
        assert_eq!(grid.len(), 11);
        let w = grid.weights();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((w[0] - 0.05).abs() < 1e-15 && (w[5] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn simplex_grid_is_feasible_and_normalized() {
        let fam = ModelFamily::categorical(3).unwrap();
        let grid = PriorSpec::uniform(21).discretize(&fam).unwrap();
        assert!(grid.nodes().iter().all(|t| t[0] + t[1] <= 1.0 + 1e-12));
        assert_eq!(grid.len(), 21 * 22 / 2);
        let s: f64 = grid.log_weights().iter().map(|&l| exp(l)).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn high_dimension_uses_particles() {
        let fam = ModelFamily::linear_gaussian(vec![1.0; 4], 1.0, 1.0).unwrap();
        let grid = PriorSpec::uniform(5).with_particles(100, 3).discretize(&fam).unwrap();
        assert!(grid.is_stochastic());
        assert_eq!(grid.len(), 100);
        assert!(grid.nodes().iter().all(|t| fam.contains(t)));
    }

    #[test]
    fn piecewise_prior_shifts_mass() {
        let prior = PriorSpec::piecewise(vec![1.0, 3.0], 101);
        assert_eq!(prior.density_ratio(), 3.0);
        let grid = prior.discretize(&ModelFamily::Bernoulli).unwrap();
        let upper: f64 = grid.nodes().iter().zip(grid.weights()).filter(|(t, _)| t[0] > 0.5).map(|(_, w)| w).sum();
        assert!((upper - 0.75).abs() < 0.01, "{upper}");
        let mut r = rng::stream(1, 0);
        let hits = (0..20_000).filter(|_| prior.sample(&ModelFamily::Bernoulli, &mut r)[0] > 0.5).count();
        assert!((hits as f64 / 20_000.0 - 0.75).abs() < 0.02);
    }

    #[test]
    fn invalid_priors_rejected() {
        let fam = ModelFamily::Bernoulli;
        assert!(PriorSpec::uniform(1).validate(&fam).is_err());
        assert!(PriorSpec::piecewise(vec![1.0, 0.0], 10).validate(&fam).is_err());
        assert!(PriorSpec::discrete(vec![ParamVector::new(vec![0.5])], vec![]).validate(&fam).is_err());
        assert!(PriorSpec::point_mass(ParamVector::new(vec![1.5])).validate(&fam).is_err());
    }

    #[test]
    fn ball_radius_encloses_box() {
        assert_eq!(PriorSpec::ball_radius(&ModelFamily::Bernoulli), 0.5);
        let lg = ModelFamily::linear_gaussian(vec![1.0; 4], 1.0, 2.0).unwrap();
        assert_eq!(PriorSpec::ball_radius(&lg), 4.0);
    }
}
