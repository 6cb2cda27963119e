//! Regular-island area from chaotic-sea coverage.
//!
//! Chaotic trajectories are iterated for many kicks and every grid cell of the
//! reduced torus `[0, 2π) × [0, 2π)` they pass through is marked. The island
//! is the connected set of never-visited cells (4-neighbour, periodic in both
//! axes) that contains the stable fixed point.

use alloc::vec;
use alloc::vec::Vec;

use crate::map::{find_period1_fixed_point, map_step, wrap_angle, MapParams, PhasePoint};
use crate::{Error, Result, TWO_PI};

/// Minimum grid resolution accepted by [`estimate_island_area`].
pub const MIN_GRID_RESOLUTION: usize = 64;
/// Minimum number of kicks accepted by [`estimate_island_area`].
pub const MIN_KICKS: u64 = 100_000;
/// Relative agreement between resolutions `N` and `2N` required for
/// convergence.
pub const CONVERGENCE_TOLERANCE: f64 = 0.02;
/// Visited fraction below which the seeds are considered trapped on regular
/// curves.
const MIN_SEA_FRACTION: f64 = 0.05;
const SEED_JITTER: f64 = 1e-3;

/// Visited/unvisited cells over the reduced torus.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    resolution: usize,
    visited: Vec<bool>,
}

impl OccupancyGrid {
    pub fn new(resolution: usize) -> Self {
        OccupancyGrid {
            resolution,
            visited: vec![false; resolution * resolution],
        }
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Cell `(i, j)` of a point: `i` along θ, `j` along `J mod 2π`.
    #[inline]
    pub fn cell_of(&self, p: PhasePoint) -> (usize, usize) {
        let n = self.resolution;
        let scale = n as f64 / TWO_PI;
        let i = ((wrap_angle(p.theta) * scale) as usize).min(n - 1);
        let j = ((wrap_angle(p.momentum_j) * scale) as usize).min(n - 1);
        (i, j)
    }

    #[inline]
    pub fn mark(&mut self, p: PhasePoint) {
        let (i, j) = self.cell_of(p);
        self.visited[i * self.resolution + j] = true;
    }

    #[inline]
    pub fn is_visited(&self, i: usize, j: usize) -> bool {
        self.visited[i * self.resolution + j]
    }

    pub fn visited_count(&self) -> usize {
        self.visited.iter().filter(|&&v| v).count()
    }

    pub fn cell_area(&self) -> f64 {
        let h = TWO_PI / self.resolution as f64;
        h * h
    }

    /// Row-major iterator over `(i, j, visited)`.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, bool)> + '_ {
        let n = self.resolution;
        self.visited
            .iter()
            .enumerate()
            .map(move |(idx, &v)| (idx / n, idx % n, v))
    }

    /// Number of unvisited cells connected to `(i, j)`; zero if that cell was
    /// visited.
    pub fn unvisited_component_size(&self, i: usize, j: usize) -> usize {
        let n = self.resolution;
        if self.is_visited(i, j) {
            return 0;
        }
        let mut seen = vec![false; n * n];
        let mut stack = vec![(i, j)];
        seen[i * n + j] = true;
        let mut count = 0;
        while let Some((a, b)) = stack.pop() {
            count += 1;
            let neighbours = [
                ((a + 1) % n, b),
                ((a + n - 1) % n, b),
                (a, (b + 1) % n),
                (a, (b + n - 1) % n),
            ];
            for (c, d) in neighbours {
                let idx = c * n + d;
                if !seen[idx] && !self.visited[idx] {
                    seen[idx] = true;
                    stack.push((c, d));
                }
            }
        }
        count
    }
}

/// Island area and its convergence diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AreaEstimate {
    /// Area at the requested resolution.
    pub area: f64,
    /// Area at twice the requested resolution.
    pub refined_area: f64,
    pub grid_resolution: usize,
    pub kicks_used: u64,
    pub converged: bool,
    /// `area / |ε|`.
    pub area_over_hbar: f64,
}

/// Starting points in the chaotic sea: opposite the island centre in angle,
/// at `J = π`, separated by a small deterministic jitter.
pub fn chaotic_seeds(centre_theta: f64, count: usize) -> Vec<PhasePoint> {
    (0..count)
        .map(|i| {
            PhasePoint::new(
                wrap_angle(centre_theta + core::f64::consts::PI + SEED_JITTER * i as f64),
                core::f64::consts::PI,
            )
        })
        .collect()
}

/// Marks the cells visited by `seeds`, each iterated `kicks / seeds.len()`
/// times, on every grid in `grids` in a single pass.
pub fn fill_occupancy(
    m: &MapParams,
    seeds: &[PhasePoint],
    kicks: u64,
    grids: &mut [&mut OccupancyGrid],
) -> u64 {
    if seeds.is_empty() {
        return 0;
    }
    let per_seed = kicks / seeds.len() as u64;
    for &seed in seeds {
        let mut p = seed;
        for _ in 0..per_seed {
            p = map_step(p, m);
            for g in grids.iter_mut() {
                g.mark(p);
            }
        }
    }
    per_seed * seeds.len() as u64
}

/// Area of the unvisited component containing `centre`.
pub fn island_area_on_grid(grid: &OccupancyGrid, centre: PhasePoint) -> f64 {
    let (i, j) = grid.cell_of(centre);
    grid.unvisited_component_size(i, j) as f64 * grid.cell_area()
}

/// Estimates the area of the island around the stable period-1 fixed point.
///
/// Occupancy grids at `grid_resolution` and `2 * grid_resolution` are filled
/// from the same `seeds` chaotic trajectories (`kicks` in total); the result is
/// converged when both areas agree within [`CONVERGENCE_TOLERANCE`]. Without a
/// stable fixed point the area is zero.
pub fn estimate_island_area(
    m: &MapParams,
    grid_resolution: usize,
    kicks: u64,
    seeds: usize,
) -> Result<AreaEstimate> {
    let (estimate, _) = estimate_island_area_with_grid(m, grid_resolution, kicks, seeds)?;
    Ok(estimate)
}

/// As [`estimate_island_area`], also returning the occupancy grid at the
/// requested resolution.
pub fn estimate_island_area_with_grid(
    m: &MapParams,
    grid_resolution: usize,
    kicks: u64,
    seeds: usize,
) -> Result<(AreaEstimate, OccupancyGrid)> {
    if grid_resolution < MIN_GRID_RESOLUTION {
        return Err(Error::invalid(
            "grid_resolution",
            grid_resolution as f64,
            "must be at least 64",
        ));
    }
    if kicks < MIN_KICKS {
        return Err(Error::invalid("kicks", kicks as f64, "must be at least 1e5"));
    }
    if seeds == 0 {
        return Err(Error::invalid("seeds", 0.0, "need at least one seed"));
    }
    let hbar = m.hbar_eff();
    let mut coarse = OccupancyGrid::new(grid_resolution);
    let fixed = match find_period1_fixed_point(m) {
        Some(fp) if fp.stable => fp,
        _ => {
            return Ok((
                AreaEstimate {
                    area: 0.0,
                    refined_area: 0.0,
                    grid_resolution,
                    kicks_used: 0,
                    converged: true,
                    area_over_hbar: 0.0,
                },
                coarse,
            ))
        }
    };
    let mut fine = OccupancyGrid::new(2 * grid_resolution);
    let starts = chaotic_seeds(fixed.point.theta, seeds);
    let used = fill_occupancy(m, &starts, kicks, &mut [&mut coarse, &mut fine]);

    let sea = coarse.visited_count() as f64 / (grid_resolution * grid_resolution) as f64;
    if sea < MIN_SEA_FRACTION {
        return Err(Error::NoChaoticSeed);
    }
    let area = island_area_on_grid(&coarse, fixed.point);
    let refined_area = island_area_on_grid(&fine, fixed.point);
    let converged = if refined_area > 0.0 {
        (area - refined_area).abs() / refined_area < CONVERGENCE_TOLERANCE
    } else {
        area == 0.0
    };
    Ok((
        AreaEstimate {
            area,
            refined_area,
            grid_resolution,
            kicks_used: used,
            converged,
            area_over_hbar: if hbar > 0.0 { area / hbar } else { 0.0 },
        },
        coarse,
    ))
}
