//! Linear strip of base stations with parallel roads.
//!
//! BS `i` sits at `x = (2i + 1) R` on the line `y = 0`, so cells of radius
//! `R` tile a strip of length `2 R n`. Roads run parallel at the configured
//! offsets. Users leaving the strip re-enter at the other end.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub cell_radius: f64,
    pub num_bs: usize,
    pub road_offsets: Vec<f64>,
}

impl Topology {
    pub fn new(num_bs: usize, cell_radius: f64, road_offsets: Vec<f64>) -> Result<Self> {
        if num_bs == 0 || !(cell_radius > 0.0) || road_offsets.is_empty() {
            return Err(domain("topology needs BSs, a positive radius and roads"));
        }
        Ok(Topology {
            cell_radius,
            num_bs,
            road_offsets,
        })
    }

    pub fn length(&self) -> f64 {
        2.0 * self.cell_radius * self.num_bs as f64
    }

    pub fn bs_x(&self, i: usize) -> f64 {
        (2 * i + 1) as f64 * self.cell_radius
    }

    /// Distance from `(x, road offset)` to BS `i` on the wrapped strip.
    pub fn distance(&self, x: f64, offset: f64, i: usize) -> f64 {
        let l = self.length();
        let dx = (x - self.bs_x(i)).rem_euclid(l);
        let dx = dx.min(l - dx);
        dx.hypot(offset)
    }

    /// Nearest BS (highest path gain) and its distance. Ties go to the
    /// lower index.
    pub fn nearest(&self, x: f64, offset: f64) -> (usize, f64) {
        (0..self.num_bs)
            .map(|i| (i, self.distance(x, offset, i)))
            .fold((0, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best })
    }

    pub fn wrap(&self, x: f64) -> f64 {
        x.rem_euclid(self.length())
    }
}

/// Straight-line motion at constant speed along one road.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mobility {
    /// Position along the strip at the reference time.
    pub start_x: f64,
    pub road_offset: f64,
    /// Signed speed, m/s.
    pub velocity: f64,
}

impl Mobility {
    pub fn random<R: Rng + ?Sized>(topology: &Topology, speed: (f64, f64), rng: &mut R) -> Self {
        let start_x = rng.random_range(0.0..topology.length());
        let road_offset = topology.road_offsets[rng.random_range(0..topology.road_offsets.len())];
        let v = if speed.0 < speed.1 {
            rng.random_range(speed.0..speed.1)
        } else {
            speed.0
        };
        let velocity = if rng.random::<bool>() { v } else { -v };
        Mobility {
            start_x,
            road_offset,
            velocity,
        }
    }

    /// Position `elapsed` seconds after the reference time.
    pub fn x_at(&self, topology: &Topology, elapsed: f64) -> f64 {
        topology.wrap(self.start_x + self.velocity * elapsed)
    }

    /// Times the user has crossed an end of the strip after `elapsed` seconds.
    pub fn wraps(&self, topology: &Topology, elapsed: f64) -> u64 {
        ((self.start_x + self.velocity * elapsed) / topology.length())
            .floor()
            .abs() as u64
    }
}
