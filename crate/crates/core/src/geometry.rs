//! Implicit domains for the finite cell method.
//!
//! A domain only answers inside/outside queries. Everything outside the
//! physical domain is fictitious and carries the stabilization factor alpha.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Physical domain described by a point-membership test.
///
/// Points on the boundary count as inside.
pub trait ImplicitDomain: Send + Sync {
    fn dim(&self) -> usize;
    fn inside(&self, x: &[f64]) -> bool;
}

/// Finite cell indicator: 1 inside the physical domain, `alpha` elsewhere.
pub fn fcm_scale<D: ImplicitDomain + ?Sized>(domain: &D, x: &[f64], alpha: f64) -> f64 {
    if domain.inside(x) {
        1.0
    } else {
        alpha
    }
}

/// Axis-aligned box in up to three dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    dim: usize,
    lower: [f64; 3],
    upper: [f64; 3],
}

impl Aabb {
    pub fn new(lower: &[f64], upper: &[f64]) -> Result<Self> {
        let dim = lower.len();
        if !(1..=3).contains(&dim) || upper.len() != dim {
            return Err(Error::invalid("box corners must have equal dimension 1..=3"));
        }
        let mut b = Self {
            dim,
            lower: [0.0; 3],
            upper: [0.0; 3],
        };
        for k in 0..dim {
            if !(upper[k] > lower[k]) {
                return Err(Error::invalid(format!(
                    "empty box extent in direction {k}: [{}, {}]",
                    lower[k], upper[k]
                )));
            }
            b.lower[k] = lower[k];
            b.upper[k] = upper[k];
        }
        Ok(b)
    }

    /// The unit cube `[0, 1]^d`.
    pub fn unit(dim: usize) -> Result<Self> {
        Self::new(&vec![0.0; dim], &vec![1.0; dim])
    }

    /// `[-1, 1]^d`.
    pub fn reference(dim: usize) -> Result<Self> {
        Self::new(&vec![-1.0; dim], &vec![1.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower[..self.dim]
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper[..self.dim]
    }

    pub fn extent(&self, k: usize) -> f64 {
        self.upper[k] - self.lower[k]
    }

    pub fn center(&self) -> [f64; 3] {
        let mut c = [0.0; 3];
        for k in 0..self.dim {
            c[k] = 0.5 * (self.lower[k] + self.upper[k]);
        }
        c
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|k| self.extent(k)).product()
    }

    /// Maps reference coordinates in `[-1, 1]^d` into this box.
    pub fn map_from_reference(&self, xi: &[f64], out: &mut [f64]) {
        for k in 0..self.dim {
            out[k] = self.lower[k] + 0.5 * (xi[k] + 1.0) * self.extent(k);
        }
    }

    /// The `2^d` corners, bit `k` of the index selecting the upper bound in direction `k`.
    pub fn corners(&self) -> Vec<[f64; 3]> {
        (0..1usize << self.dim)
            .map(|bits| {
                let mut c = [0.0; 3];
                for k in 0..self.dim {
                    c[k] = if bits >> k & 1 == 1 {
                        self.upper[k]
                    } else {
                        self.lower[k]
                    };
                }
                c
            })
            .collect()
    }

    /// The `2^d` children of a bisection in every direction, ordered like [`Aabb::corners`].
    pub fn children(&self) -> Vec<Aabb> {
        let c = self.center();
        (0..1usize << self.dim)
            .map(|bits| {
                let mut child = *self;
                for k in 0..self.dim {
                    if bits >> k & 1 == 1 {
                        child.lower[k] = c[k];
                    } else {
                        child.upper[k] = c[k];
                    }
                }
                child
            })
            .collect()
    }
}

/// The hypercube `[0, chi]^d` inside the unit element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CornerCutDomain {
    chi: f64,
    dim: usize,
}

impl CornerCutDomain {
    pub fn new(chi: f64, dim: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&chi) {
            return Err(Error::invalid(format!(
                "cut parameter must lie in [0, 1], got {chi}"
            )));
        }
        if dim == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        Ok(Self { chi, dim })
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    /// Physical share of the unit element, `chi^d`.
    pub fn volume_fraction(&self) -> f64 {
        volume_fraction(self)
    }
}

pub fn volume_fraction(domain: &CornerCutDomain) -> f64 {
    domain.chi.powi(domain.dim as i32)
}

impl ImplicitDomain for CornerCutDomain {
    fn dim(&self) -> usize {
        self.dim
    }

    fn inside(&self, x: &[f64]) -> bool {
        x.iter().all(|&xi| xi <= self.chi)
    }
}

/// A closed ball (disk in 2D) as the physical domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    center: Vec<f64>,
    radius: f64,
}

impl Ball {
    pub fn new(center: &[f64], radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::invalid("ball radius must be positive"));
        }
        Ok(Self {
            center: center.to_vec(),
            radius,
        })
    }
}

impl ImplicitDomain for Ball {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn inside(&self, x: &[f64]) -> bool {
        let r2: f64 = x.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum();
        r2 <= self.radius * self.radius
    }
}

pub const PLATE_WIDTH: f64 = 9.0;
pub const PLATE_HEIGHT: f64 = 3.0;
pub const HOLE_RADIUS: f64 = 3.0 / 13.0;
/// Horizontal and vertical distance between hole centers.
pub const HOLE_SPACING: f64 = 9.0 / 13.0;
pub const MAX_SHIFT_X: f64 = 0.2;
pub const MAX_SHIFT_Y: f64 = HOLE_SPACING;

/// 9 x 3 plate with three columns of circular holes.
///
/// Layout assumption: at zero shift the middle column sits on `x = 4.5` and
/// every column has a hole centered on `y = 1.5`; further rows repeat with
/// the hole spacing. Columns are vertically aligned.
#[derive(Debug, Clone, PartialEq)]
pub struct PerforatedPlate {
    shift_x: f64,
    shift_y: f64,
    holes: Vec<[f64; 2]>,
}

impl PerforatedPlate {
    pub fn new(shift_x: f64, shift_y: f64) -> Result<Self> {
        let eps = 1e-12;
        if !(-eps..=MAX_SHIFT_X + eps).contains(&shift_x) {
            return Err(Error::invalid(format!("x shift {shift_x} outside [0, 0.2]")));
        }
        if !(-eps..=MAX_SHIFT_Y + eps).contains(&shift_y) {
            return Err(Error::invalid(format!("y shift {shift_y} outside [0, 9/13]")));
        }
        let columns = [
            0.5 * PLATE_WIDTH - HOLE_SPACING,
            0.5 * PLATE_WIDTH,
            0.5 * PLATE_WIDTH + HOLE_SPACING,
        ];
        // Keep every row that reaches the plate, plus one period of margin on
        // both sides.
        let y_min = -HOLE_RADIUS - HOLE_SPACING;
        let y_max = PLATE_HEIGHT + HOLE_RADIUS + HOLE_SPACING;
        let base = 0.5 * PLATE_HEIGHT + shift_y;
        let j_lo = ((y_min - base) / HOLE_SPACING).ceil() as i64;
        let j_hi = ((y_max - base) / HOLE_SPACING).floor() as i64;
        let mut holes = Vec::new();
        for j in j_lo..=j_hi {
            let cy = base + j as f64 * HOLE_SPACING;
            for &cx in &columns {
                holes.push([cx + shift_x, cy]);
            }
        }
        Ok(Self {
            shift_x,
            shift_y,
            holes,
        })
    }

    pub fn shift(&self) -> (f64, f64) {
        (self.shift_x, self.shift_y)
    }

    /// All generated hole centers, including the margin rows.
    pub fn hole_centers(&self) -> &[[f64; 2]] {
        &self.holes
    }

    /// Hole centers whose circle overlaps the plate with positive area.
    pub fn intersecting_holes(&self) -> Vec<[f64; 2]> {
        self.holes
            .iter()
            .copied()
            .filter(|c| c[1] > -HOLE_RADIUS && c[1] < PLATE_HEIGHT + HOLE_RADIUS)
            .collect()
    }

    /// Exact physical area: the rectangle minus the clipped hole areas.
    pub fn physical_area(&self) -> f64 {
        let r = HOLE_RADIUS;
        // Area of the disk part with local coordinate y' >= a.
        let above = |a: f64| -> f64 {
            if a <= -r {
                PI * r * r
            } else if a >= r {
                0.0
            } else {
                r * r * (a / r).acos() - a * (r * r - a * a).sqrt()
            }
        };
        let removed: f64 = self
            .intersecting_holes()
            .iter()
            .map(|c| above(-c[1]) - above(PLATE_HEIGHT - c[1]))
            .sum();
        PLATE_WIDTH * PLATE_HEIGHT - removed
    }
}

impl ImplicitDomain for PerforatedPlate {
    fn dim(&self) -> usize {
        2
    }

    fn inside(&self, x: &[f64]) -> bool {
        // grid lines such as 15 * 0.2 round just past the plate edge
        let eps = 1e-12;
        if x[0] < -eps || x[0] > PLATE_WIDTH + eps || x[1] < -eps || x[1] > PLATE_HEIGHT + eps {
            return false;
        }
        // the radius is below half the spacing, so only the nearest lattice hole can contain x
        let mid = 0.5 * PLATE_WIDTH + self.shift_x;
        let i = ((x[0] - mid) / HOLE_SPACING).round().clamp(-1.0, 1.0);
        let cx = match i as i32 {
            -1 => 0.5 * PLATE_WIDTH - HOLE_SPACING,
            0 => 0.5 * PLATE_WIDTH,
            _ => 0.5 * PLATE_WIDTH + HOLE_SPACING,
        } + self.shift_x;
        let base = 0.5 * PLATE_HEIGHT + self.shift_y;
        let j = ((x[1] - base) / HOLE_SPACING).round();
        let cy = base + j * HOLE_SPACING;
        let (dx, dy) = (x[0] - cx, x[1] - cy);
        dx * dx + dy * dy >= HOLE_RADIUS * HOLE_RADIUS
    }
}

/// Convenience constructor mirroring the study parameters.
pub fn perforated_plate(shift_x: f64, shift_y: f64) -> Result<PerforatedPlate> {
    PerforatedPlate::new(shift_x, shift_y)
}
