//! Measured material data: point clouds `D^loc` of `(r, w)` pairs, their
//! generators, and the element-wise projection `pi_D`.

mod io;
pub mod kdtree;

use std::fmt;
use std::str::FromStr;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::law::Law;
use crate::spaces::{PhaseField, ZField};
use kdtree::{KdTree, Point4};

/// Data index chosen for every element.
pub type Assignment = Vec<usize>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// Tensor grid over `[-4, 4]^2` in `w`, endpoints included.
    Grid,
    /// Uniform random `w` in `[-4, 4]^2`.
    Uniform,
}

impl fmt::Display for Sampling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sampling::Grid => "grid",
            Sampling::Uniform => "uniform",
        })
    }
}

impl FromStr for Sampling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid" => Ok(Sampling::Grid),
            "uniform" | "random" => Ok(Sampling::Uniform),
            other => Err(Error::InvalidArgument(format!("unknown sampling '{other}'"))),
        }
    }
}

/// Provenance of a data set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Metadata {
    pub law: Option<Law>,
    pub noise: f64,
    pub seed: u64,
    pub sampling: Option<Sampling>,
}

/// Half-width of the sampling box for `w`.
pub const BOX: f64 = 4.0;

#[derive(Debug, Clone)]
pub struct LocalDataSet {
    points: Vec<Point4>,
    tree: KdTree,
    meta: Metadata,
}

impl PartialEq for LocalDataSet {
    fn eq(&self, other: &Self) -> bool {
        self.meta == other.meta
            && self.points.len() == other.points.len()
            && self
                .points
                .iter()
                .zip(&other.points)
                .all(|(a, b)| a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()))
    }
}

/// Uniform draw in `[0, 1)` from the top 53 bits.
fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn symmetric(rng: &mut ChaCha8Rng, half: f64) -> f64 {
    half * (2.0 * unit(rng) - 1.0)
}

impl LocalDataSet {
    pub fn new(points: Vec<Point4>, meta: Metadata) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyDataSet);
        }
        if let Some(i) = points.iter().position(|p| p.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidArgument(format!("data point {i} is not finite")));
        }
        let tree = KdTree::build(&points);
        Ok(LocalDataSet { points, tree, meta })
    }

    /// `m_per_axis^2` points with `w` on a grid over `[-4, 4]^2` and
    /// `r = kappa(w)`.
    pub fn grid(law: Law, m_per_axis: usize) -> Result<Self> {
        Self::grid_noisy(law, m_per_axis, 0.0, 0)
    }

    /// Grid data with uniform noise in `[-noise, noise]^4` added to each point.
    pub fn grid_noisy(law: Law, m_per_axis: usize, noise: f64, seed: u64) -> Result<Self> {
        if m_per_axis < 2 {
            return Err(Error::InvalidArgument("grid needs at least 2 points per axis".into()));
        }
        check_noise(noise)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let step = 2.0 * BOX / (m_per_axis - 1) as f64;
        let coord = |i: usize| {
            if i == m_per_axis - 1 {
                BOX
            } else {
                -BOX + i as f64 * step
            }
        };
        let mut points = Vec::with_capacity(m_per_axis * m_per_axis);
        for j in 0..m_per_axis {
            for i in 0..m_per_axis {
                let w = [coord(i), coord(j)];
                points.push(perturb(law, w, noise, &mut rng));
            }
        }
        Self::new(
            points,
            Metadata {
                law: Some(law),
                noise,
                seed,
                sampling: Some(Sampling::Grid),
            },
        )
    }

    /// `m` points with `w` uniform in `[-4, 4]^2`, `r = kappa(w)` and
    /// uniform noise in `[-noise, noise]^4`.
    ///
    /// Every point consumes six draws of a ChaCha8 stream seeded with
    /// `seed`: `w1`, `w2`, then four noise values (drawn even when
    /// `noise = 0`, so the noiseless and noisy sets share `w`).
    pub fn uniform(law: Law, m: usize, noise: f64, seed: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::EmptyDataSet);
        }
        check_noise(noise)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = (0..m)
            .map(|_| {
                let w = [symmetric(&mut rng, BOX), symmetric(&mut rng, BOX)];
                perturb(law, w, noise, &mut rng)
            })
            .collect();
        Self::new(
            points,
            Metadata {
                law: Some(law),
                noise,
                seed,
                sampling: Some(Sampling::Uniform),
            },
        )
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point4] {
        &self.points
    }

    pub fn point(&self, j: usize) -> Result<Point4> {
        self.points.get(j).copied().ok_or(Error::OutOfRange {
            what: "data point",
            index: j,
            len: self.points.len(),
        })
    }

    pub fn metadata(&self) -> &Metadata {
        &self.meta
    }

    pub fn nearest(&self, q: &Point4) -> usize {
        self.tree.nearest(&self.points, q).expect("data set is nonempty")
    }

    pub fn k_nearest(&self, q: &Point4, k: usize) -> Vec<usize> {
        self.tree.k_nearest(&self.points, q, k)
    }

    /// Element-wise nearest data point to the element means of `z`.
    pub fn project(&self, z: &ZField) -> (PhaseField, Assignment) {
        let a: Assignment = (0..z.len())
            .into_par_iter()
            .map(|t| self.nearest(&z.mean(t)))
            .collect();
        let y = self.field_unchecked(&a);
        (y, a)
    }

    pub fn project_phase(&self, y: &PhaseField) -> (PhaseField, Assignment) {
        self.project(&ZField::from(y))
    }

    /// The phase field taking value `D^loc[a_T]` on every element `T`.
    pub fn field(&self, a: &[usize]) -> Result<PhaseField> {
        if let Some(&j) = a.iter().find(|&&j| j >= self.points.len()) {
            return Err(Error::OutOfRange {
                what: "data point",
                index: j,
                len: self.points.len(),
            });
        }
        Ok(self.field_unchecked(a))
    }

    fn field_unchecked(&self, a: &[usize]) -> PhaseField {
        let values: Vec<Point4> = a.iter().map(|&j| self.points[j]).collect();
        PhaseField::from_values(&values)
    }
}

fn check_noise(noise: f64) -> Result<()> {
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise bound must be >= 0, got {noise}")));
    }
    Ok(())
}

fn perturb(law: Law, w: [f64; 2], noise: f64, rng: &mut ChaCha8Rng) -> Point4 {
    let r = law.kappa(w);
    let mut p = [r[0], r[1], w[0], w[1]];
    for v in &mut p {
        let s = symmetric(rng, noise);
        *v += s;
    }
    p
}
