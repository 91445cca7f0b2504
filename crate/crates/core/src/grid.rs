//! Uniform grids on the truncated trait domain `[−L, L]`.

use crate::error::{invalid, Result};
use crate::math::Real;
use alloc::vec::Vec;

/// Uniform grid with trapezoid quadrature on `[−L, L]`.
///
/// Nodes are placed symmetrically, `x_j = h·(j − (n−1)/2)`, so that
/// `x_{n−1−j} = −x_j` holds exactly in floating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    half_length: f64,
    n_nodes: usize,
}

impl Grid {
    pub fn new(half_length: f64, n_nodes: usize) -> Result<Grid> {
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(invalid("grid half-length must be positive and finite"));
        }
        if n_nodes < 3 {
            return Err(invalid("grid needs at least 3 nodes"));
        }
        Ok(Grid { half_length, n_nodes })
    }

    /// Grid whose spacing is at most `h`, with an odd node count so `x = 0` is a node.
    pub fn with_max_spacing(half_length: f64, h: f64) -> Result<Grid> {
        if !(h.is_finite() && h > 0.0) {
            return Err(invalid("grid spacing must be positive and finite"));
        }
        let intervals = (2.0 * half_length / h).ceil().max(2.0) as usize;
        let intervals = intervals + intervals % 2;
        Grid::new(half_length, intervals + 1)
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / (self.n_nodes - 1) as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        self.spacing() * (j as f64 - (self.n_nodes - 1) as f64 / 2.0)
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_nodes).map(|j| self.node(j)).collect()
    }

    pub fn weight(&self, j: usize) -> f64 {
        let h = self.spacing();
        if j == 0 || j + 1 == self.n_nodes {
            h / 2.0
        } else {
            h
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.n_nodes).map(|j| self.weight(j)).collect()
    }

    /// Index of the node at `x = 0`, if the node count is odd.
    pub fn center(&self) -> Option<usize> {
        (self.n_nodes % 2 == 1).then_some((self.n_nodes - 1) / 2)
    }

    /// Same spacing on twice the half-length.
    pub fn doubled(&self) -> Grid {
        Grid {
            half_length: 2.0 * self.half_length,
            n_nodes: 2 * (self.n_nodes - 1) + 1,
        }
    }

    /// Same half-length with the spacing halved.
    pub fn refined(&self) -> Grid {
        Grid {
            half_length: self.half_length,
            n_nodes: 2 * (self.n_nodes - 1) + 1,
        }
    }

    /// Trapezoid integral of grid samples.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n_nodes);
        let h = self.spacing();
        let n = values.len();
        let inner: f64 = values[1..n - 1].iter().sum();
        h * (inner + 0.5 * (values[0] + values[n - 1]))
    }

    /// Trapezoid inner product `∫ f g`.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        let h = self.spacing();
        let n = f.len();
        let mut acc = 0.0;
        for j in 1..n - 1 {
            acc += f[j] * g[j];
        }
        h * (acc + 0.5 * (f[0] * g[0] + f[n - 1] * g[n - 1]))
    }

    pub fn l1_norm(&self, f: &[f64]) -> f64 {
        let abs: Vec<f64> = f.iter().map(|v| v.abs()).collect();
        self.integrate(&abs)
    }

    pub fn l2_norm(&self, f: &[f64]) -> f64 {
        self.inner(f, f).sqrt()
    }

    /// Samples a function at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.n_nodes).map(|j| f(self.node(j))).collect()
    }
}

pub fn linf_norm(f: &[f64]) -> f64 {
    f.iter().fold(0.0, |m, v| m.max(v.abs()))
}
