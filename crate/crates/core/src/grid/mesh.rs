use serde::Serialize;

use crate::error::{Error, Result};

/// Graded partition `x_i = (i/n)^gamma` of `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mesh {
    n: usize,
    gamma: f64,
    nodes: Vec<f64>,
}

impl Mesh {
    pub fn graded(n: usize, gamma: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidMesh(format!("need at least 2 elements, got {n}")));
        }
        if !gamma.is_finite() || gamma < 1.0 {
            return Err(Error::InvalidMesh(format!("grading exponent must be >= 1, got {gamma}")));
        }
        let mut nodes: Vec<f64> = (0..=n).map(|i| (i as f64 / n as f64).powf(gamma)).collect();
        nodes[0] = 0.0;
        nodes[n] = 1.0;
        Ok(Self { n, gamma, nodes })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::graded(n, 1.0)
    }

    /// Grading used when none is configured: nodes cluster at the
    /// degenerate end for every degenerate profile.
    pub fn default_gamma(alpha: f64) -> f64 {
        if alpha > 0.0 {
            2.0
        } else {
            1.0
        }
    }

    /// Number of elements.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn element(&self, e: usize) -> (f64, f64) {
        (self.nodes[e], self.nodes[e + 1])
    }

    pub fn h_max(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    pub fn h_min(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_exact_and_increasing() {
        for &(n, g) in &[(2, 1.0), (7, 2.0), (64, 1.5), (1000, 3.0)] {
            let m = Mesh::graded(n, g).unwrap();
            assert_eq!(m.nodes()[0], 0.0);
            assert_eq!(m.nodes()[n], 1.0);
            assert!(m.nodes().windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn gamma_one_is_uniform() {
        let m = Mesh::uniform(8).unwrap();
        for (i, x) in m.nodes().iter().enumerate() {
            assert!((x - i as f64 / 8.0).abs() < 1e-15);
        }
    }

    #[test]
    fn invalid_meshes() {
        assert!(Mesh::graded(1, 1.0).is_err());
        assert!(Mesh::graded(10, 0.5).is_err());
    }

    #[test]
    fn default_grading() {
        assert_eq!(Mesh::default_gamma(0.0), 1.0);
        assert_eq!(Mesh::default_gamma(0.25), 2.0);
        assert_eq!(Mesh::default_gamma(1.5), 2.0);
    }
}
