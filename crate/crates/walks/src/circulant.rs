//! Circulant graphs and walks diagonalised by the discrete Fourier transform.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::dense::{apply_phase, SymmetricWalk};
use crate::error::{invalid, Error, Result};
use crate::reduced::QwoaParams;

/// Eigenvalues closer than this count as one when computing the spectral
/// count.
pub const SPECTRAL_TOLERANCE: f64 = 1e-9;

pub const MAX_VERTICES: usize = 4096;

/// Largest vertex count for which whole classes are enumerated.
pub const MAX_ENUMERATION_VERTICES: usize = 40;

/// Vertex `x` is joined to `x +- s (mod n)` for each jump `s` in the
/// connection set, a subset of `1..=n/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CirculantGraph {
    n: usize,
    jumps: Vec<usize>,
    eigenvalues: Vec<f64>,
}

impl CirculantGraph {
    pub fn new(n: usize, mut jumps: Vec<usize>) -> Result<Self> {
        if !(2..=MAX_VERTICES).contains(&n) {
            return Err(invalid(format!("vertex count must be in 2..={MAX_VERTICES}, got {n}")));
        }
        jumps.sort_unstable();
        jumps.dedup();
        if jumps.is_empty() || jumps[0] == 0 || *jumps.last().unwrap() > n / 2 {
            return Err(invalid(format!("connection set must be a non-empty subset of 1..={}", n / 2)));
        }
        let eigenvalues = (0..n)
            .map(|j| {
                jumps
                    .iter()
                    .map(|&s| {
                        if 2 * s == n {
                            (std::f64::consts::PI * j as f64).cos()
                        } else {
                            2.0 * (2.0 * std::f64::consts::PI * (j * s % n) as f64 / n as f64).cos()
                        }
                    })
                    .sum()
            })
            .collect();
        Ok(Self { n, jumps, eigenvalues })
    }

    pub fn complete(n: usize) -> Result<Self> {
        Self::new(n, (1..=n / 2).collect())
    }

    pub fn cycle(n: usize) -> Result<Self> {
        Self::new(n, vec![1])
    }

    pub fn vertices(&self) -> usize {
        self.n
    }

    pub fn jumps(&self) -> &[usize] {
        &self.jumps
    }

    /// Adjacency eigenvalue of the Fourier mode `j`, for `j = 0..n`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Vertex degree; every vertex has the same one.
    pub fn degree(&self) -> usize {
        self.jumps.iter().map(|&s| if 2 * s == self.n { 1 } else { 2 }).sum()
    }

    /// Number of distinct adjacency eigenvalues.
    pub fn spectral_count(&self) -> usize {
        let mut v = self.eigenvalues.clone();
        v.sort_by(f64::total_cmp);
        1 + v.windows(2).filter(|w| w[1] - w[0] > SPECTRAL_TOLERANCE).count()
    }

    /// Connected exactly when the jumps and `n` have no common divisor.
    pub fn is_connected(&self) -> bool {
        self.jumps.iter().fold(self.n, |g, &s| gcd(g, s)) == 1
    }

    pub fn label(&self) -> String {
        format!("D{}E{}", self.degree(), self.spectral_count())
    }

    pub fn adjacency(&self) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |a, b| {
            let d = (b + n - a) % n;
            let d = d.min(n - d);
            if d != 0 && self.jumps.binary_search(&d).is_ok() {
                1.0
            } else {
                0.0
            }
        })
    }
}

impl fmt::Display for CirculantGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let set: Vec<String> = self.jumps.iter().map(usize::to_string).collect();
        write!(f, "C{}({})", self.n, set.join(" "))
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Evolves states on one circulant graph, reusing the transform plans.
pub struct CirculantWalk {
    graph: CirculantGraph,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl CirculantWalk {
    pub fn new(graph: CirculantGraph) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(graph.n);
        let inverse = planner.plan_fft_inverse(graph.n);
        Self {
            graph,
            forward,
            inverse,
        }
    }

    pub fn graph(&self) -> &CirculantGraph {
        &self.graph
    }

    /// `psi <- exp(-i t A) psi`, applied as a phase on each Fourier mode.
    pub fn apply(&self, t: f64, psi: &mut [Complex64]) {
        let n = self.graph.n as f64;
        self.forward.process(psi);
        for (p, &l) in psi.iter_mut().zip(&self.graph.eigenvalues) {
            *p *= Complex64::from_polar(1.0 / n, -t * l);
        }
        self.inverse.process(psi);
    }

    /// Final state from the equal superposition.
    pub fn evolve(&self, qualities: &[f64], params: &QwoaParams) -> Result<Vec<Complex64>> {
        let n = self.graph.n;
        if qualities.len() != n {
            return Err(invalid(format!("expected {n} qualities, got {}", qualities.len())));
        }
        let mut psi = vec![Complex64::new(1.0 / (n as f64).sqrt(), 0.0); n];
        for (g, t) in params.pairs() {
            apply_phase(g, qualities, &mut psi);
            self.apply(t, &mut psi);
        }
        Ok(psi)
    }

    pub fn probability_at(&self, qualities: &[f64], params: &QwoaParams, vertex: usize) -> Result<f64> {
        Ok(self.evolve(qualities, params)?[vertex].norm_sqr())
    }
}

/// Reference evolution through a dense eigendecomposition of the adjacency.
pub fn evolve_dense(graph: &CirculantGraph, qualities: &[f64], params: &QwoaParams) -> Result<Vec<Complex64>> {
    let n = graph.n;
    if qualities.len() != n {
        return Err(invalid(format!("expected {n} qualities, got {}", qualities.len())));
    }
    let walk = SymmetricWalk::new(graph.adjacency())?;
    let mut psi = vec![Complex64::new(1.0 / (n as f64).sqrt(), 0.0); n];
    for (g, t) in params.pairs() {
        apply_phase(g, qualities, &mut psi);
        walk.apply(t, &mut psi);
    }
    Ok(psi)
}

/// Every connected circulant graph on `n` vertices, optionally filtered by
/// degree and spectral count, in order of the connection-set bitmask.
pub fn enumerate_circulants(n: usize, degree: Option<usize>, spectral: Option<usize>) -> Result<Vec<CirculantGraph>> {
    if !(2..=MAX_ENUMERATION_VERTICES).contains(&n) {
        return Err(invalid(format!(
            "enumeration needs 2..={MAX_ENUMERATION_VERTICES} vertices, got {n}"
        )));
    }
    let half = n / 2;
    let mut out = Vec::new();
    for mask in 1u64..(1u64 << half) {
        let jumps: Vec<usize> = (0..half).filter(|b| mask >> b & 1 == 1).map(|b| b + 1).collect();
        let g = CirculantGraph::new(n, jumps)?;
        if !g.is_connected() || degree.is_some_and(|d| g.degree() != d) {
            continue;
        }
        if spectral.is_some_and(|e| g.spectral_count() != e) {
            continue;
        }
        out.push(g);
    }
    if out.is_empty() {
        return Err(Error::EmptyClass {
            n,
            degree: degree.unwrap_or(0),
            spectral: spectral.unwrap_or(0),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_and_cycle() {
        let k = CirculantGraph::complete(24).unwrap();
        assert_eq!(k.degree(), 23);
        assert_eq!(k.spectral_count(), 2);
        assert_eq!(k.label(), "D23E2");
        assert!((k.spectral_radius() - 23.0).abs() < 1e-12);
        let c = CirculantGraph::cycle(24).unwrap();
        assert_eq!(c.degree(), 2);
        assert!(c.is_connected());
        assert!(!CirculantGraph::new(24, vec![2, 4]).unwrap().is_connected());
    }

    #[test]
    fn adjacency_matches_spectrum() {
        let g = CirculantGraph::new(12, vec![1, 4, 6]).unwrap();
        let a = g.adjacency();
        assert_eq!(a.row(0).sum() as usize, g.degree());
        let mut dense: Vec<f64> = a.symmetric_eigenvalues().iter().copied().collect();
        let mut fourier = g.eigenvalues().to_vec();
        dense.sort_by(f64::total_cmp);
        fourier.sort_by(f64::total_cmp);
        for (x, y) in dense.iter().zip(&fourier) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn bad_sets() {
        assert!(CirculantGraph::new(24, vec![]).is_err());
        assert!(CirculantGraph::new(24, vec![13]).is_err());
        assert!(CirculantGraph::new(24, vec![0, 1]).is_err());
    }
}
