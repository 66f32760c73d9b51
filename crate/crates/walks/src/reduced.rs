//! Complete graphs contracted over groups of equal quality.
//!
//! Vertices of a complete graph that share a quality receive identical phase
//! shifts and see identical neighbourhoods, so each group can be replaced by
//! one weighted vertex. For group sizes `n_i` summing to `N` the contracted
//! adjacency has `n_i - 1` on the diagonal (mixing inside a group) and
//! `sqrt(n_i n_j)` off it, and the start state has components
//! `sqrt(n_i / N)`. Group probabilities then evolve exactly as in the full
//! `N`-vertex graph.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::dense::{apply_phase, probabilities, SymmetricWalk};
use crate::error::{invalid, Result};

/// Largest group count handled by the dense evolution.
pub const MAX_GROUPS: usize = 64;

/// Phase strengths and walk times, applied in order `gamma_1, t_1, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct QwoaParams {
    pub gammas: Vec<f64>,
    pub times: Vec<f64>,
}

impl QwoaParams {
    pub fn new(gammas: Vec<f64>, times: Vec<f64>) -> Result<Self> {
        if gammas.len() != times.len() {
            return Err(invalid(format!(
                "{} phase strengths but {} walk times",
                gammas.len(),
                times.len()
            )));
        }
        Ok(Self { gammas, times })
    }

    /// The same pair applied `r` times.
    pub fn repeated(gamma: f64, t: f64, r: usize) -> Self {
        Self {
            gammas: vec![gamma; r],
            times: vec![t; r],
        }
    }

    /// Interleaved `[gamma_1, t_1, gamma_2, t_2, ...]`.
    pub fn from_flat(x: &[f64]) -> Result<Self> {
        if x.len() % 2 != 0 {
            return Err(invalid("flat parameter list must have even length"));
        }
        Ok(Self {
            gammas: x.iter().step_by(2).copied().collect(),
            times: x.iter().skip(1).step_by(2).copied().collect(),
        })
    }

    pub fn rounds(&self) -> usize {
        self.gammas.len()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.gammas.iter().copied().zip(self.times.iter().copied())
    }
}

#[derive(Debug, Clone)]
pub struct ReducedGraph {
    counts: Vec<u64>,
    qualities: Vec<f64>,
    total: u64,
    walk: SymmetricWalk,
}

impl ReducedGraph {
    pub fn new(counts: Vec<u64>, qualities: Vec<f64>) -> Result<Self> {
        let k = counts.len();
        if k == 0 || k > MAX_GROUPS {
            return Err(invalid(format!("group count must be in 1..={MAX_GROUPS}, got {k}")));
        }
        if qualities.len() != k {
            return Err(invalid("one quality per group required"));
        }
        if counts.contains(&0) {
            return Err(invalid("every group needs at least one vertex"));
        }
        if qualities.iter().any(|q| !q.is_finite()) {
            return Err(invalid("qualities must be finite"));
        }
        let total = counts.iter().sum();
        let walk = SymmetricWalk::new(adjacency(&counts))?;
        Ok(Self {
            counts,
            qualities,
            total,
            walk,
        })
    }

    /// `m` marked vertices of quality 1 among `n`, the rest quality 0.
    pub fn binary(marked: u64, n: u64) -> Result<Self> {
        if marked == 0 || marked >= n {
            return Err(invalid("need 0 < marked < n"));
        }
        Self::new(vec![marked, n - marked], vec![1.0, 0.0])
    }

    pub fn groups(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn qualities(&self) -> &[f64] {
        &self.qualities
    }

    pub fn adjacency(&self) -> DMatrix<f64> {
        adjacency(&self.counts)
    }

    pub fn spectral_radius(&self) -> f64 {
        self.walk.spectral_radius()
    }

    pub fn initial_state(&self) -> Vec<Complex64> {
        let n = self.total as f64;
        self.counts
            .iter()
            .map(|&c| Complex64::new((c as f64 / n).sqrt(), 0.0))
            .collect()
    }

    /// Final group amplitudes, walks applied through the eigendecomposition
    /// of the contracted adjacency.
    pub fn evolve(&self, params: &QwoaParams) -> Vec<Complex64> {
        let mut psi = self.initial_state();
        for (g, t) in params.pairs() {
            apply_phase(g, &self.qualities, &mut psi);
            self.walk.apply(t, &mut psi);
        }
        psi
    }

    /// Same evolution using `A = N|s><s| - I`, so
    /// `exp(-i t A) = e^{i t} (I + (e^{-i t N} - 1)|s><s|)`.
    pub fn evolve_closed_form(&self, params: &QwoaParams) -> Vec<Complex64> {
        let s = self.initial_state();
        let n = self.total as f64;
        let mut psi = s.clone();
        for (g, t) in params.pairs() {
            apply_phase(g, &self.qualities, &mut psi);
            let overlap: Complex64 = s.iter().zip(&psi).map(|(a, b)| a.conj() * b).sum();
            let kick = (Complex64::from_polar(1.0, -t * n) - 1.0) * overlap;
            let global = Complex64::from_polar(1.0, t);
            for (p, a) in psi.iter_mut().zip(&s) {
                *p = global * (*p + kick * a);
            }
        }
        psi
    }

    /// Probability held by each group after `params`.
    pub fn group_probabilities(&self, params: &QwoaParams) -> Vec<f64> {
        probabilities(&self.evolve(params))
    }

    /// Probability held by group `g` after `params`.
    pub fn group_probability(&self, g: usize, params: &QwoaParams) -> f64 {
        self.evolve(params)[g].norm_sqr()
    }
}

fn adjacency(counts: &[u64]) -> DMatrix<f64> {
    let k = counts.len();
    DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            counts[i] as f64 - 1.0
        } else {
            (counts[i] as f64 * counts[j] as f64).sqrt()
        }
    })
}

/// Small-ratio amplification of the marked group after one round with phase
/// strength `gamma` and walk time `t` on an `n`-vertex complete graph.
///
/// Written for the phase `exp(+i gamma Q)`; with the `exp(-i gamma Q)` used
/// by [`ReducedGraph::evolve`] the round at `gamma` matches this at `-gamma`.
/// The two agree at the maximum, 9 at `(pi, pi/n)`.
pub fn single_iteration_amplification(gamma: f64, t: f64, n: f64) -> f64 {
    let nt = n * t;
    3.0 + 2.0 * (nt.cos() * (gamma.cos() - 1.0) - gamma.cos()) - 2.0 * nt.sin() * gamma.sin()
}

/// Final group probabilities of the uncontracted complete graph on
/// `qualities.len()` vertices, summed over the vertex-to-group map `group`.
/// Only practical for a handful of vertices.
pub fn full_complete_group_probabilities(
    qualities: &[f64],
    group: &[usize],
    params: &QwoaParams,
) -> Result<Vec<f64>> {
    let n = qualities.len();
    if n == 0 || group.len() != n {
        return Err(invalid("one group index per vertex required"));
    }
    let a = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 });
    let walk = SymmetricWalk::new(a)?;
    let mut psi = vec![Complex64::new(1.0 / (n as f64).sqrt(), 0.0); n];
    for (g, t) in params.pairs() {
        apply_phase(g, qualities, &mut psi);
        walk.apply(t, &mut psi);
    }
    let k = group.iter().max().map_or(0, |m| m + 1);
    let mut out = vec![0.0; k];
    for (p, &g) in probabilities(&psi).iter().zip(group) {
        out[g] += p;
    }
    Ok(out)
}

/// Contracted complete graph of `n` vertices: `marked` vertices of quality
/// 1 and the rest split into `parts - 1` near-equal groups whose qualities
/// are the left endpoints `j/(parts-1)` of a uniform stratification of
/// `[0, 1)`. With two parts this is the binary marking.
pub fn partition_graph(parts: usize, n: u64, marked: u64) -> Result<ReducedGraph> {
    if parts < 2 {
        return Err(invalid("need at least two parts"));
    }
    let rest = n
        .checked_sub(marked)
        .filter(|&r| r >= (parts - 1) as u64 && marked > 0)
        .ok_or_else(|| invalid("too few vertices for the requested partition"))?;
    let others = (parts - 1) as u64;
    let mut counts = vec![marked];
    let mut qualities = vec![1.0];
    for j in 0..others {
        counts.push(rest / others + u64::from(j < rest % others));
        qualities.push(j as f64 / others as f64);
    }
    ReducedGraph::new(counts, qualities)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn three_group_matrices() {
        let g = ReducedGraph::new(vec![2, 3, 5], vec![0.1, 0.2, 0.3]).unwrap();
        let a = g.adjacency();
        assert_eq!(a[(0, 0)], 1.0);
        assert_eq!(a[(2, 2)], 4.0);
        assert!((a[(0, 1)] - 6f64.sqrt()).abs() < 1e-15);
        assert!((a[(1, 2)] - 15f64.sqrt()).abs() < 1e-15);
        let s = g.initial_state();
        assert!((s[2].re - 0.5f64.sqrt()).abs() < 1e-15);
        let norm: f64 = s.iter().map(|x| x.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_phase_leaves_marked_probability() {
        let g = ReducedGraph::binary(3, 1000).unwrap();
        let p = g.group_probability(0, &QwoaParams::repeated(0.0, 0.37, 5));
        assert!((p - 0.003).abs() < 1e-13);
    }

    #[test]
    fn single_round_formula() {
        assert!((single_iteration_amplification(PI, PI / 1e6, 1e6) - 9.0).abs() < 1e-12);
        assert!((single_iteration_amplification(0.0, 0.123, 1e6) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partitions() {
        let g = partition_graph(5, 100_000_000, 10).unwrap();
        assert_eq!(g.counts().iter().sum::<u64>(), 100_000_000);
        assert_eq!(g.qualities(), &[1.0, 0.0, 0.25, 0.5, 0.75]);
        let b = partition_graph(2, 100, 10).unwrap();
        assert_eq!(b.counts(), &[10, 90]);
        assert_eq!(b.qualities(), &[1.0, 0.0]);
        assert!(partition_graph(1, 100, 10).is_err());
    }

    #[test]
    fn flat_params() {
        let p = QwoaParams::from_flat(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(p.gammas, vec![1.0, 3.0]);
        assert_eq!(p.times, vec![2.0, 4.0]);
        assert!(QwoaParams::from_flat(&[1.0]).is_err());
    }
}
