//! Finite electrical networks and effective conductance.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MAX_ITERATIONS: usize = 200_000;

/// Undirected weighted graph on `0..n`.
#[derive(Clone, Debug, Default)]
pub struct Network {
    n: usize,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl Network {
    pub fn new(n: usize) -> Self {
        Network {
            n,
            adjacency: vec![Vec::new(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Adds a conductor; parallel conductors add up.
    pub fn add_edge(&mut self, u: usize, v: usize, c: f64) {
        assert!(
            c >= 0.0 && c.is_finite(),
            "conductance must be finite and nonnegative"
        );
        if u == v || c == 0.0 {
            return;
        }
        self.adjacency[u].push((v, c));
        self.adjacency[v].push((u, c));
    }

    pub fn add_vertex(&mut self) -> usize {
        self.adjacency.push(Vec::new());
        self.n += 1;
        self.n - 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConductanceResult {
    pub c_eff: f64,
    pub iterations: usize,
    /// Max-norm residual of the harmonic equations at termination.
    pub residual: f64,
}

/// Effective conductance between `source` (potential 1) and the wired set
/// `sinks` (potential 0).
///
/// Solves the Dirichlet problem on the component of `source` by
/// Jacobi-preconditioned conjugate gradients and returns the Dirichlet
/// energy of the computed potential, which overestimates `C_eff` only by a
/// term quadratic in the solver error. Returns 0 when no sink is reachable.
pub fn effective_conductance(
    net: &Network,
    source: usize,
    sinks: &[usize],
    tol: f64,
    max_iterations: usize,
) -> Result<ConductanceResult> {
    let mut is_sink = vec![false; net.n];
    for &s in sinks {
        is_sink[s] = true;
    }
    if is_sink[source] {
        return Err(Error::Precondition("source lies in the sink set".into()));
    }
    // Component of the source, stopping at sinks.
    let mut local = vec![usize::MAX; net.n];
    let mut order = vec![source];
    local[source] = 0;
    let mut reached_sink = false;
    let mut queue = VecDeque::from([source]);
    while let Some(x) = queue.pop_front() {
        for &(y, _) in &net.adjacency[x] {
            if is_sink[y] {
                reached_sink = true;
            } else if local[y] == usize::MAX {
                local[y] = order.len();
                order.push(y);
                queue.push_back(y);
            }
        }
    }
    if !reached_sink {
        return Ok(ConductanceResult {
            c_eff: 0.0,
            iterations: 0,
            residual: 0.0,
        });
    }
    // Unknowns: component vertices other than the source.
    let m = order.len() - 1;
    let unknown = |v: usize| -> Option<usize> {
        match local[v] {
            usize::MAX | 0 => None,
            k => Some(k - 1),
        }
    };
    let mut diag = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    for (k, &v) in order.iter().enumerate().skip(1) {
        for &(y, c) in &net.adjacency[v] {
            diag[k - 1] += c;
            if y == source {
                rhs[k - 1] += c;
            }
        }
    }
    let apply = |x: &[f64], out: &mut [f64]| {
        for (k, &v) in order.iter().enumerate().skip(1) {
            let mut acc = diag[k - 1] * x[k - 1];
            for &(y, c) in &net.adjacency[v] {
                if let Some(j) = unknown(y) {
                    acc -= c * x[j];
                }
            }
            out[k - 1] = acc;
        }
    };
    let max_norm = |v: &[f64]| v.iter().fold(0.0f64, |a, &x| a.max(x.abs()));

    let mut phi = vec![0.0; m];
    let mut r = rhs.clone();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(a, d)| a / d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; m];
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut iterations = 0;
    let mut residual = max_norm(&r);
    while residual > tol {
        if iterations >= max_iterations {
            return Err(Error::Numeric {
                message: format!(
                    "conjugate gradients did not converge in {max_iterations} iterations"
                ),
                residual,
            });
        }
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        let alpha = rz / pap;
        for i in 0..m {
            phi[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..m {
            z[i] = r[i] / diag[i];
        }
        let rz_next: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..m {
            p[i] = z[i] + beta * p[i];
        }
        iterations += 1;
        residual = max_norm(&r);
    }
    let potential = |v: usize| -> f64 {
        if v == source {
            1.0
        } else {
            unknown(v).map_or(0.0, |j| phi[j])
        }
    };
    let mut energy = 0.0;
    for &v in &order {
        let pv = potential(v);
        for &(y, c) in &net.adjacency[v] {
            let py = potential(y);
            // Each internal edge is seen from both ends; edges into sinks once.
            let w = if is_sink[y] { 1.0 } else { 0.5 };
            energy += w * c * (pv - py) * (pv - py);
        }
    }
    Ok(ConductanceResult {
        c_eff: energy,
        iterations,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(len: usize) -> Network {
        let mut net = Network::new(len + 1);
        for i in 0..len {
            net.add_edge(i, i + 1, 1.0);
        }
        net
    }

    #[test]
    fn series_law() {
        for r in [1, 2, 7, 30] {
            let res = effective_conductance(&path(r), 0, &[r], 1e-12, 10_000).unwrap();
            assert!((res.c_eff - 1.0 / r as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn parallel_law() {
        let mut net = Network::new(2);
        net.add_edge(0, 1, 0.5);
        net.add_edge(0, 1, 2.0);
        let res = effective_conductance(&net, 0, &[1], 1e-12, 100).unwrap();
        assert!((res.c_eff - 2.5).abs() < 1e-12);
    }

    #[test]
    fn unreachable_sink_gives_zero() {
        let mut net = Network::new(4);
        net.add_edge(0, 1, 1.0);
        net.add_edge(2, 3, 1.0);
        let res = effective_conductance(&net, 0, &[3], 1e-12, 100).unwrap();
        assert_eq!(res.c_eff, 0.0);
    }

    #[test]
    fn iteration_cap_reports_residual() {
        let err = effective_conductance(&path(50), 0, &[50], 1e-14, 2).unwrap_err();
        assert!(matches!(err, Error::Numeric { residual, .. } if residual > 0.0));
    }

    #[test]
    fn source_in_sinks_rejected() {
        assert!(effective_conductance(&path(2), 0, &[0], 1e-10, 10).is_err());
    }
}
