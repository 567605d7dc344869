//! Random weighted topologies and weight noise.
//!
//! Base topologies are undirected with unit weights: each undirected edge is
//! stored as the two directed arcs `i -> j` and `j -> i`. Noise is applied to
//! every directed entry independently, so noisy matrices are generically
//! asymmetric.

mod edgelist;

pub use edgelist::{read_edge_list, write_edge_list};

use nalgebra::DMatrix;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::netmodel::Partition;
use crate::{Error, Result, RngStream};

/// Random-graph family and its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum GraphSpec {
    /// Each vertex pair is joined independently with probability `p`.
    Er { n: usize, p: f64 },
    /// Ring lattice with `k` neighbours per side, each edge rewired with
    /// probability `p`.
    Ws { n: usize, k: usize, p: f64 },
    /// Complete seed on `n - t` vertices followed by `t` preferential
    /// additions of `m` edges each.
    Ba { n: usize, t: usize, m: usize },
}

impl GraphSpec {
    pub fn n(&self) -> usize {
        match *self {
            GraphSpec::Er { n, .. } | GraphSpec::Ws { n, .. } | GraphSpec::Ba { n, .. } => n,
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            GraphSpec::Er { .. } => "er",
            GraphSpec::Ws { .. } => "ws",
            GraphSpec::Ba { .. } => "ba",
        }
    }

    /// Copy of this spec with a different vertex count.
    pub fn with_n(self, n: usize) -> Self {
        match self {
            GraphSpec::Er { p, .. } => GraphSpec::Er { n, p },
            GraphSpec::Ws { k, p, .. } => GraphSpec::Ws { n, k, p },
            GraphSpec::Ba { t, m, .. } => GraphSpec::Ba { n, t, m },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n < 2 {
            return Err(Error::InvalidSpec(format!("n must be at least 2, got {n}")));
        }
        match *self {
            GraphSpec::Er { p, .. } => check_probability("p", p),
            GraphSpec::Ws { k, p, .. } => {
                check_probability("p", p)?;
                if k < 1 {
                    return Err(Error::InvalidSpec("ws k must be at least 1".into()));
                }
                if 2 * k >= n {
                    return Err(Error::InvalidSpec(format!(
                        "ws needs 2k < n, got k={k}, n={n}"
                    )));
                }
                Ok(())
            }
            GraphSpec::Ba { t, m, .. } => {
                if t < 1 || m < 1 {
                    return Err(Error::InvalidSpec("ba t and m must be at least 1".into()));
                }
                if t >= n || n - t < m {
                    return Err(Error::InvalidSpec(format!(
                        "ba seed graph of n - t vertices must hold m edges per addition, got n={n}, t={t}, m={m}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Settings used for the noise experiments: ER p = 0.4, WS k = 2 and
    /// p = 0.5, BA t = 8 and m = 3.
    pub fn experiment_default(family: &str, n: usize) -> Option<Self> {
        match family {
            "er" => Some(GraphSpec::Er { n, p: 0.4 }),
            "ws" => Some(GraphSpec::Ws { n, k: 2, p: 0.5 }),
            "ba" => Some(GraphSpec::Ba { n, t: 8, m: 3 }),
            _ => None,
        }
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!("{name} must lie in [0, 1], got {p}")))
    }
}

/// Directed weighted graph. `w[(i, j)]` is the weight of the arc `j -> i`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDigraph {
    w: DMatrix<f64>,
}

impl WeightedDigraph {
    pub fn from_matrix(w: DMatrix<f64>) -> Result<Self> {
        if !w.is_square() {
            return Err(Error::NotSquare {
                rows: w.nrows(),
                cols: w.ncols(),
            });
        }
        for i in 0..w.nrows() {
            if w[(i, i)] != 0.0 {
                return Err(Error::InvalidGraph(format!(
                    "self-loop weight {} at vertex {i}",
                    w[(i, i)]
                )));
            }
        }
        if w.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidGraph("non-finite weight".into()));
        }
        Ok(Self { w })
    }

    pub fn empty(n: usize) -> Self {
        Self {
            w: DMatrix::zeros(n, n),
        }
    }

    /// Unit-weight undirected graph from an edge list.
    pub fn from_undirected_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut w = DMatrix::zeros(n, n);
        for &(a, b) in edges {
            if a >= n || b >= n || a == b {
                return Err(Error::InvalidGraph(format!("bad edge ({a}, {b}) for n={n}")));
            }
            w[(a, b)] = 1.0;
            w[(b, a)] = 1.0;
        }
        Ok(Self { w })
    }

    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn into_weights(self) -> DMatrix<f64> {
        self.w
    }

    pub fn arc_count(&self) -> usize {
        self.w.iter().filter(|&&x| x != 0.0).count()
    }

    /// Number of vertex pairs joined by at least one arc.
    pub fn edge_count(&self) -> usize {
        let n = self.n();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.w[(i, j)] != 0.0 || self.w[(j, i)] != 0.0)
            .count()
    }

    /// Undirected degree: number of distinct neighbours over both arc directions.
    pub fn degree(&self, v: usize) -> usize {
        (0..self.n())
            .filter(|&u| u != v && (self.w[(v, u)] != 0.0 || self.w[(u, v)] != 0.0))
            .count()
    }

    pub fn is_symmetric(&self) -> bool {
        self.w == self.w.transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    /// Perturb only the arcs present in the graph.
    Structured,
    /// Perturb every off-diagonal entry.
    Unstructured,
}

impl NoiseMode {
    pub fn name(&self) -> &'static str {
        match self {
            NoiseMode::Structured => "structured",
            NoiseMode::Unstructured => "unstructured",
        }
    }
}

/// Additive noise `eps / k` with `eps` uniform on `[-0.5, 0.5]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub mode: NoiseMode,
    pub k: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeaderPolicy {
    /// The highest-numbered vertices lead.
    LastIndices,
    /// Leaders drawn uniformly without replacement.
    UniformRandom,
}

pub fn generate_topology(spec: &GraphSpec, stream: &RngStream) -> Result<WeightedDigraph> {
    spec.validate()?;
    let mut rng = stream.rng();
    let edges = match *spec {
        GraphSpec::Er { n, p } => erdos_renyi(n, p, &mut rng),
        GraphSpec::Ws { n, k, p } => watts_strogatz(n, k, p, &mut rng),
        GraphSpec::Ba { n, t, m } => barabasi_albert(n, t, m, &mut rng),
    };
    WeightedDigraph::from_undirected_edges(spec.n(), &edges)
}

fn erdos_renyi<R: Rng>(n: usize, p: f64, rng: &mut R) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            // random() is in [0, 1), so p = 0 and p = 1 are exact
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    edges
}

fn watts_strogatz<R: Rng>(n: usize, k: usize, p: f64, rng: &mut R) -> Vec<(usize, usize)> {
    let mut adj = vec![vec![false; n]; n];
    let mut edges = Vec::with_capacity(n * k);
    for offset in 1..=k {
        for i in 0..n {
            let j = (i + offset) % n;
            adj[i][j] = true;
            adj[j][i] = true;
            edges.push((i, j));
        }
    }
    // Rewire the far endpoint, lattice distance by lattice distance.
    for e in edges.iter_mut() {
        if rng.random::<f64>() >= p {
            continue;
        }
        let (u, v) = *e;
        let free = (0..n).filter(|&w| w != u && !adj[u][w]).count();
        if free == 0 {
            continue;
        }
        let w = loop {
            let w = rng.random_range(0..n);
            if w != u && !adj[u][w] {
                break w;
            }
        };
        adj[u][v] = false;
        adj[v][u] = false;
        adj[u][w] = true;
        adj[w][u] = true;
        *e = (u, w);
    }
    edges
}

fn barabasi_albert<R: Rng>(n: usize, t: usize, m: usize, rng: &mut R) -> Vec<(usize, usize)> {
    let seed = n - t;
    let mut degree = vec![0usize; n];
    let mut edges = Vec::new();
    for i in 0..seed {
        for j in i + 1..seed {
            edges.push((i, j));
            degree[i] += 1;
            degree[j] += 1;
        }
    }
    for v in seed..n {
        let mut chosen: Vec<usize> = Vec::with_capacity(m);
        for _ in 0..m {
            let candidates: Vec<usize> = (0..v).filter(|u| !chosen.contains(u)).collect();
            let total: usize = candidates.iter().map(|&u| degree[u]).sum();
            let target = if total == 0 {
                candidates[rng.random_range(0..candidates.len())]
            } else {
                let mut r = rng.random_range(0..total);
                let mut pick = candidates[candidates.len() - 1];
                for &u in &candidates {
                    if r < degree[u] {
                        pick = u;
                        break;
                    }
                    r -= degree[u];
                }
                pick
            };
            chosen.push(target);
        }
        for &u in &chosen {
            edges.push((u, v));
            degree[u] += 1;
            degree[v] += 1;
        }
    }
    edges
}

pub fn apply_noise(
    g: &WeightedDigraph,
    noise: &NoiseSpec,
    stream: &RngStream,
) -> Result<WeightedDigraph> {
    if !(noise.k > 0.0) {
        return Err(Error::InvalidNoise(noise.k));
    }
    let n = g.n();
    let mut rng = stream.rng();
    let mut w = g.w.clone();
    // One sample per off-diagonal entry in row-major order for both modes, so
    // matched streams give identical perturbations on the shared arcs.
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let eps: f64 = rng.random_range(-0.5..=0.5);
            let apply = match noise.mode {
                NoiseMode::Unstructured => true,
                NoiseMode::Structured => g.w[(i, j)] != 0.0,
            };
            if apply {
                w[(i, j)] += eps / noise.k;
            }
        }
    }
    Ok(WeightedDigraph { w })
}

pub fn choose_partition(
    g: &WeightedDigraph,
    n_l: usize,
    policy: LeaderPolicy,
    stream: &RngStream,
) -> Result<Partition> {
    let n = g.n();
    if n_l < 1 || n_l >= n {
        return Err(Error::LeaderCount { n_l, n });
    }
    let mut leaders: Vec<usize> = match policy {
        LeaderPolicy::LastIndices => (n - n_l..n).collect(),
        LeaderPolicy::UniformRandom => {
            let mut rng = stream.rng();
            index::sample(&mut rng, n, n_l).into_vec()
        }
    };
    leaders.sort_unstable();
    let followers = (0..n).filter(|v| leaders.binary_search(v).is_err()).collect();
    Partition::new(n, followers, leaders)
}
