//! Leader-follower systems and open-loop steering.
//!
//! With followers `f` and leaders `l`, the network matrix splits into
//!
//! ```text
//! [ x_f' ]   [ M_ff  M_fl ] [ x_f ]   [  0  ]
//! [ x_l' ] = [ M_lf  M_ll ] [ x_l ] + [ u_l ]
//! ```
//!
//! where `M = A` (adjacency) or `M = L` (Laplacian). The leader states act as
//! the input of the follower subsystem, so controllability reduces to the
//! pencil `(M_ff, M_fl)`. Laplacian dynamics run on `-L`; the pencil is kept
//! unsigned since negating both blocks leaves the Krylov span unchanged.

use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::expm::expm;
use crate::graphgen::WeightedDigraph;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    followers: Vec<usize>,
    leaders: Vec<usize>,
}

impl Partition {
    /// Checks that the two index lists are disjoint and cover `0..n`.
    pub fn new(n: usize, followers: Vec<usize>, leaders: Vec<usize>) -> Result<Self> {
        if followers.len() + leaders.len() != n {
            return Err(Error::InvalidPartition(format!(
                "{} followers + {} leaders != {n} vertices",
                followers.len(),
                leaders.len()
            )));
        }
        let mut seen = vec![false; n];
        for &v in followers.iter().chain(&leaders) {
            if v >= n {
                return Err(Error::InvalidPartition(format!("vertex {v} out of range")));
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidPartition(format!("vertex {v} listed twice")));
            }
        }
        Ok(Self { followers, leaders })
    }

    /// The last `n_l` vertices lead.
    pub fn last(n: usize, n_l: usize) -> Result<Self> {
        if n_l < 1 || n_l >= n {
            return Err(Error::LeaderCount { n_l, n });
        }
        Self::new(n, (0..n - n_l).collect(), (n - n_l..n).collect())
    }

    pub fn followers(&self) -> &[usize] {
        &self.followers
    }

    pub fn leaders(&self) -> &[usize] {
        &self.leaders
    }

    pub fn n(&self) -> usize {
        self.followers.len() + self.leaders.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Adjacency,
    Laplacian,
}

impl Representation {
    pub fn name(&self) -> &'static str {
        match self {
            Representation::Adjacency => "adjacency",
            Representation::Laplacian => "laplacian",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeaderFollowerSystem {
    pub representation: Representation,
    /// Follower block `A_ff` or `L_ff`.
    pub ff: DMatrix<f64>,
    /// Leader-to-follower block `A_fl` or `L_fl`.
    pub fl: DMatrix<f64>,
    pub lf: DMatrix<f64>,
    pub ll: DMatrix<f64>,
}

impl LeaderFollowerSystem {
    /// Build directly from a pencil; the leader blocks are left empty.
    pub fn from_pencil(
        representation: Representation,
        ff: DMatrix<f64>,
        fl: DMatrix<f64>,
    ) -> Result<Self> {
        if !ff.is_square() {
            return Err(Error::NotSquare {
                rows: ff.nrows(),
                cols: ff.ncols(),
            });
        }
        if fl.nrows() != ff.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "input block has {} rows, state has {}",
                fl.nrows(),
                ff.nrows()
            )));
        }
        let m = fl.ncols();
        let nf = ff.nrows();
        Ok(Self {
            representation,
            ff,
            fl,
            lf: DMatrix::zeros(m, nf),
            ll: DMatrix::zeros(m, m),
        })
    }

    pub fn n_followers(&self) -> usize {
        self.ff.nrows()
    }

    pub fn n_leaders(&self) -> usize {
        self.fl.ncols()
    }

    /// The controllability pencil `(F, G)`.
    pub fn pencil(&self) -> (&DMatrix<f64>, &DMatrix<f64>) {
        (&self.ff, &self.fl)
    }

    fn sign(&self) -> f64 {
        match self.representation {
            Representation::Adjacency => 1.0,
            Representation::Laplacian => -1.0,
        }
    }

    /// State matrix of the follower dynamics: `A_ff` or `-L_ff`.
    pub fn dynamics_state(&self) -> DMatrix<f64> {
        &self.ff * self.sign()
    }

    /// Input matrix of the follower dynamics, with leader states as input:
    /// `A_fl` or `-L_fl`.
    pub fn dynamics_input(&self) -> DMatrix<f64> {
        &self.fl * self.sign()
    }

    /// Reassemble the full matrix in the original vertex order.
    pub fn reassemble(&self, p: &Partition) -> Result<DMatrix<f64>> {
        let (nf, nl) = (p.followers().len(), p.leaders().len());
        if nf != self.n_followers() || nl != self.ll.nrows() {
            return Err(Error::DimensionMismatch("partition does not match system".into()));
        }
        let n = p.n();
        let mut m = DMatrix::zeros(n, n);
        let blocks = [
            (p.followers(), p.followers(), &self.ff),
            (p.followers(), p.leaders(), &self.fl),
            (p.leaders(), p.followers(), &self.lf),
            (p.leaders(), p.leaders(), &self.ll),
        ];
        for (rows, cols, block) in blocks {
            for (bi, &i) in rows.iter().enumerate() {
                for (bj, &j) in cols.iter().enumerate() {
                    m[(i, j)] = block[(bi, bj)];
                }
            }
        }
        Ok(m)
    }
}

/// Graph Laplacian with the out-neighbourhood row-sum convention:
/// `L[i][j] = -w[i][j]` off the diagonal and `L[i][i] = sum_j w[i][j]`.
pub fn laplacian(g: &WeightedDigraph) -> DMatrix<f64> {
    let w = g.weights();
    let n = g.n();
    let mut l = -w.clone();
    for i in 0..n {
        l[(i, i)] = (0..n).filter(|&j| j != i).map(|j| w[(i, j)]).sum();
    }
    l
}

pub fn build_system(
    g: &WeightedDigraph,
    p: &Partition,
    rep: Representation,
) -> Result<LeaderFollowerSystem> {
    if p.n() != g.n() {
        return Err(Error::InvalidPartition(format!(
            "partition covers {} vertices, graph has {}",
            p.n(),
            g.n()
        )));
    }
    let m = match rep {
        Representation::Adjacency => g.weights().clone(),
        Representation::Laplacian => laplacian(g),
    };
    let block = |rows: &[usize], cols: &[usize]| {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
    };
    Ok(LeaderFollowerSystem {
        representation: rep,
        ff: block(p.followers(), p.followers()),
        fl: block(p.followers(), p.leaders()),
        lf: block(p.leaders(), p.followers()),
        ll: block(p.leaders(), p.leaders()),
    })
}

/// Sampled minimum-energy trajectory steering the followers to the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct SteerResult {
    pub time_grid: Vec<f64>,
    /// Leader states (the follower subsystem's input) per sample.
    pub control: Vec<DVector<f64>>,
    pub state: Vec<DVector<f64>>,
    pub terminal_norm: f64,
    /// Reciprocal condition number of the Gramian that was inverted.
    pub gramian_rcond: f64,
}

impl SteerResult {
    /// CSV with columns `t, x_1..x_Nf, u_1..u_Nl`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let nf = self.state.first().map_or(0, |x| x.len());
        let nl = self.control.first().map_or(0, |u| u.len());
        let mut header = vec!["t".to_string()];
        header.extend((1..=nf).map(|i| format!("x_{i}")));
        header.extend((1..=nl).map(|i| format!("u_{i}")));
        writeln!(out, "{}", header.join(","))?;
        for ((t, x), u) in self.time_grid.iter().zip(&self.state).zip(&self.control) {
            let mut row = vec![format!("{t:.16e}")];
            row.extend(x.iter().map(|v| format!("{v:.16e}")));
            row.extend(u.iter().map(|v| format!("{v:.16e}")));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Reciprocal condition below which the Gramian counts as singular.
pub const GRAMIAN_RCOND_MIN: f64 = 1e-12;

/// Drive the follower state from `x0` to the origin in time `tau`.
///
/// The finite-horizon Gramian `W = int_0^tau e^{Ft} G G^T e^{F^T t} dt` is
/// computed by composite Simpson over `steps` panels, the input
/// `u(t) = -G^T e^{F^T (tau - t)} W^{-1} e^{F tau} x0` is synthesised, and the
/// closed system is integrated with classical RK4 on the same grid. `F` and
/// `G` are the dynamics-faithful blocks (signed for the Laplacian model).
pub fn min_energy_steer(
    sys: &LeaderFollowerSystem,
    x0: &DVector<f64>,
    tau: f64,
    steps: usize,
) -> Result<SteerResult> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidHorizon(tau));
    }
    if steps < 2 {
        return Err(Error::InvalidArgument(format!("steps must be at least 2, got {steps}")));
    }
    let n = sys.n_followers();
    if x0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "initial state has length {}, system has {n} followers",
            x0.len()
        )));
    }
    let f = sys.dynamics_state();
    let g = sys.dynamics_input();
    let h = tau / steps as f64;

    // exp(F t) on the half-step grid t = j h / 2, shared by Simpson and RK4.
    let half_grid = 2 * steps + 1;
    let exps: Vec<DMatrix<f64>> = (0..half_grid)
        .map(|j| expm(&(&f * (j as f64 * h / 2.0))))
        .collect();

    let ggt = &g * g.transpose();
    let integrand = |j: usize| &exps[j] * &ggt * exps[j].transpose();
    let mut w = DMatrix::zeros(n, n);
    for panel in 0..steps {
        let j = 2 * panel;
        w += (integrand(j) + integrand(j + 1) * 4.0 + integrand(j + 2)) * (h / 6.0);
    }
    w = (&w + w.transpose()) * 0.5;

    let rcond = spd_rcond(&w);
    if !(rcond >= GRAMIAN_RCOND_MIN) {
        return Err(Error::SingularGramian { rcond });
    }
    let chol = w
        .clone()
        .cholesky()
        .ok_or(Error::SingularGramian { rcond })?;
    let drift = &exps[half_grid - 1] * x0;
    let coeff = chol.solve(&drift);

    // u at half-grid point j: -G^T exp(F^T (tau - t_j)) coeff
    let gt = g.transpose();
    let control_at = |j: usize| -(&gt * (exps[half_grid - 1 - j].transpose() * &coeff));
    let controls: Vec<DVector<f64>> = (0..half_grid).map(control_at).collect();

    let rhs = |x: &DVector<f64>, u: &DVector<f64>| &f * x + &g * u;
    let mut time_grid = Vec::with_capacity(steps + 1);
    let mut state = Vec::with_capacity(steps + 1);
    let mut control = Vec::with_capacity(steps + 1);
    let mut x = x0.clone();
    for step in 0..=steps {
        time_grid.push(if step == steps { tau } else { step as f64 * h });
        state.push(x.clone());
        control.push(controls[2 * step].clone());
        if step == steps {
            break;
        }
        let (u0, um, u1) = (&controls[2 * step], &controls[2 * step + 1], &controls[2 * step + 2]);
        let k1 = rhs(&x, u0);
        let k2 = rhs(&(&x + &k1 * (h / 2.0)), um);
        let k3 = rhs(&(&x + &k2 * (h / 2.0)), um);
        let k4 = rhs(&(&x + &k3 * h), u1);
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    let terminal_norm = x.norm();
    Ok(SteerResult {
        time_grid,
        control,
        state,
        terminal_norm,
        gramian_rcond: rcond,
    })
}

fn spd_rcond(w: &DMatrix<f64>) -> f64 {
    if w.nrows() == 0 {
        return 1.0;
    }
    let eig = SymmetricEigen::new(w.clone()).eigenvalues;
    let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if max <= 0.0 {
        0.0
    } else {
        (min / max).max(0.0)
    }
}
