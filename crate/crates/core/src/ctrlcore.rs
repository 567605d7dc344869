//! Numerical controllability decisions and spectral multiplicities.
//!
//! All rank decisions go through a [`TolerancePolicy`]. The default cuts
//! singular values at `rel_tol * sigma_max * max(rows, cols)`; values exactly
//! on the cut count as zero, which leans toward reporting uncontrollability.

use nalgebra::{Complex, ComplexField, DMatrix, DVector, Schur, SVD};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankMethod {
    /// Count singular values above a relative cut.
    Svd,
    /// Full rank iff `|det|` exceeds an absolute threshold (square input
    /// only). Mirrors the determinant protocol of MATLAB-style experiments.
    Det,
}

impl RankMethod {
    pub fn name(&self) -> &'static str {
        match self {
            RankMethod::Svd => "svd",
            RankMethod::Det => "det",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TolerancePolicy {
    pub method: RankMethod,
    pub rel_tol: f64,
    pub det_threshold: f64,
}

/// `2^-46`, i.e. 64 ulps of 1.0.
pub const DEFAULT_REL_TOL: f64 = 1.0 / 70368744177664.0;
pub const DEFAULT_DET_THRESHOLD: f64 = 1e-10;

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self {
            method: RankMethod::Svd,
            rel_tol: DEFAULT_REL_TOL,
            det_threshold: DEFAULT_DET_THRESHOLD,
        }
    }
}

impl TolerancePolicy {
    pub fn svd(rel_tol: f64) -> Self {
        Self {
            method: RankMethod::Svd,
            rel_tol,
            ..Self::default()
        }
    }

    pub fn det(det_threshold: f64) -> Self {
        Self {
            method: RankMethod::Det,
            det_threshold,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.det_threshold > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerances must be positive, got rel_tol={}, det_threshold={}",
                self.rel_tol, self.det_threshold
            )));
        }
        Ok(())
    }

    /// The value that drives the active method.
    pub fn active_value(&self) -> f64 {
        match self.method {
            RankMethod::Svd => self.rel_tol,
            RankMethod::Det => self.det_threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllabilityReport {
    /// Rank reported by the deciding test.
    pub rank: usize,
    /// Controllable-subspace dimension, consistent with `controllable`.
    pub subspace_dim: usize,
    /// Raw dimension of the orthogonalised Krylov span. Differs from
    /// `subspace_dim` only when the two numerical routes disagree.
    pub krylov_dim: usize,
    pub controllable: bool,
    pub n: usize,
    pub method: TolerancePolicy,
}

impl ControllabilityReport {
    fn reconcile(rank: usize, krylov_dim: usize, controllable: bool, n: usize, method: TolerancePolicy) -> Self {
        let subspace_dim = if controllable {
            n
        } else {
            krylov_dim.min(n.saturating_sub(1))
        };
        Self {
            rank,
            subspace_dim,
            krylov_dim,
            controllable,
            n,
            method,
        }
    }

    /// True when the Krylov dimension agrees with the verdict.
    pub fn routes_agree(&self) -> bool {
        self.krylov_dim == self.subspace_dim
    }
}

fn check_pencil(f: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<()> {
    if !f.is_square() {
        return Err(Error::NotSquare {
            rows: f.nrows(),
            cols: f.ncols(),
        });
    }
    if g.nrows() != f.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "input matrix has {} rows, state matrix is {}x{}",
            g.nrows(),
            f.nrows(),
            f.ncols()
        )));
    }
    Ok(())
}

fn check_square(m: &DMatrix<f64>) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        })
    }
}

/// `[G, FG, ..., F^{n-1} G]`.
pub fn ctrb_matrix(f: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_pencil(f, g)?;
    let (n, m) = (f.nrows(), g.ncols());
    let mut c = DMatrix::zeros(n, n * m);
    let mut block = g.clone();
    for k in 0..n {
        c.columns_mut(k * m, m).copy_from(&block);
        if k + 1 < n {
            block = f * &block;
        }
    }
    Ok(c)
}

pub(crate) fn singular_values<T>(m: &DMatrix<T>) -> Result<Vec<f64>>
where
    T: ComplexField<RealField = f64>,
{
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let svd = SVD::try_new(m.clone(), false, false, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::NumericalFailure("SVD did not converge".into()))?;
    Ok(svd.singular_values.iter().cloned().collect())
}

fn count_above(sv: &[f64], cut: f64) -> usize {
    sv.iter().filter(|&&s| s > cut).count()
}

fn relative_cut(sv: &[f64], rows: usize, cols: usize, rel_tol: f64) -> f64 {
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    rel_tol * smax * rows.max(cols) as f64
}

pub fn numerical_rank(m: &DMatrix<f64>, tol: &TolerancePolicy) -> Result<usize> {
    tol.validate()?;
    match tol.method {
        RankMethod::Svd => {
            let sv = singular_values(m)?;
            let cut = relative_cut(&sv, m.nrows(), m.ncols(), tol.rel_tol);
            Ok(count_above(&sv, cut))
        }
        RankMethod::Det => {
            check_square(m)?;
            let n = m.nrows();
            if n == 0 {
                return Ok(0);
            }
            let det = m.clone().lu().determinant();
            // n - 1 is a sentinel: the determinant only says "deficient".
            Ok(if det.abs() > tol.det_threshold { n } else { n - 1 })
        }
    }
}

/// Dimension of the Krylov span of the columns of `g` under `f`.
///
/// Each column `g_j` generates the chain `F^k g_j` (rescaled to unit length
/// at every step); chain vectors are orthogonalised one at a time against the
/// basis built so far (classical Gram-Schmidt with a second pass) and kept
/// when the residual exceeds `rel_tol * n`. A chain stops at its first
/// dependent vector. Orthogonalising the chain vectors themselves, rather
/// than `F` times the previous basis vector, keeps rounding error from being
/// magnified whenever a genuine residual is short.
pub fn controllable_subspace_dim(f: &DMatrix<f64>, g: &DMatrix<f64>, tol: &TolerancePolicy) -> Result<usize> {
    check_pencil(f, g)?;
    tol.validate()?;
    Ok(krylov_basis(f, g, tol.rel_tol).len())
}

fn krylov_basis(f: &DMatrix<f64>, g: &DMatrix<f64>, rel_tol: f64) -> Vec<DVector<f64>> {
    let n = f.nrows();
    let cut = rel_tol * n as f64;
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut chains: Vec<DVector<f64>> = g.column_iter().map(|c| c.into_owned()).collect();
    for step in 0..n {
        if chains.is_empty() || basis.len() == n {
            break;
        }
        let mut alive = Vec::with_capacity(chains.len());
        for v in chains {
            if basis.len() == n {
                break;
            }
            let v = if step == 0 { v } else { f * v };
            let norm = v.norm();
            if norm == 0.0 || !norm.is_finite() {
                continue;
            }
            let v = v / norm;
            if let Some(q) = orthogonalize(v.clone(), &basis, cut) {
                basis.push(q);
                alive.push(v);
            }
        }
        chains = alive;
    }
    basis
}

fn orthogonalize(mut v: DVector<f64>, basis: &[DVector<f64>], cut: f64) -> Option<DVector<f64>> {
    for _ in 0..2 {
        let coeffs: Vec<f64> = basis.iter().map(|q| q.dot(&v)).collect();
        for (q, c) in basis.iter().zip(coeffs) {
            v.axpy(-c, q, 1.0);
        }
    }
    let norm = v.norm();
    if norm > cut {
        Some(v / norm)
    } else {
        None
    }
}

/// Rank test on `[G, FG, ..., F^{n-1}G]`.
///
/// Under [`RankMethod::Svd`] the Krylov matrix is built from the balanced
/// pencil `(F / ||F||_F, G / ||G||_F)`: the rank is the same, but the verdict
/// no longer depends on the overall scale of the weights. The determinant
/// method uses the raw matrix.
pub fn kalman_controllable(f: &DMatrix<f64>, g: &DMatrix<f64>, tol: &TolerancePolicy) -> Result<ControllabilityReport> {
    check_pencil(f, g)?;
    let c = match tol.method {
        RankMethod::Svd => {
            let (fb, gb) = balance(f, g);
            ctrb_matrix(&fb, &gb)?
        }
        RankMethod::Det => ctrb_matrix(f, g)?,
    };
    let n = f.nrows();
    let rank = numerical_rank(&c, tol)?;
    let krylov_dim = controllable_subspace_dim(f, g, tol)?;
    Ok(ControllabilityReport::reconcile(rank, krylov_dim, rank == n, n, *tol))
}

fn balance(f: &DMatrix<f64>, g: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let scale = |m: &DMatrix<f64>| {
        let s = m.norm();
        if s > 0.0 {
            m / s
        } else {
            m.clone()
        }
    };
    (scale(f), scale(g))
}

/// Eigenvalues of a real square matrix via the real Schur form.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    check_square(m)?;
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 1000 * n)
        .ok_or_else(|| Error::NumericalFailure("Schur iteration did not converge".into()))?;
    Ok(schur.complex_eigenvalues().iter().cloned().collect())
}

fn shifted(m: &DMatrix<f64>, lambda: Complex<f64>) -> DMatrix<Complex<f64>> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        let x = Complex::new(m[(i, j)], 0.0);
        if i == j {
            x - lambda
        } else {
            x
        }
    })
}

/// Popov-Belevitch-Hautus test: `rank [lambda I - F, G] = n` at every
/// eigenvalue of `F`. Ranks use the relative SVD cut of `tol`.
pub fn pbh_controllable(f: &DMatrix<f64>, g: &DMatrix<f64>, tol: &TolerancePolicy) -> Result<ControllabilityReport> {
    check_pencil(f, g)?;
    tol.validate()?;
    let n = f.nrows();
    let m = g.ncols();
    let mut min_rank = n;
    for lambda in eigenvalues(f)? {
        if lambda.im < 0.0 {
            continue; // conjugate gives the same rank
        }
        let shifted = -shifted(f, lambda);
        let mut pencil = DMatrix::<Complex<f64>>::zeros(n, n + m);
        pencil.columns_mut(0, n).copy_from(&shifted);
        pencil
            .columns_mut(n, m)
            .copy_from(&g.map(|x| Complex::new(x, 0.0)));
        let sv = singular_values(&pencil)?;
        let rank = count_above(&sv, relative_cut(&sv, n, n + m, tol.rel_tol));
        min_rank = min_rank.min(rank);
    }
    let krylov_dim = controllable_subspace_dim(f, g, tol)?;
    Ok(ControllabilityReport::reconcile(min_rank, krylov_dim, min_rank == n, n, *tol))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub re: f64,
    pub im: f64,
    /// Algebraic multiplicity.
    pub alg: usize,
    /// Geometric multiplicity.
    pub geo: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub clusters: Vec<Cluster>,
    pub cluster_tol: f64,
}

impl Spectrum {
    pub fn max_algebraic(&self) -> usize {
        self.clusters.iter().map(|c| c.alg).max().unwrap_or(0)
    }

    pub fn max_geometric(&self) -> usize {
        self.clusters.iter().map(|c| c.geo).max().unwrap_or(0)
    }
}

/// `1e-8 * (1 + spectral radius)`.
pub fn default_cluster_tol(eigs: &[Complex<f64>]) -> f64 {
    let radius = eigs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    1e-8 * (1.0 + radius)
}

/// Group eigenvalues closer than `cluster_tol` (single linkage) and measure
/// each group's multiplicities. The geometric multiplicity is
/// `n - rank(M - centroid I)` with singular values at or below `cluster_tol`
/// counted as zero, clamped to `1..=alg`.
pub fn eigen_multiplicities(m: &DMatrix<f64>, cluster_tol: f64) -> Result<Spectrum> {
    if !(cluster_tol > 0.0) {
        return Err(Error::InvalidArgument(format!("cluster_tol must be positive, got {cluster_tol}")));
    }
    let eigs = eigenvalues(m)?;
    cluster_spectrum(m, &eigs, cluster_tol)
}

/// [`eigen_multiplicities`] at [`default_cluster_tol`].
pub fn eigen_multiplicities_default(m: &DMatrix<f64>) -> Result<Spectrum> {
    let eigs = eigenvalues(m)?;
    cluster_spectrum(m, &eigs, default_cluster_tol(&eigs))
}

fn cluster_spectrum(m: &DMatrix<f64>, eigs: &[Complex<f64>], cluster_tol: f64) -> Result<Spectrum> {
    let n = eigs.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (eigs[i] - eigs[j]).norm() <= cluster_tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if root_slot[r] == usize::MAX {
            root_slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[root_slot[r]].push(i);
    }

    let mut clusters = Vec::with_capacity(groups.len());
    for members in groups {
        let alg = members.len();
        let sum: Complex<f64> = members.iter().map(|&i| eigs[i]).sum();
        let mut centroid = sum / alg as f64;
        if members.iter().all(|&i| eigs[i].im == 0.0) {
            centroid.im = 0.0;
        }
        let sv = singular_values(&shifted(m, centroid))?;
        let rank = count_above(&sv, cluster_tol);
        let geo = (n - rank).clamp(1, alg);
        clusters.push(Cluster {
            re: centroid.re,
            im: centroid.im,
            alg,
            geo,
        });
    }
    clusters.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(Spectrum { clusters, cluster_tol })
}

/// Minimal number of leaders: the largest geometric multiplicity of `f`.
/// `cluster_tol` defaults to [`default_cluster_tol`].
pub fn min_leaders_nd(f: &DMatrix<f64>, cluster_tol: Option<f64>) -> Result<usize> {
    check_square(f)?;
    let spectrum = match cluster_tol {
        Some(t) => eigen_multiplicities(f, t)?,
        None => eigen_multiplicities_default(f)?,
    };
    Ok(spectrum.max_geometric())
}

pub const DEFAULT_MINPOLY_PROBES: usize = 4;
const MINPOLY_SEED: u64 = 0x006d_696e_706f_6c79;

/// Degree of the minimal polynomial, estimated as the largest Krylov
/// dimension of `(m, v)` over random probes `v`.
pub fn minpoly_degree(m: &DMatrix<f64>, tol: &TolerancePolicy) -> Result<usize> {
    minpoly_degree_with(m, tol, DEFAULT_MINPOLY_PROBES, &RngStream::new(MINPOLY_SEED, 0))
}

pub fn minpoly_degree_with(m: &DMatrix<f64>, tol: &TolerancePolicy, probes: usize, stream: &RngStream) -> Result<usize> {
    check_square(m)?;
    tol.validate()?;
    let n = m.nrows();
    let mut rng = stream.rng();
    let mut best = 0;
    for _ in 0..probes.max(1) {
        let v = DMatrix::from_fn(n, 1, |_, _| rng.random_range(-1.0..1.0));
        best = best.max(krylov_basis(m, &v, tol.rel_tol).len());
        if best == n {
            break;
        }
    }
    Ok(best)
}

/// Maximum controllability index: the largest controllable-subspace
/// dimension reachable with a single leader.
pub fn max_ctrl_index_gamma(f: &DMatrix<f64>, tol: &TolerancePolicy) -> Result<usize> {
    minpoly_degree(f, tol)
}

/// Whether the single input column `g` reaches the maximum controllability
/// index of `f`.
pub fn afl_feasible(f: &DMatrix<f64>, g: &DVector<f64>, tol: &TolerancePolicy) -> Result<bool> {
    let g = DMatrix::from_column_slice(g.len(), 1, g.as_slice());
    let dim = controllable_subspace_dim(f, &g, tol)?;
    Ok(dim == max_ctrl_index_gamma(f, tol)?)
}
