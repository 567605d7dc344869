//! Cross-checks between the exact oracle and the floating-point routines.
//!
//! Every suite is deterministic: random cases are drawn from a fixed
//! [`RngStream`] so a failing case can be replayed from its printed index.

use std::collections::BTreeMap;

use num::rational::BigRational;
use rand::Rng;

use super::{
    brute_force_nd, build_jordan, example1_on_manifold, example1_pencil, exact_ctrb_rank, exact_minpoly_degree,
    exact_rank, rat, JordanSpec, RationalMatrix,
};
use crate::ctrlcore::{controllable_subspace_dim, max_ctrl_index_gamma, min_leaders_nd, numerical_rank, TolerancePolicy};
use crate::{Error, Result, RngStream};

pub const DEFAULT_SUITE_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    pub mismatches: Vec<String>,
}

impl SuiteReport {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            cases: 0,
            mismatches: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Suites run by [`run_suite`], in default order.
pub const SUITE_NAMES: [&str; 6] = ["example1", "jordan", "rank", "ctrb", "nd", "laplacian"];

pub fn run_suite(name: &str, seed: u64) -> Result<SuiteReport> {
    match name {
        "example1" => Ok(example1_grid_suite()),
        "jordan" => jordan_minpoly_suite(seed, 100),
        "rank" => float_exact_rank_suite(seed, 500),
        "ctrb" => ctrb_agreement_suite(seed, 300),
        "nd" => nd_jordan_suite(),
        "laplacian" => grounded_laplacian_suite(seed, 50),
        other => Err(Error::InvalidArgument(format!(
            "unknown suite '{other}', expected one of {}",
            SUITE_NAMES.join(", ")
        ))),
    }
}

/// Exhaustive `{-2..2}^6` grid: manifold membership against the exact rank.
pub fn example1_grid_suite() -> SuiteReport {
    let mut report = SuiteReport::new("example1");
    for code in 0..5usize.pow(6) {
        let mut c = code;
        let vals: [i64; 6] = std::array::from_fn(|_| {
            let d = (c % 5) as i64 - 2;
            c /= 5;
            d
        });
        let p = vals.map(rat);
        let (f, g) = example1_pencil(&p);
        let rank = exact_ctrb_rank(&f, &g).expect("2x2 pencil");
        let on = example1_on_manifold(&p);
        if on != (rank < 2) {
            report
                .mismatches
                .push(format!("point {vals:?}: on_manifold={on}, exact rank={rank}"));
        }
        report.cases += 1;
    }
    report
}

fn random_jordan_spec<R: Rng>(rng: &mut R, max_n: usize) -> JordanSpec {
    let n = rng.random_range(1..=max_n);
    let mut left = n;
    let mut blocks = Vec::new();
    while left > 0 {
        let size = rng.random_range(1..=left);
        blocks.push((rng.random_range(-2..=2i64), size));
        left -= size;
    }
    JordanSpec::from_i64(&blocks).expect("sizes are positive")
}

/// Largest block size per eigenvalue, summed.
pub fn jordan_minpoly_formula(spec: &JordanSpec) -> usize {
    let mut largest: BTreeMap<&BigRational, usize> = BTreeMap::new();
    for (lambda, size) in spec.blocks() {
        let e = largest.entry(lambda).or_default();
        *e = (*e).max(*size);
    }
    largest.values().sum()
}

/// Number of blocks per eigenvalue, maximised.
pub fn jordan_block_count_max(spec: &JordanSpec) -> usize {
    let mut count: BTreeMap<&BigRational, usize> = BTreeMap::new();
    for (lambda, _) in spec.blocks() {
        *count.entry(lambda).or_default() += 1;
    }
    count.values().copied().max().unwrap_or(0)
}

pub fn jordan_minpoly_suite(seed: u64, count: usize) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("jordan");
    let mut rng = RngStream::new(seed, 1).rng();
    let tol = TolerancePolicy::default();
    for case in 0..count {
        let spec = random_jordan_spec(&mut rng, 6);
        let m = build_jordan(&spec);
        let expected = jordan_minpoly_formula(&spec);
        let exact = exact_minpoly_degree(&m)?;
        let float = max_ctrl_index_gamma(&m.to_f64(), &tol)?;
        if exact != expected || float != expected {
            report.mismatches.push(format!(
                "case {case} blocks {:?}: formula={expected}, exact={exact}, float gamma={float}",
                spec.blocks()
            ));
        }
        report.cases += 1;
    }
    Ok(report)
}

pub fn float_exact_rank_suite(seed: u64, count: usize) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("rank");
    let mut rng = RngStream::new(seed, 2).rng();
    let tol = TolerancePolicy::default();
    for case in 0..count {
        let mut data: Vec<i64> = (0..25).map(|_| rng.random_range(-9..=9)).collect();
        // Every other matrix gets rows that are small combinations of earlier ones.
        if case % 2 == 1 {
            let keep = rng.random_range(1..=4usize);
            for r in keep..5 {
                let coef: Vec<i64> = (0..keep).map(|_| rng.random_range(-1..=1)).collect();
                for c in 0..5 {
                    data[r * 5 + c] = (0..keep).map(|i| coef[i] * data[i * 5 + c]).sum();
                }
            }
        }
        let m = RationalMatrix::from_i64(5, 5, &data);
        let exact = exact_rank(&m);
        let float = numerical_rank(&m.to_f64(), &tol)?;
        if exact != float {
            report
                .mismatches
                .push(format!("case {case} {data:?}: exact={exact}, float={float}"));
        }
        report.cases += 1;
    }
    Ok(report)
}

/// Exact Krylov rank against the float controllable-subspace dimension on
/// small integer pencils, half of them built block-triangular so that the
/// input cannot reach the trailing states.
pub fn ctrb_agreement_suite(seed: u64, count: usize) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("ctrb");
    let mut rng = RngStream::new(seed, 3).rng();
    let tol = TolerancePolicy::default();
    for case in 0..count {
        let n = rng.random_range(1..=5usize);
        let m = rng.random_range(1..=2usize);
        let split = if case % 2 == 1 { rng.random_range(0..n) } else { n };
        let f = RationalMatrix::from_fn(n, n, |i, j| {
            if i >= split && j < split {
                rat(0)
            } else {
                rat(rng.random_range(-10..=10))
            }
        });
        let g = RationalMatrix::from_fn(n, m, |i, _| if i >= split { rat(0) } else { rat(rng.random_range(-10..=10)) });
        let exact = exact_ctrb_rank(&f, &g)?;
        let float = controllable_subspace_dim(&f.to_f64(), &g.to_f64(), &tol)?;
        if exact != float {
            report
                .mismatches
                .push(format!("case {case} n={n} m={m}: exact={exact}, float={float}"));
        }
        report.cases += 1;
    }
    Ok(report)
}

fn integer_partitions(n: usize, max_part: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in (1..=n.min(max_part)).rev() {
        for mut rest in integer_partitions(n - first, first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Every Jordan structure of dimension `1..=max_n`, up to relabelling of
/// eigenvalues, realised with eigenvalues `0, 1, -1, 2` in that order.
pub fn all_jordan_structures(max_n: usize) -> Vec<JordanSpec> {
    const LABELS: [i64; 4] = [0, 1, -1, 2];
    // A structure is a non-increasing sequence of partitions (one per eigenvalue).
    fn grow(left: usize, bound: Option<&Vec<usize>>, acc: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if left == 0 {
            out.push(acc.clone());
            return;
        }
        for size in (1..=left).rev() {
            for p in integer_partitions(size, size) {
                let key = (p.iter().sum::<usize>(), &p);
                if let Some(b) = bound {
                    if key > (b.iter().sum::<usize>(), b) {
                        continue;
                    }
                }
                acc.push(p.clone());
                grow(left - size, Some(&p), acc, out);
                acc.pop();
            }
        }
    }
    let mut specs = Vec::new();
    for n in 1..=max_n {
        let mut structures = Vec::new();
        grow(n, None, &mut Vec::new(), &mut structures);
        for s in structures {
            let blocks: Vec<(i64, usize)> = s
                .iter()
                .enumerate()
                .flat_map(|(e, p)| p.iter().map(move |&d| (LABELS[e], d)))
                .collect();
            specs.push(JordanSpec::from_i64(&blocks).expect("positive sizes"));
        }
    }
    specs
}

pub fn nd_jordan_suite() -> Result<SuiteReport> {
    let mut report = SuiteReport::new("nd");
    for spec in all_jordan_structures(4) {
        let m = build_jordan(&spec);
        let expected = jordan_block_count_max(&spec);
        let exact = brute_force_nd(&m, spec.dim(), 1)?;
        let float = min_leaders_nd(&m.to_f64(), None)?;
        if exact != expected || float != expected {
            report.mismatches.push(format!(
                "blocks {:?}: block count={expected}, brute force={exact}, float N_D={float}",
                spec.blocks()
            ));
        }
        report.cases += 1;
    }
    Ok(report)
}

/// Grounded Laplacian of a random connected graph with `n_f` followers and
/// one leader (the last vertex); integer weights in `1..=1000`.
pub fn random_grounded_laplacian<R: Rng>(rng: &mut R, n_f: usize) -> RationalMatrix {
    let n = n_f + 1;
    let mut w = vec![0i64; n * n];
    let link = |w: &mut Vec<i64>, a: usize, b: usize, x: i64| {
        w[a * n + b] = x;
        w[b * n + a] = x;
    };
    // Random spanning tree first, then extra edges.
    for v in 1..n {
        let u = rng.random_range(0..v);
        let x = rng.random_range(1..=1000);
        link(&mut w, u, v, x);
    }
    for a in 0..n {
        for b in a + 1..n {
            if w[a * n + b] == 0 && rng.random_bool(0.5) {
                let x = rng.random_range(1..=1000);
                link(&mut w, a, b, x);
            }
        }
    }
    RationalMatrix::from_fn(n_f, n_f, |i, j| {
        if i == j {
            rat((0..n).map(|k| w[i * n + k]).sum())
        } else {
            rat(-w[i * n + j])
        }
    })
}

pub fn grounded_laplacian_suite(seed: u64, count: usize) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("laplacian");
    let mut rng = RngStream::new(seed, 5).rng();
    for case in 0..count {
        let n_f = rng.random_range(1..=4usize);
        let l = random_grounded_laplacian(&mut rng, n_f);
        let exact = brute_force_nd(&l, n_f, 1)?;
        let float = min_leaders_nd(&l.to_f64(), None)?;
        if exact != 1 || float != 1 {
            report
                .mismatches
                .push(format!("case {case} n_f={n_f}: brute force={exact}, float N_D={float}"));
        }
        report.cases += 1;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partitions_of_four() {
        assert_eq!(integer_partitions(4, 4).len(), 5);
    }

    #[test]
    fn structure_count() {
        let per_n: Vec<usize> = (1..=4)
            .map(|n| all_jordan_structures(4).iter().filter(|s| s.dim() == n).count())
            .collect();
        assert_eq!(per_n, vec![1, 3, 6, 14]);
    }

    #[test]
    fn formulas_on_known_spec() {
        let spec = JordanSpec::from_i64(&[(1, 2), (1, 1), (2, 1)]).unwrap();
        assert_eq!(jordan_minpoly_formula(&spec), 3);
        assert_eq!(jordan_block_count_max(&spec), 2);
    }

    #[test]
    fn example1_suite_is_clean() {
        let r = example1_grid_suite();
        assert_eq!(r.cases, 15_625);
        assert!(r.passed(), "{:?}", &r.mismatches[..r.mismatches.len().min(5)]);
    }

    #[test]
    fn every_named_suite_passes() {
        for name in SUITE_NAMES {
            let r = run_suite(name, DEFAULT_SUITE_SEED).unwrap();
            assert!(r.cases > 0);
            assert!(r.passed(), "{name}: {:?}", &r.mismatches[..r.mismatches.len().min(5)]);
        }
    }

    #[test]
    fn unknown_suite_rejected() {
        assert!(run_suite("nope", 1).is_err());
    }

    #[test]
    fn grounded_laplacians_are_symmetric_and_dominant() {
        let mut rng = RngStream::new(3, 0).rng();
        for _ in 0..20 {
            let l = random_grounded_laplacian(&mut rng, 4).to_f64();
            assert_eq!(l, l.transpose());
            for i in 0..4 {
                let off: f64 = (0..4).filter(|&j| j != i).map(|j| l[(i, j)].abs()).sum();
                assert!(l[(i, i)] >= off);
            }
        }
    }
}
