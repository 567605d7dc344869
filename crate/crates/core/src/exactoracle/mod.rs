//! Exact rational ground truth for small instances.
//!
//! Ranks are computed by fraction-free (Bareiss) elimination on integer
//! rows: every row is first scaled by the lcm of its denominators, which
//! leaves the rank unchanged and keeps all intermediate values integral.

pub mod suites;

use std::fmt;
use std::io::{BufRead, Write};
use std::ops::{Index, IndexMut, Mul};
use std::str::FromStr;

use nalgebra::DMatrix;
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Integer, One, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<BigRational>,
}

pub fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![BigRational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigRational::one();
        }
        m
    }

    /// Row-major entries.
    pub fn from_entries(rows: usize, cols: usize, entries: Vec<BigRational>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(Self { rows, cols, entries })
    }

    /// Row-major integer entries. Panics if the length is wrong.
    pub fn from_i64(rows: usize, cols: usize, data: &[i64]) -> Self {
        assert_eq!(data.len(), rows * cols, "entry count");
        Self {
            rows,
            cols,
            entries: data.iter().map(|&x| rat(x)).collect(),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> BigRational) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Self { rows, cols, entries }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[BigRational] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| {
            self[(i, j)].to_f64().unwrap_or(f64::NAN)
        })
    }

    /// Horizontal concatenation.
    pub fn hstack(blocks: &[RationalMatrix]) -> Result<Self> {
        let rows = blocks.first().map_or(0, |b| b.rows);
        if blocks.iter().any(|b| b.rows != rows) {
            return Err(Error::DimensionMismatch("hstack row counts differ".into()));
        }
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = Self::zeros(rows, cols);
        let mut at = 0;
        for b in blocks {
            for i in 0..rows {
                for j in 0..b.cols {
                    out[(i, at + j)] = b[(i, j)].clone();
                }
            }
            at += b.cols;
        }
        Ok(out)
    }

    pub fn checked_mul(&self, rhs: &RationalMatrix) -> Result<RationalMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let prod = a * &rhs[(k, j)];
                    out[(i, j)] += prod;
                }
            }
        }
        Ok(out)
    }

    /// Text form: `rows cols` header, then one row per line of `num/den`
    /// tokens.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {}", self.rows, self.cols)?;
        for i in 0..self.rows {
            let tokens: Vec<String> = self
                .row(i)
                .iter()
                .map(|x| format!("{}/{}", x.numer(), x.denom()))
                .collect();
            writeln!(out, "{}", tokens.join(" "))?;
        }
        Ok(())
    }

    /// Reads the text form. Tokens may be `num/den` or plain integers and
    /// may be split across lines arbitrarily.
    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut tokens: Vec<(usize, String)> = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let text = line.split('#').next().unwrap_or("");
            tokens.extend(text.split_whitespace().map(|t| (idx + 1, t.to_string())));
        }
        let mut it = tokens.into_iter();
        let mut dim = |what: &str| -> Result<usize> {
            let (line, t) = it.next().ok_or(Error::Parse {
                line: 0,
                msg: format!("missing {what}"),
            })?;
            t.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("bad {what} `{t}`"),
            })
        };
        let rows = dim("row count")?;
        let cols = dim("column count")?;
        let entries = it
            .map(|(line, t)| parse_rational(&t).ok_or(Error::Parse { line, msg: format!("bad rational `{t}`") }))
            .collect::<Result<Vec<_>>>()?;
        if entries.len() != rows * cols {
            return Err(Error::Parse {
                line: 0,
                msg: format!("expected {} entries, found {}", rows * cols, entries.len()),
            });
        }
        Ok(Self { rows, cols, entries })
    }
}

fn parse_rational(t: &str) -> Option<BigRational> {
    match t.split_once('/') {
        Some((n, d)) => {
            let n = BigInt::from_str(n).ok()?;
            let d = BigInt::from_str(d).ok()?;
            if d.is_zero() {
                None
            } else {
                Some(BigRational::new(n, d))
            }
        }
        None => BigInt::from_str(t).ok().map(BigRational::from_integer),
    }
}

impl Index<(usize, usize)> for RationalMatrix {
    type Output = BigRational;
    fn index(&self, (i, j): (usize, usize)) -> &BigRational {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        &self.entries[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for RationalMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigRational {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        &mut self.entries[i * self.cols + j]
    }
}

impl Mul for &RationalMatrix {
    type Output = RationalMatrix;
    fn mul(self, rhs: &RationalMatrix) -> RationalMatrix {
        self.checked_mul(rhs).expect("dimension mismatch in product")
    }
}

impl fmt::Display for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Scale a rational vector to a primitive integer vector with the same span.
fn primitive_integer_row(row: &[BigRational]) -> Vec<BigInt> {
    let lcm = row
        .iter()
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = row.iter().map(|x| (x * &lcm).to_integer()).collect();
    let gcd = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if gcd.is_zero() || gcd.is_one() {
        ints
    } else {
        ints.into_iter().map(|x| x / &gcd).collect()
    }
}

/// Rank of integer rows by fraction-free elimination. Every division by the
/// previous pivot is exact (Sylvester's identity).
fn bareiss_rank(mut a: Vec<Vec<BigInt>>) -> usize {
    let rows = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    let mut rank = 0;
    let mut prev = BigInt::one();
    for c in 0..cols {
        if rank == rows {
            break;
        }
        // smallest nonzero pivot keeps the numbers short
        let pivot = (rank..rows)
            .filter(|&r| !a[r][c].is_zero())
            .min_by(|&x, &y| a[x][c].abs().cmp(&a[y][c].abs()));
        let Some(p) = pivot else { continue };
        a.swap(rank, p);
        let (top, rest) = a.split_at_mut(rank + 1);
        let prow = &top[rank];
        for row in rest.iter_mut() {
            let factor = row[c].clone();
            for j in c + 1..cols {
                let num = &prow[c] * &row[j] - &factor * &prow[j];
                let (q, r) = num.div_rem(&prev);
                debug_assert!(r.is_zero(), "Bareiss division must be exact");
                row[j] = q;
            }
            row[c] = BigInt::zero();
        }
        prev = prow[c].clone();
        rank += 1;
    }
    rank
}

pub fn exact_rank(m: &RationalMatrix) -> usize {
    // Work on whichever orientation has fewer columns.
    let rows: Vec<Vec<BigInt>> = if m.rows >= m.cols {
        (0..m.rows).map(|i| primitive_integer_row(m.row(i))).collect()
    } else {
        (0..m.cols)
            .map(|j| {
                let col: Vec<BigRational> = (0..m.rows).map(|i| m[(i, j)].clone()).collect();
                primitive_integer_row(&col)
            })
            .collect()
    };
    bareiss_rank(rows)
}

fn check_pencil(f: &RationalMatrix, g: &RationalMatrix) -> Result<()> {
    if !f.is_square() {
        return Err(Error::NotSquare {
            rows: f.rows,
            cols: f.cols,
        });
    }
    if g.rows != f.rows {
        return Err(Error::DimensionMismatch(format!(
            "input has {} rows, state matrix is {}x{}",
            g.rows, f.rows, f.cols
        )));
    }
    Ok(())
}

/// `[G, FG, ..., F^{n-1}G]` over the rationals.
pub fn exact_ctrb_matrix(f: &RationalMatrix, g: &RationalMatrix) -> Result<RationalMatrix> {
    check_pencil(f, g)?;
    let mut blocks = Vec::with_capacity(f.rows);
    let mut block = g.clone();
    for k in 0..f.rows {
        if k > 0 {
            block = f * &block;
        }
        blocks.push(block.clone());
    }
    if blocks.is_empty() {
        return Ok(RationalMatrix::zeros(0, 0));
    }
    RationalMatrix::hstack(&blocks)
}

pub fn exact_ctrb_rank(f: &RationalMatrix, g: &RationalMatrix) -> Result<usize> {
    Ok(exact_rank(&exact_ctrb_matrix(f, g)?))
}

/// The two-follower, one-leader adjacency pencil with
/// `F = [[a11, a12], [a21, a22]]` and `G = [a13, a23]^T`.
pub fn example1_pencil(a: &[BigRational; 6]) -> (RationalMatrix, RationalMatrix) {
    let [a11, a12, a21, a22, a13, a23] = a.clone();
    let f = RationalMatrix {
        rows: 2,
        cols: 2,
        entries: vec![a11, a12, a21, a22],
    };
    let g = RationalMatrix {
        rows: 2,
        cols: 1,
        entries: vec![a13, a23],
    };
    (f, g)
}

/// `det [G, FG] = a21 a13^2 + a22 a13 a23 - a11 a13 a23 - a12 a23^2`.
pub fn example1_polynomial(a: &[BigRational; 6]) -> BigRational {
    let [a11, a12, a21, a22, a13, a23] = a;
    a21 * a13 * a13 + a22 * a13 * a23 - a11 * a13 * a23 - a12 * a23 * a23
}

/// Whether the parameters lie on the uncontrollability manifold.
pub fn example1_on_manifold(a: &[BigRational; 6]) -> bool {
    example1_polynomial(a).is_zero()
}

/// Smallest `d` such that `I, M, ..., M^d` are linearly dependent.
pub fn exact_minpoly_degree(m: &RationalMatrix) -> Result<usize> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    let n = m.rows;
    let mut powers: Vec<Vec<BigRational>> = Vec::new();
    let mut p = RationalMatrix::identity(n);
    for d in 0..=n {
        if d > 0 {
            p = &p * m;
        }
        powers.push(p.entries.clone());
        let stacked = RationalMatrix {
            rows: powers.len(),
            cols: n * n,
            entries: powers.concat(),
        };
        if exact_rank(&stacked) < powers.len() {
            return Ok(d);
        }
    }
    unreachable!("Cayley-Hamilton bounds the degree by n")
}

pub const BRUTE_FORCE_MAX_N: usize = 4;
pub const BRUTE_FORCE_MAX_GRID: i64 = 2;

/// Smallest number of input columns, each drawn from `{-grid..grid}^n`, that
/// makes `(f, B)` controllable.
///
/// The search enumerates sets of distinct nonzero columns up to sign: a zero
/// column, a repeated column or a negated column never enlarges the Krylov
/// span, so any controllable `B` of width `m` containing one implies a
/// controllable `B` of smaller width, which the increasing-width search
/// would already have found.
pub fn brute_force_nd(f: &RationalMatrix, max_m: usize, grid: i64) -> Result<usize> {
    if !f.is_square() {
        return Err(Error::NotSquare {
            rows: f.rows,
            cols: f.cols,
        });
    }
    let n = f.rows;
    if n > BRUTE_FORCE_MAX_N || !(1..=BRUTE_FORCE_MAX_GRID).contains(&grid) || max_m > BRUTE_FORCE_MAX_N {
        return Err(Error::InvalidArgument(format!(
            "brute force limited to n <= {BRUTE_FORCE_MAX_N}, max_m <= {BRUTE_FORCE_MAX_N}, 1 <= grid <= {BRUTE_FORCE_MAX_GRID}; got n={n}, max_m={max_m}, grid={grid}"
        )));
    }
    if n == 0 {
        return Ok(0);
    }
    // Krylov columns of every canonical candidate, as primitive integer rows.
    let candidates = canonical_vectors(n, grid);
    let krylov: Vec<Vec<Vec<BigInt>>> = candidates
        .iter()
        .map(|v| {
            let b = RationalMatrix::from_fn(n, 1, |i, _| rat(v[i]));
            let k = exact_ctrb_matrix(f, &b).expect("square pencil");
            (0..n)
                .map(|j| {
                    let col: Vec<BigRational> = (0..n).map(|i| k[(i, j)].clone()).collect();
                    primitive_integer_row(&col)
                })
                .collect()
        })
        .collect();

    for m in 1..=max_m.min(candidates.len()) {
        let mut idx: Vec<usize> = (0..m).collect();
        loop {
            let rows: Vec<Vec<BigInt>> = idx.iter().flat_map(|&c| krylov[c].iter().cloned()).collect();
            if bareiss_rank(rows) == n {
                return Ok(m);
            }
            if !next_combination(&mut idx, candidates.len()) {
                break;
            }
        }
    }
    Err(Error::NoControllableInput { max_m, grid })
}

/// Nonzero vectors in `{-grid..grid}^n` whose first nonzero entry is positive.
fn canonical_vectors(n: usize, grid: i64) -> Vec<Vec<i64>> {
    let side = (2 * grid + 1) as usize;
    let total = side.pow(n as u32);
    (0..total)
        .map(|mut code| {
            (0..n)
                .map(|_| {
                    let digit = (code % side) as i64 - grid;
                    code /= side;
                    digit
                })
                .collect::<Vec<i64>>()
        })
        .filter(|v| v.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0))
        .collect()
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let m = idx.len();
    for i in (0..m).rev() {
        if idx[i] < n - m + i {
            idx[i] += 1;
            for j in i + 1..m {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Jordan structure: `(eigenvalue, block size)` pairs in matrix order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JordanSpec {
    blocks: Vec<(BigRational, usize)>,
}

impl JordanSpec {
    pub fn new(blocks: Vec<(BigRational, usize)>) -> Result<Self> {
        if blocks.iter().any(|b| b.1 == 0) {
            return Err(Error::InvalidArgument("Jordan blocks must have size >= 1".into()));
        }
        Ok(Self { blocks })
    }

    pub fn from_i64(blocks: &[(i64, usize)]) -> Result<Self> {
        Self::new(blocks.iter().map(|&(l, s)| (rat(l), s)).collect())
    }

    pub fn blocks(&self) -> &[(BigRational, usize)] {
        &self.blocks
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.1).sum()
    }
}

/// Block-diagonal matrix of upper Jordan blocks in spec order.
pub fn build_jordan(spec: &JordanSpec) -> RationalMatrix {
    let n = spec.dim();
    let mut m = RationalMatrix::zeros(n, n);
    let mut at = 0;
    for (lambda, size) in &spec.blocks {
        for i in 0..*size {
            m[(at + i, at + i)] = lambda.clone();
            if i + 1 < *size {
                m[(at + i, at + i + 1)] = BigRational::one();
            }
        }
        at += size;
    }
    m
}
