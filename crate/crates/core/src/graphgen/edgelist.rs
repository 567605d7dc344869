//! Text edge lists.
//!
//! ```text
//! n 3 directed weighted
//! 0 1 1
//! 1 0 -0.25
//! ```
//!
//! A line `i j w` sets `w[(i, j)]`, the weight of the arc `j -> i`. The
//! writer emits nonzero entries in row-major order using the shortest
//! representation that parses back to the same `f64`.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use super::WeightedDigraph;
use crate::{Error, Result};

pub fn write_edge_list<W: Write>(g: &WeightedDigraph, mut out: W) -> Result<()> {
    let w = g.weights();
    writeln!(out, "n {} directed weighted", g.n())?;
    for i in 0..g.n() {
        for j in 0..g.n() {
            let x = w[(i, j)];
            if x != 0.0 {
                writeln!(out, "{i} {j} {x:?}")?;
            }
        }
    }
    Ok(())
}

pub fn read_edge_list<R: BufRead>(input: R) -> Result<WeightedDigraph> {
    let mut w: Option<DMatrix<f64>> = None;
    let mut seen = std::collections::HashSet::new();
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = text.split_whitespace().collect();
        let parse_err = |msg: String| Error::Parse { line: line_no, msg };
        match w.as_mut() {
            None => {
                if tokens.len() != 4 || tokens[0] != "n" || tokens[2] != "directed" || tokens[3] != "weighted" {
                    return Err(parse_err("expected header `n <int> directed weighted`".into()));
                }
                let n: usize = tokens[1]
                    .parse()
                    .map_err(|_| parse_err(format!("bad vertex count `{}`", tokens[1])))?;
                w = Some(DMatrix::zeros(n, n));
            }
            Some(w) => {
                if tokens.len() != 3 {
                    return Err(parse_err("expected `i j weight`".into()));
                }
                let n = w.nrows();
                let i: usize = tokens[0]
                    .parse()
                    .map_err(|_| parse_err(format!("bad index `{}`", tokens[0])))?;
                let j: usize = tokens[1]
                    .parse()
                    .map_err(|_| parse_err(format!("bad index `{}`", tokens[1])))?;
                let x: f64 = tokens[2]
                    .parse()
                    .map_err(|_| parse_err(format!("bad weight `{}`", tokens[2])))?;
                if i >= n || j >= n {
                    return Err(parse_err(format!("index out of range for n={n}")));
                }
                if i == j {
                    return Err(parse_err(format!("self-loop at vertex {i}")));
                }
                if !x.is_finite() {
                    return Err(parse_err("non-finite weight".into()));
                }
                if !seen.insert((i, j)) {
                    return Err(parse_err(format!("duplicate arc ({i}, {j})")));
                }
                w[(i, j)] = x;
            }
        }
    }
    let w = w.ok_or(Error::Parse {
        line: 0,
        msg: "missing header".into(),
    })?;
    WeightedDigraph::from_matrix(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_and_rows() {
        let g = WeightedDigraph::from_undirected_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "n 3 directed weighted\n0 1 1.0\n1 0 1.0\n1 2 1.0\n2 1 1.0\n");
    }

    #[test]
    fn rejects_malformed_input() {
        for bad in [
            "",
            "n x directed weighted\n",
            "n 3 undirected\n",
            "n 3 directed weighted\n0 3 1\n",
            "n 3 directed weighted\n1 1 1\n",
            "n 3 directed weighted\n0 1\n",
            "n 3 directed weighted\n0 1 1\n0 1 2\n",
            "n 3 directed weighted\n0 1 nan\n",
        ] {
            assert!(read_edge_list(bad.as_bytes()).is_err(), "accepted {bad:?}");
        }
    }

    #[test]
    fn skips_comments_and_blank_lines() {
        let g = read_edge_list("# c\n\nn 2 directed weighted\n# arc\n1 0 0.5\n".as_bytes()).unwrap();
        assert_eq!(g.weights()[(1, 0)], 0.5);
        assert_eq!(g.arc_count(), 1);
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(n in 2usize..7, entries in proptest::collection::vec(-1e3f64..1e3, 36)) {
            let mut w = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    if i != j && (i * 7 + j) % 3 != 0 {
                        w[(i, j)] = entries[i * 6 + j];
                    }
                }
            }
            let g = WeightedDigraph::from_matrix(w).unwrap();
            let mut buf = Vec::new();
            write_edge_list(&g, &mut buf).unwrap();
            let back = read_edge_list(buf.as_slice()).unwrap();
            prop_assert_eq!(back, g);
        }
    }
}
