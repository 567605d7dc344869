//! Seeded Monte Carlo sweeps over the noise coefficient.
//!
//! Trial `t` at grid position `i` draws everything from the substream
//! `(master_seed, i << 32 | t)`, forked into independent topology, noise and
//! partition streams. Results therefore do not depend on worker count or
//! scheduling, and configs that differ only in representation or noise mode
//! see the same base topologies.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ctrlcore::{kalman_controllable, TolerancePolicy};
use crate::graphgen::{
    apply_noise, choose_partition, generate_topology, GraphSpec, LeaderPolicy, NoiseMode, NoiseSpec,
};
use crate::netmodel::{build_system, Representation};
use crate::{Error, Result, RngStream};

/// Noise coefficients used when a config does not list its own.
pub const DEFAULT_K_GRID: [f64; 7] = [1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0];

fn default_leaders() -> usize {
    1
}

fn default_policy() -> LeaderPolicy {
    LeaderPolicy::LastIndices
}

fn default_k_grid() -> Vec<f64> {
    DEFAULT_K_GRID.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub graph: GraphSpec,
    pub representation: Representation,
    pub noise_mode: NoiseMode,
    pub n_followers: usize,
    #[serde(default = "default_leaders")]
    pub n_leaders: usize,
    #[serde(default = "default_policy")]
    pub leader_policy: LeaderPolicy,
    #[serde(default = "default_k_grid")]
    pub k_grid: Vec<f64>,
    pub trials_per_k: usize,
    #[serde(default)]
    pub tol: TolerancePolicy,
    pub master_seed: u64,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.graph.validate()?;
        self.tol.validate()?;
        if self.n_leaders < 1 {
            return Err(Error::InvalidArgument("n_leaders must be at least 1".into()));
        }
        if self.n_followers + self.n_leaders != self.graph.n() {
            return Err(Error::InvalidArgument(format!(
                "n_followers + n_leaders = {} but the graph has {} vertices",
                self.n_followers + self.n_leaders,
                self.graph.n()
            )));
        }
        if self.trials_per_k < 1 {
            return Err(Error::InvalidArgument("trials_per_k must be at least 1".into()));
        }
        if self.k_grid.is_empty() {
            return Err(Error::InvalidArgument("k_grid is empty".into()));
        }
        if self.k_grid.iter().any(|&k| !(k > 0.0)) {
            return Err(Error::InvalidArgument("k_grid values must be positive".into()));
        }
        if self.k_grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("k_grid must be strictly increasing".into()));
        }
        Ok(())
    }

    pub fn trial_stream(&self, k_index: usize, trial_index: u64) -> RngStream {
        RngStream::new(self.master_seed, ((k_index as u64) << 32) | trial_index)
    }
}

/// Run one trial. Returns `true` when the generated pencil is uncontrollable.
pub fn run_trial(config: &SweepConfig, k_index: usize, trial_index: u64) -> Result<bool> {
    let k = *config
        .k_grid
        .get(k_index)
        .ok_or_else(|| Error::InvalidArgument(format!("k index {k_index} outside the grid")))?;
    let stream = config.trial_stream(k_index, trial_index);
    let base = generate_topology(&config.graph, &stream.fork(0))?;
    let noise = NoiseSpec {
        mode: config.noise_mode,
        k,
    };
    let g = apply_noise(&base, &noise, &stream.fork(1))?;
    let partition = choose_partition(&g, config.n_leaders, config.leader_policy, &stream.fork(2))?;
    let sys = build_system(&g, &partition, config.representation)?;
    let (f, b) = sys.pencil();
    let report = kalman_controllable(f, b, &config.tol)?;
    Ok(!report.controllable)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: f64,
    pub trials: usize,
    pub uncontrollable: usize,
    pub errors: usize,
    pub pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub config: SweepConfig,
}

pub const CSV_HEADER: &str =
    "family,representation,noise_mode,n_f,n_l,k,trials,uncontrollable,errors,pct,seed,tol_method,tol_value";

impl SweepResult {
    pub fn total_uncontrollable(&self) -> usize {
        self.rows.iter().map(|r| r.uncontrollable).sum()
    }

    pub fn total_trials(&self) -> usize {
        self.rows.iter().map(|r| r.trials).sum()
    }

    /// Percentage of uncontrollable trials over the whole grid.
    pub fn aggregate_pct(&self) -> f64 {
        100.0 * self.total_uncontrollable() as f64 / self.total_trials() as f64
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let c = &self.config;
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{:.16e},{},{},{},{:.16e},{},{},{:.16e}",
                c.graph.family_name(),
                c.representation.name(),
                c.noise_mode.name(),
                c.n_followers,
                c.n_leaders,
                r.k,
                r.trials,
                r.uncontrollable,
                r.errors,
                r.pct,
                c.master_seed,
                c.tol.method.name(),
                c.tol.active_value(),
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

/// Run the whole grid on `workers` threads (0 means rayon's default).
pub fn run_sweep(config: &SweepConfig, workers: usize) -> Result<SweepResult> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let trials = config.trials_per_k as u64;
    let rows = pool.install(|| {
        config
            .k_grid
            .iter()
            .enumerate()
            .map(|(ki, &k)| {
                let (uncontrollable, errors) = (0..trials)
                    .into_par_iter()
                    .map(|t| match run_trial(config, ki, t) {
                        Ok(true) => (1usize, 0usize),
                        Ok(false) => (0, 0),
                        Err(_) => (0, 1),
                    })
                    .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
                SweepRow {
                    k,
                    trials: config.trials_per_k,
                    uncontrollable,
                    errors,
                    pct: 100.0 * uncontrollable as f64 / config.trials_per_k as f64,
                }
            })
            .collect()
    });
    Ok(SweepResult {
        rows,
        config: config.clone(),
    })
}

/// Spearman rank correlation between `k` and the uncontrollable percentage.
/// A constant series on either side gives 0.
pub fn trend_stat(rows: &[SweepRow]) -> Result<f64> {
    if rows.len() < 2 {
        return Err(Error::InvalidArgument("trend needs at least two rows".into()));
    }
    let ks: Vec<f64> = rows.iter().map(|r| r.k).collect();
    let pcts: Vec<f64> = rows.iter().map(|r| r.pct).collect();
    Ok(spearman(&ks, &pcts))
}

fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        0.0
    } else {
        cov / (vx * vy).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(pcts: &[f64]) -> Vec<SweepRow> {
        pcts.iter()
            .enumerate()
            .map(|(i, &pct)| SweepRow {
                k: (i + 1) as f64,
                trials: 100,
                uncontrollable: pct as usize,
                errors: 0,
                pct,
            })
            .collect()
    }

    fn config() -> SweepConfig {
        SweepConfig {
            name: None,
            graph: GraphSpec::Er { n: 8, p: 0.4 },
            representation: Representation::Adjacency,
            noise_mode: NoiseMode::Unstructured,
            n_followers: 7,
            n_leaders: 1,
            leader_policy: LeaderPolicy::LastIndices,
            k_grid: vec![1.0, 10.0, 100.0],
            trials_per_k: 40,
            tol: TolerancePolicy::default(),
            master_seed: 2024,
        }
    }

    #[test]
    fn spearman_examples() {
        assert_eq!(trend_stat(&rows(&[1.0, 2.0, 3.0, 4.0])).unwrap(), 1.0);
        assert_eq!(trend_stat(&rows(&[4.0, 3.0, 2.0, 1.0])).unwrap(), -1.0);
        assert_eq!(trend_stat(&rows(&[2.0, 2.0, 2.0])).unwrap(), 0.0);
        assert!(trend_stat(&rows(&[1.0])).is_err());
        // ties get average ranks
        let r = spearman(&[1.0, 2.0, 3.0], &[0.0, 0.0, 1.0]);
        assert!((r - 0.8660254037844386).abs() < 1e-12);
    }

    #[test]
    fn trial_is_deterministic() {
        let c = config();
        for t in 0..20 {
            assert_eq!(run_trial(&c, 2, t).unwrap(), run_trial(&c, 2, t).unwrap());
        }
        assert!(run_trial(&c, 3, 0).is_err());
    }

    #[test]
    fn complete_graph_without_noise_is_uncontrollable() {
        for n_f in 2..7 {
            let mut c = config();
            c.graph = GraphSpec::Er { n: n_f + 1, p: 1.0 };
            c.n_followers = n_f;
            c.k_grid = vec![f64::INFINITY];
            assert!(run_trial(&c, 0, 0).unwrap(), "n_f = {n_f}");
        }
    }

    #[test]
    fn single_trial_sweep_matches_trial() {
        let mut c = config();
        c.trials_per_k = 1;
        c.k_grid = vec![3.0];
        let r = run_sweep(&c, 1).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.rows[0].uncontrollable == 1, run_trial(&c, 0, 0).unwrap());
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let c = config();
        let one = run_sweep(&c, 1).unwrap().to_csv_string();
        for w in [2, 3, 8] {
            assert_eq!(run_sweep(&c, w).unwrap().to_csv_string(), one);
        }
    }

    #[test]
    fn csv_layout() {
        let r = run_sweep(&config(), 2).unwrap();
        let text = r.to_csv_string();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first.len(), 13);
        assert_eq!(&first[..5], &["er", "adjacency", "unstructured", "7", "1"]);
        assert_eq!(first[5], "1.0000000000000000e0");
        assert_eq!(first[11], "svd");
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn config_validation() {
        let mut c = config();
        c.n_followers = 6;
        assert!(c.validate().is_err());
        let mut c = config();
        c.k_grid = vec![1.0, 1.0];
        assert!(c.validate().is_err());
        let mut c = config();
        c.k_grid = vec![0.0, 1.0];
        assert!(c.validate().is_err());
        let mut c = config();
        c.trials_per_k = 0;
        assert!(c.validate().is_err());
        assert!(config().validate().is_ok());
    }

    #[test]
    fn config_json_defaults() {
        let c: SweepConfig = serde_json::from_str(
            r#"{"graph": {"family": "ws", "n": 12, "k": 2, "p": 0.5},
                "representation": "laplacian", "noise_mode": "structured",
                "n_followers": 11, "trials_per_k": 5, "master_seed": 1}"#,
        )
        .unwrap();
        assert_eq!(c.n_leaders, 1);
        assert_eq!(c.leader_policy, LeaderPolicy::LastIndices);
        assert_eq!(c.k_grid, DEFAULT_K_GRID.to_vec());
        assert_eq!(c.tol, TolerancePolicy::default());
        assert!(serde_json::from_str::<SweepConfig>(r#"{"bogus": 1}"#).is_err());
    }
}
