//! Monte Carlo estimation of crossing and survival probabilities.
//!
//! Trial `i` of a run draws copy `c` from seed `derive_seed(master, i, c)`.
//! Hit counts are sums over trials, so they do not depend on how trials are
//! scheduled across threads. Running the same master seed at several `p`
//! values or levels reuses the same per-rectangle uniforms, which makes the
//! per-trial outcomes monotone in `p` and in the level.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::carpet::Generator;
use crate::connectivity::{crosses, crossing_domain, Adjacency, Direction, Layout};
use crate::error::{check_probability, Error, Result};
use crate::grid::GridParams;
use crate::rng::{derive_seed, mix64};
use crate::stats::{wilson_interval, PairedCounts, DEFAULT_Z};

/// Success count with its Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernoulliEstimate {
    pub trials: u64,
    pub hits: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl BernoulliEstimate {
    pub fn new(hits: u64, trials: u64) -> Self {
        Self::with_z(hits, trials, DEFAULT_Z)
    }

    pub fn with_z(hits: u64, trials: u64, z: f64) -> Self {
        let (ci_low, ci_high) = wilson_interval(hits, trials, z);
        BernoulliEstimate {
            trials,
            hits,
            p_hat: if trials == 0 {
                0.0
            } else {
                hits as f64 / trials as f64
            },
            ci_low,
            ci_high,
        }
    }

    /// Whether `value` lies in the Wilson interval at `z`.
    pub fn is_consistent_with(&self, value: f64, z: f64) -> bool {
        let (lo, hi) = wilson_interval(self.hits, self.trials, z);
        lo <= value && value <= hi
    }
}

/// What is being crossed, at which level, and how cells connect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingSetup {
    pub params: GridParams,
    pub level: u32,
    pub direction: Direction,
    pub domain: Layout,
    pub adjacency: Adjacency,
}

impl CrossingSetup {
    pub fn new(params: GridParams, level: u32, direction: Direction) -> Self {
        CrossingSetup {
            params,
            level,
            direction,
            domain: Layout::Unit,
            adjacency: Adjacency::Corner,
        }
    }

    pub fn with_domain(mut self, domain: Layout) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_adjacency(mut self, adjacency: Adjacency) -> Self {
        self.adjacency = adjacency;
        self
    }

    pub fn with_level(mut self, level: u32) -> Self {
        self.level = level;
        self
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    /// Outcome of one trial.
    pub fn trial(&self, p: f64, master_seed: u64, trial: u64) -> Result<bool> {
        let gen = Generator::new(self.params);
        let copies = (0..self.domain.copies() as u32)
            .map(|copy| gen.generate(p, self.level, derive_seed(master_seed, trial, copy), copy))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<_> = copies.iter().collect();
        crossing_domain(
            &refs,
            self.domain,
            self.level,
            self.direction,
            self.adjacency,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingEstimate {
    pub params: GridParams,
    pub p: f64,
    pub level: u32,
    pub domain: Layout,
    pub direction: Direction,
    pub adjacency: Adjacency,
    pub trials: u64,
    pub hits: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub master_seed: u64,
}

impl CrossingEstimate {
    pub fn bernoulli(&self) -> BernoulliEstimate {
        BernoulliEstimate::new(self.hits, self.trials)
    }
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        Err(Error::domain("at least one trial is required"))
    } else {
        Ok(())
    }
}

/// Number of trials in `0..trials` for which `event` holds, computed in
/// parallel on the current rayon pool.
pub fn count_hits<F>(trials: u64, event: F) -> Result<u64>
where
    F: Fn(u64) -> Result<bool> + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|i| event(i).map(u64::from))
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

pub fn estimate_crossing(
    setup: &CrossingSetup,
    p: f64,
    trials: u64,
    master_seed: u64,
) -> Result<CrossingEstimate> {
    check_probability(p)?;
    check_trials(trials)?;
    setup.params.grid_size(setup.level)?;
    let hits = count_hits(trials, |i| setup.trial(p, master_seed, i))?;
    let b = BernoulliEstimate::new(hits, trials);
    Ok(CrossingEstimate {
        params: setup.params,
        p,
        level: setup.level,
        domain: setup.domain,
        direction: setup.direction,
        adjacency: setup.adjacency,
        trials,
        hits,
        p_hat: b.p_hat,
        ci_low: b.ci_low,
        ci_high: b.ci_high,
        master_seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub coupled: bool,
    pub estimates: Vec<CrossingEstimate>,
}

impl SweepResult {
    pub fn p_grid(&self) -> Vec<f64> {
        self.estimates.iter().map(|e| e.p).collect()
    }
}

/// `lo:hi:step`, inclusive of `hi` up to rounding.
pub fn parse_p_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::domain(format!("p-grid '{spec}' is not of the form lo:hi:step"));
    let [lo, hi, step] = parts.as_slice() else {
        return Err(bad());
    };
    let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let (lo, hi, step) = (parse(lo)?, parse(hi)?, parse(step)?);
    if step.is_nan() || step <= 0.0 || lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(Error::domain(format!(
            "p-grid '{spec}' needs lo <= hi and a positive step"
        )));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as u64;
    let grid: Vec<f64> = (0..=count)
        .map(|i| {
            // Round to 12 decimals so 0.4 + 2 * 0.05 prints as 0.5.
            let v = lo + i as f64 * step;
            (v * 1e12).round() / 1e12
        })
        .collect();
    for &p in &grid {
        check_probability(p)?;
    }
    Ok(grid)
}

const INDEPENDENT_SALT: u64 = 0x6A09_E667_F3BC_C909;

/// Crossing estimates over `p_grid`. Coupled sweeps share master seed (and
/// thus every uniform) across grid points, so `p_hat` is exactly
/// non-decreasing; otherwise each point gets its own seed.
pub fn sweep(
    setup: &CrossingSetup,
    p_grid: &[f64],
    trials: u64,
    coupled: bool,
    master_seed: u64,
) -> Result<SweepResult> {
    if p_grid.is_empty() {
        return Err(Error::domain("p-grid is empty"));
    }
    if p_grid.iter().any(|p| p.is_nan()) || p_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::domain("p-grid must be sorted ascending"));
    }
    let estimates = p_grid
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let seed = if coupled {
                master_seed
            } else {
                mix64(master_seed ^ INDEPENDENT_SALT).wrapping_add(mix64(i as u64))
            };
            estimate_crossing(setup, p, trials, seed)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { coupled, estimates })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BisectionStep {
    pub p: f64,
    pub hits: u64,
    pub p_hat: f64,
}

/// Finite-level bracket for the critical probability: the estimated
/// crossing probability fell below `threshold` at `lo` and reached it at `hi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalBracket {
    pub params: GridParams,
    pub direction: Direction,
    pub domain: Layout,
    pub adjacency: Adjacency,
    pub level: u32,
    pub threshold: f64,
    pub lo: f64,
    pub hi: f64,
    pub trials_per_step: u64,
    pub master_seed: u64,
    pub history: Vec<BisectionStep>,
}

impl CriticalBracket {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Bisection on `p` against a noisy crossing estimate. Each step uses a
/// fresh seed; steps are not coupled to each other.
pub fn find_critical(
    setup: &CrossingSetup,
    trials_per_step: u64,
    threshold: f64,
    tol: f64,
    master_seed: u64,
) -> Result<CriticalBracket> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::domain(format!(
            "threshold {threshold} must lie in (0, 1)"
        )));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::domain(format!("tolerance {tol} must be positive")));
    }
    check_trials(trials_per_step)?;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut history = Vec::new();
    let mut step = 0u64;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let seed = derive_seed(master_seed, step, u32::MAX);
        let est = estimate_crossing(setup, mid, trials_per_step, seed)?;
        history.push(BisectionStep {
            p: mid,
            hits: est.hits,
            p_hat: est.p_hat,
        });
        if est.p_hat >= threshold {
            hi = mid;
        } else {
            lo = mid;
        }
        step += 1;
    }
    Ok(CriticalBracket {
        params: setup.params,
        direction: setup.direction,
        domain: setup.domain,
        adjacency: setup.adjacency,
        level: setup.level,
        threshold,
        lo,
        hi,
        trials_per_step,
        master_seed,
        history,
    })
}

/// Paired H-versus-V comparison on shared realizations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HvComparison {
    pub params: GridParams,
    pub p: f64,
    pub level: u32,
    pub adjacency: Adjacency,
    pub trials: u64,
    /// `first` is the H-crossing, `second` the V-crossing.
    pub counts: PairedCounts,
    pub p_hat_h: f64,
    pub p_hat_v: f64,
    /// `p_hat_h - p_hat_v`.
    pub difference: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub master_seed: u64,
}

pub fn compare_hv(
    params: GridParams,
    p: f64,
    level: u32,
    trials: u64,
    adjacency: Adjacency,
    master_seed: u64,
) -> Result<HvComparison> {
    check_probability(p)?;
    check_trials(trials)?;
    params.grid_size(level)?;
    let gen = Generator::new(params);
    let grid = params.grid_size(level)?;
    let counts = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<PairedCounts> {
            let r = gen.generate(p, level, derive_seed(master_seed, i, 0), 0)?;
            let cells = r.level(level);
            let mut c = PairedCounts::default();
            c.record(
                crosses(cells, grid, Direction::H, adjacency),
                crosses(cells, grid, Direction::V, adjacency),
            );
            Ok(c)
        })
        .try_reduce(PairedCounts::default, |a, b| Ok(a.merge(b)))?;
    let n = trials as f64;
    let (ci_low, ci_high) = counts.difference_interval(DEFAULT_Z);
    Ok(HvComparison {
        params,
        p,
        level,
        adjacency,
        trials,
        counts,
        p_hat_h: (counts.both + counts.first_only) as f64 / n,
        p_hat_v: (counts.both + counts.second_only) as f64 / n,
        difference: counts.difference(),
        ci_low,
        ci_high,
        master_seed,
    })
}

/// Frequency of `E_level != ∅`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalEstimate {
    pub params: GridParams,
    pub p: f64,
    pub level: u32,
    pub trials: u64,
    pub hits: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub master_seed: u64,
}

impl SurvivalEstimate {
    pub fn bernoulli(&self) -> BernoulliEstimate {
        BernoulliEstimate::new(self.hits, self.trials)
    }
}

pub fn estimate_survival(
    params: GridParams,
    p: f64,
    level: u32,
    trials: u64,
    master_seed: u64,
) -> Result<SurvivalEstimate> {
    check_probability(p)?;
    check_trials(trials)?;
    let gen = Generator::new(params);
    let hits = count_hits(trials, |i| {
        gen.survives_to(p, level, derive_seed(master_seed, i, 0), 0)
    })?;
    let b = BernoulliEstimate::new(hits, trials);
    Ok(SurvivalEstimate {
        params,
        p,
        level,
        trials,
        hits,
        p_hat: b.p_hat,
        ci_low: b.ci_low,
        ci_high: b.ci_high,
        master_seed,
    })
}

/// Frequency with which some level-`q` row inside the leftmost level-`j`
/// column is entirely selected, when levels below `q` are all forced.
pub fn estimate_full_row(
    params: GridParams,
    p: f64,
    q: u32,
    j: u32,
    trials: u64,
    master_seed: u64,
) -> Result<BernoulliEstimate> {
    check_probability(p)?;
    check_trials(trials)?;
    if q < j || q == 0 {
        return Err(Error::domain(format!(
            "need q >= max(j, 1), got q = {q}, j = {j}"
        )));
    }
    let width = params
        .columns(q - j)
        .ok_or_else(|| Error::domain("row width overflows"))?;
    let (_, rows) = params.grid_size(q)?;
    let gen = Generator::new(params);
    let hits = count_hits(trials, |i| {
        let r = gen.force_prefix(p, q, derive_seed(master_seed, i, 0), 0, q)?;
        let mut per_row = vec![0u64; rows as usize];
        for c in r.level(q).iter().take_while(|c| c.col < width) {
            per_row[c.row as usize] += 1;
        }
        Ok(per_row.contains(&width))
    })?;
    Ok(BernoulliEstimate::new(hits, trials))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g23() -> GridParams {
        GridParams::new(2, 3).unwrap()
    }

    #[test]
    fn p_grid_parsing() {
        let g = parse_p_grid("0.4:0.9:0.05").unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g[2], 0.5);
        assert_eq!(*g.last().unwrap(), 0.9);
        assert_eq!(parse_p_grid("0:1:1").unwrap(), vec![0.0, 1.0]);
        assert!(parse_p_grid("0.4:0.9").is_err());
        assert!(parse_p_grid("0.9:0.4:0.1").is_err());
        assert!(parse_p_grid("0.4:1.2:0.1").is_err());
        assert!(parse_p_grid("0.4:0.9:0").is_err());
    }

    #[test]
    fn extremes() {
        for domain in [Layout::Unit, Layout::TwoTall, Layout::TwoWide] {
            for dir in [Direction::H, Direction::V] {
                let s = CrossingSetup::new(g23(), 3, dir).with_domain(domain);
                assert_eq!(estimate_crossing(&s, 1.0, 20, 1).unwrap().p_hat, 1.0);
                assert_eq!(estimate_crossing(&s, 0.0, 20, 1).unwrap().p_hat, 0.0);
            }
        }
        assert_eq!(estimate_survival(g23(), 1.0, 10, 50, 3).unwrap().p_hat, 1.0);
        let c = compare_hv(g23(), 1.0, 3, 30, Adjacency::Corner, 0).unwrap();
        assert_eq!(c.difference, 0.0);
        let c = compare_hv(g23(), 0.0, 3, 30, Adjacency::Corner, 0).unwrap();
        assert_eq!((c.difference, c.p_hat_h, c.p_hat_v), (0.0, 0.0, 0.0));
    }

    #[test]
    fn argument_errors() {
        let s = CrossingSetup::new(g23(), 2, Direction::H);
        assert!(matches!(
            estimate_crossing(&s, 1.5, 10, 0),
            Err(Error::InvalidProbability(_))
        ));
        assert!(estimate_crossing(&s, 0.5, 0, 0).is_err());
        assert!(sweep(&s, &[0.5, 0.4], 10, true, 0).is_err());
        assert!(sweep(&s, &[], 10, true, 0).is_err());
        assert!(find_critical(&s, 10, 1.0, 0.1, 0).is_err());
        assert!(find_critical(&s, 10, 0.5, 0.0, 0).is_err());
    }

    #[test]
    fn estimate_invariants() {
        let s = CrossingSetup::new(g23(), 4, Direction::V);
        let e = estimate_crossing(&s, 0.8, 300, 17).unwrap();
        assert!(e.hits <= e.trials);
        assert!(e.ci_low <= e.p_hat && e.p_hat <= e.ci_high);
        assert_eq!(e.p_hat, e.hits as f64 / e.trials as f64);
        assert_eq!(estimate_crossing(&s, 0.8, 300, 17).unwrap(), e);
    }

    #[test]
    fn sweep_endpoints() {
        let s = CrossingSetup::new(g23(), 3, Direction::H);
        let r = sweep(&s, &[0.0, 1.0], 25, false, 4).unwrap();
        assert_eq!(r.estimates[0].p_hat, 0.0);
        assert_eq!(r.estimates[1].p_hat, 1.0);
        assert_eq!(r.p_grid(), vec![0.0, 1.0]);
    }

    #[test]
    fn bracket_contains_history_consistency() {
        let s = CrossingSetup::new(g23(), 2, Direction::H);
        let b = find_critical(&s, 200, 0.5, 0.01, 9).unwrap();
        assert!(b.lo < b.hi && b.hi - b.lo <= 0.01);
        for step in &b.history {
            if step.p_hat >= 0.5 {
                assert!(step.p >= b.hi);
            } else {
                assert!(step.p <= b.lo);
            }
        }
        let b = find_critical(&s, 50, 0.999, 0.01, 9).unwrap();
        assert!(b.hi <= 1.0 && b.lo < b.hi);
    }
}
