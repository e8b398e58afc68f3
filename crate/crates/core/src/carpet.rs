//! Random carpet generation: the nested level sets `E_1 ⊇ E_2 ⊇ ...`.
//!
//! Only descendants of selected rectangles are enumerated. Every event that
//! depends on `E_k` has the same law as in the full product space, where
//! rectangles under rejected parents also carry (irrelevant) selections.

use crate::error::{check_probability, Error, Result};
use crate::grid::{Cell, GridParams, RectAddr};
use crate::rng::LevelStream;

pub const DEFAULT_CELL_CAP: u64 = 50_000_000;

/// Generation settings shared by every realization of one grid shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Generator {
    params: GridParams,
    cell_cap: u64,
}

impl Generator {
    pub fn new(params: GridParams) -> Self {
        Generator {
            params,
            cell_cap: DEFAULT_CELL_CAP,
        }
    }

    /// Maximum number of cells any single level may hold.
    pub fn with_cell_cap(mut self, cap: u64) -> Self {
        self.cell_cap = cap;
        self
    }

    pub fn params(&self) -> GridParams {
        self.params
    }

    pub fn cell_cap(&self) -> u64 {
        self.cell_cap
    }

    pub fn generate(&self, p: f64, depth: u32, seed: u64, copy: u32) -> Result<Realization> {
        self.force_prefix(p, depth, seed, copy, 1)
    }

    /// Like [`Generator::generate`], but every rectangle of levels `1..k0`
    /// is selected; random selection starts at level `k0`.
    pub fn force_prefix(
        &self,
        p: f64,
        depth: u32,
        seed: u64,
        copy: u32,
        k0: u32,
    ) -> Result<Realization> {
        check_probability(p)?;
        if depth == 0 {
            return Err(Error::domain("depth must be at least 1"));
        }
        if !(1..=depth).contains(&k0) {
            return Err(Error::domain(format!(
                "forced prefix level {k0} must lie in 1..={depth}"
            )));
        }
        self.params.grid_size(depth)?;
        self.check_projection(p, depth, k0)?;

        let mut levels: Vec<Vec<Cell>> = Vec::with_capacity(depth as usize);
        let root = [Cell::new(0, 0)];
        for level in 1..=depth {
            let parents: &[Cell] = levels.last().map_or(&root[..], |v| v.as_slice());
            let cells = if level < k0 {
                expand(parents, self.params, |_, _| true)
            } else {
                let stream = LevelStream::new(seed, copy, level);
                expand(parents, self.params, |c, r| stream.uniform(c, r) < p)
            };
            if cells.len() as u64 > self.cell_cap {
                return Err(Error::CellCap {
                    level,
                    projected: cells.len() as f64,
                    cap: self.cell_cap,
                });
            }
            levels.push(cells);
        }
        Ok(Realization {
            params: self.params,
            p,
            depth,
            seed,
            copy,
            forced_prefix: k0,
            levels,
        })
    }

    fn check_projection(&self, p: f64, depth: u32, k0: u32) -> Result<()> {
        let b = self.params.branching() as f64;
        let mut expected = 1.0;
        for level in 1..=depth {
            expected *= if level < k0 { b } else { p * b };
            if expected > self.cell_cap as f64 {
                return Err(Error::CellCap {
                    level,
                    projected: expected,
                    cap: self.cell_cap,
                });
            }
        }
        Ok(())
    }

    /// Whether `E_depth` is nonempty, decided by a depth-first search that
    /// stops at the first surviving line of descent. Uses the same uniforms
    /// as [`Generator::generate`], so the answer always equals
    /// `generate(..).survives()`, without materializing whole levels.
    pub fn survives_to(&self, p: f64, depth: u32, seed: u64, copy: u32) -> Result<bool> {
        check_probability(p)?;
        if depth == 0 {
            return Err(Error::domain("depth must be at least 1"));
        }
        self.params.grid_size(depth)?;
        let streams: Vec<LevelStream> = (1..=depth)
            .map(|level| LevelStream::new(seed, copy, level))
            .collect();
        let mut stack = vec![RectAddr::new(0, 0, 0, copy)];
        while let Some(addr) = stack.pop() {
            let stream = &streams[addr.level as usize];
            for child in addr.children(self.params) {
                if stream.uniform(child.col, child.row) < p {
                    if child.level == depth {
                        return Ok(true);
                    }
                    stack.push(child);
                }
            }
        }
        Ok(false)
    }
}

/// Children of `parents` (sorted by column, then row) that pass `keep`,
/// emitted already sorted.
fn expand(
    parents: &[Cell],
    params: GridParams,
    mut keep: impl FnMut(u64, u64) -> bool,
) -> Vec<Cell> {
    let (n, m) = (params.n() as u64, params.m() as u64);
    let mut out = Vec::new();
    let mut rest = parents;
    while let Some(first) = rest.first() {
        let run_len = rest.partition_point(|c| c.col == first.col);
        let (run, tail) = rest.split_at(run_len);
        for i in 0..n {
            let col = first.col * n + i;
            for parent in run {
                for j in 0..m {
                    let row = parent.row * m + j;
                    if keep(col, row) {
                        out.push(Cell::new(col, row));
                    }
                }
            }
        }
        rest = tail;
    }
    out
}

/// One sampled carpet, truncated at `depth`.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    params: GridParams,
    p: f64,
    depth: u32,
    seed: u64,
    copy: u32,
    forced_prefix: u32,
    levels: Vec<Vec<Cell>>,
}

/// Number of selected rectangles per level; `counts[0] = 1` is the unit square.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchingCount {
    pub counts: Vec<u64>,
}

impl Realization {
    /// Rebuilds a realization from stored parts, checking every structural
    /// invariant: bounds, sorted distinct cells, nesting and forced levels.
    pub fn from_parts(
        params: GridParams,
        p: f64,
        seed: u64,
        copy: u32,
        forced_prefix: u32,
        levels: Vec<Vec<Cell>>,
    ) -> Result<Self> {
        check_probability(p)?;
        let depth = levels.len() as u32;
        if depth == 0 {
            return Err(Error::domain("a realization needs at least one level"));
        }
        if !(1..=depth).contains(&forced_prefix) {
            return Err(Error::domain(format!(
                "forced prefix level {forced_prefix} must lie in 1..={depth}"
            )));
        }
        for (idx, cells) in levels.iter().enumerate() {
            let level = idx as u32 + 1;
            let (w, h) = params.grid_size(level)?;
            if let Some(c) = cells.iter().find(|c| c.col >= w || c.row >= h) {
                return Err(Error::domain(format!(
                    "cell ({}, {}) lies outside the {w}x{h} grid of level {level}",
                    c.col, c.row
                )));
            }
            if cells.windows(2).any(|pair| pair[0] >= pair[1]) {
                return Err(Error::domain(format!(
                    "cells of level {level} are not sorted and distinct"
                )));
            }
            if level < forced_prefix && cells.len() as u64 != params.branching().pow(level) {
                return Err(Error::domain(format!(
                    "level {level} is below the forced prefix but not full"
                )));
            }
            if idx > 0 {
                let parents = &levels[idx - 1];
                let orphan = cells.iter().find(|c| {
                    let up = Cell::new(c.col / params.n() as u64, c.row / params.m() as u64);
                    parents.binary_search(&up).is_err()
                });
                if let Some(c) = orphan {
                    return Err(Error::domain(format!(
                        "cell ({}, {}) of level {level} has no selected parent",
                        c.col, c.row
                    )));
                }
            }
        }
        Ok(Realization {
            params,
            p,
            depth,
            seed,
            copy,
            forced_prefix,
            levels,
        })
    }

    pub fn params(&self) -> GridParams {
        self.params
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn copy(&self) -> u32 {
        self.copy
    }

    /// First randomly selected level (1 for an ordinary realization).
    pub fn forced_prefix(&self) -> u32 {
        self.forced_prefix
    }

    /// Selected cells of level `k` (1-based), sorted by column then row.
    ///
    /// Panics if `k` is 0 or exceeds the depth.
    pub fn level(&self, k: u32) -> &[Cell] {
        assert!(
            (1..=self.depth).contains(&k),
            "level {k} outside 1..={}",
            self.depth
        );
        &self.levels[k as usize - 1]
    }

    pub fn levels(&self) -> &[Vec<Cell>] {
        &self.levels
    }

    pub fn survives(&self) -> bool {
        self.levels.last().is_some_and(|l| !l.is_empty())
    }

    pub fn branching_count(&self) -> BranchingCount {
        let counts = std::iter::once(1)
            .chain(self.levels.iter().map(|l| l.len() as u64))
            .collect();
        BranchingCount { counts }
    }
}

/// [`Generator::generate`] with the default cell cap.
pub fn generate(
    params: GridParams,
    p: f64,
    depth: u32,
    seed: u64,
    copy: u32,
) -> Result<Realization> {
    Generator::new(params).generate(p, depth, seed, copy)
}

/// [`Generator::force_prefix`] with the default cell cap.
pub fn force_prefix(
    params: GridParams,
    p: f64,
    depth: u32,
    seed: u64,
    copy: u32,
    k0: u32,
) -> Result<Realization> {
    Generator::new(params).force_prefix(p, depth, seed, copy, k0)
}
