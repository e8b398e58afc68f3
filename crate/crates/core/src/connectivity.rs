//! Cluster labeling, crossings and component census on level-`k` cell sets.
//!
//! Cells are closed rectangles. With [`Adjacency::Corner`] two cells are
//! adjacent exactly when their closures meet, which is the connectivity of
//! the union `E_k` itself.

use serde::{Deserialize, Serialize};

use crate::carpet::Realization;
use crate::error::{Error, Result};
use crate::grid::Cell;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Adjacency {
    /// Shared edge only.
    Edge,
    /// Shared edge or corner.
    #[default]
    Corner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    /// Left edge to right edge.
    H,
    /// Bottom edge to top edge.
    V,
}

/// Domain assembled from one or two independent copies of the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layout {
    #[default]
    Unit,
    /// `[0,1] x [0,2]`: copy 1 stacked above copy 0.
    TwoTall,
    /// `[0,2] x [0,1]`: copy 1 to the right of copy 0.
    TwoWide,
}

impl Layout {
    pub fn copies(self) -> usize {
        match self {
            Layout::Unit => 1,
            Layout::TwoTall | Layout::TwoWide => 2,
        }
    }
}

/// Union-find over `u32` indices with path halving and union by size.
#[derive(Debug, Clone)]
pub struct DisjointSets {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl DisjointSets {
    pub fn new(len: usize) -> Self {
        assert!(
            len <= u32::MAX as usize,
            "too many elements for u32 indices"
        );
        DisjointSets {
            parent: (0..len as u32).collect(),
            size: vec![1; len],
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    /// Merges the sets of `a` and `b`; returns false if already merged.
    pub fn union(&mut self, a: u32, b: u32) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb as usize] = ra;
        self.size[ra as usize] += self.size[rb as usize];
        true
    }

    pub fn same(&mut self, a: u32, b: u32) -> bool {
        self.find(a) == self.find(b)
    }
}

/// Calls `f(i, j)` for every adjacent pair of cells in `cells`, which must be
/// sorted by column then row and free of duplicates. Runs in linear time by
/// walking each column against the next one.
pub(crate) fn for_each_adjacent_pair(
    cells: &[Cell],
    adjacency: Adjacency,
    mut f: impl FnMut(usize, usize),
) {
    let reach = match adjacency {
        Adjacency::Edge => 0,
        Adjacency::Corner => 1,
    };
    let mut start = 0;
    while start < cells.len() {
        let col = cells[start].col;
        let end = start + cells[start..].partition_point(|c| c.col == col);
        for i in start + 1..end {
            if cells[i].row == cells[i - 1].row + 1 {
                f(i - 1, i);
            }
        }
        if end < cells.len() && cells[end].col == col + 1 {
            let next_end = end + cells[end..].partition_point(|c| c.col == col + 1);
            let mut lo = end;
            for i in start..end {
                let row = cells[i].row;
                while lo < next_end && cells[lo].row + reach < row {
                    lo += 1;
                }
                let mut j = lo;
                while j < next_end && cells[j].row <= row + reach {
                    f(i, j);
                    j += 1;
                }
            }
        }
        start = end;
    }
}

fn check_bounds(cells: &[Cell], (width, height): (u64, u64)) -> Result<()> {
    match cells.iter().find(|c| c.col >= width || c.row >= height) {
        Some(c) => Err(Error::domain(format!(
            "cell ({}, {}) lies outside the {width}x{height} grid",
            c.col, c.row
        ))),
        None => Ok(()),
    }
}

fn sorted_unique(cells: &[Cell]) -> Vec<Cell> {
    let mut v = cells.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

/// Component labels for a cell set. Each component is identified by its
/// smallest cell in (column, row) order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling {
    cells: Vec<Cell>,
    /// Index into `cells` of each cell's canonical representative.
    labels: Vec<u32>,
}

impl Labeling {
    /// The labeled cells, sorted.
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    /// Canonical cell of the `i`-th cell's component.
    pub fn label(&self, i: usize) -> Cell {
        self.cells[self.labels[i] as usize]
    }

    pub fn component_of(&self, cell: Cell) -> Option<Cell> {
        self.cells.binary_search(&cell).ok().map(|i| self.label(i))
    }

    pub fn num_components(&self) -> usize {
        self.labels
            .iter()
            .enumerate()
            .filter(|&(i, &l)| l as usize == i)
            .count()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Cell, Cell)> + '_ {
        (0..self.cells.len()).map(move |i| (self.cells[i], self.label(i)))
    }
}

pub fn label_components(
    cells: &[Cell],
    grid: (u64, u64),
    adjacency: Adjacency,
) -> Result<Labeling> {
    check_bounds(cells, grid)?;
    let cells = sorted_unique(cells);
    let mut sets = DisjointSets::new(cells.len());
    for_each_adjacent_pair(&cells, adjacency, |i, j| {
        sets.union(i as u32, j as u32);
    });
    // Cells are visited in sorted order, so the first cell reaching a root is
    // the smallest member of its component.
    let mut canonical = vec![u32::MAX; cells.len()];
    let labels = (0..cells.len() as u32)
        .map(|i| {
            let root = sets.find(i) as usize;
            if canonical[root] == u32::MAX {
                canonical[root] = i;
            }
            canonical[root]
        })
        .collect();
    Ok(Labeling { cells, labels })
}

/// Crossing test on a sorted, duplicate-free, in-bounds cell set, using two
/// virtual nodes joined to the opposite boundary cells.
pub fn crosses(
    cells: &[Cell],
    (width, height): (u64, u64),
    direction: Direction,
    adjacency: Adjacency,
) -> bool {
    let len = cells.len() as u32;
    let (source, sink) = (len, len + 1);
    let mut sets = DisjointSets::new(cells.len() + 2);
    let (mut near, mut far_side) = (false, false);
    for (i, c) in cells.iter().enumerate() {
        let (coord, far) = match direction {
            Direction::H => (c.col, width - 1),
            Direction::V => (c.row, height - 1),
        };
        if coord == 0 {
            sets.union(i as u32, source);
            near = true;
        }
        if coord == far {
            sets.union(i as u32, sink);
            far_side = true;
        }
    }
    if !(near && far_side) {
        return false;
    }
    for_each_adjacent_pair(cells, adjacency, |i, j| {
        sets.union(i as u32, j as u32);
    });
    sets.same(source, sink)
}

fn check_level(r: &Realization, k: u32) -> Result<()> {
    if (1..=r.depth()).contains(&k) {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "level {k} outside 1..={} of the realization",
            r.depth()
        )))
    }
}

/// Whether level `k` of `r` crosses the unit square in `direction`.
pub fn crossing(
    r: &Realization,
    k: u32,
    direction: Direction,
    adjacency: Adjacency,
) -> Result<bool> {
    check_level(r, k)?;
    let grid = r.params().grid_size(k)?;
    Ok(crosses(r.level(k), grid, direction, adjacency))
}

/// Level-`k` cells of one or two realizations placed side by side according
/// to `layout`, with the merged grid size.
pub fn assemble_domain(
    realizations: &[&Realization],
    layout: Layout,
    k: u32,
) -> Result<(Vec<Cell>, (u64, u64))> {
    if realizations.len() != layout.copies() {
        return Err(Error::domain(format!(
            "layout {layout:?} needs {} realization(s), got {}",
            layout.copies(),
            realizations.len()
        )));
    }
    for r in realizations {
        check_level(r, k)?;
    }
    let (w, h) = realizations[0].params().grid_size(k)?;
    if let [a, b] = realizations {
        if a.params() != b.params() {
            return Err(Error::domain("domain copies must share grid parameters"));
        }
        if a.copy() == b.copy() && a.seed() == b.seed() {
            return Err(Error::domain(
                "domain copies must be independent (distinct copy index)",
            ));
        }
    }
    match layout {
        Layout::Unit => Ok((realizations[0].level(k).to_vec(), (w, h))),
        Layout::TwoTall => {
            let (lower, upper) = (realizations[0].level(k), realizations[1].level(k));
            let mut cells = Vec::with_capacity(lower.len() + upper.len());
            // Merge column by column; upper rows all exceed lower rows.
            let (mut i, mut j) = (0, 0);
            while i < lower.len() || j < upper.len() {
                let take_lower =
                    j == upper.len() || (i < lower.len() && lower[i].col <= upper[j].col);
                if take_lower {
                    cells.push(lower[i]);
                    i += 1;
                } else {
                    cells.push(Cell::new(upper[j].col, upper[j].row + h));
                    j += 1;
                }
            }
            Ok((cells, (w, 2 * h)))
        }
        Layout::TwoWide => {
            let mut cells = realizations[0].level(k).to_vec();
            cells.extend(
                realizations[1]
                    .level(k)
                    .iter()
                    .map(|c| Cell::new(c.col + w, c.row)),
            );
            Ok((cells, (2 * w, h)))
        }
    }
}

/// Crossing of a one- or two-copy domain. `H` on two-tall spans the short
/// side `[0,1]`; `V` on two-wide likewise.
pub fn crossing_domain(
    realizations: &[&Realization],
    layout: Layout,
    k: u32,
    direction: Direction,
    adjacency: Adjacency,
) -> Result<bool> {
    let (cells, grid) = assemble_domain(realizations, layout, k)?;
    Ok(crosses(&cells, grid, direction, adjacency))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentCensus {
    pub level: u32,
    pub num_components: u64,
    /// Components with at least two cells.
    pub num_nontrivial: u64,
    pub num_touching_boundary: u64,
    /// Components with no cell in a boundary row or column.
    pub num_islands: u64,
    pub largest_size: u64,
    pub crossing_h: bool,
    pub crossing_v: bool,
}

/// Census of a sorted, duplicate-free, in-bounds cell set.
pub fn census_cells(
    cells: &[Cell],
    (width, height): (u64, u64),
    adjacency: Adjacency,
    level: u32,
) -> ComponentCensus {
    const LEFT: u8 = 1;
    const RIGHT: u8 = 2;
    const BOTTOM: u8 = 4;
    const TOP: u8 = 8;

    let mut sets = DisjointSets::new(cells.len());
    for_each_adjacent_pair(cells, adjacency, |i, j| {
        sets.union(i as u32, j as u32);
    });
    let mut touches = vec![0u8; cells.len()];
    for (i, c) in cells.iter().enumerate() {
        let root = sets.find(i as u32) as usize;
        let mut t = 0;
        if c.col == 0 {
            t |= LEFT;
        }
        if c.col == width - 1 {
            t |= RIGHT;
        }
        if c.row == 0 {
            t |= BOTTOM;
        }
        if c.row == height - 1 {
            t |= TOP;
        }
        touches[root] |= t;
    }

    let mut census = ComponentCensus {
        level,
        num_components: 0,
        num_nontrivial: 0,
        num_touching_boundary: 0,
        num_islands: 0,
        largest_size: 0,
        crossing_h: false,
        crossing_v: false,
    };
    for (i, &t) in touches.iter().enumerate() {
        if sets.parent[i] != i as u32 {
            continue;
        }
        let size = sets.size[i] as u64;
        census.num_components += 1;
        census.num_nontrivial += u64::from(size >= 2);
        census.largest_size = census.largest_size.max(size);
        if t == 0 {
            census.num_islands += 1;
        } else {
            census.num_touching_boundary += 1;
        }
        census.crossing_h |= t & (LEFT | RIGHT) == LEFT | RIGHT;
        census.crossing_v |= t & (BOTTOM | TOP) == BOTTOM | TOP;
    }
    census
}

pub fn census(r: &Realization, k: u32, adjacency: Adjacency) -> Result<ComponentCensus> {
    check_level(r, k)?;
    let grid = r.params().grid_size(k)?;
    Ok(census_cells(r.level(k), grid, adjacency, k))
}
