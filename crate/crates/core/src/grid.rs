use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of one subdivision step: `n` columns by `m` rows, with `m > n >= 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridParams {
    n: u32,
    m: u32,
}

impl GridParams {
    pub fn new(n: u32, m: u32) -> Result<Self> {
        if n >= 2 && m > n {
            Ok(GridParams { n, m })
        } else {
            Err(Error::InvalidGrid { n, m })
        }
    }

    #[inline]
    pub fn n(&self) -> u32 {
        self.n
    }

    #[inline]
    pub fn m(&self) -> u32 {
        self.m
    }

    /// Children per rectangle, `n * m`.
    #[inline]
    pub fn branching(&self) -> u64 {
        self.n as u64 * self.m as u64
    }

    /// Number of columns of the level-`k` grid, `n^k`, if it fits in a `u64`.
    pub fn columns(&self, level: u32) -> Option<u64> {
        (self.n as u64).checked_pow(level)
    }

    /// Number of rows of the level-`k` grid, `m^k`, if it fits in a `u64`.
    pub fn rows(&self, level: u32) -> Option<u64> {
        (self.m as u64).checked_pow(level)
    }

    /// `(columns, rows)` at `level`, or a domain error when the grid is too
    /// fine to address with 64-bit coordinates.
    pub fn grid_size(&self, level: u32) -> Result<(u64, u64)> {
        match (self.columns(level), self.rows(level)) {
            (Some(w), Some(h)) => Ok((w, h)),
            _ => Err(Error::domain(format!(
                "level {level} of a {}x{} grid overflows 64-bit cell coordinates",
                self.n, self.m
            ))),
        }
    }

    /// Width and height of a level-`k` rectangle.
    pub fn cell_extent(&self, level: u32) -> (f64, f64) {
        let k = level as i32;
        ((self.n as f64).powi(-k), (self.m as f64).powi(-k))
    }
}

/// Position of a rectangle within its level grid. Ordered by column, then row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "(u64, u64)", into = "(u64, u64)")]
pub struct Cell {
    pub col: u64,
    pub row: u64,
}

impl Cell {
    #[inline]
    pub const fn new(col: u64, row: u64) -> Self {
        Cell { col, row }
    }
}

impl From<(u64, u64)> for Cell {
    fn from((col, row): (u64, u64)) -> Self {
        Cell { col, row }
    }
}

impl From<Cell> for (u64, u64) {
    fn from(c: Cell) -> Self {
        (c.col, c.row)
    }
}

/// Full address of a rectangle: level, position and domain-copy index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RectAddr {
    pub level: u32,
    pub col: u64,
    pub row: u64,
    pub copy: u32,
}

impl RectAddr {
    pub fn new(level: u32, col: u64, row: u64, copy: u32) -> Self {
        RectAddr {
            level,
            col,
            row,
            copy,
        }
    }

    pub fn cell(&self) -> Cell {
        Cell::new(self.col, self.row)
    }

    /// Whether this address lies inside the level grid of `params`.
    pub fn is_valid_for(&self, params: GridParams) -> bool {
        self.level >= 1
            && matches!(params.grid_size(self.level), Ok((w, h)) if self.col < w && self.row < h)
    }

    /// The `n * m` child addresses one level down.
    pub fn children(&self, params: GridParams) -> impl Iterator<Item = RectAddr> + '_ {
        let (n, m) = (params.n() as u64, params.m() as u64);
        let base = *self;
        (0..n).flat_map(move |i| {
            (0..m).map(move |j| {
                RectAddr::new(
                    base.level + 1,
                    base.col * n + i,
                    base.row * m + j,
                    base.copy,
                )
            })
        })
    }

    /// The enclosing rectangle one level up, or `None` at level 1.
    pub fn parent(&self, params: GridParams) -> Option<RectAddr> {
        (self.level > 1).then(|| {
            RectAddr::new(
                self.level - 1,
                self.col / params.n() as u64,
                self.row / params.m() as u64,
                self.copy,
            )
        })
    }

    /// Closed footprint `[x0, x1] x [y0, y1]` in unit-square coordinates.
    pub fn footprint(&self, params: GridParams) -> [f64; 4] {
        let (w, h) = params.cell_extent(self.level);
        [
            self.col as f64 * w,
            (self.col + 1) as f64 * w,
            self.row as f64 * h,
            (self.row + 1) as f64 * h,
        ]
    }
}
