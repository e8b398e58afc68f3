//! Oracles written independently of the library's code paths.
#![allow(dead_code)]

use std::collections::VecDeque;

use affine_perc::{Adjacency, Cell};
use rand::Rng;
use rand_distr::{Binomial, Distribution};

/// Component index per input cell, by breadth-first flood fill on a dense grid.
pub fn flood_fill(cells: &[Cell], width: usize, height: usize, adjacency: Adjacency) -> Vec<usize> {
    let mut grid = vec![None::<usize>; width * height];
    for (i, c) in cells.iter().enumerate() {
        grid[c.row as usize * width + c.col as usize] = Some(i);
    }
    let offsets: &[(i64, i64)] = match adjacency {
        Adjacency::Edge => &[(1, 0), (-1, 0), (0, 1), (0, -1)],
        Adjacency::Corner => &[
            (1, 0),
            (-1, 0),
            (0, 1),
            (0, -1),
            (1, 1),
            (1, -1),
            (-1, 1),
            (-1, -1),
        ],
    };
    let mut comp = vec![usize::MAX; cells.len()];
    let mut next = 0;
    for start in 0..cells.len() {
        if comp[start] != usize::MAX {
            continue;
        }
        comp[start] = next;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            let (x, y) = (cells[i].col as i64, cells[i].row as i64);
            for (dx, dy) in offsets {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= width as i64 || ny >= height as i64 {
                    continue;
                }
                if let Some(j) = grid[ny as usize * width + nx as usize] {
                    if comp[j] == usize::MAX {
                        comp[j] = next;
                        queue.push_back(j);
                    }
                }
            }
        }
        next += 1;
    }
    comp
}

/// Whether two labelings induce the same partition.
pub fn same_partition<A: PartialEq + Copy, B: PartialEq + Copy>(a: &[A], b: &[B]) -> bool {
    use std::collections::HashMap;
    assert_eq!(a.len(), b.len());
    let mut fwd: HashMap<usize, usize> = HashMap::new();
    let mut back: HashMap<usize, usize> = HashMap::new();
    // Map each label to the first index carrying it, then compare.
    let first_a: Vec<usize> = (0..a.len())
        .map(|i| (0..=i).find(|&j| a[j] == a[i]).unwrap())
        .collect();
    let first_b: Vec<usize> = (0..b.len())
        .map(|i| (0..=i).find(|&j| b[j] == b[i]).unwrap())
        .collect();
    for i in 0..a.len() {
        if *fwd.entry(first_a[i]).or_insert(first_b[i]) != first_b[i] {
            return false;
        }
        if *back.entry(first_b[i]).or_insert(first_a[i]) != first_a[i] {
            return false;
        }
    }
    true
}

/// Crossing via flood fill from one side.
pub fn flood_crossing(
    cells: &[Cell],
    width: usize,
    height: usize,
    adjacency: Adjacency,
    horizontal: bool,
) -> bool {
    let comp = flood_fill(cells, width, height, adjacency);
    let near = |c: &Cell| if horizontal { c.col == 0 } else { c.row == 0 };
    let far = |c: &Cell| {
        if horizontal {
            c.col as usize == width - 1
        } else {
            c.row as usize == height - 1
        }
    };
    cells.iter().enumerate().any(|(i, a)| {
        near(a)
            && cells
                .iter()
                .enumerate()
                .any(|(j, b)| far(b) && comp[i] == comp[j])
    })
}

/// Galton-Watson generation sizes `Z_1..=Z_depth` with Binomial(b, p) offspring.
pub fn galton_watson<R: Rng>(rng: &mut R, b: u64, p: f64, depth: u32) -> Vec<u64> {
    let mut z = 1u64;
    let mut out = Vec::with_capacity(depth as usize);
    for _ in 0..depth {
        z = if z == 0 {
            0
        } else {
            Binomial::new(z * b, p).unwrap().sample(rng)
        };
        out.push(z);
    }
    out
}

/// Random subset of the `w x h` grid with inclusion probability `density`.
pub fn random_cells<R: Rng>(rng: &mut R, w: u64, h: u64, density: f64) -> Vec<Cell> {
    let mut v = Vec::new();
    for c in 0..w {
        for r in 0..h {
            if rng.random::<f64>() < density {
                v.push(Cell::new(c, r));
            }
        }
    }
    v
}
