//! Closed-form and fixed-point quantities of the carpet model.

use serde::{Deserialize, Serialize};

use crate::connectivity::Direction;
use crate::error::{check_probability, Error, Result};
use crate::grid::GridParams;

/// Fixed-point iterations stop once successive iterates differ by less than this.
pub const FIXED_POINT_TOL: f64 = 1e-12;
pub const MAX_ITERATIONS: u32 = 100_000;
/// j-full limits at or below this are reported as zero.
pub const JFULL_ZERO: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extinction {
    /// Probability that the carpet is empty.
    pub t: f64,
    pub survival: f64,
    pub iterations: u32,
    /// The iteration cap was reached before the residual fell below
    /// [`FIXED_POINT_TOL`]; happens only just above `p = 1/(nm)`.
    pub near_critical: bool,
}

/// Least root in `[0, 1]` of `t = (p t + 1 - p)^(nm)`.
///
/// For `p <= 1/(nm)` the branching process is (sub)critical and `t = 1`
/// exactly. Otherwise the map is iterated from `t = 0`; being increasing and
/// continuous, it converges monotonically to its least fixed point.
pub fn extinction_prob(params: GridParams, p: f64) -> Result<Extinction> {
    check_probability(p)?;
    let b = params.branching();
    if p * b as f64 <= 1.0 {
        return Ok(Extinction {
            t: 1.0,
            survival: 0.0,
            iterations: 0,
            near_critical: false,
        });
    }
    let exponent = b as i32;
    let mut t = 0.0f64;
    for i in 1..=MAX_ITERATIONS {
        let next = (p * t + 1.0 - p).powi(exponent);
        let step = (next - t).abs();
        t = next;
        if step < FIXED_POINT_TOL {
            return Ok(Extinction {
                t,
                survival: 1.0 - t,
                iterations: i,
                near_critical: false,
            });
        }
    }
    Ok(Extinction {
        t,
        survival: 1.0 - t,
        iterations: MAX_ITERATIONS,
        near_critical: true,
    })
}

/// `P(E_depth != ∅)`, by iterating the offspring generating function
/// `depth` times from 0.
pub fn survival_at_depth(params: GridParams, p: f64, depth: u32) -> Result<f64> {
    check_probability(p)?;
    let exponent = params.branching() as i32;
    let mut q = 0.0f64;
    for _ in 0..depth {
        q = (p * q + 1.0 - p).powi(exponent);
    }
    Ok(1.0 - q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dimensions {
    /// Hausdorff and box-counting dimension, conditional on non-extinction.
    pub hausdorff_box: f64,
    pub assouad: f64,
}

pub fn dimensions(params: GridParams, p: f64) -> Result<Dimensions> {
    check_probability(p)?;
    let (n, m) = (params.n() as f64, params.m() as f64);
    if p * n * m <= 1.0 {
        return Err(Error::domain(format!(
            "p = {p} <= 1/(nm): the carpet is empty almost surely, dimensions are undefined"
        )));
    }
    let hausdorff_box = if p * m <= 1.0 {
        (p * n * m).ln() / n.ln()
    } else {
        (p * m * m).ln() / m.ln()
    };
    Ok(Dimensions {
        hausdorff_box,
        assouad: 2.0,
    })
}

/// `f_p(t) = N (pt)^(N-1) - (N-1) (pt)^N` with `N = nm`: the chance that at
/// least `N - 1` of `N` children are selected and `(j-1)`-full, each
/// independently with probability `p t`.
pub fn jfull_map(params: GridParams, p: f64, t: f64) -> Result<f64> {
    check_probability(p)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain(format!("t = {t} is outside [0, 1]")));
    }
    Ok(jfull_step(params.branching(), p, t))
}

fn jfull_step(b: u64, p: f64, t: f64) -> f64 {
    let x = p * t;
    let b_f = b as f64;
    let x_pow = x.powi(b as i32 - 1);
    (b_f * x_pow - (b_f - 1.0) * x_pow * x).clamp(0.0, 1.0)
}

fn require_jfull_support(params: GridParams) -> Result<()> {
    if params.n() < 3 {
        return Err(Error::Unsupported(format!(
            "j-full recursion needs n >= 3; the {}x{} case requires a different notion of 'full' \
             that is not defined here",
            params.n(),
            params.m()
        )));
    }
    Ok(())
}

/// `p_0 = 1, p_1, ..., p_len`: probabilities that the unit square is j-full.
pub fn jfull_sequence(params: GridParams, p: f64, len: u32) -> Result<Vec<f64>> {
    require_jfull_support(params)?;
    check_probability(p)?;
    let b = params.branching();
    let mut seq = Vec::with_capacity(len as usize + 1);
    let mut t = 1.0;
    seq.push(t);
    for _ in 0..len {
        t = jfull_step(b, p, t);
        seq.push(t);
    }
    Ok(seq)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JfullLimit {
    pub limit: f64,
    pub iterations: u32,
    pub converged: bool,
}

impl JfullLimit {
    /// Whether the square stays j-full for every j with positive probability.
    pub fn is_positive(&self) -> bool {
        self.limit > JFULL_ZERO
    }
}

/// Limit of `p_j = f_p(p_{j-1})` from `p_0 = 1`. The sequence is
/// non-increasing, so the limit is the largest fixed point of `f_p` in `[0, 1]`.
pub fn jfull_limit(params: GridParams, p: f64) -> Result<JfullLimit> {
    require_jfull_support(params)?;
    check_probability(p)?;
    let b = params.branching();
    let mut t = 1.0f64;
    for i in 1..=MAX_ITERATIONS {
        let next = jfull_step(b, p, t);
        let step = (t - next).abs();
        t = next;
        if step < FIXED_POINT_TOL {
            return Ok(JfullLimit {
                limit: t,
                iterations: i,
                converged: true,
            });
        }
    }
    Ok(JfullLimit {
        limit: t,
        iterations: MAX_ITERATIONS,
        converged: false,
    })
}

/// Smallest tolerance for [`crossing_upper_bound`]; below it the iteration
/// near the tangency threshold stops resolving within [`MAX_ITERATIONS`].
pub const MIN_BOUND_TOL: f64 = 1e-9;

/// Bisection for the least `p` whose j-full limit is positive, to width
/// `tol`. Returns the upper end of the final bracket, an upper bound for the
/// critical probability.
pub fn crossing_upper_bound(params: GridParams, tol: f64) -> Result<f64> {
    require_jfull_support(params)?;
    if tol.is_nan() || tol < MIN_BOUND_TOL {
        return Err(Error::domain(format!(
            "tolerance {tol} must be at least {MIN_BOUND_TOL}"
        )));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if jfull_limit(params, mid)?.is_positive() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Probability that at least one of the `m^q` level-`q` rows inside a
/// level-`j` column is entirely selected: `1 - (1 - p^(n^(q-j)))^(m^q)`,
/// evaluated in log space.
pub fn full_row_prob(params: GridParams, p: f64, q: u32, j: u32) -> Result<f64> {
    check_probability(p)?;
    if q < j {
        return Err(Error::domain(format!("need q >= j, got q = {q}, j = {j}")));
    }
    let row_len = (params.n() as f64).powi((q - j) as i32);
    let rows = (params.m() as f64).powi(q as i32);
    let all_selected = if p == 0.0 {
        0.0
    } else {
        (row_len * p.ln()).exp()
    };
    if all_selected == 0.0 {
        return Ok(0.0);
    }
    let log_none = rows * (-all_selected).ln_1p();
    Ok((-log_none.exp_m1()).clamp(0.0, 1.0))
}

/// `((4m)^(-n/(n-1)), (4n)^(-m/(m-1)))`: lower bounds on the doubled-domain
/// crossing probabilities whenever those are positive.
pub fn tau_lower_bound(params: GridParams) -> (f64, f64) {
    let (n, m) = (params.n() as f64, params.m() as f64);
    (
        (4.0 * m).powf(-n / (n - 1.0)),
        (4.0 * n).powf(-m / (m - 1.0)),
    )
}

/// Largest grid accepted by [`Level1Polynomial::enumerate`].
pub const MAX_ENUMERATED_CELLS: u32 = 25;

/// Level-1 crossing probability as a polynomial in `p`:
/// `sum_s counts[s] p^s (1-p)^(N-s)`, where `counts[s]` is the number of
/// `s`-cell subsets of the `cols x rows` grid containing a crossing under
/// edge-or-corner adjacency.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Level1Polynomial {
    pub cols: u32,
    pub rows: u32,
    pub counts: Vec<u64>,
}

impl Level1Polynomial {
    /// Enumerates all `2^(cols*rows)` subsets. Grid need not satisfy `m > n`.
    pub fn enumerate(cols: u32, rows: u32, direction: Direction) -> Result<Self> {
        let total = cols * rows;
        if cols == 0 || rows == 0 || total > MAX_ENUMERATED_CELLS {
            return Err(Error::domain(format!(
                "{cols}x{rows} grid: exact enumeration supports 1..={MAX_ENUMERATED_CELLS} cells"
            )));
        }
        let idx = |c: u32, r: u32| c * rows + r;
        let mut neighbours = vec![0u32; total as usize];
        for c in 0..cols {
            for r in 0..rows {
                let mut mask = 0u32;
                for dc in -1i32..=1 {
                    for dr in -1i32..=1 {
                        let (nc, nr) = (c as i32 + dc, r as i32 + dr);
                        if (dc, dr) != (0, 0)
                            && (0..cols as i32).contains(&nc)
                            && (0..rows as i32).contains(&nr)
                        {
                            mask |= 1 << idx(nc as u32, nr as u32);
                        }
                    }
                }
                neighbours[idx(c, r) as usize] = mask;
            }
        }
        let (mut start, mut goal) = (0u32, 0u32);
        for c in 0..cols {
            for r in 0..rows {
                let (coord, last) = match direction {
                    Direction::H => (c, cols - 1),
                    Direction::V => (r, rows - 1),
                };
                if coord == 0 {
                    start |= 1 << idx(c, r);
                }
                if coord == last {
                    goal |= 1 << idx(c, r);
                }
            }
        }

        let mut counts = vec![0u64; total as usize + 1];
        for subset in 0u32..(1u32 << total) {
            let mut reached = subset & start;
            if reached == 0 || subset & goal == 0 {
                continue;
            }
            loop {
                let mut grown = reached;
                let mut bits = reached;
                while bits != 0 {
                    let i = bits.trailing_zeros();
                    grown |= neighbours[i as usize] & subset;
                    bits &= bits - 1;
                }
                if grown == reached {
                    break;
                }
                reached = grown;
            }
            if reached & goal != 0 {
                counts[subset.count_ones() as usize] += 1;
            }
        }
        Ok(Level1Polynomial { cols, rows, counts })
    }

    pub fn eval(&self, p: f64) -> f64 {
        let total = self.counts.len() as i32 - 1;
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(s, &c)| c as f64 * p.powi(s as i32) * (1.0 - p).powi(total - s as i32))
            .sum()
    }
}

/// Exact probability that level 1 of a `cols x rows` carpet crosses in `direction`.
pub fn exact_level1_crossing(cols: u32, rows: u32, p: f64, direction: Direction) -> Result<f64> {
    check_probability(p)?;
    Ok(Level1Polynomial::enumerate(cols, rows, direction)?.eval(p))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticReport {
    pub n: u32,
    pub m: u32,
    pub p: f64,
    pub extinction_t: f64,
    pub survival: f64,
    /// `None` when `p <= 1/(nm)`.
    pub dim_hb: Option<f64>,
    pub dim_assouad: Option<f64>,
    /// `None` for `n = 2`.
    pub jfull_limit: Option<f64>,
    #[serde(rename = "p_A")]
    pub p_a: Option<f64>,
    pub tau_h_bound: f64,
    pub tau_v_bound: f64,
}

/// Every analytic quantity at `(n, m, p)`; `tol` is the bisection width for `p_A`.
pub fn analytic_report(params: GridParams, p: f64, tol: f64) -> Result<AnalyticReport> {
    let ext = extinction_prob(params, p)?;
    let dims = dimensions(params, p).ok();
    let (jfull, p_a) = if params.n() >= 3 {
        (
            Some(jfull_limit(params, p)?.limit),
            Some(crossing_upper_bound(params, tol)?),
        )
    } else {
        (None, None)
    };
    let (tau_h_bound, tau_v_bound) = tau_lower_bound(params);
    Ok(AnalyticReport {
        n: params.n(),
        m: params.m(),
        p,
        extinction_t: ext.t,
        survival: ext.survival,
        dim_hb: dims.map(|d| d.hausdorff_box),
        dim_assouad: dims.map(|d| d.assouad),
        jfull_limit: jfull,
        p_a,
        tau_h_bound,
        tau_v_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: u32, m: u32) -> GridParams {
        GridParams::new(n, m).unwrap()
    }

    fn binom(n: u64, k: u64) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    #[test]
    fn extinction_edges() {
        let g23 = g(2, 3);
        for p in [0.0, 0.05, 0.15, 1.0 / 6.0] {
            let e = extinction_prob(g23, p).unwrap();
            assert!((e.t - 1.0).abs() < 1e-9, "p={p} t={}", e.t);
        }
        let e = extinction_prob(g23, 1.0).unwrap();
        assert_eq!(e.t, 0.0);
        assert_eq!(e.survival, 1.0);
    }

    #[test]
    fn extinction_is_least_fixed_point() {
        let g23 = g(2, 3);
        for p in [0.2, 0.3, 0.5, 0.8, 0.95] {
            let e = extinction_prob(g23, p).unwrap();
            assert!(!e.near_critical);
            let image = (p * e.t + 1.0 - p).powi(6);
            assert!((e.t - image).abs() < 1e-10);
            // No fixed point below: the map stays above the diagonal on [0, t).
            for i in 0..1000 {
                let s = e.t * i as f64 / 1000.0;
                assert!((p * s + 1.0 - p).powi(6) > s);
            }
        }
    }

    #[test]
    fn extinction_monotone_in_p() {
        let g34 = g(3, 4);
        let ts: Vec<f64> = (0..=100)
            .map(|i| extinction_prob(g34, i as f64 / 100.0).unwrap().t)
            .collect();
        assert!(ts.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn finite_depth_survival_decreases_to_limit() {
        let g23 = g(2, 3);
        let limit = extinction_prob(g23, 0.3).unwrap().survival;
        let s: Vec<f64> = (1..40)
            .map(|k| survival_at_depth(g23, 0.3, k).unwrap())
            .collect();
        assert!(s.windows(2).all(|w| w[1] <= w[0]));
        assert!((s.last().unwrap() - limit).abs() < 1e-10);
        assert!((survival_at_depth(g23, 0.3, 1).unwrap() - (1.0 - 0.7f64.powi(6))).abs() < 1e-15);
    }

    #[test]
    fn dimension_branches() {
        let g23 = g(2, 3);
        assert!((dimensions(g23, 1.0).unwrap().hausdorff_box - 2.0).abs() < 1e-15);
        let d = dimensions(g23, 1.0 / 3.0).unwrap().hausdorff_box;
        assert!((d - 1.0).abs() < 1e-12);
        let d = dimensions(g23, 0.25).unwrap().hausdorff_box;
        assert!((d - 1.5f64.ln() / 2f64.ln()).abs() < 1e-15);
        // On the lower range the horizontal branch is the smaller one.
        assert!(d < (0.25f64 * 9.0).ln() / 3f64.ln());
        assert!(matches!(dimensions(g23, 1.0 / 6.0), Err(Error::Domain(_))));
        assert!(dimensions(g23, 0.1).is_err());
        assert_eq!(dimensions(g23, 0.5).unwrap().assouad, 2.0);
    }

    #[test]
    fn jfull_map_values() {
        let g34 = g(3, 4);
        assert_eq!(jfull_map(g34, 0.7, 0.0).unwrap(), 0.0);
        assert_eq!(jfull_map(g34, 1.0, 1.0).unwrap(), 1.0);
        // Binomial tail P(Bin(12, 0.72) >= 11) by direct summation.
        let x: f64 = 0.9 * 0.8;
        let tail: f64 = (11..=12)
            .map(|k| binom(12, k) * x.powi(k as i32) * (1.0 - x).powi(12 - k as i32))
            .sum();
        assert!((jfull_map(g34, 0.9, 0.8).unwrap() - tail).abs() < 1e-14);
        assert!(jfull_map(g34, 0.9, 1.2).is_err());
        assert!(jfull_map(g34, 0.9, -0.1).is_err());
    }

    #[test]
    fn jfull_limits() {
        let g34 = g(3, 4);
        let l = jfull_limit(g34, 1.0).unwrap();
        assert_eq!(l.limit, 1.0);
        let l = jfull_limit(g34, 0.5).unwrap();
        assert!(l.converged && !l.is_positive());
        // f_p(t) < t on (0, 1] at p = 0.5, so the only fixed point is 0.
        for i in 1..=10_000 {
            let t = i as f64 / 10_000.0;
            assert!(jfull_map(g34, 0.5, t).unwrap() < t);
        }
        assert!(matches!(
            jfull_limit(g(2, 3), 0.9),
            Err(Error::Unsupported(_))
        ));
        assert!(matches!(
            crossing_upper_bound(g(2, 5), 1e-6),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn jfull_sequence_non_increasing() {
        for p in [0.9, 0.99, 0.996, 0.999] {
            let s = jfull_sequence(g(3, 4), p, 50).unwrap();
            assert!(s.iter().all(|v| (0.0..=1.0).contains(v)));
            assert!(s.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn stable_fixed_point_just_above_threshold() {
        let g34 = g(3, 4);
        let tol = 1e-8;
        let p_a = crossing_upper_bound(g34, tol).unwrap();
        assert!(p_a < 1.0);
        let above = jfull_limit(g34, p_a).unwrap();
        assert!(above.converged && above.is_positive());
        assert!(!jfull_limit(g34, p_a - 2.0 * tol).unwrap().is_positive());
        // Central difference for f_p'(t_p).
        let (t, h) = (above.limit, 1e-6);
        let slope =
            (jfull_map(g34, p_a, t + h).unwrap() - jfull_map(g34, p_a, t - h).unwrap()) / (2.0 * h);
        assert!(slope < 1.0 && slope > 0.0, "slope {slope}");
    }

    #[test]
    fn full_row_values() {
        let g23 = g(2, 3);
        assert_eq!(full_row_prob(g23, 1.0, 4, 0).unwrap(), 1.0);
        assert_eq!(full_row_prob(g23, 0.0, 4, 0).unwrap(), 0.0);
        assert!((full_row_prob(g23, 0.5, 1, 0).unwrap() - 0.578125).abs() < 1e-15);
        let v: Vec<f64> = (1..=6)
            .map(|q| full_row_prob(g23, 0.5, q, 0).unwrap())
            .collect();
        assert!(v.windows(2).all(|w| w[1] < w[0]), "{v:?}");
        // Deep levels underflow gracefully instead of producing NaN.
        assert_eq!(full_row_prob(g23, 0.5, 40, 0).unwrap(), 0.0);
        assert!(full_row_prob(g23, 0.5, 1, 2).is_err());
    }

    #[test]
    fn tau_bounds() {
        let (h, v) = tau_lower_bound(g(2, 3));
        assert!((h - 1.0 / 144.0).abs() < 1e-15);
        assert!((v - 8f64.powf(-1.5)).abs() < 1e-15);
        for n in 2..6 {
            let mut prev = 1.0;
            for m in n + 1..12 {
                let (h, v) = tau_lower_bound(g(n, m));
                assert!(h > 0.0 && h < 1.0 && v > 0.0 && v < 1.0);
                assert!(h < prev);
                prev = h;
            }
        }
    }

    #[test]
    fn level1_two_by_two_by_hand() {
        // Any two cells in different columns of a 2x2 grid touch, so an
        // H-crossing means both columns are nonempty: 3 x 3 = 9 subsets.
        let poly = Level1Polynomial::enumerate(2, 2, Direction::H).unwrap();
        assert_eq!(poly.counts.iter().sum::<u64>(), 9);
        assert_eq!(poly.counts, vec![0, 0, 4, 4, 1]);
        for p in [0.0f64, 0.2, 0.5, 0.9, 1.0] {
            let hand = (1.0 - (1.0 - p) * (1.0 - p)).powi(2);
            assert!((poly.eval(p) - hand).abs() < 1e-14);
        }
    }

    #[test]
    fn level1_endpoints() {
        for dir in [Direction::H, Direction::V] {
            assert_eq!(exact_level1_crossing(2, 3, 1.0, dir).unwrap(), 1.0);
            assert_eq!(exact_level1_crossing(2, 3, 0.0, dir).unwrap(), 0.0);
        }
        assert!(exact_level1_crossing(5, 6, 0.5, Direction::H).is_err());
    }

    #[test]
    fn report_fields() {
        let r = analytic_report(g(2, 3), 0.3, 1e-8).unwrap();
        assert_eq!(r.p_a, None);
        assert!(r.dim_hb.is_some());
        let json = serde_json::to_value(&r).unwrap();
        for key in [
            "n",
            "m",
            "p",
            "extinction_t",
            "survival",
            "dim_hb",
            "dim_assouad",
            "jfull_limit",
            "p_A",
            "tau_h_bound",
            "tau_v_bound",
        ] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        let r = analytic_report(g(3, 4), 0.05, 1e-8).unwrap();
        assert_eq!(r.dim_hb, None);
        assert!(r.p_a.unwrap() < 1.0);
    }
}
