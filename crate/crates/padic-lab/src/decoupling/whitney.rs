use std::collections::HashSet;

use crate::error::{invalid, Result};

/// `(x + p^j Z_p) x (y + p^j Z_p)` with `x, y < p^j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct WhitneySquare {
    pub level: u32,
    pub x: u64,
    pub y: u64,
}

impl WhitneySquare {
    /// Whether the depth-`depth` cell `(x, y)` lies in this square.
    pub fn contains_cell(&self, depth: u32, x: u64, y: u64, p: u64) -> bool {
        debug_assert!(depth >= self.level);
        let m = p.pow(self.level);
        x % m == self.x && y % m == self.y
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WhitneyFamily {
    pub level: u32,
    pub squares: Vec<WhitneySquare>,
}

/// The count the decomposition is usually quoted with, `p^j (p^j - 1)`.
pub fn whitney_count_literal(p: u64, j: u32) -> u64 {
    let q = p.pow(j);
    q * (q - 1)
}

/// Squares at level `j` pair a `p^{-j}`-ball with the `p - 1` siblings inside the same
/// `p^{-(j-1)}`-ball, so there are `p^j (p - 1)` of them.
pub fn whitney_count(p: u64, j: u32) -> u64 {
    p.pow(j) * (p - 1)
}

/// Whitney families of `Z_p^2` minus the diagonal down to depth `depth`: level `j` holds the
/// squares `I x J` of side `p^{-j}` with `I != J` in the same parent ball.
pub fn whitney_decomposition(p: u64, depth: u32) -> Result<Vec<WhitneyFamily>> {
    if depth == 0 {
        return invalid("Whitney decomposition needs depth >= 1");
    }
    if p.checked_pow(2 * depth).is_none_or(|c| c > 1 << 26) {
        return invalid(format!(
            "depth {depth} at p = {p} is too large to enumerate"
        ));
    }
    let mut out = Vec::with_capacity(depth as usize);
    for j in 1..=depth {
        let m = p.pow(j);
        let parent = m / p;
        let mut squares = Vec::new();
        for x in 0..m {
            for y in 0..m {
                if x != y && x % parent == y % parent {
                    squares.push(WhitneySquare { level: j, x, y });
                }
            }
        }
        out.push(WhitneyFamily { level: j, squares });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct WhitneyReport {
    pub p: u64,
    pub depth: u32,
    /// `(j, observed, p^j (p^j - 1), p^j (p - 1))`.
    pub counts: Vec<(u32, u64, u64, u64)>,
    /// Off-diagonal cells in exactly one square, diagonal cells in none.
    pub partition_exact: bool,
    pub cells_checked: u64,
}

impl WhitneyReport {
    pub fn literal_counts_hold(&self) -> bool {
        self.counts.iter().all(|&(_, seen, lit, _)| seen == lit)
    }

    pub fn corrected_counts_hold(&self) -> bool {
        self.counts.iter().all(|&(_, seen, _, fixed)| seen == fixed)
    }
}

/// Builds the families and checks the counts and the partition on every depth-`depth` cell.
pub fn whitney_check(p: u64, depth: u32) -> Result<WhitneyReport> {
    let families = whitney_decomposition(p, depth)?;
    let counts = families
        .iter()
        .map(|f| {
            (
                f.level,
                f.squares.len() as u64,
                whitney_count_literal(p, f.level),
                whitney_count(p, f.level),
            )
        })
        .collect();
    let sets: Vec<HashSet<(u64, u64)>> = families
        .iter()
        .map(|f| f.squares.iter().map(|s| (s.x, s.y)).collect())
        .collect();
    let side = p.pow(depth);
    let mut exact = true;
    for x in 0..side {
        for y in 0..side {
            let mut hits = 0;
            for (f, set) in families.iter().zip(&sets) {
                let m = p.pow(f.level);
                if set.contains(&(x % m, y % m)) {
                    hits += 1;
                }
            }
            exact &= if x == y { hits == 0 } else { hits == 1 };
        }
    }
    Ok(WhitneyReport {
        p,
        depth,
        counts,
        partition_exact: exact,
        cells_checked: side * side,
    })
}
