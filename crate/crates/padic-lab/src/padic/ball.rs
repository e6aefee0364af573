use crate::error::{invalid, Result};

use super::linalg::PadicVector;
use super::scalar::PadicContext;

/// The closed ball `B(center, p^{-k})`.
#[derive(Clone, Debug)]
pub struct Ball {
    pub center: PadicVector,
    pub k: i64,
}

impl Ball {
    pub fn new(center: PadicVector, k: i64) -> Self {
        Self { center, k }
    }

    pub fn contains(&self, x: &PadicVector) -> bool {
        x.sub(&self.center)
            .iter()
            .all(|d| d.valuation().is_none_or(|v| v >= self.k))
    }

    pub fn same_as(&self, other: &Ball) -> bool {
        self.k == other.k && self.contains(&other.center)
    }

    /// Two balls meet iff one contains the other's center and radii are compared.
    pub fn intersects(&self, other: &Ball) -> bool {
        if self.k <= other.k {
            self.contains(&other.center)
        } else {
            other.contains(&self.center)
        }
    }
}

/// Integer coordinate vectors `[0, p^k)^n` in row-major order (first coordinate slowest).
pub fn cell_representatives(p: u64, k: u32, n: usize) -> impl Iterator<Item = Vec<u64>> {
    let m = p.pow(k);
    let total = m.pow(n as u32);
    (0..total).map(move |mut idx| {
        let mut v = vec![0u64; n];
        for i in (0..n).rev() {
            v[i] = idx % m;
            idx /= m;
        }
        v
    })
}

/// The `p^{kn}` balls of radius `p^{-k}` covering `Z_p^n`, resolved at depth `ell`.
pub fn ball_partition(ctx: PadicContext, ell: u32, k: u32, n: usize) -> Result<Vec<Ball>> {
    if k > ell {
        return invalid(format!(
            "radius exponent {k} exceeds resolution depth {ell}"
        ));
    }
    let count = (ctx.p as f64).powi((k as usize * n) as i32);
    if count > (1u64 << 26) as f64 {
        return invalid(format!("partition with {count} balls is too large"));
    }
    Ok(cell_representatives(ctx.p, k, n)
        .map(|c| {
            let v: Vec<i64> = c.iter().map(|&x| x as i64).collect();
            Ball::new(PadicVector::from_ints(ctx, &v), k as i64)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_balls() {
        let c = PadicContext::new(3, 8).unwrap();
        let b = ball_partition(c, 2, 1, 1).unwrap();
        assert_eq!(b.len(), 3);
        assert!(ball_partition(c, 1, 2, 1).is_err());
        assert_eq!(ball_partition(c, 2, 2, 2).unwrap().len(), 81);
    }
}
