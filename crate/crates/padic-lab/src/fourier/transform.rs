use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{FftDirection, FftPlanner};

use crate::error::{invalid, LabError, Result};
use crate::padic::{PadicContext, PadicVector};

use super::lattice::LatticeFunction;
use super::region::FrequencyRegion;

/// Separable DFT over `(Z/M)^n`; `Forward` uses `exp(-2 pi i k j / M)`.
fn dft_in_place(values: &mut Vec<Complex64>, n: usize, side: usize, direction: FftDirection) {
    if side == 1 {
        return;
    }
    let fft = FftPlanner::new().plan_fft(side, direction);
    let lines = values.len() / side;
    let mut scratch = vec![Complex64::new(0.0, 0.0); values.len()];
    for _ in 0..n {
        values
            .par_chunks_mut(side)
            .for_each(|line| fft.process(line));
        // rotate axes so the next one becomes contiguous
        scratch
            .par_chunks_mut(lines)
            .enumerate()
            .for_each(|(j, out)| {
                for (l, o) in out.iter_mut().enumerate() {
                    *o = values[l * side + j];
                }
            });
        std::mem::swap(values, &mut scratch);
    }
}

/// `f^(xi) = ∫ f(x) chi(-x.xi) dmu(x)`. The result has the roles of `a` and `b` swapped.
pub fn fourier_transform(f: &LatticeFunction) -> LatticeFunction {
    let mut values = f.values().to_vec();
    dft_in_place(&mut values, f.dim(), f.side(), FftDirection::Forward);
    let w = f.cell_measure();
    values.iter_mut().for_each(|z| *z *= w);
    LatticeFunction::from_values(f.prime(), f.dim(), f.b(), f.a(), values).expect("same cell count")
}

/// `g^vee(x) = ∫ g(xi) chi(x.xi) dmu(xi)`.
pub fn inverse_fourier_transform(g: &LatticeFunction) -> LatticeFunction {
    let mut values = g.values().to_vec();
    dft_in_place(&mut values, g.dim(), g.side(), FftDirection::Inverse);
    let w = g.cell_measure();
    values.iter_mut().for_each(|z| *z *= w);
    LatticeFunction::from_values(g.prime(), g.dim(), g.b(), g.a(), values).expect("same cell count")
}

/// `(sum_cells p^{-nb} |f|^q)^{1/q}`; `q = f64::INFINITY` gives the max.
pub fn lq_norm(f: &LatticeFunction, q: f64) -> Result<f64> {
    if q.is_nan() || q < 1.0 {
        return invalid(format!("L^q norm needs q >= 1, got {q}"));
    }
    if q.is_infinite() {
        return Ok(f.values().iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    let s: f64 = f.values().par_iter().map(|z| z.norm().powf(q)).sum();
    Ok((s * f.cell_measure()).powf(1.0 / q))
}

/// `(f * g)(x) = ∫ f(y) g(x - y) dmu(y)`, computed through the transform.
pub fn convolve(f: &LatticeFunction, g: &LatticeFunction) -> Result<LatticeFunction> {
    let (f, g) = f.align(g)?;
    let prod = fourier_transform(&f).mul(&fourier_transform(&g))?;
    Ok(inverse_fourier_transform(&prod))
}

/// `P_Omega f`, the function with transform `1_Omega f^`.
pub fn freq_restrict(
    f: &LatticeFunction,
    region: &FrequencyRegion,
    ctx: PadicContext,
) -> Result<LatticeFunction> {
    let mut fh = fourier_transform(f);
    let mask = region.cell_mask(ctx, &fh)?;
    for (z, keep) in fh.values_mut().iter_mut().zip(mask) {
        if !keep {
            *z = Complex64::new(0.0, 0.0);
        }
    }
    Ok(inverse_fourier_transform(&fh))
}

/// Frequency support of `f` as cell representatives of `f^` (cells of `p^a Z_p^n` inside `p^{-b} Z_p^n`).
pub fn fourier_support(f: &LatticeFunction, ctx: PadicContext, tol: f64) -> Vec<PadicVector> {
    let fh = fourier_transform(f);
    fh.support(tol)
        .into_iter()
        .map(|i| fh.point_of(ctx, &fh.unflatten(i)))
        .collect()
}

/// Direct `O(N^2)` transform used as an oracle for the fast path.
pub fn fourier_transform_direct(f: &LatticeFunction) -> LatticeFunction {
    let side = f.side() as u128;
    let table = super::lattice::roots_of_unity(f.side());
    let w = f.cell_measure();
    let mut out = vec![Complex64::new(0.0, 0.0); f.len()];
    out.par_iter_mut().enumerate().for_each(|(j, o)| {
        let jj = f.unflatten(j);
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, v) in f.values().iter().enumerate() {
            let kk = f.unflatten(k);
            let ph = kk
                .iter()
                .zip(&jj)
                .fold(0u128, |s, (&x, &y)| (s + x as u128 * y as u128) % side);
            acc += v * table[((side - ph) % side) as usize];
        }
        *o = acc * w;
    });
    LatticeFunction::from_values(f.prime(), f.dim(), f.b(), f.a(), out).expect("same cell count")
}

/// Checks that two functions agree to `tol` entrywise, as an error naming the worst cell.
pub fn assert_close(f: &LatticeFunction, g: &LatticeFunction, tol: f64) -> Result<()> {
    let d = f.sub(g)?;
    let (i, worst) = d
        .values()
        .iter()
        .enumerate()
        .map(|(i, z)| (i, z.norm()))
        .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    if worst > tol {
        return Err(LabError::Certification(format!(
            "cell {:?} differs by {worst:e}",
            d.unflatten(i)
        )));
    }
    Ok(())
}
