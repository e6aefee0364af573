use crate::error::{invalid, LabError, Result};
use crate::padic::{PadicMatrix, PadicScalar};

fn check_traceless(w: &PadicMatrix) -> Result<()> {
    if w.rows() != 2 || w.cols() != 2 {
        return invalid("w must be a 2x2 matrix");
    }
    let tr = w.get(0, 0) + w.get(1, 1);
    if !tr.is_zero() {
        return invalid("w must be traceless");
    }
    Ok(())
}

/// `xi_r(w) = w12 - 2 r w11 - w21 r^2` for traceless `w`.
pub fn xi_map(w: &PadicMatrix, r: &PadicScalar) -> Result<PadicScalar> {
    check_traceless(w)?;
    let two = w.context().int(2);
    Ok(w.get(0, 1) - two * r * w.get(0, 0) - w.get(1, 0) * r * r)
}

/// The `(1,2)` entry of `u_r w u_r^{-1}` with `u_r = [[1, r], [0, 1]]`.
pub fn adjoint_entry(w: &PadicMatrix, r: &PadicScalar) -> Result<PadicScalar> {
    check_traceless(w)?;
    let ctx = w.context();
    let mut u = PadicMatrix::identity(ctx, 2);
    u.set(0, 1, r.clone());
    let conj = u.mul(w).mul(&u.inverse()?);
    Ok(conj.get(0, 1).clone())
}

/// Checks that the adjoint entry equals the closed form exactly.
pub fn ad_check(w: &PadicMatrix, r: &PadicScalar) -> Result<PadicScalar> {
    let xi = xi_map(w, r)?;
    let ad = adjoint_entry(w, r)?;
    if !xi.eq_padic(&ad) {
        return Err(LabError::Certification(format!(
            "adjoint entry {ad} differs from xi_r(w) = {xi}"
        )));
    }
    Ok(xi)
}
