use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;

use crate::error::{invalid, LabError, Result};
use crate::fourier::{
    fourier_transform, inverse_fourier_transform, FrequencyRegion, LatticeFunction,
};
use crate::padic::{cell_representatives, PadicContext, PadicMatrix, PadicScalar, PadicVector};

use super::boxes::{coset_contains, AnisotropicBox, BoxVariant};

/// Relative L^2 mass a certified function may carry outside its cap.
pub const CERTIFICATION_TOLERANCE: f64 = 1e-9;

/// A cap `offset + gens Z_p^d`, optionally tagged with the interval `c + p^r Z_p` it sits over.
#[derive(Clone, Debug)]
pub struct Cap {
    offset: PadicVector,
    gens: PadicMatrix,
    gens_inv: PadicMatrix,
    interval: Option<(PadicScalar, u32)>,
}

fn min_val(m: &PadicMatrix) -> i64 {
    let mut best = i64::MAX;
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if let Some(v) = m.get(i, j).valuation() {
                best = best.min(v);
            }
        }
    }
    best
}

impl Cap {
    pub fn new(offset: PadicVector, gens: PadicMatrix) -> Result<Self> {
        if gens.rows() != offset.dim() || gens.cols() != offset.dim() {
            return Err(LabError::Dimension(format!(
                "cap offset has dimension {}, generators are {}x{}",
                offset.dim(),
                gens.rows(),
                gens.cols()
            )));
        }
        let gens_inv = gens.inverse()?;
        Ok(Self {
            offset,
            gens,
            gens_inv,
            interval: None,
        })
    }

    pub fn with_interval(mut self, center: PadicScalar, r: u32) -> Self {
        self.interval = Some((center, r));
        self
    }

    pub fn from_box(b: &AnisotropicBox) -> Result<Self> {
        let (v, m) = b.as_coset();
        let (c, r) = b.interval();
        Ok(Self::new(v, m)?.with_interval(c.clone(), r))
    }

    pub fn offset(&self) -> &PadicVector {
        &self.offset
    }

    pub fn gens(&self) -> &PadicMatrix {
        &self.gens
    }

    pub fn interval(&self) -> Option<(&PadicScalar, u32)> {
        self.interval.as_ref().map(|(c, r)| (c, *r))
    }

    pub fn dim(&self) -> usize {
        self.offset.dim()
    }

    pub fn contains(&self, x: &PadicVector) -> bool {
        self.gens_inv
            .mul_vec(&x.sub(&self.offset))
            .iter()
            .all(|e| e.is_integral())
    }

    pub fn contains_cap(&self, other: &Cap) -> bool {
        coset_contains(&self.offset, &self.gens_inv, &other.offset, &other.gens)
    }

    /// Smallest `k` with `p^k Z_p^d ⊆ gens Z_p^d`: the cap is a union of `p^k`-cells.
    pub fn depth(&self) -> i64 {
        -min_val(&self.gens_inv)
    }

    /// Smallest `e` with the cap inside `p^{-e} Z_p^d`.
    pub fn extent(&self) -> i64 {
        -min_val(&self.gens).min(self.offset.min_valuation().unwrap_or(i64::MAX))
    }

    /// `log_p` of the Haar measure, `-v(det gens)`.
    pub fn log_volume(&self) -> Result<i64> {
        let d = self.gens.det()?;
        d.valuation().map(|v| -v).ok_or(LabError::Singular {
            column: 0,
            abs_precision: 0,
        })
    }

    /// The image `A cap + shift`.
    pub fn transformed(&self, a: &PadicMatrix, shift: &PadicVector) -> Result<Self> {
        let mut c = Self::new(a.mul_vec(&self.offset).add(shift), a.mul(&self.gens))?;
        c.interval = self.interval.clone();
        Ok(c)
    }

    /// `self x other` in `Q_p^{d+e}`.
    pub fn product(&self, other: &Cap) -> Result<Self> {
        let ctx = self.offset.context();
        let (d, e) = (self.dim(), other.dim());
        let mut entries = self.offset.entries().to_vec();
        entries.extend_from_slice(other.offset.entries());
        let gens = PadicMatrix::from_fn(ctx, d + e, d + e, |i, j| {
            if i < d && j < d {
                self.gens.get(i, j).clone()
            } else if i >= d && j >= d {
                other.gens.get(i - d, j - d).clone()
            } else {
                ctx.zero()
            }
        });
        Self::new(PadicVector::new(ctx, entries), gens)
    }

    pub fn region(&self) -> Result<FrequencyRegion> {
        FrequencyRegion::coset(self.offset.clone(), &self.gens)
    }
}

type MaskCache = Mutex<HashMap<(u32, u32), Arc<Vec<Vec<bool>>>>>;

/// A finite family of caps in `Q_p^d`.
#[derive(Debug)]
pub struct CapSystem {
    ctx: PadicContext,
    dim: usize,
    caps: Vec<Cap>,
    label: String,
    masks: MaskCache,
}

impl Clone for CapSystem {
    fn clone(&self) -> Self {
        Self {
            ctx: self.ctx,
            dim: self.dim,
            caps: self.caps.clone(),
            label: self.label.clone(),
            masks: Mutex::new(self.masks.lock().expect("mask cache").clone()),
        }
    }
}

impl CapSystem {
    pub fn new(ctx: PadicContext, caps: Vec<Cap>, label: impl Into<String>) -> Result<Self> {
        let Some(first) = caps.first() else {
            return invalid("a cap system needs at least one cap");
        };
        let dim = first.dim();
        if caps.iter().any(|c| c.dim() != dim) {
            return Err(LabError::Dimension("caps of different dimensions".into()));
        }
        if caps.iter().any(|c| c.offset.context() != ctx) {
            return Err(LabError::PrimeMismatch(ctx.p, first.offset.context().p));
        }
        Ok(Self {
            ctx,
            dim,
            caps,
            label: label.into(),
            masks: Mutex::new(HashMap::new()),
        })
    }

    /// The cosets of `M Z_p^d` in `Z_p^d`, for an integral invertible `M`.
    pub fn lattice_partition(ctx: PadicContext, m: &PadicMatrix) -> Result<Self> {
        let d = m.rows();
        let probe = Cap::new(PadicVector::zeros(ctx, d), m.clone())?;
        if probe.extent() > 0 {
            return invalid("partition lattice must be integral");
        }
        let depth = probe.depth().max(0) as u32;
        let index = ctx.p.pow(probe.log_volume()?.unsigned_abs() as u32);
        let mut caps: Vec<Cap> = Vec::new();
        for k in cell_representatives(ctx.p, depth, d) {
            let x = PadicVector::new(ctx, k.iter().map(|&c| ctx.int(c as i64)).collect());
            if caps.iter().any(|c| c.contains(&x)) {
                continue;
            }
            caps.push(Cap::new(x, m.clone())?);
            if caps.len() as u64 == index {
                break;
            }
        }
        Self::new(ctx, caps, format!("cosets of an index-{index} lattice"))
    }

    /// `theta_tau = {(x, y) : x ∈ tau, |y - x^2| <= delta^2}` over the balls `tau` of radius
    /// `delta = p^{-l}` in `Z_p`, written as `(c, c^2) + [[p^l, 0], [2c p^l, p^{2l}]] Z_p^2`.
    pub fn parabola(ctx: PadicContext, l: u32) -> Result<Self> {
        let d = ctx.p_power(l as i64);
        let d2 = ctx.p_power(2 * l as i64);
        let caps = (0..ctx.p.pow(l) as i64)
            .map(|c| {
                let cc = ctx.int(c);
                let offset = PadicVector::new(ctx, vec![cc.clone(), &cc * &cc]);
                let gens = PadicMatrix::from_fn(ctx, 2, 2, |i, j| match (i, j) {
                    (0, 0) => d.clone(),
                    (1, 0) => &ctx.int(2 * c) * &d,
                    (1, 1) => d2.clone(),
                    _ => ctx.zero(),
                });
                Cap::new(offset, gens).map(|cap| cap.with_interval(cc, l))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(ctx, caps, format!("parabola caps at delta = p^-{l}"))
    }

    /// `{U_I : I ∈ P(Z_p, p^{-r})}` for the moment curve, anchored at the integer centers.
    pub fn moment_boxes(ctx: PadicContext, n: usize, r: u32) -> Result<Self> {
        Self::moment_boxes_in(ctx, n, r, 0, 0)
    }

    /// The boxes `U_I` for the intervals `I` of radius `p^{-r}` inside `parent + p^{parent_r} Z_p`.
    pub fn moment_boxes_in(
        ctx: PadicContext,
        n: usize,
        r: u32,
        parent: i64,
        parent_r: u32,
    ) -> Result<Self> {
        if parent_r > r {
            return invalid(format!("parent radius p^-{parent_r} is finer than p^-{r}"));
        }
        let base = parent.rem_euclid(ctx.p.pow(parent_r) as i64);
        let step = ctx.p.pow(parent_r) as i64;
        let caps = (0..ctx.p.pow(r - parent_r) as i64)
            .map(|i| {
                let c = base + step * i;
                Cap::from_box(&AnisotropicBox::moment(
                    ctx,
                    n,
                    c,
                    r,
                    c,
                    BoxVariant::Standard,
                )?)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(
            ctx,
            caps,
            format!("moment boxes at radius p^-{r} in {parent} + p^{parent_r} Z_p"),
        )
    }

    pub fn context(&self) -> PadicContext {
        self.ctx
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn caps(&self) -> &[Cap] {
        &self.caps
    }

    pub fn len(&self) -> usize {
        self.caps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.caps.is_empty()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn depth(&self) -> i64 {
        self.caps.iter().map(Cap::depth).max().unwrap_or(0)
    }

    pub fn extent(&self) -> i64 {
        self.caps.iter().map(Cap::extent).max().unwrap_or(0)
    }

    /// The smallest spatial grid `(a, b)` on which every cap is resolved: frequencies then
    /// live in `p^{-b} Z_p^d` on `p^a`-cells.
    pub fn grid(&self) -> (u32, u32) {
        (self.depth().max(0) as u32, self.extent().max(0) as u32)
    }

    pub fn transformed(&self, a: &PadicMatrix, shift: &PadicVector) -> Result<Self> {
        let caps = self
            .caps
            .iter()
            .map(|c| c.transformed(a, shift))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.ctx, caps, format!("affine image of {}", self.label))
    }

    /// All products `theta x tau`, ordered with `theta` slowest.
    pub fn product(&self, other: &CapSystem) -> Result<Self> {
        let mut caps = Vec::with_capacity(self.len() * other.len());
        for c in &self.caps {
            for d in &other.caps {
                caps.push(c.product(d)?);
            }
        }
        Self::new(
            self.ctx,
            caps,
            format!("({}) x ({})", self.label, other.label),
        )
    }

    /// Per-cap membership of the frequency cells for spatial grid `(a, b)`. Cached.
    pub fn cell_masks(&self, a: u32, b: u32) -> Result<Arc<Vec<Vec<bool>>>> {
        if let Some(m) = self.masks.lock().expect("mask cache").get(&(a, b)) {
            return Ok(m.clone());
        }
        let (need_a, need_b) = self.grid();
        if need_a > a || need_b > b {
            return invalid(format!(
                "caps need a spatial grid of at least (a, b) = ({need_a}, {need_b}), got ({a}, {b})"
            ));
        }
        let freq = LatticeFunction::zeros(self.ctx.p, self.dim, b, a)?;
        let points: Vec<PadicVector> = (0..freq.len())
            .map(|i| freq.point_of(self.ctx, &freq.unflatten(i)))
            .collect();
        let masks: Vec<Vec<bool>> = self
            .caps
            .iter()
            .map(|c| points.iter().map(|x| c.contains(x)).collect())
            .collect();
        let masks = Arc::new(masks);
        self.masks
            .lock()
            .expect("mask cache")
            .insert((a, b), masks.clone());
        Ok(masks)
    }

    /// True when no frequency cell of grid `(a, b)` lies in two caps.
    pub fn pairwise_disjoint(&self, a: u32, b: u32) -> Result<bool> {
        let masks = self.cell_masks(a, b)?;
        let cells = masks.first().map_or(0, Vec::len);
        Ok((0..cells).all(|i| masks.iter().filter(|m| m[i]).count() <= 1))
    }

    /// Number of frequency cells of grid `(a, b)` covered by some cap.
    pub fn covered_cells(&self, a: u32, b: u32) -> Result<usize> {
        let masks = self.cell_masks(a, b)?;
        let cells = masks.first().map_or(0, Vec::len);
        Ok((0..cells).filter(|&i| masks.iter().any(|m| m[i])).count())
    }
}

/// A family `{f_theta}` whose transforms are certified to live in their caps, with the exponents
/// `(q, r)` of the `l^q L^r` inequality.
#[derive(Clone, Debug)]
pub struct FunctionTuple {
    caps: CapSystem,
    functions: Vec<LatticeFunction>,
    q: f64,
    r: f64,
}

impl FunctionTuple {
    /// Certifies each `f_theta` (mass of the transform outside the cap at most `1e-9` of its
    /// total, in `L^2`) before accepting the tuple.
    pub fn new(caps: CapSystem, functions: Vec<LatticeFunction>, q: f64, r: f64) -> Result<Self> {
        if functions.len() != caps.len() {
            return Err(LabError::Dimension(format!(
                "{} functions for {} caps",
                functions.len(),
                caps.len()
            )));
        }
        if !(q >= 1.0) || !(r >= 1.0) {
            return invalid(format!(
                "exponents must be at least 1, got q = {q}, r = {r}"
            ));
        }
        let (a, b) = (functions[0].a(), functions[0].b());
        for f in &functions {
            if f.a() != a || f.b() != b || f.dim() != caps.dim() || f.prime() != caps.context().p {
                return invalid("tuple functions must share prime, dimension and grid");
            }
        }
        let masks = caps.cell_masks(a, b)?;
        for (i, f) in functions.iter().enumerate() {
            let fh = fourier_transform(f);
            let (mut inside, mut outside) = (0.0, 0.0);
            for (z, &keep) in fh.values().iter().zip(&masks[i]) {
                if keep {
                    inside += z.norm_sqr();
                } else {
                    outside += z.norm_sqr();
                }
            }
            let total = inside + outside;
            if total > 0.0 && outside > CERTIFICATION_TOLERANCE * total {
                return Err(LabError::Certification(format!(
                    "function {i}: {:.3e} of its Fourier mass lies outside its cap",
                    outside / total
                )));
            }
        }
        Ok(Self {
            caps,
            functions,
            q,
            r,
        })
    }

    /// Builds the tuple from spectra `f^_theta` given on the frequency grid `(b, a)`.
    pub fn from_spectra(
        caps: CapSystem,
        spectra: &[LatticeFunction],
        q: f64,
        r: f64,
    ) -> Result<Self> {
        let functions = spectra.iter().map(inverse_fourier_transform).collect();
        Self::new(caps, functions, q, r)
    }

    pub fn caps(&self) -> &CapSystem {
        &self.caps
    }

    pub fn functions(&self) -> &[LatticeFunction] {
        &self.functions
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    /// Spatial grid `(a, b)` shared by the functions.
    pub fn grid(&self) -> (u32, u32) {
        (self.functions[0].a(), self.functions[0].b())
    }

    pub fn with_exponents(&self, q: f64, r: f64) -> Result<Self> {
        if !(q >= 1.0) || !(r >= 1.0) {
            return invalid(format!(
                "exponents must be at least 1, got q = {q}, r = {r}"
            ));
        }
        Ok(Self {
            caps: self.caps.clone(),
            functions: self.functions.clone(),
            q,
            r,
        })
    }

    pub fn sum(&self) -> LatticeFunction {
        let mut acc = self.functions[0].clone();
        for f in &self.functions[1..] {
            for (x, y) in acc.values_mut().iter_mut().zip(f.values()) {
                *x += y;
            }
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.functions
            .iter()
            .all(|f| f.values().iter().all(|z| *z == Complex64::new(0.0, 0.0)))
    }
}
