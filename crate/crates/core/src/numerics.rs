//! Shared numerical kernels: SVD, water-filling power allocation, channel
//! capacity, and numerical rank.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::{log2, real, Real};
use crate::CMatrix;

/// Thin singular value decomposition `H = U * diag(s) * V^H` with unitary
/// factors and singular values sorted non-increasing.
#[derive(Debug, Clone)]
pub struct SvdDecomp<T: Real> {
    pub u: CMatrix<T>,
    pub singular_values: Vec<T>,
    pub v: CMatrix<T>,
}

impl<T: Real> SvdDecomp<T> {
    /// Reconstructs `U * diag(s) * V^H`.
    pub fn reconstruct(&self) -> CMatrix<T> {
        let k = self.singular_values.len();
        let mut us = self.u.clone();
        for (j, &s) in self.singular_values.iter().enumerate().take(k) {
            let mut col = us.column_mut(j);
            col *= nalgebra::Complex::new(s, T::zero());
        }
        &us * self.v.adjoint()
    }
}

fn check_finite<T: Real>(h: &CMatrix<T>) -> Result<()> {
    if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("matrix entry".into()));
    }
    Ok(())
}

/// Thin SVD of a complex matrix with non-increasing singular values.
pub fn svd<T: Real>(h: &CMatrix<T>) -> Result<SvdDecomp<T>> {
    check_finite(h)?;
    let decomp = h.clone().svd(true, true);
    let u = decomp.u.expect("u requested");
    let v_t = decomp.v_t.expect("v_t requested");
    let singular_values = decomp.singular_values.iter().copied().collect();
    Ok(SvdDecomp {
        u,
        singular_values,
        v: v_t.adjoint(),
    })
}

/// Singular values only, non-increasing.
pub fn singular_values<T: Real>(h: &CMatrix<T>) -> Result<Vec<T>> {
    check_finite(h)?;
    let mut s: Vec<T> = h.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).expect("finite singular values"));
    Ok(s)
}

/// Water-filling power allocation across parallel sub-channels.
#[derive(Debug, Clone)]
pub struct WaterFillResult<T: Real> {
    /// Per-channel allocated power, in the order the singular values were
    /// given.
    pub allocations: Vec<T>,
    /// Water level `Gamma`.
    pub water_level: T,
    /// Number of channels with strictly positive allocation.
    pub active_count: usize,
}

/// Solves `rho_i = max(Gamma - noise / r_i^2, 0)` with
/// `sum_i rho_i = rho_total` by the exact active-set method: for each
/// candidate active count the water level is closed-form, and the unique
/// consistent count is selected.
pub fn water_fill<T: Real>(
    singular_values: &[T],
    rho_total: T,
    noise_power: T,
) -> Result<WaterFillResult<T>> {
    if !(rho_total > T::zero()) || !rho_total.is_finite() {
        return Err(Error::InvalidArgument("total power must be positive".into()));
    }
    if !(noise_power > T::zero()) || !noise_power.is_finite() {
        return Err(Error::InvalidArgument("noise power must be positive".into()));
    }
    if singular_values.iter().any(|r| !r.is_finite() || *r < T::zero()) {
        return Err(Error::NonFinite("singular value".into()));
    }
    // Channel inverse gains noise / r_i^2, ascending over positive r.
    let mut order: Vec<usize> = (0..singular_values.len())
        .filter(|&i| singular_values[i] > T::zero())
        .collect();
    if order.is_empty() {
        return Err(Error::AllZeroSingularValues);
    }
    order.sort_by(|&a, &b| {
        singular_values[b]
            .partial_cmp(&singular_values[a])
            .expect("finite")
    });
    let inv_gain: Vec<T> = order
        .iter()
        .map(|&i| noise_power / (singular_values[i] * singular_values[i]))
        .collect();

    // Largest active count m whose closed-form water level clears the m-th
    // inverse gain.
    let mut prefix = T::zero();
    let mut level = T::zero();
    let mut active = 0;
    for m in 1..=inv_gain.len() {
        prefix += inv_gain[m - 1];
        let candidate = (rho_total + prefix) / T::from_usize(m).unwrap();
        if candidate > inv_gain[m - 1] {
            level = candidate;
            active = m;
        } else {
            break;
        }
    }
    debug_assert!(active > 0, "strongest channel always active");

    let mut allocations = vec![T::zero(); singular_values.len()];
    for (slot, &i) in order.iter().enumerate().take(active) {
        allocations[i] = level - inv_gain[slot];
    }
    Ok(WaterFillResult {
        allocations,
        water_level: level,
        active_count: active,
    })
}

/// Water-filled capacity `sum_i log2(1 + rho_i r_i^2 / noise)` in bits/s/Hz.
///
/// When `stream_cap` is given, only the largest `stream_cap` singular values
/// participate. A channel with no usable singular value carries zero.
pub fn capacity_from_singular_values<T: Real>(
    singular_values: &[T],
    rho_total: T,
    noise_power: T,
    stream_cap: Option<usize>,
) -> Result<T> {
    let mut s: Vec<T> = singular_values.to_vec();
    s.sort_by(|a, b| b.partial_cmp(a).expect("finite singular values"));
    if let Some(cap) = stream_cap {
        if cap == 0 {
            return Err(Error::InvalidArgument("stream cap must be positive".into()));
        }
        s.truncate(cap);
    }
    if s.iter().all(|&r| r <= T::zero()) {
        return Ok(T::zero());
    }
    let wf = water_fill(&s, rho_total, noise_power)?;
    let mut c = T::zero();
    for (&r, &p) in s.iter().zip(wf.allocations.iter()) {
        if p > T::zero() {
            c += log2(T::one() + p * r * r / noise_power);
        }
    }
    Ok(c)
}

/// Water-filled capacity of a matrix channel.
pub fn capacity<T: Real>(
    h: &CMatrix<T>,
    rho_total: T,
    noise_power: T,
    stream_cap: Option<usize>,
) -> Result<T> {
    let s = singular_values(h)?;
    capacity_from_singular_values(&s, rho_total, noise_power, stream_cap)
}

/// Numerical rank from a sorted spectrum: the largest `r` with
/// `s[r-1] / s[r] >= gap_threshold` and `s[r-1] > 1e-12 * s[0]`; the full
/// minimum dimension when no such gap exists.
pub fn numerical_rank_from_spectrum<T: Real>(singular_values: &[T], gap_threshold: T) -> usize {
    assert!(gap_threshold > T::one(), "gap threshold must exceed 1");
    let n = singular_values.len();
    if n == 0 {
        return 0;
    }
    let floor = real::<T>(1e-12) * singular_values[0];
    for r in (1..n).rev() {
        let hi = singular_values[r - 1];
        let lo = singular_values[r];
        if hi <= floor {
            continue;
        }
        let gapped = if lo > T::zero() { hi / lo >= gap_threshold } else { hi > T::zero() };
        if gapped {
            return r;
        }
    }
    n
}

/// Numerical rank of a matrix via its singular spectrum.
pub fn numerical_rank<T: Real>(h: &CMatrix<T>, gap_threshold: T) -> Result<usize> {
    Ok(numerical_rank_from_spectrum(
        &singular_values(h)?,
        gap_threshold,
    ))
}

/// Builds a complex matrix from a closure, mirroring `DMatrix::from_fn`.
pub fn cmatrix_from_fn<T: Real>(
    rows: usize,
    cols: usize,
    f: impl FnMut(usize, usize) -> nalgebra::Complex<T>,
) -> CMatrix<T> {
    DMatrix::from_fn(rows, cols, f)
}
