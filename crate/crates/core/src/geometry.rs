//! Array layouts, reference-point coordinates, inter-reference distances,
//! apertures, and the feasible set of subarray counts.
//!
//! Both terminals live on planes parallel to the x–z plane: the transmitter
//! at `y = 0`, the receiver at `y = D`. Each terminal splits its antennas
//! into `k` identical planar subarrays with half-wavelength element spacing
//! `d_a`; subarray reference points sit on a `k_x × k_z` grid with pitch
//! `d_s`, so reference point `j` is at `(x_j * d_s, origin_y, z_j * d_s)`
//! relative to the mounting point.

use crate::error::{Error, Result};
use crate::scalar::{from_usize, real, Real};

/// One terminal's subarray geometry.
///
/// Immutable after construction; all invariants are enforced by
/// [`build_layout`].
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayLayout<T: Real> {
    n_antennas: usize,
    k: usize,
    subarray_rows: usize, // N_L, x axis
    subarray_cols: usize, // N_W, z axis
    grid_x: usize,        // k_x
    grid_z: usize,        // k_z
    d_a: T,
    d_s: T,
    ref_indices: Vec<(i64, i64)>,
    origin_y: T,
}

impl<T: Real> ArrayLayout<T> {
    pub fn n_antennas(&self) -> usize {
        self.n_antennas
    }
    pub fn k(&self) -> usize {
        self.k
    }
    /// Antennas per subarray along x (`N_L`).
    pub fn subarray_rows(&self) -> usize {
        self.subarray_rows
    }
    /// Antennas per subarray along z (`N_W`).
    pub fn subarray_cols(&self) -> usize {
        self.subarray_cols
    }
    /// Antennas per subarray.
    pub fn subarray_size(&self) -> usize {
        self.subarray_rows * self.subarray_cols
    }
    /// Subarray grid extent along x (`k_x`).
    pub fn grid_x(&self) -> usize {
        self.grid_x
    }
    /// Subarray grid extent along z (`k_z`).
    pub fn grid_z(&self) -> usize {
        self.grid_z
    }
    /// Intra-subarray antenna spacing (always `lambda / 2`).
    pub fn antenna_spacing(&self) -> T {
        self.d_a
    }
    /// Subarray reference-point pitch.
    pub fn subarray_spacing(&self) -> T {
        self.d_s
    }
    /// Grid indices `(x_j, z_j)` of the subarray reference points.
    pub fn ref_indices(&self) -> &[(i64, i64)] {
        &self.ref_indices
    }
    pub fn origin_y(&self) -> T {
        self.origin_y
    }
    /// Wavelength implied by the half-wavelength element spacing.
    pub fn wavelength(&self) -> T {
        self.d_a * real(2.0)
    }

    /// Smallest subarray pitch that keeps adjacent subarrays from
    /// overlapping.
    pub fn min_spacing(&self) -> T {
        min_spacing_for(self.n_antennas, self.k, self.wavelength())
            .expect("layout already validated")
    }

    /// In-plane position `(x, z)` of reference point `j` relative to the
    /// mounting point.
    pub fn ref_position(&self, j: usize) -> Result<(T, T)> {
        let (x, z) = *self
            .ref_indices
            .get(j)
            .ok_or_else(|| Error::IndexOutOfRange(format!("reference point {j} of {}", self.k)))?;
        Ok((
            T::from_i64(x).unwrap() * self.d_s,
            T::from_i64(z).unwrap() * self.d_s,
        ))
    }

    /// In-plane position `(x, z)` of an individual antenna, identified by
    /// subarray `j` and element `(n_l, n_w)`.
    pub fn antenna_position(&self, j: usize, n_l: usize, n_w: usize) -> Result<(T, T)> {
        if n_l >= self.subarray_rows || n_w >= self.subarray_cols {
            return Err(Error::IndexOutOfRange(format!(
                "element ({n_l}, {n_w}) of {}x{} subarray",
                self.subarray_rows, self.subarray_cols
            )));
        }
        let (x, z) = self.ref_position(j)?;
        Ok((
            x + from_usize::<T>(n_l) * self.d_a,
            z + from_usize::<T>(n_w) * self.d_a,
        ))
    }

    /// Footprint extent along x and z (outermost antenna to outermost
    /// antenna).
    pub fn extent(&self) -> (T, T) {
        if self.n_antennas == 1 {
            return (T::zero(), T::zero());
        }
        let ex = from_usize::<T>(self.grid_x - 1) * self.d_s
            + from_usize::<T>(self.subarray_rows - 1) * self.d_a;
        let ez = from_usize::<T>(self.grid_z - 1) * self.d_s
            + from_usize::<T>(self.subarray_cols - 1) * self.d_a;
        (ex, ez)
    }

    /// Diagonal aperture of the full array footprint.
    pub fn aperture(&self) -> T {
        let (ex, ez) = self.extent();
        (ex * ex + ez * ez).sqrt()
    }
}

/// Feasible subarray counts for a terminal pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasibleKSet {
    values: Vec<usize>,
}

impl FeasibleKSet {
    pub fn values(&self) -> &[usize] {
        &self.values
    }
    pub fn contains(&self, k: usize) -> bool {
        self.values.binary_search(&k).is_ok()
    }
}

/// Every `k` dividing both antenna counts with `k^2 <= min(N_t, N_r)`,
/// ascending. Never empty: `k = 1` always qualifies.
pub fn feasible_k_set(n_t: usize, n_r: usize) -> FeasibleKSet {
    assert!(n_t >= 1 && n_r >= 1, "antenna counts must be positive");
    let bound = usize::min(n_t, n_r);
    let values = (1..)
        .take_while(|k| k * k <= bound)
        .filter(|k| n_t % k == 0 && n_r % k == 0)
        .collect();
    FeasibleKSet { values }
}

/// Near-square factorization `a * b = n` with `a <= b` and `b - a` minimal.
fn squarest_factors(n: usize) -> (usize, usize) {
    let mut a = (n as f64).sqrt() as usize;
    while a > 1 && n % a != 0 {
        a -= 1;
    }
    let a = a.max(1);
    (a, n / a)
}

/// Subarray grid shape `(k_x, k_z)` and per-subarray shape `(N_L, N_W)` for
/// an `n`-antenna terminal with `k` subarrays. The grid takes the
/// near-square factorization with `k_x >= k_z`; each subarray takes the
/// near-square factorization of `n / k` with `N_L <= N_W`.
pub fn layout_shape(n_antennas: usize, k: usize) -> Result<(usize, usize, usize, usize)> {
    if n_antennas == 0 || k == 0 {
        return Err(Error::InvalidLayout(
            "antenna and subarray counts must be positive".into(),
        ));
    }
    if n_antennas % k != 0 {
        return Err(Error::InvalidLayout(format!(
            "k = {k} does not divide n_antennas = {n_antennas}"
        )));
    }
    let (k_z, k_x) = squarest_factors(k);
    let (n_l, n_w) = squarest_factors(n_antennas / k);
    Ok((k_x, k_z, n_l, n_w))
}

/// Smallest subarray pitch avoiding overlap of adjacent subarrays:
/// `max(N_L, N_W) * d_a`.
pub fn min_spacing_for<T: Real>(n_antennas: usize, k: usize, lambda: T) -> Result<T> {
    let (_, _, n_l, n_w) = layout_shape(n_antennas, k)?;
    let d_a = lambda / real(2.0);
    Ok(from_usize::<T>(n_l.max(n_w)) * d_a)
}

/// Spacing interval `[d_s_min, d_s_max]` for one terminal under a cap on the
/// per-axis footprint extent. For `k = 1` the pitch is unused and the
/// degenerate interval `[d_s_min, d_s_min]` is returned.
pub fn spacing_bounds<T: Real>(
    n_antennas: usize,
    k: usize,
    lambda: T,
    aperture_cap: T,
) -> Result<(T, T)> {
    let (k_x, k_z, n_l, n_w) = layout_shape(n_antennas, k)?;
    let d_a = lambda / real(2.0);
    let lo = from_usize::<T>(n_l.max(n_w)) * d_a;
    if k == 1 {
        return Ok((lo, lo));
    }
    let mut hi = T::max_value().expect("bounded scalar");
    for (grid, sub) in [(k_x, n_l), (k_z, n_w)] {
        if grid > 1 {
            let cap = (aperture_cap - from_usize::<T>(sub - 1) * d_a) / from_usize::<T>(grid - 1);
            hi = hi.min(cap);
        }
    }
    if hi < lo {
        return Err(Error::EmptySpacingInterval {
            min: lo.to_f64().unwrap_or(f64::NAN),
            max: hi.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok((lo, hi))
}

/// Builds a terminal layout: `k` subarrays on a near-square grid, each the
/// most-square `N_L x N_W` patch of `n_antennas / k` elements at
/// half-wavelength pitch.
///
/// Rejects `k` not dividing `n_antennas` and (for `k > 1`) any `d_s` below
/// the no-overlap minimum.
pub fn build_layout<T: Real>(
    n_antennas: usize,
    k: usize,
    d_s: T,
    lambda: T,
    origin_y: T,
) -> Result<ArrayLayout<T>> {
    if !(lambda > T::zero()) {
        return Err(Error::InvalidLayout("wavelength must be positive".into()));
    }
    let (k_x, k_z, n_l, n_w) = layout_shape(n_antennas, k)?;
    let d_a = lambda / real(2.0);
    if !d_s.is_finite() || d_s < T::zero() {
        return Err(Error::InvalidLayout("d_s must be finite and nonnegative".into()));
    }
    if k > 1 {
        let min = from_usize::<T>(n_l.max(n_w)) * d_a;
        if d_s < min {
            return Err(Error::SpacingBelowMinimum {
                spacing: d_s.to_f64().unwrap_or(f64::NAN),
                minimum: min.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    // x varies fastest: j = iz * k_x + ix.
    let ref_indices = (0..k_z)
        .flat_map(|iz| (0..k_x).map(move |ix| (ix as i64, iz as i64)))
        .collect();
    Ok(ArrayLayout {
        n_antennas,
        k,
        subarray_rows: n_l,
        subarray_cols: n_w,
        grid_x: k_x,
        grid_z: k_z,
        d_a,
        d_s,
        ref_indices,
        origin_y,
    })
}

fn ref_index_pair<T: Real>(
    tx: &ArrayLayout<T>,
    rx: &ArrayLayout<T>,
    m: usize,
    n: usize,
) -> Result<((i64, i64), (i64, i64))> {
    let rm = *rx
        .ref_indices
        .get(m)
        .ok_or_else(|| Error::IndexOutOfRange(format!("receive reference point {m}")))?;
    let tn = *tx
        .ref_indices
        .get(n)
        .ok_or_else(|| Error::IndexOutOfRange(format!("transmit reference point {n}")))?;
    Ok((rm, tn))
}

/// Line-of-sight distance between receive reference point `m` and transmit
/// reference point `n` for terminals `distance` apart:
/// `sqrt((x_m d_s_r - x_n d_s_t)^2 + D^2 + (z_m d_s_r - z_n d_s_t)^2)`.
pub fn reference_distance_los<T: Real>(
    tx: &ArrayLayout<T>,
    rx: &ArrayLayout<T>,
    distance: T,
    m: usize,
    n: usize,
) -> Result<T> {
    if !(distance > T::zero()) {
        return Err(Error::InvalidGeometry("distance must be positive".into()));
    }
    let ((xm, zm), (xn, zn)) = ref_index_pair(tx, rx, m, n)?;
    let dx = T::from_i64(xm).unwrap() * rx.d_s - T::from_i64(xn).unwrap() * tx.d_s;
    let dz = T::from_i64(zm).unwrap() * rx.d_s - T::from_i64(zn).unwrap() * tx.d_s;
    Ok((dx * dx + distance * distance + dz * dz).sqrt())
}

/// Ground-reflection distance by the image-source method: the transmit
/// reference point to the ground-mirrored receive reference point, with
/// mounting heights `h_t`, `h_r` measured at each array's reference origin.
pub fn reference_distance_reflected<T: Real>(
    tx: &ArrayLayout<T>,
    rx: &ArrayLayout<T>,
    distance: T,
    h_t: T,
    h_r: T,
    m: usize,
    n: usize,
) -> Result<T> {
    if !(distance > T::zero()) {
        return Err(Error::InvalidGeometry("distance must be positive".into()));
    }
    let ((xm, zm), (xn, zn)) = ref_index_pair(tx, rx, m, n)?;
    let zt = h_t + T::from_i64(zn).unwrap() * tx.d_s;
    let zr = h_r + T::from_i64(zm).unwrap() * rx.d_s;
    if !(zt > T::zero()) || !(zr > T::zero()) {
        return Err(Error::InvalidGeometry(
            "reference point at or below ground".into(),
        ));
    }
    let dx = T::from_i64(xm).unwrap() * rx.d_s - T::from_i64(xn).unwrap() * tx.d_s;
    let dv = zt + zr;
    Ok((dx * dx + distance * distance + dv * dv).sqrt())
}

/// Diagonal aperture `S` of the layout footprint and the Rayleigh distance
/// `2 S^2 / lambda`.
pub fn aperture_and_rayleigh<T: Real>(layout: &ArrayLayout<T>, lambda: T) -> (T, T) {
    let s = layout.aperture();
    (s, rayleigh_distance(s, lambda))
}

/// Rayleigh distance `2 S^2 / lambda` of an aperture `S`.
pub fn rayleigh_distance<T: Real>(aperture: T, lambda: T) -> T {
    real::<T>(2.0) * aperture * aperture / lambda
}

/// Aperture above which spherical-wave propagation must be considered at
/// link distance `d`: `sqrt(lambda * d / 2)`.
pub fn spherical_threshold<T: Real>(lambda: T, d: T) -> T {
    (lambda * d / real(2.0)).sqrt()
}
