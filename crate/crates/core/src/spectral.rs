//! PBC and OBC spectra, point-gap winding, the generalized Brillouin zone and
//! the non-Bloch winding number.

use std::io::Write;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::io::{fmt_real, push_complex, write_rows};
use crate::linalg::{self, Eigen};
use crate::model::{build_bloch, BathParams, SystemMatrix};
use crate::scalar::{cplx, re, Real, C};

/// Eigenvalues with right and left eigenvectors (columns), sorted by
/// `(Re, Im)` and biorthonormalized: `left^H right = I`.
#[derive(Debug, Clone)]
pub struct ComplexSpectrum<T: Real> {
    pub eigenvalues: Vec<C<T>>,
    pub right_vectors: Array2<C<T>>,
    pub left_vectors: Array2<C<T>>,
    /// Condition number of the right eigenvector matrix.
    pub condition: T,
}

impl<T: Real> From<Eigen<T>> for ComplexSpectrum<T> {
    fn from(e: Eigen<T>) -> Self {
        Self {
            eigenvalues: e.values,
            right_vectors: e.right,
            left_vectors: e.left,
            condition: e.condition,
        }
    }
}

impl<T: Real> ComplexSpectrum<T> {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Largest entry of `|L^H R - I|`.
    pub fn biorthogonality_error(&self) -> T {
        let g = linalg::adjoint(&self.left_vectors.view()).dot(&self.right_vectors);
        let mut worst = T::zero();
        for ((i, j), z) in g.indexed_iter() {
            let t = if i == j { re(T::one()) } else { re(T::zero()) };
            worst = worst.max((*z - t).norm());
        }
        worst
    }
}

/// Dense eigen-decomposition of a system matrix.
pub fn obc_spectrum<T: Real>(matrix: &SystemMatrix<T>) -> Result<ComplexSpectrum<T>> {
    Ok(linalg::eig(&matrix.entries.view())?.into())
}

/// The two Bloch eigenvalues `-i kappa/2 -+ sqrt(h12 h21)` (principal root).
pub fn bloch_eigenvalues<T: Real>(params: &BathParams<T>, k: T) -> [C<T>; 2] {
    let h = build_bloch(params, k);
    let s = (h[0][1] * h[1][0]).sqrt();
    [h[0][0] - s, h[0][0] + s]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PbcPoint<T> {
    pub k: T,
    pub bands: [C<T>; 2],
}

/// Bloch eigenvalues on the grid `k_m = -pi + 2 pi m / nk`, `m = 0..nk`.
pub fn pbc_spectrum<T: Real>(params: &BathParams<T>, nk: usize) -> Result<Vec<PbcPoint<T>>> {
    if nk < 4 {
        return Err(Error::InvalidParams(format!("nk must be >= 4, got {nk}")));
    }
    Ok(k_grid::<T>(nk)
        .map(|k| PbcPoint {
            k,
            bands: bloch_eigenvalues(params, k),
        })
        .collect())
}

fn k_grid<T: Real>(nk: usize) -> impl Iterator<Item = T> {
    let step = T::TAU() / T::from_usize_lossy(nk);
    (0..nk).map(move |m| -T::PI() + step * T::from_usize_lossy(m))
}

/// `det(H_k - E)`.
fn bloch_det<T: Real>(params: &BathParams<T>, k: T, e: C<T>) -> C<T> {
    let h = build_bloch(params, k);
    let d = h[0][0] - e;
    d * d - h[0][1] * h[1][0]
}

/// Distance from `e` to the PBC spectrum (both bands), located on a grid and
/// refined by golden-section search around the closest sample.
pub fn distance_to_pbc_spectrum<T: Real>(params: &BathParams<T>, e: C<T>) -> T {
    let nk = 2048;
    let step = T::TAU() / T::from_usize_lossy(nk);
    let dist = |k: T| {
        let [lo, hi] = bloch_eigenvalues(params, k);
        (lo - e).norm().min((hi - e).norm())
    };
    let mut best = T::infinity();
    let mut best_k = T::zero();
    for k in k_grid::<T>(nk) {
        let d = dist(k);
        if d < best {
            best = d;
            best_k = k;
        }
    }
    // the band labels can swap at a branch cut of the principal sqrt, but the
    // band pair is continuous, so the min over both stays unimodal locally
    let gr = T::lit(0.618_033_988_749_894_8);
    let (mut a, mut b) = (best_k - step, best_k + step);
    for _ in 0..80 {
        let c = b - gr * (b - a);
        let d = a + gr * (b - a);
        if dist(c) < dist(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best.min(dist((a + b) * T::lit(0.5)))
}

/// Accumulated phase of `f` along a closed parameter loop `t in [0, 1)`,
/// divided by `2 pi`. Trapezoid sampling starts at 2048 points and doubles
/// until two successive grids agree to `1e-6`.
pub(crate) fn loop_winding<T: Real, F: Fn(T) -> C<T>>(f: F) -> T {
    loop_winding_from(2048, f)
}

pub(crate) fn loop_winding_from<T: Real, F: Fn(T) -> C<T>>(n0: usize, f: F) -> T {
    let tol = T::lit(1e-6);
    let mut n = n0;
    let mut prev: Option<T> = None;
    loop {
        let mut total = T::zero();
        let first = f(T::zero());
        let mut last = first;
        for i in 1..=n {
            let cur = if i == n {
                first
            } else {
                f(T::from_usize_lossy(i) / T::from_usize_lossy(n))
            };
            total += (cur / last).arg();
            last = cur;
        }
        let w = total / T::TAU();
        if let Some(p) = prev {
            if (w - p).abs() < tol || n >= 1 << 20 {
                return w;
            }
        }
        prev = Some(w);
        n *= 2;
    }
}

fn round_winding<T: Real>(raw: T) -> i32 {
    raw.round().to_i32().unwrap_or(0)
}

/// Unrounded winding of `det(H_k - E)` around zero for `k` in `[0, 2 pi)`.
pub fn point_gap_winding_raw<T: Real>(params: &BathParams<T>, e: C<T>) -> Result<T> {
    let d = distance_to_pbc_spectrum(params, e);
    if d < T::lit(1e-6) {
        return Err(Error::OnSpectrum {
            distance: d.to_f64_lossy(),
        });
    }
    Ok(loop_winding(|t| bloch_det(params, T::TAU() * t, e)))
}

/// Winding number of `det(H_k - E)` as `k` traverses the Brillouin zone.
///
/// `nk` is the minimum number of quadrature points; the loop is refined until
/// the accumulated phase is stable.
pub fn point_gap_winding<T: Real>(params: &BathParams<T>, e: C<T>, nk: usize) -> Result<i32> {
    let d = distance_to_pbc_spectrum(params, e);
    if d < T::lit(1e-6) {
        return Err(Error::OnSpectrum {
            distance: d.to_f64_lossy(),
        });
    }
    let fine = loop_winding_from(nk.max(4), |t| bloch_det(params, T::TAU() * t, e));
    Ok(round_winding(fine))
}

/// `|J2^2 - (E + i kappa/2)^2| < |kappa J2|`: interior of the point-gap loop
/// at `J1 = kappa/2`.
pub fn inside_point_gap<T: Real>(params: &BathParams<T>, e: C<T>) -> bool {
    let w = e + cplx(T::zero(), params.half_kappa());
    let j2 = params.j2;
    (re(j2 * j2) - w * w).norm() < (params.kappa * j2).abs()
}

fn degenerate_gbz<T: Real>(params: &BathParams<T>) -> bool {
    if params.kappa == T::zero() {
        return false;
    }
    let scale = params.j1.abs() + params.half_kappa();
    let tol = T::lit(1e-12) * scale;
    params.hop_ab().abs() <= tol || params.hop_ba().abs() <= tol
}

/// Skin-localization radius `r = sqrt(|(J1 + kappa/2)/(J1 - kappa/2)|)`.
pub fn gbz_radius<T: Real>(params: &BathParams<T>) -> Result<T> {
    if params.kappa == T::zero() {
        return Ok(T::one());
    }
    if degenerate_gbz(params) {
        return Err(Error::DegenerateGbz);
    }
    Ok((params.hop_ba() / params.hop_ab()).abs().sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbzData<T> {
    /// Smaller-modulus solution (ties broken by argument).
    pub beta1: C<T>,
    pub beta2: C<T>,
    pub radius: T,
    /// Non-Bloch winding, `None` when the parameters sit on a transition.
    pub winding: Option<i32>,
}

/// Both solutions `beta` of `det(H(beta) - E) = 0`, where `e^{ik} -> beta`:
/// `(J1 - kappa/2) J2 beta^2 + ((J1^2 - kappa^2/4) + J2^2 - (E + i kappa/2)^2) beta
///  + (J1 + kappa/2) J2 = 0`.
pub fn gbz_data<T: Real>(params: &BathParams<T>, e: C<T>) -> Result<GbzData<T>> {
    if degenerate_gbz(params) || params.j2 == T::zero() {
        return Err(Error::DegenerateGbz);
    }
    let radius = gbz_radius(params)?;
    let a = params.hop_ab();
    let b = params.hop_ba();
    let j2 = params.j2;
    let w = e + cplx(T::zero(), params.half_kappa());
    let qa = re(a * j2);
    let qb = re(a * b + j2 * j2) - w * w;
    let qc = re(b * j2);
    let disc = (qb * qb - qa * qc * T::lit(4.0)).sqrt();
    // pick the numerically stable pair
    let q = if (qb.conj() * disc).re >= T::zero() {
        -(qb + disc) * T::lit(0.5)
    } else {
        -(qb - disc) * T::lit(0.5)
    };
    let (mut b1, mut b2) = if q.norm() == T::zero() {
        (re(T::zero()), -qb / qa)
    } else {
        (q / qa, qc / q)
    };
    let key = |z: C<T>| (z.norm(), z.arg());
    if key(b2) < key(b1) {
        std::mem::swap(&mut b1, &mut b2);
    }
    Ok(GbzData {
        beta1: b1,
        beta2: b2,
        radius,
        winding: non_bloch_winding(params).ok(),
    })
}

/// `(-t, t)` with `t = sqrt(J2^2 + kappa^2/4)`.
pub fn transition_points<T: Real>(params: &BathParams<T>) -> (T, T) {
    let t = (params.j2 * params.j2 + params.half_kappa() * params.half_kappa()).sqrt();
    (-t, t)
}

/// Additional gap closings `|J1| = sqrt(kappa^2/4 - J2^2)`, present only
/// when `kappa/2 > |J2|`.
pub fn secondary_transition_points<T: Real>(params: &BathParams<T>) -> Option<(T, T)> {
    let d = params.half_kappa() * params.half_kappa() - params.j2 * params.j2;
    (d > T::zero()).then(|| (-d.sqrt(), d.sqrt()))
}

/// Closed-form phase criterion: nontrivial iff `|J1| < sqrt(J2^2 + kappa^2/4)`.
pub fn nontrivial_closed_form<T: Real>(params: &BathParams<T>) -> bool {
    params.j1.abs() < transition_points(params).1
}

/// Smallest distance of `|J1|` to any gap-closing point.
pub fn transition_distance<T: Real>(params: &BathParams<T>) -> T {
    let j1 = params.j1.abs();
    let mut d = (j1 - transition_points(params).1).abs();
    if let Some((_, s)) = secondary_transition_points(params) {
        d = d.min((j1 - s).abs());
    }
    d
}

/// Unrounded non-Bloch winding: `W = -(1/2 pi) oint d arg q` on `|beta| = r`
/// with `d ln q = (1/2) d ln(R/L)`, `R = J1 - kappa/2 + J2/beta`,
/// `L = J1 + kappa/2 + J2 beta`.
pub fn non_bloch_winding_raw<T: Real>(params: &BathParams<T>) -> Result<T> {
    let d = transition_distance(params);
    if d < T::lit(1e-6) {
        return Err(Error::AtTransition {
            distance: d.to_f64_lossy(),
        });
    }
    let r = gbz_radius(params)?;
    let (a, b, j2) = (params.hop_ab(), params.hop_ba(), params.j2);
    let beta = |t: T| C::from_polar(r, T::TAU() * t);
    let wr = loop_winding(|t| re(a) + re(j2) / beta(t));
    let wl = loop_winding(|t| re(b) + beta(t) * j2);
    Ok(-(wr - wl) * T::lit(0.5))
}

pub fn non_bloch_winding<T: Real>(params: &BathParams<T>) -> Result<i32> {
    non_bloch_winding_raw(params).map(round_winding)
}

/// `min_k |E_+(k) - E_-(k)|` on an `nk`-point grid containing `k = pi`.
///
/// Uses `|E_+ - E_-| = 2 sqrt(|h12| |h21|)` with the moduli written through
/// `cos k` only, so an exact band touching evaluates to zero.
pub fn min_band_separation<T: Real>(params: &BathParams<T>, nk: usize) -> T {
    let (a, b, j2) = (params.hop_ab(), params.hop_ba(), params.j2);
    let two = T::lit(2.0);
    k_grid::<T>(nk.max(4))
        .map(|k| {
            let c = k.cos();
            let h12 = (a * a + j2 * j2 + two * a * j2 * c).max(T::zero());
            let h21 = (b * b + j2 * j2 + two * b * j2 * c).max(T::zero());
            two * (h12 * h21).sqrt().sqrt()
        })
        .fold(T::infinity(), T::min)
}

/// `index, re, im` rows.
pub fn write_spectrum_csv<T: Real, W: Write>(out: W, values: &[C<T>]) -> Result<()> {
    write_rows(
        out,
        &["index", "re", "im"],
        values.iter().enumerate().map(|(i, z)| {
            let mut row = vec![i.to_string()];
            push_complex(&mut row, *z);
            row
        }),
    )
}

/// `k, band, re, im` rows.
pub fn write_pbc_csv<T: Real, W: Write>(out: W, points: &[PbcPoint<T>]) -> Result<()> {
    write_rows(
        out,
        &["k", "band", "re", "im"],
        points.iter().flat_map(|p| {
            (0..2).map(move |band| {
                let mut row = vec![fmt_real(p.k), band.to_string()];
                push_complex(&mut row, p.bands[band]);
                row
            })
        }),
    )
}

/// Eigenvector file: `mode, site, re, im` for each right eigenvector.
pub fn write_eigenvectors_csv<T: Real, W: Write>(out: W, spec: &ComplexSpectrum<T>) -> Result<()> {
    let v = &spec.right_vectors;
    write_rows(
        out,
        &["mode", "site", "re", "im"],
        (0..v.ncols()).flat_map(|m| {
            (0..v.nrows()).map(move |s| {
                let mut row = vec![m.to_string(), s.to_string()];
                push_complex(&mut row, v[[s, m]]);
                row
            })
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_bath, Boundary};
    use approx::assert_abs_diff_eq;

    fn bath(j1: f64, j2: f64, kappa: f64, cells: usize, boundary: Boundary) -> BathParams<f64> {
        BathParams::new(j1, j2, kappa, cells, boundary).unwrap()
    }

    #[test]
    fn bloch_eigenvalues_match_characteristic_polynomial() {
        let p = bath(2.5, 1.0, 1.2, 10, Boundary::Periodic);
        for &k in &[-3.1, -0.5, 0.0, 1.0, 2.2] {
            let ev = bloch_eigenvalues(&p, k);
            for e in ev {
                assert!(bloch_det(&p, k, e).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn pbc_grid_and_hermitian_limit() {
        assert!(pbc_spectrum(&bath(1.0, 1.0, 0.0, 4, Boundary::Periodic), 3).is_err());
        let pts = pbc_spectrum(&bath(1.3, 1.0, 0.0, 4, Boundary::Periodic), 64).unwrap();
        assert_eq!(pts.len(), 64);
        assert_abs_diff_eq!(pts[0].k, -std::f64::consts::PI);
        for p in &pts {
            for e in p.bands {
                assert!(e.im.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn line_gap_for_large_j1() {
        // bands separated along Re E
        let pts = pbc_spectrum(&bath(2.5, 1.0, 1.2, 4, Boundary::Periodic), 256).unwrap();
        let lower = pts.iter().map(|p| p.bands[0].re).fold(f64::MIN, f64::max);
        let upper = pts.iter().map(|p| p.bands[1].re).fold(f64::MAX, f64::min);
        assert!(lower < 0.0 && upper > 0.0);
        assert!(upper - lower > 1.0);
    }

    #[test]
    fn gbz_radius_values() {
        let r = gbz_radius(&bath(1.6, 1.0, 1.2, 4, Boundary::Open)).unwrap();
        assert_abs_diff_eq!(r, 2.2f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(r, 1.48324, epsilon = 1e-5);
        let r = gbz_radius(&bath(1.2, 1.0, 0.4, 4, Boundary::Open)).unwrap();
        assert_abs_diff_eq!(r, 1.18322, epsilon = 1e-5);
        assert_eq!(gbz_radius(&bath(0.3, 1.0, 0.0, 4, Boundary::Open)).unwrap(), 1.0);
        assert_eq!(
            gbz_radius(&bath(0.6, 1.0, 1.2, 4, Boundary::Open)),
            Err(Error::DegenerateGbz)
        );
        assert_eq!(
            gbz_radius(&bath(-0.6, 1.0, 1.2, 4, Boundary::Open)),
            Err(Error::DegenerateGbz)
        );
    }

    #[test]
    fn gbz_product_identity() {
        let p = bath(1.6, 1.0, 1.2, 4, Boundary::Open);
        let g = gbz_data(&p, C::new(0.3, -0.1)).unwrap();
        assert_abs_diff_eq!((g.beta1 * g.beta2 - C::new(2.2, 0.0)).norm(), 0.0, epsilon = 1e-12);
        assert!(g.beta1.norm() <= g.beta2.norm());
        assert_eq!(g.winding, Some(0));
    }

    #[test]
    fn winding_examples() {
        assert_eq!(non_bloch_winding(&bath(1.6, 1.0, 1.2, 4, Boundary::Open)), Ok(0));
        assert_eq!(non_bloch_winding(&bath(0.0, 1.0, 0.0, 4, Boundary::Open)), Ok(1));
        assert_eq!(non_bloch_winding(&bath(1.0, 1.0, 1.2, 4, Boundary::Open)), Ok(1));
        let at = bath(1.36f64.sqrt(), 1.0, 1.2, 4, Boundary::Open);
        assert!(matches!(non_bloch_winding(&at), Err(Error::AtTransition { .. })));
    }

    #[test]
    fn transition_point_values() {
        let (lo, hi) = transition_points(&bath(0.0, 1.0, 1.2, 4, Boundary::Open));
        assert_abs_diff_eq!(hi, 1.16619, epsilon = 1e-5);
        assert_eq!(lo, -hi);
        assert_eq!(transition_points(&bath(0.0, 1.0, 0.0, 4, Boundary::Open)).1, 1.0);
        assert_abs_diff_eq!(transition_points(&bath(0.0, 1.0, 0.4, 4, Boundary::Open)).1, 1.01980, epsilon = 1e-5);
    }

    #[test]
    fn point_gap_interior_and_exterior() {
        let p = bath(0.6, 1.0, 1.2, 4, Boundary::Periodic);
        let e = C::new(0.2, -0.4);
        assert!(inside_point_gap(&p, e));
        assert_ne!(point_gap_winding(&p, e, 2048).unwrap(), 0);
        assert_eq!(point_gap_winding(&p, C::new(30.0, 0.0), 2048).unwrap(), 0);
        let on = bloch_eigenvalues(&p, 0.7)[1];
        assert!(matches!(
            point_gap_winding(&p, on, 2048),
            Err(Error::OnSpectrum { .. })
        ));
    }

    #[test]
    fn exceptional_point_on_transition_line() {
        let p = bath(1.6, 1.0, 1.2, 4, Boundary::Periodic);
        assert!(min_band_separation(&p, 2048) < 1e-8);
        let q = bath(2.5, 1.0, 1.2, 4, Boundary::Periodic);
        assert!(min_band_separation(&q, 2048) > 1.0);
    }

    #[test]
    fn obc_shifted_spectrum_is_real() {
        let p = bath(1.6, 1.0, 1.2, 20, Boundary::Open);
        let s = obc_spectrum(&build_bath(&p)).unwrap();
        assert_eq!(s.len(), 40);
        for e in &s.eigenvalues {
            assert!((e.im + 0.6).abs() < 1e-8, "{e}");
        }
        assert!(s.biorthogonality_error() < 1e-8);
    }

    #[test]
    fn obc_one_by_one() {
        let m = SystemMatrix {
            entries: Array2::from_elem((1, 1), C::new(0.4, -0.3)),
            basis: vec![crate::model::BasisLabel::Emitter(0)],
        };
        assert_eq!(obc_spectrum(&m).unwrap().eigenvalues, vec![C::new(0.4, -0.3)]);
    }

    #[test]
    fn csv_headers() {
        let mut buf = Vec::new();
        write_spectrum_csv(&mut buf, &[C::new(1.0, -0.5)]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "index,re,im\n0,1,-0.5\n");
    }
}
