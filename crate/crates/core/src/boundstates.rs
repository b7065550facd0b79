//! Emitter self-energy, photon-emitter bound states on the periodic lattice,
//! and the closed-form chiral and hidden bound states.

use std::io::Write;

use ndarray::Array1;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::{fmt_real, push_complex, write_rows};
use crate::linalg::CVec;
use crate::model::{BathParams, Boundary, EmitterAttachment, Sublattice};
use crate::scalar::{cplx, im, pairwise_sum, re, Real, C};
use crate::spectral::{bloch_eigenvalues, distance_to_pbc_spectrum, point_gap_winding};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormConvention {
    RightNormalized,
    Biorthogonal,
}

/// Emitter amplitudes plus site-resolved photon amplitudes; `photons[j - 1]`
/// holds `(c_{j,a}, c_{j,b})`.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavefunction<T: Real> {
    pub emitters: Vec<C<T>>,
    pub photons: Vec<[C<T>; 2]>,
    pub convention: NormConvention,
}

impl<T: Real> Wavefunction<T> {
    pub fn zeros(n_emitters: usize, cells: usize) -> Self {
        Self {
            emitters: vec![C::new(T::zero(), T::zero()); n_emitters],
            photons: vec![[C::new(T::zero(), T::zero()); 2]; cells],
            convention: NormConvention::RightNormalized,
        }
    }

    /// Single excitation on emitter `n`.
    pub fn emitter_excited(n: usize, n_emitters: usize, cells: usize) -> Self {
        let mut w = Self::zeros(n_emitters, cells);
        w.emitters[n] = re(T::one());
        w
    }

    pub fn cells(&self) -> usize {
        self.photons.len()
    }

    /// Amplitude on `(cell, sublattice)`, cells 1-indexed.
    pub fn site(&self, cell: usize, sublattice: Sublattice) -> C<T> {
        self.photons[cell - 1][sublattice.offset()]
    }

    pub fn emitter(&self) -> C<T> {
        self.emitters[0]
    }

    pub fn norm_sqr(&self) -> T {
        let e = self.emitters.iter().map(|z| z.norm_sqr());
        let p = self.photons.iter().flat_map(|c| c.iter().map(|z| z.norm_sqr()));
        let all: Vec<T> = e.chain(p).collect();
        pairwise_sum(&all)
    }

    pub fn photon_weight(&self, sublattice: Sublattice) -> T {
        let w: Vec<T> = self
            .photons
            .iter()
            .map(|c| c[sublattice.offset()].norm_sqr())
            .collect();
        pairwise_sum(&w)
    }

    /// Photon weight on cells `j < cell` (both sublattices).
    pub fn weight_left_of(&self, cell: usize) -> T {
        let w: Vec<T> = self.photons[..cell.saturating_sub(1)]
            .iter()
            .map(|c| c[0].norm_sqr() + c[1].norm_sqr())
            .collect();
        pairwise_sum(&w)
    }

    /// Photon weight on cells `j > cell` (both sublattices).
    pub fn weight_right_of(&self, cell: usize) -> T {
        let w: Vec<T> = self.photons[cell.min(self.photons.len())..]
            .iter()
            .map(|c| c[0].norm_sqr() + c[1].norm_sqr())
            .collect();
        pairwise_sum(&w)
    }

    pub fn scale(&mut self, s: C<T>) {
        self.emitters.iter_mut().for_each(|z| *z = *z * s);
        self.photons
            .iter_mut()
            .for_each(|c| c.iter_mut().for_each(|z| *z = *z * s));
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        if n > T::zero() {
            self.scale(re(T::one() / n));
        }
        self.convention = NormConvention::RightNormalized;
    }

    /// Global phase: first emitter amplitude real positive, or the largest
    /// photon amplitude if the emitter amplitude is negligible.
    pub fn align_phase(&mut self) {
        let threshold = T::lit(1e-12) * self.norm_sqr().sqrt();
        let pivot = match self.emitters.first() {
            Some(&c) if c.norm() > threshold => c,
            _ => self
                .photons
                .iter()
                .flat_map(|c| c.iter().copied())
                .fold(re(T::zero()), |best, z| if z.norm() > best.norm() { z } else { best }),
        };
        if pivot.norm() > T::zero() {
            self.scale(pivot.conj() / pivot.norm());
        }
    }

    /// Flattens into the system basis `[e_1..e_N, a_1, b_1, ..., a_L, b_L]`.
    pub fn to_vector(&self) -> CVec<T> {
        let mut v = Vec::with_capacity(self.emitters.len() + 2 * self.photons.len());
        v.extend_from_slice(&self.emitters);
        for c in &self.photons {
            v.extend_from_slice(c);
        }
        Array1::from(v)
    }

    pub fn from_vector(v: &[C<T>], n_emitters: usize) -> Self {
        let photons = v[n_emitters..].chunks(2).map(|c| [c[0], c[1]]).collect();
        Self {
            emitters: v[..n_emitters].to_vec(),
            photons,
            convention: NormConvention::RightNormalized,
        }
    }

    /// Largest amplitude difference to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        let a = self.to_vector();
        let b = other.to_vector();
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (*x - *y).norm())
            .fold(T::zero(), T::max)
    }
}

/// `j, sublattice, re, im, abs2` rows; emitter amplitudes use `j = 0` and
/// sublattice `e<n>`.
pub fn write_wavefunction_csv<T: Real, W: Write>(out: W, psi: &Wavefunction<T>) -> Result<()> {
    let emitters = psi.emitters.iter().enumerate().map(|(n, z)| {
        let mut row = vec!["0".to_string(), format!("e{}", n + 1)];
        push_complex(&mut row, *z);
        row.push(fmt_real(z.norm_sqr()));
        row
    });
    let photons = psi.photons.iter().enumerate().flat_map(|(j, c)| {
        [Sublattice::A, Sublattice::B].into_iter().map(move |s| {
            let z = c[s.offset()];
            let mut row = vec![(j + 1).to_string(), s.label().to_string()];
            push_complex(&mut row, z);
            row.push(fmt_real(z.norm_sqr()));
            row
        })
    });
    write_rows(
        out,
        &["j", "sublattice", "re", "im", "abs2"],
        emitters.chain(photons),
    )
}

/// Applies the single-emitter ring Hamiltonian (PBC, `psi.cells()` cells).
fn apply_ring<T: Real>(
    params: &BathParams<T>,
    attach: &EmitterAttachment<T>,
    psi: &Wavefunction<T>,
) -> Wavefunction<T> {
    let l = psi.cells();
    let mut out = Wavefunction::zeros(1, l);
    let onsite = params.onsite();
    let (ab, ba, j2) = (params.hop_ab(), params.hop_ba(), params.j2);
    for j in 0..l {
        let prev = (j + l - 1) % l;
        let next = (j + 1) % l;
        let [a, b] = psi.photons[j];
        out.photons[j][0] = onsite * a + b * ab + psi.photons[prev][1] * j2;
        out.photons[j][1] = onsite * b + a * ba + psi.photons[next][0] * j2;
    }
    let s = attach.unit_cell - 1;
    let off = attach.sublattice.offset();
    out.emitters[0] = attach.detuning() * psi.emitters[0] + psi.photons[s][off] * attach.g;
    out.photons[s][off] += psi.emitters[0] * attach.g;
    out
}

/// `||(H_ring - E) psi||` on a ring with `psi.cells()` unit cells.
pub fn ring_residual<T: Real>(
    params: &BathParams<T>,
    attach: &EmitterAttachment<T>,
    energy: C<T>,
    psi: &Wavefunction<T>,
) -> T {
    let mut h = apply_ring(params, attach, psi);
    let mut shifted = psi.clone();
    shifted.scale(energy);
    h.emitters[0] -= shifted.emitters[0];
    for (o, p) in h.photons.iter_mut().zip(&shifted.photons) {
        o[0] -= p[0];
        o[1] -= p[1];
    }
    h.norm_sqr().sqrt()
}

/// `(z - H_k)^{-1}` applied to the unit vector of `sublattice` (up to the
/// common factor `1/det`), plus the determinant `w^2 - h12 h21`.
#[inline]
fn bloch_resolvent_column<T: Real>(
    params: &BathParams<T>,
    sublattice: Sublattice,
    z: C<T>,
    k: T,
) -> ([C<T>; 2], C<T>) {
    let w = z + im(params.half_kappa());
    let phase = C::from_polar(T::one(), -k);
    let h12 = phase * params.j2 + params.hop_ab();
    let h21 = phase.conj() * params.j2 + params.hop_ba();
    let det = w * w - h12 * h21;
    match sublattice {
        Sublattice::A => ([w, h21], det),
        Sublattice::B => ([h12, w], det),
    }
}

/// Lattice sum of `Sigma` on the `n`-point grid `k = 2 pi m / n`.
fn self_energy_sum<T: Real>(params: &BathParams<T>, g: T, z: C<T>, n: usize) -> C<T> {
    let w = z + im(params.half_kappa());
    let step = T::TAU() / T::from_usize_lossy(n);
    let terms: Vec<C<T>> = (0..n)
        .map(|m| {
            let k = step * T::from_usize_lossy(m);
            let (_, det) = bloch_resolvent_column(params, Sublattice::A, z, k);
            w / det
        })
        .collect();
    let sr: Vec<T> = terms.iter().map(|t| t.re).collect();
    let si: Vec<T> = terms.iter().map(|t| t.im).collect();
    cplx(pairwise_sum(&sr), pairwise_sum(&si)) * (g * g / T::from_usize_lossy(n))
}

/// Atomic self-energy `Sigma(z) = (1/L) sum_k g_k^† (z - H_k)^{-1} g_k`.
///
/// Starts from `l_grid` momenta and doubles until two grids agree to
/// `1e-12 (1 + |Sigma|)`. The result is the same for either sublattice.
pub fn self_energy<T: Real>(
    params: &BathParams<T>,
    attach: &EmitterAttachment<T>,
    z: C<T>,
    l_grid: usize,
) -> Result<C<T>> {
    if attach.g == T::zero() {
        return Ok(re(T::zero()));
    }
    let d = distance_to_pbc_spectrum(params, z);
    if d < T::lit(1e-6) {
        return Err(Error::OnSpectrum {
            distance: d.to_f64_lossy(),
        });
    }
    let tol = T::lit(1e-12);
    let mut n = l_grid.max(4);
    let mut prev = self_energy_sum(params, attach.g, z, n);
    while n < 1 << 22 {
        n *= 2;
        let cur = self_energy_sum(params, attach.g, z, n);
        if (cur - prev).norm() <= tol * (T::one() + cur.norm()) {
            return Ok(cur);
        }
        prev = cur;
    }
    Ok(prev)
}

/// Closed form at `J1 = kappa/2`: `0` inside the point gap and
/// `g^2 w / (w^2 - J2^2)` outside, `w = z + i kappa/2`.
pub fn self_energy_point_gap<T: Real>(params: &BathParams<T>, g: T, z: C<T>) -> C<T> {
    let w = z + im(params.half_kappa());
    let j2 = params.j2;
    if (w * w - j2 * j2).norm() <= (params.kappa * j2).abs() {
        re(T::zero())
    } else {
        w * (g * g) / (w * w - j2 * j2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundStateClass {
    /// Real part inside the line gap between the two PBC bands.
    LineGapChiral,
    /// Inside a point-gap loop (nonzero spectral winding).
    PointGapHidden,
    OutOfBand,
}

#[derive(Debug, Clone)]
pub struct BoundState<T: Real> {
    pub energy: C<T>,
    pub wavefunction: Wavefunction<T>,
    /// `||(H_ring - E) psi||` on the ring used for the solution.
    pub residual: T,
    pub class: BoundStateClass,
}

/// Rectangle in the complex energy plane plus solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundStateSearch<T> {
    pub re_min: T,
    pub re_max: T,
    pub im_min: T,
    pub im_max: T,
    /// Newton seeds per axis.
    pub seeds: usize,
    /// Ring size (unit cells) for the self-energy sum and the wavefunction.
    pub ring_cells: usize,
    /// Roots closer than this to the PBC spectrum are discarded.
    pub margin: T,
}

impl<T: Real> BoundStateSearch<T> {
    pub fn new(re_min: T, re_max: T, im_min: T, im_max: T) -> Self {
        Self {
            re_min,
            re_max,
            im_min,
            im_max,
            seeds: 40,
            ring_cells: 400,
            margin: T::lit(1e-3),
        }
    }

    fn contains(&self, z: C<T>) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }
}

fn newton<T: Real>(f: impl Fn(C<T>) -> C<T>, seed: C<T>, bound: T) -> Option<C<T>> {
    let mut z = seed;
    let mut fz = f(z);
    for _ in 0..60 {
        if !(fz.re.is_finite() && fz.im.is_finite()) {
            return None;
        }
        if fz.norm() < T::lit(1e-10) {
            return Some(z);
        }
        let h = T::lit(1e-6) * (T::one() + z.norm());
        let d = (f(z + re(h)) - f(z - re(h))) / (h + h);
        if d.norm() == T::zero() {
            return None;
        }
        let step = fz / d;
        z -= step;
        if z.norm() > bound {
            return None;
        }
        fz = f(z);
    }
    None
}

fn line_gap_contains<T: Real>(params: &BathParams<T>, e: C<T>) -> bool {
    // principal sqrt: band 0 has Re <= 0, band 1 has Re >= 0
    let n = 1024;
    let step = T::TAU() / T::from_usize_lossy(n);
    let mut lo_max = T::neg_infinity();
    let mut hi_min = T::infinity();
    for m in 0..n {
        let [lo, hi] = bloch_eigenvalues(params, step * T::from_usize_lossy(m));
        lo_max = lo_max.max(lo.re);
        hi_min = hi_min.min(hi.re);
    }
    lo_max < hi_min && e.re > lo_max && e.re < hi_min
}

fn classify<T: Real>(params: &BathParams<T>, e: C<T>) -> BoundStateClass {
    match point_gap_winding(params, e, 2048) {
        Ok(w) if w != 0 => BoundStateClass::PointGapHidden,
        _ if line_gap_contains(params, e) => BoundStateClass::LineGapChiral,
        _ => BoundStateClass::OutOfBand,
    }
}

/// All roots of `E - Delta - Sigma(E) = 0` inside `search`, with `Delta`
/// taken from the attachment. Each root is polished to `|f| < 1e-10` on the
/// `search.ring_cells` ring, classified, and paired with its wavefunction.
/// An empty list means no root was found.
pub fn solve_bound_states<T: Real>(
    params: &BathParams<T>,
    attach: &EmitterAttachment<T>,
    search: &BoundStateSearch<T>,
) -> Result<Vec<BoundState<T>>> {
    params.validate()?;
    let ring = params.with_cells(search.ring_cells).with_boundary(Boundary::Periodic);
    let delta = attach.detuning();
    let f = |z: C<T>| z - delta - self_energy_sum(&ring, attach.g, z, search.ring_cells);
    let n = search.seeds.max(1);
    let span = |lo: T, hi: T, i: usize| {
        if n == 1 {
            (lo + hi) * T::lit(0.5)
        } else {
            lo + (hi - lo) * T::from_usize_lossy(i) / T::from_usize_lossy(n - 1)
        }
    };
    let seeds: Vec<C<T>> = (0..n * n)
        .map(|s| {
            cplx(
                span(search.re_min, search.re_max, s % n),
                span(search.im_min, search.im_max, s / n),
            )
        })
        .collect();
    let bound = T::lit(10.0)
        * (T::one()
            + search.re_min.abs()
            + search.re_max.abs()
            + search.im_min.abs()
            + search.im_max.abs());
    let found: Vec<Option<C<T>>> = seeds
        .par_iter()
        .map(|&s| {
            let r = newton(f, s, bound);
            if r.is_none() {
                log::trace!("Newton seed {s} diverged");
            }
            r
        })
        .collect();
    let mut roots: Vec<C<T>> = Vec::new();
    for z in found.into_iter().flatten() {
        if !search.contains(z) {
            continue;
        }
        if roots.iter().any(|r| (*r - z).norm() < T::lit(1e-8)) {
            continue;
        }
        roots.push(z);
    }
    roots.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    let mut out = Vec::new();
    for e in roots {
        if distance_to_pbc_spectrum(params, e) < search.margin {
            continue;
        }
        let ring_attach = EmitterAttachment {
            unit_cell: attach.unit_cell.min(search.ring_cells),
            ..*attach
        };
        let psi = bound_state_wavefunction(params, &ring_attach, e, search.ring_cells)?;
        let residual = ring_residual(&ring, &ring_attach, e, &psi);
        out.push(BoundState {
            energy: e,
            wavefunction: psi,
            residual,
            class: classify(params, e),
        });
    }
    Ok(out)
}

/// Momentum-space solution `c_k = (E_b - H_k)^{-1} g_k c_e` transformed back
/// to a ring of `cells` unit cells (`c_j = (1/L) sum_k e^{ikj} c_k`), then
/// normalized to unity with `c_e > 0`.
pub fn bound_state_wavefunction<T: Real>(
    params: &BathParams<T>,
    attach: &EmitterAttachment<T>,
    energy: C<T>,
    cells: usize,
) -> Result<Wavefunction<T>> {
    if attach.unit_cell < 1 || attach.unit_cell > cells {
        return Err(Error::AttachmentOutOfRange {
            cell: attach.unit_cell,
            cells,
        });
    }
    let d = distance_to_pbc_spectrum(params, energy);
    if d < T::lit(1e-6) {
        return Err(Error::OnSpectrum {
            distance: d.to_f64_lossy(),
        });
    }
    let mut psi = Wavefunction::zeros(1, cells);
    psi.emitters[0] = re(T::one());
    if attach.g == T::zero() {
        return Ok(psi);
    }
    let step = T::TAU() / T::from_usize_lossy(cells);
    let ck: Vec<[C<T>; 2]> = (0..cells)
        .map(|m| {
            let k = step * T::from_usize_lossy(m);
            let (col, det) = bloch_resolvent_column(params, attach.sublattice, energy, k);
            let s = re(attach.g) / det;
            [col[0] * s, col[1] * s]
        })
        .collect();
    // e^{ik(j - j0)} = omega^{m (j - j0) mod L}
    let roots: Vec<C<T>> = (0..cells)
        .map(|m| C::from_polar(T::one(), step * T::from_usize_lossy(m)))
        .collect();
    let inv_l = T::one() / T::from_usize_lossy(cells);
    let j0 = attach.unit_cell;
    let photons: Vec<[C<T>; 2]> = (1..=cells)
        .into_par_iter()
        .map(|j| {
            let shift = (j + cells - j0) % cells;
            let mut acc = [Vec::with_capacity(cells), Vec::with_capacity(cells)];
            for (m, c) in ck.iter().enumerate() {
                let ph = roots[(m * shift) % cells];
                acc[0].push(c[0] * ph);
                acc[1].push(c[1] * ph);
            }
            let sum = |v: &Vec<C<T>>| {
                let r: Vec<T> = v.iter().map(|z| z.re).collect();
                let i: Vec<T> = v.iter().map(|z| z.im).collect();
                cplx(pairwise_sum(&r), pairwise_sum(&i)) * inv_l
            };
            [sum(&acc[0]), sum(&acc[1])]
        })
        .collect();
    psi.photons = photons;
    psi.normalize();
    psi.align_phase();
    Ok(psi)
}

fn check_chiral_energy<T: Real>(params: &BathParams<T>, attach: &EmitterAttachment<T>) -> Result<()> {
    let target = params.onsite();
    if (attach.detuning() - target).norm() > T::lit(1e-12) * (T::one() + params.kappa) {
        return Err(Error::PreconditionViolated(format!(
            "chiral bound state needs delta = -i kappa/2, got {}",
            attach.detuning()
        )));
    }
    Ok(())
}

/// Line-gap bound state at `E_b = Delta = -i kappa/2` on a chain of
/// `params.cells` cells (profile truncated at the chain end, then normalized).
///
/// Attach A: `c_{j,b} = -(g c_e/(J1 - kappa/2)) (-J2/(J1 - kappa/2))^{j - j0}`
/// for `j >= j0`. Attach B: `c_{j,a} = (g c_e/J2) (-(J1 + kappa/2)/J2)^{j - j0 - 1}`
/// for `j <= j0`.
pub fn chiral_bound_state_analytic<T: Real>(
    params: &BathParams<T>,
    attach: &EmitterAttachment<T>,
) -> Result<Wavefunction<T>> {
    check_chiral_energy(params, attach)?;
    let (l, j0, g, j2) = (params.cells, attach.unit_cell, attach.g, params.j2);
    if j0 < 1 || j0 > l {
        return Err(Error::AttachmentOutOfRange { cell: j0, cells: l });
    }
    let mut psi = Wavefunction::zeros(1, l);
    psi.emitters[0] = re(T::one());
    match attach.sublattice {
        Sublattice::A => {
            let a = params.hop_ab();
            if !(j2.abs() < a.abs()) {
                return Err(Error::PreconditionViolated(
                    "line gap on A requires |J2| < |J1 - kappa/2|".into(),
                ));
            }
            let ratio = -j2 / a;
            let mut c = -g / a;
            for j in j0..=l {
                psi.photons[j - 1][1] = re(c);
                c *= ratio;
            }
        }
        Sublattice::B => {
            let b = params.hop_ba();
            if !(j2.abs() < b.abs()) {
                return Err(Error::PreconditionViolated(
                    "line gap on B requires |J2| < |J1 + kappa/2|".into(),
                ));
            }
            // walking left from j0 the amplitude picks up -J2/(J1 + kappa/2)
            let ratio = -j2 / b;
            let mut c = -g / b;
            for j in (1..=j0).rev() {
                psi.photons[j - 1][0] = re(c);
                c *= ratio;
            }
        }
    }
    psi.normalize();
    psi.align_phase();
    Ok(psi)
}

/// `|c_e|^2` of the chiral bound state on the infinite lattice.
pub fn chiral_atomic_weight<T: Real>(params: &BathParams<T>, attach: &EmitterAttachment<T>) -> T {
    let h = match attach.sublattice {
        Sublattice::A => params.hop_ab(),
        Sublattice::B => params.hop_ba(),
    };
    let d = h * h - params.j2 * params.j2;
    d / (d + attach.g * attach.g)
}

fn on_point_gap_line<T: Real>(params: &BathParams<T>) -> bool {
    (params.j1 - params.half_kappa()).abs() <= T::lit(1e-12) * (T::one() + params.kappa)
}

/// `eta = kappa J2 / ((E + i kappa/2)^2 - J2^2)`.
pub fn hidden_eta<T: Real>(params: &BathParams<T>, energy: C<T>) -> C<T> {
    let w = energy + im(params.half_kappa());
    re(params.kappa * params.j2) / (w * w - params.j2 * params.j2)
}

/// Hidden bound state inside the point gap at `J1 = kappa/2`, on a chain of
/// `params.cells` cells. Support is strictly left of the emitter for either
/// sublattice; amplitudes are powers of `eta` (`|eta| > 1`).
pub fn hidden_bound_state_analytic<T: Real>(
    params: &BathParams<T>,
    attach: &EmitterAttachment<T>,
    energy: C<T>,
) -> Result<Wavefunction<T>> {
    if !on_point_gap_line(params) {
        return Err(Error::PreconditionViolated(
            "hidden bound state requires J1 = kappa/2".into(),
        ));
    }
    let w = energy + im(params.half_kappa());
    let (j2, kappa, g) = (params.j2, params.kappa, attach.g);
    if !((w * w - j2 * j2).norm() < (kappa * j2).abs()) {
        return Err(Error::PreconditionViolated(
            "energy outside the point-gap loop".into(),
        ));
    }
    let (l, j0) = (params.cells, attach.unit_cell);
    if j0 < 1 || j0 > l {
        return Err(Error::AttachmentOutOfRange { cell: j0, cells: l });
    }
    let eta = hidden_eta(params, energy);
    let kj = re(kappa * j2);
    let pw = |n: i64| eta.powi(n as i32);
    let mut psi = Wavefunction::zeros(1, l);
    psi.emitters[0] = re(T::one());
    let gc = re(-g);
    for j in 1..=l {
        let d = j as i64 - j0 as i64;
        let cell = &mut psi.photons[j - 1];
        match attach.sublattice {
            Sublattice::A => {
                if d < 0 {
                    cell[0] = gc * w * pw(d + 1) / kj;
                }
                if d == -1 {
                    cell[1] = gc / j2;
                } else if d < -1 {
                    cell[1] = gc * pw(d + 1) / j2 + gc * pw(d + 2) / kappa;
                }
            }
            Sublattice::B => {
                if d <= 0 {
                    cell[0] = gc * pw(d) / kappa;
                }
                if d < 0 {
                    cell[1] = gc * w * pw(d + 1) / kj;
                }
            }
        }
    }
    psi.normalize();
    psi.align_phase();
    Ok(psi)
}

/// Emitter weight `|c_e|^2` of a bound state at `E_b`.
///
/// At `J1 = kappa/2` this is the closed form built from `u_a, u_b, w, v, p,
/// z_+-`; elsewhere it is the normalization sum
/// `|c_e|^-2 = 1 + (g^2/L) sum_k ||(E_b - H_k)^{-1} g_k||^2 / g^2`.
pub fn atomic_weight<T: Real>(params: &BathParams<T>, attach: &EmitterAttachment<T>, energy: C<T>) -> T {
    if attach.g == T::zero() {
        return T::one();
    }
    if on_point_gap_line(params) && params.kappa > T::zero() && params.j2 != T::zero() {
        atomic_weight_closed_form(params, attach, energy)
    } else {
        atomic_weight_sum(params, attach, energy)
    }
}

pub fn atomic_weight_sum<T: Real>(params: &BathParams<T>, attach: &EmitterAttachment<T>, energy: C<T>) -> T {
    let eval = |n: usize| {
        let step = T::TAU() / T::from_usize_lossy(n);
        let terms: Vec<T> = (0..n)
            .map(|m| {
                let k = step * T::from_usize_lossy(m);
                let (col, det) = bloch_resolvent_column(params, attach.sublattice, energy, k);
                (col[0].norm_sqr() + col[1].norm_sqr()) / det.norm_sqr()
            })
            .collect();
        pairwise_sum(&terms) / T::from_usize_lossy(n)
    };
    let mut n = 4096;
    let mut prev = eval(n);
    while n < 1 << 22 {
        n *= 2;
        let cur = eval(n);
        if (cur - prev).abs() <= T::lit(1e-13) * (T::one() + cur) {
            prev = cur;
            break;
        }
        prev = cur;
    }
    T::one() / (T::one() + attach.g * attach.g * prev)
}

/// Closed-form atomic weight at `J1 = kappa/2` (valid inside and outside the
/// point gap).
pub fn atomic_weight_closed_form<T: Real>(
    params: &BathParams<T>,
    attach: &EmitterAttachment<T>,
    energy: C<T>,
) -> T {
    let (j2, k, g) = (params.j2, params.kappa, attach.g);
    let e = energy;
    let ec = e.conj();
    let i = im(T::one());
    let n = |x: f64| re(T::lit(x));
    let j2s = re(j2 * j2);
    let kc = re(k);
    let ua = j2s * n(4.0) - i * e * kc * n(2.0) + kc * kc * n(5.0) + n(4.0) * e.norm_sqr() + i * kc * ec * n(2.0);
    let ub = j2s * n(4.0) - i * e * kc * n(2.0) + kc * kc + n(4.0) * e.norm_sqr() + i * kc * ec * n(2.0);
    let w = j2s * n(4.0) + kc * kc + i * kc * ec * n(4.0) - ec * ec * n(4.0);
    let wk = e + i * kc * n(0.5);
    let v = j2s - wk * wk;
    let jk = re(j2 * k);
    let p = jk * jk * n(4.0) + v * w;
    let sq = (p * p - jk * jk * v * w * n(16.0)).sqrt();
    let zp = (-p + sq) / (jk * v * n(8.0));
    let zm = (-p - sq) / (jk * v * n(8.0));
    let inside = |z: C<T>| z.norm() < T::one();
    let g2 = re(g * g);
    let inv = match attach.sublattice {
        Sublattice::A => {
            let mut t = n(1.0) + g2 * n(4.0) / w;
            if inside(zp) {
                t += g2 * (jk * n(4.0) * zp * zp + ua * zp + jk * n(4.0)) / (jk * n(4.0) * v * zp * (zp - zm));
            }
            if inside(zm) {
                t += g2 * (jk * j2 * n(4.0) * zm * zm + ua * zm + jk * n(4.0))
                    / (jk * n(4.0) * v * zm * (zm - zp));
            }
            t
        }
        Sublattice::B => {
            let mut t = n(1.0);
            if inside(zp) {
                t += g2 * ub / (jk * n(4.0) * v * (zp - zm));
            }
            if inside(zm) {
                t += g2 * ub / (jk * n(4.0) * v * (zm - zp));
            }
            t
        }
    };
    (n(1.0) / inv).re
}
