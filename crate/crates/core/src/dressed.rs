//! Dressed states of an emitter coupled to the open chain.
//!
//! For `J1 > kappa/2` the diagonal similarity `S` (powers of
//! `r = sqrt((J1 + kappa/2)/(J1 - kappa/2))`) maps the bath onto a Hermitian
//! SSH chain with hopping `J1bar = sqrt((J1 - kappa/2)(J1 + kappa/2))`, `J2`,
//! plus the uniform loss `-i kappa/2`. When also `gamma = kappa`, the coupled
//! problem reduces to a real pole equation over the analytic OBC eigenbasis.

use std::io::Write;

use ndarray::{Array1, Array2};
use rayon::prelude::*;

use crate::boundstates::Wavefunction;
use crate::error::{Error, Result};
use crate::io::{fmt_real, write_rows};
use crate::linalg;
use crate::model::{build_bath, build_system, BasisLabel, BathParams, Boundary, EmitterAttachment, Sublattice, SystemMatrix};
use crate::scalar::{im, re, Real, C};

/// Analytic eigenbasis of the Hermitian open SSH chain (`L` cells, hopping
/// `J1bar` inside and `J2` between cells), modes sorted by energy.
#[derive(Debug, Clone)]
pub struct SshObcBasis<T: Real> {
    pub j1bar: T,
    pub j2: T,
    pub cells: usize,
    /// Roots of `J1bar sin((L+1) theta) + J2 sin(L theta) = 0` in `(0, pi)`.
    pub theta: Vec<T>,
    /// Decay `mu` of the edge pair `theta = pi + i mu`, present when
    /// `J2 L > J1bar (L + 1)`; `theta` then holds `L - 1` real roots.
    pub edge_mu: Option<T>,
    /// Mode energies, ascending (`2L` values).
    pub epsilon: Vec<T>,
    /// Index into `theta` for each mode; `theta.len()` for the edge pair.
    pub theta_index: Vec<usize>,
    /// `phi_a[[m, j-1]]`, unnormalized.
    pub phi_a: Array2<T>,
    pub phi_b: Array2<T>,
    /// `N_m = sum_j (phi_a^2 + phi_b^2)`.
    pub norms: Vec<T>,
}

impl<T: Real> SshObcBasis<T> {
    pub fn modes(&self) -> usize {
        self.epsilon.len()
    }

    /// `phi_{m,alpha}(j)` for a 1-indexed cell.
    pub fn amplitude(&self, m: usize, cell: usize, sublattice: Sublattice) -> T {
        match sublattice {
            Sublattice::A => self.phi_a[[m, cell - 1]],
            Sublattice::B => self.phi_b[[m, cell - 1]],
        }
    }

    /// Largest `|J1bar sin((L+1) theta) + J2 sin(L theta)|` over the roots.
    pub fn quantization_residual(&self) -> T {
        let l = T::from_usize_lossy(self.cells);
        let edge = self.edge_mu.map_or(T::zero(), |mu| {
            // sinh((L+1) mu) J1bar - sinh(L mu) J2, relative to sinh(L mu)
            let r = mu.exp() * (-(T::lit(2.0) * (l + T::one()) * mu)).exp_m1() / (-(T::lit(2.0) * l * mu)).exp_m1();
            if mu == T::zero() { T::zero() } else { (self.j1bar * r - self.j2).abs() }
        });
        self.theta
            .iter()
            .map(|&t| (self.j1bar * ((l + T::one()) * t).sin() + self.j2 * (l * t).sin()).abs())
            .fold(edge, T::max)
    }
}

fn bisect<T: Real>(f: impl Fn(T) -> T, mut lo: T, mut hi: T) -> T {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == T::zero() {
            return mid;
        }
        if (fm > T::zero()) == (flo > T::zero()) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) * T::lit(0.5)
}

/// `sinh((L+1) mu) / sinh(L mu) = J2 / J1bar`, the edge-mode decay.
fn edge_decay<T: Real>(j1bar: T, j2: T, l: T) -> T {
    let ratio = |mu: T| mu.exp() * (-(T::lit(2.0) * (l + T::one()) * mu)).exp_m1() / (-(T::lit(2.0) * l * mu)).exp_m1();
    let target = j2 / j1bar;
    if target <= (l + T::one()) / l {
        return T::zero();
    }
    let h = |mu: T| if mu == T::zero() { target - (l + T::one()) / l } else { target - ratio(mu) };
    bisect(h, T::zero(), target.ln() + T::one())
}

/// `(-1)^j sinh(j mu) / sinh(L mu)`, with the `mu -> 0` limit `(-1)^j j / L`.
fn edge_profile<T: Real>(mu: T, j: usize, cells: usize) -> T {
    let sign = if j % 2 == 0 { T::one() } else { -T::one() };
    let (jf, lf) = (T::from_usize_lossy(j), T::from_usize_lossy(cells));
    if mu * lf < T::epsilon() {
        return sign * jf / lf;
    }
    let two = T::lit(2.0);
    sign * ((jf - lf) * mu).exp() * (-(two * jf * mu)).exp_m1() / (-(two * lf * mu)).exp_m1()
}

/// Analytic OBC eigenbasis: `L` real quantization roots in the trivial
/// regime, `L - 1` plus an edge pair when `J2 L > J1bar (L + 1)`.
pub fn ssh_obc_eigenbasis<T: Real>(j1bar: T, j2: T, cells: usize) -> Result<SshObcBasis<T>> {
    if !(j1bar > T::zero()) || cells < 1 {
        return Err(Error::InvalidParams(format!(
            "need J1bar > 0 and L >= 1, got J1bar = {j1bar}, L = {cells}"
        )));
    }
    let l = T::from_usize_lossy(cells);
    let f = |t: T| j1bar * ((l + T::one()) * t).sin() + j2 * (l * t).sin();
    let n = 50 * cells;
    let h = T::PI() / T::from_usize_lossy(n);
    let mut theta = Vec::with_capacity(cells);
    let mut prev_t = h;
    let mut prev_f = f(prev_t);
    if prev_f == T::zero() {
        theta.push(prev_t);
    }
    for i in 2..n {
        let t = h * T::from_usize_lossy(i);
        let ft = f(t);
        if ft == T::zero() {
            theta.push(t);
        } else if prev_f != T::zero() && (ft > T::zero()) != (prev_f > T::zero()) {
            theta.push(bisect(f, prev_t, t));
        }
        prev_t = t;
        prev_f = ft;
    }
    if theta.len() + 1 == cells && prev_f != T::zero() {
        // a real root in (pi - h, pi) that the scan grid cannot resolve
        let t = T::PI() * (T::one() - T::epsilon() * T::lit(8.0));
        let ft = f(t);
        if ft != T::zero() && (ft > T::zero()) != (prev_f > T::zero()) && !(j2 * l > j1bar * (l + T::one())) {
            theta.push(bisect(f, prev_t, t));
        }
    }
    // topological regime: one pair of edge modes with theta = pi + i mu
    let edge_mu = if theta.len() + 1 == cells && j2 * l >= j1bar * (l + T::one()) {
        Some(edge_decay(j1bar, j2, l))
    } else {
        None
    };
    if theta.len() + edge_mu.is_some() as usize != cells {
        return Err(Error::RootCountMismatch {
            expected: cells,
            found: theta.len(),
        });
    }
    let two = T::lit(2.0);
    let mut modes: Vec<(T, usize)> = Vec::with_capacity(2 * cells);
    for (i, &t) in theta.iter().enumerate() {
        let e = (two * j1bar * j2 * t.cos() + j1bar * j1bar + j2 * j2).max(T::zero()).sqrt();
        modes.push((-e, i));
        modes.push((e, i));
    }
    if let Some(mu) = edge_mu {
        let e = (j1bar * j1bar + j2 * j2 - two * j1bar * j2 * mu.cosh()).max(T::zero()).sqrt();
        modes.push((-e, theta.len()));
        modes.push((e, theta.len()));
    }
    modes.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let m = modes.len();
    let mut phi_a = Array2::zeros((m, cells));
    let mut phi_b = Array2::zeros((m, cells));
    let mut norms = Vec::with_capacity(m);
    for (k, &(e, i)) in modes.iter().enumerate() {
        let mut nrm = T::zero();
        for j in 1..=cells {
            let (sj, sj1) = match theta.get(i) {
                Some(&t) => {
                    let jt = T::from_usize_lossy(j) * t;
                    (jt.sin(), (jt - t).sin())
                }
                None => {
                    let mu = edge_mu.unwrap();
                    (edge_profile(mu, j, cells), edge_profile(mu, j - 1, cells))
                }
            };
            let a = sj + (j2 / j1bar) * sj1;
            let b = (e / j1bar) * sj;
            phi_a[[k, j - 1]] = a;
            phi_b[[k, j - 1]] = b;
            nrm += a * a + b * b;
        }
        norms.push(nrm);
    }
    Ok(SshObcBasis {
        j1bar,
        j2,
        cells,
        theta,
        edge_mu,
        epsilon: modes.iter().map(|m| m.0).collect(),
        theta_index: modes.iter().map(|m| m.1).collect(),
        phi_a,
        phi_b,
        norms,
    })
}

/// `J1bar = sqrt((J1 - kappa/2)(J1 + kappa/2))`, defined for `J1 > kappa/2`.
pub fn j1bar<T: Real>(params: &BathParams<T>) -> Result<T> {
    if !(params.hop_ab() > T::zero()) {
        return Err(Error::DegenerateGbz);
    }
    Ok((params.hop_ab() * params.hop_ba()).sqrt())
}

fn radius<T: Real>(params: &BathParams<T>) -> Result<T> {
    if !(params.hop_ab() > T::zero()) {
        return Err(Error::DegenerateGbz);
    }
    Ok((params.hop_ba() / params.hop_ab()).sqrt())
}

/// Integer exponent of `r` in `S` for a basis element, relative to the
/// emitter site `(j0, alpha)`: `a_j -> j - j0 - [alpha = b]`,
/// `b_j -> j + 1 - j0 - [alpha = b]`, emitters `-> 0`.
pub fn similarity_exponent(label: BasisLabel, reference: (usize, Sublattice)) -> i32 {
    let (j0, alpha) = reference;
    let db = alpha.is_b() as i32;
    match label {
        BasisLabel::Emitter(_) => 0,
        BasisLabel::Site { cell, sublattice } => {
            cell as i32 + sublattice.offset() as i32 - j0 as i32 - db
        }
    }
}

/// Diagonal `S` and `S^-1 H S` for a system with basis `matrix.basis`,
/// referenced to the first emitter (or `(1, A)` for a bare bath).
pub fn similarity_transform_matrix<T: Real>(
    params: &BathParams<T>,
    matrix: &SystemMatrix<T>,
    reference: (usize, Sublattice),
) -> Result<(Vec<C<T>>, SystemMatrix<T>)> {
    let r = radius(params)?;
    let exps: Vec<i32> = matrix
        .basis
        .iter()
        .map(|&b| similarity_exponent(b, reference))
        .collect();
    let s = exps.iter().map(|&e| re(r.powi(e))).collect();
    let n = matrix.dim();
    let m = &matrix.entries;
    let entries = Array2::from_shape_fn((n, n), |(x, y)| {
        let z = m[[x, y]];
        if z == C::new(T::zero(), T::zero()) {
            z
        } else {
            z * r.powi(exps[y] - exps[x])
        }
    });
    Ok((
        s,
        SystemMatrix {
            entries,
            basis: matrix.basis.clone(),
        },
    ))
}

/// `S` and `S^-1 H_alpha S` for one emitter on the open chain.
pub fn similarity_transform<T: Real>(
    params: &BathParams<T>,
    attach: &EmitterAttachment<T>,
) -> Result<(Vec<C<T>>, SystemMatrix<T>)> {
    let sys = build_system(&params.with_boundary(Boundary::Open), std::slice::from_ref(attach))?;
    similarity_transform_matrix(params, &sys, (attach.unit_cell, attach.sublattice))
}

/// Hermitian-frame bath: hopping `J1bar`, `J2`, diagonal `-i kappa/2`.
pub fn hermitian_frame_bath<T: Real>(params: &BathParams<T>) -> Result<SystemMatrix<T>> {
    let jb = j1bar(params)?;
    let sym = BathParams {
        j1: jb,
        kappa: T::zero(),
        boundary: Boundary::Open,
        ..*params
    };
    let mut m = build_bath(&sym);
    let onsite = params.onsite();
    for i in 0..m.dim() {
        m.entries[[i, i]] = onsite;
    }
    Ok(m)
}

/// Expected `S^-1 H_alpha S`: the Hermitian-frame bath with the emitter row
/// and column unchanged.
pub fn hermitian_frame_system<T: Real>(
    params: &BathParams<T>,
    attach: &EmitterAttachment<T>,
) -> Result<SystemMatrix<T>> {
    let bath = hermitian_frame_bath(params)?;
    let n = bath.dim() + 1;
    let mut entries = Array2::from_elem((n, n), C::new(T::zero(), T::zero()));
    entries.slice_mut(ndarray::s![1.., 1..]).assign(&bath.entries);
    let s = 1 + attach.photon_index();
    entries[[0, 0]] = attach.detuning();
    entries[[0, s]] = re(attach.g);
    entries[[s, 0]] = re(attach.g);
    let mut basis = vec![BasisLabel::Emitter(0)];
    basis.extend(bath.basis);
    Ok(SystemMatrix { entries, basis })
}

#[derive(Debug, Clone)]
pub struct DressedState<T: Real> {
    /// Hermitian-frame (real) energy; `Re E_d` for the numeric path.
    pub frame_energy: T,
    /// Lab-frame complex energy `E_d`.
    pub energy: C<T>,
    /// Lab-frame wavefunction, unit norm, phase aligned.
    pub wavefunction: Wavefunction<T>,
    /// Emitter amplitude of the unit-norm Hermitian-frame state.
    pub cbar_e: Option<C<T>>,
    pub in_gap: bool,
    /// `||(H_alpha - E_d) psi||`.
    pub residual: T,
}

fn residual<T: Real>(sys: &SystemMatrix<T>, energy: C<T>, psi: &Wavefunction<T>) -> T {
    let v = psi.to_vector();
    let hv = sys.entries.dot(&v);
    let d: Array1<C<T>> = &hv - &v.mapv(|z| z * energy);
    linalg::vec_norm(d.as_slice().unwrap())
}

fn check_pole_preconditions<T: Real>(params: &BathParams<T>, attach: &EmitterAttachment<T>) -> Result<()> {
    if (attach.gamma - params.kappa).abs() > T::lit(1e-12) * (T::one() + params.kappa) {
        return Err(Error::PreconditionViolated(format!(
            "pole equation needs gamma = kappa, got gamma = {}, kappa = {}",
            attach.gamma, params.kappa
        )));
    }
    if attach.unit_cell < 1 || attach.unit_cell > params.cells {
        return Err(Error::AttachmentOutOfRange {
            cell: attach.unit_cell,
            cells: params.cells,
        });
    }
    Ok(())
}

/// Roots of `f(E) = E - delta0 - sum_m w_m/(E - eps_m)`,
/// `w_m = g^2 phi_{m,alpha}(j0)^2 / N_m`, plus the decoupled mode energies.
/// Entries are `(E, Some(m))` for a mode `m` that does not couple to the
/// emitter and `(E, None)` for a root of `f`, sorted by energy.
fn pole_roots<T: Real>(basis: &SshObcBasis<T>, weights: &[T], delta0: T, g: T) -> Vec<(T, Option<usize>)> {
    let tiny = T::lit(1e-27) * (g * g).max(T::min_positive_value());
    let active: Vec<usize> = (0..basis.modes()).filter(|&m| weights[m] > tiny).collect();
    let mut out: Vec<(T, Option<usize>)> = (0..basis.modes())
        .filter(|m| !active.contains(m))
        .map(|m| (basis.epsilon[m], Some(m)))
        .collect();
    if active.is_empty() {
        out.push((delta0, None));
    } else {
        let f = |e: T| {
            let mut s = e - delta0;
            for &m in &active {
                s -= weights[m] / (e - basis.epsilon[m]);
            }
            s
        };
        let eps: Vec<T> = active.iter().map(|&m| basis.epsilon[m]).collect();
        let lo_b = eps[0].min(delta0) - g - T::one();
        let hi_b = eps[eps.len() - 1].max(delta0) + g + T::one();
        let mut brackets = vec![(lo_b, eps[0])];
        for w in eps.windows(2) {
            brackets.push((w[0], w[1]));
        }
        brackets.push((eps[eps.len() - 1], hi_b));
        let roots: Vec<T> = brackets
            .par_iter()
            .map(|&(lo, hi)| {
                let mut lo = lo;
                let mut hi = hi;
                for _ in 0..300 {
                    let mid = (lo + hi) * T::lit(0.5);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if f(mid) < T::zero() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                (lo + hi) * T::lit(0.5)
            })
            .collect();
        out.extend(roots.into_iter().map(|e| (e, None)));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

/// Inner edges of the spectrum `eps`: largest negative and smallest positive.
fn gap_edges<T: Real>(eps: &[T]) -> (T, T) {
    let lo = eps.iter().copied().filter(|&e| e < T::zero()).fold(T::neg_infinity(), T::max);
    let hi = eps.iter().copied().filter(|&e| e > T::zero()).fold(T::infinity(), T::min);
    (lo, hi)
}

/// All `2L + 1` dressed states for `gamma = kappa` from the pole equation.
/// Hermitian-frame amplitudes are `cbar_m = g u_m(j0) cbar_e / (E - eps_m)`
/// with `u_m = phi_m / sqrt(N_m)`; the lab state is `S psi_bar`, renormalized.
pub fn dressed_state_poles<T: Real>(
    params: &BathParams<T>,
    attach: &EmitterAttachment<T>,
) -> Result<Vec<DressedState<T>>> {
    check_pole_preconditions(params, attach)?;
    let jb = j1bar(params)?;
    let basis = ssh_obc_eigenbasis(jb, params.j2, params.cells)?;
    let (s_diag, _) = similarity_transform(params, attach)?;
    let lab = build_system(&params.with_boundary(Boundary::Open), std::slice::from_ref(attach))?;
    let (j0, alpha, g) = (attach.unit_cell, attach.sublattice, attach.g);
    let u0: Vec<T> = (0..basis.modes())
        .map(|m| basis.amplitude(m, j0, alpha) / basis.norms[m].sqrt())
        .collect();
    let weights: Vec<T> = u0.iter().map(|&u| g * g * u * u).collect();
    let roots = pole_roots(&basis, &weights, attach.delta0, g);
    let (gap_lo, gap_hi) = gap_edges(&basis.epsilon);
    let l = params.cells;
    let half_k = params.half_kappa();
    roots
        .par_iter()
        .map(|&(e, decoupled)| {
            let mut bar = Wavefunction::zeros(1, l);
            match decoupled {
                Some(m) => {
                    let s = T::one() / basis.norms[m].sqrt();
                    for j in 0..l {
                        bar.photons[j] = [re(basis.phi_a[[m, j]] * s), re(basis.phi_b[[m, j]] * s)];
                    }
                }
                None if weights.iter().all(|&w| w == T::zero()) => {
                    bar.emitters[0] = re(T::one());
                }
                None => {
                    bar.emitters[0] = re(T::one());
                    for m in 0..basis.modes() {
                        let c = g * u0[m] / (e - basis.epsilon[m]) / basis.norms[m].sqrt();
                        for j in 0..l {
                            bar.photons[j][0] += re(c * basis.phi_a[[m, j]]);
                            bar.photons[j][1] += re(c * basis.phi_b[[m, j]]);
                        }
                    }
                }
            }
            bar.normalize();
            bar.align_phase();
            let cbar_e = bar.emitters[0];
            let v = bar.to_vector();
            let lab_v: Vec<C<T>> = v.iter().zip(&s_diag).map(|(z, s)| *z * *s).collect();
            let mut psi = Wavefunction::from_vector(&lab_v, 1);
            psi.normalize();
            psi.align_phase();
            let energy = C::new(e, -half_k);
            let res = residual(&lab, energy, &psi);
            Ok(DressedState {
                frame_energy: e,
                energy,
                wavefunction: psi,
                cbar_e: Some(cbar_e),
                in_gap: e > gap_lo && e < gap_hi,
                residual: res,
            })
        })
        .collect()
}

/// The in-gap root of the pole equation with the largest `|cbar_e|^2`.
pub fn dressed_state_in_gap<T: Real>(
    params: &BathParams<T>,
    attach: &EmitterAttachment<T>,
) -> Result<DressedState<T>> {
    dressed_state_poles(params, attach)?
        .into_iter()
        .filter(|d| d.in_gap)
        .max_by(|a, b| {
            let wa = a.cbar_e.map_or(T::zero(), |c| c.norm_sqr());
            let wb = b.cbar_e.map_or(T::zero(), |c| c.norm_sqr());
            wa.partial_cmp(&wb).unwrap()
        })
        .ok_or(Error::NoInGapState)
}

fn on_transition_line<T: Real>(params: &BathParams<T>) -> bool {
    (params.j2 - params.hop_ab()).abs() <= T::lit(1e-12) * (T::one() + params.j1.abs())
}

/// Closed-form dressed state at `E_d = Delta = -i kappa/2` on the line
/// `J2 = J1 - kappa/2` (open chain).
///
/// Attach A: `c_{j,b} = (-1)^{j - j0}` for `j >= j0`, `c_e = -J2 c_{j0,b}/g`.
/// Attach B: `c_{j-1,a} = -J2 c_{j,a}/(J2 + kappa)` for `j <= j0`,
/// `c_e = -(J2 + kappa) c_{j0,a}/g`.
pub fn chiral_extended_analytic<T: Real>(
    params: &BathParams<T>,
    attach: &EmitterAttachment<T>,
) -> Result<Wavefunction<T>> {
    if params.boundary != Boundary::Open {
        return Err(Error::PreconditionViolated("chiral extended state needs OBC".into()));
    }
    if !on_transition_line(params) {
        return Err(Error::PreconditionViolated(format!(
            "chiral extended state needs J2 = J1 - kappa/2, got J2 = {}, J1 - kappa/2 = {}",
            params.j2,
            params.hop_ab()
        )));
    }
    if (attach.detuning() - params.onsite()).norm() > T::lit(1e-12) * (T::one() + params.kappa) {
        return Err(Error::PreconditionViolated(
            "chiral extended state needs delta0 = 0 and gamma = kappa".into(),
        ));
    }
    if !(attach.g > T::zero()) {
        return Err(Error::PreconditionViolated("chiral extended state needs g > 0".into()));
    }
    let (l, j0, g, j2) = (params.cells, attach.unit_cell, attach.g, params.j2);
    if j0 < 1 || j0 > l {
        return Err(Error::AttachmentOutOfRange { cell: j0, cells: l });
    }
    let mut psi = Wavefunction::zeros(1, l);
    match attach.sublattice {
        Sublattice::A => {
            let mut c = T::one();
            for j in j0..=l {
                psi.photons[j - 1][1] = re(c);
                c = -c;
            }
            psi.emitters[0] = re(-j2 / g);
        }
        Sublattice::B => {
            let jk = j2 + params.kappa;
            let ratio = -j2 / jk;
            let mut c = T::one();
            for j in (1..=j0).rev() {
                psi.photons[j - 1][0] = re(c);
                c *= ratio;
            }
            psi.emitters[0] = re(-jk / g);
        }
    }
    psi.normalize();
    psi.align_phase();
    Ok(psi)
}

/// Real-part window of the clean OBC bath gap: the middle pair of bath
/// eigenvalues ordered by real part.
pub fn obc_bath_gap<T: Real>(params: &BathParams<T>) -> Result<(T, T)> {
    let bath = build_bath(&params.with_boundary(Boundary::Open));
    let mut re_parts: Vec<T> = linalg::eigenvalues(&bath.entries.view())?
        .into_iter()
        .map(|z| z.re)
        .collect();
    re_parts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let l = params.cells;
    Ok((re_parts[l - 1], re_parts[l]))
}

/// Eigenvalue of `system` whose real part lies in `gap` with the largest
/// emitter weight (emitter index 0), above `1e-6`.
pub fn select_in_gap<T: Real>(system: &SystemMatrix<T>, gap: (T, T)) -> Result<(C<T>, Wavefunction<T>)> {
    let a = system.entries.view();
    let ne = system.n_emitters();
    let mut best: Option<(T, C<T>, Vec<C<T>>)> = None;
    let mut values = linalg::eigenvalues(&a)?;
    values.sort_by(|x, y| x.re.partial_cmp(&y.re).unwrap().then(x.im.partial_cmp(&y.im).unwrap()));
    for e in values {
        if !(e.re > gap.0 && e.re < gap.1) {
            continue;
        }
        let v = linalg::eigenvector(&a, e)?;
        let w = v[0].norm_sqr();
        if w > T::lit(1e-6) && best.as_ref().is_none_or(|(bw, _, _)| w > *bw) {
            best = Some((w, e, v.to_vec()));
        }
    }
    let (_, e, v) = best.ok_or(Error::NoInGapState)?;
    let mut psi = Wavefunction::from_vector(&v, ne);
    psi.normalize();
    psi.align_phase();
    Ok((e, psi))
}

/// In-gap dressed state from the dense eigenproblem of the full lab-frame
/// system; works for any `gamma`.
pub fn dressed_state_numeric<T: Real>(
    params: &BathParams<T>,
    attach: &EmitterAttachment<T>,
) -> Result<DressedState<T>> {
    let open = params.with_boundary(Boundary::Open);
    let sys = build_system(&open, std::slice::from_ref(attach))?;
    let gap = obc_bath_gap(&open)?;
    let (energy, psi) = select_in_gap(&sys, gap)?;
    let res = residual(&sys, energy, &psi);
    let cbar_e = similarity_transform_matrix(&open, &sys, (attach.unit_cell, attach.sublattice))
        .ok()
        .map(|(s, _)| {
            let bar: Vec<C<T>> = psi.to_vector().iter().zip(&s).map(|(z, s)| *z / *s).collect();
            let n = linalg::vec_norm(&bar);
            bar[0] / n
        });
    Ok(DressedState {
        frame_energy: energy.re,
        energy,
        wavefunction: psi,
        cbar_e,
        in_gap: true,
        residual: res,
    })
}

/// `S^-1 psi` for the single-emitter similarity.
pub fn to_hermitian_frame<T: Real>(
    params: &BathParams<T>,
    attach: &EmitterAttachment<T>,
    psi: &Wavefunction<T>,
) -> Result<Wavefunction<T>> {
    let r = radius(params)?;
    let reference = (attach.unit_cell, attach.sublattice);
    let mut out = psi.clone();
    for (j, c) in out.photons.iter_mut().enumerate() {
        for s in [Sublattice::A, Sublattice::B] {
            let e = similarity_exponent(BasisLabel::Site { cell: j + 1, sublattice: s }, reference);
            c[s.offset()] = c[s.offset()] * r.powi(-e);
        }
    }
    Ok(out)
}

/// Rows `gamma, j, sublattice, abs2` for a sweep over the emitter decay.
pub fn write_sweep_csv<T: Real, W: Write>(out: W, sweep: &[(T, Wavefunction<T>)]) -> Result<()> {
    write_rows(
        out,
        &["gamma", "j", "sublattice", "abs2"],
        sweep.iter().flat_map(|(gamma, psi)| {
            psi.photons.iter().enumerate().flat_map(move |(j, c)| {
                [Sublattice::A, Sublattice::B].into_iter().map(move |s| {
                    vec![
                        fmt_real(*gamma),
                        (j + 1).to_string(),
                        s.label().to_string(),
                        fmt_real(c[s.offset()].norm_sqr()),
                    ]
                })
            })
        }),
    )
}

/// Lab-frame energy of a Hermitian-frame value.
pub fn lab_energy<T: Real>(params: &BathParams<T>, e: T) -> C<T> {
    re(e) + im(-params.half_kappa())
}
