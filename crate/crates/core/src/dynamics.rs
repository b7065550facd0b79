//! Non-unitary single-excitation dynamics and the two-emitter resolvent.

use std::collections::HashMap;
use std::io::Write;

use ndarray::Array2;
use rayon::prelude::*;

use crate::boundstates::Wavefunction;
use crate::dressed::{j1bar, similarity_exponent, ssh_obc_eigenbasis, SshObcBasis};
use crate::error::{Error, Result};
use crate::io::{fmt_real, write_rows};
use crate::linalg::{self, CMat};
use crate::model::{BasisLabel, BathParams, EmitterAttachment, Sublattice, SystemMatrix};
use crate::scalar::{cplx, im, pairwise_sum, re, Real, C};

/// Eigenvector condition number above which the propagator switches to the
/// matrix exponential.
pub const CONDITION_LIMIT: f64 = 1e10;

#[derive(Debug, Clone)]
pub struct Trajectory<T: Real> {
    pub times: Vec<T>,
    /// `[n_emitters, n_times]`.
    pub emitter_amplitudes: Array2<C<T>>,
    /// `[2L, n_times]` in the order `a_1, b_1, ...`.
    pub photon_amplitudes: Option<Array2<C<T>>>,
    pub norm: Vec<T>,
    pub p_t: Vec<T>,
}

impl<T: Real> Trajectory<T> {
    /// `C_{e,n}(t) = |c_{e_n}(t)|^2`.
    pub fn excitation(&self, n: usize) -> Vec<T> {
        self.emitter_amplitudes.row(n).iter().map(|z| z.norm_sqr()).collect()
    }

    /// State at time index `i`.
    pub fn state(&self, i: usize) -> Option<Wavefunction<T>> {
        let photons = self.photon_amplitudes.as_ref()?;
        let mut v: Vec<C<T>> = self.emitter_amplitudes.column(i).to_vec();
        v.extend(photons.column(i).iter().copied());
        Some(Wavefunction::from_vector(&v, self.emitter_amplitudes.nrows()))
    }
}

fn norm_of<T: Real>(v: &[C<T>]) -> T {
    let w: Vec<T> = v.iter().map(|z| z.norm_sqr()).collect();
    pairwise_sum(&w).sqrt()
}

fn assemble<T: Real>(times: &[T], states: Vec<Vec<C<T>>>, n_emitters: usize) -> Trajectory<T> {
    let nt = times.len();
    let dim = states.first().map_or(n_emitters, |s| s.len());
    let mut em = Array2::from_elem((n_emitters, nt), C::new(T::zero(), T::zero()));
    let mut ph = Array2::from_elem((dim - n_emitters, nt), C::new(T::zero(), T::zero()));
    let mut norm = Vec::with_capacity(nt);
    for (i, s) in states.iter().enumerate() {
        for (k, z) in s.iter().enumerate() {
            if k < n_emitters {
                em[[k, i]] = *z;
            } else {
                ph[[k - n_emitters, i]] = *z;
            }
        }
        norm.push(norm_of(s));
    }
    let p_t = norm.iter().map(|&n| T::one() - n * n).collect();
    Trajectory {
        times: times.to_vec(),
        emitter_amplitudes: em,
        photon_amplitudes: Some(ph),
        norm,
        p_t,
    }
}

/// `|psi_t> = exp(-i H t) |psi_0>` by spectral decomposition; ill-conditioned
/// or defective spectra fall back to matrix exponentials of the time steps.
pub fn evolve<T: Real>(system: &SystemMatrix<T>, psi0: &Wavefunction<T>, times: &[T]) -> Result<Trajectory<T>> {
    let v0 = psi0.to_vector();
    if v0.len() != system.dim() {
        return Err(Error::InvalidParams(format!(
            "initial state has {} components, system has {}",
            v0.len(),
            system.dim()
        )));
    }
    let n0 = norm_of(v0.as_slice().unwrap());
    if (n0 - T::one()).abs() > T::lit(1e-10) {
        return Err(Error::PreconditionViolated(format!("initial state norm {n0} != 1")));
    }
    let ne = system.n_emitters();
    let eig = match linalg::eig(&system.entries.view()) {
        Ok(e) if e.condition < T::lit(CONDITION_LIMIT) => Some(e),
        Ok(e) => {
            log::info!("eigenvector condition {:e}: using matrix exponential", e.condition);
            None
        }
        Err(Error::Defective) => {
            log::info!("defective spectrum: using matrix exponential");
            None
        }
        Err(e) => return Err(e),
    };
    let states: Vec<Vec<C<T>>> = match eig {
        Some(e) => {
            let coeff = linalg::adjoint(&e.left.view()).dot(&v0);
            times
                .par_iter()
                .map(|&t| {
                    if t == T::zero() {
                        return v0.to_vec();
                    }
                    let phased: ndarray::Array1<C<T>> = coeff
                        .iter()
                        .zip(&e.values)
                        .map(|(c, lam)| *c * (im(-t) * *lam).exp())
                        .collect();
                    e.right.dot(&phased).to_vec()
                })
                .collect()
        }
        None => expm_path(&system.entries, v0.as_slice().unwrap(), times),
    };
    Ok(assemble(times, states, ne))
}

fn expm_path<T: Real>(h: &CMat<T>, v0: &[C<T>], times: &[T]) -> Vec<Vec<C<T>>> {
    let mut cache: HashMap<u64, CMat<T>> = HashMap::new();
    let mut out = Vec::with_capacity(times.len());
    let mut cur = ndarray::Array1::from(v0.to_vec());
    let mut t_prev = T::zero();
    for &t in times {
        let dt = t - t_prev;
        if dt != T::zero() {
            let key = dt.to_f64_lossy().to_bits();
            let u = cache
                .entry(key)
                .or_insert_with(|| linalg::expm(&h.mapv(|z| z * im(-dt)).view()));
            cur = u.dot(&cur);
        }
        out.push(cur.to_vec());
        t_prev = t;
    }
    out
}

/// `p_t = 1 - ||psi_t||^2`.
pub fn decay_probability<T: Real>(traj: &Trajectory<T>) -> Vec<T> {
    traj.norm.iter().map(|&n| T::one() - n * n).collect()
}

/// Exchange asymmetry `F = ((J1 + kappa/2)/(J1 - kappa/2))^{(j1 - j2 + [a1 = b] - [a2 = b])/2}`.
pub fn exchange_asymmetry<T: Real>(
    params: &BathParams<T>,
    a1: &EmitterAttachment<T>,
    a2: &EmitterAttachment<T>,
) -> Result<T> {
    if !(params.hop_ab() > T::zero()) {
        return Err(Error::DegenerateGbz);
    }
    let ratio = params.hop_ba() / params.hop_ab();
    let e = a1.unit_cell as i32 - a2.unit_cell as i32 + a1.sublattice.is_b() as i32
        - a2.sublattice.is_b() as i32;
    Ok(ratio.powf(T::from_i32(e).unwrap() * T::lit(0.5)))
}

type Real2<T> = [[T; 2]; 2];

/// Two emitters on the open chain in the Hermitian frame, where the level
/// shift matrix is real symmetric: `Sigma_bar_{nn'}(x) = g_n g_n' sum_m
/// u_m(s_n) u_m(s_n') / (x - eps_m)` with `x = z + i kappa/2`.
#[derive(Debug, Clone)]
pub struct TwoEmitterResolvent<T: Real> {
    basis: SshObcBasis<T>,
    /// `u_m(s_n)` for `n = 0, 1`.
    u: [Vec<T>; 2],
    g: [T; 2],
    delta0: [T; 2],
    half_kappa: T,
    /// Lab-frame scale of each emitter, `S_{e_n} = S_{s_n}`.
    scale: [T; 2],
}

/// A pole `z_k = x_k - i kappa/2` of the constrained propagator with its
/// Hermitian-frame residue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventPole<T> {
    pub x: T,
    pub residue: Real2<T>,
}

fn det2<T: Real>(m: &Real2<T>) -> T {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

fn adj2<T: Real>(m: &Real2<T>) -> Real2<T> {
    [[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]]
}

impl<T: Real> TwoEmitterResolvent<T> {
    pub fn new(params: &BathParams<T>, a1: &EmitterAttachment<T>, a2: &EmitterAttachment<T>) -> Result<Self> {
        for a in [a1, a2] {
            if (a.gamma - params.kappa).abs() > T::lit(1e-12) * (T::one() + params.kappa) {
                return Err(Error::PreconditionViolated(
                    "two-emitter resolvent needs gamma = kappa".into(),
                ));
            }
            if a.unit_cell < 1 || a.unit_cell > params.cells {
                return Err(Error::AttachmentOutOfRange {
                    cell: a.unit_cell,
                    cells: params.cells,
                });
            }
        }
        if a1.unit_cell == a2.unit_cell && a1.sublattice == a2.sublattice {
            return Err(Error::DuplicateAttachment { cell: a1.unit_cell });
        }
        let jb = j1bar(params)?;
        let basis = ssh_obc_eigenbasis(jb, params.j2, params.cells)?;
        let r = (params.hop_ba() / params.hop_ab()).sqrt();
        let u_of = |a: &EmitterAttachment<T>| -> Vec<T> {
            (0..basis.modes())
                .map(|m| basis.amplitude(m, a.unit_cell, a.sublattice) / basis.norms[m].sqrt())
                .collect()
        };
        let scale_of = |a: &EmitterAttachment<T>| {
            let label = BasisLabel::Site {
                cell: a.unit_cell,
                sublattice: a.sublattice,
            };
            r.powi(similarity_exponent(label, (0, Sublattice::A)))
        };
        Ok(Self {
            u: [u_of(a1), u_of(a2)],
            g: [a1.g, a2.g],
            delta0: [a1.delta0, a2.delta0],
            half_kappa: params.half_kappa(),
            scale: [scale_of(a1), scale_of(a2)],
            basis,
        })
    }

    /// Coupling matrix `C_m` of mode `m`.
    fn coupling(&self, m: usize) -> Real2<T> {
        let v = [self.g[0] * self.u[0][m], self.g[1] * self.u[1][m]];
        [[v[0] * v[0], v[0] * v[1]], [v[1] * v[0], v[1] * v[1]]]
    }

    /// `Sigma_bar(x)` for real `x`.
    pub fn level_shift_real(&self, x: T) -> Real2<T> {
        let mut s = [[T::zero(); 2]; 2];
        for m in 0..self.basis.modes() {
            let c = self.coupling(m);
            let d = x - self.basis.epsilon[m];
            for i in 0..2 {
                for j in 0..2 {
                    s[i][j] += c[i][j] / d;
                }
            }
        }
        s
    }

    /// `M(x) = diag(x - delta0) - Sigma_bar(x)`.
    fn m_matrix(&self, x: T) -> Real2<T> {
        let s = self.level_shift_real(x);
        [
            [x - self.delta0[0] - s[0][0], -s[0][1]],
            [-s[1][0], x - self.delta0[1] - s[1][1]],
        ]
    }

    /// `dM/dx = I + sum_m C_m / (x - eps_m)^2`.
    fn m_derivative(&self, x: T) -> Real2<T> {
        let mut d = [[T::one(), T::zero()], [T::zero(), T::one()]];
        for m in 0..self.basis.modes() {
            let c = self.coupling(m);
            let q = x - self.basis.epsilon[m];
            let q2 = q * q;
            for i in 0..2 {
                for j in 0..2 {
                    d[i][j] += c[i][j] / q2;
                }
            }
        }
        d
    }

    /// Number of Hermitian-frame eigenvalues below `x` (Haynsworth inertia:
    /// bath modes below `x` plus positive eigenvalues of `M(x)`).
    fn count_below(&self, x: T) -> usize {
        let below = self.basis.epsilon.iter().filter(|&&e| e < x).count();
        let m = self.m_matrix(x);
        let det = det2(&m);
        let tr = m[0][0] + m[1][1];
        let pos = if det < T::zero() {
            1
        } else if det > T::zero() {
            if tr > T::zero() {
                2
            } else {
                0
            }
        } else {
            (tr > T::zero()) as usize
        };
        below + pos
    }

    fn spectral_bound(&self) -> T {
        let eb = self.basis.epsilon.iter().fold(T::zero(), |a, e| a.max(e.abs()));
        let g = self.g[0].abs() + self.g[1].abs();
        eb.max(self.delta0[0].abs()).max(self.delta0[1].abs()) + g + T::one()
    }

    /// Poles of `G_p` with nonzero residue, ascending in `x`.
    pub fn poles(&self) -> Vec<ResolventPole<T>> {
        let n = self.basis.modes() + 2;
        let b = self.spectral_bound();
        let xs: Vec<T> = (0..n)
            .into_par_iter()
            .map(|k| {
                let (mut lo, mut hi) = (-b, b);
                for _ in 0..400 {
                    let mid = (lo + hi) * T::lit(0.5);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if self.count_below(mid) > k {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                hi
            })
            .collect();
        let tiny = T::lit(1e-28);
        let tol = T::lit(1e-12) * b;
        // bath modes invisible to both emitters are not poles of G_p
        let coupled: Vec<T> = xs
            .into_iter()
            .filter(|&x| {
                !(0..self.basis.modes()).any(|m| {
                    let c = self.coupling(m);
                    (x - self.basis.epsilon[m]).abs() < tol && c[0][0] + c[1][1] < tiny
                })
            })
            .collect();
        let mut out: Vec<ResolventPole<T>> = Vec::new();
        let mut i = 0;
        while i < coupled.len() {
            let x = coupled[i];
            let dm = self.m_derivative(x);
            let residue = if i + 1 < coupled.len() && coupled[i + 1] - x < tol {
                // M(x) vanishes at a doubly degenerate root: Res = M'(x)^-1
                i += 1;
                let d = det2(&dm);
                let a = adj2(&dm);
                [[a[0][0] / d, a[0][1] / d], [a[1][0] / d, a[1][1] / d]]
            } else {
                let a = adj2(&self.m_matrix(x));
                let mut dd = T::zero();
                for p in 0..2 {
                    for q in 0..2 {
                        dd += a[p][q] * dm[q][p];
                    }
                }
                [[a[0][0] / dd, a[0][1] / dd], [a[1][0] / dd, a[1][1] / dd]]
            };
            out.push(ResolventPole { x, residue });
            i += 1;
        }
        out
    }

    /// Lab-frame level-shift matrix `Sigma_2(z)`; off-diagonal entries carry
    /// `S_{e_n}/S_{e_n'}` from the right/left amplitudes.
    pub fn level_shift(&self, z: C<T>) -> [[C<T>; 2]; 2] {
        let x = z + im(self.half_kappa);
        let mut s = [[C::new(T::zero(), T::zero()); 2]; 2];
        for m in 0..self.basis.modes() {
            let c = self.coupling(m);
            let d = x - self.basis.epsilon[m];
            for i in 0..2 {
                for j in 0..2 {
                    s[i][j] += re(c[i][j] * self.scale[i] / self.scale[j]) / d;
                }
            }
        }
        s
    }

    /// `G_p(z) = (z - Delta - Sigma_2(z))^{-1}` as a 2x2 matrix inverse.
    pub fn greens(&self, z: C<T>) -> Result<[[C<T>; 2]; 2]> {
        let s = self.level_shift(z);
        let delta = |n: usize| cplx(self.delta0[n], -self.half_kappa);
        let m = [
            [z - delta(0) - s[0][0], -s[0][1]],
            [-s[1][0], z - delta(1) - s[1][1]],
        ];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let scale = m.iter().flatten().fold(T::zero(), |a, v| a.max(v.norm()));
        if det.norm() <= T::epsilon() * scale * scale {
            return Err(Error::SingularMatrix);
        }
        Ok([[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]])
    }

    /// Lab-frame emitter amplitudes `c_e(t) = sum_k e^{-i z_k t} Res_k c_e(0)`.
    pub fn amplitudes(&self, c0: [C<T>; 2], times: &[T]) -> Vec<[C<T>; 2]> {
        let poles = self.poles();
        // S_E Res S_E^-1 c(0)
        let weights: Vec<[C<T>; 2]> = poles
            .iter()
            .map(|p| {
                let mut w = [C::new(T::zero(), T::zero()); 2];
                for i in 0..2 {
                    for j in 0..2 {
                        w[i] += c0[j] * (p.residue[i][j] * self.scale[i] / self.scale[j]);
                    }
                }
                w
            })
            .collect();
        times
            .par_iter()
            .map(|&t| {
                let decay = (-self.half_kappa * t).exp();
                let mut out = [C::new(T::zero(), T::zero()); 2];
                for (p, w) in poles.iter().zip(&weights) {
                    let ph = C::from_polar(decay, -p.x * t);
                    out[0] += w[0] * ph;
                    out[1] += w[1] * ph;
                }
                out
            })
            .collect()
    }
}

/// `G_p(E)` for two emitters (`gamma = kappa`, open chain).
pub fn two_emitter_greens<T: Real>(
    params: &BathParams<T>,
    a1: &EmitterAttachment<T>,
    a2: &EmitterAttachment<T>,
    e: C<T>,
) -> Result<[[C<T>; 2]; 2]> {
    TwoEmitterResolvent::new(params, a1, a2)?.greens(e)
}

/// Emitter amplitudes from the residue sum; `psi0` must have its
/// excitation on the emitters only.
pub fn emitter_amplitudes_resolvent<T: Real>(
    params: &BathParams<T>,
    a1: &EmitterAttachment<T>,
    a2: &EmitterAttachment<T>,
    psi0: &Wavefunction<T>,
    times: &[T],
) -> Result<Vec<[C<T>; 2]>> {
    if psi0.emitters.len() != 2 {
        return Err(Error::InvalidParams("resolvent path needs two emitters".into()));
    }
    if psi0.photons.iter().flatten().any(|z| z.norm() > T::zero()) {
        return Err(Error::PreconditionViolated(
            "resolvent path needs an emitter-only initial state".into(),
        ));
    }
    let res = TwoEmitterResolvent::new(params, a1, a2)?;
    Ok(res.amplitudes([psi0.emitters[0], psi0.emitters[1]], times))
}

/// `n` evenly spaced times on `[0, t_max]`.
pub fn time_grid<T: Real>(t_max: T, n: usize) -> Vec<T> {
    if n < 2 {
        return vec![T::zero()];
    }
    (0..n)
        .map(|i| t_max * T::from_usize_lossy(i) / T::from_usize_lossy(n - 1))
        .collect()
}

/// Rows `t, C_e1, ..., C_eN, norm, p_t`.
pub fn write_trajectory_csv<T: Real, W: Write>(out: W, traj: &Trajectory<T>) -> Result<()> {
    let ne = traj.emitter_amplitudes.nrows();
    let mut header = vec!["t".to_string()];
    header.extend((1..=ne).map(|n| format!("C_e{n}")));
    header.push("norm".into());
    header.push("p_t".into());
    let header: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    write_rows(
        out,
        &header,
        traj.times.iter().enumerate().map(|(i, &t)| {
            let mut row = vec![fmt_real(t)];
            for n in 0..ne {
                row.push(fmt_real(traj.emitter_amplitudes[[n, i]].norm_sqr()));
            }
            row.push(fmt_real(traj.norm[i]));
            row.push(fmt_real(traj.p_t[i]));
            row
        }),
    )
}

/// Rows `t, j, sublattice, abs2` for every `every`-th time sample.
pub fn write_snapshots_csv<T: Real, W: Write>(out: W, traj: &Trajectory<T>, every: usize) -> Result<()> {
    let every = every.max(1);
    let rows = (0..traj.times.len()).step_by(every).flat_map(|i| {
        let psi = traj.state(i);
        let t = traj.times[i];
        psi.into_iter().flat_map(move |psi| {
            psi.photons
                .into_iter()
                .enumerate()
                .flat_map(move |(j, c)| {
                    [Sublattice::A, Sublattice::B].into_iter().map(move |s| {
                        vec![
                            fmt_real(t),
                            (j + 1).to_string(),
                            s.label().to_string(),
                            fmt_real(c[s.offset()].norm_sqr()),
                        ]
                    })
                })
        })
    });
    write_rows(out, &["t", "j", "sublattice", "abs2"], rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dressed::dressed_state_in_gap;
    use crate::model::{build_system, Boundary};
    use approx::assert_abs_diff_eq;

    fn fig5(cells: usize) -> BathParams<f64> {
        BathParams::new(1.2, 1.0, 0.4, cells, Boundary::Open).unwrap()
    }

    fn em(cell: usize, g: f64) -> EmitterAttachment<f64> {
        EmitterAttachment::new(cell, Sublattice::A, g, 0.0, 0.4)
    }

    #[test]
    fn decoupled_emitter_decays_exponentially() {
        let p = fig5(6);
        let a = EmitterAttachment::new(3, Sublattice::A, 0.0, 0.3, 0.5);
        let sys = build_system(&p, &[a]).unwrap();
        let psi0 = Wavefunction::emitter_excited(0, 1, 6);
        let times = time_grid(10.0, 21);
        let tr = evolve(&sys, &psi0, &times).unwrap();
        assert_eq!(tr.state(0).unwrap(), psi0);
        for (i, &t) in times.iter().enumerate() {
            assert_abs_diff_eq!(tr.excitation(0)[i], (-0.5 * t).exp(), epsilon = 1e-12);
        }
        assert_eq!(decay_probability(&tr)[0], 0.0);
    }

    #[test]
    fn expm_fallback_matches() {
        // Jordan-like: exceptional point of the bath
        let p = BathParams::new(0.6, 1.0, 1.2, 3, Boundary::Open).unwrap();
        let a = EmitterAttachment::new(2, Sublattice::A, 0.3, 0.0, 0.2);
        let sys = build_system(&p, &[a]).unwrap();
        let psi0 = Wavefunction::emitter_excited(0, 1, 3);
        let times = time_grid(5.0, 11);
        let tr = evolve(&sys, &psi0, &times).unwrap();
        let direct = expm_path(&sys.entries, psi0.to_vector().as_slice().unwrap(), &times);
        for (i, s) in direct.iter().enumerate() {
            assert!((s[0] - tr.emitter_amplitudes[[0, i]]).norm() < 1e-10);
        }
        for w in tr.p_t.windows(2) {
            assert!(w[1] - w[0] >= -1e-12);
        }
    }

    #[test]
    fn asymmetry_values() {
        let p = fig5(100);
        let f = exchange_asymmetry(&p, &em(40, 0.4), &em(50, 0.4)).unwrap();
        assert_abs_diff_eq!(f, 1.4f64.powi(-5), epsilon = 1e-14);
        assert_abs_diff_eq!(f, 0.18593, epsilon = 1e-5);
        assert_eq!(exchange_asymmetry(&p, &em(40, 0.4), &em(40, 0.4)).unwrap(), 1.0);
        let b = EmitterAttachment::new(47, Sublattice::B, 0.4, 0.0, 0.4);
        let prod = exchange_asymmetry(&p, &em(40, 0.4), &b).unwrap() * exchange_asymmetry(&p, &b, &em(40, 0.4)).unwrap();
        assert_abs_diff_eq!(prod, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn greens_decoupled_and_asymmetric() {
        let p = fig5(30);
        let z = C::new(0.05, -0.1);
        let g = two_emitter_greens(&p, &em(10, 0.0), &em(15, 0.0), z).unwrap();
        let bare = C::new(1.0, 0.0) / (z - C::new(0.0, -0.2));
        assert!((g[0][0] - bare).norm() < 1e-14);
        assert_eq!(g[0][1], C::new(0.0, 0.0));

        let (a1, a2) = (em(10, 0.4), em(15, 0.4));
        let g = two_emitter_greens(&p, &a1, &a2, z).unwrap();
        let f = exchange_asymmetry(&p, &a1, &a2).unwrap();
        assert_abs_diff_eq!(g[0][1].norm() / g[1][0].norm(), f * f, epsilon = 1e-10);
    }

    #[test]
    fn single_pole_matches_dressed_energy() {
        // a far-away second emitter with g = 0 leaves the first one's pole
        let p = fig5(20);
        let a1 = em(8, 0.4);
        let a2 = em(15, 0.0);
        let res = TwoEmitterResolvent::new(&p, &a1, &a2).unwrap();
        let d = dressed_state_in_gap(&p, &a1).unwrap();
        assert!(res.poles().iter().any(|q| (q.x - d.frame_energy).abs() < 1e-8));
    }

    #[test]
    fn resolvent_matches_propagation() {
        let p = fig5(30);
        let (a1, a2) = (em(10, 0.4), em(15, 0.4));
        let sys = build_system(&p, &[a1, a2]).unwrap();
        let psi0 = Wavefunction::emitter_excited(0, 2, 30);
        let times = time_grid(20.0, 41);
        let tr = evolve(&sys, &psi0, &times).unwrap();
        let rs = emitter_amplitudes_resolvent(&p, &a1, &a2, &psi0, &times).unwrap();
        for (i, c) in rs.iter().enumerate() {
            for n in 0..2 {
                assert!((c[n] - tr.emitter_amplitudes[[n, i]]).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn residues_sum_to_identity() {
        let p = fig5(30);
        for (a1, a2) in [(em(10, 0.4), em(15, 0.4)), (em(4, 0.7), EmitterAttachment::new(20, Sublattice::B, 0.2, 0.3, 0.4))] {
            let poles = TwoEmitterResolvent::new(&p, &a1, &a2).unwrap().poles();
            assert!(poles.len() >= 61 && poles.len() <= 62);
            let mut s = [[0.0; 2]; 2];
            for q in &poles {
                for i in 0..2 {
                    for j in 0..2 {
                        s[i][j] += q.residue[i][j];
                    }
                }
            }
            assert_abs_diff_eq!(s[0][0], 1.0, epsilon = 1e-10);
            assert_abs_diff_eq!(s[1][1], 1.0, epsilon = 1e-10);
            assert_abs_diff_eq!(s[0][1], 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn resolvent_bare_limit() {
        let p = fig5(10);
        let (a1, a2) = (em(3, 0.0), em(7, 0.0));
        let mut psi0 = Wavefunction::zeros(2, 10);
        psi0.emitters = vec![C::new(0.6, 0.0), C::new(0.0, 0.8)];
        let times = [0.0, 1.0, 2.5];
        let rs = emitter_amplitudes_resolvent(&p, &a1, &a2, &psi0, &times).unwrap();
        for (c, &t) in rs.iter().zip(&times) {
            let ph = (C::new(0.0, -1.0) * C::new(0.0, -0.2) * t).exp();
            assert!((c[0] - psi0.emitters[0] * ph).norm() < 1e-12);
            assert!((c[1] - psi0.emitters[1] * ph).norm() < 1e-12);
        }
    }

    #[test]
    fn trajectory_csv_columns() {
        let p = fig5(3);
        let sys = build_system(&p, &[em(1, 0.2), em(3, 0.2)]).unwrap();
        let tr = evolve(&sys, &Wavefunction::emitter_excited(1, 2, 3), &[0.0, 1.0]).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &tr).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("t,C_e1,C_e2,norm,p_t\n0,0,1,1,0\n"));
    }
}
