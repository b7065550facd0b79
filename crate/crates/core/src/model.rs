//! Hamiltonians of the dissipative SSH bath and of emitters coupled to it, in
//! the single-excitation subspace.
//!
//! Photonic sites are ordered `a_1, b_1, a_2, b_2, ..., a_L, b_L` and unit
//! cells are 1-indexed. Emitters (if any) come first in the system basis.
//! Within a cell the intracell hopping is nonreciprocal: `b_j <- a_j` carries
//! `J1 + kappa/2` and `a_j <- b_j` carries `J1 - kappa/2`. Every photonic site
//! has the on-site loss `-i kappa/2`.

use ndarray::Array2;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{cplx, im, re, Real, C};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    Open,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sublattice {
    A,
    B,
}

impl Sublattice {
    /// Offset of the sublattice inside a unit cell (`a` = 0, `b` = 1).
    #[inline]
    pub fn offset(self) -> usize {
        match self {
            Sublattice::A => 0,
            Sublattice::B => 1,
        }
    }

    #[inline]
    pub fn is_b(self) -> bool {
        self == Sublattice::B
    }

    pub fn label(self) -> char {
        match self {
            Sublattice::A => 'a',
            Sublattice::B => 'b',
        }
    }
}

/// Couplings, loss rate and geometry of the photonic bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathParams<T> {
    /// Intracell hopping.
    pub j1: T,
    /// Intercell hopping.
    pub j2: T,
    /// Nonlocal photon loss rate.
    pub kappa: T,
    /// Number of unit cells.
    pub cells: usize,
    pub boundary: Boundary,
}

impl<T: Real> BathParams<T> {
    pub fn new(j1: T, j2: T, kappa: T, cells: usize, boundary: Boundary) -> Result<Self> {
        let p = Self {
            j1,
            j2,
            kappa,
            cells,
            boundary,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.j1.is_finite() && self.j2.is_finite() && self.kappa.is_finite()) {
            return Err(Error::InvalidParams("non-finite coupling".into()));
        }
        if self.kappa < T::zero() {
            return Err(Error::InvalidParams(format!(
                "kappa must be >= 0, got {}",
                self.kappa
            )));
        }
        if self.cells < 2 {
            return Err(Error::InvalidParams(format!(
                "need at least 2 unit cells, got {}",
                self.cells
            )));
        }
        Ok(())
    }

    pub fn with_cells(mut self, cells: usize) -> Self {
        self.cells = cells;
        self
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    #[inline]
    pub fn half_kappa(&self) -> T {
        self.kappa * T::lit(0.5)
    }

    /// Hopping amplitude `a_j <- b_j`, i.e. `J1 - kappa/2`.
    #[inline]
    pub fn hop_ab(&self) -> T {
        self.j1 - self.half_kappa()
    }

    /// Hopping amplitude `b_j <- a_j`, i.e. `J1 + kappa/2`.
    #[inline]
    pub fn hop_ba(&self) -> T {
        self.j1 + self.half_kappa()
    }

    /// Uniform on-site term `-i kappa/2`.
    #[inline]
    pub fn onsite(&self) -> C<T> {
        im(-self.half_kappa())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        2 * self.cells
    }
}

/// Where an emitter sits and how it couples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmitterAttachment<T> {
    /// 1-indexed unit cell.
    pub unit_cell: usize,
    pub sublattice: Sublattice,
    /// Emitter-photon coupling.
    pub g: T,
    /// Real detuning.
    pub delta0: T,
    /// Emitter decay rate.
    pub gamma: T,
}

impl<T: Real> EmitterAttachment<T> {
    pub fn new(unit_cell: usize, sublattice: Sublattice, g: T, delta0: T, gamma: T) -> Self {
        Self {
            unit_cell,
            sublattice,
            g,
            delta0,
            gamma,
        }
    }

    /// Complex detuning `delta0 - i gamma/2`.
    #[inline]
    pub fn detuning(&self) -> C<T> {
        cplx(self.delta0, -self.gamma * T::lit(0.5))
    }

    /// Index of the attached site inside the photonic block.
    #[inline]
    pub fn photon_index(&self) -> usize {
        photon_index(self.unit_cell, self.sublattice)
    }
}

/// Index of site `(cell, sublattice)` inside the photonic block (cells 1-indexed).
#[inline]
pub fn photon_index(cell: usize, sublattice: Sublattice) -> usize {
    2 * (cell - 1) + sublattice.offset()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisLabel {
    /// Excited emitter `n` (0-based).
    Emitter(usize),
    Site { cell: usize, sublattice: Sublattice },
}

/// Dense single-excitation Hamiltonian together with its basis labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrix<T> {
    pub entries: Array2<C<T>>,
    pub basis: Vec<BasisLabel>,
}

impl<T: Real> SystemMatrix<T> {
    #[inline]
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn n_emitters(&self) -> usize {
        self.basis
            .iter()
            .filter(|b| matches!(b, BasisLabel::Emitter(_)))
            .count()
    }

    pub fn index_of(&self, label: BasisLabel) -> Option<usize> {
        self.basis.iter().position(|&b| b == label)
    }

    /// Relabels the basis: new basis element `i` is old element `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.dim();
        if perm.len() != n {
            return Err(Error::InvalidParams("permutation length mismatch".into()));
        }
        let mut seen = vec![false; n];
        for &p in perm {
            if p >= n || seen[p] {
                return Err(Error::InvalidParams("not a permutation".into()));
            }
            seen[p] = true;
        }
        let entries = Array2::from_shape_fn((n, n), |(i, j)| self.entries[[perm[i], perm[j]]]);
        let basis = perm.iter().map(|&p| self.basis[p]).collect();
        Ok(Self { entries, basis })
    }

    /// Hermitian part `(M + M^†)/2`.
    pub fn hermitian_part(&self) -> Array2<C<T>> {
        let m = &self.entries;
        let half = T::lit(0.5);
        Array2::from_shape_fn(m.dim(), |(i, j)| (m[[i, j]] + m[[j, i]].conj()) * half)
    }

    /// Anti-Hermitian part `(M - M^†)/(2i)`, itself a Hermitian matrix.
    pub fn anti_hermitian_part(&self) -> Array2<C<T>> {
        let m = &self.entries;
        let denom = im(T::lit(2.0));
        Array2::from_shape_fn(m.dim(), |(i, j)| (m[[i, j]] - m[[j, i]].conj()) / denom)
    }
}

fn photon_basis(cells: usize) -> impl Iterator<Item = BasisLabel> {
    (1..=cells).flat_map(|cell| {
        [Sublattice::A, Sublattice::B]
            .into_iter()
            .map(move |sublattice| BasisLabel::Site { cell, sublattice })
    })
}

/// Writes the bath hoppings into `m`, offset by `off` rows/columns.
fn fill_bath<T: Real>(params: &BathParams<T>, m: &mut Array2<C<T>>, off: usize) {
    let l = params.cells;
    let onsite = params.onsite();
    let (ab, ba, j2) = (re(params.hop_ab()), re(params.hop_ba()), re(params.j2));
    for j in 0..l {
        let a = off + 2 * j;
        let b = a + 1;
        m[[a, a]] = onsite;
        m[[b, b]] = onsite;
        m[[a, b]] = ab;
        m[[b, a]] = ba;
        if j + 1 < l {
            m[[b, a + 2]] = j2;
            m[[a + 2, b]] = j2;
        }
    }
    if params.boundary == Boundary::Periodic {
        let a1 = off;
        let bl = off + 2 * l - 1;
        m[[bl, a1]] = m[[bl, a1]] + j2;
        m[[a1, bl]] = m[[a1, bl]] + j2;
    }
}

/// Photon-only bath Hamiltonian, `2L x 2L`.
pub fn build_bath<T: Real>(params: &BathParams<T>) -> SystemMatrix<T> {
    let n = params.dim();
    let mut entries = Array2::from_elem((n, n), C::<T>::new(T::zero(), T::zero()));
    fill_bath(params, &mut entries, 0);
    SystemMatrix {
        entries,
        basis: photon_basis(params.cells).collect(),
    }
}

/// 2x2 Bloch Hamiltonian in the `(a_k, b_k)` basis.
pub type Mat2<T> = [[C<T>; 2]; 2];

/// Bloch Hamiltonian
/// `H_k = -i(kappa/2) tau_0 + (J1 + J2 cos k) tau_x + (J2 sin k - i kappa/2) tau_y`.
pub fn build_bloch<T: Real>(params: &BathParams<T>, k: T) -> Mat2<T> {
    let onsite = params.onsite();
    let phase = Complex::from_polar(T::one(), -k);
    let j2 = re(params.j2);
    [
        [onsite, j2 * phase + params.hop_ab()],
        [j2 * phase.conj() + params.hop_ba(), onsite],
    ]
}

/// Coupled emitters + bath matrix with basis `[e_1..e_N, a_1, b_1, ..., a_L, b_L]`.
pub fn build_system<T: Real>(
    params: &BathParams<T>,
    emitters: &[EmitterAttachment<T>],
) -> Result<SystemMatrix<T>> {
    params.validate()?;
    let l = params.cells;
    for (i, e) in emitters.iter().enumerate() {
        if e.unit_cell < 1 || e.unit_cell > l {
            return Err(Error::AttachmentOutOfRange {
                cell: e.unit_cell,
                cells: l,
            });
        }
        if emitters[..i]
            .iter()
            .any(|o| o.unit_cell == e.unit_cell && o.sublattice == e.sublattice)
        {
            return Err(Error::DuplicateAttachment { cell: e.unit_cell });
        }
    }
    let ne = emitters.len();
    let n = ne + params.dim();
    let mut entries = Array2::from_elem((n, n), C::<T>::new(T::zero(), T::zero()));
    fill_bath(params, &mut entries, ne);
    for (i, e) in emitters.iter().enumerate() {
        let s = ne + e.photon_index();
        entries[[i, i]] = e.detuning();
        entries[[i, s]] = re(e.g);
        entries[[s, i]] = re(e.g);
    }
    let basis = (0..ne)
        .map(BasisLabel::Emitter)
        .chain(photon_basis(l))
        .collect();
    Ok(SystemMatrix { entries, basis })
}
