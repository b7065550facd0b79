//! Seeded Hermitian disorder on the photonic lattice and ensemble averages
//! of the in-gap dressed state.

use std::io::Write;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dressed::{obc_bath_gap, select_in_gap};
use crate::error::{Error, Result};
use crate::io::{fmt_real, write_rows};
use crate::model::{build_bath, build_system, BathParams, Boundary, EmitterAttachment, Sublattice, SystemMatrix};
use crate::scalar::{pairwise_sum, re, Real, C};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DisorderKind {
    /// Random on-site cavity frequencies on both sublattices.
    Diagonal,
    /// Random intracell and intercell hoppings, added symmetrically.
    OffDiagonal,
    /// Random intercell hoppings only.
    Intercell,
}

impl DisorderKind {
    pub fn name(self) -> &'static str {
        match self {
            DisorderKind::Diagonal => "diagonal",
            DisorderKind::OffDiagonal => "offdiagonal",
            DisorderKind::Intercell => "intercell",
        }
    }
}

impl std::str::FromStr for DisorderKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diagonal" => Ok(DisorderKind::Diagonal),
            "offdiagonal" => Ok(DisorderKind::OffDiagonal),
            "intercell" => Ok(DisorderKind::Intercell),
            _ => Err(Error::InvalidParams(format!("unknown disorder kind `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisorderSpec<T> {
    pub kind: DisorderKind,
    /// Draws are uniform on `[-v/2, v/2]`.
    pub v: T,
    pub seed: u64,
    pub n_realizations: usize,
}

impl<T: Real> DisorderSpec<T> {
    pub fn new(kind: DisorderKind, v: T, seed: u64, n_realizations: usize) -> Result<Self> {
        if !(v >= T::zero()) || !v.is_finite() {
            return Err(Error::InvalidParams(format!("disorder strength must be >= 0, got {v}")));
        }
        if n_realizations == 0 {
            return Err(Error::InvalidParams("need at least one realization".into()));
        }
        Ok(Self {
            kind,
            v,
            seed,
            n_realizations,
        })
    }

    pub fn with_strength(mut self, v: T) -> Self {
        self.v = v;
        self
    }

    fn number_of_draws(&self, cells: usize) -> usize {
        match self.kind {
            DisorderKind::Diagonal => 2 * cells,
            DisorderKind::OffDiagonal => 2 * cells - 1,
            DisorderKind::Intercell => cells - 1,
        }
    }
}

/// The raw draws of one realization, in the order they enter the lattice.
/// Realization `r` reads ChaCha8 stream `r` of key `seed`, so every draw is
/// addressed by `(seed, r, position)` independently of scheduling.
pub fn disorder_draws<T: Real>(spec: &DisorderSpec<T>, cells: usize, realization: usize) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(realization as u64);
    let half = T::lit(0.5);
    (0..spec.number_of_draws(cells))
        .map(|_| {
            let u: f64 = rng.random();
            spec.v * (T::lit(u) - half)
        })
        .collect()
}

/// Photonic `2L x 2L` Hermitian perturbation of one realization.
pub fn sample_disorder<T: Real>(
    params: &BathParams<T>,
    spec: &DisorderSpec<T>,
    realization: usize,
) -> Result<SystemMatrix<T>> {
    if realization >= spec.n_realizations {
        return Err(Error::PreconditionViolated(format!(
            "realization {realization} >= n_realizations {}",
            spec.n_realizations
        )));
    }
    let l = params.cells;
    let mut m = Array2::from_elem((2 * l, 2 * l), C::new(T::zero(), T::zero()));
    let d = disorder_draws(spec, l, realization);
    match spec.kind {
        DisorderKind::Diagonal => {
            for (i, e) in d.into_iter().enumerate() {
                m[[i, i]] = re(e);
            }
        }
        DisorderKind::OffDiagonal => {
            let mut it = d.into_iter();
            for j in 0..l {
                let (a, b) = (2 * j, 2 * j + 1);
                let e1 = re(it.next().unwrap());
                m[[a, b]] = e1;
                m[[b, a]] = e1;
                if j + 1 < l {
                    let e2 = re(it.next().unwrap());
                    m[[b, a + 2]] = e2;
                    m[[a + 2, b]] = e2;
                }
            }
        }
        DisorderKind::Intercell => {
            for (j, e) in d.into_iter().enumerate() {
                let (b, a_next) = (2 * j + 1, 2 * j + 2);
                m[[b, a_next]] = re(e);
                m[[a_next, b]] = re(e);
            }
        }
    }
    let basis = build_bath(params).basis;
    Ok(SystemMatrix { entries: m, basis })
}

/// The disordered one-emitter system of one realization (open chain).
pub fn disordered_system<T: Real>(
    params: &BathParams<T>,
    attach: &EmitterAttachment<T>,
    spec: &DisorderSpec<T>,
    realization: usize,
) -> Result<SystemMatrix<T>> {
    let open = params.with_boundary(Boundary::Open);
    let mut sys = build_system(&open, std::slice::from_ref(attach))?;
    let dv = sample_disorder(&open, spec, realization)?;
    let n = dv.dim();
    for i in 0..n {
        for j in 0..n {
            sys.entries[[i + 1, j + 1]] += dv.entries[[i, j]];
        }
    }
    Ok(sys)
}

/// Ensemble statistics at one disorder strength.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsemblePoint<T: Real> {
    pub v: T,
    /// Realizations with an in-gap state.
    pub found: usize,
    /// Realizations skipped for `NoInGapState`.
    pub skipped: usize,
    /// In-gap eigenvalue of each realization.
    pub energies: Vec<Option<C<T>>>,
    pub mean_re_energy: T,
    /// `<|c_j|^2>` per cell, `[a, b]`.
    pub mean_weight: Vec<[T; 2]>,
    pub stderr_weight: Vec<[T; 2]>,
    /// `<sum_{j < j0} |c_j|^2>` and its standard error.
    pub left_weight: T,
    pub left_weight_stderr: T,
}

impl<T: Real> EnsemblePoint<T> {
    pub fn found_fraction(&self) -> T {
        T::from_usize_lossy(self.found) / T::from_usize_lossy(self.found + self.skipped)
    }
}

fn mean_stderr<T: Real>(xs: &[T]) -> (T, T) {
    if xs.is_empty() {
        return (T::nan(), T::nan());
    }
    let n = T::from_usize_lossy(xs.len());
    let mean = pairwise_sum(xs) / n;
    if xs.len() < 2 {
        return (mean, T::zero());
    }
    let dev: Vec<T> = xs.iter().map(|&x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - T::one());
    (mean, (var / n).sqrt())
}

/// Runs `spec.n_realizations` disordered systems at strength `spec.v` and
/// averages the in-gap state (largest emitter weight inside the clean gap).
pub fn disorder_point<T: Real>(
    params: &BathParams<T>,
    attach: &EmitterAttachment<T>,
    spec: &DisorderSpec<T>,
) -> Result<EnsemblePoint<T>> {
    let open = params.with_boundary(Boundary::Open);
    let gap = obc_bath_gap(&open)?;
    let l = open.cells;
    let results: Vec<Result<Option<(C<T>, Vec<T>)>>> = (0..spec.n_realizations)
        .into_par_iter()
        .map(|r| {
            let sys = disordered_system(&open, attach, spec, r)?;
            match select_in_gap(&sys, gap) {
                Ok((e, psi)) => {
                    let w = psi
                        .photons
                        .iter()
                        .flat_map(|c| [c[0].norm_sqr(), c[1].norm_sqr()])
                        .collect();
                    Ok(Some((e, w)))
                }
                Err(Error::NoInGapState) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut energies = Vec::with_capacity(spec.n_realizations);
    let mut weights = Vec::new();
    for r in results {
        match r? {
            Some((e, w)) => {
                energies.push(Some(e));
                weights.push(w);
            }
            None => energies.push(None),
        }
    }
    let found = weights.len();
    let re_e: Vec<T> = energies.iter().flatten().map(|e| e.re).collect();
    let mut mean_weight = vec![[T::zero(); 2]; l];
    let mut stderr_weight = vec![[T::zero(); 2]; l];
    for (site, (mw, sw)) in mean_weight
        .iter_mut()
        .flat_map(|c| c.iter_mut())
        .zip(stderr_weight.iter_mut().flat_map(|c| c.iter_mut()))
        .enumerate()
    {
        let col: Vec<T> = weights.iter().map(|w| w[site]).collect();
        (*mw, *sw) = mean_stderr(&col);
    }
    let j0 = attach.unit_cell;
    let left: Vec<T> = weights
        .iter()
        .map(|w| pairwise_sum(&w[..2 * (j0 - 1)]))
        .collect();
    let (left_weight, left_weight_stderr) = mean_stderr(&left);
    Ok(EnsemblePoint {
        v: spec.v,
        found,
        skipped: spec.n_realizations - found,
        energies,
        mean_re_energy: mean_stderr(&re_e).0,
        mean_weight,
        stderr_weight,
        left_weight,
        left_weight_stderr,
    })
}

/// `disorder_point` over a grid of strengths, same seed at every strength.
pub fn disorder_ensemble<T: Real>(
    params: &BathParams<T>,
    attach: &EmitterAttachment<T>,
    spec: &DisorderSpec<T>,
    v_grid: &[T],
) -> Result<Vec<EnsemblePoint<T>>> {
    v_grid
        .iter()
        .map(|&v| disorder_point(params, attach, &spec.with_strength(v)))
        .collect()
}

/// `{0, 0.25, ..., v_max}` in units of `J2`.
pub fn strength_grid<T: Real>(j2: T, v_max: T, step: T) -> Vec<T> {
    let n = (v_max / step + T::lit(1e-9)).floor().to_f64_lossy() as usize;
    (0..=n).map(|i| T::from_usize_lossy(i) * step * j2).collect()
}

/// Rows `V, j, sublattice, mean, stderr`.
pub fn write_ensemble_csv<T: Real, W: Write>(out: W, points: &[EnsemblePoint<T>]) -> Result<()> {
    let rows = points.iter().flat_map(|p| {
        p.mean_weight
            .iter()
            .zip(&p.stderr_weight)
            .enumerate()
            .flat_map(move |(j, (m, s))| {
                [Sublattice::A, Sublattice::B].into_iter().map(move |sub| {
                    vec![
                        fmt_real(p.v),
                        (j + 1).to_string(),
                        sub.label().to_string(),
                        fmt_real(m[sub.offset()]),
                        fmt_real(s[sub.offset()]),
                    ]
                })
            })
    });
    write_rows(out, &["V", "j", "sublattice", "mean", "stderr"], rows)
}

/// Rows `V, realization, re, im` for realizations with an in-gap state.
pub fn write_ensemble_spectrum_csv<T: Real, W: Write>(out: W, points: &[EnsemblePoint<T>]) -> Result<()> {
    let rows = points.iter().flat_map(|p| {
        p.energies.iter().enumerate().filter_map(move |(r, e)| {
            e.map(|e| vec![fmt_real(p.v), r.to_string(), fmt_real(e.re), fmt_real(e.im)])
        })
    });
    write_rows(out, &["V", "realization", "re", "im"], rows)
}
