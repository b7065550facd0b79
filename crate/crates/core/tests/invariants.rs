use nhbath::boundstates::Wavefunction;
use nhbath::disorder::{disordered_system, DisorderKind, DisorderSpec};
use nhbath::dressed::{dressed_state_poles, similarity_transform};
use nhbath::dynamics::{evolve, time_grid};
use nhbath::linalg;
use nhbath::model::{build_bath, build_system, BathParams, EmitterAttachment};
use nhbath::spectral::{bloch_eigenvalues, gbz_data};
use nhbath::{Boundary, Complex64, Sublattice};
use proptest::prelude::*;

fn sublattice() -> impl Strategy<Value = Sublattice> {
    prop_oneof![Just(Sublattice::A), Just(Sublattice::B)]
}

/// Greedy multiset distance: max over `a` of the distance to its nearest
/// unused partner in `b`.
fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (k, d) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, y)| (k, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}

fn spectrum(m: &ndarray::Array2<Complex64>) -> Vec<Complex64> {
    linalg::eigenvalues(&m.view()).unwrap()
}

/// Eigenvalues of a Hermitian matrix via the general solver (real parts).
fn hermitian_spectrum(m: &ndarray::Array2<Complex64>) -> Vec<f64> {
    spectrum(m).into_iter().map(|z| z.re).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn anti_hermitian_part_is_nsd(
        j1 in 0.1..3.0f64, j2 in 0.2..2.0f64, kappa in 0.0..2.0f64, gamma in 0.0..2.0f64,
        g in 0.0..1.0f64, d0 in -1.0..1.0f64, l in 2usize..8, s in sublattice(), periodic in any::<bool>(),
    ) {
        let bc = if periodic { Boundary::Periodic } else { Boundary::Open };
        let p = BathParams::new(j1, j2, kappa, l, bc).unwrap();
        let sys = build_system(&p, &[EmitterAttachment::new(1 + l / 2, s, g, d0, gamma)]).unwrap();
        for ev in hermitian_spectrum(&sys.anti_hermitian_part()) {
            prop_assert!(ev <= 1e-12, "eigenvalue {ev}");
        }
    }

    #[test]
    fn lossless_system_is_hermitian(
        j1 in 0.1..3.0f64, j2 in 0.2..2.0f64, g in 0.0..1.0f64, l in 2usize..8, s in sublattice(),
    ) {
        let p = BathParams::new(j1, j2, 0.0, l, Boundary::Open).unwrap();
        let sys = build_system(&p, &[EmitterAttachment::new(1, s, g, 0.3, 0.0)]).unwrap();
        let m = &sys.entries;
        for i in 0..sys.dim() {
            for j in 0..sys.dim() {
                prop_assert_eq!(m[[i, j]], m[[j, i]].conj());
            }
        }
    }

    #[test]
    fn pbc_bath_matches_bloch_bands(
        j1 in 0.1..3.0f64, j2 in 0.2..2.0f64, kappa in 0.0..2.0f64, l in 3usize..12,
    ) {
        let p = BathParams::new(j1, j2, kappa, l, Boundary::Periodic).unwrap();
        let dense = spectrum(&build_bath(&p).entries);
        let bloch: Vec<Complex64> = (0..l)
            .flat_map(|m| bloch_eigenvalues(&p, 2.0 * std::f64::consts::PI * m as f64 / l as f64))
            .collect();
        // exceptional points make the dense eigenvalues sqrt(eps) sensitive
        let sep = bloch
            .chunks(2)
            .map(|b| (b[0] - b[1]).norm())
            .fold(f64::INFINITY, f64::min);
        prop_assume!(sep > 1e-3);
        prop_assert!(multiset_distance(&dense, &bloch) < 1e-10);
    }

    #[test]
    fn permutation_preserves_spectrum(
        j1 in 0.1..3.0f64, kappa in 0.0..2.0f64, g in 0.1..1.0f64, l in 2usize..6,
        s in sublattice(), seed in any::<u64>(),
    ) {
        let p = BathParams::new(j1, 1.0, kappa, l, Boundary::Open).unwrap();
        let sys = build_system(&p, &[EmitterAttachment::new(l, s, g, 0.1, kappa)]).unwrap();
        let mut perm: Vec<usize> = (0..sys.dim()).collect();
        // Fisher-Yates from a splitmix-style sequence
        let mut x = seed;
        for i in (1..perm.len()).rev() {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (x >> 33) as usize % (i + 1));
        }
        let q = sys.permuted(&perm).unwrap();
        let a = spectrum(&sys.entries);
        let b = spectrum(&q.entries);
        let scale = 1.0 + j1 + kappa + g;
        prop_assert!(multiset_distance(&a, &b) < 1e-6 * scale);
    }

    #[test]
    fn beta_product_identity(
        j1 in 0.7..3.0f64, j2 in 0.2..2.0f64, kappa in 0.0..1.2f64, er in -4.0..4.0f64, ei in -2.0..2.0f64,
    ) {
        let p = BathParams::new(j1, j2, kappa, 10, Boundary::Periodic).unwrap();
        let d = gbz_data(&p, Complex64::new(er, ei)).unwrap();
        let expect = (j1 + kappa / 2.0) / (j1 - kappa / 2.0);
        prop_assert!(((d.beta1 * d.beta2) - expect).norm() < 1e-10 * expect);
    }

    #[test]
    fn obc_spectrum_even_in_kappa(
        j1 in 0.8..3.0f64, j2 in 0.2..2.0f64, kappa in 0.0..1.5f64, l in 2usize..10,
    ) {
        let plus = BathParams::new(j1, j2, kappa, l, Boundary::Open).unwrap();
        let minus = BathParams { kappa: -kappa, ..plus };
        // H + i kappa/2 shares its spectrum under kappa -> -kappa
        let shift = |p: &BathParams<f64>| {
            let mut m = build_bath(p).entries;
            for i in 0..m.nrows() {
                m[[i, i]] += Complex64::new(0.0, p.kappa / 2.0);
            }
            spectrum(&m)
        };
        prop_assert!(multiset_distance(&shift(&plus), &shift(&minus)) < 1e-8);
    }

    #[test]
    fn similarity_frame_keeps_spectrum(
        j1 in 0.8..2.5f64, kappa in 0.1..1.4f64, g in 0.1..1.0f64, l in 2usize..8, s in sublattice(),
    ) {
        let p = BathParams::new(j1, 1.0, kappa, l, Boundary::Open).unwrap();
        let a = EmitterAttachment::new(1 + l / 2, s, g, 0.2, kappa);
        let lab = build_system(&p, &[a]).unwrap();
        let (_, frame) = similarity_transform(&p, &a).unwrap();
        prop_assert!(multiset_distance(&spectrum(&lab.entries), &spectrum(&frame.entries)) < 1e-10);
    }

    #[test]
    fn pole_equation_has_2l_plus_1_roots(
        j1 in 0.8..2.5f64, kappa in 0.1..1.4f64, g in 0.05..1.0f64, d0 in -1.5..1.5f64,
        l in 2usize..12, s in sublattice(),
    ) {
        let p = BathParams::new(j1, 1.0, kappa, l, Boundary::Open).unwrap();
        let a = EmitterAttachment::new(1 + l / 2, s, g, d0, kappa);
        let poles = dressed_state_poles(&p, &a).unwrap();
        prop_assert_eq!(poles.len(), 2 * l + 1);
        let dense = spectrum(&build_system(&p, &[a]).unwrap().entries);
        let from_poles: Vec<Complex64> = poles.iter().map(|d| d.energy).collect();
        prop_assert!(multiset_distance(&from_poles, &dense) < 1e-7);
    }

    #[test]
    fn evolution_norm_nonincreasing(
        j1 in 0.1..2.5f64, kappa in 0.0..1.5f64, gamma in 0.0..1.5f64, g in 0.0..1.0f64,
        l in 2usize..8, s in sublattice(),
    ) {
        let p = BathParams::new(j1, 1.0, kappa, l, Boundary::Open).unwrap();
        let sys = build_system(&p, &[EmitterAttachment::new(1, s, g, 0.0, gamma)]).unwrap();
        let psi0 = Wavefunction::emitter_excited(0, 1, l);
        let traj = evolve(&sys, &psi0, &time_grid(10.0, 51)).unwrap();
        for w in traj.norm.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-10, "{} -> {}", w[0], w[1]);
        }
        prop_assert!((traj.norm[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disorder_keeps_anti_hermitian_part(
        v in 0.0..2.0f64, seed in any::<u64>(), r in 0usize..4, kind_ix in 0usize..3,
    ) {
        let kind = [DisorderKind::Diagonal, DisorderKind::OffDiagonal, DisorderKind::Intercell][kind_ix];
        let p = BathParams::new(1.6, 1.0, 1.2, 6, Boundary::Open).unwrap();
        let a = EmitterAttachment::new(3, Sublattice::A, 0.5, 0.0, 1.2);
        let clean = build_system(&p, &[a]).unwrap().anti_hermitian_part();
        let spec = DisorderSpec::new(kind, v, seed, 4).unwrap();
        let dirty = disordered_system(&p, &a, &spec, r).unwrap().anti_hermitian_part();
        let diff = (&clean - &dirty).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(diff < 1e-14);
    }
}
