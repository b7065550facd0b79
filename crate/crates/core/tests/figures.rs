//! Qualitative checks on the figure parameter sets.

use nhbath::disorder::{disorder_point, DisorderKind, DisorderSpec};
use nhbath::dressed::dressed_state_numeric;
use nhbath::model::{BathParams, EmitterAttachment};
use nhbath::{Boundary, Sublattice};

#[test]
fn fig4_chirality_survives_gamma_below_kappa() {
    let p = BathParams::new(1.6, 1.0, 1.2, 40, Boundary::Open).unwrap();
    for gamma in [0.4, 0.8, 1.0] {
        let a = EmitterAttachment::new(10, Sublattice::A, 0.5, 0.0, gamma);
        let d = dressed_state_numeric(&p, &a).unwrap();
        let left = d.wavefunction.weight_left_of(10);
        let right = d.wavefunction.weight_right_of(10);
        assert!(left < 0.05 * right, "gamma {gamma}: left {left:.3e}, right {right:.3e}");
        assert!(d.residual < 1e-8);
    }
}

#[test]
fn ensemble_error_shrinks_like_inverse_sqrt_n() {
    let p = BathParams::new(1.6, 1.0, 1.2, 40, Boundary::Open).unwrap();
    let a = EmitterAttachment::new(10, Sublattice::A, 0.5, 0.0, 1.2);
    let stderr = |n: usize| {
        let spec = DisorderSpec::new(DisorderKind::Diagonal, 1.0, 11, n).unwrap();
        let pt = disorder_point(&p, &a, &spec).unwrap();
        assert_eq!(pt.found, n);
        pt.stderr_weight.iter().map(|w| w[0] + w[1]).sum::<f64>()
    };
    let (s250, s500, s1000) = (stderr(250), stderr(500), stderr(1000));
    let sqrt2 = 2f64.sqrt();
    for (ratio, want) in [(s250 / s500, sqrt2), (s500 / s1000, sqrt2), (s250 / s1000, 2.0)] {
        assert!((ratio / want - 1.0).abs() < 0.25, "ratio {ratio:.3} vs {want:.3}");
    }
}
