//! One function per experiment; each writes its CSV files through `Output`.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use nhbath::boundstates::{
    bound_state_wavefunction, solve_bound_states, write_wavefunction_csv, BoundStateSearch, Wavefunction,
};
use nhbath::disorder::{
    disorder_ensemble, strength_grid, write_ensemble_csv, write_ensemble_spectrum_csv, DisorderKind, DisorderSpec,
    EnsemblePoint,
};
use nhbath::dressed::{dressed_state_in_gap, dressed_state_numeric, dressed_state_poles, write_sweep_csv, DressedState};
use nhbath::dynamics::{evolve, time_grid, write_snapshots_csv, write_trajectory_csv};
use nhbath::io::{fmt_real, write_rows};
use nhbath::linalg;
use nhbath::model::{build_bath, build_system, BathParams, EmitterAttachment};
use nhbath::spectral::{
    gbz_radius, non_bloch_winding, nontrivial_closed_form, pbc_spectrum, write_pbc_csv, write_spectrum_csv,
};
use nhbath::{Boundary, Complex64, Error, Result, Sublattice};

use crate::config::{Experiment, ExperimentConfig};

/// Destination of the data files: `<prefix><name>`.
pub struct Output {
    prefix: String,
    pub files: Vec<String>,
}

impl Output {
    pub fn new(prefix: &str) -> Result<Self> {
        let dir = if prefix.ends_with('/') {
            Some(Path::new(prefix))
        } else {
            Path::new(prefix).parent()
        };
        if let Some(d) = dir.filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(d)?;
        }
        Ok(Self {
            prefix: prefix.to_string(),
            files: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        PathBuf::from(format!("{}{name}", self.prefix))
    }

    fn write(&mut self, name: &str, f: impl FnOnce(BufWriter<File>) -> Result<()>) -> Result<()> {
        let file = File::create(self.path(name))?;
        f(BufWriter::new(file))?;
        self.files.push(name.to_string());
        Ok(())
    }
}

fn bath(cfg: &ExperimentConfig, boundary: Boundary) -> Result<BathParams<f64>> {
    BathParams::new(cfg.j1, cfg.j2, cfg.kappa, cfg.cells, boundary)
}

fn emitter(cfg: &ExperimentConfig) -> EmitterAttachment<f64> {
    EmitterAttachment::new(cfg.j0, cfg.attach, cfg.g, cfg.delta0, cfg.gamma)
}

fn sorted_eigenvalues(values: Vec<Complex64>) -> Vec<Complex64> {
    let mut v = values;
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    v
}

fn obc_bath_spectrum(p: &BathParams<f64>) -> Result<Vec<Complex64>> {
    let bath = build_bath(&p.with_boundary(Boundary::Open));
    Ok(sorted_eigenvalues(linalg::eigenvalues(&bath.entries.view())?))
}

fn gamma_matches(cfg: &ExperimentConfig) -> bool {
    (cfg.gamma - cfg.kappa).abs() <= 1e-12 * (1.0 + cfg.kappa)
}

pub fn run(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    match cfg.experiment {
        Experiment::Spectrum => spectrum(cfg, out),
        Experiment::Gbz => gbz(cfg, out),
        Experiment::Bound => bound(cfg, out),
        Experiment::Dressed => dressed(cfg, out),
        Experiment::Dynamics => dynamics(cfg, out),
        Experiment::Disorder => disorder(cfg, out),
        Experiment::Fig2 => fig2(cfg, out),
        Experiment::Fig3 => fig3(cfg, out),
        Experiment::Fig4 => fig4(cfg, out),
        Experiment::Fig5 => fig5(cfg, out),
        Experiment::FigS3 => fig_s3(cfg, out),
    }
}

fn spectrum(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let p = bath(cfg, cfg.boundary)?;
    let pts = pbc_spectrum(&p, cfg.nk)?;
    out.write("pbc_spectrum.csv", |w| write_pbc_csv(w, &pts))?;
    let obc = obc_bath_spectrum(&p)?;
    out.write("obc_spectrum.csv", |w| write_spectrum_csv(w, &obc))
}

fn gbz(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let p = bath(cfg, Boundary::Periodic)?;
    let radius = gbz_radius(&p)?;
    let w = non_bloch_winding(&p).ok();
    out.write("gbz_summary.csv", |f| {
        write_rows(
            f,
            &["J1", "J2", "kappa", "radius", "W", "W_closed_form"],
            [vec![
                fmt_real(p.j1),
                fmt_real(p.j2),
                fmt_real(p.kappa),
                fmt_real(radius),
                w.map(|w| w.to_string()).unwrap_or_default(),
                (nontrivial_closed_form(&p) as i32).to_string(),
            ]],
        )
    })?;
    // (J1, kappa) phase diagram on an nk x nk grid
    let n = cfg.nk;
    let mut rows = Vec::with_capacity(n * n);
    for i in 0..n {
        for k in 0..n {
            let j1 = 0.05 + 2.95 * i as f64 / (n - 1) as f64;
            let kappa = 0.05 + 1.9 * k as f64 / (n - 1) as f64;
            let q = BathParams { j1, kappa, ..p };
            let w = non_bloch_winding(&q).ok();
            rows.push(vec![
                fmt_real(j1),
                fmt_real(kappa),
                w.map(|w| w.to_string()).unwrap_or_default(),
                (nontrivial_closed_form(&q) as i32).to_string(),
            ]);
        }
    }
    out.write("phase_diagram.csv", |f| write_rows(f, &["J1", "kappa", "W", "W_closed_form"], rows))
}

fn bound(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let p = bath(cfg, Boundary::Periodic)?;
    let a = emitter(cfg);
    let [re_min, re_max, im_min, im_max] = cfg.search;
    let mut search = BoundStateSearch::new(re_min, re_max, im_min, im_max);
    search.seeds = cfg.seeds;
    let roots = solve_bound_states(&p, &a, &search)?;
    out.write("bound_states.csv", |f| {
        write_rows(
            f,
            &["index", "re", "im", "class", "residual", "emitter_weight"],
            roots.iter().enumerate().map(|(i, r)| {
                vec![
                    i.to_string(),
                    fmt_real(r.energy.re),
                    fmt_real(r.energy.im),
                    format!("{:?}", r.class),
                    fmt_real(r.residual),
                    fmt_real(r.wavefunction.emitter().norm_sqr()),
                ]
            }),
        )
    })?;
    for (i, r) in roots.iter().enumerate() {
        out.write(&format!("bound_state_{i}.csv"), |f| write_wavefunction_csv(f, &r.wavefunction))?;
    }
    Ok(())
}

fn write_poles(out: &mut Output, name: &str, states: &[DressedState<f64>]) -> Result<()> {
    out.write(name, |f| {
        write_rows(
            f,
            &["index", "frame_energy", "re", "im", "in_gap", "emitter_weight"],
            states.iter().enumerate().map(|(i, d)| {
                vec![
                    i.to_string(),
                    fmt_real(d.frame_energy),
                    fmt_real(d.energy.re),
                    fmt_real(d.energy.im),
                    d.in_gap.to_string(),
                    fmt_real(d.wavefunction.emitter().norm_sqr()),
                ]
            }),
        )
    })
}

fn dressed(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let p = bath(cfg, Boundary::Open)?;
    let a = emitter(cfg);
    let sys = build_system(&p, &[a])?;
    let spec = sorted_eigenvalues(linalg::eigenvalues(&sys.entries.view())?);
    out.write("obc_spectrum.csv", |w| write_spectrum_csv(w, &spec))?;
    let state = if gamma_matches(cfg) && cfg.j1 > cfg.kappa / 2.0 {
        let all = dressed_state_poles(&p, &a)?;
        write_poles(out, "dressed_poles.csv", &all)?;
        dressed_state_in_gap(&p, &a)?
    } else {
        dressed_state_numeric(&p, &a)?
    };
    out.write("dressed_energy.csv", |f| {
        write_rows(
            f,
            &["re", "im", "residual"],
            [vec![fmt_real(state.energy.re), fmt_real(state.energy.im), fmt_real(state.residual)]],
        )
    })?;
    out.write("dressed_state.csv", |f| write_wavefunction_csv(f, &state.wavefunction))
}

fn two_emitter_run(
    cfg: &ExperimentConfig,
    out: &mut Output,
    second: Sublattice,
    excite: usize,
    name: &str,
    snapshots: bool,
) -> Result<()> {
    let p = bath(cfg, Boundary::Open)?;
    let a1 = emitter(cfg);
    let a2 = EmitterAttachment::new(cfg.j0_2, second, cfg.g, cfg.delta0, cfg.gamma);
    let sys = build_system(&p, &[a1, a2])?;
    let psi0 = Wavefunction::emitter_excited(excite - 1, 2, cfg.cells);
    let times = time_grid(cfg.t_max, cfg.n_times);
    let traj = evolve(&sys, &psi0, &times)?;
    out.write(&format!("trajectory{name}.csv"), |f| write_trajectory_csv(f, &traj))?;
    if snapshots {
        let every = (cfg.n_times / 20).max(1);
        out.write(&format!("snapshots{name}.csv"), |f| write_snapshots_csv(f, &traj, every))?;
    }
    Ok(())
}

fn dynamics(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    two_emitter_run(cfg, out, cfg.attach2, cfg.excite, "", true)
}

fn fig5(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    for (panel, second, excite) in [
        ("a", Sublattice::A, 1),
        ("b", Sublattice::A, 2),
        ("c", Sublattice::B, 1),
        ("d", Sublattice::B, 2),
    ] {
        two_emitter_run(cfg, out, second, excite, &format!("_{panel}"), false)?;
    }
    Ok(())
}

fn write_ensemble(out: &mut Output, stem: &str, pts: &[EnsemblePoint<f64>]) -> Result<()> {
    out.write(&format!("{stem}_weights.csv"), |f| write_ensemble_csv(f, pts))?;
    out.write(&format!("{stem}_spectrum.csv"), |f| write_ensemble_spectrum_csv(f, pts))?;
    out.write(&format!("{stem}_summary.csv"), |f| {
        write_rows(
            f,
            &["V", "found", "skipped", "mean_re", "left_weight", "left_weight_stderr"],
            pts.iter().map(|q| {
                vec![
                    fmt_real(q.v),
                    q.found.to_string(),
                    q.skipped.to_string(),
                    fmt_real(q.mean_re_energy),
                    fmt_real(q.left_weight),
                    fmt_real(q.left_weight_stderr),
                ]
            }),
        )
    })
}

fn ensemble(cfg: &ExperimentConfig, kind: DisorderKind) -> Result<Vec<EnsemblePoint<f64>>> {
    let p = bath(cfg, Boundary::Open)?;
    let spec = DisorderSpec::new(kind, 0.0, cfg.seed, cfg.n_realizations)?;
    let grid = strength_grid(cfg.j2, cfg.v_max, cfg.v_step);
    disorder_ensemble(&p, &emitter(cfg), &spec, &grid)
}

fn disorder(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let pts = ensemble(cfg, cfg.disorder)?;
    write_ensemble(out, "disorder", &pts)
}

fn fig_s3(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    for kind in [DisorderKind::Diagonal, DisorderKind::OffDiagonal] {
        let pts = ensemble(cfg, kind)?;
        write_ensemble(out, &format!("figS3_{}", kind.name()), &pts)?;
    }
    Ok(())
}

fn weight_rows(tag: &str, psi: &Wavefunction<f64>) -> Vec<Vec<String>> {
    psi.photons
        .iter()
        .enumerate()
        .flat_map(|(j, c)| {
            [Sublattice::A, Sublattice::B].into_iter().map(move |s| {
                vec![
                    tag.to_string(),
                    (j + 1).to_string(),
                    s.label().to_string(),
                    fmt_real(c[s.offset()].norm_sqr()),
                ]
            })
        })
        .collect()
}

fn fig2(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let half = cfg.kappa / 2.0;
    let j0 = cfg.cells / 2;
    // (panel, J1, Delta, weights panel)
    let panels = [
        ("a", 2.5, Complex64::new(0.0, -half), "b"),
        ("c", 0.6, Complex64::new(0.2, -0.4), "d"),
    ];
    let mut energies = Vec::new();
    for (panel, j1, delta, wpanel) in panels {
        let p = BathParams::new(j1, cfg.j2, cfg.kappa, cfg.cells, Boundary::Periodic)?;
        let pts = pbc_spectrum(&p, cfg.nk)?;
        out.write(&format!("pbc_spectrum_{panel}.csv"), |w| write_pbc_csv(w, &pts))?;
        let mut rows = Vec::new();
        for s in [Sublattice::A, Sublattice::B] {
            let a = EmitterAttachment::new(j0, s, cfg.g, delta.re, -2.0 * delta.im);
            let psi = bound_state_wavefunction(&p, &a, delta, cfg.cells)?;
            rows.extend(weight_rows(&s.label().to_string(), &psi));
            energies.push(vec![
                panel.to_string(),
                s.label().to_string(),
                fmt_real(delta.re),
                fmt_real(delta.im),
                fmt_real(psi.emitter().norm_sqr()),
            ]);
        }
        out.write(&format!("bound_weights_{wpanel}.csv"), |f| {
            write_rows(f, &["attach", "j", "sublattice", "abs2"], rows)
        })?;
    }
    out.write("bound_energies.csv", |f| {
        write_rows(f, &["panel", "attach", "re", "im", "emitter_weight"], energies)
    })
}

/// Detunings of the Fig. 3 marker set; the outer ones lie outside the
/// middle OBC gap.
const FIG3_DELTA0: [f64; 7] = [-0.9, -0.6, -0.3, 0.0, 0.3, 0.6, 0.9];

fn fig3(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let p = bath(cfg, Boundary::Open)?;
    let obc = obc_bath_spectrum(&p)?;
    out.write("obc_spectrum.csv", |w| write_spectrum_csv(w, &obc))?;
    let mut energies = Vec::new();
    for s in [Sublattice::A, Sublattice::B] {
        let mut rows = Vec::new();
        for d0 in FIG3_DELTA0 {
            let a = EmitterAttachment::new(cfg.j0, s, cfg.g, d0, cfg.kappa);
            let all = dressed_state_poles(&p, &a)?;
            // in-gap root if present, else the most emitter-like state
            let best = all
                .iter()
                .filter(|d| d.in_gap)
                .max_by(|x, y| x.wavefunction.emitter().norm_sqr().total_cmp(&y.wavefunction.emitter().norm_sqr()))
                .or_else(|| {
                    all.iter().max_by(|x, y| {
                        x.wavefunction.emitter().norm_sqr().total_cmp(&y.wavefunction.emitter().norm_sqr())
                    })
                })
                .ok_or(Error::NoInGapState)?;
            energies.push(vec![
                fmt_real(d0),
                s.label().to_string(),
                fmt_real(best.energy.re),
                fmt_real(best.energy.im),
                best.in_gap.to_string(),
            ]);
            rows.extend(weight_rows(&fmt_real(d0), &best.wavefunction));
        }
        let name = format!("dressed_weights_{}.csv", s.label().to_ascii_uppercase());
        out.write(&name, |f| write_rows(f, &["delta0", "j", "sublattice", "abs2"], rows))?;
    }
    out.write("dressed_energies.csv", |f| {
        write_rows(f, &["delta0", "attach", "re", "im", "in_gap"], energies)
    })
}

const FIG4_GAMMA: [f64; 3] = [0.4, 0.8, 1.0];

fn fig4(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let p = bath(cfg, Boundary::Open)?;
    for s in [Sublattice::A, Sublattice::B] {
        let mut sweep = Vec::new();
        for gamma in FIG4_GAMMA {
            let a = EmitterAttachment::new(cfg.j0, s, cfg.g, cfg.delta0, gamma);
            sweep.push((gamma, dressed_state_numeric(&p, &a)?.wavefunction));
        }
        let name = format!("dressed_weights_{}.csv", s.label().to_ascii_uppercase());
        out.write(&name, |f| write_sweep_csv(f, &sweep))?;
    }
    Ok(())
}
