use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::checks::Tolerances;
use super::{csv_string, fmt, ExperimentConfig, ExperimentKind, Outcome, Trace};
use crate::error::{Error, Result};
use crate::feedback::{admissible_feedback_check, perturb_across, FeedbackGain, perturb_cross, perturb_double, CompositionReport};
use crate::gramian::{controllability, guaranteed_grid, observability, robustness_sweep, SweepMode, SweepReport};
use crate::linalg::{singular_values, surjectivity_radius};
use crate::random::{self, perturbation_family, FamilyShape, PerturbationFamily, Rng};
use crate::system::{identity_defects, IdentityDefects, Realization, Signal, TimeGrid};

fn grid(cfg: &ExperimentConfig, t_end: f64, steps: usize) -> Result<TimeGrid> {
    let t = cfg.grid.t_end.unwrap_or(t_end);
    let steps = match (cfg.grid.steps, cfg.grid.dt) {
        (Some(s), _) => s,
        (None, Some(dt)) => (t / dt).round().max(1.0) as usize,
        (None, None) => steps,
    };
    TimeGrid::new(t, steps)
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

fn min_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(f64::INFINITY, f64::min)
}

struct IdentityTrial {
    dims: (usize, usize, usize),
    split: usize,
    r: Realization,
    x0: DVector<f64>,
    u: Signal<f64>,
}

/// Piecewise-constant Gaussian input; the last sample repeats the held value.
fn held_input(rng: &mut Rng, g: TimeGrid, m: usize) -> Result<Signal<f64>> {
    let mut values: Vec<DVector<f64>> = (0..g.n_steps()).map(|_| random::gaussian_vector(rng, m)).collect();
    values.push(values[values.len() - 1].clone());
    Signal::new(g, values)
}

pub(super) fn quadruple_identities(cfg: &ExperimentConfig, tol: &Tolerances) -> Result<Outcome> {
    let trials = cfg.trials_or(50);
    let max_n = cfg.dims.max_n.unwrap_or(8);
    let max_io = cfg.dims.max_io.unwrap_or(3);
    let g = grid(cfg, 1.0, 40)?;
    if g.n_steps() < 2 {
        return Err(Error::Usage("identity checks need at least two grid steps".into()));
    }
    let mut rng = cfg.rng();
    let instances = (0..trials)
        .map(|_| {
            let n = rng.random_range(1..=max_n);
            let m = rng.random_range(1..=max_io);
            let p = rng.random_range(1..=max_io);
            let r = random::realization(&mut rng, n, m, p, 1.0)?;
            let x0 = random::gaussian_vector(&mut rng, n);
            let u = held_input(&mut rng, g, m)?;
            let split = rng.random_range(1..g.n_steps());
            Ok(IdentityTrial { dims: (n, m, p), split, r, x0, u })
        })
        .collect::<Result<Vec<_>>>()?;
    let defects: Vec<IdentityDefects> = instances
        .par_iter()
        .map(|t| identity_defects(&t.r, &g, t.split, &t.x0, &t.u))
        .collect::<Result<_>>()?;

    let worst = |f: fn(&IdentityDefects) -> f64| max_of(defects.iter().map(f));
    let assertions = vec![
        tol.check("semigroup", worst(|d| d.semigroup)),
        tol.check("input_split", worst(|d| d.input_split)),
        tol.check("output_shift", worst(|d| d.output_shift)),
        tol.check("io_splice", worst(|d| d.io_splice)),
        tol.check("toeplitz", worst(|d| d.toeplitz)),
    ];
    let csv = csv_string(
        &["trial", "n", "m", "p", "split", "semigroup", "input_split", "output_shift", "io_splice", "toeplitz"],
        instances.iter().zip(&defects).enumerate().map(|(i, (t, d))| {
            vec![
                i.to_string(),
                t.dims.0.to_string(),
                t.dims.1.to_string(),
                t.dims.2.to_string(),
                t.split.to_string(),
                fmt(d.semigroup),
                fmt(d.input_split),
                fmt(d.output_shift),
                fmt(d.io_splice),
                fmt(d.toeplitz),
            ]
        }),
    )?;
    Ok(Outcome {
        assertions,
        payload: json!({
            "trials": trials,
            "max_n": max_n,
            "max_io": max_io,
            "grid": g,
        }),
        traces: vec![Trace { name: "identities.csv".into(), csv }],
    })
}

/// Draws a family, redrawing when unit feedback is not admissible for it.
fn admissible_family<T>(
    rng: &mut Rng,
    max_n: usize,
    max_io: usize,
    redraws: &mut usize,
    mut accept: impl FnMut(&PerturbationFamily) -> Result<Option<T>>,
) -> Result<(PerturbationFamily, T)> {
    for _ in 0..100 {
        let shape = FamilyShape::draw(rng, max_n, max_io);
        let fam = perturbation_family(rng, &shape)?;
        match accept(&fam) {
            Ok(Some(v)) => return Ok((fam, v)),
            Ok(None) | Err(Error::NotAdmissible { .. }) | Err(Error::FeedthroughLoop) => *redraws += 1,
            Err(e) => return Err(e),
        }
    }
    Err(Error::param("no admissible random instance in 100 draws"))
}

#[derive(Serialize)]
struct ComposeRow {
    n: usize,
    m: usize,
    transfer: f64,
    time: f64,
    grid: f64,
}

pub(super) fn compose(cfg: &ExperimentConfig, tol: &Tolerances) -> Result<Outcome> {
    let trials = cfg.trials_or(50);
    let max_n = cfg.dims.max_n.unwrap_or(6);
    let max_io = cfg.dims.max_io.unwrap_or(3);
    let g = grid(cfg, 1.0, 40)?;
    let mut rng = cfg.rng();
    let mut redraws = 0;
    let kind = cfg.kind;
    let run = |f: &PerturbationFamily| -> Result<CompositionReport> {
        match kind {
            ExperimentKind::ComposeAcross => perturb_across(&f.main, &f.pert_b, &g),
            ExperimentKind::ComposeCross => perturb_cross(&f.main, &f.pert_c, &g),
            _ => perturb_double(&f.main, &f.pert_b, &f.pert_c, &f.pert_bc, &g),
        }
    };
    let mut rows = Vec::with_capacity(trials);
    for _ in 0..trials {
        let (fam, rep) = admissible_family(&mut rng, max_n, max_io, &mut redraws, |f| run(f).map(Some))?;
        rows.push(ComposeRow {
            n: fam.main.n(),
            m: fam.main.m(),
            transfer: rep.deviation_transfer,
            time: rep.deviation_time,
            grid: rep.deviation_grid,
        });
    }
    let assertions = vec![
        tol.check("transfer", max_of(rows.iter().map(|r| r.transfer))),
        tol.check("time", max_of(rows.iter().map(|r| r.time))),
    ];
    let csv = csv_string(
        &["trial", "n", "m", "transfer", "time", "grid"],
        rows.iter()
            .enumerate()
            .map(|(i, r)| vec![i.to_string(), r.n.to_string(), r.m.to_string(), fmt(r.transfer), fmt(r.time), fmt(r.grid)]),
    )?;
    Ok(Outcome {
        assertions,
        payload: json!({
            "trials": trials,
            "redraws": redraws,
            "grid": g,
            "lambda_offsets": [1.0, 2.0, 5.0, 10.0],
            // Sample-and-hold products are first order in dt; reported, not asserted.
            "worst_grid_deviation": max_of(rows.iter().map(|r| r.grid)),
        }),
        traces: vec![Trace { name: "compose.csv".into(), csv }],
    })
}

pub(super) fn gain_sweep(cfg: &ExperimentConfig, tol: &Tolerances) -> Result<Outcome> {
    let trials = cfg.trials_or(25);
    let max_n = cfg.dims.max_n.unwrap_or(6);
    let max_io = cfg.dims.max_io.unwrap_or(3);
    let g = grid(cfg, 1.0, 40)?;
    let mode = if cfg.kind == ExperimentKind::K0Sweep { SweepMode::Across } else { SweepMode::Cross };
    let mut rng = cfg.rng();
    let mut redraws = 0;
    let exact = |f: &PerturbationFamily| -> Result<Option<()>> {
        let rep = match mode {
            SweepMode::Across => controllability(&f.pert_b, &g, g.t_end())?,
            SweepMode::Cross => observability(&f.pert_c, &g, g.t_end())?,
        };
        // Admissibility of unit feedback is also required by the bound.
        let adm = admissible_feedback_check(&f.main, &FeedbackGain::scaled_identity(1.0, f.main.m())?, &g)?;
        Ok((rep.exact && adm.admissible).then_some(()))
    };
    let families = (0..trials)
        .map(|_| admissible_family(&mut rng, max_n, max_io, &mut redraws, exact).map(|(f, _)| f))
        .collect::<Result<Vec<_>>>()?;

    let pert = |f: &PerturbationFamily| match mode {
        SweepMode::Across => f.pert_b.clone(),
        SweepMode::Cross => f.pert_c.clone(),
    };
    let sweeps: Vec<(SweepReport, SweepReport)> = families
        .par_iter()
        .map(|f| {
            let p = pert(f);
            let mut design = robustness_sweep(&f.main, &p, &g, mode, None)?;
            if design.k_star.is_none() {
                design.k_star = breakdown_search(&f.main, &p, &g, mode, design.k0)?;
                design.margin = design.k_star.map(|k| k / design.k0);
            }
            let inside = robustness_sweep(&f.main, &p, &g, mode, Some(&guaranteed_grid(design.k0)))?;
            Ok((design, inside))
        })
        .collect::<Result<_>>()?;

    // Worst value inside the guaranteed region, normalized as the mode asserts.
    let inside_measure = |s: &SweepReport| -> f64 {
        let rows = s.rows.iter().filter(|r| r.within_bound);
        match mode {
            SweepMode::Across => min_of(rows.map(|r| r.sigma_min / s.base)),
            SweepMode::Cross => min_of(rows.map(|r| r.sigma_min / s.alpha0.unwrap_or(f64::NAN))),
        }
    };
    // k*/k0 when a breakdown was seen, else the largest probed gain over k0.
    let margin = |s: &SweepReport| -> f64 { s.margin.unwrap_or(2f64.powi(SEARCH_DOUBLINGS)) };
    let inside_worst = min_of(sweeps.iter().map(|(_, s)| inside_measure(s)));
    let margin_worst = min_of(sweeps.iter().map(|(d, _)| margin(d)));
    let inside_name = match mode {
        SweepMode::Across => "relative_sigma_within_bound",
        SweepMode::Cross => "constant_over_alpha0_within_bound",
    };
    let assertions = vec![tol.check(inside_name, inside_worst), tol.check("breakdown_margin", margin_worst)];

    let mut traces = vec![Trace {
        name: "instances.csv".into(),
        csv: csv_string(
            &["trial", "n", "bound", "base", "k_star", "guaranteed_region_holds"],
            sweeps.iter().enumerate().map(|(i, (d, s))| {
                vec![
                    i.to_string(),
                    families[i].main.n().to_string(),
                    fmt(d.k0),
                    fmt(d.base),
                    d.k_star.map(fmt).unwrap_or_default(),
                    s.guaranteed_region_holds.to_string(),
                ]
            }),
        )?,
    }];
    if let Some((d, _)) = sweeps.first() {
        let mut buf = Vec::new();
        d.write_csv(&mut buf)?;
        traces.push(Trace { name: "sweep-0.csv".into(), csv: String::from_utf8(buf).expect("utf-8") });
    }
    let breakdowns = sweeps.iter().filter(|(d, _)| d.k_star.is_some()).count();
    Ok(Outcome {
        assertions,
        payload: json!({
            "trials": trials,
            "redraws": redraws,
            "grid": g,
            "mode": mode,
            "guaranteed_points": 32,
            "instances_with_breakdown": breakdowns,
            "summaries": sweeps.iter().map(|(d, _)| d.summary_json()).collect::<Vec<_>>(),
        }),
        traces,
    })
}

const SEARCH_DOUBLINGS: i32 = 20;

/// First gain `k0 2^j` (`j = 1..=20`) at which the property is lost, counting a
/// singular feedback loop as a loss.
fn breakdown_search(
    main: &Realization,
    pert: &Realization,
    g: &TimeGrid,
    mode: SweepMode,
    k0: f64,
) -> Result<Option<f64>> {
    if !k0.is_finite() {
        return Ok(None);
    }
    for j in 1..=SEARCH_DOUBLINGS {
        let k = k0 * 2f64.powi(j);
        match robustness_sweep(main, pert, g, mode, Some(&[k])) {
            Ok(rep) if rep.k_star.is_some() => return Ok(Some(k)),
            Ok(_) => {}
            Err(Error::FeedthroughLoop | Error::Singular { .. } | Error::NonFinite { .. }) => return Ok(Some(k)),
            Err(e) => return Err(e),
        }
    }
    Ok(None)
}

#[derive(Serialize)]
struct RadiusRow {
    rows: usize,
    cols: usize,
    s0: f64,
    preserved: f64,
    adversarial: f64,
}

pub(super) fn radius(cfg: &ExperimentConfig, tol: &Tolerances) -> Result<Outcome> {
    let trials = cfg.trials_or(100);
    let max_rows = cfg.dims.max_n.unwrap_or(6);
    let probes = 5;
    let mut rng = cfg.rng();
    let mut rows = Vec::with_capacity(trials);
    let mut identity_dev = 0.0f64;
    for _ in 0..trials {
        let r = rng.random_range(1..=max_rows);
        let c = rng.random_range(r..=r + 4);
        let m = random::gaussian(&mut rng, r, c);
        let svd = m.clone().svd(true, true);
        let (imin, &s0) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty matrix");
        let smax = svd.singular_values.max();
        let u = svd.u.as_ref().expect("left vectors").column(imin).into_owned();
        let v = svd.v_t.as_ref().expect("right vectors").row(imin).into_owned();
        identity_dev = identity_dev.max((surjectivity_radius(&m) - s0).abs() / s0);

        let preserved = min_of((0..probes).map(|_| {
            let p = random::with_norm(&mut rng, r, c, 0.99 * s0);
            sigma_min(&(&m + p)) / s0
        }));
        let adversarial = sigma_min(&(&m - &u * &v * s0)) / smax;
        rows.push(RadiusRow { rows: r, cols: c, s0, preserved, adversarial });
    }
    let assertions = vec![
        tol.check("preserved_sigma_ratio", min_of(rows.iter().map(|r| r.preserved))),
        tol.check("adversarial_sigma_ratio", max_of(rows.iter().map(|r| r.adversarial))),
        tol.check("radius_identity", identity_dev),
    ];
    let csv = csv_string(
        &["trial", "rows", "cols", "s0", "preserved_ratio", "adversarial_ratio"],
        rows.iter().enumerate().map(|(i, r)| {
            vec![i.to_string(), r.rows.to_string(), r.cols.to_string(), fmt(r.s0), fmt(r.preserved), fmt(r.adversarial)]
        }),
    )?;
    Ok(Outcome {
        assertions,
        payload: json!({
            "trials": trials,
            "random_probes_per_matrix": probes,
            "probe_norm_factor": 0.99,
            "preserved_failures": rows.iter().filter(|r| !(r.preserved >= tol.get("preserved_sigma_ratio"))).count(),
            "adversarial_failures": rows.iter().filter(|r| !(r.adversarial <= tol.get("adversarial_sigma_ratio"))).count(),
        }),
        traces: vec![Trace { name: "radius.csv".into(), csv }],
    })
}

fn sigma_min(m: &DMatrix<f64>) -> f64 {
    let s = singular_values(m);
    if s.len() < m.nrows() {
        0.0
    } else {
        s.last().copied().unwrap_or(0.0)
    }
}
