//! Acceptance criteria, one test per criterion. Each prints a single
//! `criterion N: PASS|FAIL ...` line.
//!
//! The tests share one lock so that timings are not disturbed by each other.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Mutex;
use std::time::Instant;

use frostsim::fem::{collect_dirichlet, implicit_step, Discretization, TemperatureField};
use frostsim::linalg::CgSettings;
use frostsim::mesh::{generate_box, BoxMeshSpec};
use frostsim::physics::{air_temperature, ColumnMode, MaterialTable, PhaseModel, SeasonalForcing};
use frostsim::simulate::scenario::{default_materials, thaw_radius, well_site_config, WellSite};
use frostsim::simulate::{Simulation, SimulationConfig};
use frostsim::verify::{
    refinement_levels, run_neumann_benchmark, spatial_study, temporal_study, ManufacturedSolution,
};

static SERIAL: Mutex<()> = Mutex::new(());

fn verdict(criterion: u32, pass: bool, detail: String) {
    let word = if pass { "PASS" } else { "FAIL" };
    println!("criterion {criterion}: {word} {detail}");
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn lock() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

const DAY: f64 = 86400.0;

#[test]
fn criterion_1_neumann_front() {
    let _g = lock();
    let started = Instant::now();
    let beta = 1.0;
    let errors: Vec<f64> = refinement_levels(beta)
        .unwrap()
        .iter()
        .map(|&(cells, tau, delta)| {
            let r = run_neumann_benchmark(cells, tau, delta, beta).unwrap();
            assert!(
                r.front_is_monotone(),
                "front moved backwards at {cells} cells"
            );
            r.max_relative_error
        })
        .collect();
    let elapsed = started.elapsed().as_secs_f64();
    let monotone = errors.windows(2).all(|w| w[1] < w[0]);
    let finest = errors[2];
    verdict(
        1,
        finest <= 0.05 && monotone && elapsed <= 120.0,
        format!(
            "front errors {:.4} > {:.4} > {:.4} (finest <= 0.05, decreasing), {elapsed:.1} s (<= 120 s)",
            errors[0], errors[1], errors[2]
        ),
    );
}

#[test]
fn criterion_2_mms_orders() {
    let _g = lock();
    let started = Instant::now();
    let sol = ManufacturedSolution::default();
    let t_end = sol.decay_time;
    let space = spatial_study(&sol, &[4, 8, 16], 4, t_end).unwrap();
    let time = temporal_study(&sol, 8, &[4, 8, 16], 256, t_end).unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    let (p, q) = (space.observed_order(), time.observed_order());
    verdict(
        2,
        p >= 1.8 && q >= 0.9 && space.is_monotone() && time.is_monotone() && elapsed <= 120.0,
        format!(
            "spatial order {p:.3} (>= 1.8, orders {:?}), temporal order {q:.3} (>= 0.9, orders {:?}), {elapsed:.1} s (<= 120 s)",
            space.orders, time.orders
        ),
    );
}

#[test]
fn criterion_3_maximum_principle() {
    let _g = lock();
    let mesh = generate_box(&BoxMeshSpec::new([4.0, 4.0, 4.0], [8, 8, 8]), 1).unwrap();
    let soil = default_materials()["1"];
    let table = MaterialTable::new(BTreeMap::from([(1, soil)]), PhaseModel::default()).unwrap();
    let dirichlet =
        collect_dirichlet(&mesh, &[(1, 20.0), (2, -20.0), (6, 20.0), (5, -20.0)]).unwrap();
    let disc = Discretization::new(mesh).unwrap();
    let settings = CgSettings {
        tol: 1e-12,
        max_iter: 10_000,
    };
    let mut field = TemperatureField::uniform(disc.mesh().num_nodes(), -5.0).unwrap();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..500 {
        let (next, report) =
            implicit_step(&disc, &field, &table, DAY, &dirichlet, None, &settings).unwrap();
        assert!(report.converged);
        let (min, max, _) = next.stats();
        lo = lo.min(min);
        hi = hi.max(max);
        field = next;
    }
    verdict(
        3,
        lo >= -20.0 - 1e-9 && hi <= 20.0 + 1e-9,
        format!("500 steps, nodal range [{lo:.12}, {hi:.12}] within [-20, 20] + 1e-9"),
    );
}

#[test]
fn criterion_4_conservation() {
    let _g = lock();
    let mesh = generate_box(&BoxMeshSpec::new([2.0, 1.0, 1.0], [8, 4, 4]), 1).unwrap();
    let soil = default_materials()["1"];
    let phase = PhaseModel::new(0.0, 1.0, 0.0).unwrap();
    let table = MaterialTable::new(BTreeMap::from([(1, soil)]), phase).unwrap();
    let disc = Discretization::new(mesh).unwrap();
    let settings = CgSettings {
        tol: 1e-12,
        max_iter: 10_000,
    };
    let initial: Vec<f64> = disc
        .mesh()
        .nodes()
        .iter()
        .map(|p| 7.0 + 5.0 * (PI * p[0]).sin() * (2.0 * PI * p[1]).cos() + p[2])
        .collect();
    assert!(
        initial.iter().all(|&v| v > 1.0),
        "initial field must avoid the smoothing interval"
    );
    let mut field = TemperatureField::new(initial, 0.0).unwrap();
    let none = Default::default();
    let content = |f: &TemperatureField| {
        let cap = disc.lumped_capacity(f, &table).unwrap();
        cap.iter().zip(&f.values).map(|(c, t)| c * t).sum::<f64>()
    };
    let h0 = content(&field);
    let mut drift: f64 = 0.0;
    for _ in 0..100 {
        let (next, report) =
            implicit_step(&disc, &field, &table, DAY, &none, None, &settings).unwrap();
        assert!(report.converged);
        field = next;
        drift = drift.max(((content(&field) - h0) / h0).abs());
    }
    verdict(
        4,
        drift <= 1e-8,
        format!("relative heat-content drift {drift:.3e} over 100 steps (<= 1e-8)"),
    );
}

fn scenario_config(mode: ColumnMode, workers: usize, t_max_days: f64) -> SimulationConfig {
    let mut cfg = well_site_config(WellSite::default());
    cfg.controller.mode = mode;
    cfg.time.tau = DAY;
    cfg.time.t_max = t_max_days * DAY;
    cfg.solver.workers = workers;
    cfg
}

/// Day in the second year when the air temperature falls through 0 °C.
fn end_of_second_summer(forcing: &SeasonalForcing) -> usize {
    (366..730)
        .find(|&d| {
            air_temperature(d as f64 * DAY, forcing) >= 0.0
                && air_temperature((d + 1) as f64 * DAY, forcing) < 0.0
        })
        .expect("air temperature crosses zero every autumn")
}

#[test]
fn criterion_5_columns_reduce_thawing() {
    let _g = lock();
    let started = Instant::now();
    let depth = -7.0;
    let mut radii = Vec::new();
    let mut cells = 0;
    let mut day = 0;
    for mode in [ColumnMode::Seasonal, ColumnMode::AlwaysOff] {
        let cfg = scenario_config(mode, 0, 730.0);
        day = end_of_second_summer(&cfg.forcing);
        let mut sim = Simulation::new(&cfg).unwrap();
        cells = sim.mesh().num_cells();
        let mut radius = f64::NAN;
        while !sim.is_finished() {
            let rec = sim.step().unwrap();
            if rec.step == day {
                radius = thaw_radius(sim.mesh(), sim.field(), [0.0, 0.0], depth, 0.0);
            }
        }
        radii.push(radius);
    }
    let elapsed = started.elapsed().as_secs_f64();
    verdict(
        5,
        radii[0] < radii[1] && elapsed <= 900.0,
        format!(
            "{cells} cells, day {day}, thaw radius at {depth} m: seasonal {:.3} m < always_off {:.3} m, {elapsed:.0} s (<= 900 s)",
            radii[0], radii[1]
        ),
    );
}

fn step_time(workers: usize, steps: usize) -> f64 {
    let cfg = scenario_config(ColumnMode::Seasonal, workers, steps as f64);
    let mut sim = Simulation::new(&cfg).unwrap();
    sim.step().unwrap();
    let mut total = 0.0;
    while !sim.is_finished() {
        total += sim.step().unwrap().report.wall_time;
    }
    total / (steps - 1) as f64
}

#[test]
fn criterion_6_parallel_speedup() {
    let _g = lock();
    let cpus = std::thread::available_parallelism().map_or(1, |n| n.get());
    let t1 = step_time(1, 6);
    let t4 = step_time(4, 6);
    let speedup = t1 / t4;
    verdict(
        6,
        speedup >= 1.5,
        format!(
            "assemble+solve per step {:.1} ms on 1 worker, {:.1} ms on 4 workers, speedup {speedup:.2} (>= 1.5), {cpus} CPUs available",
            1e3 * t1,
            1e3 * t4
        ),
    );
}

#[test]
fn criterion_7_determinism() {
    let _g = lock();
    let run = |dir: &std::path::Path| {
        let mut cfg = scenario_config(ColumnMode::Seasonal, 2, 6.0);
        cfg.output.dir = dir.to_path_buf();
        cfg.output.cadence = 3;
        frostsim::simulate::run(&cfg).unwrap();
        let mut files: Vec<_> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("vtk" | "csv")))
            .collect();
        files.sort();
        files
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (fa, fb) = (run(a.path()), run(b.path()));
    let names = |v: &[std::path::PathBuf]| -> Vec<_> {
        v.iter()
            .map(|p| p.file_name().unwrap().to_owned())
            .collect()
    };
    let same_names = names(&fa) == names(&fb);
    let identical = same_names
        && fa
            .iter()
            .zip(&fb)
            .all(|(x, y)| std::fs::read(x).unwrap() == std::fs::read(y).unwrap());
    verdict(
        7,
        identical && fa.len() >= 4,
        format!(
            "{} output files compared byte for byte, identical: {identical}",
            fa.len()
        ),
    );
}

#[test]
fn criterion_8_forcing_formula() {
    let _g = lock();
    let f = SeasonalForcing::default();
    let worst = (0..365)
        .map(|d| {
            let independent = 41.0 * (2.0 * PI * (d as f64 + 250.0) / 365.0).sin() - 10.2;
            (air_temperature(d as f64 * DAY, &f) - independent).abs()
        })
        .fold(0.0, f64::max);
    let hottest = air_temperature(206.25 * DAY, &f);
    let coldest = air_temperature(388.75 * DAY, &f);
    let sampled = (0..365 * 96).map(|k| air_temperature(k as f64 * 900.0, &f));
    let (lo, hi) = sampled.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    verdict(
        8,
        worst <= 1e-12
            && (hottest - 30.8).abs() <= 1e-12
            && (coldest + 51.2).abs() <= 1e-12
            && hi <= 30.8 + 1e-12
            && lo >= -51.2 - 1e-12,
        format!(
            "max deviation {worst:.2e} over 365 days, extremes {hottest:.12} / {coldest:.12} (30.8 / -51.2)"
        ),
    );
}
