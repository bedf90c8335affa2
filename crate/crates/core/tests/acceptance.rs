//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit when
//! any criterion fails.

mod common;

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use common::*;
use rayon::prelude::*;
use viscolab::compactness::div_curl_test;
use viscolab::config::{build_scenario, Integrator};
use viscolab::flux::FluxComponent;
use viscolab::grid::{Field, FieldTrajectory, Grid};
use viscolab::harness::{evaluate, Evaluation};
use viscolab::mollifier::{laplacian_l1, mollify, InitialData, MollifierKernel};
use viscolab::norms::{h_minus_one_norm_spatial, SpaceTimeField, TimeLattice};
use viscolab::reference::{reference_from_setup, solve_reference};
use viscolab::solver::ScenarioSetup;

struct Line {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn line(id: u32, name: &'static str, pass: bool, detail: String) -> Line {
    Line {
        id,
        name,
        pass,
        detail,
    }
}

struct Ladder {
    setup: ScenarioSetup,
    eval: Evaluation,
    seconds: f64,
}

fn run_ladder(file: &str) -> Ladder {
    let start = Instant::now();
    let cfg = build_scenario(&scenario_text(file)).expect("scenario parses");
    let setup = ScenarioSetup::new(&cfg).expect("scenario builds");
    let members: Vec<FieldTrajectory> = cfg
        .ladder
        .epsilons
        .par_iter()
        .map(|&e| setup.solve_viscous(e).expect("member solves").0)
        .collect();
    let reference = reference_from_setup(&setup).expect("reference solves");
    let eval = evaluate(&setup, &members, Some(&reference)).expect("diagnostics run");
    Ladder {
        setup,
        eval,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Slope and max log residual, computed here rather than by the library.
fn fit(points: &[(f64, f64)]) -> (f64, f64) {
    let slope = loglog_slope(points);
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0.ln()).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let residual = points
        .iter()
        .map(|p| (p.1.ln() - my - slope * (p.0.ln() - mx)).abs())
        .fold(0.0, f64::max);
    (slope, residual)
}

fn criteria_1d(l: &Ladder, out: &mut Vec<Line>) {
    let m = &l.eval.members;
    let eps: Vec<f64> = m.iter().map(|x| x.epsilon).collect();

    let worst = m.iter().map(|x| x.max_abs).fold(0.0, f64::max);
    out.push(line(
        1,
        "maximum principle",
        worst <= 1.0 + 1e-10 && l.seconds < 60.0,
        format!(
            "max |u| = {worst:.12} (bound 1 + 1e-10), ladder took {:.1} s",
            l.seconds
        ),
    ));

    let energy = m.iter().map(|x| x.energy).fold(0.0, f64::max);
    out.push(line(
        2,
        "energy estimate",
        energy <= 0.525,
        format!("max eps |grad u|^2 = {energy:.5} (bound 0.525)"),
    ));

    let mut ok = true;
    let mut parts = Vec::new();
    for k in 0..m[0].entropies.len() {
        let pts: Vec<(f64, f64)> = m
            .iter()
            .map(|x| (x.epsilon, x.entropies[k].h1_norm_a))
            .collect();
        let (slope, residual) = fit(&pts);
        ok &= slope >= 0.4 && residual <= 0.15;
        parts.push(format!(
            "{} {slope:.3}/{residual:.3}",
            m[0].entropies[k].entropy_id
        ));
    }
    out.push(line(
        3,
        "H^-1 vanishing of A (slope >= 0.4, residual <= 0.15)",
        ok && m[0].entropies.len() == 6,
        parts.join(", "),
    ));

    let interval = l.setup.interval();
    let mut ok = true;
    let mut worst_ratio: f64 = 0.0;
    for x in m {
        for (e, preset) in x.entropies.iter().zip(entropy_presets(&l.setup)) {
            let bound = 1.0 * preset.second_derivative_sup(interval) * 0.5 * 1.05;
            ok &= e.measure_norm_m <= bound;
            worst_ratio = worst_ratio.max(e.measure_norm_m / bound);
        }
    }
    out.push(line(
        4,
        "measure bound on M",
        ok,
        format!("largest |M| / bound = {worst_ratio:.4}"),
    ));

    let (slope, _) = fit(&m.iter().map(|x| (x.epsilon, x.ut_l1)).collect::<Vec<_>>());
    let ut: Vec<String> = m.iter().map(|x| format!("{:.4}", x.ut_l1)).collect();
    out.push(line(
        5,
        "time-derivative uniformity (slope >= -0.1)",
        slope >= -0.1,
        format!("slope {slope:.3}, |u_t|_L1 = [{}]", ut.join(", ")),
    ));

    let conv = l.eval.convergence.as_ref().expect("reference ran");
    let decreasing = conv.errors.windows(2).all(|w| w[1] < w[0]);
    let cauchy: Vec<(f64, f64)> = eps
        .iter()
        .copied()
        .zip(conv.cauchy.iter().copied())
        .collect();
    let (rate, _) = fit(&cauchy);
    out.push(line(
        6,
        "vanishing-viscosity convergence",
        decreasing && rate >= 0.3,
        format!(
            "L1 errors {:?} strictly decreasing: {decreasing}; Cauchy rate {rate:.3} (>= 0.3)",
            conv.errors
                .iter()
                .map(|e| format!("{e:.4}"))
                .collect::<Vec<_>>()
        ),
    ));

    let first = m.first().unwrap();
    let last = m.last().unwrap();
    out.push(line(
        7,
        "Young-measure collapse",
        last.dirac <= 0.5 * first.dirac,
        format!(
            "dirac(eps={}) = {:.3e} vs 0.5 x dirac(eps={}) = {:.3e}",
            last.epsilon,
            last.dirac,
            first.epsilon,
            0.5 * first.dirac
        ),
    ));
}

fn entropy_presets(setup: &ScenarioSetup) -> Vec<viscolab::entropy::EntropyPreset> {
    viscolab::harness::diagnostic_entropies(setup)
        .unwrap()
        .iter()
        .map(|p| p.preset().clone())
        .collect()
}

fn criterion_8() -> Line {
    let grid = Arc::new(Grid::unit_1d(512, 1.0).unwrap());
    let s = SpaceTimeField::from_fn(grid, 16, 1.0 / 15.0, TimeLattice::Nodes, |x, _| {
        (2.0 * PI * 64.0 * x[0]).sin()
    });
    let zero = s.scaled(0.0);
    let compact = div_curl_test([&s, &zero], [&zero, &s], &[64, 16]).unwrap();
    let violated = div_curl_test([&s, &zero], [&s, &zero], &[64, 16]).unwrap();
    line(
        8,
        "div-curl detection",
        compact <= 1e-2 && violated >= 0.4,
        format!("compact case {compact:.2e} (<= 1e-2), sin^2 case {violated:.4} (>= 0.4)"),
    )
}

fn criterion_9(l: &Ladder) -> Line {
    let m = &l.eval.members;
    let means: Vec<f64> = m.iter().map(|x| x.d_mean.unwrap_or(f64::NAN)).collect();
    let min = m
        .iter()
        .map(|x| x.d_min.unwrap_or(f64::NAN))
        .fold(f64::INFINITY, f64::min);
    let decreasing = means.windows(2).all(|w| w[1] < w[0]);
    line(
        9,
        "d = 2 compensated quadratic",
        decreasing && min >= -1e-12 && m.len() == 3 && l.seconds < 600.0,
        format!(
            "mean D {:?}, min D {min:.3e}, ladder took {:.1} s",
            means.iter().map(|d| format!("{d:.4e}")).collect::<Vec<_>>(),
            l.seconds
        ),
    )
}

fn criterion_10() -> Line {
    let eps = 0.1;
    let heat = solve_unit_1d(
        400,
        1.0,
        3,
        FluxComponent::Linear { speed: 0.0 },
        eps,
        Integrator::Euler,
        |x| heat_sine(x, 0.0, eps),
    );
    let peak = heat.last().iter().copied().fold(f64::MIN, f64::max);
    let exact = (-eps * PI * PI).exp();
    let heat_ok = (peak - exact).abs() <= 0.02 * exact;

    let grid = Arc::new(Grid::unit_1d(400, 1.0).unwrap());
    let sine = Field::from_fn(grid, |x| (PI * x[0]).sin());
    let h1 = h_minus_one_norm_spatial(&sine).unwrap();
    let h1_exact = 1.0 / (2.0f64.sqrt() * PI);
    let h1_ok = (h1 - h1_exact).abs() <= 0.01 * h1_exact;

    let cfg = build_scenario(
        r#"
[grid]
cells = [400]
time_horizon = 0.5
snapshots = 3
[flux]
components = [{ preset = "burgers" }]
[initial_data]
preset = "box"
center = [0.4]
width = 0.2
support_margin = 0.12
[ladder]
epsilons = [0.1]
[diagnostics]
window = [1, 1]
"#,
    )
    .unwrap();
    let u = solve_reference(&cfg).unwrap().last().to_vec();
    let h = 1.0 / 400.0;
    let i = (0..399)
        .rev()
        .find(|&i| u[i] >= 0.5 && u[i + 1] < 0.5)
        .unwrap();
    let x = (i as f64 + 0.5) * h + h * (u[i] - 0.5) / (u[i] - u[i + 1]);
    let shock_cells = (x - 0.85).abs() / h;
    let shock_ok = shock_cells <= 2.0;

    let (s0, t) = (1e-3, 0.02);
    let errors: Vec<f64> = [50, 100, 200, 400]
        .iter()
        .map(|&n| {
            let tr = solve_unit_1d(
                n,
                t,
                2,
                FluxComponent::Linear { speed: 0.0 },
                eps,
                Integrator::Euler,
                |x| moving_gaussian(x, 0.0, eps, s0, 0.5, 0.0),
            );
            let h = 1.0 / n as f64;
            l1_against(tr.last(), h, |i| {
                moving_gaussian((i as f64 + 0.5) * h, t, eps, s0, 0.5, 0.0)
            })
        })
        .collect();
    let order = observed_orders(&errors)
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    line(
        10,
        "solver oracles",
        heat_ok && h1_ok && shock_ok && order >= 1.8,
        format!(
            "heat {peak:.5} vs {exact:.5}; H^-1 {h1:.5} vs {h1_exact:.5}; shock off by {shock_cells:.2} cells; diffusion order {order:.3}"
        ),
    )
}

fn criterion_11() -> Line {
    let n = 1600;
    let grid = Arc::new(Grid::unit_1d(n, 1.0).unwrap());
    let h = 1.0 / n as f64;
    let tri = InitialData::new(
        Field::from_fn(grid.clone(), |x| (1.0 - (x[0] - 0.5).abs() / 0.25).max(0.0)),
        0.2,
    )
    .unwrap();
    let boxed = InitialData::new(
        Field::from_fn(grid.clone(), |x| {
            if (x[0] - 0.5).abs() < 0.2 {
                1.0
            } else {
                0.0
            }
        }),
        0.15,
    )
    .unwrap();
    let widths = [0.04, 0.02, 0.01];
    let smooth =
        |d: &InitialData, w: f64| mollify(d, &MollifierKernel::new(w, &grid).unwrap()).unwrap();
    let sup_ok = widths
        .iter()
        .all(|&w| smooth(&tri, w).sup_norm() <= tri.sup_norm());
    let tv0 = tv_with_walls(boxed.field().values());
    let tv_ok = widths
        .iter()
        .all(|&w| tv_with_walls(smooth(&boxed, w).values()) <= tv0 + 10.0 * h);
    let lap: Vec<(f64, f64)> = widths
        .iter()
        .map(|&w| (w, laplacian_l1(&smooth(&boxed, w))))
        .collect();
    let (slope, _) = fit(&lap);
    line(
        11,
        "mollifier suite",
        sup_ok && tv_ok && slope <= -0.8,
        format!("sup bound {sup_ok}, TV bound {tv_ok}, Laplacian slope {slope:.3} (<= -0.8)"),
    )
}

fn main() {
    let mut lines = Vec::new();
    let one = run_ladder("burgers_1d.toml");
    criteria_1d(&one, &mut lines);
    lines.push(criterion_8());
    let two = run_ladder("burgers_linear_2d.toml");
    lines.push(criterion_9(&two));
    lines.push(criterion_10());
    lines.push(criterion_11());

    lines.sort_by_key(|l| l.id);
    let mut failed = 0;
    for l in &lines {
        println!(
            "{} criterion {:>2} {}: {}",
            if l.pass { "PASS" } else { "FAIL" },
            l.id,
            l.name,
            l.detail
        );
        failed += usize::from(!l.pass);
    }
    println!(
        "{} of {} criteria passed",
        lines.len() - failed,
        lines.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
