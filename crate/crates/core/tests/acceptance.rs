//! Acceptance criteria. Runs as a plain binary (`harness = false`): one
//! PASS/FAIL line per check, non-zero exit if any check fails.
//!
//! `cargo test -p extinction-core --test acceptance`

use std::time::{Duration, Instant};

use extinction_core::characteristics::{decay_rate, match_markov, DEFAULT_RHO_TOL};
use extinction_core::lln::{integrate_compartmental, integrate_law, CompartmentalModel, InitialCurves, MacroState};
use extinction_core::markov::{sir_cdf, sir_mean};
use extinction_core::simulation::{kolmogorov_p_value, ReplicateSet, SimConfig};
use extinction_core::solver::{solve_cdf, solve_tilted_cdf, CdfGrid};
use extinction_core::{DurationLaw, EpidemicCharacteristics, InfectivityLaw, QuadratureSpec, TiltBasis};

const REPLICATES: usize = 100_000;

struct Report {
    failed: Vec<String>,
    total: usize,
}

impl Report {
    fn check(&mut self, name: &str, ok: bool, detail: String) {
        self.total += 1;
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed.push(name.to_string());
        }
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn quad() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn reference(a: f64) -> InfectivityLaw {
    InfectivityLaw::triangular_reference(a).unwrap()
}

fn rho_recovery(r: &mut Report) {
    for (a, target, tol) in [(0.132, -0.0683, 1e-3), (0.16, -0.03816, 5e-4)] {
        let (rho, dt) = timed(|| decay_rate(&reference(a), &quad(), DEFAULT_RHO_TOL).unwrap());
        r.check(
            &format!("rho_recovery[a={a}]"),
            (rho - target).abs() <= tol && dt < Duration::from_secs(1),
            format!("rho = {rho:.7}, target {target} ± {tol:e}, |diff| = {:.2e}, {dt:.2?}", (rho - target).abs()),
        );
    }
}

fn markov_means(r: &mut Report) {
    for (reff, rho, target, tol) in [(0.66, -0.0683, 8.1369, 1e-4), (0.8, -0.03816, 10.544, 1e-3)] {
        let m = sir_mean(reff, rho).unwrap();
        r.check(
            &format!("markov_mean[R={reff}]"),
            (m - target).abs() <= tol,
            format!("mean = {m:.6}, target {target} ± {tol:e}"),
        );
    }
}

fn varying_means(r: &mut Report) {
    for (a, target) in [(0.132, 18.7854), (0.16, 22.6568)] {
        let law = reference(a);
        let rho = decay_rate(&law, &quad(), DEFAULT_RHO_TOL).unwrap();
        let ((m32, m64), dt) = timed(|| {
            let m = |n| solve_cdf(&law, n, 400.0, &quad()).unwrap().mean(300.0, Some(rho)).unwrap();
            (m(32), m(64))
        });
        let rel = (m32.mean_days - target).abs() / target;
        r.check(
            &format!("vi_mean_vs_reference[a={a}]"),
            rel <= 0.03,
            format!(
                "mean(n=32, cutoff 300) = {:.4}, target {target} ± 3%, off by {:.2}%, tail {:.1e}, {dt:.2?}",
                m32.mean_days,
                100.0 * rel,
                m32.tail_mass
            ),
        );
        let drift = (m32.mean_days - m64.mean_days).abs() / m64.mean_days;
        r.check(
            &format!("vi_mean_grid_stability[a={a}]"),
            drift < 0.01,
            format!("n=32 {:.4} vs n=64 {:.4}, {:.3}%", m32.mean_days, m64.mean_days, 100.0 * drift),
        );
        let set = ReplicateSet::run(&law, 1, None, REPLICATES, &SimConfig::default()).unwrap();
        let (mc, se) = set.mean_se();
        r.check(
            &format!("vi_mean_inside_mc_ci[a={a}]"),
            (m32.mean_days - mc).abs() <= 1.96 * se && set.capped() == 0,
            format!("MC {mc:.4} ± {:.4} (95%), {} reps, {} capped", 1.96 * se, REPLICATES, set.capped()),
        );
    }
}

fn max_markov_error(law: &InfectivityLaw, reff: f64, rho: f64, n: usize) -> f64 {
    let g = solve_cdf(law, n, 150.0, &quad()).unwrap();
    (0..g.len())
        .map(|k| (g.values[k] - sir_cdf(reff, rho, g.time(k)).unwrap()).abs())
        .fold(0.0, f64::max)
}

fn closed_form_cross_check(r: &mut Report) {
    let (reff, rho) = (0.66, -0.0683);
    let law = match_markov(reff, rho).unwrap().law().unwrap();
    let (errs, dt) = timed(|| [16, 32, 64].map(|n| max_markov_error(&law, reff, rho, n)));
    r.check(
        "markov_cross_check[n=64]",
        errs[2] <= 0.01,
        format!("max |F_n - F| = {:.3e} (≤ 0.01), {dt:.2?}", errs[2]),
    );
    let ratios = [errs[0] / errs[1], errs[1] / errs[2]];
    r.check(
        "markov_cross_check_halving",
        ratios.iter().all(|q| (1.8..=2.2).contains(q)),
        format!("errors n=16,32,64: {:.3e} {:.3e} {:.3e}; ratios {:.3} {:.3}", errs[0], errs[1], errs[2], ratios[0], ratios[1]),
    );
}

fn deterministic_eta(r: &mut Report) {
    let law = InfectivityLaw::constant_rate(0.2, DurationLaw::Dirac { a: 5.0 }).unwrap();
    for n in [8, 16, 32, 64] {
        let g = solve_cdf(&law, n, 20.0, &quad()).unwrap();
        let err = (g.eval(5.0).unwrap() - (-1.0f64).exp()).abs();
        r.check(
            &format!("deterministic_eta[n={n}]"),
            err <= 2.0 * 0.2 / n as f64,
            format!("|F(5) - 1/e| = {err:.3e} (≤ {:.3e})", 0.4 / n as f64),
        );
    }
}

fn grid_invariants_hold(g: &CdfGrid) -> Result<f64, String> {
    if g.values[0] != 0.0 {
        return Err(format!("values[0] = {}", g.values[0]));
    }
    if let Some(v) = g.values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(format!("value {v} outside [0, 1]"));
    }
    let bound = g.decrement_bound();
    let worst = g.values.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    if worst < bound {
        return Err(format!("increment {worst:e} below {bound:e}"));
    }
    Ok(worst)
}

fn grid_invariant_suite(r: &mut Report) {
    let markov = match_markov(0.66, -0.0683).unwrap();
    let grids: Vec<(String, CdfGrid)> = vec![
        ("triangular a=0.132".into(), solve_cdf(&reference(0.132), 32, 400.0, &quad()).unwrap()),
        ("triangular a=0.16".into(), solve_cdf(&reference(0.16), 32, 400.0, &quad()).unwrap()),
        (
            "tilted a=0.16".into(),
            solve_tilted_cdf(&reference(0.16), 16, 200.0, &quad(), TiltBasis::Lifetime).unwrap(),
        ),
        ("markov".into(), solve_cdf(&markov.law().unwrap(), 32, 200.0, &quad()).unwrap()),
        (
            "seir".into(),
            solve_cdf(
                &InfectivityLaw::exposed_constant_rate(
                    0.1,
                    DurationLaw::Exponential { rate: 0.5 },
                    DurationLaw::Exponential { rate: 0.2 },
                )
                .unwrap(),
                16,
                200.0,
                &quad(),
            )
            .unwrap(),
        ),
    ];
    for (name, g) in &grids {
        let res = grid_invariants_hold(g);
        r.check(
            &format!("grid_bounds[{name}]"),
            res.is_ok(),
            match res {
                Ok(worst) => format!(
                    "{} points in [0,1], F(0) = 0, smallest increment {worst:.2e} (bound {:.2e})",
                    g.len(),
                    g.decrement_bound()
                ),
                Err(e) => e,
            },
        );
    }
    let g = &grids[3].1;
    let excess = (0..g.len())
        .map(|k| g.values[k] - sir_cdf(0.66, -0.0683, g.time(k)).unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    r.check(
        "markov_domination",
        excess <= 1e-9,
        format!("max (F_n - F) = {excess:.3e} (≤ 1e-9)"),
    );
}

fn mc_validity(r: &mut Report) {
    let (reff, rho) = (0.66, -0.0683);
    let law = match_markov(reff, rho).unwrap().law().unwrap();
    let (set, dt) = timed(|| ReplicateSet::run(&law, 1, None, REPLICATES, &SimConfig::default()).unwrap());
    let d = set.ks_distance(|t| sir_cdf(reff, rho, t.max(0.0)).unwrap());
    let p = kolmogorov_p_value(d, set.len());
    r.check(
        "mc_ks_vs_closed_form",
        p > 1e-3,
        format!("D = {d:.4e}, p = {p:.3}, {} reps, {dt:.2?}", set.len()),
    );
    let silent = InfectivityLaw::triangular_ramp(0.0, DurationLaw::Dirac { a: 2.0 }, DurationLaw::Dirac { a: 8.0 }).unwrap();
    let set = ReplicateSet::run(&silent, 1, Some(TiltBasis::Lifetime), REPLICATES, &SimConfig::default()).unwrap();
    let (mean, se) = set.mean_se();
    r.check(
        "mc_tilted_uniform_mean",
        (mean - 5.0).abs() <= 0.02,
        format!("mean = {mean:.4} (5.0 ± 0.02), se {se:.4}"),
    );
}

fn multi_ancestor(r: &mut Report) {
    let law = reference(0.132);
    let m = 20;
    let (g, dt) = timed(|| solve_tilted_cdf(&law, 32, 200.0, &quad(), TiltBasis::Lifetime).unwrap().power(m).unwrap());
    let times: Vec<f64> = (1..=9)
        .map(|d| {
            let k = g.values.partition_point(|&v| v < d as f64 / 10.0);
            g.time(k)
        })
        .collect();
    let set = ReplicateSet::run(&law, m, Some(TiltBasis::Lifetime), REPLICATES, &SimConfig::default()).unwrap();
    let emp = set.empirical_cdf(&times);
    let mut worst: f64 = 0.0;
    for (i, &t) in times.iter().enumerate() {
        let f = g.eval(t).unwrap();
        worst = worst.max((f - emp.probs[i]).abs() / emp.halfwidth_95[i]);
    }
    r.check(
        "multi_ancestor_M20_deciles",
        worst <= 3.0,
        format!("max |F^20 - p_hat| / halfwidth = {worst:.2} (≤ 3), {} reps, solve {dt:.2?}", REPLICATES),
    );
}

fn lln(r: &mut Report) {
    let law = reference(0.3);
    let init = MacroState::start(0.99, 0.01);
    let traj = integrate_law(&law, &quad(), &init, 0.05, 150.0, InitialCurves::Tilted, TiltBasis::Lifetime).unwrap();
    let drift = traj.iter().map(|s| (s.mass() - 1.0).abs()).fold(0.0, f64::max);
    r.check("lln_mass_conservation", drift <= 1e-9, format!("max |S+I+R-1| = {drift:.2e} over {} steps", traj.len()));

    let (lambda, mu) = (0.5, 0.2);
    let law = InfectivityLaw::constant_rate(lambda, DurationLaw::Exponential { rate: mu }).unwrap();
    let init = MacroState::start(0.95, 0.05);
    let ode = integrate_compartmental(&CompartmentalModel::Sir { lambda, mu }, &init, 0.01, 40.0, false).unwrap();
    let errs: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&h| {
            let k = integrate_law(&law, &quad(), &init, h, 40.0, InitialCurves::SameAsNew, TiltBasis::Lifetime).unwrap();
            let stride = (h / 0.01f64).round() as usize;
            k.iter()
                .enumerate()
                .map(|(j, s)| {
                    let o = &ode[j * stride];
                    (s.s_bar - o.s_bar).abs().max((s.i_bar - o.i_bar).abs()).max((s.r_bar - o.r_bar).abs())
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let ratios = [errs[0] / errs[1], errs[1] / errs[2]];
    r.check(
        "lln_kermack_matches_sir_ode",
        ratios.iter().all(|q| (1.7..=2.3).contains(q)),
        format!("sup errors h=0.2,0.1,0.05: {:.3e} {:.3e} {:.3e}; ratios {:.2} {:.2}", errs[0], errs[1], errs[2], ratios[0], ratios[1]),
    );
}

fn main() {
    let mut r = Report {
        failed: Vec::new(),
        total: 0,
    };
    let c = EpidemicCharacteristics::of(&reference(0.132), &quad(), DEFAULT_RHO_TOL).unwrap();
    println!("reference law a=0.132: R_eff = {:.6}, rho = {:.7}", c.r_eff, c.rho);
    rho_recovery(&mut r);
    markov_means(&mut r);
    varying_means(&mut r);
    closed_form_cross_check(&mut r);
    deterministic_eta(&mut r);
    grid_invariant_suite(&mut r);
    mc_validity(&mut r);
    multi_ancestor(&mut r);
    lln(&mut r);
    println!("{} of {} checks passed", r.total - r.failed.len(), r.total);
    if !r.failed.is_empty() {
        println!("failed: {}", r.failed.join(", "));
        std::process::exit(1);
    }
}
