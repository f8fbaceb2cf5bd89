//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

use std::f64::consts::PI;
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use cph::cli::{fig2_preset, fig3_preset, hole_correlation};
use cph::correlations::{g_mn, g_n, random_separable_mixture};
use cph::detection::{
    bound_violation_sigma, click_probability, coincidence_probability, phase_scan,
    pulses_for_floor_counts, DetectorArray, DetectorModel, ScanConfig, ScanResult,
};
use cph::fock::{coherent_state, thermal_distribution, CutoffPolicy};
use cph::holes::{phase_distance, solve_holes, HoleSolution, HoleSpec};
use cph::optics::{
    amplitude, coherent_only_amplitude, interfere, joint_distribution, loss_channel,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: u64) -> Result<(), String> {
    ensure(elapsed < Duration::from_secs(limit_s), || {
        format!("runtime {elapsed:.2?} exceeds {limit_s} s")
    })
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn holes(n1: usize, n2: usize) -> Result<Vec<HoleSolution>, String> {
    solve_holes(&HoleSpec::new(n1, n2, HoleSpec::DEFAULT_R).map_err(err)?).map_err(err)
}

fn hole_parameters() -> Check {
    let start = Instant::now();
    let h11 = holes(1, 1)?;
    ensure(
        h11.iter()
            .any(|h| (h.gamma - 1.0).abs() <= 1e-6 && phase_distance(h.phi, PI / 2.0) <= 1e-6),
        || format!("(1,1): no hole at gamma = 1, phi = pi/2 in {h11:?}"),
    )?;
    let h22 = holes(2, 2)?;
    ensure(
        h22.iter().any(|h| (h.gamma_squared() - 3.0).abs() <= 1e-4),
        || format!("(2,2): no hole with gamma^2 = 3 in {h22:?}"),
    )?;
    let target = 15.0 / (5.0 - 10f64.sqrt());
    let h50 = holes(5, 0)?;
    ensure(h50.iter().any(|h| (h.gamma - target).abs() <= 1e-3), || {
        format!("(5,0): no hole with gamma = {target} in {h50:?}")
    })?;
    within(start.elapsed(), 10)?;
    Ok(format!(
        "gamma(1,1) = {:.9}, gamma^2(2,2) = {:.9}, gamma(5,0) = {:.9}, {:.2?}",
        h11[0].gamma,
        h22[0].gamma_squared(),
        h50.iter().map(|h| h.gamma).fold(0.0, f64::max),
        start.elapsed()
    ))
}

fn all_splits() -> impl Iterator<Item = (usize, usize)> {
    (2..=8).flat_map(|total| (0..=total).map(move |n1| (n1, total - n1)))
}

fn root_count() -> Check {
    let start = Instant::now();
    let mut cases = 0;
    for (n1, n2) in all_splits() {
        let found = holes(n1, n2)?;
        let want = (n1 + n2) / 2;
        ensure(found.len() == want, || {
            format!("({n1},{n2}): {} solutions, expected {want}", found.len())
        })?;
        ensure(found.iter().all(|h| (0.0..PI).contains(&h.phi)), || {
            format!("({n1},{n2}): phase outside [0, pi)")
        })?;
        cases += 1;
    }
    within(start.elapsed(), 60)?;
    Ok(format!("{cases} (N1,N2) pairs, {:.2?}", start.elapsed()))
}

fn oracle_equivalence() -> Check {
    let mut worst: f64 = 0.0;
    for magnitude in [0.3, 1.0, 2.0] {
        let phase = 0.7;
        let policy = CutoffPolicy::new(1e-16, 128)
            .map_err(err)?
            .with_min_cutoff(10);
        let state = interfere(magnitude, phase, 0.0, &policy).map_err(err)?;
        for n1 in 0..=10 {
            for n2 in 0..=10 - n1 {
                let got = amplitude(&state, n1, n2).map_err(err)?;
                let want = coherent_only_amplitude(magnitude, phase, n1, n2);
                let rel = (got - want).norm() / want.norm();
                worst = worst.max(rel);
                ensure(rel <= 1e-10, || {
                    format!("|alpha| = {magnitude}, ({n1},{n2}): relative error {rel:.3e}")
                })?;
            }
        }
    }
    Ok(format!("worst relative error {worst:.2e}"))
}

fn ideal_coincidence(hole: &HoleSolution, phi: f64) -> Result<f64, String> {
    let spec = HoleSpec::new(hole.n1, hole.n2, hole.r).map_err(err)?;
    let policy = CutoffPolicy::default().with_min_cutoff(spec.total());
    let state = interfere(spec.magnitude(hole.gamma), phi, hole.r, &policy).map_err(err)?;
    let ideal = DetectorModel::ideal();
    Ok(coincidence_probability(
        &joint_distribution(&state),
        hole.n1,
        hole.n2,
        &ideal,
        &ideal,
    ))
}

/// Whether `phi` is itself a solved hole with the same `gamma`.
fn is_hole(found: &[HoleSolution], gamma: f64, phi: f64) -> bool {
    found
        .iter()
        .any(|h| (h.gamma - gamma).abs() <= 1e-9 * gamma && phase_distance(h.phi, phi) <= 1e-6)
}

fn cancellation_depth() -> Check {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let mut shifted = Vec::new();
    for (n1, n2) in all_splits() {
        let found = holes(n1, n2)?;
        for hole in &found {
            let mut reference = hole.phi + PI / 2.0;
            if is_hole(&found, hole.gamma, reference) {
                shifted.push(format!("({n1},{n2})#{}", hole.root_index));
                reference = hole.phi + PI / 4.0;
            }
            let at = ideal_coincidence(hole, hole.phi)?;
            let off = ideal_coincidence(hole, reference)?;
            let ratio = at / off;
            worst = worst.max(ratio);
            ensure(off > 0.0 && ratio <= 1e-10, || {
                format!(
                    "({n1},{n2}) root {}: depth ratio {ratio:.3e}",
                    hole.root_index
                )
            })?;
            count += 1;
        }
    }
    let note = if shifted.is_empty() {
        String::new()
    } else {
        format!(
            "; reference phi + pi/4 where phi + pi/2 is itself a hole: {}",
            shifted.join(" ")
        )
    };
    Ok(format!(
        "{count} holes, worst P(hole)/P(reference) = {worst:.2e}{note}"
    ))
}

fn correlation_references() -> Check {
    let fine = CutoffPolicy::new(1e-30, 128).map_err(err)?;
    let coherent = coherent_state(1.3, 0.4, &fine)
        .map_err(err)?
        .probabilities();
    for n in 1..=5 {
        let g = g_n(&coherent, n).map_err(err)?.value;
        ensure((g - 1.0).abs() <= 1e-10, || {
            format!("coherent g^({n}) = {g}")
        })?;
    }
    let thermal = thermal_distribution(0.5, &CutoffPolicy::default()).map_err(err)?;
    let g2 = g_n(&thermal, 2).map_err(err)?.value;
    let g3 = g_n(&thermal, 3).map_err(err)?.value;
    ensure((g2 - 2.0).abs() <= 1e-6, || format!("thermal g^(2) = {g2}"))?;
    ensure((g3 - 6.0).abs() <= 1e-6, || format!("thermal g^(3) = {g3}"))?;
    Ok(format!("thermal g^(2) = {g2:.9}, g^(3) = {g3:.9}"))
}

const ORDERS: [(usize, usize); 3] = [(1, 1), (2, 2), (5, 0)];

fn classical_bound() -> Check {
    let start = Instant::now();
    let policy = CutoffPolicy::new(1e-30, 128).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2011);
    let mut min_g = [f64::INFINITY; 3];
    for trial in 0..1000 {
        let d = random_separable_mixture(&mut rng, 4, 2.0, &policy).map_err(err)?;
        for (slot, &(m, n)) in min_g.iter_mut().zip(&ORDERS) {
            let g = g_mn(&d, m, n).map_err(err)?.value;
            ensure(g >= 1.0 - 1e-10, || {
                format!("trial {trial}: g^({m},{n}) = {g}")
            })?;
            *slot = slot.min(g);
        }
    }
    let mut hole_max: f64 = 0.0;
    for &(n1, n2) in &ORDERS {
        for hole in holes(n1, n2)? {
            let g = hole_correlation(&hole).map_err(err)?;
            hole_max = hole_max.max(g);
            ensure(g < 1.0, || {
                format!(
                    "hole ({n1},{n2}) root {}: g = {g} not below 1",
                    hole.root_index
                )
            })?;
        }
    }
    within(start.elapsed(), 120)?;
    Ok(format!(
        "mixture min g = {:.12}/{:.12}/{:.12}, largest hole g = {hole_max:.3e}, {:.2?}",
        min_g[0],
        min_g[1],
        min_g[2],
        start.elapsed()
    ))
}

/// Fraction of the `k^n` photon-to-detector assignments lighting exactly
/// `c` detectors.
fn enumerate_clicks(c: usize, n: usize, k: usize) -> f64 {
    let total = k.pow(n as u32);
    let hits = (0..total)
        .filter(|&code| {
            let mut lit = vec![false; k];
            let mut x = code;
            for _ in 0..n {
                lit[x % k] = true;
                x /= k;
            }
            lit.iter().filter(|&&b| b).count() == c
        })
        .count();
    hits as f64 / total as f64
}

fn povm_suite() -> Check {
    let mut worst_sum: f64 = 0.0;
    for k in 1..=8 {
        for eta in [0.125, 0.5, 1.0] {
            let array = DetectorArray::new(k, eta).map_err(err)?;
            for n in 0..=64 {
                let sum: f64 = (0..=k).map(|c| click_probability(c, n, &array)).sum();
                worst_sum = worst_sum.max((sum - 1.0).abs());
                ensure((sum - 1.0).abs() <= 1e-12, || {
                    format!("k = {k}, eta = {eta}, n = {n}: sum = {sum}")
                })?;
            }
        }
    }
    let policy = CutoffPolicy::default();
    let dist = joint_distribution(&interfere(0.8, 1.1, 0.2, &policy).map_err(err)?);
    let mut worst_fold: f64 = 0.0;
    for (k1, k2, eta) in [(2, 2, 0.125), (3, 2, 0.5), (5, 4, 0.8)] {
        let lossy = DetectorModel::multiplexed(k1, eta).map_err(err)?;
        let lossy2 = DetectorModel::multiplexed(k2, eta).map_err(err)?;
        let perfect = DetectorModel::multiplexed(k1, 1.0).map_err(err)?;
        let perfect2 = DetectorModel::multiplexed(k2, 1.0).map_err(err)?;
        let thinned = loss_channel(&dist, eta, eta).map_err(err)?;
        for c1 in 0..=k1 {
            for c2 in 0..=k2 {
                let a = coincidence_probability(&dist, c1, c2, &lossy, &lossy2);
                let b = coincidence_probability(&thinned, c1, c2, &perfect, &perfect2);
                worst_fold = worst_fold.max((a - b).abs());
                ensure((a - b).abs() <= 1e-10, || {
                    format!(
                        "loss folding k = ({k1},{k2}), eta = {eta}, c = ({c1},{c2}): {a} vs {b}"
                    )
                })?;
            }
        }
    }
    for k in 1..=4 {
        let array = DetectorArray::new(k, 1.0).map_err(err)?;
        for n in 0..=4 {
            for c in 0..=k {
                let got = click_probability(c, n, &array);
                let want = enumerate_clicks(c, n, k);
                ensure((got - want).abs() <= 1e-14, || {
                    format!("k = {k}, n = {n}, c = {c}: {got} vs enumeration {want}")
                })?;
            }
        }
    }
    Ok(format!(
        "completeness error {worst_sum:.1e}, loss folding error {worst_fold:.1e}"
    ))
}

fn relative_spread(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    (max - min) / max
}

fn singles_flatness() -> Check {
    let result = phase_scan(&fig2_preset(0.2, 0.125, 64).map_err(err)?).map_err(err)?;
    let s1 = relative_spread(result.points.iter().map(|p| p.singles1));
    let s2 = relative_spread(result.points.iter().map(|p| p.singles2));
    ensure(s1 < 1e-10 && s2 < 1e-10, || {
        format!("relative singles variation {s1:.3e} / {s2:.3e}")
    })?;
    Ok(format!("relative variation {s1:.1e} / {s2:.1e}"))
}

fn distinct_mod_pi(result: &ScanResult) -> usize {
    let mut phases: Vec<f64> = Vec::new();
    for m in &result.minima {
        if phases.iter().all(|&p| phase_distance(p, m.phi) > 1e-6) {
            phases.push(m.phi);
        }
    }
    phases.len()
}

fn figure_shapes() -> Check {
    let start = Instant::now();
    let fig2 = phase_scan(&fig2_preset(0.2, 0.125, 128).map_err(err)?).map_err(err)?;
    ensure(
        distinct_mod_pi(&fig2) == 2 && fig2.minima.len() == 4,
        || {
            format!(
                "fig2: {} minima over 2 pi, {} distinct mod pi",
                fig2.minima.len(),
                distinct_mod_pi(&fig2)
            )
        },
    )?;
    ensure(fig2.minima.iter().all(|m| m.g_mn < 1.0), || {
        format!("fig2: g^(2,2) at minima {:?}", fig2.minima)
    })?;
    let fig3 = phase_scan(&fig3_preset(0.2, 0.125, 128).map_err(err)?).map_err(err)?;
    ensure(fig3.minima.len() == 2, || {
        format!("fig3: {} minima over 2 pi", fig3.minima.len())
    })?;
    ensure(
        (fig3.minima[1].phi - fig3.minima[0].phi - PI).abs() < 1e-9,
        || format!("fig3: minima not one per pi: {:?}", fig3.minima),
    )?;
    ensure(fig3.minima.iter().all(|m| m.g_mn < 1.0), || {
        format!("fig3: g^(5,0) at minima {:?}", fig3.minima)
    })?;
    let rs = [0.01, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4];
    let mut summary = Vec::new();
    for (name, preset) in [
        (
            "fig2",
            fig2_preset as fn(f64, f64, usize) -> cph::Result<ScanConfig>,
        ),
        ("fig3", fig3_preset),
    ] {
        let vis = rs
            .iter()
            .map(|&r| {
                Ok(phase_scan(&preset(r, 0.125, 128).map_err(err)?)
                    .map_err(err)?
                    .visibility)
            })
            .collect::<Result<Vec<f64>, String>>()?;
        for (r, v) in rs.iter().zip(&vis) {
            if *r <= 0.1 {
                ensure(*v > 0.94, || format!("{name}: visibility {v} at r = {r}"))?;
            }
        }
        ensure(vis.windows(2).all(|w| w[1] < w[0]), || {
            format!("{name}: visibility not decreasing in r: {vis:?}")
        })?;
        summary.push(format!(
            "{name} visibility {:.1}% (r=0.1) to {:.1}% (r=0.4)",
            100.0 * vis[2],
            100.0 * vis[8]
        ));
    }
    within(start.elapsed(), 120)?;
    Ok(format!("{}, {:.2?}", summary.join("; "), start.elapsed()))
}

fn significance() -> Check {
    for (p, f, n) in [
        (0.0, 0.01, 10_000u64),
        (1e-9, 2e-8, 27_600_000_000),
        (0.3, 0.5, 7),
    ] {
        let sigma = bound_violation_sigma(p, f, n);
        let want = (f - p) * n as f64 / (f * n as f64).sqrt();
        ensure((sigma - want).abs() <= 1e-12 * want, || {
            format!("sigma({p}, {f}, {n}) = {sigma}, expected {want}")
        })?;
        let quad = bound_violation_sigma(p, f, 4 * n);
        ensure((quad - 2.0 * sigma).abs() <= 1e-12 * sigma, || {
            format!("4x pulses gives {quad}, expected {}", 2.0 * sigma)
        })?;
    }
    let mut result = phase_scan(&fig2_preset(0.2, 0.125, 128).map_err(err)?).map_err(err)?;
    let floor = result.deepest().ok_or("empty scan")?.classical_floor;
    let pulses = pulses_for_floor_counts(floor, 576.0).map_err(err)?;
    result.set_pulses(pulses);
    let sigmas: Vec<f64> = result.minima.iter().filter_map(|m| m.sigma).collect();
    ensure(
        !sigmas.is_empty() && sigmas.iter().all(|&s| s > 20.0),
        || format!("sigma at minima {sigmas:?}"),
    )?;
    Ok(format!("{pulses} pulses, sigma at holes {:.2}", sigmas[0]))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("hole parameters", hole_parameters),
        ("root count", root_count),
        ("oracle equivalence", oracle_equivalence),
        ("cancellation depth", cancellation_depth),
        ("correlation references", correlation_references),
        ("classical bound", classical_bound),
        ("POVM suite", povm_suite),
        ("singles flatness", singles_flatness),
        ("figure shapes", figure_shapes),
        ("significance", significance),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome =
            panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
