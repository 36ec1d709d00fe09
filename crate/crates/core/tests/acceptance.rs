//! Acceptance run: one PASS/FAIL line per criterion, sub-checks indented below.
//!
//! Failing criteria are reported but only fail the process with `ACCEPTANCE_STRICT=1`.
//! A computation error always fails it.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use curvewave::barrier1d::{
    gh_theory, modified_transmission, rect_transmission, reflection_modified, ModifiedEffBarrier,
    RectBarrier,
};
use curvewave::corefn::{bessel_j_triple, bessel_k_triple, hankel1_triple};
use curvewave::field::{Annulus, Evolver, RadialSums};
use curvewave::observables::transmission_summary;
use curvewave::packet::Expansion;
use curvewave::scenario::{
    barrier1d_study, gh_numeric, reconstruction, resonance_near, tunneling_image, Barrier1dStudy,
    GhNumeric, Prepared, Preset, Reconstruction, ScenarioConfig, TunnelingImage,
};
use curvewave::spectrum::{ModeClass, PotentialSpec, RadialProfile};
use num_complex::Complex64;

#[derive(Clone, Copy)]
enum Tol {
    Abs(f64),
    Rel(f64),
    Factor(f64),
    Range(f64, f64),
    AtLeast,
    AtMost,
}

struct Check {
    label: String,
    value: f64,
    want: String,
    pass: bool,
}

fn short(v: f64) -> String {
    if v != 0.0 && v.abs() < 1e-3 {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

fn check(label: &str, value: f64, target: f64, tol: Tol) -> Check {
    let (pass, want) = match tol {
        Tol::Abs(t) => (
            (value - target).abs() <= t,
            format!("{target} ± {}", short(t)),
        ),
        Tol::Rel(t) => (
            (value - target).abs() <= t * target.abs(),
            format!("{target} ± {}%", t * 100.0),
        ),
        Tol::Factor(f) => {
            let r = value / target;
            (r >= 1.0 / f && r <= f, format!("{target:e} within ×{f}"))
        }
        Tol::Range(lo, hi) => (value >= lo && value <= hi, format!("[{lo}, {hi}]")),
        Tol::AtLeast => (value >= target, format!("≥ {}", short(target))),
        Tol::AtMost => (value <= target, format!("≤ {}", short(target))),
    };
    Check {
        label: label.to_string(),
        value,
        want,
        pass: pass && value.is_finite(),
    }
}

type Outcome = Result<Vec<Check>, String>;

fn err<T>(r: curvewave::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn fixture<T>(r: &Result<T, String>) -> Result<&T, String> {
    r.as_ref().map_err(|e| format!("setup failed: {e}"))
}

struct Run {
    prep: Prepared,
    solve_secs: f64,
}

fn prepare(
    cfg: &ScenarioConfig,
    table: Option<curvewave::spectrum::ModeTable>,
) -> Result<Run, String> {
    let start = Instant::now();
    let prep = err(Prepared::new(cfg, table))?;
    Ok(Run {
        prep,
        solve_secs: start.elapsed().as_secs_f64(),
    })
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let md = err(resonance_near(&PotentialSpec::default(), 120, 130.0, 113.0))?;
    let secs = start.elapsed().as_secs_f64();
    Ok(vec![
        check("Re k", md.k.re, 113.0, Tol::Abs(0.1)),
        check("Im k", md.k.im, -1.57e-6, Tol::Factor(3.0)),
        check("runtime s", secs, 10.0, Tol::AtMost),
    ])
}

fn criterion_2(a: &Result<Run, String>, b: &Result<Run, String>) -> Outcome {
    let (a, b) = (fixture(a)?, fixture(b)?);
    let (ca, cb) = (a.prep.thresholded.counts, b.prep.thresholded.counts);
    Ok(vec![
        check("A total", ca.total() as f64, 2474.0, Tol::Rel(0.02)),
        check("A bound", ca.bound as f64, 2428.0, Tol::Rel(0.02)),
        check("A resonance", ca.resonance() as f64, 66.0, Tol::Rel(0.02)),
        check("B bound", cb.bound as f64, 1374.0, Tol::Rel(0.02)),
        check("B tunneling", cb.tunneling as f64, 608.0, Tol::Rel(0.02)),
        check(
            "A+B table runtime s",
            a.solve_secs + b.solve_secs,
            600.0,
            Tol::AtMost,
        ),
    ])
}

fn criterion_3(rec: &Result<Reconstruction, String>) -> Outcome {
    let r = fixture(rec)?;
    Ok(vec![
        check("B fidelity", r.fidelity, 0.99, Tol::AtLeast),
        check("B profile error", r.profile_error, 0.03, Tol::AtMost),
    ])
}

fn criterion_4(ga: &Result<GhNumeric, String>, gb: &Result<GhNumeric, String>) -> Outcome {
    let (ga, gb) = (fixture(ga)?, fixture(gb)?);
    Ok(vec![
        check("A l_GH", ga.fit.l_gh, 0.015, Tol::Abs(0.003)),
        check("B l_GH", gb.fit.l_gh, 0.024, Tol::Abs(0.004)),
        check(
            "A chi_R factor",
            ga.fit.chi_r_factor,
            0.0,
            Tol::Range(1.005, 1.02),
        ),
        check(
            "B chi_R factor",
            gb.fit.chi_r_factor,
            0.0,
            Tol::Range(1.015, 1.04),
        ),
    ])
}

fn criterion_5() -> Outcome {
    let a = err(gh_theory(&err(ScenarioConfig::preset(Preset::A).packet())?))?;
    let b = err(gh_theory(&err(ScenarioConfig::preset(Preset::B).packet())?))?;
    Ok(vec![
        check("A l_GH", a.l_gh, 0.0152, Tol::Abs(0.0002)),
        check("B l_GH", b.l_gh, 0.0242, Tol::Abs(0.0003)),
        check("A delay / s0", a.delay_s0, 0.0304, Tol::Rel(0.02)),
        check("B delay / s0", b.delay_s0, 0.0363, Tol::Rel(0.02)),
    ])
}

fn criterion_6(ti: &Result<TunnelingImage, String>, b: &Result<Run, String>) -> Outcome {
    let (ti, b) = (fixture(ti)?, fixture(b)?);
    let d = &ti.direction;
    let mut out = vec![
        check(
            "Delta (crossing)",
            d.delta.unwrap_or(f64::NAN),
            0.324,
            Tol::Abs(0.02),
        ),
        check("Delta predicted", ti.delta_predicted, 0.30, Tol::Abs(0.02)),
        check(
            "alpha_T (crossing)",
            d.alpha_crossing.unwrap_or(f64::NAN),
            -0.045,
            Tol::Abs(0.01),
        ),
        check("alpha_T (max f)", d.alpha_max_f, -0.045, Tol::Abs(0.01)),
    ];
    let targets = [[2.993, 2.192], [4.146, 2.14]];
    for (i, (s, want)) in ti.exterior.iter().zip(targets).enumerate() {
        out.push(check(
            &format!("exterior x t{}", i + 1),
            s.position[0],
            want[0],
            Tol::Abs(0.05),
        ));
        out.push(check(
            &format!("exterior y t{}", i + 1),
            s.position[1],
            want[1],
            Tol::Abs(0.05),
        ));
    }
    let star = ti.origin.as_ref().map_or(f64::NAN, |o| o.delay);
    out.push(check("delta t* / s0", star, 0.227, Tol::Abs(0.05)));
    let start = Instant::now();
    err(b.prep.sums_at(10.0))?;
    out.push(check(
        "evolve to t=10 s",
        start.elapsed().as_secs_f64(),
        900.0,
        Tol::AtMost,
    ));
    Ok(out)
}

fn criterion_7(
    study: &Result<Barrier1dStudy, String>,
    ti: &Result<TunnelingImage, String>,
) -> Outcome {
    let s = fixture(study)?;
    let s0 = 1.0 / ScenarioConfig::preset(Preset::B).k0;
    let mut out = vec![
        check(
            "rect delta t_T (phase)",
            s.rect_delay_t_phase,
            0.05,
            Tol::Abs(0.005),
        ),
        check(
            "rect delta t_T (peak)",
            s.rect_delay_t_peak,
            0.045,
            Tol::Abs(0.01),
        ),
        check(
            "rect delta t_R",
            s.rect_delay_r_phase,
            0.03,
            Tol::Abs(0.005),
        ),
        check(
            "modified delta t_T",
            s.modified_delay_t_peak,
            0.14,
            Tol::Abs(0.03),
        ),
        check("ratio", s.ratio, 4.6, Tol::Abs(0.7)),
        check(
            "scaled prediction",
            s.scaled_prediction,
            0.00276,
            Tol::Abs(0.05 * s0),
        ),
    ];
    let star = fixture(ti)?
        .origin
        .as_ref()
        .map_or(f64::NAN, |o| o.delay * s0);
    out.push(check(
        "|scaled − delta t*| / s0",
        (s.scaled_prediction - star).abs() / s0,
        0.05,
        Tol::AtMost,
    ));
    Ok(out)
}

fn criterion_8(c: &Result<Run, String>, d: &Result<Run, String>) -> Outcome {
    let (c, d) = (fixture(c)?, fixture(d)?);
    let sc = err(transmission_summary(&c.prep.evolver, &c.prep.spec))?;
    let sd = err(transmission_summary(&d.prep.evolver, &d.prep.spec))?;
    Ok(vec![
        check("C reflected", sc.reflected, 0.616, Tol::Abs(0.02)),
        check("C lobe angle deg", sc.exit_angle_deg, 64.7, Tol::Abs(2.0)),
        check("D transmitted", sd.transmitted, 0.916, Tol::Abs(0.02)),
    ])
}

fn max_of(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(0.0, f64::max)
}

fn special_function_identities() -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for m in [0u32, 1, 7, 40, 120, 199] {
        for re in [0.7, 9.3, 58.0, 113.0, 205.0] {
            for im in [-1.5, 0.0, 0.8] {
                let z = Complex64::new(re, im);
                let j = err(bessel_j_triple(m, z))?;
                let h = err(hankel1_triple(m, z))?;
                let w = (j.mid * h.derivative() - j.derivative() * h.mid)
                    * (j.log_scale + h.log_scale).exp();
                let want = Complex64::new(0.0, 2.0 / PI) / z;
                worst = worst.max((w - want).norm() / want.norm());
                if m > 0 {
                    for t in [&j, &h] {
                        let rhs = t.mid * (2.0 * m as f64) / z;
                        let scale = t.prev.norm() + t.next.norm() + rhs.norm();
                        worst = worst.max((t.prev + t.next - rhs).norm() / scale);
                    }
                    let x = re + 1.0;
                    let k = err(bessel_k_triple(m, x))?;
                    worst = worst.max(
                        (k.next - k.prev - 2.0 * m as f64 / x * k.mid).abs()
                            / (k.next.abs() + k.prev.abs()),
                    );
                }
            }
        }
    }
    Ok(worst)
}

fn flux_defect() -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for (v_max, w) in [(40.0, 0.3), (100.0, 1.0), (250.0, 0.05)] {
        let b = err(RectBarrier::new(v_max, 0.6 * v_max, 0.0, w))?;
        for i in 1..40 {
            let e = b.v_min + 0.07 * i as f64 * (v_max - b.v_min);
            worst = worst.max(err(rect_transmission(&b, e))?.flux_error.abs());
        }
    }
    for (m, v0) in [(17u32, 100.0), (75, 5000.0), (120, 5000.0)] {
        let bar = ModifiedEffBarrier::new(m, err(PotentialSpec::new(2.0, v0, 1.0, 1.0))?);
        for i in 1..20 {
            let e = v0.max(bar.plateau) + 0.05 * i as f64 * v0;
            let refl = err(reflection_modified(&bar, e))?;
            worst = worst.max((1.0 - refl.f.norm_sqr() - refl.transmitted_flux).abs());
            let exit = err(bar.exit_radius(e))?.max(2.0);
            worst = worst.max(err(modified_transmission(&bar, e, exit))?.flux_error.abs());
        }
    }
    Ok(worst)
}

fn node_points(sums: &RadialSums) -> Vec<(f64, f64)> {
    let g = &sums.grid;
    let mut out = Vec::new();
    for i in (1..g.len()).step_by(97) {
        for j in 0..5 {
            let th = 0.2 + j as f64 * 2.0 * PI / 5.0;
            out.push((g.node(i) * th.cos(), g.node(i) * th.sin()));
        }
    }
    out
}

fn evolve_identities(p: &Prepared) -> Result<(f64, f64), String> {
    let pot = p.spec.potential;
    let exp: &Expansion = &p.expansion;
    let launch = err(p.sums_at(0.0))?;
    let points = node_points(&launch);
    let profiles = exp
        .entries
        .iter()
        .map(|e| err(RadialProfile::of_mode(&pot, &e.mode)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut identity: f64 = 0.0;
    for &(x, y) in &points {
        let (r, th) = (x.hypot(y), y.atan2(x));
        let (mut direct, mut magnitude) = (Complex64::new(0.0, 0.0), 0.0);
        for (e, prof) in exp.entries.iter().zip(&profiles) {
            let term =
                e.coeff * err(prof.value(r))? * Complex64::from_polar(1.0, e.ell as f64 * th);
            direct += term;
            magnitude += term.norm();
        }
        // relative to the summed term magnitudes: the sum cancels heavily inside the disk
        identity = identity.max(
            (launch.at(x, y) - direct / (2.0 * PI).sqrt()).norm() * (2.0 * PI).sqrt() / magnitude,
        );
    }

    let grid = p.evolver.grid.clone();
    let even = exp.filtered(|e| e.ell % 2 == 0);
    let odd = exp.filtered(|e| e.ell % 2 != 0);
    let (a, b) = (Complex64::new(0.7, -1.2), Complex64::new(-0.4, 0.3));
    let tau = 1.3 * p.spec.s0();
    let at = |x: &Expansion| err(Evolver::new(x, grid.clone())).and_then(|ev| err(ev.sums_at(tau)));
    let (s_mix, s_e, s_o) = (
        at(&even.scaled(a).combined(&odd.scaled(b)))?,
        at(&even)?,
        at(&odd)?,
    );
    let scale = max_of(points.iter().map(|&(x, y)| s_mix.at(x, y).norm()));
    let linear = max_of(
        points
            .iter()
            .map(|&(x, y)| (s_mix.at(x, y) - a * s_e.at(x, y) - b * s_o.at(x, y)).norm() / scale),
    );
    Ok((identity, linear))
}

fn bound_norm(p: &Prepared) -> Result<f64, String> {
    let full: f64 = p
        .set
        .entries
        .iter()
        .filter(|e| e.mode.class == ModeClass::Bound)
        .map(|e| e.coeff.norm_sqr())
        .sum();
    let bound = p.expansion.filtered(|e| e.mode.class == ModeClass::Bound);
    let ev = err(Evolver::new(&bound, p.evolver.grid.clone()))?;
    let whole = Annulus::whole(p.config.r_max);
    let mut worst = full;
    for t in [0.0, 2.0, 5.0] {
        worst = worst.max(err(ev.sums_at(t * p.spec.s0()))?.probability(whole));
    }
    Ok(worst)
}

fn criterion_9(b: &Result<Run, String>, ti: &Result<TunnelingImage, String>) -> Outcome {
    let b = fixture(b)?;
    let ti = fixture(ti)?;
    let (identity, linear) = evolve_identities(&b.prep)?;
    let mirror_cfg = ScenarioConfig::preset(Preset::B).mirrored();
    let mirror = prepare(&mirror_cfg, Some(b.prep.table.clone()))?;
    let tm = err(tunneling_image(&mirror.prep))?;
    let flip_max = (ti.direction.alpha_max_f + tm.direction.alpha_max_f).abs();
    let flip_cross = match (ti.direction.alpha_crossing, tm.direction.alpha_crossing) {
        (Some(x), Some(y)) => (x + y).abs(),
        (None, None) => 0.0,
        _ => f64::INFINITY,
    };
    Ok(vec![
        check(
            "Wronskian/recurrence residual",
            special_function_identities()?,
            1e-8,
            Tol::AtMost,
        ),
        check("flux defect", flux_defect()?, 1e-8, Tol::AtMost),
        check(
            "bound-subspace norm",
            bound_norm(&b.prep)?,
            1.0 + 1e-6,
            Tol::AtMost,
        ),
        check("t=0 identity", identity, 1e-12, Tol::AtMost),
        check("linearity", linear, 1e-12, Tol::AtMost),
        check("alpha_T mirror (max f)", flip_max, 1e-9, Tol::AtMost),
        check("alpha_T mirror (crossing)", flip_cross, 1e-9, Tol::AtMost),
    ])
}

fn main() -> ExitCode {
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let total = Instant::now();
    let run = |p: Preset| prepare(&ScenarioConfig::preset(p), None);
    let (a, b, c, d) = (
        run(Preset::A),
        run(Preset::B),
        run(Preset::C),
        run(Preset::D),
    );
    let ga = fixture(&a).and_then(|r| err(gh_numeric(&r.prep)));
    let gb = fixture(&b).and_then(|r| err(gh_numeric(&r.prep)));
    let rec = fixture(&b).and_then(|r| err(reconstruction(&r.prep)));
    let ti = fixture(&b).and_then(|r| err(tunneling_image(&r.prep)));
    let cfg_b = ScenarioConfig::preset(Preset::B);
    let study = err(barrier1d_study(&cfg_b.barrier1d, &cfg_b.potential));

    let results: Vec<(&str, Outcome)> = vec![
        ("resonance eigenvalue", criterion_1()),
        ("mode-count regression", criterion_2(&a, &b)),
        ("reconstruction fidelity", criterion_3(&rec)),
        ("GH shift numerics", criterion_4(&ga, &gb)),
        ("GH theory", criterion_5()),
        ("tunneling image", criterion_6(&ti, &b)),
        ("1D delays", criterion_7(&study, &ti)),
        ("high-energy fractions", criterion_8(&c, &d)),
        ("property suites", criterion_9(&b, &ti)),
    ];

    let (mut failed, mut errored) = (0, 0);
    for (i, (title, outcome)) in results.iter().enumerate() {
        match outcome {
            Ok(checks) => {
                let pass = checks.iter().all(|c| c.pass);
                failed += usize::from(!pass);
                println!(
                    "{} criterion {} {title}",
                    if pass { "PASS" } else { "FAIL" },
                    i + 1
                );
                for c in checks {
                    let mark = if c.pass { "ok  " } else { "miss" };
                    println!(
                        "    {mark} {:<30} {:>14.6e}  want {}",
                        c.label, c.value, c.want
                    );
                }
            }
            Err(e) => {
                errored += 1;
                println!("FAIL criterion {} {title}: error: {e}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria pass ({} errors), {:.1} s",
        results.len() - failed - errored,
        results.len(),
        errored,
        total.elapsed().as_secs_f64()
    );
    if errored > 0 || (strict && failed > 0) {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
