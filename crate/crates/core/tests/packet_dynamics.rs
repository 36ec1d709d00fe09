use std::f64::consts::PI;
use std::sync::OnceLock;

use curvewave::field::{Annulus, Evolver, RadialGrid, RadialSums};
use curvewave::observables::{
    average_position, gh_fit, husimi_sample, tunneling_direction, HusimiWindow, Region,
    TrajectorySample,
};
use curvewave::packet::{solve_for_packet, Expansion, PacketSpec};
use curvewave::spectrum::{ModeClass, PotentialSpec, RadialProfile};
use num_complex::Complex64;
use proptest::prelude::*;

struct Fixture {
    spec: PacketSpec,
    exp: Expansion,
    full_bound_weight: f64,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let spec = PacketSpec::new(PotentialSpec::default(), 20.0, 30.0, 100.0).unwrap();
        let (_, set, _) = solve_for_packet(&spec, 1e-3).unwrap();
        let full_bound_weight = set
            .entries
            .iter()
            .filter(|e| e.mode.class == ModeClass::Bound)
            .map(|e| e.coeff.norm_sqr())
            .sum();
        Fixture {
            spec,
            exp: set.truncate(1e-3),
            full_bound_weight,
        }
    })
}

fn evolver(exp: &Expansion) -> Evolver {
    // same grid for every expansion so fields compare node by node
    let grid = RadialGrid::new(2.0, 9.0, 0.004, 0.008).unwrap();
    Evolver::new(exp, grid).unwrap()
}

/// Points on grid nodes, where the radial sums are exact.
fn probe_points(sums: &RadialSums) -> Vec<(f64, f64)> {
    let g = &sums.grid;
    let mut out = Vec::new();
    for i in (1..g.len()).step_by(37) {
        let r = g.node(i);
        for j in 0..7 {
            let th = 0.3 + j as f64 * 2.0 * PI / 7.0;
            out.push((r * th.cos(), r * th.sin()));
        }
    }
    out
}

fn peak(sums: &RadialSums) -> f64 {
    probe_points(sums)
        .iter()
        .map(|&(x, y)| sums.at(x, y).norm())
        .fold(0.0, f64::max)
}

#[test]
fn launch_field_is_the_direct_mode_sum() {
    let f = fixture();
    let pot = f.spec.potential;
    let sums = evolver(&f.exp).sums_at(0.0).unwrap();
    let scale = peak(&sums);
    let profiles: Vec<_> = f
        .exp
        .entries
        .iter()
        .map(|e| RadialProfile::of_mode(&pot, &e.mode).unwrap())
        .collect();
    for (x, y) in probe_points(&sums).into_iter().step_by(5) {
        let (r, th) = (x.hypot(y), y.atan2(x));
        let direct: Complex64 = f
            .exp
            .entries
            .iter()
            .zip(&profiles)
            .map(|(e, p)| {
                e.coeff * p.value(r).unwrap() * Complex64::from_polar(1.0, e.ell as f64 * th)
            })
            .sum::<Complex64>()
            / (2.0 * PI).sqrt();
        assert!(
            (sums.at(x, y) - direct).norm() < 1e-12 * scale,
            "({x}, {y})"
        );
    }
}

#[test]
fn evolution_is_linear() {
    let f = fixture();
    let even = f.exp.filtered(|e| e.ell % 2 == 0);
    let odd = f.exp.filtered(|e| e.ell % 2 != 0);
    assert!(!even.entries.is_empty() && !odd.entries.is_empty());
    let (a, b) = (Complex64::new(0.7, -1.2), Complex64::new(-0.4, 0.3));
    let mix = even.scaled(a).combined(&odd.scaled(b));
    let tau = 1.3 * f.spec.s0();
    let s_mix = evolver(&mix).sums_at(tau).unwrap();
    let s_b = evolver(&even).sums_at(tau).unwrap();
    let s_r = evolver(&odd).sums_at(tau).unwrap();
    let scale = peak(&s_mix);
    for (x, y) in probe_points(&s_mix) {
        let want = a * s_b.at(x, y) + b * s_r.at(x, y);
        assert!((s_mix.at(x, y) - want).norm() < 1e-12 * scale);
    }
}

#[test]
fn bound_subspace_carries_at_most_unit_norm() {
    let f = fixture();
    assert!(f.full_bound_weight <= 1.0 + 1e-6, "{}", f.full_bound_weight);
    let bound = f.exp.filtered(|e| e.mode.class == ModeClass::Bound);
    let ev = evolver(&bound);
    let p0 = ev.sums_at(0.0).unwrap().probability(Annulus::whole(9.0));
    for t in [0.7, 2.0, 5.0] {
        let p = ev
            .sums_at(t * f.spec.s0())
            .unwrap()
            .probability(Annulus::whole(9.0));
        assert!(p <= 1.0 + 1e-6, "t={t}: {p}");
        assert!(
            (p - p0).abs() < 1e-6,
            "bound probability drifts: {p0} → {p}"
        );
    }
}

#[test]
fn bound_phases_compose() {
    let f = fixture();
    let bound = f.exp.filtered(|e| e.mode.class == ModeClass::Bound);
    let (t1, t2) = (0.37, 1.91);
    let mut advanced = bound.clone();
    for e in &mut advanced.entries {
        e.coeff *= (Complex64::new(0.0, -t1) * e.mode.energy).exp();
    }
    let direct = evolver(&bound).sums_at(t1 + t2).unwrap();
    let composed = evolver(&advanced).sums_at(t2).unwrap();
    let scale = peak(&direct);
    for (x, y) in probe_points(&direct) {
        assert!((direct.at(x, y) - composed.at(x, y)).norm() < 1e-12 * scale);
    }
}

#[test]
fn interior_probability_never_grows() {
    let f = fixture();
    // fine enough that the radial quadrature itself is good to well below 1e-6
    let ev = Evolver::new(&f.exp, RadialGrid::new(2.0, 9.0, 0.001, 0.002).unwrap()).unwrap();
    let disk = Annulus {
        r_lo: 0.0,
        r_hi: f.spec.potential.radius + 6.0,
    };
    let mut last = f64::INFINITY;
    for i in 0..8 {
        let p = ev
            .sums_at(0.5 * i as f64 * f.spec.s0())
            .unwrap()
            .probability(disk);
        assert!(p <= last + 1e-6, "step {i}: {last} → {p}");
        last = p;
    }
}

#[test]
fn centroid_ignores_global_phase() {
    let f = fixture();
    let tau = 1.5 * f.spec.s0();
    let a = evolver(&f.exp).sums_at(tau).unwrap();
    let b = evolver(&f.exp.scaled(Complex64::from_polar(1.0, 2.1)))
        .sums_at(tau)
        .unwrap();
    let region = Region::whole(9.0);
    let (pa, pb) = (
        average_position(&a, region).unwrap(),
        average_position(&b, region).unwrap(),
    );
    assert!((pa[0] - pb[0]).abs() < 1e-12 && (pa[1] - pb[1]).abs() < 1e-12);
}

/// Gaussian beam of width `w` centred at `c`, carrying wavenumber `k` along `dir`.
fn beam(c: [f64; 2], dir: f64, k: f64, w: f64) -> impl Fn(f64, f64) -> Complex64 + Sync {
    move |x, y| {
        let (dx, dy) = (x - c[0], y - c[1]);
        let env = (-(dx * dx + dy * dy) / (2.0 * w * w)).exp();
        env * Complex64::from_polar(1.0, k * (dx * dir.cos() + dy * dir.sin()))
    }
}

fn spec() -> PacketSpec {
    PacketSpec::new(PotentialSpec::default(), 75.0, 75.0, 100.0).unwrap()
}

/// Incoming ray into `(0, R)` at `χ`; outgoing ray leaving the circle at angle `β` with angle `χ_r`.
fn synthetic_track(
    chi: f64,
    beta: f64,
    chi_r: f64,
) -> (Vec<TrajectorySample>, Vec<TrajectorySample>) {
    let r = 2.0;
    let sample = |t: f64, p: [f64; 2]| TrajectorySample {
        t,
        position: p,
        mask: "synthetic".into(),
    };
    let pre = [-0.8, -0.7, -0.6]
        .iter()
        .enumerate()
        .map(|(i, &s)| sample(0.4 + 0.1 * i as f64, [s * chi.sin(), r + s * chi.cos()]))
        .collect();
    let exit = [r * beta.sin(), r * beta.cos()];
    let g = chi_r - beta;
    let u = [g.sin(), -g.cos()];
    let post = [0.6, 0.7, 0.8]
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            sample(
                1.4 + 0.1 * i as f64,
                [exit[0] + s * u[0], exit[1] + s * u[1]],
            )
        })
        .collect();
    (pre, post)
}

fn rotate(p: [f64; 2], a: f64) -> [f64; 2] {
    let (s, c) = a.sin_cos();
    [c * p[0] - s * p[1], s * p[0] + c * p[1]]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn husimi_is_nonnegative(
        cx in 2.2f64..5.0, cy in 1.5f64..3.5, dir in -1.0f64..1.0, k in 0.0f64..60.0, w in 0.1f64..0.6, alpha in -0.3f64..0.3,
    ) {
        let window = HusimiWindow { d: (2.0, 5.0), h: (1.0, 4.0), step: 0.05, mu: 0.15f64.powi(2) / 2.0 };
        let h = husimi_sample(&beam([cx, cy], dir, k, w), alpha, &window, 2.0).unwrap();
        prop_assert!(h.values.iter().all(|&v| v >= 0.0));
        prop_assert!(h.strength >= 0.0);
    }

    #[test]
    fn gh_fit_is_rotation_invariant(beta in 0.0f64..0.03, factor in 1.0f64..1.05, rot in -PI..PI) {
        let base = spec();
        let chi = base.chi();
        let (pre, post) = synthetic_track(chi, beta, factor * chi);
        let fit = gh_fit(&pre, &post, &base).unwrap();
        prop_assert!((fit.l_gh - 2.0 * beta).abs() < 1e-9);
        prop_assert!((fit.chi_r_factor - factor).abs() < 1e-9);
        let turned = PacketSpec { impact: rotate(base.impact, rot), ..base };
        let spin = |v: &Vec<TrajectorySample>| -> Vec<TrajectorySample> {
            v.iter().map(|s| TrajectorySample { position: rotate(s.position, rot), ..s.clone() }).collect()
        };
        let fit2 = gh_fit(&spin(&pre), &spin(&post), &turned).unwrap();
        prop_assert!((fit2.l_gh - fit.l_gh).abs() < 1e-9);
        prop_assert!((fit2.chi_r_factor - fit.chi_r_factor).abs() < 1e-9);
    }
}

#[test]
fn husimi_strength_is_continuous_in_alpha() {
    let window = HusimiWindow {
        d: (2.0, 5.0),
        h: (1.0, 4.0),
        step: 0.02,
        mu: 0.15f64.powi(2) / 2.0,
    };
    let f = beam([3.0, 2.2], 0.1, 40.0, 0.35);
    let vals: Vec<f64> = (0..21)
        .map(|i| {
            husimi_sample(&f, -0.1 + 0.01 * i as f64, &window, 2.0)
                .unwrap()
                .strength
        })
        .collect();
    for w in vals.windows(2) {
        assert!((w[1] - w[0]).abs() < 0.2 * w[0].max(w[1]), "{w:?}");
    }
}

#[test]
fn tunneling_direction_flips_with_the_mirror_image() {
    let (c1, c2, dir) = ([2.9, 2.3], [3.6, 2.45], 0.2);
    let f1 = beam(c1, dir, 45.0, 0.3);
    let f2 = beam(c2, dir, 45.0, 0.3);
    let m1 = beam([-c1[0], c1[1]], PI - dir, 45.0, 0.3);
    let m2 = beam([-c2[0], c2[1]], PI - dir, 45.0, 0.3);
    let window = HusimiWindow {
        d: (2.0, 5.0),
        h: (1.0, 4.0),
        step: 0.02,
        mu: 0.15f64.powi(2) / 2.0,
    };
    let mirror = HusimiWindow {
        d: (-5.0, -2.0),
        ..window
    };
    let alphas: Vec<f64> = (0..13).map(|i| -0.12 + 0.02 * i as f64).collect();
    let flipped: Vec<f64> = alphas.iter().rev().map(|a| -a).collect();
    let a = tunneling_direction((&f1, &f2), &alphas, &window, 2.0).unwrap();
    let b = tunneling_direction((&m1, &m2), &flipped, &mirror, 2.0).unwrap();
    assert!(
        (a.alpha_max_f + b.alpha_max_f).abs() < 1e-9,
        "{} vs {}",
        a.alpha_max_f,
        b.alpha_max_f
    );
    match (a.alpha_crossing, b.alpha_crossing) {
        (Some(x), Some(y)) => assert!((x + y).abs() < 1e-9),
        (None, None) => {}
        other => panic!("crossings differ: {other:?}"),
    }
    let w = HusimiWindow::for_packet(&spec());
    let wm = HusimiWindow::for_packet(&PacketSpec {
        m0: -75.0,
        ..spec()
    });
    assert_eq!((wm.d.0, wm.d.1, wm.h), (-w.d.1, -w.d.0, w.h));
}
