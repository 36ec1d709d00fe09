use curvewave::corefn::{bessel_j, bessel_k};
use curvewave::quad::Panels;
use curvewave::spectrum::{
    characteristic, find_bound_modes, find_resonances, mode_norm, ModeClass, ModeTable,
    PotentialSpec, RadialProfile,
};
use num_complex::Complex64;

fn pot() -> PotentialSpec {
    PotentialSpec::default()
}

// mpmath roots of k J_m′/J_m(kR) = κ K_m′/K_m(κR) at the default well, 40 digits
const BOUND_ORACLE: &[(u32, [f64; 3])] = &[
    (
        0,
        [1.1964304775615891, 2.7463057853606906, 4.3053306252826372],
    ),
    (
        7,
        [5.5155985731667323, 7.3737396200389808, 9.0982464003140142],
    ),
    (
        60,
        [33.595741419108505, 36.569113215382604, 39.111479254826136],
    ),
];

#[test]
fn lowest_bound_modes_match_high_precision_roots() {
    for &(m, ks) in BOUND_ORACLE {
        let modes = find_bound_modes(&pot(), m).unwrap();
        for (i, want) in ks.iter().enumerate() {
            let got = modes[i].k;
            assert_eq!(modes[i].n, i as u32 + 1);
            assert_eq!(got.im, 0.0);
            assert!(
                (got.re - want).abs() < 1e-10 * want,
                "m={m} n={}: {got} vs {want}",
                i + 1
            );
        }
    }
}

#[test]
fn narrow_resonance_at_m120() {
    // complex root polished independently with mpmath at 30 digits
    let res = find_resonances(&pot(), 120, (112.0, 114.0), 1).unwrap();
    let k = res
        .modes
        .iter()
        .map(|m| m.k)
        .find(|k| (k.re - 113.0).abs() < 0.5)
        .expect("resonance near 113");
    assert!((k.re - 112.998_588_974_163).abs() < 1e-8, "{k}");
    assert!((k.im + 4.935_091_648e-6).abs() < 1e-6 * 4.935e-6, "{k}");
}

#[test]
fn bound_count_equals_sign_changes() {
    let p = pot();
    for m in [0, 3, 41, 150, 190] {
        let modes = find_bound_modes(&p, m).unwrap();
        let (kb, kv) = (p.k_b(m), p.k_v());
        if kb >= kv {
            assert!(modes.is_empty());
            continue;
        }
        let spacing = std::f64::consts::PI / p.radius;
        let step = (0.05f64).min(spacing / 10.0);
        let f = |k: f64| characteristic(&p, m, Complex64::new(k, 0.0)).unwrap().re;
        let n = ((kv - kb) / step).ceil() as usize;
        let mut changes = 0;
        let mut prev = f(kb.max(1e-9));
        for i in 1..=n {
            let k = (kb + i as f64 * step).min(kv * (1.0 - 1e-12));
            let v = f(k);
            if prev.signum() != v.signum() {
                changes += 1;
            }
            prev = v;
        }
        assert_eq!(modes.len(), changes, "m={m}");
    }
}

#[test]
fn classes_follow_thresholds() {
    let p = pot();
    assert!((p.k_v() - 100.0).abs() < 1e-12);
    assert!((p.k_t(120) - 13600f64.sqrt()).abs() < 1e-10);
    let (table, _) = ModeTable::solve(&p, 115..=125, 125.0).unwrap();
    assert!(!table.modes.is_empty());
    for md in &table.modes {
        assert_eq!(md.class, p.classify(md.m, md.k), "{md:?}");
        let k = md.k.re;
        let want = if md.k.im == 0.0 && k < p.k_v() {
            ModeClass::Bound
        } else if k < p.k_t(md.m) {
            ModeClass::Tunneling
        } else {
            ModeClass::Leaky
        };
        assert_eq!(md.class, want, "{md:?}");
    }
}

#[test]
fn bound_norm_matches_quadrature() {
    let p = pot();
    for m in [0u32, 2, 9] {
        for md in find_bound_modes(&p, m).unwrap().iter().step_by(7) {
            let k = md.k.re;
            let kappa = (p.k_v().powi(2) - k * k).sqrt();
            let inside = Panels::with_max_width(0.0, p.radius, 0.05, 12)
                .integrate(|r| bessel_j(m, Complex64::new(k * r, 0.0)).unwrap().re.powi(2) * r);
            let cc = md.c.re;
            let outside =
                Panels::with_max_width(p.radius, p.radius + 60.0 / kappa, 0.5 / kappa, 12)
                    .integrate(|r| (cc * bessel_k(m, kappa * r).unwrap()).powi(2) * r);
            let want = inside + outside;
            assert!(
                ((md.norm.re - want) / want).abs() < 1e-8,
                "m={m} n={}: {} vs {want}",
                md.n,
                md.norm
            );
            assert!((mode_norm(md, &p).unwrap() - md.norm).norm() < 1e-12 * want);
        }
    }
}

#[test]
fn distinct_resonances_are_biorthogonal() {
    let p = pot();
    let res = find_resonances(&p, 10, (100.0, 112.0), 1).unwrap();
    assert!(res.modes.len() >= 3);
    let profiles: Vec<_> = res
        .modes
        .iter()
        .map(|md| RadialProfile::of_mode(&p, md).unwrap())
        .collect();
    for i in 0..profiles.len() {
        for j in i + 1..profiles.len() {
            let (a, b) = (&profiles[i], &profiles[j]);
            let inside = Panels::with_max_width(0.0, p.radius, 0.01, 12)
                .integrate_complex(|r| a.value(r).unwrap() * b.value(r).unwrap() * r);
            let (ua, da) = a.value_and_slope(p.radius).unwrap();
            let (ub, db) = b.value_and_slope(p.radius).unwrap();
            let outside = -(ua * db - da * ub) * p.radius / (a.k * a.k - b.k * b.k);
            let overlap = (inside + outside).norm();
            assert!(overlap < 1e-6, "modes {i},{j}: {overlap:e}");
        }
        // diagonal: quadrature inside plus the continued exterior integral
        // −(R²/2)[u′²/q² + (1 − m²/(qR)²)u²] gives unit norm
        let a = &profiles[i];
        let inside = Panels::with_max_width(0.0, p.radius, 0.01, 12)
            .integrate_complex(|r| a.value(r).unwrap().powi(2) * r);
        let (u, du) = a.value_and_slope(p.radius).unwrap();
        let q2 = a.k * a.k - p.k_v().powi(2);
        let m2 = (a.m * a.m) as f64;
        let outside = -(du * du / q2 + (1.0 - m2 / (q2 * p.radius * p.radius)) * u * u)
            * (0.5 * p.radius * p.radius);
        assert!(
            (inside + outside - 1.0).norm() < 1e-8,
            "mode {i}: {}",
            inside + outside
        );
    }
}

#[test]
fn mode_table_text_round_trip_is_bit_exact() {
    let (table, _) = ModeTable::solve(&pot(), 0..=4, 104.0).unwrap();
    let text = table.to_text();
    let back = ModeTable::parse(&text).unwrap();
    assert_eq!(back.potential, table.potential);
    assert_eq!(back.modes.len(), table.modes.len());
    for (a, b) in back.modes.iter().zip(&table.modes) {
        assert_eq!((a.m, a.n, a.class), (b.m, b.n, b.class));
        assert_eq!(a.k.re.to_bits(), b.k.re.to_bits());
        assert_eq!(a.k.im.to_bits(), b.k.im.to_bits());
        assert_eq!(a.norm.re.to_bits(), b.norm.re.to_bits());
        assert_eq!(a.c.im.to_bits(), b.c.im.to_bits());
    }
    assert_eq!(back.to_text(), text);
    assert!(ModeTable::parse("# wrong header\n").is_err());
    assert!(ModeTable::parse(&text.replace("bound", "bogus")).is_err());
}
