use curvewave::barrier1d::{
    delay_from_phase, modified_transmission, phase_curve, rect_transmission, reflection_modified,
    step_phase, total_variation, wigner_delay, Barrier1d, ModifiedEffBarrier, RectBarrier,
    TransmittedPacket, Window1d,
};
use curvewave::corefn::hankel1_triple;
use curvewave::spectrum::PotentialSpec;
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Continuity of ψ and ψ′ at both interfaces, solved as a dense 4×4 system.
fn transfer_oracle(b: &RectBarrier, e: f64) -> (Complex64, Complex64) {
    let k = (2.0 * e).sqrt();
    let kp = (2.0 * (e - b.v_min)).sqrt();
    let kk = c(2.0 * (e - b.v_max), 0.0).sqrt();
    let w = b.x_b - b.x_a;
    let i = c(0.0, 1.0);
    // unknowns r, A, B, t with ψ = A e^{iK(x−x_a)} + B e^{−iK(x−x_a)} in the barrier
    let ep = (i * kk * w).exp();
    let em = (-i * kk * w).exp();
    let mut m = [
        [
            c(1.0, 0.0),
            c(-1.0, 0.0),
            c(-1.0, 0.0),
            c(0.0, 0.0),
            c(-1.0, 0.0),
        ],
        [-i * k, -i * kk, i * kk, c(0.0, 0.0), -i * k],
        [c(0.0, 0.0), ep, em, c(-1.0, 0.0), c(0.0, 0.0)],
        [c(0.0, 0.0), i * kk * ep, -i * kk * em, -i * kp, c(0.0, 0.0)],
    ];
    for col in 0..4 {
        let piv = (col..4)
            .max_by(|&a, &b| m[a][col].norm().total_cmp(&m[b][col].norm()))
            .unwrap();
        m.swap(col, piv);
        for row in 0..4 {
            if row != col {
                let f = m[row][col] / m[col][col];
                for j in col..5 {
                    let v = m[col][j];
                    m[row][j] -= f * v;
                }
            }
        }
    }
    (m[3][4] / m[3][3], m[0][4] / m[0][0])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn rect_amplitudes_conserve_flux(
        v_max in 10.0f64..300.0,
        frac in 0.05f64..0.95,
        x_a in -2.0f64..2.0,
        w in 0.0f64..1.5,
        e_rel in 0.01f64..3.0,
    ) {
        let b = RectBarrier::new(v_max, frac * v_max, x_a, x_a + w).unwrap();
        let e = b.v_min + e_rel * (v_max - b.v_min);
        let tr = rect_transmission(&b, e).unwrap();
        let (k, kp) = ((2.0 * e).sqrt(), (2.0 * (e - b.v_min)).sqrt());
        prop_assert!((tr.r.norm_sqr() + kp / k * tr.t.norm_sqr() - 1.0).abs() < 1e-12);
        prop_assert!(tr.flux_error.abs() < 1e-12);
        let (t, r) = transfer_oracle(&b, e);
        prop_assert!((t - tr.t).norm() < 1e-9 * t.norm().max(1e-3), "t {} vs {}", tr.t, t);
        prop_assert!((r - tr.r).norm() < 1e-9, "r {} vs {}", tr.r, r);
    }

    #[test]
    fn modified_barrier_conserves_flux(m in 1u32..130, v0 in 50.0f64..6000.0, over in 0.001f64..1.5) {
        let pot = PotentialSpec::new(2.0, v0, 1.0, 1.0).unwrap();
        let bar = ModifiedEffBarrier::new(m, pot);
        let e = v0.max(bar.plateau) + over * v0;
        let refl = reflection_modified(&bar, e).unwrap();
        // outgoing current from the Hankel Wronskian: Im(H*H′) = 2/(π q r)
        let k_out = (2.0 * (e - v0)).sqrt();
        let h = hankel1_triple(m, c(k_out * 2.0, 0.0)).unwrap();
        let inv_h2 = (-2.0 * h.log_scale).exp() / h.mid.norm_sqr();
        let transmitted = (1.0 + refl.f).norm_sqr() * 2.0 / (PI * 2.0) * inv_h2 / bar.q(e);
        prop_assert!((1.0 - refl.f.norm_sqr() - transmitted).abs() < 1e-8, "{} vs {}", 1.0 - refl.f.norm_sqr(), transmitted);
        prop_assert!((refl.transmitted_flux - transmitted).abs() < 1e-8);
        let tr = modified_transmission(&bar, e, bar.exit_radius(e).unwrap().max(2.0)).unwrap();
        prop_assert!(tr.flux_error.abs() < 1e-8);
    }

    #[test]
    fn rect_phase_curves_unwrap_continuously(v_max in 20.0f64..200.0, w in 0.1f64..1.5) {
        let b = RectBarrier::new(v_max, 0.6 * v_max, 0.0, w).unwrap();
        let curve = phase_curve(b.v_min + 0.01, 3.0 * v_max, 801, |e| {
            rect_transmission(&b, e).map(|t| (t.phi_t, t.t.norm()))
        }).unwrap();
        prop_assert!(curve.windows(2).all(|p| (p[1].phase - p[0].phase).abs() < PI));
        prop_assert!(total_variation(&curve).is_finite());
    }
}

#[test]
fn wigner_delay_is_the_step_phase_slope() {
    let v0 = 5000.0;
    for i in 0..100 {
        let e = v0 * (0.005 + 0.99 * i as f64 / 99.0);
        let h = 1e-4 * e.min(v0 - e);
        let slope = (step_phase(e + h, v0).unwrap() - step_phase(e - h, v0).unwrap()) / (2.0 * h);
        let w = wigner_delay(e, v0).unwrap();
        assert!(((w - slope) / w).abs() < 1e-6, "E={e}: {w} vs {slope}");
    }
    assert!(step_phase(0.0, v0).is_err() && wigner_delay(v0, v0).is_err());
}

#[test]
fn barrier_width_scales_with_m_squared_over_v0() {
    // (120, 5000) and (17, 100) share m²/V0 ≈ 2.9
    let big = ModifiedEffBarrier::new(120, PotentialSpec::new(2.0, 5000.0, 1.0, 1.0).unwrap());
    let small = ModifiedEffBarrier::new(17, PotentialSpec::new(2.0, 100.0, 1.0, 1.0).unwrap());
    for i in 0..20 {
        let eps = 0.02 + 0.23 * i as f64 / 19.0;
        let wb = (big.exit_radius(5000.0 * (1.0 + eps)).unwrap() - 2.0) / 2.0;
        let ws = (small.exit_radius(100.0 * (1.0 + eps)).unwrap() - 2.0) / 2.0;
        assert!(
            wb > 0.0 && ((wb - ws) / wb).abs() < 0.05,
            "ε={eps}: {wb} vs {ws}"
        );
    }
}

#[test]
fn delay_from_phase_recovers_a_linear_slope() {
    let curve = phase_curve(10.0, 20.0, 101, |e| Ok((0.37 * e - 1.0, 1.0))).unwrap();
    assert!((delay_from_phase(&curve, 14.03, 1.0).unwrap() - 0.37).abs() < 1e-12);
    assert!(delay_from_phase(&curve, 25.0, 1.0).is_err());
}

#[test]
fn transmitted_peak_moves_at_the_exit_group_velocity() {
    // a bare step far above threshold, where |T| is nearly flat across the window
    let b = RectBarrier::new(100.0, 60.0, 0.0, 0.0).unwrap();
    let e0: f64 = 2000.0;
    let window = Window1d {
        k0: (2.0 * e0).sqrt(),
        sigma_k: 0.5,
    };
    let packet = TransmittedPacket::new(window, Barrier1d::Rect(b), 2000).unwrap();
    let v = (2.0 * (e0 - b.v_min)).sqrt();
    let t4 = packet.peak_time(4.0, 0.0, 0.3, 600).unwrap();
    let t8 = packet.peak_time(8.0, 0.0, 0.3, 600).unwrap();
    assert!(((t8 - t4) * v / 4.0 - 1.0).abs() < 0.01, "{t4} {t8}");
    assert!(packet.at(b.x_b - 0.1, 0.05).is_err());
}
