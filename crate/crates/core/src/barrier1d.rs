//! One-dimensional scattering: step phase, Wigner delay, reflection from the
//! radial barrier of a circular well, rectangular-barrier transmission and
//! transmitted wave packets.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corefn::{bessel_k_log_derivative, bessel_k_triple, hankel1_triple};
use crate::error::{Error, Result};
use crate::packet::PacketSpec;
use crate::spectrum::PotentialSpec;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `0` for `x < x_a`, `v_max` on `[x_a, x_b]`, `v_min` beyond.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RectBarrier {
    pub v_max: f64,
    pub v_min: f64,
    pub x_a: f64,
    pub x_b: f64,
}

impl Default for RectBarrier {
    fn default() -> Self {
        RectBarrier {
            v_max: 100.0,
            v_min: 60.0,
            x_a: 0.0,
            x_b: 1.0,
        }
    }
}

impl RectBarrier {
    pub fn new(v_max: f64, v_min: f64, x_a: f64, x_b: f64) -> Result<Self> {
        let b = RectBarrier {
            v_max,
            v_min,
            x_a,
            x_b,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.v_max, self.v_min, self.x_a, self.x_b]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.x_a > self.x_b || self.v_min >= self.v_max {
            return Err(Error::Domain(format!(
                "invalid rectangular barrier {self:?}"
            )));
        }
        Ok(())
    }
}

/// Radial effective potential of the well with the interior replaced by a flat plateau.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModifiedEffBarrier {
    pub m: u32,
    pub potential: PotentialSpec,
    pub plateau: f64,
}

impl ModifiedEffBarrier {
    /// Plateau `ħ²m²/(2m*R²)`, continuous with the effective potential just inside `R`.
    pub fn new(m: u32, potential: PotentialSpec) -> Self {
        let p = &potential;
        let plateau = (p.hbar * m as f64 / p.radius).powi(2) / (2.0 * p.mass);
        ModifiedEffBarrier {
            m,
            potential,
            plateau,
        }
    }

    pub fn with_plateau(mut self, plateau: f64) -> Self {
        self.plateau = plateau;
        self
    }

    /// Plane-wave wavenumber on the plateau.
    pub fn q(&self, e: f64) -> f64 {
        (2.0 * self.potential.mass * (e - self.plateau)).sqrt() / self.potential.hbar
    }

    /// Outer classical turning point, `V0 + ħ²m²/(2m*r²) = E`, for `E > V0`.
    pub fn exit_radius(&self, e: f64) -> Result<f64> {
        let p = &self.potential;
        if !(e > p.v0) {
            return Err(Error::Domain(format!(
                "no outer turning point below V0 (E = {e})"
            )));
        }
        Ok(p.hbar * self.m as f64 / (2.0 * p.mass * (e - p.v0)).sqrt())
    }

    /// `d ln ψ/dr` of the exterior solution at `r = R`, with the ratio `ψ(r_out)/ψ(R)`.
    fn exterior(&self, e: f64, r_out: Option<f64>) -> Result<(Complex64, Complex64)> {
        let p = &self.potential;
        let scale = (2.0 * p.mass * (e - p.v0).abs()).sqrt() / p.hbar;
        if scale == 0.0 {
            let l = Complex64::new(-(self.m as f64) / p.radius, 0.0);
            let ratio = r_out.map_or(Complex64::new(1.0, 0.0), |r| {
                (p.radius / r).powi(self.m as i32).into()
            });
            return Ok((l, ratio));
        }
        if e < p.v0 {
            let t = bessel_k_triple(self.m, scale * p.radius)?;
            let l = scale * bessel_k_log_derivative(&t);
            let ratio = match r_out {
                Some(r) => {
                    let o = bessel_k_triple(self.m, scale * r)?;
                    (o.mid / t.mid * (o.log_scale - t.log_scale).exp()).into()
                }
                None => Complex64::new(1.0, 0.0),
            };
            Ok((l.into(), ratio))
        } else {
            let z = Complex64::new(scale * p.radius, 0.0);
            let t = hankel1_triple(self.m, z)?;
            let l = t.log_derivative() * scale;
            let ratio = match r_out {
                Some(r) => {
                    let o = hankel1_triple(self.m, Complex64::new(scale * r, 0.0))?;
                    o.mid / t.mid * (o.log_scale - t.log_scale).exp()
                }
                None => Complex64::new(1.0, 0.0),
            };
            Ok((l, ratio))
        }
    }
}

/// `φ = 2 arctan √(E/(V0−E)) − π`.
pub fn step_phase(e: f64, v0: f64) -> Result<f64> {
    check_below_step(e, v0)?;
    Ok(2.0 * (e / (v0 - e)).sqrt().atan() - PI)
}

/// `(ħ/V0)(√((V0−E)/E) + √(E/(V0−E)))` with `ħ = 1`.
pub fn wigner_delay(e: f64, v0: f64) -> Result<f64> {
    check_below_step(e, v0)?;
    Ok((((v0 - e) / e).sqrt() + (e / (v0 - e)).sqrt()) / v0)
}

fn check_below_step(e: f64, v0: f64) -> Result<()> {
    if !(e > 0.0 && e < v0) {
        return Err(Error::Domain(format!(
            "need 0 < E < V0, got E = {e}, V0 = {v0}"
        )));
    }
    Ok(())
}

/// Reflection amplitude on the plateau, `ψ = e^{iq(r−R)} + F e^{−iq(r−R)}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reflection {
    pub f: Complex64,
    /// `arg F` in `(−π, π]`.
    pub phi_r: f64,
    /// Transmitted flux over incident flux, from the exterior current at `R`.
    pub transmitted_flux: f64,
}

pub fn reflection_modified(bar: &ModifiedEffBarrier, e: f64) -> Result<Reflection> {
    if !(e > bar.plateau) || !e.is_finite() {
        return Err(Error::Domain(format!(
            "energy {e} not above the plateau {}",
            bar.plateau
        )));
    }
    let q = bar.q(e);
    let (l, _) = bar.exterior(e, None)?;
    let f = (I * q - l) / (I * q + l);
    let p = &bar.potential;
    // ψ(R) = 1 + F, current Im(ψ*ψ′)·ħ/m* against the incident ħq/m*
    let transmitted_flux = if e > p.v0 {
        ((1.0 + f).norm_sqr() * l.im) / q
    } else {
        0.0
    };
    Ok(Reflection {
        f,
        phi_r: f.arg(),
        transmitted_flux,
    })
}

/// Transmission and reflection amplitudes of a 1D scatterer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transmission {
    /// Transmitted amplitude at the exit position.
    pub t: Complex64,
    pub r: Complex64,
    pub phi_t: f64,
    pub phi_r: f64,
    /// `|r|² + (k′/k)|t|² − 1`.
    pub flux_error: f64,
}

/// Two-interface plane-wave matching; incident `e^{ik(x−x_a)}`, transmitted `t e^{ik′(x−x_b)}`.
pub fn rect_transmission(bar: &RectBarrier, e: f64) -> Result<Transmission> {
    bar.validate()?;
    if !(e > bar.v_min) || !e.is_finite() {
        return Err(Error::Domain(format!(
            "E = {e} has no propagating exit above {}",
            bar.v_min
        )));
    }
    let k = (2.0 * e).sqrt();
    let kp = (2.0 * (e - bar.v_min)).sqrt();
    let kk = Complex64::new(2.0 * (e - bar.v_max), 0.0).sqrt();
    let w = bar.x_b - bar.x_a;
    let kw = kk * w;
    let cos = kw.cos();
    let sinc = if kw.norm() < 1e-4 {
        w * (1.0 - kw * kw / 6.0)
    } else {
        kw.sin() / kk
    };
    let den = cos * (1.0 + kp / k) - I * (kk * kk * sinc / k + kp * sinc);
    let t = 2.0 / den;
    let r = t * (cos - I * kp * sinc) - 1.0;
    let flux_error = r.norm_sqr() + kp / k * t.norm_sqr() - 1.0;
    Ok(Transmission {
        t,
        r,
        phi_t: t.arg(),
        phi_r: r.arg(),
        flux_error,
    })
}

/// Plateau-to-exterior transmission, amplitude taken at the exit position `x_b`.
pub fn modified_transmission(bar: &ModifiedEffBarrier, e: f64, x_b: f64) -> Result<Transmission> {
    let p = &bar.potential;
    if !(e > p.v0) || !(e > bar.plateau) {
        return Err(Error::Domain(format!(
            "E = {e} has no propagating exit above V0 = {}",
            p.v0
        )));
    }
    if !(x_b >= p.radius) {
        return Err(Error::Domain(format!(
            "exit position {x_b} lies inside R = {}",
            p.radius
        )));
    }
    let q = bar.q(e);
    let (l, ratio) = bar.exterior(e, Some(x_b))?;
    let f = (I * q - l) / (I * q + l);
    let t = (1.0 + f) * ratio;
    let flux_error = f.norm_sqr() + (1.0 + f).norm_sqr() * l.im / q - 1.0;
    Ok(Transmission {
        t,
        r: f,
        phi_t: t.arg(),
        phi_r: f.arg(),
        flux_error,
    })
}

/// One sample of an unwrapped phase curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub e: f64,
    pub phase: f64,
    pub modulus: f64,
}

/// Remove `2π` jumps in place.
pub fn unwrap(phases: &mut [f64]) {
    let mut offset = 0.0;
    for i in 1..phases.len() {
        let raw = phases[i] + offset;
        let d = raw - phases[i - 1];
        let k = (d / (2.0 * PI)).round();
        offset -= k * 2.0 * PI;
        phases[i] = raw - k * 2.0 * PI;
    }
}

/// Sample `f(E) → (phase, modulus)` on `n` uniform points and unwrap.
pub fn phase_curve(
    e_lo: f64,
    e_hi: f64,
    n: usize,
    f: impl Fn(f64) -> Result<(f64, f64)> + Sync,
) -> Result<Vec<PhasePoint>> {
    if n < 2 || !(e_hi > e_lo) {
        return Err(Error::Domain(format!(
            "bad energy grid [{e_lo}, {e_hi}] with {n} points"
        )));
    }
    let pts: Vec<PhasePoint> = (0..n)
        .into_par_iter()
        .map(|i| {
            let e = e_lo + (e_hi - e_lo) * i as f64 / (n - 1) as f64;
            f(e).map(|(phase, modulus)| PhasePoint { e, phase, modulus })
        })
        .collect::<Result<_>>()?;
    let mut phases: Vec<f64> = pts.iter().map(|p| p.phase).collect();
    unwrap(&mut phases);
    Ok(pts
        .into_iter()
        .zip(phases)
        .map(|(p, phase)| PhasePoint { phase, ..p })
        .collect())
}

/// `Σ |φ_{i+1} − φ_i|`.
pub fn total_variation(curve: &[PhasePoint]) -> f64 {
    curve
        .windows(2)
        .map(|w| (w[1].phase - w[0].phase).abs())
        .sum()
}

/// `ħ dφ/dE` at `e0` from a sampled, unwrapped curve (centered difference around `e0`).
pub fn delay_from_phase(curve: &[PhasePoint], e0: f64, hbar: f64) -> Result<f64> {
    let n = curve.len();
    if n < 3 {
        return Err(Error::Domain("phase curve needs at least 3 points".into()));
    }
    let i = curve
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1.e - e0).abs().total_cmp(&(b.1.e - e0).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0)
        .clamp(1, n - 2);
    if !(e0 >= curve[i - 1].e && e0 <= curve[i + 1].e) {
        return Err(Error::Domain(format!(
            "E0 = {e0} outside the sampled curve"
        )));
    }
    let (a, b, c) = (curve[i - 1], curve[i], curve[i + 1]);
    if (b.phase - a.phase).abs() > PI || (c.phase - b.phase).abs() > PI {
        return Err(Error::Unwrap(format!("phase jump near E = {}", b.e)));
    }
    Ok(hbar * (c.phase - a.phase) / (c.e - a.e))
}

/// Theory value of the boundary-parallel shift from the radial reflection delay.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GhTheory {
    pub l_gh: f64,
    /// `ħ dφ_R/dE` at `E0`.
    pub delay: f64,
    /// `delay / s0`.
    pub delay_s0: f64,
    /// Difference between the step-`h` and Richardson-extrapolated derivatives.
    pub richardson_gap: f64,
}

pub fn gh_theory(spec: &PacketSpec) -> Result<GhTheory> {
    let pot = spec.potential;
    let e0 = spec.e0();
    if !(e0 < pot.v0) {
        return Err(Error::Domain(format!(
            "E0 = {e0} is not below V0 = {}",
            pot.v0
        )));
    }
    let m = spec.m0.abs().round() as u32;
    let bar = ModifiedEffBarrier::new(m, pot);
    let phase = |e: f64| reflection_modified(&bar, e).map(|r| r.phi_r);
    let centred = |h: f64| -> Result<f64> {
        let mut hi = phase(e0 + h)?;
        let lo = phase(e0 - h)?;
        while hi - lo > PI {
            hi -= 2.0 * PI;
        }
        while hi - lo < -PI {
            hi += 2.0 * PI;
        }
        Ok((hi - lo) / (2.0 * h))
    };
    let h = 1e-3 * pot.v0;
    let d1 = centred(h)?;
    let d2 = centred(0.5 * h)?;
    let extrapolated = (4.0 * d2 - d1) / 3.0;
    let richardson_gap = (d1 - extrapolated).abs();
    if richardson_gap > 1e-3 * d1.abs() {
        return Err(Error::Accuracy(format!(
            "reflection-phase derivative unstable at E0 = {e0}: {d1} vs {extrapolated}"
        )));
    }
    let delay = pot.hbar * d1;
    let v_theta = pot.hbar * spec.m0.abs() / (pot.mass * pot.radius);
    Ok(GhTheory {
        l_gh: v_theta * delay,
        delay,
        delay_s0: delay / spec.s0(),
        richardson_gap,
    })
}

/// Gaussian window `W(k) = exp(−(k−k0)²/σ²)` over incident wavenumbers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window1d {
    pub k0: f64,
    pub sigma_k: f64,
}

/// Scatterer seen by a 1D packet.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Barrier1d {
    Rect(RectBarrier),
    /// Plateau incidence, amplitude read at `exit`.
    Modified {
        barrier: ModifiedEffBarrier,
        exit: f64,
    },
}

impl Barrier1d {
    /// Floor of the incident region.
    pub fn incident_floor(&self) -> f64 {
        match self {
            Barrier1d::Rect(_) => 0.0,
            Barrier1d::Modified { barrier, .. } => barrier.plateau,
        }
    }

    /// Floor of the exit region.
    pub fn exit_floor(&self) -> f64 {
        match self {
            Barrier1d::Rect(b) => b.v_min,
            Barrier1d::Modified { barrier, .. } => barrier.potential.v0,
        }
    }

    pub fn exit_position(&self) -> f64 {
        match self {
            Barrier1d::Rect(b) => b.x_b,
            Barrier1d::Modified { exit, .. } => *exit,
        }
    }

    /// Transmitted amplitude at the exit position.
    pub fn transmission(&self, e: f64) -> Result<Transmission> {
        match self {
            Barrier1d::Rect(b) => rect_transmission(b, e),
            Barrier1d::Modified { barrier, exit } => modified_transmission(barrier, e, *exit),
        }
    }
}

/// `W(k)T(k)` sampled on a trapezoid grid, reused for many `(x, t)`.
#[derive(Clone, Debug)]
pub struct TransmittedPacket {
    barrier: Barrier1d,
    coarse: Vec<Node>,
    fine: Vec<Node>,
    weight_sum: f64,
}

#[derive(Clone, Copy, Debug)]
struct Node {
    weight: Complex64,
    energy: f64,
    k_out: f64,
}

impl TransmittedPacket {
    /// Trapezoid grid covering `k0 ± 6σ` with `nodes` points and its doubled refinement.
    pub fn new(window: Window1d, barrier: Barrier1d, nodes: usize) -> Result<Self> {
        if !(window.sigma_k > 0.0) || !(window.k0 > 0.0) {
            return Err(Error::Domain(format!("invalid window {window:?}")));
        }
        let nodes = nodes.max(600);
        // nodes uniform in the exit wavenumber k′: dk = (k′/k) dk′ removes the √ kink at threshold
        let gap = 2.0 * (barrier.exit_floor() - barrier.incident_floor());
        let k_of = |u: f64| (u * u + gap).sqrt();
        let u_of = |k: f64| (k * k - gap).max(0.0).sqrt();
        let lo = u_of((window.k0 - 6.0 * window.sigma_k).max(0.0));
        let hi = u_of(window.k0 + 6.0 * window.sigma_k);
        if !(hi > lo) {
            return Err(Error::Domain(format!(
                "window {window:?} lies below the exit threshold"
            )));
        }
        let build = |n: usize| -> Result<Vec<Node>> {
            let h = (hi - lo) / (n - 1) as f64;
            (0..n)
                .into_par_iter()
                .map(|i| {
                    let u = lo + h * i as f64;
                    let k = k_of(u);
                    let e = barrier.incident_floor() + 0.5 * k * k;
                    let tw = if i == 0 || i == n - 1 { 0.5 * h } else { h };
                    if u == 0.0 || k == 0.0 {
                        return Ok(Node {
                            weight: Complex64::new(0.0, 0.0),
                            energy: e,
                            k_out: 0.0,
                        });
                    }
                    let w = (-((k - window.k0) / window.sigma_k).powi(2)).exp();
                    let t = barrier.transmission(e)?.t;
                    Ok(Node {
                        weight: t * (w * tw * u / k),
                        energy: e,
                        k_out: u,
                    })
                })
                .collect()
        };
        let coarse = build(nodes)?;
        let fine = build(2 * nodes - 1)?;
        let weight_sum = fine.iter().map(|n| n.weight.norm()).sum();
        Ok(TransmittedPacket {
            barrier,
            coarse,
            fine,
            weight_sum,
        })
    }

    fn sum(nodes: &[Node], dx: f64, t: f64) -> Complex64 {
        nodes
            .iter()
            .filter(|n| n.weight != Complex64::new(0.0, 0.0))
            .map(|n| n.weight * Complex64::from_polar(1.0, n.k_out * dx - n.energy * t))
            .sum()
    }

    /// `Ψ(x, t)` for `x` at or beyond the exit position.
    pub fn at(&self, x: f64, t: f64) -> Result<Complex64> {
        let dx = x - self.barrier.exit_position();
        if dx < 0.0 {
            return Err(Error::Domain(format!(
                "x = {x} lies before the exit position"
            )));
        }
        let a = Self::sum(&self.coarse, dx, t);
        let b = Self::sum(&self.fine, dx, t);
        if (a - b).norm() > 1e-6 * self.weight_sum.max(f64::MIN_POSITIVE) {
            return Err(Error::Accuracy(format!(
                "k quadrature not converged at x = {x}, t = {t}: |Δ| = {:e}",
                (a - b).norm()
            )));
        }
        Ok(b)
    }

    /// Time of the largest `|Ψ(x, t)|²` on `[t_lo, t_hi]`, refined by a parabola.
    pub fn peak_time(&self, x: f64, t_lo: f64, t_hi: f64, steps: usize) -> Result<f64> {
        let steps = steps.max(3);
        let ts: Vec<f64> = (0..=steps)
            .map(|i| t_lo + (t_hi - t_lo) * i as f64 / steps as f64)
            .collect();
        let vals: Vec<f64> = ts
            .iter()
            .map(|&t| self.at(x, t).map(|v| v.norm_sqr()))
            .collect::<Result<_>>()?;
        let i = vals
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        if i == 0 || i == steps {
            return Err(Error::Range(format!(
                "|Ψ|² peak at x = {x} lies on the edge of [{t_lo}, {t_hi}]"
            )));
        }
        let (f0, f1, f2) = (vals[i - 1], vals[i], vals[i + 1]);
        let h = ts[1] - ts[0];
        let den = f0 - 2.0 * f1 + f2;
        Ok(if den < 0.0 {
            ts[i] + 0.5 * h * (f0 - f2) / den
        } else {
            ts[i]
        })
    }
}

/// `Ψ(x, t) = ∫ dk W(k) T(k) e^{i(k′(x−x_b) − E t/ħ)}` (with `ħ = m* = 1`).
pub fn tunneling_packet_1d(
    window: Window1d,
    barrier: Barrier1d,
    x: f64,
    t: f64,
) -> Result<Complex64> {
    TransmittedPacket::new(window, barrier, 600)?.at(x, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn step_phase_symmetric_point() {
        assert_relative_eq!(
            step_phase(2500.0, 5000.0).unwrap(),
            -PI / 2.0,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            wigner_delay(2500.0, 5000.0).unwrap(),
            4.0e-4,
            max_relative = 1e-14
        );
        assert!(step_phase(5000.0, 5000.0).is_err());
        assert!(wigner_delay(0.0, 5000.0).is_err());
    }

    #[test]
    fn zero_width_is_single_step() {
        let bar = RectBarrier::new(100.0, 60.0, 1.0, 1.0).unwrap();
        for e in [61.0, 80.0, 150.0] {
            let (k, kp) = ((2.0f64 * e).sqrt(), (2.0f64 * (e - 60.0)).sqrt());
            let t = rect_transmission(&bar, e).unwrap().t;
            assert_relative_eq!(t.re, 2.0 * k / (k + kp), max_relative = 1e-12);
            assert!(t.im.abs() < 1e-12);
        }
    }

    #[test]
    fn rect_flux_across_barrier_top() {
        let bar = RectBarrier::default();
        for e in [60.5, 80.0, 99.999999, 100.0, 100.000001, 140.0, 1e4] {
            assert!(
                rect_transmission(&bar, e).unwrap().flux_error.abs() < 1e-12,
                "E = {e}"
            );
        }
        assert!(rect_transmission(&bar, 60.0).is_err());
    }

    #[test]
    fn evanescent_exterior_reflects_totally() {
        let bar = ModifiedEffBarrier::new(120, PotentialSpec::default());
        for e in [2000.0, 3500.0, 4999.0] {
            assert_relative_eq!(
                reflection_modified(&bar, e).unwrap().f.norm(),
                1.0,
                epsilon = 1e-10
            );
        }
        assert!(reflection_modified(&bar, 1800.0).is_err());
    }

    #[test]
    fn unwrap_removes_jumps() {
        let mut p = vec![3.0, -3.1, -2.9, 3.1];
        unwrap(&mut p);
        for w in p.windows(2) {
            assert!((w[1] - w[0]).abs() < 1.0);
        }
    }
}
