//! Free Gaussian packets and their expansion over the mode basis.
//!
//! Modes carry the complex angular factor `e^{iℓθ}/√(2π)` with `ℓ = ±m`. The
//! coefficient of mode `(m, n)` on branch `ℓ` is `∫ r φ(r) g_ℓ(r) dr`, where
//! `g_ℓ(r) = (2π)^{-1/2} ∫ e^{−iℓθ} Ψ(r, θ) dθ` is taken by FFT on rings. The
//! same product, without complex conjugation of the radial function, serves
//! bound states (real `φ`) and resonances (bilinear pairing of `ℓ` with `−ℓ`).

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::Panels;
use crate::spectrum::{EigenMode, ModeClass, ModeTable, PotentialSpec, RadialProfile};

/// Gaussian packet launched inside the circle toward a boundary point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PacketSpec {
    /// Central angular momentum in units of ħ (sign selects the mirror image).
    pub m0: f64,
    pub k0: f64,
    pub sigma: f64,
    /// Point on the circle hit at the impact time.
    pub impact: [f64; 2],
    pub potential: PotentialSpec,
}

impl PacketSpec {
    /// Packet aimed at `(0, R)`.
    pub fn new(potential: PotentialSpec, m0: f64, k0: f64, sigma: f64) -> Result<Self> {
        let p = PacketSpec {
            m0,
            k0,
            sigma,
            impact: [0.0, potential.radius],
            potential,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.potential.validate()?;
        if !(self.k0 > 0.0 && self.k0.is_finite()) {
            return Err(Error::Domain(format!(
                "k0 must be positive, got {}",
                self.k0
            )));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::Domain(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        let s = self.sin_chi();
        if !(s.abs() < 1.0) {
            return Err(Error::Domain(format!(
                "|m0/(k0 R)| = {} must be below 1",
                s.abs()
            )));
        }
        if self.sigma.sqrt().recip() >= self.potential.radius / 5.0 {
            return Err(Error::Domain(format!(
                "packet size 1/√σ = {} is not small against R/5",
                self.sigma.sqrt().recip()
            )));
        }
        let rc = (self.impact[0].powi(2) + self.impact[1].powi(2)).sqrt();
        if (rc - self.potential.radius).abs() > 1e-9 * self.potential.radius {
            return Err(Error::Domain(format!(
                "impact point {:?} is not on the circle",
                self.impact
            )));
        }
        Ok(())
    }

    pub fn sin_chi(&self) -> f64 {
        self.m0 / (self.k0 * self.potential.radius)
    }

    /// Incidence angle from the boundary normal.
    pub fn chi(&self) -> f64 {
        self.sin_chi().asin()
    }

    pub fn e0(&self) -> f64 {
        self.potential.energy(Complex64::new(self.k0, 0.0)).re
    }

    /// Time unit `m*/(ħk0)`, which is `1/k0` for `m* = ħ = 1`.
    pub fn s0(&self) -> f64 {
        self.potential.mass / (self.potential.hbar * self.k0)
    }

    pub fn velocity(&self) -> f64 {
        self.potential.hbar * self.k0 / self.potential.mass
    }

    /// Outward unit normal and tangent (`n × t` pointing clockwise) at the impact point.
    pub fn impact_frame(&self) -> ([f64; 2], [f64; 2]) {
        let r = self.potential.radius;
        let n = [self.impact[0] / r, self.impact[1] / r];
        (n, [n[1], -n[0]])
    }

    /// Unit propagation direction.
    pub fn direction(&self) -> [f64; 2] {
        let (n, t) = self.impact_frame();
        let (s, c) = (self.sin_chi(), self.chi().cos());
        [s * t[0] + c * n[0], s * t[1] + c * n[1]]
    }

    /// Mean position at launch (one unit of distance before impact at `m* = ħ = 1`).
    pub fn initial_mean(&self) -> [f64; 2] {
        let d = self.direction();
        let back = self.velocity() * self.s0();
        [self.impact[0] - back * d[0], self.impact[1] - back * d[1]]
    }

    /// Closed-form time corresponding to a time `t` (units of `s0`) after launch.
    pub fn closed_form_time(&self, t: f64) -> f64 {
        (t - 1.0) * self.s0()
    }
}

/// Exact free-particle Gaussian at closed-form time `t` (impact at `t = 0`).
pub fn gaussian_free(spec: &PacketSpec, x: [f64; 2], t: f64) -> Complex64 {
    let p = &spec.potential;
    let tau = p.hbar * t / p.mass;
    let d = [x[0] - spec.impact[0], x[1] - spec.impact[1]];
    let dir = spec.direction();
    let kx = spec.k0 * (dir[0] * d[0] + dir[1] * d[1]);
    let r2 = d[0] * d[0] + d[1] * d[1];
    let den = Complex64::new(1.0, spec.sigma * tau);
    let num = Complex64::new(-0.5 * spec.sigma * r2, kx - 0.5 * spec.k0 * spec.k0 * tau);
    (spec.sigma / PI).sqrt() / den * (num / den).exp()
}

/// One expansion coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub mode: EigenMode,
    /// Signed angular number `±m`.
    pub ell: i64,
    pub coeff: Complex64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeCounts {
    pub bound: usize,
    pub tunneling: usize,
    pub leaky: usize,
}

impl ModeCounts {
    pub fn resonance(&self) -> usize {
        self.tunneling + self.leaky
    }

    pub fn total(&self) -> usize {
        self.bound + self.resonance()
    }

    fn of(entries: &[Coefficient]) -> Self {
        let mut c = ModeCounts::default();
        for e in entries {
            match e.mode.class {
                ModeClass::Bound => c.bound += 1,
                ModeClass::Tunneling => c.tunneling += 1,
                ModeClass::Leaky => c.leaky += 1,
            }
        }
        c
    }
}

/// Truncated expansion of a packet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Expansion {
    pub potential: PotentialSpec,
    /// Sorted by `(m, n, ell descending)`.
    pub entries: Vec<Coefficient>,
    pub threshold: f64,
    pub counts: ModeCounts,
}

impl Expansion {
    pub fn new(potential: PotentialSpec, entries: Vec<Coefficient>, threshold: f64) -> Self {
        let counts = ModeCounts::of(&entries);
        Expansion {
            potential,
            entries,
            threshold,
            counts,
        }
    }

    /// `Σ|c|²` over bound and over resonance entries.
    pub fn weights(&self) -> (f64, f64) {
        let mut w = (0.0, 0.0);
        for e in &self.entries {
            if e.mode.class == ModeClass::Bound {
                w.0 += e.coeff.norm_sqr();
            } else {
                w.1 += e.coeff.norm_sqr();
            }
        }
        w
    }

    /// Every coefficient multiplied by `alpha`.
    pub fn scaled(&self, alpha: Complex64) -> Self {
        let mut out = self.clone();
        for e in &mut out.entries {
            e.coeff *= alpha;
        }
        out
    }

    /// Entries restricted to one class filter.
    pub fn filtered(&self, keep: impl Fn(&Coefficient) -> bool) -> Self {
        let entries: Vec<_> = self.entries.iter().copied().filter(|e| keep(e)).collect();
        Expansion::new(self.potential, entries, self.threshold)
    }

    /// Entry-wise sum of two expansions over the same potential.
    pub fn combined(&self, other: &Expansion) -> Self {
        let mut entries = self.entries.clone();
        entries.extend_from_slice(&other.entries);
        entries.sort_by(|a, b| entry_order(a).cmp(&entry_order(b)));
        let mut merged: Vec<Coefficient> = Vec::with_capacity(entries.len());
        for e in entries {
            match merged.last_mut() {
                Some(l) if entry_order(l) == entry_order(&e) => l.coeff += e.coeff,
                _ => merged.push(e),
            }
        }
        Expansion::new(self.potential, merged, self.threshold.min(other.threshold))
    }
}

fn entry_order(c: &Coefficient) -> (u32, u32, i64) {
    (c.mode.m, c.mode.n, -c.ell)
}

/// All coefficients of a packet against a mode table, before truncation.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientSet {
    pub packet: PacketSpec,
    pub entries: Vec<Coefficient>,
    /// `(2π)^{-1/2}`-normalized angular-band norms `‖g_ℓ‖` keyed by `ℓ`.
    pub band_norms: Vec<(i64, f64)>,
}

impl CoefficientSet {
    pub fn truncate(&self, threshold: f64) -> Expansion {
        let entries = self
            .entries
            .iter()
            .copied()
            .filter(|e| e.coeff.norm() >= threshold)
            .collect();
        Expansion::new(self.packet.potential, entries, threshold)
    }

    /// Threshold that keeps exactly the `count` largest coefficients.
    pub fn threshold_for_count(&self, count: usize) -> Result<f64> {
        let mut mags: Vec<f64> = self.entries.iter().map(|e| e.coeff.norm()).collect();
        if count == 0 || count > mags.len() {
            return Err(Error::Domain(format!(
                "cannot keep {count} of {} coefficients",
                mags.len()
            )));
        }
        mags.sort_by(|a, b| b.total_cmp(a));
        Ok(if count == mags.len() {
            mags[count - 1]
        } else {
            0.5 * (mags[count - 1] + mags[count])
        })
    }

    /// Raise a coverage error when a coefficient at the edge of the table reaches `threshold`.
    pub fn check_coverage(&self, table: &ModeTable, k_max: f64, threshold: f64) -> Result<()> {
        let Some((m_lo, m_hi)) = table.m_range() else {
            return Err(Error::Coverage("empty mode table".into()));
        };
        let spacing = PI / table.potential.radius;
        for e in &self.entries {
            if e.coeff.norm() < threshold {
                continue;
            }
            let m = e.mode.m;
            if (m == m_lo && m_lo > 0) || m == m_hi {
                return Err(Error::Coverage(format!(
                    "|c| = {:.3e} at table edge m = {m} (n = {})",
                    e.coeff.norm(),
                    e.mode.n
                )));
            }
            if e.mode.k.re > k_max - spacing {
                return Err(Error::Coverage(format!(
                    "|c| = {:.3e} at table edge Re k = {:.3} > {:.3} (m = {m})",
                    e.coeff.norm(),
                    e.mode.k.re,
                    k_max - spacing
                )));
            }
        }
        for &(ell, norm) in &self.band_norms {
            let m = ell.unsigned_abs() as u32;
            if norm >= threshold && (m < m_lo || m > m_hi) {
                return Err(Error::Coverage(format!(
                    "angular band ℓ = {ell} (‖g‖ = {norm:.3e}) lies outside m ∈ [{m_lo}, {m_hi}]"
                )));
            }
        }
        Ok(())
    }
}

/// Ring samples of the packet, transformed to angular bands.
struct Bands {
    rule: Panels,
    ell_max: i64,
    /// `values[i][ell + ell_max]` = `g_ℓ(r_i)`.
    values: Vec<Vec<Complex64>>,
}

impl Bands {
    fn at(&self, i: usize, ell: i64) -> Complex64 {
        if ell.abs() > self.ell_max {
            Complex64::new(0.0, 0.0)
        } else {
            self.values[i][(ell + self.ell_max) as usize]
        }
    }

    fn norms(&self) -> Vec<(i64, f64)> {
        (-self.ell_max..=self.ell_max)
            .map(|ell| {
                let s: f64 = (0..self.rule.len())
                    .map(|i| self.rule.weights[i] * self.rule.nodes[i] * self.at(i, ell).norm_sqr())
                    .sum();
                (ell, s.sqrt())
            })
            .collect()
    }
}

/// Radial interval outside which the launched packet is below `1e-12` of its peak.
fn packet_support(spec: &PacketSpec) -> (f64, f64) {
    let tau = spec.potential.hbar * spec.closed_form_time(0.0) / spec.potential.mass;
    let sigma_eff = spec.sigma / (1.0 + (spec.sigma * tau).powi(2));
    let reach = (2.0 * 12.0 * 10f64.ln() / sigma_eff).sqrt();
    let c = spec.initial_mean();
    let rc = (c[0] * c[0] + c[1] * c[1]).sqrt();
    ((rc - reach).max(0.0), rc + reach)
}

const PANEL_WIDTH: f64 = 0.05;
const PANEL_ORDER: usize = 16;

fn sample_bands(spec: &PacketSpec, ell_max: i64, panel_width: f64) -> Bands {
    let (lo, hi) = packet_support(spec);
    let radius = spec.potential.radius;
    let rule =
        if lo < radius && hi > radius {
            Panels::with_max_width(lo, radius, panel_width, PANEL_ORDER)
                .join(Panels::with_max_width(radius, hi, panel_width, PANEL_ORDER))
        } else {
            Panels::with_max_width(lo, hi, panel_width, PANEL_ORDER)
        };
    let n_theta = (4 * ell_max as usize + 64).next_power_of_two();
    let fft = FftPlanner::new().plan_fft_forward(n_theta);
    let t_launch = spec.closed_form_time(0.0);
    let scale = (2.0 * PI).sqrt() / n_theta as f64;
    let values = rule
        .nodes
        .par_iter()
        .map(|&r| {
            let mut buf: Vec<Complex64> = (0..n_theta)
                .map(|j| {
                    let th = 2.0 * PI * j as f64 / n_theta as f64;
                    gaussian_free(spec, [r * th.cos(), r * th.sin()], t_launch)
                })
                .collect();
            fft.process(&mut buf);
            (-ell_max..=ell_max)
                .map(|ell| buf[ell.rem_euclid(n_theta as i64) as usize] * scale)
                .collect()
        })
        .collect();
    Bands {
        rule,
        ell_max,
        values,
    }
}

/// Overlaps of the launched packet with every mode of `table` on both angular branches.
pub fn compute_coefficients(spec: &PacketSpec, table: &ModeTable) -> Result<CoefficientSet> {
    compute_coefficients_with(spec, table, PANEL_WIDTH)
}

/// As [`compute_coefficients`] with an explicit radial panel width (for convergence checks).
pub fn compute_coefficients_with(
    spec: &PacketSpec,
    table: &ModeTable,
    panel_width: f64,
) -> Result<CoefficientSet> {
    spec.validate()?;
    if table.potential != spec.potential {
        return Err(Error::Domain(
            "mode table and packet use different potentials".into(),
        ));
    }
    let m_hi = table.m_range().map_or(0, |r| r.1) as i64;
    let bands = sample_bands(spec, m_hi.max(1) + 16, panel_width);
    let pot = spec.potential;
    let per_mode: Vec<Result<Vec<Coefficient>>> = table
        .modes
        .par_iter()
        .map(|mode| {
            let prof = RadialProfile::of_mode(&pot, mode)?;
            let mut acc = [Complex64::new(0.0, 0.0); 2];
            let m = mode.m as i64;
            for (i, (&r, &w)) in bands.rule.nodes.iter().zip(&bands.rule.weights).enumerate() {
                let phi = prof.value(r)? * (w * r);
                acc[0] += phi * bands.at(i, m);
                acc[1] += phi * bands.at(i, -m);
            }
            let mut out = vec![Coefficient {
                mode: *mode,
                ell: m,
                coeff: acc[0],
            }];
            if m > 0 {
                out.push(Coefficient {
                    mode: *mode,
                    ell: -m,
                    coeff: acc[1],
                });
            }
            Ok(out)
        })
        .collect();
    let mut entries = Vec::with_capacity(2 * table.modes.len());
    for r in per_mode {
        entries.extend(r?);
    }
    Ok(CoefficientSet {
        packet: *spec,
        entries,
        band_norms: bands.norms(),
    })
}

/// Expand against a given table, checking that its edges carry no coefficient above `threshold`.
pub fn expand(
    spec: &PacketSpec,
    table: &ModeTable,
    k_max: f64,
    threshold: f64,
) -> Result<Expansion> {
    let set = compute_coefficients(spec, table)?;
    set.check_coverage(table, k_max, threshold)?;
    Ok(set.truncate(threshold))
}

/// Mode table window sized from the packet's angular bands and momentum spread.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub m_lo: u32,
    pub m_hi: u32,
    pub k_max: f64,
}

/// Initial table window: angular numbers whose band norm reaches `threshold/4`,
/// and `k0 + √(2σ ln(1/threshold)) + 10`.
pub fn initial_window(spec: &PacketSpec, threshold: f64) -> Result<Window> {
    spec.validate()?;
    let guess = (spec.k0 * (spec.potential.radius + 3.0)).ceil() as i64;
    let bands = sample_bands(spec, guess, PANEL_WIDTH);
    let ms: Vec<u32> = bands
        .norms()
        .into_iter()
        .filter(|&(_, n)| n >= 0.25 * threshold)
        .map(|(ell, _)| ell.unsigned_abs() as u32)
        .collect();
    let (m_lo, m_hi) = match (ms.iter().min(), ms.iter().max()) {
        (Some(&a), Some(&b)) => (a.saturating_sub(2), b + 2),
        _ => {
            return Err(Error::Coverage(
                "packet has no angular band above threshold".into(),
            ))
        }
    };
    let k_max = spec.k0 + (2.0 * spec.sigma * (1.0 / threshold).ln()).sqrt() + 10.0;
    Ok(Window { m_lo, m_hi, k_max })
}

/// Solve a mode table sized for the packet, widening it until coverage holds.
pub fn solve_for_packet(
    spec: &PacketSpec,
    threshold: f64,
) -> Result<(ModeTable, CoefficientSet, Window)> {
    let mut w = initial_window(spec, threshold)?;
    for _ in 0..6 {
        let (table, _) = ModeTable::solve(&spec.potential, w.m_lo..=w.m_hi, w.k_max)?;
        let set = compute_coefficients(spec, &table)?;
        match set.check_coverage(&table, w.k_max, threshold) {
            Ok(()) => return Ok((table, set, w)),
            Err(Error::Coverage(msg)) => {
                if msg.contains("Re k") {
                    w.k_max += 20.0;
                } else {
                    w.m_lo = w.m_lo.saturating_sub(10);
                    w.m_hi += 10;
                }
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::Coverage(format!(
        "window {w:?} still clips the packet after widening"
    )))
}
