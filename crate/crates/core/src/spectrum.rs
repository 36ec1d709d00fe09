//! Eigenmodes of the circular step potential.
//!
//! Inside the circle a mode is `J_m(kr)`; outside it is `c·K_m(κr)` when the
//! energy is below the step and `c·H⁽¹⁾_m(k_out r)` above it, with
//! `c = J_m(kR)/Z_m(qR)` fixed by continuity. Roots of the matching condition
//! on the real axis below `k_V` are bound states; complex roots above `k_V` are
//! decaying (tunneling or leaky) resonances.

use std::fmt::Write as _;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corefn::{bessel_j_triple, bessel_k_triple, hankel1_triple, Triple};
use crate::error::{Error, Result};
use crate::roots::{brent, newton_complex};

/// Geometry and units of the step potential.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub radius: f64,
    pub v0: f64,
    pub mass: f64,
    pub hbar: f64,
}

impl Default for PotentialSpec {
    fn default() -> Self {
        PotentialSpec {
            radius: 2.0,
            v0: 5000.0,
            mass: 1.0,
            hbar: 1.0,
        }
    }
}

impl PotentialSpec {
    pub fn new(radius: f64, v0: f64, mass: f64, hbar: f64) -> Result<Self> {
        let p = PotentialSpec {
            radius,
            v0,
            mass,
            hbar,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !(ok(self.radius) && ok(self.v0) && ok(self.mass) && ok(self.hbar)) {
            return Err(Error::Domain(format!("invalid potential {self:?}")));
        }
        Ok(())
    }

    /// `√(2m*V0)/ħ`.
    pub fn k_v(&self) -> f64 {
        (2.0 * self.mass * self.v0).sqrt() / self.hbar
    }

    /// `m/R`.
    pub fn k_b(&self, m: u32) -> f64 {
        m as f64 / self.radius
    }

    /// `√(k_V² + m²/R²)`.
    pub fn k_t(&self, m: u32) -> f64 {
        let kb = self.k_b(m);
        (self.k_v().powi(2) + kb * kb).sqrt()
    }

    /// `ħ²k²/(2m*)`.
    pub fn energy(&self, k: Complex64) -> Complex64 {
        k * k * (self.hbar * self.hbar / (2.0 * self.mass))
    }

    /// Inverse of [`energy`](Self::energy) for real energy.
    pub fn wavenumber(&self, energy: f64) -> f64 {
        (2.0 * self.mass * energy).sqrt() / self.hbar
    }

    pub fn classify(&self, m: u32, k: Complex64) -> ModeClass {
        if k.re < self.k_v() {
            ModeClass::Bound
        } else if k.re < self.k_t(m) {
            ModeClass::Tunneling
        } else {
            ModeClass::Leaky
        }
    }
}

/// `ħ²m²/(2m*r²)` inside the circle, plus `V0` outside.
pub fn effective_potential(pot: &PotentialSpec, m: i64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!(
            "effective potential needs r > 0, got {r}"
        )));
    }
    let centrifugal = pot.hbar.powi(2) * (m * m) as f64 / (2.0 * pot.mass * r * r);
    Ok(if r < pot.radius {
        centrifugal
    } else {
        pot.v0 + centrifugal
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeClass {
    Bound,
    Tunneling,
    Leaky,
}

impl ModeClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ModeClass::Bound => "bound",
            ModeClass::Tunneling => "tunneling",
            ModeClass::Leaky => "leaky",
        }
    }
}

impl FromStr for ModeClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bound" => Ok(ModeClass::Bound),
            "tunneling" => Ok(ModeClass::Tunneling),
            "leaky" => Ok(ModeClass::Leaky),
            _ => Err(Error::Parse(format!("unknown mode class '{s}'"))),
        }
    }
}

/// One solution `(m, n)` of the matching problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenMode {
    pub m: u32,
    pub n: u32,
    pub k: Complex64,
    pub energy: Complex64,
    pub gamma: f64,
    /// Exterior amplitude: the mode is `c·Z_m(qr)` for `r ≥ R`.
    pub c: Complex64,
    /// `∫₀^∞ Φ(r)² r dr` (continued analytically for resonances).
    pub norm: Complex64,
    pub class: ModeClass,
}

/// Wavenumber and cylinder family of the exterior solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exterior {
    /// `K_m(κr)`, real `κ > 0`.
    Decaying(f64),
    /// `H⁽¹⁾_m(qr)`, `Re q > 0`.
    Outgoing(Complex64),
}

impl Exterior {
    pub fn for_wavenumber(pot: &PotentialSpec, k: Complex64) -> Self {
        let kv = pot.k_v();
        if k.im == 0.0 && k.re < kv {
            Exterior::Decaying((kv * kv - k.re * k.re).sqrt())
        } else {
            let q = (k * k - kv * kv).sqrt();
            Exterior::Outgoing(if q.re < 0.0 { -q } else { q })
        }
    }

    pub fn q(&self) -> Complex64 {
        match *self {
            Exterior::Decaying(kappa) => Complex64::new(kappa, 0.0),
            Exterior::Outgoing(q) => q,
        }
    }

    /// `Z_{m−1}, Z_m, Z_{m+1}` at `q·r`.
    pub fn triple(&self, m: u32, r: f64) -> Result<Triple<Complex64>> {
        match *self {
            Exterior::Decaying(kappa) => {
                let t = bessel_k_triple(m, kappa * r)?;
                Ok(Triple {
                    prev: t.prev.into(),
                    mid: t.mid.into(),
                    next: t.next.into(),
                    log_scale: t.log_scale,
                })
            }
            Exterior::Outgoing(q) => hankel1_triple(m, q * r),
        }
    }

    /// `Z_m′/Z_m` with respect to the argument, from a triple.
    pub fn log_derivative(&self, t: &Triple<Complex64>) -> Complex64 {
        match self {
            Exterior::Decaying(_) => -(t.prev + t.next) * 0.5 / t.mid,
            Exterior::Outgoing(_) => t.log_derivative(),
        }
    }

    /// Derivative of the argument-log-derivative `ρ` with respect to the argument `x`.
    fn log_derivative_slope(&self, m: u32, rho: Complex64, x: Complex64) -> Complex64 {
        let m2 = (m * m) as f64;
        let x2 = x * x;
        match self {
            Exterior::Decaying(_) => -rho / x + 1.0 + m2 / x2 - rho * rho,
            Exterior::Outgoing(_) => -rho / x - (1.0 - m2 / x2) - rho * rho,
        }
    }

    /// `dq/dk`.
    fn q_slope(&self, k: Complex64) -> Complex64 {
        match *self {
            Exterior::Decaying(kappa) => -k / kappa,
            Exterior::Outgoing(q) => k / q,
        }
    }
}

/// Cylinder data at the boundary for a trial wavenumber.
#[derive(Clone, Copy, Debug)]
pub struct Matching {
    pub m: u32,
    pub k: Complex64,
    pub exterior: Exterior,
    pub interior: Triple<Complex64>,
    pub outside: Triple<Complex64>,
}

impl Matching {
    pub fn new(pot: &PotentialSpec, m: u32, k: Complex64) -> Result<Self> {
        if k == Complex64::new(0.0, 0.0) {
            return Err(Error::Domain("characteristic needs k ≠ 0".into()));
        }
        let exterior = Exterior::for_wavenumber(pot, k);
        let interior = bessel_j_triple(m, k * pot.radius)?;
        let outside = exterior.triple(m, pot.radius)?;
        Ok(Matching {
            m,
            k,
            exterior,
            interior,
            outside,
        })
    }

    /// `(J′ − (q/k)·J·ρ) / (|J′| + |J·ρ|)`, the scale-free matching determinant.
    pub fn characteristic(&self) -> Complex64 {
        let jd = self.interior.derivative();
        let jv = self.interior.mid;
        let rho = self.exterior.log_derivative(&self.outside);
        let q = self.exterior.q();
        let num = jd - q / self.k * jv * rho;
        num / (jd.norm() + (jv * rho).norm())
    }

    /// `F = J′/J(kR) − (q/k)ρ(qR)` and `dF/dk`, for Newton.
    fn newton_pair(&self, radius: f64) -> (Complex64, Complex64) {
        let m2 = (self.m * self.m) as f64;
        let k = self.k;
        let q = self.exterior.q();
        let z = k * radius;
        let x = q * radius;
        let a = self.interior.log_derivative();
        let rho = self.exterior.log_derivative(&self.outside);
        let da = (-a / z - (1.0 - m2 / (z * z)) - a * a) * radius;
        let dq = self.exterior.q_slope(k);
        let drho = self.exterior.log_derivative_slope(self.m, rho, x) * radius * dq;
        let b = q / k * rho;
        let db = (dq / k - q / (k * k)) * rho + q / k * drho;
        (a - b, da - db)
    }

    /// `c = J_m(kR)/Z_m(qR)`.
    pub fn exterior_amplitude(&self) -> Complex64 {
        self.interior.mid / self.outside.mid
            * (self.interior.log_scale - self.outside.log_scale).exp()
    }

    /// Norm divided by `J_m(kR)²`: `(R²/2)(Z_{m−1}Z_{m+1}/Z_m² − J_{m−1}J_{m+1}/J_m²)`.
    pub fn reduced_norm(&self, radius: f64) -> Complex64 {
        let zr = self.outside.neighbour_product_ratio();
        let jr = self.interior.neighbour_product_ratio();
        (zr - jr) * (0.5 * radius * radius)
    }

    pub fn norm(&self, radius: f64) -> Complex64 {
        let jm = self.interior.mid;
        self.reduced_norm(radius) * jm * jm * (2.0 * self.interior.log_scale).exp()
    }
}

/// Normalized matching determinant; zero exactly at eigenvalues.
pub fn characteristic(pot: &PotentialSpec, m: u32, k: Complex64) -> Result<Complex64> {
    Ok(Matching::new(pot, m, k)?.characteristic())
}

fn build_mode(
    pot: &PotentialSpec,
    m: u32,
    n: u32,
    k: Complex64,
    class: ModeClass,
) -> Result<EigenMode> {
    let mt = Matching::new(pot, m, k)?;
    let norm = mt.norm(pot.radius);
    if !(norm.norm() >= 1e-14 * 0.5 * pot.radius * pot.radius) {
        return Err(Error::DefectiveMode {
            m,
            n,
            norm: norm.norm(),
        });
    }
    let energy = pot.energy(k);
    Ok(EigenMode {
        m,
        n,
        k,
        energy,
        gamma: (-2.0 * energy.im).max(0.0),
        c: mt.exterior_amplitude(),
        norm,
        class,
    })
}

fn bound_brackets(pot: &PotentialSpec, m: u32, step: f64) -> Result<Vec<(f64, f64)>> {
    let kb = pot.k_b(m);
    let kv = pot.k_v();
    let top = kv * (1.0 - 1e-12);
    let f = |k: f64| characteristic(pot, m, Complex64::new(k, 0.0)).map(|c| c.re);
    let count = ((top - kb) / step).ceil().max(1.0) as usize;
    let mut out = Vec::new();
    let mut k_prev = kb.max(1e-9 * kv);
    let mut f_prev = f(k_prev)?;
    for i in 1..=count {
        let k = if i == count {
            top
        } else {
            kb + i as f64 * step
        };
        let fk = f(k)?;
        if f_prev == 0.0 || f_prev.signum() != fk.signum() {
            out.push((k_prev, k));
        }
        k_prev = k;
        f_prev = fk;
    }
    Ok(out)
}

/// All bound states for angular number `m`, ordered by `k`, `n = 1, 2, …`.
pub fn find_bound_modes(pot: &PotentialSpec, m: u32) -> Result<Vec<EigenMode>> {
    pot.validate()?;
    let kb = pot.k_b(m);
    let kv = pot.k_v();
    if kb >= kv {
        return Ok(Vec::new());
    }
    let coarse = std::f64::consts::PI / (4.0 * pot.radius);
    let mut brackets = bound_brackets(pot, m, coarse)?;
    // a finer scan must see the same number of sign changes; otherwise trust it
    let fine = bound_brackets(pot, m, (coarse / 10.0).min(0.05))?;
    if fine.len() != brackets.len() {
        brackets = fine;
    }
    let f = |k: f64| characteristic(pot, m, Complex64::new(k, 0.0)).map(|c| c.re);
    brackets
        .iter()
        .enumerate()
        .map(|(i, &(a, b))| {
            let k = brent(f, a, b, 1e-13 * b)?;
            build_mode(
                pot,
                m,
                i as u32 + 1,
                Complex64::new(k, 0.0),
                ModeClass::Bound,
            )
        })
        .collect()
}

/// A resonance seed that did not yield an accepted root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedFailure {
    pub m: u32,
    pub seed: f64,
    pub reason: String,
}

#[derive(Clone, Debug, Default)]
pub struct ResonanceSearch {
    pub modes: Vec<EigenMode>,
    pub diagnostics: Vec<SeedFailure>,
}

const RESIDUAL_TOL: f64 = 1e-10;

fn polish_resonance(pot: &PotentialSpec, m: u32, seed: f64) -> Result<Complex64> {
    let radius = pot.radius;
    let res = newton_complex(
        |k| Ok(Matching::new(pot, m, k)?.newton_pair(radius)),
        Complex64::new(seed, 0.0),
        1e-14,
        0.5,
        80,
    )?;
    let mut k = res.root;
    // decay widths far below the working precision come out with either sign
    if k.im > 0.0 && k.im < 1e-10 * k.re {
        k.im = 0.0;
    }
    Ok(k)
}

/// Complex resonances with `Re k` in `window`, seeded at real-axis minima of
/// `|χ|` and polished by Newton. Radial numbers start at `first_n`.
pub fn find_resonances(
    pot: &PotentialSpec,
    m: u32,
    window: (f64, f64),
    first_n: u32,
) -> Result<ResonanceSearch> {
    pot.validate()?;
    let kv = pot.k_v();
    let lo = window.0.max(kv * (1.0 + 1e-12));
    let hi = window.1;
    let mut out = ResonanceSearch::default();
    if hi <= lo {
        return Ok(out);
    }
    let step = std::f64::consts::PI / (4.0 * pot.radius);
    let npts = ((hi - lo) / step).ceil() as usize + 1;
    let grid: Vec<f64> = (0..=npts + 1)
        .map(|i| lo + (i as f64 - 1.0) * step)
        .collect();
    let vals: Vec<f64> = grid
        .iter()
        .map(|&k| {
            if k <= kv {
                Ok(f64::INFINITY)
            } else {
                characteristic(pot, m, Complex64::new(k, 0.0)).map(|c| c.norm())
            }
        })
        .collect::<Result<_>>()?;
    let mut roots: Vec<Complex64> = Vec::new();
    for i in 1..grid.len() - 1 {
        if !(vals[i] <= vals[i - 1] && vals[i] < vals[i + 1]) {
            continue;
        }
        // the window edge has no left neighbour; start inside the first cell
        let seed = if i == 1 {
            grid[1] + 0.25 * step
        } else {
            grid[i]
        };
        let fail = |reason: String| SeedFailure { m, seed, reason };
        let k = match polish_resonance(pot, m, seed) {
            Ok(k) => k,
            Err(e) => {
                out.diagnostics.push(fail(e.to_string()));
                continue;
            }
        };
        if k.re <= kv || k.re < lo || k.re >= hi {
            continue;
        }
        if k.im > 0.0 {
            out.diagnostics.push(fail(format!("growing root {k}")));
            continue;
        }
        if k.im.abs() >= k.re {
            out.diagnostics
                .push(fail(format!("root {k} beyond |Im k| < Re k")));
            continue;
        }
        let resid = characteristic(pot, m, k)?.norm();
        if resid > RESIDUAL_TOL {
            out.diagnostics
                .push(fail(format!("residual {resid:e} at {k}")));
            continue;
        }
        if roots
            .iter()
            .any(|r| (r - k).norm() < 1e-8 * k.norm().max(1.0))
        {
            continue;
        }
        roots.push(k);
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re));
    for (i, k) in roots.into_iter().enumerate() {
        let class = pot.classify(m, k).max_resonance();
        match build_mode(pot, m, first_n + i as u32, k, class) {
            Ok(mode) => out.modes.push(mode),
            Err(e) => out.diagnostics.push(SeedFailure {
                m,
                seed: k.re,
                reason: e.to_string(),
            }),
        }
    }
    Ok(out)
}

impl ModeClass {
    fn max_resonance(self) -> Self {
        if self == ModeClass::Bound {
            ModeClass::Tunneling
        } else {
            self
        }
    }
}

/// Recompute the analytic norm of a mode.
pub fn mode_norm(mode: &EigenMode, pot: &PotentialSpec) -> Result<Complex64> {
    let n = Matching::new(pot, mode.m, mode.k)?.norm(pot.radius);
    if !(n.norm() >= 1e-14 * 0.5 * pot.radius * pot.radius) {
        return Err(Error::DefectiveMode {
            m: mode.m,
            n: mode.n,
            norm: n.norm(),
        });
    }
    Ok(n)
}

/// Mode radial function scaled to unit bilinear norm, `∫ φ(r)² r dr = 1`.
///
/// Inside it is `J_m(kr)/(J_m(kR)·√ν)`, outside `Z_m(qr)/(Z_m(qR)·√ν)`, where
/// `ν` is the norm divided by `J_m(kR)²`. Working with boundary-relative ratios
/// keeps every value finite whatever the magnitude of `J_m(kR)` or `Z_m(qR)`.
#[derive(Clone, Copy, Debug)]
pub struct RadialProfile {
    pub m: u32,
    pub k: Complex64,
    pub exterior: Exterior,
    radius: f64,
    j_ref: Triple<Complex64>,
    z_ref: Triple<Complex64>,
    inv_sqrt_norm: Complex64,
}

impl RadialProfile {
    pub fn new(pot: &PotentialSpec, m: u32, k: Complex64) -> Result<Self> {
        let mt = Matching::new(pot, m, k)?;
        let nu = mt.reduced_norm(pot.radius);
        if nu == Complex64::new(0.0, 0.0) || !nu.re.is_finite() || !nu.im.is_finite() {
            return Err(Error::DefectiveMode {
                m,
                n: 0,
                norm: nu.norm(),
            });
        }
        Ok(RadialProfile {
            m,
            k,
            exterior: mt.exterior,
            radius: pot.radius,
            j_ref: mt.interior,
            z_ref: mt.outside,
            inv_sqrt_norm: nu.sqrt().inv(),
        })
    }

    pub fn of_mode(pot: &PotentialSpec, mode: &EigenMode) -> Result<Self> {
        Self::new(pot, mode.m, mode.k)
    }

    /// `φ(r)` and `dφ/dr`.
    pub fn value_and_slope(&self, r: f64) -> Result<(Complex64, Complex64)> {
        if r < self.radius {
            let t = bessel_j_triple(self.m, self.k * r)?;
            let s = ratio_scale(&t, &self.j_ref) * self.inv_sqrt_norm;
            Ok((t.mid * s, t.derivative() * self.k * s))
        } else {
            let t = self.exterior.triple(self.m, r)?;
            let s = ratio_scale(&t, &self.z_ref) * self.inv_sqrt_norm;
            let d = match self.exterior {
                Exterior::Decaying(_) => -(t.prev + t.next) * 0.5,
                Exterior::Outgoing(_) => t.derivative(),
            };
            Ok((t.mid * s, d * self.exterior.q() * s))
        }
    }

    pub fn value(&self, r: f64) -> Result<Complex64> {
        if r < self.radius {
            let t = bessel_j_triple(self.m, self.k * r)?;
            Ok(t.mid * ratio_scale(&t, &self.j_ref) * self.inv_sqrt_norm)
        } else {
            let t = self.exterior.triple(self.m, r)?;
            Ok(t.mid * ratio_scale(&t, &self.z_ref) * self.inv_sqrt_norm)
        }
    }
}

/// `exp(ls_t − ls_ref) / ref.mid`.
fn ratio_scale(t: &Triple<Complex64>, reference: &Triple<Complex64>) -> Complex64 {
    let d = t.log_scale - reference.log_scale;
    if d < -745.0 {
        return Complex64::new(0.0, 0.0);
    }
    reference.mid.inv() * d.exp()
}

/// Tunneling image distance of a mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageDistance {
    pub delta: f64,
    /// Energy above the exterior barrier top, so no classical turning point exists.
    pub above_barrier: bool,
}

/// `Δ_j = m/√((2m*/ħ²)(Re E − V0)) − R`.
pub fn delta_j(mode: &EigenMode, pot: &PotentialSpec) -> Result<ImageDistance> {
    let e = mode.energy.re;
    if mode.class == ModeClass::Bound || e <= pot.v0 {
        return Err(Error::Domain(format!(
            "Δ_j needs Re E > V0 (mode m={} n={} has E={e})",
            mode.m, mode.n
        )));
    }
    let k_out = (2.0 * pot.mass * (e - pot.v0)).sqrt() / pot.hbar;
    let delta = mode.m as f64 / k_out - pot.radius;
    Ok(ImageDistance {
        delta,
        above_barrier: delta <= 0.0,
    })
}

/// Modes of a range of angular numbers.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeTable {
    pub potential: PotentialSpec,
    /// Sorted by `(m, n)`.
    pub modes: Vec<EigenMode>,
}

const TABLE_MAGIC: &str = "# curvewave-modes v1";

impl ModeTable {
    /// Bound modes and resonances with `Re k < k_max` for every `m` in `ms`.
    /// Work is spread over the current rayon pool; output order does not depend on it.
    pub fn solve(
        pot: &PotentialSpec,
        ms: std::ops::RangeInclusive<u32>,
        k_max: f64,
    ) -> Result<(ModeTable, Vec<SeedFailure>)> {
        pot.validate()?;
        let per_m: Vec<Result<(Vec<EigenMode>, Vec<SeedFailure>)>> = ms
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|m| {
                let mut bound = find_bound_modes(pot, m)?;
                bound.retain(|b| b.k.re < k_max);
                let res = find_resonances(pot, m, (pot.k_v(), k_max), bound.len() as u32 + 1)?;
                bound.extend(res.modes);
                Ok((bound, res.diagnostics))
            })
            .collect();
        let mut modes = Vec::new();
        let mut diag = Vec::new();
        for r in per_m {
            let (mm, dd) = r?;
            modes.extend(mm);
            diag.extend(dd);
        }
        Ok((
            ModeTable {
                potential: *pot,
                modes,
            },
            diag,
        ))
    }

    /// Modes with angular number `m` (a contiguous slice).
    pub fn modes_for(&self, m: u32) -> &[EigenMode] {
        let lo = self.modes.partition_point(|x| x.m < m);
        let hi = self.modes.partition_point(|x| x.m <= m);
        &self.modes[lo..hi]
    }

    pub fn m_range(&self) -> Option<(u32, u32)> {
        Some((self.modes.first()?.m, self.modes.last()?.m))
    }

    pub fn to_text(&self) -> String {
        let p = &self.potential;
        let mut s = format!(
            "{TABLE_MAGIC} R={:.16e} V0={:.16e} mstar={:.16e} hbar={:.16e}\n",
            p.radius, p.v0, p.mass, p.hbar
        );
        for md in &self.modes {
            writeln!(
                s,
                "{} {} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {}",
                md.m,
                md.n,
                md.k.re,
                md.k.im,
                md.norm.re,
                md.norm.im,
                md.c.re,
                md.c.im,
                md.class.as_str()
            )
            .unwrap();
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty mode table".into()))?;
        let rest = header
            .strip_prefix(TABLE_MAGIC)
            .ok_or_else(|| Error::Parse(format!("bad mode-table header '{header}'")))?;
        let mut vals = [None; 4];
        for tok in rest.split_whitespace() {
            let (key, v) = tok
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad header field '{tok}'")))?;
            let idx = match key {
                "R" => 0,
                "V0" => 1,
                "mstar" => 2,
                "hbar" => 3,
                _ => return Err(Error::Parse(format!("unknown header field '{key}'"))),
            };
            vals[idx] = Some(parse_f64(v)?);
        }
        let get = |i: usize, name: &str| {
            vals[i].ok_or_else(|| Error::Parse(format!("header lacks {name}")))
        };
        let potential = PotentialSpec::new(
            get(0, "R")?,
            get(1, "V0")?,
            get(2, "mstar")?,
            get(3, "hbar")?,
        )?;
        let mut modes = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 9 {
                return Err(Error::Parse(format!(
                    "row {}: expected 9 fields, got {}",
                    lineno + 1,
                    f.len()
                )));
            }
            let m: u32 = f[0]
                .parse()
                .map_err(|_| Error::Parse(format!("bad m '{}'", f[0])))?;
            let n: u32 = f[1]
                .parse()
                .map_err(|_| Error::Parse(format!("bad n '{}'", f[1])))?;
            let k = Complex64::new(parse_f64(f[2])?, parse_f64(f[3])?);
            let energy = potential.energy(k);
            modes.push(EigenMode {
                m,
                n,
                k,
                energy,
                gamma: (-2.0 * energy.im).max(0.0),
                norm: Complex64::new(parse_f64(f[4])?, parse_f64(f[5])?),
                c: Complex64::new(parse_f64(f[6])?, parse_f64(f[7])?),
                class: f[8].parse()?,
            });
        }
        if modes
            .windows(2)
            .any(|w| (w[0].m, w[0].n) >= (w[1].m, w[1].n))
        {
            return Err(Error::Parse("mode rows are not sorted by (m, n)".into()));
        }
        Ok(ModeTable { potential, modes })
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::Parse(format!("bad number '{s}'")))
}
