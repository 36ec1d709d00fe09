//! Time evolution of an expansion and evaluation of the resulting field.
//!
//! Mode profiles are cached with their radial slopes on a uniform radial grid
//! (with a node exactly at `R`). At a given time the field is reduced to one
//! radial function per angular number,
//! `S_ℓ(r, τ) = Σ c_j e^{−iE_j τ/ħ} φ_j(r)`, so that
//! `Ψ(r, θ) = (2π)^{-1/2} Σ_ℓ S_ℓ(r) e^{iℓθ}`. Points are evaluated by cubic
//! Hermite interpolation of `S_ℓ`, polar frames by inverse FFT over `ℓ`, and
//! region integrals through Parseval's identity in `θ`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::packet::{gaussian_free, Expansion, PacketSpec};
use crate::spectrum::{PotentialSpec, RadialProfile};

/// Uniform radial grid in two zones, `[0, R]` and `[R, r_max]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialGrid {
    pub radius: f64,
    pub r_max: f64,
    pub inner_step: f64,
    pub outer_step: f64,
    n_inner: usize,
    n_outer: usize,
}

impl RadialGrid {
    pub fn new(radius: f64, r_max: f64, inner_step: f64, outer_step: f64) -> Result<Self> {
        if !(r_max > radius && inner_step > 0.0 && outer_step > 0.0) {
            return Err(Error::Domain(format!(
                "bad radial grid R={radius} r_max={r_max} steps {inner_step}/{outer_step}"
            )));
        }
        let n_inner = (radius / inner_step).ceil() as usize;
        let n_outer = ((r_max - radius) / outer_step).ceil() as usize;
        Ok(RadialGrid {
            radius,
            r_max,
            inner_step: radius / n_inner as f64,
            outer_step: (r_max - radius) / n_outer as f64,
            n_inner,
            n_outer,
        })
    }

    /// Steps fine enough for the fastest mode in `exp`: at most `0.5/k` inside and `0.5/|q|` outside.
    pub fn for_expansion(exp: &Expansion, r_max: f64) -> Result<Self> {
        let pot = &exp.potential;
        let k_max = exp.entries.iter().map(|e| e.mode.k.re).fold(1.0, f64::max);
        let q_max = (k_max * k_max - pot.k_v().powi(2)).max(1.0).sqrt();
        Self::new(
            pot.radius,
            r_max,
            (0.5 / k_max).min(0.004),
            (0.5 / q_max).min(0.008),
        )
    }

    pub fn len(&self) -> usize {
        self.n_inner + self.n_outer + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, i: usize) -> f64 {
        if i <= self.n_inner {
            i as f64 * self.inner_step
        } else if i == self.len() - 1 {
            self.r_max
        } else {
            self.radius + (i - self.n_inner) as f64 * self.outer_step
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    /// Cell index `i` with `r ∈ [node(i), node(i+1)]`, or `None` beyond the grid.
    pub fn cell(&self, r: f64) -> Option<usize> {
        if !(r >= 0.0) || r > self.r_max {
            return None;
        }
        let i = if r < self.radius {
            ((r / self.inner_step) as usize).min(self.n_inner - 1)
        } else {
            self.n_inner + (((r - self.radius) / self.outer_step) as usize).min(self.n_outer - 1)
        };
        Some(i)
    }
}

struct Term {
    profile: usize,
    coeff: Complex64,
    energy: Complex64,
}

/// Cached profiles and coefficients of one expansion.
pub struct Evolver {
    pub potential: PotentialSpec,
    pub grid: RadialGrid,
    /// Dense range of angular numbers `ell_min..=ell_max`.
    ell_min: i64,
    bands: Vec<Vec<Term>>,
    /// `profiles[p][i]` = (φ, φ′) at grid node `i`.
    profiles: Vec<Vec<(Complex64, Complex64)>>,
}

impl Evolver {
    pub fn new(exp: &Expansion, grid: RadialGrid) -> Result<Self> {
        let pot = exp.potential;
        let mut index: BTreeMap<(u32, u32), usize> = BTreeMap::new();
        let mut unique = Vec::new();
        for e in &exp.entries {
            index.entry((e.mode.m, e.mode.n)).or_insert_with(|| {
                unique.push(e.mode);
                unique.len() - 1
            });
        }
        let nodes = grid.nodes();
        let profiles = unique
            .par_iter()
            .map(|mode| {
                let prof = RadialProfile::of_mode(&pot, mode)?;
                nodes
                    .iter()
                    .map(|&r| prof.value_and_slope(r))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let ell_min = exp.entries.iter().map(|e| e.ell).min().unwrap_or(0);
        let ell_max = exp.entries.iter().map(|e| e.ell).max().unwrap_or(0);
        let mut bands: Vec<Vec<Term>> = (ell_min..=ell_max).map(|_| Vec::new()).collect();
        for e in &exp.entries {
            bands[(e.ell - ell_min) as usize].push(Term {
                profile: index[&(e.mode.m, e.mode.n)],
                coeff: e.coeff,
                energy: e.mode.energy,
            });
        }
        Ok(Evolver {
            potential: pot,
            grid,
            ell_min,
            bands,
            profiles,
        })
    }

    /// Radial sums at absolute time `tau` after launch.
    pub fn sums_at(&self, tau: f64) -> Result<RadialSums> {
        if !(tau >= 0.0) {
            return Err(Error::Domain(format!(
                "evolution to negative time {tau} would amplify decaying resonances"
            )));
        }
        let n = self.grid.len();
        let hbar = self.potential.hbar;
        let bands = self
            .bands
            .par_iter()
            .map(|terms| {
                let mut v = vec![(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)); n];
                for t in terms {
                    let a = t.coeff * (Complex64::new(0.0, -tau / hbar) * t.energy).exp();
                    for (slot, &(f, d)) in v.iter_mut().zip(&self.profiles[t.profile]) {
                        slot.0 += a * f;
                        slot.1 += a * d;
                    }
                }
                v
            })
            .collect();
        Ok(RadialSums {
            grid: self.grid.clone(),
            ell_min: self.ell_min,
            bands,
            tau,
        })
    }
}

/// Per-angular-number radial functions `S_ℓ(r)` and slopes at one instant.
#[derive(Clone, Debug)]
pub struct RadialSums {
    pub grid: RadialGrid,
    pub ell_min: i64,
    /// `bands[ℓ − ell_min][i]` = (S, S′) at grid node `i`.
    pub bands: Vec<Vec<(Complex64, Complex64)>>,
    pub tau: f64,
}

/// Integration region bounded by two radii.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    pub r_lo: f64,
    pub r_hi: f64,
}

impl Annulus {
    pub fn whole(r_max: f64) -> Self {
        Annulus {
            r_lo: 0.0,
            r_hi: r_max,
        }
    }
}

fn hermite(s0: (Complex64, Complex64), s1: (Complex64, Complex64), h: f64, t: f64) -> Complex64 {
    let t2 = t * t;
    let t3 = t2 * t;
    s0.0 * (2.0 * t3 - 3.0 * t2 + 1.0)
        + s0.1 * (h * (t3 - 2.0 * t2 + t))
        + s1.0 * (-2.0 * t3 + 3.0 * t2)
        + s1.1 * (h * (t3 - t2))
}

fn hermite_slope(
    s0: (Complex64, Complex64),
    s1: (Complex64, Complex64),
    h: f64,
    t: f64,
) -> Complex64 {
    let t2 = t * t;
    (s0.0 - s1.0) * ((6.0 * t2 - 6.0 * t) / h)
        + s0.1 * (3.0 * t2 - 4.0 * t + 1.0)
        + s1.1 * (3.0 * t2 - 2.0 * t)
}

const GL4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

impl RadialSums {
    pub fn ell_range(&self) -> (i64, i64) {
        (self.ell_min, self.ell_min + self.bands.len() as i64 - 1)
    }

    fn locate(&self, r: f64) -> Option<(usize, f64, f64)> {
        let i = self.grid.cell(r)?;
        let a = self.grid.node(i);
        let h = self.grid.node(i + 1) - a;
        Some((i, h, (r - a) / h))
    }

    /// `S_ℓ(r)` for every band.
    pub fn bands_at(&self, r: f64) -> Vec<Complex64> {
        match self.locate(r) {
            None => vec![Complex64::new(0.0, 0.0); self.bands.len()],
            Some((i, h, t)) => self
                .bands
                .iter()
                .map(|b| hermite(b[i], b[i + 1], h, t))
                .collect(),
        }
    }

    /// `(S_ℓ(r), S′_ℓ(r))` for every band.
    pub fn bands_with_slope_at(&self, r: f64) -> Vec<(Complex64, Complex64)> {
        match self.locate(r) {
            None => vec![(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)); self.bands.len()],
            Some((i, h, t)) => self
                .bands
                .iter()
                .map(|b| {
                    (
                        hermite(b[i], b[i + 1], h, t),
                        hermite_slope(b[i], b[i + 1], h, t),
                    )
                })
                .collect(),
        }
    }

    /// `Ψ(x, y)`; zero beyond the grid.
    pub fn at(&self, x: f64, y: f64) -> Complex64 {
        let r = x.hypot(y);
        let Some((i, h, t)) = self.locate(r) else {
            return Complex64::new(0.0, 0.0);
        };
        let th = y.atan2(x);
        let step = Complex64::from_polar(1.0, th);
        let mut w = Complex64::from_polar(1.0, self.ell_min as f64 * th);
        let mut acc = Complex64::new(0.0, 0.0);
        for b in &self.bands {
            acc += hermite(b[i], b[i + 1], h, t) * w;
            w *= step;
        }
        acc / (2.0 * PI).sqrt()
    }

    /// `∫ f(r, [S_ℓ(r)]) dr` over `region`, 4 Gauss points per grid cell.
    fn radial_integral<T>(&self, region: Annulus, f: impl Fn(f64, &[Complex64]) -> T + Sync) -> T
    where
        T: std::iter::Sum + std::ops::Mul<f64, Output = T> + Send,
    {
        let lo = region.r_lo.max(0.0);
        let hi = region.r_hi.min(self.grid.r_max);
        let cells: Vec<T> = (0..self.grid.len() - 1)
            .into_par_iter()
            .filter_map(|i| {
                let a = self.grid.node(i).max(lo);
                let b = self.grid.node(i + 1).min(hi);
                if b <= a {
                    return None;
                }
                let r0 = self.grid.node(i);
                let h = self.grid.node(i + 1) - r0;
                let mut vals = vec![Complex64::new(0.0, 0.0); self.bands.len()];
                let sum = GL4
                    .iter()
                    .map(|&(x, w)| {
                        let r = 0.5 * (a + b) + 0.5 * (b - a) * x;
                        let t = (r - r0) / h;
                        for (v, band) in vals.iter_mut().zip(&self.bands) {
                            *v = hermite(band[i], band[i + 1], h, t);
                        }
                        f(r, &vals) * (0.5 * (b - a) * w)
                    })
                    .sum();
                Some(sum)
            })
            .collect();
        cells.into_iter().sum()
    }

    /// `∫ |Ψ|² dA` over an annulus.
    pub fn probability(&self, region: Annulus) -> f64 {
        self.radial_integral(region, |r, s| {
            r * s.iter().map(|v| v.norm_sqr()).sum::<f64>()
        })
    }

    /// `∫ (x + iy)|Ψ|² dA` over an annulus.
    pub fn first_moment(&self, region: Annulus) -> Complex64 {
        self.radial_integral(region, |r, s| {
            r * r * s.windows(2).map(|w| w[0] * w[1].conj()).sum::<Complex64>()
        })
    }

    /// Average position over an annulus.
    pub fn centroid(&self, region: Annulus) -> Result<[f64; 2]> {
        let total = self.probability(Annulus::whole(self.grid.r_max));
        let p = self.probability(region);
        if !(p >= 1e-6 * total) || p <= 0.0 {
            return Err(Error::UndefinedCentroid(p));
        }
        let m = self.first_moment(region) / p;
        Ok([m.re, m.im])
    }

    /// Polar samples `Ψ(r_i, θ_j)` with `r_i = i·r_max/nr` (`i = 1..=nr`), `θ_j = 2πj/nθ`.
    pub fn polar(&self, nr: usize, ntheta: usize, r_max: f64) -> Result<Vec<Complex64>> {
        let (lo, hi) = self.ell_range();
        if hi - lo >= ntheta as i64 {
            return Err(Error::Domain(format!(
                "{ntheta} angular nodes cannot resolve ℓ ∈ [{lo}, {hi}]"
            )));
        }
        let ifft = FftPlanner::new().plan_fft_inverse(ntheta);
        let norm = 1.0 / (2.0 * PI).sqrt();
        let rows: Vec<Vec<Complex64>> = (1..=nr)
            .into_par_iter()
            .map(|i| {
                let r = i as f64 * r_max / nr as f64;
                let mut buf = vec![Complex64::new(0.0, 0.0); ntheta];
                for (k, v) in self.bands_at(r).into_iter().enumerate() {
                    let ell = lo + k as i64;
                    buf[ell.rem_euclid(ntheta as i64) as usize] += v * norm;
                }
                ifft.process(&mut buf);
                buf
            })
            .collect();
        Ok(rows.concat())
    }
}

/// Polar sampling of the field, with the defaults sized for packets through `t = 10`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameSpec {
    pub nr: usize,
    pub ntheta: usize,
    pub r_max: f64,
}

impl FrameSpec {
    pub fn default_for(pot: &PotentialSpec) -> Self {
        FrameSpec {
            nr: 1200,
            ntheta: 1024,
            r_max: pot.radius + 6.0,
        }
    }

    pub fn r(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.r_max / self.nr as f64
    }

    pub fn theta(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.ntheta as f64
    }
}

/// Field sampled on a polar grid at one time, together with its evaluator.
#[derive(Clone, Debug)]
pub struct FieldFrame {
    /// Time after launch in units of `s0`.
    pub time: f64,
    pub spec: FrameSpec,
    /// Row-major: `values[i·nθ + j]` at `(r_i, θ_j)`.
    pub values: Vec<Complex64>,
    pub sums: RadialSums,
}

impl FieldFrame {
    pub fn at(&self, x: f64, y: f64) -> Complex64 {
        self.sums.at(x, y)
    }

    /// Polar-Jacobian-weighted `Σ |Ψ|² r Δr Δθ` over samples with `r < r_cut`.
    pub fn sampled_probability(&self, r_cut: f64) -> f64 {
        let (dr, dth) = (
            self.spec.r_max / self.spec.nr as f64,
            2.0 * PI / self.spec.ntheta as f64,
        );
        (0..self.spec.nr)
            .filter(|&i| self.spec.r(i) < r_cut)
            .map(|i| {
                let row = &self.values[i * self.spec.ntheta..(i + 1) * self.spec.ntheta];
                self.spec.r(i) * row.iter().map(|v| v.norm_sqr()).sum::<f64>()
            })
            .sum::<f64>()
            * dr
            * dth
    }

    /// Samples on a Cartesian grid.
    pub fn cartesian(&self, grid: &CartesianGrid) -> Vec<Complex64> {
        (0..grid.ny)
            .into_par_iter()
            .flat_map_iter(|iy| {
                let y = grid.y_origin + iy as f64 * grid.dy;
                (0..grid.nx).map(move |ix| (grid.x_origin + ix as f64 * grid.dx, y))
            })
            .map(|(x, y)| self.at(x, y))
            .collect()
    }

    /// Binary dump: 64-byte ASCII header then little-endian `(re, im)` pairs, rows along y.
    pub fn write_dump(&self, w: &mut impl Write, grid: &CartesianGrid) -> Result<()> {
        write_dump(w, grid, self.time, &self.cartesian(grid))
    }
}

/// Cartesian export descriptor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CartesianGrid {
    pub nx: usize,
    pub ny: usize,
    pub x_origin: f64,
    pub y_origin: f64,
    pub dx: f64,
    pub dy: f64,
}

impl CartesianGrid {
    /// Square grid of side `2·half` centred at the origin.
    pub fn square(n: usize, half: f64) -> Self {
        let d = 2.0 * half / (n.max(2) - 1) as f64;
        CartesianGrid {
            nx: n,
            ny: n,
            x_origin: -half,
            y_origin: -half,
            dx: d,
            dy: d,
        }
    }
}

const DUMP_MAGIC: &str = "curvewave-field v1";

pub fn write_dump(
    w: &mut impl Write,
    grid: &CartesianGrid,
    time: f64,
    values: &[Complex64],
) -> Result<()> {
    if values.len() != grid.nx * grid.ny {
        return Err(Error::Domain(format!(
            "{} values for a {}×{} grid",
            values.len(),
            grid.nx,
            grid.ny
        )));
    }
    let nums = [grid.x_origin, grid.y_origin, grid.dx, grid.dy, time];
    // shortest round-trip text, losing digits only if the 64-byte header demands it
    let header = std::iter::once(None)
        .chain((1..=12).rev().map(Some))
        .map(|digits| {
            let body: Vec<String> = nums.iter().map(|&v| compact_number(v, digits)).collect();
            format!("{DUMP_MAGIC} {} {} {}", grid.nx, grid.ny, body.join(" "))
        })
        .find(|h| h.len() <= 63)
        .ok_or_else(|| {
            Error::Domain(format!(
                "dump header for a {}×{} grid does not fit",
                grid.nx, grid.ny
            ))
        })?;
    let mut h = header.into_bytes();
    h.resize(63, b' ');
    h.push(b'\n');
    w.write_all(&h)?;
    let mut buf = Vec::with_capacity(16 * values.len());
    for v in values {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Shorter of the decimal and exponential renderings, `digits` significant digits after the lead
/// (`None` for shortest round-trip).
fn compact_number(v: f64, digits: Option<usize>) -> String {
    let exp = match digits {
        None => format!("{v:e}"),
        Some(d) => format!("{v:.d$e}"),
    };
    let dec = match digits {
        None => format!("{v}"),
        Some(d) => {
            let lead = if v == 0.0 {
                0
            } else {
                v.abs().log10().floor() as i64
            };
            let places = (d as i64 - lead).max(0) as usize;
            format!("{v:.places$}")
        }
    };
    if dec.len() <= exp.len() {
        dec
    } else {
        exp
    }
}

/// Parse a dump written by [`write_dump`].
pub fn read_dump(bytes: &[u8]) -> Result<(CartesianGrid, f64, Vec<Complex64>)> {
    if bytes.len() < 64 {
        return Err(Error::Parse("field dump shorter than its header".into()));
    }
    let header = std::str::from_utf8(&bytes[..64])
        .map_err(|_| Error::Parse("non-ASCII dump header".into()))?;
    let f: Vec<&str> = header.split_whitespace().collect();
    if f.len() != 9 || format!("{} {}", f[0], f[1]) != DUMP_MAGIC {
        return Err(Error::Parse(format!(
            "bad dump header '{}'",
            header.trim_end()
        )));
    }
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| Error::Parse(format!("bad header number '{s}'")))
    };
    let int = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::Parse(format!("bad header size '{s}'")))
    };
    let grid = CartesianGrid {
        nx: int(f[2])?,
        ny: int(f[3])?,
        x_origin: num(f[4])?,
        y_origin: num(f[5])?,
        dx: num(f[6])?,
        dy: num(f[7])?,
    };
    let body = &bytes[64..];
    if body.len() != 16 * grid.nx * grid.ny {
        return Err(Error::Parse(format!(
            "dump body has {} bytes, expected {}",
            body.len(),
            16 * grid.nx * grid.ny
        )));
    }
    let values = body
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    Ok((grid, num(f[8])?, values))
}

/// Field at time `t` (units of `s0` after launch) using a prepared evolver.
pub fn frame_at(
    evolver: &Evolver,
    packet: &PacketSpec,
    t: f64,
    frame: FrameSpec,
) -> Result<FieldFrame> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!(
            "evolution time must be ≥ 0, got {t}"
        )));
    }
    let sums = evolver.sums_at(t * packet.s0())?;
    let values = sums.polar(frame.nr, frame.ntheta, frame.r_max)?;
    Ok(FieldFrame {
        time: t,
        spec: frame,
        values,
        sums,
    })
}

/// `Σ c_j φ_j` at launch.
pub fn reconstruct(exp: &Expansion, packet: &PacketSpec, frame: FrameSpec) -> Result<FieldFrame> {
    evolve(exp, packet, 0.0, frame)
}

/// `Σ c_j e^{−iE_j τ/ħ} φ_j` at `τ = t·s0`.
pub fn evolve(
    exp: &Expansion,
    packet: &PacketSpec,
    t: f64,
    frame: FrameSpec,
) -> Result<FieldFrame> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!(
            "evolution time must be ≥ 0, got {t}"
        )));
    }
    let grid = RadialGrid::for_expansion(exp, frame.r_max.max(exp.potential.radius + 7.0))?;
    frame_at(&Evolver::new(exp, grid)?, packet, t, frame)
}

/// `|⟨Ψ_G|Ψ⟩|² / (‖Ψ_G‖²‖Ψ‖²)` over polar samples with `r < r_cut`, against the launched packet.
pub fn fidelity(frame: &FieldFrame, packet: &PacketSpec, r_cut: f64) -> f64 {
    let t = packet.closed_form_time(frame.time);
    let mut overlap = Complex64::new(0.0, 0.0);
    let (mut na, mut nb) = (0.0, 0.0);
    for i in 0..frame.spec.nr {
        let r = frame.spec.r(i);
        if r >= r_cut {
            break;
        }
        for j in 0..frame.spec.ntheta {
            let th = frame.spec.theta(j);
            let g = gaussian_free(packet, [r * th.cos(), r * th.sin()], t);
            let v = frame.values[i * frame.spec.ntheta + j];
            overlap += g.conj() * v * r;
            na += g.norm_sqr() * r;
            nb += v.norm_sqr() * r;
        }
    }
    overlap.norm_sqr() / (na * nb)
}

/// Horizontal and vertical cuts through `centre`: rows `(offset, |Ψ_G|², |Ψ|²)`.
pub fn profile_cuts(
    frame: &FieldFrame,
    packet: &PacketSpec,
    centre: [f64; 2],
    half_width: f64,
    n: usize,
) -> [Vec<(f64, f64, f64)>; 2] {
    let t = packet.closed_form_time(frame.time);
    let cut = |dir: [f64; 2]| {
        (0..n)
            .map(|i| {
                let s = -half_width + 2.0 * half_width * i as f64 / (n - 1) as f64;
                let p = [centre[0] + s * dir[0], centre[1] + s * dir[1]];
                (
                    s,
                    gaussian_free(packet, p, t).norm_sqr(),
                    frame.at(p[0], p[1]).norm_sqr(),
                )
            })
            .collect()
    };
    [cut([1.0, 0.0]), cut([0.0, 1.0])]
}

/// Largest `||Ψ_G|² − |Ψ|²|` along the cuts, relative to the peak of `|Ψ_G|²`.
pub fn profile_error(cuts: &[Vec<(f64, f64, f64)>; 2]) -> f64 {
    let peak = cuts.iter().flatten().map(|c| c.1).fold(0.0, f64::max);
    cuts.iter()
        .flatten()
        .map(|c| (c.1 - c.2).abs())
        .fold(0.0, f64::max)
        / peak
}
