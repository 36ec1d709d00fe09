//! Quantities measured on evolving fields: centroids, the reflected-ray fit,
//! region fractions, the emission Husimi function and the tunneling direction.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Annulus, Evolver, RadialSums};
use crate::packet::{Expansion, PacketSpec};
use crate::spectrum::{delta_j, ModeClass};

/// Anything that can be sampled at a point of the plane.
pub trait PlaneField: Sync {
    fn value(&self, x: f64, y: f64) -> Complex64;
}

impl PlaneField for RadialSums {
    fn value(&self, x: f64, y: f64) -> Complex64 {
        self.at(x, y)
    }
}

impl<F: Fn(f64, f64) -> Complex64 + Sync> PlaneField for F {
    fn value(&self, x: f64, y: f64) -> Complex64 {
        self(x, y)
    }
}

/// Region over which an average position is taken.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    /// `r_lo ≤ r < r_hi`.
    Annulus { r_lo: f64, r_hi: f64 },
    /// Rectangle `D × h` in the frame rotated by `alpha` (see [`rotated_point`]).
    Rotated {
        alpha: f64,
        d: (f64, f64),
        h: (f64, f64),
    },
}

impl Region {
    pub fn whole(r_max: f64) -> Self {
        Region::Annulus {
            r_lo: 0.0,
            r_hi: r_max,
        }
    }

    pub fn interior(radius: f64) -> Self {
        Region::Annulus {
            r_lo: 0.0,
            r_hi: radius,
        }
    }

    /// Outside the circle, clear of the evanescent skirt.
    pub fn exterior(radius: f64, r_max: f64) -> Self {
        Region::Annulus {
            r_lo: radius + 0.05,
            r_hi: r_max,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Region::Annulus { r_lo, r_hi } => format!("annulus[{r_lo},{r_hi})"),
            Region::Rotated { alpha, d, h } => {
                format!("rotated[a={alpha};D={},{};h={},{}]", d.0, d.1, h.0, h.1)
            }
        }
    }
}

/// `(x, y)` of the point at `(D, h)` on the projection line rotated by `alpha`.
pub fn rotated_point(alpha: f64, d: f64, h: f64) -> [f64; 2] {
    let (s, c) = alpha.sin_cos();
    [d * c - h * s, d * s + h * c]
}

/// `∫ x|Ψ|² / ∫ |Ψ|²` over `region`.
pub fn average_position(sums: &RadialSums, region: Region) -> Result<[f64; 2]> {
    match region {
        Region::Annulus { r_lo, r_hi } => sums.centroid(Annulus { r_lo, r_hi }),
        Region::Rotated { alpha, d, h } => {
            let total = sums.probability(Annulus::whole(sums.grid.r_max));
            let step = 0.01;
            let nd = ((d.1 - d.0) / step).ceil().max(1.0) as usize;
            let nh = ((h.1 - h.0) / step).ceil().max(1.0) as usize;
            let (dd, dh) = ((d.1 - d.0) / nd as f64, (h.1 - h.0) / nh as f64);
            let (p, mx, my) = (0..nd)
                .into_par_iter()
                .map(|i| {
                    let dv = d.0 + (i as f64 + 0.5) * dd;
                    let mut acc = (0.0, 0.0, 0.0);
                    for j in 0..nh {
                        let pt = rotated_point(alpha, dv, h.0 + (j as f64 + 0.5) * dh);
                        let w = sums.at(pt[0], pt[1]).norm_sqr();
                        acc.0 += w;
                        acc.1 += w * pt[0];
                        acc.2 += w * pt[1];
                    }
                    acc
                })
                .reduce(|| (0.0, 0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
            let p_area = p * dd * dh;
            if !(p_area >= 1e-6 * total) || p_area <= 0.0 {
                return Err(Error::UndefinedCentroid(p_area));
            }
            Ok([mx / p, my / p])
        }
    }
}

/// Average position at one time, with the region it was taken over.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    /// Units of `s0` after launch.
    pub t: f64,
    pub position: [f64; 2],
    pub mask: String,
}

/// Reflected-ray fit relative to specular reflection at the impact point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GhFit {
    /// Arc length from the impact point to where the outgoing ray leaves the circle.
    pub l_gh: f64,
    /// Fitted reflection angle over the incidence angle.
    pub chi_r_factor: f64,
    /// `l_GH / v_θ` with `v_θ = ħm0/(m*R)`, in units of `s0`.
    pub delay: f64,
    /// Largest perpendicular distance of a sample from its fitted ray.
    pub residual: f64,
}

fn in_impact_frame(spec: &PacketSpec, p: [f64; 2]) -> [f64; 2] {
    // coordinates (tangential along the motion, normal) with the impact point at (0, R)
    let (n, t) = spec.impact_frame();
    let sgn = if spec.m0 < 0.0 { -1.0 } else { 1.0 };
    [sgn * (p[0] * t[0] + p[1] * t[1]), p[0] * n[0] + p[1] * n[1]]
}

/// Fit the outgoing ray through `post`, keeping the incoming ray fixed.
pub fn gh_fit(
    pre: &[TrajectorySample],
    post: &[TrajectorySample],
    spec: &PacketSpec,
) -> Result<GhFit> {
    let radius = spec.potential.radius;
    if pre.len() < 3 || post.len() < 3 {
        return Err(Error::FitQuality(format!(
            "need ≥ 3 samples before and after impact, got {} and {}",
            pre.len(),
            post.len()
        )));
    }
    let min_dist = 3.0 / spec.sigma.sqrt();
    for s in pre.iter().chain(post) {
        let d = (s.position[0] - spec.impact[0]).hypot(s.position[1] - spec.impact[1]);
        if d < min_dist {
            return Err(Error::FitQuality(format!(
                "sample at t={} lies {d:.3} from the impact point (< {min_dist:.3})",
                s.t
            )));
        }
    }
    let chi = spec.chi().abs();
    // incoming ray in the impact frame: through (0, R) with direction (sin χ, cos χ)
    let dir_in = [chi.sin(), chi.cos()];
    let mut residual: f64 = 0.0;
    for s in pre {
        let p = in_impact_frame(spec, s.position);
        let rel = [p[0], p[1] - radius];
        residual = residual.max((rel[0] * dir_in[1] - rel[1] * dir_in[0]).abs());
    }
    // outgoing ray: principal axis of the post samples, oriented along time
    let pts: Vec<[f64; 2]> = post
        .iter()
        .map(|s| in_impact_frame(spec, s.position))
        .collect();
    let n = pts.len() as f64;
    let mean = [
        pts.iter().map(|p| p[0]).sum::<f64>() / n,
        pts.iter().map(|p| p[1]).sum::<f64>() / n,
    ];
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in &pts {
        let (dx, dy) = (p[0] - mean[0], p[1] - mean[1]);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let angle = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let mut u = [angle.cos(), angle.sin()];
    let first = pts[0];
    let last = pts[pts.len() - 1];
    if (last[0] - first[0]) * u[0] + (last[1] - first[1]) * u[1] < 0.0 {
        u = [-u[0], -u[1]];
    }
    for p in &pts {
        let rel = [p[0] - mean[0], p[1] - mean[1]];
        residual = residual.max((rel[0] * u[1] - rel[1] * u[0]).abs());
    }
    if residual > 1e-2 * radius {
        return Err(Error::FitQuality(format!(
            "samples deviate {residual:.4} from their rays"
        )));
    }
    // leave the circle: mean − s·u with |·| = R, taking the exit point behind the samples
    let b = mean[0] * u[0] + mean[1] * u[1];
    let c = mean[0] * mean[0] + mean[1] * mean[1] - radius * radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return Err(Error::FitQuality("outgoing ray misses the circle".into()));
    }
    // nearest crossing behind the mean sample
    let (s1, s2) = (b - disc.sqrt(), b + disc.sqrt());
    let s = if s1 > 0.0 { s1 } else { s2 };
    let exit = [mean[0] - s * u[0], mean[1] - s * u[1]];
    let beta = exit[0].atan2(exit[1]);
    let chi_r = beta + u[0].atan2(-u[1]);
    let v_theta = spec.potential.hbar * spec.m0.abs() / (spec.potential.mass * radius);
    let l_gh = radius * beta;
    Ok(GhFit {
        l_gh,
        chi_r_factor: chi_r / chi,
        delay: l_gh / v_theta / spec.s0(),
        residual,
    })
}

/// Probability inside the circle over probability on the analysis disk.
pub fn interior_fraction(sums: &RadialSums, radius: f64, norm: f64) -> Result<f64> {
    if !(norm > 0.0) {
        return Err(Error::Domain(format!(
            "reference norm {norm} must be positive"
        )));
    }
    Ok(sums.probability(Annulus {
        r_lo: 0.0,
        r_hi: radius,
    }) / norm)
}

/// Probability current `(J_r, J_θ)` on `n` equally spaced angles of the circle `r`.
pub fn current_on_circle(sums: &RadialSums, r: f64, n: usize) -> Vec<(f64, f64, f64)> {
    let bands = sums.bands_with_slope_at(r);
    let norm = 1.0 / (2.0 * std::f64::consts::PI);
    (0..n)
        .into_par_iter()
        .map(|j| {
            let th = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
            let step = Complex64::from_polar(1.0, th);
            let mut w = Complex64::from_polar(1.0, sums.ell_min as f64 * th);
            let (mut psi, mut dr, mut dth) = (
                Complex64::default(),
                Complex64::default(),
                Complex64::default(),
            );
            for (k, &(v, dv)) in bands.iter().enumerate() {
                let ell = (sums.ell_min + k as i64) as f64;
                psi += v * w;
                dr += dv * w;
                dth += v * w * Complex64::new(0.0, ell);
                w *= step;
            }
            let jr = (psi.conj() * dr).im * norm;
            let jt = (psi.conj() * dth).im * norm / r;
            (th, jr, jt)
        })
        .collect()
}

/// Direction of the outgoing flux through a circle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxDirection {
    /// Angle between the mean outgoing current and the outward normal, in degrees.
    pub angle_deg: f64,
    /// The same ray traced back to the boundary `radius` with `r·sin θ` held fixed.
    pub exit_angle_deg: f64,
    /// Time-integrated outgoing radial flux.
    pub outgoing: f64,
}

/// Angle of the time-integrated outgoing current through the circle `r` from the normal.
///
/// Only points with `J_r > 0` inside the sector `(centre, half_width)` contribute.
/// `frames` are `(weight, sums)` pairs.
pub fn flux_direction(
    frames: &[(f64, &RadialSums)],
    r: f64,
    radius: f64,
    sector: (f64, f64),
    n: usize,
) -> Result<FluxDirection> {
    let (mut jr, mut jt) = (0.0, 0.0);
    let inside = |th: f64| {
        let d = (th - sector.0).rem_euclid(2.0 * std::f64::consts::PI);
        d.min(2.0 * std::f64::consts::PI - d) <= sector.1
    };
    for (w, s) in frames {
        for (th, a, b) in current_on_circle(s, r, n) {
            if a > 0.0 && inside(th) {
                jr += w * a;
                jt += w * b;
            }
        }
    }
    let dth = 2.0 * std::f64::consts::PI * r / n as f64;
    if !(jr > 0.0) {
        return Err(Error::Domain("no outgoing flux".into()));
    }
    let angle = jt.abs().atan2(jr);
    let exit = (r / radius * angle.sin()).min(1.0).asin();
    Ok(FluxDirection {
        angle_deg: angle.to_degrees(),
        exit_angle_deg: exit.to_degrees(),
        outgoing: jr * dth,
    })
}

/// Reflected and transmitted shares of a single boundary hit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransmissionSummary {
    /// Interior probability after the hit over the interior probability at launch.
    pub reflected: f64,
    pub transmitted: f64,
    /// Outgoing flux through the probe circle over the same interval.
    pub flux: f64,
    pub probe_radius: f64,
    /// Time window in `s0` units.
    pub window: (f64, f64),
    /// Exit angle of the transmitted flux from the boundary normal, degrees.
    pub exit_angle_deg: f64,
}

/// Probe offset beyond the boundary for the transmitted flux.
pub const FLUX_PROBE_OFFSET: f64 = 0.4;

/// Shares and exit direction of the first boundary hit.
///
/// The flux window runs from `t = 0.5` until half a unit before the reflected packet
/// reaches the boundary again (chord `2R cos χ` at unit speed in `s0` units), and only
/// a ±60° sector around the impact point is probed. The reflected share is read
/// halfway along the chord.
pub fn transmission_summary(ev: &Evolver, spec: &PacketSpec) -> Result<TransmissionSummary> {
    let radius = spec.potential.radius;
    let s0 = spec.s0();
    let chord = 2.0 * radius * spec.chi().cos();
    let t_end = 1.0 + chord - 0.5;
    let t_mid = 1.0 + 0.5 * chord;
    let dt = 0.05;
    let steps = ((t_end - 0.5) / dt).floor() as usize;
    if steps < 10 {
        return Err(Error::Domain(format!(
            "window up to t = {t_end:.3} is too short"
        )));
    }
    let t_hi = 0.5 + steps as f64 * dt;
    let norm = ev.sums_at(0.0)?.probability(Annulus {
        r_lo: 0.0,
        r_hi: radius,
    });
    let sums = (0..=steps)
        .map(|i| ev.sums_at((0.5 + i as f64 * dt) * s0))
        .collect::<Result<Vec<_>>>()?;
    let frames: Vec<(f64, &RadialSums)> = sums
        .iter()
        .enumerate()
        .map(|(i, s)| (if i == 0 || i == steps { 0.5 } else { 1.0 } * dt * s0, s))
        .collect();
    let probe = radius + FLUX_PROBE_OFFSET;
    let centre = spec.impact[1].atan2(spec.impact[0]);
    let dir = flux_direction(&frames, probe, radius, (centre, 60f64.to_radians()), 4096)?;
    let reflected = interior_fraction(&ev.sums_at(t_mid * s0)?, radius, norm)?;
    Ok(TransmissionSummary {
        reflected,
        transmitted: 1.0 - reflected,
        flux: dir.outgoing / norm,
        probe_radius: probe,
        window: (0.5, t_hi),
        exit_angle_deg: dir.exit_angle_deg,
    })
}

/// Emission Husimi function on a `(D, h)` grid for one rotation angle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HusimiFrame {
    pub alpha: f64,
    pub mu: f64,
    pub d: Vec<f64>,
    pub h: Vec<f64>,
    /// `values[i·len(h) + j]` at `(d[i], h[j])`.
    pub values: Vec<f64>,
    pub centroid: (f64, f64),
    pub strength: f64,
    pub gap: f64,
    /// Largest value on the window boundary over the peak value.
    pub edge_ratio: f64,
}

/// Sampling window of the Husimi function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HusimiWindow {
    pub d: (f64, f64),
    pub h: (f64, f64),
    pub step: f64,
    pub mu: f64,
}

impl HusimiWindow {
    /// `D ∈ [R, R+5]`, `h ∈ [R−1, R+2]`; `D` is mirrored for negative `m0`.
    pub fn for_packet(spec: &PacketSpec) -> Self {
        let r = spec.potential.radius;
        let d = if spec.m0 < 0.0 {
            (-r - 5.0, -r)
        } else {
            (r, r + 5.0)
        };
        HusimiWindow {
            d,
            h: (r - 1.0, r + 2.0),
            step: 0.02,
            mu: 0.15f64.powi(2) / 2.0,
        }
    }
}

fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    (0..n)
        .map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h })
        .collect()
}

/// `H_E(D, h; α) = |∫ dh′ Ψ(x(h′), y(h′)) ξ(h, h′)|²` with a Gaussian window of variance `μ`.
///
/// Fails with a range error when the boundary of the window carries more than 1% of the peak.
pub fn emission_husimi(
    field: &impl PlaneField,
    alpha: f64,
    window: &HusimiWindow,
    radius: f64,
) -> Result<HusimiFrame> {
    let frame = husimi_sample(field, alpha, window, radius)?;
    if frame.edge_ratio > 0.01 {
        return Err(Error::Range(format!(
            "emission lobe reaches the Husimi window edge at α = {alpha} ({:.1}% of peak)",
            100.0 * frame.edge_ratio
        )));
    }
    Ok(frame)
}

/// [`emission_husimi`] without the window-edge check.
pub fn husimi_sample(
    field: &impl PlaneField,
    alpha: f64,
    window: &HusimiWindow,
    radius: f64,
) -> Result<HusimiFrame> {
    let mu = window.mu;
    if !(mu > 0.0) {
        return Err(Error::Domain(format!(
            "window variance must be positive, got {mu}"
        )));
    }
    let grid = |(lo, hi): (f64, f64)| {
        let n = ((hi - lo) / window.step).round().max(1.0) as usize + 1;
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect::<Vec<_>>()
    };
    let ds = grid(window.d);
    let hs = grid(window.h);
    let sq = mu.sqrt();
    let hp_step = sq / 6.0;
    let hp_lo = window.h.0 - 6.0 * sq;
    let n_hp = ((window.h.1 + 6.0 * sq - hp_lo) / hp_step).ceil() as usize + 1;
    let hps: Vec<f64> = (0..n_hp).map(|i| hp_lo + i as f64 * hp_step).collect();
    let norm = (mu * std::f64::consts::PI).powf(-0.25);
    let rows: Vec<Vec<f64>> = ds
        .par_iter()
        .map(|&d| {
            let line: Vec<Complex64> = hps
                .iter()
                .map(|&hp| {
                    let p = rotated_point(alpha, d, hp);
                    field.value(p[0], p[1])
                })
                .collect();
            hs.iter()
                .map(|&h| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (&hp, &v) in hps.iter().zip(&line) {
                        let u = hp - h;
                        if u.abs() < 6.0 * sq {
                            acc += v * (-u * u / (2.0 * mu)).exp();
                        }
                    }
                    (acc * (norm * hp_step)).norm_sqr()
                })
                .collect()
        })
        .collect();
    let wd = trapezoid_weights(ds.len(), (ds[ds.len() - 1] - ds[0]) / (ds.len() - 1) as f64);
    let wh = trapezoid_weights(hs.len(), (hs[hs.len() - 1] - hs[0]) / (hs.len() - 1) as f64);
    let (mut f, mut md, mut mh, mut peak) = (0.0, 0.0, 0.0, 0.0f64);
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let w = wd[i] * wh[j] * v;
            f += w;
            md += w * ds[i];
            mh += w * hs[j];
            peak = peak.max(v);
        }
    }
    if !(f > 0.0) {
        return Err(Error::UndefinedCentroid(f));
    }
    let edge = rows
        .iter()
        .enumerate()
        .flat_map(|(i, row)| {
            let last_row = i == 0 || i == rows.len() - 1;
            row.iter()
                .enumerate()
                .filter(move |&(j, _)| last_row || j == 0 || j == row.len() - 1)
                .map(|(_, &v)| v)
        })
        .fold(0.0, f64::max);
    let centroid = (md / f, mh / f);
    Ok(HusimiFrame {
        alpha,
        mu,
        d: ds,
        h: hs,
        values: rows.concat(),
        centroid,
        strength: f,
        gap: centroid.1 - radius,
        edge_ratio: edge / peak,
    })
}

/// `|∫ Ψ ξ dh′|²` along `h` at fixed `D` (a single column of [`emission_husimi`]).
pub fn husimi_line(field: &impl PlaneField, alpha: f64, d: f64, hs: &[f64], mu: f64) -> Vec<f64> {
    let sq = mu.sqrt();
    let step = sq / 6.0;
    let norm = (mu * std::f64::consts::PI).powf(-0.25);
    hs.iter()
        .map(|&h| {
            let n = (12.0 * sq / step).ceil() as usize;
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..=n {
                let hp = h - 6.0 * sq + i as f64 * step;
                let p = rotated_point(alpha, d, hp);
                let u = hp - h;
                acc += field.value(p[0], p[1]) * (-u * u / (2.0 * mu)).exp();
            }
            (acc * (norm * step)).norm_sqr()
        })
        .collect()
}

/// Most probable tunneling direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TunnelingDirection {
    /// Grid α with the largest strength at the first time, refined by a parabola.
    pub alpha_max_f: f64,
    /// α where the gap curves of the two times cross.
    pub alpha_crossing: Option<f64>,
    /// Gap at the crossing.
    pub delta: Option<f64>,
    /// `(α, f(α))` at the first time.
    pub f_curve: Vec<(f64, f64)>,
    /// `(α, Δ(α) at t1, Δ(α) at t2)`.
    pub delta_curves: Vec<(f64, f64, f64)>,
    /// Both criteria agree within one grid step.
    pub consistent: bool,
    /// Largest [`HusimiFrame::edge_ratio`] met during the scan.
    pub max_edge_ratio: f64,
}

/// Scan α over `alphas` at two instants.
///
/// Window-edge content does not abort the scan; it is reported in `max_edge_ratio`.
pub fn tunneling_direction(
    fields: (&impl PlaneField, &impl PlaneField),
    alphas: &[f64],
    window: &HusimiWindow,
    radius: f64,
) -> Result<TunnelingDirection> {
    if alphas.len() < 3 {
        return Err(Error::Domain("need at least 3 α values".into()));
    }
    let mut f_curve = Vec::with_capacity(alphas.len());
    let mut delta_curves = Vec::with_capacity(alphas.len());
    let mut max_edge_ratio: f64 = 0.0;
    for &a in alphas {
        let h1 = husimi_sample(fields.0, a, window, radius)?;
        let h2 = husimi_sample(fields.1, a, window, radius)?;
        max_edge_ratio = max_edge_ratio.max(h1.edge_ratio).max(h2.edge_ratio);
        f_curve.push((a, h1.strength));
        delta_curves.push((a, h1.gap, h2.gap));
    }
    let (imax, _) =
        f_curve.iter().enumerate().fold(
            (0, f64::MIN),
            |best, (i, &(_, f))| if f > best.1 { (i, f) } else { best },
        );
    let alpha_max_f = if imax > 0 && imax + 1 < f_curve.len() {
        let (a0, f0) = f_curve[imax - 1];
        let (a1, f1) = f_curve[imax];
        let (_, f2) = f_curve[imax + 1];
        let den = f0 - 2.0 * f1 + f2;
        if den < 0.0 {
            a1 + 0.5 * (a1 - a0) * (f0 - f2) / den
        } else {
            a1
        }
    } else {
        f_curve[imax].0
    };
    let mut alpha_crossing = None;
    let mut delta = None;
    let mut best_gap = f64::INFINITY;
    for w in delta_curves.windows(2) {
        let g0 = w[0].1 - w[0].2;
        let g1 = w[1].1 - w[1].2;
        if g0 == 0.0 || g0.signum() != g1.signum() {
            let s = if g0 == g1 { 0.0 } else { g0 / (g0 - g1) };
            let a = w[0].0 + s * (w[1].0 - w[0].0);
            // several crossings: keep the one nearest the strength maximum
            if (a - alpha_max_f).abs() < best_gap {
                best_gap = (a - alpha_max_f).abs();
                alpha_crossing = Some(a);
                delta = Some(w[0].1 + s * (w[1].1 - w[0].1));
            }
        }
    }
    let step = (alphas[1] - alphas[0]).abs();
    let consistent = alpha_crossing.is_some_and(|a| (a - alpha_max_f).abs() <= step);
    Ok(TunnelingDirection {
        alpha_max_f,
        alpha_crossing,
        delta,
        f_curve,
        delta_curves,
        consistent,
        max_edge_ratio,
    })
}

/// `Σ|b_j|²γ_jΔ_j / Σ|b_j|²γ_j` over the tunneling entries.
pub fn delta_predicted(exp: &Expansion) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for e in exp
        .entries
        .iter()
        .filter(|e| e.mode.class == ModeClass::Tunneling)
    {
        let w = e.coeff.norm_sqr() * e.mode.gamma;
        num += w * delta_j(&e.mode, &exp.potential)?.delta;
        den += w;
    }
    if !(den > 0.0) {
        return Err(Error::Domain("no tunneling weight in the expansion".into()));
    }
    Ok(num / den)
}

/// Back-extrapolation of the transmitted component to its emission point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmissionOrigin {
    /// Extrapolated position at `t = 1` (the impact time).
    pub position_at_impact: [f64; 2],
    /// `(x_T, y_T) = ((R+Δ) sin|α_T|, (R+Δ) cos α_T)`.
    pub emission_point: [f64; 2],
    pub t_star: f64,
    /// `t* − 1`, units of `s0`.
    pub delay: f64,
    /// Segment speeds of the track differ by more than 10%.
    pub speed_warning: bool,
}

/// Straight-line fit of the exterior track, projected onto `(x_T, y_T)`.
pub fn emission_origin(
    track: &[TrajectorySample],
    radius: f64,
    alpha_t: f64,
    delta: f64,
) -> Result<EmissionOrigin> {
    if track.len() < 2 {
        return Err(Error::Domain("need at least two exterior samples".into()));
    }
    let n = track.len() as f64;
    let tm = track.iter().map(|s| s.t).sum::<f64>() / n;
    let pm = [
        track.iter().map(|s| s.position[0]).sum::<f64>() / n,
        track.iter().map(|s| s.position[1]).sum::<f64>() / n,
    ];
    let stt: f64 = track.iter().map(|s| (s.t - tm).powi(2)).sum();
    if !(stt > 0.0) {
        return Err(Error::Domain("exterior samples share one time".into()));
    }
    let v = [
        track
            .iter()
            .map(|s| (s.t - tm) * (s.position[0] - pm[0]))
            .sum::<f64>()
            / stt,
        track
            .iter()
            .map(|s| (s.t - tm) * (s.position[1] - pm[1]))
            .sum::<f64>()
            / stt,
    ];
    let speeds: Vec<f64> = track
        .windows(2)
        .map(|w| {
            let dt = w[1].t - w[0].t;
            (w[1].position[0] - w[0].position[0]).hypot(w[1].position[1] - w[0].position[1]) / dt
        })
        .collect();
    let (smin, smax) = speeds
        .iter()
        .fold((f64::MAX, 0.0f64), |a, &s| (a.0.min(s), a.1.max(s)));
    let at = |t: f64| [pm[0] + v[0] * (t - tm), pm[1] + v[1] * (t - tm)];
    let rt = radius + delta;
    let emission_point = [rt * alpha_t.abs().sin(), rt * alpha_t.cos()];
    let v2 = v[0] * v[0] + v[1] * v[1];
    let t_star =
        tm + ((emission_point[0] - pm[0]) * v[0] + (emission_point[1] - pm[1]) * v[1]) / v2;
    Ok(EmissionOrigin {
        position_at_impact: at(1.0),
        emission_point,
        t_star,
        delay: t_star - 1.0,
        speed_warning: smax > 1.1 * smin,
    })
}
