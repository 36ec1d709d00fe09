//! Scenario configuration, presets, the analysis pipeline and the metric report.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use ini::Ini;
use serde::{Deserialize, Serialize};

use crate::barrier1d::{
    delay_from_phase, gh_theory, phase_curve, rect_transmission, reflection_modified, step_phase,
    total_variation, Barrier1d, GhTheory, ModifiedEffBarrier, PhasePoint, RectBarrier,
    TransmittedPacket, Window1d,
};
use crate::error::{Error, Result};
use crate::field::{
    fidelity, frame_at, profile_cuts, profile_error, Evolver, FrameSpec, RadialGrid, RadialSums,
};
use crate::observables::{
    average_position, delta_predicted, emission_origin, gh_fit, husimi_sample,
    transmission_summary, tunneling_direction, EmissionOrigin, GhFit, HusimiFrame, HusimiWindow,
    Region, TrajectorySample, TransmissionSummary, TunnelingDirection,
};
use crate::packet::{
    compute_coefficients, initial_window, CoefficientSet, Expansion, ModeCounts, PacketSpec,
};
use crate::spectrum::{find_resonances, ModeClass, ModeTable, PotentialSpec};

/// Named packets of the reference study.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    A,
    B,
    C,
    D,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::A, Preset::B, Preset::C, Preset::D];

    /// `(m0, k0)`.
    pub fn packet(self) -> (f64, f64) {
        match self {
            Preset::A => (75.0, 75.0),
            Preset::B => (120.0, 90.0),
            Preset::C => (140.0, 122.065),
            Preset::D => (140.0, 140.0),
        }
    }

    /// Reference mode count used for the downstream analyses, where one is known.
    pub fn keep(self) -> Option<usize> {
        match self {
            Preset::A => Some(2474),
            Preset::B => Some(1982),
            Preset::C | Preset::D => None,
        }
    }

    fn toggles(self) -> Toggles {
        match self {
            Preset::A => Toggles {
                gh: true,
                husimi: false,
                barrier1d: false,
                fractions: false,
            },
            Preset::B => Toggles {
                gh: true,
                husimi: true,
                barrier1d: true,
                fractions: false,
            },
            Preset::C | Preset::D => Toggles {
                gh: false,
                husimi: false,
                barrier1d: false,
                fractions: true,
            },
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Preset::A => "A",
            Preset::B => "B",
            Preset::C => "C",
            Preset::D => "D",
        };
        f.write_str(s)
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(Preset::A),
            "B" => Ok(Preset::B),
            "C" => Ok(Preset::C),
            "D" => Ok(Preset::D),
            other => Err(Error::Config(format!(
                "unknown preset '{other}' (expected A, B, C or D)"
            ))),
        }
    }
}

/// Which analyses `report` runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Toggles {
    pub gh: bool,
    pub husimi: bool,
    pub barrier1d: bool,
    pub fractions: bool,
}

/// Parameters of the one-dimensional delay study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Barrier1dConfig {
    pub rect: RectBarrier,
    /// `(E0, σ_k)` of the narrow and broad rectangular-barrier packets.
    pub narrow: (f64, f64),
    pub broad: (f64, f64),
    pub modified_m: u32,
    pub modified_v0: f64,
    pub modified_e0: f64,
    pub modified_sigma: f64,
    pub modified_exit: f64,
    pub modified_exit_scan: Vec<f64>,
    /// Angular number of the full-scale barrier the delay ratio is transferred to.
    pub target_m: u32,
    pub phase_points: usize,
    pub packet_nodes: usize,
}

impl Default for Barrier1dConfig {
    fn default() -> Self {
        Barrier1dConfig {
            rect: RectBarrier::default(),
            narrow: (80.0, 0.5),
            broad: (50.0, 2.0),
            modified_m: 17,
            modified_v0: 100.0,
            modified_e0: 118.0,
            modified_sigma: 0.5,
            modified_exit: 2.7,
            modified_exit_scan: vec![2.6, 2.7, 2.8],
            target_m: 120,
            phase_points: 2001,
            packet_nodes: 2000,
        }
    }
}

/// Everything a subcommand needs, in natural units (`m* = ħ = 1` unless overridden).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub preset: Option<Preset>,
    pub potential: PotentialSpec,
    pub m0: f64,
    pub k0: f64,
    pub sigma: f64,
    pub threshold: f64,
    /// Keep this many largest coefficients for the dynamics instead of applying `threshold`.
    pub keep: Option<usize>,
    /// Outer radius of the evolution grid.
    pub r_max: f64,
    pub frame: FrameSpec,
    /// Side and half width of the Cartesian export grid.
    pub export_n: usize,
    pub export_half: f64,
    /// Frame times for `evolve`, units of `s0` after launch.
    pub times: Vec<f64>,
    pub toggles: Toggles,
    /// GH fit sample times before and after the bounce.
    pub gh_pre: Vec<f64>,
    pub gh_post: Vec<f64>,
    /// Husimi scan times and α grid.
    pub husimi_times: (f64, f64),
    pub alphas: Vec<f64>,
    pub barrier1d: Barrier1dConfig,
}

/// `[−0.15, 0.05]` step 0.005, mirrored for clockwise-negative `m0`; ascending.
fn default_alphas(m0: f64) -> Vec<f64> {
    let sgn = if m0 < 0.0 { -1.0 } else { 1.0 };
    let mut a: Vec<f64> = (0..=40).map(|i| sgn * (-0.15 + 0.005 * i as f64)).collect();
    a.sort_by(f64::total_cmp);
    a
}

impl ScenarioConfig {
    pub fn custom(m0: f64, k0: f64) -> Self {
        let potential = PotentialSpec::default();
        let alphas = default_alphas(m0);
        ScenarioConfig {
            preset: None,
            potential,
            m0,
            k0,
            sigma: 100.0,
            threshold: 5e-4,
            keep: None,
            r_max: potential.radius + 7.0,
            frame: FrameSpec::default_for(&potential),
            export_n: 401,
            export_half: potential.radius + 3.0,
            times: vec![0.0, 0.5, 1.0, 1.5, 2.0],
            toggles: Toggles {
                gh: true,
                husimi: false,
                barrier1d: false,
                fractions: false,
            },
            gh_pre: vec![0.4, 0.5, 0.6],
            gh_post: vec![1.4, 1.5, 1.6],
            husimi_times: (7.5, 10.0),
            alphas,
            barrier1d: Barrier1dConfig::default(),
        }
    }

    pub fn preset(p: Preset) -> Self {
        let (m0, k0) = p.packet();
        let mut c = Self::custom(m0, k0);
        c.preset = Some(p);
        c.keep = p.keep();
        c.toggles = p.toggles();
        c
    }

    pub fn packet(&self) -> Result<PacketSpec> {
        PacketSpec::new(self.potential, self.m0, self.k0, self.sigma)
    }

    /// Flip the sense of rotation (`m0 → −m0`), mirroring the α grid. Keeps `keep`.
    pub fn mirrored(&self) -> Self {
        let mut c = self.clone();
        c.preset = None;
        c.m0 = -self.m0;
        c.alphas = self.alphas.iter().rev().map(|a| -a).collect();
        c
    }

    /// INI text: sections `units`, `potential`, `packet`, `expansion`, `grid`, `evolve`,
    /// `analysis`, `husimi`, `barrier1d`. Unknown keys are rejected.
    pub fn from_ini(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let get = |sec: &str, key: &str| {
            ini.section(Some(sec))
                .and_then(|s| s.get(key))
                .map(str::trim)
        };
        let preset = get("packet", "preset").map(Preset::from_str).transpose()?;
        let mut c = match preset {
            Some(p) => Self::preset(p),
            None => {
                let m0 = num(get("packet", "m0"), "packet.m0")?.ok_or_else(|| {
                    Error::Config("packet.m0 is required without a preset".into())
                })?;
                let k0 = num(get("packet", "k0"), "packet.k0")?.ok_or_else(|| {
                    Error::Config("packet.k0 is required without a preset".into())
                })?;
                Self::custom(m0, k0)
            }
        };
        let known: &[(&str, &[&str])] = &[
            ("units", &["mass", "hbar"]),
            ("potential", &["radius", "v0"]),
            ("packet", &["preset", "m0", "k0", "sigma"]),
            ("expansion", &["threshold", "keep"]),
            (
                "grid",
                &[
                    "r_max",
                    "nr",
                    "ntheta",
                    "frame_r_max",
                    "export_n",
                    "export_half",
                ],
            ),
            ("evolve", &["times"]),
            (
                "analysis",
                &[
                    "gh",
                    "husimi",
                    "barrier1d",
                    "fractions",
                    "gh_pre",
                    "gh_post",
                ],
            ),
            ("husimi", &["times", "alpha_min", "alpha_max", "alpha_step"]),
            (
                "barrier1d",
                &[
                    "v_max",
                    "v_min",
                    "x_a",
                    "x_b",
                    "narrow_e0",
                    "narrow_sigma",
                    "broad_e0",
                    "broad_sigma",
                    "modified_m",
                    "modified_v0",
                    "modified_e0",
                    "modified_sigma",
                    "modified_exit",
                ],
            ),
        ];
        for (sec, props) in ini.iter() {
            let Some(sec) = sec else {
                if props.iter().next().is_some() {
                    return Err(Error::Config("keys outside a section".into()));
                }
                continue;
            };
            let Some((_, keys)) = known.iter().find(|(s, _)| *s == sec) else {
                return Err(Error::Config(format!("unknown section [{sec}]")));
            };
            for (k, _) in props.iter() {
                if !keys.contains(&k) {
                    return Err(Error::Config(format!("unknown key {sec}.{k}")));
                }
            }
        }
        let set = |slot: &mut f64, sec: &str, key: &str| -> Result<()> {
            if let Some(v) = num(get(sec, key), &format!("{sec}.{key}"))? {
                *slot = v;
            }
            Ok(())
        };
        set(&mut c.potential.mass, "units", "mass")?;
        set(&mut c.potential.hbar, "units", "hbar")?;
        set(&mut c.potential.radius, "potential", "radius")?;
        set(&mut c.potential.v0, "potential", "v0")?;
        c.potential.validate()?;
        let m0_before = c.m0;
        set(&mut c.m0, "packet", "m0")?;
        set(&mut c.k0, "packet", "k0")?;
        set(&mut c.sigma, "packet", "sigma")?;
        if c.preset.is_some() && (c.m0, c.k0) != c.preset.map(Preset::packet).unwrap() {
            c.preset = None;
        }
        if c.m0 != m0_before {
            c.alphas = default_alphas(c.m0);
        }
        set(&mut c.threshold, "expansion", "threshold")?;
        if let Some(k) = get("expansion", "keep") {
            c.keep = match k {
                "" | "none" => None,
                s => Some(
                    s.parse()
                        .map_err(|_| Error::Config(format!("expansion.keep: bad count '{s}'")))?,
                ),
            };
        }
        set(&mut c.r_max, "grid", "r_max")?;
        set(&mut c.frame.r_max, "grid", "frame_r_max")?;
        set(&mut c.export_half, "grid", "export_half")?;
        for (slot, key) in [
            (&mut c.frame.nr, "nr"),
            (&mut c.frame.ntheta, "ntheta"),
            (&mut c.export_n, "export_n"),
        ] {
            if let Some(v) = get("grid", key) {
                *slot = v
                    .parse()
                    .map_err(|_| Error::Config(format!("grid.{key}: bad count '{v}'")))?;
            }
        }
        if let Some(v) = get("evolve", "times") {
            c.times = list(v, "evolve.times")?;
        }
        for (slot, key) in [
            (&mut c.toggles.gh, "gh"),
            (&mut c.toggles.husimi, "husimi"),
            (&mut c.toggles.barrier1d, "barrier1d"),
            (&mut c.toggles.fractions, "fractions"),
        ] {
            if let Some(v) = get("analysis", key) {
                *slot = flag(v, key)?;
            }
        }
        if let Some(v) = get("analysis", "gh_pre") {
            c.gh_pre = list(v, "analysis.gh_pre")?;
        }
        if let Some(v) = get("analysis", "gh_post") {
            c.gh_post = list(v, "analysis.gh_post")?;
        }
        if let Some(v) = get("husimi", "times") {
            match list(v, "husimi.times")?[..] {
                [a, b] => c.husimi_times = (a, b),
                _ => {
                    return Err(Error::Config(
                        "husimi.times needs exactly two values".into(),
                    ))
                }
            }
        }
        let (lo, hi, step) = (
            num(get("husimi", "alpha_min"), "husimi.alpha_min")?,
            num(get("husimi", "alpha_max"), "husimi.alpha_max")?,
            num(get("husimi", "alpha_step"), "husimi.alpha_step")?,
        );
        if lo.is_some() || hi.is_some() || step.is_some() {
            let first = c.alphas.first().copied().unwrap_or(-0.15);
            let last = c.alphas.last().copied().unwrap_or(0.05);
            let (lo, hi, step) = (
                lo.unwrap_or(first),
                hi.unwrap_or(last),
                step.unwrap_or(0.005),
            );
            if !(step > 0.0) || !(hi > lo) {
                return Err(Error::Config(format!(
                    "bad α grid [{lo}, {hi}] step {step}"
                )));
            }
            let n = ((hi - lo) / step + 1e-9).floor() as usize;
            c.alphas = (0..=n).map(|i| lo + step * i as f64).collect();
        }
        let b = &mut c.barrier1d;
        set(&mut b.rect.v_max, "barrier1d", "v_max")?;
        set(&mut b.rect.v_min, "barrier1d", "v_min")?;
        set(&mut b.rect.x_a, "barrier1d", "x_a")?;
        set(&mut b.rect.x_b, "barrier1d", "x_b")?;
        set(&mut b.narrow.0, "barrier1d", "narrow_e0")?;
        set(&mut b.narrow.1, "barrier1d", "narrow_sigma")?;
        set(&mut b.broad.0, "barrier1d", "broad_e0")?;
        set(&mut b.broad.1, "barrier1d", "broad_sigma")?;
        set(&mut b.modified_v0, "barrier1d", "modified_v0")?;
        set(&mut b.modified_e0, "barrier1d", "modified_e0")?;
        set(&mut b.modified_sigma, "barrier1d", "modified_sigma")?;
        set(&mut b.modified_exit, "barrier1d", "modified_exit")?;
        if let Some(v) = get("barrier1d", "modified_m") {
            b.modified_m = v
                .parse()
                .map_err(|_| Error::Config(format!("barrier1d.modified_m: bad value '{v}'")))?;
        }
        b.rect.validate()?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.packet()?;
        let positive = [self.threshold, self.r_max, self.export_half];
        if positive.iter().any(|v| !(*v > 0.0)) || self.r_max <= self.potential.radius {
            return Err(Error::Config(
                "threshold, r_max and export_half must be positive, r_max > R".into(),
            ));
        }
        if self.times.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::Config("evolution times must be ≥ 0".into()));
        }
        if self.export_n < 2 || self.frame.nr == 0 || self.frame.ntheta == 0 {
            return Err(Error::Config("grid sizes must be positive".into()));
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        match self.preset {
            Some(p) => p.to_string(),
            None => format!("m0={} k0={}", self.m0, self.k0),
        }
    }
}

fn num(v: Option<&str>, key: &str) -> Result<Option<f64>> {
    v.map(|s| {
        s.parse::<f64>()
            .map_err(|_| Error::Config(format!("{key}: bad number '{s}'")))
    })
    .transpose()
}

fn list(v: &str, key: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Error::Config(format!("{key}: bad number '{s}'")))
        })
        .collect()
}

fn flag(v: &str, key: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!(
            "analysis.{key}: expected a boolean, got '{v}'"
        ))),
    }
}

/// Mode table, coefficients, truncated expansions and the evolver of one packet.
pub struct Prepared {
    pub config: ScenarioConfig,
    pub spec: PacketSpec,
    pub table: ModeTable,
    pub set: CoefficientSet,
    /// Truncated at `threshold`.
    pub thresholded: Expansion,
    /// Used for the dynamics (`keep` largest, or the thresholded set).
    pub expansion: Expansion,
    pub evolver: Evolver,
}

impl Prepared {
    /// Solve (or reuse) the mode table, expand, and build the evolver.
    pub fn new(config: &ScenarioConfig, table: Option<ModeTable>) -> Result<Self> {
        config.validate()?;
        let spec = config.packet()?;
        let (table, set) = match table {
            None => {
                let (t, s, _) = crate::packet::solve_for_packet(&spec, config.threshold)?;
                (t, s)
            }
            Some(t) => {
                if t.potential != config.potential {
                    return Err(Error::Config(
                        "mode table was solved for a different potential".into(),
                    ));
                }
                let w = initial_window(&spec, config.threshold)?;
                let s = compute_coefficients(&spec, &t)?;
                s.check_coverage(&t, w.k_max, config.threshold)?;
                (t, s)
            }
        };
        let thresholded = set.truncate(config.threshold);
        let expansion = match config.keep {
            Some(n) => set.truncate(set.threshold_for_count(n)?),
            None => thresholded.clone(),
        };
        let grid = RadialGrid::for_expansion(&expansion, config.r_max)?;
        let evolver = Evolver::new(&expansion, grid)?;
        Ok(Prepared {
            config: config.clone(),
            spec,
            table,
            set,
            thresholded,
            expansion,
            evolver,
        })
    }

    pub fn sums_at(&self, t: f64) -> Result<RadialSums> {
        self.evolver.sums_at(t * self.spec.s0())
    }
}

/// Reconstruction quality at launch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub fidelity: f64,
    pub profile_error: f64,
    /// Horizontal then vertical cut, rows `(offset, |Ψ_G|², |Ψ|²)`.
    pub cuts: [Vec<(f64, f64, f64)>; 2],
}

pub fn reconstruction(p: &Prepared) -> Result<Reconstruction> {
    let radius = p.spec.potential.radius;
    let frame = frame_at(&p.evolver, &p.spec, 0.0, p.config.frame)?;
    let cuts = profile_cuts(&frame, &p.spec, p.spec.initial_mean(), 0.5, 401);
    Ok(Reconstruction {
        fidelity: fidelity(&frame, &p.spec, radius),
        profile_error: profile_error(&cuts),
        cuts,
    })
}

/// Whole-plane average positions around the bounce and the ray fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GhNumeric {
    pub pre: Vec<TrajectorySample>,
    pub post: Vec<TrajectorySample>,
    pub fit: GhFit,
}

pub fn gh_numeric(p: &Prepared) -> Result<GhNumeric> {
    let whole = Region::whole(p.config.r_max);
    let sample = |t: f64| -> Result<TrajectorySample> {
        Ok(TrajectorySample {
            t,
            position: average_position(&p.sums_at(t)?, whole)?,
            mask: whole.label(),
        })
    };
    let pre = p
        .config
        .gh_pre
        .iter()
        .map(|&t| sample(t))
        .collect::<Result<Vec<_>>>()?;
    let post = p
        .config
        .gh_post
        .iter()
        .map(|&t| sample(t))
        .collect::<Result<Vec<_>>>()?;
    let fit = gh_fit(&pre, &post, &p.spec)?;
    Ok(GhNumeric { pre, post, fit })
}

/// Husimi scan, Δ prediction and the back-extrapolated emission point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TunnelingImage {
    pub direction: TunnelingDirection,
    pub delta_predicted: f64,
    /// α used for the frames and the emission point (crossing, else max f).
    pub alpha_t: f64,
    pub frames: Vec<HusimiFrame>,
    /// Exterior-mask average positions at the two scan times.
    pub exterior: Vec<TrajectorySample>,
    pub origin: Option<EmissionOrigin>,
}

pub fn tunneling_image(p: &Prepared) -> Result<TunnelingImage> {
    let radius = p.spec.potential.radius;
    let (t1, t2) = p.config.husimi_times;
    let s1 = p.sums_at(t1)?;
    let s2 = p.sums_at(t2)?;
    let window = HusimiWindow::for_packet(&p.spec);
    let direction = tunneling_direction((&s1, &s2), &p.config.alphas, &window, radius)?;
    let alpha_t = direction.alpha_crossing.unwrap_or(direction.alpha_max_f);
    let frames = [&s1, &s2]
        .iter()
        .map(|s| husimi_sample(*s, alpha_t, &window, radius))
        .collect::<Result<Vec<_>>>()?;
    let ext = Region::exterior(radius, p.config.r_max);
    let exterior = [(t1, &s1), (t2, &s2)]
        .iter()
        .map(|(t, s)| {
            Ok(TrajectorySample {
                t: *t,
                position: average_position(s, ext)?,
                mask: ext.label(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let delta = direction.delta.unwrap_or(frames[0].gap);
    let origin = emission_origin(&exterior, radius, alpha_t, delta).ok();
    Ok(TunnelingImage {
        direction,
        delta_predicted: delta_predicted(&p.expansion)?,
        alpha_t,
        frames,
        exterior,
        origin,
    })
}

/// One-dimensional delay study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Barrier1dStudy {
    pub phase_t: Vec<PhasePoint>,
    pub phase_r: Vec<PhasePoint>,
    pub phase_t_variation: f64,
    pub phase_r_variation: f64,
    /// `ħ dφ_T/dE`, `ħ dφ_R/dE` at the narrow-packet energy.
    pub rect_delay_t_phase: f64,
    pub rect_delay_r_phase: f64,
    /// Chord slope of `φ_T` across `(v_min, v_max)`.
    pub rect_delay_t_chord: f64,
    pub rect_delay_t_peak: f64,
    pub rect_delay_t_peak_broad: f64,
    pub modified_delay_t_peak: f64,
    /// `(x_b, delay)` over the exit scan.
    pub modified_delay_t_scan: Vec<(f64, f64)>,
    pub modified_delay_r_phase: f64,
    pub ratio: f64,
    /// Ratio times the reflection delay of the full-scale barrier at the same reduced energy.
    pub scaled_prediction: f64,
    /// Largest `|φ_R − φ_step|/π` of the full-scale barrier over `ε ∈ [0.1, 0.9]·V0`.
    pub step_phase_deviation: f64,
}

pub fn barrier1d_study(cfg: &Barrier1dConfig, full: &PotentialSpec) -> Result<Barrier1dStudy> {
    let rect = cfg.rect;
    rect.validate()?;
    let lo = rect.v_min + 1e-4 * (rect.v_max - rect.v_min);
    let n = cfg.phase_points;
    let phase_t = phase_curve(lo, rect.v_max, n, |e| {
        rect_transmission(&rect, e).map(|t| (t.phi_t, t.t.norm()))
    })?;
    let phase_r = phase_curve(lo, rect.v_max, n, |e| {
        rect_transmission(&rect, e).map(|t| (t.phi_r, t.r.norm()))
    })?;
    let e_n = cfg.narrow.0;
    let rect_delay_t_phase = delay_from_phase(&phase_t, e_n, 1.0)?;
    let rect_delay_r_phase = delay_from_phase(&phase_r, e_n, 1.0)?;
    let rect_delay_t_chord =
        (phase_t[n - 1].phase - phase_t[0].phase) / (phase_t[n - 1].e - phase_t[0].e);
    let rect_peak = |(e0, sig): (f64, f64)| -> Result<f64> {
        let w = Window1d {
            k0: (2.0 * e0).sqrt(),
            sigma_k: sig,
        };
        TransmittedPacket::new(w, Barrier1d::Rect(rect), cfg.packet_nodes)?
            .peak_time(rect.x_b, -0.3, 0.6, 900)
    };
    let rect_delay_t_peak = rect_peak(cfg.narrow)?;
    let rect_delay_t_peak_broad = rect_peak(cfg.broad)?;

    let small = PotentialSpec::new(full.radius, cfg.modified_v0, full.mass, full.hbar)?;
    let mb = ModifiedEffBarrier::new(cfg.modified_m, small);
    let k_in = (2.0 * small.mass * (cfg.modified_e0 - mb.plateau)).sqrt() / small.hbar;
    let window = Window1d {
        k0: k_in,
        sigma_k: cfg.modified_sigma,
    };
    let modified_peak = |x_b: f64| -> Result<f64> {
        TransmittedPacket::new(
            window,
            Barrier1d::Modified {
                barrier: mb,
                exit: x_b,
            },
            cfg.packet_nodes,
        )?
        .peak_time(x_b, -0.5, 1.5, 2000)
    };
    let modified_delay_t_peak = modified_peak(cfg.modified_exit)?;
    let modified_delay_t_scan = cfg
        .modified_exit_scan
        .iter()
        .map(|&x| Ok((x, modified_peak(x)?)))
        .collect::<Result<Vec<_>>>()?;
    let reflection = |bar: ModifiedEffBarrier, e_lo: f64, e_hi: f64, e0: f64| -> Result<f64> {
        let c = phase_curve(e_lo, e_hi, n, |e| {
            reflection_modified(&bar, e).map(|r| (r.phi_r, r.f.norm()))
        })?;
        delay_from_phase(&c, e0, bar.potential.hbar)
    };
    let modified_delay_r_phase =
        reflection(mb, mb.plateau + 1.0, 1.2 * cfg.modified_e0, cfg.modified_e0)?;
    let ratio = modified_delay_t_peak / modified_delay_r_phase;

    // same reduced energy (E − plateau)/V0 on the full-scale barrier
    let big = ModifiedEffBarrier::new(cfg.target_m, *full);
    let e_big = big.plateau + (cfg.modified_e0 - mb.plateau) * full.v0 / cfg.modified_v0;
    let delay_r_big = reflection(
        big,
        big.plateau + 0.01 * full.v0,
        e_big + 0.2 * full.v0,
        e_big,
    )?;
    let scaled_prediction = ratio * delay_r_big;

    let dev = phase_curve(
        big.plateau + 0.1 * full.v0,
        big.plateau + 0.9 * full.v0,
        n,
        |e| reflection_modified(&big, e).map(|r| (r.phi_r, r.f.norm())),
    )?
    .iter()
    .map(|pt| Ok((pt.phase - step_phase(pt.e - big.plateau, full.v0)?).abs()))
    .collect::<Result<Vec<f64>>>()?
    .into_iter()
    .fold(0.0, f64::max);

    Ok(Barrier1dStudy {
        phase_t_variation: total_variation(&phase_t),
        phase_r_variation: total_variation(&phase_r),
        phase_t,
        phase_r,
        rect_delay_t_phase,
        rect_delay_r_phase,
        rect_delay_t_chord,
        rect_delay_t_peak,
        rect_delay_t_peak_broad,
        modified_delay_t_peak,
        modified_delay_t_scan,
        modified_delay_r_phase,
        ratio,
        scaled_prediction,
        step_phase_deviation: dev / PI,
    })
}

/// Located resonance of a given angular number near a target `Re k`.
pub fn resonance_near(
    pot: &PotentialSpec,
    m: u32,
    k_max: f64,
    target_re: f64,
) -> Result<crate::spectrum::EigenMode> {
    let found = find_resonances(pot, m, (pot.k_v(), k_max), 1)?;
    found
        .modes
        .into_iter()
        .filter(|md| md.class != ModeClass::Bound)
        .min_by(|a, b| {
            (a.k.re - target_re)
                .abs()
                .total_cmp(&(b.k.re - target_re).abs())
        })
        .ok_or_else(|| Error::Convergence(format!("no resonance for m = {m} below Re k = {k_max}")))
}

/// How a metric's tolerance is applied.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tolerance {
    Absolute(f64),
    Relative(f64),
    /// `value/target ∈ [1/f, f]`.
    Factor(f64),
    /// `value ≥ target − tol`.
    AtLeast(f64),
    /// `value ≤ target + tol`.
    AtMost(f64),
}

impl Tolerance {
    fn scaled(self, s: f64) -> Self {
        match self {
            Tolerance::Absolute(t) => Tolerance::Absolute(t * s),
            Tolerance::Relative(t) => Tolerance::Relative(t * s),
            Tolerance::Factor(f) => Tolerance::Factor(f.powf(s)),
            Tolerance::AtLeast(t) => Tolerance::AtLeast(t * s),
            Tolerance::AtMost(t) => Tolerance::AtMost(t * s),
        }
    }

    pub fn accepts(self, value: f64, target: f64) -> bool {
        match self {
            Tolerance::Absolute(t) => (value - target).abs() <= t,
            Tolerance::Relative(t) => (value - target).abs() <= t * target.abs(),
            Tolerance::Factor(f) => {
                let r = value / target;
                r >= 1.0 / f && r <= f
            }
            Tolerance::AtLeast(t) => value >= target - t,
            Tolerance::AtMost(t) => value <= target + t,
        }
    }
}

/// One reported quantity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    pub value: Option<f64>,
    pub paper_value: Option<f64>,
    pub tolerance: Option<Tolerance>,
    /// `None` when there is no reference value.
    pub pass: Option<bool>,
    pub error: Option<String>,
}

/// Reference values and tolerances, keyed by metric name.
pub fn reference(preset: Option<Preset>, name: &str) -> Option<(f64, Tolerance)> {
    use Tolerance::*;
    let b1d = match name {
        "rect_delay_t_phase" => Some((0.05, Absolute(0.005))),
        "rect_delay_r_phase" => Some((0.03, Absolute(0.005))),
        "rect_delay_t_peak" => Some((0.045, Absolute(0.01))),
        "rect_delay_t_peak_broad" => Some((0.045, Absolute(0.01))),
        "modified_delay_t_peak" => Some((0.14, Absolute(0.03))),
        "modified_delay_r_phase" => Some((0.03, Absolute(0.005))),
        "delay_ratio" => Some((4.6, Absolute(0.7))),
        "scaled_prediction" => Some((0.00276, Absolute(0.05 / 90.0))),
        "step_phase_deviation_pi" => Some((0.0, AtMost(0.05))),
        _ => None,
    };
    if b1d.is_some() {
        return b1d;
    }
    match (preset?, name) {
        (Preset::A, "mode_count_total") => Some((2474.0, Relative(0.02))),
        (Preset::A, "mode_count_bound") => Some((2428.0, Relative(0.02))),
        (Preset::A, "mode_count_resonance") => Some((66.0, Relative(0.02))),
        (Preset::A, "l_gh_numeric") => Some((0.015, Absolute(0.003))),
        (Preset::A, "chi_r_factor") => Some((1.0125, Absolute(0.0075))),
        (Preset::A, "l_gh_theory") => Some((0.0152, Absolute(0.0002))),
        (Preset::A, "gh_delay_theory_s0") => Some((0.0304, Relative(0.02))),
        (Preset::B, "resonance_re_k") => Some((113.0, Absolute(0.1))),
        (Preset::B, "resonance_im_k") => Some((-1.57e-6, Factor(3.0))),
        (Preset::B, "mode_count_bound") => Some((1374.0, Relative(0.02))),
        (Preset::B, "mode_count_tunneling") => Some((608.0, Relative(0.02))),
        (Preset::B, "fidelity") => Some((0.99, AtLeast(0.0))),
        (Preset::B, "profile_error") => Some((0.03, AtMost(0.0))),
        (Preset::B, "l_gh_numeric") => Some((0.024, Absolute(0.004))),
        (Preset::B, "chi_r_factor") => Some((1.0275, Absolute(0.0125))),
        (Preset::B, "l_gh_theory") => Some((0.0242, Absolute(0.0003))),
        (Preset::B, "gh_delay_theory_s0") => Some((0.0363, Relative(0.02))),
        (Preset::B, "delta_crossing") => Some((0.324, Absolute(0.02))),
        (Preset::B, "delta_predicted") => Some((0.30, Absolute(0.02))),
        (Preset::B, "alpha_t_crossing") => Some((-0.045, Absolute(0.01))),
        (Preset::B, "alpha_t_max_f") => Some((-0.045, Absolute(0.01))),
        (Preset::B, "exterior_x_t1") => Some((2.993, Absolute(0.05))),
        (Preset::B, "exterior_y_t1") => Some((2.192, Absolute(0.05))),
        (Preset::B, "exterior_x_t2") => Some((4.146, Absolute(0.05))),
        (Preset::B, "exterior_y_t2") => Some((2.14, Absolute(0.05))),
        (Preset::B, "origin_x") => Some((-0.005, Absolute(0.05))),
        (Preset::B, "origin_y") => Some((2.326, Absolute(0.05))),
        (Preset::B, "delay_star_s0") => Some((0.227, Absolute(0.05))),
        (Preset::C, "reflected_fraction") => Some((0.616, Absolute(0.02))),
        (Preset::C, "transmission_angle_deg") => Some((64.7, Absolute(2.0))),
        (Preset::D, "transmitted_fraction") => Some((0.916, Absolute(0.02))),
        _ => None,
    }
}

/// Collects metrics against the reference table.
pub struct ReportBuilder {
    preset: Option<Preset>,
    tolerance_scale: f64,
    pub metrics: Vec<Metric>,
}

impl ReportBuilder {
    pub fn new(preset: Option<Preset>, tolerance_scale: f64) -> Self {
        ReportBuilder {
            preset,
            tolerance_scale,
            metrics: Vec::new(),
        }
    }

    pub fn push(&mut self, name: &str, value: Result<f64>) {
        let r = reference(self.preset, name);
        let (paper_value, tolerance) = match r {
            Some((p, t)) => (Some(p), Some(t.scaled(self.tolerance_scale))),
            None => (None, None),
        };
        let (value, error) = match value {
            Ok(v) => (Some(v), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let pass = match (paper_value, tolerance) {
            (Some(p), Some(t)) => Some(value.is_some_and(|v| v.is_finite() && t.accepts(v, p))),
            _ => None,
        };
        self.metrics.push(Metric {
            name: name.to_string(),
            value,
            paper_value,
            tolerance,
            pass,
            error,
        });
    }

    fn push_err(&mut self, names: &[&str], e: &Error) {
        for n in names {
            self.push(n, Err(Error::Domain(e.to_string())));
        }
    }
}

/// Units echoed into every summary.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Units {
    pub mass: f64,
    pub hbar: f64,
    pub time_unit_s0: f64,
}

/// `report.json` contents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    pub units: Units,
    pub counts_threshold: ModeCounts,
    pub counts_dynamics: ModeCounts,
    pub metrics: Vec<Metric>,
    pub passed: usize,
    pub failed: usize,
}

/// Detailed analysis products kept alongside the report.
#[derive(Default)]
pub struct Analyses {
    pub gh: Option<GhNumeric>,
    pub gh_theory: Option<GhTheory>,
    pub tunneling: Option<TunnelingImage>,
    pub fractions: Option<TransmissionSummary>,
    pub barrier1d: Option<Barrier1dStudy>,
    pub reconstruction: Option<Reconstruction>,
}

/// Run every analysis enabled in the configuration and grade it.
pub fn run_report(p: &Prepared, tolerance_scale: f64) -> Result<(Report, Analyses)> {
    let cfg = &p.config;
    let mut rb = ReportBuilder::new(cfg.preset, tolerance_scale);
    let mut an = Analyses::default();
    let c = p.thresholded.counts;
    rb.push("mode_count_total", Ok(c.total() as f64));
    rb.push("mode_count_bound", Ok(c.bound as f64));
    rb.push("mode_count_resonance", Ok(c.resonance() as f64));
    rb.push("mode_count_tunneling", Ok(c.tunneling as f64));

    if cfg.preset == Some(Preset::B) {
        match resonance_near(&cfg.potential, 120, 130.0, 113.0) {
            Ok(md) => {
                rb.push("resonance_re_k", Ok(md.k.re));
                rb.push("resonance_im_k", Ok(md.k.im));
            }
            Err(e) => rb.push_err(&["resonance_re_k", "resonance_im_k"], &e),
        }
        match reconstruction(p) {
            Ok(r) => {
                rb.push("fidelity", Ok(r.fidelity));
                rb.push("profile_error", Ok(r.profile_error));
                an.reconstruction = Some(r);
            }
            Err(e) => rb.push_err(&["fidelity", "profile_error"], &e),
        }
    }
    if cfg.toggles.gh {
        match gh_numeric(p) {
            Ok(g) => {
                rb.push("l_gh_numeric", Ok(g.fit.l_gh));
                rb.push("chi_r_factor", Ok(g.fit.chi_r_factor));
                rb.push("gh_delay_numeric_s0", Ok(g.fit.delay));
                an.gh = Some(g);
            }
            Err(e) => rb.push_err(&["l_gh_numeric", "chi_r_factor", "gh_delay_numeric_s0"], &e),
        }
        match gh_theory(&p.spec) {
            Ok(g) => {
                rb.push("l_gh_theory", Ok(g.l_gh));
                rb.push("gh_delay_theory_s0", Ok(g.delay_s0));
                an.gh_theory = Some(g);
            }
            Err(e) => rb.push_err(&["l_gh_theory", "gh_delay_theory_s0"], &e),
        }
    }
    if cfg.toggles.husimi {
        match tunneling_image(p) {
            Ok(ti) => {
                let d = &ti.direction;
                let missing = |what: &str| Error::Domain(format!("no {what} in the α grid"));
                rb.push(
                    "delta_crossing",
                    d.delta.ok_or_else(|| missing("Δ-curve crossing")),
                );
                rb.push("delta_predicted", Ok(ti.delta_predicted));
                rb.push(
                    "alpha_t_crossing",
                    d.alpha_crossing.ok_or_else(|| missing("Δ-curve crossing")),
                );
                rb.push("alpha_t_max_f", Ok(d.alpha_max_f));
                rb.push("husimi_edge_ratio", Ok(d.max_edge_ratio));
                for (i, s) in ti.exterior.iter().enumerate() {
                    rb.push(&format!("exterior_x_t{}", i + 1), Ok(s.position[0]));
                    rb.push(&format!("exterior_y_t{}", i + 1), Ok(s.position[1]));
                }
                match &ti.origin {
                    Some(o) => {
                        rb.push("origin_x", Ok(o.position_at_impact[0]));
                        rb.push("origin_y", Ok(o.position_at_impact[1]));
                        rb.push("delay_star_s0", Ok(o.delay));
                    }
                    None => rb.push_err(
                        &["origin_x", "origin_y", "delay_star_s0"],
                        &Error::Domain("exterior track unusable".into()),
                    ),
                }
                an.tunneling = Some(ti);
            }
            Err(e) => rb.push_err(
                &[
                    "delta_crossing",
                    "delta_predicted",
                    "alpha_t_crossing",
                    "alpha_t_max_f",
                    "origin_x",
                    "origin_y",
                    "delay_star_s0",
                ],
                &e,
            ),
        }
    }
    if cfg.toggles.fractions {
        match transmission_summary(&p.evolver, &p.spec) {
            Ok(s) => {
                rb.push("reflected_fraction", Ok(s.reflected));
                rb.push("transmitted_fraction", Ok(s.transmitted));
                rb.push("transmitted_flux", Ok(s.flux));
                rb.push("transmission_angle_deg", Ok(s.exit_angle_deg));
                an.fractions = Some(s);
            }
            Err(e) => rb.push_err(
                &[
                    "reflected_fraction",
                    "transmitted_fraction",
                    "transmission_angle_deg",
                ],
                &e,
            ),
        }
    }
    if cfg.toggles.barrier1d {
        match barrier1d_study(&cfg.barrier1d, &cfg.potential) {
            Ok(b) => {
                rb.push("rect_delay_t_phase", Ok(b.rect_delay_t_phase));
                rb.push("rect_delay_t_chord", Ok(b.rect_delay_t_chord));
                rb.push("rect_delay_r_phase", Ok(b.rect_delay_r_phase));
                rb.push("rect_delay_t_peak", Ok(b.rect_delay_t_peak));
                rb.push("rect_delay_t_peak_broad", Ok(b.rect_delay_t_peak_broad));
                rb.push("modified_delay_t_peak", Ok(b.modified_delay_t_peak));
                for (x, d) in &b.modified_delay_t_scan {
                    rb.push(&format!("modified_delay_t_peak_x{x}"), Ok(*d));
                }
                rb.push("modified_delay_r_phase", Ok(b.modified_delay_r_phase));
                rb.push("delay_ratio", Ok(b.ratio));
                rb.push("scaled_prediction", Ok(b.scaled_prediction));
                rb.push("step_phase_deviation_pi", Ok(b.step_phase_deviation));
                if let Some(o) = an.tunneling.as_ref().and_then(|t| t.origin.as_ref()) {
                    let star = o.delay * p.spec.s0();
                    rb.push("delay_star", Ok(star));
                    rb.push(
                        "scaled_prediction_minus_delay_star_s0",
                        Ok((b.scaled_prediction - star) / p.spec.s0()),
                    );
                }
                an.barrier1d = Some(b);
            }
            Err(e) => rb.push_err(
                &["rect_delay_t_phase", "modified_delay_t_peak", "delay_ratio"],
                &e,
            ),
        }
    }
    let passed = rb.metrics.iter().filter(|m| m.pass == Some(true)).count();
    let failed = rb.metrics.iter().filter(|m| m.pass == Some(false)).count();
    let report = Report {
        scenario: cfg.label(),
        units: Units {
            mass: cfg.potential.mass,
            hbar: cfg.potential.hbar,
            time_unit_s0: p.spec.s0(),
        },
        counts_threshold: p.thresholded.counts,
        counts_dynamics: p.expansion.counts,
        metrics: rb.metrics,
        passed,
        failed,
    };
    Ok((report, an))
}
