use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use curvewave::barrier1d::{Barrier1d, RectBarrier, TransmittedPacket, Window1d};
use curvewave::corefn::{bessel_j_eval, bessel_k_eval, hankel1_eval};
use curvewave::field::{frame_at, CartesianGrid};
use curvewave::observables::{average_position, Region};
use curvewave::scenario::{
    barrier1d_study, run_report, Analyses, Prepared, Preset, Report, ReportBuilder, ScenarioConfig,
    Toggles, Units,
};
use curvewave::spectrum::{ModeTable, PotentialSpec};
use curvewave::{Error, Result};

#[derive(Parser)]
#[command(
    name = "curvewave",
    version,
    about = "Wave packets in a circular step potential"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Clone)]
struct Common {
    /// Named packet: A, B, C or D.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// INI scenario file (applied on top of the preset given inside it).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Solve the mode table when none is found.
    #[arg(long, global = true)]
    solve: bool,
    /// Mode table to read (default `<out>/modes.txt`).
    #[arg(long, global = true)]
    modes: Option<PathBuf>,
    /// Multiply every report tolerance.
    #[arg(long, global = true, default_value_t = 1.0)]
    tolerance_scale: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Solve and write the mode table.
    Modes(ModesArgs),
    /// Expansion coefficients of the packet.
    Expand,
    /// Field frames at the configured times.
    Evolve {
        /// Override the frame times (units of s0 after launch).
        #[arg(long, value_delimiter = ',')]
        times: Option<Vec<f64>>,
    },
    /// Average-position trajectory and Goos-Hänchen fit.
    Gh,
    /// Emission Husimi scan, tunneling direction and image distance.
    Husimi,
    /// One-dimensional barrier phases, delays and packets.
    Tunnel1d(Tunnel1dArgs),
    /// Every enabled analysis graded against the reference values.
    Report,
    #[command(hide = true)]
    Corefn(CorefnArgs),
}

#[derive(Args)]
struct ModesArgs {
    /// Single angular number (default: the packet's window).
    #[arg(long)]
    m: Option<u32>,
    /// Upper angular number when `--m` starts a range.
    #[arg(long)]
    m_max: Option<u32>,
    /// Largest Re k (default: the packet's window).
    #[arg(long)]
    kmax: Option<f64>,
}

#[derive(Args)]
struct Tunnel1dArgs {
    #[arg(long)]
    v_max: Option<f64>,
    #[arg(long)]
    v_min: Option<f64>,
    #[arg(long)]
    x_a: Option<f64>,
    #[arg(long)]
    x_b: Option<f64>,
    /// Centre energy of the rectangular-barrier packet.
    #[arg(long)]
    e0: Option<f64>,
    #[arg(long)]
    sigma_k: Option<f64>,
    /// Exit position of the modified barrier.
    #[arg(long)]
    exit: Option<f64>,
    /// Snapshot times of the transmitted packet.
    #[arg(long, value_delimiter = ',', default_value = "0,0.05,0.1,0.2")]
    times: Vec<f64>,
}

#[derive(Args)]
struct CorefnArgs {
    /// j, h or k.
    func: String,
    m: u32,
    re: f64,
    #[arg(default_value_t = 0.0)]
    im: f64,
}

/// Files written by the current run, removed again on failure.
struct Artifacts {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Artifacts {
    fn new(dir: &Path) -> Self {
        Artifacts {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        }
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::create_dir_all(&self.dir)?;
        let path = self.dir.join(name);
        self.written.push(path.clone());
        fs::write(&path, bytes)?;
        Ok(())
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }

    fn csv(
        &mut self,
        name: &str,
        header: &str,
        rows: impl IntoIterator<Item = Vec<f64>>,
    ) -> Result<()> {
        let mut s = String::from(header);
        s.push('\n');
        for r in rows {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:.12e}")).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        self.write(name, s.as_bytes())
    }

    fn discard(&self) {
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
    }
}

fn load_config(c: &Common) -> Result<ScenarioConfig> {
    let cfg = match &c.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            let cfg = ScenarioConfig::from_ini(&text)?;
            if let Some(p) = &c.preset {
                let p: Preset = p.parse()?;
                if cfg.preset != Some(p) {
                    return Err(Error::Config(format!(
                        "--preset {p} disagrees with the config file"
                    )));
                }
            }
            cfg
        }
        None => match &c.preset {
            Some(p) => ScenarioConfig::preset(p.parse()?),
            None => return Err(Error::Config("pass --preset or --config".into())),
        },
    };
    if !(c.tolerance_scale > 0.0) {
        return Err(Error::Config("--tolerance-scale must be positive".into()));
    }
    Ok(cfg)
}

fn load_table(c: &Common, cfg: &ScenarioConfig) -> Result<Option<ModeTable>> {
    let path = c.modes.clone().unwrap_or_else(|| c.out.join("modes.txt"));
    if path.exists() {
        let table = ModeTable::parse(&fs::read_to_string(&path)?)?;
        if table.potential != cfg.potential {
            return Err(Error::Config(format!(
                "{} was solved for a different potential",
                path.display()
            )));
        }
        return Ok(Some(table));
    }
    if c.solve {
        Ok(None)
    } else {
        Err(Error::Config(format!(
            "mode table {} not found; run `modes` first or pass --solve",
            path.display()
        )))
    }
}

fn prepare(c: &Common, cfg: &ScenarioConfig) -> Result<Prepared> {
    let table = load_table(c, cfg)?;
    Prepared::new(cfg, table)
}

fn with_toggles(cfg: &ScenarioConfig, t: Toggles) -> ScenarioConfig {
    let mut c = cfg.clone();
    c.toggles = t;
    c
}

fn run(cli: &Cli, art: &mut Artifacts) -> Result<()> {
    let c = &cli.common;
    match &cli.command {
        Command::Corefn(a) => {
            let z = Complex64::new(a.re, a.im);
            let ev = match a.func.as_str() {
                "j" => bessel_j_eval(a.m, z)?,
                "h" => hankel1_eval(a.m, z)?,
                "k" => bessel_k_eval(a.m, a.re)?,
                other => return Err(Error::Domain(format!("unknown function '{other}'"))),
            };
            let v = json!({
                "func": a.func, "m": a.m, "z": [z.re, z.im],
                "value": [ev.value.re, ev.value.im], "derivative": [ev.derivative.re, ev.derivative.im],
            });
            println!(
                "{}",
                serde_json::to_string(&v).map_err(|e| Error::Parse(e.to_string()))?
            );
            Ok(())
        }
        Command::Modes(a) => {
            let pot = match (&c.preset, &c.config) {
                (None, None) => PotentialSpec::default(),
                _ => load_config(c)?.potential,
            };
            let (ms, k_max) = match a.m {
                Some(m) => (m..=a.m_max.unwrap_or(m), a.kmax.unwrap_or(pot.k_v() + 30.0)),
                None => {
                    let cfg = load_config(c)?;
                    let w = curvewave::packet::initial_window(&cfg.packet()?, cfg.threshold)?;
                    (w.m_lo..=w.m_hi, a.kmax.unwrap_or(w.k_max))
                }
            };
            if ms.is_empty() {
                return Err(Error::Config("--m-max is below --m".into()));
            }
            let (table, diag) = ModeTable::solve(&pot, ms.clone(), k_max)?;
            art.write("modes.txt", table.to_text().as_bytes())?;
            let mut by_class = std::collections::BTreeMap::new();
            for md in &table.modes {
                *by_class.entry(md.class.as_str()).or_insert(0usize) += 1;
            }
            art.json(
                "modes_summary.json",
                &json!({
                    "m_range": [ms.start(), ms.end()], "k_max": k_max, "modes": table.modes.len(),
                    "by_class": by_class, "seed_failures": diag.len(),
                    "units": {"mass": pot.mass, "hbar": pot.hbar},
                }),
            )
        }
        Command::Expand => {
            let cfg = load_config(c)?;
            let p = prepare(c, &cfg)?;
            art.csv(
                "coefficients.csv",
                "m,n,ell,class,re_k,im_k,re_coeff,im_coeff",
                p.set
                    .entries
                    .iter()
                    .filter(|e| e.coeff.norm() >= cfg.threshold)
                    .map(|e| {
                        let class = match e.mode.class {
                            curvewave::spectrum::ModeClass::Bound => 0.0,
                            curvewave::spectrum::ModeClass::Tunneling => 1.0,
                            curvewave::spectrum::ModeClass::Leaky => 2.0,
                        };
                        vec![
                            e.mode.m as f64,
                            e.mode.n as f64,
                            e.ell as f64,
                            class,
                            e.mode.k.re,
                            e.mode.k.im,
                            e.coeff.re,
                            e.coeff.im,
                        ]
                    }),
            )?;
            art.json(
                "expansion.json",
                &json!({
                    "scenario": cfg.label(), "threshold": cfg.threshold, "keep": cfg.keep,
                    "counts_threshold": p.thresholded.counts, "counts_dynamics": p.expansion.counts,
                    "class_codes": {"bound": 0, "tunneling": 1, "leaky": 2},
                    "units": units(&p),
                }),
            )
        }
        Command::Evolve { times } => {
            let cfg = load_config(c)?;
            let p = prepare(c, &cfg)?;
            let grid = CartesianGrid::square(cfg.export_n, cfg.export_half);
            let radius = cfg.potential.radius;
            let mut summary = Vec::new();
            for &t in times.as_ref().unwrap_or(&cfg.times) {
                let frame = frame_at(&p.evolver, &p.spec, t, cfg.frame)?;
                let mut buf = Vec::new();
                frame.write_dump(&mut buf, &grid)?;
                art.write(&format!("frame_{t:.3}.bin"), &buf)?;
                let whole = frame
                    .sums
                    .probability(curvewave::field::Annulus::whole(cfg.r_max));
                let inside = frame.sums.probability(curvewave::field::Annulus {
                    r_lo: 0.0,
                    r_hi: radius,
                });
                summary.push(json!({
                    "t": t, "probability_whole": whole, "probability_interior": inside,
                    "centroid_interior": average_position(&frame.sums, Region::interior(radius)).ok(),
                }));
            }
            art.json(
                "evolve.json",
                &json!({"scenario": cfg.label(), "units": units(&p), "frames": summary}),
            )
        }
        Command::Gh => {
            let cfg = with_toggles(
                &load_config(c)?,
                Toggles {
                    gh: true,
                    husimi: false,
                    barrier1d: false,
                    fractions: false,
                },
            );
            let p = prepare(c, &cfg)?;
            let (report, an) = run_report(&p, c.tolerance_scale)?;
            write_analyses(art, &report, &an)
        }
        Command::Husimi => {
            let cfg = with_toggles(
                &load_config(c)?,
                Toggles {
                    gh: false,
                    husimi: true,
                    barrier1d: false,
                    fractions: false,
                },
            );
            let p = prepare(c, &cfg)?;
            let (report, an) = run_report(&p, c.tolerance_scale)?;
            write_analyses(art, &report, &an)
        }
        Command::Tunnel1d(a) => {
            let mut cfg = match (&c.preset, &c.config) {
                (None, None) => ScenarioConfig::preset(Preset::B),
                _ => load_config(c)?,
            };
            let b = &mut cfg.barrier1d;
            let r = b.rect;
            b.rect = RectBarrier::new(
                a.v_max.unwrap_or(r.v_max),
                a.v_min.unwrap_or(r.v_min),
                a.x_a.unwrap_or(r.x_a),
                a.x_b.unwrap_or(r.x_b),
            )?;
            if let Some(e) = a.e0 {
                b.narrow.0 = e;
            }
            if let Some(s) = a.sigma_k {
                b.narrow.1 = s;
            }
            if let Some(x) = a.exit {
                b.modified_exit = x;
            }
            let study = barrier1d_study(&cfg.barrier1d, &cfg.potential)?;
            let mut rb = ReportBuilder::new(None, c.tolerance_scale);
            for (name, v) in [
                ("rect_delay_t_phase", study.rect_delay_t_phase),
                ("rect_delay_t_chord", study.rect_delay_t_chord),
                ("rect_delay_r_phase", study.rect_delay_r_phase),
                ("rect_delay_t_peak", study.rect_delay_t_peak),
                ("rect_delay_t_peak_broad", study.rect_delay_t_peak_broad),
                ("modified_delay_t_peak", study.modified_delay_t_peak),
                ("modified_delay_r_phase", study.modified_delay_r_phase),
                ("delay_ratio", study.ratio),
                ("scaled_prediction", study.scaled_prediction),
                ("step_phase_deviation_pi", study.step_phase_deviation),
            ] {
                rb.push(name, Ok(v));
            }
            let (e0, sig) = cfg.barrier1d.narrow;
            let packet = TransmittedPacket::new(
                Window1d {
                    k0: (2.0 * e0).sqrt(),
                    sigma_k: sig,
                },
                Barrier1d::Rect(cfg.barrier1d.rect),
                cfg.barrier1d.packet_nodes,
            )?;
            let x_b = cfg.barrier1d.rect.x_b;
            for &t in &a.times {
                let rows = (0..=600)
                    .map(|i| {
                        let x = x_b + 0.01 * i as f64;
                        Ok(vec![x, packet.at(x, t)?.norm_sqr()])
                    })
                    .collect::<Result<Vec<_>>>()?;
                art.csv(&format!("packet1d_{t:.3}.csv"), "x,prob", rows)?;
            }
            write_barrier_curves(art, &study)?;
            let passed = rb.metrics.iter().filter(|m| m.pass == Some(true)).count();
            let failed = rb.metrics.iter().filter(|m| m.pass == Some(false)).count();
            art.json(
                "report.json",
                &Report {
                    scenario: "barrier1d".into(),
                    units: Units {
                        mass: cfg.potential.mass,
                        hbar: cfg.potential.hbar,
                        time_unit_s0: 1.0,
                    },
                    counts_threshold: Default::default(),
                    counts_dynamics: Default::default(),
                    metrics: rb.metrics,
                    passed,
                    failed,
                },
            )
        }
        Command::Report => {
            let cfg = load_config(c)?;
            let p = prepare(c, &cfg)?;
            let (report, an) = run_report(&p, c.tolerance_scale)?;
            write_analyses(art, &report, &an)
        }
    }
}

fn units(p: &Prepared) -> Units {
    Units {
        mass: p.spec.potential.mass,
        hbar: p.spec.potential.hbar,
        time_unit_s0: p.spec.s0(),
    }
}

fn write_barrier_curves(
    art: &mut Artifacts,
    b: &curvewave::scenario::Barrier1dStudy,
) -> Result<()> {
    art.csv(
        "phase_T.csv",
        "E,phase,modulus",
        b.phase_t.iter().map(|p| vec![p.e, p.phase, p.modulus]),
    )?;
    art.csv(
        "phase_R.csv",
        "E,phase,modulus",
        b.phase_r.iter().map(|p| vec![p.e, p.phase, p.modulus]),
    )
}

fn write_analyses(art: &mut Artifacts, report: &Report, an: &Analyses) -> Result<()> {
    if let Some(g) = &an.gh {
        let mut s = String::from("t,x,y,mask\n");
        for smp in g.pre.iter().chain(&g.post) {
            s.push_str(&format!(
                "{:.6},{:.12e},{:.12e},{}\n",
                smp.t, smp.position[0], smp.position[1], smp.mask
            ));
        }
        art.write("gh_fit.csv", s.as_bytes())?;
    }
    if let Some(ti) = &an.tunneling {
        let d = &ti.direction;
        art.csv(
            "f_alpha.csv",
            "alpha,f",
            d.f_curve.iter().map(|(a, f)| vec![*a, *f]),
        )?;
        art.csv(
            "delta_alpha.csv",
            "alpha,delta_t1,delta_t2",
            d.delta_curves.iter().map(|(a, x, y)| vec![*a, *x, *y]),
        )?;
        let mut rows = Vec::new();
        for (fr, t) in ti.frames.iter().zip([ti.exterior[0].t, ti.exterior[1].t]) {
            for (i, dd) in fr.d.iter().enumerate() {
                for (j, hh) in fr.h.iter().enumerate() {
                    rows.push(vec![t, *dd, *hh, fr.values[i * fr.h.len() + j]]);
                }
            }
        }
        art.csv(&format!("husimi_{:.4}.csv", ti.alpha_t), "t,D,h,H", rows)?;
    }
    if let Some(b) = &an.barrier1d {
        write_barrier_curves(art, b)?;
    }
    let pick = |name: &str| {
        report
            .metrics
            .iter()
            .find(|m| m.name == name)
            .and_then(|m| m.value)
    };
    art.json(
        "observables.json",
        &json!({
            "scenario": report.scenario,
            "units": report.units,
            "l_gh": pick("l_gh_numeric"),
            "chi_r_factor": pick("chi_r_factor"),
            "l_gh_theory": pick("l_gh_theory"),
            "alpha_t": pick("alpha_t_crossing"),
            "alpha_t_max_f": pick("alpha_t_max_f"),
            "delta": pick("delta_crossing"),
            "delta_predicted": pick("delta_predicted"),
            "delay_star_s0": pick("delay_star_s0"),
            "reflected_fraction": pick("reflected_fraction"),
            "transmitted_fraction": pick("transmitted_fraction"),
            "transmission_angle_deg": pick("transmission_angle_deg"),
            "gh_fit": an.gh.as_ref().map(|g| g.fit),
            "emission_origin": an.tunneling.as_ref().and_then(|t| t.origin),
            "fractions": an.fractions,
        }),
    )?;
    art.json("report.json", report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.common.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
        {
            eprintln!("{}", json!({"error": "config", "message": e.to_string()}));
            return ExitCode::from(2);
        }
    }
    let mut art = Artifacts::new(&cli.common.out);
    match run(&cli, &mut art) {
        Ok(()) => {
            for p in &art.written {
                eprintln!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            art.discard();
            let msg = json!({"error": e.kind(), "message": e.to_string()});
            let _ = writeln!(std::io::stdout(), "{msg}");
            ExitCode::from(2)
        }
    }
}
