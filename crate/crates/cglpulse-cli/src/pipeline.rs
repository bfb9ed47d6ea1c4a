//! Experiment pipelines: pulse → constants → dynamics, with content-addressed caching.

use crate::config::{mode_of, DynMode, Experiment, RunConfig};
use crate::output::{num, opt, sha256_hex, CacheEntry, Recorder, Table};
use anyhow::{anyhow, bail, Context, Result};
use cglpulse::archive::{constants_from_json, pulse_from_json, to_json, ConstantsFile, PulseArchive};
use cglpulse::coherent::{coherent_structure_experiment, CoherentSettings, Triad};
use cglpulse::equilibria::{geometric_guess, lined_up_guesses, newton_fixed_point, run_cell, BasinSettings, ClassifierSettings, FixedPointRecord, Mode, NewtonSettings, SymmetricFamily, PINNED};
use cglpulse::fit::fit_interaction_constants;
use cglpulse::law::{InteractionLaw, TailForm, VALIDATED_DISTANCE};
use cglpulse::modes::compute_modes;
use cglpulse::ode::{integrate, Options, Scheme, Trajectory};
use cglpulse::pos::{first_return_sampled, phase_plane, pos_rhs, two_pulse_state, ReturnRecord, TwoPulseSystem};
use cglpulse::ps::PsSolver;
use cglpulse::pulse::solve_steady_pulse;
use cglpulse::radial::{PulseTables, DEFAULT_SAMPLES};
use cglpulse::tails::fit_tail_coefficients;
use serde::Serialize;
use std::path::Path;

/// `n` evenly spaced values from `a` to `b`; a single value is `a`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
    }
}

/// snake_case name of a serde-tagged enum value.
fn label<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

fn cache_key<T: Serialize>(artifact: &str, value: &T) -> Result<String> {
    let body = serde_json::to_string(&(artifact, cglpulse::archive::ARCHIVE_VERSION, value))?;
    Ok(sha256_hex(body.as_bytes()))
}

fn read_cached<T>(path: &Path, parse: impl Fn(&str) -> cglpulse::Result<T>) -> Option<T> {
    let text = std::fs::read_to_string(path).ok()?;
    parse(&text).ok()
}

fn store(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating cache directory {}", dir.display()))?;
    }
    cglpulse::archive::write_atomic(path, contents).with_context(|| format!("writing cache entry {}", path.display()))
}

/// Shared state of one run.
pub struct Run<'c> {
    pub cfg: &'c RunConfig,
    pub rec: Recorder,
    pulse_key: Option<String>,
}

impl<'c> Run<'c> {
    fn pulse(&mut self) -> Result<PulseArchive> {
        let cfg = self.cfg;
        let params = cfg.model()?;
        let key = cache_key("pulse", &(params, &cfg.pulse, &cfg.tails))?;
        let path = cfg.output.cache_dir.join(format!("pulse-{key}.json"));
        self.pulse_key = Some(key.clone());
        if let Some(a) = read_cached(&path, pulse_from_json) {
            self.rec.cache.push(CacheEntry { artifact: "pulse".into(), key, path, hit: true });
            self.record_pulse(&a);
            return Ok(a);
        }
        let archive = self.rec.stage("pulse", |rec| {
            let sol = solve_steady_pulse(&params, &cfg.pulse, None)?;
            let modes = compute_modes(&sol)?;
            let tails = match fit_tail_coefficients(&modes, &sol.dispersion, cfg.tails) {
                Ok(t) => Some(t),
                Err(e) => {
                    rec.residual("tail_fit_error", e.to_string());
                    None
                }
            };
            Ok(PulseArchive::build(&sol, &cfg.pulse, &modes, tails)?)
        })?;
        store(&path, &to_json(&archive)?)?;
        self.rec.cache.push(CacheEntry { artifact: "pulse".into(), key, path, hit: false });
        self.record_pulse(&archive);
        Ok(archive)
    }

    fn record_pulse(&mut self, a: &PulseArchive) {
        self.rec.residual("beta_imag", a.params.beta.im);
        self.rec.residual("lambda", [a.lambda.re, a.lambda.im]);
        self.rec.residual("pulse", &a.residuals);
    }

    fn constants_from(&mut self, archive: &PulseArchive, key: String) -> Result<ConstantsFile> {
        let cfg = self.cfg;
        let key = cache_key("constants", &(key, &cfg.fit))?;
        let path = cfg.output.cache_dir.join(format!("constants-{key}.json"));
        let file = match read_cached(&path, constants_from_json) {
            Some(c) => {
                self.rec.cache.push(CacheEntry { artifact: "constants".into(), key, path, hit: true });
                c
            }
            None => {
                let c = self.rec.stage("fit-constants", |_| {
                    let sol = archive.solution()?;
                    let tables = PulseTables::new(&archive.modes()?, DEFAULT_SAMPLES);
                    let c = fit_interaction_constants(&sol.params, &tables, &sol.dispersion, archive.tails.as_ref(), &cfg.fit)?;
                    Ok(ConstantsFile::new(sol.params, c, archive.tails.clone()))
                })?;
                store(&path, &to_json(&c)?)?;
                self.rec.cache.push(CacheEntry { artifact: "constants".into(), key, path, hit: false });
                c
            }
        };
        let c = &file.constants;
        self.rec.residual("constants_asymptotic", c.asymptotic.constants);
        self.rec.residual("constants_hankel", c.hankel.constants);
        self.rec.residual("fit_residual_translation", [c.asymptotic.residual_translation, c.hankel.residual_translation]);
        self.rec.residual("fit_residual_phase", [c.asymptotic.residual_phase, c.hankel.residual_phase]);
        if let Some(b) = c.b {
            self.rec.residual("b", [b.re, b.im]);
        }
        if let Some(m) = c.analytic_mismatch() {
            self.rec.residual("analytic_phase_mismatch", m);
        }
        Ok(file)
    }

    fn constants(&mut self, archive: &PulseArchive) -> Result<ConstantsFile> {
        let key = self.pulse_key.clone().ok_or_else(|| anyhow!("pulse stage did not run"))?;
        self.constants_from(archive, key)
    }

    /// N-pulse law with the configured tail form and distance floor.
    fn law(&self, c: &ConstantsFile) -> InteractionLaw {
        let mut law = c.constants.law(self.cfg.law.form);
        law.min_distance = self.cfg.law.min_distance;
        law
    }

    /// Reduced two-pulse system, always with the large-argument form.
    fn two_pulse_system(&self, c: &ConstantsFile) -> TwoPulseSystem {
        let mut s = TwoPulseSystem::new(c.constants.asymptotic.constants, c.constants.lambda);
        s.min_distance = self.cfg.law.min_distance;
        s
    }

    fn ps_solver<'t>(&self, archive: &PulseArchive, tables: &'t PulseTables) -> Result<PsSolver<'t>> {
        Ok(PsSolver::new(archive.params, archive.lambda.re, tables, self.cfg.ps.settings())?)
    }
}

/// Execute the experiment of `cfg`, writing outputs and the manifest.
pub fn run(cfg: &RunConfig, out_file: Option<&Path>) -> Result<crate::output::RunManifest> {
    let errors: Vec<String> = crate::config::validate(cfg)
        .into_iter()
        .filter(|d| d.level == crate::config::Level::Error)
        .map(|d| format!("{}: {}", d.key, d.message))
        .collect();
    if !errors.is_empty() {
        return Err(crate::config::ConfigInvalid(errors.join("; ")).into());
    }
    let exp = cfg.experiment.clone().ok_or_else(|| crate::config::ConfigInvalid("no [experiment.<kind>] block".into()))?;
    let rec = Recorder::new(&cfg.output.dir)?;
    let mut run = Run { cfg, rec, pulse_key: None };
    match execute(&mut run, &exp, out_file) {
        Ok(()) => run.rec.finish(exp.kind(), cfg),
        Err(e) => {
            run.rec.fail(exp.kind(), &e);
            Err(e)
        }
    }
}

fn execute(run: &mut Run, exp: &Experiment, out_file: Option<&Path>) -> Result<()> {
    match exp {
        Experiment::Pulse(_) => {
            let a = run.pulse()?;
            let path = run.rec.target("pulse.json", out_file);
            run.rec.write(&path, &(to_json(&a)? + "\n"))?;
            let p = run.rec.dir.join("profile.csv");
            run.rec.write_table(&p, profile_table(&a)?)
        }
        Experiment::Modes(_) => {
            let a = run.pulse()?;
            let path = run.rec.target("modes.csv", out_file);
            run.rec.write_table(&path, modes_table(&a)?)?;
            let p = run.rec.dir.join("pulse.json");
            run.rec.write(&p, &(to_json(&a)? + "\n"))
        }
        Experiment::FitConstants(f) => {
            let c = match &f.archive {
                Some(path) => {
                    let text = std::fs::read_to_string(path).with_context(|| format!("reading pulse archive {}", path.display()))?;
                    let a = pulse_from_json(&text)?;
                    run.record_pulse(&a);
                    let key = sha256_hex(text.as_bytes());
                    run.constants_from(&a, key)?
                }
                None => {
                    let a = run.pulse()?;
                    run.constants(&a)?
                }
            };
            let path = run.rec.target("constants.json", out_file);
            run.rec.write(&path, &(to_json(&c)? + "\n"))
        }
        Experiment::KernelTable(k) => {
            let a = run.pulse()?;
            let c = run.constants(&a)?;
            let law = run.law(&c);
            let ds = linspace(k.dmin, k.dmax, k.steps);
            let rows = run.rec.stage("kernel-table", |_| {
                let tables = PulseTables::new(&a.modes()?, DEFAULT_SAMPLES);
                Ok(cglpulse::fit::kernel_table(&a.params, &tables, &law, &ds, k.dx)?)
            })?;
            let worst = rows.iter().filter(|r| r.d >= VALIDATED_DISTANCE).map(|r| r.relative_error()).fold(0.0, f64::max);
            run.rec.residual("kernel_max_relative_error", worst);
            let mut t = Table::new([
                "d", "direct_re_g", "asympt_re_g", "direct_re_rx", "asympt_re_rx", "direct_re_ry", "asympt_re_ry", "direct_re_g_2", "asympt_re_g_2", "direct_re_rx_2",
                "asympt_re_rx_2", "direct_re_ry_2", "asympt_re_ry_2", "envelope_translation", "envelope_phase", "rel_error",
            ])?;
            for r in &rows {
                let mut row = vec![num(r.d)];
                for p in 0..2 {
                    for a in [2, 0, 1] {
                        row.push(num(r.direct[p][a]));
                        row.push(num(r.law[p][a]));
                    }
                }
                row.extend([num(r.envelope[0]), num(r.envelope[1]), num(r.relative_error())]);
                t.row(row)?;
            }
            let path = run.rec.target("kernel_table.csv", out_file);
            run.rec.write_table(&path, t)
        }
        Experiment::PhasePlane(p) => {
            let a = run.pulse()?;
            let c = run.constants(&a)?;
            let sys = run.two_pulse_system(&c);
            let (centres, saddles) = sys.equilibria(p.cells + 1);
            run.rec.residual("centres", &centres);
            run.rec.residual("saddles", &saddles);
            let err = run.cfg.integrator.err;
            let mut t = Table::new(["cell", "orbit", "rbar0", "rbar", "gbar", "x", "y", "hamiltonian"])?;
            let mut drift = 0.0f64;
            let mut skipped = Vec::new();
            let orbits = run.rec.stage("phase-plane", |_| {
                let mut all = Vec::new();
                for cell in 1..=p.cells {
                    let (c0, edge) = (centres[cell - 1], saddles[cell]);
                    let starts: Vec<f64> = (1..=p.orbits).map(|j| c0 + (edge - c0) * j as f64 / (p.orbits + 1) as f64).collect();
                    let results = cglpulse::par_map(&starts, |&r0| phase_plane(&sys, &[r0], p.samples, err).map(|mut v| v.remove(0)));
                    for (r0, res) in starts.into_iter().zip(results) {
                        all.push((cell, r0, res));
                    }
                }
                Ok(all)
            })?;
            for (orbit, (cell, r0, res)) in orbits.into_iter().enumerate() {
                let states = match res {
                    Ok(s) => s,
                    Err(e) => {
                        skipped.push(format!("cell {cell} rbar0 {r0}: {e}"));
                        continue;
                    }
                };
                let h0 = sys.hamiltonian(states[0]).ok();
                for s in &states {
                    let h = sys.hamiltonian(*s).ok();
                    if let (Some(h), Some(h0)) = (h, h0) {
                        drift = drift.max(((h - h0) / h0).abs());
                    }
                    t.row([cell.to_string(), orbit.to_string(), num(r0), num(s.rbar), num(s.gbar), num(s.rbar * s.gbar.cos()), num(s.rbar * s.gbar.sin()), opt(h)])?;
                }
            }
            run.rec.residual("hamiltonian_relative_drift", drift);
            if !skipped.is_empty() {
                run.rec.residual("skipped_orbits", &skipped);
            }
            let path = run.rec.target("phase_plane.csv", out_file);
            run.rec.write_table(&path, t)
        }
        Experiment::TwoPulse(tp) => {
            let a = run.pulse()?;
            let c = run.constants(&a)?;
            let y0 = two_pulse_state(tp.rbar0, tp.gbar0);
            let err = run.cfg.integrator.err;
            let t_cap = run.cfg.integrator.t_cap;
            let tables = PulseTables::new(&a.modes()?, DEFAULT_SAMPLES);
            let law = InteractionLaw { min_distance: run.cfg.law.min_distance, ..c.constants.law(TailForm::Asymptotic) };
            let mut ps = match tp.mode {
                DynMode::Ps => Some(run.ps_solver(&a, &tables)?),
                DynMode::Pos => None,
            };
            let rhs = |_: f64, y: &[f64]| -> cglpulse::Result<Vec<f64>> {
                match ps.as_mut() {
                    Some(ps) => ps.rhs(y),
                    None => pos_rhs(&law, y),
                }
            };
            let (record, traj) = run.rec.stage("two-pulse", |_| match tp.t_end {
                None => {
                    let (r, t) = first_return_sampled(rhs, &y0, |y| y[2] - y[5], |y| y[0] - y[3], Scheme::adaptive(err), t_cap, Some(tp.sample_dt))?;
                    Ok((Some(r), t))
                }
                Some(t_end) => {
                    let mut opts = Options::new(Scheme::adaptive(err), t_end);
                    opts.sample_dt = Some(tp.sample_dt);
                    Ok((None, integrate(rhs, 0.0, &y0, opts).into_result()?.trajectory))
                }
            })?;
            let path = run.rec.target("trajectory.csv", out_file);
            run.rec.write_table(&path, trajectory_table(&traj, 2)?)?;
            if let Some(r) = record {
                run.rec.residual("pi", r.pi);
                let p = run.rec.dir.join("return.json");
                run.rec.write_json(&p, &r)?;
            }
            Ok(())
        }
        Experiment::ReturnMap(rm) => {
            let a = run.pulse()?;
            let c = run.constants(&a)?;
            let sys = run.two_pulse_system(&c);
            let (centres, saddles) = sys.equilibria(2);
            run.rec.residual("centres", &centres);
            run.rec.residual("saddles", &saddles);
            run.rec.residual("hamiltonian_regime", sys.hamiltonian_regime());
            let starts = linspace(rm.rmin, rm.rmax, rm.steps);
            let err = run.cfg.integrator.err;
            let t_cap = run.cfg.integrator.t_cap;
            let tables = PulseTables::new(&a.modes()?, DEFAULT_SAMPLES);
            let settings = run.cfg.ps.settings();
            let records: Vec<(f64, cglpulse::Result<ReturnRecord>)> = run.rec.stage("return-map", |_| {
                let out = cglpulse::par_map(&starts, |&r0| -> cglpulse::Result<ReturnRecord> {
                    match rm.mode {
                        DynMode::Pos => sys.return_map(r0, Scheme::adaptive(err), t_cap),
                        DynMode::Ps => {
                            let mut ps = PsSolver::new(a.params, a.lambda.re, &tables, settings)?;
                            let y0 = two_pulse_state(r0, std::f64::consts::FRAC_PI_2);
                            first_return_sampled(|_, y| ps.rhs(y), &y0, |y| y[2] - y[5], |y| y[0] - y[3], Scheme::adaptive(err), t_cap, None).map(|(r, _)| r)
                        }
                    }
                });
                Ok(starts.iter().copied().zip(out).collect())
            })?;
            let mut t = Table::new(["rbar0", "period", "rbar_end", "pi", "half_time", "half_rbar", "status"])?;
            for (r0, res) in records {
                match res {
                    Ok(r) => t.row([num(r0), num(r.period), num(r.rbar_end), num(r.pi), opt(r.half_time), opt(r.half_rbar), "returned".into()])?,
                    Err(e) => t.row([num(r0), String::new(), String::new(), String::new(), String::new(), String::new(), e.to_string()])?,
                }
            }
            let path = run.rec.target("return_map.csv", out_file);
            run.rec.write_table(&path, t)
        }
        Experiment::PsRun(p) => {
            let a = run.pulse()?;
            let tables = PulseTables::new(&a.modes()?, DEFAULT_SAMPLES);
            let mut ps = run.ps_solver(&a, &tables)?;
            let err = run.cfg.integrator.err;
            let n = p.state.len() / 3;
            let mut marks: Vec<f64> = p.snapshots.clone();
            marks.push(p.t_end);
            marks.sort_by(f64::total_cmp);
            marks.dedup();
            let mut traj = Trajectory::default();
            let mut y = p.state.clone();
            let mut t0 = 0.0;
            let mut snaps = Vec::new();
            run.rec.stage("ps-run", |_| {
                for &mark in &marks {
                    if mark > t0 {
                        let mut opts = Options::new(Scheme::adaptive(err), mark - t0);
                        opts.sample_dt = Some(p.sample_dt);
                        let sol = integrate(|_, s| ps.rhs(s), 0.0, &y, opts).into_result()?;
                        let skip = usize::from(!traj.t.is_empty());
                        for (t, s) in sol.trajectory.t.iter().zip(&sol.trajectory.y).skip(skip) {
                            traj.t.push(t0 + t);
                            traj.y.push(s.clone());
                        }
                        y = sol.final_state().1.to_vec();
                        t0 = mark;
                    } else if traj.t.is_empty() {
                        traj.t.push(0.0);
                        traj.y.push(y.clone());
                    }
                    if p.snapshots.iter().any(|&s| s == mark) {
                        snaps.push((mark, y.clone(), ps.evaluate(&y)?));
                    }
                }
                Ok(())
            })?;
            let path = run.rec.target("trajectory.csv", out_file);
            run.rec.write_table(&path, trajectory_table(&traj, n)?)?;
            run.rec.residual("ps_evaluations", ps.evaluations);
            for (k, (t, state, res)) in snaps.into_iter().enumerate() {
                let spec = res.w.spec;
                let mut tab = Table::new(["x", "y", "re_w", "im_w", "re_u", "im_u"])?;
                for i in 0..spec.points() {
                    for j in 0..spec.points() {
                        let idx = spec.index(i, j);
                        let (w, u) = (res.w.values[idx], res.u.values[idx]);
                        tab.row([num(spec.coord(0, i)), num(spec.coord(1, j)), num(w.re), num(w.im), num(u.re), num(u.im)])?;
                    }
                }
                let csv_path = run.rec.dir.join(format!("snapshot_{k:03}.csv"));
                run.rec.write_table(&csv_path, tab)?;
                let meta = SnapshotMeta { t, state, grid: spec, x_dot: res.x_dot, max_abs_w: res.w.max_abs(), gmres: res.gmres, orthogonality: res.orthogonality, condition: res.condition };
                let json_path = run.rec.dir.join(format!("snapshot_{k:03}.json"));
                run.rec.write_json(&json_path, &meta)?;
            }
            Ok(())
        }
        Experiment::FixedPoints(f) => {
            let a = run.pulse()?;
            let c = run.constants(&a)?;
            let law = run.law(&c);
            let family = SymmetricFamily::new(f.n)?;
            let guesses = if !f.guesses.is_empty() {
                f.guesses.clone()
            } else if f.lined_up {
                lined_up_guesses()
            } else {
                vec![geometric_guess(f.n)?]
            };
            let tables = PulseTables::new(&a.modes()?, DEFAULT_SAMPLES);
            let mode = mode_of(f.mode);
            let entries = run.rec.stage("fixed-points", |run_rec| {
                let mut out = Vec::new();
                for g in &guesses {
                    let pos = newton_fixed_point(family, Mode::Pos, g, |s| pos_rhs(&law, s), &NewtonSettings::default());
                    let entry = match (mode, pos) {
                        (_, Err(e)) => FixedPointEntry { guess: g.clone(), pos_seed: None, record: None, error: Some(e.to_string()) },
                        (Mode::Pos, Ok(r)) => FixedPointEntry { guess: g.clone(), pos_seed: None, record: Some(r), error: None },
                        (Mode::Ps, Ok(seed)) => {
                            let mut ps = PsSolver::new(a.params, a.lambda.re, &tables, run.cfg.ps.settings())?;
                            match newton_fixed_point(family, Mode::Ps, &seed.values, |s| ps.rhs(s), &NewtonSettings::default()) {
                                Ok(r) => FixedPointEntry { guess: g.clone(), pos_seed: Some(seed), record: Some(r), error: None },
                                Err(e) => FixedPointEntry { guess: g.clone(), pos_seed: Some(seed), record: None, error: Some(e.to_string()) },
                            }
                        }
                    };
                    out.push(entry);
                }
                run_rec.residual("converged", out.iter().filter(|e| e.record.is_some()).count());
                Ok(out)
            })?;
            if entries.iter().all(|e| e.record.is_none()) {
                bail!("no guess converged: {}", entries.iter().filter_map(|e| e.error.clone()).collect::<Vec<_>>().join("; "));
            }
            let path = run.rec.target("fixed_points.json", out_file);
            run.rec.write_json(&path, &FixedPointsFile { n: f.n, mode, entries })
        }
        Experiment::Basin(b) => {
            let a = run.pulse()?;
            let c = run.constants(&a)?;
            let law = run.law(&c);
            let family = SymmetricFamily::new(b.n)?;
            let mode = mode_of(b.mode);
            let tables = PulseTables::new(&a.modes()?, DEFAULT_SAMPLES);
            let ps_settings = run.cfg.ps.settings();
            let find = |n: usize| -> Result<FixedPointRecord> {
                let fam = SymmetricFamily::new(n)?;
                let seed = newton_fixed_point(fam, Mode::Pos, &geometric_guess(n)?, |s| pos_rhs(&law, s), &NewtonSettings::default())?;
                Ok(match mode {
                    Mode::Pos => seed,
                    Mode::Ps => {
                        let mut ps = PsSolver::new(a.params, a.lambda.re, &tables, ps_settings)?;
                        newton_fixed_point(fam, Mode::Ps, &seed.values, |s| ps.rhs(s), &NewtonSettings::default())?
                    }
                })
            };
            let (own, triad) = run.rec.stage("basin-targets", |_| {
                let own = find(b.n)?;
                let triad = if b.n == 3 { own.clone() } else { find(3)? };
                Ok((own, triad))
            })?;
            run.rec.residual("target_fixed_point", &own);
            let xs = linspace(b.window[0], b.window[1], b.grid[0]);
            let ys = linspace(b.window[2], b.window[3], b.grid[1]);
            let starts: Vec<Vec<f64>> = ys
                .iter()
                .flat_map(|&dy| xs.iter().map(move |&dx| (dx, dy)))
                .map(|(dx, dy)| {
                    let mut u = own.values.clone();
                    u[0] = PINNED[0] + dx;
                    u[1] = PINNED[1] + dy;
                    u[2] = PINNED[2] + b.g_offset;
                    u
                })
                .collect();
            let settings = BasinSettings { t_end: b.t_end, err: b.err, sample_dt: BasinSettings::default().sample_dt, classifier: ClassifierSettings { tol: b.tol, ..Default::default() } };
            let cells = run.rec.stage("basin", |_| {
                Ok(cglpulse::par_map(&starts, |u| -> cglpulse::Result<cglpulse::equilibria::BasinCell> {
                    let cell = match mode {
                        Mode::Pos => run_cell(family, u, |_, s| pos_rhs(&law, s), Some(&own), Some(&triad), &settings).0,
                        Mode::Ps => {
                            let mut ps = PsSolver::new(a.params, a.lambda.re, &tables, ps_settings)?;
                            run_cell(family, u, |_, s| ps.rhs(s), Some(&own), Some(&triad), &settings).0
                        }
                    };
                    Ok(cell)
                }))
            })?;
            let mut t = Table::new(["drx", "dry", "dg", "outcome_code", "t_converge", "outcome", "t_final"])?;
            for cell in cells {
                let cell = cell?;
                let o = cell.offsets;
                t.row([num(o[0]), num(o[1]), num(o[2]), cell.outcome.code().to_string(), opt(cell.t_converge), label(&cell.outcome), num(cell.t_final)])?;
            }
            let path = run.rec.target("basin.csv", out_file);
            run.rec.write_table(&path, t)
        }
        Experiment::Coherent(co) => {
            let a = run.pulse()?;
            let c = run.constants(&a)?;
            let law = run.law(&c);
            let fam = SymmetricFamily::new(3)?;
            let rec = newton_fixed_point(fam, Mode::Pos, &geometric_guess(3)?, |s| pos_rhs(&law, s), &NewtonSettings::default())?;
            run.rec.residual("triad", &rec);
            let triad = Triad::from_record(&rec)?;
            let ss = linspace(co.s_range.0, co.s_range.1, co.s_range.2);
            let ths = linspace(co.theta_range.0, co.theta_range.1, co.theta_range.2);
            let cells: Vec<(f64, f64)> = ths.iter().flat_map(|&th| ss.iter().map(move |&s| (s, th))).collect();
            let settings = CoherentSettings { t_end: co.t_end, dt: co.dt, ..Default::default() };
            let runs = run.rec.stage("coherent", |_| Ok(cglpulse::par_map(&cells, |&(s, th)| coherent_structure_experiment(&law, &triad, s, th, &settings))))?;
            let mut t = Table::new(["s", "theta1", "outcome_code", "outcome", "annihilated", "final_lead_separation"])?;
            for (k, r) in runs.into_iter().enumerate() {
                let r = r?;
                t.row([num(r.s), num(r.theta1), r.outcome.code().to_string(), label(&r.outcome), r.annihilated.to_string(), opt(r.final_lead_separation())])?;
                if co.trajectories {
                    let traj = Trajectory { t: r.t.clone(), y: r.states.clone() };
                    let p = run.rec.dir.join(format!("coherent_{k:04}.csv"));
                    run.rec.write_table(&p, trajectory_table(&traj, 6)?)?;
                }
            }
            let path = run.rec.target("outcome_grid.csv", out_file);
            run.rec.write_table(&path, t)
        }
    }
}

#[derive(Serialize)]
struct SnapshotMeta {
    t: f64,
    state: Vec<f64>,
    grid: cglpulse::grid::GridSpec,
    x_dot: Vec<f64>,
    max_abs_w: f64,
    gmres: cglpulse::gmres::GmresReport,
    orthogonality: Vec<f64>,
    condition: f64,
}

#[derive(Serialize)]
struct FixedPointEntry {
    guess: Vec<f64>,
    /// Projected-system root used to start the corrected solve.
    pos_seed: Option<FixedPointRecord>,
    record: Option<FixedPointRecord>,
    error: Option<String>,
}

#[derive(Serialize)]
struct FixedPointsFile {
    n: usize,
    mode: Mode,
    entries: Vec<FixedPointEntry>,
}

fn profile_table(a: &PulseArchive) -> Result<Table> {
    let mut t = Table::new(["r", "re_v", "im_v", "abs_v"])?;
    for (r, v) in a.nodes.iter().zip(&a.v) {
        t.row([num(*r), num(v.re), num(v.im), num(v.norm())])?;
    }
    Ok(t)
}

fn modes_table(a: &PulseArchive) -> Result<Table> {
    let mut t = Table::new(["r", "re_v", "im_v", "re_phi_g", "im_phi_g", "re_phi_r", "im_phi_r", "re_psi_g", "im_psi_g", "re_psi_r", "im_psi_r"])?;
    for k in 0..a.nodes.len() {
        let mut row = vec![num(a.nodes[k])];
        for z in [a.v[k], a.phi_g[k], a.phi_r[k], a.psi_g[k], a.psi_r[k]] {
            row.push(num(z.re));
            row.push(num(z.im));
        }
        t.row(row)?;
    }
    Ok(t)
}

/// Columns t, the 3N state, then (r_kˣ − r_Nˣ, r_kʸ − r_Nʸ, g_k − g_N) for k < N.
pub fn trajectory_table(traj: &Trajectory, n: usize) -> Result<Table> {
    let mut header = vec!["t".to_string()];
    for k in 1..=n {
        header.extend([format!("x{k}"), format!("y{k}"), format!("g{k}")]);
    }
    for k in 1..n {
        header.extend([format!("dx{k}{n}"), format!("dy{k}{n}"), format!("dg{k}{n}")]);
    }
    let mut t = Table::new(&header)?;
    for (time, s) in traj.t.iter().zip(&traj.y) {
        let mut row = vec![num(*time)];
        row.extend(s.iter().map(|v| num(*v)));
        let last = 3 * (n - 1);
        for k in 0..n - 1 {
            for c in 0..3 {
                row.push(num(s[3 * k + c] - s[last + c]));
            }
        }
        t.row(row)?;
    }
    Ok(t)
}
