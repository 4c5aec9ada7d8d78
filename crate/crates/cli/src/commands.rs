use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use fixen::boundary::{boundary_sweep, BoundaryDatum};
use fixen::domain::{random_unit, ConvexDomain};
use fixen::dynamics::{integrate_flow, sphere_momentum, PhaseState};
use fixen::fields::FieldModel;
use fixen::identities::{self as id, CheckResult, UniquenessOptions};
use fixen::inverse::{reconstruct_least_squares, BumpFamily, FamilyBump, OptimizerOptions, ParametricFamily};
use fixen::io::{self, Sidecar};
use fixen::linalg::Vec3;
use fixen::scattering::{boundary_datum_to_scattering, sample_m_e, scattering_sweep, scattering_to_boundary};
use fixen::thresholds::{compute_constants, energy_ladder, ThresholdInputs};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::{Cli, CliError, Command, Direction};

struct Ctx {
    cfg: RunConfig,
    base: PathBuf,
    hash: String,
    model: FieldModel<f64>,
    domain: ConvexDomain<f64>,
    out: PathBuf,
}

impl Ctx {
    fn create(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        let path = self.out.join(name);
        File::create(&path)
            .map(BufWriter::new)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    fn threshold(&self) -> f64 {
        ThresholdInputs::new(&self.model, &self.domain, self.cfg.norm_resolution()).threshold(1e-4)
    }

    /// Configured energy, or `E*`; energies below `E*` need the override flag.
    fn energy(&self) -> Result<f64, CliError> {
        let e_star = self.threshold();
        match self.cfg.energy {
            None => Ok(e_star),
            Some(e) if e >= e_star || self.cfg.allow_below_threshold => Ok(e),
            Some(e) => Err(CliError::Config(format!(
                "energy {e} is below the threshold {e_star}; set allow_below_threshold to proceed"
            ))),
        }
    }

    fn sidecar(&self, name: &str, kind: &str, rows: usize, gauge: Option<&str>, details: serde_json::Value) -> Result<(), CliError> {
        let s = Sidecar { config_hash: self.hash.clone(), kind: kind.into(), rows, gauge: gauge.map(String::from), details };
        io::write_json(self.create(name)?, &s)?;
        Ok(())
    }

    fn report<S: Serialize>(&self, name: &str, value: &S) -> Result<(), CliError> {
        io::write_json(self.create(name)?, value)?;
        Ok(())
    }

    fn tolerances(&self) -> serde_json::Value {
        serde_json::to_value(&self.cfg.tolerances).expect("tolerances serialise")
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config("--config is required".into()))?;
    let (mut cfg, base) = RunConfig::load(path)?;
    if let Some(e) = cli.energy {
        cfg.energy = Some(e);
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = Some(j);
    }
    cfg.validate()?;
    if let Some(j) = cfg.jobs {
        if j == 0 {
            return Err(CliError::Config("jobs must be positive".into()));
        }
        // the global pool can only be set once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    let model = cfg.model.build::<f64>()?;
    let domain = cfg.domain_config().build::<f64>(cfg.model.dim)?;
    let out = cli.out.clone().or_else(|| cfg.output.as_ref().map(|p| base.join(p))).unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out).map_err(|e| CliError::Config(format!("cannot create {}: {e}", out.display())))?;
    let hash = cfg.hash();
    let ctx = Ctx { cfg, base, hash, model, domain, out };
    match &cli.command {
        Command::Simulate => simulate(&ctx),
        Command::BoundarySweep => sweep(&ctx),
        Command::ScatteringSweep => scattering(&ctx),
        Command::Convert { direction } => convert(&ctx, *direction),
        Command::Thresholds => thresholds(&ctx),
        Command::Verify { suite, name } => verify(&ctx, suite.as_deref().or(name.as_deref()).unwrap_or("default")),
        Command::Reconstruct => reconstruct(&ctx),
    }
}

fn simulate(ctx: &Ctx) -> Result<(), CliError> {
    let e = ctx.energy()?;
    let (m, d) = (&ctx.model, &ctx.domain);
    let dim = m.dim;
    let mut starts: Vec<(Vec3<f64>, Vec3<f64>)> = Vec::new();
    for s in &ctx.cfg.simulate.starts {
        if s.x.len() != dim || s.direction.len() != dim {
            return Err(CliError::Config("start coordinates do not match the dimension".into()));
        }
        let x = Vec3::from_f64(&s.x);
        if !d.contains(&x) {
            return Err(CliError::Config(format!("start {:?} lies outside the domain", s.x)));
        }
        starts.push((x, Vec3::from_f64(&s.direction).normalized()));
    }
    if starts.is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed);
        for _ in 0..ctx.cfg.simulate.samples.unwrap_or(4) {
            starts.push((d.sample_interior(&mut rng), random_unit(dim, &mut rng)));
        }
    }
    let duration = ctx.cfg.simulate.duration.unwrap_or(5.0 * d.delta() / m.c);
    let opts = ctx.cfg.flow_options();
    let mut summary = Vec::new();
    for (i, (x, u)) in starts.iter().enumerate() {
        let p = sphere_momentum(m, x, e, u)?;
        let flow = integrate_flow(m, Some(d), &PhaseState::new(*x, p), duration, &opts)?;
        let states = flow.states();
        io::write_trajectory_csv(ctx.create(&format!("trajectory_{i:03}.csv"))?, m, &states, &ctx.hash)?;
        summary.push(json!({
            "file": format!("trajectory_{i:03}.csv"),
            "x0": x.to_f64(dim),
            "p0": p.to_f64(dim),
            "steps": states.len(),
            "exit_time": flow.exit_time,
            "energy_drift": flow.energy_drift,
        }));
    }
    ctx.sidecar("simulate.json", "trajectories", summary.len(), None, json!({"energy": e, "duration": duration, "tolerances": ctx.tolerances(), "trajectories": summary}))
}

fn sweep(ctx: &Ctx) -> Result<(), CliError> {
    let e = ctx.energy()?;
    let grid = ctx.domain.boundary_grid(ctx.cfg.grids.boundary);
    let s = boundary_sweep(&ctx.model, &ctx.domain, e, &grid, ctx.cfg.grids.cutoff_frac, &ctx.cfg.shoot_options());
    let data: Vec<BoundaryDatum<f64>> = s.data().cloned().collect();
    io::write_boundary_csv(ctx.create("boundary.csv")?, &data, ctx.model.dim, &ctx.hash)?;
    let failures = s.failures();
    ctx.sidecar(
        "boundary.json",
        "boundary",
        data.len(),
        Some("analytic"),
        json!({"energy": e, "grid_points": grid.len(), "cutoff": s.cutoff, "failures": failures, "tolerances": ctx.tolerances()}),
    )?;
    if failures > 0 {
        return Err(CliError::Solver(format!("{failures} of {} pairs failed", s.entries.len())));
    }
    Ok(())
}

fn scattering(ctx: &Ctx) -> Result<(), CliError> {
    let e = ctx.energy()?;
    if ctx.model.support_ball().is_none() {
        return Err(CliError::Config("scattering data need a compactly supported field".into()));
    }
    let count = ctx.cfg.scattering_samples.unwrap_or(100);
    let inputs = sample_m_e(&ctx.model, &ctx.domain, e, count, ctx.cfg.seed)?;
    let results = scattering_sweep(&ctx.model, &inputs, &ctx.cfg.flow_options());
    let failures = results.iter().filter(|r| r.is_err()).count();
    let data: Vec<_> = results.into_iter().filter_map(Result::ok).collect();
    io::write_scattering_csv(ctx.create("scattering.csv")?, &data, &ctx.domain, &ctx.hash)?;
    ctx.sidecar("scattering.json", "scattering", data.len(), None, json!({"energy": e, "samples": count, "failures": failures, "tolerances": ctx.tolerances()}))?;
    if failures > 0 {
        return Err(CliError::Solver(format!("{failures} of {count} samples failed")));
    }
    Ok(())
}

fn convert(ctx: &Ctx, dir: Direction) -> Result<(), CliError> {
    let input = ctx.cfg.input.as_ref().ok_or_else(|| CliError::Config("convert needs an input dataset".into()))?;
    let path = ctx.resolve(input);
    let file = File::open(&path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let (m, d) = (&ctx.model, &ctx.domain);
    match dir {
        Direction::B2s => {
            let data = io::read_boundary_csv(file, m)?;
            let out = data.iter().map(|b| boundary_datum_to_scattering(m, b)).collect::<fixen::Result<Vec<_>>>()?;
            io::write_scattering_csv(ctx.create("scattering.csv")?, &out, d, &ctx.hash)?;
            ctx.sidecar("scattering.json", "scattering", out.len(), None, json!({"converted_from": input}))
        }
        Direction::S2b => {
            let data = io::read_scattering_csv(file, m.dim)?;
            let out = data.iter().map(|s| scattering_to_boundary(m, d, s)).collect::<fixen::Result<Vec<_>>>()?;
            io::write_boundary_csv(ctx.create("boundary.csv")?, &out, m.dim, &ctx.hash)?;
            ctx.sidecar("boundary.json", "boundary", out.len(), None, json!({"converted_from": input}))
        }
    }
}

fn thresholds(ctx: &Ctx) -> Result<(), CliError> {
    let res = ctx.cfg.norm_resolution();
    let e_star = ctx.threshold();
    let e = ctx.cfg.energy.unwrap_or(e_star);
    let report = compute_constants(&ctx.model, &ctx.domain, e, res)?;
    let ladder: Vec<_> = if ctx.cfg.energies.is_empty() {
        energy_ladder(&ctx.model, &ctx.domain, e_star.max(1.0), 2.0, 6, res)
    } else {
        ctx.cfg.energies.iter().map(|e| compute_constants(&ctx.model, &ctx.domain, *e, res)).collect()
    }
    .into_iter()
    .collect::<fixen::Result<_>>()?;
    let out = json!({
        "config_hash": ctx.hash,
        "energy_threshold": e_star,
        "report": report,
        "ladder": ladder,
    });
    ctx.report("thresholds.json", &out)?;
    println!("{}", serde_json::to_string_pretty(&out).expect("report serialises"));
    Ok(())
}

const SUITE: [&str; 14] = [
    "speed-law",
    "reciprocity",
    "action-gradients",
    "curl-formula",
    "mixed-derivatives",
    "near-diagonal",
    "energy-conservation",
    "living-time",
    "injectivity-bound",
    "diffeo-jacobian",
    "orientation",
    "maupertuis",
    "closedness",
    "uniqueness-estimate",
];

fn verify(ctx: &Ctx, suite: &str) -> Result<(), CliError> {
    let two_d = ctx.model.dim == 2;
    let names: Vec<&str> = match suite {
        "all" | "default" => SUITE
            .iter()
            .copied()
            .filter(|n| two_d || !matches!(*n, "orientation" | "uniqueness-estimate"))
            .filter(|n| suite == "all" || *n != "uniqueness-estimate")
            .collect(),
        list => {
            let names: Vec<&str> = list.split(',').map(str::trim).collect();
            if let Some(bad) = names.iter().find(|n| !SUITE.contains(n)) {
                return Err(CliError::Config(format!("unknown check {bad}; available: {}, default, all", SUITE.join(", "))));
            }
            names
        }
    };
    let e = ctx.energy()?;
    let mut results: BTreeMap<String, CheckResult> = BTreeMap::new();
    for name in names {
        for r in run_check(ctx, name, e)? {
            results.insert(r.name.clone(), r);
        }
    }
    let failed: Vec<String> = results.values().filter(|r| !r.passed).map(|r| r.name.clone()).collect();
    ctx.report("verify.json", &json!({"config_hash": ctx.hash, "energy": e, "checks": results}))?;
    for r in results.values() {
        println!("{} {} max_residual={:e} tolerance={:e}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.max_residual, r.tolerance);
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failed.join(", ")))
    }
}

fn run_check(ctx: &Ctx, name: &str, e: f64) -> Result<Vec<CheckResult>, CliError> {
    let (m, d) = (&ctx.model, &ctx.domain);
    let cfg = &ctx.cfg;
    let seed = cfg.seed;
    let so = cfg.shoot_options();
    let fo = cfg.flow_options();
    let h = cfg.tolerances.fd_step;
    let diam = d.diameter();
    let samples = cfg.verify.samples.unwrap_or(200);
    let interior = || id::interior_pairs(d, cfg.verify.interior_pairs.unwrap_or(50), seed, 0.05, 0.2);
    let zeta = d.boundary_point_towards(&Vec3::new(0.0, -1.0, 0.0));
    Ok(match name {
        "speed-law" => {
            let s = boundary_sweep(m, d, e, &d.boundary_grid(cfg.grids.boundary), cfg.grids.cutoff_frac, &so);
            let mut r = id::check_speed_law(m, &s.data().cloned().collect::<Vec<_>>(), 1e-8);
            if s.failures() > 0 {
                r.passed = false;
                r.max_residual = f64::INFINITY;
                r.details.push(format!("{} shooting failures", s.failures()));
            }
            vec![r]
        }
        "reciprocity" => vec![id::check_reciprocity(m, d, e, &id::boundary_pairs(d, cfg.verify.pairs.unwrap_or(200), seed, 0.05 * diam), &so, 1e-8)],
        "action-gradients" => vec![id::check_action_gradients(m, m, d, e, &interior(), h, &so, 1e-5)],
        "curl-formula" => {
            let pts: Vec<_> = id::interior_pairs(d, 20, seed, 0.05, 0.0).into_iter().map(|p| p.0).collect();
            vec![
                id::check_curl_formula(m, d, e, &zeta, &pts, h, false, &so, 1e-6),
                id::check_curl_formula(m, d, e, &zeta, &pts, h, true, &so, 1e-6),
            ]
        }
        "mixed-derivatives" => {
            let pairs = interior();
            vec![id::check_mixed_derivatives(m, d, e, &pairs[..20.min(pairs.len())], 1e-3, &so, 1e-6)]
        }
        "near-diagonal" => {
            let series = id::near_diagonal_growth(m, d, e, &d.center, &Vec3::axis(0), 0.5 * d.semi_axes[0], 8, &so)?;
            vec![id::check_near_diagonal("near-diagonal", &series, 2.0)]
        }
        "energy-conservation" => vec![id::check_energy_conservation(m, d, e, samples, seed, &fo, 1e-8 * e.abs().max(1.0))],
        "living-time" => vec![id::check_living_time(m, d, e, samples, seed, &fo)],
        "injectivity-bound" => vec![id::check_injectivity_bound(m, d, e, samples, seed, cfg.norm_resolution(), &fo)],
        "diffeo-jacobian" => vec![id::check_diffeo_jacobian(m, d, e, samples, seed, cfg.norm_resolution(), &fo)],
        "orientation" => {
            let pts: Vec<_> = id::interior_pairs(d, 5, seed, 0.1, 0.0).into_iter().map(|p| p.0).collect();
            vec![id::check_orientation(m, d, e, &pts, 64, &so)]
        }
        "maupertuis" => vec![id::check_maupertuis(m, d, e, &id::boundary_pairs(d, 20, seed, 0.2 * diam), seed, &so, 1e-8)],
        "closedness" => {
            let pts = d.closure_samples(cfg.norm_resolution().min(32));
            let cyc = fixen::fields::check_magnetic_closedness(m, &pts);
            let asym = fixen::fields::antisymmetry_residual(m, &pts);
            vec![
                CheckResult::from_samples("closedness", 1e-10, vec![Ok((cyc, "cyclic sum".into()))]),
                CheckResult::from_samples("antisymmetry", 1e-10, vec![Ok((asym, "B + Bᵀ".into()))]),
            ]
        }
        "uniqueness-estimate" => {
            let other = match &cfg.verify.compare {
                Some(other) => other.build::<f64>()?,
                None => m.clone(),
            };
            vec![id::check_uniqueness_estimate(m, &other, d, e, &UniquenessOptions { shoot: so, ..UniquenessOptions::default() })]
        }
        _ => unreachable!("names are validated"),
    })
}

fn reconstruct(ctx: &Ctx) -> Result<(), CliError> {
    let recon = ctx.cfg.reconstruct.as_ref().ok_or_else(|| CliError::Config("reconstruct section missing".into()))?;
    let dim = ctx.model.dim;
    let bumps = |list: &[crate::config::BumpConfig]| -> Result<Vec<FamilyBump<f64>>, CliError> {
        list.iter()
            .map(|b| {
                if b.center.len() != dim || b.radius.is_nan() || b.radius <= 0.0 {
                    return Err(CliError::Config("family bump needs a centre of the model's dimension and a positive radius".into()));
                }
                Ok(FamilyBump { center: Vec3::from_f64(&b.center), radius: b.radius })
            })
            .collect()
    };
    let mut base = ctx.model.clone();
    base.potential.clear();
    base.magnetic.clear();
    let family = BumpFamily { base, potential: bumps(&recon.potential)?, magnetic: bumps(&recon.magnetic)?, free_centers: recon.free_centers };
    if recon.initial.len() != family.len() {
        return Err(CliError::Config(format!("initial has {} entries; the family has {} parameters", recon.initial.len(), family.len())));
    }
    family.model(&recon.initial)?;
    let path = ctx.resolve(&recon.data);
    let file = File::open(&path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let data = io::read_boundary_csv(file, &ctx.model)?;
    let mut opt = OptimizerOptions { method: recon.optimizer, ..OptimizerOptions::default() };
    if let Some(n) = recon.max_evaluations {
        opt.max_evaluations = n;
    }
    let mut result = reconstruct_least_squares(&family, &ctx.domain, &data, &recon.initial, &ctx.cfg.weights(), &opt, &ctx.cfg.shoot_options())?;
    if let Some(t) = &recon.truth {
        if t.len() != family.len() {
            return Err(CliError::Config("truth has the wrong length".into()));
        }
        result = result.with_truth(t);
    }
    let fitted = family.model(&result.theta)?;
    ctx.report("reconstruction.json", &json!({"config_hash": ctx.hash, "data": recon.data, "rows": data.len(), "result": result}))?;
    field_grid(ctx, &fitted)?;
    if !result.converged {
        return Err(CliError::Solver(format!("optimizer stopped after {} evaluations without converging", result.evaluations)));
    }
    Ok(())
}

/// Recovered `V` and `B` on a square grid clipped to the domain.
fn field_grid(ctx: &Ctx, model: &FieldModel<f64>) -> Result<(), CliError> {
    let d = &ctx.domain;
    let n = ctx.cfg.grids.interior;
    let dim = model.dim;
    let mut header: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
    header.push("V".into());
    for i in 0..dim {
        for j in i + 1..dim {
            header.push(format!("B{}{}", i + 1, j + 1));
        }
    }
    let axis = |k: usize, a: usize| d.center[a] + d.semi_axes[a] * (2.0 * (k as f64 + 0.5) / n as f64 - 1.0);
    let mut rows = Vec::new();
    for idx in 0..n.pow(dim as u32) {
        let mut x = Vec3::zero();
        let mut rest = idx;
        for a in 0..dim {
            x[a] = axis(rest % n, a);
            rest /= n;
        }
        if !d.contains(&x) {
            continue;
        }
        let mut row = x.to_f64(dim);
        row.push(model.potential_value(&x));
        let b = model.magnetic_field(&x);
        for i in 0..dim {
            for j in i + 1..dim {
                row.push(b.0[i][j]);
            }
        }
        rows.push(row);
    }
    io::write_table_csv(ctx.create("field_grid.csv")?, &header, &rows, &ctx.hash)?;
    Ok(())
}
