//! Command-line front end. Every subcommand writes its files and a
//! `manifest.json` into `--out`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use advmri::attack::{attack_grid, AttackConfig, AttackResult};
use advmri::phantom::{gen_phantom, PhantomSpec};
use advmri::report::{self, table, ExperimentManifest, ResultRow};
use advmri::seed::{derive_seed, rng_for};
use advmri::theory::{recovery_experiment, spike_attack, RecoveryMode, RecoveryTrial};
use advmri::transforms::{forward, pseudoinverse, Mask1D, SamplingMask};
use advmri::tv::{calibrate, gaussian_noise, reconstruct_tv, CalibrationGrid, CalibrationReport, ReconConfig};
use advmri::{Error, Image, Result};

#[derive(Parser)]
#[command(name = "advmri", version, about = "Localized adversarial attacks on TV-regularized subsampled Fourier reconstruction")]
struct Cli {
    /// Base seed for every random choice
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate random ellipse phantoms
    Phantom(PhantomArgs),
    /// Build a sampling mask
    Mask(MaskArgs),
    /// Measure an image through a mask
    Measure(MeasureArgs),
    /// Reconstruct an image from measurements
    Reconstruct(ReconstructArgs),
    /// Choose TV parameters on sample images
    Calibrate(CalibrateArgs),
    /// Run the localized attack on images
    Attack(AttackArgs),
    /// Spike perturbation for a random 1D mask
    Spike1d(Spike1dArgs),
    /// Monte Carlo exact-recovery experiment in 1D
    Recover1d(Recover1dArgs),
    /// Aggregate attack results into a table
    Table(TableArgs),
    /// Render an image to PPM
    Render(RenderArgs),
}

#[derive(Args)]
struct PhantomArgs {
    #[arg(long, default_value_t = 256)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Also write a PPM rendering of each phantom
    #[arg(long)]
    render: bool,
}

#[derive(Args)]
struct MaskArgs {
    #[arg(long)]
    n: usize,
    /// Number of radial lines
    #[arg(long, conflicts_with = "random")]
    lines: Option<usize>,
    /// Number of uniformly random frequencies
    #[arg(long)]
    random: Option<usize>,
}

#[derive(Args)]
struct MeasureArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    mask: PathBuf,
    /// Gaussian noise with norm noise_rel * ||y||
    #[arg(long, default_value_t = 0.0)]
    noise_rel: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Tv,
    Pinv,
}

#[derive(Args)]
struct TvParams {
    /// Absolute regularization weight
    #[arg(long)]
    lambda: Option<f64>,
    /// Absolute ADMM penalty (default: lambda)
    #[arg(long)]
    penalty: Option<f64>,
    /// Calibration report giving relative parameters
    #[arg(long)]
    calibration: Option<PathBuf>,
}

#[derive(Args)]
struct ReconstructArgs {
    #[arg(long)]
    measurements: PathBuf,
    #[arg(long)]
    mask: PathBuf,
    #[arg(long, value_enum, default_value = "tv")]
    method: Method,
    #[command(flatten)]
    params: TvParams,
    #[arg(long, default_value_t = 200)]
    iterations: usize,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    mask: PathBuf,
    /// Sample images; if absent, `count` phantoms are generated from the seed
    #[arg(long, num_args = 1..)]
    samples: Vec<PathBuf>,
    #[arg(long, default_value_t = 5)]
    count: usize,
    #[arg(long, default_value_t = 0.04)]
    noise_rel: f64,
    #[arg(long, default_value_t = 200)]
    iterations: usize,
}

#[derive(Args)]
struct AttackArgs {
    #[arg(long, num_args = 1.., required = true)]
    image: Vec<PathBuf>,
    #[arg(long, default_value_t = 40)]
    lines: usize,
    /// Attack budget relative to ||y||_2
    #[arg(long, default_value_t = 0.04)]
    noise_rel: f64,
    /// Centers per axis, as ROWSxCOLS
    #[arg(long, default_value = "8x8", value_parser = parse_grid)]
    grid: (usize, usize),
    #[arg(long, default_value_t = 5.0)]
    sigma: f64,
    /// Absolute lambda, or `auto` to calibrate
    #[arg(long, default_value = "auto")]
    lambda: String,
    #[arg(long)]
    penalty: Option<f64>,
    /// Calibration report for `--lambda auto`
    #[arg(long)]
    calibration: Option<PathBuf>,
    /// Calibration images for `--lambda auto`
    #[arg(long, num_args = 1..)]
    samples: Vec<PathBuf>,
    #[arg(long, default_value_t = 30)]
    steps: usize,
    #[arg(long, default_value_t = 0.25)]
    step_size: f64,
    /// ADMM iterations differentiated by the attack
    #[arg(long, default_value_t = 50)]
    unroll: usize,
    /// ADMM iterations for the reported reconstructions
    #[arg(long, default_value_t = 200)]
    iterations: usize,
    #[arg(long, default_value_t = 1.0)]
    vmax_excess: f64,
    /// Record wall-clock time in the results (makes them non-reproducible)
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct Spike1dArgs {
    #[arg(long, default_value_t = 256)]
    n: usize,
    #[arg(long, default_value_t = 32)]
    m: usize,
    /// Use every frequency
    #[arg(long)]
    full: bool,
}

#[derive(Args)]
struct Recover1dArgs {
    #[arg(long, value_enum, default_value = "l1")]
    mode: ModeArg,
    #[arg(long, default_value_t = 128)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    s: usize,
    #[arg(long, default_value_t = 40)]
    m: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 1e-3)]
    tolerance: f64,
    #[arg(long, default_value_t = 0.5)]
    min_magnitude: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    L1,
    Tv,
}

#[derive(Args)]
struct TableArgs {
    /// Directory of result CSV files, or CSV files
    #[arg(long, num_args = 1.., required = true)]
    results: Vec<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    image: PathBuf,
    /// Output file (default: <out>/<image stem>.ppm)
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    vmax_excess: f64,
}

fn parse_grid(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected ROWSxCOLS, got {s}"))?;
    let p = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t}: {e}"));
    Ok((p(a)?, p(b)?))
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "image".into())
}

struct Run<'a> {
    out: &'a Path,
    manifest: ExperimentManifest,
}

impl Run<'_> {
    fn input(&mut self, path: &Path) -> Result<()> {
        self.manifest.record_input(path)
    }

    fn output(&mut self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn done(&mut self, path: &Path) -> Result<()> {
        self.manifest.record_output(self.out, path)
    }

    fn image(&mut self, name: &str, img: &Image) -> Result<()> {
        let p = self.output(name);
        report::write_image(&p, img)?;
        self.done(&p)
    }

    fn render(&mut self, name: &str, img: &Image, vmax_excess: f64) -> Result<()> {
        let p = self.output(name);
        report::write_ppm(&p, img, vmax_excess)?;
        self.done(&p)
    }

    fn json<T: serde::Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let p = self.output(name);
        std::fs::write(&p, serde_json::to_string_pretty(value)? + "\n")?;
        self.done(&p)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot set thread count: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    std::fs::create_dir_all(&cli.out)?;
    let name = match &cli.command {
        Command::Phantom(_) => "phantom",
        Command::Mask(_) => "mask",
        Command::Measure(_) => "measure",
        Command::Reconstruct(_) => "reconstruct",
        Command::Calibrate(_) => "calibrate",
        Command::Attack(_) => "attack",
        Command::Spike1d(_) => "spike1d",
        Command::Recover1d(_) => "recover1d",
        Command::Table(_) => "table",
        Command::Render(_) => "render",
    };
    let mut run = Run {
        out: &cli.out,
        manifest: ExperimentManifest::start(name, std::env::args().skip(1).collect(), cli.seed),
    };
    let seed = cli.seed;
    match &cli.command {
        Command::Phantom(a) => phantom(&mut run, a, seed)?,
        Command::Mask(a) => mask(&mut run, a, seed)?,
        Command::Measure(a) => measure(&mut run, a, seed)?,
        Command::Reconstruct(a) => reconstruct(&mut run, a)?,
        Command::Calibrate(a) => calibrate_cmd(&mut run, a, seed)?,
        Command::Attack(a) => attack(&mut run, a, seed)?,
        Command::Spike1d(a) => spike1d(&mut run, a, seed)?,
        Command::Recover1d(a) => recover1d(&mut run, a, seed)?,
        Command::Table(a) => table_cmd(&mut run, a)?,
        Command::Render(a) => render(&mut run, a)?,
    }
    run.manifest.finish(&cli.out)
}

fn phantom(run: &mut Run, a: &PhantomArgs, seed: u64) -> Result<()> {
    for i in 0..a.count {
        let img = gen_phantom(&PhantomSpec::new(a.n, derive_seed(seed, i as u64)))?;
        run.image(&format!("phantom_{i:04}.cfi"), &img)?;
        if a.render {
            run.render(&format!("phantom_{i:04}.ppm"), &img, 1.0)?;
        }
    }
    println!("wrote {} phantom(s) of size {}x{}", a.count, a.n, a.n);
    Ok(())
}

fn mask(run: &mut Run, a: &MaskArgs, seed: u64) -> Result<()> {
    let mask = match (a.lines, a.random) {
        (Some(l), None) => SamplingMask::radial(a.n, l)?,
        (None, Some(m)) => SamplingMask::random(a.n, m, &mut rng_for(seed, 0))?,
        _ => return Err(Error::InvalidParameter("give exactly one of --lines or --random".into())),
    };
    let p = run.output("mask.cfi");
    report::write_mask(&p, &mask)?;
    run.done(&p)?;
    println!("m = {}, fraction = {:.4}, subsampling factor = {:.3}", mask.m(), mask.fraction(), mask.subsampling_factor());
    Ok(())
}

fn measure(run: &mut Run, a: &MeasureArgs, seed: u64) -> Result<()> {
    run.input(&a.image)?;
    run.input(&a.mask)?;
    let x = report::read_image(&a.image)?;
    let mask = report::read_mask(&a.mask)?;
    let mut y = forward(&x, &mask)?;
    if a.noise_rel > 0.0 {
        y = y.add(&gaussian_noise(&y, a.noise_rel, &mut rng_for(seed, 0)))?;
    }
    let p = run.output(&format!("{}_y.cfi", stem(&a.image)));
    report::write_measurements(&p, &y)?;
    run.done(&p)
}

fn load_calibration(path: &Path) -> Result<CalibrationReport> {
    Ok(serde_json::from_slice(&std::fs::read(path)?)?)
}

fn tv_config(run: &mut Run, p: &TvParams, y: &advmri::MeasurementVector, iterations: usize) -> Result<ReconConfig> {
    match (p.lambda, &p.calibration) {
        (Some(l), None) => Ok(ReconConfig::new(l, p.penalty.unwrap_or(l), iterations)),
        (None, Some(c)) => {
            run.input(c)?;
            Ok(load_calibration(c)?.config_for(y, iterations))
        }
        _ => Err(Error::InvalidParameter("give exactly one of --lambda or --calibration".into())),
    }
}

fn reconstruct(run: &mut Run, a: &ReconstructArgs) -> Result<()> {
    run.input(&a.measurements)?;
    run.input(&a.mask)?;
    let y = report::read_measurements(&a.measurements)?;
    let mask = report::read_mask(&a.mask)?;
    let z = match a.method {
        Method::Pinv => pseudoinverse(&y, &mask)?,
        Method::Tv => {
            let cfg = tv_config(run, &a.params, &y, a.iterations)?;
            reconstruct_tv(&y, &mask, &cfg)?
        }
    };
    run.image(&format!("{}_recon.cfi", stem(&a.measurements)), &z)
}

fn calibration_samples(run: &mut Run, files: &[PathBuf], count: usize, n: usize, seed: u64) -> Result<Vec<Image>> {
    if files.is_empty() {
        return (0..count)
            .map(|i| gen_phantom(&PhantomSpec::new(n, derive_seed(seed ^ 0xca1b, i as u64))))
            .collect();
    }
    files
        .iter()
        .map(|f| {
            run.input(f)?;
            report::read_image(f)
        })
        .collect()
}

fn calibrate_cmd(run: &mut Run, a: &CalibrateArgs, seed: u64) -> Result<()> {
    run.input(&a.mask)?;
    let mask = report::read_mask(&a.mask)?;
    let samples = calibration_samples(run, &a.samples, a.count, mask.n(), seed)?;
    let rep = calibrate(&samples, &mask, a.noise_rel, &CalibrationGrid::default(), a.iterations, seed)?;
    println!("lambda scale = {:e}, penalty factor = {}", rep.chosen.0, rep.chosen.1);
    run.json("calibration.json", &rep)
}

fn attack(run: &mut Run, a: &AttackArgs, seed: u64) -> Result<()> {
    let images: Vec<(String, Image)> = a
        .image
        .iter()
        .map(|p| {
            run.input(p)?;
            Ok((stem(p), report::read_image(p)?))
        })
        .collect::<Result<_>>()?;
    let n = images[0].1.n();
    if images.iter().any(|(_, x)| x.n() != n) {
        return Err(Error::InvalidParameter("all attacked images must have the same size".into()));
    }
    let mask = SamplingMask::radial(n, a.lines)?;

    let calibration = if a.lambda == "auto" {
        Some(match (&a.calibration, a.samples.is_empty()) {
            (Some(c), _) => {
                run.input(c)?;
                load_calibration(c)?
            }
            (None, false) => {
                let samples = calibration_samples(run, &a.samples, 0, n, seed)?;
                let rep = calibrate(&samples, &mask, a.noise_rel, &CalibrationGrid::default(), a.iterations, seed)?;
                run.json("calibration.json", &rep)?;
                rep
            }
            (None, true) => {
                return Err(Error::InvalidParameter(
                    "--lambda auto needs --calibration or --samples".into(),
                ))
            }
        })
    } else {
        None
    };
    let fixed_lambda = match &calibration {
        Some(_) => None,
        None => Some(
            a.lambda
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("--lambda must be a number or auto, got {}", a.lambda)))?,
        ),
    };

    let csv_path = run.output("results.csv");
    for (k, (id, x)) in images.iter().enumerate() {
        let started = Instant::now();
        let y = forward(x, &mask)?;
        let (lambda, penalty) = match (&calibration, fixed_lambda) {
            (Some(c), _) => {
                let cfg = c.config_for(&y, a.iterations);
                (cfg.lambda, cfg.penalty)
            }
            (None, Some(l)) => (l, a.penalty.unwrap_or(l)),
            (None, None) => unreachable!(),
        };
        let cfg = AttackConfig {
            eta: a.noise_rel * y.norm2(),
            steps: a.steps,
            step_size: a.step_size,
            grid: a.grid,
            sigma: a.sigma,
            unroll_iterations: a.unroll,
            eval_iterations: a.iterations,
            lambda,
            penalty,
            seed: derive_seed(seed, k as u64),
        };
        let res = attack_grid(&y, &mask, &cfg)?;
        if res.stalled {
            eprintln!("warning: {id}: gradient vanished at every step");
        }
        write_attack_outputs(run, id, &res, a.vmax_excess)?;
        let row = ResultRow {
            image_id: id.clone(),
            lines: a.lines,
            m: mask.m(),
            n,
            noise_rel: a.noise_rel,
            mu: res.mu,
            sigma: a.sigma,
            e_norm: res.norms.e_l2,
            r_inf: res.norms.r_linf,
            rho_inf: res.norms.rho_linf,
            alpha: res.alpha,
            wall_time: a.timing.then(|| started.elapsed().as_secs_f64()),
        };
        report::append_rows(&csv_path, std::slice::from_ref(&row))?;
        println!(
            "{id}: mu = ({:.2}, {:.2}), ||r||_inf = {:.4e}, ||rho||_inf = {:.4e}, alpha = {:.3}",
            res.mu.0, res.mu.1, res.norms.r_linf, res.norms.rho_linf, res.alpha
        );
    }
    run.done(&csv_path)
}

#[derive(serde::Serialize)]
struct AttackSummary<'a> {
    mu: (f64, f64),
    alpha: f64,
    norms: advmri::attack::AttackNorms,
    per_center_scores: &'a [((f64, f64), f64)],
    best_history: &'a [f64],
    stalled: bool,
}

fn write_attack_outputs(run: &mut Run, id: &str, res: &AttackResult, vmax_excess: f64) -> Result<()> {
    let p = run.output(&format!("{id}_e.cfi"));
    report::write_measurements(&p, &res.e)?;
    run.done(&p)?;
    run.image(&format!("{id}_r.cfi"), &res.r)?;
    run.image(&format!("{id}_rho.cfi"), &res.rho)?;
    run.image(&format!("{id}_recon.cfi"), &res.reconstruction)?;
    run.image(&format!("{id}_recon_adv.cfi"), &res.perturbed_reconstruction)?;
    run.render(&format!("{id}_recon.ppm"), &res.reconstruction, vmax_excess)?;
    run.render(&format!("{id}_recon_adv.ppm"), &res.perturbed_reconstruction, vmax_excess)?;
    run.render(&format!("{id}_rho.ppm"), &res.rho, vmax_excess)?;
    // r is tiny; show it relative to its own peak
    let peak = res.r.norm_inf();
    let r_vis = if peak > 0.0 { res.r.scale(Complex64::new(1.0 / peak, 0.0)) } else { res.r.clone() };
    run.render(&format!("{id}_r.ppm"), &r_vis, vmax_excess)?;
    run.json(
        &format!("{id}_attack.json"),
        &AttackSummary {
            mu: res.mu,
            alpha: res.alpha,
            norms: res.norms,
            per_center_scores: &res.per_center_scores,
            best_history: &res.best_history,
            stalled: res.stalled,
        },
    )
}

fn spike1d(run: &mut Run, a: &Spike1dArgs, seed: u64) -> Result<()> {
    let mask = if a.full {
        Mask1D::full(a.n)?
    } else {
        Mask1D::random(a.n, a.m, &mut rng_for(seed, 0))?
    };
    let att = spike_attack(&mask)?;
    let factor = a.n as f64 / mask.m() as f64;
    println!(
        "n = {}, m = {}, alpha = {:.6}, n/m = {:.6}, ||r||_2 = {:.6e}, ||r||_inf = {:.6e}",
        a.n,
        mask.m(),
        att.alpha,
        factor,
        att.r.norm2(),
        att.r.norm_inf()
    );
    run.json(
        "spike1d.json",
        &serde_json::json!({
            "n": a.n,
            "m": mask.m(),
            "frequencies": mask.indices(),
            "alpha": att.alpha,
            "subsampling_factor": factor,
            "r_l2": att.r.norm2(),
            "r_inf": att.r.norm_inf(),
        }),
    )
}

fn recover1d(run: &mut Run, a: &Recover1dArgs, seed: u64) -> Result<()> {
    let mode = match a.mode {
        ModeArg::L1 => RecoveryMode::L1,
        ModeArg::Tv => {
            eprintln!("warning: tv mode adds the zero frequency to every mask");
            RecoveryMode::Tv
        }
    };
    let trial = RecoveryTrial {
        failure_tolerance: a.tolerance,
        min_magnitude: a.min_magnitude,
        ..RecoveryTrial::new(mode, a.n, a.s, a.m, a.trials, seed)
    };
    let rep = recovery_experiment(&trial)?;
    let unconverged = rep.outcomes.iter().filter(|o| !o.converged).count();
    println!(
        "mode = {}, n = {}, s = {}, m = {}, trials = {}: rate = {:.3}, spiked rate = {:.3}, unconverged = {unconverged}",
        match mode {
            RecoveryMode::L1 => "l1",
            RecoveryMode::Tv => "tv",
        },
        a.n,
        a.s,
        a.m,
        a.trials,
        rep.rate,
        rep.spiked_rate
    );
    run.json("recover1d.json", &rep)
}

fn table_cmd(run: &mut Run, a: &TableArgs) -> Result<()> {
    let mut files = Vec::new();
    for p in &a.results {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "csv") && f.file_name().is_some_and(|n| n != "table.csv"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    let mut rows = Vec::new();
    for f in &files {
        run.input(f)?;
        rows.extend(report::read_rows(f)?);
    }
    let cells = table::aggregate(&rows)?;
    let md = table::to_markdown(&cells);
    print!("{md}");
    let p = run.output("table.md");
    std::fs::write(&p, &md)?;
    run.done(&p)?;
    let p = run.output("table.csv");
    std::fs::write(&p, table::to_csv(&cells)?)?;
    run.done(&p)
}

fn render(run: &mut Run, a: &RenderArgs) -> Result<()> {
    run.input(&a.image)?;
    let img = report::read_image(&a.image)?;
    let p = a.output.clone().unwrap_or_else(|| run.output(&format!("{}.ppm", stem(&a.image))));
    report::write_ppm(&p, &img, a.vmax_excess)?;
    run.done(&p)
}
