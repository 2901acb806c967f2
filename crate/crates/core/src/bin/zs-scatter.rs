use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use zs_scatter::marchenko::{read_samples_csv, MarchenkoKernel, Side};
use zs_scatter::pencil::{self, PencilOptions, SpectralData};
use zs_scatter::pipeline::{self, PotentialSpec, RunConfig};
use zs_scatter::{Case, Error};

#[derive(Parser)]
#[command(name = "zs-scatter", version, about = "Direct scattering for the Zakharov-Shabat system")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full computation and write artifacts.
    Run(RunArgs),
    /// Run a built-in case and compare with its oracle at mesh-scaled tolerances.
    Validate(RunArgs),
    /// Identify bound states from Marchenko and Fourier samples.
    Identify(IdentifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Builtin {
    Soliton,
    Gaussian,
    Zero,
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, conflicts_with = "samples")]
    builtin: Option<Builtin>,
    /// Potential samples, one `x re(u) im(u)` row per line.
    #[arg(long)]
    samples: Option<PathBuf>,
    #[arg(long = "L")]
    half_width: Option<f64>,
    #[arg(long = "n")]
    mesh_n: Option<usize>,
    #[arg(long = "case")]
    case: Option<Case>,
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    x0: Option<f64>,
    #[arg(long)]
    phi: Option<f64>,
    #[arg(long)]
    q0: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    m_over: Option<usize>,
    /// Solve all four Volterra systems and report symmetry deviations.
    #[arg(long)]
    cross_validate: bool,
    #[arg(long)]
    write_kernels: bool,
}

#[derive(Args)]
struct IdentifyArgs {
    /// Marchenko kernel CSV (`alpha,re,im`).
    #[arg(long)]
    omega: PathBuf,
    /// Fourier transform CSV on the same grid (`rho` or `ell`).
    #[arg(long)]
    rho: PathBuf,
    /// Inferred from the sign of the α samples when omitted.
    #[arg(long, value_enum)]
    side: Option<SideArg>,
    #[arg(long, default_value_t = 5)]
    m_over: usize,
    /// Absolute error level of Ω and the transform, e.g. the R/L duality
    /// gap from `report.json`.
    #[arg(long, default_value_t = 0.0)]
    noise_floor: f64,
    /// Write the spectral data JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    Left,
    Right,
}

enum Failure {
    Usage(String),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Usage(e.to_string()),
            other => Failure::Run(other.to_string()),
        }
    }
}

fn build_config(a: &RunArgs) -> Result<RunConfig, Failure> {
    let mut c = match &a.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(b) = a.builtin {
        c.potential = match b {
            Builtin::Soliton => PotentialSpec::default(),
            Builtin::Gaussian => PotentialSpec::Gaussian {
                q0: 1.9,
                mu: 1.0,
                sigma: 2.0,
            },
            Builtin::Zero => PotentialSpec::Zero,
        };
    }
    if let Some(p) = &a.samples {
        c.potential = PotentialSpec::File { path: p.clone() };
    }
    match &mut c.potential {
        PotentialSpec::Soliton { xi, eta, x0, phi } => {
            set(xi, a.xi);
            set(eta, a.eta);
            set(x0, a.x0);
            set(phi, a.phi);
        }
        PotentialSpec::Gaussian { q0, mu, sigma } => {
            set(q0, a.q0);
            set(mu, a.mu);
            set(sigma, a.sigma);
        }
        _ => {}
    }
    set(&mut c.half_width, a.half_width);
    set(&mut c.mesh_n, a.mesh_n);
    if a.case.is_some() {
        c.case = a.case;
    }
    set(&mut c.pencil.m_over, a.m_over);
    if a.out.is_some() {
        c.out_dir = a.out.clone();
    }
    c.validation.cross_validate |= a.cross_validate;
    c.validation.write_kernels |= a.write_kernels;
    c.validate()?;
    Ok(c)
}

fn set<T>(dst: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *dst = v;
    }
}

fn summary(out: &pipeline::RunOutput) {
    let r = &out.report;
    println!("mesh_n={} L={} case={}", r.mesh_n, r.half_width, r.case);
    println!(
        "{} = {:.3e}  duality gaps T {:.3e} R {:.3e} L {:.3e}",
        r.scattering.identity_label,
        r.scattering.identity_error,
        r.scattering.t_duality_gap,
        r.scattering.r_duality_gap,
        r.scattering.l_duality_gap
    );
    for (b, g) in out.spectral.bound_states.iter().zip(&out.spectral.gamma_left) {
        println!(
            "bound state λ = {:+.10} {:+.10}i  (m = {})  Γ_ℓ = {:.6}",
            b.lambda.re, b.lambda.im, b.multiplicity, g[0]
        );
    }
    if out.spectral.bound_states.is_empty() {
        println!("no bound states");
    }
    for w in out.left_id.warnings.iter().chain(&out.right_id.warnings) {
        eprintln!("warning: {w}");
    }
}

fn run_cmd(a: &RunArgs) -> Result<(), Failure> {
    let c = build_config(a)?;
    let out = pipeline::run(&c)?;
    summary(&out);
    Ok(())
}

fn validate_cmd(a: &RunArgs) -> Result<bool, Failure> {
    let c = build_config(a)?;
    let out = pipeline::run(&c)?;
    let checks = pipeline::checks(&c, &out.report);
    let mut ok = true;
    for k in &checks {
        println!(
            "{} {:<20} {:.3e} (limit {:.3e})",
            if k.pass { "PASS" } else { "FAIL" },
            k.name,
            k.value,
            k.tol
        );
        ok &= k.pass;
    }
    if let Some(dir) = &c.out_dir {
        let s = serde_json::to_string_pretty(&checks).map_err(Error::from)?;
        std::fs::write(dir.join("checks.json"), s + "\n").map_err(Error::from)?;
    }
    Ok(ok)
}

fn load_samples(path: &Path) -> Result<Vec<(f64, Complex64)>, Failure> {
    let rows = read_samples_csv(path)?;
    if rows.len() < 2 {
        return Err(Failure::Usage(format!("{} holds fewer than two samples", path.display())));
    }
    Ok(rows)
}

fn identify_cmd(a: &IdentifyArgs) -> Result<(), Failure> {
    if !(a.noise_floor >= 0.0) || !a.noise_floor.is_finite() {
        return Err(Failure::Usage(format!("--noise-floor must be >= 0, got {}", a.noise_floor)));
    }
    let omega = load_samples(&a.omega)?;
    let ft = load_samples(&a.rho)?;
    if omega.len() != ft.len() || omega.iter().zip(&ft).any(|(x, y)| (x.0 - y.0).abs() > 1e-9) {
        return Err(Failure::Usage("Ω and Fourier samples lie on different α grids".into()));
    }
    let step = omega[1].0 - omega[0].0;
    let uniform = omega
        .windows(2)
        .all(|w| ((w[1].0 - w[0].0) - step).abs() <= 1e-9 * step.abs().max(1.0));
    if !(step > 0.0) || !uniform {
        return Err(Failure::Usage("α samples must be increasing and uniform".into()));
    }
    let side = match a.side {
        Some(SideArg::Left) => Side::Left,
        Some(SideArg::Right) => Side::Right,
        None if omega[0].0.abs() <= 1e-9 * step => Side::Left,
        None if omega[omega.len() - 1].0.abs() <= 1e-9 * step => Side::Right,
        None => {
            return Err(Failure::Usage(
                "cannot infer the side: α must start (left) or end (right) at 0; pass --side".into(),
            ))
        }
    };
    let kernel = MarchenkoKernel {
        side,
        step,
        values: omega.iter().map(|r| r.1).collect(),
    };
    let ftv: Vec<Complex64> = ft.iter().map(|r| r.1).collect();
    let opts = PencilOptions {
        m_over: a.m_over,
        noise_floor: a.noise_floor,
        ..Default::default()
    };
    let sums = pencil::spectral_sums(&kernel, &ftv, &opts)?;
    let id = pencil::identify(&sums, &opts)?;
    for w in &id.warnings {
        eprintln!("warning: {w}");
    }
    let data = match side {
        Side::Left => SpectralData {
            bound_states: id.states.clone(),
            gamma_left: id.gamma.clone(),
            gamma_right: Vec::new(),
        },
        Side::Right => SpectralData {
            bound_states: id.states.clone(),
            gamma_left: Vec::new(),
            gamma_right: id.gamma.clone(),
        },
    };
    match &a.out {
        Some(p) => data.write_json(p)?,
        None => println!(
            "{}",
            serde_json::to_string_pretty(&data.to_json()).map_err(Error::from)?
        ),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Some(k) = cli.threads {
        if k == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: cannot set up the thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let res = match &cli.command {
        Command::Run(a) => run_cmd(a).map(|_| true),
        Command::Validate(a) => validate_cmd(a),
        Command::Identify(a) => identify_cmd(a).map(|_| true),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Run(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
