//! End-to-end run: potential, auxiliary kernels, Marchenko kernels,
//! scattering matrix, Fourier pair and spectral identification, with the
//! validation report and on-disk artifacts.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marchenko::{self, MarchenkoKernel};
use crate::pencil::{self, Identification, PencilOptions, SpectralData};
use crate::potential::{Case, PotentialGrid};
use crate::reference::{self, SolitonOracle};
use crate::scattering::{
    self, ConvolutionKernels, FredholmForm, LambdaGridSpec, ScatteringSamples, TransmissionSamples,
};
use crate::volterra::{self, KernelPair, KernelSet, SolverOptions, System, Which};

type C = Complex64;

/// Where the potential comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PotentialSpec {
    Soliton {
        xi: f64,
        eta: f64,
        #[serde(default)]
        x0: f64,
        #[serde(default)]
        phi: f64,
    },
    Gaussian {
        q0: f64,
        mu: f64,
        sigma: f64,
    },
    Zero,
    /// `x re(u) im(u)` rows; `L` and `mesh_n` come from the file.
    File { path: PathBuf },
}

impl Default for PotentialSpec {
    fn default() -> Self {
        PotentialSpec::Soliton {
            xi: 0.1,
            eta: 2.0,
            x0: 0.0,
            phi: 0.0,
        }
    }
}

/// Optional checks; each one yields a report entry or an explicit "skipped".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Validation {
    /// Solve all four Volterra systems instead of two plus symmetry, and
    /// report how far the solved pairs are from the derived ones.
    pub cross_validate: bool,
    /// Collocation residuals of the Volterra and Marchenko solves.
    pub residuals: bool,
    pub fredholm: bool,
    pub round_trip: bool,
    /// Compare with closed forms for the built-in cases.
    pub oracle: bool,
    /// Imaginary offsets of the segments `[-2L, 2L] + i·c` on which `T` is
    /// evaluated.
    pub segments: Vec<f64>,
    pub write_kernels: bool,
}

impl Default for Validation {
    fn default() -> Self {
        Self {
            cross_validate: false,
            residuals: true,
            fredholm: true,
            round_trip: true,
            oracle: true,
            segments: vec![0.0, 1.0, 5.0],
            write_kernels: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PotentialSpec,
    /// Support half-width `L`.
    #[serde(rename = "L")]
    pub half_width: f64,
    pub mesh_n: usize,
    /// Required for Gaussian, zero and file potentials; the soliton is
    /// always focusing.
    pub case: Option<Case>,
    pub solver: SolverOptions,
    pub lambda_grid: LambdaGridSpec,
    pub pencil: PencilOptions,
    pub out_dir: Option<PathBuf>,
    pub validation: Validation,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            potential: PotentialSpec::default(),
            half_width: 8.0,
            mesh_n: 500,
            case: None,
            solver: SolverOptions::default(),
            lambda_grid: LambdaGridSpec::default(),
            pencil: PencilOptions::default(),
            out_dir: None,
            validation: Validation::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&s)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// The case the potential is built with.
    pub fn resolved_case(&self) -> Result<Case> {
        match (&self.potential, self.case) {
            (PotentialSpec::Soliton { .. }, None | Some(Case::Focusing)) => Ok(Case::Focusing),
            (PotentialSpec::Soliton { .. }, Some(Case::Defocusing)) => Err(Error::Config(
                "the soliton potential is focusing only".into(),
            )),
            (_, Some(c)) => Ok(c),
            (_, None) => Err(Error::Config(
                "`case` (focusing or defocusing) is required for this potential".into(),
            )),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.resolved_case()?;
        if let PotentialSpec::File { path } = &self.potential {
            if !path.is_file() {
                return Err(Error::Config(format!("sample file {} not found", path.display())));
            }
        } else {
            if !(self.half_width > 0.0) || !self.half_width.is_finite() {
                return Err(Error::Config(format!("L must be positive, got {}", self.half_width)));
            }
            if self.mesh_n == 0 {
                return Err(Error::Config("mesh_n must be at least 1".into()));
            }
        }
        let s = &self.solver;
        if !(s.tol > 0.0 && s.tol < 1.0) || s.max_iter == 0 {
            return Err(Error::Config(format!(
                "solver needs 0 < tol < 1 and max_iter >= 1, got tol={} max_iter={}",
                s.tol, s.max_iter
            )));
        }
        let g = &self.lambda_grid;
        if !(g.tail_tol > 0.0) {
            return Err(Error::Config("lambda_grid.tail_tol must be positive".into()));
        }
        let p = &self.pencil;
        if p.m_over == 0 || !(p.sample_step > 0.0) {
            return Err(Error::Config("pencil needs m_over >= 1 and sample_step > 0".into()));
        }
        for (name, v) in [
            ("rank_gap", p.rank_gap),
            ("cluster_tol", p.cluster_tol),
            ("zero_tol", p.zero_tol),
            ("fit_tol", p.fit_tol),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("pencil.{name} must lie in (0, 1), got {v}")));
            }
        }
        if !(p.noise_floor >= 0.0) || !p.noise_floor.is_finite() {
            return Err(Error::Config(format!(
                "pencil.noise_floor must be finite and >= 0, got {}",
                p.noise_floor
            )));
        }
        Ok(())
    }

    pub fn build_potential(&self) -> Result<PotentialGrid> {
        let case = self.resolved_case()?;
        let (l, n) = (self.half_width, self.mesh_n);
        match &self.potential {
            PotentialSpec::Soliton { xi, eta, x0, phi } => {
                PotentialGrid::soliton(*xi, *eta, *x0, *phi, l, n)
            }
            PotentialSpec::Gaussian { q0, mu, sigma } => {
                PotentialGrid::gaussian(*q0, *mu, *sigma, case, l, n)
            }
            PotentialSpec::Zero => PotentialGrid::zero(l, n, case),
            PotentialSpec::File { path } => PotentialGrid::from_file(path, case),
        }
    }
}

/// A report entry that was either computed or switched off.
#[derive(Debug, Clone, PartialEq)]
pub enum Entry<T> {
    Done(T),
    Skipped,
}

impl<T> Entry<T> {
    pub fn done(&self) -> Option<&T> {
        match self {
            Entry::Done(v) => Some(v),
            Entry::Skipped => None,
        }
    }
}

impl<T: Serialize> Serialize for Entry<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Entry::Done(v) => v.serialize(s),
            Entry::Skipped => s.serialize_str("skipped"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolterraReport {
    /// `"shortcut"` (two solves plus symmetry) or `"full"`.
    pub mode: &'static str,
    pub max_sweeps: usize,
    pub fallback_lines: usize,
    pub residuals: Entry<BTreeMap<String, f64>>,
    /// Relative distance between solved and symmetry-derived pairs.
    pub symmetry_deviation: Entry<BTreeMap<String, f64>>,
    pub max_abs: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarchenkoReport {
    pub residual_left: Entry<f64>,
    pub residual_right: Entry<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatteringReport {
    pub lambda_points: usize,
    pub lambda_half_range: f64,
    pub doublings: usize,
    pub near_pole_points: usize,
    /// `E_s`, `E_GF`, `E_GD` or a generic label by case.
    pub identity_label: String,
    pub identity_error: f64,
    pub t_duality_gap: f64,
    pub r_duality_gap: f64,
    pub l_duality_gap: f64,
    pub segments: Vec<SegmentReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentReport {
    pub imag_offset: f64,
    pub duality_gap: f64,
    pub near_pole_points: usize,
    pub oracle_error: Entry<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FredholmReport {
    pub rho_phi: f64,
    pub rho_psi: f64,
    pub ell_phi: f64,
    pub ell_psi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SideSummary {
    pub count: usize,
    pub rank: usize,
    pub singular_values: Vec<f64>,
    pub casorati_condition: f64,
    pub fit_residual: f64,
    pub near_multiple: bool,
    pub warnings: Vec<String>,
}

impl From<&Identification> for SideSummary {
    fn from(id: &Identification) -> Self {
        Self {
            count: id.states.len(),
            rank: id.rank,
            singular_values: id.singular_values.clone(),
            casorati_condition: id.casorati_condition,
            fit_residual: id.fit_residual,
            near_multiple: id.near_multiple,
            warnings: id.warnings.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralReport {
    pub data: serde_json::Value,
    /// Sample error level handed to the pencil.
    pub noise_floor: f64,
    pub left: SideSummary,
    pub right: SideSummary,
    /// Bound states found from the right sum on its own.
    pub right_states: Vec<[f64; 2]>,
    /// Largest `|Re λ_left - Re λ_right|` over matched states.
    pub re_lambda_agreement: Option<f64>,
    /// `max |Ω_ℓ - ρ|` and `max |Ω_r - ℓ|` (relevant when there are no bound
    /// states).
    pub omega_minus_rho: f64,
    pub omega_minus_ell: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub kernels: BTreeMap<String, f64>,
    pub kernels_max: f64,
    pub omega_left: f64,
    pub omega_right: f64,
    pub smatrix: f64,
    pub lambda: Option<f64>,
    pub gamma_left: Option<f64>,
    pub gamma_right: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianReport {
    pub expected_count: Entry<usize>,
    pub found_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub mesh_n: usize,
    pub half_width: f64,
    pub case: Case,
    pub truncation: Option<f64>,
    pub volterra: VolterraReport,
    pub marchenko: MarchenkoReport,
    pub scattering: ScatteringReport,
    pub fredholm: Entry<FredholmReport>,
    pub round_trip: Entry<f64>,
    pub spectral: SpectralReport,
    pub oracle: Entry<OracleReport>,
    pub gaussian: Entry<GaussianReport>,
    /// Wall-clock seconds per stage; the only non-deterministic block.
    pub timings: BTreeMap<String, f64>,
}

/// Everything a run computes, for callers that want more than the report.
pub struct RunOutput {
    pub report: RunReport,
    pub grid: PotentialGrid,
    pub kernels: KernelSet,
    pub omega_left: MarchenkoKernel,
    pub omega_right: MarchenkoKernel,
    pub convolution: ConvolutionKernels,
    pub scattering: ScatteringSamples,
    pub segments: Vec<(f64, TransmissionSamples)>,
    pub spectral: SpectralData,
    pub left_id: Identification,
    pub right_id: Identification,
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(name))
}

struct Clock {
    timings: BTreeMap<String, f64>,
    last: Instant,
}

impl Clock {
    fn new() -> Self {
        Self {
            timings: BTreeMap::new(),
            last: Instant::now(),
        }
    }

    fn lap(&mut self, name: &str) {
        let now = Instant::now();
        self.timings
            .insert(name.to_string(), (now - self.last).as_secs_f64());
        self.last = now;
    }
}

fn pair_deviation(solved: &KernelPair, derived: &KernelPair) -> f64 {
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for (a, b) in [(&solved.up, &derived.up), (&solved.dn, &derived.dn)] {
        for (x, y) in a.values().iter().zip(b.values()) {
            num = num.max((x - y).norm());
            den = den.max(x.norm());
        }
    }
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

fn solve_kernels(
    grid: &PotentialGrid,
    opts: &SolverOptions,
    full: bool,
) -> Result<(KernelSet, Entry<BTreeMap<String, f64>>)> {
    let case = grid.case();
    if full {
        let ((kbar, k), (mbar, m)) = rayon::join(
            || {
                rayon::join(
                    || volterra::solve(grid, System::Kbar, opts),
                    || volterra::solve(grid, System::K, opts),
                )
            },
            || {
                rayon::join(
                    || volterra::solve(grid, System::Mbar, opts),
                    || volterra::solve(grid, System::M, opts),
                )
            },
        );
        let (kbar, k, mbar, m) = (kbar?, k?, mbar?, m?);
        let mut dev = BTreeMap::new();
        for src in [&kbar, &k, &mbar, &m] {
            let derived = volterra::derive_by_symmetry(src, case)?;
            let solved = match derived.system {
                System::Kbar => &kbar,
                System::K => &k,
                System::Mbar => &mbar,
                System::M => &m,
            };
            dev.insert(
                format!("{:?}_from_{:?}", derived.system, src.system).to_lowercase(),
                pair_deviation(solved, &derived),
            );
        }
        Ok((KernelSet::new(kbar, k, mbar, m)?, Entry::Done(dev)))
    } else {
        let (kbar, mbar) = rayon::join(
            || volterra::solve(grid, System::Kbar, opts),
            || volterra::solve(grid, System::Mbar, opts),
        );
        let (kbar, mbar) = (kbar?, mbar?);
        let k = volterra::derive_by_symmetry(&kbar, case)?;
        let m = volterra::derive_by_symmetry(&mbar, case)?;
        Ok((KernelSet::new(kbar, k, mbar, m)?, Entry::Skipped))
    }
}

fn identity_label(config: &RunConfig, case: Case) -> String {
    match (&config.potential, case) {
        (PotentialSpec::Soliton { .. }, _) => "E_s".into(),
        (PotentialSpec::Gaussian { .. }, Case::Focusing) => "E_GF".into(),
        (PotentialSpec::Gaussian { .. }, Case::Defocusing) => "E_GD".into(),
        (_, Case::Focusing) => "E_J".into(),
        (_, Case::Defocusing) => "E_I".into(),
    }
}

fn max_diff(a: &[C], b: &[C]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn write_csv_samples(path: &Path, alphas: &[f64], values: &[C]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "alpha,re,im")?;
    for (a, z) in alphas.iter().zip(values) {
        writeln!(w, "{:.17e},{:.17e},{:.17e}", a, z.re, z.im)?;
    }
    w.flush()?;
    Ok(())
}

fn write_segments(path: &Path, segments: &[(f64, TransmissionSamples)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "offset,lambda_re,lambda_im,t_re,t_im,near_pole")?;
    for (c, ts) in segments {
        for j in 0..ts.lambda.len() {
            writeln!(
                w,
                "{},{:.17e},{:.17e},{:.17e},{:.17e},{}",
                c,
                ts.lambda[j].re,
                ts.lambda[j].im,
                ts.t_left[j].re,
                ts.t_left[j].im,
                ts.near_pole[j] as u8
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

fn match_re_lambda(left: &Identification, right: &Identification) -> Option<f64> {
    if left.states.is_empty() || right.states.is_empty() {
        return None;
    }
    let mut worst = 0.0f64;
    for s in &left.states {
        let best = right
            .states
            .iter()
            .map(|r| (r.lambda - s.lambda).norm())
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| right.states[i].lambda)?;
        worst = worst.max((best.re - s.lambda.re).abs());
    }
    Some(worst)
}

/// Runs the whole computation and writes artifacts into `config.out_dir`
/// (when set) as each stage completes.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    stage("config", config.validate())?;
    let out = config.out_dir.clone();
    if let Some(dir) = &out {
        stage("output", std::fs::create_dir_all(dir).map_err(Error::from))?;
    }
    let mut clock = Clock::new();
    let val = &config.validation;

    let grid = stage("potential", config.build_potential())?;
    let case = grid.case();
    let mesh = grid.mesh();
    let n = mesh.mesh_n;
    clock.lap("potential");

    let (kernels, symmetry_deviation) =
        stage("volterra", solve_kernels(&grid, &config.solver, val.cross_validate))?;
    clock.lap("volterra");
    let residuals = if val.residuals {
        let stride = ((2 * n + 1) / 64).max(1);
        let mut m = BTreeMap::new();
        for system in System::ALL {
            let r = volterra::collocation_residual(&grid, kernels.pair(system), stride);
            m.insert(format!("{system:?}").to_lowercase(), r);
        }
        Entry::Done(m)
    } else {
        Entry::Skipped
    };
    let stats: Vec<_> = System::ALL.iter().map(|s| kernels.pair(*s).stats).collect();
    let volterra_report = VolterraReport {
        mode: if val.cross_validate { "full" } else { "shortcut" },
        max_sweeps: stats.iter().map(|s| s.max_sweeps).max().unwrap_or(0),
        fallback_lines: stats.iter().map(|s| s.fallback_lines).sum(),
        residuals,
        symmetry_deviation,
        max_abs: Which::ALL
            .iter()
            .map(|w| (w.name().to_string(), kernels.field(*w).max_abs()))
            .collect(),
    };
    if let (Some(dir), true) = (&out, val.write_kernels) {
        let kdir = dir.join("kernels");
        stage("output", std::fs::create_dir_all(&kdir).map_err(Error::from))?;
        for w in Which::ALL {
            stage(
                "output",
                kernels.field(w).write_dump(&kdir.join(format!("{}.dat", w.name()))),
            )?;
        }
    }
    clock.lap("volterra_checks");

    let (left, right) = rayon::join(
        || marchenko::solve_left(kernels.field(Which::KDn), kernels.field(Which::KbarDn)),
        || marchenko::solve_right(kernels.field(Which::MUp), kernels.field(Which::MbarUp)),
    );
    let (omega_left, omega_right) = (stage("marchenko", left)?, stage("marchenko", right)?);
    if let Some(dir) = &out {
        stage("output", omega_left.write_csv(&dir.join("marchenko_left.csv")))?;
        stage("output", omega_right.write_csv(&dir.join("marchenko_right.csv")))?;
    }
    let marchenko_report = if val.residuals {
        MarchenkoReport {
            residual_left: Entry::Done(marchenko::collocation_residual(
                &omega_left,
                kernels.field(Which::KDn),
                kernels.field(Which::KbarDn),
            )),
            residual_right: Entry::Done(marchenko::collocation_residual(
                &omega_right,
                kernels.field(Which::MUp),
                kernels.field(Which::MbarUp),
            )),
        }
    } else {
        MarchenkoReport {
            residual_left: Entry::Skipped,
            residual_right: Entry::Skipped,
        }
    };
    clock.lap("marchenko");

    let conv = stage("scattering", scattering::build_convolution_kernels(&kernels, &grid))?;
    let samples = stage("scattering", scattering::scatter(&conv, &config.lambda_grid))?;
    if let Some(dir) = &out {
        stage("output", samples.write_csv(&dir.join("scattering.csv")))?;
        stage(
            "output",
            write_csv_samples(&dir.join("rho.csv"), &omega_left.alphas(), &samples.rho),
        )?;
        stage(
            "output",
            write_csv_samples(&dir.join("ell.csv"), &omega_right.alphas(), &samples.ell),
        )?;
    }
    let half = samples.lambda_grid[samples.lambda_grid.len() - 1];
    let seg_points = samples.lambda_grid.len();
    let l2 = 2.0 * mesh.half_width;
    let segments: Vec<(f64, TransmissionSamples)> = val
        .segments
        .iter()
        .map(|&c| {
            let lam = scattering::segment(C::new(-l2, c), C::new(l2, c), seg_points);
            (c, scattering::transmission(&conv, &lam))
        })
        .collect();
    if let (Some(dir), false) = (&out, segments.is_empty()) {
        stage("output", write_segments(&dir.join("transmission_segments.csv"), &segments))?;
    }
    clock.lap("scattering");

    let oracle = match (&config.potential, val.oracle) {
        (PotentialSpec::Soliton { xi, eta, x0, phi }, true) => {
            Some(stage("oracle", SolitonOracle::new(*xi, *eta, *x0, *phi))?)
        }
        _ => None,
    };
    let scattering_report = ScatteringReport {
        lambda_points: samples.lambda_grid.len(),
        lambda_half_range: half,
        doublings: samples.doublings,
        near_pole_points: samples.near_pole.iter().filter(|p| **p).count(),
        identity_label: identity_label(config, case),
        identity_error: scattering::max_identity_error(&samples),
        t_duality_gap: samples.t_duality_gap(),
        r_duality_gap: samples.r_duality_gap(),
        l_duality_gap: samples.l_duality_gap(),
        segments: segments
            .iter()
            .map(|(c, ts)| SegmentReport {
                imag_offset: *c,
                duality_gap: ts.duality_gap(),
                near_pole_points: ts.near_pole.iter().filter(|p| **p).count(),
                oracle_error: match &oracle {
                    Some(o) => Entry::Done(reference::transmission_error(o, ts)),
                    None => Entry::Skipped,
                },
            })
            .collect(),
    };

    let fredholm = if val.fredholm {
        Entry::Done(FredholmReport {
            rho_phi: max_of(scattering::fredholm_residual_rho(&samples, &conv, FredholmForm::Phi)),
            rho_psi: max_of(scattering::fredholm_residual_rho(&samples, &conv, FredholmForm::Psi)),
            ell_phi: max_of(scattering::fredholm_residual_ell(&samples, &conv, FredholmForm::Phi)),
            ell_psi: max_of(scattering::fredholm_residual_ell(&samples, &conv, FredholmForm::Psi)),
        })
    } else {
        Entry::Skipped
    };
    let round_trip = if val.round_trip {
        Entry::Done(scattering::round_trip_error(&samples, 2.0 * l2))
    } else {
        Entry::Skipped
    };
    clock.lap("fourier_checks");

    // the two R (and L) routes differ by about the discretization error
    let po = &PencilOptions {
        noise_floor: config
            .pencil
            .noise_floor
            .max(samples.r_duality_gap())
            .max(samples.l_duality_gap()),
        ..config.pencil
    };
    let sl = stage("pencil", pencil::spectral_sums(&omega_left, &samples.rho, po))?;
    let sr = stage("pencil", pencil::spectral_sums(&omega_right, &samples.ell, po))?;
    let (idl, idr) = rayon::join(|| pencil::identify(&sl, po), || pencil::identify(&sr, po));
    let (left_id, right_id) = (stage("pencil", idl)?, stage("pencil", idr)?);
    let spectral = stage("pencil", pencil::combine(&left_id, &sr))?;
    if let Some(dir) = &out {
        stage("output", spectral.write_json(&dir.join("spectral_data.json")))?;
    }
    let spectral_report = SpectralReport {
        data: spectral.to_json(),
        noise_floor: po.noise_floor,
        left: SideSummary::from(&left_id),
        right: SideSummary::from(&right_id),
        right_states: right_id
            .states
            .iter()
            .map(|s| [s.lambda.re, s.lambda.im])
            .collect(),
        re_lambda_agreement: match_re_lambda(&left_id, &right_id),
        omega_minus_rho: max_diff(&omega_left.values, &samples.rho),
        omega_minus_ell: max_diff(&omega_right.values, &samples.ell),
    };
    clock.lap("pencil");

    let oracle_report = match &oracle {
        Some(o) => {
            let kernels_err: BTreeMap<String, f64> = Which::ALL
                .iter()
                .map(|w| (w.name().to_string(), reference::kernel_error(o, kernels.field(*w))))
                .collect();
            let one = spectral.bound_states.len() == 1;
            let bs = o.bound_state();
            Entry::Done(OracleReport {
                kernels_max: kernels_err.values().cloned().fold(0.0, f64::max),
                kernels: kernels_err,
                omega_left: reference::omega_error(o, &omega_left),
                omega_right: reference::omega_error(o, &omega_right),
                smatrix: stage("oracle", reference::smatrix_error(o, &samples))?,
                lambda: one.then(|| (spectral.bound_states[0].lambda - bs).norm() / bs.norm()),
                gamma_left: one.then(|| {
                    (spectral.gamma_left[0][0] - o.gamma_left()).norm() / o.gamma_left().norm()
                }),
                gamma_right: one.then(|| {
                    (spectral.gamma_right[0][0] - o.gamma_right()).norm() / o.gamma_right().norm()
                }),
            })
        }
        None => Entry::Skipped,
    };
    let gaussian = match &config.potential {
        PotentialSpec::Gaussian { q0, sigma, .. } => Entry::Done(GaussianReport {
            expected_count: match reference::gaussian_bound_count_for(*q0, *sigma, case) {
                Ok(c) => Entry::Done(c),
                Err(_) => Entry::Skipped,
            },
            found_count: spectral.num(),
        }),
        _ => Entry::Skipped,
    };
    clock.lap("oracle");

    let report = RunReport {
        mesh_n: n,
        half_width: mesh.half_width,
        case,
        truncation: grid.truncation(),
        volterra: volterra_report,
        marchenko: marchenko_report,
        scattering: scattering_report,
        fredholm,
        round_trip,
        spectral: spectral_report,
        oracle: oracle_report,
        gaussian,
        timings: clock.timings,
    };
    if let Some(dir) = &out {
        let s = stage("output", serde_json::to_string_pretty(&report).map_err(Error::from))?;
        stage("output", std::fs::write(dir.join("report.json"), s + "\n").map_err(Error::from))?;
    }
    Ok(RunOutput {
        report,
        grid,
        kernels,
        omega_left,
        omega_right,
        convolution: conv,
        scattering: samples,
        segments,
        spectral,
        left_id,
        right_id,
    })
}

fn max_of(v: Vec<f64>) -> f64 {
    v.into_iter().fold(0.0, f64::max)
}

/// One tolerance check of `validate`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tol,
            pass: value <= tol,
        }
    }

    fn equals(name: &str, value: usize, want: usize) -> Self {
        Self {
            name: name.into(),
            value: value as f64,
            tol: want as f64,
            pass: value == want,
        }
    }
}

/// `max(floor, c (500/n)^order)`: tolerances measured at the desk-scale mesh
/// `n = 500` and scaled by the observed convergence order, never tighter than
/// the fine-mesh target.
pub fn scaled_tol(c500: f64, order: i32, floor: f64, n: usize) -> f64 {
    (c500 * (500.0 / n as f64).powi(order)).max(floor)
}

/// Tolerance checks for a finished run of a built-in case.
pub fn checks(config: &RunConfig, report: &RunReport) -> Vec<Check> {
    let n = report.mesh_n;
    let mut out = Vec::new();
    let e_tol = scaled_tol(1e-3, 4, 1e-5, n);
    match &config.potential {
        PotentialSpec::Soliton { .. } => {
            if let Some(o) = report.oracle.done() {
                out.push(Check::at_most("kernels", o.kernels_max, scaled_tol(1e-4, 3, 5e-6, n)));
                out.push(Check::at_most("omega_left", o.omega_left, scaled_tol(1e-3, 4, 1e-5, n)));
                out.push(Check::at_most("omega_right", o.omega_right, scaled_tol(1e-3, 4, 1e-5, n)));
                out.push(Check::at_most("smatrix", o.smatrix, e_tol));
                out.push(Check::equals("bound_states", report.spectral.left.count, 1));
                if let (Some(l), Some(gl), Some(gr)) = (o.lambda, o.gamma_left, o.gamma_right) {
                    out.push(Check::at_most("lambda", l, scaled_tol(1e-4, 4, 1e-6, n)));
                    let gt = scaled_tol(1e-3, 4, 1e-5, n);
                    out.push(Check::at_most("gamma_left", gl, gt));
                    out.push(Check::at_most("gamma_right", gr, gt));
                }
            }
            for s in &report.scattering.segments {
                if let Some(e) = s.oracle_error.done() {
                    out.push(Check::at_most(&format!("t_segment_{}", s.imag_offset), *e, e_tol));
                }
            }
            out.push(Check::at_most("E_s", report.scattering.identity_error, e_tol));
        }
        PotentialSpec::Gaussian { .. } => {
            if let Some(g) = report.gaussian.done() {
                if let Some(want) = g.expected_count.done() {
                    out.push(Check::equals("bound_states", g.found_count, *want));
                }
            }
            out.push(Check::at_most(
                &report.scattering.identity_label,
                report.scattering.identity_error,
                e_tol,
            ));
            if report.case == Case::Defocusing {
                let t = scaled_tol(1e-6, 4, 1e-8, n);
                out.push(Check::at_most("omega_minus_rho", report.spectral.omega_minus_rho, t));
                out.push(Check::at_most("omega_minus_ell", report.spectral.omega_minus_ell, t));
                if let Some(f) = report.fredholm.done() {
                    let t = scaled_tol(1e-5, 4, 1e-6, n);
                    let worst = f.rho_phi.max(f.rho_psi).max(f.ell_phi).max(f.ell_psi);
                    out.push(Check::at_most("fredholm", worst, t));
                }
            }
        }
        PotentialSpec::Zero => {
            out.push(Check::at_most("E", report.scattering.identity_error, 1e-14));
            out.push(Check::equals("bound_states", report.spectral.left.count, 0));
        }
        PotentialSpec::File { .. } => {
            out.push(Check::at_most(
                &report.scattering.identity_label,
                report.scattering.identity_error,
                e_tol,
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(potential: PotentialSpec, case: Option<Case>) -> RunConfig {
        RunConfig {
            potential,
            half_width: 4.0,
            mesh_n: 60,
            case,
            ..Default::default()
        }
    }

    #[test]
    fn config_round_trips_through_toml() {
        let c = RunConfig {
            potential: PotentialSpec::Gaussian {
                q0: 1.9,
                mu: 1.0,
                sigma: 2.0,
            },
            case: Some(Case::Defocusing),
            ..Default::default()
        };
        let s = c.to_toml_string().unwrap();
        assert_eq!(RunConfig::from_toml_str(&s).unwrap(), c);
    }

    #[test]
    fn config_text_format() {
        let c = RunConfig::from_toml_str(
            r#"
            L = 6.0
            mesh_n = 120
            case = "defocusing"
            [potential]
            kind = "gaussian"
            q0 = 1.9
            mu = 1.0
            sigma = 2.0
            [pencil]
            m_over = 4
            "#,
        )
        .unwrap();
        assert_eq!(c.half_width, 6.0);
        assert_eq!(c.pencil.m_over, 4);
        assert_eq!(c.pencil.rank_gap, 1e-6);
        assert!(RunConfig::from_toml_str("bogus = 1").is_err());
        assert!(RunConfig::from_toml_str("[potential]\nkind = \"nope\"").is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = small(PotentialSpec::Zero, None);
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        c.case = Some(Case::Focusing);
        assert!(c.validate().is_ok());
        c.mesh_n = 0;
        assert!(c.validate().is_err());
        let c = small(PotentialSpec::default(), Some(Case::Defocusing));
        assert!(c.validate().is_err());
        let c = small(
            PotentialSpec::File {
                path: "/nonexistent/samples.txt".into(),
            },
            Some(Case::Focusing),
        );
        assert!(c.validate().is_err());
    }

    #[test]
    fn zero_potential_run() {
        let c = small(PotentialSpec::Zero, Some(Case::Defocusing));
        let out = run(&c).unwrap();
        assert!(out.scattering.t.iter().all(|t| *t == C::new(1.0, 0.0)));
        assert!(out.omega_left.values.iter().all(|z| z.norm() == 0.0));
        assert_eq!(out.spectral.num(), 0);
        assert!(checks(&c, &out.report).iter().all(|k| k.pass));
    }

    #[test]
    fn stage_errors_are_tagged() {
        let mut c = small(PotentialSpec::default(), None);
        c.lambda_grid.points = Some(5);
        match run(&c) {
            Err(Error::Stage { stage, source }) => {
                assert_eq!(stage, "scattering");
                assert!(matches!(*source, Error::LambdaGrid(_)));
            }
            other => panic!("unexpected {:?}", other.err()),
        }
    }

    #[test]
    fn report_marks_skipped_entries() {
        let mut c = small(PotentialSpec::Zero, Some(Case::Focusing));
        c.validation.fredholm = false;
        c.validation.round_trip = false;
        let out = run(&c).unwrap();
        let v = serde_json::to_value(&out.report).unwrap();
        assert_eq!(v["fredholm"], "skipped");
        assert_eq!(v["round_trip"], "skipped");
        assert_eq!(v["oracle"], "skipped");
        assert_eq!(v["volterra"]["symmetry_deviation"], "skipped");
        assert!(v["volterra"]["residuals"].is_object());
    }

    #[test]
    fn scaled_tolerances() {
        assert_eq!(scaled_tol(1e-4, 3, 5e-6, 500), 1e-4);
        assert!((scaled_tol(1e-4, 3, 5e-6, 250) - 8e-4).abs() < 1e-16);
        assert_eq!(scaled_tol(1e-4, 3, 5e-6, 3000), 5e-6);
    }
}
