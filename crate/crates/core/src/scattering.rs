//! Convolution kernels, transition coefficients, the scattering matrix and
//! the Fourier pair `(ρ, ℓ)`, plus the algebraic and Fredholm validators.
//!
//! Every kernel is sampled at `z = 2hj`, the Marchenko step, so the Fourier
//! integrals over `z` are composite Simpson on `2n` intervals and `ρ`, `ℓ`
//! land exactly on the Marchenko grids.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{Case, Mesh, PotentialGrid};
use crate::quadrature::{integrate, simpson_weight};
use crate::volterra::{KernelField, KernelSet, Which};

type C = Complex64;
const ZERO: C = C::new(0.0, 0.0);
const I: C = C::new(0.0, 1.0);

/// Below this modulus an `a` coefficient is treated as a pole of `T`.
pub const POLE_TOL: f64 = 1e-13;

/// The eight `Φ`/`Ψ` kernels.
///
/// `phi_up`, `phi_bar_dn`, `psi_dn`, `psi_bar_up` live on `z = 2hj`,
/// `j = 0..=2n` (support `[0, 4L]`); `phi_bar_up`, `phi_dn`, `psi_up`,
/// `psi_bar_dn` on `z = 2hm`, `m = -n..=n` (support `[-2L, 2L]`), stored at
/// index `m + n`. `half_u`, `half_v` hold `u(z/2)/2`, `v(z/2)/2` on that
/// second grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionKernels {
    pub mesh: Mesh,
    pub phi_up: Vec<C>,
    pub phi_bar_dn: Vec<C>,
    pub psi_dn: Vec<C>,
    pub psi_bar_up: Vec<C>,
    pub phi_bar_up: Vec<C>,
    pub phi_dn: Vec<C>,
    pub psi_up: Vec<C>,
    pub psi_bar_dn: Vec<C>,
    pub half_u: Vec<C>,
    pub half_v: Vec<C>,
    /// Largest of `|u(±L)|` and the recorded truncation of the grid. A jump
    /// of this size at the support edge keeps `R`, `L` from decaying below it.
    pub edge_level: f64,
}

impl ConvolutionKernels {
    pub fn step(&self) -> f64 {
        2.0 * self.mesh.step
    }
}

fn canonical_weight(grid: &PotentialGrid, field: &KernelField, use_u: bool) -> Vec<C> {
    let n = grid.mesh().n();
    (0..=2 * n)
        .map(|q| {
            let p = if field.which().is_m_family() { n - q } else { q - n };
            if use_u {
                grid.u(p)
            } else {
                grid.v(p)
            }
        })
        .collect()
}

/// `∫ g(y) F(y, y ± z) dy` along each parallel, integrated from the support
/// edge.
fn parallel_integrals(field: &KernelField, g: &[C], h: f64) -> Vec<C> {
    (0..field.line_count())
        .map(|j| {
            let line = field.line(j);
            let s: Vec<C> = line.iter().zip(g).map(|(f, w)| f * w).collect();
            integrate(&s, h)
        })
        .collect()
}

/// `∫ g(y) F(y, z - y) dy` from the support edge to the bisector, one value
/// per anti-diagonal, in storage orientation.
fn antidiagonal_integrals(field: &KernelField, g: &[C], h: f64) -> Vec<C> {
    let width = field.line_count();
    let mut out: Vec<C> = (0..width)
        .map(|m| {
            let s: Vec<C> = (0..=m).map(|q| g[q] * field.line(m - q)[q]).collect();
            integrate(&s, h)
        })
        .collect();
    if field.which().is_m_family() {
        out.reverse();
    }
    out
}

/// Builds all eight convolution kernels from the solved auxiliary kernels.
pub fn build_convolution_kernels(
    set: &KernelSet,
    grid: &PotentialGrid,
) -> Result<ConvolutionKernels> {
    let mesh = grid.mesh();
    if !set.mesh().same_geometry(&mesh) {
        return Err(Error::MeshMismatch(
            "kernel set and potential grid differ".into(),
        ));
    }
    let h = mesh.step;
    let par = |w: Which, use_u: bool| {
        let f = set.field(w);
        parallel_integrals(f, &canonical_weight(grid, f, use_u), h)
    };
    let anti = |w: Which, use_u: bool| {
        let f = set.field(w);
        antidiagonal_integrals(f, &canonical_weight(grid, f, use_u), h)
    };
    let n = mesh.n();
    Ok(ConvolutionKernels {
        mesh,
        phi_up: par(Which::KUp, false),
        phi_bar_dn: par(Which::KbarDn, true),
        psi_dn: par(Which::MDn, true),
        psi_bar_up: par(Which::MbarUp, false),
        phi_bar_up: anti(Which::KbarUp, false),
        phi_dn: anti(Which::KDn, true),
        psi_up: anti(Which::MUp, false),
        psi_bar_dn: anti(Which::MbarDn, true),
        half_u: (-n..=n).map(|p| grid.u(p) * 0.5).collect(),
        half_v: (-n..=n).map(|p| grid.v(p) * 0.5).collect(),
        edge_level: grid
            .u(-n)
            .norm()
            .max(grid.u(n).norm())
            .max(grid.truncation().unwrap_or(0.0)),
    })
}

/// `dz Σ w_j f_j e^{s i λ (z0 + j dz)}` with composite Simpson weights, for
/// two sample vectors sharing the exponential.
fn fourier2(a: &[C], b: &[C], z0: f64, dz: f64, lambda: C, sign: f64) -> (C, C) {
    let m = a.len() - 1;
    let k = I * lambda * sign;
    let step = (k * dz).exp();
    let mut e = (k * z0).exp();
    let (mut sa, mut sb) = (ZERO, ZERO);
    for j in 0..=m {
        if j % 64 == 0 && j > 0 {
            e = (k * (z0 + j as f64 * dz)).exp();
        }
        let w = simpson_weight(j, m);
        sa += a[j] * e * w;
        sb += b[j] * e * w;
        e *= step;
    }
    (sa * dz, sb * dz)
}

/// The eight transition coefficients at one `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub left: [C; 4],
    pub right: [C; 4],
}

/// All of `a_ℓ1..4`, `a_r1..4` at `λ`.
pub fn transition(conv: &ConvolutionKernels, lambda: C) -> Transition {
    let dz = conv.step();
    let l2 = -2.0 * conv.mesh.half_width;
    let plus_u: Vec<C> = conv.half_u.iter().zip(&conv.phi_dn).map(|(a, b)| a + b).collect();
    let plus_u_r: Vec<C> = conv.half_u.iter().zip(&conv.psi_bar_dn).map(|(a, b)| a + b).collect();
    let plus_v: Vec<C> = conv.half_v.iter().zip(&conv.phi_bar_up).map(|(a, b)| a + b).collect();
    let plus_v_r: Vec<C> = conv.half_v.iter().zip(&conv.psi_up).map(|(a, b)| a + b).collect();
    let (f_l4, f_r1) = fourier2(&conv.phi_up, &conv.psi_dn, 0.0, dz, lambda, 1.0);
    let (f_l1, f_r4) = fourier2(&conv.phi_bar_dn, &conv.psi_bar_up, 0.0, dz, lambda, -1.0);
    let (f_l2, f_r2) = fourier2(&plus_u, &plus_u_r, l2, dz, lambda, 1.0);
    let (f_l3, f_r3) = fourier2(&plus_v, &plus_v_r, l2, dz, lambda, -1.0);
    let one = C::new(1.0, 0.0);
    Transition {
        left: [one - f_l1, -f_l2, f_l3, one + f_l4],
        right: [one + f_r1, f_r2, -f_r3, one - f_r4],
    }
}

/// `T` through both representations on arbitrary (complex) `λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionSamples {
    pub lambda: Vec<C>,
    /// `1 / a_ℓ4`.
    pub t_left: Vec<C>,
    /// `1 / a_r1`.
    pub t_right: Vec<C>,
    /// Points where `|a_ℓ4|` or `|a_r1|` fell below [`POLE_TOL`]; their `T`
    /// values are set to zero and excluded from every error maximum.
    pub near_pole: Vec<bool>,
}

impl TransmissionSamples {
    /// `max |T_ℓ - T_r| / max |T_ℓ|` over regular points.
    pub fn duality_gap(&self) -> f64 {
        relative_gap(&self.t_left, &self.t_right, &self.near_pole)
    }
}

fn relative_gap(a: &[C], b: &[C], skip: &[bool]) -> f64 {
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for ((x, y), s) in a.iter().zip(b).zip(skip) {
        if *s {
            continue;
        }
        num = num.max((x - y).norm());
        den = den.max(x.norm());
    }
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

pub fn transmission(conv: &ConvolutionKernels, lambda: &[C]) -> TransmissionSamples {
    let dz = conv.step();
    let vals: Vec<(C, C, bool)> = lambda
        .par_iter()
        .map(|&l| {
            let (f4, f1) = fourier2(&conv.phi_up, &conv.psi_dn, 0.0, dz, l, 1.0);
            let a4 = 1.0 + f4;
            let a1 = 1.0 + f1;
            if a4.norm() < POLE_TOL || a1.norm() < POLE_TOL {
                (ZERO, ZERO, true)
            } else {
                (1.0 / a4, 1.0 / a1, false)
            }
        })
        .collect();
    TransmissionSamples {
        lambda: lambda.to_vec(),
        t_left: vals.iter().map(|v| v.0).collect(),
        t_right: vals.iter().map(|v| v.1).collect(),
        near_pole: vals.iter().map(|v| v.2).collect(),
    }
}

/// `points` equispaced values on the segment `[a, b]` of the complex plane.
pub fn segment(a: C, b: C, points: usize) -> Vec<C> {
    let m = points.max(2) - 1;
    (0..=m).map(|j| a + (b - a) * (j as f64 / m as f64)).collect()
}

/// Real `λ`-grid policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LambdaGridSpec {
    /// Half-width of the symmetric grid; `2L` when absent.
    pub half_range: Option<f64>,
    /// Number of points (odd); `4n + 1` when absent.
    pub points: Option<usize>,
    /// Largest `|R|`, `|L|` tolerated at the ends of the grid.
    pub tail_tol: f64,
    /// How many times the range may be doubled to meet `tail_tol`.
    pub max_doublings: usize,
}

impl Default for LambdaGridSpec {
    fn default() -> Self {
        Self {
            half_range: None,
            points: None,
            tail_tol: 1e-8,
            max_doublings: 3,
        }
    }
}

/// Everything computed on the real `λ`-grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringSamples {
    pub case: Case,
    pub lambda_grid: Vec<f64>,
    /// `1/a_ℓ4`, `a_ℓ2/a_ℓ4`, `-a_ℓ3/a_ℓ4`.
    pub t: Vec<C>,
    pub l: Vec<C>,
    pub r: Vec<C>,
    /// `1/a_r1`, `-a_r2/a_r1`, `a_r3/a_r1`.
    pub t_dual: Vec<C>,
    pub l_dual: Vec<C>,
    pub r_dual: Vec<C>,
    pub a_left: [Vec<C>; 4],
    pub a_right: [Vec<C>; 4],
    pub near_pole: Vec<bool>,
    /// Step of the Marchenko grids, `2h`.
    pub alpha_step: f64,
    /// `ρ` at `α = 0, 2h, ..., 2L`.
    pub rho: Vec<C>,
    /// `ℓ` at `α = -2L, ..., -2h, 0`.
    pub ell: Vec<C>,
    /// Number of times the grid was widened.
    pub doublings: usize,
}

impl ScatteringSamples {
    pub fn lambda_step(&self) -> f64 {
        self.lambda_grid[1] - self.lambda_grid[0]
    }

    pub fn t_duality_gap(&self) -> f64 {
        relative_gap(&self.t, &self.t_dual, &self.near_pole)
    }

    pub fn r_duality_gap(&self) -> f64 {
        abs_gap(&self.r, &self.r_dual, &self.near_pole)
    }

    pub fn l_duality_gap(&self) -> f64 {
        abs_gap(&self.l, &self.l_dual, &self.near_pole)
    }

    /// `ρ(α)` at arbitrary real `α`.
    pub fn rho_at(&self, alphas: &[f64]) -> Vec<C> {
        fourier_on_grid(&self.lambda_grid, &self.r, alphas, 1.0)
    }

    /// `ℓ(α)` at arbitrary real `α`.
    pub fn ell_at(&self, alphas: &[f64]) -> Vec<C> {
        fourier_on_grid(&self.lambda_grid, &self.l, alphas, -1.0)
    }

    /// Writes `lambda,t_re,t_im,r_re,r_im,l_re,l_im,near_pole`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "lambda,t_re,t_im,r_re,r_im,l_re,l_im,near_pole")?;
        for j in 0..self.lambda_grid.len() {
            writeln!(
                w,
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}",
                self.lambda_grid[j],
                self.t[j].re,
                self.t[j].im,
                self.r[j].re,
                self.r[j].im,
                self.l[j].re,
                self.l[j].im,
                self.near_pole[j] as u8
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

fn abs_gap(a: &[C], b: &[C], skip: &[bool]) -> f64 {
    a.iter()
        .zip(b)
        .zip(skip)
        .filter(|(_, s)| !**s)
        .map(|((x, y), _)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `(1/2π) ∫ F(λ) e^{s iλα} dλ` by composite Simpson on a uniform grid.
fn fourier_on_grid(lambda: &[f64], f: &[C], alphas: &[f64], sign: f64) -> Vec<C> {
    let m = lambda.len() - 1;
    let dl = lambda[1] - lambda[0];
    let l0 = lambda[0];
    alphas
        .par_iter()
        .map(|&alpha| {
            let k = I * (sign * alpha);
            let step = (k * dl).exp();
            let mut e = (k * l0).exp();
            let mut acc = ZERO;
            for j in 0..=m {
                if j % 64 == 0 && j > 0 {
                    e = (k * lambda[j]).exp();
                }
                acc += f[j] * e * simpson_weight(j, m);
                e *= step;
            }
            acc * (dl / (2.0 * PI))
        })
        .collect()
}

fn build_lambda_grid(half_range: f64, points: usize) -> Vec<f64> {
    let m = points - 1;
    (0..=m)
        .map(|j| -half_range + 2.0 * half_range * j as f64 / m as f64)
        .collect()
}

/// `T`, `R`, `L` with both routes on a real grid.
struct RealSweep {
    t: Vec<C>,
    l: Vec<C>,
    r: Vec<C>,
    t_dual: Vec<C>,
    l_dual: Vec<C>,
    r_dual: Vec<C>,
    a_left: [Vec<C>; 4],
    a_right: [Vec<C>; 4],
    near_pole: Vec<bool>,
}

fn real_sweep(conv: &ConvolutionKernels, lambda: &[f64]) -> RealSweep {
    let tr: Vec<Transition> = lambda
        .par_iter()
        .map(|&l| transition(conv, C::new(l, 0.0)))
        .collect();
    let mut out = RealSweep {
        t: Vec::with_capacity(lambda.len()),
        l: Vec::with_capacity(lambda.len()),
        r: Vec::with_capacity(lambda.len()),
        t_dual: Vec::with_capacity(lambda.len()),
        l_dual: Vec::with_capacity(lambda.len()),
        r_dual: Vec::with_capacity(lambda.len()),
        a_left: Default::default(),
        a_right: Default::default(),
        near_pole: Vec::with_capacity(lambda.len()),
    };
    for a in &tr {
        for c in 0..4 {
            out.a_left[c].push(a.left[c]);
            out.a_right[c].push(a.right[c]);
        }
        let (al, ar) = (a.left, a.right);
        if al[3].norm() < POLE_TOL || ar[0].norm() < POLE_TOL {
            for v in [
                &mut out.t,
                &mut out.l,
                &mut out.r,
                &mut out.t_dual,
                &mut out.l_dual,
                &mut out.r_dual,
            ] {
                v.push(ZERO);
            }
            out.near_pole.push(true);
            continue;
        }
        out.t.push(1.0 / al[3]);
        out.l.push(al[1] / al[3]);
        out.r.push(-al[2] / al[3]);
        out.t_dual.push(1.0 / ar[0]);
        out.l_dual.push(-ar[1] / ar[0]);
        out.r_dual.push(ar[2] / ar[0]);
        out.near_pole.push(false);
    }
    out
}

/// Computes the scattering matrix on the real grid and the Fourier pair on
/// the Marchenko grids, widening the grid until the reflection coefficients
/// have decayed below `tail_tol`.
pub fn scatter(conv: &ConvolutionKernels, spec: &LambdaGridSpec) -> Result<ScatteringSamples> {
    let mesh = conv.mesh;
    let n = mesh.mesh_n;
    let mut half_range = spec.half_range.unwrap_or(2.0 * mesh.half_width);
    let alpha_max = 2.0 * mesh.half_width;
    if !(half_range > 0.0) {
        return Err(Error::LambdaGrid(format!("need a positive range, got {half_range}")));
    }
    let mut points = match spec.points {
        Some(p) => p,
        None => {
            // at least 4n + 1, refined on coarse meshes to pass the aliasing bound
            let need = (2.0 * half_range * 4.0 * alpha_max / PI).ceil() as usize;
            let need = need + need % 2 + 1;
            need.max(4 * n + 1)
        }
    };
    if points < 3 || points % 2 == 0 {
        return Err(Error::LambdaGrid(format!(
            "need an odd point count >= 3, got {points}"
        )));
    }
    let dl = 2.0 * half_range / (points - 1) as f64;
    if dl > PI / (4.0 * alpha_max) {
        return Err(Error::LambdaGrid(format!(
            "step {dl:.3e} too coarse to resolve e^(iλα) for |α| <= {alpha_max}; need <= {:.3e}",
            PI / (4.0 * alpha_max)
        )));
    }
    let mut doublings = 0;
    loop {
        let lambda = build_lambda_grid(half_range, points);
        let sweep = real_sweep(conv, &lambda);
        let ends = [0, points - 1];
        let tail = ends
            .iter()
            .map(|&j| sweep.r[j].norm().max(sweep.l[j].norm()))
            .fold(0.0, f64::max);
        // the two routes disagree by about the discretization error of R, L;
        // a tail at that level is noise, not unresolved signal
        let noise = ends
            .iter()
            .map(|&j| {
                (sweep.r[j] - sweep.r_dual[j])
                    .norm()
                    .max((sweep.l[j] - sweep.l_dual[j]).norm())
            })
            .fold(0.0, f64::max);
        let tol = spec.tail_tol.max(conv.edge_level).max(4.0 * noise);
        if tail > tol {
            // past π/(4h) the sampled transforms start to repeat
            let nyquist = PI / (4.0 * mesh.step);
            if doublings >= spec.max_doublings || 2.0 * half_range > nyquist {
                return Err(Error::LambdaGrid(format!(
                    "|R|, |L| = {tail:.3e} at λ = ±{half_range} exceeds the tail tolerance {tol:.1e} after {doublings} widenings; the potential is likely too rough"
                )));
            }
            half_range *= 2.0;
            points = 2 * (points - 1) + 1;
            doublings += 1;
            continue;
        }
        let step = conv.step();
        let mut samples = ScatteringSamples {
            case: mesh.case,
            lambda_grid: lambda,
            t: sweep.t,
            l: sweep.l,
            r: sweep.r,
            t_dual: sweep.t_dual,
            l_dual: sweep.l_dual,
            r_dual: sweep.r_dual,
            a_left: sweep.a_left,
            a_right: sweep.a_right,
            near_pole: sweep.near_pole,
            alpha_step: step,
            rho: Vec::new(),
            ell: Vec::new(),
            doublings,
        };
        let pos: Vec<f64> = (0..=n).map(|j| j as f64 * step).collect();
        let neg: Vec<f64> = (0..=n).map(|j| (j as f64 - n as f64) * step).collect();
        samples.rho = samples.rho_at(&pos);
        samples.ell = samples.ell_at(&neg);
        return Ok(samples);
    }
}

/// `ρ` and `ℓ` on the Marchenko grids from reflection samples on a uniform,
/// symmetric real grid.
pub fn fourier_pair(
    r: &[C],
    l: &[C],
    lambda_grid: &[f64],
    alpha_step: f64,
    nodes: usize,
) -> Result<(Vec<C>, Vec<C>)> {
    if lambda_grid.len() < 3 || lambda_grid.len() % 2 == 0 {
        return Err(Error::LambdaGrid("need an odd number (>= 3) of λ samples".into()));
    }
    if r.len() != lambda_grid.len() || l.len() != lambda_grid.len() {
        return Err(Error::LambdaGrid("sample and grid lengths differ".into()));
    }
    let pos: Vec<f64> = (0..=nodes).map(|j| j as f64 * alpha_step).collect();
    let neg: Vec<f64> = (0..=nodes).map(|j| (j as f64 - nodes as f64) * alpha_step).collect();
    Ok((
        fourier_on_grid(lambda_grid, r, &pos, 1.0),
        fourier_on_grid(lambda_grid, l, &neg, -1.0),
    ))
}

/// Spectral 2-norm of a Hermitian 2x2 matrix `[[a, b], [b*, d]]`.
fn hermitian_norm(a: f64, b: C, d: f64) -> f64 {
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    (mean + rad).abs().max((mean - rad).abs())
}

/// Spectral 2-norm of a general 2x2 complex matrix.
pub fn norm2(m: [[C; 2]; 2]) -> f64 {
    // M^† M
    let a = m[0][0].norm_sqr() + m[1][0].norm_sqr();
    let d = m[0][1].norm_sqr() + m[1][1].norm_sqr();
    let b = m[0][0].conj() * m[0][1] + m[1][0].conj() * m[1][1];
    hermitian_norm(a, b, d).sqrt()
}

/// `E(λ) = ‖½(S†XS + SXS†) - X‖₂` with `X = J` (focusing) or `I`
/// (defocusing), for `S = [[T, L], [R, T]]`.
pub fn smatrix_identity_error(t: &[C], r: &[C], l: &[C], case: Case) -> Vec<f64> {
    let x = match case {
        Case::Focusing => [1.0, -1.0],
        Case::Defocusing => [1.0, 1.0],
    };
    t.iter()
        .zip(r)
        .zip(l)
        .map(|((&t, &r), &l)| {
            let s = [[t, l], [r, t]];
            // (S† X S)_{ij} = Σ_k conj(S_ki) x_k S_kj ; (S X S†)_{ij} = Σ_k S_ik x_k conj(S_jk)
            let mut h = [[ZERO; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    let mut v = ZERO;
                    for k in 0..2 {
                        v += s[k][i].conj() * s[k][j] * x[k];
                        v += s[i][k] * s[j][k].conj() * x[k];
                    }
                    h[i][j] = v * 0.5;
                }
            }
            hermitian_norm(h[0][0].re - x[0], h[0][1], h[1][1].re - x[1])
        })
        .collect()
}

/// `max_j E(λ_j)` over regular points.
pub fn max_identity_error(samples: &ScatteringSamples) -> f64 {
    smatrix_identity_error(&samples.t, &samples.r, &samples.l, samples.case)
        .iter()
        .zip(&samples.near_pole)
        .filter(|(_, p)| !**p)
        .map(|(e, _)| *e)
        .fold(0.0, f64::max)
}

/// Which kernel pair enters a Fredholm identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FredholmForm {
    /// `Φup` with `Φ̄up` (for `ρ`) or `Φdn` (for `ℓ`).
    Phi,
    /// `Ψdn` with `Ψup` (for `ρ`) or `Ψ̄dn` (for `ℓ`).
    Psi,
}

/// Residual of `ρ(α) + ∫_0^∞ Φup(z) ρ(z+α) dz = -v(α/2)/2 - Φ̄up(α)` (or its
/// `Ψ` form) at `α = 0, 2h, ..., 2L`.
pub fn fredholm_residual_rho(
    samples: &ScatteringSamples,
    conv: &ConvolutionKernels,
    form: FredholmForm,
) -> Vec<f64> {
    let n = conv.mesh.mesh_n;
    let step = conv.step();
    let alphas: Vec<f64> = (0..=3 * n).map(|j| j as f64 * step).collect();
    let rho = samples.rho_at(&alphas);
    let (kern, rhs) = match form {
        FredholmForm::Phi => (&conv.phi_up, &conv.phi_bar_up),
        FredholmForm::Psi => (&conv.psi_dn, &conv.psi_up),
    };
    (0..=n)
        .map(|j| {
            let mut acc = ZERO;
            for i in 0..=2 * n {
                acc += kern[i] * rho[i + j] * simpson_weight(i, 2 * n);
            }
            (rho[j] + acc * step + conv.half_v[j + n] + rhs[j + n]).norm()
        })
        .collect()
}

/// Residual of `ℓ(α) + ∫_0^∞ Φup(z) ℓ(α-z) dz = -u(α/2)/2 - Φdn(α)` (or its
/// `Ψ` form) at `α = 0, -2h, ..., -2L`, listed from `α = -2L`.
pub fn fredholm_residual_ell(
    samples: &ScatteringSamples,
    conv: &ConvolutionKernels,
    form: FredholmForm,
) -> Vec<f64> {
    let n = conv.mesh.mesh_n;
    let step = conv.step();
    // ell[d] at α = -d·2h
    let alphas: Vec<f64> = (0..=3 * n).map(|d| -(d as f64) * step).collect();
    let ell = samples.ell_at(&alphas);
    let (kern, rhs) = match form {
        FredholmForm::Phi => (&conv.phi_up, &conv.phi_dn),
        FredholmForm::Psi => (&conv.psi_dn, &conv.psi_bar_dn),
    };
    (0..=n)
        .rev()
        .map(|d| {
            let mut acc = ZERO;
            for i in 0..=2 * n {
                acc += kern[i] * ell[d + i] * simpson_weight(i, 2 * n);
            }
            (ell[d] + acc * step + conv.half_u[n - d] + rhs[n - d]).norm()
        })
        .collect()
}

/// Forward transform of `ρ` sampled on `[-A, A]` compared with `R` on the
/// grid: `max |∫ ρ(α) e^{-iλα} dα - R(λ)|`.
pub fn round_trip_error(samples: &ScatteringSamples, half_range: f64) -> f64 {
    let step = samples.alpha_step;
    let jmax = (half_range / step).ceil() as i64;
    let alphas: Vec<f64> = (-jmax..=jmax).map(|j| j as f64 * step).collect();
    let rho = samples.rho_at(&alphas);
    let m = alphas.len() - 1;
    samples
        .lambda_grid
        .par_iter()
        .zip(samples.r.par_iter())
        .zip(samples.near_pole.par_iter())
        .map(|((&l, &r), &pole)| {
            if pole {
                return 0.0;
            }
            let k = C::new(0.0, -l);
            let de = (k * step).exp();
            let mut e = (k * alphas[0]).exp();
            let mut acc = ZERO;
            for j in 0..=m {
                if j % 64 == 0 && j > 0 {
                    e = (k * alphas[j]).exp();
                }
                acc += rho[j] * e * simpson_weight(j, m);
                e *= de;
            }
            (acc * step - r).norm()
        })
        .reduce(|| 0.0, f64::max)
}
