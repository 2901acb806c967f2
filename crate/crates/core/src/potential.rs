//! Initial potentials sampled on a uniform grid over `[-L, L]`.
//!
//! The grid stores `u0` and the companion `v0`, which is tied to `u0` by the
//! sign of the nonlinearity: `v0 = conj(u0)` when focusing and
//! `v0 = -conj(u0)` when defocusing. Samples are indexed by the signed mesh
//! index `p` with `x_p = p h`; any index beyond `±mesh_n` reads as zero, which
//! is the compact-support convention every solver downstream relies on.

use std::fmt;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sign of the cubic term in the NLS equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    Focusing,
    Defocusing,
}

impl Case {
    /// `v0` as a function of `u0` at one point.
    #[inline]
    pub fn companion(self, u: Complex64) -> Complex64 {
        match self {
            Case::Focusing => u.conj(),
            Case::Defocusing => -u.conj(),
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Case::Focusing => f.write_str("focusing"),
            Case::Defocusing => f.write_str("defocusing"),
        }
    }
}

impl std::str::FromStr for Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "focusing" => Ok(Case::Focusing),
            "defocusing" => Ok(Case::Defocusing),
            other => Err(Error::Config(format!("unknown case `{other}`"))),
        }
    }
}

/// Geometry shared by every object computed from one grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub half_width: f64,
    pub mesh_n: usize,
    pub step: f64,
    pub case: Case,
}

impl Mesh {
    pub fn n(&self) -> i64 {
        self.mesh_n as i64
    }

    pub fn x(&self, p: i64) -> f64 {
        p as f64 * self.step
    }

    pub fn same_geometry(&self, other: &Mesh) -> bool {
        self.mesh_n == other.mesh_n && self.step == other.step && self.half_width == other.half_width
    }
}

/// Uniform samples of `u0` and `v0` on `x_p = p h`, `p = -mesh_n..=mesh_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialGrid {
    mesh: Mesh,
    u: Vec<Complex64>,
    v: Vec<Complex64>,
    /// Largest `|u0(x)|` discarded by clipping at `|x| > L`, when known.
    truncation: Option<f64>,
}

impl PotentialGrid {
    /// Builds a grid from `2 mesh_n + 1` samples of `u0` at `x = -L, ..., L`.
    pub fn from_samples(u: Vec<Complex64>, half_width: f64, case: Case) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidPotential(format!(
                "half width must be positive and finite, got {half_width}"
            )));
        }
        if u.len() < 3 || u.len() % 2 == 0 {
            return Err(Error::InvalidPotential(format!(
                "need an odd number (>= 3) of samples, got {}",
                u.len()
            )));
        }
        if let Some(i) = u.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidPotential(format!("sample {i} is not finite")));
        }
        let mesh_n = (u.len() - 1) / 2;
        let v = u.iter().map(|&z| case.companion(z)).collect();
        Ok(Self {
            mesh: Mesh {
                half_width,
                mesh_n,
                step: half_width / mesh_n as f64,
                case,
            },
            u,
            v,
            truncation: None,
        })
    }

    fn sample_fn(
        half_width: f64,
        mesh_n: usize,
        case: Case,
        f: impl Fn(f64) -> Complex64,
    ) -> Result<Self> {
        if mesh_n == 0 {
            return Err(Error::InvalidPotential("mesh_n must be positive".into()));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidPotential(format!(
                "half width must be positive and finite, got {half_width}"
            )));
        }
        let h = half_width / mesh_n as f64;
        let n = mesh_n as i64;
        let u = (-n..=n).map(|p| f(p as f64 * h)).collect();
        Self::from_samples(u, half_width, case)
    }

    /// One-soliton potential `2 i eta exp(i(2 xi x + phi)) sech(x0 - 2 eta x)`,
    /// focusing case.
    pub fn soliton(
        xi: f64,
        eta: f64,
        x0: f64,
        phi: f64,
        half_width: f64,
        mesh_n: usize,
    ) -> Result<Self> {
        if eta == 0.0 || !eta.is_finite() {
            return Err(Error::InvalidPotential("soliton needs a nonzero eta".into()));
        }
        let mut grid = Self::sample_fn(half_width, mesh_n, Case::Focusing, |x| {
            soliton_value(xi, eta, x0, phi, x)
        })?;
        let peak = x0 / (2.0 * eta);
        let clipped = if peak.abs() > half_width {
            2.0 * eta.abs()
        } else {
            soliton_value(xi, eta, x0, phi, half_width)
                .norm()
                .max(soliton_value(xi, eta, x0, phi, -half_width).norm())
        };
        grid.truncation = Some(clipped);
        Ok(grid)
    }

    /// Gaussian potential `q0 exp(i mu x) exp(-x^2 / sigma)`.
    pub fn gaussian(
        q0: f64,
        mu: f64,
        sigma: f64,
        case: Case,
        half_width: f64,
        mesh_n: usize,
    ) -> Result<Self> {
        if !(q0 > 0.0) || !(sigma > 0.0) {
            return Err(Error::InvalidPotential(format!(
                "Gaussian needs q0 > 0 and sigma > 0, got q0={q0}, sigma={sigma}"
            )));
        }
        let mut grid = Self::sample_fn(half_width, mesh_n, case, |x| {
            gaussian_value(q0, mu, sigma, x)
        })?;
        grid.truncation = Some(q0 * (-half_width * half_width / sigma).exp());
        Ok(grid)
    }

    pub fn zero(half_width: f64, mesh_n: usize, case: Case) -> Result<Self> {
        let mut grid = Self::sample_fn(half_width, mesh_n, case, |_| Complex64::new(0.0, 0.0))?;
        grid.truncation = Some(0.0);
        Ok(grid)
    }

    /// Reads a whitespace-separated `x re(u) im(u)` file on a strictly uniform,
    /// symmetric grid `x = -L, ..., L`.
    pub fn from_file(path: &Path, case: Case) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut xs = Vec::new();
        let mut u = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: String| Error::SampleFile {
                path: path.to_path_buf(),
                line: lineno + 1,
                msg,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(bad(format!("expected `x re im`, found {} fields", fields.len())));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| bad(format!("cannot parse `{s}`: {e}")))
            };
            xs.push(parse(fields[0])?);
            u.push(Complex64::new(parse(fields[1])?, parse(fields[2])?));
        }
        let file_err = |msg: String| Error::SampleFile {
            path: path.to_path_buf(),
            line: 0,
            msg,
        };
        if xs.len() < 3 || xs.len() % 2 == 0 {
            return Err(file_err(format!(
                "need an odd number (>= 3) of samples, got {}",
                xs.len()
            )));
        }
        let half_width = xs[xs.len() - 1];
        let h = 2.0 * half_width / (xs.len() - 1) as f64;
        if !(h > 0.0) {
            return Err(file_err("abscissae must increase".into()));
        }
        let tol = 1e-9 * half_width.abs().max(1.0);
        if (xs[0] + half_width).abs() > tol {
            return Err(file_err(format!(
                "grid must be symmetric: first x = {}, last x = {}",
                xs[0], half_width
            )));
        }
        for (i, &x) in xs.iter().enumerate() {
            let expected = -half_width + i as f64 * h;
            if (x - expected).abs() > tol {
                return Err(Error::SampleFile {
                    path: path.to_path_buf(),
                    line: i + 1,
                    msg: format!("non-uniform grid: x = {x}, expected {expected}"),
                });
            }
        }
        Self::from_samples(u, half_width, case)
    }

    pub fn mesh(&self) -> Mesh {
        self.mesh
    }

    pub fn case(&self) -> Case {
        self.mesh.case
    }

    pub fn mesh_n(&self) -> usize {
        self.mesh.mesh_n
    }

    pub fn step(&self) -> f64 {
        self.mesh.step
    }

    pub fn half_width(&self) -> f64 {
        self.mesh.half_width
    }

    pub fn truncation(&self) -> Option<f64> {
        self.truncation
    }

    /// `u0(x_p)`, zero outside the support.
    #[inline]
    pub fn u(&self, p: i64) -> Complex64 {
        let q = p + self.mesh.n();
        if q < 0 || q as usize >= self.u.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.u[q as usize]
        }
    }

    /// `v0(x_p)`, zero outside the support.
    #[inline]
    pub fn v(&self, p: i64) -> Complex64 {
        let q = p + self.mesh.n();
        if q < 0 || q as usize >= self.v.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.v[q as usize]
        }
    }

    pub fn u_samples(&self) -> &[Complex64] {
        &self.u
    }

    pub fn v_samples(&self) -> &[Complex64] {
        &self.v
    }

    /// True when `u0(-x) = u0(x)` on every node.
    pub fn is_even(&self) -> bool {
        let n = self.mesh.n();
        (0..=n).all(|p| self.u(p) == self.u(-p))
    }
}

pub fn soliton_value(xi: f64, eta: f64, x0: f64, phi: f64, x: f64) -> Complex64 {
    let phase = Complex64::new(0.0, 2.0 * xi * x + phi).exp();
    Complex64::new(0.0, 2.0 * eta) * phase / (x0 - 2.0 * eta * x).cosh()
}

pub fn gaussian_value(q0: f64, mu: f64, sigma: f64, x: f64) -> Complex64 {
    Complex64::new(0.0, mu * x).exp() * (q0 * (-x * x / sigma).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn companion_relation_holds_bitwise() {
        let g = PotentialGrid::gaussian(1.9, 1.0, 2.0, Case::Defocusing, 8.0, 40).unwrap();
        for p in -40..=40 {
            assert_eq!(g.v(p), -g.u(p).conj());
        }
        let s = PotentialGrid::soliton(0.1, 2.0, 0.0, 0.0, 8.0, 40).unwrap();
        for p in -40..=40 {
            assert_eq!(s.v(p), s.u(p).conj());
        }
    }

    #[test]
    fn soliton_peak_value() {
        let s = PotentialGrid::soliton(0.1, 2.0, 0.0, 0.0, 8.0, 3000).unwrap();
        let u0 = s.u(0);
        assert!((u0 - Complex64::new(0.0, 4.0)).norm() < 1e-15);
        let peak = s.u_samples().iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!((peak - 4.0).abs() < 1e-15);
        assert_eq!(s.mesh_n(), 3000);
        assert_eq!(s.step(), 8.0 / 3000.0);
        // clipped tail magnitude: 4 sech(32)
        let t = s.truncation().unwrap();
        assert!((t - 4.0 / 32f64.cosh()).abs() < 1e-25);
    }

    #[test]
    fn out_of_range_reads_zero() {
        let g = PotentialGrid::gaussian(2.5, 1.0, 2.0, Case::Focusing, 2.0, 4).unwrap();
        assert_eq!(g.u(5), Complex64::new(0.0, 0.0));
        assert_eq!(g.v(-5), Complex64::new(0.0, 0.0));
        assert_eq!(g.u(-1000), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn rejects_bad_input() {
        let z = Complex64::new(0.0, 0.0);
        assert!(PotentialGrid::from_samples(vec![z; 4], 1.0, Case::Focusing).is_err());
        assert!(PotentialGrid::from_samples(vec![z; 1], 1.0, Case::Focusing).is_err());
        assert!(PotentialGrid::from_samples(vec![z; 5], 0.0, Case::Focusing).is_err());
        let mut bad = vec![z; 5];
        bad[2] = Complex64::new(f64::NAN, 0.0);
        assert!(PotentialGrid::from_samples(bad, 1.0, Case::Focusing).is_err());
        assert!(PotentialGrid::soliton(0.1, 0.0, 0.0, 0.0, 8.0, 10).is_err());
        assert!(PotentialGrid::gaussian(0.0, 1.0, 2.0, Case::Focusing, 8.0, 10).is_err());
        assert!(PotentialGrid::gaussian(1.0, 1.0, -2.0, Case::Focusing, 8.0, 10).is_err());
    }

    #[test]
    fn zero_samples_give_zero_grid() {
        let g = PotentialGrid::from_samples(vec![Complex64::new(0.0, 0.0); 21], 8.0, Case::Focusing)
            .unwrap();
        assert!(g.u_samples().iter().chain(g.v_samples()).all(|z| *z == Complex64::new(0.0, 0.0)));
        assert_eq!(g.mesh_n(), 10);
    }

    #[test]
    fn sample_file_round_trip_and_rejection() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.txt");
        let mut text = String::new();
        for p in -4..=4 {
            let x = p as f64 * 0.5;
            let u = gaussian_value(1.0, 0.5, 1.0, x);
            text.push_str(&format!("{x} {} {}\n", u.re, u.im));
        }
        fs::write(&path, &text).unwrap();
        let g = PotentialGrid::from_file(&path, Case::Focusing).unwrap();
        assert_eq!(g.mesh_n(), 4);
        assert_eq!(g.half_width(), 2.0);
        assert!((g.u(1) - gaussian_value(1.0, 0.5, 1.0, 0.5)).norm() < 1e-15);

        let skewed = text.replacen("-1.5 ", "-1.4 ", 1);
        fs::write(&path, skewed).unwrap();
        assert!(matches!(
            PotentialGrid::from_file(&path, Case::Focusing),
            Err(Error::SampleFile { .. })
        ));
    }
}
