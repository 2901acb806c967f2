//! Left and right Marchenko kernels from the auxiliary kernels.
//!
//! The left kernel solves
//! `Ω_ℓ(x+y) + ∫_x^∞ Kdn(x,z) Ω_ℓ(z+y) dz = -K̄dn(x,y)` collocated at
//! `(x_{n-2i}, x_n)`, `i = 0..=n`, with step `δ = 2h` so that only even
//! parallels of the kernels are touched. The right kernel is the mirror
//! image: `Mup`, `M̄up` at `(x_{2i-n}, x_{-n})`. Both march away from the
//! support edge, one scalar equation per node.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::Mesh;
use crate::quadrature::QuadratureRule;
use crate::volterra::{KernelField, Which};

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// `Ω_ℓ` on `α = 0, 2h, ..., 2L` or `Ω_r` on `α = -2L, ..., -2h, 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarchenkoKernel {
    pub side: Side,
    pub step: f64,
    pub values: Vec<C>,
}

impl MarchenkoKernel {
    pub fn alpha(&self, idx: usize) -> f64 {
        let n = (self.values.len() - 1) as f64;
        match self.side {
            Side::Left => idx as f64 * self.step,
            Side::Right => (idx as f64 - n) * self.step,
        }
    }

    pub fn alphas(&self) -> Vec<f64> {
        (0..self.values.len()).map(|j| self.alpha(j)).collect()
    }

    /// Value at `|α| = 2hj`, zero beyond the support.
    pub fn at_distance(&self, j: usize) -> C {
        let n = self.values.len() - 1;
        if j > n {
            return C::new(0.0, 0.0);
        }
        match self.side {
            Side::Left => self.values[j],
            Side::Right => self.values[n - j],
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "alpha,re,im")?;
        for (j, z) in self.values.iter().enumerate() {
            writeln!(w, "{:.17e},{:.17e},{:.17e}", self.alpha(j), z.re, z.im)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reads an `alpha,re,im` CSV into `(α, value)` rows.
pub fn read_samples_csv(path: &Path) -> Result<Vec<(f64, C)>> {
    let file = File::open(path)?;
    let mut rows = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || (lineno == 0 && t.starts_with("alpha")) {
            continue;
        }
        let bad = |msg: String| Error::SampleFile {
            path: path.to_path_buf(),
            line: lineno + 1,
            msg,
        };
        let f: Vec<&str> = t.split(',').map(str::trim).collect();
        if f.len() != 3 {
            return Err(bad(format!("expected `alpha,re,im`, found {} fields", f.len())));
        }
        let p = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("cannot parse `{s}`: {e}")));
        rows.push((p(f[0])?, C::new(p(f[1])?, p(f[2])?)));
    }
    Ok(rows)
}

fn check_field(f: &KernelField, want: Which, mesh: &Mesh) -> Result<()> {
    if f.which() != want {
        return Err(Error::MeshMismatch(format!(
            "expected {:?}, got {:?}",
            want,
            f.which()
        )));
    }
    if !f.mesh().same_geometry(mesh) {
        return Err(Error::MeshMismatch(format!(
            "{:?} lives on a different mesh",
            f.which()
        )));
    }
    Ok(())
}

/// Solves for `Ω` at distances `j = n - i` from the origin. `kernel(i, m)`
/// is the weight function at the `m`-th node of equation `i`, `source(i)`
/// the right-hand side kernel.
fn march(
    n: usize,
    delta: f64,
    kernel: impl Fn(usize, usize) -> C,
    source: impl Fn(usize) -> C,
) -> Result<Vec<C>> {
    // omega[j] at distance j
    let mut omega = vec![C::new(0.0, 0.0); n + 1];
    for i in 0..=n {
        let rule = QuadratureRule::for_intervals(i);
        let mut rhs = -source(i);
        for m in 1..=i {
            rhs -= kernel(i, m) * omega[n - i + m] * (delta * rule.weights[m]);
        }
        let pivot = C::new(1.0, 0.0) + kernel(i, 0) * (delta * rule.weights[0]);
        if pivot.norm() < 1e-14 {
            return Err(Error::DegeneratePivot {
                location: format!("Marchenko node {i}"),
                pivot: pivot.norm(),
            });
        }
        omega[n - i] = rhs / pivot;
    }
    Ok(omega)
}

/// `Ω_ℓ` from `Kdn` and `K̄dn`.
pub fn solve_left(kdn: &KernelField, kbar_dn: &KernelField) -> Result<MarchenkoKernel> {
    let mesh = kdn.mesh();
    check_field(kdn, Which::KDn, &mesh)?;
    check_field(kbar_dn, Which::KbarDn, &mesh)?;
    let n = mesh.mesh_n;
    let ni = mesh.n();
    let delta = 2.0 * mesh.step;
    let x = |i: usize| ni - 2 * i as i64;
    let values = march(n, delta, |i, m| kdn.at(x(i), m), |i| kbar_dn.at(x(i), i))?;
    Ok(MarchenkoKernel {
        side: Side::Left,
        step: delta,
        values,
    })
}

/// `Ω_r` from `Mup` and `M̄up`.
pub fn solve_right(mup: &KernelField, mbar_up: &KernelField) -> Result<MarchenkoKernel> {
    let mesh = mup.mesh();
    check_field(mup, Which::MUp, &mesh)?;
    check_field(mbar_up, Which::MbarUp, &mesh)?;
    let n = mesh.mesh_n;
    let ni = mesh.n();
    let delta = 2.0 * mesh.step;
    let x = |i: usize| 2 * i as i64 - ni;
    let mut values = march(n, delta, |i, m| mup.at(x(i), m), |i| mbar_up.at(x(i), i))?;
    values.reverse();
    Ok(MarchenkoKernel {
        side: Side::Right,
        step: delta,
        values,
    })
}

/// Largest residual of the collocated equations, with the quadrature rebuilt
/// per node.
pub fn collocation_residual(
    omega: &MarchenkoKernel,
    kernel: &KernelField,
    source: &KernelField,
) -> f64 {
    let mesh = kernel.mesh();
    let n = mesh.mesh_n;
    let ni = mesh.n();
    let delta = 2.0 * mesh.step;
    let mut worst = 0.0f64;
    for i in 0..=n {
        let xi = match omega.side {
            Side::Left => ni - 2 * i as i64,
            Side::Right => 2 * i as i64 - ni,
        };
        let rule = QuadratureRule::for_intervals(i);
        let samples: Vec<C> = (0..=i)
            .map(|m| kernel.at(xi, m) * omega.at_distance(n - i + m))
            .collect();
        let integral = if i == 0 {
            C::new(0.0, 0.0)
        } else {
            rule.apply(&samples, delta)
        };
        let r = omega.at_distance(n - i) + integral + source.at(xi, i);
        worst = worst.max(r.norm());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{Case, PotentialGrid};
    use crate::volterra::{solve, SolverOptions, System};
    use nalgebra::{DMatrix, DVector};

    fn grid(n: usize) -> PotentialGrid {
        let u = (-(n as i64)..=n as i64)
            .map(|p| {
                let x = p as f64 * 1.5 / n as f64;
                C::new(0.9 * (-x * x).exp() - 0.1 * x, 0.5 * (2.0 * x).cos())
            })
            .collect();
        PotentialGrid::from_samples(u, 1.5, Case::Focusing).unwrap()
    }

    /// Assembles the full collocated system and solves it by LU.
    fn dense_oracle(
        n: usize,
        delta: f64,
        kernel: impl Fn(usize, usize) -> C,
        source: impl Fn(usize) -> C,
    ) -> Vec<C> {
        let mut a = DMatrix::<C>::zeros(n + 1, n + 1);
        let mut b = DVector::<C>::zeros(n + 1);
        for i in 0..=n {
            let rule = QuadratureRule::for_intervals(i);
            a[(i, n - i)] += C::new(1.0, 0.0);
            for m in 0..=i {
                a[(i, n - i + m)] += kernel(i, m) * (delta * rule.weights[m]);
            }
            b[i] = -source(i);
        }
        a.lu().solve(&b).unwrap().as_slice().to_vec()
    }

    #[test]
    fn matches_dense_oracle() {
        for n in [1usize, 2, 3, 4, 7, 12, 16] {
            let g = grid(n);
            let opts = SolverOptions::default();
            let k = solve(&g, System::K, &opts).unwrap();
            let kb = solve(&g, System::Kbar, &opts).unwrap();
            let m = solve(&g, System::M, &opts).unwrap();
            let mb = solve(&g, System::Mbar, &opts).unwrap();
            let left = solve_left(&k.dn, &kb.dn).unwrap();
            let right = solve_right(&m.up, &mb.up).unwrap();
            let ni = n as i64;
            let delta = 2.0 * g.step();
            let ol = dense_oracle(
                n,
                delta,
                |i, mm| k.dn.at(ni - 2 * i as i64, mm),
                |i| kb.dn.at(ni - 2 * i as i64, i),
            );
            let or = dense_oracle(
                n,
                delta,
                |i, mm| m.up.at(2 * i as i64 - ni, mm),
                |i| mb.up.at(2 * i as i64 - ni, i),
            );
            for j in 0..=n {
                assert!((left.at_distance(j) - ol[j]).norm() < 1e-12, "n={n} j={j} {} {}", left.at_distance(j), ol[j]);
                assert!((right.at_distance(j) - or[j]).norm() < 1e-12);
            }
            assert!(collocation_residual(&left, &k.dn, &kb.dn) < 1e-13);
            assert!(collocation_residual(&right, &m.up, &mb.up) < 1e-13);
        }
    }

    #[test]
    fn boundary_identities() {
        let g = grid(10);
        let opts = SolverOptions::default();
        let k = solve(&g, System::K, &opts).unwrap();
        let kb = solve(&g, System::Kbar, &opts).unwrap();
        let m = solve(&g, System::M, &opts).unwrap();
        let mb = solve(&g, System::Mbar, &opts).unwrap();
        let left = solve_left(&k.dn, &kb.dn).unwrap();
        let right = solve_right(&m.up, &mb.up).unwrap();
        assert_eq!(*left.values.last().unwrap(), -g.v(10) * 0.5);
        assert_eq!(right.values[0], -g.u(-10) * 0.5);
        assert_eq!(left.alpha(10), 2.0 * 10.0 * g.step());
        assert_eq!(right.alpha(0), -2.0 * 10.0 * g.step());
        assert_eq!(right.alpha(10), 0.0);
    }

    #[test]
    fn zero_potential() {
        let g = PotentialGrid::zero(8.0, 16, Case::Defocusing).unwrap();
        let opts = SolverOptions::default();
        let k = solve(&g, System::K, &opts).unwrap();
        let kb = solve(&g, System::Kbar, &opts).unwrap();
        let left = solve_left(&k.dn, &kb.dn).unwrap();
        assert!(left.values.iter().all(|z| *z == C::new(0.0, 0.0)));
    }

    #[test]
    fn rejects_wrong_fields() {
        let g = grid(4);
        let opts = SolverOptions::default();
        let k = solve(&g, System::K, &opts).unwrap();
        let kb = solve(&g, System::Kbar, &opts).unwrap();
        assert!(matches!(solve_left(&k.up, &kb.dn), Err(Error::MeshMismatch(_))));
        let other = solve(&grid(5), System::Kbar, &opts).unwrap();
        assert!(matches!(solve_left(&k.dn, &other.dn), Err(Error::MeshMismatch(_))));
    }

    #[test]
    fn csv_round_trip() {
        let g = grid(6);
        let opts = SolverOptions::default();
        let k = solve(&g, System::K, &opts).unwrap();
        let kb = solve(&g, System::Kbar, &opts).unwrap();
        let left = solve_left(&k.dn, &kb.dn).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("omega_left.csv");
        left.write_csv(&path).unwrap();
        let rows = read_samples_csv(&path).unwrap();
        assert_eq!(rows.len(), 7);
        for (j, (a, z)) in rows.iter().enumerate() {
            assert_eq!(*a, left.alpha(j));
            assert_eq!(*z, left.values[j]);
        }
    }
}
