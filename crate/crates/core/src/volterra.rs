//! The four structured Volterra systems for the auxiliary kernels.
//!
//! All four systems share one shape once the M-family is reflected through
//! the origin (`x -> -x`, `y -> -y`):
//!
//! ```text
//! F1(x, y) = a1 ∫_x^∞          g1(z) F2(z, z + y - x)  dz
//! F2(x, y) = a2 ∫_x^{(x+y)/2}  g2(z) F1(z, x + y - z)  dz + a2 g2((x+y)/2) / 2
//! ```
//!
//! | system | F1    | a1 | g1 | F2    | a2 | g2 |
//! |--------|-------|----|----|-------|----|----|
//! | K̄      | K̄up   | -1 | u  | K̄dn   | +1 | v  |
//! | K      | Kdn   | +1 | v  | Kup   | -1 | u  |
//! | M̄      | M̄dn   | -1 | ṽ  | M̄up   | +1 | ũ  |
//! | M      | Mup   | +1 | ũ  | Mdn   | -1 | ṽ  |
//!
//! where `ũ(p) = u(-p)`. The solver marches over the parallels `k = 0..=2n`
//! of the bisector and, on each one, over the collocation nodes from the
//! support edge inward. Transversal integrals only touch earlier parallels;
//! they are accumulated per anti-diagonal as running sums split by parity,
//! so each node costs O(1) instead of O(k).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{Case, Mesh, PotentialGrid};

type C = Complex64;
const ZERO: C = C::new(0.0, 0.0);

/// Which auxiliary function a [`KernelField`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Which {
    KbarUp,
    KbarDn,
    KUp,
    KDn,
    MbarUp,
    MbarDn,
    MUp,
    MDn,
}

impl Which {
    pub const ALL: [Which; 8] = [
        Which::KbarUp,
        Which::KbarDn,
        Which::KUp,
        Which::KDn,
        Which::MbarUp,
        Which::MbarDn,
        Which::MUp,
        Which::MDn,
    ];

    pub fn is_m_family(self) -> bool {
        matches!(self, Which::MbarUp | Which::MbarDn | Which::MUp | Which::MDn)
    }

    /// Left of the support these are constant along their parallel; the
    /// others are constant along anti-diagonals.
    fn constant_on_parallels(self) -> bool {
        matches!(self, Which::KbarUp | Which::KDn | Which::MbarDn | Which::MUp)
    }

    pub fn name(self) -> &'static str {
        match self {
            Which::KbarUp => "kbar_up",
            Which::KbarDn => "kbar_dn",
            Which::KUp => "k_up",
            Which::KDn => "k_dn",
            Which::MbarUp => "mbar_up",
            Which::MbarDn => "mbar_dn",
            Which::MUp => "m_up",
            Which::MDn => "m_dn",
        }
    }
}

/// Number of stored values for a triangle with half-count `n`.
fn triangle_len(n: usize) -> usize {
    let w = 2 * n + 1;
    w * (w + 1) / 2
}

fn line_offset(n: usize, k: usize) -> usize {
    k * (2 * n + 1) - k * k.saturating_sub(1) / 2
}

/// One auxiliary function on its computational triangle.
///
/// Line `k` holds `2n + 1 - k` values. For the K-family they sit at
/// `(x_i, x_{i+2k})` with `i = -n..=n-k`; for the M-family at
/// `(x_i, x_{i-2k})` with `i = n..=k-n` (so storage runs from the right edge
/// inward and both families share one layout).
#[derive(Debug, Clone, PartialEq)]
pub struct KernelField {
    which: Which,
    mesh: Mesh,
    data: Vec<C>,
}

impl KernelField {
    fn zeros(which: Which, mesh: Mesh) -> Self {
        Self {
            which,
            mesh,
            data: vec![ZERO; triangle_len(mesh.mesh_n)],
        }
    }

    pub fn which(&self) -> Which {
        self.which
    }

    pub fn mesh(&self) -> Mesh {
        self.mesh
    }

    pub fn line_count(&self) -> usize {
        2 * self.mesh.mesh_n + 1
    }

    pub fn line(&self, k: usize) -> &[C] {
        let n = self.mesh.mesh_n;
        let start = line_offset(n, k);
        &self.data[start..start + 2 * n + 1 - k]
    }

    fn line_mut(&mut self, k: usize) -> &mut [C] {
        let n = self.mesh.mesh_n;
        let start = line_offset(n, k);
        &mut self.data[start..start + 2 * n + 1 - k]
    }

    /// Signed x index of storage slot `q` on any line.
    pub fn x_index(&self, q: usize) -> i64 {
        let n = self.mesh.n();
        if self.which.is_m_family() {
            n - q as i64
        } else {
            q as i64 - n
        }
    }

    /// Value at `(x_i, x_i + 2kh)` (K-family) or `(x_i, x_i - 2kh)`
    /// (M-family), anywhere in the plane, using the support and constancy
    /// rules outside the stored triangle.
    pub fn at(&self, i: i64, k: usize) -> C {
        let n = self.mesh.n();
        let p = if self.which.is_m_family() { -i } else { i };
        let k_i = k as i64;
        if p > n - k_i {
            return ZERO;
        }
        if p >= -n {
            return self.data[line_offset(self.mesh.mesh_n, k) + (p + n) as usize];
        }
        if self.which.constant_on_parallels() {
            self.data[line_offset(self.mesh.mesh_n, k)]
        } else {
            let kk = p + k_i + n;
            if kk < 0 {
                ZERO
            } else {
                self.data[line_offset(self.mesh.mesh_n, kk as usize)]
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn values(&self) -> &[C] {
        &self.data
    }

    fn map(&self, which: Which, f: impl Fn(C) -> C) -> Self {
        Self {
            which,
            mesh: self.mesh,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    /// Writes rows `k i re im` for every stored node.
    pub fn write_dump(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        for k in 0..self.line_count() {
            for (q, z) in self.line(k).iter().enumerate() {
                writeln!(w, "{} {} {:.17e} {:.17e}", k, self.x_index(q), z.re, z.im)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Which of the four Volterra systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum System {
    Kbar,
    K,
    Mbar,
    M,
}

impl System {
    pub const ALL: [System; 4] = [System::Kbar, System::K, System::Mbar, System::M];

    pub fn fields(self) -> (Which, Which) {
        match self {
            System::Kbar => (Which::KbarUp, Which::KbarDn),
            System::K => (Which::KUp, Which::KDn),
            System::Mbar => (Which::MbarUp, Which::MbarDn),
            System::M => (Which::MUp, Which::MDn),
        }
    }

    fn first_is_up(self) -> bool {
        matches!(self, System::Kbar | System::M)
    }

    fn is_m_family(self) -> bool {
        matches!(self, System::Mbar | System::M)
    }

    /// Symmetry partner (`K̄ <-> K`, `M̄ <-> M`).
    pub fn partner(self) -> System {
        match self {
            System::Kbar => System::K,
            System::K => System::Kbar,
            System::Mbar => System::M,
            System::M => System::Mbar,
        }
    }

    /// Reflection partner for even potentials (`K̄ <-> M`, `K <-> M̄`).
    pub fn mirror(self) -> System {
        match self {
            System::Kbar => System::M,
            System::M => System::Kbar,
            System::K => System::Mbar,
            System::Mbar => System::K,
        }
    }
}

/// Coefficients of a system in the reflected frame, indexed by storage slot.
#[derive(Debug, Clone)]
pub(crate) struct Canonical {
    pub a1: f64,
    pub a2: f64,
    pub g1: Vec<C>,
    pub g2: Vec<C>,
}

pub(crate) fn canonical(grid: &PotentialGrid, system: System) -> Canonical {
    let n = grid.mesh().n();
    let slot = |q: i64| if system.is_m_family() { n - q } else { q - n };
    let u: Vec<C> = (0..=2 * n).map(|q| grid.u(slot(q))).collect();
    let v: Vec<C> = (0..=2 * n).map(|q| grid.v(slot(q))).collect();
    match system {
        System::Kbar => Canonical { a1: -1.0, a2: 1.0, g1: u, g2: v },
        System::K => Canonical { a1: 1.0, a2: -1.0, g1: v, g2: u },
        System::Mbar => Canonical { a1: -1.0, a2: 1.0, g1: v, g2: u },
        System::M => Canonical { a1: 1.0, a2: -1.0, g1: u, g2: v },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Gauss-Seidel on each parallel, warm-started from the previous one.
    GaussSeidel,
    /// Direct descending substitution.
    Descending,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub method: Method,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            method: Method::GaussSeidel,
            tol: 1e-12,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    /// Largest sweep count used on any parallel.
    pub max_sweeps: usize,
    /// Parallels that fell back to the descending solve.
    pub fallback_lines: usize,
    /// Largest final relative update.
    pub max_update: f64,
}

/// A solved (up, dn) pair.
#[derive(Debug, Clone)]
pub struct KernelPair {
    pub system: System,
    pub up: KernelField,
    pub dn: KernelField,
    pub stats: SolveStats,
}

impl KernelPair {
    pub fn mesh(&self) -> Mesh {
        self.up.mesh
    }

    pub fn field(&self, which: Which) -> Option<&KernelField> {
        if self.up.which == which {
            Some(&self.up)
        } else if self.dn.which == which {
            Some(&self.dn)
        } else {
            None
        }
    }
}

/// All four solved pairs.
#[derive(Debug, Clone)]
pub struct KernelSet {
    pub kbar: KernelPair,
    pub k: KernelPair,
    pub mbar: KernelPair,
    pub m: KernelPair,
}

impl KernelSet {
    pub fn new(kbar: KernelPair, k: KernelPair, mbar: KernelPair, m: KernelPair) -> Result<Self> {
        let mesh = kbar.mesh();
        for (pair, want) in [(&kbar, System::Kbar), (&k, System::K), (&mbar, System::Mbar), (&m, System::M)] {
            if pair.system != want {
                return Err(Error::MeshMismatch(format!(
                    "expected the {want:?} pair, got {:?}",
                    pair.system
                )));
            }
            if !pair.mesh().same_geometry(&mesh) {
                return Err(Error::MeshMismatch(format!("{want:?} pair lives on a different mesh")));
            }
        }
        Ok(Self { kbar, k, mbar, m })
    }

    pub fn mesh(&self) -> Mesh {
        self.kbar.mesh()
    }

    pub fn pair(&self, system: System) -> &KernelPair {
        match system {
            System::Kbar => &self.kbar,
            System::K => &self.k,
            System::Mbar => &self.mbar,
            System::M => &self.m,
        }
    }

    pub fn field(&self, which: Which) -> &KernelField {
        System::ALL
            .iter()
            .find_map(|s| self.pair(*s).field(which))
            .expect("every field belongs to one pair")
    }
}

/// Rule data for the transversal integral on parallel `k`, expressed through
/// the anti-diagonal running sums.
struct Transversal {
    /// Weight of the node on parallel `k` itself.
    c: f64,
}

impl Transversal {
    fn new(k: usize) -> Self {
        let c = match k {
            0 => 0.0,
            1 => 0.5,
            k if k % 2 == 0 => 1.0 / 3.0,
            _ => 3.0 / 8.0,
        };
        Self { c }
    }
}

/// Per anti-diagonal state: `g2 F1` on the last three parallels, on the
/// bisector, and parity sums over everything older.
struct AntiDiagonals {
    g0: Vec<C>,
    l1: Vec<C>,
    l2: Vec<C>,
    l3: Vec<C>,
    odd: Vec<C>,
    even: Vec<C>,
}

impl AntiDiagonals {
    fn new(width: usize) -> Self {
        Self {
            g0: vec![ZERO; width],
            l1: vec![ZERO; width],
            l2: vec![ZERO; width],
            l3: vec![ZERO; width],
            odd: vec![ZERO; width],
            even: vec![ZERO; width],
        }
    }

    /// Transversal sum (unit step, collocation node excluded) for parallel
    /// `k` on anti-diagonal `m`.
    #[inline]
    fn sum(&self, k: usize, m: usize) -> C {
        let (l1, l2, l3) = (self.l1[m], self.l2[m], self.l3[m]);
        match k {
            0 => ZERO,
            1 => l1 * 0.5,
            3 => (l1 + l2) * (9.0 / 8.0) + l3 * (3.0 / 8.0),
            k if k % 2 == 0 => {
                let even = if k >= 4 { self.even[m] + l2 } else { self.even[m] };
                (self.odd[m] + l1 + l3) * (4.0 / 3.0) + even * (2.0 / 3.0) + self.g0[m] / 3.0
            }
            _ => {
                (l1 + l2) * (9.0 / 8.0)
                    + l3 * (17.0 / 24.0)
                    + self.odd[m] * (4.0 / 3.0)
                    + self.even[m] * (2.0 / 3.0)
                    + self.g0[m] / 3.0
            }
        }
    }

    /// Records parallel `k`'s value on anti-diagonal `m`.
    #[inline]
    fn push(&mut self, k: usize, m: usize, g: C) {
        if k >= 4 {
            if (k - 3) % 2 == 1 {
                self.odd[m] += self.l3[m];
            } else {
                self.even[m] += self.l3[m];
            }
        }
        self.l3[m] = self.l2[m];
        self.l2[m] = self.l1[m];
        self.l1[m] = g;
        if k == 0 {
            self.g0[m] = g;
        }
    }
}

/// Scratch for the parallel-line sweep.
struct Sweep {
    f: Vec<C>,
    s: Vec<C>,
    f2: Vec<C>,
}

struct LineInput<'a> {
    b2: &'a [C],
    g1: &'a [C],
    g2: &'a [C],
    c: f64,
    a1: f64,
    a2: f64,
    h: f64,
}

impl Sweep {
    fn new(width: usize) -> Self {
        Self {
            f: vec![ZERO; width + 3],
            s: vec![ZERO; width + 3],
            f2: vec![ZERO; width + 1],
        }
    }

    /// One descending pass over a parallel; returns the largest change of
    /// `F1`. Because the collocated system is lower triangular in this order,
    /// a pass is an exact solve given the values it has already produced.
    fn pass(&mut self, inp: &LineInput<'_>, f1: &mut [C], line: usize) -> Result<f64> {
        let len = f1.len();
        let f = &mut self.f;
        let s = &mut self.s;
        f[len] = ZERO;
        s[len] = ZERO;
        let mut change = 0.0f64;
        for q in (0..len).rev() {
            let l = len - 1 - q;
            let (d, r) = if l == 0 {
                (0.5, ZERO)
            } else if l % 2 == 1 {
                (1.0 / 3.0, (f[q + 1] * 4.0 + f[q + 2]) / 3.0 + s[q + 2])
            } else {
                (
                    3.0 / 8.0,
                    (f[q + 1] * 3.0 + f[q + 2] * 3.0 + f[q + 3]) * (3.0 / 8.0) + s[q + 3],
                )
            };
            let g1 = inp.g1[q];
            let g2 = inp.g2[q];
            let pivot = C::new(1.0, 0.0) - g1 * g2 * (inp.a1 * inp.a2 * inp.h * inp.h * d * inp.c);
            if pivot.norm() < 1e-14 {
                return Err(Error::DegeneratePivot {
                    location: format!("parallel {line}, slot {q}"),
                    pivot: pivot.norm(),
                });
            }
            let new = (g1 * inp.b2[q] * d + r) * (inp.a1 * inp.h) / pivot;
            change = change.max((new - f1[q]).norm());
            f1[q] = new;
            let f2 = g2 * new * (inp.a2 * inp.h * inp.c) + inp.b2[q];
            self.f2[q] = f2;
            f[q] = g1 * f2;
            if (len - q) % 2 == 0 {
                s[q] = s[q + 2] + (f[q] + f[q + 1] * 4.0 + f[q + 2]) / 3.0;
            }
        }
        Ok(change)
    }
}

fn max_norm(v: &[C]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Solves one system on its computational triangle.
pub fn solve(grid: &PotentialGrid, system: System, opts: &SolverOptions) -> Result<KernelPair> {
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::Config(format!(
            "solver needs tol > 0 and max_iter >= 1, got tol={}, max_iter={}",
            opts.tol, opts.max_iter
        )));
    }
    let mesh = grid.mesh();
    let n = mesh.mesh_n;
    let width = 2 * n + 1;
    let h = mesh.step;
    let cz = canonical(grid, system);
    let (which_up, which_dn) = system.fields();
    let (w1, w2) = if system.first_is_up() {
        (which_up, which_dn)
    } else {
        (which_dn, which_up)
    };
    let mut f1 = KernelField::zeros(w1, mesh);
    let mut f2 = KernelField::zeros(w2, mesh);
    let mut diag = AntiDiagonals::new(width);
    let mut sweep = Sweep::new(width);
    let mut b2 = vec![ZERO; width];
    let mut prev = vec![ZERO; width];
    let mut stats = SolveStats::default();

    for k in 0..width {
        let len = width - k;
        let tr = Transversal::new(k);
        for q in 0..len {
            let m = q + k;
            b2[q] = diag.sum(k, m) * (cz.a2 * h) + cz.g2[m] * (0.5 * cz.a2);
        }
        let inp = LineInput {
            b2: &b2[..len],
            g1: &cz.g1[..len],
            g2: &cz.g2[..len],
            c: tr.c,
            a1: cz.a1,
            a2: cz.a2,
            h,
        };
        let line1 = f1.line_mut(k);
        let (sweeps, update) = match opts.method {
            Method::Descending => {
                sweep.pass(&inp, line1, k)?;
                (1, 0.0)
            }
            Method::GaussSeidel => {
                line1.copy_from_slice(&prev[..len]);
                let mut it = 0;
                let mut update;
                loop {
                    let change = sweep.pass(&inp, line1, k)?;
                    it += 1;
                    let scale = max_norm(line1);
                    update = if scale > 0.0 { change / scale } else { change };
                    if update <= opts.tol || it >= opts.max_iter {
                        break;
                    }
                }
                if update > opts.tol {
                    line1.iter_mut().for_each(|z| *z = ZERO);
                    sweep.pass(&inp, line1, k)?;
                    stats.fallback_lines += 1;
                    update = 0.0;
                }
                (it, update)
            }
        };
        if line1.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NoConvergence {
                line: k,
                iterations: sweeps,
                update,
            });
        }
        stats.max_sweeps = stats.max_sweeps.max(sweeps);
        stats.max_update = stats.max_update.max(update);
        prev[..len].copy_from_slice(line1);
        f2.line_mut(k).copy_from_slice(&sweep.f2[..len]);
        for q in 0..len {
            diag.push(k, q + k, cz.g2[q] * prev[q]);
        }
    }

    let (up, dn) = if system.first_is_up() { (f1, f2) } else { (f2, f1) };
    Ok(KernelPair { system, up, dn, stats })
}

pub fn solve_kbar(grid: &PotentialGrid, opts: &SolverOptions) -> Result<KernelPair> {
    solve(grid, System::Kbar, opts)
}

pub fn solve_k(grid: &PotentialGrid, opts: &SolverOptions) -> Result<KernelPair> {
    solve(grid, System::K, opts)
}

pub fn solve_mbar(grid: &PotentialGrid, opts: &SolverOptions) -> Result<KernelPair> {
    solve(grid, System::Mbar, opts)
}

pub fn solve_m(grid: &PotentialGrid, opts: &SolverOptions) -> Result<KernelPair> {
    solve(grid, System::M, opts)
}

/// The eight traces on the bisector, indexed by `x_i`, `i = -n..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BisectorValues {
    pub mesh: Mesh,
    values: [Vec<C>; 8],
}

impl BisectorValues {
    pub fn get(&self, which: Which) -> &[C] {
        let idx = Which::ALL.iter().position(|w| *w == which).unwrap();
        &self.values[idx]
    }
}

/// Bisector values of all eight functions; the energy integrals use the same
/// rule dispatch as the parallel sweeps.
pub fn bisector_values(grid: &PotentialGrid) -> BisectorValues {
    let mesh = grid.mesh();
    let n = mesh.mesh_n;
    let width = 2 * n + 1;
    let mut values: [Vec<C>; 8] = Default::default();
    let mut sweep = Sweep::new(width);
    for system in System::ALL {
        let cz = canonical(grid, system);
        let b2: Vec<C> = cz.g2.iter().map(|g| g * (0.5 * cz.a2)).collect();
        let inp = LineInput {
            b2: &b2,
            g1: &cz.g1,
            g2: &cz.g2,
            c: 0.0,
            a1: cz.a1,
            a2: cz.a2,
            h: mesh.step,
        };
        let mut f1 = vec![ZERO; width];
        // with c = 0 the pivot is exactly 1
        sweep.pass(&inp, &mut f1, 0).expect("unit pivot on the bisector");
        let f2 = sweep.f2[..width].to_vec();
        // back to x order i = -n..=n
        let order = |v: Vec<C>| {
            if system.is_m_family() {
                v.into_iter().rev().collect()
            } else {
                v
            }
        };
        let (up, dn) = if system.first_is_up() { (f1, f2) } else { (f2, f1) };
        let (wu, wd) = system.fields();
        let iu = Which::ALL.iter().position(|w| *w == wu).unwrap();
        let id = Which::ALL.iter().position(|w| *w == wd).unwrap();
        values[iu] = order(up);
        values[id] = order(dn);
    }
    BisectorValues { mesh, values }
}

/// Fills the partner pair from a solved one using the conjugation
/// symmetries; exact on stored values.
pub fn derive_by_symmetry(src: &KernelPair, case: Case) -> Result<KernelPair> {
    let found = src.mesh().case;
    if found != case {
        return Err(Error::CaseMismatch {
            found,
            requested: case,
        });
    }
    let s = match case {
        Case::Focusing => -1.0,
        Case::Defocusing => 1.0,
    };
    let dst = src.system.partner();
    let (wu, wd) = dst.fields();
    let (up, dn) = match src.system {
        // Kup = s K̄dn*, Kdn = K̄up*
        System::Kbar => (src.dn.map(wu, |z| z.conj() * s), src.up.map(wd, |z| z.conj())),
        // K̄up = Kdn*, K̄dn = s Kup*
        System::K => (src.dn.map(wu, |z| z.conj()), src.up.map(wd, |z| z.conj() * s)),
        // Mup = M̄dn*, Mdn = s M̄up*
        System::Mbar => (src.dn.map(wu, |z| z.conj()), src.up.map(wd, |z| z.conj() * s)),
        // M̄up = s Mdn*, M̄dn = Mup*
        System::M => (src.dn.map(wu, |z| z.conj() * s), src.up.map(wd, |z| z.conj())),
    };
    Ok(KernelPair {
        system: dst,
        up,
        dn,
        stats: src.stats,
    })
}

/// For even potentials, the reflected pair: `M(x,y) = (K̄up, -K̄dn)(-x,-y)`,
/// `M̄(x,y) = (-Kup, Kdn)(-x,-y)` and the inverses.
pub fn derive_by_reflection(src: &KernelPair, grid: &PotentialGrid) -> Result<KernelPair> {
    if !grid.is_even() {
        return Err(Error::InvalidPotential(
            "reflection shortcut needs an even potential".into(),
        ));
    }
    if !src.mesh().same_geometry(&grid.mesh()) {
        return Err(Error::MeshMismatch("kernel pair and grid differ".into()));
    }
    let dst = src.system.mirror();
    let (wu, wd) = dst.fields();
    // storage is already reflected, so only the signs change
    let (up, dn) = match src.system {
        System::Kbar | System::M => (src.up.map(wu, |z| z), src.dn.map(wd, |z| -z)),
        System::K | System::Mbar => (src.up.map(wu, |z| -z), src.dn.map(wd, |z| z)),
    };
    Ok(KernelPair {
        system: dst,
        up,
        dn,
        stats: src.stats,
    })
}

/// Largest residual of the collocated equations, checked on every
/// `stride`-th parallel and node. The quadrature is rebuilt from
/// [`crate::quadrature::QuadratureRule`] independently of the solver's
/// running sums.
pub fn collocation_residual(grid: &PotentialGrid, pair: &KernelPair, stride: usize) -> f64 {
    use crate::quadrature::QuadratureRule;
    let stride = stride.max(1);
    let mesh = grid.mesh();
    let n = mesh.mesh_n;
    let width = 2 * n + 1;
    let h = mesh.step;
    let cz = canonical(grid, pair.system);
    let (f1, f2) = if pair.system.first_is_up() {
        (&pair.up, &pair.dn)
    } else {
        (&pair.dn, &pair.up)
    };
    let mut worst = 0.0f64;
    let mut k = 0;
    while k < width {
        let len = width - k;
        let l1 = f1.line(k);
        let l2 = f2.line(k);
        let tau = QuadratureRule::for_intervals(k);
        let mut q = 0;
        while q < len {
            let par = QuadratureRule::for_intervals(len - q);
            let mut i1 = ZERO;
            for j in 0..len - q {
                i1 += cz.g1[q + j] * l2[q + j] * par.weights[j];
            }
            let r1 = l1[q] - i1 * (cz.a1 * h);
            let mut i2 = ZERO;
            for j in 0..=k {
                i2 += cz.g2[q + j] * f1.line(k - j)[q + j] * tau.weights[j];
            }
            let r2 = l2[q] - i2 * (cz.a2 * h) - cz.g2[q + k] * (0.5 * cz.a2);
            worst = worst.max(r1.norm()).max(r2.norm());
            q += stride;
        }
        k += stride;
    }
    worst
}
