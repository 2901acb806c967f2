//! Bound states and norming constants from the spectral sums
//! `S_ℓ = Ω_ℓ - ρ` and `S_r = Ω_r - ℓ` by the Hankel matrix pencil.
//!
//! Both sums are monomial-exponential: `S(α) = Σ_j Σ_s Γ_js α^s/s! e^{±iλ_j α}`.
//! Sampling at `α_k = ±kΔ` turns each term into `k^s z_j^k` with
//! `z_j = e^{iλ_j Δ}`, so the nodes are the generalized eigenvalues of the
//! shifted Hankel pencil and the coefficients follow from a Casorati least
//! squares fit.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marchenko::{MarchenkoKernel, Side};

type C = Complex64;
const ZERO: C = C::new(0.0, 0.0);

/// How the rank-revealing step factors the augmented Hankel matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    /// Householder QR, then the SVD of the small triangular factor.
    Qr,
    /// SVD of the full Hankel matrix.
    Svd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PencilOptions {
    /// Overestimate of the total multiplicity.
    pub m_over: usize,
    /// Hankel rows `N`; `2·m_over` when absent. `2N` samples are used.
    pub rows: Option<usize>,
    /// Target spacing of the decimated samples, rounded to a multiple of `2h`.
    pub sample_step: f64,
    pub route: Route,
    /// Rank `k` is accepted at the first `σ_{k+1}/σ_k` below this.
    pub rank_gap: f64,
    /// Eigenvalues closer than this (relative) form one multiple root.
    pub cluster_tol: f64,
    /// Sums below `zero_tol · max|Ω|` carry no bound states.
    pub zero_tol: f64,
    /// Reconstruction residual (relative) above which a warning is issued.
    pub fit_tol: f64,
    /// Absolute error level of the samples. Singular values below
    /// `noise_floor·√(N(M+1))` count as zero.
    pub noise_floor: f64,
}

impl Default for PencilOptions {
    fn default() -> Self {
        Self {
            m_over: 5,
            rows: None,
            sample_step: 0.25,
            route: Route::Qr,
            rank_gap: 1e-6,
            cluster_tol: 1e-4,
            zero_tol: 1e-6,
            fit_tol: 1e-6,
            noise_floor: 0.0,
        }
    }
}

/// `2N` equispaced samples of a spectral sum, `α_k = ±kΔ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSumSamples {
    pub side: Side,
    /// Positive spacing `Δ`; the right sum is sampled at `α_k = -kΔ`.
    pub step: f64,
    pub values: Vec<C>,
    pub rows: usize,
    pub m_over: usize,
    /// Magnitude the sum is compared against when deciding it vanishes.
    pub scale: f64,
}

impl SpectralSumSamples {
    pub fn new(
        side: Side,
        step: f64,
        values: Vec<C>,
        m_over: usize,
        scale: f64,
    ) -> Result<Self> {
        if values.len() % 2 != 0 || values.is_empty() {
            return Err(Error::Identification(format!(
                "need an even number of samples, got {}",
                values.len()
            )));
        }
        let rows = values.len() / 2;
        if rows <= m_over {
            return Err(Error::Identification(format!(
                "{} samples cannot resolve {m_over} terms; need more than {}",
                values.len(),
                2 * m_over
            )));
        }
        if !(step > 0.0) {
            return Err(Error::Identification(format!("sample step must be positive, got {step}")));
        }
        Ok(Self {
            side,
            step,
            values,
            rows,
            m_over,
            scale,
        })
    }

    pub fn alpha(&self, k: usize) -> f64 {
        match self.side {
            Side::Left => k as f64 * self.step,
            Side::Right => -(k as f64) * self.step,
        }
    }
}

/// `Ω - ρ` (left) or `Ω - ℓ` (right), decimated for the pencil. `ft` lies on
/// the same grid as `omega.values`.
pub fn spectral_sums(
    omega: &MarchenkoKernel,
    ft: &[C],
    opts: &PencilOptions,
) -> Result<SpectralSumSamples> {
    if ft.len() != omega.values.len() {
        return Err(Error::MeshMismatch(format!(
            "Marchenko kernel has {} samples, Fourier transform {}",
            omega.values.len(),
            ft.len()
        )));
    }
    let n = omega.values.len() - 1;
    let rows = opts.rows.unwrap_or(2 * opts.m_over).max(opts.m_over + 1);
    let count = 2 * rows;
    // Marchenko nodes at odd distance use a 3/8 block, even ones do not; an
    // odd stride alternates between the two and the error difference shows
    // up as spurious roots at -z
    let mut stride = (2.0 * (opts.sample_step / (2.0 * omega.step)).round()) as usize;
    stride = stride.max(2);
    if (count - 1) * stride > n {
        stride = n / (count - 1);
        if stride > 1 {
            stride -= stride % 2;
        }
    }
    if stride == 0 {
        return Err(Error::Identification(format!(
            "{} Marchenko samples are too few for {count} pencil samples",
            n + 1
        )));
    }
    // distance j from the origin
    let diff = |j: usize| {
        let idx = match omega.side {
            Side::Left => j,
            Side::Right => n - j,
        };
        omega.values[idx] - ft[idx]
    };
    let values = (0..count).map(|k| diff(k * stride)).collect();
    let scale = omega.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    SpectralSumSamples::new(omega.side, omega.step * stride as f64, values, opts.m_over, scale)
}

/// One identified root of the Prony polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundState {
    pub lambda: C,
    pub multiplicity: usize,
}

/// Result of identifying one side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Identification {
    pub side: Side,
    pub states: Vec<BoundState>,
    /// `Γ_js`, one row per state, `m_j` entries each.
    pub gamma: Vec<Vec<C>>,
    pub rank: usize,
    pub singular_values: Vec<f64>,
    pub casorati_condition: f64,
    /// `max |fit - S| / max |S|`.
    pub fit_residual: f64,
    /// Some pair of distinct roots lies within ten cluster radii.
    pub near_multiple: bool,
    pub warnings: Vec<String>,
}

fn hankel(values: &[C], rows: usize, cols: usize) -> DMatrix<C> {
    DMatrix::from_fn(rows, cols, |i, j| values[i + j])
}

fn right_singular(h: &DMatrix<C>, route: Route) -> Result<(Vec<f64>, DMatrix<C>)> {
    let base = match route {
        Route::Svd => h.clone(),
        Route::Qr => h.clone().qr().r(),
    };
    let svd = base.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Identification("SVD failed to return V".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sv = order.iter().map(|&i| svd.singular_values[i]).collect();
    let v_t = DMatrix::from_fn(order.len(), v_t.ncols(), |i, j| v_t[(order[i], j)]);
    Ok((sv, v_t))
}

fn numerical_rank(sv: &[f64], gap: f64, floor: f64) -> Option<usize> {
    (0..sv.len()).find(|&k| sv[k] <= floor || (k > 0 && sv[k] < gap * sv[k - 1]))
}

/// Groups eigenvalues whose relative distance is below `tol`.
fn cluster(z: &[C], tol: f64) -> (Vec<(C, usize)>, bool) {
    let mut groups: Vec<Vec<C>> = Vec::new();
    for &w in z {
        let hit = groups.iter_mut().find(|g| {
            g.iter().any(|c| (c - w).norm() <= tol * c.norm().max(w.norm()).max(1e-300))
        });
        match hit {
            Some(g) => g.push(w),
            None => groups.push(vec![w]),
        }
    }
    let roots: Vec<(C, usize)> = groups
        .iter()
        .map(|g| (g.iter().sum::<C>() / g.len() as f64, g.len()))
        .collect();
    let mut near = false;
    for a in 0..roots.len() {
        for b in a + 1..roots.len() {
            let (x, y) = (roots[a].0, roots[b].0);
            if (x - y).norm() <= 10.0 * tol * x.norm().max(y.norm()) {
                near = true;
            }
        }
    }
    (roots, near)
}

fn factorial(s: usize) -> f64 {
    (1..=s).map(|k| k as f64).product()
}

/// Least squares fit of `Σ d_js k^s z_j^k` to the samples; returns `d`,
/// the condition number and the relative residual.
fn casorati_fit(values: &[C], roots: &[(C, usize)]) -> Result<(Vec<Vec<C>>, f64, f64)> {
    let cols: usize = roots.iter().map(|r| r.1).sum();
    let rows = values.len();
    let mut a = DMatrix::<C>::zeros(rows, cols);
    let mut c = 0;
    for &(z, m) in roots {
        for s in 0..m {
            let mut zk = C::new(1.0, 0.0);
            for k in 0..rows {
                a[(k, c)] = zk * (k as f64).powi(s as i32);
                zk *= z;
            }
            c += 1;
        }
    }
    let b = DVector::from_column_slice(values);
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let x = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::Identification(format!("Casorati solve failed: {e}")))?;
    let fit = &a * &x;
    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let res = (0..rows).map(|k| (fit[k] - values[k]).norm()).fold(0.0, f64::max);
    let mut d = Vec::with_capacity(roots.len());
    let mut c = 0;
    for &(_, m) in roots {
        d.push((0..m).map(|s| x[c + s]).collect());
        c += m;
    }
    Ok((d, cond, if scale > 0.0 { res / scale } else { res }))
}

/// `Γ_js` from the Casorati coefficients `d_js` of `k^s z^k`.
fn gamma_from_fit(d: &[Vec<C>], step: f64, side: Side) -> Vec<Vec<C>> {
    d.iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(s, v)| {
                    let sign = match side {
                        Side::Right if s % 2 == 1 => -1.0,
                        _ => 1.0,
                    };
                    v * (sign * factorial(s) / step.powi(s as i32))
                })
                .collect()
        })
        .collect()
}

/// Identifies the bound states and norming constants of one side.
pub fn identify(sums: &SpectralSumSamples, opts: &PencilOptions) -> Result<Identification> {
    let mut warnings = Vec::new();
    let peak = sums.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let empty = |sv: Vec<f64>, warnings: Vec<String>| Identification {
        side: sums.side,
        states: Vec::new(),
        gamma: Vec::new(),
        rank: 0,
        singular_values: sv,
        casorati_condition: 1.0,
        fit_residual: 0.0,
        near_multiple: false,
        warnings,
    };
    if peak <= opts.zero_tol * sums.scale.max(f64::MIN_POSITIVE) || peak == 0.0 {
        return Ok(empty(Vec::new(), warnings));
    }
    let m = sums.m_over;
    let h = hankel(&sums.values, sums.rows, m + 1);
    let (sv, v_t) = right_singular(&h, opts.route)?;
    let floor = opts.noise_floor * ((h.nrows() * h.ncols()) as f64).sqrt();
    let rank = match numerical_rank(&sv, opts.rank_gap, floor) {
        Some(0) => return Ok(empty(sv, warnings)),
        Some(r) => r,
        None => {
            warnings.push(format!(
                "no singular-value gap below {:.0e}; m_over = {m} may be too small",
                opts.rank_gap
            ));
            m
        }
    };
    let rank = rank.min(m);
    // rows of v_t span the row space of H; drop the last / first column
    let basis = v_t.rows(0, rank).into_owned();
    let v0 = basis.columns(0, m).into_owned();
    let v1 = basis.columns(1, m).into_owned();
    let pinv = v0
        .pseudo_inverse(0.0)
        .map_err(|e| Error::Identification(format!("pencil pseudo-inverse failed: {e}")))?;
    let g = &v1 * &pinv;
    let eig = g.schur().eigenvalues().ok_or_else(|| {
        Error::Identification("Schur form of the reduced pencil did not converge".into())
    })?;
    let mut inside = Vec::new();
    for &z in eig.iter() {
        if z.norm() >= 1.0 {
            warnings.push(format!(
                "discarded eigenvalue z = {z:.6} outside the unit disk (|z| = {:.6})",
                z.norm()
            ));
        } else {
            inside.push(z);
        }
    }
    if inside.is_empty() {
        return Ok(empty(sv, warnings));
    }
    let (roots, near) = cluster(&inside, opts.cluster_tol);
    if near {
        warnings.push(format!(
            "two roots lie within {} cluster radii; multiplicities are uncertain",
            10
        ));
    }
    let (d, cond, res) = casorati_fit(&sums.values, &roots)?;
    if res > opts.fit_tol {
        warnings.push(format!(
            "reconstruction residual {res:.3e} exceeds fit_tol {:.0e}",
            opts.fit_tol
        ));
    }
    let states = roots
        .iter()
        .map(|&(z, mult)| BoundState {
            lambda: -C::new(0.0, 1.0) * z.ln() / sums.step,
            multiplicity: mult,
        })
        .collect();
    Ok(Identification {
        side: sums.side,
        states,
        gamma: gamma_from_fit(&d, sums.step, sums.side),
        rank,
        singular_values: sv,
        casorati_condition: cond,
        fit_residual: res,
        near_multiple: near,
        warnings,
    })
}

/// Norming constants of `sums` for given bound states, by least squares.
pub fn fit_gamma(sums: &SpectralSumSamples, states: &[BoundState]) -> Result<(Vec<Vec<C>>, f64, f64)> {
    if states.is_empty() {
        return Ok((Vec::new(), 1.0, 0.0));
    }
    let roots: Vec<(C, usize)> = states
        .iter()
        .map(|s| ((C::new(0.0, 1.0) * s.lambda * sums.step).exp(), s.multiplicity))
        .collect();
    let (d, cond, res) = casorati_fit(&sums.values, &roots)?;
    Ok((gamma_from_fit(&d, sums.step, sums.side), cond, res))
}

/// Evaluates `Σ_j Σ_s Γ_js α^s/s! e^{±iλ_j α}` at `α`.
pub fn evaluate_sum(side: Side, states: &[BoundState], gamma: &[Vec<C>], alpha: f64) -> C {
    let mut acc = ZERO;
    for (st, row) in states.iter().zip(gamma) {
        let e = match side {
            Side::Left => (C::new(0.0, 1.0) * st.lambda * alpha).exp(),
            Side::Right => (-C::new(0.0, 1.0) * st.lambda * alpha).exp(),
        };
        for (s, g) in row.iter().enumerate() {
            acc += g * e * (alpha.powi(s as i32) / factorial(s));
        }
    }
    acc
}

/// Bound states with both families of norming constants.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub bound_states: Vec<BoundState>,
    pub gamma_left: Vec<Vec<C>>,
    pub gamma_right: Vec<Vec<C>>,
}

impl SpectralData {
    pub fn num(&self) -> usize {
        self.bound_states.len()
    }

    /// Total multiplicity.
    pub fn total_multiplicity(&self) -> usize {
        self.bound_states.iter().map(|b| b.multiplicity).sum()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let gam = |g: &Vec<Vec<C>>| {
            g.iter()
                .map(|row| {
                    row.iter()
                        .map(|z| serde_json::json!({"re": z.re, "im": z.im}))
                        .collect::<Vec<_>>()
                })
                .collect::<Vec<_>>()
        };
        serde_json::json!({
            "bound_states": self.bound_states.iter().map(|b| serde_json::json!({
                "re": b.lambda.re,
                "im": b.lambda.im,
                "mult": b.multiplicity,
            })).collect::<Vec<_>>(),
            "gamma_left": gam(&self.gamma_left),
            "gamma_right": gam(&self.gamma_right),
        })
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let s = serde_json::to_string_pretty(&self.to_json())?;
        std::fs::write(path, s + "\n")?;
        Ok(())
    }
}

/// Bound states from the left sum, `Γ_ℓ` from its fit and `Γ_r` by fitting
/// the right sum on the same nodes.
pub fn combine(left: &Identification, right_sums: &SpectralSumSamples) -> Result<SpectralData> {
    let (gamma_right, _, _) = fit_gamma(right_sums, &left.states)?;
    Ok(SpectralData {
        bound_states: left.states.clone(),
        gamma_left: left.gamma.clone(),
        gamma_right,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const I: C = C::new(0.0, 1.0);

    fn synth(side: Side, step: f64, count: usize, terms: &[(C, Vec<C>)], m_over: usize) -> SpectralSumSamples {
        let states: Vec<BoundState> = terms
            .iter()
            .map(|t| BoundState {
                lambda: t.0,
                multiplicity: t.1.len(),
            })
            .collect();
        let gamma: Vec<Vec<C>> = terms.iter().map(|t| t.1.clone()).collect();
        let values = (0..count)
            .map(|k| {
                let a = match side {
                    Side::Left => k as f64 * step,
                    Side::Right => -(k as f64) * step,
                };
                evaluate_sum(side, &states, &gamma, a)
            })
            .collect();
        SpectralSumSamples::new(side, step, values, m_over, 1.0).unwrap()
    }

    #[test]
    fn single_term_with_fine_step() {
        let lam = C::new(0.1, 2.0);
        let s = synth(Side::Left, 0.01, 80, &[(lam, vec![4.0 * I])], 5);
        for route in [Route::Qr, Route::Svd] {
            let id = identify(&s, &PencilOptions { route, ..Default::default() }).unwrap();
            assert_eq!(id.states.len(), 1);
            assert_eq!(id.rank, 1);
            assert!((id.states[0].lambda - lam).norm() < 1e-10, "{:?}", id.states);
            assert!((id.gamma[0][0] - 4.0 * I).norm() < 1e-8);
            assert!(id.fit_residual < 1e-10);
        }
    }

    #[test]
    fn two_terms_round_trip() {
        let terms = [
            (C::new(-0.5, 1.97), vec![C::new(9.28, 0.1)]),
            (C::new(-0.5, 0.79), vec![C::new(-1.0, 3.74)]),
        ];
        let s = synth(Side::Left, 0.25, 20, &terms, 5);
        let id = identify(&s, &PencilOptions::default()).unwrap();
        assert_eq!(id.states.len(), 2);
        for (lam, g) in &terms {
            let j = id
                .states
                .iter()
                .position(|b| (b.lambda - lam).norm() < 1e-8)
                .expect("missing root");
            assert!((id.gamma[j][0] - g[0]).norm() < 1e-8);
        }
    }

    #[test]
    fn double_root_is_clustered() {
        let lam = C::new(0.3, 1.2);
        let terms = [(lam, vec![C::new(1.0, -2.0), C::new(0.5, 0.7)])];
        let s = synth(Side::Left, 0.2, 20, &terms, 5);
        let id = identify(&s, &PencilOptions::default()).unwrap();
        assert_eq!(id.states.len(), 1, "{:?}", id);
        assert_eq!(id.states[0].multiplicity, 2);
        assert!((id.states[0].lambda - lam).norm() < 1e-6);
        // refit on the exact node for the 1e-8 coefficient check
        let exact = [BoundState {
            lambda: lam,
            multiplicity: 2,
        }];
        let (g, _, res) = fit_gamma(&s, &exact).unwrap();
        assert!((g[0][0] - terms[0].1[0]).norm() < 1e-8);
        assert!((g[0][1] - terms[0].1[1]).norm() < 1e-8);
        assert!(res < 1e-12);
        assert!((id.gamma[0][1] - terms[0].1[1]).norm() < 1e-4);
    }

    #[test]
    fn right_side_sign_convention() {
        // S_r(α) = (Γ0 + Γ1 α) e^{-iλα} sampled on α <= 0
        let lam = C::new(-0.2, 0.9);
        let terms = [(lam, vec![C::new(0.0, -4.0), C::new(1.5, 0.0)])];
        let s = synth(Side::Right, 0.2, 20, &terms, 4);
        let exact = [BoundState {
            lambda: lam,
            multiplicity: 2,
        }];
        let (g, _, _) = fit_gamma(&s, &exact).unwrap();
        assert!((g[0][0] - terms[0].1[0]).norm() < 1e-10);
        assert!((g[0][1] - terms[0].1[1]).norm() < 1e-10);
        let id = identify(&s, &PencilOptions { m_over: 4, ..Default::default() }).unwrap();
        assert!((id.states[0].lambda - lam).norm() < 1e-6);
    }

    #[test]
    fn noise_floor_suppresses_spurious_roots() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let eps = 1e-4;
        let mut s = synth(Side::Left, 0.25, 20, &[(C::new(0.1, 2.0), vec![4.0 * I])], 5);
        for v in s.values.iter_mut() {
            *v += C::new(rng.gen_range(-eps..eps), rng.gen_range(-eps..eps));
        }
        let noisy = identify(&s, &PencilOptions::default()).unwrap();
        assert!(noisy.states.len() > 1);
        let opts = PencilOptions { noise_floor: eps, ..Default::default() };
        let id = identify(&s, &opts).unwrap();
        assert_eq!(id.states.len(), 1);
        assert!((id.states[0].lambda - C::new(0.1, 2.0)).norm() < 1e-3);

        let values = (0..20)
            .map(|_| C::new(rng.gen_range(-eps..eps), rng.gen_range(-eps..eps)))
            .collect();
        let pure = SpectralSumSamples::new(Side::Left, 0.25, values, 5, 1e-3).unwrap();
        let id = identify(&pure, &opts).unwrap();
        assert!(id.states.is_empty());
        assert_eq!(id.rank, 0);
    }

    #[test]
    fn vanishing_sum_has_no_states() {
        let values = vec![C::new(1e-12, 0.0); 20];
        let s = SpectralSumSamples::new(Side::Left, 0.25, values, 5, 1.0).unwrap();
        let id = identify(&s, &PencilOptions::default()).unwrap();
        assert!(id.states.is_empty());
        assert_eq!(id.rank, 0);
    }

    #[test]
    fn growing_terms_are_discarded() {
        // Im λ < 0 gives |z| > 1
        let s = synth(Side::Left, 0.25, 20, &[(C::new(0.0, -0.5), vec![C::new(1.0, 0.0)])], 3);
        let id = identify(&s, &PencilOptions { m_over: 3, ..Default::default() }).unwrap();
        assert!(id.states.is_empty());
        assert!(!id.warnings.is_empty());
    }

    #[test]
    fn sample_count_checks() {
        assert!(SpectralSumSamples::new(Side::Left, 0.1, vec![ZERO; 9], 2, 1.0).is_err());
        assert!(SpectralSumSamples::new(Side::Left, 0.1, vec![ZERO; 10], 5, 1.0).is_err());
        assert!(SpectralSumSamples::new(Side::Left, 0.1, vec![ZERO; 12], 5, 1.0).is_ok());
    }

    #[test]
    fn decimation_from_marchenko_grid() {
        let lam = C::new(0.1, 2.0);
        let step = 0.0125;
        let values: Vec<C> = (0..=600)
            .map(|j| 4.0 * I * (I * lam * (j as f64 * step)).exp())
            .collect();
        let omega = MarchenkoKernel {
            side: Side::Left,
            step,
            values,
        };
        let zeros = vec![ZERO; 601];
        let s = spectral_sums(&omega, &zeros, &PencilOptions::default()).unwrap();
        assert_eq!(s.values.len(), 20);
        // 0.25 / 0.0125 = 20 is already even
        assert!((s.step - 0.25).abs() < 1e-12);
        let id = identify(&s, &PencilOptions::default()).unwrap();
        assert!((id.states[0].lambda - lam).norm() < 1e-10);
        let odd = MarchenkoKernel {
            step: 0.25 / 13.0,
            ..omega.clone()
        };
        let s = spectral_sums(&odd, &zeros, &PencilOptions::default()).unwrap();
        assert!((s.step / odd.step - 14.0).abs() < 1e-9 || (s.step / odd.step - 12.0).abs() < 1e-9);
        assert!(spectral_sums(&omega, &zeros[1..], &PencilOptions::default()).is_err());
    }

    #[test]
    fn json_shape() {
        let d = SpectralData {
            bound_states: vec![BoundState {
                lambda: C::new(-0.1, 2.0),
                multiplicity: 1,
            }],
            gamma_left: vec![vec![4.0 * I]],
            gamma_right: vec![vec![-4.0 * I]],
        };
        let v = d.to_json();
        assert_eq!(v["bound_states"][0]["mult"], 1);
        assert_eq!(v["gamma_left"][0][0]["im"], 4.0);
        assert_eq!(v["gamma_right"][0][0]["im"], -4.0);
        assert_eq!(d.num(), 1);
    }

    proptest! {
        #[test]
        fn rank_robust_to_overestimate(
            extra in 0usize..4,
            re1 in -1.0f64..1.0, im1 in 0.3f64..2.5,
            re2 in -1.0f64..1.0, im2 in 0.3f64..2.5,
            g1 in 0.5f64..5.0, g2 in 0.5f64..5.0,
        ) {
            let (l1, l2) = (C::new(re1, im1), C::new(re2, im2));
            prop_assume!((l1 - l2).norm() > 0.2);
            let m = 2;
            let m_over = m + extra;
            let terms = [(l1, vec![C::new(g1, 0.0)]), (l2, vec![C::new(0.0, g2)])];
            let s = synth(Side::Left, 0.25, 4 * m_over, &terms, m_over);
            let id = identify(&s, &PencilOptions { m_over, ..Default::default() }).unwrap();
            prop_assert_eq!(id.states.len(), m);
            for (lam, g) in &terms {
                let j = id.states.iter().position(|b| (b.lambda - lam).norm() < 1e-8);
                prop_assert!(j.is_some(), "{:?}", id.states);
                prop_assert!((id.gamma[j.unwrap()][0] - g[0]).norm() < 1e-8 * g[0].norm().max(1.0));
            }
            // reconstruction
            prop_assert!(id.fit_residual < 1e-10);
        }
    }
}
