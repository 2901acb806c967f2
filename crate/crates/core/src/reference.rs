//! Closed-form oracles for the one-soliton potential, the bound-state count
//! of the Gaussian, and two independent integrators (adaptive Gauss-Kronrod
//! and a transfer-matrix ODE) that share nothing with the production scheme.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marchenko::{MarchenkoKernel, Side};
use crate::potential::{soliton_value, Case};
use crate::scattering::{norm2, ScatteringSamples, TransmissionSamples};
use crate::volterra::{KernelField, Which};

type C = Complex64;

const I: C = C::new(0.0, 1.0);

/// Exact scattering data of `u0 = 2iη e^{i(2ξx+φ)} sech(x0 - 2ηx)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolitonOracle {
    pub xi: f64,
    pub eta: f64,
    pub x0: f64,
    pub phi: f64,
}

impl SolitonOracle {
    pub fn new(xi: f64, eta: f64, x0: f64, phi: f64) -> Result<Self> {
        if eta == 0.0 || !eta.is_finite() {
            return Err(Error::InvalidPotential("soliton needs a nonzero eta".into()));
        }
        Ok(Self { xi, eta, x0, phi })
    }

    /// `a = η + iξ`.
    pub fn a(&self) -> C {
        C::new(self.eta, self.xi)
    }

    pub fn gamma_left(&self) -> C {
        I * (2.0 * self.eta) * C::new(self.x0, -self.phi).exp()
    }

    pub fn gamma_right(&self) -> C {
        -I * (2.0 * self.eta) * C::new(-self.x0, self.phi).exp()
    }

    /// The pole of `T`, `ia = -ξ + iη`.
    pub fn bound_state(&self) -> C {
        I * self.a()
    }

    pub fn u(&self, x: f64) -> C {
        soliton_value(self.xi, self.eta, self.x0, self.phi, x)
    }

    pub fn v(&self, x: f64) -> C {
        self.u(x).conj()
    }

    /// `(Kup, Kdn)(x, y)`, `y >= x`.
    pub fn exact_k(&self, x: f64, y: f64) -> Result<(C, C)> {
        if y < x {
            return Err(Error::Config(format!("K needs y >= x, got x={x}, y={y}")));
        }
        let a = self.a();
        let gl = self.gamma_left();
        let w = 1.0 / (1.0 + (2.0 * (self.x0 - 2.0 * self.eta * x)).exp());
        let e = (-a.conj() * (x + y)).exp();
        let up = gl.conj() * e * w;
        let dn = -(e * (-2.0 * a * x).exp()) * (gl.norm_sqr() / (2.0 * self.eta) * w);
        Ok((up, dn))
    }

    /// `(K̄up, K̄dn)(x, y)` through the focusing symmetry.
    pub fn exact_kbar(&self, x: f64, y: f64) -> Result<(C, C)> {
        let (up, dn) = self.exact_k(x, y)?;
        Ok((dn.conj(), -up.conj()))
    }

    /// `(Mup, Mdn)(x, y)`, `y <= x`.
    pub fn exact_m(&self, x: f64, y: f64) -> Result<(C, C)> {
        if y > x {
            return Err(Error::Config(format!("M needs y <= x, got x={x}, y={y}")));
        }
        let a = self.a();
        let gr = self.gamma_right();
        let w = 1.0 / (1.0 + (-2.0 * (self.x0 - 2.0 * self.eta * x)).exp());
        let e = (a.conj() * (x + y)).exp();
        let up = -(e * (2.0 * a * x).exp()) * (gr.norm_sqr() / (2.0 * self.eta) * w);
        let dn = gr.conj() * e * w;
        Ok((up, dn))
    }

    /// `(M̄up, M̄dn)(x, y)` through the focusing symmetry.
    pub fn exact_mbar(&self, x: f64, y: f64) -> Result<(C, C)> {
        let (up, dn) = self.exact_m(x, y)?;
        Ok((-dn.conj(), up.conj()))
    }

    /// `T(λ) = (λ + ia*) / (λ - ia)`.
    pub fn transmission(&self, lambda: C) -> Result<C> {
        let a = self.a();
        let den = lambda - I * a;
        if den.norm() < 1e-13 {
            return Err(Error::Pole(format!("T has its pole at λ = {}", I * a)));
        }
        Ok((lambda + I * a.conj()) / den)
    }

    /// `[[T, L], [R, T]]` with `L = R = 0`.
    pub fn exact_smatrix(&self, lambda: C) -> Result<[[C; 2]; 2]> {
        let t = self.transmission(lambda)?;
        let z = C::new(0.0, 0.0);
        Ok([[t, z], [z, t]])
    }

    /// `Ω_ℓ(α) = Γ_ℓ e^{-aα}` on `α >= 0`, `Ω_r(α) = Γ_r e^{aα}` on `α <= 0`.
    pub fn exact_omega(&self, side: Side, alpha: f64) -> C {
        match side {
            Side::Left => self.gamma_left() * (-self.a() * alpha).exp(),
            Side::Right => self.gamma_right() * (self.a() * alpha).exp(),
        }
    }
}

/// Number of bound states of the focusing Gaussian `q0 e^{iμx} e^{-x²/σ}`.
pub fn gaussian_bound_count(q0: f64, sigma: f64) -> Result<usize> {
    if !(q0 > 0.0) || !(sigma > 0.0) {
        return Err(Error::InvalidPotential(format!(
            "need q0 > 0 and sigma > 0, got q0={q0}, sigma={sigma}"
        )));
    }
    let value = q0 * (std::f64::consts::PI * sigma).sqrt();
    let t = value / std::f64::consts::PI + 0.5;
    let n = t.round();
    if n >= 1.0 && (value - (n - 0.5) * std::f64::consts::PI).abs() < 1e-12 {
        return Err(Error::DegenerateGaussian {
            value,
            n: n as usize,
        });
    }
    Ok(t.floor() as usize)
}

/// Bound-state count for either case: defocusing potentials have none.
pub fn gaussian_bound_count_for(q0: f64, sigma: f64, case: Case) -> Result<usize> {
    let n = gaussian_bound_count(q0, sigma)?;
    Ok(match case {
        Case::Focusing => n,
        Case::Defocusing => 0,
    })
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS_K: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GK_WEIGHTS_G: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> C, a: f64, b: f64) -> (C, f64) {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * GK_WEIGHTS_K[7];
    let mut g = fc * GK_WEIGHTS_G[3];
    for j in 0..7 {
        let d = r * GK_NODES[j];
        let s = f(c - d) + f(c + d);
        k += s * GK_WEIGHTS_K[j];
        if j % 2 == 1 {
            g += s * GK_WEIGHTS_G[j / 2];
        }
    }
    (k * r, ((k - g) * r).norm())
}

/// Adaptive Gauss-Kronrod (7/15) quadrature of a complex integrand.
pub fn adaptive_integral(f: impl Fn(f64) -> C, a: f64, b: f64, tol: f64) -> C {
    fn rec(f: &impl Fn(f64) -> C, a: f64, b: f64, tol: f64, whole: C, err: f64, depth: u32) -> C {
        if err <= tol || depth == 0 || (b - a).abs() < 1e-14 {
            return whole;
        }
        let m = 0.5 * (a + b);
        let (l, el) = gk15(f, a, m);
        let (r, er) = gk15(f, m, b);
        rec(f, a, m, 0.5 * tol, l, el, depth - 1) + rec(f, m, b, 0.5 * tol, r, er, depth - 1)
    }
    if a == b {
        return C::new(0.0, 0.0);
    }
    let (whole, err) = gk15(&f, a, b);
    rec(&f, a, b, tol, whole, err, 48)
}

/// `a(λ) = 1/T(λ)` by integrating the Zakharov-Shabat system across
/// `[-L, L]` with classical RK4. With `Ψ = (e^{-iλx} w1, e^{iλx} w2)` the
/// system reads `w1' = u e^{2iλx} w2`, `w2' = -v e^{-2iλx} w1`, started from
/// `w = (1, 0)` on the left.
pub fn transfer_a(
    u: impl Fn(f64) -> C,
    case: Case,
    half_width: f64,
    lambda: C,
    steps: usize,
) -> C {
    transfer(u, case, half_width, lambda, steps)[0]
}

/// Both components `w(L)`; at a bound state `w2(L)` is the proportionality
/// constant `b` between the left and right Jost solutions.
pub fn transfer(
    u: impl Fn(f64) -> C,
    case: Case,
    half_width: f64,
    lambda: C,
    steps: usize,
) -> [C; 2] {
    let h = 2.0 * half_width / steps as f64;
    let rhs = |x: f64, w: [C; 2]| -> [C; 2] {
        let ux = u(x);
        let vx = case.companion(ux);
        let e = (2.0 * I * lambda * x).exp();
        [ux * e * w[1], -(vx / e) * w[0]]
    };
    let mut w = [C::new(1.0, 0.0), C::new(0.0, 0.0)];
    for s in 0..steps {
        let x = -half_width + s as f64 * h;
        let k1 = rhs(x, w);
        let k2 = rhs(x + 0.5 * h, [w[0] + k1[0] * (0.5 * h), w[1] + k1[1] * (0.5 * h)]);
        let k3 = rhs(x + 0.5 * h, [w[0] + k2[0] * (0.5 * h), w[1] + k2[1] * (0.5 * h)]);
        let k4 = rhs(x + h, [w[0] + k3[0] * h, w[1] + k3[1] * h]);
        for c in 0..2 {
            w[c] += (k1[c] + k2[c] * 2.0 + k3[c] * 2.0 + k4[c]) * (h / 6.0);
        }
    }
    w
}

/// `Γ_ℓ = -i b / a'(λ_j)` for a simple zero `λ_j` of `a`, with `a'` from a
/// central difference. Only meaningful at a refined zero.
pub fn norming_constant_left(
    u: impl Fn(f64) -> C + Copy,
    case: Case,
    half_width: f64,
    lambda: C,
    steps: usize,
) -> C {
    let d = 1e-5 * lambda.norm().max(1.0);
    let b = transfer(u, case, half_width, lambda, steps)[1];
    let ap = (transfer_a(u, case, half_width, lambda + d, steps)
        - transfer_a(u, case, half_width, lambda - d, steps))
        / (2.0 * d);
    -I * b / ap
}

/// Refines a zero of `a(λ)` in the upper half plane by the secant method.
pub fn refine_bound_state(
    u: impl Fn(f64) -> C + Copy,
    case: Case,
    half_width: f64,
    guess: C,
    steps: usize,
) -> Result<C> {
    let a = |l: C| transfer_a(u, case, half_width, l, steps);
    let mut x0 = guess;
    let mut x1 = guess + C::new(1e-3, 1e-3);
    let mut f0 = a(x0);
    let mut f1 = a(x1);
    for _ in 0..60 {
        let den = f1 - f0;
        if den.norm() == 0.0 {
            break;
        }
        let x2 = x1 - f1 * (x1 - x0) / den;
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = a(x1);
        if (x1 - x0).norm() < 1e-13 * x1.norm().max(1.0) {
            break;
        }
    }
    if !(x1.im > 0.0) || !x1.re.is_finite() {
        return Err(Error::Identification(format!(
            "secant search from {guess} left the upper half plane"
        )));
    }
    Ok(x1)
}

/// `max |F - F_exact| / max |F_exact|` over every stored node of `field`.
pub fn kernel_error(oracle: &SolitonOracle, field: &KernelField) -> f64 {
    let mesh = field.mesh();
    let n = mesh.mesh_n;
    let h = mesh.step;
    let w = field.which();
    let (num, den) = (0..=2 * n)
        .into_par_iter()
        .map(|k| {
            let line = field.line(k);
            let mut num = 0.0f64;
            let mut den = 0.0f64;
            for (q, got) in line.iter().enumerate() {
                let x = mesh.x(field.x_index(q));
                let d = 2.0 * k as f64 * h;
                // exact evaluators cannot fail on their own half-plane
                let want = match w {
                    Which::KUp => oracle.exact_k(x, x + d).map(|p| p.0),
                    Which::KDn => oracle.exact_k(x, x + d).map(|p| p.1),
                    Which::KbarUp => oracle.exact_kbar(x, x + d).map(|p| p.0),
                    Which::KbarDn => oracle.exact_kbar(x, x + d).map(|p| p.1),
                    Which::MUp => oracle.exact_m(x, x - d).map(|p| p.0),
                    Which::MDn => oracle.exact_m(x, x - d).map(|p| p.1),
                    Which::MbarUp => oracle.exact_mbar(x, x - d).map(|p| p.0),
                    Which::MbarDn => oracle.exact_mbar(x, x - d).map(|p| p.1),
                }
                .unwrap_or(C::new(f64::NAN, f64::NAN));
                num = num.max((got - want).norm());
                den = den.max(want.norm());
            }
            (num, den)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    num / den
}

/// Relative error of a Marchenko kernel against `Γ e^{∓aα}`.
pub fn omega_error(oracle: &SolitonOracle, kernel: &MarchenkoKernel) -> f64 {
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for (j, v) in kernel.values.iter().enumerate() {
        let want = oracle.exact_omega(kernel.side, kernel.alpha(j));
        num = num.max((v - want).norm());
        den = den.max(want.norm());
    }
    num / den
}

/// `max ‖S̃ - S‖₂ / max ‖S‖₂` over the regular points of a real grid.
pub fn smatrix_error(oracle: &SolitonOracle, samples: &ScatteringSamples) -> Result<f64> {
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for j in 0..samples.lambda_grid.len() {
        if samples.near_pole[j] {
            continue;
        }
        let ex = oracle.exact_smatrix(C::new(samples.lambda_grid[j], 0.0))?;
        let d = [
            [samples.t[j] - ex[0][0], samples.l[j] - ex[0][1]],
            [samples.r[j] - ex[1][0], samples.t[j] - ex[1][1]],
        ];
        num = num.max(norm2(d));
        den = den.max(norm2(ex));
    }
    Ok(num / den)
}

/// `max |T̃ - T| / max |T|` over regular points of arbitrary `λ` samples.
pub fn transmission_error(oracle: &SolitonOracle, ts: &TransmissionSamples) -> f64 {
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for (j, &l) in ts.lambda.iter().enumerate() {
        if ts.near_pole[j] {
            continue;
        }
        if let Ok(want) = oracle.transmission(l) {
            num = num.max((ts.t_left[j] - want).norm());
            den = den.max(want.norm());
        }
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn test1() -> SolitonOracle {
        SolitonOracle::new(0.1, 2.0, 0.0, 0.0).unwrap()
    }

    #[test]
    fn bisector_identities() {
        let o = SolitonOracle::new(0.3, 1.2, 0.4, 0.7).unwrap();
        for &x in &[-3.0, -0.5, 0.0, 0.2, 2.5] {
            let (kup, _) = o.exact_k(x, x).unwrap();
            assert!((kup + o.u(x) * 0.5).norm() < 1e-12);
            let (_, kbdn) = o.exact_kbar(x, x).unwrap();
            assert!((kbdn - o.v(x) * 0.5).norm() < 1e-12);
            let (_, mdn) = o.exact_m(x, x).unwrap();
            assert!((mdn + o.v(x) * 0.5).norm() < 1e-12);
            let (mbup, _) = o.exact_mbar(x, x).unwrap();
            assert!((mbup - o.u(x) * 0.5).norm() < 1e-12);
            // energy diagonals
            let right = adaptive_integral(|z| o.u(z) * o.v(z), x, x + 40.0, 1e-14) * -0.5;
            let (_, kdn) = o.exact_k(x, x).unwrap();
            assert!((kdn - right).norm() < 1e-12, "{kdn} vs {right}");
            let left = adaptive_integral(|z| o.u(z) * o.v(z), x - 40.0, x, 1e-14) * -0.5;
            let (mup, _) = o.exact_m(x, x).unwrap();
            assert!((mup - left).norm() < 1e-12, "{mup} vs {left}");
        }
    }

    #[test]
    fn test1_values() {
        let o = test1();
        let (kup, _) = o.exact_k(0.0, 0.0).unwrap();
        assert!((kup - C::new(0.0, -2.0)).norm() < 1e-15);
        assert!((o.gamma_left() - C::new(0.0, 4.0)).norm() < 1e-15);
        assert!((o.exact_omega(Side::Left, 0.0) - C::new(0.0, 4.0)).norm() < 1e-15);
        assert!((o.bound_state() - C::new(-0.1, 2.0)).norm() < 1e-15);
        let t0 = o.transmission(C::new(0.0, 0.0)).unwrap();
        let a = o.a();
        assert!((t0 + a.conj() / a).norm() < 1e-15);
        assert!(o.transmission(o.bound_state()).is_err());
        let far = o.transmission(C::new(1e9, 0.0)).unwrap();
        assert!((far - 1.0).norm() < 1e-8);
        let (up, dn) = o.exact_k(30.0, 31.0).unwrap();
        assert!(up.norm() < 1e-40 && dn.norm() < 1e-40);
        assert!(o.exact_k(1.0, 0.0).is_err());
        assert!(o.exact_m(0.0, 1.0).is_err());
    }

    #[test]
    fn smatrix_is_j_unitary_on_the_real_line() {
        let o = test1();
        for j in -40..=40 {
            let l = j as f64 * 0.41;
            let t = o.transmission(C::new(l, 0.0)).unwrap();
            assert!((t.norm_sqr() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn transfer_matrix_reproduces_soliton_transmission() {
        let o = test1();
        for l in [C::new(-3.0, 0.0), C::new(0.5, 0.0), C::new(1.0, 1.0), C::new(-2.0, 5.0)] {
            let a = transfer_a(|x| o.u(x), Case::Focusing, 12.0, l, 24000);
            let t = o.transmission(l).unwrap();
            assert!((a * t - 1.0).norm() < 1e-9, "{l}: {}", a * t);
        }
        let z = refine_bound_state(|x| o.u(x), Case::Focusing, 12.0, C::new(0.0, 1.8), 24000).unwrap();
        assert!((z - o.bound_state()).norm() < 1e-9, "{z}");
    }

    #[test]
    fn norming_constant_matches_soliton() {
        for (xi, eta, x0, phi) in [(0.1, 2.0, 0.0, 0.0), (-0.3, 1.5, 0.7, 0.4), (0.2, 1.0, -0.5, 2.0)] {
            let o = SolitonOracle::new(xi, eta, x0, phi).unwrap();
            let g = norming_constant_left(|x| o.u(x), Case::Focusing, 10.0, o.bound_state(), 40000);
            let want = o.gamma_left();
            assert!((g - want).norm() < 1e-7 * want.norm(), "{g} vs {want}");
        }
    }

    #[test]
    fn gaussian_counts() {
        assert_eq!(gaussian_bound_count(2.5, 2.0).unwrap(), 2);
        assert_eq!(gaussian_bound_count(0.1, 2.0).unwrap(), 0);
        assert_eq!(gaussian_bound_count(1.9, 2.0).unwrap(), 2);
        assert_eq!(gaussian_bound_count_for(1.9, 2.0, Case::Defocusing).unwrap(), 0);
        let q0 = 1.5 * std::f64::consts::PI / (std::f64::consts::PI * 2.0).sqrt();
        assert!(matches!(
            gaussian_bound_count(q0, 2.0),
            Err(Error::DegenerateGaussian { n: 2, .. })
        ));
        assert!(gaussian_bound_count(-1.0, 2.0).is_err());
    }

    #[test]
    fn exact_k_solves_continuous_system() {
        // Kup(x,y) + ∫_x^{(x+y)/2} u Kdn(z, x+y-z) dz = -u((x+y)/2)/2
        // Kdn(x,y) - ∫_x^∞ v Kup(z, z+y-x) dz = 0
        let o = SolitonOracle::new(0.1, 2.0, 0.3, 0.2).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for _ in 0..20 {
            let x: f64 = rng.gen_range(-3.0..3.0);
            let y: f64 = x + rng.gen_range(0.0..4.0);
            let s = x + y;
            let (kup, kdn) = o.exact_k(x, y).unwrap();
            let i1 = adaptive_integral(
                |z| o.u(z) * o.exact_k(z, s - z).unwrap().1,
                x,
                0.5 * s,
                1e-14,
            );
            let r1 = kup + i1 + o.u(0.5 * s) * 0.5;
            let i2 = adaptive_integral(
                |z| o.v(z) * o.exact_k(z, z + y - x).unwrap().0,
                x,
                x.max(0.0) + 40.0 / o.eta,
                1e-14,
            );
            let r2 = kdn - i2;
            assert!(r1.norm() < 1e-10 && r2.norm() < 1e-10, "({x},{y}): {r1} {r2}");
        }
    }

    #[test]
    fn exact_m_solves_continuous_system() {
        // Mup(x,y) - ∫_{-∞}^x u Mdn(z, z+y-x) dz = 0
        // Mdn(x,y) + ∫_{(x+y)/2}^x v Mup(z, x+y-z) dz = -v((x+y)/2)/2
        let o = SolitonOracle::new(-0.2, 1.5, -0.4, 1.0).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        for _ in 0..20 {
            let x: f64 = rng.gen_range(-3.0..3.0);
            let y: f64 = x - rng.gen_range(0.0..4.0);
            let s = x + y;
            let (mup, mdn) = o.exact_m(x, y).unwrap();
            let i1 = adaptive_integral(
                |z| o.u(z) * o.exact_m(z, z + y - x).unwrap().1,
                x.min(0.0) - 40.0 / o.eta,
                x,
                1e-14,
            );
            let r1 = mup - i1;
            let i2 = adaptive_integral(
                |z| o.v(z) * o.exact_m(z, s - z).unwrap().0,
                0.5 * s,
                x,
                1e-14,
            );
            let r2 = mdn + i2 + o.v(0.5 * s) * 0.5;
            assert!(r1.norm() < 1e-10 && r2.norm() < 1e-10, "({x},{y}): {r1} {r2}");
        }
    }

    #[test]
    fn adaptive_integral_handles_oscillation() {
        let v = adaptive_integral(|x| C::new(0.0, 30.0 * x).exp(), 0.0, 1.0, 1e-14);
        let exact = (C::new(0.0, 30.0).exp() - 1.0) / C::new(0.0, 30.0);
        assert!((v - exact).norm() < 1e-13);
    }

    proptest! {
        #[test]
        fn soliton_transmission_unimodular(xi in -2.0f64..2.0, eta in 0.2f64..3.0, l in -20.0f64..20.0) {
            let o = SolitonOracle::new(xi, eta, 0.0, 0.0).unwrap();
            let t = o.transmission(C::new(l, 0.0)).unwrap();
            prop_assert!((t.norm() - 1.0).abs() < 1e-13);
        }

        #[test]
        fn bound_count_matches_window(q0 in 0.01f64..6.0, sigma in 0.1f64..5.0) {
            let value = q0 * (std::f64::consts::PI * sigma).sqrt();
            if let Ok(n) = gaussian_bound_count(q0, sigma) {
                let pi = std::f64::consts::PI;
                if n == 0 {
                    prop_assert!(value < pi / 2.0);
                } else {
                    prop_assert!((n as f64 - 0.5) * pi < value && value < (n as f64 + 0.5) * pi);
                }
            }
        }
    }
}
