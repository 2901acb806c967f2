#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;
use zs_scatter::quadrature::QuadratureRule;
use zs_scatter::volterra::{KernelPair, System};
use zs_scatter::PotentialGrid;

/// Coefficients of `F1 = a1 ∫ g1 F2` along the parallel and
/// `F2 = a2 ∫ g2 F1 + a2 g2 / 2` across it, plus whether `F1` is the up
/// component and whether the system lives below the bisector.
struct Shape {
    a1: f64,
    a2: f64,
    g1_is_u: bool,
    f1_is_up: bool,
    below: bool,
}

fn shape(system: System) -> Shape {
    match system {
        System::Kbar => Shape { a1: -1.0, a2: 1.0, g1_is_u: true, f1_is_up: true, below: false },
        System::K => Shape { a1: 1.0, a2: -1.0, g1_is_u: false, f1_is_up: false, below: false },
        System::Mbar => Shape { a1: -1.0, a2: 1.0, g1_is_u: false, f1_is_up: false, below: true },
        System::M => Shape { a1: 1.0, a2: -1.0, g1_is_u: true, f1_is_up: true, below: true },
    }
}

/// Every node of the triangle as one unknown, the collocated equations
/// assembled in full and solved by LU. Returns `(up, dn)` line by line.
pub fn volterra_dense(grid: &PotentialGrid, system: System) -> (Vec<Vec<C>>, Vec<Vec<C>>) {
    let n = grid.mesh_n() as i64;
    let w = (2 * n + 1) as usize;
    let h = grid.step();
    let sh = shape(system);
    // walking away from the collocation node toward the support edge
    let dir: i64 = if sh.below { -1 } else { 1 };
    let start = if sh.below { n } else { -n };
    let pos = |q: usize| start + dir * q as i64;
    let (gu, gv) = (|p: i64| grid.u(p), |p: i64| grid.v(p));
    let g1 = |p: i64| if sh.g1_is_u { gu(p) } else { gv(p) };
    let g2 = |p: i64| if sh.g1_is_u { gv(p) } else { gu(p) };

    let mut offset = vec![0usize; w + 1];
    for k in 0..w {
        offset[k + 1] = offset[k] + (w - k);
    }
    let tri = offset[w];
    let id = |k: usize, q: usize| offset[k] + q;
    let mut a = DMatrix::<C>::zeros(2 * tri, 2 * tri);
    let mut b = DVector::<C>::zeros(2 * tri);
    for k in 0..w {
        let len = w - k;
        let across = QuadratureRule::for_intervals(k);
        for q in 0..len {
            // F1 at the node: nodes q.. len-1 plus one more where F2 vanishes
            let r1 = id(k, q);
            a[(r1, r1)] += C::new(1.0, 0.0);
            let along = QuadratureRule::for_intervals(len - q);
            for j in 0..len - q {
                let p = pos(q + j);
                a[(r1, tri + id(k, q + j))] -= g1(p) * (sh.a1 * h * along.weights[j]);
            }
            // F2 at the node: from the node to the bisector midpoint
            let r2 = tri + r1;
            a[(r2, r2)] += C::new(1.0, 0.0);
            for j in 0..=k {
                let p = pos(q + j);
                a[(r2, id(k - j, q + j))] -= g2(p) * (sh.a2 * h * across.weights[j]);
            }
            b[r2] = g2(pos(q + k)) * (0.5 * sh.a2);
        }
    }
    let x = a.lu().solve(&b).expect("singular Nyström matrix");
    let split = |base: usize| -> Vec<Vec<C>> {
        (0..w)
            .map(|k| (0..w - k).map(|q| x[base + id(k, q)]).collect())
            .collect()
    };
    let (f1, f2) = (split(0), split(tri));
    if sh.f1_is_up {
        (f1, f2)
    } else {
        (f2, f1)
    }
}

/// Largest nodewise difference between a solved pair and the dense oracle.
pub fn volterra_gap(pair: &KernelPair, oracle: &(Vec<Vec<C>>, Vec<Vec<C>>)) -> f64 {
    let mut worst = 0.0f64;
    for (field, lines) in [(&pair.up, &oracle.0), (&pair.dn, &oracle.1)] {
        for (k, line) in lines.iter().enumerate() {
            for (a, b) in field.line(k).iter().zip(line) {
                worst = worst.max((a - b).norm());
            }
        }
    }
    worst
}

/// Dense solve of a Marchenko system: unknown `j` sits at distance `j` from
/// the boundary and equation `i` collocates at distance `n - i`.
pub fn marchenko_dense(
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
    a.lu().solve(&b).expect("singular Marchenko matrix").as_slice().to_vec()
}

/// A smooth, non-symmetric potential with both real and imaginary parts.
pub fn smooth_grid(n: usize, half_width: f64, case: zs_scatter::Case) -> PotentialGrid {
    let u = (-(n as i64)..=n as i64)
        .map(|p| {
            let x = p as f64 * half_width / n as f64;
            C::new(1.1 * (-x * x).exp() + 0.2 * x, 0.6 * (1.3 * x).sin() - 0.15)
        })
        .collect();
    PotentialGrid::from_samples(u, half_width, case).unwrap()
}
