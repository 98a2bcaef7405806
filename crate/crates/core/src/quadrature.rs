//! Globally adaptive Gauss–Kronrod (7/15) integration.

use crate::error::{QvpError, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 4000;

/// Returns (Kronrod estimate, |Kronrod − Gauss|, ∫|f| estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs = fc.abs() * WGK[7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let (f1, f2) = (f(c - dx), f(c + dx));
        kron += WGK[j] * (f1 + f2);
        abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    (kron * h, ((kron - gauss) * h).abs(), abs * h.abs())
}

/// ∫_a^b f, where `b` may be `f64::INFINITY` (handled by x = a + t/(1−t)).
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    if b.is_infinite() {
        let g = |t: f64| {
            if t >= 1.0 {
                return 0.0;
            }
            let s = 1.0 - t;
            let v = f(a + t / s);
            if v == 0.0 {
                0.0
            } else {
                v / (s * s)
            }
        };
        return adaptive(&g, 0.0, 1.0, rel_tol);
    }
    if !(b >= a) {
        return Err(QvpError::Quadrature(format!("bad interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    adaptive(&f, a, b, rel_tol)
}

/// Sum of `integrate` over consecutive breakpoints `points[0] < points[1] < …`.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, points: &[f64], rel_tol: f64) -> Result<f64> {
    let mut total = 0.0;
    for w in points.windows(2) {
        if w[1] > w[0] {
            total += integrate(&f, w[0], w[1], rel_tol)?;
        }
    }
    Ok(total)
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    let (v, e, m) = gk15(f, a, b);
    let mut parts = vec![(a, b, v, e, m)];
    loop {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        let mag: f64 = parts.iter().map(|p| p.4).sum();
        if !total.is_finite() {
            return Err(QvpError::Quadrature(format!("non-finite integral on [{a}, {b}]")));
        }
        if err <= rel_tol * total.abs() || err <= 1e-14 * mag || err <= 1e-300 {
            return Ok(total);
        }
        if parts.len() >= MAX_INTERVALS {
            return Err(QvpError::Quadrature(format!(
                "no convergence on [{a}, {b}]: estimate {total}, error {err}"
            )));
        }
        let (idx, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (lo, hi, ..) = parts.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // Interval exhausted at machine precision; accept what we have.
            return Ok(total);
        }
        let (v1, e1, m1) = gk15(f, lo, mid);
        let (v2, e2, m2) = gk15(f, mid, hi);
        parts.push((lo, mid, v1, e1, m1));
        parts.push((mid, hi, v2, e2, m2));
    }
}
