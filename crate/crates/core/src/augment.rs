//! Column augmentation, stochastic-monotone envelopes, stationary solves and
//! the small-queue QVP bounds.

use nalgebra::DMatrix;

use crate::error::{config_err, QvpError, Result};
use crate::matrix::{kernel_mass_deficit, KernelKind, TruncatedKernel};
use crate::tolerance::{ORDER, ROW_SUM, SQL_ORDERING, STATIONARY_RESIDUAL};

fn augment(k: &TruncatedKernel, col: usize, kind: KernelKind) -> Result<TruncatedKernel> {
    let d = kernel_mass_deficit(k)?;
    let mut m = k.entries().clone();
    for (i, di) in d.iter().enumerate() {
        m[(i, col)] += di;
    }
    k.with_entries(m, kind)
}

/// Sends each row's lost mass to the top state α.
pub fn last_column_augment(k: &TruncatedKernel) -> Result<TruncatedKernel> {
    augment(k, k.dim() - 1, KernelKind::Lca)
}

/// Sends each row's lost mass to the empty state.
pub fn first_column_augment(k: &TruncatedKernel) -> Result<TruncatedKernel> {
    augment(k, 0, KernelKind::Fca)
}

/// Outcome of a strong stochastic order comparison of `u` against `v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StOrder {
    /// u ≤st v
    Less,
    /// u ≥st v
    Greater,
    Equal,
    Incomparable,
}

fn tails(row: &[f64]) -> Vec<f64> {
    let mut t = vec![0.0; row.len() + 1];
    for j in (0..row.len()).rev() {
        t[j] = t[j + 1] + row[j];
    }
    t
}

/// Compares tail sums Σ_{i≥k} u_i and Σ_{i≥k} v_i for every k.
pub fn st_compare_rows(u: &[f64], v: &[f64]) -> Result<StOrder> {
    if u.len() != v.len() {
        return Err(config_err(format!("row lengths differ: {} vs {}", u.len(), v.len())));
    }
    for (name, r) in [("u", u), ("v", v)] {
        let s: f64 = r.iter().sum();
        if (s - 1.0).abs() > ROW_SUM {
            return Err(config_err(format!("{name} sums to {s}, expected 1")));
        }
    }
    let (tu, tv) = (tails(u), tails(v));
    let mut below = false;
    let mut above = false;
    for (a, b) in tu.iter().zip(&tv) {
        if a - b > ORDER {
            above = true;
        } else if b - a > ORDER {
            below = true;
        }
    }
    Ok(match (below, above) {
        (false, false) => StOrder::Equal,
        (true, false) => StOrder::Less,
        (false, true) => StOrder::Greater,
        (true, true) => StOrder::Incomparable,
    })
}

/// Every row is ≤st the next one.
pub fn is_stochastically_monotone(k: &TruncatedKernel) -> bool {
    (1..k.dim()).all(|i| {
        matches!(
            st_compare_rows(&k.row(i - 1), &k.row(i)),
            Ok(StOrder::Less | StOrder::Equal)
        )
    })
}

/// Envelope from running extremes of tail sums, rows visited in `order`.
fn envelope<I: Iterator<Item = usize>>(
    k: &TruncatedKernel,
    order: I,
    pick: fn(f64, f64) -> f64,
    kind: KernelKind,
) -> Result<TruncatedKernel> {
    if k.kind() == KernelKind::RawSubstochastic {
        return Err(config_err("monotone envelopes need a stochastic kernel"));
    }
    let n = k.dim();
    let mut m = DMatrix::zeros(n, n);
    let mut prev: Option<Vec<f64>> = None;
    let mut prev_row = 0usize;
    for i in order {
        let row = k.row(i);
        let own = tails(&row);
        let t: Vec<f64> = match &prev {
            None => own.clone(),
            Some(p) => own.iter().zip(p).map(|(a, b)| pick(*a, *b)).collect(),
        };
        if t == own {
            for j in 0..n {
                m[(i, j)] = row[j];
            }
        } else if prev.as_ref() == Some(&t) {
            for j in 0..n {
                m[(i, j)] = m[(prev_row, j)];
            }
        } else {
            for j in 0..n {
                let v = t[j] - t[j + 1];
                if !(-1e-12..=1.0 + 1e-12).contains(&v) {
                    return Err(QvpError::NumericalIntegrity(format!(
                        "{kind} envelope produced entry {v} at ({i}, {j})"
                    )));
                }
                m[(i, j)] = v.clamp(0.0, 1.0);
            }
        }
        prev = Some(t);
        prev_row = i;
    }
    k.with_entries(m, kind)
}

/// Smallest monotone kernel (in this construction) that ≥st-dominates `k` rowwise.
pub fn monotone_upper_envelope(k: &TruncatedKernel) -> Result<TruncatedKernel> {
    envelope(k, 0..k.dim(), f64::max, KernelKind::MonotoneUpper)
}

/// Monotone kernel that is ≤st `k` rowwise.
pub fn monotone_lower_envelope(k: &TruncatedKernel) -> Result<TruncatedKernel> {
    envelope(k, (0..k.dim()).rev(), f64::min, KernelKind::MonotoneLower)
}

/// Stationary law with the kind of kernel it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDist {
    pub probs: Vec<f64>,
    pub source: KernelKind,
}

impl StationaryDist {
    /// ε(j) = 1 − Σ_{i<j} π_i, i.e. Pr{q ≥ j}.
    pub fn tail(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.probs.len());
        let mut acc = 0.0f64;
        for p in &self.probs {
            out.push((1.0 - acc).clamp(0.0, 1.0));
            acc += p;
        }
        out
    }
}

/// Solves πᵀ(K − I + E) = 1ᵀ with a dense LU factorization.
pub fn solve_stationary(k: &TruncatedKernel) -> Result<StationaryDist> {
    let kind = k.kind().to_string();
    let fail = |reason: String| QvpError::Solver { kernel: kind.clone(), reason };
    if k.kind() == KernelKind::RawSubstochastic {
        return Err(fail("kernel is substochastic; augment it first".into()));
    }
    let n = k.dim();
    let a = k.entries() - DMatrix::identity(n, n) + DMatrix::from_element(n, n, 1.0);
    let lu = a.transpose().lu();
    let pivots = lu.u().diagonal();
    let scale = pivots.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if pivots.iter().any(|v| v.abs() <= 1e-13 * scale.max(1.0)) {
        return Err(fail("singular system; chain is not ergodic".into()));
    }
    let rhs = nalgebra::DVector::from_element(n, 1.0);
    let x = lu.solve(&rhs).ok_or_else(|| fail("singular system; chain is not ergodic".into()))?;
    let pi: Vec<f64> = x.iter().copied().collect();
    if let Some(v) = pi.iter().find(|v| **v < -STATIONARY_RESIDUAL || !v.is_finite()) {
        return Err(fail(format!("solution has entry {v}")));
    }
    let pi: Vec<f64> = pi.into_iter().map(|v| v.max(0.0)).collect();
    let row = nalgebra::DVector::from_vec(pi.clone());
    let res = (k.entries().transpose() * &row - &row).amax();
    let sum: f64 = pi.iter().sum();
    if res > STATIONARY_RESIDUAL || (sum - 1.0).abs() > STATIONARY_RESIDUAL {
        return Err(fail(format!("residual {res}, mass {sum}")));
    }
    Ok(StationaryDist { probs: pi, source: k.kind() })
}

/// Tail curves ε^u(j), ε^l(j) for j = 0..=α/κ and their values at α.
#[derive(Debug, Clone, PartialEq)]
pub struct SqlBounds {
    pub eps_upper: Vec<f64>,
    pub eps_lower: Vec<f64>,
    pub psi_u: f64,
    pub psi_l: f64,
}

pub fn sql_bounds(upper: &StationaryDist, lower: &StationaryDist) -> Result<SqlBounds> {
    if upper.probs.len() != lower.probs.len() {
        return Err(config_err("upper and lower stationary laws have different sizes"));
    }
    let eu = upper.tail();
    let el = lower.tail();
    for (j, (u, l)) in eu.iter().zip(&el).enumerate() {
        if *u < *l - SQL_ORDERING {
            return Err(QvpError::OrderingViolation { index: j, upper: *u, lower: *l });
        }
    }
    Ok(SqlBounds {
        psi_u: *eu.last().expect("nonempty"),
        psi_l: *el.last().expect("nonempty"),
        eps_upper: eu,
        eps_lower: el,
    })
}

/// The kernels and stationary laws derived from one raw Q_AA.
#[derive(Debug, Clone)]
pub struct SqlAnalysis {
    pub raw: TruncatedKernel,
    pub lca: TruncatedKernel,
    pub fca: TruncatedKernel,
    pub upper: TruncatedKernel,
    pub lower: TruncatedKernel,
    pub pi_lca: StationaryDist,
    pub pi_fca: StationaryDist,
    pub pi_upper: StationaryDist,
    pub pi_lower: StationaryDist,
    pub bounds: SqlBounds,
}

impl SqlAnalysis {
    pub fn from_raw(raw: TruncatedKernel) -> Result<Self> {
        let lca = last_column_augment(&raw)?;
        let fca = first_column_augment(&raw)?;
        let upper = monotone_upper_envelope(&lca)?;
        let lower = monotone_lower_envelope(&fca)?;
        let pi_lca = solve_stationary(&lca)?;
        let pi_fca = solve_stationary(&fca)?;
        let pi_upper = solve_stationary(&upper)?;
        let pi_lower = solve_stationary(&lower)?;
        let bounds = sql_bounds(&pi_upper, &pi_lower)?;
        Ok(SqlAnalysis { raw, lca, fca, upper, lower, pi_lca, pi_fca, pi_upper, pi_lower, bounds })
    }
}

/// π^(α)_k = π_k / Σ_{i≤α} π_i over states 0..=alpha.
pub fn censored_stationary_oracle(full: &[f64], alpha: usize) -> Result<Vec<f64>> {
    if alpha >= full.len() {
        return Err(config_err(format!("alpha = {alpha} must index into a vector of length {}", full.len())));
    }
    let head: f64 = full[..=alpha].iter().sum();
    if !(head > 0.0) {
        return Err(config_err("no stationary mass on 0..=alpha"));
    }
    Ok(full[..=alpha].iter().map(|p| p / head).collect())
}

/// Θ(α) = 2·Σ_{k>α} π_k, the least l1 error of any law on 0..=α.
pub fn l1_error_minimum(full_tail_mass: f64) -> f64 {
    2.0 * full_tail_mass
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn kern(rows: &[Vec<f64>], kind: KernelKind) -> TruncatedKernel {
        TruncatedKernel::from_rows(rows, kind, (rows.len() - 1) as f64, 1.0).unwrap()
    }

    #[test]
    fn augment_examples() {
        let raw = kern(&[vec![0.5, 0.3], vec![0.2, 0.8]], KernelKind::RawSubstochastic);
        let l = last_column_augment(&raw).unwrap();
        let f = first_column_augment(&raw).unwrap();
        assert_relative_eq!(l.get(0, 1), 0.5, epsilon = 1e-15);
        assert_relative_eq!(f.get(0, 0), 0.7, epsilon = 1e-15);
        assert_eq!(l.row(1), vec![0.2, 0.8]);
        let stoch = kern(&[vec![0.5, 0.5], vec![0.2, 0.8]], KernelKind::RawSubstochastic);
        assert_eq!(last_column_augment(&stoch).unwrap().entries(), stoch.entries());
        assert_eq!(first_column_augment(&stoch).unwrap().entries(), stoch.entries());
    }

    #[test]
    fn compare_examples() {
        assert_eq!(st_compare_rows(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), StOrder::Less);
        assert_eq!(st_compare_rows(&[0.0, 1.0], &[1.0, 0.0]).unwrap(), StOrder::Greater);
        assert_eq!(st_compare_rows(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), StOrder::Equal);
        assert_eq!(st_compare_rows(&[0.5, 0.0, 0.5], &[0.0, 1.0, 0.0]).unwrap(), StOrder::Incomparable);
        assert!(st_compare_rows(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn monotonicity_examples() {
        let id = kern(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]], KernelKind::Lca);
        assert!(is_stochastically_monotone(&id));
        let rev = kern(&[vec![0.0, 0.0, 1.0], vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0]], KernelKind::Lca);
        assert!(!is_stochastically_monotone(&rev));
    }

    #[test]
    fn envelope_examples() {
        let k = kern(&[vec![0.2, 0.8], vec![0.5, 0.5]], KernelKind::Lca);
        let u = monotone_upper_envelope(&k).unwrap();
        assert_relative_eq!(u.get(1, 0), 0.2, epsilon = 1e-15);
        assert_relative_eq!(u.get(1, 1), 0.8, epsilon = 1e-15);
        assert_eq!(u.row(0), vec![0.2, 0.8]);
        let k = kern(&[vec![0.2, 0.8], vec![0.5, 0.5]], KernelKind::Fca);
        let l = monotone_lower_envelope(&k).unwrap();
        assert_eq!(l.row(0), vec![0.5, 0.5]);
        assert_eq!(l.row(1), vec![0.5, 0.5]);
        let mono = kern(&[vec![0.6, 0.4], vec![0.1, 0.9]], KernelKind::Lca);
        assert_eq!(monotone_upper_envelope(&mono).unwrap().entries(), mono.entries());
        assert_eq!(monotone_lower_envelope(&mono).unwrap().entries(), mono.entries());
    }

    #[test]
    fn stationary_examples() {
        let k = kern(&[vec![0.3, 0.7], vec![0.7, 0.3]], KernelKind::Lca);
        let pi = solve_stationary(&k).unwrap();
        assert_relative_eq!(pi.probs[0], 0.5, epsilon = 1e-14);
        let id = kern(&[vec![1.0, 0.0], vec![0.0, 1.0]], KernelKind::Lca);
        match solve_stationary(&id) {
            Err(QvpError::Solver { kernel, .. }) => assert_eq!(kernel, "lca"),
            other => panic!("expected solver error, got {other:?}"),
        }
    }

    #[test]
    fn birth_death_against_power_iteration() {
        let (up, down) = (0.3, 0.7);
        let rows = vec![vec![1.0 - up, up, 0.0], vec![down, 0.0, up], vec![0.0, down, 1.0 - down]];
        let pi = solve_stationary(&kern(&rows, KernelKind::Lca)).unwrap();
        let mut x = vec![1.0 / 3.0; 3];
        for _ in 0..10_000 {
            let next: Vec<f64> = (0..3).map(|j| (0..3).map(|i| x[i] * rows[i][j]).sum()).collect();
            let delta: f64 = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
            x = next;
            if delta < 1e-15 {
                break;
            }
        }
        for (a, b) in pi.probs.iter().zip(&x) {
            assert_relative_eq!(*a, *b, epsilon = 1e-10);
        }
    }

    #[test]
    fn sql_bounds_examples() {
        let at_zero = StationaryDist { probs: vec![1.0, 0.0, 0.0], source: KernelKind::MonotoneUpper };
        let b = sql_bounds(&at_zero, &at_zero).unwrap();
        assert_eq!(b.eps_upper, vec![1.0, 0.0, 0.0]);
        assert_eq!(b.eps_lower[0], 1.0);
        let hi = StationaryDist { probs: vec![0.2, 0.3, 0.5], source: KernelKind::MonotoneUpper };
        assert!(matches!(sql_bounds(&at_zero, &hi), Err(QvpError::OrderingViolation { index: 1, .. })));
        let b = sql_bounds(&hi, &at_zero).unwrap();
        assert_relative_eq!(b.psi_u, 0.5, epsilon = 1e-15);
        assert_eq!(b.psi_l, 0.0);
    }

    #[test]
    fn censoring_examples() {
        let c = censored_stationary_oracle(&[0.5, 0.25, 0.125, 0.125], 1).unwrap();
        assert_relative_eq!(c[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(c[1], 1.0 / 3.0, epsilon = 1e-15);
        let full = [0.5, 0.25, 0.25];
        assert_eq!(censored_stationary_oracle(&full, 2).unwrap(), full.to_vec());
        assert_eq!(censored_stationary_oracle(&[0.5, 0.5, 0.0], 1).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn l1_examples() {
        assert_eq!(l1_error_minimum(0.0), 0.0);
        assert_relative_eq!(l1_error_minimum(0.05), 0.1);
        // Geometric law with θ = 1: Σ_{k>4} (1−e^{−1})e^{−k} = e^{−5}.
        let th = 1.0f64;
        let tail: f64 = (5..400).map(|k| (1.0 - (-th).exp()) * (-th * k as f64).exp()).sum();
        assert_relative_eq!(l1_error_minimum(tail), 2.0 * (-5.0f64).exp(), max_relative = 1e-12);
    }

    fn stochastic_matrix(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(0.0..1.0f64, n), n).prop_map(|rows| {
            rows.into_iter()
                .map(|r| {
                    let s: f64 = r.iter().sum::<f64>() + 1e-9;
                    let mut r: Vec<f64> = r.iter().map(|v| (v + 1e-9 / r.len() as f64) / s).collect();
                    let fix: f64 = 1.0 - r.iter().sum::<f64>();
                    r[0] += fix;
                    r
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn envelopes_are_monotone_and_dominate(rows in (2usize..7).prop_flat_map(stochastic_matrix)) {
            let k = kern(&rows, KernelKind::Lca);
            let u = monotone_upper_envelope(&k).unwrap();
            let l = monotone_lower_envelope(&k).unwrap();
            prop_assert!(is_stochastically_monotone(&u));
            prop_assert!(is_stochastically_monotone(&l));
            for i in 0..k.dim() {
                let up = st_compare_rows(&k.row(i), &u.row(i)).unwrap();
                prop_assert!(matches!(up, StOrder::Less | StOrder::Equal));
                let lo = st_compare_rows(&l.row(i), &k.row(i)).unwrap();
                prop_assert!(matches!(lo, StOrder::Less | StOrder::Equal));
            }
            let again = monotone_upper_envelope(&u).unwrap();
            prop_assert!((again.entries() - u.entries()).amax() <= 1e-12);
        }

        #[test]
        fn stationary_sandwich(rows in (2usize..7).prop_flat_map(stochastic_matrix)) {
            let k = kern(&rows, KernelKind::Lca);
            let u = monotone_upper_envelope(&k).unwrap();
            let l = monotone_lower_envelope(&k).unwrap();
            if let (Ok(pu), Ok(pl)) = (solve_stationary(&u), solve_stationary(&l)) {
                for (a, b) in pu.tail().iter().zip(pl.tail()) {
                    prop_assert!(*a >= b - 1e-10);
                }
            }
        }
    }
}
