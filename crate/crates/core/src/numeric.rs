//! Small numerical toolkit: grids, bracketing root finders, golden-section
//! search and a few shape diagnostics used by the optimizers and tests.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// `n` evenly spaced points on `[a, b]`, endpoints included.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let step = (b - a) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { b } else { a + step * i as f64 })
                .collect()
        }
    }
}

/// `n` logarithmically spaced points on `[a, b]`, `0 < a <= b`.
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    debug_assert!(a > 0.0 && b >= a);
    let (la, lb) = (a.ln(), b.ln());
    linspace(la, lb, n)
        .into_iter()
        .enumerate()
        .map(|(i, l)| {
            if i == 0 {
                a
            } else if i + 1 == n {
                b
            } else {
                l.exp()
            }
        })
        .collect()
}

/// `ln(e^a + e^b)` without overflow.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Result of a bracketing bisection.
#[derive(Debug, Clone, Copy)]
pub struct Root {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
}

/// Bisection for a sign change of `f` on `[lo, hi]`.
///
/// Stops once the bracket is narrower than `x_tol` and `accept(x, f(x))`
/// holds, or after `max_iter` halvings.
pub fn bisect<F, A>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    x_tol: f64,
    max_iter: usize,
    accept: A,
) -> Result<Root>
where
    F: FnMut(f64) -> Result<f64>,
    A: Fn(f64, f64) -> bool,
{
    let f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo == 0.0 {
        return Ok(Root { x: lo, value: 0.0, iterations: 0 });
    }
    if f_hi == 0.0 {
        return Ok(Root { x: hi, value: 0.0, iterations: 0 });
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::InfeasibleTarget(format!(
            "no sign change on [{lo}, {hi}] (f = {f_lo:e}, {f_hi:e})"
        )));
    }
    let rising = f_hi > 0.0;
    let mut iterations = 0;
    loop {
        let mid = 0.5 * (lo + hi);
        let value = f(mid)?;
        iterations += 1;
        if value == 0.0 {
            return Ok(Root { x: mid, value, iterations });
        }
        if (value > 0.0) == rising {
            hi = mid;
        } else {
            lo = mid;
        }
        if (hi - lo <= x_tol && accept(mid, value)) || iterations >= max_iter {
            return Ok(Root { x: mid, value, iterations });
        }
    }
}

/// Maximizer returned by the searches below.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
}

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
pub fn golden_section_max<F>(mut f: F, mut a: f64, mut b: f64, x_tol: f64) -> Result<Maximum>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > x_tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd {
        Maximum { x: c, value: fc }
    } else {
        Maximum { x: d, value: fd }
    })
}

/// Scans `grid`, then refines with golden-section between the neighbours of
/// the best grid point. The returned value is never below the grid maximum.
pub fn bracketed_max<F>(mut f: F, grid: &[f64], x_tol: f64) -> Result<Maximum>
where
    F: FnMut(f64) -> Result<f64>,
{
    if grid.is_empty() {
        return Err(Error::domain("empty search grid"));
    }
    let mut best = Maximum { x: grid[0], value: f64::NEG_INFINITY };
    let mut best_idx = 0;
    for (i, &x) in grid.iter().enumerate() {
        let v = f(x)?;
        if v > best.value {
            best = Maximum { x, value: v };
            best_idx = i;
        }
    }
    if grid.len() < 2 {
        return Ok(best);
    }
    let lo = grid[best_idx.saturating_sub(1)];
    let hi = grid[(best_idx + 1).min(grid.len() - 1)];
    let refined = golden_section_max(&mut f, lo, hi, x_tol)?;
    Ok(if refined.value > best.value { refined } else { best })
}

/// Index of the largest element (first one on ties).
pub fn argmax(values: &[f64]) -> Option<usize> {
    values
        .iter()
        .enumerate()
        .fold(None, |acc: Option<(usize, f64)>, (i, &v)| match acc {
            Some((_, best)) if best >= v => acc,
            _ => Some((i, v)),
        })
        .map(|(i, _)| i)
}

/// Checks that `values` rises to a single peak and then falls, ignoring dips
/// and bumps smaller than `k · sqrt(s_i² + s_j²)` where `s` are the per-point
/// standard errors.
pub fn is_unimodal(values: &[f64], stderr: &[f64], k: f64) -> bool {
    debug_assert_eq!(values.len(), stderr.len());
    let Some(peak) = argmax(values) else {
        return true;
    };
    let tol = |i: usize, j: usize| k * stderr[i].hypot(stderr[j]);
    // left of the peak: no point may fall below an earlier point by more than tol
    let mut hi_idx = 0;
    for j in 0..=peak {
        if values[j] < values[hi_idx] - tol(hi_idx, j) {
            return false;
        }
        if values[j] > values[hi_idx] {
            hi_idx = j;
        }
    }
    // right of the peak: no point may rise above an earlier point by more than tol
    let mut lo_idx = peak;
    for j in peak..values.len() {
        if values[j] > values[lo_idx] + tol(lo_idx, j) {
            return false;
        }
        if values[j] < values[lo_idx] {
            lo_idx = j;
        }
    }
    true
}

/// Second differences `v[i-1] - 2 v[i] + v[i+1]` of a uniformly spaced sequence.
pub fn second_differences(values: &[f64]) -> Vec<f64> {
    values
        .windows(3)
        .map(|w| w[0] - 2.0 * w[1] + w[2])
        .collect()
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let avg = 0.5 * (i + j) as f64;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        return f64::NAN;
    }
    sab / (saa * sbb).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_hit_endpoints() {
        let g = linspace(0.0, 1.0, 11);
        assert_eq!(g.len(), 11);
        assert_eq!(g[10], 1.0);
        let l = logspace(1e-3, 1.0, 4);
        assert_eq!(l[0], 1e-3);
        assert_eq!(l[3], 1.0);
        assert!((l[1] - 1e-2).abs() < 1e-15);
    }

    #[test]
    fn log_add_exp_is_stable() {
        assert!((log_add_exp(2f64.ln(), 4f64.ln()) - 6f64.ln()).abs() < 1e-15);
        assert_eq!(log_add_exp(-2000.0, -3.0), -3.0);
        assert_eq!(log_add_exp(f64::NEG_INFINITY, f64::NEG_INFINITY), f64::NEG_INFINITY);
    }

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| Ok(x * x - 2.0), 0.0, 2.0, 1e-12, 200, |_, _| true).unwrap();
        assert!((r.x - 2f64.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn bisect_rejects_missing_bracket() {
        let err = bisect(|x| Ok(x * x + 1.0), -1.0, 1.0, 1e-9, 100, |_, _| true).unwrap_err();
        assert!(matches!(err, Error::InfeasibleTarget(_)));
    }

    #[test]
    fn golden_section_on_parabola() {
        let m = golden_section_max(|x| Ok(-(x - 0.3).powi(2)), 0.0, 1.0, 1e-8).unwrap();
        assert!((m.x - 0.3).abs() < 1e-7);
    }

    #[test]
    fn bracketed_max_never_below_grid() {
        // bimodal objective: golden alone on [0, 1] could lock onto the wrong peak
        let f = |x: f64| Ok((-(x - 0.1f64).powi(2) * 400.0).exp() + 1.2 * (-(x - 0.8f64).powi(2) * 400.0).exp());
        let grid = linspace(0.0, 1.0, 21);
        let m = bracketed_max(f, &grid, 1e-9).unwrap();
        assert!((m.x - 0.8).abs() < 1e-6);
    }

    #[test]
    fn unimodality_detects_double_peak() {
        let v = [0.0, 1.0, 2.0, 1.0, 2.5, 1.0];
        let s = [0.0; 6];
        assert!(!is_unimodal(&v, &s, 3.0));
        assert!(is_unimodal(&[0.0, 1.0, 3.0, 2.0, 1.0], &[0.0; 5], 3.0));
        // bump smaller than noise is tolerated
        let s = [0.4; 6];
        assert!(is_unimodal(&v, &s, 3.0));
    }

    #[test]
    fn spearman_handles_ties_and_reversal() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 1.0, 2.0, 3.0]) - 0.9486832980505138).abs() < 1e-12);
    }
}
