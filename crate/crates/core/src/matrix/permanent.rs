//! Exact permanent engines.
//!
//! `perm_bruteforce` enumerates permutations and is the reference oracle.
//! `perm_ryser` is Ryser's inclusion-exclusion over column subsets in Gray-code
//! order. `perm_glynn` is Glynn's sign-vector formula, also in Gray-code order;
//! it needs half the subsets and suffers far less cancellation on positive
//! matrices, so [`permanent`] routes larger sizes to it.
//!
//! Both subset engines divide every row by the geometric mean of its positive
//! entries before summing and add the logs back afterwards. The permanent is
//! multilinear in the rows, so this is exact, and it keeps the partial sums in
//! floating-point range for matrices in `n * Omega_n`.

use super::{log_factorial, LogValue, Matrix};
use crate::error::{Error, Result};
use crate::matching::Pattern;

pub const BRUTEFORCE_MAX_N: usize = 10;
pub const RYSER_MAX_N: usize = 30;

/// Sizes above this go to Glynn in [`permanent`].
const RYSER_PREFERRED_MAX_N: usize = 12;

/// Neumaier compensated accumulator.
#[derive(Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    #[inline]
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    /// Knuth's two-sum; same result class as `add` without the branch.
    #[inline(always)]
    fn add_branchless(&mut self, x: f64) {
        let t = self.sum + x;
        let z = t - self.sum;
        self.carry += (self.sum - (t - z)) + (x - z);
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Sum over all permutations of `prod_i m[i, pi(i)]`.
pub fn perm_bruteforce(m: &Matrix) -> Result<LogValue> {
    let n = m.n();
    if n > BRUTEFORCE_MAX_N {
        return Err(Error::SizeExceeded { what: "perm_bruteforce", n, limit: BRUTEFORCE_MAX_N });
    }
    // Rows are divided by their maxima so products stay near 1.
    let mut log_scale = 0.0;
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let mx = m.row(i).iter().copied().fold(0.0, f64::max);
        if mx == 0.0 {
            return Ok(LogValue::ZERO);
        }
        log_scale += mx.ln();
        rows.push(m.row(i).iter().map(|v| v / mx).collect::<Vec<_>>());
    }

    fn walk(rows: &[Vec<f64>], i: usize, used: &mut [bool], prod: f64, acc: &mut CompensatedSum) {
        if i == rows.len() {
            acc.add(prod);
            return;
        }
        for j in 0..rows.len() {
            let v = rows[i][j];
            if !used[j] && v != 0.0 {
                used[j] = true;
                walk(rows, i + 1, used, prod * v, acc);
                used[j] = false;
            }
        }
    }

    let mut acc = CompensatedSum::default();
    walk(&rows, 0, &mut vec![false; n], 1.0, &mut acc);
    let total = acc.total();
    Ok(if total > 0.0 { LogValue::from_ln(total.ln() + log_scale) } else { LogValue::ZERO })
}

/// Rows divided by the geometric mean of their positive entries, and the sum
/// of the logs of those means. `None` when some row is entirely zero.
fn normalized_rows(m: &Matrix) -> Option<(Vec<f64>, f64)> {
    let n = m.n();
    let mut data = Vec::with_capacity(n * n);
    let mut log_scale = 0.0;
    for i in 0..n {
        let (count, log_sum) = m
            .row(i)
            .iter()
            .filter(|&&v| v > 0.0)
            .fold((0usize, 0.0), |(c, s), &v| (c + 1, s + v.ln()));
        if count == 0 {
            return None;
        }
        let log_gm = log_sum / count as f64;
        let gm = log_gm.exp();
        log_scale += log_gm;
        data.extend(m.row(i).iter().map(|v| v / gm));
    }
    Some((data, log_scale))
}

fn check_size(m: &Matrix, what: &'static str) -> Result<()> {
    if m.n() > RYSER_MAX_N {
        return Err(Error::SizeExceeded { what, n: m.n(), limit: RYSER_MAX_N });
    }
    Ok(())
}

/// Turns a compensated subset sum into a `LogValue`, consulting the
/// positivity pattern to tell an exact zero from cancellation noise.
fn finish(m: &Matrix, total: f64, log_scale: f64, what: &str) -> Result<LogValue> {
    if !Pattern::of(m).has_perfect_matching() {
        return Ok(LogValue::ZERO);
    }
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Invariant(format!(
            "{what}: subset sum {total:e} lost all precision on a matrix with positive permanent"
        )));
    }
    Ok(LogValue::from_ln(total.ln() + log_scale))
}

#[inline]
fn product(v: &[f64]) -> f64 {
    let mut acc = [1.0f64; 4];
    let chunks = v.chunks_exact(4);
    let rest = chunks.remainder();
    for c in chunks {
        acc[0] *= c[0];
        acc[1] *= c[1];
        acc[2] *= c[2];
        acc[3] *= c[3];
    }
    let mut p = (acc[0] * acc[1]) * (acc[2] * acc[3]);
    for x in rest {
        p *= x;
    }
    p
}

/// Ryser's formula `perm(A) = (-1)^n sum_S (-1)^|S| prod_i sum_{j in S} a_ij`,
/// visiting column subsets in Gray-code order so each step adds or removes a
/// single column.
pub fn perm_ryser(m: &Matrix) -> Result<LogValue> {
    check_size(m, "perm_ryser")?;
    let n = m.n();
    let Some((data, log_scale)) = normalized_rows(m) else {
        return Ok(LogValue::ZERO);
    };
    // Column-major copy so adding a column is a contiguous update.
    let cols: Vec<f64> = (0..n).flat_map(|j| (0..n).map(move |i| (i, j))).map(|(i, j)| data[i * n + j]).collect();

    let mut row_sums = vec![0.0; n];
    let mut in_set = vec![false; n];
    let mut acc = CompensatedSum::default();
    let mut size = 0usize;
    for k in 1u64..(1u64 << n) {
        let j = k.trailing_zeros() as usize;
        let col = &cols[j * n..(j + 1) * n];
        if in_set[j] {
            for (r, a) in row_sums.iter_mut().zip(col) {
                *r -= a;
            }
            size -= 1;
        } else {
            for (r, a) in row_sums.iter_mut().zip(col) {
                *r += a;
            }
            size += 1;
        }
        in_set[j] = !in_set[j];
        let term = product(&row_sums);
        if (n - size) % 2 == 0 {
            acc.add(term);
        } else {
            acc.add(-term);
        }
    }
    finish(m, acc.total(), log_scale, "perm_ryser")
}

/// Glynn's formula
/// `perm(A) = 2^(1-n) sum_delta (prod_k delta_k) prod_j sum_i delta_i a_ij`
/// over sign vectors with `delta_0 = +1`, in Gray-code order.
pub fn perm_glynn(m: &Matrix) -> Result<LogValue> {
    check_size(m, "perm_glynn")?;
    let n = m.n();
    let Some((data, log_scale)) = normalized_rows(m) else {
        return Ok(LogValue::ZERO);
    };
    if n == 1 {
        return finish(m, data[0], log_scale, "perm_glynn");
    }
    let total = if n <= 8 {
        glynn_dispatch::<8>(&data, n)
    } else if n <= 16 {
        glynn_dispatch::<16>(&data, n)
    } else {
        glynn_dispatch::<32>(&data, n)
    };
    finish(m, total, log_scale - (n - 1) as f64 * std::f64::consts::LN_2, "perm_glynn")
}

/// Runs the Glynn kernel, using AVX2 when the CPU has it. The kernel performs
/// the same IEEE operations in the same order either way, so the result is
/// bitwise identical across the two paths.
fn glynn_dispatch<const W: usize>(data: &[f64], n: usize) -> f64 {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: the required target feature was detected at runtime.
            return unsafe { glynn_avx2::<W>(data, n) };
        }
    }
    glynn_kernel::<W>(data, n)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn glynn_avx2<const W: usize>(data: &[f64], n: usize) -> f64 {
    glynn_kernel::<W>(data, n)
}

/// Gray-code walk over sign vectors. Rows are padded to width `W` with zero
/// entries and column sums with ones, so the padding never changes a product.
#[inline(always)]
fn glynn_kernel<const W: usize>(data: &[f64], n: usize) -> f64 {
    let mut doubled = vec![[0.0f64; W]; n];
    let mut col_sums = [1.0f64; W];
    col_sums[..n].fill(0.0);
    for i in 0..n {
        for j in 0..n {
            let a = data[i * n + j];
            doubled[i][j] = 2.0 * a;
            col_sums[j] += a;
        }
    }

    // Four interleaved accumulators break the serial dependency of the sum.
    let mut acc = [CompensatedSum::default(); 4];
    acc[0].add_branchless(padded_product(&col_sums));
    // Multiplier applied to doubled row r on its next flip: -1 while the row
    // still carries a + sign.
    let mut flip = [-1.0f64; W];
    let mut sign = 1.0f64;
    for k in 1u64..(1u64 << (n - 1)) {
        let r = k.trailing_zeros() as usize + 1;
        let row = &doubled[r];
        let c = flip[r];
        for (s, a) in col_sums.iter_mut().zip(row) {
            *s += c * a;
        }
        flip[r] = -c;
        sign = -sign;
        acc[(k & 3) as usize].add_branchless(sign * padded_product(&col_sums));
    }
    let mut total = acc[0];
    for a in &acc[1..] {
        total.add_branchless(a.sum);
        total.add_branchless(a.carry);
    }
    total.total()
}

#[inline(always)]
fn padded_product<const W: usize>(v: &[f64; W]) -> f64 {
    let mut lanes = [1.0f64; 8];
    for chunk in v.chunks_exact(8) {
        for (l, x) in lanes.iter_mut().zip(chunk) {
            *l *= x;
        }
    }
    ((lanes[0] * lanes[4]) * (lanes[1] * lanes[5])) * ((lanes[2] * lanes[6]) * (lanes[3] * lanes[7]))
}

/// Exact permanent, choosing the engine by size.
pub fn permanent(m: &Matrix) -> Result<LogValue> {
    if m.n() <= RYSER_PREFERRED_MAX_N {
        perm_ryser(m)
    } else {
        perm_glynn(m)
    }
}

/// `(perm(M) / n!)^(1/n)`.
pub fn permanental_mean(m: &Matrix) -> Result<f64> {
    let n = m.n();
    let lp = permanent(m)?.ln().ok_or(Error::ZeroPermanent)?;
    Ok(((lp - log_factorial(n)) / n as f64).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    fn m22() -> Matrix {
        Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap()
    }

    #[test]
    fn bruteforce_examples() {
        assert!(close(perm_bruteforce(&m22()).unwrap().ln().unwrap(), 10f64.ln(), 1e-15));
        assert_eq!(perm_bruteforce(&Matrix::identity(4).unwrap()).unwrap().ln(), Some(0.0));
        assert!(close(perm_bruteforce(&Matrix::ones(3).unwrap()).unwrap().value(), 6.0, 1e-15));
    }

    #[test]
    fn bruteforce_size_guard() {
        let m = Matrix::ones(11).unwrap();
        assert!(matches!(perm_bruteforce(&m), Err(Error::SizeExceeded { limit: 10, .. })));
    }

    #[test]
    fn ryser_examples() {
        assert!(close(perm_ryser(&m22()).unwrap().value(), 10.0, 1e-12));
        let j4 = Matrix::uniform_stochastic(4).unwrap();
        let got = perm_ryser(&j4).unwrap().ln().unwrap();
        assert!((got - (24.0f64 / 256.0).ln()).abs() < 1e-12);
        assert!(matches!(
            perm_ryser(&Matrix::ones(31).unwrap()),
            Err(Error::SizeExceeded { limit: 30, .. })
        ));
    }

    #[test]
    fn glynn_examples() {
        assert!(close(perm_glynn(&m22()).unwrap().value(), 10.0, 1e-12));
        assert!(close(perm_glynn(&Matrix::from_rows(&[[7.0]]).unwrap()).unwrap().value(), 7.0, 1e-15));
        let ones = Matrix::ones(6).unwrap();
        assert!(close(perm_glynn(&ones).unwrap().value(), 720.0, 1e-12));
    }

    #[test]
    fn zero_permanent_detected() {
        let m = Matrix::from_rows(&[[1.0, 1.0], [0.0, 0.0]]).unwrap();
        assert_eq!(perm_ryser(&m).unwrap(), LogValue::ZERO);
        assert_eq!(perm_glynn(&m).unwrap(), LogValue::ZERO);
        assert_eq!(perm_bruteforce(&m).unwrap(), LogValue::ZERO);
        let m = Matrix::from_rows(&[[0.3, 0.7, 0.0], [0.2, 0.9, 0.0], [0.0, 0.0, 0.0]]).unwrap();
        assert_eq!(perm_ryser(&m).unwrap(), LogValue::ZERO);
        // rank-deficient pattern with no perfect matching
        let m = Matrix::from_rows(&[[0.3, 0.7, 0.5], [0.0, 0.0, 0.4], [0.0, 0.0, 0.9]]).unwrap();
        assert_eq!(perm_glynn(&m).unwrap(), LogValue::ZERO);
        assert!(matches!(permanental_mean(&m), Err(Error::ZeroPermanent)));
    }

    #[test]
    fn single_entry() {
        let m = Matrix::from_rows(&[[0.25]]).unwrap();
        assert!(close(perm_ryser(&m).unwrap().value(), 0.25, 1e-15));
        assert!(close(permanental_mean(&m).unwrap(), 0.25, 1e-15));
    }

    #[test]
    fn permanental_mean_examples() {
        assert!(close(permanental_mean(&Matrix::ones(3).unwrap()).unwrap(), 1.0, 1e-12));
        let p = Matrix::permutation(&[2, 0, 3, 1]).unwrap().scaled(4.0).unwrap();
        let expected = (256.0f64 / 24.0).powf(0.25);
        assert!(close(permanental_mean(&p).unwrap(), expected, 1e-12));
        assert!((expected - 1.80720).abs() < 1e-5);
        assert!(close(permanental_mean(&m22()).unwrap(), 5f64.sqrt(), 1e-12));
    }

    #[test]
    fn huge_entries_do_not_overflow() {
        // perm = 20! * 1e200, beyond f64 range
        let m = Matrix::filled(20, 1e10).unwrap();
        let lp = permanent(&m).unwrap().ln().unwrap();
        let expected = log_factorial(20) + 20.0 * 1e10f64.ln();
        assert!((lp - expected).abs() < 1e-9 * expected);
    }
}
