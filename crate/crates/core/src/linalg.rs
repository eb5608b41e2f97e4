//! Symmetric banded and dense eigenvalue machinery for the discretized
//! operators. Everything here is real symmetric (or complex Hermitian for the
//! gauge cross-check); inertia-based bisection keeps eigenvalue extraction
//! robust in clustered spectra, and the Takahashi recursion produces the band
//! profile of the inverse at `O(n b^2)` cost for resolvent traces.

use crate::types::C64;

/// Symmetric banded matrix: `bands[d][i] = A[i+d][i]` for `d = 0..=bw`.
#[derive(Debug, Clone)]
pub(crate) struct SymBanded {
    pub n: usize,
    pub bw: usize,
    pub bands: Vec<Vec<f64>>,
}

impl SymBanded {
    pub fn zeros(n: usize, bw: usize) -> Self {
        let bands = (0..=bw).map(|d| vec![0.0; n - d.min(n)]).collect();
        SymBanded { n, bw, bands }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        if d > self.bw {
            0.0
        } else {
            self.bands[d][lo]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        assert!(d <= self.bw, "entry ({i},{j}) outside bandwidth {}", self.bw);
        self.bands[d][lo] = v;
    }

    /// Smallest pivot magnitude the factorizations tolerate: scaled to the
    /// matrix so a shift landing exactly on an eigenvalue cannot trigger an
    /// overflow cascade in the elimination.
    fn pivot_floor(&self, shift: f64) -> f64 {
        let mut scale = shift.abs();
        for band in &self.bands {
            for &v in band {
                scale = scale.max(v.abs());
            }
        }
        scale.max(1.0) * 1e-100
    }

    /// `L D L^T` factorization of `A - shift I`. Pivots are floored (sign
    /// kept, zero counted negative) so inertia counting at (near-)eigenvalue
    /// shifts stays defined.
    pub fn ldlt(&self, shift: f64) -> Ldlt {
        let n = self.n;
        let b = self.bw;
        let pivmin = self.pivot_floor(shift);
        let mut l = vec![vec![0.0f64; n]; b]; // l[d-1][j] = L[j+d][j]
        let mut diag = vec![0.0f64; n];
        for j in 0..n {
            let lo = j.saturating_sub(b);
            let mut dj = self.get(j, j) - shift;
            for k in lo..j {
                let ljk = l[j - k - 1][k];
                dj -= ljk * ljk * diag[k];
            }
            if dj.abs() < pivmin {
                dj = if dj > 0.0 { pivmin } else { -pivmin };
            }
            diag[j] = dj;
            for i in j + 1..(j + b + 1).min(n) {
                let mut v = self.get(i, j);
                let lo_i = i.saturating_sub(b).max(lo);
                for k in lo_i..j {
                    v -= l[i - k - 1][k] * l[j - k - 1][k] * diag[k];
                }
                l[i - j - 1][j] = v / dj;
            }
        }
        Ldlt { n, bw: b, l, diag }
    }

    /// Number of eigenvalues strictly below `shift`.
    pub fn count_below(&self, shift: f64) -> usize {
        self.ldlt(shift).negative_pivots()
    }

    /// Interval certain to contain the whole spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.n {
            let mut r = 0.0;
            for j in i.saturating_sub(self.bw)..(i + self.bw + 1).min(self.n) {
                if j != i {
                    r += self.get(i, j).abs();
                }
            }
            let d = self.get(i, i);
            lo = lo.min(d - r);
            hi = hi.max(d + r);
        }
        (lo, hi)
    }

    /// k-th smallest eigenvalue (0-indexed) by inertia bisection.
    pub fn eigenvalue_k(&self, k: usize, tol: f64) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        let scale = lo.abs().max(hi.abs()).max(1.0);
        while hi - lo > tol * scale {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break; // float resolution exhausted
            }
            if self.count_below(mid) >= k + 1 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// All eigenvalues strictly below `bound`, ascending.
    pub fn eigenvalues_below(&self, bound: f64, tol: f64) -> Vec<f64> {
        let count = self.count_below(bound);
        (0..count).map(|k| self.eigenvalue_k(k, tol)).collect()
    }

    /// All eigenvalues in `[lo, hi)`, ascending.
    pub fn eigenvalues_in(&self, lo: f64, hi: f64, tol: f64) -> Vec<f64> {
        let start = self.count_below(lo);
        let stop = self.count_below(hi);
        (start..stop).map(|k| self.eigenvalue_k(k, tol)).collect()
    }

    /// All eigenvalues, ascending.
    pub fn all_eigenvalues(&self, tol: f64) -> Vec<f64> {
        (0..self.n).map(|k| self.eigenvalue_k(k, tol)).collect()
    }
}

pub(crate) struct Ldlt {
    pub n: usize,
    pub bw: usize,
    /// `l[d-1][j] = L[j+d][j]`.
    pub l: Vec<Vec<f64>>,
    pub diag: Vec<f64>,
}

impl Ldlt {
    pub fn negative_pivots(&self) -> usize {
        self.diag.iter().filter(|&&d| d < 0.0).count()
    }

    /// Solve `A x = rhs` in place.
    pub fn solve(&self, x: &mut [f64]) {
        let (n, b) = (self.n, self.bw);
        for j in 0..n {
            let xj = x[j];
            if xj != 0.0 {
                for d in 1..=b.min(n - 1 - j) {
                    x[j + d] -= self.l[d - 1][j] * xj;
                }
            }
        }
        for j in 0..n {
            x[j] /= self.diag[j];
        }
        for j in (0..n).rev() {
            let mut acc = x[j];
            for d in 1..=b.min(n - 1 - j) {
                acc -= self.l[d - 1][j] * x[j + d];
            }
            x[j] = acc;
        }
    }

    /// Band profile of the inverse via the Takahashi recursion:
    /// `Z[i][j] = delta_ij / d_i - sum_k L[k][i] Z[k][j]` over `k > i` in the
    /// band, filled bottom-up. Returns bands in the same layout as the input.
    pub fn takahashi_band_inverse(&self) -> Vec<Vec<f64>> {
        let (n, b) = (self.n, self.bw);
        let mut z: Vec<Vec<f64>> = (0..=b).map(|d| vec![0.0; n - d.min(n)]).collect();
        let zget = |z: &Vec<Vec<f64>>, i: usize, j: usize| -> f64 {
            let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
            let d = hi - lo;
            if d > b {
                0.0
            } else {
                z[d][lo]
            }
        };
        for i in (0..n).rev() {
            for j in ((i)..(i + b + 1).min(n)).rev() {
                let mut v = if i == j { 1.0 / self.diag[i] } else { 0.0 };
                for d in 1..=b.min(n - 1 - i) {
                    let k = i + d;
                    let lki = self.l[d - 1][i];
                    if lki != 0.0 {
                        v -= lki * zget(&z, k, j);
                    }
                }
                z[j - i][i] = v;
            }
        }
        z
    }

    pub fn trace_inverse(&self) -> f64 {
        let z = self.takahashi_band_inverse();
        z[0].iter().sum()
    }
}

/// Complex Hermitian banded matrix for the gauge-transformed cross-check.
#[derive(Debug, Clone)]
pub(crate) struct HermBanded {
    pub n: usize,
    pub bw: usize,
    /// `bands[d][i] = A[i+d][i]` (lower part).
    pub bands: Vec<Vec<C64>>,
}

impl HermBanded {
    #[cfg(test)]
    pub fn from_real(a: &SymBanded) -> Self {
        HermBanded {
            n: a.n,
            bw: a.bw,
            bands: a
                .bands
                .iter()
                .map(|row| row.iter().map(|&v| C64::new(v, 0.0)).collect())
                .collect(),
        }
    }

    pub fn get_lower(&self, i: usize, j: usize) -> C64 {
        // i >= j required.
        let d = i - j;
        if d > self.bw {
            C64::new(0.0, 0.0)
        } else {
            self.bands[d][j]
        }
    }

    /// Unitary diagonal conjugation `U A U^*` with `U = diag(exp(i phases))`.
    #[cfg(test)]
    pub fn phase_conjugate(&self, phases: &[f64]) -> HermBanded {
        let mut out = self.clone();
        for d in 1..=self.bw {
            for j in 0..self.n - d {
                let i = j + d;
                let u = C64::new(0.0, phases[i] - phases[j]).exp();
                out.bands[d][j] = self.bands[d][j] * u;
            }
        }
        out
    }

    /// Inertia below `shift` via Hermitian `L D L^*` (D real).
    pub fn count_below(&self, shift: f64) -> usize {
        let n = self.n;
        let b = self.bw;
        let mut pivmin = shift.abs();
        for band in &self.bands {
            for v in band {
                pivmin = pivmin.max(v.norm());
            }
        }
        let pivmin = pivmin.max(1.0) * 1e-100;
        let mut l = vec![vec![C64::new(0.0, 0.0); n]; b];
        let mut diag = vec![0.0f64; n];
        let mut neg = 0usize;
        for j in 0..n {
            let lo = j.saturating_sub(b);
            let mut dj = self.get_lower(j, j).re - shift;
            for k in lo..j {
                let ljk = l[j - k - 1][k];
                dj -= ljk.norm_sqr() * diag[k];
            }
            if dj.abs() < pivmin {
                dj = if dj > 0.0 { pivmin } else { -pivmin };
            }
            if dj < 0.0 {
                neg += 1;
            }
            diag[j] = dj;
            for i in j + 1..(j + b + 1).min(n) {
                let mut v = self.get_lower(i, j);
                let lo_i = i.saturating_sub(b).max(lo);
                for k in lo_i..j {
                    v -= l[i - k - 1][k] * l[j - k - 1][k].conj() * diag[k];
                }
                l[i - j - 1][j] = v / dj;
            }
        }
        neg
    }

    pub fn gershgorin(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.n {
            let mut r = 0.0;
            for j in i.saturating_sub(self.bw)..i {
                r += self.get_lower(i, j).norm();
            }
            for j in i + 1..(i + self.bw + 1).min(self.n) {
                r += self.get_lower(j, i).norm();
            }
            let d = self.get_lower(i, i).re;
            lo = lo.min(d - r);
            hi = hi.max(d + r);
        }
        (lo, hi)
    }

    pub fn eigenvalue_k(&self, k: usize, tol: f64) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        let scale = lo.abs().max(hi.abs()).max(1.0);
        while hi - lo > tol * scale {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break; // float resolution exhausted
            }
            if self.count_below(mid) >= k + 1 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Householder reduction of a dense symmetric matrix (row-major, destroyed)
/// to tridiagonal form; eigenvalue-only variant.
pub(crate) fn householder_tridiag(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let idx = |i: usize, j: usize| i * n + j;
    let mut e = vec![0.0f64; n];
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        let mut scale = 0.0;
        if l > 0 {
            for k in 0..=l {
                scale += a[idx(i, k)].abs();
            }
            if scale == 0.0 {
                e[i] = a[idx(i, l)];
            } else {
                for k in 0..=l {
                    a[idx(i, k)] /= scale;
                    h += a[idx(i, k)] * a[idx(i, k)];
                }
                let f = a[idx(i, l)];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[idx(i, l)] = f - g;
                let mut f_acc = 0.0;
                for j in 0..=l {
                    let mut g_acc = 0.0;
                    for k in 0..=j {
                        g_acc += a[idx(j, k)] * a[idx(i, k)];
                    }
                    for k in j + 1..=l {
                        g_acc += a[idx(k, j)] * a[idx(i, k)];
                    }
                    e[j] = g_acc / h;
                    f_acc += e[j] * a[idx(i, j)];
                }
                let hh = f_acc / (h + h);
                for j in 0..=l {
                    let f = a[idx(i, j)];
                    e[j] -= hh * f;
                    let g = e[j];
                    for k in 0..=j {
                        a[idx(j, k)] -= f * e[k] + g * a[idx(i, k)];
                    }
                }
            }
        } else {
            e[i] = a[idx(i, l)];
        }
    }
    let d: Vec<f64> = (0..n).map(|i| a[idx(i, i)]).collect();
    e[0] = 0.0;
    (d, e)
}

/// Tridiagonal matrix as a banded wrapper (for inertia bisection).
pub(crate) fn tridiagonal(d: &[f64], e: &[f64]) -> SymBanded {
    let n = d.len();
    let mut t = SymBanded::zeros(n, 1);
    for i in 0..n {
        t.set(i, i, d[i]);
    }
    for i in 1..n {
        t.set(i, i - 1, e[i]);
    }
    t
}

/// All eigenvalues of a dense symmetric matrix (row-major), ascending.
pub(crate) fn dense_sym_eigenvalues(a: &mut [f64], n: usize, tol: f64) -> Vec<f64> {
    let (d, e) = householder_tridiag(a, n);
    tridiagonal(&d, &e).all_eigenvalues(tol)
}

/// Trace norm of the rank-two operator `u -> (u,f) f - (u,g) g` in closed
/// form; the spectrum is `+-sqrt` of the eigenvalues of a 2x2 Gram problem.
/// Kept as a cross-checked reference for low-rank nuclear norms; the dense
/// paths above do not need it.
#[allow(dead_code)]
pub(crate) fn rank_two_trace_norm(f: &[f64], g: &[f64]) -> f64 {
    let nf: f64 = f.iter().map(|v| v * v).sum();
    let ng: f64 = g.iter().map(|v| v * v).sum();
    let fg: f64 = f.iter().zip(g).map(|(a, b)| a * b).sum();
    let s = nf + ng;
    ((s * s - 4.0 * fg * fg).max(0.0)).sqrt()
}
