//! Complex banded LU factorization with partial pivoting.
//!
//! Column-major band storage in the LAPACK `gbtrf` layout: entry (i, j) lives
//! at row `kl + ku + i - j` of column `j`, with `kl` extra rows on top for
//! the fill-in produced by row interchanges.

use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    data: Vec<Complex64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            ldab,
            data: vec![Complex64::new(0.0, 0.0); ldab * n],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    fn index(&self, i: usize, j: usize) -> usize {
        j * self.ldab + (self.kl + self.ku + i - j)
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && i <= j + self.kl && j <= i + self.ku
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        if self.in_band(i, j) {
            self.data[self.index(i, j)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    /// Adds `v` to entry (i, j). Panics outside the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: Complex64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let p = self.index(i, j);
        self.data[p] += v;
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.n];
        for j in 0..self.n {
            let lo = j.saturating_sub(self.ku);
            let hi = (j + self.kl).min(self.n - 1);
            for (i, yi) in y.iter_mut().enumerate().take(hi + 1).skip(lo) {
                *yi += self.data[self.index(i, j)] * x[j];
            }
        }
        y
    }

    /// LU factorization in place. Returns `Err(column)` on an exactly zero
    /// pivot.
    pub fn factorize(mut self) -> Result<BandLu, usize> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let kv = kl + ku;
        let ldab = self.ldab;
        let mut ipiv = vec![0usize; n];
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let col = j * ldab;
            let mut jp = 0;
            let mut best = self.data[col + kv].norm_sqr();
            for r in 1..=km {
                let v = self.data[col + kv + r].norm_sqr();
                if v > best {
                    best = v;
                    jp = r;
                }
            }
            ipiv[j] = j + jp;
            if best == 0.0 {
                return Err(j);
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                // swap rows j and j + jp over columns j..=ju
                for c in j..=ju {
                    let a = c * ldab + kv + j - c;
                    let b = c * ldab + kv + j + jp - c;
                    self.data.swap(a, b);
                }
            }
            let pivot_inv = 1.0 / self.data[col + kv];
            for r in 1..=km {
                self.data[col + kv + r] *= pivot_inv;
            }
            for c in j + 1..=ju {
                let cbase = c * ldab + kv - c;
                let t = self.data[cbase + j];
                if t == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for r in 1..=km {
                    let l = self.data[col + kv + r];
                    self.data[cbase + j + r] -= l * t;
                }
            }
        }
        Ok(BandLu { band: self, ipiv })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    band: BandMatrix,
    ipiv: Vec<usize>,
}

impl BandLu {
    pub fn size(&self) -> usize {
        self.band.n
    }

    /// Solves A x = b in place.
    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        let BandMatrix {
            n, kl, ku, ldab, ..
        } = self.band;
        let data = &self.band.data;
        let kv = kl + ku;
        // forward: apply P and L
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let km = kl.min(n - 1 - j);
            let bj = b[j];
            if bj != Complex64::new(0.0, 0.0) {
                let col = j * ldab + kv;
                for r in 1..=km {
                    b[j + r] -= data[col + r] * bj;
                }
            }
        }
        // backward: U has upper bandwidth kl + ku
        for j in (0..n).rev() {
            let col = j * ldab + kv;
            b[j] /= data[col];
            let bj = b[j];
            let lo = j.saturating_sub(kv);
            for i in lo..j {
                b[i] -= data[col + i - j] * bj;
            }
        }
    }
}
