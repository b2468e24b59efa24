//! Dense exact linear algebra: matrices over F_p and over a finite field.

use rand::Rng;

use crate::error::{Error, Result};
use crate::gf::{Field, FieldElem};

/// Row-major matrix over F_p.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FpMat {
    pub p: u64,
    pub rows: usize,
    pub cols: usize,
    data: Vec<u64>,
}

fn mod_inv(a: u64, p: u64) -> u64 {
    let mut e = p - 2;
    let mut base = a % p;
    let mut acc = 1u64;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        e >>= 1;
    }
    acc
}

impl FpMat {
    pub fn zero(p: u64, rows: usize, cols: usize) -> FpMat {
        FpMat { p, rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(p: u64, n: usize) -> FpMat {
        let mut m = FpMat::zero(p, n, n);
        for i in 0..n {
            m[(i, i)] = 1;
        }
        m
    }

    pub fn from_rows(p: u64, rows: &[Vec<u64>]) -> FpMat {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut m = FpMat::zero(p, r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v % p;
            }
        }
        m
    }

    /// Permutation matrix: row i has a 1 in column perm[i], so that the row
    /// action v -> v * M sends slot perm[i] of the output from slot i.
    pub fn permutation(p: u64, perm: &[usize]) -> FpMat {
        let n = perm.len();
        let mut m = FpMat::zero(p, n, n);
        for (i, &j) in perm.iter().enumerate() {
            m[(i, j)] = 1;
        }
        m
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn mul(&self, other: &FpMat) -> FpMat {
        assert_eq!(self.cols, other.rows);
        let p = self.p;
        let mut out = FpMat::zero(p, self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)];
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = (out[(i, j)] + a * other[(l, j)]) % p;
                }
            }
        }
        out
    }

    pub fn mul_row_vec(&self, v: &[u64]) -> Vec<u64> {
        // v * M for a row vector v
        assert_eq!(v.len(), self.rows);
        let p = self.p;
        let mut out = vec![0u64; self.cols];
        for (i, &a) in v.iter().enumerate() {
            if a % p == 0 {
                continue;
            }
            for j in 0..self.cols {
                out[j] = (out[j] + a % p * self[(i, j)]) % p;
            }
        }
        out
    }

    /// Gauss-Jordan inverse; `None` if singular.
    pub fn inverse(&self) -> Option<FpMat> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let p = self.p;
        let mut a = self.clone();
        let mut inv = FpMat::identity(p, n);
        for col in 0..n {
            let piv = (col..n).find(|&r| a[(r, col)] % p != 0)?;
            if piv != col {
                for j in 0..n {
                    a.data.swap(col * n + j, piv * n + j);
                    inv.data.swap(col * n + j, piv * n + j);
                }
            }
            let f = mod_inv(a[(col, col)], p);
            for j in 0..n {
                a[(col, j)] = a[(col, j)] * f % p;
                inv[(col, j)] = inv[(col, j)] * f % p;
            }
            for r in 0..n {
                if r != col && a[(r, col)] != 0 {
                    let f = a[(r, col)];
                    for j in 0..n {
                        let s = f * a[(col, j)] % p;
                        a[(r, j)] = (a[(r, j)] + p - s) % p;
                        let s = f * inv[(col, j)] % p;
                        inv[(r, j)] = (inv[(r, j)] + p - s) % p;
                    }
                }
            }
        }
        Some(inv)
    }

    pub fn is_invertible(&self) -> bool {
        self.rows == self.cols && self.inverse().is_some()
    }

    /// Solves `self * x = rhs` (column vector); `None` if inconsistent.
    /// When the system is underdetermined the free variables are set to 0.
    pub fn solve(&self, rhs: &[u64]) -> Option<Vec<u64>> {
        assert_eq!(rhs.len(), self.rows);
        let p = self.p;
        let mut a = self.clone();
        let mut b: Vec<u64> = rhs.iter().map(|&x| x % p).collect();
        let mut pivots: Vec<(usize, usize)> = Vec::new();
        let mut rank = 0usize;
        for col in 0..self.cols {
            let Some(piv) = (rank..self.rows).find(|&r| a[(r, col)] % p != 0) else {
                continue;
            };
            if piv != rank {
                for j in 0..self.cols {
                    a.data.swap(rank * self.cols + j, piv * self.cols + j);
                }
                b.swap(rank, piv);
            }
            let f = mod_inv(a[(rank, col)], p);
            for j in 0..self.cols {
                a[(rank, j)] = a[(rank, j)] * f % p;
            }
            b[rank] = b[rank] * f % p;
            for r in 0..self.rows {
                if r != rank && a[(r, col)] != 0 {
                    let f = a[(r, col)];
                    for j in 0..self.cols {
                        let s = f * a[(rank, j)] % p;
                        a[(r, j)] = (a[(r, j)] + p - s) % p;
                    }
                    b[r] = (b[r] + p - f * b[rank] % p) % p;
                }
            }
            pivots.push((rank, col));
            rank += 1;
        }
        if b.iter().skip(rank).any(|&x| x != 0) {
            return None;
        }
        let mut x = vec![0u64; self.cols];
        for &(r, c) in &pivots {
            x[c] = b[r];
        }
        Some(x)
    }

    pub fn random_invertible<R: Rng + ?Sized>(p: u64, n: usize, rng: &mut R) -> FpMat {
        loop {
            let mut m = FpMat::zero(p, n, n);
            for v in m.data.iter_mut() {
                *v = rng.gen_range(0..p);
            }
            if n == 0 || m.is_invertible() {
                return m;
            }
        }
    }

    pub fn random<R: Rng + ?Sized>(p: u64, rows: usize, cols: usize, rng: &mut R) -> FpMat {
        let mut m = FpMat::zero(p, rows, cols);
        for v in m.data.iter_mut() {
            *v = rng.gen_range(0..p);
        }
        m
    }
}

impl std::ops::Index<(usize, usize)> for FpMat {
    type Output = u64;
    fn index(&self, (i, j): (usize, usize)) -> &u64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for FpMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut u64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Row-major matrix over a finite field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FMatrix {
    pub field: Field,
    pub rows: usize,
    pub cols: usize,
    data: Vec<FieldElem>,
}

impl FMatrix {
    pub fn zero(field: &Field, rows: usize, cols: usize) -> FMatrix {
        FMatrix {
            field: field.clone(),
            rows,
            cols,
            data: vec![field.zero(); rows * cols],
        }
    }

    pub fn identity(field: &Field, n: usize) -> FMatrix {
        let mut m = FMatrix::zero(field, n, n);
        for i in 0..n {
            m[(i, i)] = field.one();
        }
        m
    }

    pub fn from_columns(field: &Field, cols: &[Vec<FieldElem>]) -> FMatrix {
        let c = cols.len();
        let r = cols.first().map_or(0, |x| x.len());
        let mut m = FMatrix::zero(field, r, c);
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), r, "ragged columns");
            for (i, v) in col.iter().enumerate() {
                m[(i, j)] = v.clone();
            }
        }
        m
    }

    pub fn mul_vec(&self, v: &[FieldElem]) -> Vec<FieldElem> {
        assert_eq!(v.len(), self.cols);
        let mut out = vec![self.field.zero(); self.rows];
        for i in 0..self.rows {
            let mut acc = self.field.zero();
            for j in 0..self.cols {
                let a = &self[(i, j)];
                if !a.is_zero() && !v[j].is_zero() {
                    acc = acc.add(&a.mul(&v[j]));
                }
            }
            out[i] = acc;
        }
        out
    }

    pub fn mul(&self, other: &FMatrix) -> FMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = FMatrix::zero(&self.field, self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)].clone();
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(l, j)];
                    if !b.is_zero() {
                        out[(i, j)] = out[(i, j)].add(&a.mul(b));
                    }
                }
            }
        }
        out
    }

    /// Gauss-Jordan inverse; `None` if singular.
    pub fn inverse(&self) -> Option<FMatrix> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = FMatrix::identity(&self.field, n);
        for col in 0..n {
            let piv = (col..n).find(|&r| !a[(r, col)].is_zero())?;
            if piv != col {
                for j in 0..n {
                    a.data.swap(col * n + j, piv * n + j);
                    inv.data.swap(col * n + j, piv * n + j);
                }
            }
            let f = a[(col, col)].inv().expect("pivot nonzero");
            for j in 0..n {
                a[(col, j)] = a[(col, j)].mul(&f);
                inv[(col, j)] = inv[(col, j)].mul(&f);
            }
            for r in 0..n {
                if r != col && !a[(r, col)].is_zero() {
                    let f = a[(r, col)].clone();
                    for j in 0..n {
                        let s = f.mul(&a[(col, j)]);
                        a[(r, j)] = a[(r, j)].sub(&s);
                        let s = f.mul(&inv[(col, j)]);
                        inv[(r, j)] = inv[(r, j)].sub(&s);
                    }
                }
            }
        }
        Some(inv)
    }

    pub fn is_invertible(&self) -> bool {
        self.rows == self.cols && self.inverse().is_some()
    }

    pub fn column(&self, j: usize) -> Vec<FieldElem> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }
}

impl std::ops::Index<(usize, usize)> for FMatrix {
    type Output = FieldElem;
    fn index(&self, (i, j): (usize, usize)) -> &FieldElem {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for FMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut FieldElem {
        &mut self.data[i * self.cols + j]
    }
}

/// Incremental echelon basis of a subspace of K^len, used for span and
/// membership computations over the field K.
#[derive(Clone, Debug)]
pub struct FieldEchelon {
    field: Field,
    len: usize,
    /// rows in echelon form, each paired with its pivot column
    rows: Vec<(usize, Vec<FieldElem>)>,
}

impl FieldEchelon {
    pub fn new(field: &Field, len: usize) -> FieldEchelon {
        FieldEchelon { field: field.clone(), len, rows: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    fn reduce_vec(&self, v: &mut [FieldElem]) {
        for (piv, row) in &self.rows {
            if !v[*piv].is_zero() {
                let f = v[*piv].clone();
                for (x, b) in v.iter_mut().zip(row) {
                    if !b.is_zero() {
                        *x = x.sub(&f.mul(b));
                    }
                }
            }
        }
    }

    /// Reduces and inserts `v`; returns true if it enlarged the span.
    pub fn insert(&mut self, v: &[FieldElem]) -> bool {
        assert_eq!(v.len(), self.len);
        let mut w = v.to_vec();
        self.reduce_vec(&mut w);
        let Some(piv) = w.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let inv = w[piv].inv().expect("nonzero");
        for x in w.iter_mut() {
            if !x.is_zero() {
                *x = x.mul(&inv);
            }
        }
        // keep existing rows reduced against the new one
        for (_, row) in self.rows.iter_mut() {
            if !row[piv].is_zero() {
                let f = row[piv].clone();
                for (x, b) in row.iter_mut().zip(&w) {
                    if !b.is_zero() {
                        *x = x.sub(&f.mul(b));
                    }
                }
            }
        }
        self.rows.push((piv, w));
        self.rows.sort_by_key(|(p, _)| *p);
        let _ = &self.field;
        true
    }

    pub fn contains(&self, v: &[FieldElem]) -> bool {
        let mut w = v.to_vec();
        self.reduce_vec(&mut w);
        w.iter().all(|x| x.is_zero())
    }
}

/// Solves `sum_j lambda_j * cols[j] = target` over the field; `None` if the
/// target is outside the column span, `Err` on shape mismatch.
pub fn solve_in_span(
    cols: &[Vec<FieldElem>],
    target: &[FieldElem],
) -> Result<Option<Vec<FieldElem>>> {
    let Some(first) = cols.first() else {
        return if target.iter().all(|x| x.is_zero()) {
            Ok(Some(vec![]))
        } else {
            Ok(None)
        };
    };
    let field = first[0].field().clone();
    let len = target.len();
    if cols.iter().any(|c| c.len() != len) {
        return Err(Error::ShapeError("column length mismatch".into()));
    }
    // Gaussian elimination on the augmented (len x (m+1)) system
    let m = cols.len();
    let mut a: Vec<Vec<FieldElem>> = (0..len)
        .map(|i| {
            let mut row: Vec<FieldElem> = cols.iter().map(|c| c[i].clone()).collect();
            row.push(target[i].clone());
            row
        })
        .collect();
    let mut rank = 0usize;
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    for col in 0..m {
        let Some(piv) = (rank..len).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(rank, piv);
        let f = a[rank][col].inv().expect("nonzero");
        for x in a[rank].iter_mut() {
            if !x.is_zero() {
                *x = x.mul(&f);
            }
        }
        for r in 0..len {
            if r != rank && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                let (pr, rr) = if r < rank {
                    let (lo, hi) = a.split_at_mut(rank);
                    (&hi[0], &mut lo[r])
                } else {
                    let (lo, hi) = a.split_at_mut(r);
                    (&lo[rank], &mut hi[0])
                };
                for (x, b) in rr.iter_mut().zip(pr) {
                    if !b.is_zero() {
                        *x = x.sub(&f.mul(b));
                    }
                }
            }
        }
        pivots.push((rank, col));
        rank += 1;
    }
    // consistency: all rows below the pivots must have zero rhs
    for row in a.iter().skip(rank) {
        if !row[m].is_zero() {
            return Ok(None);
        }
    }
    let mut x = vec![field.zero(); m];
    for &(r, c) in &pivots {
        x[c] = a[r][m].clone();
    }
    // the columns need not be independent; verify the combination exactly
    let mut check = vec![field.zero(); len];
    for (lambda, col) in x.iter().zip(cols) {
        if !lambda.is_zero() {
            for (acc, v) in check.iter_mut().zip(col) {
                *acc = acc.add(&lambda.mul(v));
            }
        }
    }
    if check.iter().zip(target).all(|(u, v)| u == v) {
        Ok(Some(x))
    } else {
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fp_inverse_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for p in [3u64, 5] {
            for n in 1..=4 {
                let m = FpMat::random_invertible(p, n, &mut rng);
                let inv = m.inverse().unwrap();
                assert_eq!(m.mul(&inv), FpMat::identity(p, n));
                assert_eq!(inv.mul(&m), FpMat::identity(p, n));
            }
        }
    }

    #[test]
    fn fp_solve() {
        let m = FpMat::from_rows(5, &[vec![1, 2], vec![3, 4]]);
        let x = m.solve(&[1, 0]).unwrap();
        // verify m x = rhs
        let r0 = (m[(0, 0)] * x[0] + m[(0, 1)] * x[1]) % 5;
        let r1 = (m[(1, 0)] * x[0] + m[(1, 1)] * x[1]) % 5;
        assert_eq!((r0, r1), (1, 0));
        // inconsistent system
        let m = FpMat::from_rows(5, &[vec![1, 2], vec![2, 4]]);
        assert!(m.solve(&[1, 3]).is_none());
    }

    #[test]
    fn field_matrix_inverse() {
        let f = Field::new(3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=4 {
            let mut m = FMatrix::zero(&f, n, n);
            loop {
                for i in 0..n {
                    for j in 0..n {
                        m[(i, j)] = f.random(&mut rng);
                    }
                }
                if m.is_invertible() {
                    break;
                }
            }
            let inv = m.inverse().unwrap();
            assert_eq!(m.mul(&inv), FMatrix::identity(&f, n));
        }
    }

    #[test]
    fn echelon_span_membership() {
        let f = Field::prime(5).unwrap();
        let mut ech = FieldEchelon::new(&f, 3);
        let v1 = vec![f.from_u64(1), f.from_u64(2), f.from_u64(0)];
        let v2 = vec![f.from_u64(0), f.from_u64(1), f.from_u64(1)];
        assert!(ech.insert(&v1));
        assert!(ech.insert(&v2));
        assert!(!ech.insert(&v1));
        let combo = vec![f.from_u64(2), f.from_u64(4 + 3), f.from_u64(3)];
        assert!(ech.contains(&combo)); // 2*v1 + 3*v2
        let outside = vec![f.from_u64(0), f.from_u64(0), f.from_u64(1)];
        assert!(!ech.contains(&outside));
    }

    #[test]
    fn span_solver() {
        let f = Field::new(3, 2).unwrap();
        let theta = f.elem(&[0, 1]).unwrap();
        let c1 = vec![f.one(), f.zero()];
        let c2 = vec![theta.clone(), f.one()];
        let target = vec![theta.add(&f.one()), f.from_u64(2)];
        let sol = solve_in_span(&[c1, c2], &target).unwrap().unwrap();
        // lambda_2 = 2, lambda_1 = theta + 1 - 2*theta = 1 - theta ... verify directly
        let lhs0 = sol[0].add(&sol[1].mul(&theta));
        let lhs1 = sol[1].clone();
        assert_eq!(lhs0, target[0]);
        assert_eq!(lhs1, target[1]);
    }
}
