//! The truncated polynomial algebra A(n) = k[x_1..x_n]/(x_1^p, .., x_n^p).
//!
//! Elements are dense coefficient tables of length p^n indexed by exponent
//! multi-indices in [0, p-1]^n, mixed-radix little-endian (the exponent of
//! x_1 is the fastest digit). Variable indices are 0-based throughout.

use std::fmt;

use crate::error::{Error, Result};
use crate::gf::{Field, FieldElem};

/// Decodes a flat index into the exponent vector.
pub fn index_to_exponents(idx: usize, p: u64, n: usize) -> Vec<u32> {
    let p = p as usize;
    let mut e = vec![0u32; n];
    let mut rem = idx;
    for x in e.iter_mut() {
        *x = (rem % p) as u32;
        rem /= p;
    }
    e
}

/// Encodes an exponent vector (entries < p) into a flat index.
pub fn exponents_to_index(exps: &[u32], p: u64, n: usize) -> usize {
    debug_assert_eq!(exps.len(), n);
    let p = p as usize;
    let mut idx = 0usize;
    for &e in exps.iter().rev() {
        idx = idx * p + e as usize;
    }
    idx
}

pub fn table_size(p: u64, n: usize) -> usize {
    (p as usize).pow(n as u32)
}

/// An element of A(n) over a fixed finite field.
#[derive(Clone, PartialEq, Eq)]
pub struct TruncPoly {
    field: Field,
    n: usize,
    coeffs: Vec<FieldElem>,
}

impl TruncPoly {
    pub fn zero(field: &Field, n: usize) -> TruncPoly {
        TruncPoly {
            field: field.clone(),
            n,
            coeffs: vec![field.zero(); table_size(field.p(), n)],
        }
    }

    pub fn constant(field: &Field, n: usize, c: FieldElem) -> TruncPoly {
        let mut f = TruncPoly::zero(field, n);
        f.coeffs[0] = c;
        f
    }

    pub fn one(field: &Field, n: usize) -> TruncPoly {
        TruncPoly::constant(field, n, field.one())
    }

    /// The generator x_i (0-based).
    pub fn var(field: &Field, n: usize, i: usize) -> Result<TruncPoly> {
        if i >= n {
            return Err(Error::IndexOutOfRange(i, n));
        }
        let mut f = TruncPoly::zero(field, n);
        let pw = (field.p() as usize).pow(i as u32);
        f.coeffs[pw] = field.one();
        Ok(f)
    }

    /// y_i = 1 + x_i.
    pub fn one_plus_var(field: &Field, n: usize, i: usize) -> Result<TruncPoly> {
        let mut f = TruncPoly::var(field, n, i)?;
        f.coeffs[0] = field.one();
        Ok(f)
    }

    pub fn monomial(field: &Field, n: usize, exps: &[u32], c: FieldElem) -> Result<TruncPoly> {
        if exps.len() != n || exps.iter().any(|&e| e as u64 >= field.p()) {
            return Err(Error::RangeError("bad exponent vector".into()));
        }
        let mut f = TruncPoly::zero(field, n);
        f.coeffs[exponents_to_index(exps, field.p(), n)] = c;
        Ok(f)
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[FieldElem] {
        &self.coeffs
    }

    pub fn coeff(&self, exps: &[u32]) -> &FieldElem {
        &self.coeffs[exponents_to_index(exps, self.field.p(), self.n)]
    }

    pub fn set_coeff(&mut self, exps: &[u32], c: FieldElem) {
        let idx = exponents_to_index(exps, self.field.p(), self.n);
        self.coeffs[idx] = c;
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn constant_term(&self) -> &FieldElem {
        &self.coeffs[0]
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs[1..].iter().all(|c| c.is_zero())
    }

    pub fn nonzero(&self) -> impl Iterator<Item = (usize, &FieldElem)> {
        self.coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero())
    }

    pub fn num_terms(&self) -> usize {
        self.nonzero().count()
    }

    fn check_compatible(&self, other: &TruncPoly) -> Result<()> {
        if self.field != other.field || self.n != other.n {
            return Err(Error::Incompatible(
                "polynomials from different algebras".into(),
            ));
        }
        Ok(())
    }

    pub fn add(&self, other: &TruncPoly) -> Result<TruncPoly> {
        self.check_compatible(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.add(b))
            .collect();
        Ok(TruncPoly { field: self.field.clone(), n: self.n, coeffs })
    }

    pub fn sub(&self, other: &TruncPoly) -> Result<TruncPoly> {
        self.check_compatible(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.sub(b))
            .collect();
        Ok(TruncPoly { field: self.field.clone(), n: self.n, coeffs })
    }

    pub fn neg(&self) -> TruncPoly {
        TruncPoly {
            field: self.field.clone(),
            n: self.n,
            coeffs: self.coeffs.iter().map(|c| c.neg()).collect(),
        }
    }

    pub fn scale(&self, c: &FieldElem) -> TruncPoly {
        if c.is_zero() {
            return TruncPoly::zero(&self.field, self.n);
        }
        TruncPoly {
            field: self.field.clone(),
            n: self.n,
            coeffs: self.coeffs.iter().map(|a| a.mul(c)).collect(),
        }
    }

    /// Product in A(n); exponent sums with any component >= p vanish.
    pub fn mul(&self, other: &TruncPoly) -> Result<TruncPoly> {
        self.check_compatible(other)?;
        let p = self.field.p();
        let pu = p as usize;
        let mut out = TruncPoly::zero(&self.field, self.n);
        let lhs: Vec<(Vec<u32>, &FieldElem)> = self
            .nonzero()
            .map(|(i, c)| (index_to_exponents(i, p, self.n), c))
            .collect();
        let rhs: Vec<(Vec<u32>, &FieldElem)> = other
            .nonzero()
            .map(|(i, c)| (index_to_exponents(i, p, self.n), c))
            .collect();
        for (ea, ca) in &lhs {
            for (eb, cb) in &rhs {
                let mut idx = 0usize;
                let mut ok = true;
                for (a, b) in ea.iter().zip(eb).rev() {
                    let s = (a + b) as usize;
                    if s >= pu {
                        ok = false;
                        break;
                    }
                    idx = idx * pu + s;
                }
                if ok {
                    out.coeffs[idx] = out.coeffs[idx].add(&ca.mul(cb));
                }
            }
        }
        Ok(out)
    }

    pub fn pow(&self, e: u64) -> Result<TruncPoly> {
        let mut acc = TruncPoly::one(&self.field, self.n);
        for _ in 0..e {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Formal partial derivative with respect to x_i (0-based).
    pub fn partial(&self, i: usize) -> Result<TruncPoly> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange(i, self.n));
        }
        let p = self.field.p();
        let stride = (p as usize).pow(i as u32);
        let mut out = TruncPoly::zero(&self.field, self.n);
        for (idx, c) in self.nonzero() {
            let e_i = (idx / stride) % p as usize;
            if e_i > 0 {
                out.coeffs[idx - stride] = c.scale_u64(e_i as u64);
            }
        }
        Ok(out)
    }

    /// Substitutes `images[i]` for x_i, term by term. This is the algebra
    /// homomorphism determined by the images whenever each image has zero
    /// constant term; with nonzero constant terms it is still the linear map
    /// sending the monomial representatives x^e to the image products.
    pub fn substitute(&self, images: &[TruncPoly]) -> Result<TruncPoly> {
        if images.len() != self.n {
            return Err(Error::Incompatible(format!(
                "expected {} images, got {}",
                self.n,
                images.len()
            )));
        }
        let first = images
            .first()
            .ok_or_else(|| Error::Incompatible("no images".into()))?;
        for im in images {
            if im.field != self.field || im.n != first.n {
                return Err(Error::Incompatible("images from different algebras".into()));
            }
        }
        let p = self.field.p();
        // lazily computed power tables images[i]^j
        let mut powers: Vec<Vec<Option<TruncPoly>>> =
            vec![vec![None; p as usize]; self.n];
        substitute_rec(self, &self.coeffs, self.n, images, &mut powers)
    }

    /// A unit iff the constant term is nonzero.
    pub fn is_unit(&self) -> bool {
        !self.coeffs[0].is_zero()
    }

    /// Inverse of a unit, by the Neumann series on the nilpotent part.
    pub fn invert_unit(&self) -> Result<TruncPoly> {
        let c = self.constant_term();
        let Some(c_inv) = c.inv() else {
            return Err(Error::NotAUnit);
        };
        // f = c (1 + nu), f^-1 = c^-1 sum (-nu)^j
        let mut nu = self.scale(&c_inv);
        nu.coeffs[0] = self.field.zero();
        let neg_nu = nu.neg();
        let mut acc = TruncPoly::one(&self.field, self.n);
        let mut term = TruncPoly::one(&self.field, self.n);
        let bound = (self.field.p() - 1) as usize * self.n + 1;
        for _ in 0..bound {
            term = term.mul(&neg_nu)?;
            if term.is_zero() {
                break;
            }
            acc = acc.add(&term)?;
        }
        Ok(acc.scale(&c_inv))
    }

    /// Total degree of a flat index.
    pub fn index_degree(idx: usize, p: u64, n: usize) -> i32 {
        index_to_exponents(idx, p, n).iter().map(|&e| e as i32).sum()
    }
}

fn substitute_rec(
    origin: &TruncPoly,
    coeffs: &[FieldElem],
    nvars: usize,
    images: &[TruncPoly],
    powers: &mut Vec<Vec<Option<TruncPoly>>>,
) -> Result<TruncPoly> {
    let img_field = images[0].field();
    let img_n = images[0].n();
    if nvars == 0 {
        return Ok(TruncPoly::constant(img_field, img_n, coeffs[0].clone()));
    }
    let p = origin.field().p() as usize;
    let slice = coeffs.len() / p;
    let var = nvars - 1;
    let mut acc = TruncPoly::zero(img_field, img_n);
    for j in 0..p {
        let chunk = &coeffs[j * slice..(j + 1) * slice];
        if chunk.iter().all(|c| c.is_zero()) {
            continue;
        }
        let inner = substitute_rec(origin, chunk, nvars - 1, images, powers)?;
        let term = if j == 0 {
            inner
        } else {
            let pw = image_power(images, var, j, powers)?;
            inner.mul(&pw)?
        };
        acc = acc.add(&term)?;
    }
    Ok(acc)
}

fn image_power(
    images: &[TruncPoly],
    var: usize,
    j: usize,
    powers: &mut Vec<Vec<Option<TruncPoly>>>,
) -> Result<TruncPoly> {
    if let Some(p) = &powers[var][j] {
        return Ok(p.clone());
    }
    let val = if j == 1 {
        images[var].clone()
    } else {
        let prev = image_power(images, var, j - 1, powers)?;
        prev.mul(&images[var])?
    };
    powers[var][j] = Some(val.clone());
    Ok(val)
}

impl fmt::Display for TruncPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.field.p();
        let mut terms: Vec<String> = Vec::new();
        for (idx, c) in self.nonzero() {
            let exps = index_to_exponents(idx, p, self.n);
            let mut parts: Vec<String> = Vec::new();
            if idx == 0 || !c.is_one() {
                parts.push(format!("{c}"));
            }
            for (i, &e) in exps.iter().enumerate() {
                match e {
                    0 => {}
                    1 => parts.push(format!("x{}", i + 1)),
                    _ => parts.push(format!("x{}^{}", i + 1, e)),
                }
            }
            terms.push(parts.join("*"));
        }
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(" + "))
        }
    }
}

impl fmt::Debug for TruncPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
