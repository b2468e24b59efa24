//! Exact arithmetic in F_p and F_{p^k}, plus F_p-linear algebra on
//! extension-field elements.
//!
//! A field is described by an odd prime `p`, an extension degree `k` and a
//! monic irreducible modulus of degree `k` over F_p. Elements are stored as
//! coordinate vectors against the power basis `1, t, .., t^{k-1}` of the
//! modulus. The prime field uses the convention `k = 1`, modulus `x`.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use smallvec::SmallVec;

use crate::error::{Error, Result};

type Coords = SmallVec<[u64; 4]>;

#[derive(Debug, PartialEq, Eq)]
struct FieldDesc {
    p: u64,
    k: usize,
    /// Low coefficients `m_0 .. m_{k-1}` of the monic modulus
    /// `x^k + m_{k-1} x^{k-1} + .. + m_0`.
    modulus: Vec<u64>,
}

/// Shared, validated descriptor of a finite field F_{p^k}.
#[derive(Clone, Debug)]
pub struct Field {
    inner: Arc<FieldDesc>,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || *self.inner == *other.inner
    }
}
impl Eq for Field {}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Remainder of `a` divided by monic `b` over F_p; both little-endian.
fn poly_rem(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let db = b.len() - 1;
    let mut r: Vec<u64> = a.to_vec();
    while r.len() > db {
        let lead = *r.last().unwrap() % p;
        let shift = r.len() - 1 - db;
        if lead != 0 {
            for j in 0..db {
                let sub = lead * (b[j] % p) % p;
                r[shift + j] = (r[shift + j] + p - sub) % p;
            }
        }
        r.pop();
        while r.len() > db && *r.last().unwrap() % p == 0 {
            r.pop();
        }
    }
    r
}

/// Searches for a monic divisor of degree `1..=k/2`; returns it if found.
fn find_monic_divisor(modulus_full: &[u64], p: u64) -> Option<Vec<u64>> {
    let k = modulus_full.len() - 1;
    for d in 1..=k / 2 {
        let count = (p as u128).pow(d as u32);
        for idx in 0..count {
            // divisor = x^d + c_{d-1} x^{d-1} + .. + c_0, coefficients from idx
            let mut g = vec![0u64; d + 1];
            g[d] = 1;
            let mut rem = idx;
            for c in g.iter_mut().take(d) {
                *c = (rem % p as u128) as u64;
                rem /= p as u128;
            }
            let r = poly_rem(modulus_full, &g, p);
            if r.iter().all(|&c| c % p == 0) {
                return Some(g);
            }
        }
    }
    None
}

fn poly_to_string(g: &[u64]) -> String {
    let terms: Vec<String> = g
        .iter()
        .enumerate()
        .rev()
        .filter(|(_, &c)| c != 0)
        .map(|(i, &c)| match i {
            0 => format!("{c}"),
            1 => format!("{c}*x"),
            _ => format!("{c}*x^{i}"),
        })
        .collect();
    terms.join(" + ")
}

impl Field {
    /// Builds F_{p^k} with the smallest monic irreducible modulus of degree
    /// `k` (coefficient tuples ordered as base-`p` integers, constant digit
    /// fastest). For `k = 1` the modulus is `x`.
    pub fn new(p: u64, k: usize) -> Result<Field> {
        if !is_prime(p) || p < 3 {
            return Err(Error::NonPrime(p));
        }
        if k == 0 {
            return Err(Error::RangeError("extension degree must be >= 1".into()));
        }
        if k == 1 {
            return Ok(Field {
                inner: Arc::new(FieldDesc { p, k, modulus: vec![0] }),
            });
        }
        let count = (p as u128).pow(k as u32);
        for idx in 0..count {
            let mut full = vec![0u64; k + 1];
            full[k] = 1;
            let mut rem = idx;
            for c in full.iter_mut().take(k) {
                *c = (rem % p as u128) as u64;
                rem /= p as u128;
            }
            if find_monic_divisor(&full, p).is_none() {
                return Ok(Field {
                    inner: Arc::new(FieldDesc { p, k, modulus: full[..k].to_vec() }),
                });
            }
        }
        unreachable!("irreducible polynomials of every degree exist over F_p")
    }

    /// Builds F_{p^k} from an explicit monic modulus, given as the full
    /// little-endian coefficient list `[m_0, .., m_{k-1}, 1]`.
    pub fn with_modulus(p: u64, k: usize, modulus_full: &[u64]) -> Result<Field> {
        if !is_prime(p) || p < 3 {
            return Err(Error::NonPrime(p));
        }
        if k == 0 || modulus_full.len() != k + 1 {
            return Err(Error::RangeError(format!(
                "modulus must have {} coefficients",
                k + 1
            )));
        }
        if modulus_full[k] != 1 {
            return Err(Error::RangeError("modulus must be monic".into()));
        }
        let full: Vec<u64> = modulus_full.iter().map(|c| c % p).collect();
        if k == 1 {
            if full[0] != 0 {
                return Err(Error::RangeError(
                    "prime field uses the modulus x".into(),
                ));
            }
        } else if let Some(g) = find_monic_divisor(&full, p) {
            return Err(Error::ReducibleModulus(p, poly_to_string(&g)));
        }
        Ok(Field {
            inner: Arc::new(FieldDesc { p, k, modulus: full[..k].to_vec() }),
        })
    }

    /// The prime field F_p.
    pub fn prime(p: u64) -> Result<Field> {
        Field::new(p, 1)
    }

    pub fn p(&self) -> u64 {
        self.inner.p
    }

    pub fn k(&self) -> usize {
        self.inner.k
    }

    /// Field size p^k.
    pub fn order(&self) -> u128 {
        (self.inner.p as u128).pow(self.inner.k as u32)
    }

    /// Full modulus coefficient list `[m_0, .., m_{k-1}, 1]`.
    pub fn modulus_full(&self) -> Vec<u64> {
        let mut v = self.inner.modulus.clone();
        v.push(1);
        v
    }

    pub fn zero(&self) -> FieldElem {
        FieldElem {
            field: self.clone(),
            coords: smallvec::smallvec![0; self.inner.k],
        }
    }

    pub fn one(&self) -> FieldElem {
        self.from_u64(1)
    }

    /// Embeds a prime-field value (reduced mod p) as a constant.
    pub fn from_u64(&self, c: u64) -> FieldElem {
        let mut coords: Coords = smallvec::smallvec![0; self.inner.k];
        coords[0] = c % self.inner.p;
        FieldElem { field: self.clone(), coords }
    }

    pub fn from_i64(&self, c: i64) -> FieldElem {
        let p = self.inner.p as i64;
        self.from_u64(c.rem_euclid(p) as u64)
    }

    pub fn elem(&self, coords: &[u64]) -> Result<FieldElem> {
        if coords.len() != self.inner.k {
            return Err(Error::RangeError(format!(
                "expected {} coordinates, got {}",
                self.inner.k,
                coords.len()
            )));
        }
        Ok(FieldElem {
            field: self.clone(),
            coords: coords.iter().map(|c| c % self.inner.p).collect(),
        })
    }

    /// All field elements, in base-p coordinate order.
    pub fn elements(&self) -> impl Iterator<Item = FieldElem> + '_ {
        let n = self.order();
        (0..n).map(move |idx| self.elem_by_index(idx))
    }

    pub fn elem_by_index(&self, idx: u128) -> FieldElem {
        let p = self.inner.p as u128;
        let mut coords: Coords = smallvec::smallvec![0; self.inner.k];
        let mut rem = idx;
        for c in coords.iter_mut() {
            *c = (rem % p) as u64;
            rem /= p;
        }
        FieldElem { field: self.clone(), coords }
    }

    pub fn random<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> FieldElem {
        let coords: Coords = (0..self.inner.k)
            .map(|_| rng.gen_range(0..self.inner.p))
            .collect();
        FieldElem { field: self.clone(), coords }
    }

    pub fn random_nonzero<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> FieldElem {
        loop {
            let e = self.random(rng);
            if !e.is_zero() {
                return e;
            }
        }
    }
}

/// An element of F_{p^k}, carrying its field.
#[derive(Clone, Debug)]
pub struct FieldElem {
    field: Field,
    coords: Coords,
}

impl PartialEq for FieldElem {
    fn eq(&self, other: &Self) -> bool {
        self.coords == other.coords && self.field == other.field
    }
}
impl Eq for FieldElem {}

impl Hash for FieldElem {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.field.p().hash(state);
        self.coords.hash(state);
    }
}

impl PartialOrd for FieldElem {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Total order on the coordinate vector, index 0 first. This is the
/// byte order of the serialized form and the canonical tail order.
impl Ord for FieldElem {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.coords.cmp(&other.coords)
    }
}

impl fmt::Display for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.k() == 1 {
            write!(f, "{}", self.coords[0])
        } else {
            write!(
                f,
                "[{}]",
                self.coords
                    .iter()
                    .map(|c| c.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            )
        }
    }
}

impl FieldElem {
    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn coords(&self) -> &[u64] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    pub fn is_one(&self) -> bool {
        self.coords[0] == 1 && self.coords[1..].iter().all(|&c| c == 0)
    }

    /// The prime-subfield value if the element is a constant.
    pub fn as_prime(&self) -> Option<u64> {
        if self.coords[1..].iter().all(|&c| c == 0) {
            Some(self.coords[0])
        } else {
            None
        }
    }

    fn assert_same(&self, other: &FieldElem) {
        assert!(
            self.field == other.field,
            "field elements from different fields"
        );
    }

    pub fn add(&self, other: &FieldElem) -> FieldElem {
        self.assert_same(other);
        let p = self.field.p();
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a + b) % p)
            .collect();
        FieldElem { field: self.field.clone(), coords }
    }

    pub fn sub(&self, other: &FieldElem) -> FieldElem {
        self.assert_same(other);
        let p = self.field.p();
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a + p - b) % p)
            .collect();
        FieldElem { field: self.field.clone(), coords }
    }

    pub fn neg(&self) -> FieldElem {
        let p = self.field.p();
        let coords = self.coords.iter().map(|a| (p - a) % p).collect();
        FieldElem { field: self.field.clone(), coords }
    }

    pub fn mul(&self, other: &FieldElem) -> FieldElem {
        self.assert_same(other);
        let p = self.field.p();
        let k = self.field.k();
        if k == 1 {
            return FieldElem {
                field: self.field.clone(),
                coords: smallvec::smallvec![self.coords[0] * other.coords[0] % p],
            };
        }
        // schoolbook product, then reduce x^k by the modulus
        let mut prod = vec![0u64; 2 * k - 1];
        for (i, &a) in self.coords.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coords.iter().enumerate() {
                prod[i + j] = (prod[i + j] + a * b) % p;
            }
        }
        let m = &self.field.inner.modulus;
        for i in (k..2 * k - 1).rev() {
            let c = prod[i];
            if c != 0 {
                prod[i] = 0;
                for (j, &mj) in m.iter().enumerate() {
                    let sub = c * mj % p;
                    prod[i - k + j] = (prod[i - k + j] + p - sub) % p;
                }
            }
        }
        prod.truncate(k);
        FieldElem {
            field: self.field.clone(),
            coords: Coords::from_vec(prod),
        }
    }

    pub fn scale_u64(&self, c: u64) -> FieldElem {
        let p = self.field.p();
        let c = c % p;
        let coords = self.coords.iter().map(|a| a * c % p).collect();
        FieldElem { field: self.field.clone(), coords }
    }

    pub fn pow(&self, mut e: u128) -> FieldElem {
        let mut base = self.clone();
        let mut acc = self.field.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self) -> Option<FieldElem> {
        if self.is_zero() {
            return None;
        }
        Some(self.pow(self.field.order() - 2))
    }

    /// The Frobenius endomorphism a -> a^p.
    pub fn frobenius(&self) -> FieldElem {
        self.pow(self.field.p() as u128)
    }
}

/// True iff the elements are linearly independent over the prime field F_p.
/// The empty list is independent.
pub fn fp_independent(elems: &[FieldElem]) -> Result<bool> {
    let sub = fp_rref(elems)?;
    Ok(sub.basis().len() == elems.len())
}

/// The F_p-span of a set of field elements, held in row-reduced echelon
/// form on the coordinate vectors (pivot order: coordinate index 0 first).
#[derive(Clone, Debug)]
pub struct FpSubspace {
    field: Field,
    basis: Vec<FieldElem>,
    pivots: Vec<usize>,
}

/// Row-reduces the F_p-coordinate matrix of `elems`.
pub fn fp_rref(elems: &[FieldElem]) -> Result<FpSubspace> {
    let field = match elems.first() {
        Some(e) => e.field().clone(),
        None => {
            return Ok(FpSubspace {
                // placeholder field for the empty span; reduce() is identity
                field: Field::prime(3).expect("3 is prime"),
                basis: vec![],
                pivots: vec![],
            });
        }
    };
    if elems.iter().any(|e| *e.field() != field) {
        return Err(Error::MixedFields);
    }
    let p = field.p();
    let k = field.k();
    let mut rows: Vec<Vec<u64>> = elems.iter().map(|e| e.coords().to_vec()).collect();
    let mut pivots: Vec<usize> = Vec::new();
    let mut rank = 0usize;
    for col in 0..k {
        let Some(r) = (rank..rows.len()).find(|&r| rows[r][col] % p != 0) else {
            continue;
        };
        rows.swap(rank, r);
        let inv = mod_inv(rows[rank][col], p);
        for c in rows[rank].iter_mut() {
            *c = *c * inv % p;
        }
        let pivot_row = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && row[col] != 0 {
                let f = row[col];
                for (x, b) in row.iter_mut().zip(&pivot_row) {
                    *x = (*x + p - f * b % p) % p;
                }
            }
        }
        pivots.push(col);
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rows.truncate(rank);
    let basis = rows
        .into_iter()
        .map(|r| field.elem(&r).expect("length preserved"))
        .collect();
    Ok(FpSubspace { field, basis, pivots })
}

fn mod_inv(a: u64, p: u64) -> u64 {
    // Fermat
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

impl FpSubspace {
    pub fn basis(&self) -> &[FieldElem] {
        &self.basis
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// The unique representative of `v + V` whose coordinates vanish at all
    /// pivot positions. Idempotent and constant on cosets.
    pub fn reduce(&self, v: &FieldElem) -> FieldElem {
        if self.basis.is_empty() {
            return v.clone();
        }
        let p = self.field.p();
        let mut coords: Coords = v.coords().iter().copied().collect();
        for (row, &piv) in self.basis.iter().zip(&self.pivots) {
            let f = coords[piv] % p;
            if f != 0 {
                for (c, b) in coords.iter_mut().zip(row.coords()) {
                    *c = (*c + p - f * b % p) % p;
                }
            }
        }
        FieldElem { field: v.field().clone(), coords }
    }

    pub fn contains(&self, v: &FieldElem) -> bool {
        self.reduce(v).is_zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn f9() -> Field {
        Field::new(3, 2).unwrap()
    }

    fn f25() -> Field {
        Field::new(5, 2).unwrap()
    }

    #[test]
    fn prime_field_construction() {
        let f = Field::prime(5).unwrap();
        assert_eq!(f.p(), 5);
        assert_eq!(f.k(), 1);
        assert_eq!(f.order(), 5);
    }

    #[test]
    fn non_prime_rejected() {
        assert_eq!(Field::prime(6), Err(Error::NonPrime(6)));
        assert_eq!(Field::prime(2), Err(Error::NonPrime(2)));
        assert_eq!(Field::prime(1), Err(Error::NonPrime(1)));
    }

    #[test]
    fn f9_with_explicit_modulus() {
        // x^2 + 1 has no root mod 3 (1, 2, 2 at x = 0, 1, 2), so it is
        // irreducible and defines F_9.
        for x in 0..3u64 {
            assert_ne!((x * x + 1) % 3, 0);
        }
        let f = Field::with_modulus(3, 2, &[1, 0, 1]).unwrap();
        assert_eq!(f.order(), 9);
    }

    #[test]
    fn reducible_modulus_rejected() {
        // x^2 + 2 = (x-1)(x+1) mod 3: root search finds x = 1.
        assert_eq!((1u64 * 1 + 2) % 3, 0);
        let r = Field::with_modulus(3, 2, &[2, 0, 1]);
        assert!(matches!(r, Err(Error::ReducibleModulus(3, _))));
    }

    #[test]
    fn default_modulus_is_smallest() {
        // for p=3, k=2 the coefficient scan hits x^2+1 first
        assert_eq!(f9().modulus_full(), vec![1, 0, 1]);
        // for p=5: x^2 and x^2+1 are reducible (2^2 = -1 mod 5), x^2+2 is not
        assert_eq!(f25().modulus_full(), vec![2, 0, 1]);
    }

    #[test]
    fn field_axioms_exhaustive_small() {
        for field in [Field::prime(3).unwrap(), Field::prime(5).unwrap(), f9()] {
            let elems: Vec<_> = field.elements().collect();
            for a in &elems {
                for b in &elems {
                    assert_eq!(a.add(b), b.add(a));
                    assert_eq!(a.mul(b), b.mul(a));
                    if !a.is_zero() {
                        let inv = a.inv().unwrap();
                        assert!(a.mul(&inv).is_one());
                    }
                    for c in &elems {
                        assert_eq!(a.add(b).add(c), a.add(&b.add(c)));
                        assert_eq!(a.mul(b).mul(c), a.mul(&b.mul(c)));
                        assert_eq!(a.mul(&b.add(c)), a.mul(b).add(&a.mul(c)));
                    }
                }
            }
        }
    }

    #[test]
    fn frobenius_fixes_exactly_the_prime_subfield() {
        for field in [f9(), f25()] {
            let one = field.one();
            for a in field.elements() {
                // additivity against a sample of partners
                for b in field.elements() {
                    assert_eq!(a.add(&b).frobenius(), a.frobenius().add(&b.frobenius()));
                }
                let fixed = a.frobenius() == a;
                let in_prime = (0..field.p()).any(|c| a == one.scale_u64(c));
                assert_eq!(fixed, in_prime, "fixed points of Frobenius = F_p");
            }
        }
    }

    #[test]
    fn independence_examples_in_f9() {
        let f = f9();
        let one = f.one();
        let theta = f.elem(&[0, 1]).unwrap();
        assert!(fp_independent(&[one.clone(), theta.clone()]).unwrap());
        assert!(!fp_independent(&[theta.clone(), theta.scale_u64(2)]).unwrap());
        // theta + 1 = 1*theta + 1*1
        let t1 = theta.add(&one);
        assert!(!fp_independent(&[theta, t1, one]).unwrap());
        assert!(fp_independent(&[]).unwrap());
    }

    #[test]
    fn independence_matches_span_size() {
        // |span(S)| = p^|S| iff S independent, checked by enumeration
        for field in [f9(), f25()] {
            let p = field.p();
            let elems: Vec<_> = field.elements().collect();
            let step = (elems.len() / 7).max(1);
            for (i, a) in elems.iter().enumerate().step_by(step) {
                for b in elems.iter().skip(i % 3).step_by(step) {
                    let set = [a.clone(), b.clone()];
                    let mut span = std::collections::HashSet::new();
                    for ca in 0..p {
                        for cb in 0..p {
                            span.insert(
                                a.scale_u64(ca).add(&b.scale_u64(cb)).coords().to_vec(),
                            );
                        }
                    }
                    let indep = fp_independent(&set).unwrap();
                    assert_eq!(indep, span.len() == (p * p) as usize);
                }
            }
        }
    }

    #[test]
    fn rref_examples() {
        let f = f9();
        let theta = f.elem(&[0, 1]).unwrap();
        let one = f.one();

        // [2*theta] reduces to basis [theta]; reducer(theta + 1) = 1
        let sub = fp_rref(&[theta.scale_u64(2)]).unwrap();
        assert_eq!(sub.basis(), &[theta.clone()]);
        assert_eq!(sub.pivots(), &[1]);
        assert_eq!(sub.reduce(&theta.add(&one)), one);

        // empty input: identity reducer
        let sub = fp_rref(&[]).unwrap();
        assert!(sub.basis().is_empty());

        // [1, theta] spans the whole field as F_3-space
        let sub = fp_rref(&[one.clone(), theta.clone()]).unwrap();
        assert_eq!(sub.dim(), 2);
        for v in f.elements() {
            assert!(sub.reduce(&v).is_zero());
        }
    }

    #[test]
    fn mixed_fields_rejected() {
        let a = f9().one();
        let b = f25().one();
        assert_eq!(fp_independent(&[a, b]), Err(Error::MixedFields));
    }

    proptest! {
        #[test]
        fn reducer_is_idempotent_and_coset_constant(
            seeds in proptest::collection::vec(0u128..9, 1..4),
            probe in 0u128..9,
            comb in proptest::collection::vec(0u64..3, 1..4),
        ) {
            let f = f9();
            let elems: Vec<_> = seeds.iter().map(|&s| f.elem_by_index(s)).collect();
            let sub = fp_rref(&elems).unwrap();
            let v = f.elem_by_index(probe);
            let red = sub.reduce(&v);
            prop_assert_eq!(sub.reduce(&red).clone(), red.clone());
            // shifting v by any F_p-combination of the inputs keeps the coset
            let mut w = v;
            for (e, &c) in elems.iter().zip(&comb) {
                w = w.add(&e.scale_u64(c));
            }
            prop_assert_eq!(sub.reduce(&w), red);
        }
    }
}
