//! Automorphisms of A(n) and the Lie-algebra maps they induce.
//!
//! An automorphism is stored by its generator images f_i = phi(x_i); these
//! have zero constant term and an invertible linear part. The induced map
//! on W(n) is sigma_phi(D) = phi o D o phi^{-1}. It is computed without
//! inverting phi: writing E = sigma_phi(D), applying both sides to the
//! generator images gives the linear system over A(n)
//!
//!     sum_i  d_i(phi(x_j)) * E(x_i)  =  phi(D(x_j)),   j = 1..n,
//!
//! whose matrix is invertible over the local ring A(n). The full p^n x p^n
//! basis matrix of phi (and its inverse) is kept as a lazy cache; it backs
//! `invert` and the test oracles.

use std::sync::{Arc, OnceLock};

use crate::cartan::{partner, poisson, sign_is_positive, Derivation};
use crate::error::{Error, Result};
use crate::gf::{Field, FieldElem};
use crate::linalg::FMatrix;
use crate::trunc::{table_size, TruncPoly};

/// An algebra automorphism of A(n).
#[derive(Clone)]
pub struct AutoMap {
    field: Field,
    n: usize,
    images: Vec<TruncPoly>,
    matrix: Arc<OnceLock<FMatrix>>,
    inverse_matrix: Arc<OnceLock<FMatrix>>,
}

impl PartialEq for AutoMap {
    fn eq(&self, other: &Self) -> bool {
        self.images == other.images
    }
}
impl Eq for AutoMap {}

impl std::fmt::Debug for AutoMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "AutoMap[")?;
        for (i, im) in self.images.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "x{} -> {}", i + 1, im)?;
        }
        write!(f, "]")
    }
}

impl AutoMap {
    /// Validates and wraps generator images: zero constant terms and an
    /// invertible linear part.
    pub fn new(images: Vec<TruncPoly>) -> Result<AutoMap> {
        let first = images
            .first()
            .ok_or_else(|| Error::NotAnAutomorphism("no images".into()))?;
        let field = first.field().clone();
        let n = images.len();
        for im in &images {
            if *im.field() != field || im.n() != n {
                return Err(Error::Incompatible("images from different algebras".into()));
            }
            if !im.constant_term().is_zero() {
                return Err(Error::NotAnAutomorphism(
                    "image has nonzero constant term".into(),
                ));
            }
        }
        // linear part: L[i][j] = coefficient of x_i in phi(x_j)
        let mut lin = FMatrix::zero(&field, n, n);
        for (j, im) in images.iter().enumerate() {
            for i in 0..n {
                let mut e = vec![0u32; n];
                e[i] = 1;
                lin[(i, j)] = im.coeff(&e).clone();
            }
        }
        if !lin.is_invertible() {
            return Err(Error::NotAnAutomorphism("singular linear part".into()));
        }
        Ok(AutoMap {
            field,
            n,
            images,
            matrix: Arc::new(OnceLock::new()),
            inverse_matrix: Arc::new(OnceLock::new()),
        })
    }

    pub fn identity(field: &Field, n: usize) -> AutoMap {
        let images = (0..n)
            .map(|i| TruncPoly::var(field, n, i).expect("i < n"))
            .collect();
        AutoMap::new(images).expect("identity is an automorphism")
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn images(&self) -> &[TruncPoly] {
        &self.images
    }

    pub fn is_identity(&self) -> bool {
        self.images
            .iter()
            .enumerate()
            .all(|(i, im)| *im == TruncPoly::var(&self.field, self.n, i).expect("i < n"))
    }

    /// phi(f) by substitution.
    pub fn apply_poly(&self, f: &TruncPoly) -> Result<TruncPoly> {
        f.substitute(&self.images)
    }

    /// The p^n x p^n matrix of phi on the monomial basis (column e holds the
    /// coefficients of phi(x^e)), built on first use.
    pub fn matrix(&self) -> &FMatrix {
        self.matrix.get_or_init(|| {
            let p = self.field.p();
            let size = table_size(p, self.n);
            let mut cols: Vec<TruncPoly> = Vec::with_capacity(size);
            cols.push(TruncPoly::one(&self.field, self.n));
            for idx in 1..size {
                // strip the lowest nonzero digit
                let mut stride = 1usize;
                let mut var = 0usize;
                while (idx / stride) % p as usize == 0 {
                    stride *= p as usize;
                    var += 1;
                }
                let prev = &cols[idx - stride];
                cols.push(prev.mul(&self.images[var]).expect("same algebra"));
            }
            let mut m = FMatrix::zero(&self.field, size, size);
            for (j, c) in cols.iter().enumerate() {
                for (i, v) in c.nonzero() {
                    m[(i, j)] = v.clone();
                }
            }
            m
        })
    }

    /// Inverse of the basis matrix, built on first use.
    pub fn inverse_matrix(&self) -> &FMatrix {
        self.inverse_matrix.get_or_init(|| {
            self.matrix()
                .inverse()
                .expect("automorphism matrices are invertible")
        })
    }

    /// The inverse automorphism, with images read off the inverse matrix.
    pub fn invert(&self) -> Result<AutoMap> {
        let p = self.field.p();
        let inv = self.inverse_matrix();
        let images = (0..self.n)
            .map(|i| {
                let col = inv.column((p as usize).pow(i as u32));
                let mut f = TruncPoly::zero(&self.field, self.n);
                for (idx, v) in col.into_iter().enumerate() {
                    if !v.is_zero() {
                        let e = crate::trunc::index_to_exponents(idx, p, self.n);
                        f = f.add(&TruncPoly::monomial(&self.field, self.n, &e, v)?)?;
                    }
                }
                Ok(f)
            })
            .collect::<Result<Vec<_>>>()?;
        AutoMap::new(images)
    }

    /// Composition (self o other): applies `other` first.
    pub fn compose(&self, other: &AutoMap) -> Result<AutoMap> {
        if self.field != other.field || self.n != other.n {
            return Err(Error::Incompatible(
                "automorphisms of different algebras".into(),
            ));
        }
        let images = other
            .images
            .iter()
            .map(|im| im.substitute(&self.images))
            .collect::<Result<Vec<_>>>()?;
        AutoMap::new(images)
    }

    /// The induced Lie-algebra automorphism: sigma_phi(D) = phi o D o phi^{-1}.
    pub fn apply_sigma(&self, d: &Derivation) -> Result<Derivation> {
        if *d.field() != self.field || d.n() != self.n {
            return Err(Error::Incompatible("derivation from another algebra".into()));
        }
        // rows j: sum_i d_i(phi(x_j)) E_i = phi(D(x_j))
        let mut a: Vec<Vec<TruncPoly>> = Vec::with_capacity(self.n);
        let mut b: Vec<TruncPoly> = Vec::with_capacity(self.n);
        for j in 0..self.n {
            let row = (0..self.n)
                .map(|i| self.images[j].partial(i))
                .collect::<Result<Vec<_>>>()?;
            a.push(row);
            b.push(d.coeffs()[j].substitute(&self.images)?);
        }
        let coeffs = ring_solve(a, b)?;
        Derivation::new(coeffs)
    }

    /// True iff the Jacobian determinant det(d_i phi(x_j)) is a nonzero
    /// constant, the normalization under which sigma_phi preserves S(n)^(1).
    pub fn is_special(&self) -> Result<bool> {
        let det = self.jacobian_det()?;
        Ok(det.is_constant() && !det.constant_term().is_zero())
    }

    /// Relaxed variant: the Jacobian determinant is any unit of A(n).
    pub fn is_special_unit_det(&self) -> Result<bool> {
        Ok(self.jacobian_det()?.is_unit())
    }

    /// Exact determinant of the Jacobian matrix (d_i phi(x_j)) over A(n),
    /// by elimination with unit pivots.
    pub fn jacobian_det(&self) -> Result<TruncPoly> {
        let n = self.n;
        let mut a: Vec<Vec<TruncPoly>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| self.images[j].partial(i))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let mut det = TruncPoly::one(&self.field, n);
        let mut neg = false;
        for col in 0..n {
            let Some(piv) = (col..n).find(|&r| a[r][col].is_unit()) else {
                // all remaining entries of the column are nilpotent; for a
                // valid automorphism this cannot happen
                return Err(Error::NotAnAutomorphism(
                    "Jacobian has no unit pivot".into(),
                ));
            };
            if piv != col {
                a.swap(col, piv);
                neg = !neg;
            }
            det = det.mul(&a[col][col])?;
            let inv = a[col][col].invert_unit()?;
            let pivot_row: Vec<TruncPoly> =
                a[col].iter().map(|x| x.mul(&inv)).collect::<Result<_>>()?;
            for r in (col + 1)..n {
                if !a[r][col].is_zero() {
                    let f = a[r][col].clone();
                    for (x, pv) in a[r].iter_mut().zip(&pivot_row) {
                        if !pv.is_zero() {
                            *x = x.sub(&f.mul(pv)?)?;
                        }
                    }
                }
            }
            a[col] = pivot_row;
        }
        Ok(if neg { det.neg() } else { det })
    }

    /// Whether sigma_phi preserves H(2m)^(2): searches for the single
    /// nonzero scalar a with {phi(x_i), phi(x_j)} = a sigma(i) delta_{i',j}
    /// for all i, j; returns it if found.
    pub fn hamiltonian_scalar(&self, m: usize) -> Result<Option<FieldElem>> {
        if self.n != 2 * m {
            return Err(Error::OddVariableCount(self.n));
        }
        // candidate from the pair (1, 1'); must be a nonzero constant
        let cand = poisson(&self.images[0], &self.images[m], m)?;
        if !cand.is_constant() || cand.constant_term().is_zero() {
            return Ok(None);
        }
        let a = cand.constant_term().clone();
        for i in 0..self.n {
            for j in 0..self.n {
                let br = poisson(&self.images[i], &self.images[j], m)?;
                let expected = if partner(i, m) == j {
                    let s = if sign_is_positive(i, m) { a.clone() } else { a.neg() };
                    TruncPoly::constant(&self.field, self.n, s)
                } else {
                    TruncPoly::zero(&self.field, self.n)
                };
                if br != expected {
                    return Ok(None);
                }
            }
        }
        Ok(Some(a))
    }
}

/// Gauss-Jordan over A(n) with unit pivots: solves a x = b for the column
/// vector x of polynomials, given that the constant-term matrix of `a` is
/// invertible over the field.
fn ring_solve(mut a: Vec<Vec<TruncPoly>>, mut b: Vec<TruncPoly>) -> Result<Vec<TruncPoly>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .find(|&r| a[r][col].is_unit())
            .ok_or_else(|| Error::NotAnAutomorphism("singular system over A(n)".into()))?;
        a.swap(col, piv);
        b.swap(col, piv);
        let inv = a[col][col].invert_unit()?;
        for x in a[col].iter_mut() {
            *x = x.mul(&inv)?;
        }
        b[col] = b[col].mul(&inv)?;
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                let pivot_row = a[col].clone();
                for (x, pv) in a[r].iter_mut().zip(&pivot_row) {
                    if !pv.is_zero() {
                        *x = x.sub(&f.mul(pv)?)?;
                    }
                }
                b[r] = b[r].sub(&f.mul(&b[col])?)?;
            }
        }
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cartan::{algebra_basis, graded_split, member, AlgebraKind, KindTag};
    use crate::trunc::index_to_exponents;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn f5() -> Field {
        Field::prime(5).unwrap()
    }

    fn f3() -> Field {
        Field::prime(3).unwrap()
    }

    fn x_plus_x2(field: &Field) -> AutoMap {
        let x = TruncPoly::var(field, 1, 0).unwrap();
        AutoMap::new(vec![x.add(&x.mul(&x).unwrap()).unwrap()]).unwrap()
    }

    fn random_map<R: rand::Rng>(field: &Field, n: usize, rng: &mut R) -> AutoMap {
        let size = table_size(field.p(), n);
        loop {
            let images: Vec<TruncPoly> = (0..n)
                .map(|_| {
                    let mut g = TruncPoly::zero(field, n);
                    for idx in 1..size {
                        let e = index_to_exponents(idx, field.p(), n);
                        g = g
                            .add(&TruncPoly::monomial(field, n, &e, field.random(rng)).unwrap())
                            .unwrap();
                    }
                    g
                })
                .collect();
            if let Ok(m) = AutoMap::new(images) {
                return m;
            }
        }
    }

    fn random_derivation<R: rand::Rng>(field: &Field, n: usize, rng: &mut R) -> Derivation {
        let size = table_size(field.p(), n);
        let coeffs = (0..n)
            .map(|_| {
                let mut g = TruncPoly::zero(field, n);
                for idx in 0..size {
                    let e = index_to_exponents(idx, field.p(), n);
                    g = g
                        .add(&TruncPoly::monomial(field, n, &e, field.random(rng)).unwrap())
                        .unwrap();
                }
                g
            })
            .collect();
        Derivation::new(coeffs).unwrap()
    }

    /// Test oracle: conjugation through the full basis matrix.
    fn sigma_by_matrix(phi: &AutoMap, d: &Derivation) -> Derivation {
        let field = phi.field();
        let p = field.p();
        let n = phi.n();
        let size = table_size(p, n);
        let mut md = FMatrix::zero(field, size, size);
        for col in 0..size {
            let e = index_to_exponents(col, p, n);
            let mono = TruncPoly::monomial(field, n, &e, field.one()).unwrap();
            for (row, c) in d.apply(&mono).unwrap().nonzero() {
                md[(row, col)] = c.clone();
            }
        }
        let conj = phi.matrix().mul(&md).mul(phi.inverse_matrix());
        let coeffs = (0..n)
            .map(|i| {
                let col = conj.column((p as usize).pow(i as u32));
                let mut g = TruncPoly::zero(field, n);
                for (idx, v) in col.into_iter().enumerate() {
                    if !v.is_zero() {
                        let e = index_to_exponents(idx, p, n);
                        g = g.add(&TruncPoly::monomial(field, n, &e, v).unwrap()).unwrap();
                    }
                }
                g
            })
            .collect();
        Derivation::new(coeffs).unwrap()
    }

    #[test]
    fn identity_map() {
        let f = f3();
        let id = AutoMap::identity(&f, 2);
        assert!(id.is_identity());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = random_derivation(&f, 2, &mut rng);
        assert_eq!(id.apply_sigma(&d).unwrap(), d);
    }

    #[test]
    fn quadratic_image_is_valid() {
        let f = f5();
        let phi = x_plus_x2(&f);
        assert!(phi.matrix().is_invertible());
    }

    #[test]
    fn singular_linear_part_rejected() {
        let f = f5();
        let x = TruncPoly::var(&f, 1, 0).unwrap();
        let r = AutoMap::new(vec![x.mul(&x).unwrap()]);
        assert!(matches!(r, Err(Error::NotAnAutomorphism(_))));
        // nonzero constant term is rejected as well
        let r = AutoMap::new(vec![x.add(&TruncPoly::one(&f, 1)).unwrap()]);
        assert!(matches!(r, Err(Error::NotAnAutomorphism(_))));
    }

    #[test]
    fn eigenvector_transport() {
        // sigma_phi(x d) fixes phi(x): sigma_phi(x d)(phi(x)) = phi(x)
        let f = f5();
        let phi = x_plus_x2(&f);
        let xd = Derivation::term(&f, 1, 0, &[1], f.one()).unwrap();
        let s = phi.apply_sigma(&xd).unwrap();
        let img = phi.images()[0].clone();
        assert_eq!(s.apply(&img).unwrap(), img);
    }

    #[test]
    fn sigma_matches_matrix_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (p, n) in [(3u64, 1usize), (3, 2), (5, 1)] {
            let f = Field::prime(p).unwrap();
            for _ in 0..4 {
                let phi = random_map(&f, n, &mut rng);
                let d = random_derivation(&f, n, &mut rng);
                assert_eq!(
                    phi.apply_sigma(&d).unwrap(),
                    sigma_by_matrix(&phi, &d),
                    "functional and matrix conjugation agree"
                );
            }
        }
    }

    #[test]
    fn sigma_is_a_lie_homomorphism() {
        let f = f3();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..4 {
            let phi = random_map(&f, 2, &mut rng);
            let d = random_derivation(&f, 2, &mut rng);
            let e = random_derivation(&f, 2, &mut rng);
            let lhs = phi.apply_sigma(&d.bracket(&e).unwrap()).unwrap();
            let rhs = phi
                .apply_sigma(&d)
                .unwrap()
                .bracket(&phi.apply_sigma(&e).unwrap())
                .unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn sigma_commutes_with_p_power() {
        let f = f3();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..3 {
            let phi = random_map(&f, 2, &mut rng);
            let d = random_derivation(&f, 2, &mut rng);
            let lhs = phi.apply_sigma(&d.p_power().unwrap()).unwrap();
            let rhs = phi.apply_sigma(&d).unwrap().p_power().unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn composition_and_inverse() {
        let f = f5();
        let id = AutoMap::identity(&f, 1);
        assert_eq!(id.invert().unwrap(), id);
        let phi = x_plus_x2(&f);
        let inv = phi.invert().unwrap();
        assert_eq!(phi.compose(&inv).unwrap(), id);
        assert_eq!(inv.compose(&phi).unwrap(), id);
    }

    #[test]
    fn composition_is_associative_and_covariant() {
        let f = f3();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..3 {
            let a = random_map(&f, 2, &mut rng);
            let b = random_map(&f, 2, &mut rng);
            let c = random_map(&f, 2, &mut rng);
            assert_eq!(
                a.compose(&b).unwrap().compose(&c).unwrap(),
                a.compose(&b.compose(&c).unwrap()).unwrap()
            );
            // sigma_{a o b} = sigma_a o sigma_b
            let d = random_derivation(&f, 2, &mut rng);
            let lhs = a.compose(&b).unwrap().apply_sigma(&d).unwrap();
            let rhs = a.apply_sigma(&b.apply_sigma(&d).unwrap()).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn special_membership() {
        let f = f3();
        let id = AutoMap::identity(&f, 3);
        assert!(id.is_special().unwrap());
        assert_eq!(id.jacobian_det().unwrap(), TruncPoly::one(&f, 3));
        // a permutation of variables has det +-1
        let images = vec![
            TruncPoly::var(&f, 3, 1).unwrap(),
            TruncPoly::var(&f, 3, 2).unwrap(),
            TruncPoly::var(&f, 3, 0).unwrap(),
        ];
        let perm = AutoMap::new(images).unwrap();
        assert!(perm.is_special().unwrap());
        let det = perm.jacobian_det().unwrap();
        assert!(det == TruncPoly::one(&f, 3) || det == TruncPoly::one(&f, 3).neg());
    }

    #[test]
    fn special_maps_preserve_the_special_algebra() {
        let f = f3();
        let kind = AlgebraKind::new(KindTag::S1, 3, 3).unwrap();
        // phi(x1) = x1 + x2^2, det = 1
        let x1 = TruncPoly::var(&f, 3, 0).unwrap();
        let x2 = TruncPoly::var(&f, 3, 1).unwrap();
        let x3 = TruncPoly::var(&f, 3, 2).unwrap();
        let phi = AutoMap::new(vec![
            x1.add(&x2.mul(&x2).unwrap()).unwrap(),
            x2.clone(),
            x3.clone(),
        ])
        .unwrap();
        assert!(phi.is_special().unwrap());
        for d in algebra_basis(KindTag::S1, 3, 3).unwrap() {
            assert!(member(&kind, &phi.apply_sigma(&d).unwrap()).unwrap());
        }
    }

    #[test]
    fn hamiltonian_scalar_examples() {
        let f5 = f5();
        // identity: a = 1
        let id = AutoMap::identity(&f5, 2);
        assert_eq!(id.hamiltonian_scalar(1).unwrap(), Some(f5.one()));
        // scaling the first block by c: a = c
        let c = f5.from_u64(3);
        let phi = AutoMap::new(vec![
            TruncPoly::var(&f5, 2, 0).unwrap().scale(&c),
            TruncPoly::var(&f5, 2, 1).unwrap(),
        ])
        .unwrap();
        assert_eq!(phi.hamiltonian_scalar(1).unwrap(), Some(c));
        // swapping x1 and x2 without a sign fix: a = -1
        let swap = AutoMap::new(vec![
            TruncPoly::var(&f5, 2, 1).unwrap(),
            TruncPoly::var(&f5, 2, 0).unwrap(),
        ])
        .unwrap();
        assert_eq!(swap.hamiltonian_scalar(1).unwrap(), Some(f5.one().neg()));
        // a non-Hamiltonian map is rejected
        let x1 = TruncPoly::var(&f5, 2, 0).unwrap();
        let x2 = TruncPoly::var(&f5, 2, 1).unwrap();
        let bad = AutoMap::new(vec![x1.add(&x2).unwrap(), x2.clone()]).unwrap();
        assert_eq!(bad.hamiltonian_scalar(1).unwrap(), None);
    }

    #[test]
    fn hamiltonian_maps_preserve_h2() {
        let f = f3();
        let kind = AlgebraKind::new(KindTag::H2, 4, 3).unwrap();
        // x1 -> x1 + x2 with the compensating x4 -> x4 - x3 keeps the pairing
        let x: Vec<TruncPoly> = (0..4)
            .map(|i| TruncPoly::var(&f, 4, i).unwrap())
            .collect();
        let phi = AutoMap::new(vec![
            x[0].add(&x[1]).unwrap(),
            x[1].clone(),
            x[2].clone(),
            x[3].sub(&x[2]).unwrap(),
        ])
        .unwrap();
        assert_eq!(phi.hamiltonian_scalar(2).unwrap(), Some(f.one()));
        for d in algebra_basis(KindTag::H2, 3, 4).unwrap() {
            assert!(member(&kind, &phi.apply_sigma(&d).unwrap()).unwrap());
        }
    }

    #[test]
    fn sigma_preserves_the_filtration() {
        // images of non-negative-degree basis elements stay in degree >= 0
        let f = f3();
        let kind = AlgebraKind::new(KindTag::W, 2, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let phi = random_map(&f, 2, &mut rng);
        for d in algebra_basis(KindTag::W, 3, 2).unwrap() {
            let degs = graded_split(&kind, &d).unwrap().degrees();
            if degs.iter().all(|&deg| deg >= 0) {
                let image = phi.apply_sigma(&d).unwrap();
                let idegs = graded_split(&kind, &image).unwrap().degrees();
                assert!(idegs.iter().all(|&deg| deg >= 0));
            }
        }
    }
}
