//! Standard maximal tori of W, S^(1), H^(2), weight-space decompositions,
//! semisimplicity, and the index of a semisimple torus element.
//!
//! The standard torus t_r has a basis of mu(g) commuting derivations fixed
//! by the p-th power map; its first r generators use y_i = 1 + x_i and the
//! rest use x_i. The index of an element of t_r is the least r' whose
//! standard torus meets the orbit; on coordinates it is governed by
//! F_p-linear independence of the first r coordinates, and the reduction to
//! that normal form is carried out by explicit, post-verified conjugations.

use crate::aut::AutoMap;
use crate::cartan::{AlgebraKind, Derivation, KindTag};
use crate::error::{Error, Result};
use crate::gf::{fp_independent, fp_rref, Field, FieldElem};
use crate::linalg::{solve_in_span, FieldEchelon, FpMat};
use crate::trunc::{index_to_exponents, table_size, TruncPoly};

/// A standard maximal torus t_r with its computed basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorusDesc {
    kind: AlgebraKind,
    field: Field,
    r: usize,
    basis: Vec<Derivation>,
}

impl TorusDesc {
    pub fn kind(&self) -> &AlgebraKind {
        &self.kind
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn mu(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Derivation] {
        &self.basis
    }

    /// Exact coordinates of `d` against the torus basis, if it lies in the span.
    pub fn coordinates_of(&self, d: &Derivation) -> Result<Option<Vec<FieldElem>>> {
        if *d.field() != self.field || d.n() != self.kind.n() {
            return Err(Error::Incompatible("derivation from another algebra".into()));
        }
        let cols: Vec<Vec<FieldElem>> = self.basis.iter().map(|b| b.to_vec()).collect();
        solve_in_span(&cols, &d.to_vec())
    }
}

/// z_i d_i with z_i = 1 + x_i when `looped`, x_i otherwise.
fn diagonal_term(field: &Field, n: usize, i: usize, looped: bool) -> Result<Derivation> {
    let mut e = vec![0u32; n];
    e[i] = 1;
    let mut d = Derivation::term(field, n, i, &e, field.one())?;
    if looped {
        let zero = vec![0u32; n];
        d = d.add(&Derivation::term(field, n, i, &zero, field.one())?)?;
    }
    Ok(d)
}

/// Builds the standard torus t_r of the given kind and validates its
/// invariants exactly: every basis element satisfies d^[p] = d and all
/// pairwise brackets vanish.
pub fn standard_torus(kind: &AlgebraKind, field: &Field, r: usize) -> Result<TorusDesc> {
    let mu = kind.mu();
    if r > mu {
        return Err(Error::RangeError(format!("r = {r} exceeds mu = {mu}")));
    }
    let n = kind.n();
    let mut basis = Vec::with_capacity(mu);
    match kind.tag() {
        KindTag::W => {
            for i in 0..n {
                basis.push(diagonal_term(field, n, i, i < r)?);
            }
        }
        KindTag::S1 => {
            let last = diagonal_term(field, n, n - 1, false)?;
            for i in 0..n - 1 {
                basis.push(diagonal_term(field, n, i, i < r)?.sub(&last)?);
            }
        }
        KindTag::H2 => {
            let m = kind.m();
            for i in 0..m {
                let pair = diagonal_term(field, n, i + m, false)?;
                basis.push(diagonal_term(field, n, i, i < r)?.sub(&pair)?);
            }
        }
    }
    for (i, d) in basis.iter().enumerate() {
        if d.p_power()? != *d {
            return Err(Error::ConstructionFailed(format!(
                "torus basis element {i} is not fixed by the p-th power"
            )));
        }
        for e in basis.iter().skip(i + 1) {
            if !d.bracket(e)?.is_zero() {
                return Err(Error::ConstructionFailed(
                    "torus basis elements do not commute".into(),
                ));
            }
        }
    }
    Ok(TorusDesc { kind: *kind, field: field.clone(), r, basis })
}

/// An element of a standard torus, by coordinates against its basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorusElem {
    torus: TorusDesc,
    lambda: Vec<FieldElem>,
}

impl TorusElem {
    pub fn new(torus: TorusDesc, lambda: Vec<FieldElem>) -> Result<TorusElem> {
        if lambda.len() != torus.mu() {
            return Err(Error::ShapeError(format!(
                "expected {} coordinates, got {}",
                torus.mu(),
                lambda.len()
            )));
        }
        if lambda.iter().any(|c| c.field() != torus.field()) {
            return Err(Error::MixedFields);
        }
        Ok(TorusElem { torus, lambda })
    }

    pub fn torus(&self) -> &TorusDesc {
        &self.torus
    }

    pub fn lambda(&self) -> &[FieldElem] {
        &self.lambda
    }

    /// The derivation sum lambda_i d_i.
    pub fn realize(&self) -> Result<Derivation> {
        let mut acc = Derivation::zero(self.torus.field(), self.torus.kind().n());
        for (c, d) in self.lambda.iter().zip(self.torus.basis()) {
            if !c.is_zero() {
                acc = acc.add(&d.scale(c))?;
            }
        }
        Ok(acc)
    }
}

/// True iff `d` lies in the span of its iterated p-th powers
/// {d^[p], d^[p^2], ..}, the defining property of a semisimple element.
pub fn is_semisimple(d: &Derivation) -> Result<bool> {
    let len = d.n() * table_size(d.field().p(), d.n());
    let mut ech = FieldEchelon::new(d.field(), len);
    let mut cur = d.clone();
    for _ in 0..=len {
        cur = cur.p_power()?;
        if !ech.insert(&cur.to_vec()) {
            break;
        }
    }
    Ok(ech.contains(&d.to_vec()))
}

/// One weight class: the eigenvalue and the exponent vectors of the basis
/// monomials z^l spanning it.
pub type WeightClass = (FieldElem, Vec<Vec<u32>>);

/// Decomposes the monomial basis of A(n) into weight spaces for the torus
/// element sum a_i d_i^{g,s}. Every listed monomial is verified to be an
/// exact eigenvector.
pub fn weight_decomposition(
    kind: &AlgebraKind,
    field: &Field,
    s: usize,
    a: &[FieldElem],
) -> Result<Vec<WeightClass>> {
    let mu = kind.mu();
    if s > mu {
        return Err(Error::RangeError(format!("s = {s} exceeds mu = {mu}")));
    }
    if a.len() != mu {
        return Err(Error::ShapeError(format!(
            "expected {} coefficients, got {}",
            mu,
            a.len()
        )));
    }
    let torus = standard_torus(kind, field, s)?;
    let t = TorusElem::new(torus, a.to_vec())?.realize()?;
    let n = kind.n();
    let p = field.p();
    let size = table_size(p, n);
    let mut classes: std::collections::BTreeMap<FieldElem, Vec<Vec<u32>>> =
        std::collections::BTreeMap::new();
    for idx in 0..size {
        let l = index_to_exponents(idx, p, n);
        let gamma = match kind.tag() {
            KindTag::W => {
                let mut g = field.zero();
                for i in 0..n {
                    g = g.add(&a[i].scale_u64(l[i] as u64));
                }
                g
            }
            KindTag::S1 => {
                let mut g = field.zero();
                for i in 0..n - 1 {
                    let diff = field.from_i64(l[i] as i64 - l[n - 1] as i64);
                    g = g.add(&a[i].mul(&diff));
                }
                g
            }
            KindTag::H2 => {
                let m = kind.m();
                let mut g = field.zero();
                for i in 0..m {
                    let diff = field.from_i64(l[i] as i64 - l[i + m] as i64);
                    g = g.add(&a[i].mul(&diff));
                }
                g
            }
        };
        // z^l with z_i = y_i for i < s, x_i otherwise
        let mut mono = TruncPoly::one(field, n);
        for (i, &e) in l.iter().enumerate() {
            if e > 0 {
                let z = if i < s {
                    TruncPoly::one_plus_var(field, n, i)?
                } else {
                    TruncPoly::var(field, n, i)?
                };
                mono = mono.mul(&z.pow(e as u64)?)?;
            }
        }
        if t.apply(&mono)? != mono.scale(&gamma) {
            return Err(Error::ConstructionFailed(
                "weight formula disagrees with the exact eigen-equation".into(),
            ));
        }
        classes.entry(gamma).or_default().push(l);
    }
    Ok(classes.into_iter().collect())
}

/// Result of reducing a torus element to its index: the minimal torus
/// parameter, the conjugator chain (first applied first), and the element
/// of t_{r_min} the chain maps it to.
#[derive(Clone, Debug)]
pub struct IndexReduction {
    pub r_min: usize,
    pub chain: Vec<AutoMap>,
    pub final_elem: TorusElem,
}

impl IndexReduction {
    /// The composite of the chain (first applied first).
    pub fn composite(&self, field: &Field, n: usize) -> Result<AutoMap> {
        let mut acc = AutoMap::identity(field, n);
        for phi in &self.chain {
            acc = phi.compose(&acc)?;
        }
        Ok(acc)
    }
}

/// Finds the index of a torus element: repeatedly, if the first r
/// coordinates are F_p-independent the index is r; otherwise the largest
/// coordinate that depends on the others is moved to position r by a
/// first-block permutation and eliminated by an index-lowering conjugation.
/// Every step is verified exactly on the realization.
pub fn index_of(e: &TorusElem) -> Result<IndexReduction> {
    let kind = *e.torus().kind();
    let field = e.torus().field().clone();
    let p = field.p();
    let mut r = e.torus().r();
    let mut lambda = e.lambda().to_vec();
    let mut current = e.realize()?;
    let mut chain: Vec<AutoMap> = Vec::new();
    loop {
        if fp_independent(&lambda[..r])? {
            let torus = standard_torus(&kind, &field, r)?;
            let final_elem = TorusElem::new(torus, lambda)?;
            if final_elem.realize()? != current {
                return Err(Error::ConstructionFailed(
                    "chain does not map the element onto the final coordinates".into(),
                ));
            }
            return Ok(IndexReduction { r_min: r, chain, final_elem });
        }
        // largest j whose coordinate lies in the F_p-span of the others
        let j = (0..r)
            .rev()
            .find(|&j| {
                let others: Vec<FieldElem> = (0..r)
                    .filter(|&i| i != j)
                    .map(|i| lambda[i].clone())
                    .collect();
                fp_rref(&others)
                    .map(|s| s.reduce(&lambda[j]).is_zero())
                    .unwrap_or(false)
            })
            .expect("a dependent list has a removable element");
        if j != r - 1 {
            // move slot j to slot r-1 by a cycle in the first block,
            // realized as a torus-normalizing conjugation
            let mut perm: Vec<usize> = Vec::with_capacity(r);
            for i in 0..r {
                perm.push(match i.cmp(&j) {
                    std::cmp::Ordering::Less => i,
                    std::cmp::Ordering::Equal => r - 1,
                    std::cmp::Ordering::Greater => i - 1,
                });
            }
            let m1 = FpMat::permutation(p, &perm);
            let m2 = FpMat::zero(p, kind.mu() - r, r);
            let tail = crate::orbits::TailAction::identity(&kind, r);
            let w = crate::orbits::WeylElem::new(kind, r, m1, m2, tail)?;
            let psi = crate::orbits::normalizer_conjugator(&field, &w)?;
            current = psi.apply_sigma(&current)?;
            lambda = w.apply(&lambda)?;
            let torus = standard_torus(&kind, &field, r)?;
            if TorusElem::new(torus, lambda.clone())?.realize()? != current {
                return Err(Error::ConstructionFailed(
                    "first-block permutation failed verification".into(),
                ));
            }
            chain.push(psi);
        }
        // dependency u with lambda_{r-1} = sum_{i<r-1} u_i lambda_i
        let k = field.k();
        let mut cols = FpMat::zero(p, k, r - 1);
        for (i, l) in lambda[..r - 1].iter().enumerate() {
            for (row, &c) in l.coords().iter().enumerate() {
                cols[(row, i)] = c;
            }
        }
        let u = cols
            .solve(lambda[r - 1].coords())
            .ok_or(Error::DependencyViolated)?;
        let phi = crate::orbits::lower_index(&kind, &field, r, &lambda, &u)?;
        current = phi.apply_sigma(&current)?;
        let lower = standard_torus(&kind, &field, r - 1)?;
        let coords = lower.coordinates_of(&current)?.ok_or_else(|| {
            Error::ConstructionFailed(
                "index-lowering image left the target torus span".into(),
            )
        })?;
        lambda = coords;
        chain.push(phi);
        r -= 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn f5() -> Field {
        Field::prime(5).unwrap()
    }

    fn f3() -> Field {
        Field::prime(3).unwrap()
    }

    fn f9() -> Field {
        Field::new(3, 2).unwrap()
    }

    fn kind(tag: KindTag, n: usize, p: u64) -> AlgebraKind {
        AlgebraKind::new(tag, n, p).unwrap()
    }

    fn xd(field: &Field, n: usize, var: usize, exps: &[u32]) -> Derivation {
        Derivation::term(field, n, var, exps, field.one()).unwrap()
    }

    #[test]
    fn torus_bases_match_the_canonical_forms() {
        let f = f3();
        // W(2), r=1: (y1 d1, x2 d2)
        let t = standard_torus(&kind(KindTag::W, 2, 3), &f, 1).unwrap();
        let y1d1 = xd(&f, 2, 0, &[0, 0]).add(&xd(&f, 2, 0, &[1, 0])).unwrap();
        let x2d2 = xd(&f, 2, 1, &[0, 1]);
        assert_eq!(t.basis(), &[y1d1, x2d2]);
        // S(3), r=0: (x1 d1 - x3 d3, x2 d2 - x3 d3)
        let t = standard_torus(&kind(KindTag::S1, 3, 3), &f, 0).unwrap();
        let x3d3 = xd(&f, 3, 2, &[0, 0, 1]);
        assert_eq!(
            t.basis(),
            &[
                xd(&f, 3, 0, &[1, 0, 0]).sub(&x3d3).unwrap(),
                xd(&f, 3, 1, &[0, 1, 0]).sub(&x3d3).unwrap(),
            ]
        );
        // H(4), r=2: (y1 d1 - x3 d3, y2 d2 - x4 d4)
        let t = standard_torus(&kind(KindTag::H2, 4, 3), &f, 2).unwrap();
        let b0 = xd(&f, 4, 0, &[0; 4])
            .add(&xd(&f, 4, 0, &[1, 0, 0, 0]))
            .unwrap()
            .sub(&xd(&f, 4, 2, &[0, 0, 1, 0]))
            .unwrap();
        let b1 = xd(&f, 4, 1, &[0; 4])
            .add(&xd(&f, 4, 1, &[0, 1, 0, 0]))
            .unwrap()
            .sub(&xd(&f, 4, 3, &[0, 0, 0, 1]))
            .unwrap();
        assert_eq!(t.basis(), &[b0, b1]);
    }

    #[test]
    fn torus_r_out_of_range() {
        let f = f3();
        assert!(standard_torus(&kind(KindTag::W, 2, 3), &f, 3).is_err());
    }

    #[test]
    fn semisimple_examples() {
        let f = f5();
        // x d is semisimple: (x d)^[p] = x d
        assert!(is_semisimple(&xd(&f, 1, 0, &[1])).unwrap());
        // d is not: d^[p] = 0
        assert!(!is_semisimple(&xd(&f, 1, 0, &[0])).unwrap());
        // any torus element is
        let t = standard_torus(&kind(KindTag::W, 2, 5), &f, 1).unwrap();
        let e = TorusElem::new(t, vec![f.from_u64(2), f.from_u64(3)]).unwrap();
        assert!(is_semisimple(&e.realize().unwrap()).unwrap());
    }

    #[test]
    fn coordinates_in_torus() {
        let f9 = f9();
        let theta = f9.elem(&[0, 1]).unwrap();
        let t = standard_torus(&kind(KindTag::W, 2, 3), &f9, 1).unwrap();
        // d = d_1 -> (1, 0)
        let c = t.coordinates_of(&t.basis()[0]).unwrap().unwrap();
        assert_eq!(c, vec![f9.one(), f9.zero()]);
        // theta d_1 + d_2
        let d = t.basis()[0].scale(&theta).add(&t.basis()[1]).unwrap();
        let c = t.coordinates_of(&d).unwrap().unwrap();
        assert_eq!(c, vec![theta.clone(), f9.one()]);
        // a derivation outside the span
        let outside = xd(&f9, 2, 0, &[0, 0]);
        assert!(t.coordinates_of(&outside).unwrap().is_none());
    }

    #[test]
    fn weights_w1_p5() {
        let f5 = f5();
        let k1 = kind(KindTag::W, 1, 5);
        // weight table of x d on A(1): the class of x^e has weight e
        let a = vec![f5.one()];
        let classes = weight_decomposition(&k1, &f5, 0, &a).unwrap();
        assert_eq!(classes.len(), 5);
        for (gamma, monos) in &classes {
            assert_eq!(monos.len(), 1);
            assert_eq!(*gamma, f5.from_u64(monos[0][0] as u64));
        }
        // zero coefficients: a single class of size p^n
        let f = f3();
        let k = kind(KindTag::W, 2, 3);
        let classes = weight_decomposition(&k, &f, 1, &[f.zero(), f.zero()]).unwrap();
        assert_eq!(classes.len(), 1);
        assert_eq!(classes[0].1.len(), 9);
    }

    #[test]
    fn weights_h2() {
        // weight of x1^{l1} x2^{l2} is l1 - l2 (H(2) needs p >= 5)
        let f = f5();
        let k = kind(KindTag::H2, 2, 5);
        let classes = weight_decomposition(&k, &f, 0, &[f.one()]).unwrap();
        let total: usize = classes.iter().map(|(_, m)| m.len()).sum();
        assert_eq!(total, 25);
        for (gamma, monos) in &classes {
            for l in monos {
                assert_eq!(*gamma, f.from_i64(l[0] as i64 - l[1] as i64));
            }
        }
    }

    #[test]
    fn weight_classes_partition_all_monomials() {
        let f = f9();
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for (tag, n, p) in [(KindTag::W, 2, 3), (KindTag::S1, 3, 3), (KindTag::H2, 4, 3)] {
            let k = kind(tag, n, p);
            for s in 0..=k.mu() {
                let a: Vec<FieldElem> = (0..k.mu()).map(|_| f.random(&mut rng)).collect();
                let classes = weight_decomposition(&k, &f, s, &a).unwrap();
                let total: usize = classes.iter().map(|(_, m)| m.len()).sum();
                assert_eq!(total, table_size(p, n));
            }
        }
    }

    #[test]
    fn index_of_independent_singleton() {
        let f = f5();
        let t = standard_torus(&kind(KindTag::W, 1, 5), &f, 1).unwrap();
        let e = TorusElem::new(t, vec![f.from_u64(2)]).unwrap();
        let red = index_of(&e).unwrap();
        assert_eq!(red.r_min, 1);
        assert!(red.chain.is_empty());
    }

    #[test]
    fn index_of_zero_element() {
        let f = f5();
        for r in 0..=2 {
            let t = standard_torus(&kind(KindTag::W, 2, 5), &f, r).unwrap();
            let e = TorusElem::new(t, vec![f.zero(), f.zero()]).unwrap();
            let red = index_of(&e).unwrap();
            assert_eq!(red.r_min, 0);
            assert!(red.final_elem.realize().unwrap().is_zero());
        }
    }

    #[test]
    fn index_of_dependent_pair_over_f9() {
        // lambda = (1, 2) in t_2 of W(2): 2 = 2*1 over F_3, so one reduction
        let f = f9();
        let t = standard_torus(&kind(KindTag::W, 2, 3), &f, 2).unwrap();
        let e = TorusElem::new(t, vec![f.one(), f.from_u64(2)]).unwrap();
        let red = index_of(&e).unwrap();
        assert_eq!(red.r_min, 1);
        assert_eq!(red.final_elem.torus().r(), 1);
        // the chain composite maps the realization onto the final realization
        let comp = red.composite(&f, 2).unwrap();
        assert_eq!(
            comp.apply_sigma(&e.realize().unwrap()).unwrap(),
            red.final_elem.realize().unwrap()
        );
        // coordinates carry over unchanged
        assert_eq!(red.final_elem.lambda(), e.lambda());
    }

    #[test]
    fn index_is_stable_under_field_extension() {
        // the same prime-field coordinates read in F_3 and in F_9 give the
        // same index
        let f3 = f3();
        let f9 = f9();
        let k = kind(KindTag::S1, 3, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let vals: Vec<u64> = (0..k.mu()).map(|_| rng.gen_range(0..3)).collect();
            let r = rng.gen_range(0..=k.mu());
            let t3 = standard_torus(&k, &f3, r).unwrap();
            let t9 = standard_torus(&k, &f9, r).unwrap();
            let e3 =
                TorusElem::new(t3, vals.iter().map(|&v| f3.from_u64(v)).collect()).unwrap();
            let e9 =
                TorusElem::new(t9, vals.iter().map(|&v| f9.from_u64(v)).collect()).unwrap();
            assert_eq!(index_of(&e3).unwrap().r_min, index_of(&e9).unwrap().r_min);
        }
    }
}
