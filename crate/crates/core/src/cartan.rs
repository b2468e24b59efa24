//! The restricted Cartan-type Lie algebras W(n), S(n)^(1), H(2m)^(2):
//! derivations of A(n), brackets, p-th powers, the divergence and
//! Hamiltonian maps, gradings, and exact membership tests.
//!
//! W(n) = Der A(n) has the monomial basis x^e d_i. S(n) is the kernel of the
//! divergence, S(n)^(1) its derived algebra. H(2m)^(2) is spanned by the
//! brackets of Hamiltonian derivations D_H(f). Membership in the derived
//! algebras is decided against bases computed once per (kind, p, n) by
//! exact span enumeration, cached process-wide.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::gf::{Field, FieldElem};
use crate::trunc::{exponents_to_index, index_to_exponents, table_size, TruncPoly};

/// The three algebra families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KindTag {
    W,
    S1,
    H2,
}

impl fmt::Display for KindTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KindTag::W => write!(f, "W"),
            KindTag::S1 => write!(f, "S1"),
            KindTag::H2 => write!(f, "H2"),
        }
    }
}

/// A validated algebra kind: the family tag together with the number of
/// variables of the ambient A(n). For H2 the variable count is n = 2m.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AlgebraKind {
    tag: KindTag,
    n: usize,
}

impl AlgebraKind {
    /// Validates the structural constraints for the orbit and torus theory:
    /// S(n)^(1) needs n >= 3; H needs n = 2m even; W(1) and H(2) need p >= 5.
    pub fn new(tag: KindTag, n: usize, p: u64) -> Result<AlgebraKind> {
        match tag {
            KindTag::W => {
                if n == 0 {
                    return Err(Error::RangeError("W(n) needs n >= 1".into()));
                }
                if n == 1 && p < 5 {
                    return Err(Error::RangeError("W(1) needs p >= 5".into()));
                }
            }
            KindTag::S1 => {
                if n < 3 {
                    return Err(Error::RangeError("S(n)^(1) needs n >= 3".into()));
                }
            }
            KindTag::H2 => {
                if n == 0 || n % 2 != 0 {
                    return Err(Error::OddVariableCount(n));
                }
                if n == 2 && p < 5 {
                    return Err(Error::RangeError("H(2)^(2) needs p >= 5".into()));
                }
            }
        }
        Ok(AlgebraKind { tag, n })
    }

    pub fn tag(&self) -> KindTag {
        self.tag
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// For H2, the half count m with n = 2m.
    pub fn m(&self) -> usize {
        match self.tag {
            KindTag::H2 => self.n / 2,
            _ => self.n,
        }
    }

    /// Maximal torus dimension: n for W, n-1 for S1, m for H2.
    pub fn mu(&self) -> usize {
        match self.tag {
            KindTag::W => self.n,
            KindTag::S1 => self.n - 1,
            KindTag::H2 => self.n / 2,
        }
    }
}

impl fmt::Display for AlgebraKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.tag, self.n)
    }
}

/// An element of W(n): the derivation sum f_i d_i with coefficients f_i in
/// A(n), where d_i is the partial derivative by x_i.
#[derive(Clone, PartialEq, Eq)]
pub struct Derivation {
    field: Field,
    n: usize,
    coeffs: Vec<TruncPoly>,
}

impl Derivation {
    pub fn new(coeffs: Vec<TruncPoly>) -> Result<Derivation> {
        let first = coeffs
            .first()
            .ok_or_else(|| Error::Incompatible("empty coefficient tuple".into()))?;
        let field = first.field().clone();
        let n = coeffs.len();
        for c in &coeffs {
            if *c.field() != field || c.n() != n {
                return Err(Error::Incompatible(
                    "coefficients from different algebras".into(),
                ));
            }
        }
        Ok(Derivation { field, n, coeffs })
    }

    pub fn zero(field: &Field, n: usize) -> Derivation {
        Derivation {
            field: field.clone(),
            n,
            coeffs: vec![TruncPoly::zero(field, n); n],
        }
    }

    /// The single term c * x^exps * d_var.
    pub fn term(field: &Field, n: usize, var: usize, exps: &[u32], c: FieldElem) -> Result<Derivation> {
        if var >= n {
            return Err(Error::IndexOutOfRange(var, n));
        }
        let mut d = Derivation::zero(field, n);
        d.coeffs[var] = TruncPoly::monomial(field, n, exps, c)?;
        Ok(d)
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[TruncPoly] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    fn check_compatible(&self, other: &Derivation) -> Result<()> {
        if self.field != other.field || self.n != other.n {
            return Err(Error::Incompatible(
                "derivations from different algebras".into(),
            ));
        }
        Ok(())
    }

    pub fn add(&self, other: &Derivation) -> Result<Derivation> {
        self.check_compatible(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.add(b))
            .collect::<Result<_>>()?;
        Ok(Derivation { field: self.field.clone(), n: self.n, coeffs })
    }

    pub fn sub(&self, other: &Derivation) -> Result<Derivation> {
        self.check_compatible(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<_>>()?;
        Ok(Derivation { field: self.field.clone(), n: self.n, coeffs })
    }

    pub fn neg(&self) -> Derivation {
        Derivation {
            field: self.field.clone(),
            n: self.n,
            coeffs: self.coeffs.iter().map(|c| c.neg()).collect(),
        }
    }

    pub fn scale(&self, c: &FieldElem) -> Derivation {
        Derivation {
            field: self.field.clone(),
            n: self.n,
            coeffs: self.coeffs.iter().map(|f| f.scale(c)).collect(),
        }
    }

    /// Applies the derivation to a polynomial: sum_i f_i d_i(g).
    pub fn apply(&self, g: &TruncPoly) -> Result<TruncPoly> {
        if *g.field() != self.field || g.n() != self.n {
            return Err(Error::Incompatible("polynomial from another algebra".into()));
        }
        let mut out = TruncPoly::zero(&self.field, self.n);
        for (i, f) in self.coeffs.iter().enumerate() {
            if f.is_zero() {
                continue;
            }
            let dg = g.partial(i)?;
            if !dg.is_zero() {
                out = out.add(&f.mul(&dg)?)?;
            }
        }
        Ok(out)
    }

    /// Lie bracket: [D, E] has i-th coefficient D(E(x_i)) - E(D(x_i)).
    pub fn bracket(&self, other: &Derivation) -> Result<Derivation> {
        self.check_compatible(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(df, ef)| self.apply(ef)?.sub(&other.apply(df)?))
            .collect::<Result<_>>()?;
        Ok(Derivation { field: self.field.clone(), n: self.n, coeffs })
    }

    /// The restricted p-th power: the derivation acting on A(n) as the p-th
    /// composition power of the operator. Computed by applying the operator
    /// p times to each generator, then checked for consistency on all
    /// products of two generators.
    pub fn p_power(&self) -> Result<Derivation> {
        let p = self.field.p();
        let mut images = Vec::with_capacity(self.n);
        for j in 0..self.n {
            let mut g = TruncPoly::var(&self.field, self.n, j)?;
            for _ in 0..p {
                g = self.apply(&g)?;
            }
            images.push(g);
        }
        let cand = Derivation {
            field: self.field.clone(),
            n: self.n,
            coeffs: images,
        };
        for i in 0..self.n {
            let xi = TruncPoly::var(&self.field, self.n, i)?;
            for j in i..self.n {
                let xj = TruncPoly::var(&self.field, self.n, j)?;
                let mut g = xi.mul(&xj)?;
                for _ in 0..p {
                    g = self.apply(&g)?;
                }
                if g != cand.apply(&xi.mul(&xj)?)? {
                    return Err(Error::NotADerivation);
                }
            }
        }
        Ok(cand)
    }

    /// Flattens to the coordinate vector of length n * p^n, variable-major.
    pub fn to_vec(&self) -> Vec<FieldElem> {
        let mut v = Vec::with_capacity(self.n * table_size(self.field.p(), self.n));
        for c in &self.coeffs {
            v.extend(c.coeffs().iter().cloned());
        }
        v
    }
}

impl fmt::Display for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| format!("({})d{}", c, i + 1))
            .collect();
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(" + "))
        }
    }
}

impl fmt::Debug for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Divergence: dv(sum f_i d_i) = sum d_i(f_i). S(n) is its kernel.
pub fn divergence(d: &Derivation) -> Result<TruncPoly> {
    let mut out = TruncPoly::zero(d.field(), d.n());
    for (i, f) in d.coeffs().iter().enumerate() {
        out = out.add(&f.partial(i)?)?;
    }
    Ok(out)
}

/// Sign sigma(i) for the Hamiltonian pairing, 1-based: +1 for i <= m,
/// -1 for m < i <= 2m.
pub fn sigma_index(i: usize, m: usize) -> Result<i64> {
    if i == 0 || i > 2 * m {
        return Err(Error::IndexOutOfRange(i, 2 * m));
    }
    Ok(if i <= m { 1 } else { -1 })
}

/// Conjugate index i', 1-based: i + m for i <= m, i - m otherwise.
pub fn prime_index(i: usize, m: usize) -> Result<usize> {
    if i == 0 || i > 2 * m {
        return Err(Error::IndexOutOfRange(i, 2 * m));
    }
    Ok(if i <= m { i + m } else { i - m })
}

/// 0-based partner index.
pub(crate) fn partner(i: usize, m: usize) -> usize {
    if i < m {
        i + m
    } else {
        i - m
    }
}

/// 0-based sign: true for the positive block i < m.
pub(crate) fn sign_is_positive(i: usize, m: usize) -> bool {
    i < m
}

/// The Hamiltonian derivation D_H(f) = sum_i sigma(i) d_i(f) d_{i'}.
pub fn d_h(f: &TruncPoly, m: usize) -> Result<Derivation> {
    let n = f.n();
    if n != 2 * m {
        return Err(Error::OddVariableCount(n));
    }
    let field = f.field().clone();
    let mut coeffs = vec![TruncPoly::zero(&field, n); n];
    for i in 0..n {
        let df = f.partial(i)?;
        if df.is_zero() {
            continue;
        }
        let signed = if sign_is_positive(i, m) { df } else { df.neg() };
        coeffs[partner(i, m)] = coeffs[partner(i, m)].add(&signed)?;
    }
    Derivation::new(coeffs)
}

/// Poisson bracket {f, g} = D_H(f)(g) on A(2m).
pub fn poisson(f: &TruncPoly, g: &TruncPoly, m: usize) -> Result<TruncPoly> {
    d_h(f, m)?.apply(g)
}

/// Splits a derivation into its homogeneous parts: the term x^e d_j has
/// degree |e| - 1.
#[derive(Clone, Debug)]
pub struct GradedDecomposition {
    field: Field,
    n: usize,
    parts: BTreeMap<i32, Derivation>,
}

impl GradedDecomposition {
    pub fn parts(&self) -> &BTreeMap<i32, Derivation> {
        &self.parts
    }

    pub fn component(&self, degree: i32) -> Option<&Derivation> {
        self.parts.get(&degree)
    }

    pub fn degrees(&self) -> Vec<i32> {
        self.parts.keys().copied().collect()
    }

    /// Sums the parts back together.
    pub fn reassemble(&self) -> Result<Derivation> {
        let mut acc = Derivation::zero(&self.field, self.n);
        for d in self.parts.values() {
            acc = acc.add(d)?;
        }
        Ok(acc)
    }
}

pub fn graded_split(kind: &AlgebraKind, d: &Derivation) -> Result<GradedDecomposition> {
    if kind.n() != d.n() {
        return Err(Error::Incompatible("kind and derivation disagree on n".into()));
    }
    let p = d.field().p();
    let n = d.n();
    let mut parts: BTreeMap<i32, Derivation> = BTreeMap::new();
    for (var, c) in d.coeffs().iter().enumerate() {
        for (idx, a) in c.nonzero() {
            let deg = TruncPoly::index_degree(idx, p, n) - 1;
            let exps = index_to_exponents(idx, p, n);
            let term = Derivation::term(d.field(), n, var, &exps, a.clone())?;
            let entry = parts
                .entry(deg)
                .or_insert_with(|| Derivation::zero(d.field(), n));
            *entry = entry.add(&term)?;
        }
    }
    Ok(GradedDecomposition { field: d.field().clone(), n, parts })
}

// ---------------------------------------------------------------------------
// Exact spans of S(n)^(1) and H(2m)^(2) over F_p.
//
// Both derived algebras are graded by the weights of the diagonal torus (and
// by total degree for H), so the span computation keeps one small echelon
// per weight label. Rows are sparse vectors on the coordinates
// (var * p^n + monomial index).

type SparseRow = Vec<(usize, u64)>; // sorted by coordinate

#[derive(Clone, Debug, PartialEq, Eq)]
struct STerm {
    var: usize,
    mono: usize,
    c: u64,
}

fn label_of(tag: KindTag, p: u64, n: usize, var: usize, mono: usize) -> Vec<i16> {
    let e = index_to_exponents(mono, p, n);
    match tag {
        KindTag::S1 => {
            let mut l: Vec<i16> = e.iter().map(|&x| x as i16).collect();
            l[var] -= 1;
            l
        }
        KindTag::H2 => {
            let m = n / 2;
            let deg: i16 = e.iter().map(|&x| x as i16).sum::<i16>() - 1;
            let mut l = Vec::with_capacity(m + 1);
            l.push(deg);
            for i in 0..m {
                let mut w = e[i] as i16 - e[i + m] as i16;
                if var == i {
                    w -= 1;
                } else if var == i + m {
                    w += 1;
                }
                l.push(w);
            }
            l
        }
        KindTag::W => unreachable!("W needs no span table"),
    }
}

/// Bracket of two sparse F_p-derivations given as term lists.
fn sparse_bracket(a: &[STerm], b: &[STerm], p: u64, n: usize) -> Vec<STerm> {
    let mut acc: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut add = |var: usize, exps: &[u32], c: u64| {
        if c % p == 0 {
            return;
        }
        let mono = exponents_to_index(exps, p, n);
        let e = acc.entry((var, mono)).or_insert(0);
        *e = (*e + c) % p;
    };
    for ta in a {
        let ea = index_to_exponents(ta.mono, p, n);
        for tb in b {
            let eb = index_to_exponents(tb.mono, p, n);
            let c = ta.c * tb.c % p;
            // [x^A d_u, x^B d_v] = B_u x^{A+B-e_u} d_v - A_v x^{A+B-e_v} d_u
            let mut sum: Vec<u32> = ea.iter().zip(&eb).map(|(x, y)| x + y).collect();
            if eb[ta.var] > 0 {
                sum[ta.var] -= 1;
                if sum.iter().all(|&x| (x as u64) < p) {
                    add(tb.var, &sum, c * eb[ta.var] as u64 % p);
                }
                sum[ta.var] += 1;
            }
            if ea[tb.var] > 0 {
                sum[tb.var] -= 1;
                if sum.iter().all(|&x| (x as u64) < p) {
                    add(ta.var, &sum, (p - c * ea[tb.var] as u64 % p) % p);
                }
            }
        }
    }
    acc.into_iter()
        .filter(|&(_, c)| c != 0)
        .map(|((var, mono), c)| STerm { var, mono, c })
        .collect()
}

fn terms_to_row(terms: &[STerm], size: usize) -> SparseRow {
    let mut row: SparseRow = terms
        .iter()
        .map(|t| (t.var * size + t.mono, t.c))
        .collect();
    row.sort_by_key(|&(coord, _)| coord);
    row
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

/// Small echelon of sparse rows, kept fully reduced.
#[derive(Clone, Debug, Default)]
struct Component {
    rows: Vec<SparseRow>, // sorted by pivot (first coordinate)
}

fn row_axpy(target: &mut SparseRow, f: u64, source: &SparseRow, p: u64) {
    // target -= f * source
    let mut merged: BTreeMap<usize, u64> = target.iter().copied().collect();
    for &(coord, c) in source {
        let e = merged.entry(coord).or_insert(0);
        *e = (*e + p - f * c % p) % p;
    }
    *target = merged.into_iter().filter(|&(_, c)| c != 0).collect();
}

impl Component {
    fn reduce(&self, row: &mut SparseRow, p: u64) {
        for r in &self.rows {
            let piv = r[0].0;
            if let Some(&(_, f)) = row.iter().find(|&&(c, _)| c == piv) {
                row_axpy(row, f, r, p);
            }
        }
    }

    /// Returns true if the row enlarged the component.
    fn insert(&mut self, mut row: SparseRow, p: u64) -> bool {
        self.reduce(&mut row, p);
        if row.is_empty() {
            return false;
        }
        let inv = mod_inv(row[0].1, p);
        for (_, c) in row.iter_mut() {
            *c = *c * inv % p;
        }
        let piv = row[0].0;
        for r in self.rows.iter_mut() {
            if let Some(&(_, f)) = r.iter().find(|&&(c, _)| c == piv) {
                row_axpy(r, f, &row, p);
            }
        }
        self.rows.push(row);
        self.rows.sort_by_key(|r| r[0].0);
        true
    }
}

/// Computed F_p-basis of S(n)^(1) or H(2m)^(2), grouped by weight label.
#[derive(Debug)]
pub struct SpanBasis {
    tag: KindTag,
    p: u64,
    n: usize,
    components: BTreeMap<Vec<i16>, Component>,
    dim: usize,
}

impl SpanBasis {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Exact membership of a derivation over any field of characteristic p:
    /// membership in the k-span of the F_p-basis.
    pub fn contains(&self, d: &Derivation) -> bool {
        if d.n() != self.n || d.field().p() != self.p {
            return false;
        }
        let size = table_size(self.p, self.n);
        // group the nonzero coordinates by label
        let mut groups: HashMap<Vec<i16>, BTreeMap<usize, FieldElem>> = HashMap::new();
        for (var, c) in d.coeffs().iter().enumerate() {
            for (mono, a) in c.nonzero() {
                let l = label_of(self.tag, self.p, self.n, var, mono);
                groups
                    .entry(l)
                    .or_default()
                    .insert(var * size + mono, a.clone());
            }
        }
        for (label, mut vec) in groups {
            let Some(comp) = self.components.get(&label) else {
                return false;
            };
            for row in &comp.rows {
                let piv = row[0].0;
                let Some(f) = vec.get(&piv).cloned() else {
                    continue;
                };
                if f.is_zero() {
                    continue;
                }
                for &(coord, c) in row {
                    let cur = vec
                        .get(&coord)
                        .cloned()
                        .unwrap_or_else(|| f.field().zero());
                    vec.insert(coord, cur.sub(&f.scale_u64(c)));
                }
            }
            if vec.values().any(|x| !x.is_zero()) {
                return false;
            }
        }
        true
    }

    /// Materializes the basis as dense derivations over F_p, labels in
    /// lexicographic order, rows in pivot order within each label.
    pub fn to_derivations(&self) -> Result<Vec<Derivation>> {
        let field = Field::prime(self.p)?;
        let size = table_size(self.p, self.n);
        let mut out = Vec::with_capacity(self.dim);
        for comp in self.components.values() {
            for row in &comp.rows {
                let mut d = Derivation::zero(&field, self.n);
                for &(coord, c) in row {
                    let var = coord / size;
                    let mono = coord % size;
                    let exps = index_to_exponents(mono, self.p, self.n);
                    let term = Derivation::term(&field, self.n, var, &exps, field.from_u64(c))?;
                    d = d.add(&term)?;
                }
                out.push(d);
            }
        }
        Ok(out)
    }
}

fn build_s1_span(p: u64, n: usize) -> SpanBasis {
    let size = table_size(p, n);
    // sparse basis of S(n) = ker(dv): single terms with e_var = 0, plus
    // differences of the preimages of each divergence monomial
    let mut kernel: Vec<Vec<STerm>> = Vec::new();
    for var in 0..n {
        let stride = (p as usize).pow(var as u32);
        for mono in 0..size {
            if (mono / stride) % p as usize == 0 {
                kernel.push(vec![STerm { var, mono, c: 1 }]);
            }
        }
    }
    for target in 0..size {
        let te = index_to_exponents(target, p, n);
        let mut pre: Vec<(usize, usize, u64)> = Vec::new(); // (var, mono, dv coeff)
        for var in 0..n {
            if (te[var] as u64) < p - 1 {
                let mut e = te.clone();
                e[var] += 1;
                pre.push((var, exponents_to_index(&e, p, n), (te[var] + 1) as u64));
            }
        }
        for j in 1..pre.len() {
            let (v0, m0, c0) = pre[0];
            let (vj, mj, cj) = pre[j];
            kernel.push(vec![
                STerm { var: v0, mono: m0, c: mod_inv(c0, p) },
                STerm { var: vj, mono: mj, c: (p - mod_inv(cj, p)) % p },
            ]);
        }
    }
    // derived algebra: span of all pairwise brackets
    let mut components: BTreeMap<Vec<i16>, Component> = BTreeMap::new();
    let mut dim = 0usize;
    for i in 0..kernel.len() {
        for j in (i + 1)..kernel.len() {
            let br = sparse_bracket(&kernel[i], &kernel[j], p, n);
            if br.is_empty() {
                continue;
            }
            let label = label_of(KindTag::S1, p, n, br[0].var, br[0].mono);
            debug_assert!(br
                .iter()
                .all(|t| label_of(KindTag::S1, p, n, t.var, t.mono) == label));
            let row = terms_to_row(&br, size);
            if components.entry(label).or_default().insert(row, p) {
                dim += 1;
            }
        }
    }
    SpanBasis { tag: KindTag::S1, p, n, components, dim }
}

fn build_h2_span(p: u64, n: usize) -> SpanBasis {
    let m = n / 2;
    let size = table_size(p, n);
    // Hamiltonian derivations of all non-constant monomials
    let mut gens: Vec<Vec<STerm>> = Vec::new();
    for mono in 1..size {
        let e = index_to_exponents(mono, p, n);
        let mut terms = Vec::new();
        for i in 0..n {
            if e[i] > 0 {
                let mut de = e.clone();
                de[i] -= 1;
                let c = if sign_is_positive(i, m) {
                    e[i] as u64 % p
                } else {
                    (p - e[i] as u64 % p) % p
                };
                if c != 0 {
                    terms.push(STerm {
                        var: partner(i, m),
                        mono: exponents_to_index(&de, p, n),
                        c,
                    });
                }
            }
        }
        if !terms.is_empty() {
            gens.push(terms);
        }
    }
    let mut components: BTreeMap<Vec<i16>, Component> = BTreeMap::new();
    let mut dim = 0usize;
    for i in 0..gens.len() {
        for j in (i + 1)..gens.len() {
            let br = sparse_bracket(&gens[i], &gens[j], p, n);
            if br.is_empty() {
                continue;
            }
            let label = label_of(KindTag::H2, p, n, br[0].var, br[0].mono);
            debug_assert!(br
                .iter()
                .all(|t| label_of(KindTag::H2, p, n, t.var, t.mono) == label));
            let row = terms_to_row(&br, size);
            if components.entry(label).or_default().insert(row, p) {
                dim += 1;
            }
        }
    }
    SpanBasis { tag: KindTag::H2, p, n, components, dim }
}

type SpanCache = Mutex<HashMap<(KindTag, u64, usize), std::sync::Arc<SpanBasis>>>;

fn span_cache() -> &'static SpanCache {
    static CACHE: OnceLock<SpanCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The cached span basis for S1 or H2 at characteristic p with n variables.
pub fn span_basis(tag: KindTag, p: u64, n: usize) -> Result<std::sync::Arc<SpanBasis>> {
    match tag {
        KindTag::W => {
            return Err(Error::Incompatible("W(n) needs no span basis".into()));
        }
        KindTag::S1 => {
            if n < 3 {
                return Err(Error::RangeError("S(n)^(1) needs n >= 3".into()));
            }
        }
        KindTag::H2 => {
            if n == 0 || n % 2 != 0 {
                return Err(Error::OddVariableCount(n));
            }
        }
    }
    if !(3..=u32::MAX as u64).contains(&p) {
        return Err(Error::NonPrime(p));
    }
    let key = (tag, p, n);
    let mut cache = span_cache().lock().expect("span cache poisoned");
    if let Some(b) = cache.get(&key) {
        return Ok(b.clone());
    }
    let basis = std::sync::Arc::new(match tag {
        KindTag::S1 => build_s1_span(p, n),
        KindTag::H2 => build_h2_span(p, n),
        KindTag::W => unreachable!(),
    });
    cache.insert(key, basis.clone());
    Ok(basis)
}

/// Exact membership of a derivation in the given algebra.
pub fn member(kind: &AlgebraKind, d: &Derivation) -> Result<bool> {
    if d.n() != kind.n() {
        return Err(Error::Incompatible("variable counts differ".into()));
    }
    match kind.tag() {
        KindTag::W => Ok(true),
        tag => {
            let basis = span_basis(tag, d.field().p(), d.n())?;
            Ok(basis.contains(d))
        }
    }
}

/// A deterministic ordered F_p-basis of the algebra. Dimensions are whatever
/// the computation yields; tests pin them against the classical values.
pub fn algebra_basis(tag: KindTag, p: u64, n: usize) -> Result<Vec<Derivation>> {
    match tag {
        KindTag::W => {
            let field = Field::prime(p)?;
            let size = table_size(p, n);
            let mut out = Vec::with_capacity(n * size);
            for var in 0..n {
                for mono in 0..size {
                    let exps = index_to_exponents(mono, p, n);
                    out.push(Derivation::term(&field, n, var, &exps, field.one())?);
                }
            }
            Ok(out)
        }
        tag => span_basis(tag, p, n)?.to_derivations(),
    }
}
