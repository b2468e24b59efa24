//! Orbit machinery: index-lowering conjugations, the Weyl groups of the
//! standard tori, torus-normalizing conjugators inducing a prescribed Weyl
//! element, canonical orbit labels, and the orbit-equivalence decision.
//!
//! The Weyl group of t_r acts on coordinates in the row convention
//! beta = alpha * [[M1, M2'], [0, M4]]: an invertible F_p-block on the first
//! r slots, arbitrary F_p-contributions from the first block into the tail,
//! and a permutation (signed, for H) on the tail. Conjugators realizing a
//! given Weyl element are built from explicit monomial images in the
//! y_i = 1 + x_i and post-verified exactly; verification failure is an
//! error, never silently accepted.

use crate::aut::AutoMap;
use crate::cartan::{AlgebraKind, KindTag};
use crate::error::{Error, Result};
use crate::gf::{fp_rref, Field, FieldElem, FpSubspace};
use crate::linalg::FpMat;
use crate::tori::{index_of, standard_torus, TorusDesc, TorusElem};
use crate::trunc::TruncPoly;

/// Action on the tail coordinate slots: out[q] = sign_q * in[perm[q]].
/// Signs are present exactly for the H kind.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TailAction {
    perm: Vec<usize>,
    signs: Option<Vec<bool>>, // true = +
}

impl TailAction {
    pub fn new(kind: &AlgebraKind, perm: Vec<usize>, signs: Option<Vec<bool>>) -> Result<TailAction> {
        let len = perm.len();
        let mut seen = vec![false; len];
        for &q in &perm {
            if q >= len || seen[q] {
                return Err(Error::ShapeError("not a permutation".into()));
            }
            seen[q] = true;
        }
        match kind.tag() {
            KindTag::H2 => {
                let Some(s) = &signs else {
                    return Err(Error::ShapeError("H tail action needs signs".into()));
                };
                if s.len() != len {
                    return Err(Error::ShapeError("sign vector length mismatch".into()));
                }
            }
            _ => {
                if signs.is_some() {
                    return Err(Error::ShapeError("only H tail actions carry signs".into()));
                }
            }
        }
        Ok(TailAction { perm, signs })
    }

    pub fn identity(kind: &AlgebraKind, r: usize) -> TailAction {
        let len = kind.mu() - r;
        let signs = match kind.tag() {
            KindTag::H2 => Some(vec![true; len]),
            _ => None,
        };
        TailAction { perm: (0..len).collect(), signs }
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn signs(&self) -> Option<&[bool]> {
        self.signs.as_deref()
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }
}

/// An element of the Weyl group of t_r, in block form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeylElem {
    kind: AlgebraKind,
    r: usize,
    m1: FpMat,
    m2: FpMat,
    m4: TailAction,
}

impl WeylElem {
    /// Validates all structural invariants: block shapes, invertibility of
    /// the first block, and the permutation/sign shape for the kind.
    pub fn new(kind: AlgebraKind, r: usize, m1: FpMat, m2: FpMat, m4: TailAction) -> Result<WeylElem> {
        let mu = kind.mu();
        if r > mu {
            return Err(Error::RangeError(format!("r = {r} exceeds mu = {mu}")));
        }
        if m1.rows != r || m1.cols != r {
            return Err(Error::ShapeError("first block must be r x r".into()));
        }
        if m2.rows != mu - r || m2.cols != r {
            return Err(Error::ShapeError("mixing block must be (mu - r) x r".into()));
        }
        if m4.len() != mu - r {
            return Err(Error::ShapeError("tail action length mismatch".into()));
        }
        if m1.p != m2.p {
            return Err(Error::ShapeError("blocks over different primes".into()));
        }
        if r > 0 && !m1.is_invertible() {
            return Err(Error::ShapeError("first block is singular".into()));
        }
        // re-run the kind-specific sign validation
        let m4 = TailAction::new(&kind, m4.perm, m4.signs)?;
        Ok(WeylElem { kind, r, m1, m2, m4 })
    }

    pub fn identity(kind: AlgebraKind, r: usize, p: u64) -> WeylElem {
        WeylElem {
            kind,
            r,
            m1: FpMat::identity(p, r),
            m2: FpMat::zero(p, kind.mu() - r, r),
            m4: TailAction::identity(&kind, r),
        }
    }

    pub fn random<R: rand::Rng + ?Sized>(kind: AlgebraKind, r: usize, p: u64, rng: &mut R) -> WeylElem {
        let mu = kind.mu();
        let m1 = FpMat::random_invertible(p, r, rng);
        let m2 = FpMat::random(p, mu - r, r, rng);
        let mut slots: Vec<usize> = (0..mu - r).collect();
        for i in (1..slots.len()).rev() {
            slots.swap(i, rng.gen_range(0..=i));
        }
        let signs = match kind.tag() {
            KindTag::H2 => Some((0..mu - r).map(|_| rng.gen_bool(0.5)).collect()),
            _ => None,
        };
        WeylElem { kind, r, m1, m2, m4: TailAction { perm: slots, signs } }
    }

    pub fn kind(&self) -> &AlgebraKind {
        &self.kind
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn m1(&self) -> &FpMat {
        &self.m1
    }

    pub fn m2(&self) -> &FpMat {
        &self.m2
    }

    pub fn m4(&self) -> &TailAction {
        &self.m4
    }

    /// The row action on torus coordinates.
    pub fn apply(&self, lambda: &[FieldElem]) -> Result<Vec<FieldElem>> {
        let mu = self.kind.mu();
        if lambda.len() != mu {
            return Err(Error::ShapeError(format!(
                "expected {mu} coordinates, got {}",
                lambda.len()
            )));
        }
        let field = match lambda.first() {
            Some(l) => l.field().clone(),
            None => return Ok(vec![]),
        };
        let r = self.r;
        let mut out = vec![field.zero(); mu];
        for i in 0..r {
            let mut acc = field.zero();
            for j in 0..r {
                acc = acc.add(&lambda[j].scale_u64(self.m1[(j, i)]));
            }
            out[i] = acc;
        }
        for q in 0..mu - r {
            let mut acc = field.zero();
            for j in 0..r {
                acc = acc.add(&lambda[j].scale_u64(self.m2[(q, j)]));
            }
            let pulled = &lambda[r + self.m4.perm[q]];
            let signed = match &self.m4.signs {
                Some(s) if !s[q] => pulled.neg(),
                _ => pulled.clone(),
            };
            out[r + q] = acc.add(&signed);
        }
        Ok(out)
    }
}

/// True iff the blocks form a valid Weyl element for (kind, r).
pub fn weyl_contains(kind: &AlgebraKind, r: usize, m1: &FpMat, m2: &FpMat, m4: &TailAction) -> bool {
    WeylElem::new(*kind, r, m1.clone(), m2.clone(), m4.clone()).is_ok()
}

/// Product of y_i powers over the first r variables; exponents are read
/// mod p and lifted to [0, p-1] (y_i^p = 1).
fn y_product(field: &Field, n: usize, exps: &[u64]) -> Result<TruncPoly> {
    let p = field.p();
    let mut acc = TruncPoly::one(field, n);
    for (i, &e) in exps.iter().enumerate() {
        let e = e % p;
        if e > 0 {
            let y = TruncPoly::one_plus_var(field, n, i)?;
            acc = acc.mul(&y.pow(e)?)?;
        }
    }
    Ok(acc)
}

/// The index-lowering conjugation: given coordinates lambda in t_r whose
/// last first-block entry satisfies lambda_{r-1} = sum_{i<r-1} u_i lambda_i
/// over F_p, builds the automorphism phi with
///   phi(x_{r-1}) = x_{r-1} + y_0^{u_0} .. y_{r-2}^{u_{r-2}} - 1
/// (and, for H, the compensating corrections on the conjugate block) whose
/// induced map sends the element into the span of t_{r-1}. The construction
/// is post-verified: automorphism validity, membership for the kind, and
/// exact landing.
pub fn lower_index(
    kind: &AlgebraKind,
    field: &Field,
    r: usize,
    lambda: &[FieldElem],
    u: &[u64],
) -> Result<AutoMap> {
    let mu = kind.mu();
    let n = kind.n();
    let p = field.p();
    if r == 0 || r > mu {
        return Err(Error::RangeError(format!("r = {r} out of range 1..={mu}")));
    }
    if lambda.len() != mu || u.len() != r - 1 {
        return Err(Error::ShapeError("coordinate or dependency length mismatch".into()));
    }
    // precondition: lambda_{r-1} = sum u_i lambda_i exactly
    let mut dep = field.zero();
    for (c, l) in u.iter().zip(lambda) {
        dep = dep.add(&l.scale_u64(*c));
    }
    if dep != lambda[r - 1] {
        return Err(Error::DependencyViolated);
    }
    let yu = y_product(field, n, u)?;
    let mut images: Vec<TruncPoly> = (0..n)
        .map(|i| TruncPoly::var(field, n, i))
        .collect::<Result<_>>()?;
    // x_{r-1} -> x_{r-1} + Y^(u) - 1
    images[r - 1] = images[r - 1]
        .add(&yu)?
        .sub(&TruncPoly::one(field, n))?;
    if kind.tag() == KindTag::H2 {
        // x_v -> x_v - u_{v-m} Y^{(u) - e_{v-m}} x_{m+r-1} for m <= v <= m+r-2
        let m = kind.m();
        for v in m..m + r - 1 {
            let i = v - m;
            if u[i] % p == 0 {
                continue;
            }
            let mut exps = u.to_vec();
            exps[i] = (exps[i] + p - 1) % p;
            let shifted = y_product(field, n, &exps)?;
            let xmr = TruncPoly::var(field, n, m + r - 1)?;
            let corr = shifted.mul(&xmr)?.scale(&field.from_u64(u[i]));
            images[v] = images[v].sub(&corr)?;
        }
    }
    let phi = AutoMap::new(images)
        .map_err(|e| Error::ConstructionFailed(format!("index-lowering map invalid: {e}")))?;
    match kind.tag() {
        KindTag::W => {}
        KindTag::S1 => {
            if !phi.is_special()? {
                return Err(Error::ConstructionFailed(
                    "index-lowering map is not a special automorphism".into(),
                ));
            }
        }
        KindTag::H2 => {
            let a = phi.hamiltonian_scalar(kind.m())?;
            if a != Some(field.one()) {
                return Err(Error::ConstructionFailed(
                    "index-lowering map does not preserve the Hamiltonian pairing".into(),
                ));
            }
        }
    }
    // exact landing in the span of t_{r-1}
    let t_r = standard_torus(kind, field, r)?;
    let elem = TorusElem::new(t_r, lambda.to_vec())?;
    let image = phi.apply_sigma(&elem.realize()?)?;
    let lower = standard_torus(kind, field, r - 1)?;
    if lower.coordinates_of(&image)?.is_none() {
        return Err(Error::ConstructionFailed(
            "index-lowering image missed the lower torus".into(),
        ));
    }
    Ok(phi)
}

/// Raw generator-image parameters realizing a Weyl element.
struct RawParams {
    a_hat: FpMat,         // exponent block, = M1^{-1}
    a_hat_inv: FpMat,     // = M1
    b_hat: FpMat,         // r x (mu - r) exponent block
    omega_hat: Vec<usize>, // push permutation on tail slots
    s_hat: Vec<bool>,      // source-slot signs (H only; all true otherwise)
}

fn invert_perm(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0usize; perm.len()];
    for (i, &j) in perm.iter().enumerate() {
        inv[j] = i;
    }
    inv
}

fn raw_params(w: &WeylElem) -> Result<RawParams> {
    let p = w.m1.p;
    let r = w.r;
    let tail = w.kind.mu() - r;
    let a_hat = if r == 0 {
        FpMat::identity(p, 0)
    } else {
        w.m1
            .inverse()
            .ok_or_else(|| Error::ShapeError("first block is singular".into()))?
    };
    let omega_hat = invert_perm(&w.m4.perm);
    let s_hat: Vec<bool> = (0..tail)
        .map(|l| w.m4.signs.as_ref().map_or(true, |s| s[omega_hat[l]]))
        .collect();
    // b_hat column l = -s_l * a_hat * (m2 row at omega_hat(l))
    let mut b_hat = FpMat::zero(p, r, tail);
    for l in 0..tail {
        let row = w.m2.row(omega_hat[l]).to_vec();
        for i in 0..r {
            let mut acc = 0u64;
            for (j, &v) in row.iter().enumerate() {
                acc = (acc + a_hat[(i, j)] * v) % p;
            }
            b_hat[(i, l)] = if s_hat[l] { (p - acc) % p } else { acc };
        }
    }
    Ok(RawParams { a_hat, a_hat_inv: w.m1.clone(), b_hat, omega_hat, s_hat })
}

fn column(m: &FpMat, j: usize) -> Vec<u64> {
    (0..m.rows).map(|i| m[(i, j)]).collect()
}

fn neg_column(m: &FpMat, j: usize) -> Vec<u64> {
    (0..m.rows).map(|i| (m.p - m[(i, j)]) % m.p).collect()
}

/// Builds the generator images of the torus-normalizing conjugator for the
/// given raw parameters.
fn conjugator_images(
    kind: &AlgebraKind,
    field: &Field,
    r: usize,
    raw: &RawParams,
) -> Result<Vec<TruncPoly>> {
    let n = kind.n();
    let p = field.p();
    let one = TruncPoly::one(field, n);
    let mut images: Vec<TruncPoly> = (0..n)
        .map(|i| TruncPoly::var(field, n, i))
        .collect::<Result<_>>()?;
    // first block, common to all kinds: x_l -> Y^{a_hat col l} - 1
    for l in 0..r {
        images[l] = y_product(field, n, &column(&raw.a_hat, l))?.sub(&one)?;
    }
    match kind.tag() {
        KindTag::W => {
            for t in 0..n - r {
                let y = y_product(field, n, &column(&raw.b_hat, t))?;
                let xv = TruncPoly::var(field, n, r + raw.omega_hat[t])?;
                images[r + t] = y.mul(&xv)?;
            }
        }
        KindTag::S1 => {
            let tail = n - 1 - r;
            for t in 0..tail {
                let y = y_product(field, n, &column(&raw.b_hat, t))?;
                let xv = TruncPoly::var(field, n, r + raw.omega_hat[t])?;
                images[r + t] = y.mul(&xv)?;
            }
            // the distinguished last variable absorbs the exponent balance
            // that keeps the Jacobian determinant constant
            let mut c = vec![0u64; r];
            for (i, ci) in c.iter_mut().enumerate() {
                let mut acc = 1u64;
                for l in 0..r {
                    acc = (acc + p - raw.a_hat[(i, l)] % p) % p;
                }
                for t in 0..tail {
                    acc = (acc + p - raw.b_hat[(i, t)] % p) % p;
                }
                *ci = acc;
            }
            let y = y_product(field, n, &c)?;
            let xn = TruncPoly::var(field, n, n - 1)?;
            images[n - 1] = y.mul(&xn)?;
        }
        KindTag::H2 => {
            let m = kind.m();
            let tail = m - r;
            // mid block: x_{r+t} -> Y^{b_hat col t} x_{target}
            for t in 0..tail {
                let y = y_product(field, n, &column(&raw.b_hat, t))?;
                let target = if raw.s_hat[t] {
                    r + raw.omega_hat[t]
                } else {
                    r + raw.omega_hat[t] + m
                };
                images[r + t] = y.mul(&TruncPoly::var(field, n, target)?)?;
            }
            // conjugates of the first block:
            //   x_{m+l} -> Y^{-a_hat col l} ( sum_i N[l][i] y_i x_{i+m}
            //              - sum_t s(target_t) (N b_hat)[l][t] x_q x_{q+m} )
            // with N = a_hat^{-T}; the correction terms cancel the Poisson
            // pairing between the mid images and this block.
            let nmat = &raw.a_hat_inv; // N[l][i] = a_hat_inv[(i, l)]
            for l in 0..r {
                let base = y_product(field, n, &neg_column(&raw.a_hat, l))?;
                let mut inner = TruncPoly::zero(field, n);
                for i in 0..r {
                    let c = nmat[(i, l)];
                    if c == 0 {
                        continue;
                    }
                    let yi = TruncPoly::one_plus_var(field, n, i)?;
                    let xim = TruncPoly::var(field, n, i + m)?;
                    inner = inner.add(&yi.mul(&xim)?.scale(&field.from_u64(c)))?;
                }
                for t in 0..tail {
                    let mut nb = 0u64;
                    for i in 0..r {
                        nb = (nb + nmat[(i, l)] * raw.b_hat[(i, t)]) % p;
                    }
                    if nb == 0 {
                        continue;
                    }
                    // -sigma(target) (N b_hat)[l][t]
                    let c = if raw.s_hat[t] { (p - nb) % p } else { nb };
                    let q = r + raw.omega_hat[t];
                    let pair = TruncPoly::var(field, n, q)?
                        .mul(&TruncPoly::var(field, n, q + m)?)?;
                    inner = inner.add(&pair.scale(&field.from_u64(c)))?;
                }
                images[m + l] = base.mul(&inner)?;
            }
            // conjugates of the mid block
            for t in 0..tail {
                let base = y_product(field, n, &neg_column(&raw.b_hat, t))?;
                let v = m + r + t;
                images[v] = if raw.s_hat[t] {
                    base.mul(&TruncPoly::var(field, n, r + raw.omega_hat[t] + m)?)?
                } else {
                    base.mul(&TruncPoly::var(field, n, r + raw.omega_hat[t])?)?.neg()
                };
            }
        }
    }
    Ok(images)
}

/// Extracts the Weyl element induced on t_r coordinates by a normalizing
/// automorphism; errors if the map does not normalize t_r or the induced
/// blocks fall outside the Weyl-group shape.
pub fn induced_weyl(psi: &AutoMap, torus: &TorusDesc) -> Result<WeylElem> {
    let kind = *torus.kind();
    let r = torus.r();
    let mu = torus.mu();
    let p = torus.field().p();
    let mut rows: Vec<Vec<FieldElem>> = Vec::with_capacity(mu);
    for d in torus.basis() {
        let image = psi.apply_sigma(d)?;
        let coords = torus.coordinates_of(&image)?.ok_or_else(|| {
            Error::ConstructionFailed("map does not normalize the torus".into())
        })?;
        rows.push(coords);
    }
    let as_fp = |v: &FieldElem| -> Result<u64> {
        v.as_prime().ok_or_else(|| {
            Error::ConstructionFailed("induced entry lies outside F_p".into())
        })
    };
    let mut m1 = FpMat::zero(p, r, r);
    for j in 0..r {
        for i in 0..r {
            m1[(j, i)] = as_fp(&rows[j][i])?;
        }
    }
    let mut m2 = FpMat::zero(p, mu - r, r);
    for j in 0..r {
        for q in 0..mu - r {
            m2[(q, j)] = as_fp(&rows[j][r + q])?;
        }
    }
    let mut perm = vec![usize::MAX; mu - r];
    let mut signs = vec![true; mu - r];
    for t in 0..mu - r {
        let row = &rows[r + t];
        for i in 0..r {
            if !row[i].is_zero() {
                return Err(Error::ConstructionFailed(
                    "tail image leaks into the first block".into(),
                ));
            }
        }
        let mut hit = None;
        for q in 0..mu - r {
            if !row[r + q].is_zero() {
                if hit.is_some() {
                    return Err(Error::ConstructionFailed(
                        "tail image is not a signed unit vector".into(),
                    ));
                }
                hit = Some(q);
            }
        }
        let q = hit.ok_or_else(|| {
            Error::ConstructionFailed("tail image vanished".into())
        })?;
        let v = as_fp(&row[r + q])?;
        if v == 1 {
            signs[q] = true;
        } else if v == p - 1 {
            signs[q] = false;
        } else {
            return Err(Error::ConstructionFailed(
                "tail image is not a signed unit vector".into(),
            ));
        }
        if perm[q] != usize::MAX {
            return Err(Error::ConstructionFailed("tail action is not injective".into()));
        }
        perm[q] = t;
    }
    let m4 = match kind.tag() {
        KindTag::H2 => TailAction::new(&kind, perm, Some(signs))?,
        _ => {
            if signs.iter().any(|s| !s) {
                return Err(Error::ConstructionFailed(
                    "negative tail sign outside the H kind".into(),
                ));
            }
            TailAction::new(&kind, perm, None)?
        }
    };
    WeylElem::new(kind, r, m1, m2, m4)
}

/// Builds a torus-normalizing automorphism inducing exactly the Weyl
/// element `w` on the coordinates of t_r. Post-verified: automorphism
/// validity, kind membership, exact normalization of t_r, and agreement of
/// the induced action with `w`.
pub fn normalizer_conjugator(field: &Field, w: &WeylElem) -> Result<AutoMap> {
    if field.p() != w.m1.p {
        return Err(Error::ShapeError("field and Weyl element disagree on p".into()));
    }
    let kind = w.kind;
    let raw = raw_params(w)?;
    let images = conjugator_images(&kind, field, w.r, &raw)?;
    let psi = AutoMap::new(images)
        .map_err(|e| Error::ConstructionFailed(format!("conjugator images invalid: {e}")))?;
    match kind.tag() {
        KindTag::W => {}
        KindTag::S1 => {
            if !psi.is_special()? {
                return Err(Error::ConstructionFailed(
                    "conjugator is not a special automorphism".into(),
                ));
            }
        }
        KindTag::H2 => {
            if psi.hamiltonian_scalar(kind.m())?.is_none() {
                return Err(Error::ConstructionFailed(
                    "conjugator does not preserve the Hamiltonian pairing".into(),
                ));
            }
        }
    }
    let torus = standard_torus(&kind, field, w.r)?;
    let induced = induced_weyl(&psi, &torus)?;
    if induced != *w {
        return Err(Error::ConstructionFailed(
            "conjugator induces a different Weyl element".into(),
        ));
    }
    Ok(psi)
}

/// Canonical invariant of a semisimple orbit: the algebra kind, the index
/// r, the row-reduced F_p-basis of the span of the first r coordinates, and
/// the canonically reduced, sorted tail.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrbitLabel {
    pub kind: KindTag,
    pub n: usize,
    pub r: usize,
    pub vbasis: Vec<Vec<u64>>,
    pub tail: Vec<Vec<u64>>,
}

fn canonical_tail_entry(kind: &AlgebraKind, sub: &FpSubspace, v: &FieldElem) -> FieldElem {
    let red = sub.reduce(v);
    match kind.tag() {
        KindTag::H2 => {
            let neg = sub.reduce(&v.neg());
            if neg < red {
                neg
            } else {
                red
            }
        }
        _ => red,
    }
}

/// The orbit label of a torus element whose index equals its torus
/// parameter (callers reduce with `index_of` first).
pub fn orbit_label(e: &TorusElem) -> Result<OrbitLabel> {
    let kind = e.torus().kind();
    let r = e.torus().r();
    let lambda = e.lambda();
    let sub = fp_rref(&lambda[..r])?;
    if sub.dim() != r {
        return Err(Error::IndexMismatch);
    }
    let vbasis = sub.basis().iter().map(|b| b.coords().to_vec()).collect();
    let mut tail: Vec<Vec<u64>> = lambda[r..]
        .iter()
        .map(|v| canonical_tail_entry(kind, &sub, v).coords().to_vec())
        .collect();
    tail.sort();
    Ok(OrbitLabel { kind: kind.tag(), n: kind.n(), r, vbasis, tail })
}

/// Decides orbit equivalence of two standard-torus elements of one kind
/// over one field. On a positive answer, returns an explicit automorphism
/// mapping the first realization onto the second, verified exactly.
pub fn same_orbit(e1: &TorusElem, e2: &TorusElem) -> Result<(bool, Option<AutoMap>)> {
    let kind = *e1.torus().kind();
    let field = e1.torus().field().clone();
    if *e2.torus().kind() != kind || *e2.torus().field() != field {
        return Err(Error::KindMismatch);
    }
    let red1 = index_of(e1)?;
    let red2 = index_of(e2)?;
    if red1.r_min != red2.r_min {
        return Ok((false, None));
    }
    let r = red1.r_min;
    if orbit_label(&red1.final_elem)? != orbit_label(&red2.final_elem)? {
        return Ok((false, None));
    }
    let l1 = red1.final_elem.lambda();
    let l2 = red2.final_elem.lambda();
    let p = field.p();
    let k = field.k();
    let mu = kind.mu();
    // first block: solve l2_j = sum_i l1_i m1[i][j] over F_p
    let mut basis_cols = FpMat::zero(p, k, r);
    for (i, v) in l1[..r].iter().enumerate() {
        for (row, &c) in v.coords().iter().enumerate() {
            basis_cols[(row, i)] = c;
        }
    }
    let mut m1 = FpMat::zero(p, r, r);
    for j in 0..r {
        let sol = basis_cols
            .solve(l2[j].coords())
            .ok_or_else(|| Error::ConstructionFailed("label match without a base change".into()))?;
        for i in 0..r {
            m1[(i, j)] = sol[i];
        }
    }
    // tail: match slots mod the span, with a sign for H
    let sub = fp_rref(&l1[..r])?;
    let mut m2 = FpMat::zero(p, mu - r, r);
    let mut perm = vec![usize::MAX; mu - r];
    let mut signs = vec![true; mu - r];
    let mut used = vec![false; mu - r];
    for q in 0..mu - r {
        let target = &l2[r + q];
        let mut found = false;
        'src: for l in 0..mu - r {
            if used[l] {
                continue;
            }
            let source = &l1[r + l];
            let candidates: &[bool] = match kind.tag() {
                KindTag::H2 => &[true, false],
                _ => &[true],
            };
            for &s in candidates {
                let signed = if s { source.clone() } else { source.neg() };
                let delta = target.sub(&signed);
                if sub.reduce(&delta).is_zero() {
                    // express delta over the first block
                    let sol = basis_cols.solve(delta.coords()).ok_or_else(|| {
                        Error::ConstructionFailed("tail delta left the span".into())
                    })?;
                    for (j, &c) in sol.iter().enumerate() {
                        m2[(q, j)] = c;
                    }
                    perm[q] = l;
                    signs[q] = s;
                    used[l] = true;
                    found = true;
                    break 'src;
                }
            }
        }
        if !found {
            return Err(Error::ConstructionFailed(
                "labels match but the tails cannot be aligned".into(),
            ));
        }
    }
    let m4 = match kind.tag() {
        KindTag::H2 => TailAction::new(&kind, perm, Some(signs))?,
        _ => TailAction::new(&kind, perm, None)?,
    };
    let w = WeylElem::new(kind, r, m1, m2, m4)?;
    if w.apply(l1)? != l2 {
        return Err(Error::ConstructionFailed(
            "reconstructed Weyl element misses the target coordinates".into(),
        ));
    }
    let psi = normalizer_conjugator(&field, &w)?;
    let n = kind.n();
    let comp1 = red1.composite(&field, n)?;
    let comp2 = red2.composite(&field, n)?;
    let witness = comp2.invert()?.compose(&psi.compose(&comp1)?)?;
    if witness.apply_sigma(&e1.realize()?)? != e2.realize()? {
        return Err(Error::ConstructionFailed(
            "witness failed the exact conjugation check".into(),
        ));
    }
    Ok((true, Some(witness)))
}
