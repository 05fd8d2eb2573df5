//! Correctability of the rotated codes: Knill–Laflamme checks, the Table I
//! classification, sufficient conditions on X, the X search and ancilla augmentation.

use std::collections::{HashMap, HashSet};
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codes::{StabilizerCode, Syndrome};
use crate::densesim::StateVector;
use crate::error::{Error, Result};
use crate::holonomy::{FrameAngles, HolonomicPath};
use crate::pauli::{Letter, PauliOperator};

const KL_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectableSet {
    pub errors: Vec<PauliOperator>,
    pub max_weight: usize,
}

impl CorrectableSet {
    /// `{I}` together with every Pauli of weight at most `w`.
    pub fn up_to_weight(n: usize, w: usize) -> Self {
        let mut errors = vec![PauliOperator::identity(n)];
        for weight in 1..=w.min(n) {
            for_each_of_weight(n, weight, |p| {
                errors.push(p);
                true
            });
        }
        CorrectableSet { errors, max_weight: w }
    }

    /// `{I}` and the 3n single-qubit Paulis.
    pub fn weight_one(n: usize) -> Self {
        Self::up_to_weight(n, 1)
    }

    /// Weight `⌊(d−1)/2⌋` set for a code.
    pub fn for_code(code: &StabilizerCode) -> Self {
        Self::up_to_weight(code.n(), (code.d().saturating_sub(1)) / 2)
    }

    pub fn len(&self) -> usize {
        self.errors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.errors.is_empty()
    }

    /// Distinct products `E_a E_b` up to phase, in first-seen order.
    pub fn pair_products(&self) -> Vec<PauliOperator> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for a in &self.errors {
            for b in &self.errors {
                let p = (a * b).unsigned();
                if seen.insert(p.clone()) {
                    out.push(p);
                }
            }
        }
        out
    }
}

/// Calls `f` on every Hermitian Pauli of the given weight, lexicographically with I < X < Y < Z.
/// Stops early when `f` returns false; returns false in that case.
pub fn for_each_of_weight<F: FnMut(PauliOperator) -> bool>(n: usize, weight: usize, mut f: F) -> bool {
    fn rec<F: FnMut(PauliOperator) -> bool>(letters: &mut Vec<Letter>, n: usize, left: usize, f: &mut F) -> bool {
        let pos = letters.len();
        if pos == n {
            return f(PauliOperator::from_letters(letters));
        }
        for l in Letter::ALL {
            if l != Letter::I && left == 0 {
                continue;
            }
            let need = left - usize::from(l != Letter::I);
            if need > n - pos - 1 {
                continue;
            }
            letters.push(l);
            let go_on = rec(letters, n, need, f);
            letters.pop();
            if !go_on {
                return false;
            }
        }
        true
    }
    if weight > n {
        return true;
    }
    rec(&mut Vec::with_capacity(n), n, weight, &mut f)
}

fn basis_states(code: &StabilizerCode) -> Result<Vec<StateVector>> {
    let l = code.code_basis()?;
    (0..l.ncols())
        .map(|j| StateVector::from_dvector(&l.column(j).into_owned()))
        .collect()
}

fn applied(states: &[StateVector], p: &PauliOperator) -> Result<Vec<StateVector>> {
    states
        .iter()
        .map(|s| {
            let mut v = s.clone();
            v.apply_pauli(p)?;
            Ok(v)
        })
        .collect()
}

/// `L†B†AL` for the column lists `AL` and `BL`.
fn block(al: &[StateVector], bl: &[StateVector]) -> Vec<Vec<Complex64>> {
    bl.iter().map(|b| al.iter().map(|a| b.inner(a)).collect()).collect()
}

/// `(γ, ‖M − γI‖_F)` for the least-squares fit `M ≈ γI`.
fn proportionality(m: &[Vec<Complex64>]) -> (Complex64, f64) {
    let k = m.len();
    let gamma = (0..k).map(|i| m[i][i]).sum::<Complex64>() / k as f64;
    let mut r = 0.0;
    for (i, row) in m.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let want = if i == j { gamma } else { Complex64::new(0.0, 0.0) };
            r += (v - want).norm_sqr();
        }
    }
    (gamma, r.sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub enum KlOutcome {
    /// `γ_ab` for every pair, row a, column b.
    Passed(Vec<Vec<Complex64>>),
    Violation { a: usize, b: usize, residual: f64 },
}

impl KlOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, KlOutcome::Passed(_))
    }
}

/// Knill–Laflamme condition `P₀E_b†E_aP₀ = γ_ab P₀` evaluated in the code basis.
pub fn kl_check(code: &StabilizerCode, e: &CorrectableSet) -> Result<KlOutcome> {
    let l = basis_states(code)?;
    kl_on_basis(&l, &e.errors)
}

fn kl_on_basis(l: &[StateVector], errors: &[PauliOperator]) -> Result<KlOutcome> {
    let el: Vec<Vec<StateVector>> = errors.iter().map(|p| applied(l, p)).collect::<Result<_>>()?;
    let mut gamma = vec![vec![Complex64::new(0.0, 0.0); errors.len()]; errors.len()];
    for a in 0..errors.len() {
        for b in 0..errors.len() {
            let (g, r) = proportionality(&block(&el[a], &el[b]));
            if r > KL_TOL {
                return Ok(KlOutcome::Violation { a, b, residual: r });
            }
            gamma[a][b] = g;
        }
    }
    Ok(KlOutcome::Passed(gamma))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table1Class {
    pub case: u8,
    /// Operators whose span contains `V†(t) D V(t)`.
    pub span: Vec<PauliOperator>,
}

/// Commutation case of D against H and X, with the operators `V†DV` is built from.
pub fn classify_table1(d: &PauliOperator, h: &PauliOperator, x: &PauliOperator) -> Table1Class {
    let hd = h * d;
    let xd = x * d;
    let hxd = &(h * x) * d;
    let (case, span) = match (h.commutes_with(d), x.commutes_with(d)) {
        (true, true) => (1, vec![d.clone()]),
        (true, false) => (2, vec![d.clone(), xd, hxd]),
        (false, true) => (3, vec![d.clone(), hd, hxd]),
        (false, false) => (4, vec![d.clone(), hd, xd]),
    };
    Table1Class { case, span }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Clause {
    /// X must anticommute with H.
    AnticommutesWithH,
    /// X must anticommute with at least one generator.
    NonzeroSyndrome,
    /// H must commute with every generator.
    HIsLogical,
    /// weight(X) > d − 1.
    Weight,
    /// Nearby D with XD a stabilizer must anticommute with X.
    StabilizerAnticommutes,
    /// Nearby D with XD a logical must commute with both H and X.
    LogicalCommutes,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub operator: Option<PauliOperator>,
    pub case: Option<u8>,
    pub clause: Clause,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub passed: bool,
    pub violations: Vec<Violation>,
}

impl ConditionReport {
    fn from_violations(violations: Vec<Violation>) -> Self {
        ConditionReport {
            passed: violations.is_empty(),
            violations,
        }
    }
}

/// Hamming-distance threshold of the sufficient conditions: d−1 for odd d, d−2 for even d.
pub fn distance_threshold(d: usize) -> usize {
    if d % 2 == 1 {
        d - 1
    } else {
        d.saturating_sub(2)
    }
}

/// E⁽²⁾ grouped by syndrome.
pub struct PairIndex {
    by_syndrome: HashMap<Syndrome, Vec<PauliOperator>>,
}

impl PairIndex {
    pub fn new(code: &StabilizerCode, e: &CorrectableSet) -> Self {
        let mut by_syndrome: HashMap<Syndrome, Vec<PauliOperator>> = HashMap::new();
        for d in e.pair_products() {
            by_syndrome.entry(code.syndrome_of(&d)).or_default().push(d);
        }
        PairIndex { by_syndrome }
    }

    pub fn with_syndrome(&self, s: &Syndrome) -> &[PauliOperator] {
        self.by_syndrome.get(s).map(Vec::as_slice).unwrap_or(&[])
    }
}

fn theorem4_violations(
    code: &StabilizerCode,
    h: &PauliOperator,
    x: &PauliOperator,
    pairs: &PairIndex,
    stop_at_first: bool,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let simple = |clause| Violation {
        operator: None,
        case: None,
        clause,
    };
    if x.commutes_with(h) {
        out.push(simple(Clause::AnticommutesWithH));
    }
    if code.generators().iter().any(|g| !g.commutes_with(h)) {
        out.push(simple(Clause::HIsLogical));
    }
    let sx = code.syndrome_of(x);
    if sx.is_zero() {
        out.push(simple(Clause::NonzeroSyndrome));
    }
    if x.weight() < code.d() {
        out.push(simple(Clause::Weight));
    }
    if stop_at_first && !out.is_empty() {
        return out;
    }
    let thr = distance_threshold(code.d());
    for d in pairs.with_syndrome(&sx) {
        if d.weight() > thr {
            continue;
        }
        let xd = x * d;
        let clause = if code.is_stabilizer_up_to_phase(&xd) {
            (x.commutes_with(d)).then_some(Clause::StabilizerAnticommutes)
        } else {
            (!(h.commutes_with(d) && x.commutes_with(d))).then_some(Clause::LogicalCommutes)
        };
        if let Some(clause) = clause {
            out.push(Violation {
                operator: Some(d.clone()),
                case: Some(classify_table1(d, h, x).case),
                clause,
            });
            if stop_at_first {
                break;
            }
        }
    }
    out
}

/// Sufficient conditions for every rotated code along the loop to correct E.
pub fn theorem4_check(
    code: &StabilizerCode,
    h: &PauliOperator,
    x: &PauliOperator,
    e: &CorrectableSet,
) -> Result<ConditionReport> {
    for p in [h, x] {
        if p.n() != code.n() {
            return Err(Error::DimensionMismatch {
                expected: code.n(),
                found: p.n(),
            });
        }
    }
    let pairs = PairIndex::new(code, e);
    Ok(ConditionReport::from_violations(theorem4_violations(code, h, x, &pairs, false)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Prop7Status {
    /// `P₀HDP₀ = γP₀`.
    Proportional { gamma_re: f64, gamma_im: f64 },
    /// `P₀HDP₀` is not proportional to `P₀`.
    Violated { residual: f64 },
    /// D is a stabilizer (including I); instead `P₀XDP₀ = P₀HXDP₀ = 0` is checked.
    Excluded { xd_vanishes: bool },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prop7Entry {
    pub d: PauliOperator,
    #[serde(flatten)]
    pub status: Prop7Status,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prop7Report {
    pub passed: bool,
    pub entries: Vec<Prop7Entry>,
}

/// Dense check that `P₀HDP₀ ∝ P₀` for every D in E⁽²⁾.
pub fn prop7_check(
    code: &StabilizerCode,
    h: &PauliOperator,
    x: &PauliOperator,
    e: &CorrectableSet,
) -> Result<Prop7Report> {
    let l = basis_states(code)?;
    let norm_of = |p: &PauliOperator| -> Result<f64> {
        let pl = applied(&l, p)?;
        let m = block(&pl, &l);
        Ok(m.iter().flatten().map(|v| v.norm_sqr()).sum::<f64>().sqrt())
    };
    let mut entries = Vec::new();
    let mut passed = true;
    for d in e.pair_products() {
        let status = if code.is_stabilizer_up_to_phase(&d) {
            let xd = x * &d;
            let hxd = h * &xd;
            let ok = norm_of(&xd)? < KL_TOL && norm_of(&hxd)? < KL_TOL;
            passed &= ok;
            Prop7Status::Excluded { xd_vanishes: ok }
        } else {
            let hdl = applied(&l, &(h * &d))?;
            let (g, r) = proportionality(&block(&hdl, &l));
            if r > KL_TOL {
                passed = false;
                Prop7Status::Violated { residual: r }
            } else {
                Prop7Status::Proportional {
                    gamma_re: g.re,
                    gamma_im: g.im,
                }
            }
        };
        entries.push(Prop7Entry { d, status });
    }
    Ok(Prop7Report { passed, entries })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConstraints {
    /// Maximum number of candidates enumerated.
    pub max_candidates: usize,
    /// Stop after this many valid X.
    pub max_results: Option<usize>,
    pub max_weight: Option<usize>,
}

impl Default for SearchConstraints {
    fn default() -> Self {
        SearchConstraints {
            max_candidates: 1_000_000,
            max_results: None,
            max_weight: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub found: Vec<PauliOperator>,
    pub enumerated: usize,
    /// True when the candidate cap stopped the search early.
    pub truncated: bool,
}

const SEARCH_CHUNK: usize = 8192;

/// Hermitian X satisfying the path constraints and the sufficient conditions,
/// by increasing weight from d and lexicographically within a weight.
pub fn search_x(
    code: &StabilizerCode,
    h: &PauliOperator,
    e: &CorrectableSet,
    constraints: SearchConstraints,
) -> Result<SearchResult> {
    if h.n() != code.n() {
        return Err(Error::DimensionMismatch {
            expected: code.n(),
            found: h.n(),
        });
    }
    let n = code.n();
    let pairs = PairIndex::new(code, e);
    let accept = |x: &PauliOperator| x.anticommutes_with(h) && theorem4_violations(code, h, x, &pairs, true).is_empty();
    let limit = constraints.max_results.unwrap_or(usize::MAX);
    let max_weight = constraints.max_weight.unwrap_or(n).min(n);
    let mut found = Vec::new();
    let mut enumerated = 0;
    let mut truncated = false;
    let mut chunk = Vec::with_capacity(SEARCH_CHUNK);

    let flush = |chunk: &mut Vec<PauliOperator>, found: &mut Vec<PauliOperator>| {
        let ok: Vec<bool> = chunk.par_iter().map(&accept).collect();
        found.extend(chunk.drain(..).zip(ok).filter(|(_, k)| *k).map(|(p, _)| p));
        found.len() >= limit
    };

    'outer: for w in code.d().max(1)..=max_weight {
        let mut done = false;
        for_each_of_weight(n, w, |p| {
            if enumerated >= constraints.max_candidates {
                truncated = true;
                done = true;
                return false;
            }
            enumerated += 1;
            chunk.push(p);
            if chunk.len() == SEARCH_CHUNK && flush(&mut chunk, &mut found) {
                done = true;
                return false;
            }
            true
        });
        if done {
            break 'outer;
        }
    }
    flush(&mut chunk, &mut found);
    found.truncate(limit);
    Ok(SearchResult {
        found,
        enumerated,
        truncated,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AncillaReport {
    pub d_e: usize,
    pub d_e2: usize,
    pub syndrome_count: usize,
    pub s: usize,
}

/// Distinct syndromes of the errors in E.
pub fn syndrome_count(code: &StabilizerCode, errors: &[PauliOperator]) -> usize {
    errors.iter().map(|p| code.syndrome_of(p)).collect::<HashSet<_>>().len()
}

/// Ancillas needed so that pair syndromes can leave room for X.
pub fn ancilla_requirement(code: &StabilizerCode, e: &CorrectableSet) -> AncillaReport {
    let d_e = syndrome_count(code, &e.errors);
    let d_e2 = syndrome_count(code, &e.pair_products());
    let syndrome_count = 1usize << (code.n() - code.k());
    let s = if d_e2 < syndrome_count {
        0
    } else if d_e < syndrome_count {
        1
    } else {
        2
    };
    AncillaReport {
        d_e,
        d_e2,
        syndrome_count,
        s,
    }
}

/// Appends `s` ancillas prepared in |0⟩ (Z stabilizers); H is padded with I, X with σˣ on each ancilla.
pub fn augment_code(
    code: &StabilizerCode,
    s: usize,
    h: &PauliOperator,
    x: &PauliOperator,
) -> Result<(StabilizerCode, PauliOperator, PauliOperator)> {
    if !(1..=2).contains(&s) {
        return Err(Error::InvalidParameter(format!("ancilla count must be 1 or 2, got {s}")));
    }
    let n = code.n();
    let pad = PauliOperator::identity(s);
    let mut gens: Vec<PauliOperator> = code.generators().iter().map(|g| g.tensor(&pad)).collect();
    for a in 0..s {
        gens.push(PauliOperator::identity(n).tensor(&PauliOperator::single(s, a, Letter::Z)));
    }
    let lx = code.logical_x().iter().map(|p| p.tensor(&pad)).collect();
    let lz = code.logical_z().iter().map(|p| p.tensor(&pad)).collect();
    let aug = StabilizerCode::new(
        &format!("{}+{}a", code.name(), s),
        n + s,
        code.k(),
        code.d(),
        gens,
        lx,
        lz,
    )?;
    let xs = PauliOperator::from_letters(&vec![Letter::X; s]);
    Ok((aug, h.tensor(&pad), x.tensor(&xs)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotatedKlReport {
    pub max_residual: f64,
    pub worst_phi: f64,
    pub worst_pair: (usize, usize),
}

/// Largest `‖L†(φ)E_b†E_aL(φ) − γ_ab I‖_F` over `φ = 2πj/samples`, `j = 0..=samples`.
pub fn rotated_kl_residual(path: &HolonomicPath, e: &CorrectableSet, samples: usize) -> Result<RotatedKlReport> {
    let l0 = basis_states(path.code())?;
    let mut report = RotatedKlReport {
        max_residual: 0.0,
        worst_phi: 0.0,
        worst_pair: (0, 0),
    };
    for j in 0..=samples.max(1) {
        let phi = 2.0 * PI * j as f64 / samples.max(1) as f64;
        let f: FrameAngles = path.angles(phi);
        let l = l0
            .iter()
            .map(|s| {
                let mut v = s.clone();
                v.apply_frame(path.h(), path.x(), f)?;
                Ok(v)
            })
            .collect::<Result<Vec<_>>>()?;
        let el: Vec<Vec<StateVector>> = e.errors.iter().map(|p| applied(&l, p)).collect::<Result<_>>()?;
        for a in 0..el.len() {
            for b in 0..el.len() {
                let r = proportionality(&block(&el[a], &el[b])).1;
                if r > report.max_residual {
                    report = RotatedKlReport {
                        max_residual: r,
                        worst_phi: phi,
                        worst_pair: (a, b),
                    };
                }
            }
        }
    }
    Ok(report)
}

/// Rewrites the generators so only one anticommutes with X: the first anticommuting
/// generator is kept and multiplied into the others. Returns the new list and its index.
pub fn transform_generators(generators: &[PauliOperator], x: &PauliOperator) -> Result<(Vec<PauliOperator>, usize)> {
    let idx = generators
        .iter()
        .position(|g| g.anticommutes_with(x))
        .ok_or_else(|| Error::InvalidPath("X commutes with every generator".into()))?;
    let pivot = generators[idx].clone();
    let out = generators
        .iter()
        .enumerate()
        .map(|(j, g)| {
            if j != idx && g.anticommutes_with(x) {
                g * &pivot
            } else {
                g.clone()
            }
        })
        .collect();
    Ok((out, idx))
}
