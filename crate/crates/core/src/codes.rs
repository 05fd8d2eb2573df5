//! Stabilizer codes: validation, syndromes, projectors and the code basis.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::densesim::{Projector, ProjectorProgram, StateVector};
use crate::error::{Error, Result};
use crate::pauli::{PauliOperator, DEFAULT_DENSE_LIMIT};

pub const BUILTIN_CODES: [&str; 4] = ["bitflip3", "shor9", "steane7", "perfect5"];

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Syndrome {
    bits: Vec<bool>,
}

impl Syndrome {
    pub fn new(bits: Vec<bool>) -> Self {
        Syndrome { bits }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|b| !b)
    }

    pub fn xor(&self, other: &Self) -> Self {
        Syndrome {
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| a ^ b).collect(),
        }
    }
}

impl fmt::Display for Syndrome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Row-reduced GF(2) basis of symplectic vectors, for span membership.
#[derive(Clone, Debug)]
struct Gf2Span {
    rows: Vec<(usize, Vec<u64>)>,
}

fn bit(v: &[u64], i: usize) -> bool {
    (v[i / 64] >> (i % 64)) & 1 == 1
}

fn xor_into(a: &mut [u64], b: &[u64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x ^= y;
    }
}

impl Gf2Span {
    fn new() -> Self {
        Gf2Span { rows: Vec::new() }
    }

    fn reduce(&self, mut v: Vec<u64>) -> Vec<u64> {
        for (pivot, row) in &self.rows {
            if bit(&v, *pivot) {
                xor_into(&mut v, row);
            }
        }
        v
    }

    /// Adds `v`; returns false when it was already in the span.
    fn insert(&mut self, v: Vec<u64>) -> bool {
        let v = self.reduce(v);
        let nbits = v.len() * 64;
        match (0..nbits).find(|&i| bit(&v, i)) {
            None => false,
            Some(pivot) => {
                for (_, row) in &mut self.rows {
                    if bit(row, pivot) {
                        xor_into(row, &v);
                    }
                }
                self.rows.push((pivot, v));
                true
            }
        }
    }

    fn contains(&self, v: Vec<u64>) -> bool {
        self.reduce(v).iter().all(|&w| w == 0)
    }
}

/// Serialized form of a code definition file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeDefinition {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub generators: Vec<String>,
    pub logical_x: Vec<String>,
    pub logical_z: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct StabilizerCode {
    name: String,
    n: usize,
    k: usize,
    d: usize,
    generators: Vec<PauliOperator>,
    logical_x: Vec<PauliOperator>,
    logical_z: Vec<PauliOperator>,
    span: Gf2Span,
}

impl StabilizerCode {
    pub fn new(
        name: &str,
        n: usize,
        k: usize,
        d: usize,
        generators: Vec<PauliOperator>,
        logical_x: Vec<PauliOperator>,
        logical_z: Vec<PauliOperator>,
    ) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidCode(format!("{name}: {msg}")));
        if n == 0 || k > n {
            return bad(format!("invalid parameters n = {n}, k = {k}"));
        }
        if generators.len() != n - k {
            return bad(format!("expected {} generators, got {}", n - k, generators.len()));
        }
        if logical_x.len() != k || logical_z.len() != k {
            return bad(format!("expected {k} logical X and Z operators"));
        }
        for op in generators.iter().chain(&logical_x).chain(&logical_z) {
            if op.n() != n {
                return bad(format!("operator {op} acts on {} qubits, not {n}", op.n()));
            }
            if !op.is_hermitian() {
                return bad(format!("operator {op} is not Hermitian"));
            }
        }
        for (i, a) in generators.iter().enumerate() {
            for b in &generators[i + 1..] {
                if !a.commutes_with(b) {
                    return bad(format!("generators {a} and {b} anticommute"));
                }
            }
        }
        let mut span = Gf2Span::new();
        for g in &generators {
            if g.is_identity_up_to_phase() || !span.insert(g.symplectic_words()) {
                return bad(format!("generator {g} is not independent"));
            }
        }
        for l in logical_x.iter().chain(&logical_z) {
            if let Some(g) = generators.iter().find(|g| !l.commutes_with(g)) {
                return bad(format!("logical {l} anticommutes with generator {g}"));
            }
        }
        for i in 0..k {
            for j in 0..k {
                let xz = logical_x[i].commutes_with(&logical_z[j]);
                if (i == j) == xz {
                    return bad(format!(
                        "logicals {} and {} have the wrong commutation",
                        logical_x[i], logical_z[j]
                    ));
                }
                if i < j
                    && (!logical_x[i].commutes_with(&logical_x[j])
                        || !logical_z[i].commutes_with(&logical_z[j]))
                {
                    return bad(format!("logical pair {i}, {j} does not commute"));
                }
            }
        }
        Ok(StabilizerCode {
            name: name.to_string(),
            n,
            k,
            d,
            generators,
            logical_x,
            logical_z,
            span,
        })
    }

    pub fn from_definition(name: &str, def: &CodeDefinition) -> Result<Self> {
        let parse = |v: &[String]| -> Result<Vec<PauliOperator>> { v.iter().map(|s| s.parse()).collect() };
        StabilizerCode::new(
            name,
            def.n,
            def.k,
            def.d,
            parse(&def.generators)?,
            parse(&def.logical_x)?,
            parse(&def.logical_z)?,
        )
    }

    pub fn to_definition(&self) -> CodeDefinition {
        let show = |v: &[PauliOperator]| v.iter().map(|p| p.to_string()).collect();
        CodeDefinition {
            n: self.n,
            k: self.k,
            d: self.d,
            generators: show(&self.generators),
            logical_x: show(&self.logical_x),
            logical_z: show(&self.logical_z),
        }
    }

    pub fn from_json(name: &str, json: &str) -> Result<Self> {
        let def: CodeDefinition = serde_json::from_str(json)
            .map_err(|e| Error::InvalidCode(format!("{name}: {e}")))?;
        Self::from_definition(name, &def)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_definition()).expect("code definition serializes")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn generators(&self) -> &[PauliOperator] {
        &self.generators
    }

    pub fn logical_x(&self) -> &[PauliOperator] {
        &self.logical_x
    }

    pub fn logical_z(&self) -> &[PauliOperator] {
        &self.logical_z
    }

    /// Same code space described by a different generating set.
    pub fn with_generators(&self, generators: Vec<PauliOperator>) -> Result<Self> {
        let code = StabilizerCode::new(
            &self.name,
            self.n,
            self.k,
            self.d,
            generators,
            self.logical_x.clone(),
            self.logical_z.clone(),
        )?;
        let group = self.stabilizer_group();
        for g in &code.generators {
            if !group.contains(g) {
                return Err(Error::InvalidCode(format!(
                    "{}: {g} is not in the original stabilizer group with this sign",
                    self.name
                )));
            }
        }
        Ok(code)
    }

    fn check_n(&self, p: &PauliOperator) -> Result<()> {
        if p.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: p.n(),
            });
        }
        Ok(())
    }

    pub fn syndrome(&self, p: &PauliOperator) -> Result<Syndrome> {
        self.check_n(p)?;
        Ok(self.syndrome_of(p))
    }

    /// Syndrome of an operator on this code's register (panics on size mismatch).
    pub fn syndrome_of(&self, p: &PauliOperator) -> Syndrome {
        Syndrome {
            bits: self.generators.iter().map(|g| !p.commutes_with(g)).collect(),
        }
    }

    /// Membership in the stabilizer group, ignoring the sign.
    pub fn is_stabilizer_up_to_phase(&self, p: &PauliOperator) -> bool {
        p.n() == self.n && self.span.contains(p.symplectic_words())
    }

    /// Nontrivial logical operator: zero syndrome but outside the stabilizer group.
    pub fn is_logical_up_to_phase(&self, p: &PauliOperator) -> bool {
        p.n() == self.n && self.syndrome_of(p).is_zero() && !self.is_stabilizer_up_to_phase(p)
    }

    /// All 2^{n−k} stabilizer group elements with their signs.
    pub fn stabilizer_group(&self) -> Vec<PauliOperator> {
        let r = self.generators.len();
        assert!(r < 26, "stabilizer group too large to enumerate");
        (0..1usize << r)
            .map(|mask| {
                let mut acc = PauliOperator::identity(self.n);
                for (j, g) in self.generators.iter().enumerate() {
                    if mask >> j & 1 == 1 {
                        acc = &acc * g;
                    }
                }
                acc
            })
            .collect()
    }

    fn check_dense(&self) -> Result<()> {
        if self.n > DEFAULT_DENSE_LIMIT {
            return Err(Error::DenseLimit {
                n: self.n,
                limit: DEFAULT_DENSE_LIMIT,
            });
        }
        Ok(())
    }

    /// `Π (I+g_j)/2` as an operator program.
    pub fn projector_program(&self) -> ProjectorProgram {
        ProjectorProgram::stabilizer(&self.generators)
    }

    /// Dense code projector `P₀`, summed over the stabilizer group.
    pub fn code_projector(&self) -> Result<DMatrix<Complex64>> {
        self.check_dense()?;
        let dim = 1usize << self.n;
        let mut m = DMatrix::zeros(dim, dim);
        let group = self.stabilizer_group();
        let w = 1.0 / group.len() as f64;
        for s in &group {
            let (xm, zm) = s.index_masks();
            let f = s.phase_factor() * w;
            for k in 0..dim {
                let sign = if (zm & k).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                m[(k ^ xm, k)] += f * sign;
            }
        }
        Ok(m)
    }

    /// `⟨ψ|P₀|ψ⟩`.
    pub fn code_space_weight(&self, psi: &StateVector) -> Result<f64> {
        let mut v = psi.clone();
        self.projector_program().project(&mut v)?;
        Ok(v.norm_sqr() / psi.norm_sqr())
    }

    /// Logical computational basis state `|j⟩_L`; logical qubit 0 is the most significant bit of j.
    pub fn logical_basis_state(&self, j: usize) -> Result<StateVector> {
        if j >= 1usize << self.k {
            return Err(Error::InvalidParameter(format!(
                "logical index {j} out of range for k = {}",
                self.k
            )));
        }
        let mut psi = self.logical_zero()?;
        for (i, lx) in self.logical_x.iter().enumerate() {
            if j >> (self.k - 1 - i) & 1 == 1 {
                psi.apply_pauli(lx)?;
            }
        }
        Ok(psi)
    }

    fn logical_zero(&self) -> Result<StateVector> {
        let mut prog = self.projector_program();
        for z in &self.logical_z {
            prog.push(crate::densesim::ProgramStep::ProjectPlus(z.clone()));
        }
        let dim = 1usize << self.n;
        let seeds = [
            StateVector::zero(self.n),
            StateVector::from_amplitudes(
                (0..dim)
                    .map(|k| Complex64::new(1.0 + 0.37 * (k % 7) as f64, 0.11 * (k % 5) as f64))
                    .collect(),
            )?,
        ];
        for seed in seeds {
            let mut v = seed;
            prog.project(&mut v)?;
            if v.norm_sqr() > 1e-8 {
                v.normalize()?;
                let amps = v.amplitudes();
                let max = amps.iter().map(|a| a.norm()).fold(0.0, f64::max);
                let lead = amps
                    .iter()
                    .find(|a| a.norm() > max * (1.0 - 1e-9))
                    .copied()
                    .expect("nonzero state has a largest amplitude");
                v.scale(lead.conj() / lead.norm());
                return Ok(v);
            }
        }
        Err(Error::InvalidCode(format!(
            "{}: could not construct the logical zero state",
            self.name
        )))
    }

    /// Orthonormal code basis `L(0)` as a 2^n × 2^k matrix, columns in logical order.
    pub fn code_basis(&self) -> Result<DMatrix<Complex64>> {
        self.check_dense()?;
        let dim = 1usize << self.n;
        let kdim = 1usize << self.k;
        let mut l = DMatrix::zeros(dim, kdim);
        for j in 0..kdim {
            l.set_column(j, &self.logical_basis_state(j)?.to_dvector());
        }
        Ok(l)
    }
}

fn paulis(v: &[&str]) -> Vec<PauliOperator> {
    v.iter().map(|s| s.parse().expect("builtin Pauli string")).collect()
}

pub fn builtin_code(name: &str) -> Result<StabilizerCode> {
    let (n, k, d, gens, lx, lz): (usize, usize, usize, Vec<&str>, &str, &str) = match name {
        "bitflip3" => (3, 1, 3, vec!["ZZI", "IZZ"], "XXX", "ZZZ"),
        "shor9" => (
            9,
            1,
            3,
            vec![
                "ZZIIIIIII",
                "IZZIIIIII",
                "IIIZZIIII",
                "IIIIZZIII",
                "IIIIIIZZI",
                "IIIIIIIZZ",
                "XXXXXXIII",
                "IIIXXXXXX",
            ],
            "ZIIZIIZII",
            "XXXXXXXXX",
        ),
        "steane7" => (
            7,
            1,
            3,
            vec!["IIIXXXX", "IXXIIXX", "XIXIXIX", "IIIZZZZ", "IZZIIZZ", "ZIZIZIZ"],
            "XXXXXXX",
            "ZZZZZZZ",
        ),
        "perfect5" => (
            5,
            1,
            3,
            vec!["XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"],
            "XXXXX",
            "ZZZZZ",
        ),
        _ => return Err(Error::UnknownCode(name.to_string())),
    };
    StabilizerCode::new(name, n, k, d, paulis(&gens), paulis(&[lx]), paulis(&[lz]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> PauliOperator {
        s.parse().unwrap()
    }

    #[test]
    fn bitflip_syndromes() {
        let c = builtin_code("bitflip3").unwrap();
        assert_eq!(c.syndrome(&p("XIZ")).unwrap().bits(), &[true, false]);
        assert!(c.syndrome(&p("ZIZ")).unwrap().is_zero());
        assert!(c.syndrome(&p("XI")).is_err());
    }

    #[test]
    fn builtin_parameters() {
        let shor = builtin_code("shor9").unwrap();
        assert_eq!((shor.n(), shor.k(), shor.d(), shor.generators().len()), (9, 1, 3, 8));
        let p5 = builtin_code("perfect5").unwrap();
        assert_eq!(p5.generators().len(), 4);
        assert!(matches!(builtin_code("toric"), Err(Error::UnknownCode(_))));
    }

    #[test]
    fn bitflip_projector_and_basis() {
        let c = builtin_code("bitflip3").unwrap();
        let proj = c.code_projector().unwrap();
        for k in 0..8 {
            for j in 0..8 {
                let expect = if j == k && (k == 0 || k == 7) { 1.0 } else { 0.0 };
                assert!((proj[(j, k)] - Complex64::new(expect, 0.0)).norm() < 1e-14);
            }
        }
        let l = c.code_basis().unwrap();
        assert!((l[(0, 0)].re - 1.0).abs() < 1e-14);
        assert!((l[(7, 1)].re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn trivial_code_projector_is_identity() {
        let c = StabilizerCode::new("trivial", 1, 1, 1, vec![], vec![p("X")], vec![p("Z")]).unwrap();
        let proj = c.code_projector().unwrap();
        assert!((proj - DMatrix::<Complex64>::identity(2, 2)).norm() < 1e-15);
    }

    #[test]
    fn validation_rejects_bad_codes() {
        let mk = |g: Vec<&str>, x: &str, z: &str| {
            StabilizerCode::new("t", 3, 1, 1, paulis(&g), paulis(&[x]), paulis(&[z]))
        };
        assert!(mk(vec!["ZZI", "IZZ"], "XXX", "ZII").is_ok());
        assert!(mk(vec!["ZZI", "XXI"], "XXX", "ZII").is_err());
        assert!(mk(vec!["ZZI", "ZZI"], "XXX", "ZII").is_err());
        assert!(mk(vec!["ZZI", "IZZ"], "XII", "ZII").is_err());
        assert!(mk(vec!["ZZI", "IZZ"], "XXX", "ZZI").is_err());
        assert!(mk(vec!["ZZI", "iIZZ"], "XXX", "ZII").is_err());
    }

    #[test]
    fn stabilizer_membership() {
        let c = builtin_code("shor9").unwrap();
        assert!(c.is_stabilizer_up_to_phase(&p("ZIZIIIIII")));
        assert!(c.is_stabilizer_up_to_phase(&p("-XXXIIIXXX")));
        assert!(!c.is_stabilizer_up_to_phase(&p("ZIIZIIZII")));
        assert!(c.is_logical_up_to_phase(&p("ZIIZIIZII")));
        assert!(!c.is_logical_up_to_phase(&p("XIIIIIIII")));
        assert_eq!(c.stabilizer_group().len(), 256);
    }

    #[test]
    fn json_round_trip() {
        for name in BUILTIN_CODES {
            let c = builtin_code(name).unwrap();
            let back = StabilizerCode::from_json(name, &c.to_json()).unwrap();
            assert_eq!(back.to_definition(), c.to_definition());
        }
        assert!(StabilizerCode::from_json("x", "{\"n\": 1}").is_err());
    }

    #[test]
    fn with_generators_keeps_code_space() {
        let c = builtin_code("bitflip3").unwrap();
        let t = c.with_generators(vec![p("ZZI"), p("ZIZ")]).unwrap();
        assert!((t.code_projector().unwrap() - c.code_projector().unwrap()).norm() < 1e-14);
        assert!(c.with_generators(vec![p("ZZI"), p("XXX")]).is_err());
        assert!(c.with_generators(vec![p("ZZI"), p("-ZIZ")]).is_err());
    }
}
