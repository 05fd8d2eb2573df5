//! Dense state-vector engine.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::holonomy::{FrameAngles, HolonomicPath};
use crate::pauli::PauliOperator;

/// Branch norms below this make a projector measurement meaningless.
pub const BRANCH_EPS: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

#[inline]
fn parity(v: usize) -> bool {
    v.count_ones() & 1 == 1
}

impl StateVector {
    /// Computational basis state `|index⟩`.
    pub fn basis(n: usize, index: usize) -> Self {
        assert!(n < 31, "register too large for a dense state");
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[index] = Complex64::new(1.0, 0.0);
        StateVector { n, amps }
    }

    pub fn zero(n: usize) -> Self {
        Self::basis(n, 0)
    }

    /// Builds a state from raw amplitudes and normalizes it.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "amplitude vector length {dim} is not a power of two"
            )));
        }
        let mut s = StateVector {
            n: dim.trailing_zeros() as usize,
            amps,
        };
        s.normalize()?;
        Ok(s)
    }

    pub fn from_dvector(v: &DVector<Complex64>) -> Result<Self> {
        Self::from_amplitudes(v.iter().copied().collect())
    }

    pub fn to_dvector(&self) -> DVector<Complex64> {
        DVector::from_column_slice(&self.amps)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Rescales to unit norm and returns the norm before rescaling.
    pub fn normalize(&mut self) -> Result<f64> {
        let nrm = self.norm();
        if !(nrm > BRANCH_EPS) || !nrm.is_finite() {
            return Err(Error::NormCollapse(nrm));
        }
        let inv = 1.0 / nrm;
        for a in &mut self.amps {
            *a *= inv;
        }
        Ok(nrm)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&mut self, c: Complex64) {
        for a in &mut self.amps {
            *a *= c;
        }
    }

    /// `self += c · other`.
    pub fn axpy(&mut self, c: Complex64, other: &Self) {
        for (a, b) in self.amps.iter_mut().zip(&other.amps) {
            *a += c * b;
        }
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

    /// `ψ ← Pψ`.
    pub fn apply_pauli(&mut self, p: &PauliOperator) -> Result<()> {
        self.check_n(p)?;
        let (xm, zm) = p.index_masks();
        let f = p.phase_factor();
        if xm == 0 {
            for (k, a) in self.amps.iter_mut().enumerate() {
                *a *= if parity(zm & k) { -f } else { f };
            }
            return Ok(());
        }
        for k in 0..self.amps.len() {
            let k2 = k ^ xm;
            if k < k2 {
                let a = self.amps[k];
                let b = self.amps[k2];
                let fa = if parity(zm & k) { -f } else { f };
                let fb = if parity(zm & k2) { -f } else { f };
                self.amps[k2] = fa * a;
                self.amps[k] = fb * b;
            }
        }
        Ok(())
    }

    /// `⟨ψ|P|ψ⟩` without modifying the state.
    pub fn expectation(&self, p: &PauliOperator) -> Result<Complex64> {
        self.check_n(p)?;
        let (xm, zm) = p.index_masks();
        let f = p.phase_factor();
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, a) in self.amps.iter().enumerate() {
            let s = if parity(zm & k) { -1.0 } else { 1.0 };
            acc += self.amps[k ^ xm].conj() * a * s;
        }
        Ok(acc * f)
    }

    /// `ψ ← exp(i·angle·P)ψ = cos(angle)ψ + i sin(angle)Pψ` for Hermitian P.
    pub fn pauli_rotation(&mut self, p: &PauliOperator, angle: f64) -> Result<()> {
        self.check_n(p)?;
        if !p.is_hermitian() {
            return Err(Error::NonHermitian(p.to_string()));
        }
        let (xm, zm) = p.index_masks();
        let (s, c) = angle.sin_cos();
        let f = p.phase_factor() * Complex64::new(0.0, s);
        if xm == 0 {
            for (k, a) in self.amps.iter_mut().enumerate() {
                let t = if parity(zm & k) { -f } else { f };
                *a *= c + t;
            }
            return Ok(());
        }
        for k in 0..self.amps.len() {
            let k2 = k ^ xm;
            if k < k2 {
                let a = self.amps[k];
                let b = self.amps[k2];
                let fa = if parity(zm & k) { -f } else { f };
                let fb = if parity(zm & k2) { -f } else { f };
                self.amps[k] = a * c + fb * b;
                self.amps[k2] = b * c + fa * a;
            }
        }
        Ok(())
    }

    /// `ψ ← (I + g)/2 · ψ` without renormalizing.
    pub fn project_plus(&mut self, g: &PauliOperator) -> Result<()> {
        self.check_n(g)?;
        let (xm, zm) = g.index_masks();
        let f = g.phase_factor() * 0.5;
        if xm == 0 {
            for (k, a) in self.amps.iter_mut().enumerate() {
                let t = if parity(zm & k) { -f } else { f };
                *a *= t + 0.5;
            }
            return Ok(());
        }
        for k in 0..self.amps.len() {
            let k2 = k ^ xm;
            if k < k2 {
                let a = self.amps[k];
                let b = self.amps[k2];
                let fa = if parity(zm & k) { -f } else { f };
                let fb = if parity(zm & k2) { -f } else { f };
                self.amps[k] = a * 0.5 + fb * b;
                self.amps[k2] = b * 0.5 + fa * a;
            }
        }
        Ok(())
    }

    /// Applies `exp(i h H) exp(i x X)`.
    pub fn apply_frame(&mut self, h_op: &PauliOperator, x_op: &PauliOperator, f: FrameAngles) -> Result<()> {
        self.pauli_rotation(x_op, f.x)?;
        self.pauli_rotation(h_op, f.h)
    }

    /// Applies the inverse of [`StateVector::apply_frame`].
    pub fn apply_frame_inverse(
        &mut self,
        h_op: &PauliOperator,
        x_op: &PauliOperator,
        f: FrameAngles,
    ) -> Result<()> {
        self.pauli_rotation(h_op, -f.h)?;
        self.pauli_rotation(x_op, -f.x)
    }

    pub fn apply_dense(&mut self, m: &DMatrix<Complex64>) -> Result<()> {
        if m.nrows() != self.dim() || m.ncols() != self.dim() {
            return Err(Error::InvalidParameter(format!(
                "matrix shape {}x{} does not act on dimension {}",
                m.nrows(),
                m.ncols(),
                self.dim()
            )));
        }
        let v = m * self.to_dvector();
        self.amps = v.iter().copied().collect();
        Ok(())
    }
}

/// `exp(i(θφ/2π)H) exp(iφX)` applied to ψ.
pub fn apply_path_unitary(path: &HolonomicPath, phi: f64, psi: &mut StateVector) -> Result<()> {
    if path.h().n() != psi.n() {
        return Err(Error::DimensionMismatch {
            expected: path.h().n(),
            found: psi.n(),
        });
    }
    psi.apply_frame(path.h(), path.x(), path.angles(phi))
}

/// `|⟨a|b⟩|²`.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            found: b.n(),
        });
    }
    Ok(a.inner(b).norm_sqr().min(1.0))
}

/// An orthogonal projector that can be applied to a state.
pub trait Projector {
    /// `ψ ← Pψ` (unnormalized).
    fn project(&self, psi: &mut StateVector) -> Result<()>;
}

#[derive(Clone, Debug)]
pub enum ProgramStep {
    Rotate { op: PauliOperator, angle: f64 },
    ProjectPlus(PauliOperator),
}

/// A projector written as Pauli rotations and `(I+g)/2` factors.
#[derive(Clone, Debug, Default)]
pub struct ProjectorProgram {
    steps: Vec<ProgramStep>,
}

impl ProjectorProgram {
    pub fn new(steps: Vec<ProgramStep>) -> Self {
        ProjectorProgram { steps }
    }

    /// `Π (I+g_j)/2`.
    pub fn stabilizer(generators: &[PauliOperator]) -> Self {
        ProjectorProgram {
            steps: generators.iter().cloned().map(ProgramStep::ProjectPlus).collect(),
        }
    }

    /// `F P₀ F†` where `F = exp(i h H) exp(i x X)`.
    pub fn rotated(
        generators: &[PauliOperator],
        h_op: &PauliOperator,
        x_op: &PauliOperator,
        f: FrameAngles,
    ) -> Self {
        let mut steps = vec![
            ProgramStep::Rotate { op: h_op.clone(), angle: -f.h },
            ProgramStep::Rotate { op: x_op.clone(), angle: -f.x },
        ];
        steps.extend(generators.iter().cloned().map(ProgramStep::ProjectPlus));
        steps.push(ProgramStep::Rotate { op: x_op.clone(), angle: f.x });
        steps.push(ProgramStep::Rotate { op: h_op.clone(), angle: f.h });
        ProjectorProgram { steps }
    }

    pub fn steps(&self) -> &[ProgramStep] {
        &self.steps
    }

    pub fn push(&mut self, step: ProgramStep) {
        self.steps.push(step);
    }

    pub fn to_dense(&self, n: usize) -> Result<DMatrix<Complex64>> {
        if n > crate::pauli::DEFAULT_DENSE_LIMIT {
            return Err(Error::DenseLimit {
                n,
                limit: crate::pauli::DEFAULT_DENSE_LIMIT,
            });
        }
        let dim = 1usize << n;
        let mut m = DMatrix::zeros(dim, dim);
        for k in 0..dim {
            let mut col = StateVector::basis(n, k);
            self.project(&mut col)?;
            m.set_column(k, &col.to_dvector());
        }
        Ok(m)
    }
}

impl Projector for ProjectorProgram {
    fn project(&self, psi: &mut StateVector) -> Result<()> {
        for step in &self.steps {
            match step {
                ProgramStep::Rotate { op, angle } => psi.pauli_rotation(op, *angle)?,
                ProgramStep::ProjectPlus(g) => psi.project_plus(g)?,
            }
        }
        Ok(())
    }
}

impl Projector for DMatrix<Complex64> {
    fn project(&self, psi: &mut StateVector) -> Result<()> {
        psi.apply_dense(self)
    }
}

#[derive(Clone, Debug)]
pub enum UnitaryStep {
    /// `exp(i·angle·op)`.
    Rotate { op: PauliOperator, angle: f64 },
    Pauli(PauliOperator),
    Phase(Complex64),
}

/// A unitary written as a sequence of Pauli rotations, Pauli products and phases.
/// Steps act on the state in list order.
#[derive(Clone, Debug, Default)]
pub struct UnitaryProgram {
    steps: Vec<UnitaryStep>,
}

impl UnitaryProgram {
    pub fn new(steps: Vec<UnitaryStep>) -> Self {
        UnitaryProgram { steps }
    }

    /// `exp(i h H) exp(i x X)`.
    pub fn frame(h_op: &PauliOperator, x_op: &PauliOperator, f: FrameAngles) -> Self {
        UnitaryProgram::new(vec![
            UnitaryStep::Rotate { op: x_op.clone(), angle: f.x },
            UnitaryStep::Rotate { op: h_op.clone(), angle: f.h },
        ])
    }

    /// `exp(-i x X) exp(-i h H)`.
    pub fn frame_inverse(h_op: &PauliOperator, x_op: &PauliOperator, f: FrameAngles) -> Self {
        UnitaryProgram::new(vec![
            UnitaryStep::Rotate { op: h_op.clone(), angle: -f.h },
            UnitaryStep::Rotate { op: x_op.clone(), angle: -f.x },
        ])
    }

    /// The program that applies `self` first and then `next`.
    pub fn then(mut self, next: UnitaryProgram) -> Self {
        self.steps.extend(next.steps);
        self
    }

    pub fn steps(&self) -> &[UnitaryStep] {
        &self.steps
    }

    pub fn apply(&self, psi: &mut StateVector) -> Result<()> {
        for step in &self.steps {
            match step {
                UnitaryStep::Rotate { op, angle } => psi.pauli_rotation(op, *angle)?,
                UnitaryStep::Pauli(op) => psi.apply_pauli(op)?,
                UnitaryStep::Phase(c) => psi.scale(*c),
            }
        }
        Ok(())
    }

    pub fn to_dense(&self, n: usize) -> Result<DMatrix<Complex64>> {
        if n > crate::pauli::DEFAULT_DENSE_LIMIT {
            return Err(Error::DenseLimit {
                n,
                limit: crate::pauli::DEFAULT_DENSE_LIMIT,
            });
        }
        let dim = 1usize << n;
        let mut m = DMatrix::zeros(dim, dim);
        for k in 0..dim {
            let mut col = StateVector::basis(n, k);
            self.apply(&mut col)?;
            m.set_column(k, &col.to_dvector());
        }
        Ok(m)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Measurement {
    /// 1 when the state landed in the range of P, 0 for the complement.
    pub outcome: u8,
    /// Born probability of the returned branch.
    pub probability: f64,
}

fn split_branches<P: Projector + ?Sized>(
    p: &P,
    psi: &StateVector,
) -> Result<(StateVector, StateVector, f64, f64)> {
    let mut kept = psi.clone();
    p.project(&mut kept)?;
    let mut rest = psi.clone();
    rest.axpy(Complex64::new(-1.0, 0.0), &kept);
    let n1 = kept.norm_sqr();
    let n0 = rest.norm_sqr();
    if n1.sqrt() < BRANCH_EPS && n0.sqrt() < BRANCH_EPS {
        return Err(Error::DegenerateProjector {
            kept: n1.sqrt(),
            rejected: n0.sqrt(),
        });
    }
    Ok((kept, rest, n1, n0))
}

/// Born-rule projective measurement of P; ψ is replaced by the normalized post-state.
pub fn measure_projector<P: Projector + ?Sized, R: Rng + ?Sized>(
    p: &P,
    psi: &mut StateVector,
    rng: &mut R,
) -> Result<Measurement> {
    let (kept, rest, n1, n0) = split_branches(p, psi)?;
    let p1 = n1 / (n1 + n0);
    let u: f64 = rng.random();
    let (outcome, mut post, prob) = if u < p1 { (1, kept, p1) } else { (0, rest, 1.0 - p1) };
    post.normalize()?;
    *psi = post;
    Ok(Measurement {
        outcome,
        probability: prob,
    })
}

/// Projects onto the requested branch and returns its Born probability.
pub fn measure_projector_forced<P: Projector + ?Sized>(
    p: &P,
    psi: &mut StateVector,
    outcome: u8,
) -> Result<Measurement> {
    let (kept, rest, n1, n0) = split_branches(p, psi)?;
    let p1 = n1 / (n1 + n0);
    let (mut post, prob) = if outcome == 1 { (kept, p1) } else { (rest, 1.0 - p1) };
    post.normalize()?;
    *psi = post;
    Ok(Measurement {
        outcome,
        probability: prob,
    })
}
