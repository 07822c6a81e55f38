//! Truncated Fock space: kets, operators, and density matrices.
//!
//! Everything lives in a hard-truncated basis |0>, ..., |dim-1>. Truncation
//! is never hidden: coherent-state constructors report the probability mass
//! lost to the cutoff instead of silently renormalizing.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Norm tolerance for validated state vectors.
pub const NORM_TOL: f64 = 1e-9;
/// Max elementwise deviation tolerated between a matrix and its adjoint.
pub const HERMITICITY_TOL: f64 = 1e-9;
/// Tolerance on Tr(rho) = 1.
pub const TRACE_TOL: f64 = 1e-8;
/// Density-matrix eigenvalues may undershoot zero by this much.
pub const POSITIVITY_TOL: f64 = 1e-8;

/// A truncated Fock space of dimension `dim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockSpace {
    dim: usize,
}

impl FockSpace {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        Ok(Self { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dimension adequate for a coherent state of amplitude `alpha`:
    /// ceil(|alpha|^2 + 6|alpha| + 10), rounded up to a multiple of 16.
    pub fn recommended_dim(alpha: Complex64) -> usize {
        let a = alpha.norm();
        let d = (a * a + 6.0 * a + 10.0).ceil() as usize;
        d.div_ceil(16) * 16
    }

    /// Space sized by [`Self::recommended_dim`].
    pub fn for_coherent(alpha: Complex64) -> Self {
        Self {
            dim: Self::recommended_dim(alpha),
        }
    }
}

/// Physical units carried by an operator's matrix elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Units {
    Dimensionless,
    /// Joules.
    Energy,
    /// rad/s.
    AngularFrequency,
}

/// A square operator on a truncated Fock space, tagged with its units.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    matrix: DMatrix<Complex64>,
    units: Units,
}

impl Operator {
    pub fn new(matrix: DMatrix<Complex64>, units: Units) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimMismatch {
                left: matrix.nrows(),
                right: matrix.ncols(),
            });
        }
        if matrix.nrows() < 2 {
            return Err(Error::DimensionTooSmall(matrix.nrows()));
        }
        if matrix
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite("operator matrix"));
        }
        Ok(Self { matrix, units })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn units(&self) -> Units {
        self.units
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
            units: self.units,
        }
    }

    /// Scalar multiple; the units tag is preserved.
    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            matrix: &self.matrix * s,
            units: self.units,
        }
    }

    /// Sum of two operators with identical dimensions and units.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        if self.units != other.units {
            return Err(Error::UnitsMismatch {
                left: self.units,
                right: other.units,
            });
        }
        Ok(Self {
            matrix: &self.matrix + &other.matrix,
            units: self.units,
        })
    }

    /// Operator product. At least one factor must be dimensionless (the
    /// product of two dimensionful operators has no tag in this scheme).
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        let units = match (self.units, other.units) {
            (Units::Dimensionless, u) | (u, Units::Dimensionless) => u,
            (l, r) => return Err(Error::UnitsMismatch { left: l, right: r }),
        };
        Ok(Self {
            matrix: &self.matrix * &other.matrix,
            units,
        })
    }

    /// Largest |i - j| with a nonzero element (0 for diagonal matrices).
    pub fn bandwidth(&self) -> usize {
        bandwidth_of(&self.matrix)
    }

    /// Max elementwise |M - M^dag|.
    pub fn hermiticity_deviation(&self) -> f64 {
        hermiticity_deviation(&self.matrix)
    }
}

pub(crate) fn bandwidth_of(m: &DMatrix<Complex64>) -> usize {
    let n = m.nrows();
    let mut b = 0usize;
    for i in 0..n {
        for j in 0..n {
            if m[(i, j)] != Complex64::new(0.0, 0.0) {
                b = b.max(i.abs_diff(j));
            }
        }
    }
    b
}

pub(crate) fn hermiticity_deviation(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Annihilation operator: <m|a|n> = sqrt(n) delta_{m,n-1}.
pub fn annihilation_op(space: FockSpace) -> Operator {
    let n = space.dim();
    let mut m = DMatrix::zeros(n, n);
    for k in 1..n {
        m[(k - 1, k)] = Complex64::new((k as f64).sqrt(), 0.0);
    }
    Operator {
        matrix: m,
        units: Units::Dimensionless,
    }
}

/// Creation operator a^dag.
pub fn creation_op(space: FockSpace) -> Operator {
    annihilation_op(space).adjoint()
}

/// Number operator a^dag a (diagonal 0..dim-1).
pub fn number_op(space: FockSpace) -> Operator {
    let n = space.dim();
    let m = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(i as f64, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    Operator {
        matrix: m,
        units: Units::Dimensionless,
    }
}

/// A pure state vector in the truncated basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    amplitudes: DVector<Complex64>,
}

impl Ket {
    /// Validated constructor: finite amplitudes, norm within [`NORM_TOL`] of 1.
    pub fn from_amplitudes(amplitudes: DVector<Complex64>) -> Result<Self> {
        Self::from_amplitudes_with_tol(amplitudes, NORM_TOL)
    }

    /// Same as [`Self::from_amplitudes`] with a caller-chosen norm tolerance.
    pub fn from_amplitudes_with_tol(amplitudes: DVector<Complex64>, tol: f64) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(Error::DimensionTooSmall(amplitudes.len()));
        }
        if amplitudes
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite("ket amplitudes"));
        }
        let ket = Self { amplitudes };
        let norm = ket.norm();
        if (norm - 1.0).abs() > tol {
            return Err(Error::NotNormalized { norm, tol });
        }
        Ok(ket)
    }

    /// Fock basis state |n>.
    pub fn basis_state(space: FockSpace, n: usize) -> Result<Self> {
        if n >= space.dim() {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: format!("basis index {n} outside space of dimension {}", space.dim()),
            });
        }
        let mut v = DVector::zeros(space.dim());
        v[n] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes: v })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        norm_sqr_compensated(&self.amplitudes).sqrt()
    }

    /// Unit-norm copy (for use after truncation losses).
    pub fn renormalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::NonFinite("ket norm"));
        }
        Ok(Self {
            amplitudes: &self.amplitudes / Complex64::new(n, 0.0),
        })
    }
}

/// Compensated (Neumaier) sum of |z_i|^2; the plain sum loses digits for
/// long vectors and the truncation deficit is defined as a small difference.
fn norm_sqr_compensated(v: &DVector<Complex64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for z in v.iter() {
        let x = z.norm_sqr();
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// A coherent state truncated to a finite Fock space, with bookkeeping.
#[derive(Debug, Clone)]
pub struct Coherent {
    pub ket: Ket,
    /// Probability mass beyond the cutoff: 1 - sum_n |c_n|^2 (clamped at 0).
    pub deficit: f64,
    /// Whether the space meets [`FockSpace::recommended_dim`] for this alpha.
    pub adequate_truncation: bool,
}

/// Coherent state |alpha> via the stable amplitude recurrence
/// c_0 = exp(-|alpha|^2/2), c_{n+1} = c_n alpha / sqrt(n+1).
pub fn coherent_state(space: FockSpace, alpha: Complex64) -> Result<Coherent> {
    if !alpha.re.is_finite() || !alpha.im.is_finite() {
        return Err(Error::NonFinite("alpha"));
    }
    let nsq = alpha.norm_sqr();
    let c0 = (-nsq / 2.0).exp();
    if c0 == 0.0 || !c0.is_normal() {
        return Err(Error::CoherentUnderflow(nsq));
    }
    let dim = space.dim();
    let mut v = DVector::zeros(dim);
    v[0] = Complex64::new(c0, 0.0);
    for n in 0..dim - 1 {
        v[n + 1] = v[n] * alpha / ((n + 1) as f64).sqrt();
    }
    let captured = norm_sqr_compensated(&v);
    let deficit = (1.0 - captured).max(0.0);
    Ok(Coherent {
        ket: Ket { amplitudes: v },
        deficit,
        adequate_truncation: dim >= FockSpace::recommended_dim(alpha),
    })
}

/// Density matrix of the Fock basis state |n>.
pub fn basis_dm(space: FockSpace, n: usize) -> Result<DensityMatrix> {
    DensityMatrix::from_ket(&Ket::basis_state(space, n)?)
}

/// A validated density matrix: Hermitian, unit trace, positive within noise.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Fully validated constructor (Hermiticity, trace, positivity).
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimMismatch {
                left: matrix.nrows(),
                right: matrix.ncols(),
            });
        }
        if matrix.nrows() < 2 {
            return Err(Error::DimensionTooSmall(matrix.nrows()));
        }
        let dm = Self { matrix };
        dm.validate()?;
        Ok(dm)
    }

    /// Construction sites that guarantee the invariants structurally
    /// (projectors of validated kets, dephasing, spectral reassembly).
    pub(crate) fn from_trusted(matrix: DMatrix<Complex64>) -> Self {
        Self { matrix }
    }

    /// Projector |psi><psi|. Fails if the ket's norm (squared) strays from
    /// unit trace, e.g. for an under-truncated coherent state; renormalize
    /// first in that case.
    pub fn from_ket(ket: &Ket) -> Result<Self> {
        let n = ket.amplitudes.len();
        let m = DMatrix::from_fn(n, n, |i, j| ket.amplitudes[i] * ket.amplitudes[j].conj());
        let dm = Self { matrix: m };
        let tr = dm.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::TraceNotOne {
                trace: tr,
                tol: TRACE_TOL,
            });
        }
        Ok(dm)
    }

    /// Re-check every invariant (used on evolution snapshots).
    pub fn validate(&self) -> Result<()> {
        if self
            .matrix
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite("density matrix"));
        }
        let dev = hermiticity_deviation(&self.matrix);
        if dev > HERMITICITY_TOL {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::TraceNotOne {
                trace: tr,
                tol: TRACE_TOL,
            });
        }
        let eigs = self.matrix.symmetric_eigenvalues();
        let min = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -POSITIVITY_TOL {
            return Err(Error::NotPositive {
                min_eigenvalue: min,
                tol: POSITIVITY_TOL,
            });
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Real part of the trace (the imaginary part vanishes for Hermitian input).
    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).sum()
    }

    /// Tr(rho^2) = sum |rho_ij|^2 for Hermitian rho.
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Populations rho_nn.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).collect()
    }

    /// Copy with all off-diagonal elements set to zero. Exact: populations
    /// are carried over unchanged, so trace and positivity are preserved.
    pub fn dephased(&self) -> DensityMatrix {
        let n = self.dim();
        let m = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                self.matrix[(i, i)]
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Self { matrix: m }
    }

    /// True when every off-diagonal element is exactly zero.
    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                if i != j && self.matrix[(i, j)] != Complex64::new(0.0, 0.0) {
                    return false;
                }
            }
        }
        true
    }
}

/// States on which operator expectation values are defined.
pub trait QuantumState {
    fn state_dim(&self) -> usize;
    fn expectation_unchecked(&self, op: &Operator) -> Complex64;
}

impl QuantumState for Ket {
    fn state_dim(&self) -> usize {
        self.dim()
    }

    fn expectation_unchecked(&self, op: &Operator) -> Complex64 {
        let w = op.matrix() * &self.amplitudes;
        self.amplitudes.dotc(&w)
    }
}

impl QuantumState for DensityMatrix {
    fn state_dim(&self) -> usize {
        self.dim()
    }

    fn expectation_unchecked(&self, op: &Operator) -> Complex64 {
        // Tr(rho O) = sum_ij rho_ij O_ji
        let n = self.dim();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += self.matrix[(i, j)] * op.matrix()[(j, i)];
            }
        }
        acc
    }
}

/// <O> on a ket or density matrix. The full complex value is returned; for
/// Hermitian operators the imaginary part is numerical noise and callers
/// decide how to report it.
pub fn expectation<S: QuantumState>(op: &Operator, state: &S) -> Result<Complex64> {
    if op.dim() != state.state_dim() {
        return Err(Error::DimMismatch {
            left: op.dim(),
            right: state.state_dim(),
        });
    }
    Ok(state.expectation_unchecked(op))
}
