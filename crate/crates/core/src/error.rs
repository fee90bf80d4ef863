use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("sector mismatch: operator acts on dimension {expected}, state has dimension {found}")]
    SectorMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian: max |M - M^dag| = {deviation:.3e}")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not unitary: max |U^dag U - I| = {deviation:.3e}")]
    NotUnitary { deviation: f64 },

    #[error("rotation produced imaginary residue {residue:.3e} above tolerance; numeric fault")]
    ImaginaryResidue { residue: f64 },

    #[error("state is not normalized: |sum |C|^2 - 1| = {deviation:.3e}")]
    NotNormalized { deviation: f64 },

    #[error("duplicate sector 2j = {twice_j}")]
    DuplicateSector { twice_j: u32 },

    #[error("empty input: at least one sector component is required")]
    EmptyInput,

    #[error("twin-Fock probe requires an even particle number, got {n}")]
    OddParticleNumber { n: u64 },

    #[error("mixture weights are not normalizable: sum = {sum:.3e}")]
    BadWeights { sum: f64 },

    #[error("PD cannot distinguish particle-number sectors; state spans {sectors} sectors")]
    PdOnMultiSector { sectors: usize },

    #[error("operation requires a single-sector state, found {sectors} sectors")]
    SingleSectorRequired { sectors: usize },

    #[error("amplitudes are asymmetric (C(j,m) != C(j,-m)); use the variance form of the QFI")]
    AsymmetricState,

    #[error(
        "outcome {outcome} has probability {probability:.3e} below the floor but derivative \
         {derivative:.3e}; evaluation sits on a singular phase, use the endpoint limit"
    )]
    SingularTheta {
        outcome: String,
        probability: f64,
        derivative: f64,
    },

    #[error("endpoint limit unsupported for measurement {measurement}")]
    UnsupportedLimit { measurement: String },

    #[error(
        "endpoint limit cross-check failed: closed form {closed_form:.6e}, extrapolated \
         {extrapolated:.6e}"
    )]
    LimitCrossCheck { closed_form: f64, extrapolated: f64 },

    #[error("fisher bound violated: cfi = {cfi:.6e} exceeds qfi = {qfi:.6e} beyond tolerance")]
    QcrbViolated { cfi: f64, qfi: f64 },

    #[error("distribution is not normalized: sum p = {sum:.12}")]
    UnnormalizedDistribution { sum: f64 },

    #[error("likelihood vanished on the entire phase grid; outcomes inconsistent with the model")]
    InconsistentLikelihood,

    #[error("invalid parameter: {what}")]
    InvalidParameter { what: String },

    #[error("state JSON malformed: {0}")]
    StateJson(String),
}

impl Error {
    pub(crate) fn invalid(what: impl Into<String>) -> Self {
        Error::InvalidParameter { what: what.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
