use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid dimension n = {0}: need n >= 2")]
    InvalidDimension(usize),
    #[error("invalid theta: {0}")]
    InvalidTheta(String),
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("element is not split: {0}")]
    NotSplit(String),
    #[error("not in the closed Weyl chamber: {0}")]
    Chamber(String),
    #[error("labeling failed: {0}")]
    Label(String),
    #[error("numerically singular matrix: {0}")]
    Singular(String),
    #[error("cannot project: {0}")]
    Projection(String),
    #[error("resolution {0} too small")]
    Resolution(usize),
    #[error("control outside range: {0}")]
    Range(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("flag type inference failed: {0}")]
    Structure(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage { stage, source: Box::new(self) }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.in_stage(stage))
    }
}
