use blab_core::ErrorClass;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] blab_core::Error),

    #[error("{0}")]
    VerifyFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::VerifyFailed(_) => 1,
            CliError::Core(e) => match e.class() {
                ErrorClass::Config => 2,
                ErrorClass::Data => 3,
                ErrorClass::Numeric => 4,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_class() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::Core(blab_core::Error::InvalidConfig("x".into())).exit_code(), 2);
        assert_eq!(CliError::Core(blab_core::Error::EmptyDataset).exit_code(), 3);
        assert_eq!(CliError::Core(blab_core::Error::NoCrossing).exit_code(), 4);
        assert_eq!(CliError::VerifyFailed("x".into()).exit_code(), 1);
    }
}
