use dynpolar::KinematicsError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("computation failed: {0}")]
    Kinematics(#[from] KinematicsError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0} verification check(s) failed")]
    Verification(usize),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Config(_) => 2,
            CliError::Kinematics(_) | CliError::Io(_) => 3,
        }
    }
}
