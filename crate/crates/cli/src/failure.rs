use std::fmt::Display;

pub const USAGE: u8 = 2;
pub const SYNTHESIS: u8 = 3;
pub const MISMATCH: u8 = 4;

/// An error together with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn new(code: u8, message: impl Display) -> Failure {
        Failure {
            code,
            error: anyhow::anyhow!("{message}"),
        }
    }
}

pub trait ResultExt<T> {
    fn with_code<C: Display>(self, code: u8, context: impl FnOnce() -> C) -> Result<T, Failure>;
    fn code(self, code: u8) -> Result<T, Failure>;
}

impl<T, E> ResultExt<T> for Result<T, E>
where
    E: std::error::Error + Send + Sync + 'static,
{
    fn with_code<C: Display>(self, code: u8, context: impl FnOnce() -> C) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code,
            error: anyhow::Error::new(e).context(context().to_string()),
        })
    }

    fn code(self, code: u8) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code,
            error: anyhow::Error::new(e),
        })
    }
}
