use std::fmt;

/// The `<category>` of an `error:<category>:` line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Usage,
    Data,
    Config,
    Model,
    Io,
    Train,
    Serve,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Usage => "usage",
            Category::Data => "data",
            Category::Config => "config",
            Category::Model => "model",
            Category::Io => "io",
            Category::Train => "train",
            Category::Serve => "serve",
        }
    }

    /// Usage errors exit with 2, everything else with 1.
    pub fn exit_code(self) -> i32 {
        match self {
            Category::Usage => 2,
            _ => 1,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub category: Category,
    pub message: String,
}

impl CliError {
    pub fn new(category: Category, message: impl fmt::Display) -> Self {
        CliError {
            category,
            message: message.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    /// Always one line, so the prefix can be matched line by line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let flat = self.message.replace('\n', " ");
        write!(f, "error:{}: {}", self.category.as_str(), flat.trim())
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T = ()> = Result<T, CliError>;

/// Attaches a category to any displayable error.
pub trait Categorize<T> {
    fn or_category(self, category: Category) -> CliResult<T>;
}

impl<T, E: fmt::Display> Categorize<T> for Result<T, E> {
    fn or_category(self, category: Category) -> CliResult<T> {
        self.map_err(|e| CliError::new(category, e))
    }
}
