//! Error type shared by all modules of the crate.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("grammar syntax error at line {line}: {msg}")]
    GrammarSyntax { line: usize, msg: String },

    #[error("undeclared nonterminal `{name}` at line {line}")]
    UndeclaredSymbol { name: String, line: usize },

    #[error("empty body `()` is only allowed for the start symbol (line {line})")]
    EpsilonOutsideStart { line: usize },

    #[error("rule `{rule}` has a body that can derive the empty word; only the dedicated start rule may")]
    NullableBody { rule: String },

    #[error("unit-rule cycle through `{nonterminal}`; derivation counts would diverge")]
    UnitCycle { nonterminal: String },

    #[error("variable count mismatch: {left} vs {right}")]
    VariableCountMismatch { left: usize, right: usize },

    #[error("bounds must have {expected} components, got {got}")]
    BoundsMismatch { expected: usize, got: usize },

    #[error("letter `{letter}` is not in the grammar alphabet")]
    LetterOutsideAlphabet { letter: char },

    #[error("polynomial is not invertible (constant term is 0)")]
    NotInvertible,

    #[error("polynomial uses variable axis {axis}, outside its declared variable subset")]
    VariableOutsideSubset { axis: usize },

    #[error("polynomial syntax error: {msg}")]
    PolynomialSyntax { msg: String },

    #[error("series file syntax error at line {line}: {msg}")]
    SeriesSyntax { line: usize, msg: String },

    #[error("grammar is not linear: rule `{rule}` has {count} nonterminals in its body")]
    NotLinear { rule: String, count: usize },

    #[error("no invertible pivot available for unknown `{unknown}`; the truncated solver cannot proceed")]
    NoInvertiblePivot { unknown: String },

    #[error("word of length {len} exceeds the brute-force cap of {cap}")]
    WordTooLong { len: usize, cap: usize },

    #[error("derivation enumeration exceeded the step budget of {budget}")]
    BudgetExceeded { budget: u64 },

    #[error("derivation count overflowed the counter")]
    CountOverflow,

    #[error("language escapes the bounded form: word `{word}` has odd derivation count")]
    NotBounded { word: String },

    #[error("alphabet must have at least {min} letters, got {got}")]
    AlphabetTooSmall { min: usize, got: usize },

    #[error("k must be at least 2, got {got}")]
    KTooSmall { got: usize },

    #[error("alphabet size {alphabet} does not match k = {k}")]
    AlphabetMismatch { alphabet: usize, k: usize },

    #[error("invalid representation spec: {msg}")]
    InvalidSpec { msg: String },
}

impl Error {
    /// Module that raised the error, for CLI diagnostics.
    pub fn module(&self) -> &'static str {
        use Error::*;
        match self {
            GrammarSyntax { .. }
            | UndeclaredSymbol { .. }
            | EpsilonOutsideStart { .. }
            | NullableBody { .. }
            | UnitCycle { .. }
            | LetterOutsideAlphabet { .. }
            | NotLinear { .. }
            | WordTooLong { .. }
            | BudgetExceeded { .. }
            | CountOverflow
            | AlphabetTooSmall { .. } => "grammar_core",
            VariableCountMismatch { .. }
            | BoundsMismatch { .. }
            | NotInvertible
            | VariableOutsideSubset { .. }
            | PolynomialSyntax { .. }
            | SeriesSyntax { .. } => "series_ring",
            KTooSmall { .. } => "stratified",
            NoInvertiblePivot { .. } | AlphabetMismatch { .. } => "decomposition",
            NotBounded { .. } | InvalidSpec { .. } => "constructions",
        }
    }
}
