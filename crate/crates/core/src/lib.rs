//! GF(2)-grammars over bounded languages.

pub mod error;
pub mod decompose;
pub mod grammar;
pub mod parity;
pub mod stratified;
pub mod system;
pub mod typed;
pub mod exponents;
pub mod poly;
pub mod series;

pub use error::{Error, Result};
pub use decompose::{decompose_linear, dk_polynomial, homogeneous_sum, separation_bound, Summand, SummandDecomposition};
pub use grammar::{parse_grammar, Gf2Grammar, GrammarBuilder, Rule, Symbol};
pub use parity::{bounded_series, count_derivations_bruteforce, parity_member, BoundedTables};
pub use stratified::{all_pairs, enumerate_treelike, is_treelike, pathlike, SetKind, SplitTree, StratifiedSet};
pub use system::{extract_system, solve_truncated, LinearSystem, RhsTag, Solution};
pub use typed::{intersect_bounded_dfa, intersect_linear_3state, proves_bounded, TypedDfa, TypedGrammar};
pub use exponents::Exponents;
pub use poly::{quotient_check, Gf2Polynomial};
pub use series::TruncatedSeries;
