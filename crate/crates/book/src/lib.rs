//! The guide in `book/src`, compiled as doc-tests so its snippets keep
//! building against the current library. One module per chapter makes a
//! failing snippet easy to place.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/paths.md")]
pub mod paths {}
#[doc = include_str!("../../../book/src/coefficients.md")]
pub mod coefficients {}
#[doc = include_str!("../../../book/src/fractional.md")]
pub mod fractional {}
#[doc = include_str!("../../../book/src/lamperti.md")]
pub mod lamperti {}
#[doc = include_str!("../../../book/src/riemann.md")]
pub mod riemann {}
#[doc = include_str!("../../../book/src/ladder.md")]
pub mod ladder {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
