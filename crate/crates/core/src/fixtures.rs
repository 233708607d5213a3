//! The two four-stack worked instances used throughout the tests, with a
//! height limit of 6.
//!
//! The layouts are reconstructed so that every layer, stack priority and
//! blocking relation quoted for them holds; see the fixture tests below.

use crate::config::Configuration;
use crate::io::parse_instance;

pub const HEIGHT_LIMIT: usize = 6;

/// Instance (a): 12 blocks, bottom to top per stack.
pub const FIGURE_A: &str = "\
4 12
3 10 8 7
3 9 4 2
3 12 11 3
3 1 6 5
";

/// Instance (b): 20 blocks, bottom to top per stack.
pub const FIGURE_B: &str = "\
4 20
5 13 3 2 6 16
5 1 10 12 14 17
5 20 15 7 5 18
5 11 9 8 4 19
";

fn load(text: &str) -> Configuration {
    parse_instance(text)
        .expect("fixture parses")
        .with_height_limit(Some(HEIGHT_LIMIT))
        .expect("fixture respects its height limit")
}

pub fn figure_a() -> Configuration {
    load(FIGURE_A)
}

pub fn figure_b() -> Configuration {
    load(FIGURE_B)
}

/// The two rightmost stacks of instance (a): six blocks, small enough for
/// per-move-type exhaustive search.
pub fn figure_a_right_pair() -> Configuration {
    Configuration::from_stacks(&[vec![12, 11, 3], vec![1, 6, 5]])
}
