//! On-disk JSON formats.
//!
//! Boxes are written as
//!
//! ```json
//! { "format": 1, "x_size": 2, "y_size": 2, "a_size": 3, "b_size": 3,
//!   "table": [[[["1/3", "0/1", ...], ...], ...], ...] }
//! ```
//!
//! with `table[x][y][a][b]` holding exact `"num/den"` strings.

use serde::{Deserialize, Serialize};

use crate::boxes::{BipartiteBox, BoxShape};
use crate::error::{Error, Result};
use crate::rational::Rational;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxFile {
    #[serde(default)]
    format: Option<u32>,
    x_size: usize,
    y_size: usize,
    a_size: usize,
    b_size: usize,
    table: Vec<Vec<Vec<Vec<Rational>>>>,
}

pub(crate) fn check_version(found: Option<u32>) -> Result<()> {
    match found {
        None | Some(FORMAT_VERSION) => Ok(()),
        Some(v) => Err(Error::Format(format!(
            "unsupported format version {v}, expected {FORMAT_VERSION}"
        ))),
    }
}

fn expect_len(path: &str, found: usize, expected: usize) -> Result<()> {
    if found != expected {
        return Err(Error::Format(format!(
            "{path} has {found} entries, expected {expected}"
        )));
    }
    Ok(())
}

pub fn box_to_json(b: &BipartiteBox) -> String {
    let s = b.shape();
    let table = (0..s.x)
        .map(|x| {
            (0..s.y)
                .map(|y| {
                    (0..s.a)
                        .map(|a| (0..s.b).map(|bb| b.prob(x, y, a, bb).clone()).collect())
                        .collect()
                })
                .collect()
        })
        .collect();
    let file = BoxFile {
        format: Some(FORMAT_VERSION),
        x_size: s.x,
        y_size: s.y,
        a_size: s.a,
        b_size: s.b,
        table,
    };
    serde_json::to_string_pretty(&file).expect("box serialization cannot fail")
}

/// Parses a box document. Shape errors name the offending `table[..]` path;
/// JSON syntax errors carry serde's line and column.
pub fn box_from_json(text: &str) -> Result<BipartiteBox> {
    let file: BoxFile = serde_json::from_str(text)?;
    check_version(file.format)?;
    let shape = BoxShape::new(file.x_size, file.y_size, file.a_size, file.b_size);
    expect_len("table", file.table.len(), shape.x)?;
    let mut entries = Vec::with_capacity(shape.len());
    for (x, by_y) in file.table.into_iter().enumerate() {
        expect_len(&format!("table[{x}]"), by_y.len(), shape.y)?;
        for (y, by_a) in by_y.into_iter().enumerate() {
            expect_len(&format!("table[{x}][{y}]"), by_a.len(), shape.a)?;
            for (a, by_b) in by_a.into_iter().enumerate() {
                expect_len(&format!("table[{x}][{y}][{a}]"), by_b.len(), shape.b)?;
                entries.extend(by_b);
            }
        }
    }
    BipartiteBox::from_table(shape, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use proptest::prelude::*;

    #[test]
    fn mod3_renders_thirds() {
        let text = box_to_json(&BipartiteBox::modp(3).unwrap());
        assert!(text.contains("\"1/3\""));
        assert!(text.contains("\"0/1\""));
        assert!(text.contains("\"format\": 1"));
        assert!(!text.contains('.'));
    }

    #[test]
    fn ragged_table_names_path() {
        let text = r#"{"x_size":1,"y_size":1,"a_size":2,"b_size":1,"table":[[[["1/1"]]]]}"#;
        let err = box_from_json(text).unwrap_err().to_string();
        assert!(err.contains("table[0][0]"), "{err}");
    }

    #[test]
    fn bad_entry_and_version() {
        let text = r#"{"x_size":1,"y_size":1,"a_size":1,"b_size":1,"table":[[[["1/0"]]]]}"#;
        assert!(box_from_json(text).is_err());
        let text = r#"{"format":2,"x_size":1,"y_size":1,"a_size":1,"b_size":1,"table":[[[["1/1"]]]]}"#;
        assert!(box_from_json(text).is_err());
        let text = r#"{"x_size":1,"y_size":1,"a_size":1,"b_size":1,"table":[[[["1/1"]]]],"extra":0}"#;
        assert!(box_from_json(text).is_err());
    }

    proptest! {
        #[test]
        fn roundtrip_is_entrywise_exact(
            shape in (1usize..3, 1usize..3, 1usize..4, 1usize..4),
            seed in proptest::collection::vec((-50i64..50, 1i64..60), 144),
        ) {
            let shape = BoxShape::new(shape.0, shape.1, shape.2, shape.3);
            let table: Vec<_> = seed[..shape.len()].iter().map(|&(n, d)| q(n, d)).collect();
            let b = BipartiteBox::from_table(shape, table).unwrap();
            let back = box_from_json(&box_to_json(&b)).unwrap();
            prop_assert_eq!(back, b);
        }
    }
}
