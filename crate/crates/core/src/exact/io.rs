//! Text format for convolution tables.
//!
//! ```text
//! # noisewalk-table schema_version=1
//! # group=<sha256 of the group descriptor>
//! # n=<steps>
//! # kind=single|pair
//! <word>[\t<word>]\t<probability>
//! ```
//!
//! Rows are in key order; probabilities carry 17 significant digits so a
//! round trip is bit-exact.

use std::io::{BufRead, Write};

use super::{ConvolutionTable, TableKey};
use crate::error::{Error, Result};
use crate::group::MarkedGroup;
use crate::scalar::Scalar;

pub const TABLE_SCHEMA_VERSION: u32 = 1;

pub fn write_table<K: TableKey, T: Scalar, W: Write>(
    mut w: W,
    group: &MarkedGroup,
    table: &ConvolutionTable<K, T>,
) -> Result<()> {
    writeln!(w, "# noisewalk-table schema_version={TABLE_SCHEMA_VERSION}")?;
    writeln!(w, "# group={}", group.descriptor_hash())?;
    writeln!(w, "# n={}", table.steps())?;
    writeln!(w, "# kind={}", K::KIND)?;
    for (k, p) in table.atoms() {
        for word in k.words() {
            write!(w, "{}\t", group.format_word(word))?;
        }
        writeln!(w, "{:.16e}", p.as_f64())?;
    }
    w.flush()?;
    Ok(())
}

fn header_value<'a>(line: Option<&'a str>, key: &str, lineno: usize) -> Result<&'a str> {
    line.and_then(|l| l.strip_prefix("# "))
        .and_then(|l| l.strip_prefix(key))
        .and_then(|l| l.strip_prefix('='))
        .map(str::trim)
        .ok_or_else(|| Error::Parse {
            line: lineno,
            message: format!("expected header `# {key}=...`"),
        })
}

/// Reads a table written by [`write_table`]. Fails with
/// [`Error::KindMismatch`] when the file holds the other key kind, and with
/// [`Error::Inconsistent`] when it was written for a different group.
pub fn read_table<K: TableKey, T: Scalar, R: BufRead>(r: R, group: &MarkedGroup) -> Result<ConvolutionTable<K, T>> {
    let lines: Vec<String> = r.lines().collect::<std::io::Result<_>>()?;
    let mut it = lines.iter().map(String::as_str);
    match it.next() {
        Some(l) if l.starts_with("# noisewalk-table schema_version=") => {
            let v = &l["# noisewalk-table schema_version=".len()..];
            if v.trim() != TABLE_SCHEMA_VERSION.to_string() {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("unsupported schema_version {v}"),
                });
            }
        }
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: "missing `# noisewalk-table` header".into(),
            })
        }
    }
    let hash = header_value(it.next(), "group", 2)?;
    if hash != group.descriptor_hash() {
        return Err(Error::Inconsistent(format!(
            "table was written for group {hash}, not {}",
            group.descriptor_hash()
        )));
    }
    let n: usize = header_value(it.next(), "n", 3)?.parse().map_err(|e| Error::Parse {
        line: 3,
        message: format!("bad step count: {e}"),
    })?;
    let kind = header_value(it.next(), "kind", 4)?;
    if kind != K::KIND {
        return Err(Error::KindMismatch {
            expected: K::KIND,
            found: kind.to_string(),
        });
    }
    let mut atoms = Vec::new();
    for (offset, line) in it.enumerate() {
        let lineno = offset + 5;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != K::WORDS + 1 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected {} tab-separated fields", K::WORDS + 1),
            });
        }
        let words = fields[..K::WORDS]
            .iter()
            .map(|f| group.parse_word(f))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::Parse {
                line: lineno,
                message: e.to_string(),
            })?;
        let p: T = fields[K::WORDS].trim().parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("bad probability {:?}", fields[K::WORDS]),
        })?;
        atoms.push((K::from_words(words), p));
    }
    ConvolutionTable::from_atoms(n, atoms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{convolve_n, convolve_pair_n};
    use crate::group::{ElementPair, GroupElement};
    use crate::measures::{noisy_coupling, FiniteMeasure};

    #[test]
    fn round_trip_is_bit_exact() {
        let g = MarkedGroup::free(2).unwrap();
        let mu = FiniteMeasure::<f64>::uniform_generators(&g);
        let t = convolve_pair_n(&g, &noisy_coupling(&mu, 0.3).unwrap(), 2).unwrap();
        let mut buf = Vec::new();
        write_table(&mut buf, &g, &t).unwrap();
        let back: ConvolutionTable<ElementPair, f64> = read_table(buf.as_slice(), &g).unwrap();
        assert_eq!(back, t);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# noisewalk-table schema_version=1\n# group="));
        assert!(text.contains("# kind=pair\n1\t1\t"));
    }

    #[test]
    fn rejects_wrong_kind_and_group() {
        let g = MarkedGroup::free(2).unwrap();
        let t = convolve_n(&g, &FiniteMeasure::<f64>::uniform_generators(&g), 2).unwrap();
        let mut buf = Vec::new();
        write_table(&mut buf, &g, &t).unwrap();
        let single: ConvolutionTable<GroupElement, f64> = read_table(buf.as_slice(), &g).unwrap();
        assert_eq!(single, t);
        assert!(matches!(
            read_table::<ElementPair, f64, _>(buf.as_slice(), &g),
            Err(Error::KindMismatch { expected: "pair", .. })
        ));
        let g3 = MarkedGroup::free(3).unwrap();
        assert!(matches!(
            read_table::<GroupElement, f64, _>(buf.as_slice(), &g3),
            Err(Error::Inconsistent(_))
        ));
        assert!(matches!(
            read_table::<GroupElement, f64, _>(&b"junk\n"[..], &g),
            Err(Error::Parse { line: 1, .. })
        ));
    }
}
