//! Split files: a header line `m=<M> n=<N> ratio=<r> seed=<s>` followed by one
//! `<u>\t<i>\t<T|E>` line per pair (`T` train, `E` test), in (user, item) order.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use neurec_core::data::{InteractionMatrix, SplitPair};

use super::{FormatError, FormatResult};

pub fn write_split<W: Write>(split: &SplitPair, mut out: W) -> FormatResult<()> {
    writeln!(out, "m={} n={} ratio={} seed={}", split.num_users(), split.num_items(), split.ratio, split.seed)?;
    let mut lines: Vec<(usize, usize, char)> =
        split.train.entries().map(|(u, i)| (u, i, 'T')).chain(split.test.iter().map(|&(u, i)| (u, i, 'E'))).collect();
    lines.sort_unstable();
    for (u, i, tag) in lines {
        writeln!(out, "{u}\t{i}\t{tag}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_split_path(split: &SplitPair, path: &Path) -> FormatResult<()> {
    let file = File::create(path).map_err(|e| FormatError::io(path, e))?;
    write_split(split, BufWriter::new(file))
}

fn parse_header(line: &str) -> FormatResult<(usize, usize, f64, u64)> {
    let bad = || FormatError::line(1, format!("malformed split header `{line}`"));
    let mut values = [""; 4];
    let keys = ["m", "n", "ratio", "seed"];
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != 4 {
        return Err(bad());
    }
    for (slot, (part, key)) in values.iter_mut().zip(parts.iter().zip(keys)) {
        *slot = part.strip_prefix(key).and_then(|r| r.strip_prefix('=')).ok_or_else(bad)?;
    }
    let m = values[0].parse().map_err(|_| bad())?;
    let n = values[1].parse().map_err(|_| bad())?;
    let ratio: f64 = values[2].parse().map_err(|_| bad())?;
    let seed = values[3].parse().map_err(|_| bad())?;
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(FormatError::line(1, format!("ratio {ratio} outside (0, 1)")));
    }
    Ok((m, n, ratio, seed))
}

pub fn read_split<R: BufRead>(reader: R) -> FormatResult<SplitPair> {
    let mut lines = reader.lines();
    let header = lines.next().ok_or_else(|| FormatError::Invalid("empty split file".into()))??;
    let (m, n, ratio, seed) = parse_header(header.trim())?;
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut seen = BTreeSet::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        let line_no = k + 2;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim().split('\t').collect();
        if fields.len() != 3 {
            return Err(FormatError::line(line_no, format!("expected 3 fields, found {}", fields.len())));
        }
        let index = |s: &str, bound: usize, what: &str| -> FormatResult<usize> {
            let v: usize = s.parse().map_err(|_| FormatError::line(line_no, format!("bad {what} index `{s}`")))?;
            if v >= bound {
                return Err(FormatError::line(line_no, format!("{what} index {v} out of range (bound {bound})")));
            }
            Ok(v)
        };
        let u = index(fields[0], m, "user")?;
        let i = index(fields[1], n, "item")?;
        if !seen.insert((u, i)) {
            return Err(FormatError::line(line_no, format!("duplicate pair ({u}, {i})")));
        }
        match fields[2] {
            "T" => train.push((u, i)),
            "E" => test.push((u, i)),
            other => return Err(FormatError::line(line_no, format!("unknown tag `{other}`"))),
        }
    }
    test.sort_unstable();
    Ok(SplitPair { train: InteractionMatrix::from_pairs(m, n, train)?, test, seed, ratio })
}

pub fn read_split_path(path: &Path) -> FormatResult<SplitPair> {
    let file = File::open(path).map_err(|e| FormatError::io(path, e))?;
    read_split(BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use neurec_core::data::split_holdout;

    #[test]
    fn round_trip() {
        let x = InteractionMatrix::from_pairs(4, 5, vec![(0, 0), (0, 3), (1, 1), (2, 4), (3, 0), (3, 2), (3, 4)]).unwrap();
        let split = split_holdout(&x, 0.7, 42).unwrap();
        let mut buf = Vec::new();
        write_split(&split, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("m=4 n=5 ratio=0.7 seed=42\n"));
        assert_eq!(read_split(buf.as_slice()).unwrap(), split);
    }

    #[test]
    fn corrupt_files() {
        let cases = [
            ("m=2 n=2 ratio=0.8 seed=1\n2\t0\tT\n", 2),
            ("m=2 n=2 ratio=0.8 seed=1\n0\t0\tX\n", 2),
            ("m=2 n=2 ratio=0.8 seed=1\n0\t0\tT\n0\t0\tE\n", 3),
            ("m=2 n=2 ratio=1.5 seed=1\n", 1),
            ("m=2 n=2 seed=1\n", 1),
        ];
        for (text, line) in cases {
            match read_split(text.as_bytes()) {
                Err(FormatError::Line { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
        assert!(read_split("".as_bytes()).is_err());
    }
}
