//! Id-map files: one `U\t<external id>` or `I\t<external id>` line per index, users
//! and items each listed in index order.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use neurec_core::data::IdMap;

use super::{FormatError, FormatResult};

pub fn write_ids(ids: &IdMap, path: &Path) -> FormatResult<()> {
    let file = File::create(path).map_err(|e| FormatError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for (tag, list) in [('U', ids.user_ids()), ('I', ids.item_ids())] {
        for id in list {
            if id.contains(['\t', '\n', '\r']) {
                return Err(FormatError::Invalid(format!("id `{id}` contains a tab or line break")));
            }
            writeln!(out, "{tag}\t{id}")?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_ids(path: &Path) -> FormatResult<IdMap> {
    let file = File::open(path).map_err(|e| FormatError::io(path, e))?;
    let mut users = Vec::new();
    let mut items = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        match line.split_once('\t') {
            Some(("U", id)) => users.push(id.to_string()),
            Some(("I", id)) => items.push(id.to_string()),
            _ => return Err(FormatError::line(n + 1, format!("malformed id line `{line}`"))),
        }
    }
    Ok(IdMap::from_ids(users, items)?)
}
