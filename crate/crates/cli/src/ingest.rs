use std::path::Path;

use crate::config::Column;
use crate::error::{CliError, Result};

/// Reads one column of a delimited text file as a series of reals.
///
/// A named column implies a header row. Blank lines are skipped; any other
/// unparseable or non-finite entry is reported with its line number.
pub fn ingest(path: &Path, column: &Column, header: bool, delimiter: char) -> Result<Vec<f64>> {
    if !path.exists() {
        return Err(CliError::Data(format!(
            "{}: file not found",
            path.display()
        )));
    }
    if !delimiter.is_ascii() {
        return Err(CliError::Config(format!(
            "delimiter must be ASCII, got {delimiter:?}"
        )));
    }
    let has_header = header || matches!(column, Column::Name(_));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .delimiter(delimiter as u8)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let index = match column {
        Column::Index(i) => *i,
        Column::Name(name) => {
            let headers = reader
                .headers()
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            headers.iter().position(|h| h == name).ok_or_else(|| {
                CliError::Data(format!("{}: no column named {name:?}", path.display()))
            })?
        }
    };
    let mut y = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let field = record.get(index).ok_or_else(|| {
            CliError::Data(format!(
                "{}: row {line} has no column {index}",
                path.display()
            ))
        })?;
        let v: f64 = field.parse().map_err(|_| {
            CliError::Data(format!(
                "{}: row {line}: cannot parse {field:?} as a number",
                path.display()
            ))
        })?;
        if !v.is_finite() {
            return Err(CliError::Data(format!(
                "{}: row {line}: value {field:?} is not finite",
                path.display()
            )));
        }
        y.push(v);
    }
    if y.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no observations",
            path.display()
        )));
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn single_column() {
        let f = file("1\n2\n3\n");
        assert_eq!(
            ingest(f.path(), &Column::Index(0), false, ',').unwrap(),
            vec![1.0, 2.0, 3.0]
        );
    }

    #[test]
    fn named_column() {
        let f = file("t,depth\n0,5.5\n1,6.5\n");
        let y = ingest(f.path(), &Column::Name("depth".into()), false, ',').unwrap();
        assert_eq!(y, vec![5.5, 6.5]);
        assert!(ingest(f.path(), &Column::Name("nope".into()), false, ',').is_err());
    }

    #[test]
    fn indexed_column_with_header() {
        let f = file("a\tb\n1\t10\n2\t20\n");
        assert_eq!(
            ingest(f.path(), &Column::Index(1), true, '\t').unwrap(),
            vec![10.0, 20.0]
        );
    }

    #[test]
    fn bad_rows_are_named() {
        let f = file("1\nabc\n3\n");
        let err = ingest(f.path(), &Column::Index(0), false, ',').unwrap_err();
        assert!(matches!(err, CliError::Data(_)));
        assert!(err.to_string().contains("row 2"), "{err}");
        let f = file("1\nNaN\n");
        assert!(ingest(f.path(), &Column::Index(0), false, ',')
            .unwrap_err()
            .to_string()
            .contains("row 2"));
        let f = file("1\ninf\n");
        assert!(ingest(f.path(), &Column::Index(0), false, ',').is_err());
    }

    #[test]
    fn missing_or_empty() {
        assert!(ingest(
            Path::new("/no/such/file.csv"),
            &Column::Index(0),
            false,
            ','
        )
        .is_err());
        let f = file("");
        assert!(ingest(f.path(), &Column::Index(0), false, ',').is_err());
    }
}
