use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Closed interval of admissible rating values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatingScale {
    pub min: f64,
    pub max: f64,
}

impl Default for RatingScale {
    fn default() -> Self {
        Self { min: 1.0, max: 5.0 }
    }
}

impl RatingScale {
    pub fn contains(&self, r: f64) -> bool {
        r >= self.min && r <= self.max
    }

    pub fn clip(&self, r: f64) -> f64 {
        r.clamp(self.min, self.max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatingRecord {
    pub user: String,
    pub item: String,
    pub rating: f64,
    pub timestamp: Option<i64>,
}

/// Raw explicit-feedback records of one domain, at most one per (user, item).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RatingTriples {
    pub records: Vec<RatingRecord>,
}

impl RatingTriples {
    /// Builds from records, later duplicates of a (user, item) pair replacing
    /// earlier ones in place.
    pub fn from_records(records: impl IntoIterator<Item = RatingRecord>) -> Self {
        let mut out: Vec<RatingRecord> = Vec::new();
        let mut seen: HashMap<(String, String), usize> = HashMap::new();
        for r in records {
            match seen.get(&(r.user.clone(), r.item.clone())) {
                Some(&idx) => out[idx] = r,
                None => {
                    seen.insert((r.user.clone(), r.item.clone()), out.len());
                    out.push(r);
                }
            }
        }
        Self { records: out }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Ratings per user.
    pub fn user_counts(&self) -> HashMap<&str, usize> {
        let mut counts = HashMap::new();
        for r in &self.records {
            *counts.entry(r.user.as_str()).or_insert(0) += 1;
        }
        counts
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsvOptions {
    pub has_header: bool,
    pub scale: RatingScale,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            has_header: false,
            scale: RatingScale::default(),
        }
    }
}

/// Reads `user_id,item_id,rating[,timestamp]` lines.
pub fn ingest_csv(path: &Path, opts: CsvOptions) -> Result<RatingTriples> {
    let file = std::fs::File::open(path)?;
    ingest_reader(file, path, opts)
}

pub fn ingest_reader<R: std::io::Read>(reader: R, path: &Path, opts: CsvOptions) -> Result<RatingTriples> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(opts.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() == 1 && row[0].is_empty() {
            continue;
        }
        if !(3..=4).contains(&row.len()) {
            return Err(parse_err(
                line,
                format!("expected 3 or 4 fields, found {}", row.len()),
            ));
        }
        if row[0].is_empty() || row[1].is_empty() {
            return Err(parse_err(line, "empty user or item id".into()));
        }
        let rating: f64 = row[2]
            .parse()
            .map_err(|_| parse_err(line, format!("rating `{}` is not a number", &row[2])))?;
        if !rating.is_finite() {
            return Err(parse_err(line, format!("rating `{}` is not finite", &row[2])));
        }
        if !opts.scale.contains(rating) {
            return Err(Error::RatingOutOfScale {
                line,
                rating,
                min: opts.scale.min,
                max: opts.scale.max,
            });
        }
        let timestamp = match row.get(3) {
            Some(s) if !s.is_empty() => Some(
                s.parse::<i64>()
                    .map_err(|_| parse_err(line, format!("timestamp `{s}` is not an integer")))?,
            ),
            _ => None,
        };
        records.push(RatingRecord {
            user: row[0].to_string(),
            item: row[1].to_string(),
            rating,
            timestamp,
        });
    }
    Ok(RatingTriples::from_records(records))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, has_header: bool) -> Result<RatingTriples> {
        ingest_reader(
            text.as_bytes(),
            Path::new("mem.csv"),
            CsvOptions {
                has_header,
                ..Default::default()
            },
        )
    }

    #[test]
    fn single_line() {
        let t = parse("u1,i1,5.0\n", false).unwrap();
        assert_eq!(
            t.records,
            vec![RatingRecord {
                user: "u1".into(),
                item: "i1".into(),
                rating: 5.0,
                timestamp: None
            }]
        );
    }

    #[test]
    fn duplicates_keep_last() {
        let t = parse("u1,i1,3\nu2,i1,2\nu1,i1,4,1700000000\n", false).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.records[0].rating, 4.0);
        assert_eq!(t.records[0].timestamp, Some(1_700_000_000));
    }

    #[test]
    fn out_of_scale_reports_line() {
        match parse("u1,i1,9.0\n", false) {
            Err(Error::RatingOutOfScale { line, rating, .. }) => {
                assert_eq!(line, 1);
                assert_eq!(rating, 9.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        match parse("u1,i1,4\nu2,i2\n", false) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        match parse("user,item,rating\nu1,i1,abc\n", true) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse("u1,i1,nan\n", false).is_err());
        assert!(parse("u1,i1,3,notatime\n", false).is_err());
    }

    #[test]
    fn header_flag_skips_first_row() {
        let t = parse("user,item,rating\nu1,i1,2\n", true).unwrap();
        assert_eq!(t.len(), 1);
    }
}
