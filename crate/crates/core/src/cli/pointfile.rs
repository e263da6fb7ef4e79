//! Plain-text constellation files: one `re im` pair per line, `#` comments.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Constellation, Point2};

pub fn parse_points(text: &str) -> Result<Vec<Point2>> {
    let mut pts = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::invalid(format!(
                "line {}: expected 're im', got '{}'",
                lineno + 1,
                raw.trim()
            )));
        }
        let parse = |t: &str| {
            t.parse::<f64>()
                .map_err(|_| Error::invalid(format!("line {}: bad number '{t}'", lineno + 1)))
        };
        pts.push(Point2::new(parse(fields[0])?, parse(fields[1])?));
    }
    Ok(pts)
}

pub fn load_points(path: &Path, normalize: bool) -> Result<Constellation> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Constellation::with_normalization(parse_points(&text)?, normalize)
}

pub fn format_points(c: &Constellation) -> String {
    let mut out = format!("# aloe-ser constellation, M = {}\n# re im\n", c.len());
    for s in c.symbols() {
        out.push_str(&format!("{:e} {:e}\n", s.re, s.im));
    }
    out
}
