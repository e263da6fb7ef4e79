use crate::error::{Error, Result};

/// Parses `start:step:stop` (inclusive), a comma list, or a single value.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::invalid("empty grid"));
    }
    let num = |t: &str| -> Result<f64> {
        let v: f64 = t
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("not a number: '{t}' in grid '{s}'")))?;
        if !v.is_finite() {
            return Err(Error::invalid(format!("grid values must be finite: '{s}'")));
        }
        Ok(v)
    };
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::invalid(format!(
                "range grid must be start:step:stop, got '{s}'"
            )));
        }
        let (start, step, stop) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || stop < start {
            return Err(Error::invalid(format!(
                "range grid needs step > 0 and stop >= start, got '{s}'"
            )));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        if count > 1_000_000 {
            return Err(Error::invalid(format!("grid '{s}' has too many points")));
        }
        return Ok((0..count).map(|i| start + step * i as f64).collect());
    }
    s.split(',').map(num).collect()
}
