//! Flat `key = value` text files used for modem configs and channel profiles.
//!
//! Blank lines and lines starting with `#` are ignored. Curves are written as
//! comma-separated `x:y` pairs.

use crate::error::{ModemError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

pub fn parse(text: &str) -> Result<Vec<Entry>> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ModemError::Parse {
            line: i + 1,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        entries.push(Entry {
            line: i + 1,
            key: key.trim().to_string(),
            value: value.trim().to_string(),
        });
    }
    Ok(entries)
}

impl Entry {
    fn error(&self, message: impl Into<String>) -> ModemError {
        ModemError::Parse {
            line: self.line,
            message: format!("`{}`: {}", self.key, message.into()),
        }
    }

    pub fn f64(&self) -> Result<f64> {
        match self.value.to_ascii_lowercase().as_str() {
            "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
            "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
            v => v.parse().map_err(|_| self.error("expected a number")),
        }
    }

    pub fn usize(&self) -> Result<usize> {
        self.value
            .parse()
            .map_err(|_| self.error("expected a non-negative integer"))
    }

    pub fn u64(&self) -> Result<u64> {
        self.value
            .parse()
            .map_err(|_| self.error("expected a non-negative integer"))
    }

    pub fn u32_radix(&self) -> Result<u32> {
        let v = self.value.as_str();
        let parsed = if let Some(b) = v.strip_prefix("0b") {
            u32::from_str_radix(b, 2)
        } else if let Some(h) = v.strip_prefix("0x") {
            u32::from_str_radix(h, 16)
        } else {
            v.parse()
        };
        parsed.map_err(|_| self.error("expected an integer (decimal, 0b or 0x)"))
    }

    pub fn indices(&self) -> Result<Vec<u8>> {
        self.value
            .split(',')
            .map(|s| match s.trim().parse::<u8>() {
                Ok(v) if v < 8 => Ok(v),
                _ => Err(self.error("expected constellation indices 0..7")),
            })
            .collect()
    }

    pub fn pairs(&self) -> Result<Vec<(f64, f64)>> {
        self.value
            .split(',')
            .map(|pair| {
                let (x, y) = pair
                    .trim()
                    .split_once(':')
                    .ok_or_else(|| self.error("expected `x:y` pairs"))?;
                let x = x.trim().parse().map_err(|_| self.error("bad x value"))?;
                let y = y.trim().parse().map_err(|_| self.error("bad y value"))?;
                Ok((x, y))
            })
            .collect()
    }
}

pub fn format_pairs(points: &[(f64, f64)]) -> String {
    points
        .iter()
        .map(|(x, y)| format!("{x}:{y}"))
        .collect::<Vec<_>>()
        .join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_pairs() {
        let text = "# device\n\ndistance_m = 2.5\nrx_response = 20000:0.5, 24000:1\nsnr_db = inf\n";
        let entries = parse(text).unwrap();
        assert_eq!(entries.len(), 3);
        assert_eq!(entries[0].f64().unwrap(), 2.5);
        assert_eq!(
            entries[1].pairs().unwrap(),
            vec![(20000.0, 0.5), (24000.0, 1.0)]
        );
        assert!(entries[2].f64().unwrap().is_infinite());
    }

    #[test]
    fn missing_equals_reports_line() {
        match parse("a = 1\nbogus\n") {
            Err(ModemError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
