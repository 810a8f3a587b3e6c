//! The indexed collection of supports and its line-based text format.
//!
//! ```text
//! # optional metadata lines, only before the header
//! n k
//! 0 4 7 9          <- support of distribution 0, sorted element indices
//! 1 2 3
//! ...              <- exactly k lines; an empty line is an empty support
//! ```

use std::fmt::Write as _;
use std::path::Path;

use crate::distributions::{HalfUniformDistribution, SupportSet};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    n: usize,
    supports: Vec<SupportSet>,
}

impl Dataset {
    pub fn new(n: usize, supports: Vec<SupportSet>) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("domain size must be positive"));
        }
        if let Some(j) = supports.iter().position(|s| s.domain() != n) {
            return Err(Error::domain(format!(
                "support {j} has domain {} but dataset has {n}",
                supports[j].domain()
            )));
        }
        Ok(Dataset { n, supports })
    }

    pub fn domain(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.supports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.supports.is_empty()
    }

    pub fn support(&self, j: usize) -> &SupportSet {
        &self.supports[j]
    }

    pub fn supports(&self) -> &[SupportSet] {
        &self.supports
    }

    pub fn distribution(&self, j: usize) -> HalfUniformDistribution {
        HalfUniformDistribution::new(self.supports[j].clone())
    }

    pub(crate) fn replace(&mut self, j: usize, support: SupportSet) {
        debug_assert_eq!(support.domain(), self.n);
        self.supports[j] = support;
    }

    /// Serializes to the text format, with `metadata` emitted as `#` lines.
    pub fn to_text(&self, metadata: &[String]) -> String {
        let mut out = String::new();
        for line in metadata {
            for part in line.lines() {
                let _ = writeln!(out, "# {part}");
            }
        }
        let _ = writeln!(out, "{} {}", self.n, self.supports.len());
        for s in &self.supports {
            let mut first = true;
            for e in s.iter() {
                if !first {
                    out.push(' ');
                }
                first = false;
                let _ = write!(out, "{e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .skip_while(|(_, l)| l.starts_with('#'));
        let (hno, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "missing `n k` header"))?;
        let mut fields = header.split_ascii_whitespace();
        let mut number = |what: &str| -> Result<usize> {
            fields
                .next()
                .ok_or_else(|| Error::parse(hno + 1, format!("header is missing {what}")))?
                .parse()
                .map_err(|e| Error::parse(hno + 1, format!("bad {what}: {e}")))
        };
        let n = number("n")?;
        let k = number("k")?;
        if n == 0 {
            return Err(Error::parse(hno + 1, "n must be positive"));
        }
        let mut supports = Vec::with_capacity(k);
        for (lno, line) in lines.by_ref().take(k) {
            let mut prev: Option<u32> = None;
            let mut s = SupportSet::empty(n);
            for tok in line.split_ascii_whitespace() {
                let e: u32 = tok
                    .parse()
                    .map_err(|err| Error::parse(lno + 1, format!("bad element {tok:?}: {err}")))?;
                if e as usize >= n {
                    return Err(Error::parse(lno + 1, format!("element {e} >= n = {n}")));
                }
                if prev.is_some_and(|p| p >= e) {
                    return Err(Error::parse(
                        lno + 1,
                        "elements must be strictly increasing",
                    ));
                }
                prev = Some(e);
                s.insert(e);
            }
            supports.push(s);
        }
        if supports.len() != k {
            return Err(Error::parse(
                hno + 1,
                format!("header announces {k} supports, found {}", supports.len()),
            ));
        }
        if let Some((lno, _)) = lines.find(|(_, l)| !l.trim().is_empty()) {
            return Err(Error::parse(
                lno + 1,
                "trailing content after the last support",
            ));
        }
        Dataset::new(n, supports)
    }

    pub fn write_file(&self, path: &Path, metadata: &[String]) -> Result<()> {
        std::fs::write(path, self.to_text(metadata)).map_err(|e| Error::io(path, e))
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy() -> Dataset {
        let s = |e: &[u32]| SupportSet::from_elements(10, e.iter().copied()).unwrap();
        Dataset::new(10, vec![s(&[0, 4, 9]), s(&[]), s(&[1, 2, 3, 5])]).unwrap()
    }

    #[test]
    fn text_layout() {
        let text = toy().to_text(&["seed 7".into()]);
        assert_eq!(text, "# seed 7\n10 3\n0 4 9\n\n1 2 3 5\n");
        assert_eq!(Dataset::from_text(&text).unwrap(), toy());
    }

    #[test]
    fn rejects_malformed_input() {
        for bad in [
            "",
            "10\n",
            "10 2\n1 2\n",
            "10 1\n3 2\n",
            "10 1\n10\n",
            "10 1\nx\n",
            "10 1\n1\n2\n",
            "0 0\n",
        ] {
            assert!(Dataset::from_text(bad).is_err(), "{bad:?} should fail");
        }
    }

    proptest! {
        #[test]
        fn text_round_trip_is_bit_exact(
            n in 1usize..200,
            raw in proptest::collection::vec(proptest::collection::vec(any::<u32>(), 0..30), 0..20),
        ) {
            let supports = raw
                .into_iter()
                .map(|v| SupportSet::from_elements(n, v.into_iter().map(|e| e % n as u32)).unwrap())
                .collect();
            let d = Dataset::new(n, supports).unwrap();
            let text = d.to_text(&[]);
            let back = Dataset::from_text(&text).unwrap();
            prop_assert_eq!(&back, &d);
            prop_assert_eq!(back.to_text(&[]), text);
        }
    }
}
