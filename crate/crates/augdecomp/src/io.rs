//! Plain-text problem bundles, key=value config files and CSV output.
//!
//! Bundle layout (0-based indices, `#` starts a comment):
//!
//! ```text
//! augdecomp-bundle 1
//! dims <m> <N> <n>
//! sizes <N_1> ... <N_n>
//! r <r>
//! entries <nnz>
//! <row> <col> <value>        (nnz lines)
//! rhs
//! <b_j>                      (m lines)
//! pi                         (optional section)
//! <π_j>                      (m lines)
//! psi                        (optional section; all zero when absent)
//! zero | quad <μ> <c...> | box <c...> <lo...> <hi...>   (n lines)
//! end
//! ```
//!
//! Floats are written in Rust's shortest round-trip form, so a save/load
//! cycle is exact and equal inputs give byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::Path;

use augdecomp_core::solvers::IterationRecord;
use augdecomp_core::{BlockMatrix, BlockPartition, BlockPsi, CompositeProblem};

const MAGIC: &str = "augdecomp-bundle";
const VERSION: &str = "1";

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Core(#[from] augdecomp_core::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type FormatResult<T> = std::result::Result<T, FormatError>;

/// A problem as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub matrix: BlockMatrix,
    pub r: f64,
    pub pi: Option<Vec<f64>>,
    pub psi: Option<Vec<BlockPsi>>,
}

impl Bundle {
    /// `Ψ ≡ 0`, `r = 1`, no multiplier.
    pub fn feasibility(matrix: BlockMatrix) -> Self {
        Self {
            matrix,
            r: 1.0,
            pi: None,
            psi: None,
        }
    }

    pub fn problem(&self) -> FormatResult<CompositeProblem> {
        let n = self.matrix.num_blocks();
        let psi = self.psi.clone().unwrap_or_else(|| vec![BlockPsi::Zero; n]);
        let mut p = CompositeProblem::new(self.matrix.clone(), self.r, psi)?;
        if let Some(pi) = &self.pi {
            p = p.with_multiplier(pi.clone())?;
        }
        Ok(p)
    }

    pub fn to_text(&self) -> String {
        let a = &self.matrix;
        let part = a.partition();
        let mut s = String::new();
        let _ = writeln!(s, "{MAGIC} {VERSION}");
        let _ = writeln!(s, "dims {} {} {}", a.rows(), a.cols(), a.num_blocks());
        let sizes: Vec<String> = part.sizes().iter().map(|k| k.to_string()).collect();
        let _ = writeln!(s, "sizes {}", sizes.join(" "));
        let _ = writeln!(s, "r {}", self.r);
        let _ = writeln!(s, "entries {}", a.nnz());
        for (r, c, v) in a.triplets() {
            let _ = writeln!(s, "{r} {c} {v}");
        }
        s.push_str("rhs\n");
        for v in a.rhs() {
            let _ = writeln!(s, "{v}");
        }
        if let Some(pi) = &self.pi {
            s.push_str("pi\n");
            for v in pi {
                let _ = writeln!(s, "{v}");
            }
        }
        if let Some(psi) = &self.psi {
            s.push_str("psi\n");
            for ps in psi {
                s.push_str(&psi_line(ps));
                s.push('\n');
            }
        }
        s.push_str("end\n");
        s
    }

    pub fn write_to(&self, mut w: impl Write) -> FormatResult<()> {
        w.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> FormatResult<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> FormatResult<Self> {
        let f = fs::File::open(path)?;
        Self::read_from(io::BufReader::new(f))
    }

    pub fn read_from(r: impl BufRead) -> FormatResult<Self> {
        Parser::new(r)?.bundle()
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn psi_line(ps: &BlockPsi) -> String {
    match ps {
        BlockPsi::Zero => "zero".into(),
        BlockPsi::LinearQuadratic { c, mu } => format!("quad {mu} {}", join(c)),
        BlockPsi::LinearBox { c, lo, hi } => format!("box {} {} {}", join(c), join(lo), join(hi)),
    }
}

struct Parser {
    lines: Vec<(usize, Vec<String>)>,
    pos: usize,
}

impl Parser {
    fn new(r: impl BufRead) -> FormatResult<Self> {
        let mut lines = Vec::new();
        for (k, line) in r.lines().enumerate() {
            let line = line?;
            let content = line.split('#').next().unwrap_or("");
            let toks: Vec<String> = content.split_whitespace().map(str::to_owned).collect();
            if !toks.is_empty() {
                lines.push((k + 1, toks));
            }
        }
        Ok(Self { lines, pos: 0 })
    }

    fn err<T>(&self, msg: impl Into<String>) -> FormatResult<T> {
        let line = self
            .lines
            .get(self.pos.saturating_sub(1))
            .map_or(0, |l| l.0);
        Err(FormatError::Parse {
            line,
            msg: msg.into(),
        })
    }

    fn next(&mut self) -> FormatResult<Vec<String>> {
        match self.lines.get(self.pos) {
            Some((_, t)) => {
                self.pos += 1;
                Ok(t.clone())
            }
            None => {
                self.pos += 1;
                self.err("unexpected end of file")
            }
        }
    }

    fn peek_keyword(&self) -> Option<&str> {
        self.lines.get(self.pos).map(|(_, t)| t[0].as_str())
    }

    fn keyed(&mut self, key: &str) -> FormatResult<Vec<String>> {
        let t = self.next()?;
        if t[0] != key {
            return self.err(format!("expected `{key}`, found `{}`", t[0]));
        }
        Ok(t[1..].to_vec())
    }

    fn num<T: std::str::FromStr>(&self, s: &str) -> FormatResult<T> {
        s.parse()
            .or_else(|_| self.err(format!("cannot parse `{s}` as a number")))
    }

    fn nums<T: std::str::FromStr>(&self, toks: &[String]) -> FormatResult<Vec<T>> {
        toks.iter().map(|t| self.num(t)).collect()
    }

    fn column(&mut self, m: usize) -> FormatResult<Vec<f64>> {
        (0..m)
            .map(|_| {
                let t = self.next()?;
                if t.len() != 1 {
                    return self.err("expected one value per line");
                }
                self.num(&t[0])
            })
            .collect()
    }

    fn bundle(mut self) -> FormatResult<Bundle> {
        let head = self.next()?;
        if head.len() != 2 || head[0] != MAGIC || head[1] != VERSION {
            return self.err(format!("missing `{MAGIC} {VERSION}` header"));
        }
        let dims: Vec<usize> = {
            let t = self.keyed("dims")?;
            self.nums(&t)?
        };
        if dims.len() != 3 {
            return self.err("`dims` needs m, N and n");
        }
        let (m, big_n, n) = (dims[0], dims[1], dims[2]);
        let sizes: Vec<usize> = {
            let t = self.keyed("sizes")?;
            self.nums(&t)?
        };
        if sizes.len() != n || sizes.iter().sum::<usize>() != big_n {
            return self.err("block sizes do not match `dims`");
        }
        let partition = BlockPartition::new(&sizes)?;
        let r: f64 = {
            let t = self.keyed("r")?;
            if t.len() != 1 {
                return self.err("`r` takes one value");
            }
            self.num(&t[0])?
        };
        let nnz: usize = {
            let t = self.keyed("entries")?;
            if t.len() != 1 {
                return self.err("`entries` takes one count");
            }
            self.num(&t[0])?
        };
        let mut triplets = Vec::with_capacity(nnz);
        for _ in 0..nnz {
            let t = self.next()?;
            if t.len() != 3 {
                return self.err("an entry is `row col value`");
            }
            triplets.push((self.num(&t[0])?, self.num(&t[1])?, self.num(&t[2])?));
        }
        self.keyed("rhs")?;
        let rhs = self.column(m)?;
        let mut pi = None;
        if self.peek_keyword() == Some("pi") {
            self.next()?;
            pi = Some(self.column(m)?);
        }
        let mut psi = None;
        if self.peek_keyword() == Some("psi") {
            self.next()?;
            let mut blocks = Vec::with_capacity(n);
            for i in 0..n {
                let t = self.next()?;
                blocks.push(self.psi_block(&t, partition.size(i))?);
            }
            psi = Some(blocks);
        }
        self.keyed("end")?;
        let matrix = BlockMatrix::from_triplets(m, partition, &triplets, rhs)?;
        Ok(Bundle { matrix, r, pi, psi })
    }

    fn psi_block(&self, t: &[String], k: usize) -> FormatResult<BlockPsi> {
        let vals: Vec<f64> = self.nums(&t[1..])?;
        let ps = match t[0].as_str() {
            "zero" if vals.is_empty() => BlockPsi::Zero,
            "quad" if vals.len() == k + 1 => BlockPsi::LinearQuadratic {
                mu: vals[0],
                c: vals[1..].to_vec(),
            },
            "box" if vals.len() == 3 * k => BlockPsi::LinearBox {
                c: vals[..k].to_vec(),
                lo: vals[k..2 * k].to_vec(),
                hi: vals[2 * k..].to_vec(),
            },
            other => return self.err(format!("malformed Ψ block `{other}` for a block of size {k}")),
        };
        ps.validate(k)?;
        Ok(ps)
    }
}

/// `key = value` lines; `#` comments and blank lines are ignored.
pub fn parse_config(text: &str) -> FormatResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (k, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(FormatError::Parse {
                line: k + 1,
                msg: format!("expected `key = value`, found `{content}`"),
            });
        };
        out.insert(key.trim().to_owned(), value.trim().to_owned());
    }
    Ok(out)
}

pub const TRACE_HEADER: [&str; 8] = ["k", "F", "f", "gap", "blocks", "epochs", "time_units", "wall_ms"];

pub fn write_trace_csv(w: impl Write, records: &[IterationRecord]) -> FormatResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRACE_HEADER)?;
    for r in records {
        out.write_record([
            r.k.to_string(),
            r.big_f.to_string(),
            r.f.to_string(),
            r.gap.to_string(),
            r.blocks.to_string(),
            r.epochs.to_string(),
            r.time_units.to_string(),
            r.wall_ms.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Bundle {
        let part = BlockPartition::new(&[2, 1]).unwrap();
        let a = BlockMatrix::from_dense(2, part, &[1.0, 0.1, 0.0, 0.0, 2.5, -1.0 / 3.0], vec![1.0, -2.0])
            .unwrap();
        Bundle {
            matrix: a,
            r: 0.5,
            pi: Some(vec![0.25, 1e-300]),
            psi: Some(vec![
                BlockPsi::LinearQuadratic { c: vec![0.5, -0.5], mu: 2.0 },
                BlockPsi::boxed(vec![1.0], vec![-1.0], vec![f64::INFINITY]),
            ]),
        }
    }

    #[test]
    fn bundle_round_trip_is_exact() {
        let b = sample();
        let text = b.to_text();
        let back = Bundle::read_from(text.as_bytes()).unwrap();
        assert_eq!(back, b);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn minimal_bundle_defaults() {
        let text = "augdecomp-bundle 1\n# comment\ndims 1 2 2\nsizes 1 1\nr 1\nentries 2\n0 0 1\n0 1 1\nrhs\n1\nend\n";
        let b = Bundle::read_from(text.as_bytes()).unwrap();
        assert!(b.psi.is_none() && b.pi.is_none());
        let p = b.problem().unwrap();
        assert!(p.is_psi_zero());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "augdecomp-bundle 1\ndims 1 2 2\nsizes 1 1\nr 1\nentries 1\n0 x 1\n";
        match Bundle::read_from(text.as_bytes()) {
            Err(FormatError::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("unexpected {other:?}"),
        }
        assert!(Bundle::read_from("nope".as_bytes()).is_err());
    }

    #[test]
    fn config_lines() {
        let c = parse_config("algorithm = pcdm\n# x\n\ntau=4  # trailing\n").unwrap();
        assert_eq!(c["algorithm"], "pcdm");
        assert_eq!(c["tau"], "4");
        assert!(parse_config("novalue\n").is_err());
    }

    #[test]
    fn trace_header() {
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "k,F,f,gap,blocks,epochs,time_units,wall_ms\n");
    }
}
