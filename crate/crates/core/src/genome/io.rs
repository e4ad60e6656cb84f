//! Line-oriented genome text format.
//!
//! ```text
//! layerneat-genome 1
//! fitness 0.8125
//! node 0 input 0
//! node 3 output -0.25
//! conn 0 0 3 1.5 1
//! ```
//!
//! Reals are written in shortest round-trip form, so parsing a written
//! genome reproduces it bit for bit. Lines starting with `#` are comments.

use std::fmt::Write as _;
use std::str::FromStr;

use super::{ConnectionGene, Genome, GenomeError, InnovationId, NodeGene, NodeId, NodeKind};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "layerneat-genome";

impl Genome {
    pub fn to_text(&self) -> String {
        self.to_text_with_comments(&[])
    }

    pub fn to_text_with_comments(&self, comments: &[String]) -> String {
        let mut out = format!("{MAGIC} {FORMAT_VERSION}\n");
        for c in comments {
            let _ = writeln!(out, "# {c}");
        }
        if let Some(f) = self.fitness {
            let _ = writeln!(out, "fitness {f}");
        }
        if let Some(s) = self.species {
            let _ = writeln!(out, "species {s}");
        }
        for n in self.nodes() {
            let _ = writeln!(out, "node {} {} {}", n.id.0, n.kind.as_str(), n.bias);
        }
        for c in self.connections() {
            let _ = writeln!(
                out,
                "conn {} {} {} {} {}",
                c.id.0,
                c.from.0,
                c.to.0,
                c.weight,
                u8::from(c.enabled)
            );
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Genome, GenomeError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (line, header) = lines.next().ok_or(GenomeError::Parse {
            line: 1,
            message: "empty genome file".into(),
        })?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some(MAGIC) {
            return Err(perr(line, format!("expected `{MAGIC} <version>` header")));
        }
        let version: u32 = field(parts.next(), line, "version")?;
        if version != FORMAT_VERSION {
            return Err(perr(line, format!("unsupported version {version}")));
        }

        let mut g = Genome::new();
        let mut conns = Vec::new();
        for (line, text) in lines {
            let mut f = text.split_whitespace();
            match f.next() {
                Some("fitness") => g.fitness = Some(field(f.next(), line, "fitness")?),
                Some("species") => g.species = Some(field(f.next(), line, "species")?),
                Some("node") => {
                    let id = NodeId(field(f.next(), line, "node id")?);
                    let kind = match f.next() {
                        Some("input") => NodeKind::Input,
                        Some("hidden") => NodeKind::Hidden,
                        Some("output") => NodeKind::Output,
                        other => return Err(perr(line, format!("bad node kind {other:?}"))),
                    };
                    let bias = field(f.next(), line, "bias")?;
                    g.add_node(NodeGene { id, kind, bias })
                        .map_err(|e| perr(line, e.to_string()))?;
                }
                Some("conn") => {
                    let id = InnovationId(field(f.next(), line, "innovation")?);
                    let from = NodeId(field(f.next(), line, "from")?);
                    let to = NodeId(field(f.next(), line, "to")?);
                    let weight = field(f.next(), line, "weight")?;
                    let enabled = match f.next() {
                        Some("1") => true,
                        Some("0") => false,
                        other => return Err(perr(line, format!("bad enabled flag {other:?}"))),
                    };
                    conns.push((
                        line,
                        ConnectionGene {
                            id,
                            from,
                            to,
                            weight,
                            enabled,
                        },
                    ));
                }
                Some(other) => return Err(perr(line, format!("unknown record `{other}`"))),
                None => unreachable!("blank lines are filtered"),
            }
            if f.next().is_some() {
                return Err(perr(line, "trailing fields".into()));
            }
        }
        // connections after nodes so records may appear in any order
        for (line, c) in conns {
            g.add_connection(c).map_err(|e| perr(line, e.to_string()))?;
        }
        Ok(g)
    }
}

impl FromStr for Genome {
    type Err = GenomeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Genome::from_text(s)
    }
}

fn perr(line: usize, message: String) -> GenomeError {
    GenomeError::Parse { line, message }
}

fn field<T: FromStr>(token: Option<&str>, line: usize, what: &str) -> Result<T, GenomeError> {
    let token = token.ok_or_else(|| perr(line, format!("missing {what}")))?;
    token
        .parse()
        .map_err(|_| perr(line, format!("cannot parse {what} from `{token}`")))
}
