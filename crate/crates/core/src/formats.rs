//! File formats and the textual references used to name words, chains and
//! codes on the command line.
//!
//! A word reference is one of
//!
//! ```text
//! pd:<depth> | const:<bit> | twohole:<depth> | periodic:<bits>
//! sigma:<p1,p2,...>:<seed>        seeded random datum over a cyclic chain
//! flip:<ref> | shift:<k>:<ref>    derived words, shift(x, k)(h) = x(h - k)
//! cyc:<p>:<ref>                   image under the p-block rotation, phase 0
//! code:<path>:<ref>               image under a block code file
//! <path>                          skeleton or sigma datum file
//! ```
//!
//! and a chain reference is `cyclic:<p1,...>`, `f2:<depth>`, `s3`,
//! `dihedral:<m>,<n>` or a chain file path. Relative paths inside files are
//! resolved against the directory of the file that mentions them.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::chain::{Elem, FiniteGroup, ProfinitePoint, QuotientChain};
use crate::codes::{cyclic_block_shift, BlockCode, CodePair};
use crate::error::{Error, Result};
use crate::groupoid::Arrow;
use crate::sigma::{mu_sample, LabelAssignment, SigmaDatum, SubshiftHandle};
use crate::toeplitz::Skeleton;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChainFile {
    Cyclic {
        cyclic: Vec<u64>,
    },
    Levels {
        levels: Vec<LevelFile>,
        /// `proj[k]` maps level `k + 2` onto level `k + 1`.
        proj: Vec<Vec<Elem>>,
        /// `gens[i][n - 1]`: image of generator `i` at level `n`.
        gens: Vec<Vec<Elem>>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LevelFile {
    pub order: usize,
    /// Full Cayley table; used when `perm_gens` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mul: Option<Vec<Vec<Elem>>>,
    /// Generators of a permutation group, elements indexed breadth-first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perm_gens: Option<Vec<Vec<u16>>>,
}

impl ChainFile {
    pub fn from_chain(chain: &QuotientChain) -> Result<ChainFile> {
        if let Some(p) = chain.periods() {
            return Ok(ChainFile::Cyclic { cyclic: p.to_vec() });
        }
        let mut levels = Vec::with_capacity(chain.depth());
        let mut proj = Vec::new();
        for n in 1..=chain.depth() {
            let g = chain.group(n)?;
            levels.push(match g.perm_gens() {
                Some(gens) => LevelFile {
                    order: g.order(),
                    mul: None,
                    perm_gens: Some(gens.to_vec()),
                },
                None => LevelFile {
                    order: g.order(),
                    mul: Some(g.table_rows()),
                    perm_gens: None,
                },
            });
            if n > 1 {
                proj.push(chain.level(n)?.proj().to_vec());
            }
        }
        Ok(ChainFile::Levels {
            levels,
            proj,
            gens: chain.generator_images().to_vec(),
        })
    }

    pub fn into_chain(self) -> Result<QuotientChain> {
        match self {
            ChainFile::Cyclic { cyclic } => QuotientChain::cyclic(&cyclic),
            ChainFile::Levels { levels, proj, gens } => {
                let groups = levels
                    .into_iter()
                    .enumerate()
                    .map(|(k, l)| {
                        let g = match (l.mul, l.perm_gens) {
                            (Some(rows), None) => FiniteGroup::from_table(&rows)?,
                            (None, Some(pg)) => FiniteGroup::from_perm_gens(&pg)?,
                            _ => {
                                return Err(Error::InvalidChain(format!(
                                    "level {}: give exactly one of mul, perm_gens",
                                    k + 1
                                )))
                            }
                        };
                        if g.order() != l.order {
                            return Err(Error::InvalidChain(format!(
                                "level {}: order {} declared, {} found",
                                k + 1,
                                l.order,
                                g.order()
                            )));
                        }
                        Ok(g)
                    })
                    .collect::<Result<Vec<_>>>()?;
                QuotientChain::from_parts(groups, proj, gens)
            }
        }
    }
}

/// Parses JSON, reporting the line and column of a syntax error.
pub fn parse_json<T: DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("{what}: line {}, column {}: {e}", e.line(), e.column())))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_json(&text, &path.display().to_string())
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

pub fn from_csv<T: DeserializeOwned>(text: &str) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<std::result::Result<Vec<T>, _>>()?)
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| Error::Parse(format!("bad {what} {t:?}"))))
        .collect()
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Parse(format!("bad {what} {s:?}")))
}

/// Resolves references relative to a base directory.
#[derive(Clone, Debug)]
pub struct Resolver {
    base: PathBuf,
}

impl Default for Resolver {
    fn default() -> Self {
        Resolver {
            base: PathBuf::from("."),
        }
    }
}

#[derive(Deserialize)]
struct SigmaFile {
    chain: serde_json::Value,
    y: Vec<Elem>,
    #[serde(rename = "not_in_G", default = "yes")]
    not_in_g: bool,
    z: LabelAssignment,
}

fn yes() -> bool {
    true
}

#[derive(Serialize)]
struct SigmaFileOut<'a> {
    chain: serde_json::Value,
    y: &'a [Elem],
    #[serde(rename = "not_in_G")]
    not_in_g: bool,
    z: &'a LabelAssignment,
}

/// A code given inline or as a path to a code file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CodeRef {
    Inline(BlockCode),
    Path(String),
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct VerifiedAt {
    #[serde(rename = "L")]
    pub len: usize,
    pub span: i64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ArrowFile {
    pub source: String,
    pub target: String,
    pub fwd: CodeRef,
    pub bwd: CodeRef,
    pub verified_at: VerifiedAt,
}

impl ArrowFile {
    pub fn new(source: &str, target: &str, pair: &CodePair, len: usize, span: i64) -> ArrowFile {
        ArrowFile {
            source: source.to_string(),
            target: target.to_string(),
            fwd: CodeRef::Inline(pair.forward.clone()),
            bwd: CodeRef::Inline(pair.backward.clone()),
            verified_at: VerifiedAt { len, span },
        }
    }
}

impl Resolver {
    pub fn new(base: impl Into<PathBuf>) -> Self {
        Resolver { base: base.into() }
    }

    /// A resolver for references found inside `file`.
    pub fn beside(file: &Path) -> Self {
        Resolver {
            base: file.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf),
        }
    }

    pub fn path(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn chain(&self, r: &str) -> Result<QuotientChain> {
        if let Some(rest) = r.strip_prefix("cyclic:") {
            return QuotientChain::cyclic(&parse_list(rest, "period")?);
        }
        if let Some(rest) = r.strip_prefix("f2:") {
            return QuotientChain::f2_tower(parse_num(rest, "depth")?);
        }
        if r == "s3" {
            return Ok(QuotientChain::s3_over_sign());
        }
        if let Some(rest) = r.strip_prefix("dihedral:") {
            let mn: Vec<u16> = parse_list(rest, "polygon size")?;
            let [m, n] = mn[..] else {
                return Err(Error::Parse(format!("dihedral needs m,n: {r:?}")));
            };
            return QuotientChain::dihedral_pair(m, n);
        }
        let path = self.path(r);
        read_json::<ChainFile>(&path)?.into_chain()
    }

    fn chain_value(&self, v: serde_json::Value) -> Result<QuotientChain> {
        match v {
            serde_json::Value::String(s) => self.chain(&s),
            other => serde_json::from_value::<ChainFile>(other)?.into_chain(),
        }
    }

    pub fn sigma_file(&self, path: &Path) -> Result<SigmaDatum> {
        let f: SigmaFile = read_json(path)?;
        let chain = Arc::new(Resolver::beside(path).chain_value(f.chain)?);
        let y = ProfinitePoint::new(&chain, f.y, f.not_in_g)?;
        SigmaDatum::new(chain, y, f.z)
    }

    pub fn code(&self, r: &CodeRef) -> Result<BlockCode> {
        match r {
            CodeRef::Inline(c) => Ok(c.clone()),
            CodeRef::Path(p) => read_json(&self.path(p)),
        }
    }

    pub fn word(&self, r: &str) -> Result<SubshiftHandle> {
        let skeleton = |x: Result<Skeleton>| x.map(SubshiftHandle::from_skeleton);
        let (head, rest) = r.split_once(':').unwrap_or((r, ""));
        match head {
            "pd" => skeleton(Skeleton::period_doubling(parse_num(rest, "depth")?)),
            "const" => Ok(SubshiftHandle::from_skeleton(Skeleton::constant(parse_num(
                rest, "bit",
            )?))),
            "twohole" => skeleton(Skeleton::two_hole_tower(parse_num(rest, "depth")?)),
            "periodic" => {
                let bits = rest
                    .chars()
                    .map(|c| {
                        c.to_digit(2)
                            .map(|b| b as u8)
                            .ok_or_else(|| Error::Parse(format!("bad bit {c:?}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                skeleton(Skeleton::periodic(&bits))
            }
            "sigma" => {
                let (periods, seed) = rest
                    .rsplit_once(':')
                    .ok_or_else(|| Error::Parse(format!("sigma needs <periods>:<seed>: {r:?}")))?;
                let periods: Vec<u64> = parse_list(periods, "period")?;
                let chain = Arc::new(QuotientChain::cyclic(&periods)?);
                Ok(SubshiftHandle::from_sigma(mu_sample(
                    &chain,
                    periods.len(),
                    parse_num(seed, "seed")?,
                )?))
            }
            "flip" => skeleton(BlockCode::flip().image(self.word(rest)?.skeleton()?)),
            "shift" => {
                let (k, inner) = rest
                    .split_once(':')
                    .ok_or_else(|| Error::Parse(format!("shift needs <k>:<ref>: {r:?}")))?;
                Ok(SubshiftHandle::from_skeleton(
                    self.word(inner)?.skeleton()?.shift(parse_num(k, "shift")?),
                ))
            }
            "cyc" => {
                let (p, inner) = rest
                    .split_once(':')
                    .ok_or_else(|| Error::Parse(format!("cyc needs <p>:<ref>: {r:?}")))?;
                let perm = cyclic_block_shift(parse_num(p, "block length")?)?;
                skeleton(perm.image(self.word(inner)?.skeleton()?, 0))
            }
            "code" => {
                let (path, inner) = rest
                    .split_once(':')
                    .ok_or_else(|| Error::Parse(format!("code needs <path>:<ref>: {r:?}")))?;
                let code = self.code(&CodeRef::Path(path.to_string()))?;
                skeleton(code.image(self.word(inner)?.skeleton()?))
            }
            _ => self.word_file(&self.path(r)),
        }
    }

    fn word_file(&self, path: &Path) -> Result<SubshiftHandle> {
        let v: serde_json::Value = read_json(path)?;
        if v.get("stages").is_some() {
            Ok(SubshiftHandle::from_skeleton(serde_json::from_value(v)?))
        } else if v.get("z").is_some() {
            Ok(SubshiftHandle::from_sigma(self.sigma_file(path)?))
        } else {
            Err(Error::Parse(format!(
                "{}: neither a skeleton nor a sigma datum",
                path.display()
            )))
        }
    }

    /// Loads an arrow file and re-verifies it at its stamped budget.
    pub fn arrow(&self, path: &Path) -> Result<(ArrowFile, Arrow)> {
        let f: ArrowFile = read_json(path)?;
        let r = Resolver::beside(path);
        let pair = CodePair {
            forward: r.code(&f.fwd)?,
            backward: r.code(&f.bwd)?,
        };
        let a = Arrow::verify(
            r.word(&f.source)?,
            r.word(&f.target)?,
            pair,
            f.verified_at.len,
            f.verified_at.span,
        )?;
        Ok((f, a))
    }
}

/// A sigma datum file; the chain is written by reference when one is given.
pub fn sigma_json(d: &SigmaDatum, chain_ref: Option<&str>) -> Result<String> {
    let chain = match chain_ref {
        Some(r) => serde_json::Value::String(r.to_string()),
        None => serde_json::to_value(ChainFile::from_chain(d.chain())?)?,
    };
    to_json(&SigmaFileOut {
        chain,
        y: d.y().residues(),
        not_in_g: d.y().not_in_g(),
        z: d.z(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_files_round_trip() {
        for chain in [
            QuotientChain::cyclic(&[2, 4, 8]).unwrap(),
            QuotientChain::s3_over_sign(),
            QuotientChain::dihedral_pair(4, 12).unwrap(),
        ] {
            let text = to_json(&ChainFile::from_chain(&chain).unwrap()).unwrap();
            let back = parse_json::<ChainFile>(&text, "chain").unwrap().into_chain().unwrap();
            assert_eq!(back.depth(), chain.depth());
            for n in 1..=chain.depth() {
                assert_eq!(
                    back.group(n).unwrap().table_rows(),
                    chain.group(n).unwrap().table_rows()
                );
                assert_eq!(back.level_labels(n).unwrap(), chain.level_labels(n).unwrap());
            }
            assert_eq!(back.generator_images(), chain.generator_images());
        }
        let table = r#"{"levels":[{"order":2,"mul":[[0,1],[1,0]]}],"proj":[],"gens":[[1]]}"#;
        let c = parse_json::<ChainFile>(table, "chain").unwrap().into_chain().unwrap();
        assert_eq!(c.group(1).unwrap().order(), 2);
    }

    #[test]
    fn parse_errors_carry_location() {
        let e = parse_json::<ChainFile>("{\n  \"cyclic\": [2, 4,\n", "chain.json").unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
        assert!(matches!(
            Resolver::default().chain("cyclic:2,3"),
            Err(Error::InvalidChain(_))
        ));
    }

    #[test]
    fn word_refs() {
        let r = Resolver::default();
        let pd = r.word("pd:6").unwrap();
        assert_eq!(pd.skeleton().unwrap(), &Skeleton::period_doubling(6).unwrap());
        let flipped = r.word("flip:pd:6").unwrap();
        assert_eq!(
            flipped.skeleton().unwrap(),
            &BlockCode::flip().image(pd.skeleton().unwrap()).unwrap()
        );
        let shifted = r.word("shift:-3:pd:6").unwrap();
        assert_eq!(shifted.skeleton().unwrap(), &pd.skeleton().unwrap().shift(-3));
        assert!(r.word("sigma:2,4,8:5").unwrap().skeleton().is_ok());
        assert!(r.word("cyc:2:pd:6").is_ok());
        assert!(r.word("periodic:0110").is_ok());
        assert!(r.word("nonexistent.json").is_err());
    }

    #[test]
    fn sigma_and_arrow_files() {
        let dir = tempfile::tempdir().unwrap();
        let chain = Arc::new(QuotientChain::cyclic(&[2, 4, 8]).unwrap());
        let d = mu_sample(&chain, 3, 9).unwrap();
        let path = dir.path().join("d.json");
        std::fs::write(&path, sigma_json(&d, Some("cyclic:2,4,8")).unwrap()).unwrap();
        let back = Resolver::default().word(path.to_str().unwrap()).unwrap();
        assert_eq!(back.skeleton().unwrap(), &d.to_skeleton().unwrap());
        std::fs::write(dir.path().join("inline.json"), sigma_json(&d, None).unwrap()).unwrap();
        let inline = Resolver::default().sigma_file(&dir.path().join("inline.json")).unwrap();
        assert_eq!(inline.to_skeleton().unwrap(), d.to_skeleton().unwrap());

        std::fs::write(dir.path().join("flip.json"), to_json(&BlockCode::flip()).unwrap()).unwrap();
        let arrow = r#"{"source":"d.json","target":"flip:d.json","fwd":"flip.json","bwd":{"r":0,"table":"10"},"verified_at":{"L":8,"span":512}}"#;
        std::fs::write(dir.path().join("a.json"), arrow).unwrap();
        let (file, a) = Resolver::default().arrow(&dir.path().join("a.json")).unwrap();
        assert_eq!(file.verified_at, VerifiedAt { len: 8, span: 512 });
        assert_eq!(a.pair.forward, BlockCode::flip());
        let bad = arrow.replace("\"10\"", "\"01\"");
        std::fs::write(dir.path().join("bad.json"), bad).unwrap();
        assert!(matches!(
            Resolver::default().arrow(&dir.path().join("bad.json")),
            Err(Error::VerificationFailed(_))
        ));
    }

    #[test]
    fn csv_round_trip() {
        #[derive(Debug, PartialEq, Serialize, Deserialize)]
        struct Row {
            p: u64,
            status: String,
            gap: Option<u64>,
        }
        let rows = vec![
            Row {
                p: 2,
                status: "claim1".into(),
                gap: Some(3),
            },
            Row {
                p: 4,
                status: "hole, adjacent".into(),
                gap: None,
            },
        ];
        let text = to_csv(&rows).unwrap();
        assert_eq!(from_csv::<Row>(&text).unwrap(), rows);
    }
}
