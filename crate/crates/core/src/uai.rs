//! Pairwise models in the UAI `MARKOV` text format, and labelings in the
//! UAI `MPE` result format.
//!
//! Files written here start with the comment line `c mrf-relax energies`,
//! which marks the tables as energies. Tables of files without it are read
//! as probabilities and converted with `-ln p`. A `c grid R C` comment keeps
//! the grid layout. Unary factors come first, then one pairwise factor per
//! edge in canonical order; numbers use the shortest representation that
//! reads back to the same float, so write-read-write is byte-identical.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{GridShape, Labeling, MrfModel};

pub const ENERGY_MARKER: &str = "c mrf-relax energies";

pub fn write_model(model: &MrfModel) -> String {
    let mut s = String::new();
    s.push_str(ENERGY_MARKER);
    s.push('\n');
    if let Some(g) = model.grid() {
        let _ = writeln!(s, "c grid {} {}", g.rows, g.cols);
    }
    s.push_str("MARKOV\n");
    let _ = writeln!(s, "{}", model.num_nodes());
    let counts: Vec<String> = model.label_counts().iter().map(usize::to_string).collect();
    let _ = writeln!(s, "{}", counts.join(" "));
    let _ = writeln!(s, "{}", model.num_nodes() + model.num_edges());
    for v in 0..model.num_nodes() {
        let _ = writeln!(s, "1 {v}");
    }
    for e in model.edges() {
        let _ = writeln!(s, "2 {} {}", e.u, e.v);
    }
    let table = |s: &mut String, t: &[f64]| {
        let vals: Vec<String> = t.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(s, "\n{}\n{}", t.len(), vals.join(" "));
    };
    for t in model.unaries() {
        table(&mut s, t);
    }
    for t in model.pairwise_tables() {
        table(&mut s, t);
    }
    s
}

struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let t = self.items.get(self.pos).copied().ok_or_else(|| Error::Parse {
            line: self.items.last().map_or(0, |t| t.0),
            message: format!("unexpected end of input, expected {what}"),
        })?;
        self.pos += 1;
        Ok(t)
    }

    fn usize(&mut self, what: &str) -> Result<usize> {
        let (line, t) = self.next(what)?;
        t.parse().map_err(|_| Error::Parse {
            line,
            message: format!("expected {what}, found {t:?}"),
        })
    }

    fn f64(&mut self, what: &str) -> Result<(usize, f64)> {
        let (line, t) = self.next(what)?;
        let x: f64 = t.parse().map_err(|_| Error::Parse {
            line,
            message: format!("expected {what}, found {t:?}"),
        })?;
        Ok((line, x))
    }
}

pub fn read_model(text: &str) -> Result<MrfModel> {
    let mut energies = false;
    let mut grid = None;
    let mut items = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let mut words = line.split_whitespace();
        match words.clone().next() {
            Some("c") | Some("#") => {
                let rest: Vec<&str> = words.skip(1).collect();
                if rest == ["mrf-relax", "energies"] {
                    energies = true;
                } else if rest.len() == 3 && rest[0] == "grid" {
                    let parse = |t: &str| {
                        t.parse::<usize>().map_err(|_| Error::Parse {
                            line: i + 1,
                            message: format!("bad grid dimension {t:?}"),
                        })
                    };
                    grid = Some(GridShape {
                        rows: parse(rest[1])?,
                        cols: parse(rest[2])?,
                    });
                }
            }
            _ => items.extend(words.by_ref().map(|w| (i + 1, w))),
        }
    }
    let mut tok = Tokens { items, pos: 0 };
    let (line, kind) = tok.next("network type")?;
    if kind != "MARKOV" {
        return Err(Error::Parse {
            line,
            message: format!("unsupported network type {kind:?}"),
        });
    }
    let n = tok.usize("variable count")?;
    let counts = (0..n)
        .map(|_| tok.usize("cardinality"))
        .collect::<Result<Vec<_>>>()?;
    let factors = tok.usize("factor count")?;
    let mut scopes = Vec::with_capacity(factors);
    for _ in 0..factors {
        let (line, _) = tok.items.get(tok.pos).copied().unwrap_or((0, ""));
        let arity = tok.usize("scope size")?;
        if arity == 0 || arity > 2 {
            return Err(Error::Parse {
                line,
                message: format!(
                    "factor of arity {arity} is not supported; only unary and pairwise factors are"
                ),
            });
        }
        let scope = (0..arity)
            .map(|_| tok.usize("variable index"))
            .collect::<Result<Vec<_>>>()?;
        if let Some(&v) = scope.iter().find(|&&v| v >= n) {
            return Err(Error::Parse {
                line,
                message: format!("variable {v} out of range"),
            });
        }
        if arity == 2 && scope[0] == scope[1] {
            return Err(Error::Parse {
                line,
                message: "pairwise factor on a single variable".into(),
            });
        }
        scopes.push((line, scope));
    }
    let mut unary: Vec<Vec<f64>> = counts.iter().map(|&k| vec![0.0; k]).collect();
    let mut pairs: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    for (line, scope) in scopes {
        let size: usize = scope.iter().map(|&v| counts[v]).product();
        let len = tok.usize("table size")?;
        if len != size {
            return Err(Error::Parse {
                line,
                message: format!("table has {len} entries, scope needs {size}"),
            });
        }
        let mut t = Vec::with_capacity(len);
        for _ in 0..len {
            let (l, x) = tok.f64("table entry")?;
            let value = if energies {
                x
            } else {
                if !(x > 0.0) {
                    return Err(Error::Parse {
                        line: l,
                        message: format!("probability {x} has no finite energy"),
                    });
                }
                -x.ln()
            };
            if !value.is_finite() {
                return Err(Error::Parse {
                    line: l,
                    message: format!("non-finite potential {x}"),
                });
            }
            t.push(value);
        }
        if scope.len() == 1 {
            for (a, b) in unary[scope[0]].iter_mut().zip(&t) {
                *a += b;
            }
        } else {
            let (a, b) = (scope[0], scope[1]);
            let (key, table) = if a < b {
                ((a, b), t)
            } else {
                let (ka, kb) = (counts[a], counts[b]);
                let mut tt = vec![0.0; t.len()];
                for xa in 0..ka {
                    for xb in 0..kb {
                        tt[xb * ka + xa] = t[xa * kb + xb];
                    }
                }
                ((b, a), tt)
            };
            match pairs.get_mut(&key) {
                Some(acc) => acc.iter_mut().zip(&table).for_each(|(x, y)| *x += y),
                None => {
                    pairs.insert(key, table);
                }
            }
        }
    }
    if tok.pos != tok.items.len() {
        let (line, t) = tok.items[tok.pos];
        return Err(Error::Parse {
            line,
            message: format!("trailing token {t:?}"),
        });
    }
    let model = MrfModel::new(unary, pairs.into_iter().map(|((a, b), t)| (a, b, t)).collect())?;
    match grid {
        Some(g) => model.with_grid(g),
        None => Ok(model),
    }
}

pub fn write_labeling(x: &Labeling) -> String {
    let labels: Vec<String> = x.0.iter().map(usize::to_string).collect();
    format!("MPE\n{} {}\n", x.len(), labels.join(" "))
}

/// Reads `MPE` result files; the header line is optional.
pub fn read_labeling(text: &str) -> Result<Labeling> {
    let mut items: Vec<(usize, &str)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        items.extend(line.split_whitespace().map(|w| (i + 1, w)));
    }
    if items.first().is_some_and(|t| t.1 == "MPE") {
        items.remove(0);
    }
    let mut tok = Tokens { items, pos: 0 };
    let n = tok.usize("labeling length")?;
    let labels = (0..n).map(|_| tok.usize("label")).collect::<Result<Vec<_>>>()?;
    if tok.pos != tok.items.len() {
        let (line, t) = tok.items[tok.pos];
        return Err(Error::Parse {
            line,
            message: format!("trailing token {t:?}"),
        });
    }
    Ok(Labeling(labels))
}
