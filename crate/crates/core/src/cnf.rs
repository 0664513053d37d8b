//! CNF formulas: DIMACS parsing, an immutable clause database with
//! polarity-sensitive occurrence lists, and model checking.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::io::Read;

use thiserror::Error;

use crate::state::{Assignment, DimensionMismatch};

/// A boolean variable, 1-based as in DIMACS.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(u32);

impl Var {
    /// Panics on `0`.
    pub fn new(v: u32) -> Var {
        assert!(v > 0, "variables are 1-based");
        Var(v)
    }

    pub fn from_index(idx: usize) -> Var {
        Var(idx as u32 + 1)
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// 0-based position in per-variable arrays.
    #[inline]
    pub fn index(self) -> usize {
        (self.0 - 1) as usize
    }

    pub fn positive(self) -> Lit {
        Lit(self.0 as i32)
    }

    pub fn negative(self) -> Lit {
        Lit(-(self.0 as i32))
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A literal in DIMACS encoding: `v` for the positive literal, `-v` for the
/// negative one. Never zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(i32);

impl Lit {
    pub fn from_dimacs(code: i32) -> Option<Lit> {
        (code != 0 && code != i32::MIN).then_some(Lit(code))
    }

    pub fn to_dimacs(self) -> i32 {
        self.0
    }

    #[inline]
    pub fn var(self) -> Var {
        Var(self.0.unsigned_abs())
    }

    #[inline]
    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    #[inline]
    pub fn negate(self) -> Lit {
        Lit(-self.0)
    }

    /// Dense code used to index occurrence lists: `2·(v-1)` for `v`,
    /// `2·(v-1)+1` for `¬v`.
    #[inline]
    pub fn code(self) -> usize {
        2 * self.var().index() + usize::from(self.0 < 0)
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clause {
    lits: Vec<Lit>,
    tautology: bool,
}

impl Clause {
    /// Deduplicates literals, keeping first occurrences in order.
    /// Returns `None` for an empty literal list.
    pub fn new(lits: impl IntoIterator<Item = Lit>) -> Option<Clause> {
        let mut out: Vec<Lit> = Vec::new();
        for lit in lits {
            if !out.contains(&lit) {
                out.push(lit);
            }
        }
        if out.is_empty() {
            return None;
        }
        let tautology = out.iter().any(|l| out.contains(&l.negate()));
        Some(Clause {
            lits: out,
            tautology,
        })
    }

    pub fn lits(&self) -> &[Lit] {
        &self.lits
    }

    pub fn len(&self) -> usize {
        self.lits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lits.is_empty()
    }

    /// Contains both `v` and `¬v` for some variable, so it is satisfied
    /// under every assignment.
    pub fn is_tautology(&self) -> bool {
        self.tautology
    }

    pub fn contains(&self, lit: Lit) -> bool {
        self.lits.contains(&lit)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("io error: {0}")]
    Io(String),
    #[error("missing `p cnf <vars> <clauses>` header")]
    MissingHeader,
    #[error("malformed header on line {line}: {text:?}")]
    BadHeader { line: usize, text: String },
    #[error("duplicate header on line {line}")]
    DuplicateHeader { line: usize },
    #[error("invalid token {token:?} on line {line}")]
    BadToken { line: usize, token: String },
    #[error("literal {lit} on line {line} exceeds the declared {num_vars} variables")]
    VariableOutOfRange {
        line: usize,
        lit: i64,
        num_vars: usize,
    },
    #[error("header declares {declared} clauses but {found} were read")]
    ClauseCountMismatch { declared: usize, found: usize },
    #[error("empty clause #{index}: the formula is trivially unsatisfiable")]
    EmptyClause { index: usize },
}

/// An immutable CNF formula.
///
/// Clause indices are dense `0..m` and follow input order. For every literal
/// the formula keeps the list of clauses that contain that literal with the
/// same polarity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Formula {
    num_vars: usize,
    clauses: Vec<Clause>,
    occ: Vec<Vec<u32>>,
}

impl Formula {
    /// Builds a formula from clauses. Every variable must be `≤ num_vars`.
    pub fn new(num_vars: usize, clauses: Vec<Clause>) -> Formula {
        let mut occ = vec![Vec::new(); 2 * num_vars];
        for (ci, clause) in clauses.iter().enumerate() {
            for &lit in clause.lits() {
                assert!(lit.var().index() < num_vars, "literal {lit} out of range");
                occ[lit.code()].push(ci as u32);
            }
        }
        Formula {
            num_vars,
            clauses,
            occ,
        }
    }

    /// Convenience constructor from DIMACS-style integer clauses.
    pub fn from_dimacs_clauses(
        num_vars: usize,
        clauses: &[Vec<i32>],
    ) -> Result<Formula, ParseError> {
        let mut out = Vec::with_capacity(clauses.len());
        for (index, raw) in clauses.iter().enumerate() {
            let mut lits = Vec::with_capacity(raw.len());
            for &code in raw {
                if code == 0 {
                    return Err(ParseError::BadToken {
                        line: 0,
                        token: "0".into(),
                    });
                }
                let lit = i64::from(code);
                if lit.unsigned_abs() > num_vars as u64 {
                    return Err(ParseError::VariableOutOfRange {
                        line: 0,
                        lit,
                        num_vars,
                    });
                }
                lits.push(Lit(code));
            }
            out.push(Clause::new(lits).ok_or(ParseError::EmptyClause { index })?);
        }
        Ok(Formula::new(num_vars, out))
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    #[inline]
    pub fn clause(&self, c: usize) -> &Clause {
        &self.clauses[c]
    }

    /// Clauses containing exactly `lit`.
    #[inline]
    pub fn occurrences(&self, lit: Lit) -> &[u32] {
        &self.occ[lit.code()]
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> {
        (0..self.num_vars).map(Var::from_index)
    }

    /// Clauses other than `c` sharing at least one literal (same polarity)
    /// with `c`. Materializes the set; the search itself scans
    /// occurrence lists instead.
    pub fn neighbors(&self, c: usize) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        for &lit in self.clauses[c].lits() {
            for &d in self.occurrences(lit) {
                if d as usize != c {
                    out.insert(d as usize);
                }
            }
        }
        out
    }

    pub fn verify_model(&self, assignment: &Assignment) -> Result<bool, DimensionMismatch> {
        if assignment.len() != self.num_vars {
            return Err(DimensionMismatch {
                expected: self.num_vars,
                found: assignment.len(),
            });
        }
        Ok(self
            .clauses
            .iter()
            .all(|c| c.lits().iter().any(|&l| assignment.is_true(l))))
    }

    /// Canonical DIMACS text: header line, one clause per line.
    pub fn to_dimacs(&self) -> String {
        let mut out = String::new();
        writeln!(out, "p cnf {} {}", self.num_vars, self.clauses.len()).unwrap();
        for clause in &self.clauses {
            for lit in clause.lits() {
                write!(out, "{lit} ").unwrap();
            }
            out.push_str("0\n");
        }
        out
    }
}

pub fn parse_dimacs_reader(mut reader: impl Read) -> Result<Formula, ParseError> {
    let mut buf = Vec::new();
    reader
        .read_to_end(&mut buf)
        .map_err(|e| ParseError::Io(e.to_string()))?;
    parse_dimacs(&buf)
}

/// Parses DIMACS CNF.
///
/// Comment lines start with `c`. A line starting with `%` ends the clause
/// section (SATLIB convention). A final clause missing its terminating `0`
/// is accepted.
pub fn parse_dimacs(input: &[u8]) -> Result<Formula, ParseError> {
    let text = String::from_utf8_lossy(input);
    let mut header: Option<(usize, usize)> = None;
    let mut clauses: Vec<Clause> = Vec::new();
    let mut current: Vec<Lit> = Vec::new();

    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let trimmed = line.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('c') {
            continue;
        }
        if trimmed.starts_with('%') {
            break;
        }
        if trimmed.starts_with('p') {
            if header.is_some() {
                return Err(ParseError::DuplicateHeader { line: line_no });
            }
            header = Some(parse_header(trimmed, line_no)?);
            continue;
        }
        let Some((num_vars, _)) = header else {
            return Err(ParseError::MissingHeader);
        };
        for token in trimmed.split_whitespace() {
            let value: i64 = token.parse().map_err(|_| ParseError::BadToken {
                line: line_no,
                token: token.to_string(),
            })?;
            if value == 0 {
                let index = clauses.len();
                let clause =
                    Clause::new(current.drain(..)).ok_or(ParseError::EmptyClause { index })?;
                clauses.push(clause);
                continue;
            }
            if value.unsigned_abs() > num_vars as u64 {
                return Err(ParseError::VariableOutOfRange {
                    line: line_no,
                    lit: value,
                    num_vars,
                });
            }
            current.push(Lit(value as i32));
        }
    }

    let (num_vars, declared) = header.ok_or(ParseError::MissingHeader)?;
    if !current.is_empty() {
        clauses.push(Clause::new(current).expect("nonempty"));
    }
    if clauses.len() != declared {
        return Err(ParseError::ClauseCountMismatch {
            declared,
            found: clauses.len(),
        });
    }
    Ok(Formula::new(num_vars, clauses))
}

fn parse_header(line: &str, line_no: usize) -> Result<(usize, usize), ParseError> {
    let bad = || ParseError::BadHeader {
        line: line_no,
        text: line.to_string(),
    };
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != 4 || parts[0] != "p" || parts[1] != "cnf" {
        return Err(bad());
    }
    let vars: usize = parts[2].parse().map_err(|_| bad())?;
    let clauses: usize = parts[3].parse().map_err(|_| bad())?;
    if vars > i32::MAX as usize {
        return Err(bad());
    }
    Ok((vars, clauses))
}
