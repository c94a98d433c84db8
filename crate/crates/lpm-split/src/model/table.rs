use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::coloring::{Color, TrieColoring};
use crate::model::prefix::Prefix;

/// One prefix rule: addresses matching `prefix` go to `target`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rule {
    pub prefix: Prefix,
    pub target: Color,
}

/// An ordered prefix rule table. Priority is list order: the first matching
/// rule applies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TcamTable {
    width: u32,
    rules: Vec<Rule>,
}

impl TcamTable {
    pub fn new(width: u32, rules: Vec<Rule>) -> Result<Self> {
        if width > 63 {
            return Err(Error::WidthCapExceeded { width, cap: 63 });
        }
        for rule in &rules {
            if rule.prefix.len() > width || rule.target == 0 {
                return Err(Error::BadTargetIds {
                    reason: format!("rule {} -> {}", rule.prefix.pattern(width), rule.target),
                });
            }
        }
        Ok(TcamTable { width, rules })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// First-match lookup.
    pub fn lookup(&self, addr: u64) -> Option<Color> {
        self.rules
            .iter()
            .find(|r| addr >> (self.width - r.prefix.len()) == r.prefix.bits())
            .map(|r| r.target)
    }

    /// Converts to a trie coloring, honoring first-match priority: a rule
    /// shadowed entirely by an earlier rule is dropped. Fails when no
    /// match-all rule survives, since some address would be unmatched.
    pub fn to_coloring(&self) -> Result<TrieColoring> {
        let mut live: Vec<Rule> = Vec::new();
        for rule in &self.rules {
            if !live.iter().any(|l| l.prefix.covers(&rule.prefix)) {
                live.push(*rule);
            }
        }
        let marks: BTreeMap<Prefix, Color> =
            live.iter().map(|r| (r.prefix, r.target)).collect();
        if !marks.contains_key(&Prefix::ROOT) {
            return Err(Error::UnmatchedAddress);
        }
        TrieColoring::new(self.width, marks)
    }
}

impl TrieColoring {
    /// Emits the minimal rule table for this coloring: one rule per
    /// conflict, sorted by non-increasing prefix length (ties by ascending
    /// prefix value) so first-match priority coincides with longest-prefix
    /// semantics. Marks that repeat their parent color are dropped.
    pub fn to_table(&self) -> TcamTable {
        let mut rules: Vec<Rule> = self
            .conflicts()
            .into_iter()
            .map(|c| Rule {
                prefix: c.prefix,
                target: c.color,
            })
            .collect();
        rules.sort_by(|a, b| {
            b.prefix
                .len()
                .cmp(&a.prefix.len())
                .then_with(|| a.prefix.bits().cmp(&b.prefix.bits()))
        });
        TcamTable {
            width: self.width(),
            rules,
        }
    }
}

impl fmt::Display for TcamTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, rule) in self.rules.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{} -> {}", rule.prefix.pattern(self.width), rule.target)?;
        }
        Ok(())
    }
}

impl FromStr for TcamTable {
    type Err = Error;

    /// Parses one `pattern -> target` rule per line. All patterns must
    /// share one width. Blank lines and `#` comments are skipped.
    fn from_str(s: &str) -> Result<Self> {
        let mut width: Option<u32> = None;
        let mut rules = Vec::new();
        for line in s.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (pattern, target) = line.split_once("->").ok_or_else(|| Error::Parse {
                reason: format!("invalid rule `{line}`"),
            })?;
            let (prefix, w) = Prefix::parse_pattern(pattern.trim())?;
            let target: Color = target.trim().parse().map_err(|_| Error::Parse {
                reason: format!("invalid target in `{line}`"),
            })?;
            match width {
                None => width = Some(w),
                Some(prev) if prev != w => {
                    return Err(Error::Parse {
                        reason: format!("pattern width {w} differs from {prev}"),
                    })
                }
                _ => {}
            }
            rules.push(Rule { prefix, target });
        }
        let width = width.ok_or_else(|| Error::Parse {
            reason: "empty table".into(),
        })?;
        TcamTable::new(width, rules)
    }
}
