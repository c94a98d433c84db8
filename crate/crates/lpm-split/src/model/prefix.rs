use std::fmt;

use crate::error::{Error, Result};

/// A bit prefix of length `len`, identifying a trie node.
///
/// `bits` holds the prefix value in the low `len` bits, most significant
/// bit first along the root-to-node path. The root is the empty prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Prefix {
    len: u32,
    bits: u64,
}

impl Prefix {
    pub const ROOT: Prefix = Prefix { len: 0, bits: 0 };

    pub fn new(bits: u64, len: u32) -> Self {
        debug_assert!(len == 64 || bits >> len == 0);
        Prefix { bits, len }
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_root(&self) -> bool {
        self.len == 0
    }

    pub fn parent(&self) -> Option<Prefix> {
        if self.len == 0 {
            None
        } else {
            Some(Prefix::new(self.bits >> 1, self.len - 1))
        }
    }

    pub fn child(&self, right: bool) -> Prefix {
        Prefix::new((self.bits << 1) | u64::from(right), self.len + 1)
    }

    /// First address covered by this prefix in a trie of depth `width`.
    pub fn block_start(&self, width: u32) -> u64 {
        self.bits << (width - self.len)
    }

    /// Number of addresses covered in a trie of depth `width`.
    pub fn block_len(&self, width: u32) -> u64 {
        1u64 << (width - self.len)
    }

    /// True if `other` lies in this prefix's subtree (equal included).
    pub fn covers(&self, other: &Prefix) -> bool {
        other.len >= self.len && (other.bits >> (other.len - self.len)) == self.bits
    }

    /// Renders with `*` padding to the given width, e.g. `01***`.
    pub fn pattern(&self, width: u32) -> String {
        let mut s = String::with_capacity(width as usize);
        for i in (0..self.len).rev() {
            s.push(if (self.bits >> i) & 1 == 1 { '1' } else { '0' });
        }
        for _ in self.len..width {
            s.push('*');
        }
        s
    }

    /// Parses a pattern of `0`/`1` bits followed only by `*` wildcards.
    pub fn parse_pattern(s: &str) -> Result<(Prefix, u32)> {
        let width = s.len() as u32;
        if width > 63 {
            return Err(Error::WidthCapExceeded { width, cap: 63 });
        }
        let mut bits = 0u64;
        let mut len = 0u32;
        let mut seen_star = false;
        for c in s.chars() {
            match c {
                '0' | '1' if !seen_star => {
                    bits = (bits << 1) | u64::from(c == '1');
                    len += 1;
                }
                '*' => seen_star = true,
                _ => {
                    return Err(Error::Parse {
                        reason: format!("invalid pattern `{s}`"),
                    })
                }
            }
        }
        Ok((Prefix::new(bits, len), width))
    }
}

impl fmt::Display for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len == 0 {
            return write!(f, "*");
        }
        for i in (0..self.len).rev() {
            write!(f, "{}", (self.bits >> i) & 1)?;
        }
        Ok(())
    }
}
