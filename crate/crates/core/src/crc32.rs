//! Table-driven CRC32 in the two reflected variants used for n-gram hashing.
//!
//! Both variants share the standard convention: initial register `0xFFFFFFFF`,
//! reflected (LSB-first) processing, final complement. The IEEE polynomial is
//! the zlib/PNG one; Castagnoli is the iSCSI/SSE4.2 one.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::Error;

/// Reflected IEEE 802.3 polynomial.
const POLY_IEEE: u32 = 0xEDB8_8320;
/// Reflected Castagnoli polynomial.
const POLY_CASTAGNOLI: u32 = 0x82F6_3B78;

const fn build_table(poly: u32) -> [u32; 256] {
    let mut table = [0u32; 256];
    let mut i = 0;
    while i < 256 {
        let mut crc = i as u32;
        let mut bit = 0;
        while bit < 8 {
            crc = if crc & 1 != 0 { (crc >> 1) ^ poly } else { crc >> 1 };
            bit += 1;
        }
        table[i] = crc;
        i += 1;
    }
    table
}

static TABLE_IEEE: [u32; 256] = build_table(POLY_IEEE);
static TABLE_CASTAGNOLI: [u32; 256] = build_table(POLY_CASTAGNOLI);

/// Which CRC32 polynomial an encoder (and any index built from it) uses.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum HashVariant {
    /// CRC32 with the IEEE polynomial (the zlib `crc32`). The default.
    #[default]
    #[serde(rename = "crc32-ieee")]
    Crc32Ieee,
    /// CRC32-C with the Castagnoli polynomial.
    #[serde(rename = "crc32c")]
    Crc32Castagnoli,
}

impl HashVariant {
    fn table(self) -> &'static [u32; 256] {
        match self {
            HashVariant::Crc32Ieee => &TABLE_IEEE,
            HashVariant::Crc32Castagnoli => &TABLE_CASTAGNOLI,
        }
    }

    /// One-shot CRC32 of `bytes` under this variant.
    pub fn checksum(self, bytes: &[u8]) -> u32 {
        let mut hasher = Crc32::new(self);
        hasher.update(bytes);
        hasher.finalize()
    }

    /// Single-byte code used in the index file header.
    pub(crate) fn code(self) -> u8 {
        match self {
            HashVariant::Crc32Ieee => 0,
            HashVariant::Crc32Castagnoli => 1,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(HashVariant::Crc32Ieee),
            1 => Some(HashVariant::Crc32Castagnoli),
            _ => None,
        }
    }
}

impl fmt::Display for HashVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HashVariant::Crc32Ieee => write!(f, "crc32-ieee"),
            HashVariant::Crc32Castagnoli => write!(f, "crc32c"),
        }
    }
}

impl FromStr for HashVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "crc32" | "crc32-ieee" | "ieee" => Ok(HashVariant::Crc32Ieee),
            "crc32c" | "crc32-c" | "castagnoli" => Ok(HashVariant::Crc32Castagnoli),
            other => Err(Error::InvalidArgument(format!(
                "unknown hash variant {other:?} (expected crc32 or crc32c)"
            ))),
        }
    }
}

/// Streaming CRC32 state, used for file checksums.
#[derive(Debug, Clone)]
pub struct Crc32 {
    table: &'static [u32; 256],
    state: u32,
}

impl Crc32 {
    pub fn new(variant: HashVariant) -> Self {
        Crc32 {
            table: variant.table(),
            state: 0xFFFF_FFFF,
        }
    }

    pub fn update(&mut self, bytes: &[u8]) {
        let mut crc = self.state;
        for &byte in bytes {
            crc = self.table[((crc ^ byte as u32) & 0xFF) as usize] ^ (crc >> 8);
        }
        self.state = crc;
    }

    /// Current checksum. Does not consume the state, so more bytes may follow.
    pub fn finalize(&self) -> u32 {
        !self.state
    }
}
