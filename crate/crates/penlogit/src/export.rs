//! JSON emission with fixed-width float formatting.
//!
//! Floats are written with 17 significant digits so every serialized value
//! parses back to the exact same bits.

use std::io;

use serde::Serialize;
use serde_json::ser::Formatter;

struct SeventeenDigits;

impl Formatter for SeventeenDigits {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        // 1 leading digit + 16 decimals = 17 significant digits
        write!(writer, "{value:.16e}")
    }
}

/// Serializes to a JSON string with round-trip-exact floats.
pub fn to_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SeventeenDigits);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("serde_json writes utf-8"))
}
