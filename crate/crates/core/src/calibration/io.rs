//! Quote CSV reading and writing.
//!
//! Header: `maturity,strike,type,price,impliedVol,discount`. The type column
//! takes `call`/`put` (or `C`/`P`); an empty implied vol is allowed.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::VanillaQuote;

#[derive(Debug, Serialize, Deserialize)]
struct QuoteRow {
    maturity: f64,
    strike: f64,
    #[serde(rename = "type")]
    kind: String,
    price: f64,
    #[serde(rename = "impliedVol")]
    implied_vol: Option<f64>,
    discount: f64,
}

fn parse_kind(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "call" | "c" => Some(true),
        "put" | "p" => Some(false),
        _ => None,
    }
}

pub fn read_quotes<R: Read>(reader: R) -> Result<Vec<VanillaQuote>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<QuoteRow>().enumerate() {
        // line 1 is the header
        let line = i + 2;
        let row = row.map_err(|e| Error::Parse(format!("quote line {line}: {e}")))?;
        let is_call = parse_kind(&row.kind)
            .ok_or_else(|| Error::Parse(format!("quote line {line}, column type: unknown option type {:?}", row.kind)))?;
        out.push(VanillaQuote {
            maturity: row.maturity,
            strike: row.strike,
            is_call,
            price: row.price,
            implied_vol: row.implied_vol,
            discount: row.discount,
        });
    }
    Ok(out)
}

pub fn write_quotes<W: Write>(writer: W, quotes: &[VanillaQuote]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for q in quotes {
        wtr.serialize(QuoteRow {
            maturity: q.maturity,
            strike: q.strike,
            kind: if q.is_call { "call" } else { "put" }.to_string(),
            price: q.price,
            implied_vol: q.implied_vol,
            discount: q.discount,
        })
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    wtr.flush().map_err(|e| Error::Io(e.to_string()))
}
