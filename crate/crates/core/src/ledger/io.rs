//! Text format for pending transactions: one per line, tab-separated.
//!
//! ```text
//! <input-hex>,<input-hex>\t<owner-hex>:<amount>,...\t<signer-hex>:<sig-hex>,...
//! ```
//!
//! The signature column may be omitted, which yields an unsigned transaction.
//! Blank lines and lines starting with `#` are skipped.

use thiserror::Error;

use crate::crypto::{Digest, PublicKey, Signature};

use super::tx::{Output, Transaction};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TxFileError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}

fn bad(line: usize, reason: impl Into<String>) -> TxFileError {
    TxFileError::Malformed {
        line,
        reason: reason.into(),
    }
}

fn split_list(field: &str) -> impl Iterator<Item = &str> {
    field.split(',').map(str::trim).filter(|s| !s.is_empty())
}

pub fn parse_tx_line(text: &str, line: usize) -> Result<Transaction, TxFileError> {
    let mut cols = text.split('\t');
    let inputs = cols
        .next()
        .map(|f| {
            split_list(f)
                .map(|h| Digest::from_hex(h).ok_or_else(|| bad(line, format!("bad input id {h}"))))
                .collect::<Result<Vec<_>, _>>()
        })
        .transpose()?
        .unwrap_or_default();
    let outputs = cols
        .next()
        .ok_or_else(|| bad(line, "missing outputs column"))
        .and_then(|f| {
            split_list(f)
                .map(|pair| {
                    let (owner, amount) = pair
                        .split_once(':')
                        .ok_or_else(|| bad(line, format!("bad output {pair}")))?;
                    Ok(Output {
                        owner: PublicKey::from_hex(owner).ok_or_else(|| bad(line, format!("bad owner {owner}")))?,
                        amount: amount.parse().map_err(|_| bad(line, format!("bad amount {amount}")))?,
                    })
                })
                .collect::<Result<Vec<_>, _>>()
        })?;
    let signatures = match cols.next() {
        None => Vec::new(),
        Some(f) => split_list(f)
            .map(|pair| {
                let (signer, bytes) = pair
                    .split_once(':')
                    .ok_or_else(|| bad(line, format!("bad signature {pair}")))?;
                Ok(Signature {
                    signer: PublicKey::from_hex(signer).ok_or_else(|| bad(line, "bad signer"))?,
                    bytes: Digest::from_hex(bytes).ok_or_else(|| bad(line, "bad signature bytes"))?,
                })
            })
            .collect::<Result<Vec<_>, _>>()?,
    };
    if cols.next().is_some() {
        return Err(bad(line, "too many columns"));
    }
    Ok(Transaction {
        inputs,
        outputs,
        signatures,
    })
}

pub fn parse_tx_file(text: &str) -> Result<Vec<Transaction>, TxFileError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, l)| parse_tx_line(l, i + 1))
        .collect()
}

pub fn format_tx_line(tx: &Transaction) -> String {
    let inputs: Vec<String> = tx.inputs.iter().map(Digest::to_hex).collect();
    let outputs: Vec<String> = tx
        .outputs
        .iter()
        .map(|o| format!("{}:{}", o.owner.to_hex(), o.amount))
        .collect();
    let sigs: Vec<String> = tx
        .signatures
        .iter()
        .map(|s| format!("{}:{}", s.signer.to_hex(), s.bytes.to_hex()))
        .collect();
    format!("{}\t{}\t{}", inputs.join(","), outputs.join(","), sigs.join(","))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{hash, SimCrypto};

    #[test]
    fn round_trip() {
        let mut c = SimCrypto::new(3);
        let a = c.generate_keypair(b"a");
        let b = c.generate_keypair(b"b");
        let tx = Transaction::signed(
            vec![hash(b"1"), hash(b"2")],
            vec![
                Output {
                    owner: b.public,
                    amount: 5,
                },
                Output {
                    owner: a.public,
                    amount: 1,
                },
            ],
            &a,
            &c,
        );
        let text = format!("# pending\n\n{}\n", format_tx_line(&tx));
        assert_eq!(parse_tx_file(&text).unwrap(), vec![tx]);
    }

    #[test]
    fn unsigned_and_errors() {
        let owner = PublicKey([7; 32]);
        let line = format!("{}\t{}:9", hash(b"x").to_hex(), owner.to_hex());
        let tx = parse_tx_line(&line, 1).unwrap();
        assert!(tx.signatures.is_empty());
        assert_eq!(tx.outputs[0].amount, 9);
        assert!(matches!(
            parse_tx_line("zz\t", 4),
            Err(TxFileError::Malformed { line: 4, .. })
        ));
        assert!(parse_tx_line(&hash(b"x").to_hex(), 1).is_err());
        assert!(parse_tx_line(&format!("\t{}:x", owner.to_hex()), 1).is_err());
    }
}
