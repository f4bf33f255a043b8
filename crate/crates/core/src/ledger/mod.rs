//! Transactions, UTXO state, intra- and cross-shard agreement payloads and
//! block assembly.

pub mod block;
pub mod cross;
pub mod intra;
pub mod io;
pub mod tx;
pub mod utxo;

pub use block::{apply_block, pack_transactions, Block, CandidateSet, PackOutcome};
pub use cross::{CrossAccept, CrossList, CrossResult, SignedForward};
pub use intra::{
    build_intra_payload, check_intra_payload, tally, IntraPayload, SignedTxList, TxDecision, TxList, VoteVector,
};
pub use io::{format_tx_line, parse_tx_file, parse_tx_line, TxFileError};
pub use tx::{shard_of, utxo_id, Output, Transaction, TxId, Utxo, UtxoId};
pub use utxo::{Rejection, UtxoSet};
