//! Labeled examples, the stratified split and the tokenization contract.

mod encode;
mod examples;
mod manifest;
mod split;
mod wordpiece;

pub use encode::{encode, encode_text, Encoding, Padding, TokenizationSpec, Truncation};
pub use examples::{make_examples, LabeledExample};
pub use manifest::{read_examples, read_manifest, write_examples, write_manifest, ManifestEntry};
pub use split::{largest_remainder, stratified_split, SplitBundle, SplitName, DEFAULT_RATIOS};
pub use wordpiece::{WordPieceTokenizer, CLS, MASK, PAD, SEP, UNK};
