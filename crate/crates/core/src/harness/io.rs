//! Line-delimited JSON instance files.
//!
//! The first non-blank line is a header
//! `{"dims": d, "objective": {"type": ...}, "meta"?, "opt_witness"?, "opt_value"?}`,
//! every following line one item in arrival order:
//! `{"id": 0, "coords": [[dim, num, den], ...], "value"?: [num, den], "covers"?: [..]}`.
//! Numerators and denominators are JSON integers, or decimal strings when
//! they do not fit in 64 bits.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, Write};

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generators::{InstanceSample, SampleMeta};
use crate::model::{Item, ItemId, Payload, SparseWeightVector};
use crate::objective::ObjectiveSpec;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    /// 1-based; 0 when the error concerns the file as a whole.
    pub line: usize,
    pub message: String,
}

impl ParseError {
    fn at(line: usize, message: impl fmt::Display) -> Self {
        Self {
            line,
            message: message.to_string(),
        }
    }
}

/// An integer that may exceed 64 bits.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum Num {
    Small(i64),
    Big(String),
}

impl Num {
    fn from_big(n: &BigInt) -> Self {
        n.to_i64()
            .map_or_else(|| Num::Big(n.to_string()), Num::Small)
    }

    fn to_big(&self) -> Result<BigInt, String> {
        match self {
            Num::Small(n) => Ok(BigInt::from(*n)),
            Num::Big(s) => s
                .trim()
                .parse()
                .map_err(|_| format!("`{s}` is not an integer")),
        }
    }
}

fn fraction(num: &Num, den: &Num) -> Result<Scalar, String> {
    let den = den.to_big()?;
    if den.is_zero() {
        return Err("zero denominator".into());
    }
    Ok(Scalar::new(num.to_big()?, den))
}

fn pair(x: &Scalar) -> (Num, Num) {
    (Num::from_big(x.numer()), Num::from_big(x.denom()))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum ObjectiveHeader {
    Modular,
    Cardinality,
    Coverage { element_weights: Vec<(Num, Num)> },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    dims: usize,
    objective: ObjectiveHeader,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<SampleMeta>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    opt_witness: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    opt_value: Option<(Num, Num)>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ItemLine {
    id: usize,
    coords: Vec<(usize, Num, Num)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<(Num, Num)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    covers: Option<Vec<usize>>,
}

fn parse_header(line: usize, text: &str) -> Result<(Header, ObjectiveSpec), ParseError> {
    let header: Header = serde_json::from_str(text).map_err(|e| ParseError::at(line, e))?;
    let objective = match &header.objective {
        ObjectiveHeader::Modular => ObjectiveSpec::modular(),
        ObjectiveHeader::Cardinality => ObjectiveSpec::Cardinality,
        ObjectiveHeader::Coverage { element_weights } => {
            let weights = element_weights
                .iter()
                .map(|(n, d)| fraction(n, d))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| ParseError::at(line, format!("element weight: {e}")))?;
            ObjectiveSpec::coverage(weights).map_err(|e| ParseError::at(line, e))?
        }
    };
    Ok((header, objective))
}

fn parse_item(line: usize, text: &str, dims: usize, objective: &str) -> Result<Item, ParseError> {
    let raw: ItemLine = serde_json::from_str(text).map_err(|e| ParseError::at(line, e))?;
    let entries = raw
        .coords
        .iter()
        .map(|(dim, n, d)| fraction(n, d).map(|w| (*dim, w)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| ParseError::at(line, format!("weight: {e}")))?;
    let weights =
        SparseWeightVector::from_unsorted(dims, entries).map_err(|e| ParseError::at(line, e))?;
    let payload = match (objective, raw.value, raw.covers) {
        ("modular", Some((n, d)), None) => Payload::Value(
            fraction(&n, &d).map_err(|e| ParseError::at(line, format!("value: {e}")))?,
        ),
        ("cardinality", None, None) => Payload::Unit,
        ("coverage", None, Some(covers)) => Payload::Covers(covers),
        (kind, ..) => {
            let expected = match kind {
                "modular" => "a `value` field",
                "coverage" => "a `covers` field",
                _ => "neither `value` nor `covers`",
            };
            return Err(ParseError::at(
                line,
                format!("a {kind} item needs {expected}"),
            ));
        }
    };
    Ok(Item::new(raw.id, weights, payload))
}

/// Reads an instance; items must appear with strictly increasing ids.
pub fn read_instance<R: BufRead>(reader: R) -> Result<InstanceSample, ParseError> {
    let mut header = None;
    let mut items: Vec<Item> = Vec::new();
    let mut header_line = 0;
    for (idx, text) in reader.lines().enumerate() {
        let line = idx + 1;
        let text = text.map_err(|e| ParseError::at(line, e))?;
        if text.trim().is_empty() {
            continue;
        }
        let Some((h, objective)) = &header else {
            header = Some(parse_header(line, &text)?);
            header_line = line;
            continue;
        };
        let item = parse_item(line, &text, h.dims, objective.kind())?;
        if let Some(prev) = items.last() {
            if item.id <= prev.id {
                return Err(ParseError::at(
                    line,
                    format!(
                        "item {} follows {}; ids must strictly increase",
                        item.id, prev.id
                    ),
                ));
            }
        }
        items.push(item);
    }
    let Some((h, objective)) = header else {
        return Err(ParseError::at(0, "missing header line"));
    };

    let known: BTreeSet<ItemId> = items.iter().map(|it| it.id).collect();
    let witness = match (h.opt_witness, h.opt_value) {
        (Some(ids), Some((n, d))) => {
            let set: BTreeSet<ItemId> = ids.into_iter().map(ItemId).collect();
            if let Some(bad) = set.iter().find(|id| !known.contains(id)) {
                return Err(ParseError::at(
                    header_line,
                    format!("witness names unknown item {bad}"),
                ));
            }
            let value = fraction(&n, &d)
                .map_err(|e| ParseError::at(header_line, format!("opt_value: {e}")))?;
            Some((set, value))
        }
        (None, None) => None,
        _ => {
            return Err(ParseError::at(
                header_line,
                "opt_witness and opt_value must be given together",
            ))
        }
    };
    let meta = h.meta.unwrap_or_default();
    InstanceSample::new(h.dims, items, objective, witness, meta).map_err(|e| {
        // payload errors are attributed to the header: the item lines parsed fine
        ParseError::at(header_line, e)
    })
}

pub fn read_instance_str(text: &str) -> Result<InstanceSample, ParseError> {
    read_instance(text.as_bytes())
}

fn header_of(sample: &InstanceSample) -> Header {
    let objective = match &sample.objective {
        ObjectiveSpec::Modular { .. } => ObjectiveHeader::Modular,
        ObjectiveSpec::Cardinality => ObjectiveHeader::Cardinality,
        ObjectiveSpec::Coverage {
            element_weights, ..
        } => ObjectiveHeader::Coverage {
            element_weights: element_weights.iter().map(pair).collect(),
        },
    };
    let meta = (sample.meta != SampleMeta::default()).then(|| sample.meta.clone());
    Header {
        dims: sample.dims,
        objective,
        meta,
        opt_witness: sample
            .opt_witness
            .as_ref()
            .map(|w| w.iter().map(|id| id.0).collect()),
        opt_value: sample.opt_value.as_ref().map(pair),
    }
}

fn item_line(item: &Item) -> ItemLine {
    let coords = item
        .weights
        .iter()
        .map(|(dim, w)| {
            let (n, d) = pair(w);
            (dim, n, d)
        })
        .collect();
    let (value, covers) = match &item.payload {
        Payload::Unit => (None, None),
        Payload::Value(v) => (Some(pair(v)), None),
        Payload::Covers(c) => (None, Some(c.clone())),
    };
    ItemLine {
        id: item.id.0,
        coords,
        value,
        covers,
    }
}

pub fn write_instance<W: Write>(sample: &InstanceSample, mut out: W) -> std::io::Result<()> {
    serde_json::to_writer(&mut out, &header_of(sample))?;
    writeln!(out)?;
    for item in &sample.items {
        serde_json::to_writer(&mut out, &item_line(item))?;
        writeln!(out)?;
    }
    Ok(())
}

pub fn instance_to_string(sample: &InstanceSample) -> String {
    let mut buf = Vec::new();
    write_instance(sample, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}
