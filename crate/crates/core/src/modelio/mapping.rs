//! The `.map` abstraction-mapping language.
//!
//! ```text
//! # one clause per entity, separated by newlines or `;`
//! CI: identity
//! Cro: 0->0, 1->1, 2->1
//! ```

use std::fmt::Write as _;

use super::lexer::{lex_line, Cursor, Tok, Token};
use super::{ParseError, ParseErrorKind};
use crate::abstraction::{AbstractionMapping, EntityMapping, StateMapping};
use crate::model::Mvn;

/// Parses `.map` text against `model`. Every entity needs exactly one clause.
pub fn parse_mapping(text: &str, model: &Mvn) -> Result<AbstractionMapping, ParseError> {
    let mut slots: Vec<Option<EntityMapping>> = vec![None; model.entity_count()];
    let mut last = (1, 1);
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let tokens = lex_line(raw, line)?;
        let end_column = raw.chars().count() + 1;
        last = (line, end_column);
        for (segment, end) in split_clauses(&tokens, end_column) {
            if segment.is_empty() {
                continue;
            }
            let mut cur = Cursor::new(segment, line, end);
            parse_clause(&mut cur, model, &mut slots)?;
        }
    }
    let mut out = Vec::with_capacity(slots.len());
    for (i, slot) in slots.into_iter().enumerate() {
        match slot {
            Some(s) => out.push(s),
            None => {
                return Err(ParseError::new(
                    last.0,
                    last.1,
                    ParseErrorKind::Missing,
                    format!("no clause for entity `{}`", model.entities[i].name),
                ))
            }
        }
    }
    AbstractionMapping::new(model, out)
        .map_err(|e| ParseError::new(last.0, last.1, ParseErrorKind::Mapping(e.clone()), e.to_string()))
}

fn split_clauses(tokens: &[Token], end_column: usize) -> Vec<(&[Token], usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for (i, t) in tokens.iter().enumerate() {
        if t.tok == Tok::Semi {
            out.push((&tokens[start..i], t.column));
            start = i + 1;
        }
    }
    out.push((&tokens[start..], end_column));
    out
}

fn parse_clause(cur: &mut Cursor<'_>, model: &Mvn, slots: &mut [Option<EntityMapping>]) -> Result<(), ParseError> {
    let (name, tok) = cur.word("entity name")?;
    let entity = model.entity_index(name).ok_or_else(|| {
        ParseError::new(
            tok.line,
            tok.column,
            ParseErrorKind::UnknownEntity,
            format!("unknown entity `{name}`"),
        )
    })?;
    if slots[entity].is_some() {
        return Err(ParseError::new(
            tok.line,
            tok.column,
            ParseErrorKind::Duplicate,
            format!("second clause for entity `{name}`"),
        ));
    }
    cur.expect(Tok::Colon)?;
    if let Some(Token { tok: Tok::Word(w), .. }) = cur.peek() {
        if w == "identity" {
            cur.next();
            cur.finish()?;
            slots[entity] = Some(EntityMapping::Identity);
            return Ok(());
        }
    }
    let (line, column) = cur.here();
    let max = model.entities[entity].max_level;
    let mut image: Vec<Option<u8>> = vec![None; max as usize + 1];
    loop {
        let (from_line, from_col) = cur.here();
        let (from, _) = cur.number("source level")?;
        cur.expect(Tok::Arrow)?;
        let (to, _) = cur.number("target level")?;
        if from > max {
            return Err(ParseError::new(
                from_line,
                from_col,
                ParseErrorKind::LevelRange,
                format!("level {from} is outside 0..{max} of `{name}`"),
            ));
        }
        if image[from as usize].replace(to).is_some() {
            return Err(ParseError::new(
                from_line,
                from_col,
                ParseErrorKind::Duplicate,
                format!("level {from} of `{name}` is mapped twice"),
            ));
        }
        if cur.at_end() {
            break;
        }
        cur.expect(Tok::Comma)?;
    }
    if let Some(missing) = image.iter().position(Option::is_none) {
        return Err(ParseError::new(
            line,
            column,
            ParseErrorKind::NonTotal,
            format!("level {missing} of `{name}` is not mapped"),
        ));
    }
    let image: Vec<u8> = image.into_iter().map(|v| v.unwrap_or(0)).collect();
    let mapping = StateMapping::new(max, image).map_err(|e| {
        ParseError::new(
            line,
            column,
            ParseErrorKind::Mapping(e.clone()),
            format!("`{name}`: {e}"),
        )
    })?;
    slots[entity] = Some(EntityMapping::Compress(mapping));
    Ok(())
}

/// `.map` text for `mapping`, one clause per line in entity order.
pub fn serialize_mapping(mapping: &AbstractionMapping, model: &Mvn) -> String {
    let mut out = String::new();
    for (slot, e) in mapping.slots().iter().zip(&model.entities) {
        match slot {
            EntityMapping::Identity => {
                let _ = writeln!(out, "{}: identity", e.name);
            }
            EntityMapping::Compress(m) => {
                let pairs: Vec<String> = m.image().iter().enumerate().map(|(i, v)| format!("{i}->{v}")).collect();
                let _ = writeln!(out, "{}: {}", e.name, pairs.join(", "));
            }
        }
    }
    out
}
