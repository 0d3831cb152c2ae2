//! The `.mvn` model language.
//!
//! ```text
//! # comments run to end of line
//! mvn PL2
//! entity CI : 0..1
//! entity Cro : 0..2
//! neighbourhood CI = [CI, Cro]
//! neighbourhood Cro = [CI, Cro]
//! table CI:
//!   0 0 -> 1
//!   0 1,2 -> 0      # shorthand: any listed level
//!   ...
//! ```
//!
//! Entities must be declared before they are referenced. Input entities
//! (`neighbourhood X = []`) need no table.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::lexer::{is_identifier, lex_line, Cursor, Tok};
use super::{ParseError, ParseErrorKind};
use crate::model::{Entity, Mvn, Neighbourhood, NextStateTable, TupleIter, MAX_LEVEL};

const KEYWORDS: [&str; 5] = ["mvn", "entity", "neighbourhood", "neighborhood", "table"];

struct TableDraft {
    line: usize,
    rows: BTreeMap<Vec<u8>, u8>,
}

#[derive(Default)]
struct Draft {
    name: Option<String>,
    entities: Vec<Entity>,
    entity_lines: Vec<usize>,
    neighbourhoods: Vec<Option<Vec<usize>>>,
    tables: Vec<Option<TableDraft>>,
}

impl Draft {
    fn lookup(&self, name: &str, line: usize, column: usize) -> Result<usize, ParseError> {
        self.entities.iter().position(|e| e.name == name).ok_or_else(|| {
            ParseError::new(
                line,
                column,
                ParseErrorKind::UnknownEntity,
                format!("unknown entity `{name}`"),
            )
        })
    }
}

/// Parses `.mvn` text. Shorthand rows are expanded; the result is validated.
pub fn parse_model(text: &str) -> Result<Mvn, ParseError> {
    let mut draft = Draft::default();
    let mut open_table: Option<usize> = None;
    let mut last_line = 1;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let tokens = lex_line(raw, line)?;
        if tokens.is_empty() {
            continue;
        }
        let end_column = raw.chars().count() + 1;
        let mut cur = Cursor::new(&tokens, line, end_column);
        let keyword = match &tokens[0].tok {
            Tok::Word(w) if KEYWORDS.contains(&w.as_str()) => Some(w.as_str()),
            _ => None,
        };
        match keyword {
            Some(kw) => {
                open_table = None;
                cur.next();
                match kw {
                    "mvn" => parse_header(&mut cur, &mut draft)?,
                    "entity" => parse_entity(&mut cur, &mut draft)?,
                    "table" => open_table = Some(parse_table_header(&mut cur, &mut draft)?),
                    _ => parse_neighbourhood(&mut cur, &mut draft)?,
                }
            }
            None => match open_table {
                Some(entity) => parse_row(&mut cur, &mut draft, entity)?,
                None => {
                    return Err(cur.error(
                        ParseErrorKind::Syntax,
                        "expected `mvn`, `entity`, `neighbourhood` or `table`",
                    ))
                }
            },
        }
    }

    finish(draft, last_line)
}

fn parse_header(cur: &mut Cursor<'_>, draft: &mut Draft) -> Result<(), ParseError> {
    let (line, column) = cur.here();
    let (name, _) = cur.word("model name")?;
    cur.finish()?;
    if draft.name.is_some() {
        return Err(ParseError::new(
            line,
            column,
            ParseErrorKind::Duplicate,
            "model name declared twice",
        ));
    }
    draft.name = Some(name.to_owned());
    Ok(())
}

fn parse_entity(cur: &mut Cursor<'_>, draft: &mut Draft) -> Result<(), ParseError> {
    let (line, column) = cur.here();
    let (name, _) = cur.word("entity name")?;
    if !is_identifier(name) || KEYWORDS.contains(&name) {
        return Err(ParseError::new(
            line,
            column,
            ParseErrorKind::Syntax,
            format!("`{name}` is not a valid entity name"),
        ));
    }
    cur.expect(Tok::Colon)?;
    let (lo_pos_line, lo_pos_col) = cur.here();
    let (lo, _) = cur.number("lowest level")?;
    if lo != 0 {
        return Err(ParseError::new(
            lo_pos_line,
            lo_pos_col,
            ParseErrorKind::LevelRange,
            "level ranges start at 0",
        ));
    }
    cur.expect(Tok::DotDot)?;
    let (hi_line, hi_col) = cur.here();
    let (hi, _) = cur.number("highest level")?;
    cur.finish()?;
    if !(1..=MAX_LEVEL).contains(&hi) {
        return Err(ParseError::new(
            hi_line,
            hi_col,
            ParseErrorKind::LevelRange,
            format!("max level of `{name}` must be within 1..={MAX_LEVEL}, got {hi}"),
        ));
    }
    if draft.entities.iter().any(|e| e.name == name) {
        return Err(ParseError::new(
            line,
            column,
            ParseErrorKind::Duplicate,
            format!("duplicate entity `{name}`"),
        ));
    }
    draft.entities.push(Entity::new(name, hi));
    draft.entity_lines.push(line);
    draft.neighbourhoods.push(None);
    draft.tables.push(None);
    Ok(())
}

fn parse_neighbourhood(cur: &mut Cursor<'_>, draft: &mut Draft) -> Result<(), ParseError> {
    let (line, column) = cur.here();
    let (name, _) = cur.word("entity name")?;
    let target = draft.lookup(name, line, column)?;
    cur.expect(Tok::Eq)?;
    cur.expect(Tok::LBracket)?;
    let mut inputs = Vec::new();
    if !matches!(cur.peek().map(|t| &t.tok), Some(Tok::RBracket)) {
        loop {
            let (l, c) = cur.here();
            let (input, _) = cur.word("entity name")?;
            let j = draft.lookup(input, l, c)?;
            if inputs.contains(&j) {
                return Err(ParseError::new(
                    l,
                    c,
                    ParseErrorKind::Duplicate,
                    format!("`{input}` listed twice"),
                ));
            }
            inputs.push(j);
            match cur.peek().map(|t| &t.tok) {
                Some(Tok::Comma) => {
                    cur.next();
                }
                _ => break,
            }
        }
    }
    cur.expect(Tok::RBracket)?;
    cur.finish()?;
    if draft.neighbourhoods[target].is_some() {
        return Err(ParseError::new(
            line,
            column,
            ParseErrorKind::Duplicate,
            format!("neighbourhood of `{name}` declared twice"),
        ));
    }
    draft.neighbourhoods[target] = Some(inputs);
    Ok(())
}

fn parse_table_header(cur: &mut Cursor<'_>, draft: &mut Draft) -> Result<usize, ParseError> {
    let (line, column) = cur.here();
    let (name, _) = cur.word("entity name")?;
    let target = draft.lookup(name, line, column)?;
    cur.expect(Tok::Colon)?;
    cur.finish()?;
    if draft.neighbourhoods[target].is_none() {
        return Err(ParseError::new(
            line,
            column,
            ParseErrorKind::Missing,
            format!("table for `{name}` precedes its neighbourhood declaration"),
        ));
    }
    if draft.tables[target].is_some() {
        return Err(ParseError::new(
            line,
            column,
            ParseErrorKind::Duplicate,
            format!("table for `{name}` declared twice"),
        ));
    }
    draft.tables[target] = Some(TableDraft {
        line,
        rows: BTreeMap::new(),
    });
    Ok(target)
}

fn parse_row(cur: &mut Cursor<'_>, draft: &mut Draft, entity: usize) -> Result<(), ParseError> {
    let (row_line, row_col) = cur.here();
    let inputs = draft.neighbourhoods[entity].clone().unwrap_or_default();
    let mut columns: Vec<Vec<u8>> = Vec::new();
    while !matches!(cur.peek().map(|t| &t.tok), Some(Tok::Arrow) | None) {
        let col = columns.len();
        let mut options = Vec::new();
        loop {
            let (l, c) = cur.here();
            let (v, _) = cur.number("input level")?;
            if let Some(&j) = inputs.get(col) {
                let max = draft.entities[j].max_level;
                if v > max {
                    return Err(ParseError::new(
                        l,
                        c,
                        ParseErrorKind::LevelRange,
                        format!("level {v} out of range for `{}` (0..{max})", draft.entities[j].name),
                    ));
                }
            }
            if !options.contains(&v) {
                options.push(v);
            }
            match cur.peek().map(|t| &t.tok) {
                Some(Tok::Comma) => {
                    cur.next();
                }
                _ => break,
            }
        }
        columns.push(options);
    }
    cur.expect(Tok::Arrow)?;
    let (out_line, out_col) = cur.here();
    let (output, _) = cur.number("output level")?;
    cur.finish()?;

    let name = draft.entities[entity].name.clone();
    if columns.len() != inputs.len() {
        return Err(ParseError::new(
            row_line,
            row_col,
            ParseErrorKind::Syntax,
            format!(
                "row for `{name}` has {} columns, neighbourhood has {}",
                columns.len(),
                inputs.len()
            ),
        ));
    }
    let max = draft.entities[entity].max_level;
    if output > max {
        return Err(ParseError::new(
            out_line,
            out_col,
            ParseErrorKind::LevelRange,
            format!("output {output} out of range for `{name}` (0..{max})"),
        ));
    }

    let table = draft.tables[entity].as_mut().expect("open table exists");
    let radix: Vec<u8> = columns.iter().map(|c| (c.len() - 1) as u8).collect();
    for pick in TupleIter::new(&radix) {
        let key: Vec<u8> = pick.iter().zip(&columns).map(|(&p, c)| c[p as usize]).collect();
        if table.rows.insert(key.clone(), output).is_some() {
            return Err(ParseError::new(
                row_line,
                row_col,
                ParseErrorKind::Duplicate,
                format!("row {key:?} of `{name}` defined more than once"),
            ));
        }
    }
    Ok(())
}

fn finish(draft: Draft, last_line: usize) -> Result<Mvn, ParseError> {
    let name = draft
        .name
        .ok_or_else(|| ParseError::new(1, 1, ParseErrorKind::Missing, "missing `mvn <name>` header"))?;
    if draft.entities.is_empty() {
        return Err(ParseError::new(
            last_line,
            1,
            ParseErrorKind::Missing,
            "model declares no entities",
        ));
    }
    let mut neighbourhoods = Vec::new();
    let mut tables = Vec::new();
    for (i, entity) in draft.entities.iter().enumerate() {
        let line = draft.entity_lines[i];
        let inputs = draft.neighbourhoods[i].clone().ok_or_else(|| {
            ParseError::new(
                line,
                1,
                ParseErrorKind::Missing,
                format!("no neighbourhood declared for `{}`", entity.name),
            )
        })?;
        let ranges: Vec<u8> = inputs.iter().map(|&j| draft.entities[j].max_level).collect();
        let table = match &draft.tables[i] {
            None if inputs.is_empty() => NextStateTable::constant(0),
            None => {
                return Err(ParseError::new(
                    line,
                    1,
                    ParseErrorKind::NonTotal,
                    format!("no table for `{}`", entity.name),
                ))
            }
            Some(t) => {
                if let Some(missing) = TupleIter::new(&ranges).find(|r| !t.rows.contains_key(r)) {
                    return Err(ParseError::new(
                        t.line,
                        1,
                        ParseErrorKind::NonTotal,
                        format!("table for `{}` is not total: no row for {:?}", entity.name, missing),
                    ));
                }
                NextStateTable::new(t.rows.clone())
            }
        };
        neighbourhoods.push(Neighbourhood::new(inputs));
        tables.push(table);
    }
    Ok(Mvn::new(name, draft.entities, neighbourhoods, tables))
}

/// Writes the model back as `.mvn` text with one explicit row per input tuple.
pub fn serialize_model(model: &Mvn) -> String {
    serialize_model_with_header(model, &[])
}

/// Like [`serialize_model`], prefixed by `# `-comment lines.
pub fn serialize_model_with_header(model: &Mvn, header: &[String]) -> String {
    let mut out = String::new();
    for line in header {
        let _ = writeln!(out, "# {line}");
    }
    let _ = writeln!(out, "mvn {}", model.name);
    for e in &model.entities {
        let _ = writeln!(out, "entity {} : 0..{}", e.name, e.max_level);
    }
    for (e, nb) in model.entities.iter().zip(&model.neighbourhoods) {
        let names: Vec<&str> = nb.inputs.iter().map(|&j| model.entities[j].name.as_str()).collect();
        let _ = writeln!(out, "neighbourhood {} = [{}]", e.name, names.join(", "));
    }
    for (i, (e, table)) in model.entities.iter().zip(&model.tables).enumerate() {
        if model.is_input_entity(i) && table.lookup(&[]).unwrap_or(0) == 0 {
            continue;
        }
        let _ = writeln!(out, "table {}:", e.name);
        for (row, output) in &table.rows {
            let cols: Vec<String> = row.iter().map(u8::to_string).collect();
            if cols.is_empty() {
                let _ = writeln!(out, "  -> {output}");
            } else {
                let _ = writeln!(out, "  {} -> {}", cols.join(" "), output);
            }
        }
    }
    out
}
