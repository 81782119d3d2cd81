//! Parser for the supported XML subset: elements, attributes and character
//! data with the five predefined entities and numeric character references.

use super::{NodeTable, TableBuilder};
use crate::error::{Error, Result};

/// Parses a document into a [`NodeTable`].
///
/// Whitespace-only character data is dropped. Comments, processing
/// instructions (other than a leading XML declaration), CDATA sections,
/// DTDs, namespaces and custom entities are rejected as unsupported.
pub fn parse_document(xml: &[u8], db_name: &str) -> Result<NodeTable> {
    let text = std::str::from_utf8(xml).map_err(|e| Error::Xml {
        offset: e.valid_up_to(),
        message: "invalid UTF-8".into(),
    })?;
    Parser { src: text, pos: 0, builder: TableBuilder::new() }.run(db_name)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    builder: TableBuilder,
}

fn is_name_char(c: char) -> bool {
    !c.is_whitespace() && !matches!(c, '<' | '>' | '/' | '=' | '!' | '?' | '"' | '\'' | '&' | ';')
}

impl<'a> Parser<'a> {
    fn err<T>(&self, offset: usize, message: impl Into<String>) -> Result<T> {
        Err(Error::Xml { offset, message: message.into() })
    }

    fn unsupported<T>(&self, offset: usize, feature: impl Into<String>) -> Result<T> {
        Err(Error::Unsupported { offset, feature: feature.into() })
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn skip_ws(&mut self) {
        let rest = self.rest();
        let trimmed = rest.trim_start_matches([' ', '\t', '\r', '\n']);
        self.pos += rest.len() - trimmed.len();
    }

    fn expect(&mut self, s: &str) -> Result<()> {
        if self.rest().starts_with(s) {
            self.pos += s.len();
            Ok(())
        } else {
            self.err(self.pos, format!("expected `{s}`"))
        }
    }

    fn name(&mut self) -> Result<&'a str> {
        let start = self.pos;
        let rest = self.rest();
        let len = rest.find(|c: char| !is_name_char(c)).unwrap_or(rest.len());
        if len == 0 {
            return self.err(start, "expected a name");
        }
        let name = &rest[..len];
        if name.starts_with(|c: char| c.is_ascii_digit() || c == '-' || c == '.') {
            return self.err(start, format!("invalid name `{name}`"));
        }
        if name.contains(':') {
            return self.unsupported(start, "namespaces");
        }
        self.pos += len;
        Ok(name)
    }

    /// Markup that is not an element: rejected with a precise feature name.
    fn check_markup(&self) -> Result<()> {
        let rest = self.rest();
        if rest.starts_with("<!--") {
            self.unsupported(self.pos, "comments")
        } else if rest.starts_with("<![CDATA[") {
            self.unsupported(self.pos, "CDATA sections")
        } else if rest.starts_with("<!") {
            self.unsupported(self.pos, "document type declarations")
        } else if rest.starts_with("<?") {
            self.unsupported(self.pos, "processing instructions")
        } else {
            Ok(())
        }
    }

    fn run(mut self, db_name: &str) -> Result<NodeTable> {
        if self.rest().starts_with('\u{feff}') {
            self.pos += '\u{feff}'.len_utf8();
        }
        if self.rest().starts_with("<?xml") && self.rest()[5..].starts_with(char::is_whitespace) {
            match self.rest().find("?>") {
                Some(end) => self.pos += end + 2,
                None => return self.err(self.pos, "unterminated XML declaration"),
            }
        }
        self.skip_ws();
        if self.peek() != Some('<') {
            return self.err(self.pos, "expected root element");
        }
        self.check_markup()?;
        self.element()?;
        self.skip_ws();
        if self.pos < self.src.len() {
            self.check_markup()?;
            return self.err(self.pos, "content after root element");
        }
        Ok(self.builder.finish(db_name))
    }

    /// Parses the root element and everything below it without recursion.
    fn element(&mut self) -> Result<()> {
        let mut open: Vec<&'a str> = Vec::new();
        let mut text = String::new();
        let mut text_start = 0;
        loop {
            match self.peek() {
                None => {
                    let name = open.last().copied().unwrap_or_default();
                    return self.err(self.pos, format!("unclosed element `{name}`"));
                }
                Some('<') => {
                    if !text.is_empty() {
                        if !text.trim_matches([' ', '\t', '\r', '\n']).is_empty() {
                            self.builder.text(&text);
                        }
                        text.clear();
                    }
                    if self.rest().starts_with("</") {
                        let at = self.pos;
                        self.pos += 2;
                        let name = self.name()?;
                        self.skip_ws();
                        self.expect(">")?;
                        match open.pop() {
                            Some(expected) if expected == name => self.builder.end_element(),
                            Some(expected) => {
                                return self.err(at, format!("mismatched end tag `{name}`, expected `{expected}`"))
                            }
                            None => return self.err(at, "unexpected end tag"),
                        }
                        if open.is_empty() {
                            return Ok(());
                        }
                    } else {
                        self.check_markup()?;
                        self.pos += 1;
                        let name = self.name()?;
                        self.builder.start_element(name);
                        if self.attributes()? {
                            self.builder.end_element();
                            if open.is_empty() {
                                return Ok(());
                            }
                        } else {
                            open.push(name);
                        }
                    }
                }
                Some(_) => {
                    if text.is_empty() {
                        text_start = self.pos;
                    }
                    self.char_data(&mut text)?;
                    if open.is_empty() {
                        return self.err(text_start, "text outside root element");
                    }
                }
            }
        }
    }

    /// Reads attributes up to the end of a start tag. Returns true for an
    /// empty-element tag.
    fn attributes(&mut self) -> Result<bool> {
        let mut seen: Vec<&'a str> = Vec::new();
        loop {
            let had_ws = {
                let before = self.pos;
                self.skip_ws();
                self.pos > before
            };
            if self.rest().starts_with("/>") {
                self.pos += 2;
                return Ok(true);
            }
            if self.rest().starts_with('>') {
                self.pos += 1;
                return Ok(false);
            }
            if self.peek().is_none() {
                return self.err(self.pos, "unterminated start tag");
            }
            if !had_ws {
                return self.err(self.pos, "expected whitespace before attribute");
            }
            let at = self.pos;
            let name = self.name()?;
            if name == "xmlns" {
                return self.unsupported(at, "namespaces");
            }
            if seen.contains(&name) {
                return self.err(at, format!("duplicate attribute `{name}`"));
            }
            seen.push(name);
            self.skip_ws();
            self.expect("=")?;
            self.skip_ws();
            let quote = match self.peek() {
                Some(q @ ('"' | '\'')) => q,
                _ => return self.err(self.pos, "expected quoted attribute value"),
            };
            self.pos += 1;
            let mut value = String::new();
            loop {
                match self.peek() {
                    None => return self.err(self.pos, "unterminated attribute value"),
                    Some(c) if c == quote => {
                        self.pos += 1;
                        break;
                    }
                    Some('<') => return self.err(self.pos, "`<` in attribute value"),
                    Some('&') => self.reference(&mut value)?,
                    Some(c) => {
                        value.push(c);
                        self.pos += c.len_utf8();
                    }
                }
            }
            self.builder.attribute(name, &value);
        }
    }

    fn char_data(&mut self, out: &mut String) -> Result<()> {
        while let Some(c) = self.peek() {
            match c {
                '<' => break,
                '&' => self.reference(out)?,
                _ => {
                    let rest = self.rest();
                    let len = rest.find(['<', '&']).unwrap_or(rest.len());
                    let chunk = &rest[..len];
                    if let Some(i) = chunk.find("]]>") {
                        return self.err(self.pos + i, "`]]>` in character data");
                    }
                    out.push_str(chunk);
                    self.pos += len;
                }
            }
        }
        Ok(())
    }

    fn reference(&mut self, out: &mut String) -> Result<()> {
        let start = self.pos;
        let rest = self.rest();
        let Some(end) = rest.find(';') else {
            return self.err(start, "unterminated reference");
        };
        let body = &rest[1..end];
        let decoded = match body {
            "amp" => Some('&'),
            "lt" => Some('<'),
            "gt" => Some('>'),
            "quot" => Some('"'),
            "apos" => Some('\''),
            _ if body.starts_with("#x") => hex_char(&body[2..]),
            _ if body.starts_with('#') => body[1..].parse::<u32>().ok().and_then(char::from_u32),
            _ if !body.is_empty() && body.chars().all(is_name_char) => {
                return self.unsupported(start, format!("entity reference `&{body};`"));
            }
            _ => None,
        };
        let Some(decoded) = decoded else {
            return self.err(start, "malformed reference");
        };
        out.push(decoded);
        self.pos += end + 1;
        Ok(())
    }
}

fn hex_char(digits: &str) -> Option<char> {
    u32::from_str_radix(digits, 16).ok().and_then(char::from_u32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::NodeKind;

    fn parse(s: &str) -> Result<NodeTable> {
        parse_document(s.as_bytes(), "t")
    }

    #[test]
    fn drops_whitespace_only_text() {
        let t = parse("<?xml version=\"1.0\"?>\n<a>\n  <b> x </b>\n  <c/>\n</a>\n").unwrap();
        let kinds: Vec<_> = t.records().iter().map(|r| r.kind).collect();
        use NodeKind::*;
        assert_eq!(kinds, vec![Document, Element, Element, Text, Element]);
        assert_eq!(t.value(3), " x ");
    }

    #[test]
    fn merges_references_into_one_text_node() {
        let t = parse("<a>x &amp; y&#x41;&#66;</a>").unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.value(2), "x & yAB");
    }

    #[test]
    fn malformed_input_reports_offset() {
        match parse("<a><b></a>") {
            Err(Error::Xml { offset, .. }) => assert_eq!(offset, 6),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse("<a>"), Err(Error::Xml { .. })));
        assert!(matches!(parse("<a/><b/>"), Err(Error::Xml { .. })));
        assert!(matches!(parse("<a x='1' x='2'/>"), Err(Error::Xml { .. })));
        assert!(matches!(parse(""), Err(Error::Xml { offset: 0, .. })));
        assert!(matches!(parse("<a>b</a>c"), Err(Error::Xml { .. })));
    }

    #[test]
    fn unsupported_constructs_are_distinct() {
        for doc in [
            "<a><!-- c --></a>",
            "<a><![CDATA[x]]></a>",
            "<!DOCTYPE a><a/>",
            "<a><?pi x?></a>",
            "<a>&nbsp;</a>",
            "<x:a/>",
            "<a xmlns=\"u\"/>",
        ] {
            assert!(matches!(parse(doc), Err(Error::Unsupported { .. })), "{doc}");
        }
    }

    #[test]
    fn attribute_values_decode_references() {
        let t = parse("<a k='&lt;&quot;&#10;'/>").unwrap();
        assert_eq!(t.value(2), "<\"\n");
    }
}
