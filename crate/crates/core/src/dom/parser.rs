//! Lenient HTML parsing. The parser never fails: malformed markup is
//! recovered in the spirit of browser error handling (auto-closing,
//! ignoring stray end tags, treating lone `<` as text) so that adversarial
//! documents cannot opt out of inspection by being broken.

use super::style::{parse_stylesheet_rules, StyleSheet};
use super::{DomNode, DomTree};

/// Elements that never have content and close immediately.
const VOID_ELEMENTS: &[&str] = &[
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "param", "source",
    "track", "wbr",
];

/// Elements whose raw content is consumed without markup interpretation.
/// `script` content is discarded outright (it is not page text and must not
/// leak into text extraction); `style` content feeds the stylesheet.
const RAW_TEXT_ELEMENTS: &[&str] = &["script", "style"];

/// Elements whose content is text-only but with entity decoding.
const RCDATA_ELEMENTS: &[&str] = &["title", "textarea"];

/// Block-level openers that implicitly terminate an open `<p>`.
const P_CLOSERS: &[&str] = &[
    "address",
    "article",
    "aside",
    "blockquote",
    "details",
    "div",
    "dl",
    "fieldset",
    "figcaption",
    "figure",
    "footer",
    "form",
    "h1",
    "h2",
    "h3",
    "h4",
    "h5",
    "h6",
    "header",
    "hgroup",
    "hr",
    "main",
    "menu",
    "nav",
    "ol",
    "p",
    "pre",
    "section",
    "table",
    "ul",
];

const HEADINGS: &[&str] = &["h1", "h2", "h3", "h4", "h5", "h6"];

fn is_void(tag: &str) -> bool {
    VOID_ELEMENTS.contains(&tag)
}

/// Whether an open element with tag `open` is implicitly closed when a start
/// tag `incoming` appears. Mirrors the common sibling-structure rules.
fn implicitly_closes(open: &str, incoming: &str) -> bool {
    match open {
        "p" => P_CLOSERS.contains(&incoming),
        "li" => incoming == "li",
        "dt" | "dd" => incoming == "dt" || incoming == "dd",
        "td" | "th" => matches!(incoming, "td" | "th" | "tr"),
        "tr" => incoming == "tr",
        "option" => incoming == "option" || incoming == "optgroup",
        "a" => incoming == "a",
        _ if HEADINGS.contains(&open) => HEADINGS.contains(&incoming),
        _ => false,
    }
}

/// Parse any string into a document tree. Total: never returns an error.
pub fn parse_document(source: &str) -> DomTree {
    let mut parser = Parser::new(source);
    parser.run();
    let (children, style_text) = parser.finish();
    let mut root = DomNode::new_element("#document".to_string(), Vec::new());
    root.children = children;
    assign_paths(&mut root, "");
    DomTree {
        root,
        stylesheet: StyleSheet {
            rules: parse_stylesheet_rules(&style_text),
        },
        source_len: source.len(),
    }
}

fn assign_paths(node: &mut DomNode, path: &str) {
    node.node_path = path.to_string();
    for (i, child) in node.children.iter_mut().enumerate() {
        let child_path = if path.is_empty() {
            i.to_string()
        } else {
            format!("{path}/{i}")
        };
        assign_paths(child, &child_path);
    }
}

/// An element still being built; its completed children accumulate in order.
struct OpenElement {
    node: DomNode,
}

struct Parser<'a> {
    input: &'a str,
    bytes: &'a [u8],
    pos: usize,
    /// Completed top-level nodes.
    done: Vec<DomNode>,
    /// Stack of currently-open elements, outermost first.
    stack: Vec<OpenElement>,
    /// Accumulated contents of all `<style>` blocks, in document order.
    style_text: String,
}

impl<'a> Parser<'a> {
    fn new(input: &'a str) -> Self {
        Parser {
            input,
            bytes: input.as_bytes(),
            pos: 0,
            done: Vec::new(),
            stack: Vec::new(),
            style_text: String::new(),
        }
    }

    fn finish(mut self) -> (Vec<DomNode>, String) {
        while let Some(open) = self.stack.pop() {
            self.append_node(open.node);
        }
        (self.done, self.style_text)
    }

    fn append_node(&mut self, node: DomNode) {
        let children = match self.stack.last_mut() {
            Some(open) => &mut open.node.children,
            None => &mut self.done,
        };
        // Contiguous text runs merge into one node, matching how browsers
        // coalesce character data split by entities or parse recovery.
        if node.is_text() {
            if let Some(last) = children.last_mut() {
                if last.is_text() {
                    last.text
                        .as_mut()
                        .expect("text node has text")
                        .push_str(node.text.as_deref().unwrap_or(""));
                    return;
                }
            }
        }
        children.push(node);
    }

    fn append_text(&mut self, text: String) {
        if text.is_empty() {
            return;
        }
        self.append_node(DomNode::new_text(text));
    }

    fn remaining(&self) -> &'a str {
        &self.input[self.pos..]
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn starts_with(&self, s: &str) -> bool {
        self.remaining().starts_with(s)
    }

    fn run(&mut self) {
        let mut text_start = self.pos;
        while self.pos < self.bytes.len() {
            if self.peek() == Some(b'<') {
                let after = self.bytes.get(self.pos + 1).copied();
                let is_markup = match after {
                    Some(c) if c.is_ascii_alphabetic() => true,
                    Some(b'/') | Some(b'!') | Some(b'?') => true,
                    _ => false,
                };
                if is_markup {
                    if self.pos > text_start {
                        let text = decode_entities(&self.input[text_start..self.pos]);
                        self.append_text(normalize_newlines(&text));
                    }
                    self.consume_markup();
                    text_start = self.pos;
                    continue;
                }
            }
            self.pos += 1;
            // Stay on a char boundary for the slice above.
            while self.pos < self.bytes.len() && !self.input.is_char_boundary(self.pos) {
                self.pos += 1;
            }
        }
        if self.pos > text_start {
            let text = decode_entities(&self.input[text_start..self.pos]);
            self.append_text(normalize_newlines(&text));
        }
    }

    /// Entered at a `<` that begins markup. Consumes one construct.
    fn consume_markup(&mut self) {
        if self.starts_with("<!--") {
            self.pos += 4;
            match self.remaining().find("-->") {
                Some(idx) => self.pos += idx + 3,
                None => self.pos = self.bytes.len(),
            }
            return;
        }
        if self.starts_with("<!") || self.starts_with("<?") {
            // Doctype, CDATA-ish noise, or processing instruction: skip to `>`.
            self.pos += 2;
            match self.remaining().find('>') {
                Some(idx) => self.pos += idx + 1,
                None => self.pos = self.bytes.len(),
            }
            return;
        }
        if self.starts_with("</") {
            let after = self.bytes.get(self.pos + 2).copied();
            if matches!(after, Some(c) if c.is_ascii_alphabetic()) {
                self.consume_end_tag();
            } else {
                // `</>` or `</3>`: bogus comment, skip to `>`.
                self.pos += 2;
                match self.remaining().find('>') {
                    Some(idx) => self.pos += idx + 1,
                    None => self.pos = self.bytes.len(),
                }
            }
            return;
        }
        self.consume_start_tag();
    }

    fn consume_start_tag(&mut self) {
        debug_assert_eq!(self.peek(), Some(b'<'));
        self.pos += 1;
        let name = self.read_tag_name();
        let mut attributes: Vec<(String, String)> = Vec::new();
        loop {
            self.skip_whitespace();
            match self.peek() {
                None => {
                    // EOF inside a tag: the partial tag is discarded.
                    return;
                }
                Some(b'>') => {
                    self.pos += 1;
                    break;
                }
                Some(b'/') => {
                    // A trailing slash is tolerated and otherwise ignored;
                    // only the void-element list decides self-closing.
                    self.pos += 1;
                }
                Some(_) => {
                    if let Some((attr_name, attr_value)) = self.read_attribute() {
                        if !attributes.iter().any(|(n, _)| *n == attr_name) {
                            attributes.push((attr_name, attr_value));
                        }
                    }
                }
            }
        }
        self.insert_element(name, attributes);
    }

    fn insert_element(&mut self, name: String, attributes: Vec<(String, String)>) {
        while let Some(top) = self.stack.last() {
            if implicitly_closes(&top.node.tag, &name) {
                let open = self.stack.pop().expect("stack non-empty");
                self.append_node(open.node);
            } else {
                break;
            }
        }
        if RAW_TEXT_ELEMENTS.contains(&name.as_str()) {
            let raw = self.consume_raw_until_end_tag(&name);
            let mut node = DomNode::new_element(name.clone(), attributes);
            if name == "style" {
                self.style_text.push_str(&raw);
                self.style_text.push('\n');
            }
            // Script (and style) bodies are never page text.
            node.children.clear();
            self.append_node(node);
            return;
        }
        if RCDATA_ELEMENTS.contains(&name.as_str()) {
            let raw = self.consume_raw_until_end_tag(&name);
            let mut node = DomNode::new_element(name, attributes);
            let decoded = normalize_newlines(&decode_entities(&raw));
            if !decoded.is_empty() {
                node.children.push(DomNode::new_text(decoded));
            }
            self.append_node(node);
            return;
        }
        let node = DomNode::new_element(name.clone(), attributes);
        if is_void(name.as_str()) {
            self.append_node(node);
        } else {
            self.stack.push(OpenElement { node });
        }
    }

    /// Consume raw content until `</name` followed by whitespace, `/`, or `>`
    /// (case-insensitive), then consume that end tag. Returns the content.
    fn consume_raw_until_end_tag(&mut self, name: &str) -> String {
        let rest = self.remaining();
        let lower = rest.to_ascii_lowercase();
        let needle = format!("</{name}");
        let mut search_from = 0;
        while let Some(rel) = lower[search_from..].find(&needle) {
            let idx = search_from + rel;
            let after = lower.as_bytes().get(idx + needle.len()).copied();
            if matches!(after, None | Some(b'>') | Some(b'/'))
                || matches!(after, Some(c) if c.is_ascii_whitespace())
            {
                let content = rest[..idx].to_string();
                self.pos += idx;
                // Consume the end tag through `>` (or EOF).
                match self.remaining().find('>') {
                    Some(gt) => self.pos += gt + 1,
                    None => self.pos = self.bytes.len(),
                }
                return content;
            }
            search_from = idx + needle.len();
        }
        self.pos = self.bytes.len();
        rest.to_string()
    }

    fn consume_end_tag(&mut self) {
        debug_assert!(self.starts_with("</"));
        self.pos += 2;
        let name = self.read_tag_name();
        // Skip anything up to `>` (attributes on end tags are ignored).
        match self.remaining().find('>') {
            Some(idx) => self.pos += idx + 1,
            None => {
                self.pos = self.bytes.len();
                return; // EOF inside the end tag: discard it.
            }
        }
        // Close to the nearest matching open element; if none, ignore.
        if let Some(depth) = self.stack.iter().rposition(|open| open.node.tag == name) {
            while self.stack.len() > depth {
                let open = self.stack.pop().expect("stack non-empty");
                self.append_node(open.node);
            }
        }
    }

    fn read_tag_name(&mut self) -> String {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == b'-' || c == b'_' || c == b':' {
                self.pos += 1;
            } else {
                break;
            }
        }
        self.input[start..self.pos].to_ascii_lowercase()
    }

    fn skip_whitespace(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    /// Read one attribute. Returns `None` only when no name could be read
    /// (a stray character, which is then skipped).
    fn read_attribute(&mut self) -> Option<(String, String)> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_whitespace() || c == b'=' || c == b'>' {
                break;
            }
            if c == b'/' {
                // `/` ends a name, but `/=` would be a weird name; stop here.
                break;
            }
            self.pos += 1;
            while self.pos < self.bytes.len() && !self.input.is_char_boundary(self.pos) {
                self.pos += 1;
            }
        }
        if self.pos == start {
            // No progress: skip the offending byte to guarantee termination.
            self.pos += 1;
            while self.pos < self.bytes.len() && !self.input.is_char_boundary(self.pos) {
                self.pos += 1;
            }
            return None;
        }
        let name = self.input[start..self.pos].to_ascii_lowercase();
        self.skip_whitespace();
        if self.peek() != Some(b'=') {
            return Some((name, String::new()));
        }
        self.pos += 1; // consume '='
        self.skip_whitespace();
        let value = match self.peek() {
            Some(q @ (b'"' | b'\'')) => {
                self.pos += 1;
                let vstart = self.pos;
                while let Some(c) = self.peek() {
                    if c == q {
                        break;
                    }
                    self.pos += 1;
                    while self.pos < self.bytes.len() && !self.input.is_char_boundary(self.pos) {
                        self.pos += 1;
                    }
                }
                let raw = &self.input[vstart..self.pos];
                if self.peek() == Some(q) {
                    self.pos += 1;
                }
                decode_entities(raw)
            }
            _ => {
                let vstart = self.pos;
                while let Some(c) = self.peek() {
                    if c.is_ascii_whitespace() || c == b'>' {
                        break;
                    }
                    self.pos += 1;
                    while self.pos < self.bytes.len() && !self.input.is_char_boundary(self.pos) {
                        self.pos += 1;
                    }
                }
                decode_entities(&self.input[vstart..self.pos])
            }
        };
        Some((name, value))
    }
}

fn normalize_newlines(s: &str) -> String {
    if s.contains('\r') {
        s.replace("\r\n", "\n").replace('\r', "\n")
    } else {
        s.to_string()
    }
}

/// Decode the handful of entities that matter for text inspection. Unknown
/// or malformed references pass through literally.
pub fn decode_entities(s: &str) -> String {
    if !s.contains('&') {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        rest = &rest[amp..];
        let semi = match rest[1..].find(';') {
            // Entity names are short; a distant `;` means this `&` is literal.
            Some(i) if i <= 10 => i + 1,
            _ => {
                out.push('&');
                rest = &rest[1..];
                continue;
            }
        };
        let body = &rest[1..semi];
        let decoded: Option<String> = match body {
            "amp" => Some("&".into()),
            "lt" => Some("<".into()),
            "gt" => Some(">".into()),
            "quot" => Some("\"".into()),
            "apos" => Some("'".into()),
            "nbsp" => Some("\u{a0}".into()),
            _ => {
                if let Some(num) = body.strip_prefix('#') {
                    let parsed = if let Some(hex) =
                        num.strip_prefix('x').or_else(|| num.strip_prefix('X'))
                    {
                        u32::from_str_radix(hex, 16).ok()
                    } else {
                        num.parse::<u32>().ok()
                    };
                    parsed.and_then(char::from_u32).map(|c| c.to_string())
                } else {
                    None
                }
            }
        };
        match decoded {
            Some(d) => {
                out.push_str(&d);
                rest = &rest[semi + 1..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}
