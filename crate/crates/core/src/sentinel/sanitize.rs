//! Payload sanitization: reduce a parsed document to the text an agent
//! actually needs, with lightweight structural markers for headings and
//! links. Element names, class/id/style plumbing, comments, and stylesheet
//! contents are all dropped, which is where the bulk of the byte savings
//! comes from.

use crate::dom::{DomNode, DomTree};

const HEADINGS: &[&str] = &["h1", "h2", "h3", "h4", "h5", "h6"];
const SKIP: &[&str] = &["script", "style", "template"];

/// Serialize the document to sanitized text. Every text node's content is
/// preserved (collapsed); only markup is shed.
pub fn sanitize(tree: &DomTree) -> String {
    let mut out = String::new();
    for child in &tree.root.children {
        visit(child, &mut out);
    }
    // Tidy trailing separators.
    let trimmed = out.trim();
    trimmed.to_string()
}

fn visit(node: &DomNode, out: &mut String) {
    if let Some(text) = &node.text {
        push_text(out, text);
        return;
    }
    if SKIP.contains(&node.tag.as_str()) {
        return;
    }
    if HEADINGS.contains(&node.tag.as_str()) {
        let inner = collect_text(node);
        if !inner.is_empty() {
            if !out.is_empty() && !out.ends_with('\n') {
                out.push('\n');
            }
            out.push_str("# ");
            out.push_str(&inner);
            out.push('\n');
        }
        return;
    }
    if node.tag == "a" {
        if let Some(href) = node.attr("href") {
            let inner = collect_text(node);
            if !inner.is_empty() {
                if !out.is_empty() && !out.ends_with(char::is_whitespace) {
                    out.push(' ');
                }
                out.push('[');
                out.push_str(&inner);
                out.push_str("](");
                out.push_str(href);
                out.push(')');
                return;
            }
        }
    }
    for child in &node.children {
        visit(child, out);
    }
}

fn push_text(out: &mut String, text: &str) {
    let collapsed = text.split_whitespace().collect::<Vec<_>>().join(" ");
    if collapsed.is_empty() {
        return;
    }
    if !out.is_empty() && !out.ends_with(char::is_whitespace) {
        out.push(' ');
    }
    out.push_str(&collapsed);
}

fn collect_text(node: &DomNode) -> String {
    let mut out = String::new();
    for child in &node.children {
        collect_inner(child, &mut out);
    }
    out.trim().to_string()
}

fn collect_inner(node: &DomNode, out: &mut String) {
    if let Some(text) = &node.text {
        push_text(out, text);
        return;
    }
    if SKIP.contains(&node.tag.as_str()) {
        return;
    }
    for child in &node.children {
        collect_inner(child, out);
    }
}
