//! Document model: a lenient HTML parser, a small CSS cascade, and a
//! text-node walker that estimates where text lands on screen.
//!
//! Parsing is total: any UTF-8 input yields a tree. Unknown tags are kept as
//! generic elements, unclosed tags are closed at the parent boundary, and
//! garbled regions degrade to text nodes so downstream scanning still sees
//! them.

mod parser;
mod style;
mod walk;

pub use parser::parse_document;
pub use style::{
    compute_style, ComputedStyle, Declaration, Display, PositionMode, Rule, Selector, StyleSheet,
};
pub use walk::{walk_text_nodes, AccessibilityMarkers, RectEstimate, TextNodeView};

/// A single DOM node. Element nodes carry children; text nodes carry text.
/// The two are mutually exclusive (text nodes are always leaves).
#[derive(Debug, Clone, PartialEq)]
pub struct DomNode {
    /// Lowercased element name, or `"#text"` for text nodes.
    pub tag: String,
    /// Attributes in source order; on duplicates the first occurrence wins.
    pub attributes: Vec<(String, String)>,
    /// Parsed declarations from the `style` attribute, if any.
    pub inline_style: Vec<Declaration>,
    pub children: Vec<DomNode>,
    pub text: Option<String>,
    /// Slash-separated child-index path from the root, e.g. `"0/2/1"`.
    /// The root itself has the empty path.
    pub node_path: String,
}

impl DomNode {
    pub fn new_element(tag: String, attributes: Vec<(String, String)>) -> Self {
        let inline_style = attributes
            .iter()
            .find(|(name, _)| name == "style")
            .map(|(_, value)| style::parse_declarations(value))
            .unwrap_or_default();
        DomNode {
            tag,
            attributes,
            inline_style,
            children: Vec::new(),
            text: None,
            node_path: String::new(),
        }
    }

    pub fn new_text(text: String) -> Self {
        DomNode {
            tag: "#text".to_string(),
            attributes: Vec::new(),
            inline_style: Vec::new(),
            children: Vec::new(),
            text: Some(text),
            node_path: String::new(),
        }
    }

    pub fn is_text(&self) -> bool {
        self.text.is_some()
    }

    /// First value for `name`, if the attribute is present.
    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attributes
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_str())
    }

    /// Whitespace-separated entries of the `class` attribute.
    pub fn classes(&self) -> Vec<&str> {
        self.attr("class")
            .map(|c| c.split_whitespace().collect())
            .unwrap_or_default()
    }

    /// Count of text leaves containing at least one non-whitespace char.
    pub fn count_nonblank_text_leaves(&self) -> usize {
        match &self.text {
            Some(t) if !t.trim().is_empty() => 1,
            Some(_) => 0,
            None => self
                .children
                .iter()
                .map(DomNode::count_nonblank_text_leaves)
                .sum(),
        }
    }
}

/// A parsed document: the node tree plus the stylesheet assembled from its
/// `<style>` blocks, and the byte length of the raw source (used for payload
/// accounting).
#[derive(Debug, Clone, PartialEq)]
pub struct DomTree {
    pub root: DomNode,
    pub stylesheet: StyleSheet,
    pub source_len: usize,
}

/// The visible region text positions are tested against.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Viewport {
    #[serde(rename = "width")]
    pub width_px: f64,
    #[serde(rename = "height")]
    pub height_px: f64,
}

impl Viewport {
    pub fn new(width_px: f64, height_px: f64) -> Self {
        assert!(
            width_px > 0.0 && height_px > 0.0,
            "viewport dimensions must be strictly positive"
        );
        Viewport {
            width_px,
            height_px,
        }
    }
}

impl Default for Viewport {
    fn default() -> Self {
        Viewport {
            width_px: 1280.0,
            height_px: 800.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_and_children_are_exclusive() {
        let el = DomNode::new_element("div".into(), vec![]);
        assert!(el.text.is_none());
        let tx = DomNode::new_text("hi".into());
        assert!(tx.children.is_empty());
        assert!(tx.is_text());
    }

    #[test]
    fn classes_split_on_whitespace() {
        let el = DomNode::new_element("div".into(), vec![("class".into(), "a  b\tc".into())]);
        assert_eq!(el.classes(), vec!["a", "b", "c"]);
    }

    #[test]
    #[should_panic]
    fn viewport_rejects_zero_width() {
        Viewport::new(0.0, 100.0);
    }
}
