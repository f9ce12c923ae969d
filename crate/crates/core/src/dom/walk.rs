//! Depth-first extraction of visible-candidate text nodes with the style
//! context the visibility rules need. Whitespace-only text nodes are
//! skipped: they render nothing and carry no instructions.

use super::style::{compute_style, ComputedStyle, PositionMode};
use super::{DomNode, DomTree};

/// Rough on-screen footprint of a text node. In-flow text participates in
/// normal layout (and is therefore never counted as moved off-screen by
/// coordinates alone); explicitly positioned text gets a box estimate from
/// its offsets and an average-glyph-width heuristic.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum RectEstimate {
    InFlow,
    Positioned {
        left: f64,
        top: f64,
        width: f64,
        height: f64,
    },
}

/// Average glyph advance as a fraction of font size; a deliberately crude
/// but monotone width model.
const GLYPH_WIDTH_RATIO: f64 = 0.5;

/// Accessibility-relevant context gathered from the element chain above a
/// text node, used to recognize legitimate screen-reader-only content.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AccessibilityMarkers {
    /// An ancestor (or the parent itself) declares `aria-label`.
    pub has_aria_label: bool,
    /// An ancestor (or the parent itself) declares `role`.
    pub has_role: bool,
    /// Union of class names on the ancestor chain, document order.
    pub ancestor_classes: Vec<String>,
}

/// One text node plus everything the visibility predicate consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct TextNodeView {
    pub text: String,
    /// Computed style of the parent element.
    pub style: ComputedStyle,
    pub rect: RectEstimate,
    /// Path of the text node itself.
    pub node_path: String,
    pub markers: AccessibilityMarkers,
}

/// Walk the tree and return every non-whitespace text node in document
/// order, each with its parent element's computed style.
pub fn walk_text_nodes(tree: &DomTree) -> Vec<TextNodeView> {
    let mut out = Vec::new();
    let root_style = ComputedStyle::initial();
    let mut markers = MarkerStack::default();
    for child in &tree.root.children {
        visit(child, &root_style, tree, &mut markers, &mut out);
    }
    out
}

#[derive(Default)]
struct MarkerStack {
    aria_label_depth: usize,
    role_depth: usize,
    classes: Vec<String>,
}

impl MarkerStack {
    fn snapshot(&self) -> AccessibilityMarkers {
        AccessibilityMarkers {
            has_aria_label: self.aria_label_depth > 0,
            has_role: self.role_depth > 0,
            ancestor_classes: self.classes.clone(),
        }
    }
}

fn visit(
    node: &DomNode,
    parent_style: &ComputedStyle,
    tree: &DomTree,
    markers: &mut MarkerStack,
    out: &mut Vec<TextNodeView>,
) {
    if node.is_text() {
        let text = node.text.as_deref().unwrap_or("");
        if text.trim().is_empty() {
            return;
        }
        out.push(TextNodeView {
            text: text.to_string(),
            style: parent_style.clone(),
            rect: estimate_rect(parent_style, text),
            node_path: node.node_path.clone(),
            markers: markers.snapshot(),
        });
        return;
    }

    let style = compute_style(
        node,
        parent_style,
        &tree.stylesheet,
        &ComputedStyle::initial(),
    );

    let has_aria_label = node.attr("aria-label").is_some();
    let has_role = node.attr("role").is_some();
    let class_count = {
        let classes = node.classes();
        let n = classes.len();
        markers
            .classes
            .extend(classes.into_iter().map(str::to_string));
        n
    };
    if has_aria_label {
        markers.aria_label_depth += 1;
    }
    if has_role {
        markers.role_depth += 1;
    }

    for child in &node.children {
        visit(child, &style, tree, markers, out);
    }

    if has_aria_label {
        markers.aria_label_depth -= 1;
    }
    if has_role {
        markers.role_depth -= 1;
    }
    markers
        .classes
        .truncate(markers.classes.len() - class_count);
}

fn estimate_rect(style: &ComputedStyle, text: &str) -> RectEstimate {
    match style.position_mode {
        PositionMode::Static => RectEstimate::InFlow,
        PositionMode::Absolute | PositionMode::Fixed => {
            let chars = text.chars().count() as f64;
            RectEstimate::Positioned {
                left: style.left_px,
                top: style.top_px,
                width: chars * style.font_size_px * GLYPH_WIDTH_RATIO,
                height: style.font_size_px,
            }
        }
    }
}
