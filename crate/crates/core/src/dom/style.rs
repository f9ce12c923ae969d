//! A deliberately small CSS model: exactly the properties the visibility
//! rules need (`opacity`, `font-size`, `position`, `left`/`top`, `z-index`,
//! `display`), simple selectors (tag, `.class`, `#id`, `*`), and a cascade
//! with classic specificity ordering. Everything else is ignored, never
//! rejected: a style is advisory input, not a trust boundary.

use super::DomNode;

/// One `name: value` pair, lowercased name, trimmed raw value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Declaration {
    pub name: String,
    pub value: String,
}

/// Simple selectors only; compound or descendant selectors are skipped at
/// parse time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selector {
    Universal,
    Tag(String),
    Class(String),
    Id(String),
}

impl Selector {
    /// Classic cascade specificity: id > class > tag > universal.
    pub fn specificity(&self) -> u32 {
        match self {
            Selector::Id(_) => 3,
            Selector::Class(_) => 2,
            Selector::Tag(_) => 1,
            Selector::Universal => 0,
        }
    }

    pub fn matches(&self, node: &DomNode) -> bool {
        match self {
            Selector::Universal => true,
            Selector::Tag(t) => node.tag == *t,
            Selector::Class(c) => node.classes().iter().any(|k| k == c),
            Selector::Id(i) => node.attr("id") == Some(i.as_str()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub selector: Selector,
    pub declarations: Vec<Declaration>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StyleSheet {
    pub rules: Vec<Rule>,
}

/// Positioning scheme after resolution. `relative` collapses to `Static`
/// because the model has no offsets to apply to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum PositionMode {
    Static,
    Absolute,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Display {
    Block,
    Inline,
    None,
}

/// Style of one element after the cascade and inheritance have been applied.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ComputedStyle {
    /// Product of own opacity and every ancestor's opacity, in `[0, 1]`.
    pub effective_opacity: f64,
    /// Inherited unless declared.
    pub font_size_px: f64,
    pub position_mode: PositionMode,
    pub left_px: f64,
    pub top_px: f64,
    pub z_index: i32,
    /// `None` here is sticky: a hidden parent hides all descendants.
    pub display: Display,
    /// True when this element or an ancestor carries `aria-hidden="true"`.
    pub aria_hidden_context: bool,
}

impl ComputedStyle {
    /// Root/default style: fully opaque, 16px text, in-flow block.
    pub fn initial() -> Self {
        ComputedStyle {
            effective_opacity: 1.0,
            font_size_px: 16.0,
            position_mode: PositionMode::Static,
            left_px: 0.0,
            top_px: 0.0,
            z_index: 0,
            display: Display::Block,
            aria_hidden_context: false,
        }
    }
}

impl Default for ComputedStyle {
    fn default() -> Self {
        ComputedStyle::initial()
    }
}

/// Resolve one element's style given its parent's computed style. Cascade
/// order is defaults, then sheet rules (by specificity, ties broken by rule
/// order), then the inline `style` attribute. Declarations with values that
/// fail to parse are ignored individually.
pub fn compute_style(
    node: &DomNode,
    parent: &ComputedStyle,
    sheet: &StyleSheet,
    defaults: &ComputedStyle,
) -> ComputedStyle {
    // Gather matching declarations in ascending cascade priority.
    let mut matched: Vec<(u32, usize, &Vec<Declaration>)> = sheet
        .rules
        .iter()
        .enumerate()
        .filter(|(_, rule)| rule.selector.matches(node))
        .map(|(idx, rule)| (rule.selector.specificity(), idx, &rule.declarations))
        .collect();
    matched.sort_by_key(|(specificity, idx, _)| (*specificity, *idx));

    let mut declared: Vec<&Declaration> = Vec::new();
    for (_, _, decls) in &matched {
        declared.extend(decls.iter());
    }
    declared.extend(node.inline_style.iter());

    // For each property, the last parseable declaration wins; an
    // unparseable one is skipped so earlier cascade entries still apply.
    let own_opacity = resolve(&declared, "opacity", parse_opacity);
    let font_size = resolve(&declared, "font-size", parse_px);
    let position = resolve(&declared, "position", parse_position);
    let left = resolve(&declared, "left", parse_signed_px);
    let top = resolve(&declared, "top", parse_signed_px);
    let z_index = resolve(&declared, "z-index", parse_z_index);
    let display = resolve(&declared, "display", parse_display);

    let aria_hidden = node.attr("aria-hidden").map(str::trim) == Some("true");

    ComputedStyle {
        effective_opacity: parent.effective_opacity * own_opacity.unwrap_or(1.0),
        font_size_px: font_size.unwrap_or(parent.font_size_px),
        position_mode: position.unwrap_or(defaults.position_mode),
        left_px: left.unwrap_or(defaults.left_px),
        top_px: top.unwrap_or(defaults.top_px),
        z_index: z_index.unwrap_or(defaults.z_index),
        display: if parent.display == Display::None {
            Display::None
        } else {
            display.unwrap_or(defaults.display)
        },
        aria_hidden_context: parent.aria_hidden_context || aria_hidden,
    }
}

fn resolve<T>(
    declared: &[&Declaration],
    property: &str,
    parse: fn(&str) -> Option<T>,
) -> Option<T> {
    for decl in declared.iter().rev() {
        if decl.name == property {
            match parse(&decl.value) {
                Some(v) => return Some(v),
                None => {
                    log::debug!(
                        "ignoring unparseable declaration {}: {}",
                        decl.name,
                        decl.value
                    );
                }
            }
        }
    }
    None
}

fn parse_opacity(value: &str) -> Option<f64> {
    let v: f64 = value.trim().parse().ok()?;
    if v.is_finite() {
        Some(v.clamp(0.0, 1.0))
    } else {
        None
    }
}

/// Non-negative length: `12px`, `12`, `0.4px`.
fn parse_px(value: &str) -> Option<f64> {
    let v = parse_signed_px(value)?;
    if v >= 0.0 {
        Some(v)
    } else {
        None
    }
}

fn parse_signed_px(value: &str) -> Option<f64> {
    let trimmed = value.trim();
    let numeric = trimmed.strip_suffix("px").unwrap_or(trimmed).trim();
    let v: f64 = numeric.parse().ok()?;
    if v.is_finite() {
        Some(v)
    } else {
        None
    }
}

fn parse_position(value: &str) -> Option<PositionMode> {
    match value.trim() {
        "static" | "relative" => Some(PositionMode::Static),
        "absolute" => Some(PositionMode::Absolute),
        "fixed" => Some(PositionMode::Fixed),
        _ => None,
    }
}

fn parse_z_index(value: &str) -> Option<i32> {
    value.trim().parse().ok()
}

fn parse_display(value: &str) -> Option<Display> {
    match value.trim() {
        "none" => Some(Display::None),
        "inline" | "inline-block" | "inline-flex" => Some(Display::Inline),
        "block" | "flex" | "grid" | "table" | "table-row" | "table-cell" | "list-item"
        | "flow-root" => Some(Display::Block),
        _ => None,
    }
}

/// Parse the body of a `style` attribute into declarations.
pub fn parse_declarations(css: &str) -> Vec<Declaration> {
    let no_comments = strip_css_comments(css);
    no_comments
        .split(';')
        .filter_map(|piece| {
            let (name, value) = piece.split_once(':')?;
            let name = name.trim().to_ascii_lowercase();
            let value = value.trim().to_string();
            if name.is_empty() || value.is_empty() {
                None
            } else {
                Some(Declaration { name, value })
            }
        })
        .collect()
}

/// Parse the concatenated contents of `<style>` blocks into rules. Rules
/// whose selectors use unsupported syntax are skipped whole; rules with a
/// comma list expand to one rule per simple selector, preserving order.
pub fn parse_stylesheet_rules(css: &str) -> Vec<Rule> {
    let css = strip_css_comments(css);
    let mut rules = Vec::new();
    let mut rest = css.as_str();
    while let Some(open) = rest.find('{') {
        let selector_text = rest[..open].trim().to_string();
        let after = &rest[open + 1..];
        let close = match after.find('}') {
            Some(i) => i,
            None => {
                // Unterminated block: take what's there and stop.
                let declarations = parse_declarations(after);
                push_rules(&mut rules, &selector_text, declarations);
                return rules;
            }
        };
        let declarations = parse_declarations(&after[..close]);
        push_rules(&mut rules, &selector_text, declarations);
        rest = &after[close + 1..];
    }
    rules
}

fn push_rules(rules: &mut Vec<Rule>, selector_text: &str, declarations: Vec<Declaration>) {
    for part in selector_text.split(',') {
        match parse_selector(part.trim()) {
            Some(selector) => rules.push(Rule {
                selector,
                declarations: declarations.clone(),
            }),
            None => log::debug!("skipping unsupported selector: {part:?}"),
        }
    }
}

fn parse_selector(s: &str) -> Option<Selector> {
    if s == "*" {
        return Some(Selector::Universal);
    }
    let valid_ident = |t: &str| {
        !t.is_empty()
            && t.chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
    };
    if let Some(cls) = s.strip_prefix('.') {
        return valid_ident(cls).then(|| Selector::Class(cls.to_string()));
    }
    if let Some(id) = s.strip_prefix('#') {
        return valid_ident(id).then(|| Selector::Id(id.to_string()));
    }
    valid_ident(s).then(|| Selector::Tag(s.to_ascii_lowercase()))
}

fn strip_css_comments(css: &str) -> String {
    let mut out = String::with_capacity(css.len());
    let mut rest = css;
    while let Some(start) = rest.find("/*") {
        out.push_str(&rest[..start]);
        match rest[start + 2..].find("*/") {
            Some(end) => rest = &rest[start + 2 + end + 2..],
            None => return out,
        }
    }
    out.push_str(rest);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn el(attrs: Vec<(&str, &str)>) -> DomNode {
        DomNode::new_element(
            "div".into(),
            attrs
                .into_iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        )
    }

    fn sheet(css: &str) -> StyleSheet {
        StyleSheet {
            rules: parse_stylesheet_rules(css),
        }
    }

    #[test]
    fn inline_overrides_sheet() {
        let node = el(vec![("class", "x"), ("style", "opacity: 0.5")]);
        let s = sheet(".x { opacity: 0.9 }");
        let style = compute_style(
            &node,
            &ComputedStyle::initial(),
            &s,
            &ComputedStyle::initial(),
        );
        assert!((style.effective_opacity - 0.5).abs() < 1e-9);
    }

    #[test]
    fn id_beats_class_beats_tag() {
        let node = el(vec![("class", "c"), ("id", "i")]);
        let s = sheet("div { font-size: 10px } .c { font-size: 20px } #i { font-size: 30px }");
        let style = compute_style(
            &node,
            &ComputedStyle::initial(),
            &s,
            &ComputedStyle::initial(),
        );
        assert_eq!(style.font_size_px, 30.0);
    }

    #[test]
    fn later_rule_wins_at_equal_specificity() {
        let node = el(vec![("class", "a b")]);
        let s = sheet(".a { z-index: 1 } .b { z-index: 2 }");
        let style = compute_style(
            &node,
            &ComputedStyle::initial(),
            &s,
            &ComputedStyle::initial(),
        );
        assert_eq!(style.z_index, 2);
    }

    #[test]
    fn opacity_multiplies_down_the_tree() {
        let node = el(vec![("style", "opacity: 0.5")]);
        let mut parent = ComputedStyle::initial();
        parent.effective_opacity = 0.4;
        let style = compute_style(&node, &parent, &sheet(""), &ComputedStyle::initial());
        assert!((style.effective_opacity - 0.2).abs() < 1e-9);
    }

    #[test]
    fn font_size_inherits() {
        let node = el(vec![]);
        let mut parent = ComputedStyle::initial();
        parent.font_size_px = 11.0;
        let style = compute_style(&node, &parent, &sheet(""), &ComputedStyle::initial());
        assert_eq!(style.font_size_px, 11.0);
    }

    #[test]
    fn display_none_propagates_to_children() {
        let node = el(vec![("style", "display: block")]);
        let mut parent = ComputedStyle::initial();
        parent.display = Display::None;
        let style = compute_style(&node, &parent, &sheet(""), &ComputedStyle::initial());
        assert_eq!(style.display, Display::None);
    }

    #[test]
    fn unparseable_value_falls_back_to_earlier_cascade_entry() {
        let node = el(vec![("class", "x"), ("style", "opacity: oops")]);
        let s = sheet(".x { opacity: 0 }");
        let style = compute_style(
            &node,
            &ComputedStyle::initial(),
            &s,
            &ComputedStyle::initial(),
        );
        assert_eq!(style.effective_opacity, 0.0);
    }

    #[test]
    fn relative_position_collapses_to_static() {
        let node = el(vec![("style", "position: relative; left: -9999px")]);
        let style = compute_style(
            &node,
            &ComputedStyle::initial(),
            &sheet(""),
            &ComputedStyle::initial(),
        );
        assert_eq!(style.position_mode, PositionMode::Static);
    }

    #[test]
    fn unsupported_selectors_are_skipped() {
        let s = sheet("div p { opacity: 0 } .x > .y { opacity: 0 } .ok { opacity: 0 }");
        assert_eq!(s.rules.len(), 1);
        assert_eq!(s.rules[0].selector, Selector::Class("ok".into()));
    }

    #[test]
    fn comma_selector_lists_expand() {
        let s = sheet("h1, .warn, #main { font-size: 2px }");
        assert_eq!(s.rules.len(), 3);
    }

    #[test]
    fn css_comments_are_stripped() {
        let s = sheet("/* hi */ .x { /* inner */ opacity: 0.25 }");
        assert_eq!(s.rules.len(), 1);
        assert_eq!(s.rules[0].declarations[0].value, "0.25");
    }

    #[test]
    fn opacity_clamps_to_unit_range() {
        assert_eq!(parse_opacity("1.7"), Some(1.0));
        assert_eq!(parse_opacity("-3"), Some(0.0));
        assert_eq!(parse_opacity("0.099"), Some(0.099));
        assert_eq!(parse_opacity("nan"), None);
    }

    #[test]
    fn px_suffix_is_optional() {
        assert_eq!(parse_signed_px("-40px"), Some(-40.0));
        assert_eq!(parse_signed_px("12"), Some(12.0));
        assert_eq!(parse_px("-1px"), None);
    }

    #[test]
    fn aria_hidden_context_is_sticky() {
        let node = el(vec![]);
        let mut parent = ComputedStyle::initial();
        parent.aria_hidden_context = true;
        let style = compute_style(&node, &parent, &sheet(""), &ComputedStyle::initial());
        assert!(style.aria_hidden_context);

        let marked = el(vec![("aria-hidden", "true")]);
        let style = compute_style(
            &marked,
            &ComputedStyle::initial(),
            &sheet(""),
            &ComputedStyle::initial(),
        );
        assert!(style.aria_hidden_context);
    }
}
