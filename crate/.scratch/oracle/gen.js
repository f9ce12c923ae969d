// Generates frozen expectations for the lenient-HTML-parser test by running
// each fixture through parse5 (spec-grade recovery behavior) and serializing
// the resulting tree to a comparable s-expression.
//
// Serialization rules (mirrored by the Rust side):
//  - elements: (tag [attr=value]... child...)  with attrs sorted by name
//  - text nodes: "whitespace-collapsed text" (skipped when blank)
//  - comments, doctypes, and script/style/template subtrees are skipped
//  - the document is flattened to head-children ++ body-children
const parse5 = require('parse5');
const fs = require('fs');

const SKIP_ELEMENTS = new Set(['script', 'style', 'template']);

function serText(value) {
  const collapsed = value.replace(/\s+/g, ' ').trim();
  if (!collapsed) return null;
  return '"' + collapsed.replace(/\\/g, '\\\\').replace(/"/g, '\\"') + '"';
}

// Serialize a child list. Consecutive text nodes merge across comment nodes
// (comments leave no node behind in the implementation under test, so text
// they split in parse5's tree is one node there). Skipped elements still
// break a text run: they exist as (empty) nodes on both sides.
function serChildren(childNodes) {
  const tokens = [];
  let pending = '';
  const flush = () => {
    const t = serText(pending);
    pending = '';
    if (t !== null) tokens.push(t);
  };
  for (const node of childNodes || []) {
    if (node.nodeName === '#text') {
      pending += node.value;
    } else if (node.nodeName === '#comment' || node.nodeName === '#documentType') {
      continue;
    } else if (node.tagName) {
      flush();
      const s = serElement(node);
      if (s !== null) tokens.push(s);
    }
  }
  flush();
  return tokens;
}

function serElement(node) {
  const tag = node.tagName.toLowerCase();
  if (SKIP_ELEMENTS.has(tag)) return null;
  const attrs = (node.attrs || [])
    .slice()
    .sort((a, b) => (a.name < b.name ? -1 : a.name > b.name ? 1 : 0))
    .map((a) => '[' + a.name + '=' + a.value + ']')
    .join('');
  const kids = serChildren(node.childNodes)
    .map((s) => ' ' + s)
    .join('');
  return '(' + tag + (attrs ? ' ' + attrs : '') + kids + ')';
}

function serDocument(html) {
  const doc = parse5.parse(html);
  const htmlEl = doc.childNodes.find((n) => n.tagName === 'html');
  const parts = [];
  for (const section of htmlEl.childNodes) {
    if (section.tagName === 'head' || section.tagName === 'body') {
      parts.push(...serChildren(section.childNodes));
    }
  }
  return parts.join(' ');
}

const fixtures = [
  ['simple_nesting', '<div id="a"><p>Hello</p></div>'],
  ['sibling_paragraphs', '<p>one</p><p>two</p>'],
  ['p_autoclose', '<p>one<p>two'],
  ['p_closed_by_div', '<p>lead<div>boxed</div>tail'],
  ['list_autoclose', '<ul><li>a<li>b<li>c</ul>'],
  ['nested_lists', '<ul><li>one<ul><li>nested</ul><li>two</ul>'],
  ['definition_list', '<dl><dt>term<dd>def<dt>term2<dd>def2</dl>'],
  ['table_cells', '<table><tbody><tr><td>a<td>b<tr><td>c</tbody></table>'],
  ['headings_autoclose', '<h1>big<h2>smaller</h2>'],
  ['options', '<select><option>red<option>green</select>'],
  ['anchor_restart', '<a href="/one">first<a href="/two">second</a>'],
  ['void_elements', '<div>line<br>break<img src="pic.png" alt="a pic"><hr></div>'],
  ['self_closing_slash', '<div><span/>text</span></div>'],
  ['stray_end_tags', 'alpha</b>beta</div>gamma'],
  ['unclosed_at_eof', '<div><section><p>deep'],
  ['mismatched_closers', '<div><span>x</div></span>'],
  ['comment_removal', 'before<!-- secret instructions --><em>after</em>'],
  ['doctype_and_comment', '<!DOCTYPE html><!-- header --><p>content</p>'],
  ['unterminated_comment', 'visible<!-- swallowed to the end <p>never</p>'],
  ['bogus_pi', '<?php echo "x"; ?><p>after</p>'],
  ['bogus_end_tag', 'a</3>b'],
  ['lone_angle', '3 < 4 and <5> ok'],
  ['entity_text', '<p>fish &amp; chips &lt;tag&gt; &quot;quoted&quot; A&#66;C &#x44;EF</p>'],
  ['entity_attrs', '<a href="/s?a=1&amp;b=2" title="T&#233;a">x</a>'],
  ['bare_ampersand', '<p>salt & pepper &; &unknownentity; end</p>'],
  ['script_discarded', '<script>var html = "<p>fake</p>";</script><p>real</p>'],
  ['script_case_insensitive_close', '<script>x</SCRIPT><p>y</p>'],
  ['style_extraction', '<style>.hide { opacity: 0 }</style><div class="hide">text</div>'],
  ['title_rcdata', '<title>A &amp; B <not a tag></title><p>body text</p>'],
  ['textarea_rcdata', '<form><textarea>raw <b>not bold</b> &amp; done</textarea></form>'],
  ['case_folding', '<DIV CLASS="Outer"><SPAN id="S">Text</SPAN></DIV>'],
  ['attr_variants', '<input type=checkbox checked value="">'],
  ['duplicate_attrs', '<div id="first" id="second" class="c">x</div>'],
  ['unquoted_attrs', '<div data-path=a/b data-n=42>t</div>'],
  ['single_quoted', "<div title='single \"double\" inside'>x</div>"],
  ['whitespace_in_tag', '<div   class = "x"  >y</div >'],
  ['eof_in_tag', 'ok<div class="x'],
  ['deep_nesting', '<div><div><div><div><div>deep</div></div></div></div></div>'],
  ['formatting_inline', '<p>a <em>b <strong>c</strong> d</em> e</p>'],
  ['crlf_text', '<p>line1\r\nline2\rline3</p>'],
  ['nbsp_entity', '<p>a&nbsp;b</p>'],
  ['mixed_content', 'Text at top level <b>bold</b> more text'],
  ['empty_elements', '<div></div><span></span><p></p>'],
  ['attr_no_value_mixed', '<details open><summary>s</summary>content</details>'],
  ['heading_with_inline', '<h2 class="hdr">Title <small>sub</small></h2>'],
  ['blockquote_pre', '<blockquote><p>quoted</blockquote><pre>  spaced  text  </pre>'],
  ['section_nav', '<nav><ul><li><a href="/home">Home</a><li><a href="/about">About</a></ul></nav>'],
  ['unicode_text', '<p>héllo wörld — em&#8212;dash 🎉</p>'],
  ['many_attrs_sorted', '<article data-z="3" data-a="1" id="m" class="c1 c2" role="main">x</article>'],
  ['svg_like_unknown', '<widget custom="1"><inner>t</inner></widget>'],
  ['stray_lt_before_tag', 'a < <b>c</b>'],
];

const out = fixtures.map(([name, html]) => ({ name, html, expected: serDocument(html) }));
fs.mkdirSync('/root/crate/crates/core/tests/fixtures', { recursive: true });
fs.writeFileSync(
  '/root/crate/crates/core/tests/fixtures/parser_reference.json',
  JSON.stringify(out, null, 2) + '\n'
);
console.log('wrote ' + out.length + ' fixtures');
