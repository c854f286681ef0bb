use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TagGroup {
    Layout,
    Text,
    InputOutput,
    Other,
}

impl TagGroup {
    pub const ALL: [TagGroup; 4] = [TagGroup::Layout, TagGroup::Text, TagGroup::InputOutput, TagGroup::Other];

    pub fn as_str(self) -> &'static str {
        match self {
            TagGroup::Layout => "layout",
            TagGroup::Text => "text",
            TagGroup::InputOutput => "io",
            TagGroup::Other => "other",
        }
    }
}

const LAYOUT: &[&str] = &[
    "html", "body", "div", "ul", "ol", "li", "dl", "table", "thead", "tbody", "tfoot", "tr", "td",
    "th", "section", "article", "header", "footer", "nav", "aside", "main", "form", "fieldset",
    "figure", "details", "center", "frameset", "colgroup", "col", "menu", "dialog", "hgroup",
];

const TEXT: &[&str] = &[
    "p", "h1", "h2", "h3", "h4", "h5", "h6", "span", "a", "b", "i", "u", "s", "em", "strong",
    "small", "big", "label", "blockquote", "pre", "code", "dt", "dd", "abbr", "cite", "q", "sub",
    "sup", "mark", "time", "caption", "figcaption", "legend", "summary", "font", "br", "address",
    "del", "ins", "kbd", "samp", "var", "tt",
];

const INPUT_OUTPUT: &[&str] = &[
    "input", "textarea", "select", "option", "optgroup", "button", "video", "audio", "img",
    "picture", "canvas", "svg", "source", "track", "progress", "meter", "output", "datalist",
    "map", "area",
];

/// Content group of an element. Unknown tags (and `iframe`, which has its
/// own counters) fall into [`TagGroup::Other`].
pub fn tag_group(tag: &str) -> TagGroup {
    let tag = tag.to_ascii_lowercase();
    let t = tag.as_str();
    if LAYOUT.contains(&t) {
        TagGroup::Layout
    } else if TEXT.contains(&t) {
        TagGroup::Text
    } else if INPUT_OUTPUT.contains(&t) {
        TagGroup::InputOutput
    } else {
        TagGroup::Other
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_examples() {
        assert_eq!(tag_group("div"), TagGroup::Layout);
        assert_eq!(tag_group("ul"), TagGroup::Layout);
        assert_eq!(tag_group("p"), TagGroup::Text);
        assert_eq!(tag_group("h1"), TagGroup::Text);
        assert_eq!(tag_group("input"), TagGroup::InputOutput);
        assert_eq!(tag_group("video"), TagGroup::InputOutput);
        assert_eq!(tag_group("img"), TagGroup::InputOutput);
        assert_eq!(tag_group("madeuptag"), TagGroup::Other);
        assert_eq!(tag_group("iframe"), TagGroup::Other);
        assert_eq!(tag_group("DIV"), TagGroup::Layout);
    }

    #[test]
    fn tables_are_disjoint() {
        for t in LAYOUT {
            assert!(!TEXT.contains(t) && !INPUT_OUTPUT.contains(t), "{t}");
        }
        for t in TEXT {
            assert!(!INPUT_OUTPUT.contains(t), "{t}");
        }
    }
}
