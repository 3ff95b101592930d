//! Class tag tokens: `@name#` opens a class span, `#name@` closes it.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TagKind {
    Enter,
    Exit,
}

pub fn enter_tag(class: &str) -> String {
    format!("@{class}#")
}

pub fn exit_tag(class: &str) -> String {
    format!("#{class}@")
}

/// Recognizes a class tag and returns its class name and direction.
pub fn parse_tag(token: &str) -> Option<(&str, TagKind)> {
    if token.len() < 3 {
        return None;
    }
    if let Some(name) = token.strip_prefix('@').and_then(|t| t.strip_suffix('#')) {
        return valid_name(name).then_some((name, TagKind::Enter));
    }
    if let Some(name) = token.strip_prefix('#').and_then(|t| t.strip_suffix('@')) {
        return valid_name(name).then_some((name, TagKind::Exit));
    }
    None
}

fn valid_name(name: &str) -> bool {
    !name.is_empty() && !name.contains(['@', '#']) && !name.chars().any(char::is_whitespace)
}

pub fn is_tag(token: &str) -> bool {
    parse_tag(token).is_some()
}

pub fn strip_tags<S: AsRef<str>>(tokens: &[S]) -> Vec<String> {
    tokens
        .iter()
        .map(AsRef::as_ref)
        .filter(|t| !is_tag(t))
        .map(str::to_string)
        .collect()
}
