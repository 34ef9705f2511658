/// Removes a code fence wrapped around a whole response.
///
/// The trimmed text counts as fenced when its first line is three
/// backticks, optionally followed by one language word, its last line is
/// three backticks, and no line in between starts a fence. Only then is the
/// inner content returned (trimmed). Anything else comes back trimmed but
/// otherwise unchanged. Since the output never contains a fence line, a
/// second pass is a no-op.
pub fn strip_artifacts(response: &str) -> String {
    let text = response.trim();
    match fenced_body(text) {
        Some(inner) => inner.trim().to_string(),
        None => text.to_string(),
    }
}

fn is_fence_line(line: &str) -> bool {
    line.trim_start().starts_with("```")
}

fn fenced_body(text: &str) -> Option<&str> {
    let rest = text.strip_prefix("```")?;
    let newline = rest.find('\n')?;
    let hint = rest[..newline].trim();
    let hint_ok = hint.is_empty()
        || hint
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '+' | '.'));
    if !hint_ok {
        return None;
    }
    let body = &rest[newline + 1..];
    let close = body.rfind('\n').map_or(0, |i| i + 1);
    if body[close..].trim_end() != "```" {
        return None;
    }
    let inner = &body[..close];
    if inner.lines().any(is_fence_line) {
        return None;
    }
    Some(inner)
}
