/// Extracts the quoted strings of the first bracketed list in `reply`.
///
/// Accepts single or double quotes with backslash escapes. Anything that is
/// not a well-formed list of strings yields an empty vector; this never fails.
pub fn parse_subquery_list(reply: &str) -> Vec<String> {
    try_parse(reply).unwrap_or_default()
}

fn try_parse(reply: &str) -> Option<Vec<String>> {
    let start = reply.find('[')?;
    let mut chars = reply[start + 1..].chars();
    let mut items = Vec::new();
    let mut expect_item = true;
    loop {
        let c = chars.next()?;
        match c {
            ']' => break,
            c if c.is_whitespace() => {}
            ',' if !expect_item => expect_item = true,
            '"' | '\'' if expect_item => {
                items.push(read_quoted(&mut chars, c)?);
                expect_item = false;
            }
            _ => return None,
        }
    }
    Some(
        items
            .into_iter()
            .map(|s| s.trim().to_owned())
            .filter(|s| !s.is_empty())
            .collect(),
    )
}

fn read_quoted(chars: &mut std::str::Chars<'_>, quote: char) -> Option<String> {
    let mut out = String::new();
    loop {
        match chars.next()? {
            '\\' => match chars.next()? {
                'n' => out.push('\n'),
                't' => out.push('\t'),
                other => out.push(other),
            },
            c if c == quote => return Some(out),
            c => out.push(c),
        }
    }
}
