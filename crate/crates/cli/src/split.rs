//! Splits script text into `;`-terminated statements.

/// Finds statement boundaries, skipping `;` inside string literals, quoted
/// identifiers and `--` comments.
#[derive(Debug, Default)]
pub struct Splitter {
    buf: String,
}

impl Splitter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends `text` and returns every statement it completes.
    pub fn push(&mut self, text: &str) -> Vec<String> {
        self.buf.push_str(text);
        let mut out = Vec::new();
        while let Some(end) = terminator(&self.buf) {
            let stmt: String = self.buf[..end].to_string();
            self.buf.drain(..=end);
            if !is_blank(&stmt) {
                out.push(stmt.trim().to_string());
            }
        }
        out
    }

    /// Whatever is left without a terminator.
    pub fn finish(&mut self) -> Option<String> {
        let rest = std::mem::take(&mut self.buf);
        (!is_blank(&rest)).then(|| rest.trim().to_string())
    }

    pub fn is_empty(&self) -> bool {
        is_blank(&self.buf)
    }
}

fn terminator(text: &str) -> Option<usize> {
    let bytes = text.as_bytes();
    let mut i = 0;
    let mut quote: Option<u8> = None;
    while i < bytes.len() {
        let b = bytes[i];
        match quote {
            Some(q) if b == q => {
                // doubled quote is an escaped quote
                if bytes.get(i + 1) == Some(&q) {
                    i += 1;
                } else {
                    quote = None;
                }
            }
            Some(_) => {}
            None => match b {
                b'\'' | b'"' => quote = Some(b),
                b'-' if bytes.get(i + 1) == Some(&b'-') => {
                    while i < bytes.len() && bytes[i] != b'\n' {
                        i += 1;
                    }
                    continue;
                }
                b';' => return Some(i),
                _ => {}
            },
        }
        i += 1;
    }
    None
}

/// True when `text` holds only whitespace and comments.
fn is_blank(text: &str) -> bool {
    text.lines().all(|l| {
        let l = l.trim();
        l.is_empty() || l.starts_with("--")
    })
}
