use crate::value::{Key, Value};

fn escape(out: &mut String, s: &str) {
    for c in s.chars() {
        if c == ':' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
}

/// Text of a primary-key value inside a key. Strings are quoted so that
/// `1` and `'1'` stay distinct.
fn pk_text(out: &mut String, pk: &Value) {
    match pk {
        Value::Str(s) => {
            out.push('\'');
            escape(out, s);
        }
        other => escape(out, &other.to_string()),
    }
}

/// `t:<table>:r:<pk>:c:<column>`
pub fn encode_cell_key(table: &str, pk: &Value, column: &str) -> Key {
    let mut s = String::from("t:");
    escape(&mut s, table);
    s.push_str(":r:");
    pk_text(&mut s, pk);
    s.push_str(":c:");
    escape(&mut s, column);
    Key::new(s).expect("non-empty")
}

/// `t:<table>:has:<pk>`, true while the row is present.
pub fn encode_has_key(table: &str, pk: &Value) -> Key {
    let mut s = String::from("t:");
    escape(&mut s, table);
    s.push_str(":has:");
    pk_text(&mut s, pk);
    Key::new(s).expect("non-empty")
}

/// Splits an encoded key back into its unescaped components.
pub fn decode_components(key: &Key) -> Vec<String> {
    let mut parts = vec![String::new()];
    let mut chars = key.as_str().chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => {
                if let Some(n) = chars.next() {
                    parts.last_mut().expect("non-empty").push(n);
                }
            }
            ':' => parts.push(String::new()),
            c => parts.last_mut().expect("non-empty").push(c),
        }
    }
    parts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_keys() {
        assert_eq!(encode_cell_key("A", &1.into(), "Name").as_str(), "t:A:r:1:c:Name");
        assert_eq!(encode_has_key("A", &2.into()).as_str(), "t:A:has:2");
    }

    #[test]
    fn escaped_components_decode() {
        let k = encode_has_key("x:y", &Value::str("a\\b"));
        assert_eq!(k.as_str(), "t:x\\:y:has:'a\\\\b");
        assert_eq!(decode_components(&k), vec!["t", "x:y", "has", "'a\\b"]);
        let k = encode_cell_key("t", &Value::str("p:q"), "c:d");
        assert_eq!(decode_components(&k), vec!["t", "t", "r", "'p:q", "c", "c:d"]);
    }

    #[test]
    fn types_do_not_collide() {
        assert_ne!(encode_has_key("A", &1.into()), encode_has_key("A", &Value::str("1")));
        assert_ne!(encode_has_key("A", &true.into()), encode_has_key("A", &Value::str("true")));
    }
}
