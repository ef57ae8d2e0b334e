//! Lexical splitting of scheme-less URLs into host / path / query / fragment.
//!
//! This is deliberately not a general URL parser: inputs here are already
//! normalized (lowercased, scheme stripped) and we only need the pieces the
//! rule engine and the normalizer look at.

/// Borrowed pieces of a scheme-less URL.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct UrlParts<'a> {
    pub host: &'a str,
    /// Path including the leading `/`, empty when absent.
    pub path: &'a str,
    pub query: Option<&'a str>,
    pub fragment: Option<&'a str>,
}

/// Splits a scheme-less URL. Returns `None` when no host can be isolated.
pub(crate) fn split(url: &str) -> Option<UrlParts<'_>> {
    let (main, fragment) = match url.find('#') {
        Some(i) => (&url[..i], Some(&url[i + 1..])),
        None => (url, None),
    };
    let (host_path, query) = match main.find('?') {
        Some(i) => (&main[..i], Some(&main[i + 1..])),
        None => (main, None),
    };
    let (host, path) = match host_path.find('/') {
        Some(i) => (&host_path[..i], &host_path[i..]),
        None => (host_path, ""),
    };
    if host.is_empty() {
        return None;
    }
    Some(UrlParts { host, path, query, fragment })
}

/// Strips a trailing `:port` (digits only) from a hostname. Bracketed IPv6
/// literals keep their brackets.
pub(crate) fn host_without_port(host: &str) -> &str {
    if host.starts_with('[') {
        // `[::1]:8080` -> `[::1]`
        if let Some(end) = host.find(']') {
            return &host[..=end];
        }
        return host;
    }
    match host.rfind(':') {
        Some(i) if host[i + 1..].chars().all(|c| c.is_ascii_digit()) && i + 1 < host.len() => {
            &host[..i]
        }
        _ => host,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_host_path_query_fragment() {
        let p = split("a.b.c/p/q?x=1&y=2#frag").unwrap();
        assert_eq!(p.host, "a.b.c");
        assert_eq!(p.path, "/p/q");
        assert_eq!(p.query, Some("x=1&y=2"));
        assert_eq!(p.fragment, Some("frag"));
    }

    #[test]
    fn host_only() {
        let p = split("example.com").unwrap();
        assert_eq!(p.host, "example.com");
        assert_eq!(p.path, "");
        assert_eq!(p.query, None);
    }

    #[test]
    fn query_without_path() {
        let p = split("example.com?q=1").unwrap();
        assert_eq!(p.host, "example.com");
        assert_eq!(p.path, "");
        assert_eq!(p.query, Some("q=1"));
    }

    #[test]
    fn empty_host_is_none() {
        assert!(split("/path/only").is_none());
        assert!(split("?q=1").is_none());
        assert!(split("").is_none());
    }

    #[test]
    fn port_stripping() {
        assert_eq!(host_without_port("example.com:8080"), "example.com");
        assert_eq!(host_without_port("example.com"), "example.com");
        assert_eq!(host_without_port("[::1]:443"), "[::1]");
        assert_eq!(host_without_port("example.com:"), "example.com:");
    }
}
