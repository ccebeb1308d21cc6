//! PWA v1 text format.
//!
//! ```text
//! pwa 1
//! domain 0 1
//! nodes 3
//! 0 - 0
//! 1/2 1 1
//! 1 0 -
//! ```

use super::{Node, PwaMap};
use crate::error::{Error, Result};
use crate::rational::{format_rational, format_rational_decimal, parse_rational, Rational};

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn fields(line: &str, lineno: usize) -> Result<Vec<&str>> {
    let parts: Vec<&str> = line.split(' ').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(perr(lineno, "fields must be separated by single spaces"));
    }
    Ok(parts)
}

fn number(tok: &str, lineno: usize) -> Result<Rational> {
    parse_rational(tok).ok_or_else(|| perr(lineno, format!("bad number '{tok}'")))
}

fn side(tok: &str, lineno: usize) -> Result<Option<Rational>> {
    if tok == "-" {
        Ok(None)
    } else {
        number(tok, lineno).map(Some)
    }
}

pub fn parse_pwa(text: &str) -> Result<PwaMap> {
    let mut lines = text
        .split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .enumerate()
        .map(|(i, l)| (i + 1, l));

    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| perr(0, format!("unexpected end of input, expected {what}")))
    };

    let (ln, header) = next("header")?;
    if header != "pwa 1" {
        return Err(perr(ln, "expected 'pwa 1'"));
    }

    let (ln, dom) = next("domain")?;
    let f = fields(dom, ln)?;
    if f.len() != 3 || f[0] != "domain" {
        return Err(perr(ln, "expected 'domain <a> <b>'"));
    }
    let a = number(f[1], ln)?;
    let b = number(f[2], ln)?;
    if a >= b {
        return Err(perr(ln, "empty domain"));
    }

    let (ln, cnt) = next("node count")?;
    let f = fields(cnt, ln)?;
    if f.len() != 2 || f[0] != "nodes" {
        return Err(perr(ln, "expected 'nodes <k>'"));
    }
    let k: usize = f[1]
        .parse()
        .map_err(|_| perr(ln, format!("bad node count '{}'", f[1])))?;
    if k < 2 {
        return Err(Error::TooFewNodes(k));
    }

    let mut nodes = Vec::with_capacity(k);
    for _ in 0..k {
        let (ln, line) = next("node line")?;
        let f = fields(line, ln)?;
        if f.len() != 3 {
            return Err(perr(ln, "expected '<x> <y_left|-> <y_right|->'"));
        }
        nodes.push(Node::new(number(f[0], ln)?, side(f[1], ln)?, side(f[2], ln)?));
    }
    for (ln, rest) in lines {
        if !rest.trim().is_empty() {
            return Err(perr(ln, "trailing content after the last node"));
        }
    }
    if nodes[0].x != a || nodes[k - 1].x != b {
        return Err(perr(3, "first and last node must sit at the domain endpoints"));
    }
    PwaMap::new(nodes)
}

fn render(f: &PwaMap, num: impl Fn(&Rational) -> String) -> String {
    let mut out = String::new();
    out.push_str("pwa 1\n");
    out.push_str(&format!("domain {} {}\n", num(f.lo()), num(f.hi())));
    out.push_str(&format!("nodes {}\n", f.nodes().len()));
    let side = |v: &Option<Rational>| v.as_ref().map_or("-".to_string(), &num);
    for n in f.nodes() {
        out.push_str(&format!(
            "{} {} {}\n",
            num(&n.x),
            side(&n.y_left),
            side(&n.y_right)
        ));
    }
    out
}

/// Exact serialization with lowest-terms rationals.
pub fn serialize_pwa(f: &PwaMap) -> String {
    render(f, format_rational)
}

/// Serialization with decimal literals at `sig` significant digits. Not exact
/// unless every value has a short decimal expansion.
pub fn serialize_pwa_decimal(f: &PwaMap, sig: usize) -> String {
    render(f, |r| format_rational_decimal(r, sig))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::pwmap::Side;
    use crate::rational::{int, ratio};

    const TENT: &str = "pwa 1\ndomain 0 1\nnodes 3\n0 - 0\n1/2 1 1\n1 0 -\n";

    #[test]
    fn parses_tent() {
        let f = parse_pwa(TENT).unwrap();
        assert_eq!(f, fixtures::tent());
        assert_eq!(f.eval(&ratio(1, 4), Side::Right).unwrap(), ratio(1, 2));
    }

    #[test]
    fn parses_doubling_jump() {
        let f = parse_pwa("pwa 1\ndomain 0 1\nnodes 3\n0 - 0\n1/2 1 0\n1 1 -\n").unwrap();
        assert_eq!(f.jump_points(), vec![ratio(1, 2)]);
    }

    #[test]
    fn duplicated_node_is_non_increasing() {
        let err = parse_pwa("pwa 1\ndomain 0 1\nnodes 4\n0 - 0\n1/2 1 1\n1/2 1 1\n1 0 -\n")
            .unwrap_err();
        assert_eq!(err, Error::NonIncreasing { index: 2 });
        assert!(err.to_string().contains("non-increasing x"));
    }

    #[test]
    fn rejects_malformed_documents() {
        let bad = [
            "",
            "pwa 2\ndomain 0 1\nnodes 2\n0 - 0\n1 1 -\n",
            "pwa 1\ndomain 0  1\nnodes 2\n0 - 0\n1 1 -\n",
            "pwa 1\ndomain 0 1\nnodes 2\n0 - 0\n",
            "pwa 1\ndomain 0 1\nnodes 2\n0 - 0\n1 x -\n",
            "pwa 1\ndomain 0 1\nnodes 2\n0 - 0\n1 1 -\nextra\n",
            "pwa 1\ndomain 0 2\nnodes 2\n0 - 0\n1 1 -\n",
        ];
        for doc in bad {
            assert!(matches!(parse_pwa(doc), Err(Error::Parse { .. })), "{doc:?}");
        }
        assert_eq!(
            parse_pwa("pwa 1\ndomain 0 1\nnodes 1\n0 - -\n"),
            Err(Error::TooFewNodes(1))
        );
        assert!(matches!(
            parse_pwa("pwa 1\ndomain 0 1\nnodes 2\n0 - 2\n1 1 -\n"),
            Err(Error::OutOfDomain { .. })
        ));
    }

    #[test]
    fn round_trip_is_exact() {
        assert_eq!(serialize_pwa(&parse_pwa(TENT).unwrap()), TENT);
        let f = PwaMap::continuous(vec![
            (int(-1), ratio(2, 6)),
            (ratio(1, 3), int(-1)),
            (int(2), int(2)),
        ])
        .unwrap();
        assert_eq!(parse_pwa(&serialize_pwa(&f)).unwrap(), f);
    }

    #[test]
    fn decimal_serialization_parses_back() {
        let g = fixtures::tent();
        let text = serialize_pwa_decimal(&g, 15);
        assert!(text.contains("0.5 1 1"));
        assert_eq!(parse_pwa(&text).unwrap(), g);
    }
}
