use panacea_core::corpus::Claim;

pub const DEFAULT_SUGGESTIONS: usize = 10;

/// Claims matching `query` case-insensitively. Prefix matches come before
/// substring matches; within each group shorter texts first, then
/// lexicographic.
pub fn autocomplete<'a>(claims: &'a [Claim], query: &str, limit: usize) -> Vec<&'a Claim> {
    let q = query.trim().to_lowercase();
    if q.is_empty() {
        return Vec::new();
    }
    let mut hits: Vec<(u8, &Claim)> = claims
        .iter()
        .filter_map(|c| {
            let text = c.text.to_lowercase();
            if text.starts_with(&q) {
                Some((0, c))
            } else if text.contains(&q) {
                Some((1, c))
            } else {
                None
            }
        })
        .collect();
    hits.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.text.len().cmp(&b.1.text.len())).then_with(|| a.1.text.cmp(&b.1.text)));
    hits.into_iter().take(limit).map(|(_, c)| c).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use panacea_core::corpus::ClaimLabel;

    fn claim(id: &str, text: &str) -> Claim {
        Claim { claim_id: id.into(), text: text.into(), label: ClaimLabel::False, source: "s".into(), subtype: "t".into() }
    }

    #[test]
    fn ranking_bands() {
        let claims = vec![
            claim("1", "taking vitamin c cures coronavirus"),
            claim("2", "vitamin c cures coronavirus"),
            claim("3", "Vitamin D protects"),
            claim("4", "masks work"),
        ];
        let ids: Vec<&str> = autocomplete(&claims, "vita", 10).iter().map(|c| c.claim_id.as_str()).collect();
        assert_eq!(ids, ["3", "2", "1"]);
        assert!(autocomplete(&claims, "", 10).is_empty());
        assert!(autocomplete(&claims, "zzz", 10).is_empty());
        assert_eq!(autocomplete(&claims, "vita", 1).len(), 1);
    }
}
