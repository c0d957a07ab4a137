//! Character n-gram extraction and hashing.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// All character n-grams of `<word>` with lengths `min_n..=max_n`, ordered
/// by start position and then by length. Repeated n-grams are kept.
pub fn char_ngrams(word: &str, min_n: usize, max_n: usize) -> Vec<String> {
    let chars: Vec<char> = std::iter::once('<')
        .chain(word.chars())
        .chain(std::iter::once('>'))
        .collect();
    let mut out = Vec::new();
    for start in 0..chars.len() {
        for n in min_n..=max_n {
            if start + n > chars.len() {
                break;
            }
            out.push(chars[start..start + n].iter().collect());
        }
    }
    out
}

/// Bucket indices of a word's n-grams.
pub fn subword_buckets(word: &str, min_n: usize, max_n: usize, bucket_count: usize) -> Vec<usize> {
    char_ngrams(word, min_n, max_n)
        .iter()
        .map(|g| (fnv1a64(g.as_bytes()) % bucket_count as u64) as usize)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn single_char_word_has_boundary_ngrams() {
        assert_eq!(char_ngrams("x", 2, 4), ["<x", "<x>", "x>"]);
    }

    #[test]
    fn ngrams_count_chars_not_bytes() {
        let g = char_ngrams("शां", 2, 2);
        assert_eq!(g.len(), 4);
        assert_eq!(g[0], "<श");
    }

    #[test]
    fn too_short_for_min_n() {
        assert!(char_ngrams("ab", 5, 6).is_empty());
        assert_eq!(char_ngrams("ab", 2, 4).len(), 3 + 2 + 1);
    }
}
