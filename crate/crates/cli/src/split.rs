//! Subsystem grouping strings: `A:BC`, `AB:C`, `2x2x2`.

use anyhow::{bail, Result};

/// Parses `2x3x2` into `[2, 3, 2]`.
pub fn parse_dims(s: &str) -> Result<Vec<usize>> {
    let dims: Vec<usize> = s
        .split(['x', 'X'])
        .map(|p| p.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| anyhow::anyhow!("invalid dims `{s}`, expected e.g. 2x2x2"))?;
    if dims.is_empty() || dims.contains(&0) {
        bail!("invalid dims `{s}`: sizes must be positive");
    }
    Ok(dims)
}

/// Groups of subsystem indices, one per `:`-separated part.
///
/// Letters stand for subsystems in alphabetical order, so with three subsystems
/// `A:BC` is `[[0], [1, 2]]` and `B:A` is `[[1], [0]]`. Every subsystem must appear
/// exactly once.
pub fn parse_split(s: &str, num_subsystems: usize) -> Result<Vec<Vec<usize>>> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    if parts.len() < 2 || parts.iter().any(|p| p.is_empty()) {
        bail!("invalid split `{s}`, expected groups like A:B or A:BC");
    }
    let mut letters: Vec<char> = parts.iter().flat_map(|p| p.chars()).collect();
    if letters.iter().any(|c| !c.is_ascii_uppercase()) {
        bail!("invalid split `{s}`: use capital letters for subsystems");
    }
    letters.sort_unstable();
    let total = letters.len();
    letters.dedup();
    if letters.len() != total {
        bail!("invalid split `{s}`: a subsystem appears twice");
    }
    if total != num_subsystems {
        bail!("split `{s}` names {total} subsystems but the state has {num_subsystems}");
    }
    Ok(parts
        .iter()
        .map(|p| p.chars().map(|c| letters.binary_search(&c).unwrap()).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims() {
        assert_eq!(parse_dims("2x2x2").unwrap(), vec![2, 2, 2]);
        assert_eq!(parse_dims("4").unwrap(), vec![4]);
        assert!(parse_dims("2x0").is_err());
        assert!(parse_dims("2by2").is_err());
    }

    #[test]
    fn splits() {
        assert_eq!(parse_split("A:B", 2).unwrap(), vec![vec![0], vec![1]]);
        assert_eq!(parse_split("A:BC", 3).unwrap(), vec![vec![0], vec![1, 2]]);
        assert_eq!(parse_split("B:A", 2).unwrap(), vec![vec![1], vec![0]]);
        assert_eq!(parse_split("A:B:C", 3).unwrap(), vec![vec![0], vec![1], vec![2]]);
        assert!(parse_split("A:A", 2).is_err());
        assert!(parse_split("A:B", 3).is_err());
        assert!(parse_split("AB", 2).is_err());
        assert!(parse_split("a:b", 2).is_err());
    }
}
