/// Column index of the queen in each placed row, top row first.
pub type Prefix = Vec<u32>;

fn full_mask(board_n: u32) -> u32 {
    if board_n >= 32 {
        u32::MAX
    } else {
        (1u32 << board_n) - 1
    }
}

/// Every non-attacking placement of the first `prefix_len` rows.
pub fn enumerate_prefixes(board_n: u32, prefix_len: u32) -> Vec<Prefix> {
    assert!(board_n <= 31, "boards wider than 31 columns are not supported");
    assert!(prefix_len <= board_n, "prefix longer than the board");
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(prefix_len as usize);
    extend(board_n, prefix_len, 0, 0, 0, &mut current, &mut out);
    out
}

fn extend(n: u32, depth: u32, cols: u32, ld: u32, rd: u32, current: &mut Prefix, out: &mut Vec<Prefix>) {
    if current.len() as u32 == depth {
        out.push(current.clone());
        return;
    }
    let mut free = full_mask(n) & !(cols | ld | rd);
    while free != 0 {
        let bit = free & free.wrapping_neg();
        free ^= bit;
        current.push(bit.trailing_zeros());
        extend(n, depth, cols | bit, ((ld | bit) << 1) & full_mask(n), (rd | bit) >> 1, current, out);
        current.pop();
    }
}

/// Completions of `prefix` to a full `board_n` solution. An attacking or
/// out-of-range prefix has none.
pub fn count_solutions_from_prefix(board_n: u32, prefix: &[u32]) -> u64 {
    if board_n > 31 || prefix.len() as u32 > board_n {
        return 0;
    }
    let (mut cols, mut ld, mut rd) = (0u32, 0u32, 0u32);
    for &col in prefix {
        if col >= board_n {
            return 0;
        }
        let bit = 1u32 << col;
        if (cols | ld | rd) & bit != 0 {
            return 0;
        }
        cols |= bit;
        ld = ((ld | bit) << 1) & full_mask(board_n);
        rd = (rd | bit) >> 1;
    }
    solve(full_mask(board_n), cols, ld, rd)
}

fn solve(all: u32, cols: u32, ld: u32, rd: u32) -> u64 {
    if cols == all {
        return 1;
    }
    let mut free = all & !(cols | ld | rd);
    let mut count = 0;
    while free != 0 {
        let bit = free & free.wrapping_neg();
        free ^= bit;
        count += solve(all, cols | bit, ((ld | bit) << 1) & all, (rd | bit) >> 1);
    }
    count
}
