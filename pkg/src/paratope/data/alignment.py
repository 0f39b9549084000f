"""Global sequence alignment for the pairwise identity filter.

Needleman-Wunsch with match = 1, mismatch = 0 and a linear gap penalty.
Identity is matches / alignment length of the optimal alignment.  Ties in
score are broken canonically (more matches, then shorter alignment), so
the result is deterministic and symmetric in its arguments.
"""

from __future__ import annotations

from ..errors import ValidationError


def align_global(a: str, b: str, gap_penalty: float = 1.0) -> tuple[float, int, int]:
    """Best (score, matches, alignment_length) under the scoring above.

    Cells hold (score, matches, -length) compared lexicographically, which
    pins down a single canonical optimum among equal-score alignments.
    """
    n, m = len(a), len(b)
    if n == 0 or m == 0:
        raise ValidationError("alignment requires non-empty sequences")
    gp = float(gap_penalty)
    # dp[j] = (score, matches, -length) of the best alignment of a[:i], b[:j]
    dp = [(-gp * j, 0, -j) for j in range(m + 1)]
    for i in range(1, n + 1):
        prev_diag = dp[0]
        dp[0] = (-gp * i, 0, -i)
        ai = a[i - 1]
        for j in range(1, m + 1):
            match = 1 if ai == b[j - 1] else 0
            sd, md, ld = prev_diag
            diag = (sd + match, md + match, ld - 1)
            su, mu, lu = dp[j]        # gap in b (consume a[i-1])
            up = (su - gp, mu, lu - 1)
            sl, ml, ll = dp[j - 1]    # gap in a (consume b[j-1])
            left = (sl - gp, ml, ll - 1)
            prev_diag = dp[j]
            dp[j] = max(diag, up, left)
    score, matches, neg_len = dp[m]
    return score, matches, -neg_len


def seq_identity(a: str, b: str, gap_penalty: float = 1.0) -> float:
    """Fraction of identical positions in the optimal global alignment."""
    _, matches, length = align_global(a, b, gap_penalty)
    return matches / length
